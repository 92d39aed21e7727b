//! The standard suites: `theta`, `rmatrix`, `weights`, `shuffle`, `gt`.

use num_complex::Complex64;

use super::{sweep, CaseSpec, Expectation, Suite, VerifyConfig};
use crate::combinatorics::{
    dynamical_shift_closed, dynamical_shift_sum, enumerate_partitions, enumerate_words, leq, sigma0_relabel, Lambda,
    PartitionIndex,
};
use crate::elliptic_core::{EllipticParams, RhoMinusVariant};
use crate::error::Result;
use crate::gt_representation::{
    braid_residual, check_center, check_x_matrix, ef_commutators, exchange_relations, gauss_extract, gt_basis,
    gt_vectors, half_current_oracle, highest_weight, k_commutation_residual, l_operator, partial_fraction_residual,
    partial_fraction_residue_residual, reassembly_residual, residue_by_contour, s_tilde_square_residual, verify_rll,
    verify_rll_with, worked_example, DescentPath, Expansion, DEFAULT_PIVOT_COND,
};
use crate::linalg::{self, CMatrix};
use crate::rmatrix::{b_bar, c, check_dybe_with, check_unitarity, flip, rbar, DynamicalState, Sign};
use crate::sampling::Sampler;
use crate::shuffle::{check_closure, star_product, star_product_at, wheel_spot_check, SymmetricFunctionValue};
use crate::weight_functions::{
    check_quasiperiodicity, check_transition, diagonal_closed_form, fixed_point_expand, orthogonality_grid,
    specialization_table, stab_restrict, triangularity_defect, weight_w, OrthogonalityShift, TVariables, WeightVariant,
};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// Every `λ` with all parts positive, `rank` colours and `n ≤ max_sites` sites.
fn shapes(rank: usize, max_sites: usize) -> Vec<Lambda> {
    (rank..=max_sites.max(rank))
        .flat_map(|n| Lambda::all_with_size(rank, n))
        .filter(|l| l.parts().iter().all(|&p| p > 0) && l.n() <= max_sites)
        .collect()
}

fn focus_shapes(cfg: &VerifyConfig, rank: usize) -> Vec<Lambda> {
    let mut out = shapes(rank, cfg.max_sites);
    if let Some(l) = &cfg.lambda {
        if l.rank() == rank && !out.contains(l) {
            out.push(l.clone());
        }
    }
    out
}

fn pick<'a, T>(s: &mut Sampler, items: &'a [T]) -> &'a T {
    &items[s.index(items.len())]
}

/// Level variables for `λ` drawn from the sampler.
fn sample_t(s: &mut Sampler, lambda: &Lambda, z: Vec<Complex64>) -> TVariables {
    let levels = (1..lambda.rank()).map(|l| s.spectral(lambda.partial(l))).collect();
    TVariables::new(levels, z)
}

pub struct ThetaSuite;

impl Suite for ThetaSuite {
    fn name(&self) -> &'static str {
        "theta"
    }

    fn cases(&self, cfg: &VerifyConfig) -> Vec<CaseSpec> {
        let tol = Expectation::Below(1e-10);
        vec![
            CaseSpec::new("bracket shift by r", "theta quasi-periodicity, real period", tol, |cfg| {
                let p = cfg.params(2)?;
                sweep(cfg, "theta/r", cfg.samples, |s| {
                    let u = s.complex(2.0, 0.5);
                    Ok(linalg::scalar_residual(p.bracket(u + p.r()), -p.bracket(u)))
                })
            }),
            CaseSpec::new("bracket shift by r tau", "theta quasi-periodicity, modular period", tol, |cfg| {
                let p = cfg.params(2)?;
                let i = Complex64::new(0.0, 1.0);
                let pi = std::f64::consts::PI;
                sweep(cfg, "theta/rtau", cfg.samples, |s| {
                    let u = s.complex(2.0, 0.5);
                    let multiplier = -(-i * pi * p.tau()).exp() * (-2.0 * pi * i * u / p.r()).exp();
                    Ok(linalg::scalar_residual(p.bracket(u + p.r() * p.tau()), multiplier * p.bracket(u)))
                })
            }),
            CaseSpec::new("bracket is odd", "oddness of the theta bracket", tol, |cfg| {
                let p = cfg.params(2)?;
                sweep(cfg, "theta/odd", cfg.samples, |s| {
                    let u = s.complex(2.0, 0.5);
                    Ok(linalg::scalar_residual(p.bracket(-u), -p.bracket(u)))
                })
            }),
            CaseSpec::new("truncation stability", "truncated infinite products", tol, |cfg| {
                let p = cfg.params(2)?;
                let doubled = p.clone().with_truncation(2 * p.truncation())?;
                sweep(cfg, "theta/trunc", cfg.samples, |s| {
                    let u = s.complex(2.0, 0.5);
                    Ok(linalg::scalar_residual(doubled.bracket(u), p.bracket(u)))
                })
            }),
            CaseSpec::new("derivative at zero", "derivative of the bracket at the origin", tol, |cfg| {
                let p = cfg.params(2)?;
                let contour = residue_by_contour(|u| Ok(p.bracket(u) / (u * u)), Complex64::new(0.0, 0.0), 0.1, 64)?;
                Ok((linalg::scalar_residual(p.bracket_deriv_zero(), contour), 1))
            }),
            CaseSpec::new("varrho at level 0", "level-0 constant", Expectation::Below(cfg.tol), |cfg| {
                let p = cfg.params(2)?;
                Ok((linalg::scalar_residual(p.varrho()?, ONE), 1))
            }),
        ]
    }
}

pub struct RmatrixSuite;

fn dybe_case(rank: usize) -> CaseSpec {
    CaseSpec::new(format!("DYBE, N={rank}"), "dynamical Yang-Baxter equation", Expectation::Below(1e-8), move |cfg| {
        let p = cfg.params(rank)?;
        sweep(cfg, &format!("rmatrix/dybe/{rank}"), cfg.samples, |s| {
            let u = s.spectral(3);
            let state = s.state(rank);
            check_dybe_with([u[0], u[1], u[2]], &state, &|x, st| cfg.rbar(x, st, &p))
        })
    })
}

impl Suite for RmatrixSuite {
    fn name(&self) -> &'static str {
        "rmatrix"
    }

    fn cases(&self, cfg: &VerifyConfig) -> Vec<CaseSpec> {
        let mut out = Vec::new();
        for &rank in &cfg.ranks {
            out.push(dybe_case(rank));
            out.push(CaseSpec::new(
                format!("unitarity of R-bar, N={rank}"),
                "unitarity",
                Expectation::Below(cfg.tol),
                move |cfg| {
                    let p = cfg.params(rank)?;
                    sweep(cfg, &format!("rmatrix/unitarity/{rank}"), cfg.samples, |s| {
                        Ok(check_unitarity(s.complex(0.6, 0.3), &s.state(rank), &p)?.rbar)
                    })
                },
            ));
            out.push(CaseSpec::new(
                format!("unitarity of R+, N={rank}"),
                "unitarity with the rho-plus normalization",
                Expectation::Report,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    sweep(cfg, &format!("rmatrix/unitarity/{rank}"), cfg.samples, |s| {
                        Ok(check_unitarity(s.complex(0.6, 0.3), &s.state(rank), &p)?.plus)
                    })
                },
            ));
            for variant in RhoMinusVariant::ALL {
                out.push(CaseSpec::new(
                    format!("unitarity of R-, {}, N={rank}", variant.name()),
                    "unitarity with the rho-minus normalization",
                    Expectation::Report,
                    move |cfg| {
                        let p = cfg.params(rank)?;
                        sweep(cfg, &format!("rmatrix/unitarity/{rank}"), cfg.samples, |s| {
                            let res = check_unitarity(s.complex(0.6, 0.3), &s.state(rank), &p)?;
                            Ok(res.minus.iter().find(|(v, _)| *v == variant).map(|x| x.1).unwrap_or(f64::INFINITY))
                        })
                    },
                ));
            }
            out.push(CaseSpec::new(
                format!("R-bar at u=0 is the flip, N={rank}"),
                "initial condition of the R-matrix",
                Expectation::Exact,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    sweep(cfg, &format!("rmatrix/flip/{rank}"), cfg.samples, |s| {
                        Ok(linalg::residual(&rbar(Complex64::new(0.0, 0.0), &s.state(rank), &p)?.entries, &flip(rank)))
                    })
                },
            ));
            out.push(CaseSpec::new(
                format!("weight conservation, N={rank}"),
                "ice rule of the face weights",
                Expectation::Exact,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    sweep(cfg, &format!("rmatrix/ice/{rank}"), cfg.samples, |s| {
                        let m = rbar(s.complex(0.6, 0.3), &s.state(rank), &p)?;
                        Ok(if crate::rmatrix::check_ice_rule(&m).is_ok() { 0.0 } else { 1.0 })
                    })
                },
            ));
        }
        out
    }
}

pub struct WeightsSuite;

impl Suite for WeightsSuite {
    fn name(&self) -> &'static str {
        "weights"
    }

    fn cases(&self, cfg: &VerifyConfig) -> Vec<CaseSpec> {
        let tol = Expectation::Below(cfg.tol);
        let mut out = vec![
            CaseSpec::new(
                "dynamical shift, sum vs closed form (N<=3, n<=5)",
                "dynamical shift of the weight-function factors",
                Expectation::Exact,
                |_| {
                    let mut mismatches = 0usize;
                    let mut cases = 0usize;
                    for rank in 2..=3 {
                        for n in 1..=5 {
                            for part in enumerate_words(rank, n)? {
                                for l in 1..rank {
                                    for s in (1..=n).filter(|&s| part.color(s) <= l) {
                                        cases += 1;
                                        if dynamical_shift_sum(&part, s, l)? != dynamical_shift_closed(&part, s, l)? {
                                            mismatches += 1;
                                        }
                                    }
                                }
                            }
                        }
                    }
                    Ok((mismatches as f64, cases))
                },
            ),
            CaseSpec::new(
                "site-reversal relabeling (N<=3, n<=5)",
                "index identity under site reversal",
                Expectation::Exact,
                |_| {
                    let mut failures = 0usize;
                    let mut cases = 0usize;
                    for rank in 1..=3 {
                        for n in 1..=5 {
                            for part in enumerate_words(rank, n)? {
                                cases += 1;
                                let rel = sigma0_relabel(&part);
                                if !(rel.index_maps_hold() && rel.phi_relation_holds()) {
                                    failures += 1;
                                }
                            }
                        }
                    }
                    Ok((failures as f64, cases))
                },
            ),
            CaseSpec::new(
                "stable envelope triangularity and diagonal, N=2",
                "fixed-point restrictions of the stable envelope",
                tol,
                |cfg| {
                    let p = cfg.params(2)?;
                    let shapes = shapes(2, cfg.max_sites.min(3));
                    sweep(cfg, "weights/stab", cfg.heavy_samples(), |s| {
                        let mut worst = 0.0f64;
                        for lambda in &shapes {
                            let z = s.spectral(lambda.n());
                            let state = s.state(2);
                            let rev_neg: Vec<Complex64> = z.iter().rev().map(|u| -u).collect();
                            let parts = enumerate_partitions(lambda)?;
                            for i in &parts {
                                let diag = stab_restrict(i, i, &z, &state, &p)?;
                                let expected = diagonal_closed_form(&reversed(i), &rev_neg, &p);
                                worst = worst.max(linalg::scalar_residual(diag, expected));
                                for j in &parts {
                                    if !leq(&reversed(j), &reversed(i))? {
                                        worst = worst.max(stab_restrict(i, j, &z, &state, &p)?.norm());
                                    }
                                }
                            }
                        }
                        Ok(worst)
                    })
                },
            ),
            CaseSpec::new(
                "fixed-point expansion round trip, N=2, n<=3",
                "stable envelope expansion and its inverse",
                tol,
                |cfg| {
                    let p = cfg.params(2)?;
                    let shapes = shapes(2, cfg.max_sites.min(3));
                    sweep(cfg, "weights/roundtrip", cfg.heavy_samples(), |s| {
                        let mut worst = 0.0f64;
                        for lambda in &shapes {
                            let z = s.spectral(lambda.n());
                            worst = worst.max(fixed_point_expand(lambda, &z, &s.state(2), &p)?.round_trip_residual());
                        }
                        Ok(worst)
                    })
                },
            ),
        ];
        for &rank in &cfg.ranks {
            let shapes = focus_shapes(cfg, rank);
            let s1 = shapes.clone();
            out.push(CaseSpec::new(
                format!("triangularity and diagonal, N={rank}"),
                "triangularity of specialized weight functions",
                tol,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    sweep(cfg, &format!("weights/triangular/{rank}"), cfg.heavy_samples(), |s| {
                        let mut worst = 0.0f64;
                        for lambda in &s1 {
                            let z = s.spectral(lambda.n());
                            let table = specialization_table(lambda, &z, &s.state(rank), &p, WeightVariant::Cal)?;
                            worst = worst.max(triangularity_defect(&table)?);
                            for (k, part) in table.parts.iter().enumerate() {
                                let expected = diagonal_closed_form(part, &z, &p);
                                worst = worst.max(linalg::scalar_residual(table.values[(k, k)], expected));
                            }
                        }
                        Ok(worst)
                    })
                },
            ));
            let s2 = shapes.clone();
            out.push(CaseSpec::new(format!("transition, N={rank}"), "R-matrix transition of weight functions", tol, move |cfg| {
                let p = cfg.params(rank)?;
                sweep(cfg, &format!("weights/transition/{rank}"), cfg.samples, |s| {
                    let lambda = pick(s, &s2).clone();
                    if lambda.n() < 2 {
                        return Ok(0.0);
                    }
                    let parts = enumerate_partitions(&lambda)?;
                    let part = pick(s, &parts).clone();
                    let i = 1 + s.index(lambda.n() - 1);
                    let z = s.spectral(lambda.n());
                    let t = sample_t(s, &lambda, z);
                    check_transition(&part, i, &t, &s.state(rank), &p)
                })
            }));
            let s3 = shapes.clone();
            out.push(CaseSpec::new(format!("orthogonality grid, N={rank}"), "orthogonality of weight functions", tol, move |cfg| {
                let p = cfg.params(rank)?;
                sweep(cfg, &format!("weights/orthogonality/{rank}"), cfg.heavy_samples(), |s| {
                    let lambda = pick(s, &s3).clone();
                    let z = s.spectral(lambda.n());
                    let (parts, grid) = orthogonality_grid(&lambda, &z, &s.state(rank), &p, OrthogonalityShift::Verbatim)?;
                    Ok(linalg::residual(&grid, &linalg::identity(parts.len())))
                })
            }));
            for shift in [OrthogonalityShift::Unshifted, OrthogonalityShift::Opposite] {
                let lambda = if rank == 2 { vec![2, 1] } else { vec![2, 1, 1] };
                out.push(CaseSpec::new(
                    format!("orthogonality grid fails with {shift:?} shift, N={rank}"),
                    "orthogonality of weight functions",
                    Expectation::Above(1e-3),
                    move |cfg| {
                        let p = cfg.params(rank)?;
                        let lambda = Lambda::new(lambda.clone())?;
                        sweep(cfg, &format!("weights/orthogonality-wrong/{rank}"), 1, |s| {
                            let z = s.spectral(lambda.n());
                            let (parts, grid) = orthogonality_grid(&lambda, &z, &s.state(rank), &p, shift)?;
                            Ok(linalg::residual(&grid, &linalg::identity(parts.len())))
                        })
                    },
                ));
            }
            let s4 = shapes;
            out.push(CaseSpec::new(
                format!("quasi-periodicity, N={rank}"),
                "quasi-periodicity of weight functions in the level variables",
                tol,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    sweep(cfg, &format!("weights/quasi/{rank}"), cfg.samples, |s| {
                        let lambda = pick(s, &s4).clone();
                        let parts = enumerate_partitions(&lambda)?;
                        let part = pick(s, &parts).clone();
                        let l = 1 + s.index(rank - 1);
                        let a = 1 + s.index(lambda.partial(l));
                        let z = s.spectral(lambda.n());
                        let t = sample_t(s, &lambda, z);
                        let (first, second) = check_quasiperiodicity(&part, l, a, &t, &s.state(rank), &p)?;
                        Ok(first.max(second))
                    })
                },
            ));
        }
        out
    }
}

fn reversed(part: &PartitionIndex) -> PartitionIndex {
    let mut word = part.word().to_vec();
    word.reverse();
    PartitionIndex::from_word(part.rank(), &word).expect("reversal keeps colours")
}

pub struct ShuffleSuite;

fn single(word: &str, params: &EllipticParams) -> Result<SymmetricFunctionValue> {
    Ok(SymmetricFunctionValue::weight(&PartitionIndex::parse(2, word)?, params))
}

impl Suite for ShuffleSuite {
    fn name(&self) -> &'static str {
        "shuffle"
    }

    fn cases(&self, cfg: &VerifyConfig) -> Vec<CaseSpec> {
        let tol = Expectation::Below(cfg.tol);
        vec![
            CaseSpec::new("unit is two-sided, N=2", "unit of the star product", tol, |cfg| {
                let p = cfg.params(2)?;
                sweep(cfg, "shuffle/unit", cfg.samples, |s| {
                    let word = *pick(s, &["12", "21", "112", "121"]);
                    let part = PartitionIndex::parse(2, word)?;
                    let f = SymmetricFunctionValue::weight(&part, &p);
                    let one = SymmetricFunctionValue::unit(2);
                    let lambda = part.lambda();
                    let t = { let z = s.spectral(lambda.n()); sample_t(s, &lambda, z) };
                    let state = s.state(2);
                    let direct = f.evaluate(&t, &state)?;
                    let left = star_product_at(&one, &f, &t, &state, &p)?;
                    let right = star_product_at(&f, &one, &t, &state, &p)?;
                    Ok(linalg::scalar_residual(direct, left).max(linalg::scalar_residual(direct, right)))
                })
            }),
            CaseSpec::new("associativity, N=2", "associativity of the star product", tol, |cfg| {
                let p = cfg.params(2)?;
                sweep(cfg, "shuffle/assoc", cfg.samples, |s| {
                    let words: Vec<&str> = (0..3).map(|_| *pick(s, &["1", "2"])).collect();
                    let (f, g, h) = (single(words[0], &p)?, single(words[1], &p)?, single(words[2], &p)?);
                    let left = star_product(&star_product(&f, &g, &p)?, &h, &p)?;
                    let right = star_product(&f, &star_product(&g, &h, &p)?, &p)?;
                    let lambda = left.lambda().clone();
                    let t = { let z = s.spectral(3); sample_t(s, &lambda, z) };
                    let state = s.state(2);
                    Ok(linalg::scalar_residual(left.evaluate(&t, &state)?, right.evaluate(&t, &state)?))
                })
            }),
            CaseSpec::new("products of weight functions, N=2", "star product of weight functions", tol, |cfg| {
                let p = cfg.params(2)?;
                sweep(cfg, "shuffle/weights", cfg.samples, |s| {
                    let (a, b) = *pick(s, &[("21", "1"), ("1", "21"), ("2", "1"), ("12", "2")]);
                    let joined = PartitionIndex::parse(2, &format!("{a}{b}"))?;
                    let lambda = joined.lambda();
                    let t = { let z = s.spectral(lambda.n()); sample_t(s, &lambda, z) };
                    let state = s.state(2);
                    let product = star_product_at(&single(a, &p)?, &single(b, &p)?, &t, &state, &p)?;
                    let direct = weight_w(&joined, &t, &state, &p, WeightVariant::Tilde)?.value;
                    Ok(linalg::scalar_residual(product, direct))
                })
            }),
            CaseSpec::new("closure at two evaluation points, N=2, m=n=1", "closure of the star product", tol, |cfg| {
                let p = cfg.params(2)?;
                sweep(cfg, "shuffle/closure", cfg.heavy_samples(), |s| {
                    let z = s.spectral(2);
                    let state = s.state(2);
                    let pools = [s.spectral(2), s.spectral(2)];
                    let mut worst = 0.0f64;
                    for (a, b) in [("1", "1"), ("1", "2"), ("2", "1"), ("2", "2")] {
                        let product = star_product(&single(a, &p)?, &single(b, &p)?, &p)?;
                        let size = product.lambda().partial(1);
                        let checks: Vec<TVariables> =
                            pools.iter().map(|pool| TVariables::new(vec![pool[..size].to_vec()], vec![])).collect();
                        worst = worst.max(check_closure(&product, &z, &checks, &state, &p)?.residual);
                    }
                    Ok(worst)
                })
            }),
            CaseSpec::new("wheel spot checks, N=3", "wheel condition", Expectation::Below(1e-3), |cfg| {
                let p = cfg.params(3)?;
                sweep(cfg, "shuffle/wheel", cfg.heavy_samples(), |s| {
                    let part = PartitionIndex::parse(3, "2131")?;
                    let lambda = part.lambda();
                    let t = { let z = s.spectral(4); sample_t(s, &lambda, z) };
                    let ratios = wheel_spot_check(&part, &t, &s.state(3), &p, 1e-5)?;
                    Ok(max_of(ratios))
                })
            }),
        ]
    }
}

pub struct GtSuite;

/// The printed two-colour, three-site tables: the GT change of basis and the
/// specialization matrix of the tilde weight functions, rows and columns in
/// the order `112, 121, 211`.
pub(crate) fn printed_two_colour_tables(z: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<(f64, f64)> {
    let lambda = Lambda::new(vec![2, 1])?;
    let p12 = state.pair(1, 2);
    let bb = |x: Complex64| b_bar(params, x);
    let cc = |x: Complex64, s: Complex64| c(params, x, s);
    let zero = Complex64::new(0.0, 0.0);
    let (u12, u13, u23) = (z[0] - z[1], z[0] - z[2], z[1] - z[2]);
    let x_want = CMatrix::from_row_slice(
        3,
        3,
        &[
            bb(u13)? * bb(u23)?,
            bb(u13)? * cc(u23, p12 + 1.0)?,
            cc(u13, p12)?,
            zero,
            bb(u12)?,
            cc(u12, p12)?,
            zero,
            zero,
            ONE,
        ],
    );
    let x_got = gt_basis(&lambda, z, state, params)?.transition_matrix();
    let (u21, u31, u32) = (-u12, -u13, -u23);
    let w_want = CMatrix::from_row_slice(
        3,
        3,
        &[
            bb(u31)? * bb(u32)?,
            bb(u31)? * cc(u32, p12)?,
            cc(u31, p12 - 1.0)?,
            zero,
            bb(u21)?,
            cc(u21, p12 - 1.0)?,
            zero,
            zero,
            ONE,
        ],
    );
    let w_got = specialization_table(&lambda, z, state, params, WeightVariant::Tilde)?.values;
    Ok((linalg::residual(&x_got, &x_want), linalg::residual(&w_got, &w_want)))
}

fn site_counts(cfg: &VerifyConfig, lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi.min(cfg.max_sites)).collect()
}

impl Suite for GtSuite {
    fn name(&self) -> &'static str {
        "gt"
    }

    fn cases(&self, cfg: &VerifyConfig) -> Vec<CaseSpec> {
        let tol = Expectation::Below(cfg.tol);
        let tol_inv = Expectation::Below(cfg.tol_inverse);
        let mut out = Vec::new();
        for &rank in &cfg.ranks {
            out.push(CaseSpec::new(
                format!("Gauss reassembly, N={rank}"),
                "Gauss decomposition of the L-operator",
                tol,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    let sizes = site_counts(cfg, 1, 4);
                    sweep(cfg, &format!("gt/reassembly/{rank}"), cfg.heavy_samples(), |s| {
                        let n = *pick(s, &sizes);
                        let l = l_operator(s.complex(0.6, 0.3), &s.spectral(n), &s.state(rank), &p)?;
                        Ok(reassembly_residual(&l, &gauss_extract(&l, DEFAULT_PIVOT_COND)?))
                    })
                },
            ));
            out.push(CaseSpec::new(
                format!("exchange operators: square and braid, N={rank}"),
                "unitarity and braid relation of the exchange operators",
                tol,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    sweep(cfg, &format!("gt/stilde/{rank}"), cfg.samples, |s| {
                        let u = s.spectral(3);
                        let state = s.state(rank);
                        let sq = s_tilde_square_residual(1, &u, &state, &p)?.max(s_tilde_square_residual(2, &u, &state, &p)?);
                        Ok(sq.max(braid_residual(1, &u, &state, &p)?))
                    })
                },
            ));
            let shapes = focus_shapes(cfg, rank);
            let s1 = shapes.clone();
            out.push(CaseSpec::new(
                format!("GT change of basis vs weight functions, N={rank}"),
                "GT transition matrix from specialized weight functions",
                tol,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    sweep(cfg, &format!("gt/x/{rank}"), cfg.heavy_samples(), |s| {
                        let mut worst = 0.0f64;
                        for lambda in &s1 {
                            worst = worst.max(check_x_matrix(lambda, &s.spectral(lambda.n()), &s.state(rank), &p)?);
                        }
                        Ok(worst)
                    })
                },
            ));
            let s2 = shapes;
            out.push(CaseSpec::new(
                format!("descent path independence, N={rank}"),
                "GT vectors from different reduced words",
                tol,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    sweep(cfg, &format!("gt/paths/{rank}"), cfg.heavy_samples(), |s| {
                        let lambda = pick(s, &s2).clone();
                        let z = s.spectral(lambda.n());
                        let state = s.state(rank);
                        let parts = enumerate_partitions(&lambda)?;
                        let a = gt_vectors(parts.clone(), &z, &state, &p, DescentPath::Leftmost)?;
                        let b = gt_vectors(parts, &z, &state, &p, DescentPath::Rightmost)?;
                        Ok(linalg::residual(&a.vectors, &b.vectors))
                    })
                },
            ));
            for expansion in [Expansion::Plus, Expansion::Minus] {
                out.push(CaseSpec::new(
                    format!("half-currents vs Gauss components ({}), N={rank}", expansion.name()),
                    "action of the half-currents on GT vectors",
                    tol_inv,
                    move |cfg| {
                        let p = cfg.params(rank)?;
                        let sizes = site_counts(cfg, 1, 4);
                        sweep(cfg, &format!("gt/halfcurrent/{rank}/{}", expansion.name()), cfg.heavy_samples(), |s| {
                            let n = *pick(s, &sizes);
                            let res = half_current_oracle(s.complex(0.6, 0.3), &s.spectral(n), &s.state(rank), &p, expansion)?;
                            Ok(max_of(res.iter().map(|r| r.residual)))
                        })
                    },
                ));
            }
            for (k, name) in ["K E K^-1", "K F K^-1", "E E", "F F", "E F - F E"].into_iter().enumerate() {
                out.push(CaseSpec::new(
                    format!("half-current relation {name}, N={rank}"),
                    "exchange relations of the half-currents",
                    tol,
                    move |cfg| {
                        let p = cfg.params(rank)?;
                        let sizes = site_counts(cfg, 1, 4);
                        sweep(cfg, &format!("gt/appb/{rank}/{k}"), cfg.heavy_samples(), |s| {
                            let n = *pick(s, &sizes);
                            let res = exchange_relations(s.complex(0.6, 0.3), s.complex(0.6, 0.3), &s.spectral(n), &s.state(rank), &p)?;
                            Ok(max_of(res.iter().filter(|r| r.name.starts_with(name)).map(|r| r.residual)))
                        })
                    },
                ));
            }
            out.push(CaseSpec::new(
                format!("[E_i, F_j] by support, N={rank}"),
                "commutator of the elliptic currents",
                tol,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    let sizes = site_counts(cfg, 1, 3);
                    sweep(cfg, &format!("gt/ef/{rank}"), cfg.heavy_samples(), |s| {
                        let n = *pick(s, &sizes);
                        let z = s.spectral(n);
                        let mut worst = 0.0f64;
                        for i in 1..rank {
                            for j in 1..rank {
                                let rep = ef_commutators(i, j, &z, rank, &p)?;
                                worst = worst.max(rep.vanishing).max(rep.diagonal);
                            }
                        }
                        Ok(worst)
                    })
                },
            ));
            out.push(CaseSpec::new(
                format!("lowest word: E annihilates (closed form), N={rank}"),
                "highest-weight property",
                Expectation::Exact,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    sweep(cfg, &format!("gt/hw/{rank}"), cfg.heavy_samples(), |s| {
                        let n = 1 + s.index(cfg.max_sites.min(4));
                        Ok(highest_weight(s.complex(0.6, 0.3), &s.spectral(n), &s.state(rank), &p)?.closed_form_e)
                    })
                },
            ));
            out.push(CaseSpec::new(
                format!("lowest word: Gauss E and Cartan eigenvalues, N={rank}"),
                "highest-weight property",
                tol_inv,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    sweep(cfg, &format!("gt/hw/{rank}"), cfg.heavy_samples(), |s| {
                        let n = 1 + s.index(cfg.max_sites.min(4));
                        let rep = highest_weight(s.complex(0.6, 0.3), &s.spectral(n), &s.state(rank), &p)?;
                        Ok(rep.gauss_e.max(rep.cartan))
                    })
                },
            ));
            out.push(CaseSpec::new(format!("centrality, N={rank}, n<=3"), "central element of the algebra", tol_inv, move |cfg| {
                let p = cfg.params(rank)?;
                let sizes = site_counts(cfg, 1, 3);
                sweep(cfg, &format!("gt/center/{rank}"), cfg.heavy_samples(), |s| {
                    let n = *pick(s, &sizes);
                    let rep = check_center(s.complex(0.6, 0.3), &s.spectral(n), &s.state(rank), &p)?;
                    Ok(rep.off_scalar.max(rep.scalar_mismatch))
                })
            }));
            out.push(CaseSpec::new(
                format!("K operators commute, N={rank}"),
                "commutativity of the Gelfand-Tsetlin subalgebra",
                tol_inv,
                move |cfg| {
                    let p = cfg.params(rank)?;
                    let sizes = site_counts(cfg, 1, 3);
                    sweep(cfg, &format!("gt/kcomm/{rank}"), cfg.heavy_samples(), |s| {
                        let n = *pick(s, &sizes);
                        let (i, j) = (1 + s.index(rank), 1 + s.index(rank));
                        k_commutation_residual(i, j, s.complex(0.6, 0.3), s.complex(0.6, 0.3), &s.spectral(n), &s.state(rank), &p)
                    })
                },
            ));
        }
        out.extend(fixed_gt_cases(cfg));
        out
    }
}

fn rll_case(rank: usize, n: usize, sign: Option<Sign>, label: String) -> CaseSpec {
    CaseSpec::new(label, "RLL relation", Expectation::Below(1e-8), move |cfg| {
        let p = cfg.params(rank)?;
        let tag = format!("gt/rll/{rank}/{n}/{sign:?}");
        sweep(cfg, &tag, cfg.heavy_samples(), |s| {
            verify_rll_with(s.complex(0.6, 0.3), s.complex(0.6, 0.3), &s.spectral(n), &s.state(rank), &p, sign)
        })
    })
}

fn fixed_gt_cases(cfg: &VerifyConfig) -> Vec<CaseSpec> {
    let tol = Expectation::Below(cfg.tol);
    let tol_inv = Expectation::Below(cfg.tol_inverse);
    let mut out = vec![
        CaseSpec::new("printed GT change of basis, N=2, n=3", "GT transition matrix, two colours", tol, |cfg| {
            let p = cfg.params(2)?;
            sweep(cfg, "gt/printed", cfg.samples, |s| Ok(printed_two_colour_tables(&s.spectral(3), &s.state(2), &p)?.0))
        }),
        CaseSpec::new("printed weight specialization, N=2, n=3", "specialization matrix of weight functions", tol, |cfg| {
            let p = cfg.params(2)?;
            sweep(cfg, "gt/printed", cfg.samples, |s| Ok(printed_two_colour_tables(&s.spectral(3), &s.state(2), &p)?.1))
        }),
        CaseSpec::new("worked example, L-operator entries", "three-colour five-site example", tol, |cfg| {
            let p = cfg.params(3)?;
            sweep(cfg, "gt/worked", 1, |s| {
                let ex = worked_example(s.complex(0.6, 0.3), &s.spectral(5), &s.state(3), &p)?;
                Ok(max_of(ex.items.iter().filter(|r| r.name.starts_with('L')).map(|r| r.residual)))
            })
        }),
        CaseSpec::new("worked example, half-currents", "three-colour five-site example", tol_inv, |cfg| {
            let p = cfg.params(3)?;
            sweep(cfg, "gt/worked", 1, |s| {
                let ex = worked_example(s.complex(0.6, 0.3), &s.spectral(5), &s.state(3), &p)?;
                Ok(max_of(ex.items.iter().filter(|r| !r.name.starts_with('L')).map(|r| r.residual)))
            })
        }),
        CaseSpec::new(
            "worked example, E32 coefficient with c instead of c-bar",
            "three-colour five-site example",
            Expectation::Report,
            |cfg| {
                let p = cfg.params(3)?;
                sweep(cfg, "gt/worked", 1, |s| {
                    Ok(worked_example(s.complex(0.6, 0.3), &s.spectral(5), &s.state(3), &p)?.printed_e_coefficient_residual)
                })
            },
        ),
        CaseSpec::new("partial-fraction identity", "partial fractions of the Cartan eigenvalue", Expectation::Below(1e-10), |cfg| {
            let p = cfg.params(2)?;
            sweep(cfg, "gt/pf", cfg.samples, |s| {
                let n = 1 + s.index(5);
                let m = s.index(n + 1);
                if 2 * m == n {
                    return Ok(0.0);
                }
                partial_fraction_residual(&s.spectral(n), m, s.complex(0.6, 0.3), &p)
            })
        }),
        CaseSpec::new("partial-fraction residues by contour", "partial fractions of the Cartan eigenvalue", tol, |cfg| {
            let p = cfg.params(2)?;
            sweep(cfg, "gt/pf-res", cfg.samples, |s| {
                let n = 1 + s.index(5);
                let m = s.index(n + 1);
                let a = s.index(n);
                partial_fraction_residue_residual(&s.spectral(n), m, a, &p)
            })
        }),
        CaseSpec::new("lowest word: first Drinfeld polynomial", "highest-weight property", tol, |cfg| {
            let p = cfg.params(2)?;
            sweep(cfg, "gt/drinfeld", cfg.samples, |s| {
                let n = 1 + s.index(3);
                let z = s.spectral(n);
                let v = s.complex(0.6, 0.3);
                let h1 = highest_weight(v, &z, &s.state(2), &p)?.h1;
                let poly = |w: Complex64| z.iter().fold(ONE, |acc, &u| acc * p.bracket(u - w + 1.0));
                let want = p.varrho()? * poly(v) / p.guard(poly(v + 1.0), v, "P_1(v + 1)")?;
                Ok(linalg::scalar_residual(h1, want))
            })
        }),
    ];
    out.push(rll_case(2, 1, None, "RLL, N=2, n=1".into()));
    out.push(rll_case(2, 2, None, "RLL, N=2, n=2".into()));
    if cfg.ranks.contains(&3) {
        out.push(rll_case(3, 2, None, "RLL, N=3, n=2".into()));
    }
    for variant in RhoMinusVariant::ALL {
        out.push(rll_case(2, 1, Some(Sign::Minus(variant)), format!("RLL with R-, {}, N=2, n=1", variant.name())));
    }
    out.push(CaseSpec::new("RLL at coincident sites, N=2", "RLL relation", tol, |cfg| {
        let p = cfg.params(2)?;
        sweep(cfg, "gt/rll-degenerate", cfg.heavy_samples(), |s| {
            let u = s.complex(0.6, 0.3);
            verify_rll(s.complex(0.6, 0.3), s.complex(0.6, 0.3), &[u, u], &s.state(2), &p)
        })
    }));
    out
}
