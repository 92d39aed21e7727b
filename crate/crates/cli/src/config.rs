//! Run configuration: a flat `key = value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use elliptic_gt::verify::Fault;
use elliptic_gt::{Complex64, Lambda, VerifyConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Flags shared by every subcommand. Each one may also be set in the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Number of colours.
    #[arg(long = "N", global = true)]
    pub rank: Option<usize>,
    /// Shape as comma-separated parts, e.g. `2,2,1`.
    #[arg(long, global = true)]
    pub lambda: Option<String>,
    /// Number of sites.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Terms kept in each truncated infinite product.
    #[arg(long, global = true)]
    pub truncation: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Size of the worker pool; defaults to the number of cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Resolved settings, after merging file and flags.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub q: f64,
    pub r: f64,
    pub rank: Option<usize>,
    pub lambda: Option<Vec<usize>>,
    pub n: Option<usize>,
    pub seed: u64,
    pub tol: f64,
    pub truncation: Option<usize>,
    pub samples: Option<usize>,
    /// Pool size does not change results, so it stays out of the digest.
    #[serde(skip)]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Subcommand-specific entries, recorded for the digest.
    pub extra: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &["q", "r", "N", "lambda", "n", "seed", "tol", "truncation", "samples", "workers", "out"];

pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key = value", k + 1);
        };
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("config key {key}: {e}")))
        .transpose()
}

pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| anyhow::anyhow!("bad list entry {s:?}: {e}")))
        .collect()
}

/// `a`, `a+bi`, `a-bi` or `a,b`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let t = text.trim();
    if let Some((re, im)) = t.split_once(',') {
        return Ok(Complex64::new(re.trim().parse()?, im.trim().parse()?));
    }
    t.parse::<Complex64>().map_err(|e| anyhow::anyhow!("bad complex number {t:?}: {e}"))
}

pub fn parse_complex_list(text: &str) -> Result<Vec<Complex64>> {
    text.split(';').flat_map(|chunk| chunk.split_whitespace()).map(parse_complex).collect()
}

impl RunConfig {
    /// Merges the config file (if any) with the flags, flags winning.
    pub fn resolve(args: &CommonArgs, extra: &[(&str, Option<String>)]) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                parse_file(&text)?
            }
            None => BTreeMap::new(),
        };
        let extra_keys: Vec<&str> = extra.iter().map(|(k, _)| *k).collect();
        for key in file.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) && !extra_keys.contains(&key.as_str()) {
                bail!("unknown config key {key}");
            }
        }
        let lambda_text = args.lambda.clone().or_else(|| file.get("lambda").cloned());
        let lambda = lambda_text.as_deref().map(parse_list::<usize>).transpose()?;
        let cfg = RunConfig {
            q: args.q.or(field(&file, "q")?).unwrap_or(0.5),
            r: args.r.or(field(&file, "r")?).unwrap_or(3.0),
            rank: args.rank.or(field(&file, "N")?),
            lambda,
            n: args.n.or(field(&file, "n")?),
            seed: args.seed.or(field(&file, "seed")?).unwrap_or(1),
            tol: args.tol.or(field(&file, "tol")?).unwrap_or(1e-8),
            truncation: args.truncation.or(field(&file, "truncation")?),
            samples: args.samples.or(field(&file, "samples")?),
            workers: args.workers.or(field(&file, "workers")?),
            out: args.out.clone().or_else(|| file.get("out").map(PathBuf::from)),
            extra: extra
                .iter()
                .filter_map(|(k, flag)| flag.clone().or_else(|| file.get(*k).cloned()).map(|v| (k.to_string(), v)))
                .collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(parts) = &self.lambda {
            let lambda = Lambda::new(parts.clone())?;
            if let Some(rank) = self.rank {
                if rank != lambda.rank() {
                    bail!("--N {rank} does not match lambda with {} parts", lambda.rank());
                }
            }
            if let Some(n) = self.n {
                if n != lambda.n() {
                    bail!("--n {n} does not match lambda of size {}", lambda.n());
                }
            }
        }
        if self.samples == Some(0) {
            bail!("--samples must be positive");
        }
        if self.workers == Some(0) {
            bail!("--workers must be positive");
        }
        Ok(())
    }

    pub fn extra(&self, key: &str) -> Option<&str> {
        self.extra.get(key).map(String::as_str)
    }

    pub fn lambda(&self) -> Result<Option<Lambda>> {
        Ok(self.lambda.clone().map(Lambda::new).transpose()?)
    }

    pub fn rank_or(&self, default: usize) -> usize {
        self.rank.or(self.lambda.as_ref().map(Vec::len)).unwrap_or(default)
    }

    pub fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    pub fn params(&self, rank: usize) -> Result<elliptic_gt::EllipticParams> {
        let params = elliptic_gt::EllipticParams::real(self.q, self.r, rank)?;
        Ok(match self.truncation {
            Some(m) => params.with_truncation(m)?,
            None => params,
        })
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn verify_config(&self, fault: Option<Fault>) -> Result<VerifyConfig> {
        let mut cfg = VerifyConfig { q: self.q, r: self.r, seed: self.seed, tol: self.tol, fault, ..VerifyConfig::default() };
        cfg.truncation = self.truncation;
        if let Some(samples) = self.samples {
            cfg.samples = samples;
        }
        if let Some(rank) = self.rank_or_lambda() {
            cfg.ranks = vec![rank];
        }
        cfg.lambda = self.lambda()?;
        if cfg.lambda.is_none() {
            if let Some(n) = self.n {
                cfg.max_sites = n;
            }
        }
        Ok(cfg)
    }

    fn rank_or_lambda(&self) -> Option<usize> {
        self.rank.or(self.lambda.as_ref().map(Vec::len))
    }

    pub fn write_output(&self, text: &str) -> Result<()> {
        write_to(self.out.as_deref(), text)
    }
}

pub fn write_to(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_parsing_skips_comments() {
        let map = parse_file("q = 0.4\n# comment\n\nseed=9 # trailing\n").unwrap();
        assert_eq!(map["q"], "0.4");
        assert_eq!(map["seed"], "9");
        assert!(parse_file("oops").is_err());
    }

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("0.2").unwrap(), Complex64::new(0.2, 0.0));
        assert_eq!(parse_complex("0.2,-0.1").unwrap(), Complex64::new(0.2, -0.1));
        assert_eq!(parse_complex("0.2-0.1i").unwrap(), Complex64::new(0.2, -0.1));
        assert_eq!(parse_complex_list("0.1 0.2;0.3").unwrap().len(), 3);
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("ellgt-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "q = 0.4\nseed = 9\n").unwrap();
        let args = CommonArgs { config: Some(path), seed: Some(3), ..CommonArgs::default() };
        let cfg = RunConfig::resolve(&args, &[]).unwrap();
        assert_eq!((cfg.q, cfg.seed), (0.4, 3));
        let other = RunConfig::resolve(&CommonArgs { seed: Some(4), ..args.clone() }, &[]).unwrap();
        assert_ne!(cfg.digest(), other.digest());
    }

    #[test]
    fn inconsistent_shape_is_rejected() {
        let args = CommonArgs { lambda: Some("2,1".into()), n: Some(4), ..CommonArgs::default() };
        assert!(RunConfig::resolve(&args, &[]).is_err());
        let args = CommonArgs { lambda: Some("2,1".into()), rank: Some(3), ..CommonArgs::default() };
        assert!(RunConfig::resolve(&args, &[]).is_err());
    }
}
