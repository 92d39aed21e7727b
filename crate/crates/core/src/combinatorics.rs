//! Ordered set partitions `I = (I_1, …, I_N)` of `[1, n]`, their index maps,
//! the partial order, dynamical shift exponents and the raising/lowering moves.
//!
//! Positions and colours are 1-based throughout.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cap on the number of sites accepted by the enumerators.
pub const DEFAULT_SITE_CAP: usize = 8;

/// Block sizes `λ = (λ_1, …, λ_N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lambda {
    parts: Vec<usize>,
}

impl Lambda {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::domain("lambda needs at least one component"));
        }
        Ok(Lambda { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn rank(&self) -> usize {
        self.parts.len()
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    /// `λ_l`, with `l` 1-based.
    pub fn part(&self, l: usize) -> usize {
        self.parts[l - 1]
    }

    /// `λ^{(l)} = λ_1 + … + λ_l`; `partial(0) = 0`.
    pub fn partial(&self, l: usize) -> usize {
        self.parts[..l].iter().sum()
    }

    pub fn weight(&self) -> Vec<i64> {
        self.parts.iter().map(|&x| x as i64).collect()
    }

    /// Every `λ` of the given rank with `|λ| = n`, in lexicographic order.
    pub fn all_with_size(rank: usize, n: usize) -> Vec<Lambda> {
        fn rec(rank: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<Lambda>) {
            if current.len() + 1 == rank {
                current.push(left);
                out.push(Lambda { parts: current.clone() });
                current.pop();
                return;
            }
            for k in 0..=left {
                current.push(k);
                rec(rank, left - k, current, out);
                current.pop();
            }
        }
        let mut out = Vec::new();
        if rank > 0 {
            rec(rank, n, &mut Vec::new(), &mut out);
        }
        out
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A partition of `[1, n]` into `N` ordered blocks, stored as its colour word
/// `μ_1 … μ_n` (`μ_s = l` iff `s ∈ I_l`), with blocks and cumulative unions
/// `I^{(l)} = I_1 ∪ … ∪ I_l` precomputed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionIndex {
    rank: usize,
    word: Vec<u8>,
    blocks: Vec<Vec<usize>>,
    unions: Vec<Vec<usize>>,
}

impl PartitionIndex {
    pub fn from_word(rank: usize, word: &[u8]) -> Result<Self> {
        if rank == 0 || rank > 9 {
            return Err(Error::domain(format!("rank {rank} outside 1..=9")));
        }
        if let Some(&bad) = word.iter().find(|&&m| m == 0 || m as usize > rank) {
            return Err(Error::domain(format!("colour {bad} outside 1..={rank}")));
        }
        let mut blocks = vec![Vec::new(); rank];
        for (s, &m) in word.iter().enumerate() {
            blocks[m as usize - 1].push(s + 1);
        }
        let mut unions = Vec::with_capacity(rank);
        let mut acc: Vec<usize> = Vec::new();
        for block in &blocks {
            acc.extend(block);
            acc.sort_unstable();
            unions.push(acc.clone());
        }
        Ok(PartitionIndex { rank, word: word.to_vec(), blocks, unions })
    }

    pub fn from_blocks(rank: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        if blocks.len() != rank {
            return Err(Error::domain(format!("expected {rank} blocks, got {}", blocks.len())));
        }
        let n: usize = blocks.iter().map(Vec::len).sum();
        let mut word = vec![0u8; n];
        for (l, block) in blocks.iter().enumerate() {
            for &s in block {
                if s == 0 || s > n || word[s - 1] != 0 {
                    return Err(Error::domain("blocks must be disjoint and cover [1, n]"));
                }
                word[s - 1] = (l + 1) as u8;
            }
        }
        Self::from_word(rank, &word)
    }

    /// Parses a colour word such as `"32211"`.
    pub fn parse(rank: usize, text: &str) -> Result<Self> {
        let word: Option<Vec<u8>> = text.chars().map(|ch| ch.to_digit(10).map(|d| d as u8)).collect();
        match word {
            Some(word) => Self::from_word(rank, &word),
            None => Err(Error::domain(format!("not a colour word: {text:?}"))),
        }
    }

    /// `I^max`: the word `N…N … 1…1`.
    pub fn maximal(lambda: &Lambda) -> Self {
        let mut word = Vec::with_capacity(lambda.n());
        for l in (1..=lambda.rank()).rev() {
            word.extend(std::iter::repeat_n(l as u8, lambda.part(l)));
        }
        Self::from_word(lambda.rank(), &word).expect("valid by construction")
    }

    /// The word `1…1 … N…N`.
    pub fn minimal(lambda: &Lambda) -> Self {
        let mut word = Vec::with_capacity(lambda.n());
        for l in 1..=lambda.rank() {
            word.extend(std::iter::repeat_n(l as u8, lambda.part(l)));
        }
        Self::from_word(lambda.rank(), &word).expect("valid by construction")
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    /// `μ_s`.
    pub fn color(&self, s: usize) -> usize {
        self.word[s - 1] as usize
    }

    /// `I_l`, sorted.
    pub fn block(&self, l: usize) -> &[usize] {
        &self.blocks[l - 1]
    }

    /// `I^{(l)}`, sorted; `i^{(l)}_a = union(l)[a - 1]`.
    pub fn union(&self, l: usize) -> &[usize] {
        if l == 0 {
            &[]
        } else {
            &self.unions[l - 1]
        }
    }

    pub fn lambda(&self) -> Lambda {
        Lambda { parts: self.blocks.iter().map(Vec::len).collect() }
    }

    /// `Σ_s ε̄_{μ_s}` as an integer vector.
    pub fn weight(&self) -> Vec<i64> {
        self.blocks.iter().map(|b| b.len() as i64).collect()
    }

    /// `s̃`: the rank of `s` inside its own block.
    pub fn position_in_block(&self, s: usize) -> usize {
        let block = self.block(self.color(s));
        block.iter().position(|&x| x == s).expect("s lies in its block") + 1
    }

    /// Index into the lexicographically ordered list of all `N^n` words.
    pub fn basis_index(&self) -> usize {
        self.word.iter().fold(0, |acc, &m| acc * self.rank + (m as usize - 1))
    }

    /// The word with sites `i` and `i + 1` exchanged.
    pub fn swapped(&self, i: usize) -> PartitionIndex {
        let mut word = self.word.clone();
        word.swap(i - 1, i);
        Self::from_word(self.rank, &word).expect("swap keeps colours")
    }

    fn with_color(&self, i: usize, color: usize) -> PartitionIndex {
        let mut word = self.word.clone();
        word[i - 1] = color as u8;
        Self::from_word(self.rank, &word).expect("colour in range")
    }

    fn check_level(&self, j: usize) -> Result<()> {
        if j == 0 || j >= self.rank {
            return Err(Error::domain(format!("level {j} outside 1..{}", self.rank)));
        }
        Ok(())
    }
}

impl fmt::Display for PartitionIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &m in &self.word {
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

impl Serialize for PartitionIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PartitionIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        let rank = text.chars().filter_map(|c| c.to_digit(10)).max().unwrap_or(1) as usize;
        PartitionIndex::parse(rank.max(1), &text).map_err(serde::de::Error::custom)
    }
}

/// All `I ∈ 𝓘_λ`, lexicographic in the colour word.
pub fn enumerate_partitions(lambda: &Lambda) -> Result<Vec<PartitionIndex>> {
    enumerate_partitions_capped(lambda, DEFAULT_SITE_CAP)
}

pub fn enumerate_partitions_capped(lambda: &Lambda, cap: usize) -> Result<Vec<PartitionIndex>> {
    let n = lambda.n();
    if n > cap {
        return Err(Error::Resource(format!("{n} sites exceed the cap of {cap}")));
    }
    let mut word: Vec<u8> = PartitionIndex::minimal(lambda).word().to_vec();
    let mut out = Vec::new();
    loop {
        out.push(PartitionIndex::from_word(lambda.rank(), &word)?);
        if !next_permutation(&mut word) {
            break;
        }
    }
    Ok(out)
}

/// All `N^n` colour words, in basis-index order.
pub fn enumerate_words(rank: usize, n: usize) -> Result<Vec<PartitionIndex>> {
    if n > DEFAULT_SITE_CAP {
        return Err(Error::Resource(format!("{n} sites exceed the cap of {DEFAULT_SITE_CAP}")));
    }
    let total = rank.pow(n as u32);
    (0..total)
        .map(|mut k| {
            let mut word = vec![0u8; n];
            for slot in word.iter_mut().rev() {
                *slot = (k % rank + 1) as u8;
                k /= rank;
            }
            PartitionIndex::from_word(rank, &word)
        })
        .collect()
}

fn next_permutation(word: &mut [u8]) -> bool {
    let n = word.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && word[i - 1] >= word[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while word[j] <= word[i - 1] {
        j -= 1;
    }
    word.swap(i - 1, j);
    word[i..].reverse();
    true
}

fn same_shape(a: &PartitionIndex, b: &PartitionIndex) -> Result<()> {
    if a.rank != b.rank || a.lambda() != b.lambda() {
        return Err(Error::domain(format!("partitions {a} and {b} have different shapes")));
    }
    Ok(())
}

/// `I ⩽ J` iff `i^{(l)}_a ≤ j^{(l)}_a` for every `l, a`.
pub fn leq(i: &PartitionIndex, j: &PartitionIndex) -> Result<bool> {
    same_shape(i, j)?;
    Ok((1..=i.rank).all(|l| i.union(l).iter().zip(j.union(l)).all(|(x, y)| x <= y)))
}

fn check_shift_args(part: &PartitionIndex, s: usize, l: usize) -> Result<()> {
    if s == 0 || s > part.n() {
        return Err(Error::domain(format!("position {s} outside 1..={}", part.n())));
    }
    if l >= part.rank || part.color(s) > l {
        return Err(Error::domain(format!("need mu_s <= l < N, got mu_s = {}, l = {l}", part.color(s))));
    }
    Ok(())
}

/// `C_{μ_s, l+1}(s) = Σ_{j > s} ⟨ε̄_{μ_j}, h_{μ_s, l+1}⟩` with
/// `⟨ε̄_μ, h_{j,k}⟩ = δ_{μj} − δ_{μk}`.
pub fn dynamical_shift_sum(part: &PartitionIndex, s: usize, l: usize) -> Result<i64> {
    check_shift_args(part, s, l)?;
    let a = part.color(s);
    Ok(((s + 1)..=part.n())
        .map(|j| {
            let m = part.color(j);
            (m == a) as i64 - (m == l + 1) as i64
        })
        .sum())
}

/// Closed form of [`dynamical_shift_sum`] in terms of block sizes and ranks.
pub fn dynamical_shift_closed(part: &PartitionIndex, s: usize, l: usize) -> Result<i64> {
    check_shift_args(part, s, l)?;
    let lambda = part.lambda();
    let a = part.color(s);
    let s_tilde = part.position_in_block(s) as i64;
    let next = part.block(l + 1);
    let own = lambda.part(a) as i64;
    match next.iter().position(|&x| x > s) {
        Some(idx) => {
            let m = idx as i64 + 1;
            Ok(own - lambda.part(l + 1) as i64 - s_tilde + m - 1)
        }
        None => Ok(own - s_tilde),
    }
}

/// `I^{i'}`: moves `i ∈ I_{j+1}` into `I_j`.
pub fn move_up(part: &PartitionIndex, j: usize, i: usize) -> Result<PartitionIndex> {
    part.check_level(j)?;
    if i == 0 || i > part.n() || part.color(i) != j + 1 {
        return Err(Error::domain(format!("{i} is not in block {} of {part}", j + 1)));
    }
    Ok(part.with_color(i, j))
}

/// `I^{'i}`: moves `i ∈ I_j` into `I_{j+1}`.
pub fn move_down(part: &PartitionIndex, j: usize, i: usize) -> Result<PartitionIndex> {
    part.check_level(j)?;
    if i == 0 || i > part.n() || part.color(i) != j {
        return Err(Error::domain(format!("{i} is not in block {j} of {part}")));
    }
    Ok(part.with_color(i, j + 1))
}

/// `φ^{(l)}`: `i^{(l+1)}_{φ(a)} = i^{(l)}_a`, returned 1-based for `a = 1..λ^{(l)}`.
pub fn phi_map(part: &PartitionIndex, l: usize) -> Vec<usize> {
    let upper = part.union(l + 1);
    part.union(l)
        .iter()
        .map(|x| upper.iter().position(|y| y == x).expect("nested unions") + 1)
        .collect()
}

/// The image `σ₀(I)` under site reversal `s ↦ n + 1 − s`, together with the
/// index maps predicted by `ĩ^{(l)}_a = σ₀(i^{(l)}_{σ₀^{(l)}(a)})`.
#[derive(Debug, Clone)]
pub struct Sigma0Relabeling {
    pub source: PartitionIndex,
    pub image: PartitionIndex,
    /// `predicted[l-1][a-1] = n + 1 − i^{(l)}_{λ^{(l)} + 1 − a}`.
    pub predicted: Vec<Vec<usize>>,
}

impl Sigma0Relabeling {
    /// The predicted maps agree with the unions of the image.
    pub fn index_maps_hold(&self) -> bool {
        (1..=self.image.rank()).all(|l| self.predicted[l - 1] == self.image.union(l))
    }

    /// `φ̃^{(l)}(σ₀^{(l)}(a)) = σ₀^{(l+1)}(φ^{(l)}(a))` for all `l < N`, `a`.
    pub fn phi_relation_holds(&self) -> bool {
        let lambda = self.source.lambda();
        (1..self.source.rank()).all(|l| {
            let phi = phi_map(&self.source, l);
            let phi_tilde = phi_map(&self.image, l);
            let size = lambda.partial(l);
            let size_next = lambda.partial(l + 1);
            (1..=size).all(|a| phi_tilde[size - a] == size_next + 1 - phi[a - 1])
        })
    }
}

pub fn sigma0_relabel(part: &PartitionIndex) -> Sigma0Relabeling {
    let n = part.n();
    let mut word = part.word().to_vec();
    word.reverse();
    let image = PartitionIndex::from_word(part.rank(), &word).expect("reversal keeps colours");
    let predicted = (1..=part.rank())
        .map(|l| {
            let union = part.union(l);
            let size = union.len();
            (1..=size).map(|a| n + 1 - union[size - a]).collect()
        })
        .collect();
    Sigma0Relabeling { source: part.clone(), image, predicted }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(parts: &[usize]) -> Lambda {
        Lambda::new(parts.to_vec()).unwrap()
    }

    fn pi(rank: usize, text: &str) -> PartitionIndex {
        PartitionIndex::parse(rank, text).unwrap()
    }

    fn multinomial(parts: &[usize]) -> usize {
        let fact = |k: usize| (1..=k).product::<usize>();
        fact(parts.iter().sum()) / parts.iter().map(|&p| fact(p)).product::<usize>()
    }

    #[test]
    fn partition_counts() {
        assert_eq!(enumerate_partitions(&lam(&[2, 1])).unwrap().len(), 3);
        assert_eq!(enumerate_partitions(&lam(&[1, 1, 1])).unwrap().len(), 6);
        // Brute force over all 3^5 words.
        let brute = enumerate_words(3, 5)
            .unwrap()
            .into_iter()
            .filter(|w| w.lambda() == lam(&[2, 2, 1]))
            .count();
        assert_eq!(brute, 30);
        assert_eq!(enumerate_partitions(&lam(&[2, 2, 1])).unwrap().len(), 30);
        for rank in 1..=3 {
            for n in 0..=6 {
                for l in Lambda::all_with_size(rank, n) {
                    assert_eq!(enumerate_partitions(&l).unwrap().len(), multinomial(l.parts()));
                }
            }
        }
    }

    #[test]
    fn enumeration_is_lexicographic_and_capped() {
        let words: Vec<String> =
            enumerate_partitions(&lam(&[2, 1])).unwrap().iter().map(|p| p.to_string()).collect();
        assert_eq!(words, ["112", "121", "211"]);
        assert!(matches!(enumerate_partitions(&lam(&[5, 5])), Err(Error::Resource(_))));
    }

    #[test]
    fn index_maps() {
        let p = pi(3, "32211");
        assert_eq!(p.block(1), &[4, 5]);
        assert_eq!(p.block(2), &[2, 3]);
        assert_eq!(p.block(3), &[1]);
        assert_eq!(p.union(2), &[2, 3, 4, 5]);
        assert_eq!(p.union(3), &[1, 2, 3, 4, 5]);
        assert_eq!(p.position_in_block(3), 2);
        assert_eq!(PartitionIndex::maximal(&lam(&[2, 2, 1])), p);
        assert_eq!(PartitionIndex::from_blocks(3, &[vec![4, 5], vec![2, 3], vec![1]]).unwrap(), p);
        assert!(PartitionIndex::from_blocks(2, &[vec![1], vec![1]]).is_err());
    }

    #[test]
    fn order_examples() {
        let (a, b, c) = (pi(2, "112"), pi(2, "121"), pi(2, "211"));
        assert!(leq(&a, &b).unwrap() && leq(&b, &c).unwrap() && leq(&a, &c).unwrap());
        assert!(leq(&b, &b).unwrap());
        let (x, y) = (pi(2, "12"), pi(2, "21"));
        assert!(leq(&x, &y).unwrap());
        assert!(!leq(&y, &x).unwrap());
        assert!(leq(&x, &pi(2, "11")).is_err());
    }

    #[test]
    fn order_is_partial_with_unique_maximum() {
        for rank in 2..=3 {
            for n in 1..=5 {
                for l in Lambda::all_with_size(rank, n) {
                    let all = enumerate_partitions(&l).unwrap();
                    let top = PartitionIndex::maximal(&l);
                    for a in &all {
                        assert!(leq(a, &top).unwrap());
                        for b in &all {
                            let ab = leq(a, b).unwrap();
                            if ab && leq(b, a).unwrap() {
                                assert_eq!(a, b);
                            }
                            if ab {
                                for c in &all {
                                    if leq(b, c).unwrap() {
                                        assert!(leq(a, c).unwrap());
                                    }
                                }
                            }
                        }
                    }
                    let maxima = all.iter().filter(|a| all.iter().all(|b| !leq(a, b).unwrap() || a == &b)).count();
                    assert_eq!(maxima, 1);
                }
            }
        }
    }

    #[test]
    fn shift_sum_matches_closed_form_exhaustively() {
        for rank in 2..=3 {
            for n in 1..=5 {
                for l in Lambda::all_with_size(rank, n) {
                    for p in enumerate_partitions(&l).unwrap() {
                        for s in 1..=n {
                            for level in p.color(s)..rank {
                                assert_eq!(
                                    dynamical_shift_sum(&p, s, level).unwrap(),
                                    dynamical_shift_closed(&p, s, level).unwrap(),
                                    "{p} s={s} l={level}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn shift_examples() {
        let p = pi(2, "211");
        // s = 2: only j = 3 contributes, colour 1 = μ_s.
        assert_eq!(dynamical_shift_sum(&p, 2, 1).unwrap(), 1);
        assert_eq!(dynamical_shift_sum(&p, 3, 1).unwrap(), 0);
        // s after the last element of I_{l+1}: λ_{μ_s} − s̃.
        assert_eq!(dynamical_shift_closed(&p, 2, 1).unwrap(), 2 - 1);
        // Empty block l + 1.
        let q = pi(2, "111");
        assert_eq!(dynamical_shift_closed(&q, 1, 1).unwrap(), 3 - 1);
        assert!(dynamical_shift_sum(&p, 1, 1).is_err());
    }

    #[test]
    fn abelianized_shift_matches_prop_closed_form() {
        // C_{l,l+1}(i^{(l)}_a) = 2(λ^{(l)} − a) − λ^{(l+1)} + φ^{(l)}(a) for the one-step
        // Grassmannian case, where every element of I^{(l)} carries colour l.
        for rank in 2..=3 {
            for n in 1..=5 {
                for l in Lambda::all_with_size(rank, n) {
                    for p in enumerate_partitions(&l).unwrap() {
                        for level in 1..rank {
                            if p.union(level).iter().any(|&s| p.color(s) != level) {
                                continue;
                            }
                            let phi = phi_map(&p, level);
                            for (a0, &s) in p.union(level).iter().enumerate() {
                                let a = a0 as i64 + 1;
                                let expected = 2 * (l.partial(level) as i64 - a) - l.partial(level + 1) as i64
                                    + phi[a0] as i64;
                                assert_eq!(dynamical_shift_sum(&p, s, level).unwrap(), expected, "{p} s={s}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn moves() {
        let p = PartitionIndex::from_blocks(2, &[vec![1], vec![2]]).unwrap();
        let up = move_up(&p, 1, 2).unwrap();
        assert_eq!(up.block(1), &[1, 2]);
        assert!(up.block(2).is_empty());
        assert_eq!(move_down(&up, 1, 2).unwrap(), p);
        assert!(move_up(&p, 1, 1).is_err());

        for l in Lambda::all_with_size(3, 4) {
            for p in enumerate_partitions(&l).unwrap() {
                for j in 1..3 {
                    for &a in p.block(j) {
                        for &b in p.block(j + 1) {
                            let x = move_up(&move_down(&p, j, a).unwrap(), j, b).unwrap();
                            let y = move_down(&move_up(&p, j, b).unwrap(), j, a).unwrap();
                            assert_eq!(x, y);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sigma0_relabeling() {
        let p = PartitionIndex::from_blocks(2, &[vec![1], vec![2]]).unwrap();
        let image = sigma0_relabel(&p).image;
        assert_eq!(image.block(1), &[2]);
        assert_eq!(image.block(2), &[1]);
        for rank in 1..=3 {
            for n in 0..=5 {
                for l in Lambda::all_with_size(rank, n) {
                    for p in enumerate_partitions(&l).unwrap() {
                        let relabel = sigma0_relabel(&p);
                        assert!(relabel.index_maps_hold(), "{p}");
                        assert!(relabel.phi_relation_holds(), "{p}");
                        assert_eq!(sigma0_relabel(&relabel.image).image, p);
                    }
                }
            }
        }
    }

    #[test]
    fn serializes_as_word() {
        let p = pi(3, "32211");
        assert_eq!(p.basis_index(), ((2 * 3 + 1) * 3 + 1) * 9);
        assert_eq!(p.to_string(), "32211");
    }
}
