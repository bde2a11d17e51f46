//! Exact enumeration of every outcome of a few sequential draws from the urn
//! with `n` unit atoms and diffuse mass `θ`, in rational arithmetic.
//!
//! With `θ = p/q` every draw weight scaled by `q` is an integer, so each
//! sequence probability is an integer numerator over the common denominator
//! `Π_{i<m} (p + q(n+i))`. Numerators are accumulated in `u128` and only turned
//! into rationals at the end.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pmf::Pmf;

/// Enumerations with `n_atoms + m_draws` above this are refused.
pub const ENUMERATION_LIMIT: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Label {
    /// Atom `j`, counted from 1.
    Atom(usize),
    /// Diffuse class, numbered from 1 in order of first appearance.
    Class(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DrawSequence {
    pub outcomes: Vec<Label>,
    pub probability: BigRational,
}

fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `θ = p/q` with small positive integers.
fn split_theta(theta: &BigRational) -> Result<(u128, u128)> {
    if !theta.is_positive() {
        return Err(Error::Domain(format!("oracle needs theta > 0, got {theta}")));
    }
    match (theta.numer().to_u64(), theta.denom().to_u64()) {
        (Some(p), Some(q)) if p <= 1 << 20 && q <= 1 << 20 => Ok((p as u128, q as u128)),
        _ => Err(Error::Domain(format!("theta = {theta} has too large a numerator or denominator"))),
    }
}

fn check_size(n_atoms: usize, m_draws: usize) -> Result<()> {
    let size = n_atoms + m_draws;
    if size > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Parses `p/q` or an integer into a positive rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Domain(format!("expected a rational p/q, got {s:?}"));
    let (p, q) = s.split_once('/').unwrap_or((s, "1"));
    let p: u64 = p.trim().parse().map_err(|_| bad())?;
    let q: u64 = q.trim().parse().map_err(|_| bad())?;
    if q == 0 {
        return Err(bad());
    }
    Ok(BigRational::new(BigInt::from(p), BigInt::from(q)))
}

struct Walk<'a, F> {
    p: u128,
    q: u128,
    m: usize,
    hits: Vec<usize>,
    classes: Vec<usize>,
    labels: Vec<Label>,
    visit: &'a mut F,
}

impl<F: FnMut(&[Label], u128)> Walk<'_, F> {
    fn go(&mut self, num: u128) -> Result<()> {
        if self.labels.len() == self.m {
            (self.visit)(&self.labels, num);
            return Ok(());
        }
        let step = |w: u128| {
            num.checked_mul(w)
                .ok_or_else(|| Error::Domain("oracle numerator overflowed u128".into()))
        };
        for j in 0..self.hits.len() {
            let next = step(self.q * (1 + self.hits[j] as u128))?;
            self.hits[j] += 1;
            self.labels.push(Label::Atom(j + 1));
            self.go(next)?;
            self.labels.pop();
            self.hits[j] -= 1;
        }
        for c in 0..self.classes.len() {
            let next = step(self.q * self.classes[c] as u128)?;
            self.classes[c] += 1;
            self.labels.push(Label::Class(c + 1));
            self.go(next)?;
            self.labels.pop();
            self.classes[c] -= 1;
        }
        let next = step(self.p)?;
        self.classes.push(1);
        self.labels.push(Label::Class(self.classes.len()));
        self.go(next)?;
        self.labels.pop();
        self.classes.pop();
        Ok(())
    }
}

/// Calls `visit(labels, numerator)` for every sequence of `m_draws` outcomes
/// and returns the common denominator.
pub fn for_each_sequence<F>(n_atoms: usize, m_draws: usize, theta: &BigRational, mut visit: F) -> Result<u128>
where
    F: FnMut(&[Label], u128),
{
    check_size(n_atoms, m_draws)?;
    let (p, q) = split_theta(theta)?;
    let mut den: u128 = 1;
    for i in 0..m_draws {
        den = den
            .checked_mul(p + q * (n_atoms + i) as u128)
            .ok_or_else(|| Error::Domain("oracle denominator overflowed u128".into()))?;
    }
    let mut walk = Walk {
        p,
        q,
        m: m_draws,
        hits: vec![0; n_atoms],
        classes: Vec::new(),
        labels: Vec::with_capacity(m_draws),
        visit: &mut visit,
    };
    walk.go(1)?;
    Ok(den)
}

pub fn enumerate_sequences(n_atoms: usize, m_draws: usize, theta: &BigRational) -> Result<Vec<DrawSequence>> {
    let mut raw = Vec::new();
    let den = for_each_sequence(n_atoms, m_draws, theta, |labels, num| raw.push((labels.to_vec(), num)))?;
    Ok(raw
        .into_iter()
        .map(|(outcomes, num)| DrawSequence {
            outcomes,
            probability: ratio(num, den),
        })
        .collect())
}

/// A pmf with exact rational masses.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExactPmf {
    pub probs: BTreeMap<usize, BigRational>,
}

impl ExactPmf {
    fn from_counts(counts: &BTreeMap<usize, u128>, den: u128) -> Self {
        Self {
            probs: counts.iter().map(|(&x, &c)| (x, ratio(c, den))).collect(),
        }
    }

    pub fn get(&self, x: usize) -> BigRational {
        self.probs.get(&x).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.probs.values().fold(BigRational::zero(), |a, b| a + b)
    }

    /// `E[X(X-1)...(X-r+1)]`.
    pub fn factorial_moment(&self, r: usize) -> BigRational {
        self.probs.iter().fold(BigRational::zero(), |acc, (&x, p)| {
            let f: BigInt = (0..r).map(|j| BigInt::from(x as i64 - j as i64)).product();
            acc + p * BigRational::from_integer(f)
        })
    }

    pub fn to_pmf(&self) -> Pmf {
        let end = self.probs.keys().next_back().map_or(0, |&x| x + 1);
        let mut probs = vec![0.0; end];
        for (&x, p) in &self.probs {
            probs[x] = p.to_f64().unwrap_or(f64::NAN);
        }
        Pmf {
            support_offset: 0,
            probs,
            mass_defect: 0.0,
            renormalized: false,
        }
    }
}

fn atom_counts(labels: &[Label], n_atoms: usize) -> Vec<usize> {
    let mut hits = vec![0; n_atoms];
    for l in labels {
        if let Label::Atom(j) = l {
            hits[j - 1] += 1;
        }
    }
    hits
}

fn class_counts(labels: &[Label]) -> Vec<usize> {
    let mut sizes: Vec<usize> = Vec::new();
    for l in labels {
        if let Label::Class(c) = l {
            if *c > sizes.len() {
                sizes.resize(*c, 0);
            }
            sizes[c - 1] += 1;
        }
    }
    sizes
}

/// Statistics of the enumerated draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    /// `R_{n,m}`: atoms hit at least once.
    R { n: usize, m: usize },
    /// `R_{l,n,m}`: atoms hit exactly `l` times.
    RFreq { l: usize, n: usize, m: usize },
    /// `R_{n,m+m'}` given `R_{n,m} = y`.
    CondR { n: usize, m: usize, m_prime: usize, y: usize },
    /// `R̃_{l,n,m'}` given `R_{l,n,m} = y`: atoms seen `l` times in the first
    /// `m` draws that are hit again in the next `m'`.
    CondRFreq { l: usize, n: usize, m: usize, m_prime: usize, y: usize },
    /// `K_m`: diffuse classes.
    K { n: usize, m: usize },
    /// `V_m`: draws landing in diffuse classes.
    V { n: usize, m: usize },
}

fn r_of(labels: &[Label], n: usize) -> usize {
    atom_counts(labels, n).iter().filter(|&&h| h > 0).count()
}

fn r_freq_of(labels: &[Label], n: usize, l: usize) -> usize {
    atom_counts(labels, n).iter().filter(|&&h| h == l).count()
}

/// Of the atoms hit exactly `l` times in `first`, how many appear in `rest`.
fn r_tilde(first: &[Label], rest: &[Label], n: usize, l: usize) -> usize {
    let before = atom_counts(first, n);
    let after = atom_counts(rest, n);
    before.iter().zip(&after).filter(|&(&b, &a)| b == l && a > 0).count()
}

/// `(statistic, condition)` of one sequence; `condition` is `None` for
/// unconditional statistics.
fn evaluate(stat: Statistic, labels: &[Label]) -> (usize, Option<usize>) {
    match stat {
        Statistic::R { n, .. } => (r_of(labels, n), None),
        Statistic::RFreq { l, n, .. } => (r_freq_of(labels, n, l), None),
        Statistic::CondR { n, m, .. } => (r_of(labels, n), Some(r_of(&labels[..m], n))),
        Statistic::CondRFreq { l, n, m, .. } => {
            let (first, rest) = labels.split_at(m);
            (r_tilde(first, rest, n, l), Some(r_freq_of(first, n, l)))
        }
        Statistic::K { .. } => (class_counts(labels).len(), None),
        Statistic::V { .. } => (labels.iter().filter(|l| matches!(l, Label::Class(_))).count(), None),
    }
}

/// Exact law of a statistic, by pushing every sequence probability through it.
/// Conditional statistics are computed by exact Bayes over the enumeration.
pub fn oracle_pmf(stat: Statistic, theta: &BigRational) -> Result<ExactPmf> {
    let (n, draws, want) = match stat {
        Statistic::R { n, m } | Statistic::RFreq { n, m, .. } | Statistic::K { n, m } | Statistic::V { n, m } => {
            (n, m, None)
        }
        Statistic::CondR { n, m, m_prime, y } | Statistic::CondRFreq { n, m, m_prime, y, .. } => {
            (n, m + m_prime, Some(y))
        }
    };
    let mut counts: BTreeMap<usize, u128> = BTreeMap::new();
    let mut cond_mass: u128 = 0;
    let den = for_each_sequence(n, draws, theta, |labels, num| {
        let (x, cond) = evaluate(stat, labels);
        if cond == want {
            *counts.entry(x).or_insert(0) += num;
            cond_mass += num;
        }
    })?;
    match want {
        None => Ok(ExactPmf::from_counts(&counts, den)),
        Some(_) if cond_mass == 0 => Err(Error::ZeroMassCondition),
        Some(_) => Ok(ExactPmf::from_counts(&counts, cond_mass)),
    }
}

/// Every conditional law of a `CondR` or `CondRFreq` statistic from one
/// enumeration, keyed by the observed `y` (the `y` field of `stat` is ignored).
/// Values of `y` with zero mass are absent.
pub fn oracle_conditional_pmfs(stat: Statistic, theta: &BigRational) -> Result<BTreeMap<usize, ExactPmf>> {
    let (n, draws) = match stat {
        Statistic::CondR { n, m, m_prime, .. } | Statistic::CondRFreq { n, m, m_prime, .. } => (n, m + m_prime),
        _ => return Err(Error::Domain("only conditional statistics have a family of laws".into())),
    };
    let mut counts: BTreeMap<usize, (BTreeMap<usize, u128>, u128)> = BTreeMap::new();
    for_each_sequence(n, draws, theta, |labels, num| {
        let (x, cond) = evaluate(stat, labels);
        let e = counts.entry(cond.expect("conditional statistic")).or_default();
        *e.0.entry(x).or_insert(0) += num;
        e.1 += num;
    })?;
    Ok(counts
        .into_iter()
        .map(|(y, (xs, mass))| (y, ExactPmf::from_counts(&xs, mass)))
        .collect())
}

/// One value of `(N_m, M_m, K_m, V_m)`: diffuse class sizes in order of first
/// appearance and per-atom hit counts (`K` and `V` follow from `N`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub class_sizes: Vec<usize>,
    pub atom_hits: Vec<usize>,
}

impl Configuration {
    fn of(labels: &[Label], n: usize) -> Self {
        Self {
            class_sizes: class_counts(labels),
            atom_hits: atom_counts(labels, n),
        }
    }

    pub fn k(&self) -> usize {
        self.class_sizes.len()
    }

    pub fn v(&self) -> usize {
        self.class_sizes.iter().sum()
    }
}

/// Exact law of the configuration after `m` draws, with class sizes sorted
/// in decreasing order (so labels of the diffuse classes are forgotten).
pub fn oracle_joint_nmkv(n: usize, m: usize, theta: &BigRational) -> Result<BTreeMap<Configuration, BigRational>> {
    let mut counts: BTreeMap<Configuration, u128> = BTreeMap::new();
    let den = for_each_sequence(n, m, theta, |labels, num| {
        let mut c = Configuration::of(labels, n);
        c.class_sizes.sort_unstable_by(|a, b| b.cmp(a));
        *counts.entry(c).or_insert(0) += num;
    })?;
    Ok(counts.into_iter().map(|(c, num)| (c, ratio(num, den))).collect())
}

fn rational(x: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn factorial(n: usize) -> BigRational {
    (1..=n as u64).map(rational).fold(BigRational::one(), |a, b| a * b)
}

/// `(x)_(n) = x(x+1)...(x+n-1)`.
pub fn rising(x: &BigRational, n: usize) -> BigRational {
    (0..n as u64).fold(BigRational::one(), |acc, i| acc * (x + rational(i)))
}

/// `x(x-1)...(x-n+1)`.
pub fn falling(x: &BigRational, n: usize) -> BigRational {
    (0..n as u64).fold(BigRational::one(), |acc, i| acc * (x - rational(i)))
}

pub fn binomial(n: i64, k: i64) -> BigRational {
    if k < 0 || n < 0 || k > n {
        return BigRational::zero();
    }
    falling(&BigRational::from_integer(BigInt::from(n)), k as usize) / factorial(k as usize)
}

/// Product form of the joint law for a labelled configuration, diffuse
/// classes treated as exchangeable labels:
/// `θ^k/(θ+n)_(m) C(m,v) multinom(m-v; M) Π M_j! · (1/k!) multinom(v; N) Π (N_i-1)!`.
pub fn joint_nmkv_prob(config: &Configuration, theta: &BigRational) -> BigRational {
    let n = config.atom_hits.len();
    let v = config.v();
    let m = v + config.atom_hits.iter().sum::<usize>();
    let k = config.k();
    let theta_k = (0..k).fold(BigRational::one(), |a, _| a * theta);
    let multinom = |total: usize, parts: &[usize]| {
        parts.iter().fold(factorial(total), |a, &p| a / factorial(p))
    };
    let atoms = multinom(m - v, &config.atom_hits) * config.atom_hits.iter().fold(BigRational::one(), |a, &h| a * factorial(h));
    let classes = multinom(v, &config.class_sizes)
        * config.class_sizes.iter().fold(BigRational::one(), |a, &s| a * factorial(s - 1))
        / factorial(k);
    theta_k / rising(&(theta + rational(n as u64)), m) * binomial(m as i64, v as i64) * atoms * classes
}

/// `P[V_m = v] = C(m,v) (n)_(m-v) (θ)_(v) / (θ+n)_(m)`.
pub fn v_pmf_exact(n: usize, m: usize, theta: &BigRational) -> ExactPmf {
    let nn = rational(n as u64);
    let den = rising(&(theta + &nn), m);
    let probs = (0..=m)
        .map(|v| {
            let p = binomial(m as i64, v as i64) * rising(&nn, m - v) * rising(theta, v) / &den;
            (v, p)
        })
        .filter(|(_, p)| !p.is_zero())
        .collect();
    ExactPmf { probs }
}

/// `E[(R_{n,m})_[r]] = r!/(θ+n)_(m) Σ_s C(n-s,r-s) (-1)^s C(n,s) (θ+n-s)_(m)`.
pub fn factorial_moment_r_exact(r: usize, n: usize, m: usize, theta: &BigRational) -> BigRational {
    let nn = rational(n as u64);
    let mut sum = BigRational::zero();
    for s in 0..=r.min(n) {
        let term = binomial((n - s) as i64, (r - s) as i64)
            * binomial(n as i64, s as i64)
            * rising(&(theta + &nn - rational(s as u64)), m);
        if s % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    factorial(r) * sum / rising(&(theta + nn), m)
}

/// For every configuration of the first `m` draws, the exact conditional law
/// of the statistic after `m'` more draws, grouped by the value `y` of the
/// observed statistic. With `l = None` the statistic is `R_{n,m+m'}` grouped
/// by `R_{n,m}`; with `Some(l)` it is `R̃_{l,n,m'}` grouped by `R_{l,n,m}`.
pub fn conditional_laws_by_configuration(
    n: usize,
    m: usize,
    m_prime: usize,
    l: Option<usize>,
    theta: &BigRational,
) -> Result<BTreeMap<usize, Vec<(Configuration, ExactPmf)>>> {
    let mut counts: BTreeMap<Configuration, (usize, BTreeMap<usize, u128>, u128)> = BTreeMap::new();
    for_each_sequence(n, m + m_prime, theta, |labels, num| {
        let (first, rest) = labels.split_at(m);
        let (y, x) = match l {
            None => (r_of(first, n), r_of(labels, n)),
            Some(l) => (r_freq_of(first, n, l), r_tilde(first, rest, n, l)),
        };
        let e = counts
            .entry(Configuration::of(first, n))
            .or_insert_with(|| (y, BTreeMap::new(), 0));
        *e.1.entry(x).or_insert(0) += num;
        e.2 += num;
    })?;
    let mut groups: BTreeMap<usize, Vec<(Configuration, ExactPmf)>> = BTreeMap::new();
    for (config, (y, xs, mass)) in counts {
        groups
            .entry(y)
            .or_default()
            .push((config, ExactPmf::from_counts(&xs, mass)));
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ancestral::r_pmf;
    use crate::ewens::{esf_log_prob, AlleleConfiguration};
    use crate::numerics::signless_stirling1;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(d))
    }

    #[test]
    fn enumeration_examples() {
        let s = enumerate_sequences(0, 1, &q(7, 3)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].outcomes, vec![Label::Class(1)]);
        assert!(s[0].probability.is_one());
        let s = enumerate_sequences(1, 1, &q(1, 1)).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|d| d.probability == q(1, 2)));
        for (n, m, th) in [(2, 3, q(1, 1)), (3, 4, q(1, 2)), (0, 6, q(3, 1))] {
            let total = enumerate_sequences(n, m, &th)
                .unwrap()
                .iter()
                .fold(BigRational::zero(), |a, d| a + &d.probability);
            assert!(total.is_one());
        }
        assert!(matches!(
            enumerate_sequences(6, 7, &q(1, 1)),
            Err(Error::EnumerationTooLarge { size: 13, limit: 12 })
        ));
    }

    #[test]
    fn r_law_is_exact() {
        let p = oracle_pmf(Statistic::R { n: 2, m: 3 }, &q(1, 1)).unwrap();
        assert_eq!(p.get(0), q(1, 10));
        assert_eq!(p.get(1), q(6, 10));
        assert_eq!(p.get(2), q(3, 10));
        assert!(p.to_pmf().total_variation(&r_pmf(2, 3, 1.0).unwrap()) < 1e-15);
    }

    #[test]
    fn k_law_is_the_stirling_weighting() {
        for th in [q(1, 1), q(1, 2), q(3, 1)] {
            let p = oracle_pmf(Statistic::K { n: 0, m: 3 }, &th).unwrap();
            for k in 1..=3 {
                let s = rational(signless_stirling1(3, k).unwrap() as u64);
                let want = s * (0..k).fold(BigRational::one(), |a, _| a * &th) / rising(&th, 3);
                assert_eq!(p.get(k), want);
            }
        }
    }

    #[test]
    fn v_law_matches_product_form() {
        for (n, m, th) in [(2, 2, q(1, 1)), (3, 4, q(1, 2)), (1, 5, q(3, 1))] {
            let p = oracle_pmf(Statistic::V { n, m }, &th).unwrap();
            assert_eq!(p, v_pmf_exact(n, m, &th));
        }
    }

    #[test]
    fn joint_law_matches_product_form() {
        for (n, m, th) in [(2, 3, q(1, 1)), (1, 5, q(1, 2)), (3, 4, q(3, 1))] {
            let joint = oracle_joint_nmkv(n, m, &th).unwrap();
            let mut total = BigRational::zero();
            for (config, p) in &joint {
                // labelled arrangements of the diffuse class sizes
                let mut orderings = factorial(config.k());
                let mut mult: BTreeMap<usize, usize> = BTreeMap::new();
                for &s in &config.class_sizes {
                    *mult.entry(s).or_insert(0) += 1;
                }
                for &c in mult.values() {
                    orderings /= factorial(c);
                }
                assert_eq!(*p, joint_nmkv_prob(config, &th) * orderings, "{config:?}");
                total += p;
            }
            assert!(total.is_one());
        }
    }

    #[test]
    fn factorial_moments_are_exact() {
        for th in [q(1, 2), q(1, 1), q(3, 1)] {
            for n in 0..=5 {
                for m in 0..=5 {
                    let p = oracle_pmf(Statistic::R { n, m }, &th).unwrap();
                    for r in 0..=3 {
                        assert_eq!(p.factorial_moment(r), factorial_moment_r_exact(r, n, m, &th), "n={n} m={m} r={r}");
                    }
                }
            }
        }
    }

    #[test]
    fn esf_normalizes_over_m4() {
        let mut by_sizes: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let th = q(3, 2);
        for s in enumerate_sequences(0, 4, &th).unwrap() {
            let mut sizes = class_counts(&s.outcomes);
            let config = AlleleConfiguration::new(sizes.clone()).unwrap();
            // each labelled sequence has the partition probability
            assert!((s.probability.to_f64().unwrap() - esf_log_prob(&config, 1.5).exp()).abs() < 1e-15);
            sizes.sort_unstable();
            *by_sizes.entry(sizes).or_insert(0) += 1;
        }
        let total: f64 = by_sizes
            .iter()
            .map(|(sizes, &count)| esf_log_prob(&AlleleConfiguration::new(sizes.clone()).unwrap(), 1.5).exp() * count as f64)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(by_sizes.len(), 5);
    }

    #[test]
    fn conditional_family_matches_single_queries() {
        let th = q(1, 2);
        let fam = oracle_conditional_pmfs(Statistic::CondRFreq { l: 1, n: 3, m: 3, m_prime: 2, y: 0 }, &th).unwrap();
        assert!(!fam.is_empty());
        for (&y, p) in &fam {
            let single = oracle_pmf(Statistic::CondRFreq { l: 1, n: 3, m: 3, m_prime: 2, y }, &th).unwrap();
            assert_eq!(*p, single);
            assert!(p.total().is_one());
        }
        assert!(oracle_conditional_pmfs(Statistic::R { n: 1, m: 1 }, &th).is_err());
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational("4").unwrap(), q(4, 1));
        for bad in ["", "1/0", "-1/2", "0.5", "a/b"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn empty_condition_is_refused() {
        let stat = Statistic::CondR { n: 1, m: 2, m_prime: 1, y: 2 };
        assert!(matches!(oracle_pmf(stat, &q(1, 1)), Err(Error::ZeroMassCondition)));
    }

    #[test]
    fn conditional_laws_share_the_observed_statistic() {
        for l in [None, Some(1), Some(2)] {
            let groups = conditional_laws_by_configuration(2, 3, 2, l, &q(1, 2)).unwrap();
            for laws in groups.values() {
                assert!(laws.iter().all(|(_, p)| *p == laws[0].1));
            }
        }
    }
}
