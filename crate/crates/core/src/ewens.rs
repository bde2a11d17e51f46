//! Ewens sampling formula, the moment estimator of θ, the Hoppe urn and the
//! allele data-file format.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{log_factorial, log_rising_factorial};

/// Lower end of the θ bracket; also the value reported when `k = 1`.
pub const THETA_FLOOR: f64 = 1e-10;
pub const THETA_TOL: f64 = 1e-10;

/// Allele counts `(n_1, ..., n_k)` of an observed sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlleleConfiguration {
    counts: Vec<usize>,
}

impl AlleleConfiguration {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Data("allele configuration is empty".into()));
        }
        if counts.contains(&0) {
            return Err(Error::Data("allele counts must be positive".into()));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Sample size.
    pub fn m(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of distinct alleles.
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn to_partition(&self) -> AllelicPartition {
        let mut spectrum = BTreeMap::new();
        for &c in &self.counts {
            *spectrum.entry(c).or_insert(0) += 1;
        }
        AllelicPartition { spectrum }
    }
}

/// Frequency spectrum: multiplicity `l` maps to the number of alleles seen `l` times.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AllelicPartition {
    spectrum: BTreeMap<usize, usize>,
}

impl AllelicPartition {
    pub fn new(spectrum: BTreeMap<usize, usize>) -> Result<Self> {
        if spectrum.contains_key(&0) {
            return Err(Error::Data("multiplicity 0 is not allowed in a spectrum".into()));
        }
        let spectrum: BTreeMap<_, _> = spectrum.into_iter().filter(|&(_, c)| c > 0).collect();
        if spectrum.is_empty() {
            return Err(Error::Data("allelic partition is empty".into()));
        }
        Ok(Self { spectrum })
    }

    pub fn spectrum(&self) -> &BTreeMap<usize, usize> {
        &self.spectrum
    }

    pub fn m(&self) -> usize {
        self.spectrum.iter().map(|(l, c)| l * c).sum()
    }

    pub fn k(&self) -> usize {
        self.spectrum.values().sum()
    }

    /// Counts in ascending order of multiplicity.
    pub fn to_configuration(&self) -> AlleleConfiguration {
        let counts = self
            .spectrum
            .iter()
            .flat_map(|(&l, &c)| std::iter::repeat_n(l, c))
            .collect();
        AlleleConfiguration { counts }
    }
}

/// `ln[θ^k / (θ)_(m) · Π (n_i - 1)!]`, the probability of one particular
/// partition of a labelled sample into allele classes of the given sizes.
pub fn esf_log_prob(config: &AlleleConfiguration, theta: f64) -> f64 {
    let k = config.k() as f64;
    k * theta.ln() - log_rising_factorial(theta, config.m() as u64)
        + config.counts.iter().map(|&c| log_factorial(c as u64 - 1)).sum::<f64>()
}

/// `E[K_m] = Σ_{i<m} θ/(θ+i)`.
pub fn expected_k(m: usize, theta: f64) -> f64 {
    (0..m).map(|i| theta / (theta + i as f64)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaFit {
    pub theta: f64,
    /// Set when `k = 1` pushed the root onto the bracket floor.
    pub at_floor: bool,
}

/// Maximum-likelihood θ: the root of `E[K_m] = k`, by bisection.
pub fn theta_mle(config: &AlleleConfiguration) -> Result<ThetaFit> {
    let (m, k) = (config.m(), config.k());
    if k == m {
        return Err(Error::MleDiverges { m });
    }
    let kf = k as f64;
    let mut lo = THETA_FLOOR;
    if expected_k(m, lo) >= kf {
        return Ok(ThetaFit { theta: lo, at_floor: true });
    }
    let mut hi = 1.0;
    while expected_k(m, hi) < kf {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > THETA_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if expected_k(m, mid) < kf {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThetaFit {
        theta: 0.5 * (lo + hi),
        at_floor: false,
    })
}

/// Draws a configuration of size `m` from the Hoppe urn: draw `i+1` founds a new
/// class with probability `θ/(θ+i)`, otherwise joins a class chosen in
/// proportion to its size.
pub fn hoppe_sample_with<R: Rng + ?Sized>(m: usize, theta: f64, rng: &mut R) -> Result<AlleleConfiguration> {
    if m == 0 {
        return Err(Error::Domain("sample size m must be at least 1".into()));
    }
    let mut counts: Vec<usize> = Vec::new();
    for i in 0..m {
        let u = rng.random::<f64>() * (theta + i as f64);
        if u < theta {
            counts.push(1);
            continue;
        }
        let mut rest = u - theta;
        let mut chosen = counts.len() - 1;
        for (j, &c) in counts.iter().enumerate() {
            if rest < c as f64 {
                chosen = j;
                break;
            }
            rest -= c as f64;
        }
        counts[chosen] += 1;
    }
    AlleleConfiguration::new(counts)
}

pub fn hoppe_sample(m: usize, theta: f64, seed: u64) -> Result<AlleleConfiguration> {
    hoppe_sample_with(m, theta, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// On-disk form of an observed sample.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlleleData {
    name: Option<String>,
    counts: Option<Vec<u64>>,
    spectrum: Option<BTreeMap<String, u64>>,
    m: Option<u64>,
}

/// A parsed data file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlleleData {
    pub name: Option<String>,
    pub configuration: AlleleConfiguration,
    pub partition: AllelicPartition,
}

fn parse_multiplicity(key: &str) -> Result<usize> {
    let well_formed = !key.is_empty()
        && key.bytes().all(|b| b.is_ascii_digit())
        && !(key.len() > 1 && key.starts_with('0'));
    if !well_formed {
        return Err(Error::Data(format!("spectrum key {key:?} is not a base-10 integer")));
    }
    key.parse::<usize>()
        .map_err(|_| Error::Data(format!("spectrum key {key:?} is out of range")))
}

fn to_usize(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Data(format!("{what} {v} is out of range")))
}

/// Parses a JSON data file holding `counts` (a list of allele counts) or
/// `spectrum` (multiplicity to number of alleles), plus optional `name` and
/// `m`. Unknown fields are rejected. When several of `counts`, `spectrum` and
/// `m` are present they must agree.
pub fn parse_allele_data(text: &str) -> Result<AlleleData> {
    let raw: RawAlleleData = serde_json::from_str(text).map_err(|e| Error::Data(e.to_string()))?;
    let from_counts = raw
        .counts
        .map(|c| {
            let c = c.into_iter().map(|v| to_usize(v, "count")).collect::<Result<Vec<_>>>()?;
            AlleleConfiguration::new(c)
        })
        .transpose()?;
    let from_spectrum = raw
        .spectrum
        .map(|s| {
            let s = s
                .into_iter()
                .map(|(k, v)| Ok((parse_multiplicity(&k)?, to_usize(v, "class count")?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            AllelicPartition::new(s)
        })
        .transpose()?;
    let (configuration, partition) = match (from_counts, from_spectrum) {
        (Some(c), Some(p)) => {
            if c.to_partition() != p {
                return Err(Error::Data("counts and spectrum describe different samples".into()));
            }
            (c, p)
        }
        (Some(c), None) => {
            let p = c.to_partition();
            (c, p)
        }
        (None, Some(p)) => (p.to_configuration(), p),
        (None, None) => return Err(Error::Data("data file needs \"counts\" or \"spectrum\"".into())),
    };
    if let Some(m) = raw.m {
        if to_usize(m, "m")? != partition.m() {
            return Err(Error::Data(format!("declared m = {m} but the alleles sum to {}", partition.m())));
        }
    }
    Ok(AlleleData {
        name: raw.name,
        configuration,
        partition,
    })
}
