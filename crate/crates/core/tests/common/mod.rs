#![allow(dead_code)]

use coalescent::ancestral::ModelParams;
use coalescent::pmf::Pmf;
use coalescent::simulator::Histogram;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn params(theta: f64, t: f64) -> ModelParams {
    ModelParams::new(theta, t).unwrap()
}

pub fn within_3sigma(got: f64, p: f64, n: u64) -> bool {
    (got - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12
}

fn chi2_p(stat: f64, cells: usize) -> f64 {
    if cells < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// Goodness-of-fit p-value of a histogram against a pmf, pooling adjacent
/// bins until each expected count is at least 5.
pub fn chi_square_gof(observed: &Histogram, pmf: &Pmf) -> f64 {
    let n = observed.total as f64;
    let end = observed.counts.len().max(pmf.support_end());
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for x in 0..end {
        o += observed.count(x) as f64;
        e += n * pmf.get(x);
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    match cells.last_mut() {
        Some(last) => {
            last.0 += o;
            last.1 += e;
        }
        None => cells.push((o, e)),
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    chi2_p(stat, cells.len())
}

/// Two-sample chi-square p-value, pooling bins until each cell holds at
/// least 10 observations in total.
pub fn chi_square_two_sample(a: &Histogram, b: &Histogram) -> f64 {
    let (na, nb) = (a.total as f64, b.total as f64);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let end = a.counts.len().max(b.counts.len());
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut ca, mut cb) = (0.0, 0.0);
    for x in 0..end {
        ca += a.count(x) as f64;
        cb += b.count(x) as f64;
        if ca + cb >= 10.0 {
            cells.push((ca, cb));
            ca = 0.0;
            cb = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += ca;
        last.1 += cb;
    }
    let stat: f64 = cells
        .iter()
        .map(|&(x, y)| (ka * x - kb * y).powi(2) / (x + y))
        .sum();
    chi2_p(stat, cells.len())
}

/// Draws from a pmf by inversion.
pub fn sample_pmf<R: Rng + ?Sized>(pmf: &Pmf, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (x, p) in pmf.iter() {
        acc += p;
        if u < acc {
            return x;
        }
    }
    pmf.support_end() - 1
}
