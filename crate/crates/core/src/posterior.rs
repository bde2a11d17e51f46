//! Predictive inference for an enlarged sample given the ancestry of an
//! observed one.

use serde::Serialize;

use crate::ancestral::{
    check_unit_scale, death_weights, lineage_pmf, parity, r_freq_series, r_pmf_log,
    singleton_core_terms, singleton_lineage_pmf, with_min_reliable_t, ModelParams,
};
use crate::error::{Error, Result};
use crate::numerics::{
    log_binomial, log_factorial, log_falling_factorial, log_rising_factorial, sum_finite,
    SignedLogValue, CANCELLATION_THRESHOLD,
};
use crate::pmf::Pmf;

/// Conditioning events less likely than this are refused.
pub const MIN_CONDITIONING_MASS: f64 = 1e-12;

/// Which statistic of the observed sample's ancestry is conditioned on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PosteriorMode {
    /// `D_m(t) = y`: all non-mutant lineages.
    Total,
    /// `D_{1,m}(t) = y`: lineages with a single descendant in the sample.
    Singleton,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PredictiveQuery {
    /// Observed sample size.
    pub m: usize,
    /// Size of the additional sample.
    pub m_prime: usize,
    /// Observed value of the conditioning statistic.
    pub y: usize,
    pub params: ModelParams,
}

impl PredictiveQuery {
    pub fn new(m: usize, m_prime: usize, y: usize, params: ModelParams) -> Result<Self> {
        if y > m {
            return Err(Error::Domain(format!("need y <= m, got y={y}, m={m}")));
        }
        Ok(Self { m, m_prime, y, params })
    }
}

fn check_y(y: usize, bound: usize, what: &str) -> Result<()> {
    if y > bound {
        return Err(Error::Domain(format!("{what}: y={y} exceeds its maximum {bound}")));
    }
    Ok(())
}

fn need_positive_t(params: &ModelParams) -> Result<()> {
    if params.t == 0.0 {
        return Err(Error::Domain("the n-posterior needs t > 0".into()));
    }
    Ok(())
}

/// `P[R_{n,m+m'} = x | R_{n,m} = y]` for `x = y ..= min(n, y+m')`.
pub fn cond_r_pmf(n: usize, m: usize, m_prime: usize, y: usize, theta: f64) -> Result<Pmf> {
    check_y(y, n.min(m), "cond_r_pmf")?;
    let log_den = log_rising_factorial(theta + (n + m) as f64, m_prime as u64);
    let probs = (y..=n.min(y + m_prime))
        .map(|x| {
            let d = x - y;
            (log_factorial(d as u64) + log_binomial((n - y) as u64, d as i64) + log_binomial(m_prime as u64, d as i64)
                + log_rising_factorial(theta + (m + x) as f64, (m_prime - d) as u64)
                - log_den)
                .exp()
        })
        .collect();
    Pmf::from_raw(y, probs, "conditional R pmf")
}

fn cond_r_freq_values(l: usize, n: usize, m: usize, m_prime: usize, y: usize, theta: f64) -> Result<Vec<f64>> {
    let base = theta + (n + m) as f64;
    let log_den = log_rising_factorial(base, m_prime as u64);
    (0..=y.min(m_prime))
        .map(|x| {
            let pre = log_binomial(y as u64, x as i64) - log_den;
            let res = sum_finite((y - x..=y).map(|i| {
                let lg = pre + log_binomial(x as u64, (y - i) as i64)
                    + log_rising_factorial(base - (i * (1 + l)) as f64, m_prime as u64);
                SignedLogValue::from_log(parity(i - (y - x)), lg)
            }));
            check_unit_scale(&res, || format!("P[R~_{{{l},{n},{m_prime}}} = {x} | y={y}]"))
        })
        .collect()
}

/// `P[R̃_{l,n,m'} = x | R_{l,n,m} = y]` for `x = 0 ..= min(y, m')`: how many of
/// the `y` atoms seen exactly `l` times are seen again in `m'` further draws.
pub fn cond_r_freq_pmf(l: usize, n: usize, m: usize, m_prime: usize, y: usize, theta: f64) -> Result<Pmf> {
    if l == 0 {
        return Err(Error::Domain("frequency l must be at least 1".into()));
    }
    check_y(y, n.min(m / l), "cond_r_freq_pmf")?;
    Pmf::from_raw(0, cond_r_freq_values(l, n, m, m_prime, y, theta)?, "conditional R_l pmf")
}

/// `E[(R_{n,m+m'})_[r] | R_{n,m} = y]`.
pub fn factorial_moment_r(r: usize, n: usize, m: usize, m_prime: usize, y: usize, theta: f64) -> Result<f64> {
    check_y(y, n.min(m), "factorial_moment_r")?;
    if r > n {
        return Ok(0.0);
    }
    let base = theta + (n + m) as f64;
    let pre = log_factorial(r as u64) - log_rising_factorial(base, m_prime as u64);
    let res = sum_finite((0..=r.min(n - y)).map(|s| {
        let lg = pre + log_binomial((n - s) as u64, (r - s) as i64) + log_binomial((n - y) as u64, s as i64)
            + log_rising_factorial(base - s as f64, m_prime as u64);
        SignedLogValue::from_log(parity(s), lg)
    }));
    check_unit_scale(&res, || "conditional factorial moment".into())
}

/// `E[(R̃_{l,n,m'})_[r] | R_{l,n,m} = y]`.
pub fn factorial_moment_r_freq(
    r: usize,
    l: usize,
    n: usize,
    m: usize,
    m_prime: usize,
    y: usize,
    theta: f64,
) -> Result<f64> {
    if l == 0 {
        return Err(Error::Domain("frequency l must be at least 1".into()));
    }
    check_y(y, n.min(m / l), "factorial_moment_r_freq")?;
    let fall = log_falling_factorial(y as f64, r as u64);
    if fall.is_zero() {
        return Ok(0.0);
    }
    let base = theta + (n + m) as f64;
    let log_den = log_rising_factorial(base, m_prime as u64);
    let res = sum_finite((0..=r).map(|s| {
        let lg = log_binomial(r as u64, s as i64) + log_rising_factorial(base - (s * (1 + l)) as f64, m_prime as u64)
            - log_den;
        SignedLogValue::from_log(parity(s), lg)
    }));
    Ok(check_unit_scale(&res, || "conditional frequency factorial moment".into())? * fall.to_real())
}

/// Unnormalized posterior weights `d_n(t) P[statistic = y | n]` and their sum.
fn posterior_weights(m: usize, y: usize, params: &ModelParams, mode: PosteriorMode) -> Result<(Vec<(usize, f64)>, f64, f64)> {
    let prior = death_weights(params)?;
    let tail = (1.0 - prior.iter().map(|(_, d)| d).sum::<f64>()).abs();
    let mut weights = Vec::new();
    let mut noise = 0.0;
    for (n, d) in prior {
        if n < y {
            continue;
        }
        let like = match mode {
            PosteriorMode::Total => r_pmf_log(n, m, y, params.theta).exp(),
            PosteriorMode::Singleton => {
                if y > n.min(m) {
                    0.0
                } else {
                    let res = r_freq_series(1, n, m, y, params.theta);
                    noise += d * res.max_log_magnitude.exp();
                    res.value
                }
            }
        };
        weights.push((n, d * like));
    }
    let marginal: f64 = weights.iter().map(|(_, w)| w).sum();
    if noise > 0.0 && marginal / noise < CANCELLATION_THRESHOLD {
        return Err(Error::IllConditioned {
            context: format!("singleton likelihood for y={y}, m={m}"),
            min_reliable_t: None,
        });
    }
    if !(marginal >= MIN_CONDITIONING_MASS) {
        return Err(Error::NegligibleConditioningMass { mass: marginal });
    }
    for (_, w) in weights.iter_mut() {
        *w = w.max(0.0);
    }
    Ok((weights, marginal, tail))
}

fn n_posterior_inner(m: usize, y: usize, params: &ModelParams, mode: PosteriorMode) -> Result<Pmf> {
    let (weights, _, tail) = posterior_weights(m, y, params, mode)?;
    let offset = weights.first().map_or(y, |(n, _)| *n);
    Ok(Pmf::from_weights(offset, weights.into_iter().map(|(_, w)| w).collect(), tail))
}

/// `P[D(t) = n | D_m(t) = y]` (or given `D_{1,m}(t) = y` in singleton mode).
pub fn n_posterior(m: usize, y: usize, params: &ModelParams, mode: PosteriorMode) -> Result<Pmf> {
    check_y(y, m, "n_posterior")?;
    need_positive_t(params)?;
    with_min_reliable_t(params, |p| n_posterior_inner(m, y, p, mode))
}

/// `P[D_{m+m'}(t) = x | D_m(t) = y]` as the n-posterior mixture of
/// [`cond_r_pmf`], supported on `y ..= y+m'`.
pub fn predictive_lineage_pmf(q: &PredictiveQuery) -> Result<Pmf> {
    let PredictiveQuery { m, m_prime, y, params } = *q;
    check_y(y, m, "predictive_lineage_pmf")?;
    if m_prime == 0 {
        return Ok(Pmf::point_mass(y));
    }
    if params.t == 0.0 {
        return predictive_lineage_pmf_closed(q);
    }
    with_min_reliable_t(&params, |p| {
        let (weights, marginal, tail) = posterior_weights(m, y, p, PosteriorMode::Total)?;
        let mut probs = vec![0.0; m_prime + 1];
        for (n, w) in weights {
            let cond = cond_r_pmf(n, m, m_prime, y, p.theta)?;
            for (x, v) in cond.iter() {
                probs[x - y] += w / marginal * v;
            }
        }
        let mut pmf = Pmf::from_raw(y, probs, "predictive lineage pmf")?;
        pmf.mass_defect = pmf.mass_defect.max(tail);
        Ok(pmf)
    })
}

/// The closed form of the lineage predictive at a single `x`; zero outside
/// `y ..= y+m'`.
pub fn predictive_lineage_closed_value(q: &PredictiveQuery, x: usize, prior_m: &Pmf, prior_mm: &Pmf) -> Result<f64> {
    let PredictiveQuery { m, m_prime, y, params } = *q;
    let theta = params.theta;
    let py = prior_m.get(y);
    if !(py >= MIN_CONDITIONING_MASS) {
        return Err(Error::NegligibleConditioningMass { mass: py });
    }
    if x < y || x > y + m_prime {
        return Ok(0.0);
    }
    let lg = log_binomial(m as u64, y as i64) + log_binomial(m_prime as u64, (x - y) as i64)
        + log_rising_factorial(theta + y as f64, (x - y) as u64)
        + log_rising_factorial(theta + (m + m_prime) as f64, y as u64)
        - log_binomial((m + m_prime) as u64, x as i64)
        - log_rising_factorial(theta + m as f64, x as u64);
    Ok(lg.exp() * prior_mm.get(x) / py)
}

fn prior_lineages(m: usize, params: &ModelParams) -> Result<Pmf> {
    if m == 0 {
        Ok(Pmf::point_mass(0))
    } else {
        lineage_pmf(m, params)
    }
}

/// [`predictive_lineage_pmf`] from the closed form in terms of the prior laws
/// of `D_m(t)` and `D_{m+m'}(t)`.
pub fn predictive_lineage_pmf_closed(q: &PredictiveQuery) -> Result<Pmf> {
    let PredictiveQuery { m, m_prime, y, params } = *q;
    check_y(y, m, "predictive_lineage_pmf")?;
    if m_prime == 0 {
        return Ok(Pmf::point_mass(y));
    }
    let prior_m = prior_lineages(m, &params)?;
    let prior_mm = lineage_pmf(m + m_prime, &params)?;
    let probs = (y..=y + m_prime)
        .map(|x| predictive_lineage_closed_value(q, x, &prior_m, &prior_mm))
        .collect::<Result<Vec<_>>>()?;
    Pmf::from_raw(y, probs, "closed-form predictive lineage pmf")
}

/// `P[D̃_{1,m'}(t) = x | D_{1,m}(t) = y]`: how many of the `y` singleton
/// lineages are also ancestral to an additional sample of size `m'`, as the
/// n-posterior mixture of [`cond_r_freq_pmf`].
pub fn predictive_singleton_pmf(q: &PredictiveQuery) -> Result<Pmf> {
    let PredictiveQuery { m, m_prime, y, params } = *q;
    check_y(y, m, "predictive_singleton_pmf")?;
    if m_prime == 0 {
        return Ok(Pmf::point_mass(0));
    }
    if params.t == 0.0 {
        return singleton_at_zero(m, y);
    }
    with_min_reliable_t(&params, |p| {
        let (weights, marginal, tail) = posterior_weights(m, y, p, PosteriorMode::Singleton)?;
        let mut probs = vec![0.0; y.min(m_prime) + 1];
        for (n, w) in weights {
            if w == 0.0 {
                continue;
            }
            for (x, v) in cond_r_freq_values(1, n, m, m_prime, y, p.theta)?.into_iter().enumerate() {
                probs[x] += w / marginal * v;
            }
        }
        let mut pmf = Pmf::from_raw(0, probs, "predictive singleton pmf")?;
        pmf.mass_defect = pmf.mass_defect.max(tail);
        Ok(pmf)
    })
}

/// At `t = 0` every sampled individual is its own lineage: `D_{1,m}(0) = m`
/// and no lineage is shared with the additional sample.
fn singleton_at_zero(m: usize, y: usize) -> Result<Pmf> {
    if y == m {
        Ok(Pmf::point_mass(0))
    } else {
        Err(Error::NegligibleConditioningMass { mass: 0.0 })
    }
}

/// [`predictive_singleton_pmf`] from the closed quadruple sum.
pub fn predictive_singleton_pmf_closed(q: &PredictiveQuery) -> Result<Pmf> {
    let PredictiveQuery { m, m_prime, y, params } = *q;
    check_y(y, m, "predictive_singleton_pmf")?;
    if m_prime == 0 {
        return Ok(Pmf::point_mass(0));
    }
    if params.t == 0.0 {
        return singleton_at_zero(m, y);
    }
    with_min_reliable_t(&params, |p| {
        let py = singleton_lineage_pmf(m, p)?.get(y);
        if !(py >= MIN_CONDITIONING_MASS) {
            return Err(Error::NegligibleConditioningMass { mass: py });
        }
        let probs = (0..=y.min(m_prime))
            .map(|x| {
                let terms = (y - x..=y).flat_map(|k| {
                    let outer = SignedLogValue::from_log(
                        parity(x) * parity(y - k),
                        log_binomial(y as u64, x as i64) + log_binomial(x as u64, (y - k) as i64) - py.ln(),
                    );
                    singleton_core_terms(m, m_prime, y, Some(k), *p).map(move |v| outer * v)
                });
                let res = sum_finite(terms);
                check_unit_scale(&res, || format!("closed-form predictive singleton at x={x}"))
            })
            .collect::<Result<Vec<_>>>()?;
        Pmf::from_raw(0, probs, "closed-form predictive singleton pmf")
    })
}

/// Probability that one further draw reveals a non-mutant lineage not
/// ancestral to the observed sample, given `D_m(t) = y`.
pub fn gt_new_lineage_prob(m: usize, y: usize, params: &ModelParams) -> Result<f64> {
    check_y(y, m, "gt_new_lineage_prob")?;
    let theta = params.theta;
    let prior_m = lineage_pmf(m, params)?;
    let py = prior_m.get(y);
    if !(py >= MIN_CONDITIONING_MASS) {
        return Err(Error::NegligibleConditioningMass { mass: py });
    }
    let up = lineage_pmf(m + 1, params)?.get(y + 1);
    let (mf, yf) = (m as f64, y as f64);
    Ok((yf + 1.0) * (theta + yf) * up / ((mf + 1.0) * (theta + mf) * py))
}

/// Probability that one further draw is ancestrally linked to one of the `y`
/// singleton lineages, given `D_{1,m}(t) = y`.
pub fn gt_singleton_prob(m: usize, y: usize, params: &ModelParams) -> Result<f64> {
    check_y(y, m, "gt_singleton_prob")?;
    if y == 0 {
        return Ok(0.0);
    }
    need_positive_t(params)?;
    with_min_reliable_t(params, |p| {
        let py = singleton_lineage_pmf(m, p)?.get(y);
        if !(py >= MIN_CONDITIONING_MASS) {
            return Err(Error::NegligibleConditioningMass { mass: py });
        }
        let res = sum_finite(singleton_core_terms(m, 1, y, None, *p));
        if !res.converged || res.scale_ratio(py.ln()) < CANCELLATION_THRESHOLD {
            return Err(Error::IllConditioned {
                context: format!("singleton discovery sum at m={m}, y={y}"),
                min_reliable_t: None,
            });
        }
        Ok(2.0 * y as f64 * res.value / py)
    })
}
