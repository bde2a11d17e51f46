//! Prior distributions of ancestral lineage counts and the urn statistics they
//! mix over.

use std::iter;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    log_binomial, log_factorial, log_rising_factorial, sum_finite, sum_series, SeriesResult, SignedLogValue,
    CANCELLATION_THRESHOLD,
};
use crate::pmf::Pmf;

/// Stop growing the death-process support once `d_n` falls below this ...
pub const DEATH_TAIL_PROB: f64 = 1e-14;
/// ... and the accumulated mass exceeds `1 - DEATH_TAIL_MASS`.
pub const DEATH_TAIL_MASS: f64 = 1e-10;
pub const DEATH_N_CAP: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    /// Scaled mutation rate.
    pub theta: f64,
    /// Time back from the present, in coalescent units.
    pub t: f64,
}

impl ModelParams {
    pub fn new(theta: f64, t: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Domain(format!("theta must be positive and finite, got {theta}")));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("t must be non-negative and finite, got {t}")));
        }
        Ok(Self { theta, t })
    }

    pub fn with_t(self, t: f64) -> Self {
        Self { t, ..self }
    }
}

/// `λ_n = n(n-1+θ)/2`.
pub fn death_rate(n: usize, theta: f64) -> f64 {
    let n = n as f64;
    n * (n - 1.0 + theta) / 2.0
}

/// `ρ_i(t) = (-1)^i (2i-1+θ) e^{-λ_i t}`.
pub fn rho(i: usize, params: &ModelParams) -> SignedLogValue {
    let c = 2.0 * i as f64 - 1.0 + params.theta;
    let sign = if i % 2 == 0 { 1 } else { -1 };
    SignedLogValue::from_real(c).scale_log(-death_rate(i, params.theta) * params.t) * SignedLogValue::from_log(sign, 0.0)
}

pub(crate) fn parity(k: usize) -> i8 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Terms `first, first·r_{i0}, ...` of a series in `ρ_i(t)` where consecutive
/// terms differ by `-(2i+1+θ)/(2i-1+θ) e^{-(i+θ/2)t} · extra(i)`.
pub(crate) fn rho_series(
    first: SignedLogValue,
    i0: usize,
    i_end: Option<usize>,
    params: ModelParams,
    extra: impl Fn(f64) -> f64,
) -> impl Iterator<Item = SignedLogValue> {
    let ModelParams { theta, t } = params;
    iter::successors(Some((i0, first)), move |&(i, term)| {
        if i_end.is_some_and(|e| i >= e) || term.is_zero() {
            return None;
        }
        let fi = i as f64;
        let r = (2.0 * fi + 1.0 + theta) / (2.0 * fi - 1.0 + theta) * extra(fi);
        Some((i + 1, -(term * SignedLogValue::from_real(r)).scale_log(-(fi + theta / 2.0) * t)))
    })
    .map(|(_, v)| v)
}

/// The series for `d_n(t)`.
fn death_series(n: usize, params: ModelParams) -> SeriesResult {
    let theta = params.theta;
    let nf = n as f64;
    let i0 = n.max(1);
    let log0 = (2.0 * i0 as f64 - 1.0 + theta).ln() - death_rate(i0, theta) * params.t
        + log_binomial(i0 as u64, n as i64)
        + log_rising_factorial(nf + theta, (i0 - 1) as u64)
        - log_factorial(i0 as u64);
    let first = SignedLogValue::from_log(parity(i0 + n), log0);
    let head = (n == 0).then_some(SignedLogValue::ONE);
    let tail = rho_series(first, i0, None, params, move |fi| (nf + theta + fi - 1.0) / (fi + 1.0 - nf));
    sum_series(head.into_iter().chain(tail))
}

pub(crate) fn check_unit_scale(res: &SeriesResult, what: impl FnOnce() -> String) -> Result<f64> {
    if !res.converged {
        return Err(Error::NotConverged { terms: res.terms_used });
    }
    if res.scale_ratio(0.0) < CANCELLATION_THRESHOLD {
        return Err(Error::IllConditioned {
            context: what(),
            min_reliable_t: None,
        });
    }
    Ok(res.value)
}

fn is_reliable<T>(r: &Result<T>) -> bool {
    !matches!(r, Err(Error::IllConditioned { .. } | Error::MassDefect { .. }))
}

/// Runs `f` and, if it fails for conditioning reasons, attaches the smallest
/// horizon at which it succeeds (found by doubling then bisection).
pub(crate) fn with_min_reliable_t<T>(
    params: &ModelParams,
    f: impl Fn(&ModelParams) -> Result<T>,
) -> Result<T> {
    let res = f(params);
    let context = match res {
        Err(Error::IllConditioned { context, min_reliable_t: None }) => context,
        Err(Error::MassDefect { context, defect }) => format!("{context} (mass defect {defect:e})"),
        other => return other,
    };
    let ok = |t: f64| is_reliable(&f(&params.with_t(t)));
    let mut lo = params.t;
    let mut hi = (2.0 * params.t).max(1e-3);
    let mut found = true;
    while !ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            found = false;
            break;
        }
    }
    if found {
        while hi - lo > 1e-3 * hi {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    Err(Error::IllConditioned {
        context,
        min_reliable_t: found.then_some(hi),
    })
}

/// `d_n(t)`, the probability that the whole-population ancestral process has
/// `n` lineages at time `t`.
pub fn death_prob(n: usize, params: &ModelParams) -> Result<f64> {
    if params.t == 0.0 {
        return Err(Error::Domain("d_n(0) is undefined: the ancestral process starts at infinity".into()));
    }
    let res = death_series(n, *params);
    check_unit_scale(&res, || format!("d_{n}(t) at theta={}, t={}", params.theta, params.t))
}

fn ancestral_pmf_inner(params: &ModelParams) -> Result<Pmf> {
    let mut probs = Vec::new();
    let mut mass = 0.0;
    // Rounding noise of each d_n is a few ulps of its largest series term.
    let mut noise = 0.0;
    for n in 0..=DEATH_N_CAP {
        let res = death_series(n, *params);
        let d = check_unit_scale(&res, || format!("d_{n}(t) at theta={}, t={}", params.theta, params.t))?;
        noise += 4.0 * f64::EPSILON * res.max_log_magnitude.exp().max(d.abs());
        probs.push(d);
        mass += d;
        if n > 0 && d.abs() < DEATH_TAIL_PROB && mass > 1.0 - DEATH_TAIL_MASS.max(noise) {
            return Pmf::from_raw(0, probs, "death process");
        }
    }
    Err(Error::NotConverged { terms: DEATH_N_CAP })
}

/// The law of the whole-population ancestral process `D(t)`, with support grown
/// until the tail is negligible.
pub fn ancestral_pmf(params: &ModelParams) -> Result<Pmf> {
    if params.t == 0.0 {
        return Err(Error::Domain("D(0) is infinite; ancestral_pmf needs t > 0".into()));
    }
    with_min_reliable_t(params, ancestral_pmf_inner)
}

/// The series for `P[D_m(t) = x]`.
fn lineage_series(m: usize, x: usize, params: ModelParams) -> SeriesResult {
    let theta = params.theta;
    let (mf, xf) = (m as f64, x as f64);
    let i0 = x.max(1);
    let log0 = (2.0 * i0 as f64 - 1.0 + theta).ln() - death_rate(i0, theta) * params.t
        + log_binomial(m as u64, i0 as i64)
        + log_binomial(i0 as u64, x as i64)
        + log_rising_factorial(xf + theta, (i0 - 1) as u64)
        - log_rising_factorial(theta + mf, i0 as u64);
    let first = SignedLogValue::from_log(parity(i0 + x), log0);
    let head = (x == 0).then_some(SignedLogValue::ONE);
    let tail = rho_series(first, i0, Some(m), params, move |fi| {
        (mf - fi) / (fi + 1.0 - xf) * (xf + theta + fi - 1.0) / (theta + mf + fi)
    });
    sum_finite(head.into_iter().chain(tail))
}

fn lineage_pmf_inner(m: usize, params: &ModelParams) -> Result<Pmf> {
    let probs = (0..=m)
        .map(|x| {
            check_unit_scale(&lineage_series(m, x, *params), || {
                format!("P[D_{m}(t) = {x}] at theta={}, t={}", params.theta, params.t)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Pmf::from_raw(0, probs, "lineage pmf")
}

/// Law of `D_m(t)`, the number of non-mutant lineages at time `t` ancestral to
/// a sample of size `m`.
pub fn lineage_pmf(m: usize, params: &ModelParams) -> Result<Pmf> {
    if m == 0 {
        return Err(Error::Domain("sample size m must be at least 1".into()));
    }
    if params.t == 0.0 {
        return Ok(Pmf::point_mass(m));
    }
    with_min_reliable_t(params, |p| lineage_pmf_inner(m, p))
}

/// `E[D_m(t)]` from its closed form, a sum of positive terms.
pub fn lineage_mean(m: usize, params: &ModelParams) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("sample size m must be at least 1".into()));
    }
    if params.t == 0.0 {
        return Ok(m as f64);
    }
    let theta = params.theta;
    let mf = m as f64;
    let log0 = (1.0 + theta).ln() - death_rate(1, theta) * params.t + mf.ln() - (theta + mf).ln();
    let first = SignedLogValue::from_log(1, log0);
    // The generic step carries a minus sign that the (-1)^i of ρ_i cancels here.
    let terms = rho_series(first, 1, Some(m), *params, move |fi| (mf - fi) / (theta + mf + fi))
        .enumerate()
        .map(|(k, v)| if k % 2 == 0 { v } else { -v });
    let res = sum_series(terms);
    if !res.converged {
        return Err(Error::NotConverged { terms: res.terms_used });
    }
    Ok(res.value)
}

/// `P[T_r <= t] = P[D_m(t) <= r]`: the time for the sample's non-mutant
/// ancestry to drop to `r` lineages is at most `t`.
pub fn tmrca_cdf(m: usize, r: usize, params: &ModelParams) -> Result<f64> {
    if r == 0 || r > m {
        return Err(Error::Domain(format!("need 1 <= r <= m, got r={r}, m={m}")));
    }
    Ok(lineage_pmf(m, params)?.cdf(r).min(1.0))
}

/// Law of `R_{n,m}`, the number of `n` unit atoms hit by `m` draws from the
/// posterior Dirichlet process.
pub fn r_pmf(n: usize, m: usize, theta: f64) -> Result<Pmf> {
    Pmf::from_raw(0, r_pmf_raw(n, m, theta), "R pmf")
}

pub(crate) fn r_pmf_log(n: usize, m: usize, x: usize, theta: f64) -> f64 {
    if x > n.min(m) {
        return f64::NEG_INFINITY;
    }
    let xf = x as f64;
    log_factorial(x as u64) + log_binomial(n as u64, x as i64) + log_binomial(m as u64, x as i64)
        + log_rising_factorial(theta + xf, (m - x) as u64)
        - log_rising_factorial(theta + n as f64, m as u64)
}

fn r_pmf_raw(n: usize, m: usize, theta: f64) -> Vec<f64> {
    (0..=n.min(m)).map(|x| r_pmf_log(n, m, x, theta).exp()).collect()
}

/// Alternating sum for `P[R_{l,n,m} = x]`.
pub(crate) fn r_freq_series(l: usize, n: usize, m: usize, x: usize, theta: f64) -> SeriesResult {
    let top = n.min(m / l);
    let pre = log_factorial(m as u64) - log_rising_factorial(theta + n as f64, m as u64);
    sum_finite((x..=top).map(|i| {
        let rest = m - i * l;
        let lg = pre + log_binomial(i as u64, x as i64) + log_binomial(n as u64, i as i64)
            + log_rising_factorial(theta + (n - i) as f64, rest as u64)
            - log_factorial(rest as u64);
        SignedLogValue::from_log(parity(i - x), lg)
    }))
}

fn r_freq_checked(l: usize, n: usize, m: usize, theta: f64) -> Result<Vec<f64>> {
    (0..=n.min(m / l))
        .map(|x| {
            check_unit_scale(&r_freq_series(l, n, m, x, theta), || {
                format!("P[R_{{{l},{n},{m}}} = {x}] at theta={theta}")
            })
        })
        .collect()
}

/// Law of `R_{l,n,m}`, the number of the `n` atoms hit exactly `l` times.
pub fn r_freq_pmf(l: usize, n: usize, m: usize, theta: f64) -> Result<Pmf> {
    if l == 0 {
        return Err(Error::Domain("frequency l must be at least 1".into()));
    }
    Pmf::from_raw(0, r_freq_checked(l, n, m, theta)?, "R_l pmf")
}

/// Weights `d_n(t)` of the death process, paired with their `n`.
pub(crate) fn death_weights(params: &ModelParams) -> Result<Vec<(usize, f64)>> {
    Ok(ancestral_pmf(params)?.iter().collect())
}

/// Law of `D_{l,m}(t)`, the number of non-mutant lineages with `l` descendants
/// in the sample, as the `d_n(t)` mixture of `R_{l,n,m}`.
pub fn frequency_lineage_pmf(l: usize, m: usize, params: &ModelParams) -> Result<Pmf> {
    if l == 0 || m == 0 {
        return Err(Error::Domain("need l >= 1 and m >= 1".into()));
    }
    if params.t == 0.0 {
        return Ok(Pmf::point_mass(if l == 1 { m } else { 0 }));
    }
    with_min_reliable_t(params, |p| {
        let weights = death_weights(p)?;
        let mut probs = vec![0.0; m / l + 1];
        for (n, d) in weights {
            for (x, v) in r_freq_checked(l, n, m, p.theta)?.into_iter().enumerate() {
                probs[x] += d * v;
            }
        }
        Pmf::from_raw(0, probs, "frequency lineage pmf")
    })
}

/// Law of `D_{1,m}(t)`, the number of non-mutant lineages with exactly one
/// descendant in the sample.
pub fn singleton_lineage_pmf(m: usize, params: &ModelParams) -> Result<Pmf> {
    frequency_lineage_pmf(1, m, params)
}

/// `P[D_{1,m}(t) = x]` from its closed triple sum rather than the mixture.
/// The sum is alternating and only trustworthy for small `m`.
pub fn singleton_lineage_pmf_closed(m: usize, params: &ModelParams) -> Result<Pmf> {
    if m == 0 {
        return Err(Error::Domain("sample size m must be at least 1".into()));
    }
    if params.t == 0.0 {
        return Ok(Pmf::point_mass(m));
    }
    with_min_reliable_t(params, |p| {
        let probs = (0..=m)
            .map(|x| {
                let res = sum_finite(singleton_core_terms(m, 0, x, None, *p));
                check_unit_scale(&res, || format!("closed-form P[D_{{1,{m}}}(t) = {x}]"))
            })
            .collect::<Result<Vec<_>>>()?;
        Pmf::from_raw(0, probs, "closed-form singleton pmf")
    })
}

/// Terms of the closed triple sum shared by the singleton formulas:
///
/// `Σ_{j=y}^{m} (-1)^{j-y} C(j,y) C(m,j) Σ_{i=j}^{m+m'} ρ_i/(i-j)!
///   Σ_{n=j}^{i} (-1)^n C(i-j,i-n) (θ+n-j)_(m-j) f_k(n) / (θ+n+i-1)_(m+m'-i+1)`
///
/// where `f_k(n) = (θ+n+m-2k)_(m')` when `k` is given and `1` otherwise. With
/// `m' = 0` this is `P[D_{1,m}(t) = y]`.
pub(crate) fn singleton_core_terms(
    m: usize,
    m_prime: usize,
    y: usize,
    k: Option<usize>,
    params: ModelParams,
) -> impl Iterator<Item = SignedLogValue> {
    let theta = params.theta;
    let top = m + m_prime;
    let mf = m as f64;
    let extra = move |n: f64| match k {
        Some(k) => log_rising_factorial(theta + n + mf - 2.0 * k as f64, m_prime as u64),
        None => 0.0,
    };
    (y..=m).flat_map(move |j| {
        (j..=top).flat_map(move |i| {
            (j..=i).map(move |n| {
                if i == 0 {
                    // ρ_0 (θ)_(m) f_k(0) / (θ-1)_(m+m'+1), with the θ-1 cancelled.
                    let lg = log_rising_factorial(theta, m as u64) + extra(0.0)
                        - log_rising_factorial(theta, top as u64);
                    return SignedLogValue::from_log(1, lg);
                }
                let (nf, jf) = (n as f64, j as f64);
                let lg = log_binomial(j as u64, y as i64) + log_binomial(m as u64, j as i64)
                    + rho(i, &params).log_magnitude()
                    - log_factorial((i - j) as u64)
                    + log_binomial((i - j) as u64, (i - n) as i64)
                    + log_rising_factorial(theta + nf - jf, (m - j) as u64)
                    + extra(nf)
                    - log_rising_factorial(theta + nf + i as f64 - 1.0, (top + 1 - i) as u64);
                SignedLogValue::from_log(parity(j - y) * parity(i) * parity(n), lg)
            })
        })
    })
}
