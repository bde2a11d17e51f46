//! Signed log-space arithmetic, combinatorial primitives and compensated
//! summation of alternating series.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Results whose cancellation ratio falls below this are treated as ill-conditioned.
pub const CANCELLATION_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_RTOL: f64 = 1e-12;
pub const DEFAULT_ATOL: f64 = 1e-300;
pub const DEFAULT_MAX_TERMS: usize = 10_000;

/// A real number stored as a sign and the natural log of its magnitude.
///
/// The log is kept as an unevaluated sum `hi + lo` so that magnitudes near
/// `1e±300` survive a round trip at full double precision.
#[derive(Clone, Copy, PartialEq)]
pub struct SignedLogValue {
    sign: i8,
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

impl SignedLogValue {
    pub const ZERO: Self = Self {
        sign: 0,
        hi: f64::NEG_INFINITY,
        lo: 0.0,
    };
    pub const ONE: Self = Self {
        sign: 1,
        hi: 0.0,
        lo: 0.0,
    };

    fn normalized(sign: i8, hi: f64, lo: f64) -> Self {
        if sign == 0 || hi == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        if !hi.is_finite() || !lo.is_finite() {
            return Self { sign, hi: hi + lo, lo: 0.0 };
        }
        let (hi, lo) = two_sum(hi, lo);
        Self { sign, hi, lo }
    }

    /// Builds a value from a sign in {-1, 0, 1} and `ln|x|`.
    pub fn from_log(sign: i8, log_magnitude: f64) -> Self {
        Self::normalized(sign.signum(), log_magnitude, 0.0)
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            return Self::ZERO;
        }
        let sign = if x < 0.0 { -1 } else { 1 };
        let a = x.abs();
        let hi = a.ln();
        let e = hi.exp();
        let lo = if e.is_finite() && e > 0.0 { (a - e) / e } else { 0.0 };
        Self::normalized(sign, hi, lo)
    }

    pub fn to_real(self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let e = self.hi.exp();
        if e.is_infinite() || e == 0.0 {
            return f64::from(self.sign) * e;
        }
        f64::from(self.sign) * e.mul_add(self.lo, e)
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// `ln|x|`; negative infinity for zero.
    pub fn log_magnitude(self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.hi + self.lo
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        Self { sign: self.sign.abs(), ..self }
    }

    /// Multiplies by `e^delta`.
    pub fn scale_log(self, delta: f64) -> Self {
        if self.sign == 0 {
            return self;
        }
        let (s, e) = two_sum(self.hi, delta);
        Self::normalized(self.sign, s, e + self.lo)
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        Self::normalized(self.sign, -self.hi, -self.lo)
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        let nf = f64::from(n);
        let hi = self.hi * nf;
        let err = self.hi.mul_add(nf, -hi);
        Self::normalized(sign, hi, err + self.lo * nf)
    }

    /// True when `|self| >= |other|`.
    fn abs_ge(self, other: Self) -> bool {
        if other.sign == 0 {
            return true;
        }
        if self.sign == 0 {
            return false;
        }
        (self.hi, self.lo) >= (other.hi, other.lo)
    }
}

impl Default for SignedLogValue {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}exp({:e})", if s < 0 { "-" } else { "+" }, self.log_magnitude()),
        }
    }
}

impl From<f64> for SignedLogValue {
    fn from(x: f64) -> Self {
        Self::from_real(x)
    }
}

impl Neg for SignedLogValue {
    type Output = Self;
    fn neg(self) -> Self {
        Self { sign: -self.sign, ..self }
    }
}

impl Mul for SignedLogValue {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        let (s, e) = two_sum(self.hi, rhs.hi);
        Self::normalized(self.sign * rhs.sign, s, e + (self.lo + rhs.lo))
    }
}

impl Div for SignedLogValue {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Add for SignedLogValue {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = if self.abs_ge(rhs) { (self, rhs) } else { (rhs, self) };
        if b.sign == 0 {
            return a;
        }
        let d = (a.hi - b.hi) + (a.lo - b.lo);
        let c = if a.sign == b.sign {
            (-d).exp().ln_1p()
        } else {
            if d <= 0.0 {
                return Self::ZERO;
            }
            (-(-d).exp_m1()).ln()
        };
        let (s, e) = two_sum(a.hi, c);
        Self::normalized(a.sign, s, e + a.lo)
    }
}

impl Sub for SignedLogValue {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

/// `ln` of a product of factors, accumulated in linear space and flushed to the
/// log whenever the partial product nears the edge of the exponent range.
struct LogProduct {
    log: f64,
    comp: f64,
    prod: f64,
}

impl LogProduct {
    fn new() -> Self {
        Self { log: 0.0, comp: 0.0, prod: 1.0 }
    }

    #[inline]
    fn push(&mut self, factor: f64) {
        self.prod *= factor;
        if !(1e-250..=1e250).contains(&self.prod) {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let l = self.prod.ln();
        let (s, e) = two_sum(self.log, l);
        self.log = s;
        self.comp += e;
        self.prod = 1.0;
    }

    fn finish(mut self) -> f64 {
        self.flush();
        self.log + self.comp
    }
}

/// `ln x_(n)` where `x_(n) = x(x+1)...(x+n-1)`. Returns negative infinity for
/// `x = 0, n >= 1`.
pub fn log_rising_factorial(x: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut p = LogProduct::new();
    for j in 0..n {
        p.push(x + j as f64);
    }
    p.finish()
}

/// `ln[(a)_(n) / (b)_(n)]`, evaluated as a product of ratios close to one.
pub fn log_rising_ratio(a: f64, b: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if a == 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut p = LogProduct::new();
    for j in 0..n {
        let jf = j as f64;
        p.push((a + jf) / (b + jf));
    }
    p.finish()
}

/// `x_[n] = x(x-1)...(x-n+1)` with exact sign tracking.
pub fn log_falling_factorial(x: f64, n: u64) -> SignedLogValue {
    if n == 0 {
        return SignedLogValue::ONE;
    }
    let mut sign = 1i8;
    let mut p = LogProduct::new();
    for j in 0..n {
        let f = x - j as f64;
        if f == 0.0 {
            return SignedLogValue::ZERO;
        }
        if f < 0.0 {
            sign = -sign;
        }
        p.push(f.abs());
    }
    SignedLogValue::from_log(sign, p.finish())
}

const FACTORIAL_TABLE: usize = 4096;

fn factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(FACTORIAL_TABLE);
        out.push(0.0);
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for k in 1..FACTORIAL_TABLE {
            let (ns, e) = two_sum(s, (k as f64).ln());
            s = ns;
            c += e;
            out.push(s + c);
        }
        out
    })
}

/// `ln n!`.
pub fn log_factorial(n: u64) -> f64 {
    if (n as usize) < FACTORIAL_TABLE {
        return factorial_table()[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x
        + 0.5 * (std::f64::consts::TAU * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `ln C(n, k)`; negative infinity when `k < 0` or `k > n`.
pub fn log_binomial(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return f64::NEG_INFINITY;
    }
    let k = (k as u64).min(n - k as u64);
    if k <= 64 {
        let mut p = LogProduct::new();
        for j in 0..k {
            p.push((n - j) as f64 / (j + 1) as f64);
        }
        return p.finish();
    }
    log_factorial(n) - log_factorial(k) - log_factorial(n - k)
}

/// Outcome of summing a (possibly alternating) series.
#[derive(Clone, Copy, Debug)]
pub struct SeriesResult {
    pub value: f64,
    /// The sum in signed log form; usable when `value` under- or overflows.
    pub log_value: SignedLogValue,
    /// `|value| / max |term|`.
    pub cancellation_ratio: f64,
    pub terms_used: usize,
    pub converged: bool,
    /// `ln` of the largest term magnitude seen.
    pub max_log_magnitude: f64,
}

impl SeriesResult {
    pub fn is_ill_conditioned(&self) -> bool {
        self.log_value.sign() != 0 && self.cancellation_ratio < CANCELLATION_THRESHOLD
    }

    /// Ratio of a reference magnitude `e^scale_log` to the largest term. Small
    /// values mean rounding noise from the largest term exceeds `1e-16` of the
    /// reference.
    pub fn scale_ratio(&self, scale_log: f64) -> f64 {
        if self.max_log_magnitude == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        (scale_log - self.max_log_magnitude).exp()
    }
}

/// Sums `terms` with Neumaier compensation after rescaling by the running
/// maximum log-magnitude.
///
/// Stops once a term smaller than the previous one also falls below a tenth of
/// `rtol * |sum| + atol`. An iterator that runs dry counts as converged.
pub fn compensated_signed_sum<I>(terms: I, rtol: f64, atol: f64, max_terms: usize) -> SeriesResult
where
    I: IntoIterator<Item = SignedLogValue>,
{
    let mut it = terms.into_iter();
    let early_stop = rtol > 0.0 || atol > 0.0;
    let log_rtol = (0.1 * rtol).ln();
    let log_atol = (0.1 * atol).ln();
    let mut scale = f64::NEG_INFINITY;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut prev = f64::INFINITY;
    let mut used = 0usize;
    let converged;

    loop {
        if used == max_terms {
            converged = it.next().is_none();
            break;
        }
        let Some(term) = it.next() else {
            converged = true;
            break;
        };
        used += 1;
        if term.is_zero() {
            continue;
        }
        let lt = term.log_magnitude();
        if lt > scale {
            if scale.is_finite() {
                let f = (scale - lt).exp();
                sum *= f;
                comp *= f;
            }
            scale = lt;
        }
        let v = f64::from(term.sign()) * (lt - scale).exp();
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;

        if early_stop && used > 1 && lt < prev {
            let total = (sum + comp).abs();
            let log_s = scale + total.ln();
            let a = log_rtol + log_s;
            let hi = a.max(log_atol);
            let bound = hi + (-(a - log_atol).abs()).exp().ln_1p();
            if lt < bound {
                converged = true;
                break;
            }
        }
        prev = lt;
    }

    let total = sum + comp;
    let log_value = if total == 0.0 || scale == f64::NEG_INFINITY {
        SignedLogValue::ZERO
    } else {
        SignedLogValue::from_log(if total < 0.0 { -1 } else { 1 }, scale + total.abs().ln())
    };
    let cancellation_ratio = if log_value.is_zero() { 0.0 } else { total.abs() };
    SeriesResult {
        value: log_value.to_real(),
        log_value,
        cancellation_ratio,
        terms_used: used,
        converged,
        max_log_magnitude: scale,
    }
}

/// Sums every term of a finite series with no early stopping.
pub fn sum_finite<I>(terms: I) -> SeriesResult
where
    I: IntoIterator<Item = SignedLogValue>,
{
    compensated_signed_sum(terms, 0.0, 0.0, usize::MAX)
}

/// [`compensated_signed_sum`] with the default tolerances.
pub fn sum_series<I>(terms: I) -> SeriesResult
where
    I: IntoIterator<Item = SignedLogValue>,
{
    compensated_signed_sum(terms, DEFAULT_RTOL, DEFAULT_ATOL, DEFAULT_MAX_TERMS)
}

const STIRLING_MAX: usize = 30;

fn check_stirling_args(n: usize, k: usize) -> Result<()> {
    if n > STIRLING_MAX || k > n {
        return Err(Error::Domain(format!(
            "Stirling numbers need 0 <= k <= n <= {STIRLING_MAX}, got n={n}, k={k}"
        )));
    }
    Ok(())
}

fn stirling_row(n: usize, weight: impl Fn(usize, usize) -> u128) -> Vec<u128> {
    let mut row = vec![1u128];
    for i in 1..=n {
        let mut next = vec![0u128; i + 1];
        for (k, slot) in next.iter_mut().enumerate().skip(1) {
            let stay = if k < i { weight(i, k) * row[k] } else { 0 };
            *slot = stay + row[k - 1];
        }
        row = next;
    }
    row
}

/// Stirling number of the second kind `S(n, k)`, exact for `n <= 30`.
pub fn stirling2(n: usize, k: usize) -> Result<u128> {
    check_stirling_args(n, k)?;
    Ok(stirling_row(n, |_, k| k as u128)[k])
}

/// Signless Stirling number of the first kind `|s(n, k)|`, exact for `n <= 30`.
pub fn signless_stirling1(n: usize, k: usize) -> Result<u128> {
    check_stirling_args(n, k)?;
    Ok(stirling_row(n, |i, _| (i - 1) as u128)[k])
}
