//! Special-function kernels: log-gamma, incomplete gamma of half-integer
//! order, the Gaussian tail function, signed log-domain summation, and the
//! shifted Gaussian moment integral
//!
//! ```text
//! J_m(A, B) = ∫₀^∞ xᵐ exp(-(xA - B)²) dx
//! ```
//!
//! which carries the likelihood and the CDF of the DL statistic.
//!
//! `J_m` is evaluated from its binomial expansion in incomplete-gamma terms.
//! For `B ≥ 0` every term is positive. For `B < 0` the terms alternate and
//! the expansion loses roughly `2|B|·√(2m+2)/ln 10` decimal digits, so once
//! that exceeds two digits the integral is taken instead from the repeated
//! complementary error function `iᵐerfc(-B)`, computed by backward recurrence.

use std::cell::OnceCell;
use std::f64::consts::{FRAC_2_SQRT_PI, LN_2, SQRT_2};
use std::sync::OnceLock;

use crate::error::{domain, Error, Result};

/// ln √π
pub(crate) const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

/// Largest `2a` served from the precomputed lnΓ(a) table.
const HALF_TABLE_LEN: usize = 1 << 15;

/// Terms this far (in natural log) below the dominant one are dropped.
const LOG_WINDOW: f64 = 40.0;

/// Tolerated cancellation, `2|B|√(2m+2)`, before switching to the
/// backward-recurrence branch (about two decimal digits).
const CANCELLATION_LIMIT: f64 = 4.6;

/// ln Γ(x) for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain("log_gamma", "x", x));
    }
    Ok(libm::lgamma(x))
}

fn half_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(HALF_TABLE_LEN);
        t.push(f64::INFINITY);
        for k in 1..HALF_TABLE_LEN {
            t.push(libm::lgamma(k as f64 * 0.5));
        }
        t
    })
}

/// ln Γ(k/2) for `k ≥ 1`.
#[inline]
pub(crate) fn ln_gamma_half(k: usize) -> f64 {
    if k < HALF_TABLE_LEN {
        half_table()[k]
    } else {
        libm::lgamma(k as f64 * 0.5)
    }
}

/// ln n!
#[inline]
pub(crate) fn ln_factorial(n: usize) -> f64 {
    ln_gamma_half(2 * n + 2)
}

/// The ratio `C_M = Γ(M + ½) / Γ(M)`, which behaves like `√M` for large M.
pub fn gamma_ratio(m: usize) -> Result<f64> {
    if m == 0 {
        return Err(domain("gamma_ratio", "M", 0.0));
    }
    Ok((ln_gamma_half(2 * m + 1) - ln_gamma_half(2 * m)).exp())
}

/// A positive multiple of one half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInteger {
    twice_value: u32,
}

impl HalfInteger {
    pub fn new(twice_value: u32) -> Result<Self> {
        if twice_value == 0 {
            return Err(domain("HalfInteger::new", "twice_value", 0.0));
        }
        Ok(Self { twice_value })
    }

    pub fn from_integer(n: u32) -> Result<Self> {
        Self::new(2 * n)
    }

    pub fn twice_value(self) -> u32 {
        self.twice_value
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice_value) * 0.5
    }

    pub fn is_integer(self) -> bool {
        self.twice_value.is_multiple_of(2)
    }

    pub fn ln_gamma(self) -> f64 {
        ln_gamma_half(self.twice_value as usize)
    }
}

/// Regularized upper incomplete gamma `Q((n+1)/2, x)` for `n = 0..=max`.
///
/// Odd `n` (integer order) starts from `Q(1, x) = e^{-x}`, even `n` from
/// `Q(½, x) = erfc(√x)`; both climb with `Q(a+1, x) = Q(a, x) + xᵃe^{-x}/Γ(a+1)`.
/// The result has full relative accuracy since only positive terms are added.
pub(crate) fn upper_q_chain(x: f64, max: usize) -> Vec<f64> {
    let mut q = vec![1.0; max + 1];
    if x == 0.0 {
        return q;
    }
    if x.is_infinite() {
        q.fill(0.0);
        return q;
    }
    let ln_x = x.ln();
    // start = 1 for half-integer orders (a = ½), 2 for integer orders (a = 1)
    for start in [1usize, 2] {
        let mut value = if start == 1 { libm::erfc(x.sqrt()) } else { (-x).exp() };
        // d = xᵃe^{-x}/Γ(a+1), kept in log form while it would underflow
        let mut ln_d = 0.5 * start as f64 * ln_x - x - ln_gamma_half(start + 2);
        let mut d = ln_d.exp();
        let mut twice_a = start;
        let mut n = start - 1;
        while n <= max {
            q[n] = value;
            value += d;
            let a_next = 0.5 * (twice_a + 2) as f64;
            if ln_d < -700.0 {
                ln_d += ln_x - a_next.ln();
                d = ln_d.exp();
            } else {
                d *= x / a_next;
                ln_d = 0.0;
            }
            twice_a += 2;
            n += 2;
        }
    }
    q
}

/// Regularized incomplete gamma pair `(P(a, x), Q(a, x))`.
///
/// Below `x = a` the difference `1 - Q` cancels, so `P` comes from its power
/// series there; otherwise from the finite recurrence chain.
pub fn regularized_gamma(a: HalfInteger, x: f64) -> Result<(f64, f64)> {
    if !(x >= 0.0) {
        return Err(domain("regularized_gamma", "x", x));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    let av = a.value();
    if x < av {
        // P = xᵃe^{-x}/Γ(a+1) · Σ_k xᵏ / ((a+1)…(a+k))
        let lead = (av * x.ln() - x - ln_gamma_half(a.twice_value as usize + 2)).exp();
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum && k < 1e5 {
            term *= x / (av + k);
            sum += term;
            k += 1.0;
        }
        let p = lead * sum;
        Ok((p, 1.0 - p))
    } else {
        let n = a.twice_value as usize - 1;
        let q = upper_q_chain(x, n)[n];
        Ok((1.0 - q, q))
    }
}

/// Lower incomplete gamma `γ(a, x) = ∫₀ˣ t^{a-1} e^{-t} dt`.
pub fn lower_incomplete_gamma(a: HalfInteger, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain("lower_incomplete_gamma", "x", x));
    }
    let (p, _) = regularized_gamma(a, x)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    Ok((a.ln_gamma() + p.ln()).exp())
}

/// Upper incomplete gamma `Γ(a, x) = ∫ₓ^∞ t^{a-1} e^{-t} dt`.
pub fn upper_incomplete_gamma(a: HalfInteger, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain("upper_incomplete_gamma", "x", x));
    }
    let (_, q) = regularized_gamma(a, x)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    Ok((a.ln_gamma() + q.ln()).exp())
}

/// Standard Gaussian tail probability `Pr{N(0,1) > x}`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// A real number stored as sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogSum {
    Zero,
    Positive(f64),
    Negative(f64),
}

impl LogSum {
    pub fn value(self) -> f64 {
        match self {
            LogSum::Zero => 0.0,
            LogSum::Positive(l) => l.exp(),
            LogSum::Negative(l) => -l.exp(),
        }
    }
}

/// Computes `Σ sᵢ·exp(lᵢ)` as a [`LogSum`] without forming any `exp(lᵢ)`
/// directly. Terms with `lᵢ = -∞` contribute nothing.
pub fn log_sum_signed<I>(terms: I) -> Result<LogSum>
where
    I: IntoIterator<Item = (Sign, f64)>,
{
    let terms: Vec<(Sign, f64)> = terms.into_iter().collect();
    if terms.is_empty() {
        return Err(Error::Empty("log_sum_signed"));
    }
    let mut max = f64::NEG_INFINITY;
    for &(_, l) in &terms {
        if l.is_nan() || l == f64::INFINITY {
            return Err(domain("log_sum_signed", "log-magnitude", l));
        }
        max = max.max(l);
    }
    if max == f64::NEG_INFINITY {
        return Ok(LogSum::Zero);
    }
    let (mut pos, mut neg) = (0.0, 0.0);
    for &(s, l) in &terms {
        let v = (l - max).exp();
        match s {
            Sign::Plus => pos += v,
            Sign::Minus => neg += v,
        }
    }
    let diff = pos - neg;
    Ok(if diff > 0.0 {
        LogSum::Positive(max + diff.ln())
    } else if diff < 0.0 {
        LogSum::Negative(max + (-diff).ln())
    } else {
        LogSum::Zero
    })
}

/// ln of the repeated erfc integrals `iᵏerfc(c)` for `k = 0..=max`, `c > 0`.
///
/// Backward (Miller) recurrence `y_{k-1} = 2(k+1)y_{k+1} + 2c·y_k` from far
/// above `max`, normalized by `i⁻¹erfc(c) = (2/√π)e^{-c²}`.
fn ln_repeated_erfc(c: f64, max: usize) -> Vec<f64> {
    debug_assert!(c > 0.0);
    let root = (2.0 * max as f64 + 2.0).sqrt() + 20.0 / c;
    let start = ((root * root / 2.0) as usize).max(max + 20) + 10;
    const RESCALE: f64 = 1e250;
    let ln_rescale = RESCALE.ln();
    let mut out = vec![0.0; max + 1];
    let (mut above, mut cur) = (0.0_f64, 1.0_f64); // y_{k+1}, y_k
    let mut ln_scale = 0.0;
    let mut k = start;
    loop {
        let prev = 2.0 * (k + 1) as f64 * above + 2.0 * c * cur;
        above = cur;
        cur = prev;
        if cur > RESCALE {
            above /= RESCALE;
            cur /= RESCALE;
            ln_scale += ln_rescale;
        }
        if k == 0 {
            break;
        }
        k -= 1;
        if k <= max {
            out[k] = cur.ln() + ln_scale;
        }
    }
    // cur now holds y_{-1}
    let norm = FRAC_2_SQRT_PI.ln() - c * c - (cur.ln() + ln_scale);
    for v in &mut out {
        *v += norm;
    }
    out
}

/// Log-domain evaluator of `J_m(A, B)` for every `m` up to a fixed order,
/// sharing the incomplete-gamma chain and binomial weights across orders.
pub(crate) struct MomentIntegrals {
    ln_a: f64,
    b: f64,
    max_order: usize,
    /// `u[j] = j·ln|B| - ln j!`
    u: Vec<f64>,
    /// `Q((n+1)/2, B²)`
    q: Vec<f64>,
    ierfc: OnceCell<Vec<f64>>,
}

impl MomentIntegrals {
    pub(crate) fn new(a: f64, b: f64, max_order: usize) -> Self {
        let ln_b = b.abs().ln();
        let u = if b == 0.0 {
            Vec::new()
        } else {
            (0..=max_order).map(|j| j as f64 * ln_b - ln_factorial(j)).collect()
        };
        let q = if b == 0.0 {
            Vec::new()
        } else {
            upper_q_chain(b * b, max_order)
        };
        Self {
            ln_a: a.ln(),
            b,
            max_order,
            u,
            q,
            ierfc: OnceCell::new(),
        }
    }

    /// `lnΓ((n+1)/2) - ln n!`
    #[inline]
    fn h(n: usize) -> f64 {
        ln_gamma_half(n + 1) - ln_gamma_half(2 * n + 2)
    }

    /// ln J_m(A, B).
    pub(crate) fn ln_value(&self, m: usize) -> f64 {
        assert!(m <= self.max_order, "order {m} beyond table size {}", self.max_order);
        let common = ln_factorial(m) - LN_2 - (m + 1) as f64 * self.ln_a;
        if self.b == 0.0 {
            return ln_gamma_half(m + 1) - LN_2 - (m + 1) as f64 * self.ln_a;
        }
        if self.b > 0.0 {
            return common + self.positive_sum(m);
        }
        let c = -self.b;
        if 2.0 * c * (2.0 * (m + 1) as f64).sqrt() <= CANCELLATION_LIMIT {
            if let Some(s) = self.alternating_sum(m) {
                return common + s;
            }
        }
        let ierfc = self.ierfc.get_or_init(|| ln_repeated_erfc(c, self.max_order));
        ln_factorial(m) + LN_SQRT_PI - LN_2 - (m + 1) as f64 * self.ln_a + ierfc[m]
    }

    /// ln Σ_n exp(u[m-n] + h(n))·G_n with G_n = 2 - Q_n (even n) or Q_n (odd n).
    fn positive_sum(&self, m: usize) -> f64 {
        let mut ln_t = Vec::with_capacity(m + 1);
        let mut max = f64::NEG_INFINITY;
        for n in 0..=m {
            let l = self.u[m - n] + Self::h(n);
            max = max.max(l);
            ln_t.push(l);
        }
        let sum_from = |floor: f64| {
            let mut s = 0.0;
            for (n, &l) in ln_t.iter().enumerate() {
                if l > floor {
                    let g = if n % 2 == 0 { 2.0 - self.q[n] } else { self.q[n] };
                    s += (l - max).exp() * g;
                }
            }
            s
        };
        let mut s = sum_from(max - LOG_WINDOW);
        if s < 1e-9 {
            // dominant terms were odd with vanishing Q; widen to everything
            s = sum_from(f64::NEG_INFINITY);
        }
        max + s.ln()
    }

    /// Signed version for B < 0: Σ_n (-1)^{m-n} exp(u[m-n] + h(n))·Q_n.
    /// Returns `None` if the cancellation left no positive result.
    fn alternating_sum(&self, m: usize) -> Option<f64> {
        let terms = (0..=m).map(|n| {
            let sign = if (m - n).is_multiple_of(2) {
                Sign::Plus
            } else {
                Sign::Minus
            };
            let q = self.q[n];
            let l = if q > 0.0 {
                self.u[m - n] + Self::h(n) + q.ln()
            } else {
                f64::NEG_INFINITY
            };
            (sign, l)
        });
        match log_sum_signed(terms) {
            Ok(LogSum::Positive(l)) => Some(l),
            _ => None,
        }
    }
}

/// `ln ∫₀^∞ xᵐ exp(-(xA - B)²) dx`.
pub fn ln_gaussian_moment_integral(m: usize, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || a.is_infinite() {
        return Err(domain("gaussian_moment_integral", "A", a));
    }
    if !b.is_finite() {
        return Err(domain("gaussian_moment_integral", "B", b));
    }
    Ok(MomentIntegrals::new(a, b, m).ln_value(m))
}

/// `∫₀^∞ xᵐ exp(-(xA - B)²) dx`.
pub fn gaussian_moment_integral(m: usize, a: f64, b: f64) -> Result<f64> {
    ln_gaussian_moment_integral(m, a, b).map(f64::exp)
}
