//! Log-domain helpers and an extended-exponent complex number.

use num_complex::Complex64;
use std::f64::consts::LN_2;
use std::sync::OnceLock;

const TABLE_LEN: usize = 1 << 16;

fn factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Neumaier-compensated running sum of ln k.
        let mut t = Vec::with_capacity(TABLE_LEN);
        t.push(0.0);
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for k in 1..TABLE_LEN {
            let x = (k as f64).ln();
            let u = s + x;
            if s.abs() >= x.abs() {
                c += (s - u) + x;
            } else {
                c += (x - u) + s;
            }
            s = u;
            t.push(s + c);
        }
        t
    })
}

/// `ln n!`
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        factorial_table()[n as usize]
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

/// `ln C(n, k)`, `-inf` outside `0 <= k <= n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// `ln n! - (n + 1/2) ln n + n - ln sqrt(2 pi)`, the Stirling remainder.
fn stirlerr(n: u64) -> f64 {
    let x = n as f64;
    if n < 16 {
        return ln_factorial(n) - (x + 0.5) * x.ln() + x - LN_SQRT_2PI;
    }
    let x2 = x * x;
    (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x
}

/// `x ln(x / m) + m - x`, without cancellation near `x = m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / m).ln() + m - x
}

/// Log of the Poisson pmf `e^{-mu} mu^n / n!`.
pub fn ln_poisson(n: u64, mu: f64) -> f64 {
    if mu <= 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if n == 0 {
        return -mu;
    }
    let x = n as f64;
    -stirlerr(n) - bd0(x, mu) - LN_SQRT_2PI - 0.5 * x.ln()
}

/// `ln [C(n, k) q^k (1 - q)^(n - k)]`, with `0 ln 0 = 0`.
pub fn ln_binomial_pmf(n: u64, k: u64, q: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if q == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return n as f64 * (-q).ln_1p();
    }
    if k == n {
        return n as f64 * q.ln();
    }
    let (nf, kf) = (n as f64, k as f64);
    let r = n - k;
    let rf = r as f64;
    stirlerr(n) - stirlerr(k) - stirlerr(r) - bd0(kf, nf * q) - bd0(rf, nf * (1.0 - q))
        + 0.5 * (nf / (kf * rf)).ln()
        - LN_SQRT_2PI
}

/// `ln(e^a + e^b)`
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln sum_i e^{x_i}`, `-inf` for an empty input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    let s = pairwise_sum_by(xs.len(), |i| (xs[i] - m).exp());
    m + s.ln()
}

/// Fixed-order pairwise summation, so results do not depend on thread layout.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs.len(), |i| xs[i])
}

pub(crate) fn pairwise_sum_by(n: usize, f: impl Fn(usize) -> f64 + Copy) -> f64 {
    fn rec(lo: usize, hi: usize, f: impl Fn(usize) -> f64 + Copy) -> f64 {
        let len = hi - lo;
        if len <= 16 {
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            return s;
        }
        let mid = lo + len / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, f)
}

/// Complex number `m * 2^e` with an unbounded binary exponent.
///
/// Magnitudes in the amplitude recursions span far more than the `f64`
/// exponent range; the mantissa keeps the phase and a few bits of magnitude,
/// the exponent keeps the rest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Xc {
    pub m: Complex64,
    pub e: i64,
}

#[inline]
fn pow2(k: i64) -> f64 {
    // exact for the normal range; callers only pass moderate k
    if k < -1022 {
        return 0.0;
    }
    if k > 1023 {
        return f64::INFINITY;
    }
    f64::from_bits(((k + 1023) as u64) << 52)
}

#[inline]
fn exponent_of(x: f64) -> i64 {
    // binary exponent of a finite, nonzero, normal x
    (((x.to_bits() >> 52) & 0x7ff) as i64) - 1023
}

impl Xc {
    pub const ZERO: Xc = Xc {
        m: Complex64 { re: 0.0, im: 0.0 },
        e: 0,
    };
    pub const ONE: Xc = Xc {
        m: Complex64 { re: 1.0, im: 0.0 },
        e: 0,
    };

    pub fn new(m: Complex64) -> Xc {
        Xc { m, e: 0 }.norm()
    }

    pub fn from_real(x: f64) -> Xc {
        Xc::new(Complex64::new(x, 0.0))
    }

    /// `e^{ln_mag} e^{i phase}`
    pub fn from_polar_ln(ln_mag: f64, phase: f64) -> Xc {
        if ln_mag == f64::NEG_INFINITY {
            return Xc::ZERO;
        }
        let e = (ln_mag / LN_2).floor();
        let r = (ln_mag - e * LN_2).exp();
        Xc {
            m: Complex64::from_polar(r, phase),
            e: e as i64,
        }
        .norm()
    }

    /// `z^n` with `0^0 = 1`.
    pub fn powu(z: Complex64, n: u64) -> Xc {
        if n == 0 {
            return Xc::ONE;
        }
        let r = z.norm();
        if r == 0.0 {
            return Xc::ZERO;
        }
        Xc::from_polar_ln(n as f64 * r.ln(), n as f64 * z.arg())
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.m.re == 0.0 && self.m.im == 0.0
    }

    #[inline]
    fn norm(self) -> Xc {
        let a = self.m.re.abs().max(self.m.im.abs());
        if a == 0.0 || !a.is_finite() {
            return Xc { m: self.m, e: 0 };
        }
        let k = exponent_of(a);
        if k == 0 {
            return self;
        }
        Xc {
            m: self.m * pow2(-k),
            e: self.e + k,
        }
    }

    #[inline]
    pub fn mul(self, o: Xc) -> Xc {
        if self.is_zero() || o.is_zero() {
            return Xc::ZERO;
        }
        Xc {
            m: self.m * o.m,
            e: self.e + o.e,
        }
        .norm()
    }

    #[inline]
    pub fn add(self, o: Xc) -> Xc {
        if o.is_zero() {
            return self;
        }
        if self.is_zero() {
            return o;
        }
        let (hi, lo) = if self.e >= o.e { (self, o) } else { (o, self) };
        let d = hi.e - lo.e;
        if d > 110 {
            return hi;
        }
        Xc {
            m: hi.m + lo.m * pow2(-d),
            e: hi.e,
        }
        .norm()
    }

    pub fn conj(self) -> Xc {
        Xc {
            m: self.m.conj(),
            e: self.e,
        }
    }

    /// `ln |z|^2`
    pub fn ln_norm_sqr(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.m.norm_sqr().ln() + 2.0 * self.e as f64 * LN_2
    }

    /// Value as a plain complex number (may under/overflow).
    pub fn to_c64(&self) -> Complex64 {
        if self.is_zero() {
            return self.m;
        }
        let half = self.e / 2;
        self.m * pow2(half) * pow2(self.e - half)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_table_matches_gamma() {
        for n in [0u64, 1, 5, 170, 1000, 65535, 65536, 100000] {
            let g = statrs::function::gamma::ln_gamma(n as f64 + 1.0);
            assert!((ln_factorial(n) - g).abs() <= 1e-13 * g.abs().max(1.0), "n={n}");
        }
    }

    #[test]
    fn lse_handles_empty_and_neg_inf() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_add_exp(-1000.0, -1000.0) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn xc_arithmetic_beyond_f64_range() {
        let big = Xc::from_polar_ln(2000.0, 0.3);
        let small = Xc::from_polar_ln(-2000.0, -0.3);
        let p = big.mul(small);
        assert!((p.to_c64() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let s = big.add(big);
        assert!((s.ln_norm_sqr() - (4000.0 + 2.0 * 2f64.ln())).abs() < 1e-9);
        assert!(Xc::ZERO.add(Xc::ZERO).is_zero());
    }

    #[test]
    fn xc_cancellation() {
        let a = Xc::from_real(3.0);
        let b = Xc::from_real(-3.0);
        assert!(a.add(b).is_zero());
    }
}
