//! Single-mode U(1)-invariant sources and two-mode source pairs.

use crate::error::{invalid, Error, Result};
use crate::logmath::{ln_binomial, ln_factorial, ln_poisson, pairwise_sum};
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Omitted tail mass allowed when an infinite support is cut to a window.
pub const TAIL_CUT: f64 = 1e-12;

/// Photon-number distribution on a contiguous window `offset..offset + len`.
#[derive(Clone, Debug, PartialEq)]
pub struct NumberDistribution {
    offset: u64,
    ln_p: Vec<f64>,
    pub declared_mean: f64,
    pub declared_variance: f64,
    /// Probability mass dropped by truncation.
    pub tail_mass: f64,
}

impl NumberDistribution {
    /// Build from explicit `(N, p)` pairs; they must sum to one within `1e-12`.
    pub fn from_entries(entries: &[(u64, f64)]) -> Result<Self> {
        if entries.is_empty() {
            return invalid("empty number distribution");
        }
        if entries.iter().any(|&(_, p)| !(p >= 0.0) || !p.is_finite()) {
            return invalid("probabilities must be finite and non-negative");
        }
        let lo = entries.iter().map(|e| e.0).min().unwrap();
        let hi = entries.iter().map(|e| e.0).max().unwrap();
        let mut lin = vec![0.0; (hi - lo + 1) as usize];
        for &(n, p) in entries {
            lin[(n - lo) as usize] += p;
        }
        let total = pairwise_sum(&lin);
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("number distribution sums to {total}, not 1"));
        }
        let ln_p = lin.iter().map(|p| p.ln()).collect();
        let mut d = NumberDistribution {
            offset: lo,
            ln_p,
            declared_mean: 0.0,
            declared_variance: 0.0,
            tail_mass: 0.0,
        };
        let (m, v) = d.summed_moments();
        d.declared_mean = m;
        d.declared_variance = v;
        Ok(d)
    }

    pub(crate) fn from_window(offset: u64, ln_p: Vec<f64>, mean: f64, var: f64, tail: f64) -> Self {
        NumberDistribution {
            offset,
            ln_p,
            declared_mean: mean,
            declared_variance: var,
            tail_mass: tail,
        }
    }

    /// Inclusive support window `(lo, hi)` after truncation.
    pub fn range(&self) -> (u64, u64) {
        (self.offset, self.offset + self.ln_p.len() as u64 - 1)
    }

    pub fn ln_pmf(&self, n: u64) -> f64 {
        if n < self.offset {
            return f64::NEG_INFINITY;
        }
        self.ln_p
            .get((n - self.offset) as usize)
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn pmf(&self, n: u64) -> f64 {
        self.ln_pmf(n).exp()
    }

    /// Nonzero entries in ascending `N`.
    pub fn entries(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.ln_p
            .iter()
            .enumerate()
            .filter(|(_, l)| **l > f64::NEG_INFINITY)
            .map(move |(i, l)| (self.offset + i as u64, l.exp()))
    }

    pub fn total(&self) -> f64 {
        let v: Vec<f64> = self.ln_p.iter().map(|l| l.exp()).collect();
        pairwise_sum(&v)
    }

    /// Mean and variance summed from the stored entries.
    pub fn summed_moments(&self) -> (f64, f64) {
        let ps: Vec<(f64, f64)> = self.entries().map(|(n, p)| (n as f64, p)).collect();
        let z: f64 = pairwise_sum(&ps.iter().map(|e| e.1).collect::<Vec<_>>());
        let m = pairwise_sum(&ps.iter().map(|e| e.0 * e.1).collect::<Vec<_>>()) / z;
        let v = pairwise_sum(&ps.iter().map(|e| (e.0 - m).powi(2) * e.1).collect::<Vec<_>>()) / z;
        (m, v)
    }
}

/// Radial coherent-state density `P(r)`, normalised as `int r P(r) dr = 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum RadialDensity {
    /// Singular node: all weight at `r`, i.e. `P(r) = 2 delta(r^2 - r0^2)`.
    Delta { r: f64 },
    /// Gamma law in `u = r^2` with the given shape and scale.
    Gamma { shape: f64, scale: f64 },
    /// Piecewise-linear `P(r)` through the given knots, zero outside them.
    Tabulated { r: Vec<f64>, p: Vec<f64> },
}

impl RadialDensity {
    pub fn tabulated(r: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if r.len() != p.len() || r.len() < 2 {
            return invalid("tabulated radial density needs matching knots (at least two)");
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) || r[0] < 0.0 {
            return invalid("radial knots must be non-negative and strictly increasing");
        }
        if p.iter().any(|x| !(*x >= 0.0)) {
            return invalid("radial density must be non-negative");
        }
        let d = RadialDensity::Tabulated { r, p };
        let norm = d.moment(0);
        if (norm - 1.0).abs() > 1e-9 {
            return invalid(format!("radial density integrates to {norm}, not 1"));
        }
        Ok(d)
    }

    /// `P(r)`, or `None` for the singular delta node.
    pub fn eval(&self, r: f64) -> Option<f64> {
        match self {
            RadialDensity::Delta { .. } => None,
            RadialDensity::Gamma { shape, scale } => Some(2.0 * gamma_ln_pdf(r * r, *shape, *scale).exp()),
            RadialDensity::Tabulated { r: xs, p } => {
                if r < xs[0] || r > *xs.last().unwrap() {
                    return Some(0.0);
                }
                let i = match xs.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
                    Ok(i) => return Some(p[i]),
                    Err(i) => i,
                };
                let t = (r - xs[i - 1]) / (xs[i] - xs[i - 1]);
                Some(p[i - 1] + t * (p[i] - p[i - 1]))
            }
        }
    }

    /// `int r^(2k) r P(r) dr`, i.e. `E[u^k]`.
    pub fn moment(&self, k: i32) -> f64 {
        match self {
            RadialDensity::Delta { r } => (r * r).powi(k),
            RadialDensity::Gamma { shape, scale } => {
                (0..k).map(|j| (shape + j as f64) * scale).product()
            }
            RadialDensity::Tabulated { r, .. } => {
                // integrand is piecewise smooth between knots; 8-point GL per interval is exact
                // for the piecewise-linear density times polynomial weights of low degree
                let (gx, gw) = crate::quadrature::gauss_legendre(8);
                let mut s = 0.0;
                for w in r.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    for (x, wt) in gx.iter().zip(&gw) {
                        let t = a + 0.5 * (b - a) * (x + 1.0);
                        s += 0.5 * (b - a) * wt * t * self.eval(t).unwrap() * (t * t).powi(k);
                    }
                }
                s
            }
        }
    }
}

fn gamma_ln_pdf(u: f64, shape: f64, scale: f64) -> f64 {
    if u < 0.0 {
        return f64::NEG_INFINITY;
    }
    if u == 0.0 {
        return match shape.partial_cmp(&1.0).unwrap() {
            std::cmp::Ordering::Less => f64::INFINITY,
            std::cmp::Ordering::Equal => -scale.ln(),
            std::cmp::Ordering::Greater => f64::NEG_INFINITY,
        };
    }
    (shape - 1.0) * u.ln() - u / scale - ln_gamma(shape) - shape * scale.ln()
}

/// A single-mode source.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    NumberState(u64),
    /// Binomial thinning of `|mean / q>`; `mean / q` must be an integer.
    Binomial { q: Ratio<i64>, mean: Ratio<i64> },
    Poissonian(f64),
    /// Gamma-law P-representation with `V = mean + Q mean^2`.
    /// `big_q == 0` is the `Q -> 0` limit, carried as the Poissonian delta node.
    SuperPoissonian { big_q: f64, mean: f64 },
    Thermal(f64),
    /// Equal mixture of `|mean - spread>` and `|mean + spread>`.
    TwoNumberMixture { mean: f64, spread: f64 },
    CustomDiagonal(NumberDistribution),
    CustomRadial(RadialDensity),
}

impl SourceSpec {
    pub fn binomial(q: Ratio<i64>, mean: Ratio<i64>) -> Result<Self> {
        if q <= Ratio::zero() || q > Ratio::from_integer(1) {
            return invalid("binomial q must lie in (0, 1]");
        }
        if mean < Ratio::zero() {
            return invalid("binomial mean must be non-negative");
        }
        if !(mean / q).is_integer() {
            return invalid(format!("binomial cap mean/q = {} is not an integer", mean / q));
        }
        Ok(SourceSpec::Binomial { q, mean })
    }

    /// Same as [`SourceSpec::binomial`] with `q` and the mean given as decimals.
    pub fn binomial_f64(q: f64, mean: f64) -> Result<Self> {
        let q = Ratio::<i64>::approximate_float(q).ok_or_else(|| Error::Invalid("bad q".into()))?;
        let mean = Ratio::<i64>::approximate_float(mean).ok_or_else(|| Error::Invalid("bad mean".into()))?;
        Self::binomial(q, mean)
    }

    pub fn poissonian(mean: f64) -> Result<Self> {
        if !(mean >= 0.0) || !mean.is_finite() {
            return invalid("Poissonian mean must be finite and non-negative");
        }
        Ok(SourceSpec::Poissonian(mean))
    }

    pub fn super_poissonian(big_q: f64, mean: f64) -> Result<Self> {
        if !(big_q > 0.0) || !big_q.is_finite() {
            return invalid("super-Poissonian Q must be positive");
        }
        if !(mean > 0.0) || !mean.is_finite() {
            return invalid("super-Poissonian mean must be positive");
        }
        Ok(SourceSpec::SuperPoissonian { big_q, mean })
    }

    /// The `Q -> 0` member of the super-Poissonian family.
    pub fn super_poissonian_limit(mean: f64) -> Result<Self> {
        Self::poissonian(mean)?;
        Ok(SourceSpec::SuperPoissonian { big_q: 0.0, mean })
    }

    pub fn thermal(mean: f64) -> Result<Self> {
        if !(mean > 0.0) || !mean.is_finite() {
            return invalid("thermal mean must be positive");
        }
        Ok(SourceSpec::Thermal(mean))
    }

    pub fn two_number_mixture(mean: f64, spread: f64) -> Result<Self> {
        let lo = mean - spread;
        let hi = mean + spread;
        if spread < 0.0 || lo < 0.0 || lo.fract() != 0.0 || hi.fract() != 0.0 {
            return invalid("mean +/- spread must be non-negative integers");
        }
        Ok(SourceSpec::TwoNumberMixture { mean, spread })
    }

    /// Exact diagonal distribution, truncated for infinite supports.
    pub fn diagonal(&self) -> Result<NumberDistribution> {
        let (m, v) = self.moments()?;
        match self {
            SourceSpec::NumberState(n) => Ok(NumberDistribution::from_window(*n, vec![0.0], m, v, 0.0)),
            SourceSpec::Binomial { q, mean } => {
                let cap = (mean / q).to_integer() as u64;
                let qf = q.to_f64().unwrap();
                let ln_p = (0..=cap).map(|n| ln_binomial_weight(cap, n, qf)).collect();
                Ok(NumberDistribution::from_window(0, ln_p, m, v, 0.0))
            }
            SourceSpec::Poissonian(mu) => {
                let mu = *mu;
                Ok(truncate(mu.floor() as u64, |n| ln_poisson(n, mu), m, v))
            }
            SourceSpec::SuperPoissonian { big_q, mean } if *big_q == 0.0 => {
                SourceSpec::Poissonian(*mean).diagonal()
            }
            SourceSpec::SuperPoissonian { .. } | SourceSpec::Thermal(_) => {
                let (k, theta) = self.gamma_params().unwrap();
                let mode = if k > 1.0 {
                    ((k - 1.0) * theta / (1.0 + theta)).floor() as u64
                } else {
                    0
                };
                let lr = (theta / (1.0 + theta)).ln();
                let l1 = -k * (1.0 + theta).ln();
                let lgk = ln_gamma(k);
                Ok(truncate(
                    mode,
                    |n| ln_gamma(n as f64 + k) - lgk - ln_factorial(n) + n as f64 * lr + l1,
                    m,
                    v,
                ))
            }
            SourceSpec::TwoNumberMixture { mean, spread } => {
                let lo = (mean - spread) as u64;
                let hi = (mean + spread) as u64;
                let mut ln_p = vec![f64::NEG_INFINITY; (hi - lo + 1) as usize];
                if lo == hi {
                    ln_p[0] = 0.0;
                } else {
                    ln_p[0] = 0.5f64.ln();
                    *ln_p.last_mut().unwrap() = 0.5f64.ln();
                }
                Ok(NumberDistribution::from_window(lo, ln_p, m, v, 0.0))
            }
            SourceSpec::CustomDiagonal(d) => Ok(d.clone()),
            SourceSpec::CustomRadial(_) => Err(Error::Unsupported(
                "custom radial source has no diagonal form".into(),
            )),
        }
    }

    /// Shape and scale of the Gamma law in `u = r^2`, for Gamma families.
    fn gamma_params(&self) -> Option<(f64, f64)> {
        match self {
            SourceSpec::SuperPoissonian { big_q, mean } if *big_q > 0.0 => Some((1.0 / big_q, big_q * mean)),
            SourceSpec::Thermal(mean) => Some((1.0, *mean)),
            _ => None,
        }
    }

    /// Radial P-representation.
    pub fn radial(&self) -> Result<RadialDensity> {
        match self {
            SourceSpec::Poissonian(mu) => Ok(RadialDensity::Delta { r: mu.sqrt() }),
            SourceSpec::SuperPoissonian { big_q, mean } if *big_q == 0.0 => {
                Ok(RadialDensity::Delta { r: mean.sqrt() })
            }
            SourceSpec::SuperPoissonian { .. } | SourceSpec::Thermal(_) => {
                let (shape, scale) = self.gamma_params().unwrap();
                Ok(RadialDensity::Gamma { shape, scale })
            }
            SourceSpec::CustomRadial(d) => Ok(d.clone()),
            SourceSpec::NumberState(0) => Ok(RadialDensity::Delta { r: 0.0 }),
            SourceSpec::Binomial { mean, .. } if mean.is_zero() => Ok(RadialDensity::Delta { r: 0.0 }),
            _ => Err(Error::Unsupported(
                "sub-Poissonian source has no regular radial density".into(),
            )),
        }
    }

    /// `(mean, variance)` of the photon number.
    pub fn moments(&self) -> Result<(f64, f64)> {
        Ok(match self {
            SourceSpec::NumberState(n) => (*n as f64, 0.0),
            SourceSpec::Binomial { q, mean } => {
                let m = mean.to_f64().unwrap();
                (m, m * (1.0 - q.to_f64().unwrap()))
            }
            SourceSpec::Poissonian(mu) => (*mu, *mu),
            SourceSpec::SuperPoissonian { big_q, mean } => (*mean, mean + big_q * mean * mean),
            SourceSpec::Thermal(mean) => (*mean, mean + mean * mean),
            SourceSpec::TwoNumberMixture { mean, spread } => (*mean, spread * spread),
            SourceSpec::CustomDiagonal(d) => (d.declared_mean, d.declared_variance),
            SourceSpec::CustomRadial(d) => {
                let m1 = d.moment(1);
                let m2 = d.moment(2);
                (m1, m1 + m2 - m1 * m1)
            }
        })
    }

    pub fn has_diagonal(&self) -> bool {
        !matches!(self, SourceSpec::CustomRadial(_))
    }

    pub fn has_radial(&self) -> bool {
        self.radial().is_ok()
    }
}

/// `ln B^n_k(q)` with the convention `0 * ln 0 = 0`.
pub(crate) fn ln_binomial_weight(n: u64, k: u64, q: f64) -> f64 {
    crate::logmath::ln_binomial_pmf(n, k, q)
}

/// Smallest contiguous window around `mode` whose omitted mass is below [`TAIL_CUT`].
fn truncate(mode: u64, ln_pmf: impl Fn(u64) -> f64, mean: f64, var: f64) -> NumberDistribution {
    let mut lo = mode;
    let mut hi = mode;
    let mut left = vec![]; // lo-1, lo-2, ...
    let mut right = vec![ln_pmf(mode)];
    let mut mass = right[0].exp();
    let mut next_lo = if lo > 0 { ln_pmf(lo - 1) } else { f64::NEG_INFINITY };
    let mut next_hi = ln_pmf(hi + 1);
    while 1.0 - mass >= TAIL_CUT {
        if next_lo == f64::NEG_INFINITY && next_hi == f64::NEG_INFINITY {
            break;
        }
        if next_lo >= next_hi {
            lo -= 1;
            left.push(next_lo);
            mass += next_lo.exp();
            next_lo = if lo > 0 { ln_pmf(lo - 1) } else { f64::NEG_INFINITY };
        } else {
            hi += 1;
            right.push(next_hi);
            mass += next_hi.exp();
            next_hi = ln_pmf(hi + 1);
        }
    }
    left.reverse();
    left.extend(right);
    let tail = (1.0 - mass).max(0.0);
    NumberDistribution::from_window(lo, left, mean, var, tail)
}

/// `p(N)` of a source with a diagonal form.
pub fn pmf(source: &SourceSpec, n: u64) -> Result<f64> {
    Ok(ln_pmf(source, n)?.exp())
}

/// `ln p(N)`, evaluated in closed form (no truncation).
pub fn ln_pmf(source: &SourceSpec, n: u64) -> Result<f64> {
    match source {
        SourceSpec::Poissonian(mu) => Ok(ln_poisson(n, *mu)),
        SourceSpec::SuperPoissonian { big_q, mean } if *big_q == 0.0 => Ok(ln_poisson(n, *mean)),
        SourceSpec::NumberState(m) => Ok(if n == *m { 0.0 } else { f64::NEG_INFINITY }),
        SourceSpec::Binomial { q, mean } => {
            let cap = (mean / q).to_integer() as u64;
            Ok(ln_binomial_weight(cap, n, q.to_f64().unwrap()))
        }
        _ => Ok(source.diagonal()?.ln_pmf(n)),
    }
}

/// `P(r)`; `None` marks the singular delta node of Poissonian sources.
pub fn radial_density(source: &SourceSpec, r: f64) -> Result<Option<f64>> {
    Ok(source.radial()?.eval(r))
}

pub fn moments(source: &SourceSpec) -> Result<(f64, f64)> {
    source.moments()
}

/// Map an angle into `[-pi, pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Two-mode input state.
#[derive(Clone, Debug, PartialEq)]
pub enum SourcePair {
    Independent(SourceSpec, SourceSpec),
    /// `|N>` of one mode split as `(c a^dag + s e^{i delta} b^dag)^N |0> / sqrt(N!)`.
    CommonNumber { n: u64, c: f64, s: f64, delta: f64 },
    CommonDiagonal { p: NumberDistribution, c: f64, s: f64, delta: f64 },
    /// Two P-representable sources with a fixed relative phase.
    ReferencedPhase { a: SourceSpec, b: SourceSpec, delta: f64 },
}

fn check_split(c: f64, s: f64, delta: f64) -> Result<()> {
    if (c * c + s * s - 1.0).abs() > 1e-12 {
        return invalid(format!("c^2 + s^2 = {} is not 1", c * c + s * s));
    }
    if !(-PI..PI).contains(&delta) {
        return invalid("delta must lie in [-pi, pi)");
    }
    Ok(())
}

impl SourcePair {
    pub fn independent(a: SourceSpec, b: SourceSpec) -> Self {
        SourcePair::Independent(a, b)
    }

    pub fn common_number(n: u64, c: f64, s: f64, delta: f64) -> Result<Self> {
        check_split(c, s, delta)?;
        Ok(SourcePair::CommonNumber { n, c, s, delta })
    }

    pub fn common_diagonal(p: NumberDistribution, c: f64, s: f64, delta: f64) -> Result<Self> {
        check_split(c, s, delta)?;
        Ok(SourcePair::CommonDiagonal { p, c, s, delta })
    }

    pub fn referenced_phase(a: SourceSpec, b: SourceSpec, delta: f64) -> Result<Self> {
        if !(-PI..PI).contains(&delta) {
            return invalid("delta must lie in [-pi, pi)");
        }
        a.radial()?;
        b.radial()?;
        Ok(SourcePair::ReferencedPhase { a, b, delta })
    }

    /// Mean photon numbers `(N_a, N_b)` reaching the two input modes.
    pub fn means(&self) -> Result<(f64, f64)> {
        Ok(match self {
            SourcePair::Independent(a, b) | SourcePair::ReferencedPhase { a, b, .. } => {
                (a.moments()?.0, b.moments()?.0)
            }
            SourcePair::CommonNumber { n, c, s, .. } => (c * c * *n as f64, s * s * *n as f64),
            SourcePair::CommonDiagonal { p, c, s, .. } => (c * c * p.declared_mean, s * s * p.declared_mean),
        })
    }
}

/// Amplitudes `c_K` of `|K, N-K>` in a common-number pair; zero terms omitted.
pub fn common_source_amplitudes(n: u64, c: f64, s: f64, delta: f64) -> Vec<(u64, Complex64)> {
    let mut out = Vec::new();
    for k in 0..=n {
        let nk = n - k;
        if (c == 0.0 && k > 0) || (s == 0.0 && nk > 0) {
            continue;
        }
        let lm = 0.5 * ln_binomial(n, k)
            + if k > 0 { k as f64 * c.abs().ln() } else { 0.0 }
            + if nk > 0 { nk as f64 * s.abs().ln() } else { 0.0 };
        let mut phase = nk as f64 * delta;
        if c < 0.0 && k % 2 == 1 {
            phase += PI;
        }
        if s < 0.0 && nk % 2 == 1 {
            phase += PI;
        }
        out.push((k, Complex64::from_polar(lm.exp(), phase)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_windows_have_small_tail() {
        for mu in [0.0, 0.3, 20.0, 500.0, 1000.0] {
            let d = SourceSpec::Poissonian(mu).diagonal().unwrap();
            assert!(d.tail_mass < TAIL_CUT);
            assert!((d.total() - 1.0).abs() < 1e-12);
        }
        let d = SourceSpec::thermal(1000.0).unwrap().diagonal().unwrap();
        assert!(d.tail_mass < TAIL_CUT);
        assert_eq!(d.range().0, 0);
    }

    #[test]
    fn binomial_needs_integer_cap() {
        assert!(SourceSpec::binomial(Ratio::new(2, 3), Ratio::from_integer(1)).is_err());
        assert!(SourceSpec::binomial(Ratio::new(1, 2), Ratio::from_integer(20)).is_ok());
        assert!(SourceSpec::binomial(Ratio::new(3, 2), Ratio::from_integer(3)).is_err());
        assert!(SourceSpec::binomial_f64(0.05, 200.0).is_ok());
    }

    #[test]
    fn two_number_validation() {
        assert!(SourceSpec::two_number_mixture(100.0, 50.0).is_ok());
        assert!(SourceSpec::two_number_mixture(10.0, 20.0).is_err());
        assert!(SourceSpec::two_number_mixture(10.5, 0.25).is_err());
        assert!(SourceSpec::two_number_mixture(10.5, 0.5).is_ok());
    }

    #[test]
    fn radial_only_sources_reject_pmf() {
        let d = RadialDensity::Gamma { shape: 1.0, scale: 3.0 };
        let s = SourceSpec::CustomRadial(d);
        assert!(matches!(pmf(&s, 1), Err(Error::Unsupported(_))));
        assert!(matches!(SourceSpec::NumberState(3).radial(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), -PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_phase(-PI), -PI);
    }

    #[test]
    fn pair_validation() {
        assert!(SourcePair::common_number(3, 0.6, 0.8, 0.0).is_ok());
        assert!(SourcePair::common_number(3, 0.6, 0.7, 0.0).is_err());
        assert!(SourcePair::common_number(3, 0.6, 0.8, PI).is_err());
    }

    #[test]
    fn tabulated_radial_normalisation() {
        // P(r) = 2 on [0, 1] integrates to int 2 r dr = 1
        let d = RadialDensity::tabulated(vec![0.0, 1.0], vec![2.0, 2.0]).unwrap();
        assert!((d.moment(1) - 0.5).abs() < 1e-14);
        assert!(RadialDensity::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
    }
}
