//! q-scaling: detector matrices divided by `q` against sources thinned by `q`.

use crate::detectors::DetectorArray;
use crate::engines::{evaluate, EngineChoice, EngineOptions, JointDistribution};
use crate::error::{invalid, Error, Result};
use crate::logmath::log_sum_exp;
use crate::sources::{ln_binomial_weight, NumberDistribution, RadialDensity, SourcePair, SourceSpec, TAIL_CUT};
use num_rational::Ratio;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingTransform {
    q: f64,
}

impl ScalingTransform {
    pub fn new(q: f64) -> Result<Self> {
        check_q(q)?;
        Ok(ScalingTransform { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn detectors(&self, array: &DetectorArray) -> DetectorArray {
        scale_detectors(array, self.q)
    }

    pub fn source(&self, s: &SourceSpec) -> Result<SourceSpec> {
        effective_source(s, self.q)
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return invalid(format!("scaling q = {q} outside (0, 1]"));
    }
    Ok(())
}

/// `B^N_{N'}(q) = C(N, N') q^N' (1 - q)^(N - N')`, zero outside `0..=N`.
pub fn binomial_weight(n: u64, n_prime: u64, q: f64) -> f64 {
    ln_binomial_weight(n, n_prime, q).exp()
}

/// `p~(N) = sum_{N' >= N} p(N') B^{N'}_N(q)`, cut to the smallest window
/// whose omitted mass is below `1e-12`.
pub fn effective_distribution(p: &NumberDistribution, q: f64) -> Result<NumberDistribution> {
    check_q(q)?;
    let (m, v) = effective_moments(p.declared_mean, p.declared_variance, q);
    if q == 1.0 {
        let mut d = p.clone();
        d.declared_mean = m;
        d.declared_variance = v;
        return Ok(d);
    }
    let src: Vec<(u64, f64)> = p.entries().map(|(n, w)| (n, w.ln())).collect();
    let hi = p.range().1;
    let ln_p: Vec<f64> = (0..=hi)
        .map(|n| {
            let terms: Vec<f64> = src
                .iter()
                .filter(|(np, _)| *np >= n)
                .map(|(np, lw)| lw + ln_binomial_weight(*np, n, q))
                .collect();
            log_sum_exp(&terms)
        })
        .collect();
    // trim both ends while the dropped mass stays under the cut
    let lin: Vec<f64> = ln_p.iter().map(|l| l.exp()).collect();
    let (mut lo, mut top) = (0usize, lin.len() - 1);
    let mut dropped = 0.0;
    loop {
        let (a, b) = (lin[lo], lin[top]);
        let pick_lo = a <= b;
        let x = if pick_lo { a } else { b };
        if lo == top || dropped + x >= TAIL_CUT {
            break;
        }
        dropped += x;
        if pick_lo {
            lo += 1;
        } else {
            top -= 1;
        }
    }
    Ok(NumberDistribution::from_window(
        lo as u64,
        ln_p[lo..=top].to_vec(),
        m,
        v,
        p.tail_mass + dropped,
    ))
}

/// `(q N, q^2 V + (1 - q) q N)`
pub fn effective_moments(mean: f64, variance: f64, q: f64) -> (f64, f64) {
    (q * mean, q * q * variance + (1.0 - q) * q * mean)
}

/// Every `R^(m)` multiplied by `1/q`.
pub fn scale_detectors(array: &DetectorArray, q: f64) -> DetectorArray {
    array.scaled(1.0 / q)
}

/// Thinned source, kept in closed form where the family is closed under thinning.
pub fn effective_source(s: &SourceSpec, q: f64) -> Result<SourceSpec> {
    check_q(q)?;
    let rq = Ratio::<i64>::approximate_float(q).filter(|r| (*r.numer() as f64 / *r.denom() as f64 - q).abs() < 1e-15);
    Ok(match s {
        SourceSpec::Poissonian(mu) => SourceSpec::Poissonian(q * mu),
        SourceSpec::SuperPoissonian { big_q, mean } => SourceSpec::SuperPoissonian {
            big_q: *big_q,
            mean: q * mean,
        },
        SourceSpec::Thermal(m) => SourceSpec::Thermal(q * m),
        SourceSpec::NumberState(n) if rq.is_some() => {
            let rq = rq.unwrap();
            SourceSpec::binomial(rq, rq * Ratio::from_integer(*n as i64))?
        }
        SourceSpec::Binomial { q: q0, mean } if rq.is_some() => {
            let rq = rq.unwrap();
            SourceSpec::binomial(q0 * rq, mean * rq)?
        }
        SourceSpec::CustomRadial(RadialDensity::Tabulated { r, p }) => {
            let k = q.sqrt();
            SourceSpec::CustomRadial(RadialDensity::tabulated(
                r.iter().map(|x| x * k).collect(),
                p.iter().map(|x| x / k).collect(),
            )?)
        }
        SourceSpec::CustomRadial(d) => {
            return Err(Error::Unsupported(format!("cannot thin radial density {d:?}")))
        }
        other => SourceSpec::CustomDiagonal(effective_distribution(&other.diagonal()?, q)?),
    })
}

/// Source pair after thinning both input modes by `q`.
pub fn effective_pair(pair: &SourcePair, q: f64) -> Result<SourcePair> {
    check_q(q)?;
    Ok(match pair {
        SourcePair::Independent(a, b) => SourcePair::Independent(effective_source(a, q)?, effective_source(b, q)?),
        SourcePair::ReferencedPhase { a, b, delta } => SourcePair::ReferencedPhase {
            a: effective_source(a, q)?,
            b: effective_source(b, q)?,
            delta: *delta,
        },
        SourcePair::CommonNumber { n, c, s, delta } => {
            let p = SourceSpec::NumberState(*n).diagonal()?;
            SourcePair::CommonDiagonal {
                p: effective_distribution(&p, q)?,
                c: *c,
                s: *s,
                delta: *delta,
            }
        }
        SourcePair::CommonDiagonal { p, c, s, delta } => SourcePair::CommonDiagonal {
            p: effective_distribution(p, q)?,
            c: *c,
            s: *s,
            delta: *delta,
        },
    })
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub q: f64,
    /// `max_n |P_thinned(n; R) - P(n; q R)|`
    pub sup_norm: f64,
    pub thinned: JointDistribution,
    pub scaled: JointDistribution,
}

/// Compares the thinned sources on `R` with the original sources on `q R`.
pub fn equivalence_check(
    array: &DetectorArray,
    pair: &SourcePair,
    q: f64,
    ranges: &[(u64, u64)],
    engine: EngineChoice,
    opts: &EngineOptions,
) -> Result<EquivalenceReport> {
    check_q(q)?;
    let thinned = evaluate(array, &effective_pair(pair, q)?, ranges, engine, opts)?;
    let scaled = evaluate(&array.scaled(q), pair, ranges, engine, opts)?;
    let diffs: Vec<f64> = thinned
        .probs()
        .iter()
        .zip(scaled.probs())
        .map(|(a, b)| (a - b).abs())
        .collect();
    let sup_norm = diffs.iter().copied().fold(0.0, f64::max);
    Ok(EquivalenceReport {
        q,
        sup_norm,
        thinned,
        scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights() {
        assert!((binomial_weight(2, 1, 0.5) - 0.5).abs() < 1e-15);
        assert_eq!(binomial_weight(4, 4, 1.0), 1.0);
        assert_eq!(binomial_weight(4, 5, 0.5), 0.0);
    }

    #[test]
    fn moments_of_thinned_number_state() {
        assert_eq!(effective_moments(200.0, 0.0, 0.5), (100.0, 50.0));
        assert_eq!(effective_moments(500.0, 500.0, 0.3).0, 150.0);
        let d = effective_distribution(&SourceSpec::NumberState(200).diagonal().unwrap(), 0.5).unwrap();
        let (m, v) = d.summed_moments();
        assert!((m - 100.0).abs() < 1e-9 && (v / 50.0 - 1.0).abs() < 1e-9, "{m} {v}");
        assert!(d.tail_mass < 1e-12);
    }

    #[test]
    fn poissonian_stays_poissonian() {
        let d = effective_distribution(&SourceSpec::Poissonian(10.0).diagonal().unwrap(), 0.5).unwrap();
        for n in 0..40 {
            let want = crate::logmath::ln_poisson(n, 5.0).exp();
            assert!((d.pmf(n) - want).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn rejects_anti_thinning() {
        assert!(ScalingTransform::new(1.5).is_err());
        assert!(ScalingTransform::new(0.0).is_err());
    }
}
