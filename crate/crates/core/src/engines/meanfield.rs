use super::{check_ranges, EngineTag, JointDistribution, Metadata};
use crate::detectors::{mean_count, DetectorArray};
use crate::error::Result;
use crate::logmath::ln_poisson;

/// Product of Poissons at a fixed relative phase, exact in the log domain.
///
/// `means` is the source pair's `(N_a, N_b)`.
pub fn meanfield_joint(
    array: &DetectorArray,
    means: (f64, f64),
    delta: f64,
    ranges: &[(u64, u64)],
) -> Result<JointDistribution> {
    check_ranges(ranges, array.len())?;
    let mu: Vec<f64> = array
        .specs
        .iter()
        .map(|s| mean_count(s, (s.r_aa * means.0, s.r_bb * means.1), delta))
        .collect();
    let axis: Vec<Vec<f64>> = ranges
        .iter()
        .zip(&mu)
        .map(|(&(lo, hi), &m)| (lo..=hi).map(|n| ln_poisson(n, m)).collect())
        .collect();
    let total: usize = axis.iter().map(|a| a.len()).product();
    let mut log_probs = Vec::with_capacity(total);
    let mut idx = vec![0usize; axis.len()];
    for _ in 0..total {
        log_probs.push(idx.iter().zip(&axis).map(|(&i, a)| a[i]).sum());
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < axis[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    let mut meta = Metadata::new(EngineTag::MeanField);
    let missing: f64 = ranges
        .iter()
        .zip(&axis)
        .filter(|((lo, hi), _)| lo < hi)
        .map(|(_, a)| (1.0 - a.iter().map(|l| l.exp()).sum::<f64>()).abs())
        .sum();
    // each cell is exp of a sum of M logs; its relative rounding is about eps M |ln P|
    let entropy: f64 = axis
        .iter()
        .map(|a| a.iter().filter(|l| l.is_finite()).map(|l| -l * l.exp()).sum::<f64>())
        .sum();
    meta.tail_bound = missing + f64::EPSILON * (1.0 + axis.len() as f64 * entropy);
    Ok(JointDistribution {
        ranges: ranges.to_vec(),
        log_probs,
        meta,
    })
}
