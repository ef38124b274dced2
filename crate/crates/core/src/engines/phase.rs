use super::mixture::{poisson_mixture, MixtureNode};
use super::{check_ranges, EngineTag, JointDistribution, Metadata};
use crate::detectors::{mean_count, means_for, DetectorArray};
use crate::error::{Error, Result};
use crate::sources::{RadialDensity, SourcePair};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseOptions {
    /// Stop doubling once no grid point moves by more than this.
    pub tol: f64,
    pub start_nodes: usize,
    pub max_nodes: usize,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        PhaseOptions {
            tol: 1e-10,
            start_nodes: 64,
            max_nodes: 4096,
        }
    }
}

/// Amplitudes `(|alpha|^2, |beta|^2)` of a pair of delta-node sources.
fn delta_means(pair: &SourcePair) -> Result<(f64, f64)> {
    let SourcePair::Independent(a, b) = pair else {
        return Err(Error::Unsupported("phase average needs independent sources".into()));
    };
    match (a.radial(), b.radial()) {
        (Ok(RadialDensity::Delta { r: ra }), Ok(RadialDensity::Delta { r: rb })) => Ok((ra * ra, rb * rb)),
        _ => Err(Error::Unsupported(
            "phase average needs Poissonian sources (radial delta nodes)".into(),
        )),
    }
}

/// Phase-averaged product of Poissons for two independent Poissonian sources.
///
/// Periodic trapezoid in the relative phase, doubled from `start_nodes`
/// until the largest per-point change falls below `tol`.
pub fn phase_average_joint(
    array: &DetectorArray,
    pair: &SourcePair,
    ranges: &[(u64, u64)],
    opts: PhaseOptions,
) -> Result<JointDistribution> {
    check_ranges(ranges, array.len())?;
    let (ua, ub) = delta_means(pair)?;
    phase_average_means(array, ua, ub, ranges, opts)
}

pub(crate) fn phase_average_means(
    array: &DetectorArray,
    ua: f64,
    ub: f64,
    ranges: &[(u64, u64)],
    opts: PhaseOptions,
) -> Result<JointDistribution> {
    let means = means_for(array, ua, ub);
    let node = |j: usize, k: usize| MixtureNode {
        weight: 1.0,
        means: array
            .specs
            .iter()
            .zip(&means)
            .map(|(s, m)| mean_count(s, *m, -PI + 2.0 * PI * j as f64 / k as f64))
            .collect(),
    };
    let total: usize = ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).product();
    let mut sum = vec![0.0; total];
    let mut k = opts.start_nodes.max(1);
    let first: Vec<MixtureNode> = (0..k).map(|j| node(j, k)).collect();
    let mut dropped = poisson_mixture(&first, ranges, &mut sum);
    let mut prev: Vec<f64> = sum.iter().map(|s| s / k as f64).collect();
    let mut achieved = f64::INFINITY;
    while k < opts.max_nodes {
        let k2 = 2 * k;
        let fresh: Vec<MixtureNode> = (0..k).map(|j| node(2 * j + 1, k2)).collect();
        dropped += poisson_mixture(&fresh, ranges, &mut sum);
        let est: Vec<f64> = sum.iter().map(|s| s / k2 as f64).collect();
        achieved = est
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prev = est;
        k = k2;
        if achieved < opts.tol {
            break;
        }
    }
    if !(achieved < opts.tol) {
        return Err(Error::NonConvergence {
            what: format!("phase trapezoid after {k} nodes"),
            achieved,
            wanted: opts.tol,
        });
    }
    let mut meta = Metadata::new(EngineTag::PhaseAverage);
    meta.phase_nodes = k;
    meta.achieved_tol = achieved;
    meta.tail_bound = dropped / k as f64;
    Ok(JointDistribution::from_linear(ranges.to_vec(), &prev, meta))
}

/// Slab-by-slab phase average over the first axis, for grids too large to
/// hold at once. `visit` sees each slab (first axis pinned) and its result is
/// collected in axis order.
pub fn phase_average_slabs<T: Send>(
    array: &DetectorArray,
    pair: &SourcePair,
    ranges: &[(u64, u64)],
    opts: PhaseOptions,
    visit: impl Fn(u64, &JointDistribution) -> T + Sync,
) -> Result<Vec<T>> {
    check_ranges(ranges, array.len())?;
    let (ua, ub) = delta_means(pair)?;
    let (lo, hi) = ranges[0];
    (lo..=hi)
        .into_par_iter()
        .map(|n0| {
            let mut r = ranges.to_vec();
            r[0] = (n0, n0);
            let slab = phase_average_means(array, ua, ub, &r, opts)?;
            Ok(visit(n0, &slab))
        })
        .collect()
}
