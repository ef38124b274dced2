//! Marginals, conditionals, phase estimation, peak manifolds and sampling.

use crate::detectors::{mean_count, DetectorArray, DetectorSpec, MeanFieldTrajectory};
use crate::engines::{EngineTag, JointDistribution, Metadata};
use crate::error::{invalid, Error, Result};
use crate::logmath::{log_sum_exp, pairwise_sum};
use crate::sources::wrap_phase;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Conditioning on outcomes with probability below this is refused.
pub const CONDITION_FLOOR: f64 = 1e-300;

/// Sum out every axis not listed in `keep` (kept in the given order).
pub fn marginal(dist: &JointDistribution, keep: &[usize]) -> Result<JointDistribution> {
    let m = dist.dims();
    let mut seen = vec![false; m];
    for &k in keep {
        if k >= m || seen[k] {
            return Err(Error::Shape(format!("bad marginal axes {keep:?} for {m} axes")));
        }
        seen[k] = true;
    }
    let ranges: Vec<(u64, u64)> = keep.iter().map(|&k| dist.ranges[k]).collect();
    let oshape: Vec<usize> = ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).collect();
    let olen: usize = oshape.iter().product();
    let target = |i: usize| -> usize {
        let c = dist.counts_of(i);
        keep.iter()
            .zip(&ranges)
            .zip(&oshape)
            .fold(0, |acc, ((&k, r), s)| acc * s + (c[k] - r.0) as usize)
    };
    let mut peak = vec![f64::NEG_INFINITY; olen];
    for (i, &l) in dist.log_probs.iter().enumerate() {
        let t = target(i);
        peak[t] = peak[t].max(l);
    }
    let mut acc = vec![0.0; olen];
    for (i, &l) in dist.log_probs.iter().enumerate() {
        let t = target(i);
        if peak[t] > f64::NEG_INFINITY {
            acc[t] += (l - peak[t]).exp();
        }
    }
    let log_probs = acc.iter().zip(&peak).map(|(a, p)| p + a.ln()).collect();
    Ok(JointDistribution {
        ranges,
        log_probs,
        meta: dist.meta.clone(),
    })
}

/// Normalized distribution of the remaining axes given `fixed = [(axis, count)]`.
pub fn conditional(dist: &JointDistribution, fixed: &[(usize, u64)]) -> Result<JointDistribution> {
    let m = dist.dims();
    for &(k, c) in fixed {
        if k >= m {
            return Err(Error::Shape(format!("axis {k} out of {m}")));
        }
        if c < dist.ranges[k].0 || c > dist.ranges[k].1 {
            return Err(Error::Shape(format!("count {c} outside axis {k} range")));
        }
    }
    let free: Vec<usize> = (0..m).filter(|k| !fixed.iter().any(|f| f.0 == *k)).collect();
    let mut cells = Vec::new();
    for (i, &l) in dist.log_probs.iter().enumerate() {
        let c = dist.counts_of(i);
        if fixed.iter().all(|&(k, v)| c[k] == v) {
            cells.push(l);
        }
    }
    let ln_norm = log_sum_exp(&cells);
    if !(ln_norm >= CONDITION_FLOOR.ln()) {
        return Err(Error::ZeroProbability(ln_norm.exp()));
    }
    let mut meta = dist.meta.clone();
    meta.tail_bound = (meta.tail_bound / ln_norm.exp()).min(1.0);
    Ok(JointDistribution {
        ranges: free.iter().map(|&k| dist.ranges[k]).collect(),
        log_probs: cells.iter().map(|l| l - ln_norm).collect(),
        meta,
    })
}

/// One-axis probability vector starting at count `lo`.
#[derive(Clone, Debug, PartialEq)]
pub struct Slice {
    pub lo: u64,
    pub probs: Vec<f64>,
}

/// A local maximum of a slice and its watershed basin.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub position: u64,
    pub prob: f64,
    /// Mass of the basin over the slice total.
    pub weight: f64,
    /// Inclusive basin bounds.
    pub basin: (u64, u64),
}

impl Slice {
    /// From a distribution with exactly one free axis.
    pub fn from_dist(d: &JointDistribution) -> Result<Slice> {
        let free = d.free_axes();
        if free.len() != 1 {
            return Err(Error::Shape(format!("slice needs one free axis, found {}", free.len())));
        }
        Ok(Slice {
            lo: d.ranges[free[0]].0,
            probs: d.probs(),
        })
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.probs)
    }

    pub fn mean(&self) -> f64 {
        self.moments_in(0, self.probs.len() - 1).0
    }

    pub fn std_dev(&self) -> f64 {
        self.moments_in(0, self.probs.len() - 1).1.sqrt()
    }

    /// Mean and variance over index range `[a, b]`, renormalized.
    fn moments_in(&self, a: usize, b: usize) -> (f64, f64) {
        let p = &self.probs[a..=b];
        let z = pairwise_sum(p);
        let n = |i: usize| (self.lo + (a + i) as u64) as f64;
        let m = pairwise_sum(&p.iter().enumerate().map(|(i, x)| n(i) * x).collect::<Vec<_>>()) / z;
        let v = pairwise_sum(&p.iter().enumerate().map(|(i, x)| (n(i) - m).powi(2) * x).collect::<Vec<_>>()) / z;
        (m, v)
    }

    /// Strict local maxima after merging plateaus; maxima closer than
    /// `sqrt(n)` are merged into the higher one. Maxima below `1e-10` of the
    /// global maximum are ignored as numerical floor.
    pub fn modes(&self) -> Vec<Mode> {
        let p = &self.probs;
        let n = p.len();
        if n == 0 {
            return vec![];
        }
        let gmax = p.iter().copied().fold(0.0, f64::max);
        if gmax <= 0.0 {
            return vec![];
        }
        let floor = 1e-10 * gmax;
        let mut peaks: Vec<usize> = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && p[j + 1] == p[i] {
                j += 1;
            }
            let left = i == 0 || p[i - 1] < p[i];
            let right = j + 1 == n || p[j + 1] < p[j];
            if left && right && p[i] >= floor {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        }
        // merge neighbours closer than one shot-noise unit
        let mut merged = true;
        while merged && peaks.len() > 1 {
            merged = false;
            for k in 0..peaks.len() - 1 {
                let (a, b) = (peaks[k], peaks[k + 1]);
                let scale = ((self.lo as usize + b) as f64).max(1.0).sqrt();
                if ((b - a) as f64) < scale {
                    let drop = if p[a] >= p[b] { k + 1 } else { k };
                    peaks.remove(drop);
                    merged = true;
                    break;
                }
            }
        }
        self.basins(&peaks)
    }

    fn basins(&self, peaks: &[usize]) -> Vec<Mode> {
        let p = &self.probs;
        let mut bounds = vec![0usize];
        for w in peaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut arg = a;
            for k in a..=b {
                if p[k] < p[arg] {
                    arg = k;
                }
            }
            bounds.push(arg + 1);
        }
        bounds.push(p.len());
        let total = self.total();
        peaks
            .iter()
            .enumerate()
            .map(|(k, &pk)| {
                let (a, b) = (bounds[k], bounds[k + 1] - 1);
                Mode {
                    position: self.lo + pk as u64,
                    prob: p[pk],
                    weight: pairwise_sum(&p[a..=b]) / total,
                    basin: (self.lo + a as u64, self.lo + b as u64),
                }
            })
            .collect()
    }

    /// Modes that stay separated when every valley shallower than
    /// `frac * (larger neighbouring peak)` is filled in.
    pub fn prominent_modes(&self, frac: f64) -> Vec<Mode> {
        let p = &self.probs;
        let mut peaks: Vec<usize> = self.modes().iter().map(|m| (m.position - self.lo) as usize).collect();
        loop {
            let mut worst: Option<(usize, f64)> = None;
            for k in 0..peaks.len().saturating_sub(1) {
                let (a, b) = (peaks[k], peaks[k + 1]);
                let valley = p[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
                let depth = p[a].min(p[b]) - valley;
                let need = frac * p[a].max(p[b]);
                if depth < need && worst.is_none_or(|w| depth / need < w.1) {
                    worst = Some((k, depth / need));
                }
            }
            match worst {
                Some((k, _)) => {
                    let drop = if p[peaks[k]] >= p[peaks[k + 1]] { k + 1 } else { k };
                    peaks.remove(drop);
                }
                None => break,
            }
        }
        self.basins(&peaks)
    }
}

/// Relative phase solutions of `mean_count(spec, means, delta) = n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseEstimate {
    pub delta_plus: f64,
    pub delta_minus: f64,
    /// Only one solution (cosine at an extremum).
    pub degenerate: bool,
}

/// Invert the mean-field count of one detector; `means` are `(<n>_a, <n>_b)`.
pub fn estimate_phase(spec: &DetectorSpec, means: (f64, f64), n: f64) -> Result<PhaseEstimate> {
    let (a, b) = means;
    if !(spec.xi > 0.0) || !(a > 0.0) || !(b > 0.0) {
        return invalid("phase estimate needs xi > 0 and positive means");
    }
    let mut u = (n - a - b) / (2.0 * spec.xi * (a * b).sqrt());
    if u.abs() > 1.0 + 1e-12 {
        return Err(Error::OutsideRange(u));
    }
    if (1.0 - u.abs()).abs() <= 1e-12 {
        u = u.signum();
    }
    let acos = u.acos();
    Ok(PhaseEstimate {
        delta_plus: wrap_phase(acos - spec.theta),
        delta_minus: wrap_phase(-acos - spec.theta),
        degenerate: u.abs() == 1.0,
    })
}

/// `n_m(delta+)` and `n_m(delta-)` for every detector, from source means `(N_a, N_b)`.
pub fn predict_counts(array: &DetectorArray, means: (f64, f64), est: &PhaseEstimate) -> (Vec<f64>, Vec<f64>) {
    let at = |d: f64| {
        array
            .specs
            .iter()
            .map(|s| mean_count(s, (s.r_aa * means.0, s.r_bb * means.1), d))
            .collect()
    };
    (at(est.delta_plus), at(est.delta_minus))
}

/// Distance from outcomes to a mean-field trajectory in shot-noise units.
///
/// Per-axis deviations are divided by `sqrt(n_m(delta))` (floored at one
/// count); the distance is the Euclidean norm minimized over `delta`.
#[derive(Clone, Debug)]
pub struct TrajectoryMetric {
    specs: Vec<DetectorSpec>,
    means: Vec<(f64, f64)>,
    grid: Vec<f64>,
    pts: Vec<Vec<f64>>,
}

impl TrajectoryMetric {
    pub fn new(traj: &MeanFieldTrajectory) -> Self {
        let k = 512;
        let grid: Vec<f64> = (0..k).map(|j| -PI + 2.0 * PI * j as f64 / k as f64).collect();
        let pts = grid.iter().map(|&d| traj.at(d)).collect();
        TrajectoryMetric {
            specs: traj.specs.clone(),
            means: traj.means.clone(),
            grid,
            pts,
        }
    }

    pub fn dims(&self) -> usize {
        self.specs.len()
    }

    fn dist2_at(&self, n: &[f64], nbar: &[f64]) -> f64 {
        n.iter().zip(nbar).map(|(x, m)| (x - m).powi(2) / m.max(1.0)).sum()
    }

    fn dist2_delta(&self, n: &[f64], d: f64) -> f64 {
        let nbar: Vec<f64> = self.specs.iter().zip(&self.means).map(|(s, m)| mean_count(s, *m, d)).collect();
        self.dist2_at(n, &nbar)
    }

    /// Minimum normalized distance and the phase where it is reached.
    pub fn distance(&self, n: &[f64]) -> (f64, f64) {
        let (mut best, mut arg) = (f64::INFINITY, 0);
        for (j, p) in self.pts.iter().enumerate() {
            let d = self.dist2_at(n, p);
            if d < best {
                best = d;
                arg = j;
            }
        }
        let step = 2.0 * PI / self.grid.len() as f64;
        let (mut a, mut b) = (self.grid[arg] - step, self.grid[arg] + step);
        // golden-section refinement inside the bracketing grid cells
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (self.dist2_delta(n, c), self.dist2_delta(n, d));
        for _ in 0..40 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = self.dist2_delta(n, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = self.dist2_delta(n, d);
            }
        }
        let (fx, x) = if fc < fd { (fc, c) } else { (fd, d) };
        if fx < best {
            (fx.sqrt(), wrap_phase(x))
        } else {
            (best.sqrt(), self.grid[arg])
        }
    }
}

/// Average over detectors of `<n_m> = <n_m>_a + <n_m>_b`.
pub fn mean_level(traj: &MeanFieldTrajectory) -> f64 {
    traj.means.iter().map(|(a, b)| a + b).sum::<f64>() / traj.means.len() as f64
}

/// Peak-manifold threshold `0.01 / nbar^2`.
pub fn p_min_rule(traj: &MeanFieldTrajectory) -> f64 {
    let n = mean_level(traj);
    0.01 / (n * n)
}

/// The alternative reading `0.1 / (2 pi nbar^2)` of the threshold rule.
pub fn p_min_alternative(traj: &MeanFieldTrajectory) -> f64 {
    let n = mean_level(traj);
    0.1 / (2.0 * PI * n * n)
}

/// Outcomes with `P >= p_min` and their relation to the trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakManifold {
    pub points: Vec<(Vec<u64>, f64)>,
    pub p_min: f64,
    /// Mass of the retained points over the total mass seen.
    pub coverage: f64,
    /// Largest normalized distance of a retained point to the trajectory.
    pub max_distance: f64,
    pub retained_mass: f64,
    pub total_mass: f64,
}

impl PeakManifold {
    /// Combine results computed on disjoint parts of a grid.
    pub fn merge(parts: Vec<PeakManifold>) -> PeakManifold {
        let p_min = parts.first().map_or(0.0, |p| p.p_min);
        let mut points = Vec::new();
        let (mut kept, mut total, mut far) = (0.0, 0.0, 0.0f64);
        for p in parts {
            kept += p.retained_mass;
            total += p.total_mass;
            far = far.max(p.max_distance);
            points.extend(p.points);
        }
        PeakManifold {
            points,
            p_min,
            coverage: if total > 0.0 { kept / total } else { 0.0 },
            max_distance: far,
            retained_mass: kept,
            total_mass: total,
        }
    }
}

/// Peak manifold with the default threshold rule.
pub fn peak_manifold(dist: &JointDistribution, traj: &MeanFieldTrajectory) -> Result<PeakManifold> {
    peak_manifold_with(dist, &TrajectoryMetric::new(traj), p_min_rule(traj))
}

pub fn peak_manifold_with(dist: &JointDistribution, metric: &TrajectoryMetric, p_min: f64) -> Result<PeakManifold> {
    if metric.dims() != dist.dims() {
        return Err(Error::Shape("trajectory and distribution differ in detector count".into()));
    }
    let probs = dist.probs();
    let mut points = Vec::new();
    let mut kept = Vec::new();
    let mut far = 0.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if p >= p_min {
            let c = dist.counts_of(i);
            let x: Vec<f64> = c.iter().map(|&v| v as f64).collect();
            far = far.max(metric.distance(&x).0);
            kept.push(p);
            points.push((c, p));
        }
    }
    let total = pairwise_sum(&probs);
    let retained = pairwise_sum(&kept);
    Ok(PeakManifold {
        points,
        p_min,
        coverage: if total > 0.0 { retained / total } else { 0.0 },
        max_distance: far,
        retained_mass: retained,
        total_mass: total,
    })
}

/// Mass within `k` normalized shot-noise units of the trajectory.
pub fn tube_coverage(dist: &JointDistribution, traj: &MeanFieldTrajectory, k: f64) -> Result<f64> {
    if traj.specs.len() != dist.dims() {
        return Err(Error::Shape("trajectory and distribution differ in detector count".into()));
    }
    let metric = TrajectoryMetric::new(traj);
    let probs = dist.probs();
    let inside: Vec<f64> = probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| {
            let x: Vec<f64> = dist.counts_of(i).iter().map(|&v| v as f64).collect();
            if metric.distance(&x).0 <= k {
                p
            } else {
                0.0
            }
        })
        .collect();
    Ok(pairwise_sum(&inside) / pairwise_sum(&probs))
}

/// Groups of outcome vectors connected through neighbours (`|dn_m| <= 1` on every axis).
pub fn connected_components(points: &[Vec<u64>]) -> Vec<Vec<usize>> {
    let index: HashMap<&Vec<u64>, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut parent: Vec<usize> = (0..points.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let m = points.first().map_or(0, |p| p.len());
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(m as u32))
        .map(|mut c| {
            (0..m)
                .map(|_| {
                    let o = (c % 3) as i64 - 1;
                    c /= 3;
                    o
                })
                .collect()
        })
        .filter(|o: &Vec<i64>| o.iter().any(|&x| x != 0))
        .collect();
    for (i, p) in points.iter().enumerate() {
        for o in &offsets {
            let q: Option<Vec<u64>> = p
                .iter()
                .zip(o)
                .map(|(&a, &d)| (a as i64 + d).try_into().ok())
                .collect();
            if let Some(j) = q.as_ref().and_then(|q| index.get(q)) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, *j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..points.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

/// Peak width on a slice.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotNoiseReport {
    pub mode: u64,
    /// Mean count inside the basin of the mode.
    pub mean: f64,
    /// Standard deviation inside the basin.
    pub width: f64,
    /// `width / sqrt(mean)`
    pub gamma: f64,
}

/// Width of the peak nearest to `peak`, measured inside its watershed basin.
pub fn shot_noise(slice: &Slice, peak: f64) -> Result<ShotNoiseReport> {
    let modes = slice.modes();
    let m = modes
        .iter()
        .min_by(|a, b| {
            (a.position as f64 - peak)
                .abs()
                .partial_cmp(&(b.position as f64 - peak).abs())
                .unwrap()
        })
        .ok_or_else(|| Error::Invalid("slice has no mode".into()))?;
    let a = (m.basin.0 - slice.lo) as usize;
    let b = (m.basin.1 - slice.lo) as usize;
    let (mean, var) = slice.moments_in(a, b);
    let width = var.sqrt();
    Ok(ShotNoiseReport {
        mode: m.position,
        mean,
        width,
        gamma: width / mean.max(f64::MIN_POSITIVE).sqrt(),
    })
}

/// `gamma sqrt(n) + (n / N) dN`, the width expected for number-spread sources.
pub fn predicted_width(gamma: f64, nbar: f64, big_n: f64, delta_n: f64) -> f64 {
    gamma * nbar.sqrt() + nbar / big_n * delta_n
}

/// Draws from a materialized distribution, one axis at a time along its conditionals.
pub fn sample_joint(dist: &JointDistribution, count: usize, seed: u64) -> Vec<Vec<u64>> {
    let shape = dist.shape();
    let m = shape.len();
    // level k: masses of blocks with the first k + 1 axes fixed
    let mut levels: Vec<Vec<f64>> = vec![dist.probs()];
    for k in (0..m - 1).rev() {
        let below = levels.last().unwrap();
        let s = shape[k + 1];
        levels.push(below.chunks(s).map(pairwise_sum).collect());
    }
    levels.reverse();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut block = 0usize;
            let mut out = Vec::with_capacity(m);
            for (k, lvl) in levels.iter().enumerate() {
                let kids = &lvl[block * shape[k]..(block + 1) * shape[k]];
                let z: f64 = kids.iter().sum();
                let target = rng.gen::<f64>() * z;
                let mut acc = 0.0;
                let mut pick = kids.len() - 1;
                for (i, &w) in kids.iter().enumerate() {
                    acc += w;
                    if target < acc {
                        pick = i;
                        break;
                    }
                }
                out.push(dist.ranges[k].0 + pick as u64);
                block = block * shape[k] + pick;
            }
            out
        })
        .collect()
}

/// Mean-field draws: `delta` uniform on `[-pi, pi)` unless fixed, then
/// independent Poisson counts at `n_m(delta)`.
pub fn sample_meanfield(
    array: &DetectorArray,
    means: (f64, f64),
    delta: Option<f64>,
    count: usize,
    seed: u64,
) -> Vec<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let d = delta.unwrap_or_else(|| rng.gen_range(-PI..PI));
            array
                .specs
                .iter()
                .map(|s| {
                    let mu = mean_count(s, (s.r_aa * means.0, s.r_bb * means.1), d);
                    if mu > 0.0 {
                        Poisson::new(mu).unwrap().sample(&mut rng) as u64
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect()
}

/// Wrap a linear probability vector as a one-axis distribution.
pub fn slice_distribution(lo: u64, probs: &[f64]) -> JointDistribution {
    JointDistribution::from_linear(
        vec![(lo, lo + probs.len() as u64 - 1)],
        probs,
        Metadata::new(EngineTag::Derived),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logmath::ln_poisson;

    fn poisson_slice(mu: f64, hi: u64) -> Slice {
        Slice {
            lo: 0,
            probs: (0..=hi).map(|n| ln_poisson(n, mu).exp()).collect(),
        }
    }

    #[test]
    fn phase_round_trip() {
        let spec = DetectorSpec::new(0.3, 0.2, 1.0, 0.0).unwrap();
        let e = estimate_phase(&spec, (150.0, 100.0), 106.0).unwrap();
        assert!((e.delta_plus / PI - 0.7).abs() < 1e-3);
        assert!((e.delta_minus / PI + 0.7).abs() < 1e-3);
        for d in [e.delta_plus, e.delta_minus] {
            assert!((mean_count(&spec, (150.0, 100.0), d) - 106.0).abs() < 1e-9);
        }
    }

    #[test]
    fn phase_extremes() {
        let spec = DetectorSpec::new(0.3, 0.2, 1.0, 0.4).unwrap();
        let top = 250.0 + 2.0 * (150.0f64 * 100.0).sqrt();
        let e = estimate_phase(&spec, (150.0, 100.0), top).unwrap();
        assert!(e.degenerate);
        assert!((e.delta_plus + 0.4).abs() < 1e-12);
        let e = estimate_phase(&spec, (150.0, 100.0), 250.0).unwrap();
        assert!((e.delta_plus - (PI / 2.0 - 0.4)).abs() < 1e-12);
        assert!(matches!(estimate_phase(&spec, (150.0, 100.0), top + 1.0), Err(Error::OutsideRange(_))));
    }

    #[test]
    fn poisson_slice_modes() {
        let s = poisson_slice(250.0, 500);
        let m = s.modes();
        assert_eq!(m.len(), 1);
        assert!((m[0].weight - 1.0).abs() < 1e-12);
        let r = shot_noise(&s, 250.0).unwrap();
        assert!((r.gamma - 1.0).abs() < 0.02);
    }

    #[test]
    fn two_bumps_and_watershed() {
        let a = poisson_slice(100.0, 600);
        let b = poisson_slice(400.0, 600);
        let s = Slice {
            lo: 0,
            probs: a.probs.iter().zip(&b.probs).map(|(x, y)| 0.5 * (x + y)).collect(),
        };
        let m = s.modes();
        assert_eq!(m.len(), 2);
        assert!((m[0].weight - 0.5).abs() < 1e-6);
        assert_eq!(s.prominent_modes(0.1).len(), 2);
    }

    #[test]
    fn plateau_counts_once() {
        let s = Slice {
            lo: 3,
            probs: vec![0.1, 0.2, 0.2, 0.2, 0.1],
        };
        let m = s.modes();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].position, 5);
    }

    #[test]
    fn components_split() {
        let pts = vec![vec![0, 0], vec![1, 1], vec![5, 5], vec![5, 6]];
        assert_eq!(connected_components(&pts).len(), 2);
    }
}
