use super::mixture::{poisson_mixture, MixtureNode, STREAM_CUT};
use super::phase::PhaseOptions;
use super::{check_ranges, EngineTag, JointDistribution, Metadata};
use crate::detectors::DetectorArray;
use crate::error::{Error, Result};
use crate::logmath::ln_factorial;
use crate::quadrature::composite_gl;
use crate::sources::{RadialDensity, SourcePair};
use statrs::function::gamma::{gamma_lr, gamma_ur};
use std::f64::consts::PI;

/// Tail mass left outside the radial integration range, per side.
const RADIAL_TAIL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialOptions {
    pub phase: PhaseOptions,
    /// Gauss-Legendre order per panel.
    pub order: usize,
    /// Largest accepted change between the panel rule and its coarsening.
    pub radial_tol: f64,
    /// Panel width in units of the Poisson width in `r` of the brightest detector.
    pub panel_widths: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        RadialOptions {
            phase: PhaseOptions::default(),
            order: 8,
            radial_tol: 1e-6,
            panel_widths: 3.0,
        }
    }
}

fn gamma_quantile_upper(shape: f64, scale: f64, tail: f64) -> f64 {
    // smallest u with P(U > u) <= tail
    let mut hi = shape * scale + 10.0 * (shape.sqrt() + 1.0) * scale;
    while gamma_ur(shape, hi / scale) > tail {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_ur(shape, mid / scale) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn gamma_quantile_lower(shape: f64, scale: f64, tail: f64) -> f64 {
    // largest u with P(U < u) <= tail
    if gamma_lr(shape, f64::MIN_POSITIVE) > tail {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = shape * scale;
    if gamma_lr(shape, hi / scale) <= tail {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_lr(shape, mid / scale) <= tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Upper end of the `u = r^2` range carrying the density's mass.
pub(crate) fn u_upper(d: &RadialDensity) -> f64 {
    match d {
        RadialDensity::Delta { r } => r * r,
        RadialDensity::Gamma { shape, scale } => gamma_quantile_upper(*shape, *scale, 1e-13),
        RadialDensity::Tabulated { r, .. } => r.last().unwrap().powi(2),
    }
}

/// Quadrature nodes `(r_i, w_i)` for `int r P(r) f(r) dr`, panel width at most `h`.
///
/// Weights are renormalised to sum to one; the second value is the deviation
/// of the raw sum from one.
pub fn radial_nodes(d: &RadialDensity, h: f64, order: usize) -> (Vec<(f64, f64)>, f64) {
    let (xs, ws) = match d {
        RadialDensity::Delta { r } => return (vec![(*r, 1.0)], 0.0),
        RadialDensity::Gamma { shape, scale } => {
            let ulo = gamma_quantile_lower(*shape, *scale, RADIAL_TAIL);
            let uhi = gamma_quantile_upper(*shape, *scale, RADIAL_TAIL);
            // density width in r is about sqrt(scale)/2
            let hh = h.min(0.5 * scale.sqrt());
            composite_gl(ulo.sqrt(), uhi.sqrt(), hh, order)
        }
        RadialDensity::Tabulated { r, .. } => {
            let mut xs = vec![];
            let mut ws = vec![];
            for k in r.windows(2) {
                let (x, w) = composite_gl(k[0], k[1], h, order);
                xs.extend(x);
                ws.extend(w);
            }
            (xs, ws)
        }
    };
    let mut nodes: Vec<(f64, f64)> = xs
        .iter()
        .zip(&ws)
        .map(|(&r, &w)| (r, w * r * d.eval(r).unwrap()))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let s: f64 = nodes.iter().map(|n| n.1).sum();
    for n in &mut nodes {
        n.1 /= s;
    }
    (nodes, (s - 1.0).abs())
}

fn pair_densities(pair: &SourcePair) -> Result<(RadialDensity, RadialDensity, Option<f64>)> {
    match pair {
        SourcePair::Independent(a, b) => Ok((a.radial()?, b.radial()?, None)),
        SourcePair::ReferencedPhase { a, b, delta } => Ok((a.radial()?, b.radial()?, Some(*delta))),
        _ => Err(Error::Unsupported("radial engine needs P-representable sources".into())),
    }
}

/// Triple quadrature over `(r_a, r_b, delta)` of the Poisson product.
///
/// Radial integrals use composite Gauss-Legendre panels in `r`, sized to the
/// Poisson width of the brightest detector; the phase uses the doubling
/// trapezoid of the phase engine. A referenced-phase pair skips the phase
/// integral. The radial rule is checked once against its twofold coarsening.
pub fn radial_phase_average_joint(
    array: &DetectorArray,
    pair: &SourcePair,
    ranges: &[(u64, u64)],
    opts: RadialOptions,
) -> Result<JointDistribution> {
    check_ranges(ranges, array.len())?;
    let (da, db, fixed_delta) = pair_densities(pair)?;
    let raa = array.specs.iter().map(|s| s.r_aa).fold(0.0, f64::max);
    let rbb = array.specs.iter().map(|s| s.r_bb).fold(0.0, f64::max);
    // Poisson width in r is 1 / (2 sqrt(R)) at any r
    let ha = 0.5 * opts.panel_widths / raa.max(1e-12).sqrt();
    let hb = 0.5 * opts.panel_widths / rbb.max(1e-12).sqrt();
    let (na, _) = radial_nodes(&da, ha, opts.order);
    let (nb, _) = radial_nodes(&db, hb, opts.order);
    let fine = run(array, &na, &nb, fixed_delta, ranges, opts.phase, None)?;
    // coarse rule: panels twice as wide
    let (ca, _) = radial_nodes(&da, 2.0 * ha, opts.order);
    let (cb, _) = radial_nodes(&db, 2.0 * hb, opts.order);
    let coarse = if ca.len() < na.len() || cb.len() < nb.len() {
        Some(run(array, &ca, &cb, fixed_delta, ranges, opts.phase, Some(fine.1))?)
    } else {
        None
    };
    let radial_change = coarse
        .as_ref()
        .map(|c| c.0.iter().zip(&fine.0).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        .unwrap_or(0.0);
    if radial_change > opts.radial_tol {
        return Err(Error::NonConvergence {
            what: format!("radial rule with {}x{} nodes", na.len(), nb.len()),
            achieved: radial_change,
            wanted: opts.radial_tol,
        });
    }
    let mut meta = Metadata::new(EngineTag::Radial);
    meta.phase_nodes = fine.1;
    meta.radial_nodes = na.len().max(nb.len());
    meta.achieved_tol = fine.2.max(radial_change);
    meta.tail_bound = fine.3 + 4.0 * RADIAL_TAIL;
    Ok(JointDistribution::from_linear(ranges.to_vec(), &fine.0, meta))
}

fn ln_pois(n: u64, mu: f64) -> f64 {
    if mu > 0.0 {
        n as f64 * mu.ln() - mu - ln_factorial(n)
    } else if n == 0 {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Returns (probabilities, phase nodes, phase change, dropped mass).
fn run(
    array: &DetectorArray,
    na: &[(f64, f64)],
    nb: &[(f64, f64)],
    fixed_delta: Option<f64>,
    ranges: &[(u64, u64)],
    phase: PhaseOptions,
    force_k: Option<usize>,
) -> Result<(Vec<f64>, usize, f64, f64)> {
    let total: usize = ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).product();
    let mut sum = vec![0.0; total];
    let fixed: Vec<(usize, u64)> = ranges
        .iter()
        .enumerate()
        .filter(|(_, r)| r.0 == r.1)
        .map(|(m, r)| (m, r.0))
        .collect();
    let specs = &array.specs;
    let coef: Vec<(f64, f64, f64)> = specs
        .iter()
        .map(|s| (s.r_aa, s.r_bb, 2.0 * s.xi * (s.r_aa * s.r_bb).sqrt()))
        .collect();
    let ln_cut = STREAM_CUT.ln();
    // adds the given phases (weight one each) to `sum`
    let add = |deltas: &[f64], sum: &mut [f64]| -> f64 {
        let cosines: Vec<Vec<f64>> = deltas
            .iter()
            .map(|d| specs.iter().map(|s| (d + s.theta).cos()).collect())
            .collect();
        let mut dropped = 0.0;
        for &(ra, wa) in na {
            let mut chunk = Vec::new();
            let ua = ra * ra;
            for &(rb, wb) in nb {
                let ub = rb * rb;
                let w = wa * wb;
                let lw = w.ln();
                let cross = (ua * ub).sqrt();
                // best case over all phases for each pinned axis
                let reachable = fixed.iter().all(|&(m, n)| {
                    let (a, b, c) = coef[m];
                    let mid = a * ua + b * ub;
                    let mu = (n as f64).clamp((mid - c * cross).max(0.0), mid + c * cross);
                    ln_pois(n, mu) + lw >= ln_cut
                });
                if !reachable {
                    continue;
                }
                for cs in &cosines {
                    let mu: Vec<f64> = coef
                        .iter()
                        .zip(cs)
                        .map(|(&(a, b, c), &co)| (a * ua + b * ub + c * cross * co).max(0.0))
                        .collect();
                    let keep = fixed.iter().all(|&(m, n)| ln_pois(n, mu[m]) + lw >= ln_cut);
                    if keep {
                        chunk.push(MixtureNode { weight: w, means: mu });
                    }
                }
            }
            if !chunk.is_empty() {
                dropped += poisson_mixture(&chunk, ranges, sum);
            }
        }
        dropped
    };
    if let Some(d) = fixed_delta {
        let dropped = add(&[d], &mut sum);
        return Ok((sum, 1, 0.0, dropped));
    }
    let grid = |j: usize, k: usize| -PI + 2.0 * PI * j as f64 / k as f64;
    let mut k = force_k.unwrap_or(phase.start_nodes).max(1);
    let first: Vec<f64> = (0..k).map(|j| grid(j, k)).collect();
    let mut dropped = add(&first, &mut sum);
    if force_k.is_some() {
        let est: Vec<f64> = sum.iter().map(|s| s / k as f64).collect();
        return Ok((est, k, 0.0, dropped / k as f64));
    }
    let mut prev: Vec<f64> = sum.iter().map(|s| s / k as f64).collect();
    let mut achieved = f64::INFINITY;
    while k < phase.max_nodes {
        let k2 = 2 * k;
        let fresh: Vec<f64> = (0..k).map(|j| grid(2 * j + 1, k2)).collect();
        dropped += add(&fresh, &mut sum);
        let est: Vec<f64> = sum.iter().map(|s| s / k2 as f64).collect();
        achieved = est.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prev = est;
        k = k2;
        if achieved < phase.tol {
            break;
        }
    }
    if !(achieved < phase.tol) {
        return Err(Error::NonConvergence {
            what: format!("phase trapezoid after {k} nodes"),
            achieved,
            wanted: phase.tol,
        });
    }
    Ok((prev, k, achieved, dropped / k as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_nodes_normalised_with_right_moments() {
        let d = RadialDensity::Gamma { shape: 1.0, scale: 50.0 };
        let (nodes, err) = radial_nodes(&d, 0.5, 8);
        assert!(err < 1e-10, "{err}");
        let m1: f64 = nodes.iter().map(|(r, w)| w * r * r).sum();
        assert!((m1 - 50.0).abs() < 1e-8);
        let d = RadialDensity::Gamma { shape: 100.0, scale: 5.0 };
        let (nodes, err) = radial_nodes(&d, 0.5, 8);
        assert!(err < 1e-10, "{err}");
        let m2: f64 = nodes.iter().map(|(r, w)| w * r.powi(4)).sum();
        assert!((m2 - 100.0 * 101.0 * 25.0).abs() < 1e-6 * m2);
    }

    #[test]
    fn quantiles_bracket_mass() {
        let u = gamma_quantile_upper(1.0, 10.0, 1e-14);
        assert!((u - 10.0 * (1e14f64).ln()).abs() < 1e-6 * u);
        assert!(gamma_quantile_lower(1.0, 10.0, 1e-14) < 1e-12);
    }
}
