//! Weighted sums of Poisson products, the common kernel of the phase and
//! radial engines.

use crate::logmath::ln_poisson;
use rayon::prelude::*;

/// Contributions below this value at a single outcome are skipped.
pub const STREAM_CUT: f64 = 1e-30;

/// One quadrature node: weight and the per-detector Poisson means.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureNode {
    pub weight: f64,
    pub means: Vec<f64>,
}

/// Poisson pmf on `[lo, hi]` restricted to values `>= cut`.
pub(crate) fn poisson_window(mu: f64, lo: u64, hi: u64, cut: f64) -> (u64, Vec<f64>) {
    if mu <= 0.0 {
        return if lo == 0 { (0, vec![1.0]) } else { (0, vec![]) };
    }
    if lo == hi {
        let p = ln_poisson(lo, mu).exp();
        return if p >= cut { (lo, vec![p]) } else { (lo, vec![]) };
    }
    let m = (mu.floor() as u64).clamp(lo, hi);
    let pm = ln_poisson(m, mu).exp();
    if pm < cut {
        return (m, vec![]);
    }
    let mut down = Vec::new();
    let (mut p, mut n) = (pm, m);
    while n > lo {
        p = p * n as f64 / mu;
        n -= 1;
        if p < cut {
            break;
        }
        down.push(p);
    }
    let start = m - down.len() as u64;
    down.reverse();
    down.push(pm);
    let (mut p, mut n) = (pm, m);
    while n < hi {
        p = p * mu / (n + 1) as f64;
        n += 1;
        if p < cut {
            break;
        }
        down.push(p);
    }
    (start, down)
}

struct Windows {
    weight: f64,
    axes: Vec<(u64, Vec<f64>)>,
}

/// Adds `sum_j w_j prod_m Poisson(n_m; mu_jm)` into `out` (dense over `ranges`).
///
/// Returns a bound on the mass that fell outside the box or below the cut,
/// counted on free axes only, plus the summation rounding of this call.
pub fn poisson_mixture(nodes: &[MixtureNode], ranges: &[(u64, u64)], out: &mut [f64]) -> f64 {
    let shape: Vec<usize> = ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).collect();
    let total: usize = shape.iter().product();
    assert_eq!(out.len(), total);
    let m = ranges.len();
    let row: usize = shape[1..].iter().product();
    let mut dropped = 0.0;
    for chunk in nodes.chunks(2048) {
        let wins: Vec<Windows> = chunk
            .par_iter()
            .map(|node| {
                let cut = STREAM_CUT / node.weight.max(1e-300);
                let first = poisson_window(node.means[0], ranges[0].0, ranges[0].1, cut);
                if first.1.is_empty() {
                    return Windows {
                        weight: node.weight,
                        axes: vec![],
                    };
                }
                let mut axes = vec![first];
                axes.extend((1..m).map(|k| poisson_window(node.means[k], ranges[k].0, ranges[k].1, cut)));
                Windows {
                    weight: node.weight,
                    axes,
                }
            })
            .collect();
        for w in &wins {
            if w.axes.is_empty() {
                if ranges[0].0 < ranges[0].1 {
                    dropped += w.weight;
                }
                continue;
            }
            let mut lost = 0.0;
            for (k, (_, v)) in w.axes.iter().enumerate() {
                if ranges[k].0 < ranges[k].1 {
                    // absolute: recurrence rounding can push the window sum above one
                    lost += (1.0 - v.iter().sum::<f64>()).abs();
                }
            }
            dropped += w.weight * lost.min(1.0);
        }
        // the chunk is summed into a fresh slab first, so each cell adds at most
        // `chunk.len()` terms before one addition into `out`
        let after: f64 = out
            .par_chunks_mut(row)
            .enumerate()
            .map(|(i0, slab)| {
                let n0 = ranges[0].0 + i0 as u64;
                let mut tmp: Option<Vec<f64>> = None;
                for w in &wins {
                    if w.axes.is_empty() {
                        continue;
                    }
                    let (s0, v0) = &w.axes[0];
                    if n0 < *s0 || n0 >= s0 + v0.len() as u64 {
                        continue;
                    }
                    let a = w.weight * v0[(n0 - s0) as usize];
                    if a < STREAM_CUT {
                        continue;
                    }
                    let t = tmp.get_or_insert_with(|| vec![0.0; slab.len()]);
                    accumulate(t, &shape[1..], &ranges[1..], &w.axes[1..], a);
                }
                match tmp {
                    Some(t) => slab.iter_mut().zip(&t).map(|(o, x)| {
                        *o += x;
                        *o
                    }).sum(),
                    None => 0.0,
                }
            })
            .sum();
        let mass: f64 = chunk.iter().map(|n| n.weight).sum();
        dropped += f64::EPSILON * (chunk.len() as f64 * mass + after);
    }
    dropped
}

fn accumulate(slab: &mut [f64], shape: &[usize], ranges: &[(u64, u64)], axes: &[(u64, Vec<f64>)], a: f64) {
    if axes.is_empty() {
        slab[0] += a;
        return;
    }
    let (s, v) = &axes[0];
    let stride: usize = shape[1..].iter().product();
    let lo = ranges[0].0;
    if axes.len() == 1 {
        let off = (s - lo) as usize;
        for (dst, p) in slab[off..off + v.len()].iter_mut().zip(v) {
            *dst += a * p;
        }
        return;
    }
    for (i, p) in v.iter().enumerate() {
        let b = a * p;
        if b < STREAM_CUT {
            continue;
        }
        let off = (s - lo) as usize + i;
        accumulate(&mut slab[off * stride..(off + 1) * stride], &shape[1..], &ranges[1..], &axes[1..], b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_matches_closed_form() {
        let (s, v) = poisson_window(250.0, 0, 727, 1e-30);
        for (i, p) in v.iter().enumerate() {
            let n = s + i as u64;
            let exact = ln_poisson(n, 250.0).exp();
            assert!((p - exact).abs() <= 1e-12 * exact, "n={n}");
        }
        let s: f64 = v.iter().sum();
        assert!((s - 1.0).abs() < 1e-14, "{s}");
    }

    #[test]
    fn window_outside_range_is_empty() {
        let (_, v) = poisson_window(500.0, 0, 100, 1e-30);
        assert!(v.is_empty());
        let (_, v) = poisson_window(0.0, 3, 9, 1e-30);
        assert!(v.is_empty());
    }

    #[test]
    fn product_and_dropped_mass() {
        let nodes = vec![MixtureNode { weight: 1.0, means: vec![3.0, 5.0] }];
        let ranges = [(0, 40), (0, 10)];
        let mut out = vec![0.0; 41 * 11];
        let dropped = poisson_mixture(&nodes, &ranges, &mut out);
        let tail5: f64 = (11..200).map(|n| ln_poisson(n, 5.0).exp()).sum();
        assert!((dropped - tail5).abs() < 1e-14);
        let p = out[2 * 11 + 4];
        assert!((p - (ln_poisson(2, 3.0) + ln_poisson(4, 5.0)).exp()).abs() < 1e-16);
    }
}
