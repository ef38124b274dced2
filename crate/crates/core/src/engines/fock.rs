//! Exact evaluation for diagonal and common-source inputs through the
//! detector dilation.
//!
//! The state of the two input modes is carried as a vector over
//! `|k, N - k>` and the detector rows are peeled off one at a time. Before
//! each row the two modes are rotated so that the row couples to the first
//! mode only, with strength `t`; the row then takes `n` of that mode's `k`
//! photons with amplitude `sqrt(C(k, n)) t^n (1 - t^2)^((k - n)/2)`. After the
//! last row whatever is left belongs to the loss modes, so a branch's
//! probability is the squared norm of its vector.
//!
//! Rotations act through `exp(-i G)` with `G` the tridiagonal generator in the
//! `N`-photon space, expanded in Chebyshev polynomials. Every step is unitary
//! or contractive, so rounding stays near `1e-16 |psi|` for any `N`.

use super::{check_ranges, EngineTag, JointDistribution, Metadata};
use crate::detectors::{dilation, DetectorArray};
use crate::error::{Error, Result};
use crate::logmath::{ln_binomial, pairwise_sum};
use crate::sources::{common_source_amplitudes, SourcePair, SourceSpec};
use num_complex::Complex64;
use rayon::prelude::*;

type C = Complex64;
const C0: C = C { re: 0.0, im: 0.0 };

/// Pure two-mode inputs the engine evaluates directly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PureInput {
    /// `|N_a, N_b>`
    Fock { na: u64, nb: u64 },
    /// `(c a^dag + s e^{i delta} b^dag)^N |0> / sqrt(N!)`
    Common { n: u64, c: f64, s: f64, delta: f64 },
}

impl PureInput {
    pub fn photons(&self) -> u64 {
        match self {
            PureInput::Fock { na, nb } => na + nb,
            PureInput::Common { n, .. } => *n,
        }
    }

    fn vector(&self) -> Vec<C> {
        match *self {
            PureInput::Fock { na, nb } => {
                let mut v = vec![C0; (na + nb + 1) as usize];
                v[na as usize] = C::new(1.0, 0.0);
                v
            }
            PureInput::Common { n, c, s, delta } => {
                let mut v = vec![C0; (n + 1) as usize];
                for (k, z) in common_source_amplitudes(n, c, s, delta) {
                    v[k as usize] = z;
                }
                v
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FockOptions {
    /// Permit grids whose estimated work exceeds `max_work`.
    pub allow_expensive: bool,
    /// Mixture components lighter than this are skipped (mass goes to the tail bound).
    pub weight_floor: f64,
    /// Branches whose weighted probability falls below this are dropped (mass goes to the tail bound).
    pub term_cut: f64,
    /// Work estimate (components x branches x N^2) above which a grid counts as expensive.
    pub max_work: f64,
}

impl Default for FockOptions {
    fn default() -> Self {
        FockOptions {
            allow_expensive: false,
            weight_floor: 1e-18,
            term_cut: 1e-40,
            max_work: 5e9,
        }
    }
}

/// One detector row: the rotation that isolates it and its coupling.
#[derive(Clone, Debug)]
struct Step {
    /// generator `H` with `exp(-i H) = V^T`
    h: [[C; 2]; 2],
    /// eigenvalues of `H` are `-phi +- alpha`
    phi: f64,
    alpha: f64,
    t: f64,
    r: f64,
}

/// Rows in dilation order and the rows of each detector.
struct Plan {
    steps: Vec<Step>,
    rows_of: Vec<Vec<usize>>,
}

fn plan(array: &DetectorArray) -> Result<Plan> {
    let dil = dilation(array)?;
    // creation-operator map: a_l^dag -> sum_o w[o][l] o^dag
    let mut w: Vec<[C; 2]> = dil.rows.iter().map(|v| [v[0].conj(), v[1].conj()]).collect();
    let mut steps = Vec::with_capacity(w.len());
    for s in 0..w.len() {
        let row = w[s];
        let t = (row[0].norm_sqr() + row[1].norm_sqr()).sqrt();
        if t == 0.0 {
            steps.push(Step {
                h: [[C0; 2]; 2],
                phi: 0.0,
                alpha: 0.0,
                t: 0.0,
                r: 1.0,
            });
            continue;
        }
        let t1 = t.min(1.0);
        let r = (1.0 - t1 * t1).max(0.0).sqrt();
        // V columns: row^T / t and its orthogonal complement
        let v = [[row[0] / t, -row[1].conj() / t], [row[1] / t, row[0].conj() / t]];
        let a = [[v[0][0], v[1][0]], [v[0][1], v[1][1]]];
        let (h, phi, alpha) = unitary_log(&a);
        steps.push(Step { h, phi, alpha, t: t1, r });
        for later in w.iter_mut().skip(s + 1) {
            let x = *later;
            let mut y = [C0; 2];
            for (j, yj) in y.iter_mut().enumerate() {
                *yj = x[0] * v[0][j].conj() + x[1] * v[1][j].conj();
            }
            y[0] = if r > 1e-15 { y[0] / r } else { C0 };
            *later = y;
        }
    }
    let mut rows_of = vec![vec![]; array.len()];
    for (r, &m) in dil.row_detector.iter().enumerate() {
        rows_of[m].push(r);
    }
    Ok(Plan { steps, rows_of })
}

/// Hermitian `H` with `exp(-i H) = A` for a 2x2 unitary, as `-phi I + alpha n.sigma`.
fn unitary_log(a: &[[C; 2]; 2]) -> ([[C; 2]; 2], f64, f64) {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let phi = 0.5 * det.arg();
    let e = C::from_polar(1.0, -phi);
    let u = [[a[0][0] * e, a[0][1] * e], [a[1][0] * e, a[1][1] * e]];
    let cos_a = (0.5 * (u[0][0] + u[1][1]).re).clamp(-1.0, 1.0);
    // i (U - cos a) = sin(a) n.sigma, Hermitian up to rounding
    let i = C::new(0.0, 1.0);
    let dz = 0.5 * ((i * (u[0][0] - cos_a)).re - (i * (u[1][1] - cos_a)).re);
    let off = 0.5 * (i * u[0][1] + (i * u[1][0]).conj());
    let sin_a = (dz * dz + off.norm_sqr()).sqrt();
    let alpha = sin_a.atan2(cos_a);
    let f = if sin_a > 1e-300 { alpha / sin_a } else { 0.0 };
    let h = [
        [C::new(dz * f - phi, 0.0), off * f],
        [off.conj() * f, C::new(-dz * f - phi, 0.0)],
    ];
    (h, phi, alpha)
}

/// `J_k(x)` for `k = 0..=kmax` by downward recurrence, normalized with
/// `J_0 + 2 sum J_2k = 1`.
fn bessel_j_all(x: f64, kmax: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; kmax + 1];
        v[0] = 1.0;
        return v;
    }
    let start = kmax.max(x as usize) + 30 + (x.cbrt() * 12.0) as usize;
    let mut out = vec![0.0; start + 1];
    let (mut hi, mut cur) = (0.0f64, 1e-200f64);
    out[start] = cur;
    for k in (1..=start).rev() {
        let lower = 2.0 * k as f64 / x * cur - hi;
        hi = cur;
        cur = lower;
        out[k - 1] = cur;
        if cur.abs() > 1e200 {
            for v in out[k - 1..=start].iter_mut() {
                *v *= 1e-200;
            }
            hi *= 1e-200;
            cur *= 1e-200;
        }
    }
    let norm = out[0] + 2.0 * out.iter().skip(2).step_by(2).sum::<f64>();
    out.truncate(kmax + 1);
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `exp(-i G) psi` in the `N`-photon space, `N = psi.len() - 1`.
fn rotate(step: &Step, psi: &[C]) -> Vec<C> {
    let n = psi.len() - 1;
    let nf = n as f64;
    let c = -step.phi * nf;
    let w = step.alpha * nf;
    let h = &step.h;
    if n == 0 || w < 1e-12 {
        // G is c up to O(w)
        let mut out = psi.to_vec();
        for (k, z) in out.iter_mut().enumerate() {
            let g = h[0][0].re * k as f64 + h[1][1].re * (n - k) as f64;
            *z *= C::from_polar(1.0, -g);
        }
        return out;
    }
    let diag: Vec<f64> = (0..=n)
        .map(|k| (h[0][0].re * k as f64 + h[1][1].re * (n - k) as f64 - c) / w)
        .collect();
    // up[k] = <k+1| G |k> / w
    let up: Vec<C> = (0..n).map(|k| h[0][1] * (((k + 1) * (n - k)) as f64).sqrt() / w).collect();
    let apply = |v: &[C], out: &mut [C]| {
        for k in 0..=n {
            let mut s = v[k] * diag[k];
            if k > 0 {
                s += up[k - 1] * v[k - 1];
            }
            if k < n {
                s += up[k].conj() * v[k + 1];
            }
            out[k] = s;
        }
    };
    let kmax = (w + 12.0 * w.cbrt() + 40.0) as usize;
    let jb = bessel_j_all(w, kmax);
    let mut t_prev: Vec<C> = psi.to_vec();
    let mut t_cur = vec![C0; n + 1];
    apply(psi, &mut t_cur);
    let mut acc: Vec<C> = psi.iter().map(|z| z * jb[0]).collect();
    let mut coef = C::new(0.0, -2.0);
    for (a, b) in acc.iter_mut().zip(&t_cur) {
        *a += coef * jb[1] * b;
    }
    let mut t_next = vec![C0; n + 1];
    for &j in jb.iter().skip(2) {
        apply(&t_cur, &mut t_next);
        coef *= C::new(0.0, -1.0);
        let cj = coef * j;
        for k in 0..=n {
            t_next[k] = 2.0 * t_next[k] - t_prev[k];
            acc[k] += cj * t_next[k];
        }
        std::mem::swap(&mut t_prev, &mut t_cur);
        std::mem::swap(&mut t_cur, &mut t_next);
    }
    let phase = C::from_polar(1.0, -c);
    acc.iter().map(|z| z * phase).collect()
}

/// Amplitudes left after the isolated row registers `n` photons.
fn extract(psi: &[C], t: f64, r: f64, n: u64) -> Vec<C> {
    let big = psi.len() as u64 - 1;
    if n > big || (t == 0.0 && n > 0) {
        return vec![];
    }
    let lt = t.ln();
    let lr = r.ln();
    (n..=big)
        .map(|k| {
            let z = psi[k as usize];
            if z == C0 || (r == 0.0 && k > n) {
                return C0;
            }
            let mut l = 0.5 * ln_binomial(k, n);
            if n > 0 {
                l += n as f64 * lt;
            }
            if k > n {
                l += (k - n) as f64 * lr;
            }
            z * l.exp()
        })
        .collect()
}

fn norm_sqr(v: &[C]) -> f64 {
    pairwise_sum(&v.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
}

/// Pure components and their weights for a source pair, with the skipped mass.
fn components(pair: &SourcePair, floor: f64) -> Result<(Vec<(f64, PureInput)>, f64)> {
    let mut out = Vec::new();
    let mut skipped = 0.0;
    let mut push = |w: f64, p: PureInput| {
        if w >= floor {
            out.push((w, p));
        } else {
            skipped += w;
        }
    };
    match pair {
        SourcePair::Independent(a, b) => {
            for s in [a, b] {
                if let SourceSpec::CustomRadial(_) = s {
                    return Err(Error::Unsupported("Fock engine needs diagonal sources".into()));
                }
            }
            let da = a.diagonal()?;
            let db = b.diagonal()?;
            for (na, pa) in da.entries() {
                for (nb, pb) in db.entries() {
                    push(pa * pb, PureInput::Fock { na, nb });
                }
            }
            skipped += da.tail_mass + db.tail_mass;
        }
        SourcePair::CommonNumber { n, c, s, delta } => push(
            1.0,
            PureInput::Common {
                n: *n,
                c: *c,
                s: *s,
                delta: *delta,
            },
        ),
        SourcePair::CommonDiagonal { p, c, s, delta } => {
            for (n, w) in p.entries() {
                push(
                    w,
                    PureInput::Common {
                        n,
                        c: *c,
                        s: *s,
                        delta: *delta,
                    },
                );
            }
            skipped += p.tail_mass;
        }
        SourcePair::ReferencedPhase { .. } => {
            return Err(Error::Unsupported(
                "Fock engine cannot take a referenced-phase pair".into(),
            ))
        }
    }
    Ok((out, skipped))
}

/// Exact joint distribution for diagonal and common-source inputs.
pub fn fock_joint(
    array: &DetectorArray,
    pair: &SourcePair,
    ranges: &[(u64, u64)],
    opts: FockOptions,
) -> Result<JointDistribution> {
    let (comps, skipped) = components(pair, opts.weight_floor)?;
    let mut dist = fock_mixture(array, &comps, ranges, opts)?;
    dist.meta.tail_bound += skipped;
    Ok(dist)
}

/// Weighted sum over pure inputs.
pub(crate) fn fock_mixture(
    array: &DetectorArray,
    comps: &[(f64, PureInput)],
    ranges: &[(u64, u64)],
    opts: FockOptions,
) -> Result<JointDistribution> {
    check_ranges(ranges, array.len())?;
    let plan = plan(array)?;
    let nmax = comps.iter().map(|c| c.1.photons()).max().unwrap_or(0);
    // one rotation per branch through the leading axes, each about N^2
    let branches: f64 = ranges[..ranges.len() - 1].iter().map(|r| (r.1 - r.0 + 1) as f64).product();
    let work = comps.len() as f64 * branches * (nmax as f64 + 1.0).powi(2);
    if work > opts.max_work && !opts.allow_expensive {
        return Err(Error::TooExpensive(format!(
            "Fock grid at {nmax} photons needs about {work:.1e} operations; request a conditional slice or allow expensive grids"
        )));
    }
    let shape: Vec<usize> = ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).collect();
    let total: usize = shape.iter().product();
    let walker = Walker {
        plan: &plan,
        ranges,
        shape: &shape,
        cut: opts.term_cut,
    };
    let (probs, dropped) = if comps.len() == 1 {
        // one component: split the work over the first axis
        let (w, input) = comps[0];
        let psi = input.vector();
        let slab = total / shape[0];
        let parts: Vec<(Vec<f64>, f64)> = (ranges[0].0..=ranges[0].1)
            .into_par_iter()
            .map(|n0| {
                let mut out = vec![0.0; total];
                let mut dropped = 0.0;
                walker.detector(0, &psi, w, 0, Some(n0), &mut out, &mut dropped);
                let i0 = (n0 - ranges[0].0) as usize;
                (out[i0 * slab..(i0 + 1) * slab].to_vec(), dropped)
            })
            .collect();
        let mut probs = Vec::with_capacity(total);
        let mut dropped = 0.0;
        for (p, d) in parts {
            probs.extend(p);
            dropped += d;
        }
        (probs, dropped)
    } else {
        let parts: Vec<(Vec<f64>, f64)> = comps
            .par_chunks(16)
            .map(|chunk| {
                let mut out = vec![0.0; total];
                let mut dropped = 0.0;
                for (w, input) in chunk {
                    walker.detector(0, &input.vector(), *w, 0, None, &mut out, &mut dropped);
                }
                (out, dropped)
            })
            .collect();
        let mut probs = vec![0.0; total];
        let mut dropped = 0.0;
        for (p, d) in parts {
            for (a, b) in probs.iter_mut().zip(p) {
                *a += b;
            }
            dropped += d;
        }
        (probs, dropped)
    };
    let mut meta = Metadata::new(EngineTag::Fock);
    meta.components = comps.len();
    meta.tail_bound = dropped + 1e-15 * (nmax as f64 + 1.0);
    let mut d = JointDistribution::from_linear(ranges.to_vec(), &probs, meta);
    if ranges.iter().all(|r| r.0 == 0 && r.0 < r.1) {
        let weight: f64 = comps.iter().map(|c| c.0).sum();
        d.meta.tail_bound += (weight - d.total()).max(0.0);
    }
    Ok(d)
}

struct Walker<'a> {
    plan: &'a Plan,
    ranges: &'a [(u64, u64)],
    shape: &'a [usize],
    cut: f64,
}

impl Walker<'_> {
    /// Branch over the counts of detector `m`; `only` pins its count.
    #[allow(clippy::too_many_arguments)]
    fn detector(
        &self,
        m: usize,
        psi: &[C],
        w: f64,
        cell: usize,
        only: Option<u64>,
        out: &mut [f64],
        dropped: &mut f64,
    ) {
        let p = w * norm_sqr(psi);
        if m == self.ranges.len() {
            out[cell] += p;
            return;
        }
        if p < self.cut {
            *dropped += p;
            return;
        }
        let (lo, hi) = only.map_or(self.ranges[m], |n| (n, n));
        let base = self.ranges[m].0;
        let hi = hi.min(psi.len() as u64 - 1);
        let at = |n: u64| cell * self.shape[m] + (n - base) as usize;
        let rows = &self.plan.rows_of[m];
        match rows.len() {
            0 => {
                if lo == 0 {
                    self.detector(m + 1, psi, w, at(0), None, out, dropped);
                }
            }
            1 => {
                let st = &self.plan.steps[rows[0]];
                let rot = rotate(st, psi);
                for n in lo..=hi {
                    let child = extract(&rot, st.t, st.r, n);
                    if !child.is_empty() {
                        self.detector(m + 1, &child, w, at(n), None, out, dropped);
                    }
                }
            }
            _ => {
                let (s1, s2) = (&self.plan.steps[rows[0]], &self.plan.steps[rows[1]]);
                let rot = rotate(s1, psi);
                for s in 0..=hi {
                    let first = extract(&rot, s1.t, s1.r, s);
                    if first.is_empty() {
                        continue;
                    }
                    let pf = w * norm_sqr(&first);
                    if pf < self.cut {
                        *dropped += pf;
                        continue;
                    }
                    let rot2 = rotate(s2, &first);
                    for n in lo.max(s)..=hi {
                        let child = extract(&rot2, s2.t, s2.r, n - s);
                        if !child.is_empty() {
                            self.detector(m + 1, &child, w, at(n), None, out, dropped);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::DetectorSpec;

    #[test]
    fn single_photon_single_detector() {
        let a = DetectorArray::new(vec![DetectorSpec::new(0.3, 0.0, 0.0, 0.0).unwrap()]).unwrap();
        let pair = SourcePair::independent(SourceSpec::NumberState(1), SourceSpec::NumberState(0));
        let d = fock_joint(&a, &pair, &[(0, 1)], FockOptions::default()).unwrap();
        assert!((d.prob(&[1]) - 0.3).abs() < 1e-15);
        assert!((d.prob(&[0]) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn vacuum() {
        let a = DetectorArray::standard_three();
        let pair = SourcePair::independent(SourceSpec::NumberState(0), SourceSpec::NumberState(0));
        let d = fock_joint(&a, &pair, &[(0, 2), (0, 2), (0, 2)], FockOptions::default()).unwrap();
        assert!((d.prob(&[0, 0, 0]) - 1.0).abs() < 1e-15);
        assert!((d.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bessel_sum_rule() {
        for x in [0.5, 7.0, 300.0, 5000.0] {
            let k = (x + 12.0 * f64::cbrt(x) + 40.0) as usize;
            let j = bessel_j_all(x, k);
            let s: f64 = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-12, "x={x}");
        }
        let j = bessel_j_all(1.0, 10);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
    }

    fn step_for(a: [[C; 2]; 2]) -> Step {
        let (h, phi, alpha) = unitary_log(&a);
        Step { h, phi, alpha, t: 1.0, r: 0.0 }
    }

    #[test]
    fn one_photon_follows_the_matrix() {
        let a = [
            [C::new(0.6, 0.0), C::new(0.0, 0.8)],
            [C::new(0.0, 0.8), C::new(0.6, 0.0)],
        ];
        let st = step_for(a);
        // |1, 0> is index 1 and maps to column 0 of A
        let out = rotate(&st, &[C0, C::new(1.0, 0.0)]);
        assert!((out[1] - a[0][0]).norm() < 1e-14, "{out:?}");
        assert!((out[0] - a[1][0]).norm() < 1e-14, "{out:?}");
    }

    #[test]
    fn rotation_is_unitary_at_large_n() {
        let a = [
            [C::from_polar(0.6, 0.3), C::from_polar(0.8, 1.1)],
            [C::from_polar(0.8, -0.7), C::from_polar(0.6, 2.1)],
        ];
        // make the second column orthogonal to the first
        let a = [[a[0][0], -a[1][0].conj()], [a[1][0], a[0][0].conj()]];
        let st = step_for(a);
        let mut psi = vec![C0; 3001];
        psi[1200] = C::new(1.0, 0.0);
        let out = rotate(&st, &psi);
        assert!((norm_sqr(&out) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expensive_grid_is_gated() {
        let a = DetectorArray::standard_three().subset(&[0, 1]).unwrap();
        let a3 = DetectorArray::standard_three();
        let pair = SourcePair::independent(SourceSpec::NumberState(200), SourceSpec::NumberState(200));
        let r = fock_joint(&a3, &pair, &[(0, 300), (0, 300), (0, 300)], FockOptions::default());
        assert!(matches!(r, Err(Error::TooExpensive(_))));
        let pair = SourcePair::independent(SourceSpec::binomial_f64(0.5, 10.0).unwrap(), SourceSpec::NumberState(20));
        let opts = FockOptions { max_work: 1e5, ..FockOptions::default() };
        let r = fock_joint(&a, &pair, &[(0, 40), (0, 40)], opts);
        assert!(matches!(r, Err(Error::TooExpensive(_))));
    }
}
