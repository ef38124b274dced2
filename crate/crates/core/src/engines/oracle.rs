//! Small-N reference evaluation from a dense two-mode density matrix.
//!
//! Independent of the dilation: factorial moments
//! `G(k) = Tr(rho :prod_m I_m^{k_m}:)` are computed from the normal-ordered
//! polynomial in `a^dag, b^dag, a, b`, and counts follow from
//! `P(n) = sum_j prod_m (-1)^{j_m} / (n_m! j_m!) G(n + j)`.

use super::{EngineTag, JointDistribution, Metadata};
use crate::detectors::DetectorArray;
use crate::error::{invalid, Error, Result};
use crate::sources::{common_source_amplitudes, SourcePair};
use num_complex::Complex64;

/// Largest total photon number the oracle accepts.
pub const ORACLE_MAX_PHOTONS: u64 = 12;

const DIM: usize = ORACLE_MAX_PHOTONS as usize + 1;
const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Density matrix on `|n_a, n_b>` with `n_a + n_b <= 12`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: Vec<Complex64>,
    /// largest total photon number with a nonzero row
    top: u64,
}

fn idx(p: u64, q: u64) -> usize {
    p as usize * DIM + q as usize
}

impl DensityMatrix {
    fn empty() -> Self {
        DensityMatrix {
            rho: vec![C0; DIM * DIM * DIM * DIM],
            top: 0,
        }
    }

    /// Pure state `sum c |n_a, n_b>`; amplitudes are used as given.
    pub fn pure(amps: &[(u64, u64, Complex64)]) -> Result<Self> {
        let mut d = Self::empty();
        for &(p, q, _) in amps {
            if p + q > ORACLE_MAX_PHOTONS {
                return invalid(format!("oracle basis holds at most {ORACLE_MAX_PHOTONS} photons"));
            }
            d.top = d.top.max(p + q);
        }
        let n = DIM * DIM;
        for &(p, q, x) in amps {
            for &(r, s, y) in amps {
                d.rho[idx(p, q) * n + idx(r, s)] += x * y.conj();
            }
        }
        Ok(d)
    }

    pub fn fock(na: u64, nb: u64) -> Result<Self> {
        Self::pure(&[(na, nb, Complex64::new(1.0, 0.0))])
    }

    /// `sum_i w_i rho_i`
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Self {
        let mut d = Self::empty();
        for (w, r) in parts {
            for (x, y) in d.rho.iter_mut().zip(&r.rho) {
                *x += y * *w;
            }
            d.top = d.top.max(r.top);
        }
        d
    }

    /// Density matrix of a source pair whose support fits the oracle basis.
    pub fn from_pair(pair: &SourcePair) -> Result<Self> {
        match pair {
            SourcePair::Independent(a, b) => {
                let (da, db) = (a.diagonal()?, b.diagonal()?);
                let mut d = Self::empty();
                let n = DIM * DIM;
                for (p, wa) in da.entries() {
                    for (q, wb) in db.entries() {
                        if p + q > ORACLE_MAX_PHOTONS {
                            return invalid("source support exceeds the oracle basis");
                        }
                        d.rho[idx(p, q) * n + idx(p, q)] += Complex64::new(wa * wb, 0.0);
                        d.top = d.top.max(p + q);
                    }
                }
                Ok(d)
            }
            SourcePair::CommonNumber { n, c, s, delta } => Self::common(*n, *c, *s, *delta),
            SourcePair::CommonDiagonal { p, c, s, delta } => {
                let parts = p
                    .entries()
                    .map(|(n, w)| Ok((w, Self::common(n, *c, *s, *delta)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::mixture(&parts))
            }
            SourcePair::ReferencedPhase { .. } => {
                Err(Error::Unsupported("oracle needs a finite number-state support".into()))
            }
        }
    }

    fn common(n: u64, c: f64, s: f64, delta: f64) -> Result<Self> {
        let amps: Vec<_> = common_source_amplitudes(n, c, s, delta)
            .into_iter()
            .map(|(k, z)| (k, n - k, z))
            .collect();
        Self::pure(&amps)
    }

    pub fn trace(&self) -> f64 {
        let n = DIM * DIM;
        (0..n).map(|i| self.rho[i * n + i].re).sum()
    }

    /// `Tr(rho a^dag^i b^dag^j a^k b^l)`
    fn moment(&self, i: u64, j: u64, k: u64, l: u64, fact: &[f64]) -> Complex64 {
        let n = DIM * DIM;
        let mut acc = C0;
        for p in k..=self.top {
            for q in l..=(self.top - p) {
                let (y0, y1) = (p - k + i, q - l + j);
                if y0 + y1 > self.top {
                    continue;
                }
                let f = (fact[p as usize] / fact[(p - k) as usize] * fact[y0 as usize] / fact[(p - k) as usize]
                    * fact[q as usize]
                    / fact[(q - l) as usize]
                    * fact[y1 as usize]
                    / fact[(q - l) as usize])
                    .sqrt();
                acc += self.rho[idx(p, q) * n + idx(y0, y1)] * f;
            }
        }
        acc
    }
}

/// Factorial moments `G(k)` for all `k` with `sum k <= top`, dense over `(top+1)^M`.
fn factorial_moments(array: &DetectorArray, rho: &DensityMatrix) -> Vec<f64> {
    let m = array.len();
    let top = rho.top as usize;
    let side = top + 1;
    let mut g = vec![0.0; side.pow(m as u32)];
    let fact: Vec<f64> = (0..=2 * DIM).scan(1.0, |f, i| {
        if i > 0 {
            *f *= i as f64;
        }
        Some(*f)
    }).collect();
    let mats: Vec<_> = array.specs.iter().map(|s| s.matrix()).collect();
    // coef[i][kk]: coefficient of a^dag^i b^dag^(d-i) a^kk b^(d-kk)
    let eval = |coef: &Vec<Vec<Complex64>>, d: usize| -> f64 {
        let mut s = C0;
        for (i, row) in coef.iter().enumerate() {
            for (kk, c) in row.iter().enumerate() {
                if *c != C0 {
                    s += c * rho.moment(i as u64, (d - i) as u64, kk as u64, (d - kk) as u64, &fact);
                }
            }
        }
        s.re
    };
    struct Frame {
        k: Vec<usize>,
        coef: Vec<Vec<Complex64>>,
        last: usize,
    }
    let mut stack = vec![Frame {
        k: vec![0; m],
        coef: vec![vec![Complex64::new(1.0, 0.0)]],
        last: 0,
    }];
    while let Some(f) = stack.pop() {
        let d: usize = f.k.iter().sum();
        let flat = f.k.iter().fold(0, |acc, &x| acc * side + x);
        g[flat] = eval(&f.coef, d);
        if d == top {
            continue;
        }
        for axis in f.last..m {
            let r = &mats[axis];
            let mut next = vec![vec![C0; d + 2]; d + 2];
            for i in 0..=d {
                for kk in 0..=d {
                    let c = f.coef[i][kk];
                    if c == C0 {
                        continue;
                    }
                    next[i + 1][kk + 1] += c * r[0][0];
                    next[i + 1][kk] += c * r[0][1];
                    next[i][kk + 1] += c * r[1][0];
                    next[i][kk] += c * r[1][1];
                }
            }
            let mut k = f.k.clone();
            k[axis] += 1;
            stack.push(Frame { k, coef: next, last: axis });
        }
    }
    g
}

fn count_prob(g: &[f64], side: usize, top: usize, n: &[u64]) -> f64 {
    let m = n.len();
    let base: usize = n.iter().map(|&x| x as usize).sum();
    if base > top {
        return 0.0;
    }
    let ln_fact = |x: usize| crate::logmath::ln_factorial(x as u64);
    let mut j = vec![0usize; m];
    let mut sum = 0.0;
    loop {
        let tot: usize = j.iter().sum();
        if tot + base <= top {
            let flat = n.iter().zip(&j).fold(0, |acc, (&a, &b)| acc * side + a as usize + b);
            let mut w = 0.0;
            for (a, b) in n.iter().zip(&j) {
                w -= ln_fact(*a as usize) + ln_fact(*b);
            }
            let sign = if tot % 2 == 1 { -1.0 } else { 1.0 };
            sum += sign * w.exp() * g[flat];
        }
        // odometer over j with sum bounded by top - base
        let mut ax = m;
        loop {
            if ax == 0 {
                return sum;
            }
            ax -= 1;
            j[ax] += 1;
            if j.iter().sum::<usize>() + base <= top {
                break;
            }
            j[ax] = 0;
        }
    }
}

/// `P(n)` for one outcome.
pub fn brute_force_oracle(array: &DetectorArray, rho: &DensityMatrix, n: &[u64]) -> Result<f64> {
    if n.len() != array.len() {
        return Err(Error::Shape(format!("{} counts for {} detectors", n.len(), array.len())));
    }
    let g = factorial_moments(array, rho);
    Ok(count_prob(&g, rho.top as usize + 1, rho.top as usize, n))
}

/// Every outcome with `sum n <= N`, on the full `[0, N]^M` box.
pub fn brute_force_all(array: &DetectorArray, rho: &DensityMatrix) -> Result<JointDistribution> {
    let top = rho.top as usize;
    let side = top + 1;
    let g = factorial_moments(array, rho);
    let ranges = vec![(0, rho.top); array.len()];
    let mut probs = vec![0.0; side.pow(array.len() as u32)];
    for (flat, p) in probs.iter_mut().enumerate() {
        let mut n = vec![0u64; array.len()];
        let mut f = flat;
        for x in n.iter_mut().rev() {
            *x = (f % side) as u64;
            f /= side;
        }
        *p = count_prob(&g, side, top, &n).max(0.0);
    }
    Ok(JointDistribution::from_linear(ranges, &probs, Metadata::new(EngineTag::Derived)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::DetectorSpec;

    #[test]
    fn one_photon_one_detector() {
        let a = DetectorArray::new(vec![DetectorSpec::new(0.3, 0.0, 0.0, 0.0).unwrap()]).unwrap();
        let rho = DensityMatrix::fock(1, 0).unwrap();
        assert!((brute_force_oracle(&a, &rho, &[1]).unwrap() - 0.3).abs() < 1e-15);
        assert!((brute_force_oracle(&a, &rho, &[0]).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn sums_to_one() {
        let a = DetectorArray::standard_three();
        let rho = DensityMatrix::fock(2, 3).unwrap();
        let d = brute_force_all(&a, &rho).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_is_bounded() {
        assert!(DensityMatrix::fock(7, 6).is_err());
        assert!(DensityMatrix::fock(6, 6).is_ok());
    }
}
