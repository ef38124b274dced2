//! Detector matrices, mean-field counts and the isometric dilation.

use crate::error::{invalid, Error, Result};
use crate::quadrature::phase_grid;
use crate::sources::SourcePair;
use num_complex::Complex64;

pub type Mat2 = [[Complex64; 2]; 2];

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// One detector, `R_ab = xi e^{i theta} sqrt(R_aa R_bb)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorSpec {
    pub r_aa: f64,
    pub r_bb: f64,
    pub xi: f64,
    pub theta: f64,
}

impl DetectorSpec {
    pub fn new(r_aa: f64, r_bb: f64, xi: f64, theta: f64) -> Result<Self> {
        if !(r_aa >= 0.0 && r_bb >= 0.0) || !r_aa.is_finite() || !r_bb.is_finite() {
            return invalid("detector diagonal entries must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&xi) {
            return invalid(format!("visibility xi = {xi} outside [0, 1]"));
        }
        if !theta.is_finite() {
            return invalid("theta must be finite");
        }
        Ok(DetectorSpec { r_aa, r_bb, xi, theta })
    }

    /// From a raw Hermitian matrix; `|R_ab| <= sqrt(R_aa R_bb)` within `1e-12`.
    pub fn from_matrix(m: Mat2) -> Result<Self> {
        if m[0][0].im.abs() > 1e-12 || m[1][1].im.abs() > 1e-12 {
            return invalid("detector matrix diagonal must be real");
        }
        if (m[0][1] - m[1][0].conj()).norm() > 1e-12 {
            return invalid("detector matrix must be Hermitian");
        }
        let (a, b) = (m[0][0].re, m[1][1].re);
        let off = m[0][1];
        let bound = (a * b).max(0.0).sqrt();
        if off.norm() > bound + 1e-12 {
            return invalid(format!("|R_ab| = {} exceeds sqrt(R_aa R_bb) = {bound}", off.norm()));
        }
        let (xi, theta) = if bound > 0.0 && off.norm() > 0.0 {
            ((off.norm() / bound).min(1.0), off.arg())
        } else {
            (0.0, 0.0)
        };
        Self::new(a, b, xi, theta)
    }

    pub fn matrix(&self) -> Mat2 {
        let off = Complex64::from_polar(self.xi * (self.r_aa * self.r_bb).sqrt(), self.theta);
        [
            [Complex64::new(self.r_aa, 0.0), off],
            [off.conj(), Complex64::new(self.r_bb, 0.0)],
        ]
    }

    pub fn scaled(&self, f: f64) -> DetectorSpec {
        DetectorSpec {
            r_aa: self.r_aa * f,
            r_bb: self.r_bb * f,
            ..*self
        }
    }

    /// Same detector with the two source modes exchanged.
    pub fn swapped(&self) -> DetectorSpec {
        DetectorSpec {
            r_aa: self.r_bb,
            r_bb: self.r_aa,
            xi: self.xi,
            theta: -self.theta,
        }
    }
}

/// Ordered list of detectors.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorArray {
    pub specs: Vec<DetectorSpec>,
}

impl DetectorArray {
    pub fn new(specs: Vec<DetectorSpec>) -> Result<Self> {
        if specs.is_empty() {
            return invalid("detector array needs at least one detector");
        }
        Ok(DetectorArray { specs })
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Three-detector configuration used for the Poissonian anchors.
    pub fn standard_three() -> Self {
        use std::f64::consts::PI;
        DetectorArray {
            specs: vec![
                DetectorSpec { r_aa: 0.3, r_bb: 0.2, xi: 1.0, theta: 0.0 },
                DetectorSpec { r_aa: 0.2, r_bb: 0.3, xi: 1.0, theta: 0.7 * PI },
                DetectorSpec { r_aa: 0.2, r_bb: 0.3, xi: 1.0, theta: -0.5 * PI },
            ],
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let specs = idx
            .iter()
            .map(|&i| self.specs.get(i).copied().ok_or_else(|| Error::Invalid(format!("no detector {i}"))))
            .collect::<Result<Vec<_>>>()?;
        DetectorArray::new(specs)
    }

    pub fn sum_matrix(&self) -> Mat2 {
        let mut s = [[C0; 2]; 2];
        for d in &self.specs {
            let m = d.matrix();
            for i in 0..2 {
                for j in 0..2 {
                    s[i][j] += m[i][j];
                }
            }
        }
        s
    }

    pub fn scaled(&self, f: f64) -> DetectorArray {
        DetectorArray {
            specs: self.specs.iter().map(|d| d.scaled(f)).collect(),
        }
    }

    pub fn swapped(&self) -> DetectorArray {
        DetectorArray {
            specs: self.specs.iter().map(|d| d.swapped()).collect(),
        }
    }
}

/// `(<n_m>_a, <n_m>_b)` per detector.
pub fn expected_counts(array: &DetectorArray, sources: &SourcePair) -> Result<Vec<(f64, f64)>> {
    let (na, nb) = sources.means()?;
    Ok(means_for(array, na, nb))
}

pub(crate) fn means_for(array: &DetectorArray, na: f64, nb: f64) -> Vec<(f64, f64)> {
    array.specs.iter().map(|d| (d.r_aa * na, d.r_bb * nb)).collect()
}

/// `n_a + n_b + 2 xi sqrt(n_a n_b) cos(delta + theta)`, clamped at zero.
pub fn mean_count(spec: &DetectorSpec, means: (f64, f64), delta: f64) -> f64 {
    let (a, b) = means;
    let v = a + b + 2.0 * spec.xi * (a * b).sqrt() * (delta + spec.theta).cos();
    v.max(0.0)
}

/// Closed curve of mean counts over a uniform phase grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldTrajectory {
    pub delta_grid: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Per-detector `(<n>_a, <n>_b)` the curve was built from.
    pub means: Vec<(f64, f64)>,
    pub specs: Vec<DetectorSpec>,
}

impl MeanFieldTrajectory {
    pub fn at(&self, delta: f64) -> Vec<f64> {
        self.specs
            .iter()
            .zip(&self.means)
            .map(|(s, m)| mean_count(s, *m, delta))
            .collect()
    }

    /// Largest mean count reached by each detector along the curve.
    pub fn max_per_axis(&self) -> Vec<f64> {
        self.specs
            .iter()
            .zip(&self.means)
            .map(|(s, &(a, b))| a + b + 2.0 * s.xi * (a * b).sqrt())
            .collect()
    }
}

pub fn trajectory(array: &DetectorArray, sources: &SourcePair, grid_size: usize) -> Result<MeanFieldTrajectory> {
    let (na, nb) = sources.means()?;
    trajectory_for_means(array, na, nb, grid_size)
}

pub fn trajectory_for_means(array: &DetectorArray, na: f64, nb: f64, grid_size: usize) -> Result<MeanFieldTrajectory> {
    if grid_size < 4 {
        return invalid("trajectory grid needs at least 4 points");
    }
    let means = means_for(array, na, nb);
    let delta_grid = phase_grid(grid_size);
    let points = delta_grid
        .iter()
        .map(|&d| array.specs.iter().zip(&means).map(|(s, m)| mean_count(s, *m, d)).collect())
        .collect();
    Ok(MeanFieldTrajectory {
        delta_grid,
        points,
        means,
        specs: array.specs.clone(),
    })
}

/// Eigen-decomposition of a 2x2 Hermitian matrix.
///
/// Eigenvalues descending; each eigenvector has its first nonzero component
/// real and positive. Exact ties keep the standard basis order.
pub fn hermitian_eig2(m: &Mat2) -> ([f64; 2], [[Complex64; 2]; 2]) {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b = m[0][1];
    let half = 0.5 * (a - d);
    let root = (half * half + b.norm_sqr()).sqrt();
    let mid = 0.5 * (a + d);
    let (l1, l2) = (mid + root, mid - root);
    let one = Complex64::new(1.0, 0.0);
    if b.norm() <= 1e-300 {
        return if a >= d {
            ([a, d], [[one, C0], [C0, one]])
        } else {
            ([d, a], [[C0, one], [one, C0]])
        };
    }
    let v1 = if a >= d {
        [Complex64::new(l1 - d, 0.0), b.conj()]
    } else {
        [b, Complex64::new(l1 - a, 0.0)]
    };
    let n = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
    let v1 = [v1[0] / n, v1[1] / n];
    let v2 = [-v1[1].conj(), v1[0].conj()];
    ([l1, l2], [phase_fix(v1), phase_fix(v2)])
}

fn phase_fix(v: [Complex64; 2]) -> [Complex64; 2] {
    let lead = if v[0].norm() > 1e-300 { v[0] } else { v[1] };
    let ph = Complex64::from_polar(1.0, -lead.arg());
    let mut out = [v[0] * ph, v[1] * ph];
    let k = if v[0].norm() > 1e-300 { 0 } else { 1 };
    out[k] = Complex64::new(out[k].norm(), 0.0);
    out
}

/// Output modes of the dilation: detector rows plus loss rows.
///
/// Each row is a vector `v` with `v v^dag` its contribution to the detector
/// matrix; together they satisfy `sum v v^dag + sum w w^dag = I`.
#[derive(Clone, Debug)]
pub struct Dilation {
    pub rows: Vec<[Complex64; 2]>,
    pub row_detector: Vec<usize>,
    pub loss: Vec<[Complex64; 2]>,
    /// Eigenvalues of the summed detector matrix, descending.
    pub total_eigenvalues: [f64; 2],
}

pub fn dilation(array: &DetectorArray) -> Result<Dilation> {
    let total = array.sum_matrix();
    let (lam, vecs) = hermitian_eig2(&total);
    if lam[0] > 1.0 + 1e-12 {
        return Err(Error::Physicality { eigenvalue: lam[0] });
    }
    let mut rows = Vec::new();
    let mut row_detector = Vec::new();
    for (m, d) in array.specs.iter().enumerate() {
        if d.xi >= 1.0 {
            let v = [
                Complex64::new(d.r_aa.sqrt(), 0.0),
                Complex64::from_polar(d.r_bb.sqrt(), -d.theta),
            ];
            rows.push(phase_fix(v));
            row_detector.push(m);
        } else {
            let (l, u) = hermitian_eig2(&d.matrix());
            for k in 0..2 {
                if l[k] > 0.0 {
                    let s = l[k].sqrt();
                    rows.push([u[k][0] * s, u[k][1] * s]);
                    row_detector.push(m);
                }
            }
        }
    }
    // principal square root of I - sum R, columns as loss rows
    let mut s = [[C0; 2]; 2];
    for k in 0..2 {
        let w = (1.0 - lam[k]).max(0.0).sqrt();
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] += vecs[k][i] * vecs[k][j].conj() * w;
            }
        }
    }
    let loss = vec![[s[0][0], s[1][0]], [s[0][1], s[1][1]]];
    Ok(Dilation {
        rows,
        row_detector,
        loss,
        total_eigenvalues: lam,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outer_sum(vs: &[[Complex64; 2]]) -> Mat2 {
        let mut s = [[C0; 2]; 2];
        for v in vs {
            for i in 0..2 {
                for j in 0..2 {
                    s[i][j] += v[i] * v[j].conj();
                }
            }
        }
        s
    }

    #[test]
    fn eig2_reconstructs() {
        let m = DetectorSpec::new(0.3, 0.5, 0.4, 1.1).unwrap().matrix();
        let (l, v) = hermitian_eig2(&m);
        assert!(l[0] >= l[1]);
        for i in 0..2 {
            for j in 0..2 {
                let r = v[0][i] * v[0][j].conj() * l[0] + v[1][i] * v[1][j].conj() * l[1];
                assert!((r - m[i][j]).norm() < 1e-14);
            }
        }
        assert!(v[0][0].im == 0.0 && v[0][0].re > 0.0);
    }

    #[test]
    fn raw_matrix_bound() {
        let mut m = DetectorSpec::new(0.3, 0.2, 1.0, 0.4).unwrap().matrix();
        assert!(DetectorSpec::from_matrix(m).is_ok());
        m[0][1] *= 1.001;
        m[1][0] = m[0][1].conj();
        assert!(DetectorSpec::from_matrix(m).is_err());
    }

    #[test]
    fn unphysical_array_reports_eigenvalue() {
        let a = DetectorArray::standard_three().scaled(1.0 / 0.4);
        match dilation(&a) {
            Err(Error::Physicality { eigenvalue }) => assert!((eigenvalue - 0.871_998_895_076_593 / 0.4).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lossless_single_detector() {
        let a = DetectorArray::new(vec![DetectorSpec::new(1.0, 1.0, 0.0, 0.0).unwrap()]).unwrap();
        let d = dilation(&a).unwrap();
        assert_eq!(d.rows.len(), 2);
        for w in &d.loss {
            assert!(w[0].norm() < 1e-15 && w[1].norm() < 1e-15);
        }
        let s = outer_sum(&d.rows);
        assert!((s[0][0].re - 1.0).abs() < 1e-15 && s[0][1].norm() < 1e-15);
    }

    #[test]
    fn completeness_of_standard_dilation() {
        let d = dilation(&DetectorArray::standard_three()).unwrap();
        assert_eq!(d.rows.len(), 3);
        assert_eq!(d.loss.len(), 2);
        let mut all = d.rows.clone();
        all.extend(d.loss.iter().cloned());
        let s = outer_sum(&all);
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((s[i][j] - Complex64::new(id, 0.0)).norm() < 1e-12);
            }
        }
    }
}
