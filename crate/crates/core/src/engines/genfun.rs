use crate::detectors::DetectorArray;
use crate::logmath::{ln_binomial, Xc};
use num_complex::Complex64;

/// `sum_n P(n) prod_m (1 + z_m)^{n_m}` for the Fock input `|N_a, N_b>`.
///
/// Closed form in `M = I + sum_m z_m R^(m)`:
/// `sum_k C(N_a,k) C(N_b,k) M_aa^(N_a-k) M_bb^(N_b-k) (M_ab M_ba)^k`.
pub fn generating_function_fock(array: &DetectorArray, na: u64, nb: u64, z: &[Complex64]) -> Complex64 {
    assert_eq!(z.len(), array.len(), "one z per detector");
    let one = Complex64::new(1.0, 0.0);
    let mut m = [[one, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), one]];
    for (spec, zm) in array.specs.iter().zip(z) {
        let r = spec.matrix();
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += zm * r[i][j];
            }
        }
    }
    let cross = m[0][1] * m[1][0];
    let mut sum = Xc::ZERO;
    for k in 0..=na.min(nb) {
        let w = Xc::from_polar_ln(ln_binomial(na, k) + ln_binomial(nb, k), 0.0);
        let t = w
            .mul(Xc::powu(m[0][0], na - k))
            .mul(Xc::powu(m[1][1], nb - k))
            .mul(Xc::powu(cross, k));
        sum = sum.add(t);
    }
    sum.to_c64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalised_at_zero() {
        let a = DetectorArray::standard_three();
        let g = generating_function_fock(&a, 5, 7, &[Complex64::new(0.0, 0.0); 3]);
        assert!((g - 1.0).norm() < 1e-14);
    }

    #[test]
    fn single_mode_binomial() {
        // one detector on mode a only: (1 + z R_aa)^N
        let a = DetectorArray::new(vec![crate::detectors::DetectorSpec::new(0.4, 0.0, 0.0, 0.0).unwrap()]).unwrap();
        let z = Complex64::new(0.3, -0.2);
        let g = generating_function_fock(&a, 6, 3, &[z]);
        let want = (one() + z * 0.4).powu(6);
        assert!((g - want).norm() < 1e-13);
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }
}
