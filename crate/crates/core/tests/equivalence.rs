use num_complex::Complex64;
use photonlab::detectors::{DetectorArray, DetectorSpec};
use photonlab::engines::{brute_force_all, fock_joint, generating_function_fock, DensityMatrix, FockOptions};
use photonlab::sources::{SourcePair, SourceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn random_array(rng: &mut ChaCha8Rng, m: usize) -> DetectorArray {
    loop {
        let specs: Vec<DetectorSpec> = (0..m)
            .map(|i| {
                let xi = if i == 0 { 1.0 } else { rng.gen_range(0.0..1.0) };
                DetectorSpec::new(rng.gen_range(0.0..0.45), rng.gen_range(0.0..0.45), xi, rng.gen_range(-PI..PI)).unwrap()
            })
            .collect();
        let a = DetectorArray::new(specs).unwrap();
        if photonlab::detectors::dilation(&a).is_ok() {
            return a;
        }
    }
}

fn max_diff(array: &DetectorArray, pair: &SourcePair) -> f64 {
    let rho = DensityMatrix::from_pair(pair).unwrap();
    let want = brute_force_all(array, &rho).unwrap();
    let got = fock_joint(array, pair, &want.ranges, FockOptions::default()).unwrap();
    want.probs().iter().zip(got.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn fock_engine_matches_density_matrix_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let array = random_array(&mut rng, 3);
        for na in 0..=6u64 {
            for nb in 0..=(6 - na) {
                let pair = SourcePair::independent(SourceSpec::NumberState(na), SourceSpec::NumberState(nb));
                worst = worst.max(max_diff(&array, &pair));
            }
        }
        for n in 1..=6 {
            let t: f64 = rng.gen_range(0.0..PI / 2.0);
            let pair = SourcePair::common_number(n, t.cos(), t.sin(), rng.gen_range(-PI..PI)).unwrap();
            worst = worst.max(max_diff(&array, &pair));
        }
    }
    assert!(worst < 1e-10, "largest deviation {worst:e}");
}

#[test]
fn one_one_on_first_two_detectors() {
    let array = DetectorArray::standard_three().subset(&[0, 1]).unwrap();
    let pair = SourcePair::independent(SourceSpec::NumberState(1), SourceSpec::NumberState(1));
    assert!(max_diff(&array, &pair) < 1e-10);
}

#[test]
fn generating_function_matches_distribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let array = random_array(&mut rng, 2);
    let (na, nb) = (4, 3);
    let pair = SourcePair::independent(SourceSpec::NumberState(na), SourceSpec::NumberState(nb));
    let d = fock_joint(&array, &pair, &[(0, 7), (0, 7)], FockOptions::default()).unwrap();
    for _ in 0..5 {
        let z: Vec<Complex64> = (0..2).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let mut s = Complex64::new(0.0, 0.0);
        for (i, p) in d.probs().iter().enumerate() {
            let n = d.counts_of(i);
            s += p * (Complex64::new(1.0, 0.0) + z[0]).powu(n[0] as u32) * (Complex64::new(1.0, 0.0) + z[1]).powu(n[1] as u32);
        }
        let g = generating_function_fock(&array, na, nb, &z);
        assert!((s - g).norm() < 1e-12, "{s} vs {g}");
    }
}
