//! Frozen reference values, computed independently at high precision.
#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;
use num_bigint::BigUint;
use photonlab::analysis::{mean_level, p_min_rule};
use photonlab::detectors::{hermitian_eig2, trajectory, DetectorArray};
use photonlab::logmath::ln_poisson;
use photonlab::scaling::binomial_weight;
use photonlab::sources::{SourcePair, SourceSpec};

const POISSON_500_AT_500: f64 = 0.017_838_267_869_511_779;
const POISSON_250_AT_250: f64 = 0.025_222_916_184_530_141;
const BINOMIAL_400_200_HALF: f64 = 0.039_869_301_963_792_928;
const SUM_EIGENVALUES: [f64; 2] = [0.871_998_895_076_592_95, 0.628_001_104_923_407_05];

#[test]
fn poisson_peaks() {
    assert_relative_eq!(ln_poisson(500, 500.0).exp(), POISSON_500_AT_500, max_relative = 1e-14);
    assert_relative_eq!(ln_poisson(250, 250.0).exp(), POISSON_250_AT_250, max_relative = 1e-14);
}

#[test]
fn central_binomial_weight() {
    assert_relative_eq!(binomial_weight(400, 200, 0.5), BINOMIAL_400_200_HALF, max_relative = 1e-13);
    // exact: C(400, 200) 10^30 / 2^400, as an integer
    let mut c = BigUint::from(1u32);
    for k in 0..200u32 {
        c = c * BigUint::from(400 - k) / BigUint::from(k + 1);
    }
    let scaled = c * BigUint::from(10u32).pow(30) / (BigUint::from(1u32) << 400usize);
    let approx = scaled.to_string().parse::<f64>().unwrap() * 1e-30;
    assert_relative_eq!(approx, BINOMIAL_400_200_HALF, max_relative = 1e-15);
}

#[test]
fn summed_detector_matrix() {
    let (lam, _) = hermitian_eig2(&DetectorArray::standard_three().sum_matrix());
    assert_relative_eq!(lam[0], SUM_EIGENVALUES[0], max_relative = 1e-14);
    assert_relative_eq!(lam[1], SUM_EIGENVALUES[1], max_relative = 1e-14);
}

#[test]
fn threshold_rule() {
    let pair = SourcePair::independent(SourceSpec::Poissonian(500.0), SourceSpec::Poissonian(500.0));
    let t = trajectory(&DetectorArray::standard_three(), &pair, 512).unwrap();
    assert_relative_eq!(mean_level(&t), 250.0, max_relative = 1e-12);
    assert_relative_eq!(p_min_rule(&t), 1.6e-7, max_relative = 1e-12);
}
