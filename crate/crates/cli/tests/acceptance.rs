//! One PASS/FAIL line per acceptance criterion.
//!
//! `ACCEPTANCE_ONLY=2,5` runs a subset.

use photonlab::analysis::{conditional, estimate_phase, predict_counts, shot_noise, tube_coverage, Slice};
use photonlab::detectors::{dilation, trajectory, DetectorArray, DetectorSpec};
use photonlab::engines::{
    brute_force_all, default_ranges, fock_joint, incoherent_joint, meanfield_joint, phase_average_joint,
    radial_phase_average_joint, DensityMatrix, EngineChoice, EngineOptions, FockOptions, JointDistribution,
    PhaseOptions, RadialOptions,
};
use photonlab::scaling::equivalence_check;
use photonlab::sources::{SourcePair, SourceSpec};
use photonlab_cli::presets;
use photonlab_cli::run::point_cloud_manifold;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Discrete, Poisson};
use std::f64::consts::PI;
use std::time::Instant;

type Check = Result<(bool, String), Box<dyn std::error::Error>>;

const N_BAR: f64 = 500.0;

fn three() -> DetectorArray {
    DetectorArray::standard_three()
}

fn two() -> DetectorArray {
    three().subset(&[0, 1]).unwrap()
}

fn poisson_pair(mean: f64) -> SourcePair {
    SourcePair::independent(SourceSpec::Poissonian(mean), SourceSpec::Poissonian(mean))
}

/// `|position - target| <= sqrt(basin mean)` for the mode nearest `target`.
fn near(s: &Slice, target: f64) -> Result<(bool, u64), Box<dyn std::error::Error>> {
    let r = shot_noise(s, target)?;
    Ok(((r.mode as f64 - target).abs() <= r.mean.sqrt(), r.mode))
}

fn c1() -> Check {
    let a = three();
    let spec = a.specs[0];
    let est = estimate_phase(&spec, (spec.r_aa * N_BAR, spec.r_bb * N_BAR), 106.0)?;
    let mut d = [est.delta_plus, est.delta_minus];
    d.sort_by(f64::total_cmp);
    let phase_ok = (d[0] + 0.7 * PI).abs() < 1e-3 && (d[1] - 0.7 * PI).abs() < 1e-3;
    let (p, m) = predict_counts(&a, (N_BAR, N_BAR), &est);
    let mut pairs = [(p[1], p[2]), (m[1], m[2])];
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let counts_ok = (pairs[0].0 - 174.0).abs() <= 1.0
        && (pairs[0].1 - 448.0).abs() <= 1.0
        && (pairs[1].0 - 495.0).abs() <= 1.0
        && (pairs[1].1 - 52.0).abs() <= 1.0;
    Ok((
        phase_ok && counts_ok,
        format!(
            "delta = {:+.5}pi, {:+.5}pi; (n2, n3) = ({:.2}, {:.2}), ({:.2}, {:.2})",
            d[0] / PI,
            d[1] / PI,
            pairs[0].0,
            pairs[0].1,
            pairs[1].0,
            pairs[1].1
        ),
    ))
}

fn slice_at(d: &JointDistribution, fixed: &[(usize, u64)]) -> Result<Slice, Box<dyn std::error::Error>> {
    Ok(Slice::from_dist(&conditional(d, fixed)?)?)
}

fn c2() -> Check {
    let a = two();
    let pair = poisson_pair(N_BAR);
    let r = default_ranges(&a, &pair)?;
    let d = phase_average_joint(&a, &pair, &[(106, 106), r[1]], PhaseOptions::default())?;
    let s = slice_at(&d, &[(0, 106)])?;
    let modes = s.modes();
    let (ok_lo, lo) = near(&s, 174.0)?;
    let (ok_hi, hi) = near(&s, 495.0)?;
    let weights_ok = modes.iter().all(|m| (0.4..=0.6).contains(&m.weight));
    let w: Vec<String> = modes.iter().map(|m| format!("{}:{:.3}", m.position, m.weight)).collect();
    Ok((
        modes.len() == 2 && ok_lo && ok_hi && lo != hi && weights_ok,
        format!("modes [{}]", w.join(", ")),
    ))
}

fn c3() -> Check {
    let a = three();
    let pair = poisson_pair(N_BAR);
    let r = default_ranges(&a, &pair)?;
    let mut ok = true;
    let mut info = vec![];
    for (n2, target) in [(174u64, 448.0), (495, 52.0)] {
        let d = phase_average_joint(&a, &pair, &[(106, 106), (n2, n2), r[2]], PhaseOptions::default())?;
        let s = slice_at(&d, &[(0, 106), (1, n2)])?;
        let count = s.modes().len();
        let (close, mode) = near(&s, target)?;
        ok &= count == 1 && close;
        info.push(format!("n2={n2}: {count} mode at {mode}"));
    }
    Ok((ok, info.join("; ")))
}

fn c4() -> Check {
    let setup = presets::figure(5)?.config.setup()?;
    let (pm, tail) = point_cloud_manifold(&setup)?;
    let rule_ok = (pm.p_min - 1.6e-7).abs() <= 1e-12 * 1.6e-7;
    Ok((
        rule_ok && pm.max_distance <= 5.0 && !pm.points.is_empty(),
        format!(
            "P_min = {:.6e}, {} points, max distance {:.3} shot-noise units, coverage {:.4}, tail {:.1e}",
            pm.p_min,
            pm.points.len(),
            pm.max_distance,
            pm.coverage,
            tail
        ),
    ))
}

fn c5() -> Check {
    let a = two();
    let pair = SourcePair::independent(SourceSpec::NumberState(200), SourceSpec::NumberState(200));
    let r = default_ranges(&a, &pair)?;
    let d = fock_joint(&a, &pair, &[(42, 42), r[1]], FockOptions::default())?;
    let s = slice_at(&d, &[(0, 42)])?;
    let (ok_lo, lo) = near(&s, 70.0)?;
    let (ok_hi, hi) = near(&s, 198.0)?;
    let gamma = shot_noise(&s, 198.0)?.gamma;
    Ok((
        ok_lo && ok_hi && lo != hi && gamma < 1.0,
        format!("modes at {lo} and {hi}, gamma at the upper peak {gamma:.4}"),
    ))
}

fn c6() -> Check {
    let a = two();
    let opts = EngineOptions::default();
    let number = SourcePair::independent(SourceSpec::NumberState(40), SourceSpec::NumberState(40));
    let r = default_ranges(&a, &number)?;
    let b = equivalence_check(&a, &number, 0.5, &r, EngineChoice::Fock, &opts)?;
    let pois = poisson_pair(20.0);
    let r = default_ranges(&a, &pois)?;
    let p = equivalence_check(&a, &pois, 0.5, &r, EngineChoice::Phase, &opts)?;
    Ok((
        b.sup_norm < 1e-8 && p.sup_norm < 1e-8,
        format!("binomial {:.2e}, Poissonian {:.2e}", b.sup_norm, p.sup_norm),
    ))
}

fn random_array(rng: &mut ChaCha8Rng, m: usize) -> DetectorArray {
    loop {
        let specs: Vec<DetectorSpec> = (0..m)
            .map(|i| {
                let xi = if i == 0 { 1.0 } else { rng.gen_range(0.0..1.0) };
                DetectorSpec::new(rng.gen_range(0.0..0.45), rng.gen_range(0.0..0.45), xi, rng.gen_range(-PI..PI))
                    .unwrap()
            })
            .collect();
        let a = DetectorArray::new(specs).unwrap();
        if dilation(&a).is_ok() {
            return a;
        }
    }
}

fn c7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut diff = |array: &DetectorArray, pair: &SourcePair| -> Result<f64, Box<dyn std::error::Error>> {
        let rho = DensityMatrix::from_pair(pair)?;
        let want = brute_force_all(array, &rho)?;
        let got = fock_joint(array, pair, &want.ranges, FockOptions::default())?;
        cases += 1;
        Ok(want.probs().iter().zip(got.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    };
    for _ in 0..20 {
        let array = random_array(&mut rng, 3);
        for na in 0..=6u64 {
            for nb in 0..=(6 - na) {
                let pair = SourcePair::independent(SourceSpec::NumberState(na), SourceSpec::NumberState(nb));
                worst = worst.max(diff(&array, &pair)?);
            }
        }
        for n in 1..=6 {
            let t: f64 = rng.gen_range(0.0..PI / 2.0);
            let pair = SourcePair::common_number(n, t.cos(), t.sin(), rng.gen_range(-PI..PI))?;
            worst = worst.max(diff(&array, &pair)?);
        }
    }
    Ok((worst < 1e-10, format!("{cases} cases on 20 arrays, largest deviation {worst:.2e}")))
}

fn c8() -> Check {
    let a = two();
    let mut runs: Vec<(&str, JointDistribution)> = vec![];
    let pois = poisson_pair(N_BAR);
    runs.push(("phase", phase_average_joint(&a, &pois, &default_ranges(&a, &pois)?, PhaseOptions::default())?));
    let sup = SourceSpec::super_poissonian(0.5, 50.0)?;
    let sup = SourcePair::independent(sup.clone(), sup);
    runs.push(("radial", radial_phase_average_joint(&a, &sup, &default_ranges(&a, &sup)?, RadialOptions::default())?));
    let referenced = SourcePair::referenced_phase(SourceSpec::Poissonian(N_BAR), SourceSpec::Poissonian(N_BAR), 0.3)?;
    runs.push(("meanfield", meanfield_joint(&a, (N_BAR, N_BAR), 0.3, &default_ranges(&a, &referenced)?)?));
    let single = |pair: SourcePair| phase_average_joint(&a, &pair, &default_ranges(&a, &pair)?, PhaseOptions::default());
    let da = single(SourcePair::independent(SourceSpec::Poissonian(50.0), SourceSpec::NumberState(0)))?;
    let db = single(SourcePair::independent(SourceSpec::NumberState(0), SourceSpec::Poissonian(50.0)))?;
    runs.push(("incoherent", incoherent_joint(&da, &db)?));
    let fock_inputs = [
        SourcePair::independent(SourceSpec::NumberState(20), SourceSpec::NumberState(30)),
        SourcePair::common_number(30, 0.6, 0.8, 0.4)?,
        SourcePair::independent(SourceSpec::two_number_mixture(20.0, 4.0)?, SourceSpec::NumberState(10)),
    ];
    let mut moment_err = 0.0f64;
    for pair in &fock_inputs {
        let d = fock_joint(&a, pair, &default_ranges(&a, pair)?, FockOptions::default())?;
        if let SourcePair::Independent(..) = pair {
            let (na, nb) = pair.means()?;
            let p = d.probs();
            for (m, s) in a.specs.iter().enumerate() {
                let first: f64 = p.iter().enumerate().map(|(i, x)| d.counts_of(i)[m] as f64 * x).sum();
                moment_err = moment_err.max((first - (s.r_aa * na + s.r_bb * nb)).abs());
            }
        }
        runs.push(("fock", d));
    }
    let mut ok = moment_err < 1e-9;
    let mut info = vec![];
    for (name, d) in &runs {
        let dev = (d.total() - 1.0).abs();
        ok &= dev <= d.meta.tail_bound && d.meta.tail_bound <= 1e-9;
        info.push(format!("{name} {dev:.1e}<={:.1e}", d.meta.tail_bound));
    }
    Ok((ok, format!("{}; first-moment error {moment_err:.1e}", info.join(", "))))
}

fn c9() -> Check {
    let a = two();
    let mut stds = vec![];
    let mut last_modes = 0;
    for q in presets::FIG7_Q {
        let src = SourceSpec::super_poissonian(q, N_BAR)?;
        let pair = SourcePair::independent(src.clone(), src);
        let r = default_ranges(&a, &pair)?;
        let d = radial_phase_average_joint(&a, &pair, &[(106, 106), r[1]], RadialOptions::default())?;
        let s = slice_at(&d, &[(0, 106)])?;
        stds.push(s.std_dev());
        last_modes = s.prominent_modes(0.1).len();
    }
    let increasing = stds.windows(2).all(|w| w[1] > w[0]);
    let s: Vec<String> = stds.iter().map(|x| format!("{x:.2}")).collect();
    Ok((
        increasing && last_modes < 2,
        format!("std over Q: [{}]; separated modes at Q = 1: {last_modes}", s.join(", ")),
    ))
}

fn c10() -> Check {
    let a = two();
    let opts = PhaseOptions::default();
    let only_a = SourcePair::independent(SourceSpec::Poissonian(N_BAR), SourceSpec::NumberState(0));
    let only_b = SourcePair::independent(SourceSpec::NumberState(0), SourceSpec::Poissonian(N_BAR));
    let da = phase_average_joint(&a, &only_a, &default_ranges(&a, &only_a)?, opts)?;
    let db = phase_average_joint(&a, &only_b, &default_ranges(&a, &only_b)?, opts)?;
    let inc = incoherent_joint(&da, &db)?;
    let axes: Vec<Poisson> = a
        .specs
        .iter()
        .map(|s| Poisson::new((s.r_aa + s.r_bb) * N_BAR))
        .collect::<Result<_, _>>()?;
    let worst = inc
        .probs()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let want: f64 = inc.counts_of(i).iter().zip(&axes).map(|(&n, d)| d.pmf(n)).product();
            (p - want).abs()
        })
        .fold(0.0, f64::max);
    let pair = poisson_pair(N_BAR);
    let traj = trajectory(&a, &pair, 512)?;
    let coverage = tube_coverage(&inc, &traj, 3.0)?;
    let coherent = phase_average_joint(&a, &pair, &default_ranges(&a, &pair)?, opts)?;
    let reference = tube_coverage(&coherent, &traj, 3.0)?;
    Ok((
        worst < 1e-10 && coverage < 0.5,
        format!("max |P - product| {worst:.2e}; tube coverage {coverage:.4} (interfering sources {reference:.4})"),
    ))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(&str, fn() -> Check); 10] = [
        ("mean-field anchors", c1),
        ("conditional bimodality", c2),
        ("conditional unimodality", c3),
        ("point-cloud threshold", c4),
        ("sub-Poissonian anchors", c5),
        ("scaling equivalence", c6),
        ("oracle equivalence", c7),
        ("conservation and normalization", c8),
        ("super-Poissonian broadening", c9),
        ("incoherent control", c10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let k = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&k)) {
            continue;
        }
        let t = Instant::now();
        let (pass, detail) = match std::panic::catch_unwind(f) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {k:>2} {}: {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
