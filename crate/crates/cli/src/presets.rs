//! Run configurations behind `figure 1..7`.

use crate::config::{CliError, CliResult, DetectorConfig, EngineConfig, EngineKind, PairConfig, RunConfig, SourceConfig};
use std::f64::consts::PI;

/// Photon number per source for the Poissonian figures.
pub const POISSON_MEAN: f64 = 500.0;
/// Pinned detector-1 count of the Poissonian conditionals.
pub const N1_POISSON: u64 = 106;
/// Pinned `(n1, n2)` pairs of the two-conditional figure.
pub const FIG4_FIXED: [(u64, u64); 2] = [(106, 174), (106, 495)];
/// Mean photon number of the binomial sequence.
pub const BINOMIAL_MEAN: u64 = 200;
pub const N1_BINOMIAL: u64 = 42;
/// `q` as `(numerator, denominator)`; a preset choice.
pub const FIG6_Q: [(u64, u64); 4] = [(1, 1), (1, 2), (1, 5), (1, 20)];
/// Super-Poissonian `Q` values; a preset choice.
pub const FIG7_Q: [f64; 4] = [0.01, 0.1, 0.5, 1.0];

pub fn standard_detectors() -> Vec<DetectorConfig> {
    vec![
        DetectorConfig { r_aa: 0.3, r_bb: 0.2, xi: 1.0, theta: 0.0 },
        DetectorConfig { r_aa: 0.2, r_bb: 0.3, xi: 1.0, theta: 0.7 * PI },
        DetectorConfig { r_aa: 0.2, r_bb: 0.3, xi: 1.0, theta: -0.5 * PI },
    ]
}

fn pair(a: SourceConfig) -> PairConfig {
    PairConfig::Independent { a: a.clone(), b: a }
}

fn config(sources: PairConfig, detectors: Vec<DetectorConfig>, kind: EngineKind) -> RunConfig {
    RunConfig {
        sources,
        detectors,
        engine: EngineConfig { kind, ..EngineConfig::default() },
        grid: None,
        out: None,
        seed: None,
    }
}

/// Two Poissonian sources on the three standard detectors.
pub fn poissonian() -> RunConfig {
    config(
        pair(SourceConfig::Poissonian { mean: POISSON_MEAN }),
        standard_detectors(),
        EngineKind::Phase,
    )
}

/// Binomial sources `B(q; 200)` on the first two detectors.
pub fn binomial(q: (u64, u64)) -> RunConfig {
    let src = if q.0 == q.1 {
        SourceConfig::Number { n: BINOMIAL_MEAN }
    } else {
        SourceConfig::Binomial {
            q: q.0 as f64 / q.1 as f64,
            mean: BINOMIAL_MEAN as f64,
        }
    };
    config(pair(src), standard_detectors()[..2].to_vec(), EngineKind::Fock)
}

/// Poissonian limit of the binomial sequence.
pub fn binomial_limit() -> RunConfig {
    config(
        pair(SourceConfig::Poissonian { mean: BINOMIAL_MEAN as f64 }),
        standard_detectors()[..2].to_vec(),
        EngineKind::Phase,
    )
}

/// Super-Poissonian sources at the Poissonian mean on the first two detectors.
pub fn super_poissonian(big_q: f64) -> RunConfig {
    config(
        pair(SourceConfig::SuperPoissonian { big_q, mean: POISSON_MEAN }),
        standard_detectors()[..2].to_vec(),
        EngineKind::Radial,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct Figure {
    pub id: u8,
    pub title: &'static str,
    /// Base configuration; sequence figures vary the sources around it.
    pub config: RunConfig,
    /// Values frozen by the preset rather than taken from the source data.
    pub preset_choices: Vec<String>,
}

pub fn figure(id: u8) -> CliResult<Figure> {
    let poisson_2d = || {
        let mut c = poissonian();
        c.detectors.truncate(2);
        c
    };
    let (title, config, choices) = match id {
        1 => ("joint distribution P(n1, n2), Poissonian sources", poisson_2d(), vec![]),
        2 => ("marginal P(n1), Poissonian sources", poisson_2d(), vec![]),
        3 => ("conditional P(n2 | n1 = 106), Poissonian sources", poisson_2d(), vec![]),
        4 => ("conditionals P(n3 | 106, 174) and P(n3 | 106, 495)", poissonian(), vec![]),
        5 => ("3-D point cloud above P_min = 0.01 / nbar^2", poissonian(), vec![]),
        6 => (
            "binomial sequence, conditional P(n2 | n1 = 42)",
            binomial((1, 1)),
            vec!["q in {1, 1/2, 1/5, 1/20} is a preset choice".to_string()],
        ),
        7 => (
            "super-Poissonian family, conditional P(n2 | n1 = 106)",
            super_poissonian(1.0),
            vec!["Q in {0.01, 0.1, 0.5, 1} is a preset choice".to_string()],
        ),
        _ => return Err(CliError::Config(format!("no figure {id}; presets are 1..7"))),
    };
    Ok(Figure {
        id,
        title,
        config,
        preset_choices: choices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for id in 1..=7 {
            figure(id).unwrap().config.setup().unwrap();
        }
        for q in FIG6_Q {
            binomial(q).setup().unwrap();
        }
        for q in FIG7_Q {
            super_poissonian(q).setup().unwrap();
        }
        binomial_limit().setup().unwrap();
        assert!(figure(8).is_err());
    }

    #[test]
    fn second_detector_values() {
        let d = standard_detectors()[1];
        assert_eq!((d.r_aa, d.r_bb), (0.2, 0.3));
        assert!((d.theta - 0.7 * PI).abs() < 1e-15);
    }
}
