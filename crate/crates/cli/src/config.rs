//! JSON run configuration and its conversion into core types.

use photonlab::detectors::{DetectorArray, DetectorSpec};
use photonlab::engines::{EngineChoice, EngineOptions};
use photonlab::sources::{NumberDistribution, RadialDensity, SourcePair, SourceSpec};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Errors surfaced by the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unphysical input: {0}")]
    Physical(String),
    #[error(transparent)]
    Core(#[from] photonlab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 config, 3 numerical non-convergence, 4 physicality.
    pub fn exit_code(&self) -> i32 {
        use photonlab::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Physical(_) => 4,
            CliError::Core(e) => match e {
                E::NonConvergence { .. } | E::ZeroProbability(_) => 3,
                E::Physicality { .. } => 4,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sources: PairConfig,
    pub detectors: Vec<DetectorConfig>,
    #[serde(default)]
    pub engine: EngineConfig,
    /// Inclusive `[lo, hi]` count range per detector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<[u64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub r_aa: f64,
    pub r_bb: f64,
    #[serde(default = "one")]
    pub xi: f64,
    /// radians
    #[serde(default)]
    pub theta: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Number { n: u64 },
    Binomial { q: f64, mean: f64 },
    Poissonian { mean: f64 },
    SuperPoissonian { big_q: f64, mean: f64 },
    Thermal { mean: f64 },
    TwoNumber { mean: f64, spread: f64 },
    CustomDiagonal { entries: Vec<(u64, f64)> },
    CustomRadial { r: Vec<f64>, p: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairConfig {
    Independent { a: SourceConfig, b: SourceConfig },
    CommonNumber { n: u64, c: f64, s: f64, delta: f64 },
    CommonDiagonal { entries: Vec<(u64, f64)>, c: f64, s: f64, delta: f64 },
    ReferencedPhase { a: SourceConfig, b: SourceConfig, delta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Meanfield,
    Phase,
    Radial,
    Fock,
    #[default]
    Auto,
}

impl EngineKind {
    pub fn choice(self) -> EngineChoice {
        match self {
            EngineKind::Meanfield => EngineChoice::MeanField,
            EngineKind::Phase => EngineChoice::Phase,
            EngineKind::Radial => EngineChoice::Radial,
            EngineKind::Fock => EngineChoice::Fock,
            EngineKind::Auto => EngineChoice::Auto,
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| CliError::Config(format!("unknown engine '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub phase_tol: f64,
    pub phase_start_nodes: usize,
    pub phase_max_nodes: usize,
    pub radial_order: usize,
    pub radial_tol: f64,
    pub radial_panel_widths: f64,
    pub fock_term_cut: f64,
    pub allow_expensive: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        let o = EngineOptions::default();
        EngineConfig {
            kind: EngineKind::Auto,
            phase_tol: o.phase.tol,
            phase_start_nodes: o.phase.start_nodes,
            phase_max_nodes: o.phase.max_nodes,
            radial_order: o.radial.order,
            radial_tol: o.radial.radial_tol,
            radial_panel_widths: o.radial.panel_widths,
            fock_term_cut: o.fock.term_cut,
            allow_expensive: false,
        }
    }
}

impl EngineConfig {
    pub fn options(&self) -> EngineOptions {
        let mut o = EngineOptions::default();
        o.phase.tol = self.phase_tol;
        o.phase.start_nodes = self.phase_start_nodes;
        o.phase.max_nodes = self.phase_max_nodes;
        o.radial.phase = o.phase;
        o.radial.order = self.radial_order;
        o.radial.radial_tol = self.radial_tol;
        o.radial.panel_widths = self.radial_panel_widths;
        o.fock.term_cut = self.fock_term_cut;
        o.fock.allow_expensive = self.allow_expensive;
        o
    }
}

/// Everything an engine call needs, validated.
#[derive(Clone, Debug)]
pub struct Setup {
    pub array: DetectorArray,
    pub pair: SourcePair,
    pub engine: EngineKind,
    pub options: EngineOptions,
    pub grid: Option<Vec<(u64, u64)>>,
}

fn physical<T>(r: photonlab::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        photonlab::Error::Invalid(m) => CliError::Physical(m),
        other => CliError::Core(other),
    })
}

impl SourceConfig {
    pub fn build(&self) -> CliResult<SourceSpec> {
        physical(match self {
            SourceConfig::Number { n } => Ok(SourceSpec::NumberState(*n)),
            SourceConfig::Binomial { q, mean } => SourceSpec::binomial_f64(*q, *mean),
            SourceConfig::Poissonian { mean } => SourceSpec::poissonian(*mean),
            SourceConfig::SuperPoissonian { big_q, mean } if *big_q == 0.0 => SourceSpec::super_poissonian_limit(*mean),
            SourceConfig::SuperPoissonian { big_q, mean } => SourceSpec::super_poissonian(*big_q, *mean),
            SourceConfig::Thermal { mean } => SourceSpec::thermal(*mean),
            SourceConfig::TwoNumber { mean, spread } => SourceSpec::two_number_mixture(*mean, *spread),
            SourceConfig::CustomDiagonal { entries } => {
                NumberDistribution::from_entries(entries).map(SourceSpec::CustomDiagonal)
            }
            SourceConfig::CustomRadial { r, p } => {
                RadialDensity::tabulated(r.clone(), p.clone()).map(SourceSpec::CustomRadial)
            }
        })
    }
}

impl PairConfig {
    pub fn build(&self) -> CliResult<SourcePair> {
        Ok(match self {
            PairConfig::Independent { a, b } => SourcePair::independent(a.build()?, b.build()?),
            PairConfig::CommonNumber { n, c, s, delta } => physical(SourcePair::common_number(*n, *c, *s, *delta))?,
            PairConfig::CommonDiagonal { entries, c, s, delta } => {
                let p = physical(NumberDistribution::from_entries(entries))?;
                physical(SourcePair::common_diagonal(p, *c, *s, *delta))?
            }
            PairConfig::ReferencedPhase { a, b, delta } => {
                physical(SourcePair::referenced_phase(a.build()?, b.build()?, *delta))?
            }
        })
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn detector_array(&self) -> CliResult<DetectorArray> {
        let specs = self
            .detectors
            .iter()
            .map(|d| physical(DetectorSpec::new(d.r_aa, d.r_bb, d.xi, d.theta)))
            .collect::<CliResult<Vec<_>>>()?;
        physical(DetectorArray::new(specs))
    }

    /// Validate and convert.
    pub fn setup(&self) -> CliResult<Setup> {
        if self.detectors.is_empty() {
            return Err(CliError::Config("at least one detector is required".into()));
        }
        let array = self.detector_array()?;
        photonlab::detectors::dilation(&array)?;
        let pair = self.sources.build()?;
        let grid = match &self.grid {
            Some(g) if g.len() != array.len() => {
                return Err(CliError::Config(format!(
                    "grid has {} ranges for {} detectors",
                    g.len(),
                    array.len()
                )))
            }
            Some(g) if g.iter().any(|r| r[0] > r[1]) => {
                return Err(CliError::Config("grid range with lo > hi".into()))
            }
            Some(g) => Some(g.iter().map(|r| (r[0], r[1])).collect()),
            None => None,
        };
        Ok(Setup {
            array,
            pair,
            engine: self.engine.kind,
            options: self.engine.options(),
            grid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "sources": {"kind": "independent",
                    "a": {"kind": "poissonian", "mean": 500},
                    "b": {"kind": "poissonian", "mean": 500}},
        "detectors": [{"r_aa": 0.3, "r_bb": 0.2}]
    }"#;

    #[test]
    fn minimal_config_loads() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        let s = c.setup().unwrap();
        assert_eq!(s.array.len(), 1);
        assert_eq!(s.engine, EngineKind::Auto);
        assert_eq!(c.detectors[0].xi, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("\"r_bb\": 0.2", "\"r_bb\": 0.2, \"gain\": 2");
        let e = RunConfig::from_json(&bad).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let bad = MINIMAL.replace("\"mean\": 500}", "\"mean\": 500, \"extra\": 1}");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn unphysical_detectors_exit_4() {
        let bad = MINIMAL.replace("\"r_aa\": 0.3", "\"r_aa\": 1.3");
        let e = RunConfig::from_json(&bad).unwrap().setup().unwrap_err();
        assert_eq!(e.exit_code(), 4);
        let bad = MINIMAL.replace("\"r_bb\": 0.2", "\"r_bb\": 0.2, \"xi\": 1.5");
        let e = RunConfig::from_json(&bad).unwrap().setup().unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }
}
