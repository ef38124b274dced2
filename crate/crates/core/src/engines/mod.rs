//! Joint count distributions `P(n_1, ..., n_M)`.
//!
//! Five evaluation strategies share one output type, [`JointDistribution`]:
//! mean-field products of Poissons at fixed phase, phase averages for
//! Poissonian sources, radial-plus-phase quadrature for P-representable
//! sources, exact Fock-space evaluation through the detector dilation, and the
//! incoherent convolution of single-source distributions.

mod fock;
mod genfun;
mod incoherent;
mod meanfield;
mod mixture;
mod oracle;
mod phase;
mod radial;

pub use fock::{fock_joint, FockOptions, PureInput};
pub use genfun::generating_function_fock;
pub use incoherent::incoherent_joint;
pub use meanfield::meanfield_joint;
pub use mixture::{poisson_mixture, MixtureNode, STREAM_CUT};
pub use oracle::{brute_force_all, brute_force_oracle, DensityMatrix};
pub use phase::{phase_average_joint, phase_average_slabs, PhaseOptions};
pub use radial::{radial_nodes, radial_phase_average_joint, RadialOptions};

use crate::detectors::{DetectorArray, MeanFieldTrajectory};
use crate::error::{Error, Result};
use crate::logmath::pairwise_sum;
use crate::sources::{SourcePair, SourceSpec};

/// Which strategy produced a distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineTag {
    MeanField,
    PhaseAverage,
    Radial,
    Fock,
    Incoherent,
    Derived,
}

impl EngineTag {
    pub fn name(&self) -> &'static str {
        match self {
            EngineTag::MeanField => "meanfield",
            EngineTag::PhaseAverage => "phase",
            EngineTag::Radial => "radial",
            EngineTag::Fock => "fock",
            EngineTag::Incoherent => "incoherent",
            EngineTag::Derived => "derived",
        }
    }
}

/// Truncation and quadrature bookkeeping attached to every result.
#[derive(Clone, Debug, PartialEq)]
pub struct Metadata {
    pub engine: EngineTag,
    /// Upper bound on probability mass missing from the grid.
    pub tail_bound: f64,
    /// Phase nodes used by the final trapezoid rule (0 when not applicable).
    pub phase_nodes: usize,
    /// Radial nodes per source (0 when not applicable).
    pub radial_nodes: usize,
    /// Achieved per-point change of the last refinement.
    pub achieved_tol: f64,
    /// Pure Fock components evaluated (0 when not applicable).
    pub components: usize,
}

impl Metadata {
    pub fn new(engine: EngineTag) -> Self {
        Metadata {
            engine,
            tail_bound: 0.0,
            phase_nodes: 0,
            radial_nodes: 0,
            achieved_tol: 0.0,
            components: 0,
        }
    }
}

/// Dense log-probabilities over a box of outcomes.
///
/// `ranges[m] = (lo, hi)` is inclusive; the last axis varies fastest. A
/// singleton range pins that detector's count, which is how slices and
/// conditionals are requested.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    pub ranges: Vec<(u64, u64)>,
    pub log_probs: Vec<f64>,
    pub meta: Metadata,
}

impl JointDistribution {
    pub fn from_linear(ranges: Vec<(u64, u64)>, probs: &[f64], meta: Metadata) -> Self {
        JointDistribution {
            ranges,
            log_probs: probs.iter().map(|p| p.ln()).collect(),
            meta,
        }
    }

    pub fn dims(&self) -> usize {
        self.ranges.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).collect()
    }

    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    pub fn flat_index(&self, counts: &[u64]) -> Option<usize> {
        if counts.len() != self.ranges.len() {
            return None;
        }
        let mut idx = 0usize;
        for (&c, &(lo, hi)) in counts.iter().zip(&self.ranges) {
            if c < lo || c > hi {
                return None;
            }
            idx = idx * (hi - lo + 1) as usize + (c - lo) as usize;
        }
        Some(idx)
    }

    pub fn counts_of(&self, mut flat: usize) -> Vec<u64> {
        let shape = self.shape();
        let mut out = vec![0u64; shape.len()];
        for m in (0..shape.len()).rev() {
            out[m] = self.ranges[m].0 + (flat % shape[m]) as u64;
            flat /= shape[m];
        }
        out
    }

    pub fn ln_prob(&self, counts: &[u64]) -> f64 {
        self.flat_index(counts)
            .map(|i| self.log_probs[i])
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn prob(&self, counts: &[u64]) -> f64 {
        self.ln_prob(counts).exp()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    /// Total probability on the grid.
    pub fn total(&self) -> f64 {
        pairwise_sum(&self.probs())
    }

    /// Axes whose range holds more than one count.
    pub fn free_axes(&self) -> Vec<usize> {
        (0..self.dims()).filter(|&m| self.ranges[m].0 < self.ranges[m].1).collect()
    }

    /// `sum_n n_m P(n)` for one axis.
    pub fn axis_mean(&self, axis: usize) -> f64 {
        let shape = self.shape();
        let stride: usize = shape[axis + 1..].iter().product();
        let terms: Vec<f64> = self
            .log_probs
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let c = self.ranges[axis].0 + ((i / stride) % shape[axis]) as u64;
                c as f64 * l.exp()
            })
            .collect();
        pairwise_sum(&terms)
    }
}

/// `max nbar + 10 sqrt(max nbar) + 10` per detector, rounded down.
pub fn grid_rule(traj: &MeanFieldTrajectory) -> Vec<u64> {
    traj.max_per_axis()
        .iter()
        .map(|&m| (m + 10.0 * m.sqrt() + 10.0).floor() as u64)
        .collect()
}

/// Full-grid ranges for a configuration, clamped to the photon budget of Fock inputs.
pub fn default_ranges(array: &DetectorArray, pair: &SourcePair) -> Result<Vec<(u64, u64)>> {
    let (na, nb) = pair.means()?;
    let fock_cap = fock_photon_cap(pair);
    let ext = radial_extent(pair)?;
    let (ua, ub) = ext.unwrap_or((na, nb));
    let traj = crate::detectors::trajectory_for_means(array, ua, ub, 16)?;
    Ok(grid_rule(&traj)
        .into_iter()
        .map(|n| (0, fock_cap.map_or(n, |c| n.min(c))))
        .collect())
}

/// Largest total photon number of a Fock-engine input, if it is bounded.
fn fock_photon_cap(pair: &SourcePair) -> Option<u64> {
    let cap = |s: &SourceSpec| -> Option<u64> {
        match s {
            SourceSpec::NumberState(n) => Some(*n),
            SourceSpec::Binomial { .. } | SourceSpec::TwoNumberMixture { .. } | SourceSpec::CustomDiagonal(_) => {
                s.diagonal().ok().map(|d| d.range().1)
            }
            _ => None,
        }
    };
    match pair {
        SourcePair::Independent(a, b) => Some(cap(a)? + cap(b)?),
        SourcePair::CommonNumber { n, .. } => Some(*n),
        SourcePair::CommonDiagonal { p, .. } => Some(p.range().1),
        SourcePair::ReferencedPhase { .. } => None,
    }
}

/// For sources with spread-out radial densities, the `u = r^2` values that
/// bound the bulk; the grid rule is applied at those instead of the means.
fn radial_extent(pair: &SourcePair) -> Result<Option<(f64, f64)>> {
    let (a, b) = match pair {
        SourcePair::Independent(a, b) | SourcePair::ReferencedPhase { a, b, .. } => (a, b),
        _ => return Ok(None),
    };
    let spread = |s: &SourceSpec| matches!(s.radial(), Ok(d) if !matches!(d, crate::sources::RadialDensity::Delta { .. }));
    if !spread(a) && !spread(b) {
        return Ok(None);
    }
    let hi = |s: &SourceSpec| -> Result<f64> {
        Ok(match s.radial() {
            Ok(d) => radial::u_upper(&d),
            Err(_) => s.moments()?.0,
        })
    };
    Ok(Some((hi(a)?, hi(b)?)))
}

/// Engine selector used by the `auto` strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineChoice {
    MeanField,
    Phase,
    Radial,
    Fock,
    Auto,
}

/// Resolve `Auto` to a concrete engine for a source pair.
pub fn choose_engine(pair: &SourcePair) -> EngineChoice {
    use crate::sources::RadialDensity::Delta;
    match pair {
        SourcePair::Independent(a, b) => {
            match (a.radial(), b.radial()) {
                (Ok(Delta { .. }), Ok(Delta { .. })) => EngineChoice::Phase,
                (Ok(_), Ok(_)) => EngineChoice::Radial,
                _ => EngineChoice::Fock,
            }
        }
        SourcePair::ReferencedPhase { .. } => EngineChoice::Radial,
        _ => EngineChoice::Fock,
    }
}

/// Tolerances for every engine, used by [`evaluate`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EngineOptions {
    pub phase: PhaseOptions,
    pub radial: RadialOptions,
    pub fock: FockOptions,
}

/// Joint distribution on `ranges` with the requested engine.
///
/// Mean-field needs a pair with a fixed relative phase (referenced-phase or
/// common-source pairs) and evaluates at that phase.
pub fn evaluate(
    array: &DetectorArray,
    pair: &SourcePair,
    ranges: &[(u64, u64)],
    choice: EngineChoice,
    opts: &EngineOptions,
) -> Result<JointDistribution> {
    let choice = if choice == EngineChoice::Auto { choose_engine(pair) } else { choice };
    match choice {
        EngineChoice::MeanField => {
            let delta = match pair {
                SourcePair::ReferencedPhase { delta, .. }
                | SourcePair::CommonNumber { delta, .. }
                | SourcePair::CommonDiagonal { delta, .. } => *delta,
                SourcePair::Independent(..) => {
                    return Err(Error::Unsupported("mean-field needs a fixed relative phase".into()))
                }
            };
            meanfield_joint(array, pair.means()?, delta, ranges)
        }
        EngineChoice::Phase => phase_average_joint(array, pair, ranges, opts.phase),
        EngineChoice::Radial => radial_phase_average_joint(array, pair, ranges, opts.radial),
        EngineChoice::Fock | EngineChoice::Auto => fock_joint(array, pair, ranges, opts.fock),
    }
}

pub(crate) fn check_ranges(ranges: &[(u64, u64)], m: usize) -> Result<()> {
    if ranges.len() != m {
        return Err(Error::Shape(format!("{} ranges for {} detectors", ranges.len(), m)));
    }
    if ranges.iter().any(|(lo, hi)| lo > hi) {
        return Err(Error::Shape("empty count range".into()));
    }
    Ok(())
}
