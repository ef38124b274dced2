//! Subcommand implementations.

use crate::config::{CliError, CliResult, EngineKind, RunConfig, Setup};
use crate::output::{axis_name, fmt_f64, write_csv, write_distribution, Sidecar};
use crate::presets::{self, FIG4_FIXED, FIG6_Q, FIG7_Q, N1_BINOMIAL, N1_POISSON};
use photonlab::analysis::{
    conditional, p_min_rule, peak_manifold_with, sample_joint, sample_meanfield, PeakManifold, Slice,
    TrajectoryMetric,
};
use photonlab::detectors::trajectory;
use photonlab::engines::{
    default_ranges, evaluate, phase_average_slabs, EngineChoice, JointDistribution, Metadata,
};
use photonlab::scaling::equivalence_check;
use photonlab::sources::{SourcePair, SourceSpec};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Flags shared by every subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub engine: Option<EngineKind>,
    pub allow_expensive: bool,
}

impl Default for Context {
    fn default() -> Self {
        Context {
            out: PathBuf::from("."),
            seed: 0,
            engine: None,
            allow_expensive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Joint { axes: Option<Vec<usize>> },
    Marginal { axis: usize },
    Conditional { fix: Vec<(usize, u64)>, axes: Option<Vec<usize>> },
    Trajectory { points: usize },
    Sample { count: usize },
    ScalingCheck { q: f64 },
    Figure { id: u8 },
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Joint { .. } => "joint".into(),
            Command::Marginal { .. } => "marginal".into(),
            Command::Conditional { .. } => "conditional".into(),
            Command::Trajectory { .. } => "trajectory".into(),
            Command::Sample { .. } => "sample".into(),
            Command::ScalingCheck { .. } => "scaling-check".into(),
            Command::Figure { id } => format!("fig{id}"),
        }
    }
}

/// `n2` -> 1
pub fn parse_axis(s: &str) -> CliResult<usize> {
    let bad = || CliError::Config(format!("axis '{s}' is not of the form n1, n2, ..."));
    let k: usize = s.trim().strip_prefix('n').ok_or_else(bad)?.parse().map_err(|_| bad())?;
    if k == 0 {
        return Err(bad());
    }
    Ok(k - 1)
}

/// `n1,n3` -> [0, 2]
pub fn parse_axes(s: &str) -> CliResult<Vec<usize>> {
    s.split(',').map(parse_axis).collect()
}

/// `n1=106` -> (0, 106)
pub fn parse_fix(s: &str) -> CliResult<(usize, u64)> {
    let (a, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("'{s}' is not of the form n1=106")))?;
    let v = v
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("count '{v}' is not a non-negative integer")))?;
    Ok((parse_axis(a)?, v))
}

/// Run one subcommand; writes its CSV files and sidecar into `ctx.out`.
pub fn execute(config: &RunConfig, cmd: &Command, ctx: &Context) -> CliResult<Sidecar> {
    let start = Instant::now();
    std::fs::create_dir_all(&ctx.out)?;
    let mut setup = config.setup()?;
    if let Some(k) = ctx.engine {
        setup.engine = k;
    }
    if ctx.allow_expensive {
        setup.options.fock.allow_expensive = true;
    }
    let name = cmd.name();
    let mut side = Sidecar::new(&name);
    side.set("seed", json!(ctx.seed));
    side.set(
        "tolerances",
        json!({
            "phase_tol": setup.options.phase.tol,
            "phase_max_nodes": setup.options.phase.max_nodes,
            "radial_order": setup.options.radial.order,
            "radial_tol": setup.options.radial.radial_tol,
            "fock_term_cut": setup.options.fock.term_cut,
        }),
    );
    side.set("config", serde_json::to_value(config).unwrap());
    let csv = ctx.out.join(format!("{name}.csv"));
    match cmd {
        Command::Joint { axes } => {
            let keep = axes.clone().unwrap_or_else(|| (0..setup.array.len()).collect());
            joint(&setup, &keep, &csv, &mut side)?
        }
        Command::Marginal { axis } => joint(&setup, &[*axis], &csv, &mut side)?,
        Command::Conditional { fix, axes } => {
            let free = match axes {
                Some(a) => a.clone(),
                None => (0..setup.array.len()).filter(|m| !fix.iter().any(|f| f.0 == *m)).collect(),
            };
            let (cond, axes) = conditional_slice(&setup, fix, &free, &mut side)?;
            write_distribution(&csv, &cond, &axes)?;
            side.file(csv);
        }
        Command::Trajectory { points } => {
            let t = trajectory(&setup.array, &setup.pair, *points)?;
            let mut header = vec!["delta".to_string()];
            header.extend((0..setup.array.len()).map(axis_name));
            let rows = t.delta_grid.iter().zip(&t.points).map(|(d, p)| {
                let mut r = vec![fmt_f64(*d)];
                r.extend(p.iter().map(|x| fmt_f64(*x)));
                r
            });
            write_csv(&csv, &header, rows)?;
            side.file(csv);
        }
        Command::Sample { count } => sample(&setup, *count, ctx.seed, &csv, &mut side)?,
        Command::ScalingCheck { q } => {
            let ranges = ranges_for(&setup, &setup.array.scaled(*q), &setup.pair, &all(&setup))?;
            let rep = equivalence_check(
                &setup.array,
                &setup.pair,
                *q,
                &ranges,
                setup.engine.choice(),
                &setup.options,
            )?;
            side.engine(&rep.scaled.meta);
            side.tail(rep.thinned.meta.tail_bound);
            side.set("q", json!(q));
            side.set("sup_norm", json!(rep.sup_norm));
            let (a, b) = (rep.thinned.probs(), rep.scaled.probs());
            let worst = (0..a.len())
                .max_by(|&i, &j| (a[i] - b[i]).abs().total_cmp(&(a[j] - b[j]).abs()))
                .unwrap_or(0);
            let mut header = vec!["q".to_string(), "sup_norm".into()];
            header.extend((0..setup.array.len()).map(axis_name));
            header.extend(["thinned".into(), "scaled".into()]);
            let mut row = vec![fmt_f64(*q), fmt_f64(rep.sup_norm)];
            row.extend(rep.thinned.counts_of(worst).iter().map(|c| c.to_string()));
            row.extend([fmt_f64(a[worst]), fmt_f64(b[worst])]);
            let rows = [row];
            write_csv(&csv, &header, rows)?;
            side.file(csv);
        }
        Command::Figure { id } => figure(*id, ctx, &mut side)?,
    }
    if side.degraded() {
        eprintln!("warning: {name}: tail mass above the 1e-9 budget, results marked degraded");
    }
    side.write(&ctx.out.join(format!("{name}.json")), start.elapsed().as_secs_f64())?;
    Ok(side)
}

fn all(setup: &Setup) -> Vec<usize> {
    (0..setup.array.len()).collect()
}

/// Grid override restricted to `keep`, or the default grid of `array`.
fn ranges_for(
    setup: &Setup,
    array: &photonlab::detectors::DetectorArray,
    pair: &SourcePair,
    keep: &[usize],
) -> CliResult<Vec<(u64, u64)>> {
    Ok(match &setup.grid {
        Some(g) => keep.iter().map(|&k| g[k]).collect(),
        None => default_ranges(array, pair)?,
    })
}

/// Distribution over the detectors in `keep` (in that order), with some counts pinned.
fn compute(setup: &Setup, keep: &[usize], pins: &[(usize, u64)]) -> CliResult<JointDistribution> {
    for &k in keep {
        if k >= setup.array.len() {
            return Err(CliError::Config(format!("no detector {}", axis_name(k))));
        }
    }
    let array = setup.array.subset(keep)?;
    let mut ranges = ranges_for(setup, &array, &setup.pair, keep)?;
    for &(m, n) in pins {
        let i = keep
            .iter()
            .position(|&k| k == m)
            .ok_or_else(|| CliError::Config(format!("{} is not among the evaluated axes", axis_name(m))))?;
        ranges[i] = (n, n);
    }
    Ok(evaluate(&array, &setup.pair, &ranges, setup.engine.choice(), &setup.options)?)
}

fn joint(setup: &Setup, keep: &[usize], csv: &Path, side: &mut Sidecar) -> CliResult<()> {
    let d = compute(setup, keep, &[])?;
    side.engine(&d.meta);
    side.set("total", json!(d.total()));
    write_distribution(csv, &d, keep)?;
    side.file(csv.to_path_buf());
    Ok(())
}

fn modes_json(d: &JointDistribution) -> Value {
    match Slice::from_dist(d) {
        Ok(s) => json!({
            "mean": s.mean(),
            "std_dev": s.std_dev(),
            "modes": s.modes().iter().map(|m| json!({
                "position": m.position,
                "probability": m.prob,
                "weight": m.weight,
                "basin": [m.basin.0, m.basin.1],
            })).collect::<Vec<_>>(),
        }),
        Err(_) => Value::Null,
    }
}

/// Conditional over `free` given `fix`; returns it with the free axes in output order.
fn conditional_slice(
    setup: &Setup,
    fix: &[(usize, u64)],
    free: &[usize],
    side: &mut Sidecar,
) -> CliResult<(JointDistribution, Vec<usize>)> {
    if fix.is_empty() {
        return Err(CliError::Config("conditional needs at least one --fix".into()));
    }
    let mut keep: Vec<usize> = fix.iter().map(|f| f.0).chain(free.iter().copied()).collect();
    keep.sort_unstable();
    keep.dedup();
    if keep.len() != fix.len() + free.len() {
        return Err(CliError::Config("an axis is both fixed and free".into()));
    }
    let d = compute(setup, &keep, fix)?;
    side.engine(&d.meta);
    let local: Vec<(usize, u64)> = fix
        .iter()
        .map(|&(m, n)| (keep.iter().position(|&k| k == m).unwrap(), n))
        .collect();
    let c = conditional(&d, &local)?;
    side.set("conditional_sum", json!(c.total()));
    side.set("slice", modes_json(&c));
    let out_axes = keep.into_iter().filter(|k| !fix.iter().any(|f| f.0 == *k)).collect();
    Ok((c, out_axes))
}

fn sample(setup: &Setup, count: usize, seed: u64, csv: &Path, side: &mut Sidecar) -> CliResult<()> {
    let draws = if setup.engine == EngineKind::Meanfield {
        let delta = match &setup.pair {
            SourcePair::ReferencedPhase { delta, .. }
            | SourcePair::CommonNumber { delta, .. }
            | SourcePair::CommonDiagonal { delta, .. } => Some(*delta),
            SourcePair::Independent(..) => None,
        };
        side.set("engine", json!("meanfield"));
        side.set("method", json!("uniform phase, then independent Poisson counts"));
        sample_meanfield(&setup.array, setup.pair.means()?, delta, count, seed)
    } else {
        let d = compute(setup, &all(setup), &[])?;
        side.engine(&d.meta);
        side.set("method", json!("sequential inverse CDF on the materialized grid"));
        sample_joint(&d, count, seed)
    };
    let header: Vec<String> = (0..setup.array.len()).map(axis_name).collect();
    write_csv(csv, &header, draws.iter().map(|r| r.iter().map(|c| c.to_string()).collect()))?;
    side.file(csv.to_path_buf());
    Ok(())
}

/// Long-format rows `series, counts..., probability` for a one-axis conditional.
fn series_rows(label: &str, fixed: &[u64], d: &JointDistribution) -> Vec<Vec<String>> {
    let lo = d.ranges[0].0;
    d.probs()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = vec![label.to_string()];
            r.extend(fixed.iter().map(|f| f.to_string()));
            r.push((lo + i as u64).to_string());
            r.push(fmt_f64(*p));
            r
        })
        .collect()
}

fn series_json(label: &str, d: &JointDistribution, meta: &Metadata) -> Value {
    json!({ "series": label, "run": crate::output::meta_json(meta), "slice": modes_json(d) })
}

fn figure(id: u8, ctx: &Context, side: &mut Sidecar) -> CliResult<()> {
    let fig = presets::figure(id)?;
    side.set("config", serde_json::to_value(&fig.config).unwrap());
    side.set("preset", json!({ "figure": id, "title": fig.title, "preset_choices": fig.preset_choices }));
    let mut setup = fig.config.setup()?;
    if let Some(k) = ctx.engine {
        setup.engine = k;
    }
    setup.options.fock.allow_expensive |= ctx.allow_expensive;
    let file = |n: &str| ctx.out.join(format!("fig{id}_{n}.csv"));
    match id {
        1 => joint(&setup, &[0, 1], &file("joint"), side),
        2 => joint(&setup, &[0], &file("marginal"), side),
        3 => {
            let (c, axes) = conditional_slice(&setup, &[(0, N1_POISSON)], &[1], side)?;
            write_distribution(&file("conditional"), &c, &axes)?;
            side.file(file("conditional"));
            Ok(())
        }
        4 => {
            let mut rows = vec![];
            let mut info = vec![];
            for (n1, n2) in FIG4_FIXED {
                let d = compute(&setup, &[0, 1, 2], &[(0, n1), (1, n2)])?;
                side.engine(&d.meta);
                let c = conditional(&d, &[(0, n1), (1, n2)])?;
                let label = format!("n1={n1},n2={n2}");
                info.push(series_json(&label, &c, &d.meta));
                rows.extend(series_rows(&label, &[n1, n2], &c));
            }
            let header = ["series", "n1", "n2", "n3", "probability"].map(String::from);
            write_csv(&file("conditionals"), &header, rows)?;
            side.set("series", json!(info));
            side.file(file("conditionals"));
            Ok(())
        }
        5 => point_cloud(&setup, ctx, &file("points"), side),
        6 => binomial_sequence(&setup, &file("binomial"), side),
        7 => {
            let mut rows = vec![];
            let mut info = vec![];
            for q in FIG7_Q {
                let s = presets::super_poissonian(q).setup()?;
                let s = Setup { options: setup.options, ..s };
                let d = compute(&s, &[0, 1], &[(0, N1_POISSON)])?;
                side.engine(&d.meta);
                let c = conditional(&d, &[(0, N1_POISSON)])?;
                let label = format!("Q={q}");
                info.push(series_json(&label, &c, &d.meta));
                rows.extend(series_rows(&label, &[N1_POISSON], &c));
            }
            let header = ["series", "n1", "n2", "probability"].map(String::from);
            write_csv(&file("super_poissonian"), &header, rows)?;
            side.set("series", json!(info));
            side.file(file("super_poissonian"));
            Ok(())
        }
        _ => unreachable!("figure ids are checked by the preset table"),
    }
}

/// Points above the threshold of the full three-detector grid, slab by slab.
pub fn point_cloud_manifold(setup: &Setup) -> CliResult<(PeakManifold, f64)> {
    let traj = trajectory(&setup.array, &setup.pair, 512)?;
    let metric = TrajectoryMetric::new(&traj);
    let p_min = p_min_rule(&traj);
    let ranges = default_ranges(&setup.array, &setup.pair)?;
    let parts = phase_average_slabs(&setup.array, &setup.pair, &ranges, setup.options.phase, |_, slab| {
        peak_manifold_with(slab, &metric, p_min).map(|p| (p, slab.meta.tail_bound))
    })?;
    let mut tail = 0.0;
    let mut manifolds = vec![];
    for p in parts {
        let (m, t) = p?;
        tail += t;
        manifolds.push(m);
    }
    Ok((PeakManifold::merge(manifolds), tail))
}

fn point_cloud(setup: &Setup, ctx: &Context, csv: &Path, side: &mut Sidecar) -> CliResult<()> {
    if !ctx.allow_expensive {
        return Err(photonlab::Error::TooExpensive(
            "the full three-detector grid takes minutes; pass --allow-expensive".into(),
        )
        .into());
    }
    let (pm, tail) = point_cloud_manifold(setup)?;
    side.set("engine", json!("phase"));
    side.tail(tail);
    side.set(
        "point_cloud",
        json!({
            "p_min": pm.p_min,
            "points": pm.points.len(),
            "coverage": pm.coverage,
            "max_distance": pm.max_distance,
            "retained_mass": pm.retained_mass,
            "total_mass": pm.total_mass,
        }),
    );
    let header = ["n1", "n2", "n3", "probability"].map(String::from);
    let rows = pm.points.iter().map(|(c, p)| {
        let mut r: Vec<String> = c.iter().map(|x| x.to_string()).collect();
        r.push(fmt_f64(*p));
        r
    });
    write_csv(csv, &header, rows)?;
    side.file(csv.to_path_buf());
    Ok(())
}

/// Conditionals `P(n2 | n1 = 42)` for `B(q; 200)` sources and the Poissonian limit.
///
/// `B(q; N)` on `R` is evaluated as the number state `N / q` on `q R`, which
/// gives the same distribution and keeps the Fock engine on a single component.
pub fn binomial_series(setup: &Setup) -> CliResult<Vec<(String, JointDistribution, Metadata)>> {
    let base = default_ranges(&setup.array, &setup.pair)?;
    let ranges = [(N1_BINOMIAL, N1_BINOMIAL), base[1]];
    let mut out = vec![];
    for (num, den) in FIG6_Q {
        let n = presets::BINOMIAL_MEAN * den / num;
        let q = num as f64 / den as f64;
        let pair = SourcePair::independent(SourceSpec::NumberState(n), SourceSpec::NumberState(n));
        let d = evaluate(&setup.array.scaled(q), &pair, &ranges, EngineChoice::Fock, &setup.options)?;
        let c = conditional(&d, &[(0, N1_BINOMIAL)])?;
        let label = if num == den { "q=1".to_string() } else { format!("q={num}/{den}") };
        out.push((label, c, d.meta));
    }
    let lim = presets::binomial_limit().setup()?;
    let d = evaluate(&lim.array, &lim.pair, &ranges, EngineChoice::Phase, &setup.options)?;
    let c = conditional(&d, &[(0, N1_BINOMIAL)])?;
    out.push(("poisson".to_string(), c, d.meta));
    Ok(out)
}

fn binomial_sequence(setup: &Setup, csv: &Path, side: &mut Sidecar) -> CliResult<()> {
    let mut rows = vec![];
    let mut info = vec![];
    for (label, c, meta) in binomial_series(setup)? {
        side.engine(&meta);
        info.push(series_json(&label, &c, &meta));
        rows.extend(series_rows(&label, &[N1_BINOMIAL], &c));
    }
    side.set(
        "method",
        json!("B(q; N) on R evaluated as the number state N/q on q R (exact scaling equivalence)"),
    );
    side.set("series", json!(info));
    let header = ["series", "n1", "n2", "probability"].map(String::from);
    write_csv(csv, &header, rows)?;
    side.file(csv.to_path_buf());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        assert_eq!(parse_axes("n1,n3").unwrap(), vec![0, 2]);
        assert_eq!(parse_fix("n1=106").unwrap(), (0, 106));
        assert!(parse_axis("x1").is_err());
        assert!(parse_axis("n0").is_err());
        assert!(parse_fix("n1:3").is_err());
    }
}
