use super::{EngineTag, JointDistribution, Metadata};
use crate::error::{Error, Result};

const FLOOR: f64 = 1e-300;

/// M-dimensional convolution of two distributions that start at zero counts.
///
/// The output box is the sum of the input boxes. Entries below `1e-300` are
/// skipped; their mass enters the tail bound.
pub fn incoherent_joint(a: &JointDistribution, b: &JointDistribution) -> Result<JointDistribution> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!("{} vs {} axes", a.dims(), b.dims())));
    }
    if a.ranges.iter().chain(&b.ranges).any(|r| r.0 != 0) {
        return Err(Error::Shape("convolution needs full grids starting at zero".into()));
    }
    let ranges: Vec<(u64, u64)> = a.ranges.iter().zip(&b.ranges).map(|(x, y)| (0, x.1 + y.1)).collect();
    let shape: Vec<usize> = ranges.iter().map(|r| (r.1 + 1) as usize).collect();
    let total: usize = shape.iter().product();
    let pa = a.probs();
    let pb = b.probs();
    let mut stride = vec![1usize; shape.len()];
    for m in (0..shape.len().saturating_sub(1)).rev() {
        stride[m] = stride[m + 1] * shape[m + 1];
    }
    // kept entries as (offset in the output box, probability)
    let nz = |p: &[f64], d: &JointDistribution| -> (Vec<(usize, f64)>, f64) {
        let mut kept = Vec::new();
        let mut lost = 0.0;
        for (i, &x) in p.iter().enumerate() {
            if x >= FLOOR {
                let off = d.counts_of(i).iter().zip(&stride).map(|(c, s)| *c as usize * s).sum();
                kept.push((off, x));
            } else {
                lost += x;
            }
        }
        (kept, lost)
    };
    let (ka, la) = nz(&pa, a);
    let (kb, lb) = nz(&pb, b);
    let mut out = vec![0.0; total];
    for &(oa, x) in &ka {
        for &(ob, y) in &kb {
            out[oa + ob] += x * y;
        }
    }
    let mut meta = Metadata::new(EngineTag::Incoherent);
    // each cell sums at most min(|a|, |b|) products
    let mass: f64 = ka.iter().map(|e| e.1).sum::<f64>() * kb.iter().map(|e| e.1).sum::<f64>();
    let rounding = f64::EPSILON * ka.len().min(kb.len()) as f64 * mass;
    meta.tail_bound = a.meta.tail_bound + b.meta.tail_bound + la + lb + rounding;
    Ok(JointDistribution::from_linear(ranges, &out, meta))
}
