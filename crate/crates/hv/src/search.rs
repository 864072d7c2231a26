//! Subset search maximizing the HV score.

use std::cmp::Ordering;

use crate::joint::{compute_joint, JointDistribution};
use crate::net::BayesNet;
use crate::score::{mi_by_index, HvResult};
use crate::HvError;

/// Largest candidate pool the exhaustive search will enumerate.
pub const MAX_EXHAUSTIVE_CANDIDATES: usize = 20;

/// HV values closer than this are treated as tied.
pub const HV_TIE_TOLERANCE: f64 = 1e-12;

/// Orders results best-first: higher hv, then smaller subset, then
/// lexicographically smaller sorted member names.
pub fn compare_results(a: &HvResult, b: &HvResult) -> Ordering {
    if (a.hv - b.hv).abs() > HV_TIE_TOLERANCE {
        return b.hv.partial_cmp(&a.hv).unwrap_or(Ordering::Equal);
    }
    a.dl.cmp(&b.dl).then_with(|| a.subset.cmp(&b.subset))
}

struct Candidates {
    names: Vec<String>,
    positions: Vec<usize>,
    target: usize,
}

fn candidates(net: &BayesNet, joint: &JointDistribution) -> Result<Candidates, HvError> {
    let names = net.candidate_names();
    let positions = joint.indices_of(&names)?;
    let target = joint.indices_of(&[net.target()])?[0];
    Ok(Candidates {
        names,
        positions,
        target,
    })
}

fn check_max_size(max_size: usize) -> Result<(), HvError> {
    if max_size == 0 {
        return Err(HvError::Validation("maxSize must be at least 1".into()));
    }
    Ok(())
}

/// Best nonempty subset of non-target variables with at most `max_size`
/// members, found by full enumeration.
pub fn best_subset_exhaustive(net: &BayesNet, max_size: usize) -> Result<HvResult, HvError> {
    check_max_size(max_size)?;
    let n = net.candidate_names().len();
    if n > MAX_EXHAUSTIVE_CANDIDATES {
        return Err(HvError::Capacity(format!(
            "{n} candidate variables exceed the exhaustive-search limit of {MAX_EXHAUSTIVE_CANDIDATES}"
        )));
    }
    let joint = compute_joint(net)?;
    exhaustive_on_joint(net, &joint, max_size)
}

pub(crate) fn exhaustive_on_joint(
    net: &BayesNet,
    joint: &JointDistribution,
    max_size: usize,
) -> Result<HvResult, HvError> {
    let c = candidates(net, joint)?;
    if c.names.is_empty() {
        return Err(HvError::Validation("network has no candidate variables".into()));
    }
    let mut best: Option<HvResult> = None;
    let mut members = Vec::with_capacity(c.names.len());
    for mask in 1u32..(1u32 << c.names.len()) {
        if mask.count_ones() as usize > max_size {
            continue;
        }
        members.clear();
        members.extend((0..c.names.len()).filter(|i| mask & (1 << i) != 0));
        let pos: Vec<usize> = members.iter().map(|&i| c.positions[i]).collect();
        let mi = mi_by_index(joint, c.target, &pos);
        let result = HvResult::from_mi(members.iter().map(|&i| c.names[i].clone()).collect(), mi);
        best = match best {
            Some(b) if compare_results(&b, &result) != Ordering::Greater => Some(b),
            _ => Some(result),
        };
    }
    Ok(best.expect("at least one nonempty subset"))
}

/// Forward selection: repeatedly add the variable giving the highest HV,
/// stopping once no addition improves it or `max_size` is reached.
pub fn best_subset_greedy(net: &BayesNet, max_size: usize) -> Result<HvResult, HvError> {
    check_max_size(max_size)?;
    let joint = compute_joint(net)?;
    let c = candidates(net, &joint)?;

    let mut chosen: Vec<usize> = Vec::new();
    let mut current = HvResult::empty();
    while chosen.len() < max_size.min(c.names.len()) {
        let mut step_best: Option<(usize, HvResult)> = None;
        for i in (0..c.names.len()).filter(|i| !chosen.contains(i)) {
            let mut pos: Vec<usize> = chosen.iter().map(|&k| c.positions[k]).collect();
            pos.push(c.positions[i]);
            let mi = mi_by_index(&joint, c.target, &pos);
            let names = chosen
                .iter()
                .chain(std::iter::once(&i))
                .map(|&k| c.names[k].clone())
                .collect();
            let result = HvResult::from_mi(names, mi);
            step_best = match step_best {
                Some((bi, b)) if compare_results(&b, &result) != Ordering::Greater => Some((bi, b)),
                _ => Some((i, result)),
            };
        }
        match step_best {
            Some((i, result)) if result.hv > current.hv => {
                chosen.push(i);
                current = result;
            }
            _ => break,
        }
    }
    Ok(current)
}
