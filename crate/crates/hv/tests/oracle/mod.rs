//! Brute-force reference for subset search.
//!
//! Computes mutual information straight from the definition
//! `Σ p(t,s) log2 p(t,s) / (p(t) p(s))` by decoding every joint assignment
//! into hash-map keyed marginals. Shares nothing with the entropy-based
//! implementation except the joint table itself.

#![allow(dead_code)]

use std::collections::HashMap;

use askwell_hv::{BayesNet, JointDistribution};

pub fn decode(mut index: usize, cards: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; cards.len()];
    for i in (0..cards.len()).rev() {
        digits[i] = index % cards[i];
        index /= cards[i];
    }
    digits
}

pub fn brute_mi(joint: &JointDistribution, target: &str, subset: &[String]) -> f64 {
    let names = joint.variable_names();
    let t = names.iter().position(|n| n == target).unwrap();
    let s: Vec<usize> = subset
        .iter()
        .map(|x| names.iter().position(|n| n == x).unwrap())
        .collect();
    let mut pts: HashMap<(usize, Vec<usize>), f64> = HashMap::new();
    let mut pt: HashMap<usize, f64> = HashMap::new();
    let mut ps: HashMap<Vec<usize>, f64> = HashMap::new();
    for (i, &p) in joint.probabilities().iter().enumerate() {
        let d = decode(i, joint.cardinalities());
        let key: Vec<usize> = s.iter().map(|&k| d[k]).collect();
        *pts.entry((d[t], key.clone())).or_default() += p;
        *pt.entry(d[t]).or_default() += p;
        *ps.entry(key).or_default() += p;
    }
    pts.iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|((tv, sv), &p)| p * (p / (pt[tv] * ps[sv])).log2())
        .sum::<f64>()
}

/// (subset, mi, hv) of the best subset under the documented ordering:
/// higher hv, then smaller size, then lexicographic names.
pub fn brute_best(net: &BayesNet, joint: &JointDistribution, max_size: usize) -> (Vec<String>, f64, f64) {
    let mut pool = net.candidate_names();
    pool.sort();
    let mut best: Option<(Vec<String>, f64, f64)> = None;
    for mask in 1u64..(1 << pool.len()) {
        let subset: Vec<String> = (0..pool.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| pool[i].clone())
            .collect();
        if subset.len() > max_size {
            continue;
        }
        let mi = brute_mi(joint, net.target(), &subset).max(0.0);
        let hv = mi / subset.len() as f64;
        let better = match &best {
            None => true,
            Some((bs, _, bhv)) => {
                if (hv - bhv).abs() > 1e-12 {
                    hv > *bhv
                } else if subset.len() != bs.len() {
                    subset.len() < bs.len()
                } else {
                    subset < *bs
                }
            }
        };
        if better {
            best = Some((subset, mi, hv));
        }
    }
    best.unwrap()
}
