//! Mutual information and the explanatory-density (HV) score.

use serde::{Deserialize, Serialize};

use crate::joint::JointDistribution;
use crate::{HvError, PROB_TOLERANCE};

/// Score of a variable subset against the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvResult {
    /// Subset members, sorted by name.
    pub subset: Vec<String>,
    /// I(T;S) in bits.
    pub mi: f64,
    /// Description length, the subset cardinality.
    pub dl: usize,
    /// Bits per variable; 0 for the empty subset.
    pub hv: f64,
}

impl HvResult {
    pub fn empty() -> Self {
        Self {
            subset: Vec::new(),
            mi: 0.0,
            dl: 0,
            hv: 0.0,
        }
    }

    pub(crate) fn from_mi(mut subset: Vec<String>, mi: f64) -> Self {
        subset.sort();
        let dl = subset.len();
        let hv = if dl == 0 { 0.0 } else { mi / dl as f64 };
        Self { subset, mi, dl, hv }
    }
}

fn check_subset<S: AsRef<str>>(target: &str, subset: &[S]) -> Result<(), HvError> {
    if subset.iter().any(|s| s.as_ref() == target) {
        return Err(HvError::Validation(format!(
            "target '{target}' cannot be part of the conditioning subset"
        )));
    }
    for (i, a) in subset.iter().enumerate() {
        if subset[..i].iter().any(|b| b.as_ref() == a.as_ref()) {
            return Err(HvError::Validation(format!(
                "variable '{}' listed twice in subset",
                a.as_ref()
            )));
        }
    }
    Ok(())
}

/// I(T;S) = H(T) + H(S) - H(T,S), in bits.
pub fn mutual_information<S: AsRef<str>>(
    dist: &JointDistribution,
    target: &str,
    subset: &[S],
) -> Result<f64, HvError> {
    check_subset(target, subset)?;
    let t = dist.indices_of(&[target])?;
    let s = dist.indices_of(subset)?;
    Ok(mi_by_index(dist, t[0], &s))
}

pub(crate) fn mi_by_index(dist: &JointDistribution, target: usize, subset: &[usize]) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    let mut both = Vec::with_capacity(subset.len() + 1);
    both.push(target);
    both.extend_from_slice(subset);
    let mi = dist.entropy_by_index(&[target]) + dist.entropy_by_index(subset)
        - dist.entropy_by_index(&both);
    clamp_mi(mi)
}

fn clamp_mi(mi: f64) -> f64 {
    if (-PROB_TOLERANCE..0.0).contains(&mi) {
        0.0
    } else {
        mi
    }
}

/// HV(S) = I(T;S) / |S|, with HV of the empty set defined as 0.
pub fn hv_score<S: AsRef<str>>(
    dist: &JointDistribution,
    target: &str,
    subset: &[S],
) -> Result<HvResult, HvError> {
    let mi = mutual_information(dist, target, subset)?;
    Ok(HvResult::from_mi(
        subset.iter().map(|s| s.as_ref().to_string()).collect(),
        mi,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::compute_joint;
    use crate::net::{BayesNet, DiscreteVariable};

    fn h2(p: f64) -> f64 {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }

    fn copy_net(noise: bool) -> JointDistribution {
        let mut vars = vec![
            DiscreteVariable::root("T", vec![0.5, 0.5]),
            DiscreteVariable::with_parents(
                "X",
                2,
                vec!["T".into()],
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            ),
        ];
        if noise {
            vars.push(DiscreteVariable::root("N", vec![0.3, 0.7]));
        }
        compute_joint(&BayesNet::new(vars, "T").unwrap()).unwrap()
    }

    #[test]
    fn independence_gives_zero() {
        let j = copy_net(true);
        assert!(mutual_information(&j, "T", &["N"]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn perfect_channel() {
        let j = copy_net(false);
        assert!((mutual_information(&j, "T", &["X"]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binary_symmetric_channel_closed_form() {
        let net = BayesNet::new(
            vec![
                DiscreteVariable::root("X", vec![0.5, 0.5]),
                DiscreteVariable::with_parents(
                    "Y",
                    2,
                    vec!["X".into()],
                    vec![vec![0.9, 0.1], vec![0.1, 0.9]],
                ),
            ],
            "Y",
        )
        .unwrap();
        let j = compute_joint(&net).unwrap();
        let mi = mutual_information(&j, "Y", &["X"]).unwrap();
        let expected = 1.0 - h2(0.1);
        assert!((mi - expected).abs() < 1e-12);
        assert!((mi - 0.531).abs() < 1e-3);
    }

    #[test]
    fn target_in_subset_is_rejected() {
        let j = copy_net(false);
        assert!(matches!(
            mutual_information(&j, "T", &["T"]),
            Err(HvError::Validation(_))
        ));
        assert!(mutual_information(&j, "T", &["X", "X"]).is_err());
        assert!(mutual_information(&j, "T", &["Nope"]).is_err());
    }

    #[test]
    fn hv_examples() {
        let j = copy_net(true);
        let none: [&str; 0] = [];
        assert_eq!(hv_score(&j, "T", &none).unwrap(), HvResult::empty());
        let single = hv_score(&j, "T", &["X"]).unwrap();
        assert_eq!(single.dl, 1);
        assert!((single.hv - 1.0).abs() < 1e-12);
        let pair = hv_score(&j, "T", &["X", "N"]).unwrap();
        assert_eq!(pair.dl, 2);
        assert!((pair.mi - 1.0).abs() < 1e-9);
        assert!((pair.hv - 0.5).abs() < 1e-9);
        assert_eq!(pair.subset, vec!["N", "X"]);
    }
}
