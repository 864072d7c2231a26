//! Dense joint tables and Shannon entropy over their marginals.

use serde::{Deserialize, Serialize};

use crate::net::BayesNet;
use crate::HvError;

/// Full joint distribution, row-major over `variable_names` (the last
/// variable varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    variable_names: Vec<String>,
    cardinalities: Vec<usize>,
    probabilities: Vec<f64>,
}

/// Multiplies CPT entries along the topological order of `net`.
pub fn compute_joint(net: &BayesNet) -> Result<JointDistribution, HvError> {
    let total = net
        .joint_state_count()
        .filter(|&n| n <= net.state_bound())
        .ok_or_else(|| {
            HvError::Capacity(format!("joint state count exceeds bound {}", net.state_bound()))
        })?;

    let vars = net.variables();
    let mut table = Vec::with_capacity(total);
    table.push(1.0f64);
    let mut cards: Vec<usize> = Vec::with_capacity(vars.len());

    for var in vars {
        // strides of the already-placed variables inside the current table
        let mut strides = vec![0usize; cards.len()];
        let mut acc = 1usize;
        for i in (0..cards.len()).rev() {
            strides[i] = acc;
            acc *= cards[i];
        }
        let parent_pos: Vec<usize> = var
            .parents
            .iter()
            .map(|p| net.index_of(p).expect("validated parent"))
            .collect();

        let mut next = Vec::with_capacity(table.len() * var.cardinality);
        for (idx, &p) in table.iter().enumerate() {
            let mut row = 0usize;
            for &pp in &parent_pos {
                let digit = (idx / strides[pp]) % cards[pp];
                row = row * cards[pp] + digit;
            }
            let cpt_row = &var.cpt[row];
            next.extend(cpt_row.iter().map(|&q| p * q));
        }
        table = next;
        cards.push(var.cardinality);
    }

    Ok(JointDistribution {
        variable_names: vars.iter().map(|v| v.name.clone()).collect(),
        cardinalities: cards,
        probabilities: table,
    })
}

impl JointDistribution {
    pub fn new(
        variable_names: Vec<String>,
        cardinalities: Vec<usize>,
        probabilities: Vec<f64>,
    ) -> Result<Self, HvError> {
        if variable_names.len() != cardinalities.len() {
            return Err(HvError::Validation(
                "variable name and cardinality counts differ".into(),
            ));
        }
        let states: usize = cardinalities.iter().product();
        if states != probabilities.len() {
            return Err(HvError::Validation(format!(
                "table has {} entries, expected {states}",
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(HvError::Validation("negative or non-finite probability".into()));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > crate::PROB_TOLERANCE {
            return Err(HvError::Validation(format!("probabilities sum to {sum}")));
        }
        Ok(Self {
            variable_names,
            cardinalities,
            probabilities,
        })
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub(crate) fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>, HvError> {
        names
            .iter()
            .map(|n| {
                let n = n.as_ref();
                self.variable_names
                    .iter()
                    .position(|v| v == n)
                    .ok_or_else(|| HvError::Validation(format!("unknown variable '{n}'")))
            })
            .collect()
    }

    /// Marginal table over the given variable positions, row-major in the
    /// order given.
    pub(crate) fn marginal_by_index(&self, keep: &[usize]) -> Vec<f64> {
        let mut out_strides = vec![0usize; self.cardinalities.len()];
        let mut size = 1usize;
        for &k in keep.iter().rev() {
            out_strides[k] += size;
            size *= self.cardinalities[k];
        }
        let mut out = vec![0.0; size];
        let n = self.cardinalities.len();
        let mut digits = vec![0usize; n];
        let mut out_idx = 0usize;
        for &p in &self.probabilities {
            out[out_idx] += p;
            // advance the mixed-radix counter, last variable fastest
            let mut i = n;
            while i > 0 {
                i -= 1;
                digits[i] += 1;
                out_idx += out_strides[i];
                if digits[i] < self.cardinalities[i] {
                    break;
                }
                out_idx -= out_strides[i] * digits[i];
                digits[i] = 0;
            }
        }
        out
    }

    /// Marginal distribution over `names`, in that order.
    pub fn marginal<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<f64>, HvError> {
        let idx = self.indices_of(names)?;
        Ok(self.marginal_by_index(&idx))
    }

    /// Shannon entropy, in bits, of the marginal over `names`.
    pub fn entropy<S: AsRef<str>>(&self, names: &[S]) -> Result<f64, HvError> {
        let idx = self.indices_of(names)?;
        Ok(self.entropy_by_index(&idx))
    }

    pub(crate) fn entropy_by_index(&self, keep: &[usize]) -> f64 {
        if keep.is_empty() {
            return 0.0;
        }
        entropy_bits(&self.marginal_by_index(keep))
    }
}

/// `-Σ p log2 p`, skipping zero cells.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}
