//! Discrete Bayesian networks with tabular CPTs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{HvError, PROB_TOLERANCE};

/// Default upper bound on the number of joint states a network may span.
pub const DEFAULT_STATE_BOUND: usize = 1 << 20;

/// A discrete variable and its conditional probability table.
///
/// `cpt` has one row per joint parent assignment. Rows are ordered
/// mixed-radix over `parents`, first parent most significant, which matches
/// the row-major joint layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteVariable {
    pub name: String,
    pub cardinality: usize,
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<f64>>,
}

impl DiscreteVariable {
    /// A parentless variable with the given marginal.
    pub fn root(name: impl Into<String>, probs: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            cardinality: probs.len(),
            parents: Vec::new(),
            cpt: vec![probs],
        }
    }

    pub fn with_parents(
        name: impl Into<String>,
        cardinality: usize,
        parents: Vec<String>,
        cpt: Vec<Vec<f64>>,
    ) -> Self {
        Self {
            name: name.into(),
            cardinality,
            parents,
            cpt,
        }
    }
}

/// A validated DAG of discrete variables in topological order, with a
/// designated decision target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesNet {
    variables: Vec<DiscreteVariable>,
    target: String,
    state_bound: usize,
}

impl BayesNet {
    pub fn new(variables: Vec<DiscreteVariable>, target: impl Into<String>) -> Result<Self, HvError> {
        Self::with_state_bound(variables, target, DEFAULT_STATE_BOUND)
    }

    pub fn with_state_bound(
        variables: Vec<DiscreteVariable>,
        target: impl Into<String>,
        state_bound: usize,
    ) -> Result<Self, HvError> {
        let net = Self {
            variables,
            target: target.into(),
            state_bound,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn variables(&self) -> &[DiscreteVariable] {
        &self.variables
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn state_bound(&self) -> usize {
        self.state_bound
    }

    pub fn variable(&self, name: &str) -> Option<&DiscreteVariable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Names of every variable except the target, in stored order.
    pub fn candidate_names(&self) -> Vec<String> {
        self.variables
            .iter()
            .filter(|v| v.name != self.target)
            .map(|v| v.name.clone())
            .collect()
    }

    /// Product of all cardinalities, or `None` on overflow.
    pub fn joint_state_count(&self) -> Option<usize> {
        self.variables
            .iter()
            .try_fold(1usize, |acc, v| acc.checked_mul(v.cardinality))
    }

    /// Returns a copy of this network with an extra parentless variable
    /// appended. The new variable is independent of everything else.
    pub fn with_independent_variable(&self, variable: DiscreteVariable) -> Result<Self, HvError> {
        if !variable.parents.is_empty() {
            return Err(HvError::Validation(format!(
                "appended variable '{}' must have no parents",
                variable.name
            )));
        }
        let mut variables = self.variables.clone();
        variables.push(variable);
        Self::with_state_bound(variables, self.target.clone(), self.state_bound)
    }

    fn validate(&self) -> Result<(), HvError> {
        let mut position: HashMap<&str, usize> = HashMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            if v.name.is_empty() {
                return Err(HvError::Validation(format!("variable #{i} has an empty name")));
            }
            if position.insert(v.name.as_str(), i).is_some() {
                return Err(HvError::Validation(format!("duplicate variable '{}'", v.name)));
            }
        }
        for v in &self.variables {
            for p in &v.parents {
                if !position.contains_key(p.as_str()) {
                    return Err(HvError::Validation(format!(
                        "variable '{}' references unknown parent '{p}'",
                        v.name
                    )));
                }
            }
        }
        self.check_acyclic(&position)?;
        for (i, v) in self.variables.iter().enumerate() {
            for p in &v.parents {
                if position[p.as_str()] >= i {
                    return Err(HvError::Validation(format!(
                        "parent '{p}' of '{}' does not precede it in topological order",
                        v.name
                    )));
                }
            }
        }
        if !position.contains_key(self.target.as_str()) {
            return Err(HvError::Validation(format!(
                "target '{}' is not a variable of the network",
                self.target
            )));
        }
        for v in &self.variables {
            self.check_cpt(v)?;
        }
        match self.joint_state_count() {
            Some(n) if n <= self.state_bound => Ok(()),
            n => Err(HvError::Capacity(format!(
                "joint state count {} exceeds bound {}",
                n.map_or_else(|| "overflow".to_string(), |n| n.to_string()),
                self.state_bound
            ))),
        }
    }

    fn check_acyclic(&self, position: &HashMap<&str, usize>) -> Result<(), HvError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.variables.len()];
        fn visit(
            net: &BayesNet,
            position: &HashMap<&str, usize>,
            state: &mut [u8],
            i: usize,
        ) -> Result<(), HvError> {
            match state[i] {
                1 => {
                    return Err(HvError::Validation(format!(
                        "parent graph contains a cycle through '{}'",
                        net.variables[i].name
                    )))
                }
                2 => return Ok(()),
                _ => {}
            }
            state[i] = 1;
            for p in &net.variables[i].parents {
                visit(net, position, state, position[p.as_str()])?;
            }
            state[i] = 2;
            Ok(())
        }
        for i in 0..self.variables.len() {
            visit(self, position, &mut state, i)?;
        }
        Ok(())
    }

    fn check_cpt(&self, v: &DiscreteVariable) -> Result<(), HvError> {
        if v.cardinality < 2 {
            return Err(HvError::Validation(format!(
                "variable '{}' has cardinality {} (< 2)",
                v.name, v.cardinality
            )));
        }
        let rows = v.parents.iter().try_fold(1usize, |acc, p| {
            acc.checked_mul(self.variable(p).map_or(1, |pv| pv.cardinality))
        });
        if rows != Some(v.cpt.len()) {
            return Err(HvError::Validation(format!(
                "variable '{}' has {} CPT rows, expected {}",
                v.name,
                v.cpt.len(),
                rows.map_or_else(|| "overflow".to_string(), |r| r.to_string())
            )));
        }
        for (r, row) in v.cpt.iter().enumerate() {
            if row.len() != v.cardinality {
                return Err(HvError::Validation(format!(
                    "variable '{}' CPT row {r} has {} entries, expected {}",
                    v.name,
                    row.len(),
                    v.cardinality
                )));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(HvError::Validation(format!(
                    "variable '{}' CPT row {r} has an entry outside [0,1]",
                    v.name
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                return Err(HvError::Validation(format!(
                    "variable '{}' CPT row {r} sums to {sum}",
                    v.name
                )));
            }
        }
        Ok(())
    }
}
