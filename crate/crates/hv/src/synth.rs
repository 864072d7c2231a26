//! Seeded synthetic network generator.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::net::{BayesNet, DiscreteVariable};
use crate::HvError;

/// Smallest value a CPT cell may take before row normalization.
pub const CPT_FLOOR: f64 = 0.01;

/// Joint-state budget used when choosing ternary variables in random nets.
const RANDOM_STATE_BUDGET: usize = 4096;
const RANDOM_MAX_PARENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Chain,
    Fork,
    Collider,
    Random,
}

impl NetKind {
    pub const ALL: [NetKind; 4] = [NetKind::Chain, NetKind::Fork, NetKind::Collider, NetKind::Random];
}

impl fmt::Display for NetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetKind::Chain => "chain",
            NetKind::Fork => "fork",
            NetKind::Collider => "collider",
            NetKind::Random => "random",
        })
    }
}

impl FromStr for NetKind {
    type Err = HvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chain" => Ok(NetKind::Chain),
            "fork" => Ok(NetKind::Fork),
            "collider" => Ok(NetKind::Collider),
            "random" => Ok(NetKind::Random),
            other => Err(HvError::Validation(format!("unknown network kind '{other}'"))),
        }
    }
}

fn var_name(i: usize) -> String {
    format!("X{}", i + 1)
}

/// One CPT row: uniform draws floored at [`CPT_FLOOR`], then normalized.
pub fn random_row<R: Rng>(rng: &mut R, cardinality: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..cardinality)
        .map(|_| rng.gen::<f64>().max(CPT_FLOOR))
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

fn random_variable<R: Rng>(
    rng: &mut R,
    name: String,
    cardinality: usize,
    parents: Vec<usize>,
    cards: &[usize],
) -> DiscreteVariable {
    let rows: usize = parents.iter().map(|&p| cards[p]).product();
    let cpt = (0..rows).map(|_| random_row(rng, cardinality)).collect();
    DiscreteVariable::with_parents(name, cardinality, parents.into_iter().map(var_name).collect(), cpt)
}

/// Builds a network of the given shape. Variables are named `X1..Xn` in
/// topological order. The target is the sink for chains and colliders, the
/// root for forks, and the last variable for random DAGs.
pub fn generate_synthetic_net(kind: NetKind, size: usize, seed: u64) -> Result<BayesNet, HvError> {
    if size < 2 {
        return Err(HvError::Validation(format!("network size {size} is below 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (cards, parents): (Vec<usize>, Vec<Vec<usize>>) = match kind {
        NetKind::Chain => (
            vec![2; size],
            (0..size).map(|i| if i == 0 { vec![] } else { vec![i - 1] }).collect(),
        ),
        NetKind::Fork => (
            vec![2; size],
            (0..size).map(|i| if i == 0 { vec![] } else { vec![0] }).collect(),
        ),
        NetKind::Collider => (
            vec![2; size],
            (0..size)
                .map(|i| if i + 1 == size { (0..size - 1).collect() } else { vec![] })
                .collect(),
        ),
        NetKind::Random => {
            let mut cards = Vec::with_capacity(size);
            let mut states = 1usize;
            for i in 0..size {
                let remaining_binary = 1usize << (size - i - 1);
                let card = if rng.gen_bool(0.3) && states * 3 * remaining_binary <= RANDOM_STATE_BUDGET {
                    3
                } else {
                    2
                };
                states *= card;
                cards.push(card);
            }
            let mut parents = Vec::with_capacity(size);
            for i in 0..size {
                let mut ps: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.4)).collect();
                if ps.len() > RANDOM_MAX_PARENTS {
                    ps.shuffle(&mut rng);
                    ps.truncate(RANDOM_MAX_PARENTS);
                    ps.sort_unstable();
                }
                if i + 1 == size && ps.is_empty() {
                    ps.push(rng.gen_range(0..i));
                }
                parents.push(ps);
            }
            (cards, parents)
        }
    };

    let variables = (0..size)
        .map(|i| random_variable(&mut rng, var_name(i), cards[i], parents[i].clone(), &cards))
        .collect();
    let target = match kind {
        NetKind::Fork => var_name(0),
        _ => var_name(size - 1),
    };
    BayesNet::new(variables, target)
}
