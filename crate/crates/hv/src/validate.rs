//! Property sweeps over seeded synthetic networks.
//!
//! Each property is checked on many generated instances and summarized as
//! one [`PropertyRecord`]: how many instances ran, how many violated the
//! property, and the largest deviation observed.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::joint::{compute_joint, JointDistribution};
use crate::net::{BayesNet, DiscreteVariable};
use crate::score::{hv_score, mutual_information};
use crate::search::{best_subset_greedy, exhaustive_on_joint};
use crate::synth::{generate_synthetic_net, random_row, NetKind};
use crate::{HvError, PROB_TOLERANCE};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Networks for the MI bound, monotonicity, DPI and normalization checks.
    pub networks: usize,
    /// Instances for the explanatory-density check.
    pub density_instances: usize,
    /// Instances for the greedy-vs-exhaustive sweep.
    pub search_instances: usize,
    /// Largest network size generated (variables, target included).
    pub max_variables: usize,
    /// Largest size used for search sweeps (variables, target included).
    pub max_search_variables: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 20_250_101,
            networks: 1000,
            density_instances: 200,
            search_instances: 100,
            max_variables: 12,
            max_search_variables: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    pub max_deviation: f64,
}

impl PropertyRecord {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            instances: 0,
            failures: 0,
            max_deviation: 0.0,
        }
    }

    fn observe(&mut self, deviation: f64, failed: bool) {
        self.instances += 1;
        if failed {
            self.failures += 1;
        }
        if deviation > self.max_deviation {
            self.max_deviation = deviation;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.instances > 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub config: SuiteConfig,
    pub properties: Vec<PropertyRecord>,
    pub elapsed_ms: u128,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyRecord::passed)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyRecord> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for p in &self.properties {
            out.push_str(&format!(
                "{:<6} {:<24} instances={:<6} failures={:<4} max_deviation={:.3e}\n",
                if p.passed() { "PASS" } else { "FAIL" },
                p.name,
                p.instances,
                p.failures,
                p.max_deviation
            ));
        }
        out.push_str(&format!(
            "{} in {} ms\n",
            if self.passed() { "all properties hold" } else { "property violations found" },
            self.elapsed_ms
        ));
        out
    }
}

pub const NORMALIZATION: &str = "joint-normalization";
pub const MI_BOUNDS: &str = "mi-bounds";
pub const MI_MONOTONE: &str = "mi-monotonicity";
pub const DATA_PROCESSING: &str = "data-processing";
pub const EXPLANATORY_DENSITY: &str = "explanatory-density";
pub const GREEDY_DOMINANCE: &str = "greedy-dominance";

/// Kind and size for the `i`-th instance of a sweep.
pub fn instance_shape(i: usize, min_size: usize, max_size: usize) -> (NetKind, usize) {
    let kind = NetKind::ALL[i % NetKind::ALL.len()];
    let span = max_size - min_size + 1;
    let size = min_size + (i / NetKind::ALL.len()) % span;
    (kind, size)
}

fn random_subset<R: Rng>(rng: &mut R, pool: &[String]) -> Vec<String> {
    let k = rng.gen_range(0..=pool.len());
    let mut s: Vec<String> = pool.choose_multiple(rng, k).cloned().collect();
    s.sort();
    s
}

const SUBSETS_PER_NET: usize = 12;

fn check_information_properties(
    net: &BayesNet,
    joint: &JointDistribution,
    rng: &mut ChaCha8Rng,
    bounds: &mut PropertyRecord,
    monotone: &mut PropertyRecord,
) -> Result<(), HvError> {
    let target = net.target();
    let pool = net.candidate_names();
    let h_t = joint.entropy(&[target])?;
    for _ in 0..SUBSETS_PER_NET {
        let s = random_subset(rng, &pool);
        let mi = mutual_information(joint, target, &s)?;
        let h_s = joint.entropy(&s)?;
        let dev = (-mi).max(mi - h_t.min(h_s)).max(0.0);
        bounds.observe(dev, dev > PROB_TOLERANCE);

        let rest: Vec<&String> = pool.iter().filter(|v| !s.contains(v)).collect();
        if let Some(x) = rest.choose(rng) {
            let mut bigger = s.clone();
            bigger.push((*x).clone());
            let mi_bigger = mutual_information(joint, target, &bigger)?;
            let dev = (mi - mi_bigger).max(0.0);
            monotone.observe(dev, dev > PROB_TOLERANCE);
        }
    }
    Ok(())
}

fn check_data_processing(
    net: &BayesNet,
    joint: &JointDistribution,
    record: &mut PropertyRecord,
) -> Result<(), HvError> {
    // chain X1 -> ... -> Xn = T: variables nearer T carry at least as much
    let target = net.target();
    let names = net.candidate_names();
    let mis: Vec<f64> = names
        .iter()
        .map(|n| mutual_information(joint, target, &[n]))
        .collect::<Result<_, _>>()?;
    let mut dev: f64 = 0.0;
    for i in 0..mis.len() {
        for j in i + 1..mis.len() {
            dev = dev.max(mis[i] - mis[j]);
        }
    }
    record.observe(dev.max(0.0), dev > PROB_TOLERANCE);
    Ok(())
}

/// Appends a fresh root variable with a random marginal, independent of
/// everything in `net`.
pub fn append_noise_variable<R: Rng>(net: &BayesNet, rng: &mut R) -> Result<BayesNet, HvError> {
    let card = rng.gen_range(2..=3);
    let name = format!("Noise{}", net.variables().len() + 1);
    net.with_independent_variable(DiscreteVariable::root(name, random_row(rng, card)))
}

fn check_explanatory_density(
    net: &BayesNet,
    rng: &mut ChaCha8Rng,
    record: &mut PropertyRecord,
) -> Result<(), HvError> {
    let joint = compute_joint(net)?;
    let pool = net.candidate_names();
    let mut s = random_subset(rng, &pool);
    if s.is_empty() {
        s.push(pool[rng.gen_range(0..pool.len())].clone());
    }
    let base = hv_score(&joint, net.target(), &s)?;
    let noisy = append_noise_variable(net, rng)?;
    let noise_name = noisy.variables().last().expect("appended").name.clone();
    let joint2 = compute_joint(&noisy)?;
    let mut s2 = s.clone();
    s2.push(noise_name);
    let extended = hv_score(&joint2, noisy.target(), &s2)?;
    let dev = (extended.mi - base.mi).abs();
    let failed = dev > PROB_TOLERANCE || (base.hv > 0.0 && extended.hv >= base.hv);
    record.observe(dev, failed);
    Ok(())
}

/// Runs every property sweep with the given configuration.
pub fn run_property_suite(config: &SuiteConfig) -> Result<ValidationReport, HvError> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut normalization = PropertyRecord::new(NORMALIZATION);
    let mut bounds = PropertyRecord::new(MI_BOUNDS);
    let mut monotone = PropertyRecord::new(MI_MONOTONE);
    let mut dpi = PropertyRecord::new(DATA_PROCESSING);
    for i in 0..config.networks {
        let (kind, size) = instance_shape(i, 2, config.max_variables);
        let net = generate_synthetic_net(kind, size, config.seed.wrapping_add(i as u64))?;
        let joint = compute_joint(&net)?;
        let dev = (joint.total_mass() - 1.0).abs();
        normalization.observe(dev, dev > PROB_TOLERANCE);
        check_information_properties(&net, &joint, &mut rng, &mut bounds, &mut monotone)?;
        if kind == NetKind::Chain {
            check_data_processing(&net, &joint, &mut dpi)?;
        }
    }

    let mut density = PropertyRecord::new(EXPLANATORY_DENSITY);
    for i in 0..config.density_instances {
        let (kind, size) = instance_shape(i, 2, config.max_variables.saturating_sub(1).max(2));
        let net = generate_synthetic_net(kind, size, config.seed.wrapping_add(10_000 + i as u64))?;
        check_explanatory_density(&net, &mut rng, &mut density)?;
    }

    let mut greedy = PropertyRecord::new(GREEDY_DOMINANCE);
    for i in 0..config.search_instances {
        let (kind, size) = instance_shape(i, 2, config.max_search_variables);
        let net = generate_synthetic_net(kind, size, config.seed.wrapping_add(20_000 + i as u64))?;
        let joint = compute_joint(&net)?;
        let max_size = net.candidate_names().len();
        let ex = exhaustive_on_joint(&net, &joint, max_size)?;
        let gr = best_subset_greedy(&net, max_size)?;
        let dev = (gr.hv - ex.hv).max(0.0);
        greedy.observe(dev, dev > PROB_TOLERANCE);
    }

    Ok(ValidationReport {
        config: config.clone(),
        properties: vec![normalization, bounds, monotone, dpi, density, greedy],
        elapsed_ms: start.elapsed().as_millis(),
    })
}
