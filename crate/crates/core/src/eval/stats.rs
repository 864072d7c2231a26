//! Agreement, significance and ranking statistics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EvalError;

/// Item × rater table of categorical labels; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingMatrix {
    pub items: Vec<String>,
    pub raters: Vec<String>,
    pub values: Vec<Vec<Option<String>>>,
    /// Declared category set; when empty the observed labels are used.
    #[serde(default)]
    pub categories: Vec<String>,
}

impl RatingMatrix {
    pub fn complete(items: Vec<String>, raters: Vec<String>, values: Vec<Vec<String>>) -> Self {
        Self {
            items,
            raters,
            values: values.into_iter().map(|r| r.into_iter().map(Some).collect()).collect(),
            categories: Vec::new(),
        }
    }

    pub fn with_categories(mut self, categories: Vec<String>) -> Self {
        self.categories = categories;
        self
    }
}

/// Gwet's AC1. Items with fewer than two ratings are skipped; each rater's
/// category shares are taken over that rater's non-missing cells.
pub fn gwet_ac1(m: &RatingMatrix) -> Result<f64, EvalError> {
    if m.raters.len() < 2 {
        return Err(EvalError::Validation("AC1 needs at least two raters".into()));
    }
    if m.values.len() != m.items.len() || m.values.iter().any(|r| r.len() != m.raters.len()) {
        return Err(EvalError::Validation("rating table shape does not match items × raters".into()));
    }
    let mut cats: BTreeSet<&str> = m.categories.iter().map(String::as_str).collect();
    for v in m.values.iter().flatten().flatten() {
        if !m.categories.is_empty() && !cats.contains(v.as_str()) {
            return Err(EvalError::Validation(format!("label '{v}' is not a declared category")));
        }
        cats.insert(v);
    }
    let q = cats.len();
    if q < 2 {
        return Err(EvalError::Validation("AC1 needs at least two categories".into()));
    }

    let mut pa_sum = 0.0;
    let mut pa_items = 0usize;
    for row in &m.values {
        let present: Vec<&str> = row.iter().flatten().map(String::as_str).collect();
        if present.len() < 2 {
            continue;
        }
        let mut agree = 0usize;
        let mut pairs = 0usize;
        for i in 0..present.len() {
            for j in i + 1..present.len() {
                pairs += 1;
                agree += usize::from(present[i] == present[j]);
            }
        }
        pa_sum += agree as f64 / pairs as f64;
        pa_items += 1;
    }
    if pa_items == 0 {
        return Err(EvalError::Validation("no item has two or more ratings".into()));
    }
    let pa = pa_sum / pa_items as f64;

    let mut pi: BTreeMap<&str, f64> = cats.iter().map(|c| (*c, 0.0)).collect();
    let mut contributing = 0usize;
    for r in 0..m.raters.len() {
        let labels: Vec<&str> = m.values.iter().filter_map(|row| row[r].as_deref()).collect();
        if labels.is_empty() {
            continue;
        }
        contributing += 1;
        for l in &labels {
            *pi.get_mut(l).expect("category collected above") += 1.0 / labels.len() as f64;
        }
    }
    let pe = pi
        .values()
        .map(|p| {
            let p = p / contributing as f64;
            p * (1.0 - p)
        })
        .sum::<f64>()
        / (q as f64 - 1.0);
    if (1.0 - pe).abs() < 1e-15 {
        return Err(EvalError::Degenerate("chance agreement equals 1".into()));
    }
    Ok((pa - pe) / (1.0 - pe))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedT {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Two-sided paired t-test on `a - b`.
pub fn paired_t(a: &[f64], b: &[f64]) -> Result<PairedT, EvalError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(EvalError::Validation(format!(
            "paired t-test needs equal samples of at least 2 (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return Err(EvalError::Degenerate("differences have zero variance".into()));
    }
    let t = mean / (var.sqrt() / n.sqrt());
    let df = n - 1.0;
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| EvalError::Degenerate(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(PairedT { t, df, p })
}

/// Fraction of paired observations where `a` strictly beats `b`. Pairs with
/// a missing side are skipped; `None` when nothing is comparable.
pub fn win_rate(a: &[Option<f64>], b: &[Option<f64>], higher_is_better: bool) -> Option<f64> {
    let mut n = 0usize;
    let mut wins = 0usize;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            n += 1;
            let better = if higher_is_better { x > y } else { x < y };
            wins += usize::from(better);
        }
    }
    (n > 0).then(|| wins as f64 / n as f64)
}

/// Share of each rank 1..=`max_rank` among the given ranks. All zeros when
/// `ranks` is empty.
pub fn rank_shares(ranks: &[u8], max_rank: u8) -> Vec<f64> {
    let mut counts = vec![0usize; max_rank as usize];
    for &r in ranks {
        if (1..=max_rank).contains(&r) {
            counts[r as usize - 1] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    counts
        .into_iter()
        .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect()
}
