//! Evaluation metrics: expected success of the proposal action, and
//! softmax-L2 similarity between out-of-class predictions and in-class
//! ground truth.

use super::{StatsError, SuccessTable};
use crate::domain::{ActionId, EnvClass};
use crate::tensor::softmax_slice;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One evaluated crop: predicted rates plus the truth-table key.
#[derive(Clone, Debug)]
pub struct ProposalSample {
    pub item: String,
    pub env: EnvClass,
    pub predicted_rates: [f64; ActionId::COUNT],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProposalReport {
    pub samples: usize,
    /// Mean true success rate of the argmax (proposal) action.
    pub proposal_mean: f64,
    pub proposal_stderr: f64,
    /// Mean true success rate of the true best action (the benchmark).
    pub best_mean: f64,
    /// `best_mean - proposal_mean`.
    pub regret: f64,
}

/// Argmax with ties resolved to the lowest action ordinal.
pub fn argmax_action(rates: &[f64; ActionId::COUNT]) -> ActionId {
    let mut best = 0usize;
    for (i, &r) in rates.iter().enumerate().skip(1) {
        if r > rates[best] {
            best = i;
        }
    }
    ActionId::from_ordinal(best).unwrap()
}

/// Average the true success rate of each sample's proposal action and of the
/// true best action, per the truth table.
pub fn expected_success_of_proposal(
    samples: &[ProposalSample],
    truth: &SuccessTable,
) -> Result<ProposalReport, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::InvalidInput("no samples to evaluate".into()));
    }
    let mut proposal_rates = Vec::with_capacity(samples.len());
    let mut best_sum = 0.0f64;
    for s in samples {
        let true_rates = truth
            .rate_vector(&s.item, s.env)
            .ok_or_else(|| StatsError::LookupMiss { item: s.item.clone(), env: s.env })?;
        let proposal = argmax_action(&s.predicted_rates);
        proposal_rates.push(true_rates[proposal.ordinal()]);
        best_sum += true_rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    let n = proposal_rates.len() as f64;
    let proposal_mean = proposal_rates.iter().sum::<f64>() / n;
    let var = proposal_rates.iter().map(|r| (r - proposal_mean).powi(2)).sum::<f64>() / n;
    let best_mean = best_sum / n;
    Ok(ProposalReport {
        samples: samples.len(),
        proposal_mean,
        proposal_stderr: (var / n).sqrt(),
        best_mean,
        regret: best_mean - proposal_mean,
    })
}

/// Softmax-L2 distance between two 6-d rate vectors.
pub fn softmax_l2_distance(u: &[f64], v: &[f64]) -> f64 {
    let su = softmax_slice(u);
    let sv = softmax_slice(v);
    su.iter().zip(&sv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OocSimilarity {
    pub ooc_items: Vec<String>,
    pub groups: Vec<String>,
    /// Per OOC item: the in-class item with minimal softmax-L2 distance.
    pub nearest: Vec<(String, String)>,
    /// Per OOC item: the group holding that nearest neighbor.
    pub nearest_group: Vec<(String, String)>,
    /// Row per OOC item, column per group: max in-group affinity, min-max
    /// normalized to [0,1] within the row.
    pub matrix: Vec<Vec<f64>>,
}

/// Compare out-of-class predictions against in-class ground-truth vectors.
///
/// `groups` partitions (a subset of) the truth items; distances use the
/// softmax of each 6-vector so uniform shifts of a prediction cancel out.
pub fn ooc_similarity(
    preds: &[(String, [f64; ActionId::COUNT])],
    truths: &[(String, [f64; ActionId::COUNT])],
    groups: &BTreeMap<String, Vec<String>>,
) -> Result<OocSimilarity, StatsError> {
    if preds.is_empty() || truths.is_empty() {
        return Err(StatsError::InvalidInput("similarity needs predictions and truth vectors".into()));
    }
    let truth_map: BTreeMap<&str, &[f64; ActionId::COUNT]> =
        truths.iter().map(|(id, v)| (id.as_str(), v)).collect();
    for (group, members) in groups {
        if members.is_empty() {
            return Err(StatsError::EmptyGroup { group: group.clone() });
        }
        for m in members {
            if !truth_map.contains_key(m.as_str()) {
                return Err(StatsError::InvalidInput(format!(
                    "group `{group}` references unknown truth item `{m}`"
                )));
            }
        }
    }

    let group_names: Vec<String> = groups.keys().cloned().collect();
    let mut nearest = Vec::new();
    let mut nearest_group = Vec::new();
    let mut matrix = Vec::new();

    for (ooc_id, pred) in preds {
        // Nearest in-class item overall (ties: first in sorted id order).
        let mut best_item: Option<(&str, f64)> = None;
        for (id, truth) in truth_map.iter() {
            let d = softmax_l2_distance(pred, *truth);
            if best_item.map_or(true, |(_, bd)| d < bd) {
                best_item = Some((id, d));
            }
        }
        let (nearest_id, _) = best_item.expect("truths checked non-empty");
        nearest.push((ooc_id.clone(), nearest_id.to_string()));

        // Group affinities: max over members of -distance.
        let mut row: Vec<f64> = Vec::with_capacity(group_names.len());
        for name in &group_names {
            let affinity = groups[name]
                .iter()
                .map(|m| -softmax_l2_distance(pred, truth_map[m.as_str()]))
                .fold(f64::NEG_INFINITY, f64::max);
            row.push(affinity);
        }
        let g_best = group_names
            .iter()
            .zip(&row)
            .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .map(|(g, _)| g.clone())
            .unwrap();
        nearest_group.push((ooc_id.clone(), g_best));

        // Min-max normalize the row; a constant row normalizes to all ones.
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let norm: Vec<f64> = if span > 0.0 {
            row.iter().map(|a| (a - lo) / span).collect()
        } else {
            vec![1.0; row.len()]
        };
        matrix.push(norm);
    }

    Ok(OocSimilarity {
        ooc_items: preds.iter().map(|(id, _)| id.clone()).collect(),
        groups: group_names,
        nearest,
        nearest_group,
        matrix,
    })
}
