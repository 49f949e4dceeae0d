//! Automatic extraction of voters whose ballots contradict their nominal
//! group: sparse PCA on the transposed, standardized vote matrix, one
//! profile per component, and a report joining each outlier with their
//! full affinity vector.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gmm::DnaVector;
use crate::ingest::VoteDataset;
use crate::pca::expressed_variance_matrix;
use crate::preprocess::{encode, standardize};
use crate::spca::spca_fit_restarts;

/// Sparse component over voters: its support, the plurality group, and the
/// support members that belong to a different nominal group.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentProfile {
    /// 1-based extraction order.
    pub component: usize,
    /// Voter ids with nonzero loading, sorted by |loading| descending.
    pub support: Vec<String>,
    pub dominant_group: String,
    /// Fraction of the support with nominal group equal to the dominant one.
    pub dominant_fraction: f64,
    /// True when the plurality was tied and broken lexicographically.
    pub dominant_tie: bool,
    pub outliers: Vec<OutlierEntry>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OutlierEntry {
    pub voter_id: String,
    pub nominal_group: String,
}

/// Profiles plus the run parameters they were computed with.
#[derive(Debug, Clone, Serialize)]
pub struct OutlierAnalysis {
    pub k: usize,
    pub p: usize,
    pub expressed_variance: f64,
    pub profiles: Vec<ComponentProfile>,
}

/// Encode, transpose (bills by voters), standardize over voters, run sparse
/// PCA, then profile each component's support against the nominal labels.
pub fn outlier_pipeline(d: &VoteDataset, k: usize, p: usize) -> Result<OutlierAnalysis> {
    outlier_pipeline_restarts(d, k, p, 0)
}

pub fn outlier_pipeline_restarts(
    d: &VoteDataset,
    k: usize,
    p: usize,
    restarts: usize,
) -> Result<OutlierAnalysis> {
    let transposed = encode(d).transposed();
    let x = standardize(&transposed)?;
    let basis = spca_fit_restarts(x.view(), k, p, restarts)?;
    let evar = expressed_variance_matrix(x.view(), &basis)?;

    let group_of: HashMap<&str, &str> = d
        .voters()
        .iter()
        .map(|v| (v.id.as_str(), v.group.as_str()))
        .collect();

    let mut profiles = Vec::with_capacity(k);
    for comp in 0..basis.k() {
        let column = basis.directions().column(comp).to_owned();
        // Support sorted by |loading| descending, ties by column index.
        let mut support_idx = crate::spca::support_indices(column.view());
        support_idx.sort_by(|&a, &b| {
            column[b]
                .abs()
                .partial_cmp(&column[a].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let support: Vec<String> = support_idx
            .iter()
            .map(|&i| x.col_ids()[i].clone())
            .collect();

        let mut counts: HashMap<&str, usize> = HashMap::new();
        for id in &support {
            let g = group_of[id.as_str()];
            *counts.entry(g).or_default() += 1;
        }
        let max_count = counts.values().copied().max().unwrap_or(0);
        let mut leaders: Vec<&str> = counts
            .iter()
            .filter(|(_, &c)| c == max_count)
            .map(|(&g, _)| g)
            .collect();
        leaders.sort_unstable();
        let dominant_group = leaders[0].to_string();
        let dominant_tie = leaders.len() > 1;
        let dominant_fraction = max_count as f64 / support.len() as f64;

        let outliers = support
            .iter()
            .filter(|id| group_of[id.as_str()] != dominant_group)
            .map(|id| OutlierEntry {
                voter_id: id.clone(),
                nominal_group: group_of[id.as_str()].to_string(),
            })
            .collect();

        profiles.push(ComponentProfile {
            component: comp + 1,
            support,
            dominant_group,
            dominant_fraction,
            dominant_tie,
            outliers,
        });
    }
    Ok(OutlierAnalysis {
        k,
        p,
        expressed_variance: evar,
        profiles,
    })
}

/// One outlier joined with their affinity vector, heaviest group first.
#[derive(Debug, Clone, Serialize)]
pub struct OutlierDna {
    pub component: usize,
    pub voter_id: String,
    pub nominal_group: String,
    pub dominant_group: String,
    pub dna: Vec<GroupWeight>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupWeight {
    pub group: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct OutlierReport {
    pub entries: Vec<OutlierDna>,
}

/// Join each profiled outlier with their affinity vector, sorted by weight
/// descending (deterministic: ties keep group order).
pub fn outlier_report(
    profiles: &[ComponentProfile],
    dna_groups: &[String],
    dna: &[DnaVector],
) -> Result<OutlierReport> {
    let by_voter: HashMap<&str, &DnaVector> =
        dna.iter().map(|d| (d.voter_id.as_str(), d)).collect();
    let mut entries = Vec::new();
    for profile in profiles {
        for outlier in &profile.outliers {
            let row =
                by_voter
                    .get(outlier.voter_id.as_str())
                    .ok_or_else(|| Error::VoterNotFound {
                        voter: outlier.voter_id.clone(),
                    })?;
            let mut weights: Vec<GroupWeight> = dna_groups
                .iter()
                .zip(&row.probs)
                .map(|(g, &w)| GroupWeight {
                    group: g.clone(),
                    weight: w,
                })
                .collect();
            weights.sort_by(|a, b| {
                b.weight
                    .partial_cmp(&a.weight)
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            entries.push(OutlierDna {
                component: profile.component,
                voter_id: outlier.voter_id.clone(),
                nominal_group: outlier.nominal_group.clone(),
                dominant_group: profile.dominant_group.clone(),
                dna: weights,
            });
        }
    }
    Ok(OutlierReport { entries })
}
