//! Seed-deterministic synthetic datasets: voting blocs with controllable
//! cohesion and planted cross-voters, and labeled Gaussian point clouds for
//! exercising the posterior machinery directly.
//!
//! Bloc generation derives every decision from a SplitMix64 hash of
//! (seed, domain, indices), so the output is a pure function of the seed
//! and independent of evaluation order. Gaussian sampling uses ChaCha8 with
//! one stream per class.

use chrono::NaiveDate;
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::{Bill, VoteDataset, VoteValue, Voter};

/// SplitMix64 finalizer: the standard 64-bit avalanche mix.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Hash a seed plus a decision coordinate into an independent value.
fn cell_hash(seed: u64, domain: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut h = splitmix64(seed ^ domain);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    splitmix64(h ^ c)
}

const DOMAIN_LINE: u64 = 0x4c494e45; // "LINE"
const DOMAIN_VOTE: u64 = 0x564f5445; // "VOTE"

fn uniform01(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn ternary(h: u64) -> VoteValue {
    match h % 3 {
        0 => VoteValue::Yes,
        1 => VoteValue::No,
        _ => VoteValue::NotVoting,
    }
}

#[derive(Debug, Clone)]
pub struct BlocConfig {
    /// Members per group (plants come on top of these counts).
    pub group_sizes: Vec<usize>,
    pub n_bills: usize,
    /// Probability that a member votes the group line; the rest of the mass
    /// splits evenly over the other two values.
    pub cohesion: f64,
    /// Cross-voters: labeled with one group, voting another group's line.
    pub planted_outliers: usize,
    pub seed: u64,
}

/// One planted cross-voter and the ground truth about them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedOutlier {
    pub voter_id: String,
    /// The label the voter carries.
    pub nominal_group: String,
    /// The group whose line the voter actually votes.
    pub votes_with: String,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub dataset: VoteDataset,
    pub planted: Vec<PlantedOutlier>,
}

/// Generate a bloc-structured dataset. Every group draws a random ternary
/// party line per bill; members follow it with probability `cohesion`.
/// Planted outliers carry the label of one group and vote another group's
/// line exactly. Columns that come out constant are regenerated with an
/// incremented attempt counter, deterministically.
pub fn gen_blocs(cfg: &BlocConfig) -> Result<SynthDataset> {
    let n_groups = cfg.group_sizes.len();
    if n_groups < 2 {
        return Err(Error::InvalidParameter {
            reason: "need at least two groups".into(),
        });
    }
    if cfg.group_sizes.iter().any(|&s| s < 2) {
        return Err(Error::InvalidParameter {
            reason: "every group needs at least 2 members".into(),
        });
    }
    if !(0.5..=1.0).contains(&cfg.cohesion) {
        return Err(Error::InvalidParameter {
            reason: format!("cohesion must lie in [0.5, 1], got {}", cfg.cohesion),
        });
    }
    if cfg.n_bills == 0 {
        return Err(Error::InvalidParameter {
            reason: "need at least one bill".into(),
        });
    }

    let group_ids: Vec<String> = (1..=n_groups).map(|g| format!("G{g}")).collect();

    // Regular members first, plants appended at the end.
    let mut voters = Vec::new();
    let mut voter_group = Vec::new(); // (nominal, votes_with)
    for (gi, &size) in cfg.group_sizes.iter().enumerate() {
        for _ in 0..size {
            voter_group.push((gi, gi));
        }
    }
    let mut planted_slots = Vec::new();
    for j in 0..cfg.planted_outliers {
        let host = j % n_groups;
        let target = (j + 1) % n_groups;
        planted_slots.push(voter_group.len());
        voter_group.push((host, target));
    }
    let m = voter_group.len();
    let width = m.to_string().len().max(3);
    for (i, &(nominal, _)) in voter_group.iter().enumerate() {
        voters.push(Voter {
            id: format!("v{:0width$}", i + 1, width = width),
            group: group_ids[nominal].clone(),
        });
    }

    let planted = planted_slots
        .iter()
        .map(|&slot| {
            let (nominal, target) = voter_group[slot];
            PlantedOutlier {
                voter_id: voters[slot].id.clone(),
                nominal_group: group_ids[nominal].clone(),
                votes_with: group_ids[target].clone(),
            }
        })
        .collect();

    let base_date = NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date");
    let bills: Vec<Bill> = (0..cfg.n_bills)
        .map(|b| Bill {
            id: format!("b{:03}", b + 1),
            date: base_date + chrono::Days::new(b as u64),
            description: format!("synthetic bill {}", b + 1),
            secret_ballot: false,
        })
        .collect();

    // Column-major generation so a constant column can be redrawn in place.
    let mut grid = vec![VoteValue::NotVoting; m * cfg.n_bills];
    for bill in 0..cfg.n_bills {
        let mut attempt: u64 = 0;
        loop {
            let lines: Vec<VoteValue> = (0..n_groups)
                .map(|g| {
                    ternary(cell_hash(
                        cfg.seed,
                        DOMAIN_LINE,
                        g as u64,
                        bill as u64,
                        attempt,
                    ))
                })
                .collect();
            let mut first = None;
            let mut constant = true;
            for (vi, &(_, votes_with)) in voter_group.iter().enumerate() {
                let line = lines[votes_with];
                let value = if planted_slots.contains(&vi) {
                    // Plants follow their target line exactly.
                    line
                } else {
                    let h = cell_hash(cfg.seed, DOMAIN_VOTE, vi as u64, bill as u64, attempt);
                    if uniform01(h) < cfg.cohesion {
                        line
                    } else {
                        let others: Vec<VoteValue> =
                            [VoteValue::Yes, VoteValue::No, VoteValue::NotVoting]
                                .into_iter()
                                .filter(|v| *v != line)
                                .collect();
                        others[(h >> 60) as usize & 1]
                    }
                };
                grid[vi * cfg.n_bills + bill] = value;
                match first {
                    None => first = Some(value),
                    Some(f) if f != value => constant = false,
                    _ => {}
                }
            }
            if !constant {
                break;
            }
            attempt += 1;
            if attempt > 1000 {
                return Err(Error::InvalidParameter {
                    reason: format!("bill {bill} never produced a non-constant column"),
                });
            }
        }
    }

    let dataset = VoteDataset::from_dense(voters, bills, grid)?;
    Ok(SynthDataset { dataset, planted })
}

/// Sample labeled spherical Gaussians whose means sit at the vertices of a
/// regular simplex with the requested pairwise Mahalanobis distance.
/// Requires `dim >= n_groups`. Rows are grouped by class, classes in order.
pub fn gen_gmm(
    n_groups: usize,
    dim: usize,
    separation: f64,
    sizes: &[usize],
    seed: u64,
) -> Result<(Array2<f64>, Vec<usize>)> {
    if n_groups < 1 || sizes.len() != n_groups {
        return Err(Error::InvalidParameter {
            reason: format!("expected {n_groups} sizes, got {}", sizes.len()),
        });
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidParameter {
            reason: "class sizes must be positive".into(),
        });
    }
    if dim < n_groups {
        return Err(Error::InvalidParameter {
            reason: format!("simplex means need dim >= n_groups ({dim} < {n_groups})"),
        });
    }
    if separation.is_nan() || separation < 0.0 {
        return Err(Error::InvalidParameter {
            reason: format!("separation must be non-negative, got {separation}"),
        });
    }

    // mu_c = s/sqrt(2) * (e_c - 1/g), so ||mu_a - mu_b|| = s exactly; with
    // identity covariance that is also the Mahalanobis distance.
    let mut means = Vec::with_capacity(n_groups);
    let scale = separation / std::f64::consts::SQRT_2;
    for c in 0..n_groups {
        let mut mu = Array1::<f64>::zeros(dim);
        for j in 0..n_groups {
            let e = if j == c { 1.0 } else { 0.0 };
            mu[j] = scale * (e - 1.0 / n_groups as f64);
        }
        means.push(mu);
    }

    let total: usize = sizes.iter().sum();
    let mut points = Array2::<f64>::zeros((total, dim));
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for (c, &size) in sizes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64 + 1);
        for _ in 0..size {
            for j in 0..dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                points[[row, j]] = means[c][j] + z;
            }
            labels.push(c);
            row += 1;
        }
    }
    Ok((points, labels))
}
