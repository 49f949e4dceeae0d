//! Per-group Gaussian model fit by maximum likelihood in the reduced space,
//! and posterior group probabilities (the affinity vector) via Bayes' rule.
//!
//! Posteriors are evaluated in the log domain with max-subtraction, and the
//! quadratic forms go through a Cholesky factor of each covariance; no
//! explicit inverse is ever formed.

use ndarray::{Array1, Array2, ArrayView1};
use ndarray_linalg::{Cholesky, Eigh, UPLO};
use serde_json::json;

use crate::error::{Error, Result};
use crate::ingest::GroupAssignment;
use crate::pca::ProjectedData;

/// Highest acceptable covariance condition number under automatic
/// shrinkage selection.
const MAX_CONDITION: f64 = 1e8;
/// Shrinkage ladder, as multiples of trace(pooled covariance) / k.
const LAMBDA_LADDER: [f64; 5] = [0.0, 1e-8, 1e-6, 1e-4, 1e-2];

/// How the shrinkage intensity is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaPolicy {
    /// Use this exact value.
    Fixed(f64),
    /// Smallest ladder value that makes every covariance condition number
    /// acceptable.
    Auto,
}

/// Per-group prior, mean and regularized covariance in the reduced space.
#[derive(Debug, Clone)]
pub struct GmmModel {
    group_ids: Vec<String>,
    priors: Vec<f64>,
    means: Vec<Array1<f64>>,
    covariances: Vec<Array2<f64>>,
    lambda: f64,
    dim: usize,
    // Cached lower Cholesky factors of each covariance and their log-dets.
    chol: Vec<Array2<f64>>,
    log_dets: Vec<f64>,
}

/// Posterior probabilities over groups for one voter.
#[derive(Debug, Clone, PartialEq)]
pub struct DnaVector {
    pub voter_id: String,
    pub probs: Vec<f64>,
}

impl DnaVector {
    /// Group index with the largest posterior weight.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

impl GmmModel {
    pub fn group_ids(&self) -> &[String] {
        &self.group_ids
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn means(&self) -> &[Array1<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[Array2<f64>] {
        &self.covariances
    }

    /// Shrinkage intensity actually used.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_groups(&self) -> usize {
        self.group_ids.len()
    }

    /// Replace frequency priors with uniform ones (sensitivity analysis).
    pub fn with_uniform_priors(mut self) -> GmmModel {
        let g = self.priors.len();
        self.priors = vec![1.0 / g as f64; g];
        self
    }

    /// Construct a model directly from parameters. Covariances must be
    /// symmetric positive definite.
    pub fn from_parameters(
        group_ids: Vec<String>,
        priors: Vec<f64>,
        means: Vec<Array1<f64>>,
        covariances: Vec<Array2<f64>>,
        lambda: f64,
    ) -> Result<GmmModel> {
        let g = group_ids.len();
        if priors.len() != g || means.len() != g || covariances.len() != g {
            return Err(Error::DimensionMismatch {
                context: "group ids, priors, means and covariances must have equal length".into(),
            });
        }
        if g == 0 {
            return Err(Error::InvalidParameter {
                reason: "model needs at least one group".into(),
            });
        }
        let dim = means[0].len();
        let prior_sum: f64 = priors.iter().sum();
        if (prior_sum - 1.0).abs() > 1e-12 || priors.iter().any(|&a| a <= 0.0) {
            return Err(Error::InvalidParameter {
                reason: format!("priors must be positive and sum to 1, got sum {prior_sum}"),
            });
        }
        let mut chol = Vec::with_capacity(g);
        let mut log_dets = Vec::with_capacity(g);
        for (i, cov) in covariances.iter().enumerate() {
            if cov.nrows() != dim || cov.ncols() != dim || means[i].len() != dim {
                return Err(Error::DimensionMismatch {
                    context: format!("group {i} parameters disagree on dimension {dim}"),
                });
            }
            let l = cov
                .cholesky(UPLO::Lower)
                .map_err(|_| Error::SingularCovariance {
                    group: group_ids[i].clone(),
                })?;
            let log_det = 2.0 * (0..dim).map(|j| l[[j, j]].ln()).sum::<f64>();
            chol.push(l);
            log_dets.push(log_det);
        }
        Ok(GmmModel {
            group_ids,
            priors,
            means,
            covariances,
            lambda,
            dim,
            chol,
            log_dets,
        })
    }

    /// Serializable view: priors, means, covariances, shrinkage, dimension
    /// and group ids.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "k": self.dim,
            "lambda": self.lambda,
            "groups": self.group_ids,
            "priors": self.priors,
            "means": self.means.iter().map(|m| m.to_vec()).collect::<Vec<_>>(),
            "covariances": self
                .covariances
                .iter()
                .map(|c| c.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

fn condition_number(cov: &Array2<f64>) -> Result<f64> {
    let (eigs, _) = cov.eigh(UPLO::Lower)?;
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// Fit priors, means and shrunk covariances from labeled projected data.
///
/// Priors are group frequencies, means are group sample means, covariances
/// are unbiased group sample covariances plus `lambda` times the identity.
pub fn gmm_fit(
    data: &ProjectedData,
    labels: &GroupAssignment,
    lambda: LambdaPolicy,
) -> Result<GmmModel> {
    let m = data.n_rows();
    let k = data.k();
    if labels.len() != m {
        return Err(Error::DimensionMismatch {
            context: format!("{m} rows but {} labels", labels.len()),
        });
    }
    if k == 0 {
        return Err(Error::InvalidParameter {
            reason: "projection must keep k >= 1".into(),
        });
    }
    let group_ids = labels.group_ids().to_vec();
    let g = group_ids.len();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); g];
    for (row, &gi) in labels.indices().iter().enumerate() {
        members[gi].push(row);
    }
    for (gi, rows) in members.iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::GroupTooSmall {
                group: group_ids[gi].clone(),
                size: rows.len(),
            });
        }
    }

    let coords = data.coords();
    let mut priors = Vec::with_capacity(g);
    let mut means = Vec::with_capacity(g);
    let mut raw_covs = Vec::with_capacity(g);
    let mut pooled_trace = 0.0;
    for rows in &members {
        let count = rows.len() as f64;
        priors.push(count / m as f64);
        let mut mean = Array1::<f64>::zeros(k);
        for &r in rows {
            mean += &coords.row(r);
        }
        mean /= count;

        let mut cov = Array2::<f64>::zeros((k, k));
        for &r in rows {
            let dev = &coords.row(r) - &mean;
            for a in 0..k {
                for b in 0..k {
                    cov[[a, b]] += dev[a] * dev[b];
                }
            }
        }
        // Pooled covariance shares the (m - g) divisor across groups.
        pooled_trace += (0..k).map(|j| cov[[j, j]]).sum::<f64>();
        cov /= count - 1.0;
        means.push(mean);
        raw_covs.push(cov);
    }
    pooled_trace /= (m - g) as f64;

    let lambda_value = match lambda {
        LambdaPolicy::Fixed(v) => {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    reason: format!("lambda must be finite and non-negative, got {v}"),
                });
            }
            v
        }
        LambdaPolicy::Auto => {
            let scale = pooled_trace / k as f64;
            let mut chosen = None;
            'ladder: for mult in LAMBDA_LADDER {
                let cand = mult * scale;
                for cov in &raw_covs {
                    let shrunk = shrink(cov, cand);
                    if condition_number(&shrunk)? > MAX_CONDITION {
                        continue 'ladder;
                    }
                }
                chosen = Some(cand);
                break;
            }
            chosen.ok_or_else(|| Error::SingularCovariance {
                group: group_ids[worst_group(&raw_covs)].clone(),
            })?
        }
    };

    let covariances: Vec<Array2<f64>> = raw_covs.iter().map(|c| shrink(c, lambda_value)).collect();
    GmmModel::from_parameters(group_ids, priors, means, covariances, lambda_value)
}

fn shrink(cov: &Array2<f64>, lambda: f64) -> Array2<f64> {
    let mut out = cov.clone();
    for j in 0..out.nrows() {
        out[[j, j]] += lambda;
    }
    out
}

fn worst_group(covs: &[Array2<f64>]) -> usize {
    let mut worst = 0;
    let mut worst_cond = 0.0;
    for (i, c) in covs.iter().enumerate() {
        let cond = condition_number(c).unwrap_or(f64::INFINITY);
        if cond > worst_cond {
            worst_cond = cond;
            worst = i;
        }
    }
    worst
}

/// Solve L y = b for lower-triangular L and return ||y||^2, which equals
/// the Mahalanobis quadratic form b^T (L L^T)^{-1} b.
fn quad_form(l: &Array2<f64>, b: &Array1<f64>) -> f64 {
    let n = b.len();
    let mut y = b.clone();
    for i in 0..n {
        for j in 0..i {
            let yj = y[j];
            y[i] -= l[[i, j]] * yj;
        }
        y[i] /= l[[i, i]];
    }
    y.dot(&y)
}

/// Posterior group probabilities for a single reduced-space point.
pub fn dna_posterior(model: &GmmModel, x: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
    if x.len() != model.dim {
        return Err(Error::DimensionMismatch {
            context: format!("point has {} entries, model expects {}", x.len(), model.dim),
        });
    }
    let g = model.n_groups();
    let mut log_w = Vec::with_capacity(g);
    for i in 0..g {
        let dev = &x - &model.means[i];
        let quad = quad_form(&model.chol[i], &dev);
        log_w.push(model.priors[i].ln() - 0.5 * model.log_dets[i] - 0.5 * quad);
    }
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = log_w.iter().map(|&w| (w - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

/// Posterior probabilities for every row of the projected data, in row order.
pub fn dna_all(model: &GmmModel, data: &ProjectedData) -> Result<Vec<DnaVector>> {
    let coords = data.coords();
    data.row_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| {
            Ok(DnaVector {
                voter_id: id.clone(),
                probs: dna_posterior(model, coords.row(i))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    fn assignment(indices: Vec<usize>, ids: &[&str]) -> GroupAssignment {
        GroupAssignment::new(indices, ids.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn projected(rows: Vec<Vec<f64>>) -> ProjectedData {
        let m = rows.len();
        let k = rows[0].len();
        let coords = Array2::from_shape_fn((m, k), |(i, j)| rows[i][j]);
        let ids = (0..m).map(|i| format!("v{i}")).collect();
        ProjectedData::from_coords(coords, ids).unwrap()
    }

    #[test]
    fn hand_computed_two_group_fit() {
        let data = projected(vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![10.0, 10.0],
            vec![10.0, 12.0],
        ]);
        let labels = assignment(vec![0, 0, 1, 1], &["A", "B"]);
        let lambda = 0.5;
        let model = gmm_fit(&data, &labels, LambdaPolicy::Fixed(lambda)).unwrap();

        assert_eq!(model.priors(), &[0.5, 0.5]);
        assert_eq!(model.means()[0], array![1.0, 0.0]);
        assert_eq!(model.means()[1], array![10.0, 11.0]);
        let c0 = &model.covariances()[0];
        assert_abs_diff_eq!(c0[[0, 0]], 2.0 + lambda, epsilon = 1e-14);
        assert_abs_diff_eq!(c0[[0, 1]], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c0[[1, 1]], lambda, epsilon = 1e-14);
        let c1 = &model.covariances()[1];
        assert_abs_diff_eq!(c1[[0, 0]], lambda, epsilon = 1e-14);
        assert_abs_diff_eq!(c1[[1, 1]], 2.0 + lambda, epsilon = 1e-14);
    }

    #[test]
    fn duplicating_group_samples_keeps_the_mean() {
        let base = vec![
            vec![1.0, 2.0],
            vec![3.0, -1.0],
            vec![5.0, 5.0],
            vec![6.0, 4.0],
        ];
        let data = projected(base.clone());
        let labels = assignment(vec![0, 0, 1, 1], &["A", "B"]);
        let model = gmm_fit(&data, &labels, LambdaPolicy::Fixed(0.1)).unwrap();

        let mut doubled = base.clone();
        doubled.extend_from_slice(&[base[0].clone(), base[1].clone()]);
        let data2 = projected(doubled);
        let labels2 = assignment(vec![0, 0, 1, 1, 0, 0], &["A", "B"]);
        let model2 = gmm_fit(&data2, &labels2, LambdaPolicy::Fixed(0.1)).unwrap();

        assert_abs_diff_eq!(model.means()[0][0], model2.means()[0][0], epsilon = 1e-14);
        assert_abs_diff_eq!(model.means()[0][1], model2.means()[0][1], epsilon = 1e-14);
    }

    #[test]
    fn tiny_group_is_rejected() {
        let data = projected(vec![vec![0.0], vec![1.0], vec![2.0]]);
        let labels = assignment(vec![0, 0, 1], &["A", "B"]);
        let err = gmm_fit(&data, &labels, LambdaPolicy::Auto).unwrap_err();
        assert!(matches!(err, Error::GroupTooSmall { size: 1, .. }));
    }

    #[test]
    fn forced_zero_lambda_on_degenerate_group_is_singular() {
        // Group B has identical samples: rank-deficient covariance.
        let data = projected(vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![5.0, 5.0],
            vec![5.0, 5.0],
        ]);
        let labels = assignment(vec![0, 0, 1, 1], &["A", "B"]);
        let err = gmm_fit(&data, &labels, LambdaPolicy::Fixed(0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularCovariance { .. }));
    }

    #[test]
    fn auto_lambda_regularizes_degenerate_covariances() {
        let data = projected(vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![3.0, 1.0],
            // B votes as one: zero covariance without shrinkage.
            vec![10.0, 10.0],
            vec![10.0, 10.0],
        ]);
        let labels = assignment(vec![0, 0, 0, 1, 1], &["A", "B"]);
        let model = gmm_fit(&data, &labels, LambdaPolicy::Auto).unwrap();
        assert!(model.lambda() > 0.0);
        let probs = dna_posterior(model_ref(&model), array![10.0, 10.0].view()).unwrap();
        assert!(probs[1] > 0.99);
    }

    fn model_ref(m: &GmmModel) -> &GmmModel {
        m
    }

    #[test]
    fn equidistant_point_splits_evenly() {
        let model = GmmModel::from_parameters(
            vec!["A".into(), "B".into()],
            vec![0.5, 0.5],
            vec![array![-1.0, 0.0], array![1.0, 0.0]],
            vec![Array2::eye(2), Array2::eye(2)],
            0.0,
        )
        .unwrap();
        let probs = dna_posterior(&model, array![0.0, 5.0].view()).unwrap();
        assert_abs_diff_eq!(probs[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(probs[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn far_separated_mean_is_certain() {
        // ||mu1 - mu2|| = 20 with unit covariance.
        let model = GmmModel::from_parameters(
            vec!["A".into(), "B".into()],
            vec![0.5, 0.5],
            vec![array![0.0], array![20.0]],
            vec![Array2::eye(1), Array2::eye(1)],
            0.0,
        )
        .unwrap();
        let probs = dna_posterior(&model, array![0.0].view()).unwrap();
        assert!(probs[0] > 1.0 - 1e-10);
    }

    #[test]
    fn posterior_ratio_follows_weighted_densities() {
        // pi_i / pi_j must equal the ratio of weighted class densities, so
        // any common scaling of the weights cancels in the normalization.
        let model = GmmModel::from_parameters(
            vec!["A".into(), "B".into()],
            vec![0.3, 0.7],
            vec![array![0.0], array![2.0]],
            vec![Array2::eye(1), Array2::eye(1) * 3.0],
            0.0,
        )
        .unwrap();
        let x = 0.7f64;
        let probs = dna_posterior(&model, array![x].view()).unwrap();
        let f_a = (-0.5 * x * x).exp();
        let f_b = (-0.5 * (x - 2.0) * (x - 2.0) / 3.0).exp() / 3.0f64.sqrt();
        let expect = (0.3 * f_a) / (0.7 * f_b);
        assert_abs_diff_eq!(probs[0] / probs[1], expect, epsilon = 1e-12 * expect);
    }

    #[test]
    fn single_group_model_is_always_certain() {
        let data = projected(vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![1.0, 0.5]]);
        let labels = assignment(vec![0, 0, 0], &["A"]);
        let model = gmm_fit(&data, &labels, LambdaPolicy::Auto).unwrap();
        assert_eq!(model.priors(), &[1.0]);
        for row in dna_all(&model, &data).unwrap() {
            assert_eq!(row.probs, vec![1.0]);
        }
    }

    #[test]
    fn posteriors_form_a_simplex() {
        let model = GmmModel::from_parameters(
            vec!["A".into(), "B".into(), "C".into()],
            vec![0.2, 0.5, 0.3],
            vec![array![0.0, 0.0], array![3.0, 1.0], array![-2.0, 4.0]],
            vec![Array2::eye(2), Array2::eye(2) * 2.0, Array2::eye(2) * 0.5],
            0.0,
        )
        .unwrap();
        for x in [array![0.3, -1.0], array![100.0, 100.0], array![-5.0, 2.0]] {
            let probs = dna_posterior(&model, x.view()).unwrap();
            let sum: f64 = probs.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
            assert!(probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn label_permutation_permutes_posteriors() {
        let means = [array![0.0, 0.0], array![3.0, 1.0], array![-2.0, 4.0]];
        let covs = [Array2::eye(2), Array2::eye(2) * 2.0, Array2::eye(2) * 0.5];
        let priors = [0.2, 0.5, 0.3];
        let perm = [2usize, 0, 1];

        let m1 = GmmModel::from_parameters(
            vec!["A".into(), "B".into(), "C".into()],
            priors.to_vec(),
            means.to_vec(),
            covs.to_vec(),
            0.0,
        )
        .unwrap();
        let m2 = GmmModel::from_parameters(
            perm.iter()
                .map(|&i| ["A", "B", "C"][i].to_string())
                .collect(),
            perm.iter().map(|&i| priors[i]).collect(),
            perm.iter().map(|&i| means[i].clone()).collect(),
            perm.iter().map(|&i| covs[i].clone()).collect(),
            0.0,
        )
        .unwrap();

        let x = array![0.7, 0.3];
        let p1 = dna_posterior(&m1, x.view()).unwrap();
        let p2 = dna_posterior(&m2, x.view()).unwrap();
        for (slot, &src) in perm.iter().enumerate() {
            assert_abs_diff_eq!(p2[slot], p1[src], epsilon = 1e-14);
        }
    }

    #[test]
    fn log_domain_matches_direct_density_ratio() {
        // Direct evaluation with an explicit inverse, done by hand for 2x2.
        let cov_a = array![[2.0, 0.3], [0.3, 1.0]];
        let cov_b = array![[0.8, -0.2], [-0.2, 1.5]];
        let model = GmmModel::from_parameters(
            vec!["A".into(), "B".into()],
            vec![0.4, 0.6],
            vec![array![1.0, -1.0], array![-0.5, 2.0]],
            vec![cov_a.clone(), cov_b.clone()],
            0.0,
        )
        .unwrap();

        let inv2 = |c: &Array2<f64>| {
            let det = c[[0, 0]] * c[[1, 1]] - c[[0, 1]] * c[[1, 0]];
            (
                array![[c[[1, 1]], -c[[0, 1]]], [-c[[1, 0]], c[[0, 0]]]] / det,
                det,
            )
        };
        let x = array![0.3, 0.9];
        let mut weights = Vec::new();
        for (prior, (mean, cov)) in [0.4, 0.6]
            .iter()
            .zip([(array![1.0, -1.0], &cov_a), (array![-0.5, 2.0], &cov_b)])
        {
            let (inv, det) = inv2(cov);
            let dev = &x - &mean;
            let quad = dev.dot(&inv.dot(&dev));
            weights.push(prior * (-0.5 * quad).exp() / det.sqrt());
        }
        let total: f64 = weights.iter().sum();
        let direct: Vec<f64> = weights.iter().map(|w| w / total).collect();

        let probs = dna_posterior(&model, x.view()).unwrap();
        assert_abs_diff_eq!(probs[0], direct[0], epsilon = 1e-12);
        assert_abs_diff_eq!(probs[1], direct[1], epsilon = 1e-12);
    }

    #[test]
    fn dna_all_preserves_row_order_and_equivariance() {
        let model = GmmModel::from_parameters(
            vec!["A".into(), "B".into()],
            vec![0.5, 0.5],
            vec![array![0.0], array![4.0]],
            vec![Array2::eye(1), Array2::eye(1)],
            0.0,
        )
        .unwrap();
        let data = projected(vec![vec![0.1], vec![3.9], vec![2.0]]);
        let out = dna_all(&model, &data).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].voter_id, "v0");
        assert!(out[0].probs[0] > 0.9);
        assert!(out[1].probs[1] > 0.9);

        let swapped = ProjectedData::from_coords(
            array![[3.9], [0.1], [2.0]],
            vec!["v1".into(), "v0".into(), "v2".into()],
        )
        .unwrap();
        let out2 = dna_all(&model, &swapped).unwrap();
        assert_eq!(out2[0].probs, out[1].probs);
        assert_eq!(out2[1].probs, out[0].probs);
    }

    #[test]
    fn uniform_priors_override() {
        let model = GmmModel::from_parameters(
            vec!["A".into(), "B".into()],
            vec![0.9, 0.1],
            vec![array![0.0], array![1.0]],
            vec![Array2::eye(1), Array2::eye(1)],
            0.0,
        )
        .unwrap()
        .with_uniform_priors();
        assert_eq!(model.priors(), &[0.5, 0.5]);
    }

    #[test]
    fn model_json_has_documented_fields() {
        let model = GmmModel::from_parameters(
            vec!["A".into(), "B".into()],
            vec![0.5, 0.5],
            vec![array![0.0], array![1.0]],
            vec![Array2::eye(1), Array2::eye(1)],
            0.25,
        )
        .unwrap();
        let v = model.to_json();
        assert_eq!(v["k"], 1);
        assert_eq!(v["lambda"], 0.25);
        assert_eq!(v["groups"][0], "A");
        assert_eq!(v["priors"][1], 0.5);
        assert!(v["means"].is_array());
        assert!(v["covariances"][0][0][0].is_number());
    }
}
