//! Acceptance suite. Each test prints one PASS/FAIL line for its criterion
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use polidna::gmm::{dna_all, gmm_fit, GmmModel, LambdaPolicy};
use polidna::ingest::{clean_dataset, GroupAssignment};
use polidna::pca::{expressed_variance_matrix, pca_fit_matrix, project, ProjectedData};
use polidna::preprocess::{encode, standardize, standardize_columns};
use polidna::spca::{spca_fit, spca_oracle, spca_rank1};
use polidna::synth::{gen_blocs, gen_gmm, BlocConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

fn criterion(name: &str, body: impl FnOnce() -> Result<String, String>) {
    let start = Instant::now();
    match body() {
        Ok(detail) => {
            println!(
                "{name}: PASS ({:.2}s) {detail}",
                start.elapsed().as_secs_f64()
            );
        }
        Err(msg) => {
            println!("{name}: FAIL {msg}");
            panic!("{name} failed: {msg}");
        }
    }
}

fn budget(elapsed: Duration, cap: Duration, what: &str) -> Result<(), String> {
    if elapsed > cap {
        return Err(format!("{what} took {elapsed:.2?}, budget {cap:.2?}"));
    }
    Ok(())
}

fn ternary_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Array2<f64> {
    let die = Uniform::new(0u8, 3).unwrap();
    let mut a = Array2::<f64>::zeros((m, n));
    for j in 0..n {
        for i in 0..m {
            a[[i, j]] = f64::from(i32::from(die.sample(rng)) - 1);
        }
        if (0..m).all(|i| a[[i, j]] == a[[0, j]]) {
            a[[0, j]] = if a[[0, j]] > 0.0 { -1.0 } else { 1.0 };
        }
    }
    a
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_fn((m, n), |_| StandardNormal.sample(rng))
}

#[test]
fn c1_standardization() {
    criterion("C1 standardization", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
        let start = Instant::now();
        for case in 0..100 {
            let m = 2 + (case % 49);
            let n = 1 + (case * 7 % 50);
            let a = ternary_matrix(&mut rng, m, n);
            let (x, _, _) =
                standardize_columns(a.view()).map_err(|e| format!("case {case}: {e}"))?;
            for j in 0..n {
                let col = x.column(j);
                let sum: f64 = col.sum();
                let norm = col.dot(&col).sqrt();
                if sum.abs() > 1e-9 * m as f64 {
                    return Err(format!("case {case} column {j}: sum {sum}"));
                }
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(format!("case {case} column {j}: norm {norm}"));
                }
            }
            let frob2: f64 = x.iter().map(|v| v * v).sum();
            if (frob2 - n as f64).abs() > 1e-8 {
                return Err(format!("case {case}: |X|_F^2 = {frob2}, n = {n}"));
            }
        }
        budget(
            start.elapsed(),
            Duration::from_secs(1),
            "100 standardizations",
        )?;
        Ok("100 matrices".into())
    });
}

#[test]
fn c2_pca_correctness() {
    criterion("C2 PCA correctness", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
        for case in 0..100u32 {
            let m = 2 + (case as usize % 11);
            let n = 2 + (case as usize * 3 % 9);
            let a = gaussian_matrix(&mut rng, m, n);
            let kmax = m.min(n);
            let k = 1 + (case as usize % kmax);
            let basis = pca_fit_matrix(a.view(), k).map_err(|e| format!("case {case}: {e}"))?;
            let v = basis.directions().to_owned();
            let proj = a.dot(&v);
            let residual = &a - &proj.dot(&v.t());
            let fa: f64 = a.iter().map(|x| x * x).sum();
            let fp: f64 = proj.iter().map(|x| x * x).sum();
            let fr: f64 = residual.iter().map(|x| x * x).sum();
            if (fa - fp - fr).abs() > 1e-8 * fa {
                return Err(format!(
                    "case {case}: residual identity off by {}",
                    fa - fp - fr
                ));
            }

            // Rank-1 recovery.
            let sigma = 0.1 + 9.9 * (f64::from(case) / 100.0);
            let mut u = Array1::<f64>::from_shape_fn(m, |_| StandardNormal.sample(&mut rng));
            let mut w = Array1::<f64>::from_shape_fn(n, |_| StandardNormal.sample(&mut rng));
            u /= u.dot(&u).sqrt();
            w /= w.dot(&w).sqrt();
            let mut rank1 = Array2::<f64>::zeros((m, n));
            for i in 0..m {
                for j in 0..n {
                    rank1[[i, j]] = sigma * u[i] * w[j];
                }
            }
            let b1 = pca_fit_matrix(rank1.view(), 1).map_err(|e| format!("case {case}: {e}"))?;
            if (b1.singular_values()[0] - sigma).abs() > 1e-10 * sigma.max(1.0) {
                return Err(format!(
                    "case {case}: sigma {} vs {}",
                    b1.singular_values()[0],
                    sigma
                ));
            }
            let got = b1.directions().column(0).to_owned();
            let align = got.dot(&w).abs();
            if (align - 1.0).abs() > 1e-10 {
                return Err(format!("case {case}: direction alignment {align}"));
            }
        }
        Ok("100 matrices".into())
    });
}

#[test]
fn c3_spca_oracle_equivalence() {
    criterion("C3 sparse PCA oracle equivalence", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
        let start = Instant::now();
        let total = 200;
        let mut support_matches = 0;
        let mut min_ratio = f64::INFINITY;
        for case in 0..total {
            let m = 4 + (case % 9);
            let n = 2 + (case * 5 % 9);
            let p = (1 + case % 3).min(n);
            let x = gaussian_matrix(&mut rng, m, n);
            let c = spca_rank1(x.view(), p).map_err(|e| format!("case {case}: {e}"))?;
            let (v, sigma) = spca_oracle(x.view(), p).map_err(|e| format!("case {case}: {e}"))?;
            let ratio = c.sigma / sigma;
            min_ratio = min_ratio.min(ratio);
            if ratio < 0.99 {
                return Err(format!(
                    "case {case} (m={m} n={n} p={p}): sigma {} < 0.99 x oracle {}",
                    c.sigma, sigma
                ));
            }
            let oracle_support: Vec<usize> = v
                .iter()
                .enumerate()
                .filter(|(_, x)| x.abs() > 1e-9)
                .map(|(i, _)| i)
                .collect();
            if c.support() == oracle_support {
                support_matches += 1;
            }
        }
        if support_matches * 10 < total * 9 {
            return Err(format!(
                "{support_matches}/{total} supports match, need >= 90%"
            ));
        }
        budget(
            start.elapsed(),
            Duration::from_secs(30),
            "200 oracle comparisons",
        )?;
        Ok(format!(
            "{total} instances, min ratio {min_ratio:.4}, {support_matches} support matches"
        ))
    });
}

#[test]
fn c4_evar_monotonicity() {
    criterion("C4 E-Var monotonicity", || {
        for seed in 1..=20u64 {
            let synth = gen_blocs(&BlocConfig {
                group_sizes: vec![12, 10, 8],
                n_bills: 40,
                cohesion: 0.9,
                planted_outliers: 0,
                seed,
            })
            .map_err(|e| format!("seed {seed}: {e}"))?;
            let (clean, _) =
                clean_dataset(&synth.dataset).map_err(|e| format!("seed {seed}: {e}"))?;
            let x = standardize(&encode(&clean)).map_err(|e| format!("seed {seed}: {e}"))?;
            let n = x.n_cols();

            // Non-decreasing in k at fixed p.
            let mut last = 0.0;
            for k in 1..=4 {
                let basis =
                    spca_fit(x.view(), k, 10).map_err(|e| format!("seed {seed} k={k}: {e}"))?;
                let ev = expressed_variance_matrix(x.view(), &basis)
                    .map_err(|e| format!("seed {seed} k={k}: {e}"))?;
                if ev < last - 1e-10 {
                    return Err(format!("seed {seed}: E-Var fell {last} -> {ev} at k={k}"));
                }
                last = ev;
            }

            // Non-decreasing in p at fixed k.
            let mut last = 0.0;
            for p in [2usize, 5, 10, 20, n] {
                let basis =
                    spca_fit(x.view(), 2, p).map_err(|e| format!("seed {seed} p={p}: {e}"))?;
                let ev = expressed_variance_matrix(x.view(), &basis)
                    .map_err(|e| format!("seed {seed} p={p}: {e}"))?;
                if ev < last - 1e-10 {
                    return Err(format!("seed {seed}: E-Var fell {last} -> {ev} at p={p}"));
                }
                last = ev;
            }
        }
        Ok("20 datasets, k in 1..4, p in {2,5,10,20,n}".into())
    });
}

/// Independent evaluation of the posterior: explicit inverse by
/// Gauss-Jordan, determinant by LU, densities combined in the linear
/// domain exactly as the ratio of weighted class densities.
mod direct {
    use ndarray::{Array1, Array2};

    pub fn invert(a: &Array2<f64>) -> Array2<f64> {
        let n = a.nrows();
        let mut aug = Array2::<f64>::zeros((n, 2 * n));
        for i in 0..n {
            for j in 0..n {
                aug[[i, j]] = a[[i, j]];
            }
            aug[[i, n + i]] = 1.0;
        }
        for col in 0..n {
            let mut pivot = col;
            for r in (col + 1)..n {
                if aug[[r, col]].abs() > aug[[pivot, col]].abs() {
                    pivot = r;
                }
            }
            if pivot != col {
                for j in 0..2 * n {
                    let tmp = aug[[col, j]];
                    aug[[col, j]] = aug[[pivot, j]];
                    aug[[pivot, j]] = tmp;
                }
            }
            let d = aug[[col, col]];
            for j in 0..2 * n {
                aug[[col, j]] /= d;
            }
            for r in 0..n {
                if r != col {
                    let f = aug[[r, col]];
                    for j in 0..2 * n {
                        aug[[r, j]] -= f * aug[[col, j]];
                    }
                }
            }
        }
        Array2::from_shape_fn((n, n), |(i, j)| aug[[i, n + j]])
    }

    pub fn determinant(a: &Array2<f64>) -> f64 {
        let n = a.nrows();
        let mut lu = a.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut pivot = col;
            for r in (col + 1)..n {
                if lu[[r, col]].abs() > lu[[pivot, col]].abs() {
                    pivot = r;
                }
            }
            if pivot != col {
                det = -det;
                for j in 0..n {
                    let tmp = lu[[col, j]];
                    lu[[col, j]] = lu[[pivot, j]];
                    lu[[pivot, j]] = tmp;
                }
            }
            det *= lu[[col, col]];
            if lu[[col, col]] == 0.0 {
                return 0.0;
            }
            for r in (col + 1)..n {
                let f = lu[[r, col]] / lu[[col, col]];
                for j in col..n {
                    lu[[r, j]] -= f * lu[[col, j]];
                }
            }
        }
        det
    }

    pub fn posterior(
        priors: &[f64],
        means: &[Array1<f64>],
        covs: &[Array2<f64>],
        x: &Array1<f64>,
    ) -> Vec<f64> {
        let weights: Vec<f64> = priors
            .iter()
            .zip(means.iter().zip(covs))
            .map(|(&alpha, (mu, cov))| {
                let inv = invert(cov);
                let det = determinant(cov);
                let dev = x - mu;
                let quad = dev.dot(&inv.dot(&dev));
                alpha * (-0.5 * quad).exp() / det.sqrt()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }
}

fn random_spd(rng: &mut ChaCha8Rng, k: usize) -> Array2<f64> {
    // Random rotation from the SVD of a Gaussian matrix, spectrum in
    // [0.1, 10]: condition number at most 100, well under 1e4.
    let g = gaussian_matrix(rng, k, k);
    let basis = pca_fit_matrix(g.view(), k).expect("random matrix has full rank");
    let q = basis.directions();
    let log_lo = 0.1f64.ln();
    let log_hi = 10f64.ln();
    let u = Uniform::new(log_lo, log_hi).unwrap();
    let eigs: Vec<f64> = (0..k).map(|_| u.sample(rng).exp()).collect();
    let mut cov = Array2::<f64>::zeros((k, k));
    for a in 0..k {
        for b in 0..k {
            let mut s = 0.0;
            for (e, &lambda) in eigs.iter().enumerate() {
                s += q[[a, e]] * lambda * q[[b, e]];
            }
            cov[[a, b]] = s;
        }
    }
    // Exact symmetry for the Cholesky path.
    for a in 0..k {
        for b in 0..a {
            let avg = 0.5 * (cov[[a, b]] + cov[[b, a]]);
            cov[[a, b]] = avg;
            cov[[b, a]] = avg;
        }
    }
    cov
}

#[test]
fn c5_posterior_fidelity() {
    criterion("C5 posterior fidelity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
        for case in 0..1000 {
            let k = 1 + case % 5;
            let g = 2 + case % 5;
            let priors_raw: Vec<f64> = (0..g)
                .map(|_| Uniform::new(0.2f64, 1.0).unwrap().sample(&mut rng))
                .collect();
            let total: f64 = priors_raw.iter().sum();
            let priors: Vec<f64> = priors_raw.iter().map(|p| p / total).collect();
            let means: Vec<Array1<f64>> = (0..g)
                .map(|_| {
                    Array1::from_shape_fn(k, |_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        3.0 * z
                    })
                })
                .collect();
            let covs: Vec<Array2<f64>> = (0..g).map(|_| random_spd(&mut rng, k)).collect();

            let model = GmmModel::from_parameters(
                (0..g).map(|i| format!("g{i}")).collect(),
                priors.clone(),
                means.clone(),
                covs.clone(),
                0.0,
            )
            .map_err(|e| format!("case {case}: {e}"))?;

            // Query point drawn near one of the classes.
            let home = case % g;
            let x = Array1::from_shape_fn(k, |j| {
                let z: f64 = StandardNormal.sample(&mut rng);
                means[home][j] + z
            });

            let got = polidna::gmm::dna_posterior(&model, x.view())
                .map_err(|e| format!("case {case}: {e}"))?;
            let want = direct::posterior(&priors, &means, &covs, &x);

            let sum: f64 = got.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(format!("case {case}: probabilities sum to {sum}"));
            }
            for (i, (&a, &b)) in got.iter().zip(&want).enumerate() {
                let denom = a.abs().max(b.abs()).max(1e-12);
                if (a - b).abs() / denom > 1e-9 {
                    return Err(format!(
                        "case {case} entry {i}: log-domain {a} vs direct {b}"
                    ));
                }
            }
        }
        Ok("1000 models".into())
    });
}

fn classify_accuracy(
    points: Array2<f64>,
    labels: Vec<usize>,
    groups: usize,
) -> Result<f64, String> {
    let ids: Vec<String> = (0..points.nrows()).map(|i| format!("s{i}")).collect();
    let data = ProjectedData::from_coords(points, ids).map_err(|e| e.to_string())?;
    let assignment = GroupAssignment::new(
        labels.clone(),
        (0..groups).map(|g| format!("g{g}")).collect(),
    )
    .map_err(|e| e.to_string())?;
    let model = gmm_fit(&data, &assignment, LambdaPolicy::Auto).map_err(|e| e.to_string())?;
    let dna = dna_all(&model, &data).map_err(|e| e.to_string())?;
    let hits = dna
        .iter()
        .zip(&labels)
        .filter(|(row, &label)| row.argmax() == label)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

#[test]
fn c6_classification_sanity() {
    criterion("C6 classification sanity", || {
        let (points, labels) =
            gen_gmm(4, 4, 6.0, &[500, 500, 500, 500], 0xC6).map_err(|e| e.to_string())?;
        let acc = classify_accuracy(points, labels, 4)?;
        if acc < 0.99 {
            return Err(format!("separation 6: accuracy {acc:.4} < 0.99"));
        }

        let (points0, labels0) =
            gen_gmm(4, 4, 0.0, &[500, 500, 500, 500], 0xC6 + 1).map_err(|e| e.to_string())?;
        let acc0 = classify_accuracy(points0, labels0, 4)?;
        if (acc0 - 0.25).abs() > 0.05 {
            return Err(format!(
                "separation 0: accuracy {acc0:.4} not within 5 points of 0.25"
            ));
        }
        Ok(format!("sep 6 accuracy {acc:.4}, sep 0 accuracy {acc0:.4}"))
    });
}

#[test]
fn c7_planted_outlier_recovery() {
    criterion("C7 planted-outlier recovery", || {
        let mut seeds_with_both = 0;
        for seed in 1..=10u64 {
            let start = Instant::now();
            let synth = gen_blocs(&BlocConfig {
                group_sizes: vec![20, 20, 20, 20],
                n_bills: 60,
                cohesion: 0.95,
                planted_outliers: 2,
                seed,
            })
            .map_err(|e| format!("seed {seed}: {e}"))?;
            let (clean, _) =
                clean_dataset(&synth.dataset).map_err(|e| format!("seed {seed}: {e}"))?;

            let analysis = polidna::outliers::outlier_pipeline(&clean, 4, 20)
                .map_err(|e| format!("seed {seed}: {e}"))?;
            let flagged: Vec<String> = analysis
                .profiles
                .iter()
                .flat_map(|p| p.outliers.iter().map(|o| o.voter_id.clone()))
                .collect();
            let plants: Vec<&str> = synth.planted.iter().map(|p| p.voter_id.as_str()).collect();
            let hits = plants
                .iter()
                .filter(|p| flagged.iter().any(|f| f == *p))
                .count();
            let false_positives = flagged
                .iter()
                .filter(|f| !plants.contains(&f.as_str()))
                .count();
            if false_positives > 1 {
                return Err(format!("seed {seed}: {false_positives} false positives"));
            }
            if hits == plants.len() {
                seeds_with_both += 1;
            }

            // Affinity check for every flagged plant: more weight on the
            // bloc they vote with than on their nominal group.
            let x = standardize(&encode(&clean)).map_err(|e| format!("seed {seed}: {e}"))?;
            let basis = pca_fit_matrix(x.view(), 4).map_err(|e| format!("seed {seed}: {e}"))?;
            let projected = project(&x, &basis).map_err(|e| format!("seed {seed}: {e}"))?;
            let model = gmm_fit(&projected, &clean.group_assignment(), LambdaPolicy::Auto)
                .map_err(|e| format!("seed {seed}: {e}"))?;
            let dna = dna_all(&model, &projected).map_err(|e| format!("seed {seed}: {e}"))?;
            let group_pos = |g: &str| {
                clean
                    .groups()
                    .iter()
                    .position(|x| x == g)
                    .expect("group exists")
            };
            for plant in &synth.planted {
                if !flagged.contains(&plant.voter_id) {
                    continue;
                }
                let row = dna
                    .iter()
                    .find(|d| d.voter_id == plant.voter_id)
                    .ok_or_else(|| format!("seed {seed}: plant missing from affinity rows"))?;
                let w_target = row.probs[group_pos(&plant.votes_with)];
                let w_nominal = row.probs[group_pos(&plant.nominal_group)];
                if w_target <= w_nominal {
                    return Err(format!(
                        "seed {seed}: plant {} has weight {w_target:.4} on {} vs {w_nominal:.4} on {}",
                        plant.voter_id, plant.votes_with, plant.nominal_group
                    ));
                }
            }
            budget(start.elapsed(), Duration::from_secs(10), "one seed")?;
        }
        if seeds_with_both < 9 {
            return Err(format!(
                "both plants flagged in only {seeds_with_both}/10 seeds"
            ));
        }
        Ok(format!("both plants flagged in {seeds_with_both}/10 seeds"))
    });
}

#[test]
fn c8_cli_determinism() {
    criterion("C8 CLI determinism", || {
        let bin = env!("CARGO_BIN_EXE_dna");
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let data = tmp.path().join("data");
        let run = |args: &[&str]| -> Result<(), String> {
            let out = std::process::Command::new(bin)
                .args(args)
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!(
                    "dna {args:?} failed: {}",
                    String::from_utf8_lossy(&out.stderr)
                ));
            }
            Ok(())
        };
        run(&[
            "synth",
            "--groups",
            "3",
            "--sizes",
            "10,10,10",
            "--bills",
            "40",
            "--cohesion",
            "0.9",
            "--outliers",
            "1",
            "--seed",
            "11",
            "--out",
            data.to_str().unwrap(),
        ])?;
        let votes = data.join("votes.csv");
        let voters = data.join("voters.csv");
        let bills = data.join("bills.csv");
        for out in ["r1", "r2"] {
            run(&[
                "fit",
                "--votes",
                votes.to_str().unwrap(),
                "--voters",
                voters.to_str().unwrap(),
                "--bills",
                bills.to_str().unwrap(),
                "--reduce",
                "spca",
                "--k",
                "2",
                "--p",
                "10",
                "--dump-standardized",
                "--out",
                tmp.path().join(out).to_str().unwrap(),
            ])?;
        }
        let names = [
            "manifest.json",
            "model.json",
            "dna.csv",
            "components.csv",
            "map.svg",
            "map.csv",
            "standardized.csv",
        ];
        for name in names {
            let a = std::fs::read(tmp.path().join("r1").join(name)).map_err(|e| e.to_string())?;
            let b = std::fs::read(tmp.path().join("r2").join(name)).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{name} differs between identical runs"));
            }
        }
        Ok(format!("{} artifacts byte-identical", names.len()))
    });
}

/// Conditional: reproduce the reference-dataset numbers when the user
/// supplies the Senate roll-call files (votes.csv, voters.csv, bills.csv)
/// via the POLIDNA_SENATE_DIR environment variable.
#[test]
fn c9_reference_dataset_conditional() {
    criterion("C9 reference dataset (conditional)", || {
        let dir = match std::env::var_os("POLIDNA_SENATE_DIR") {
            Some(d) => std::path::PathBuf::from(d),
            None => return Ok("SKIPPED (POLIDNA_SENATE_DIR not set)".into()),
        };
        let raw = polidna::ingest::load_csv(
            &dir.join("votes.csv"),
            &dir.join("voters.csv"),
            &dir.join("bills.csv"),
        )
        .map_err(|e| e.to_string())?;
        let (clean, _) = clean_dataset(&raw).map_err(|e| e.to_string())?;
        if clean.n_voters() != 335 || clean.n_bills() != 155 {
            return Err(format!(
                "cleaned dimensions {}x{}, expected 335x155",
                clean.n_voters(),
                clean.n_bills()
            ));
        }
        let x = standardize(&encode(&clean)).map_err(|e| e.to_string())?;
        for (k, expect) in [(2usize, 0.6338), (10, 0.7879)] {
            let basis = pca_fit_matrix(x.view(), k).map_err(|e| e.to_string())?;
            let ev = expressed_variance_matrix(x.view(), &basis).map_err(|e| e.to_string())?;
            if (ev - expect).abs() > 0.005 {
                return Err(format!(
                    "k={k}: E-Var {:.2}% vs {:.2}%",
                    100.0 * ev,
                    100.0 * expect
                ));
            }
        }
        // The three largest groups should dominate the first three sparse
        // components of the transposed pipeline.
        let analysis =
            polidna::outliers::outlier_pipeline(&clean, 10, 50).map_err(|e| e.to_string())?;
        let mut sizes: Vec<(usize, String)> = clean
            .groups()
            .iter()
            .map(|g| {
                (
                    clean.voters().iter().filter(|v| v.group == *g).count(),
                    g.clone(),
                )
            })
            .collect();
        sizes.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let top3: Vec<&str> = sizes.iter().take(3).map(|(_, g)| g.as_str()).collect();
        for (i, profile) in analysis.profiles.iter().take(3).enumerate() {
            if profile.dominant_group != top3[i] {
                return Err(format!(
                    "component {} dominated by {}, expected {}",
                    i + 1,
                    profile.dominant_group,
                    top3[i]
                ));
            }
        }
        Ok("dimensions, E-Var and component-party association reproduced".into())
    });
}
