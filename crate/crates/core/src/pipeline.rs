//! End-to-end orchestration: ingest, clean, encode, standardize, reduce,
//! fit the group model, compute affinities, lay out the map, and write the
//! run artifacts together with a manifest that pins every decision.
//!
//! Artifact writes are atomic at the run level: everything goes to
//! temporary files first and is renamed into place only after every
//! artifact has been produced.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::{dna_all, gmm_fit, DnaVector, GmmModel, LambdaPolicy};
use crate::ingest::{clean_dataset, load_csv, load_json, CleaningReport, VoteDataset};
use crate::map::{layout_groups, map_point, render_map_csv, render_map_svg, PoliticalMapPoint};
use crate::pca::{expressed_variance, pca_fit, project, BasisKind, ComponentBasis, ProjectedData};
use crate::preprocess::{encode, standardize, write_standardized_csv, StandardizedMatrix};
use crate::spca::spca_fit_restarts;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where the dataset comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSource {
    Csv {
        votes: PathBuf,
        voters: PathBuf,
        bills: PathBuf,
    },
    Json {
        path: PathBuf,
    },
}

impl InputSource {
    pub fn load(&self) -> Result<VoteDataset> {
        match self {
            InputSource::Csv {
                votes,
                voters,
                bills,
            } => load_csv(votes, voters, bills),
            InputSource::Json { path } => load_json(path),
        }
    }
}

/// Dimensionality-reduction choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionMethod {
    Pca { k: usize },
    Spca { k: usize, p: usize, restarts: usize },
}

impl ReductionMethod {
    pub fn k(&self) -> usize {
        match *self {
            ReductionMethod::Pca { k } => k,
            ReductionMethod::Spca { k, .. } => k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReductionMethod::Pca { .. } => "pca",
            ReductionMethod::Spca { .. } => "spca",
        }
    }

    pub fn fit(&self, x: &StandardizedMatrix) -> Result<ComponentBasis> {
        match *self {
            ReductionMethod::Pca { k } => pca_fit(x, k),
            ReductionMethod::Spca { k, p, restarts } => spca_fit_restarts(x.view(), k, p, restarts),
        }
    }
}

/// Everything a run needs, resolved.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: InputSource,
    pub method: ReductionMethod,
    pub lambda: LambdaPolicy,
    pub uniform_priors: bool,
    /// Fold groups with fewer than two members into this group before the fit.
    pub merge_small_into: Option<String>,
    /// Vertex order for the map; defaults to the dataset group order.
    pub map_order: Option<Vec<String>>,
    pub out_dir: PathBuf,
    pub dump_standardized: bool,
}

/// Everything the pipeline computed, before or after writing artifacts.
#[derive(Debug)]
pub struct PipelineRun {
    pub dataset: VoteDataset,
    pub cleaning: CleaningReport,
    pub standardized: StandardizedMatrix,
    pub basis: ComponentBasis,
    pub projected: ProjectedData,
    pub model: GmmModel,
    pub dna: Vec<DnaVector>,
    pub points: Vec<PoliticalMapPoint>,
    pub expressed_variance: f64,
    pub manifest: RunManifest,
}

/// Reproducibility record written next to the artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub method: String,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    pub lambda_policy: String,
    pub lambda: f64,
    pub uniform_priors: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merge_small_into: Option<String>,
    pub expressed_variance: f64,
    pub voters: usize,
    pub bills: usize,
    pub groups: Vec<String>,
    pub map_order: Vec<String>,
    pub cleaning: CleaningReport,
}

/// Run every stage without touching the filesystem output.
pub fn run_stages(cfg: &PipelineConfig) -> Result<PipelineRun> {
    let raw = cfg.input.load()?;
    let (mut dataset, cleaning) = clean_dataset(&raw)?;
    if let Some(target) = &cfg.merge_small_into {
        dataset = dataset.merge_small_groups(2, target)?;
    }

    let encoded = encode(&dataset);
    let standardized = standardize(&encoded)?;
    let basis = cfg.method.fit(&standardized)?;
    let evar = expressed_variance(&standardized, &basis)?;
    let projected = project(&standardized, &basis)?;

    let labels = dataset.group_assignment();
    let mut model = gmm_fit(&projected, &labels, cfg.lambda)?;
    if cfg.uniform_priors {
        model = model.with_uniform_priors();
    }
    let dna = dna_all(&model, &projected)?;

    let layout = layout_groups(dataset.groups(), cfg.map_order.as_deref())?;
    let groups = dataset.groups().to_vec();
    let points = dna
        .iter()
        .zip(dataset.voters())
        .map(|(row, voter)| map_point(&layout, &groups, row, &voter.group))
        .collect::<Result<Vec<_>>>()?;

    let (p, restarts) = match cfg.method {
        ReductionMethod::Pca { .. } => (None, None),
        ReductionMethod::Spca { p, restarts, .. } => (Some(p), Some(restarts)),
    };
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        method: cfg.method.name().to_string(),
        k: cfg.method.k(),
        p,
        restarts,
        lambda_policy: match cfg.lambda {
            LambdaPolicy::Auto => "auto".to_string(),
            LambdaPolicy::Fixed(v) => format!("fixed({v})"),
        },
        lambda: model.lambda(),
        uniform_priors: cfg.uniform_priors,
        merge_small_into: cfg.merge_small_into.clone(),
        expressed_variance: evar,
        voters: dataset.n_voters(),
        bills: dataset.n_bills(),
        groups: groups.clone(),
        map_order: layout.groups().to_vec(),
        cleaning,
    };

    Ok(PipelineRun {
        dataset,
        cleaning,
        standardized,
        basis,
        projected,
        model,
        dna,
        points,
        expressed_variance: evar,
        manifest,
    })
}

/// Affinity CSV: one row per voter, one column per group (6 decimals),
/// plus the nominal group.
pub fn render_dna_csv(groups: &[String], dna: &[DnaVector], dataset: &VoteDataset) -> String {
    let nominal: BTreeMap<&str, &str> = dataset
        .voters()
        .iter()
        .map(|v| (v.id.as_str(), v.group.as_str()))
        .collect();
    let mut out = String::from("voter_id");
    for g in groups {
        let _ = write!(out, ",{g}");
    }
    out.push_str(",nominal_group\n");
    for row in dna {
        let _ = write!(out, "{}", row.voter_id);
        for p in &row.probs {
            let _ = write!(out, ",{p:.6}");
        }
        let _ = writeln!(
            out,
            ",{}",
            nominal.get(row.voter_id.as_str()).copied().unwrap_or("")
        );
    }
    out
}

/// Component CSV. Dense bases dump the full loading matrix with bill ids as
/// row labels; sparse bases list each component's support as
/// (component, bill_id, loading) sorted by |loading| descending.
pub fn render_components_csv(basis: &ComponentBasis, col_ids: &[String]) -> String {
    let mut out = String::new();
    match basis.kind() {
        BasisKind::Dense => {
            out.push_str("bill_id");
            for c in 0..basis.k() {
                let _ = write!(out, ",pc{}", c + 1);
            }
            out.push('\n');
            for (j, id) in col_ids.iter().enumerate() {
                let _ = write!(out, "{id}");
                for c in 0..basis.k() {
                    let _ = write!(out, ",{:.11e}", basis.directions()[[j, c]]);
                }
                out.push('\n');
            }
        }
        BasisKind::Sparse { .. } => {
            out.push_str("component,bill_id,loading\n");
            let directions = basis.directions();
            for c in 0..basis.k() {
                let col = directions.column(c);
                let mut support = crate::spca::support_indices(col);
                support.sort_by(|&a, &b| {
                    col[b]
                        .abs()
                        .partial_cmp(&col[a].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                for j in support {
                    let _ = writeln!(out, "{},{},{:.11e}", c + 1, col_ids[j], col[j]);
                }
            }
        }
    }
    out
}

/// Standard artifact set for a full run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Artifact {
    Manifest,
    Model,
    Dna,
    Components,
    MapSvg,
    MapCsv,
    Standardized,
}

impl Artifact {
    pub fn filename(self) -> &'static str {
        match self {
            Artifact::Manifest => "manifest.json",
            Artifact::Model => "model.json",
            Artifact::Dna => "dna.csv",
            Artifact::Components => "components.csv",
            Artifact::MapSvg => "map.svg",
            Artifact::MapCsv => "map.csv",
            Artifact::Standardized => "standardized.csv",
        }
    }
}

/// Stage-and-rename writer: nothing lands under its final name unless the
/// whole set succeeds.
pub struct ArtifactWriter {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<ArtifactWriter> {
        std::fs::create_dir_all(dir)?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
        })
    }

    pub fn stage(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let final_path = self.dir.join(name);
        let tmp_path = self.dir.join(format!(".{name}.tmp"));
        std::fs::write(&tmp_path, contents)?;
        self.staged.push((tmp_path, final_path));
        Ok(())
    }

    /// Rename every staged file into place and return the final paths.
    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut finals = Vec::with_capacity(self.staged.len());
        for (tmp, fin) in self.staged.drain(..) {
            std::fs::rename(&tmp, &fin)?;
            finals.push(fin);
        }
        Ok(finals)
    }
}

impl Drop for ArtifactWriter {
    fn drop(&mut self) {
        for (tmp, _) in &self.staged {
            let _ = std::fs::remove_file(tmp);
        }
    }
}

fn caption(manifest: &RunManifest) -> String {
    let mut s = format!("{}, k = {}", manifest.method.to_uppercase(), manifest.k);
    if let Some(p) = manifest.p {
        let _ = write!(s, ", p = {p}");
    }
    let _ = write!(s, ", E-Var = {:.2}%", 100.0 * manifest.expressed_variance);
    s
}

/// Run the pipeline and write the full artifact set into `cfg.out_dir`.
/// Returns the run and the paths written.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<(PipelineRun, Vec<PathBuf>)> {
    let run = run_stages(cfg)?;
    let groups = run.dataset.groups().to_vec();

    let mut writer = ArtifactWriter::new(&cfg.out_dir)?;
    let manifest_json = serde_json::to_string_pretty(&run.manifest)? + "\n";
    writer.stage(Artifact::Manifest.filename(), manifest_json.as_bytes())?;

    let model_json = serde_json::to_string_pretty(&run.model.to_json())? + "\n";
    writer.stage(Artifact::Model.filename(), model_json.as_bytes())?;

    let dna_csv = render_dna_csv(&groups, &run.dna, &run.dataset);
    writer.stage(Artifact::Dna.filename(), dna_csv.as_bytes())?;

    let comp_csv = render_components_csv(&run.basis, run.standardized.col_ids());
    writer.stage(Artifact::Components.filename(), comp_csv.as_bytes())?;

    let layout = layout_groups(run.dataset.groups(), cfg.map_order.as_deref())?;
    let svg = render_map_svg(&run.points, &layout, &caption(&run.manifest))?;
    writer.stage(Artifact::MapSvg.filename(), svg.as_bytes())?;

    let map_csv = render_map_csv(&run.points, Some((&groups, &run.dna)))?;
    writer.stage(Artifact::MapCsv.filename(), map_csv.as_bytes())?;

    if cfg.dump_standardized {
        let mut buf = Vec::new();
        write_standardized_csv(&run.standardized, &mut buf)?;
        writer.stage(Artifact::Standardized.filename(), &buf)?;
    }

    let paths = writer.commit()?;
    Ok((run, paths))
}

// ---------------------------------------------------------------------------
// Config file (TOML)

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub input: ConfigInput,
    #[serde(default)]
    pub reduce: ConfigReduce,
    #[serde(default)]
    pub gmm: ConfigGmm,
    #[serde(default)]
    pub map: ConfigMap,
    #[serde(default)]
    pub output: ConfigOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigInput {
    pub votes: Option<PathBuf>,
    pub voters: Option<PathBuf>,
    pub bills: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigReduce {
    pub method: Option<String>,
    pub k: Option<usize>,
    pub p: Option<usize>,
    pub restarts: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigGmm {
    /// "auto" or a non-negative number.
    pub lambda: Option<toml::Value>,
    pub uniform_priors: Option<bool>,
    pub merge_small_into: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigMap {
    pub order: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOutput {
    pub dir: Option<PathBuf>,
    pub dump_standardized: Option<bool>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        toml::from_str(text).map_err(|e| Error::Config {
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<ConfigFile> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn lambda_policy(&self) -> Result<Option<LambdaPolicy>> {
        match &self.gmm.lambda {
            None => Ok(None),
            Some(toml::Value::String(s)) if s == "auto" => Ok(Some(LambdaPolicy::Auto)),
            Some(toml::Value::Float(f)) => Ok(Some(LambdaPolicy::Fixed(*f))),
            Some(toml::Value::Integer(i)) => Ok(Some(LambdaPolicy::Fixed(*i as f64))),
            Some(other) => Err(Error::Config {
                reason: format!("gmm.lambda must be \"auto\" or a number, got {other}"),
            }),
        }
    }
}
