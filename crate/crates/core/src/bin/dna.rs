//! Command-line front end for the affinity pipeline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polidna::error::{Error, ErrorClass};
use polidna::gmm::LambdaPolicy;
use polidna::ingest::VoteDataset;
use polidna::map::{layout_groups, render_map_csv, render_map_svg};
use polidna::outliers::{outlier_pipeline_restarts, outlier_report};
use polidna::pipeline::{
    run_pipeline, run_stages, ArtifactWriter, ConfigFile, InputSource, PipelineConfig,
    ReductionMethod,
};
use polidna::synth::{gen_blocs, BlocConfig};

const SCHEMA_HELP: &str = "\
INPUT SCHEMAS

  CSV (three files, UTF-8, header row required):
    votes.csv   columns: voter_id, bill_id, vote
                vote accepts yes/favorevole, no/contrario, nv/assente
                (case-insensitive); a missing (voter, bill) pair counts
                as nv.
    voters.csv  columns: voter_id, group
    bills.csv   columns: bill_id, date (YYYY-MM-DD), description,
                secret (0 or 1)

  JSON (one document):
    { \"voters\": [{\"voter_id\", \"group\"}],
      \"bills\":  [{\"bill_id\", \"date\", \"description\", \"secret\"}],
      \"votes\":  [{\"voter_id\", \"bill_id\", \"vote\"}] }

OUTPUT FILES

  dna.csv         one row per voter: voter_id, one affinity column per
                  group (6 decimals), nominal_group
  map.csv         voter_id, gamma_x, gamma_y, nominal_group, dna_<group>...
  map.svg         polygon map with one marker per voter
  components.csv  dense: bill_id + one column per component;
                  sparse: component, bill_id, loading (by |loading| desc)
  model.json      k, lambda, groups, priors, means, covariances
  manifest.json   full parameter and cleaning record for the run

EXIT STATUS

  0 on success, 2 on input/configuration errors, 3 on numerical errors.
";

#[derive(Parser)]
#[command(name = "dna", version, about = "Voting-record affinity analysis", after_long_help = SCHEMA_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write every artifact into a directory.
    Fit(FitArgs),
    /// Compute per-voter affinity vectors and write the affinity CSV.
    Dna(DnaArgs),
    /// Render the affinity map (SVG or CSV decided by the output extension).
    Map(MapArgs),
    /// Dump the principal directions.
    Components(ComponentsArgs),
    /// Find voters whose ballots contradict their nominal group.
    Outliers(OutliersArgs),
    /// Generate a synthetic bloc-structured dataset.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Votes CSV path.
    #[arg(long)]
    votes: Option<PathBuf>,
    /// Voters CSV path.
    #[arg(long)]
    voters: Option<PathBuf>,
    /// Bills CSV path.
    #[arg(long)]
    bills: Option<PathBuf>,
    /// Single JSON dataset path (alternative to the CSV trio).
    #[arg(long, conflicts_with_all = ["votes", "voters", "bills"])]
    json: Option<PathBuf>,
    /// TOML config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ReduceArgs {
    /// Reduction method.
    #[arg(long, value_parser = ["pca", "spca"])]
    reduce: Option<String>,
    /// Number of components to keep.
    #[arg(long)]
    k: Option<usize>,
    /// Sparsity budget per direction (spca only).
    #[arg(long)]
    p: Option<usize>,
    /// Extra deterministic restarts for the sparse solver.
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args, Clone)]
struct GmmArgs {
    /// Covariance shrinkage: "auto" or a non-negative number.
    #[arg(long)]
    lambda: Option<String>,
    /// Use uniform priors instead of group frequencies.
    #[arg(long)]
    uniform_priors: bool,
    /// Fold groups with fewer than two members into this group.
    #[arg(long, value_name = "GROUP")]
    merge_small_into: Option<String>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    reduce: ReduceArgs,
    #[command(flatten)]
    gmm: GmmArgs,
    /// Vertex order for the map, comma-separated group ids.
    #[arg(long, value_name = "G1,G2,...")]
    map_order: Option<String>,
    /// Output directory for the artifact set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the standardized matrix (12 significant digits); with a
    /// value, an extra copy goes to that path.
    #[arg(long, value_name = "FILE")]
    dump_standardized: Option<Option<PathBuf>>,
    /// Extra copy of the affinity CSV at this path.
    #[arg(long, value_name = "FILE")]
    dump_dna: Option<PathBuf>,
    /// Extra copy of the model JSON at this path.
    #[arg(long, value_name = "FILE")]
    dump_model: Option<PathBuf>,
    /// Extra copy of the component CSV at this path.
    #[arg(long, value_name = "FILE")]
    dump_components: Option<PathBuf>,
    /// Extra copy of the map at this path (.svg or .csv).
    #[arg(long, value_name = "FILE")]
    map: Option<PathBuf>,
}

#[derive(Args)]
struct DnaArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    reduce: ReduceArgs,
    #[command(flatten)]
    gmm: GmmArgs,
    /// Affinity CSV output path.
    #[arg(long, default_value = "dna.csv")]
    out: PathBuf,
    /// Also write the fitted model as JSON.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    reduce: ReduceArgs,
    #[command(flatten)]
    gmm: GmmArgs,
    /// Vertex order for the map, comma-separated group ids.
    #[arg(long, value_name = "G1,G2,...")]
    map_order: Option<String>,
    /// Output path; .svg renders a figure, .csv writes coordinates.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ComponentsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    reduce: ReduceArgs,
    /// Component CSV output path.
    #[arg(long, default_value = "components.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct OutliersArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Components to extract on the transposed matrix.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Sparsity budget per component.
    #[arg(long, default_value_t = 50)]
    p: usize,
    /// Extra deterministic restarts for the sparse solver.
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// JSON report output path.
    #[arg(long, default_value = "outliers.json")]
    report: PathBuf,
    /// Reduction used for the affinity vectors joined into the report.
    #[arg(long, value_parser = ["pca", "spca"], default_value = "pca")]
    dna_method: String,
    /// Components kept for the affinity join.
    #[arg(long, default_value_t = 2)]
    dna_k: usize,
    /// Sparsity budget for the affinity join when --dna-method spca.
    #[arg(long, default_value_t = 50)]
    dna_p: usize,
    #[command(flatten)]
    gmm: GmmArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of groups.
    #[arg(long)]
    groups: usize,
    /// Comma-separated members per group, e.g. 20,20,20,5.
    #[arg(long)]
    sizes: String,
    /// Number of bills.
    #[arg(long)]
    bills: usize,
    /// Probability that a member votes the group line (in [0.5, 1]).
    #[arg(long, default_value_t = 0.9)]
    cohesion: f64,
    /// Planted cross-voters.
    #[arg(long, default_value_t = 0)]
    outliers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for votes.csv, voters.csv, bills.csv, plants.json.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Dna(args) => cmd_dna(args),
        Command::Map(args) => cmd_map(args),
        Command::Components(args) => cmd_components(args),
        Command::Outliers(args) => cmd_outliers(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dna: {e}");
            match e.class() {
                ErrorClass::Input => ExitCode::from(2),
                ErrorClass::Numeric => ExitCode::from(3),
            }
        }
    }
}

fn load_config(input: &InputArgs) -> Result<ConfigFile, Error> {
    match &input.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

fn resolve_input(args: &InputArgs, cfg: &ConfigFile) -> Result<InputSource, Error> {
    let json = args.json.clone().or_else(|| cfg.input.json.clone());
    let votes = args.votes.clone().or_else(|| cfg.input.votes.clone());
    let voters = args.voters.clone().or_else(|| cfg.input.voters.clone());
    let bills = args.bills.clone().or_else(|| cfg.input.bills.clone());
    if let Some(path) = json {
        return Ok(InputSource::Json { path });
    }
    match (votes, voters, bills) {
        (Some(votes), Some(voters), Some(bills)) => Ok(InputSource::Csv {
            votes,
            voters,
            bills,
        }),
        _ => Err(Error::Config {
            reason: "provide --json, or all of --votes, --voters and --bills".into(),
        }),
    }
}

fn resolve_method(args: &ReduceArgs, cfg: &ConfigFile) -> Result<ReductionMethod, Error> {
    let name = args
        .reduce
        .clone()
        .or_else(|| cfg.reduce.method.clone())
        .unwrap_or_else(|| "pca".to_string());
    let k = args.k.or(cfg.reduce.k).unwrap_or(2);
    match name.as_str() {
        "pca" => Ok(ReductionMethod::Pca { k }),
        "spca" => {
            let p = args.p.or(cfg.reduce.p).ok_or_else(|| Error::Config {
                reason: "spca needs --p (or reduce.p in the config)".into(),
            })?;
            let restarts = args.restarts.or(cfg.reduce.restarts).unwrap_or(0);
            Ok(ReductionMethod::Spca { k, p, restarts })
        }
        other => Err(Error::Config {
            reason: format!("unknown reduction {other:?}"),
        }),
    }
}

fn resolve_lambda(args: &GmmArgs, cfg: &ConfigFile) -> Result<LambdaPolicy, Error> {
    if let Some(text) = &args.lambda {
        if text == "auto" {
            return Ok(LambdaPolicy::Auto);
        }
        let v: f64 = text.parse().map_err(|_| Error::Config {
            reason: format!("--lambda must be \"auto\" or a number, got {text:?}"),
        })?;
        return Ok(LambdaPolicy::Fixed(v));
    }
    Ok(cfg.lambda_policy()?.unwrap_or(LambdaPolicy::Auto))
}

fn parse_order(flag: Option<&str>, cfg: &ConfigFile) -> Option<Vec<String>> {
    flag.map(|s| s.split(',').map(|g| g.trim().to_string()).collect())
        .or_else(|| cfg.map.order.clone())
}

fn pipeline_config(
    input: &InputArgs,
    reduce: &ReduceArgs,
    gmm: &GmmArgs,
    map_order: Option<&str>,
    out_dir: &Path,
    dump_standardized: bool,
) -> Result<PipelineConfig, Error> {
    let cfg = load_config(input)?;
    Ok(PipelineConfig {
        input: resolve_input(input, &cfg)?,
        method: resolve_method(reduce, &cfg)?,
        lambda: resolve_lambda(gmm, &cfg)?,
        uniform_priors: gmm.uniform_priors || cfg.gmm.uniform_priors.unwrap_or(false),
        merge_small_into: gmm
            .merge_small_into
            .clone()
            .or_else(|| cfg.gmm.merge_small_into.clone()),
        map_order: parse_order(map_order, &cfg),
        out_dir: out_dir.to_path_buf(),
        dump_standardized: dump_standardized || cfg.output.dump_standardized.unwrap_or(false),
    })
}

fn cmd_fit(args: FitArgs) -> Result<(), Error> {
    let cfg_file = load_config(&args.input)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg_file.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let cfg = pipeline_config(
        &args.input,
        &args.reduce,
        &args.gmm,
        args.map_order.as_deref(),
        &out_dir,
        args.dump_standardized.is_some(),
    )?;
    let (run, mut paths) = run_pipeline(&cfg)?;

    // Extra copies at caller-chosen paths.
    let mut copy = |src: &str, dst: &Option<PathBuf>| -> Result<(), Error> {
        if let Some(dst) = dst.as_ref().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::copy(out_dir.join(src), dst)?;
            paths.push(dst.clone());
        }
        Ok(())
    };
    copy("dna.csv", &args.dump_dna)?;
    copy("model.json", &args.dump_model)?;
    copy("components.csv", &args.dump_components)?;
    copy(
        "standardized.csv",
        &args.dump_standardized.clone().flatten(),
    )?;
    if let Some(map_path) = &args.map {
        let src = match map_path.extension().and_then(|e| e.to_str()) {
            Some("svg") => "map.svg",
            Some("csv") => "map.csv",
            other => {
                return Err(Error::Config {
                    reason: format!("--map must end in .svg or .csv, got {other:?}"),
                })
            }
        };
        std::fs::copy(out_dir.join(src), map_path)?;
        paths.push(map_path.clone());
    }

    println!(
        "fit: {} voters, {} bills, {} groups; E-Var {:.2}%",
        run.manifest.voters,
        run.manifest.bills,
        run.manifest.groups.len(),
        100.0 * run.expressed_variance
    );
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

/// Write one file atomically via the staging writer.
fn write_single(path: &Path, contents: &[u8]) -> Result<(), Error> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Config {
            reason: format!("bad output path {}", path.display()),
        })?;
    let mut w = ArtifactWriter::new(dir)?;
    w.stage(name, contents)?;
    w.commit()?;
    Ok(())
}

fn cmd_dna(args: DnaArgs) -> Result<(), Error> {
    let cfg = pipeline_config(
        &args.input,
        &args.reduce,
        &args.gmm,
        None,
        Path::new("."),
        false,
    )?;
    let run = run_stages(&cfg)?;
    let csv = polidna::pipeline::render_dna_csv(run.dataset.groups(), &run.dna, &run.dataset);
    write_single(&args.out, csv.as_bytes())?;
    println!("wrote {}", args.out.display());
    if let Some(model_path) = &args.model {
        let json = serde_json::to_string_pretty(&run.model.to_json())? + "\n";
        write_single(model_path, json.as_bytes())?;
        println!("wrote {}", model_path.display());
    }
    Ok(())
}

fn cmd_map(args: MapArgs) -> Result<(), Error> {
    let cfg = pipeline_config(
        &args.input,
        &args.reduce,
        &args.gmm,
        args.map_order.as_deref(),
        Path::new("."),
        false,
    )?;
    let run = run_stages(&cfg)?;
    let ext = args.out.extension().and_then(|e| e.to_str()).unwrap_or("");
    let contents = match ext {
        "svg" => {
            let layout = layout_groups(run.dataset.groups(), cfg.map_order.as_deref())?;
            let caption = format!(
                "{}, k = {}{}, E-Var = {:.2}%",
                run.manifest.method.to_uppercase(),
                run.manifest.k,
                run.manifest
                    .p
                    .map(|p| format!(", p = {p}"))
                    .unwrap_or_default(),
                100.0 * run.expressed_variance
            );
            render_map_svg(&run.points, &layout, &caption)?
        }
        "csv" => {
            let groups = run.dataset.groups().to_vec();
            render_map_csv(&run.points, Some((&groups, &run.dna)))?
        }
        other => {
            return Err(Error::Config {
                reason: format!("--out must end in .svg or .csv, got {other:?}"),
            })
        }
    };
    write_single(&args.out, contents.as_bytes())?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_components(args: ComponentsArgs) -> Result<(), Error> {
    let gmm = GmmArgs {
        lambda: None,
        uniform_priors: false,
        merge_small_into: None,
    };
    let cfg = pipeline_config(&args.input, &args.reduce, &gmm, None, Path::new("."), false)?;
    let run = run_stages(&cfg)?;
    let csv = polidna::pipeline::render_components_csv(&run.basis, run.standardized.col_ids());
    write_single(&args.out, csv.as_bytes())?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_outliers(args: OutliersArgs) -> Result<(), Error> {
    let cfg_file = load_config(&args.input)?;
    let input = resolve_input(&args.input, &cfg_file)?;
    let raw = input.load()?;
    let (dataset, _) = polidna::ingest::clean_dataset(&raw)?;
    let dataset = match &args.gmm.merge_small_into {
        Some(target) => dataset.merge_small_groups(2, target)?,
        None => dataset,
    };

    let analysis = outlier_pipeline_restarts(&dataset, args.k, args.p, args.restarts)?;

    // Affinity join: run the standard pipeline on the same cleaned dataset.
    let dna_method = match args.dna_method.as_str() {
        "pca" => ReductionMethod::Pca { k: args.dna_k },
        _ => ReductionMethod::Spca {
            k: args.dna_k,
            p: args.dna_p,
            restarts: args.restarts,
        },
    };
    let encoded = polidna::preprocess::encode(&dataset);
    let standardized = polidna::preprocess::standardize(&encoded)?;
    let basis = dna_method.fit(&standardized)?;
    let projected = polidna::pca::project(&standardized, &basis)?;
    let lambda = resolve_lambda(&args.gmm, &cfg_file)?;
    let mut model = polidna::gmm::gmm_fit(&projected, &dataset.group_assignment(), lambda)?;
    if args.gmm.uniform_priors {
        model = model.with_uniform_priors();
    }
    let dna = polidna::gmm::dna_all(&model, &projected)?;
    let report = outlier_report(&analysis.profiles, model.group_ids(), &dna)?;

    let doc = serde_json::json!({
        "k": analysis.k,
        "p": analysis.p,
        "restarts": args.restarts,
        "expressed_variance": analysis.expressed_variance,
        "profiles": analysis.profiles,
        "dna_join": {
            "method": dna_method.name(),
            "k": args.dna_k,
            "p": match dna_method { ReductionMethod::Spca { p, .. } => Some(p), _ => None },
            "lambda": model.lambda(),
            "report": report,
        },
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    write_single(&args.report, text.as_bytes())?;
    println!(
        "outliers: {} components, {} flagged; wrote {}",
        analysis.profiles.len(),
        analysis
            .profiles
            .iter()
            .map(|p| p.outliers.len())
            .sum::<usize>(),
        args.report.display()
    );
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Error> {
    let sizes: Vec<usize> = args
        .sizes
        .split(',')
        .map(|s| {
            s.trim().parse::<usize>().map_err(|_| Error::Config {
                reason: format!("bad --sizes entry {s:?}"),
            })
        })
        .collect::<Result<_, _>>()?;
    if sizes.len() != args.groups {
        return Err(Error::Config {
            reason: format!(
                "--groups {} but --sizes names {} groups",
                args.groups,
                sizes.len()
            ),
        });
    }
    let synth = gen_blocs(&BlocConfig {
        group_sizes: sizes,
        n_bills: args.bills,
        cohesion: args.cohesion,
        planted_outliers: args.outliers,
        seed: args.seed,
    })?;
    write_synth(&synth.dataset, &synth.planted, &args.out)?;
    println!(
        "synth: {} voters, {} bills, {} plants; wrote {}",
        synth.dataset.n_voters(),
        synth.dataset.n_bills(),
        synth.planted.len(),
        args.out.display()
    );
    Ok(())
}

fn write_synth(
    dataset: &VoteDataset,
    planted: &[polidna::synth::PlantedOutlier],
    dir: &Path,
) -> Result<(), Error> {
    dataset.write_csv(dir)?;
    let plants: Vec<serde_json::Value> = planted
        .iter()
        .map(|p| {
            serde_json::json!({
                "voter_id": p.voter_id,
                "nominal_group": p.nominal_group,
                "votes_with": p.votes_with,
            })
        })
        .collect();
    let text = serde_json::to_string_pretty(&serde_json::Value::Array(plants))? + "\n";
    std::fs::write(dir.join("plants.json"), text)?;
    Ok(())
}
