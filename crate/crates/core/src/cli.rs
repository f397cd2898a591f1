//! The `idiom-forge` command line.
//!
//! Exit codes: 0 success, 1 data error, 2 usage or configuration error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{
    build_manifest, generate_synthetic, ingest_dir, load_edits, manifest_trees, CorpusError, CorpusManifest,
    FilterOptions, IngestOptions, SyntheticParams,
};
use crate::dataflow::analyze_method;
use crate::dftree::{method_df_tree, DfTree, TreeMode};
use crate::frontend::{ast_to_json, method_to_plain_tree, parse};
use crate::idioms::{prune, rank_with, report, CeBase, Idiom, IdiomError, Ranking, Weights};
use crate::ptsg::{mine, MineParams, PtsgError, PtsgGrammar};
use crate::typeinfer::{infer_types_with, InferOptions};

pub const SEED_ENV: &str = "IDIOM_FORGE_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Ptsg(#[from] PtsgError),
    #[error(transparent)]
    Idiom(#[from] IdiomError),
    #[error("grammar was mined in {grammar} mode but the corpus is built in {corpus} mode")]
    ModeMismatch { grammar: TreeMode, corpus: TreeMode },
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Effective settings after defaults, config file and flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub mode: TreeMode,
    pub alpha: f64,
    pub iterations: u32,
    pub seed: u64,
    pub c_min: usize,
    pub n_min: usize,
    pub min_frag_prob: f64,
    pub ranking: Ranking,
    pub weights: Option<PathBuf>,
    pub top_k: usize,
    pub accumulator_promotion: bool,
    pub ce_base: CeBase,
    pub invert_split: bool,
    /// `min_frag_prob` as given by a flag or the config file, if it was.
    /// `rank` and `match` only re-filter a stored grammar when it is set.
    #[serde(skip)]
    pub explicit_min_frag_prob: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        let m = MineParams::default();
        Config {
            mode: TreeMode::Dataflow,
            alpha: m.alpha,
            iterations: m.iterations,
            seed: m.seed,
            c_min: 2,
            n_min: 6,
            min_frag_prob: m.min_frag_prob,
            ranking: Ranking::Iou,
            weights: None,
            top_k: 1,
            accumulator_promotion: true,
            ce_base: CeBase::Node,
            invert_split: m.invert_split,
            explicit_min_frag_prob: None,
        }
    }
}

/// A config file: any subset of [`Config`]'s fields.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    mode: Option<TreeMode>,
    alpha: Option<f64>,
    iterations: Option<u32>,
    seed: Option<u64>,
    c_min: Option<usize>,
    n_min: Option<usize>,
    min_frag_prob: Option<f64>,
    ranking: Option<Ranking>,
    weights: Option<PathBuf>,
    top_k: Option<usize>,
    accumulator_promotion: Option<bool>,
    ce_base: Option<CeBase>,
    invert_split: Option<bool>,
}

impl Config {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.min_frag_prob) {
            return bad(format!("min_frag_prob must be in [0, 1], got {}", self.min_frag_prob));
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1".into());
        }
        Ok(())
    }

    pub fn mine_params(&self) -> MineParams {
        MineParams {
            alpha: self.alpha,
            iterations: self.iterations,
            seed: self.seed,
            min_frag_prob: self.min_frag_prob,
            invert_split: self.invert_split,
        }
    }

    pub fn infer(&self) -> InferOptions {
        InferOptions {
            accumulator_promotion: self.accumulator_promotion,
        }
    }

    pub fn load_weights(&self) -> Result<Weights, CliError> {
        match &self.weights {
            None => Ok(Weights::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(io_err(p))?;
                Weights::from_json_str(&text).map_err(|e| CliError::Usage(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "idiom-forge", version, about = "Mine refactoring idioms from MiniHack code")]
pub struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the effective config as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    /// Worker threads for ingestion and matching.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Only print warnings and errors on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(flatten)]
    pub opts: ConfigFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct ConfigFlags {
    /// `dataflow` or `plain` trees.
    #[arg(long, global = true)]
    pub mode: Option<TreeMode>,
    /// Dirichlet process concentration.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Gibbs sweeps over the corpus.
    #[arg(long, global = true)]
    pub iterations: Option<u32>,
    /// Falls back to $IDIOM_FORGE_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Minimum number of methods a kept idiom occurs in.
    #[arg(long, global = true)]
    pub c_min: Option<usize>,
    /// Minimum idiom size in nodes.
    #[arg(long, global = true)]
    pub n_min: Option<usize>,
    /// Drop grammar fragments below this probability.
    #[arg(long, global = true)]
    pub min_frag_prob: Option<f64>,
    /// `iou`, `coverage` or `ce`.
    #[arg(long, global = true)]
    pub ranking: Option<Ranking>,
    /// Root-label weight table for IoU ranking.
    #[arg(long, global = true)]
    pub weights: Option<PathBuf>,
    /// How many idioms `match` reports.
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// Do not type `.=` targets as collections.
    #[arg(long, global = true)]
    pub no_accumulator_promotion: bool,
    /// Divisor of the CE score: `node` or `production`.
    #[arg(long, global = true)]
    pub ce_base: Option<CeBase>,
    /// Read the sampler's joint-probability ratio as the split probability.
    #[arg(long, global = true)]
    pub invert_split: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    AstJson,
    TypesJson,
    SigmaJson,
    DftreeJson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct Input {
    /// Source directory, or the edits root when --manifest is given.
    pub dir: PathBuf,
    /// File pattern relative to DIR.
    #[arg(long, default_value = "**/*.mh")]
    pub glob: String,
    /// Restrict to the methods listed in a filter-edits manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Fail on the first file that does not parse.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse one file and emit an intermediate representation.
    Parse {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "ast-json")]
        emit: Emit,
    },
    /// Emit the trees of every method under a directory.
    Trees {
        #[command(flatten)]
        input: Input,
    },
    /// Mine a grammar.
    Mine {
        #[command(flatten)]
        input: Input,
        /// Grammar output path (stdout if absent).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Prune and rank a grammar's fragments against a corpus.
    Rank {
        grammar: PathBuf,
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Report the sites of the top-k idioms.
    Match {
        grammar: PathBuf,
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Select the methods of before/after edit pairs worth mining.
    FilterEdits {
        dir: PathBuf,
        /// Overrides each edit's meta.json.
        #[arg(long)]
        api: Option<String>,
        /// Count API tokens per method instead of per file.
        #[arg(long)]
        method_level: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic corpus with planted idioms.
    GenSynthetic {
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        plant_rate: f64,
    },
}

/// Defaults, then the config file, then `$IDIOM_FORGE_SEED` for an unset
/// seed, then flags.
pub fn resolve_config(cli: &Cli) -> Result<Config, CliError> {
    let file = match &cli.config {
        None => ConfigFile::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
    };
    let env_seed = match std::env::var(SEED_ENV) {
        Ok(s) => Some(
            s.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?,
        ),
        Err(_) => None,
    };
    let d = Config::default();
    let f = &cli.opts;
    let c = Config {
        mode: f.mode.or(file.mode).unwrap_or(d.mode),
        alpha: f.alpha.or(file.alpha).unwrap_or(d.alpha),
        iterations: f.iterations.or(file.iterations).unwrap_or(d.iterations),
        seed: f.seed.or(file.seed).or(env_seed).unwrap_or(d.seed),
        c_min: f.c_min.or(file.c_min).unwrap_or(d.c_min),
        n_min: f.n_min.or(file.n_min).unwrap_or(d.n_min),
        min_frag_prob: f.min_frag_prob.or(file.min_frag_prob).unwrap_or(d.min_frag_prob),
        ranking: f.ranking.or(file.ranking).unwrap_or(d.ranking),
        weights: f.weights.clone().or(file.weights),
        top_k: f.top_k.or(file.top_k).unwrap_or(d.top_k),
        accumulator_promotion: !f.no_accumulator_promotion
            && file.accumulator_promotion.unwrap_or(d.accumulator_promotion),
        ce_base: f.ce_base.or(file.ce_base).unwrap_or(d.ce_base),
        invert_split: f.invert_split || file.invert_split.unwrap_or(d.invert_split),
        explicit_min_frag_prob: f.min_frag_prob.or(file.min_frag_prob),
    };
    c.validate()?;
    Ok(c)
}

fn load_trees(input: &Input, cfg: &Config) -> Result<Vec<DfTree>, CliError> {
    if let Some(mp) = &input.manifest {
        let text = std::fs::read_to_string(mp).map_err(io_err(mp))?;
        let manifest: CorpusManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", mp.display())))?;
        return Ok(manifest_trees(&input.dir, &manifest, cfg.mode, cfg.infer())?);
    }
    if !input.dir.is_dir() {
        return Err(CliError::Data(format!("{}: not a directory", input.dir.display())));
    }
    let opts = IngestOptions {
        mode: cfg.mode,
        infer: cfg.infer(),
        strict: input.strict,
    };
    let ingested = ingest_dir(&input.dir, &input.glob, opts)?;
    if ingested.trees.is_empty() {
        log::warn!("no methods found under {}", input.dir.display());
    }
    Ok(ingested.trees)
}

fn load_grammar(path: &Path, cfg: &Config) -> Result<PtsgGrammar, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let g = PtsgGrammar::from_json_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if g.mode != cfg.mode {
        return Err(CliError::ModeMismatch {
            grammar: g.mode,
            corpus: cfg.mode,
        });
    }
    Ok(g)
}

fn ranked(grammar: &PtsgGrammar, trees: &[DfTree], cfg: &Config) -> Result<Vec<Idiom>, CliError> {
    let weights = cfg.load_weights()?;
    let grammar = match cfg.explicit_min_frag_prob {
        Some(p) => grammar.clone().filtered(p),
        None => grammar.clone(),
    };
    let pruned = prune(&grammar, trees, cfg.c_min, cfg.n_min);
    Ok(rank_with(&pruned, trees, cfg.ranking, &weights, cfg.ce_base)?)
}

fn emit(out: &mut dyn std::io::Write, v: &Value) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(v).expect("json serializes");
    writeln!(out, "{s}").map_err(io_err(Path::new("<stdout>")))
}

fn write_or_print(out: &mut dyn std::io::Write, path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(io_err(p)),
        None => writeln!(out, "{text}").map_err(io_err(Path::new("<stdout>"))),
    }
}

fn parse_file(file: &Path, what: Emit, cfg: &Config, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let src = std::fs::read_to_string(file).map_err(io_err(file))?;
    let name = file.display().to_string();
    let ast = parse(&src, &name).map_err(|error| CorpusError::Syntax {
        file: name.clone(),
        error,
    })?;
    let df = |e| CorpusError::Dataflow {
        file: name.clone(),
        error: e,
    };
    let v = match what {
        Emit::AstJson => ast_to_json(&ast),
        Emit::TypesJson => Value::Array(
            ast.methods
                .iter()
                .map(|m| infer_types_with(m, cfg.infer()).to_json())
                .collect(),
        ),
        Emit::SigmaJson => {
            let mut items = Vec::new();
            for m in &ast.methods {
                let types = infer_types_with(m, cfg.infer());
                let regions = analyze_method(m, &types).map_err(df)?;
                items.push(json!({"method": m.name, "regions": regions.to_json()}));
            }
            Value::Array(items)
        }
        Emit::DftreeJson => {
            let mut items = Vec::new();
            for m in &ast.methods {
                let tree = match cfg.mode {
                    TreeMode::Dataflow => method_df_tree(m, cfg.infer()).map_err(df)?,
                    TreeMode::Plain => method_to_plain_tree(m),
                };
                items.push(serde_json::to_value(tree).expect("tree serializes"));
            }
            Value::Array(items)
        }
    };
    emit(out, &v)
}

fn idioms_text(idioms: &[Idiom]) -> String {
    let mut s = String::new();
    for (i, idiom) in idioms.iter().enumerate() {
        s.push_str(&format!(
            "{}\t{}\tsupport={}\tsize={}\tcoverage={:.4}\tce={:.4}\tiou={:.4}\tscore={:.4}\t{}\n",
            i + 1,
            idiom.root,
            idiom.support,
            idiom.size,
            idiom.scores.coverage,
            idiom.scores.ce,
            idiom.scores.iou,
            idiom.scores.iou_score,
            idiom.serialization()
        ));
    }
    s
}

/// Runs a parsed command line, writing data to `out`.
pub fn run(cli: &Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    if cli.dump_config {
        return emit(out, &serde_json::to_value(&cfg).expect("config serializes"));
    }
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Parse { file, emit: what } => parse_file(file, *what, &cfg, out),
        Command::Trees { input } => {
            let trees = load_trees(input, &cfg)?;
            emit(out, &serde_json::to_value(&trees).expect("trees serialize"))
        }
        Command::Mine { input, out: path } => {
            let trees = load_trees(input, &cfg)?;
            log::info!("mining {} trees in {} mode", trees.len(), cfg.mode);
            let grammar = mine(&trees, &cfg.mine_params())?;
            write_or_print(out, path.as_deref(), &grammar.to_json_string())
        }
        Command::Rank { grammar, input, format } => {
            let g = load_grammar(grammar, &cfg)?;
            let trees = load_trees(input, &cfg)?;
            let idioms = ranked(&g, &trees, &cfg)?;
            match format {
                Format::Json => emit(out, &Value::Array(idioms.iter().map(Idiom::to_json).collect())),
                Format::Text => write!(out, "{}", idioms_text(&idioms)).map_err(io_err(Path::new("<stdout>"))),
            }
        }
        Command::Match { grammar, input, format } => {
            let g = load_grammar(grammar, &cfg)?;
            let trees = load_trees(input, &cfg)?;
            let idioms = ranked(&g, &trees, &cfg)?;
            let top: Vec<Idiom> = idioms.into_iter().take(cfg.top_k).collect();
            let rep = report(&top, &trees);
            match format {
                Format::Json => emit(out, &rep.to_json()),
                Format::Text => write!(out, "{}", rep.to_text()).map_err(io_err(Path::new("<stdout>"))),
            }
        }
        Command::FilterEdits {
            dir,
            api,
            method_level,
            out: path,
        } => {
            let edits = load_edits(dir, api.as_deref())?;
            let manifest = build_manifest(
                &edits,
                FilterOptions {
                    method_level_count: *method_level,
                },
            )?;
            log::info!(
                "{} edit files, {} methods kept, {} rejected",
                edits.len(),
                manifest.entries.len(),
                manifest.rejected.len()
            );
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            write_or_print(out, path.as_deref(), &text)
        }
        Command::GenSynthetic { out: dir, n, plant_rate } => {
            if !(0.0..=1.0).contains(plant_rate) {
                return Err(CliError::Usage(format!("--plant-rate must be in [0, 1], got {plant_rate}")));
            }
            let corpus = generate_synthetic(&SyntheticParams {
                n: *n,
                plant_rate: *plant_rate,
                seed: cfg.seed,
            });
            corpus.write_to(dir)?;
            log::info!(
                "wrote {} methods ({} planted) to {}",
                corpus.labels.len(),
                corpus.planted().count(),
                dir.display()
            );
            Ok(())
        }
    }
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return e.exit_code();
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
