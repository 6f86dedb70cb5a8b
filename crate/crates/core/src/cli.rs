//! The `rankdens` command line. Every output file starts with `#` lines
//! holding the serialized run configuration and the SHA-256 of the input
//! data, so identical invocations give byte-identical files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimator::{
    empirical_prob, mallows_fit, select_bandwidth, test_loglikelihood, EmpiricalMeasure, EventScorer,
    KernelModel, ModelArchive, PairSummary, MALLOWS_MAX_N,
};
use crate::ingest::{
    build_rankings, load_ratings, select_items, select_users, split, FormatDescriptor, RankingSet,
    UserSelection,
};
use crate::kendall::{default_bandwidth, max_distance, KernelMode, MahonianTable, TriangularNormalization};
use crate::oracle::{synthesize, SynthConfig};
use crate::ranking::{Item, ItemUniverse, Permutation, TiedRanking};
use crate::recommend::{evaluate_prediction, KernelPredictor, LossMatrix, PredictionSplit};
use crate::rules::{
    affinity_from_table, csv_field, mine_mi_rules, rule_category_agreement, LiftMode, LiftTable,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rankdens", version, about = "Kernel estimates of preference events from tied, incomplete rankings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Directory for output files (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Exit with status 3 when numeric warnings were raised.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Ratings file.
    #[arg(long)]
    pub data: PathBuf,
    /// ml100k, ml1m or csv:key=value;... (delim, user, item, rating, header, min, max, errors).
    #[arg(long, default_value = "ml100k")]
    pub format: String,
    /// Keep the N most rated items.
    #[arg(long, default_value_t = 53)]
    pub top_items: usize,
    /// Keep the M users with the most ratings among the kept items.
    #[arg(long)]
    pub top_users: Option<usize>,
    /// Keep users with at least this many ratings among the kept items.
    #[arg(long)]
    pub min_ratings: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelArgs {
    /// A positive number, `default` (n(n-1)/2) or `auto` (5-fold held-out likelihood; at least n(n-1)/2 for the modified kernel).
    #[arg(long, default_value = "default")]
    pub bandwidth: String,
    /// modified, or exact (exact support, at most 8 items).
    #[arg(long, default_value = "modified")]
    pub kernel: KernelMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Tabulate the Kendall distance distribution and kernel normalization.
    Normtable {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Bandwidths; defaults to n(n-1)/2 for each n.
        #[arg(long, value_delimiter = ',')]
        bandwidth: Vec<f64>,
        #[arg(long, default_value = "exact")]
        kernel: KernelMode,
    },
    /// Pairwise preference matrix and r(i), the mean of each row (the
    /// diagonal counts as 1/2).
    Pairs {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Item order: `r` (descending r) or `genre` (genre, then r).
        #[arg(long, default_value = "r")]
        order: String,
        /// CSV of `item,genre`.
        #[arg(long)]
        genres: Option<PathBuf>,
        /// Also write the fitted model as JSON.
        #[arg(long)]
        save_model: Option<PathBuf>,
    },
    /// Held-out log-likelihood of kernel, empirical and Mallows estimates
    /// over small item sets, by training size.
    Loglik {
        /// Ratings file; synthetic mixture data when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "ml100k")]
        format: String,
        #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "100,200,500,1000")]
        m: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, value_delimiter = ',', default_value = "kernel,empirical,mallows")]
        estimators: Vec<String>,
        /// Synthetic data: component concentration.
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        /// Synthetic data: probability an item is observed.
        #[arg(long, default_value_t = 0.9)]
        observe: f64,
        /// Synthetic data: probability an observed item ties with the previous one.
        #[arg(long, default_value_t = 0.1)]
        ties: f64,
        /// Synthetic data: test users per repetition.
        #[arg(long, default_value_t = 1000)]
        test_size: usize,
        #[arg(long, default_value = "auto")]
        bandwidth: String,
        #[arg(long, default_value = "exact")]
        kernel: KernelMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Mean loss of posterior-loss-minimizing level predictions by training size.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        /// l0, l1, le (asymmetric star loss; on a 1-5 scale its 0-star row
        /// and column are dropped) or a CSV file of rows.
        #[arg(long, default_value = "l1")]
        loss: String,
        /// Training sizes; all training users when empty.
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0.5)]
        holdout: f64,
    },
    /// Association rules: mi, lift-top2 or lift-topbottom.
    Rules {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value = "mi")]
        mode: String,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Permit more than 60 items for mi.
        #[arg(long)]
        allow_large: bool,
        /// CSV of `item,genre`; adds a same-genre column.
        #[arg(long)]
        genres: Option<PathBuf>,
    },
    /// Affinity graph of mean two-way top-2 lift above a threshold.
    Graph {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        threshold: f64,
        /// csv or dot.
        #[arg(long, default_value = "csv")]
        graph_format: String,
    },
    /// Synthetic censored rankings from a two-component Mallows mixture.
    Synth {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, default_value_t = 0.9)]
        observe: f64,
        #[arg(long, default_value_t = 0.1)]
        ties: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Event probabilities under a saved model.
    Prob {
        #[arg(long)]
        model: PathBuf,
        /// Events in ranking notation, e.g. "a,b | c".
        #[arg(long, required = true)]
        event: Vec<String>,
    },
}

/// Configuration recorded in every output header.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub tool: String,
    pub version: String,
    pub command: Command,
}

impl RunConfig {
    pub fn header(&self, data_hash: &str) -> String {
        format!(
            "# {} {}\n# config: {}\n# data-sha256: {data_hash}\n",
            self.tool,
            self.version,
            serde_json::to_string(&self.command).expect("config serializes")
        )
    }
}

/// Output files plus numeric warnings from one run.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

/// Parse `args` (including the program name), run, write outputs and return
/// the exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(out) => {
            if let Err(e) = write_outputs(cli.out.as_deref(), &out.files) {
                eprintln!("error: {e}");
                return EXIT_DATA;
            }
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            if cli.strict && !out.warnings.is_empty() {
                EXIT_NUMERIC
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. }
        | Error::Parse(_)
        | Error::TooManyMalformed { .. }
        | Error::UnknownLabel(_)
        | Error::DuplicateItem(_)
        | Error::DuplicateLabel(_)
        | Error::EmptyGroup
        | Error::EmptyRanking
        | Error::EmptyTraining
        | Error::EmptyUniverse
        | Error::InvalidLevels => EXIT_DATA,
        _ => EXIT_USAGE,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("RANKDENS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn write_outputs(dir: Option<&Path>, files: &[(String, String)]) -> Result<()> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            for (name, body) in files {
                let path = dir.join(name);
                fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            }
        }
        None => {
            let single = files.len() == 1;
            for (name, body) in files {
                if !single {
                    println!("# file: {name}");
                }
                print!("{body}");
            }
        }
    }
    Ok(())
}

/// Run a parsed command without touching the file system for output.
pub fn execute(command: &Command) -> Result<RunOutput> {
    let config = RunConfig {
        tool: "rankdens".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.clone(),
    };
    match command {
        Command::Normtable { n, bandwidth, kernel } => cmd_normtable(&config, n, bandwidth, *kernel),
        Command::Pairs {
            data,
            kernel,
            order,
            genres,
            save_model,
        } => cmd_pairs(&config, data, kernel, order, genres.as_deref(), save_model.as_deref()),
        Command::Loglik { .. } => cmd_loglik(&config),
        Command::Predict {
            data,
            kernel,
            loss,
            m,
            test_fraction,
            holdout,
        } => cmd_predict(&config, data, kernel, loss, m, *test_fraction, *holdout),
        Command::Rules {
            data,
            kernel,
            mode,
            top,
            allow_large,
            genres,
        } => cmd_rules(&config, data, kernel, mode, *top, *allow_large, genres.as_deref()),
        Command::Graph {
            data,
            kernel,
            threshold,
            graph_format,
        } => cmd_graph(&config, data, kernel, *threshold, graph_format),
        Command::Synth {
            n,
            m,
            theta,
            observe,
            ties,
            seed,
        } => cmd_synth(&config, *n, *m, *theta, *observe, *ties, *seed),
        Command::Prob { model, event } => cmd_prob(&config, model, event),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Independent seed for a named stage.
pub fn sub_seed(seed: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn load_set(args: &DataArgs) -> Result<(RankingSet, String)> {
    let format: FormatDescriptor = args.format.parse()?;
    let table = load_ratings(&args.data, &format)?;
    if args.top_items == 0 {
        return Err(Error::InvalidArgument("--top-items must be positive".into()));
    }
    let items = select_items(&table, args.top_items);
    let policy = match (args.top_users, args.min_ratings) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument(
                "--top-users and --min-ratings are exclusive".into(),
            ))
        }
        (Some(m), None) => UserSelection::TopByCoverage(m),
        (None, Some(c)) => UserSelection::MinCount(c),
        (None, None) => UserSelection::All,
    };
    let users = select_users(&table, &items, policy);
    let set = build_rankings(&table, &items, &users)?;
    Ok((set, hash_file(&args.data)?))
}

fn bandwidth_grid(n: usize, mode: KernelMode) -> Vec<f64> {
    let d = max_distance(n) as f64;
    match mode {
        // below n(n-1)/2 some events get negative estimates
        KernelMode::Modified => [1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 8.0]
            .iter()
            .map(|f| (f * d).max(1.0))
            .collect(),
        KernelMode::ExactSupport => (1..=max_distance(n) + 1).map(|h| h as f64).collect(),
    }
}

/// Fit with the requested bandwidth rule.
pub fn fit_model(training: Vec<TiedRanking>, bandwidth: &str, mode: KernelMode, seed: u64) -> Result<KernelModel> {
    let n = training.first().ok_or(Error::EmptyTraining)?.n();
    let h = match bandwidth {
        "default" => match mode {
            KernelMode::Modified => default_bandwidth(n),
            // one past the largest distance: full support
            KernelMode::ExactSupport => max_distance(n) as f64 + 1.0,
        },
        "auto" => {
            select_bandwidth(&training, &bandwidth_grid(n, mode), mode, 5, sub_seed(seed, "bandwidth"))?.bandwidth
        }
        h => h
            .parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("bandwidth {h:?}")))?,
    };
    KernelModel::fit(training, h, mode)
}

/// The fastest exact scorer for events over the whole universe.
pub fn fast_scorer(model: &KernelModel) -> Result<Box<dyn EventScorer + Send + '_>> {
    if model.closed_form_applies() {
        let all: Vec<Item> = (0..model.universe().size()).collect();
        Ok(Box::new(model.summarize(&all)?))
    } else {
        Ok(Box::new(model))
    }
}

fn model_comment(model: &KernelModel) -> String {
    format!(
        "# model: n={} m={} h={} kernel={}\n",
        model.universe().size(),
        model.training().len(),
        model.bandwidth(),
        model.mode()
    )
}

fn cmd_normtable(config: &RunConfig, ns: &[usize], hs: &[f64], mode: KernelMode) -> Result<RunOutput> {
    let mut mass = String::from("n,t,g\n");
    let mut norm = String::from("n,h,mode,norm_c,c\n");
    for &n in ns {
        let table = MahonianTable::new(n)?;
        for (t, g) in table.mass().iter().enumerate() {
            writeln!(mass, "{n},{t},{g}").unwrap();
        }
        let defaults = [default_bandwidth(n)];
        let list = if hs.is_empty() { &defaults[..] } else { hs };
        for &h in list {
            let c = TriangularNormalization::with_table(&table, h, mode)?;
            writeln!(norm, "{n},{h},{mode},{},{}", c.norm_c(), c.c()).unwrap();
        }
    }
    let header = config.header("none");
    Ok(RunOutput {
        files: vec![
            ("normtable_mass.csv".into(), format!("{header}{mass}")),
            ("normtable_norm.csv".into(), format!("{header}{norm}")),
        ],
        warnings: Vec::new(),
    })
}

fn load_genres(path: &Path, universe: &ItemUniverse) -> Result<HashMap<Item, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for line in text.lines() {
        let Some((item, genre)) = line.split_once(',') else {
            continue;
        };
        // header or unknown items
        if let Ok(i) = universe.resolve(item.trim()) {
            out.insert(i, genre.trim().to_string());
        }
    }
    Ok(out)
}

/// `M[i][j] = p(i before j)` over all items of the model's universe.
pub fn pair_matrix(scorer: &dyn EventScorer) -> Result<Vec<Vec<f64>>> {
    let u = scorer.universe();
    let n = u.size();
    let mut m = vec![vec![0.5; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let p = scorer.event_prob(&TiedRanking::chain(u, &[i, j])?)?;
            m[i][j] = p;
            m[j][i] = 1.0 - p;
        }
    }
    Ok(m)
}

fn cmd_pairs(
    config: &RunConfig,
    data: &DataArgs,
    kargs: &KernelArgs,
    order: &str,
    genres: Option<&Path>,
    save_model: Option<&Path>,
) -> Result<RunOutput> {
    if order != "r" && order != "genre" {
        return Err(Error::InvalidArgument(format!("--order {order:?}")));
    }
    if order == "genre" && genres.is_none() {
        return Err(Error::InvalidArgument("--order genre needs --genres".into()));
    }
    let (set, hash) = load_set(data)?;
    let model = fit_model(set.unlevelled(), &kargs.bandwidth, kargs.kernel, kargs.seed)?;
    if let Some(path) = save_model {
        ModelArchive::save(&model, path)?;
    }
    let scorer = fast_scorer(&model)?;
    let m = pair_matrix(scorer.as_ref())?;
    let u = model.universe();
    let n = u.size();
    let mut warnings = Vec::new();
    let out_of_range = m.iter().flatten().filter(|p| !(0.0..=1.0).contains(*p)).count();
    if out_of_range > 0 {
        warnings.push(format!("{out_of_range} pair probabilities outside [0, 1]"));
    }
    let r: Vec<f64> = m.iter().map(|row| row.iter().sum::<f64>() / n as f64).collect();
    let genre_of = match genres {
        Some(p) => load_genres(p, u)?,
        None => HashMap::new(),
    };
    let mut idx: Vec<Item> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let by_r = r[b].total_cmp(&r[a]).then(a.cmp(&b));
        if order == "genre" {
            let (ga, gb) = (genre_of.get(&a), genre_of.get(&b));
            // items without a genre go last
            match (ga, gb) {
                (Some(x), Some(y)) => x.cmp(y).then(by_r),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => by_r,
            }
        } else {
            by_r
        }
    });
    let header = format!("{}{}", config.header(&hash), model_comment(&model));
    let mut matrix = String::from("item");
    for &j in &idx {
        write!(matrix, ",{}", csv_field(&u.label(j))).unwrap();
    }
    matrix.push('\n');
    for &i in &idx {
        matrix.push_str(&csv_field(&u.label(i)));
        for &j in &idx {
            write!(matrix, ",{}", m[i][j]).unwrap();
        }
        matrix.push('\n');
    }
    let mut rs = String::from("rank,item,r,genre\n");
    for (k, &i) in idx.iter().enumerate() {
        let g = genre_of.get(&i).map_or("", String::as_str);
        writeln!(rs, "{},{},{},{}", k + 1, csv_field(&u.label(i)), r[i], csv_field(g)).unwrap();
    }
    Ok(RunOutput {
        files: vec![
            ("pairs_matrix.csv".into(), format!("{header}{matrix}")),
            ("pairs_r.csv".into(), format!("{header}{rs}")),
        ],
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Estimator {
    Kernel,
    Empirical,
    Mallows,
}

fn full_orders(rankings: &[TiedRanking]) -> Vec<Permutation> {
    rankings
        .iter()
        .filter(|r| r.is_full())
        .map(|r| Permutation::from_order(r.groups().iter().map(|g| g[0]).collect()).expect("full ranking"))
        .collect()
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Training and test rankings over a small item set for one repetition.
type LoglikData = (Vec<TiedRanking>, Vec<TiedRanking>);

fn cmd_loglik(config: &RunConfig) -> Result<RunOutput> {
    let Command::Loglik {
        data,
        format,
        n: ns,
        m: ms,
        reps,
        estimators,
        theta,
        observe,
        ties,
        test_size,
        bandwidth,
        kernel,
        seed,
    } = &config.command
    else {
        unreachable!("dispatched on loglik")
    };
    let estimators = estimators
        .iter()
        .map(|e| match e.as_str() {
            "kernel" => Ok(Estimator::Kernel),
            "empirical" => Ok(Estimator::Empirical),
            "mallows" => Ok(Estimator::Mallows),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if *reps == 0 || ns.is_empty() || ms.is_empty() {
        return Err(Error::InvalidArgument("need n, m and at least one repetition".into()));
    }
    if estimators.contains(&Estimator::Mallows) {
        if let Some(&n) = ns.iter().find(|&&n| n > MALLOWS_MAX_N) {
            return Err(Error::TooLarge {
                n,
                bound: MALLOWS_MAX_N,
            });
        }
    }
    let table = match data {
        Some(path) => Some((load_ratings(path, &format.parse()?)?, hash_file(path)?)),
        None => None,
    };
    let hash = match &table {
        Some((_, h)) => h.clone(),
        None => "synthetic".into(),
    };
    let mut csv = String::from("n,m,estimator,mean_loglik,stderr,reps,mean_dropped,mean_floored\n");
    let mut warnings = Vec::new();
    for &n in ns {
        for &m in ms {
            let mut scores: Vec<Vec<f64>> = vec![Vec::new(); estimators.len()];
            let mut dropped = vec![0usize; estimators.len()];
            let mut floored = vec![0usize; estimators.len()];
            let mut skipped = 0usize;
            for rep in 0..*reps {
                let rep_seed = sub_seed(*seed, &format!("loglik/{n}/{m}/{rep}"));
                let (train, test): LoglikData = match &table {
                    None => {
                        let mut c = SynthConfig::two_component(n, m + test_size, *theta, rep_seed);
                        c.observe_prob = *observe;
                        c.tie_prob = *ties;
                        let d = synthesize(&c)?;
                        let test = d.latent[m..]
                            .iter()
                            .map(|p| p.to_ranking(&d.universe))
                            .collect::<Result<Vec<_>>>()?;
                        (d.observed[..m].to_vec(), test)
                    }
                    Some((t, _)) => {
                        let items = select_items(t, n);
                        let users = select_users(t, &items, UserSelection::All);
                        let set = build_rankings(t, &items, &users)?;
                        let s = split(&set, rep_seed, 0.5, 0.5)?;
                        let test_set: Vec<TiedRanking> = set
                            .users
                            .iter()
                            .zip(&set.rankings)
                            .filter(|(u, _)| s.test_users.contains(u))
                            .map(|(_, r)| r.without_levels())
                            .collect();
                        let mut train = s.train;
                        if train.len() < m {
                            skipped += 1;
                            continue;
                        }
                        train.shuffle(&mut ChaCha8Rng::seed_from_u64(sub_seed(rep_seed, "subsample")));
                        train.truncate(m);
                        (train, test_set)
                    }
                };
                let subset: Vec<Item> = (0..n).collect();
                for (e, est) in estimators.iter().enumerate() {
                    let report = match est {
                        Estimator::Kernel => {
                            let model = fit_model(train.clone(), bandwidth, *kernel, rep_seed)?;
                            test_loglikelihood(&model, &test, &subset)
                        }
                        Estimator::Empirical => {
                            test_loglikelihood(&EmpiricalMeasure::new(train.clone())?, &test, &subset)
                        }
                        Estimator::Mallows => {
                            let full = full_orders(&train);
                            if full.is_empty() {
                                warnings.push(format!("n={n} m={m} rep={rep}: no full rankings for Mallows"));
                                continue;
                            }
                            test_loglikelihood(&mallows_fit(train[0].universe(), &full)?, &test, &subset)
                        }
                    };
                    match report {
                        Ok(r) => {
                            scores[e].push(r.mean);
                            dropped[e] += r.dropped;
                            floored[e] += r.floored;
                        }
                        Err(Error::InvalidArgument(msg)) => {
                            warnings.push(format!("n={n} m={m} rep={rep}: {msg}"));
                        }
                        Err(other) => return Err(other),
                    }
                }
            }
            if skipped > 0 {
                warnings.push(format!("n={n} m={m}: {skipped} repetitions had fewer than m training users"));
            }
            for (e, est) in estimators.iter().enumerate() {
                if scores[e].is_empty() {
                    continue;
                }
                let (mean, se) = mean_and_se(&scores[e]);
                let k = scores[e].len() as f64;
                writeln!(
                    csv,
                    "{n},{m},{},{mean},{se},{},{},{}",
                    match est {
                        Estimator::Kernel => "kernel",
                        Estimator::Empirical => "empirical",
                        Estimator::Mallows => "mallows",
                    },
                    scores[e].len(),
                    dropped[e] as f64 / k,
                    floored[e] as f64 / k
                )
                .unwrap();
            }
        }
    }
    Ok(RunOutput {
        files: vec![("loglik.csv".into(), format!("{}{csv}", config.header(&hash)))],
        warnings,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_predict(
    config: &RunConfig,
    data: &DataArgs,
    kargs: &KernelArgs,
    loss: &str,
    ms: &[usize],
    test_fraction: f64,
    holdout: f64,
) -> Result<RunOutput> {
    let (set, hash) = load_set(data)?;
    let loss_matrix = match loss {
        "l0" | "l1" | "le" => LossMatrix::builtin(loss, set.min_level, set.max_level)?,
        path => LossMatrix::from_csv(path, set.min_level)?,
    };
    if loss_matrix.max_level() != set.max_level {
        return Err(Error::DimensionMismatch {
            expected: (set.max_level - set.min_level + 1) as usize,
            got: loss_matrix.size(),
        });
    }
    let s = split(&set, sub_seed(kargs.seed, "split"), test_fraction, holdout)?;
    let mut train = s.train.clone();
    train.shuffle(&mut ChaCha8Rng::seed_from_u64(sub_seed(kargs.seed, "train-order")));
    let sizes: Vec<usize> = if ms.is_empty() { vec![train.len()] } else { ms.to_vec() };
    let mut csv = String::from("m,loss,h,mean_loss,pairs,clamped_posteriors\n");
    let mut warnings = Vec::new();
    for &m in &sizes {
        if m == 0 || m > train.len() {
            return Err(Error::InvalidArgument(format!(
                "training size {m} outside 1..={}",
                train.len()
            )));
        }
        let model = fit_model(train[..m].to_vec(), &kargs.bandwidth, kargs.kernel, kargs.seed)?;
        let scorer = fast_scorer(&model)?;
        let predictor = KernelPredictor {
            scorer: scorer.as_ref(),
            loss: &loss_matrix,
        };
        let report = evaluate_prediction(&predictor, &s.prediction, &loss_matrix)?;
        let clamped = count_clamped(scorer.as_ref(), &s.prediction, &loss_matrix)?;
        if clamped > 0 {
            warnings.push(format!("m={m}: {clamped} posteriors had negative weights"));
        }
        writeln!(
            csv,
            "{m},{loss},{},{},{},{clamped}",
            model.bandwidth(),
            report.mean_loss,
            report.outcomes.len()
        )
        .unwrap();
    }
    Ok(RunOutput {
        files: vec![("predict.csv".into(), format!("{}{csv}", config.header(&hash)))],
        warnings,
    })
}

fn count_clamped(scorer: &dyn EventScorer, split: &PredictionSplit, loss: &LossMatrix) -> Result<usize> {
    let mut n = 0;
    for u in &split.users {
        for &(item, _) in &u.held_out {
            let p = crate::recommend::level_posterior(scorer, &u.observed, item, loss.min_level(), loss.max_level())?;
            n += usize::from(p.clamped);
        }
    }
    Ok(n)
}

#[allow(clippy::too_many_arguments)]
fn cmd_rules(
    config: &RunConfig,
    data: &DataArgs,
    kargs: &KernelArgs,
    mode: &str,
    top: usize,
    allow_large: bool,
    genres: Option<&Path>,
) -> Result<RunOutput> {
    let (set, hash) = load_set(data)?;
    let model = fit_model(set.unlevelled(), &kargs.bandwidth, kargs.kernel, kargs.seed)?;
    let scorer = fast_scorer(&model)?;
    let u = model.universe();
    let all: Vec<Item> = (0..u.size()).collect();
    let genre_of = match genres {
        Some(p) => Some(load_genres(p, u)?),
        None => None,
    };
    let header = format!("{}{}", config.header(&hash), model_comment(&model));
    let body = match mode {
        "mi" => {
            let rules = mine_mi_rules(scorer.as_ref(), &all, top, allow_large)?;
            let mut s = String::from("rank,antecedent_first,antecedent_second,consequent_first,consequent_second,mi");
            if genre_of.is_some() {
                s.push_str(",same_genre");
            }
            s.push('\n');
            for (k, r) in rules.iter().enumerate() {
                write!(
                    s,
                    "{},{},{},{},{},{}",
                    k + 1,
                    csv_field(&u.label(r.antecedent.0)),
                    csv_field(&u.label(r.antecedent.1)),
                    csv_field(&u.label(r.consequent.0)),
                    csv_field(&u.label(r.consequent.1)),
                    r.score
                )
                .unwrap();
                if let Some(g) = &genre_of {
                    let good = rule_category_agreement(std::slice::from_ref(r), |i| g.get(&i).cloned());
                    write!(s, ",{}", u8::from(good == Some(1.0))).unwrap();
                }
                s.push('\n');
            }
            s
        }
        "lift-top2" | "lift-topbottom" => {
            let lm = if mode == "lift-top2" { LiftMode::Top2 } else { LiftMode::TopBottom };
            let table = LiftTable::build(scorer.as_ref(), &all, lm)?;
            let mut s = String::from("rank,first,other,lift\n");
            for (k, (i, j, l)) in table.top(top).into_iter().enumerate() {
                writeln!(s, "{},{},{},{l}", k + 1, csv_field(&u.label(i)), csv_field(&u.label(j))).unwrap();
            }
            s
        }
        other => return Err(Error::InvalidArgument(format!("unknown rule mode {other:?}"))),
    };
    Ok(RunOutput {
        files: vec![("rules.csv".into(), format!("{header}{body}"))],
        warnings: Vec::new(),
    })
}

fn cmd_graph(
    config: &RunConfig,
    data: &DataArgs,
    kargs: &KernelArgs,
    threshold: f64,
    graph_format: &str,
) -> Result<RunOutput> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} must be positive")));
    }
    let (set, hash) = load_set(data)?;
    let model = fit_model(set.unlevelled(), &kargs.bandwidth, kargs.kernel, kargs.seed)?;
    let scorer = fast_scorer(&model)?;
    let u = model.universe();
    let all: Vec<Item> = (0..u.size()).collect();
    let graph = affinity_from_table(&LiftTable::build(scorer.as_ref(), &all, LiftMode::Top2)?, threshold);
    let header = format!("{}{}", config.header(&hash), model_comment(&model));
    let (name, body) = match graph_format {
        "csv" => ("graph.csv", graph.to_csv(u)),
        // DOT has its own comment syntax
        "dot" => ("graph.dot", graph.to_dot(u)),
        other => return Err(Error::InvalidArgument(format!("unknown graph format {other:?}"))),
    };
    let text = if graph_format == "dot" {
        {
        let slashed: String = header.lines().map(|l| format!("//{}\n", &l[1..])).collect();
        format!("{slashed}{body}")
    }
    } else {
        format!("{header}{body}")
    };
    Ok(RunOutput {
        files: vec![(name.into(), text)],
        warnings: Vec::new(),
    })
}

fn cmd_synth(config: &RunConfig, n: usize, m: usize, theta: f64, observe: f64, ties: f64, seed: u64) -> Result<RunOutput> {
    let mut c = SynthConfig::two_component(n, m, theta, seed);
    c.observe_prob = observe;
    c.tie_prob = ties;
    let d = synthesize(&c)?;
    let mut body = String::new();
    for (u, r) in d.observed.iter().enumerate() {
        writeln!(body, "{}\t\t{r}", u + 1).unwrap();
    }
    Ok(RunOutput {
        files: vec![("synth.txt".into(), format!("{}{body}", config.header("synthetic")))],
        warnings: Vec::new(),
    })
}

fn cmd_prob(config: &RunConfig, model_path: &Path, events: &[String]) -> Result<RunOutput> {
    let model = ModelArchive::load(model_path)?;
    let mut csv = String::from("event,probability,log_probability,empirical\n");
    let mut warnings = Vec::new();
    for text in events {
        let e = TiedRanking::parse(text, model.universe())?;
        let p = model.event_prob(&e)?;
        if p.is_negative() {
            warnings.push(format!("negative estimate for {text:?}"));
        }
        let emp = empirical_prob(model.training(), &e)?;
        writeln!(csv, "{},{},{},{emp}", csv_field(text), p.value, p.log_value).unwrap();
    }
    Ok(RunOutput {
        files: vec![("prob.csv".into(), format!("{}{csv}", config.header(&hash_file(model_path)?)))],
        warnings,
    })
}

/// The fitted model behind `pairs`, `rules` and `graph` for a data set, for
/// library callers that want the same selection rules.
pub fn load_and_fit(data: &DataArgs, kernel: &KernelArgs) -> Result<(RankingSet, KernelModel)> {
    let (set, _) = load_set(data)?;
    let model = fit_model(set.unlevelled(), &kernel.bandwidth, kernel.kernel, kernel.seed)?;
    Ok((set, model))
}

/// Summary over all items of a model (errors for truncated exact kernels).
pub fn full_summary(model: &KernelModel) -> Result<PairSummary> {
    model.summarize(&(0..model.universe().size()).collect::<Vec<_>>())
}
