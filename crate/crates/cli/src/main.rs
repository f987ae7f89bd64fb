//! `copfdr` command line: bootstrap, fit, test and simulate.
//!
//! Every output starts with a `#` header carrying the seed. Files are written only after all
//! computation has succeeded, so a failed run leaves no partial outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use copfdr::fit::{fit_mle, pseudo_observations, rotation_for, select_copula, Criterion, FitSubset, SelectionReport};
use copfdr::ingest::{read_counts, read_effects, summarize, write_summary};
use copfdr::marginal::build_table;
use copfdr::procedure::{run, Method};
use copfdr::simulate::{
    run_cell, run_copula_selection_study, run_misspecification, write_selection_table, write_simtable, CellResult,
    MisspecMode, SimulationConfig,
};
use copfdr::{CopulaModel, Family, HypothesisTable, NullMixture, Rotation};
use serde::{Deserialize, Serialize};

const DEFAULT_SEED: u64 = 20240001;

#[derive(Parser)]
#[command(name = "copfdr", version, about = "Two-stage FDR control with a copula-coupled auxiliary variable")]
struct Cli {
    /// Worker threads for grid and replicate parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random draw; printed in each output header.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bootstrap log2 fold changes and their standard deviations from replicate counts.
    Bootstrap {
        /// Counts TSV (gene_id, KO replicates, WT replicates), optionally gzipped.
        #[arg(long)]
        input: PathBuf,
        /// Output TSV.
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit every copula family to (p1, p2) and report LogLik, AIC and BIC.
    Fit(Common),
    /// Run a multiple-testing procedure.
    Test(TestArgs),
    /// Monte Carlo studies driven by a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    /// Effects TSV with gene_id (or id), beta_hat and y (or sd_boot).
    #[arg(long)]
    input: Option<PathBuf>,
    /// JSON run config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON null mixture for beta_hat (default: the built-in two-component mixture).
    #[arg(long)]
    null: Option<PathBuf>,
    /// Fit the copula only on hypotheses with p2 above this value.
    #[arg(long)]
    fit_p2_above: Option<f64>,
    /// Directory for output files (default: current directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    common: Common,
    /// h, s or storey (default h).
    #[arg(long)]
    method: Option<Method>,
    /// Target FDR level (default 0.05).
    #[arg(long)]
    alpha: Option<f64>,
    /// Storey null-proportion cutoff (default 0.5).
    #[arg(long)]
    lambda: Option<f64>,
    /// auto (BIC winner), independence, FAMILY, FAMILY:ROTATION or FAMILY:ROTATION:THETA.
    #[arg(long)]
    copula: Option<String>,
    /// Comma-separated gamma1 values for method h.
    #[arg(long, value_delimiter = ',')]
    gamma1_grid: Option<Vec<f64>>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON study config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Overrides the config's lambda.
    #[arg(long)]
    lambda: Option<f64>,
    /// Overrides the config's gamma1 grid.
    #[arg(long, value_delimiter = ',')]
    gamma1_grid: Option<Vec<f64>>,
    /// Directory for output files (default: current directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Parameters of `fit` and `test` as read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    input: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    null: Option<NullMixture>,
    method: Option<Method>,
    alpha: Option<f64>,
    lambda: Option<f64>,
    copula: Option<String>,
    gamma1_grid: Option<Vec<f64>>,
    fit_p2_above: Option<f64>,
    seed: Option<u64>,
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
enum Study {
    #[default]
    Cell,
    Misspecification,
    Selection,
}

/// The `simulate` config file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SimulateFile {
    study: Study,
    sim: SimulationConfig,
    /// Sweep over these mean shifts instead of `sim.mu`.
    mu: Vec<f64>,
    /// Sweep over these dependence levels instead of `sim.tau`.
    tau: Vec<f64>,
    families: Vec<Family>,
    mode: MisspecMode,
    /// Selection study: sample size and repetitions. The truth is `sim`'s dependence model.
    n: usize,
    reps: usize,
    threads: Option<usize>,
}

impl Default for SimulateFile {
    fn default() -> Self {
        Self {
            study: Study::Cell,
            sim: SimulationConfig::default(),
            mu: Vec::new(),
            tau: Vec::new(),
            families: Family::PARAMETRIC.to_vec(),
            mode: MisspecMode::Refit,
            n: 8000,
            reps: 100,
            threads: None,
        }
    }
}

/// Output files held in memory until the whole run has succeeded.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Self {
        Self { dir, files: Vec::new() }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn commit(self) -> Result<()> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        for (name, bytes) in self.files {
            let path = self.dir.join(&name);
            let tmp = self.dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
            fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn header(command: &str, seed: u64) -> Vec<u8> {
    format!("# copfdr {} {command} seed={seed}\n", env!("CARGO_PKG_VERSION")).into_bytes()
}

fn tsv(command: &str, seed: u64, write: impl FnOnce(&mut Vec<u8>) -> copfdr::Result<()>) -> Result<Vec<u8>> {
    let mut buf = header(command, seed);
    write(&mut buf)?;
    Ok(buf)
}

fn json<T: Serialize>(command: &str, seed: u64, value: &T) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Wrapped<'a, T> {
        tool: String,
        command: &'a str,
        seed: u64,
        result: &'a T,
    }
    let w = Wrapped {
        tool: format!("copfdr {}", env!("CARGO_PKG_VERSION")),
        command,
        seed,
        result: value,
    };
    let mut s = serde_json::to_vec_pretty(&w)?;
    s.push(b'\n');
    Ok(s)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn set_threads(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// How the analysis copula is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
enum CopulaSpec {
    Auto,
    Fit(Family, Option<Rotation>),
    Fixed(CopulaModel),
}

fn parse_copula(s: &str) -> Result<CopulaSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 1 && parts[0].trim().eq_ignore_ascii_case("auto") {
        return Ok(CopulaSpec::Auto);
    }
    let family: Family = parts[0].parse()?;
    if family == Family::Independence {
        if parts.len() > 1 {
            bail!("independence takes no rotation or parameter");
        }
        return Ok(CopulaSpec::Fixed(CopulaModel::independence()));
    }
    match parts.as_slice() {
        [_] => Ok(CopulaSpec::Fit(family, None)),
        [_, r] => Ok(CopulaSpec::Fit(family, Some(r.parse()?))),
        [_, r, t] => {
            let theta: f64 = t.trim().parse().with_context(|| format!("copula parameter '{t}'"))?;
            Ok(CopulaSpec::Fixed(CopulaModel::new(family, r.parse()?, theta)?))
        }
        _ => bail!("copula spec '{s}' has too many fields"),
    }
}

/// Inputs shared by `fit` and `test` after merging flags over the config file.
struct Prepared {
    table: HypothesisTable,
    subset: FitSubset,
    out_dir: PathBuf,
}

fn prepare(common: &Common, cfg: &RunConfig) -> Result<Prepared> {
    let input = common
        .input
        .clone()
        .or_else(|| cfg.input.clone())
        .context("an input TSV is required (--input or \"input\" in --config)")?;
    let null = match &common.null {
        Some(p) => read_json(p)?,
        None => cfg.null.clone().unwrap_or_default(),
    };
    let subset = match common.fit_p2_above.or(cfg.fit_p2_above) {
        Some(t) if (0.0..1.0).contains(&t) => FitSubset::P2Above(t),
        Some(t) => bail!("fit_p2_above = {t} is outside [0, 1)"),
        None => FitSubset::All,
    };
    let effects = read_effects(&input)?;
    let table = build_table(&effects.ids, &effects.beta_hat, &effects.y, &null)?;
    let out_dir = common
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Prepared { table, subset, out_dir })
}

fn load_run_config(path: Option<&PathBuf>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), |p| read_json(p))
}

fn cmd_bootstrap(input: &Path, output: &Path, seed: u64) -> Result<()> {
    let data = read_counts(input)?;
    let summary = summarize(&data)?;
    let bytes = tsv("bootstrap", seed, |w| write_summary(&summary, w))?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(output, bytes).with_context(|| format!("writing {}", output.display()))?;
    eprintln!("{} genes, {} resamples each", summary.len(), data.replicates.pow(2 * data.replicates as u32));
    Ok(())
}

fn cmd_fit(args: &Common, seed: Option<u64>) -> Result<()> {
    let cfg = load_run_config(args.config.as_ref())?;
    let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let p = prepare(args, &cfg)?;
    let obs = pseudo_observations(&p.table, p.subset)?;
    let report = select_copula(&obs, &Family::PARAMETRIC)?;
    print!("{}", report.to_text_table());
    println!(
        "winner: LogLik {}, AIC {}, BIC {}",
        report.winner(Criterion::LogLik).model.label(),
        report.winner(Criterion::Aic).model.label(),
        report.winner(Criterion::Bic).model.label()
    );
    let mut out = Outputs::new(p.out_dir);
    out.add("selection.json", json("fit", seed, &report)?);
    out.commit()
}

#[derive(Serialize)]
struct TestRecord<'a> {
    copula: CopulaModel,
    outcome: &'a copfdr::ProcedureOutcome,
}

fn cmd_test(args: &TestArgs, seed: Option<u64>) -> Result<()> {
    let cfg = load_run_config(args.common.config.as_ref())?;
    let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let method = args.method.or(cfg.method).unwrap_or(Method::H);
    let alpha = args.alpha.or(cfg.alpha).unwrap_or(0.05);
    let lambda = args.lambda.or(cfg.lambda).unwrap_or(0.5);
    let spec = parse_copula(args.copula.as_deref().or(cfg.copula.as_deref()).unwrap_or("auto"))?;
    let grid = args
        .gamma1_grid
        .clone()
        .or_else(|| cfg.gamma1_grid.clone())
        .unwrap_or_else(copfdr::procedure::default_gamma1_grid);
    let p = prepare(&args.common, &cfg)?;

    let mut selection: Option<SelectionReport> = None;
    let model = if method == Method::Storey {
        CopulaModel::independence()
    } else {
        match spec {
            CopulaSpec::Fixed(m) => m,
            CopulaSpec::Auto => {
                let obs = pseudo_observations(&p.table, p.subset)?;
                let report = select_copula(&obs, &Family::PARAMETRIC)?;
                let m = report.winner(Criterion::Bic).model;
                selection = Some(report);
                m
            }
            CopulaSpec::Fit(f, r) => {
                let obs = pseudo_observations(&p.table, p.subset)?;
                let r = r.unwrap_or_else(|| rotation_for(f, copfdr::fit::empirical_kendall_tau(&obs)));
                fit_mle(f, r, &obs)?.model
            }
        }
    };
    let outcome = run(method, &p.table, &model, alpha, lambda, &grid)?;
    println!(
        "{method}: {} of {} rejected with copula {} (pi0 {:.4}, gamma {:.6e}{})",
        outcome.n_rejected,
        outcome.n_hypotheses,
        model.label(),
        outcome.pi0_hat,
        outcome.gamma_hat,
        outcome.gamma1_hat.map(|g| format!(", gamma1 {g}")).unwrap_or_default()
    );

    let mut out = Outputs::new(p.out_dir);
    out.add("decisions.tsv", tsv("test", seed, |w| outcome.write_decisions(&p.table, w))?);
    out.add(
        "outcome.json",
        json(
            "test",
            seed,
            &TestRecord {
                copula: model,
                outcome: &outcome,
            },
        )?,
    );
    if method == Method::H {
        out.add("gamma1_curve.tsv", tsv("test", seed, |w| outcome.write_gamma1_curve(w))?);
    }
    if let Some(report) = &selection {
        out.add("selection.json", json("test", seed, report)?);
    }
    out.commit()
}

fn cmd_simulate(args: &SimulateArgs, mut file: SimulateFile, seed: Option<u64>) -> Result<()> {
    if let Some(s) = seed {
        file.sim.seed = s;
    }
    if let Some(a) = args.alpha {
        file.sim.alpha = a;
    }
    if let Some(l) = args.lambda {
        file.sim.lambda = l;
    }
    if let Some(g) = &args.gamma1_grid {
        file.sim.gamma1_grid = Some(g.clone());
    }
    file.sim.validate()?;
    let seed = file.sim.seed;
    let mut out = Outputs::new(args.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")));
    match file.study {
        Study::Cell => {
            let mus = if file.mu.is_empty() { vec![file.sim.mu] } else { file.mu.clone() };
            let taus = if file.tau.is_empty() { vec![file.sim.tau] } else { file.tau.clone() };
            let mut cells: Vec<(String, CellResult)> = Vec::new();
            for &tau in &taus {
                for &mu in &mus {
                    let cfg = SimulationConfig { mu, tau, ..file.sim.clone() };
                    cells.push((format!("tau={tau} mu={mu}"), run_cell(&cfg)?));
                }
            }
            let rows: Vec<(String, &CellResult)> = cells.iter().map(|(l, c)| (l.clone(), c)).collect();
            out.add("simtable.tsv", tsv("simulate", seed, |w| write_simtable(&rows, w))?);
            let results: Vec<&CellResult> = cells.iter().map(|(_, c)| c).collect();
            out.add("simulation.json", json("simulate", seed, &results)?);
        }
        Study::Misspecification => {
            if file.families.is_empty() {
                bail!("misspecification needs at least one family");
            }
            let table = run_misspecification(&file.sim, &file.families, file.mode)?;
            let rows: Vec<(String, &CellResult)> = table
                .iter()
                .map(|r| (format!("{:?} {}", file.mode, r.family).to_lowercase(), &r.cell))
                .collect();
            out.add("simtable.tsv", tsv("simulate", seed, |w| write_simtable(&rows, w))?);
            out.add("simulation.json", json("simulate", seed, &table)?);
        }
        Study::Selection => {
            if file.n < 10 || file.reps == 0 {
                bail!("selection study needs n >= 10 and reps >= 1");
            }
            let truth = file.sim.dependence()?;
            let fams = if file.families.is_empty() { Family::PARAMETRIC.to_vec() } else { file.families.clone() };
            let study = run_copula_selection_study(file.n, &truth, file.reps, &fams, seed)?;
            out.add("selection.tsv", tsv("simulate", seed, |w| write_selection_table(&study, w))?);
            out.add("selection.json", json("simulate", seed, &study)?);
        }
    }
    out.commit()
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Bootstrap { input, output } => {
            set_threads(cli.threads)?;
            cmd_bootstrap(input, output, cli.seed.unwrap_or(DEFAULT_SEED))
        }
        Command::Fit(args) => {
            let threads = cli.threads.or(load_run_config(args.config.as_ref())?.threads);
            set_threads(threads)?;
            cmd_fit(args, cli.seed)
        }
        Command::Test(args) => {
            let threads = cli.threads.or(load_run_config(args.common.config.as_ref())?.threads);
            set_threads(threads)?;
            cmd_test(args, cli.seed)
        }
        Command::Simulate(args) => {
            let file: SimulateFile = read_json(&args.config)?;
            set_threads(cli.threads.or(file.threads))?;
            cmd_simulate(args, file, cli.seed)
        }
    }
}
