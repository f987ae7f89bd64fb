//! Monte Carlo harness: synthetic two-stage data sets and FDR/TPR estimates.
//!
//! Data generation. A dependence copula draws `(u, v)`; the truth flag and the
//! sign of the effect are drawn independently of the pair. The auxiliary
//! statistic is `y = G⁻¹(u)` with `G` the Gamma(3, rate 4) CDF. The primary
//! statistic puts `v` on its two-sided tail scale: under the null
//! `|β| = -Φ⁻¹(v/2)`, so that `p2 = v`, and under the alternative `|β|`
//! solves `P(|β*| ≥ |β|) = v` for `β* ~ ½N(μ,1) + ½N(-μ,1)`. The copula of
//! `(p1, p2)` among nulls is then exactly the dependence copula, which is what
//! the oracle analysis uses.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::copula::{tau_to_theta, CopulaModel, Family, Rotation};
use crate::error::{Error, Result};
use crate::fit::{fit_mle, pseudo_observations, rotation_for, select_copula, Criterion, FitSubset};
use crate::marginal::{build_table, HypothesisTable, NullMixture};
use crate::optim::bisect_increasing;
use crate::procedure::{default_gamma1_grid, run, Method};
use crate::special::{norm_quantile, norm_sf};

/// Gamma shape of the auxiliary statistic.
pub const Y_SHAPE: f64 = 3.0;
/// Gamma rate of the auxiliary statistic.
pub const Y_RATE: f64 = 4.0;

/// How the procedures obtain their copula in each replicate.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisMode {
    /// The dependence copula used to generate the data.
    #[default]
    Oracle,
    /// One family, parameter fitted by maximum likelihood on `(p1, p2)`.
    Fixed(Family),
    /// BIC winner among the candidates, refitted per replicate.
    Select(Vec<Family>),
}

/// Parameters of one simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Hypotheses per replicate.
    pub m: usize,
    pub mu: f64,
    pub tau: f64,
    /// Null proportion.
    pub p0: f64,
    pub dep_family: Family,
    pub dep_rotation: Rotation,
    pub analysis: AnalysisMode,
    /// Pairs used when the analysis copula is fitted.
    pub fit_subset: FitSubset,
    /// Replicates.
    pub k: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub seed: u64,
    pub gamma1_grid: Option<Vec<f64>>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            m: 8000,
            mu: 3.0,
            tau: -0.4,
            p0: 0.95,
            dep_family: Family::Clayton,
            dep_rotation: Rotation::R90,
            analysis: AnalysisMode::Oracle,
            fit_subset: FitSubset::All,
            k: 100,
            alpha: 0.05,
            lambda: 0.5,
            seed: 20240001,
            gamma1_grid: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.m < 10 {
            return bad(format!("m = {} is below 10", self.m));
        }
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return bad(format!("mu = {} must be positive", self.mu));
        }
        if !(self.tau > -1.0 && self.tau <= 0.0) {
            return bad(format!("tau = {} is outside (-1, 0]", self.tau));
        }
        if !(0.0..=1.0).contains(&self.p0) {
            return bad(format!("p0 = {} is outside [0, 1]", self.p0));
        }
        for (name, x) in [("alpha", self.alpha), ("lambda", self.lambda)] {
            if !(x > 0.0 && x < 1.0) {
                return bad(format!("{name} = {x} is outside (0, 1)"));
            }
        }
        if let Some(g) = &self.gamma1_grid {
            if g.is_empty() || g.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
                return bad("gamma1_grid must be non-empty with points in (0, 1)".into());
            }
        }
        if let FitSubset::P2Above(t) = self.fit_subset {
            if !(0.0..1.0).contains(&t) {
                return bad(format!("fit_subset threshold {t} is outside [0, 1)"));
            }
        }
        if let AnalysisMode::Select(c) = &self.analysis {
            if c.is_empty() {
                return bad("analysis.select needs at least one family".into());
            }
        }
        self.dependence()?;
        Ok(())
    }

    /// The data-generating copula.
    pub fn dependence(&self) -> Result<CopulaModel> {
        tau_to_theta(self.dep_family, self.dep_rotation, self.tau)
    }

    pub fn grid(&self) -> Vec<f64> {
        self.gamma1_grid.clone().unwrap_or_else(default_gamma1_grid)
    }
}

/// One-sample Kolmogorov-Smirnov statistic of `values` against U(0, 1).
pub fn ks_statistic_uniform(values: &[f64]) -> f64 {
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter().enumerate().fold(0.0, |d, (i, &v)| {
        let lo = v - i as f64 / n;
        let hi = (i + 1) as f64 / n - v;
        d.max(lo).max(hi)
    })
}

/// `θ_i = true` iff the alternative holds for hypothesis i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthVector(pub Vec<bool>);

impl TruthVector {
    pub fn n_alternatives(&self) -> usize {
        self.0.iter().filter(|&&t| t).count()
    }
}

/// Generator seeded by the base seed with one stream per replicate.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// `|β|` with `P(|β*| ≥ |β|) = v` under the symmetric alternative `½N(μ,1) + ½N(-μ,1)`.
pub fn alternative_abs_quantile(mu: f64, v: f64) -> Result<f64> {
    let tail = |b: f64| 0.5 * norm_sf(b - mu) + 0.5 * norm_sf(b + mu);
    // tail is decreasing in b, so bisect on its negation.
    bisect_increasing(|b| -tail(b), -0.5 * v, 0.0, mu + 40.0, 1e-15, 0.0)
}

/// One synthetic data set with its truth flags.
pub fn generate_dataset(cfg: &SimulationConfig, replicate: u64) -> Result<(HypothesisTable, TruthVector)> {
    let dep = cfg.dependence()?;
    let mut rng = replicate_rng(cfg.seed, replicate);
    let pairs = dep.sample_with(&mut rng, cfg.m)?;
    let gamma = Gamma::new(Y_SHAPE, Y_RATE).map_err(|e| Error::Config(e.to_string()))?;
    let mut truth = Vec::with_capacity(cfg.m);
    let mut beta = Vec::with_capacity(cfg.m);
    let mut ys = Vec::with_capacity(cfg.m);
    for &(u, v) in &pairs {
        let alt = rng.random::<f64>() < 1.0 - cfg.p0;
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let abs_beta = if alt {
            alternative_abs_quantile(cfg.mu, v)?
        } else {
            -norm_quantile(0.5 * v)
        };
        truth.push(alt);
        beta.push(sign * abs_beta);
        ys.push(gamma.inverse_cdf(u));
    }
    let ids: Vec<String> = (1..=cfg.m).map(|i| format!("h{i}")).collect();
    let table = build_table(&ids, &beta, &ys, &NullMixture::standard_normal())?;
    Ok((table, TruthVector(truth)))
}

/// Confusion counts of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateCounts {
    /// False rejections.
    pub v: usize,
    /// Rejections.
    pub r: usize,
    /// True rejections.
    pub s: usize,
    /// True alternatives.
    pub m1: usize,
}

impl ReplicateCounts {
    pub fn fdp(&self) -> f64 {
        self.v as f64 / self.r.max(1) as f64
    }

    pub fn tpp(&self) -> f64 {
        self.s as f64 / self.m1.max(1) as f64
    }
}

fn counts(rejected: &[bool], truth: &TruthVector) -> ReplicateCounts {
    let mut c = ReplicateCounts { v: 0, r: 0, s: 0, m1: 0 };
    for (&rej, &alt) in rejected.iter().zip(&truth.0) {
        c.m1 += usize::from(alt);
        if rej {
            c.r += 1;
            if alt {
                c.s += 1;
            } else {
                c.v += 1;
            }
        }
    }
    c
}

/// FDR and TPR estimates over the replicates of one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub method: Method,
    pub fdr_hat: f64,
    pub fdr_sd: f64,
    pub tpr_hat: f64,
    pub tpr_sd: f64,
    pub replicates: Vec<ReplicateCounts>,
}

fn kahan_mean_sd(x: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let kahan = |it: &mut dyn Iterator<Item = f64>| {
        let (mut s, mut c, mut n) = (0.0f64, 0.0f64, 0usize);
        for v in it {
            let y = v - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
            n += 1;
        }
        (s, n)
    };
    let (s, n) = kahan(&mut x.clone());
    let mean = s / n as f64;
    let (ss, _) = kahan(&mut x.map(|v| (v - mean) * (v - mean)));
    let sd = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
    (mean, sd)
}

impl MonteCarloResult {
    pub fn from_replicates(method: Method, replicates: Vec<ReplicateCounts>) -> Self {
        let (fdr_hat, fdr_sd) = kahan_mean_sd(replicates.iter().map(ReplicateCounts::fdp));
        let (tpr_hat, tpr_sd) = kahan_mean_sd(replicates.iter().map(ReplicateCounts::tpp));
        Self {
            method,
            fdr_hat,
            fdr_sd,
            tpr_hat,
            tpr_sd,
            replicates,
        }
    }
}

/// The copula the procedures use for one replicate.
pub fn analysis_model(cfg: &SimulationConfig, table: &HypothesisTable) -> Result<CopulaModel> {
    match &cfg.analysis {
        AnalysisMode::Oracle => cfg.dependence(),
        AnalysisMode::Fixed(f) => {
            let obs = pseudo_observations(table, cfg.fit_subset)?;
            let tau = crate::fit::empirical_kendall_tau(&obs);
            Ok(fit_mle(*f, rotation_for(*f, tau), &obs)?.model)
        }
        AnalysisMode::Select(c) => {
            let obs = pseudo_observations(table, cfg.fit_subset)?;
            Ok(select_copula(&obs, c)?.winner(Criterion::Bic).model)
        }
    }
}

/// Results of one cell, one entry per method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub config: SimulationConfig,
    pub results: Vec<MonteCarloResult>,
}

impl CellResult {
    pub fn get(&self, method: Method) -> Option<&MonteCarloResult> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// Storey, two-stage H and two-stage S over `cfg.k` replicates.
pub fn run_cell(cfg: &SimulationConfig) -> Result<CellResult> {
    run_cell_methods(cfg, &[Method::Storey, Method::H, Method::S])
}

/// As [`run_cell`] for a chosen set of methods.
pub fn run_cell_methods(cfg: &SimulationConfig, methods: &[Method]) -> Result<CellResult> {
    cfg.validate()?;
    let grid = cfg.grid();
    let per_rep: Vec<Vec<ReplicateCounts>> = (0..cfg.k as u64)
        .into_par_iter()
        .map(|rep| {
            let (table, truth) = generate_dataset(cfg, rep)?;
            let needs_model = methods.iter().any(|&m| m != Method::Storey);
            let model = if needs_model {
                analysis_model(cfg, &table)?
            } else {
                CopulaModel::independence()
            };
            methods
                .iter()
                .map(|&m| {
                    let out = run(m, &table, &model, cfg.alpha, cfg.lambda, &grid)?;
                    Ok(counts(&out.rejected_mask, &truth))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e: Error| Error::Numeric(format!("replicate {rep}: {e}")))
        })
        .collect::<Result<_>>()?;
    let results = methods
        .iter()
        .enumerate()
        .map(|(j, &m)| MonteCarloResult::from_replicates(m, per_rep.iter().map(|r| r[j]).collect()))
        .collect();
    Ok(CellResult {
        config: cfg.clone(),
        results,
    })
}

/// How misspecified analysis copulas are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MisspecMode {
    /// Each listed family is fitted and used regardless of fit quality.
    Fixed,
    /// Per replicate, the BIC winner between the data-generating family and the listed one.
    Refit,
}

/// One row of a misspecification table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisspecRow {
    pub family: Family,
    pub cell: CellResult,
}

/// Two-stage H and S with each analysis family in turn.
pub fn run_misspecification(cfg: &SimulationConfig, families: &[Family], mode: MisspecMode) -> Result<Vec<MisspecRow>> {
    families
        .iter()
        .map(|&f| {
            let mut c = cfg.clone();
            c.analysis = match mode {
                MisspecMode::Fixed => AnalysisMode::Fixed(f),
                MisspecMode::Refit => {
                    let mut cands = vec![cfg.dep_family];
                    if f != cfg.dep_family {
                        cands.push(f);
                    }
                    AnalysisMode::Select(cands)
                }
            };
            Ok(MisspecRow {
                family: f,
                cell: run_cell_methods(&c, &[Method::H, Method::S])?,
            })
        })
        .collect()
}

/// Win counts and criterion moments of one family in a selection study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySummary {
    pub family: Family,
    pub wins_loglik: usize,
    pub wins_aic: usize,
    pub wins_bic: usize,
    pub fits: usize,
    pub loglik_mean: f64,
    pub loglik_sd: f64,
    pub aic_mean: f64,
    pub aic_sd: f64,
    pub bic_mean: f64,
    pub bic_sd: f64,
}

/// Repeated copula selection on samples from a known copula.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionStudy {
    pub n: usize,
    pub reps: usize,
    pub truth: CopulaModel,
    pub families: Vec<FamilySummary>,
    /// Largest `|BIC - AIC - (ln n - 2)|` over all successful fits.
    pub max_penalty_gap_error: f64,
}

/// Samples `n` pairs from `truth` `reps` times and runs [`select_copula`] on each.
pub fn run_copula_selection_study(
    n: usize,
    truth: &CopulaModel,
    reps: usize,
    families: &[Family],
    seed: u64,
) -> Result<SelectionStudy> {
    if reps == 0 {
        return Err(Error::Config("reps must be positive".into()));
    }
    let reports = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(seed, rep);
            let obs = crate::copula::PseudoObservations::new(truth.sample_with(&mut rng, n)?)?;
            select_copula(&obs, families)
        })
        .collect::<Result<Vec<_>>>()?;
    let expected_gap = (n as f64).ln() - 2.0;
    let mut max_gap = 0.0f64;
    let families = families
        .iter()
        .map(|&f| {
            let mut s = FamilySummary {
                family: f,
                wins_loglik: 0,
                wins_aic: 0,
                wins_bic: 0,
                fits: 0,
                loglik_mean: f64::NAN,
                loglik_sd: f64::NAN,
                aic_mean: f64::NAN,
                aic_sd: f64::NAN,
                bic_mean: f64::NAN,
                bic_sd: f64::NAN,
            };
            let mut fits = Vec::new();
            for rep in &reports {
                let is = |i: usize| rep.candidates[i].model.family() == f;
                s.wins_loglik += usize::from(is(rep.winners.loglik));
                s.wins_aic += usize::from(is(rep.winners.aic));
                s.wins_bic += usize::from(is(rep.winners.bic));
                fits.extend(rep.candidates.iter().filter(|c| c.model.family() == f));
            }
            s.fits = fits.len();
            if !fits.is_empty() {
                (s.loglik_mean, s.loglik_sd) = kahan_mean_sd(fits.iter().map(|c| c.loglik));
                (s.aic_mean, s.aic_sd) = kahan_mean_sd(fits.iter().map(|c| c.aic));
                (s.bic_mean, s.bic_sd) = kahan_mean_sd(fits.iter().map(|c| c.bic));
            }
            for c in &fits {
                if c.model.family().n_params() == 1 {
                    max_gap = max_gap.max((c.bic - c.aic - expected_gap).abs());
                }
            }
            s
        })
        .collect();
    Ok(SelectionStudy {
        n,
        reps,
        truth: *truth,
        families,
        max_penalty_gap_error: max_gap,
    })
}

/// Writes `label, method, fdr, fdr_sd, tpr, tpr_sd` rows.
pub fn write_simtable<W: Write>(rows: &[(String, &CellResult)], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
    wtr.write_record(["label", "mu", "tau", "method", "fdr", "fdr_sd", "tpr", "tpr_sd", "k"])?;
    for (label, cell) in rows {
        for r in &cell.results {
            wtr.write_record([
                label.clone(),
                cell.config.mu.to_string(),
                cell.config.tau.to_string(),
                r.method.to_string(),
                format!("{:.4}", r.fdr_hat),
                format!("{:.4}", r.fdr_sd),
                format!("{:.4}", r.tpr_hat),
                format!("{:.4}", r.tpr_sd),
                r.replicates.len().to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Writes a selection study in the layout `family, wins_loglik, wins_aic, wins_bic, means and sds`.
pub fn write_selection_table<W: Write>(study: &SelectionStudy, w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
    for f in &study.families {
        wtr.serialize(f)?;
    }
    wtr.flush()?;
    Ok(())
}
