//! Maximum-likelihood copula fitting and selection by LogLik, AIC and BIC.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaModel, Family, PseudoObservations, Rotation, BOUNDARY_EPS};
use crate::error::{Error, Result};
use crate::marginal::HypothesisTable;
use crate::optim::brent_maximize;

/// Smallest sample accepted by [`fit_mle`].
pub const MIN_FIT_N: usize = 10;

const XTOL: f64 = 1e-8;
const MAX_ITER: usize = 500;

/// Kendall's τ between two equal-length samples, ties counted as neither
/// concordant nor discordant. Knight's O(n log n) algorithm.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Config(format!("kendall_tau: lengths {} and {} differ", n, y.len())));
    }
    if n < 2 {
        return Err(Error::Domain("kendall_tau needs at least two pairs".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Domain("kendall_tau: NaN input".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |len: u64| len * len.saturating_sub(1) / 2;
    let (mut tied_x, mut tied_xy) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                tied_xy += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            tied_x += pairs(run_x);
            tied_xy += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tied_x += pairs(run_x);
    tied_xy += pairs(run_xy);

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut tied_y = 0u64;
    let mut run = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            tied_y += pairs(run);
            run = 1;
        }
    }
    tied_y += pairs(run);

    let total = pairs(n as u64);
    // concordant - discordant = (total - tied_x - tied_y + tied_xy) - 2 * discordant
    let num = total as f64 - tied_x as f64 - tied_y as f64 + tied_xy as f64 - 2.0 * swaps as f64;
    Ok(num / total as f64)
}

// Bottom-up merge sort returning the number of inversions.
fn merge_count(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if a[j] < a[i] {
                    buf[k] = a[j];
                    swaps += (mid - i) as u64;
                    j += 1;
                } else {
                    buf[k] = a[i];
                    i += 1;
                }
                k += 1;
            }
            buf[k..k + mid - i].copy_from_slice(&a[i..mid]);
            k += mid - i;
            buf[k..k + hi - j].copy_from_slice(&a[j..hi]);
            lo = hi;
        }
        a.copy_from_slice(buf);
        width *= 2;
    }
    swaps
}

/// Kendall's τ of a set of pseudo-observations.
pub fn empirical_kendall_tau(obs: &PseudoObservations) -> f64 {
    let (u, v): (Vec<f64>, Vec<f64>) = obs.pairs().iter().copied().unzip();
    kendall_tau(&u, &v).expect("pseudo-observations are valid input")
}

/// A fitted copula with its information criteria.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: CopulaModel,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
    pub converged: bool,
}

impl FitResult {
    /// Fills AIC and BIC from the log-likelihood.
    pub fn new(model: CopulaModel, loglik: f64, n: usize, converged: bool) -> Self {
        let k = model.family().n_params() as f64;
        Self {
            model,
            loglik,
            aic: -2.0 * loglik + 2.0 * k,
            bic: -2.0 * loglik + k * (n as f64).ln(),
            n,
            converged,
        }
    }
}

/// Σ ln c(u_i, v_i) with compensated summation.
pub fn log_likelihood(model: &CopulaModel, obs: &PseudoObservations) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &(u, v) in obs.pairs() {
        let y = model.log_density_unchecked(u, v) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

fn bracket(family: Family) -> &'static [(f64, f64)] {
    match family {
        Family::Independence => &[],
        Family::Gaussian => &[(-0.9999, 0.9999)],
        Family::Frank => &[(-50.0, -1e-6), (1e-6, 50.0)],
        Family::Clayton => &[(1e-4, 50.0)],
        Family::Gumbel | Family::Joe => &[(1.0 + 1e-6, 50.0)],
    }
}

/// Maximum-likelihood fit of one family and rotation.
pub fn fit_mle(family: Family, rotation: Rotation, obs: &PseudoObservations) -> Result<FitResult> {
    let n = obs.n();
    if n < MIN_FIT_N {
        return Err(Error::Fit(format!("{family}: need at least {MIN_FIT_N} observations, got {n}")));
    }
    if !family.allows_rotation(rotation) {
        return Err(Error::Fit(format!("{family} does not support rotation {rotation}")));
    }
    if family == Family::Independence {
        return Ok(FitResult::new(CopulaModel::independence(), 0.0, n, true));
    }
    let objective = |theta: f64| match CopulaModel::new(family, rotation, theta) {
        Ok(m) => log_likelihood(&m, obs),
        Err(_) => f64::NEG_INFINITY,
    };
    let best = bracket(family)
        .iter()
        .map(|&(a, b)| brent_maximize(objective, a, b, XTOL, MAX_ITER))
        .filter(|m| m.value.is_finite())
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::Fit(format!("{family} {rotation}: log-likelihood is not finite anywhere in the bracket")))?;
    if !best.converged {
        return Err(Error::Fit(format!(
            "{family} {rotation}: optimiser did not converge after {} evaluations (last theta {})",
            best.evaluations, best.x
        )));
    }
    let model = CopulaModel::new(family, rotation, best.x)?;
    Ok(FitResult::new(model, best.value, n, true))
}

/// Rotation used for a family given the sign of the sample Kendall τ.
pub fn rotation_for(family: Family, tau: f64) -> Rotation {
    if family.is_archimedean_rotatable() && tau < 0.0 {
        Rotation::R90
    } else {
        Rotation::None
    }
}

/// A candidate whose fit failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedFit {
    pub family: Family,
    pub rotation: Rotation,
    pub error: String,
}

/// Per-criterion winners among the successfully fitted candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Winners {
    pub loglik: usize,
    pub aic: usize,
    pub bic: usize,
}

/// Result of fitting a list of candidate families to one data set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub kendall_tau: f64,
    pub candidates: Vec<FitResult>,
    pub failures: Vec<FailedFit>,
    pub winners: Winners,
}

/// Model-selection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    LogLik,
    Aic,
    #[default]
    Bic,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "loglik" => Ok(Criterion::LogLik),
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            _ => Err(Error::Config(format!("unknown criterion '{s}'"))),
        }
    }
}

impl SelectionReport {
    pub fn winner(&self, criterion: Criterion) -> &FitResult {
        let i = match criterion {
            Criterion::LogLik => self.winners.loglik,
            Criterion::Aic => self.winners.aic,
            Criterion::Bic => self.winners.bic,
        };
        &self.candidates[i]
    }

    /// Plain-text table with columns Family, LogLik, AIC, BIC.
    pub fn to_text_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<18} {:>8} {:>14} {:>14} {:>14}", "Family", "theta", "LogLik", "AIC", "BIC");
        for c in &self.candidates {
            let _ = writeln!(
                s,
                "{:<18} {:>8.4} {:>14.3} {:>14.3} {:>14.3}",
                c.model.label(),
                c.model.theta(),
                c.loglik,
                c.aic,
                c.bic
            );
        }
        for f in &self.failures {
            let _ = writeln!(s, "{:<18} failed: {}", format!("{} {}", f.family, f.rotation), f.error);
        }
        s
    }
}

/// Fits every candidate family, choosing Archimedean rotations from the sign of τ̂.
pub fn select_copula(obs: &PseudoObservations, families: &[Family]) -> Result<SelectionReport> {
    if families.is_empty() {
        return Err(Error::Config("no candidate families".into()));
    }
    let tau = empirical_kendall_tau(obs);
    let fits: Vec<(Family, Rotation, Result<FitResult>)> = families
        .par_iter()
        .map(|&f| {
            let r = rotation_for(f, tau);
            (f, r, fit_mle(f, r, obs))
        })
        .collect();
    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for (family, rotation, res) in fits {
        match res {
            Ok(fr) => candidates.push(fr),
            Err(e) => failures.push(FailedFit {
                family,
                rotation,
                error: e.to_string(),
            }),
        }
    }
    if candidates.is_empty() {
        return Err(Error::Fit("every candidate fit failed".into()));
    }
    let argbest = |key: &dyn Fn(&FitResult) -> f64| {
        let mut best = 0;
        for (i, c) in candidates.iter().enumerate() {
            if key(c) > key(&candidates[best]) {
                best = i;
            }
        }
        best
    };
    let winners = Winners {
        loglik: argbest(&|c| c.loglik),
        aic: argbest(&|c| -c.aic),
        bic: argbest(&|c| -c.bic),
    };
    Ok(SelectionReport {
        kendall_tau: tau,
        candidates,
        failures,
        winners,
    })
}

/// Which hypotheses contribute pairs to the copula fit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitSubset {
    /// Every hypothesis.
    #[default]
    All,
    /// Only hypotheses with `p2` above a threshold, i.e. the presumed nulls.
    P2Above(f64),
}

/// Pseudo-observations `(p1, p2)` from a table, clamped to `[ε, 1 - ε]`.
pub fn pseudo_observations(table: &HypothesisTable, subset: FitSubset) -> Result<PseudoObservations> {
    let pairs: Vec<(f64, f64)> = table
        .records()
        .iter()
        .filter(|r| match subset {
            FitSubset::All => true,
            FitSubset::P2Above(t) => r.p2 > t,
        })
        .map(|r| (r.p1, r.p2))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Fit("no hypotheses left for copula fitting".into()));
    }
    PseudoObservations::clamped(pairs, BOUNDARY_EPS)
}
