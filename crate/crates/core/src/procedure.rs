//! Aggregated p-values and the two-stage FDR procedures.
//!
//! The hard variant H screens on `p1 <= γ1` and replaces the surviving
//! p-values by `C(γ1, p2)`; the soft variant S uses `h(p2 | p1)`. Both are
//! uniform under the null coupling, so Storey's estimator applies unchanged.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::CopulaModel;
use crate::error::{domain, Error, Result};
use crate::marginal::HypothesisTable;
use crate::optim::bisect_increasing;

/// Which p-value a procedure thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// One-stage Storey on `p2`.
    Storey,
    /// Two-stage hard threshold, `p^H`.
    H,
    /// Two-stage soft threshold, `p^S`.
    S,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Storey => "storey",
            Method::H => "h",
            Method::S => "s",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "storey" | "one-stage" => Ok(Method::Storey),
            "h" | "hard" => Ok(Method::H),
            "s" | "soft" => Ok(Method::S),
            _ => Err(Error::Config(format!("unknown method '{s}' (expected storey, h or s)"))),
        }
    }
}

/// Aggregated p-values aligned with the hypothesis table.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedPValues {
    pub kind: Method,
    pub gamma1: Option<f64>,
    pub values: Vec<f64>,
}

/// `p_i = C(γ1, p2_i)` if `p1_i <= γ1`, else `p1_i`.
pub fn aggregate_hard(table: &HypothesisTable, model: &CopulaModel, gamma1: f64) -> Result<AggregatedPValues> {
    check_open("gamma1", gamma1)?;
    let values = table
        .records()
        .iter()
        .map(|r| if r.p1 <= gamma1 { model.cdf(gamma1, r.p2) } else { Ok(r.p1) })
        .collect::<Result<_>>()?;
    Ok(AggregatedPValues {
        kind: Method::H,
        gamma1: Some(gamma1),
        values,
    })
}

/// `p_i = h(p2_i | p1_i)`.
pub fn aggregate_soft(table: &HypothesisTable, model: &CopulaModel) -> Result<AggregatedPValues> {
    let values = table
        .records()
        .iter()
        .map(|r| model.hfunc(r.p2, r.p1))
        .collect::<Result<_>>()?;
    Ok(AggregatedPValues {
        kind: Method::S,
        gamma1: None,
        values,
    })
}

/// The `γ2` with `C(γ1, γ2) = γ`.
pub fn gamma2_from(model: &CopulaModel, gamma1: f64, gamma: f64) -> Result<f64> {
    check_open("gamma1", gamma1)?;
    if !(0.0..=1.0).contains(&gamma) {
        return domain(format!("gamma = {gamma} is outside [0, 1]"));
    }
    if gamma > gamma1 {
        return domain(format!("gamma = {gamma} exceeds C(gamma1, 1) = {gamma1}"));
    }
    if gamma == gamma1 {
        return Ok(1.0);
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let c = |x: f64| model.cdf(gamma1, x).unwrap_or(f64::NAN);
    bisect_increasing(c, gamma, 0.0, 1.0, 1e-16, 1e-13)
}

/// `π̂0 = #{p > λ} / ((1 - λ) M)`, capped at 1.
pub fn estimate_pi0(values: &[f64], lambda: f64) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let above = values.iter().filter(|&&p| p > lambda).count() as f64;
    (above / ((1.0 - lambda) * values.len() as f64)).min(1.0)
}

/// `π̂0 γ M / max(R(γ), 1)` with `R(γ) = #{p <= γ}`.
pub fn estimate_fdr(values: &[f64], gamma: f64, pi0: f64) -> f64 {
    let r = values.iter().filter(|&&p| p <= gamma).count().max(1) as f64;
    pi0 * gamma * values.len() as f64 / r
}

/// Threshold chosen by [`select_gamma`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaSelection {
    pub gamma_hat: f64,
    pub pi0_hat: f64,
    pub rejected: usize,
}

/// Largest observed p-value whose estimated FDR is at most `alpha`.
///
/// `alpha = 0` rejects nothing, even p-values that are exactly zero.
pub fn select_gamma(values: &[f64], alpha: f64, lambda: f64) -> Result<GammaSelection> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha = {alpha} is outside [0, 1]"));
    }
    check_open("lambda", lambda)?;
    if values.is_empty() {
        return Err(Error::Config("no p-values to threshold".into()));
    }
    if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return domain("p-values must lie in [0, 1]");
    }
    let pi0 = estimate_pi0(values, lambda);
    if alpha == 0.0 {
        return Ok(GammaSelection {
            gamma_hat: 0.0,
            pi0_hat: pi0,
            rejected: 0,
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    // Walk down from the largest value; at the last index of a tie run R(γ) = index + 1.
    for k in (0..sorted.len()).rev() {
        if k + 1 < sorted.len() && sorted[k + 1] == sorted[k] {
            continue;
        }
        let gamma = sorted[k];
        let r = (k + 1) as f64;
        if pi0 * gamma * m / r <= alpha {
            return Ok(GammaSelection {
                gamma_hat: gamma,
                pi0_hat: pi0,
                rejected: k + 1,
            });
        }
    }
    Ok(GammaSelection {
        gamma_hat: 0.0,
        pi0_hat: pi0,
        rejected: 0,
    })
}

/// Default γ1 grid: 0.005, 0.010, ..., 0.995, then 0.9960, 0.9965, ..., 0.9995.
pub fn default_gamma1_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (1..=199).map(|k| k as f64 / 200.0).collect();
    g.extend((0..8).map(|j| (9960 + 5 * j) as f64 / 10_000.0));
    g
}

/// Rejection count at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma1Count {
    pub gamma1: f64,
    pub rejections: usize,
}

/// Final result of one procedure run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcedureOutcome {
    pub method: Method,
    pub alpha: f64,
    pub lambda: f64,
    pub pi0_hat: f64,
    pub gamma_hat: f64,
    pub gamma1_hat: Option<f64>,
    pub n_hypotheses: usize,
    pub n_rejected: usize,
    pub rejected: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rejections_by_gamma1: Vec<Gamma1Count>,
    /// Aggregated p-value per hypothesis, in table order.
    #[serde(skip)]
    pub aggregated: Vec<f64>,
    /// Rejection flag per hypothesis, in table order.
    #[serde(skip)]
    pub rejected_mask: Vec<bool>,
}

impl ProcedureOutcome {
    fn build(
        table: &HypothesisTable,
        method: Method,
        alpha: f64,
        lambda: f64,
        agg: AggregatedPValues,
        curve: Vec<Gamma1Count>,
    ) -> Result<Self> {
        let sel = select_gamma(&agg.values, alpha, lambda)?;
        let mask: Vec<bool> = agg.values.iter().map(|&p| p <= sel.gamma_hat && sel.rejected > 0).collect();
        let rejected = table
            .records()
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(r, _)| r.id.clone())
            .collect::<Vec<_>>();
        debug_assert_eq!(rejected.len(), sel.rejected);
        Ok(Self {
            method,
            alpha,
            lambda,
            pi0_hat: sel.pi0_hat,
            gamma_hat: sel.gamma_hat,
            gamma1_hat: agg.gamma1,
            n_hypotheses: table.len(),
            n_rejected: rejected.len(),
            rejected,
            rejections_by_gamma1: curve,
            aggregated: agg.values,
            rejected_mask: mask,
        })
    }

    /// Per-hypothesis TSV: `id, p1, p2, p_aggregated, rejected`.
    pub fn write_decisions<W: Write>(&self, table: &HypothesisTable, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
        wtr.write_record(["id", "p1", "p2", "p_aggregated", "rejected"])?;
        for ((r, p), &rej) in table.records().iter().zip(&self.aggregated).zip(&self.rejected_mask) {
            wtr.write_record([
                r.id.clone(),
                r.p1.to_string(),
                r.p2.to_string(),
                p.to_string(),
                u8::from(rej).to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Two-column TSV `gamma1, rejections` of the H grid search.
    pub fn write_gamma1_curve<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
        for c in &self.rejections_by_gamma1 {
            wtr.serialize(c)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Algorithm 1: scan the γ1 grid, keep the γ1 with most rejections (ties to the smallest γ1).
pub fn run_two_stage_h(
    table: &HypothesisTable,
    model: &CopulaModel,
    alpha: f64,
    lambda: f64,
    gamma1_grid: &[f64],
) -> Result<ProcedureOutcome> {
    if gamma1_grid.is_empty() {
        return Err(Error::Config("gamma1 grid is empty".into()));
    }
    for &g in gamma1_grid {
        check_open("gamma1 grid point", g)?;
    }
    let curve = gamma1_grid
        .par_iter()
        .map(|&g1| {
            let agg = aggregate_hard(table, model, g1)?;
            let sel = select_gamma(&agg.values, alpha, lambda)?;
            Ok(Gamma1Count {
                gamma1: g1,
                rejections: sel.rejected,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = curve
        .iter()
        .copied()
        .reduce(|a, b| {
            if b.rejections > a.rejections || (b.rejections == a.rejections && b.gamma1 < a.gamma1) {
                b
            } else {
                a
            }
        })
        .expect("non-empty grid");
    let agg = aggregate_hard(table, model, best.gamma1)?;
    ProcedureOutcome::build(table, Method::H, alpha, lambda, agg, curve)
}

/// Algorithm 2: threshold `h(p2 | p1)`.
pub fn run_two_stage_s(table: &HypothesisTable, model: &CopulaModel, alpha: f64, lambda: f64) -> Result<ProcedureOutcome> {
    let agg = aggregate_soft(table, model)?;
    ProcedureOutcome::build(table, Method::S, alpha, lambda, agg, Vec::new())
}

/// Storey's one-stage procedure on `p2`.
pub fn run_one_stage_storey(table: &HypothesisTable, alpha: f64, lambda: f64) -> Result<ProcedureOutcome> {
    let agg = AggregatedPValues {
        kind: Method::Storey,
        gamma1: None,
        values: table.p2(),
    };
    ProcedureOutcome::build(table, Method::Storey, alpha, lambda, agg, Vec::new())
}

/// Dispatches on `method`; `model` and `grid` are ignored where unused.
pub fn run(
    method: Method,
    table: &HypothesisTable,
    model: &CopulaModel,
    alpha: f64,
    lambda: f64,
    gamma1_grid: &[f64],
) -> Result<ProcedureOutcome> {
    match method {
        Method::Storey => run_one_stage_storey(table, alpha, lambda),
        Method::H => run_two_stage_h(table, model, alpha, lambda, gamma1_grid),
        Method::S => run_two_stage_s(table, model, alpha, lambda),
    }
}

fn check_open(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        domain(format!("{name} = {x} is outside (0, 1)"))
    }
}
