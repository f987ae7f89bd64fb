//! Marginal models: the Gaussian-mixture null of the primary statistic, the
//! empirical CDF of the auxiliary statistic, and the per-hypothesis table of
//! marginal p-values.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::optim::bisect_increasing;
use crate::special::{norm_cdf, norm_quantile, norm_sf};

/// Null density of the primary statistic, `f0(β) = Σ w_k φ((β - μ_k) / σ_k) / σ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture", into = "RawMixture")]
pub struct NullMixture {
    weights: Vec<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMixture {
    weights: Vec<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

impl TryFrom<RawMixture> for NullMixture {
    type Error = Error;

    fn try_from(r: RawMixture) -> Result<Self> {
        NullMixture::new(r.weights, r.means, r.sds)
    }
}

impl From<NullMixture> for RawMixture {
    fn from(m: NullMixture) -> Self {
        RawMixture {
            weights: m.weights,
            means: m.means,
            sds: m.sds,
        }
    }
}

impl Default for NullMixture {
    /// The two-component null fitted to the yeast knockout data:
    /// `0.615 N(0, 0.063²) + 0.385 N(-0.002, 0.205²)`.
    fn default() -> Self {
        Self {
            weights: vec![0.615, 0.385],
            means: vec![0.0, -0.002],
            sds: vec![0.063, 0.205],
        }
    }
}

impl NullMixture {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || sds.len() != k {
            return Err(Error::Config(format!(
                "mixture needs equal, non-zero component counts (weights {k}, means {}, sds {})",
                means.len(),
                sds.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config("mixture weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("mixture weights sum to {total}, not 1")));
        }
        if means.iter().any(|m| !m.is_finite()) || sds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Config("mixture means must be finite and sds positive".into()));
        }
        Ok(Self { weights, means, sds })
    }

    /// Single standard normal component.
    pub fn standard_normal() -> Self {
        Self {
            weights: vec![1.0],
            means: vec![0.0],
            sds: vec![1.0],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sds(&self) -> &[f64] {
        &self.sds
    }

    fn components(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((&w, &m), &s)| (w, m, s))
    }

    /// F0(β).
    pub fn cdf(&self, beta: f64) -> f64 {
        let p: f64 = self.components().map(|(w, m, s)| w * norm_cdf((beta - m) / s)).sum();
        p.clamp(0.0, 1.0)
    }

    /// 1 - F0(β), accurate in the upper tail.
    pub fn sf(&self, beta: f64) -> f64 {
        let p: f64 = self.components().map(|(w, m, s)| w * norm_sf((beta - m) / s)).sum();
        p.clamp(0.0, 1.0)
    }

    /// F0⁻¹(q) for `q ∈ (0, 1)`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return domain(format!("quantile level {q} is outside (0, 1)"));
        }
        let lo = self.components().map(|(_, m, s)| m - 40.0 * s).fold(f64::INFINITY, f64::min);
        let hi = self.components().map(|(_, m, s)| m + 40.0 * s).fold(f64::NEG_INFINITY, f64::max);
        if q > 0.5 {
            // Solve on the survival function for precision near 1.
            let x = bisect_increasing(|b| -self.sf(b), q - 1.0, lo, hi, 1e-15, 0.0)?;
            return Ok(x);
        }
        bisect_increasing(|b| self.cdf(b), q, lo, hi, 1e-15, 0.0)
    }

    /// Draws `n` values from the mixture.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let pick: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = self.weights.len() - 1;
                for (i, w) in self.weights.iter().enumerate() {
                    acc += w;
                    if pick < acc {
                        k = i;
                        break;
                    }
                }
                let z = norm_quantile(rng.sample::<f64, _>(Open01));
                self.means[k] + self.sds[k] * z
            })
            .collect()
    }

    /// Primary p-value of `beta_hat` for the requested tail.
    pub fn p_value(&self, beta_hat: f64, tail: Tail) -> f64 {
        match tail {
            Tail::TwoSided => (2.0 * self.cdf(beta_hat).min(self.sf(beta_hat))).min(1.0),
            Tail::Left => self.cdf(beta_hat),
            Tail::Right => self.sf(beta_hat),
        }
    }
}

/// F0(β) for the mixture.
pub fn mixture_cdf(m: &NullMixture, beta: f64) -> f64 {
    m.cdf(beta)
}

/// F0⁻¹(q) for the mixture.
pub fn mixture_quantile(m: &NullMixture, q: f64) -> Result<f64> {
    m.quantile(q)
}

/// `2 min(F0(β̂), 1 - F0(β̂))`.
pub fn p_two_sided(m: &NullMixture, beta_hat: f64) -> f64 {
    m.p_value(beta_hat, Tail::TwoSided)
}

/// Which tail of the null defines the primary p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    #[default]
    TwoSided,
    Left,
    Right,
}

impl std::str::FromStr for Tail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "two-sided" | "two_sided" | "both" => Ok(Tail::TwoSided),
            "left" | "lower" => Ok(Tail::Left),
            "right" | "upper" => Ok(Tail::Right),
            _ => Err(Error::Config(format!("unknown tail '{s}'"))),
        }
    }
}

/// Right-continuous empirical CDF, `H(y) = #{y_j <= y} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return domain("empirical CDF needs at least one value");
        }
        if values.iter().any(|v| v.is_nan()) {
            return domain("empirical CDF values must not be NaN");
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// H(y) without clamping.
    pub fn eval(&self, y: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= y) as f64 / self.n() as f64
    }

    /// Smallest sample value `x` with `H(x) >= q`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return domain(format!("quantile level {q} is outside [0, 1]"));
        }
        let k = ((q * self.n() as f64).ceil() as usize).clamp(1, self.n());
        Ok(self.sorted[k - 1])
    }
}

/// `H(y)` clamped into `[1/(n+1), n/(n+1)]` so it can serve as a pseudo-observation.
pub fn empirical_p1(cdf: &EmpiricalCdf, y: f64) -> f64 {
    let n = cdf.n() as f64;
    cdf.eval(y).clamp(1.0 / (n + 1.0), n / (n + 1.0))
}

/// One hypothesis: estimate, auxiliary statistic and both marginal p-values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    pub id: String,
    pub beta_hat: f64,
    pub y: f64,
    pub p1: f64,
    pub p2: f64,
}

/// All hypotheses under test, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisTable {
    records: Vec<HypothesisRecord>,
}

impl HypothesisTable {
    /// Validates ids are unique and p-values lie in [0, 1].
    pub fn from_records(records: Vec<HypothesisRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Config("hypothesis table is empty".into()));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Config(format!("duplicate hypothesis id '{}'", r.id)));
            }
            if !((0.0..=1.0).contains(&r.p1) && (0.0..=1.0).contains(&r.p2)) {
                return domain(format!("hypothesis '{}' has p-values outside [0, 1]", r.id));
            }
        }
        Ok(Self { records })
    }

    /// Builds a table from `(p1, p2)` pairs with ids `h1, h2, ...`; used by the simulator.
    pub fn from_pvalues(p1: &[f64], p2: &[f64]) -> Result<Self> {
        if p1.len() != p2.len() {
            return Err(Error::Config("p1 and p2 lengths differ".into()));
        }
        let records = p1
            .iter()
            .zip(p2)
            .enumerate()
            .map(|(i, (&a, &b))| HypothesisRecord {
                id: format!("h{}", i + 1),
                beta_hat: f64::NAN,
                y: f64::NAN,
                p1: a,
                p2: b,
            })
            .collect();
        Self::from_records(records)
    }

    pub fn records(&self) -> &[HypothesisRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn p1(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p1).collect()
    }

    pub fn p2(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p2).collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }

    /// Writes `id, beta_hat, y, p1, p2` as TSV. Floats use the shortest round-trip form.
    pub fn write_tsv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
        for r in &self.records {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_tsv<R: Read>(r: R, path: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').comment(Some(b'#')).from_reader(r);
        let mut records = Vec::new();
        for (i, row) in rdr.deserialize().enumerate() {
            let rec: HypothesisRecord = row.map_err(|e| Error::Parse {
                path: path.to_string(),
                line: i + 2,
                msg: e.to_string(),
            })?;
            records.push(rec);
        }
        Self::from_records(records)
    }

    pub fn read_tsv_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_tsv(std::io::BufReader::new(f), &path.display().to_string())
    }
}

/// Computes p1 from the empirical CDF of `ys` and p2 from the null mixture.
pub fn build_table(ids: &[String], beta_hats: &[f64], ys: &[f64], m: &NullMixture) -> Result<HypothesisTable> {
    build_table_with_tail(ids, beta_hats, ys, m, Tail::TwoSided)
}

/// As [`build_table`] with an explicit tail for p2.
pub fn build_table_with_tail(
    ids: &[String],
    beta_hats: &[f64],
    ys: &[f64],
    m: &NullMixture,
    tail: Tail,
) -> Result<HypothesisTable> {
    if ids.len() != beta_hats.len() || ids.len() != ys.len() {
        return Err(Error::Config(format!(
            "length mismatch: {} ids, {} estimates, {} auxiliary values",
            ids.len(),
            beta_hats.len(),
            ys.len()
        )));
    }
    if beta_hats.iter().any(|b| b.is_nan()) {
        return domain("effect estimates must not be NaN");
    }
    let h = EmpiricalCdf::new(ys)?;
    let records = ids
        .iter()
        .zip(beta_hats)
        .zip(ys)
        .map(|((id, &b), &y)| HypothesisRecord {
            id: id.clone(),
            beta_hat: b,
            y,
            p1: empirical_p1(&h, y),
            p2: m.p_value(b, tail),
        })
        .collect();
    HypothesisTable::from_records(records)
}
