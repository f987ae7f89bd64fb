//! Replicate count tables, log-fold changes and the exhaustive bootstrap of
//! their standard deviation.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Upper bound on `r^r * r^r` bootstrap combinations.
pub const MAX_COMBINATIONS: usize = 1_000_000;

/// Counts of one gene under knockout and wildtype, `r` replicates each.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneCounts {
    pub id: String,
    pub ko: Vec<f64>,
    pub wt: Vec<f64>,
}

/// A replicate count table with a common replicate number.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateData {
    pub replicates: usize,
    pub genes: Vec<GeneCounts>,
}

/// Bootstrap summary of one gene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldChange {
    pub gene_id: String,
    pub beta_hat: f64,
    pub sd_boot: f64,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `log2(mean(ko) / mean(wt))`.
pub fn logfold(ko: &[f64], wt: &[f64]) -> Result<f64> {
    if ko.is_empty() || wt.is_empty() {
        return domain("logfold needs at least one replicate per condition");
    }
    let (a, b) = (mean(ko), mean(wt));
    if !(a > 0.0 && b > 0.0) {
        return domain(format!("logfold needs positive means, got KO {a} and WT {b}"));
    }
    Ok((a / b).log2())
}

fn check_combinations(r: usize) -> Result<usize> {
    let per = (r as u32)
        .checked_pow(r as u32)
        .map(|v| v as usize)
        .filter(|&v| v <= MAX_COMBINATIONS);
    match per.and_then(|p| p.checked_mul(p)).filter(|&t| t <= MAX_COMBINATIONS) {
        Some(t) => Ok(t),
        None => Err(Error::Config(format!(
            "{r} replicates give {r}^{r} x {r}^{r} combinations, more than the exhaustive cap of {MAX_COMBINATIONS}; a random bootstrap is out of scope"
        ))),
    }
}

// Means of all r^r with-replacement resamples, odometer order (last index fastest).
fn resample_means(x: &[f64]) -> Vec<f64> {
    let r = x.len();
    let total = r.pow(r as u32);
    let mut idx = vec![0usize; r];
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        let s: f64 = idx.iter().map(|&i| x[i]).sum();
        out.push(s / r as f64);
        for d in (0..r).rev() {
            idx[d] += 1;
            if idx[d] < r {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// All `r^r * r^r` bootstrap log-fold changes; KO resample outer, WT inner.
pub fn bootstrap_log_folds(ko: &[f64], wt: &[f64]) -> Result<Vec<f64>> {
    if ko.len() != wt.len() || ko.is_empty() {
        return Err(Error::Config(format!(
            "bootstrap needs equal replicate counts, got KO {} and WT {}",
            ko.len(),
            wt.len()
        )));
    }
    check_combinations(ko.len())?;
    if ko.iter().chain(wt).any(|&c| !(c.is_finite() && c > 0.0)) {
        return domain("bootstrap counts must be positive and finite");
    }
    let (mk, mw) = (resample_means(ko), resample_means(wt));
    Ok(mk.iter().flat_map(|&a| mw.iter().map(move |&b| (a / b).log2())).collect())
}

/// Sample standard deviation (n - 1 denominator) of the bootstrap log-fold
/// changes, with the number of combinations.
pub fn bootstrap_sd(ko: &[f64], wt: &[f64]) -> Result<(f64, usize)> {
    let b = bootstrap_log_folds(ko, wt)?;
    let n = b.len();
    // Shift by the first value so constant inputs give exactly zero.
    let d: Vec<f64> = b.iter().map(|x| x - b[0]).collect();
    let m = mean(&d);
    let ss: f64 = d.iter().map(|x| (x - m) * (x - m)).sum();
    let sd = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
    Ok((sd, n))
}

/// `beta_hat` and `sd_boot` for every gene, in input order.
pub fn summarize(data: &ReplicateData) -> Result<Vec<FoldChange>> {
    data.genes
        .par_iter()
        .map(|g| {
            let beta_hat = logfold(&g.ko, &g.wt)?;
            let (sd_boot, _) = bootstrap_sd(&g.ko, &g.wt)?;
            Ok(FoldChange {
                gene_id: g.id.clone(),
                beta_hat,
                sd_boot,
            })
        })
        .collect()
}

/// Opens a file, decompressing when the name ends in `.gz`.
pub fn open_maybe_gz(path: &Path) -> Result<Box<dyn Read>> {
    let f = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(MultiGzDecoder::new(f)))
    } else {
        Ok(Box::new(f))
    }
}

/// Reads a count table with header `gene_id, ko_1..ko_r, wt_1..wt_r`.
pub fn read_counts(path: &Path) -> Result<ReplicateData> {
    parse_counts(open_maybe_gz(path)?, &path.display().to_string())
}

/// Parses a count table from any reader; `name` labels errors.
pub fn parse_counts<R: Read>(reader: R, name: &str) -> Result<ReplicateData> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: name.to_string(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(h) => h?,
        None => return Err(perr(1, "file is empty".into())),
    };
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols.len() < 3 || cols.len().is_multiple_of(2) || cols[0] != "gene_id" {
        return Err(perr(1, format!("expected header gene_id, ko_1..ko_r, wt_1..wt_r; got {}", cols.join(","))));
    }
    let r = (cols.len() - 1) / 2;
    for i in 0..r {
        if cols[1 + i] != format!("ko_{}", i + 1) || cols[1 + r + i] != format!("wt_{}", i + 1) {
            return Err(perr(1, format!("expected columns ko_1..ko_{r}, wt_1..wt_{r}")));
        }
    }
    check_combinations(r)?;
    let mut seen = HashSet::new();
    let mut genes = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        if row.len() != cols.len() {
            return Err(perr(line, format!("expected {} fields, found {}", cols.len(), row.len())));
        }
        let id = row[0].trim().to_string();
        if id.is_empty() {
            return Err(perr(line, "empty gene_id".into()));
        }
        let mut vals = Vec::with_capacity(2 * r);
        for (j, field) in row.iter().enumerate().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| perr(line, format!("column {}: '{}' is not a number", cols[j], field.trim())))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(perr(line, format!("column {}: count {v} must be positive and finite", cols[j])));
            }
            vals.push(v);
        }
        if !seen.insert(id.clone()) {
            return Err(perr(line, format!("duplicate gene_id '{id}'")));
        }
        let wt = vals.split_off(r);
        genes.push(GeneCounts { id, ko: vals, wt });
    }
    if genes.is_empty() {
        return Err(perr(2, "no data rows".into()));
    }
    Ok(ReplicateData { replicates: r, genes })
}

/// Writes `gene_id, beta_hat, sd_boot` as TSV.
pub fn write_summary<W: Write>(summary: &[FoldChange], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
    for s in summary {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Per-hypothesis effect estimates and auxiliary statistics read from TSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Effects {
    pub ids: Vec<String>,
    pub beta_hat: Vec<f64>,
    pub y: Vec<f64>,
}

/// Reads a TSV with an id column (`gene_id` or `id`), `beta_hat`, and an
/// auxiliary column (`y` or `sd_boot`). Extra columns are ignored.
pub fn read_effects(path: &Path) -> Result<Effects> {
    parse_effects(open_maybe_gz(path)?, &path.display().to_string())
}

pub fn parse_effects<R: Read>(reader: R, name: &str) -> Result<Effects> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: name.to_string(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').comment(Some(b'#')).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |names: &[&str]| header.iter().position(|h| names.contains(&h.as_str()));
    let (Some(ci), Some(cb), Some(cy)) = (find(&["gene_id", "id"]), find(&["beta_hat"]), find(&["y", "sd_boot"])) else {
        return Err(perr(1, "header needs gene_id (or id), beta_hat and y (or sd_boot) columns".into()));
    };
    let mut out = Effects {
        ids: Vec::new(),
        beta_hat: Vec::new(),
        y: Vec::new(),
    };
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let num = |c: usize| -> Result<f64> {
            let s = row.get(c).unwrap_or("").trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(perr(line, format!("column {}: '{s}' is not a finite number", header[c]))),
            }
        };
        out.beta_hat.push(num(cb)?);
        out.y.push(num(cy)?);
        out.ids.push(row.get(ci).unwrap_or("").trim().to_string());
    }
    if out.ids.is_empty() {
        return Err(perr(2, "no data rows".into()));
    }
    Ok(out)
}
