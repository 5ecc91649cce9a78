//! End-to-end experiments: finite-`n` centered samples of the LCI length,
//! two-sample Kolmogorov-Smirnov comparison against the sampled limit law,
//! and the convergence table over a list of `n` values.

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::AnalysisReport;
use crate::exact::lci_length_fast;
use crate::model::{sample_word_with, Instance, RngConfig};
use crate::sampler::{sample_limit, LimitParams, LimitSampleSet, SamplerError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("empty sample set")]
    Empty,
    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Exact(#[from] crate::exact::ExactError),
}

const SALT_WORD_X: u64 = 0x574f_5244_5f58;
const SALT_WORD_Y: u64 = 0x574f_5244_5f59;
const SALT_LIMIT: u64 = 0x4c49_4d49_54;

/// Centered, scaled finite-`n` samples `(LCI_n - n e_max) / sqrt(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalZSet {
    pub samples: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub stream: u64,
    pub instance_hash: u64,
    pub e_max: f64,
}

/// Simulate `reps` independent word pairs of length `n` and center the DP
/// output by `n e_max`, scaling by `sqrt(n)`.
pub fn simulate_zn(
    inst: &Instance,
    e_max: f64,
    n: usize,
    reps: usize,
    rng: &RngConfig,
) -> Result<EmpiricalZSet, HarnessError> {
    let samples: Result<Vec<f64>, HarnessError> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rcfg = rng.substream(rep as u64);
            let mut rx = rcfg.substream(SALT_WORD_X).rng();
            let mut ry = rcfg.substream(SALT_WORD_Y).rng();
            let x = sample_word_with(&inst.px, n, &mut rx);
            let y = sample_word_with(&inst.py, n, &mut ry);
            let lci = lci_length_fast(&x, &y)?;
            Ok(center(lci, n, e_max))
        })
        .collect();
    Ok(EmpiricalZSet {
        samples: samples?,
        n,
        reps,
        seed: rng.seed,
        stream: rng.stream,
        instance_hash: inst.hash(),
        e_max,
    })
}

/// The centering applied to one DP output.
pub fn center(lci: usize, n: usize, e_max: f64) -> f64 {
    (lci as f64 - n as f64 * e_max) / (n as f64).sqrt()
}

/// Two-sample Kolmogorov-Smirnov result.
#[derive(Debug, Clone, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub n1: usize,
    pub n2: usize,
    pub p_value: f64,
}

/// Sup distance between the two empirical CDFs, with the asymptotic
/// Kolmogorov p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, HarnessError> {
    if a.is_empty() || b.is_empty() {
        return Err(HarnessError::Empty);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (n1, n2) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n1 && j < n2 {
        let t = xs[i].min(ys[j]);
        while i < n1 && xs[i] <= t {
            i += 1;
        }
        while j < n2 && ys[j] <= t {
            j += 1;
        }
        let diff = (i as f64 / n1 as f64 - j as f64 / n2 as f64).abs();
        if diff > d {
            d = diff;
        }
    }
    let ne = (n1 as f64 * n2 as f64) / (n1 as f64 + n2 as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult { statistic: d, n1, n2, p_value: kolmogorov_q(lambda) })
}

/// Critical KS distance at level `alpha`:
/// `c(alpha) sqrt((n1 + n2) / (n1 n2))` with `c(alpha) = sqrt(-ln(alpha/2)/2)`.
pub fn ks_critical_value(alpha: f64, n1: usize, n2: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n1 + n2) as f64 / (n1 as f64 * n2 as f64)).sqrt()
}

/// Kolmogorov tail `Q(λ) = 2 Σ_{k>=1} (-1)^{k-1} exp(-2 k² λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One row of the convergence table.
#[derive(Debug, Clone)]
pub struct ConvergeRow {
    pub n: usize,
    pub mean_zn: f64,
    pub ks: KsResult,
}

#[derive(Debug, Clone)]
pub struct ConvergeReport {
    pub rows: Vec<ConvergeRow>,
    pub limit: LimitSampleSet,
    /// Nonincreasing KS trend from the first to the last `n` (reported
    /// always, asserted by the caller in check mode).
    pub trend_ok: bool,
}

impl ConvergeReport {
    pub fn to_json(&self) -> Value {
        json!({
            "rows": self.rows.iter().map(|r| json!({
                "n": r.n,
                "mean_zn": r.mean_zn,
                "ks_d": r.ks.statistic,
                "p_value": r.ks.p_value,
            })).collect::<Vec<_>>(),
            "limit": {
                "case": format!("{:?}", self.limit.case),
                "reps": self.limit.reps,
                "path_steps": self.limit.path_steps,
                "grid_r": self.limit.grid_r,
            },
            "trend_ok": self.trend_ok,
        })
    }
}

/// For each `n`: simulate `Z_n`, compare against one shared sample of the
/// limit law, and tabulate mean and KS distance.
#[allow(clippy::too_many_arguments)]
pub fn converge(
    inst: &Instance,
    report: &AnalysisReport,
    ns: &[usize],
    reps: usize,
    limit_reps: usize,
    params: &LimitParams,
    rng: &RngConfig,
) -> Result<ConvergeReport, HarnessError> {
    let an = report.to_f64();
    let e_max = an.e_max;
    let limit = sample_limit(&an, params, limit_reps, &rng.substream(SALT_LIMIT))?;
    let mut rows = Vec::with_capacity(ns.len());
    for (k, &n) in ns.iter().enumerate() {
        let z = simulate_zn(inst, e_max, n, reps, &rng.substream(1 + k as u64))?;
        let ks = ks_two_sample(&z.samples, &limit.samples)?;
        let mean = z.samples.iter().sum::<f64>() / z.samples.len().max(1) as f64;
        rows.push(ConvergeRow { n, mean_zn: mean, ks });
    }
    let trend_ok = rows.len() < 2
        || rows.last().unwrap().ks.statistic <= rows.first().unwrap().ks.statistic;
    Ok(ConvergeReport { rows, limit, trend_ok })
}

/// Write samples as CSV: `# key: value` metadata comments, then one sample
/// per line. `Display` for `f64` round-trips exactly.
pub fn write_samples_csv(samples: &[f64], meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str("value\n");
    for s in samples {
        out.push_str(&format!("{s}\n"));
    }
    out
}

/// Read back a CSV written by [`write_samples_csv`].
pub fn read_samples_csv(text: &str) -> Result<(Vec<f64>, Vec<(String, String)>), HarnessError> {
    let mut samples = Vec::new();
    let mut meta = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line == "value" {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|e| HarnessError::Csv { line: idx + 1, msg: format!("{e}") })?;
        samples.push(v);
    }
    Ok((samples, meta))
}
