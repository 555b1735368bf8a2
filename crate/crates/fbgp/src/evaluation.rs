//! Learning-curve aggregation and the relative decrease in AUC.
//!
//! A criterion's overall quality over a run is the trapezoidal area under
//! its loss curve. Comparing a candidate criterion against a baseline uses
//! the relative decrease in AUC, a ratio statistic estimated without bias
//! over all R×R ordered pairs of (baseline run, candidate run):
//!
//! ```text
//! n[b,c] = AUC_b − AUC_c          d[b,c] = AUC_b − AUC_bound
//! mean   = μ_n / μ_d
//! var    = (1/R)(σ_n²/μ_d² + μ_n²σ_d²/μ_d⁴ − 2 μ_n σ_nd/μ_d³)
//! ```
//!
//! with moments taken over the R² pair lists and R the runs per criterion.
//! RMSE curves use the natural bound 0; NLML curves are bounded by the
//! lowest value seen across every criterion so the ratio stays interpretable.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Nlml,
    Rmse,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Nlml => "nlml",
            Metric::Rmse => "rmse",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nlml" => Ok(Metric::Nlml),
            "rmse" => Ok(Metric::Rmse),
            other => Err(Error::invalid(format!("unknown metric '{other}'"))),
        }
    }
}

/// R runs × T iterations of one metric for one criterion.
#[derive(Debug, Clone)]
pub struct CurveSet {
    pub metric: Metric,
    pub criterion: String,
    pub curves: Array2<f64>,
}

impl CurveSet {
    pub fn new(metric: Metric, criterion: impl Into<String>, curves: Array2<f64>) -> Result<Self> {
        if curves.nrows() == 0 || curves.ncols() == 0 {
            return Err(Error::invalid("curve set must be non-empty"));
        }
        if !curves.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("curve set"));
        }
        Ok(CurveSet {
            metric,
            criterion: criterion.into(),
            curves,
        })
    }

    pub fn runs(&self) -> usize {
        self.curves.nrows()
    }

    pub fn iterations(&self) -> usize {
        self.curves.ncols()
    }

    pub fn aucs(&self) -> Vec<f64> {
        (0..self.runs())
            .map(|r| auc(self.curves.row(r).as_slice().expect("contiguous row")))
            .collect()
    }
}

/// Trapezoidal area under a curve over the iteration index.
pub fn auc(curve: &[f64]) -> f64 {
    curve
        .windows(2)
        .map(|pair| 0.5 * (pair[0] + pair[1]))
        .sum()
}

/// Metric lower bound: 0 for RMSE; for NLML the smallest value observed
/// across every curve of every criterion.
pub fn lower_bound(metric: Metric, all_criteria: &[&CurveSet]) -> f64 {
    match metric {
        Metric::Rmse => 0.0,
        Metric::Nlml => all_criteria
            .iter()
            .flat_map(|set| set.curves.iter().copied())
            .fold(f64::INFINITY, f64::min),
    }
}

/// Relative-decrease-in-AUC statistics for one candidate vs one baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RdAucResult {
    /// Relative decrease as a fraction (0.5 = candidate halves the area).
    pub mean: f64,
    pub variance: f64,
    pub lower_bound_used: f64,
    pub baseline: String,
    pub criterion: String,
}

/// Pair-level estimator on precomputed AUCs; `bound_auc` is the AUC of the
/// constant bound curve so the units match.
pub fn rd_auc_from_aucs(
    baseline_aucs: &[f64],
    candidate_aucs: &[f64],
    bound_auc: f64,
) -> Result<(f64, f64)> {
    let r = baseline_aucs.len();
    if r == 0 || candidate_aucs.len() != r {
        return Err(Error::invalid(
            "RD-AUC needs the same positive run count for baseline and candidate",
        ));
    }
    let mut n = Vec::with_capacity(r * r);
    let mut d = Vec::with_capacity(r * r);
    for &auc_b in baseline_aucs {
        for &auc_c in candidate_aucs {
            n.push(auc_b - auc_c);
            d.push(auc_b - bound_auc);
        }
    }
    let count = (r * r) as f64;
    // Pair-list means, computed through the algebraic identity
    // mean(n) = mean(b) − mean(c) so a self-comparison is exactly zero.
    let mean_b = baseline_aucs.iter().sum::<f64>() / r as f64;
    let mean_c = candidate_aucs.iter().sum::<f64>() / r as f64;
    let mu_n = mean_b - mean_c;
    let mu_d = mean_b - bound_auc;
    if mu_d <= 0.0 {
        return Err(Error::DegenerateDenominator { mu_d });
    }
    let mut var_n = 0.0;
    let mut var_d = 0.0;
    let mut cov_nd = 0.0;
    for i in 0..n.len() {
        let dn = n[i] - mu_n;
        let dd = d[i] - mu_d;
        var_n += dn * dn;
        var_d += dd * dd;
        cov_nd += dn * dd;
    }
    var_n /= count;
    var_d /= count;
    cov_nd /= count;

    let mean = mu_n / mu_d;
    let variance = (var_n / (mu_d * mu_d) + mu_n * mu_n * var_d / mu_d.powi(4)
        - 2.0 * mu_n * cov_nd / mu_d.powi(3))
        / r as f64;
    Ok((mean, variance))
}

/// Relative decrease in AUC of `candidate` vs `baseline` with the scalar
/// metric bound applied as a constant curve.
pub fn rd_auc(baseline: &CurveSet, candidate: &CurveSet, bound: f64) -> Result<RdAucResult> {
    if baseline.iterations() != candidate.iterations() {
        return Err(Error::DimensionMismatch {
            what: "curve iterations",
            expected: baseline.iterations(),
            got: candidate.iterations(),
        });
    }
    if baseline.metric != candidate.metric {
        return Err(Error::invalid("curve sets measure different metrics"));
    }
    let bound_auc = bound * (baseline.iterations() as f64 - 1.0);
    let (mean, variance) = rd_auc_from_aucs(&baseline.aucs(), &candidate.aucs(), bound_auc)?;
    Ok(RdAucResult {
        mean,
        variance,
        lower_bound_used: bound,
        baseline: baseline.criterion.clone(),
        criterion: candidate.criterion.clone(),
    })
}

/// All curves of one campaign for one metric, keyed (simulator, criterion).
#[derive(Debug, Clone, Default)]
pub struct CampaignCurves {
    pub by_cell: BTreeMap<(String, String), CurveSet>,
}

impl CampaignCurves {
    pub fn insert(&mut self, simulator: impl Into<String>, set: CurveSet) {
        self.by_cell
            .insert((simulator.into(), set.criterion.clone()), set);
    }

    pub fn simulators(&self) -> Vec<String> {
        let mut names: Vec<String> = self.by_cell.keys().map(|(s, _)| s.clone()).collect();
        names.dedup();
        names
    }

    pub fn criteria(&self) -> Vec<String> {
        let mut names: Vec<String> = self.by_cell.keys().map(|(_, c)| c.clone()).collect();
        names.sort();
        names.dedup();
        names
    }
}

/// Cross-simulator summary per criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverallRow {
    pub criterion: String,
    /// Mean over simulators of the per-simulator RD-AUC means (fractions).
    pub mean: f64,
    pub median: f64,
    /// Population std over simulators of the per-simulator means.
    pub std: f64,
}

/// The report table: per-cell RD-AUC plus overall rows, all as fractions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryTable {
    pub metric: Metric,
    pub baseline: String,
    pub simulators: Vec<String>,
    pub criteria: Vec<String>,
    /// Cell per (simulator, criterion); `None` marks a gap (missing data or
    /// a degenerate denominator).
    pub cells: BTreeMap<String, Option<RdAucResult>>,
    pub overall: Vec<OverallRow>,
}

pub fn cell_key(simulator: &str, criterion: &str) -> String {
    format!("{simulator}/{criterion}")
}

/// Per-simulator RD-AUC of every criterion vs the baseline, plus the
/// cross-simulator mean/median rows. Missing cells are gaps, not errors.
pub fn summarize(curves: &CampaignCurves, metric: Metric, baseline: &str) -> Result<SummaryTable> {
    let simulators = curves.simulators();
    let criteria = curves.criteria();
    if !criteria.iter().any(|c| c == baseline) {
        return Err(Error::invalid(format!(
            "baseline criterion '{baseline}' absent from the campaign"
        )));
    }

    let mut cells: BTreeMap<String, Option<RdAucResult>> = BTreeMap::new();
    for sim in &simulators {
        let sim_sets: Vec<&CurveSet> = criteria
            .iter()
            .filter_map(|c| curves.by_cell.get(&(sim.clone(), c.clone())))
            .collect();
        let bound = lower_bound(metric, &sim_sets);
        let base_set = curves.by_cell.get(&(sim.clone(), baseline.to_string()));
        for criterion in &criteria {
            let key = cell_key(sim, criterion);
            let cand_set = curves.by_cell.get(&(sim.clone(), criterion.clone()));
            let cell = match (base_set, cand_set) {
                (Some(b), Some(c)) => rd_auc(b, c, bound).ok(),
                _ => None,
            };
            cells.insert(key, cell);
        }
    }

    let mut overall = Vec::new();
    for criterion in &criteria {
        let mut means: Vec<f64> = simulators
            .iter()
            .filter_map(|sim| {
                cells
                    .get(&cell_key(sim, criterion))
                    .and_then(|c| c.as_ref())
                    .map(|c| c.mean)
            })
            .collect();
        if means.is_empty() {
            continue;
        }
        means.sort_by(|a, b| a.total_cmp(b));
        let k = means.len();
        let mean = means.iter().sum::<f64>() / k as f64;
        let median = if k % 2 == 1 {
            means[k / 2]
        } else {
            0.5 * (means[k / 2 - 1] + means[k / 2])
        };
        let std = (means.iter().map(|&m| (m - mean).powi(2)).sum::<f64>() / k as f64).sqrt();
        overall.push(OverallRow {
            criterion: criterion.clone(),
            mean,
            median,
            std,
        });
    }

    Ok(SummaryTable {
        metric,
        baseline: baseline.to_string(),
        simulators,
        criteria,
        cells,
        overall,
    })
}

impl SummaryTable {
    /// Aligned plain-text rendering, percentages with one decimal.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let metric = self.metric.name().to_uppercase();
        out.push_str(&format!(
            "{metric}: relative decrease in AUC (%) vs baseline '{}'\n",
            self.baseline
        ));
        let width = 16;
        out.push_str(&format!("{:<10}", "criterion"));
        for sim in &self.simulators {
            out.push_str(&format!("{sim:>width$}"));
        }
        out.push_str(&format!("{:>width$}{:>width$}\n", "mean", "median"));
        for criterion in &self.criteria {
            out.push_str(&format!("{criterion:<10}"));
            for sim in &self.simulators {
                let cell = self.cells.get(&cell_key(sim, criterion)).and_then(|c| c.as_ref());
                match cell {
                    Some(c) => out.push_str(&format!(
                        "{:>width$}",
                        format!("{:.1} ±{:.1}", 100.0 * c.mean, 100.0 * c.variance.sqrt())
                    )),
                    None => out.push_str(&format!("{:>width$}", "—")),
                }
            }
            match self.overall.iter().find(|r| &r.criterion == criterion) {
                Some(row) => out.push_str(&format!(
                    "{:>width$}{:>width$}\n",
                    format!("{:.1} ±{:.1}", 100.0 * row.mean, 100.0 * row.std),
                    format!("{:.1} ±{:.1}", 100.0 * row.median, 100.0 * row.std)
                )),
                None => out.push_str(&format!("{:>width$}{:>width$}\n", "—", "—")),
            }
        }
        out
    }
}
