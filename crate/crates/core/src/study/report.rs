//! Study reports and the files written for them.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, StudyRun};

/// Grid points of the exported continuous solution.
const ODE_CSV_POINTS: usize = 501;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StudyVerdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, value: f64, threshold: Option<f64>, pass: bool, detail: String) -> Self {
        Self { name: name.into(), value, threshold, pass, detail }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalRow {
    pub t: f64,
    pub replicas: u64,
    pub total_variation: f64,
    pub chi_square_statistic: f64,
    pub chi_square_dof: usize,
    pub chi_square_pvalue: Option<f64>,
    pub mean_error: f64,
    pub empirical_mean: Vec<f64>,
    pub reference_mean: Vec<f64>,
    pub empirical_fano: Vec<f64>,
    /// TV to the product Poisson law with the empirical means.
    pub best_fit_total_variation: f64,
    /// Mean and standard deviation of the TV of an exact sample of this size.
    pub noise_floor_mean: f64,
    pub noise_floor_sd: f64,
    pub degenerate: bool,
}

/// Per-`N` convergence table row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NRow {
    pub n: u64,
    pub replicas_ok: u64,
    pub replicas_failed: u64,
    pub mean_events: f64,
    pub sup_distance_median: Option<f64>,
    /// One per observable, in config order.
    pub residual_medians: Vec<Option<f64>>,
    pub marginals: Vec<MarginalRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaFailure {
    pub n: u64,
    pub replica: u64,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub name: String,
    pub config: ExperimentConfig,
    pub species: Vec<String>,
    pub discrete_species: Vec<String>,
    pub continuous_species: Vec<String>,
    pub marginal_species: Vec<String>,
    pub structural: serde_json::Value,
    pub acr: Option<serde_json::Value>,
    pub audit: serde_json::Value,
    pub reductions: String,
    pub rows: Vec<NRow>,
    pub checks: Vec<Check>,
    pub verdict: StudyVerdict,
    pub notes: Vec<String>,
    pub failures: Vec<ReplicaFailure>,
}

impl StudyReport {
    /// Some `N` had no successful replica.
    pub fn fully_failed(&self) -> bool {
        self.rows.iter().any(|r| r.replicas_ok == 0)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Serialize)]
struct Record<'a> {
    n: u64,
    t: Option<f64>,
    metric: &'a str,
    value: f64,
}

fn records(report: &StudyReport) -> Vec<Record<'_>> {
    let mut out = Vec::new();
    for row in &report.rows {
        let push = |out: &mut Vec<Record<'_>>, t, metric, value| out.push(Record { n: row.n, t, metric, value });
        push(&mut out, None, "mean_events", row.mean_events);
        if let Some(v) = row.sup_distance_median {
            push(&mut out, None, "sup_distance_median", v);
        }
        for v in row.residual_medians.iter().flatten() {
            push(&mut out, None, "residual_median", *v);
        }
        for m in &row.marginals {
            let t = Some(m.t);
            push(&mut out, t, "total_variation", m.total_variation);
            push(&mut out, t, "chi_square_statistic", m.chi_square_statistic);
            if let Some(p) = m.chi_square_pvalue {
                push(&mut out, t, "chi_square_pvalue", p);
            }
            push(&mut out, t, "mean_error", m.mean_error);
            push(&mut out, t, "best_fit_total_variation", m.best_fit_total_variation);
            push(&mut out, t, "noise_floor_mean", m.noise_floor_mean);
        }
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

/// Markdown summary of a report.
pub fn render_summary(report: &StudyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Study `{}`: {:?}\n", report.name, report.verdict);
    let cfg = &report.config;
    let _ = writeln!(
        s,
        "Network `{}`, T = {}, seed {}, {} replicas per N ({} with path statistics), averaging `{:?}`.\n",
        cfg.network.display(),
        cfg.t_end,
        cfg.seed,
        cfg.replicas,
        cfg.path_replicas,
        cfg.averaging
    );
    let _ = writeln!(
        s,
        "Discrete species: {}. Continuous species: {}. Marginal over: {}.\n",
        report.discrete_species.join(", "),
        report.continuous_species.join(", "),
        report.marginal_species.join(", ")
    );
    let _ = writeln!(s, "## Reductions\n\n```text\n{}```\n", report.reductions);
    let _ = writeln!(s, "## Convergence\n");
    let _ = writeln!(
        s,
        "| N | ok | failed | events | sup distance | residuals | t | TV | noise TV | mean | reference | best-fit TV |"
    );
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|---|---|---|");
    for r in &report.rows {
        let res: Vec<String> = r.residual_medians.iter().map(|v| fmt_opt(*v)).collect();
        for m in &r.marginals {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {:.0} | {} | {} | {} | {:.4} | {:.4} | {:?} | {:?} | {:.4} |",
                r.n,
                r.replicas_ok,
                r.replicas_failed,
                r.mean_events,
                fmt_opt(r.sup_distance_median),
                res.join(" "),
                m.t,
                m.total_variation,
                m.noise_floor_mean,
                m.empirical_mean.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
                m.reference_mean.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
                m.best_fit_total_variation
            );
        }
    }
    let _ = writeln!(s, "\n## Checks\n");
    for c in &report.checks {
        let _ = writeln!(
            s,
            "- [{}] `{}` = {:.5} (threshold {}): {}",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.value,
            fmt_opt(c.threshold),
            c.detail
        );
    }
    if !report.notes.is_empty() {
        let _ = writeln!(s, "\n## Notes\n");
        for n in &report.notes {
            let _ = writeln!(s, "- {n}");
        }
    }
    if !report.failures.is_empty() {
        let _ = writeln!(s, "\n## Failed replicas\n");
        for f in &report.failures {
            let _ = writeln!(s, "- N = {}, replica {} (seed {}): {}", f.n, f.replica, f.seed, f.error);
        }
    }
    s
}

fn fmt_state(x: &[u64]) -> String {
    x.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
}

/// Writes `report.json`, `statistics.json`, `summary.md`, `ode.csv`,
/// and per-`N` `replicas_N*.csv` and `marginal_N*_t*.csv`.
pub fn write_outputs(run: &StudyRun, out: &Path) -> std::io::Result<()> {
    fs::create_dir_all(out)?;
    let report = &run.report;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(report)?)?;
    fs::write(out.join("statistics.json"), serde_json::to_string_pretty(&records(report))?)?;
    fs::write(out.join("summary.md"), render_summary(report))?;
    if let Some(ode) = &run.ode {
        ode.write_csv(BufWriter::new(fs::File::create(out.join("ode.csv"))?), &run.continuous_names, ODE_CSV_POINTS)?;
    }
    let labels: Vec<String> = report.config.observables.iter().map(|o| format!("residual[{}]", o.label())).collect();
    for e in &run.ensembles {
        let mut w = BufWriter::new(fs::File::create(out.join(format!("replicas_N{}.csv", e.n)))?);
        write!(w, "replica,seed,events,sup_distance")?;
        for l in &labels {
            write!(w, ",\"{l}\"")?;
        }
        writeln!(w, ",status")?;
        for r in &e.replicas {
            write!(
                w,
                "{},{},{},{}",
                r.index,
                r.seed,
                r.events,
                r.sup_distance.map_or(String::new(), |v| v.to_string())
            )?;
            for k in 0..labels.len() {
                write!(w, ",{}", r.residuals.get(k).map_or(String::new(), |v| v.to_string()))?;
            }
            writeln!(
                w,
                ",{}",
                r.error.as_deref().map_or("ok".to_string(), |e| format!("\"{}\"", e.replace('"', "'")))
            )?;
        }
        w.flush()?;
        for (m, reference) in e.marginals.iter().zip(&e.references) {
            let mut w = BufWriter::new(fs::File::create(out.join(format!("marginal_N{}_t{}.csv", e.n, m.t)))?);
            writeln!(w, "state,count,empirical,reference")?;
            let mut states: Vec<&Vec<u64>> = m.counts.keys().collect();
            states.extend(reference.iter().map(|(s, _)| s).filter(|s| !m.counts.contains_key(*s)));
            states.sort();
            let reference_p = |s: &Vec<u64>| reference.iter().find(|(x, _)| *x == s).map_or(0.0, |(_, p)| p);
            for s in states {
                let c = m.counts.get(s).copied().unwrap_or(0);
                let total = m.replicas.max(1) as f64;
                writeln!(w, "{},{},{},{}", fmt_state(s), c, c as f64 / total, reference_p(s))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
