//! Threshold sweeps over seeded scenario runs.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::run::{run_scenario, EnforcementReport, RunConfig};
use super::scenario::{Scenario, ScenarioSource};
use crate::error::Result;
use crate::spec::{Formula, SignalRegistry, Specification};

/// The formula a scenario is checked against: `top` if given, else the
/// scenario's own formula name.
pub fn scenario_formula<'a>(spec: &'a Specification, scenario: &Scenario, top: Option<&str>) -> Result<&'a Formula> {
    let name = top.unwrap_or(&scenario.formula);
    spec.get(name)
        .ok_or_else(|| crate::SpecError::UnknownFormula(name.to_string()).into())
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub thetas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Settings shared by every run; theta and enforcement are overridden.
    pub base: RunConfig,
    pub top: Option<String>,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario: String,
    /// Empty for baseline runs.
    pub theta: Option<f64>,
    pub seed: u64,
    pub pass: bool,
    pub final_rho: f64,
    pub fixes: usize,
    pub max_fix: f64,
    pub fix_pct: f64,
    pub avg_eval_ms: f64,
    pub run_s: f64,
}

impl SweepRow {
    fn from_report(r: &EnforcementReport) -> SweepRow {
        SweepRow {
            scenario: r.scenario.clone(),
            theta: r.enforced.then_some(r.theta),
            seed: r.seed,
            pass: r.pass,
            final_rho: r.final_rho,
            fixes: r.fixes,
            max_fix: r.max_fix(),
            fix_pct: r.fix_pct(),
            avg_eval_ms: r.avg_eval_ms(),
            run_s: r.run_s,
        }
    }
}

/// Per-threshold summary for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaSummary {
    pub scenario: String,
    pub theta: f64,
    pub runs: usize,
    pub pass_rate: f64,
    pub baseline_pass_rate: f64,
    /// Enforced minus baseline pass rate.
    pub improvement: f64,
    pub fixes_per_run: f64,
    pub mean_fix: f64,
    pub max_fix: f64,
    /// Fixes that changed exactly one waypoint, over all fixes.
    pub single_waypoint_share: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<ThetaSummary>,
    #[serde(skip)]
    pub reports: Vec<EnforcementReport>,
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self, scenario: &str, theta: f64) -> Option<&ThetaSummary> {
        self.summaries
            .iter()
            .find(|s| s.scenario == scenario && (s.theta - theta).abs() < 1e-9)
    }

    /// Best enforced pass rate among thresholds in `[lo, hi]`.
    pub fn best_in(&self, scenario: &str, lo: f64, hi: f64) -> Option<&ThetaSummary> {
        self.summaries
            .iter()
            .filter(|s| s.scenario == scenario && s.theta >= lo - 1e-9 && s.theta <= hi + 1e-9)
            .fold(None, |best: Option<&ThetaSummary>, s| match best {
                Some(b) if b.pass_rate >= s.pass_rate => Some(b),
                _ => Some(s),
            })
    }
}

fn rate(reports: &[&EnforcementReport]) -> f64 {
    if reports.is_empty() {
        0.0
    } else {
        reports.iter().filter(|r| r.pass).count() as f64 / reports.len() as f64
    }
}

/// Runs the baseline and every threshold for every scenario and seed.
pub fn sweep(
    spec: &Specification,
    registry: &SignalRegistry,
    scenarios: &[ScenarioSource],
    config: &SweepConfig,
) -> Result<SweepReport> {
    let mut jobs = Vec::new();
    for (si, _) in scenarios.iter().enumerate() {
        for &seed in &config.seeds {
            jobs.push((si, None, seed));
            for &theta in &config.thetas {
                jobs.push((si, Some(theta), seed));
            }
        }
    }
    let reports: Vec<EnforcementReport> = jobs
        .par_iter()
        .map(|&(si, theta, seed)| {
            let scenario = scenarios[si].instantiate(seed)?;
            let formula = scenario_formula(spec, &scenario, config.top.as_deref())?;
            let mut run = config.base.clone();
            match theta {
                Some(t) => {
                    run.enforce = true;
                    run.repair.theta = t;
                }
                None => run.enforce = false,
            }
            run_scenario(formula, registry, &scenario, &run, seed)
        })
        .collect::<Result<_>>()?;

    let mut summaries = Vec::new();
    for source in scenarios {
        let name = source.name();
        let of = |theta: Option<f64>| -> Vec<&EnforcementReport> {
            reports
                .iter()
                .filter(|r| r.scenario == name)
                .filter(|r| match theta {
                    None => !r.enforced,
                    Some(t) => r.enforced && (r.theta - t).abs() < 1e-12,
                })
                .collect()
        };
        let baseline = rate(&of(None));
        for &theta in &config.thetas {
            let runs = of(Some(theta));
            let sizes: Vec<f64> = runs.iter().flat_map(|r| r.fix_sizes.iter().copied()).collect();
            let edited: Vec<usize> = runs.iter().flat_map(|r| r.fix_waypoints.iter().copied()).collect();
            let pass_rate = rate(&runs);
            summaries.push(ThetaSummary {
                scenario: name.to_string(),
                theta,
                runs: runs.len(),
                pass_rate,
                baseline_pass_rate: baseline,
                improvement: pass_rate - baseline,
                fixes_per_run: if runs.is_empty() {
                    0.0
                } else {
                    sizes.len() as f64 / runs.len() as f64
                },
                mean_fix: if sizes.is_empty() {
                    0.0
                } else {
                    sizes.iter().sum::<f64>() / sizes.len() as f64
                },
                max_fix: sizes.iter().copied().fold(0.0, f64::max),
                single_waypoint_share: if edited.is_empty() {
                    1.0
                } else {
                    edited.iter().filter(|&&n| n == 1).count() as f64 / edited.len() as f64
                },
            });
        }
    }
    let rows = reports.iter().map(SweepRow::from_report).collect();
    Ok(SweepReport {
        rows,
        summaries,
        reports,
    })
}

/// Parses `lo:hi:step` or a comma list into thresholds.
pub fn parse_thetas(arg: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = arg.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse().ok()?;
        let hi: f64 = parts[1].trim().parse().ok()?;
        let step: f64 = parts[2].trim().parse().ok()?;
        if !(step > 0.0) || hi < lo {
            return None;
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        // Round to the step's precision so 0.1 * 3 prints as 0.3.
        return Some((0..=n).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect());
    }
    arg.split(',').map(|p| p.trim().parse().ok()).collect()
}
