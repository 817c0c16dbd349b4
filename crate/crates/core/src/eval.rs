//! Scenario averaging, Pareto comparison and report tables.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ObjectiveSet, ProblemConfig};
use crate::error::{Error, Result};
use crate::model::PhysicalMachine;
use crate::objectives::ObjectiveVector;
use crate::sim::{run_simulation, Algorithm, LoadProfile, SimOptions, SimulationRun};
use crate::trace::{generate, GeneratorParams, Pdf, TraceEvent};

/// Mean of F(x, t) over every step of a run.
pub fn scenario_average(run: &SimulationRun) -> Result<f64> {
    if run.steps.is_empty() {
        return Err(Error::Empty("simulation run"));
    }
    Ok(run.steps.iter().map(|s| s.cost).sum::<f64>() / run.steps.len() as f64)
}

/// Mean of per-scenario averages.
pub fn cross_scenario_average(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("scenario results"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Minimization dominance: `a` is no worse everywhere and better somewhere.
pub fn pareto_dominates(a: &[f64], b: &[f64]) -> bool {
    assert_eq!(a.len(), b.len(), "objective vectors differ in length");
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// `Less` when `a` is better in more components than `b`, `Greater` for the
/// reverse, `Equal` on a tie.
pub fn preferred(a: &[f64], b: &[f64]) -> Ordering {
    assert_eq!(a.len(), b.len(), "objective vectors differ in length");
    let wins_a = a.iter().zip(b).filter(|(x, y)| x < y).count();
    let wins_b = a.iter().zip(b).filter(|(x, y)| y < x).count();
    wins_b.cmp(&wins_a)
}

/// One method on one scenario, averaged over seeds when repeated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: String,
    pub load: String,
    pub average_cost: f64,
    /// Step-averaged objectives.
    pub objectives: ObjectiveVector,
    pub migrations: f64,
    pub migrated_gb: f64,
}

impl ScenarioResult {
    pub fn from_run(scenario: &str, load: &str, run: &SimulationRun) -> Result<Self> {
        Ok(ScenarioResult {
            scenario: scenario.to_string(),
            load: load.to_string(),
            average_cost: scenario_average(run)?,
            objectives: run.average_objectives(),
            migrations: run.migrations as f64,
            migrated_gb: run.migrated_gb,
        })
    }

    /// Field-wise mean of repeated runs of the same scenario.
    pub fn mean(runs: &[ScenarioResult]) -> Result<Self> {
        let first = runs.first().ok_or(Error::Empty("repeated runs"))?;
        let k = runs.len() as f64;
        let mut out = first.clone();
        out.average_cost = runs.iter().map(|r| r.average_cost).sum::<f64>() / k;
        out.migrations = runs.iter().map(|r| r.migrations).sum::<f64>() / k;
        out.migrated_gb = runs.iter().map(|r| r.migrated_gb).sum::<f64>() / k;
        for i in 0..4 {
            out.objectives.raw[i] = runs.iter().map(|r| r.objectives.raw[i]).sum::<f64>() / k;
            out.objectives.normalized[i] = runs.iter().map(|r| r.objectives.normalized[i]).sum::<f64>() / k;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub objective_set: ObjectiveSet,
    pub scenarios: Vec<ScenarioResult>,
    /// Cross-scenario F̄.
    pub average: f64,
}

impl MethodResult {
    pub fn new(method: &str, objective_set: ObjectiveSet, scenarios: Vec<ScenarioResult>) -> Result<Self> {
        let costs: Vec<f64> = scenarios.iter().map(|s| s.average_cost).collect();
        Ok(MethodResult {
            method: method.to_string(),
            objective_set,
            average: cross_scenario_average(&costs)?,
            scenarios,
        })
    }

    /// Per-objective means over every scenario.
    pub fn objective_means(&self) -> ObjectiveVector {
        mean_objectives(self.scenarios.iter())
    }

    fn objective_means_for(&self, load: &str) -> Option<ObjectiveVector> {
        let hits: Vec<&ScenarioResult> = self.scenarios.iter().filter(|s| s.load == load).collect();
        (!hits.is_empty()).then(|| mean_objectives(hits.into_iter()))
    }
}

fn mean_objectives<'a>(it: impl Iterator<Item = &'a ScenarioResult>) -> ObjectiveVector {
    let mut v = ObjectiveVector {
        raw: [0.0; 4],
        normalized: [0.0; 4],
    };
    let mut k = 0.0;
    for s in it {
        k += 1.0;
        for i in 0..4 {
            v.raw[i] += s.objectives.raw[i];
            v.normalized[i] += s.objectives.normalized[i];
        }
    }
    if k > 0.0 {
        for i in 0..4 {
            v.raw[i] /= k;
            v.normalized[i] /= k;
        }
    }
    v
}

/// A trace paired with a PM set.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub load: String,
    pub trace: Vec<TraceEvent>,
    pub pms: Vec<PhysicalMachine>,
}

/// Cross product of generator settings used to build scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioGrid {
    pub base: GeneratorParams,
    /// Vary the network PDF independently of the server PDF (16 traces
    /// instead of 8).
    pub vary_network: bool,
    /// Generator executions per parameter combination.
    pub repeats: u32,
    pub loads: Vec<LoadProfile>,
}

impl Default for ScenarioGrid {
    fn default() -> Self {
        ScenarioGrid {
            base: GeneratorParams::default(),
            vary_network: false,
            repeats: 1,
            loads: vec![LoadProfile::Low, LoadProfile::High],
        }
    }
}

impl ScenarioGrid {
    pub fn with_duration(mut self, duration: u32) -> Self {
        self.base.duration = duration;
        self
    }

    /// Generator settings for every trace, labelled by PDF family:
    /// `h`, `v`, `s`, `n` = horizontal, vertical, server, network; `U`/`P`.
    pub fn trace_params(&self) -> Vec<(String, GeneratorParams)> {
        let horizontal = [Pdf::Uniform { a: 0, b: 10 }, Pdf::Poisson { lambda: 7.0 }];
        let vertical = [Pdf::Uniform { a: 0, b: 10 }, Pdf::Poisson { lambda: 5.0 }];
        let util = [Pdf::Uniform { a: 0, b: 100 }, Pdf::Poisson { lambda: 70.0 }];
        let tag = |p: &Pdf| match p {
            Pdf::Uniform { .. } => 'U',
            Pdf::Poisson { .. } => 'P',
        };
        let net_choices: Vec<Option<usize>> = if self.vary_network {
            vec![Some(0), Some(1)]
        } else {
            vec![None]
        };
        let mut out = Vec::new();
        for h in &horizontal {
            for v in &vertical {
                for (si, s) in util.iter().enumerate() {
                    for net in &net_choices {
                        let n = &util[net.unwrap_or(si)];
                        for r in 0..self.repeats {
                            let mut p = self.base.clone();
                            p.horizontal_elasticity = h.clone();
                            p.vertical_elasticity = v.clone();
                            p.server_util = s.clone();
                            p.network_util = n.clone();
                            p.rng_seed = self.base.rng_seed.wrapping_add(out.len() as u64);
                            let mut name = format!("h{}v{}s{}n{}", tag(h), tag(v), tag(s), tag(n));
                            if self.repeats > 1 {
                                let _ = write!(name, "-{}", r + 1);
                            }
                            out.push((name, p));
                        }
                    }
                }
            }
        }
        out
    }

    /// Generates every trace and pairs it with every load profile.
    pub fn build(&self) -> Result<Vec<Scenario>> {
        let traces: Vec<(String, Vec<TraceEvent>)> = self
            .trace_params()
            .into_par_iter()
            .map(|(name, p)| generate(&p).map(|t| (name, t)))
            .collect::<Result<_>>()?;
        let mut out = Vec::new();
        for load in &self.loads {
            for (name, trace) in &traces {
                out.push(Scenario {
                    name: name.clone(),
                    load: load.label().to_string(),
                    trace: trace.clone(),
                    pms: load.pms(),
                });
            }
        }
        Ok(out)
    }
}

/// Runs one method over every scenario and seed, in parallel.
pub fn run_scenarios(
    label: &str,
    scenarios: &[Scenario],
    algorithm: Algorithm,
    config: &ProblemConfig,
    options: &SimOptions,
    seeds: &[u64],
) -> Result<MethodResult> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    let jobs: Vec<(usize, u64)> = (0..scenarios.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<(usize, ScenarioResult)> = jobs
        .into_par_iter()
        .map(|(i, seed)| {
            let sc = &scenarios[i];
            let opts = SimOptions {
                ma: options.ma.clone().with_seed(seed),
                ..options.clone()
            };
            let run = run_simulation(&sc.trace, sc.pms.clone(), config, algorithm, &opts)?;
            Ok((i, ScenarioResult::from_run(&sc.name, &sc.load, &run)?))
        })
        .collect::<Result<_>>()?;
    let per_scenario = (0..scenarios.len())
        .map(|i| {
            let reps: Vec<ScenarioResult> = results
                .iter()
                .filter(|(j, _)| *j == i)
                .map(|(_, r)| r.clone())
                .collect();
            ScenarioResult::mean(&reps)
        })
        .collect::<Result<Vec<_>>>()?;
    MethodResult::new(label, config.objective_set, per_scenario)
}

/// A rendered table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_text(&self) -> String {
        let cols = self.headers.len();
        let width: Vec<usize> = (0..cols)
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].chars().count())
                    .chain([self.headers[c].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let line = |cells: &[String], out: &mut String| {
            let padded: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    if c == 0 {
                        format!("{s:<w$}", w = width[c])
                    } else {
                        format!("{s:>w$}", w = width[c])
                    }
                })
                .collect();
            out.push_str(padded.join("  ").trim_end());
            out.push('\n');
        };
        line(&self.headers, &mut out);
        let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
        line(&rule, &mut out);
        for r in &self.rows {
            line(r, &mut out);
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::config(format!("csv write failed: {e}"));
        w.write_record(&self.headers).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::config(format!("csv write failed: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
}

impl Report {
    pub fn to_text(&self) -> String {
        self.tables
            .iter()
            .map(|t| format!("{}\n{}", t.name, t.to_text()))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.4}")
}

fn mark(x: f64, best: f64) -> String {
    if x == best {
        format!("{}*", fmt(x))
    } else {
        fmt(x)
    }
}

/// Method indices ordered by F̄ ascending, ties by label.
pub fn ranking(results: &[MethodResult]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..results.len()).collect();
    idx.sort_by(|&a, &b| {
        results[a]
            .average
            .total_cmp(&results[b].average)
            .then_with(|| results[a].method.cmp(&results[b].method))
    });
    idx
}

/// `out[i][j]` is true when method `i`'s mean normalized objectives dominate
/// method `j`'s.
pub fn dominance_matrix(results: &[MethodResult]) -> Vec<Vec<bool>> {
    let means: Vec<[f64; 4]> = results.iter().map(|r| r.objective_means().normalized).collect();
    means
        .iter()
        .map(|a| means.iter().map(|b| pareto_dominates(a, b)).collect())
        .collect()
}

fn scenario_key(s: &ScenarioResult) -> String {
    if s.load.is_empty() {
        s.scenario.clone()
    } else {
        format!("{}/{}", s.scenario, s.load)
    }
}

/// Builds the cost grid, objective breakdown, per-load comparison and
/// dominance tables. Every method must use the same objective set.
pub fn build_report(results: &[MethodResult]) -> Result<Report> {
    let first = results.first().ok_or(Error::Empty("method results"))?;
    if results.iter().any(|r| r.objective_set != first.objective_set) {
        return Err(Error::config("method results mix objective sets"));
    }
    let labels = first.objective_set.labels();

    let mut keys: Vec<String> = Vec::new();
    for r in results {
        for s in &r.scenarios {
            let k = scenario_key(s);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    let rank = ranking(results);
    let mut position = vec![0; results.len()];
    for (p, &i) in rank.iter().enumerate() {
        position[i] = p + 1;
    }

    // Cost grid: one row per method, one column per scenario.
    let cell = |r: &MethodResult, k: &str| {
        r.scenarios
            .iter()
            .find(|s| scenario_key(s) == k)
            .map(|s| s.average_cost)
    };
    let mut headers = vec!["method".to_string()];
    headers.extend(keys.iter().cloned());
    headers.push("average".into());
    headers.push("rank".into());
    let col_best: Vec<f64> = keys
        .iter()
        .map(|k| {
            results
                .iter()
                .filter_map(|r| cell(r, k))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let avg_best = results.iter().map(|r| r.average).fold(f64::INFINITY, f64::min);
    let mut rows = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let mut row = vec![r.method.clone()];
        for (k, best) in keys.iter().zip(&col_best) {
            row.push(cell(r, k).map_or_else(|| "-".into(), |x| mark(x, *best)));
        }
        row.push(mark(r.average, avg_best));
        row.push(position[i].to_string());
        rows.push(row);
    }
    let costs = Table {
        name: "costs".into(),
        headers,
        rows,
    };

    // Per-objective breakdown, raw units and normalized.
    let mut headers = vec!["method".to_string()];
    headers.extend(labels.iter().map(|l| l.to_string()));
    headers.extend(labels.iter().map(|l| format!("{l}_norm")));
    let means: Vec<ObjectiveVector> = results.iter().map(MethodResult::objective_means).collect();
    let best_raw: Vec<f64> = (0..4)
        .map(|i| means.iter().map(|m| m.raw[i]).fold(f64::INFINITY, f64::min))
        .collect();
    let rows = results
        .iter()
        .zip(&means)
        .map(|(r, m)| {
            let mut row = vec![r.method.clone()];
            row.extend((0..4).map(|i| mark(m.raw[i], best_raw[i])));
            row.extend(m.normalized.iter().map(|x| fmt(*x)));
            row
        })
        .collect();
    let objectives = Table {
        name: "objectives".into(),
        headers,
        rows,
    };

    // Per objective and load: one column per method.
    let mut loads: Vec<String> = Vec::new();
    for r in results {
        for s in &r.scenarios {
            if !loads.contains(&s.load) {
                loads.push(s.load.clone());
            }
        }
    }
    let mut headers = vec!["objective".to_string(), "load".to_string()];
    headers.extend(results.iter().map(|r| r.method.clone()));
    let mut rows = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        for load in &loads {
            let vals: Vec<Option<f64>> = results
                .iter()
                .map(|r| r.objective_means_for(load).map(|m| m.raw[i]))
                .collect();
            let best = vals.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            let mut row = vec![label.to_string(), if load.is_empty() { "-".into() } else { load.clone() }];
            row.extend(vals.iter().map(|v| v.map_or_else(|| "-".into(), |x| mark(x, best))));
            rows.push(row);
        }
    }
    let by_load = Table {
        name: "by_load".into(),
        headers,
        rows,
    };

    let dom = dominance_matrix(results);
    let mut headers = vec!["dominates".to_string()];
    headers.extend(results.iter().map(|r| r.method.clone()));
    let rows = results
        .iter()
        .zip(&dom)
        .map(|(r, d)| {
            let mut row = vec![r.method.clone()];
            row.extend(d.iter().map(|&b| if b { "yes" } else { "no" }.to_string()));
            row
        })
        .collect();
    let dominance = Table {
        name: "dominance".into(),
        headers,
        rows,
    };

    Ok(Report {
        tables: vec![costs, objectives, by_load, dominance],
    })
}
