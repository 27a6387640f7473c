use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{DesignPoint, ExperimentSpec, ModeKind, SCHEMA_VERSION};
use super::trace_io::{read_trace, write_trace};
use crate::metrics::{
    convergence_from_traces, label_error_rate, mean_active_ess, reference_mode, rmse, ActiveEss,
    BoxSummary, EssResult,
};
use crate::model::{save_pgm, GridModel, LabelField};
use crate::reference::{self, SampleTrace};
use crate::spu::{spu_run, SpuConfig};
use crate::{Error, Result};

/// Active-ESS means averaged over the runs where the joint-active set is non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveEssSummary {
    pub software: Option<f64>,
    pub hardware: Option<f64>,
    pub runs_defined: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointQuality {
    pub mean_error_rate: f64,
    pub mean_rmse_vs_truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPointMetrics {
    pub mean_overall_ess: Option<f64>,
    pub mean_active_ess: ActiveEssSummary,
    pub inactive_percentage: f64,
    pub ess_over_unity_count: usize,
    pub convergence_percentage: f64,
    pub converged_variables: usize,
    pub rmse: BoxSummary,
    pub rmse_values: Vec<f64>,
    pub endpoint: Option<EndpointQuality>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPointReport {
    pub name: DesignPoint,
    pub config: Option<SpuConfig>,
    pub status: PointStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub metrics: Option<DesignPointMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub schema_version: u32,
    pub dataset: String,
    pub mode: ModeKind,
    pub iterations: usize,
    pub burn_in: usize,
    pub retained: usize,
    pub ess_window: usize,
    pub chains: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub rhat_threshold: f64,
    pub variables: usize,
    pub labels: usize,
    pub design_points: Vec<DesignPointReport>,
}

impl RobustnessReport {
    pub fn point(&self, dp: DesignPoint) -> Option<&DesignPointReport> {
        self.design_points.iter().find(|p| p.name == dp)
    }

    pub fn metrics(&self, dp: DesignPoint) -> Option<&DesignPointMetrics> {
        self.point(dp)?.metrics.as_ref()
    }

    /// Pretty JSON with a trailing newline; stable for identical inputs.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// FP64 results every other design point is compared against.
struct Baseline {
    ess: Vec<EssResult>,
    reference: LabelField,
}

pub struct ExperimentOutput {
    pub report: RobustnessReport,
    /// Mode of the FP64 runs' end states.
    pub reference: LabelField,
    /// End state of the first run of each successful design point.
    pub first_end_states: Vec<(DesignPoint, LabelField)>,
}

fn run_one(
    model: &GridModel,
    config: Option<&SpuConfig>,
    spec: &ExperimentSpec,
    run: usize,
) -> Result<SampleTrace> {
    let rc = spec.run_config(spec.seed_for(run));
    let (end, trace) = match config {
        None => reference::run(model, &rc)?,
        Some(c) => spu_run(model, c, &rc)?,
    };
    debug_assert_eq!(trace.last_state().as_ref(), Some(&end));
    Ok(trace)
}

fn evaluate(
    spec: &ExperimentSpec,
    traces: &[SampleTrace],
    baseline: Option<&Baseline>,
    truth: Option<&LabelField>,
) -> Result<(DesignPointMetrics, Vec<EssResult>, Vec<LabelField>)> {
    let runs = &traces[..spec.runs];
    let ess: Vec<EssResult> = runs
        .par_iter()
        .map(|t| EssResult::from_trace(&t.tail(spec.ess_window)))
        .collect::<Result<_>>()?;
    let ends: Vec<LabelField> = traces
        .iter()
        .map(|t| t.last_state().ok_or_else(|| Error::arg("empty trace")))
        .collect::<Result<_>>()?;
    let run_ends = &ends[..spec.runs];

    let own_reference;
    let reference = match baseline {
        Some(b) => &b.reference,
        None => {
            own_reference = reference_mode(run_ends)?;
            &own_reference
        }
    };

    let overall: Vec<f64> = ess.iter().filter_map(|e| e.mean_overall_ess).collect();
    let mean_overall_ess = mean(&overall);
    let inactive_percentage =
        ess.iter().map(|e| e.inactive_percentage).sum::<f64>() / ess.len() as f64;
    let ess_over_unity_count = ess.iter().map(|e| e.over_unity_count).sum();

    let sw_ess = baseline.map_or(&ess[..], |b| &b.ess[..]);
    let mut sw = Vec::new();
    let mut hw = Vec::new();
    for (s, h) in sw_ess.iter().zip(&ess) {
        if let ActiveEss::Defined {
            software, hardware, ..
        } = mean_active_ess(s, h)?
        {
            sw.push(software);
            hw.push(hardware);
        }
    }
    let mean_active_ess = ActiveEssSummary {
        software: mean(&sw),
        hardware: mean(&hw),
        runs_defined: sw.len(),
        reason: sw
            .is_empty()
            .then(|| "no variable is active in both the FP64 and this design point".into()),
    };

    let conv = convergence_from_traces(&traces[..spec.chains], spec.rhat_threshold)?;

    let rmse_values = run_ends
        .iter()
        .map(|e| rmse(e, reference))
        .collect::<Result<Vec<_>>>()?;
    let endpoint = match truth {
        None => None,
        Some(t) => {
            let err = run_ends
                .iter()
                .map(|e| label_error_rate(e, t))
                .collect::<Result<Vec<_>>>()?;
            let r = run_ends
                .iter()
                .map(|e| rmse(e, t))
                .collect::<Result<Vec<_>>>()?;
            Some(EndpointQuality {
                mean_error_rate: mean(&err).unwrap_or(0.0),
                mean_rmse_vs_truth: mean(&r).unwrap_or(0.0),
            })
        }
    };

    let metrics = DesignPointMetrics {
        mean_overall_ess,
        mean_active_ess,
        inactive_percentage,
        ess_over_unity_count,
        convergence_percentage: conv.convergence_percentage,
        converged_variables: conv.converged_count(),
        rmse: BoxSummary::from_values(&rmse_values)?,
        rmse_values,
        endpoint,
    };
    Ok((metrics, ess, ends))
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Source of the retained traces for one design point: either fresh runs or
/// files saved by an earlier run.
trait TraceSource {
    fn traces(&mut self, dp: DesignPoint, config: Option<&SpuConfig>) -> Result<Vec<SampleTrace>>;
}

struct Simulate<'a, F> {
    model: &'a GridModel,
    spec: &'a ExperimentSpec,
    on_traces: F,
}

impl<F> TraceSource for Simulate<'_, F>
where
    F: FnMut(DesignPoint, &[SampleTrace]) -> Result<()>,
{
    fn traces(&mut self, dp: DesignPoint, config: Option<&SpuConfig>) -> Result<Vec<SampleTrace>> {
        let traces: Vec<SampleTrace> = (0..self.spec.total_runs())
            .into_par_iter()
            .map(|run| run_one(self.model, config, self.spec, run))
            .collect::<Result<_>>()?;
        (self.on_traces)(dp, &traces)?;
        Ok(traces)
    }
}

struct FromFiles<'a> {
    dir: &'a Path,
    spec: &'a ExperimentSpec,
}

impl TraceSource for FromFiles<'_> {
    fn traces(&mut self, dp: DesignPoint, _: Option<&SpuConfig>) -> Result<Vec<SampleTrace>> {
        (0..self.spec.total_runs())
            .map(|run| read_trace(trace_path(self.dir, dp, run)))
            .collect()
    }
}

pub fn trace_path(dir: &Path, dp: DesignPoint, run: usize) -> PathBuf {
    dir.join(format!("{}_run{run:03}.trace", dp.name()))
}

fn assemble(
    spec: &ExperimentSpec,
    model: &GridModel,
    truth: Option<&LabelField>,
    source: &mut dyn TraceSource,
) -> Result<ExperimentOutput> {
    spec.validate()?;
    let mut baseline: Option<Baseline> = None;
    let mut reports = Vec::new();
    let mut first_end_states = Vec::new();

    // the FP64 baseline is evaluated first; report order follows the spec
    let points = spec.report_points();
    let mut order = points.clone();
    order.sort_by_key(|&d| d != DesignPoint::Fp64);

    for dp in order {
        let config = dp.spu_config();
        if let Some(Err(e)) = config.map(|c| c.validate(model.labels())) {
            reports.push(DesignPointReport {
                name: dp,
                config,
                status: PointStatus::Error,
                error: Some(e.to_string()),
                metrics: None,
            });
            continue;
        }
        let traces = source.traces(dp, config.as_ref())?;
        let (metrics, ess, ends) = evaluate(spec, &traces, baseline.as_ref(), truth)?;
        if dp == DesignPoint::Fp64 {
            baseline = Some(Baseline {
                ess,
                reference: reference_mode(&ends[..spec.runs])?,
            });
        }
        first_end_states.push((dp, ends[0].clone()));
        reports.push(DesignPointReport {
            name: dp,
            config,
            status: PointStatus::Ok,
            error: None,
            metrics: Some(metrics),
        });
    }
    reports.sort_by_key(|r| points.iter().position(|&p| p == r.name));
    first_end_states.sort_by_key(|(d, _)| points.iter().position(|p| p == d));

    let report = RobustnessReport {
        schema_version: SCHEMA_VERSION,
        dataset: spec.dataset.clone(),
        mode: spec.mode,
        iterations: spec.iterations,
        burn_in: spec.burn_in(),
        retained: spec.retained(),
        ess_window: spec.ess_window.min(spec.retained()),
        chains: spec.chains,
        runs: spec.runs,
        base_seed: spec.base_seed,
        rhat_threshold: spec.rhat_threshold,
        variables: model.variables(),
        labels: model.labels(),
        design_points: reports,
    };
    Ok(ExperimentOutput {
        report,
        reference: baseline.expect("fp64 always evaluated").reference,
        first_end_states,
    })
}

/// Runs every design point of `spec`; infeasible configurations are reported
/// as errors while the others proceed.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    run_experiment_with(spec, |_, _| Ok(()))
}

/// As [`run_experiment`], handing each design point's traces (run order) to
/// `on_traces` before they are reduced.
pub fn run_experiment_with<F>(spec: &ExperimentSpec, on_traces: F) -> Result<ExperimentOutput>
where
    F: FnMut(DesignPoint, &[SampleTrace]) -> Result<()>,
{
    spec.validate()?;
    let (model, truth) = spec.build_model()?;
    let mut source = Simulate {
        model: &model,
        spec,
        on_traces,
    };
    assemble(spec, &model, truth.as_ref(), &mut source)
}

/// Rebuilds the report of a run directory from its saved traces.
pub fn recompute_from_traces(spec: &ExperimentSpec, trace_dir: &Path) -> Result<RobustnessReport> {
    let (model, truth) = spec.build_model()?;
    let mut source = FromFiles {
        dir: trace_dir,
        spec,
    };
    Ok(assemble(spec, &model, truth.as_ref(), &mut source)?.report)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

/// Runs the experiment and writes `report.json`, `spec.json`, `summary.csv`,
/// `boxplot.csv`, label-map PGMs and, optionally, `traces/*.trace`.
pub fn run_experiment_to_dir(
    spec: &ExperimentSpec,
    out: &Path,
    save_traces: bool,
) -> Result<RobustnessReport> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let trace_dir = out.join("traces");
    if save_traces {
        fs::create_dir_all(&trace_dir).map_err(io_err(&trace_dir))?;
    }
    let output = run_experiment_with(spec, |dp, traces| {
        if save_traces {
            for (run, t) in traces.iter().enumerate() {
                write_trace(trace_path(&trace_dir, dp, run), t)?;
            }
        }
        Ok(())
    })?;
    let report = output.report;
    write_text(&out.join("report.json"), &report.to_json()?)?;
    write_text(
        &out.join("spec.json"),
        &(serde_json::to_string_pretty(spec)? + "\n"),
    )?;
    write_text(&out.join("summary.csv"), &summary_csv(&report))?;
    write_text(&out.join("boxplot.csv"), &boxplot_csv(&report))?;

    let maps = out.join("label_maps");
    fs::create_dir_all(&maps).map_err(io_err(&maps))?;
    save_pgm(
        maps.join("reference.pgm"),
        &output.reference.to_image(report.labels),
    )?;
    for (dp, end) in &output.first_end_states {
        save_pgm(
            maps.join(format!("{}_run000.pgm", dp.name())),
            &end.to_image(report.labels),
        )?;
    }
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(report: &RobustnessReport) -> String {
    let mut out = Vec::new();
    writeln!(
        out,
        "design_point,status,mean_overall_ess,active_ess_fp64,active_ess_point,inactive_percentage,convergence_percentage,rmse_median,endpoint_error_rate"
    )
    .unwrap();
    for p in &report.design_points {
        match &p.metrics {
            Some(m) => writeln!(
                out,
                "{},ok,{},{},{},{},{},{},{}",
                p.name,
                opt(m.mean_overall_ess),
                opt(m.mean_active_ess.software),
                opt(m.mean_active_ess.hardware),
                m.inactive_percentage,
                m.convergence_percentage,
                m.rmse.median,
                opt(m.endpoint.as_ref().map(|e| e.mean_error_rate)),
            ),
            None => writeln!(out, "{},error,,,,,,,", p.name),
        }
        .unwrap();
    }
    String::from_utf8(out).expect("ascii")
}

pub fn boxplot_csv(report: &RobustnessReport) -> String {
    let mut out = String::from("design_point,dataset,min,q25,median,q75,max,n_outliers\n");
    for p in &report.design_points {
        if let Some(m) = &p.metrics {
            let b = &m.rmse;
            out += &format!(
                "{},{},{},{},{},{},{},{}\n",
                p.name, report.dataset, b.min, b.q25, b.median, b.q75, b.max, b.n_outliers
            );
        }
    }
    out
}
