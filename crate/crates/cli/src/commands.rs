//! Subcommand bodies. Each returns its artifacts in memory; writing them
//! out is left to the caller.

use rayon::prelude::*;
use selsample::evaluation::{estimate_q_measure, FailureDemo};
use selsample::rng::mix64;
use selsample::{
    error_curve, estimate_error, failure_demo, raster_predict, run_process, ErrorCurve, ProbeSet,
    ProcessConfig, Rule, RunTrace, TrueFunction,
};

use crate::experiment::ExperimentSpec;
use crate::CliError;

/// Seed of the tie-breaking streams used while scoring against a probe set.
pub fn evaluation_tie_seed(probe_seed: u64) -> u64 {
    mix64(probe_seed ^ 0x7469_655f_6272_6b72)
}

struct Prepared {
    truth: TrueFunction,
    cfg: ProcessConfig,
    probes: ProbeSet,
}

fn prepare(spec: &ExperimentSpec) -> Result<Prepared, CliError> {
    let truth = spec.truth.load()?;
    let cfg = spec.process_config()?;
    cfg.validate(&truth.domain())?;
    let probes = ProbeSet::draw(&truth, spec.probes, spec.probe_seed)?;
    Ok(Prepared { truth, cfg, probes })
}

#[derive(Debug)]
pub struct RunOutput {
    pub trace: RunTrace,
    pub curve: ErrorCurve,
    pub final_error: f64,
}

impl RunOutput {
    pub fn trace_csv(&self) -> String {
        self.trace.to_csv()
    }

    pub fn curve_csv(&self) -> String {
        self.curve.to_csv()
    }
}

pub fn run(spec: &ExperimentSpec) -> Result<RunOutput, CliError> {
    let p = prepare(spec)?;
    let trace = run_process(&p.cfg, &p.truth.domain(), &p.truth)?;
    let curve = error_curve(
        &trace,
        p.cfg.heuristic,
        &p.probes,
        spec.stride,
        Rule::Nn,
        evaluation_tie_seed(spec.probe_seed),
    )?;
    let final_error = curve.last().map(|r| r.error).unwrap_or(f64::NAN);
    Ok(RunOutput {
        trace,
        curve,
        final_error,
    })
}

#[derive(Debug)]
pub struct RenderOutput {
    pub ppm: Vec<u8>,
    pub probe_error: f64,
}

pub fn render(spec: &ExperimentSpec, overlay_samples: bool) -> Result<RenderOutput, CliError> {
    if spec.truth.dimension() != 2 {
        return Err(CliError::Usage("render needs a 2D truth".into()));
    }
    if spec.width == 0 || spec.height == 0 {
        return Err(CliError::Usage("width and height must be >= 1".into()));
    }
    let p = prepare(spec)?;
    let trace = run_process(&p.cfg, &p.truth.domain(), &p.truth)?;
    let z = &trace.samples;
    let raster = raster_predict(z, spec.width, spec.height, Rule::Nn, mix64(spec.seed))?;
    let image = raster.to_ppm(p.truth.label_count(), overlay_samples.then_some(z));
    let probe_error = estimate_error(z, &p.probes, Rule::Nn, evaluation_tie_seed(spec.probe_seed))?;
    Ok(RenderOutput {
        ppm: image.encode(),
        probe_error,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub spec: String,
    /// `None` on a median row
    pub seed: Option<u64>,
    pub heuristic: String,
    pub kappa: String,
    pub final_error: f64,
    pub q_measure: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
}

pub const COMPARE_HEADER: &str = "spec,seed,heuristic,kappa,final_error,q_measure";

impl CompareTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let seed = r
                .seed
                .map_or_else(|| "median".to_string(), |s| s.to_string());
            let q = r.q_measure.map(|q| q.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.spec, seed, r.heuristic, r.kappa, r.final_error, q
            ));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines();
        if lines.next() != Some(COMPARE_HEADER) {
            return Err(CliError::Io(format!("expected header {COMPARE_HEADER:?}")));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let bad = || CliError::Io(format!("compare.csv line {}: malformed", i + 2));
            let cols: Vec<&str> = line.split(',').collect();
            let [spec, seed, heuristic, kappa, err, q] = cols[..] else {
                return Err(bad());
            };
            rows.push(CompareRow {
                spec: spec.to_string(),
                seed: match seed {
                    "median" => None,
                    s => Some(s.parse().map_err(|_| bad())?),
                },
                heuristic: heuristic.to_string(),
                kappa: kappa.to_string(),
                final_error: err.parse().map_err(|_| bad())?,
                q_measure: if q.is_empty() {
                    None
                } else {
                    Some(q.parse().map_err(|_| bad())?)
                },
            });
        }
        Ok(Self { rows })
    }

    /// Median rows in spec order.
    pub fn medians(&self) -> impl Iterator<Item = &CompareRow> {
        self.rows.iter().filter(|r| r.seed.is_none())
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Runs every spec for `seeds` consecutive seeds starting at its own seed.
/// Specs must agree on truth, n, probes and probe-seed.
pub fn compare(specs: &[(String, ExperimentSpec)], seeds: u64) -> Result<CompareTable, CliError> {
    if specs.len() < 2 {
        return Err(CliError::Usage("compare needs at least two specs".into()));
    }
    if seeds == 0 {
        return Err(CliError::Usage("seeds must be >= 1".into()));
    }
    let first = &specs[0].1;
    for (name, s) in &specs[1..] {
        if s.truth != first.truth
            || s.n != first.n
            || s.probes != first.probes
            || s.probe_seed != first.probe_seed
        {
            return Err(CliError::Usage(format!(
                "spec {name} differs from {} in truth, n, probes or probe-seed",
                specs[0].0
            )));
        }
    }
    let prepared = specs
        .iter()
        .map(|(_, s)| prepare(s))
        .collect::<Result<Vec<_>, _>>()?;
    let tie_seed = evaluation_tie_seed(first.probe_seed);
    let jobs: Vec<(usize, u64)> = (0..specs.len())
        .flat_map(|i| (0..seeds).map(move |k| (i, specs[i].1.seed.wrapping_add(k))))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let p = &prepared[i];
            let cfg = ProcessConfig { seed, ..p.cfg };
            let trace = run_process(&cfg, &p.truth.domain(), &p.truth)?;
            let err = estimate_error(&trace.samples, &p.probes, Rule::Nn, tie_seed)?;
            let q = if cfg.heuristic.is_nmc() {
                Some(estimate_q_measure(
                    &trace.samples,
                    cfg.heuristic,
                    &p.probes,
                )?)
            } else {
                None
            };
            Ok((err, q))
        })
        .collect::<Result<Vec<_>, selsample::Error>>()?;
    let mut table = CompareTable::default();
    for (i, (name, spec)) in specs.iter().enumerate() {
        let base = i * seeds as usize;
        let mine = &results[base..base + seeds as usize];
        let heuristic = spec.heuristic().to_string();
        let kappa = spec.kappa.to_string();
        for (k, &(err, q)) in mine.iter().enumerate() {
            table.rows.push(CompareRow {
                spec: name.clone(),
                seed: Some(spec.seed.wrapping_add(k as u64)),
                heuristic: heuristic.clone(),
                kappa: kappa.clone(),
                final_error: err,
                q_measure: q,
            });
        }
        let mut errs: Vec<f64> = mine.iter().map(|r| r.0).collect();
        let mut qs: Vec<f64> = mine.iter().filter_map(|r| r.1).collect();
        table.rows.push(CompareRow {
            spec: name.clone(),
            seed: None,
            heuristic,
            kappa,
            final_error: median(&mut errs),
            q_measure: (!qs.is_empty()).then(|| median(&mut qs)),
        });
    }
    Ok(table)
}

pub fn failure(
    i_max: u32,
    n_steps: usize,
    probes: usize,
    seed: u64,
) -> Result<FailureDemo, CliError> {
    if n_steps + 2 > i_max as usize || n_steps == 0 {
        return Err(CliError::Usage(format!(
            "n-steps must lie in 1..=i-max - 2 (got {n_steps}, i-max {i_max})"
        )));
    }
    if probes == 0 {
        return Err(CliError::Usage("probes must be >= 1".into()));
    }
    Ok(failure_demo(i_max, n_steps, probes, seed)?)
}
