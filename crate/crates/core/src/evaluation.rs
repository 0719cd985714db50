//! Monte Carlo error and Q-measure estimation over a fixed probe set,
//! prediction rasters, and the adversarial 1D failure demonstration.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::domain::{build_adversarial_1d, EpsilonRule, Label, Point, TrueFunction};
use crate::error::{Error, Result};
use crate::heuristics::HeuristicSpec;
use crate::pnm::PnmImage;
use crate::predictor::{Rule, SampleSet};
use crate::rng::{mix64, RngState};
use crate::sampler::RunTrace;
use crate::voronoi::VoronoiIndex;

/// Probe points drawn iid from μ with their true labels. One probe set is
/// reused for every n of a curve and every arm of a comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSet {
    points: Vec<Point>,
    labels: Vec<Label>,
    checksum: u64,
}

impl ProbeSet {
    pub fn draw(truth: &TrueFunction, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("probe count must be >= 1".into()));
        }
        let domain = truth.domain();
        let mut rng = RngState::from_seed(seed);
        let points: Vec<Point> = (0..count).map(|_| domain.sample_mu(&mut rng)).collect();
        Self::from_points(truth, points)
    }

    pub fn from_points(truth: &TrueFunction, points: Vec<Point>) -> Result<Self> {
        let labels = points
            .iter()
            .map(|p| truth.label_of(p))
            .collect::<Result<Vec<_>>>()?;
        let checksum = points.iter().zip(&labels).fold(0u64, |acc, (p, l)| {
            mix64(
                acc ^ mix64(p.x().to_bits()) ^ mix64(p.y().to_bits()).rotate_left(29) ^ l.0 as u64,
            )
        });
        Ok(Self {
            points,
            labels,
            checksum,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn checksum(&self) -> u64 {
        self.checksum
    }
}

/// Fraction of probes the rule misclassifies. Probe `i` breaks ties with
/// stream `i` of `tie_seed`, so the result does not depend on evaluation
/// order.
pub fn estimate_error(z: &SampleSet, probes: &ProbeSet, rule: Rule, tie_seed: u64) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::InvalidParameter("probe set is empty".into()));
    }
    if z.len() < rule.min_samples() {
        return Err(Error::TooFewSamples {
            needed: rule.min_samples(),
            have: z.len(),
        });
    }
    let wrong = probes
        .points
        .par_iter()
        .zip(probes.labels.par_iter())
        .enumerate()
        .map(|(i, (p, &truth))| {
            let mut rng = RngState::substream(tie_seed, i as u64);
            rule.predict(p, z, &mut rng)
                .map(|pred| (pred != truth) as usize)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(wrong as f64 / probes.len() as f64)
}

/// Fraction of probes where an nmc heuristic is positive (the measure of Q_n).
pub fn estimate_q_measure(z: &SampleSet, h: HeuristicSpec, probes: &ProbeSet) -> Result<f64> {
    if !h.is_nmc() {
        return Err(Error::InvalidParameter(
            "the Q measure is only defined for nmc heuristics".into(),
        ));
    }
    if probes.is_empty() {
        return Err(Error::InvalidParameter("probe set is empty".into()));
    }
    let geom = match h {
        HeuristicSpec::NmcVoronoi => Some(VoronoiIndex::build(z)?),
        _ => None,
    };
    let positive = probes
        .points
        .par_iter()
        .map(|p| {
            h.evaluate(p, z, geom.as_ref())
                .map(|phi| (phi > 0.0) as usize)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(positive as f64 / probes.len() as f64)
}

/// Predicted labels on a W×H grid over the unit square, row 0 at the top.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRaster {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl PredictionRaster {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> Label {
        self.labels[row * self.width + col]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Center of pixel (col, row) in domain coordinates.
    pub fn pixel_center(width: usize, height: usize, col: usize, row: usize) -> Point {
        Point::new_2d(
            (col as f64 + 0.5) / width as f64,
            1.0 - (row as f64 + 0.5) / height as f64,
        )
    }

    /// Pixel containing `p`.
    pub fn pixel_of(&self, p: &Point) -> (usize, usize) {
        let col = ((p.x() * self.width as f64) as usize).min(self.width - 1);
        let row = (((1.0 - p.y()) * self.height as f64) as usize).min(self.height - 1);
        (col, row)
    }

    /// Renders with label 0 white, label 1 black and labels >= 2 on evenly
    /// spaced hues; `overlay` samples are drawn as red pixels.
    pub fn to_ppm(&self, label_count: usize, overlay: Option<&SampleSet>) -> PnmImage {
        let mut rgb: Vec<[u8; 3]> = self
            .labels
            .iter()
            .map(|l| palette(*l, label_count))
            .collect();
        if let Some(z) = overlay {
            for s in z.samples() {
                let (col, row) = self.pixel_of(&s.point);
                rgb[row * self.width + col] = [255, 0, 0];
            }
        }
        PnmImage::rgb8(self.width, self.height, &rgb).expect("raster dimensions are positive")
    }
}

fn palette(label: Label, label_count: usize) -> [u8; 3] {
    match label.0 {
        0 => [255, 255, 255],
        1 => [0, 0, 0],
        l => {
            let extra = label_count.max(l as usize + 1) - 2;
            let hue = (l as f64 - 2.0) * 6.0 / extra as f64;
            let sector = hue.floor() as u32 % 6;
            let f = hue - hue.floor();
            let up = (255.0 * f).round() as u8;
            let down = 255 - up;
            match sector {
                0 => [255, up, 0],
                1 => [down, 255, 0],
                2 => [0, 255, up],
                3 => [0, down, 255],
                4 => [up, 0, 255],
                _ => [255, 0, down],
            }
        }
    }
}

/// Predicts every pixel center. Pixel (col, row) breaks ties with stream
/// `row * width + col` of `tie_seed`.
pub fn raster_predict(
    z: &SampleSet,
    width: usize,
    height: usize,
    rule: Rule,
    tie_seed: u64,
) -> Result<PredictionRaster> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(
            "raster dimensions must be positive".into(),
        ));
    }
    if let Some(s) = z.samples().first() {
        if s.point.dim() != 2 {
            return Err(Error::DimensionMismatch(s.point.dim(), 2));
        }
    }
    let labels = (0..width * height)
        .into_par_iter()
        .map(|i| {
            let (row, col) = (i / width, i % width);
            let mut rng = RngState::substream(tie_seed, i as u64);
            rule.predict(
                &PredictionRaster::pixel_center(width, height, col, row),
                z,
                &mut rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictionRaster {
        width,
        height,
        labels,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub n: usize,
    pub error: f64,
    pub q_measure: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorCurve {
    pub rows: Vec<CurveRow>,
}

pub const CURVE_HEADER: &str = "n,error,q_measure";

impl ErrorCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let q = r.q_measure.map(|q| q.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", r.n, r.error, q));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(CURVE_HEADER) {
            return Err(Error::Csv(format!("expected header {CURVE_HEADER:?}")));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let bad = |what: &str| Error::Csv(format!("line {}: bad {what}", i + 2));
            let cols: Vec<&str> = line.split(',').collect();
            let [n, error, q] = cols[..] else {
                return Err(bad("column count"));
            };
            rows.push(CurveRow {
                n: n.parse().map_err(|_| bad("n"))?,
                error: error.parse().map_err(|_| bad("error"))?,
                q_measure: if q.is_empty() {
                    None
                } else {
                    Some(q.parse().map_err(|_| bad("q_measure"))?)
                },
            });
        }
        Ok(Self { rows })
    }

    pub fn first(&self) -> Option<&CurveRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&CurveRow> {
        self.rows.last()
    }
}

/// Sample counts at which a curve is evaluated: from the end of seeding
/// (at least `min_n`) in steps of `stride`, always ending at `total`.
pub fn curve_points(seed_count: usize, total: usize, stride: usize, min_n: usize) -> Vec<usize> {
    let start = seed_count.max(min_n).max(1);
    if start > total || stride == 0 {
        return Vec::new();
    }
    let mut ns: Vec<usize> = (start..=total).step_by(stride).collect();
    if ns.last() != Some(&total) {
        ns.push(total);
    }
    ns
}

/// Error (and, for nmc heuristics, Q measure) along a run, on one probe set.
pub fn error_curve(
    trace: &RunTrace,
    heuristic: HeuristicSpec,
    probes: &ProbeSet,
    stride: usize,
    rule: Rule,
    tie_seed: u64,
) -> Result<ErrorCurve> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be >= 1".into()));
    }
    let mut rows = Vec::new();
    for n in curve_points(
        trace.seed_count,
        trace.samples.len(),
        stride,
        rule.min_samples(),
    ) {
        let z = trace.samples.prefix(n);
        let error = estimate_error(&z, probes, rule, tie_seed)?;
        let q_measure = if heuristic.is_nmc() {
            Some(estimate_q_measure(&z, heuristic, probes)?)
        } else {
            None
        };
        rows.push(CurveRow {
            n,
            error,
            q_measure,
        });
    }
    Ok(ErrorCurve { rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FailureRow {
    pub n: usize,
    pub analytic_exact: BigRational,
    pub analytic_error: f64,
    pub mc_error: f64,
}

/// Result of the adversarial 1D demonstration.
#[derive(Clone, Debug, PartialEq)]
pub struct FailureDemo {
    pub truth: TrueFunction,
    pub probe_count: usize,
    pub rows: Vec<FailureRow>,
}

pub const FAILURE_HEADER: &str = "n,analytic_error,mc_error";

impl FailureDemo {
    /// Exact comparison of consecutive analytic errors.
    pub fn analytic_strictly_increasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].analytic_exact > w[0].analytic_exact)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(FAILURE_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.n, r.analytic_error, r.mc_error));
        }
        out
    }
}

/// Samples z_1 = 0, z_n = 2^(2-n) of the demonstration.
pub fn failure_samples(truth: &TrueFunction, n: usize) -> Result<SampleSet> {
    let points: Vec<Point> = (1..=n)
        .map(|k| {
            if k == 1 {
                Point::new_1d(0.0)
            } else {
                Point::new_1d(2f64.powi(2 - k as i32))
            }
        })
        .collect();
    SampleSet::from_points(truth, &points)
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

/// Exact measure of {x in [0,1] : nearest-neighbor prediction != f(x)} for a
/// 1D sample set under the adversarial truth.
///
/// The prediction is constant between consecutive sample midpoints and the
/// truth is constant between interval endpoints, so the error is a finite
/// sum of interval overlaps. Midpoint ties have measure zero.
pub fn analytic_error_1d(truth: &TrueFunction, z: &SampleSet) -> Result<BigRational> {
    let TrueFunction::Adversarial1d(adv) = truth else {
        return Err(Error::InvalidParameter(
            "analytic error needs the adversarial 1D truth".into(),
        ));
    };
    if z.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let ones: Vec<(BigRational, BigRational)> = adv
        .intervals()
        .iter()
        .map(|&(l, r)| (exact(l), exact(r)))
        .collect();
    let mut sorted: Vec<(BigRational, Label)> = z
        .samples()
        .iter()
        .map(|s| (exact(s.point.x()), s.label))
        .collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let two = BigRational::from_integer(BigInt::from(2));
    let mut total = BigRational::zero();
    for (i, (pos, label)) in sorted.iter().enumerate() {
        let lo = if i == 0 {
            BigRational::zero()
        } else {
            (&sorted[i - 1].0 + pos) / &two
        };
        let hi = if i + 1 == sorted.len() {
            BigRational::from_integer(BigInt::from(1))
        } else {
            (pos + &sorted[i + 1].0) / &two
        };
        if hi <= lo {
            continue;
        }
        let mut ones_here = BigRational::zero();
        for (l, r) in &ones {
            let a = if *l > lo { l } else { &lo };
            let b = if *r < hi { r } else { &hi };
            if b > a {
                ones_here += b - a;
            }
        }
        total += if label.0 == 1 {
            (&hi - &lo) - ones_here
        } else {
            ones_here
        };
    }
    Ok(total)
}

/// Runs the demonstration for ζ_1 … ζ_{n_steps} with ε_i = 2^-(i+2).
pub fn failure_demo(
    i_max: u32,
    n_steps: usize,
    probe_count: usize,
    seed: u64,
) -> Result<FailureDemo> {
    if n_steps < 1 || n_steps + 2 > i_max as usize {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= n_steps <= i_max - 2, got n_steps = {n_steps}, i_max = {i_max}"
        )));
    }
    let truth = build_adversarial_1d(i_max, &EpsilonRule::default())?;
    let probes = ProbeSet::draw(&truth, probe_count, seed)?;
    let mut rows = Vec::with_capacity(n_steps);
    for n in 1..=n_steps {
        let z = failure_samples(&truth, n)?;
        let analytic_exact = analytic_error_1d(&truth, &z)?;
        let analytic_error = analytic_exact.to_f64().expect("value in [0, 1]");
        let mc_error = estimate_error(&z, &probes, Rule::Nn, mix64(seed))?;
        rows.push(FailureRow {
            n,
            analytic_exact,
            analytic_error,
            mc_error,
        });
    }
    Ok(FailureDemo {
        truth,
        probe_count,
        rows,
    })
}
