//! The selective sampling process: draw κ(n) candidates from μ, keep the
//! one maximizing Φ against the current samples, repeat.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::domain::{DomainSpace, Label, Point, TrueFunction};
use crate::error::{Error, Result};
use crate::heuristics::HeuristicSpec;
use crate::predictor::{LabeledSample, SampleSet};
use crate::rng::RngState;
use crate::voronoi::VoronoiIndex;

/// Candidate-count schedule κ(n).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaSchedule {
    Constant(usize),
    /// ⌊H_⌈lg(n+1)⌉⌋, at least 1
    HarmonicLog,
    /// plain iid sampling, κ ≡ 1
    Iid,
}

impl KappaSchedule {
    pub fn constant(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("kappa must be >= 1".into()));
        }
        Ok(KappaSchedule::Constant(k))
    }
}

/// κ(n) for n >= 1.
pub fn kappa_value(schedule: KappaSchedule, n: u64) -> usize {
    match schedule {
        KappaSchedule::Constant(k) => k,
        KappaSchedule::Iid => 1,
        KappaSchedule::HarmonicLog => {
            let m = n.saturating_add(1);
            // ⌈lg m⌉ for m >= 2
            let j = 64 - (m - 1).leading_zeros();
            let h: f64 = (1..=j).map(|i| 1.0 / i as f64).sum();
            (h.floor() as usize).max(1)
        }
    }
}

impl fmt::Display for KappaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaSchedule::Constant(k) => write!(f, "const:{k}"),
            KappaSchedule::HarmonicLog => f.write_str("hlog"),
            KappaSchedule::Iid => f.write_str("iid"),
        }
    }
}

impl FromStr for KappaSchedule {
    type Err = Error;

    /// `const:k`, `hlog`, or `iid`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Selector(s.to_string(), why.to_string());
        match s.split_once(':') {
            None if s == "hlog" => Ok(KappaSchedule::HarmonicLog),
            None if s == "iid" => Ok(KappaSchedule::Iid),
            Some(("const", k)) => {
                let k: usize = k.parse().map_err(|_| bad("k must be an integer"))?;
                KappaSchedule::constant(k).map_err(|e| bad(&e.to_string()))
            }
            _ => Err(bad("expected const:k, hlog or iid")),
        }
    }
}

/// Number of initial iid samples, max(20, 5/p) rounded up, for a smallest
/// component of measure p.
pub fn seed_count_from_p(p: f64) -> Result<usize> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "p must lie in (0, 1], got {p}"
        )));
    }
    Ok(20f64.max(5.0 / p).ceil() as usize)
}

/// How many iid samples open a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SeedCount {
    Explicit(usize),
    /// smallest-component measure p
    FromP(f64),
}

impl SeedCount {
    pub fn resolve(self) -> Result<usize> {
        match self {
            SeedCount::Explicit(n) => Ok(n),
            SeedCount::FromP(p) => seed_count_from_p(p),
        }
    }
}

impl fmt::Display for SeedCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedCount::Explicit(n) => write!(f, "{n}"),
            SeedCount::FromP(p) => write!(f, "p:{p}"),
        }
    }
}

impl FromStr for SeedCount {
    type Err = Error;

    /// `N` or `p:P`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Selector(s.to_string(), why.to_string());
        match s.split_once(':') {
            None => s
                .parse()
                .map(SeedCount::Explicit)
                .map_err(|_| bad("expected an integer or p:P")),
            Some(("p", p)) => {
                let p: f64 = p.parse().map_err(|_| bad("p must be a number"))?;
                seed_count_from_p(p).map_err(|e| bad(&e.to_string()))?;
                Ok(SeedCount::FromP(p))
            }
            _ => Err(bad("expected an integer or p:P")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProcessConfig {
    pub heuristic: HeuristicSpec,
    pub kappa: KappaSchedule,
    /// N, the final sample count
    pub total: usize,
    pub initial: usize,
    pub seed: u64,
}

impl ProcessConfig {
    pub fn validate(&self, domain: &DomainSpace) -> Result<()> {
        if self.initial > self.total {
            return Err(Error::InvalidParameter(format!(
                "initial seed count {} exceeds total {}",
                self.initial, self.total
            )));
        }
        self.heuristic.check_dimension(domain.dim())?;
        if let KappaSchedule::Constant(0) = self.kappa {
            return Err(Error::InvalidParameter("kappa must be >= 1".into()));
        }
        Ok(())
    }
}

/// One selection step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub kappa: usize,
    /// Φ of the chosen candidate (the step maximum)
    pub phi: f64,
    /// number of candidates sharing the maximum
    pub ties: usize,
    pub point: Point,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub samples: SampleSet,
    pub seed_count: usize,
    pub records: Vec<StepRecord>,
    /// domain points drawn from the run's stream
    pub domain_draws: u64,
}

/// Draws κ(n) candidates and returns the Φ-maximizing one, labeled.
pub fn select_next(
    z: &SampleSet,
    cfg: &ProcessConfig,
    n: usize,
    rng: &mut RngState,
    truth: &TrueFunction,
    geom: Option<&VoronoiIndex>,
) -> Result<(LabeledSample, StepRecord)> {
    let domain = truth.domain();
    let kappa = kappa_value(cfg.kappa, n as u64);
    let candidates: Vec<Point> = (0..kappa).map(|_| domain.sample_mu(rng)).collect();
    let mut best = f64::NEG_INFINITY;
    let mut argmax: Vec<usize> = Vec::new();
    if kappa == 1 {
        argmax.push(0);
        best = cfg.heuristic.evaluate(&candidates[0], z, geom)?;
    } else {
        for (i, c) in candidates.iter().enumerate() {
            let phi = cfg.heuristic.evaluate(c, z, geom)?;
            if phi > best {
                best = phi;
                argmax.clear();
            }
            if phi == best {
                argmax.push(i);
            }
        }
    }
    let pick = if argmax.len() == 1 {
        argmax[0]
    } else {
        argmax[rng.gen_range(0..argmax.len())]
    };
    let point = candidates[pick];
    let label = truth.label_of(&point)?;
    let record = StepRecord {
        n,
        kappa,
        phi: best,
        ties: argmax.len(),
        point,
        label,
    };
    Ok((
        LabeledSample {
            point,
            label,
            index: n,
        },
        record,
    ))
}

/// Runs the process to `cfg.total` samples.
pub fn run_process(
    cfg: &ProcessConfig,
    domain: &DomainSpace,
    truth: &TrueFunction,
) -> Result<RunTrace> {
    if domain.dim() != truth.dimension() {
        return Err(Error::DimensionMismatch(domain.dim(), truth.dimension()));
    }
    cfg.validate(domain)?;
    let mut rng = RngState::from_seed(cfg.seed);
    let mut z = SampleSet::new();
    for _ in 0..cfg.initial {
        let p = domain.sample_mu(&mut rng);
        z.push(p, truth.label_of(&p)?)?;
    }
    let mut geom = match cfg.heuristic {
        HeuristicSpec::NmcVoronoi => Some(VoronoiIndex::build(&z)?),
        _ => None,
    };
    let mut records = Vec::with_capacity(cfg.total - cfg.initial);
    for n in cfg.initial + 1..=cfg.total {
        let (sample, record) = select_next(&z, cfg, n, &mut rng, truth, geom.as_ref())?;
        z.push(sample.point, sample.label)?;
        if let Some(g) = geom.as_mut() {
            g.extend(&z)?;
        }
        records.push(record);
    }
    Ok(RunTrace {
        samples: z,
        seed_count: cfg.initial,
        records,
        domain_draws: rng.domain_draws(),
    })
}

/// One row of a trace CSV. Seed rows carry no kappa/phi/ties.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub kappa: Option<usize>,
    pub phi: Option<f64>,
    pub ties: Option<usize>,
    pub point: Point,
    pub label: Label,
}

pub const TRACE_HEADER: &str = "n,kappa,phi,ties,x,y,label";

impl RunTrace {
    pub fn rows(&self) -> Vec<TraceRow> {
        let seeds = self.samples.samples()[..self.seed_count]
            .iter()
            .map(|s| TraceRow {
                n: s.index,
                kappa: None,
                phi: None,
                ties: None,
                point: s.point,
                label: s.label,
            });
        let steps = self.records.iter().map(|r| TraceRow {
            n: r.n,
            kappa: Some(r.kappa),
            phi: Some(r.phi),
            ties: Some(r.ties),
            point: r.point,
            label: r.label,
        });
        seeds.chain(steps).collect()
    }

    pub fn to_csv(&self) -> String {
        write_trace_csv(&self.rows())
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 48 + 32);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let y = if r.point.dim() == 2 {
            r.point.y().to_string()
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            opt(r.kappa),
            opt(r.phi),
            opt(r.ties),
            r.point.x(),
            y,
            r.label
        ));
    }
    out
}

fn field<T: FromStr>(line: usize, name: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Csv(format!("line {line}: bad {name} {s:?}")))
}

fn opt_field<T: FromStr>(line: usize, name: &str, s: &str) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(line, name, s).map(Some)
    }
}

/// Parses a trace CSV produced by [`write_trace_csv`].
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err(Error::Csv(format!("expected header {TRACE_HEADER:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let ln = i + 2;
        let cols: Vec<&str> = line.split(',').collect();
        let [n, kappa, phi, ties, x, y, label] = cols[..] else {
            return Err(Error::Csv(format!(
                "line {ln}: expected 7 columns, got {}",
                cols.len()
            )));
        };
        let x: f64 = field(ln, "x", x)?;
        let point = match opt_field::<f64>(ln, "y", y)? {
            Some(y) => Point::from_slice(&[x, y]),
            None => Point::from_slice(&[x]),
        }
        .map_err(|e| Error::Csv(format!("line {ln}: {e}")))?;
        rows.push(TraceRow {
            n: field(ln, "n", n)?,
            kappa: opt_field(ln, "kappa", kappa)?,
            phi: opt_field(ln, "phi", phi)?,
            ties: opt_field(ln, "ties", ties)?,
            point,
            label: Label(field(ln, "label", label)?),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_value(KappaSchedule::Constant(10), 1), 10);
        assert_eq!(kappa_value(KappaSchedule::Constant(10), 12345), 10);
        assert_eq!(kappa_value(KappaSchedule::Iid, 7), 1);
        assert_eq!(kappa_value(KappaSchedule::HarmonicLog, 1), 1);
        // ⌈lg 8⌉ = 3, H_3 = 11/6
        assert_eq!(kappa_value(KappaSchedule::HarmonicLog, 7), 1);
        // ⌈lg 9⌉ = 4, H_4 = 25/12
        assert_eq!(kappa_value(KappaSchedule::HarmonicLog, 8), 2);
        // ⌈lg 1025⌉ = 11, H_11 ≈ 3.0199
        assert_eq!(kappa_value(KappaSchedule::HarmonicLog, 1024), 3);
    }

    #[test]
    fn harmonic_log_is_monotone_and_bounded() {
        let mut prev = 0;
        // every change point of ⌈lg(n+1)⌉ up to 1e9 is n = 2^j
        let mut ns: Vec<u64> = (1..=5000).collect();
        for j in 12..30 {
            ns.extend([(1u64 << j) - 1, 1u64 << j, (1u64 << j) + 1]);
        }
        ns.push(1_000_000_000);
        for n in ns {
            let k = kappa_value(KappaSchedule::HarmonicLog, n);
            assert!(k >= prev && k <= 4, "n = {n}: {k}");
            prev = k;
        }
    }

    #[test]
    fn seed_count_examples() {
        assert_eq!(seed_count_from_p(0.25).unwrap(), 20);
        assert_eq!(seed_count_from_p(0.05).unwrap(), 100);
        assert_eq!(seed_count_from_p(1.0).unwrap(), 20);
        assert!(seed_count_from_p(0.0).is_err());
        assert!(seed_count_from_p(1.5).is_err());
        assert!(seed_count_from_p(f64::NAN).is_err());
    }

    #[test]
    fn selector_parsing() {
        assert_eq!(
            "const:3".parse::<KappaSchedule>().unwrap(),
            KappaSchedule::Constant(3)
        );
        assert_eq!(
            "hlog".parse::<KappaSchedule>().unwrap(),
            KappaSchedule::HarmonicLog
        );
        assert_eq!("iid".parse::<KappaSchedule>().unwrap(), KappaSchedule::Iid);
        assert!("const:0".parse::<KappaSchedule>().is_err());
        assert!("const".parse::<KappaSchedule>().is_err());
        assert_eq!("20".parse::<SeedCount>().unwrap(), SeedCount::Explicit(20));
        assert_eq!(
            "p:0.05".parse::<SeedCount>().unwrap().resolve().unwrap(),
            100
        );
        assert!("p:0".parse::<SeedCount>().is_err());
    }

    fn disk() -> TrueFunction {
        TrueFunction::disk(0.5, 0.5, 0.3).unwrap()
    }

    #[test]
    fn iid_candidate_is_taken_verbatim() {
        let truth = disk();
        let cfg = ProcessConfig {
            heuristic: HeuristicSpec::NmcKnn { k: 6 },
            kappa: KappaSchedule::Iid,
            total: 5,
            initial: 0,
            seed: 4,
        };
        let z = SampleSet::new();
        let mut rng = RngState::from_seed(9);
        let mut shadow = RngState::from_seed(9);
        let expected = truth.domain().sample_mu(&mut shadow);
        let (s, rec) = select_next(&z, &cfg, 1, &mut rng, &truth, None).unwrap();
        assert_eq!(s.point, expected);
        assert_eq!(rec.ties, 1);
    }

    #[test]
    fn single_positive_candidate_wins() {
        // all samples labeled 0 except near the right edge; only candidates
        // in that region have a positive count
        let truth = TrueFunction::checkerboard(1).unwrap();
        let mut z = SampleSet::new();
        for (x, y, l) in [
            (0.9, 0.9, 1u16),
            (0.95, 0.85, 0),
            (0.1, 0.1, 0),
            (0.2, 0.1, 0),
            (0.1, 0.2, 0),
        ] {
            z.push(Point::new_2d(x, y), Label(l)).unwrap();
        }
        let cfg = ProcessConfig {
            heuristic: HeuristicSpec::NmcKnn { k: 2 },
            kappa: KappaSchedule::Constant(4),
            total: 10,
            initial: 0,
            seed: 0,
        };
        for seed in 0..50 {
            let mut rng = RngState::from_seed(seed);
            let mut shadow = rng.clone();
            let cands: Vec<Point> = (0..4)
                .map(|_| truth.domain().sample_mu(&mut shadow))
                .collect();
            let phis: Vec<usize> = cands
                .iter()
                .map(|c| crate::heuristics::phi_nmc_knn(c, &z, 2))
                .collect();
            let positive: Vec<usize> = (0..4).filter(|&i| phis[i] > 0).collect();
            let (s, _) = select_next(&z, &cfg, 6, &mut rng, &truth, None).unwrap();
            if positive.len() == 1 {
                assert_eq!(s.point, cands[positive[0]]);
            }
        }
    }

    #[test]
    fn run_is_deterministic_and_accounted() {
        let truth = disk();
        let cfg = ProcessConfig {
            heuristic: HeuristicSpec::Distance,
            kappa: KappaSchedule::Constant(3),
            total: 120,
            initial: 20,
            seed: 7,
        };
        let a = run_process(&cfg, &truth.domain(), &truth).unwrap();
        let b = run_process(&cfg, &truth.domain(), &truth).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.records.len(), 100);
        assert_eq!(a.samples.len(), 120);
        assert_eq!(a.domain_draws, 20 + 3 * 100);
        for r in &a.records {
            assert!(r.ties >= 1);
            let phi = crate::heuristics::phi_distance(&r.point, &a.samples.prefix(r.n - 1));
            assert_eq!(phi, r.phi);
        }
    }

    #[test]
    fn pure_seed_run() {
        let truth = disk();
        let cfg = ProcessConfig {
            heuristic: HeuristicSpec::Distance,
            kappa: KappaSchedule::Constant(3),
            total: 20,
            initial: 20,
            seed: 1,
        };
        let t = run_process(&cfg, &truth.domain(), &truth).unwrap();
        assert!(t.records.is_empty());
        assert_eq!(t.domain_draws, 20);
    }

    #[test]
    fn rejects_bad_configs() {
        let truth = disk();
        let mut cfg = ProcessConfig {
            heuristic: HeuristicSpec::Distance,
            kappa: KappaSchedule::Constant(3),
            total: 10,
            initial: 20,
            seed: 1,
        };
        assert!(run_process(&cfg, &truth.domain(), &truth).is_err());
        cfg.initial = 0;
        assert!(run_process(&cfg, &DomainSpace::unit_interval(), &truth).is_err());
        let adv = crate::domain::build_adversarial_1d(5, &Default::default()).unwrap();
        cfg.heuristic = HeuristicSpec::NmcVoronoi;
        assert!(run_process(&cfg, &adv.domain(), &adv).is_err());
    }

    #[test]
    fn voronoi_run_keeps_index_current() {
        let truth = disk();
        let cfg = ProcessConfig {
            heuristic: HeuristicSpec::NmcVoronoi,
            kappa: KappaSchedule::Constant(5),
            total: 80,
            initial: 20,
            seed: 3,
        };
        let t = run_process(&cfg, &truth.domain(), &truth).unwrap();
        assert_eq!(t.samples.len(), 80);
        let idx = VoronoiIndex::build(&t.samples).unwrap();
        assert!(idx.is_delaunay());
    }

    #[test]
    fn trace_csv_round_trip() {
        let truth = disk();
        let cfg = ProcessConfig {
            heuristic: HeuristicSpec::Distance,
            kappa: KappaSchedule::Constant(2),
            total: 30,
            initial: 0,
            seed: 2,
        };
        let t = run_process(&cfg, &truth.domain(), &truth).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("n,kappa,phi,ties,x,y,label\n1,2,inf,"));
        assert_eq!(parse_trace_csv(&csv).unwrap(), t.rows());

        let adv = crate::domain::build_adversarial_1d(5, &Default::default()).unwrap();
        let cfg = ProcessConfig { initial: 3, ..cfg };
        let t = run_process(&cfg, &adv.domain(), &adv).unwrap();
        let csv = t.to_csv();
        assert!(csv.lines().nth(1).unwrap().starts_with("1,,,,"));
        assert!(csv.lines().nth(1).unwrap().contains(",,"));
        assert_eq!(parse_trace_csv(&csv).unwrap(), t.rows());
        assert!(parse_trace_csv("n,x\n").is_err());
        assert!(parse_trace_csv(&format!("{TRACE_HEADER}\n1,2,3\n")).is_err());
    }
}
