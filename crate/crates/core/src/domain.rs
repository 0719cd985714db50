//! Domain spaces (metric, uniform measure) and the deterministic true
//! labelings used throughout the experiments.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pnm::PnmImage;
use crate::rng::RngState;

/// A point of the unit interval (dimension 1) or unit square (dimension 2).
///
/// One-dimensional points keep their second coordinate at zero so that
/// derived equality is coordinate equality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: u8,
}

impl Point {
    pub fn new_1d(x: f64) -> Self {
        Self {
            coords: [x, 0.0],
            dim: 1,
        }
    }

    pub fn new_2d(x: f64, y: f64) -> Self {
        Self {
            coords: [x, y],
            dim: 2,
        }
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite coordinate in {coords:?}"
            )));
        }
        match *coords {
            [x] => Ok(Self::new_1d(x)),
            [x, y] => Ok(Self::new_2d(x, y)),
            _ => Err(Error::InvalidParameter(format!(
                "points have 1 or 2 coordinates, got {}",
                coords.len()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    /// Second coordinate; zero for 1D points.
    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub(crate) fn xy(&self) -> [f64; 2] {
        self.coords
    }

    pub fn in_unit_box(&self) -> bool {
        self.coords().iter().all(|c| (0.0..=1.0).contains(c))
    }
}

/// Monotone key for exact distance comparisons: |dx| in 1D, squared
/// Euclidean distance in 2D. Callers guarantee equal dimensions.
#[inline]
pub(crate) fn dist_key(p: &Point, q: &Point) -> f64 {
    debug_assert_eq!(p.dim, q.dim);
    if p.dim == 1 {
        (p.coords[0] - q.coords[0]).abs()
    } else {
        let dx = p.coords[0] - q.coords[0];
        let dy = p.coords[1] - q.coords[1];
        dx * dx + dy * dy
    }
}

#[inline]
pub(crate) fn key_to_distance(key: f64, dim: usize) -> f64 {
    if dim == 1 {
        key
    } else {
        key.sqrt()
    }
}

/// Euclidean distance.
pub fn distance(p: &Point, q: &Point) -> Result<f64> {
    if p.dim != q.dim {
        return Err(Error::DimensionMismatch(p.dim(), q.dim()));
    }
    let dx = p.coords[0] - q.coords[0];
    let dy = p.coords[1] - q.coords[1];
    Ok(dx.hypot(dy))
}

/// Unit interval or unit square under the Euclidean metric and the uniform
/// (Lebesgue) probability measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DomainSpace {
    dim: u8,
}

impl DomainSpace {
    pub fn unit_interval() -> Self {
        Self { dim: 1 }
    }

    pub fn unit_square() -> Self {
        Self { dim: 2 }
    }

    pub fn with_dimension(dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(Self::unit_interval()),
            2 => Ok(Self::unit_square()),
            d => Err(Error::InvalidParameter(format!(
                "domain dimension must be 1 or 2, got {d}"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim == self.dim && p.in_unit_box()
    }

    /// Draws one point uniformly over the domain.
    pub fn sample_mu(&self, rng: &mut RngState) -> Point {
        rng.note_domain_draw();
        if self.dim == 1 {
            Point::new_1d(rng.gen::<f64>())
        } else {
            let x = rng.gen::<f64>();
            let y = rng.gen::<f64>();
            Point::new_2d(x, y)
        }
    }
}

/// Small integer code for a class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub u16);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Choice of ε_i for the adversarial 1D construction.
#[derive(Clone, Debug, PartialEq)]
pub enum EpsilonRule {
    /// ε_i = 2^-(i + offset)
    Dyadic { offset: u32 },
    /// ε_1, ε_2, ... given explicitly
    Explicit(Vec<f64>),
}

impl Default for EpsilonRule {
    fn default() -> Self {
        EpsilonRule::Dyadic { offset: 2 }
    }
}

impl EpsilonRule {
    fn epsilon(&self, i: u32) -> Option<f64> {
        match self {
            EpsilonRule::Dyadic { offset } => Some(pow2(-((i + offset) as i32))),
            EpsilonRule::Explicit(v) => v.get(i as usize - 1).copied(),
        }
    }
}

pub(crate) fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// Indicator of {0} ∪ ⋃_{i ≤ i_max} (2^-i, 3·2^-(i+1) + ε_i] on [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Adversarial1d {
    i_max: u32,
    epsilons: Vec<f64>,
    /// (left, right) per i = 1..=i_max; left open, right closed
    intervals: Vec<(f64, f64)>,
}

impl Adversarial1d {
    pub const DEFAULT_I_MAX: u32 = 20;
    pub const MAX_I_MAX: u32 = 1000;

    pub fn i_max(&self) -> u32 {
        self.i_max
    }

    pub fn epsilon(&self, i: u32) -> f64 {
        self.epsilons[i as usize - 1]
    }

    /// Labeled-1 intervals `(left, right]`, outermost first.
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    fn label(&self, x: f64) -> Label {
        if x == 0.0 {
            return Label(1);
        }
        let inside = self
            .intervals
            .iter()
            .any(|&(left, right)| x > left && x <= right);
        Label(inside as u16)
    }
}

/// Builds the adversarial 1D truth, truncated below 2^-i_max.
pub fn build_adversarial_1d(i_max: u32, rule: &EpsilonRule) -> Result<TrueFunction> {
    if !(2..=Adversarial1d::MAX_I_MAX).contains(&i_max) {
        return Err(Error::InvalidParameter(format!(
            "i_max must lie in 2..={}, got {i_max}",
            Adversarial1d::MAX_I_MAX
        )));
    }
    let mut epsilons = Vec::with_capacity(i_max as usize);
    let mut intervals = Vec::with_capacity(i_max as usize);
    for i in 1..=i_max {
        let eps = rule.epsilon(i).ok_or_else(|| {
            Error::InvalidParameter(format!("epsilon rule has no value for i = {i}"))
        })?;
        let bound = pow2(-(i as i32 + 1));
        if !(eps > 0.0 && eps < bound) {
            return Err(Error::InvalidParameter(format!(
                "epsilon_{i} = {eps} violates 0 < epsilon < 2^-{}",
                i + 1
            )));
        }
        epsilons.push(eps);
        intervals.push((pow2(-(i as i32)), 3.0 * bound + eps));
    }
    Ok(TrueFunction::Adversarial1d(Adversarial1d {
        i_max,
        epsilons,
        intervals,
    }))
}

/// Raster of label codes covering the unit square; row 0 is the top edge.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelImage {
    width: usize,
    height: usize,
    labels: Vec<Label>,
    label_count: usize,
}

impl LabelImage {
    /// Maps each distinct pixel value to a label in first-seen order.
    pub fn from_pnm(img: &PnmImage) -> Result<Self> {
        let mut seen: Vec<&[u16]> = Vec::new();
        let mut labels = Vec::with_capacity(img.width() * img.height());
        for px in img.pixels() {
            let code = match seen.iter().position(|s| *s == px) {
                Some(i) => i,
                None => {
                    seen.push(px);
                    seen.len() - 1
                }
            };
            let code = u16::try_from(code)
                .map_err(|_| Error::Image("more than 65536 distinct pixel values".into()))?;
            labels.push(Label(code));
        }
        Ok(Self {
            width: img.width(),
            height: img.height(),
            labels,
            label_count: seen.len().max(2),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> Label {
        self.labels[row * self.width + col]
    }

    fn label_at(&self, x: f64, y: f64) -> Label {
        let col = ((x * self.width as f64) as usize).min(self.width - 1);
        let row = (((1.0 - y) * self.height as f64) as usize).min(self.height - 1);
        self.get(col, row)
    }
}

/// The deterministic labeler f : X → Y.
#[derive(Clone, Debug, PartialEq)]
pub enum TrueFunction {
    /// 1 inside the closed disk, 0 outside.
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// k×k board, label = (col + row) mod 2. k = 1 is the constant labeling.
    Checkerboard {
        k: u32,
    },
    Image(LabelImage),
    Adversarial1d(Adversarial1d),
}

impl TrueFunction {
    pub fn disk(cx: f64, cy: f64, radius: f64) -> Result<Self> {
        if ![cx, cy, radius].iter().all(|v| v.is_finite()) || radius < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "bad disk ({cx}, {cy}; r = {radius})"
            )));
        }
        Ok(TrueFunction::Disk {
            center: [cx, cy],
            radius,
        })
    }

    pub fn checkerboard(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("checkerboard needs k >= 1".into()));
        }
        Ok(TrueFunction::Checkerboard { k })
    }

    pub fn dimension(&self) -> usize {
        match self {
            TrueFunction::Adversarial1d(_) => 1,
            _ => 2,
        }
    }

    pub fn domain(&self) -> DomainSpace {
        if self.dimension() == 1 {
            DomainSpace::unit_interval()
        } else {
            DomainSpace::unit_square()
        }
    }

    pub fn label_count(&self) -> usize {
        match self {
            TrueFunction::Image(img) => img.label_count,
            _ => 2,
        }
    }

    pub fn label_of(&self, p: &Point) -> Result<Label> {
        if p.dim() != self.dimension() {
            return Err(Error::DimensionMismatch(p.dim(), self.dimension()));
        }
        if !p.in_unit_box() {
            return Err(Error::OutOfDomain(p.coords().to_vec()));
        }
        Ok(self.label_unchecked(p))
    }

    /// Label of a point already known to lie in the domain.
    pub(crate) fn label_unchecked(&self, p: &Point) -> Label {
        match self {
            TrueFunction::Disk { center, radius } => {
                let dx = p.x() - center[0];
                let dy = p.y() - center[1];
                Label((dx * dx + dy * dy <= radius * radius) as u16)
            }
            TrueFunction::Checkerboard { k } => {
                let k = *k as f64;
                let col = ((p.x() * k) as u64).min(k as u64 - 1);
                let row = ((p.y() * k) as u64).min(k as u64 - 1);
                Label(((col + row) % 2) as u16)
            }
            TrueFunction::Image(img) => img.label_at(p.x(), p.y()),
            TrueFunction::Adversarial1d(adv) => adv.label(p.x()),
        }
    }
}
