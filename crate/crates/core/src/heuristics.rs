//! Selection heuristics Φ(x, Z): distance to the sample set and the
//! non-modal count over K-nearest or Voronoi neighbors.

use std::fmt;
use std::str::FromStr;

use crate::domain::{dist_key, key_to_distance, Label, Point};
use crate::error::{Error, Result};
use crate::predictor::{k_nearest_tie_family, min_mode_frequency, mode_frequency, SampleSet};
use crate::voronoi::{voronoi_neighbors, VoronoiIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeuristicSpec {
    Distance,
    NmcKnn { k: usize },
    NmcVoronoi,
}

impl HeuristicSpec {
    pub fn nmc_knn(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "nmc-knn needs K >= 2, got {k}"
            )));
        }
        Ok(HeuristicSpec::NmcKnn { k })
    }

    /// Errors if the heuristic is not defined on a domain of dimension `dim`.
    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        match self {
            HeuristicSpec::NmcVoronoi if dim != 2 => Err(Error::InvalidParameter(
                "nmc-vor is only available on 2D domains".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_nmc(&self) -> bool {
        !matches!(self, HeuristicSpec::Distance)
    }

    /// Φ(x, Z). `geom` must be current for `z` when the variant is nmc-vor.
    pub fn evaluate(&self, x: &Point, z: &SampleSet, geom: Option<&VoronoiIndex>) -> Result<f64> {
        match *self {
            HeuristicSpec::Distance => Ok(phi_distance(x, z)),
            HeuristicSpec::NmcKnn { k } => Ok(phi_nmc_knn(x, z, k) as f64),
            HeuristicSpec::NmcVoronoi => {
                let geom = geom.ok_or_else(|| {
                    Error::InvalidParameter("nmc-vor needs a voronoi index".into())
                })?;
                Ok(phi_nmc_voronoi(x, z, geom)? as f64)
            }
        }
    }
}

/// Expected Voronoi-neighbor count used as the default K: 6 in the plane,
/// 16 in space (15.535... rounded), 2 on the line.
pub fn default_k(dim: usize) -> usize {
    match dim {
        1 => 2,
        2 => 6,
        _ => 16,
    }
}

impl fmt::Display for HeuristicSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeuristicSpec::Distance => f.write_str("dist"),
            HeuristicSpec::NmcKnn { k } => write!(f, "nmc-knn:{k}"),
            HeuristicSpec::NmcVoronoi => f.write_str("nmc-vor"),
        }
    }
}

impl FromStr for HeuristicSpec {
    type Err = Error;

    /// `dist`, `nmc-knn:K`, or `nmc-vor`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Selector(s.to_string(), why.to_string());
        match s.split_once(':') {
            None if s == "dist" => Ok(HeuristicSpec::Distance),
            None if s == "nmc-vor" => Ok(HeuristicSpec::NmcVoronoi),
            Some(("nmc-knn", k)) => {
                let k: usize = k.parse().map_err(|_| bad("K must be an integer"))?;
                HeuristicSpec::nmc_knn(k).map_err(|e| bad(&e.to_string()))
            }
            _ => Err(bad("expected dist, nmc-knn:K or nmc-vor")),
        }
    }
}

/// Distance from `x` to the nearest sample; +∞ for an empty set.
pub fn phi_distance(x: &Point, z: &SampleSet) -> f64 {
    let best = z
        .samples()
        .iter()
        .map(|s| dist_key(x, &s.point))
        .fold(f64::INFINITY, f64::min);
    key_to_distance(best, x.dim())
}

/// |L| minus the multiplicity of the most frequent label.
pub fn nonmodal_count(labels: &[Label]) -> usize {
    labels.len() - mode_frequency(labels.iter().copied())
}

/// Non-modal count over the most ambiguous K-nearest set.
///
/// Zero when `x` is a sample. With fewer than K samples the whole set is
/// used.
pub fn phi_nmc_knn(x: &Point, z: &SampleSet, k: usize) -> usize {
    if z.is_empty() || z.find_exact(x).is_some() {
        return 0;
    }
    let k = k.min(z.len());
    let family = k_nearest_tie_family(x, z, k).expect("1 <= k <= |Z| and x matches Z");
    family.set_size() - min_mode_frequency(&family, z)
}

/// Non-modal count over the Voronoi neighbors of `x`.
pub fn phi_nmc_voronoi(x: &Point, z: &SampleSet, geom: &VoronoiIndex) -> Result<usize> {
    let neighbors = voronoi_neighbors(x, z, geom)?;
    let labels: Vec<Label> = neighbors.iter().map(|&i| z.label(i)).collect();
    Ok(nonmodal_count(&labels))
}
