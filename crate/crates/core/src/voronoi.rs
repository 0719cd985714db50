//! Voronoi-neighbor queries over a 2D sample set.
//!
//! A query point's Voronoi neighbors are read off a Delaunay triangulation
//! of the samples: the query is located (without being inserted) and the
//! vertices of its conflict cavity are exactly its Delaunay neighbors after
//! a hypothetical insertion. Each candidate is then kept only if the
//! bisector edge it would share with the query reaches the closed unit
//! square.
//!
//! Predicates run on coordinates shifted by a per-vertex symbolic jitter of
//! order 2^-40 derived from the sample index, which breaks cocircular and
//! collinear ties reproducibly. Clipping and all distance tests use the
//! original coordinates.
//!
//! [`certify_voronoi_neighbor`] checks the neighbor definition directly by
//! searching for a witness point and shares no code with the triangulation.

use std::collections::HashMap;

use crate::delaunay::{orient, Triangulation};
use crate::domain::{dist_key, Point};
use crate::error::{Error, Result};
use crate::predictor::{nearest_indices, SampleSet};
use crate::rng::mix64;

const JITTER_SCALE: f64 = 1.0 / (1u64 << 40) as f64;
const QUERY_JITTER_ID: u64 = u64::MAX;
/// Slack on the bisector clipping; errs toward reporting a neighbor.
const CLIP_SLACK: f64 = 1e-12;

fn jitter(p: [f64; 2], id: u64) -> [f64; 2] {
    let h = mix64(id);
    let u = (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    let w = (mix64(h) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    [p[0] + u * JITTER_SCALE, p[1] + w * JITTER_SCALE]
}

#[derive(Clone, Debug)]
enum Geometry {
    /// all samples collinear (or fewer than three distinct points)
    Degenerate,
    Triangulated {
        tri: Triangulation,
        /// original coordinates per triangulation vertex
        origin: Vec<[f64; 2]>,
        /// sample indices sharing each vertex
        members: Vec<Vec<usize>>,
    },
}

/// Delaunay triangulation over a sample set, tied to the set by length and
/// checksum.
#[derive(Clone, Debug)]
pub struct VoronoiIndex {
    len: usize,
    checksum: u64,
    /// original-coordinate bits -> vertex id
    by_coords: HashMap<(u64, u64), u32>,
    geometry: Geometry,
}

fn bits(p: [f64; 2]) -> (u64, u64) {
    (p[0].to_bits(), p[1].to_bits())
}

impl VoronoiIndex {
    /// Builds the index over every sample of `z`.
    pub fn build(z: &SampleSet) -> Result<Self> {
        let mut idx = Self {
            len: 0,
            checksum: 0,
            by_coords: HashMap::new(),
            geometry: Geometry::Degenerate,
        };
        idx.extend(z)?;
        Ok(idx)
    }

    /// Number of samples covered (the generation counter).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.geometry, Geometry::Degenerate)
    }

    /// Errors unless the index was built over exactly `z`.
    pub fn check_current(&self, z: &SampleSet) -> Result<()> {
        if self.len != z.len() || self.checksum != z.checksum() {
            return Err(Error::StaleIndex {
                index_len: self.len,
                index_sum: self.checksum,
                set_len: z.len(),
                set_sum: z.checksum(),
            });
        }
        Ok(())
    }

    /// Adds the samples of `z` beyond those already indexed. `z` must
    /// extend the indexed set.
    pub fn extend(&mut self, z: &SampleSet) -> Result<()> {
        if let Some(s) = z.samples().first() {
            if s.point.dim() != 2 {
                return Err(Error::DimensionMismatch(s.point.dim(), 2));
            }
        }
        if z.len() < self.len || z.prefix_checksum(self.len) != self.checksum {
            return Err(Error::StaleIndex {
                index_len: self.len,
                index_sum: self.checksum,
                set_len: z.len(),
                set_sum: z.checksum(),
            });
        }
        let fresh = &z.samples()[self.len..];
        if self.is_degenerate() {
            self.by_coords.clear();
            self.geometry = Self::triangulate_all(z, &mut self.by_coords);
        } else {
            for s in fresh {
                self.add_sample(s.index, s.point.xy());
            }
        }
        self.len = z.len();
        self.checksum = z.checksum();
        Ok(())
    }

    fn triangulate_all(z: &SampleSet, by_coords: &mut HashMap<(u64, u64), u32>) -> Geometry {
        // distinct points with the index of their first occurrence
        let mut distinct: Vec<(usize, [f64; 2])> = Vec::new();
        let mut seen: HashMap<(u64, u64), ()> = HashMap::new();
        for s in z.samples() {
            let p = s.point.xy();
            if seen.insert(bits(p), ()).is_none() {
                distinct.push((s.index, p));
            }
        }
        if distinct.len() < 3 {
            return Geometry::Degenerate;
        }
        let (ia, a) = distinct[0];
        let (ib, b) = distinct[1];
        let Some(&(ic, c)) = distinct[2..].iter().find(|(_, c)| orient(a, b, *c) != 0.0) else {
            return Geometry::Degenerate;
        };
        let (ja, jb, jc) = (
            jitter(a, ia as u64),
            jitter(b, ib as u64),
            jitter(c, ic as u64),
        );
        let Some(tri) = Triangulation::new(ja, jb, jc) else {
            return Geometry::Degenerate;
        };
        let order = Triangulation::seed_order(ja, jb, jc);
        let mut origin = vec![[0.0; 2]; 3];
        for (slot, p) in order.iter().zip([a, b, c]) {
            origin[*slot as usize] = p;
            by_coords.insert(bits(p), *slot);
        }
        let mut idx = Self {
            len: 0,
            checksum: 0,
            by_coords: std::mem::take(by_coords),
            geometry: Geometry::Triangulated {
                tri,
                origin,
                members: vec![Vec::new(); 3],
            },
        };
        for s in z.samples() {
            idx.add_sample(s.index, s.point.xy());
        }
        *by_coords = idx.by_coords;
        idx.geometry
    }

    fn add_sample(&mut self, index: usize, p: [f64; 2]) {
        let Geometry::Triangulated {
            tri,
            origin,
            members,
        } = &mut self.geometry
        else {
            return;
        };
        if let Some(&v) = self.by_coords.get(&bits(p)) {
            // seed vertices are registered before their samples arrive
            if !members[v as usize].contains(&index) {
                members[v as usize].push(index);
            }
            return;
        }
        match tri.insert(jitter(p, index as u64)) {
            Some(v) => {
                debug_assert_eq!(v as usize, origin.len());
                origin.push(p);
                members.push(vec![index]);
                self.by_coords.insert(bits(p), v);
            }
            None => {
                // jittered coordinates collided with another vertex; share it
                let jp = jitter(p, index as u64);
                let v = (0..tri.vertex_count() as u32)
                    .find(|&v| tri.point(v) == jp)
                    .expect("insert only fails on an existing vertex");
                members[v as usize].push(index);
                self.by_coords.insert(bits(p), v);
            }
        }
    }

    /// Triangles as triples of original coordinates (for inspection/tests).
    pub fn triangles(&self) -> Vec<[Point; 3]> {
        match &self.geometry {
            Geometry::Degenerate => Vec::new(),
            Geometry::Triangulated { tri, origin, .. } => tri
                .triangles()
                .map(|v| v.map(|i| Point::new_2d(origin[i as usize][0], origin[i as usize][1])))
                .collect(),
        }
    }

    /// Sample indices adjacent to sample `index` in the triangulation.
    pub fn delaunay_adjacent(&self, index: usize) -> Vec<usize> {
        let Geometry::Triangulated { tri, members, .. } = &self.geometry else {
            return Vec::new();
        };
        let Some(v) = members.iter().position(|m| m.contains(&index)) else {
            return Vec::new();
        };
        let mut out: Vec<usize> = tri
            .adjacent(v as u32)
            .into_iter()
            .flat_map(|w| members[w as usize].iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// Empty-circumcircle check over the jittered coordinates.
    pub fn is_delaunay(&self) -> bool {
        match &self.geometry {
            Geometry::Degenerate => true,
            Geometry::Triangulated { tri, .. } => tri.is_delaunay() && tri.is_consistent(),
        }
    }
}

/// Builds a [`VoronoiIndex`] over `z` (2D only).
pub fn build_index(z: &SampleSet) -> Result<VoronoiIndex> {
    VoronoiIndex::build(z)
}

/// Does the bisector between `x` and `v`, restricted to points no closer to
/// any of `others` than to `v`, meet the closed unit square?
fn shared_edge_reaches_domain(x: [f64; 2], v: [f64; 2], others: &[[f64; 2]]) -> bool {
    let m = [(x[0] + v[0]) / 2.0, (x[1] + v[1]) / 2.0];
    let dir = [-(v[1] - x[1]), v[0] - x[0]];
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    // a*t <= b
    let mut clip = |a: f64, b: f64| {
        if a > 0.0 {
            hi = hi.min(b / a);
        } else if a < 0.0 {
            lo = lo.max(b / a);
        } else if b < 0.0 {
            lo = f64::INFINITY;
        }
    };
    for s in others {
        let sv = [s[0] - v[0], s[1] - v[1]];
        let a = 2.0 * (dir[0] * sv[0] + dir[1] * sv[1]);
        let b = (s[0] * s[0] + s[1] * s[1])
            - (v[0] * v[0] + v[1] * v[1])
            - 2.0 * (m[0] * sv[0] + m[1] * sv[1]);
        clip(a, b + CLIP_SLACK);
    }
    for axis in 0..2 {
        // m + t*dir >= 0 and <= 1
        clip(-dir[axis], m[axis] + CLIP_SLACK);
        clip(dir[axis], 1.0 - m[axis] + CLIP_SLACK);
    }
    lo <= hi
}

/// Voronoi neighbors of `x` with respect to `z`, as sample indices.
///
/// Empty when `x` is itself a sample. Always contains the nearest samples
/// of `x`. A degenerate (collinear) index reports every sample.
pub fn voronoi_neighbors(x: &Point, z: &SampleSet, geom: &VoronoiIndex) -> Result<Vec<usize>> {
    geom.check_current(z)?;
    if x.dim() != 2 {
        return Err(Error::DimensionMismatch(x.dim(), 2));
    }
    if z.is_empty() || z.find_exact(x).is_some() {
        return Ok(Vec::new());
    }
    let all = || (1..=z.len()).collect::<Vec<_>>();
    let Geometry::Triangulated {
        tri,
        origin,
        members,
    } = &geom.geometry
    else {
        return Ok(all());
    };
    let Some(link) = tri.link(jitter(x.xy(), QUERY_JITTER_ID)) else {
        return Ok(all());
    };
    let nearest = nearest_indices(x, z)?;
    let link_pts: Vec<[f64; 2]> = link.iter().map(|&v| origin[v as usize]).collect();
    let mut out = Vec::new();
    for (k, &v) in link.iter().enumerate() {
        let group = &members[v as usize];
        let keep = group.iter().any(|i| nearest.contains(i)) || {
            let others: Vec<[f64; 2]> = link_pts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, p)| *p)
                .collect();
            shared_edge_reaches_domain(x.xy(), link_pts[k], &others)
        };
        if keep {
            out.extend_from_slice(group);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Witness that `v` is a Voronoi neighbor of `x`: a point `c` with
/// d(x,c) < d(v,c) <= d(s,c) for every sample s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub point: Point,
    pub dist_x: f64,
    pub dist_v: f64,
    pub dist_nearest: f64,
}

fn lattice(dim: usize, resolution: usize) -> impl Iterator<Item = Point> {
    let step = if resolution > 1 {
        1.0 / (resolution - 1) as f64
    } else {
        0.0
    };
    let coord = move |i: usize| if resolution > 1 { i as f64 * step } else { 0.5 };
    let rows = if dim == 1 { 1 } else { resolution };
    (0..rows).flat_map(move |j| {
        (0..resolution).map(move |i| {
            if dim == 1 {
                Point::new_1d(coord(i))
            } else {
                Point::new_2d(coord(i), coord(j))
            }
        })
    })
}

fn midpoint(a: &Point, b: &Point) -> Point {
    if a.dim() == 1 {
        Point::new_1d((a.x() + b.x()) / 2.0)
    } else {
        Point::new_2d((a.x() + b.x()) / 2.0, (a.y() + b.y()) / 2.0)
    }
}

/// Searches `x`, the midpoint of x–v, and a `grid_resolution`-per-axis
/// lattice over the domain for a certificate. `None` means none was found
/// at this resolution, not that `v` is not a neighbor.
pub fn certify_voronoi_neighbor(
    x: &Point,
    v_index: usize,
    z: &SampleSet,
    grid_resolution: usize,
) -> Result<Option<Certificate>> {
    let v = z
        .get(v_index)
        .ok_or_else(|| Error::InvalidParameter(format!("no sample with index {v_index}")))?
        .point;
    if v.dim() != x.dim() {
        return Err(Error::DimensionMismatch(x.dim(), v.dim()));
    }
    let dim = x.dim();
    let candidates = [*x, midpoint(x, &v)]
        .into_iter()
        .chain(lattice(dim, grid_resolution));
    for c in candidates {
        let kx = dist_key(x, &c);
        let kv = dist_key(&v, &c);
        if kx >= kv {
            continue;
        }
        let nearest = z
            .samples()
            .iter()
            .map(|s| dist_key(&s.point, &c))
            .fold(f64::INFINITY, f64::min);
        if kv <= nearest {
            let d = |k: f64| crate::domain::key_to_distance(k, dim);
            return Ok(Some(Certificate {
                point: c,
                dist_x: d(kx),
                dist_v: d(kv),
                dist_nearest: d(nearest),
            }));
        }
    }
    Ok(None)
}

/// Every sample certified as a Voronoi neighbor of `x` by the same search
/// as [`certify_voronoi_neighbor`], done in one pass over the candidates.
pub fn certified_neighbors(x: &Point, z: &SampleSet, grid_resolution: usize) -> Vec<usize> {
    let mut found = vec![false; z.len()];
    let mut visit = |c: Point| {
        let kx = dist_key(x, &c);
        let mut best = f64::INFINITY;
        for s in z.samples() {
            best = best.min(dist_key(&s.point, &c));
        }
        if kx < best {
            for s in z.samples() {
                if dist_key(&s.point, &c) == best {
                    found[s.index - 1] = true;
                }
            }
        }
    };
    visit(*x);
    for s in z.samples() {
        visit(midpoint(x, &s.point));
    }
    for c in lattice(x.dim(), grid_resolution) {
        visit(c);
    }
    found
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| i + 1)
        .collect()
}
