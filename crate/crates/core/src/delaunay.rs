//! Incremental (Bowyer-Watson) Delaunay triangulation with exact predicates.
//!
//! The convex hull is closed off with ghost triangles that share one
//! vertex at infinity, so every triangle always has three neighbors and
//! points outside the hull need no special casing.

use std::collections::HashMap;

use robust::{incircle, orient2d, Coord};

pub(crate) const GHOST: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Tri {
    /// counter-clockwise; a ghost triangle holds GHOST in one slot
    v: [u32; 3],
    /// n[i] is the neighbor across the edge opposite v[i]
    n: [u32; 3],
    alive: bool,
}

impl Tri {
    fn is_ghost(&self) -> bool {
        self.v.contains(&GHOST)
    }

    fn slot_of(&self, vertex: u32) -> Option<usize> {
        self.v.iter().position(|&w| w == vertex)
    }
}

fn coord(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

/// Positive when a, b, c turn counter-clockwise; exact sign.
pub(crate) fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    orient2d(coord(a), coord(b), coord(c))
}

#[derive(Clone, Debug)]
pub(crate) struct Triangulation {
    pts: Vec<[f64; 2]>,
    tris: Vec<Tri>,
    free: Vec<u32>,
    hint: u32,
}

/// Conflict region of a point: the triangles whose circumcircle strictly
/// contains it, and the directed edges bounding that region.
struct Cavity {
    tris: Vec<u32>,
    /// (from, to, triangle on the far side)
    boundary: Vec<(u32, u32, u32)>,
}

impl Triangulation {
    /// Starts from three points in general position; `None` if collinear.
    pub fn new(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<Self> {
        let o = orient(a, b, c);
        if o == 0.0 {
            return None;
        }
        let pts = if o > 0.0 {
            vec![a, b, c]
        } else {
            vec![a, c, b]
        };
        let faces = [[0, 1, 2], [1, 0, GHOST], [2, 1, GHOST], [0, 2, GHOST]];
        let mut t = Self {
            pts,
            tris: Vec::with_capacity(16),
            free: Vec::new(),
            hint: 0,
        };
        let ids: Vec<u32> = faces
            .iter()
            .map(|&v| {
                t.alloc(Tri {
                    v,
                    n: [GHOST; 3],
                    alive: true,
                })
            })
            .collect();
        t.link_faces(&ids);
        Some(t)
    }

    /// Vertex ids 0, 1, 2 of the seed triangle refer to these inputs in
    /// input order, regardless of the orientation fix-up.
    pub fn seed_order(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> [u32; 3] {
        if orient(a, b, c) > 0.0 {
            [0, 1, 2]
        } else {
            [0, 2, 1]
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.pts.len()
    }

    pub fn point(&self, v: u32) -> [f64; 2] {
        self.pts[v as usize]
    }

    fn alloc(&mut self, t: Tri) -> u32 {
        match self.free.pop() {
            Some(id) => {
                self.tris[id as usize] = t;
                id
            }
            None => {
                self.tris.push(t);
                (self.tris.len() - 1) as u32
            }
        }
    }

    /// Sets neighbor pointers among `ids` by matching opposite directed edges.
    fn link_faces(&mut self, ids: &[u32]) {
        let mut edges: HashMap<(u32, u32), (u32, usize)> = HashMap::new();
        for &id in ids {
            let v = self.tris[id as usize].v;
            for i in 0..3 {
                edges.insert((v[(i + 1) % 3], v[(i + 2) % 3]), (id, i));
            }
        }
        for &id in ids {
            let v = self.tris[id as usize].v;
            for i in 0..3 {
                if let Some(&(other, _)) = edges.get(&(v[(i + 2) % 3], v[(i + 1) % 3])) {
                    self.tris[id as usize].n[i] = other;
                }
            }
        }
    }

    fn in_conflict(&self, t: &Tri, p: [f64; 2]) -> bool {
        match t.slot_of(GHOST) {
            None => {
                let [a, b, c] = t.v.map(|v| self.pts[v as usize]);
                incircle(coord(a), coord(b), coord(c), coord(p)) > 0.0
            }
            Some(g) => {
                let a = self.pts[t.v[(g + 1) % 3] as usize];
                let b = self.pts[t.v[(g + 2) % 3] as usize];
                let o = orient(a, b, p);
                if o != 0.0 {
                    return o > 0.0;
                }
                // on the hull line: conflicts only strictly inside the edge
                let dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1]);
                let len = (b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1]);
                dot > 0.0 && dot < len && p != a && p != b
            }
        }
    }

    /// A triangle in conflict with `p`, or `None` if `p` is a vertex.
    fn locate(&self, p: [f64; 2]) -> Option<u32> {
        let mut t = self.hint;
        if !self.tris[t as usize].alive || self.tris[t as usize].is_ghost() {
            t = self
                .tris
                .iter()
                .position(|t| t.alive && !t.is_ghost())
                .expect("a triangulation has a real triangle") as u32;
        }
        let cap = 4 * self.tris.len() + 16;
        'walk: for step in 0..cap {
            let tri = &self.tris[t as usize];
            if tri.is_ghost() {
                return self.in_conflict(tri, p).then_some(t);
            }
            for k in 0..3 {
                let i = (k + step) % 3;
                let a = self.pts[tri.v[(i + 1) % 3] as usize];
                let b = self.pts[tri.v[(i + 2) % 3] as usize];
                if orient(a, b, p) < 0.0 {
                    t = tri.n[i];
                    continue 'walk;
                }
            }
            return self.in_conflict(tri, p).then_some(t);
        }
        // the walk should always terminate; scan as a last resort
        self.tris
            .iter()
            .position(|tri| tri.alive && self.in_conflict(tri, p))
            .map(|i| i as u32)
    }

    fn cavity(&self, p: [f64; 2]) -> Option<Cavity> {
        let start = self.locate(p)?;
        let mut tris = vec![start];
        let mut rejected: Vec<u32> = Vec::new();
        let mut boundary = Vec::new();
        let mut k = 0;
        while k < tris.len() {
            let t = self.tris[tris[k] as usize];
            k += 1;
            for i in 0..3 {
                let nb = t.n[i];
                let edge = (t.v[(i + 1) % 3], t.v[(i + 2) % 3], nb);
                if tris.contains(&nb) {
                    continue;
                }
                if rejected.contains(&nb) {
                    boundary.push(edge);
                } else if self.in_conflict(&self.tris[nb as usize], p) {
                    tris.push(nb);
                } else {
                    rejected.push(nb);
                    boundary.push(edge);
                }
            }
        }
        Some(Cavity { tris, boundary })
    }

    /// Vertices that become adjacent to `p` if it were inserted; `None` if
    /// `p` coincides with an existing vertex.
    pub fn link(&self, p: [f64; 2]) -> Option<Vec<u32>> {
        let cavity = self.cavity(p)?;
        let mut out: Vec<u32> = cavity
            .boundary
            .iter()
            .map(|&(a, _, _)| a)
            .filter(|&a| a != GHOST)
            .collect();
        out.sort_unstable();
        out.dedup();
        Some(out)
    }

    /// Inserts `p`; returns its vertex id, or `None` if it is already a vertex.
    pub fn insert(&mut self, p: [f64; 2]) -> Option<u32> {
        let cavity = self.cavity(p)?;
        let pid = self.pts.len() as u32;
        self.pts.push(p);
        for &t in &cavity.tris {
            self.tris[t as usize].alive = false;
            self.free.push(t);
        }
        let mut by_start: HashMap<u32, u32> = HashMap::with_capacity(cavity.boundary.len());
        let mut by_end: HashMap<u32, u32> = HashMap::with_capacity(cavity.boundary.len());
        let mut created = Vec::with_capacity(cavity.boundary.len());
        for &(a, b, outside) in &cavity.boundary {
            let id = self.alloc(Tri {
                v: [a, b, pid],
                n: [GHOST, GHOST, outside],
                alive: true,
            });
            let o = &mut self.tris[outside as usize];
            let slot = (0..3)
                .find(|&j| o.v[j] != a && o.v[j] != b)
                .expect("outside triangle shares the edge");
            o.n[slot] = id;
            by_start.insert(a, id);
            by_end.insert(b, id);
            created.push(id);
        }
        for &id in &created {
            let [a, b, _] = self.tris[id as usize].v;
            self.tris[id as usize].n[0] = by_start[&b];
            self.tris[id as usize].n[1] = by_end[&a];
        }
        if let Some(&real) = created
            .iter()
            .find(|&&id| !self.tris[id as usize].is_ghost())
        {
            self.hint = real;
        }
        Some(pid)
    }

    /// Real (finite) triangles as vertex triples.
    pub fn triangles(&self) -> impl Iterator<Item = [u32; 3]> + '_ {
        self.tris
            .iter()
            .filter(|t| t.alive && !t.is_ghost())
            .map(|t| t.v)
    }

    /// Finite vertices adjacent to `v`.
    pub fn adjacent(&self, v: u32) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .tris
            .iter()
            .filter(|t| t.alive && t.v.contains(&v))
            .flat_map(|t| t.v)
            .filter(|&w| w != v && w != GHOST)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// True when no vertex lies strictly inside any triangle's circumcircle.
    pub fn is_delaunay(&self) -> bool {
        self.triangles().all(|v| {
            let [a, b, c] = v.map(|i| coord(self.pts[i as usize]));
            self.pts
                .iter()
                .enumerate()
                .filter(|(i, _)| !v.contains(&(*i as u32)))
                .all(|(_, &p)| incircle(a, b, c, coord(p)) <= 0.0)
        })
    }

    /// Structural check: neighbor pointers are mutual and every triangle
    /// is counter-clockwise.
    pub fn is_consistent(&self) -> bool {
        self.tris
            .iter()
            .enumerate()
            .filter(|(_, t)| t.alive)
            .all(|(id, t)| {
                let ccw = t.is_ghost() || {
                    let [a, b, c] = t.v.map(|i| self.pts[i as usize]);
                    orient(a, b, c) > 0.0
                };
                ccw && (0..3).all(|i| {
                    let nb = &self.tris[t.n[i] as usize];
                    nb.alive && nb.n.contains(&(id as u32))
                })
            })
    }
}
