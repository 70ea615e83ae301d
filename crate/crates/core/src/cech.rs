//! Čech complexes and their connected components.
//!
//! An m-simplex is present at scale `t` when the smallest ball enclosing its
//! m+1 points has radius strictly below `t/2`. Every Čech simplex is a clique
//! of the graph joining points at distance `< t`, so candidates are produced
//! by clique expansion and then filtered by the enclosing-ball test. The test
//! is monotone under adding vertices, so a rejected clique is never extended.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{dist2, min_enclosing_ball_radius};

/// Sorted local vertex indices.
pub type Simplex = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplicialComplex {
    vertices: Vec<usize>,
    simplices: Vec<Vec<Simplex>>,
    dim_cap: usize,
}

impl SimplicialComplex {
    /// Complex from explicit simplices over local vertices `0..ids.len()`.
    /// Faces are not added; see [`SimplicialComplex::is_downward_closed`].
    pub fn from_simplices(ids: Vec<usize>, dim_cap: usize, simplices: &[Simplex]) -> Result<Self> {
        let mut by_dim: Vec<Vec<Simplex>> = vec![Vec::new(); dim_cap + 1];
        by_dim[0] = (0..ids.len()).map(|v| vec![v]).collect();
        for s in simplices {
            let mut s = s.clone();
            s.sort_unstable();
            s.dedup();
            if s.is_empty() || s.len() > dim_cap + 1 || s.iter().any(|&v| v >= ids.len()) {
                return Err(Error::invalid(format!("bad simplex {s:?}")));
            }
            if s.len() > 1 {
                by_dim[s.len() - 1].push(s);
            }
        }
        for list in &mut by_dim {
            list.sort();
            list.dedup();
        }
        Ok(SimplicialComplex {
            vertices: ids,
            simplices: by_dim,
            dim_cap,
        })
    }

    /// Point ids of the vertices; simplices refer to positions in this list.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    /// The m-simplices in lexicographic order; empty above the cap.
    pub fn simplices(&self, m: usize) -> &[Simplex] {
        self.simplices.get(m).map_or(&[], Vec::as_slice)
    }

    pub fn count(&self, m: usize) -> usize {
        self.simplices(m).len()
    }

    /// Every face of every simplex is present.
    pub fn is_downward_closed(&self) -> bool {
        for m in 1..=self.dim_cap {
            let lower: HashSet<&[usize]> = self.simplices(m - 1).iter().map(Vec::as_slice).collect();
            for s in self.simplices(m) {
                for skip in 0..s.len() {
                    let face: Vec<usize> = s
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    if !lower.contains(face.as_slice()) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn check_scale(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("scale must be >= 0, got {t}")))
    }
}

/// Local index pairs `(i, j)`, `i < j`, at distance `< t`.
pub fn neighbor_pairs(pts: &PointCloud, t: f64) -> Vec<(usize, usize)> {
    let n = pts.len();
    let mut pairs = Vec::new();
    if n < 2 || t <= 0.0 {
        return pairs;
    }
    // sweep along the first coordinate
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pts.point(a)[0].total_cmp(&pts.point(b)[0]));
    let t2 = t * t;
    for (pos, &a) in order.iter().enumerate() {
        let xa = pts.point(a)[0];
        for &b in &order[pos + 1..] {
            if pts.point(b)[0] - xa >= t {
                break;
            }
            if dist2(pts.point(a), pts.point(b)) < t2 {
                pairs.push((a.min(b), a.max(b)));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Čech complex of `pts` at scale `t`, truncated at dimension `dim_cap`.
pub fn build_cech(pts: &PointCloud, t: f64, dim_cap: usize) -> Result<SimplicialComplex> {
    check_scale(t)?;
    if dim_cap > pts.dim() + 1 {
        return Err(Error::invalid(format!(
            "dim_cap {dim_cap} exceeds d + 1 = {}",
            pts.dim() + 1
        )));
    }
    let n = pts.len();
    let mut adjacency = vec![Vec::new(); n];
    for (a, b) in neighbor_pairs(pts, t) {
        adjacency[a].push(b);
    }
    let mut simplices: Vec<Vec<Simplex>> = vec![Vec::new(); dim_cap + 1];
    let half = t / 2.0;
    let mut stack = Vec::with_capacity(dim_cap + 1);
    for v in 0..n {
        simplices[0].push(vec![v]);
        if dim_cap == 0 {
            continue;
        }
        stack.clear();
        stack.push(v);
        expand(pts, &adjacency, &mut stack, &adjacency[v], half, dim_cap, &mut simplices);
    }
    for list in simplices.iter_mut().skip(2) {
        list.sort();
    }
    let complex = SimplicialComplex {
        vertices: pts.ids().to_vec(),
        simplices,
        dim_cap,
    };
    debug_assert!(complex.is_downward_closed());
    Ok(complex)
}

fn expand(
    pts: &PointCloud,
    adjacency: &[Vec<usize>],
    stack: &mut Vec<usize>,
    candidates: &[usize],
    half: f64,
    dim_cap: usize,
    out: &mut [Vec<Simplex>],
) {
    for (pos, &w) in candidates.iter().enumerate() {
        stack.push(w);
        let accept = stack.len() == 2 || {
            let verts: Vec<&[f64]> = stack.iter().map(|&i| pts.point(i)).collect();
            min_enclosing_ball_radius(&verts).expect("non-empty") < half
        };
        if accept {
            out[stack.len() - 1].push(stack.clone());
            if stack.len() <= dim_cap {
                let next: Vec<usize> = candidates[pos + 1..]
                    .iter()
                    .copied()
                    .filter(|c| adjacency[w].binary_search(c).is_ok())
                    .collect();
                if !next.is_empty() {
                    expand(pts, adjacency, stack, &next, half, dim_cap, out);
                }
            }
        }
        stack.pop();
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    /// Classes as sorted member lists, ordered by smallest member.
    pub fn classes(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let r = self.find(x);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(x);
        }
        out
    }
}

/// Connected components of the Čech complex at scale `t`.
#[derive(Clone, Debug)]
pub struct ComponentDecomposition {
    t: f64,
    parts: Vec<PointCloud>,
}

impl ComponentDecomposition {
    pub fn scale(&self) -> f64 {
        self.t
    }

    /// Component point sets, each in ascending id order, ordered by their
    /// first member.
    pub fn parts(&self) -> &[PointCloud] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Per-component complexes, built concurrently.
    pub fn complexes(&self, dim_cap: usize) -> Result<Vec<SimplicialComplex>> {
        self.parts
            .par_iter()
            .map(|part| build_cech(part, self.t, dim_cap))
            .collect()
    }
}

/// Components of the distance-`< t` graph, which is the 1-skeleton of the
/// Čech complex and therefore has the same components.
pub fn components(pts: &PointCloud, t: f64) -> Result<ComponentDecomposition> {
    check_scale(t)?;
    let mut uf = UnionFind::new(pts.len());
    for (a, b) in neighbor_pairs(pts, t) {
        uf.union(a, b);
    }
    let parts = uf.classes().iter().map(|c| pts.select(c)).collect();
    Ok(ComponentDecomposition { t, parts })
}

/// Whether scaling the cloud and the scale by `s` leaves the complex unchanged.
pub fn cech_scaling_check(pts: &PointCloud, t: f64, s: f64) -> Result<bool> {
    if !(t > 0.0 && s > 0.0) {
        return Err(Error::invalid("scaling check needs t > 0 and s > 0"));
    }
    let cap = pts.dim();
    let base = build_cech(pts, t, cap)?;
    let scaled = build_cech(&pts.scaled(s), s * t, cap)?;
    Ok(base == scaled)
}
