//! Betti numbers of the points lying outside a centred ball.
//!
//! Everything here works on the tail sample `{x : ||x|| >= R}` (the closed
//! complement of the open ball `B(0, R)`). The Betti number of the tail
//! complex splits over its connected components: with `J(i, j)` the number
//! of components on `i` vertices whose k-th Betti number is `j`,
//! `beta_k = sum_{i >= k+2, j >= 1} j J(i, j)`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cech::{components, neighbor_pairs};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::min_enclosing_ball_radius;
use crate::homology::betti_per_component;

/// Default bound on the number of subsets visited by one enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

pub fn tail_points(cloud: &PointCloud, radius: f64) -> Result<PointCloud> {
    if !(radius >= 0.0) {
        return Err(Error::invalid(format!("tail radius must be >= 0, got {radius}")));
    }
    Ok(cloud.filter(|p| crate::geometry::norm(p) >= radius))
}

fn check_k(cloud: &PointCloud, k: usize) -> Result<()> {
    if k == 0 || k >= cloud.dim() {
        return Err(Error::invalid(format!(
            "homological degree must lie in 1..={}, got {k}",
            cloud.dim() - 1
        )));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("scale must be >= 0, got {t}")))
    }
}

/// `beta_k` of the Čech complex on `pts` at scale `t`, summed per component.
pub fn betti_at(pts: &PointCloud, k: usize, t: f64) -> Result<usize> {
    let decomp = components(pts, t)?;
    Ok(betti_per_component(&decomp, k)?.iter().map(|&(_, j)| j).sum())
}

/// `t -> beta_{k,n}(t)` evaluated on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBettiCurve {
    pub t_grid: Vec<f64>,
    pub values: Vec<usize>,
    pub n: usize,
    pub radius: f64,
    pub k: usize,
}

pub fn tail_betti_curve(cloud: &PointCloud, radius: f64, k: usize, t_grid: &[f64]) -> Result<TailBettiCurve> {
    check_k(cloud, k)?;
    check_grid(t_grid)?;
    let tail = tail_points(cloud, radius)?;
    let values = t_grid
        .par_iter()
        .map(|&t| betti_at(&tail, k, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(TailBettiCurve {
        t_grid: t_grid.to_vec(),
        values,
        n: cloud.len(),
        radius,
        k,
    })
}

pub(crate) fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::invalid("scales must be >= 0"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("scale grid must be strictly increasing"));
    }
    Ok(())
}

/// Census `J(i, j)` of tail components at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentProfile {
    #[serde(with = "profile_entries")]
    pub counts: BTreeMap<(usize, usize), usize>,
    pub t: f64,
    pub radius: f64,
    pub k: usize,
}

impl ComponentProfile {
    pub fn count(&self, i: usize, j: usize) -> usize {
        self.counts.get(&(i, j)).copied().unwrap_or(0)
    }

    /// `sum j J(i, j)` over all components, which equals `beta_k`.
    pub fn betti(&self) -> usize {
        self.counts.iter().map(|(&(_, j), &c)| j * c).sum()
    }

    /// Number of points covered by the census.
    pub fn points(&self) -> usize {
        self.counts.iter().map(|(&(i, _), &c)| i * c).sum()
    }
}

mod profile_entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        i: usize,
        j: usize,
        count: usize,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<(usize, usize), usize>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Entry> = m.iter().map(|(&(i, j), &count)| Entry { i, j, count }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(usize, usize), usize>, D::Error> {
        let v = Vec::<Entry>::deserialize(d)?;
        Ok(v.into_iter().map(|e| ((e.i, e.j), e.count)).collect())
    }
}

pub fn component_profile(cloud: &PointCloud, radius: f64, k: usize, t: f64) -> Result<ComponentProfile> {
    check_k(cloud, k)?;
    check_t(t)?;
    let tail = tail_points(cloud, radius)?;
    let decomp = components(&tail, t)?;
    let mut counts = BTreeMap::new();
    for pair in betti_per_component(&decomp, k)? {
        *counts.entry(pair).or_insert(0) += 1;
    }
    Ok(ComponentProfile { counts, t, radius, k })
}

/// `sum_{i = k+2}^{M} sum_j j J(i, j)`.
pub fn truncated_betti(profile: &ComponentProfile, max_size: usize) -> Result<usize> {
    if max_size < profile.k + 2 {
        return Err(Error::invalid(format!(
            "truncation level {max_size} is below k + 2 = {}",
            profile.k + 2
        )));
    }
    Ok(profile
        .counts
        .iter()
        .filter(|(&(i, _), _)| i <= max_size)
        .map(|(&(_, j), &c)| j * c)
        .sum())
}

/// Radius convention for the balls in the explicit minimal-cycle indicator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallConvention {
    /// Balls of radius `t/2`, as in the Čech complex itself.
    HalfScale,
    /// Balls of radius `t`.
    FullScale,
}

/// `h+ - h-` for a set of k+2 points: every k+1 of them have a common
/// intersection of balls while all k+2 together do not. Under
/// [`BallConvention::HalfScale`] this is exactly "the Čech complex on the
/// points is a hollow (k+1)-simplex", i.e. connected with `beta_k = 1`.
pub fn minimal_cycle_indicator(pts: &[&[f64]], t: f64, convention: BallConvention) -> bool {
    let r = match convention {
        BallConvention::HalfScale => t / 2.0,
        BallConvention::FullScale => t,
    };
    let meb = |s: &[&[f64]]| min_enclosing_ball_radius(s).expect("non-empty");
    if meb(pts) < r {
        return false;
    }
    let mut facet = Vec::with_capacity(pts.len() - 1);
    (0..pts.len()).all(|skip| {
        facet.clear();
        facet.extend(pts.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, p)| *p));
        meb(&facet) < r
    })
}

/// Visits every connected induced subgraph with `size` vertices exactly once
/// (ESU enumeration), counting every partial subset against `budget`.
struct ConnectedSubsets<'a> {
    adjacency: &'a [Vec<usize>],
    size: usize,
    budget: &'a mut u64,
}

impl ConnectedSubsets<'_> {
    fn run(&mut self, visit: &mut dyn FnMut(&[usize])) -> Result<()> {
        let n = self.adjacency.len();
        let mut sub = Vec::with_capacity(self.size);
        for v in 0..n {
            sub.clear();
            sub.push(v);
            let ext: Vec<usize> = self.adjacency[v].iter().copied().filter(|&u| u > v).collect();
            self.extend(&mut sub, ext, v, visit)?;
        }
        Ok(())
    }

    fn extend(&mut self, sub: &mut Vec<usize>, mut ext: Vec<usize>, root: usize, visit: &mut dyn FnMut(&[usize])) -> Result<()> {
        if *self.budget == 0 {
            return Err(Error::Capacity {
                what: "connected subsets",
                cap: DEFAULT_ENUMERATION_CAP,
            });
        }
        *self.budget -= 1;
        if sub.len() == self.size {
            visit(sub);
            return Ok(());
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in &self.adjacency[w] {
                if u > root
                    && !sub.contains(&u)
                    && !next.contains(&u)
                    && u != w
                    && !sub.iter().any(|&s| self.adjacency[s].binary_search(&u).is_ok())
                {
                    next.push(u);
                }
            }
            sub.push(w);
            self.extend(sub, next, root, visit)?;
            sub.pop();
        }
        Ok(())
    }
}

fn adjacency(pts: &PointCloud, t: f64) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); pts.len()];
    for (a, b) in neighbor_pairs(pts, t) {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj.iter_mut().for_each(|l| l.sort_unstable());
    adj
}

/// Applies `visit` to every `size`-subset of `pts` whose Čech complex at
/// scale `t` is connected.
fn for_each_connected_subset(
    pts: &PointCloud,
    t: f64,
    size: usize,
    cap: u64,
    mut visit: impl FnMut(&PointCloud, &[usize]),
) -> Result<()> {
    let mut budget = cap;
    for part in components(pts, t)?.parts() {
        if part.len() < size {
            continue;
        }
        let adj = adjacency(part, t);
        let mut walker = ConnectedSubsets {
            adjacency: &adj,
            size,
            budget: &mut budget,
        };
        walker
            .run(&mut |s| visit(part, s))
            .map_err(|e| match e {
                Error::Capacity { what, .. } => Error::Capacity { what, cap },
                other => other,
            })?;
    }
    Ok(())
}

/// Number of (k+2)-subsets of tail points whose Čech complex is connected
/// with `beta_k = 1`.
pub fn minimal_cycle_count(cloud: &PointCloud, radius: f64, k: usize, t: f64, cap: u64) -> Result<usize> {
    check_k(cloud, k)?;
    check_t(t)?;
    let tail = tail_points(cloud, radius)?;
    let mut count = 0;
    for_each_connected_subset(&tail, t, k + 2, cap, |part, s| {
        let verts: Vec<&[f64]> = s.iter().map(|&i| part.point(i)).collect();
        if minimal_cycle_indicator(&verts, t, BallConvention::HalfScale) {
            count += 1;
        }
    })?;
    Ok(count)
}

/// Number of connected (k+3)-subsets of tail points.
pub fn connected_subset_count(cloud: &PointCloud, radius: f64, size: usize, t: f64, cap: u64) -> Result<usize> {
    check_t(t)?;
    let tail = tail_points(cloud, radius)?;
    let mut count = 0;
    for_each_connected_subset(&tail, t, size, cap, |_, _| count += 1)?;
    Ok(count)
}

/// `J(k+2, 1) <= beta_k <= J(k+2, 1) + C(k+3, k+1) L` with `L` the number of
/// connected (k+3)-subsets of the tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub j_min: usize,
    pub beta: usize,
    pub l: usize,
    pub holds: bool,
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

pub fn sandwich_check(cloud: &PointCloud, radius: f64, k: usize, t: f64, cap: u64) -> Result<SandwichCheck> {
    let profile = component_profile(cloud, radius, k, t)?;
    let j_min = profile.count(k + 2, 1);
    let beta = profile.betti();
    let l = connected_subset_count(cloud, radius, k + 3, t, cap)?;
    let upper = j_min as u64 + binomial(k + 3, k + 1) * l as u64;
    Ok(SandwichCheck {
        j_min,
        beta,
        l,
        holds: j_min <= beta && beta as u64 <= upper,
    })
}
