//! Euclidean primitives used to decide Čech simplex membership.
//!
//! A set of points spans a simplex at scale `t` exactly when the open balls of
//! radius `t/2` around them share a point, which happens iff the smallest
//! enclosing ball of the set has radius strictly below `t/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of R^d, d >= 2, with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid(format!(
                "points need dimension >= 2, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        Ok(Point(coords))
    }

    pub fn origin(d: usize) -> Self {
        Point(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Open ball `B(center, radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    /// Closed containment with a relative slack, used to audit computed balls.
    pub fn covers(&self, p: &[f64], rel_tol: f64) -> bool {
        dist(&self.center, p) <= self.radius * (1.0 + rel_tol)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Surface area `s_{d-1}` of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h)
}

/// Volume `omega_d` of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    sphere_area(d) / d as f64
}

fn non_empty<P>(pts: &[P], op: &str) -> Result<()> {
    if pts.is_empty() {
        Err(Error::invalid(format!("{op} of an empty point set")))
    } else {
        Ok(())
    }
}

/// Largest pairwise distance; zero for a singleton.
pub fn diameter<P: AsRef<[f64]>>(pts: &[P]) -> Result<f64> {
    non_empty(pts, "diameter")?;
    let mut best = 0.0f64;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            best = best.max(dist2(a.as_ref(), b.as_ref()));
        }
    }
    Ok(best.sqrt())
}

/// `min_l ||y_l||`.
pub fn min_norm<P: AsRef<[f64]>>(pts: &[P]) -> Result<f64> {
    non_empty(pts, "min_norm")?;
    Ok(pts
        .iter()
        .map(|p| norm(p.as_ref()))
        .fold(f64::INFINITY, f64::min))
}

/// Radius of the smallest ball enclosing `pts`.
pub fn min_enclosing_ball_radius<P: AsRef<[f64]>>(pts: &[P]) -> Result<f64> {
    Ok(min_enclosing_ball(pts)?.radius)
}

/// Smallest enclosing ball by Welzl's move-to-front recursion.
///
/// The recursion keeps at most d+1 support points. If a support set turns out
/// to be affinely degenerate (coincident or collinear points, possible only in
/// crafted inputs or through rounding) the ball is recomputed by enumerating
/// support subsets, which is exact for the handful of points used here.
pub fn min_enclosing_ball<P: AsRef<[f64]>>(pts: &[P]) -> Result<Ball> {
    non_empty(pts, "min_enclosing_ball")?;
    let pts: Vec<&[f64]> = pts.iter().map(|p| p.as_ref()).collect();
    let d = pts[0].len();
    if pts.iter().any(|p| p.len() != d) {
        return Err(Error::invalid("points of mixed dimension"));
    }
    if pts.len() == 1 {
        return Ok(Ball {
            center: pts[0].to_vec(),
            radius: 0.0,
        });
    }
    let mut order: Vec<usize> = (0..pts.len()).collect();
    let mut support = Vec::with_capacity(d + 1);
    match move_to_front(&pts, &mut order, pts.len(), &mut support, d) {
        Some(ball) => Ok(ball),
        None => Ok(meb_by_support_enumeration(&pts)),
    }
}

const CONTAIN_TOL: f64 = 1e-12;

fn contains(ball: &Ball, p: &[f64]) -> bool {
    let r = ball.radius * (1.0 + CONTAIN_TOL);
    dist2(&ball.center, p) <= r * r
}

fn move_to_front(
    pts: &[&[f64]],
    order: &mut Vec<usize>,
    end: usize,
    support: &mut Vec<usize>,
    d: usize,
) -> Option<Ball> {
    let mut ball = if support.is_empty() {
        Ball {
            center: pts[order[0]].to_vec(),
            radius: -1.0,
        }
    } else {
        let s: Vec<&[f64]> = support.iter().map(|&i| pts[i]).collect();
        circumball(&s)?
    };
    if support.len() == d + 1 {
        return Some(ball);
    }
    let mut i = 0;
    while i < end {
        let idx = order[i];
        let outside = ball.radius < 0.0 || !contains(&ball, pts[idx]);
        if outside {
            support.push(idx);
            let sub = move_to_front(pts, order, i, support, d);
            support.pop();
            ball = sub?;
            let moved = order.remove(i);
            order.insert(0, moved);
        }
        i += 1;
    }
    Some(ball)
}

/// Ball whose boundary passes through every point of `s` and whose center lies
/// in their affine hull. `None` if the points are affinely dependent.
pub(crate) fn circumball(s: &[&[f64]]) -> Option<Ball> {
    let q0 = s[0];
    let m = s.len() - 1;
    if m == 0 {
        return Some(Ball {
            center: q0.to_vec(),
            radius: 0.0,
        });
    }
    let diffs: Vec<Vec<f64>> = s[1..]
        .iter()
        .map(|q| q.iter().zip(q0).map(|(a, b)| a - b).collect())
        .collect();
    // Gram system 2 <u_i, u_j> x_j = |u_i|^2
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = 2.0 * dot(&diffs[i], &diffs[j]);
        }
        a[i][m] = dot(&diffs[i], &diffs[i]);
    }
    let scale = (0..m).map(|i| a[i][i]).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return None;
    }
    let x = solve_augmented(&mut a, scale * 1e-12)?;
    let mut center = q0.to_vec();
    for (xi, u) in x.iter().zip(&diffs) {
        for (c, uk) in center.iter_mut().zip(u) {
            *c += xi * uk;
        }
    }
    let radius = dist(&center, q0);
    Some(Ball { center, radius })
}

/// Gaussian elimination with partial pivoting on an `m x (m+1)` system.
fn solve_augmented(a: &mut [Vec<f64>], pivot_floor: f64) -> Option<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= pivot_floor {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..=m {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][m] - s) / a[row][row];
    }
    Some(x)
}

/// Exact smallest enclosing ball by trying every affinely independent subset
/// as the support and keeping the smallest circumball that covers all points.
pub fn meb_by_support_enumeration(pts: &[&[f64]]) -> Ball {
    let n = pts.len();
    let d = pts[0].len();
    let mut best: Option<Ball> = None;
    for mask in 1u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size > d + 1 {
            continue;
        }
        let s: Vec<&[f64]> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| pts[i]).collect();
        let Some(ball) = circumball(&s) else { continue };
        if best.as_ref().is_some_and(|b| b.radius <= ball.radius) {
            continue;
        }
        let slack = 1e-10 * ball.radius.max(1e-300);
        if pts.iter().all(|p| dist(&ball.center, p) <= ball.radius + slack) {
            best = Some(ball);
        }
    }
    best.expect("a single point always has a circumball")
}

/// Exact area of a union of open disks of common radius `r` in the plane.
///
/// Integrates `(x dy - y dx) / 2` along the arcs of each circle that are not
/// inside another disk.
pub fn union_area_2d(centers: &[&[f64]], r: f64) -> f64 {
    use std::f64::consts::TAU;
    if r <= 0.0 {
        return 0.0;
    }
    let mut distinct: Vec<&[f64]> = Vec::with_capacity(centers.len());
    for c in centers {
        debug_assert_eq!(c.len(), 2);
        if !distinct.iter().any(|d| d[0] == c[0] && d[1] == c[1]) {
            distinct.push(c);
        }
    }
    let mut area = 0.0;
    let mut covered: Vec<(f64, f64)> = Vec::new();
    for (i, c) in distinct.iter().enumerate() {
        covered.clear();
        for (j, o) in distinct.iter().enumerate() {
            let dd = dist(c, o);
            if i == j || dd >= 2.0 * r {
                continue;
            }
            let mid = (o[1] - c[1]).atan2(o[0] - c[0]);
            let half = (dd / (2.0 * r)).acos();
            let (a, b) = ((mid - half).rem_euclid(TAU), (mid + half).rem_euclid(TAU));
            if a <= b {
                covered.push((a, b));
            } else {
                covered.push((a, TAU));
                covered.push((0.0, b));
            }
        }
        covered.sort_by(|x, y| x.0.total_cmp(&y.0));
        let arc = |a: f64, b: f64| {
            r * r * (b - a) + r * c[0] * (b.sin() - a.sin()) - r * c[1] * (b.cos() - a.cos())
        };
        let mut from = 0.0;
        for &(a, b) in &covered {
            if a > from {
                area += arc(from, a);
            }
            from = f64::max(from, b);
        }
        if from < TAU {
            area += arc(from, TAU);
        }
    }
    0.5 * area
}
