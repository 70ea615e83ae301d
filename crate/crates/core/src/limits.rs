//! Monte Carlo estimators for the limiting functionals of tail Betti numbers.
//!
//! Power-law family, for `i >= k+2`, `j >= 1`:
//!
//! ```text
//! mu(i,j)(t; lam) = s_{d-1} int_1^inf rho^{d-1-alpha i} int h_t(0,y)
//!                   exp(-lam rho^{-alpha} vol(U(0,y; t))) dy drho
//! ```
//!
//! Exponential family:
//!
//! ```text
//! xi(i,j)(t; lam) = int_{S^{d-1}} int_0^inf int h_t(0,y) e^{-rho i - sum <theta,y_l>/c}
//!                   prod 1{rho + <theta,y_l>/c >= 0}
//!                   exp(-lam e^{-rho} int_{U(0,y; t)} e^{-<theta,z>/c} dz) dy drho dtheta
//! ```
//!
//! Here `h_t(0,y)` is 1 when the Čech complex on `{0, y_1, .., y_{i-1}}` at
//! scale `t` is connected with `beta_k = j`, and `U(x; r)` is the union of
//! open balls of radius `r` around the points `x`.
//!
//! Sampling is split into fixed batches with one RNG stream each, and batch
//! statistics are merged in batch order, so estimates do not depend on the
//! number of worker threads.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::cech::{build_cech, components};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{dist2, dot, sphere_area, union_area_2d, unit_ball_volume};
use crate::homology::betti;
use crate::rng::{stream, StreamRng, NS_MU, NS_XI};
use crate::tail::{minimal_cycle_indicator, BallConvention};

/// Samples per RNG stream.
pub const BATCH: u64 = 4096;
pub const DEFAULT_INNER_BUDGET: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    fn zero(samples: u64, seed: u64) -> Self {
        MCEstimate {
            mean: 0.0,
            stderr: 0.0,
            samples,
            seed,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        MCEstimate {
            mean: self.mean * factor,
            stderr: self.stderr * factor.abs(),
            ..self
        }
    }

    /// `sqrt(se_a^2 + se_b^2)`.
    pub fn combined_stderr(&self, other: &MCEstimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        self.mean += delta * o.n as f64 / n as f64;
        self.m2 += o.m2 + delta * delta * (self.n as f64 * o.n as f64 / n as f64);
        self.n = n;
    }

    fn estimate(&self, seed: u64) -> MCEstimate {
        let var = self.m2 / (self.n - 1) as f64;
        MCEstimate {
            mean: self.mean,
            stderr: (var.max(0.0) / self.n as f64).sqrt(),
            samples: self.n,
            seed,
        }
    }
}

/// Runs `budget` draws of a `width`-valued integrand and returns one
/// estimate per output slot.
fn run_batches<F>(budget: u64, seed: u64, key: &[u64], width: usize, draw: F) -> Vec<MCEstimate>
where
    F: Fn(&mut StreamRng, &mut [f64]) + Sync,
{
    let batches = budget.div_ceil(BATCH);
    let partial: Vec<Vec<Moments>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut k = key.to_vec();
            k.push(b);
            let mut rng = stream(seed, &k);
            let mut acc = vec![Moments::default(); width];
            let mut out = vec![0.0; width];
            for _ in 0..BATCH.min(budget - b * BATCH) {
                out.iter_mut().for_each(|v| *v = 0.0);
                draw(&mut rng, &mut out);
                acc.iter_mut().zip(&out).for_each(|(m, &x)| m.push(x));
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); width];
    for p in &partial {
        total.iter_mut().zip(p).for_each(|(t, m)| t.merge(m));
    }
    total.iter().map(|m| m.estimate(seed)).collect()
}

pub(crate) mod inf_as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuSpec {
    pub d: usize,
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub budget: u64,
    pub inner_budget: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiSpec {
    pub d: usize,
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub lambda: f64,
    pub tau: f64,
    /// Limit of `a(z)`; `f64::INFINITY` is allowed.
    #[serde(with = "inf_as_string")]
    pub c: f64,
    pub budget: u64,
    pub inner_budget: u64,
    pub seed: u64,
}

fn check_common(d: usize, k: usize, i: usize, j: usize, lambda: f64, budget: u64, inner: u64) -> Result<()> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension must be >= 2, got {d}")));
    }
    if k == 0 || k >= d {
        return Err(Error::invalid(format!("k must lie in 1..={}, got {k}", d - 1)));
    }
    if i < k + 2 {
        return Err(Error::invalid(format!("component size {i} is below k + 2")));
    }
    if j == 0 {
        return Err(Error::invalid("Betti value j must be >= 1"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if budget < 2 {
        return Err(Error::invalid("sample budget must be >= 2"));
    }
    if inner == 0 {
        return Err(Error::invalid("inner-volume budget must be >= 1"));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::invalid(format!("scale must lie in [0, 1], got {t}")))
    }
}

fn check_alpha(d: usize, alpha: f64) -> Result<()> {
    if alpha > d as f64 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must exceed d = {d}, got {alpha}")))
    }
}

fn check_tau_c(tau: f64, c: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(format!("tau must lie in (0, 1], got {tau}")));
    }
    if !(c > 0.0) {
        return Err(Error::invalid(format!("c must be positive, got {c}")));
    }
    Ok(())
}

impl MuSpec {
    pub fn validate(&self) -> Result<()> {
        check_common(self.d, self.k, self.i, self.j, self.lambda, self.budget, self.inner_budget)?;
        check_t(self.t)?;
        check_alpha(self.d, self.alpha)
    }
}

impl XiSpec {
    pub fn validate(&self) -> Result<()> {
        check_common(self.d, self.k, self.i, self.j, self.lambda, self.budget, self.inner_budget)?;
        check_t(self.t)?;
        check_tau_c(self.tau, self.c)
    }
}

/// Radius, in units of `t`, of a ball around the origin containing every
/// `y_l` for which `h_t(0, y)` can be nonzero. A connected set on `i` points
/// has all points within `(i-1) t` of any one of them; on exactly `k+2`
/// points a k-cycle needs every edge, so `t` suffices.
fn locality(k: usize, i: usize) -> f64 {
    if i == k + 2 {
        1.0
    } else {
        (i - 1) as f64
    }
}

/// `beta_k` of the Čech complex on `pts` at scale `t` if it is connected,
/// otherwise 0.
fn connected_betti(pts: &[Vec<f64>], k: usize, t: f64) -> usize {
    if pts.len() == k + 2 {
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        return usize::from(minimal_cycle_indicator(&refs, t, BallConvention::HalfScale));
    }
    let d = pts[0].len();
    let cloud = PointCloud::from_points(d, pts).expect("finite sample points");
    if components(&cloud, t).expect("t >= 0").len() != 1 {
        return 0;
    }
    let cx = build_cech(&cloud, t, k + 1).expect("k + 1 <= d");
    betti(&cx, k).expect("k within cap")
}

/// Which `j` values of `h` are counted and with what weight.
#[derive(Clone, Copy)]
enum Weighting {
    /// `1{beta = j}`.
    Exact(usize),
    /// `beta 1{beta <= j_cap}`, i.e. `sum_{j <= j_cap} j 1{beta = j}`.
    Capped(usize),
}

impl Weighting {
    fn apply(self, beta: usize) -> f64 {
        match self {
            Weighting::Exact(j) => f64::from(u8::from(beta == j)),
            Weighting::Capped(cap) if beta <= cap => beta as f64,
            Weighting::Capped(_) => 0.0,
        }
    }
}

fn uniform_in_ball(rng: &mut StreamRng, d: usize, radius: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let n = crate::geometry::norm(out);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    out.iter_mut().for_each(|x| *x *= r / n);
}

fn uniform_direction(rng: &mut StreamRng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = crate::geometry::norm(&v);
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `{0, y_1, .., y_{i-1}}` with the `y_l` uniform in `B(0, radius)`.
fn draw_configuration(rng: &mut StreamRng, d: usize, i: usize, radius: f64) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(i);
    pts.push(vec![0.0; d]);
    for _ in 1..i {
        let mut y = Vec::with_capacity(d);
        uniform_in_ball(rng, d, radius, &mut y);
        pts.push(y);
    }
    pts
}

/// Hit-or-miss sample of the union of balls of radius `r` around `pts`:
/// returns the bounding-box volume, the number of draws and the points that
/// fell inside. Draws come in batches of 4096 stratified along the first axis.
fn union_hits(pts: &[Vec<f64>], r: f64, budget: u64, rng: &mut StreamRng) -> (f64, u64, Vec<Vec<f64>>) {
    let d = pts[0].len();
    let lo: Vec<f64> = (0..d).map(|a| pts.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min) - r).collect();
    let hi: Vec<f64> = (0..d).map(|a| pts.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max) + r).collect();
    let box_vol: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    let r2 = r * r;
    let mut hits = Vec::new();
    let mut done = 0;
    while done < budget {
        let m = BATCH.min(budget - done);
        for s in 0..m {
            let mut z = Vec::with_capacity(d);
            z.push(lo[0] + (hi[0] - lo[0]) * (s as f64 + rng.random::<f64>()) / m as f64);
            z.extend((1..d).map(|a| lo[a] + (hi[a] - lo[a]) * rng.random::<f64>()));
            if pts.iter().any(|p| dist2(p, &z) < r2) {
                hits.push(z);
            }
        }
        done += m;
    }
    (box_vol, budget, hits)
}

/// Volume of the union of open balls of radius `r` around `pts`: exact in
/// the plane, hit-or-miss otherwise.
fn union_volume(pts: &[Vec<f64>], r: f64, budget: u64, rng: &mut StreamRng) -> f64 {
    if pts[0].len() == 2 {
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        return union_area_2d(&refs, r);
    }
    let (vol, n, hits) = union_hits(pts, r, budget, rng);
    vol * hits.len() as f64 / n as f64
}

struct MuDraw {
    d: usize,
    k: usize,
    i: usize,
    alpha: f64,
    lambda: f64,
    inner: u64,
    weighting: Weighting,
}

impl MuDraw {
    /// Fills `out[m]` with the integrand at scale `ts[m]`. With `direct` the
    /// configuration is drawn and evaluated at scale `ts[0]` itself;
    /// otherwise it is drawn at scale 1 and mapped to every `t` through
    /// `h_t(0, t u) = h_1(0, u)` and `vol(U(0, t u; t)) = t^d vol(U(0, u; 1))`.
    fn draw(&self, rng: &mut StreamRng, ts: &[f64], direct: bool, out: &mut [f64]) {
        let (d, i) = (self.d, self.i);
        let p = self.alpha * i as f64 - d as f64;
        let rho = (1.0 - rng.random::<f64>()).powf(-1.0 / p);
        let base = if direct { ts[0] } else { 1.0 };
        let radius = locality(self.k, i) * base;
        let proposal = (unit_ball_volume(d) * radius.powi(d as i32)).powi(i as i32 - 1);
        let pts = draw_configuration(rng, d, i, radius);
        let g = self.weighting.apply(connected_betti(&pts, self.k, base));
        if g == 0.0 {
            return;
        }
        let w = sphere_area(d) / p * proposal * g;
        let vol = if self.lambda > 0.0 {
            union_volume(&pts, base, self.inner, rng)
        } else {
            0.0
        };
        let decay = self.lambda * rho.powf(-self.alpha);
        if direct {
            out[0] = w * (-decay * vol).exp();
        } else {
            for (o, &t) in out.iter_mut().zip(ts) {
                let td = t.powi(d as i32);
                *o = td.powi(i as i32 - 1) * w * (-decay * td * vol).exp();
            }
        }
    }
}

fn mu_key(d: usize, k: usize, i: usize, t: Option<f64>, lambda: f64, alpha: f64) -> Vec<u64> {
    vec![
        NS_MU,
        d as u64,
        k as u64,
        i as u64,
        t.map_or(u64::MAX, f64::to_bits),
        lambda.to_bits(),
        alpha.to_bits(),
    ]
}

/// Unbiased estimate of `mu(i,j)(t; lambda)`.
pub fn mu_estimate(spec: &MuSpec) -> Result<MCEstimate> {
    spec.validate()?;
    if spec.t == 0.0 {
        return Ok(MCEstimate::zero(spec.budget, spec.seed));
    }
    let draw = MuDraw {
        d: spec.d,
        k: spec.k,
        i: spec.i,
        alpha: spec.alpha,
        lambda: spec.lambda,
        inner: spec.inner_budget,
        weighting: Weighting::Exact(spec.j),
    };
    let key = mu_key(spec.d, spec.k, spec.i, Some(spec.t), spec.lambda, spec.alpha);
    let ts = [spec.t];
    Ok(run_batches(spec.budget, spec.seed, &key, 1, |rng, out| draw.draw(rng, &ts, true, out))[0])
}

/// `mu(i,j)(t; lambda)` on a grid of scales from one set of draws (the
/// `t` field of `spec` is ignored). Values at different `t` are correlated.
pub fn mu_curve(spec: &MuSpec, t_grid: &[f64]) -> Result<Vec<MCEstimate>> {
    spec.validate()?;
    check_grid(t_grid)?;
    let draw = MuDraw {
        d: spec.d,
        k: spec.k,
        i: spec.i,
        alpha: spec.alpha,
        lambda: spec.lambda,
        inner: spec.inner_budget,
        weighting: Weighting::Exact(spec.j),
    };
    let key = mu_key(spec.d, spec.k, spec.i, None, spec.lambda, spec.alpha);
    Ok(run_batches(spec.budget, spec.seed, &key, t_grid.len(), |rng, out| {
        draw.draw(rng, t_grid, false, out)
    }))
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    t_grid.iter().try_for_each(|&t| check_t(t))
}

struct XiDraw {
    d: usize,
    k: usize,
    i: usize,
    c: f64,
    lambda: f64,
    inner: u64,
    weighting: Weighting,
}

impl XiDraw {
    /// Same conventions as [`MuDraw::draw`].
    fn draw(&self, rng: &mut StreamRng, ts: &[f64], direct: bool, out: &mut [f64]) {
        let (d, i) = (self.d, self.i);
        let theta = uniform_direction(rng, d);
        let rho = -(1.0 - rng.random::<f64>()).ln() / i as f64;
        let base = if direct { ts[0] } else { 1.0 };
        let radius = locality(self.k, i) * base;
        let proposal = (unit_ball_volume(d) * radius.powi(d as i32)).powi(i as i32 - 1);
        let pts = draw_configuration(rng, d, i, radius);
        let g = self.weighting.apply(connected_betti(&pts, self.k, base));
        if g == 0.0 {
            return;
        }
        let w = sphere_area(d) / i as f64 * proposal * g;
        let proj: Vec<f64> = pts[1..].iter().map(|y| dot(&theta, y)).collect();
        let infinite = self.c.is_infinite();
        // inner integral at scale `base`, as a function of the tilt s = t / base
        let inner: Box<dyn Fn(f64) -> f64> = if self.lambda == 0.0 {
            Box::new(|_| 0.0)
        } else if infinite {
            let v = union_volume(&pts, base, self.inner, rng);
            Box::new(move |_| v)
        } else {
            let (vol, n, hits) = union_hits(&pts, base, self.inner, rng);
            let zp: Vec<f64> = hits.iter().map(|z| dot(&theta, z)).collect();
            let c = self.c;
            Box::new(move |s| vol / n as f64 * zp.iter().map(|&q| (-s * q / c).exp()).sum::<f64>())
        };
        // s maps the drawn configuration to the target scale, td = (s base)^d / base^d
        let value = |s: f64, td: f64| -> f64 {
            if !infinite && proj.iter().any(|&q| rho + s * q / self.c < 0.0) {
                return 0.0;
            }
            let tilt = if infinite {
                1.0
            } else {
                (-s * proj.iter().sum::<f64>() / self.c).exp()
            };
            tilt * (-self.lambda * (-rho).exp() * td * inner(s)).exp()
        };
        if direct {
            out[0] = w * value(1.0, 1.0);
        } else {
            for (o, &t) in out.iter_mut().zip(ts) {
                if t == 0.0 {
                    continue;
                }
                let td = t.powi(d as i32);
                *o = td.powi(i as i32 - 1) * w * value(t, td);
            }
        }
    }
}

fn xi_key(d: usize, k: usize, i: usize, t: Option<f64>, lambda: f64, c: f64) -> Vec<u64> {
    vec![
        NS_XI,
        d as u64,
        k as u64,
        i as u64,
        t.map_or(u64::MAX, f64::to_bits),
        lambda.to_bits(),
        c.to_bits(),
    ]
}

/// Estimate of `xi(i,j)(t; lambda)`. For `lambda > 0` and finite `c` the
/// inner integral is itself sampled, which biases the estimate by the
/// curvature of `exp` over the inner sampling error.
pub fn xi_estimate(spec: &XiSpec) -> Result<MCEstimate> {
    spec.validate()?;
    if spec.t == 0.0 {
        return Ok(MCEstimate::zero(spec.budget, spec.seed));
    }
    let draw = XiDraw {
        d: spec.d,
        k: spec.k,
        i: spec.i,
        c: spec.c,
        lambda: spec.lambda,
        inner: spec.inner_budget,
        weighting: Weighting::Exact(spec.j),
    };
    let key = xi_key(spec.d, spec.k, spec.i, Some(spec.t), spec.lambda, spec.c);
    let ts = [spec.t];
    Ok(run_batches(spec.budget, spec.seed, &key, 1, |rng, out| draw.draw(rng, &ts, true, out))[0])
}

/// `xi(i,j)(t; lambda)` on a grid of scales from one set of draws.
pub fn xi_curve(spec: &XiSpec, t_grid: &[f64]) -> Result<Vec<MCEstimate>> {
    spec.validate()?;
    check_grid(t_grid)?;
    let draw = XiDraw {
        d: spec.d,
        k: spec.k,
        i: spec.i,
        c: spec.c,
        lambda: spec.lambda,
        inner: spec.inner_budget,
        weighting: Weighting::Exact(spec.j),
    };
    let key = xi_key(spec.d, spec.k, spec.i, None, spec.lambda, spec.c);
    Ok(run_batches(spec.budget, spec.seed, &key, t_grid.len(), |rng, out| {
        draw.draw(rng, t_grid, false, out)
    }))
}

/// Parameters of a truncated series `sum_{i=k+2}^{M} sum_{j<=J} j lam^i/i! F(i,j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TotalSpec {
    pub d: usize,
    pub k: usize,
    pub t: f64,
    pub lambda: f64,
    pub m_cap: usize,
    pub j_cap: usize,
    /// Samples per series term.
    pub budget: u64,
    pub inner_budget: u64,
    pub seed: u64,
    /// The sum is compared against truncated Betti numbers only, for which
    /// any `lambda > 0` is admissible. Otherwise `lambda < 1/(e omega_d)`.
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TotalEstimate {
    pub estimate: MCEstimate,
    /// Deterministic bound on the omitted terms `i > m_cap`.
    pub tail_bound: f64,
    /// Weighted estimates of the individual terms `i = k+2 ..= m_cap`.
    pub terms: Vec<MCEstimate>,
}

/// Largest admissible `lambda` for the untruncated series: `1 / (e omega_d)`.
pub fn lambda_max(d: usize) -> f64 {
    1.0 / (std::f64::consts::E * unit_ball_volume(d))
}

impl TotalSpec {
    pub fn validate(&self) -> Result<()> {
        check_common(self.d, self.k, self.k + 2, 1, self.lambda, self.budget, self.inner_budget)?;
        check_t(self.t)?;
        if self.m_cap < self.k + 2 {
            return Err(Error::invalid(format!(
                "truncation level {} is below k + 2 = {}",
                self.m_cap,
                self.k + 2
            )));
        }
        if self.j_cap == 0 {
            return Err(Error::invalid("j cap must be >= 1"));
        }
        let max = if self.truncated { f64::INFINITY } else { lambda_max(self.d) };
        if !(self.lambda > 0.0 && self.lambda < max) {
            return Err(Error::Range(format!(
                "lambda = {} must lie in (0, 1/(e omega_d)) = (0, {max}) for the series to converge",
                self.lambda
            )));
        }
        Ok(())
    }
}

fn ln_series_coefficient(i: usize, lambda: f64) -> f64 {
    i as f64 * lambda.ln() - ln_gamma(i as f64 + 1.0)
}

/// `lam^i / i!`.
fn series_coefficient(i: usize, lambda: f64) -> f64 {
    (1..=i).fold(1.0, |acc, m| acc * lambda / m as f64)
}

/// Sum over `i > m` of `lam^i/i! C(i,k+1) i^{i-2} (omega_d t^d)^{i-1} s_{d-1} g(i)`,
/// which dominates the omitted terms because `sum_j j h(i,j) <= C(i,k+1)`
/// times the indicator of connectivity, whose integral is at most
/// `i^{i-2} (omega_d t^d)^{i-1}` (spanning trees).
fn series_tail(d: usize, k: usize, t: f64, lambda: f64, m: usize, g: impl Fn(usize) -> f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let ln_v = (unit_ball_volume(d) * t.powi(d as i32)).ln();
    let ln_binom = |i: usize| ln_gamma(i as f64 + 1.0) - ln_gamma((k + 2) as f64) - ln_gamma((i - k) as f64);
    let mut sum = 0.0;
    for i in m + 1..200_000 {
        let ln_term = ln_series_coefficient(i, lambda)
            + ln_binom(i)
            + (i as f64 - 2.0) * (i as f64).ln()
            + (i as f64 - 1.0) * ln_v;
        let term = sphere_area(d) * g(i) * ln_term.exp();
        sum += term;
        if i > m + 10 && term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

pub fn mu_tail_bound(d: usize, k: usize, t: f64, lambda: f64, alpha: f64, m: usize) -> f64 {
    series_tail(d, k, t, lambda, m, |i| 1.0 / (alpha * i as f64 - d as f64))
}

pub fn xi_tail_bound(d: usize, k: usize, t: f64, lambda: f64, c: f64, m: usize) -> f64 {
    // under the indicators the rho integrand is at most e^{-rho}; for c = inf it is e^{-i rho}
    series_tail(d, k, t, lambda, m, |i| if c.is_infinite() { 1.0 / i as f64 } else { 1.0 })
}

fn combine(terms: &[MCEstimate], budget: u64, seed: u64) -> MCEstimate {
    MCEstimate {
        mean: terms.iter().map(|e| e.mean).sum(),
        stderr: terms.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt(),
        samples: budget,
        seed,
    }
}

/// Truncated `mu_k(t; lambda) = sum_i sum_j j lam^i/i! mu(i,j)(t; lambda)`.
pub fn mu_total(spec: &TotalSpec, alpha: f64) -> Result<TotalEstimate> {
    spec.validate()?;
    check_alpha(spec.d, alpha)?;
    let tail_bound = mu_tail_bound(spec.d, spec.k, spec.t, spec.lambda, alpha, spec.m_cap);
    if spec.t == 0.0 {
        let terms = vec![MCEstimate::zero(spec.budget, spec.seed); spec.m_cap - spec.k - 1];
        return Ok(TotalEstimate {
            estimate: MCEstimate::zero(spec.budget, spec.seed),
            tail_bound,
            terms,
        });
    }
    let ts = [spec.t];
    let terms: Vec<MCEstimate> = (spec.k + 2..=spec.m_cap)
        .map(|i| {
            let draw = MuDraw {
                d: spec.d,
                k: spec.k,
                i,
                alpha,
                lambda: spec.lambda,
                inner: spec.inner_budget,
                weighting: Weighting::Capped(spec.j_cap),
            };
            let key = mu_key(spec.d, spec.k, i, Some(spec.t), spec.lambda, alpha);
            let e = run_batches(spec.budget, spec.seed, &key, 1, |rng, out| draw.draw(rng, &ts, true, out))[0];
            e.scaled(series_coefficient(i, spec.lambda))
        })
        .collect();
    Ok(TotalEstimate {
        estimate: combine(&terms, spec.budget, spec.seed),
        tail_bound,
        terms,
    })
}

/// [`mu_total`] on a grid of scales (the `t` field of `spec` is ignored).
pub fn mu_total_curve(spec: &TotalSpec, alpha: f64, t_grid: &[f64]) -> Result<Vec<TotalEstimate>> {
    TotalSpec { t: 0.0, ..spec.clone() }.validate()?;
    check_alpha(spec.d, alpha)?;
    check_grid(t_grid)?;
    let per_i: Vec<Vec<MCEstimate>> = (spec.k + 2..=spec.m_cap)
        .map(|i| {
            let draw = MuDraw {
                d: spec.d,
                k: spec.k,
                i,
                alpha,
                lambda: spec.lambda,
                inner: spec.inner_budget,
                weighting: Weighting::Capped(spec.j_cap),
            };
            let key = mu_key(spec.d, spec.k, i, None, spec.lambda, alpha);
            let coef = series_coefficient(i, spec.lambda);
            run_batches(spec.budget, spec.seed, &key, t_grid.len(), |rng, out| {
                draw.draw(rng, t_grid, false, out)
            })
            .into_iter()
            .map(|e| e.scaled(coef))
            .collect()
        })
        .collect();
    Ok(assemble_curve(&per_i, t_grid, spec, |t| {
        mu_tail_bound(spec.d, spec.k, t, spec.lambda, alpha, spec.m_cap)
    }))
}

fn assemble_curve(per_i: &[Vec<MCEstimate>], t_grid: &[f64], spec: &TotalSpec, bound: impl Fn(f64) -> f64) -> Vec<TotalEstimate> {
    t_grid
        .iter()
        .enumerate()
        .map(|(m, &t)| {
            let terms: Vec<MCEstimate> = per_i.iter().map(|c| c[m]).collect();
            TotalEstimate {
                estimate: combine(&terms, spec.budget, spec.seed),
                tail_bound: bound(t),
                terms,
            }
        })
        .collect()
}

fn check_xi_total(spec: &TotalSpec, tau: f64, c: f64) -> Result<()> {
    check_tau_c(tau, c)?;
    if spec.d == 2 && tau >= 1.0 {
        return Err(Error::Range(format!(
            "in dimension 2 the exponential series needs tau < 1, got {tau}"
        )));
    }
    Ok(())
}

/// Truncated `xi_k(t; lambda) = sum_i sum_j j lam^i/i! xi(i,j)(t; lambda)`.
pub fn xi_total(spec: &TotalSpec, tau: f64, c: f64) -> Result<TotalEstimate> {
    spec.validate()?;
    check_xi_total(spec, tau, c)?;
    let tail_bound = xi_tail_bound(spec.d, spec.k, spec.t, spec.lambda, c, spec.m_cap);
    if spec.t == 0.0 {
        let terms = vec![MCEstimate::zero(spec.budget, spec.seed); spec.m_cap - spec.k - 1];
        return Ok(TotalEstimate {
            estimate: MCEstimate::zero(spec.budget, spec.seed),
            tail_bound,
            terms,
        });
    }
    let ts = [spec.t];
    let terms: Vec<MCEstimate> = (spec.k + 2..=spec.m_cap)
        .map(|i| {
            let draw = XiDraw {
                d: spec.d,
                k: spec.k,
                i,
                c,
                lambda: spec.lambda,
                inner: spec.inner_budget,
                weighting: Weighting::Capped(spec.j_cap),
            };
            let key = xi_key(spec.d, spec.k, i, Some(spec.t), spec.lambda, c);
            let e = run_batches(spec.budget, spec.seed, &key, 1, |rng, out| draw.draw(rng, &ts, true, out))[0];
            e.scaled(series_coefficient(i, spec.lambda))
        })
        .collect();
    Ok(TotalEstimate {
        estimate: combine(&terms, spec.budget, spec.seed),
        tail_bound,
        terms,
    })
}

/// [`xi_total`] on a grid of scales (the `t` field of `spec` is ignored).
pub fn xi_total_curve(spec: &TotalSpec, tau: f64, c: f64, t_grid: &[f64]) -> Result<Vec<TotalEstimate>> {
    TotalSpec { t: 0.0, ..spec.clone() }.validate()?;
    check_xi_total(spec, tau, c)?;
    check_grid(t_grid)?;
    let per_i: Vec<Vec<MCEstimate>> = (spec.k + 2..=spec.m_cap)
        .map(|i| {
            let draw = XiDraw {
                d: spec.d,
                k: spec.k,
                i,
                c,
                lambda: spec.lambda,
                inner: spec.inner_budget,
                weighting: Weighting::Capped(spec.j_cap),
            };
            let key = xi_key(spec.d, spec.k, i, None, spec.lambda, c);
            let coef = series_coefficient(i, spec.lambda);
            run_batches(spec.budget, spec.seed, &key, t_grid.len(), |rng, out| {
                draw.draw(rng, t_grid, false, out)
            })
            .into_iter()
            .map(|e| e.scaled(coef))
            .collect()
        })
        .collect();
    Ok(assemble_curve(&per_i, t_grid, spec, |t| {
        xi_tail_bound(spec.d, spec.k, t, spec.lambda, c, spec.m_cap)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mu(t: f64, budget: u64, seed: u64) -> MuSpec {
        MuSpec {
            d: 2,
            k: 1,
            i: 3,
            j: 1,
            t,
            lambda: 0.0,
            alpha: 4.0,
            budget,
            inner_budget: DEFAULT_INNER_BUDGET,
            seed,
        }
    }

    fn xi(t: f64, c: f64, budget: u64, seed: u64) -> XiSpec {
        XiSpec {
            d: 2,
            k: 1,
            i: 3,
            j: 1,
            t,
            lambda: 0.0,
            tau: 0.5,
            c,
            budget,
            inner_budget: DEFAULT_INNER_BUDGET,
            seed,
        }
    }

    fn total(t: f64, lambda: f64, m_cap: usize, j_cap: usize) -> TotalSpec {
        TotalSpec {
            d: 2,
            k: 1,
            t,
            lambda,
            m_cap,
            j_cap,
            budget: 20_000,
            inner_budget: 512,
            seed: 9,
            truncated: false,
        }
    }

    #[test]
    fn moments_merge_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.3).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut parts = Moments::default();
        for chunk in xs.chunks(77) {
            let mut m = Moments::default();
            chunk.iter().for_each(|&x| m.push(x));
            parts.merge(&m);
        }
        assert!((whole.mean - parts.mean).abs() < 1e-12);
        assert!((whole.m2 - parts.m2).abs() < 1e-9 * whole.m2);
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        let e = whole.estimate(0);
        assert!((e.stderr - (var / 1000.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_scale_is_exactly_zero() {
        let e = mu_estimate(&mu(0.0, 100, 1)).unwrap();
        assert_eq!((e.mean, e.stderr), (0.0, 0.0));
        let e = xi_estimate(&xi(0.0, 1.0, 100, 1)).unwrap();
        assert_eq!((e.mean, e.stderr), (0.0, 0.0));
        let e = mu_total(&total(0.0, 0.05, 5, 2), 4.0).unwrap();
        assert_eq!(e.estimate.mean, 0.0);
        let c = mu_curve(&mu(1.0, 1000, 1), &[0.0, 0.5]).unwrap();
        assert_eq!(c[0].mean, 0.0);
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            MuSpec { lambda: -1.0, ..mu(0.5, 100, 0) },
            MuSpec { t: -0.1, ..mu(0.5, 100, 0) },
            MuSpec { t: 1.5, ..mu(0.5, 100, 0) },
            MuSpec { alpha: 2.0, ..mu(0.5, 100, 0) },
            MuSpec { i: 2, ..mu(0.5, 100, 0) },
            MuSpec { j: 0, ..mu(0.5, 100, 0) },
            MuSpec { k: 2, ..mu(0.5, 100, 0) },
            MuSpec { budget: 1, ..mu(0.5, 100, 0) },
        ];
        for s in &bad {
            assert!(matches!(mu_estimate(s), Err(Error::InvalidArgument(_))), "{s:?}");
        }
        assert!(xi_estimate(&XiSpec { c: 0.0, ..xi(0.5, 1.0, 100, 0) }).is_err());
        assert!(xi_estimate(&XiSpec { tau: 1.5, ..xi(0.5, 1.0, 100, 0) }).is_err());
        assert!(xi_estimate(&xi(0.5, f64::INFINITY, 100, 0)).is_ok());
    }

    #[test]
    fn total_lambda_range() {
        let max = lambda_max(2);
        assert!((max - 1.0 / (std::f64::consts::E * PI)).abs() < 1e-15);
        for lam in [0.0, max, 0.2] {
            let err = mu_total(&total(0.5, lam, 4, 1), 4.0).unwrap_err();
            assert!(matches!(err, Error::Range(_)), "{lam}");
            assert!(matches!(xi_total(&total(0.5, lam, 4, 1), 0.5, f64::INFINITY), Err(Error::Range(_))));
        }
        assert!(matches!(mu_total(&total(0.5, 0.05, 2, 1), 4.0), Err(Error::InvalidArgument(_))));
        let trunc = TotalSpec { truncated: true, m_cap: 3, ..total(0.5, 0.2, 4, 1) };
        assert!(mu_total(&trunc, 4.0).is_ok());
        // tau = 1 is excluded in the plane
        assert!(matches!(xi_total(&total(0.5, 0.05, 4, 1), 1.0, 1.0), Err(Error::Range(_))));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = mu_estimate(&mu(0.7, 20_000, 5)).unwrap();
        let b = mu_estimate(&mu(0.7, 20_000, 5)).unwrap();
        let c = mu_estimate(&mu(0.7, 20_000, 6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.mean, c.mean);
        assert_eq!(a.samples, 20_000);
        assert_eq!(a.seed, 5);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mu_estimate(&MuSpec { lambda: 0.05, i: 4, ..mu(0.9, 30_000, 3) }).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn minimal_prefactor() {
        // hand-built estimator of int h_1 dy over B(0,1)^2 with a separate stream
        let mut rng = stream(77, &[0]);
        let n = 400_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let pts = draw_configuration(&mut rng, 2, 3, 1.0);
            hits += connected_betti(&pts, 1, 1.0) as u64;
        }
        let p = hits as f64 / n as f64;
        let a3 = PI * PI * p;
        let a3_se = PI * PI * (p * (1.0 - p) / n as f64).sqrt();
        let est = mu_estimate(&mu(1.0, 400_000, 1)).unwrap();
        // s_1 / (3 alpha - 2) = 2 pi / 10
        let expect = 2.0 * PI / 10.0 * a3;
        let se = est.stderr.hypot(2.0 * PI / 10.0 * a3_se);
        assert!((est.mean - expect).abs() < 3.0 * se, "{} vs {expect} (se {se})", est.mean);
    }

    #[test]
    fn stderr_shrinks_with_doubled_budget() {
        let mut ratios = Vec::new();
        for rep in 0..20 {
            let a = mu_estimate(&mu(0.8, 10_000, 100 + rep)).unwrap();
            let b = mu_estimate(&mu(0.8, 20_000, 200 + rep)).unwrap();
            ratios.push(b.stderr / a.stderr);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((0.6..=0.85).contains(&mean), "{mean}");
        assert!(ratios.iter().all(|r| r.is_finite()));
    }

    #[test]
    fn scale_law() {
        let one = mu_estimate(&mu(1.0, 200_000, 10)).unwrap();
        for (m, t) in [0.3f64, 0.6, 0.9].into_iter().enumerate() {
            let e = mu_estimate(&mu(t, 200_000, 20 + m as u64)).unwrap();
            let f = t.powi(4);
            let scaled = one.scaled(f);
            assert!((e.mean - scaled.mean).abs() < 3.0 * e.combined_stderr(&scaled), "t = {t}");
        }
    }

    #[test]
    fn curve_agrees_with_pointwise_and_is_monotone() {
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        let curve = mu_curve(&mu(1.0, 200_000, 4), &grid).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].mean + 3.0 * w[1].combined_stderr(&w[0]) >= w[0].mean);
        }
        let pt = mu_estimate(&mu(0.6, 200_000, 41)).unwrap();
        assert!((pt.mean - curve[2].mean).abs() < 3.0 * pt.combined_stderr(&curve[2]));
    }

    #[test]
    fn cross_law_small_budget() {
        let (alpha, i, d) = (4.0, 3.0, 2.0);
        let m = mu_estimate(&mu(0.7, 200_000, 1)).unwrap();
        let x = xi_estimate(&xi(0.7, f64::INFINITY, 200_000, 2)).unwrap();
        let ratio = (alpha * i - d) / i;
        let rhs = m.scaled(ratio);
        assert!((x.mean - rhs.mean).abs() < 3.0 * x.combined_stderr(&rhs), "{} vs {}", x.mean, rhs.mean);
    }

    #[test]
    fn one_term_total_is_the_single_estimate() {
        let lam = 0.05;
        let spec = total(0.8, lam, 3, 1);
        let t = mu_total(&spec, 4.0).unwrap();
        let single = mu_estimate(&MuSpec {
            lambda: lam,
            budget: spec.budget,
            inner_budget: spec.inner_budget,
            seed: spec.seed,
            ..mu(0.8, 0, 0)
        })
        .unwrap();
        let coef = series_coefficient(3, lam);
        assert_eq!(t.terms.len(), 1);
        assert!((t.estimate.mean - single.mean * coef).abs() <= 1e-14 * t.estimate.mean);
        let x = xi_total(&spec, 0.5, f64::INFINITY).unwrap();
        let single = xi_estimate(&XiSpec {
            lambda: lam,
            budget: spec.budget,
            inner_budget: spec.inner_budget,
            seed: spec.seed,
            ..xi(0.8, f64::INFINITY, 0, 0)
        })
        .unwrap();
        assert!((x.estimate.mean - single.mean * coef).abs() <= 1e-14 * x.estimate.mean);
    }

    #[test]
    fn successive_totals_within_tail_bound() {
        let lam = 0.1;
        let mut prev: Option<TotalEstimate> = None;
        for m in 3..=6 {
            let cur = mu_total(&total(1.0, lam, m, 10), 4.0).unwrap();
            if let Some(p) = &prev {
                let diff = cur.estimate.mean - p.estimate.mean;
                assert!(diff >= -3.0 * cur.estimate.stderr);
                assert!(diff <= p.tail_bound + 3.0 * cur.estimate.stderr, "m = {m}");
                assert!(cur.tail_bound < p.tail_bound);
            }
            prev = Some(cur);
        }
    }

    #[test]
    fn tail_bound_arithmetic() {
        // first omitted term alone, by hand: d=2, k=1, t=1, M=3, i=4
        let lam: f64 = 0.02;
        let term = lam.powi(4) / 24.0 * 6.0 * 16.0 * (PI * PI * PI) * (2.0 * PI) / (16.0 - 2.0);
        let b = mu_tail_bound(2, 1, 1.0, lam, 4.0, 3);
        assert!(b > term && b < 1.5 * term, "{b} vs {term}");
        assert_eq!(mu_tail_bound(2, 1, 0.0, lam, 4.0, 3), 0.0);
        let x = xi_tail_bound(2, 1, 1.0, lam, f64::INFINITY, 3);
        let xterm = lam.powi(4) / 24.0 * 6.0 * 16.0 * (PI * PI * PI) * (2.0 * PI) / 4.0;
        assert!(x > xterm && x < 1.5 * xterm);
        assert!(xi_tail_bound(2, 1, 1.0, lam, 1.0, 3) > x);
    }

    #[test]
    fn hit_or_miss_volume_in_three_dimensions() {
        let mut rng = stream(3, &[1]);
        let pts = vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0]];
        // two unit balls at distance a: 2 * 4pi/3 - pi (4 + a)(2 - a)^2 / 12
        let a: f64 = 0.5;
        let exact = 8.0 * PI / 3.0 - PI * (4.0 + a) * (2.0 - a).powi(2) / 12.0;
        let v = union_volume(&pts, 1.0, 400_000, &mut rng);
        assert!((v - exact).abs() < 0.01 * exact, "{v} vs {exact}");
    }

    #[test]
    fn three_dimensional_estimates_run() {
        let spec = MuSpec {
            d: 3,
            k: 2,
            i: 4,
            j: 1,
            t: 1.0,
            lambda: 0.05,
            alpha: 5.0,
            budget: 20_000,
            inner_budget: 256,
            seed: 1,
        };
        let e = mu_estimate(&spec).unwrap();
        assert!(e.mean > 0.0 && e.stderr > 0.0);
        let x = xi_estimate(&XiSpec {
            d: 3,
            k: 2,
            i: 4,
            j: 1,
            t: 1.0,
            lambda: 0.05,
            tau: 1.0,
            c: 1.0,
            budget: 20_000,
            inner_budget: 256,
            seed: 1,
        })
        .unwrap();
        assert!(x.mean > 0.0);
    }

    #[test]
    fn infinite_c_serializes_as_string() {
        let s = xi(0.5, f64::INFINITY, 10, 0);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"c\":\"inf\""));
        let back: XiSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let finite: XiSpec = serde_json::from_str(&serde_json::to_string(&xi(0.5, 1.0, 10, 0)).unwrap()).unwrap();
        assert_eq!(finite.c, 1.0);
    }
}
