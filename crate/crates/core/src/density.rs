//! Spherically symmetric densities with power-law or exponential tails.
//!
//! Both families are written `f(x) = C g(||x||)`: `g(r) = 1 / (1 + r^alpha)`
//! for the power law and `g(r) = exp(-psi(r))` for the exponential class.
//! Radii are drawn by inverting the radial distribution function through a
//! precomputed [`RadialTable`]; directions are uniform on the sphere.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{norm, sphere_area};
use crate::quadrature::{gk15, integrate, integrate_to_infinity};
use crate::rng::{self, StreamRng};

const QUAD_TOL: f64 = 1e-12;

/// Relative agreement required between a user supplied `C` and quadrature.
pub const NORM_CONST_TOL: f64 = 1e-6;

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::invalid(format!("dimension must be >= 2, got {d}")))
    } else {
        Ok(())
    }
}

fn check_explicit_c(c: f64, computed: f64) -> Result<f64> {
    if !(c > 0.0) || ((c - computed) / computed).abs() > NORM_CONST_TOL {
        return Err(Error::invalid(format!(
            "normalizing constant {c} disagrees with the computed value {computed}"
        )));
    }
    Ok(c)
}

/// `f(x) = C / (1 + ||x||^alpha)`, alpha > d.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawDensity {
    d: usize,
    alpha: f64,
    norm_c: f64,
}

impl PowerLawDensity {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        let norm_c = Self::normalizing_constant(d, alpha)?;
        Ok(PowerLawDensity { d, alpha, norm_c })
    }

    /// Model with an explicit constant, which must match quadrature.
    pub fn with_constant(d: usize, alpha: f64, c: f64) -> Result<Self> {
        let computed = Self::normalizing_constant(d, alpha)?;
        Ok(PowerLawDensity {
            d,
            alpha,
            norm_c: check_explicit_c(c, computed)?,
        })
    }

    /// `C` making `C / (1 + ||x||^alpha)` a probability density on R^d.
    pub fn normalizing_constant(d: usize, alpha: f64) -> Result<f64> {
        check_dim(d)?;
        if !(alpha.is_finite() && alpha > d as f64) {
            return Err(Error::invalid(format!(
                "power-law tail index must exceed the dimension: alpha = {alpha}, d = {d}"
            )));
        }
        let df = d as f64;
        let head = integrate(|r| r.powf(df - 1.0) / (1.0 + r.powf(alpha)), 0.0, 1.0, QUAD_TOL);
        let tail = Self::tail_w_integral(alpha, df, 1.0);
        Ok(1.0 / (sphere_area(d) * (head + tail)))
    }

    /// `int_r^inf s^{d-1} / (1 + s^alpha) ds` for `r >= 1`, after the
    /// substitution `s = w^{-1/(alpha-d)}` which makes the integrand smooth
    /// and bounded on `[0, r^{-(alpha-d)}]`.
    fn tail_w_integral(alpha: f64, d: f64, r: f64) -> f64 {
        let gap = alpha - d;
        let p = alpha / gap;
        let upper = r.powf(-gap);
        integrate(|w| 1.0 / (1.0 + w.powf(p)), 0.0, upper, QUAD_TOL) / gap
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn norm_c(&self) -> f64 {
        self.norm_c
    }

    pub fn profile(&self, r: f64) -> f64 {
        1.0 / (1.0 + r.powf(self.alpha))
    }

    /// `f(r t) / f(r)`, which tends to `t^{-alpha}` as `r` grows.
    pub fn tail_ratio(&self, r: f64, t: f64) -> Result<f64> {
        if !(r > 0.0 && t > 0.0) {
            return Err(Error::invalid("tail_ratio needs r > 0 and t > 0"));
        }
        Ok(self.profile(r * t) / self.profile(r))
    }

    fn survival(&self, r: f64) -> f64 {
        let s = sphere_area(self.d) * self.norm_c;
        let df = self.d as f64;
        if r >= 1.0 {
            s * Self::tail_w_integral(self.alpha, df, r)
        } else {
            let mid = integrate(|x| x.powf(df - 1.0) * self.profile(x), r, 1.0, QUAD_TOL);
            s * (mid + Self::tail_w_integral(self.alpha, df, 1.0))
        }
    }

    /// Radius with `P(||X|| > r) = q`, for `q` below the tail mass at radius 1.
    /// Solves in the smooth variable `w = r^{-(alpha-d)}` by Newton's method.
    fn tail_quantile(&self, q: f64) -> f64 {
        let gap = self.alpha - self.d as f64;
        let p = self.alpha / gap;
        let k = sphere_area(self.d) * self.norm_c / gap;
        // G(w) = k * int_0^w dv / (1 + v^p); series valid for w < 1
        let g = |w: f64| {
            let wp = w.powf(p);
            let mut term = w;
            let mut sum = 0.0;
            for m in 0..40 {
                let c = term / (m as f64 * p + 1.0);
                sum += if m % 2 == 0 { c } else { -c };
                if c.abs() < 1e-17 * sum.abs() {
                    break;
                }
                term *= wp;
            }
            k * sum
        };
        let mut w = q / k;
        for _ in 0..60 {
            let step = (g(w) - q) * (1.0 + w.powf(p)) / k;
            w -= step;
            if step.abs() <= 1e-15 * w {
                break;
            }
        }
        w.powf(-1.0 / gap)
    }
}

/// The radial exponent `psi` of an exponential-class density
/// `f(x) = C exp(-psi(||x||))`.
///
/// Implementations must be increasing with `psi' > 0` on `(0, inf)`. The
/// requirement that `psi'` be eventually non-increasing cannot be checked
/// numerically and is the caller's obligation.
pub trait RadialExponent: Send + Sync {
    fn psi(&self, r: f64) -> f64;
    fn derivative(&self, r: f64) -> f64;
    /// Left-continuous inverse `inf { y : psi(y) >= x }`.
    fn inverse(&self, x: f64) -> f64;
    /// Regular variation index tau.
    fn index(&self) -> f64;
    /// `c = lim a(z)` with `a = 1 / psi'`; infinite when `a` diverges.
    fn a_limit(&self) -> f64 {
        1.0 / self.derivative(1e15)
    }
}

/// `psi(r) = r^tau / tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerExponent {
    pub tau: f64,
}

impl RadialExponent for PowerExponent {
    fn psi(&self, r: f64) -> f64 {
        r.powf(self.tau) / self.tau
    }

    fn derivative(&self, r: f64) -> f64 {
        r.powf(self.tau - 1.0)
    }

    fn inverse(&self, x: f64) -> f64 {
        (self.tau * x).powf(1.0 / self.tau)
    }

    fn index(&self) -> f64 {
        self.tau
    }

    fn a_limit(&self) -> f64 {
        if self.tau < 1.0 {
            f64::INFINITY
        } else {
            1.0
        }
    }
}

/// `f(x) = C exp(-psi(||x||))` with psi regularly varying of index tau in (0, 1].
#[derive(Clone)]
pub struct ExpDensity {
    d: usize,
    tau: f64,
    norm_c: f64,
    psi: Arc<dyn RadialExponent>,
    default_psi: bool,
}

impl fmt::Debug for ExpDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExpDensity")
            .field("d", &self.d)
            .field("tau", &self.tau)
            .field("norm_c", &self.norm_c)
            .field("default_psi", &self.default_psi)
            .finish()
    }
}

impl ExpDensity {
    /// Default family `psi(r) = r^tau / tau`.
    pub fn new(d: usize, tau: f64) -> Result<Self> {
        Self::check_tau(tau)?;
        let mut model = Self::with_psi(d, Arc::new(PowerExponent { tau }))?;
        model.default_psi = true;
        Ok(model)
    }

    pub fn with_constant(d: usize, tau: f64, c: f64) -> Result<Self> {
        let mut model = Self::new(d, tau)?;
        model.norm_c = check_explicit_c(c, model.norm_c)?;
        Ok(model)
    }

    /// Arbitrary radial exponent. Its index must lie in (0, 1].
    pub fn with_psi(d: usize, psi: Arc<dyn RadialExponent>) -> Result<Self> {
        let tau = psi.index();
        Self::check_tau(tau)?;
        let norm_c = Self::normalizing_constant(d, psi.as_ref())?;
        Ok(ExpDensity {
            d,
            tau,
            norm_c,
            psi,
            default_psi: false,
        })
    }

    fn check_tau(tau: f64) -> Result<()> {
        if tau > 0.0 && tau <= 1.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("tau must lie in (0, 1], got {tau}")))
        }
    }

    pub fn normalizing_constant(d: usize, psi: &dyn RadialExponent) -> Result<f64> {
        check_dim(d)?;
        let df = d as f64;
        let bulk = psi.inverse(df).max(1e-3);
        let mass = integrate_to_infinity(
            |r| r.powf(df - 1.0) * (-psi.psi(r)).exp(),
            0.0,
            bulk,
            QUAD_TOL,
        );
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid("exponential profile is not integrable"));
        }
        Ok(1.0 / (sphere_area(d) * mass))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn norm_c(&self) -> f64 {
        self.norm_c
    }

    pub fn has_default_psi(&self) -> bool {
        self.default_psi
    }

    pub fn profile(&self, r: f64) -> f64 {
        (-self.psi.psi(r)).exp()
    }

    pub fn psi_eval(&self, r: f64) -> Result<f64> {
        positive(r, "psi")?;
        Ok(self.psi.psi(r))
    }

    pub fn psi_inverse(&self, x: f64) -> Result<f64> {
        positive(x, "psi inverse")?;
        Ok(self.psi.inverse(x))
    }

    /// `a(z) = 1 / psi'(z)`.
    pub fn a_eval(&self, z: f64) -> Result<f64> {
        positive(z, "a")?;
        Ok(1.0 / self.psi.derivative(z))
    }

    /// `c = lim_{z -> inf} a(z)`; crackle occurs iff `c` lies in `(0, inf]`.
    pub fn a_limit(&self) -> f64 {
        self.psi.a_limit()
    }

    fn survival(&self, r: f64) -> f64 {
        let df = self.d as f64;
        let scale = (1.0 / self.psi.derivative(r.max(self.psi.inverse(1.0)))).max(1e-3);
        sphere_area(self.d)
            * self.norm_c
            * integrate_to_infinity(
                |x| x.powf(df - 1.0) * (-self.psi.psi(x)).exp(),
                r,
                scale,
                QUAD_TOL,
            )
    }
}

fn positive(x: f64, what: &str) -> Result<f64> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::invalid(format!("{what} needs a positive argument, got {x}")))
    }
}

#[derive(Clone, Debug)]
pub enum DensityModel {
    PowerLaw(PowerLawDensity),
    Exponential(ExpDensity),
}

impl From<PowerLawDensity> for DensityModel {
    fn from(m: PowerLawDensity) -> Self {
        DensityModel::PowerLaw(m)
    }
}

impl From<ExpDensity> for DensityModel {
    fn from(m: ExpDensity) -> Self {
        DensityModel::Exponential(m)
    }
}

impl DensityModel {
    pub fn dim(&self) -> usize {
        match self {
            DensityModel::PowerLaw(m) => m.d,
            DensityModel::Exponential(m) => m.d,
        }
    }

    pub fn norm_c(&self) -> f64 {
        match self {
            DensityModel::PowerLaw(m) => m.norm_c,
            DensityModel::Exponential(m) => m.norm_c,
        }
    }

    /// Unnormalised radial profile `g(r)`.
    pub fn profile(&self, r: f64) -> f64 {
        match self {
            DensityModel::PowerLaw(m) => m.profile(r),
            DensityModel::Exponential(m) => m.profile(r),
        }
    }

    /// `f` at any point of norm `r`.
    pub fn radial(&self, r: f64) -> f64 {
        self.norm_c() * self.profile(r)
    }

    /// Pointwise density.
    pub fn density_eval(&self, x: &[f64]) -> f64 {
        self.radial(norm(x))
    }

    /// Density of `||X||`: `s_{d-1} r^{d-1} f(r)`.
    pub fn radial_pdf(&self, r: f64) -> f64 {
        sphere_area(self.dim()) * r.powi(self.dim() as i32 - 1) * self.radial(r)
    }

    /// `P(||X|| > r)`.
    pub fn survival(&self, r: f64) -> f64 {
        match self {
            DensityModel::PowerLaw(m) => m.survival(r.max(0.0)),
            DensityModel::Exponential(m) => m.survival(r.max(0.0)),
        }
    }

    /// `P(||X|| <= r)`, integrated directly near the origin.
    pub fn radial_cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r <= self.bulk_scale() {
            integrate(|x| self.radial_pdf(x), 0.0, r, QUAD_TOL)
        } else {
            1.0 - self.survival(r)
        }
    }

    /// Radius where the bulk of the radial mass sits.
    fn bulk_scale(&self) -> f64 {
        match self {
            DensityModel::PowerLaw(_) => 1.0,
            DensityModel::Exponential(m) => m.psi.inverse(1.0).max(1e-3),
        }
    }

    /// Total mass of the radial density; 1 up to quadrature error.
    pub fn total_mass(&self) -> f64 {
        let b = self.bulk_scale();
        integrate(|x| self.radial_pdf(x), 0.0, b, QUAD_TOL) + self.survival(b)
    }
}

pub const DEFAULT_TABLE_RESOLUTION: usize = 4096;
const TABLE_TAIL_MASS: f64 = 1e-12;
const RADIUS_REL_TOL: f64 = 1e-10;

/// Radial distribution function tabulated on log-spaced knots, inverted by
/// safeguarded Newton iteration inside a knot interval.
#[derive(Clone, Debug)]
pub struct RadialTable {
    model: DensityModel,
    knots: Vec<f64>,
    cdf: Vec<f64>,
    resolution: usize,
}

impl RadialTable {
    pub fn new(model: &DensityModel, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::invalid("table resolution must be at least 2"));
        }
        let bulk = model.bulk_scale();
        let r_lo = 1e-4 * bulk;
        let r_hi = match model {
            DensityModel::PowerLaw(m) => m.tail_quantile(TABLE_TAIL_MASS).max(bulk),
            DensityModel::Exponential(_) => {
                let mut r = bulk;
                while model.survival(r) >= TABLE_TAIL_MASS {
                    r *= 2.0;
                }
                // Doubling can overshoot far enough that the cdf rounds to 1.
                let mut lo = 0.5 * r;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + r);
                    if model.survival(mid) >= TABLE_TAIL_MASS {
                        lo = mid;
                    } else {
                        r = mid;
                    }
                }
                r.max(bulk)
            }
        };
        let ratio = (r_hi / r_lo).ln() / (resolution - 1) as f64;
        let mut knots = Vec::with_capacity(resolution + 1);
        knots.push(0.0);
        knots.extend((0..resolution).map(|i| r_lo * (ratio * i as f64).exp()));
        *knots.last_mut().expect("resolution >= 2") = r_hi;

        let mut cdf = Vec::with_capacity(knots.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in knots.windows(2) {
            acc += integrate(|x| model.radial_pdf(x), w[0], w[1], 1e-13);
            cdf.push(acc);
        }
        let top = 1.0 - model.survival(r_hi);
        let fix = top / acc;
        cdf.iter_mut().for_each(|c| *c *= fix);
        if cdf.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("radial table is not strictly increasing"));
        }
        Ok(RadialTable {
            model: model.clone(),
            knots,
            cdf,
            resolution,
        })
    }

    pub fn model(&self) -> &DensityModel {
        &self.model
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// `(radius, cumulative probability)` pairs.
    pub fn entries(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots.iter().copied().zip(self.cdf.iter().copied())
    }

    /// Radius `r` with `P(||X|| <= r) = u`, `u` in `[0, 1)`.
    pub fn radius_for(&self, u: f64) -> f64 {
        let top = *self.cdf.last().expect("non-empty table");
        if u >= top {
            return self.tail_radius(1.0 - u);
        }
        let k = self.cdf.partition_point(|&c| c <= u) - 1;
        let (lo_r, hi_r) = (self.knots[k], self.knots[k + 1]);
        let (lo_c, hi_c) = (self.cdf[k], self.cdf[k + 1]);
        let target = u - lo_c;
        let excess = |r: f64| gk15(&|x| self.model.radial_pdf(x), lo_r, r).0 - target;
        let (mut a, mut b) = (lo_r, hi_r);
        let mut r = lo_r + (hi_r - lo_r) * target / (hi_c - lo_c);
        for _ in 0..200 {
            let h = excess(r);
            if h > 0.0 {
                b = r;
            } else {
                a = r;
            }
            let slope = self.model.radial_pdf(r);
            let mut next = r - h / slope;
            if !(next > a && next < b) || !next.is_finite() {
                next = 0.5 * (a + b);
            }
            let done = (next - r).abs() <= RADIUS_REL_TOL * next || (b - a) <= RADIUS_REL_TOL * b;
            r = next;
            if done {
                break;
            }
        }
        r
    }

    fn tail_radius(&self, q: f64) -> f64 {
        let q = q.max(f64::MIN_POSITIVE);
        match &self.model {
            DensityModel::PowerLaw(m) => m.tail_quantile(q),
            DensityModel::Exponential(_) => {
                let mut lo = *self.knots.last().expect("non-empty table");
                let mut hi = 2.0 * lo;
                while self.model.survival(hi) > q {
                    lo = hi;
                    hi *= 2.0;
                }
                while hi - lo > RADIUS_REL_TOL * hi {
                    let mid = 0.5 * (lo + hi);
                    if self.model.survival(mid) > q {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// `n` independent points drawn from the model.
    pub fn sample(&self, n: usize, rng: &mut StreamRng) -> PointCloud {
        let d = self.model.dim();
        let mut coords = Vec::with_capacity(n * d);
        let mut dir = vec![0.0; d];
        for _ in 0..n {
            let u: f64 = rng.random();
            let r = self.radius_for(u);
            loop {
                dir.iter_mut().for_each(|c| *c = rng.sample(StandardNormal));
                let len = norm(&dir);
                if len > 0.0 {
                    coords.extend(dir.iter().map(|c| r * c / len));
                    break;
                }
            }
        }
        PointCloud::from_raw(d, coords, None)
    }
}

/// `n` i.i.d. points from `model`, reproducible from `(seed, n, model)` at the
/// default table resolution.
pub fn sample_cloud(model: &DensityModel, n: usize, seed: u64) -> Result<PointCloud> {
    let table = RadialTable::new(model, DEFAULT_TABLE_RESOLUTION)?;
    let mut rng = rng::stream(seed, &[rng::NS_CLOUD, n as u64]);
    let mut cloud = table.sample(n, &mut rng);
    cloud.seed = Some(seed);
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;

    #[test]
    fn power_law_constant_d2_alpha4() {
        // int_0^inf r / (1 + r^4) dr = pi / 4, so C = 1 / (2 pi * pi / 4)
        let c = PowerLawDensity::normalizing_constant(2, 4.0).unwrap();
        assert!((c - 2.0 / (PI * PI)).abs() < 1e-10);
        assert!((c - 0.202642).abs() < 1e-6);
    }

    #[test]
    fn exponential_constants() {
        let c = ExpDensity::normalizing_constant(2, &PowerExponent { tau: 1.0 }).unwrap();
        assert!((c - 1.0 / (2.0 * PI)).abs() < 1e-10);
        // u = r^tau / tau turns the radial integral into a gamma function
        for (d, tau) in [(2usize, 0.5), (3, 0.5), (2, 0.25), (3, 0.8)] {
            let c = ExpDensity::normalizing_constant(d, &PowerExponent { tau }).unwrap();
            let df = d as f64;
            let oracle = 1.0 / (sphere_area(d) * tau.powf(df / tau - 1.0) * gamma(df / tau));
            assert!(((c - oracle) / oracle).abs() < 1e-8, "d={d} tau={tau}: {c} vs {oracle}");
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(PowerLawDensity::new(2, 2.0).is_err());
        assert!(PowerLawDensity::new(3, 2.5).is_err());
        assert!(PowerLawDensity::new(1, 4.0).is_err());
        assert!(ExpDensity::new(2, 1.5).is_err());
        assert!(ExpDensity::new(2, 0.0).is_err());
        assert!(PowerLawDensity::with_constant(2, 4.0, 0.3).is_err());
        assert!(PowerLawDensity::with_constant(2, 4.0, 2.0 / (PI * PI)).is_ok());
    }

    #[test]
    fn normalization_holds() {
        let models: Vec<DensityModel> = vec![
            PowerLawDensity::new(2, 4.0).unwrap().into(),
            PowerLawDensity::new(2, 2.3).unwrap().into(),
            PowerLawDensity::new(3, 5.0).unwrap().into(),
            ExpDensity::new(2, 1.0).unwrap().into(),
            ExpDensity::new(3, 0.5).unwrap().into(),
        ];
        for m in &models {
            assert!((m.total_mass() - 1.0).abs() < 1e-6, "{m:?}");
        }
    }

    #[test]
    fn density_values() {
        let m: DensityModel = PowerLawDensity::new(2, 4.0).unwrap().into();
        assert_eq!(m.density_eval(&[0.0, 0.0]), m.norm_c());
        let raw = PowerLawDensity { d: 2, alpha: 4.0, norm_c: 1.0 };
        assert_eq!(DensityModel::PowerLaw(raw).density_eval(&[1.0, 0.0]), 0.5);
        let e = ExpDensity::new(2, 1.0).unwrap();
        assert!((e.profile(3.0) - (-3f64).exp()).abs() < 1e-15);
        let m: DensityModel = e.into();
        let a = m.density_eval(&[0.6, 0.8]);
        let b = m.density_eval(&[1.0, 0.0]);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn psi_helpers() {
        let e1 = ExpDensity::new(2, 1.0).unwrap();
        assert_eq!(e1.psi_eval(2.5).unwrap(), 2.5);
        assert_eq!(e1.psi_inverse(2.5).unwrap(), 2.5);
        assert_eq!(e1.a_eval(7.0).unwrap(), 1.0);
        assert_eq!(e1.a_limit(), 1.0);
        let e = ExpDensity::new(2, 0.5).unwrap();
        assert!((e.psi_eval(4.0).unwrap() - 4.0).abs() < 1e-14);
        assert!((e.psi_inverse(6.0).unwrap() - 9.0).abs() < 1e-12);
        assert!((e.a_eval(9.0).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(e.a_limit(), f64::INFINITY);
        let e = ExpDensity::new(3, 0.3).unwrap();
        for z in [0.5, 2.0, 40.0] {
            assert!((e.a_eval(z).unwrap() - z.powf(0.7)).abs() < 1e-12 * z);
        }
        for r in [1e-3, 0.7, 5.0, 1e4] {
            let back = e.psi_inverse(e.psi_eval(r).unwrap()).unwrap();
            assert!(((back - r) / r).abs() < 1e-10);
        }
        assert!(e.psi_eval(0.0).is_err());
        assert!(e.psi_inverse(-1.0).is_err());
        assert!(e.a_eval(0.0).is_err());
    }

    #[test]
    fn tail_ratio_limits() {
        let m4 = PowerLawDensity::new(2, 4.0).unwrap();
        assert_eq!(m4.tail_ratio(3.0, 1.0).unwrap(), 1.0);
        assert!((m4.tail_ratio(1e3, 2.0).unwrap() - 2f64.powi(-4)).abs() < 1e-3);
        let m5 = PowerLawDensity::new(2, 5.0).unwrap();
        assert!((m5.tail_ratio(1e4, 3.0).unwrap() - 3f64.powi(-5)).abs() < 1e-3);
        for t in [0.5, 2.0, 10.0] {
            assert!((m4.tail_ratio(1e6, t).unwrap() - t.powf(-4.0)).abs() < 1e-4);
        }
        assert!(m4.tail_ratio(0.0, 2.0).is_err());
    }

    #[test]
    fn table_shape() {
        let m: DensityModel = PowerLawDensity::new(2, 4.0).unwrap().into();
        let t = RadialTable::new(&m, DEFAULT_TABLE_RESOLUTION).unwrap();
        let e: Vec<_> = t.entries().collect();
        assert_eq!(e.len(), DEFAULT_TABLE_RESOLUTION + 1);
        assert_eq!(e[0], (0.0, 0.0));
        assert!(e.last().unwrap().1 >= 1.0 - 1e-12);
        assert!(e.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1));
    }

    #[test]
    fn quantiles_invert_cdf() {
        let models: Vec<DensityModel> = vec![
            PowerLawDensity::new(2, 4.0).unwrap().into(),
            ExpDensity::new(3, 0.5).unwrap().into(),
        ];
        for m in &models {
            let t = RadialTable::new(m, 512).unwrap();
            for u in [1e-9, 0.01, 0.3, 0.5, 0.9, 0.999, 1.0 - 1e-9] {
                let r = t.radius_for(u);
                let back = m.radial_cdf(r);
                assert!((back - u).abs() < 1e-8, "{m:?}: u={u} r={r} F(r)={back}");
            }
            // beyond the last knot
            for q in [1e-13, 1e-15] {
                let r = t.radius_for(1.0 - q);
                let s = m.survival(r);
                assert!(((s - q) / q).abs() < 0.05, "q={q} r={r} S(r)={s}");
            }
        }
    }

    #[test]
    fn pareto_tail_is_exact_to_model() {
        let m = PowerLawDensity::new(2, 4.0).unwrap();
        for q in [1e-10, 1e-13, 1e-16] {
            let r = m.tail_quantile(q);
            assert!(((m.survival(r) - q) / q).abs() < 1e-9);
        }
    }

    #[test]
    fn sampling_determinism_and_size() {
        let m: DensityModel = ExpDensity::new(2, 1.0).unwrap().into();
        assert!(sample_cloud(&m, 0, 1).unwrap().is_empty());
        let a = sample_cloud(&m, 50, 9).unwrap();
        let b = sample_cloud(&m, 50, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed, Some(9));
        let c = sample_cloud(&m, 50, 10).unwrap();
        assert_ne!(a, c);
    }
}
