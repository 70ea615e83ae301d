//! Deterministic scaling: annulus radii, the scalers `rho_n` and `eta_n`,
//! the weak-core radius and a probe-based regime classifier.

use std::f64::consts::E;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, ExpDensity, PowerLawDensity};
use crate::error::{Error, Result};
use crate::geometry::unit_ball_volume;

/// `[inf, R_1, .., R_{d-1}, R_d, 0]` with `R_i = (Cn)^{1/(alpha - d/(i+2))}`
/// for `1 <= i < d` and `R_d = (Cn)^{1/alpha}`.
pub fn annulus_radii_power(alpha: f64, d: usize, c: f64, n: f64) -> Result<Vec<f64>> {
    if d < 2 || !(alpha > d as f64) || !(c > 0.0) || !(n >= 2.0) {
        return Err(Error::invalid(format!(
            "annulus radii need d >= 2, alpha > d, C > 0, n >= 2 (got d={d}, alpha={alpha}, C={c}, n={n})"
        )));
    }
    let df = d as f64;
    let cn = c * n;
    let mut radii = vec![f64::INFINITY];
    radii.extend((1..d).map(|i| cn.powf(1.0 / (alpha - df / (i + 2) as f64))));
    radii.push(cn.powf(1.0 / alpha));
    radii.push(0.0);
    Ok(radii)
}

/// Logarithmic-scale radii for `f = C exp(-r^tau / tau)`:
/// `R_i = (tau log n + (d - tau)/(i+2) log(tau log n) + tau log C)^{1/tau}`
/// for `1 <= i < d`, `R_d = (tau log n + tau log C)^{1/tau}`.
pub fn annulus_radii_exp(tau: f64, d: usize, c: f64, n: f64) -> Result<Vec<f64>> {
    if d < 2 || !(tau > 0.0 && tau <= 1.0) || !(c > 0.0) || !(n >= 3.0) {
        return Err(Error::invalid(format!(
            "annulus radii need d >= 2, tau in (0, 1], C > 0, n >= 3 (got d={d}, tau={tau}, C={c}, n={n})"
        )));
    }
    let df = d as f64;
    let tl = tau * n.ln();
    let root = |x: f64| {
        if x > 0.0 {
            Ok(x.powf(1.0 / tau))
        } else {
            Err(Error::Domain(format!(
                "radius argument {x} is not positive; n = {n} is too small for C = {c}"
            )))
        }
    };
    let mut radii = vec![f64::INFINITY];
    for i in 1..d {
        radii.push(root(tl + (df - tau) / (i + 2) as f64 * tl.ln() + tau * c.ln())?);
    }
    radii.push(root(tl + tau * c.ln())?);
    radii.push(0.0);
    Ok(radii)
}

/// `rho_n = n^{k+2} R^d f(R)^{k+2}`, evaluated as `(n f(R))^{k+2} R^d`.
pub fn rho_n(model: &PowerLawDensity, k: usize, n: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    let nf = n * model.norm_c() * model.profile(r);
    Ok(nf.powi(k as i32 + 2) * r.powi(model.dim() as i32))
}

/// `eta_n = n^{k+2} a(R) R^{d-1} f(R)^{k+2}`.
pub fn eta_n(model: &ExpDensity, k: usize, n: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    let nf = n * model.norm_c() * model.profile(r);
    Ok(nf.powi(k as i32 + 2) * model.a_eval(r)? * r.powi(model.dim() as i32 - 1))
}

/// Solution of `n f(R) = 1`, by bisection to 1e-10 relative.
pub fn weak_core_radius(model: &DensityModel, n: f64) -> Result<f64> {
    let nf = |r: f64| n * model.radial(r);
    let at_zero = nf(0.0);
    if !(at_zero > 1.0) {
        return Err(Error::NoCore(at_zero));
    }
    let mut hi = 1.0;
    while nf(hi) >= 1.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Domain("weak-core radius does not fit in f64".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if nf(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Choice of the tail radius sequence `R_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum RRule {
    /// `R_n = (log n)^{-xi} n^{1/(alpha - d/(k+2))}`, `xi > 0`.
    #[serde(rename = "power-case-i")]
    PowerCaseI { xi: f64 },
    /// `R_n = n^{1/(alpha - d/b)}`, `b > k+2`.
    #[serde(rename = "power-case-ii")]
    PowerCaseII { b: f64 },
    /// `R_n = (c n)^{1/alpha}`, `c > C e omega_d`.
    #[serde(rename = "power-case-iii")]
    PowerCaseIII { c: f64 },
    /// `R_n = psi^{-1}(log n + b log log n)`, `0 < b < (d - tau)/(tau (k+2))`.
    #[serde(rename = "exp-case-i")]
    ExpCaseI { b: f64 },
    /// `R_n = psi^{-1}(log n + log(c1)/tau)`, `c1 > (C e omega_d)^tau`.
    #[serde(rename = "exp-case-ii")]
    ExpCaseII { c1: f64 },
    /// `R_n = scale n^exponent`, for experiments outside the named cases.
    Polynomial { scale: f64, exponent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalerKind {
    /// `n^{k+2} R^d f(R)^{k+2}`.
    Rho,
    /// `R^d`.
    RadiusPower,
    /// `n^{k+2} a(R) R^{d-1} f(R)^{k+2}`.
    Eta,
    /// `a(R) R^{d-1}`.
    AuxRadius,
}

impl ScalerKind {
    pub fn formula(self) -> &'static str {
        match self {
            ScalerKind::Rho => "n^(k+2) R_n^d f(R_n)^(k+2)",
            ScalerKind::RadiusPower => "R_n^d",
            ScalerKind::Eta => "n^(k+2) a(R_n) R_n^(d-1) f(R_n)^(k+2)",
            ScalerKind::AuxRadius => "a(R_n) R_n^(d-1)",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeLabel {
    #[serde(rename = "sparse-CLT-regime")]
    SparseClt,
    WeakCoreRegime,
    PoissonRegime,
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct RegimeSpec {
    pub model: DensityModel,
    pub rule: RRule,
    pub k: usize,
}

fn range_err(msg: String) -> Error {
    Error::Range(msg)
}

impl RegimeSpec {
    pub fn new(model: DensityModel, rule: RRule, k: usize) -> Result<Self> {
        let spec = RegimeSpec { model, rule, k };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the rule against the density family and its parameter range.
    pub fn validate(&self) -> Result<()> {
        let d = self.model.dim();
        if self.k == 0 || self.k >= d {
            return Err(Error::invalid(format!("k must lie in 1..={}, got {}", d - 1, self.k)));
        }
        let kk = (self.k + 2) as f64;
        let ceo = self.model.norm_c() * E * unit_ball_volume(d);
        match (&self.model, self.rule) {
            (DensityModel::PowerLaw(_), RRule::PowerCaseI { xi }) if !(xi > 0.0) => {
                Err(range_err(format!("xi must be positive, got {xi}")))
            }
            (DensityModel::PowerLaw(_), RRule::PowerCaseII { b }) if !(b > kk && b.is_finite()) => {
                Err(range_err(format!("b must exceed k + 2 = {kk}, got {b}")))
            }
            (DensityModel::PowerLaw(_), RRule::PowerCaseIII { c }) if !(c > ceo) => {
                Err(range_err(format!("c must exceed C e omega_d = {ceo}, got {c}")))
            }
            (DensityModel::Exponential(m), RRule::ExpCaseI { b }) => {
                let tau = m.tau();
                let hi = (d as f64 - tau) / (tau * kk);
                if b > 0.0 && b < hi {
                    Ok(())
                } else {
                    Err(range_err(format!("b must lie in (0, {hi}), got {b}")))
                }
            }
            (DensityModel::Exponential(m), RRule::ExpCaseII { c1 }) => {
                let lo = ceo.powf(m.tau());
                if c1 > lo {
                    Ok(())
                } else {
                    Err(range_err(format!("c1 must exceed (C e omega_d)^tau = {lo}, got {c1}")))
                }
            }
            (_, RRule::Polynomial { scale, exponent }) if !(scale > 0.0 && exponent.is_finite()) => {
                Err(Error::invalid(format!("polynomial rule needs scale > 0, got {scale}")))
            }
            (DensityModel::PowerLaw(_), RRule::ExpCaseI { .. } | RRule::ExpCaseII { .. })
            | (
                DensityModel::Exponential(_),
                RRule::PowerCaseI { .. } | RRule::PowerCaseII { .. } | RRule::PowerCaseIII { .. },
            ) => Err(Error::invalid("radius rule does not match the density family")),
            _ => Ok(()),
        }
    }

    pub fn radius(&self, n: f64) -> Result<f64> {
        if !(n > 1.0) {
            return Err(Error::invalid(format!("n must exceed 1, got {n}")));
        }
        let d = self.model.dim() as f64;
        let kk = (self.k + 2) as f64;
        let ln = n.ln();
        let r = match (&self.model, self.rule) {
            (DensityModel::PowerLaw(m), RRule::PowerCaseI { xi }) => {
                ln.powf(-xi) * n.powf(1.0 / (m.alpha() - d / kk))
            }
            (DensityModel::PowerLaw(m), RRule::PowerCaseII { b }) => n.powf(1.0 / (m.alpha() - d / b)),
            (DensityModel::PowerLaw(m), RRule::PowerCaseIII { c }) => (c * n).powf(1.0 / m.alpha()),
            (DensityModel::Exponential(m), RRule::ExpCaseI { b }) => {
                if !(ln.ln() > 0.0) {
                    return Err(Error::Domain(format!("log log n is not positive for n = {n}")));
                }
                m.psi_inverse(ln + b * ln.ln())?
            }
            (DensityModel::Exponential(m), RRule::ExpCaseII { c1 }) => {
                m.psi_inverse(ln + c1.ln() / m.tau())?
            }
            (_, RRule::Polynomial { scale, exponent }) => scale * n.powf(exponent),
            _ => return Err(Error::invalid("radius rule does not match the density family")),
        };
        Ok(r)
    }

    /// `n f(R_n)`.
    pub fn nf(&self, n: f64) -> Result<f64> {
        Ok(n * self.model.radial(self.radius(n)?))
    }

    /// `rho_n` for power-law models, `eta_n` for exponential ones.
    pub fn growth_scaler(&self, n: f64) -> Result<f64> {
        let r = self.radius(n)?;
        match &self.model {
            DensityModel::PowerLaw(m) => rho_n(m, self.k, n, r),
            DensityModel::Exponential(m) => eta_n(m, self.k, n, r),
        }
    }

    /// The scaler under which the tail Betti curve converges for this rule.
    pub fn scaler_kind(&self) -> ScalerKind {
        match (&self.model, self.rule) {
            (_, RRule::PowerCaseIII { .. }) => ScalerKind::RadiusPower,
            (_, RRule::ExpCaseII { .. }) => ScalerKind::AuxRadius,
            (DensityModel::PowerLaw(_), _) => ScalerKind::Rho,
            (DensityModel::Exponential(_), _) => ScalerKind::Eta,
        }
    }

    pub fn scaler(&self, n: f64) -> Result<f64> {
        let r = self.radius(n)?;
        let d = self.model.dim() as i32;
        match (self.scaler_kind(), &self.model) {
            (ScalerKind::RadiusPower, _) => Ok(r.powi(d)),
            (ScalerKind::AuxRadius, DensityModel::Exponential(m)) => Ok(m.a_eval(r)? * r.powi(d - 1)),
            _ => self.growth_scaler(n),
        }
    }

    /// `lim n f(R_n)`: 0 for the sparse rules, `C/c` and `C c1^{-1/tau}`
    /// for the weak-core rules, `None` when unknown.
    pub fn analytic_lambda(&self) -> Option<f64> {
        let c = self.model.norm_c();
        match (&self.model, self.rule) {
            (_, RRule::PowerCaseI { .. } | RRule::PowerCaseII { .. } | RRule::ExpCaseI { .. }) => Some(0.0),
            (_, RRule::PowerCaseIII { c: cc }) => Some(c / cc),
            (DensityModel::Exponential(m), RRule::ExpCaseII { c1 }) => Some(c * c1.powf(-1.0 / m.tau())),
            _ => None,
        }
    }

    /// Closed-form large-n equivalent of [`RegimeSpec::growth_scaler`]
    /// (`rho_n` or `eta_n`), when the rule has one.
    pub fn asymptotic_growth_scaler(&self, n: f64) -> Option<f64> {
        let c = self.model.norm_c();
        let d = self.model.dim() as f64;
        let kk = (self.k + 2) as f64;
        let ln = n.ln();
        let lam = self.analytic_lambda();
        match (&self.model, self.rule) {
            (DensityModel::PowerLaw(m), RRule::PowerCaseI { xi }) => {
                Some(c.powf(kk) * ln.powf(xi * (m.alpha() * kk - d)))
            }
            (DensityModel::PowerLaw(m), RRule::PowerCaseII { b }) => {
                Some(c.powf(kk) * n.powf(d * (1.0 - kk / b) / (m.alpha() - d / b)))
            }
            (DensityModel::PowerLaw(m), RRule::PowerCaseIII { c: cc }) => {
                Some(lam?.powf(kk) * (cc * n).powf(d / m.alpha()))
            }
            (DensityModel::Exponential(m), RRule::ExpCaseI { b }) => {
                let tau = m.tau();
                Some(tau.powf((d - tau) / tau) * c.powf(kk) * ln.powf((d - tau) / tau - b * kk))
            }
            (DensityModel::Exponential(m), RRule::ExpCaseII { .. }) => {
                let tau = m.tau();
                Some(lam?.powf(kk) * (tau * ln).powf((d - tau) / tau))
            }
            _ => None,
        }
    }

    /// One row of the regime table at `n`.
    pub fn probe(&self, n: f64) -> Result<RegimeRow> {
        Ok(RegimeRow {
            n,
            radius: self.radius(n)?,
            nf: self.nf(n)?,
            scaler: self.growth_scaler(n)?,
        })
    }
}

/// `(n, R_n, n f(R_n), scaler)`, the scaler being `rho_n` or `eta_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub n: f64,
    #[serde(rename = "R_n")]
    pub radius: f64,
    #[serde(rename = "nf_R_n")]
    pub nf: f64,
    pub scaler: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub label: RegimeLabel,
    /// Limit of `n f(R_n)` read off the largest probe, in the weak-core regime.
    pub lambda: Option<f64>,
    /// Slope of `log scaler` against `log log n` between the two largest
    /// probes; the sparse case wants it bounded away from zero.
    pub loglog_slope: f64,
    pub rows: Vec<RegimeRow>,
}

/// Default probe sequence: `10^4, 10^6, .., 10^12`.
pub fn default_probe() -> Vec<f64> {
    (2..=6).map(|e| 100f64.powi(e)).collect()
}

/// Classifies the regime from the behaviour of `n f(R_n)` and the growth
/// scaler along `n_probe` (at least 3 increasing values spanning 4 decades).
/// Trends are read off the three largest probes, since slowly varying
/// factors can make early values non-monotone.
pub fn classify_regime(spec: &RegimeSpec, n_probe: &[f64]) -> Result<RegimeReport> {
    spec.validate()?;
    if n_probe.len() < 3 || n_probe.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("need at least 3 strictly increasing probe values"));
    }
    let (first, last) = (n_probe[0], n_probe[n_probe.len() - 1]);
    if !(first > 1.0) || last / first < 1e4 {
        return Err(Error::invalid("probe values must exceed 1 and span at least 4 decades"));
    }
    let rows = n_probe.iter().map(|&n| spec.probe(n)).collect::<Result<Vec<_>>>()?;
    let m = rows.len();
    let lam: Vec<f64> = rows.iter().map(|r| r.nf).collect();
    let sc: Vec<f64> = rows.iter().map(|r| r.scaler).collect();
    let tail = &lam[m - 3..];
    let spread = tail.iter().fold(0f64, |a, &x| a.max((x - lam[m - 1]).abs())) / lam[m - 1];
    let loglog_slope =
        (sc[m - 1] / sc[m - 2]).ln() / (rows[m - 1].n.ln().ln() - rows[m - 2].n.ln().ln());
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let (label, lambda) = if lam[m - 1] > 0.0 && spread < 0.01 {
        (RegimeLabel::WeakCoreRegime, Some(lam[m - 1]))
    } else if decreasing(tail) && increasing(&sc[m - 3..]) {
        (RegimeLabel::SparseClt, None)
    } else if decreasing(tail) && sc[m - 1] <= sc[m - 2] {
        (RegimeLabel::PoissonRegime, None)
    } else {
        (RegimeLabel::Degenerate, None)
    };
    Ok(RegimeReport {
        label,
        lambda,
        loglog_slope,
        rows,
    })
}

/// Writes `n,R_n,nf_R_n,scaler` rows as CSV.
pub fn write_regime_table(rows: &[RegimeRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn power(alpha: f64) -> DensityModel {
        PowerLawDensity::new(2, alpha).unwrap().into()
    }

    fn expo(tau: f64) -> DensityModel {
        ExpDensity::new(2, tau).unwrap().into()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn power_radii() {
        let r = annulus_radii_power(4.0, 2, 1.0, 1e4).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r[0], f64::INFINITY);
        assert_eq!(r[3], 0.0);
        let by_hand = 10f64.powf(4.0 * 3.0 / 10.0);
        assert!(rel(r[1], by_hand) < 1e-12);
        assert!((r[1] - 15.849).abs() < 1e-3);
        assert!(rel(r[2], 10.0) < 1e-12);
        let r3 = annulus_radii_power(5.0, 3, 0.3, 1e6).unwrap();
        assert!(r3.windows(2).all(|w| w[1] < w[0]));
        assert!(annulus_radii_power(2.0, 2, 1.0, 10.0).is_err());
        assert!(annulus_radii_power(4.0, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn exp_radii() {
        let n = 10f64.exp();
        let r = annulus_radii_exp(1.0, 2, 1.0, n).unwrap();
        let by_hand = 10.0 + 10f64.ln() / 3.0;
        assert!(rel(r[1], by_hand) < 1e-12);
        assert!((r[1] - 10.7675).abs() < 1e-4);
        assert!(rel(r[2], 10.0) < 1e-12);
        let r = annulus_radii_exp(0.5, 3, 0.2, 1e8).unwrap();
        assert!(r.windows(2).all(|w| w[1] < w[0]));
        let want = (0.5 * 1e8f64.ln() + 0.5 * 0.2f64.ln()).powf(2.0);
        assert!(rel(r[3], want) < 1e-12);
        // tau log n + tau log C <= 0
        assert!(matches!(annulus_radii_exp(1.0, 2, 1e-3, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn scaler_formulas() {
        let m = PowerLawDensity::new(2, 4.0).unwrap();
        // n f(R) = 1 leaves R^d
        let r0 = 1.5;
        let n0 = 1.0 / (m.norm_c() * m.profile(r0));
        assert!(rel(rho_n(&m, 1, n0, r0).unwrap(), r0 * r0) < 1e-12);
        let (n, r): (f64, f64) = (1e6, 7.5);
        let f = m.norm_c() / (1.0 + r.powi(4));
        assert!(rel(rho_n(&m, 1, n, r).unwrap(), n.powi(3) * r * r * f.powi(3)) < 1e-12);
        let e = ExpDensity::new(2, 1.0).unwrap();
        let f = e.norm_c() * (-r).exp();
        assert!(rel(eta_n(&e, 1, n, r).unwrap(), n.powi(3) * r * f.powi(3)) < 1e-12);
        let ratio = eta_n(&e, 1, n, 2.0 * r).unwrap() / eta_n(&e, 1, n, r).unwrap();
        assert!(rel(ratio, 2.0 * (-3.0 * r).exp()) < 1e-12);
        assert!(rho_n(&m, 1, n, 0.0).is_err());
    }

    #[test]
    fn weak_core_examples() {
        let p = power(4.0);
        let c = p.norm_c();
        for n in [1e3, 1e6, 1e9] {
            let r = weak_core_radius(&p, n).unwrap();
            assert!(rel(r, (n * c - 1.0).powf(0.25)) < 1e-9);
            assert!((n * p.radial(r) - 1.0).abs() < 1e-9);
        }
        let big = weak_core_radius(&p, 1e14).unwrap();
        assert!(rel(big, (1e14 * c).powf(0.25)) < 1e-6);
        let e = expo(0.5);
        let n = 1e12;
        let r = weak_core_radius(&e, n).unwrap();
        assert!((n * e.radial(r) - 1.0).abs() < 1e-9);
        let approx = (0.5 * n.ln() + 0.5 * e.norm_c().ln()).powf(2.0);
        assert!(rel(r, approx) < 1e-9);
        assert!(matches!(weak_core_radius(&p, 1.0), Err(Error::NoCore(_))));
    }

    #[test]
    fn rule_ranges() {
        let p = power(4.0);
        let ceo = p.norm_c() * E * std::f64::consts::PI;
        assert!(RegimeSpec::new(p.clone(), RRule::PowerCaseI { xi: 0.0 }, 1).is_err());
        assert!(RegimeSpec::new(p.clone(), RRule::PowerCaseII { b: 3.0 }, 1).is_err());
        assert!(RegimeSpec::new(p.clone(), RRule::PowerCaseII { b: 3.5 }, 1).is_ok());
        assert!(RegimeSpec::new(p.clone(), RRule::PowerCaseIII { c: ceo }, 1).is_err());
        assert!(RegimeSpec::new(p.clone(), RRule::PowerCaseIII { c: 1.01 * ceo }, 1).is_ok());
        assert!(RegimeSpec::new(p.clone(), RRule::ExpCaseI { b: 0.1 }, 1).is_err());
        assert!(RegimeSpec::new(p, RRule::PowerCaseI { xi: 1.0 }, 2).is_err());
        let e = expo(1.0);
        assert!(RegimeSpec::new(e.clone(), RRule::ExpCaseI { b: 1.0 / 3.0 }, 1).is_err());
        assert!(RegimeSpec::new(e.clone(), RRule::ExpCaseI { b: 0.3 }, 1).is_ok());
        let lo = e.norm_c() * E * std::f64::consts::PI;
        assert!(RegimeSpec::new(e.clone(), RRule::ExpCaseII { c1: lo }, 1).is_err());
        assert!(RegimeSpec::new(e, RRule::ExpCaseII { c1: 1.1 * lo }, 1).is_ok());
    }

    #[test]
    fn classification() {
        let p = power(4.0);
        let ceo = p.norm_c() * E * std::f64::consts::PI;
        let probe = default_probe();
        let s = RegimeSpec::new(p.clone(), RRule::PowerCaseIII { c: 2.0 * ceo }, 1).unwrap();
        let rep = classify_regime(&s, &probe).unwrap();
        assert_eq!(rep.label, RegimeLabel::WeakCoreRegime);
        assert!(rel(rep.lambda.unwrap(), s.analytic_lambda().unwrap()) < 1e-6);

        let e = expo(0.5);
        let s = RegimeSpec::new(e.clone(), RRule::ExpCaseI { b: 0.2 }, 1).unwrap();
        assert_eq!(classify_regime(&s, &probe).unwrap().label, RegimeLabel::SparseClt);
        let lo = (e.norm_c() * E * std::f64::consts::PI).sqrt();
        let s = RegimeSpec::new(e, RRule::ExpCaseII { c1: 2.0 * lo }, 1).unwrap();
        assert_eq!(classify_regime(&s, &probe).unwrap().label, RegimeLabel::WeakCoreRegime);

        let s = RegimeSpec::new(p.clone(), RRule::PowerCaseII { b: 4.0 }, 1).unwrap();
        let rep = classify_regime(&s, &probe).unwrap();
        assert_eq!(rep.label, RegimeLabel::SparseClt);
        assert!(rep.loglog_slope > 1.0);

        let fast = RegimeSpec::new(p.clone(), RRule::Polynomial { scale: 1.0, exponent: 1.0 }, 1).unwrap();
        assert_eq!(classify_regime(&fast, &probe).unwrap().label, RegimeLabel::PoissonRegime);
        let fixed = RegimeSpec::new(p, RRule::Polynomial { scale: 3.0, exponent: 0.0 }, 1).unwrap();
        assert_eq!(classify_regime(&fixed, &probe).unwrap().label, RegimeLabel::Degenerate);
        assert!(classify_regime(&fast, &[1e4, 1e5, 1e6]).is_err());
    }

    #[test]
    fn weak_core_lambda_at_1e10() {
        let p = power(5.0);
        let ceo = p.norm_c() * E * std::f64::consts::PI;
        for mult in [1.5, 3.0, 10.0] {
            let s = RegimeSpec::new(p.clone(), RRule::PowerCaseIII { c: mult * ceo }, 1).unwrap();
            assert!(rel(s.nf(1e10).unwrap(), s.analytic_lambda().unwrap()) < 0.01);
        }
    }

    #[test]
    fn critical_radius_gives_order_one_rho() {
        for alpha in [3.0, 4.0, 6.0] {
            let p = PowerLawDensity::new(2, alpha).unwrap();
            let rho = |n: f64| {
                let r = annulus_radii_power(alpha, 2, p.norm_c(), n).unwrap()[1];
                rho_n(&p, 1, n, r).unwrap()
            };
            assert!(rel(rho(1e8), rho(1e6)) < 0.1);
        }
    }

    #[test]
    fn table_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("regime.csv");
        let s = RegimeSpec::new(power(4.0), RRule::PowerCaseII { b: 4.0 }, 1).unwrap();
        let rows: Vec<RegimeRow> = default_probe().iter().map(|&n| s.probe(n).unwrap()).collect();
        write_regime_table(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,R_n,nf_R_n,scaler"));
        assert_eq!(lines.count(), rows.len());
        let err = write_regime_table(&rows, &dir.path().join("missing/x.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    proptest! {
        #[test]
        fn weak_core_radius_increases(alpha in 2.5f64..8.0, e in 2.0f64..10.0) {
            let p = power(alpha);
            let n = 10f64.powf(e);
            prop_assert!(weak_core_radius(&p, 1.5 * n).unwrap() > weak_core_radius(&p, n).unwrap());
        }
    }
}
