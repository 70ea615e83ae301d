//! Experiment configuration, convergence runs and report output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cech::{build_cech, components};
use crate::cloud::PointCloud;
use crate::density::{DensityModel, ExpDensity, PowerLawDensity, RadialTable, DEFAULT_TABLE_RESOLUTION};
use crate::error::{Error, Result};
use crate::geometry::unit_ball_volume;
use crate::homology::{betti, betti_per_component};
use crate::limits::{
    mu_curve, mu_estimate, mu_total, mu_total_curve, xi_curve, xi_estimate, xi_total, xi_total_curve,
    MCEstimate, MuSpec, TotalSpec, XiSpec, DEFAULT_INNER_BUDGET,
};
use crate::regimes::{classify_regime, default_probe, RRule, RegimeLabel, RegimeReport, RegimeSpec, ScalerKind};
use crate::rng::{stream, NS_TRIAL};
use crate::tail::{sandwich_check, tail_betti_curve, tail_points, TailBettiCurve, DEFAULT_ENUMERATION_CAP};

/// Highest component size kept in the weak-core limit series unless the
/// config asks for a truncation.
pub const DEFAULT_SERIES_CAP: usize = 6;
/// Largest Betti value per component counted in the limit series.
pub const DEFAULT_J_CAP: usize = 64;

pub const PRESETS: [&str; 5] = ["ex31-i", "ex31-ii", "ex31-iii", "ex32-i", "ex32-ii"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelSpec {
    PowerLaw {
        d: usize,
        alpha: f64,
        #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
    Exponential {
        d: usize,
        tau: f64,
        #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<DensityModel> {
        Ok(match *self {
            ModelSpec::PowerLaw { d, alpha, c: None } => PowerLawDensity::new(d, alpha)?.into(),
            ModelSpec::PowerLaw { d, alpha, c: Some(c) } => PowerLawDensity::with_constant(d, alpha, c)?.into(),
            ModelSpec::Exponential { d, tau, c: None } => ExpDensity::new(d, tau)?.into(),
            ModelSpec::Exponential { d, tau, c: Some(c) } => ExpDensity::with_constant(d, tau, c)?.into(),
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::PowerLaw { .. } => "power-law",
            ModelSpec::Exponential { .. } => "exponential",
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ModelSpec::PowerLaw { d, .. } | ModelSpec::Exponential { d, .. } => d,
        }
    }
}

/// `points` equally spaced scales from `min` to `max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.max } else { self.min + step * i as f64 })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = self.points >= 1
            && (0.0..=1.0).contains(&self.min)
            && (0.0..=1.0).contains(&self.max)
            && (self.min < self.max || (self.points == 1 && self.min == self.max));
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "t_grid must satisfy 0 <= min < max <= 1 with points >= 1, got {self:?}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format {s:?}, expected csv or json"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub regime: RRule,
    pub k: usize,
    pub t_grid: GridSpec,
    pub n_values: Vec<u64>,
    pub trials: usize,
    /// Compare truncated Betti numbers `beta^(M)` against the truncated limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_truncation: Option<usize>,
    pub mc_budget: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn regime_spec(&self) -> Result<RegimeSpec> {
        RegimeSpec::new(self.model.build()?, self.regime, self.k)
    }

    pub fn validate(&self) -> Result<()> {
        let config = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.regime_spec().map_err(config)?;
        self.t_grid.validate()?;
        if self.n_values.is_empty() || self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("n_values must be non-empty and strictly increasing".into()));
        }
        if self.n_values[0] < 2 {
            return Err(Error::Config("n_values must be >= 2".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.mc_budget < 2 {
            return Err(Error::Config("mc_budget must be >= 2".into()));
        }
        if let Some(m) = self.m_truncation {
            if m < self.k + 2 {
                return Err(Error::Config(format!("m_truncation must be >= k + 2 = {}", self.k + 2)));
            }
        }
        Ok(())
    }
}

fn pow2_range(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|e| 1u64 << e).collect()
}

/// Named configurations for the worked examples, with parameters chosen
/// inside the admissible ranges.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let grid = GridSpec {
        min: 0.0,
        max: 1.0,
        points: 64,
    };
    let base = |model: ModelSpec, regime: RRule, n_values: Vec<u64>| ExperimentConfig {
        model,
        regime,
        k: 1,
        t_grid: grid,
        n_values,
        trials: 50,
        m_truncation: None,
        mc_budget: 200_000,
        seed: 20_240_601,
        output: None,
    };
    let ceo = |m: &DensityModel| m.norm_c() * std::f64::consts::E * unit_ball_volume(m.dim());
    let cfg = match name {
        "ex31-i" => base(
            ModelSpec::PowerLaw { d: 2, alpha: 5.0, c: None },
            RRule::PowerCaseI { xi: 0.5 },
            pow2_range(9, 14),
        ),
        "ex31-ii" => base(
            ModelSpec::PowerLaw { d: 2, alpha: 5.0, c: None },
            RRule::PowerCaseII { b: 4.0 },
            pow2_range(9, 14),
        ),
        "ex31-iii" => {
            let model = ModelSpec::PowerLaw { d: 2, alpha: 4.0, c: None };
            let c = 2.0 * ceo(&model.build()?);
            base(model, RRule::PowerCaseIII { c }, pow2_range(9, 13))
        }
        "ex32-i" => base(
            ModelSpec::Exponential { d: 2, tau: 1.0, c: None },
            RRule::ExpCaseI { b: 0.1 },
            pow2_range(9, 14),
        ),
        "ex32-ii" => {
            let model = ModelSpec::Exponential { d: 2, tau: 0.9, c: None };
            let c1 = 1.25 * ceo(&model.build()?).powf(0.9);
            base(model, RRule::ExpCaseII { c1 }, pow2_range(9, 14))
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown preset {name:?}; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalerInfo {
    pub kind: ScalerKind,
    pub formula: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCurve {
    pub description: String,
    pub estimates: Vec<MCEstimate>,
    /// Bound on the series terms beyond the truncation, per scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialCurve {
    pub trial: usize,
    pub tail_points: usize,
    pub beta: Vec<usize>,
    /// `beta^(M)`, present when the config sets a truncation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_truncated: Option<Vec<usize>>,
    /// The compared curve (truncated if present) divided by the scaler.
    pub scaled: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub n: u64,
    pub radius: f64,
    pub scaler: f64,
    pub trials: Vec<TrialCurve>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `sup_t |mean scaled - limit|`.
    pub sup_distance: f64,
    pub sup_t: f64,
    /// `sqrt(se_mean^2 + se_limit^2)` at `sup_t`.
    pub pooled_stderr: f64,
    /// Number of (trial, t) pairs on which the decomposition identity and
    /// the sandwich bound were verified.
    pub invariant_checks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub regime: RegimeReport,
    pub scaler: ScalerInfo,
    pub t_grid: Vec<f64>,
    pub limit: LimitCurve,
    pub cells: Vec<CellReport>,
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|x| x as f64).product()
}

fn total_spec(cfg: &ExperimentConfig, lambda: f64, t: f64) -> TotalSpec {
    TotalSpec {
        d: cfg.model.dim(),
        k: cfg.k,
        t,
        lambda,
        m_cap: cfg.m_truncation.unwrap_or(DEFAULT_SERIES_CAP),
        j_cap: DEFAULT_J_CAP,
        budget: cfg.mc_budget,
        inner_budget: DEFAULT_INNER_BUDGET,
        seed: cfg.seed,
        truncated: cfg.m_truncation.is_some(),
    }
}

fn minimal_mu(cfg: &ExperimentConfig, alpha: f64, t: f64) -> MuSpec {
    MuSpec {
        d: cfg.model.dim(),
        k: cfg.k,
        i: cfg.k + 2,
        j: 1,
        t,
        lambda: 0.0,
        alpha,
        budget: cfg.mc_budget,
        inner_budget: DEFAULT_INNER_BUDGET,
        seed: cfg.seed,
    }
}

fn minimal_xi(cfg: &ExperimentConfig, m: &ExpDensity, t: f64) -> XiSpec {
    XiSpec {
        d: cfg.model.dim(),
        k: cfg.k,
        i: cfg.k + 2,
        j: 1,
        t,
        lambda: 0.0,
        tau: m.tau(),
        c: m.a_limit(),
        budget: cfg.mc_budget,
        inner_budget: DEFAULT_INNER_BUDGET,
        seed: cfg.seed,
    }
}

fn lambda_of(spec: &RegimeSpec) -> Result<f64> {
    spec.analytic_lambda()
        .filter(|&l| l > 0.0)
        .ok_or_else(|| Error::Config("weak-core comparison needs a rule with a known positive lambda".into()))
}

/// Limit functional matching the regime's scaler, on the grid.
pub fn limit_curve(cfg: &ExperimentConfig, spec: &RegimeSpec, t_grid: &[f64]) -> Result<LimitCurve> {
    let kk = cfg.k + 2;
    let norm = 1.0 / factorial(kk);
    let trunc = cfg.m_truncation.map_or(String::new(), |m| format!(" truncated at i <= {m}"));
    let (description, estimates, tail_bound) = match (&spec.model, spec.scaler_kind()) {
        (DensityModel::PowerLaw(m), ScalerKind::RadiusPower) => {
            let lambda = lambda_of(spec)?;
            let total = mu_total_curve(&total_spec(cfg, lambda, 0.0), m.alpha(), t_grid)?;
            (
                format!("mu_k(t; {lambda}){trunc}"),
                total.iter().map(|e| e.estimate).collect(),
                Some(total.iter().map(|e| e.tail_bound).collect()),
            )
        }
        (DensityModel::Exponential(m), ScalerKind::AuxRadius) => {
            let lambda = lambda_of(spec)?;
            let total = xi_total_curve(&total_spec(cfg, lambda, 0.0), m.tau(), m.a_limit(), t_grid)?;
            (
                format!("xi_k(t; {lambda}){trunc}"),
                total.iter().map(|e| e.estimate).collect(),
                Some(total.iter().map(|e| e.tail_bound).collect()),
            )
        }
        (DensityModel::PowerLaw(m), _) => {
            let est = mu_curve(&minimal_mu(cfg, m.alpha(), 1.0), t_grid)?;
            (
                format!("mu({kk},1)(t; 0) / {kk}!"),
                est.into_iter().map(|e| e.scaled(norm)).collect(),
                None,
            )
        }
        (DensityModel::Exponential(m), _) => {
            let est = xi_curve(&minimal_xi(cfg, m, 1.0), t_grid)?;
            (
                format!("xi({kk},1)(t; 0) / {kk}!"),
                est.into_iter().map(|e| e.scaled(norm)).collect(),
                None,
            )
        }
    };
    Ok(LimitCurve {
        description,
        estimates,
        tail_bound,
    })
}

/// The limit functional of `cfg` at a single scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSummary {
    pub family: String,
    pub params: serde_json::Value,
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

pub fn limit_at(cfg: &ExperimentConfig, t: f64) -> Result<LimitSummary> {
    cfg.validate()?;
    let spec = cfg.regime_spec()?;
    let kk = cfg.k + 2;
    let norm = 1.0 / factorial(kk);
    let (functional, lambda, est) = match (&spec.model, spec.scaler_kind()) {
        (DensityModel::PowerLaw(m), ScalerKind::RadiusPower) => {
            let lambda = lambda_of(&spec)?;
            ("mu_k", lambda, mu_total(&total_spec(cfg, lambda, t), m.alpha())?.estimate)
        }
        (DensityModel::Exponential(m), ScalerKind::AuxRadius) => {
            let lambda = lambda_of(&spec)?;
            ("xi_k", lambda, xi_total(&total_spec(cfg, lambda, t), m.tau(), m.a_limit())?.estimate)
        }
        (DensityModel::PowerLaw(m), _) => ("mu(k+2,1)/(k+2)!", 0.0, mu_estimate(&minimal_mu(cfg, m.alpha(), t))?.scaled(norm)),
        (DensityModel::Exponential(m), _) => ("xi(k+2,1)/(k+2)!", 0.0, xi_estimate(&minimal_xi(cfg, m, t))?.scaled(norm)),
    };
    let c = match &spec.model {
        DensityModel::Exponential(m) if m.a_limit().is_infinite() => serde_json::json!("inf"),
        DensityModel::Exponential(m) => serde_json::json!(m.a_limit()),
        DensityModel::PowerLaw(_) => serde_json::Value::Null,
    };
    let mut params = serde_json::json!({
        "functional": functional,
        "model": cfg.model,
        "k": cfg.k,
        "t": t,
        "lambda": lambda,
    });
    if !c.is_null() {
        params["c"] = c;
    }
    if let Some(m) = cfg.m_truncation {
        params["m_truncation"] = serde_json::json!(m);
    }
    Ok(LimitSummary {
        family: cfg.model.family().to_string(),
        params,
        mean: est.mean,
        stderr: est.stderr,
        samples: est.samples,
        seed: est.seed,
    })
}

/// Cloud for trial `trial` at sample size `n`.
pub fn trial_cloud(table: &RadialTable, seed: u64, n: u64, trial: usize) -> PointCloud {
    let mut rng = stream(seed, &[NS_TRIAL, n, trial as u64]);
    let mut cloud = table.sample(n as usize, &mut rng);
    cloud.seed = Some(seed);
    cloud
}

struct TrialOutcome {
    curve: TrialCurve,
    checks: usize,
}

/// Sample size, tail radius and scaler of one row of the experiment.
#[derive(Clone, Copy)]
struct Cell {
    n: u64,
    radius: f64,
    scaler: f64,
}

fn run_trial(
    cfg: &ExperimentConfig,
    table: &RadialTable,
    cell: Cell,
    t_grid: &[f64],
    trial: usize,
    check_invariants: bool,
) -> Result<TrialOutcome> {
    let Cell { n, radius, scaler } = cell;
    let k = cfg.k;
    let cloud = trial_cloud(table, cfg.seed, n, trial);
    let tail = tail_points(&cloud, radius)?;
    let mut beta = Vec::with_capacity(t_grid.len());
    let mut truncated = cfg.m_truncation.map(|_| Vec::with_capacity(t_grid.len()));
    let mut checks = 0;
    for &t in t_grid {
        let decomp = components(&tail, t)?;
        let per = betti_per_component(&decomp, k)?;
        let full: usize = per.iter().map(|&(_, j)| j).sum();
        if let (Some(m), Some(tr)) = (cfg.m_truncation, truncated.as_mut()) {
            tr.push(per.iter().filter(|&&(i, _)| i <= m).map(|&(_, j)| j).sum());
        }
        if check_invariants {
            let whole = betti(&build_cech(&tail, t, k + 1)?, k)?;
            let sw = sandwich_check(&tail, 0.0, k, t, DEFAULT_ENUMERATION_CAP)?;
            if whole != full || !sw.holds || sw.beta != full {
                return Err(Error::Domain(format!(
                    "tail invariant failed at n={n}, trial={trial}, t={t}: beta={whole}, component sum={full}, sandwich={sw:?}"
                )));
            }
            checks += 1;
        }
        beta.push(full);
    }
    let compared = truncated.as_ref().unwrap_or(&beta);
    let scaled = compared.iter().map(|&b| b as f64 / scaler).collect();
    Ok(TrialOutcome {
        curve: TrialCurve {
            trial,
            tail_points: tail.len(),
            beta,
            beta_truncated: truncated,
            scaled,
        },
        checks,
    })
}

/// Samples every (n, trial) cell, computes scaled tail Betti curves and
/// compares their mean with the limit curve in sup norm.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let spec = cfg.regime_spec()?;
    let regime = classify_regime(&spec, &default_probe())?;
    match regime.label {
        RegimeLabel::Degenerate => {
            return Err(Error::DegenerateRegime(
                "n f(R_n) does not decrease to zero or settle at a positive level along the probe".into(),
            ))
        }
        RegimeLabel::PoissonRegime => {
            return Err(Error::DegenerateRegime(
                "the scaler stays bounded, so no strong law applies to this radius sequence".into(),
            ))
        }
        _ => {}
    }
    let t_grid = cfg.t_grid.values();
    let limit = limit_curve(cfg, &spec, &t_grid)?;
    let table = RadialTable::new(&spec.model, DEFAULT_TABLE_RESOLUTION)?;
    let check_invariants = matches!(
        (&spec.model, spec.scaler_kind()),
        (DensityModel::PowerLaw(_), ScalerKind::RadiusPower)
    );
    let mut cells = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        let radius = spec.radius(n as f64)?;
        let scaler = spec.scaler(n as f64)?;
        let cell = Cell { n, radius, scaler };
        let outcomes = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| run_trial(cfg, &table, cell, &t_grid, trial, check_invariants))
            .collect::<Result<Vec<_>>>()?;
        let invariant_checks = outcomes.iter().map(|o| o.checks).sum();
        let trials: Vec<TrialCurve> = outcomes.into_iter().map(|o| o.curve).collect();
        cells.push(summarize(n, radius, scaler, trials, &limit, &t_grid, invariant_checks));
    }
    Ok(ConvergenceReport {
        config: cfg.clone(),
        regime,
        scaler: ScalerInfo {
            kind: spec.scaler_kind(),
            formula: spec.scaler_kind().formula().to_string(),
        },
        t_grid,
        limit,
        cells,
    })
}

fn summarize(
    n: u64,
    radius: f64,
    scaler: f64,
    trials: Vec<TrialCurve>,
    limit: &LimitCurve,
    t_grid: &[f64],
    invariant_checks: usize,
) -> CellReport {
    let m = trials.len() as f64;
    let mut mean = vec![0.0; t_grid.len()];
    let mut stderr = vec![0.0; t_grid.len()];
    for (s, slot) in mean.iter_mut().enumerate() {
        *slot = trials.iter().map(|c| c.scaled[s]).sum::<f64>() / m;
    }
    if trials.len() > 1 {
        for (s, slot) in stderr.iter_mut().enumerate() {
            let ss: f64 = trials.iter().map(|c| (c.scaled[s] - mean[s]).powi(2)).sum();
            *slot = (ss / (m - 1.0) / m).sqrt();
        }
    }
    let mut sup_distance = 0.0;
    let mut arg = 0;
    for (s, est) in limit.estimates.iter().enumerate() {
        let gap = (mean[s] - est.mean).abs();
        if gap > sup_distance {
            sup_distance = gap;
            arg = s;
        }
    }
    CellReport {
        n,
        radius,
        scaler,
        trials,
        sup_t: t_grid[arg],
        pooled_stderr: stderr[arg].hypot(limit.estimates[arg].stderr),
        mean,
        stderr,
        sup_distance,
        invariant_checks,
    }
}

/// Companion summary path: `out.csv` -> `out.summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.summary.csv"))
}

fn csv_bytes(comment: &str, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(format!("# {comment}\n").as_bytes());
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header).expect("in-memory write");
        for row in rows {
            w.write_record(&row).expect("in-memory write");
        }
        w.flush().expect("in-memory flush");
    }
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn config_comment(report: &ConvergenceReport) -> String {
    let cfg = serde_json::to_string(&report.config).expect("config serializes");
    format!("config {cfg}")
}

/// CSV of one row per (n, trial, t).
pub fn report_csv(report: &ConvergenceReport) -> Vec<u8> {
    let rows = report.cells.iter().flat_map(|cell| {
        cell.trials.iter().flat_map(move |tc| {
            report.t_grid.iter().enumerate().map(move |(s, t)| {
                vec![
                    cell.n.to_string(),
                    tc.trial.to_string(),
                    t.to_string(),
                    tc.beta[s].to_string(),
                    tc.scaled[s].to_string(),
                ]
            })
        })
    });
    csv_bytes(&config_comment(report), &["n", "trial", "t", "beta", "scaled"], rows)
}

/// CSV of one row per (n, t) with the mean scaled curve and the limit.
pub fn summary_csv(report: &ConvergenceReport) -> Vec<u8> {
    let rows = report.cells.iter().flat_map(|cell| {
        report.t_grid.iter().enumerate().map(move |(s, t)| {
            let lim = report.limit.estimates[s];
            vec![
                cell.n.to_string(),
                t.to_string(),
                cell.mean[s].to_string(),
                cell.stderr[s].to_string(),
                lim.mean.to_string(),
                lim.stderr.to_string(),
                cell.scaler.to_string(),
            ]
        })
    });
    csv_bytes(
        &config_comment(report),
        &["n", "t", "mean", "stderr", "limit", "limit_stderr", "scaler"],
        rows,
    )
}

pub fn report_json(report: &ConvergenceReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Writes the report. CSV output also writes the summary next to `path`.
pub fn emit(report: &ConvergenceReport, format: Format, path: &Path) -> Result<()> {
    match format {
        Format::Json => write_file(path, report_json(report).as_bytes()),
        Format::Csv => {
            write_file(path, &report_csv(report))?;
            write_file(&summary_path(path), &summary_csv(report))
        }
    }
}

pub fn load_report(path: &Path) -> Result<ConvergenceReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Tail Betti curve of one sampled cloud, with the metadata needed to
/// reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub model: ModelSpec,
    pub seed: u64,
    pub curve: TailBettiCurve,
}

/// The cloud `run_convergence` draws for (n, trial).
pub fn sample_trial(cfg: &ExperimentConfig, n: u64, trial: usize) -> Result<PointCloud> {
    cfg.validate()?;
    let table = RadialTable::new(&cfg.model.build()?, DEFAULT_TABLE_RESOLUTION)?;
    Ok(trial_cloud(&table, cfg.seed, n, trial))
}

pub fn sample_curve(cfg: &ExperimentConfig, n: u64, trial: usize) -> Result<CurveRecord> {
    let cloud = sample_trial(cfg, n, trial)?;
    let spec = cfg.regime_spec()?;
    let curve = tail_betti_curve(&cloud, spec.radius(n as f64)?, cfg.k, &cfg.t_grid.values())?;
    Ok(CurveRecord {
        model: cfg.model.clone(),
        seed: cfg.seed,
        curve,
    })
}

pub fn curve_csv(rec: &CurveRecord) -> Vec<u8> {
    let meta = serde_json::json!({
        "n": rec.curve.n,
        "R": rec.curve.radius,
        "k": rec.curve.k,
        "seed": rec.seed,
        "model": rec.model,
    });
    let rows = rec
        .curve
        .t_grid
        .iter()
        .zip(&rec.curve.values)
        .map(|(t, b)| vec![t.to_string(), b.to_string()]);
    csv_bytes(&meta.to_string(), &["t", "beta"], rows)
}

pub fn cloud_csv(cloud: &PointCloud) -> Vec<u8> {
    let mut header = vec!["id".to_string()];
    header.extend((1..=cloud.dim()).map(|a| format!("x{a}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..cloud.len()).map(|i| {
        let mut row = vec![cloud.id(i).to_string()];
        row.extend(cloud.point(i).iter().map(f64::to_string));
        row
    });
    let mut comment = format!("dim {}", cloud.dim());
    if let Some(seed) = cloud.seed {
        let _ = write!(comment, " seed {seed}");
    }
    csv_bytes(&comment, &header, rows)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_file(path, bytes)
}
