//! Parameter scans over `(ε, λ, m, β)` with CSV output.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::Config;
use crate::dyson::{
    classify_regime, dyson1_exact_with, dyson3_magnitude, leading_order, theorem_residual, ErrorExponents, TransitionReport,
};
use crate::error::{LabError, Result};
use crate::kato::{transport, KatoTransport, TransportOptions};
use crate::oracle::{discretize, evolve};
use crate::phases::PhaseKernels;
use crate::reservoir::ReservoirModel;
use crate::system::DEFAULT_ASSUMPTION_TOL;

#[derive(Debug, Clone, PartialEq)]
pub enum LamRule {
    List(Vec<f64>),
    /// `λ = coeff · ε^power`
    Power { coeff: f64, power: f64 },
}

impl LamRule {
    pub fn values(&self, eps: f64) -> Vec<f64> {
        match self {
            LamRule::List(l) => l.clone(),
            LamRule::Power { coeff, power } => vec![coeff * eps.powf(*power)],
        }
    }
}

/// Which routes a scan evaluates. The free and leading-order values are cheap
/// and always present; the flags gate the expensive ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Routes {
    pub free: bool,
    pub leading: bool,
    pub dyson1: bool,
    pub dyson3: bool,
    pub oracle: bool,
}

impl Default for Routes {
    fn default() -> Self {
        Self {
            free: true,
            leading: true,
            dyson1: true,
            dyson3: false,
            oracle: false,
        }
    }
}

impl Routes {
    pub const NONE: Routes = Routes {
        free: false,
        leading: false,
        dyson1: false,
        dyson3: false,
        oracle: false,
    };

    pub fn parse(v: &str) -> std::result::Result<Self, String> {
        let mut r = Routes::NONE;
        for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "free" => r.free = true,
                "leading" => r.leading = true,
                "dyson1" => r.dyson1 = true,
                "dyson3" => r.dyson3 = true,
                "oracle" => r.oracle = true,
                other => return Err(format!("unknown route `{other}`")),
            }
        }
        if r == Routes::NONE {
            return Err("routes must be nonempty".into());
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub eps_list: Vec<f64>,
    pub lam_rule: LamRule,
    pub m_list: Vec<f64>,
    pub beta_list: Vec<f64>,
    pub t_final: f64,
    pub routes: Routes,
    pub output_path: Option<String>,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::InvalidParameter(m));
        if self.eps_list.is_empty() {
            return bad("empty ε list".into());
        }
        if let Some(e) = self.eps_list.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return bad(format!("ε = {e} outside (0, 1)"));
        }
        let lams: Vec<f64> = self.eps_list.iter().flat_map(|&e| self.lam_rule.values(e)).collect();
        if lams.is_empty() {
            return bad("empty λ list".into());
        }
        if let Some(l) = lams.iter().find(|&&l| !(l >= 0.0 && l.is_finite())) {
            return bad(format!("λ = {l} must be finite and ≥ 0"));
        }
        if self.m_list.is_empty() || self.m_list.iter().any(|&m| !(m > 0.0)) {
            return bad("m list must be nonempty and positive".into());
        }
        if self.beta_list.is_empty() || self.beta_list.iter().any(|&b| !(b > 0.0)) {
            return bad("β list must be nonempty and positive".into());
        }
        if !(0.0..=1.0).contains(&self.t_final) {
            return bad(format!("t = {} outside [0, 1]", self.t_final));
        }
        Ok(())
    }

    /// `(ε, λ, m, β)` in output order.
    pub fn points(&self) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::new();
        for &eps in &self.eps_list {
            for lam in self.lam_rule.values(eps) {
                for &m in &self.m_list {
                    for &beta in &self.beta_list {
                        out.push((eps, lam, m, beta));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub eps: f64,
    pub lam: f64,
    pub m: f64,
    pub beta: f64,
    pub t: f64,
    pub report: Option<TransitionReport>,
    pub p_oracle: Option<f64>,
    pub runtime_ms: u128,
    pub status: String,
}

/// Reservoir for a scan row: the decay exponent is `m` itself at zero
/// temperature and `μ = m + 1` at finite temperature.
pub fn row_model(cfg: &Config, m: f64, beta: f64) -> Result<ReservoirModel> {
    let exponent = if beta.is_infinite() { m } else { m + 1.0 };
    ReservoirModel::new(cfg.reservoir.g0, exponent, cfg.reservoir.omega_d, beta, cfg.reservoir.dispersion)
}

pub fn kato_for(cfg: &Config) -> Result<KatoTransport> {
    let mut opts = TransportOptions::for_system(&cfg.system);
    if let Some(step) = cfg.kato_step {
        opts.step = step;
    }
    transport(&cfg.system, &opts)
}

/// Runs every scan point on a pool of `threads` workers. Row-level failures
/// land in the status column; only spec and assumption failures abort.
pub fn run_scan(cfg: &Config, threads: usize) -> Result<Vec<ScanRow>> {
    cfg.scan.validate()?;
    let report = cfg.system.check_assumptions(DEFAULT_ASSUMPTION_TOL);
    if !report.all_passed() {
        return Err(LabError::Assumptions(report.violations().join(", ")));
    }
    let kt = kato_for(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::InvalidParameter(e.to_string()))?;
    let points = cfg.scan.points();
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|&(eps, lam, m, beta)| scan_row(cfg, &kt, eps, lam, m, beta))
            .collect()
    }))
}

fn scan_row(cfg: &Config, kt: &KatoTransport, eps: f64, lam: f64, m: f64, beta: f64) -> ScanRow {
    let start = Instant::now();
    let t = cfg.scan.t_final;
    let mut row = ScanRow {
        eps,
        lam,
        m,
        beta,
        t,
        report: None,
        p_oracle: None,
        runtime_ms: 0,
        status: "ok".into(),
    };
    let mut failures = Vec::new();
    let point = ScanPoint { eps, lam, m, beta, t };
    match evaluate(cfg, kt, cfg.scan.routes, point) {
        Ok((report, errs)) => {
            row.report = Some(report);
            failures.extend(errs);
        }
        Err(e) => failures.push(e.to_string()),
    }
    if cfg.scan.routes.oracle {
        let result = row_model(cfg, m, beta)
            .and_then(|model| discretize(&model, cfg.oracle.n_modes, cfg.oracle.omega_max))
            .and_then(|modes| evolve(&cfg.system, &modes, &cfg.oracle, eps, lam, t));
        match result {
            Ok(r) => row.p_oracle = Some(r.p12),
            Err(e) => failures.push(format!("oracle: {e}")),
        }
    }
    if !failures.is_empty() {
        row.status = failures.join("; ").replace([',', '\n'], " ");
    }
    row.runtime_ms = start.elapsed().as_millis();
    row
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub eps: f64,
    pub lam: f64,
    pub m: f64,
    pub beta: f64,
    pub t: f64,
}

/// Report at one point plus a message for each route that did not complete.
pub fn evaluate(cfg: &Config, kt: &KatoTransport, routes: Routes, point: ScanPoint) -> Result<(TransitionReport, Vec<String>)> {
    let ScanPoint { eps, lam, m, beta, t } = point;
    let model = row_model(cfg, m, beta)?;
    let (p_free, p_correction) = leading_order(kt, &model, &cfg.system, eps, lam, t)?;
    let mut errs = Vec::new();
    let kernels = if routes.dyson1 || routes.dyson3 {
        Some(PhaseKernels::new(&model, &cfg.system, eps, lam)?)
    } else {
        None
    };
    let mut p_dyson1 = None;
    let mut omega3 = None;
    if let Some(k) = &kernels {
        if routes.dyson1 {
            match dyson1_exact_with(k, kt, t, &cfg.dyson) {
                Ok(v) => p_dyson1 = Some(v),
                Err(e) => errs.push(format!("dyson1: {e}")),
            }
        }
        if routes.dyson3 {
            match dyson3_magnitude(k, kt, t, &cfg.dyson) {
                Ok(v) => omega3 = Some(v),
                Err(e) => errs.push(format!("dyson3: {e}")),
            }
        }
    }
    Ok((
        TransitionReport {
            t,
            eps,
            lam,
            beta,
            m,
            p_free,
            p_correction,
            p_dyson1,
            omega3_norm: omega3,
            residual: p_dyson1.map(|d| theorem_residual(d, p_free, p_correction)),
            regime: classify_regime(eps, lam, m, &cfg.regime),
            error_exponents: ErrorExponents::new(m),
        },
        errs,
    ))
}

pub const CSV_HEADER: &str =
    "eps,lam,m,beta,t,p_free,p_correction,p_dyson1,omega3,residual,regime,runtime_ms,p_oracle,status";

fn fmt(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[ScanRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let rep = r.report.as_ref();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt(r.eps),
            fmt(r.lam),
            fmt(r.m),
            fmt(r.beta),
            fmt(r.t),
            fmt_opt(rep.map(|x| x.p_free)),
            fmt_opt(rep.map(|x| x.p_correction)),
            fmt_opt(rep.and_then(|x| x.p_dyson1)),
            fmt_opt(rep.and_then(|x| x.omega3_norm)),
            fmt_opt(rep.and_then(|x| x.residual)),
            rep.map(|x| x.regime.label()).unwrap_or(""),
            r.runtime_ms,
            fmt_opt(r.p_oracle),
            r.status,
        )?;
    }
    Ok(())
}
