//! Flat `section.key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Polynomials are comma-separated
//! coefficients in ascending powers of `t`. Unknown keys are errors.

use crate::dyson::{DysonOptions, RegimeThresholds};
use crate::error::{LabError, Result};
use crate::oracle::OracleConfig;
use crate::reservoir::{Dispersion, ReservoirModel};
use crate::scan::{LamRule, Routes, ScanSpec};
use crate::system::{make_smoothstep_profile, Poly, TwoLevelSystem, REFERENCE_T_FLAT};

/// Shipped reference configuration, the defaults of every key.
pub const REFERENCE_CONFIG: &str = include_str!("../reference.conf");

#[derive(Debug, Clone)]
pub struct Config {
    pub system: TwoLevelSystem,
    pub reservoir: ReservoirModel,
    /// Decay exponent the A.4 check targets; `None` uses the model's own.
    pub m_target: Option<f64>,
    pub kato_step: Option<f64>,
    pub oracle: OracleConfig,
    pub dyson: DysonOptions,
    pub regime: RegimeThresholds,
    pub point: Point,
    pub scan: ScanSpec,
}

/// Single evaluation point for the `dyson1` and `oracle` subcommands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub eps: f64,
    pub lam: f64,
    pub t: f64,
}

impl Config {
    pub fn reference() -> Self {
        Self::parse(REFERENCE_CONFIG).expect("shipped reference config parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Raw::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected `section.key = value`", n + 1)))?;
            raw.set(key.trim(), value.trim()).map_err(|e| cfg_err(format!("line {}: {e}", n + 1)))?;
        }
        raw.build()
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

fn cfg_err(msg: String) -> LabError {
    LabError::Config(msg)
}

#[derive(Default)]
struct Raw {
    e21: Option<Poly>,
    mean_energy: Option<Poly>,
    theta_max: Option<f64>,
    order: Option<usize>,
    t_flat: Option<f64>,
    b1: Option<Poly>,
    b2: Option<Poly>,
    delta: Option<f64>,
    kato_step: Option<f64>,
    g0: Option<f64>,
    exponent: Option<f64>,
    omega_d: Option<f64>,
    beta: Option<f64>,
    dispersion: Option<String>,
    mass: Option<f64>,
    m_target: Option<f64>,
    n_modes: Option<usize>,
    omega_max: Option<f64>,
    n_excitations: Option<usize>,
    dt: Option<Option<f64>>,
    refine: Option<f64>,
    max_panels: Option<usize>,
    lower: Option<f64>,
    upper: Option<f64>,
    window: Option<f64>,
    point_eps: Option<f64>,
    point_lam: Option<f64>,
    point_t: Option<f64>,
    scan_eps: Option<Vec<f64>>,
    scan_lam: Option<Vec<f64>>,
    lam_coeff: Option<f64>,
    lam_power: Option<f64>,
    scan_m: Option<Vec<f64>>,
    scan_beta: Option<Vec<f64>>,
    scan_t: Option<f64>,
    routes: Option<Routes>,
    output: Option<String>,
}

fn num(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"))
}

fn int(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>().map_err(|_| format!("`{v}` is not a non-negative integer"))
}

fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(|x| num(x.trim())).collect()
}

impl Raw {
    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "system.e21" => self.e21 = Some(Poly::new(list(v)?)),
            "system.mean_energy" => self.mean_energy = Some(Poly::new(list(v)?)),
            "system.theta_max" => self.theta_max = Some(num(v)?),
            "system.profile_order" => self.order = Some(int(v)?),
            "system.t_flat" => self.t_flat = Some(num(v)?),
            "system.b1" => self.b1 = Some(Poly::new(list(v)?)),
            "system.b2" => self.b2 = Some(Poly::new(list(v)?)),
            "system.delta" => self.delta = Some(num(v)?),
            "kato.step" => self.kato_step = if v == "auto" { None } else { Some(num(v)?) },
            "reservoir.g0" => self.g0 = Some(num(v)?),
            "reservoir.exponent" => self.exponent = Some(num(v)?),
            "reservoir.omega_D" => self.omega_d = Some(num(v)?),
            "reservoir.beta" => self.beta = Some(num(v)?),
            "reservoir.dispersion" => self.dispersion = Some(v.to_string()),
            "reservoir.mass" => self.mass = Some(num(v)?),
            "reservoir.m" => self.m_target = Some(num(v)?),
            "oracle.n_modes" => self.n_modes = Some(int(v)?),
            "oracle.omega_max" => self.omega_max = Some(num(v)?),
            "oracle.n_excitations" => self.n_excitations = Some(int(v)?),
            "oracle.dt" => self.dt = Some(if v == "auto" { None } else { Some(num(v)?) }),
            "dyson.refine" => self.refine = Some(num(v)?),
            "dyson.max_panels" => self.max_panels = Some(int(v)?),
            "regime.lower" => self.lower = Some(num(v)?),
            "regime.upper" => self.upper = Some(num(v)?),
            "regime.window" => self.window = Some(num(v)?),
            "point.eps" => self.point_eps = Some(num(v)?),
            "point.lam" => self.point_lam = Some(num(v)?),
            "point.t" => self.point_t = Some(num(v)?),
            "scan.eps" => self.scan_eps = Some(list(v)?),
            "scan.lam" => self.scan_lam = Some(list(v)?),
            "scan.lam_coeff" => self.lam_coeff = Some(num(v)?),
            "scan.lam_power" => self.lam_power = Some(num(v)?),
            "scan.m" => self.scan_m = Some(list(v)?),
            "scan.beta" => self.scan_beta = Some(list(v)?),
            "scan.t" => self.scan_t = Some(num(v)?),
            "scan.routes" => self.routes = Some(Routes::parse(v)?),
            "scan.output" => self.output = Some(v.to_string()),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn build(self) -> Result<Config> {
        let reference = TwoLevelSystem::reference();
        let profile = make_smoothstep_profile(self.order.unwrap_or(9), self.t_flat.unwrap_or(REFERENCE_T_FLAT))
            .map_err(|e| cfg_err(e.to_string()))?;
        let system = TwoLevelSystem {
            e21: self.e21.unwrap_or(reference.e21),
            mean_energy: self.mean_energy.unwrap_or(reference.mean_energy),
            theta_max: self.theta_max.unwrap_or(reference.theta_max),
            profile,
            b1: self.b1.unwrap_or(reference.b1),
            b2: self.b2.unwrap_or(reference.b2),
            delta: self.delta.unwrap_or(reference.delta),
        };
        let dispersion = match self.dispersion.as_deref().unwrap_or("photonic") {
            "photonic" => Dispersion::Photonic,
            "massive" => Dispersion::Massive {
                mass: self
                    .mass
                    .ok_or_else(|| cfg_err("massive dispersion needs reservoir.mass".into()))?,
            },
            other => return Err(cfg_err(format!("unknown dispersion `{other}`"))),
        };
        let reservoir = ReservoirModel::new(
            self.g0.unwrap_or(1.0),
            self.exponent.unwrap_or(2.0),
            self.omega_d.unwrap_or(1.0),
            self.beta.unwrap_or(f64::INFINITY),
            dispersion,
        )
        .map_err(|e| cfg_err(e.to_string()))?;
        let od = OracleConfig::default();
        let oracle = OracleConfig {
            n_modes: self.n_modes.unwrap_or(od.n_modes),
            omega_max: self.omega_max.unwrap_or(od.omega_max),
            n_excitations: self.n_excitations.unwrap_or(od.n_excitations),
            dt_phys: self.dt.unwrap_or(od.dt_phys),
            ..od
        };
        let dd = DysonOptions::default();
        let dyson = DysonOptions {
            refine: self.refine.unwrap_or(dd.refine),
            max_panels: self.max_panels.unwrap_or(dd.max_panels),
        };
        let rd = RegimeThresholds::default();
        let regime = RegimeThresholds {
            lower: self.lower.unwrap_or(rd.lower),
            upper: self.upper.unwrap_or(rd.upper),
            window: self.window.unwrap_or(rd.window),
        };
        let point = Point {
            eps: self.point_eps.unwrap_or(0.1),
            lam: self.point_lam.unwrap_or(0.1),
            t: self.point_t.unwrap_or(1.0),
        };
        let lam_rule = match (self.scan_lam, self.lam_coeff, self.lam_power) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(cfg_err("give either scan.lam or scan.lam_coeff/scan.lam_power, not both".into()))
            }
            (Some(l), None, None) => LamRule::List(l),
            (None, c, p) => LamRule::Power {
                coeff: c.unwrap_or(1.0),
                power: p.unwrap_or(0.5),
            },
        };
        let scan = ScanSpec {
            eps_list: self.scan_eps.unwrap_or_else(|| vec![0.2, 0.1, 0.05]),
            lam_rule,
            m_list: self.scan_m.unwrap_or_else(|| vec![reservoir.exponent]),
            beta_list: self.scan_beta.unwrap_or_else(|| vec![reservoir.beta]),
            t_final: self.scan_t.unwrap_or(1.0),
            routes: self.routes.unwrap_or_default(),
            output_path: self.output,
        };
        scan.validate().map_err(|e| cfg_err(e.to_string()))?;
        Ok(Config {
            system,
            reservoir,
            m_target: self.m_target,
            kato_step: self.kato_step,
            oracle,
            dyson,
            regime,
            point,
            scan,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omitted_keys_fall_back_to_the_reference() {
        // Config has no PartialEq; Debug covers every field
        assert_eq!(format!("{:?}", Config::parse("").unwrap()), format!("{:?}", Config::reference()));
    }

    #[test]
    fn reference_config_is_the_reference_system() {
        let c = Config::reference();
        let r = TwoLevelSystem::reference();
        assert_eq!(c.system.e21, r.e21);
        assert_eq!(c.system.theta_max, r.theta_max);
        assert_eq!(c.system.profile, r.profile);
        assert!(c.reservoir.is_zero_temperature());
        assert_eq!(c.reservoir.exponent, 2.0);
        assert_eq!(c.scan.eps_list, vec![0.2, 0.1, 0.05]);
    }

    #[test]
    fn comments_lists_and_infinity() {
        let c = Config::parse("# x\nsystem.e21 = 1, 0.5  # linear gap\nreservoir.beta = inf\nscan.lam = 0, 0.1\n").unwrap();
        assert_eq!(c.system.e21.coeffs(), &[1.0, 0.5]);
        assert!(c.reservoir.beta.is_infinite());
        assert_eq!(c.scan.lam_rule, LamRule::List(vec![0.0, 0.1]));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "system.nope = 1",
            "system.theta_max 1",
            "reservoir.g0 = abc",
            "scan.eps = 1.5",
            "scan.eps = 0.1\nscan.lam = 0.1\nscan.lam_power = 1",
            "reservoir.dispersion = massive",
            "reservoir.beta = 2\nreservoir.exponent = 0.5",
        ] {
            assert!(matches!(Config::parse(text), Err(LabError::Config(_))), "{text}");
        }
    }
}
