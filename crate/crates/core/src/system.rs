//! Driven two-level Hamiltonian and commuting coupling operator.
//!
//! The Hamiltonian is parametrised as
//! `H_S(t) = ē(t) 1 - (e21(t)/2) (cos θ(t) σ_z + sin θ(t) σ_x)` with the
//! mixing angle `θ(t) = θ_max s(t)` driven by a [`DriveProfile`]. The coupling
//! `B(t) = b1(t) P1(t) + b2(t) P2(t)` shares the eigenbasis, so the two always
//! commute. Level 1 is the `+1` eigenvector of `cos θ σ_z + sin θ σ_x`, hence
//! `P1 = diag(1, 0)` at `θ = 0` and `e1 = ē - e21/2`, `e2 = ē + e21/2`.

use nalgebra::{Matrix2, Vector2};

use crate::error::{LabError, Result};

/// Real polynomial in rescaled time, `c[0] + c[1] t + c[2] t^2 + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// `n`-th derivative at `t`.
    pub fn derivative(&self, n: usize, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(n)
            .rev()
            .fold(0.0, |acc, (k, &c)| {
                let falling: f64 = ((k - n + 1)..=k).map(|j| j as f64).product();
                acc * t + c * falling
            })
    }

    /// `∫_0^t p(u) du`.
    pub fn integral(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * t + c / (k as f64 + 1.0))
            * t
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn sub(&self, other: &Poly) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n)
            .map(|i| self.coeffs.get(i).copied().unwrap_or(0.0) - other.coeffs.get(i).copied().unwrap_or(0.0))
            .collect();
        Self::new(c)
    }

    /// Largest `|p^{(n)}|` over a uniform sample of `[0, 1]`.
    pub fn sup_abs(&self, n: usize, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| self.derivative(n, i as f64 / samples as f64).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// Polynomial smoothstep `I_x(k, k)` on `[t_flat, 1]`, zero before `t_flat`.
    Smoothstep { order: usize, t_flat: f64 },
    /// `s(t) = t`; violates the flat-start assumption.
    Linear,
}

/// Dimensionless schedule `s: [0, 1] -> [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveProfile {
    schedule: Schedule,
}

impl DriveProfile {
    pub fn linear() -> Self {
        Self { schedule: Schedule::Linear }
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    /// Number of continuous derivatives at the joints (∞ reported as `usize::MAX`).
    pub fn smoothness_order(&self) -> usize {
        match self.schedule {
            Schedule::Smoothstep { order, .. } => order - 1,
            Schedule::Linear => usize::MAX,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    /// `n`-th derivative of the schedule with respect to `t`.
    pub fn derivative(&self, n: usize, t: f64) -> f64 {
        match self.schedule {
            Schedule::Linear => match n {
                0 => t,
                1 => 1.0,
                _ => 0.0,
            },
            Schedule::Smoothstep { order, t_flat } => {
                let span = 1.0 - t_flat;
                let x = ((t - t_flat) / span).clamp(0.0, 1.0);
                if t <= t_flat {
                    return 0.0;
                }
                let scale = span.powi(-(n as i32));
                if n == 0 {
                    smoothstep(order, x)
                } else {
                    scale * bump_derivative(order, n - 1, x) * inverse_beta(order)
                }
            }
        }
    }
}

/// Polynomial smoothstep profile with `order - 1` vanishing derivatives at both ends.
pub fn make_smoothstep_profile(order: usize, t_flat: f64) -> Result<DriveProfile> {
    if order < 5 {
        return Err(LabError::InvalidParameter(format!(
            "smoothstep order {order} < 5 cannot give four vanishing derivatives"
        )));
    }
    if !(0.0..1.0).contains(&t_flat) {
        return Err(LabError::InvalidParameter(format!("t_flat = {t_flat} outside [0, 1)")));
    }
    Ok(DriveProfile {
        schedule: Schedule::Smoothstep { order, t_flat },
    })
}

// I_x(k, k) = x^k Σ_{j<k} C(k-1+j, j) (1-x)^j; every term is nonnegative on [0, 1].
fn smoothstep(k: usize, x: f64) -> f64 {
    let y = 1.0 - x;
    let mut binom = 1.0;
    let mut ypow = 1.0;
    let mut sum = 0.0;
    for j in 0..k {
        if j > 0 {
            binom *= (k - 1 + j) as f64 / j as f64;
            ypow *= y;
        }
        sum += binom * ypow;
    }
    x.powi(k as i32) * sum
}

fn inverse_beta(k: usize) -> f64 {
    // (2k-1)! / ((k-1)!)^2
    let mut v = 1.0;
    for j in 1..k {
        v *= (k - 1 + j) as f64 / j as f64;
    }
    v * (2 * k - 1) as f64
}

// r-th derivative of x^{k-1} (1-x)^{k-1} via Leibniz.
fn bump_derivative(k: usize, r: usize, x: f64) -> f64 {
    let a = k - 1;
    let mut sum = 0.0;
    let mut binom = 1.0;
    for i in 0..=r {
        if i > 0 {
            binom *= (r + 1 - i) as f64 / i as f64;
        }
        let j = r - i;
        if i > a || j > a {
            continue;
        }
        let fa: f64 = ((a - i + 1)..=a).map(|v| v as f64).product();
        let fb: f64 = ((a - j + 1)..=a).map(|v| v as f64).product();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += binom * fa * x.powi((a - i) as i32) * sign * fb * (1.0 - x).powi((a - j) as i32);
    }
    sum
}

/// Instantaneous spectral data of `H_S(t)` and `B(t)`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralData {
    pub e1: f64,
    pub e2: f64,
    pub b1: f64,
    pub b2: f64,
    pub p1: Matrix2<f64>,
    pub p2: Matrix2<f64>,
    pub psi1: Vector2<f64>,
    pub psi2: Vector2<f64>,
}

#[derive(Debug, Clone)]
pub struct TwoLevelSystem {
    pub e21: Poly,
    pub mean_energy: Poly,
    pub theta_max: f64,
    pub profile: DriveProfile,
    pub b1: Poly,
    pub b2: Poly,
    /// Gap floor δ the system claims to respect.
    pub delta: f64,
}

impl TwoLevelSystem {
    /// Reference drive: constant unit gap, `θ_max = π/3`, order-9 smoothstep
    /// after a short flat start, `b1 = 0`, `b2 = 1`. Level 1 is the ground state.
    pub fn reference() -> Self {
        Self {
            e21: Poly::constant(1.0),
            mean_energy: Poly::constant(0.0),
            theta_max: std::f64::consts::FRAC_PI_3,
            profile: DriveProfile {
                schedule: Schedule::Smoothstep {
                    order: 9,
                    t_flat: REFERENCE_T_FLAT,
                },
            },
            b1: Poly::constant(0.0),
            b2: Poly::constant(1.0),
            delta: 0.5,
        }
    }

    /// Same eigenvector curve and coupling with the energy order flipped, so
    /// the start state `ψ1(0)` becomes the excited level.
    pub fn relabeled(&self) -> Self {
        Self {
            e21: self.e21.scaled(-1.0),
            ..self.clone()
        }
    }

    /// Largest `|θ'|` on a uniform sample of `[0, 1]`.
    pub fn max_theta_rate(&self) -> f64 {
        let n = 4096;
        (0..=n)
            .map(|i| self.theta_derivative(1, i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.theta_max * self.profile.value(t)
    }

    pub fn theta_derivative(&self, n: usize, t: f64) -> f64 {
        self.theta_max * self.profile.derivative(n, t)
    }

    pub fn e1(&self, t: f64) -> f64 {
        self.mean_energy.eval(t) - 0.5 * self.e21.eval(t)
    }

    pub fn e2(&self, t: f64) -> f64 {
        self.mean_energy.eval(t) + 0.5 * self.e21.eval(t)
    }

    pub fn b12(&self) -> Poly {
        self.b1.sub(&self.b2)
    }

    /// Eigenbasis `(ψ1, ψ2)` at mixing angle `θ`. The real rotation-by-θ/2
    /// family has `⟨ψ_j, ∂_t ψ_j⟩ = 0`, i.e. it is the parallel-transported gauge.
    pub fn eigenbasis(theta: f64) -> (Vector2<f64>, Vector2<f64>) {
        let (s, c) = (0.5 * theta).sin_cos();
        (Vector2::new(c, s), Vector2::new(-s, c))
    }

    pub fn spectral_data(&self, t: f64) -> Result<SpectralData> {
        if !(0.0..=1.0).contains(&t) {
            return Err(LabError::TimeOutOfRange(t));
        }
        Ok(self.spectral_data_unchecked(t))
    }

    pub(crate) fn spectral_data_unchecked(&self, t: f64) -> SpectralData {
        let (psi1, psi2) = Self::eigenbasis(self.theta(t));
        SpectralData {
            e1: self.e1(t),
            e2: self.e2(t),
            b1: self.b1.eval(t),
            b2: self.b2.eval(t),
            p1: psi1 * psi1.transpose(),
            p2: psi2 * psi2.transpose(),
            psi1,
            psi2,
        }
    }

    pub fn hamiltonian(&self, t: f64) -> Matrix2<f64> {
        let d = self.spectral_data_unchecked(t);
        d.p1 * d.e1 + d.p2 * d.e2
    }

    pub fn coupling(&self, t: f64) -> Matrix2<f64> {
        let d = self.spectral_data_unchecked(t);
        d.p1 * d.b1 + d.p2 * d.b2
    }

    /// `∂_t P1(t)` from the analytic mixing-angle derivative (`∂_t P2 = -∂_t P1`).
    pub fn projector_derivative(&self, t: f64) -> Matrix2<f64> {
        let (psi1, psi2) = Self::eigenbasis(self.theta(t));
        (psi2 * psi1.transpose() + psi1 * psi2.transpose()) * (0.5 * self.theta_derivative(1, t))
    }

    pub fn check_assumptions(&self, tol: f64) -> AssumptionReport {
        self.check_assumptions_with(tol, DEFAULT_GAP_SAMPLES, DEFAULT_FD_STEP)
    }

    pub fn check_assumptions_with(&self, tol: f64, gap_samples: usize, fd_step: f64) -> AssumptionReport {
        AssumptionReport {
            gap: self.certify_gap(gap_samples),
            smoothness: self.smoothness_check(),
            flat_start: self.flat_start_check(tol, fd_step),
        }
    }

    fn certify_gap(&self, samples: usize) -> GapCheck {
        let n = samples.max(2);
        let h = 1.0 / (n - 1) as f64;
        let (mut min_gap, mut witness) = (f64::INFINITY, 0.0);
        for i in 0..n {
            let t = i as f64 * h;
            let g = self.e21.eval(t).abs();
            if g < min_gap {
                min_gap = g;
                witness = t;
            }
        }
        let slope = self.e21.sup_abs(1, 4 * n);
        let floor = min_gap - GAP_INFLATION * slope * 0.5 * h;
        GapCheck {
            passed: self.delta > 0.0 && floor >= self.delta,
            min_sampled: min_gap,
            certified_floor: floor,
            delta: self.delta,
            witness_t: witness,
        }
    }

    fn smoothness_check(&self) -> SmoothnessCheck {
        let order = self.profile.smoothness_order();
        SmoothnessCheck {
            passed: order >= 4,
            continuous_derivatives: order,
        }
    }

    fn flat_start_check(&self, tol: f64, h: f64) -> FlatStartCheck {
        let p1 = |t: f64| {
            let (psi1, _) = Self::eigenbasis(self.theta(t));
            psi1 * psi1.transpose()
        };
        let mut worst = 0.0f64;
        let mut witness_t = 0.0;
        let mut witness_order = 0;
        let mut failing = Vec::new();
        for n in 1..=4usize {
            let mut order_worst = 0.0f64;
            for j in 2..=6 {
                let t = j as f64 * h;
                let f: Vec<Matrix2<f64>> = (-2..=2).map(|k| p1(t + k as f64 * h)).collect();
                let d = match n {
                    1 => (f[0] - f[1] * 8.0 + f[3] * 8.0 - f[4]) / (12.0 * h),
                    2 => (-f[0] + f[1] * 16.0 - f[2] * 30.0 + f[3] * 16.0 - f[4]) / (12.0 * h * h),
                    3 => (-f[0] + f[1] * 2.0 - f[3] * 2.0 + f[4]) / (2.0 * h.powi(3)),
                    _ => (f[0] - f[1] * 4.0 + f[2] * 6.0 - f[3] * 4.0 + f[4]) / h.powi(4),
                };
                let v = d.norm();
                order_worst = order_worst.max(v);
                if v > worst {
                    worst = v;
                    witness_t = t;
                    witness_order = n;
                }
            }
            if order_worst > tol {
                failing.push(n);
            }
        }
        FlatStartCheck {
            passed: failing.is_empty(),
            worst_violation: worst,
            witness_t,
            witness_order,
            failing_orders: failing,
            tol,
        }
    }
}

pub const DEFAULT_GAP_SAMPLES: usize = 2048;
pub const DEFAULT_FD_STEP: f64 = 1e-3;
pub const DEFAULT_ASSUMPTION_TOL: f64 = 1e-6;
const GAP_INFLATION: f64 = 1.5;
/// Flat start of the reference drive; longer than the reach of the flat-start stencil.
pub const REFERENCE_T_FLAT: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct GapCheck {
    pub passed: bool,
    pub min_sampled: f64,
    pub certified_floor: f64,
    pub delta: f64,
    pub witness_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessCheck {
    pub passed: bool,
    pub continuous_derivatives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatStartCheck {
    pub passed: bool,
    pub worst_violation: f64,
    pub witness_t: f64,
    pub witness_order: usize,
    pub failing_orders: Vec<usize>,
    pub tol: f64,
}

/// Outcome of the gap, smoothness and flat-start checks.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub gap: GapCheck,
    pub smoothness: SmoothnessCheck,
    pub flat_start: FlatStartCheck,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.gap.passed && self.smoothness.passed && self.flat_start.passed
    }

    /// Names of the violated assumptions.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.gap.passed {
            v.push("A.1 gap");
        }
        if !self.smoothness.passed {
            v.push("A.2 smoothness");
        }
        if !self.flat_start.passed {
            v.push("A.3 flat start");
        }
        v
    }
}

impl std::fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = |p: bool| if p { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "[{}] A.1 gap: min |e21| = {:.6e}, certified floor {:.6e} vs delta {:.6e} (witness t = {:.6})",
            mark(self.gap.passed),
            self.gap.min_sampled,
            self.gap.certified_floor,
            self.gap.delta,
            self.gap.witness_t
        )?;
        let smooth = if self.smoothness.continuous_derivatives == usize::MAX {
            "C^inf".to_string()
        } else {
            format!("C^{}", self.smoothness.continuous_derivatives)
        };
        writeln!(f, "[{}] A.2 smoothness: schedule is {}", mark(self.smoothness.passed), smooth)?;
        write!(
            f,
            "[{}] A.3 flat start: worst |d^n P/dt^n| = {:.3e} at t = {:.4} (n = {}), tol {:.1e}",
            mark(self.flat_start.passed),
            self.flat_start.worst_violation,
            self.flat_start.witness_t,
            self.flat_start.witness_order,
            self.flat_start.tol
        )?;
        if !self.flat_start.failing_orders.is_empty() {
            write!(f, "; failing orders {:?}", self.flat_start.failing_orders)?;
        }
        Ok(())
    }
}
