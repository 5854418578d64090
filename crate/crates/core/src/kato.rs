//! Kato generator, transported intertwiner and the free transition kernel.
//!
//! All objects are real: the Hamiltonian family is real symmetric, so the
//! generator `K = Σ_j (∂P_j) P_j` is antisymmetric and the intertwiner
//! `W' = K W`, `W(0) = 1` is orthogonal.

use nalgebra::{Matrix2, Vector2};

use crate::error::{LabError, Result};
use crate::quadrature::hermite;
use crate::system::TwoLevelSystem;

/// `K(t) = Σ_j (∂_t P_j) P_j` from the analytic mixing-angle derivative.
pub fn kato_generator(sys: &TwoLevelSystem, t: f64) -> Matrix2<f64> {
    let (psi1, psi2) = TwoLevelSystem::eigenbasis(sys.theta(t));
    (psi2 * psi1.transpose() - psi1 * psi2.transpose()) * (0.5 * sys.theta_derivative(1, t))
}

/// Same generator with `∂_t P_j` from a 5-point central difference of step `h`.
pub fn kato_generator_fd(sys: &TwoLevelSystem, t: f64, h: f64) -> Matrix2<f64> {
    let p1 = |u: f64| {
        let (psi1, _) = TwoLevelSystem::eigenbasis(sys.theta(u));
        psi1 * psi1.transpose()
    };
    let dp1 = (p1(t - 2.0 * h) - p1(t - h) * 8.0 + p1(t + h) * 8.0 - p1(t + 2.0 * h)) / (12.0 * h);
    let p1t = p1(t);
    let p2t = Matrix2::identity() - p1t;
    dp1 * p1t - dp1 * p2t
}

/// Largest admissible step: resolves both the unit interval and the drive rate.
pub fn default_step(sys: &TwoLevelSystem) -> f64 {
    let rate = sys.max_theta_rate();
    let bound = if rate > 0.0 { 0.1 / rate } else { f64::INFINITY };
    (1.0 / 1024.0f64).min(bound)
}

#[derive(Debug, Clone, Copy)]
pub struct TransportOptions {
    /// Requested step; rounded down so an integer number of steps covers `[0, 1]`.
    pub step: f64,
    pub reunitarize: bool,
    pub unitarity_tol: f64,
    pub intertwine_tol: f64,
}

impl TransportOptions {
    pub fn for_system(sys: &TwoLevelSystem) -> Self {
        Self {
            step: default_step(sys),
            reunitarize: true,
            unitarity_tol: 1e-10,
            intertwine_tol: 1e-8,
        }
    }
}

/// Intertwiner `W(t)` on a uniform grid over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct KatoTransport {
    sys: TwoLevelSystem,
    h: f64,
    w: Vec<Matrix2<f64>>,
    dw: Vec<Matrix2<f64>>,
    unitarity_drift: f64,
    intertwining_residual: f64,
    psi1_0: Vector2<f64>,
    psi2_0: Vector2<f64>,
}

pub fn transport(sys: &TwoLevelSystem, opts: &TransportOptions) -> Result<KatoTransport> {
    if !(opts.step > 0.0) {
        return Err(LabError::InvalidParameter(format!("kato step {} must be positive", opts.step)));
    }
    let n = (1.0 / opts.step).ceil() as usize;
    let h = 1.0 / n as f64;
    let k = |t: f64| kato_generator(sys, t);

    let mut w = Vec::with_capacity(n + 1);
    let mut dw = Vec::with_capacity(n + 1);
    let mut cur = Matrix2::identity();
    w.push(cur);
    dw.push(k(0.0) * cur);
    for i in 0..n {
        let t = i as f64 * h;
        let k_mid = k(t + 0.5 * h);
        let k1 = k(t) * cur;
        let k2 = k_mid * (cur + k1 * (0.5 * h));
        let k3 = k_mid * (cur + k2 * (0.5 * h));
        let k4 = k(t + h) * (cur + k3 * h);
        cur += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if opts.reunitarize {
            cur = polar(&cur);
        }
        w.push(cur);
        dw.push(k(t + h) * cur);
    }

    let data0 = sys.spectral_data_unchecked(0.0);
    let mut unitarity = 0.0f64;
    let mut intertwining = 0.0f64;
    for (i, wi) in w.iter().enumerate() {
        let t = i as f64 * h;
        unitarity = unitarity.max((wi.transpose() * wi - Matrix2::identity()).norm());
        let p1 = sys.spectral_data_unchecked(t).p1;
        intertwining = intertwining.max((wi * data0.p1 - p1 * wi).norm());
    }
    if unitarity > opts.unitarity_tol || intertwining > opts.intertwine_tol {
        return Err(LabError::TransportDrift {
            unitarity,
            intertwining,
        });
    }
    Ok(KatoTransport {
        sys: sys.clone(),
        h,
        w,
        dw,
        unitarity_drift: unitarity,
        intertwining_residual: intertwining,
        psi1_0: data0.psi1,
        psi2_0: data0.psi2,
    })
}

// Nearest orthogonal matrix.
fn polar(m: &Matrix2<f64>) -> Matrix2<f64> {
    let svd = m.svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

impl KatoTransport {
    pub fn system(&self) -> &TwoLevelSystem {
        &self.sys
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.w.len()).map(|i| i as f64 * self.h).collect()
    }

    pub fn w_grid(&self) -> &[Matrix2<f64>] {
        &self.w
    }

    /// Largest `‖WᵀW - 1‖` over the grid.
    pub fn unitarity_drift(&self) -> f64 {
        self.unitarity_drift
    }

    /// Largest `‖W P1(0) - P1(t) W‖` over the grid (the `P2` residual is identical).
    pub fn intertwining_residual(&self) -> f64 {
        self.intertwining_residual
    }

    /// `W(t)` by cubic Hermite interpolation using `W' = K W` at the nodes.
    pub fn w(&self, t: f64) -> Matrix2<f64> {
        let t = t.clamp(0.0, 1.0);
        let n = self.w.len() - 1;
        let i = ((t / self.h) as usize).min(n - 1);
        let u = (t - i as f64 * self.h) / self.h;
        hermite(self.w[i], self.dw[i], self.w[i + 1], self.dw[i + 1], self.h, u)
    }

    pub fn generator(&self, t: f64) -> Matrix2<f64> {
        kato_generator(&self.sys, t)
    }

    /// `K̃21(t) ψ1(0)` with `K̃ = W* K W`, i.e. the transition vector whose Gram
    /// products define the two-time kernel.
    pub fn transition_vector(&self, t: f64) -> Vector2<f64> {
        let w = self.w(t);
        let kt = w.transpose() * self.generator(t) * w;
        self.psi2_0 * self.psi2_0.dot(&(kt * self.psi1_0))
    }

    /// `q12(s, τ) = ⟨ψ1| K̃21(τ)* K̃21(s) |ψ1⟩ / e21(τ)²`.
    pub fn q12(&self, s: f64, tau: f64) -> f64 {
        let e = self.sys.e21.eval(tau);
        self.transition_vector(tau).dot(&self.transition_vector(s)) / (e * e)
    }

    pub fn p_free(&self, eps: f64, t: f64) -> f64 {
        p_free(self, eps, t)
    }
}

/// `ε² q12(t, t)`.
pub fn p_free(kt: &KatoTransport, eps: f64, t: f64) -> f64 {
    eps * eps * kt.q12(t, t)
}
