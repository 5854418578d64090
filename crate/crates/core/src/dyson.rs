//! Transition probability: exact first Dyson term, leading-order prediction,
//! third-order magnitude and regime classification.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::kato::KatoTransport;
use crate::phases::PhaseKernels;
use crate::quadrature::{composite_nodes, pairwise_sum, pairwise_sum_complex, GaussLegendre};
use crate::reservoir::ReservoirModel;
use crate::system::TwoLevelSystem;

#[derive(Debug, Clone, Copy)]
pub struct DysonOptions {
    /// Extra panel subdivision beyond the oscillation-resolving width.
    pub refine: f64,
    /// Largest number of panels per axis before giving up.
    pub max_panels: usize,
}

impl Default for DysonOptions {
    fn default() -> Self {
        Self {
            refine: 1.0,
            max_panels: 2048,
        }
    }
}

// Panel partition of [0, t] that keeps the phase advance per panel ≤ π/4.
struct Triangle {
    edges: Vec<f64>,
    nodes: Vec<(f64, f64, usize)>,
    rule: GaussLegendre,
}

impl Triangle {
    fn new(kernels: &PhaseKernels, t: f64, opts: &DysonOptions) -> Result<Self> {
        let rate = phase_rate(kernels);
        let resolved = if rate > 0.0 { 0.25 * PI * kernels.eps / rate } else { t };
        let width = resolved.min(t) / opts.refine.max(1.0);
        let n = ((t / width).ceil() as usize).max(1);
        if n > opts.max_panels {
            return Err(LabError::UnresolvedOscillation {
                phase: rate * (t / opts.max_panels as f64) / kernels.eps,
            });
        }
        let edges: Vec<f64> = (0..=n).map(|i| t * i as f64 / n as f64).collect();
        let rule = GaussLegendre::new(8);
        let nodes = edges
            .windows(2)
            .enumerate()
            .flat_map(|(p, w)| rule.mapped(w[0], w[1]).map(move |(x, wt)| (x, wt, p)).collect::<Vec<_>>())
            .collect();
        Ok(Self { edges, nodes, rule })
    }

    // τ nodes for the row at global node `i`: whole panels below, then the partial panel.
    fn row_nodes(&self, i: usize) -> Vec<(f64, f64)> {
        let (s, _, p) = self.nodes[i];
        let mut out: Vec<(f64, f64)> = self.nodes.iter().take(8 * p).map(|&(x, w, _)| (x, w)).collect();
        out.extend(self.rule.mapped(self.edges[p], s));
        out
    }
}

// Upper bound on |d/ds| of the total phase (Bohr plus Lamb), per unit of 1/ε.
fn phase_rate(kernels: &PhaseKernels) -> f64 {
    let sys = kernels.system();
    let n = 1024;
    let mut e = 0.0f64;
    let mut b = 0.0f64;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        e = e.max(sys.e21.eval(t).abs());
        b = b.max(sys.b1.eval(t).powi(2) + sys.b2.eval(t).powi(2));
    }
    let beta0 = kernels.model().beta0().map(f64::abs).unwrap_or(0.0);
    e + kernels.lam * kernels.lam * beta0 * b
}

/// `‖ω⁽¹⁾(t)‖² = 2 Re ∫₀^t ds ∫₀^s dτ e^{-iφ12 + iζ12 - η12}(s,τ) e21(τ)² q12(s,τ)`.
pub fn dyson1_exact(kernels: &PhaseKernels, kt: &KatoTransport, t: f64) -> Result<f64> {
    dyson1_exact_with(kernels, kt, t, &DysonOptions::default())
}

pub fn dyson1_exact_with(kernels: &PhaseKernels, kt: &KatoTransport, t: f64, opts: &DysonOptions) -> Result<f64> {
    check_t(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let tri = Triangle::new(kernels, t, opts)?;
    let rows: Vec<Complex64> = (0..tri.nodes.len())
        .into_par_iter()
        .map(|i| {
            let (s, ws, _) = tri.nodes[i];
            let taus = tri.row_nodes(i);
            let tv: Vec<f64> = taus.iter().map(|&(x, _)| x).collect();
            let row = kernels.row(s, &tv);
            let ks = kt.transition_vector(s);
            let parts: Vec<Complex64> = taus
                .iter()
                .enumerate()
                .map(|(j, &(tau, w))| {
                    let gram = kt.transition_vector(tau).dot(&ks);
                    let phase = -kernels.phi12(s, tau) + row.zeta[j];
                    (Complex64::new(-row.eta[j].re, phase - row.eta[j].im)).exp() * (w * gram)
                })
                .collect();
            pairwise_sum_complex(&parts) * ws
        })
        .collect();
    Ok(2.0 * pairwise_sum_complex(&rows).re)
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(LabError::TimeOutOfRange(t));
    }
    Ok(())
}

/// `(p_free, p_correction)`: `ε² q12(t,t)` and
/// `(λ²/2ε) ∫₀^t ε² q12(s,s) b12(s)² γ̂^{(β)}(e12(s)) ds`.
pub fn leading_order(
    kt: &KatoTransport,
    model: &ReservoirModel,
    sys: &TwoLevelSystem,
    eps: f64,
    lam: f64,
    t: f64,
) -> Result<(f64, f64)> {
    check_t(t)?;
    let p_free = kt.p_free(eps, t);
    let b12 = sys.b12();
    let rule = GaussLegendre::new(8);
    let parts: Vec<f64> = composite_nodes(&rule, 0.0, t, 1.0 / 256.0)
        .into_iter()
        .map(|(s, w)| {
            let e12 = -sys.e21.eval(s);
            w * kt.q12(s, s) * b12.eval(s).powi(2) * model.spectral_density(e12)
        })
        .collect();
    let p_corr = lam * lam / (2.0 * eps) * eps * eps * pairwise_sum(&parts);
    Ok((p_free, p_corr))
}

/// `dyson1 - p_free - p_correction`.
pub fn theorem_residual(dyson1: f64, p_free: f64, p_correction: f64) -> f64 {
    dyson1 - p_free - p_correction
}

/// Magnitude of a scalar shadow of `ω⁽³⁾(t)`.
///
/// The operator recursion is reduced to scalars by replacing every Weyl
/// operator (and the one-time `½ Im⟨F1, F2⟩` phase) by 1, keeping the Bohr,
/// Lamb and `θ⁻` phases and the transition amplitudes `⟨ψ2|K̃21|ψ1⟩`:
///
/// `|∫₀^t ds ∫₀^s dτ e^{-i(φ12 - ζ12 + θ⁻12)(s,τ)} κ21(s) κ12(τ) a1(τ)|`,
/// `a1(τ) = -∫₀^τ e^{-i(φ12 - ζ12)(σ, 0)} κ21(σ) dσ`.
///
/// It is a diagnostic for the size of the third-order term, not a certified bound.
pub fn dyson3_magnitude(kernels: &PhaseKernels, kt: &KatoTransport, t: f64, opts: &DysonOptions) -> Result<f64> {
    check_t(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let tri = Triangle::new(kernels, t, opts)?;
    let total_nodes = tri.nodes.len();
    let cap = 8 * opts.max_panels;
    if total_nodes > cap {
        return Err(LabError::NodeBudget {
            needed: total_nodes,
            cap,
        });
    }
    let psi = kt.system().spectral_data(0.0)?;
    let kappa21 = |x: f64| psi.psi2.dot(&kt.transition_vector(x));
    let one_time = |x: f64| -> Complex64 {
        let ph = -kernels.phi12(x, 0.0) + kernels.lamb_phase(x);
        Complex64::from_polar(kappa21(x), ph)
    };
    // a1 at the global nodes by a cumulative sweep
    let mut a1_global = Vec::with_capacity(total_nodes);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut prev = 0.0;
    for &(x, _, _) in &tri.nodes {
        acc += tri.rule.integrate_complex(prev, x, one_time);
        a1_global.push(-acc);
        prev = x;
    }
    let rows: Vec<Complex64> = (0..total_nodes)
        .into_par_iter()
        .map(|i| {
            let (s, ws, p) = tri.nodes[i];
            let taus = tri.row_nodes(i);
            let tv: Vec<f64> = taus.iter().map(|&(x, _)| x).collect();
            let row = kernels.row(s, &tv);
            let ks = kappa21(s);
            let parts: Vec<Complex64> = taus
                .iter()
                .enumerate()
                .map(|(j, &(tau, w))| {
                    let a1 = if j < 8 * p {
                        a1_global[j]
                    } else {
                        let base = if p == 0 { Complex64::new(0.0, 0.0) } else { a1_global[8 * p - 1] };
                        let from = if p == 0 { 0.0 } else { tri.nodes[8 * p - 1].0 };
                        base - tri.rule.integrate_complex(from, tau, one_time)
                    };
                    let theta_minus = row.eta[j].im - row.f_cross_im[j];
                    let phase = -(kernels.phi12(s, tau) - row.zeta[j] + theta_minus);
                    // κ12(τ) = -κ21(τ)
                    Complex64::from_polar(1.0, phase) * a1 * (-w * ks * kappa21(tau))
                })
                .collect();
            pairwise_sum_complex(&parts) * ws
        })
        .collect();
    Ok(pairwise_sum_complex(&rows).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    NegligibleCoupling,
    Balanced,
    ReservoirAssisted,
    OutsideTheorem,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::NegligibleCoupling => "negligible-coupling",
            Regime::Balanced => "balanced",
            Regime::ReservoirAssisted => "reservoir-assisted",
            Regime::OutsideTheorem => "outside-theorem",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Numerical stand-ins for the asymptotic `≪` relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    /// `λ/√ε` below this is negligible coupling.
    pub lower: f64,
    /// `λ/√ε` above this leaves the balanced band.
    pub upper: f64,
    /// Reservoir-assisted needs `λ < window · ε^{max(1/4, (1-m1)/2)}`.
    pub window: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            lower: 0.3,
            upper: 3.0,
            window: 1.0,
        }
    }
}

pub fn classify_regime(eps: f64, lam: f64, m: f64, th: &RegimeThresholds) -> Regime {
    let r = lam / eps.sqrt();
    if r < th.lower {
        return Regime::NegligibleCoupling;
    }
    if r <= th.upper {
        return Regime::Balanced;
    }
    let m1 = m.min(1.0);
    let ceiling = th.window * eps.powf(0.25f64.max(0.5 * (1.0 - m1)));
    if lam < ceiling {
        Regime::ReservoirAssisted
    } else {
        Regime::OutsideTheorem
    }
}

/// `m1 = min(m, 1)` and the optimal exponent `α0 = 1/(2 + 2m - m1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorExponents {
    pub m1: f64,
    pub alpha0: f64,
}

impl ErrorExponents {
    pub fn new(m: f64) -> Self {
        let m1 = m.min(1.0);
        Self {
            m1,
            alpha0: 1.0 / (2.0 + 2.0 * m - m1),
        }
    }
}

/// Exponent `m` of the decay hypothesis the model satisfies: the form-factor
/// exponent at zero temperature, `μ - 1` at finite temperature.
pub fn effective_m(model: &ReservoirModel) -> f64 {
    if model.is_zero_temperature() {
        model.exponent
    } else {
        model.exponent - 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionReport {
    pub t: f64,
    pub eps: f64,
    pub lam: f64,
    pub beta: f64,
    pub m: f64,
    pub p_free: f64,
    pub p_correction: f64,
    pub p_dyson1: Option<f64>,
    pub omega3_norm: Option<f64>,
    pub residual: Option<f64>,
    pub regime: Regime,
    pub error_exponents: ErrorExponents,
}
