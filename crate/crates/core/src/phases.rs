//! Two-time phase and damping kernels of the first Dyson term.
//!
//! Every kernel is a double integral of `b(u) b(v) γ((u-v)/ε)` over a rectangle
//! or triangle in `[0, 1]²`. Substituting `x = (u-v)/ε` and expanding the
//! (polynomial) coupling weight around `u` turns each inner `v`-integral into a
//! finite combination of moments `M_k(X) = ∫₀^X x^k γ(x) dx`, tabulated once per
//! `ε`. The outer integral is then one-dimensional.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::quadrature::{hermite, pairwise_sum, pairwise_sum_complex, GaussLegendre};
use crate::reservoir::{Dispersion, ReservoirModel};
use crate::system::{Poly, TwoLevelSystem};

const MOMENT_CELLS_PER_UNIT: f64 = 256.0;

/// Cumulative table of `M_k(X)`, `0 ≤ X ≤ x_max`, `k = 0..=k_max`.
#[derive(Debug, Clone)]
pub struct MomentTable {
    h: f64,
    x_max: f64,
    k_max: usize,
    gamma: Vec<Complex64>,
    moments: Vec<Vec<Complex64>>,
}

impl MomentTable {
    pub fn build(model: &ReservoirModel, x_max: f64, k_max: usize) -> Result<Self> {
        if model.dispersion != Dispersion::Photonic {
            return Err(LabError::RequiresPhotonic);
        }
        use rayon::prelude::*;
        let h = 1.0 / (MOMENT_CELLS_PER_UNIT * model.omega_d.max(1.0));
        let n = (x_max / h).ceil() as usize + 1;
        let rule = GaussLegendre::new(8);
        let cells: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                let vals: Vec<(f64, f64, Complex64)> = rule
                    .mapped(a, b)
                    .map(|(x, w)| (x, w, model.gamma(x).expect("photonic γ")))
                    .collect();
                (0..=k_max)
                    .map(|k| {
                        let parts: Vec<Complex64> = vals.iter().map(|&(x, w, g)| g * (w * x.powi(k as i32))).collect();
                        pairwise_sum_complex(&parts)
                    })
                    .collect()
            })
            .collect();
        let gamma: Vec<Complex64> = (0..=n)
            .into_par_iter()
            .map(|i| model.gamma(i as f64 * h).expect("photonic γ"))
            .collect();
        let mut moments = vec![vec![Complex64::new(0.0, 0.0); n + 1]; k_max + 1];
        for (k, col) in moments.iter_mut().enumerate() {
            for i in 0..n {
                col[i + 1] = col[i] + cells[i][k];
            }
        }
        Ok(Self {
            h,
            x_max: n as f64 * h,
            k_max,
            gamma,
            moments,
        })
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `M_k(X)` for `|X| ≤ x_max`, using `M_k(-X) = (-1)^{k+1} conj M_k(X)`.
    pub fn moment(&self, k: usize, x: f64) -> Result<Complex64> {
        if x.abs() > self.x_max {
            return Err(LabError::MomentTableRange {
                max: self.x_max,
                requested: x.abs(),
            });
        }
        Ok(self.moment_unchecked(k, x))
    }

    fn moment_unchecked(&self, k: usize, x: f64) -> Complex64 {
        let a = x.abs().min(self.x_max);
        let n = self.gamma.len() - 1;
        let i = ((a / self.h) as usize).min(n - 1);
        let (x0, x1) = (i as f64 * self.h, (i + 1) as f64 * self.h);
        let d0 = self.gamma[i] * x0.powi(k as i32);
        let d1 = self.gamma[i + 1] * x1.powi(k as i32);
        let v = hermite(self.moments[k][i], d0, self.moments[k][i + 1], d1, self.h, (a - x0) / self.h);
        if x >= 0.0 {
            v
        } else if k % 2 == 1 {
            v.conj()
        } else {
            -v.conj()
        }
    }
}

/// Cumulative single-variable integrals `∫_0^x f` sampled on a uniform grid,
/// completed between grid points by an 8-point rule on the remainder.
#[derive(Debug, Clone)]
struct Cumulative {
    h: f64,
    vals: Vec<[f64; 3]>,
}

/// Phase and damping kernels for one `(ε, λ)` pair.
#[derive(Debug, Clone)]
pub struct PhaseKernels {
    pub eps: f64,
    pub lam: f64,
    sys: TwoLevelSystem,
    model: ReservoirModel,
    b1: Poly,
    b2: Poly,
    b12: Poly,
    table: MomentTable,
    rule: GaussLegendre,
    global: Cumulative,
}

/// Kernels along one row `s` of the triangle, at ascending `τ ≤ s`.
#[derive(Debug, Clone)]
pub struct RowKernels {
    pub eta: Vec<Complex64>,
    pub zeta: Vec<f64>,
    /// `Im ⟨F12(s), F12(τ)⟩`, the piece separating `θ⁻` from `θ⁺`.
    pub f_cross_im: Vec<f64>,
}

// Inner integrals at one outer node for the three coupling weights.
#[derive(Debug, Clone, Copy)]
struct Inner {
    b12: Complex64,
    b1: Complex64,
    b2: Complex64,
}

impl PhaseKernels {
    pub fn new(model: &ReservoirModel, sys: &TwoLevelSystem, eps: f64, lam: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(LabError::InvalidParameter(format!("eps = {eps} outside (0, 1)")));
        }
        if !(lam >= 0.0 && lam.is_finite()) {
            return Err(LabError::InvalidParameter(format!("lambda = {lam} must be >= 0")));
        }
        let k_max = sys.b1.degree().max(sys.b2.degree());
        let table = MomentTable::build(model, 1.0 / eps, k_max)?;
        let mut k = Self {
            eps,
            lam,
            sys: sys.clone(),
            model: *model,
            b1: sys.b1.clone(),
            b2: sys.b2.clone(),
            b12: sys.b12(),
            table,
            rule: GaussLegendre::new(8),
            global: Cumulative { h: 1.0, vals: Vec::new() },
        };
        k.global = k.build_global();
        Ok(k)
    }

    pub fn system(&self) -> &TwoLevelSystem {
        &self.sys
    }

    pub fn model(&self) -> &ReservoirModel {
        &self.model
    }

    pub fn moment_table(&self) -> &MomentTable {
        &self.table
    }

    fn outer_width(&self) -> f64 {
        (0.25 * self.eps).min(1.0 / 256.0)
    }

    fn prefactor(&self) -> f64 {
        self.lam * self.lam / (2.0 * self.eps * self.eps)
    }

    // ∫_a^c b(v) γ((u-v)/ε) dv for b ∈ {b12, b1, b2}
    fn inner(&self, u: f64, a: f64, c: f64) -> Inner {
        let eps = self.eps;
        let (xa, xc) = ((u - a) / eps, (u - c) / eps);
        let mut out = Inner {
            b12: Complex64::new(0.0, 0.0),
            b1: Complex64::new(0.0, 0.0),
            b2: Complex64::new(0.0, 0.0),
        };
        let mut scale = eps;
        for k in 0..=self.table.k_max {
            if k > 0 {
                scale *= -eps / k as f64;
            }
            let dm = self.table.moment_unchecked(k, xa) - self.table.moment_unchecked(k, xc);
            out.b1 += dm * (scale * self.b1.derivative(k, u));
            out.b2 += dm * (scale * self.b2.derivative(k, u));
        }
        out.b12 = out.b1 - out.b2;
        out
    }

    /// `(Q', S', Z')` where
    /// `Q(x) = ∫_0^x∫_0^x b12 b12 γ_R`, `S(x) = ∫_0^x∫_0^x b12(v) b2(u) γ_I((u-v)/ε)`,
    /// and `Z` is the one-time Lamb phase with `ζ12(s,τ) = Z(s) - Z(τ)`.
    fn global_rates(&self, x: f64) -> [f64; 3] {
        let i = self.inner(x, 0.0, x);
        let (b1, b2, b12) = (self.b1.eval(x), self.b2.eval(x), self.b12.eval(x));
        [
            2.0 * b12 * i.b12.re,
            b2 * i.b12.im - b12 * i.b2.im,
            -self.prefactor() * (b1 * i.b1.im - b2 * i.b2.im),
        ]
    }

    fn build_global(&self) -> Cumulative {
        use rayon::prelude::*;
        let h = (self.eps / 8.0).min(1.0 / 256.0);
        let n = (1.0 / h).ceil() as usize;
        let h = 1.0 / n as f64;
        let cells: Vec<[f64; 3]> = (0..n)
            .into_par_iter()
            .map(|i| self.integrate3(i as f64 * h, (i + 1) as f64 * h))
            .collect();
        let mut vals = vec![[0.0; 3]; n + 1];
        for i in 0..n {
            for c in 0..3 {
                vals[i + 1][c] = vals[i][c] + cells[i][c];
            }
        }
        Cumulative { h, vals }
    }

    fn integrate3(&self, a: f64, b: f64) -> [f64; 3] {
        let mut acc = [[0.0; 8]; 3];
        for (j, (x, w)) in self.rule.mapped(a, b).enumerate() {
            let r = self.global_rates(x);
            for c in 0..3 {
                acc[c][j] = w * r[c];
            }
        }
        [pairwise_sum(&acc[0]), pairwise_sum(&acc[1]), pairwise_sum(&acc[2])]
    }

    fn global_at(&self, x: f64) -> [f64; 3] {
        let g = &self.global;
        let n = g.vals.len() - 1;
        let i = ((x / g.h) as usize).min(n);
        let x0 = i as f64 * g.h;
        let mut v = g.vals[i];
        if x > x0 {
            let extra = self.integrate3(x0, x);
            for c in 0..3 {
                v[c] += extra[c];
            }
        }
        v
    }

    /// One-time Lamb phase `ζ12(x) = ζ12(x, 0)`.
    pub fn lamb_phase(&self, x: f64) -> f64 {
        self.global_at(x)[2]
    }

    /// `φ12(s, τ) = (1/ε) ∫_τ^s (e1 - e2)`.
    pub fn phi12(&self, s: f64, tau: f64) -> f64 {
        phi12(&self.sys, self.eps, s, tau)
    }

    fn check_times(&self, s: f64, tau: f64) -> Result<()> {
        for t in [s, tau] {
            if !(0.0..=1.0).contains(&t) {
                return Err(LabError::TimeOutOfRange(t));
            }
        }
        Ok(())
    }

    fn outer_nodes(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        crate::quadrature::composite_nodes(&self.rule, a, b, self.outer_width())
    }

    /// Complex damping `η12(s, τ) = ¼‖F12(s,τ)‖² + i θ⁺12(s, τ)`.
    pub fn eta12(&self, s: f64, tau: f64) -> Result<Complex64> {
        self.check_times(s, tau)?;
        if s == tau {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if s < tau {
            return Ok(self.eta12(tau, s)?.conj());
        }
        let parts: Vec<Complex64> = self
            .outer_nodes(tau, s)
            .into_iter()
            .map(|(u, w)| {
                let rect = self.inner(u, tau, s);
                let upper = self.inner(u, 0.0, s);
                let lower = self.inner(u, 0.0, tau);
                let v = Complex64::new(
                    0.5 * self.b12.eval(u) * rect.b12.re,
                    self.b12.eval(u) * upper.b1.im - self.b2.eval(u) * lower.b12.im,
                );
                v * w
            })
            .collect();
        Ok(pairwise_sum_complex(&parts) * self.prefactor())
    }

    /// Lamb-type phase `ζ12(s, τ)`.
    pub fn zeta12(&self, s: f64, tau: f64) -> Result<f64> {
        self.check_times(s, tau)?;
        if s == tau {
            return Ok(0.0);
        }
        if s < tau {
            return Ok(-self.zeta12(tau, s)?);
        }
        let parts: Vec<f64> = self
            .outer_nodes(tau, s)
            .into_iter()
            .map(|(u, w)| {
                let i = self.inner(u, 0.0, u);
                w * (self.b1.eval(u) * i.b1.im - self.b2.eval(u) * i.b2.im)
            })
            .collect();
        Ok(-self.prefactor() * pairwise_sum(&parts))
    }

    /// `‖F12(s, τ)‖² = (λ²/ε²) ∫_τ^s ∫_τ^s b12(u) b12(v) γ((u-v)/ε)`, real by symmetry.
    pub fn f12_norm2(&self, s: f64, tau: f64) -> Result<f64> {
        self.check_times(s, tau)?;
        let (hi, lo) = if s >= tau { (s, tau) } else { (tau, s) };
        if hi == lo {
            return Ok(0.0);
        }
        let parts: Vec<f64> = self
            .outer_nodes(lo, hi)
            .into_iter()
            .map(|(u, w)| w * self.b12.eval(u) * self.inner(u, lo, hi).b12.re)
            .collect();
        Ok((2.0 * self.prefactor() * pairwise_sum(&parts)).max(0.0))
    }

    /// `θ⁺12(s, τ) = Im η12(s, τ)`.
    pub fn theta_plus(&self, s: f64, tau: f64) -> Result<f64> {
        Ok(self.eta12(s, tau)?.im)
    }

    /// `θ⁻12(s, τ) = θ⁺12(s, τ) - Im ⟨F12(s), F12(τ)⟩`.
    pub fn theta_minus(&self, s: f64, tau: f64) -> Result<f64> {
        self.check_times(s, tau)?;
        let cross: Vec<f64> = self
            .outer_nodes(0.0, s)
            .into_iter()
            .map(|(u, w)| w * self.b12.eval(u) * self.inner(u, 0.0, tau).b12.im)
            .collect();
        let f_cross = 2.0 * self.prefactor() * pairwise_sum(&cross);
        Ok(self.theta_plus(s, tau)? - f_cross)
    }

    /// Kernels at `(s, τ_j)` for ascending `τ_j ∈ [0, s]` in one sweep.
    ///
    /// Each kernel is split into a row-dependent cumulative integral over
    /// `[0, τ]` and single-variable functions of `s` and `τ`, so the cost is
    /// linear in the number of `τ` nodes instead of one quadrature per pair.
    pub fn row(&self, s: f64, taus: &[f64]) -> RowKernels {
        debug_assert!(taus.windows(2).all(|w| w[0] <= w[1]));
        let n = taus.len();
        // cumulative [R, T3a, C2, FX] at each τ, and the C2 total at s
        let mut cum = Vec::with_capacity(n);
        let mut acc = [0.0f64; 4];
        let mut prev = 0.0;
        let width = self.outer_width();
        let segment = |a: f64, b: f64, acc: &mut [f64; 4]| {
            if b <= a {
                return;
            }
            let mut parts: [Vec<f64>; 4] = Default::default();
            for (v, w) in crate::quadrature::composite_nodes(&self.rule, a, b, width) {
                let i = self.inner(v, 0.0, s);
                let b12 = self.b12.eval(v) * w;
                parts[0].push(b12 * i.b12.re);
                parts[1].push(-b12 * i.b2.im);
                parts[2].push(b12 * i.b1.im);
                parts[3].push(-b12 * i.b12.im);
            }
            for c in 0..4 {
                acc[c] += pairwise_sum(&parts[c]);
            }
        };
        for &tau in taus {
            segment(prev, tau, &mut acc);
            cum.push(acc);
            prev = tau;
        }
        let mut total = acc;
        segment(prev, s, &mut total);

        let gs = self.global_at(s);
        let pre = self.prefactor();
        let mut out = RowKernels {
            eta: Vec::with_capacity(n),
            zeta: Vec::with_capacity(n),
            f_cross_im: Vec::with_capacity(n),
        };
        for (j, &tau) in taus.iter().enumerate() {
            let gt = self.global_at(tau);
            let c = cum[j];
            let g = gs[0] + gt[0] - 2.0 * c[0];
            let t2 = total[2] - c[2];
            let t3 = c[1] - gt[1];
            out.eta.push(Complex64::new(0.5 * g, t2 - t3) * pre);
            out.zeta.push(gs[2] - gt[2]);
            out.f_cross_im.push(2.0 * pre * c[3]);
        }
        out
    }
}

/// `φ12(s, τ) = -(1/ε) ∫_τ^s e21`, from the exact polynomial antiderivative.
pub fn phi12(sys: &TwoLevelSystem, eps: f64, s: f64, tau: f64) -> f64 {
    -(sys.e21.integral(s) - sys.e21.integral(tau)) / eps
}
