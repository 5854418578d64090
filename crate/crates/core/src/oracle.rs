//! Brute-force reference: the reservoir cut down to finitely many modes and a
//! total-occupation Fock cutoff, with the full rescaled Schrödinger equation
//! integrated directly.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::reservoir::ReservoirModel;
use crate::system::TwoLevelSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub n_modes: usize,
    pub omega_max: f64,
    pub n_excitations: usize,
    /// Physical-time step; `None` picks the largest step the stability rule allows.
    pub dt_phys: Option<f64>,
    pub norm_tol: f64,
    pub leakage_limit: f64,
    /// Largest Hilbert-space dimension `2·D` accepted.
    pub max_dimension: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_modes: 48,
            omega_max: 10.0,
            n_excitations: 2,
            dt_phys: None,
            norm_tol: 1e-8,
            leakage_limit: 0.05,
            max_dimension: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub omega: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub p12: f64,
    /// `p12` split by total boson number.
    pub p12_by_occupation: Vec<f64>,
    pub norm_drift: f64,
    /// Population in Fock states at the occupation cutoff.
    pub leakage: f64,
    pub steps: usize,
}

/// Midpoint discretization: `ω_k = (k - ½)Δω`, `|g̃_k|² = γ̂(ω_k)Δω/2π`.
pub fn discretize(model: &ReservoirModel, n_modes: usize, omega_max: f64) -> Result<Vec<Mode>> {
    if !model.is_zero_temperature() {
        return Err(LabError::RequiresZeroTemperature);
    }
    if n_modes == 0 || !(omega_max > 0.0) {
        return Err(LabError::InvalidParameter("need n_modes ≥ 1 and omega_max > 0".into()));
    }
    let dw = omega_max / n_modes as f64;
    Ok((1..=n_modes)
        .map(|k| {
            let omega = (k as f64 - 0.5) * dw;
            Mode {
                omega,
                g: (model.gamma_hat(omega) * dw / (2.0 * std::f64::consts::PI)).sqrt(),
            }
        })
        .collect())
}

/// `Σ_k |g̃_k|² e^{-iω_k x}`, the discretized correlation function.
pub fn discrete_gamma(modes: &[Mode], x: f64) -> Complex64 {
    modes.iter().map(|m| Complex64::from_polar(m.g * m.g, -m.omega * x)).sum()
}

/// Occupation-number basis with total occupation ≤ `n_max`, plus the sparse
/// creation part `A = Σ g̃_k a_k*` of the field operator.
pub struct FockSpace {
    occupations: Vec<Vec<u8>>,
    energies: Vec<f64>,
    // rows of A as (column, value): A|f'⟩ contributions landing on |f⟩
    raise: Vec<Vec<(usize, f64)>>,
    n_max: usize,
}

impl FockSpace {
    pub fn new(modes: &[Mode], n_max: usize) -> Self {
        let mut occupations = Vec::new();
        let mut current = vec![0u8; modes.len()];
        enumerate(&mut current, 0, n_max, &mut occupations);
        occupations.sort_by(|a, b| {
            let (na, nb) = (total(a), total(b));
            na.cmp(&nb).then_with(|| b.cmp(a))
        });
        let index: std::collections::HashMap<&[u8], usize> =
            occupations.iter().enumerate().map(|(i, o)| (o.as_slice(), i)).collect();
        let energies = occupations
            .iter()
            .map(|o| o.iter().zip(modes).map(|(&n, m)| n as f64 * m.omega).sum())
            .collect();
        let mut raise = vec![Vec::new(); occupations.len()];
        for (j, occ) in occupations.iter().enumerate() {
            if total(occ) as usize == n_max {
                continue;
            }
            let mut up = occ.clone();
            for (k, m) in modes.iter().enumerate() {
                up[k] += 1;
                let i = index[up.as_slice()];
                raise[i].push((j, m.g * (up[k] as f64).sqrt()));
                up[k] -= 1;
            }
        }
        Self {
            occupations,
            energies,
            raise,
            n_max,
        }
    }

    pub fn dim(&self) -> usize {
        self.occupations.len()
    }

    pub fn occupation(&self, i: usize) -> &[u8] {
        &self.occupations[i]
    }

    /// `y += c · (A + Aᵀ) x`.
    fn apply_field(&self, x: &[Complex64], c: f64, y: &mut [Complex64]) {
        for (i, row) in self.raise.iter().enumerate() {
            let xi = x[i];
            let mut acc = Complex64::new(0.0, 0.0);
            for &(j, v) in row {
                acc += x[j] * v;
                y[j] += xi * (c * v);
            }
            y[i] += acc * c;
        }
    }

    fn at_cutoff(&self, i: usize) -> bool {
        total(&self.occupations[i]) as usize == self.n_max
    }
}

fn total(o: &[u8]) -> u32 {
    o.iter().map(|&n| n as u32).sum()
}

fn enumerate(cur: &mut Vec<u8>, k: usize, left: usize, out: &mut Vec<Vec<u8>>) {
    if k == cur.len() {
        out.push(cur.clone());
        return;
    }
    for n in 0..=left {
        cur[k] = n as u8;
        enumerate(cur, k + 1, left - n, out);
    }
    cur[k] = 0;
}

/// Number of Fock states with total occupation ≤ `n` over `modes` modes.
pub fn fock_dimension(modes: usize, n: usize) -> usize {
    // C(modes + n, n)
    (1..=n).fold(1usize, |acc, k| acc * (modes + k) / k)
}

// H = H_S ⊗ 1 + λ B ⊗ φ + 1 ⊗ H_R on ψ[q·D + f], with φ = (A + Aᵀ)/√2 so
// that 2⟨Ω|φ(t)φ|Ω⟩ is the discretized correlation function.
struct Generator<'a> {
    fock: &'a FockSpace,
    hs: Matrix2<f64>,
    b: Matrix2<f64>,
    lam: f64,
    // CF4 weight of the time-independent H_R in this exponential
    weight: f64,
}

impl Generator<'_> {
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let d = self.fock.dim();
        let (x0, x1) = x.split_at(d);
        y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        {
            let (y0, y1) = y.split_at_mut(d);
            for f in 0..d {
                let e = self.fock.energies[f] * self.weight;
                y0[f] = x0[f] * (self.hs[(0, 0)] + e) + x1[f] * self.hs[(0, 1)];
                y1[f] = x0[f] * self.hs[(1, 0)] + x1[f] * (self.hs[(1, 1)] + e);
            }
        }
        if self.lam == 0.0 {
            return;
        }
        // B mixes the two system components; apply φ to each combination
        let mut tmp = vec![Complex64::new(0.0, 0.0); d];
        for q in 0..2 {
            for (t, (&a, &c)) in tmp.iter_mut().zip(x0.iter().zip(x1)) {
                *t = a * self.b[(q, 0)] + c * self.b[(q, 1)];
            }
            let out = &mut y[q * d..(q + 1) * d];
            self.fock.apply_field(&tmp, self.lam * std::f64::consts::FRAC_1_SQRT_2, out);
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

const KRYLOV_MAX: usize = 40;
const KRYLOV_TOL: f64 = 1e-13;

/// `v ← exp(-iτM) v` by Lanczos with full reorthogonalization. Splits τ when
/// the Krylov space is too small.
fn expm_apply(op: &dyn Fn(&[Complex64], &mut [Complex64]), tau: f64, v: &mut [Complex64]) {
    let beta0 = norm(v);
    if beta0 == 0.0 {
        return;
    }
    let n = v.len();
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..KRYLOV_MAX {
        op(&basis[j], &mut w);
        // real for Hermitian M
        alpha.push(dot(&basis[j], &w).re);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bnext = norm(&w);
        let m = alpha.len();
        let coeffs = tridiagonal_exp(&alpha, &beta, tau);
        let err = bnext * coeffs[m - 1].norm();
        if err < KRYLOV_TOL || bnext < 1e-14 {
            for (i, x) in v.iter_mut().enumerate() {
                *x = basis.iter().zip(&coeffs).map(|(b, c)| b[i] * c).sum::<Complex64>() * beta0;
            }
            return;
        }
        beta.push(bnext);
        basis.push(w.iter().map(|x| x / bnext).collect());
    }
    expm_apply(op, 0.5 * tau, v);
    expm_apply(op, 0.5 * tau, v);
}

// exp(-iτT) e1 for the symmetric tridiagonal T.
fn tridiagonal_exp(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let v = eig.eigenvectors[(i, k)] * eig.eigenvectors[(0, k)];
                    Complex64::from_polar(v, -tau * eig.eigenvalues[k])
                })
                .sum()
        })
        .collect()
}

/// Default physical step `(1/20)·min(2π/ω_max, 2πε/max|e21|)`.
pub fn default_dt(sys: &TwoLevelSystem, cfg: &OracleConfig, eps: f64) -> f64 {
    let e_max = (0..=1024)
        .map(|i| sys.e21.eval(i as f64 / 1024.0).abs())
        .fold(0.0f64, f64::max);
    let two_pi = 2.0 * std::f64::consts::PI;
    let bohr = if e_max > 0.0 { two_pi * eps / e_max } else { f64::INFINITY };
    (two_pi / cfg.omega_max).min(bohr) / 20.0
}

/// Integrates `iε∂_tψ = (H_S(t) + λB(t)φ_N + H_R,N)ψ` from `ψ1(0) ⊗ Ω` to `t`
/// with a fourth-order commutator-free Magnus stepper.
pub fn evolve(
    sys: &TwoLevelSystem,
    modes: &[Mode],
    cfg: &OracleConfig,
    eps: f64,
    lam: f64,
    t: f64,
) -> Result<OracleResult> {
    if !(eps > 0.0) || !(lam >= 0.0) {
        return Err(LabError::InvalidParameter(format!("eps {eps}, lambda {lam}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(LabError::TimeOutOfRange(t));
    }
    let dim = 2 * fock_dimension(modes.len(), cfg.n_excitations);
    if dim > cfg.max_dimension {
        return Err(LabError::DimensionBudget(dim));
    }
    let fock = FockSpace::new(modes, cfg.n_excitations);
    let d = fock.dim();
    let start = sys.spectral_data(0.0)?;
    let mut psi = vec![Complex64::new(0.0, 0.0); 2 * d];
    psi[0] = start.psi1[0].into();
    psi[d] = start.psi1[1].into();

    let dt_max = cfg.dt_phys.unwrap_or_else(|| default_dt(sys, cfg, eps));
    let horizon = t / eps;
    let steps = (horizon / dt_max).ceil() as usize;
    let dt = if steps > 0 { horizon / steps as f64 } else { 0.0 };
    let h = dt * eps;

    let s3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - s3 / 6.0, 0.5 + s3 / 6.0);
    let (a1, a2) = (0.25 + s3 / 6.0, 0.25 - s3 / 6.0);
    for n in 0..steps {
        let t0 = n as f64 * h;
        let (h1, b1) = (sys.hamiltonian(t0 + c1 * h), sys.coupling(t0 + c1 * h));
        let (h2, b2) = (sys.hamiltonian(t0 + c2 * h), sys.coupling(t0 + c2 * h));
        // first factor leans on the early node, second on the late one
        for (wa, wb) in [(a1, a2), (a2, a1)] {
            let gen = Generator {
                fock: &fock,
                hs: h1 * wa + h2 * wb,
                b: b1 * wa + b2 * wb,
                lam,
                weight: wa + wb,
            };
            expm_apply(&|x: &[Complex64], y: &mut [Complex64]| gen.apply(x, y), dt, &mut psi);
        }
    }

    let norm_drift = (norm(&psi) - 1.0).abs();
    if norm_drift > cfg.norm_tol {
        return Err(LabError::NormDrift(norm_drift));
    }
    let end = sys.spectral_data(t)?;
    let (p2a, p2b) = (end.psi2[0], end.psi2[1]);
    let mut sectors = vec![0.0; cfg.n_excitations + 1];
    let mut leakage = 0.0;
    for f in 0..d {
        let amp = psi[f] * p2a + psi[d + f] * p2b;
        sectors[total(fock.occupation(f)) as usize] += amp.norm_sqr();
        if fock.at_cutoff(f) {
            leakage += psi[f].norm_sqr() + psi[d + f].norm_sqr();
        }
    }
    if leakage > cfg.leakage_limit {
        return Err(LabError::Leakage(leakage));
    }
    Ok(OracleResult {
        p12: sectors.iter().sum(),
        p12_by_occupation: sectors,
        norm_drift,
        leakage,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Poly;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn small_cfg() -> OracleConfig {
        OracleConfig {
            n_modes: 12,
            omega_max: 10.0,
            n_excitations: 2,
            ..OracleConfig::default()
        }
    }

    // Independent two-level integrator: classical RK4 at a fine fixed step.
    fn two_level_p12(sys: &TwoLevelSystem, eps: f64, t: f64) -> f64 {
        let s0 = sys.spectral_data(0.0).unwrap();
        let mut y = [Complex64::from(s0.psi1[0]), Complex64::from(s0.psi1[1])];
        let n = 20000;
        let h = t / n as f64;
        let f = |s: f64, y: [Complex64; 2]| {
            let m = sys.hamiltonian(s);
            let i = Complex64::new(0.0, -1.0 / eps);
            [
                i * (y[0] * m[(0, 0)] + y[1] * m[(0, 1)]),
                i * (y[0] * m[(1, 0)] + y[1] * m[(1, 1)]),
            ]
        };
        for k in 0..n {
            let s = k as f64 * h;
            let k1 = f(s, y);
            let k2 = f(s + h / 2.0, [y[0] + k1[0] * (h / 2.0), y[1] + k1[1] * (h / 2.0)]);
            let k3 = f(s + h / 2.0, [y[0] + k2[0] * (h / 2.0), y[1] + k2[1] * (h / 2.0)]);
            let k4 = f(s + h, [y[0] + k3[0] * h, y[1] + k3[1] * h]);
            for j in 0..2 {
                y[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
            }
        }
        let e = sys.spectral_data(t).unwrap();
        (y[0] * e.psi2[0] + y[1] * e.psi2[1]).norm_sqr()
    }

    #[test]
    fn fock_dimension_counts() {
        assert_eq!(fock_dimension(48, 2), 1225);
        let modes: Vec<Mode> = (0..5).map(|k| Mode { omega: k as f64, g: 1.0 }).collect();
        assert_eq!(FockSpace::new(&modes, 3).dim(), fock_dimension(5, 3));
        assert!(FockSpace::new(&modes, 3).occupation(0).iter().all(|&n| n == 0));
    }

    #[test]
    fn discretized_correlation_converges() {
        let model = ReservoirModel::zero_temperature(1.0, 2.0, 1.0).unwrap();
        let g0 = model.gamma_closed_form(0.0).unwrap().re;
        let modes = discretize(&model, 64, 40.0).unwrap();
        assert!((discrete_gamma(&modes, 0.0).re - g0).abs() <= 0.02 * g0);
        let exact = model.gamma_closed_form(1.0).unwrap();
        let coarse = (discrete_gamma(&discretize(&model, 64, 40.0).unwrap(), 1.0) - exact).norm();
        let fine = (discrete_gamma(&discretize(&model, 128, 40.0).unwrap(), 1.0) - exact).norm();
        assert!(coarse >= 2.0 * fine, "{coarse} {fine}");
        let zero = ReservoirModel::zero_temperature(0.0, 2.0, 1.0).unwrap();
        assert!(discretize(&zero, 8, 10.0).unwrap().iter().all(|m| m.g == 0.0));
        let hot = ReservoirModel::thermal(1.0, 3.0, 1.0, 1.0).unwrap();
        assert_eq!(discretize(&hot, 8, 10.0), Err(LabError::RequiresZeroTemperature));
    }

    #[test]
    fn field_operator_matches_ladder_algebra() {
        // ⟨1_k|φ|Ω⟩ = g_k and ⟨2_k|φ|1_k⟩ = √2 g_k
        let modes = vec![Mode { omega: 1.0, g: 0.3 }, Mode { omega: 2.0, g: 0.7 }];
        let fock = FockSpace::new(&modes, 2);
        let find = |o: [u8; 2]| (0..fock.dim()).find(|&i| fock.occupation(i) == o).unwrap();
        let mut x = vec![Complex64::new(0.0, 0.0); fock.dim()];
        x[find([0, 0])] = 1.0.into();
        let mut y = vec![Complex64::new(0.0, 0.0); fock.dim()];
        fock.apply_field(&x, 1.0, &mut y);
        assert_relative_eq!(y[find([0, 1])].re, 0.7);
        assert_relative_eq!(y[find([1, 0])].re, 0.3);
        let mut x = vec![Complex64::new(0.0, 0.0); fock.dim()];
        x[find([1, 0])] = 1.0.into();
        let mut y = vec![Complex64::new(0.0, 0.0); fock.dim()];
        fock.apply_field(&x, 1.0, &mut y);
        assert_relative_eq!(y[find([2, 0])].re, 0.3 * 2f64.sqrt());
        assert_relative_eq!(y[find([1, 1])].re, 0.7);
        assert_relative_eq!(y[find([0, 0])].re, 0.3);
    }

    #[test]
    fn uncoupled_matches_two_level_integration() {
        let sys = TwoLevelSystem::reference();
        let model = ReservoirModel::zero_temperature(1.0, 2.0, 1.0).unwrap();
        let modes = discretize(&model, 4, 10.0).unwrap();
        for &t in &[0.5, 1.0] {
            let r = evolve(&sys, &modes, &small_cfg(), 0.1, 0.0, t).unwrap();
            assert_relative_eq!(r.p12, two_level_p12(&sys, 0.1, t), max_relative = 1e-6);
            assert!(r.norm_drift < 1e-10);
            assert_eq!(r.leakage, 0.0);
        }
    }

    #[test]
    fn static_drive_never_transitions() {
        let sys = TwoLevelSystem {
            theta_max: 0.0,
            ..TwoLevelSystem::reference()
        };
        let model = ReservoirModel::zero_temperature(1.0, 2.0, 1.0).unwrap();
        let modes = discretize(&model, 8, 10.0).unwrap();
        let r = evolve(&sys, &modes, &small_cfg(), 0.1, 0.5, 1.0).unwrap();
        assert!(r.p12 < 1e-20);
    }

    #[test]
    fn pure_dephasing_keeps_populations() {
        let sys = TwoLevelSystem {
            theta_max: 0.0,
            mean_energy: Poly::constant(0.3),
            b1: Poly::constant(0.4),
            b2: Poly::constant(-0.8),
            ..TwoLevelSystem::reference()
        };
        let model = ReservoirModel::zero_temperature(1.0, 1.0, 1.0).unwrap();
        let modes = discretize(&model, 8, 10.0).unwrap();
        for &t in &[0.3, 0.7, 1.0] {
            let r = evolve(&sys, &modes, &small_cfg(), 0.2, 0.2, t).unwrap();
            assert!(r.p12 < 1e-20, "{}", r.p12);
        }
    }

    #[test]
    fn step_refinement_converges() {
        let sys = TwoLevelSystem::reference();
        let model = ReservoirModel::zero_temperature(1.0, 2.0, 1.0).unwrap();
        let modes = discretize(&model, 8, 10.0).unwrap();
        let mut cfg = small_cfg();
        let a = evolve(&sys, &modes, &cfg, 0.1, 0.2, 1.0).unwrap();
        cfg.dt_phys = Some(0.5 * default_dt(&sys, &cfg, 0.1));
        let b = evolve(&sys, &modes, &cfg, 0.1, 0.2, 1.0).unwrap();
        assert!(b.steps >= 2 * a.steps - 1);
        assert_relative_eq!(a.p12, b.p12, max_relative = 1e-6);
        assert!(a.leakage > 0.0 && a.leakage < 0.05);
    }

    // Two-level states on a uniform grid, RK4 from `y0` at grid index `from`
    // toward index `to` (either direction).
    fn two_level_path(sys: &TwoLevelSystem, eps: f64, t: f64, n: usize, y0: [Complex64; 2], backward: bool) -> Vec<[Complex64; 2]> {
        let h = if backward { -t / n as f64 } else { t / n as f64 };
        let f = |s: f64, y: [Complex64; 2]| {
            let m = sys.hamiltonian(s);
            let i = Complex64::new(0.0, -1.0 / eps);
            [
                i * (y[0] * m[(0, 0)] + y[1] * m[(0, 1)]),
                i * (y[0] * m[(1, 0)] + y[1] * m[(1, 1)]),
            ]
        };
        let mut out = vec![y0];
        let mut y = y0;
        for k in 0..n {
            let s = if backward { t } else { 0.0 } + k as f64 * h;
            let k1 = f(s, y);
            let k2 = f(s + h / 2.0, [y[0] + k1[0] * (h / 2.0), y[1] + k1[1] * (h / 2.0)]);
            let k3 = f(s + h / 2.0, [y[0] + k2[0] * (h / 2.0), y[1] + k2[1] * (h / 2.0)]);
            let k4 = f(s + h, [y[0] + k3[0] * h, y[1] + k3[1] * h]);
            for j in 0..2 {
                y[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
            }
            out.push(y);
        }
        if backward {
            out.reverse();
        }
        out
    }

    #[test]
    fn weak_coupling_emission_matches_first_order_in_the_field() {
        // one emitted boson: d_k = (-iλ g_k/√2ε) ∫₀^t e^{iω_k u/ε} ⟨U(u,t)ψ2(t)| B(u) |U(u,0)ψ1(0)⟩ du
        let sys = TwoLevelSystem::reference().relabeled();
        let model = ReservoirModel::zero_temperature(1.0, 2.0, 1.0).unwrap();
        let modes = discretize(&model, 24, 10.0).unwrap();
        let (eps, lam, t) = (0.05, 0.005, 1.0);
        let n = 20000;
        let h = t / n as f64;
        let s0 = sys.spectral_data(0.0).unwrap();
        let s1 = sys.spectral_data(t).unwrap();
        let fwd = two_level_path(&sys, eps, t, n, [s0.psi1[0].into(), s0.psi1[1].into()], false);
        let bwd = two_level_path(&sys, eps, t, n, [s1.psi2[0].into(), s1.psi2[1].into()], true);
        let overlap: Vec<Complex64> = (0..=n)
            .map(|i| {
                let b = sys.coupling(i as f64 * h);
                let (x, y) = (fwd[i], bwd[i]);
                let bx = [x[0] * b[(0, 0)] + x[1] * b[(0, 1)], x[0] * b[(1, 0)] + x[1] * b[(1, 1)]];
                y[0].conj() * bx[0] + y[1].conj() * bx[1]
            })
            .collect();
        let emission: f64 = modes
            .iter()
            .map(|m| {
                // trapezoid on the fine grid; the phase advance per cell is ≤ 0.01 rad
                let d: Complex64 = (0..=n)
                    .map(|i| {
                        let w = if i == 0 || i == n { 0.5 * h } else { h };
                        Complex64::from_polar(w, m.omega * i as f64 * h / eps) * overlap[i]
                    })
                    .sum();
                (lam * m.g / (2f64.sqrt() * eps)).powi(2) * d.norm_sqr()
            })
            .sum();
        let cfg = OracleConfig {
            n_modes: 24,
            n_excitations: 1,
            ..OracleConfig::default()
        };
        let r = evolve(&sys, &modes, &cfg, eps, lam, t).unwrap();
        assert_relative_eq!(r.p12_by_occupation[1], emission, max_relative = 1e-3);
    }

    #[test]
    fn dimension_budget_is_enforced() {
        let sys = TwoLevelSystem::reference();
        let model = ReservoirModel::zero_temperature(1.0, 2.0, 1.0).unwrap();
        let modes = discretize(&model, 48, 10.0).unwrap();
        let cfg = OracleConfig {
            n_excitations: 4,
            max_dimension: 100_000,
            ..OracleConfig::default()
        };
        assert!(matches!(evolve(&sys, &modes, &cfg, 0.1, 0.1, 1.0), Err(LabError::DimensionBudget(_))));
    }

    #[test]
    fn fock_cutoff_converges() {
        let sys = TwoLevelSystem::reference().relabeled();
        let model = ReservoirModel::zero_temperature(1.0, 2.0, 1.0).unwrap();
        let modes = discretize(&model, 10, 10.0).unwrap();
        let p: Vec<f64> = (1..=3)
            .map(|n| {
                let cfg = OracleConfig {
                    n_modes: 10,
                    n_excitations: n,
                    ..OracleConfig::default()
                };
                evolve(&sys, &modes, &cfg, 0.1, 0.3, 1.0).unwrap().p12
            })
            .collect();
        // each extra boson shrinks the truncation increment by more than tenfold
        assert!((p[2] - p[1]).abs() < 0.1 * (p[1] - p[0]).abs(), "{p:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn norm_is_conserved(eps in 0.1f64..0.4, lam in 0.0f64..0.4, t in 0.1f64..1.0, m in 0.5f64..3.0) {
            let sys = TwoLevelSystem::reference();
            let model = ReservoirModel::zero_temperature(1.0, m, 1.0).unwrap();
            let modes = discretize(&model, 8, 10.0).unwrap();
            let r = evolve(&sys, &modes, &small_cfg(), eps, lam, t).unwrap();
            prop_assert!(r.norm_drift <= 1e-8);
            prop_assert!((0.0..=1.0).contains(&r.p12));
            prop_assert!((r.p12_by_occupation.iter().sum::<f64>() - r.p12).abs() < 1e-15);
        }
    }
}
