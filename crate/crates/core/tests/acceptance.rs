//! Acceptance harness: one PASS/FAIL line per criterion. Exits nonzero if any fails.

use std::time::{Duration, Instant};

use adiabatic_lab::oracle::discretize;
use adiabatic_lab::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn timed(id: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = took <= budget;
    let pass = out.pass && in_time;
    println!(
        "{id} {} {} [{:.2}s of {:.0}s]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        budget.as_secs_f64()
    );
    pass
}

fn kt_for(sys: &TwoLevelSystem) -> KatoTransport {
    transport(sys, &TransportOptions::for_system(sys)).unwrap()
}

fn zero_t(m: f64) -> ReservoirModel {
    ReservoirModel::zero_temperature(1.0, m, 1.0).unwrap()
}

// least-squares slope of log y against log x
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

fn ac1() -> Outcome {
    let sys = TwoLevelSystem::reference();
    let kt = kt_for(&sys);
    let (u, i, n) = (kt.unitarity_drift(), kt.intertwining_residual(), kt.grid().len());
    Outcome {
        pass: u <= 1e-10 && i <= 1e-8 && n > 1024,
        detail: format!("Kato invariants: unitarity {u:.2e} (<= 1e-10), intertwining {i:.2e} (<= 1e-8), {n} grid points"),
    }
}

fn ac2() -> Outcome {
    let sys = TwoLevelSystem::reference();
    let kt = kt_for(&sys);
    let model = zero_t(2.0);
    let eps = [0.1, 0.05, 0.025];
    let res: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let k = PhaseKernels::new(&model, &sys, e, 0.0).unwrap();
            (dyson1_exact(&k, &kt, 1.0).unwrap() - kt.p_free(e, 1.0)).abs()
        })
        .collect();
    let slope = loglog_slope(&eps, &res);
    let shown: Vec<String> = res.iter().map(|r| format!("{r:.3e}")).collect();
    Outcome {
        pass: (slope - 3.0).abs() <= 0.5,
        detail: format!("free adiabatic order: slope {slope:.2} (3 +- 0.5), |dyson1 - eps^2 q| = [{}]", shown.join(", ")),
    }
}

fn ac3() -> Outcome {
    let sys = TwoLevelSystem::reference().relabeled();
    let kt = kt_for(&sys);
    let model = zero_t(2.0);
    let scaled: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&e: &f64| {
            let lam = e.sqrt();
            let k = PhaseKernels::new(&model, &sys, e, lam).unwrap();
            let d = dyson1_exact(&k, &kt, 1.0).unwrap();
            let (pf, pc) = leading_order(&kt, &model, &sys, e, lam, 1.0).unwrap();
            theorem_residual(d, pf, pc).abs() / (e * e)
        })
        .collect();
    let factors: Vec<f64> = scaled.windows(2).map(|w| w[0] / w[1]).collect();
    Outcome {
        pass: factors.iter().all(|&f| f >= 1.5),
        detail: format!("residual decay: |residual|/eps^2 = {scaled:.4?}, factor per halving {factors:.3?} (>= 1.5)"),
    }
}

fn ac4() -> Outcome {
    let model = zero_t(2.0);
    let up = TwoLevelSystem::reference();
    let down = up.relabeled();
    let (_, p_up) = leading_order(&kt_for(&up), &model, &up, 0.1, 0.1, 1.0).unwrap();
    let (_, p_down) = leading_order(&kt_for(&down), &model, &down, 0.1, 0.1, 1.0).unwrap();
    Outcome {
        pass: p_up == 0.0 && p_down > 1e-12,
        detail: format!("zero-temperature asymmetry: ground start {p_up:e} (== 0), excited start {p_down:.3e} (> 1e-12)"),
    }
}

fn ac5() -> Outcome {
    let mut worst = 0.0f64;
    for beta in [0.5, 2.0, 10.0] {
        let model = ReservoirModel::thermal(1.0, 3.0, 1.0, beta).unwrap();
        for i in 0..=2000 {
            let w = 1e-3 + 20.0 * i as f64 / 2000.0;
            let lhs = model.gamma_hat_thermal(-w).unwrap();
            let rhs = (-beta * w).exp() * model.gamma_hat_thermal(w).unwrap();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("KMS identity: max |gamma_hat(-w) - e^(-beta w) gamma_hat(w)| = {worst:.2e} (<= 1e-12)"),
    }
}

fn ac6() -> Outcome {
    let model = zero_t(2.0);
    let g0 = model.gamma(0.0).unwrap().re;
    // |γ(x)| ≤ γ(0) on a thousand samples in [-50, 50]
    let bounded = (0..1000)
        .map(|i| -50.0 + 100.0 * i as f64 / 999.0)
        .all(|x| model.gamma(x).unwrap().norm() <= g0 * (1.0 + 1e-14));
    // composite Simpson on [0, 200/ω_D]
    let n = 400_000;
    let h = 200.0 / n as f64;
    let integral: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * model.gamma(i as f64 * h).unwrap().re
        })
        .sum::<f64>()
        * h
        / 3.0;
    let ft_gap = [0.0, 0.3, 1.0, 2.5, 7.0, 20.0]
        .iter()
        .map(|&x| (model.gamma_closed_form(x).unwrap() - model.gamma_fourier(x).unwrap()).norm())
        .fold(0.0f64, f64::max);
    Outcome {
        pass: bounded && integral.abs() <= 1e-6 * g0 && ft_gap <= 1e-6,
        detail: format!(
            "correlation identities: |gamma| <= gamma(0) {bounded}, |int gamma_R| / gamma(0) = {:.2e} (<= 1e-6), closed form vs FT {ft_gap:.2e} (<= 1e-6)",
            integral.abs() / g0
        ),
    }
}

fn ac7() -> Outcome {
    let sys = TwoLevelSystem::reference();
    let kt = kt_for(&sys);
    let model = zero_t(2.0);
    let (eps, lam) = (0.1, 0.1);
    let k = PhaseKernels::new(&model, &sys, eps, lam).unwrap();
    let d1 = dyson1_exact(&k, &kt, 1.0).unwrap();
    let d3 = dyson3_magnitude(&k, &kt, 1.0, &DysonOptions::default()).unwrap();
    let cfg = OracleConfig {
        n_modes: 48,
        n_excitations: 2,
        ..OracleConfig::default()
    };
    let modes = discretize(&model, cfg.n_modes, cfg.omega_max).unwrap();
    let r = evolve(&sys, &modes, &cfg, eps, lam, 1.0).unwrap();
    let gap = (r.p12 - d1).abs();
    let allowed = (0.05 * d1).max(d3 + r.leakage);
    Outcome {
        pass: gap <= allowed && r.norm_drift <= 1e-8,
        detail: format!(
            "oracle cross-check: oracle {:.5e}, dyson1 {d1:.5e}, |diff| {gap:.3e} <= {allowed:.3e} (dyson3 {d3:.3e}, leakage {:.2e}), norm drift {:.1e}",
            r.p12, r.leakage, r.norm_drift
        ),
    }
}

fn ac8() -> Outcome {
    let eps = [1e-2, 5e-3, 2.5e-3];
    let spread = |v: &[f64]| {
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo) / hi
    };
    let m1 = zero_t(1.0);
    let log_ratio: Vec<f64> = eps.iter().map(|&e| m1.r_bound(1.0 / e).unwrap() / e.ln().abs()).collect();
    let m2 = zero_t(2.0);
    let plateau: Vec<f64> = eps.iter().map(|&e| m2.r_bound(1.0 / e).unwrap()).collect();
    let (s1, s2) = (spread(&log_ratio), spread(&plateau));
    Outcome {
        pass: s1 <= 0.10 && s2 <= 0.02,
        detail: format!(
            "r(z) growth: m=1 r/|ln eps| = {log_ratio:.4?} spread {:.1}% (<= 10%), m=2 r = {plateau:.4?} spread {:.2}% (<= 2%)",
            100.0 * s1,
            100.0 * s2
        ),
    }
}

fn ac9() -> Outcome {
    let cfg = Config::parse("scan.eps = 0.2, 0.1, 0.05\nscan.lam = 0, 0.2\nscan.m = 1, 2\nscan.routes = leading, dyson1, dyson3\n").unwrap();
    let csv = |threads: usize| {
        let mut buf = Vec::new();
        write_csv(&run_scan(&cfg, threads).unwrap(), &mut buf).unwrap();
        String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f[11] = "";
                f.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let (a, b) = (csv(1), csv(4));
    Outcome {
        pass: a == b,
        detail: format!("determinism: 1 vs 4 threads, {} rows, identical {}", a.lines().count() - 1, a == b),
    }
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        timed("AC-1", s(1), ac1),
        timed("AC-2", s(60), ac2),
        timed("AC-3", s(600), ac3),
        timed("AC-4", s(1), ac4),
        timed("AC-5", s(1), ac5),
        timed("AC-6", s(5), ac6),
        timed("AC-7", s(900), ac7),
        timed("AC-8", s(10), ac8),
        timed("AC-9", s(60), ac9),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
