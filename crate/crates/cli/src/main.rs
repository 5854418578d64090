use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use adiabatic_lab::oracle::{discretize, evolve};
use adiabatic_lab::scan::kato_for;
use adiabatic_lab::system::DEFAULT_ASSUMPTION_TOL;
use adiabatic_lab::{
    classify_regime, effective_m, evaluate, run_scan, write_csv, Config, ErrorExponents, LabError, Routes, ScanPoint,
};
use clap::{Parser, Subcommand};

/// Adiabatic transition probabilities with a dephasing bosonic reservoir.
#[derive(Parser)]
#[command(name = "adlab", version)]
struct Cli {
    /// Configuration file (`section.key = value`); the shipped reference system if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path for CSV reports; stdout if omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; all available cores if omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reserved. Every computation is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the gap, smoothness and reservoir hypotheses.
    Check,
    /// Run the configured parameter scan and write a CSV report.
    Scan,
    /// Evaluate the leading-order formula and the first Dyson term at one point.
    Dyson1 {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        lam: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        /// Also estimate the third-order term.
        #[arg(long)]
        dyson3: bool,
    },
    /// Brute-force truncated Fock simulation at one point.
    Oracle {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        lam: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Classify every scan point by coupling regime.
    Regimes,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_ASSUMPTION: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::Config(_) | LabError::InvalidParameter(_) | LabError::TimeOutOfRange(_) => EXIT_CONFIG,
        LabError::Assumptions(_) => EXIT_ASSUMPTION,
        _ => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn output(cli: &Cli, fallback: Option<&str>) -> Result<Box<dyn Write>, LabError> {
    let path = cli.out.clone().or_else(|| fallback.map(PathBuf::from));
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(&p).map_err(|e| LabError::Config(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn io_err(e: io::Error) -> LabError {
    LabError::Config(e.to_string())
}

fn run(cli: &Cli) -> Result<u8, LabError> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::reference(),
    };
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    match &cli.command {
        Command::Check => check(&cfg),
        Command::Scan => {
            let rows = run_scan(&cfg, threads)?;
            let mut w = output(cli, cfg.scan.output_path.as_deref())?;
            write_csv(&rows, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            if failed > 0 {
                eprintln!("{failed} of {} rows reported a numerical failure", rows.len());
                return Ok(EXIT_NUMERICAL);
            }
            Ok(0)
        }
        Command::Dyson1 { eps, lam, t, dyson3 } => {
            require_assumptions(&cfg)?;
            let point = ScanPoint {
                eps: eps.unwrap_or(cfg.point.eps),
                lam: lam.unwrap_or(cfg.point.lam),
                m: effective_m(&cfg.reservoir),
                beta: cfg.reservoir.beta,
                t: t.unwrap_or(cfg.point.t),
            };
            if !(point.eps > 0.0 && point.eps < 1.0) {
                return Err(LabError::InvalidParameter(format!("ε = {} outside (0, 1)", point.eps)));
            }
            let routes = Routes {
                dyson1: true,
                dyson3: *dyson3,
                ..Routes::NONE
            };
            let kt = kato_for(&cfg)?;
            let pool = rayon_pool(threads)?;
            let (r, errs) = pool.install(|| evaluate(&cfg, &kt, routes, point))?;
            let opt = |x: Option<f64>| x.map(|v| format!("{v:.10e}")).unwrap_or_else(|| "-".into());
            println!("eps          {}", r.eps);
            println!("lam          {}", r.lam);
            println!("t            {}", r.t);
            println!("m            {}  (m1 = {}, alpha0 = {:.6})", r.m, r.error_exponents.m1, r.error_exponents.alpha0);
            println!("p_free       {:.10e}", r.p_free);
            println!("p_correction {:.10e}", r.p_correction);
            println!("p_dyson1     {}", opt(r.p_dyson1));
            println!("residual     {}", opt(r.residual));
            if *dyson3 {
                println!("omega3       {}", opt(r.omega3_norm));
            }
            println!("regime       {}", r.regime);
            for e in &errs {
                eprintln!("error: {e}");
            }
            Ok(if errs.is_empty() { 0 } else { EXIT_NUMERICAL })
        }
        Command::Oracle { eps, lam, t } => {
            require_assumptions(&cfg)?;
            let (eps, lam, t) = (eps.unwrap_or(cfg.point.eps), lam.unwrap_or(cfg.point.lam), t.unwrap_or(cfg.point.t));
            let modes = discretize(&cfg.reservoir, cfg.oracle.n_modes, cfg.oracle.omega_max)?;
            let r = evolve(&cfg.system, &modes, &cfg.oracle, eps, lam, t)?;
            println!("p12        {:.10e}", r.p12);
            for (n, p) in r.p12_by_occupation.iter().enumerate() {
                println!("  {n} bosons {p:.10e}");
            }
            println!("leakage    {:.3e}", r.leakage);
            println!("norm drift {:.3e}", r.norm_drift);
            println!("steps      {}", r.steps);
            Ok(0)
        }
        Command::Regimes => {
            cfg.scan.validate()?;
            let mut w = output(cli, None)?;
            writeln!(w, "eps,lam,m,lam_over_sqrt_eps,regime,m1,alpha0").map_err(io_err)?;
            for (eps, lam, m, _) in cfg.scan.points() {
                let e = ErrorExponents::new(m);
                let regime = classify_regime(eps, lam, m, &cfg.regime);
                writeln!(w, "{eps},{lam},{m},{:.6},{regime},{},{:.6}", lam / eps.sqrt(), e.m1, e.alpha0).map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
            Ok(0)
        }
    }
}

fn rayon_pool(threads: usize) -> Result<rayon::ThreadPool, LabError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::InvalidParameter(e.to_string()))
}

fn require_assumptions(cfg: &Config) -> Result<(), LabError> {
    let report = cfg.system.check_assumptions(DEFAULT_ASSUMPTION_TOL);
    if report.all_passed() {
        Ok(())
    } else {
        Err(LabError::Assumptions(report.violations().join(", ")))
    }
}

fn check(cfg: &Config) -> Result<u8, LabError> {
    let report = cfg.system.check_assumptions(DEFAULT_ASSUMPTION_TOL);
    println!("{report}");
    let m = cfg.m_target.unwrap_or_else(|| effective_m(&cfg.reservoir));
    let a4 = cfg.reservoir.check_a4(m)?;
    println!("{a4}");
    Ok(if report.all_passed() && a4.passed { 0 } else { EXIT_ASSUMPTION })
}
