//! Command-line entry point: spectral-table construction, cascade solving,
//! norm evaluation, and the certification suite, wired into reproducible
//! runs with cached tables and diff-stable CSV/JSON outputs.

mod config;

use clap::{Parser, Subcommand};
use config::{InitSpec, RunConfig};
use kinetic_spectral::analysis::{fit_c0_hat, weighted_norm, WeightSpec};
use kinetic_spectral::galerkin::{
    solve_triangular, time_grid, ModeVector, SolveMethod, SolveOutput, SolverOptions,
};
use kinetic_spectral::kernel::CollisionKernel;
use kinetic_spectral::spectrum::SpectralTable;
use kinetic_spectral::verify::{run_acceptance, AcceptanceConfig};
use kinetic_spectral::Error as CoreError;
use std::io::Write;
use std::path::{Path, PathBuf};

const EXIT_CONFIG: u8 = 2;
const EXIT_CERTIFICATION: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

/// Shubin orders written by the `norms` command.
const NORM_TAUS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Parser)]
#[command(
    name = "kinetic-spectral",
    version,
    about = "Spectral cascade solver and certification suite for the radially \
             symmetric homogeneous Boltzmann equation with a Debye-Yukawa kernel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file; explicit flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Kernel parameter s in (0, 2].
    #[arg(long, global = true)]
    s: Option<f64>,

    /// Truncation order N (≥ 2).
    #[arg(long, global = true)]
    n_modes: Option<usize>,

    /// Quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Final time of the trajectory grid.
    #[arg(long, global = true)]
    t_max: Option<f64>,

    /// Number of grid points (≥ 2).
    #[arg(long, global = true)]
    t_steps: Option<usize>,

    /// Solver: expsum | adaptive_numeric.
    #[arg(long, global = true, value_parser = parse_method)]
    method: Option<SolveMethod>,

    /// Seed for randomized initial data.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Initial data: single_mode:<n>:<a> | random_decay:<norm>:<exp> | file:<path>.
    #[arg(long, global = true)]
    init: Option<String>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Skip the small-data guard on the initial norm.
    #[arg(long, global = true)]
    allow_large_data: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or reuse) the spectral table and export its diagnostics.
    Spectrum,
    /// Solve the cascade and export the trajectory.
    Solve,
    /// Solve and export weighted norms along the trajectory.
    Norms,
    /// Run the full certification suite; nonzero exit on any failure.
    Verify,
}

fn parse_method(raw: &str) -> Result<SolveMethod, String> {
    match raw {
        "expsum" => Ok(SolveMethod::ExpSum),
        "adaptive_numeric" | "adaptive-numeric" => Ok(SolveMethod::AdaptiveNumeric),
        other => Err(format!(
            "unknown method `{other}` (expected expsum or adaptive_numeric)"
        )),
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

/// Exit-code classes: non-convergence and blowup (and norm overflow) are
/// numeric failures, certification failures get their own code, everything
/// else is a configuration/input problem.
fn core_failure(op: &str, err: CoreError) -> Failure {
    let code = match err {
        CoreError::NonConvergence { .. }
        | CoreError::NumericBlowup { .. }
        | CoreError::Overflow { .. } => EXIT_NUMERIC,
        CoreError::CertificationFailure { .. } => EXIT_CERTIFICATION,
        _ => EXIT_CONFIG,
    };
    Failure {
        code,
        message: format!("{op}: {err}"),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = run(cli) {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code as i32);
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = assemble_config(&cli)?;
    config.validate().map_err(Failure::config)?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Failure::config(format!("cannot create output dir: {e}")))?;

    match cli.command {
        Command::Spectrum => cmd_spectrum(&config),
        Command::Solve => cmd_solve(&config).map(|_| ()),
        Command::Norms => cmd_norms(&config),
        Command::Verify => cmd_verify(&config),
    }
}

fn assemble_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path).map_err(Failure::config)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.s {
        config.s = s;
    }
    if let Some(n) = cli.n_modes {
        config.n_modes = n;
    }
    if let Some(tol) = cli.tol {
        config.tol = tol;
    }
    if let Some(t_max) = cli.t_max {
        config.t_max = t_max;
    }
    if let Some(t_steps) = cli.t_steps {
        config.t_steps = t_steps;
    }
    if let Some(method) = cli.method {
        config.method = method;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(init) = &cli.init {
        config.init = init.parse().map_err(Failure::config)?;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if cli.allow_large_data {
        config.allow_large_data = true;
    }
    Ok(config)
}

fn load_table(config: &RunConfig) -> Result<(SpectralTable, bool), Failure> {
    let kernel =
        CollisionKernel::new(config.s).map_err(|e| core_failure("kernel construction", e))?;
    SpectralTable::load_or_build(&config.cache_dir(), &kernel, config.n_modes, config.tol)
        .map_err(|e| core_failure("spectral table construction", e))
}

fn build_initial(config: &RunConfig, n_max: usize) -> Result<ModeVector, Failure> {
    match &config.init {
        InitSpec::SingleMode { mode, amplitude } => {
            ModeVector::single_mode(n_max, *mode, *amplitude)
                .map_err(|e| core_failure("initial data", e))
        }
        InitSpec::RandomDecay {
            norm,
            decay_exponent,
        } => Ok(ModeVector::random_decay(
            n_max,
            *norm,
            *decay_exponent,
            config.seed,
        )),
        InitSpec::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::config(format!("cannot read initial data {}: {e}", path.display()))
            })?;
            let data: ModeVector = serde_json::from_str(&text).map_err(|e| {
                Failure::config(format!("invalid initial data {}: {e}", path.display()))
            })?;
            if data.n_max() != n_max {
                return Err(Failure::config(format!(
                    "initial data has truncation {} but the run uses N = {n_max}",
                    data.n_max()
                )));
            }
            Ok(data)
        }
    }
}

/// Enforce the small-data regime unless overridden: the certified decay
/// theory needs `‖g₀‖² ≤ ε₀ = 1/(4 Ĉ₁)` with `Ĉ₁` the probed trilinear
/// constant.
fn guard_small_data(
    config: &RunConfig,
    table: &SpectralTable,
    g0: &ModeVector,
) -> Result<(), Failure> {
    if config.allow_large_data {
        return Ok(());
    }
    let (c1_hat, eps0) = kinetic_spectral::verify::probe_constants(table, 2000, 314159);
    let norm_sq = g0.l2_norm().powi(2);
    if norm_sq > eps0 {
        return Err(Failure::config(format!(
            "‖g₀‖² = {norm_sq:.3e} exceeds the small-data guard ε₀ = {eps0:.3e} \
             (Ĉ₁ = {c1_hat:.3}); pass --allow-large-data to proceed anyway"
        )));
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, Failure> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

fn finish_csv(mut w: std::io::BufWriter<std::fs::File>, path: &Path) -> Result<(), Failure> {
    w.flush()
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

fn cmd_spectrum(config: &RunConfig) -> Result<(), Failure> {
    let (table, from_cache) = load_table(config)?;
    let path = config
        .output_dir
        .join(format!("spectrum_s{:e}_N{}.csv", config.s, config.n_modes));
    let mut w = csv_writer(&path)?;
    let io_err = |e: std::io::Error| Failure::config(format!("write failure: {e}"));
    writeln!(w, "n,lambda,asymptote_ratio,convolution_sum_ratio").map_err(io_err)?;
    for n in 0..=table.n_max() {
        let (asym, conv) = if n >= 2 {
            (table.asymptote_ratio(n), table.convolution_sum_ratio(n))
        } else {
            (0.0, 0.0)
        };
        writeln!(w, "{n},{:.16e},{asym:.16e},{conv:.16e}", table.lambda(n)).map_err(io_err)?;
    }
    finish_csv(w, &path)?;
    println!(
        "spectral table for s = {}, N = {} {} cache; diagnostics at {}",
        config.s,
        config.n_modes,
        if from_cache {
            "reused from"
        } else {
            "written to"
        },
        path.display()
    );
    Ok(())
}

fn solve_run(config: &RunConfig) -> Result<(SpectralTable, ModeVector, SolveOutput), Failure> {
    let (table, _) = load_table(config)?;
    let g0 = build_initial(config, table.n_max())?;
    guard_small_data(config, &table, &g0)?;
    let grid = time_grid(config.t_max, config.t_steps);
    let opts = SolverOptions {
        rk_tol: config.tol.max(1e-13),
        ..SolverOptions::default()
    };
    let output = solve_triangular(&table, &g0, &grid, config.method, &opts)
        .map_err(|e| core_failure("solve", e))?;
    Ok((table, g0, output))
}

fn cmd_solve(config: &RunConfig) -> Result<(SpectralTable, SolveOutput), Failure> {
    let (table, _, output) = solve_run(config)?;
    let path = config.output_dir.join("trajectory.csv");
    let w = csv_writer(&path)?;
    let mut w = w;
    output
        .trajectory
        .write_csv(&mut w)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    finish_csv(w, &path)?;

    if let Some(expsum) = &output.expsum {
        let json_path = config.output_dir.join("expsum.json");
        let file = std::fs::File::create(&json_path)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", json_path.display())))?;
        serde_json::to_writer(std::io::BufWriter::new(file), expsum)
            .map_err(|e| core_failure("exp-sum export", e.into()))?;
        println!(
            "trajectory at {}; closed-form terms ({}) at {}",
            path.display(),
            expsum.term_count(),
            json_path.display()
        );
    } else {
        println!(
            "trajectory at {}{}",
            path.display(),
            if output.used_fallback {
                " (exp-sum term cap hit; numeric fallback used)"
            } else {
                ""
            }
        );
    }
    Ok((table, output))
}

fn cmd_norms(config: &RunConfig) -> Result<(), Failure> {
    let (table, output) = cmd_solve(config)?;
    let c0_hat = fit_c0_hat(&table);
    let path = config.output_dir.join("norms.csv");
    let mut w = csv_writer(&path)?;
    let io_err = |e: std::io::Error| Failure::config(format!("write failure: {e}"));

    write!(w, "t,l2").map_err(io_err)?;
    for tau in NORM_TAUS {
        write!(w, ",shubin_{tau}").map_err(io_err)?;
    }
    writeln!(w, ",logexp_c0").map_err(io_err)?;

    for (t, state) in output
        .trajectory
        .times
        .iter()
        .zip(&output.trajectory.states)
    {
        write!(w, "{t:.16e},{:.16e}", state.l2_norm()).map_err(io_err)?;
        for tau in NORM_TAUS {
            let value = weighted_norm(&table, state, &WeightSpec::Shubin { tau })
                .map_err(|e| core_failure("norms", e))?;
            write!(w, ",{value:.16e}").map_err(io_err)?;
        }
        let logexp = weighted_norm(
            &table,
            state,
            &WeightSpec::LogExp {
                c: c0_hat,
                t: *t,
                s: table.s(),
            },
        )
        .map_err(|e| core_failure("norms", e))?;
        writeln!(w, ",{logexp:.16e}").map_err(io_err)?;
    }
    finish_csv(w, &path)?;
    println!(
        "norms at {} (logexp weight uses fitted c0_hat = {c0_hat:.6})",
        path.display()
    );
    Ok(())
}

fn cmd_verify(config: &RunConfig) -> Result<(), Failure> {
    let cfg = AcceptanceConfig {
        cache_dir: Some(config.cache_dir()),
        tol: config.tol,
    };
    let outcomes = run_acceptance(&cfg).map_err(|e| core_failure("verify", e))?;
    for outcome in &outcomes {
        println!("{}", outcome.display_line());
    }
    let report_path = config.output_dir.join("verify_report.json");
    let file = std::fs::File::create(&report_path)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", report_path.display())))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &outcomes)
        .map_err(|e| core_failure("verify report", e.into()))?;
    println!("report at {}", report_path.display());

    let failed: Vec<&kinetic_spectral::verify::CriterionOutcome> =
        outcomes.iter().filter(|o| !o.pass).collect();
    if let Some(first) = failed.first() {
        return Err(Failure {
            code: EXIT_CERTIFICATION,
            message: format!(
                "certification failure: {} of 12 criteria failed, first is criterion {} ({})",
                failed.len(),
                first.index,
                first.name
            ),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing() {
        assert_eq!(parse_method("expsum").unwrap(), SolveMethod::ExpSum);
        assert_eq!(
            parse_method("adaptive_numeric").unwrap(),
            SolveMethod::AdaptiveNumeric
        );
        assert_eq!(
            parse_method("adaptive-numeric").unwrap(),
            SolveMethod::AdaptiveNumeric
        );
        assert!(parse_method("euler").is_err());
    }

    #[test]
    fn exit_code_classes() {
        let numeric = core_failure(
            "solve",
            CoreError::NumericBlowup {
                mode: 4,
                t: 1.0,
                value: 1e9,
                guard: 1e3,
            },
        );
        assert_eq!(numeric.code, EXIT_NUMERIC);

        let certification = core_failure(
            "verify",
            CoreError::CertificationFailure {
                check: "rates".into(),
                worst_t: 0.5,
                worst_margin: -1.0,
            },
        );
        assert_eq!(certification.code, EXIT_CERTIFICATION);

        let config = core_failure("kernel construction", CoreError::DivergentMoment);
        assert_eq!(config.code, EXIT_CONFIG);
    }

    #[test]
    fn init_spec_round_trip() {
        for raw in [
            "single_mode:2:0.05",
            "random_decay:0.05:2",
            "file:data/init.json",
        ] {
            let spec: InitSpec = raw.parse().unwrap();
            assert_eq!(spec.to_string(), raw);
        }
        assert!("single_mode:2".parse::<InitSpec>().is_err());
        assert!("gaussian:1".parse::<InitSpec>().is_err());
    }
}
