use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use carbon_radner::config_file::{self, LoadedConfig};
use carbon_radner::tables::{self, TableSelector};
use carbon_radner::{calibrate, mc, price, solver, Error, Result};

#[derive(Parser)]
#[command(
    name = "carbon-radner",
    version,
    about = "Equilibrium calculator for a multi-firm emissions cap-and-trade market"
)]
struct Cli {
    /// Market description file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory the CSV artifacts are written into.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium and write solution.csv.
    Solve,
    /// Run the benchmark sweeps and write table CSVs plus manifest.csv.
    Tables {
        /// all, table2, table2_left, table2_right, table3, table4,
        /// table4_kc1, table4_kd4, table5, table5_mu, table5_sigma, table6
        #[arg(long, default_value = "all")]
        which: String,
    },
    /// Write elasticity-versus-time curves of the price volatility.
    Figures,
    /// Validate the solved equilibrium against Monte Carlo estimates.
    Simulate {
        /// Number of simulated paths (default from the [run] section).
        #[arg(long)]
        paths: Option<usize>,
        /// Simulation seed (default from the [run] section).
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the first N paths to paths.csv.
        #[arg(long, value_name = "N")]
        dump_paths: Option<usize>,
    },
    /// Re-derive the quadratic-cost ladder hitting the target initial price.
    Calibrate,
}

fn main() -> ExitCode {
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let raw = match std::env::var("CARBON_RADNER_THREADS") {
        Ok(raw) => raw,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(format!("CARBON_RADNER_THREADS: {e}")),
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or(format!("CARBON_RADNER_THREADS must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("CARBON_RADNER_THREADS: {e}"))
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Dimension(_) | Error::Invalid(_) => 2,
        Error::NoConvergence { .. } | Error::SingularHessian | Error::Bracket { .. } => 3,
        Error::BoundaryEquilibrium => 4,
        Error::Io(_) => 1,
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config_path = cli
        .config
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let loaded = config_file::load_config(&config_path)?;
    fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Solve => cmd_solve(&loaded, &cli.out),
        Command::Tables { which } => cmd_tables(&loaded, &cli.out, &which),
        Command::Figures => cmd_figures(&loaded, &cli.out),
        Command::Simulate { paths, seed, dump_paths } => {
            cmd_simulate(&loaded, &cli.out, paths, seed, dump_paths)
        }
        Command::Calibrate => cmd_calibrate(&loaded, &cli.out),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_solve(loaded: &LoadedConfig, out: &Path) -> Result<ExitCode> {
    let started = Instant::now();
    let solution = solver::solve_reduced(&loaded.market)?;
    let elapsed = started.elapsed();
    let diag = &solution.diagnostics;
    let (alpha0, alpha1) = solution.plan.reduced_parts().expect("reduced plan");
    let horizon = loaded.market.horizon();

    println!("initial allowance price   {:.4} EUR/ton", solution.initial_price);
    println!("expected excess emissions {:.6e} tons", solution.expected_excess);
    println!("social cost               {:.6e} EUR", solution.social_cost);
    println!("abatement plan (rate at t=0, rate over t=1..{}):", horizon - 1);
    for (i, name) in loaded.firm_names.iter().enumerate() {
        println!("  {name:<12} {:.6}  {:.6}", alpha0[i], alpha1[i]);
    }
    println!(
        "solved in {} iterations, residual {:.2e}, min Hessian eigenvalue {:.4e}, {:.1} ms",
        diag.iterations,
        diag.residual_norm,
        diag.hessian_min_eigenvalue,
        elapsed.as_secs_f64() * 1e3
    );
    if diag.boundary_flag {
        println!("note: the optimal plan sits on the feasibility boundary");
    }

    let mut csv = String::from("key,value\n");
    csv.push_str(&format!("initial_price_eur,{:.17e}\n", solution.initial_price));
    csv.push_str(&format!("expected_excess_emissions_tons,{:.17e}\n", solution.expected_excess));
    csv.push_str(&format!("social_cost_eur,{:.17e}\n", solution.social_cost));
    csv.push_str(&format!("iterations,{}\n", diag.iterations));
    csv.push_str(&format!("residual_norm,{:.17e}\n", diag.residual_norm));
    csv.push_str(&format!("boundary,{}\n", diag.boundary_flag));
    csv.push_str(&format!("hessian_min_eigenvalue,{:.17e}\n", diag.hessian_min_eigenvalue));
    for (i, name) in loaded.firm_names.iter().enumerate() {
        csv.push_str(&format!("alpha0_{name},{:.17e}\n", alpha0[i]));
        csv.push_str(&format!("alpha1_{name},{:.17e}\n", alpha1[i]));
    }
    write_file(out, "solution.csv", &csv)?;

    Ok(if diag.boundary_flag { ExitCode::from(4) } else { ExitCode::SUCCESS })
}

fn cmd_tables(loaded: &LoadedConfig, out: &Path, which: &str) -> Result<ExitCode> {
    let selector: TableSelector = which.parse()?;
    let bundle = tables::build_tables(&loaded.market, &loaded.firm_names, selector)?;
    for artifact in &bundle.artifacts {
        write_file(out, &format!("{}.csv", artifact.name), &artifact.to_csv())?;
    }
    write_file(out, "manifest.csv", &tables::manifest_csv(&bundle.manifest))?;
    if bundle.benchmark {
        let passed = bundle.manifest.iter().filter(|e| e.pass).count();
        println!("manifest: {passed}/{} reference cells pass", bundle.manifest.len());
    } else {
        eprintln!("note: market differs from the benchmark; manifest has no reference cells");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_figures(loaded: &LoadedConfig, out: &Path) -> Result<ExitCode> {
    for figure in tables::build_figures(&loaded.market, &loaded.firm_names)? {
        write_file(out, &format!("{}.csv", figure.name), &figure.to_csv())?;
    }
    Ok(ExitCode::SUCCESS)
}

struct GateRow {
    check: String,
    estimate: f64,
    standard_error: Option<f64>,
    reference: Option<f64>,
    z: Option<f64>,
    pass: bool,
}

impl GateRow {
    fn three_se(check: String, estimate: f64, se: f64, reference: f64) -> Self {
        let z = if se == 0.0 {
            if estimate == reference {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (estimate - reference) / se
        };
        GateRow {
            check,
            estimate,
            standard_error: Some(se),
            reference: Some(reference),
            z: Some(z),
            pass: z.abs() <= 3.0,
        }
    }
}

fn optional(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

fn cmd_simulate(
    loaded: &LoadedConfig,
    out: &Path,
    paths: Option<usize>,
    seed: Option<u64>,
    dump_paths: Option<usize>,
) -> Result<ExitCode> {
    let n_paths = paths.unwrap_or(loaded.run.n_paths);
    let seed = seed.unwrap_or(loaded.run.seed);
    if n_paths == 0 {
        return Err(Error::Invalid("--paths must be positive".into()));
    }
    let config = &loaded.market;
    let horizon = config.horizon();
    let started = Instant::now();
    let solution = solver::solve_reduced(config)?;
    let ensemble = mc::simulate(config, &solution.plan, n_paths, seed)?;

    let mut rows = Vec::new();
    let (ee_est, ee_se) = mc::estimate_excess_emissions(&ensemble);
    rows.push(GateRow::three_se(
        "excess_emissions".into(),
        ee_est,
        ee_se,
        solution.expected_excess,
    ));
    let check_times: Vec<usize> =
        [horizon / 4, horizon / 2, 3 * horizon / 4].into_iter().filter(|&t| t >= 1).collect();
    for &t in &check_times {
        let (mean, se) = ensemble.price_mean_se(t);
        rows.push(GateRow::three_se(
            format!("price_mean_t{t}"),
            mean,
            se,
            solution.initial_price,
        ));
    }
    let martingale = mc::check_martingale(&ensemble);
    rows.push(GateRow {
        check: "martingale_worst_z".into(),
        estimate: martingale,
        standard_error: None,
        reference: None,
        z: None,
        pass: martingale <= 3.0,
    });
    for &t in &check_times {
        let (var, se) = mc::estimate_price_variance(&ensemble, t);
        rows.push(GateRow::three_se(
            format!("price_variance_t{t}"),
            var,
            se,
            price::price_variance(config, &solution.plan, t)?,
        ));
    }

    let clearing_paths = n_paths.min(1000);
    let mut worst_clearing = 0.0f64;
    for path in 0..clearing_paths {
        let strategy = mc::trading_positions(&ensemble, path)?;
        for t in 0..=horizon {
            let total: f64 = strategy.positions.iter().map(|firm| firm[t]).sum();
            worst_clearing = worst_clearing.max(total.abs());
        }
    }
    rows.push(GateRow {
        check: format!("clearing_worst_abs_{clearing_paths}_paths"),
        estimate: worst_clearing,
        standard_error: None,
        reference: Some(0.0),
        z: None,
        pass: worst_clearing == 0.0,
    });

    let alternatives_per_firm = 100usize.div_ceil(config.n_firms());
    let optimality = mc::check_firm_optimality(config, &solution.plan, &ensemble, alternatives_per_firm)?;
    rows.push(GateRow {
        check: format!("optimality_worst_margin_{}_deviations", optimality.checks.len()),
        estimate: optimality.worst_margin,
        standard_error: None,
        reference: None,
        z: None,
        pass: optimality.n_violations == 0,
    });

    let mut csv = String::from("check,estimate,standard_error,reference,z,status\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{:.6e},{},{},{},{}\n",
            row.check,
            row.estimate,
            optional(row.standard_error),
            optional(row.reference),
            row.z.map(|z| format!("{z:.3}")).unwrap_or_default(),
            if row.pass { "pass" } else { "fail" }
        ));
    }
    write_file(out, "simulation_report.csv", &csv)?;

    if let Some(n_dump) = dump_paths {
        let mut buffer = Vec::new();
        ensemble.dump_paths_csv(&mut buffer, n_dump)?;
        let path = out.join("paths.csv");
        fs::File::create(&path)?.write_all(&buffer)?;
        println!("wrote {}", path.display());
    }

    let failures: Vec<&str> =
        rows.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect();
    println!(
        "simulated {n_paths} paths (seed {seed}) in {:.1} s: {}/{} gates pass",
        started.elapsed().as_secs_f64(),
        rows.len() - failures.len(),
        rows.len()
    );
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failed gates: {}", failures.join(", "));
        Ok(ExitCode::from(1))
    }
}

fn cmd_calibrate(loaded: &LoadedConfig, out: &Path) -> Result<ExitCode> {
    let settings = loaded
        .calibration
        .as_ref()
        .ok_or_else(|| Error::Config("config has no [calibration] section".into()))?;
    if let Some(declared) = &settings.declared {
        for warning in calibrate::lint_emission_calibration(&loaded.market, declared) {
            eprintln!("warning: {warning}");
        }
    }
    let spec = settings.spec_for(&loaded.market);
    let gammas = calibrate::calibrate_gamma(&loaded.market, &spec)?;

    let mut calibrated = loaded.market.clone();
    for (firm, gamma) in calibrated.firms.iter_mut().zip(&gammas) {
        firm.quadratic_cost = *gamma;
    }
    let solution = solver::solve_reduced(&calibrated)?;
    println!(
        "calibrated to initial price {:.6} EUR/ton (target {} EUR/ton)",
        solution.initial_price, settings.target_price
    );
    let mut csv = String::from("firm,gamma_eur_per_ton2\n");
    for (name, gamma) in loaded.firm_names.iter().zip(&gammas) {
        println!("  {name:<12} gamma = {gamma:.12e}");
        csv.push_str(&format!("{name},{gamma:.17e}\n"));
    }
    write_file(out, "calibration.csv", &csv)?;
    Ok(ExitCode::SUCCESS)
}
