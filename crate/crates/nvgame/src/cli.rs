//! Command-line front end. [`run`] does all the work so tests can drive it
//! with in-memory streams.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use nvgame_core::coop::{build_deterministic_game, least_core};
use nvgame_core::distributions::independent_joint;
use nvgame_core::newsvendor::{optimal_order, worst_case_grand_order};
use nvgame_core::robust::{
    build_vmax_table_with, imputation_exists, robust_core_report, robust_least_core_with,
    verify_rcore2, vmax, Decision,
};
use nvgame_core::stress::{gen_instance, run_stress_with};
use nvgame_core::Coalition;

use crate::error::exit;
use crate::format::{sig, sig_list, write_stress_csv};
use crate::io::{read_config, read_decision, read_instance, write_json};
use crate::parallel::PoolExecutor;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "nvgame",
    version,
    about = "Robust newsvendor cooperative games with known block marginals",
    after_help = "Coalitions are decimal bitmasks: bit i stands for retailer i, so 5 is {0,2}.\n\
                  Exit codes: 0 success, 2 input error, 3 solver failure, 4 invalid model \
                  (no order gives the grand coalition positive worst-case profit)."
)]
pub struct Cli {
    /// Worker threads for table construction and stress runs [default: all cores]
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robust core decision, or the robust least core when the core is empty
    Solve {
        instance: PathBuf,
        /// Order tolerance of the least-core search [default: 1e-4 of the interval]
        #[arg(long)]
        y_tol: Option<f64>,
        /// Also write the decision as JSON
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Least core of the game under the independent joint distribution
    DetSolve { instance: PathBuf },
    /// Worst-case payoff ratios at a grand-coalition order
    Vmax {
        instance: PathBuf,
        #[arg(long)]
        y: f64,
        /// Single coalition as a decimal bitmask; omit for the whole table
        #[arg(long, value_name = "MASK")]
        coalition: Option<u64>,
    },
    /// Excess statistics under contaminated distributions, as CSV
    Stress {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// CSV destination [default: standard output]
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Append one row per lambda pooled over instances (id `all`)
        #[arg(long)]
        pooled: bool,
    },
    /// Random instance from an experiment configuration
    Gen {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Instance number within the experiment
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Check a decision against the robust core conditions
    Verify {
        instance: PathBuf,
        #[arg(long, value_name = "FILE")]
        decision: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                exit::INPUT
            } else {
                let _ = write!(out, "{text}");
                exit::OK
            };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn line(out: &mut dyn Write, key: &str, value: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{key}: {value}")?;
    Ok(())
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let exec = PoolExecutor::new(cli.threads)?;
    match cli.command {
        Command::Solve {
            instance,
            y_tol,
            out: file,
        } => {
            if let Some(t) = y_tol {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(CliError::Usage(format!("--y-tol {t} must be positive")));
                }
            }
            let inst = read_instance(&instance)?;
            let report = robust_core_report(&exec, &inst)?;
            let (decision, epsilon) = match report.decision() {
                Some(d) => {
                    line(out, "core", "nonempty")?;
                    (d, report.sigma)
                }
                None => {
                    let lc = robust_least_core_with(&exec, &inst, y_tol)?;
                    line(out, "core", "empty")?;
                    line(out, "sigma at worst-case order", sig(lc.sigma_at_wc))?;
                    (lc.decision, lc.epsilon)
                }
            };
            line(out, "y", sig(decision.y))?;
            line(out, "z", sig_list(&decision.z))?;
            line(out, "epsilon", sig(epsilon))?;
            if let Some(path) = file {
                write_json(&path, &decision)?;
            }
        }
        Command::DetSolve { instance } => {
            let inst = read_instance(&instance)?;
            let q = independent_joint(&inst)?;
            let grand = optimal_order(&inst, &q, inst.grand())?;
            let game = build_deterministic_game(&inst, &q)?;
            let (x, s) = least_core(&game)?;
            line(out, "core", if s <= 1e-9 { "nonempty" } else { "empty" })?;
            line(out, "y", sig(grand.y_star))?;
            line(out, "grand profit", sig(grand.value))?;
            line(out, "x", sig_list(&x))?;
            if grand.value > 0.0 {
                let z: Vec<f64> = x.iter().map(|v| v / grand.value).collect();
                line(out, "z", sig_list(&z))?;
            }
            line(out, "epsilon", sig(s))?;
        }
        Command::Vmax {
            instance,
            y,
            coalition,
        } => {
            let inst = read_instance(&instance)?;
            let n = inst.num_players();
            if !(y.is_finite() && y >= 0.0) {
                return Err(CliError::Usage(format!(
                    "--y {y} must be finite and nonnegative"
                )));
            }
            worst_case_grand_order(&inst)?;
            match coalition {
                Some(mask) => {
                    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                    if mask == 0 || mask >= full {
                        return Err(CliError::Usage(format!(
                            "--coalition {mask}: expected a nonempty proper coalition, 1..={}",
                            full - 1
                        )));
                    }
                    let s = Coalition(mask);
                    let e = vmax(&inst, y, s)?;
                    line(out, "coalition", s)?;
                    line(out, "value", sig(e.value))?;
                    line(out, "gamma", sig(e.gamma))?;
                }
                None => {
                    let table = build_vmax_table_with(&exec, &inst, y)?;
                    line(out, "worst-case grand profit", sig(table.grand.value))?;
                    writeln!(out, "mask coalition value gamma")?;
                    for (s, e) in table.iter() {
                        writeln!(out, "{} {} {} {}", s.bits(), s, sig(e.value), sig(e.gamma))?;
                    }
                }
            }
        }
        Command::Stress {
            config,
            out: file,
            pooled,
        } => {
            let cfg = read_config(&config)?;
            let stats = run_stress_with(&exec, &cfg)?;
            let mut rows = stats.rows.clone();
            if pooled {
                rows.extend(stats.pooled(&cfg.lambda_grid));
            }
            match file {
                Some(path) => {
                    let f = std::fs::File::create(&path).map_err(|source| CliError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    write_stress_csv(std::io::BufWriter::new(f), &rows)?;
                }
                None => write_stress_csv(&mut *out, &rows)?,
            }
            writeln!(
                err,
                "{} instances, {} degenerate samples excluded",
                stats.instances.len(),
                stats.degenerate_total()
            )?;
        }
        Command::Gen {
            config,
            out: path,
            index,
        } => {
            let cfg = read_config(&config)?;
            let seed = cfg.instance_seed(index);
            let inst = gen_instance(&cfg, seed)?;
            write_json(&path, &inst)?;
            line(out, "wrote", path.display())?;
            line(out, "seed", seed)?;
        }
        Command::Verify {
            instance,
            decision,
            tol,
        } => {
            let inst = read_instance(&instance)?;
            let d: Decision = read_decision(&decision)?;
            let (exists, cert) = imputation_exists(&inst)?;
            let core = verify_rcore2(&inst, &d, tol)?;
            line(out, "robust core decision", core)?;
            line(
                out,
                "z sums to one",
                (d.z.iter().sum::<f64>() - 1.0).abs() <= tol,
            )?;
            line(out, "imputation exists", exists)?;
            line(out, "singleton ratio sum", sig(cert.sum))?;
            line(out, "imputation z", sig_list(&cert.z))?;
        }
    }
    Ok(())
}
