use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gapspectra::asymptotics::{
    predict_dirac_kappa_form, predict_dirac_long, predict_dirac_second_order, predict_schrodinger_long,
    predict_schrodinger_short,
};
use gapspectra::birman_schwinger::find_bound_state;
use gapspectra::grid::{dirac_eigen_in_gap, schrodinger_ground_state, GridSpec};
use gapspectra::harness::{run_and_write, write_csv, write_json, SweepConfig, SweepReport};
use gapspectra::minmax::solve_minmax;
use gapspectra::moments::compute_moments;
use gapspectra::{Error, Result};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "gapspectra", version, about = "Weak-coupling eigenvalues in the gap of 1D Dirac operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config (same schema for every subcommand).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridFlags {
    /// Half-length of the grid interval.
    #[arg(long = "L")]
    l: Option<f64>,
    /// Number of grid nodes.
    #[arg(long = "N")]
    n: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    Dirac,
    Schrodinger,
}

#[derive(Subcommand)]
enum Command {
    /// Moment matrices U, F+, F-, and the moment norms.
    Moments(Common),
    /// Closed-form predictions for each eps.
    Predict(Common),
    /// Birman-Schwinger roots for each eps.
    SolveBs(Common),
    /// Finite-difference eigenvalues for each eps.
    SolveGrid {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridFlags,
        /// Real-part window `a,b` inside the gap.
        #[arg(long, value_delimiter = ',')]
        window: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "dirac")]
        operator: Operator,
    },
    /// Min-max levels gamma0, gamma1 for each eps.
    SolveMinmax {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Full sweep with CSV/JSON outputs.
    Sweep(Common),
    /// Coefficient and long-range fits.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Refit an existing report instead of running the sweep.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn grid_override(base: GridSpec, flags: &GridFlags) -> GridSpec {
    GridSpec { l: flags.l.unwrap_or(base.l), n: flags.n.unwrap_or(base.n), ..base }
}

fn emit(value: &Value, out: Option<&Path>, file: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(file), text + "\n")?;
    }
    Ok(())
}

fn per_eps<F>(cfg: &SweepConfig, f: F) -> Result<Value>
where
    F: Fn(f64) -> Result<Value>,
{
    let rows = cfg.eps_list.iter().map(|&eps| Ok(json!({"eps": eps, "result": f(eps)?}))).collect::<Result<Vec<_>>>()?;
    Ok(Value::Array(rows))
}

fn config_of(common: &Common) -> Result<(SweepConfig, gapspectra::potentials::PotentialSpec)> {
    let cfg = SweepConfig::load(&common.config)?;
    let v = cfg.validate()?;
    Ok((cfg, v))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Moments(common) => {
            let (cfg, v) = config_of(&common)?;
            let ms = compute_moments(&v, cfg.m, cfg.bs.moment_tol)?;
            emit(&serde_json::to_value(ms)?, common.out.as_deref(), "moments.json")
        }
        Command::Predict(common) => {
            let (cfg, v) = config_of(&common)?;
            let ms = compute_moments(&v, cfg.m, cfg.bs.moment_tol).ok();
            let m = cfg.m;
            let value = per_eps(&cfg, |eps| {
                let ok = |r: Result<_>| r.ok().map(|p| serde_json::to_value(p).unwrap());
                let u = ms.as_ref().map(|s| (s.u[(0, 0)], s.sch_cross));
                Ok(json!({
                    "dirac_second_order": ms.as_ref().and_then(|s| ok(predict_dirac_second_order(s, m, eps, cfg.threshold))),
                    "dirac_kappa_form": ms.as_ref().and_then(|s| ok(predict_dirac_kappa_form(s, m, eps, cfg.threshold))),
                    "schrodinger_short_one_term": u.and_then(|(u, c)| ok(predict_schrodinger_short(u, c, m, eps, 1))),
                    "schrodinger_short_two_term": u.and_then(|(u, c)| ok(predict_schrodinger_short(u, c, m, eps, 2))),
                    "dirac_long": ok(predict_dirac_long(m, eps)),
                    "schrodinger_long": ok(predict_schrodinger_long(m, eps)),
                }))
            })?;
            emit(&value, common.out.as_deref(), "predictions.json")
        }
        Command::SolveBs(common) => {
            let (cfg, v) = config_of(&common)?;
            let value =
                per_eps(&cfg, |eps| Ok(serde_json::to_value(find_bound_state(&v, cfg.m, eps, cfg.threshold, &cfg.bs)?)?))?;
            emit(&value, common.out.as_deref(), "bs.json")
        }
        Command::SolveGrid { common, grid, window, operator } => {
            let (cfg, v) = config_of(&common)?;
            let g = grid_override(cfg.grid, &grid);
            g.validate()?;
            let value = match operator {
                Operator::Dirac => {
                    let mut p = cfg.problem(&v, 0.0);
                    if let Some(w) = window {
                        if w.len() != 2 {
                            return Err(Error::Config(format!("--window takes two values a,b, got {w:?}")));
                        }
                        p.window = Some((w[0], w[1]));
                    }
                    let win = p.window();
                    per_eps(&cfg, |eps| Ok(serde_json::to_value(dirac_eigen_in_gap(&v, cfg.m, eps, &g, win)?)?))?
                }
                Operator::Schrodinger => {
                    if v.entry(0, 0, 0.0).im != 0.0 || !v.is_hermitian() {
                        return Err(Error::Config("the Schrodinger operator needs a real V11".into()));
                    }
                    per_eps(&cfg, |eps| {
                        let src = v.clone();
                        Ok(serde_json::to_value(schrodinger_ground_state(move |x| src.entry(0, 0, x).re, cfg.m, eps, &g)?)?)
                    })?
                }
            };
            emit(&value, common.out.as_deref(), "grid.json")
        }
        Command::SolveMinmax { common, grid } => {
            let (cfg, v) = config_of(&common)?;
            let g = grid_override(cfg.minmax_grid(), &grid);
            g.validate()?;
            let value = per_eps(&cfg, |eps| {
                let r = solve_minmax(&v, cfg.m, eps, &g)?;
                Ok(json!({"gamma0": r.gamma0, "gamma1": r.gamma1, "mu_trace": r.mu_trace, "at_threshold": r.at_threshold}))
            })?;
            emit(&value, common.out.as_deref(), "minmax.json")
        }
        Command::Sweep(common) => {
            let mut cfg = SweepConfig::load(&common.config)?;
            if common.out.is_some() {
                cfg.outputs.csv.get_or_insert_with(|| "sweep.csv".into());
                cfg.outputs.json.get_or_insert_with(|| "report.json".into());
            }
            let report = run_and_write(&cfg, common.out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Fit { common, report } => {
            let cfg = SweepConfig::load(&common.config)?;
            let report: SweepReport = match report {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                    let mut r: SweepReport = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
                    r.refit();
                    r
                }
                None => gapspectra::harness::run_sweep(&cfg)?,
            };
            if let Some(dir) = &common.out {
                write_csv(&report, &dir.join("sweep.csv"))?;
                write_json(&report, &dir.join("report.json"))?;
            }
            emit(&serde_json::to_value(&report.fitted)?, common.out.as_deref(), "fit.json")
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
