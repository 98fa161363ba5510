use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};
use optomech::analysis::{
    analyze, bistability_probe, hysteresis_sweep, lyapunov_max_with, AnalysisSettings,
};
use optomech::integrator::{convergence_check, integrate, Termination};
use optomech::io::{self, merge_config, Cell, CsvSchema, RunConfig};
use optomech::steady_state::find_fixed_points;
use optomech::sweep::{
    attractor_map, basin_map, stability_map, steady_state_map, Axis, BasinSpec, GridSpec, IcAxis,
    Task,
};
use optomech::{Convention, Error};

#[derive(Parser, Debug)]
#[command(name = "optomech", version, about = "Optomechanical ring-resonator simulations")]
struct Cli {
    /// INI-style configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one setting; repeatable. `--section.key VALUE` works too.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,

    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Equation convention: paper or rederived.
    #[arg(long, global = true)]
    convention: Option<String>,

    /// Write CSV here instead of standard output.
    #[arg(long, short, global = true, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Also write a gnuplot script next to the CSV.
    #[arg(long, global = true)]
    gnuplot: bool,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Integrate one trajectory from `sweep.ic`.
    Simulate,
    /// List steady states and their stability.
    FixedPoints,
    /// Steady-state count over the two-parameter grid.
    SteadyMap,
    /// Linear stability of every steady state over the grid.
    StabilityMap,
    /// Attractor class and exponent over the grid.
    AttractorMap,
    /// Peak diagram along `sweep.param` with state continuation.
    Bifurcation,
    /// Largest Lyapunov exponent of one trajectory.
    Lyapunov,
    /// Basins of attraction over an initial-condition grid.
    Basin,
    /// Compare the attractors reached from `sweep.ic` and `sweep.ic2`.
    Bistability,
    /// Step-halving check of one trajectory.
    Convergence,
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::InvalidParams(_)
            | Error::InvalidConfig(_)
            | Error::InvalidGrid(_)
            | Error::NonFinite(_) => 2,
            Error::Diverged { .. } => 3,
            Error::Io { .. } | Error::Csv { .. } => 4,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::ConfigError> for Failure {
    fn from(e: io::ConfigError) -> Self {
        Error::Config(e).into()
    }
}

/// Rewrite `--section.key VALUE` and `--section.key=VALUE` as `--set`.
fn expand_dotted(args: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.into_iter().peekable();
    while let Some(a) = it.next() {
        let dotted = a
            .strip_prefix("--")
            .filter(|rest| rest.split('=').next().is_some_and(|k| k.contains('.')));
        match dotted {
            Some(rest) if rest.contains('=') => {
                out.push("--set".into());
                out.push(rest.to_string());
            }
            Some(rest) => {
                let value = it.next().unwrap_or_default();
                out.push("--set".into());
                out.push(format!("{rest}={value}"));
            }
            None => out.push(a),
        }
    }
    out
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        merge_config(&mut cfg, &text).map_err(|e| Failure {
            code: 2,
            message: format!("{}: {e}", path.display()),
        })?;
    }
    for s in &cli.set {
        let Some((key, value)) = s.split_once('=') else {
            return Err(io::ConfigError {
                line: 0,
                kind: io::ConfigErrorKind::Syntax,
                message: format!("'{s}' is not of the form section.key=value"),
            }
            .into());
        };
        cfg.apply_override(key.trim(), value)?;
    }
    if let Some(c) = &cli.convention {
        cfg.set("system", "convention", c, 0)?;
    }
    if let Some(w) = cli.workers {
        cfg.set("sweep", "workers", &w.to_string(), 0)?;
    }
    if let Some(p) = &cli.output {
        cfg.output.path = Some(p.clone());
    }
    cfg.output.gnuplot |= cli.gnuplot;
    cfg.check(0)?;
    cfg.system.validate()?;
    Ok(cfg)
}

fn settings(cfg: &RunConfig) -> AnalysisSettings {
    AnalysisSettings {
        renorm_interval: cfg.sweep.renorm_interval,
        method: cfg.sweep.lyapunov_method,
        ..Default::default()
    }
}

fn grid(cfg: &RunConfig, task: Task) -> GridSpec {
    let s = &cfg.sweep;
    let mut g = GridSpec::new(
        Axis::new(s.x_param, s.x_min, s.x_max, s.x_n),
        Axis::new(s.y_param, s.y_min, s.y_max, s.y_n),
        cfg.system,
        task,
    );
    g.config = cfg.integration;
    g.ic = s.ic;
    g.second_ic = s.ic2;
    g.analysis = settings(cfg);
    g.workers = s.workers;
    g
}

fn emit(cfg: &RunConfig, schema: CsvSchema, rows: &[Vec<Cell>]) -> Result<(), Failure> {
    let path = cfg.output.path.as_deref();
    io::write_records(rows, schema, path)?;
    if let (Some(p), true) = (path, cfg.output.gnuplot) {
        match io::write_gnuplot(schema, p) {
            Ok(script) => info!("gnuplot script {}", script.display()),
            Err(e) => warn!("gnuplot script not written: {e}"),
        }
    }
    Ok(())
}

fn diverged(time: f64) -> Failure {
    Error::Diverged { time }.into()
}

fn run(command: Command, cfg: &RunConfig) -> Result<(), Failure> {
    let p = &cfg.system;
    let ic = &cfg.sweep.ic;
    match command {
        Command::Simulate => {
            let t = integrate(ic, p, &cfg.integration)?;
            emit(cfg, CsvSchema::Trajectory, &io::trajectory_rows(&t))?;
            if let Termination::Diverged { time } = t.termination {
                return Err(diverged(time));
            }
        }
        Command::FixedPoints => {
            let search = find_fixed_points(p)?;
            if search.all_seeds_failed {
                warn!("no Newton seed converged");
            }
            for d in &search.discrepancies {
                warn!("closed-form discrepancy: {d:?}");
            }
            emit(cfg, CsvSchema::FixedPoints, &io::fixed_point_rows(&search.points))?;
        }
        Command::SteadyMap => {
            let r = steady_state_map(&grid(cfg, Task::Count))?;
            emit(cfg, CsvSchema::CountMap, &io::count_map_rows(&r))?;
        }
        Command::StabilityMap => {
            let r = stability_map(&grid(cfg, Task::Stability))?;
            emit(cfg, CsvSchema::StabilityMap, &io::stability_map_rows(&r))?;
        }
        Command::AttractorMap => {
            let r = attractor_map(&grid(cfg, Task::Attractor))?;
            let failed = r.iter().filter(|x| x.error.is_some()).count();
            if failed > 0 {
                warn!("{failed} grid points failed");
            }
            emit(cfg, CsvSchema::AttractorMap, &io::attractor_map_rows(&r))?;
        }
        Command::Bifurcation => {
            let s = &cfg.sweep;
            let mut points = Vec::new();
            for dir in s.direction.directions() {
                points.extend(hysteresis_sweep(
                    p,
                    s.param,
                    (s.min, s.max),
                    s.n,
                    dir,
                    &cfg.integration,
                    ic,
                    &settings(cfg),
                )?);
            }
            for q in points.iter().filter(|q| q.restarted) {
                warn!("{} = {} diverged; chain restarted from the origin", s.param, q.value);
            }
            emit(cfg, CsvSchema::Peaks, &io::peak_rows(&points))?;
        }
        Command::Lyapunov => {
            let l = lyapunov_max_with(
                ic,
                p,
                &cfg.integration,
                cfg.sweep.renorm_interval,
                cfg.sweep.lyapunov_method,
            )?;
            if !l.converged {
                warn!("exponent not converged (drift {:e})", l.drift);
            }
            emit(cfg, CsvSchema::Lyapunov, &io::lyapunov_rows(&l))?;
        }
        Command::Basin => {
            let s = &cfg.sweep;
            let spec = BasinSpec {
                params: *p,
                x: IcAxis {
                    component: s.ic_x,
                    min: s.ic_x_min,
                    max: s.ic_x_max,
                    n: s.ic_x_n,
                },
                y: IcAxis {
                    component: s.ic_y,
                    min: s.ic_y_min,
                    max: s.ic_y_max,
                    n: s.ic_y_n,
                },
                base_ic: s.ic,
                config: cfg.integration,
                analysis: settings(cfg),
                workers: s.workers,
            };
            emit(cfg, CsvSchema::Basin, &io::basin_rows(&basin_map(&spec)?))?;
        }
        Command::Bistability => {
            let Some(ic2) = &cfg.sweep.ic2 else {
                return Err(io::ConfigError {
                    line: 0,
                    kind: io::ConfigErrorKind::Constraint,
                    message: "bistability needs sweep.ic2".into(),
                }
                .into());
            };
            let r = bistability_probe(p, ic, ic2, &cfg.integration, &settings(cfg))?;
            emit(cfg, CsvSchema::Bistability, &io::bistability_rows(&r))?;
            if let Some(time) = r.a.diverged_at.or(r.b.diverged_at) {
                return Err(diverged(time));
            }
        }
        Command::Convergence => {
            let r = convergence_check(ic, p, &cfg.integration)?;
            emit(cfg, CsvSchema::Convergence, &io::convergence_rows(&r))?;
            let class = analyze(ic, p, &cfg.integration, &settings(cfg))?.class;
            info!("class at the coarse step: {class}");
        }
    }
    Ok(())
}

fn describe(cfg: &RunConfig, output: Option<&Path>) {
    info!(
        "convention {}, dt {}, T {}, transient {}, output {}",
        cfg.system.convention,
        cfg.integration.dt,
        cfg.integration.t_total,
        cfg.integration.t_transient,
        output.map_or("stdout".into(), |p| p.display().to_string())
    );
    if cfg.system.convention == Convention::PaperVerbatim {
        info!("verbatim equations: trajectories may diverge");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(expand_dotted(std::env::args())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = load_config(&cli).and_then(|cfg| {
        describe(&cfg, cfg.output.path.as_deref());
        run(cli.command, &cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("optomech: {}", f.message.lines().next().unwrap_or(""));
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn dotted_flags_become_overrides() {
        let out = expand_dotted(strings(&[
            "optomech",
            "simulate",
            "--system.jm",
            "0.5",
            "--integration.dt=1e-3",
            "--workers",
            "2",
        ]));
        assert_eq!(
            out,
            strings(&[
                "optomech",
                "simulate",
                "--set",
                "system.jm=0.5",
                "--set",
                "integration.dt=1e-3",
                "--workers",
                "2"
            ])
        );
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(Failure::from(Error::Diverged { time: 1.0 }).code, 3);
        assert_eq!(Failure::from(Error::InvalidParams("x".into())).code, 2);
        assert_eq!(
            Failure::from(Error::Csv {
                path: "a".into(),
                message: "b".into()
            })
            .code,
            4
        );
    }
}
