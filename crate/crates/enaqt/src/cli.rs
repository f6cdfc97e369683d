//! Command-line front end: `evolve`, `sweep`, `efficiency` and `lqu`
//! subcommands over the simulation engine.
//!
//! The config file holds the physics (model JSON per the model module);
//! flags hold per-run experiment knobs and override file values. Every
//! run prints a summary JSON to stdout that embeds the fully resolved
//! configuration and the crate version. Exit codes are stable: 0 on
//! success, 2 for validation/configuration problems, 3 for numerical
//! failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::correlations::{
    attach_lqu, embed_single_excitation, lqu_general, lqu_single_excitation, LquResult,
    PartitionSpec,
};
use crate::dynamics::{
    build_lindbladian, default_dt, efficiency_by_integration, efficiency_direct, propagate_expm,
    time_grid, write_trajectory_csv,
};
use crate::error::{Error, Result};
use crate::experiments::{
    record_representative_trajectories, run_dephasing_sweep, summarize_sweep, write_sweep_csv,
    EfficiencyMethod, SweepConfig, SweepSummary,
};
use crate::linalg::CMatrix;
use crate::model::{fmo3_preset, localized_state, ModelConfig, NetworkModel};

#[derive(Parser, Debug)]
#[command(
    name = "enaqt",
    version,
    about = "Dephasing-assisted exciton transport and LQU dynamics in a small excitonic network"
)]
pub struct Cli {
    /// Bound the worker pool used for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate one trajectory and write it as CSV.
    Evolve(EvolveArgs),
    /// Sweep the dephasing rate, recording eta and the LQU flux.
    Sweep(SweepArgs),
    /// Evaluate the transport efficiency at one dephasing rate.
    Efficiency(EfficiencyArgs),
    /// Evaluate the LQU of a site-block state.
    Lqu(LquArgs),
}

/// Physics source and overrides shared by all model-driven subcommands.
#[derive(Args, Debug)]
struct ModelArgs {
    /// Model config JSON; the built-in three-site network when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Uniform dephasing rate override, ps^-1.
    #[arg(long)]
    gamma: Option<f64>,

    /// Uniform dissipation rate override, ps^-1.
    #[arg(long)]
    dissipation: Option<f64>,

    /// Sink rate override, ps^-1.
    #[arg(long)]
    sink_rate: Option<f64>,

    /// Initially excited site (1-based).
    #[arg(long)]
    initial_site: Option<usize>,
}

impl ModelArgs {
    fn resolve(&self) -> Result<(NetworkModel, usize)> {
        let (mut model, mut initial_site) = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                let cfg = ModelConfig::parse(&text)?;
                let site = cfg.initial_site;
                (cfg.to_model()?, site)
            }
            None => (fmo3_preset(), 1),
        };
        if let Some(rate) = self.dissipation {
            model = model.with_uniform_dissipation(rate)?;
        }
        if let Some(rate) = self.sink_rate {
            model = model.with_sink_rate(rate)?;
        }
        if let Some(site) = self.initial_site {
            initial_site = site;
        }
        Ok((model, initial_site))
    }

    /// Per-site dephasing rates implied by the `--gamma` flag, if given.
    fn gamma_override(&self, n_sites: usize) -> Result<Option<Vec<f64>>> {
        match self.gamma {
            Some(g) => {
                if !(g.is_finite() && g >= 0.0) {
                    return Err(Error::Validation(format!(
                        "gamma must be finite and nonnegative, got {g}"
                    )));
                }
                Ok(Some(vec![g; n_sites]))
            }
            None => Ok(None),
        }
    }
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Propagation horizon, ps.
    #[arg(long, default_value_t = 20.0)]
    t_end: f64,

    /// Output grid step, ps; defaults to the rate-dependent rule.
    #[arg(long)]
    dt: Option<f64>,

    /// Comma-separated observables: populations and/or lqu.
    #[arg(long, default_value = "populations", value_delimiter = ',')]
    observables: Vec<String>,

    /// Renormalize the site block before the LQU evaluation.
    #[arg(long, default_value_t = false)]
    lqu_normalize: bool,

    /// Trajectory CSV path.
    #[arg(long, short, default_value = "trajectory.csv")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Dephasing grid as min:max:points (log-spaced), ps^-1.
    #[arg(long, default_value = "1e-6:1e4:121")]
    gamma_grid: String,

    /// Efficiency evaluation: direct or integrate.
    #[arg(long, default_value = "direct")]
    method: String,

    /// Horizon of the LQU flux trajectories, ps.
    #[arg(long, default_value_t = 20.0)]
    horizon: f64,

    /// Plateau detection window, ps.
    #[arg(long, default_value_t = 2.0)]
    plateau_window: f64,

    /// Plateau detection tolerance.
    #[arg(long, default_value_t = 1e-3)]
    plateau_tol: f64,

    /// Dephasing rates for full trajectory recordings, ps^-1.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-6, 12.07, 1e4])]
    trajectory_gammas: Vec<f64>,

    /// Directory for per-rate trajectory CSVs (skipped when omitted).
    #[arg(long)]
    trajectories_dir: Option<PathBuf>,

    /// Seed for randomized diagnostics (the sweep itself is
    /// deterministic).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Sweep CSV path.
    #[arg(long, short, default_value = "sweep.csv")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct EfficiencyArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Efficiency evaluation: direct or integrate.
    #[arg(long, default_value = "direct")]
    method: String,

    /// Integration horizon, ps (integrate method).
    #[arg(long, default_value_t = 2e4)]
    t_max: f64,

    /// Site-drain tolerance (integrate method).
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args, Debug)]
struct LquArgs {
    /// Site block as inline JSON (rows of numbers or [re, im] pairs) or
    /// a path to a file holding that JSON.
    #[arg(long)]
    state: String,

    /// Evaluation path: single (fast, any block size) or general
    /// (embedded qubit-qudit form, 3-site blocks).
    #[arg(long, default_value = "single")]
    method: String,

    /// Renormalize the block to unit trace first.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    normalize: bool,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<String> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        // Ignore a pool that is already in place (tests drive execute()
        // repeatedly in one process).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match cli.command {
        Command::Evolve(args) => cmd_evolve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Efficiency(args) => cmd_efficiency(args),
        Command::Lqu(args) => cmd_lqu(args),
    }
}

#[derive(Debug, Serialize)]
struct FinalState {
    p_g: f64,
    sites: Vec<f64>,
    p_rc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lqu: Option<f64>,
}

#[derive(Debug, Serialize)]
struct EvolveReport {
    version: &'static str,
    config: ModelConfig,
    dephasing_ps1: Vec<f64>,
    t_end_ps: f64,
    dt_ps: f64,
    observables: Vec<String>,
    lqu_normalize: bool,
    rows: usize,
    csv_path: String,
    final_state: FinalState,
}

fn cmd_evolve(args: EvolveArgs) -> Result<String> {
    let (model, initial_site) = args.model.resolve()?;
    let override_rates = args.model.gamma_override(model.n_sites())?;

    let mut want_lqu = false;
    for name in &args.observables {
        match name.as_str() {
            "populations" => {}
            "lqu" => want_lqu = true,
            other => {
                return Err(Error::Validation(format!(
                    "unknown observable '{other}' (expected populations or lqu)"
                )))
            }
        }
    }

    let l = build_lindbladian(&model, override_rates.as_deref())?;
    let resolved_rates = override_rates
        .clone()
        .or_else(|| model.dephasing_ps1().map(|r| r.to_vec()))
        .expect("build_lindbladian requires rates");

    if !(args.t_end > 0.0 && args.t_end.is_finite()) {
        return Err(Error::Validation(format!(
            "t-end must be positive, got {}",
            args.t_end
        )));
    }
    let fastest = resolved_rates.iter().cloned().fold(0.0, f64::max);
    let dt = args.dt.unwrap_or_else(|| default_dt(fastest));
    if !(dt > 0.0 && dt <= args.t_end) {
        return Err(Error::Validation(format!(
            "dt must lie in (0, t-end], got {dt}"
        )));
    }

    let rho0 = localized_state(&model, initial_site)?;
    let mut traj = propagate_expm(&l, &rho0, &time_grid(args.t_end, dt))?;
    if want_lqu {
        attach_lqu(&mut traj, args.lqu_normalize)?;
    }

    let file = fs::File::create(&args.output)?;
    write_trajectory_csv(&traj, file)?;

    let obs = traj.observables();
    let last = traj.times().len() - 1;
    let report = EvolveReport {
        version: env!("CARGO_PKG_VERSION"),
        config: ModelConfig::from_model(&model, initial_site),
        dephasing_ps1: resolved_rates,
        t_end_ps: args.t_end,
        dt_ps: dt,
        observables: args.observables.clone(),
        lqu_normalize: args.lqu_normalize,
        rows: traj.times().len(),
        csv_path: args.output.display().to_string(),
        final_state: FinalState {
            p_g: obs.p_g[last],
            sites: obs.sites.iter().map(|s| s[last]).collect(),
            p_rc: obs.p_rc[last],
            lqu: obs.lqu.as_ref().map(|u| u[last]),
        },
    };
    Ok(serde_json::to_string_pretty(&report)?)
}

fn parse_gamma_grid_spec(spec: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let fail = || {
        Error::Validation(format!(
            "gamma-grid must be min:max:points, got '{spec}'"
        ))
    };
    if parts.len() != 3 {
        return Err(fail());
    }
    let min: f64 = parts[0].parse().map_err(|_| fail())?;
    let max: f64 = parts[1].parse().map_err(|_| fail())?;
    let points: usize = parts[2].parse().map_err(|_| fail())?;
    Ok((min, max, points))
}

fn parse_method(s: &str) -> Result<EfficiencyMethod> {
    s.parse::<EfficiencyMethod>().map_err(Error::Validation)
}

#[derive(Debug, Serialize)]
struct SweepReport {
    #[serde(flatten)]
    summary: SweepSummary,
    csv_path: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    trajectory_files: Vec<String>,
}

fn trajectory_file_name(gamma: f64) -> String {
    format!("trajectory_gamma_{gamma:.6e}.csv")
}

fn cmd_sweep(args: SweepArgs) -> Result<String> {
    let (model, initial_site) = args.model.resolve()?;
    if args.model.gamma.is_some() {
        return Err(Error::Validation(
            "--gamma conflicts with a sweep; use --gamma-grid".into(),
        ));
    }
    let (gamma_min, gamma_max, points) = parse_gamma_grid_spec(&args.gamma_grid)?;

    let cfg = SweepConfig {
        model,
        initial_site,
        gamma_min_ps1: gamma_min,
        gamma_max_ps1: gamma_max,
        points,
        efficiency_method: parse_method(&args.method)?,
        trajectory_gammas_ps1: args.trajectory_gammas.clone(),
        lqu_horizon_ps: args.horizon,
        plateau_window_ps: args.plateau_window,
        plateau_tol: args.plateau_tol,
        integration_t_max_ps: 2e4,
        integration_tol: 1e-6,
        seed: args.seed,
    };

    let result = run_dephasing_sweep(&cfg)?;
    let file = fs::File::create(&args.output)?;
    write_sweep_csv(&result, file)?;

    let mut trajectory_files = Vec::new();
    if let Some(dir) = &args.trajectories_dir {
        fs::create_dir_all(dir)?;
        for (gamma, traj) in record_representative_trajectories(&cfg)? {
            let path = dir.join(trajectory_file_name(gamma));
            let file = fs::File::create(&path)?;
            write_trajectory_csv(&traj, file)?;
            trajectory_files.push(path.display().to_string());
        }
    }

    let report = SweepReport {
        summary: summarize_sweep(&cfg, &result),
        csv_path: args.output.display().to_string(),
        trajectory_files,
    };
    Ok(serde_json::to_string_pretty(&report)?)
}

#[derive(Debug, Serialize)]
struct EfficiencyReportJson {
    version: &'static str,
    config: ModelConfig,
    gamma_ps1: f64,
    method: EfficiencyMethod,
    eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    drained: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_final_ps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    site_population: Option<f64>,
}

fn cmd_efficiency(args: EfficiencyArgs) -> Result<String> {
    let (model, initial_site) = args.model.resolve()?;
    let gamma = args.model.gamma.ok_or_else(|| {
        Error::Validation("efficiency needs --gamma (dephasing rate, ps^-1)".into())
    })?;
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::Validation(format!(
            "gamma must be finite and nonnegative, got {gamma}"
        )));
    }
    let method = parse_method(&args.method)?;
    let rho0 = localized_state(&model, initial_site)?;

    let report = match method {
        EfficiencyMethod::Direct => {
            let eta = efficiency_direct(&model, gamma, &rho0)?;
            EfficiencyReportJson {
                version: env!("CARGO_PKG_VERSION"),
                config: ModelConfig::from_model(&model, initial_site),
                gamma_ps1: gamma,
                method,
                eta,
                drained: None,
                t_final_ps: None,
                site_population: None,
            }
        }
        EfficiencyMethod::Integrate => {
            let r = efficiency_by_integration(&model, gamma, &rho0, args.t_max, args.tol)?;
            EfficiencyReportJson {
                version: env!("CARGO_PKG_VERSION"),
                config: ModelConfig::from_model(&model, initial_site),
                gamma_ps1: gamma,
                method,
                eta: r.eta,
                drained: Some(r.drained),
                t_final_ps: Some(r.t_final_ps),
                site_population: Some(r.site_population),
            }
        }
    };
    Ok(serde_json::to_string_pretty(&report)?)
}

fn parse_complex_cell(cell: &serde_json::Value) -> std::result::Result<Complex64, String> {
    if let Some(x) = cell.as_f64() {
        return Ok(Complex64::new(x, 0.0));
    }
    if let Some(pair) = cell.as_array() {
        if pair.len() == 2 {
            if let (Some(re), Some(im)) = (pair[0].as_f64(), pair[1].as_f64()) {
                return Ok(Complex64::new(re, im));
            }
        }
    }
    Err("expected a number or a [re, im] pair".into())
}

fn parse_state_matrix(spec: &str) -> Result<CMatrix> {
    let text = if spec.trim_start().starts_with('[') {
        spec.to_string()
    } else {
        fs::read_to_string(Path::new(spec))?
    };
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let rows = value
        .as_array()
        .ok_or_else(|| Error::Validation("state must be a JSON array of rows".into()))?;
    let n = rows.len();
    if n < 2 {
        return Err(Error::Validation(format!(
            "state must have at least 2 rows, got {n}"
        )));
    }
    let mut m = ndarray::Array2::from_elem((n, n), crate::linalg::ZERO);
    for (i, row) in rows.iter().enumerate() {
        let cells = row.as_array().ok_or_else(|| {
            Error::Validation(format!("state row {} must be a JSON array", i + 1))
        })?;
        if cells.len() != n {
            return Err(Error::Validation(format!(
                "state row {} has {} entries, expected {n}",
                i + 1,
                cells.len()
            )));
        }
        for (j, cell) in cells.iter().enumerate() {
            m[[i, j]] = parse_complex_cell(cell).map_err(|msg| {
                Error::Validation(format!(
                    "state entry at row {}, column {}: {msg}",
                    i + 1,
                    j + 1
                ))
            })?;
        }
    }
    Ok(m)
}

#[derive(Debug, Serialize)]
struct LquReport {
    version: &'static str,
    method: String,
    normalize: bool,
    input_trace: f64,
    value: f64,
    lambda_max: f64,
    w_matrix: [[f64; 3]; 3],
}

fn cmd_lqu(args: LquArgs) -> Result<String> {
    let block = parse_state_matrix(&args.state)?;
    let n = block.nrows();
    let trace: f64 = (0..n).map(|i| block[[i, i]].re).sum();

    let result: LquResult = match args.method.as_str() {
        "single" => lqu_single_excitation(&block, args.normalize)?,
        "general" => {
            if n != 3 {
                return Err(Error::Validation(format!(
                    "the general method embeds a 3-site block, got {n}x{n}"
                )));
            }
            let normalized = if args.normalize {
                if trace <= crate::correlations::EMPTY_BLOCK_TRACE {
                    return Err(Error::EmptySiteBlock { trace });
                }
                block.mapv(|z| z / trace)
            } else {
                block.clone()
            };
            let embedded = embed_single_excitation(&normalized, &PartitionSpec::leading_site(3))?;
            lqu_general(&embedded, 4)?
        }
        other => {
            return Err(Error::Validation(format!(
                "unknown LQU method '{other}' (expected single or general)"
            )))
        }
    };

    let report = LquReport {
        version: env!("CARGO_PKG_VERSION"),
        method: result.method.to_string(),
        normalize: args.normalize,
        input_trace: trace,
        value: result.value,
        lambda_max: result.lambda_max,
        w_matrix: result.w_matrix,
    };
    Ok(serde_json::to_string_pretty(&report)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).expect("argument parsing")
    }

    #[test]
    fn gamma_grid_spec_parsing() {
        assert_eq!(
            parse_gamma_grid_spec("1e-6:1e4:121").unwrap(),
            (1e-6, 1e4, 121)
        );
        assert!(parse_gamma_grid_spec("1:2").is_err());
        assert!(parse_gamma_grid_spec("a:2:3").is_err());
        assert!(parse_gamma_grid_spec("1:2:3:4").is_err());
    }

    #[test]
    fn state_matrix_parsing_reports_position() {
        let good = parse_state_matrix("[[0.5, 0, 0], [0, 0.5, 0], [0, 0, 0]]").unwrap();
        assert_eq!(good.nrows(), 3);
        let complex = parse_state_matrix("[[0.5, [0, 0.1]], [[0, -0.1], 0.5]]").unwrap();
        assert_eq!(complex[[0, 1]], Complex64::new(0.0, 0.1));

        let err = parse_state_matrix("[[0.5, \"x\"], [0, 0.5]]").unwrap_err();
        assert!(err.to_string().contains("row 1, column 2"), "{err}");
        let ragged = parse_state_matrix("[[0.5, 0], [0]]").unwrap_err();
        assert!(ragged.to_string().contains("row 2"), "{ragged}");
        assert!(parse_state_matrix("[[1.0]]").is_err());
        assert!(parse_state_matrix("{}").is_err());
    }

    #[test]
    fn evolve_writes_csv_and_summary() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("traj.csv");
        let cli = parse(&[
            "enaqt",
            "evolve",
            "--gamma",
            "12.07",
            "--t-end",
            "1.0",
            "--dt",
            "0.01",
            "--observables",
            "populations,lqu",
            "--output",
            out.to_str().unwrap(),
        ]);
        let report = execute(cli).unwrap();
        let json: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(json["rows"], 101);
        assert_eq!(json["dephasing_ps1"][0], 12.07);
        assert!(json["final_state"]["lqu"].as_f64().is_some());

        let text = fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("t_ps,p_g,p1,p2,p3,p_rc,lqu"));
        assert_eq!(text.lines().count(), 102);
    }

    #[test]
    fn evolve_rejects_unknown_observable() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("traj.csv");
        let cli = parse(&[
            "enaqt",
            "evolve",
            "--gamma",
            "1.0",
            "--observables",
            "populations,coherences",
            "--output",
            out.to_str().unwrap(),
        ]);
        let err = execute(cli).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("coherences"));
    }

    #[test]
    fn sweep_runs_and_reports_peaks() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        let cli = parse(&[
            "enaqt",
            "sweep",
            "--gamma-grid",
            "1e-2:1e2:5",
            "--horizon",
            "5",
            "--plateau-window",
            "1",
            "--output",
            out.to_str().unwrap(),
        ]);
        let report = execute(cli).unwrap();
        let json: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(json["points"], 5);
        assert!(json["peak_eta"].as_f64().unwrap() > 0.9);
        let text = fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("gamma_ps1,eta,phi_lqu,t_star_ps,plateau_found"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn sweep_rejects_gamma_flag() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        let cli = parse(&[
            "enaqt",
            "sweep",
            "--gamma",
            "1.0",
            "--output",
            out.to_str().unwrap(),
        ]);
        let err = execute(cli).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn efficiency_methods_agree_through_the_cli() {
        let direct = execute(parse(&[
            "enaqt",
            "efficiency",
            "--gamma",
            "12.07",
            "--method",
            "direct",
        ]))
        .unwrap();
        let integrate = execute(parse(&[
            "enaqt",
            "efficiency",
            "--gamma",
            "12.07",
            "--method",
            "integrate",
        ]))
        .unwrap();
        let d: serde_json::Value = serde_json::from_str(&direct).unwrap();
        let i: serde_json::Value = serde_json::from_str(&integrate).unwrap();
        let eta_d = d["eta"].as_f64().unwrap();
        let eta_i = i["eta"].as_f64().unwrap();
        assert!((eta_d - eta_i).abs() < 1e-3);
        assert_eq!(i["drained"], true);
        assert!(d.get("drained").is_none());
    }

    #[test]
    fn efficiency_with_zero_dissipation_is_unity() {
        let report = execute(parse(&[
            "enaqt",
            "efficiency",
            "--gamma",
            "1.0",
            "--dissipation",
            "0",
        ]))
        .unwrap();
        let json: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert!((json["eta"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lqu_known_values_through_the_cli() {
        let localized = execute(parse(&[
            "enaqt",
            "lqu",
            "--state",
            "[[1, 0, 0], [0, 0, 0], [0, 0, 0]]",
        ]))
        .unwrap();
        let json: serde_json::Value = serde_json::from_str(&localized).unwrap();
        assert!(json["value"].as_f64().unwrap().abs() < 1e-12);

        let superposed = "[[0.5, 0.5, 0], [0.5, 0.5, 0], [0, 0, 0]]";
        let single = execute(parse(&["enaqt", "lqu", "--state", superposed])).unwrap();
        let general = execute(parse(&[
            "enaqt", "lqu", "--state", superposed, "--method", "general",
        ]))
        .unwrap();
        let s: serde_json::Value = serde_json::from_str(&single).unwrap();
        let g: serde_json::Value = serde_json::from_str(&general).unwrap();
        let vs = s["value"].as_f64().unwrap();
        let vg = g["value"].as_f64().unwrap();
        assert!((vs - 1.0).abs() < 1e-10);
        assert!((vs - vg).abs() < 1e-10);
        assert_eq!(s["method"], "single_excitation");
        assert_eq!(g["method"], "general");
    }

    #[test]
    fn lqu_reads_state_from_a_file() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("state.json");
        fs::write(&path, "[[0.5, 0, 0], [0, 0.25, 0], [0, 0, 0.25]]").unwrap();
        let report = execute(parse(&["enaqt", "lqu", "--state", path.to_str().unwrap()]))
            .unwrap();
        let json: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert!((json["input_trace"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert!(json["value"].as_f64().unwrap().abs() < 1e-10);
    }

    #[test]
    fn config_file_drives_the_model() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        fs::write(
            &path,
            r#"{
                "energies_cm1": [100.0, 0.0],
                "couplings_cm1": [[0.0, 50.0], [50.0, 0.0]],
                "dephasing_ps1": 1.0,
                "dissipation_ps1": 5e-4,
                "sink_site": 2,
                "sink_rate_ps1": 1.0,
                "initial_site": 1
            }"#,
        )
        .unwrap();
        let report = execute(parse(&[
            "enaqt",
            "efficiency",
            "--config",
            path.to_str().unwrap(),
            "--gamma",
            "1.0",
        ]))
        .unwrap();
        let json: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(json["config"]["sink_site"], 2);
        let eta = json["eta"].as_f64().unwrap();
        assert!(eta > 0.9 && eta <= 1.0, "eta {eta}");
    }
}
