use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use schlab_cli::{config::Config, experiments, manifest};
use schlab_core::operator::{build_hamiltonian, eigenvalues_in_window, rescale_and_shift, Model, PotentialSpec, SpectralWindow};
use schlab_core::points::{sample_sch_points, sine_beta_counts_task};
use schlab_core::rng::{make_tape, Channel, OmegaDistribution, SeedSpec};
use schlab_core::sde::sine_beta_tmax;
use schlab_core::Result;

/// Simulation and validation laboratory for 1D random Schrödinger operators
/// in the critical and decaying noise regimes.
#[derive(Parser)]
#[command(name = "schlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set paths=1000 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (config key out_dir).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Master seed (config key master_seed).
    #[arg(long)]
    master_seed: Option<u64>,
    /// Worker threads (config key workers, defaults to available cores).
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn build_config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_file(path)?,
            None => Config::new(),
        };
        cfg.apply_overrides(&self.overrides)?;
        if let Some(d) = &self.out_dir {
            cfg.set("out_dir", &d.display().to_string());
        }
        if let Some(s) = self.master_seed {
            cfg.set("master_seed", &s.to_string());
        }
        if let Some(w) = self.workers {
            cfg.set("workers", &w.to_string());
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a disorder realization, solve the spectral window, dump CSVs.
    SimulateOperator(Common),
    /// Integrate a limiting phase family and dump the (t, lambda, phi) surface.
    SimulateSde(Common),
    /// Sample Sch_tau point configurations (sample_id,point CSV).
    SampleSch(Common),
    /// Sample Sine_beta counting functions (sample_id,lambda,count CSV).
    SampleSineb(Common),
    /// Integrate the Brownian carousel and dump the (t, Re V, Im V, gamma) trace.
    Carousel(Common),
    /// Run a two-sample comparison experiment (discrete-to-continuum or
    /// carousel-equivalence).
    Compare(Common),
    /// Run a named experiment end to end and write manifest + reports.
    Report(Common),
    /// Re-execute a single Monte Carlo task deterministically.
    Replay {
        #[command(flatten)]
        common: Common,
        /// Stream id of the task to re-run.
        #[arg(long)]
        task: u64,
        /// Manifest to validate the config hash against.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

fn init_workers(cfg: &Config) {
    #[cfg(feature = "parallel")]
    {
        if let Ok(w) = cfg.get_usize("workers", 0) {
            if w > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = cfg;
}

fn out_dir_of(cfg: &Config) -> PathBuf {
    PathBuf::from(cfg.get("out_dir").unwrap_or("runs/latest"))
}

fn write_data(cfg: &Config, name: &str, content: &str) -> Result<PathBuf> {
    let dir = out_dir_of(cfg).join("data");
    std::fs::create_dir_all(&dir)
        .map_err(|e| schlab_core::Error::invalid("out_dir", format!("{e}")))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| schlab_core::Error::invalid("out_dir", format!("{e}")))?;
    Ok(path)
}

fn cmd_simulate_operator(cfg: &Config) -> Result<()> {
    let n = cfg.get_usize("n", 2000)?;
    let e = cfg.energy(1.0)?;
    let r = cfg.get_f64("R", 10.0)?;
    let sigma = cfg.get_f64("sigma", 1.0)?;
    let model = cfg.model(Model::Critical)?;
    let omega = cfg.omega(OmegaDistribution::Gaussian)?;
    let master = cfg.get_u64("master_seed", 20260808)?;

    let spec = PotentialSpec::new(model, sigma, omega, n)?;
    let w = SpectralWindow::new(e, r, sigma)?;
    let h = build_hamiltonian(&spec, SeedSpec::new(master, 0));

    let mut potential = String::from("k,v_k\n");
    for (k, v) in h.diagonal().iter().enumerate() {
        potential.push_str(&format!("{},{}\n", k + 1, v));
    }
    let p1 = write_data(cfg, "potential.csv", &potential)?;

    let eigs = eigenvalues_in_window(&h, &w, cfg.get_f64("tol", 1e-10)?)?;
    let scaled = rescale_and_shift(&eigs, &w, n);
    let mut eig_csv = String::from("mu,lambda_shifted\n");
    for (mu, l) in eigs.iter().zip(&scaled.points) {
        eig_csv.push_str(&format!("{mu},{l}\n"));
    }
    let p2 = write_data(cfg, "window_eigenvalues.csv", &eig_csv)?;

    println!("n = {n}, E = {e}, window eigenvalues: {}", eigs.len());
    println!("wrote {}", p1.display());
    println!("wrote {}", p2.display());
    Ok(())
}

fn cmd_simulate_sde(cfg: &Config) -> Result<()> {
    let mut cfg = cfg.clone();
    if cfg.get("experiment").is_none() {
        cfg.set("experiment", "phase-surface");
    }
    let m = manifest::run_experiment(&cfg)?;
    println!("wrote {} data file(s) under {}", m.data_files.len(), out_dir_of(&cfg).display());
    Ok(())
}

fn cmd_sample_sch(cfg: &Config) -> Result<()> {
    let tau = cfg.get_f64("tau", 1.0)?;
    let dt = cfg.dt(1e-4)?;
    let paths = cfg.paths(100)?;
    let master = cfg.get_u64("master_seed", 20260808)?;
    let window = cfg.get_list_f64("window", &[0.0, std::f64::consts::TAU])?;
    if window.len() != 2 {
        return Err(schlab_core::Error::invalid("window", "expected two comma-separated values"));
    }
    let tol = cfg.get_f64("tol", 1e-4)?;

    let mut csv = String::from("sample_id,point\n");
    for id in 0..paths {
        let s = sample_sch_points(tau, (window[0], window[1]), SeedSpec::new(master, id as u64), dt, tol)?;
        for p in s.points {
            csv.push_str(&format!("{id},{p}\n"));
        }
    }
    let path = write_data(cfg, "sch_points.csv", &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sample_sineb(cfg: &Config) -> Result<()> {
    let beta = cfg.get_f64("beta", 2.0)?;
    let dt = cfg.dt(1e-4)?;
    let paths = cfg.paths(100)?;
    let master = cfg.get_u64("master_seed", 20260808)?;
    let grid = cfg.get_list_f64("lambda_grid", &[std::f64::consts::TAU])?;
    let tmax = cfg.get_f64(
        "Tmax",
        sine_beta_tmax(beta, grid.iter().cloned().fold(0.0, f64::max)),
    )?;

    let mut csv = String::from("sample_id,lambda,count\n");
    for id in 0..paths {
        let counts = sine_beta_counts_task(beta, &grid, SeedSpec::new(master, id as u64), dt, tmax)?;
        for (l, c) in grid.iter().zip(counts) {
            csv.push_str(&format!("{id},{l},{c}\n"));
        }
    }
    let path = write_data(cfg, "sineb_counts.csv", &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_carousel(cfg: &Config) -> Result<()> {
    let tau = cfg.get_f64("tau", 1.0)?;
    let dt = cfg.dt(1e-4)?;
    let master = cfg.get_u64("master_seed", 20260808)?;
    let grid = cfg.get_list_f64("lambda_grid", &[5.0])?;
    let steps = (tau / dt).round() as usize;
    let tape = make_tape(SeedSpec::new(master, 0), dt, steps, &[Channel::B2, Channel::B3])?;
    let stride = (steps / cfg.get_usize("t_points", 200)?).max(1);
    let path = schlab_core::carousel::integrate_carousel(&grid, tape.duration(), tape.view(), stride)?;

    let mut csv = String::from("t,Re V,Im V,gamma\n");
    for (k, t) in path.times.iter().enumerate() {
        csv.push_str(&format!(
            "{t},{},{},{}\n",
            path.v[k].re, path.v[k].im, path.gammas[0][k]
        ));
    }
    let out = write_data(cfg, "carousel_trace.csv", &csv)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_compare(cfg: &Config) -> Result<bool> {
    let mut cfg = cfg.clone();
    let experiment = cfg.get("experiment").unwrap_or("discrete-to-continuum").to_string();
    if experiment != "discrete-to-continuum" && experiment != "carousel-equivalence" {
        return Err(schlab_core::Error::invalid(
            "experiment",
            "compare runs discrete-to-continuum or carousel-equivalence",
        ));
    }
    cfg.set("experiment", &experiment);
    let m = manifest::run_experiment(&cfg)?;
    for (name, verdict) in &m.verdicts {
        println!("[{}] {}", verdict.to_uppercase(), name);
    }
    Ok(m.pass)
}

fn cmd_report(cfg: &Config) -> Result<bool> {
    let m = manifest::run_experiment(cfg)?;
    for (name, verdict) in &m.verdicts {
        println!("[{}] {}", verdict.to_uppercase(), name);
    }
    println!(
        "{}: {} in {:.1}s (manifest {})",
        m.experiment,
        if m.pass { "PASS" } else { "FAIL" },
        m.wall_clock_secs,
        out_dir_of(cfg).join("manifest.json").display(),
    );
    Ok(m.pass)
}

fn cmd_replay(cfg: &Config, task: u64, manifest_path: Option<PathBuf>) -> Result<()> {
    if let Some(path) = manifest_path {
        let m = manifest::load_manifest(&path)?;
        let hash = format!("{:016x}", cfg.result_hash());
        if m.config_hash != hash {
            return Err(schlab_core::Error::invalid(
                "config",
                format!(
                    "non-matching config: manifest hash {} vs current {hash}",
                    m.config_hash
                ),
            ));
        }
    }
    let record = experiments::replay_task(cfg, task)?;
    println!("{}", serde_json::to_string_pretty(&record).unwrap());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SimulateOperator(c) => {
            let cfg = c.build_config()?;
            init_workers(&cfg);
            cmd_simulate_operator(&cfg)?;
            Ok(true)
        }
        Command::SimulateSde(c) => {
            let cfg = c.build_config()?;
            init_workers(&cfg);
            cmd_simulate_sde(&cfg)?;
            Ok(true)
        }
        Command::SampleSch(c) => {
            let cfg = c.build_config()?;
            init_workers(&cfg);
            cmd_sample_sch(&cfg)?;
            Ok(true)
        }
        Command::SampleSineb(c) => {
            let cfg = c.build_config()?;
            init_workers(&cfg);
            cmd_sample_sineb(&cfg)?;
            Ok(true)
        }
        Command::Carousel(c) => {
            let cfg = c.build_config()?;
            init_workers(&cfg);
            cmd_carousel(&cfg)?;
            Ok(true)
        }
        Command::Compare(c) => {
            let cfg = c.build_config()?;
            init_workers(&cfg);
            cmd_compare(&cfg)
        }
        Command::Report(c) => {
            let cfg = c.build_config()?;
            init_workers(&cfg);
            cmd_report(&cfg)
        }
        Command::Replay {
            common,
            task,
            manifest: manifest_path,
        } => {
            let cfg = common.build_config()?;
            cmd_replay(&cfg, task, manifest_path)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
