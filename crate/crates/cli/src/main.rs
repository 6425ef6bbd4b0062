//! `optomech`: feasibility reports, arrival curves, visibility sweeps and
//! Monte Carlo runs for the single-photon optomechanical superposition
//! experiment.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 a feasibility check failed.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use optomech::arrival::density_curve;
use optomech::constants::DEFAULT_BASE_TEMPERATURE;
use optomech::device::{
    bundled_devices, delay_line_survival, derive, eid_time, feasibility_report, find_device, load_devices,
    DelayLineSpec, DerivedDevice, DeviceParams, FeasibilityReport, REFERENCE_VALUES,
};
use optomech::interferometer::{sweep_visibility, DecoherenceSpec};
use optomech::montecarlo::{
    data_collection_estimate, equally_spaced_phases, io as mcio, simulate_run, simulate_run_with_threads,
    ExperimentConfig,
};
use optomech::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "optomech", version, about = "Single-photon optomechanical superposition toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derived parameters and feasibility checks for one device
    Feasibility(Common),
    /// Normalised arrival-time density as CSV
    Arrival(Common),
    /// Visibility versus delay as CSV
    Visibility(Common),
    /// Monte Carlo run: records as CSV, summary as JSON
    Simulate(Common),
    /// Computed device parameters next to the reference values
    Table(Common),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DelayLine {
    Lossless,
    Fiber,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON device catalogue; the bundled catalogue is used when absent
    #[arg(long, env = "OPTOMECH_DEVICE_FILE")]
    device_file: Option<PathBuf>,
    #[arg(long, default_value = "proposed-1")]
    device: String,
    /// output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary file for `simulate` (stdout when absent)
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    n_photons: u64,
    /// delay of each outer arm, s
    #[arg(long, default_value_t = 0.0)]
    tau_d: f64,
    /// decoherence time, s; defaults to the environmental time at --temperature
    #[arg(long)]
    tau_dec: Option<f64>,
    /// comma-separated ascending delays, s
    #[arg(long, value_delimiter = ',')]
    tau_d_grid: Option<Vec<f64>>,
    /// samples per mechanical period of the arrival curve
    #[arg(long, default_value_t = 200)]
    bins: usize,
    /// laser wavelength, m
    #[arg(long)]
    wavelength: Option<f64>,
    /// base temperature, K
    #[arg(long, default_value_t = DEFAULT_BASE_TEMPERATURE)]
    temperature: f64,
    /// total detector dark-count rate, Hz
    #[arg(long, default_value_t = 0.0)]
    dark_rate: f64,
    /// replace the derived single-photon coupling κ
    #[arg(long)]
    kappa: Option<f64>,
    /// replace Γ_c so that ω_m/Γ_c takes this value
    #[arg(long)]
    sideband_ratio: Option<f64>,
    /// number of equally spaced phase settings
    #[arg(long, default_value_t = 8)]
    phases: usize,
    #[arg(long, value_enum, default_value_t = DelayLine::Lossless)]
    delay_line: DelayLine,
    /// worker threads for `simulate` (all cores when absent)
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn devices(&self) -> Result<Vec<DeviceParams>> {
        let mut devices = match &self.device_file {
            Some(path) => load_devices(path)?,
            None => bundled_devices()?,
        };
        if let Some(w) = self.wavelength {
            for d in &mut devices {
                d.wavelength_m = w;
            }
        }
        Ok(devices)
    }

    fn device_params(&self) -> Result<DeviceParams> {
        let devices = self.devices()?;
        let d = find_device(&devices, &self.device)?.clone();
        d.validate()?;
        Ok(d)
    }

    fn derived(&self) -> Result<DerivedDevice> {
        let mut d = derive(&self.device_params()?)?;
        if let Some(k) = self.kappa {
            d = d.with_kappa(k)?;
        }
        if let Some(r) = self.sideband_ratio {
            d = d.with_sideband_ratio(r)?;
        }
        Ok(d)
    }

    fn decoherence(&self, q_m: f64) -> Result<DecoherenceSpec> {
        let tau = match self.tau_dec {
            Some(t) => t,
            None => eid_time(q_m, self.temperature)?,
        };
        DecoherenceSpec::exponential(tau)
    }

    fn delay_line(&self) -> DelayLineSpec {
        match self.delay_line {
            DelayLine::Lossless => DelayLineSpec::lossless(),
            DelayLine::Fiber => DelayLineSpec::fiber(),
        }
    }

    fn experiment(&self) -> Result<ExperimentConfig> {
        let params = self.device_params()?;
        let decoherence = self.decoherence(params.q_m)?;
        let mut c = ExperimentConfig::new(params, decoherence);
        c.tau_d = self.tau_d;
        c.delay_line = self.delay_line();
        c.phase_settings = equally_spaced_phases(self.phases);
        c.dark_rate = self.dark_rate;
        c.n_photons = self.n_photons;
        c.seed = self.seed;
        c.kappa_override = self.kappa;
        c.sideband_ratio_override = self.sideband_ratio;
        Ok(c)
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_report(r: &FeasibilityReport) {
    let d = &r.device;
    println!("device            {}", d.name);
    println!("omega_m           {:.6e} rad/s", d.omega_m);
    println!("x_zp              {:.6e} m", d.x_zp);
    println!("g                 {:.6e} rad/s", d.g);
    println!("kappa             {:.6e}", d.kappa);
    println!("gamma_c           {:.6e} 1/s", d.gamma_c);
    println!("omega_m/gamma_c   {:.4}", d.sideband_ratio);
    println!("T_EID             {:.4} K", d.t_eid);
    println!("p_success         {:.6e}", d.p_success);
    println!("dark-count bound  {:.6e} Hz", d.dark_count_bound);
    let line = |name: &str, c: &optomech::device::Check, unit: &str| {
        let margin = c.margin.map_or("unbounded".to_string(), |m| format!("x{m:.3}"));
        println!(
            "[{}] {name:<12} value {:.4e}{unit}  limit {:.4e}{unit}  margin {margin}",
            if c.passed { "PASS" } else { "FAIL" },
            c.value,
            c.limit
        );
    };
    line("sideband", &r.sideband, "");
    line("dark counts", &r.dark_counts, " Hz");
    line("temperature", &r.temperature, " K");
}

fn cmd_feasibility(a: &Common) -> Result<ExitCode> {
    let d = a.derived()?;
    let report = feasibility_report(&d, a.dark_rate, a.temperature)?;
    print_report(&report);
    if let Ok(config) = a.experiment() {
        if let Ok(est) = data_collection_estimate(&config, 1e4) {
            match est.seconds {
                Some(s) => println!("collection time   {s:.3e} s for 1e4 events at Γ_c/10 injection"),
                None => println!("collection time   unattainable (zero detection rate)"),
            }
        }
    }
    if let Some(path) = &a.out {
        let mut w = open_out(Some(path))?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_arrival(a: &Common) -> Result<ExitCode> {
    let cavity = a.derived()?.cavity();
    let curve = density_curve(&cavity, a.bins)?;
    let mut w = open_out(a.out.as_deref())?;
    writeln!(w, "t_seconds,density_per_second")?;
    for (t, p) in curve {
        writeln!(w, "{t},{p}")?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_visibility(a: &Common) -> Result<ExitCode> {
    let d = a.derived()?;
    let spec = a.decoherence(d.q_m)?;
    let grid = match &a.tau_d_grid {
        Some(g) => g.clone(),
        None => (0..=50).map(|k| spec.tau_dec * k as f64 / 10.0).collect(),
    };
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("--tau-d-grid must be ascending".into()));
    }
    let line = a.delay_line();
    let coupling = d.coupling();
    let t_c = 0.5 * coupling.period();
    let mut rows = Vec::with_capacity(grid.len());
    for &tau_d in &grid {
        let s = delay_line_survival(&line, tau_d)?.survival;
        let v = sweep_visibility(&coupling, t_c, &spec, &[tau_d], 1.0 - s, 1.0 - s)?[0].1;
        rows.push((tau_d, v, s, d.p_success * s));
    }
    let mut w = open_out(a.out.as_deref())?;
    writeln!(w, "tau_d_s,visibility,survival,detection_probability")?;
    for (t, v, s, p) in rows {
        writeln!(w, "{t},{v},{s},{p}")?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(a: &Common) -> Result<ExitCode> {
    let config = a.experiment()?;
    let out = match a.threads {
        Some(n) => simulate_run_with_threads(&config, n)?,
        None => simulate_run(&config)?,
    };
    if let Some(path) = &a.out {
        let mut w = open_out(Some(path))?;
        mcio::write_records_csv(&mut w, &out.records)?;
        w.flush()?;
    }
    let mut w = open_out(a.summary.as_deref())?;
    mcio::write_summary_json(&mut w, &out.summary)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn deviation(computed: f64, reference: f64) -> f64 {
    100.0 * (computed - reference) / reference
}

fn cmd_table(a: &Common) -> Result<ExitCode> {
    let devices = a.devices()?;
    let mut w = open_out(a.out.as_deref())?;
    writeln!(
        w,
        "{:<14} {:>11} {:>11} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "device", "kappa", "ref", "dev%", "ratio", "ref", "dev%", "T_EID/K", "ref", "dev%"
    )?;
    for (name, kappa, ratio, t_eid) in REFERENCE_VALUES {
        let d = derive(find_device(&devices, name)?)?;
        writeln!(
            w,
            "{:<14} {:>11.3e} {:>11.3e} {:>8.2} {:>8.3} {:>8.3} {:>8.2} {:>8.3} {:>8.3} {:>8.2}",
            name,
            d.kappa,
            kappa,
            deviation(d.kappa, kappa),
            d.sideband_ratio,
            ratio,
            deviation(d.sideband_ratio, ratio),
            d.t_eid,
            t_eid,
            deviation(d.t_eid, t_eid)
        )?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Feasibility(a) => cmd_feasibility(a),
        Command::Arrival(a) => cmd_arrival(a),
        Command::Visibility(a) => cmd_visibility(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Table(a) => cmd_table(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
