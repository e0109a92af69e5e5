use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use catlab_core::classical::{divergence_series, fit_lyapunov, Density, FitWindow};
use catlab_core::experiments::{self, ExperimentConfig, ExperimentReport, Scenario};
use catlab_core::io;
use catlab_core::maps::{
    self, map_period_by_iteration, CatMatrix, Direction, LatticeSize, RationalPoint,
};
use catlab_core::quantum::{self, NoiseKind, NoiseModel};
use catlab_core::rng::{stream, Purpose};
use catlab_core::spectral::{estimate_spectrum, power_spectrum, tv_distance};
use catlab_core::Error;

pub enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "catlab",
    version,
    about = "Exact, fixed-precision and statevector simulation of cat maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Period of the lattice map: smallest t >= 1 with M^t = I (mod N).
    Period(PeriodArgs),
    /// Divergence of a b-bit trajectory from the exact rational one.
    Divergence(DivergenceArgs),
    /// Exact transport of a density on the lattice.
    Evolve(EvolveArgs),
    /// Noisy statevector evolution, reporting mean fidelity per step.
    Quantum(QuantumArgs),
    /// Power spectrum of the evolved amplitudes, exact or QFT-sampled.
    Spectrum(SpectrumArgs),
    /// Four-arm comparison of classical and quantum simulation.
    Compare(ExperimentArgs),
    /// Forward/backward identity and backward fine-structure statistics.
    Reversibility(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputMode {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PeriodMethod {
    /// Group-order computation, exact for any power of two.
    Group,
    /// Direct iteration of matrix powers, bounded by --max-steps.
    Iterate,
}

fn parse_matrix(s: &str) -> Result<CatMatrix, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_size(s: &str) -> Result<LatticeSize, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_point(s: &str) -> Result<RationalPoint, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// `kind:epsilon`.
fn parse_noise(s: &str) -> Result<(NoiseKind, f64), String> {
    let m = NoiseModel::parse(s, 1).map_err(|e| e.to_string())?;
    Ok((m.kind, m.epsilon))
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Map coefficients a,b,c,d of ((a,b),(c,d)).
    #[arg(long, value_parser = parse_matrix, default_value = "1,1,1,2", allow_hyphen_values = true)]
    pub matrix: CatMatrix,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Density generator: uniform, delta:x,y or gaussian:cx,cy,sigma (cell units).
    #[arg(long, conflicts_with = "density_file")]
    pub density: Option<String>,
    /// Density text file: N on the first line, then N rows of N values.
    #[arg(long)]
    pub density_file: Option<PathBuf>,
}

impl DensityArgs {
    fn load(&self, size: LatticeSize, default: &str) -> Result<Density, Failure> {
        if let Some(path) = &self.density_file {
            let d = io::read_density(path)?;
            if d.size() != size {
                return Err(Failure::Compute(Error::InvalidDensity(format!(
                    "{}: file has N={}, but --n is {size}",
                    path.display(),
                    d.size()
                ))));
            }
            return Ok(d);
        }
        Density::generate(self.density.as_deref().unwrap_or(default), size).map_err(usage)
    }
}

#[derive(Debug, Args)]
pub struct PeriodArgs {
    /// Lattice size N (power of two).
    #[arg(long, value_parser = parse_size)]
    pub n: LatticeSize,
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long, value_enum, default_value_t = PeriodMethod::Group)]
    pub method: PeriodMethod,
    /// Step cap for --method iterate.
    #[arg(long, default_value_t = maps::DEFAULT_PERIOD_CAP)]
    pub max_steps: u64,
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Fixed-point fractional bits b.
    #[arg(long, default_value_t = 16)]
    pub bits: u32,
    #[arg(long, default_value_t = 40)]
    pub steps: usize,
    /// Exact initial point px,py,q meaning (px/q, py/q). Without it, random
    /// points are drawn (requires --seed).
    #[arg(long, value_parser = parse_point)]
    pub point: Option<RationalPoint>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Torus distance that counts as breakdown.
    #[arg(long, default_value_t = 0.25)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = OutputMode::Table)]
    pub out: OutputMode,
    /// Also write the ensemble report as JSON to this path.
    #[arg(long)]
    pub out_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long, value_parser = parse_size)]
    pub n: LatticeSize,
    #[command(flatten)]
    pub map: MapArgs,
    #[command(flatten)]
    pub density: DensityArgs,
    #[arg(long, default_value_t = 1)]
    pub steps: u64,
    #[arg(long, value_parser = parse_direction, default_value = "forward")]
    pub direction: Direction,
    /// table writes the density text format.
    #[arg(long, value_enum, default_value_t = OutputMode::Table)]
    pub out: OutputMode,
}

#[derive(Debug, Args)]
pub struct QuantumArgs {
    #[arg(long, value_parser = parse_size)]
    pub n: LatticeSize,
    #[command(flatten)]
    pub map: MapArgs,
    #[command(flatten)]
    pub density: DensityArgs,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Per-qubit Pauli noise kind:epsilon (bitflip, phaseflip, depolarizing).
    #[arg(long, value_parser = parse_noise, default_value = "bitflip:0")]
    pub noise: (NoiseKind, f64),
    #[arg(long, default_value_t = 100)]
    pub trajectories: usize,
    /// Noise channel applications per map step.
    #[arg(long, default_value_t = 1)]
    pub gates_per_step: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the noiseless final state as index,real,imag CSV.
    #[arg(long)]
    pub dump_state: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputMode::Csv)]
    pub out: OutputMode,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, value_parser = parse_size)]
    pub n: LatticeSize,
    #[command(flatten)]
    pub map: MapArgs,
    #[command(flatten)]
    pub density: DensityArgs,
    #[arg(long, default_value_t = 0)]
    pub steps: usize,
    /// Estimate the spectrum from this many QFT measurement samples.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = OutputMode::Csv)]
    pub out: OutputMode,
    /// Write the spectrum-scenario report as JSON (requires --samples).
    #[arg(long)]
    pub out_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment configuration JSON, or a previous report to replay.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_size)]
    pub n: Option<LatticeSize>,
    #[arg(long, value_parser = parse_matrix, allow_hyphen_values = true)]
    pub matrix: Option<CatMatrix>,
    #[arg(long)]
    pub density: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub bits: Option<u32>,
    #[arg(long, value_parser = parse_noise)]
    pub noise: Option<(NoiseKind, f64)>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub gates_per_step: Option<usize>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Side of the block of final points evolved backwards.
    #[arg(long)]
    pub block: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the report as JSON to this path.
    #[arg(long)]
    pub out_file: Option<PathBuf>,
}

impl ExperimentArgs {
    fn config(&self, scenario: Scenario) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                let cfg = serde_json::from_str::<ExperimentConfig>(&text)
                    .or_else(|_| ExperimentReport::from_json(&text).map(|r| r.provenance.config))
                    .map_err(|e| {
                        usage(format!(
                            "{}: not an experiment config or report: {e}",
                            path.display()
                        ))
                    })?;
                if cfg.scenario != scenario {
                    return Err(usage(format!(
                        "{}: config is for scenario {}, not {scenario}",
                        path.display(),
                        cfg.scenario
                    )));
                }
                cfg
            }
            None => {
                let seed = self
                    .seed
                    .ok_or_else(|| usage(format!("--seed is required for {scenario}")))?;
                ExperimentConfig::new(scenario, seed)
            }
        };
        if let Some(v) = self.n {
            cfg.size = v;
        }
        if let Some(v) = self.matrix {
            cfg.matrix = v;
        }
        if let Some(v) = &self.density {
            cfg.density = v.clone();
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.bits {
            cfg.bits = v;
        }
        if let Some((kind, epsilon)) = self.noise {
            cfg.noise.kind = kind;
            cfg.noise.epsilon = epsilon;
        }
        if let Some(v) = self.trajectories {
            cfg.noise.trajectories = v;
        }
        if let Some(v) = self.gates_per_step {
            cfg.gates_per_step = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = self.block {
            cfg.block = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|source| {
        Failure::Compute(Error::Io {
            path: path.display().to_string(),
            source,
        })
    })
}

fn emit(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|source| {
            Failure::Compute(Error::Io {
                path: "<stdout>".into(),
                source,
            })
        })
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Period(args) => period(args),
        Command::Divergence(args) => divergence(args),
        Command::Evolve(args) => evolve(args),
        Command::Quantum(args) => quantum_cmd(args),
        Command::Spectrum(args) => spectrum(args),
        Command::Compare(args) => experiment(args, Scenario::Compare),
        Command::Reversibility(args) => experiment(args, Scenario::Reversibility),
    }
}

fn period(args: PeriodArgs) -> Result<(), Failure> {
    let m = args.map.matrix;
    let t = match args.method {
        PeriodMethod::Group => maps::map_period(&m, args.n)?,
        PeriodMethod::Iterate => map_period_by_iteration(&m, args.n.get(), args.max_steps)?,
    };
    emit(&format!("period={t}\n"))
}

fn divergence(args: DivergenceArgs) -> Result<(), Failure> {
    let m = args.map.matrix;
    LatticeSize::from_bits(args.bits).map_err(usage)?;
    if !(args.threshold > 0.0 && args.threshold <= 0.5) {
        return Err(usage(format!(
            "--threshold must be in (0, 0.5], got {}",
            args.threshold
        )));
    }
    let Some(p0) = args.point else {
        let seed = args
            .seed
            .ok_or_else(|| usage("--seed is required when --point is not given"))?;
        let mut cfg = ExperimentConfig::new(Scenario::Divergence, seed);
        cfg.matrix = m;
        cfg.bits = args.bits;
        cfg.steps = args.steps;
        cfg.trials = args.trials;
        cfg.threshold = args.threshold;
        cfg.validate().map_err(usage)?;
        let report = experiments::run(&cfg)?;
        if let Some(path) = &args.out_file {
            write_file(path, &report.to_json())?;
        }
        return match args.out {
            OutputMode::Table => emit(&report.to_table()),
            OutputMode::Json => emit(&report.to_json()),
            OutputMode::Csv => {
                let mut out = String::from("step,mean_distance\n");
                for (t, d) in report.series["mean_distance"].iter().enumerate() {
                    out.push_str(&format!("{t},{d}\n"));
                }
                emit(&out)
            }
        };
    };
    let series = divergence_series(&m, &p0, args.bits, args.steps)?;
    let breakdown = series.first_passage(args.threshold);
    let fit = fit_lyapunov(&series, FitWindow::default()).ok();
    let degenerate = series.is_degenerate();
    if degenerate {
        eprintln!("warning: initial point is exactly representable in {} bits; divergence is identically zero", args.bits);
    }
    let text = match args.out {
        OutputMode::Csv => {
            let mut out = String::from("step,distance,degenerate\n");
            for (t, d) in series.distances().iter().enumerate() {
                out.push_str(&format!("{t},{d},{degenerate}\n"));
            }
            out
        }
        OutputMode::Json => {
            let value = serde_json::json!({
                "breakdown_step": breakdown,
                "degenerate": degenerate,
                "distances": series.distances(),
                "epsilon0": series.epsilon0(),
                "lyapunov_exact": maps::lyapunov_exponent(&m),
                "lyapunov_fit": fit,
            });
            format!("{}\n", serde_json::to_string_pretty(&value).expect("json"))
        }
        OutputMode::Table => {
            let mut out = format!(
                "degenerate={degenerate}\nepsilon0={}\nbreakdown_step={}\nlyapunov_fit={}\n\nstep  distance\n",
                series.epsilon0(),
                breakdown.map_or("none".to_string(), |t| t.to_string()),
                fit.map_or("none".to_string(), |f| f.to_string()),
            );
            for (t, d) in series.distances().iter().enumerate() {
                out.push_str(&format!("{t:>4}  {d}\n"));
            }
            out
        }
    };
    emit(&text)
}

fn evolve(args: EvolveArgs) -> Result<(), Failure> {
    let dens = args.density.load(args.n, "uniform")?;
    let out = catlab_core::evolve_density(&dens, &args.map.matrix, args.steps, args.direction);
    emit(&match args.out {
        OutputMode::Table => io::format_density(&out),
        OutputMode::Csv => io::density_csv(&out),
        OutputMode::Json => io::density_json(&out),
    })
}

fn quantum_cmd(args: QuantumArgs) -> Result<(), Failure> {
    let seed = args
        .seed
        .ok_or_else(|| usage("--seed is required for quantum"))?;
    let (kind, epsilon) = args.noise;
    let model = NoiseModel::new(kind, epsilon, args.trajectories).map_err(usage)?;
    let dens = args.density.load(args.n, "gaussian:0,0,2")?;
    let m = args.map.matrix;
    let psi = quantum::prepare_state(&dens)?;
    let run = quantum::simulate_noisy(&psi, &m, args.steps, &model, args.gates_per_step, seed)?;
    if let Some(path) = &args.dump_state {
        let ideal = quantum::apply_map_steps(&psi, &m, args.steps as u64, Direction::Forward);
        write_file(path, &ideal.to_csv())?;
    }
    let text = match args.out {
        OutputMode::Json => {
            let value = serde_json::json!({
                "error_free_fraction": run.error_free_fraction,
                "fidelity_stderr": run.fidelity_stderr,
                "mean_fidelity": run.mean_fidelity,
                "noise": model.to_string(),
                "qubits": psi.num_qubits(),
                "trajectories": model.trajectories,
            });
            format!("{}\n", serde_json::to_string_pretty(&value).expect("json"))
        }
        OutputMode::Csv | OutputMode::Table => {
            let sep = if args.out == OutputMode::Csv {
                ","
            } else {
                "  "
            };
            let mut out = [
                "step",
                "mean_fidelity",
                "fidelity_stderr",
                "error_free_fraction",
            ]
            .join(sep);
            out.push('\n');
            for t in 0..=args.steps {
                out.push_str(
                    &[
                        t.to_string(),
                        run.mean_fidelity[t].to_string(),
                        run.fidelity_stderr[t].to_string(),
                        run.error_free_fraction[t].to_string(),
                    ]
                    .join(sep),
                );
                out.push('\n');
            }
            out
        }
    };
    emit(&text)
}

fn spectrum(args: SpectrumArgs) -> Result<(), Failure> {
    let default_density = "gaussian:0,0,2";
    let dens = args.density.load(args.n, default_density)?;
    if args.out == OutputMode::Table {
        return Err(usage("--out for spectrum must be csv or json"));
    }
    let render = |s: &catlab_core::Spectrum| match args.out {
        OutputMode::Json => io::spectrum_json(s),
        _ => io::spectrum_csv(s),
    };
    let m = args.map.matrix;
    let psi = quantum::apply_map_steps(
        &quantum::prepare_state(&dens)?,
        &m,
        args.steps as u64,
        Direction::Forward,
    );
    let exact = power_spectrum(psi.amplitudes(), args.n)?;
    let Some(samples) = args.samples else {
        if args.out_file.is_some() {
            return Err(usage("--out-file requires --samples"));
        }
        return emit(&render(&exact));
    };
    let seed = args
        .seed
        .ok_or_else(|| usage("--seed is required when --samples is given"))?;
    if samples == 0 {
        return Err(usage("--samples must be >= 1"));
    }
    let transformed = quantum::qft2d(&psi, Direction::Forward);
    let hist = quantum::measure_samples(
        &transformed,
        samples,
        &mut stream(seed, Purpose::Measurement, &[0]),
    )?;
    let estimate = estimate_spectrum(&hist);
    eprintln!("tv_sampled_vs_exact={}", tv_distance(&estimate, &exact)?);
    if let Some(path) = &args.out_file {
        let mut cfg = ExperimentConfig::new(Scenario::Spectrum, seed);
        cfg.size = args.n;
        cfg.matrix = m;
        cfg.steps = args.steps;
        cfg.samples = samples;
        match (&args.density.density, &args.density.density_file) {
            (_, Some(_)) => {
                return Err(usage(
                    "--out-file needs a generator --density, not --density-file",
                ))
            }
            (d, None) => cfg.density = d.clone().unwrap_or_else(|| default_density.into()),
        }
        let report = experiments::run(&cfg)?;
        for (k, v) in &report.timings {
            eprintln!("{k}={v}");
        }
        write_file(path, &report.to_json())?;
    }
    emit(&render(&estimate))
}

fn experiment(args: ExperimentArgs, scenario: Scenario) -> Result<(), Failure> {
    let cfg = args.config(scenario)?;
    let report = experiments::run(&cfg)?;
    if let Some(path) = &args.out_file {
        write_file(path, &report.to_json())?;
    }
    emit(&report.to_table())
}
