//! Command-line front end.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::data_io::{
    format_map_matrix, format_marginal, format_modes, format_scaling, parameter_unit, parse_config, read_config,
    read_pl_map_with, read_results, synthesize_pl_map, write_pl_map, write_results, write_timing, OrientationSpec,
    ReadOptions, ResultsDocument, RunConfig, TimingSidecar, PLMAP_MAGIC,
};
use crate::error::{Error, Result};
use crate::forward::{ExternalFieldParams, ModelParams, PLMap};
use crate::geometry::Orientation;
use crate::inference::{infer_field, infer_orientation, scaling_study, InferenceMode, KnownParams, Posterior};
use crate::spin::default_sweep;

/// Built-in demonstration configurations.
pub const PRESETS: [(&str, &str); 5] = [
    ("fig1c", include_str!("../presets/fig1c.toml")),
    ("fig4a", include_str!("../presets/fig4a.toml")),
    ("fig4b", include_str!("../presets/fig4b.toml")),
    ("fig4c", include_str!("../presets/fig4c.toml")),
    ("fig4d", include_str!("../presets/fig4d.toml")),
];

pub fn preset(name: &str) -> Result<RunConfig> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            Error::invalid(format!("unknown preset `{name}` (available: {})", names.join(", ")))
        })?;
    parse_config(text)
}

#[derive(Debug, Parser)]
#[command(
    name = "nvmag",
    version,
    about = "NV-diamond cross-relaxation PL simulation and Bayesian inference"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "NVMAG_THREADS")]
    pub threads: Option<usize>,

    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a PL map for the configured orientation and field.
    Simulate(SimulateArgs),
    /// Infer the crystal orientation from a PL map with a known field.
    InferOrientation(InferArgs),
    /// Infer the external field from a PL map with a known orientation.
    InferField(InferArgs),
    /// Posterior width of one field parameter versus the number of traces.
    Scaling(ScalingArgs),
    /// Convert a map or results file to plot-ready text tables.
    ExportPlot(ExportArgs),
    /// Check the resonance planes against the spin Hamiltonian.
    VerifyOracle(OracleArgs),
}

/// Command-line overrides of configuration values. Flags carry their unit
/// in the name; files stay in SI.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, allow_hyphen_values = true)]
    pub bias_min_mt: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub bias_max_mt: Option<f64>,
    #[arg(long)]
    pub n_bias: Option<usize>,
    #[arg(long)]
    pub n_phi: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub b_z_mt: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b_perp_mt: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi0_deg: Option<f64>,
    /// Orientation angles; all three must be given together.
    #[arg(long, allow_hyphen_values = true, requires_all = ["beta_deg", "zeta_deg"])]
    pub alpha_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["alpha_deg", "zeta_deg"])]
    pub beta_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["alpha_deg", "beta_deg"])]
    pub zeta_deg: Option<f64>,
    #[arg(long)]
    pub gamma_mt: Option<f64>,
    #[arg(long)]
    pub contrast: Option<f64>,
    /// PL noise standard deviation assumed by the likelihood.
    #[arg(long)]
    pub sigma_noise: Option<f64>,
    #[arg(long)]
    pub sigma_bias_ut: Option<f64>,
    #[arg(long)]
    pub sigma_phi_deg: Option<f64>,
    /// Output directory.
    #[arg(long, short = 'o')]
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if self.bias_min_mt.is_some() || self.bias_max_mt.is_some() || self.n_bias.is_some() || self.n_phi.is_some() {
            let g = cfg.grid.get_or_insert(crate::data_io::GridSpec {
                bias_min: -4e-3,
                bias_max: 4e-3,
                n_bias: 154,
                n_phi: 72,
            });
            if let Some(v) = self.bias_min_mt {
                g.bias_min = v * 1e-3;
            }
            if let Some(v) = self.bias_max_mt {
                g.bias_max = v * 1e-3;
            }
            if let Some(v) = self.n_bias {
                g.n_bias = v;
            }
            if let Some(v) = self.n_phi {
                g.n_phi = v;
            }
        }
        if self.b_z_mt.is_some() || self.b_perp_mt.is_some() || self.phi0_deg.is_some() {
            let f = cfg.field.unwrap_or(ExternalFieldParams {
                b_z: 0.0,
                b_perp: 0.0,
                phi0: 0.0,
            });
            if cfg.field.is_none() && self.b_perp_mt.is_none() {
                return Err(Error::MissingKey("field.b_perp (--b-perp-mt)".into()));
            }
            cfg.field = Some(ExternalFieldParams::new(
                self.b_z_mt.map_or(f.b_z, |v| v * 1e-3),
                self.b_perp_mt.map_or(f.b_perp, |v| v * 1e-3),
                self.phi0_deg.map_or(f.phi0, f64::to_radians),
            )?);
        }
        if let (Some(a), Some(b), Some(z)) = (self.alpha_deg, self.beta_deg, self.zeta_deg) {
            cfg.orientation = Some(OrientationSpec::Angles(Orientation::new(
                a.to_radians(),
                b.to_radians(),
                z.to_radians(),
            )?));
        }
        if let Some(v) = self.gamma_mt {
            cfg.lineshape.gamma = v * 1e-3;
        }
        if let Some(v) = self.contrast {
            cfg.lineshape.contrast = v;
        }
        if let Some(v) = self.sigma_noise {
            cfg.noise.sigma_noise = v;
        }
        if let Some(v) = self.sigma_bias_ut {
            cfg.noise.sigma_bias = v * 1e-6;
        }
        if let Some(v) = self.sigma_phi_deg {
            cfg.noise.sigma_phi = v.to_radians();
        }
        if let Some(d) = &self.out_dir {
            cfg.output.dir = d.clone();
        }
        cfg.validate()
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML run configuration.
    #[arg(long, short = 'c', conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration: fig1c, fig4a, fig4b, fig4c, fig4d.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output map file (default: <out-dir>/map.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Standard deviation of Gaussian noise added to the map.
    #[arg(long)]
    pub add_noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    /// PL map file (overrides `data.path`).
    #[arg(long, short = 'd')]
    pub data: Option<PathBuf>,
    /// Divide the map by this percentile of its values before inference.
    #[arg(long)]
    pub renormalize_percentile: Option<f64>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub infer: InferArgs,
    /// Trace counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parameter whose marginal width is tracked.
    #[arg(long)]
    pub parameter: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// A `nv-plmap v1` file or a results JSON document.
    pub input: PathBuf,
    #[arg(long, short = 'o')]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random fields per plane (and generic fields).
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => read_config(p),
        None => Ok(RunConfig::default()),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn model_params(cfg: &RunConfig) -> Result<ModelParams> {
    Ok(ModelParams {
        orientation: cfg.require_orientation()?.orientation()?,
        field: *cfg.require_field()?,
        lineshape: cfg.lineshape,
    })
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    let mut cfg = match &a.preset {
        Some(p) => preset(p)?,
        None => load_config(a.config.as_deref())?,
    };
    a.overrides.apply(&mut cfg)?;
    if let Some(s) = a.add_noise {
        cfg.simulate.sigma_noise = s;
    }
    if let Some(s) = a.seed {
        cfg.simulate.seed = s;
    }
    cfg.validate()?;
    let grid = cfg.require_grid()?.build()?;
    let mut params = model_params(&cfg)?;
    // Lab-axis orientations are simulated with the exact matrix, which may
    // differ from its canonical representative by a symmetry operation.
    params.orientation.matrix = cfg.require_orientation()?.matrix()?;
    let mut map = synthesize_pl_map(&params, &grid, cfg.simulate.sigma_noise, cfg.simulate.seed)?;
    let o = params.orientation;
    map.metadata
        .insert("generator".into(), format!("nvmag {}", env!("CARGO_PKG_VERSION")));
    map.metadata.insert(
        "orientation_rad".into(),
        format!("{:e} {:e} {:e}", o.alpha, o.beta, o.zeta),
    );
    map.metadata.insert(
        "field_T_T_rad".into(),
        format!(
            "{:e} {:e} {:e}",
            params.field.b_z, params.field.b_perp, params.field.phi0
        ),
    );
    map.metadata.insert(
        "lineshape".into(),
        format!(
            "gamma={:e} T, contrast={:e}",
            params.lineshape.gamma, params.lineshape.contrast
        ),
    );
    if let Some(p) = &a.preset {
        map.metadata.insert("preset".into(), p.clone());
    }
    let out = match &a.out {
        Some(p) => p.clone(),
        None => {
            ensure_dir(&cfg.output.dir)?;
            cfg.output.dir.join("map.csv")
        }
    };
    write_pl_map(&out, &map)?;
    println!(
        "wrote {} x {} map ({} points) to {}",
        grid.n_bias(),
        grid.n_phi(),
        grid.len(),
        out.display()
    );
    Ok(())
}

fn load_data(cfg: &RunConfig, args: &InferArgs) -> Result<PLMap> {
    let path = args
        .data
        .clone()
        .or_else(|| cfg.data.path.clone())
        .ok_or_else(|| Error::MissingKey("data.path (--data)".into()))?;
    let opts = ReadOptions {
        renormalize_percentile: args.renormalize_percentile.or(cfg.data.renormalize_percentile),
    };
    read_pl_map_with(&path, &opts)
}

fn infer_config(args: &InferArgs) -> Result<RunConfig> {
    let mut cfg = load_config(args.config.as_deref())?;
    args.overrides.apply(&mut cfg)?;
    if let Some(p) = &args.data {
        cfg.data.path = Some(p.clone());
    }
    if args.renormalize_percentile.is_some() {
        cfg.data.renormalize_percentile = args.renormalize_percentile;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_posterior(post: &Posterior) {
    let unit_scale = |name: &str| {
        if parameter_unit(name) == "T" {
            (1e3, "mT")
        } else {
            (1.0, "rad")
        }
    };
    println!("{} mode(s)", post.modes.len());
    for (i, m) in post.modes.iter().enumerate() {
        let parts: Vec<String> = (0..3)
            .map(|k| {
                let (s, u) = unit_scale(&post.names[k]);
                format!("{} = {:.6} ± {:.1e} {}", post.names[k], m.point[k] * s, m.std[k] * s, u)
            })
            .collect();
        println!("  mode {i}: {}  (mass {:.3})", parts.join(", "), m.mass_fraction);
    }
    for w in &post.warnings {
        eprintln!("warning: {w}");
    }
}

fn write_posterior_outputs(dir: &Path, post: &Posterior) -> Result<()> {
    for m in &post.marginals {
        write_file(
            &dir.join(format!("marginal_{}.csv", m.name)),
            &format_marginal(m, parameter_unit(&m.name)),
        )?;
    }
    write_file(&dir.join("modes.csv"), &format_modes(post))
}

fn timing(command: &str, start: SystemTime, t0: Instant) -> TimingSidecar {
    TimingSidecar {
        command: command.into(),
        started_unix_s: start.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        elapsed_s: t0.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    }
}

fn run_infer(args: &InferArgs, mode: InferenceMode) -> Result<()> {
    let (start, t0) = (SystemTime::now(), Instant::now());
    let cfg = infer_config(args)?;
    match mode {
        InferenceMode::Orientation => cfg.require_field().map(|_| ())?,
        InferenceMode::Field => cfg.require_orientation().map(|_| ())?,
    }
    let data = load_data(&cfg, args)?;
    let inf = &cfg.inference;
    let (command, post) = match mode {
        InferenceMode::Orientation => (
            "infer-orientation",
            infer_orientation(
                &data,
                cfg.require_field()?,
                &cfg.lineshape,
                &cfg.noise,
                &inf.orientation_space,
                &inf.options,
            )?,
        ),
        InferenceMode::Field => (
            "infer-field",
            infer_field(
                &data,
                &cfg.require_orientation()?.matrix()?,
                &cfg.lineshape,
                &cfg.noise,
                &inf.field_space,
                &inf.options,
            )?,
        ),
    };
    let dir = cfg.output.dir.clone();
    ensure_dir(&dir)?;
    print_posterior(&post);
    write_posterior_outputs(&dir, &post)?;
    let mut doc = ResultsDocument::new(command, cfg, None);
    doc.posterior = Some(post);
    write_results(dir.join("results.json"), &doc)?;
    write_timing(dir.join("results.timing.json"), &timing(command, start, t0))?;
    println!("results written to {}", dir.display());
    Ok(())
}

fn run_scaling(a: &ScalingArgs) -> Result<()> {
    let (start, t0) = (SystemTime::now(), Instant::now());
    let mut cfg = infer_config(&a.infer)?;
    if let Some(ns) = &a.ns {
        cfg.scaling.n_traces = ns.clone();
    }
    if let Some(r) = a.reps {
        cfg.scaling.repetitions = r;
    }
    if let Some(s) = a.seed {
        cfg.scaling.seed = s;
    }
    if let Some(p) = &a.parameter {
        cfg.scaling.parameter = p.clone();
    }
    cfg.validate()?;
    let o = cfg.require_orientation()?.matrix()?;
    let data = load_data(&cfg, &a.infer)?;
    let mut options = cfg.inference.options.clone();
    options.box_points = cfg.scaling.box_points;
    let sc = &cfg.scaling;
    let study = scaling_study(
        &data,
        KnownParams::Orientation(o),
        &cfg.lineshape,
        &cfg.noise,
        &cfg.inference.field_space,
        &options,
        &sc.parameter,
        &sc.n_traces,
        sc.repetitions,
        sc.seed,
    )?;
    for r in &study.rows {
        println!(
            "N = {:3}: mean width {:.4e}, std {:.2e}",
            r.n_traces, r.mean_width, r.std_width
        );
    }
    if let Some(s) = study.slope {
        println!("log-log slope {s:.3}");
    }
    let dir = cfg.output.dir.clone();
    ensure_dir(&dir)?;
    write_file(&dir.join("scaling.csv"), &format_scaling(&study))?;
    let seed = cfg.scaling.seed;
    let mut doc = ResultsDocument::new("scaling", cfg, Some(seed));
    doc.scaling = Some(study);
    write_results(dir.join("results.json"), &doc)?;
    write_timing(dir.join("results.timing.json"), &timing("scaling", start, t0))?;
    println!("results written to {}", dir.display());
    Ok(())
}

fn run_export(a: &ExportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let dir = a
        .out_dir
        .clone()
        .unwrap_or_else(|| a.input.parent().map(Path::to_path_buf).unwrap_or_default());
    if !dir.as_os_str().is_empty() {
        ensure_dir(&dir)?;
    }
    let stem = a
        .input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("export")
        .to_string();
    let mut written = Vec::new();
    if text.starts_with(PLMAP_MAGIC) {
        let map = crate::data_io::parse_pl_map(&text, &a.input)?;
        let p = dir.join(format!("{stem}.matrix.dat"));
        write_file(&p, &format_map_matrix(&map))?;
        written.push(p);
    } else if text.trim_start().starts_with('{') {
        let doc = read_results(&a.input)?;
        if let Some(post) = &doc.posterior {
            for m in &post.marginals {
                let p = dir.join(format!("{stem}.marginal_{}.dat", m.name));
                write_file(&p, &format_marginal(m, parameter_unit(&m.name)))?;
                written.push(p);
            }
            let p = dir.join(format!("{stem}.modes.dat"));
            write_file(&p, &format_modes(post))?;
            written.push(p);
        }
        if let Some(s) = &doc.scaling {
            let p = dir.join(format!("{stem}.scaling.dat"));
            write_file(&p, &format_scaling(s))?;
            written.push(p);
        }
    } else {
        return Err(Error::Parse {
            path: a.input.clone(),
            line: 1,
            message: "neither a PL map nor a results document".into(),
        });
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

/// Result of the oracle command: `Ok(true)` when every check passed.
fn run_oracle(a: &OracleArgs) -> Result<bool> {
    let r = default_sweep(a.seed, a.trials)?;
    for p in &r.planes {
        println!(
            "plane {}: {}/{} degenerate (max mismatch {:.2e} Hz)",
            p.plane, p.passed, p.trials, p.max_mismatch_hz
        );
    }
    let plane_pass: usize = r.planes.iter().map(|p| p.passed).sum();
    let plane_total: usize = r.planes.iter().map(|p| p.trials).sum();
    println!("planes: {plane_pass}/{plane_total} passed");
    println!(
        "generic: {}/{} non-degenerate (min gap {:.3e} Hz)",
        r.generic_passed, r.generic_trials, r.min_generic_gap_hz
    );
    let ok = r.all_passed();
    println!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Simulate(a) => run_simulate(a)?,
        Command::InferOrientation(a) => run_infer(a, InferenceMode::Orientation)?,
        Command::InferField(a) => run_infer(a, InferenceMode::Field)?,
        Command::Scaling(a) => run_scaling(a)?,
        Command::ExportPlot(a) => run_export(a)?,
        Command::VerifyOracle(a) => return Ok(if run_oracle(a)? { 0 } else { 2 }),
    }
    Ok(0)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error[invalid-input]: --threads must be >= 1");
            return 1;
        }
        // Fails only if a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e);
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
