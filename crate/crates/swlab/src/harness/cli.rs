//! Command-line entry points. Usage errors exit 2 (via clap); operational
//! errors print a categorized message and exit 1.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::{
    default_ferro_contrast_config, default_torpid_config, resolve_base_seed, ExperimentConfig,
};
use super::experiments::{experiment_ferro_contrast, experiment_torpid};
use super::series::{read_series, write_series};
use crate::bounds;
use crate::disorder::{
    build_gadget, read_field, sample_couplings, scan_for_gadget, verify_gadget,
    CouplingDistribution, CouplingField, DisorderSpec, FieldMeta, GadgetParams, Pinning,
    write_field,
};
use crate::dynamics::{run as run_chain, SwChain, SwObserver};
use crate::error::{Result, SwError};
use crate::lattice::LatticeBox;
use crate::model::GibbsModel;
use crate::observables::{estimate_autocorr, estimate_tau_exp, EventSign, EventSpec};
use crate::spectral::{
    exact_transition_matrix_with_caps, spectrum, write_spectrum, EnumerationCaps,
};

#[derive(Parser)]
#[command(
    name = "swlab",
    version,
    about = "Swendsen-Wang dynamics on disordered Ising boxes: gadgets, exact spectra, experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample i.i.d. couplings into a coupling-field file.
    GenDisorder(GenDisorderArgs),
    /// Overwrite a cube of a field with the frustrated coupling construction.
    PlantGadget(PlantGadgetArgs),
    /// Check the construction rules at one placement; exit 1 on failure.
    VerifyGadget(GadgetAtArgs),
    /// List every center at which the construction rules hold.
    ScanGadget(ScanGadgetArgs),
    /// Run a seeded chain and record observables to CSV.
    Simulate(SimulateArgs),
    /// Exact kernel, stationarity checks, and spectrum on a tiny box.
    Exact(ExactArgs),
    /// Autocorrelation table and tail time estimate for one CSV column.
    Autocorr(AutocorrArgs),
    /// Closed-form constants, the admissible s interval, and bounds.
    Bounds(BoundsArgs),
    /// Canned multi-run experiments driven by a JSON config.
    Experiment {
        #[command(subcommand)]
        which: ExperimentCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DistKind {
    Uniform,
    Gaussian,
    Constant,
}

#[derive(Args)]
struct GenDisorderArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    side: usize,
    /// Lowest corner, comma-separated; defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    anchor: Option<Vec<i64>>,
    #[arg(long, value_enum, default_value = "uniform")]
    dist: DistKind,
    /// Standard deviation for the gaussian family.
    #[arg(long, default_value_t = 1.0)]
    stddev: f64,
    /// Value for the constant family.
    #[arg(long, default_value_t = 1.0)]
    value: f64,
    /// Base seed; the SEED environment variable overrides it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GadgetCommonArgs {
    /// Gadget center, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Vec<i64>,
    #[arg(long)]
    l: usize,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 0.4995)]
    s: f64,
    #[arg(long, default_value_t = 0.5)]
    rho_d: f64,
}

#[derive(Args)]
struct PlantGadgetArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    gadget: GadgetCommonArgs,
    #[arg(long, value_enum, default_value = "midpoint")]
    pinning: PinningKind,
    /// Seed for sampled pinning.
    #[arg(long, default_value_t = 0)]
    pin_seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum PinningKind {
    Midpoint,
    Sampled,
}

#[derive(Args)]
struct GadgetAtArgs {
    #[arg(long)]
    field: PathBuf,
    #[command(flatten)]
    gadget: GadgetCommonArgs,
}

#[derive(Args)]
struct ScanGadgetArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    l: usize,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 0.4995)]
    s: f64,
    #[arg(long, default_value_t = 0.5)]
    rho_d: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    sweeps: u64,
    #[arg(long, default_value_t = 0)]
    burn_in: u64,
    /// Base seed; the SEED environment variable overrides it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated: energy, magnetization, aligned, accordance,
    /// s_plus, s_minus (the last three need a gadget in the field file).
    #[arg(long, value_delimiter = ',', default_value = "energy,magnetization")]
    observables: Vec<String>,
    /// Event margin for s_plus / s_minus.
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    beta: f64,
    /// Spectrum report destination (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    max_vertices: usize,
    #[arg(long, default_value_t = 20)]
    max_bonds: usize,
}

#[derive(Args)]
struct AutocorrArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    column: String,
    #[arg(long, default_value_t = 50)]
    t_max: usize,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    rho_d: f64,
    /// Defaults to the midpoint of the admissible interval.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    t: Option<u64>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Torpidity trend across gadget sizes.
    Torpid(ExperimentArgs),
    /// Exact ferro vs frustrated relaxation curves on four-cycles.
    FerroContrast(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, required_unless_present = "emit_default")]
    config: Option<PathBuf>,
    /// Print a runnable default config to stdout and exit.
    #[arg(long)]
    emit_default: bool,
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn gadget_params(args: &GadgetCommonArgs, pinning: Pinning) -> GadgetParams {
    GadgetParams {
        l: args.l,
        delta: args.delta,
        s: args.s,
        rho_d: args.rho_d,
        pinning,
        center: args.center.clone(),
    }
}

fn build_observers(
    names: &[String],
    meta: &FieldMeta,
    field: &CouplingField,
    delta: f64,
) -> Result<Vec<SwObserver>> {
    let lattice = field.lattice();
    let mut observers = Vec::new();
    for name in names {
        match name.as_str() {
            "energy" => observers.push(SwObserver::new("energy", |c: &SwChain| {
                c.model().hamiltonian(c.sigma())
            })),
            "magnetization" => observers.push(SwObserver::new("magnetization", |c: &SwChain| {
                let s = c.sigma();
                let total: i64 = (0..s.len() as u32).map(|v| i64::from(s.get(v))).sum();
                Ok(total as f64 / s.len() as f64)
            })),
            "aligned" => observers.push(SwObserver::new("aligned", |c: &SwChain| {
                let s = c.sigma();
                Ok(f64::from((1..s.len() as u32).all(|v| s.get(v) == s.get(0))))
            })),
            "accordance" | "s_plus" | "s_minus" => {
                let gadget = meta.gadgets.first().ok_or_else(|| {
                    SwError::Parameter(format!(
                        "observable {name:?} needs a gadget placement in the field file"
                    ))
                })?;
                let sign = if name == "s_minus" { EventSign::Minus } else { EventSign::Plus };
                let ev = EventSpec::from_gadget(gadget, delta, sign).compile(lattice)?;
                let kind = name.clone();
                observers.push(SwObserver::new(name.clone(), move |c: &SwChain| {
                    Ok(if kind == "accordance" {
                        ev.accordance(c.model().lattice(), c.sigma())
                    } else {
                        f64::from(ev.indicator(c.model().lattice(), c.sigma()))
                    })
                }));
            }
            other => {
                return Err(SwError::Parameter(format!(
                    "unknown observable {other:?}; available: energy, magnetization, aligned, accordance, s_plus, s_minus"
                )))
            }
        }
    }
    Ok(observers)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::GenDisorder(args) => {
            let anchor = args.anchor.unwrap_or_else(|| vec![0; args.dim]);
            let lattice = LatticeBox::new(args.dim, args.side, anchor)?;
            let distribution = match args.dist {
                DistKind::Uniform => CouplingDistribution::Uniform,
                DistKind::Gaussian => CouplingDistribution::Gaussian { stddev: args.stddev },
                DistKind::Constant => CouplingDistribution::Constant { value: args.value },
            };
            let spec = DisorderSpec { distribution, seed: resolve_base_seed(args.seed)? };
            let field = sample_couplings(&lattice, &spec)?;
            let meta = FieldMeta { disorder: Some(spec), gadgets: vec![] };
            write_field(&args.out, &field, &meta)?;
            println!(
                "wrote {} ({} vertices, {} edges)",
                args.out.display(),
                lattice.vertex_count(),
                lattice.edge_count()
            );
            Ok(0)
        }
        Command::PlantGadget(args) => {
            let (field, mut meta) = read_field(&args.field)?;
            let pinning = match args.pinning {
                PinningKind::Midpoint => Pinning::Midpoint,
                PinningKind::Sampled => Pinning::Sampled { seed: args.pin_seed },
            };
            let params = gadget_params(&args.gadget, pinning);
            let planted = build_gadget(&field, &params)?;
            let report = verify_gadget(&planted, &params)?;
            if !report.ok() {
                return Err(SwError::Internal("planted gadget fails verification".into()));
            }
            meta.gadgets.push(params);
            write_field(&args.out, &planted, &meta)?;
            println!("planted gadget at {:?}, wrote {}", args.gadget.center, args.out.display());
            Ok(0)
        }
        Command::VerifyGadget(args) => {
            let (field, _) = read_field(&args.field)?;
            let params = gadget_params(&args.gadget, Pinning::Midpoint);
            let report = verify_gadget(&field, &params)?;
            println!(
                "shell sum {:.6e} < {:.6e}: {}",
                report.shell_sum,
                report.shell_bound,
                report.shell_ok
            );
            println!(
                "bulk failures: {}; band failures: {}; antisymmetry failures: {}",
                report.bulk_failures.len(),
                report.band_failures.len(),
                report.antisymmetry_failures.len()
            );
            println!(
                "band counts: {} positive / {} negative",
                report.positive_band_count, report.negative_band_count
            );
            if report.ok() {
                println!("verdict: PASS");
                Ok(0)
            } else {
                for e in report
                    .bulk_failures
                    .iter()
                    .chain(&report.band_failures)
                    .chain(&report.antisymmetry_failures)
                    .take(20)
                {
                    let [a, b] = field.lattice().edge_endpoints(*e);
                    println!("  offending edge {e}: ({a}, {b}) J = {}", field.coupling(*e));
                }
                println!("verdict: FAIL");
                Ok(1)
            }
        }
        Command::ScanGadget(args) => {
            let (field, _) = read_field(&args.field)?;
            let template = GadgetParams {
                l: args.l,
                delta: args.delta,
                s: args.s,
                rho_d: args.rho_d,
                pinning: Pinning::Midpoint,
                center: vec![0; field.lattice().dim()],
            };
            let hits = scan_for_gadget(&field, &template)?;
            println!("{} hit(s)", hits.len());
            for c in &hits {
                println!("{c:?}");
            }
            Ok(0)
        }
        Command::Simulate(args) => {
            let (field, meta) = read_field(&args.field)?;
            let observers = build_observers(&args.observables, &meta, &field, args.delta)?;
            let model = GibbsModel::new(field, args.beta)?;
            let seed = resolve_base_seed(args.seed)?;
            let mut chain = SwChain::new(model, seed);
            let record = run_chain(&mut chain, args.sweeps, args.burn_in, &observers)?;
            write_series(&args.out, &record)?;
            println!("wrote {} ({} sweeps, seed {seed})", args.out.display(), record.rows());
            Ok(0)
        }
        Command::Exact(args) => {
            let (field, _) = read_field(&args.field)?;
            let model = GibbsModel::new(field, args.beta)?;
            let caps = EnumerationCaps {
                max_vertices: args.max_vertices,
                max_bond_set: args.max_bonds,
            };
            let tm = exact_transition_matrix_with_caps(&model, &caps)?;
            let report = spectrum(&tm, &model)?;
            println!(
                "states {}: lambda1 {:.12}, R {:.12}, gap {:.12}, tau_exp {:.9}",
                tm.states(),
                report.lambda1,
                report.r,
                report.gap,
                report.tau_exp
            );
            println!(
                "stationary tv error {:.3e}, detailed-balance residual {:.3e}",
                report.tv_error, report.db_residual
            );
            if let Some(out) = args.out {
                write_spectrum(&out, &report)?;
                println!("wrote {}", out.display());
            }
            Ok(0)
        }
        Command::Autocorr(args) => {
            let record = read_series(&args.series)?;
            let column = record.column(&args.column).ok_or_else(|| {
                SwError::Parameter(format!(
                    "no column {:?}; available: {:?}",
                    args.column, record.names
                ))
            })?;
            let est = estimate_autocorr(column, args.t_max)?;
            println!("t,rho,se");
            for t in 0..est.rho.len() {
                println!("{t},{},{}", est.rho[t], est.se[t]);
            }
            match estimate_tau_exp(&est) {
                Ok(tau) => println!("tau_exp_f estimate: {tau}"),
                Err(e) => println!("tau_exp_f estimate unavailable: {e}"),
            }
            Ok(0)
        }
        Command::Bounds(args) => {
            let (lo, hi) = bounds::s_interval(args.delta, args.rho_d)?;
            let s = args.s.unwrap_or(0.5 * (lo + hi));
            println!("s interval: ({lo:.9}, {hi:.9}); using s = {s:.9}");
            let k = bounds::k_constants(args.dim, args.delta, s, args.rho_d)?;
            println!("a_d = {}", bounds::a_d(args.delta, args.rho_d));
            println!(
                "K~1 = {:.9}, K1 = {:.9}, K2 = {:.9}, K3 = {:.9}",
                k.k_tilde_1, k.k1, k.k2, k.k3
            );
            let cons = bounds::check_constraints(args.dim, args.delta, s, args.rho_d)?;
            println!(
                "literal system: positivity {}, second {}, third {}, ranges {}/{}",
                cons.literal.positivity,
                cons.literal.k1_gt_k2,
                cons.literal.k3_gt_k2,
                cons.literal.s_range,
                cons.literal.delta_range
            );
            println!(
                "direct orderings: K2 > 0 {}, K1 > K2 {}, K3 > K2 {}",
                cons.direct.k2_positive, cons.direct.k1_gt_k2, cons.direct.k3_gt_k2
            );
            if let (Some(beta), Some(l)) = (args.beta, args.l) {
                let report =
                    bounds::bounds_report(args.dim, args.delta, s, args.rho_d, beta, l, args.t)?;
                println!(
                    "event bound e^(-K1 beta l^(d-1)) = {:.6e}; transition bound = {:.6e}",
                    report.event_bound, report.transition_bound
                );
                if let Some(rb) = report.ratio_bound {
                    println!("ratio bound at t = {}: {:.6e}", args.t.unwrap(), rb);
                }
                if let Some(tl) = report.suggested_time {
                    println!("suggested time schedule t_l = {tl}");
                }
            }
            Ok(0)
        }
        Command::Experiment { which } => match which {
            ExperimentCommand::Torpid(args) => {
                if args.emit_default {
                    let mut text = serde_json::to_string_pretty(&default_torpid_config())?;
                    text.push('\n');
                    print!("{text}");
                    return Ok(0);
                }
                let config = ExperimentConfig::load(args.config.as_deref().unwrap())?;
                let (summary, manifest) = experiment_torpid(&config)?;
                for level in &summary.levels {
                    println!(
                        "l = {} beta = {}: tau median {:?}, switch rate median {:?}, outside median {:?}",
                        level.l,
                        level.beta,
                        level.tau_median,
                        level.switch_rate_median,
                        level.outside_median
                    );
                }
                for pair in &summary.pairs {
                    println!(
                        "l {} -> {}: tau up {}/{} (p = {:.4}), rate down {}/{} (p = {:.4})",
                        pair.l_low,
                        pair.l_high,
                        pair.tau_increases,
                        pair.tau_pairs,
                        pair.tau_sign_p,
                        pair.rate_decreases,
                        pair.rate_pairs,
                        pair.rate_sign_p
                    );
                }
                println!(
                    "tau medians nondecreasing: {}; switch rates nonincreasing: {}{}",
                    summary.tau_medians_nondecreasing,
                    summary.switch_rate_medians_nonincreasing,
                    if summary.incomplete { " (INCOMPLETE)" } else { "" }
                );
                println!(
                    "outputs in {} ({:.1}s)",
                    config.out_dir.display(),
                    manifest.wall_clock_seconds
                );
                Ok(0)
            }
            ExperimentCommand::FerroContrast(args) => {
                if args.emit_default {
                    let mut text =
                        serde_json::to_string_pretty(&default_ferro_contrast_config())?;
                    text.push('\n');
                    print!("{text}");
                    return Ok(0);
                }
                let config = ExperimentConfig::load(args.config.as_deref().unwrap())?;
                let (summary, manifest) = experiment_ferro_contrast(&config)?;
                println!("beta,field,lambda1,tau_exp");
                for row in &summary.rows {
                    println!(
                        "{},{},{},{}",
                        row.beta, row.field_kind, row.lambda1, row.tau_exp
                    );
                }
                println!(
                    "outputs in {} ({:.1}s)",
                    config.out_dir.display(),
                    manifest.wall_clock_seconds
                );
                Ok(0)
            }
        },
    }
}
