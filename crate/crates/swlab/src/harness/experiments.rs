//! Canned experiments: the torpidity trend across gadget sizes, and exact
//! relaxation contrast between ferromagnetic and frustrated cycles.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FieldSource};
use super::manifest::{read_manifest, write_manifest, ReplicaSeed, RunManifest};
use super::series::write_series;
use crate::bounds::{bounds_report, BoundsReport};
use crate::disorder::{
    build_gadget, read_field, sample_couplings, verify_gadget, CouplingField, DisorderSpec,
    FieldMeta, GadgetParams, write_field,
};
use crate::dynamics::{derive_replica_seed, run, SwChain, SwObserver};
use crate::error::{Result, SwError};
use crate::lattice::LatticeBox;
use crate::model::GibbsModel;
use crate::observables::{
    estimate_autocorr, estimate_tau_exp, event_transition_frequency, EventSign, EventSpec,
    RateEstimate,
};
use crate::spectral::{exact_transition_matrix, spectrum};

/// Seed for the quenched couplings of level `l` (shared by all replicas and
/// temperatures of that level).
pub fn field_stream(base_seed: u64, l: usize) -> u64 {
    derive_replica_seed(derive_replica_seed(base_seed, 0x00F1_E1D0), l as u64)
}

/// Seed for one chain replica.
pub fn chain_stream(base_seed: u64, l: usize, beta: f64, replica: usize) -> u64 {
    let a = derive_replica_seed(base_seed, l as u64);
    let b = derive_replica_seed(a, beta.to_bits());
    derive_replica_seed(b, replica as u64 + 1)
}

fn level_field(
    config: &ExperimentConfig,
    base_seed: u64,
    l: usize,
) -> Result<(CouplingField, GadgetParams)> {
    match &config.field {
        FieldSource::Generated { dim, margin, background } => {
            let side = 4 * l + 2 * margin;
            let lattice = LatticeBox::at_origin(*dim, side)?;
            let spec = DisorderSpec {
                distribution: background.clone(),
                seed: field_stream(base_seed, l),
            };
            let bg = sample_couplings(&lattice, &spec)?;
            let params = GadgetParams {
                l,
                delta: config.gadget.delta,
                s: config.gadget.s,
                rho_d: config.gadget.rho_d,
                pinning: config.gadget.pinning.clone(),
                center: vec![(side / 2) as i64; *dim],
            };
            let field = build_gadget(&bg, &params)?;
            if !verify_gadget(&field, &params)?.ok() {
                return Err(SwError::Internal(format!(
                    "freshly planted gadget at l = {l} fails verification"
                )));
            }
            Ok((field, params))
        }
        FieldSource::File { path } => {
            let (field, meta) = read_field(path)?;
            let params = meta
                .gadgets
                .iter()
                .find(|g| g.l == l)
                .cloned()
                .ok_or_else(|| {
                    SwError::Parameter(format!("field file has no gadget with l = {l}"))
                })?;
            if !verify_gadget(&field, &params)?.ok() {
                return Err(SwError::Parameter(format!(
                    "gadget at l = {l} in {} fails verification",
                    path.display()
                )));
            }
            Ok((field, params))
        }
    }
}

/// One (l, beta, replica) outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TorpidRow {
    pub l: usize,
    pub beta: f64,
    pub replica: usize,
    pub chain_seed: u64,
    /// Tail-fit exponential time of the minus-event indicator, when the
    /// series carried enough signal.
    pub tau_exp_f: Option<f64>,
    /// Lag-1 normalized autocorrelation of the same indicator.
    pub rho1: Option<f64>,
    pub rate_minus_to_plus: RateEstimate,
    pub rate_plus_to_minus: RateEstimate,
    pub occupancy_outside: RateEstimate,
    pub series_file: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSummary {
    pub l: usize,
    pub beta: f64,
    pub tau_median: Option<f64>,
    pub rho1_median: Option<f64>,
    /// Median over replicas of the combined event switch rate.
    pub switch_rate_median: Option<f64>,
    pub outside_median: Option<f64>,
    pub bounds: BoundsReport,
}

/// Paired one-sided sign test between two adjacent levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendPair {
    pub beta: f64,
    pub l_low: usize,
    pub l_high: usize,
    pub tau_increases: usize,
    pub tau_pairs: usize,
    pub tau_sign_p: f64,
    pub rate_decreases: usize,
    pub rate_pairs: usize,
    pub rate_sign_p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TorpidSummary {
    pub rows: Vec<TorpidRow>,
    pub levels: Vec<LevelSummary>,
    pub pairs: Vec<TrendPair>,
    pub tau_medians_nondecreasing: bool,
    pub switch_rate_medians_nonincreasing: bool,
    pub incomplete: bool,
}

/// `P(Bin(n, 1/2) >= k)`, the one-sided sign-test p-value.
pub fn sign_test_p(n: usize, k: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut coeff = 1.0f64;
    let mut total = 0.0;
    // Walk the binomial coefficients from i = 0 upward.
    for i in 0..=n {
        if i >= k {
            total += coeff;
        }
        coeff = coeff * (n - i) as f64 / (i + 1) as f64;
    }
    total / 2f64.powi(n as i32)
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

fn run_torpid_replica(
    field: &CouplingField,
    params: &GadgetParams,
    config: &ExperimentConfig,
    beta: f64,
    replica: usize,
    chain_seed: u64,
    out_dir: &Path,
) -> Result<TorpidRow> {
    let lattice = field.lattice();
    let delta = config.gadget.delta;
    let plus_ev = EventSpec::from_gadget(params, delta, EventSign::Plus).compile(lattice)?;
    let minus_ev = EventSpec::from_gadget(params, delta, EventSign::Minus).compile(lattice)?;
    let acc_ev = plus_ev.clone();

    let observers = vec![
        SwObserver::new("s_plus", {
            let ev = plus_ev;
            move |c: &SwChain| Ok(f64::from(ev.indicator(c.model().lattice(), c.sigma())))
        }),
        SwObserver::new("s_minus", {
            let ev = minus_ev;
            move |c: &SwChain| Ok(f64::from(ev.indicator(c.model().lattice(), c.sigma())))
        }),
        SwObserver::new("accordance", {
            let ev = acc_ev;
            move |c: &SwChain| Ok(ev.accordance(c.model().lattice(), c.sigma()))
        }),
    ];

    let model = GibbsModel::new(field.clone(), beta)?;
    let mut chain = SwChain::new(model, chain_seed);
    let record = run(&mut chain, config.sweeps, config.burn_in, &observers)?;

    let series_file = format!("torpid_l{}_beta{beta}_r{replica}.csv", params.l);
    write_series(&out_dir.join(&series_file), &record)?;

    let minus_col = record.column("s_minus").expect("observer recorded");
    let plus_col = record.column("s_plus").expect("observer recorded");
    let minus_bool: Vec<bool> = minus_col.iter().map(|&x| x > 0.5).collect();
    let plus_bool: Vec<bool> = plus_col.iter().map(|&x| x > 0.5).collect();
    let trans = event_transition_frequency(&plus_bool, &minus_bool)?;

    let t_max = ((config.sweeps / 10).clamp(10, 300)) as usize;
    let (tau, rho1) = match estimate_autocorr(minus_col, t_max) {
        Ok(est) => (estimate_tau_exp(&est).ok(), Some(est.rho[1])),
        Err(_) => (None, None),
    };

    Ok(TorpidRow {
        l: params.l,
        beta,
        replica,
        chain_seed,
        tau_exp_f: tau,
        rho1,
        rate_minus_to_plus: trans.rate_minus_to_plus,
        rate_plus_to_minus: trans.rate_plus_to_minus,
        occupancy_outside: trans.occupancy_outside,
        series_file,
        error: None,
    })
}

fn switch_rate(row: &TorpidRow) -> f64 {
    row.rate_minus_to_plus.rate + row.rate_plus_to_minus.rate
}

pub fn experiment_torpid(config: &ExperimentConfig) -> Result<(TorpidSummary, RunManifest)> {
    let base_seed = config.effective_base_seed()?;
    experiment_torpid_with_seed(config, base_seed)
}

pub fn experiment_torpid_with_seed(
    config: &ExperimentConfig,
    base_seed: u64,
) -> Result<(TorpidSummary, RunManifest)> {
    config.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(&config.out_dir)?;
    let mut manifest = RunManifest::new("torpid".into(), config.clone(), base_seed);

    let dim = match &config.field {
        FieldSource::Generated { dim, .. } => *dim,
        FieldSource::File { path } => read_field(path)?.0.lattice().dim(),
    };

    let mut rows: Vec<TorpidRow> = Vec::new();
    let mut levels: Vec<LevelSummary> = Vec::new();
    let mut incomplete = false;

    for &l in &config.ls {
        let (field, params) = level_field(config, base_seed, l)?;
        let field_file = format!("field_l{l}.json");
        let meta = FieldMeta { disorder: None, gadgets: vec![params.clone()] };
        write_field(&config.out_dir.join(&field_file), &field, &meta)?;
        manifest.outputs.push(field_file);

        for &beta in &config.betas {
            let replica_rows: Vec<TorpidRow> = (0..config.replicas)
                .into_par_iter()
                .map(|r| {
                    let seed = chain_stream(base_seed, l, beta, r);
                    run_torpid_replica(&field, &params, config, beta, r, seed, &config.out_dir)
                        .unwrap_or_else(|e| TorpidRow {
                            l,
                            beta,
                            replica: r,
                            chain_seed: seed,
                            tau_exp_f: None,
                            rho1: None,
                            rate_minus_to_plus: RateEstimate {
                                count: 0,
                                total: 0,
                                rate: 0.0,
                                ci_low: 0.0,
                                ci_high: 1.0,
                            },
                            rate_plus_to_minus: RateEstimate {
                                count: 0,
                                total: 0,
                                rate: 0.0,
                                ci_low: 0.0,
                                ci_high: 1.0,
                            },
                            occupancy_outside: RateEstimate {
                                count: 0,
                                total: 0,
                                rate: 0.0,
                                ci_low: 0.0,
                                ci_high: 1.0,
                            },
                            series_file: String::new(),
                            error: Some(e.to_string()),
                        })
                })
                .collect();

            for row in &replica_rows {
                if row.error.is_some() || row.tau_exp_f.is_none() {
                    incomplete = true;
                }
                manifest.replica_seeds.push(ReplicaSeed {
                    l,
                    beta,
                    replica: row.replica,
                    field_seed: field_stream(base_seed, l),
                    chain_seed: row.chain_seed,
                });
                if !row.series_file.is_empty() {
                    manifest.outputs.push(row.series_file.clone());
                }
            }

            let mut taus: Vec<f64> =
                replica_rows.iter().filter_map(|r| r.tau_exp_f).collect();
            let mut rho1s: Vec<f64> = replica_rows.iter().filter_map(|r| r.rho1).collect();
            let mut switches: Vec<f64> = replica_rows
                .iter()
                .filter(|r| r.error.is_none())
                .map(switch_rate)
                .collect();
            let mut outsides: Vec<f64> = replica_rows
                .iter()
                .filter(|r| r.error.is_none())
                .map(|r| r.occupancy_outside.rate)
                .collect();
            levels.push(LevelSummary {
                l,
                beta,
                tau_median: median(&mut taus),
                rho1_median: median(&mut rho1s),
                switch_rate_median: median(&mut switches),
                outside_median: median(&mut outsides),
                bounds: bounds_report(
                    dim,
                    config.gadget.delta,
                    config.gadget.s,
                    config.gadget.rho_d,
                    beta,
                    l,
                    Some(config.sweeps),
                )?,
            });
            rows.extend(replica_rows);
        }
    }

    // Paired sign tests between adjacent levels at each temperature.
    let mut pairs = Vec::new();
    for &beta in &config.betas {
        for w in config.ls.windows(2) {
            let (l_low, l_high) = (w[0], w[1]);
            let low: Vec<&TorpidRow> = rows
                .iter()
                .filter(|r| r.l == l_low && r.beta == beta && r.error.is_none())
                .collect();
            let high: Vec<&TorpidRow> = rows
                .iter()
                .filter(|r| r.l == l_high && r.beta == beta && r.error.is_none())
                .collect();
            let mut tau_increases = 0;
            let mut tau_pairs = 0;
            let mut rate_decreases = 0;
            let mut rate_pairs = 0;
            for (a, b) in low.iter().zip(&high) {
                if let (Some(ta), Some(tb)) = (a.tau_exp_f, b.tau_exp_f) {
                    if tb != ta {
                        tau_pairs += 1;
                        if tb > ta {
                            tau_increases += 1;
                        }
                    }
                }
                let (ra, rb) = (switch_rate(a), switch_rate(b));
                if rb != ra {
                    rate_pairs += 1;
                    if rb < ra {
                        rate_decreases += 1;
                    }
                }
            }
            pairs.push(TrendPair {
                beta,
                l_low,
                l_high,
                tau_increases,
                tau_pairs,
                tau_sign_p: sign_test_p(tau_pairs, tau_increases),
                rate_decreases,
                rate_pairs,
                rate_sign_p: sign_test_p(rate_pairs, rate_decreases),
            });
        }
    }

    let tau_monotone = config.betas.iter().all(|&beta| {
        let ms: Vec<Option<f64>> = config
            .ls
            .iter()
            .map(|&l| {
                levels
                    .iter()
                    .find(|lv| lv.l == l && lv.beta == beta)
                    .and_then(|lv| lv.tau_median)
            })
            .collect();
        ms.windows(2).all(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => b >= a,
            _ => false,
        })
    });
    let rate_monotone = config.betas.iter().all(|&beta| {
        let ms: Vec<Option<f64>> = config
            .ls
            .iter()
            .map(|&l| {
                levels
                    .iter()
                    .find(|lv| lv.l == l && lv.beta == beta)
                    .and_then(|lv| lv.switch_rate_median)
            })
            .collect();
        ms.windows(2).all(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => b <= a,
            _ => false,
        })
    });

    let summary = TorpidSummary {
        rows,
        levels,
        pairs,
        tau_medians_nondecreasing: tau_monotone,
        switch_rate_medians_nonincreasing: rate_monotone,
        incomplete,
    };

    let summary_json = serde_json::to_value(&summary)?;
    manifest.summary = summary_json;
    manifest.outputs.push("torpid_summary.json".into());
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(config.out_dir.join("torpid_summary.json"), text)?;
    write_manifest(&config.out_dir.join("torpid_manifest.json"), &manifest)?;
    Ok((summary, manifest))
}

/// One (beta, field kind) outcome of the contrast experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContrastRow {
    pub beta: f64,
    pub field_kind: String,
    pub lambda1: f64,
    pub gap: f64,
    pub tau_exp: f64,
    /// Empirical lag-1 autocorrelation of the aligned indicator, when the
    /// sampled series carried variance.
    pub rho1_hat: Option<f64>,
    pub rho1_se: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContrastSummary {
    pub rows: Vec<ContrastRow>,
}

/// Exact relaxation of the four-cycle with all-positive couplings against
/// the same cycle with one negative coupling, across the configured
/// temperature grid.
pub fn experiment_ferro_contrast(
    config: &ExperimentConfig,
) -> Result<(ContrastSummary, RunManifest)> {
    let base_seed = config.effective_base_seed()?;
    experiment_ferro_contrast_with_seed(config, base_seed)
}

pub fn experiment_ferro_contrast_with_seed(
    config: &ExperimentConfig,
    base_seed: u64,
) -> Result<(ContrastSummary, RunManifest)> {
    config.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(&config.out_dir)?;
    let mut manifest = RunManifest::new("ferro_contrast".into(), config.clone(), base_seed);

    let lattice = LatticeBox::at_origin(2, 2)?;
    let fields = [
        ("ferromagnet", CouplingField::constant(lattice.clone(), 1.0)),
        (
            "frustrated",
            CouplingField::new(lattice.clone(), vec![1.0, 1.0, 1.0, -1.0])?,
        ),
    ];

    let mut rows = Vec::new();
    for &beta in &config.betas {
        for (kind_idx, (kind, field)) in fields.iter().enumerate() {
            let model = GibbsModel::new(field.clone(), beta)?;
            let tm = exact_transition_matrix(&model)?;
            let rep = spectrum(&tm, &model)?;

            let seed = chain_stream(base_seed, kind_idx + 2, beta, 0);
            let mut chain = SwChain::new(model.clone(), seed);
            let observers = vec![SwObserver::new("aligned", |c: &SwChain| {
                let s = c.sigma();
                Ok(f64::from((1..s.len() as u32).all(|v| s.get(v) == s.get(0))))
            })];
            let record = run(&mut chain, config.sweeps, config.burn_in, &observers)?;
            let (rho1_hat, rho1_se) =
                match estimate_autocorr(record.column("aligned").unwrap(), 10) {
                    Ok(est) => (Some(est.rho[1]), Some(est.se[1])),
                    Err(_) => (None, None),
                };

            manifest.replica_seeds.push(ReplicaSeed {
                l: kind_idx + 2,
                beta,
                replica: 0,
                field_seed: 0,
                chain_seed: seed,
            });
            rows.push(ContrastRow {
                beta,
                field_kind: kind.to_string(),
                lambda1: rep.lambda1,
                gap: rep.gap,
                tau_exp: rep.tau_exp,
                rho1_hat,
                rho1_se,
            });
        }
    }

    let mut csv = String::from("beta,field,lambda1,gap,tau_exp,rho1_hat,rho1_se\n");
    for r in &rows {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.beta,
            r.field_kind,
            r.lambda1,
            r.gap,
            r.tau_exp,
            opt(r.rho1_hat),
            opt(r.rho1_se)
        ));
    }
    std::fs::write(config.out_dir.join("ferro_contrast.csv"), csv)?;
    manifest.outputs.push("ferro_contrast.csv".into());

    let summary = ContrastSummary { rows };
    manifest.summary = serde_json::to_value(&summary)?;
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(config.out_dir.join("ferro_contrast_summary.json"), text)?;
    manifest.outputs.push("ferro_contrast_summary.json".into());
    write_manifest(&config.out_dir.join("ferro_contrast_manifest.json"), &manifest)?;
    Ok((summary, manifest))
}

/// Re-run the experiment recorded in a manifest into a fresh directory,
/// using the manifest's seed rather than the environment.
pub fn rerun_from_manifest(manifest_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let old = read_manifest(manifest_path)?;
    let mut config = old.config.clone();
    config.out_dir = out_dir.to_path_buf();
    match old.experiment.as_str() {
        "torpid" => experiment_torpid_with_seed(&config, old.base_seed).map(|(_, m)| m),
        "ferro_contrast" => {
            experiment_ferro_contrast_with_seed(&config, old.base_seed).map(|(_, m)| m)
        }
        other => Err(SwError::Parameter(format!("unknown experiment {other:?} in manifest"))),
    }
}
