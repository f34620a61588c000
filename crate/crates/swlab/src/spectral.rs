//! Exact analysis of the sweep kernel on tiny boxes: the full transition
//! matrix by enumeration over bond subsets, stationarity and
//! detailed-balance checks, the real spectrum through the symmetrized
//! operator, exact autocorrelations, Rayleigh-quotient lower bounds, and a
//! tail-slope estimate of the exponential autocorrelation time.
//!
//! States are bit-packed spin configurations: bit v of the state index is
//! `(sigma_v + 1) / 2`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::SignedUnionFind;
use crate::error::{Result, SwError};
use crate::model::{GibbsModel, SpinConfig};

/// Enumeration limits: number of vertices (states are `2^|V|`) and the
/// per-state count of satisfiable bonds (subsets are `2^|A|`).
#[derive(Debug, Clone, Copy)]
pub struct EnumerationCaps {
    pub max_vertices: usize,
    pub max_bond_set: usize,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        Self { max_vertices: 16, max_bond_set: 20 }
    }
}

/// Vertex cap for the matrix-free power iteration.
pub const POWER_ITERATION_CAP: usize = 24;

/// Detailed-balance residual above which the symmetric eigenproblem is
/// refused.
pub const DB_REFUSAL_TOLERANCE: f64 = 1e-9;

/// Spectral radii at or below this floor are treated as zero, giving
/// `tau_exp = 0` (the one-step-mixing limit).
pub const SPECTRAL_RADIUS_FLOOR: f64 = 1e-12;

/// Dense row-stochastic transition matrix of the sweep kernel.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub n_vertices: usize,
    pub matrix: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn states(&self) -> usize {
        self.matrix.nrows()
    }
}

struct RowContext<'a> {
    nv: usize,
    edges: &'a [[u32; 2]],
    couplings: &'a [f64],
    probs: Vec<f64>,
}

impl<'a> RowContext<'a> {
    fn new(model: &'a GibbsModel) -> Self {
        let beta = model.beta();
        Self {
            nv: model.lattice().vertex_count(),
            edges: model.lattice().edges(),
            couplings: model.field().couplings(),
            probs: model
                .field()
                .couplings()
                .iter()
                .map(|&j| 1.0 - (-beta * j.abs()).exp())
                .collect(),
        }
    }
}

fn spin_of(state: u64, v: u32) -> i8 {
    if (state >> v) & 1 == 1 {
        1
    } else {
        -1
    }
}

/// Enumerate the exact one-step mass leaving state `omega`, calling
/// `emit(target, mass)` once per (bond subset, cluster sign choice). The
/// masses emitted for one `omega` sum to 1.
fn for_each_row_mass(
    ctx: &RowContext,
    omega: u64,
    caps: &EnumerationCaps,
    mut emit: impl FnMut(u64, f64),
) -> Result<()> {
    // Satisfiable bonds under omega, dropping p = 0 edges (never occupied).
    let mut sat: Vec<(u32, u32, i8, f64)> = Vec::new();
    for (e, &[a, b]) in ctx.edges.iter().enumerate() {
        let j = ctx.couplings[e];
        if j * f64::from(spin_of(omega, a) * spin_of(omega, b)) > 0.0 {
            let rel: i8 = if j > 0.0 { 1 } else { -1 };
            if ctx.probs[e] > 0.0 {
                sat.push((a, b, rel, ctx.probs[e]));
            }
        }
    }
    if sat.len() > caps.max_bond_set {
        return Err(SwError::Capacity(format!(
            "state {omega} has {} satisfiable bonds, cap is {}",
            sat.len(),
            caps.max_bond_set
        )));
    }

    let nv = ctx.nv;
    let mut uf = SignedUnionFind::new(nv);
    let mut comp = vec![0u32; nv];
    let mut neg = vec![0u8; nv];
    let mut comp_of_root = vec![u32::MAX; nv];

    for mask in 0u64..(1u64 << sat.len()) {
        let mut weight = 1.0;
        for (i, &(_, _, _, p)) in sat.iter().enumerate() {
            weight *= if (mask >> i) & 1 == 1 { p } else { 1.0 - p };
        }
        if weight == 0.0 {
            continue;
        }

        uf.reset();
        for (i, &(a, b, rel, _)) in sat.iter().enumerate() {
            if (mask >> i) & 1 == 1 {
                uf.union(a, b, rel)?;
            }
        }
        comp_of_root.fill(u32::MAX);
        let mut c = 0u32;
        for v in 0..nv as u32 {
            let (r, s) = uf.find(v);
            if comp_of_root[r as usize] == u32::MAX {
                comp_of_root[r as usize] = c;
                c += 1;
            }
            comp[v as usize] = comp_of_root[r as usize];
            neg[v as usize] = u8::from(s < 0);
        }

        let mass = weight * 0.5f64.powi(c as i32);
        for cm in 0u64..(1u64 << c) {
            let mut target = 0u64;
            for v in 0..nv {
                let bit = ((cm >> comp[v]) & 1) ^ u64::from(neg[v]);
                target |= bit << v;
            }
            emit(target, mass);
        }
    }
    Ok(())
}

pub fn exact_transition_matrix(model: &GibbsModel) -> Result<TransitionMatrix> {
    exact_transition_matrix_with_caps(model, &EnumerationCaps::default())
}

pub fn exact_transition_matrix_with_caps(
    model: &GibbsModel,
    caps: &EnumerationCaps,
) -> Result<TransitionMatrix> {
    let nv = model.lattice().vertex_count();
    if nv > caps.max_vertices {
        return Err(SwError::Capacity(format!(
            "{nv} vertices exceed the dense enumeration cap of {}",
            caps.max_vertices
        )));
    }
    let n = 1usize << nv;
    let ctx = RowContext::new(model);
    let mut data = vec![0.0f64; n * n];
    data.par_chunks_mut(n)
        .enumerate()
        .try_for_each(|(omega, row)| {
            for_each_row_mass(&ctx, omega as u64, caps, |target, mass| {
                row[target as usize] += mass;
            })
        })?;
    Ok(TransitionMatrix { n_vertices: nv, matrix: DMatrix::from_row_slice(n, n, &data) })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StationaryCheck {
    /// Total-variation distance between `pi * M` and `pi`.
    pub tv_error: f64,
    /// `max |pi_i M_ij - pi_j M_ji|`.
    pub db_residual: f64,
}

pub fn stationary_check(tm: &TransitionMatrix, model: &GibbsModel) -> Result<StationaryCheck> {
    let n = tm.states();
    let pi = model.exact_gibbs_with_cap(tm.n_vertices)?;
    let m = &tm.matrix;
    let mut tv = 0.0;
    for j in 0..n {
        let flow: f64 = (0..n).map(|i| pi[i] * m[(i, j)]).sum();
        tv += (flow - pi[j]).abs();
    }
    tv *= 0.5;
    let mut residual = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            residual = residual.max((pi[i] * m[(i, j)] - pi[j] * m[(j, i)]).abs());
        }
    }
    Ok(StationaryCheck { tv_error: tv, db_residual: residual })
}

/// Exact spectral summary of one kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    /// All eigenvalues, descending. Real because the kernel is reversible.
    pub eigenvalues: Vec<f64>,
    pub lambda1: f64,
    #[serde(rename = "R")]
    pub r: f64,
    /// `1 - lambda1`.
    pub gap: f64,
    /// `-1 / ln R`; 0 when R is at the floor, infinite when R >= 1.
    pub tau_exp: f64,
    pub db_residual: f64,
    pub tv_error: f64,
    pub model_digest: String,
}

pub fn tau_exp_from_radius(r: f64) -> f64 {
    if r <= SPECTRAL_RADIUS_FLOOR {
        0.0
    } else if r >= 1.0 {
        f64::INFINITY
    } else {
        -1.0 / r.ln()
    }
}

/// Eigenvalues of the kernel via the symmetric similarity transform
/// `D^{1/2} M D^{-1/2}` with `D = diag(pi)`. Refuses kernels whose
/// detailed-balance residual exceeds [`DB_REFUSAL_TOLERANCE`].
pub fn spectrum(tm: &TransitionMatrix, model: &GibbsModel) -> Result<SpectralReport> {
    let check = stationary_check(tm, model)?;
    if check.db_residual > DB_REFUSAL_TOLERANCE {
        return Err(SwError::Parameter(format!(
            "detailed-balance residual {} exceeds {}; symmetric eigenproblem refused",
            check.db_residual, DB_REFUSAL_TOLERANCE
        )));
    }
    let n = tm.states();
    let pi = model.exact_gibbs_with_cap(tm.n_vertices)?;
    if pi.iter().any(|&p| p <= 0.0) {
        return Err(SwError::Degenerate(
            "stationary weight underflowed to zero; beta too large for exact spectra".into(),
        ));
    }
    let sqrt_pi: Vec<f64> = pi.iter().map(|&p| p.sqrt()).collect();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = sqrt_pi[i] * tm.matrix[(i, j)] / sqrt_pi[j];
        }
    }
    // Kill the rounding asymmetry before the symmetric solver.
    let st = s.transpose();
    let sym = (s + st) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if (eigenvalues[0] - 1.0).abs() > 1e-6 {
        return Err(SwError::Internal(format!(
            "leading eigenvalue {} is not 1",
            eigenvalues[0]
        )));
    }
    let lambda1 = eigenvalues[1];
    let r = eigenvalues[1..]
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    Ok(SpectralReport {
        lambda1,
        r,
        gap: 1.0 - lambda1,
        tau_exp: tau_exp_from_radius(r),
        db_residual: check.db_residual,
        tv_error: check.tv_error,
        model_digest: model_digest(model),
        eigenvalues,
    })
}

/// `C_ff(t) = sum f(w) f(w') pi(w) M^t(w, w') - pi(f)^2`, by `t`
/// matrix-vector products. `C_ff(0)` is the stationary variance of `f`.
pub fn autocorr_exact(
    tm: &TransitionMatrix,
    model: &GibbsModel,
    f: &[f64],
    t: usize,
) -> Result<f64> {
    let n = tm.states();
    if f.len() != n {
        return Err(SwError::Shape(format!("{} observable values for {n} states", f.len())));
    }
    let pi = model.exact_gibbs_with_cap(tm.n_vertices)?;
    let mut v = DVector::from_column_slice(f);
    for _ in 0..t {
        v = &tm.matrix * v;
    }
    let mean: f64 = pi.iter().zip(f).map(|(&p, &x)| p * x).sum();
    let corr: f64 = pi.iter().zip(f).zip(v.iter()).map(|((&p, &x), &y)| p * x * y).sum();
    Ok(corr - mean * mean)
}

/// Normalized one-step autocorrelation `C_ff(1)/C_ff(0)`. For a reversible
/// kernel this never exceeds `lambda1`, with equality at the second
/// eigenfunction.
pub fn rayleigh_bound(tm: &TransitionMatrix, model: &GibbsModel, f: &[f64]) -> Result<f64> {
    let c0 = autocorr_exact(tm, model, f, 0)?;
    if !(c0 > 0.0) {
        return Err(SwError::Degenerate(format!("observable variance {c0} is not positive")));
    }
    Ok(autocorr_exact(tm, model, f, 1)? / c0)
}

/// Tail estimate of the exponential autocorrelation time of `f`: the
/// least-squares slope of `log |rho_ff(t)|` over the last half of the `t`
/// range where `|rho_ff(t)| > 1e-12`, returned as `-1/slope`.
pub fn tau_exp_from_decay(
    tm: &TransitionMatrix,
    model: &GibbsModel,
    f: &[f64],
    t_max: usize,
) -> Result<f64> {
    if t_max < 2 {
        return Err(SwError::Parameter(format!("t_max must be >= 2, got {t_max}")));
    }
    let c0 = autocorr_exact(tm, model, f, 0)?;
    if !(c0 > 0.0) {
        return Err(SwError::Degenerate(format!("observable variance {c0} is not positive")));
    }
    let n = tm.states();
    if f.len() != n {
        return Err(SwError::Shape(format!("{} observable values for {n} states", f.len())));
    }
    let pi = model.exact_gibbs_with_cap(tm.n_vertices)?;
    let mean: f64 = pi.iter().zip(f).map(|(&p, &x)| p * x).sum();

    let mut rho = Vec::with_capacity(t_max);
    let mut v = DVector::from_column_slice(f);
    for _ in 1..=t_max {
        v = &tm.matrix * v;
        let corr: f64 =
            pi.iter().zip(f).zip(v.iter()).map(|((&p, &x), &y)| p * x * y).sum();
        let r = (corr - mean * mean) / c0;
        if r.abs() <= 1e-12 {
            break;
        }
        rho.push(r);
    }
    let t_avail = rho.len();
    if t_avail < 2 {
        return Err(SwError::InsufficientSignal(format!(
            "only {t_avail} usable lags before the autocorrelation underflowed"
        )));
    }
    let lo = t_avail.div_ceil(2);
    fit_neg_inverse_slope(
        (lo..=t_avail).map(|t| (t as f64, rho[t - 1].abs().ln())),
    )
}

/// Least-squares slope of the given (t, log |rho|) points, as `-1/slope`.
pub(crate) fn fit_neg_inverse_slope(
    points: impl Iterator<Item = (f64, f64)>,
) -> Result<f64> {
    let pts: Vec<(f64, f64)> = points.collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return Err(SwError::InsufficientSignal("fewer than two points in the fit window".into()));
    }
    let tm: f64 = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym: f64 = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm) * (p.0 - tm)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(SwError::InsufficientSignal(format!(
            "autocorrelation tail is not decaying (slope {slope})"
        )));
    }
    Ok(-1.0 / slope)
}

/// Largest nontrivial eigenvalue by deflated power iteration on the
/// symmetrized operator, streaming kernel rows instead of storing them.
/// The known leading eigenvector `sqrt(pi)` is projected out each step; the
/// kernel's two-stage structure makes its spectrum nonnegative, so the
/// iteration converges to `lambda1 = R`.
pub fn lambda1_power_iteration(
    model: &GibbsModel,
    caps: &EnumerationCaps,
    max_iters: usize,
    tol: f64,
) -> Result<f64> {
    let nv = model.lattice().vertex_count();
    if nv > POWER_ITERATION_CAP {
        return Err(SwError::Capacity(format!(
            "{nv} vertices exceed the power-iteration cap of {POWER_ITERATION_CAP}"
        )));
    }
    let n = 1usize << nv;
    let pi = model.exact_gibbs_with_cap(POWER_ITERATION_CAP)?;
    let sqrt_pi: Vec<f64> = pi.iter().map(|&p| p.sqrt()).collect();
    let ctx = RowContext::new(model);

    let deflate = |v: &mut [f64]| {
        let dot: f64 = v.iter().zip(&sqrt_pi).map(|(a, b)| a * b).sum();
        for (x, s) in v.iter_mut().zip(&sqrt_pi) {
            *x -= dot * s;
        }
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    // Deterministic start vector with mass on every state.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 40) as f64 / 1e7)
        .collect();
    deflate(&mut v);
    let nv0 = norm(&v);
    if nv0 == 0.0 {
        return Ok(0.0);
    }
    v.iter_mut().for_each(|x| *x /= nv0);

    let mut lambda_prev = f64::NAN;
    for _ in 0..max_iters {
        // w = S v with S = D^{1/2} M D^{-1/2}: stream rows as dot products.
        let u: Vec<f64> = v.iter().zip(&sqrt_pi).map(|(x, s)| x / s).collect();
        let mut w: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| -> Result<f64> {
                let mut acc = 0.0;
                for_each_row_mass(&ctx, i as u64, caps, |target, mass| {
                    acc += mass * u[target as usize];
                })?;
                Ok(acc * sqrt_pi[i])
            })
            .collect::<Result<Vec<f64>>>()?;
        deflate(&mut w);
        let lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let wn = norm(&w);
        if wn <= 1e-300 {
            return Ok(0.0);
        }
        w.iter_mut().for_each(|x| *x /= wn);
        v = w;
        if !lambda_prev.is_nan() && (lambda - lambda_prev).abs() < tol {
            return Ok(lambda);
        }
        lambda_prev = lambda;
    }
    Ok(lambda_prev)
}

/// FNV-1a hash of the lattice geometry, couplings, and beta; identifies
/// which model a report belongs to.
pub fn model_digest(model: &GibbsModel) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let eat = |h: &mut u64, bytes: &[u8]| {
        for &b in bytes {
            *h ^= u64::from(b);
            *h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
    };
    let lattice = model.lattice();
    eat(&mut h, &(lattice.dim() as u64).to_le_bytes());
    eat(&mut h, &(lattice.side() as u64).to_le_bytes());
    for &a in lattice.anchor() {
        eat(&mut h, &a.to_le_bytes());
    }
    for &j in model.field().couplings() {
        eat(&mut h, &j.to_bits().to_le_bytes());
    }
    eat(&mut h, &model.beta().to_bits().to_le_bytes());
    format!("{h:016x}")
}

pub fn spectrum_to_json(report: &SpectralReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn write_spectrum(path: &Path, report: &SpectralReport) -> Result<()> {
    std::fs::write(path, spectrum_to_json(report)?)?;
    Ok(())
}

pub fn read_spectrum(path: &Path) -> Result<SpectralReport> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Indicator vector of the aligned two-spin states, the natural slow
/// observable of the two-vertex ferromagnet.
pub fn aligned_indicator(n_vertices: usize) -> Vec<f64> {
    let n = 1usize << n_vertices;
    (0..n as u64)
        .map(|s| {
            let sigma = SpinConfig::from_state_index(n_vertices, s);
            let first = sigma.get(0);
            if (0..n_vertices as u32).all(|v| sigma.get(v) == first) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}
