//! Observables over spin configurations and time series: magnetization of a
//! vertex region, accordance of an edge region, the near-(anti)accordance
//! events on a gadget's inner shell, empirical autocorrelation and
//! exponential-time estimators, event transition frequencies, and the
//! two-shell magnetization disjunction check.

use serde::{Deserialize, Serialize};

use crate::disorder::GadgetParams;
use crate::error::{Result, SwError};
use crate::lattice::{
    edge_boundary, vertex_boundary, CubeSpec, EdgeRegion, LatticeBox, VertexRegion,
};
use crate::model::SpinConfig;
use crate::spectral::fit_neg_inverse_slope;

/// Integer spin sum over a vertex region (exact).
pub fn magnetization_sum(region: &VertexRegion, sigma: &SpinConfig) -> i64 {
    region.iter().map(|v| i64::from(sigma.get(v))) .sum()
}

/// Mean spin over a vertex region, in [-1, 1].
pub fn magnetization(region: &VertexRegion, sigma: &SpinConfig) -> Result<f64> {
    if region.is_empty() {
        return Err(SwError::Degenerate("magnetization of an empty region".into()));
    }
    Ok(magnetization_sum(region, sigma) as f64 / region.len() as f64)
}

/// Integer sum of `sigma_v * sigma_w` over an edge region (exact).
pub fn accordance_sum(lattice: &LatticeBox, edges: &EdgeRegion, sigma: &SpinConfig) -> i64 {
    edges
        .iter()
        .map(|e| {
            let [a, b] = lattice.edge_endpoints(e);
            i64::from(sigma.get(a) * sigma.get(b))
        })
        .sum()
}

/// Mean spin product over an edge region, in [-1, 1].
pub fn accordance(lattice: &LatticeBox, edges: &EdgeRegion, sigma: &SpinConfig) -> Result<f64> {
    if edges.is_empty() {
        return Err(SwError::Degenerate("accordance of an empty edge set".into()));
    }
    Ok(accordance_sum(lattice, edges, sigma) as f64 / edges.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSign {
    Plus,
    Minus,
}

/// Near-accordance event on a gadget's inner shell: accordance over the
/// edge boundary of `B_2l` at least `1 - delta` (plus) or at most
/// `-1 + delta` (minus). Always derived from a gadget placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub center: Vec<i64>,
    pub l: usize,
    pub delta: f64,
    pub sign: EventSign,
}

impl EventSpec {
    pub fn from_gadget(params: &GadgetParams, delta: f64, sign: EventSign) -> Self {
        Self { center: params.center.clone(), l: params.l, delta, sign }
    }

    pub fn compile(&self, lattice: &LatticeBox) -> Result<CompiledEvent> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SwError::Parameter(format!(
                "event delta must be in (0, 1), got {}",
                self.delta
            )));
        }
        let inner = CubeSpec::new(self.center.clone(), 2 * self.l).vertex_region(lattice)?;
        let edges = edge_boundary(lattice, &inner);
        if edges.is_empty() {
            return Err(SwError::Degenerate("event shell has no edges".into()));
        }
        Ok(CompiledEvent { edges, delta: self.delta, sign: self.sign })
    }
}

/// An event with its shell edges resolved against a concrete lattice.
#[derive(Debug, Clone)]
pub struct CompiledEvent {
    edges: EdgeRegion,
    delta: f64,
    sign: EventSign,
}

impl CompiledEvent {
    pub fn shell(&self) -> &EdgeRegion {
        &self.edges
    }

    pub fn accordance(&self, lattice: &LatticeBox, sigma: &SpinConfig) -> f64 {
        accordance_sum(lattice, &self.edges, sigma) as f64 / self.edges.len() as f64
    }

    /// 1 iff the configuration is in the event.
    pub fn indicator(&self, lattice: &LatticeBox, sigma: &SpinConfig) -> bool {
        let sum = accordance_sum(lattice, &self.edges, sigma) as f64;
        let m = self.edges.len() as f64;
        match self.sign {
            EventSign::Plus => sum >= (1.0 - self.delta) * m,
            EventSign::Minus => sum <= (-1.0 + self.delta) * m,
        }
    }
}

/// Lag autocorrelations of a scalar series with batch-means standard
/// errors. `rho[0] = 1` whenever the variance is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrEstimate {
    pub rho: Vec<f64>,
    pub se: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub n: usize,
}

/// Biased (1/N) sample autocovariances normalized by lag 0, with standard
/// errors from batch means over the lag-product series using
/// `ceil(sqrt(N))` batches. Requires `N >= 10 * t_max`.
pub fn estimate_autocorr(series: &[f64], t_max: usize) -> Result<AutocorrEstimate> {
    let n = series.len();
    if t_max < 1 {
        return Err(SwError::Parameter("t_max must be >= 1".into()));
    }
    if n < 10 * t_max || n < 10 {
        return Err(SwError::InsufficientData(format!(
            "series of length {n} is too short for t_max = {t_max} (need >= {})",
            (10 * t_max).max(10)
        )));
    }
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let variance = series.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / nf;
    if !(variance > 0.0) {
        return Err(SwError::Degenerate("series has zero variance".into()));
    }

    let batches = (nf.sqrt().ceil()) as usize;
    let mut rho = Vec::with_capacity(t_max + 1);
    let mut se = Vec::with_capacity(t_max + 1);
    rho.push(1.0);
    se.push(0.0);
    for t in 1..=t_max {
        let products: Vec<f64> = (0..n - t)
            .map(|i| (series[i] - mean) * (series[i + t] - mean))
            .collect();
        let c_t = products.iter().sum::<f64>() / nf;
        rho.push(c_t / variance);

        let batch_len = products.len() / batches;
        if batch_len == 0 {
            se.push(f64::INFINITY);
            continue;
        }
        let means: Vec<f64> = (0..batches)
            .map(|b| {
                let chunk = &products[b * batch_len..(b + 1) * batch_len];
                chunk.iter().sum::<f64>() / batch_len as f64
            })
            .collect();
        let bm = means.iter().sum::<f64>() / batches as f64;
        let bvar =
            means.iter().map(|&x| (x - bm) * (x - bm)).sum::<f64>() / (batches as f64 - 1.0);
        se.push((bvar / batches as f64).sqrt() / variance);
    }
    Ok(AutocorrEstimate { rho, se, mean, variance, n })
}

/// Tail log-slope fit of the empirical autocorrelation, over the last half
/// of the contiguous range of lags that clear a four-standard-error noise
/// floor. Needs at least three such lags.
pub fn estimate_tau_exp(est: &AutocorrEstimate) -> Result<f64> {
    let mut t_sig = 0usize;
    for t in 1..est.rho.len() {
        if est.rho[t].abs() > 4.0 * est.se[t] {
            t_sig = t;
        } else {
            break;
        }
    }
    if t_sig < 3 {
        return Err(SwError::InsufficientSignal(format!(
            "only {t_sig} contiguous lags above the noise floor (need 3)"
        )));
    }
    let lo = t_sig.div_ceil(2);
    fit_neg_inverse_slope((lo..=t_sig).map(|t| (t as f64, est.rho[t].abs().ln())))
}

/// A count out of a total with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub count: u64,
    pub total: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl RateEstimate {
    fn from_counts(count: u64, total: u64) -> Self {
        if total == 0 {
            return Self { count, total, rate: 0.0, ci_low: 0.0, ci_high: 1.0 };
        }
        let z = 1.96f64;
        let n = total as f64;
        let p = count as f64 / n;
        let denom = 1.0 + z * z / n;
        let center = (p + z * z / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        Self {
            count,
            total,
            rate: p,
            ci_low: (center - half).max(0.0),
            ci_high: (center + half).min(1.0),
        }
    }
}

/// Per-sweep frequencies of minus-to-plus and plus-to-minus event
/// transitions, and of sweeps that sit in neither event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionStats {
    pub rate_minus_to_plus: RateEstimate,
    pub rate_plus_to_minus: RateEstimate,
    pub occupancy_outside: RateEstimate,
}

pub fn event_transition_frequency(plus: &[bool], minus: &[bool]) -> Result<TransitionStats> {
    if plus.len() != minus.len() {
        return Err(SwError::Shape(format!(
            "indicator series lengths differ: {} vs {}",
            plus.len(),
            minus.len()
        )));
    }
    let n = plus.len();
    let mut mtp = 0u64;
    let mut ptm = 0u64;
    for i in 0..n.saturating_sub(1) {
        if minus[i] && plus[i + 1] {
            mtp += 1;
        }
        if plus[i] && minus[i + 1] {
            ptm += 1;
        }
    }
    let outside = (0..n).filter(|&i| !plus[i] && !minus[i]).count() as u64;
    let steps = n.saturating_sub(1) as u64;
    Ok(TransitionStats {
        rate_minus_to_plus: RateEstimate::from_counts(mtp, steps),
        rate_plus_to_minus: RateEstimate::from_counts(ptm, steps),
        occupancy_outside: RateEstimate::from_counts(outside, n as u64),
    })
}

/// Two-shell disjunction: a configuration outside both events must have
/// magnetization of absolute value below `1 - delta/4` on the inner shell
/// or on the next one. Vacuously true inside either event. Requires the
/// shell-size ratio `|bd B_2l| / |bd B_{2(l+1)}| > 1/2`.
pub fn lemma_disjunction_check(
    lattice: &LatticeBox,
    center: &[i64],
    l: usize,
    delta: f64,
    sigma: &SpinConfig,
) -> Result<bool> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(SwError::Parameter(format!("delta must be in (0, 1/2), got {delta}")));
    }
    let inner = CubeSpec::new(center.to_vec(), 2 * l).vertex_region(lattice)?;
    let next = CubeSpec::new(center.to_vec(), 2 * (l + 1)).vertex_region(lattice)?;
    let shell_inner = vertex_boundary(lattice, &inner);
    let shell_next = vertex_boundary(lattice, &next);
    if 2 * shell_inner.len() <= shell_next.len() {
        return Err(SwError::Parameter(format!(
            "shell ratio {}/{} is not above 1/2; l too small",
            shell_inner.len(),
            shell_next.len()
        )));
    }
    let band = edge_boundary(lattice, &inner);
    let k = accordance(lattice, &band, sigma)?;
    if k >= 1.0 - delta || k <= -1.0 + delta {
        return Ok(true);
    }
    let m1 = magnetization(&shell_inner, sigma)?;
    let m2 = magnetization(&shell_next, sigma)?;
    Ok(m1.abs() < 1.0 - delta / 4.0 || m2.abs() < 1.0 - delta / 4.0)
}

/// Summary statistics of one named series.
#[derive(Debug, Clone)]
pub struct SeriesStats {
    pub name: String,
    pub mean: f64,
    pub variance: f64,
    pub autocorr: AutocorrEstimate,
}

pub fn series_stats(name: impl Into<String>, series: &[f64], t_max: usize) -> Result<SeriesStats> {
    let autocorr = estimate_autocorr(series, t_max)?;
    Ok(SeriesStats {
        name: name.into(),
        mean: autocorr.mean,
        variance: autocorr.variance,
        autocorr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{build_gadget, CouplingField, Pinning};
    use crate::dynamics::{run, SwChain, SwObserver};
    use crate::lattice::LatticeBox;
    use crate::model::{phi_map, GibbsModel};
    use crate::spectral::{aligned_indicator, autocorr_exact, exact_transition_matrix};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn gadget_fixture(l: usize) -> (CouplingField, GadgetParams) {
        let side = 4 * l + 4;
        let lattice = LatticeBox::at_origin(2, side).unwrap();
        let params = GadgetParams {
            l,
            delta: 0.25,
            s: 0.4995,
            rho_d: 0.5,
            pinning: Pinning::Midpoint,
            center: vec![(side / 2) as i64; 2],
        };
        let field = build_gadget(&CouplingField::constant(lattice, 0.0), &params).unwrap();
        (field, params)
    }

    #[test]
    fn magnetization_basics() {
        let lattice = LatticeBox::at_origin(2, 3).unwrap();
        let all: VertexRegion = (0..9u32).collect();
        let plus = SpinConfig::all_plus(9);
        assert_eq!(magnetization(&all, &plus).unwrap(), 1.0);

        let two = VertexRegion::new(vec![0, 1]);
        let mut mixed = SpinConfig::all_plus(9);
        mixed.set(1, -1);
        assert_eq!(magnetization(&two, &mixed).unwrap(), 0.0);

        assert!(magnetization(&VertexRegion::empty(), &plus).is_err());

        // Shell of a B_4 block against a direct sum.
        let cube = CubeSpec::new(vec![1, 1], 4);
        let _ = cube;
        let shell = vertex_boundary(&lattice, &all);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let sigma = SpinConfig::random(9, &mut rng);
        let direct: i64 = shell.iter().map(|v| sigma.get(v) as i64).sum();
        assert_eq!(
            magnetization(&shell, &sigma).unwrap(),
            direct as f64 / shell.len() as f64
        );
    }

    #[test]
    fn accordance_basics_and_flip_invariance() {
        let (field, params) = gadget_fixture(2);
        let lattice = field.lattice();
        let band = edge_boundary(
            lattice,
            &params.inner_cube().vertex_region(lattice).unwrap(),
        );
        let plus = SpinConfig::all_plus(lattice.vertex_count());
        assert_eq!(accordance(lattice, &band, &plus).unwrap(), 1.0);

        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..50 {
            let sigma = SpinConfig::random(lattice.vertex_count(), &mut rng);
            let k = accordance(lattice, &band, &sigma).unwrap();
            assert_eq!(accordance(lattice, &band, &sigma.flipped()).unwrap(), k);
            let shell = vertex_boundary(
                lattice,
                &params.inner_cube().vertex_region(lattice).unwrap(),
            );
            let m = magnetization(&shell, &sigma).unwrap();
            assert_eq!(magnetization(&shell, &sigma.flipped()).unwrap().abs(), m.abs());
        }
        assert!(accordance(lattice, &EdgeRegion::empty(), &plus).is_err());
    }

    #[test]
    fn event_indicators_are_disjoint_and_swap_under_the_reflection() {
        let (field, params) = gadget_fixture(2);
        let lattice = field.lattice();
        let plus_ev = EventSpec::from_gadget(&params, 0.25, EventSign::Plus)
            .compile(lattice)
            .unwrap();
        let minus_ev = EventSpec::from_gadget(&params, 0.25, EventSign::Minus)
            .compile(lattice)
            .unwrap();

        let all_plus = SpinConfig::all_plus(lattice.vertex_count());
        assert!(plus_ev.indicator(lattice, &all_plus));
        assert!(!minus_ev.indicator(lattice, &all_plus));

        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..300 {
            let sigma = SpinConfig::random(lattice.vertex_count(), &mut rng);
            let in_plus = plus_ev.indicator(lattice, &sigma);
            let in_minus = minus_ev.indicator(lattice, &sigma);
            assert!(!(in_plus && in_minus), "events are disjoint for delta < 1");
            let phi = phi_map(lattice, &params, &sigma).unwrap();
            assert_eq!(in_plus, minus_ev.indicator(lattice, &phi));
            assert_eq!(in_minus, plus_ev.indicator(lattice, &phi));
        }
    }

    #[test]
    fn iid_series_has_no_autocorrelation() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let n = 40_000;
        let series: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 }).collect();
        let est = estimate_autocorr(&series, 10).unwrap();
        assert_eq!(est.rho[0], 1.0);
        let bound = 4.0 / (n as f64).sqrt();
        for t in 1..=10 {
            assert!(est.rho[t].abs() < bound, "lag {t}: {}", est.rho[t]);
        }
        assert!(matches!(estimate_tau_exp(&est), Err(SwError::InsufficientSignal(_))));
    }

    #[test]
    fn estimator_inputs_are_validated() {
        assert!(matches!(
            estimate_autocorr(&[1.0; 200], 10),
            Err(SwError::Degenerate(_))
        ));
        assert!(matches!(
            estimate_autocorr(&[1.0, 2.0, 3.0], 10),
            Err(SwError::InsufficientData(_))
        ));
    }

    #[test]
    fn empirical_autocorrelation_matches_the_exact_kernel() {
        let beta = 2.0_f64.ln();
        let lattice = LatticeBox::at_origin(1, 2).unwrap();
        let model = GibbsModel::new(CouplingField::constant(lattice, 1.0), beta).unwrap();
        let tm = exact_transition_matrix(&model).unwrap();
        let f = aligned_indicator(2);
        let var = autocorr_exact(&tm, &model, &f, 0).unwrap();

        let mut chain = SwChain::new(model.clone(), 20260810);
        let obs = vec![SwObserver::new("aligned", |c: &SwChain| {
            Ok(f64::from(c.sigma().get(0) == c.sigma().get(1)))
        })];
        let rec = run(&mut chain, 200_000, 1_000, &obs).unwrap();
        let est = estimate_autocorr(rec.column("aligned").unwrap(), 10).unwrap();
        for t in 1..=6 {
            let exact = autocorr_exact(&tm, &model, &f, t).unwrap() / var;
            assert!(
                (est.rho[t] - exact).abs() <= 4.0 * est.se[t],
                "lag {t}: {} vs {exact} (se {})",
                est.rho[t],
                est.se[t]
            );
        }
        let tau = estimate_tau_exp(&est).unwrap();
        let expect = -1.0 / 0.25f64.ln();
        assert!((tau - expect).abs() < 0.25 * expect, "tau {tau} vs {expect}");
    }

    #[test]
    fn transition_rates_of_a_frozen_chain_are_zero() {
        let plus = vec![true; 100];
        let minus = vec![false; 100];
        let stats = event_transition_frequency(&plus, &minus).unwrap();
        assert_eq!(stats.rate_minus_to_plus.rate, 0.0);
        assert_eq!(stats.rate_plus_to_minus.rate, 0.0);
        assert_eq!(stats.occupancy_outside.rate, 0.0);
    }

    #[test]
    fn random_spins_sit_outside_both_events() {
        let (field, params) = gadget_fixture(2);
        let lattice = field.lattice();
        let plus_ev = EventSpec::from_gadget(&params, 0.1, EventSign::Plus)
            .compile(lattice)
            .unwrap();
        let minus_ev = EventSpec::from_gadget(&params, 0.1, EventSign::Minus)
            .compile(lattice)
            .unwrap();
        let model = GibbsModel::new(field.clone(), 0.0).unwrap();
        let mut chain = SwChain::new(model, 6);
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for _ in 0..20_000 {
            chain.sweep().unwrap();
            plus.push(plus_ev.indicator(lattice, chain.sigma()));
            minus.push(minus_ev.indicator(lattice, chain.sigma()));
        }
        let stats = event_transition_frequency(&plus, &minus).unwrap();
        assert!(stats.occupancy_outside.rate > 0.99, "{}", stats.occupancy_outside.rate);
    }

    #[test]
    fn disjunction_holds_for_aligned_and_random_spins() {
        let (field, params) = gadget_fixture(3);
        let lattice = field.lattice();
        let plus = SpinConfig::all_plus(lattice.vertex_count());
        assert!(lemma_disjunction_check(lattice, &params.center, params.l, 0.25, &plus).unwrap());

        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let sigma = SpinConfig::random(lattice.vertex_count(), &mut rng);
            assert!(lemma_disjunction_check(
                lattice,
                &params.center,
                params.l,
                0.25,
                &sigma
            )
            .unwrap());
        }
    }
}
