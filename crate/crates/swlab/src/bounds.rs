//! Closed-form constants and inequalities behind the torpidity argument:
//! the gadget scale `a_d`, the rate constants `K~1, K1, K2, K3`, the
//! admissible `s` interval, the printed constraint system next to the
//! orderings the bound chain actually needs, the Bernoulli rate function
//! and tail bound, and the composed bound on the normalized
//! autocorrelation of the minus-event indicator.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SwError};

fn check_params(d: usize, delta: f64, s: f64, rho_d: f64) -> Result<()> {
    if d < 1 {
        return Err(SwError::Parameter("dimension must be >= 1".into()));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(SwError::Parameter(format!("delta must be in (0, 1/2), got {delta}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(SwError::Parameter(format!("s must be in (0, 1), got {s}")));
    }
    if !(rho_d > 0.0 && rho_d <= 1.0) {
        return Err(SwError::Parameter(format!("rho_d must be in (0, 1], got {rho_d}")));
    }
    Ok(())
}

/// `a_d = rho_d * delta / 2`, the scale of the weak band couplings.
pub fn a_d(delta: f64, rho_d: f64) -> f64 {
    rho_d * delta / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KConstants {
    /// `d 2^(d-1) delta^2 rho_d^2`
    pub k_tilde_1: f64,
    /// `k_tilde_1 / 4`
    pub k1: f64,
    /// `d 2^d (1 - s - 2 delta) delta rho_d`
    pub k2: f64,
    /// `s rho_d delta d 2^(d-5)`
    pub k3: f64,
}

pub fn k_constants(d: usize, delta: f64, s: f64, rho_d: f64) -> Result<KConstants> {
    check_params(d, delta, s, rho_d)?;
    let df = d as f64;
    let k_tilde_1 = df * 2f64.powi(d as i32 - 1) * delta * delta * rho_d * rho_d;
    let k1 = k_tilde_1 / 4.0;
    let k2 = df * 2f64.powi(d as i32) * (1.0 - s - 2.0 * delta) * delta * rho_d;
    let k3 = s * rho_d * delta * df * 2f64.powi(d as i32 - 5);
    Ok(KConstants { k_tilde_1, k1, k2, k3 })
}

/// The admissible interval for `s` at given `(delta, rho_d)`:
/// `( max{ 64(1-2delta)/(rho_d delta + 64), 1 - 2delta - delta^2 rho_d / 16 },
///    1 - 2delta )`. Nonempty for every valid input.
pub fn s_interval(delta: f64, rho_d: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(SwError::Parameter(format!("delta must be in (0, 1/2), got {delta}")));
    }
    if !(rho_d > 0.0 && rho_d <= 1.0) {
        return Err(SwError::Parameter(format!("rho_d must be in (0, 1], got {rho_d}")));
    }
    let upper = 1.0 - 2.0 * delta;
    let a = 64.0 * upper / (rho_d * delta + 64.0);
    let b = upper - delta * delta * rho_d / 16.0;
    Ok((a.max(b), upper))
}

/// The constraint system as printed, inequality by inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiteralConstraints {
    /// `1 - s - 2 delta > 0`
    pub positivity: bool,
    /// `delta^2 rho_d^2 > 16 (1 - s - 2 delta)`
    pub k1_gt_k2: bool,
    /// `s rho_d delta > 64 (1 - s - 2 delta)`
    pub k3_gt_k2: bool,
    /// `0 < s < 1`
    pub s_range: bool,
    /// `0 < delta < 1/2`
    pub delta_range: bool,
}

/// The orderings the composed bound consumes, evaluated directly on the
/// `K` constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectOrderings {
    pub k2_positive: bool,
    pub k1_gt_k2: bool,
    pub k3_gt_k2: bool,
}

impl DirectOrderings {
    pub fn all_hold(&self) -> bool {
        self.k2_positive && self.k1_gt_k2 && self.k3_gt_k2
    }
}

/// Both readings of the constraint system, reported separately: the
/// literal inequalities as printed do not coincide with the direct
/// orderings of the `K` constants (the literal second line squares where
/// the direct comparison does not), and the direct orderings are what the
/// composed bound needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub literal: LiteralConstraints,
    pub direct: DirectOrderings,
}

pub fn check_constraints(d: usize, delta: f64, s: f64, rho_d: f64) -> Result<ConstraintReport> {
    let k = k_constants(d, delta, s, rho_d)?;
    let slack = 1.0 - s - 2.0 * delta;
    Ok(ConstraintReport {
        literal: LiteralConstraints {
            positivity: slack > 0.0,
            k1_gt_k2: delta * delta * rho_d * rho_d > 16.0 * slack,
            k3_gt_k2: s * rho_d * delta > 64.0 * slack,
            s_range: s > 0.0 && s < 1.0,
            delta_range: delta > 0.0 && delta < 0.5,
        },
        direct: DirectOrderings {
            k2_positive: k.k2 > 0.0,
            k1_gt_k2: k.k1 > k.k2,
            k3_gt_k2: k.k3 > k.k2,
        },
    })
}

/// Bernoulli rate function `I(x, p) = x ln(x/p) + (1-x) ln((1-x)/(1-p))`,
/// continuously extended at `x` in {0, 1}; infinite when `p` in {0, 1}
/// disagrees with `x`. Nonnegative, zero only at `x = p`.
pub fn rate_function(x: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&p) {
        return Err(SwError::Parameter(format!("x and p must lie in [0, 1], got ({x}, {p})")));
    }
    if p == 0.0 {
        return Ok(if x == 0.0 { 0.0 } else { f64::INFINITY });
    }
    if p == 1.0 {
        return Ok(if x == 1.0 { 0.0 } else { f64::INFINITY });
    }
    let left = if x == 0.0 { 0.0 } else { x * (x / p).ln() };
    let right = if x == 1.0 { 0.0 } else { (1.0 - x) * ((1.0 - x) / (1.0 - p)).ln() };
    Ok(left + right)
}

/// Large-deviation upper bound `exp(-I(x, p) N)` for the lower tail
/// `P(sum < x N)` of `N` Bernoulli(p) trials; only valid for `x <= p`.
pub fn bernoulli_tail(n: u64, p: f64, x: f64) -> Result<f64> {
    if x > p {
        return Err(SwError::Parameter(format!(
            "lower-tail bound needs x <= p, got x = {x} > p = {p}"
        )));
    }
    Ok((-rate_function(x, p)? * n as f64).exp())
}

/// The composed bound on `C_ff(t) / C_ff(0)` for the minus-event
/// indicator: `2t [ exp(-(K1-K2) beta l^(d-1)) + 2 exp(-(K3-K2) beta l^(d-1)) ]`.
/// Requires the direct orderings `K1 > K2` and `K3 > K2`.
pub fn torpidity_ratio_bound(
    d: usize,
    delta: f64,
    s: f64,
    rho_d: f64,
    beta: f64,
    l: usize,
    t: u64,
) -> Result<f64> {
    let k = k_constants(d, delta, s, rho_d)?;
    if !(k.k1 > k.k2 && k.k3 > k.k2) {
        return Err(SwError::Parameter(format!(
            "orderings violated: K1 = {}, K2 = {}, K3 = {}",
            k.k1, k.k2, k.k3
        )));
    }
    let scale = beta * (l as f64).powi(d as i32 - 1);
    Ok(2.0 * t as f64 * ((-(k.k1 - k.k2) * scale).exp() + 2.0 * (-(k.k3 - k.k2) * scale).exp()))
}

/// A time that grows without bound in `l` while the ratio bound at that
/// time still vanishes: `floor(exp(min(K1-K2, K3-K2) beta l^(d-1) / 2))`.
pub fn torpidity_time_schedule(
    d: usize,
    delta: f64,
    s: f64,
    rho_d: f64,
    beta: f64,
    l: usize,
) -> Result<u64> {
    let k = k_constants(d, delta, s, rho_d)?;
    if !(k.k1 > k.k2 && k.k3 > k.k2) {
        return Err(SwError::Parameter("orderings violated".into()));
    }
    let scale = beta * (l as f64).powi(d as i32 - 1);
    let exponent = (k.k1 - k.k2).min(k.k3 - k.k2) * scale / 2.0;
    Ok(exponent.exp().floor() as u64)
}

/// Everything about one parameter point, for experiment summaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsReport {
    pub d: usize,
    pub delta: f64,
    pub s: f64,
    pub rho_d: f64,
    pub beta: f64,
    pub l: usize,
    pub a_d: f64,
    pub k_constants: KConstants,
    pub s_interval: (f64, f64),
    pub constraints: ConstraintReport,
    /// `exp(-K1 beta l^(d-1))`: the stationary weight outside both events.
    pub event_bound: f64,
    /// `exp(-K3 beta l^(d-1))`: one event-to-event transition per sweep.
    pub transition_bound: f64,
    /// Ratio bound evaluated at `t`, when the orderings hold.
    pub t: Option<u64>,
    pub ratio_bound: Option<f64>,
    pub suggested_time: Option<u64>,
}

pub fn bounds_report(
    d: usize,
    delta: f64,
    s: f64,
    rho_d: f64,
    beta: f64,
    l: usize,
    t: Option<u64>,
) -> Result<BoundsReport> {
    let k = k_constants(d, delta, s, rho_d)?;
    let interval = s_interval(delta, rho_d)?;
    let constraints = check_constraints(d, delta, s, rho_d)?;
    let scale = beta * (l as f64).powi(d as i32 - 1);
    let orderings_ok = constraints.direct.all_hold();
    Ok(BoundsReport {
        d,
        delta,
        s,
        rho_d,
        beta,
        l,
        a_d: a_d(delta, rho_d),
        k_constants: k,
        s_interval: interval,
        constraints,
        event_bound: (-k.k1 * scale).exp(),
        transition_bound: (-k.k3 * scale).exp(),
        t,
        ratio_bound: match (t, orderings_ok) {
            (Some(t), true) => Some(torpidity_ratio_bound(d, delta, s, rho_d, beta, l, t)?),
            _ => None,
        },
        suggested_time: if orderings_ok {
            Some(torpidity_time_schedule(d, delta, s, rho_d, beta, l)?)
        } else {
            None
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: usize = 2;
    const DELTA: f64 = 0.25;
    const RHO: f64 = 0.5;
    const S: f64 = 0.4995;

    #[test]
    fn k_constants_at_the_reference_point() {
        let k = k_constants(D, DELTA, S, RHO).unwrap();
        assert!((k.k1 - 0.015625).abs() < 1e-12);
        assert!((k.k2 - 0.0005).abs() < 1e-12);
        assert!((k.k3 - 0.4995 * 0.5 * 0.25 * (2.0 / 8.0)).abs() < 1e-12);
        assert!((k.k3 - 0.015609375).abs() < 1e-9);
        assert!((k.k_tilde_1 - 4.0 * k.k1).abs() < 1e-15);
    }

    #[test]
    fn s_interval_at_the_reference_point() {
        let (lo, hi) = s_interval(DELTA, RHO).unwrap();
        assert!((lo - 32.0 / 64.125).abs() < 1e-9);
        assert!((hi - 0.5).abs() < 1e-15);
        assert!(lo < hi);
        // The second candidate endpoint is dominated here.
        assert!((1.0 - 2.0 * DELTA - DELTA * DELTA * RHO / 16.0 - 0.498046875).abs() < 1e-12);
    }

    #[test]
    fn s_interval_is_nonempty_on_a_grid_and_shrinks_as_delta_vanishes() {
        for i in 1..=10 {
            for k in 1..=10 {
                let delta = 0.05 * i as f64 * 0.999;
                let rho = 0.1 * k as f64;
                let (lo, hi) = s_interval(delta, rho).unwrap();
                assert!(lo < hi, "delta={delta} rho={rho}");
            }
        }
        let mut prev_width = f64::INFINITY;
        for k in 1..=6 {
            let delta = 10f64.powi(-k);
            let (lo, hi) = s_interval(delta, 0.5).unwrap();
            let width = hi - lo;
            assert!(width < prev_width);
            assert!(hi < 1.0 && hi > 1.0 - 3.0 * delta);
            prev_width = width;
        }
    }

    #[test]
    fn direct_orderings_hold_inside_the_interval() {
        for i in 1..=10 {
            for k in 1..=10 {
                let delta = 0.05 * i as f64 * 0.999;
                let rho = 0.1 * k as f64;
                let (lo, hi) = s_interval(delta, rho).unwrap();
                for j in 1..=5 {
                    let s = lo + (hi - lo) * j as f64 / 6.0;
                    let report = check_constraints(D, delta, s, rho).unwrap();
                    assert!(report.direct.all_hold(), "delta={delta} rho={rho} s={s}");
                }
            }
        }
    }

    #[test]
    fn reference_point_satisfies_both_readings() {
        let report = check_constraints(D, DELTA, S, RHO).unwrap();
        assert!(report.direct.all_hold());
        assert!(report.literal.positivity);
        // delta^2 rho^2 = 0.015625 > 16 * 0.0005 = 0.008 and
        // s rho delta = 0.0624375 > 64 * 0.0005 = 0.032.
        assert!(report.literal.k1_gt_k2);
        assert!(report.literal.k3_gt_k2);

        // Outside the interval the slack flips sign and both readings of the
        // first inequality fail.
        let bad = check_constraints(D, DELTA, 0.55, RHO);
        assert!(bad.is_err() || !bad.unwrap().literal.positivity);
        let report = check_constraints(D, 0.2, 0.61, RHO).unwrap();
        assert!(!report.literal.positivity);
        assert!(!report.direct.k2_positive);
    }

    #[test]
    fn rate_function_values_and_shape() {
        assert_eq!(rate_function(0.3, 0.3).unwrap(), 0.0);
        let i = rate_function(0.5, 0.9).unwrap();
        let expect = 0.5 * (5.0f64 / 9.0).ln() + 0.5 * 5.0f64.ln();
        assert!((i - expect).abs() < 1e-12);
        assert!((expect - 0.5108).abs() < 1e-4);

        assert_eq!(rate_function(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(rate_function(0.5, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(rate_function(0.5, 1.0).unwrap(), f64::INFINITY);

        // Convexity in x at fixed p, by second differences on a grid.
        for &p in &[0.2, 0.5, 0.9] {
            let h = 0.01;
            for k in 1..98 {
                let x = k as f64 / 100.0;
                let d2 = rate_function(x + h, p).unwrap() - 2.0 * rate_function(x, p).unwrap()
                    + rate_function(x - h, p).unwrap();
                assert!(d2 > -1e-12, "p={p} x={x}");
            }
        }

        // Near-one regime: I(x, p) dominates ((1-x)/2) ln(1/(1-p)).
        let x = 0.375;
        let p = 1.0 - 1e-6;
        let lhs = rate_function(x, p).unwrap();
        let rhs = (1.0 - x) / 2.0 * (1.0 / (1.0 - p)).ln();
        assert!(lhs > rhs);
    }

    /// Exact lower-tail probability P(Bin(n, p) < x n).
    fn binomial_lower_tail(n: u64, p: f64, x: f64) -> f64 {
        let cutoff = x * n as f64;
        let mut total = 0.0;
        let mut pmf = (1.0 - p).powi(n as i32); // k = 0
        for k in 0..=n {
            if (k as f64) < cutoff {
                total += pmf;
            } else {
                break;
            }
            if k < n {
                pmf *= (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
            }
        }
        total
    }

    #[test]
    fn tail_bound_dominates_exact_binomials_up_to_n_30() {
        for n in 1..=30u64 {
            for &p in &[0.5, 0.9, 0.99] {
                let mut x = 0.05;
                while x <= p {
                    let bound = bernoulli_tail(n, p, x).unwrap();
                    let exact = binomial_lower_tail(n, p, x);
                    assert!(
                        exact <= bound + 1e-12,
                        "n={n} p={p} x={x}: exact {exact} > bound {bound}"
                    );
                    x += 0.05;
                }
            }
        }
    }

    #[test]
    fn tail_bound_edges() {
        assert_eq!(bernoulli_tail(10, 0.3, 0.3).unwrap(), 1.0);
        assert!(matches!(bernoulli_tail(10, 0.3, 0.4), Err(SwError::Parameter(_))));
        let b1 = bernoulli_tail(100, 0.9, 0.5).unwrap();
        assert!((b1.ln() + 51.08).abs() < 0.01);
        let mut prev = f64::INFINITY;
        for n in [10u64, 20, 40, 80] {
            let b = bernoulli_tail(n, 0.9, 0.5).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn ratio_bound_reference_value_and_monotonicity() {
        let v = torpidity_ratio_bound(D, DELTA, S, RHO, 20.0, 5, 10).unwrap();
        assert!((v - 13.2).abs() < 0.1, "bound {v}");
        assert_eq!(torpidity_ratio_bound(D, DELTA, S, RHO, 20.0, 5, 0).unwrap(), 0.0);

        let mut prev = 0.0;
        for t in [1u64, 5, 25] {
            let b = torpidity_ratio_bound(D, DELTA, S, RHO, 20.0, 5, t).unwrap();
            assert!(b > prev);
            prev = b;
        }
        let big_l = torpidity_ratio_bound(D, DELTA, S, RHO, 20.0, 50, 10).unwrap();
        let small_l = torpidity_ratio_bound(D, DELTA, S, RHO, 20.0, 5, 10).unwrap();
        assert!(big_l < small_l);

        // The schedule grows in l while the bound there still shrinks.
        let t5 = torpidity_time_schedule(D, DELTA, S, RHO, 20.0, 5).unwrap();
        let t60 = torpidity_time_schedule(D, DELTA, S, RHO, 20.0, 60).unwrap();
        assert!(t60 > t5);
        let b60 =
            torpidity_ratio_bound(D, DELTA, S, RHO, 20.0, 60, t60).unwrap();
        assert!(b60 < 1e-3);
    }

    #[test]
    fn a_d_is_consistent_with_gadget_parameters() {
        let params = crate::disorder::GadgetParams {
            l: 2,
            delta: DELTA,
            s: S,
            rho_d: RHO,
            pinning: crate::disorder::Pinning::Midpoint,
            center: vec![0, 0],
        };
        assert_eq!(a_d(DELTA, RHO), params.a_d());
    }

    #[test]
    fn report_embeds_everything() {
        let r = bounds_report(D, DELTA, S, RHO, 8.0, 3, Some(10)).unwrap();
        assert!(r.constraints.direct.all_hold());
        assert!(r.ratio_bound.is_some());
        assert!(r.event_bound > 0.0 && r.event_bound < 1.0);
        assert!(r.transition_bound > 0.0 && r.transition_bound < 1.0);
        assert_eq!(r.a_d, 0.0625);
    }
}
