use swlab::harness::config::default_torpid_config;
use swlab::harness::experiments::experiment_torpid_with_seed;

fn main() {
    let mut config = default_torpid_config();
    config.out_dir = std::env::temp_dir().join("swlab-probe-torpid-full");
    let t0 = std::time::Instant::now();
    let (summary, _) = experiment_torpid_with_seed(&config, 0x5EED_2026).unwrap();
    println!("full torpid in {:.1}s", t0.elapsed().as_secs_f64());
    for row in &summary.rows {
        println!(
            "l={} r={} tau={:?} rho1={:?} switch={:.6} outside={:.6} err={:?}",
            row.l, row.replica, row.tau_exp_f, row.rho1,
            row.rate_minus_to_plus.rate + row.rate_plus_to_minus.rate,
            row.occupancy_outside.rate, row.error
        );
    }
    for lv in &summary.levels {
        println!(
            "l={} tau_med={:?} switch_med={:?}",
            lv.l, lv.tau_median, lv.switch_rate_median
        );
    }
    for p in &summary.pairs {
        println!(
            "pair {}->{}: tau {}/{} p={:.5}; rate {}/{} p={:.5}",
            p.l_low, p.l_high, p.tau_increases, p.tau_pairs, p.tau_sign_p,
            p.rate_decreases, p.rate_pairs, p.rate_sign_p
        );
    }
    println!(
        "monotone tau: {}, monotone rate: {}, incomplete: {}",
        summary.tau_medians_nondecreasing,
        summary.switch_rate_medians_nonincreasing,
        summary.incomplete
    );
}
