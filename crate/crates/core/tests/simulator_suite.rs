//! Simulator suite: determinism across worker counts, convergence-rate
//! sanity, degenerate policies, the delay-window exclusion rule and the
//! no-delay analytic cross-check.

use impulse_core::band::BandPolicy;
use impulse_core::diffusion::{
    scalar2_fn, scalar_fn, DiffusionModel, DiscountedReward, Endpoint, TransitionLaw,
};
use impulse_core::models::forex::ForexParams;
use impulse_core::models::labor::LaborParams;
use impulse_core::sim::{
    mc_delayed_cost, simulate_band, simulate_threshold, PolicyEstimate, SimConfig,
};
use impulse_core::threshold::{
    solve, ThresholdCostStructure, ThresholdPolicy, ThresholdProblem, ThresholdSolverConfig,
};

fn labor(delay: f64) -> LaborParams {
    LaborParams {
        demand_drift: 0.03,
        discount_rate: 0.06,
        monopoly_exponent: 0.75,
        sigma: 0.35,
        quit_rate: 0.1,
        productivity: 5.0,
        wage: 2.0,
        delay,
        c1: 0.05,
        c2: 0.1,
        c3: 2.0,
        c4: 1.0,
    }
}

fn bits(e: &PolicyEstimate) -> (u64, u64) {
    (e.mean.to_bits(), e.stderr.to_bits())
}

#[test]
fn identical_seed_is_bit_identical_across_worker_counts() {
    let problem = ForexParams::new(150.0, 50.0, 0.2, 1.0).unwrap().build().unwrap();
    let policy = ThresholdPolicy::new(5.066, 12.1756).unwrap();
    let cfg = SimConfig {
        n_paths: 8_000,
        dt: 0.05,
        horizon: Some(40.0),
        seed: 777,
        ..Default::default()
    };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| simulate_threshold(&problem, policy, 0.0, &cfg).unwrap())
    };
    let single = run(1);
    let quad = run(4);
    assert_eq!(bits(&single), bits(&quad));
    assert_eq!(
        single.diagnostics.mean_interventions.to_bits(),
        quad.diagnostics.mean_interventions.to_bits()
    );

    let lp = labor(0.5).build().unwrap();
    let band_policy = BandPolicy::new(1.0661, 2.100, 7.120, 36.640).unwrap();
    let bcfg = SimConfig {
        n_paths: 2_000,
        dt: 0.05,
        horizon: Some(60.0),
        seed: 777,
        ..Default::default()
    };
    let run_band = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| simulate_band(&lp, band_policy, 10.0, &bcfg).unwrap())
    };
    assert_eq!(bits(&run_band(1)), bits(&run_band(4)));
}

#[test]
fn stderr_scales_like_inverse_root_paths() {
    let problem = ForexParams::new(150.0, 50.0, 0.2, 1.0).unwrap().build().unwrap();
    let base = SimConfig {
        n_paths: 20_000,
        seed: 3,
        ..Default::default()
    };
    let small = mc_delayed_cost(&problem, 8.0, 5.0, &base).unwrap();
    let big = mc_delayed_cost(
        &problem,
        8.0,
        5.0,
        &SimConfig {
            n_paths: 80_000,
            ..base
        },
    )
    .unwrap();
    let ratio = small.stderr / big.stderr;
    assert!(
        (ratio - 2.0).abs() <= 0.4,
        "stderr ratio over a 4x path doubling: {ratio}"
    );
}

#[test]
fn mc_delayed_cost_degenerate_delay_has_zero_variance() {
    let problem = ForexParams::new(150.0, 50.0, 0.2, 0.0).unwrap().build().unwrap();
    let est = mc_delayed_cost(&problem, 7.0, 5.0, &SimConfig::default()).unwrap();
    assert_eq!(est.stderr, 0.0);
    assert_eq!(est.mean, problem.kbar(7.0, 5.0));
    assert_eq!(est.z_score(est.mean), 0.0);
}

/// Near-free interventions with zero running reward produce a near-zero
/// estimate.
#[test]
fn costless_policy_estimates_zero() {
    let model = DiffusionModel::new(
        scalar_fn(|_| 0.0),
        scalar_fn(|_| 1.0),
        (Endpoint::NegInfinity, Endpoint::PosInfinity),
        0.2,
    )
    .unwrap()
    .with_window(-30.0, 60.0)
    .unwrap()
    .with_transition(TransitionLaw::BrownianWithDrift { drift: 0.0, vol: 1.0 });
    let cost = ThresholdCostStructure {
        running_reward: scalar_fn(|_| 0.0),
        intervention_cost: scalar2_fn(|_, _| -1e-9),
        delay: 0.5,
        boundary_limit_lc: 0.0,
        delayed_cost: None,
        delayed_cost_dx: None,
    };
    let problem =
        ThresholdProblem::new(model, DiscountedReward::zero(), cost).unwrap();
    let est = simulate_threshold(
        &problem,
        ThresholdPolicy::new(0.0, 2.0).unwrap(),
        1.0,
        &SimConfig {
            n_paths: 2_000,
            dt: 0.05,
            horizon: Some(30.0),
            seed: 5,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(est.mean.abs() < 1e-6, "estimate {} not ~0", est.mean);
}

/// A band that (almost) never triggers over a short horizon estimates the
/// truncated expected running reward, which is closed form for this model.
#[test]
fn degenerate_band_estimates_truncated_reward() {
    let p = labor(0.5);
    let problem = p.build().unwrap();
    let horizon = 20.0;
    let xi = 5.0f64;
    let policy = BandPolicy::new(2e-4, 3e-4, 150.0, 190.0).unwrap();
    let est = simulate_band(
        &problem,
        policy,
        xi,
        &SimConfig {
            n_paths: 30_000,
            dt: 0.05,
            horizon: Some(horizon),
            seed: 9,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(est.diagnostics.mean_interventions < 1e-3);
    // Truncated g: k₁ξ^μ(1 − e^{−aμT}) + k₂ξ(1 − e^{−(r+δ)T}) with aμ the
    // k₁ denominator rate.
    let a_mu = p.discount_rate - p.demand_drift
        + (p.demand_drift + p.quit_rate) * p.monopoly_exponent
        + 0.5 * p.sigma * p.sigma * p.monopoly_exponent * (1.0 - p.monopoly_exponent);
    let truncated = p.k1() * xi.powf(p.monopoly_exponent) * (1.0 - (-a_mu * horizon).exp())
        + p.k2() * xi * (1.0 - (-(p.discount_rate + p.quit_rate) * horizon).exp());
    assert!(
        est.z_score(truncated).abs() <= 3.0,
        "estimate {} ± {} vs truncated reward {truncated}",
        est.mean,
        est.stderr
    );
}

#[test]
fn exclusion_rule_holds_and_no_delay_matches_analytic() {
    // Hires never land inside a firing delay window.
    let lp = labor(0.5).build().unwrap();
    let est = simulate_band(
        &lp,
        BandPolicy::new(1.0661, 2.100, 7.120, 36.640).unwrap(),
        10.0,
        &SimConfig {
            n_paths: 10_000,
            dt: 0.05,
            horizon: Some(200.0),
            seed: 21,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(est.diagnostics.exclusion_violations, 0);
    assert!(est.diagnostics.mean_interventions > 1.0);

    // The Δ = 0 threshold run agrees with the no-delay analytic value.
    let problem = ForexParams::new(150.0, 50.0, 0.2, 0.0).unwrap().build().unwrap();
    let sol = solve(&problem, &ThresholdSolverConfig::default()).unwrap();
    for x0 in [0.0, 5.0, 10.0] {
        let est = simulate_threshold(
            &problem,
            sol.policy(),
            x0,
            &SimConfig {
                n_paths: 40_000,
                dt: 0.05,
                horizon: Some(75.0),
                seed: 1234,
                ..Default::default()
            },
        )
        .unwrap();
        let v = sol.v(x0);
        assert!(
            est.z_score(v).abs() <= 3.0,
            "x0 = {x0}: {} ± {} vs {v}",
            est.mean,
            est.stderr
        );
    }
}
