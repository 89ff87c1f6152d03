//! Threshold-solver suite: cost identities, delayed-cost audits, the
//! continuous-fit slope, smooth fit, trigger solving against a grid-argmax
//! oracle, the outer target optimization against the reference triplets, and
//! the fixed-point/majorant cross-check.

use std::sync::OnceLock;

use impulse_core::models::forex::{DelayedCostForm, ForexParams};
use impulse_core::numerics::linspace;
use impulse_core::oracle::{gamma_fixed_point, stopping_value, GammaOracleConfig};
use impulse_core::sim::{mc_delayed_cost, SimConfig};
use impulse_core::threshold::{
    slope_for, smooth_fit_residual, solve, solve_b_given_a, ThresholdProblem,
    ThresholdSolverConfig, ThresholdSolution,
};

const FX_REF_DELAY: (f64, f64, f64) = (5.066, 12.1756, 0.042423);
const FX_REF_NODELAY: (f64, f64, f64) = (5.07723, 12.2611, 0.0492262);

fn fx_params(delay: f64) -> ForexParams {
    ForexParams::new(150.0, 50.0, 0.2, delay).unwrap()
}

fn fx_problem(delay: f64) -> ThresholdProblem {
    fx_params(delay).build().unwrap()
}

fn solved(delay: f64) -> &'static (ThresholdProblem, ThresholdSolution) {
    static DELAY: OnceLock<(ThresholdProblem, ThresholdSolution)> = OnceLock::new();
    static NODELAY: OnceLock<(ThresholdProblem, ThresholdSolution)> = OnceLock::new();
    let cell = if delay == 0.0 { &NODELAY } else { &DELAY };
    cell.get_or_init(|| {
        let problem = fx_problem(delay);
        let sol = solve(&problem, &ThresholdSolverConfig::default()).unwrap();
        (problem, sol)
    })
}

#[test]
fn kbar_identities() {
    let problem = fx_problem(1.0);
    let alpha = 0.2;
    // K̄(x, x) = K(x, x) < 0: the g terms cancel.
    for x in [-3.0, 0.0, 7.5] {
        assert!((problem.kbar(x, x) + 150.0).abs() < 1e-10);
    }
    // Closed form: K̄(x, a) = −c − λ|x−a| + (x² − a²)/α.
    for (x, a) in [(0.0_f64, 5.0), (12.0, 5.0), (-6.0, 2.0)] {
        let want = -150.0 - 50.0 * (x - a).abs() + (x * x - a * a) / alpha;
        assert!((problem.kbar(x, a) - want).abs() < 1e-9 * (1.0 + want.abs()));
    }
    // Additivity: K̄(x,y) + K̄(y,x) = K(x,y) + K(y,x).
    for (x, y) in [(1.0, 4.0), (-2.0, 9.0)] {
        let lhs = problem.kbar(x, y) + problem.kbar(y, x);
        let k = |u: f64, v: f64| -150.0 - 50.0 * (u - v).abs();
        let rhs = k(x, y) + k(y, x);
        assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
    }
}

#[test]
fn delayed_cost_against_oracle() {
    // Δ = 0 degenerates to K̄ exactly.
    let nodelay = fx_problem(0.0);
    for (x, a) in [(3.0, 1.0), (10.0, 5.0)] {
        assert_eq!(nodelay.delayed_cost(x, a).unwrap(), nodelay.kbar(x, a));
    }
    // The closed form matches the exact-sampling Monte-Carlo oracle.
    let problem = fx_problem(1.0);
    let cfg = SimConfig {
        n_paths: 200_000,
        seed: 4242,
        ..Default::default()
    };
    for (x, a) in [(6.0, 5.0), (12.0, 5.0), (0.0, 3.0), (-4.0, 2.0)] {
        let est = mc_delayed_cost(&problem, x, a, &cfg).unwrap();
        let analytic = problem.delayed_cost(x, a).unwrap();
        assert!(
            est.z_score(analytic).abs() <= 3.0,
            "({x}, {a}): analytic {analytic} vs {} ± {}",
            est.mean,
            est.stderr
        );
    }
    // The legacy algebra disagrees with the oracle near the kink.
    let legacy = fx_params(1.0).with_r_form(DelayedCostForm::Legacy);
    let est = mc_delayed_cost(&problem, 6.0, 5.0, &cfg).unwrap();
    assert!(est.z_score(legacy.delayed_cost(6.0, 5.0)).abs() > 10.0);
}

#[test]
fn transformed_cost_shape() {
    let problem = fx_problem(0.0);
    // At y = F(a) with Δ = 0: R(F(a); a) = K(a, a)/φ(a).
    let a = 5.0;
    let ya = problem.transform.forward(a);
    let want = -150.0 / problem.pair.phi(a);
    assert!((problem.transformed_cost(ya, a).unwrap() - want).abs() < 1e-9 * want.abs());

    let problem = fx_problem(1.0);
    // R → 0 toward the left boundary (l_{−∞} = 0).
    let r_far = problem
        .transformed_cost(problem.transform.forward(-28.0), 5.066)
        .unwrap();
    assert!(r_far.abs() < 1e-3);
    // Eventually increasing and concave in y on the upper window.
    let mut prev: Option<(f64, f64)> = None;
    let mut prev_slope: Option<f64> = None;
    for x in linspace(20.0, 55.0, 36) {
        let y = problem.transform.forward(x);
        let r = problem.transformed_cost(y, 5.066).unwrap();
        if let Some((y0, r0)) = prev {
            let slope = (r - r0) / (y - y0);
            assert!(slope > 0.0, "R not increasing at x = {x}");
            if let Some(s0) = prev_slope {
                assert!(slope <= s0 * (1.0 + 1e-9), "R not concave at x = {x}");
            }
            prev_slope = Some(slope);
        }
        prev = Some((y, r));
    }
}

#[test]
fn slope_reproduces_reference_values() {
    // No-delay triplet is internally consistent to print precision.
    let nodelay = fx_problem(0.0);
    let rho0 = slope_for(&nodelay, FX_REF_NODELAY.0, FX_REF_NODELAY.1).unwrap();
    assert!(
        (rho0 - FX_REF_NODELAY.2).abs() < 1e-4 * FX_REF_NODELAY.2,
        "rho0 = {rho0}"
    );
    // With delay the printed slope carries a ~0.9% internal inconsistency
    // against its own (a*, b*); the acceptance tolerance (2%) absorbs it.
    let problem = fx_problem(1.0);
    let rho = slope_for(&problem, FX_REF_DELAY.0, FX_REF_DELAY.1).unwrap();
    assert!((rho - FX_REF_DELAY.2).abs() < 0.02 * FX_REF_DELAY.2, "rho = {rho}");

    // Continuous-fit identity: ρF(b) + l_c = R(F(b); a) + e^{−αΔ}(ρF(a)+l_c)φ(a)/φ(b).
    for (problem, a, b) in [(&nodelay, 4.0, 11.0), (&problem, 5.066, 12.1756), (&problem, 2.0, 9.0)]
    {
        let rho = slope_for(problem, a, b).unwrap();
        let lc = problem.cost.boundary_limit_lc;
        let e = problem.delay_discount();
        let (ya, yb) = (problem.transform.forward(a), problem.transform.forward(b));
        let lhs = rho * yb + lc;
        let rhs = problem.transformed_cost(yb, a).unwrap()
            + e * (rho * ya + lc) * problem.pair.phi(a) / problem.pair.phi(b);
        assert!(
            (lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()),
            "identity at ({a}, {b}): {lhs} vs {rhs}"
        );
    }
}

#[test]
fn smooth_fit_brackets_and_reduces_at_no_delay() {
    let problem = fx_problem(1.0);
    let (_, sol) = solved(1.0);
    let (a, b) = (sol.a_star, sol.b_star);
    // Residual is zero at the optimum and flips sign across it.
    let at = smooth_fit_residual(&problem, a, b).unwrap();
    assert!(at.abs() < 1e-8 * (1.0 + sol.rho_star));
    let below = smooth_fit_residual(&problem, a, b - 2.0).unwrap();
    let above = smooth_fit_residual(&problem, a, b + 4.0).unwrap();
    assert!(
        below * above < 0.0,
        "no bracketing: f(b−2) = {below}, f(b+4) = {above}"
    );

    // With Δ = 0 the equation is the classical no-delay smooth fit: the
    // delay factor degenerates to 1 and the solved trigger satisfies
    // W′(F(b)−) = W′(F(b)+) with e^{−αΔ} = 1.
    let nodelay = fx_problem(0.0);
    assert_eq!(nodelay.delay_discount(), 1.0);
    let root = solve_b_given_a(&nodelay, FX_REF_NODELAY.0, &ThresholdSolverConfig::default())
        .unwrap();
    assert!((root.b - FX_REF_NODELAY.1).abs() < 1e-3 * FX_REF_NODELAY.1);
}

#[test]
fn trigger_matches_grid_argmax_oracle() {
    // The smooth-fit root maximizes ρ(a, ·): compare against a dense-grid
    // argmax of the slope.
    let problem = fx_problem(1.0);
    let cfg = ThresholdSolverConfig::default();
    for a in [4.0, 5.066] {
        let root = solve_b_given_a(&problem, a, &cfg).unwrap();
        let grid = linspace(a + 0.5, 25.0, 4000);
        let (mut best_b, mut best_rho) = (f64::NAN, f64::NEG_INFINITY);
        for &b in &grid {
            if let Ok(rho) = slope_for(&problem, a, b) {
                if rho > best_rho {
                    best_rho = rho;
                    best_b = b;
                }
            }
        }
        let resolution = grid[1] - grid[0];
        assert!(
            (best_b - root.b).abs() <= resolution,
            "a = {a}: argmax {best_b} vs root {}",
            root.b
        );
        assert!(root.rho >= best_rho - 1e-10);
    }
}

#[test]
fn outer_optimization_reproduces_triplets() {
    let (_, sol) = solved(1.0);
    assert!((sol.a_star - FX_REF_DELAY.0).abs() < 0.02 * FX_REF_DELAY.0);
    assert!((sol.b_star - FX_REF_DELAY.1).abs() < 0.02 * FX_REF_DELAY.1);
    assert!((sol.rho_star - FX_REF_DELAY.2).abs() < 0.02 * FX_REF_DELAY.2);

    let (_, sol0) = solved(0.0);
    assert!((sol0.a_star - FX_REF_NODELAY.0).abs() < 1e-4 * FX_REF_NODELAY.0);
    assert!((sol0.b_star - FX_REF_NODELAY.1).abs() < 1e-4 * FX_REF_NODELAY.1);
    assert!((sol0.rho_star - FX_REF_NODELAY.2).abs() < 1e-4 * FX_REF_NODELAY.2);

    // Delay monotonicity: the trigger shrinks with delay.
    assert!(sol.b_star < sol0.b_star);
}

#[test]
fn value_function_invariants() {
    let (problem, sol) = solved(1.0);
    let alpha = problem.model.discount();
    // Linearity of W on the transformed continuation region at 100 points.
    for x in linspace(-10.0, sol.b_star, 100) {
        let y = problem.transform.forward(x);
        let w = sol.u(x) / problem.pair.phi(x);
        let line = sol.rho_star * y + sol.boundary_limit_lc;
        assert!((w - line).abs() <= 1e-12 * (1.0 + line.abs()), "x = {x}");
    }
    // Continuation PDE: (𝒜 − α)u = 0 below the trigger.
    for x in linspace(-8.0, sol.b_star - 0.05, 60) {
        let res = problem.model.generator_residual(&|t: f64| sol.u(t), x, 1e-4);
        let rel = res.abs() / (alpha * (1.0 + sol.u(x).abs()));
        assert!(rel < 1e-5, "PDE residual {rel:.2e} at x = {x}");
    }
    // Smooth fit at the trigger in transformed coordinates.
    let resid = smooth_fit_residual(problem, sol.a_star, sol.b_star).unwrap();
    assert!(resid.abs() / (1.0 + sol.rho_star.abs()) < 1e-6);

    // Argmax invariance: maximizing ρ over b and maximizing u^{a,b}(x) over
    // b pick the same trigger for any fixed x below it.
    let a = sol.a_star;
    let grid = linspace(a + 0.5, 25.0, 1500);
    for x in [0.0, 5.0, 10.0] {
        let mut best_rho = (f64::NEG_INFINITY, 0.0);
        let mut best_u = (f64::NEG_INFINITY, 0.0);
        for &b in &grid {
            if b <= x {
                continue;
            }
            let Ok(rho) = slope_for(problem, a, b) else { continue };
            let u_ab = rho * problem.pair.psi(x) + sol.boundary_limit_lc * problem.pair.phi(x);
            if rho > best_rho.0 {
                best_rho = (rho, b);
            }
            if u_ab > best_u.0 {
                best_u = (u_ab, b);
            }
        }
        assert_eq!(best_rho.1, best_u.1, "argmax differs at x = {x}");
    }
}

#[test]
fn gamma_oracle_agrees_with_smooth_fit() {
    let problem = fx_problem(1.0);
    let scfg = ThresholdSolverConfig::default();
    let ocfg = GammaOracleConfig::default();
    let grid_resolution = 60.0 / 4000.0;
    for a in [3.0, 4.0, 5.066, 6.0, 7.0] {
        let root = solve_b_given_a(&problem, a, &scfg).unwrap();
        let oracle = gamma_fixed_point(&problem, a, &ocfg).unwrap();
        assert!(oracle.anchored, "left interference at a = {a}");
        assert!(
            (oracle.b_gamma - root.b).abs() <= grid_resolution,
            "a = {a}: b_gamma {} vs b* {}",
            oracle.b_gamma,
            root.b
        );
        let u_a = root.rho * problem.pair.psi(a);
        assert!(
            (u_a - oracle.gamma_star).abs() <= 1e-6 * (1.0 + oracle.gamma_star.abs()),
            "a = {a}: u(a) = {u_a} vs gamma* = {}",
            oracle.gamma_star
        );
        // The majorant's anchored piece has the continuous-fit slope.
        assert!((oracle.majorant_slope - root.rho).abs() <= 1e-9 * (1.0 + root.rho));
    }
}

#[test]
fn gamma_map_is_nonexpansive_and_majorant_dominates() {
    let problem = fx_problem(1.0);
    let a = 5.066;
    let ocfg = GammaOracleConfig::default();
    // V^{γ₁}(a) − V^{γ₂}(a) ≤ γ₁ − γ₂ on sampled pairs.
    for (g1, g2) in [(2.0, 0.0), (1.5, 1.0), (5.0, 2.0)] {
        let v1 = stopping_value(&problem, a, g1, &ocfg).unwrap().value;
        let v2 = stopping_value(&problem, a, g2, &ocfg).unwrap().value;
        assert!(v1 - v2 <= (g1 - g2) + 1e-9, "({g1}, {g2}): {v1} vs {v2}");
        assert!(v1 >= v2 - 1e-12, "monotonicity violated");
    }

    // Majorant property at γ*: Ŵ ≥ R^{γ*} at the oracle's own grid points
    // (between grid points the hull chords a concave reward from below, so
    // the inequality is a grid statement), equality beyond the tangency.
    let oracle = gamma_fixed_point(&problem, a, &ocfg).unwrap();
    let bonus = oracle.gamma_star * problem.delay_discount();
    let y_b = problem.transform.forward(oracle.b_gamma);
    for x in linspace(0.0, 60.0, ocfg.grid_points) {
        let y = problem.transform.forward(x);
        let r_gamma =
            (problem.delayed_cost(x, a).unwrap() + bonus) / problem.pair.phi(x);
        let w = oracle.majorant(y);
        assert!(
            w >= r_gamma - 1e-9 * (1.0 + r_gamma.abs()),
            "majorant below reward at x = {x}"
        );
        if y >= y_b * 1.0001 {
            assert!(
                (w - r_gamma).abs() <= 1e-6 * (1.0 + r_gamma.abs()),
                "majorant detaches from reward in the stopping region at x = {x}"
            );
        }
    }
}

#[test]
fn cost_function_is_continuous_and_dominates_no_delay() {
    let params = fx_params(1.0);
    let (_, sol) = solved(1.0);
    let (_, sol0) = solved(0.0);
    let params0 = fx_params(0.0);

    // Continuity and smooth fit of v_D at b*.
    let b = sol.b_star;
    let left = params.cost_value(sol, b);
    let right = {
        // Evaluate the action branch at the trigger.
        let quad = b * b / 0.2 + 25.0;
        let u0a = sol.rho_star * ((0.4f64).sqrt() * sol.a_star).exp();
        -(-0.2f64).exp() * u0a - params.delayed_cost(b, sol.a_star) + quad
    };
    assert!((left - right).abs() < 1e-8 * (1.0 + left.abs()));
    let h = 1e-6;
    let slope_left = (params.cost_value(sol, b) - params.cost_value(sol, b - h)) / h;
    let slope_right = (params.cost_value(sol, b + h) - params.cost_value(sol, b)) / h;
    assert!(
        (slope_left - slope_right).abs() < 1e-3 * (1.0 + slope_left.abs()),
        "cost kink at b*: {slope_left} vs {slope_right}"
    );

    // Delay can only cost: v_D ≥ v_0 pointwise, and v agrees with −cost.
    for x in linspace(0.0, 20.0, 201) {
        let with_delay = params.cost_value(sol, x);
        let without = params0.cost_value(sol0, x);
        assert!(
            with_delay >= without - 1e-9 * (1.0 + without.abs()),
            "v_D < v_0 at x = {x}"
        );
        assert!((with_delay + sol.v(x)).abs() < 1e-9 * (1.0 + with_delay.abs()));
    }
}
