//! One-sided threshold policies with implementation delay.
//!
//! A policy (a, b) commits to an intervention when the state first reaches
//! the trigger `b`; the impulse executes Δ later and moves the state to the
//! target `a` from wherever it drifted meanwhile.  In transformed coordinates
//! the policy value is the line ρ·y + l_c on (0, F(b)], so solving the
//! problem reduces to: slope from the continuous-fit identity, trigger from
//! the smooth-fit equation, then an outer maximization of ρ over the target.

use crate::diffusion::{
    fundamental_pair, DiffusionModel, DiscountedReward, FundamentalPair, Scalar2Fn, ScalarFn,
    TransformF,
};
use crate::error::{Error, Result};
use crate::numerics::{bracket_scan, brent, golden_max, linspace, logspace};

/// Running reward, intervention cost, delay and the boundary growth limit
/// l_c = limsup_{x↓c} K̄(x,a)⁺/φ(x) (supplied analytically per model).
#[derive(Clone)]
pub struct ThresholdCostStructure {
    pub running_reward: ScalarFn,
    /// K(x, y): reward (negative) of an impulse from `x` to `y`.
    pub intervention_cost: Scalar2Fn,
    pub delay: f64,
    pub boundary_limit_lc: f64,
    /// Analytic r(x, a) = Eˣ[e^{−αΔ} K̄(X_Δ, a)], when the model has one.
    pub delayed_cost: Option<Scalar2Fn>,
    /// Analytic ∂r/∂x, when available.
    pub delayed_cost_dx: Option<Scalar2Fn>,
}

/// A threshold policy: jump target `a` and trigger `b` with a < b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy {
    pub target: f64,
    pub trigger: f64,
}

impl ThresholdPolicy {
    pub fn new(target: f64, trigger: f64) -> Result<Self> {
        if !(target < trigger) {
            return Err(Error::Config(format!(
                "threshold policy needs target < trigger, got a = {target}, b = {trigger}"
            )));
        }
        Ok(Self { target, trigger })
    }
}

/// Model, fundamental solutions, transform, expected reward and costs,
/// bundled for the solver.
#[derive(Clone)]
pub struct ThresholdProblem {
    pub model: DiffusionModel,
    pub pair: FundamentalPair,
    pub transform: TransformF,
    pub g: DiscountedReward,
    pub cost: ThresholdCostStructure,
    /// Sub-window on which the fixed-point oracle builds its majorant grid;
    /// defaults to the model window.
    pub oracle_window: Option<(f64, f64)>,
}

impl ThresholdProblem {
    pub fn new(
        model: DiffusionModel,
        g: DiscountedReward,
        cost: ThresholdCostStructure,
    ) -> Result<Self> {
        if cost.delay < 0.0 {
            return Err(Error::Config("delay must be nonnegative".into()));
        }
        let (lo, hi) = model.window()?;
        // Fixed part of the intervention cost: K(x, x) < 0 on the window.
        for x in linspace(lo, hi, 33) {
            if !((cost.intervention_cost)(x, x) < 0.0) {
                return Err(Error::Config(format!(
                    "intervention cost K(x, x) must be negative (fixed cost), violated at x = {x}"
                )));
            }
        }
        let pair = fundamental_pair(&model)?;
        let transform = TransformF::new(&model, &pair)?;
        Ok(Self {
            model,
            pair,
            transform,
            g,
            cost,
            oracle_window: None,
        })
    }

    pub fn with_oracle_window(mut self, lo: f64, hi: f64) -> Self {
        self.oracle_window = Some((lo, hi));
        self
    }

    /// e^{−αΔ}.
    pub fn delay_discount(&self) -> f64 {
        (-self.model.discount() * self.cost.delay).exp()
    }

    /// K̄(x, y) = K(x, y) − g(x) + g(y).
    pub fn kbar(&self, x: f64, y: f64) -> f64 {
        (self.cost.intervention_cost)(x, y) - self.g.value(x) + self.g.value(y)
    }

    /// r(x; a) = Eˣ[e^{−αΔ} K̄(X_Δ, a)].
    ///
    /// Analytic when the model provides it, exact for Δ = 0, otherwise
    /// quadrature over the exact transition law.
    pub fn delayed_cost(&self, x: f64, a: f64) -> Result<f64> {
        if let Some(r) = &self.cost.delayed_cost {
            return Ok(r(x, a));
        }
        if self.cost.delay == 0.0 {
            return Ok(self.kbar(x, a));
        }
        let law = self.model.transition().ok_or_else(|| {
            Error::Config("delayed cost needs an analytic form or a transition law".into())
        })?;
        let scale = 1.0 + self.kbar(x, a).abs();
        let mean = law.expect(x, self.cost.delay, &|xi: f64| self.kbar(xi, a), 1e-10 * scale);
        Ok(self.delay_discount() * mean)
    }

    /// ∂r/∂x, analytic or by central differences.
    pub fn delayed_cost_dx(&self, x: f64, a: f64) -> Result<f64> {
        if let Some(rx) = &self.cost.delayed_cost_dx {
            return Ok(rx(x, a));
        }
        let h = 1e-6 * (1.0 + x.abs());
        Ok((self.delayed_cost(x + h, a)? - self.delayed_cost(x - h, a)?) / (2.0 * h))
    }

    /// R(y; a) = r(F⁻¹(y), a) / φ(F⁻¹(y)).
    pub fn transformed_cost(&self, y: f64, a: f64) -> Result<f64> {
        let x = self.transform.inverse(y)?;
        Ok(self.delayed_cost(x, a)? / self.pair.phi(x))
    }

    /// ∂R/∂y via the chain rule when ∂r/∂x is analytic, else central
    /// differences in y with step 1e−6·(1 + |y|).
    pub fn transformed_cost_dy(&self, y: f64, a: f64) -> Result<f64> {
        if self.cost.delayed_cost_dx.is_some() || self.cost.delayed_cost.is_none() {
            let x = self.transform.inverse(y)?;
            let phi = self.pair.phi(x);
            let num = self.delayed_cost_dx(x, a)? * phi - self.delayed_cost(x, a)? * self.pair.phi_prime(x);
            return Ok(num / (phi * phi * self.transform.derivative(x)));
        }
        let h = 1e-6 * (1.0 + y.abs());
        Ok((self.transformed_cost(y + h, a)? - self.transformed_cost(y - h, a)?) / (2.0 * h))
    }
}

/// The continuous-fit slope ρ(a, b):
/// ρ = [R(F(b); a) + l_c(e^{−αΔ}φ(a)/φ(b) − 1)] / [F(b) − e^{−αΔ}(φ(a)/φ(b))F(a)].
pub fn slope_for(problem: &ThresholdProblem, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Domain(format!("need a < b, got a = {a}, b = {b}")));
    }
    let lc = problem.cost.boundary_limit_lc;
    let e = problem.delay_discount();
    let yb = problem.transform.forward(b);
    let ya = problem.transform.forward(a);
    let ratio = problem.pair.phi(a) / problem.pair.phi(b);
    let den = yb - e * ratio * ya;
    if den.abs() < 1e-12 * (1.0 + yb.abs()) {
        return Err(Error::DegeneratePolicy(format!(
            "continuous-fit denominator vanishes at (a, b) = ({a}, {b})"
        )));
    }
    let num = problem.transformed_cost(yb, a)? + lc * (e * ratio - 1.0);
    Ok(num / den)
}

/// Right derivative of W at F(b) for the policy (a, b):
/// W′(F(b)+) = R′(F(b); a) − e^{−αΔ}(ρF(a) + l_c)·φ(a)φ′(b)/(φ(b)²F′(b)).
fn w_prime_right(problem: &ThresholdProblem, a: f64, b: f64, rho: f64) -> Result<f64> {
    let lc = problem.cost.boundary_limit_lc;
    let e = problem.delay_discount();
    let ya = problem.transform.forward(a);
    let yb = problem.transform.forward(b);
    let phi_b = problem.pair.phi(b);
    let transfer = e * (rho * ya + lc) * problem.pair.phi(a) * problem.pair.phi_prime(b)
        / (phi_b * phi_b * problem.transform.derivative(b));
    Ok(problem.transformed_cost_dy(yb, a)? - transfer)
}

/// Smooth-fit residual W′(F(b)−) − W′(F(b)+) = ρ − W′(F(b)+).
///
/// Zero exactly when b satisfies the implicit trigger equation; with Δ = 0 it
/// reduces to the classical no-delay smooth-fit condition.
pub fn smooth_fit_residual(problem: &ThresholdProblem, a: f64, b: f64) -> Result<f64> {
    let rho = slope_for(problem, a, b)?;
    Ok(rho - w_prime_right(problem, a, b, rho)?)
}

/// Tuning knobs for the threshold solver.
#[derive(Debug, Clone)]
pub struct ThresholdSolverConfig {
    /// Points in the log-spaced trigger scan used to bracket the root.
    pub b_scan_points: usize,
    /// Smallest trigger offset above `a`, relative to 1 + |a|.
    pub b_offset_min_rel: f64,
    /// Scaled smooth-fit residual accepted at the root.
    pub root_tol: f64,
    /// Coarse grid size for the outer maximization over the target `a`.
    pub a_grid_points: usize,
    /// Absolute tolerance of the golden-section refinement in `a`.
    pub a_tol: f64,
    /// Optional explicit range for the target search (defaults to the window).
    pub a_range: Option<(f64, f64)>,
    /// Verify the existence/uniqueness hypotheses numerically and warn.
    pub check_hypotheses: bool,
}

impl Default for ThresholdSolverConfig {
    fn default() -> Self {
        Self {
            b_scan_points: 400,
            b_offset_min_rel: 1e-4,
            root_tol: 1e-10,
            a_grid_points: 200,
            a_tol: 1e-6,
            a_range: None,
            check_hypotheses: true,
        }
    }
}

/// Root of the smooth-fit equation for a fixed target.
#[derive(Debug, Clone, Copy)]
pub struct TriggerRoot {
    pub b: f64,
    pub rho: f64,
    /// Raw residual W′(F(b)−) − W′(F(b)+) at the root.
    pub residual: f64,
}

/// Solve the smooth-fit equation for the trigger b given the target `a`:
/// bracket on a log-spaced scan, then polish with Brent.
pub fn solve_b_given_a(
    problem: &ThresholdProblem,
    a: f64,
    cfg: &ThresholdSolverConfig,
) -> Result<TriggerRoot> {
    let (_, hi) = problem.model.window()?;
    let off_min = cfg.b_offset_min_rel * (1.0 + a.abs());
    if hi - a <= 2.0 * off_min {
        return Err(Error::NoThreshold(format!(
            "target a = {a} leaves no room for a trigger below the window edge {hi}"
        )));
    }
    let bs: Vec<f64> = logspace(off_min, hi - a, cfg.b_scan_points)
        .into_iter()
        .map(|off| a + off)
        .collect();
    let f = |b: f64| smooth_fit_residual(problem, a, b).unwrap_or(f64::NAN);
    let (b_lo, f_lo, b_hi, f_hi) = bracket_scan(f, &bs).ok_or_else(|| {
        Error::NoThreshold(format!(
            "no sign change of the smooth-fit residual for a = {a} on ({:.4}, {hi:.4})",
            a + off_min
        ))
    })?;
    let (b, _) = brent(f, b_lo, b_hi, f_lo, f_hi, 1e-13 * (1.0 + b_hi.abs()), 200)?;
    let rho = slope_for(problem, a, b)?;
    let residual = smooth_fit_residual(problem, a, b)?;
    if residual.abs() > cfg.root_tol * (1.0 + rho.abs()) {
        return Err(Error::NoThreshold(format!(
            "trigger polish stalled at b = {b} (scaled residual {:.3e})",
            residual.abs() / (1.0 + rho.abs())
        )));
    }
    Ok(TriggerRoot { b, rho, residual })
}

/// Solver diagnostics attached to a [`ThresholdSolution`].
#[derive(Debug, Clone, Default)]
pub struct ThresholdDiagnostics {
    /// Smooth-fit residual at (a*, b*).
    pub smooth_fit_residual: f64,
    /// (a, ρ(a)) pairs visited by the outer search.
    pub trace: Vec<(f64, f64)>,
    /// The outer maximizer sat on the search-range edge.
    pub window_warning: bool,
    pub warnings: Vec<String>,
}

/// Solved threshold policy with the evaluable value functions.
#[derive(Clone)]
pub struct ThresholdSolution {
    pub a_star: f64,
    pub b_star: f64,
    pub rho_star: f64,
    pub boundary_limit_lc: f64,
    pub delay: f64,
    delay_discount: f64,
    u0_at_a: f64,
    psi: ScalarFn,
    phi: ScalarFn,
    r_at_a: ScalarFn,
    g: DiscountedReward,
    pub diagnostics: ThresholdDiagnostics,
}

impl ThresholdSolution {
    /// u(x): ρ*ψ(x) + l_cφ(x) below the trigger, r(x, a*) + e^{−αΔ}u₀(a*)
    /// above it.
    pub fn u(&self, x: f64) -> f64 {
        if x <= self.b_star {
            self.rho_star * (self.psi)(x) + self.boundary_limit_lc * (self.phi)(x)
        } else {
            (self.r_at_a)(x) + self.delay_discount * self.u0_at_a
        }
    }

    /// v(x) = u(x) + g(x).
    pub fn v(&self, x: f64) -> f64 {
        self.u(x) + self.g.value(x)
    }

    pub fn policy(&self) -> ThresholdPolicy {
        ThresholdPolicy {
            target: self.a_star,
            trigger: self.b_star,
        }
    }
}

/// Verify the hypotheses behind existence/uniqueness numerically (transformed
/// cost eventually increasing and concave, growing at the right edge) and
/// return human-readable warnings instead of failing.
fn hypothesis_warnings(problem: &ThresholdProblem, a: f64) -> Vec<String> {
    let mut warnings = Vec::new();
    let Ok((lo, hi)) = problem.model.window() else {
        return warnings;
    };
    let xs = linspace(lo + 0.7 * (hi - lo), hi - 1e-3 * (hi - lo), 24);
    let vals: Vec<(f64, f64)> = xs
        .iter()
        .filter_map(|&x| {
            let y = problem.transform.forward(x);
            problem.transformed_cost(y, a).ok().map(|r| (y, r))
        })
        .collect();
    if vals.len() < 8 {
        warnings.push("transformed delayed cost not evaluable on the upper window".into());
        return warnings;
    }
    if vals.windows(2).any(|w| w[1].1 <= w[0].1) {
        warnings.push("transformed delayed cost not increasing near the right edge".into());
    }
    for w in vals.windows(3) {
        let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
        if s2 > s1 * (1.0 + 1e-6) + 1e-12 {
            warnings.push("transformed delayed cost not concave near the right edge".into());
            break;
        }
    }
    if vals.last().unwrap().1 <= vals.first().unwrap().1.abs() {
        warnings.push("transformed delayed cost does not grow toward the right edge".into());
    }
    warnings
}

/// Outer stage: maximize ρ(a, b(a)) over the target `a` (coarse grid, then
/// golden-section refinement) and assemble the full solution.
pub fn solve(problem: &ThresholdProblem, cfg: &ThresholdSolverConfig) -> Result<ThresholdSolution> {
    let (lo, hi) = problem.model.window()?;
    let (a_lo, a_hi) = cfg.a_range.unwrap_or_else(|| {
        let margin = 1e-4 * (hi - lo);
        (lo + margin, hi - margin)
    });
    let grid = linspace(a_lo, a_hi, cfg.a_grid_points);
    let mut trace = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64, f64)> = None; // (index, a, rho)
    for (i, &a) in grid.iter().enumerate() {
        let Ok(root) = solve_b_given_a(problem, a, cfg) else {
            continue;
        };
        trace.push((a, root.rho));
        if best.map_or(true, |(_, _, r)| root.rho > r) {
            best = Some((i, a, root.rho));
        }
    }
    let (best_i, best_a, _) = best.ok_or_else(|| {
        Error::NoThreshold("no target on the grid admits a smooth-fit trigger".into())
    })?;
    let window_warning = best_i == 0 || best_i == grid.len() - 1;

    let lo_ref = grid[best_i.saturating_sub(1)];
    let hi_ref = grid[(best_i + 1).min(grid.len() - 1)];
    let objective = |a: f64| {
        solve_b_given_a(problem, a, cfg)
            .map(|r| r.rho)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let (a_star, _) = golden_max(objective, lo_ref, hi_ref, cfg.a_tol);
    let a_star = if objective(a_star) >= objective(best_a) {
        a_star
    } else {
        best_a
    };
    let root = solve_b_given_a(problem, a_star, cfg)?;

    let mut warnings = Vec::new();
    if cfg.check_hypotheses {
        warnings.extend(hypothesis_warnings(problem, a_star));
    }

    let u0_at_a = root.rho * problem.pair.psi(a_star)
        + problem.cost.boundary_limit_lc * problem.pair.phi(a_star);
    let r_at_a: ScalarFn = {
        let p = problem.clone();
        let a = a_star;
        std::sync::Arc::new(move |x| p.delayed_cost(x, a).unwrap_or(f64::NAN))
    };
    Ok(ThresholdSolution {
        a_star,
        b_star: root.b,
        rho_star: root.rho,
        boundary_limit_lc: problem.cost.boundary_limit_lc,
        delay: problem.cost.delay,
        delay_discount: problem.delay_discount(),
        u0_at_a,
        psi: problem.pair.psi.clone(),
        phi: problem.pair.phi.clone(),
        r_at_a,
        g: problem.g.clone(),
        diagnostics: ThresholdDiagnostics {
            smooth_fit_residual: root.residual,
            trace,
            window_warning,
            warnings,
        },
    })
}
