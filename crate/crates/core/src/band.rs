//! Two-sided band policies (p, q, c, d) with delay on the firing side.
//!
//! Crossing `p` from above triggers an immediate jump to `q`; crossing `d`
//! from below commits to a delayed jump that lands on `c` after Δ.  On
//! [F(p), F(d)] the transformed value is the line ρ·y + τ; the pair (ρ, τ)
//! comes from a 2×2 continuous-fit system, (p, d) from the two smooth-fit
//! equations given (q, c), and the outer stage searches over (q, c).

use std::sync::Arc;

use crate::diffusion::{
    fundamental_pair, DiffusionModel, DiscountedReward, FundamentalPair, Scalar2Fn, ScalarFn,
    TransformF,
};
use crate::error::{Error, Result};
use crate::numerics::{compass_max2, linspace, logspace, newton2_damped};

/// Hire/fire cost coefficients and the delayed firing cost.
///
/// The hire cost is C₂(x, y) = −c₁(y − x)·1{y>x} − c₂x and the mixed delayed
/// cost C₁(x, y) = −(c₃(x − y) + c₄x)·1{x>y} + C₂(x, y)·1{y>x}; both are
/// parametrized by the four positive coefficients.
#[derive(Clone)]
pub struct BandCostStructure {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub delay: f64,
    /// Analytic r(ξ, c) = E^ξ[e^{−αΔ} C̄₁(ξ⁰_Δ, c)], when available.
    pub delayed_cost: Option<Scalar2Fn>,
    /// Analytic ∂r/∂ξ.
    pub delayed_cost_dx: Option<Scalar2Fn>,
    /// Bound used by the cost condition max(c₁−c₂, c₃+c₄) < bound, when the
    /// model provides one (the labor model passes |k₂|).
    pub cost_condition_bound: Option<f64>,
}

impl BandCostStructure {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.delay < 0.0 {
            return Err(Error::Config("delay must be nonnegative".into()));
        }
        Ok(())
    }

    /// C₂(x, y).
    pub fn hire_cost(&self, x: f64, y: f64) -> f64 {
        let jump = if y > x { -self.c1 * (y - x) } else { 0.0 };
        jump - self.c2 * x
    }

    /// C₁(x, y): firing branch above, hire branch below.
    pub fn mixed_cost(&self, x: f64, y: f64) -> f64 {
        if x > y {
            -(self.c3 * (x - y) + self.c4 * x)
        } else if y > x {
            self.hire_cost(x, y)
        } else {
            0.0
        }
    }
}

/// A band policy p < q < c < d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPolicy {
    pub p: f64,
    pub q: f64,
    pub c: f64,
    pub d: f64,
}

impl BandPolicy {
    pub fn new(p: f64, q: f64, c: f64, d: f64) -> Result<Self> {
        if !(p < q && q < c && c < d) {
            return Err(Error::Config(format!(
                "band policy needs p < q < c < d, got ({p}, {q}, {c}, {d})"
            )));
        }
        Ok(Self { p, q, c, d })
    }
}

/// Model, fundamentals, transform, expected reward, running reward and costs.
#[derive(Clone)]
pub struct BandProblem {
    pub model: DiffusionModel,
    pub pair: FundamentalPair,
    pub transform: TransformF,
    pub g: DiscountedReward,
    /// Running reward f accumulated by the performance measure.
    pub running_reward: ScalarFn,
    pub cost: BandCostStructure,
}

impl BandProblem {
    pub fn new(
        model: DiffusionModel,
        g: DiscountedReward,
        running_reward: ScalarFn,
        cost: BandCostStructure,
    ) -> Result<Self> {
        cost.validate()?;
        model.window()?;
        let pair = fundamental_pair(&model)?;
        let transform = TransformF::new(&model, &pair)?;
        Ok(Self {
            model,
            pair,
            transform,
            g,
            running_reward,
            cost,
        })
    }

    /// e^{(b−r)Δ} in the labor notation: the delay discount at the model's
    /// net rate.
    pub fn delay_discount(&self) -> f64 {
        (-self.model.discount() * self.cost.delay).exp()
    }

    /// C̄₁(x, y) = C₁(x, y) − g(x) + g(y).
    pub fn cbar1(&self, x: f64, y: f64) -> f64 {
        self.cost.mixed_cost(x, y) - self.g.value(x) + self.g.value(y)
    }

    /// C̄₂(x, y) = C₂(x, y) − g(x) + g(y).
    pub fn cbar2(&self, x: f64, y: f64) -> f64 {
        self.cost.hire_cost(x, y) - self.g.value(x) + self.g.value(y)
    }

    /// Delayed firing cost r(ξ, c); analytic, exact at Δ = 0, or quadrature.
    pub fn delayed_cost(&self, xi: f64, c: f64) -> Result<f64> {
        if let Some(r) = &self.cost.delayed_cost {
            return Ok(r(xi, c));
        }
        if self.cost.delay == 0.0 {
            return Ok(self.cbar1(xi, c));
        }
        let law = self.model.transition().ok_or_else(|| {
            Error::Config("delayed band cost needs an analytic form or a transition law".into())
        })?;
        let scale = 1.0 + self.cbar1(xi, c).abs();
        let mean = law.expect(xi, self.cost.delay, &|z: f64| self.cbar1(z, c), 1e-10 * scale);
        Ok(self.delay_discount() * mean)
    }

    pub fn delayed_cost_dx(&self, xi: f64, c: f64) -> Result<f64> {
        if let Some(rx) = &self.cost.delayed_cost_dx {
            return Ok(rx(xi, c));
        }
        let h = 1e-6 * (1.0 + xi.abs());
        Ok((self.delayed_cost(xi + h, c)? - self.delayed_cost(xi - h, c)?) / (2.0 * h))
    }

    /// R₁(y; c) = r(F⁻¹(y), c)/φ(F⁻¹(y)).
    pub fn transformed_fire_cost(&self, y: f64, c: f64) -> Result<f64> {
        let x = self.transform.inverse(y)?;
        Ok(self.delayed_cost(x, c)? / self.pair.phi(x))
    }

    /// ∂R₁/∂y.
    pub fn transformed_fire_cost_dy(&self, y: f64, c: f64) -> Result<f64> {
        let x = self.transform.inverse(y)?;
        let phi = self.pair.phi(x);
        let num = self.delayed_cost_dx(x, c)? * phi - self.delayed_cost(x, c)? * self.pair.phi_prime(x);
        Ok(num / (phi * phi * self.transform.derivative(x)))
    }

    /// R₂(y; q) = C̄₂(F⁻¹(y), q)/φ(F⁻¹(y)).
    pub fn transformed_hire_cost(&self, y: f64, q: f64) -> Result<f64> {
        let x = self.transform.inverse(y)?;
        Ok(self.cbar2(x, q) / self.pair.phi(x))
    }

    /// ∂R₂/∂y via ∂C̄₂/∂x = c₁·1{q>x} − c₂ − g′(x).
    pub fn transformed_hire_cost_dy(&self, y: f64, q: f64) -> Result<f64> {
        let x = self.transform.inverse(y)?;
        let cbar2_dx = if q > x { self.cost.c1 } else { 0.0 } - self.cost.c2 - self.g.derivative(x);
        let phi = self.pair.phi(x);
        let num = cbar2_dx * phi - self.cbar2(x, q) * self.pair.phi_prime(x);
        Ok(num / (phi * phi * self.transform.derivative(x)))
    }
}

/// Slope and intercept of W on [F(p), F(d)] from the two continuous-fit
/// equations (back-substitution holds to machine precision by construction).
pub fn slope_intercept_for(problem: &BandProblem, policy: &BandPolicy) -> Result<(f64, f64)> {
    let BandPolicy { p, q, c, d } = *policy;
    let e = problem.delay_discount();
    let tf = &problem.transform;
    let (fp, fq, fc, fd) = (tf.forward(p), tf.forward(q), tf.forward(c), tf.forward(d));
    let k = e * problem.pair.phi(c) / problem.pair.phi(d);
    let h = problem.pair.phi(q) / problem.pair.phi(p);
    let r1 = problem.transformed_fire_cost(fd, c)?;
    let r2 = problem.transformed_hire_cost(fp, q)?;
    // [F(d) − kF(c)]ρ + (1 − k)τ = R₁,  [F(p) − hF(q)]ρ + (1 − h)τ = R₂.
    let (a11, a12) = (fd - k * fc, 1.0 - k);
    let (a21, a22) = (fp - h * fq, 1.0 - h);
    let det = a11 * a22 - a12 * a21;
    if det.abs() < 1e-12 * (1.0 + a11.abs() * a22.abs()) {
        return Err(Error::DegeneratePolicy(format!(
            "singular continuous-fit system for band ({p}, {q}, {c}, {d})"
        )));
    }
    let rho = (r1 * a22 - a12 * r2) / det;
    let tau = (a11 * r2 - r1 * a21) / det;
    Ok((rho, tau))
}

/// The two smooth-fit residuals, as one-sided derivative jumps of W:
/// (W′(F(p)−) − ρ, W′(F(d)+) − ρ).
pub fn smooth_fit_residuals(
    problem: &BandProblem,
    p: f64,
    d: f64,
    q: f64,
    c: f64,
) -> Result<[f64; 2]> {
    let policy = BandPolicy::new(p, q, c, d)?;
    let (rho, tau) = slope_intercept_for(problem, &policy)?;
    residuals_with(problem, &policy, rho, tau)
}

fn residuals_with(
    problem: &BandProblem,
    policy: &BandPolicy,
    rho: f64,
    tau: f64,
) -> Result<[f64; 2]> {
    let BandPolicy { p, q, c, d } = *policy;
    let e = problem.delay_discount();
    let tf = &problem.transform;
    let pair = &problem.pair;
    let (fp, fq, fc, fd) = (tf.forward(p), tf.forward(q), tf.forward(c), tf.forward(d));

    let hire_transfer =
        (rho * fq + tau) * pair.phi(q) * pair.phi_prime(p) / (pair.phi(p).powi(2) * tf.derivative(p));
    let res_p = -hire_transfer + problem.transformed_hire_cost_dy(fp, q)? - rho;

    let fire_transfer = e * (rho * fc + tau) * pair.phi(c) * pair.phi_prime(d)
        / (pair.phi(d).powi(2) * tf.derivative(d));
    let res_d = -fire_transfer + problem.transformed_fire_cost_dy(fd, c)? - rho;
    Ok([res_p, res_d])
}

/// Band solver knobs.
#[derive(Debug, Clone)]
pub struct BandSolverConfig {
    /// Seed grid size per axis for the inner (p, d) solve.
    pub pd_grid: usize,
    /// Residual norm target of the damped Newton iteration.
    pub pd_tol: f64,
    /// Outer grid size per axis over (q, c).
    pub qc_grid: usize,
    /// Relative step tolerance of the outer compass refinement.
    pub qc_tol: f64,
    /// Optional explicit (q, c) ranges; default is the window.
    pub q_range: Option<(f64, f64)>,
    pub c_range: Option<(f64, f64)>,
    /// Fixed reference state for the outer objective; default is the
    /// geometric mean of the best coarse cell.
    pub x_ref: Option<f64>,
    pub check_hypotheses: bool,
}

impl Default for BandSolverConfig {
    fn default() -> Self {
        Self {
            pd_grid: 60,
            pd_tol: 1e-9,
            qc_grid: 40,
            qc_tol: 1e-5,
            q_range: None,
            c_range: None,
            x_ref: None,
            check_hypotheses: true,
        }
    }
}

/// Inner solve result for fixed (q, c).
#[derive(Debug, Clone, Copy)]
pub struct PdRoot {
    pub p: f64,
    pub d: f64,
    pub rho: f64,
    pub tau: f64,
    pub residuals: [f64; 2],
    pub iterations: usize,
}

fn axis_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if lo > 0.0 {
        logspace(lo, hi, n)
    } else {
        linspace(lo, hi, n)
    }
}

/// Solve the two smooth-fit equations for (p, d) given (q, c): coarse grid
/// seed, then a damped Newton with finite-difference Jacobian.
pub fn solve_pd_given_qc(
    problem: &BandProblem,
    q: f64,
    c: f64,
    cfg: &BandSolverConfig,
) -> Result<PdRoot> {
    if !(q < c) {
        return Err(Error::Domain(format!("need q < c, got ({q}, {c})")));
    }
    let (lo, hi) = problem.model.window()?;
    let p_lo = if lo > 0.0 { lo } else { lo + 1e-9 * (hi - lo) };
    let p_hi = q * (1.0 - 1e-4) - if q > 0.0 { 0.0 } else { 1e-9 };
    let d_lo = c + 1e-4 * (1.0 + c.abs());
    let d_hi = hi;
    if !(p_lo < p_hi && d_lo < d_hi) {
        return Err(Error::NoBand(format!(
            "no admissible (p, d) region for (q, c) = ({q}, {c}) on the window"
        )));
    }

    let ps = axis_grid(p_lo, p_hi, cfg.pd_grid);
    let ds = axis_grid(d_lo, d_hi, cfg.pd_grid);
    let mut cells: Vec<(f64, [f64; 2])> = Vec::new();
    for &p in &ps {
        for &d in &ds {
            if let Ok(r) = smooth_fit_residuals(problem, p, d, q, c) {
                let norm = (r[0] * r[0] + r[1] * r[1]).sqrt();
                if norm.is_finite() {
                    cells.push((norm, [p, d]));
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::NoBand(format!(
            "no evaluable (p, d) seed cell for (q, c) = ({q}, {c})"
        )));
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));

    let res = |v: [f64; 2]| smooth_fit_residuals(problem, v[0], v[1], q, c);
    let mut last_err = None;
    for &(_, seed) in cells.iter().take(5) {
        match newton2_damped(res, seed, [p_lo, d_lo], [p_hi, d_hi], cfg.pd_tol, 200) {
            Ok(([p, d], residuals, iterations)) => {
                let policy = BandPolicy::new(p, q, c, d)?;
                let (rho, tau) = slope_intercept_for(problem, &policy)?;
                return Ok(PdRoot {
                    p,
                    d,
                    rho,
                    tau,
                    residuals,
                    iterations,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NoBand("no Newton seed converged".into())))
}

/// Diagnostics attached to a [`BandSolution`].
#[derive(Debug, Clone, Default)]
pub struct BandDiagnostics {
    pub residual_p: f64,
    pub residual_d: f64,
    /// ((q, c), objective) pairs visited by the outer search.
    pub trace: Vec<((f64, f64), f64)>,
    pub window_warning: bool,
    pub warnings: Vec<String>,
}

/// Solved band policy with the evaluable value function.
#[derive(Clone)]
pub struct BandSolution {
    pub p_star: f64,
    pub q_star: f64,
    pub c_star: f64,
    pub d_star: f64,
    pub rho_star: f64,
    pub tau_star: f64,
    pub delay: f64,
    delay_discount: f64,
    u0_at_q: f64,
    u0_at_c: f64,
    psi: ScalarFn,
    phi: ScalarFn,
    cbar2_at_q: ScalarFn,
    r_at_c: ScalarFn,
    g: DiscountedReward,
    pub diagnostics: BandDiagnostics,
}

impl BandSolution {
    /// The three-piece u: hire piece below p*, ρ*ψ + τ*φ on [p*, d*], delayed
    /// firing piece above d*.
    pub fn u(&self, xi: f64) -> f64 {
        if xi <= self.p_star {
            self.u0_at_q + (self.cbar2_at_q)(xi)
        } else if xi >= self.d_star {
            self.delay_discount * self.u0_at_c + (self.r_at_c)(xi)
        } else {
            self.rho_star * (self.psi)(xi) + self.tau_star * (self.phi)(xi)
        }
    }

    /// Y(ξ) = u(ξ) + g(ξ).
    pub fn value(&self, xi: f64) -> f64 {
        self.u(xi) + self.g.value(xi)
    }

    pub fn policy(&self) -> BandPolicy {
        BandPolicy {
            p: self.p_star,
            q: self.q_star,
            c: self.c_star,
            d: self.d_star,
        }
    }
}

/// Numeric checks of the shape hypotheses on R₁ and R₂ behind the inner
/// existence/uniqueness result; violations come back as warnings.
fn hypothesis_warnings(problem: &BandProblem, q: f64, c: f64) -> Vec<String> {
    let mut warnings = Vec::new();
    let Ok((lo, hi)) = problem.model.window() else {
        return warnings;
    };
    // R₁ eventually increasing and concave toward the right edge.
    let xs = linspace(lo + 0.7 * (hi - lo), hi - 1e-3 * (hi - lo), 24);
    let r1: Vec<(f64, f64)> = xs
        .iter()
        .filter_map(|&x| {
            let y = problem.transform.forward(x);
            problem.transformed_fire_cost(y, c).ok().map(|v| (y, v))
        })
        .collect();
    if r1.len() >= 8 {
        if r1.windows(2).any(|w| w[1].1 <= w[0].1) {
            warnings.push("transformed firing cost not increasing near the right edge".into());
        }
        for w in r1.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            if s2 > s1 * (1.0 + 1e-6) + 1e-12 {
                warnings.push("transformed firing cost not concave near the right edge".into());
                break;
            }
        }
    }
    // R₂ increasing then decreasing with an interior maximum below F(q).
    let span = if lo > 0.0 {
        logspace(lo * (1.0 + 1e-9), q, 64)
    } else {
        linspace(lo + 1e-9 * (hi - lo), q, 64)
    };
    let r2: Vec<f64> = span
        .iter()
        .filter_map(|&x| {
            let y = problem.transform.forward(x);
            problem.transformed_hire_cost(y, q).ok()
        })
        .collect();
    if r2.len() >= 8 {
        let peak = r2
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        if peak == 0 || peak == r2.len() - 1 {
            warnings.push("transformed hire cost has no interior maximum below F(q)".into());
        }
    }
    warnings
}

/// Outer stage: coarse (q, c) grid, then derivative-free refinement of the
/// policy value at a fixed reference state.
pub fn solve(problem: &BandProblem, cfg: &BandSolverConfig) -> Result<BandSolution> {
    let (lo, hi) = problem.model.window()?;
    let mut warnings = Vec::new();

    if let Some(bound) = problem.cost.cost_condition_bound {
        let lhs = (problem.cost.c1 - problem.cost.c2).max(problem.cost.c3 + problem.cost.c4);
        if !(lhs < bound) {
            warnings.push(format!(
                "cost condition violated: max(c1−c2, c3+c4) = {lhs} ≥ bound {bound}"
            ));
        }
    }

    let margin = if lo > 0.0 { lo * 1e-3 } else { 1e-6 * (hi - lo) };
    let (q_lo, q_hi) = cfg.q_range.unwrap_or((lo + margin, hi - margin));
    let (c_lo, c_hi) = cfg.c_range.unwrap_or((lo + margin, hi - margin));
    let qs = axis_grid(q_lo, q_hi, cfg.qc_grid);
    let cs = axis_grid(c_lo, c_hi, cfg.qc_grid);

    // Coarse scan; the reference state follows each cell here and is frozen
    // for the refinement below.
    let mut trace = Vec::new();
    let mut best: Option<(usize, usize, f64, PdRoot)> = None;
    for (i, &q) in qs.iter().enumerate() {
        for (j, &c) in cs.iter().enumerate() {
            if q >= c * (1.0 - 1e-9) {
                continue;
            }
            let Ok(root) = solve_pd_given_qc(problem, q, c, cfg) else {
                continue;
            };
            let x_ref = cfg.x_ref.unwrap_or((q * c).sqrt());
            let obj = root.rho * problem.pair.psi(x_ref) + root.tau * problem.pair.phi(x_ref);
            trace.push(((q, c), obj));
            if best.as_ref().map_or(true, |&(_, _, o, _)| obj > o) {
                best = Some((i, j, obj, root));
            }
        }
    }
    let (bi, bj, _, _) = best
        .ok_or_else(|| Error::NoBand("no feasible (q, c) cell on the outer grid".into()))?;
    let window_warning =
        bi == 0 || bi == qs.len() - 1 || bj == 0 || bj == cs.len() - 1;
    let (q0, c0) = (qs[bi], cs[bj]);
    let x_ref = cfg.x_ref.unwrap_or((q0 * c0).sqrt());

    // Compass refinement in log coordinates with the frozen reference state.
    let objective = |lnqc: [f64; 2]| -> Option<f64> {
        let (q, c) = (lnqc[0].exp(), lnqc[1].exp());
        if q >= c * (1.0 - 1e-9) {
            return None;
        }
        let root = solve_pd_given_qc(problem, q, c, cfg).ok()?;
        Some(root.rho * problem.pair.psi(x_ref) + root.tau * problem.pair.phi(x_ref))
    };
    let step_q = (qs[1.min(qs.len() - 1)].ln() - qs[0].ln()).abs() * 0.5;
    let step_c = (cs[1.min(cs.len() - 1)].ln() - cs[0].ln()).abs() * 0.5;
    let ([lnq, lnc], _, _) = compass_max2(
        objective,
        [q0.ln(), c0.ln()],
        [step_q.max(1e-3), step_c.max(1e-3)],
        cfg.qc_tol,
        2000,
    );
    let (q_star, c_star) = (lnq.exp(), lnc.exp());
    let root = solve_pd_given_qc(problem, q_star, c_star, cfg)?;

    if cfg.check_hypotheses {
        warnings.extend(hypothesis_warnings(problem, q_star, c_star));
    }
    // Sign condition of the inner uniqueness result: c₁q − g(q) < 0.
    if !(problem.cost.c1 * q_star - problem.g.value(q_star) < 0.0) {
        warnings.push(format!(
            "sign condition c1·q − g(q) < 0 violated at q = {q_star}"
        ));
    }

    let u0_at_q = root.rho * problem.pair.psi(q_star) + root.tau * problem.pair.phi(q_star);
    let u0_at_c = root.rho * problem.pair.psi(c_star) + root.tau * problem.pair.phi(c_star);
    let cbar2_at_q: ScalarFn = {
        let p = problem.clone();
        let q = q_star;
        Arc::new(move |xi| p.cbar2(xi, q))
    };
    let r_at_c: ScalarFn = {
        let p = problem.clone();
        let c = c_star;
        Arc::new(move |xi| p.delayed_cost(xi, c).unwrap_or(f64::NAN))
    };
    Ok(BandSolution {
        p_star: root.p,
        q_star,
        c_star,
        d_star: root.d,
        rho_star: root.rho,
        tau_star: root.tau,
        delay: problem.cost.delay,
        delay_discount: problem.delay_discount(),
        u0_at_q,
        u0_at_c,
        psi: problem.pair.psi.clone(),
        phi: problem.pair.phi.clone(),
        cbar2_at_q,
        r_at_c,
        g: problem.g.clone(),
        diagnostics: BandDiagnostics {
            residual_p: root.residuals[0],
            residual_d: root.residuals[1],
            trace,
            window_warning,
            warnings,
        },
    })
}
