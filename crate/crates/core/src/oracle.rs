//! Independent cross-check for the threshold solver.
//!
//! For a fixed target `a`, the trigger can be recovered without smooth fit:
//! the optimal-stopping value V_a^γ with terminal bonus γ is the smallest
//! nonnegative concave majorant (in transformed coordinates) of
//! R^γ(y) = R(y; a) + γ·e^{−αΔ}/φ(F⁻¹(y)) through the anchor (0, l_c), and
//! the unique fixed point γ* of γ ↦ V_a^γ(a) reproduces the solved trigger as
//! the tangency point of the majorant.  The map is nonexpansive with factor
//! e^{−αΔ}·ψ(a)/ψ(b^γ) < 1, so plain iteration converges.

use crate::error::{Error, Result};
use crate::numerics::{golden_max, hull_eval, linspace, upper_concave_hull};
use crate::threshold::ThresholdProblem;

#[derive(Debug, Clone)]
pub struct GammaOracleConfig {
    /// Transformed-grid points used for the majorant construction.
    pub grid_points: usize,
    pub max_iters: usize,
    /// Relative fixed-point tolerance.
    pub tol: f64,
    /// Grid window override (defaults to the problem's oracle window, then
    /// the model window).
    pub window: Option<(f64, f64)>,
}

impl Default for GammaOracleConfig {
    fn default() -> Self {
        Self {
            grid_points: 4000,
            max_iters: 10_000,
            tol: 1e-9,
            window: None,
        }
    }
}

/// One evaluation of the parametrized stopping value V_a^γ(a).
#[derive(Debug, Clone)]
pub struct StoppingValue {
    pub value: f64,
    /// Tangency point of the majorant (trigger read-out).
    pub b_gamma: f64,
    /// Slope of the anchored linear piece of the majorant.
    pub slope: f64,
    /// The hull piece covering F(a) starts at the anchor (0, l_c); when false
    /// the transformed cost pokes above the anchored line left of `a` and the
    /// read-out falls back to the raw hull.
    pub anchored: bool,
}

/// Result of the γ fixed-point iteration.
#[derive(Debug, Clone)]
pub struct GammaOracle {
    pub gamma_star: f64,
    pub b_gamma: f64,
    /// Slope of the majorant's linear piece at γ*.
    pub majorant_slope: f64,
    pub iterations: usize,
    pub anchored: bool,
    pub warnings: Vec<String>,
    /// Final majorant sampled at the grid (y, Ŵ(y)), anchor included.
    majorant: Vec<(f64, f64)>,
}

impl GammaOracle {
    /// Piecewise-linear evaluation of the final majorant.
    pub fn majorant(&self, y: f64) -> f64 {
        let idx: Vec<usize> = (0..self.majorant.len()).collect();
        hull_eval(&self.majorant, &idx, y)
    }

    /// Sampled majorant vertices (y, Ŵ(y)).
    pub fn majorant_vertices(&self) -> &[(f64, f64)] {
        &self.majorant
    }
}

fn oracle_grid(problem: &ThresholdProblem, cfg: &GammaOracleConfig) -> Result<Vec<f64>> {
    let window = match cfg.window.or(problem.oracle_window) {
        Some(w) => w,
        None => problem.model.window()?,
    };
    if !(window.0 < window.1) {
        return Err(Error::Config(format!(
            "invalid oracle window [{}, {}]",
            window.0, window.1
        )));
    }
    Ok(linspace(window.0, window.1, cfg.grid_points))
}

/// Evaluate V_a^γ(a) by building the concave majorant of R^γ on the grid.
pub fn stopping_value(
    problem: &ThresholdProblem,
    a: f64,
    gamma: f64,
    cfg: &GammaOracleConfig,
) -> Result<StoppingValue> {
    let xs = oracle_grid(problem, cfg)?;
    let (sv, _) = stopping_value_on(problem, a, gamma, &xs)?;
    Ok(sv)
}

fn stopping_value_on(
    problem: &ThresholdProblem,
    a: f64,
    gamma: f64,
    xs: &[f64],
) -> Result<(StoppingValue, Vec<(f64, f64)>)> {
    let lc = problem.cost.boundary_limit_lc;
    let e = problem.delay_discount();
    let bonus = gamma * e;
    let mut points = Vec::with_capacity(xs.len() + 1);
    points.push((0.0, lc));
    for &x in xs {
        let y = problem.transform.forward(x);
        let r = problem.delayed_cost(x, a)?;
        points.push((y, (r + bonus) / problem.pair.phi(x)));
    }
    let hull = upper_concave_hull(&points);

    let ya = problem.transform.forward(a);
    // Hull segment containing F(a).
    let pos = hull.partition_point(|&i| points[i].0 <= ya).max(1);
    let left_vertex = hull[pos - 1];
    let right_vertex = hull[(pos).min(hull.len() - 1)];
    let anchored = left_vertex == 0;

    let (value, b_gamma, slope) = if anchored && right_vertex >= 1 {
        // Polish the tangency: the anchored slope is max over x of
        // (R^γ(F(x)) − l_c)/F(x); the hull gives the bracketing grid cell.
        let j = right_vertex - 1; // grid index of the tangency vertex
        let lo = xs[j.saturating_sub(1)];
        let hi = xs[(j + 1).min(xs.len() - 1)];
        let slope_at = |x: f64| {
            let y = problem.transform.forward(x);
            match problem.delayed_cost(x, a) {
                Ok(r) => ((r + bonus) / problem.pair.phi(x) - lc) / y,
                Err(_) => f64::NEG_INFINITY,
            }
        };
        let (b_gamma, slope) = golden_max(slope_at, lo, hi, 1e-11 * (1.0 + xs[j].abs()));
        let value = problem.pair.phi(a) * (slope * ya + lc);
        (value, b_gamma, slope)
    } else {
        // Left interference: fall back to the raw hull value.
        let w = hull_eval(&points, &hull, ya);
        let (x0, y0) = points[left_vertex];
        let (x1, y1) = points[right_vertex];
        let slope = (y1 - y0) / (x1 - x0);
        let b_gamma = problem.transform.inverse(points[right_vertex].0)?;
        (problem.pair.phi(a) * w, b_gamma, slope)
    };

    let majorant: Vec<(f64, f64)> = hull.iter().map(|&i| points[i]).collect();
    Ok((
        StoppingValue {
            value,
            b_gamma,
            slope,
            anchored,
        },
        majorant,
    ))
}

/// Iterate γ ↦ V_a^γ(a) to its fixed point.
pub fn gamma_fixed_point(
    problem: &ThresholdProblem,
    a: f64,
    cfg: &GammaOracleConfig,
) -> Result<GammaOracle> {
    let xs = oracle_grid(problem, cfg)?;

    // Positivity precondition: sup_x E[K̄(X_Δ, a)] > 0, i.e. r must be
    // positive somewhere on the grid.
    let mut positive = false;
    for &x in xs.iter().step_by((xs.len() / 128).max(1)) {
        if problem.delayed_cost(x, a)? > 0.0 {
            positive = true;
            break;
        }
    }
    if !positive {
        return Err(Error::OracleFailure(
            "positivity precondition failed: delayed cost is nonpositive on the grid".into(),
        ));
    }

    let mut warnings = Vec::new();
    let (sv0, _) = stopping_value_on(problem, a, 0.0, &xs)?;
    let mut gamma = sv0.value.max(0.0);
    let mut last = f64::INFINITY;
    let mut prev_step = f64::INFINITY;
    for iter in 0..cfg.max_iters {
        let (sv, majorant) = stopping_value_on(problem, a, gamma, &xs)?;
        let step = (sv.value - gamma).abs();
        if step > prev_step * (1.0 + 1e-9) && iter > 2 {
            warnings.push(format!(
                "fixed-point increments grew at iteration {iter}: {:.3e} after {:.3e}",
                step, prev_step
            ));
        }
        prev_step = step;
        last = gamma;
        gamma = sv.value;
        if (gamma - last).abs() < cfg.tol * (1.0 + last.abs()) {
            if !sv.anchored {
                warnings.push(
                    "transformed cost exceeds the anchored line left of the target; \
                     majorant read off the raw hull"
                        .into(),
                );
            }
            return Ok(GammaOracle {
                gamma_star: gamma,
                b_gamma: sv.b_gamma,
                majorant_slope: sv.slope,
                iterations: iter + 1,
                anchored: sv.anchored,
                warnings,
                majorant,
            });
        }
    }
    Err(Error::OracleFailure(format!(
        "no fixed point after {} iterations (last increment {:.3e})",
        cfg.max_iters,
        (gamma - last).abs()
    )))
}
