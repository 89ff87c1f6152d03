//! Hiring/firing model with a firing delay.
//!
//! Demand Z is geometric Brownian, labor L decays at the quit rate δ, and the
//! ratio ξ = L/Z is a one-dimensional diffusion under the demand-change of
//! measure: dξ = −(b+δ)ξ dt + σξ dB, discounted at the net rate r − b.  All
//! pieces are closed form: ψ = ξ^{β₁}, φ = ξ^{β₂} with β₁ > 1 > 0 > β₂ roots
//! of ½σ²β² − (½σ² + b + δ)β + b − r = 0, g(ξ) = k₁ξ^μ + k₂ξ, and the
//! delayed firing cost r(ξ, c) is a lognormal expectation expressed through
//! N(d₁), N(d₂) and a drift correction ε.

use crate::band::{BandCostStructure, BandProblem, BandSolution};
use crate::diffusion::{
    scalar2_fn, scalar_fn, ClosedForm, DiffusionModel, DiscountedReward, Endpoint, TransitionLaw,
};
use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_pdf};

pub const DEFAULT_WINDOW: (f64, f64) = (1e-4, 200.0);

/// Parameters of the labor problem.
#[derive(Debug, Clone, Copy)]
pub struct LaborParams {
    /// Demand growth rate b.
    pub demand_drift: f64,
    /// Subjective discount rate r > b.
    pub discount_rate: f64,
    /// Monopoly exponent μ ∈ (0, 1).
    pub monopoly_exponent: f64,
    /// Demand volatility σ > 0 (constant; the closed forms require it).
    pub sigma: f64,
    /// Voluntary quit rate δ > 0.
    pub quit_rate: f64,
    /// Productivity A > 0.
    pub productivity: f64,
    /// Wage w > 0.
    pub wage: f64,
    /// Firing implementation delay Δ ≥ 0.
    pub delay: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl LaborParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount_rate > self.demand_drift) {
            return Err(Error::Config(format!(
                "no-action regime: need discount rate r > demand drift b \
                 (got r = {}, b = {}); with r ≤ b waiting forever is optimal",
                self.discount_rate, self.demand_drift
            )));
        }
        if !(self.monopoly_exponent > 0.0 && self.monopoly_exponent < 1.0) {
            return Err(Error::Config("monopoly exponent μ must lie in (0, 1)".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Config("volatility σ must be positive (constant σ only; \
                 time-varying volatility has no closed forms here)".into()));
        }
        if !(self.quit_rate > 0.0) {
            return Err(Error::Config("quit rate δ must be positive".into()));
        }
        if !(self.productivity > 0.0 && self.wage > 0.0) {
            return Err(Error::Config("productivity A and wage w must be positive".into()));
        }
        if !(self.delay >= 0.0) {
            return Err(Error::Config("delay Δ must be nonnegative".into()));
        }
        if !(self.k1_denominator() > 0.0) {
            return Err(Error::Config(format!(
                "running-reward transform k₁ has nonpositive denominator {}",
                self.k1_denominator()
            )));
        }
        Ok(())
    }

    fn k1_denominator(&self) -> f64 {
        let mu = self.monopoly_exponent;
        self.discount_rate - self.demand_drift
            + (self.demand_drift + self.quit_rate) * mu
            + 0.5 * self.sigma * self.sigma * mu * (1.0 - mu)
    }

    /// k₁ = A^μ / (r − b + (b+δ)μ + ½σ²μ(1−μ)).
    pub fn k1(&self) -> f64 {
        self.productivity.powf(self.monopoly_exponent) / self.k1_denominator()
    }

    /// k₂ = −w/(r + δ).
    pub fn k2(&self) -> f64 {
        -self.wage / (self.discount_rate + self.quit_rate)
    }

    /// Roots β₁ > 1 > 0 > β₂ of ½σ²β² − (½σ² + b + δ)β + b − r = 0.
    pub fn betas(&self) -> (f64, f64) {
        let half_s2 = 0.5 * self.sigma * self.sigma;
        let lin = half_s2 + self.demand_drift + self.quit_rate;
        let disc = (lin * lin - 4.0 * half_s2 * (self.demand_drift - self.discount_rate)).sqrt();
        let beta1 = (lin + disc) / (2.0 * half_s2);
        let beta2 = (lin - disc) / (2.0 * half_s2);
        (beta1, beta2)
    }

    /// g(ξ) = k₁ξ^μ + k₂ξ.
    pub fn g(&self, xi: f64) -> f64 {
        self.k1() * xi.powf(self.monopoly_exponent) + self.k2() * xi
    }

    pub fn g_prime(&self, xi: f64) -> f64 {
        self.k1() * self.monopoly_exponent * xi.powf(self.monopoly_exponent - 1.0) + self.k2()
    }

    /// Running reward f(ξ) = (Aξ)^μ − wξ.
    pub fn running_reward(&self, xi: f64) -> f64 {
        (self.productivity * xi).powf(self.monopoly_exponent) - self.wage * xi
    }

    fn decay(&self) -> f64 {
        self.demand_drift + self.quit_rate
    }

    fn d1_d2(&self, xi: f64, c: f64) -> (f64, f64) {
        let sd = self.sigma * self.delay.sqrt();
        let log_ratio = (xi / c).ln() / sd;
        let shift = self.delay.sqrt() / self.sigma;
        (
            log_ratio + (0.5 * self.sigma * self.sigma - self.decay()) * shift,
            log_ratio - (0.5 * self.sigma * self.sigma + self.decay()) * shift,
        )
    }

    /// ε = −(b + δ + ½σ²(1−μ))·μ·Δ, the drift correction of E[ξ_Δ^μ].
    pub fn epsilon(&self) -> f64 {
        let mu = self.monopoly_exponent;
        -(self.decay() + 0.5 * self.sigma * self.sigma * (1.0 - mu)) * mu * self.delay
    }

    // Lognormal building blocks of the delayed-cost derivation, exposed for
    // the Monte-Carlo audit: indicator masses, power moments and restricted
    // means of ξ_Δ.

    /// P(ξ_Δ > c) = N(d₂).
    pub fn indicator_above(&self, xi: f64, c: f64) -> f64 {
        norm_cdf(self.d1_d2(xi, c).1)
    }

    /// P(ξ_Δ < c) = N(−d₂).
    pub fn indicator_below(&self, xi: f64, c: f64) -> f64 {
        norm_cdf(-self.d1_d2(xi, c).1)
    }

    /// C(θ) = E[ξ_Δ^θ] = ξ^θ exp(−(b + δ + ½σ²(1−θ))θΔ).
    pub fn power_moment(&self, xi: f64, theta: f64) -> f64 {
        xi.powf(theta)
            * (-(self.decay() + 0.5 * self.sigma * self.sigma * (1.0 - theta)) * theta * self.delay)
                .exp()
    }

    /// D = E[ξ_Δ; ξ_Δ > c] = ξ e^{−(b+δ)Δ} N(d₁).
    pub fn restricted_mean_above(&self, xi: f64, c: f64) -> f64 {
        xi * (-self.decay() * self.delay).exp() * norm_cdf(self.d1_d2(xi, c).0)
    }

    /// E = E[ξ_Δ; ξ_Δ < c] = ξ e^{−(b+δ)Δ} N(−d₁).
    pub fn restricted_mean_below(&self, xi: f64, c: f64) -> f64 {
        xi * (-self.decay() * self.delay).exp() * norm_cdf(-self.d1_d2(xi, c).0)
    }

    /// C̄₁(ξ, c) with the g-adjustment, used by the Δ → 0 branch.
    fn cbar1(&self, xi: f64, c: f64) -> f64 {
        let c1 = if xi > c {
            -(self.c3 * (xi - c) + self.c4 * xi)
        } else if xi < c {
            -self.c1 * (c - xi) - self.c2 * xi
        } else {
            0.0
        };
        c1 - self.g(xi) + self.g(c)
    }

    /// Closed-form delayed firing cost r(ξ, c) = E^ξ[e^{(b−r)Δ} C̄₁(ξ_Δ, c)].
    pub fn delayed_cost(&self, xi: f64, c: f64) -> f64 {
        if self.delay == 0.0 {
            return self.cbar1(xi, c);
        }
        let ebr = (-(self.discount_rate - self.demand_drift) * self.delay).exp();
        let ebd = (-self.decay() * self.delay).exp();
        let (d1, d2) = self.d1_d2(xi, c);
        let (k1, k2) = (self.k1(), self.k2());
        ebr * (-(self.c3 + self.c4) * ebd * xi * norm_cdf(d1)
            + (self.c1 - self.c2) * ebd * xi * norm_cdf(-d1)
            + self.c3 * c * norm_cdf(d2)
            - self.c1 * c * norm_cdf(-d2)
            - k1 * self.epsilon().exp() * xi.powf(self.monopoly_exponent)
            - k2 * ebd * xi
            + k1 * c.powf(self.monopoly_exponent)
            + k2 * c)
    }

    /// ∂r/∂ξ of the closed form.
    pub fn delayed_cost_dx(&self, xi: f64, c: f64) -> f64 {
        if self.delay == 0.0 {
            let branch = if xi > c {
                -(self.c3 + self.c4)
            } else {
                self.c1 - self.c2
            };
            return branch - self.g_prime(xi);
        }
        let ebr = (-(self.discount_rate - self.demand_drift) * self.delay).exp();
        let ebd = (-self.decay() * self.delay).exp();
        let sd = self.sigma * self.delay.sqrt();
        let (d1, d2) = self.d1_d2(xi, c);
        let (k1, k2) = (self.k1(), self.k2());
        let mu = self.monopoly_exponent;
        ebr * (-(self.c3 + self.c4) * ebd * (norm_cdf(d1) + norm_pdf(d1) / sd)
            + (self.c1 - self.c2) * ebd * (norm_cdf(-d1) - norm_pdf(d1) / sd)
            + (self.c3 + self.c1) * c * norm_pdf(d2) / (xi * sd)
            - k1 * self.epsilon().exp() * mu * xi.powf(mu - 1.0)
            - k2 * ebd)
    }

    /// Assemble the reduced one-dimensional problem for the band solver.
    pub fn build(&self) -> Result<BandProblem> {
        self.validate()?;
        let (beta1, beta2) = self.betas();
        let span = beta1 - beta2;
        let decay = self.decay();
        let sigma = self.sigma;
        let model = DiffusionModel::new(
            scalar_fn(move |xi| -decay * xi),
            scalar_fn(move |xi| sigma * xi),
            (Endpoint::Finite(0.0), Endpoint::PosInfinity),
            self.discount_rate - self.demand_drift,
        )?
        .with_window(DEFAULT_WINDOW.0, DEFAULT_WINDOW.1)?
        .with_closed_form(ClosedForm {
            psi: scalar_fn(move |xi: f64| xi.powf(beta1)),
            psi_prime: scalar_fn(move |xi: f64| beta1 * xi.powf(beta1 - 1.0)),
            phi: scalar_fn(move |xi: f64| xi.powf(beta2)),
            phi_prime: scalar_fn(move |xi: f64| beta2 * xi.powf(beta2 - 1.0)),
            f_inverse: Some(scalar_fn(move |y: f64| y.powf(1.0 / span))),
            f_image: (0.0, f64::INFINITY),
        })
        .with_transition(TransitionLaw::LogBrownian {
            log_drift: -decay - 0.5 * sigma * sigma,
            log_vol: sigma,
        });

        let g = DiscountedReward::analytic(
            scalar_fn({
                let p = *self;
                move |xi| p.g(xi)
            }),
            Some(scalar_fn({
                let p = *self;
                move |xi| p.g_prime(xi)
            })),
        );

        let cost = BandCostStructure {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            c4: self.c4,
            delay: self.delay,
            delayed_cost: Some(scalar2_fn({
                let p = *self;
                move |xi, c| p.delayed_cost(xi, c)
            })),
            delayed_cost_dx: Some(scalar2_fn({
                let p = *self;
                move |xi, c| p.delayed_cost_dx(xi, c)
            })),
            cost_condition_bound: Some(self.k2().abs()),
        };
        let running_reward = scalar_fn({
            let p = *self;
            move |xi| p.running_reward(xi)
        });
        BandProblem::new(model, g, running_reward, cost)
    }
}

/// Lift the reduced value back to demand/labor coordinates:
/// v(z, l) = z·Y(l/z) with Y(ξ) = u(ξ) + g(ξ).
///
/// The argument of Y is labor per unit demand, consistent with the reduced
/// state ξ = L/Z and its dynamics.  Requires z > 0 and l > 0.
pub fn lift_value(solution: &BandSolution, z: f64, l: f64) -> f64 {
    debug_assert!(z > 0.0 && l > 0.0, "lift_value needs z > 0, l > 0");
    z * solution.value(l / z)
}
