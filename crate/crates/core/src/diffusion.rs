//! One-dimensional diffusions with natural boundaries: fundamental solutions
//! ψ (increasing) and φ (decreasing) of (𝒜 − α)v = 0, the ratio transform
//! F = ψ/φ, two-sided hitting-time Laplace transforms and the expected
//! discounted running reward g.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, linspace};
use crate::special::norm_pdf;

/// Shared scalar callable.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Shared two-argument callable (costs `K(x, y)`, delayed costs `r(x, a)`).
pub type Scalar2Fn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Wrap a plain closure as a [`ScalarFn`].
pub fn scalar_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

/// Wrap a plain closure as a [`Scalar2Fn`].
pub fn scalar2_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Scalar2Fn {
    Arc::new(f)
}

/// Interval endpoint; infinities are kept symbolic so the state interval can
/// be genuinely unbounded while numerics run on a finite window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    Finite(f64),
    NegInfinity,
    PosInfinity,
}

impl Endpoint {
    /// Numeric value with infinities mapped to ±∞.
    pub fn as_f64(self) -> f64 {
        match self {
            Endpoint::Finite(v) => v,
            Endpoint::NegInfinity => f64::NEG_INFINITY,
            Endpoint::PosInfinity => f64::INFINITY,
        }
    }
}

/// Exact one-step transition law, available for models whose uncontrolled
/// dynamics can be sampled without discretization error.
#[derive(Debug, Clone, Copy)]
pub enum TransitionLaw {
    /// X_{t+dt} = X_t + drift·dt + vol·√dt·Z.
    BrownianWithDrift { drift: f64, vol: f64 },
    /// log X_{t+dt} = log X_t + log_drift·dt + log_vol·√dt·Z.
    LogBrownian { log_drift: f64, log_vol: f64 },
}

impl TransitionLaw {
    /// Advance the state by `dt` using the standard normal draw `z`.
    pub fn step(&self, x: f64, dt: f64, z: f64) -> f64 {
        match *self {
            TransitionLaw::BrownianWithDrift { drift, vol } => {
                x + drift * dt + vol * dt.sqrt() * z
            }
            TransitionLaw::LogBrownian { log_drift, log_vol } => {
                x * (log_drift * dt + log_vol * dt.sqrt() * z).exp()
            }
        }
    }

    /// E[f(X_t) | X_0 = x] by quadrature over the driving Gaussian.
    pub fn expect(&self, x: f64, t: f64, f: &(impl Fn(f64) -> f64 + ?Sized), tol: f64) -> f64 {
        if t == 0.0 {
            return f(x);
        }
        adaptive_simpson(&|z: f64| f(self.step(x, t, z)) * norm_pdf(z), -10.0, 10.0, tol)
    }
}

/// Drift/volatility/interval/discount bundle.  `discount` is the killing rate
/// of the resolvent equation; problems that discount at a net rate (for
/// example `r − b`) store that net rate here.
#[derive(Clone)]
pub struct DiffusionModel {
    drift: ScalarFn,
    volatility: ScalarFn,
    interval: (Endpoint, Endpoint),
    discount: f64,
    window: Option<(f64, f64)>,
    closed_form: Option<ClosedForm>,
    transition: Option<TransitionLaw>,
}

/// Closed-form fundamental solutions supplied by a model.
#[derive(Clone)]
pub struct ClosedForm {
    pub psi: ScalarFn,
    pub psi_prime: ScalarFn,
    pub phi: ScalarFn,
    pub phi_prime: ScalarFn,
    /// Closed-form inverse of F = ψ/φ, if available.
    pub f_inverse: Option<ScalarFn>,
    /// Image of F on the state interval (limits at the natural boundaries).
    pub f_image: (f64, f64),
}

impl DiffusionModel {
    pub fn new(
        drift: ScalarFn,
        volatility: ScalarFn,
        interval: (Endpoint, Endpoint),
        discount: f64,
    ) -> Result<Self> {
        if !(discount > 0.0) {
            return Err(Error::Config(format!(
                "discount rate must be positive, got {discount}"
            )));
        }
        Ok(Self {
            drift,
            volatility,
            interval,
            discount,
            window: None,
            closed_form: None,
            transition: None,
        })
    }

    /// Set the computational window; all grid-based numerics run on it.
    pub fn with_window(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("invalid window [{lo}, {hi}]")));
        }
        let (c, d) = (self.interval.0.as_f64(), self.interval.1.as_f64());
        if lo < c || hi > d {
            return Err(Error::Config(format!(
                "window [{lo}, {hi}] exceeds the state interval ({c}, {d})"
            )));
        }
        // Volatility must be positive wherever we will sample.
        for x in linspace(lo, hi, 64) {
            if !((self.volatility)(x) > 0.0) {
                return Err(Error::Config(format!("volatility not positive at x = {x}")));
            }
        }
        self.window = Some((lo, hi));
        Ok(self)
    }

    pub fn with_closed_form(mut self, cf: ClosedForm) -> Self {
        self.closed_form = Some(cf);
        self
    }

    pub fn with_transition(mut self, law: TransitionLaw) -> Self {
        self.transition = Some(law);
        self
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    pub fn volatility(&self, x: f64) -> f64 {
        (self.volatility)(x)
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn interval(&self) -> (Endpoint, Endpoint) {
        self.interval
    }

    pub fn transition(&self) -> Option<TransitionLaw> {
        self.transition
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed_form.as_ref()
    }

    pub fn window(&self) -> Result<(f64, f64)> {
        self.window
            .ok_or_else(|| Error::Config("no computational window configured".into()))
    }

    /// (𝒜 − α)h at `x` by central differences with step `h_rel·(1 + |x|)`.
    pub fn generator_residual(&self, h: &(impl Fn(f64) -> f64 + ?Sized), x: f64, h_rel: f64) -> f64 {
        let step = h_rel * (1.0 + x.abs());
        let (fm, f0, fp) = (h(x - step), h(x), h(x + step));
        let d1 = (fp - fm) / (2.0 * step);
        let d2 = (fp - 2.0 * f0 + fm) / (step * step);
        0.5 * self.volatility(x).powi(2) * d2 + self.drift(x) * d1 - self.discount * f0
    }
}

/// ψ (increasing, ψ(c+) = 0) and φ (decreasing, φ(d−) = 0) with first
/// derivatives.  `approximate` marks numerically integrated pairs.
#[derive(Clone)]
pub struct FundamentalPair {
    pub psi: ScalarFn,
    pub psi_prime: ScalarFn,
    pub phi: ScalarFn,
    pub phi_prime: ScalarFn,
    pub approximate: bool,
}

impl FundamentalPair {
    pub fn psi(&self, x: f64) -> f64 {
        (self.psi)(x)
    }
    pub fn psi_prime(&self, x: f64) -> f64 {
        (self.psi_prime)(x)
    }
    pub fn phi(&self, x: f64) -> f64 {
        (self.phi)(x)
    }
    pub fn phi_prime(&self, x: f64) -> f64 {
        (self.phi_prime)(x)
    }
}

/// Fundamental solutions of (𝒜 − α)v = 0 for `model`.
///
/// Uses the model's closed forms when present; otherwise integrates the ODE
/// on the computational window (shooting from each edge) and returns an
/// `approximate` pair normalized to 1 at the opposite edge.
pub fn fundamental_pair(model: &DiffusionModel) -> Result<FundamentalPair> {
    if let Some(cf) = model.closed_form() {
        return Ok(FundamentalPair {
            psi: cf.psi.clone(),
            psi_prime: cf.psi_prime.clone(),
            phi: cf.phi.clone(),
            phi_prime: cf.phi_prime.clone(),
            approximate: false,
        });
    }
    let (lo, hi) = model.window().map_err(|_| {
        Error::Config("numeric fundamental solutions need a finite computational window".into())
    })?;
    let n = 8000;
    let psi_tab = integrate_resolvent(model, lo, hi, n);
    let phi_tab = integrate_resolvent(model, hi, lo, n);
    Ok(FundamentalPair {
        psi: scalar_fn({
            let t = psi_tab.clone();
            move |x| t.value(x)
        }),
        psi_prime: scalar_fn({
            let t = psi_tab;
            move |x| t.derivative(x)
        }),
        phi: scalar_fn({
            let t = phi_tab.clone();
            move |x| t.value(x)
        }),
        phi_prime: scalar_fn({
            let t = phi_tab;
            move |x| t.derivative(x)
        }),
        approximate: true,
    })
}

/// Tabulated solution of v″ = 2(αv − μ v′)/σ² with cubic Hermite evaluation.
#[derive(Clone)]
struct OdeTable {
    xs: Arc<Vec<f64>>,
    vs: Arc<Vec<f64>>,
    dvs: Arc<Vec<f64>>,
}

impl OdeTable {
    fn locate(&self, x: f64) -> usize {
        let n = self.xs.len();
        let i = self.xs.partition_point(|&t| t <= x);
        i.clamp(1, n - 1) - 1
    }

    fn value(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.vs[i]
            + (t3 - 2.0 * t2 + t) * h * self.dvs[i]
            + (-2.0 * t3 + 3.0 * t2) * self.vs[i + 1]
            + (t3 - t2) * h * self.dvs[i + 1]
    }

    fn derivative(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) * self.vs[i] / h
            + (3.0 * t2 - 4.0 * t + 1.0) * self.dvs[i]
            + (-6.0 * t2 + 6.0 * t) * self.vs[i + 1] / h
            + (3.0 * t2 - 2.0 * t) * self.dvs[i + 1]
    }
}

/// RK4 shooting from `from` to `to` with v = 0, v′ = ±1 at the start, then
/// rescaled so the solution is 1 at `to`.  Integrating from the lower edge
/// yields the increasing solution, from the upper edge the decreasing one.
fn integrate_resolvent(model: &DiffusionModel, from: f64, to: f64, n: usize) -> OdeTable {
    let h = (to - from) / n as f64;
    let rhs = |x: f64, v: f64, w: f64| {
        let sig2 = model.volatility(x).powi(2);
        2.0 * (model.discount() * v - model.drift(x) * w) / sig2
    };
    let mut xs = Vec::with_capacity(n + 1);
    let mut vs = Vec::with_capacity(n + 1);
    let mut dvs = Vec::with_capacity(n + 1);
    let (mut x, mut v, mut w) = (from, 0.0, h.signum());
    xs.push(x);
    vs.push(v);
    dvs.push(w);
    for _ in 0..n {
        let (k1v, k1w) = (w, rhs(x, v, w));
        let (k2v, k2w) = (w + 0.5 * h * k1w, rhs(x + 0.5 * h, v + 0.5 * h * k1v, w + 0.5 * h * k1w));
        let (k3v, k3w) = (w + 0.5 * h * k2w, rhs(x + 0.5 * h, v + 0.5 * h * k2v, w + 0.5 * h * k2w));
        let (k4v, k4w) = (w + h * k3w, rhs(x + h, v + h * k3v, w + h * k3w));
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        x += h;
        xs.push(x);
        vs.push(v);
        dvs.push(w);
    }
    let scale = 1.0 / v;
    for (vi, di) in vs.iter_mut().zip(dvs.iter_mut()) {
        *vi *= scale;
        *di *= scale;
    }
    if h < 0.0 {
        xs.reverse();
        vs.reverse();
        dvs.reverse();
    }
    OdeTable {
        xs: Arc::new(xs),
        vs: Arc::new(vs),
        dvs: Arc::new(dvs),
    }
}

/// The increasing ratio F = ψ/φ with derivative and inverse.
#[derive(Clone)]
pub struct TransformF {
    pair: FundamentalPair,
    inverse_closed: Option<ScalarFn>,
    image: (f64, f64),
    window: (f64, f64),
}

impl TransformF {
    pub fn new(model: &DiffusionModel, pair: &FundamentalPair) -> Result<Self> {
        let window = model.window()?;
        let (inverse_closed, image) = match model.closed_form() {
            Some(cf) => (cf.f_inverse.clone(), cf.f_image),
            None => {
                let fw = |x: f64| pair.psi(x) / pair.phi(x);
                (None, (fw(window.0), fw(window.1)))
            }
        };
        Ok(Self {
            pair: pair.clone(),
            inverse_closed,
            image,
            window,
        })
    }

    pub fn forward(&self, x: f64) -> f64 {
        self.pair.psi(x) / self.pair.phi(x)
    }

    /// F′ = (ψ′φ − ψφ′)/φ².
    pub fn derivative(&self, x: f64) -> f64 {
        let phi = self.pair.phi(x);
        (self.pair.psi_prime(x) * phi - self.pair.psi(x) * self.pair.phi_prime(x)) / (phi * phi)
    }

    pub fn image(&self) -> (f64, f64) {
        self.image
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y > self.image.0 && y < self.image.1) && y != self.image.0 {
            return Err(Error::Domain(format!(
                "y = {y} outside the image ({}, {}) of F",
                self.image.0, self.image.1
            )));
        }
        if let Some(inv) = &self.inverse_closed {
            return Ok(inv(y));
        }
        // F is strictly increasing: bisect on the window.
        let (mut lo, mut hi) = self.window;
        let (flo, fhi) = (self.forward(lo), self.forward(hi));
        if y <= flo || y >= fhi {
            return Err(Error::Domain(format!(
                "y = {y} outside the numeric image [{flo}, {fhi}] on the window"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.forward(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (1.0 + lo.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Two-sided hitting-time Laplace transforms for `l ≤ x ≤ r̂`:
/// `(E[e^{−ατ_r̂}; τ_r̂ < τ_l], E[e^{−ατ_l}; τ_l < τ_r̂])`.
pub fn hitting_laplace(
    pair: &FundamentalPair,
    x: f64,
    l: f64,
    r: f64,
) -> Result<(f64, f64)> {
    if !(l < r) {
        return Err(Error::Domain(format!("need l < r̂, got l = {l}, r̂ = {r}")));
    }
    if x < l || x > r {
        return Err(Error::Domain(format!("x = {x} outside [{l}, {r}]")));
    }
    let (pl, pr, px) = (pair.psi(l), pair.psi(r), pair.psi(x));
    let (ql, qr, qx) = (pair.phi(l), pair.phi(r), pair.phi(x));
    let den = pl * qr - pr * ql;
    let up = (pl * qx - px * ql) / den;
    let down = (px * qr - pr * qx) / den;
    Ok((up, down))
}

/// Expected discounted running reward g(x) = Eˣ[∫₀^∞ e^{−αs} f(X⁰_s) ds],
/// with optional analytic derivative.
#[derive(Clone)]
pub struct DiscountedReward {
    eval: ScalarFn,
    derivative: Option<ScalarFn>,
    /// False when g is quadrature-backed rather than closed form.
    pub exact: bool,
}

impl DiscountedReward {
    pub fn analytic(eval: ScalarFn, derivative: Option<ScalarFn>) -> Self {
        Self {
            eval,
            derivative,
            exact: true,
        }
    }

    pub fn zero() -> Self {
        Self::analytic(scalar_fn(|_| 0.0), Some(scalar_fn(|_| 0.0)))
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// g′ if analytic, else a central difference.
    pub fn derivative(&self, x: f64) -> f64 {
        match &self.derivative {
            Some(d) => d(x),
            None => crate::numerics::central_diff(|t| self.value(t), x, 1e-6),
        }
    }
}

/// Quadrature fallback for g.
///
/// The time integral is truncated at a horizon `T` that doubles until two
/// successive truncations agree to 1e−8 relative at probe states; the check
/// failing after the doubling cap is reported as an integrability error.
pub fn expected_reward_g(model: &DiffusionModel, f: ScalarFn) -> Result<DiscountedReward> {
    let law = model.transition().ok_or_else(|| {
        Error::Config("numeric g needs an exact transition law on the model".into())
    })?;
    let alpha = model.discount();
    let (lo, hi) = model.window()?;
    let probes = [lo + 0.25 * (hi - lo), lo + 0.5 * (hi - lo), lo + 0.75 * (hi - lo)];

    let g_at = move |x: f64, horizon: f64, f: &ScalarFn| -> f64 {
        let integrand = |s: f64| {
            if s <= 0.0 {
                return f(x);
            }
            (-alpha * s).exp() * law.expect(x, s, f.as_ref(), 1e-11)
        };
        adaptive_simpson(&integrand, 0.0, horizon, 1e-9)
    };

    // Calibrate the horizon on the probe states.
    let mut horizon = 8.0 / alpha;
    let mut converged = false;
    for _ in 0..10 {
        let worst = probes
            .iter()
            .map(|&x| {
                let a = g_at(x, horizon, &f);
                let b = g_at(x, 2.0 * horizon, &f);
                ((a - b).abs() / (1.0 + b.abs()), b)
            })
            .fold(0.0f64, |acc, (rel, _)| acc.max(rel));
        if worst < 1e-8 {
            converged = true;
            break;
        }
        horizon *= 2.0;
    }
    if !converged {
        return Err(Error::Integrability(format!(
            "discounted reward did not stabilize up to horizon {horizon:.3e}"
        )));
    }
    let horizon = 2.0 * horizon;
    Ok(DiscountedReward {
        eval: scalar_fn(move |x| g_at(x, horizon, &f)),
        derivative: None,
        exact: false,
    })
}

/// The transform W = (h/φ) ∘ F⁻¹, linear in `h`.
pub struct WMap {
    h: ScalarFn,
    phi: ScalarFn,
    transform: TransformF,
}

/// Build y ↦ (h/φ)(F⁻¹(y)).
pub fn to_w(h: ScalarFn, transform: &TransformF, phi: ScalarFn) -> WMap {
    WMap {
        h,
        phi,
        transform: transform.clone(),
    }
}

impl WMap {
    pub fn eval(&self, y: f64) -> Result<f64> {
        let x = self.transform.inverse(y)?;
        Ok((self.h)(x) / (self.phi)(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brownian_model(alpha: f64) -> DiffusionModel {
        let s2a = (2.0 * alpha).sqrt();
        DiffusionModel::new(
            scalar_fn(|_| 0.0),
            scalar_fn(|_| 1.0),
            (Endpoint::NegInfinity, Endpoint::PosInfinity),
            alpha,
        )
        .unwrap()
        .with_window(-30.0, 60.0)
        .unwrap()
        .with_closed_form(ClosedForm {
            psi: scalar_fn(move |x| (s2a * x).exp()),
            psi_prime: scalar_fn(move |x| s2a * (s2a * x).exp()),
            phi: scalar_fn(move |x| (-s2a * x).exp()),
            phi_prime: scalar_fn(move |x| -s2a * (-s2a * x).exp()),
            f_inverse: Some(scalar_fn(move |y: f64| y.ln() / (2.0 * s2a))),
            f_image: (0.0, f64::INFINITY),
        })
        .with_transition(TransitionLaw::BrownianWithDrift { drift: 0.0, vol: 1.0 })
    }

    #[test]
    fn hitting_laplace_endpoints_and_bounds() {
        let m = brownian_model(0.2);
        let pair = fundamental_pair(&m).unwrap();
        let (up, down) = hitting_laplace(&pair, 1.0, -1.0, 1.0).unwrap();
        assert_eq!((up, down), (1.0, 0.0));
        let (up, down) = hitting_laplace(&pair, -1.0, -1.0, 1.0).unwrap();
        assert_eq!((up, down), (0.0, 1.0));
        let mut prev_up = -1.0;
        for x in linspace(-1.0, 1.0, 41) {
            let (up, down) = hitting_laplace(&pair, x, -1.0, 1.0).unwrap();
            assert!((0.0..=1.0).contains(&up) && (0.0..=1.0).contains(&down));
            assert!(up >= prev_up, "upCross must be nondecreasing in x");
            prev_up = up;
        }
        assert!(hitting_laplace(&pair, 3.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn numeric_pair_matches_closed_form_ratios() {
        // Same Brownian model without closed forms: the shooting solution,
        // normalized at the far edge, must reproduce e^{±x√(2α)} ratios in
        // the interior.
        let alpha = 0.2;
        let m = DiffusionModel::new(
            scalar_fn(|_| 0.0),
            scalar_fn(|_| 1.0),
            (Endpoint::NegInfinity, Endpoint::PosInfinity),
            alpha,
        )
        .unwrap()
        .with_window(-30.0, 60.0)
        .unwrap();
        let pair = fundamental_pair(&m).unwrap();
        assert!(pair.approximate);
        let s2a = (2.0f64 * alpha).sqrt();
        for x in [-5.0, 0.0, 5.0, 12.0, 20.0] {
            let want = ((x - 10.0) * s2a).exp(); // ratio to the value at 10
            let got = pair.psi(x) / pair.psi(10.0);
            assert!(
                (got / want - 1.0).abs() < 1e-6,
                "psi ratio at {x}: {got} vs {want}"
            );
            let want_phi = (-(x - 10.0) * s2a).exp();
            let got_phi = pair.phi(x) / pair.phi(10.0);
            assert!((got_phi / want_phi - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn numeric_pair_without_window_is_config_error() {
        let m = DiffusionModel::new(
            scalar_fn(|_| 0.0),
            scalar_fn(|_| 1.0),
            (Endpoint::NegInfinity, Endpoint::PosInfinity),
            0.2,
        )
        .unwrap();
        assert!(matches!(fundamental_pair(&m), Err(Error::Config(_))));
    }

    #[test]
    fn transform_round_trip() {
        let m = brownian_model(0.2);
        let pair = fundamental_pair(&m).unwrap();
        let tf = TransformF::new(&m, &pair).unwrap();
        for x in linspace(-29.0, 59.0, 1000) {
            let y = tf.forward(x);
            let back = tf.inverse(y).unwrap();
            assert!((back - x).abs() <= 1e-10 * (1.0 + x.abs()), "x = {x}");
        }
        assert!(tf.inverse(-1.0).is_err());
    }

    #[test]
    fn w_map_identities() {
        let m = brownian_model(0.3);
        let pair = fundamental_pair(&m).unwrap();
        let tf = TransformF::new(&m, &pair).unwrap();
        let w_phi = to_w(pair.phi.clone(), &tf, pair.phi.clone());
        let w_psi = to_w(pair.psi.clone(), &tf, pair.phi.clone());
        let (a, b) = (0.7, -2.3);
        let psi = pair.psi.clone();
        let phi = pair.phi.clone();
        let w_lin = to_w(
            scalar_fn(move |x| a * psi(x) + b * phi(x)),
            &tf,
            pair.phi.clone(),
        );
        for x in [-3.0, 0.0, 2.0, 7.0] {
            let y = tf.forward(x);
            assert!((w_phi.eval(y).unwrap() - 1.0).abs() < 1e-11);
            assert!((w_psi.eval(y).unwrap() - y).abs() < 1e-11 * (1.0 + y));
            assert!((w_lin.eval(y).unwrap() - (a * y + b)).abs() < 1e-11 * (1.0 + y));
        }
    }

    #[test]
    fn numeric_g_zero_reward_and_additivity() {
        let m = brownian_model(0.5);
        let zero = expected_reward_g(&m, scalar_fn(|_| 0.0)).unwrap();
        assert_eq!(zero.value(1.0), 0.0);

        // g[f1 + f2] = g[f1] + g[f2] within quadrature tolerance.
        let g1 = expected_reward_g(&m, scalar_fn(|x| (-x * x / 8.0).exp())).unwrap();
        let g2 = expected_reward_g(&m, scalar_fn(|x| (0.3 * x).sin())).unwrap();
        let g12 = expected_reward_g(
            &m,
            scalar_fn(|x| (-x * x / 8.0).exp() + (0.3 * x).sin()),
        )
        .unwrap();
        for x in [-1.0, 0.0, 2.0] {
            let lhs = g12.value(x);
            let rhs = g1.value(x) + g2.value(x);
            assert!((lhs - rhs).abs() < 1e-6 * (1.0 + rhs.abs()), "x = {x}");
        }
        assert!(!g12.exact);
    }
}
