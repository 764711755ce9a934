//! Scalar sliding-mode math: switching functions, the boundary-layer delta
//! function and its slope Ψ, and the closed-form reach/overshoot bounds of the
//! adaptive law.
//!
//! Everything here is a pure function of its arguments.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Absolute tolerance on the stiffness `m` returned by [`overshoot_bound`].
pub const OVERSHOOT_BISECTION_TOL: f64 = 1e-10;

/// Three-valued signum: `sgn(0) = 0`.
pub fn sgn(s: f64) -> Result<i8> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("sgn of non-finite value {s}")));
    }
    Ok(if s > 0.0 {
        1
    } else if s < 0.0 {
        -1
    } else {
        0
    })
}

/// Linear saturation `sat(s / phi)`, clamped to `[-1, 1]`.
pub fn sat(s: f64, phi: f64) -> Result<f64> {
    check_phi(phi)?;
    if s.is_nan() {
        return Err(Error::Domain("sat of NaN".into()));
    }
    Ok((s / phi).clamp(-1.0, 1.0))
}

fn check_phi(phi: f64) -> Result<()> {
    if phi.is_finite() && phi > 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            "phi",
            format!("boundary-layer thickness must be > 0, got {phi}"),
        ))
    }
}

/// A validated boundary-layer thickness `phi`.
///
/// The ultimate band `eta = (√2 − 1)·phi` is always derived from `phi`, never
/// stored on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLayer {
    phi: f64,
}

impl BoundaryLayer {
    pub fn new(phi: f64) -> Result<Self> {
        check_phi(phi)?;
        Ok(Self { phi })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Zero level of Ψ: `(√2 − 1)·phi`.
    pub fn eta(&self) -> f64 {
        (SQRT_2 - 1.0) * self.phi
    }

    /// `s − 2sφ/(|s|+φ)`, evaluated as `s·(|s|−φ)/(|s|+φ)` so the zeros at
    /// `s = 0` and `|s| = φ` and the odd symmetry are exact in floating point.
    pub fn delta_surface(&self, s: f64) -> f64 {
        let a = s.abs();
        s * ((a - self.phi) / (a + self.phi))
    }

    /// `Ψ(s) = 1 − 2φ²/(|s|+φ)²`.
    ///
    /// Evaluated in the factored form `(|s|−η)(|s|+φ+√2φ)/(|s|+φ)²`, which
    /// vanishes exactly at `|s| = η` and cannot overflow. The result is clamped
    /// to `[-1, 1]` to strip rounding at the extremes.
    pub fn psi(&self, s: f64) -> f64 {
        let a = s.abs();
        if a.is_infinite() {
            return 1.0;
        }
        let d = a + self.phi;
        let v = ((a - self.eta()) / d) * ((d + SQRT_2 * self.phi) / d);
        v.clamp(-1.0, 1.0)
    }
}

/// The delta function `s_Δ = s − 2sφ/(|s|+φ)`.
pub fn delta_surface(s: f64, phi: f64) -> Result<f64> {
    Ok(BoundaryLayer::new(phi)?.delta_surface(s))
}

/// The adaptation-rate shape `Ψ(s) = 1 − 2φ²/(|s|+φ)²`, in `[-1, 1)`.
pub fn psi(s: f64, phi: f64) -> Result<f64> {
    Ok(BoundaryLayer::new(phi)?.psi(s))
}

/// `η = (√2 − 1)·phi`.
pub fn ultimate_band(phi: f64) -> Result<f64> {
    Ok(BoundaryLayer::new(phi)?.eta())
}

/// `σ = μ + 1/(kρ)`.
pub fn sigma(mu: f64, k: f64, rho: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::param(
            "k",
            format!("feedback gain must be > 0 for σ, got {k}"),
        ));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::param(
            "rho",
            format!("adaptation gain must be > 0, got {rho}"),
        ));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::param(
            "mu",
            format!("uncertainty bound must be >= 0, got {mu}"),
        ));
    }
    Ok(mu + 1.0 / (k * rho))
}

/// Finite time `T = (1/k)·ln[(V′₀ − σ/k)/(b − σ/k)]` after which
/// `|s| + μ̂/k ≤ b` holds.
pub fn reach_time_bound(v0p: f64, k: f64, rho: f64, mu: f64, b: f64) -> Result<f64> {
    let floor = sigma(mu, k, rho)? / k;
    if !(v0p > floor) {
        return Err(Error::Precondition(format!(
            "V'0 = {v0p} must exceed sigma/k = {floor}"
        )));
    }
    if !(b > floor && b <= v0p) {
        return Err(Error::Precondition(format!(
            "b = {b} must lie in (sigma/k, V'0] = ({floor}, {v0p}]"
        )));
    }
    let t = ((v0p - floor) / (b - floor)).ln() / k;
    if !t.is_finite() {
        return Err(Error::Divergence(format!(
            "reach time diverges as b = {b} approaches sigma/k = {floor}"
        )));
    }
    Ok(t)
}

/// Result of the overshoot-bound search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OvershootBound {
    /// Largest admissible stiffness `m` and the resulting bound `δ` on `|s|`.
    Feasible { m: f64, delta: f64 },
    /// No representable `m > 0` satisfies both constraints; no bound applies.
    Infeasible,
}

impl OvershootBound {
    pub fn delta(&self) -> Option<f64> {
        match *self {
            OvershootBound::Feasible { delta, .. } => Some(delta),
            OvershootBound::Infeasible => None,
        }
    }

    pub fn m(&self) -> Option<f64> {
        match *self {
            OvershootBound::Feasible { m, .. } => Some(m),
            OvershootBound::Infeasible => None,
        }
    }
}

/// True when `m` satisfies `m < √2/(ρφ)` and `μ√m ≤ Ψ(η + μ/√m)/ρ`.
pub fn stiffness_admissible(m: f64, mu: f64, rho: f64, layer: &BoundaryLayer) -> bool {
    if !(m > 0.0 && m < SQRT_2 / (rho * layer.phi())) {
        return false;
    }
    let root = m.sqrt();
    let lhs = mu * root;
    // Ψ ≤ 1, so this short-circuit never rejects a feasible m.
    if !(lhs <= 1.0 / rho) {
        return false;
    }
    lhs <= layer.psi(layer.eta() + mu / root) / rho
}

/// Overshoot bound `δ = √((2η)² + μ²/m) − η` using the largest admissible
/// `m`, found by bisection.
///
/// The admissibility margin `Ψ(η + μ/√m)/ρ − μ√m` is decreasing in `m`, so the
/// admissible set is an interval `(0, m*]` and bisection brackets its right end.
pub fn overshoot_bound(mu: f64, rho: f64, phi: f64) -> Result<OvershootBound> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::param(
            "mu",
            format!("uncertainty bound must be >= 0, got {mu}"),
        ));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::param(
            "rho",
            format!("adaptation gain must be > 0, got {rho}"),
        ));
    }
    let layer = BoundaryLayer::new(phi)?;
    let ok = |m: f64| stiffness_admissible(m, mu, rho, &layer);

    let m_cap = SQRT_2 / (rho * phi);
    let mut hi = m_cap;
    let mut lo = m_cap * 0.5;
    while !ok(lo) {
        hi = lo;
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Ok(OvershootBound::Infeasible);
        }
    }
    loop {
        let tol = OVERSHOOT_BISECTION_TOL.min(1e-12 * hi);
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta = layer.eta();
    let delta = ((2.0 * eta).powi(2) + mu * mu / lo).sqrt() - eta;
    Ok(OvershootBound::Feasible { m: lo, delta })
}

fn check_stiffness(m: f64) -> Result<f64> {
    if m > 0.0 && m.is_finite() {
        Ok(m.sqrt())
    } else {
        Err(Error::param(
            "m",
            format!("oscillator stiffness must be > 0, got {m}"),
        ))
    }
}

/// Closed-form worst-case response
/// `s(t) = (s₀+η)cos(√m t) + ((μ−μ̂₀)/√m) sin(√m t) − η`.
///
/// This is the exact trajectory of `ṡ = μ − μ̂`, `μ̂̇ = m(s + η)`; see
/// [`worst_case_gain`] for the companion gain.
pub fn worst_case_solution(
    t: f64,
    s0: f64,
    mu: f64,
    mu_hat0: f64,
    m: f64,
    eta: f64,
) -> Result<f64> {
    let w = check_stiffness(m)?;
    Ok((s0 + eta) * (w * t).cos() + (mu - mu_hat0) / w * (w * t).sin() - eta)
}

/// Gain `μ̂(t) = μ − ṡ(t)` paired with [`worst_case_solution`].
pub fn worst_case_gain(t: f64, s0: f64, mu: f64, mu_hat0: f64, m: f64, eta: f64) -> Result<f64> {
    let w = check_stiffness(m)?;
    Ok(mu + (s0 + eta) * w * (w * t).sin() - (mu - mu_hat0) * (w * t).cos())
}

/// Reach bound: ultimate level `b` and the time `T` after which it holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachBound {
    pub b: f64,
    pub time: f64,
}

/// Closed-form bounds for one parameter set of the adaptive law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremBounds {
    pub eta: f64,
    /// `σ = μ + 1/(kρ)`; undefined for `k = 0`.
    pub sigma: Option<f64>,
    /// Present only when `V′₀ > σ/k`.
    pub reach: Option<ReachBound>,
    pub overshoot: OvershootBound,
}

impl TheoremBounds {
    /// Computes every bound that applies. `b` defaults to the midpoint of
    /// `(σ/k, V′₀)`.
    pub fn compute(v0p: f64, k: f64, rho: f64, mu: f64, phi: f64, b: Option<f64>) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::param(
                "k",
                format!("feedback gain must be >= 0, got {k}"),
            ));
        }
        let layer = BoundaryLayer::new(phi)?;
        let overshoot = overshoot_bound(mu, rho, phi)?;
        let sigma = if k > 0.0 {
            Some(sigma(mu, k, rho)?)
        } else {
            None
        };
        let reach = match sigma {
            Some(sg) if v0p > sg / k => {
                let b = b.unwrap_or(0.5 * (sg / k + v0p));
                let time = reach_time_bound(v0p, k, rho, mu, b)?;
                Some(ReachBound { b, time })
            }
            _ => None,
        };
        Ok(Self {
            eta: layer.eta(),
            sigma,
            reach,
            overshoot,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn sgn_is_three_valued() {
        assert_eq!(sgn(2.5).unwrap(), 1);
        assert_eq!(sgn(0.0).unwrap(), 0);
        assert_eq!(sgn(-0.0).unwrap(), 0);
        assert_eq!(sgn(-1e-30).unwrap(), -1);
        assert!(sgn(f64::NAN).is_err());
        assert!(sgn(f64::INFINITY).is_err());
    }

    #[test]
    fn sat_examples() {
        assert_eq!(sat(0.005, 0.01).unwrap(), 0.5);
        assert_eq!(sat(0.02, 0.01).unwrap(), 1.0);
        assert_eq!(sat(-0.03, 0.01).unwrap(), -1.0);
        assert!(sat(0.1, 0.0).is_err());
        assert!(sat(0.1, -1.0).is_err());
    }

    #[test]
    fn delta_surface_examples() {
        assert_eq!(delta_surface(0.0, 0.01).unwrap(), 0.0);
        assert_eq!(delta_surface(0.01, 0.01).unwrap(), 0.0);
        // s − 2sφ/(|s|+φ) with s = 0.004142, φ = 0.01, straight from the definition.
        let s: f64 = 0.004142;
        let direct = s - 2.0 * s * 0.01 / (s.abs() + 0.01);
        assert_relative_eq!(
            delta_surface(s, 0.01).unwrap(),
            direct,
            max_relative = 1e-12
        );
        assert_relative_eq!(direct, -0.001716, epsilon = 5e-7);
        // at s = η the value is −(√2−1)²φ
        let eta = ultimate_band(0.01).unwrap();
        assert_relative_eq!(
            delta_surface(eta, 0.01).unwrap(),
            -(SQRT_2 - 1.0).powi(2) * 0.01,
            max_relative = 1e-12
        );
        assert!(delta_surface(1.0, 0.0).is_err());
    }

    #[test]
    fn delta_surface_asymptote() {
        let phi = 0.01;
        let s = 1e6;
        assert_relative_eq!(
            delta_surface(s, phi).unwrap(),
            s - 2.0 * phi,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            delta_surface(-s, phi).unwrap(),
            -s + 2.0 * phi,
            max_relative = 1e-12
        );
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.0, 0.03).unwrap(), -1.0);
        assert_eq!(psi((SQRT_2 - 1.0) * 0.03, 0.03).unwrap(), 0.0);
        assert_relative_eq!(psi(0.99, 0.01).unwrap(), 0.9998, max_relative = 1e-12);
        assert!(psi(0.1, 0.0).is_err());
        assert_eq!(psi(f64::INFINITY, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn ultimate_band_examples() {
        assert_relative_eq!(ultimate_band(0.01).unwrap(), 0.0041421356, epsilon = 1e-10);
        assert_relative_eq!(ultimate_band(0.03).unwrap(), 0.0124264069, epsilon = 1e-10);
        assert_eq!(ultimate_band(1.0).unwrap(), SQRT_2 - 1.0);
        assert!(ultimate_band(-0.5).is_err());
    }

    #[test]
    fn psi_sign_change_within_one_ulp_of_eta() {
        for phi in [1e-4, 0.01, 0.03, 0.3, 1.0, 7.5] {
            let layer = BoundaryLayer::new(phi).unwrap();
            let eta = layer.eta();
            assert_eq!(layer.psi(eta), 0.0);
            assert_eq!(layer.psi(-eta), 0.0);
            assert!(layer.psi(eta.next_down()) < 0.0);
            assert!(layer.psi(eta.next_up()) > 0.0);
        }
    }

    #[test]
    fn reach_time_examples() {
        assert_eq!(
            reach_time_bound(1.0005, 2.0, 1.0, 0.5, 1.0005).unwrap(),
            0.0
        );
        // σ = 0.5 + 1/(2·1) = 1.0, σ/k = 0.5, T = ½·ln(0.5005/0.25)
        let expected = 0.5 * (0.5005f64 / 0.25).ln();
        assert_relative_eq!(
            reach_time_bound(1.0005, 2.0, 1.0, 0.5, 0.75).unwrap(),
            expected,
            max_relative = 1e-14
        );
        assert_relative_eq!(expected, 0.347073, epsilon = 1e-6);
    }

    #[test]
    fn reach_time_errors() {
        assert!(matches!(
            reach_time_bound(1.0005, 2.0, 1.0, 0.5, 0.5),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            reach_time_bound(1.0005, 2.0, 1.0, 0.5, 1.1),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            reach_time_bound(0.4, 2.0, 1.0, 0.5, 0.45),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            reach_time_bound(1.0, 0.0, 1.0, 0.5, 0.9),
            Err(Error::Parameter { .. })
        ));
        assert!(matches!(
            reach_time_bound(1.0, 2.0, -1.0, 0.5, 0.9),
            Err(Error::Parameter { .. })
        ));
        // b one ulp above σ/k: ratio overflows and the bound diverges
        let floor = 0.5f64;
        let b = f64::from_bits(floor.to_bits() + 1);
        let r = reach_time_bound(1e300, 2.0, 1.0, 0.5, b);
        assert!(matches!(r, Err(Error::Divergence(_))), "{r:?}");
    }

    #[test]
    fn overshoot_zero_mu_collapses_to_eta() {
        let b = overshoot_bound(0.0, 1.0, 0.01).unwrap();
        let eta = ultimate_band(0.01).unwrap();
        match b {
            OvershootBound::Feasible { m, delta } => {
                assert_relative_eq!(delta, eta, max_relative = 1e-14);
                assert!(m < SQRT_2 / 0.01);
                assert!(SQRT_2 / 0.01 - m < 1e-9);
            }
            OvershootBound::Infeasible => panic!("mu = 0 must be feasible"),
        }
    }

    #[test]
    fn overshoot_unit_mu_satisfies_constraints_by_substitution() {
        let (mu, rho, phi) = (1.0, 1.0, 0.01);
        let layer = BoundaryLayer::new(phi).unwrap();
        let OvershootBound::Feasible { m, delta } = overshoot_bound(mu, rho, phi).unwrap() else {
            panic!("expected a feasible m");
        };
        assert!(m < SQRT_2 / (rho * phi));
        assert!(mu * m.sqrt() <= layer.psi(layer.eta() + mu / m.sqrt()) / rho);
        // m is the largest such value, to the bisection tolerance
        let over = m + 2.0 * OVERSHOOT_BISECTION_TOL;
        assert!(mu * over.sqrt() > layer.psi(layer.eta() + mu / over.sqrt()) / rho);
        let eta = layer.eta();
        assert_relative_eq!(delta, ((2.0 * eta).powi(2) + mu * mu / m).sqrt() - eta);
        assert!(delta >= 0.0);
    }

    #[test]
    fn overshoot_respects_stiffness_cap() {
        let cap = SQRT_2 / (0.7 * 0.03);
        assert_relative_eq!(cap, 67.34, epsilon = 5e-3);
        let b = overshoot_bound(1.0, 0.7, 0.03).unwrap();
        assert!(b.m().unwrap() < cap);
        // a tiny μ leaves the cap as the binding constraint
        let b = overshoot_bound(1e-9, 0.7, 0.03).unwrap();
        assert!(b.m().unwrap() < cap && cap - b.m().unwrap() < 1e-6);
    }

    #[test]
    fn overshoot_infeasible_is_a_result() {
        assert_eq!(
            overshoot_bound(1e300, 1.0, 0.01).unwrap(),
            OvershootBound::Infeasible
        );
        assert!(overshoot_bound(-1.0, 1.0, 0.01).is_err());
    }

    #[test]
    fn worst_case_examples() {
        let (mu, m) = (1.0, 4.0);
        let eta = ultimate_band(0.01).unwrap();
        assert_eq!(worst_case_solution(0.0, 0.3, mu, 0.2, m, eta).unwrap(), 0.3);
        let half = std::f64::consts::PI / m.sqrt();
        assert_relative_eq!(
            worst_case_solution(half, eta, mu, 0.0, m, eta).unwrap(),
            -3.0 * eta,
            epsilon = 1e-15
        );
        assert!(worst_case_solution(0.0, 0.0, 1.0, 0.0, 0.0, eta).is_err());
    }

    #[test]
    fn worst_case_peak_matches_delta_expression() {
        let (mu, m) = (0.5, 3.9);
        let eta = ultimate_band(0.01).unwrap();
        let bound = ((2.0 * eta).powi(2) + mu * mu / m).sqrt() - eta;
        let period = 2.0 * std::f64::consts::PI / m.sqrt();
        let n = 200_000;
        let peak = (0..=n)
            .map(|i| {
                worst_case_solution(period * i as f64 / n as f64, eta, mu, 0.0, m, eta).unwrap()
            })
            .fold(f64::MIN, f64::max);
        assert!(peak <= bound + 1e-12);
        assert!(bound - peak < 1e-8);
    }

    #[test]
    fn worst_case_closed_form_solves_its_oscillator() {
        // finite differences of the closed form against ṡ = μ − μ̂ and
        // μ̂̇ = m(s + η), the system the formula actually integrates
        let (s0, mu, mu0, m) = (0.02, 0.7, 0.1, 9.0);
        let eta = ultimate_band(0.03).unwrap();
        let h = 1e-5;
        let s = |t| worst_case_solution(t, s0, mu, mu0, m, eta).unwrap();
        let g = |t| worst_case_gain(t, s0, mu, mu0, m, eta).unwrap();
        assert_relative_eq!(g(0.0), mu0, epsilon = 1e-15);
        for i in 0..100 {
            let t = 0.021 * i as f64;
            let ds = (s(t + h) - s(t - h)) / (2.0 * h);
            let dg = (g(t + h) - g(t - h)) / (2.0 * h);
            assert!((ds - (mu - g(t))).abs() <= 1e-6 * (1.0 + ds.abs()));
            assert!((dg - m * (s(t) + eta)).abs() <= 1e-6 * (1.0 + dg.abs()));
        }
    }

    #[test]
    fn theorem_bounds_regulation_parameters() {
        // φ = 0.01, ρ = 1, k = 2, μ̂₀ = 0.001, s₀ = 1 and μ = 0.5
        let v0p = 1.0 + 0.001 / 2.0;
        let tb = TheoremBounds::compute(v0p, 2.0, 1.0, 0.5, 0.01, None).unwrap();
        assert_relative_eq!(tb.sigma.unwrap(), 1.0);
        let reach = tb.reach.unwrap();
        assert_relative_eq!(reach.b, 0.75025);
        assert!(reach.b > tb.sigma.unwrap() / 2.0 && reach.b < v0p);
        let m = tb.overshoot.m().unwrap();
        assert!(m < SQRT_2 / 0.01);
        assert!(tb.overshoot.delta().unwrap() >= 0.0);

        let none = TheoremBounds::compute(v0p, 0.0, 1.0, 0.5, 0.01, None).unwrap();
        assert!(none.sigma.is_none() && none.reach.is_none());
        let small = TheoremBounds::compute(0.1, 2.0, 1.0, 0.5, 0.01, None).unwrap();
        assert!(small.reach.is_none());
    }

    proptest! {
        #[test]
        fn delta_surface_is_odd(s in -10.0f64..10.0, phi in 1e-4f64..5.0) {
            let l = BoundaryLayer::new(phi).unwrap();
            prop_assert_eq!(l.delta_surface(-s), -l.delta_surface(s));
        }

        #[test]
        fn psi_is_even_bounded_and_signed(s in -10.0f64..10.0, phi in 1e-4f64..5.0) {
            let l = BoundaryLayer::new(phi).unwrap();
            let p = l.psi(s);
            prop_assert_eq!(p, l.psi(-s));
            prop_assert!((-1.0..=1.0).contains(&p));
            prop_assert_eq!(p < 0.0, s.abs() < l.eta());
            prop_assert_eq!(p > 0.0, s.abs() > l.eta());
        }

        #[test]
        fn reach_time_monotone(b1 in 0.0f64..1.0, b2 in 0.0f64..1.0, extra in 0.0f64..2.0) {
            // σ/k = 0.5 for μ = 0.5, k = 2, ρ = 1
            let v0p = 1.2;
            let lo_b = 0.5 + 1e-6 + (v0p - 0.5 - 1e-6) * b1.min(b2);
            let hi_b = 0.5 + 1e-6 + (v0p - 0.5 - 1e-6) * b1.max(b2);
            let t_lo = reach_time_bound(v0p, 2.0, 1.0, 0.5, lo_b).unwrap();
            let t_hi = reach_time_bound(v0p, 2.0, 1.0, 0.5, hi_b).unwrap();
            prop_assert!(t_lo >= t_hi);
            let t_far = reach_time_bound(v0p + extra, 2.0, 1.0, 0.5, hi_b).unwrap();
            prop_assert!(t_far >= t_hi);
        }
    }
}
