//! Scalar models: the power-law ODE and the quadratic oscillator.

use super::{odd_power, AssumptionConstants, EvolutionSystem, NormSet};
use crate::error::{Error, Result};
use std::sync::Arc;

/// Builds the scalar system `u'' + |u'|^α u' + |u|^β u = 0`, i.e.
/// `F(u) = |u|^{β+2}/(β+2)` and `g(t, v) = |v|^α v`, with all norms `|·|`.
///
/// In the regime `0 < α < β` this is the model with universal bound and
/// the optimal decay rate `min{2/α, (α+1)(β+2)/(β−α)}`; for `α ≥ β` it is
/// the model on which universal boundedness fails, which the sweep harness
/// demonstrates.
///
/// Declared constants (all exact): `δ₁ = 1/(β+2)`, `δ₂ = β+2`, `δ₃ = 1`,
/// `D₄ = 1`, every `Cᵢ = 0`, and `C₅ = 1` when `α < β`. No `δ₄` is
/// declared: `F(u)/u² → 0` as `u → 0`, so the quadratic lower bound has no
/// positive constant.
pub fn build_scalar_ode(alpha: f64, beta: f64) -> Result<EvolutionSystem> {
    if !alpha.is_finite() || !(alpha > 0.0) {
        return Err(Error::invalid("alpha", "must be positive and finite"));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::invalid("beta", "must be nonnegative and finite"));
    }

    let potential = Arc::new(move |u: &[f64]| u[0].abs().powf(beta + 2.0) / (beta + 2.0));
    let grad = Arc::new(move |u: &[f64], out: &mut [f64]| {
        out[0] = odd_power(u[0], beta);
    });
    let damping = Arc::new(move |_t: f64, v: &[f64], out: &mut [f64]| {
        out[0] = odd_power(v[0], alpha);
    });

    let constants = AssumptionConstants {
        delta1: 1.0 / (beta + 2.0),
        delta2: beta + 2.0,
        delta3: 1.0,
        d4: 1.0,
        c5: if alpha < beta { 1.0 } else { 0.0 },
        ..Default::default()
    };

    Ok(EvolutionSystem::from_parts(
        format!("scalar(alpha={alpha}, beta={beta})"),
        1,
        alpha,
        beta,
        potential,
        grad,
        damping,
        NormSet::scalar(),
        Some(constants),
    ))
}

/// Builds `u'' + ω²u + δ|u'|^ρ u' = 0`: quadratic potential `F(u) = ω²u²/2`
/// and damping `g(t, v) = δ|v|^ρ v`.
///
/// The potential is quadratic, not super-quadratic, so the coercivity
/// assumption behind the universal bound fails; with `ω = δ = ρ = 1` the
/// parabola `u(t) = t²/4 − 1/2` (for `t ≤ 0`) is an exact solution whose
/// range is unbounded, the regression target for the falsification run.
pub fn build_oscillator(omega: f64, delta: f64, rho: f64) -> Result<EvolutionSystem> {
    for (name, value) in [("omega", omega), ("delta", delta), ("rho", rho)] {
        if !value.is_finite() {
            return Err(Error::invalid(name, "must be finite"));
        }
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    if !(rho > 0.0) {
        return Err(Error::invalid("rho", "must be positive"));
    }

    let potential = Arc::new(move |u: &[f64]| 0.5 * omega * omega * u[0] * u[0]);
    let grad = Arc::new(move |u: &[f64], out: &mut [f64]| {
        out[0] = omega * omega * u[0];
    });
    let damping = Arc::new(move |_t: f64, v: &[f64], out: &mut [f64]| {
        out[0] = delta * odd_power(v[0], rho);
    });

    Ok(EvolutionSystem::from_parts(
        format!("oscillator(omega={omega}, delta={delta}, rho={rho})"),
        1,
        rho,
        0.0,
        potential,
        grad,
        damping,
        NormSet::scalar(),
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_potential_hand_values() {
        // F(2) = 2^5/5 for beta = 3
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        assert_relative_eq!(sys.potential(&[2.0]), 6.4, max_relative = 1e-15);
        // zero state
        assert_eq!(sys.potential(&[0.0]), 0.0);
        assert_eq!(sys.grad_potential(&[0.0])[0], 0.0);
    }

    #[test]
    fn euler_identity_gives_delta2() {
        // <grad F(u), u> = (beta+2) F(u): at u = 1 the ratio is exactly 5.
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let g = sys.grad_potential(&[1.0])[0];
        let f = sys.potential(&[1.0]);
        assert_relative_eq!(g, 1.0, max_relative = 1e-15);
        assert_relative_eq!(f, 0.2, max_relative = 1e-15);
        assert_relative_eq!(g * 1.0 / f, 5.0, max_relative = 1e-12);
        assert_eq!(sys.declared_constants().unwrap().delta2, 5.0);
    }

    #[test]
    fn scalar_rejects_bad_exponents() {
        assert!(build_scalar_ode(0.0, 3.0).is_err());
        assert!(build_scalar_ode(f64::NAN, 3.0).is_err());
        assert!(build_scalar_ode(1.0, -1.0).is_err());
        assert!(build_scalar_ode(1.0, f64::INFINITY).is_err());
        // alpha >= beta is allowed at build time; only the certificates
        // restrict the regime.
        assert!(build_scalar_ode(2.0, 1.0).is_ok());
    }

    #[test]
    fn oscillator_hand_values() {
        let sys = build_oscillator(1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(sys.potential(&[3.0]), 4.5, max_relative = 1e-15);
        for t in [-7.0, 0.0, 3.0] {
            assert_eq!(sys.damping(t, &[0.0])[0], 0.0);
        }
    }

    #[test]
    fn oscillator_parabola_is_an_exact_solution() {
        // u(t) = t²/4 − 1/2 solves u'' + u + |u'|u' = 0 for t ≤ 0:
        // residual at t = −2 must vanish identically.
        let sys = build_oscillator(1.0, 1.0, 1.0).unwrap();
        for t in [-10.0, -2.0, -0.5] {
            let u = t * t / 4.0 - 0.5;
            let v = t / 2.0;
            let udd = 0.5;
            let resid = udd + sys.grad_potential(&[u])[0] + sys.damping(t, &[v])[0];
            assert_relative_eq!(resid, 0.0, epsilon = 1e-15);
        }
    }
}
