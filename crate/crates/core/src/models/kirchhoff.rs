//! Exact modal systems for quasilinear equations with averaged
//! coefficients on Ω = (0, π) with Dirichlet boundary conditions.
//!
//! For initial data spanned by finitely many Dirichlet eigenfunctions the
//! PDE is equivalent to a finite ODE system in the modal coefficients, with
//! no quadrature needed: the averaged coefficients are plain weighted sums.

use super::{
    odd_power, AssumptionConstants, Boundary, EvolutionSystem, Forcing, NormSet, PdeParams,
};
use crate::error::{Error, Result};
use std::sync::Arc;

/// Builds the modal system
///
/// ```text
/// a_k'' + (1−deg)·k²a_k + b·(Σ_j j²a_j²)^{β/2}·k²a_k
///        + c·(Σ_j v_j²)^{α/2}·v_k − λa_k − μv_k = h_k
/// ```
///
/// from `F(a) = (1−deg)·½Σk²a_k² + b/(β+2)·(Σk²a_k²)^{(β+2)/2} − λ/2·Σa_k²`
/// with `deg = 1` for the degenerate variant (no linear stiffness).
/// Norms: H = X = ℓ², Y = V = k²-weighted ℓ².
///
/// Neumann boundary conditions are refused: spatially constant states then
/// solve the equation with zero gradient energy, so F cannot control u
/// through ∇u and no universal bound can hold.
pub fn build_kirchhoff(params: &PdeParams, degenerate: bool) -> Result<EvolutionSystem> {
    params.validate()?;
    if params.boundary != Boundary::Dirichlet {
        return Err(Error::UnsupportedBoundary(format!(
            "averaged (Kirchhoff) systems take dirichlet boundary conditions, got {}; \
             under neumann every spatially constant function solves the equation, so the \
             potential cannot control the state and the universal bound fails",
            params.boundary
        )));
    }

    let n = params.modes;
    let (b, lambda, beta) = (params.b, params.lambda, params.beta);
    let (c, mu, alpha) = (params.c, params.mu, params.alpha);
    let forcing = params.forcing.clone();
    let linear = if degenerate { 0.0 } else { 1.0 };
    let k2: Arc<Vec<f64>> = Arc::new((1..=n).map(|k| (k * k) as f64).collect());

    let k2p = k2.clone();
    let potential = Arc::new(move |a: &[f64]| {
        let s: f64 = a.iter().zip(k2p.iter()).map(|(x, k2)| k2 * x * x).sum();
        let l2: f64 = a.iter().map(|x| x * x).sum();
        0.5 * linear * s + b / (beta + 2.0) * s.powf(0.5 * (beta + 2.0)) - 0.5 * lambda * l2
    });

    let k2g = k2.clone();
    let grad = Arc::new(move |a: &[f64], out: &mut [f64]| {
        let s: f64 = a.iter().zip(k2g.iter()).map(|(x, k2)| k2 * x * x).sum();
        let stiff = linear + b * s.powf(0.5 * beta);
        for ((o, x), k2) in out.iter_mut().zip(a).zip(k2g.iter()) {
            *o = stiff * k2 * x - lambda * x;
        }
    });

    let damping = Arc::new(move |t: f64, v: &[f64], out: &mut [f64]| {
        let speed: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let drag = c * speed.powf(alpha);
        for (o, x) in out.iter_mut().zip(v) {
            *o = drag * x - mu * x;
        }
        if let Some(Forcing { modal, profile }) = &forcing {
            let w = profile.eval(t);
            for (o, h) in out.iter_mut().zip(modal) {
                *o -= w * h;
            }
        }
    });

    let ell2 = Arc::new(|a: &[f64]| a.iter().map(|x| x * x).sum::<f64>().sqrt());
    let k2n = k2.clone();
    let weighted = Arc::new(move |a: &[f64]| {
        a.iter()
            .zip(k2n.iter())
            .map(|(x, k2)| k2 * x * x)
            .sum::<f64>()
            .sqrt()
    });
    let norms = NormSet::from_parts(
        ell2.clone(),
        ell2.clone(),
        weighted.clone(),
        weighted,
        ell2,
        Arc::new(|a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum()),
    );

    let mut constants = AssumptionConstants::default();
    if params.lambda <= 1.0 && params.b > 0.0 {
        constants.delta1 = b / (beta + 2.0);
    }
    // The λ-terms of <grad F, u> and 2F cancel exactly, so δ₂ = 2 always;
    // the degenerate λ = 0 case even allows the Euler value β+2.
    constants.delta2 = if degenerate && lambda == 0.0 {
        beta + 2.0
    } else {
        2.0
    };
    if params.mu <= 0.0 && params.forcing.is_none() {
        constants.delta3 = c;
    }
    if params.mu == 0.0 && params.forcing.is_none() {
        constants.d4 = c;
    }
    if !degenerate && params.lambda < 1.0 {
        constants.delta4 = 0.5 * (1.0 - params.lambda);
    }
    if params.alpha < params.beta {
        constants.c5 = 1.0;
    }

    let label = format!(
        "kirchhoff({}N={}, b={}, c={}, lambda={}, mu={}, alpha={}, beta={})",
        if degenerate { "degenerate, " } else { "" },
        n,
        b,
        c,
        lambda,
        mu,
        alpha,
        beta
    );
    Ok(EvolutionSystem::from_parts(
        label,
        n,
        alpha,
        beta,
        potential,
        grad,
        damping,
        norms,
        Some(constants),
    ))
}

/// The spatially constant Neumann mode of the averaged system with λ = 0:
/// `F ≡ 0` (the gradient term is the only coercive piece and it vanishes on
/// constants) while every admissible Y-norm still controls `|a|`. Kept as a
/// one-dimensional system so the assumption checker can demonstrate that no
/// `(δ₁, C₁)` makes the coercivity inequality hold.
pub fn build_kirchhoff_constant_surrogate(alpha: f64, c: f64) -> Result<EvolutionSystem> {
    if !alpha.is_finite() || !(alpha > 0.0) {
        return Err(Error::invalid("alpha", "must be positive and finite"));
    }
    if !c.is_finite() || !(c > 0.0) {
        return Err(Error::invalid("c", "must be positive and finite"));
    }
    let potential = Arc::new(|_u: &[f64]| 0.0);
    let grad = Arc::new(|_u: &[f64], out: &mut [f64]| out[0] = 0.0);
    let damping = Arc::new(move |_t: f64, v: &[f64], out: &mut [f64]| {
        out[0] = c * odd_power(v[0], alpha);
    });
    Ok(EvolutionSystem::from_parts(
        format!("kirchhoff-neumann-constant-mode(alpha={alpha}, c={c})"),
        1,
        alpha,
        alpha + 1.0,
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
    fn gradient_hand_value_single_mode() {
        // N=1, b=1, beta=2, lambda=0: F = a²/2 + a⁴/4, grad F(1) = 1+1 = 2.
        let mut p = PdeParams::new(1, 2);
        p.beta = 2.0;
        let sys = build_kirchhoff(&p, false).unwrap();
        assert_relative_eq!(sys.grad_potential(&[1.0])[0], 2.0, epsilon = 1e-14);
        assert_eq!(sys.potential(&[0.0]), 0.0);
        assert!(sys.damping(0.0, &[0.0]).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn degenerate_drops_linear_stiffness() {
        let mut p = PdeParams::new(1, 2);
        p.beta = 2.0;
        let sys = build_kirchhoff(&p, true).unwrap();
        // F = (1/4)(a²)² only
        assert_relative_eq!(sys.potential(&[2.0]), 4.0, epsilon = 1e-14);
        assert_relative_eq!(sys.grad_potential(&[2.0])[0], 8.0, epsilon = 1e-14);
    }

    #[test]
    fn neumann_is_refused_with_reason() {
        let mut p = PdeParams::new(2, 4);
        p.boundary = Boundary::Neumann;
        let err = build_kirchhoff(&p, false).unwrap_err();
        let msg = format!("{err}");
        assert!(
            msg.contains("constant"),
            "message should explain why: {msg}"
        );
    }

    #[test]
    fn averaged_damping_is_dissipative() {
        let mut p = PdeParams::new(3, 6);
        p.alpha = 1.0;
        let sys = build_kirchhoff(&p, false).unwrap();
        let v = [0.5, -1.0, 0.25];
        let g = sys.damping(0.0, &v);
        let power: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        let speed: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // <g(v), v> = c·‖v‖^α·‖v‖² = ‖v‖_X^{α+2} exactly
        assert_relative_eq!(power, speed.powi(3), max_relative = 1e-13);
    }

    #[test]
    fn surrogate_has_flat_potential() {
        let sys = build_kirchhoff_constant_surrogate(1.0, 1.0).unwrap();
        assert_eq!(sys.potential(&[1e6]), 0.0);
        assert_eq!(sys.grad_potential(&[1e6])[0], 0.0);
        assert!(sys.norms().y(&[2.0]) > 0.0);
    }
}
