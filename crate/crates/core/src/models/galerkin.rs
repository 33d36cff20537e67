//! Pseudospectral Galerkin truncations of the semilinear wave and plate
//! equations on Ω = (0, π).
//!
//! State coordinates are modal coefficients in the orthonormal eigenbasis
//! of the linear operator: sines for Dirichlet/hinged boundary conditions
//! (eigenvalues k² resp. k⁴), cosines including the constant mode for
//! Neumann (eigenvalues (k−1)²). Power nonlinearities are evaluated on an
//! M-point uniform grid, applied pointwise, and projected back with
//! trapezoidal quadrature weights. The discrete potential is defined first
//! and differentiated exactly, so the energy identity holds at the discrete
//! level; M ≥ 2N keeps the projected products alias-free and the discrete
//! basis exactly orthonormal under the quadrature.

use super::{
    odd_power, AssumptionConstants, Boundary, EvolutionSystem, Forcing, NormSet, PdeParams,
};
use crate::error::{Error, Result};
use std::sync::Arc;

/// Quadrature grid plus basis evaluations for one boundary condition.
pub(crate) struct SpectralBasis {
    /// Quadrature weights, one per grid point.
    pub weights: Vec<f64>,
    /// `eval[j * modes + k] = e_{k+1}(x_j)`, row-major over grid points.
    pub eval: Vec<f64>,
    /// Eigenvalues of the linear operator per mode.
    pub eigenvalues: Vec<f64>,
    pub modes: usize,
    pub points: usize,
}

impl SpectralBasis {
    /// Sine basis `e_k = √(2/π)·sin(kx)` on the interior points
    /// `x_j = jπ/(M+1)`; trapezoid weights reduce to uniform `π/(M+1)`
    /// because the integrand vanishes at the endpoints. `power` selects the
    /// operator: 2 for −Δ (eigenvalues k²), 4 for Δ² (eigenvalues k⁴).
    fn sine(modes: usize, points: usize, power: i32) -> Self {
        let h = std::f64::consts::PI / (points as f64 + 1.0);
        let scale = (2.0 / std::f64::consts::PI).sqrt();
        let mut eval = vec![0.0; points * modes];
        for j in 0..points {
            let x = (j as f64 + 1.0) * h;
            for k in 0..modes {
                eval[j * modes + k] = scale * (((k + 1) as f64) * x).sin();
            }
        }
        let eigenvalues = (1..=modes).map(|k| (k as f64).powi(power)).collect();
        SpectralBasis {
            weights: vec![h; points],
            eval,
            eigenvalues,
            modes,
            points,
        }
    }

    /// Cosine basis with the constant mode first: `e_1 = 1/√π`,
    /// `e_k = √(2/π)·cos((k−1)x)` for k ≥ 2, eigenvalues (k−1)². Grid
    /// `x_j = jπ/(M−1)` including both endpoints, trapezoid weights.
    fn cosine(modes: usize, points: usize) -> Self {
        let h = std::f64::consts::PI / (points as f64 - 1.0);
        let c0 = (1.0 / std::f64::consts::PI).sqrt();
        let ck = (2.0 / std::f64::consts::PI).sqrt();
        let mut eval = vec![0.0; points * modes];
        let mut weights = vec![h; points];
        weights[0] = 0.5 * h;
        weights[points - 1] = 0.5 * h;
        for j in 0..points {
            let x = j as f64 * h;
            eval[j * modes] = c0;
            for k in 1..modes {
                eval[j * modes + k] = ck * ((k as f64) * x).cos();
            }
        }
        let eigenvalues = (0..modes).map(|k| (k as f64) * (k as f64)).collect();
        SpectralBasis {
            weights,
            eval,
            eigenvalues,
            modes,
            points,
        }
    }

    /// Collocation values of the modal vector `a` on the grid.
    pub fn to_grid(&self, a: &[f64], grid: &mut [f64]) {
        for (j, g) in grid.iter_mut().enumerate() {
            let row = &self.eval[j * self.modes..(j + 1) * self.modes];
            *g = row.iter().zip(a).map(|(e, ak)| e * ak).sum();
        }
    }

    /// Quadrature-weighted projection of grid values onto the modes:
    /// `out_k = Σ_j w_j f(x_j) e_k(x_j)`.
    pub fn project(&self, grid: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, (w, g)) in self.weights.iter().zip(grid).enumerate() {
            let wf = w * g;
            let row = &self.eval[j * self.modes..(j + 1) * self.modes];
            for (o, e) in out.iter_mut().zip(row) {
                *o += wf * e;
            }
        }
    }

    /// Grid-quadrature Lᵖ norm of the modal vector.
    pub fn lp_norm(&self, a: &[f64], p: f64) -> f64 {
        let mut grid = vec![0.0; self.points];
        self.to_grid(a, &mut grid);
        let sum: f64 = grid
            .iter()
            .zip(&self.weights)
            .map(|(g, w)| w * g.abs().powf(p))
            .sum();
        sum.powf(1.0 / p)
    }
}

fn norm_set(basis: &Arc<SpectralBasis>, params: &PdeParams) -> NormSet {
    let ell2 = Arc::new(|a: &[f64]| a.iter().map(|x| x * x).sum::<f64>().sqrt());
    let (alpha, beta) = (params.alpha, params.beta);
    let bx = basis.clone();
    let by = basis.clone();
    let bd = basis.clone();
    // Dirichlet/hinged: the gradient (resp. bending) seminorm is already a
    // norm; Neumann needs the L² part to control the constant mode.
    let include_l2 = params.boundary == Boundary::Neumann;
    let bv = basis.clone();
    let norm_v = Arc::new(move |a: &[f64]| {
        a.iter()
            .zip(&bv.eigenvalues)
            .map(|(x, lam)| (lam + if include_l2 { 1.0 } else { 0.0 }) * x * x)
            .sum::<f64>()
            .sqrt()
    });
    NormSet::from_parts(
        ell2.clone(),
        Arc::new(move |a: &[f64]| bx.lp_norm(a, alpha + 2.0)),
        Arc::new(move |a: &[f64]| by.lp_norm(a, beta + 2.0)),
        norm_v,
        Arc::new(move |a: &[f64]| bd.lp_norm(a, (alpha + 2.0) / (alpha + 1.0))),
        Arc::new(|a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum()),
    )
}

fn declared_constants(params: &PdeParams, lambda1: f64) -> AssumptionConstants {
    let mut k = AssumptionConstants {
        // <grad F(u), u> − 2F(u) = b·β/(β+2)·Q(|u|^{β+2}) ≥ 0, exactly.
        delta2: 2.0,
        c2: 0.0,
        ..Default::default()
    };
    if params.lambda <= lambda1 {
        k.delta1 = params.b / (params.beta + 2.0);
        k.c1 = 0.0;
    }
    if params.mu <= 0.0 && params.forcing.is_none() {
        k.delta3 = params.c;
        k.c3 = 0.0;
    }
    if params.mu == 0.0 && params.forcing.is_none() {
        k.d4 = params.c;
        k.c4 = 0.0;
    }
    if params.lambda < lambda1 {
        k.delta4 = 0.5 * (lambda1 - params.lambda);
    }
    if params.alpha < params.beta {
        k.c5 = 1.0;
    }
    k
}

fn build_spectral(
    label: String,
    params: &PdeParams,
    basis: SpectralBasis,
    lambda1: f64,
) -> EvolutionSystem {
    let basis = Arc::new(basis);
    let n = params.modes;
    let (b, lambda, beta) = (params.b, params.lambda, params.beta);
    let (c, mu, alpha) = (params.c, params.mu, params.alpha);
    let forcing = params.forcing.clone();

    let bp = basis.clone();
    let potential = Arc::new(move |a: &[f64]| {
        let linear: f64 = a
            .iter()
            .zip(&bp.eigenvalues)
            .map(|(x, lam)| 0.5 * (lam - lambda) * x * x)
            .sum();
        let mut grid = vec![0.0; bp.points];
        bp.to_grid(a, &mut grid);
        let q: f64 = grid
            .iter()
            .zip(&bp.weights)
            .map(|(g, w)| w * g.abs().powf(beta + 2.0))
            .sum();
        linear + b / (beta + 2.0) * q
    });

    let bg = basis.clone();
    let grad = Arc::new(move |a: &[f64], out: &mut [f64]| {
        let mut grid = vec![0.0; bg.points];
        bg.to_grid(a, &mut grid);
        for g in grid.iter_mut() {
            *g = odd_power(*g, beta);
        }
        bg.project(&grid, out);
        for ((o, x), lam) in out.iter_mut().zip(a).zip(&bg.eigenvalues) {
            *o = b * *o + (lam - lambda) * x;
        }
    });

    let bd = basis.clone();
    let damping = Arc::new(move |t: f64, v: &[f64], out: &mut [f64]| {
        let mut grid = vec![0.0; bd.points];
        bd.to_grid(v, &mut grid);
        for g in grid.iter_mut() {
            *g = odd_power(*g, alpha);
        }
        bd.project(&grid, out);
        for (o, x) in out.iter_mut().zip(v) {
            *o = c * *o - mu * x;
        }
        if let Some(Forcing { modal, profile }) = &forcing {
            let w = profile.eval(t);
            for (o, h) in out.iter_mut().zip(modal) {
                *o -= w * h;
            }
        }
    });

    let norms = norm_set(&basis, params);
    let constants = declared_constants(params, lambda1);
    EvolutionSystem::from_parts(
        label,
        n,
        alpha,
        beta,
        potential,
        grad,
        damping,
        norms,
        Some(constants),
    )
}

/// Galerkin/pseudospectral truncation of
/// `u_tt − u_xx + b|u|^β u − λu + c|u_t|^α u_t − μu_t = h` on (0, π) with
/// Dirichlet or Neumann boundary conditions.
///
/// Discrete `F(a) = ½Σ(λ_k − λ)a_k² + b/(β+2)·Q(|u|^{β+2})` with Q the
/// grid quadrature; `∇F` is its exact gradient. Norms: H and V modal,
/// X = L^{α+2} and Y = L^{β+2} by quadrature.
pub fn build_galerkin_wave(params: &PdeParams) -> Result<EvolutionSystem> {
    params.validate()?;
    let (basis, lambda1) = match params.boundary {
        Boundary::Dirichlet => (
            SpectralBasis::sine(params.modes, params.grid_points, 2),
            1.0,
        ),
        Boundary::Neumann => (SpectralBasis::cosine(params.modes, params.grid_points), 0.0),
        other => {
            return Err(Error::UnsupportedBoundary(format!(
                "wave equation takes dirichlet or neumann, got {other}"
            )))
        }
    };
    let label = format!(
        "wave({}, N={}, M={}, b={}, c={}, lambda={}, mu={}, alpha={}, beta={})",
        params.boundary,
        params.modes,
        params.grid_points,
        params.b,
        params.c,
        params.lambda,
        params.mu,
        params.alpha,
        params.beta
    );
    Ok(build_spectral(label, params, basis, lambda1))
}

/// Same truncation for the plate equation `u_tt + u_xxxx + ...` with hinged
/// boundary conditions: the sine basis diagonalizes the bi-Laplacian with
/// eigenvalues k⁴ (λ₁ = 1). Clamped conditions do not diagonalize in this
/// basis and are refused.
pub fn build_galerkin_plate(params: &PdeParams) -> Result<EvolutionSystem> {
    params.validate()?;
    match params.boundary {
        Boundary::Hinged => {}
        Boundary::Clamped => {
            return Err(Error::UnsupportedBoundary(
                "clamped plate: the eigenbasis is not diagonal in the sine modes; \
                 only hinged boundary conditions are supported"
                    .to_string(),
            ))
        }
        other => {
            return Err(Error::UnsupportedBoundary(format!(
                "plate equation takes hinged boundary conditions, got {other}"
            )))
        }
    }
    let basis = SpectralBasis::sine(params.modes, params.grid_points, 4);
    let label = format!(
        "plate(hinged, N={}, M={}, b={}, c={}, lambda={}, mu={}, alpha={}, beta={})",
        params.modes,
        params.grid_points,
        params.b,
        params.c,
        params.lambda,
        params.mu,
        params.alpha,
        params.beta
    );
    Ok(build_spectral(label, params, basis, 1.0))
}
