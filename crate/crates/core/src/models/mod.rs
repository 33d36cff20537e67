//! Finite-dimensional realizations of `u'' + ∇F(u) + g(t, u') = 0`.
//!
//! A model is an [`EvolutionSystem`]: the potential `F`, its exact gradient,
//! the damping `g`, the exponent pair `(α, β)`, and a [`NormSet`] realizing
//! the space chain `V ⊆ Y ⊆ X ⊆ H` on the truncation. Builders:
//!
//! - [`build_scalar_ode`] — `u'' + |u'|^α u' + |u|^β u = 0`;
//! - [`build_oscillator`] — `u'' + ω²u + δ|u'|^ρ u' = 0` (quadratic
//!   potential; the boundedness counterexample);
//! - [`build_galerkin_wave`] / [`build_galerkin_plate`] — pseudospectral
//!   truncations on (0, π);
//! - [`build_kirchhoff`] — exact modal system for averaged-coefficient
//!   equations;
//! - [`build_kirchhoff_constant_surrogate`] — the spatially constant
//!   Neumann mode, kept only to demonstrate coercivity failure.
//!
//! The discrete potential is defined first and its gradient derived from it,
//! so the energy identity `E₀' = −⟨g(t, u'), u'⟩` holds exactly at the
//! discrete level; the integrator certifies each step against it.

mod galerkin;
mod kirchhoff;
mod scalar;

pub use galerkin::{build_galerkin_plate, build_galerkin_wave};
pub use kirchhoff::{build_kirchhoff, build_kirchhoff_constant_surrogate};
pub use scalar::{build_oscillator, build_scalar_ode};

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type DampingFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
type PairingFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// A point of phase space: time, position `u` and velocity `v = u'`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn new(t: f64, u: Vec<f64>, v: Vec<f64>) -> Self {
        State { t, u, v }
    }

    /// Rest state at the origin.
    pub fn zero(t: f64, dim: usize) -> Self {
        State {
            t,
            u: vec![0.0; dim],
            v: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

/// Evaluators for the norms of the chain `V ⊆ Y ⊆ X ⊆ H` on the truncated
/// state space, plus the scalar product / duality pairing.
///
/// On the truncation the pairing doubles as the `H` scalar product and the
/// `V', V` duality; it must satisfy `pairing(v, v) = norm_h(v)²`. The extra
/// `norm_x_dual` evaluator realizes `‖·‖_{X'}` and is used only by the
/// assumption checkers (growth bound on the damping).
#[derive(Clone)]
pub struct NormSet {
    norm_h: ScalarFn,
    norm_x: ScalarFn,
    norm_y: ScalarFn,
    norm_v: ScalarFn,
    norm_x_dual: ScalarFn,
    pairing: PairingFn,
}

impl NormSet {
    pub fn from_parts(
        norm_h: ScalarFn,
        norm_x: ScalarFn,
        norm_y: ScalarFn,
        norm_v: ScalarFn,
        norm_x_dual: ScalarFn,
        pairing: PairingFn,
    ) -> Self {
        NormSet {
            norm_h,
            norm_x,
            norm_y,
            norm_v,
            norm_x_dual,
            pairing,
        }
    }

    /// All norms equal `|·|`, pairing is the product: the scalar models.
    pub fn scalar() -> Self {
        let abs: ScalarFn = Arc::new(|u: &[f64]| u[0].abs());
        NormSet {
            norm_h: abs.clone(),
            norm_x: abs.clone(),
            norm_y: abs.clone(),
            norm_v: abs.clone(),
            norm_x_dual: abs,
            pairing: Arc::new(|a: &[f64], b: &[f64]| a[0] * b[0]),
        }
    }

    pub fn h(&self, u: &[f64]) -> f64 {
        (self.norm_h)(u)
    }
    pub fn x(&self, u: &[f64]) -> f64 {
        (self.norm_x)(u)
    }
    pub fn y(&self, u: &[f64]) -> f64 {
        (self.norm_y)(u)
    }
    pub fn v(&self, u: &[f64]) -> f64 {
        (self.norm_v)(u)
    }
    pub fn x_dual(&self, u: &[f64]) -> f64 {
        (self.norm_x_dual)(u)
    }
    pub fn pairing(&self, a: &[f64], b: &[f64]) -> f64 {
        (self.pairing)(a, b)
    }
}

impl fmt::Debug for NormSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("NormSet {..}")
    }
}

/// Analytically known constants of the assumption inequalities.
///
/// Convention: a value of `0.0` in a leading constant (`delta1..delta4`,
/// `d4`, `c5`) means "not declared"; the paired additive constant (`c1`
/// for `delta1`, `c2` for `delta2`, `c3` for `delta3`, `c4` for `d4`) is
/// meaningful only when its leading constant is declared. Builders declare
/// exactly what is analytically exact for the truncation; everything else
/// is left to the sampling checker, which fits constants from data.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssumptionConstants {
    /// Coercivity of F over Y: `F(u) ≥ delta1·‖u‖_Y^{β+2} − c1`.
    pub delta1: f64,
    pub c1: f64,
    /// Gradient vs potential: `⟨∇F(u), u⟩ ≥ delta2·F(u) − c2`.
    pub delta2: f64,
    pub c2: f64,
    /// Dissipativity: `⟨g(t,v), v⟩ ≥ delta3·‖v‖_X^{α+2} − c3`.
    pub delta3: f64,
    pub c3: f64,
    /// Damping growth: `‖g(t,v)‖_{X'} ≤ d4·‖v‖_X^{α+1} + c4`.
    pub d4: f64,
    pub c4: f64,
    /// Quadratic coercivity: `F(u) ≥ delta4·‖u‖_H²`.
    pub delta4: f64,
    /// Interpolation: `‖u‖_X^{α+2} ≤ c5·(‖u‖_H² + ‖u‖_Y^{β+2})`.
    pub c5: f64,
}

/// Boundary conditions understood by the PDE builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Neumann,
    Hinged,
    Clamped,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Neumann => "neumann",
            Boundary::Hinged => "hinged",
            Boundary::Clamped => "clamped",
        };
        f.write_str(s)
    }
}

/// Time profile of the separable forcing `h(t, x) = w(t)·h₀(x)`, with
/// `‖w‖_∞ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    Constant,
    Cosine { omega: f64 },
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Cosine { omega } => (omega * t).cos(),
        }
    }
}

/// Separable forcing term: modal coefficients of `h₀` plus a bounded time
/// profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub modal: Vec<f64>,
    pub profile: TimeProfile,
}

/// Parameters of the PDE builders (wave, plate, Kirchhoff) on Ω = (0, π).
#[derive(Debug, Clone, PartialEq)]
pub struct PdeParams {
    /// Number of retained modes N.
    pub modes: usize,
    /// Number of quadrature grid points M (M ≥ 2N for dealiasing).
    pub grid_points: usize,
    pub boundary: Boundary,
    /// Coefficient of the superlinear restoring term.
    pub b: f64,
    /// Coefficient of the superlinear damping term.
    pub c: f64,
    /// Linear (anti-)restoring coefficient.
    pub lambda: f64,
    /// Linear (anti-)damping coefficient.
    pub mu: f64,
    pub beta: f64,
    pub alpha: f64,
    pub forcing: Option<Forcing>,
}

impl PdeParams {
    /// Plain defaults: N = 1, M = 4, Dirichlet, b = c = 1, λ = μ = 0,
    /// α = 1, β = 2, no forcing.
    pub fn new(modes: usize, grid_points: usize) -> Self {
        PdeParams {
            modes,
            grid_points,
            boundary: Boundary::Dirichlet,
            b: 1.0,
            c: 1.0,
            lambda: 0.0,
            mu: 0.0,
            beta: 2.0,
            alpha: 1.0,
            forcing: None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::invalid("modes", "must be at least 1"));
        }
        if self.grid_points < 2 * self.modes {
            return Err(Error::invalid(
                "grid_points",
                format!(
                    "dealiasing requires M >= 2N, got M = {}, N = {}",
                    self.grid_points, self.modes
                ),
            ));
        }
        // b = 0 (pure linear restoring) and c = 0 (no superlinear damping)
        // are allowed: they are the linear-decoupling and conservative
        // regression cases.
        for (name, value) in [("b", self.b), ("c", self.c)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::invalid(name, "must be nonnegative and finite"));
            }
        }
        for (name, value) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("lambda", self.lambda),
            ("mu", self.mu),
        ] {
            if !value.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !(self.alpha > 0.0) {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::invalid("beta", "must be positive"));
        }
        if let Some(f) = &self.forcing {
            if f.modal.len() != self.modes {
                return Err(Error::invalid(
                    "forcing",
                    format!(
                        "modal coefficient count {} does not match modes {}",
                        f.modal.len(),
                        self.modes
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// A finite-dimensional second-order system `u'' + ∇F(u) + g(t, u') = 0`.
///
/// Immutable after construction; all evaluators are pure, so a system can
/// be shared across concurrently running trajectories.
#[derive(Clone)]
pub struct EvolutionSystem {
    dim: usize,
    alpha: f64,
    beta: f64,
    label: String,
    potential: ScalarFn,
    grad_potential: VectorFn,
    damping: DampingFn,
    norms: NormSet,
    declared: Option<AssumptionConstants>,
}

impl EvolutionSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        label: impl Into<String>,
        dim: usize,
        alpha: f64,
        beta: f64,
        potential: ScalarFn,
        grad_potential: VectorFn,
        damping: DampingFn,
        norms: NormSet,
        declared: Option<AssumptionConstants>,
    ) -> Self {
        EvolutionSystem {
            dim,
            alpha,
            beta,
            label: label.into(),
            potential,
            grad_potential,
            damping,
            norms,
            declared,
        }
    }

    /// Replaces the declared constants (used to probe candidate constants
    /// against the sampling checker).
    pub fn with_declared_constants(mut self, constants: AssumptionConstants) -> Self {
        self.declared = Some(constants);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn norms(&self) -> &NormSet {
        &self.norms
    }
    pub fn declared_constants(&self) -> Option<&AssumptionConstants> {
        self.declared.as_ref()
    }

    /// `F(u)`.
    pub fn potential(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim);
        (self.potential)(u)
    }

    /// `∇F(u)`, written into `out`.
    pub fn grad_potential_into(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.grad_potential)(u, out);
    }

    pub fn grad_potential(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.grad_potential_into(u, &mut out);
        out
    }

    /// `g(t, v)`, written into `out`.
    pub fn damping_into(&self, t: f64, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.damping)(t, v, out);
    }

    pub fn damping(&self, t: f64, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.damping_into(t, v, &mut out);
        out
    }

    /// Classical energy `E₀ = ½‖v‖_H² + F(u)`.
    pub fn energy(&self, state: &State) -> f64 {
        let k = self.norms.h(&state.v);
        0.5 * k * k + self.potential(&state.u)
    }
}

impl fmt::Debug for EvolutionSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolutionSystem")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .finish_non_exhaustive()
    }
}

/// `|s|^p · s`, the odd power map, with the removable singularity at 0
/// evaluated directly.
#[inline]
pub(crate) fn odd_power(s: f64, p: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.abs().powf(p) * s
    }
}

/// Largest ratios `‖·‖_Y/‖·‖_V`, `‖·‖_X/‖·‖_Y`, `‖·‖_H/‖·‖_X` observed on
/// random states: the (finite) imbedding constants of the chain realized on
/// the truncation. Reported, never assumed.
pub fn report_chain_constants(system: &EvolutionSystem, samples: usize, seed: u64) -> [f64; 3] {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0_f64; 3];
    for _ in 0..samples {
        let u: Vec<f64> = (0..system.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if u.iter().all(|x| *x == 0.0) {
            continue;
        }
        let n = system.norms();
        let (nv, ny, nx, nh) = (n.v(&u), n.y(&u), n.x(&u), n.h(&u));
        if nv > 0.0 {
            worst[0] = worst[0].max(ny / nv);
        }
        if ny > 0.0 {
            worst[1] = worst[1].max(nx / ny);
        }
        if nx > 0.0 {
            worst[2] = worst[2].max(nh / nx);
        }
    }
    worst
}
