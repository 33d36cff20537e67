//! The certificates behind the universal bound and decay claims.
//!
//! For a system `u'' + ∇F(u) + g(t, u') = 0` with `0 < α < β` the
//! certificates are:
//!
//! 1. the exponent `γ` built from `(α, β)` — minimum of the two branches
//!    for the bound for all positive times, maximum for the decay rate;
//! 2. the modified energy `Φ = E + ε·E^γ·⟨u, u'⟩` staying sandwiched
//!    between `E/2` and `3E/2` for a calibrated `ε`;
//! 3. the differential inequality `Φ' ≤ −ε·c·Φ^{γ+1} + const` evaluated
//!    analytically along trajectories;
//! 4. the explicit comparison majorant `Ψ(t)` dominating all solutions of
//!    such inequalities;
//! 5. fitted envelopes `Γt^{−1/γ} + Γ*` and `D·t^{−r}` (one-sided minimax
//!    fits — the claims are inequalities, not regressions).
//!
//! Assumption inequalities (coercivity, dissipativity, growth) are checked
//! on random states by [`verify_assumptions`], against declared constants
//! when a builder provides them and by fitting tightest constants
//! otherwise.

use crate::error::{Error, Result};
use crate::integrator::{self, OdeRhs, Trajectory};
use crate::models::{report_chain_constants, EvolutionSystem, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Energies below this are treated as exactly zero (the vanishing-energy
/// case of the decay analysis).
pub const ENERGY_VANISH: f64 = 1e-300;

/// Default cap for the calibrated sandwich parameter.
pub const EPSILON_MAX: f64 = 1.0;

/// Relative / absolute slack for inequality verdicts, applied to the
/// dominant term of each inequality.
pub const VERDICT_REL: f64 = 1e-9;
pub const VERDICT_ABS: f64 = 1e-12;

/// Which certificate's modified energy is in play: the bound certificate uses
/// the shifted energy `Ê = E₀ + C₁ + 1` and `γ = γ_min`; the decay
/// certificates use the plain `E₀` and `γ = γ_max` (or `α/2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateMode {
    Bound,
    Decay,
    StrongDecay,
}

/// The exponent pair of the two certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
    /// `min{α/2, (β−α)/((α+1)(β+2))}` — universal bound exponent.
    pub gamma_min: f64,
    /// `max` of the same two branches — universal decay exponent.
    pub gamma_max: f64,
}

impl Exponents {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() || !(alpha > 0.0) {
            return Err(Error::invalid(
                "alpha",
                "exponents must be positive and finite",
            ));
        }
        if alpha >= beta {
            return Err(Error::Regime { alpha, beta });
        }
        let a = alpha / 2.0;
        let b = (beta - alpha) / ((alpha + 1.0) * (beta + 2.0));
        Ok(Exponents {
            alpha,
            beta,
            gamma_min: a.min(b),
            gamma_max: a.max(b),
        })
    }

    /// `E₀(t) ≤ Γ t^{−bound_rate} + Γ*` for all positive t.
    pub fn bound_rate(&self) -> f64 {
        1.0 / self.gamma_min
    }

    /// `E₀(t) ≤ D t^{−decay_rate}` for t ≥ 1.
    pub fn decay_rate(&self) -> f64 {
        1.0 / self.gamma_max
    }

    /// Decay rate under the stronger quadratic-coercivity assumptions.
    pub fn strong_decay_rate(&self) -> f64 {
        2.0 / self.alpha
    }

    pub fn gamma(&self, mode: CertificateMode) -> f64 {
        match mode {
            CertificateMode::Bound => self.gamma_min,
            CertificateMode::Decay => self.gamma_max,
            CertificateMode::StrongDecay => 0.5 * self.alpha,
        }
    }
}

/// The explicit super-solution `Ψ(t) = (1/(γρt))^{1/γ} + (M/ρ)^{1/(1+γ)}`
/// dominating every nonnegative `Φ` with `Φ' ≤ −ρΦ^{1+γ} + M` on (0, T).
pub fn comparison_majorant(gamma: f64, rho: f64, m: f64, t: f64) -> Result<f64> {
    for (name, v) in [("gamma", gamma), ("rho", rho)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(name, "must be positive and finite"));
        }
    }
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::invalid("m", "must be nonnegative and finite"));
    }
    if !(t > 0.0) {
        return Err(Error::invalid(
            "t",
            "the majorant is defined for t > 0 only",
        ));
    }
    Ok((1.0 / (gamma * rho * t)).powf(1.0 / gamma) + (m / rho).powf(1.0 / (1.0 + gamma)))
}

struct PowerDecayRhs {
    rho: f64,
    gamma: f64,
    m: f64,
}

impl OdeRhs for PowerDecayRhs {
    fn eval(&mut self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        dydt[0] = -self.rho * y[0].max(0.0).powf(1.0 + self.gamma) + self.m;
    }
}

/// Integrates `Φ' = −ρΦ^{1+γ} + M` from `Φ(0⁺) = phi0` and returns the
/// largest `Φ(t) − Ψ(t)` over the span (nonpositive up to solver error).
pub fn comparison_oracle(
    gamma: f64,
    rho: f64,
    m: f64,
    phi0: f64,
    t_span: (f64, f64),
) -> Result<f64> {
    if !(phi0 >= 0.0) || !phi0.is_finite() {
        return Err(Error::invalid("phi0", "must be nonnegative and finite"));
    }
    let (lo, hi) = t_span;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("t_span", "need 0 < lo < hi"));
    }
    // Validate the remaining parameters through the majorant itself.
    comparison_majorant(gamma, rho, m, lo)?;

    let mut grid = vec![0.0];
    let mut t = lo;
    while t < hi {
        grid.push(t);
        t *= 1.05;
    }
    grid.push(hi);

    let mut rhs = PowerDecayRhs { rho, gamma, m };
    let states =
        integrator::integrate_ode_on_grid(&mut rhs, &[phi0], &grid, 1e-11, 1e-14, 50_000_000)?;

    let mut worst = f64::NEG_INFINITY;
    for (t, y) in grid.iter().zip(&states).skip(1) {
        let psi = comparison_majorant(gamma, rho, m, *t)?;
        worst = worst.max(y[0] - psi);
    }
    Ok(worst)
}

/// Additive constant of the shifted energy `Ê = E₀ + C₁ + 1`. Requires the
/// coercivity pair `(δ₁, C₁)` to be declared.
fn declared_c1(system: &EvolutionSystem) -> Result<f64> {
    match system.declared_constants() {
        Some(k) if k.delta1 > 0.0 => Ok(k.c1),
        _ => Err(Error::MissingConstant("C1 (declare the F-coercivity pair)")),
    }
}

/// The three energies at one state: classical `E₀`, shifted `Ê = E₀+C₁+1`,
/// and modified `Φ = base + ε·base^γ·⟨u, u'⟩` with `base = Ê` in bound mode
/// and `base = E₀` in the decay modes.
pub fn energies(
    system: &EvolutionSystem,
    state: &State,
    epsilon: f64,
    gamma: f64,
    mode: CertificateMode,
) -> Result<(f64, f64, f64)> {
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("epsilon", "must be nonnegative"));
    }
    let e0 = system.energy(state);
    let c1 = declared_c1(system)?;
    let ehat = e0 + c1 + 1.0;
    if ehat < 1.0 - 1e-12 {
        return Err(Error::ConstantsInconsistent(format!(
            "shifted energy {ehat} < 1 at t = {}: declared C1 = {c1} does not bound F from below",
            state.t
        )));
    }
    let base = match mode {
        CertificateMode::Bound => ehat,
        _ => e0,
    };
    let cross = system.norms().pairing(&state.u, &state.v);
    let phi = if base <= ENERGY_VANISH {
        0.0
    } else {
        base + epsilon * base.powf(gamma) * cross
    };
    Ok((e0, ehat, phi))
}

fn base_and_cross(
    system: &EvolutionSystem,
    state: &State,
    mode: CertificateMode,
) -> Result<(f64, f64)> {
    let e0 = system.energy(state);
    let base = match mode {
        CertificateMode::Bound => e0 + declared_c1(system)? + 1.0,
        _ => e0,
    };
    Ok((base, system.norms().pairing(&state.u, &state.v)))
}

/// Whether `½·base ≤ Φ(ε) ≤ 3/2·base` holds at every sample.
fn sandwich_holds(
    system: &EvolutionSystem,
    trajectory: &Trajectory,
    epsilon: f64,
    gamma: f64,
    mode: CertificateMode,
) -> Result<bool> {
    for state in trajectory.samples() {
        let (base, cross) = base_and_cross(system, state, mode)?;
        if base <= ENERGY_VANISH {
            continue;
        }
        let perturbation = epsilon * base.powf(gamma) * cross.abs();
        let slack = VERDICT_REL * base + VERDICT_ABS;
        if perturbation > 0.5 * base + slack {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest `ε` (bisection to 1% relative, capped at `epsilon_max`) keeping
/// the modified energy sandwiched at every sample of the trajectory.
pub fn calibrate_epsilon(
    system: &EvolutionSystem,
    trajectory: &Trajectory,
    gamma: f64,
    mode: CertificateMode,
    epsilon_max: f64,
) -> Result<f64> {
    if trajectory.samples().is_empty() {
        return Err(Error::invalid("trajectory", "is empty"));
    }
    if !(epsilon_max > 0.0) {
        return Err(Error::invalid("epsilon_max", "must be positive"));
    }
    if sandwich_holds(system, trajectory, epsilon_max, gamma, mode)? {
        return Ok(epsilon_max);
    }
    let mut lo = 0.0_f64;
    let mut hi = epsilon_max;
    while hi - lo > 0.01 * hi {
        let mid = 0.5 * (lo + hi);
        if sandwich_holds(system, trajectory, mid, gamma, mode)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.max(f64::MIN_POSITIVE))
}

/// Per-sample residuals of the differential inequality and their verdict.
#[derive(Debug, Clone, Serialize)]
pub struct DifferentialInequality {
    /// `Φ' + ε·c·(2/3)^{γ+1}·Φ^{γ+1} − additive` per sample (≤ 0 is the
    /// claimed decay); `c = δ₂/8`, `additive = 3C₃/2 + 2` in bound mode,
    /// `c = δ₂/4`, `additive = 0` in the decay modes.
    pub residuals: Vec<f64>,
    /// All residuals nonpositive up to the verdict slack.
    pub holds: bool,
    pub max_residual: f64,
}

/// Evaluates the differential inequality for the modified energy along a
/// trajectory. `dΦ/dt` comes from the analytic expression
///
/// ```text
/// Φ' = −⟨g,v⟩·(1 + γ·ε·base^{γ−1}·⟨u,v⟩) + ε·base^γ·(‖v‖² − ⟨∇F(u),u⟩)
///      − ε·base^γ·⟨g,u⟩
/// ```
///
/// evaluated at the samples, never from numerical differencing, so
/// integrator noise cannot masquerade as a certificate violation.
pub fn differential_inequality_residual(
    system: &EvolutionSystem,
    trajectory: &Trajectory,
    epsilon: f64,
    gamma: f64,
    mode: CertificateMode,
) -> Result<DifferentialInequality> {
    let constants = system
        .declared_constants()
        .ok_or(Error::MissingConstant("delta2"))?;
    if !(constants.delta2 > 0.0) {
        return Err(Error::MissingConstant("delta2"));
    }
    let (coef, additive) = match mode {
        CertificateMode::Bound => {
            if !(constants.delta3 > 0.0) {
                return Err(Error::MissingConstant(
                    "C3 (declare the dissipativity pair)",
                ));
            }
            (constants.delta2 / 8.0, 1.5 * constants.c3 + 2.0)
        }
        _ => (constants.delta2 / 4.0, 0.0),
    };
    let shrink = (2.0_f64 / 3.0).powf(gamma + 1.0);

    let mut residuals = Vec::with_capacity(trajectory.samples().len());
    let mut max_residual = f64::NEG_INFINITY;
    let mut holds = true;
    for state in trajectory.samples() {
        let (base, cross) = base_and_cross(system, state, mode)?;
        let (phi_dot, phi) = if base <= ENERGY_VANISH {
            (0.0, 0.0)
        } else {
            let g = system.damping(state.t, &state.v);
            let grad = system.grad_potential(&state.u);
            let norms = system.norms();
            let gv = norms.pairing(&g, &state.v);
            let gu = norms.pairing(&g, &state.u);
            let grad_u = norms.pairing(&grad, &state.u);
            let vv = {
                let n = norms.h(&state.v);
                n * n
            };
            let bg = base.powf(gamma);
            let phi_dot = -gv * (1.0 + gamma * epsilon * base.powf(gamma - 1.0) * cross)
                + epsilon * bg * (vv - grad_u)
                - epsilon * bg * gu;
            (phi_dot, base + epsilon * bg * cross)
        };
        let claim = epsilon * coef * shrink * phi.max(0.0).powf(gamma + 1.0);
        let residual = phi_dot + claim - additive;
        residuals.push(residual);
        max_residual = max_residual.max(residual);
        let scale = phi_dot.abs().max(claim).max(additive.abs());
        if residual > VERDICT_REL * scale + VERDICT_ABS {
            holds = false;
        }
    }
    Ok(DifferentialInequality {
        residuals,
        holds,
        max_residual,
    })
}

/// A fitted one-sided envelope `value(t) = coefficient·t^{−rate} + offset`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Envelope {
    pub rate: f64,
    pub coefficient: f64,
    pub offset: f64,
}

impl Envelope {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficient * t.powf(-self.rate) + self.offset
    }
}

/// Smallest envelope constants covering a trajectory (minimax over
/// samples: the certified statements are one-sided inequalities, so the fit is the
/// tightest cover, not a regression).
///
/// Bound mode covers `Ê(t) ≤ Γ t^{−1/γ_min} + Γ*` on t > 0, taking `Γ*` as
/// the late-time ceiling (largest `Ê` over the final time decade) and `Γ`
/// as the smallest transient constant given `Γ*`. The decay modes cover
/// `E₀(t) ≤ D·t^{−r}` on t ≥ 1 with `D = sup E₀·t^r` exactly.
pub fn verify_bound(
    system: &EvolutionSystem,
    trajectory: &Trajectory,
    exponents: &Exponents,
    mode: CertificateMode,
) -> Result<Envelope> {
    match mode {
        CertificateMode::Bound => {
            let c1 = declared_c1(system)?;
            let samples: Vec<(f64, f64)> = trajectory
                .samples()
                .iter()
                .filter(|s| s.t > 0.0)
                .map(|s| (s.t, system.energy(s) + c1 + 1.0))
                .collect();
            if samples.is_empty() {
                return Err(Error::EmptyWindow {
                    lo: 0.0,
                    hi: f64::INFINITY,
                    found: 0,
                    need: 1,
                });
            }
            let rate = exponents.bound_rate();
            let t_max = samples.iter().map(|(t, _)| *t).fold(0.0, f64::max);
            let offset = samples
                .iter()
                .filter(|(t, _)| *t >= t_max / 10.0)
                .map(|(_, e)| *e)
                .fold(0.0, f64::max);
            let coefficient = samples
                .iter()
                .map(|(t, e)| (e - offset).max(0.0) * t.powf(rate))
                .fold(0.0, f64::max);
            Ok(Envelope {
                rate,
                coefficient,
                offset,
            })
        }
        CertificateMode::Decay | CertificateMode::StrongDecay => {
            let rate = match mode {
                CertificateMode::Decay => exponents.decay_rate(),
                _ => exponents.strong_decay_rate(),
            };
            let mut found = 0usize;
            let mut d = 0.0_f64;
            for s in trajectory.samples() {
                if s.t >= 1.0 {
                    found += 1;
                    let e = system.energy(s);
                    if e > ENERGY_VANISH {
                        d = d.max(e * s.t.powf(rate));
                    }
                }
            }
            if found == 0 {
                return Err(Error::EmptyWindow {
                    lo: 1.0,
                    hi: f64::INFINITY,
                    found: 0,
                    need: 1,
                });
            }
            Ok(Envelope {
                rate,
                coefficient: d,
                offset: 0.0,
            })
        }
    }
}

/// Least-squares power-law fit over a window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitResult {
    /// Slope of log E vs log t.
    pub slope: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Least-squares slope of `log e` vs `log t` restricted to
/// `window.0 ≤ t ≤ window.1`. Needs at least 10 samples; refuses windows
/// containing vanished energies (log undefined — the envelope statement is
/// trivial there anyway).
pub fn fit_power_law(ts: &[f64], es: &[f64], window: (f64, f64)) -> Result<FitResult> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, e) in ts.iter().zip(es) {
        if *t >= window.0 && *t <= window.1 {
            if *e <= ENERGY_VANISH {
                return Err(Error::FitRefused(format!(
                    "energy vanished (E = {e}) at t = {t} inside the fit window"
                )));
            }
            if *t <= 0.0 {
                return Err(Error::FitRefused(format!("nonpositive time {t} in window")));
            }
            xs.push(t.ln());
            ys.push(e.ln());
        }
    }
    let n = xs.len();
    if n < 10 {
        return Err(Error::EmptyWindow {
            lo: window.0,
            hi: window.1,
            found: n,
            need: 10,
        });
    }
    let nf = n as f64;
    let x_bar = xs.iter().sum::<f64>() / nf;
    let y_bar = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_bar) * (y - y_bar))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let stderr = (ss_res / ((nf - 2.0).max(1.0)) / sxx).sqrt();
    Ok(FitResult {
        slope,
        stderr,
        samples: n,
    })
}

/// Power-law fit of the classical energy of a trajectory over a window.
pub fn fit_decay_exponent(
    system: &EvolutionSystem,
    trajectory: &Trajectory,
    window: (f64, f64),
) -> Result<FitResult> {
    let ts: Vec<f64> = trajectory.times().collect();
    let es = trajectory.energies(system);
    fit_power_law(&ts, &es, window)
}

/// One assumption inequality: declared-constants verdict and/or fitted
/// tightest constants.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    /// (leading, additive) constants declared by the builder, if any.
    pub declared: Option<(f64, f64)>,
    /// Verdict of the declared constants over all samples.
    pub holds_declared: Option<bool>,
    /// Worst signed violation of the declared inequality (positive means
    /// violated) and the time/state-amplitude where it happened.
    pub worst_violation: Option<(f64, f64)>,
    /// Tightest constants consistent with every sample.
    pub fitted: (f64, f64),
}

/// Sampling report over all assumption inequalities.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub samples: usize,
    pub amplitude_range: (f64, f64),
    pub f2: AssumptionCheck,
    pub f3: AssumptionCheck,
    pub f4: AssumptionCheck,
    pub g2: AssumptionCheck,
    pub g3: AssumptionCheck,
    pub norms_c5: AssumptionCheck,
    /// Observed imbedding constants of the chain `V ⊆ Y ⊆ X ⊆ H`
    /// (‖·‖_Y/‖·‖_V, ‖·‖_X/‖·‖_Y, ‖·‖_H/‖·‖_X maxima).
    pub chain_constants: [f64; 3],
}

impl AssumptionReport {
    pub fn checks(&self) -> [&AssumptionCheck; 6] {
        [
            &self.f2,
            &self.f3,
            &self.f4,
            &self.g2,
            &self.g3,
            &self.norms_c5,
        ]
    }
}

/// Direction of an inequality with two constants.
enum Form {
    /// `lhs ≥ lead·rhs − additive`
    LowerWithSlack,
    /// `lhs ≥ lead·rhs`
    Lower,
    /// `lhs ≤ lead·rhs + additive`
    UpperWithSlack,
    /// `lhs ≤ lead·rhs`
    Upper,
}

fn check_assumption(
    name: &'static str,
    pairs: &[(f64, f64, f64)], // (lhs, rhs, amplitude)
    declared: Option<(f64, f64)>,
    form: Form,
) -> AssumptionCheck {
    // Declared verdict.
    let mut holds = declared.map(|_| true);
    let mut worst: Option<(f64, f64)> = None;
    if let Some((lead, additive)) = declared {
        for &(lhs, rhs, amp) in pairs {
            let (violation, scale) = match form {
                Form::LowerWithSlack => (lead * rhs - additive - lhs, (lead * rhs).abs()),
                Form::Lower => (lead * rhs - lhs, (lead * rhs).abs()),
                Form::UpperWithSlack => (lhs - lead * rhs - additive, lhs.abs()),
                Form::Upper => (lhs - lead * rhs, lhs.abs()),
            };
            let tol = VERDICT_REL * scale.max(lhs.abs()) + VERDICT_ABS;
            if violation > tol {
                holds = Some(false);
            }
            if worst.is_none_or(|(w, _)| violation > w) {
                worst = Some((violation, amp));
            }
        }
    }

    // Tightest constants consistent with all samples. With an additive
    // slack the leading constant is the growth rate, so it comes from the
    // large-amplitude half and the additive constant absorbs the rest;
    // without slack every sample constrains the leading constant.
    let mut by_rhs: Vec<(f64, f64)> = pairs.iter().map(|&(l, r, _)| (l, r)).collect();
    by_rhs.sort_by(|a, b| a.1.total_cmp(&b.1));
    let top = match form {
        Form::LowerWithSlack | Form::UpperWithSlack => &by_rhs[by_rhs.len() / 2..],
        Form::Lower | Form::Upper => &by_rhs[..],
    };
    let lead = match form {
        Form::LowerWithSlack | Form::Lower => top
            .iter()
            .filter(|(_, r)| *r > 0.0)
            .map(|(l, r)| l / r)
            .fold(f64::INFINITY, f64::min)
            .max(0.0),
        Form::UpperWithSlack | Form::Upper => top
            .iter()
            .filter(|(_, r)| *r > 0.0)
            .map(|(l, r)| l / r)
            .fold(0.0, f64::max),
    };
    let lead = if lead.is_finite() { lead } else { 0.0 };
    let additive = match form {
        Form::LowerWithSlack => pairs
            .iter()
            .map(|&(l, r, _)| lead * r - l)
            .fold(0.0, f64::max),
        Form::UpperWithSlack => pairs
            .iter()
            .map(|&(l, r, _)| l - lead * r)
            .fold(0.0, f64::max),
        Form::Lower | Form::Upper => 0.0,
    };

    AssumptionCheck {
        name,
        declared,
        holds_declared: holds,
        worst_violation: worst,
        fitted: (lead, additive),
    }
}

/// Evaluates every assumption inequality on `sample_count` random states
/// with amplitudes log-uniform over `amplitude_range`; checks declared
/// constants when present and fits the tightest constants from the samples
/// either way. Violations are report content, not errors.
pub fn verify_assumptions(
    system: &EvolutionSystem,
    sample_count: usize,
    amplitude_range: (f64, f64),
    seed: u64,
) -> Result<AssumptionReport> {
    if sample_count < 1000 {
        return Err(Error::invalid("sample_count", "need at least 1000 samples"));
    }
    let (lo, hi) = amplitude_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("amplitude_range", "need 0 < lo < hi"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = system.dim();
    let norms = system.norms();
    let (alpha, beta) = (system.alpha(), system.beta());

    let mut f2 = Vec::with_capacity(sample_count);
    let mut f3 = Vec::with_capacity(sample_count);
    let mut f4 = Vec::with_capacity(sample_count);
    let mut g2 = Vec::with_capacity(sample_count);
    let mut g3 = Vec::with_capacity(sample_count);
    let mut c5 = Vec::with_capacity(sample_count);

    let random_state = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let amp = lo * (hi / lo).powf(rng.gen::<f64>());
        let mut x: Vec<f64> = (0..dim)
            .map(|_| {
                // Box–Muller normal
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen::<f64>();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let n = norms.h(&x);
        if n > 0.0 {
            for xi in x.iter_mut() {
                *xi *= amp / n;
            }
        }
        x
    };

    for _ in 0..sample_count {
        let u = random_state(&mut rng);
        let v = random_state(&mut rng);
        let t = rng.gen_range(0.0..std::f64::consts::TAU);

        let f = system.potential(&u);
        let grad = system.grad_potential(&u);
        let g = system.damping(t, &v);
        let amp_u = norms.h(&u);
        let amp_v = norms.h(&v);

        let ny = norms.y(&u);
        f2.push((f, ny.powf(beta + 2.0), amp_u));
        f3.push((norms.pairing(&grad, &u), f, amp_u));
        f4.push((f, amp_u * amp_u, amp_u));
        let nxv = norms.x(&v);
        g2.push((norms.pairing(&g, &v), nxv.powf(alpha + 2.0), amp_v));
        g3.push((norms.x_dual(&g), nxv.powf(alpha + 1.0), amp_v));
        let nxu = norms.x(&u);
        c5.push((
            nxu.powf(alpha + 2.0),
            amp_u * amp_u + ny.powf(beta + 2.0),
            amp_u,
        ));
    }

    let k = system.declared_constants();
    let decl = |lead: Option<f64>, additive: f64| lead.map(|l| (l, additive));
    let declared_f2 = k.and_then(|k| decl((k.delta1 > 0.0).then_some(k.delta1), k.c1));
    let declared_f3 = k.and_then(|k| decl((k.delta2 > 0.0).then_some(k.delta2), k.c2));
    let declared_f4 = k.and_then(|k| decl((k.delta4 > 0.0).then_some(k.delta4), 0.0));
    let declared_g2 = k.and_then(|k| decl((k.delta3 > 0.0).then_some(k.delta3), k.c3));
    let declared_g3 = k.and_then(|k| decl((k.d4 > 0.0).then_some(k.d4), k.c4));
    let declared_c5 = k.and_then(|k| decl((k.c5 > 0.0).then_some(k.c5), 0.0));

    Ok(AssumptionReport {
        samples: sample_count,
        amplitude_range,
        f2: check_assumption("F2", &f2, declared_f2, Form::LowerWithSlack),
        f3: check_assumption("F3", &f3, declared_f3, Form::LowerWithSlack),
        f4: check_assumption("F4", &f4, declared_f4, Form::Lower),
        g2: check_assumption("G2", &g2, declared_g2, Form::LowerWithSlack),
        g3: check_assumption("G3", &g3, declared_g3, Form::UpperWithSlack),
        norms_c5: check_assumption("norms", &c5, declared_c5, Form::Upper),
        chain_constants: report_chain_constants(system, sample_count.min(2000), seed ^ 0x9e37),
    })
}

/// One row of the per-sample certificate table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertificateSample {
    pub t: f64,
    pub e0: f64,
    pub ehat: f64,
    pub phi: f64,
    pub cross: f64,
    /// Distance from the nearest sandwich wall, normalized by the base
    /// energy (negative means outside).
    pub equivalence_margin: f64,
    pub inequality_residual: f64,
}

/// Full certificate evaluation of one trajectory: calibrated ε, per-sample
/// energies, sandwich and differential-inequality verdicts, and the three
/// fitted envelopes.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub mode: CertificateMode,
    pub gamma: f64,
    pub epsilon_star: f64,
    /// ε actually used for the inequality (ε*/2: strictly inside the
    /// admissible range).
    pub epsilon: f64,
    pub samples: Vec<CertificateSample>,
    pub sandwich_holds: bool,
    pub inequality_holds: bool,
    pub max_inequality_residual: f64,
    pub bound: Envelope,
    pub decay: Envelope,
    pub strong_decay: Envelope,
}

/// Runs the whole certificate pipeline on one trajectory.
pub fn certify(
    system: &EvolutionSystem,
    trajectory: &Trajectory,
    exponents: &Exponents,
    mode: CertificateMode,
) -> Result<CertificateReport> {
    let gamma = exponents.gamma(mode);
    let epsilon_star = calibrate_epsilon(system, trajectory, gamma, mode, EPSILON_MAX)?;
    let epsilon = 0.5 * epsilon_star;
    let ineq = differential_inequality_residual(system, trajectory, epsilon, gamma, mode)?;
    let sandwich = sandwich_holds(system, trajectory, epsilon, gamma, mode)?;

    let mut samples = Vec::with_capacity(trajectory.samples().len());
    for (state, residual) in trajectory.samples().iter().zip(&ineq.residuals) {
        let (e0, ehat, phi) = energies(system, state, epsilon, gamma, mode)?;
        let base = match mode {
            CertificateMode::Bound => ehat,
            _ => e0,
        };
        let margin = if base <= ENERGY_VANISH {
            0.5
        } else {
            (phi - 0.5 * base).min(1.5 * base - phi) / base
        };
        samples.push(CertificateSample {
            t: state.t,
            e0,
            ehat,
            phi,
            cross: system.norms().pairing(&state.u, &state.v),
            equivalence_margin: margin,
            inequality_residual: *residual,
        });
    }

    Ok(CertificateReport {
        mode,
        gamma,
        epsilon_star,
        epsilon,
        samples,
        sandwich_holds: sandwich,
        inequality_holds: ineq.holds,
        max_inequality_residual: ineq.max_residual,
        bound: verify_bound(system, trajectory, exponents, CertificateMode::Bound)?,
        decay: verify_bound(system, trajectory, exponents, CertificateMode::Decay).unwrap_or(
            Envelope {
                rate: exponents.decay_rate(),
                coefficient: f64::NAN,
                offset: 0.0,
            },
        ),
        strong_decay: verify_bound(system, trajectory, exponents, CertificateMode::StrongDecay)
            .unwrap_or(Envelope {
                rate: exponents.strong_decay_rate(),
                coefficient: f64::NAN,
                offset: 0.0,
            }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, Tolerances};
    use crate::models::build_scalar_ode;
    use approx::assert_relative_eq;

    #[test]
    fn exponents_hand_values() {
        let e = Exponents::new(1.0, 3.0).unwrap();
        assert_relative_eq!(e.gamma_min, 0.2, epsilon = 1e-15);
        assert_relative_eq!(e.gamma_max, 0.5, epsilon = 1e-15);
        assert_relative_eq!(e.bound_rate(), 5.0, epsilon = 1e-12);
        assert_relative_eq!(e.decay_rate(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(e.strong_decay_rate(), 2.0, epsilon = 1e-15);

        // the two branches coincide at alpha = beta/(beta+2)
        let e = Exponents::new(0.5, 2.0).unwrap();
        assert_relative_eq!(e.gamma_min, 0.25, epsilon = 1e-15);
        assert_relative_eq!(e.gamma_max, 0.25, epsilon = 1e-15);

        let e = Exponents::new(1.0, 2.0).unwrap();
        assert_relative_eq!(e.gamma_min, 0.125, epsilon = 1e-15);
        assert_relative_eq!(e.decay_rate(), 2.0, epsilon = 1e-12);

        assert!(matches!(
            Exponents::new(2.0, 1.0),
            Err(Error::Regime { .. })
        ));
        assert!(Exponents::new(1.0, 1.0).is_err());
    }

    #[test]
    fn majorant_hand_values() {
        assert_relative_eq!(
            comparison_majorant(1.0, 1.0, 0.0, 2.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        // (1/(0.2·1·1))^{1/0.2} = 5^5
        assert_relative_eq!(
            comparison_majorant(0.2, 1.0, 0.0, 1.0).unwrap(),
            3125.0,
            max_relative = 1e-12
        );
        // limits of the power law
        assert!(comparison_majorant(0.7, 2.0, 0.0, 1e12).unwrap() < 1e-8);
        assert!(comparison_majorant(0.7, 2.0, 0.0, 1e-12).unwrap() > 1e8);
        assert!(comparison_majorant(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(comparison_majorant(1.0, 1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn oracle_stays_under_majorant() {
        // exact solution for γ=1, ρ=1, M=0 is 1/(t + 1/phi0) ≤ 1/t
        let worst = comparison_oracle(1.0, 1.0, 0.0, 1e6, (0.01, 100.0)).unwrap();
        assert!(worst <= 1e-8, "violation {worst}");
        // phi0 = 0, M = 0: identically zero
        let worst = comparison_oracle(0.5, 2.0, 0.0, 0.0, (0.01, 10.0)).unwrap();
        assert!(worst <= 0.0);
        // with a source term
        let worst = comparison_oracle(0.5, 2.0, 3.0, 1e3, (0.01, 100.0)).unwrap();
        assert!(worst <= 1e-8, "violation {worst}");
    }

    #[test]
    fn energies_hand_values() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let (e0, ehat, phi) =
            energies(&sys, &State::zero(0.0, 1), 0.0, 0.2, CertificateMode::Bound).unwrap();
        assert_eq!(e0, 0.0);
        assert_eq!(ehat, 1.0);
        assert_eq!(phi, 1.0);

        let sys = build_scalar_ode(1.0, 2.0).unwrap();
        let (e0, _, _) = energies(
            &sys,
            &State::new(0.0, vec![1.0], vec![1.0]),
            0.0,
            0.125,
            CertificateMode::Decay,
        )
        .unwrap();
        assert_relative_eq!(e0, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn phi_equals_base_when_cross_vanishes() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        // v = 0 makes ⟨u, v⟩ = 0
        let state = State::new(0.0, vec![2.0], vec![0.0]);
        for eps in [0.0, 0.3, 1.0] {
            let (_, ehat, phi) = energies(&sys, &state, eps, 0.2, CertificateMode::Bound).unwrap();
            assert_eq!(phi, ehat);
        }
    }

    fn scalar_trajectory(
        amplitude: f64,
        t_end: f64,
    ) -> (crate::models::EvolutionSystem, Trajectory) {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let state = State::new(0.0, vec![amplitude], vec![0.0]);
        let traj = integrate(&sys, &state, (0.0, t_end), &Tolerances::default()).unwrap();
        (sys, traj)
    }

    #[test]
    fn epsilon_calibration_brackets_the_sandwich() {
        let (sys, traj) = scalar_trajectory(10.0, 10.0);
        let eps = calibrate_epsilon(&sys, &traj, 0.2, CertificateMode::Bound, EPSILON_MAX).unwrap();
        assert!(eps > 0.0);
        assert!(sandwich_holds(&sys, &traj, eps, 0.2, CertificateMode::Bound).unwrap());
        if eps < EPSILON_MAX {
            // doubling past the calibrated value must break the sandwich
            assert!(!sandwich_holds(&sys, &traj, 2.0 * eps, 0.2, CertificateMode::Bound).unwrap());
        }
    }

    #[test]
    fn zero_position_trajectory_accepts_any_epsilon() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let samples = (0..20)
            .map(|i| State::new(i as f64 * 0.1, vec![0.0], vec![0.0]))
            .collect();
        let traj = Trajectory::from_samples(samples, Tolerances::default());
        let eps = calibrate_epsilon(&sys, &traj, 0.2, CertificateMode::Bound, EPSILON_MAX).unwrap();
        assert_eq!(eps, EPSILON_MAX);
    }

    #[test]
    fn differential_inequality_holds_at_half_epsilon_star() {
        let (sys, traj) = scalar_trajectory(10.0, 10.0);
        let gamma = 0.2;
        let eps =
            calibrate_epsilon(&sys, &traj, gamma, CertificateMode::Bound, EPSILON_MAX).unwrap();
        let report =
            differential_inequality_residual(&sys, &traj, eps / 2.0, gamma, CertificateMode::Bound)
                .unwrap();
        assert!(report.holds, "max residual {}", report.max_residual);
        assert_eq!(report.residuals.len(), traj.samples().len());
    }

    #[test]
    fn wave_trajectory_certifies_end_to_end() {
        use crate::models::{build_galerkin_wave, PdeParams};
        let mut params = PdeParams::new(6, 16);
        params.alpha = 1.0;
        params.beta = 2.0;
        let system = build_galerkin_wave(&params).unwrap();
        let mut u0 = vec![0.0; 6];
        u0[0] = 2.0;
        u0[2] = -0.7;
        let state = State::new(0.0, u0, vec![0.0; 6]);
        let mut grid = vec![0.0];
        let mut t = 0.01f64;
        while t < 20.0 {
            grid.push(t);
            t *= 1.1;
        }
        grid.push(20.0);
        let trajectory =
            crate::integrator::integrate_on_grid(&system, &state, &grid, &Tolerances::default())
                .unwrap();
        let exponents = Exponents::new(1.0, 2.0).unwrap();
        let report = certify(&system, &trajectory, &exponents, CertificateMode::Bound).unwrap();
        assert!(report.epsilon_star > 0.0);
        assert!(report.sandwich_holds);
        assert!(
            report.inequality_holds,
            "max {}",
            report.max_inequality_residual
        );
        assert!(report.bound.coefficient.is_finite());
        assert!(report.decay.coefficient.is_finite() && report.decay.coefficient > 0.0);
        // the recorded samples carry the inequality residuals per time
        assert_eq!(report.samples.len(), trajectory.samples().len());
    }

    #[test]
    fn overlarge_epsilon_reports_violations_without_failing() {
        // far beyond the admissible range the inequality breaks: that is a
        // reported diagnostic, not an error
        let (sys, traj) = scalar_trajectory(10.0, 10.0);
        let gamma = 0.2;
        let eps =
            calibrate_epsilon(&sys, &traj, gamma, CertificateMode::Bound, EPSILON_MAX).unwrap();
        let report =
            differential_inequality_residual(&sys, &traj, 1e3 * eps, gamma, CertificateMode::Bound)
                .unwrap();
        assert!(!report.holds);
        assert!(report.max_residual > 0.0);
    }

    #[test]
    fn neumann_wave_with_positive_lambda_violates_free_coercivity() {
        // with lambda > 0 under Neumann conditions the C1 = 0 coercivity
        // pair fails on constant states of small amplitude
        use crate::models::{build_galerkin_wave, AssumptionConstants, Boundary, PdeParams};
        let mut params = PdeParams::new(4, 10);
        params.boundary = Boundary::Neumann;
        params.lambda = 0.5;
        params.alpha = 1.0;
        params.beta = 2.0;
        let candidate = AssumptionConstants {
            delta1: params.b / (params.beta + 2.0),
            c1: 0.0,
            delta2: 2.0,
            ..Default::default()
        };
        let system = build_galerkin_wave(&params)
            .unwrap()
            .with_declared_constants(candidate);
        let report = verify_assumptions(&system, 1000, (1e-2, 1e2), 77).unwrap();
        assert_eq!(report.f2.holds_declared, Some(false));
        let (violation, _) = report.f2.worst_violation.unwrap();
        assert!(violation > 0.0);
    }

    #[test]
    fn rest_state_residual_matches_hand_formula() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let samples = vec![State::zero(0.0, 1), State::zero(1.0, 1)];
        let traj = Trajectory::from_samples(samples, Tolerances::default());
        let eps = 1.0;
        let gamma = 0.2;
        let report =
            differential_inequality_residual(&sys, &traj, eps, gamma, CertificateMode::Bound)
                .unwrap();
        // Φ = Ê = 1 at rest, Φ' = 0: residual = ε·δ₂/8·(2/3)^{γ+1} − 2
        let expected = eps * (5.0 / 8.0) * (2.0_f64 / 3.0).powf(1.2) - 2.0;
        for r in &report.residuals {
            assert_relative_eq!(*r, expected, max_relative = 1e-12);
        }
        assert!(report.holds);
    }

    #[test]
    fn decay_fit_is_exact_on_synthetic_power_law() {
        // E₀(t) = 7 t⁻²: pick u = 0, v = √(2E)
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let samples: Vec<State> = (0..60)
            .map(|i| {
                let t = 1.0 * 1.2_f64.powi(i);
                let e = 7.0 * t.powi(-2);
                State::new(t, vec![0.0], vec![(2.0 * e).sqrt()])
            })
            .collect();
        let traj = Trajectory::from_samples(samples, Tolerances::default());
        let fit = fit_decay_exponent(&sys, &traj, (1.0, 1e6)).unwrap();
        assert_relative_eq!(fit.slope, -2.0, epsilon = 1e-10);
        assert!(fit.stderr < 1e-10);

        let exps = Exponents::new(1.0, 3.0).unwrap();
        let env = verify_bound(&sys, &traj, &exps, CertificateMode::Decay).unwrap();
        // minimax D reproduces sup E·t² exactly
        assert_relative_eq!(env.coefficient, 7.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_energy_trajectory_gives_zero_decay_constant() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let samples: Vec<State> = (0..20).map(|i| State::zero(1.0 + i as f64, 1)).collect();
        let traj = Trajectory::from_samples(samples, Tolerances::default());
        let exps = Exponents::new(1.0, 3.0).unwrap();
        let env = verify_bound(&sys, &traj, &exps, CertificateMode::Decay).unwrap();
        assert_eq!(env.coefficient, 0.0);
    }

    #[test]
    fn fit_refuses_vanished_energy_and_short_windows() {
        let err = fit_power_law(&[1.0, 2.0, 3.0], &[1.0, 0.0, 0.5], (0.5, 3.5)).unwrap_err();
        assert!(matches!(err, Error::FitRefused(_)));
        let ts: Vec<f64> = (0..5).map(|i| 1.0 + i as f64).collect();
        let es = vec![1.0; 5];
        assert!(matches!(
            fit_power_law(&ts, &es, (0.0, 10.0)),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn scalar_assumptions_confirmed_by_sampling() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let report = verify_assumptions(&sys, 1000, (1e-2, 1e2), 42).unwrap();
        assert_eq!(report.f2.holds_declared, Some(true));
        assert_eq!(report.f3.holds_declared, Some(true));
        assert_eq!(report.g2.holds_declared, Some(true));
        assert_eq!(report.g3.holds_declared, Some(true));
        assert_eq!(report.norms_c5.holds_declared, Some(true));
        // delta2 = beta + 2 is an identity for the power law, so the fitted
        // value matches it tightly.
        assert_relative_eq!(report.f3.fitted.0, 5.0, max_relative = 1e-9);
        // F4 has no positive constant: the fitted delta4 collapses with the
        // smallest sampled amplitude.
        assert!(report.f4.fitted.0 < 1e-3);
    }
}
