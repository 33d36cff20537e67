//! Adaptive time integration with a per-step energy-identity certificate.
//!
//! The stepper is the Dormand–Prince 5(4) embedded explicit pair. The state
//! is augmented with the running dissipation integral
//! `w(t) = ∫ ⟨g(s, u'(s)), u'(s)⟩ ds`, integrated by the same pair, so the
//! identity `E₀' = −⟨g(t, u'), u'⟩` becomes conservation of `E₀ + w` and
//! every step can be checked against it at stepper order. A step is
//! accepted only when both the embedded error estimate and the energy
//! residual per unit time pass; otherwise it is halved.
//!
//! Residual normalization: all reported energy residuals are divided by
//! `max(1, local E₀ scale)`. Below energy 1 this is the plain absolute
//! residual; at large amplitudes it is the only contract representable in
//! f64 (the rounding floor of `E₀` itself is `ε·E₀`). The dissipation
//! accumulator is compensated (Kahan) and reset at every output sample, so
//! interval residuals depend on endpoint values only, not on step count.

use crate::error::{Error, Result};
use crate::models::{EvolutionSystem, State};

/// Step-size and acceptance control parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Tolerances {
    /// Relative local truncation tolerance.
    pub rel_tol: f64,
    /// Absolute local truncation tolerance.
    pub abs_tol: f64,
    /// Allowed energy-identity violation per unit time (normalized by the
    /// local energy scale, see module docs).
    pub energy_tol: f64,
    /// Step-size floor; rescaled by the initial amplitude before the first
    /// step (superlinear damping forces ~ amplitude^{α+1}).
    pub dt_min: f64,
    /// Step-size ceiling.
    pub dt_max: f64,
    /// Hard cap on accepted+rejected steps per trajectory.
    pub max_steps: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            energy_tol: 1e-8,
            dt_min: 1e-14,
            dt_max: 1.0,
            max_steps: 50_000_000,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("energy_tol", self.energy_tol),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be positive and finite"));
            }
        }
        if self.dt_min > self.dt_max {
            return Err(Error::invalid("dt_min", "must not exceed dt_max"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be positive"));
        }
        Ok(())
    }
}

/// A time-ordered sequence of snapshots with per-interval energy-balance
/// data. `dissipation[i]` is the stepper-integrated `∫⟨g, v⟩dt` over
/// `[t_i, t_{i+1}]`; `energy_residuals[i]` is
/// `|ΔE₀ + dissipation| / (Δt · max(1, E₀ scale))` over that interval.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<State>,
    dissipation: Vec<f64>,
    energy_residuals: Vec<f64>,
    tolerances: Tolerances,
    steps_accepted: u64,
    steps_rejected: u64,
}

impl Trajectory {
    /// Wraps precomputed samples (no residual data); for synthetic fixtures.
    #[doc(hidden)]
    pub fn from_samples(samples: Vec<State>, tolerances: Tolerances) -> Self {
        let n = samples.len().saturating_sub(1);
        Trajectory {
            samples,
            dissipation: vec![0.0; n],
            energy_residuals: vec![0.0; n],
            tolerances,
            steps_accepted: 0,
            steps_rejected: 0,
        }
    }

    pub fn samples(&self) -> &[State] {
        &self.samples
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn first(&self) -> &State {
        &self.samples[0]
    }

    pub fn last(&self) -> &State {
        self.samples.last().expect("trajectory is never empty")
    }

    /// Per-interval dissipation integrals `∫⟨g, v⟩dt`.
    pub fn dissipation(&self) -> &[f64] {
        &self.dissipation
    }

    /// Per-interval normalized residuals per unit time.
    pub fn energy_residuals(&self) -> &[f64] {
        &self.energy_residuals
    }

    pub fn max_energy_residual(&self) -> f64 {
        self.energy_residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Sum of normalized interval residuals times interval lengths: the
    /// cumulative identity violation over the whole span.
    pub fn cumulative_energy_residual(&self) -> f64 {
        self.samples
            .windows(2)
            .zip(&self.energy_residuals)
            .map(|(pair, r)| r * (pair[1].t - pair[0].t).abs())
            .sum()
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn steps_accepted(&self) -> u64 {
        self.steps_accepted
    }

    pub fn steps_rejected(&self) -> u64 {
        self.steps_rejected
    }

    /// Classical energies `E₀` at every sample.
    pub fn energies(&self, system: &EvolutionSystem) -> Vec<f64> {
        self.samples.iter().map(|s| system.energy(s)).collect()
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights are the last row of A (FSAL); the error weights are
// b5 − b4.
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const ORDER: f64 = 5.0;
const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

/// Right-hand side of a first-order system; `eval` may use internal
/// scratch, hence `&mut self`.
pub(crate) trait OdeRhs {
    fn eval(&mut self, t: f64, y: &[f64], dydt: &mut [f64]);
}

/// Stage storage for one embedded attempt.
struct Stages {
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
}

impl Stages {
    fn new(dim: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            ytmp: vec![0.0; dim],
        }
    }
}

/// One embedded attempt from `(t, y)` with signed step `dt`. Requires
/// `stages.k[0]` to hold the derivative at `(t, y)`. Writes the 5th-order
/// result into `y5` and returns the scaled error norm (≤ 1 means pass).
#[allow(clippy::too_many_arguments)]
fn attempt(
    rhs: &mut dyn OdeRhs,
    t: f64,
    y: &[f64],
    dt: f64,
    stages: &mut Stages,
    y5: &mut [f64],
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    for stage in 1..7 {
        for (i, yi) in y.iter().enumerate() {
            let mut acc = 0.0;
            for (j, a) in A[stage][..stage].iter().enumerate() {
                acc += a * stages.k[j][i];
            }
            stages.ytmp[i] = yi + dt * acc;
        }
        if stage == 6 {
            // Stage 7 is evaluated at the 5th-order solution (FSAL).
            y5.copy_from_slice(&stages.ytmp);
        }
        let (head, tail) = stages.k.split_at_mut(stage);
        let _ = head;
        rhs.eval(t + C[stage] * dt, &stages.ytmp, &mut tail[0]);
    }
    let mut err_norm = 0.0_f64;
    for (i, (yi, y5i)) in y.iter().zip(y5.iter()).enumerate() {
        let mut e = 0.0;
        for (j, d) in ERR.iter().enumerate() {
            e += d * stages.k[j][i];
        }
        e *= dt;
        let tol = abs_tol + rel_tol * yi.abs().max(y5i.abs());
        let scaled = (e / tol).abs();
        if !scaled.is_finite() {
            return f64::INFINITY;
        }
        err_norm = err_norm.max(scaled);
    }
    err_norm
}

const _: () = {
    // B5 must match the last A row for the FSAL shortcut above.
    assert!(B5[0] == A[6][0]);
    assert!(B5[2] == A[6][2]);
    assert!(B5[5] == A[6][5]);
};

/// Plain adaptive driver without the energy gate, used for auxiliary
/// first-order problems (comparison oracle). Returns the states at the
/// grid times.
pub(crate) fn integrate_ode_on_grid(
    rhs: &mut dyn OdeRhs,
    y0: &[f64],
    grid: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_steps: u64,
) -> Result<Vec<Vec<f64>>> {
    let n = y0.len();
    let mut stages = Stages::new(n);
    let mut y = y0.to_vec();
    let mut y5 = vec![0.0; n];
    let mut t = grid[0];
    let dir = (grid[grid.len() - 1] - grid[0]).signum();
    let mut out = Vec::with_capacity(grid.len());
    out.push(y.clone());
    rhs.eval(t, &y, &mut stages.k[0]);
    let mut dt_abs: f64 = ((grid[grid.len() - 1] - grid[0]).abs() / 100.0).max(1e-12);
    let mut steps = 0u64;
    for &target in &grid[1..] {
        while (target - t) * dir > 0.0 {
            steps += 1;
            if steps > max_steps {
                return Err(Error::StepLimit {
                    t,
                    limit: max_steps,
                });
            }
            let remaining = (target - t).abs();
            let clamped = dt_abs.min(remaining);
            let dt = dir * clamped;
            let err = attempt(rhs, t, &y, dt, &mut stages, &mut y5, rel_tol, abs_tol);
            if err <= 1.0 {
                t = if clamped == remaining { target } else { t + dt };
                std::mem::swap(&mut y, &mut y5);
                let (head, tail) = stages.k.split_at_mut(6);
                head[0].copy_from_slice(&tail[0]);
                let grow = if err == 0.0 {
                    MAX_SCALE
                } else {
                    (SAFETY * err.powf(-1.0 / ORDER)).clamp(MIN_SCALE, MAX_SCALE)
                };
                dt_abs = (clamped * grow).max(1e-300);
            } else {
                dt_abs = clamped / 2.0;
                if dt_abs < 1e-300 {
                    return Err(Error::Stiffness {
                        t,
                        dt: dt_abs,
                        dt_min: 1e-300,
                        norm_u: y[0].abs(),
                        norm_v: 0.0,
                    });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// RHS of the augmented system `(u, v, w)` with `w' = ⟨g(t, v), v⟩`.
struct EvolutionRhs<'a> {
    sys: &'a EvolutionSystem,
    grad: Vec<f64>,
    g: Vec<f64>,
}

impl<'a> EvolutionRhs<'a> {
    fn new(sys: &'a EvolutionSystem) -> Self {
        let d = sys.dim();
        EvolutionRhs {
            sys,
            grad: vec![0.0; d],
            g: vec![0.0; d],
        }
    }
}

impl OdeRhs for EvolutionRhs<'_> {
    fn eval(&mut self, t: f64, y: &[f64], dydt: &mut [f64]) {
        let d = self.sys.dim();
        let (u, rest) = y.split_at(d);
        let v = &rest[..d];
        self.sys.grad_potential_into(u, &mut self.grad);
        self.sys.damping_into(t, v, &mut self.g);
        dydt[..d].copy_from_slice(v);
        for i in 0..d {
            dydt[d + i] = -(self.grad[i] + self.g[i]);
        }
        dydt[2 * d] = self.sys.norms().pairing(&self.g, v);
    }
}

fn energy_of(system: &EvolutionSystem, y: &[f64]) -> f64 {
    let d = system.dim();
    let nh = system.norms().h(&y[d..2 * d]);
    0.5 * nh * nh + system.potential(&y[..d])
}

/// Compensated (Kahan) accumulator.
#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

struct EvolutionStepper<'a> {
    sys: &'a EvolutionSystem,
    rhs: EvolutionRhs<'a>,
    stages: Stages,
    y: Vec<f64>,
    y5: Vec<f64>,
    t: f64,
    dir: f64,
    e_prev: f64,
    tol: Tolerances,
    dt_min_eff: f64,
    dt_free: f64,
    steps_accepted: u64,
    steps_rejected: u64,
    trace: bool,
}

struct StepOutcome {
    dt_used: f64,
    /// |ΔE₀ + Δw| of the accepted step, normalized by the local energy
    /// scale (not per unit time).
    residual: f64,
    /// Dissipation increment of the accepted step.
    dw: f64,
}

impl<'a> EvolutionStepper<'a> {
    fn new(sys: &'a EvolutionSystem, state: &State, tol: Tolerances, dir: f64) -> Result<Self> {
        tol.validate()?;
        if state.dim() != sys.dim() || state.v.len() != sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: sys.dim(),
                got: state.dim(),
            });
        }
        if !state.is_finite() {
            return Err(Error::Diverged { t: state.t });
        }
        let d = sys.dim();
        let mut y = vec![0.0; 2 * d + 1];
        y[..d].copy_from_slice(&state.u);
        y[d..2 * d].copy_from_slice(&state.v);

        // Superlinear damping makes the first transient scale like
        // amplitude^{1+α/2}; rescale the floor and the opening proposal.
        let amp = sys
            .norms()
            .h(&state.u)
            .max(sys.norms().h(&state.v))
            .max(1.0);
        let scale = amp.powf(1.0 + 0.5 * sys.alpha());
        let dt_min_eff = (tol.dt_min / scale).max(1e-300);
        let dt_free = (tol.dt_max / scale).max(dt_min_eff);

        let mut rhs = EvolutionRhs::new(sys);
        let mut stages = Stages::new(2 * d + 1);
        rhs.eval(state.t, &y, &mut stages.k[0]);
        let e_prev = energy_of(sys, &y);
        Ok(EvolutionStepper {
            sys,
            rhs,
            stages,
            y5: vec![0.0; 2 * d + 1],
            y,
            t: state.t,
            dir,
            e_prev,
            tol,
            dt_min_eff,
            dt_free,
            steps_accepted: 0,
            steps_rejected: 0,
            trace: std::env::var_os("DECAYLAB_TRACE").is_some(),
        })
    }

    fn state(&self) -> State {
        let d = self.sys.dim();
        State::new(self.t, self.y[..d].to_vec(), self.y[d..2 * d].to_vec())
    }

    fn stiffness_error(&self, dt: f64) -> Error {
        let d = self.sys.dim();
        Error::Stiffness {
            t: self.t,
            dt,
            dt_min: self.dt_min_eff,
            norm_u: self.sys.norms().h(&self.y[..d]),
            norm_v: self.sys.norms().h(&self.y[d..2 * d]),
        }
    }

    /// Advances by one accepted step, not beyond `target`.
    fn step_towards(&mut self, target: f64) -> Result<StepOutcome> {
        let w_index = 2 * self.sys.dim();
        loop {
            if self.steps_accepted + self.steps_rejected >= self.tol.max_steps {
                return Err(Error::StepLimit {
                    t: self.t,
                    limit: self.tol.max_steps,
                });
            }
            let remaining = (target - self.t).abs();
            let clamped = self.dt_free.min(remaining).min(self.tol.dt_max);
            if clamped < self.dt_min_eff && remaining > self.dt_min_eff {
                return Err(self.stiffness_error(clamped));
            }
            let dt = self.dir * clamped;

            // Dissipation enters as a per-step increment: w starts at zero
            // so its update carries no large-base rounding.
            self.y[w_index] = 0.0;
            let err_norm = attempt(
                &mut self.rhs,
                self.t,
                &self.y,
                dt,
                &mut self.stages,
                &mut self.y5,
                self.tol.rel_tol,
                self.tol.abs_tol,
            );

            let mut accept = err_norm <= 1.0;
            let mut e_new = f64::NAN;
            let mut delta = f64::NAN;
            let mut scale = f64::NAN;
            if accept {
                if !self.y5.iter().all(|x| x.is_finite()) {
                    return Err(Error::Diverged { t: self.t });
                }
                e_new = energy_of(self.sys, &self.y5);
                delta = e_new - self.e_prev + self.y5[w_index];
                scale = self.e_prev.abs().max(e_new.abs()).max(1.0);
                // Roundoff allowance: E₀ itself is only known to ε·scale.
                let gate = self.tol.energy_tol * clamped * scale + 8.0 * f64::EPSILON * scale;
                accept = delta.is_finite() && delta.abs() <= gate;
            }

            if self.trace {
                eprintln!(
                    "t={:.6e} dt={clamped:.3e} err={err_norm:.3e} delta={delta:.3e} accept={accept}",
                    self.t
                );
            }
            if accept {
                self.steps_accepted += 1;
                let hit = clamped == remaining;
                self.t = if hit { target } else { self.t + dt };
                std::mem::swap(&mut self.y, &mut self.y5);
                let (head, tail) = self.stages.k.split_at_mut(6);
                head[0].copy_from_slice(&tail[0]);
                self.e_prev = e_new;
                let grow = if err_norm == 0.0 {
                    MAX_SCALE
                } else {
                    (SAFETY * err_norm.powf(-1.0 / ORDER)).clamp(MIN_SCALE, MAX_SCALE)
                };
                // Remember the controller's free proposal even when the
                // step was clamped to hit an output time.
                self.dt_free = (self.dt_free.min(self.tol.dt_max) * grow).min(self.tol.dt_max);
                return Ok(StepOutcome {
                    dt_used: clamped,
                    residual: delta.abs() / scale,
                    dw: self.y[w_index],
                });
            }

            self.steps_rejected += 1;
            self.dt_free = clamped / 2.0;
            if self.dt_free < self.dt_min_eff {
                return Err(self.stiffness_error(self.dt_free));
            }
        }
    }
}

/// One accepted step of the embedded pair with dual acceptance. Returns the
/// new state, the step actually taken, and the step's energy residual
/// `|ΔE₀ + ∫⟨g,v⟩dt|` normalized by the local energy scale.
pub fn step(
    system: &EvolutionSystem,
    state: &State,
    dt_proposed: f64,
    tol: &Tolerances,
) -> Result<(State, f64, f64)> {
    tol.validate()?;
    if !(dt_proposed.abs() >= tol.dt_min && dt_proposed.abs() <= tol.dt_max) {
        return Err(Error::invalid(
            "dt_proposed",
            format!(
                "|dt| must lie in [dt_min, dt_max] = [{:.3e}, {:.3e}], got {:.3e}",
                tol.dt_min, tol.dt_max, dt_proposed
            ),
        ));
    }
    let dir = if dt_proposed < 0.0 { -1.0 } else { 1.0 };
    let mut stepper = EvolutionStepper::new(system, state, *tol, dir)?;
    stepper.dt_free = dt_proposed.abs();
    let target = state.t + dir * f64::INFINITY;
    let outcome = stepper.step_towards(target)?;
    Ok((stepper.state(), outcome.dt_used, outcome.residual))
}

/// Geometric output grid with ratio 1.05, dense near the span start (the
/// universal bound has power-law structure in t, so log-spaced samples give
/// uniform leverage in log-log fits).
pub fn default_output_grid(t0: f64, t1: f64) -> Vec<f64> {
    let span = t1 - t0;
    let mut grid = vec![t0];
    let mut offset = span.abs() * 1e-4;
    while offset < span.abs() {
        grid.push(t0 + span.signum() * offset);
        offset *= 1.05;
    }
    grid.push(t1);
    grid
}

/// Integrates over `t_span` on the default geometric output grid.
pub fn integrate(
    system: &EvolutionSystem,
    state0: &State,
    t_span: (f64, f64),
    tol: &Tolerances,
) -> Result<Trajectory> {
    if t_span.0 == t_span.1 || !t_span.0.is_finite() || !t_span.1.is_finite() {
        return Err(Error::invalid(
            "t_span",
            "must be a non-degenerate finite interval",
        ));
    }
    integrate_on_grid(
        system,
        state0,
        &default_output_grid(t_span.0, t_span.1),
        tol,
    )
}

/// Integrates and samples exactly at the given strictly monotone grid
/// (forward or backward); `state0.t` must equal the first grid time.
pub fn integrate_on_grid(
    system: &EvolutionSystem,
    state0: &State,
    grid: &[f64],
    tol: &Tolerances,
) -> Result<Trajectory> {
    if grid.len() < 2 {
        return Err(Error::invalid("grid", "needs at least two output times"));
    }
    if state0.t != grid[0] {
        return Err(Error::invalid(
            "grid",
            format!(
                "first grid time {} must equal state time {}",
                grid[0], state0.t
            ),
        ));
    }
    let dir = (grid[grid.len() - 1] - grid[0]).signum();
    if dir == 0.0 {
        return Err(Error::invalid("grid", "span is degenerate"));
    }
    if grid.windows(2).any(|p| (p[1] - p[0]) * dir <= 0.0) {
        return Err(Error::invalid("grid", "times must be strictly monotone"));
    }

    let mut stepper = EvolutionStepper::new(system, state0, *tol, dir)?;
    let mut samples = Vec::with_capacity(grid.len());
    let mut dissipation = Vec::with_capacity(grid.len() - 1);
    let mut residuals = Vec::with_capacity(grid.len() - 1);
    samples.push(state0.clone());

    for &target in &grid[1..] {
        let e_start = stepper.e_prev;
        let mut w = Kahan::default();
        while (target - stepper.t) * dir > 0.0 {
            let outcome = stepper.step_towards(target)?;
            w.add(outcome.dw);
        }
        let e_end = stepper.e_prev;
        let scale = e_start.abs().max(e_end.abs()).max(1.0);
        let dt = (target - samples.last().expect("nonempty").t).abs();
        let residual = (e_end - e_start + w.sum).abs() / (scale * dt);
        samples.push(stepper.state());
        dissipation.push(w.sum);
        residuals.push(residual);
    }

    Ok(Trajectory {
        samples,
        dissipation,
        energy_residuals: residuals,
        tolerances: *tol,
        steps_accepted: stepper.steps_accepted,
        steps_rejected: stepper.steps_rejected,
    })
}

/// Recomputes the maximum per-unit-time energy-balance residual of a
/// trajectory from its sampled states and stored dissipation integrals:
/// `max_i |ΔE₀ + ∫⟨g,v⟩| / (Δt · max(1, E₀ scale))`.
pub fn energy_balance(system: &EvolutionSystem, trajectory: &Trajectory) -> Result<f64> {
    if trajectory.samples.iter().any(|s| s.dim() != system.dim()) {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: trajectory.samples[0].dim(),
        });
    }
    let mut worst = 0.0_f64;
    for (pair, dw) in trajectory.samples.windows(2).zip(&trajectory.dissipation) {
        let e0 = system.energy(&pair[0]);
        let e1 = system.energy(&pair[1]);
        let dt = (pair[1].t - pair[0].t).abs();
        let scale = e0.abs().max(e1.abs()).max(1.0);
        worst = worst.max((e1 - e0 + dw).abs() / (scale * dt));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_oscillator, build_scalar_ode};
    use approx::assert_relative_eq;

    #[test]
    fn rest_point_is_fixed() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let state = State::zero(0.0, 1);
        let (next, dt, residual) = step(&sys, &state, 0.01, &Tolerances::default()).unwrap();
        assert_eq!(next.u, state.u);
        assert_eq!(next.v, state.v);
        assert!(dt > 0.0);
        assert_eq!(residual, 0.0);
    }

    #[test]
    fn energy_decreases_from_moving_state() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let state = State::new(0.0, vec![1.0], vec![0.0]);
        let traj = integrate(&sys, &state, (0.0, 1.0), &Tolerances::default()).unwrap();
        let energies = traj.energies(&sys);
        // E0' = -|v|^{α+2} ≤ 0: monotone within integrator tolerance.
        for pair in energies.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-10, "{} -> {}", pair[0], pair[1]);
        }
        assert!(energies.last().unwrap() < &energies[0]);
    }

    #[test]
    fn oscillator_counterexample_parabola() {
        // u(t) = t²/4 − ½ from t = −10: forward to 0 reaches (−0.5, 0).
        let sys = build_oscillator(1.0, 1.0, 1.0).unwrap();
        let state = State::new(-10.0, vec![24.5], vec![-5.0]);
        let traj = integrate(&sys, &state, (-10.0, 0.0), &Tolerances::default()).unwrap();
        let end = traj.last();
        assert_relative_eq!(end.u[0], -0.5, epsilon = 1e-6);
        assert_relative_eq!(end.v[0], 0.0, epsilon = 1e-6);
        // every output time sits on the parabola
        for s in traj.samples() {
            assert_relative_eq!(s.u[0], s.t * s.t / 4.0 - 0.5, epsilon = 1e-6);
            assert_relative_eq!(s.v[0], s.t / 2.0, epsilon = 1e-6);
        }
        assert!(traj.max_energy_residual() <= traj.tolerances().energy_tol);
    }

    #[test]
    fn backward_integration_supported() {
        let sys = build_oscillator(1.0, 1.0, 1.0).unwrap();
        // start at the parabola vertex and integrate back to t = -2,
        // where u = 4/4 - 1/2 = 1/2 and v = -1
        let state = State::new(0.0, vec![-0.5], vec![0.0]);
        let traj = integrate(&sys, &state, (0.0, -2.0), &Tolerances::default()).unwrap();
        let end = traj.last();
        assert_relative_eq!(end.u[0], 0.5, epsilon = 1e-6);
        assert_relative_eq!(end.v[0], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn convergence_with_tightened_tolerance() {
        let sys = build_oscillator(2.0, 1.0, 1.5).unwrap();
        let state = State::new(0.0, vec![1.0], vec![0.3]);
        let reference = {
            let tol = Tolerances {
                rel_tol: 1e-12,
                abs_tol: 1e-14,
                ..Default::default()
            };
            let traj = integrate(&sys, &state, (0.0, 5.0), &tol).unwrap();
            traj.last().clone()
        };
        let mut errors = Vec::new();
        for rel in [1e-5, 1e-7, 1e-9] {
            let tol = Tolerances {
                rel_tol: rel,
                abs_tol: rel * 1e-3,
                ..Default::default()
            };
            let traj = integrate(&sys, &state, (0.0, 5.0), &tol).unwrap();
            let end = traj.last();
            let err = (end.u[0] - reference.u[0])
                .abs()
                .max((end.v[0] - reference.v[0]).abs());
            errors.push(err.max(1e-16));
        }
        // tightening tolerances must pay off roughly proportionally over
        // the full range (adaptive control is not exactly linear per step)
        assert!(errors[1] < errors[0], "{errors:?}");
        assert!(errors[2] < errors[1], "{errors:?}");
        assert!(errors[2] <= errors[0] / 100.0, "{errors:?}");
    }

    #[test]
    fn grid_sampling_is_exact() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let state = State::new(0.0, vec![2.0], vec![0.0]);
        let grid = [0.0, 0.25, 0.5, 1.0, 2.0];
        let traj = integrate_on_grid(&sys, &state, &grid, &Tolerances::default()).unwrap();
        let times: Vec<f64> = traj.times().collect();
        assert_eq!(times, grid);
        assert_eq!(traj.energy_residuals().len(), grid.len() - 1);
    }

    #[test]
    fn energy_balance_matches_stored_residuals() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let state = State::new(0.0, vec![3.0], vec![-1.0]);
        let traj = integrate(&sys, &state, (0.0, 2.0), &Tolerances::default()).unwrap();
        let max = energy_balance(&sys, &traj).unwrap();
        assert_relative_eq!(max, traj.max_energy_residual(), max_relative = 1e-9);
        assert!(max <= 1e-8, "residual {max}");
    }

    #[test]
    fn huge_amplitude_start_does_not_stall() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let state = State::new(0.0, vec![1e4], vec![0.0]);
        let traj = integrate(&sys, &state, (0.0, 0.5), &Tolerances::default()).unwrap();
        let e_end = sys.energy(traj.last());
        assert!(e_end.is_finite());
        assert!(e_end < sys.energy(&state));
    }

    #[test]
    fn rejects_bad_inputs() {
        let sys = build_scalar_ode(1.0, 3.0).unwrap();
        let state = State::new(0.0, vec![1.0], vec![0.0]);
        assert!(step(&sys, &state, 10.0, &Tolerances::default()).is_err());
        let nan_state = State::new(0.0, vec![f64::NAN], vec![0.0]);
        assert!(integrate(&sys, &nan_state, (0.0, 1.0), &Tolerances::default()).is_err());
        let bad_grid = [0.0, 1.0, 0.5];
        assert!(integrate_on_grid(&sys, &state, &bad_grid, &Tolerances::default()).is_err());
    }
}
