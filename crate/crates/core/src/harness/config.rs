//! Run configuration: a flat `key = value` text format with `#` comments.
//!
//! The same setter backs config files and command-line `--set key=value`
//! overrides (last writer wins). Unknown keys are rejected with the key
//! name; values are validated field by field.

use crate::certificates::CertificateMode;
use crate::error::{Error, Result};
use crate::integrator::Tolerances;
use crate::models::{
    build_galerkin_plate, build_galerkin_wave, build_kirchhoff, build_oscillator, build_scalar_ode,
    Boundary, EvolutionSystem, Forcing, PdeParams, TimeProfile,
};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExperimentKind {
    Sweep,
    Simulate,
    VerifyAssumptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    Scalar,
    Oscillator,
    Wave,
    Plate,
    Kirchhoff,
    KirchhoffDegenerate,
}

/// Shape of the initial-data family; the actual datum is `amplitude ×
/// shape` with the shape normalized in H.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialShape {
    /// First mode only.
    SingleMode,
    /// Seeded random modal vector with a k⁻² spectrum.
    RandomModal,
    /// Spatially constant datum (Neumann wave only): the reduction to the
    /// scalar equation.
    SpatialConstant,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub model: ModelKind,
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub delta: f64,
    pub rho: f64,
    pub modes: usize,
    pub grid_points: usize,
    pub boundary: Boundary,
    pub b: f64,
    pub c: f64,
    pub lambda: f64,
    pub mu: f64,
    pub forcing_amplitude: f64,
    pub forcing_omega: f64,
    pub shape: InitialShape,
    pub amplitudes: Vec<f64>,
    pub t_end: f64,
    pub probe_times: Vec<f64>,
    pub fit_window: (f64, f64),
    pub tolerances: Tolerances,
    pub certificate_mode: CertificateMode,
    pub epsilon_max: f64,
    pub saturation_decades: f64,
    pub expect_universality_fail: bool,
    pub fail_on_violation: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub assumption_samples: usize,
    pub assumption_amplitudes: (f64, f64),
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: ExperimentKind::Simulate,
            model: ModelKind::Scalar,
            alpha: 1.0,
            beta: 3.0,
            omega: 1.0,
            delta: 1.0,
            rho: 1.0,
            modes: 16,
            grid_points: 48,
            boundary: Boundary::Dirichlet,
            b: 1.0,
            c: 1.0,
            lambda: 0.0,
            mu: 0.0,
            forcing_amplitude: 0.0,
            forcing_omega: 0.0,
            shape: InitialShape::SingleMode,
            amplitudes: vec![1.0],
            t_end: 100.0,
            probe_times: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            fit_window: (10.0, 100.0),
            tolerances: Tolerances::default(),
            certificate_mode: CertificateMode::Bound,
            epsilon_max: crate::certificates::EPSILON_MAX,
            saturation_decades: 3.0,
            expect_universality_fail: false,
            fail_on_violation: true,
            seed: 1,
            out_dir: PathBuf::from("runs/latest"),
            jobs: 1,
            assumption_samples: 1000,
            assumption_amplitudes: (1e-2, 1e2),
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("key `{key}`: `{value}` is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.trim().parse::<usize>().map_err(|_| {
        Error::Config(format!(
            "key `{key}`: `{value}` is not a nonnegative integer"
        ))
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!(
            "key `{key}`: `{other}` is not a boolean (true/false)"
        ))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

impl RunConfig {
    /// Applies one `key = value` assignment. Unknown keys are errors.
    /// Nested fields accept dotted keys (`tolerances.rel_tol`) as well as
    /// their flat aliases (`rel_tol`).
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let key = key.trim();
        let key = key.strip_prefix("tolerances.").unwrap_or(key);
        match key {
            "experiment" => {
                self.experiment = match v {
                    "sweep" => ExperimentKind::Sweep,
                    "simulate" => ExperimentKind::Simulate,
                    "verify-assumptions" => ExperimentKind::VerifyAssumptions,
                    other => {
                        return Err(Error::Config(format!(
                            "key `experiment`: unknown kind `{other}` \
                             (sweep|simulate|verify-assumptions)"
                        )))
                    }
                }
            }
            "model" => {
                self.model = match v {
                    "scalar" => ModelKind::Scalar,
                    "oscillator" => ModelKind::Oscillator,
                    "wave" => ModelKind::Wave,
                    "plate" => ModelKind::Plate,
                    "kirchhoff" => ModelKind::Kirchhoff,
                    "kirchhoff-degenerate" => ModelKind::KirchhoffDegenerate,
                    other => {
                        return Err(Error::Config(format!(
                            "key `model`: unknown model `{other}` (scalar|oscillator|wave|\
                             plate|kirchhoff|kirchhoff-degenerate)"
                        )))
                    }
                }
            }
            "alpha" => self.alpha = parse_f64(key, v)?,
            "beta" => self.beta = parse_f64(key, v)?,
            "omega" => self.omega = parse_f64(key, v)?,
            "delta" => self.delta = parse_f64(key, v)?,
            "rho" => self.rho = parse_f64(key, v)?,
            "modes" => self.modes = parse_usize(key, v)?,
            "grid_points" => self.grid_points = parse_usize(key, v)?,
            "boundary" => {
                self.boundary = match v {
                    "dirichlet" => Boundary::Dirichlet,
                    "neumann" => Boundary::Neumann,
                    "hinged" => Boundary::Hinged,
                    "clamped" => Boundary::Clamped,
                    other => {
                        return Err(Error::Config(format!(
                            "key `boundary`: unknown value `{other}`"
                        )))
                    }
                }
            }
            "b" => self.b = parse_f64(key, v)?,
            "c" => self.c = parse_f64(key, v)?,
            "lambda" => self.lambda = parse_f64(key, v)?,
            "mu" => self.mu = parse_f64(key, v)?,
            "forcing_amplitude" => self.forcing_amplitude = parse_f64(key, v)?,
            "forcing_omega" => self.forcing_omega = parse_f64(key, v)?,
            "shape" => {
                self.shape = match v {
                    "single-mode" => InitialShape::SingleMode,
                    "random-modal" => InitialShape::RandomModal,
                    "spatial-constant" => InitialShape::SpatialConstant,
                    other => {
                        return Err(Error::Config(format!(
                            "key `shape`: unknown value `{other}` \
                             (single-mode|random-modal|spatial-constant)"
                        )))
                    }
                }
            }
            "amplitudes" => self.amplitudes = parse_list(key, v)?,
            "t_end" => self.t_end = parse_f64(key, v)?,
            "probe_times" => self.probe_times = parse_list(key, v)?,
            "fit_window" => {
                let list = parse_list(key, v)?;
                if list.len() != 2 {
                    return Err(Error::Config(
                        "key `fit_window`: expected `lo,hi`".to_string(),
                    ));
                }
                self.fit_window = (list[0], list[1]);
            }
            "rel_tol" => self.tolerances.rel_tol = parse_f64(key, v)?,
            "abs_tol" => self.tolerances.abs_tol = parse_f64(key, v)?,
            "energy_tol" => self.tolerances.energy_tol = parse_f64(key, v)?,
            "dt_min" => self.tolerances.dt_min = parse_f64(key, v)?,
            "dt_max" => self.tolerances.dt_max = parse_f64(key, v)?,
            "max_steps" => self.tolerances.max_steps = parse_usize(key, v)? as u64,
            "certificate_mode" => {
                self.certificate_mode = match v {
                    "bound" => CertificateMode::Bound,
                    "decay" => CertificateMode::Decay,
                    "strong-decay" => CertificateMode::StrongDecay,
                    other => {
                        return Err(Error::Config(format!(
                            "key `certificate_mode`: unknown value `{other}` \
                             (bound|decay|strong-decay)"
                        )))
                    }
                }
            }
            "epsilon_max" => self.epsilon_max = parse_f64(key, v)?,
            "saturation_decades" => self.saturation_decades = parse_f64(key, v)?,
            "expect_universality_fail" => self.expect_universality_fail = parse_bool(key, v)?,
            "fail_on_violation" => self.fail_on_violation = parse_bool(key, v)?,
            "seed" => {
                self.seed = v.parse::<u64>().map_err(|_| {
                    Error::Config(format!("key `seed`: `{v}` is not a nonnegative integer"))
                })?
            }
            "out_dir" => self.out_dir = PathBuf::from(v),
            "jobs" => self.jobs = parse_usize(key, v)?,
            "assumption_samples" => self.assumption_samples = parse_usize(key, v)?,
            "assumption_amplitudes" => {
                let list = parse_list(key, v)?;
                if list.len() != 2 {
                    return Err(Error::Config(
                        "key `assumption_amplitudes`: expected `lo,hi`".to_string(),
                    ));
                }
                self.assumption_amplitudes = (list[0], list[1]);
            }
            other => {
                return Err(Error::Config(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// Parses a config file (`key = value` lines, `#` comments).
    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    idx + 1
                ))
            })?;
            config.apply(key, value)?;
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::from_str(&text)
    }

    /// Normalizes and validates the whole configuration.
    pub fn validate(&mut self) -> Result<()> {
        self.tolerances.validate()?;
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::invalid("t_end", "must be positive and finite"));
        }
        if self.amplitudes.is_empty() {
            return Err(Error::invalid("amplitudes", "list is empty"));
        }
        if self.amplitudes.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::invalid(
                "amplitudes",
                "must be nonnegative and finite",
            ));
        }
        self.amplitudes.sort_by(f64::total_cmp);
        self.amplitudes.dedup();

        if self.probe_times.is_empty() {
            return Err(Error::invalid("probe_times", "list is empty"));
        }
        self.probe_times.sort_by(f64::total_cmp);
        self.probe_times.dedup();
        if self
            .probe_times
            .iter()
            .any(|t| !(*t > 0.0) || *t > self.t_end)
        {
            return Err(Error::invalid(
                "probe_times",
                format!("must lie in (0, t_end = {}]", self.t_end),
            ));
        }
        if !(self.fit_window.0 > 0.0 && self.fit_window.1 > self.fit_window.0) {
            return Err(Error::invalid("fit_window", "need 0 < lo < hi"));
        }
        if self.jobs == 0 {
            return Err(Error::invalid("jobs", "must be at least 1"));
        }
        if !(self.epsilon_max > 0.0) {
            return Err(Error::invalid("epsilon_max", "must be positive"));
        }
        if !(self.saturation_decades > 0.0) {
            return Err(Error::invalid("saturation_decades", "must be positive"));
        }
        if self.shape == InitialShape::SpatialConstant
            && !(self.model == ModelKind::Wave && self.boundary == Boundary::Neumann)
        {
            return Err(Error::invalid(
                "shape",
                "spatial-constant data require the neumann wave model",
            ));
        }
        // Fail fast on model construction problems (boundary conditions,
        // exponent signs, grid resolution).
        self.build_system()?;
        Ok(())
    }

    fn pde_params(&self) -> PdeParams {
        let forcing = if self.forcing_amplitude != 0.0 {
            let mut modal = vec![0.0; self.modes];
            modal[0] = self.forcing_amplitude;
            Some(Forcing {
                modal,
                profile: if self.forcing_omega == 0.0 {
                    TimeProfile::Constant
                } else {
                    TimeProfile::Cosine {
                        omega: self.forcing_omega,
                    }
                },
            })
        } else {
            None
        };
        PdeParams {
            modes: self.modes,
            grid_points: self.grid_points,
            boundary: self.boundary,
            b: self.b,
            c: self.c,
            lambda: self.lambda,
            mu: self.mu,
            beta: self.beta,
            alpha: self.alpha,
            forcing,
        }
    }

    pub fn build_system(&self) -> Result<EvolutionSystem> {
        match self.model {
            ModelKind::Scalar => build_scalar_ode(self.alpha, self.beta),
            ModelKind::Oscillator => build_oscillator(self.omega, self.delta, self.rho),
            ModelKind::Wave => build_galerkin_wave(&self.pde_params()),
            ModelKind::Plate => build_galerkin_plate(&self.pde_params()),
            ModelKind::Kirchhoff => build_kirchhoff(&self.pde_params(), false),
            ModelKind::KirchhoffDegenerate => build_kirchhoff(&self.pde_params(), true),
        }
    }

    /// Unit-H-norm shape vector of the initial-data family; the datum for
    /// amplitude A is `u = A·shape`, `v = 0`.
    pub fn initial_shape_vector(&self, system: &EvolutionSystem) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let dim = system.dim();
        match self.shape {
            InitialShape::SingleMode | InitialShape::SpatialConstant => {
                let mut u = vec![0.0; dim];
                u[0] = 1.0;
                u
            }
            InitialShape::RandomModal => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
                let mut u: Vec<f64> = (0..dim)
                    .map(|k| {
                        let z: f64 = rng.gen_range(-1.0..1.0);
                        z / ((k + 1) * (k + 1)) as f64
                    })
                    .collect();
                let n = system.norms().h(&u);
                if n > 0.0 {
                    for x in u.iter_mut() {
                        *x /= n;
                    }
                }
                u
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip_and_unknown_key() {
        let text = "\
# scalar sweep
experiment = sweep
model = scalar
alpha = 1
beta = 3
amplitudes = 1, 10, 100
probe_times = 0.1, 1
t_end = 10
";
        let mut cfg = RunConfig::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Sweep);
        assert_eq!(cfg.amplitudes, vec![1.0, 10.0, 100.0]);

        let err = RunConfig::from_str("no_such_key = 1").unwrap_err();
        assert!(format!("{err}").contains("no_such_key"));
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = RunConfig::from_str("model = scalar\nbeta = -1").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(format!("{err}").contains("beta"), "{err}");

        let mut cfg = RunConfig::from_str("amplitudes = ").unwrap();
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::from_str("probe_times = 5\nt_end = 1").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(format!("{err}").contains("probe_times"), "{err}");
    }

    #[test]
    fn dotted_tolerance_keys_are_aliases() {
        let mut cfg = RunConfig::default();
        cfg.apply("tolerances.rel_tol", "1e-7").unwrap();
        assert_eq!(cfg.tolerances.rel_tol, 1e-7);
        cfg.apply("rel_tol", "1e-6").unwrap();
        assert_eq!(cfg.tolerances.rel_tol, 1e-6);
    }

    #[test]
    fn amplitudes_are_normalized_sorted() {
        let mut cfg = RunConfig::from_str("amplitudes = 100, 1, 10, 10").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.amplitudes, vec![1.0, 10.0, 100.0]);
    }

    #[test]
    fn kirchhoff_neumann_is_refused_at_validation() {
        let mut cfg = RunConfig::from_str("model = kirchhoff\nboundary = neumann").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(format!("{err}").contains("constant"), "{err}");
    }

    #[test]
    fn random_modal_shape_is_deterministic_and_normalized() {
        let mut cfg = RunConfig::from_str("model = wave\nshape = random-modal\nseed = 7").unwrap();
        cfg.validate().unwrap();
        let sys = cfg.build_system().unwrap();
        let a = cfg.initial_shape_vector(&sys);
        let b = cfg.initial_shape_vector(&sys);
        assert_eq!(a, b);
        approx::assert_relative_eq!(sys.norms().h(&a), 1.0, epsilon = 1e-12);
    }
}
