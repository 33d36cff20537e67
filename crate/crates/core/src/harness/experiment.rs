//! Experiment execution: runs the configured experiment, persists CSV data,
//! a JSON manifest with content hashes, and SVG figures.

use super::config::{ExperimentKind, RunConfig};
use super::plot::{color, log_log_plot, Series};
use super::sweep::{amplitude_sweep, sweep_grid, SweepReport};
use crate::certificates::{
    certify, comparison_majorant, verify_assumptions, CertificateMode, CertificateReport, Exponents,
};
use crate::error::{Error, Result};
use crate::integrator::{integrate_on_grid, Trajectory};
use crate::models::{EvolutionSystem, State};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

/// The run manifest: config echo, seed, verdicts, written files with
/// content hashes, and wall time.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub seed: u64,
    pub tool_version: &'static str,
    pub verdicts: BTreeMap<String, serde_json::Value>,
    pub files: Vec<FileEntry>,
    pub wall_time_s: f64,
}

/// Result of one experiment run.
#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    /// A certificate-style verdict failed and the config did not declare
    /// the failure expected.
    pub violations: bool,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<FileEntry>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Writer {
            dir,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: hex_digest(contents.as_bytes()),
        });
        Ok(())
    }

    fn track(&mut self, name: &str) -> Result<()> {
        let bytes = std::fs::read(self.dir.join(name))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: hex_digest(&bytes),
        });
        Ok(())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Bit-exact column order of trajectory CSV files.
pub const TRAJECTORY_CSV_HEADER: &str = "t,E0,Ehat,Phi,norm_H_v,norm_X_v,norm_Y_u,energy_residual";

fn trajectory_csv(
    system: &EvolutionSystem,
    trajectory: &Trajectory,
    certificate: Option<&CertificateReport>,
) -> String {
    let c1 = system
        .declared_constants()
        .filter(|k| k.delta1 > 0.0)
        .map_or(0.0, |k| k.c1);
    let (epsilon, gamma, bound_mode) = certificate
        .map(|c| (c.epsilon, c.gamma, c.mode == CertificateMode::Bound))
        .unwrap_or((0.0, 0.0, true));
    let mut out = String::new();
    out.push_str(TRAJECTORY_CSV_HEADER);
    out.push('\n');
    for (i, s) in trajectory.samples().iter().enumerate() {
        let norms = system.norms();
        let e0 = system.energy(s);
        let ehat = e0 + c1 + 1.0;
        let base = if bound_mode { ehat } else { e0 };
        let phi = if base <= crate::certificates::ENERGY_VANISH {
            0.0
        } else {
            base + epsilon * base.powf(gamma) * norms.pairing(&s.u, &s.v)
        };
        let residual = if i == 0 {
            0.0
        } else {
            trajectory.energy_residuals()[i - 1]
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.t,
            e0,
            ehat,
            phi,
            norms.h(&s.v),
            norms.x(&s.v),
            norms.y(&s.u),
            residual
        );
    }
    out
}

fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("amplitude");
    for p in &report.probe_times {
        let _ = write!(out, ",E0_t{p}");
    }
    out.push_str(",decay_slope,decay_sup,max_energy_residual,error\n");
    for cell in &report.cells {
        let _ = write!(out, "{}", cell.amplitude);
        for e in &cell.energies {
            let _ = write!(out, ",{e}");
        }
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            cell.decay_fit.map_or(f64::NAN, |f| f.slope),
            cell.decay_sup.unwrap_or(f64::NAN),
            cell.max_energy_residual,
            cell.error.as_deref().unwrap_or("")
        );
    }
    out
}

fn verdict(v: bool) -> serde_json::Value {
    serde_json::Value::String(if v { "pass" } else { "fail" }.to_string())
}

fn simulate(
    config: &RunConfig,
    writer: &mut Writer,
) -> Result<(BTreeMap<String, serde_json::Value>, bool)> {
    let system = config.build_system()?;
    let amplitude = config.amplitudes[0];
    let shape = config.initial_shape_vector(&system);
    let u: Vec<f64> = shape.iter().map(|s| s * amplitude).collect();
    let state = State::new(0.0, u, vec![0.0; system.dim()]);
    let grid = sweep_grid(config);
    let trajectory = integrate_on_grid(&system, &state, &grid, &config.tolerances)?;

    let exponents = Exponents::new(system.alpha(), system.beta()).ok();
    let certificate = exponents
        .as_ref()
        .and_then(|e| certify(&system, &trajectory, e, config.certificate_mode).ok());

    writer.write(
        "trajectory.csv",
        &trajectory_csv(&system, &trajectory, certificate.as_ref()),
    )?;

    let mut verdicts = BTreeMap::new();
    let max_residual = trajectory.max_energy_residual();
    verdicts.insert(
        "energy_identity".to_string(),
        verdict(max_residual <= config.tolerances.energy_tol),
    );
    verdicts.insert(
        "max_energy_residual".to_string(),
        serde_json::json!(max_residual),
    );

    let mut ok = max_residual <= config.tolerances.energy_tol;
    let mut series = vec![Series {
        label: format!("E0, A={amplitude}"),
        points: trajectory
            .samples()
            .iter()
            .map(|s| (s.t, system.energy(s)))
            .collect(),
        color: color(0),
        dashed: false,
    }];

    if let Some(report) = &certificate {
        writer.write("certificates.json", &serde_json::to_string_pretty(report)?)?;
        verdicts.insert("sandwich".to_string(), verdict(report.sandwich_holds));
        verdicts.insert(
            "differential_inequality".to_string(),
            verdict(report.inequality_holds),
        );
        verdicts.insert(
            "epsilon_star".to_string(),
            serde_json::json!(report.epsilon_star),
        );
        verdicts.insert(
            "bound_envelope".to_string(),
            serde_json::json!({
                "rate": report.bound.rate,
                "Gamma": report.bound.coefficient,
                "Gamma_star": report.bound.offset,
            }),
        );
        verdicts.insert(
            "decay_envelope".to_string(),
            serde_json::json!({ "rate": report.decay.rate, "D": report.decay.coefficient }),
        );
        ok = ok && report.sandwich_holds && report.inequality_holds;

        series.push(Series {
            label: format!(
                "bound: {:.3}·t^-{} + {:.3}",
                report.bound.coefficient, report.bound.rate, report.bound.offset
            ),
            points: trajectory
                .samples()
                .iter()
                .filter(|s| s.t > 0.0)
                .map(|s| (s.t, report.bound.eval(s.t)))
                .collect(),
            color: color(1),
            dashed: true,
        });
        if report.decay.coefficient.is_finite() && report.decay.coefficient > 0.0 {
            series.push(Series {
                label: format!(
                    "decay: {:.3}·t^-{}",
                    report.decay.coefficient, report.decay.rate
                ),
                points: trajectory
                    .samples()
                    .iter()
                    .filter(|s| s.t >= 1.0)
                    .map(|s| (s.t, report.decay.eval(s.t)))
                    .collect(),
                color: color(2),
                dashed: true,
            });
        }
        // The abstract comparison majorant at the certificate's (γ, ρ, M):
        // ρ = ε·δ₂/8·(2/3)^{γ+1}, M = 3C₃/2 + 2 in bound mode.
        if let (Some(k), CertificateMode::Bound) =
            (system.declared_constants(), config.certificate_mode)
        {
            if k.delta2 > 0.0 && k.delta3 > 0.0 {
                let rho =
                    report.epsilon * k.delta2 / 8.0 * (2.0_f64 / 3.0).powf(report.gamma + 1.0);
                let m = 1.5 * k.c3 + 2.0;
                let points: Vec<(f64, f64)> = trajectory
                    .samples()
                    .iter()
                    .filter(|s| s.t > 0.0)
                    .filter_map(|s| {
                        comparison_majorant(report.gamma, rho, m, s.t)
                            .ok()
                            .map(|psi| (s.t, 2.0 * psi))
                    })
                    .collect();
                series.push(Series {
                    label: "comparison majorant 2·Psi".to_string(),
                    points,
                    color: color(3),
                    dashed: true,
                });
            }
        }
    } else {
        verdicts.insert(
            "certificates".to_string(),
            serde_json::Value::String("skipped (no admissible exponent pair)".to_string()),
        );
    }

    log_log_plot(
        &format!("{} energy decay", system.label()),
        "t",
        "E0",
        &series,
        &writer.dir.join("energy.svg"),
    )?;
    writer.track("energy.svg")?;

    Ok((verdicts, !ok))
}

fn sweep(
    config: &RunConfig,
    writer: &mut Writer,
) -> Result<(BTreeMap<String, serde_json::Value>, bool)> {
    let report = amplitude_sweep(config)?;
    writer.write("sweep.csv", &sweep_csv(&report))?;
    writer.write("sweep.json", &serde_json::to_string_pretty(&report)?)?;

    let mut verdicts = BTreeMap::new();
    verdicts.insert("universal_bound".to_string(), verdict(report.universality));
    verdicts.insert(
        "saturation_ratios".to_string(),
        serde_json::json!(report.saturation),
    );
    verdicts.insert(
        "expected_universality_fail".to_string(),
        serde_json::json!(config.expect_universality_fail),
    );

    // Universal decay at the regime's rate: the sup of E₀·t^r over the
    // window must be finite and stable across amplitudes. Only meaningful
    // when the window actually spans a decay range beyond t = 1.
    let decay_window_ok = config.fit_window.1 >= 2.0 * config.fit_window.0.max(1.0);
    let sups: Vec<f64> = report
        .cells
        .iter()
        .filter(|c| c.error.is_none())
        .filter_map(|c| c.decay_sup)
        .filter(|d| *d > 0.0)
        .collect();
    if decay_window_ok && sups.len() >= 2 {
        let hi = sups.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = sups.iter().copied().fold(f64::INFINITY, f64::min);
        let stable = hi.is_finite() && hi / lo <= 3.0;
        verdicts.insert("universal_decay".to_string(), verdict(stable));
        verdicts.insert("decay_sup_ratio".to_string(), serde_json::json!(hi / lo));
    }

    let mut series = Vec::new();
    for (i, p) in report.probe_times.iter().enumerate() {
        series.push(Series {
            label: format!("E0(t={p})"),
            points: report
                .cells
                .iter()
                .filter(|c| c.error.is_none() && c.amplitude > 0.0)
                .map(|c| (c.amplitude, c.energies[i]))
                .collect(),
            color: color(i),
            dashed: false,
        });
    }
    log_log_plot(
        "energy at probe times vs initial amplitude",
        "amplitude",
        "E0",
        &series,
        &writer.dir.join("saturation.svg"),
    )?;
    writer.track("saturation.svg")?;

    let violation = report.universality == config.expect_universality_fail;
    Ok((verdicts, violation))
}

fn assumptions(
    config: &RunConfig,
    writer: &mut Writer,
) -> Result<(BTreeMap<String, serde_json::Value>, bool)> {
    let system = config.build_system()?;
    let report = verify_assumptions(
        &system,
        config.assumption_samples,
        config.assumption_amplitudes,
        config.seed,
    )?;
    writer.write("assumptions.json", &serde_json::to_string_pretty(&report)?)?;

    let mut verdicts = BTreeMap::new();
    let mut violation = false;
    for check in report.checks() {
        let value = match check.holds_declared {
            Some(ok) => {
                violation |= !ok;
                verdict(ok)
            }
            None => serde_json::json!({
                "fitted_leading": check.fitted.0,
                "fitted_additive": check.fitted.1,
            }),
        };
        verdicts.insert(format!("assumption_{}", check.name), value);
    }
    Ok((verdicts, violation))
}

/// Executes the configured experiment into `config.out_dir`, writing data
/// files, figures, and `manifest.json` last.
pub fn run_experiment(config: &RunConfig) -> Result<RunOutcome> {
    let started = std::time::Instant::now();
    let mut config = config.clone();
    config.validate()?;
    let out_dir = config.out_dir.clone();
    let mut writer = Writer::new(&out_dir)?;

    let (verdicts, violations) = match config.experiment {
        ExperimentKind::Simulate => simulate(&config, &mut writer)?,
        ExperimentKind::Sweep => sweep(&config, &mut writer)?,
        ExperimentKind::VerifyAssumptions => assumptions(&config, &mut writer)?,
    };

    let manifest = Manifest {
        seed: config.seed,
        config,
        tool_version: env!("CARGO_PKG_VERSION"),
        verdicts,
        files: writer.files.clone(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out_dir.join("manifest.json"), &manifest_json)?;

    Ok(RunOutcome {
        out_dir,
        manifest,
        violations,
    })
}

/// Re-renders the energy figure of a run from its own CSV data.
fn replot_from_csv(run_dir: &Path) -> Result<bool> {
    let csv_path = run_dir.join("trajectory.csv");
    if !csv_path.exists() {
        return Ok(false);
    }
    let text = std::fs::read_to_string(&csv_path)?;
    let mut e0 = Vec::new();
    let mut phi = Vec::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 4 {
            continue;
        }
        if let (Ok(t), Ok(e), Ok(p)) = (
            cols[0].parse::<f64>(),
            cols[1].parse::<f64>(),
            cols[3].parse::<f64>(),
        ) {
            e0.push((t, e));
            phi.push((t, p));
        }
    }
    if e0.is_empty() {
        return Ok(false);
    }
    log_log_plot(
        "energy decay (re-rendered from trajectory.csv)",
        "t",
        "energy",
        &[
            Series {
                label: "E0".to_string(),
                points: e0,
                color: color(0),
                dashed: false,
            },
            Series {
                label: "Phi".to_string(),
                points: phi,
                color: color(1),
                dashed: true,
            },
        ],
        &run_dir.join("report.svg"),
    )?;
    Ok(true)
}

/// Renders an existing run directory into a human-readable summary
/// (written as `summary.txt` in the directory and returned), re-plotting
/// the energy figure from the stored CSV when one is present.
pub fn render_report(run_dir: &Path) -> Result<String> {
    let manifest_path = run_dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| {
        Error::Config(format!(
            "cannot read manifest {}: {e}",
            manifest_path.display()
        ))
    })?;
    let manifest: serde_json::Value = serde_json::from_str(&text)?;

    let mut out = String::new();
    let _ = writeln!(out, "run directory: {}", run_dir.display());
    if let Some(seed) = manifest.get("seed") {
        let _ = writeln!(out, "seed: {seed}");
    }
    if let Some(wall) = manifest.get("wall_time_s").and_then(|v| v.as_f64()) {
        let _ = writeln!(out, "wall time: {wall:.3} s");
    }
    let _ = writeln!(out, "\nverdicts:");
    if let Some(verdicts) = manifest.get("verdicts").and_then(|v| v.as_object()) {
        for (k, v) in verdicts {
            let _ = writeln!(out, "  {k}: {v}");
        }
    }
    let _ = writeln!(out, "\nfiles:");
    if let Some(files) = manifest.get("files").and_then(|v| v.as_array()) {
        for f in files {
            let path = f.get("path").and_then(|v| v.as_str()).unwrap_or("?");
            let sha = f.get("sha256").and_then(|v| v.as_str()).unwrap_or("?");
            let _ = writeln!(out, "  {path}  sha256:{}…", &sha[..16.min(sha.len())]);
        }
    }
    if replot_from_csv(run_dir)? {
        let _ = writeln!(out, "\nre-rendered figure: report.svg");
    }
    std::fs::write(run_dir.join("summary.txt"), &out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_dir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("decaylab-exp-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn simulate_writes_csv_manifest_and_plot() {
        let dir = temp_dir("simulate");
        let mut cfg = RunConfig::from_str(&format!(
            "experiment = simulate\nmodel = scalar\nalpha = 1\nbeta = 3\n\
             amplitudes = 10\nt_end = 10\nprobe_times = 0.1, 1, 10\nfit_window = 1,10\n\
             out_dir = {}",
            dir.display()
        ))
        .unwrap();
        cfg.validate().unwrap();
        let outcome = run_experiment(&cfg).unwrap();
        assert!(
            !outcome.violations,
            "verdicts: {:?}",
            outcome.manifest.verdicts
        );
        let csv = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
        assert!(csv.starts_with(TRAJECTORY_CSV_HEADER));
        assert!(dir.join("manifest.json").exists());
        assert!(dir.join("energy.svg").exists());
        assert!(dir.join("certificates.json").exists());

        let summary = render_report(&dir).unwrap();
        assert!(summary.contains("verdicts"));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn identical_seed_gives_bit_identical_csv() {
        let dir_a = temp_dir("det-a");
        let dir_b = temp_dir("det-b");
        for dir in [&dir_a, &dir_b] {
            let mut cfg = RunConfig::from_str(&format!(
                "experiment = sweep\nmodel = scalar\nbeta = 3\namplitudes = 1, 10\n\
                 probe_times = 1\nt_end = 1\nfit_window = 0.1,1\nseed = 9\njobs = 2\n\
                 out_dir = {}",
                dir.display()
            ))
            .unwrap();
            cfg.validate().unwrap();
            run_experiment(&cfg).unwrap();
        }
        let a = std::fs::read(dir_a.join("sweep.csv")).unwrap();
        let b = std::fs::read(dir_b.join("sweep.csv")).unwrap();
        assert_eq!(a, b);
        let _ = std::fs::remove_dir_all(&dir_a);
        let _ = std::fs::remove_dir_all(&dir_b);
    }

    #[test]
    fn wave_sweep_passes_bound_and_decay_verdicts() {
        // Dirichlet wave, lambda = mu = 0, h = 0, alpha = 1, beta = 2,
        // N = 16, M = 48: probes past the bound transient saturate and the
        // decay sup is amplitude stable.
        let dir = temp_dir("wave-verdicts");
        let mut cfg = RunConfig::from_str(&format!(
            "experiment = sweep\nmodel = wave\nboundary = dirichlet\nmodes = 16\n\
             grid_points = 48\nalpha = 1\nbeta = 2\nshape = random-modal\n\
             amplitudes = 100, 10000\nprobe_times = 10, 100\nt_end = 100\n\
             fit_window = 5,100\nsaturation_decades = 4\njobs = 2\nout_dir = {}",
            dir.display()
        ))
        .unwrap();
        cfg.validate().unwrap();
        let outcome = run_experiment(&cfg).unwrap();
        assert_eq!(
            outcome.manifest.verdicts.get("universal_bound"),
            Some(&serde_json::json!("pass")),
            "{:?}",
            outcome.manifest.verdicts
        );
        assert_eq!(
            outcome.manifest.verdicts.get("universal_decay"),
            Some(&serde_json::json!("pass")),
            "{:?}",
            outcome.manifest.verdicts
        );
        assert!(!outcome.violations);
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn oscillator_simulate_skips_certificates_gracefully() {
        let dir = temp_dir("oscillator");
        let mut cfg = RunConfig::from_str(&format!(
            "experiment = simulate\nmodel = oscillator\nomega = 1\ndelta = 1\nrho = 1\n\
             amplitudes = 2\nt_end = 5\nprobe_times = 1, 5\nfit_window = 1,5\nout_dir = {}",
            dir.display()
        ))
        .unwrap();
        cfg.validate().unwrap();
        let outcome = run_experiment(&cfg).unwrap();
        assert!(outcome.manifest.verdicts.contains_key("certificates"));
        assert!(dir.join("trajectory.csv").exists());
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn manifest_lists_every_output_with_hash() {
        let dir = temp_dir("manifest");
        let mut cfg = RunConfig::from_str(&format!(
            "experiment = verify-assumptions\nmodel = scalar\nbeta = 3\nout_dir = {}",
            dir.display()
        ))
        .unwrap();
        cfg.validate().unwrap();
        let outcome = run_experiment(&cfg).unwrap();
        for entry in &outcome.manifest.files {
            let bytes = std::fs::read(dir.join(&entry.path)).unwrap();
            assert_eq!(hex_digest(&bytes), entry.sha256, "hash of {}", entry.path);
        }
        let _ = std::fs::remove_dir_all(&dir);
    }
}
