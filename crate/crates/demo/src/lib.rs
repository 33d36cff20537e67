//! Browser demo bindings: three interactive views on the universal
//! bound/decay phenomenology, returned as JSON for a static page to plot.
//!
//! Build for the web with `wasm-pack build crates/demo --target web` and
//! serve `crates/demo/www/`. The functions are plain computations, so they
//! run (and are tested) on the host as well.

use decaylab::certificates::{comparison_majorant, comparison_oracle, fit_power_law, Exponents};
use decaylab::harness::{amplitude_sweep, RunConfig};
use decaylab::integrator::{integrate_on_grid, Tolerances};
use decaylab::models::{build_scalar_ode, State};
use wasm_bindgen::prelude::wasm_bindgen;

fn err_json(message: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": format!("{message}") }).to_string()
}

fn demo_tolerances() -> Tolerances {
    // Interactive budget: slightly looser than the lab defaults.
    Tolerances {
        rel_tol: 1e-8,
        abs_tol: 1e-11,
        energy_tol: 1e-7,
        ..Default::default()
    }
}

fn log_grid(lo: f64, hi: f64, with_zero: bool) -> Vec<f64> {
    let mut grid = if with_zero { vec![0.0] } else { Vec::new() };
    let mut t = lo;
    while t < hi {
        grid.push(t);
        t *= 1.06;
    }
    grid.push(hi);
    grid
}

/// Energy decay of the scalar model `u'' + |u'|^α u' + |u|^β u = 0` from
/// `(amplitude, 0)`: samples of `E₀(t)`, the theoretical rates, the fitted
/// log-log slope, and the minimax decay envelope.
#[wasm_bindgen]
pub fn decay_curve(alpha: f64, beta: f64, amplitude: f64, t_end: f64) -> String {
    let amplitude = amplitude.clamp(0.0, 1e6);
    let t_end = t_end.clamp(1.0, 1e4);
    let system = match build_scalar_ode(alpha, beta) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let grid = log_grid(t_end * 1e-4, t_end, true);
    let state = State::new(0.0, vec![amplitude], vec![0.0]);
    let trajectory = match integrate_on_grid(&system, &state, &grid, &demo_tolerances()) {
        Ok(t) => t,
        Err(e) => return err_json(e),
    };
    let ts: Vec<f64> = trajectory.times().collect();
    let es = trajectory.energies(&system);

    let exponents = Exponents::new(alpha, beta).ok();
    let window = (1.0_f64.min(t_end / 10.0).max(t_end * 1e-2), t_end);
    let fit = fit_power_law(&ts, &es, window).ok();
    let envelope = exponents.map(|x| {
        let rate = x.decay_rate();
        let d = ts
            .iter()
            .zip(&es)
            .filter(|(t, _)| **t >= window.0)
            .map(|(t, e)| e * t.powf(rate))
            .fold(0.0_f64, f64::max);
        (rate, d)
    });

    serde_json::json!({
        "t": ts,
        "e0": es,
        "exponents": exponents.map(|x| serde_json::json!({
            "gamma_min": x.gamma_min,
            "gamma_max": x.gamma_max,
            "bound_rate": x.bound_rate(),
            "decay_rate": x.decay_rate(),
            "strong_decay_rate": x.strong_decay_rate(),
        })),
        "regime": if alpha < beta { "bounded (alpha < beta)" } else { "no universal bound (alpha >= beta)" },
        "fit_slope": fit.map(|f| f.slope),
        "fit_window": [window.0, window.1],
        "envelope_rate": envelope.map(|(r, _)| r),
        "envelope_coefficient": envelope.map(|(_, d)| d),
        "max_energy_residual": trajectory.max_energy_residual(),
    })
    .to_string()
}

/// Amplitude sweep of the scalar model: `E₀(probe_time)` over decade-spaced
/// amplitudes `1..10^decades`, with the saturation verdict. In the regime
/// `α ≥ β` the ceiling never saturates — that is the falsification view.
#[wasm_bindgen]
pub fn sweep_saturation(alpha: f64, beta: f64, decades: f64, probe_time: f64) -> String {
    let decades = decades.clamp(1.0, 6.0) as usize;
    let probe_time = probe_time.clamp(0.1, 100.0);
    let amplitudes: Vec<String> = (0..=decades).map(|d| format!("1e{d}")).collect();
    let text = format!(
        "experiment = sweep\nmodel = scalar\nalpha = {alpha}\nbeta = {beta}\n\
         amplitudes = {}\nprobe_times = {probe_time}\nt_end = {probe_time}\n\
         fit_window = {},{probe_time}\nrel_tol = 1e-8\nabs_tol = 1e-11\nenergy_tol = 1e-7\n",
        amplitudes.join(","),
        probe_time / 10.0,
    );
    let mut config = match RunConfig::from_str(&text) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    if let Err(e) = config.validate() {
        return err_json(e);
    }
    let report = match amplitude_sweep(&config) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    let energies: Vec<Option<f64>> = (0..report.amplitudes.len())
        .map(|i| report.energy_at(i, 0))
        .collect();
    // serde_json writes non-finite floats as null; clamp the ratio so the
    // page always gets a number
    let ratio = report
        .saturation
        .first()
        .map(|r| if r.is_finite() { *r } else { 1e18 });
    serde_json::json!({
        "amplitudes": report.amplitudes,
        "probe_time": probe_time,
        "e0": energies,
        "saturation_ratio": ratio,
        "universality": report.universality,
        "regime": if alpha < beta { "bounded (alpha < beta)" } else { "no universal bound (alpha >= beta)" },
    })
    .to_string()
}

/// The comparison principle, live: integrate `Φ' = −ρΦ^{1+γ} + M` from `phi0`
/// and overlay the explicit majorant `Ψ(t)`.
#[wasm_bindgen]
pub fn majorant_curve(gamma: f64, rho: f64, m: f64, phi0: f64, t_end: f64) -> String {
    let t_end = t_end.clamp(1.0, 1e4);
    let t_lo = t_end * 1e-3;
    if let Err(e) = comparison_majorant(gamma, rho, m, t_lo) {
        return err_json(e);
    }
    let grid = log_grid(t_lo, t_end, false);
    let psi: Vec<f64> = grid
        .iter()
        .map(|t| comparison_majorant(gamma, rho, m, *t).expect("validated above"))
        .collect();

    // Reuse the oracle for the worst violation, then sample Φ on the grid
    // by integrating once more over the full span.
    let worst = match comparison_oracle(gamma, rho, m, phi0.max(0.0), (t_lo, t_end)) {
        Ok(w) => w,
        Err(e) => return err_json(e),
    };
    let mut phi = Vec::with_capacity(grid.len());
    {
        // simple log-stepped re-integration via the certificate mode's own
        // pieces: Φ is monotone toward (M/ρ)^{1/(1+γ)}, cheap to resample
        let mut full = vec![0.0];
        full.extend_from_slice(&grid);
        let sys_rhs = move |_t: f64, y: f64| -> f64 { -rho * y.max(0.0).powf(1.0 + gamma) + m };
        // fixed fine RK4 resampling is enough for display purposes
        let mut y = phi0.max(0.0);
        let mut idx = 1;
        let mut t = 0.0;
        while idx < full.len() {
            let target = full[idx];
            let n_sub = 200;
            let h = (target - t) / n_sub as f64;
            for _ in 0..n_sub {
                let k1 = sys_rhs(t, y);
                let k2 = sys_rhs(t + 0.5 * h, y + 0.5 * h * k1);
                let k3 = sys_rhs(t + 0.5 * h, y + 0.5 * h * k2);
                let k4 = sys_rhs(t + h, y + h * k3);
                y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                t += h;
                if !y.is_finite() {
                    return err_json("display integration diverged");
                }
            }
            phi.push(y);
            idx += 1;
        }
    }

    serde_json::json!({
        "t": grid,
        "phi": phi,
        "psi": psi,
        "worst_violation": worst,
        "equilibrium": (m / rho).powf(1.0 / (1.0 + gamma)),
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_curve_reports_rates() {
        let text = decay_curve(1.0, 3.0, 100.0, 100.0);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.get("error").is_none(), "{text}");
        assert_eq!(v["exponents"]["decay_rate"].as_f64().unwrap(), 2.0);
        assert!(v["t"].as_array().unwrap().len() > 50);
        let slope = v["fit_slope"].as_f64().unwrap();
        assert!(slope < -1.0, "slope {slope}");
    }

    #[test]
    fn decay_curve_flags_runaway_regime() {
        let text = decay_curve(2.0, 1.0, 10.0, 10.0);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["exponents"].is_null());
        assert!(v["regime"].as_str().unwrap().contains("no universal bound"));
    }

    #[test]
    fn sweep_saturation_verdicts_split_by_regime() {
        let bounded: serde_json::Value =
            serde_json::from_str(&sweep_saturation(1.0, 3.0, 4.0, 1.0)).unwrap();
        assert_eq!(bounded["universality"], true, "{bounded}");
        let runaway: serde_json::Value =
            serde_json::from_str(&sweep_saturation(1.0, 1.0, 4.0, 1.0)).unwrap();
        assert_eq!(runaway["universality"], false, "{runaway}");
    }

    #[test]
    fn majorant_curve_stays_dominating() {
        let v: serde_json::Value =
            serde_json::from_str(&majorant_curve(0.5, 1.0, 2.0, 1e3, 100.0)).unwrap();
        assert!(v.get("error").is_none(), "{v}");
        let worst = v["worst_violation"].as_f64().unwrap();
        assert!(worst <= 1e-8, "worst {worst}");
        let phi = v["phi"].as_array().unwrap();
        let psi = v["psi"].as_array().unwrap();
        for (a, b) in phi.iter().zip(psi) {
            assert!(a.as_f64().unwrap() <= b.as_f64().unwrap() + 1e-6);
        }
    }

    #[test]
    fn invalid_inputs_produce_error_json() {
        let v: serde_json::Value =
            serde_json::from_str(&decay_curve(-1.0, 3.0, 1.0, 10.0)).unwrap();
        assert!(v.get("error").is_some());
        let v: serde_json::Value =
            serde_json::from_str(&majorant_curve(-0.5, 1.0, 0.0, 1.0, 10.0)).unwrap();
        assert!(v.get("error").is_some());
    }
}
