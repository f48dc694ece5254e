//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and fails
//! if any criterion fails.
//!
//! Run with `cargo test -p cryomux-cli --test acceptance`.

use std::f64::consts::TAU;
use std::path::Path;
use std::process::Command;

use cryomux::fitkit::{
    fit_power_sweep, fit_spectrum, stark_closed_form, stark_forward, stark_invert, ComplexTrace, PowerSweepPoint,
    SpectrumFitOptions, StarkContext, TemperatureConvention, Truncation,
};
use cryomux::lossbudget::{qi_inverse, TlsModel};
use cryomux::muxsim::{
    dissipated_power, insertion_loss_db, isolation_db, port_s21, programming_time, rise_time_95, switching_envelope,
    ControlMode, ControlState, LineLevels, MuxConfig, PowerTable,
};
use cryomux::resonator::{
    mean_photons_from_rates, mean_photons_measurable, purcell, s21_measured, s21_physics, CavityLerSystem,
};
use cryomux::rfnet::FrequencyGrid;
use cryomux::units::s_to_db;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    rng.sample(StandardNormal)
}

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn cryomux(dir: &Path, args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_cryomux"))
        .args(args)
        .current_dir(dir)
        .env_remove("CRYOMUX_CONFIG_DIR")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON report")
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn loss_budget_totals() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = cryomux(dir.path(), &["loss-budget"]);
    if code != 0 {
        return outcome(false, format!("loss-budget exited {code}"));
    }
    let report = json(&out);
    let want = [("S4", 2.41e-7), ("S3", 4.98e-7), ("S2", 5.00e-6), ("S1", 8.37e-5)];
    let samples = report["samples"].as_array().unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, total) in want {
        let s = samples.iter().find(|s| s["name"] == name).unwrap();
        let got = s["total_loss"].as_f64().unwrap();
        pass &= rel(got, total) <= 0.02;
        parts.push(format!("{name} {got:.3e}"));
    }
    let s1 = samples.iter().find(|s| s["name"] == "S1").unwrap();
    let q = s1["q_factor"].as_f64().unwrap();
    let noted = s1["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("1.20e3"));
    pass &= (q / 1e4 * 100.0).round() / 100.0 == 1.19 && noted;
    outcome(pass, format!("{}; S1 Q {q:.3e}, note present: {noted}", parts.join(", ")))
}

fn photon_identity() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let f = rng.random_range(4e9..8e9);
        let q_l = 10f64.powf(rng.random_range(3.0..7.0));
        let q_c = q_l * rng.random_range(1.01..100.0);
        let det = rng.random_range(1e9..3e9);
        let g = rng.random_range(1e6..5e7);
        let p = 1e-3 * 10f64.powf(rng.random_range(-17.0..-10.0));
        let s = CavityLerSystem::from_targets(f, q_l, q_c, det, g).unwrap();
        let r = purcell(&s).unwrap();
        let n11 = mean_photons_from_rates(&r, s.gamma_r, p, r.omega_r_dressed).unwrap();
        let peak = s21_physics(&s, r.omega_r_dressed).unwrap().norm();
        let ql = r.omega_r_dressed / (r.kappa_pur + s.gamma_r);
        let n12 = mean_photons_measurable(peak, ql, p, r.omega_r_dressed).unwrap();
        worst = worst.max((n11 - n12).abs() / n11);
    }
    outcome(worst <= 1e-12, format!("worst relative difference {worst:.2e} over 1000 systems"))
}

/// Trace over ±10 linewidths at a 30 dB peak-power to noise-power ratio.
fn noisy_trace(sys: &CavityLerSystem<f64>, f_r: f64, q_l: f64, rng: &mut ChaCha20Rng) -> ComplexTrace<f64> {
    let lw = f_r / q_l;
    let grid = FrequencyGrid::linspace(f_r - 10.0 * lw, f_r + 10.0 * lw, 801).unwrap();
    let peak = s21_measured(sys, f_r).unwrap().norm();
    let sigma = peak / (2.0 * 1e3f64).sqrt();
    let s21 = grid
        .points()
        .iter()
        .map(|&f| s21_measured(sys, f).unwrap() + Complex::new(normal(rng), normal(rng)) * sigma)
        .collect();
    ComplexTrace::new(grid, s21, None).unwrap()
}

fn spectrum_round_trip() -> Outcome {
    let archetypes = [("S1", 4.802e9, 1.2e4), ("S2", 4.815e9, 2e5), ("S3", 4.803e9, 1.5e6), ("S4", 4.779e9, 7e6)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, f_r, q_l) in archetypes {
        let sys = CavityLerSystem::from_targets(f_r, q_l, 5e7, 2.5e9, 10e6).unwrap();
        let lw = f_r / q_l;
        let mut good = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let trace = noisy_trace(&sys, f_r, q_l, &mut rng);
            if let Ok(fit) = fit_spectrum(&trace, &SpectrumFitOptions::default()) {
                if fit.converged && rel(fit.model.q_loaded, q_l) <= 0.05 && (fit.model.f_r - f_r).abs() <= 0.1 * lw {
                    good += 1;
                }
            }
        }
        pass &= good >= 95;
        parts.push(format!("{name} {good}/100"));
    }
    outcome(pass, parts.join(", "))
}

fn cross_model() -> Outcome {
    let cases = [(4.802e9, 1.2e4, 5e7, 2.5e9, 10e6), (4.779e9, 7e6, 5e7, 2.5e9, 10e6), (5.5e9, 3e5, 2e6, 1.5e9, 30e6)];
    let mut worst = 0.0f64;
    for (f, q_l, q_c, det, g) in cases {
        let sys = CavityLerSystem::from_targets(f, q_l, q_c, det, g).unwrap();
        let r = purcell(&sys).unwrap();
        let want = r.omega_r_dressed / (r.kappa_pur + sys.gamma_r);
        let lw = f / q_l;
        let grid = FrequencyGrid::linspace(f - 10.0 * lw, f + 10.0 * lw, 801).unwrap();
        let s21 = grid.points().iter().map(|&x| s21_physics(&sys, TAU * x).unwrap().conj()).collect();
        let fit = fit_spectrum(&ComplexTrace::new(grid, s21, None).unwrap(), &SpectrumFitOptions::default()).unwrap();
        worst = worst.max(rel(fit.model.q_loaded, want));
    }
    outcome(worst <= 1e-3, format!("worst Q_L deviation {:.2e}%", 100.0 * worst))
}

fn tls_round_trip() -> Outcome {
    let truth = TlsModel::single(8.34e-5, 1.0, 0.5, 1e6).unwrap();
    let truth_params = [("p_tan_delta", 8.34e-5), ("n_c", 1.0), ("beta", 0.5), ("q0", 1e6)];
    let ns: Vec<f64> = (0..=105).map(|k| 10f64.powf(-1.0 + k as f64 / 15.0)).collect();
    let mut good = 0;
    let mut in_band = 0;
    let (mut q_low, mut q_one) = (0.0, 0.0);
    for seed in 0..100u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(1000 + seed);
        let pts: Vec<_> = ns
            .iter()
            .map(|&n| {
                let q = 1.0 / qi_inverse(&truth, n).unwrap();
                PowerSweepPoint { n_photons: n, q_loaded: q * (1.0 + 0.05 * normal(&mut rng)), q_uncertainty: 0.05 * q }
            })
            .collect();
        let Ok(fit) = fit_power_sweep(&pts, None) else { continue };
        if fit.converged && truth_params.iter().all(|&(name, want)| rel(fit.value(name).unwrap(), want) <= 0.15) {
            good += 1;
        }
        let low = fit.model.q_internal(0.0).unwrap();
        if (10e3..=14e3).contains(&low) {
            in_band += 1;
        }
        q_low += low / 100.0;
        q_one += fit.model.q_internal(1.0).unwrap() / 100.0;
    }
    outcome(
        good >= 95 && in_band >= 95,
        format!(
            "{good}/100 within 15%; low-power Q_i in (12 ± 2)e3 for {in_band}/100 (mean {q_low:.3e}); mean Q_i(n = 1) {q_one:.3e}"
        ),
    )
}

fn mux_anchors() -> Outcome {
    let c = MuxConfig::<f64>::default();
    let v = c.v_dd_nominal;
    let il6 = insertion_loss_db(&c, 0, v, 6e9).unwrap();
    let iso6 = isolation_db(&c, 0, v, 6e9).unwrap();
    let band: Vec<f64> = (0..=40).map(|k| 4e9 + 1e8 * k as f64).collect();
    let il_ok = band.iter().all(|&f| (1.0..=3.0).contains(&insertion_loss_db(&c, 0, v, f).unwrap()));
    let iso_ok = band.iter().all(|&f| (30.0..=40.0).contains(&isolation_db(&c, 0, v, f).unwrap()));
    let slope = isolation_db(&c, 0, v, 4e9).unwrap() - isolation_db(&c, 0, v, 8e9).unwrap();
    let off = s_to_db(port_s21(&c, Some(0), 0, 0.0, 6e9).unwrap());
    let pass = (il6 - 1.6).abs() <= 0.5
        && il_ok
        && (iso6 - 34.0).abs() <= 3.0
        && iso_ok
        && (5.0..=15.0).contains(&slope)
        && (off + 21.4).abs() <= 2.0;
    outcome(
        pass,
        format!(
            "IL(6 GHz) {il6:.2} dB, band [1, 3]: {il_ok}; isolation(6 GHz) {iso6:.2} dB, band [30, 40]: {iso_ok}; \
             isolation slope {slope:.2} dB; unpowered {off:.2} dB"
        ),
    )
}

fn random_op(state: &ControlState, rng: &mut ChaCha20Rng) -> cryomux::Result<ControlState> {
    match rng.random_range(0..5) {
        0 => state.parallel_write(rng.random(), rng.random(), rng.random()),
        1 => state.serial_clock(rng.random()),
        2 => state.latch(),
        3 => Ok(state.set_ps(rng.random())),
        _ => state.apply_lines(LineLevels { d0: rng.random(), d1: rng.random(), le: rng.random(), clk: rng.random(), si: rng.random(), ps: rng.random() }),
    }
}

fn control_interface() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut violations = 0;
    for _ in 0..100_000 {
        let n = rng.random_range(2..=6);
        let mode = if rng.random() { ControlMode::Parallel } else { ControlMode::Serial };
        let mut s = ControlState::new(n, mode).unwrap();
        for _ in 0..rng.random_range(1..=24) {
            if let Ok(next) = random_op(&s, &mut rng) {
                s = next;
            }
            let ones = s.shift_register.iter().filter(|b| **b).count();
            if ones > 1 || s.latched_selection != s.shift_register.iter().position(|b| *b) {
                violations += 1;
            }
        }
    }
    let mut equivalent = true;
    for port in 0..4 {
        let p = ControlState::new(4, ControlMode::Parallel).unwrap().program_parallel(port).unwrap();
        let s = ControlState::new(4, ControlMode::Serial).unwrap().program_serial(Some(port)).unwrap();
        equivalent &= p.latched_selection == Some(port) && s.latched_selection == Some(port);
    }
    let t: f64 = programming_time(4, 1e-8, ControlMode::Serial).unwrap();
    let timing = (t - 4e-8).abs() <= 1e-20;
    outcome(
        violations == 0 && equivalent && timing,
        format!("{violations} one-hot violations in 1e5 sequences; parallel/serial equivalent: {equivalent}; t(4) = {t:e} s"),
    )
}

fn dissipation_transient() -> Outcome {
    let p = dissipated_power(&PowerTable::<f64>::default_millikelvin(), 0.9).unwrap();
    let t1: f64 = rise_time_95(0.4e-9);
    let t2 = rise_time_95(0.6e-9);
    let envelope_ok = (switching_envelope(0.4e-9, t1) - 0.95f64).abs() < 1e-12;
    let pass = rel(p, 36.2e-6) <= 1e-12 && rel(t1, 1.2e-9) <= 0.01 && rel(t2, 1.8e-9) <= 0.01 && envelope_ok;
    outcome(pass, format!("P(0.9 V) = {:.4} µW; t95 = {:.3} ns, {:.3} ns", p * 1e6, t1 * 1e9, t2 * 1e9))
}

fn stark() -> Outcome {
    let ctx = StarkContext::new(-2.0e6, 5.569e9).unwrap().with_qubit(6.58e9);
    let mut worst_fwd = 0.0f64;
    let mut worst_trip = 0.0f64;
    for k in 0..200 {
        let t = 0.02 + 0.01 * k as f64;
        let fwd = stark_forward(&ctx, t, Truncation::Auto).unwrap();
        let closed = stark_closed_form(&ctx, t).unwrap();
        worst_fwd = worst_fwd.max(rel(fwd, closed));
        let back = stark_invert(&ctx, closed, TemperatureConvention::Readout).unwrap();
        worst_trip = worst_trip.max(rel(back.temperature, t));
    }
    let inv = stark_invert(&ctx, -7.7e6, TemperatureConvention::Readout).unwrap();
    let t_q = stark_invert(&ctx, -7.7e6, TemperatureConvention::Qubit).unwrap().temperature;
    let pass = worst_fwd <= 1e-12
        && inv.n_mean == 1.925
        && rel(inv.n_mean, 2.2) <= 0.2
        && (0.75..=0.85).contains(&t_q)
        && worst_trip <= 1e-9;
    outcome(
        pass,
        format!(
            "sum vs closed form {worst_fwd:.1e}; n = {}; T(nu_q) = {t_q:.3} K; round trip {worst_trip:.1e}",
            inv.n_mean
        ),
    )
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut ns = Vec::new();
    let mut pass = true;
    for seed in ["1", "2", "3", "4", "5"] {
        let (c1, sim) = cryomux(
            dir.path(),
            &["simulate", "--out", "trace.csv", "--through-out", "through.csv", "--seed", seed],
        );
        let p_dbm = json(&sim)["power_at_sample_dbm"].as_f64().unwrap_or(f64::NAN);
        let (c2, fit) = cryomux(
            dir.path(),
            &["fit-spectrum", "--trace", "trace.csv", "--through", "through.csv", "--chain", "chain.json", "--sweep", "sweep.json"],
        );
        let n = if c1 == 0 && c2 == 0 { json(&fit)["n_photons"].as_f64().unwrap_or(f64::NAN) } else { f64::NAN };
        pass &= (p_dbm + 163.0).abs() < 0.05 && (n - 1.0).abs() <= 0.1;
        ns.push(format!("{n:.3}"));
    }
    outcome(pass, format!("<n> at -163 dBm over 5 seeds: {}", ns.join(", ")))
}

fn determinism() -> Outcome {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        let mut bytes = Vec::new();
        bytes.extend(cryomux(d, &["simulate", "--out", "t.csv", "--through-out", "th.csv", "--seed", "42"]).1);
        bytes.extend(std::fs::read(d.join("t.csv")).unwrap());
        bytes.extend(std::fs::read(d.join("th.csv")).unwrap());
        bytes.extend(cryomux(d, &["fit-spectrum", "--trace", "t.csv", "--through", "th.csv", "--p-sample-dbm", "-163"]).1);
        bytes.extend(cryomux(d, &["loss-budget"]).1);
        bytes.extend(cryomux(d, &["mux-program", "--mode", "serial", "--port", "2", "--out", "sp.csv"]).1);
        bytes.extend(std::fs::read(d.join("sp.csv")).unwrap());
        bytes.extend(cryomux(d, &["stark", "--chi", "-2e6", "--nu-r", "5.569e9", "--temp", "0.1"]).1);
        bytes
    };
    let a = run();
    let b = run();
    outcome(a == b && !a.is_empty(), format!("{} bytes compared across two runs", a.len()))
}

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("loss budget totals", loss_budget_totals),
        ("photon-number identity", photon_identity),
        ("spectrum fit round trip", spectrum_round_trip),
        ("cross-model Q_L", cross_model),
        ("TLS fit round trip", tls_round_trip),
        ("mux dB anchors", mux_anchors),
        ("control interface", control_interface),
        ("dissipation and transient", dissipation_transient),
        ("Stark thermometry", stark),
        ("end-to-end photon number", end_to_end),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("criterion {:>2} {}: {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
