//! Subcommand implementations. Every report is JSON with a `format_version` field.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use cryomux::chain::io::{read_points_csv, read_trace_csv, write_trace_csv};
use cryomux::chain::{power_at_sample, synthesize_sweep_seeded, through_trace, ChainSpec, SweepSpec, FORMAT_VERSION};
use cryomux::fitkit::{
    fit_power_sweep, fit_spectrum, photon_axis, stark_closed_form, stark_forward, stark_invert, FitParam,
    SpectrumFitOptions, StarkContext, TemperatureConvention, Truncation,
};
use cryomux::lossbudget::{budget_total, LossComponent, TlsModel};
use cryomux::muxsim::{dissipated_power, mux_s_params, programming_time, ControlMode, ControlState, MuxConfig, PowerTable};
use cryomux::resonator::purcell;
use cryomux::rfnet::FrequencyGrid;
use cryomux::units::{rad_to_hz, s_to_db, watts_to_dbm};
use cryomux::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::{with_file, Context};
use crate::{Command, Mode, Outcome};

pub fn dispatch(ctx: &Context, cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Simulate { chain, sweep, out, through_out, seed } => {
            simulate(ctx, &chain, &sweep, &out, through_out.as_deref(), seed)
        }
        Command::FitSpectrum { trace, through, p_sample_dbm, chain, sweep, out } => {
            let power = match (p_sample_dbm, chain, sweep) {
                (Some(p), _, _) => PowerSource::Dbm(p),
                (None, Some(c), Some(s)) => PowerSource::Chain(ctx.load_json(&c)?, ctx.load_json(&s)?),
                _ => PowerSource::None,
            };
            fit_spectrum_cmd(ctx, &trace, through.as_deref(), power, out.as_deref())
        }
        Command::FitPower { points, q_c_mag, out } => fit_power_cmd(ctx, &points, q_c_mag, out.as_deref()),
        Command::LossBudget { components, out } => loss_budget_cmd(ctx, &components, out.as_deref()),
        Command::Stark { chi, nu_r, nu_q, delta_ac, temp } => stark_cmd(chi, nu_r, nu_q, delta_ac, temp),
        Command::MuxProgram { mode, port, vdd, tclk, config, out, start_hz, stop_hz, points } => {
            let cfg: MuxConfig<f64> = match config {
                Some(p) => ctx.load_json(&p)?,
                None => MuxConfig::default(),
            };
            let grid = FrequencyGrid::linspace(start_hz, stop_hz, points)?;
            mux_program_cmd(&cfg, mode, port, vdd, tclk, &grid, out.as_deref())
        }
    }
}

fn emit<R: Serialize>(report: &R, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))? + "\n";
    if let Some(path) = out {
        std::fs::write(path, &text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    print!("{text}");
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn dressed_frequency(chain: &ChainSpec) -> Result<f64> {
    for st in &chain.stages {
        if let cryomux::chain::Stage::Sample { system, .. } = st {
            return Ok(rad_to_hz(purcell(&system.system()?)?.omega_r_dressed));
        }
    }
    Err(Error::InvalidInput("chain has no sample stage".into()))
}

#[derive(Serialize)]
struct SimulateReport {
    format_version: u32,
    seed: u64,
    points: usize,
    instrument_power_dbm: f64,
    drive_hz: f64,
    power_at_sample_w: f64,
    power_at_sample_dbm: f64,
    noise_sigma: Option<f64>,
}

fn simulate(ctx: &Context, chain: &Path, sweep: &Path, out: &Path, through_out: Option<&Path>, seed: Option<u64>) -> Result<Outcome> {
    let chain: ChainSpec = ctx.load_json(chain)?;
    let sweep: SweepSpec = ctx.load_json(sweep)?;
    chain.validate()?;
    sweep.validate()?;
    let seed = seed.unwrap_or(chain.rng_seed);
    let trace = synthesize_sweep_seeded(&chain, &sweep, seed)?;
    write_trace_csv(create(out)?, &trace)?;
    if let Some(path) = through_out {
        write_trace_csv(create(path)?, &through_trace(&chain, &sweep)?)?;
    }
    let drive = dressed_frequency(&chain)?;
    let p = power_at_sample(&chain, sweep.instrument_power_dbm, drive)?;
    let noise_sigma = trace.sigma.as_ref().map(|s| s.iter().sum::<f64>() / s.len() as f64);
    emit(
        &SimulateReport {
            format_version: FORMAT_VERSION,
            seed,
            points: trace.len(),
            instrument_power_dbm: sweep.instrument_power_dbm,
            drive_hz: drive,
            power_at_sample_w: p,
            power_at_sample_dbm: watts_to_dbm(p),
            noise_sigma,
        },
        None,
    )?;
    Ok(Outcome::Ok)
}

enum PowerSource {
    None,
    Dbm(f64),
    Chain(ChainSpec, SweepSpec),
}

#[derive(Serialize)]
struct SpectrumReport {
    format_version: u32,
    converged: bool,
    status: cryomux::fitkit::LmStatus,
    iterations: usize,
    residual_norm: f64,
    full_rank: bool,
    f_r_hz: f64,
    q_loaded: f64,
    q_c_mag: f64,
    q_internal: Option<f64>,
    phi_rad: f64,
    params: Vec<FitParam<f64>>,
    power_at_sample_dbm: Option<f64>,
    n_photons: Option<f64>,
}

fn load_trace(ctx: &Context, path: &Path) -> Result<cryomux::fitkit::ComplexTrace<f64>> {
    read_trace_csv(ctx.read_text(path)?.as_bytes()).map_err(|e| with_file(e, path))
}

fn fit_spectrum_cmd(ctx: &Context, trace: &Path, through: Option<&Path>, power: PowerSource, out: Option<&Path>) -> Result<Outcome> {
    let mut tr = load_trace(ctx, trace)?;
    if let Some(t) = through {
        tr = tr.normalize_by(&load_trace(ctx, t)?)?;
    }
    let fit = fit_spectrum(&tr, &SpectrumFitOptions::default())?;
    let m = &fit.model;
    let p_dbm = match &power {
        PowerSource::None => None,
        PowerSource::Dbm(p) => Some(*p),
        PowerSource::Chain(c, s) => Some(watts_to_dbm(power_at_sample(c, s.instrument_power_dbm, m.f_r)?)),
    };
    let n_photons = match p_dbm {
        Some(p) if fit.converged => Some(photon_axis(cryomux::units::dbm_to_watts(p), &fit, m.f_r)?),
        _ => None,
    };
    let report = SpectrumReport {
        format_version: FORMAT_VERSION,
        converged: fit.converged,
        status: fit.status,
        iterations: fit.iterations,
        residual_norm: fit.residual_norm,
        full_rank: fit.full_rank,
        f_r_hz: m.f_r,
        q_loaded: m.q_loaded,
        q_c_mag: m.q_c_mag,
        q_internal: m.q_internal().ok(),
        phi_rad: m.phi,
        params: fit.params.clone(),
        power_at_sample_dbm: p_dbm,
        n_photons,
    };
    emit(&report, out)?;
    Ok(if fit.converged { Outcome::Ok } else { Outcome::Unconverged })
}

#[derive(Serialize)]
struct PowerFitReport {
    format_version: u32,
    converged: bool,
    status: cryomux::fitkit::LmStatus,
    iterations: usize,
    residual_norm: f64,
    full_rank: bool,
    params: Vec<FitParam<f64>>,
    /// Internal Q in the zero-power limit.
    q_internal_low_power: f64,
    q_internal_single_photon: f64,
    model: TlsModel<f64>,
}

fn fit_power_cmd(ctx: &Context, points: &Path, q_c_mag: Option<f64>, out: Option<&Path>) -> Result<Outcome> {
    let pts = read_points_csv(ctx.read_text(points)?.as_bytes()).map_err(|e| with_file(e, points))?;
    let fit = fit_power_sweep(&pts, q_c_mag)?;
    let report = PowerFitReport {
        format_version: FORMAT_VERSION,
        converged: fit.converged,
        status: fit.status,
        iterations: fit.iterations,
        residual_norm: fit.residual_norm,
        full_rank: fit.full_rank,
        params: fit.params.clone(),
        q_internal_low_power: fit.model.q_internal(0.0)?,
        q_internal_single_photon: fit.model.q_internal(1.0)?,
        model: fit.model.clone(),
    };
    emit(&report, out)?;
    Ok(if fit.converged { Outcome::Ok } else { Outcome::Unconverged })
}

#[derive(Deserialize)]
struct BudgetFile {
    format_version: u32,
    samples: Vec<BudgetSample>,
}

#[derive(Deserialize)]
struct BudgetSample {
    name: String,
    #[serde(default)]
    description: Option<String>,
    components: Vec<BudgetEntry>,
    #[serde(default)]
    q0: Option<f64>,
    #[serde(default)]
    reference: Option<Reference>,
}

#[derive(Deserialize)]
struct BudgetEntry {
    name: String,
    participation: f64,
    tan_delta: f64,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct Reference {
    total_loss: f64,
    q_factor: Option<f64>,
}

#[derive(Serialize)]
struct BudgetReportOut {
    format_version: u32,
    samples: Vec<SampleReport>,
}

#[derive(Serialize)]
struct ComponentReport {
    name: String,
    participation: f64,
    tan_delta: f64,
    loss: f64,
}

#[derive(Serialize)]
struct SampleReport {
    name: String,
    description: Option<String>,
    components: Vec<ComponentReport>,
    total_loss: f64,
    q_factor: Option<f64>,
    reference: Option<Reference>,
    total_loss_rel_diff: Option<f64>,
    notes: Vec<String>,
}

/// Relative disagreement above which a reference cell gets a note.
const REFERENCE_TOLERANCE: f64 = 0.02;

fn loss_budget_cmd(ctx: &Context, path: &Path, out: Option<&Path>) -> Result<Outcome> {
    let file: BudgetFile = ctx.load_json(path)?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::InvalidInput(format!("unsupported format_version {}", file.format_version)));
    }
    let mut samples = Vec::with_capacity(file.samples.len());
    for s in file.samples {
        for c in &s.components {
            LossComponent::new(c.name.clone(), c.participation, c.tan_delta, 1.0, 0.5)?;
        }
        let pairs: Vec<(f64, f64)> = s.components.iter().map(|c| (c.participation, c.tan_delta)).collect();
        let rep = budget_total(&pairs, s.q0)?;
        let mut notes = Vec::new();
        let rel = s.reference.map(|r| rep.total / r.total_loss - 1.0);
        if let Some(r) = rel.filter(|r| r.abs() > REFERENCE_TOLERANCE) {
            notes.push(format!("total loss differs from reference by {:.1}%", 100.0 * r));
        }
        if let Some(Reference { total_loss, q_factor: Some(q_ref) }) = s.reference {
            let implied = 1.0 / total_loss;
            if (q_ref / implied - 1.0).abs() > REFERENCE_TOLERANCE {
                notes.push(format!(
                    "reference Q-factor {q_ref:.2e} is inconsistent with its own total loss (1/{total_loss:.2e} = {implied:.2e}); \
                     reported Q-factor is 1/total loss"
                ));
            }
        }
        samples.push(SampleReport {
            name: s.name,
            description: s.description,
            components: s
                .components
                .into_iter()
                .zip(&rep.losses)
                .map(|(c, &loss)| ComponentReport { name: c.name, participation: c.participation, tan_delta: c.tan_delta, loss })
                .collect(),
            total_loss: rep.total,
            q_factor: rep.q_factor,
            reference: s.reference,
            total_loss_rel_diff: rel,
            notes,
        });
    }
    emit(&BudgetReportOut { format_version: FORMAT_VERSION, samples }, out)?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct StarkReport {
    format_version: u32,
    chi_hz: f64,
    nu_r_hz: f64,
    nu_q_hz: Option<f64>,
    delta_ac_hz: f64,
    /// Closed-form shift, present when a temperature was given.
    delta_ac_closed_form_hz: Option<f64>,
    n_mean: f64,
    temperature_k: Option<f64>,
    temperature_readout_k: f64,
    temperature_qubit_k: Option<f64>,
}

fn stark_cmd(chi: f64, nu_r: f64, nu_q: Option<f64>, delta_ac: Option<f64>, temp: Option<f64>) -> Result<Outcome> {
    let mut sc = StarkContext::new(chi, nu_r)?;
    if let Some(q) = nu_q {
        sc = sc.with_qubit(q);
        sc.validate()?;
    }
    let (delta, closed) = match (delta_ac, temp) {
        (Some(d), _) => (d, None),
        (None, Some(t)) => (stark_forward(&sc, t, Truncation::Auto)?, Some(stark_closed_form(&sc, t)?)),
        (None, None) => return Err(Error::InvalidInput("stark needs --delta-ac or --temp".into())),
    };
    let readout = stark_invert(&sc, delta, TemperatureConvention::Readout)?;
    let qubit = match nu_q {
        Some(_) => Some(stark_invert(&sc, delta, TemperatureConvention::Qubit)?.temperature),
        None => None,
    };
    emit(
        &StarkReport {
            format_version: FORMAT_VERSION,
            chi_hz: chi,
            nu_r_hz: nu_r,
            nu_q_hz: nu_q,
            delta_ac_hz: delta,
            delta_ac_closed_form_hz: closed,
            n_mean: readout.n_mean,
            temperature_k: temp,
            temperature_readout_k: readout.temperature,
            temperature_qubit_k: qubit,
        },
        None,
    )?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct MuxReport {
    format_version: u32,
    mode: ControlMode,
    n_ports: usize,
    requested_port: usize,
    selection: Option<usize>,
    v_dd: f64,
    t_clk_s: f64,
    programming_time_s: f64,
    dissipated_power_w: Option<f64>,
    s_parameters: Option<String>,
}

fn mux_program_cmd(
    cfg: &MuxConfig<f64>,
    mode: Mode,
    port: usize,
    vdd: Option<f64>,
    t_clk: f64,
    grid: &FrequencyGrid<f64>,
    out: Option<&Path>,
) -> Result<Outcome> {
    cfg.validate()?;
    let mode = match mode {
        Mode::Parallel => ControlMode::Parallel,
        Mode::Serial => ControlMode::Serial,
    };
    let fresh = ControlState::new(cfg.n_ports, mode)?;
    let state = match mode {
        ControlMode::Parallel => fresh.program_parallel(port)?,
        ControlMode::Serial => fresh.program_serial(Some(port))?,
    };
    let v_dd = vdd.unwrap_or(cfg.v_dd_nominal);
    if let Some(path) = out {
        let sp = mux_s_params(cfg, &state, v_dd, grid)?;
        let mut text = format!("# cryomux sparams format_version={FORMAT_VERSION}\n");
        text.push_str("freq_hz,port,selected,s11_re,s11_im,s21_re,s21_im,s21_db\n");
        for (i, &f) in grid.points().iter().enumerate() {
            for (p, m) in sp.iter().enumerate() {
                let s = &m.entries[i];
                let _ = writeln!(
                    text,
                    "{f:.16e},{p},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    u8::from(state.latched_selection == Some(p)),
                    s.s11.re,
                    s.s11.im,
                    s.s21.re,
                    s.s21.im,
                    s_to_db(s.s21)
                );
            }
        }
        std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    let dissipated = if cfg.n_ports == 4 { dissipated_power(&PowerTable::default_millikelvin(), v_dd).ok() } else { None };
    emit(
        &MuxReport {
            format_version: FORMAT_VERSION,
            mode,
            n_ports: cfg.n_ports,
            requested_port: port,
            selection: state.latched_selection,
            v_dd,
            t_clk_s: t_clk,
            programming_time_s: programming_time(cfg.n_ports, t_clk, mode)?,
            dissipated_power_w: dissipated,
            s_parameters: out.map(|p| p.display().to_string()),
        },
        None,
    )?;
    Ok(Outcome::Ok)
}
