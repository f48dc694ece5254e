//! Measurement-chain forward model: stages between the instrument and the receiver,
//! seeded noise, and power series of spectrum fits.

pub mod io;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitkit::{fit_spectrum, photon_axis, ComplexTrace, FitResult, PowerSweepPoint, SpectrumFitOptions};
use crate::lossbudget::{qi_inverse, TlsModel};
use crate::muxsim::{port_s21, ControlMode, ControlState, MuxConfig};
use crate::resonator::{mean_photons_from_rates, purcell, s21_measured, CavityLerSystem, LorentzianParams};
use crate::rfnet::FrequencyGrid;
use crate::units::{db_to_amplitude, db_to_power_ratio, dbm_to_watts, hz_to_rad, rad_to_hz, BOLTZMANN};

pub const FORMAT_VERSION: u32 = 1;

fn default_noise_temp() -> f64 {
    4.0
}

fn default_averages() -> u32 {
    1
}

fn default_rbw() -> f64 {
    1e3
}

/// Resonator sample description in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSystem {
    /// Symmetric coupling tuned to hit a dressed frequency and Q values.
    Targets { f_dressed_hz: f64, q_loaded: f64, q_coupling: f64, detuning_hz: f64, g_hz: f64 },
    RatesHz {
        cavity_hz: f64,
        resonator_hz: f64,
        g_hz: f64,
        kappa_i_hz: f64,
        kappa_o_hz: f64,
        gamma_c_hz: f64,
        gamma_r_hz: f64,
    },
}

impl SampleSystem {
    pub fn system(&self) -> Result<CavityLerSystem<f64>> {
        match *self {
            Self::Targets { f_dressed_hz, q_loaded, q_coupling, detuning_hz, g_hz } => {
                CavityLerSystem::from_targets(f_dressed_hz, q_loaded, q_coupling, detuning_hz, g_hz)
            }
            Self::RatesHz { cavity_hz, resonator_hz, g_hz, kappa_i_hz, kappa_o_hz, gamma_c_hz, gamma_r_hz } => {
                let sys = CavityLerSystem {
                    omega_c: hz_to_rad(cavity_hz),
                    omega_r: hz_to_rad(resonator_hz),
                    g: hz_to_rad(g_hz),
                    kappa_i: hz_to_rad(kappa_i_hz),
                    kappa_o: hz_to_rad(kappa_o_hz),
                    gamma_c: hz_to_rad(gamma_c_hz),
                    gamma_r: hz_to_rad(gamma_r_hz),
                };
                sys.validate()?;
                Ok(sys)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Stage {
    Attenuator {
        db: f64,
    },
    /// Switch programmed (in parallel mode) to `port`; the signal passes `port`.
    Mux {
        #[serde(default)]
        config: MuxConfig<f64>,
        port: usize,
        #[serde(default)]
        v_dd: Option<f64>,
    },
    /// With `tls`, the internal loss follows the drive-dependent TLS model.
    Sample {
        system: SampleSystem,
        #[serde(default)]
        tls: Option<TlsModel<f64>>,
    },
    Bandpass {
        f_lo_hz: f64,
        f_hi_hz: f64,
        rejection_db: f64,
    },
    Amplifier {
        gain_db: f64,
        #[serde(default = "default_noise_temp")]
        noise_temp_k: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub format_version: u32,
    #[serde(default)]
    pub rng_seed: u64,
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub format_version: u32,
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points_per_trace: usize,
    pub instrument_power_dbm: f64,
    #[serde(default = "default_averages")]
    pub averages: u32,
    #[serde(default = "default_rbw")]
    pub resolution_bandwidth_hz: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        check_version(self.format_version)?;
        if self.averages < 1 {
            return Err(Error::invalid("averages must be >= 1"));
        }
        if !(self.resolution_bandwidth_hz > 0.0) {
            return Err(Error::invalid("resolution_bandwidth_hz must be > 0"));
        }
        if !(self.stop_hz > self.start_hz) || self.points_per_trace < 2 {
            return Err(Error::invalid("sweep needs stop_hz > start_hz and at least 2 points"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<FrequencyGrid<f64>> {
        FrequencyGrid::linspace(self.start_hz, self.stop_hz, self.points_per_trace)
    }
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::invalid(format!("unsupported format_version {v}, expected {FORMAT_VERSION}")));
    }
    Ok(())
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        check_version(self.format_version)?;
        let mut samples = 0;
        for st in &self.stages {
            match st {
                Stage::Attenuator { db } if !db.is_finite() => return Err(Error::invalid("attenuator db must be finite")),
                Stage::Mux { config, port, v_dd } => {
                    config.validate()?;
                    if *port >= config.n_ports {
                        return Err(Error::InvalidSelection(format!("mux port {port} not present")));
                    }
                    if let Some(v) = v_dd {
                        if !(*v >= 0.0) {
                            return Err(Error::invalid("mux v_dd must be >= 0"));
                        }
                    }
                }
                Stage::Sample { system, tls } => {
                    samples += 1;
                    system.system()?;
                    if let Some(m) = tls {
                        m.validate()?;
                    }
                }
                Stage::Bandpass { f_lo_hz, f_hi_hz, .. } if !(f_lo_hz < f_hi_hz) => {
                    return Err(Error::invalid("bandpass needs f_lo_hz < f_hi_hz"));
                }
                Stage::Amplifier { noise_temp_k, .. } if !(*noise_temp_k >= 0.0) => {
                    return Err(Error::invalid("noise_temp_k must be >= 0"));
                }
                _ => {}
            }
        }
        if samples == 0 {
            return Err(Error::invalid("chain has no sample stage"));
        }
        Ok(())
    }

    /// Same chain with every sample stage removed, as for a through measurement.
    pub fn without_samples(&self) -> Self {
        Self { stages: self.stages.iter().filter(|s| !matches!(s, Stage::Sample { .. })).cloned().collect(), ..self.clone() }
    }

    fn first_sample(&self) -> Option<usize> {
        self.stages.iter().position(|s| matches!(s, Stage::Sample { .. }))
    }

    fn first_amplifier(&self) -> Option<usize> {
        self.stages.iter().position(|s| matches!(s, Stage::Amplifier { .. }))
    }

    /// Friis system noise temperature referred to the first amplifier input.
    pub fn system_noise_temperature(&self) -> f64 {
        let mut t = 0.0;
        let mut gain = 1.0;
        for st in &self.stages {
            if let Stage::Amplifier { gain_db, noise_temp_k } = st {
                t += noise_temp_k / gain;
                gain *= db_to_power_ratio(*gain_db);
            }
        }
        t
    }
}

/// Response of a non-sample stage at `f`.
fn passive_response(stage: &Stage, f: f64) -> Result<Complex<f64>> {
    Ok(match stage {
        Stage::Attenuator { db } => Complex::new(db_to_amplitude(-db), 0.0),
        Stage::Mux { config, port, v_dd } => {
            let state = ControlState::new(config.n_ports, ControlMode::Parallel)?.program_parallel(*port)?;
            port_s21(config, state.latched_selection, *port, v_dd.unwrap_or(config.v_dd_nominal), f)?
        }
        Stage::Bandpass { f_lo_hz, f_hi_hz, rejection_db } => {
            if f >= *f_lo_hz && f <= *f_hi_hz {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(db_to_amplitude(-rejection_db), 0.0)
            }
        }
        Stage::Amplifier { gain_db, .. } => Complex::new(db_to_amplitude(*gain_db), 0.0),
        Stage::Sample { .. } => unreachable!("sample stages are resolved separately"),
    })
}

fn product_response(stages: &[Stage], f: f64) -> Result<Complex<f64>> {
    stages.iter().try_fold(Complex::new(1.0, 0.0), |acc, st| Ok(acc * passive_response(st, f)?))
}

/// Power (W) delivered to the first sample stage for a given instrument output.
pub fn power_at_sample(chain: &ChainSpec, instrument_power_dbm: f64, drive_hz: f64) -> Result<f64> {
    chain.validate()?;
    let idx = chain.first_sample().expect("validated chain has a sample");
    let h = product_response(&chain.stages[..idx], drive_hz)?;
    Ok(dbm_to_watts(instrument_power_dbm) * h.norm_sqr())
}

/// Photon number and internal loss rate consistent with a TLS loss model at the
/// resonant drive power `p_in` (W). Tries fixed-point iteration first and falls
/// back to bisection in `ln n`.
pub fn self_consistent_loss(sys: &CavityLerSystem<f64>, tls: &TlsModel<f64>, p_in: f64) -> Result<(f64, f64)> {
    let rates = purcell(sys)?;
    let w = rates.omega_r_dressed;
    let gamma = |n: f64| -> Result<f64> { Ok(w * qi_inverse(tls, n)?) };
    let photons = |n: f64| -> Result<f64> { mean_photons_from_rates(&rates, gamma(n)?, p_in, w) };
    if p_in == 0.0 {
        return Ok((0.0, gamma(0.0)?));
    }
    let mut n = photons(0.0)?;
    for _ in 0..50 {
        let next = photons(n)?;
        if (next - n).abs() <= 1e-9 * next.abs() {
            return Ok((next, gamma(next)?));
        }
        n = next;
    }
    // n − F(n) changes sign between F(0) and F(∞) because F is nondecreasing
    let lo0 = photons(0.0)?;
    let hi0 = mean_photons_from_rates(&rates, w / tls.q0, p_in, w)?;
    let (mut lo, mut hi) = (lo0.ln(), hi0.ln());
    if !(hi > lo) {
        return Ok((lo0, gamma(lo0)?));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let nm = mid.exp();
        if nm - photons(nm)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 {
            break;
        }
    }
    let n = (0.5 * (lo + hi)).exp();
    Ok((n, gamma(n)?))
}

/// Sample with its internal loss fixed for a given power at the sample.
fn resolved_system(system: &SampleSystem, tls: &Option<TlsModel<f64>>, p_sample: f64) -> Result<CavityLerSystem<f64>> {
    let sys = system.system()?;
    match tls {
        None => Ok(sys),
        Some(m) => {
            let (_, g) = self_consistent_loss(&sys, m, p_sample)?;
            Ok(sys.with_gamma_r(g))
        }
    }
}

/// Noiseless complex response of the whole chain at the given instrument power.
pub fn noiseless_response(chain: &ChainSpec, grid: &FrequencyGrid<f64>, instrument_power_dbm: f64) -> Result<Vec<Complex<f64>>> {
    let mut systems = Vec::new();
    let p_instr = dbm_to_watts(instrument_power_dbm);
    for (i, st) in chain.stages.iter().enumerate() {
        if let Stage::Sample { system, tls } = st {
            let sys0 = system.system()?;
            let f_res = rad_to_hz(purcell(&sys0)?.omega_r_dressed);
            let p = p_instr * product_response(&chain.stages[..i], f_res)?.norm_sqr();
            systems.push((i, resolved_system(system, tls, p)?));
        }
    }
    grid.points()
        .iter()
        .map(|&f| {
            let mut h = Complex::new(1.0, 0.0);
            for (i, st) in chain.stages.iter().enumerate() {
                h *= match st {
                    Stage::Sample { .. } => {
                        let sys = &systems.iter().find(|(j, _)| *j == i).expect("resolved above").1;
                        s21_measured(sys, f)?
                    }
                    other => passive_response(other, f)?,
                };
            }
            Ok(h)
        })
        .collect()
}

fn warn_out_of_band(chain: &ChainSpec, grid: &FrequencyGrid<f64>) {
    for st in &chain.stages {
        if let Stage::Bandpass { f_lo_hz, f_hi_hz, .. } = st {
            if grid.first() < *f_lo_hz || grid.last() > *f_hi_hz {
                log::warn!("sweep extends outside the bandpass [{f_lo_hz}, {f_hi_hz}] Hz; rejection applied");
            }
        }
    }
}

/// Noise standard deviation per quadrature, in trace units, for each grid point.
fn trace_noise_sigma(chain: &ChainSpec, sweep: &SweepSpec, grid: &FrequencyGrid<f64>) -> Result<Vec<f64>> {
    let Some(amp) = chain.first_amplifier() else {
        return Ok(vec![0.0; grid.len()]);
    };
    let t_sys = chain.system_noise_temperature();
    let noise_power = BOLTZMANN * t_sys * sweep.resolution_bandwidth_hz / f64::from(sweep.averages);
    let p_instr = dbm_to_watts(sweep.instrument_power_dbm);
    grid.points()
        .iter()
        .map(|&f| {
            let post = product_response(&chain.stages[amp..], f)?.norm();
            Ok((noise_power / 2.0).sqrt() * post / p_instr.sqrt())
        })
        .collect()
}

fn synthesize_with_rng(chain: &ChainSpec, sweep: &SweepSpec, rng: &mut ChaCha20Rng) -> Result<ComplexTrace<f64>> {
    chain.validate()?;
    sweep.validate()?;
    let grid = sweep.grid()?;
    warn_out_of_band(chain, &grid);
    let clean = noiseless_response(chain, &grid, sweep.instrument_power_dbm)?;
    let sigma = trace_noise_sigma(chain, sweep, &grid)?;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let s21 = clean
        .iter()
        .zip(&sigma)
        .map(|(h, &s)| {
            let (re, im) = (unit.sample(rng), unit.sample(rng));
            h + Complex::new(re, im) * s
        })
        .collect();
    let sig = if sigma.iter().all(|&s| s > 0.0) { Some(sigma) } else { None };
    ComplexTrace::new(grid, s21, sig)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Synthesises one trace using the chain's seed.
pub fn synthesize_sweep(chain: &ChainSpec, sweep: &SweepSpec) -> Result<ComplexTrace<f64>> {
    synthesize_sweep_seeded(chain, sweep, chain.rng_seed)
}

pub fn synthesize_sweep_seeded(chain: &ChainSpec, sweep: &SweepSpec, seed: u64) -> Result<ComplexTrace<f64>> {
    synthesize_with_rng(chain, sweep, &mut rng_for(seed, 0))
}

/// Noiseless trace of the chain with its samples removed.
pub fn through_trace(chain: &ChainSpec, sweep: &SweepSpec) -> Result<ComplexTrace<f64>> {
    sweep.validate()?;
    let grid = sweep.grid()?;
    let thru = chain.without_samples();
    let s21 = grid.points().iter().map(|&f| product_response(&thru.stages, f)).collect::<Result<Vec<_>>>()?;
    ComplexTrace::new(grid, s21, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub instrument_power_dbm: f64,
    pub power_at_sample_w: f64,
    pub n_photons: Option<f64>,
    pub fit: Option<FitResult<f64, LorentzianParams<f64>>>,
    pub converged: bool,
    pub error: Option<String>,
}

/// Synthesises and fits one trace per instrument power (in parallel, results in
/// input order). Stream `i` of the chain seed drives the noise for power `i`.
pub fn run_power_series(chain: &ChainSpec, sweep: &SweepSpec, powers_dbm: &[f64]) -> Result<Vec<SeriesEntry>> {
    chain.validate()?;
    sweep.validate()?;
    let through = through_trace(chain, sweep)?;
    let first = chain.first_sample().expect("validated chain has a sample");
    let Stage::Sample { system, .. } = &chain.stages[first] else { unreachable!() };
    let f_res = rad_to_hz(purcell(&system.system()?)?.omega_r_dressed);
    let entries = powers_dbm
        .par_iter()
        .enumerate()
        .map(|(i, &dbm)| {
            let spec = SweepSpec { instrument_power_dbm: dbm, ..sweep.clone() };
            let p_sample = power_at_sample(chain, dbm, f_res)?;
            let mut rng = rng_for(chain.rng_seed, i as u64);
            let outcome = synthesize_with_rng(chain, &spec, &mut rng)
                .and_then(|t| t.normalize_by(&through))
                .and_then(|t| fit_spectrum(&t, &SpectrumFitOptions::default()));
            Ok(match outcome {
                Ok(fit) => {
                    let n = photon_axis(p_sample, &fit, fit.model.f_r).ok();
                    if !fit.converged {
                        log::warn!("fit at {dbm} dBm did not converge");
                    }
                    SeriesEntry {
                        instrument_power_dbm: dbm,
                        power_at_sample_w: p_sample,
                        n_photons: n,
                        converged: fit.converged,
                        fit: Some(fit),
                        error: None,
                    }
                }
                Err(e) => SeriesEntry {
                    instrument_power_dbm: dbm,
                    power_at_sample_w: p_sample,
                    n_photons: None,
                    fit: None,
                    converged: false,
                    error: Some(e.to_string()),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(entries)
}

/// Power-sweep points from the converged entries of a series.
pub fn series_points(entries: &[SeriesEntry]) -> Vec<PowerSweepPoint<f64>> {
    entries
        .iter()
        .filter(|e| e.converged)
        .filter_map(|e| {
            let fit = e.fit.as_ref()?;
            let q = fit.param("q_loaded")?;
            Some(PowerSweepPoint { n_photons: e.n_photons?, q_loaded: q.value, q_uncertainty: q.sigma.max(1e-12 * q.value) })
        })
        .collect()
}
