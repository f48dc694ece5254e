//! Series-shunt SP-N-T switch network.
//!
//! Each branch is a series NMOS pass transistor between its RF port and the common
//! node, plus a shunt NMOS from the port to ground. An "on" transistor is modelled as
//! its channel conductance in parallel with the off capacitance, an "off" one as the
//! off capacitance in parallel with its sub-threshold conductance. The common node
//! sees the remaining branches as loads, then the matching inductor and a fixed
//! package loss lead to RFC.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::muxsim::control::ControlState;
use crate::rfnet::{Abcd, FrequencyGrid, SMatrix, Z0_DEFAULT};
use crate::scalar::Scalar;
use crate::units::{db_to_amplitude, hz_to_rad};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchBranch<T> {
    /// Series transistor channel resistance at nominal V_dd, Ω.
    pub r_on: T,
    /// Series transistor off capacitance, F.
    pub c_off: T,
    /// Shunt transistor width relative to the series one; scales its conductance
    /// and capacitance.
    pub shunt_width_ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuxConfig<T> {
    pub n_ports: usize,
    pub branch: SwitchBranch<T>,
    /// Series matching inductor at RFC, H.
    pub l_match: T,
    pub v_dd_nominal: T,
    pub v_th: T,
    /// Sub-threshold slope, V per decade of conductance.
    pub subthreshold_slope: T,
    /// Channel conductance at threshold as a fraction of `1/r_on`.
    pub knee_fraction: T,
    /// Fixed matched loss for board and package, dB.
    pub parasitic_loss_db: T,
    pub z0: T,
    pub temperature_label: String,
}

impl<T: Scalar> Default for MuxConfig<T> {
    /// Millikelvin defaults.
    fn default() -> Self {
        Self {
            n_ports: 4,
            branch: SwitchBranch { r_on: T::lit(7.0), c_off: T::lit(25e-15), shunt_width_ratio: T::lit(0.5) },
            l_match: T::lit(450e-12),
            v_dd_nominal: T::lit(0.9),
            v_th: T::lit(0.475),
            subthreshold_slope: T::lit(0.02),
            knee_fraction: T::lit(1e-3),
            parasitic_loss_db: T::lit(1.0),
            z0: T::lit(Z0_DEFAULT),
            temperature_label: "32 mK".to_string(),
        }
    }
}

impl<T: Scalar> MuxConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let b = &self.branch;
        let positive = [
            ("r_on", b.r_on),
            ("c_off", b.c_off),
            ("shunt_width_ratio", b.shunt_width_ratio),
            ("l_match", self.l_match),
            ("v_dd_nominal", self.v_dd_nominal),
            ("v_th", self.v_th),
            ("subthreshold_slope", self.subthreshold_slope),
            ("knee_fraction", self.knee_fraction),
            ("z0", self.z0),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.n_ports < 2 {
            return Err(Error::invalid("n_ports must be >= 2"));
        }
        if self.v_th >= self.v_dd_nominal {
            return Err(Error::invalid("v_th must be below v_dd_nominal"));
        }
        if self.knee_fraction >= T::one() {
            return Err(Error::invalid("knee_fraction must be < 1"));
        }
        if !(self.parasitic_loss_db >= T::zero()) {
            return Err(Error::invalid("parasitic_loss_db must be >= 0"));
        }
        Ok(())
    }
}

/// Channel conductance of an NMOS switch whose gate is driven at `v_dd`.
///
/// Above threshold it rises linearly with overdrive from the knee value to `1/r_on`
/// at nominal supply; below threshold it falls by one decade per `subthreshold_slope`.
pub fn branch_conductance<T: Scalar>(cfg: &MuxConfig<T>, v_dd: T) -> T {
    let g_on = T::one() / cfg.branch.r_on;
    let g_knee = g_on * cfg.knee_fraction;
    if v_dd >= cfg.v_th {
        let frac = ((v_dd - cfg.v_th) / (cfg.v_dd_nominal - cfg.v_th)).min(T::one());
        if frac >= T::one() {
            return g_on;
        }
        g_knee + (g_on - g_knee) * frac
    } else {
        g_knee * T::lit(10.0).powf(-(cfg.v_th - v_dd) / cfg.subthreshold_slope)
    }
}

struct BranchAdmittances<T> {
    series: Complex<T>,
    shunt: Complex<T>,
}

fn branch_admittances<T: Scalar>(cfg: &MuxConfig<T>, selected: bool, v_dd: T, f: T) -> BranchAdmittances<T> {
    let w = hz_to_rad(f);
    let yc = Complex::new(T::zero(), w * cfg.branch.c_off);
    let g_gate_high = branch_conductance(cfg, v_dd);
    let g_gate_low = branch_conductance(cfg, T::zero());
    let ratio = cfg.branch.shunt_width_ratio;
    let (g_series, g_shunt) = if selected { (g_gate_high, g_gate_low) } else { (g_gate_low, g_gate_high) };
    BranchAdmittances { series: yc + g_series, shunt: (yc + g_shunt) * ratio }
}

fn matched_loss_abcd<T: Scalar>(db: T, z0: T) -> Abcd<T> {
    let s = db_to_amplitude(-db);
    let two_s = T::lit(2.0) * s;
    let s2 = s * s;
    let a = Complex::new((T::one() + s2) / two_s, T::zero());
    let k = (T::one() - s2) / two_s;
    Abcd { a, b: Complex::new(k * z0, T::zero()), c: Complex::new(k / z0, T::zero()), d: a }
}

/// ABCD of the path from `port` to RFC at one frequency.
fn path_abcd<T: Scalar>(cfg: &MuxConfig<T>, selection: Option<usize>, v_dd: T, port: usize, f: T) -> Abcd<T> {
    let one = Complex::new(T::one(), T::zero());
    let own = branch_admittances(cfg, selection == Some(port), v_dd, f);
    let y_port = Complex::new(T::one() / cfg.z0, T::zero());
    let mut y_load = Complex::new(T::zero(), T::zero());
    for other in (0..cfg.n_ports).filter(|&k| k != port) {
        let b = branch_admittances(cfg, selection == Some(other), v_dd, f);
        let z = one / b.series + one / (b.shunt + y_port);
        y_load = y_load + one / z;
    }
    let w = hz_to_rad(f);
    Abcd::shunt(own.shunt)
        .then(&Abcd::series(one / own.series))
        .then(&Abcd::shunt(y_load))
        .then(&Abcd::series(Complex::new(T::zero(), w * cfg.l_match)))
        .then(&matched_loss_abcd(cfg.parasitic_loss_db, cfg.z0))
}

/// Two-port S-parameters from each input port to RFC, indexed by port.
pub fn mux_s_params<T: Scalar>(
    cfg: &MuxConfig<T>,
    state: &ControlState,
    v_dd: T,
    grid: &FrequencyGrid<T>,
) -> Result<Vec<SMatrix<T>>> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::invalid("frequency grid is empty"));
    }
    if state.n_ports() != cfg.n_ports {
        return Err(Error::invalid(format!(
            "control state has {} ports, config has {}",
            state.n_ports(),
            cfg.n_ports
        )));
    }
    if !(v_dd >= T::zero()) {
        return Err(Error::invalid("v_dd must be >= 0"));
    }
    (0..cfg.n_ports)
        .map(|port| {
            let entries = grid
                .points()
                .iter()
                .map(|&f| path_abcd(cfg, state.latched_selection, v_dd, port, f).to_s(cfg.z0))
                .collect::<Result<Vec<_>>>()?;
            Ok(SMatrix { grid: grid.clone(), z0: cfg.z0, entries, clamped: false })
        })
        .collect()
}

/// Transmission of one port at one frequency for a given selection.
pub fn port_s21<T: Scalar>(cfg: &MuxConfig<T>, selection: Option<usize>, port: usize, v_dd: T, f: T) -> Result<Complex<T>> {
    cfg.validate()?;
    if port >= cfg.n_ports {
        return Err(Error::InvalidSelection(format!("port {port} not present")));
    }
    Ok(path_abcd(cfg, selection, v_dd, port, f).to_s(cfg.z0)?.s21)
}

/// Insertion loss (dB, positive) of `port` when it is the selected one.
pub fn insertion_loss_db<T: Scalar>(cfg: &MuxConfig<T>, port: usize, v_dd: T, f: T) -> Result<T> {
    Ok(-crate::units::s_to_db(port_s21(cfg, Some(port), port, v_dd, f)?))
}

/// Isolation (dB, positive) of `port` with every port shunted.
pub fn isolation_db<T: Scalar>(cfg: &MuxConfig<T>, port: usize, v_dd: T, f: T) -> Result<T> {
    Ok(-crate::units::s_to_db(port_s21(cfg, None, port, v_dd, f)?))
}
