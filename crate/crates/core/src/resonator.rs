//! Lumped-element resonator coupled to a 3D cavity mode.
//!
//! All rates here are angular (rad/s). Transmission from the coupled-mode equations
//! is written in the physics `exp(-iωt)` convention; a network analyser reports the
//! complex conjugate, which is what [`s21_measured`] returns and what the Lorentzian
//! fit form describes.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::units::{hz_to_rad, rad_to_hz, HBAR};

/// Cavity mode plus resonator, all rates in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityLerSystem<T> {
    pub omega_c: T,
    pub omega_r: T,
    pub g: T,
    pub kappa_i: T,
    pub kappa_o: T,
    pub gamma_c: T,
    pub gamma_r: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurcellRates<T> {
    pub kappa_pur_i: T,
    pub kappa_pur_o: T,
    pub kappa_pur: T,
    /// Resonator frequency pulled by the cavity, `ω_r - g²/Δ`.
    pub omega_r_dressed: T,
}

/// Lorentzian line shape with a complex coupling quality factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianParams<T> {
    pub a_scale: Complex<T>,
    pub b_offset: Complex<T>,
    pub f_r: T,
    pub q_loaded: T,
    pub q_c_mag: T,
    pub phi: T,
}

impl<T: Scalar> CavityLerSystem<T> {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("omega_c", self.omega_c),
            ("omega_r", self.omega_r),
            ("g", self.g),
            ("kappa_i", self.kappa_i),
            ("kappa_o", self.kappa_o),
            ("gamma_r", self.gamma_r),
        ];
        for (name, v) in rates {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.gamma_c >= T::zero()) {
            return Err(Error::invalid("gamma_c must be >= 0"));
        }
        if !self.is_dispersive() {
            log::warn!("cavity-resonator detuning is below 10 linewidths; dispersive formulas are approximate");
        }
        Ok(())
    }

    /// `|ω_c - ω_r| > 10 max(κ_i, κ_o, γ_r)`.
    pub fn is_dispersive(&self) -> bool {
        let max_rate = self.kappa_i.max(self.kappa_o).max(self.gamma_r);
        (self.omega_c - self.omega_r).abs() > T::lit(10.0) * max_rate
    }

    /// Symmetric-coupling system that produces a given dressed frequency, loaded Q
    /// and coupling Q, for a chosen detuning and coupling strength (all in Hz).
    pub fn from_targets(f_dressed: T, q_loaded: T, q_coupling: T, detuning_hz: T, g_hz: T) -> Result<Self> {
        if !(q_loaded > T::zero() && q_coupling > q_loaded) {
            return Err(Error::NonphysicalInternalLoss { q_loaded: q_loaded.as_f64(), q_coupling: q_coupling.as_f64() });
        }
        if detuning_hz == T::zero() {
            return Err(Error::DispersiveBreakdown);
        }
        let w_dressed = hz_to_rad(f_dressed);
        let delta = hz_to_rad(detuning_hz);
        let g = hz_to_rad(g_hz);
        let omega_r = w_dressed + g * g / delta;
        let kappa_pur = w_dressed / q_coupling;
        let kappa = kappa_pur * delta * delta / (g * g);
        let sys = Self {
            omega_c: omega_r + delta,
            omega_r,
            g,
            kappa_i: kappa / T::lit(2.0),
            kappa_o: kappa / T::lit(2.0),
            gamma_c: T::zero(),
            gamma_r: w_dressed / q_loaded - kappa_pur,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Same system with a different resonator internal loss rate.
    pub fn with_gamma_r(&self, gamma_r: T) -> Self {
        Self { gamma_r, ..self.clone() }
    }
}

impl<T: Scalar> LorentzianParams<T> {
    /// Background-subtracted peak magnitude relative to `|A|`.
    pub fn peak_ratio(&self) -> T {
        self.q_loaded / self.q_c_mag
    }

    pub fn q_internal(&self) -> Result<T> {
        q_relations(self.q_loaded, self.q_c_mag)
    }

    /// Linewidth (FWHM of |S21|²) in Hz.
    pub fn linewidth(&self) -> T {
        self.f_r / self.q_loaded
    }
}

pub fn purcell<T: Scalar>(sys: &CavityLerSystem<T>) -> Result<PurcellRates<T>> {
    let delta = sys.omega_c - sys.omega_r;
    if delta == T::zero() {
        return Err(Error::DispersiveBreakdown);
    }
    let ratio = sys.g * sys.g / (delta * delta);
    let kappa_pur_i = sys.kappa_i * ratio;
    let kappa_pur_o = sys.kappa_o * ratio;
    Ok(PurcellRates {
        kappa_pur_i,
        kappa_pur_o,
        kappa_pur: kappa_pur_i + kappa_pur_o,
        omega_r_dressed: sys.omega_r - sys.g * sys.g / delta,
    })
}

/// Dispersive transmission `i√(κ_pi κ_po) / (ω - ω̃_r + i(κ_pur + γ_r)/2)`.
pub fn s21_from_rates<T: Scalar>(rates: &PurcellRates<T>, gamma_r: T, omega: T) -> Complex<T> {
    let half = T::lit(0.5);
    let num = Complex::new(T::zero(), (rates.kappa_pur_i * rates.kappa_pur_o).sqrt());
    let den = Complex::new(omega - rates.omega_r_dressed, (rates.kappa_pur + gamma_r) * half);
    num / den
}

pub fn s21_physics<T: Scalar>(sys: &CavityLerSystem<T>, omega: T) -> Result<Complex<T>> {
    Ok(s21_from_rates(&purcell(sys)?, sys.gamma_r, omega))
}

/// Transmission from the full two-mode steady state, keeping `γ_c` and the direct
/// cavity path. Used as the reference for the dispersive form.
pub fn s21_coupled_modes<T: Scalar>(sys: &CavityLerSystem<T>, omega: T) -> Complex<T> {
    let half = T::lit(0.5);
    let i = Complex::new(T::zero(), T::one());
    let cavity = Complex::new((sys.kappa_i + sys.kappa_o + sys.gamma_c) * half, sys.omega_c - omega);
    let g = Complex::new(sys.g, T::zero());
    let sqrt_ki = Complex::new(sys.kappa_i.sqrt(), T::zero());
    let b_den = Complex::new(omega - sys.omega_r, T::zero())
        + i * half * (Complex::new(sys.gamma_r, T::zero()) + g * g * T::lit(2.0) / cavity);
    let b = (g * sqrt_ki / cavity) / b_den;
    let a = (-i * g * b + sqrt_ki) / cavity;
    a * sys.kappa_o.sqrt()
}

/// Transmission as a network analyser reports it, at frequency `f` in Hz.
pub fn s21_measured<T: Scalar>(sys: &CavityLerSystem<T>, f: T) -> Result<Complex<T>> {
    Ok(s21_physics(sys, hz_to_rad(f))?.conj())
}

/// `A (Q_L/|Q_c|) e^{iφ} / (1 + 2i Q_L (f/f_r - 1)) + B`.
pub fn s21_lorentzian<T: Scalar>(p: &LorentzianParams<T>, f: T) -> Complex<T> {
    let peak = Complex::from_polar(p.q_loaded / p.q_c_mag, p.phi);
    let den = Complex::new(T::one(), T::lit(2.0) * p.q_loaded * (f / p.f_r - T::one()));
    p.a_scale * peak / den + p.b_offset
}

/// Lorentzian parameters equivalent to the dispersive transmission of `sys`.
pub fn lorentzian_from_system<T: Scalar>(sys: &CavityLerSystem<T>) -> Result<LorentzianParams<T>> {
    let r = purcell(sys)?;
    let w = r.omega_r_dressed;
    Ok(LorentzianParams {
        a_scale: Complex::new(T::one(), T::zero()),
        b_offset: Complex::new(T::zero(), T::zero()),
        f_r: rad_to_hz(w),
        q_loaded: w / (r.kappa_pur + sys.gamma_r),
        q_c_mag: w / (T::lit(2.0) * (r.kappa_pur_i * r.kappa_pur_o).sqrt()),
        phi: T::zero(),
    })
}

/// Internal Q from `1/Q_i = 1/Q_L - 1/|Q_c|`. An infinite `|Q_c|` gives `Q_L`.
pub fn q_relations<T: Scalar>(q_loaded: T, q_c_mag: T) -> Result<T> {
    if !(q_loaded > T::zero()) {
        return Err(Error::invalid("q_loaded must be > 0"));
    }
    if q_c_mag.is_infinite() && q_c_mag > T::zero() {
        return Ok(q_loaded);
    }
    if q_loaded >= q_c_mag {
        return Err(Error::NonphysicalInternalLoss { q_loaded: q_loaded.as_f64(), q_coupling: q_c_mag.as_f64() });
    }
    Ok(T::one() / (T::one() / q_loaded - T::one() / q_c_mag))
}

/// Mean resonator occupation for drive power `p_in` (W) at `omega_drive`, from the
/// Purcell rates. Reduces to the on-resonance form at `ω = ω̃_r`.
pub fn mean_photons_from_rates<T: Scalar>(rates: &PurcellRates<T>, gamma_r: T, p_in: T, omega_drive: T) -> Result<T> {
    if !(p_in >= T::zero()) {
        return Err(Error::invalid("p_in must be >= 0"));
    }
    let half_width = (rates.kappa_pur + gamma_r) * T::lit(0.5);
    let detuning = omega_drive - rates.omega_r_dressed;
    let flux = p_in / (T::lit(HBAR) * rates.omega_r_dressed);
    Ok(rates.kappa_pur_i / (detuning * detuning + half_width * half_width) * flux)
}

/// Mean occupation from measured quantities, `2 S21(ω̃_r) Q_L P / (ħ ω̃_r²)`.
pub fn mean_photons_measurable<T: Scalar>(s21_peak: T, q_loaded: T, p_in: T, omega_dressed: T) -> Result<T> {
    if !(s21_peak >= T::zero() && s21_peak <= T::one()) {
        return Err(Error::invalid(format!("peak transmission {s21_peak} outside [0, 1]")));
    }
    if !(p_in >= T::zero()) {
        return Err(Error::invalid("p_in must be >= 0"));
    }
    Ok(T::lit(2.0) * s21_peak * q_loaded * p_in / (T::lit(HBAR) * omega_dressed * omega_dressed))
}
