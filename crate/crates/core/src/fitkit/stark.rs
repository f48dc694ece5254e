//! Residual-photon thermometry from the qubit ac-Stark shift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::units::{BOLTZMANN, PLANCK};

/// All frequencies in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkContext<T> {
    /// Dispersive shift per photon, signed.
    pub chi: T,
    pub nu_r: T,
    pub nu_q: Option<T>,
    pub kappa: Option<T>,
}

impl<T: Scalar> StarkContext<T> {
    pub fn new(chi: T, nu_r: T) -> Result<Self> {
        let c = Self { chi, nu_r, nu_q: None, kappa: None };
        c.validate()?;
        Ok(c)
    }

    pub fn with_qubit(self, nu_q: T) -> Self {
        Self { nu_q: Some(nu_q), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chi == T::zero() || !self.chi.is_finite() {
            return Err(Error::invalid("chi must be nonzero"));
        }
        if !(self.nu_r > T::zero()) {
            return Err(Error::invalid("nu_r must be > 0"));
        }
        if let Some(q) = self.nu_q {
            if !(q > T::zero()) {
                return Err(Error::invalid("nu_q must be > 0"));
            }
        }
        Ok(())
    }

    fn boltzmann_ratio(&self, temperature: T) -> T {
        if temperature == T::zero() {
            return T::zero();
        }
        (-T::lit(PLANCK) * self.nu_r / (T::lit(BOLTZMANN) * temperature)).exp()
    }
}

/// Which mode frequency converts occupation into a temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureConvention {
    #[default]
    Readout,
    Qubit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// Stop once the next term moves the ratio by less than 1e-15 relative.
    #[default]
    Auto,
    Terms(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkInversion<T> {
    pub n_mean: T,
    pub temperature: T,
}

/// Boltzmann-weighted shift `Σ 2χ i xⁱ / Σ xⁱ`, `x = exp(−hν_r/k_BT)`.
pub fn stark_forward<T: Scalar>(ctx: &StarkContext<T>, temperature: T, truncation: Truncation) -> Result<T> {
    ctx.validate()?;
    if !(temperature >= T::zero()) {
        return Err(Error::invalid("temperature must be >= 0"));
    }
    let x = ctx.boltzmann_ratio(temperature);
    let two_chi = T::lit(2.0) * ctx.chi;
    let (mut num, mut den, mut w) = (T::zero(), T::one(), T::one());
    let mut ratio = T::zero();
    let max_terms = match truncation {
        Truncation::Auto => 100_000_000,
        Truncation::Terms(k) => k,
    };
    for i in 1..max_terms {
        w *= x;
        num += two_chi * T::lit(i as f64) * w;
        den += w;
        let next = num / den;
        let settled = (next - ratio).abs() <= T::lit(1e-15) * next.abs();
        ratio = next;
        if matches!(truncation, Truncation::Auto) && (settled || w == T::zero()) {
            break;
        }
    }
    Ok(ratio)
}

/// `2χ x/(1 − x)`.
pub fn stark_closed_form<T: Scalar>(ctx: &StarkContext<T>, temperature: T) -> Result<T> {
    ctx.validate()?;
    if !(temperature >= T::zero()) {
        return Err(Error::invalid("temperature must be >= 0"));
    }
    let x = ctx.boltzmann_ratio(temperature);
    Ok(T::lit(2.0) * ctx.chi * x / (T::one() - x))
}

/// Mean photon number `Δ_ac/(2χ)` and the Bose–Einstein temperature it implies.
pub fn stark_invert<T: Scalar>(ctx: &StarkContext<T>, delta_ac: T, convention: TemperatureConvention) -> Result<StarkInversion<T>> {
    ctx.validate()?;
    let nu = match convention {
        TemperatureConvention::Readout => ctx.nu_r,
        TemperatureConvention::Qubit => ctx.nu_q.ok_or_else(|| Error::invalid("qubit convention needs nu_q"))?,
    };
    let n_mean = delta_ac / (T::lit(2.0) * ctx.chi);
    if n_mean == T::zero() {
        return Ok(StarkInversion { n_mean, temperature: T::zero() });
    }
    if !(n_mean > T::zero()) {
        return Err(Error::NonphysicalPopulation(n_mean.as_f64()));
    }
    let x = n_mean / (T::one() + n_mean);
    let temperature = T::lit(PLANCK) * nu / (T::lit(BOLTZMANN) * (T::one() / x).ln());
    Ok(StarkInversion { n_mean, temperature })
}
