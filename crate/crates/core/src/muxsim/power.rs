//! Static supply-current table and switching transient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Supply current versus supply voltage, sampled at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable<T> {
    /// `(v_dd [V], i_dd [A])`, strictly increasing in voltage.
    pub samples: Vec<(T, T)>,
}

impl<T: Scalar> PowerTable<T> {
    pub fn new(samples: Vec<(T, T)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("power table is empty"));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("power table voltages must be strictly increasing"));
        }
        if samples.iter().any(|(v, i)| !v.is_finite() || !(*i >= T::zero())) {
            return Err(Error::invalid("power table currents must be >= 0"));
        }
        Ok(Self { samples })
    }

    /// Millikelvin table anchored at 36.2 µW dissipated at 0.9 V.
    pub fn default_millikelvin() -> Self {
        let v = T::lit(0.9);
        Self { samples: vec![(T::zero(), T::zero()), (v, T::lit(36.2e-6) / v)] }
    }

    pub fn current(&self, v_dd: T) -> Result<T> {
        let (lo, hi) = (self.samples[0].0, self.samples[self.samples.len() - 1].0);
        if !(v_dd >= lo && v_dd <= hi) {
            return Err(Error::OutOfRange { value: v_dd.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
        }
        for w in self.samples.windows(2) {
            let ((v0, i0), (v1, i1)) = (w[0], w[1]);
            if v_dd <= v1 {
                return Ok(i0 + (i1 - i0) * (v_dd - v0) / (v1 - v0));
            }
        }
        Ok(self.samples[self.samples.len() - 1].1)
    }
}

/// `V_dd · I_dd(V_dd)` with linear interpolation of the table.
pub fn dissipated_power<T: Scalar>(table: &PowerTable<T>, v_dd: T) -> Result<T> {
    Ok(v_dd * table.current(v_dd)?)
}

/// Normalised RF envelope after a switching event, `1 - exp(-t/τ)`.
pub fn switching_envelope<T: Scalar>(tau: T, t: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    T::one() - (-t / tau).exp()
}

/// Time for the envelope to reach 95 %, `τ ln 20`.
pub fn rise_time_95<T: Scalar>(tau: T) -> T {
    tau * T::lit(20.0).ln()
}

/// Envelope time constant per carrier frequency, linearly interpolated and clamped
/// to the end points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientTable<T> {
    /// `(carrier [Hz], τ [s])`, strictly increasing in frequency.
    pub points: Vec<(T, T)>,
}

impl<T: Scalar> Default for TransientTable<T> {
    fn default() -> Self {
        Self { points: vec![(T::lit(4e9), T::lit(0.6e-9)), (T::lit(6e9), T::lit(0.4e-9))] }
    }
}

impl<T: Scalar> TransientTable<T> {
    pub fn tau_at(&self, carrier_hz: T) -> T {
        let pts = &self.points;
        if carrier_hz <= pts[0].0 {
            return pts[0].1;
        }
        for w in pts.windows(2) {
            if carrier_hz <= w[1].0 {
                let frac = (carrier_hz - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + (w[1].1 - w[0].1) * frac;
            }
        }
        pts[pts.len() - 1].1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_anchor() {
        let t = PowerTable::<f64>::default_millikelvin();
        assert_eq!(dissipated_power(&t, 0.0).unwrap(), 0.0);
        assert!((dissipated_power(&t, 0.9).unwrap() - 36.2e-6).abs() < 1e-18);
        assert!(matches!(dissipated_power(&t, 1.0), Err(Error::OutOfRange { .. })));
        assert!(dissipated_power(&t, -0.1).is_err());
    }

    #[test]
    fn interpolation_on_chord() {
        let t = PowerTable::new(vec![(0.2, 1e-6), (0.6, 5e-6)]).unwrap();
        assert!((t.current(0.4f64).unwrap() - 3e-6).abs() < 1e-18);
        assert!(PowerTable::new(vec![(0.6, 1e-6), (0.2, 5e-6)]).is_err());
        assert!(PowerTable::new(vec![(0.2, -1e-6)]).is_err());
    }

    #[test]
    fn envelope_and_rise_time() {
        assert_eq!(switching_envelope(0.4e-9, 0.0), 0.0);
        let t95 = rise_time_95(0.4e-9f64);
        assert!((t95 - 1.198e-9).abs() < 1e-12);
        assert!((switching_envelope(0.4e-9, t95) - 0.95).abs() < 1e-12);
        assert!((rise_time_95(0.6e-9f64) - 1.80e-9).abs() < 0.01e-9);
    }

    #[test]
    fn transient_table() {
        let t = TransientTable::<f64>::default();
        assert_eq!(t.tau_at(6e9), 0.4e-9);
        assert_eq!(t.tau_at(4e9), 0.6e-9);
        assert!((t.tau_at(5e9) - 0.5e-9).abs() < 1e-21);
        assert_eq!(t.tau_at(8e9), 0.4e-9);
    }
}
