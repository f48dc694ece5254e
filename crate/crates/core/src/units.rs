//! Physical constants and decibel helpers.

use num_complex::Complex;

use crate::scalar::Scalar;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[inline]
pub fn hz_to_rad<T: Scalar>(f: T) -> T {
    T::TAU() * f
}

#[inline]
pub fn rad_to_hz<T: Scalar>(w: T) -> T {
    w / T::TAU()
}

/// Amplitude ratio to dB (`20 log10`).
#[inline]
pub fn amplitude_to_db<T: Scalar>(a: T) -> T {
    T::lit(20.0) * a.log10()
}

#[inline]
pub fn db_to_amplitude<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(20.0))
}

#[inline]
pub fn db_to_power_ratio<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// Magnitude of a complex transmission coefficient in dB.
#[inline]
pub fn s_to_db<T: Scalar>(s: Complex<T>) -> T {
    amplitude_to_db(s.norm())
}

#[inline]
pub fn dbm_to_watts<T: Scalar>(dbm: T) -> T {
    T::lit(1e-3) * db_to_power_ratio(dbm)
}

#[inline]
pub fn watts_to_dbm<T: Scalar>(w: T) -> T {
    T::lit(10.0) * (w / T::lit(1e-3)).log10()
}
