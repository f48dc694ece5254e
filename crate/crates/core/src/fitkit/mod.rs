//! Least-squares engine plus spectrum, power-sweep and ac-Stark estimators.

pub mod linalg;
pub mod lm;
pub mod power_sweep;
pub mod spectrum;
pub mod stark;

use serde::{Deserialize, Serialize};

pub use lm::{lm_minimize, LmOptions, LmReport, LmStatus};
pub use power_sweep::{fit_power_sweep, PowerSweepPoint};
pub use spectrum::{estimate_initial, fit_spectrum, photon_axis, ComplexTrace, InitialEstimate, SpectrumFitOptions};
pub use stark::{stark_closed_form, stark_forward, stark_invert, StarkContext, StarkInversion, TemperatureConvention, Truncation};

use crate::scalar::Scalar;
use linalg::SquareMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam<T> {
    pub name: String,
    pub value: T,
    /// One-sigma uncertainty from the scaled covariance.
    pub sigma: T,
}

/// Outcome of a fit: the typed model plus named parameters and their covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T, M> {
    pub model: M,
    pub params: Vec<FitParam<T>>,
    /// Covariance of `params`, in the same order.
    pub covariance: Vec<Vec<T>>,
    pub residual_norm: T,
    pub converged: bool,
    pub iterations: usize,
    pub status: LmStatus,
    /// False when some parameter combination is not determined by the data.
    pub full_rank: bool,
}

impl<T: Scalar, M> FitResult<T, M> {
    pub fn param(&self, name: &str) -> Option<&FitParam<T>> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> Option<T> {
        self.param(name).map(|p| p.value)
    }
}

pub(crate) type Output<'a, T> = (&'a str, Box<dyn Fn(&[T]) -> T + 'a>);

/// Maps the internal covariance onto derived outputs with central-difference
/// gradients.
pub(crate) fn propagate<T: Scalar>(x: &[T], cov: &SquareMatrix<T>, outputs: &[Output<'_, T>]) -> (Vec<FitParam<T>>, Vec<Vec<T>>) {
    let step = T::epsilon().cbrt();
    let grads: Vec<Vec<T>> = outputs
        .iter()
        .map(|(_, g)| {
            (0..x.len())
                .map(|j| {
                    let h = step * x[j].abs().max(T::one());
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[j] += h;
                    xm[j] -= h;
                    (g(&xp) - g(&xm)) / (T::lit(2.0) * h)
                })
                .collect()
        })
        .collect();
    let out_cov = cov.congruence(&grads);
    let params = outputs
        .iter()
        .enumerate()
        .map(|(i, (name, g))| FitParam { name: name.to_string(), value: g(x), sigma: out_cov[(i, i)].max(T::zero()).sqrt() })
        .collect();
    (params, out_cov.to_rows())
}
