//! Fits the single-component TLS loss model to quality factor versus photon number.

use serde::{Deserialize, Serialize};

use super::lm::{lm_minimize, LmOptions};
use super::{propagate, FitResult, Output};
use crate::error::{Error, Result};
use crate::lossbudget::{LossComponent, TlsModel};
use crate::resonator::q_relations;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSweepPoint<T> {
    pub n_photons: T,
    pub q_loaded: T,
    pub q_uncertainty: T,
}

impl<T: Scalar> PowerSweepPoint<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_photons >= T::zero()) || !(self.q_loaded > T::zero()) || !(self.q_uncertainty > T::zero()) {
            return Err(Error::invalid(format!(
                "invalid sweep point (n = {}, Q = {}, σ = {})",
                self.n_photons, self.q_loaded, self.q_uncertainty
            )));
        }
        Ok(())
    }
}

const N_PARAMS: usize = 4;

/// Fits `{p·tanδ, n_c, β, Q_0}` in log-Q space. With `q_c_mag`, loaded Q values are
/// first converted to internal Q.
pub fn fit_power_sweep<T: Scalar>(points: &[PowerSweepPoint<T>], q_c_mag: Option<T>) -> Result<FitResult<T, TlsModel<T>>> {
    fit_power_sweep_with(points, q_c_mag, &LmOptions::default())
}

pub fn fit_power_sweep_with<T: Scalar>(
    points: &[PowerSweepPoint<T>],
    q_c_mag: Option<T>,
    opts: &LmOptions<T>,
) -> Result<FitResult<T, TlsModel<T>>> {
    if points.len() < N_PARAMS {
        return Err(Error::Underdetermined { points: points.len(), params: N_PARAMS });
    }
    let mut data = Vec::with_capacity(points.len());
    for p in points {
        p.validate()?;
        let (q, sigma) = match q_c_mag {
            Some(qc) => {
                let qi = q_relations(p.q_loaded, qc)?;
                (qi, p.q_uncertainty * (qi / p.q_loaded).powi(2))
            }
            None => (p.q_loaded, p.q_uncertainty),
        };
        data.push((p.n_photons, q, sigma / q));
    }
    let positive: Vec<T> = data.iter().map(|d| d.0).filter(|&n| n > T::zero()).collect();
    let n_lo = positive.iter().copied().fold(T::infinity(), T::min);
    let n_hi = positive.iter().copied().fold(T::zero(), T::max);
    if points.len() < 6 || !(n_hi >= T::lit(1e3) * n_lo) {
        log::warn!("power sweep has fewer than 6 points or spans under 3 decades; TLS parameters may be poorly constrained");
    }

    let mut by_n = data.clone();
    by_n.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let loss_low = T::one() / by_n[0].1;
    let loss_high = T::one() / by_n[by_n.len() - 1].1;
    let scale = data.iter().map(|d| T::one() / d.1).fold(T::zero(), T::max);
    let mid = (loss_low + loss_high) / T::lit(2.0);
    let n_c0 = by_n
        .iter()
        .find(|d| T::one() / d.1 <= mid)
        .map(|d| d.0)
        .unwrap_or(T::one())
        .max(T::lit(1e-2))
        .min(T::lit(1e8));

    let model = |x: &[T], n: T| -> T {
        let tls = x[0] * scale / (T::one() + n / x[1].exp()).powf(x[2]);
        tls + x[3] * scale
    };
    let residuals = |x: &[T]| -> Vec<T> {
        data.iter().map(|&(n, q, rel)| ((T::one() / q).ln() - model(x, n).ln()) / rel).collect()
    };
    let pd0 = (loss_low - loss_high).max(T::lit(1e-3) * loss_low);
    let init = [pd0 / scale, n_c0.ln(), T::lit(0.5), (loss_high.min(loss_low) * T::lit(0.9)) / scale];
    let bounds = [
        (T::zero(), T::one() / scale),
        (T::lit(1e-3).ln(), T::lit(1e9).ln()),
        (T::lit(0.1), T::one()),
        (T::zero(), T::lit(0.1) / scale),
    ];
    let rep = lm_minimize(residuals, &init, &bounds, opts)?;
    let x = &rep.x;
    let outputs: Vec<Output<'_, T>> = vec![
        ("p_tan_delta", Box::new(move |x: &[T]| x[0] * scale)),
        ("n_c", Box::new(|x: &[T]| x[1].exp())),
        ("beta", Box::new(|x: &[T]| x[2])),
        ("q0", Box::new(move |x: &[T]| T::one() / (x[3] * scale))),
    ];
    let (named, cov) = propagate(x, &rep.covariance, &outputs);
    let q0 = if x[3] > T::zero() { T::one() / (x[3] * scale) } else { T::infinity() };
    let tls = TlsModel { components: vec![LossComponent::new("tls", T::one(), x[0] * scale, x[1].exp(), x[2])?], q0 };
    Ok(FitResult {
        model: tls,
        params: named,
        covariance: cov,
        residual_norm: rep.residual_norm(),
        converged: rep.converged(),
        iterations: rep.iterations,
        status: rep.status,
        full_rank: rep.rank == N_PARAMS,
    })
}
