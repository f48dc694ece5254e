//! Two-level-system loss model and participation-ratio loss budgets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One lossy dielectric: participation, loss tangent and TLS saturation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossComponent<T> {
    pub name: String,
    pub participation: T,
    pub tan_delta: T,
    pub n_c: T,
    pub beta: T,
}

impl<T: Scalar> LossComponent<T> {
    pub fn new(name: impl Into<String>, participation: T, tan_delta: T, n_c: T, beta: T) -> Result<Self> {
        let c = Self { name: name.into(), participation, tan_delta, n_c, beta };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.participation >= T::zero() && self.participation <= T::one()) {
            return Err(Error::invalid(format!("{}: participation {} outside [0, 1]", self.name, self.participation)));
        }
        if !(self.tan_delta >= T::zero()) || !self.tan_delta.is_finite() {
            return Err(Error::invalid(format!("{}: tan_delta must be >= 0", self.name)));
        }
        if !(self.n_c > T::zero()) {
            return Err(Error::invalid(format!("{}: n_c must be > 0", self.name)));
        }
        if !(self.beta > T::zero() && self.beta <= T::one()) {
            return Err(Error::invalid(format!("{}: beta {} outside (0, 1]", self.name, self.beta)));
        }
        Ok(())
    }

    /// Unsaturated loss `p·tanδ`.
    pub fn loss(&self) -> T {
        self.participation * self.tan_delta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlsModel<T> {
    pub components: Vec<LossComponent<T>>,
    /// Power-independent quality factor; infinite means no residual loss.
    pub q0: T,
}

impl<T: Scalar> TlsModel<T> {
    pub fn new(components: Vec<LossComponent<T>>, q0: T) -> Result<Self> {
        let m = Self { components, q0 };
        m.validate()?;
        Ok(m)
    }

    /// Single effective component, the usual form for fitting a power sweep.
    pub fn single(p_tan_delta: T, n_c: T, beta: T, q0: T) -> Result<Self> {
        Self::new(vec![LossComponent::new("tls", T::one(), p_tan_delta, n_c, beta)?], q0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q0 > T::zero()) {
            return Err(Error::invalid("q0 must be > 0"));
        }
        if self.components.is_empty() && self.q0.is_infinite() {
            return Err(Error::invalid("model needs a component or a finite q0"));
        }
        self.components.iter().try_for_each(LossComponent::validate)
    }

    pub fn q_internal(&self, n: T) -> Result<T> {
        Ok(T::one() / qi_inverse(self, n)?)
    }
}

/// `1/Q_i = Σ p·tanδ / (1 + n/n_c)^β + 1/Q_0`.
pub fn qi_inverse<T: Scalar>(model: &TlsModel<T>, n: T) -> Result<T> {
    if !(n >= T::zero()) {
        return Err(Error::invalid(format!("photon number must be >= 0, got {n}")));
    }
    let tls: T = model
        .components
        .iter()
        .map(|c| c.loss() / (T::one() + n / c.n_c).powf(c.beta))
        .sum();
    Ok(tls + T::one() / model.q0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport<T> {
    pub losses: Vec<T>,
    pub total: T,
    /// `None` when the total loss is zero.
    pub q_factor: Option<T>,
}

/// Per-component loss `p·tanδ`, their sum (plus `1/q0` if given) and the implied Q.
pub fn budget_total<T: Scalar>(components: &[(T, T)], q0: Option<T>) -> Result<BudgetReport<T>> {
    for &(p, td) in components {
        if !(p >= T::zero() && p <= T::one()) || !(td >= T::zero()) || !td.is_finite() {
            return Err(Error::invalid(format!("invalid component ({p}, {td})")));
        }
    }
    if let Some(q) = q0 {
        if !(q > T::zero()) {
            return Err(Error::invalid("q0 must be > 0"));
        }
    }
    let losses: Vec<T> = components.iter().map(|&(p, td)| p * td).collect();
    let total = losses.iter().copied().sum::<T>() + q0.map_or(T::zero(), |q| T::one() / q);
    let q_factor = if total > T::zero() { Some(T::one() / total) } else { None };
    Ok(BudgetReport { losses, total, q_factor })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region<T> {
    pub name: String,
    pub energy_fraction: T,
    /// Participation ratio of each dielectric inside this region.
    pub pr: Vec<(String, T)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEnergySplit<T> {
    pub regions: Vec<Region<T>>,
}

impl<T: Scalar> RegionEnergySplit<T> {
    pub fn validate(&self) -> Result<()> {
        if self.regions.iter().any(|r| !(r.energy_fraction >= T::zero())) {
            return Err(Error::invalid("energy fractions must be >= 0"));
        }
        let sum: T = self.regions.iter().map(|r| r.energy_fraction).sum();
        if (sum - T::one()).abs() > T::lit(5e-3) {
            return Err(Error::invalid(format!("energy fractions sum to {sum}, expected 1 within 0.5%")));
        }
        Ok(())
    }
}

/// Energy-weighted participation of one dielectric, `Σ fraction·PR`.
pub fn weighted_participation<T: Scalar>(split: &RegionEnergySplit<T>, dielectric: &str) -> Result<T> {
    split.validate()?;
    split
        .regions
        .iter()
        .map(|r| {
            r.pr.iter()
                .find(|(name, _)| name == dielectric)
                .map(|&(_, pr)| r.energy_fraction * pr)
                .ok_or_else(|| Error::invalid(format!("region {} has no PR for {dielectric}", r.name)))
        })
        .sum()
}

/// Loss tangent that explains the loss left after removing `other_losses`.
pub fn extract_tan_delta<T: Scalar>(measured_qi: T, participation: T, other_losses: T) -> Result<T> {
    if !(measured_qi > T::zero()) || !(participation > T::zero()) {
        return Err(Error::invalid("measured_qi and participation must be > 0"));
    }
    let residual = T::one() / measured_qi - other_losses;
    if !(residual > T::zero()) {
        return Err(Error::InconsistentBudget(residual.as_f64()));
    }
    Ok(residual / participation)
}
