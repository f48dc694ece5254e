//! Complex Lorentzian fitting of transmission spectra.
//!
//! The overall gain `A` and the coupling magnitude `|Q_c|` enter the line shape only
//! through the product `A·Q_L/|Q_c|`, so the fit estimates that product and `A` is a
//! calibration input (default 1, or 1 after dividing by a through trace).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::lm::{lm_minimize, LmOptions};
use super::{propagate, FitResult, Output};
use crate::error::{Error, Result};
use crate::resonator::{mean_photons_measurable, q_relations, LorentzianParams};
use crate::rfnet::FrequencyGrid;
use crate::scalar::Scalar;
use crate::units::hz_to_rad;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + for<'a> Deserialize<'a>")]
pub struct ComplexTrace<T> {
    pub grid: FrequencyGrid<T>,
    pub s21: Vec<Complex<T>>,
    pub sigma: Option<Vec<T>>,
}

impl<T: Scalar> ComplexTrace<T> {
    pub fn new(grid: FrequencyGrid<T>, s21: Vec<Complex<T>>, sigma: Option<Vec<T>>) -> Result<Self> {
        let t = Self { grid, s21, sigma };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s21.len() != self.grid.len() {
            return Err(Error::invalid(format!("{} samples for {} frequencies", self.s21.len(), self.grid.len())));
        }
        if self.s21.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::invalid("trace contains non-finite samples"));
        }
        if let Some(sig) = &self.sigma {
            if sig.len() != self.s21.len() || sig.iter().any(|&s| !(s > T::zero())) {
                return Err(Error::invalid("per-point sigma must match the trace and be > 0"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.s21.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s21.is_empty()
    }

    /// Divides by a through (no-device) trace recorded on the same grid.
    pub fn normalize_by(&self, through: &Self) -> Result<Self> {
        if through.len() != self.len() {
            return Err(Error::invalid("through trace has a different length"));
        }
        let tol = T::lit(1e-9);
        for (a, b) in self.grid.points().iter().zip(through.grid.points()) {
            if (*a - *b).abs() > tol * a.abs() {
                return Err(Error::invalid("through trace uses a different frequency grid"));
            }
        }
        if through.s21.iter().any(|t| t.norm() == T::zero()) {
            return Err(Error::invalid("through trace has zero samples"));
        }
        let s21 = self.s21.iter().zip(&through.s21).map(|(s, t)| s / t).collect();
        let sigma = self
            .sigma
            .as_ref()
            .map(|sig| sig.iter().zip(&through.s21).map(|(&s, t)| s / t.norm()).collect());
        Self::new(self.grid.clone(), s21, sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialEstimate<T> {
    /// Seed with `A = 1`.
    pub params: LorentzianParams<T>,
    /// False when the dip/peak barely clears the edge scatter or a half-maximum
    /// crossing is missing.
    pub reliable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumFitOptions<T> {
    /// Known overall gain `A` of the measurement path.
    pub a_scale: Complex<T>,
    pub lm: LmOptions<T>,
}

impl<T: Scalar> Default for SpectrumFitOptions<T> {
    fn default() -> Self {
        Self { a_scale: Complex::new(T::one(), T::zero()), lm: LmOptions::default() }
    }
}

/// Heuristic seed from the raw trace.
pub fn estimate_initial<T: Scalar>(trace: &ComplexTrace<T>) -> Result<InitialEstimate<T>> {
    trace.validate()?;
    let n = trace.len();
    if n < 8 {
        return Err(Error::PoorWindow(format!("{n} points are too few to locate a resonance")));
    }
    let f = trace.grid.points();
    let k = ((n as f64) * 0.05).ceil().max(1.0) as usize;
    let edges: Vec<Complex<T>> = trace.s21[..k].iter().chain(&trace.s21[n - k..]).copied().collect();
    let b = edges.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &v| acc + v) / T::lit(edges.len() as f64);
    let scatter = (edges.iter().map(|v| (v - b).norm_sqr()).sum::<T>() / T::lit(edges.len() as f64)).sqrt();

    let d: Vec<T> = trace.s21.iter().map(|s| (s - b).norm()).collect();
    let (ipk, &dpk) = d
        .iter()
        .enumerate()
        .fold((0, &d[0]), |best, (i, v)| if *v > *best.1 { (i, v) } else { best });
    if dpk == T::zero() {
        return Err(Error::PoorWindow("trace is flat".into()));
    }
    if ipk == 0 || ipk == n - 1 {
        return Err(Error::PoorWindow("resonance sits at the edge of the sweep".into()));
    }
    let mut reliable = dpk > T::lit(5.0) * scatter;

    let half = dpk / T::lit(2.0);
    let crossing = |range: &mut dyn Iterator<Item = usize>, step_back: isize| -> Option<T> {
        for i in range {
            if d[i] < half {
                let j = (i as isize + step_back) as usize;
                let frac = (d[j] - half) / (d[j] - d[i]);
                return Some(f[j] + (f[i] - f[j]) * frac);
            }
        }
        None
    };
    let left = crossing(&mut (0..ipk).rev(), 1);
    let right = crossing(&mut (ipk + 1..n), -1);
    let (f_r, full_width) = match (left, right) {
        (Some(l), Some(r)) => ((l + r) / T::lit(2.0), r - l),
        (Some(l), None) => {
            reliable = false;
            (f[ipk], T::lit(2.0) * (f[ipk] - l))
        }
        (None, Some(r)) => {
            reliable = false;
            (f[ipk], T::lit(2.0) * (r - f[ipk]))
        }
        (None, None) => {
            reliable = false;
            (f[ipk], f[n - 1] - f[0])
        }
    };
    let q_loaded = T::lit(3.0).sqrt() * f_r / full_width.max(T::epsilon() * f_r);
    let c = (trace.s21[ipk] - b) * Complex::new(T::one(), T::lit(2.0) * q_loaded * (f[ipk] - f_r) / f_r);
    Ok(InitialEstimate {
        params: LorentzianParams {
            a_scale: Complex::new(T::one(), T::zero()),
            b_offset: b,
            f_r,
            q_loaded,
            q_c_mag: q_loaded / c.norm(),
            phi: c.arg(),
        },
        reliable,
    })
}

struct Layout<T> {
    f0: T,
    lw0: T,
    q0: T,
    c_scale: T,
    b_scale: T,
}

impl<T: Scalar> Layout<T> {
    fn f_r(&self, x: &[T]) -> T {
        self.f0 + x[0] * self.lw0
    }
    fn q(&self, x: &[T]) -> T {
        self.q0 * x[1].exp()
    }
    fn c(&self, x: &[T]) -> Complex<T> {
        Complex::new(x[2], x[3]) * self.c_scale
    }
    fn b(&self, x: &[T]) -> Complex<T> {
        Complex::new(x[4], x[5]) * self.b_scale
    }
    fn model(&self, x: &[T], f: T) -> Complex<T> {
        let fr = self.f_r(x);
        self.c(x) / Complex::new(T::one(), T::lit(2.0) * self.q(x) * (f - fr) / fr) + self.b(x)
    }
}

/// Fits `A·(Q_L/|Q_c|)e^{iφ}/(1 + 2iQ_L(f/f_r − 1)) + B` to the complex trace.
pub fn fit_spectrum<T: Scalar>(trace: &ComplexTrace<T>, opts: &SpectrumFitOptions<T>) -> Result<FitResult<T, LorentzianParams<T>>> {
    if opts.a_scale.norm() == T::zero() {
        return Err(Error::invalid("a_scale must be nonzero"));
    }
    let seed = estimate_initial(trace)?;
    if !seed.reliable {
        log::warn!("initial resonance estimate is unreliable; fit may not converge");
    }
    let p = seed.params;
    let c0 = Complex::from_polar(p.q_loaded / p.q_c_mag, p.phi);
    let layout = Layout {
        f0: p.f_r,
        lw0: p.f_r / p.q_loaded,
        q0: p.q_loaded,
        c_scale: c0.norm(),
        b_scale: p.b_offset.norm().max(c0.norm()),
    };
    let f = trace.grid.points();
    let inv_sigma: Vec<T> = match &trace.sigma {
        Some(s) => s.iter().map(|&v| T::one() / v).collect(),
        None => vec![T::one(); trace.len()],
    };
    let residuals = |x: &[T]| -> Vec<T> {
        let mut r = Vec::with_capacity(2 * f.len());
        for ((&fi, si), &w) in f.iter().zip(&trace.s21).zip(&inv_sigma) {
            let e = (layout.model(x, fi) - si) * w;
            r.push(e.re);
            r.push(e.im);
        }
        r
    };
    let init = [
        T::zero(),
        T::zero(),
        c0.re / layout.c_scale,
        c0.im / layout.c_scale,
        p.b_offset.re / layout.b_scale,
        p.b_offset.im / layout.b_scale,
    ];
    let inf = T::infinity();
    let bounds = [
        ((f[0] - layout.f0) / layout.lw0, (f[f.len() - 1] - layout.f0) / layout.lw0),
        ((T::lit(10.0) / layout.q0).ln(), (T::lit(1e12) / layout.q0).ln()),
        (-inf, inf),
        (-inf, inf),
        (-inf, inf),
        (-inf, inf),
    ];
    let rep = lm_minimize(residuals, &init, &bounds, &opts.lm)?;
    let x = &rep.x;

    let a = opts.a_scale;
    let c_hat = layout.c(x);
    let phi_hat = (c_hat / a).arg();
    let l = &layout;
    let mut outputs: Vec<Output<'_, T>> = vec![
        ("f_r", Box::new(|x: &[T]| l.f_r(x))),
        ("q_loaded", Box::new(|x: &[T]| l.q(x))),
        ("q_c_mag", Box::new(move |x: &[T]| a.norm() * l.q(x) / l.c(x).norm())),
        ("phi", Box::new(move |x: &[T]| phi_hat + (l.c(x) * c_hat.conj()).arg())),
        ("c_re", Box::new(|x: &[T]| l.c(x).re)),
        ("c_im", Box::new(|x: &[T]| l.c(x).im)),
        ("b_re", Box::new(|x: &[T]| l.b(x).re)),
        ("b_im", Box::new(|x: &[T]| l.b(x).im)),
    ];
    let params = LorentzianParams {
        a_scale: a,
        b_offset: layout.b(x),
        f_r: layout.f_r(x),
        q_loaded: layout.q(x),
        q_c_mag: a.norm() * layout.q(x) / c_hat.norm(),
        phi: phi_hat,
    };
    if q_relations(params.q_loaded, params.q_c_mag).is_ok() {
        outputs.push((
            "q_internal",
            Box::new(move |x: &[T]| {
                let (q, qc) = (l.q(x), a.norm() * l.q(x) / l.c(x).norm());
                T::one() / (T::one() / q - T::one() / qc)
            }),
        ));
    } else {
        log::warn!("fitted Q_L is not below |Q_c|; internal Q is undefined for the given A");
    }
    let (named, cov) = propagate(x, &rep.covariance, &outputs);
    Ok(FitResult {
        model: params,
        params: named,
        covariance: cov,
        residual_norm: rep.residual_norm(),
        converged: rep.converged(),
        iterations: rep.iterations,
        status: rep.status,
        full_rank: rep.rank == x.len(),
    })
}

/// Mean photon number at the sample for a converged spectrum fit.
pub fn photon_axis<T: Scalar>(p_in_at_sample: T, fit: &FitResult<T, LorentzianParams<T>>, drive_freq: T) -> Result<T> {
    if !fit.converged {
        return Err(Error::invalid("spectrum fit did not converge"));
    }
    mean_photons_measurable(fit.model.peak_ratio(), fit.model.q_loaded, p_in_at_sample, hz_to_rad(drive_freq))
}
