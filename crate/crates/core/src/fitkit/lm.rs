//! Bounded Levenberg–Marquardt least squares with forward-difference Jacobians.

use serde::{Deserialize, Serialize};

use super::linalg::{cholesky, cholesky_solve, pseudo_inverse, SquareMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions<T> {
    /// Relative step size below which the search stops.
    pub xtol: T,
    /// Relative cost change below which the search stops.
    pub ftol: T,
    pub max_iterations: usize,
    /// Relative finite-difference step.
    pub fd_step: T,
    pub initial_damping: T,
    pub max_damping: T,
}

impl<T: Scalar> Default for LmOptions<T> {
    fn default() -> Self {
        Self {
            xtol: T::lit(1e-10),
            ftol: T::lit(1e-12),
            max_iterations: 200,
            fd_step: T::lit(1e-7).max(T::epsilon().sqrt()),
            initial_damping: T::lit(1e-6),
            max_damping: T::lit(1e12),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmStatus {
    StepTolerance,
    CostTolerance,
    ZeroCost,
    MaxIterations,
    Diverged,
}

impl LmStatus {
    pub fn converged(self) -> bool {
        matches!(self, Self::StepTolerance | Self::CostTolerance | Self::ZeroCost)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport<T> {
    pub x: Vec<T>,
    pub residuals: Vec<T>,
    /// `Σ r²`.
    pub rss: T,
    /// `(JᵀJ)⁻¹` scaled by the reduced chi-square `rss / (m - n)`.
    pub covariance: SquareMatrix<T>,
    /// Number of well-determined directions in `JᵀJ`.
    pub rank: usize,
    pub iterations: usize,
    pub status: LmStatus,
}

impl<T: Scalar> LmReport<T> {
    pub fn converged(&self) -> bool {
        self.status.converged()
    }

    pub fn residual_norm(&self) -> T {
        self.rss.sqrt()
    }
}

fn finite<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn sum_sq<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum()
}

fn norm<T: Scalar>(v: &[T]) -> T {
    sum_sq(v).sqrt()
}

fn clamp<T: Scalar>(x: T, (lo, hi): (T, T)) -> T {
    x.max(lo).min(hi)
}

/// Forward-difference Jacobian (rows = residuals). Steps that would leave the box
/// are taken backwards instead.
pub fn jacobian<T: Scalar, F>(f: &F, x: &[T], r0: &[T], bounds: &[(T, T)], rel_step: T) -> Vec<Vec<T>>
where
    F: Fn(&[T]) -> Vec<T>,
{
    let m = r0.len();
    let mut jac = vec![vec![T::zero(); x.len()]; m];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let mut h = rel_step * x[j].abs().max(T::one());
        if x[j] + h > bounds[j].1 {
            h = -h;
        }
        xp[j] = x[j] + h;
        let h = xp[j] - x[j];
        let rp = f(&xp);
        for i in 0..m {
            jac[i][j] = (rp[i] - r0[i]) / h;
        }
        xp[j] = x[j];
    }
    jac
}

fn normal_equations<T: Scalar>(jac: &[Vec<T>], r: &[T], n: usize) -> (SquareMatrix<T>, Vec<T>) {
    let mut a = SquareMatrix::zeros(n);
    let mut g = vec![T::zero(); n];
    for (row, &ri) in jac.iter().zip(r) {
        for i in 0..n {
            g[i] += row[i] * ri;
            for j in i..n {
                a[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    (a, g)
}

/// Covariance `(JᵀJ)⁻¹ · rss/(m − n)`, falling back to a pseudo-inverse when the
/// normal matrix is rank deficient.
pub fn covariance<T: Scalar>(jac: &[Vec<T>], rss: T, n: usize) -> (SquareMatrix<T>, usize) {
    let m = jac.len();
    let (a, _) = normal_equations(jac, &vec![T::zero(); m], n);
    let (inv, rank) = match super::linalg::cholesky_inverse(&a) {
        Some(inv) if inv.data.iter().all(|v| v.is_finite()) => (inv, n),
        _ => pseudo_inverse(&a, T::epsilon().sqrt()),
    };
    let dof = m.saturating_sub(n);
    let s2 = if dof > 0 { rss / T::lit(dof as f64) } else { T::one() };
    (inv.scale(s2), rank)
}

/// Minimises `Σ rᵢ(x)²` over the box `bounds`.
pub fn lm_minimize<T: Scalar, F>(f: F, init: &[T], bounds: &[(T, T)], opts: &LmOptions<T>) -> Result<LmReport<T>>
where
    F: Fn(&[T]) -> Vec<T>,
{
    let n = init.len();
    if bounds.len() != n {
        return Err(Error::invalid("bounds length does not match parameter count"));
    }
    for (j, (&x, &(lo, hi))) in init.iter().zip(bounds).enumerate() {
        if !(lo <= hi) || !(x >= lo && x <= hi) {
            return Err(Error::invalid(format!("initial value {x} of parameter {j} outside [{lo}, {hi}]")));
        }
    }
    let mut x = init.to_vec();
    let mut r = f(&x);
    if !finite(&r) {
        return Err(Error::invalid("residuals are not finite at the initial point"));
    }
    if r.len() < n {
        return Err(Error::Underdetermined { points: r.len(), params: n });
    }
    let mut cost = sum_sq(&r);
    let mut jac = jacobian(&f, &x, &r, bounds, opts.fd_step);
    let (mut a, mut g) = normal_equations(&jac, &r, n);
    let dmax = a.diag().into_iter().fold(T::zero(), T::max);
    let floor = dmax * T::epsilon() + T::min_positive_value();
    let mut mu = opts.initial_damping;
    let mut nu = T::lit(2.0);
    let mut status = LmStatus::MaxIterations;
    let mut iterations = 0;

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        if cost == T::zero() {
            status = LmStatus::ZeroCost;
            break;
        }
        loop {
            let mut damped = a.clone();
            for i in 0..n {
                damped[(i, i)] += mu * a[(i, i)].max(floor);
            }
            let step = match cholesky(&damped) {
                Some(l) => cholesky_solve(&l, &g.iter().map(|&v| -v).collect::<Vec<_>>()),
                None => {
                    mu *= nu;
                    nu *= T::lit(2.0);
                    if mu > opts.max_damping {
                        return Err(Error::NumericSingularity("damping exceeded limit".into()));
                    }
                    continue;
                }
            };
            let x_new: Vec<T> = x.iter().zip(&step).zip(bounds).map(|((&xi, &di), &b)| clamp(xi + di, b)).collect();
            let h: Vec<T> = x_new.iter().zip(&x).map(|(&a, &b)| a - b).collect();
            let small_step = norm(&h) <= opts.xtol * (norm(&x) + opts.xtol);
            if small_step {
                status = LmStatus::StepTolerance;
                break 'outer;
            }
            let r_new = f(&x_new);
            if !finite(&r_new) {
                status = LmStatus::Diverged;
                break 'outer;
            }
            let cost_new = sum_sq(&r_new);
            let ah = a.mul_vec(&h);
            let predicted = -(T::lit(2.0) * h.iter().zip(&g).map(|(&p, &q)| p * q).sum::<T>()
                + h.iter().zip(&ah).map(|(&p, &q)| p * q).sum::<T>());
            let rho = if predicted > T::zero() { (cost - cost_new) / predicted } else { -T::one() };
            if rho > T::zero() {
                let rel_change = (cost - cost_new) / cost;
                x = x_new;
                r = r_new;
                cost = cost_new;
                let t = T::lit(2.0) * rho - T::one();
                mu *= T::lit(1.0 / 3.0).max(T::one() - t * t * t);
                nu = T::lit(2.0);
                if cost == T::zero() {
                    status = LmStatus::ZeroCost;
                    break 'outer;
                }
                if rel_change <= opts.ftol {
                    status = LmStatus::CostTolerance;
                    break 'outer;
                }
                jac = jacobian(&f, &x, &r, bounds, opts.fd_step);
                (a, g) = normal_equations(&jac, &r, n);
                break;
            }
            mu *= nu;
            nu *= T::lit(2.0);
            if mu > opts.max_damping {
                return Err(Error::NumericSingularity("damping exceeded limit".into()));
            }
        }
    }

    if status.converged() {
        jac = jacobian(&f, &x, &r, bounds, opts.fd_step);
    }
    let (cov, rank) = covariance(&jac, cost, n);
    Ok(LmReport { x, residuals: r, rss: cost, covariance: cov, rank, iterations, status })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unbounded(n: usize) -> Vec<(f64, f64)> {
        vec![(f64::NEG_INFINITY, f64::INFINITY); n]
    }

    #[test]
    fn linear_in_three_iterations() {
        let rep = lm_minimize(|x: &[f64]| vec![x[0] - 3.0], &[0.0], &unbounded(1), &LmOptions::default()).unwrap();
        assert!(rep.converged());
        assert!((rep.x[0] - 3.0).abs() < 1e-9);
        assert!(rep.iterations <= 3, "{}", rep.iterations);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]];
        let rep = lm_minimize(f, &[-1.2, 1.0], &unbounded(2), &LmOptions::default()).unwrap();
        assert!(rep.converged(), "{:?}", rep.status);
        assert!((rep.x[0] - 1.0).abs() < 1e-8 && (rep.x[1] - 1.0).abs() < 1e-8, "{:?}", rep.x);
    }

    #[test]
    fn linear_regression_covariance() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 / 4.0).collect();
        let y: Vec<f64> = t.iter().enumerate().map(|(i, &t)| 1.5 + 0.7 * t + 0.01 * ((i * 7 % 5) as f64 - 2.0)).collect();
        let f = |x: &[f64]| t.iter().zip(&y).map(|(&t, &y)| x[0] + x[1] * t - y).collect::<Vec<_>>();
        let rep = lm_minimize(f, &[0.0, 0.0], &unbounded(2), &LmOptions::default()).unwrap();
        let (sx, sxx) = (t.iter().sum::<f64>(), t.iter().map(|v| v * v).sum::<f64>());
        let m = t.len() as f64;
        let det = m * sxx - sx * sx;
        let s2 = rep.rss / (m - 2.0);
        let expect = [sxx / det * s2, -sx / det * s2, -sx / det * s2, m / det * s2];
        for (c, e) in rep.covariance.data.iter().zip(expect) {
            assert!((c - e).abs() <= 1e-6 * e.abs(), "{c} vs {e}");
        }
    }

    #[test]
    fn bounds_are_respected() {
        let rep = lm_minimize(|x: &[f64]| vec![x[0] + 2.0], &[1.0], &[(0.0, 5.0)], &LmOptions::default()).unwrap();
        assert_eq!(rep.x[0], 0.0);
        assert!(lm_minimize(|x: &[f64]| vec![x[0]], &[6.0], &[(0.0, 5.0)], &LmOptions::default()).is_err());
    }

    #[test]
    fn non_finite_marks_diverged() {
        let f = |x: &[f64]| vec![if x[0] > 0.5 { f64::NAN } else { x[0] - 2.0 }];
        let rep = lm_minimize(f, &[0.0], &unbounded(1), &LmOptions::default()).unwrap();
        assert_eq!(rep.status, LmStatus::Diverged);
        assert!(!rep.converged());
    }

    #[test]
    fn iteration_cap_is_not_convergence() {
        let f = |x: &[f64]| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]];
        let opts = LmOptions { max_iterations: 2, ..LmOptions::default() };
        let rep = lm_minimize(f, &[-1.2, 1.0], &unbounded(2), &opts).unwrap();
        assert_eq!(rep.status, LmStatus::MaxIterations);
        assert!(!rep.converged());
    }

    #[test]
    fn works_in_f32() {
        let rep = lm_minimize(|x: &[f32]| vec![x[0] - 3.0, 2.0 * (x[1] + 1.0)], &[0.0f32, 0.0], &[(-10.0, 10.0); 2], &LmOptions::default()).unwrap();
        assert!((rep.x[0] - 3.0).abs() < 1e-4 && (rep.x[1] + 1.0).abs() < 1e-4);
    }
}
