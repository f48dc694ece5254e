//! Two-port network algebra: lumped elements, ABCD cascades and S-parameter conversion.
//!
//! Frequencies are in Hz at every public boundary; angular frequency is only used
//! inside the element impedance formulas. All conversions assume a real reference
//! impedance, 50 Ω unless overridden.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::units::hz_to_rad;

/// Default reference impedance in Ω.
pub const Z0_DEFAULT: f64 = 50.0;

/// Impedance/admittance magnitude above which an element is treated as ideal.
pub const DEGENERATE_LIMIT: f64 = 1e12;

/// Strictly increasing list of positive frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>", bound = "T: Scalar + Serialize + for<'a> Deserialize<'a>")]
pub struct FrequencyGrid<T> {
    points: Vec<T>,
}

impl<T: Scalar> FrequencyGrid<T> {
    pub fn new(points: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("frequency grid is empty"));
        }
        if points.iter().any(|f| !f.is_finite() || *f <= T::zero()) {
            return Err(Error::invalid("frequency grid values must be finite and > 0"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("frequency grid must be strictly increasing"));
        }
        Ok(Self { points })
    }

    /// `n` evenly spaced points from `start` to `stop` inclusive.
    pub fn linspace(start: T, stop: T, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("frequency grid is empty"));
        }
        if n == 1 {
            return Self::new(vec![start]);
        }
        let step = (stop - start) / T::from_usize(n - 1).unwrap();
        Self::new((0..n).map(|i| start + step * T::from_usize(i).unwrap()).collect())
    }

    pub fn single(f: T) -> Result<Self> {
        Self::new(vec![f])
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> T {
        self.points[0]
    }

    pub fn last(&self) -> T {
        self.points[self.points.len() - 1]
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for FrequencyGrid<T> {
    type Error = Error;
    fn try_from(v: Vec<T>) -> Result<Self> {
        Self::new(v)
    }
}

impl<T> From<FrequencyGrid<T>> for Vec<T> {
    fn from(g: FrequencyGrid<T>) -> Vec<T> {
        g.points
    }
}

/// Single-frequency ABCD matrix `[[a, b], [c, d]]`; `b` in Ω, `c` in S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abcd<T> {
    pub a: Complex<T>,
    pub b: Complex<T>,
    pub c: Complex<T>,
    pub d: Complex<T>,
}

impl<T: Scalar> Abcd<T> {
    pub fn identity() -> Self {
        Self {
            a: Complex::new(T::one(), T::zero()),
            b: Complex::new(T::zero(), T::zero()),
            c: Complex::new(T::zero(), T::zero()),
            d: Complex::new(T::one(), T::zero()),
        }
    }

    pub fn series(z: Complex<T>) -> Self {
        Self { b: z, ..Self::identity() }
    }

    pub fn shunt(y: Complex<T>) -> Self {
        Self { c: y, ..Self::identity() }
    }

    pub fn det(&self) -> Complex<T> {
        self.a * self.d - self.b * self.c
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Self) -> Self {
        Self {
            a: self.a * next.a + self.b * next.c,
            b: self.a * next.b + self.b * next.d,
            c: self.c * next.a + self.d * next.c,
            d: self.c * next.b + self.d * next.d,
        }
    }

    pub fn to_s(&self, z0: T) -> Result<SParams<T>> {
        let two = T::lit(2.0);
        let bz = self.b / z0;
        let cz = self.c * z0;
        let den = self.a + bz + cz + self.d;
        if den.norm() == T::zero() || !den.norm().is_finite() {
            return Err(Error::NumericSingularity("A + B/Z0 + C·Z0 + D vanishes".into()));
        }
        Ok(SParams {
            s11: (self.a + bz - cz - self.d) / den,
            s21: Complex::new(two, T::zero()) / den,
            s12: self.det() * two / den,
            s22: (-self.a + bz - cz + self.d) / den,
        })
    }
}

/// Single-frequency scattering parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SParams<T> {
    pub s11: Complex<T>,
    pub s21: Complex<T>,
    pub s12: Complex<T>,
    pub s22: Complex<T>,
}

impl<T: Scalar> SParams<T> {
    pub fn matched_through(s21: Complex<T>) -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        Self { s11: zero, s21, s12: s21, s22: zero }
    }

    pub fn to_abcd(&self, z0: T) -> Result<Abcd<T>> {
        if self.s21.norm() == T::zero() {
            return Err(Error::NumericSingularity("S21 = 0 has no ABCD representation".into()));
        }
        let one = Complex::new(T::one(), T::zero());
        let (s11, s12, s21, s22) = (self.s11, self.s12, self.s21, self.s22);
        let den = s21 * T::lit(2.0);
        let p = s12 * s21;
        Ok(Abcd {
            a: ((one + s11) * (one - s22) + p) / den,
            b: ((one + s11) * (one + s22) - p) * z0 / den,
            c: ((one - s11) * (one - s22) - p) / (den * z0),
            d: ((one - s11) * (one + s22) + p) / den,
        })
    }
}

/// Per-frequency ABCD matrices on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcdMatrix<T> {
    pub grid: FrequencyGrid<T>,
    pub entries: Vec<Abcd<T>>,
    /// Set when a degenerate element value had to be clamped.
    pub clamped: bool,
}

impl<T: Scalar> AbcdMatrix<T> {
    pub fn identity(grid: &FrequencyGrid<T>) -> Self {
        Self { grid: grid.clone(), entries: vec![Abcd::identity(); grid.len()], clamped: false }
    }

    pub fn to_s(&self, z0: T) -> Result<SMatrix<T>> {
        abcd_to_s(self, z0)
    }
}

/// Per-frequency S-parameters referenced to `z0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrix<T> {
    pub grid: FrequencyGrid<T>,
    pub z0: T,
    pub entries: Vec<SParams<T>>,
    pub clamped: bool,
}

impl<T: Scalar> SMatrix<T> {
    pub fn s21(&self) -> impl Iterator<Item = Complex<T>> + '_ {
        self.entries.iter().map(|e| e.s21)
    }

    pub fn to_abcd(&self) -> Result<AbcdMatrix<T>> {
        s_to_abcd(self)
    }
}

/// Lumped element value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lumped<T> {
    Resistor(T),
    Inductor(T),
    Capacitor(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Series,
    Shunt,
}

impl<T: Scalar> Lumped<T> {
    /// Element impedance at frequency `f` (Hz).
    pub fn impedance(&self, f: T) -> Complex<T> {
        let w = hz_to_rad(f);
        match *self {
            Lumped::Resistor(r) => Complex::new(r, T::zero()),
            Lumped::Inductor(l) => Complex::new(T::zero(), w * l),
            Lumped::Capacitor(c) => Complex::new(T::zero(), -T::one() / (w * c)),
        }
    }

    pub fn admittance(&self, f: T) -> Complex<T> {
        let w = hz_to_rad(f);
        match *self {
            Lumped::Resistor(r) => Complex::new(T::one() / r, T::zero()),
            Lumped::Inductor(l) => Complex::new(T::zero(), -T::one() / (w * l)),
            Lumped::Capacitor(c) => Complex::new(T::zero(), w * c),
        }
    }

    fn value(&self) -> T {
        match *self {
            Lumped::Resistor(v) | Lumped::Inductor(v) | Lumped::Capacitor(v) => v,
        }
    }
}

/// Bring a non-finite or huge complex value back to magnitude `DEGENERATE_LIMIT`.
fn clamp_degenerate<T: Scalar>(v: Complex<T>) -> (Complex<T>, bool) {
    let limit = T::lit(DEGENERATE_LIMIT);
    if v.re.is_nan() || v.im.is_nan() {
        return (Complex::new(limit, T::zero()), true);
    }
    let mag = v.norm();
    if !mag.is_finite() {
        let re = if v.re.is_infinite() { v.re.signum() } else { T::zero() };
        let im = if v.im.is_infinite() { v.im.signum() } else { T::zero() };
        let dir = Complex::new(re, im);
        return (dir / dir.norm() * limit, true);
    }
    if mag > limit {
        (v / mag * limit, true)
    } else {
        (v, false)
    }
}

fn check_len<T>(values: &[Complex<T>], grid: &FrequencyGrid<T>) -> Result<()> {
    if grid.points.is_empty() {
        return Err(Error::invalid("frequency grid is empty"));
    }
    if values.len() != grid.points.len() {
        return Err(Error::invalid(format!(
            "{} element values for {} grid points",
            values.len(),
            grid.points.len()
        )));
    }
    Ok(())
}

/// Series impedance `[[1, Z], [0, 1]]` at every grid point.
pub fn series_element<T: Scalar>(impedance: &[Complex<T>], grid: &FrequencyGrid<T>) -> Result<AbcdMatrix<T>> {
    check_len(impedance, grid)?;
    let mut clamped = false;
    let entries = impedance
        .iter()
        .map(|&z| {
            let (z, c) = clamp_degenerate(z);
            clamped |= c;
            Abcd::series(z)
        })
        .collect();
    Ok(AbcdMatrix { grid: grid.clone(), entries, clamped })
}

/// Shunt admittance `[[1, 0], [Y, 1]]` at every grid point.
pub fn shunt_element<T: Scalar>(admittance: &[Complex<T>], grid: &FrequencyGrid<T>) -> Result<AbcdMatrix<T>> {
    check_len(admittance, grid)?;
    let mut clamped = false;
    let entries = admittance
        .iter()
        .map(|&y| {
            let (y, c) = clamp_degenerate(y);
            clamped |= c;
            Abcd::shunt(y)
        })
        .collect();
    Ok(AbcdMatrix { grid: grid.clone(), entries, clamped })
}

pub fn lumped<T: Scalar>(element: Lumped<T>, orientation: Orientation, grid: &FrequencyGrid<T>) -> Result<AbcdMatrix<T>> {
    let v = element.value();
    if v.is_nan() || v <= T::zero() {
        return Err(Error::invalid(format!("lumped element value must be > 0, got {v}")));
    }
    match orientation {
        Orientation::Series => {
            let z: Vec<_> = grid.points().iter().map(|&f| element.impedance(f)).collect();
            series_element(&z, grid)
        }
        Orientation::Shunt => {
            let y: Vec<_> = grid.points().iter().map(|&f| element.admittance(f)).collect();
            shunt_element(&y, grid)
        }
    }
}

/// Ordered product of the stages, first stage at the input.
pub fn cascade<T: Scalar>(stages: &[AbcdMatrix<T>]) -> Result<AbcdMatrix<T>> {
    let first = stages.first().ok_or_else(|| Error::invalid("cascade of zero stages"))?;
    let mut out = first.clone();
    for stage in &stages[1..] {
        if stage.grid != out.grid {
            return Err(Error::invalid("cascade stages do not share a frequency grid"));
        }
        for (acc, next) in out.entries.iter_mut().zip(&stage.entries) {
            *acc = acc.then(next);
        }
        out.clamped |= stage.clamped;
    }
    Ok(out)
}

pub fn abcd_to_s<T: Scalar>(m: &AbcdMatrix<T>, z0: T) -> Result<SMatrix<T>> {
    if !(z0 > T::zero()) {
        return Err(Error::invalid("reference impedance must be > 0"));
    }
    let entries = m.entries.iter().map(|e| e.to_s(z0)).collect::<Result<Vec<_>>>()?;
    Ok(SMatrix { grid: m.grid.clone(), z0, entries, clamped: m.clamped })
}

pub fn s_to_abcd<T: Scalar>(s: &SMatrix<T>) -> Result<AbcdMatrix<T>> {
    let entries = s.entries.iter().map(|e| e.to_abcd(s.z0)).collect::<Result<Vec<_>>>()?;
    Ok(AbcdMatrix { grid: s.grid.clone(), entries, clamped: s.clamped })
}

/// Matched attenuator with `db` of loss at every grid point.
pub fn attenuator<T: Scalar>(db: T, grid: &FrequencyGrid<T>) -> Result<SMatrix<T>> {
    if db.is_nan() || db < T::zero() {
        return Err(Error::invalid(format!("attenuation must be >= 0 dB, got {db}")));
    }
    let s21 = Complex::new(crate::units::db_to_amplitude(-db), T::zero());
    Ok(SMatrix {
        grid: grid.clone(),
        z0: T::lit(Z0_DEFAULT),
        entries: vec![SParams::matched_through(s21); grid.len()],
        clamped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::s_to_db;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn grid6() -> FrequencyGrid<f64> {
        FrequencyGrid::single(6e9).unwrap()
    }

    fn series_s21_closed_form(z: C) -> f64 {
        (C::new(100.0, 0.0) / (C::new(100.0, 0.0) + z)).norm()
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::<f64>::new(vec![]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![-1.0, 1.0]).is_err());
        assert_eq!(FrequencyGrid::linspace(4e9, 8e9, 5).unwrap().points()[2], 6e9);
    }

    #[test]
    fn zero_series_is_identity() {
        let g = FrequencyGrid::linspace(1e9, 2e9, 3).unwrap();
        let m = series_element(&[C::new(0.0, 0.0); 3], &g).unwrap();
        assert!(m.entries.iter().all(|e| *e == Abcd::identity()));
        let s = abcd_to_s(&m, 50.0).unwrap();
        assert_eq!(s.entries[0].s21, C::new(1.0, 0.0));
        assert_eq!(s.entries[0].s11, C::new(0.0, 0.0));
    }

    #[test]
    fn empty_values_rejected() {
        let g = grid6();
        assert!(series_element::<f64>(&[], &g).is_err());
        assert!(shunt_element::<f64>(&[], &g).is_err());
    }

    #[test]
    fn series_inductor_450ph() {
        let z = C::new(0.0, std::f64::consts::TAU * 6e9 * 450e-12);
        assert!((z.im - 16.96).abs() < 0.01);
        let s = lumped(Lumped::Inductor(450e-12), Orientation::Series, &grid6()).unwrap().to_s(50.0).unwrap();
        let mag = s.entries[0].s21.norm();
        assert!((mag - series_s21_closed_form(z)).abs() < 1e-12);
        assert!((mag - 0.9859).abs() < 1e-4);
        assert!((s_to_db(s.entries[0].s21) + 0.123).abs() < 1e-3);
    }

    #[test]
    fn series_50_ohm() {
        let s = lumped(Lumped::Resistor(50.0), Orientation::Series, &grid6()).unwrap().to_s(50.0).unwrap();
        assert!((s.entries[0].s21 - C::new(2.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((s.entries[0].s11 - C::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((s_to_db(s.entries[0].s21) + 3.52).abs() < 0.01);
    }

    #[test]
    fn shunt_examples() {
        let g = grid6();
        let s = shunt_element(&[C::new(1.0 / 50.0, 0.0)], &g).unwrap().to_s(50.0).unwrap();
        assert!((s.entries[0].s21.norm() - 2.0 / 3.0).abs() < 1e-15);
        let s = lumped(Lumped::Resistor(7.0), Orientation::Shunt, &g).unwrap().to_s(50.0).unwrap();
        let expect = 2.0 / (2.0 + 50.0 / 7.0);
        assert!((s.entries[0].s21.norm() - expect).abs() < 1e-15);
        assert!((s.entries[0].s21.norm() - 0.219).abs() < 1e-3);
        assert!((s_to_db(s.entries[0].s21) + 13.2).abs() < 0.05);
    }

    #[test]
    fn series_capacitor_50ff() {
        let zc = 1.0 / (std::f64::consts::TAU * 6e9 * 50e-15);
        assert!((zc - 530.5).abs() < 0.1);
        let s = lumped(Lumped::Capacitor(50e-15), Orientation::Series, &grid6()).unwrap().to_s(50.0).unwrap();
        let mag = s.entries[0].s21.norm();
        assert!((mag - series_s21_closed_form(C::new(0.0, -zc))).abs() < 1e-12);
        assert!((mag - 0.185).abs() < 1e-3);
        assert!((s_to_db(s.entries[0].s21) + 14.6).abs() < 0.05);
    }

    #[test]
    fn huge_shunt_resistor_is_identity() {
        let s = lumped(Lumped::Resistor(1e300), Orientation::Shunt, &grid6()).unwrap().to_s(50.0).unwrap();
        assert!((s.entries[0].s21.norm() - 1.0).abs() < 1e-12);
        assert!(lumped(Lumped::Resistor(0.0), Orientation::Shunt, &grid6()).is_err());
        assert!(lumped(Lumped::Capacitor(-1.0), Orientation::Series, &grid6()).is_err());
    }

    #[test]
    fn degenerate_values_are_clamped_and_flagged() {
        let g = grid6();
        let m = series_element(&[C::new(f64::INFINITY, 0.0)], &g).unwrap();
        assert!(m.clamped);
        let s = m.to_s(50.0).unwrap();
        assert!(s.entries[0].s21.norm().is_finite());
        assert!(s.entries[0].s21.norm() < 1e-10);
        let m = shunt_element(&[C::new(0.0, 1e15)], &g).unwrap();
        assert!(m.clamped);
        assert!(m.to_s(50.0).unwrap().entries[0].s21.norm().is_finite());
    }

    #[test]
    fn cascade_identity_and_series_addition() {
        let g = grid6();
        let x = lumped(Lumped::Inductor(1e-9), Orientation::Series, &g).unwrap();
        let id = AbcdMatrix::identity(&g);
        assert_eq!(cascade(&[x.clone(), id]).unwrap(), x);
        let r25 = lumped(Lumped::Resistor(25.0), Orientation::Series, &g).unwrap();
        let r50 = lumped(Lumped::Resistor(50.0), Orientation::Series, &g).unwrap();
        assert_eq!(cascade(&[r25.clone(), r25]).unwrap(), r50);
    }

    #[test]
    fn cascade_grid_mismatch() {
        let a = AbcdMatrix::<f64>::identity(&grid6());
        let b = AbcdMatrix::identity(&FrequencyGrid::single(5e9).unwrap());
        assert!(cascade(&[a, b]).is_err());
        assert!(cascade::<f64>(&[]).is_err());
    }

    #[test]
    fn abcd_to_s_rejects_bad_z0() {
        assert!(abcd_to_s(&AbcdMatrix::<f64>::identity(&grid6()), 0.0).is_err());
    }

    #[test]
    fn attenuator_examples() {
        let g = grid6();
        assert!(attenuator(-1.0, &g).is_err());
        assert_eq!(attenuator(0.0, &g).unwrap().entries[0].s21, C::new(1.0, 0.0));
        assert!((attenuator(20.0, &g).unwrap().entries[0].s21.norm() - 0.1).abs() < 1e-15);
        assert!((attenuator(6.0, &g).unwrap().entries[0].s21.norm() - 0.5012).abs() < 1e-4);
    }

    #[test]
    fn attenuator_db_exact_through_abcd() {
        let g = FrequencyGrid::linspace(4e9, 8e9, 3).unwrap();
        for db in [0.0f64, 0.5, 3.0, 20.0, 60.0] {
            let abcd = attenuator(db, &g).unwrap().to_abcd().unwrap();
            let s = abcd.to_s(50.0).unwrap();
            for e in &s.entries {
                assert!((s_to_db(e.s21) + db).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generic_over_f32() {
        let g = FrequencyGrid::<f32>::single(6e9).unwrap();
        let s = lumped(Lumped::Resistor(50.0f32), Orientation::Series, &g).unwrap().to_s(50.0).unwrap();
        assert!((s.entries[0].s21.norm() - 2.0 / 3.0).abs() < 1e-6);
    }

    fn c() -> impl Strategy<Value = C> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(r, i)| C::new(r, i))
    }

    fn abcd() -> impl Strategy<Value = Abcd<f64>> {
        (c(), c(), c(), c()).prop_map(|(a, b, c, d)| Abcd { a, b, c, d })
    }

    fn rel(x: C, y: C) -> f64 {
        (x - y).norm() / (1.0 + x.norm().max(y.norm()))
    }

    fn reciprocal_element() -> impl Strategy<Value = (Lumped<f64>, Orientation)> {
        let kind = prop_oneof![
            (0.1..500.0f64).prop_map(Lumped::Resistor),
            (1e-12..1e-8f64).prop_map(Lumped::Inductor),
            (1e-15..1e-11f64).prop_map(Lumped::Capacitor),
        ];
        let orient = prop_oneof![Just(Orientation::Series), Just(Orientation::Shunt)];
        (kind, orient)
    }

    fn reactive_element() -> impl Strategy<Value = (Lumped<f64>, Orientation)> {
        let kind = prop_oneof![
            (1e-12..1e-8f64).prop_map(Lumped::Inductor),
            (1e-15..1e-11f64).prop_map(Lumped::Capacitor),
        ];
        let orient = prop_oneof![Just(Orientation::Series), Just(Orientation::Shunt)];
        (kind, orient)
    }

    fn build(elements: &[(Lumped<f64>, Orientation)]) -> AbcdMatrix<f64> {
        let g = FrequencyGrid::linspace(1e9, 10e9, 7).unwrap();
        let stages: Vec<_> = elements.iter().map(|&(e, o)| lumped(e, o, &g).unwrap()).collect();
        cascade(&stages).unwrap()
    }

    proptest! {
        #[test]
        fn cascade_is_associative(a in abcd(), b in abcd(), cc in abcd()) {
            let g = grid6();
            let m = |x: Abcd<f64>| AbcdMatrix { grid: g.clone(), entries: vec![x], clamped: false };
            let left = cascade(&[m(a), cascade(&[m(b), m(cc)]).unwrap()]).unwrap();
            let right = cascade(&[cascade(&[m(a), m(b)]).unwrap(), m(cc)]).unwrap();
            let (l, r) = (left.entries[0], right.entries[0]);
            for (x, y) in [(l.a, r.a), (l.b, r.b), (l.c, r.c), (l.d, r.d)] {
                prop_assert!(rel(x, y) < 1e-12);
            }
        }

        #[test]
        fn reciprocal_cascades(elements in prop::collection::vec(reciprocal_element(), 1..6)) {
            let m = build(&elements);
            let s = m.to_s(50.0).unwrap();
            for (e, sp) in m.entries.iter().zip(&s.entries) {
                prop_assert!((e.det() - C::new(1.0, 0.0)).norm() < 1e-9 * (1.0 + e.a.norm() * e.d.norm()));
                prop_assert!((sp.s21 - sp.s12).norm() <= 1e-12 * (1.0 + sp.s21.norm()));
                prop_assert!(sp.s21.norm() <= 1.0 + 1e-9);
                prop_assert!(sp.s11.norm() <= 1.0 + 1e-9);
            }
        }

        #[test]
        fn lossless_networks_conserve_power(elements in prop::collection::vec(reactive_element(), 1..6)) {
            let s = build(&elements).to_s(50.0).unwrap();
            for sp in &s.entries {
                let total = sp.s21.norm_sqr() + sp.s11.norm_sqr();
                prop_assert!((total - 1.0).abs() < 1e-9, "|S21|²+|S11|² = {}", total);
            }
        }

        #[test]
        fn s_abcd_round_trip(elements in prop::collection::vec(reciprocal_element(), 1..5)) {
            let m = build(&elements);
            let s = m.to_s(50.0).unwrap();
            let back = s.to_abcd().unwrap().to_s(50.0).unwrap();
            for (x, y) in s.entries.iter().zip(&back.entries) {
                prop_assert!(rel(x.s21, y.s21) < 1e-10);
                prop_assert!(rel(x.s11, y.s11) < 1e-10);
                prop_assert!(rel(x.s22, y.s22) < 1e-10);
            }
        }
    }
}
