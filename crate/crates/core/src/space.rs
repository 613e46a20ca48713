//! Design spaces, design points and the unit-cube mapping used by every
//! learner and distance computation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimKind {
    #[default]
    Continuous,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", deny_unknown_fields)]
pub struct Dimension<T: Scalar> {
    pub name: String,
    pub lower: T,
    pub upper: T,
    #[serde(default)]
    pub kind: DimKind,
}

impl<T: Scalar> Dimension<T> {
    pub fn continuous(name: impl Into<String>, lower: T, upper: T) -> Self {
        Self { name: name.into(), lower, upper, kind: DimKind::Continuous }
    }

    pub fn integer(name: impl Into<String>, lower: T, upper: T) -> Self {
        Self { name: name.into(), lower, upper, kind: DimKind::Integer }
    }

    #[inline]
    pub fn range(&self) -> T {
        self.upper - self.lower
    }
}

/// Ordered, named, bounded search domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", try_from = "Vec<Dimension<T>>", into = "Vec<Dimension<T>>")]
pub struct DesignSpace<T: Scalar> {
    dims: Vec<Dimension<T>>,
}

impl<T: Scalar> TryFrom<Vec<Dimension<T>>> for DesignSpace<T> {
    type Error = Error;
    fn try_from(dims: Vec<Dimension<T>>) -> Result<Self> {
        DesignSpace::new(dims)
    }
}

impl<T: Scalar> From<DesignSpace<T>> for Vec<Dimension<T>> {
    fn from(space: DesignSpace<T>) -> Self {
        space.dims
    }
}

impl<T: Scalar> DesignSpace<T> {
    pub fn new(dims: Vec<Dimension<T>>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::domain("design space needs at least one dimension"));
        }
        for (i, d) in dims.iter().enumerate() {
            if !(d.lower.is_finite() && d.upper.is_finite()) {
                return Err(Error::domain(format!("dimension `{}` has non-finite bounds", d.name)));
            }
            if !(d.lower < d.upper) {
                return Err(Error::domain(format!(
                    "dimension `{}`: lower bound {} is not below upper bound {}",
                    d.name, d.lower, d.upper
                )));
            }
            if d.kind == DimKind::Integer && (d.lower.fract() != T::zero() || d.upper.fract() != T::zero()) {
                return Err(Error::domain(format!(
                    "integer dimension `{}` has non-integer bounds [{}, {}]",
                    d.name, d.lower, d.upper
                )));
            }
            if dims[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::domain(format!("duplicate dimension name `{}`", d.name)));
            }
        }
        Ok(Self { dims })
    }

    /// Hypercube `[lower, upper]^d` with dimensions named `x0, x1, ...`.
    pub fn cube(d: usize, lower: T, upper: T) -> Result<Self> {
        Self::new((0..d).map(|i| Dimension::continuous(format!("x{i}"), lower, upper)).collect())
    }

    pub fn dims(&self) -> &[Dimension<T>] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.dims.iter().map(|d| d.name.as_str())
    }

    pub fn contains(&self, point: &DesignPoint<T>) -> bool {
        point.coords.len() == self.len()
            && self.dims.iter().zip(&point.coords).all(|(d, &x)| {
                x >= d.lower && x <= d.upper && (d.kind == DimKind::Continuous || x.fract() == T::zero())
            })
    }

    /// Map a physical point to the unit cube.
    pub fn normalize(&self, point: &DesignPoint<T>) -> Result<Vec<T>> {
        self.check_len(point.coords.len())?;
        self.dims
            .iter()
            .zip(&point.coords)
            .map(|(d, &x)| {
                if !(x >= d.lower && x <= d.upper) {
                    return Err(Error::domain(format!(
                        "coordinate {} of dimension `{}` outside [{}, {}]",
                        x, d.name, d.lower, d.upper
                    )));
                }
                Ok(((x - d.lower) / d.range()).min(T::one()).max(T::zero()))
            })
            .collect()
    }

    /// Map a unit-cube vector back to physical units; integer dimensions are
    /// rounded half away from zero and kept within bounds.
    pub fn denormalize(&self, u: &[T]) -> Result<DesignPoint<T>> {
        self.check_len(u.len())?;
        let coords = self
            .dims
            .iter()
            .zip(u)
            .map(|(d, &uj)| {
                if !(uj >= T::zero() && uj <= T::one()) {
                    return Err(Error::domain(format!(
                        "unit coordinate {} for dimension `{}` outside [0, 1]",
                        uj, d.name
                    )));
                }
                let x = d.lower + uj * d.range();
                Ok(match d.kind {
                    DimKind::Continuous => x.min(d.upper).max(d.lower),
                    DimKind::Integer => x.round_half_away().min(d.upper).max(d.lower),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DesignPoint::new(coords))
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::domain(format!(
                "point has {n} coordinates but the design space has {} dimensions",
                self.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", transparent)]
pub struct DesignPoint<T: Scalar> {
    pub coords: Vec<T>,
}

impl<T: Scalar> DesignPoint<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Self { coords }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }
}

impl<T: Scalar> From<Vec<T>> for DesignPoint<T> {
    fn from(coords: Vec<T>) -> Self {
        Self { coords }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square() -> DesignSpace<f64> {
        DesignSpace::cube(2, -1.0, 1.0).unwrap()
    }

    fn nnoz() -> DesignSpace<f64> {
        DesignSpace::new(vec![Dimension::integer("nNoz", 8.0, 10.0)]).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let s = square();
        assert_eq!(s.normalize(&vec![0.0, 0.0].into()).unwrap(), vec![0.5, 0.5]);
        assert_eq!(s.normalize(&vec![-1.0, -1.0].into()).unwrap(), vec![0.0, 0.0]);
        let tivc = DesignSpace::new(vec![Dimension::continuous("Tivc", 323.0, 373.0)]).unwrap();
        assert_eq!(tivc.normalize(&vec![348.0].into()).unwrap(), vec![0.5]);
    }

    #[test]
    fn normalize_rejects_out_of_bounds_naming_dimension() {
        let err = square().normalize(&vec![0.0, 1.5].into()).unwrap_err();
        assert!(err.to_string().contains("x1"), "{err}");
    }

    #[test]
    fn denormalize_examples() {
        let s = square();
        assert_eq!(s.denormalize(&[0.5, 0.5]).unwrap().coords, vec![0.0, 0.0]);
        assert_eq!(nnoz().denormalize(&[1.0]).unwrap().coords, vec![10.0]);
        // 8 + 0.4 * 2 = 8.8 -> 9
        assert_eq!(nnoz().denormalize(&[0.4]).unwrap().coords, vec![9.0]);
        // 8 + 0.25 * 2 = 8.5 -> 9 (half away from zero)
        assert_eq!(nnoz().denormalize(&[0.25]).unwrap().coords, vec![9.0]);
        assert!(s.denormalize(&[1.2, 0.0]).is_err());
        assert!(s.denormalize(&[0.5]).is_err());
    }

    #[test]
    fn space_invariants() {
        assert!(DesignSpace::new(vec![Dimension::continuous("a", 1.0, 1.0)]).is_err());
        assert!(DesignSpace::new(vec![Dimension::continuous("a", 2.0, 1.0)]).is_err());
        assert!(DesignSpace::new(vec![Dimension::integer("n", 0.5, 3.0)]).is_err());
        assert!(DesignSpace::new(vec![
            Dimension::continuous("a", 0.0, 1.0),
            Dimension::continuous("a", 0.0, 1.0)
        ])
        .is_err());
        assert!(DesignSpace::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let s = DesignSpace::<f32>::cube(3, -2.0, 2.0).unwrap();
        let u = s.normalize(&vec![0.0f32, 2.0, -2.0].into()).unwrap();
        assert_eq!(u, vec![0.5f32, 1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn round_trip_continuous(lo in -1e3f64..1e3, w in 1e-3f64..1e3, t in 0.0f64..=1.0) {
            let s = DesignSpace::new(vec![Dimension::continuous("a", lo, lo + w)]).unwrap();
            let x = (lo + t * w).min(lo + w);
            let u = s.normalize(&vec![x].into()).unwrap();
            prop_assert!(u[0] >= 0.0 && u[0] <= 1.0);
            let back = s.denormalize(&u).unwrap();
            prop_assert!((back.coords[0] - x).abs() <= 1e-12 * (1.0 + x.abs() + w));
        }

        #[test]
        fn denormalized_points_are_contained(u in proptest::collection::vec(0.0f64..=1.0, 3)) {
            let s = DesignSpace::new(vec![
                Dimension::continuous("a", -5.0, 5.0),
                Dimension::integer("n", 8.0, 10.0),
                Dimension::continuous("p", 1.4e8, 1.8e8),
            ]).unwrap();
            prop_assert!(s.contains(&s.denormalize(&u).unwrap()));
        }
    }
}
