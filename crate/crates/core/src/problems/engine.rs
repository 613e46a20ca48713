//! Engine merit function, the nine-parameter engine design space, and an
//! analytic stand-in for the combustion simulator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::{DesignPoint, DesignSpace, Dimension};

pub const P_MAX_LIMIT: f64 = 220.0;
pub const MPRR_LIMIT: f64 = 15.0;
pub const SOOT_LIMIT: f64 = 0.0268;
pub const NOX_LIMIT: f64 = 1.34;

/// Post-processed outputs of one engine simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EngineMetrics<T: Scalar> {
    /// Indicated specific fuel consumption, g/kWh.
    pub isfc: T,
    /// Peak cylinder pressure, bar.
    pub p_max: T,
    /// Peak pressure-rise rate, bar/°CA.
    pub mprr: T,
    /// g/kWh
    pub m_soot: T,
    /// g/kWh
    pub m_nox: T,
}

impl<T: Scalar> EngineMetrics<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("isfc", self.isfc),
            ("p_max", self.p_max),
            ("mprr", self.mprr),
            ("m_soot", self.m_soot),
            ("m_nox", self.m_nox),
        ] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::domain(format!("engine metric {name} = {v} must be finite and non-negative")));
            }
        }
        if self.isfc == T::zero() {
            return Err(Error::domain("engine metric isfc must be positive"));
        }
        Ok(())
    }
}

/// `value/limit − 1` above the limit, zero at or below it.
fn hinge<T: Scalar>(value: T, limit: f64) -> T {
    let limit = T::lit(limit);
    if value > limit {
        value / limit - T::one()
    } else {
        T::zero()
    }
}

/// Fuel-consumption merit with hinge penalties on the four constraints.
pub fn engine_merit<T: Scalar>(m: &EngineMetrics<T>) -> Result<T> {
    m.validate()?;
    let hundred = T::lit(100.0);
    Ok(hundred
        * (T::lit(160.0) / m.isfc
            - hundred * hinge(m.p_max, P_MAX_LIMIT)
            - T::lit(10.0) * hinge(m.mprr, MPRR_LIMIT)
            - hinge(m.m_soot, SOOT_LIMIT)
            - hinge(m.m_nox, NOX_LIMIT)))
}

/// The nine engine control parameters and their ranges.
pub fn engine_design_space<T: Scalar>() -> DesignSpace<T> {
    let c = |name: &str, lo: f64, hi: f64| Dimension::continuous(name, T::lit(lo), T::lit(hi));
    DesignSpace::new(vec![
        Dimension::integer("nNoz", T::lit(8.0), T::lit(10.0)),
        c("TNA", 1.0, 1.3),
        c("Pinj", 1.4e8, 1.8e8),
        c("SOI", -11.0, -7.0),
        c("Nang", 145.0, 166.0),
        c("EGR", 0.35, 0.5),
        c("Tivc", 323.0, 373.0),
        c("Pivc", 2.0, 2.3),
        c("SR", -2.4, -1.0),
    ])
    .expect("engine design space is valid")
}

/// Smooth analytic engine response over [`engine_design_space`], for
/// exercising the simulator protocol without a CFD code. Its unconstrained
/// ISFC optimum sits near the best designs reported for the real engine and
/// every constraint can be violated somewhere in the space.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyticEngine;

impl AnalyticEngine {
    /// Unit-cube location of the ISFC optimum.
    pub const OPTIMUM: [f64; 9] = [1.0, 0.3, 0.1, 0.175, 0.571, 0.667, 0.0, 1.0, 0.286];
    const WEIGHTS: [f64; 9] = [2.0, 4.0, 1.5, 3.0, 2.0, 3.0, 1.0, 1.0, 2.0];

    pub fn metrics<T: Scalar>(&self, point: &DesignPoint<T>) -> Result<EngineMetrics<f64>> {
        let u: Vec<f64> = engine_design_space::<T>().normalize(point)?.iter().map(|v| v.as_f64()).collect();
        let dist: f64 = u.iter().zip(Self::OPTIMUM).zip(Self::WEIGHTS).map(|((x, o), w)| w * (x - o).powi(2)).sum();
        let (soi, egr, tivc, pivc, pinj) = (u[3], u[5], u[6], u[7], u[2]);
        Ok(EngineMetrics {
            isfc: 153.6 + 4.0 * dist,
            p_max: 178.0 + 25.0 * pivc + 20.0 * (1.0 - soi),
            mprr: 8.0 + 10.0 * (1.0 - egr) * (1.0 - soi),
            m_soot: 0.012 + 0.02 * egr * (1.0 - pinj),
            m_nox: 0.8 + 1.2 * (1.0 - egr) + 0.3 * tivc,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean(isfc: f64) -> EngineMetrics<f64> {
        EngineMetrics { isfc, p_max: 200.0, mprr: 10.0, m_soot: 0.02, m_nox: 1.0 }
    }

    #[test]
    fn reported_merits() {
        for (isfc, merit) in [(156.53, 102.2), (153.97, 103.91), (153.85, 104.0), (153.6, 104.14)] {
            let f = engine_merit(&clean(isfc)).unwrap();
            assert!((f - merit).abs() <= 0.05, "{isfc} -> {f}");
        }
    }

    #[test]
    fn pressure_hinge() {
        let m = EngineMetrics { p_max: 242.0, ..clean(160.0) };
        assert!((engine_merit(&m).unwrap() + 900.0).abs() < 1e-9);
        let at_limit = EngineMetrics { p_max: 220.0, mprr: 15.0, m_soot: 0.0268, m_nox: 1.34, isfc: 160.0 };
        assert_eq!(engine_merit(&at_limit).unwrap(), 100.0);
    }

    #[test]
    fn rejects_bad_metrics() {
        assert!(engine_merit(&EngineMetrics { isfc: f64::NAN, ..clean(1.0) }).is_err());
        assert!(engine_merit(&EngineMetrics { m_nox: -1.0, ..clean(150.0) }).is_err());
    }

    #[test]
    fn penalties_are_monotone() {
        let base = clean(155.0);
        let mut prev = engine_merit(&base).unwrap();
        for k in 1..50 {
            let m = EngineMetrics { mprr: 10.0 + k as f64 * 0.5, m_nox: 1.0 + k as f64 * 0.05, ..base };
            let f = engine_merit(&m).unwrap();
            assert!(f <= prev);
            prev = f;
        }
    }

    #[test]
    fn design_space_fixture() {
        let s = engine_design_space::<f64>();
        assert_eq!(s.len(), 9);
        assert_eq!(s.dims()[0].kind, crate::space::DimKind::Integer);
        let sr = &s.dims()[8];
        assert_eq!((sr.name.as_str(), sr.lower, sr.upper), ("SR", -2.4, -1.0));
    }

    #[test]
    fn analytic_engine_optimum_is_feasible() {
        let s = engine_design_space::<f64>();
        let p = s.denormalize(&AnalyticEngine::OPTIMUM).unwrap();
        let m = AnalyticEngine.metrics(&p).unwrap();
        let f = engine_merit(&m).unwrap();
        assert!(f > 103.5 && f < 104.2, "{m:?} {f}");
        let worst = s.denormalize(&[0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(engine_merit(&AnalyticEngine.metrics(&worst).unwrap()).unwrap() < 0.0);
    }
}
