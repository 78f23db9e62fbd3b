//! Ground-truth calibration curves f(s) = P(y = 1 | score = s) for
//! synthetic populations.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A curve family evaluable at any score in [0, 1]; outputs are clipped to
/// [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CalibrationCurve {
    /// f ≡ value.
    Constant { value: f64 },
    /// Linear interpolation through `knots`, constant beyond the ends.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// A rising logistic with a dip near the top of the score range, where
    /// real-world curves often sag:
    /// σ(steepness·(s − midpoint)) · (1 − drop_depth·σ(drop_steepness·(s − drop_midpoint))).
    LogisticHighendDrop {
        #[serde(default = "defaults::midpoint")]
        midpoint: f64,
        #[serde(default = "defaults::steepness")]
        steepness: f64,
        #[serde(default = "defaults::drop_midpoint")]
        drop_midpoint: f64,
        #[serde(default = "defaults::drop_steepness")]
        drop_steepness: f64,
        #[serde(default = "defaults::drop_depth")]
        drop_depth: f64,
    },
}

mod defaults {
    pub fn midpoint() -> f64 {
        0.5
    }
    pub fn steepness() -> f64 {
        10.0
    }
    pub fn drop_midpoint() -> f64 {
        0.85
    }
    pub fn drop_steepness() -> f64 {
        20.0
    }
    pub fn drop_depth() -> f64 {
        0.5
    }
}

impl CalibrationCurve {
    /// The dip-at-the-top logistic with default parameters.
    pub fn logistic_highend_drop() -> Self {
        CalibrationCurve::LogisticHighendDrop {
            midpoint: defaults::midpoint(),
            steepness: defaults::steepness(),
            drop_midpoint: defaults::drop_midpoint(),
            drop_steepness: defaults::drop_steepness(),
            drop_depth: defaults::drop_depth(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CalibrationCurve::Constant { value } => {
                if !(0.0..=1.0).contains(value) {
                    return Err(Error::InvalidConfig(format!(
                        "constant curve value {value} outside [0, 1]"
                    )));
                }
            }
            CalibrationCurve::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidConfig(
                        "piecewise-linear curve needs at least 2 knots".into(),
                    ));
                }
                for window in knots.windows(2) {
                    if !(window[1].0 > window[0].0) {
                        return Err(Error::InvalidConfig(
                            "piecewise-linear knots must have strictly increasing scores".into(),
                        ));
                    }
                }
                for &(s, f) in knots {
                    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&f) {
                        return Err(Error::InvalidConfig(format!(
                            "knot ({s}, {f}) outside the unit square"
                        )));
                    }
                }
            }
            CalibrationCurve::LogisticHighendDrop {
                steepness,
                drop_steepness,
                drop_depth,
                ..
            } => {
                if !steepness.is_finite() || !drop_steepness.is_finite() {
                    return Err(Error::InvalidConfig("non-finite curve steepness".into()));
                }
                if !(0.0..=1.0).contains(drop_depth) {
                    return Err(Error::InvalidConfig(format!(
                        "drop depth {drop_depth} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// f(s), clipped to [0, 1].
    pub fn evaluate(&self, s: f64) -> f64 {
        let raw = match self {
            CalibrationCurve::Constant { value } => *value,
            CalibrationCurve::PiecewiseLinear { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if s <= first.0 {
                    first.1
                } else if s >= last.0 {
                    last.1
                } else {
                    // The guards above make `partition_point` land strictly inside.
                    let hi = knots.partition_point(|&(ks, _)| ks < s);
                    let (s0, f0) = knots[hi - 1];
                    let (s1, f1) = knots[hi];
                    f0 + (f1 - f0) * (s - s0) / (s1 - s0)
                }
            }
            CalibrationCurve::LogisticHighendDrop {
                midpoint,
                steepness,
                drop_midpoint,
                drop_steepness,
                drop_depth,
            } => {
                logistic(steepness * (s - midpoint))
                    * (1.0 - drop_depth * logistic(drop_steepness * (s - drop_midpoint)))
            }
        };
        raw.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_curve_is_flat() {
        let c = CalibrationCurve::Constant { value: 0.3 };
        c.validate().unwrap();
        assert_eq!(c.evaluate(0.0), 0.3);
        assert_eq!(c.evaluate(1.0), 0.3);
        assert!(CalibrationCurve::Constant { value: 1.5 }.validate().is_err());
    }

    #[test]
    fn piecewise_linear_interpolates_and_extends() {
        let c = CalibrationCurve::PiecewiseLinear {
            knots: vec![(0.2, 0.0), (0.6, 0.8), (1.0, 0.4)],
        };
        c.validate().unwrap();
        assert_eq!(c.evaluate(0.0), 0.0);
        assert!((c.evaluate(0.4) - 0.4).abs() < 1e-15);
        assert!((c.evaluate(0.6) - 0.8).abs() < 1e-15);
        assert!((c.evaluate(0.8) - 0.6).abs() < 1e-15);
        assert_eq!(c.evaluate(1.0), 0.4);
    }

    #[test]
    fn piecewise_linear_rejects_bad_knots() {
        let unsorted =
            CalibrationCurve::PiecewiseLinear { knots: vec![(0.5, 0.1), (0.2, 0.3)] };
        assert!(unsorted.validate().is_err());
        let single = CalibrationCurve::PiecewiseLinear { knots: vec![(0.5, 0.1)] };
        assert!(single.validate().is_err());
        let outside =
            CalibrationCurve::PiecewiseLinear { knots: vec![(0.0, 0.0), (1.0, 1.2)] };
        assert!(outside.validate().is_err());
    }

    #[test]
    fn logistic_family_rises_then_dips() {
        let c = CalibrationCurve::logistic_highend_drop();
        c.validate().unwrap();
        assert!(c.evaluate(0.1) < 0.05);
        assert!((c.evaluate(0.5) - 0.5 * (1.0 - 0.5 * logistic(-7.0))).abs() < 1e-12);
        // The drop: values past the dip midpoint fall below the pure logistic.
        let at_95 = c.evaluate(0.95);
        let pure = logistic(10.0 * (0.95 - 0.5));
        assert!(at_95 < pure * 0.75);
        for i in 0..=100 {
            let v = c.evaluate(i as f64 / 100.0);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn curves_round_trip_through_json() {
        let curves = vec![
            CalibrationCurve::Constant { value: 0.25 },
            CalibrationCurve::PiecewiseLinear { knots: vec![(0.0, 0.0), (1.0, 1.0)] },
            CalibrationCurve::logistic_highend_drop(),
        ];
        for c in curves {
            let json = serde_json::to_string(&c).unwrap();
            let back: CalibrationCurve = serde_json::from_str(&json).unwrap();
            assert_eq!(c, back);
        }
        // Defaults fill in omitted parameters.
        let sparse: CalibrationCurve =
            serde_json::from_str(r#"{"family":"logistic_highend_drop"}"#).unwrap();
        assert_eq!(sparse, CalibrationCurve::logistic_highend_drop());
    }
}
