use serde::{Deserialize, Serialize};

use super::ModelError;

/// Subadditive construction cost per unit length as a function of capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostSpec {
    /// `t^alpha`, alpha in (0, 1).
    Power { alpha: f64 },
    /// `value` for every `t > 0`.
    BoundedStep { value: f64 },
    /// Piecewise linear through the origin and the given `[t, phi(t)]` points,
    /// continued with the last slope.
    Table { points: Vec<[f64; 2]> },
}

impl CostSpec {
    pub fn sqrt() -> Self {
        CostSpec::Power { alpha: 0.5 }
    }

    /// Evaluates phi at `t >= 0`; `phi(0) == 0` exactly for every kind.
    pub fn eval(&self, t: f64) -> Result<f64, ModelError> {
        if t < 0.0 || t.is_nan() {
            return Err(ModelError::NegativeArgument(t));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            CostSpec::Power { alpha } => t.powf(*alpha),
            CostSpec::BoundedStep { value } => *value,
            CostSpec::Table { points } => {
                let (mut t0, mut y0) = (0.0, 0.0);
                let mut slope = 0.0;
                for &[t1, y1] in points {
                    slope = (y1 - y0) / (t1 - t0);
                    if t <= t1 {
                        return y0 + slope * (t - t0);
                    }
                    t0 = t1;
                    y0 = y1;
                }
                y0 + slope * (t - t0)
            }
        }
    }

    /// Whether phi stays below some finite constant.
    pub fn is_bounded(&self) -> bool {
        match self {
            CostSpec::Power { .. } => false,
            CostSpec::BoundedStep { .. } => true,
            CostSpec::Table { points } => {
                let n = points.len();
                if n == 0 {
                    return true;
                }
                let (t0, y0) = if n >= 2 {
                    (points[n - 2][0], points[n - 2][1])
                } else {
                    (0.0, 0.0)
                };
                points[n - 1][1] - y0 <= 0.0 || points[n - 1][0] <= t0
            }
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            CostSpec::Power { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(ModelError::schema("phi.alpha", "must lie in (0, 1)"));
                }
            }
            CostSpec::BoundedStep { value } => {
                if !(*value > 0.0) || !value.is_finite() {
                    return Err(ModelError::schema("phi.value", "must be positive"));
                }
            }
            CostSpec::Table { points } => {
                if points.is_empty() {
                    return Err(ModelError::schema("phi.points", "needs at least one point"));
                }
                let (mut t0, mut y0) = (0.0, 0.0);
                for (k, &[t, y]) in points.iter().enumerate() {
                    if !(t > t0) || !t.is_finite() || !y.is_finite() {
                        return Err(ModelError::schema(
                            format!("phi.points[{k}]"),
                            "breakpoints must be finite and strictly increasing from 0",
                        ));
                    }
                    if y < y0 {
                        return Err(ModelError::schema(
                            format!("phi.points[{k}]"),
                            "phi must be nondecreasing",
                        ));
                    }
                    t0 = t;
                    y0 = y;
                }
            }
        }
        Ok(())
    }

    /// Spot-checks `phi(s + t) <= phi(s) + phi(t)` on a fixed sample grid.
    pub fn subadditive_on_samples(&self) -> bool {
        let samples: Vec<f64> = (0..=24).map(|k| 2f64.powf(k as f64 / 2.0 - 8.0)).collect();
        samples.iter().all(|&s| {
            samples.iter().all(|&t| {
                self.eval_unchecked(s + t)
                    <= self.eval_unchecked(s) + self.eval_unchecked(t) + 1e-12
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_and_step() {
        assert_eq!(CostSpec::sqrt().eval(4.0).unwrap(), 2.0);
        let step = CostSpec::BoundedStep { value: 1.0 };
        assert_eq!(step.eval(1e-9).unwrap(), 1.0);
        assert!(step.is_bounded());
        assert!(!CostSpec::sqrt().is_bounded());
    }

    #[test]
    fn zero_maps_to_zero() {
        for c in [
            CostSpec::sqrt(),
            CostSpec::BoundedStep { value: 3.0 },
            CostSpec::Table {
                points: vec![[1.0, 2.0]],
            },
        ] {
            assert_eq!(c.eval(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn negative_argument_is_rejected() {
        assert!(CostSpec::sqrt().eval(-1.0).is_err());
    }

    #[test]
    fn table_interpolates_and_extrapolates() {
        let c = CostSpec::Table {
            points: vec![[1.0, 2.0], [3.0, 3.0]],
        };
        assert_eq!(c.eval(0.5).unwrap(), 1.0);
        assert_eq!(c.eval(2.0).unwrap(), 2.5);
        assert_eq!(c.eval(5.0).unwrap(), 4.0);
        assert!(!c.is_bounded());
        assert!(c.subadditive_on_samples());
        let flat = CostSpec::Table {
            points: vec![[1.0, 2.0], [3.0, 2.0]],
        };
        assert!(flat.is_bounded());
    }

    #[test]
    fn convex_table_fails_subadditivity() {
        let c = CostSpec::Table {
            points: vec![[1.0, 0.1], [2.0, 5.0]],
        };
        assert!(c.validate().is_ok());
        assert!(!c.subadditive_on_samples());
    }
}
