//! Desired beam-magnitude profiles `g(Ω)`.
//!
//! Every pattern is scaled so that `∫ g(Ω)² dΩ` over `[-1, 1]` equals 2,
//! which is the energy of the beam gain of any unit-norm codeword. For a
//! rect pattern this gives the familiar `C_v = √(2/B)`.
//!
//! The triangular and step shapes are parametric reconstructions: a
//! symmetric triangle peaking at the coverage midpoint, and two plateaus
//! split at a fraction of the coverage.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetShape {
    Rect,
    Triangular,
    /// `heights.0` on the first `split` fraction of the coverage, `heights.1` after it.
    Step { heights: (f64, f64), split: f64 },
    /// Piecewise-linear profile through `(Ω, magnitude)` knots sorted by `Ω`.
    /// The coverage is the span of the knots.
    Custom { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetPattern {
    shape: TargetShape,
    lo: f64,
    hi: f64,
    scale: f64,
}

impl TargetPattern {
    /// Builds a pattern over `[lo, hi]`. For [`TargetShape::Custom`] the
    /// interval is ignored in favour of the knot span.
    pub fn new(shape: TargetShape, lo: f64, hi: f64) -> Result<Self> {
        let (lo, hi) = match &shape {
            TargetShape::Custom { knots } => {
                validate_knots(knots)?;
                (knots[0].0, knots[knots.len() - 1].0)
            }
            _ => (lo, hi),
        };
        if !(lo.is_finite() && hi.is_finite()) || lo < -1.0 || hi > 1.0 || hi <= lo {
            return invalid(format!("coverage [{lo}, {hi}] must be a non-empty subinterval of [-1, 1]"));
        }
        if let TargetShape::Step { heights, split } = &shape {
            if !(heights.0 >= 0.0 && heights.1 >= 0.0) || heights.0 + heights.1 <= 0.0 {
                return invalid("step heights must be non-negative and not both zero");
            }
            if !(*split > 0.0 && *split < 1.0) {
                return invalid(format!("step split {split} must lie in (0, 1)"));
            }
        }
        let mut pattern = Self { shape, lo, hi, scale: 1.0 };
        let energy = pattern.unscaled_energy();
        if energy.is_nan() || energy <= 0.0 {
            return invalid("target pattern has zero energy");
        }
        pattern.scale = (2.0 / energy).sqrt();
        Ok(pattern)
    }

    pub fn rect(lo: f64, hi: f64) -> Result<Self> {
        Self::new(TargetShape::Rect, lo, hi)
    }

    pub fn triangular(lo: f64, hi: f64) -> Result<Self> {
        Self::new(TargetShape::Triangular, lo, hi)
    }

    pub fn step(lo: f64, hi: f64, heights: (f64, f64), split: f64) -> Result<Self> {
        Self::new(TargetShape::Step { heights, split }, lo, hi)
    }

    pub fn custom(knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(TargetShape::Custom { knots }, -1.0, 1.0)
    }

    pub fn shape(&self) -> &TargetShape {
        &self.shape
    }

    pub fn coverage(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Energy normalization factor; equals `C_v` for a rect pattern.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `g(Ω)`; zero outside the coverage interval.
    pub fn eval(&self, omega: f64) -> f64 {
        if omega < self.lo || omega > self.hi {
            return 0.0;
        }
        self.scale * self.unscaled(omega)
    }

    fn unscaled(&self, omega: f64) -> f64 {
        let b = self.width();
        match &self.shape {
            TargetShape::Rect => 1.0,
            TargetShape::Triangular => {
                let mid = self.lo + 0.5 * b;
                (1.0 - (omega - mid).abs() / (0.5 * b)).max(0.0)
            }
            TargetShape::Step { heights, split } => {
                if omega < self.lo + split * b {
                    heights.0
                } else {
                    heights.1
                }
            }
            TargetShape::Custom { knots } => interpolate(knots, omega),
        }
    }

    fn unscaled_energy(&self) -> f64 {
        let b = self.width();
        match &self.shape {
            TargetShape::Rect => b,
            TargetShape::Triangular => b / 3.0,
            TargetShape::Step { heights, split } => {
                heights.0 * heights.0 * split * b + heights.1 * heights.1 * (1.0 - split) * b
            }
            // exact integral of a squared linear segment
            TargetShape::Custom { knots } => knots
                .windows(2)
                .map(|w| {
                    let (x0, a) = w[0];
                    let (x1, c) = w[1];
                    (x1 - x0) * (a * a + a * c + c * c) / 3.0
                })
                .sum(),
        }
    }
}

fn validate_knots(knots: &[(f64, f64)]) -> Result<()> {
    if knots.len() < 2 {
        return invalid("custom pattern needs at least two knots");
    }
    for w in knots.windows(2) {
        if w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater) {
            return invalid("custom knots must be strictly increasing in omega");
        }
    }
    if knots.iter().any(|&(o, m)| !(-1.0..=1.0).contains(&o) || !m.is_finite() || m < 0.0) {
        return invalid("custom knots need omega in [-1, 1] and finite non-negative magnitude");
    }
    Ok(())
}

fn interpolate(knots: &[(f64, f64)], omega: f64) -> f64 {
    let idx = knots.partition_point(|&(o, _)| o <= omega);
    if idx == 0 {
        return knots[0].1;
    }
    if idx == knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (x0, y0) = knots[idx - 1];
    let (x1, y1) = knots[idx];
    y0 + (y1 - y0) * (omega - x0) / (x1 - x0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn energy_by_quadrature(t: &TargetPattern) -> f64 {
        let n = 200_000;
        let h = 2.0 / n as f64;
        (0..n)
            .map(|i| {
                let o = -1.0 + (i as f64 + 0.5) * h;
                t.eval(o).powi(2) * h
            })
            .sum()
    }

    #[test]
    fn rect_on_left_half() {
        let t = TargetPattern::rect(-1.0, 0.0).unwrap();
        assert!((t.eval(-0.5) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(t.eval(0.5), 0.0);
        assert!((t.scale() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn triangular_shape() {
        let t = TargetPattern::triangular(-1.0, 0.0).unwrap();
        assert_eq!(t.eval(-1.0), 0.0);
        let peak = t.eval(-0.5);
        for o in [-0.9, -0.7, -0.55, -0.3, -0.1] {
            assert!(t.eval(o) < peak);
        }
        assert!((t.eval(-0.8) - t.eval(-0.2)).abs() < 1e-12);
        assert!((energy_by_quadrature(&t) - 2.0).abs() < 1e-4);
    }

    #[test]
    fn step_plateaus_and_energy() {
        let t = TargetPattern::step(-1.0, 0.0, (1.0, 2.0), 0.5).unwrap();
        assert!((t.eval(-0.25) / t.eval(-0.75) - 2.0).abs() < 1e-12);
        assert!((energy_by_quadrature(&t) - 2.0).abs() < 1e-4);
    }

    #[test]
    fn custom_energy_is_exact() {
        let t = TargetPattern::custom(vec![(-0.5, 0.0), (-0.2, 3.0), (0.1, 1.0), (0.4, 0.0)]).unwrap();
        assert_eq!(t.coverage(), (-0.5, 0.4));
        assert!((energy_by_quadrature(&t) - 2.0).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TargetPattern::rect(0.0, 0.0).is_err());
        assert!(TargetPattern::rect(-1.5, 0.0).is_err());
        assert!(TargetPattern::step(-1.0, 0.0, (-1.0, 2.0), 0.5).is_err());
        assert!(TargetPattern::step(-1.0, 0.0, (1.0, 2.0), 1.0).is_err());
        assert!(TargetPattern::custom(vec![(0.0, 1.0)]).is_err());
        assert!(TargetPattern::custom(vec![(0.0, 0.0), (0.5, 0.0)]).is_err());
    }
}
