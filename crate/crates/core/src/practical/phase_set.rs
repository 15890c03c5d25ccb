use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Wraps an angle into `[-π, π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta - 2.0 * PI * ((theta + PI) / (2.0 * PI)).floor();
    // floor rounding can land exactly on +π
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// `|wrap(a - b)|`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// The `2^b` phases available to a `b`-bit phase shifter,
/// `π(-1 + (2m-1)/2^b)` for `m = 1..=2^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSet {
    bits: u32,
    values: Vec<f64>,
    phasors: Vec<Complex64>,
}

impl PhaseSet {
    pub fn new(bits: u32) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return invalid(format!("phase-shifter resolution {bits} bits outside 1..=16"));
        }
        let count = 1usize << bits;
        let values: Vec<f64> = (1..=count)
            .map(|m| PI * (-1.0 + (2.0 * m as f64 - 1.0) / count as f64))
            .collect();
        let phasors = values.iter().map(|&v| Complex64::from_polar(1.0, v)).collect();
        Ok(Self { bits, values, phasors })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// `e^{jδ}` for member `index`.
    pub fn phasor(&self, index: usize) -> Complex64 {
        self.phasors[index]
    }

    /// Spacing `2π/2^b` between adjacent members.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    /// Index of the member closest to `theta` in circular distance.
    /// Equidistant candidates resolve to the smaller index (smaller phase).
    pub fn quantize_index(&self, theta: f64) -> usize {
        let theta = wrap_phase(theta);
        let len = self.len();
        let cell = (((theta + PI) / self.spacing()).floor() as isize).clamp(0, len as isize - 1);
        let mut best = (f64::INFINITY, usize::MAX);
        for offset in [-1isize, 0, 1] {
            let idx = (cell + offset).rem_euclid(len as isize) as usize;
            let d = circular_distance(theta, self.values[idx]);
            if d < best.0 || (d == best.0 && idx < best.1) {
                best = (d, idx);
            }
        }
        best.1
    }

    pub fn quantize(&self, theta: f64) -> f64 {
        self.values[self.quantize_index(theta)]
    }

    /// The two members bracketing `theta` (the cell it falls in and its circular neighbour).
    pub fn bracket(&self, theta: f64) -> [usize; 2] {
        let len = self.len() as isize;
        let x = (wrap_phase(theta) + PI) / self.spacing() - 0.5;
        let lo = (x.floor() as isize).rem_euclid(len);
        [lo as usize, ((lo + 1) % len) as usize]
    }
}
