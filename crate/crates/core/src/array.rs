//! Uniform linear array primitives.
//!
//! All angles are in the cosine domain `Ω ∈ [-1, 1]` (`Ω = cos ω` for a
//! physical angle `ω`) and elements are spaced half a wavelength apart, so the
//! phase progression between neighbouring elements is `π·Ω`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::target::TargetPattern;

/// Tolerance on `‖v‖₂ = 1` accepted by [`Codeword::new`].
pub const NORM_TOLERANCE: f64 = 1e-9;

/// A unit-norm beamforming vector (beamformer or combiner), one entry per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    entries: Vec<Complex64>,
}

impl Codeword {
    /// Wraps `entries`, which must already have unit norm.
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return invalid("codeword must have at least one entry");
        }
        let norm = l2_norm(&entries);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return invalid(format!("codeword norm is {norm}, expected 1"));
        }
        Ok(Self { entries })
    }

    /// Scales a raw vector to unit norm.
    pub fn normalized(raw: Vec<Complex64>) -> Result<Self> {
        if raw.is_empty() {
            return invalid("codeword must have at least one entry");
        }
        let norm = l2_norm(&raw);
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::SynthesisFailure(format!(
                "cannot normalize vector with norm {norm}"
            )));
        }
        Ok(Self {
            entries: raw.into_iter().map(|x| x / norm).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.entries
    }

    /// Beam gain `G(v, Ω)`.
    pub fn gain(&self, omega: f64) -> Complex64 {
        beam_gain(&self.entries, omega)
    }
}

pub(crate) fn l2_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Channel steering vector `a(N, Ω)`, entry `n` equal to `e^{jπnΩ}/√N` (0-based `n`).
pub fn steering_vector(n: usize, omega: f64) -> Result<Vec<Complex64>> {
    if n == 0 {
        return invalid("steering vector needs at least one antenna");
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok((0..n)
        .map(|i| Complex64::from_polar(scale, PI * i as f64 * omega))
        .collect())
}

/// Beam gain `G(v, Ω) = Σₙ vₙ e^{-jπnΩ}`, i.e. `√N·a(N,Ω)ᴴv`.
///
/// Evaluated with a phasor recurrence, renormalized every few steps so long
/// arrays do not drift off the unit circle.
pub fn beam_gain(v: &[Complex64], omega: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -PI * omega);
    let mut phasor = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &x) in v.iter().enumerate() {
        if i % 32 == 0 {
            phasor = Complex64::from_polar(1.0, -PI * i as f64 * omega);
        }
        acc += x * phasor;
        phasor *= step;
    }
    acc
}

/// One point of a sampled beam pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSample {
    pub omega: f64,
    pub magnitude: f64,
    pub phase: f64,
}

/// Evaluates the beam gain of `v` on every point of `grid`.
pub fn sample_pattern(v: &Codeword, grid: &[f64]) -> Vec<PatternSample> {
    grid.iter()
        .map(|&omega| {
            let g = v.gain(omega);
            PatternSample {
                omega,
                magnitude: g.norm(),
                phase: g.arg(),
            }
        })
        .collect()
}

/// `points` uniformly spaced angles covering `[-1, 1]` including both ends.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Writes a sampled pattern as `omega,magnitude,phase_rad` CSV with 12 significant digits.
pub fn write_pattern_csv<W: Write>(mut out: W, samples: &[PatternSample]) -> std::io::Result<()> {
    writeln!(out, "omega,magnitude,phase_rad")?;
    for s in samples {
        writeln!(out, "{:.11e},{:.11e},{:.11e}", s.omega, s.magnitude, s.phase)?;
    }
    Ok(())
}

/// Main-lobe mean squared error between `|G(v, Ω)|` and the target magnitude.
///
/// The target is sampled on `grid_density` uniform points strictly inside the
/// coverage interval after trimming a transition guard of one array
/// resolution cell (`2/N`, capped at a quarter of the coverage width) from
/// each edge. For a rect target the reference magnitude is the constant
/// `C_v`.
pub fn main_lobe_mse(v: &Codeword, target: &TargetPattern, grid_density: usize) -> Result<f64> {
    let guard = (2.0 / v.len() as f64).min(target.width() / 4.0);
    main_lobe_mse_with_guard(v, target, grid_density, guard)
}

/// [`main_lobe_mse`] with an explicit edge guard; `guard = 0` samples the
/// whole open coverage interval.
pub fn main_lobe_mse_with_guard(
    v: &Codeword,
    target: &TargetPattern,
    grid_density: usize,
    guard: f64,
) -> Result<f64> {
    if grid_density < 2 {
        return invalid("main-lobe grid needs at least two points");
    }
    let (lo, hi) = target.coverage();
    let (a, b) = (lo + guard, hi - guard);
    if guard.is_nan() || guard < 0.0 || b <= a {
        return invalid(format!("empty main-lobe interval [{a}, {b}]"));
    }
    let n = grid_density as f64;
    let sum: f64 = (1..=grid_density)
        .map(|i| {
            let omega = a + (b - a) * i as f64 / (n + 1.0);
            let err = v.gain(omega).norm() - target.eval(omega);
            err * err
        })
        .sum();
    Ok(sum / n)
}

/// Matrix of `K` scaled steering vectors on the uniform grid `Ω_k = -1 + (2k-1)/K`.
///
/// Column `k` is `√N·a(N, Ω_k)`, so every entry has unit magnitude and
/// `A·Aᴴ = K·I_N` whenever `K ≥ N`.
#[derive(Debug, Clone)]
pub struct SteeringMatrix {
    n: usize,
    grid: Vec<f64>,
    // column-major, column k occupies [k*n, (k+1)*n)
    data: Vec<Complex64>,
}

impl SteeringMatrix {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return invalid("steering matrix needs at least one antenna");
        }
        if k < n {
            return invalid(format!("grid size K = {k} must be at least N = {n}"));
        }
        let grid = grid_angles(k);
        let mut data = Vec::with_capacity(n * k);
        for &omega in &grid {
            data.extend((0..n).map(|i| Complex64::from_polar(1.0, PI * i as f64 * omega)));
        }
        Ok(Self { n, grid, data })
    }

    pub fn antennas(&self) -> usize {
        self.n
    }

    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn column(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    /// `A·g`.
    pub fn apply(&self, g: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(g.len(), self.grid_size());
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        for (k, &gk) in g.iter().enumerate() {
            if gk == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.column(k)) {
                *o += a * gk;
            }
        }
        out
    }

    /// `Aᴴ·v`, i.e. the beam gain of `v` at every grid angle.
    pub fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        (0..self.grid_size())
            .map(|k| self.column(k).iter().zip(v).map(|(a, x)| a.conj() * x).sum())
            .collect()
    }

    /// `AᴴA` as a dense row-major `K×K` matrix. Entry `(k, m)` depends only
    /// on `m - k`, so it is computed once per offset.
    pub fn gram(&self) -> Vec<Complex64> {
        let k = self.grid_size();
        let step = 2.0 / k as f64;
        let by_offset: Vec<Complex64> = (0..2 * k - 1)
            .map(|d| {
                let delta = (d as f64 - (k as f64 - 1.0)) * step;
                (0..self.n)
                    .map(|i| Complex64::from_polar(1.0, PI * i as f64 * delta))
                    .sum()
            })
            .collect();
        let mut out = Vec::with_capacity(k * k);
        for row in 0..k {
            for col in 0..k {
                out.push(by_offset[col + k - 1 - row]);
            }
        }
        out
    }

    /// `‖A·Aᴴ − K·I‖_F`.
    pub fn gram_identity_error(&self) -> f64 {
        let k = self.grid_size() as f64;
        let mut acc = 0.0;
        for r in 0..self.n {
            for c in 0..self.n {
                let mut s = Complex64::new(0.0, 0.0);
                for col in 0..self.grid_size() {
                    let a = self.column(col);
                    s += a[r] * a[c].conj();
                }
                if r == c {
                    s -= k;
                }
                acc += s.norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// Quantized angle grid `Ω_k = -1 + (2k-1)/K`, `k = 1..=K`.
pub fn grid_angles(k: usize) -> Vec<f64> {
    (1..=k)
        .map(|i| -1.0 + (2.0 * i as f64 - 1.0) / k as f64)
        .collect()
}
