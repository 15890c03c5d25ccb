//! Ideal (hardware-free) codeword synthesis.
//!
//! The target magnitude `g(Ω)` is sampled on the steering grid `Ω_k`, each
//! sample is given a free phase, and the codeword is the least-squares fit
//! `v̂ = A·g/K` (exact because `A·Aᴴ = K·I`). Minimizing the fit residual over
//! the free phases is the same as maximizing `gᴴAᴴAg`; [`ps_icd`] does this one
//! phase at a time, each step with a closed-form optimum. [`ls_icd`] is the
//! baseline that keeps every phase at zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::{Codeword, SteeringMatrix};
use crate::error::{invalid, Error, Result};
use crate::target::TargetPattern;

/// Below this, the per-phase update is degenerate and the previous phase is kept.
pub const DEGENERATE_UPDATE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// State for the cyclic phase updates: the gain vector `g` and the running
/// product `AᴴA·g`, so that a single update costs `O(K)`.
#[derive(Debug, Clone)]
pub struct PhaseUpdateWorkspace {
    k: usize,
    gram: Vec<Complex64>,
    magnitudes: Vec<f64>,
    phases: Vec<f64>,
    gains: Vec<Complex64>,
    correlation: Vec<Complex64>,
}

impl PhaseUpdateWorkspace {
    pub fn new(steering: &SteeringMatrix, magnitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        let k = steering.grid_size();
        if magnitudes.len() != k || phases.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: magnitudes.len().min(phases.len()),
            });
        }
        if magnitudes.iter().any(|m| m.is_nan() || *m < 0.0) {
            return invalid("target magnitudes must be non-negative");
        }
        let gram = steering.gram();
        let gains: Vec<Complex64> = magnitudes
            .iter()
            .zip(&phases)
            .map(|(&m, &p)| Complex64::from_polar(m, p))
            .collect();
        let mut ws = Self {
            k,
            gram,
            magnitudes,
            phases,
            gains,
            correlation: Vec::new(),
        };
        ws.correlation = ws.product(&ws.gains);
        Ok(ws)
    }

    pub fn grid_size(&self) -> usize {
        self.k
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// `AᴴA` entry `(row, col)`.
    pub fn gram(&self, row: usize, col: usize) -> Complex64 {
        self.gram[row * self.k + col]
    }

    fn product(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.k)
            .map(|r| {
                self.gram[r * self.k..(r + 1) * self.k]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `gᴴAᴴAg` using the maintained product.
    pub fn objective(&self) -> f64 {
        self.gains
            .iter()
            .zip(&self.correlation)
            .map(|(g, c)| (g.conj() * c).re)
            .sum()
    }

    /// `gᴴAᴴAg` recomputed from scratch.
    pub fn objective_exact(&self) -> f64 {
        let c = self.product(&self.gains);
        self.gains.iter().zip(&c).map(|(g, c)| (g.conj() * c).re).sum()
    }

    /// Re-optimizes phase `k` with every other phase held fixed and returns it.
    ///
    /// Writing `c = Σ_{m≠k} [AᴴA]_{k,m} g_m`, the objective is
    /// `const + 2·Re(conj(g_k)·c)`, maximized on the circle `|g_k| = g(Ω_k)`
    /// by aligning `g_k` with `c`. A zero-magnitude entry or a vanishing `c`
    /// leaves the phase untouched.
    pub fn update_phase(&mut self, k: usize) -> f64 {
        let mag = self.magnitudes[k];
        if mag == 0.0 {
            return self.phases[k];
        }
        let others = self.correlation[k] - self.gram(k, k) * self.gains[k];
        // the real lifting's coefficient pair is (2 Re c, 2 Im c)
        if 2.0 * others.norm() < DEGENERATE_UPDATE {
            return self.phases[k];
        }
        let phase = others.arg();
        let updated = Complex64::from_polar(mag, phase);
        let delta = updated - self.gains[k];
        if delta != ZERO {
            let k_ = self.k;
            for (r, c) in self.correlation.iter_mut().enumerate() {
                *c += self.gram[r * k_ + k] * delta;
            }
        }
        self.gains[k] = updated;
        self.phases[k] = phase;
        phase
    }

    /// The real `2K×2K` lifting `R = [[Re Q, −Im Q], [Im Q, Re Q]]` of `Q = AᴴA`,
    /// row-major.
    pub fn lifted_gram(&self) -> Vec<f64> {
        let k = self.k;
        let n = 2 * k;
        let mut r = vec![0.0; n * n];
        for i in 0..k {
            for j in 0..k {
                let q = self.gram(i, j);
                r[i * n + j] = q.re;
                r[i * n + j + k] = -q.im;
                r[(i + k) * n + j] = q.im;
                r[(i + k) * n + j + k] = q.re;
            }
        }
        r
    }

    /// Coefficients of the single-phase subproblem computed literally on the
    /// real lifting: `(p + d_k, q + d_{k+K})`, where `p`, `q` and `d` sum over
    /// every lifted index except `k` and `k+K`. This is the `O(K²)` reference
    /// route for [`Self::update_phase`].
    pub fn lifted_coefficients(&self, k: usize) -> (f64, f64) {
        let kk = self.k;
        let n = 2 * kk;
        let r = self.lifted_gram();
        let t: Vec<f64> = self
            .gains
            .iter()
            .map(|g| g.re)
            .chain(self.gains.iter().map(|g| g.im))
            .collect();
        let psi = (0..n).filter(|&m| m != k && m != k + kk);
        let (mut p, mut q, mut dk, mut dkk) = (0.0, 0.0, 0.0, 0.0);
        for m in psi {
            p += t[m] * r[k * n + m];
            q += t[m] * r[(k + kk) * n + m];
            dk += t[m] * r[m * n + k];
            dkk += t[m] * r[m * n + k + kk];
        }
        (p + dk, q + dkk)
    }

    /// `v̂ = A·g/K` for the current gains.
    pub fn synthesize(&self, steering: &SteeringMatrix) -> Vec<Complex64> {
        let k = self.k as f64;
        steering.apply(&self.gains).into_iter().map(|x| x / k).collect()
    }
}

/// PS-ICD settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsIcd {
    /// Steering grid size `K ≥ N`.
    pub grid_size: usize,
    /// Number of single-phase updates.
    pub max_iterations: usize,
    pub seed: u64,
}

impl PsIcd {
    pub fn design(&self, target: &TargetPattern, n: usize) -> Result<Codeword> {
        self.design_observed(target, n, |_, _| {})
    }

    /// Runs the design, calling `observe(iteration, workspace)` after every update.
    pub fn design_observed(
        &self,
        target: &TargetPattern,
        n: usize,
        mut observe: impl FnMut(usize, &PhaseUpdateWorkspace),
    ) -> Result<Codeword> {
        let steering = SteeringMatrix::new(n, self.grid_size)?;
        let magnitudes: Vec<f64> = steering.grid().iter().map(|&o| target.eval(o)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let phases: Vec<f64> = (0..self.grid_size).map(|_| rng.random_range(-PI..PI)).collect();
        let mut ws = PhaseUpdateWorkspace::new(&steering, magnitudes, phases)?;
        for i in 0..self.max_iterations {
            ws.update_phase(i % self.grid_size);
            observe(i + 1, &ws);
        }
        Codeword::normalized(ws.synthesize(&steering))
    }
}

/// Phase-shifted ideal codeword design.
pub fn ps_icd(
    target: &TargetPattern,
    n: usize,
    grid_size: usize,
    max_iterations: usize,
    seed: u64,
) -> Result<Codeword> {
    PsIcd { grid_size, max_iterations, seed }.design(target, n)
}

/// Least-squares ideal codeword with every grid phase fixed at zero.
pub fn ls_icd(target: &TargetPattern, n: usize, grid_size: usize) -> Result<Codeword> {
    let steering = SteeringMatrix::new(n, grid_size)?;
    let g: Vec<Complex64> = steering
        .grid()
        .iter()
        .map(|&o| Complex64::new(target.eval(o), 0.0))
        .collect();
    let k = grid_size as f64;
    Codeword::normalized(steering.apply(&g).into_iter().map(|x| x / k).collect())
}
