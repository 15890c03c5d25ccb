//! Alternating minimization of `‖v − F_RF·f_BB‖₂` over the digital vector
//! (least squares) and the quantized analog matrix (row by row).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fast_search::{fs_row, row_error, FsState};
use super::phase_set::PhaseSet;
use super::two_rf::{solve_two_rf, TwoRfInstance};
use super::{design_nrf1, ls_fbb, HybridCodeword, LsFit};
use crate::array::Codeword;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_OUTER_ITERATIONS: usize = 50;

/// The loop stops once the digital vector moves less than this.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-10;

/// FS-AltMin settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FsAltMin {
    pub rf_chains: usize,
    pub bits: u32,
    pub max_iterations: usize,
    /// Seeds the random initial analog matrix.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AltMinReport {
    pub codeword: HybridCodeword,
    /// `‖v − F_RF·f_BB‖₂` after every least-squares step, starting with the
    /// fit to the initial analog matrix.
    pub residual_trace: Vec<f64>,
    pub outer_iterations: usize,
    /// Whether any least-squares step fell back to the pseudo-inverse.
    pub ill_conditioned: bool,
}

impl FsAltMin {
    pub fn new(rf_chains: usize, bits: u32, seed: u64) -> Self {
        Self { rf_chains, bits, max_iterations: DEFAULT_OUTER_ITERATIONS, seed }
    }

    /// Designs from a seeded uniform random analog matrix.
    pub fn design(&self, v: &Codeword) -> Result<AltMinReport> {
        let set = PhaseSet::new(self.bits)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let init: Vec<Vec<usize>> = (0..v.len())
            .map(|_| (0..self.rf_chains).map(|_| rng.random_range(0..set.len())).collect())
            .collect();
        self.design_from(v, init)
    }

    /// Designs from a given analog matrix of phase indices. A single RF chain
    /// takes the closed form and ignores `init`.
    pub fn design_from(&self, v: &Codeword, init: Vec<Vec<usize>>) -> Result<AltMinReport> {
        let set = PhaseSet::new(self.bits)?;
        if self.rf_chains == 0 || self.rf_chains > v.len() {
            return invalid(format!("{} RF chains must lie in 1..={}", self.rf_chains, v.len()));
        }
        if init.len() != v.len() {
            return Err(Error::DimensionMismatch { expected: v.len(), actual: init.len() });
        }
        if let Some(row) = init.iter().find(|r| r.len() != self.rf_chains) {
            return Err(Error::DimensionMismatch { expected: self.rf_chains, actual: row.len() });
        }

        let target = v.entries();
        if self.rf_chains == 1 {
            // closed form: quantized phases with a constant digital weight
            let codeword = design_nrf1(v, &set);
            let residual = l2_distance(target, &codeword.realize());
            return Ok(AltMinReport { codeword, residual_trace: vec![residual], outer_iterations: 0, ill_conditioned: false });
        }
        let mut analog = init;
        let mut fit = ls_fbb(&set, &analog, target)?;
        let mut ill_conditioned = fit.ill_conditioned;
        let mut trace = vec![fit.residual];
        let mut outer = 0;

        while outer < self.max_iterations {
            outer += 1;
            analog = analog
                .par_iter()
                .zip(target.par_iter())
                .map(|(row, &t)| design_row(t, &fit.digital, &set, row))
                .collect();
            let next: LsFit = ls_fbb(&set, &analog, target)?;
            ill_conditioned |= next.ill_conditioned;
            trace.push(next.residual);
            let moved = fit
                .digital
                .iter()
                .zip(&next.digital)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            fit = next;
            if moved < FIXED_POINT_TOLERANCE {
                break;
            }
        }

        let codeword = HybridCodeword::finalize(&set, analog, fit.digital)?;
        Ok(AltMinReport { codeword, residual_trace: trace, outer_iterations: outer, ill_conditioned })
    }
}

fn l2_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Best analog row for a fixed digital vector of two or more entries; never
/// worse than `current`.
fn design_row(target: Complex64, digital: &[Complex64], set: &PhaseSet, current: &[usize]) -> Vec<usize> {
    match digital.len() {
        2 => {
            let sol = solve_two_rf(&TwoRfInstance::new(target, digital[0], digital[1]), set);
            if sol.residual <= row_error(target, digital, current, set) {
                vec![sol.first, sol.second]
            } else {
                current.to_vec()
            }
        }
        _ => fs_row(target, digital, set, &FsState { phases: current.to_vec() }).phases,
    }
}
