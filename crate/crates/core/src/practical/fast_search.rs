//! Row-wise analog phase search for three or more RF chains.
//!
//! Phases `θ₃…θ_{N_RF}` are visited cyclically. At each step every member of
//! the phase set is tried for the visited phase, the two remaining phases
//! `θ₁, θ₂` are solved with the two-RF solver, and the candidate with the
//! smallest row error wins. The search stops once a full cycle leaves every
//! visited phase unchanged, or after a safety cap of `64·(N_RF−2)` steps.

use num_complex::Complex64;

use super::phase_set::PhaseSet;
use super::two_rf::{solve_two_rf, TwoRfInstance};

/// Current analog phases of one antenna row, as indices into the phase set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsState {
    pub phases: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FsOutcome {
    pub phases: Vec<usize>,
    /// `|target − Σᵢ fᵢ e^{jθᵢ}|` for the returned phases.
    pub error: f64,
    /// Search steps performed (`N_iter`).
    pub iterations: usize,
    /// Candidate row errors evaluated; `2^b` per step.
    pub evaluations: usize,
    /// Row error after each step.
    pub trace: Vec<f64>,
}

/// Maximum search steps for `rf_chains` chains.
pub fn iteration_cap(rf_chains: usize) -> usize {
    64 * rf_chains.saturating_sub(2).max(1)
}

/// `|target − Σᵢ digital[i]·e^{jθᵢ}|`.
pub fn row_error(target: Complex64, digital: &[Complex64], phases: &[usize], set: &PhaseSet) -> f64 {
    let sum: Complex64 = digital.iter().zip(phases).map(|(f, &i)| f * set.phasor(i)).sum();
    (target - sum).norm()
}

/// Runs the cyclic search for one row starting from `init`.
///
/// The returned row is never worse than `init`: if the search ends above
/// the starting error, the starting row is kept.
pub fn fs_row(target: Complex64, digital: &[Complex64], set: &PhaseSet, init: &FsState) -> FsOutcome {
    let rf = digital.len();
    assert!(rf >= 3, "fast search needs at least three RF chains");
    assert_eq!(init.phases.len(), rf);

    let start_error = row_error(target, digital, &init.phases, set);
    let mut phases = init.phases.clone();
    let free = rf - 2;
    let cap = iteration_cap(rf);
    let mut unchanged = 0;
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut trace = Vec::new();
    let mut error = start_error;

    while iterations < cap {
        let p = iterations % free + 2;
        iterations += 1;
        let fixed: Complex64 = (2..rf)
            .filter(|&i| i != p)
            .map(|i| digital[i] * set.phasor(phases[i]))
            .sum();
        let base = target - fixed;

        let mut best: Option<(f64, usize, usize, usize)> = None;
        for cand in 0..set.len() {
            let rest = base - digital[p] * set.phasor(cand);
            let sol = solve_two_rf(&TwoRfInstance::new(rest, digital[0], digital[1]), set);
            evaluations += 1;
            let mut entry = (sol.residual, cand, sol.first, sol.second);
            if cand == phases[p] {
                // the solver is not exact under quantization; never lose the current pair
                let kept = (rest - digital[0] * set.phasor(phases[0]) - digital[1] * set.phasor(phases[1])).norm();
                if kept <= entry.0 {
                    entry = (kept, cand, phases[0], phases[1]);
                }
            }
            if best.is_none_or(|b| entry.0 < b.0) {
                best = Some(entry);
            }
        }
        let (e, cand, first, second) = best.expect("phase set is non-empty");
        if cand == phases[p] {
            unchanged += 1;
        } else {
            unchanged = 0;
        }
        phases[p] = cand;
        phases[0] = first;
        phases[1] = second;
        error = e;
        trace.push(e);
        if unchanged >= free {
            break;
        }
    }

    if error > start_error {
        return FsOutcome {
            phases: init.phases.clone(),
            error: start_error,
            iterations,
            evaluations,
            trace,
        };
    }
    FsOutcome { phases, error, iterations, evaluations, trace }
}
