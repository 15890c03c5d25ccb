//! Practical codewords `v_p = F_RF·f_BB`: a quantized unit-modulus analog
//! matrix with `N_RF` columns followed by a small digital vector.

mod altmin;
mod fast_search;
mod phase_set;
mod two_rf;

pub use altmin::{AltMinReport, FsAltMin, DEFAULT_OUTER_ITERATIONS, FIXED_POINT_TOLERANCE};
pub use fast_search::{fs_row, iteration_cap, row_error, FsOutcome, FsState};
pub use phase_set::{circular_distance, wrap_phase, PhaseSet};
pub use two_rf::{
    solve_two_rf, solve_two_rf_continuous, solve_two_rf_with, ContinuousTwoRf, TwoRfInstance,
    TwoRfRounding, TwoRfSolution,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::{l2_norm, Codeword, NORM_TOLERANCE};
use crate::error::{invalid, Error, Result};

/// Gram condition numbers above this switch [`ls_fbb`] to a pseudo-inverse.
pub const ILL_CONDITIONED: f64 = 1e12;

/// A finalized hybrid codeword. Analog phases are stored as indices into the
/// `b`-bit phase set, so every analog entry is exactly a set member.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridCodeword {
    set: PhaseSet,
    /// `analog[n][i]` is the phase index of antenna `n` on RF chain `i`.
    analog: Vec<Vec<usize>>,
    digital: Vec<Complex64>,
}

impl HybridCodeword {
    /// Wraps an already normalized hybrid codeword (`‖F_RF·f_BB‖ = 1`).
    pub fn new(bits: u32, analog: Vec<Vec<usize>>, digital: Vec<Complex64>) -> Result<Self> {
        let set = PhaseSet::new(bits)?;
        validate_analog(&analog, digital.len(), &set)?;
        let hc = Self { set, analog, digital };
        let norm = l2_norm(&hc.realize());
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return invalid(format!("hybrid codeword norm is {norm}, expected 1"));
        }
        Ok(hc)
    }

    /// Rescales `digital` so that the realized codeword has unit norm.
    pub fn finalize(set: &PhaseSet, analog: Vec<Vec<usize>>, digital: Vec<Complex64>) -> Result<Self> {
        validate_analog(&analog, digital.len(), set)?;
        let norm = l2_norm(&realize(set, &analog, &digital));
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::SynthesisFailure(format!(
                "hybrid codeword has norm {norm} and cannot be normalized"
            )));
        }
        let digital = digital.into_iter().map(|f| f / norm).collect();
        Ok(Self { set: set.clone(), analog, digital })
    }

    pub fn antennas(&self) -> usize {
        self.analog.len()
    }

    pub fn rf_chains(&self) -> usize {
        self.digital.len()
    }

    pub fn bits(&self) -> u32 {
        self.set.bits()
    }

    pub fn phase_set(&self) -> &PhaseSet {
        &self.set
    }

    pub fn analog_indices(&self) -> &[Vec<usize>] {
        &self.analog
    }

    pub fn digital(&self) -> &[Complex64] {
        &self.digital
    }

    /// `F_RF` as a dense matrix.
    pub fn analog_matrix(&self) -> DMatrix<Complex64> {
        analog_matrix(&self.set, &self.analog)
    }

    /// `F_RF·f_BB`.
    pub fn realize(&self) -> Vec<Complex64> {
        realize(&self.set, &self.analog, &self.digital)
    }

    pub fn codeword(&self) -> Codeword {
        Codeword::normalized(self.realize()).expect("finalized hybrid codeword has unit norm")
    }
}

fn validate_analog(analog: &[Vec<usize>], rf_chains: usize, set: &PhaseSet) -> Result<()> {
    if analog.is_empty() || rf_chains == 0 {
        return invalid("hybrid codeword needs at least one antenna and one RF chain");
    }
    for row in analog {
        if row.len() != rf_chains {
            return Err(Error::DimensionMismatch { expected: rf_chains, actual: row.len() });
        }
        if let Some(&i) = row.iter().find(|&&i| i >= set.len()) {
            return invalid(format!("phase index {i} outside a {}-member phase set", set.len()));
        }
    }
    Ok(())
}

pub(crate) fn analog_matrix(set: &PhaseSet, analog: &[Vec<usize>]) -> DMatrix<Complex64> {
    let cols = analog.first().map_or(0, Vec::len);
    DMatrix::from_fn(analog.len(), cols, |r, c| set.phasor(analog[r][c]))
}

pub(crate) fn realize(set: &PhaseSet, analog: &[Vec<usize>], digital: &[Complex64]) -> Vec<Complex64> {
    analog
        .iter()
        .map(|row| row.iter().zip(digital).map(|(&i, f)| set.phasor(i) * f).sum())
        .collect()
}

/// Single-RF-chain design: each analog phase is the quantized phase of the
/// corresponding entry of `v`, and the digital scalar is `1/√N`.
pub fn design_nrf1(v: &Codeword, set: &PhaseSet) -> HybridCodeword {
    let analog: Vec<Vec<usize>> = v.entries().iter().map(|x| vec![set.quantize_index(x.arg())]).collect();
    let digital = vec![Complex64::new(1.0 / (v.len() as f64).sqrt(), 0.0)];
    HybridCodeword { set: set.clone(), analog, digital }
}

/// Least-squares digital vector for a fixed analog matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LsFit {
    pub digital: Vec<Complex64>,
    /// `‖v − F_RF·f_BB‖₂`.
    pub residual: f64,
    /// Set when the Gram matrix `F_RFᴴF_RF` was numerically singular and a
    /// pseudo-inverse was used; usually a sign of duplicated analog columns.
    pub ill_conditioned: bool,
}

/// `f_BB = (F_RFᴴF_RF)⁻¹F_RFᴴv`, via the SVD of `F_RF`.
pub fn ls_fbb(set: &PhaseSet, analog: &[Vec<usize>], v: &[Complex64]) -> Result<LsFit> {
    let rf = analog.first().map_or(0, Vec::len);
    validate_analog(analog, rf, set)?;
    if analog.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: analog.len(), actual: v.len() });
    }
    if rf > analog.len() {
        return invalid(format!("{rf} RF chains exceed {} antennas", analog.len()));
    }
    let f = analog_matrix(set, analog);
    let svd = f.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    // the Gram matrix squares the singular values
    let cond = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
    let ill_conditioned = cond.is_nan() || cond > ILL_CONDITIONED;
    let eps = if ill_conditioned { smax / ILL_CONDITIONED.sqrt() } else { 0.0 };
    let rhs = DVector::from_column_slice(v);
    let x = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::SynthesisFailure(format!("least-squares solve failed: {e}")))?;
    let residual = (&rhs - &f * &x).norm();
    Ok(LsFit { digital: x.iter().copied().collect(), residual, ill_conditioned })
}

/// `‖v − v_p‖₂`.
pub fn deviation(v: &Codeword, vp: &Codeword) -> Result<f64> {
    if v.len() != vp.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), actual: vp.len() });
    }
    Ok(v.entries()
        .iter()
        .zip(vp.entries())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering_vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn cgauss(rng: &mut ChaCha8Rng) -> Complex64 {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    }

    fn random_codeword(n: usize, rng: &mut ChaCha8Rng) -> Codeword {
        Codeword::normalized((0..n).map(|_| cgauss(rng)).collect()).unwrap()
    }

    #[test]
    fn nrf1_on_representable_input_is_exact() {
        let set = PhaseSet::new(3).unwrap();
        let n = 16;
        let v = Codeword::new(
            (0..n)
                .map(|i| set.phasor((i * 5) % 8) / (n as f64).sqrt())
                .collect(),
        )
        .unwrap();
        let hc = design_nrf1(&v, &set);
        assert!(deviation(&v, &hc.codeword()).unwrap() < 1e-12);
        assert!((l2_norm(&hc.realize()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nrf1_matches_per_entry_oracle() {
        let set = PhaseSet::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_codeword(24, &mut rng);
        let hc = design_nrf1(&v, &set);
        let scale = 1.0 / 24f64.sqrt();
        let oracle: Vec<Complex64> = v
            .entries()
            .iter()
            .map(|x| {
                let best = (0..4)
                    .min_by(|&a, &b| {
                        circular_distance(x.arg(), set.value(a))
                            .partial_cmp(&circular_distance(x.arg(), set.value(b)))
                            .unwrap()
                    })
                    .unwrap();
                set.phasor(best) * scale
            })
            .collect();
        let got = hc.realize();
        for (a, b) in got.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn nrf1_on_steering_vector_quantizes_its_phases() {
        let set = PhaseSet::new(6).unwrap();
        let v = Codeword::new(steering_vector(32, 0.3).unwrap()).unwrap();
        let hc = design_nrf1(&v, &set);
        for (row, x) in hc.analog_indices().iter().zip(v.entries()) {
            assert_eq!(row[0], set.quantize_index(x.arg()));
        }
    }

    #[test]
    fn ls_scalar_and_orthogonal_cases() {
        let set = PhaseSet::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_codeword(8, &mut rng);

        // a column of identical phases is e^{jδ}·1; fold the phasor out of the mean
        let idx = 2;
        let analog = vec![vec![idx]; 8];
        let fit = ls_fbb(&set, &analog, v.entries()).unwrap();
        let mean: Complex64 = v.entries().iter().sum::<Complex64>() / 8.0;
        assert!((fit.digital[0] - mean * set.phasor(idx).conj()).norm() < 1e-12);
        assert!(!fit.ill_conditioned);

        // ±1 Hadamard-like columns built from two antipodal phases
        let (p, m) = (0, 2); // -3π/4 and π/4 are antipodal
        let analog: Vec<Vec<usize>> = (0..8)
            .map(|r| vec![p, if r % 2 == 0 { p } else { m }, if (r / 2) % 2 == 0 { p } else { m }])
            .collect();
        let f = analog_matrix(&set, &analog);
        let gram = f.adjoint() * &f;
        assert!((gram - DMatrix::identity(3, 3) * Complex64::new(8.0, 0.0)).norm() < 1e-12);
        let fit = ls_fbb(&set, &analog, v.entries()).unwrap();
        let expect = f.adjoint() * DVector::from_column_slice(v.entries()) / Complex64::new(8.0, 0.0);
        for (a, b) in fit.digital.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn ls_beats_random_probes() {
        let set = PhaseSet::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_codeword(16, &mut rng);
        let analog: Vec<Vec<usize>> = (0..16).map(|_| (0..3).map(|_| rng.random_range(0..16)).collect()).collect();
        let fit = ls_fbb(&set, &analog, v.entries()).unwrap();
        let resid = |d: &[Complex64]| {
            realize(&set, &analog, d)
                .iter()
                .zip(v.entries())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        assert!((resid(&fit.digital) - fit.residual).abs() < 1e-12);
        for _ in 0..10_000 {
            let probe: Vec<Complex64> = fit.digital.iter().map(|x| x + cgauss(&mut rng) * 0.05).collect();
            assert!(resid(&probe) >= fit.residual - 1e-12);
        }
    }

    #[test]
    fn duplicated_columns_are_flagged() {
        let set = PhaseSet::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_codeword(8, &mut rng);
        let analog: Vec<Vec<usize>> = (0..8).map(|r| vec![r % 8, r % 8]).collect();
        let fit = ls_fbb(&set, &analog, v.entries()).unwrap();
        assert!(fit.ill_conditioned);
        assert!(fit.digital.iter().all(|x| x.re.is_finite() && x.im.is_finite()));
    }

    #[test]
    fn deviation_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = random_codeword(10, &mut rng);
        let w = random_codeword(10, &mut rng);
        assert_eq!(deviation(&v, &v).unwrap(), 0.0);
        let neg = Codeword::new(v.entries().iter().map(|x| -x).collect()).unwrap();
        assert!((deviation(&v, &neg).unwrap() - 2.0).abs() < 1e-12);
        let mut sum = 0.0;
        for i in 0..10 {
            let d = v.entries()[i] - w.entries()[i];
            sum += d.re * d.re + d.im * d.im;
        }
        assert!((deviation(&v, &w).unwrap() - sum.sqrt()).abs() < 1e-14);
        assert!(deviation(&v, &random_codeword(9, &mut rng)).is_err());
    }

    #[test]
    fn hybrid_validation() {
        let set = PhaseSet::new(2).unwrap();
        assert!(HybridCodeword::new(2, vec![vec![0, 4]], vec![Complex64::new(1.0, 0.0); 2]).is_err());
        assert!(HybridCodeword::new(2, vec![vec![0]], vec![Complex64::new(1.0, 0.0); 2]).is_err());
        let hc = HybridCodeword::finalize(&set, vec![vec![0, 1]; 4], vec![Complex64::new(1.0, 0.5); 2]).unwrap();
        assert!((l2_norm(&hc.realize()) - 1.0).abs() < 1e-12);
        let again = HybridCodeword::new(2, hc.analog_indices().to_vec(), hc.digital().to_vec()).unwrap();
        assert_eq!(again, hc);
        for row in hc.analog_indices() {
            for &i in row {
                assert_eq!(set.quantize_index(set.value(i)), i);
            }
        }
    }
}
