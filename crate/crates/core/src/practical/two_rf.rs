//! Matching one complex target with two unit-modulus phasors weighted by fixed
//! digital coefficients: `min |αe^{jβ} − ζ₁e^{j(ψ₁+θ₁)} − ζ₂e^{j(ψ₂+θ₂)}|`.
//!
//! Without quantization the problem is a triangle with sides `α, ζ₁, ζ₂` and
//! has two mirror-image solutions given by the law of cosines. The quantized
//! solver rounds both, and by default also tries the two set members
//! bracketing each continuous phase with the partner phase re-solved exactly
//! (for a fixed `θ₁`, the best `θ₂` is the member nearest `∠(target − ζ₁e^{j(ψ₁+θ₁)}) − ψ₂`).

use num_complex::Complex64;

use super::phase_set::{wrap_phase, PhaseSet};

/// One two-phasor matching problem in polar form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoRfInstance {
    pub alpha: f64,
    pub beta: f64,
    pub zeta1: f64,
    pub psi1: f64,
    pub zeta2: f64,
    pub psi2: f64,
}

impl TwoRfInstance {
    /// From the target entry and the two digital coefficients.
    pub fn new(target: Complex64, first: Complex64, second: Complex64) -> Self {
        Self {
            alpha: target.norm(),
            beta: wrap_phase(target.arg()),
            zeta1: first.norm(),
            psi1: wrap_phase(first.arg()),
            zeta2: second.norm(),
            psi2: wrap_phase(second.arg()),
        }
    }

    pub fn target(&self) -> Complex64 {
        Complex64::from_polar(self.alpha, self.beta)
    }

    pub fn first(&self) -> Complex64 {
        Complex64::from_polar(self.zeta1, self.psi1)
    }

    pub fn second(&self) -> Complex64 {
        Complex64::from_polar(self.zeta2, self.psi2)
    }

    /// Residual magnitude for analog phases `(θ₁, θ₂)`.
    pub fn residual(&self, theta1: f64, theta2: f64) -> f64 {
        (self.target()
            - Complex64::from_polar(self.zeta1, self.psi1 + theta1)
            - Complex64::from_polar(self.zeta2, self.psi2 + theta2))
        .norm()
    }

    /// The two continuous solutions. When `α` falls outside
    /// `[|ζ₁−ζ₂|, ζ₁+ζ₂]` the arccos arguments are clamped, which aligns (or
    /// anti-aligns) both phasors with the target: the closest reachable point.
    pub fn continuous_branches(&self) -> [(f64, f64); 2] {
        let Self { alpha, beta, zeta1, psi1, zeta2, psi2 } = *self;
        if alpha == 0.0 {
            // anti-aligned phasors minimize |ζ₁e^{jx} + ζ₂e^{jy}|
            let t1 = beta - psi1;
            let t2 = beta - psi2 + std::f64::consts::PI;
            return [(t1, t2), (t1, t2)];
        }
        let diff = (zeta1 + zeta2) * (zeta1 - zeta2);
        let c1 = clamp_cos((alpha * alpha + diff) / (2.0 * zeta1 * alpha));
        let c2 = clamp_cos((alpha * alpha - diff) / (2.0 * zeta2 * alpha));
        let (a1, a2) = (c1.acos(), c2.acos());
        [
            (beta - psi1 + a1, beta - psi2 - a2),
            (beta - psi1 - a1, beta - psi2 + a2),
        ]
    }
}

fn clamp_cos(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-1.0, 1.0)
    }
}

/// How continuous two-phasor solutions are mapped onto the phase set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TwoRfRounding {
    /// Round each continuous phase to its nearest member, keep the better branch.
    Independent,
    /// Additionally try both bracketing members of each continuous phase with
    /// the partner phase solved exactly.
    #[default]
    Bracketed,
}

/// Quantized solution: member indices into the phase set plus residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoRfSolution {
    pub first: usize,
    pub second: usize,
    pub residual: f64,
}

/// Continuous (unquantized) solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousTwoRf {
    pub theta1: f64,
    pub theta2: f64,
    pub residual: f64,
}

pub fn solve_two_rf(inst: &TwoRfInstance, set: &PhaseSet) -> TwoRfSolution {
    solve_two_rf_with(inst, set, TwoRfRounding::default())
}

pub fn solve_two_rf_with(inst: &TwoRfInstance, set: &PhaseSet, rounding: TwoRfRounding) -> TwoRfSolution {
    let target = inst.target();
    let f1 = inst.first();
    let f2 = inst.second();
    let eval = |i: usize, j: usize| (target - f1 * set.phasor(i) - f2 * set.phasor(j)).norm();

    // a vanishing coefficient decouples the problem into single-phasor matching
    if inst.zeta2 == 0.0 {
        let i = set.quantize_index(inst.beta - inst.psi1);
        return TwoRfSolution { first: i, second: 0, residual: eval(i, 0) };
    }
    if inst.zeta1 == 0.0 {
        let j = set.quantize_index(inst.beta - inst.psi2);
        return TwoRfSolution { first: 0, second: j, residual: eval(0, j) };
    }

    let mut best = TwoRfSolution { first: 0, second: 0, residual: f64::INFINITY };
    let mut consider = |i: usize, j: usize| {
        let r = eval(i, j);
        if r < best.residual {
            best = TwoRfSolution { first: i, second: j, residual: r };
        }
    };
    let branches = inst.continuous_branches();
    for &(t1, t2) in &branches {
        consider(set.quantize_index(t1), set.quantize_index(t2));
    }
    if rounding == TwoRfRounding::Bracketed {
        for &(t1, t2) in &branches {
            for i in set.bracket(t1) {
                let rest = target - f1 * set.phasor(i);
                consider(i, set.quantize_index(rest.arg() - inst.psi2));
            }
            for j in set.bracket(t2) {
                let rest = target - f2 * set.phasor(j);
                consider(set.quantize_index(rest.arg() - inst.psi1), j);
            }
        }
    }
    best
}

/// Two-phasor matching with arbitrary phases.
pub fn solve_two_rf_continuous(inst: &TwoRfInstance) -> ContinuousTwoRf {
    if inst.zeta2 == 0.0 || inst.zeta1 == 0.0 {
        let (t1, t2) = if inst.zeta2 == 0.0 {
            (inst.beta - inst.psi1, 0.0)
        } else {
            (0.0, inst.beta - inst.psi2)
        };
        return ContinuousTwoRf {
            theta1: wrap_phase(t1),
            theta2: wrap_phase(t2),
            residual: inst.residual(t1, t2),
        };
    }
    inst.continuous_branches()
        .into_iter()
        .map(|(t1, t2)| ContinuousTwoRf {
            theta1: wrap_phase(t1),
            theta2: wrap_phase(t2),
            residual: inst.residual(t1, t2),
        })
        .fold(None, |acc: Option<ContinuousTwoRf>, s| match acc {
            Some(a) if a.residual <= s.residual => Some(a),
            _ => Some(s),
        })
        .expect("two branches")
}
