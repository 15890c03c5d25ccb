//! Sparse multipath channels and hierarchical beam-training simulation.
//!
//! A channel with `L` paths is
//! `H = √(N_t·N_r/L)·Σ_l μ_l·a(N_r, Ω_l^r)·a(N_t, Ω_l^t)ᴴ`. A training
//! measurement sends `x = 1` through beamformer `v` and combiner `w`:
//! `y = √P·wᴴHv + wᴴη` with `η ~ CN(0, I)`, so the SNR is `P` itself.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::array::{steering_vector, Codeword};
use crate::codebook::{exact_log, training_test_count, HierarchicalCodebook};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    /// Angle of departure `Ω^t`.
    pub aod: f64,
    /// Angle of arrival `Ω^r`.
    pub aoa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    nt: usize,
    nr: usize,
    paths: Vec<Path>,
    h: DMatrix<Complex64>,
}

impl Channel {
    pub fn from_paths(nt: usize, nr: usize, paths: Vec<Path>) -> Result<Self> {
        if nt == 0 || nr == 0 || paths.is_empty() {
            return invalid("channel needs antennas on both sides and at least one path");
        }
        let scale = ((nt * nr) as f64 / paths.len() as f64).sqrt();
        let mut h = DMatrix::zeros(nr, nt);
        for p in &paths {
            let ar = steering_vector(nr, p.aoa)?;
            let at = steering_vector(nt, p.aod)?;
            for r in 0..nr {
                for t in 0..nt {
                    h[(r, t)] += p.gain * scale * ar[r] * at[t].conj();
                }
            }
        }
        Ok(Self { nt, nr, paths, h })
    }

    pub fn transmit_antennas(&self) -> usize {
        self.nt
    }

    pub fn receive_antennas(&self) -> usize {
        self.nr
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// `H`, `N_r × N_t`.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    /// `wᴴHv`.
    pub fn response(&self, w: &[Complex64], v: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, wr) in w.iter().enumerate() {
            let row: Complex64 = (0..self.nt).map(|t| self.h[(r, t)] * v[t]).sum();
            acc += wr.conj() * row;
        }
        acc
    }
}

/// Where path angles are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleModel {
    /// Uniform on `[-1, 1]`.
    #[default]
    Continuous,
    /// Uniform over the bottom-layer sector midpoints `-1 + (2i+1)/N`.
    OnGrid,
}

/// Path statistics for [`draw_channel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelModel {
    pub paths: usize,
    pub angles: AngleModel,
    /// Replaces the random gains with `μ_l = 1`.
    pub unit_gains: bool,
}

impl ChannelModel {
    pub fn new(paths: usize) -> Self {
        Self { paths, angles: AngleModel::Continuous, unit_gains: false }
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn draw_angle<R: Rng + ?Sized>(rng: &mut R, model: AngleModel, n: usize) -> f64 {
    match model {
        AngleModel::Continuous => rng.random_range(-1.0..=1.0),
        AngleModel::OnGrid => -1.0 + (2 * rng.random_range(0..n) + 1) as f64 / n as f64,
    }
}

/// Draws a channel: `μ_l ~ CN(0, 1)` and angles per `model`.
pub fn draw_channel<R: Rng + ?Sized>(nt: usize, nr: usize, model: &ChannelModel, rng: &mut R) -> Result<Channel> {
    if model.paths == 0 {
        return invalid("channel needs at least one path");
    }
    let paths = (0..model.paths)
        .map(|_| {
            let gain = complex_gaussian(rng);
            let aod = draw_angle(rng, model.angles, nt);
            let aoa = draw_angle(rng, model.angles, nr);
            Path { gain: if model.unit_gains { Complex64::new(1.0, 0.0) } else { gain }, aod, aoa }
        })
        .collect();
    Channel::from_paths(nt, nr, paths)
}

/// [`draw_channel`] from a dedicated seed.
pub fn draw_channel_seeded(nt: usize, nr: usize, model: &ChannelModel, seed: u64) -> Result<Channel> {
    draw_channel(nt, nr, model, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Transmit power for an SNR in dB with unit noise variance.
pub fn snr_to_power(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// One noisy power measurement `|y|²`. `snr_db = +∞` is noiseless and
/// `snr_db = −∞` is noise only.
pub fn measure<R: Rng + ?Sized>(v: &[Complex64], w: &[Complex64], ch: &Channel, snr_db: f64, rng: &mut R) -> f64 {
    if snr_db == f64::INFINITY {
        return ch.response(w, v).norm_sqr();
    }
    let signal = if snr_db == f64::NEG_INFINITY {
        Complex64::new(0.0, 0.0)
    } else {
        snr_to_power(snr_db).sqrt() * ch.response(w, v)
    };
    let noise: Complex64 = w.iter().map(|wr| wr.conj() * complex_gaussian(rng)).sum();
    (signal + noise).norm_sqr()
}

/// Everything a simulation campaign needs apart from the codebooks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainingConfig {
    pub snr_db: f64,
    pub trials: usize,
    pub seed: u64,
    pub use_practical: bool,
    pub channel: ChannelModel,
}

/// Bottom-layer indices selected by training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BeamPair {
    pub tx: usize,
    pub rx: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchOutcome {
    pub pair: BeamPair,
    pub measurements: usize,
}

/// Codewords of a codebook, extracted once per campaign.
#[derive(Debug, Clone)]
pub struct CodewordTable {
    factor: usize,
    layers: Vec<Vec<Vec<Complex64>>>,
}

impl CodewordTable {
    pub fn new(cb: &HierarchicalCodebook, practical: bool) -> Result<Self> {
        let layers = cb
            .layers()
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|e| e.codeword(practical).map(Codeword::into_entries))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factor: cb.factor(), layers })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn antennas(&self) -> usize {
        self.layers[0][0].len()
    }

    /// Codeword `index` of 1-based layer `layer`.
    pub fn get(&self, layer: usize, index: usize) -> &[Complex64] {
        &self.layers[layer - 1][index]
    }

    pub fn bottom(&self) -> &[Vec<Complex64>] {
        self.layers.last().expect("non-empty codebook")
    }
}

/// Checks that two codebooks can be trained against each other and returns
/// `(⌊log_M N_t⌋, ⌊log_M N_r⌋)`.
pub fn check_pairing(tx: &CodewordTable, rx: &CodewordTable) -> Result<(usize, usize)> {
    if tx.factor != rx.factor {
        return invalid(format!("hierarchical factors differ: {} vs {}", tx.factor, rx.factor));
    }
    let m = tx.factor;
    let (nt, nr) = (tx.antennas(), rx.antennas());
    let (Some(lt), Some(lr)) = (exact_log(nt, m), exact_log(nr, m)) else {
        return invalid(format!("antenna counts {nt} and {nr} must be powers of {m}"));
    };
    if nt < nr {
        return invalid(format!("transmit antennas ({nt}) must be at least the receive antennas ({nr})"));
    }
    if tx.depth() != lt || rx.depth() != lr {
        return Err(Error::DimensionMismatch { expected: lt, actual: tx.depth() });
    }
    Ok((lt, lr))
}

/// Descends both codebooks using measured powers only.
///
/// For the first `⌊log_M N_r⌋` layers all `M×M` child pairs of the current
/// transmit and receive sectors are measured (`M` transmit plus `M²−M`
/// additional receive tests per layer). The remaining transmit layers test
/// `M` children with the receiver fixed at its bottom-layer choice.
pub fn hierarchical_search<R: Rng + ?Sized>(
    tx: &CodewordTable,
    rx: &CodewordTable,
    ch: &Channel,
    snr_db: f64,
    rng: &mut R,
) -> Result<SearchOutcome> {
    let (lt, lr) = check_pairing(tx, rx)?;
    if ch.transmit_antennas() != tx.antennas() || ch.receive_antennas() != rx.antennas() {
        return Err(Error::DimensionMismatch { expected: tx.antennas(), actual: ch.transmit_antennas() });
    }
    let m = tx.factor;
    let (mut t, mut r) = (0usize, 0usize);
    let mut measurements = 0;
    for s in 1..=lr {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for ct in m * t..m * t + m {
            for cr in m * r..m * r + m {
                let p = measure(tx.get(s, ct), rx.get(s, cr), ch, snr_db, rng);
                measurements += 1;
                if p > best.0 {
                    best = (p, ct, cr);
                }
            }
        }
        t = best.1;
        r = best.2;
    }
    let w = rx.get(lr, r);
    for s in lr + 1..=lt {
        let mut best = (f64::NEG_INFINITY, 0);
        for ct in m * t..m * t + m {
            let p = measure(tx.get(s, ct), w, ch, snr_db, rng);
            measurements += 1;
            if p > best.0 {
                best = (p, ct);
            }
        }
        t = best.1;
    }
    Ok(SearchOutcome { pair: BeamPair { tx: t, rx: r }, measurements })
}

/// Noise-free best bottom-layer pair, `argmax |wᴴHv|`.
pub fn exhaustive_best(tx: &CodewordTable, rx: &CodewordTable, ch: &Channel) -> BeamPair {
    let hv: Vec<Vec<Complex64>> = tx
        .bottom()
        .iter()
        .map(|v| {
            (0..ch.receive_antennas())
                .map(|r| (0..ch.transmit_antennas()).map(|t| ch.h[(r, t)] * v[t]).sum())
                .collect()
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, BeamPair { tx: 0, rx: 0 });
    for (t, col) in hv.iter().enumerate() {
        for (r, w) in rx.bottom().iter().enumerate() {
            let g: Complex64 = w.iter().zip(col).map(|(a, b)| a.conj() * b).sum();
            if g.norm() > best.0 {
                best = (g.norm(), BeamPair { tx: t, rx: r });
            }
        }
    }
    best.1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub selected: BeamPair,
    pub best: BeamPair,
    pub success: bool,
    pub measurements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessRate {
    pub snr_db: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub ci95: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<TrialRecord>>,
}

/// Random stream for one trial: the master seed picks the key, the trial
/// index picks the stream.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs one trial: fresh channel, hierarchical search, exhaustive check.
pub fn run_trial(tx: &CodewordTable, rx: &CodewordTable, cfg: &TrainingConfig, trial: usize) -> Result<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, trial);
    let ch = draw_channel(tx.antennas(), rx.antennas(), &cfg.channel, &mut rng)?;
    let outcome = hierarchical_search(tx, rx, &ch, cfg.snr_db, &mut rng)?;
    let best = exhaustive_best(tx, rx, &ch);
    Ok(TrialRecord {
        trial,
        selected: outcome.pair,
        best,
        success: outcome.pair == best,
        measurements: outcome.measurements,
    })
}

/// Fraction of trials in which training selects the best bottom-layer pair.
pub fn success_rate(
    tx: &HierarchicalCodebook,
    rx: &HierarchicalCodebook,
    cfg: &TrainingConfig,
    keep_records: bool,
) -> Result<SuccessRate> {
    if cfg.trials == 0 {
        return invalid("at least one trial is required");
    }
    let txt = CodewordTable::new(tx, cfg.use_practical)?;
    let rxt = CodewordTable::new(rx, cfg.use_practical)?;
    check_pairing(&txt, &rxt)?;
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(&txt, &rxt, cfg, i))
        .collect::<Result<_>>()?;
    let expected = training_test_count(txt.antennas(), rxt.antennas(), txt.factor);
    if let Some(r) = records.iter().find(|r| r.measurements != expected) {
        return Err(Error::SynthesisFailure(format!(
            "trial {} issued {} measurements, expected {expected}",
            r.trial, r.measurements
        )));
    }
    let successes = records.iter().filter(|r| r.success).count();
    let rate = successes as f64 / cfg.trials as f64;
    Ok(SuccessRate {
        snr_db: cfg.snr_db,
        trials: cfg.trials,
        successes,
        rate,
        ci95: 1.96 * (rate * (1.0 - rate) / cfg.trials as f64).sqrt(),
        records: keep_records.then_some(records),
    })
}

/// CSV with header `snr_db,trials,successes,rate,ci95`.
pub fn success_csv(points: &[SuccessRate]) -> String {
    let mut out = String::from("snr_db,trials,successes,rate,ci95\n");
    for p in points {
        writeln!(out, "{},{},{},{:.6},{:.6}", p.snr_db, p.trials, p.successes, p.rate, p.ci95).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{build_codebook, IdealDesign};

    fn steering_codebook(n: usize) -> HierarchicalCodebook {
        build_codebook(n, 2, IdealDesign::ps_icd(4 * n, 400, 1), None).unwrap()
    }

    #[test]
    fn rank_one_response() {
        let p = Path { gain: Complex64::new(1.0, 0.0), aod: 0.3, aoa: -0.6 };
        let ch = Channel::from_paths(16, 8, vec![p]).unwrap();
        let v = steering_vector(16, 0.3).unwrap();
        let w = steering_vector(8, -0.6).unwrap();
        assert!((ch.response(&w, &v).norm() - (128f64).sqrt()).abs() < 1e-10);
        let sv = ch.matrix().clone().svd(false, false).singular_values;
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(s[1] < 1e-9);
    }

    #[test]
    fn matrix_matches_path_sum() {
        let ch = draw_channel_seeded(8, 4, &ChannelModel::new(3), 5).unwrap();
        let scale = (32.0f64 / 3.0).sqrt();
        for r in 0..4 {
            for t in 0..8 {
                let expect: Complex64 = ch
                    .paths()
                    .iter()
                    .map(|p| {
                        p.gain * scale * Complex64::from_polar(1.0, std::f64::consts::PI * (r as f64 * p.aoa - t as f64 * p.aod))
                            / (32f64).sqrt()
                    })
                    .sum();
                assert!((ch.matrix()[(r, t)] - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn frobenius_energy_average() {
        let model = ChannelModel::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws = 10_000;
        let mean: f64 = (0..draws)
            .map(|_| draw_channel(8, 8, &model, &mut rng).unwrap().matrix().norm_squared())
            .sum::<f64>()
            / draws as f64;
        assert!((mean / 64.0 - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn measurement_limits_and_reproducibility() {
        let ch = draw_channel_seeded(8, 8, &ChannelModel::new(1), 2).unwrap();
        let v = steering_vector(8, 0.1).unwrap();
        let w = steering_vector(8, -0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(measure(&v, &w, &ch, f64::INFINITY, &mut rng), ch.response(&w, &v).norm_sqr());

        // v orthogonal to the single transmit direction
        let p = Path { gain: Complex64::new(1.0, 0.0), aod: -0.75, aoa: 0.0 };
        let ch1 = Channel::from_paths(8, 8, vec![p]).unwrap();
        let v_orth = steering_vector(8, -0.5).unwrap();
        assert!(measure(&v_orth, &w, &ch1, f64::INFINITY, &mut rng) < 1e-20);

        let a = measure(&v, &w, &ch, 3.0, &mut ChaCha8Rng::seed_from_u64(9));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise: Complex64 = w.iter().map(|x| x.conj() * complex_gaussian(&mut rng)).sum();
        let manual = (snr_to_power(3.0).sqrt() * ch.response(&w, &v) + noise).norm_sqr();
        assert_eq!(a, manual);
    }

    #[test]
    fn noiseless_on_grid_search_finds_the_path() {
        let cb = steering_codebook(16);
        let t = CodewordTable::new(&cb, false).unwrap();
        let model = ChannelModel { paths: 1, angles: AngleModel::OnGrid, unit_gains: false };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let ch = draw_channel(16, 16, &model, &mut rng).unwrap();
            let out = hierarchical_search(&t, &t, &ch, f64::INFINITY, &mut rng).unwrap();
            let p = ch.paths()[0];
            let mid = |i: usize| -1.0 + (2 * i + 1) as f64 / 16.0;
            assert!((mid(out.pair.tx) - p.aod).abs() < 1e-12);
            assert!((mid(out.pair.rx) - p.aoa).abs() < 1e-12);
            assert_eq!(out.pair, exhaustive_best(&t, &t, &ch));
            assert_eq!(out.measurements, training_test_count(16, 16, 2));
        }
    }

    #[test]
    fn unequal_arrays_use_the_formula_budget() {
        let tx = CodewordTable::new(&steering_codebook(16), false).unwrap();
        let rx = CodewordTable::new(&steering_codebook(8), false).unwrap();
        let ch = draw_channel_seeded(16, 8, &ChannelModel::new(1), 4).unwrap();
        let out = hierarchical_search(&tx, &rx, &ch, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.measurements, 14);
        assert!(hierarchical_search(&rx, &tx, &ch, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn single_layer_tests_all_four_pairs() {
        let cb = steering_codebook(2);
        let t = CodewordTable::new(&cb, false).unwrap();
        let ch = draw_channel_seeded(2, 2, &ChannelModel::new(2), 8).unwrap();
        let out = hierarchical_search(&t, &t, &ch, f64::INFINITY, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.measurements, 4);
        assert_eq!(out.pair, exhaustive_best(&t, &t, &ch));
    }

    #[test]
    fn success_rate_limits() {
        let cb = steering_codebook(16);
        let mut cfg = TrainingConfig {
            snr_db: f64::INFINITY,
            trials: 200,
            seed: 11,
            use_practical: false,
            channel: ChannelModel::new(1),
        };
        let hi = success_rate(&cb, &cb, &cfg, false).unwrap();
        assert!(hi.rate >= 0.9, "{}", hi.rate);

        cfg.snr_db = f64::NEG_INFINITY;
        cfg.trials = 2000;
        let lo = success_rate(&cb, &cb, &cfg, false).unwrap();
        let chance: f64 = 1.0 / 256.0;
        let ci = 1.96 * (chance * (1.0 - chance) / 2000.0).sqrt();
        assert!((lo.rate - chance).abs() <= 3.0 * ci.max(lo.ci95), "{}", lo.rate);

        cfg.snr_db = 0.0;
        cfg.trials = 50;
        let a = success_rate(&cb, &cb, &cfg, true).unwrap();
        let b = success_rate(&cb, &cb, &cfg, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.as_ref().unwrap().len(), 50);
    }

    #[test]
    fn noiseless_search_ignores_power_scale() {
        let cb = steering_codebook(8);
        let t = CodewordTable::new(&cb, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let ch = draw_channel(8, 8, &ChannelModel::new(3), &mut rng).unwrap();
            let scaled = Channel::from_paths(
                8,
                8,
                ch.paths().iter().map(|p| Path { gain: p.gain * 7.5, ..*p }).collect(),
            )
            .unwrap();
            let a = hierarchical_search(&t, &t, &ch, f64::INFINITY, &mut rng).unwrap();
            let b = hierarchical_search(&t, &t, &scaled, f64::INFINITY, &mut rng).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn csv_format() {
        let p = SuccessRate { snr_db: -5.0, trials: 10, successes: 3, rate: 0.3, ci95: 0.284, records: None };
        assert_eq!(success_csv(&[p]), "snr_db,trials,successes,rate,ci95\n-5,10,3,0.300000,0.284000\n");
    }
}
