//! Hierarchical codebooks.
//!
//! Layer `s` (1-based, `s = 1..=S`) splits `[-1, 1]` into `M^s` equal
//! sectors; entry `i` (0-based) of that layer covers
//! `[-1 + 2i/M^s, -1 + 2(i+1)/M^s]` and is the parent of entries
//! `M·i … M·i + M − 1` of layer `s + 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{steering_vector, Codeword};
use crate::error::{invalid, Error, Result};
use crate::ideal::{ls_icd, PsIcd};
use crate::practical::{design_nrf1, FsAltMin, HybridCodeword, PhaseSet, DEFAULT_OUTER_ITERATIONS};
use crate::target::TargetPattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum IdealMethod {
    PsIcd,
    LsIcd,
}

/// Ideal-codeword settings shared by every entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealDesign {
    pub method: IdealMethod,
    pub grid_size: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl IdealDesign {
    pub fn ps_icd(grid_size: usize, max_iterations: usize, seed: u64) -> Self {
        Self { method: IdealMethod::PsIcd, grid_size, max_iterations, seed }
    }

    pub fn ls_icd(grid_size: usize) -> Self {
        Self { method: IdealMethod::LsIcd, grid_size, max_iterations: 0, seed: 0 }
    }
}

/// Hardware budget for the practical variant of every entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardwareDesign {
    pub rf_chains: usize,
    pub bits: u32,
    pub max_iterations: usize,
}

impl HardwareDesign {
    pub fn new(rf_chains: usize, bits: u32) -> Self {
        Self { rf_chains, bits, max_iterations: DEFAULT_OUTER_ITERATIONS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookEntry {
    /// 1-based layer number.
    pub layer: usize,
    /// 0-based position within the layer.
    pub index: usize,
    pub coverage: (f64, f64),
    pub ideal: Codeword,
    pub practical: Option<HybridCodeword>,
}

impl CodebookEntry {
    /// The practical codeword when `practical` is set, otherwise the ideal one.
    pub fn codeword(&self, practical: bool) -> Result<Codeword> {
        if !practical {
            return Ok(self.ideal.clone());
        }
        self.practical
            .as_ref()
            .map(HybridCodeword::codeword)
            .ok_or_else(|| Error::InvalidArgument(format!(
                "entry (layer {}, index {}) has no practical codeword",
                self.layer, self.index
            )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalCodebook {
    antennas: usize,
    factor: usize,
    design: IdealDesign,
    hardware: Option<HardwareDesign>,
    layers: Vec<Vec<CodebookEntry>>,
}

impl HierarchicalCodebook {
    /// Assembles a codebook from entries listed layer by layer, checking the
    /// layer sizes and sector tiling.
    pub fn from_parts(
        antennas: usize,
        factor: usize,
        design: IdealDesign,
        hardware: Option<HardwareDesign>,
        layers: Vec<Vec<CodebookEntry>>,
    ) -> Result<Self> {
        if factor < 2 || antennas == 0 {
            return invalid(format!("bad codebook shape N={antennas}, M={factor}"));
        }
        let depth = layer_count(antennas, factor);
        if layers.len() != depth {
            return Err(Error::Format(format!("expected {depth} layers, found {}", layers.len())));
        }
        for (s, layer) in layers.iter().enumerate() {
            let width = factor.pow(s as u32 + 1);
            if layer.len() != width {
                return Err(Error::Format(format!("layer {} has {} entries, expected {width}", s + 1, layer.len())));
            }
            for (i, e) in layer.iter().enumerate() {
                if e.layer != s + 1 || e.index != i || e.coverage != sector(factor, s + 1, i) {
                    return Err(Error::Format(format!("entry {i} of layer {} is out of place", s + 1)));
                }
                if e.ideal.len() != antennas {
                    return Err(Error::DimensionMismatch { expected: antennas, actual: e.ideal.len() });
                }
                if let Some(p) = &e.practical {
                    if p.antennas() != antennas {
                        return Err(Error::DimensionMismatch { expected: antennas, actual: p.antennas() });
                    }
                }
                if e.practical.is_some() != hardware.is_some() {
                    return Err(Error::Format("practical codewords must be present exactly when hardware is set".into()));
                }
            }
        }
        Ok(Self { antennas, factor, design, hardware, layers })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Hierarchical factor `M`.
    pub fn factor(&self) -> usize {
        self.factor
    }

    /// Layer count `S`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn design(&self) -> &IdealDesign {
        &self.design
    }

    pub fn hardware(&self) -> Option<&HardwareDesign> {
        self.hardware.as_ref()
    }

    pub fn layers(&self) -> &[Vec<CodebookEntry>] {
        &self.layers
    }

    /// Entries of 1-based layer `s`.
    pub fn layer(&self, s: usize) -> &[CodebookEntry] {
        &self.layers[s - 1]
    }

    pub fn bottom(&self) -> &[CodebookEntry] {
        self.layers.last().expect("codebook has at least one layer")
    }

    pub fn entries(&self) -> impl Iterator<Item = &CodebookEntry> {
        self.layers.iter().flatten()
    }
}

/// `S = ⌈log_M N⌉`, at least 1.
pub fn layer_count(antennas: usize, factor: usize) -> usize {
    let mut s = 1;
    let mut width = factor;
    while width < antennas {
        width *= factor;
        s += 1;
    }
    s
}

/// `⌊log_M n⌋`.
pub fn floor_log(n: usize, factor: usize) -> usize {
    let mut s = 0;
    let mut p = factor;
    while p <= n {
        s += 1;
        match p.checked_mul(factor) {
            Some(next) => p = next,
            None => break,
        }
    }
    s
}

/// `Some(k)` when `n = M^k`.
pub fn exact_log(n: usize, factor: usize) -> Option<usize> {
    let k = floor_log(n, factor);
    (factor.pow(k as u32) == n).then_some(k)
}

/// Sector of entry `index` in 1-based layer `layer`.
pub fn sector(factor: usize, layer: usize, index: usize) -> (f64, f64) {
    let count = factor.pow(layer as u32) as f64;
    (
        -1.0 + 2.0 * index as f64 / count,
        -1.0 + 2.0 * (index + 1) as f64 / count,
    )
}

/// Number of measurements for hierarchical training between `nt` transmit
/// and `nr` receive antennas: `M⌊log_M N_t⌋ + (M²−M)⌊log_M N_r⌋`.
pub fn training_test_count(nt: usize, nr: usize, factor: usize) -> usize {
    factor * floor_log(nt, factor) + (factor * factor - factor) * floor_log(nr, factor)
}

/// Independent seed for one entry, derived from the master seed.
pub fn entry_seed(master: u64, layer: usize, index: usize, stream: u64) -> u64 {
    let mut x = master;
    for word in [layer as u64, index as u64, stream] {
        x = splitmix64(x ^ splitmix64(word));
    }
    x
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Builds every layer of a hierarchical codebook.
///
/// Sectors of width `2/N` use the steering vector at the sector midpoint
/// (quantized with a single RF chain when `hardware` is set); all wider
/// sectors are designed for a rect target with `design`, then factored with
/// FS-AltMin when `hardware` is set.
pub fn build_codebook(
    antennas: usize,
    factor: usize,
    design: IdealDesign,
    hardware: Option<HardwareDesign>,
) -> Result<HierarchicalCodebook> {
    if factor < 2 {
        return invalid(format!("hierarchical factor {factor} must be at least 2"));
    }
    if antennas == 0 {
        return invalid("codebook needs at least one antenna");
    }
    if design.grid_size < antennas {
        return invalid(format!("grid size {} below antenna count {antennas}", design.grid_size));
    }
    if let Some(hw) = hardware {
        PhaseSet::new(hw.bits)?;
        if hw.rf_chains == 0 || hw.rf_chains > antennas {
            return invalid(format!("{} RF chains must lie in 1..={antennas}", hw.rf_chains));
        }
    }
    let depth = layer_count(antennas, factor);
    let slots: Vec<(usize, usize)> = (1..=depth)
        .flat_map(|s| (0..factor.pow(s as u32)).map(move |i| (s, i)))
        .collect();
    let entries: Vec<CodebookEntry> = slots
        .par_iter()
        .map(|&(s, i)| {
            build_entry(antennas, factor, &design, hardware.as_ref(), s, i)
                .map_err(|e| Error::Entry { layer: s, index: i, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;

    let mut layers: Vec<Vec<CodebookEntry>> = (0..depth).map(|_| Vec::new()).collect();
    for e in entries {
        layers[e.layer - 1].push(e);
    }
    Ok(HierarchicalCodebook { antennas, factor, design, hardware, layers })
}

fn build_entry(
    antennas: usize,
    factor: usize,
    design: &IdealDesign,
    hardware: Option<&HardwareDesign>,
    layer: usize,
    index: usize,
) -> Result<CodebookEntry> {
    let coverage = sector(factor, layer, index);
    let steering = factor.pow(layer as u32) == antennas;
    let ideal = if steering {
        Codeword::new(steering_vector(antennas, 0.5 * (coverage.0 + coverage.1))?)?
    } else {
        let target = TargetPattern::rect(coverage.0, coverage.1)?;
        match design.method {
            IdealMethod::PsIcd => PsIcd {
                grid_size: design.grid_size,
                max_iterations: design.max_iterations,
                seed: entry_seed(design.seed, layer, index, 0),
            }
            .design(&target, antennas)?,
            IdealMethod::LsIcd => ls_icd(&target, antennas, design.grid_size)?,
        }
    };
    let practical = match hardware {
        None => None,
        Some(hw) if steering => Some(design_nrf1(&ideal, &PhaseSet::new(hw.bits)?)),
        Some(hw) => {
            let alg = FsAltMin {
                rf_chains: hw.rf_chains,
                bits: hw.bits,
                max_iterations: hw.max_iterations,
                seed: entry_seed(design.seed, layer, index, 1),
            };
            Some(alg.design(&ideal)?.codeword)
        }
    };
    Ok(CodebookEntry { layer, index, coverage, ideal, practical })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_shapes() {
        let cb = build_codebook(8, 2, IdealDesign::ps_icd(32, 200, 1), None).unwrap();
        assert_eq!(cb.depth(), 3);
        let sizes: Vec<usize> = cb.layers().iter().map(Vec::len).collect();
        assert_eq!(sizes, [2, 4, 8]);
        for e in cb.layer(2) {
            assert!((e.coverage.1 - e.coverage.0 - 0.5).abs() < 1e-15);
        }
        let cb = build_codebook(16, 4, IdealDesign::ls_icd(64), None).unwrap();
        assert_eq!(cb.depth(), 2);
        let sizes: Vec<usize> = cb.layers().iter().map(Vec::len).collect();
        assert_eq!(sizes, [4, 16]);
        assert_eq!(layer_count(10, 2), 4);
        assert_eq!(layer_count(1, 2), 1);
    }

    #[test]
    fn sectors_tile_and_telescope() {
        let cb = build_codebook(27, 3, IdealDesign::ls_icd(64), None).unwrap();
        for layer in cb.layers() {
            let total: f64 = layer.iter().map(|e| e.coverage.1 - e.coverage.0).sum();
            assert!((total - 2.0).abs() < 1e-12);
            assert_eq!(layer[0].coverage.0, -1.0);
            assert_eq!(layer[layer.len() - 1].coverage.1, 1.0);
            for w in layer.windows(2) {
                assert_eq!(w[0].coverage.1, w[1].coverage.0);
            }
        }
        for s in 1..cb.depth() {
            for (i, parent) in cb.layer(s).iter().enumerate() {
                let first = &cb.layer(s + 1)[3 * i];
                let last = &cb.layer(s + 1)[3 * i + 2];
                assert!((first.coverage.0 - parent.coverage.0).abs() < 1e-15);
                assert!((last.coverage.1 - parent.coverage.1).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bottom_layer_discriminates_its_own_sector() {
        let cb = build_codebook(16, 2, IdealDesign::ps_icd(64, 300, 3), Some(HardwareDesign::new(2, 4))).unwrap();
        let bottom = cb.bottom();
        for practical in [false, true] {
            for e in bottom {
                let v = e.codeword(practical).unwrap();
                let own = v.gain(0.5 * (e.coverage.0 + e.coverage.1)).norm();
                for other in bottom.iter().filter(|o| o.index != e.index) {
                    assert!(own > v.gain(0.5 * (other.coverage.0 + other.coverage.1)).norm());
                }
            }
        }
    }

    #[test]
    fn deterministic_and_entry_reproducible() {
        let design = IdealDesign::ps_icd(64, 500, 42);
        let hw = Some(HardwareDesign { rf_chains: 3, bits: 4, max_iterations: 5 });
        let a = build_codebook(16, 2, design, hw).unwrap();
        let b = build_codebook(16, 2, design, hw).unwrap();
        assert_eq!(a, b);
        let e = &a.layer(2)[1];
        let alone = build_entry(16, 2, &design, hw.as_ref(), 2, 1).unwrap();
        assert_eq!(&alone, e);
        assert_ne!(entry_seed(42, 2, 1, 0), entry_seed(42, 1, 2, 0));
    }

    #[test]
    fn test_counts() {
        assert_eq!(training_test_count(16, 8, 2), 14);
        assert!((1.0 - 14.0 / 128.0 - 0.89f64).abs() < 0.005);
        assert_eq!(training_test_count(2, 2, 2), 4);
        assert_eq!(training_test_count(64, 64, 2), 24);
        assert_eq!(floor_log(63, 2), 5);
        assert_eq!(exact_log(64, 4), Some(3));
        assert_eq!(exact_log(48, 4), None);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_codebook(8, 1, IdealDesign::ls_icd(32), None).is_err());
        assert!(build_codebook(32, 2, IdealDesign::ls_icd(16), None).is_err());
        assert!(build_codebook(8, 2, IdealDesign::ls_icd(32), Some(HardwareDesign::new(9, 4))).is_err());
    }
}
