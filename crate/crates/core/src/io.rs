//! JSON file formats.
//!
//! Complex numbers are `[re, im]` pairs. Floats are written in the shortest
//! form that parses back to the same `f64`, so every file round-trips
//! exactly.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::array::Codeword;
use crate::codebook::{sector, CodebookEntry, HardwareDesign, HierarchicalCodebook, IdealDesign};
use crate::error::{Error, Result};
use crate::practical::HybridCodeword;

fn pairs(x: &[Complex64]) -> Vec<[f64; 2]> {
    x.iter().map(|z| [z.re, z.im]).collect()
}

fn complexes(x: &[[f64; 2]]) -> Vec<Complex64> {
    x.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodewordFile {
    pub n: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&Codeword> for CodewordFile {
    fn from(v: &Codeword) -> Self {
        Self { n: v.len(), entries: pairs(v.entries()) }
    }
}

impl TryFrom<CodewordFile> for Codeword {
    type Error = Error;

    fn try_from(f: CodewordFile) -> Result<Self> {
        if f.entries.len() != f.n {
            return Err(Error::Format(format!("codeword declares n = {} but has {} entries", f.n, f.entries.len())));
        }
        Codeword::new(complexes(&f.entries))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridFile {
    pub n_rf: usize,
    pub b: u32,
    pub analog_phase_indices: Vec<Vec<usize>>,
    pub digital: Vec<[f64; 2]>,
}

impl From<&HybridCodeword> for HybridFile {
    fn from(h: &HybridCodeword) -> Self {
        Self {
            n_rf: h.rf_chains(),
            b: h.bits(),
            analog_phase_indices: h.analog_indices().to_vec(),
            digital: pairs(h.digital()),
        }
    }
}

impl TryFrom<HybridFile> for HybridCodeword {
    type Error = Error;

    fn try_from(f: HybridFile) -> Result<Self> {
        if f.digital.len() != f.n_rf {
            return Err(Error::Format(format!("hybrid codeword declares n_rf = {} but has {} digital entries", f.n_rf, f.digital.len())));
        }
        HybridCodeword::new(f.b, f.analog_phase_indices, complexes(&f.digital))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryFile {
    pub layer: usize,
    pub index: usize,
    pub coverage: [f64; 2],
    pub ideal: Vec<[f64; 2]>,
    pub practical: Option<HybridFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodebookFile {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub design: IdealDesign,
    pub hardware: Option<HardwareDesign>,
    pub entries: Vec<EntryFile>,
}

impl From<&HierarchicalCodebook> for CodebookFile {
    fn from(cb: &HierarchicalCodebook) -> Self {
        Self {
            n: cb.antennas(),
            m: cb.factor(),
            s: cb.depth(),
            design: *cb.design(),
            hardware: cb.hardware().copied(),
            entries: cb
                .entries()
                .map(|e| EntryFile {
                    layer: e.layer,
                    index: e.index,
                    coverage: [e.coverage.0, e.coverage.1],
                    ideal: pairs(e.ideal.entries()),
                    practical: e.practical.as_ref().map(HybridFile::from),
                })
                .collect(),
        }
    }
}

impl TryFrom<CodebookFile> for HierarchicalCodebook {
    type Error = Error;

    fn try_from(f: CodebookFile) -> Result<Self> {
        let mut layers: Vec<Vec<CodebookEntry>> = (0..f.s).map(|_| Vec::new()).collect();
        for e in f.entries {
            if e.layer == 0 || e.layer > f.s {
                return Err(Error::Format(format!("entry layer {} outside 1..={}", e.layer, f.s)));
            }
            let coverage = (e.coverage[0], e.coverage[1]);
            if coverage != sector(f.m, e.layer, e.index) {
                return Err(Error::Format(format!("entry (layer {}, index {}) has a wrong coverage", e.layer, e.index)));
            }
            let context = |source: Error| Error::Entry { layer: e.layer, index: e.index, source: Box::new(source) };
            let ideal = Codeword::new(complexes(&e.ideal)).map_err(context)?;
            let practical = e.practical.map(HybridCodeword::try_from).transpose().map_err(context)?;
            layers[e.layer - 1].push(CodebookEntry { layer: e.layer, index: e.index, coverage, ideal, practical });
        }
        HierarchicalCodebook::from_parts(f.n, f.m, f.design, f.hardware, layers)
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Attaches the offending path to an I/O error.
pub fn with_path(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, text).map_err(with_path(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(with_path(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, to_json(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn save_codeword(path: &Path, v: &Codeword) -> Result<()> {
    write_json(path, &CodewordFile::from(v))
}

pub fn load_codeword(path: &Path) -> Result<Codeword> {
    read_json::<CodewordFile>(path)?.try_into()
}

pub fn save_hybrid(path: &Path, h: &HybridCodeword) -> Result<()> {
    write_json(path, &HybridFile::from(h))
}

pub fn load_hybrid(path: &Path) -> Result<HybridCodeword> {
    read_json::<HybridFile>(path)?.try_into()
}

pub fn save_codebook(path: &Path, cb: &HierarchicalCodebook) -> Result<()> {
    write_json(path, &CodebookFile::from(cb))
}

pub fn load_codebook(path: &Path) -> Result<HierarchicalCodebook> {
    read_json::<CodebookFile>(path)?.try_into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::build_codebook;
    use crate::ideal::ps_icd;
    use crate::practical::FsAltMin;
    use crate::target::TargetPattern;

    #[test]
    fn codeword_round_trip_is_exact() {
        let v = ps_icd(&TargetPattern::rect(-1.0, 0.0).unwrap(), 16, 64, 500, 3).unwrap();
        let text = to_json(&CodewordFile::from(&v)).unwrap();
        let back: Codeword = serde_json::from_str::<CodewordFile>(&text).unwrap().try_into().unwrap();
        assert_eq!(back, v);
        assert!(text.starts_with("{\n  \"n\": 16,"));
    }

    #[test]
    fn hybrid_round_trip_is_exact() {
        let v = ps_icd(&TargetPattern::rect(-0.5, 0.0).unwrap(), 16, 64, 500, 3).unwrap();
        let h = FsAltMin::new(3, 5, 1).design(&v).unwrap().codeword;
        let text = to_json(&HybridFile::from(&h)).unwrap();
        let back: HybridCodeword = serde_json::from_str::<HybridFile>(&text).unwrap().try_into().unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn codebook_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.json");
        let cb = build_codebook(8, 2, IdealDesign::ps_icd(32, 200, 5), Some(HardwareDesign::new(2, 3))).unwrap();
        save_codebook(&path, &cb).unwrap();
        assert_eq!(load_codebook(&path).unwrap(), cb);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let bad_norm = r#"{"n": 2, "entries": [[1.0, 0.0], [1.0, 0.0]]}"#;
        assert!(Codeword::try_from(serde_json::from_str::<CodewordFile>(bad_norm).unwrap()).is_err());
        let bad_len = r#"{"n": 3, "entries": [[1.0, 0.0]]}"#;
        assert!(Codeword::try_from(serde_json::from_str::<CodewordFile>(bad_len).unwrap()).is_err());
        assert!(serde_json::from_str::<CodewordFile>(r#"{"n": 1, "entries": [[1.0, 0.0]], "x": 1}"#).is_err());
        let bad_index = r#"{"n_rf": 1, "b": 1, "analog_phase_indices": [[2]], "digital": [[1.0, 0.0]]}"#;
        assert!(HybridCodeword::try_from(serde_json::from_str::<HybridFile>(bad_index).unwrap()).is_err());
    }
}
