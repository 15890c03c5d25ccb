//! Beamforming codeword design for large uniform linear arrays.

pub mod array;
pub mod channel;
pub mod cli;
pub mod codebook;
pub mod error;
pub mod ideal;
pub mod io;
pub mod practical;
pub mod target;

pub use array::{beam_gain, main_lobe_mse, steering_vector, Codeword, SteeringMatrix};
pub use codebook::{build_codebook, training_test_count, HierarchicalCodebook};
pub use error::{Error, Result};
pub use ideal::{ls_icd, ps_icd, PsIcd};
pub use practical::{deviation, design_nrf1, FsAltMin, HybridCodeword, PhaseSet};
pub use target::{TargetPattern, TargetShape};
