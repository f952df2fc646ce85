//! Physical-layer network coding for two UEs and two APs with 4-QAM.
//!
//! The pieces, bottom-up:
//!
//! * [`constellation`]: the 4-QAM labeling, joint source words and NCVs.
//! * [`sfs`]: singular fade states of the superimposed constellation and the
//!   image classes that share a resolving mapping.
//! * [`distance`]: minimum NCV distance and the SFS resolution test.
//! * [`search`]: the offline exhaustive search producing the 5×5 table of
//!   combined mapping matrices.
//! * [`codec`]: online selection, AP-side encoding and hub-side recovery.
//! * [`catalog_io`]: the plain-text catalog file.
//! * [`reference`]: the published 25 combined matrices, used as fixtures.

pub mod catalog_io;
pub mod codec;
pub mod constellation;
pub mod distance;
pub mod reference;
pub mod search;
pub mod sfs;

use thiserror::Error;

use crate::gf2::Gf2Error;

pub use codec::{ap_detect_ncv, ap_detect_word, hub_decode, online_select, pnc_encode, Selection};
pub use constellation::{
    modulate_4qam, superimpose, Ncv, Qam4, SourceWord, SuperposedConstellation,
};
pub use distance::{min_ncv_distance, resolves_sfs};
pub use search::{offline_search, MappingCatalog, MappingEntry, OfflineSearch, SfsCandidates};
pub use sfs::{enumerate_sfs, nearest_sfs, SfsCatalog};

/// Number of joint source words for two 4-QAM users.
pub const NUM_WORDS: usize = 16;

/// Number of SFS classes retained for 4-QAM.
pub const NUM_SFS: usize = 5;

/// Default tolerance for declaring two superimposed points coincident.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PncError {
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("mapping matrix must be {expected_rows}x4, got {rows}x{cols}")]
    MappingShape {
        expected_rows: usize,
        rows: usize,
        cols: usize,
    },
    #[error("SFS index {index} out of range 1..={max}")]
    SfsIndex { index: usize, max: usize },
    #[error("mapping index {0} out of range 1..=25")]
    MappingIndex(usize),
    #[error("combined mapping matrix is singular")]
    SingularMapping,
    #[error("source word {0} out of range 0..16")]
    SourceWord(u8),
    #[error("invalid constellation: {0}")]
    Constellation(String),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("catalog parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("catalog I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Coincidence test used by the exact SFS analysis: relative to the larger
/// magnitude, absolute below unit magnitude.
pub fn coincident(a: num_complex::Complex64, b: num_complex::Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

/// Equality of two distances up to `tol` relative error; `+inf` equals `+inf`.
pub fn distance_eq(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
