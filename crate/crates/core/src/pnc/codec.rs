use num_complex::Complex64;

use super::constellation::{Ncv, Qam4, SourceWord};
use super::distance::check_ap_mapping;
use super::search::MappingCatalog;
use super::PncError;
use crate::gf2::{Gf2Error, Gf2Matrix};

/// Mapping chosen by the hub for one SFS pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub m1: Gf2Matrix,
    pub m2: Gf2Matrix,
    pub combined: Gf2Matrix,
    pub mapping_index: usize,
}

/// Looks up the combined mapping for SFS `i` at AP1 and `j` at AP2.
pub fn online_select(i: usize, j: usize, cat: &MappingCatalog) -> Result<Selection, PncError> {
    let e = cat.entry(i, j)?;
    Ok(Selection {
        m1: e.top(),
        m2: e.bottom(),
        combined: e.combined,
        mapping_index: e.mapping_index(),
    })
}

/// `x = M·w` over GF(2).
pub fn pnc_encode(m: &Gf2Matrix, w: SourceWord) -> Result<Ncv, PncError> {
    check_ap_mapping(m)?;
    Ncv::from_vector(m.mul_vec(w.to_vector())?)
}

/// Maximum-likelihood joint word for one received sample; ties go to the
/// lowest word.
pub fn ap_detect_word(y: Complex64, h: [Complex64; 2], c: &Qam4) -> SourceWord {
    let mut best = SourceWord::from_labels(0, 0);
    let mut best_d = f64::INFINITY;
    for w in SourceWord::all() {
        let d = (y - (h[0] * c.point(w.ue1()) + h[1] * c.point(w.ue2()))).norm_sqr();
        if d < best_d {
            best_d = d;
            best = w;
        }
    }
    best
}

pub fn ap_detect_ncv(
    y: Complex64,
    h: [Complex64; 2],
    m: &Gf2Matrix,
    c: &Qam4,
) -> Result<Ncv, PncError> {
    pnc_encode(m, ap_detect_word(y, h, c))
}

/// Recovers the joint word from both NCVs: `w = [M1; M2]⁻¹ · [x1; x2]`.
pub fn hub_decode(combined: &Gf2Matrix, x1: Ncv, x2: Ncv) -> Result<SourceWord, PncError> {
    if combined.rows() != 4 || combined.cols() != 4 {
        return Err(PncError::MappingShape {
            expected_rows: 4,
            rows: combined.rows(),
            cols: combined.cols(),
        });
    }
    let inv = combined.inverse().map_err(|e| match e {
        Gf2Error::Singular => PncError::SingularMapping,
        other => PncError::Gf2(other),
    })?;
    let x = x1.to_vector().concat(x2.to_vector())?;
    SourceWord::from_vector(inv.mul_vec(x)?)
}
