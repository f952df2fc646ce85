use num_complex::Complex64;

use super::constellation::{superimpose, Qam4, SourceWord, SuperposedConstellation};
use super::{coincident, PncError, NUM_WORDS};
use crate::gf2::Gf2Matrix;

pub(crate) fn check_ap_mapping(m: &Gf2Matrix) -> Result<(), PncError> {
    if m.rows() != 2 || m.cols() != 4 {
        return Err(PncError::MappingShape {
            expected_rows: 2,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(())
}

/// NCV value of every source word under a 2×4 mapping.
pub(crate) fn ncv_labels(m: &Gf2Matrix) -> [u8; NUM_WORDS] {
    let mut out = [0u8; NUM_WORDS];
    for w in SourceWord::all() {
        out[w.index()] = m
            .mul_vec(w.to_vector())
            .expect("2x4 mapping times a 4-bit word")
            .to_counter();
    }
    out
}

pub(crate) fn min_distance_labeled(
    points: &[Complex64; NUM_WORDS],
    labels: &[u8; NUM_WORDS],
) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..NUM_WORDS {
        for j in i + 1..NUM_WORDS {
            if labels[i] != labels[j] {
                best = best.min((points[i] - points[j]).norm_sqr());
            }
        }
    }
    best
}

/// Minimum squared distance between superimposed points that carry
/// different NCVs under `m`. Returns `f64::INFINITY` when `m` sends every
/// word to the same NCV.
pub fn min_ncv_distance(sc: &SuperposedConstellation, m: &Gf2Matrix) -> Result<f64, PncError> {
    check_ap_mapping(m)?;
    Ok(min_distance_labeled(&sc.points, &ncv_labels(m)))
}

pub(crate) fn resolves_labeled(
    points: &[Complex64; NUM_WORDS],
    labels: &[u8; NUM_WORDS],
    tol: f64,
) -> bool {
    for i in 0..NUM_WORDS {
        for j in i + 1..NUM_WORDS {
            if labels[i] != labels[j] && coincident(points[i], points[j], tol) {
                return false;
            }
        }
    }
    true
}

/// True when every pair of words whose points coincide under `h = (1, v)`
/// is given the same NCV by `m`.
pub fn resolves_sfs(v: Complex64, m: &Gf2Matrix, c: &Qam4, tol: f64) -> Result<bool, PncError> {
    check_ap_mapping(m)?;
    let sc = superimpose([Complex64::new(1.0, 0.0), v], c);
    Ok(resolves_labeled(&sc.points, &ncv_labels(m), tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(r: &[&str]) -> Gf2Matrix {
        Gf2Matrix::from_rows(r).unwrap()
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    /// Independent oracle: walk all 120 unordered word pairs directly from
    /// the symbol definitions.
    fn brute_dmin(h: [Complex64; 2], m: &Gf2Matrix) -> f64 {
        let q = Qam4::gray();
        let mut best = f64::INFINITY;
        for a in 0..16u8 {
            for b in a + 1..16u8 {
                let wa = SourceWord::new(a).unwrap();
                let wb = SourceWord::new(b).unwrap();
                let xa = m.mul_vec(wa.to_vector()).unwrap();
                let xb = m.mul_vec(wb.to_vector()).unwrap();
                if xa != xb {
                    let pa = h[0] * q.point(wa.ue1()) + h[1] * q.point(wa.ue2());
                    let pb = h[0] * q.point(wb.ue1()) + h[1] * q.point(wb.ue2());
                    best = best.min((pa - pb).norm_sqr());
                }
            }
        }
        best
    }

    #[test]
    fn xor_mapping_at_equal_gains() {
        let q = Qam4::gray();
        let sc = superimpose([one(), one()], &q);
        let xor = rows(&["1010", "0101"]);
        let d = min_ncv_distance(&sc, &xor).unwrap();
        assert!(d > 0.0);
        assert_eq!(d, brute_dmin([one(), one()], &xor));
    }

    #[test]
    fn ue1_only_mapping_collapses_at_equal_gains() {
        let q = Qam4::gray();
        let sc = superimpose([one(), one()], &q);
        let ue1 = rows(&["1000", "0100"]);
        assert!(min_ncv_distance(&sc, &ue1).unwrap() < 1e-24);
    }

    #[test]
    fn zero_mapping_has_no_distinct_ncvs() {
        let q = Qam4::gray();
        let sc = superimpose([one(), Complex64::new(0.3, -0.8)], &q);
        let zero = Gf2Matrix::zeros(2, 4).unwrap();
        assert_eq!(min_ncv_distance(&sc, &zero).unwrap(), f64::INFINITY);
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let q = Qam4::gray();
        let sc = superimpose([one(), one()], &q);
        assert!(min_ncv_distance(&sc, &Gf2Matrix::identity(4).unwrap()).is_err());
    }

    #[test]
    fn resolution_at_unit_ratio() {
        let q = Qam4::gray();
        assert!(resolves_sfs(one(), &rows(&["1010", "0101"]), &q, 1e-9).unwrap());
        assert!(!resolves_sfs(one(), &rows(&["1000", "0100"]), &q, 1e-9).unwrap());
    }

    #[test]
    fn oracle_matches_on_fixed_grid() {
        let q = Qam4::gray();
        for k in 0..256u64 {
            let m = Gf2Matrix::from_counter(k, 2, 4).unwrap();
            let h = [Complex64::new(0.8, 0.1), Complex64::new(-0.3, 0.65)];
            let d = min_ncv_distance(&superimpose(h, &q), &m).unwrap();
            let oracle = brute_dmin(h, &m);
            if oracle.is_infinite() {
                assert!(d.is_infinite());
            } else {
                assert!((d - oracle).abs() <= 1e-12 * oracle.max(1e-300));
            }
        }
    }
}
