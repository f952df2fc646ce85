//! The 25 published combined mapping matrices, key `(i, j)` = SFS at AP1
//! and AP2. Kept exactly as printed, including entries that do not resolve
//! their SFS pair.

use crate::gf2::Gf2Matrix;

const APPENDIX: [[&str; 4]; 25] = [
    ["0100", "1000", "0001", "0010"],
    ["0100", "1000", "0011", "1110"],
    ["0100", "1000", "1001", "0110"],
    ["0100", "1000", "0101", "1010"],
    ["0100", "1000", "0111", "0010"],
    ["0011", "1101", "1000", "0100"],
    ["0100", "1000", "0001", "0010"],
    ["0011", "1101", "1001", "0110"],
    ["0011", "1101", "1010", "0101"],
    ["0011", "1101", "1011", "0111"],
    ["0110", "1001", "1000", "0100"],
    ["0110", "1001", "0011", "1110"],
    ["0110", "1001", "0100", "0001"],
    ["0110", "1001", "0101", "0001"],
    ["0110", "1001", "0111", "1011"],
    ["0101", "1010", "0100", "1000"],
    ["0101", "1010", "0011", "1110"],
    ["0101", "1010", "0110", "0100"],
    ["0101", "1010", "1000", "0001"],
    ["0101", "1010", "0111", "1100"],
    ["0111", "1011", "0100", "0001"],
    ["0111", "1011", "0011", "1110"],
    ["0111", "1011", "0110", "1001"],
    ["0111", "1011", "1010", "0100"],
    ["0111", "1011", "0100", "0001"],
];

/// Published matrix for SFS `i` at AP1 and `j` at AP2 (1-based).
pub fn appendix_matrix(i: usize, j: usize) -> Option<Gf2Matrix> {
    if !(1..=5).contains(&i) || !(1..=5).contains(&j) {
        return None;
    }
    Some(Gf2Matrix::from_rows(&APPENDIX[5 * (i - 1) + (j - 1)]).expect("fixture rows are valid"))
}

/// All 25 published matrices in mapping-index order.
pub fn appendix_matrices() -> Vec<((usize, usize), Gf2Matrix)> {
    (1..=5)
        .flat_map(|i| (1..=5).map(move |j| ((i, j), appendix_matrix(i, j).unwrap())))
        .collect()
}
