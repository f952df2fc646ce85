//! Offline mapping search.
//!
//! For every SFS the search scans all 256 2×4 binary matrices and keeps the
//! surjective ones that resolve the SFS with the largest minimum NCV
//! distance. The combined table is then built pair by pair: for SFS `i` at
//! AP1 and `j` at AP2 it looks at every pair of surjective matrices whose
//! stack is invertible and keeps the pair with the best
//! `(min(d1, d2), d1, d2)`, breaking remaining ties by enumeration order.
//! When no invertible stack lets both halves resolve their SFS, the second
//! AP ends up with a non-resolving (d_min = 0) half.

use num_complex::Complex64;

use super::constellation::{superimpose, Qam4};
use super::distance::{min_distance_labeled, ncv_labels, resolves_labeled};
use super::sfs::{enumerate_sfs, SfsCatalog};
use super::{distance_eq, PncError, NUM_SFS};
use crate::gf2::{enumerate_matrices, Gf2Matrix};

/// All rank-2 (surjective) 2×4 matrices in enumeration order.
pub(crate) fn surjective_mappings() -> Vec<Gf2Matrix> {
    enumerate_matrices(2, 4)
        .expect("2x4 enumeration is in range")
        .filter(|m| m.rank() == 2)
        .collect()
}

/// Surjective matrices that resolve `v` with the largest d_min at
/// `h = (1, v)`, together with that d_min.
pub(crate) fn optimal_candidates(c: &Qam4, v: Complex64, tol: f64) -> (f64, Vec<Gf2Matrix>) {
    let points = superimpose([Complex64::new(1.0, 0.0), v], c).points;
    let mut best = f64::NEG_INFINITY;
    let mut out: Vec<Gf2Matrix> = Vec::new();
    for m in surjective_mappings() {
        let labels = ncv_labels(&m);
        if !resolves_labeled(&points, &labels, tol) {
            continue;
        }
        let d = min_distance_labeled(&points, &labels);
        if out.is_empty() || (d > best && !distance_eq(d, best, tol)) {
            best = d;
            out.clear();
            out.push(m);
        } else if distance_eq(d, best, tol) {
            out.push(m);
        }
    }
    (best, out)
}

/// Optimal per-SFS candidates found before pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct SfsCandidates {
    pub sfs: usize,
    pub dmin: f64,
    pub matrices: Vec<Gf2Matrix>,
}

impl SfsCandidates {
    /// The lowest-index optimal matrix.
    pub fn primary(&self) -> Gf2Matrix {
        self.matrices[0]
    }
}

/// Combined mapping for SFS `ap1_sfs` at AP1 and `ap2_sfs` at AP2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingEntry {
    pub ap1_sfs: usize,
    pub ap2_sfs: usize,
    pub combined: Gf2Matrix,
    /// d_min of each half, evaluated at its own SFS.
    pub dmin: [f64; 2],
}

impl MappingEntry {
    pub fn mapping_index(&self) -> usize {
        mapping_index(self.ap1_sfs, self.ap2_sfs)
    }

    pub fn top(&self) -> Gf2Matrix {
        self.combined.row_slice(0, 2).expect("4x4 combined matrix")
    }

    pub fn bottom(&self) -> Gf2Matrix {
        self.combined.row_slice(2, 4).expect("4x4 combined matrix")
    }

    /// Half used by `ap` (1 or 2).
    pub fn half(&self, ap: usize) -> Gf2Matrix {
        if ap == 1 {
            self.top()
        } else {
            self.bottom()
        }
    }
}

/// `5·(i−1) + j` for 1-based SFS indices.
pub fn mapping_index(i: usize, j: usize) -> usize {
    NUM_SFS * (i - 1) + j
}

/// Read-only table shared by APs and hub.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingCatalog {
    constellation: Qam4,
    sfs: SfsCatalog,
    entries: Vec<MappingEntry>,
}

impl MappingCatalog {
    pub fn new(
        constellation: Qam4,
        sfs: SfsCatalog,
        entries: Vec<MappingEntry>,
    ) -> Result<Self, PncError> {
        let n = sfs.len();
        if entries.len() != n * n {
            return Err(PncError::Constellation(format!(
                "expected {} catalog entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for (k, e) in entries.iter().enumerate() {
            if e.ap1_sfs != k / n + 1 || e.ap2_sfs != k % n + 1 {
                return Err(PncError::SfsIndex {
                    index: e.ap1_sfs,
                    max: n,
                });
            }
            if e.combined.rows() != 4 || e.combined.cols() != 4 || e.combined.rank() != 4 {
                return Err(PncError::SingularMapping);
            }
        }
        Ok(Self {
            constellation,
            sfs,
            entries,
        })
    }

    pub fn constellation(&self) -> &Qam4 {
        &self.constellation
    }

    pub fn sfs(&self) -> &SfsCatalog {
        &self.sfs
    }

    pub fn entries(&self) -> &[MappingEntry] {
        &self.entries
    }

    pub fn tolerance(&self) -> f64 {
        self.sfs.tolerance()
    }

    pub fn entry(&self, i: usize, j: usize) -> Result<&MappingEntry, PncError> {
        let n = self.sfs.len();
        for k in [i, j] {
            if k == 0 || k > n {
                return Err(PncError::SfsIndex { index: k, max: n });
            }
        }
        Ok(&self.entries[n * (i - 1) + (j - 1)])
    }

    /// Entry by 1-based mapping index.
    pub fn by_mapping_index(&self, index: usize) -> Result<&MappingEntry, PncError> {
        index
            .checked_sub(1)
            .and_then(|k| self.entries.get(k))
            .ok_or(PncError::MappingIndex(index))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineSearch {
    pub catalog: MappingCatalog,
    pub candidates: Vec<SfsCandidates>,
}

/// Runs the full offline search for constellation `c`.
pub fn offline_search(c: &Qam4, tol: f64) -> Result<OfflineSearch, PncError> {
    let sfs = enumerate_sfs(c, tol)?;
    let candidates: Vec<SfsCandidates> = sfs
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let (dmin, matrices) = optimal_candidates(c, v, tol);
            SfsCandidates {
                sfs: k + 1,
                dmin,
                matrices,
            }
        })
        .collect();

    let pool = surjective_mappings();
    // d_min of every surjective matrix at every SFS
    let dtable: Vec<Vec<f64>> = sfs
        .values()
        .iter()
        .map(|&v| {
            let pts = superimpose([Complex64::new(1.0, 0.0), v], c).points;
            pool.iter()
                .map(|m| min_distance_labeled(&pts, &ncv_labels(m)))
                .collect()
        })
        .collect();

    let better = |a: f64, b: f64| a > b && !distance_eq(a, b, tol);
    let n = sfs.len();
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut best: Option<(usize, usize, [f64; 3])> = None;
            for (a, m1) in pool.iter().enumerate() {
                let d1 = dtable[i][a];
                for (b, m2) in pool.iter().enumerate() {
                    let d2 = dtable[j][b];
                    let key = [d1.min(d2), d1, d2];
                    let improves = match &best {
                        None => true,
                        Some((_, _, cur)) => {
                            let mut verdict = false;
                            for t in 0..3 {
                                if better(key[t], cur[t]) {
                                    verdict = true;
                                    break;
                                }
                                if better(cur[t], key[t]) {
                                    break;
                                }
                            }
                            verdict
                        }
                    };
                    if improves && m1.vstack(m2)?.rank() == 4 {
                        best = Some((a, b, key));
                    }
                }
            }
            let (a, b, key) = best.ok_or(PncError::SingularMapping)?;
            entries.push(MappingEntry {
                ap1_sfs: i + 1,
                ap2_sfs: j + 1,
                combined: pool[a].vstack(&pool[b])?,
                dmin: [key[1], key[2]],
            });
        }
    }

    Ok(OfflineSearch {
        catalog: MappingCatalog::new(*c, sfs, entries)?,
        candidates,
    })
}
