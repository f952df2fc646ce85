//! Singular fade states.
//!
//! A ratio `v = h2/h1` is singular when two different joint words land on
//! the same superimposed point. For two 4-QAM users every such ratio is
//! `(s1 − s1') / (s2' − s2)` for some pair of words. Ratios that one mapping
//! matrix can resolve together are images of each other; the catalog keeps
//! one representative per image class and remembers every image so that a
//! measured ratio can be matched to the class of its nearest singular value.

use std::cmp::Ordering;

use num_complex::Complex64;

use super::constellation::{Qam4, SourceWord};
use super::distance::{ncv_labels, resolves_labeled};
use super::search::optimal_candidates;
use super::{coincident, PncError};
use crate::pnc::constellation::superimpose;

/// One singular value together with the (1-based) class it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfsImage {
    pub value: Complex64,
    pub sfs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfsCatalog {
    values: Vec<Complex64>,
    images: Vec<SfsImage>,
    tolerance: f64,
}

impl SfsCatalog {
    /// Assembles a catalog from stored parts, e.g. a parsed catalog file.
    pub fn from_parts(
        values: Vec<Complex64>,
        images: Vec<SfsImage>,
        tolerance: f64,
    ) -> Result<Self, PncError> {
        if !(tolerance > 0.0) {
            return Err(PncError::Tolerance(tolerance));
        }
        for img in &images {
            if img.sfs == 0 || img.sfs > values.len() {
                return Err(PncError::SfsIndex {
                    index: img.sfs,
                    max: values.len(),
                });
            }
        }
        Ok(Self {
            values,
            images,
            tolerance,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Retained representatives, index 0 is SFS 1.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Representative of SFS `index` (1-based).
    pub fn value(&self, index: usize) -> Result<Complex64, PncError> {
        index
            .checked_sub(1)
            .and_then(|i| self.values.get(i).copied())
            .ok_or(PncError::SfsIndex {
                index,
                max: self.values.len(),
            })
    }

    /// Every singular value found, retained ones included.
    pub fn images(&self) -> &[SfsImage] {
        &self.images
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// 1-based index of the class whose singular value is closest to
    /// `h_ratio`; ties go to the lower index.
    pub fn nearest(&self, h_ratio: Complex64) -> usize {
        if !h_ratio.re.is_finite() || !h_ratio.im.is_finite() {
            // h1 vanished: the outermost singular value is the closest one
            return self
                .images
                .iter()
                .max_by(|a, b| {
                    a.value
                        .norm()
                        .total_cmp(&b.value.norm())
                        .then(b.sfs.cmp(&a.sfs))
                })
                .map_or(1, |img| img.sfs);
        }
        let mut best = (f64::INFINITY, usize::MAX);
        for img in &self.images {
            let d = (h_ratio - img.value).norm();
            if d < best.0 || (d == best.0 && img.sfs < best.1) {
                best = (d, img.sfs);
            }
        }
        if best.1 == usize::MAX {
            1
        } else {
            best.1
        }
    }
}

/// See [`SfsCatalog::nearest`].
pub fn nearest_sfs(h_ratio: Complex64, cat: &SfsCatalog) -> usize {
    cat.nearest(h_ratio)
}

fn clean(v: Complex64, tol: f64) -> Complex64 {
    let snap = |x: f64| if x.abs() <= tol { 0.0 } else { x };
    Complex64::new(snap(v.re), snap(v.im))
}

/// Magnitude first, then argument in (−π, π].
fn canonical_cmp(a: Complex64, b: Complex64, tol: f64) -> Ordering {
    let (ma, mb) = (a.norm(), b.norm());
    if (ma - mb).abs() > tol * ma.max(mb).max(1.0) {
        return ma.total_cmp(&mb);
    }
    let (pa, pb) = (a.arg(), b.arg());
    if (pa - pb).abs() <= tol {
        Ordering::Equal
    } else {
        pa.total_cmp(&pb)
    }
}

/// All distinct singular ratios, in canonical order.
pub fn raw_sfs_values(c: &Qam4, tol: f64) -> Vec<Complex64> {
    let mut found: Vec<Complex64> = Vec::new();
    for a in SourceWord::all() {
        for b in SourceWord::all() {
            if a == b {
                continue;
            }
            let den = c.point(b.ue2()) - c.point(a.ue2());
            if den.norm() <= tol {
                continue;
            }
            let v = clean((c.point(a.ue1()) - c.point(b.ue1())) / den, tol);
            if !found.iter().any(|&u| coincident(u, v, tol)) {
                found.push(v);
            }
        }
    }
    found.sort_by(|&x, &y| canonical_cmp(x, y, tol));
    found
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Enumerates singular fade states and removes images.
pub fn enumerate_sfs(c: &Qam4, tol: f64) -> Result<SfsCatalog, PncError> {
    if !(tol > 0.0) {
        return Err(PncError::Tolerance(tol));
    }
    let raw = raw_sfs_values(c, tol);
    let n = raw.len();
    let points: Vec<_> = raw
        .iter()
        .map(|&v| superimpose([Complex64::new(1.0, 0.0), v], c).points)
        .collect();

    let mut parent: Vec<usize> = (0..n).collect();
    for a in 0..n {
        let (_, cands) = optimal_candidates(c, raw[a], tol);
        for b in a + 1..n {
            let shared = cands
                .iter()
                .any(|m| resolves_labeled(&points[b], &ncv_labels(m), tol));
            if shared {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }

    // classes are numbered by their first member in canonical order
    let mut class_of_root = vec![0usize; n];
    let mut values = Vec::new();
    let mut images = Vec::with_capacity(n);
    for i in 0..n {
        let root = find(&mut parent, i);
        if class_of_root[root] == 0 {
            values.push(raw[i]);
            class_of_root[root] = values.len();
        }
        images.push(SfsImage {
            value: raw[i],
            sfs: class_of_root[root],
        });
    }
    SfsCatalog::from_parts(values, images, tol)
}
