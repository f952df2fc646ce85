//! Plain-text catalog file.
//!
//! ```text
//! pnc-catalog 1
//! labeling 0.7071067811865476 0.7071067811865476 -0.7071067811865476 ...
//! tolerance 0.000000001
//! sfs 5
//! 0 0
//! -0.5 -0.5
//! ...
//! images 13
//! 0 0 1
//! ...
//! M 1 1
//! 0100
//! 1000
//! 0001
//! 0010
//! dmin 2 2
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting so a file
//! re-imports to an identical catalog.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::constellation::Qam4;
use super::search::{MappingCatalog, MappingEntry};
use super::sfs::{SfsCatalog, SfsImage};
use super::PncError;
use crate::gf2::Gf2Matrix;

const MAGIC: &str = "pnc-catalog 1";

pub fn to_text(cat: &MappingCatalog) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str("labeling");
    for p in cat.constellation().points() {
        out.push_str(&format!(" {} {}", p.re, p.im));
    }
    out.push('\n');
    out.push_str(&format!("tolerance {}\n", cat.tolerance()));
    out.push_str(&format!("sfs {}\n", cat.sfs().len()));
    for v in cat.sfs().values() {
        out.push_str(&format!("{} {}\n", v.re, v.im));
    }
    out.push_str(&format!("images {}\n", cat.sfs().images().len()));
    for img in cat.sfs().images() {
        out.push_str(&format!("{} {} {}\n", img.value.re, img.value.im, img.sfs));
    }
    for e in cat.entries() {
        out.push('\n');
        out.push_str(&format!("M {} {}\n", e.ap1_sfs, e.ap2_sfs));
        out.push_str(&e.combined.to_text());
        if !out.ends_with('\n') {
            out.push('\n');
        }
        out.push_str(&format!("dmin {} {}\n", e.dmin[0], e.dmin[1]));
    }
    out
}

pub fn export_catalog(cat: &MappingCatalog, path: impl AsRef<Path>) -> Result<(), PncError> {
    fs::write(path, to_text(cat))?;
    Ok(())
}

pub fn import_catalog(path: impl AsRef<Path>) -> Result<MappingCatalog, PncError> {
    parse(&fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> PncError {
        PncError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    /// Next non-blank line, trimmed.
    fn next(&mut self) -> Result<&'a str, PncError> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let t = l.trim();
            if !t.is_empty() {
                return Ok(t);
            }
        }
        self.line += 1;
        Err(self.err("unexpected end of file"))
    }

    fn done(&mut self) -> bool {
        self.inner.all(|(_, l)| l.trim().is_empty())
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>, PncError> {
        let l = self.next()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected '{key}', got '{l}'")));
        }
        Ok(parts.collect())
    }

    fn float(&self, s: &str) -> Result<f64, PncError> {
        s.parse::<f64>()
            .map_err(|_| self.err(format!("bad number '{s}'")))
    }

    fn count(&self, s: &str) -> Result<usize, PncError> {
        s.parse::<usize>()
            .map_err(|_| self.err(format!("bad count '{s}'")))
    }

    fn fields(&mut self, n: usize) -> Result<Vec<&'a str>, PncError> {
        let l = self.next()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != n {
            return Err(self.err(format!("expected {n} fields, got {}", f.len())));
        }
        Ok(f)
    }
}

pub fn parse(text: &str) -> Result<MappingCatalog, PncError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.next()? != MAGIC {
        return Err(lines.err("missing 'pnc-catalog 1' header"));
    }

    let lab = lines.keyed("labeling")?;
    if lab.len() != 8 {
        return Err(lines.err("labeling needs 4 complex points"));
    }
    let mut points = [Complex64::default(); 4];
    for (k, p) in points.iter_mut().enumerate() {
        *p = Complex64::new(lines.float(lab[2 * k])?, lines.float(lab[2 * k + 1])?);
    }
    let constellation = Qam4::from_points(points)?;

    let tol = lines.keyed("tolerance")?;
    if tol.len() != 1 {
        return Err(lines.err("tolerance takes one value"));
    }
    let tolerance = lines.float(tol[0])?;

    let n = lines.keyed("sfs")?;
    if n.len() != 1 {
        return Err(lines.err("sfs takes a count"));
    }
    let n = lines.count(n[0])?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let f = lines.fields(2)?;
        values.push(Complex64::new(lines.float(f[0])?, lines.float(f[1])?));
    }

    let k = lines.keyed("images")?;
    if k.len() != 1 {
        return Err(lines.err("images takes a count"));
    }
    let k = lines.count(k[0])?;
    let mut images = Vec::with_capacity(k);
    for _ in 0..k {
        let f = lines.fields(3)?;
        images.push(SfsImage {
            value: Complex64::new(lines.float(f[0])?, lines.float(f[1])?),
            sfs: lines.count(f[2])?,
        });
    }
    let sfs = SfsCatalog::from_parts(values, images, tolerance)?;

    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let key = lines.keyed("M")?;
        if key.len() != 2 {
            return Err(lines.err("matrix key is 'M i j'"));
        }
        let (i, j) = (lines.count(key[0])?, lines.count(key[1])?);
        let mut rows = Vec::with_capacity(4);
        for _ in 0..4 {
            rows.push(lines.next()?);
        }
        let combined = Gf2Matrix::from_rows(&rows).map_err(|e| lines.err(e.to_string()))?;
        let d = lines.keyed("dmin")?;
        if d.len() != 2 {
            return Err(lines.err("dmin takes two values"));
        }
        entries.push(MappingEntry {
            ap1_sfs: i,
            ap2_sfs: j,
            combined,
            dmin: [lines.float(d[0])?, lines.float(d[1])?],
        });
    }
    if !lines.done() {
        return Err(lines.err("trailing content"));
    }
    MappingCatalog::new(constellation, sfs, entries)
}
