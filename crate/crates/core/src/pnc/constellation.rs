use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

use super::{coincident, PncError, NUM_WORDS};
use crate::gf2::Gf2Vector;

/// A labeled 4-QAM constellation. `points[label]` is the symbol for the
/// two-bit label whose first bit is the most significant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qam4 {
    points: [Complex64; 4],
}

impl Qam4 {
    /// Gray-labeled unit-energy 4-QAM:
    /// 00 → (1+i)/√2, 01 → (−1+i)/√2, 11 → (−1−i)/√2, 10 → (1−i)/√2.
    pub fn gray() -> Self {
        let a = FRAC_1_SQRT_2;
        Self {
            points: [
                Complex64::new(a, a),
                Complex64::new(-a, a),
                Complex64::new(a, -a),
                Complex64::new(-a, -a),
            ],
        }
    }

    /// Custom labeling; points must be distinct with unit mean energy.
    pub fn from_points(points: [Complex64; 4]) -> Result<Self, PncError> {
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0;
        if (energy - 1.0).abs() > 1e-9 {
            return Err(PncError::Constellation(format!(
                "mean symbol energy {energy} != 1"
            )));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if coincident(points[i], points[j], 1e-9) {
                    return Err(PncError::Constellation(format!(
                        "labels {i:02b} and {j:02b} share a point"
                    )));
                }
            }
        }
        Ok(Self { points })
    }

    pub fn point(&self, label: u8) -> Complex64 {
        self.points[usize::from(label & 3)]
    }

    pub fn points(&self) -> &[Complex64; 4] {
        &self.points
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0
    }

    /// Label of the point nearest to `y`; ties go to the lower label.
    pub fn slice(&self, y: Complex64) -> u8 {
        let mut best = 0u8;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label as u8;
            }
        }
        best
    }
}

impl Default for Qam4 {
    fn default() -> Self {
        Self::gray()
    }
}

/// Maps two bits (first bit most significant) to a symbol of `c`.
pub fn modulate_4qam(bits: [u8; 2], c: &Qam4) -> Complex64 {
    c.point(((bits[0] & 1) << 1) | (bits[1] & 1))
}

/// Joint message `w = [UE1 bits ‖ UE2 bits]`, stored as a 4-bit counter
/// with the UE1 bits in the two most significant positions.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceWord(u8);

impl SourceWord {
    pub fn new(value: u8) -> Result<Self, PncError> {
        if usize::from(value) < NUM_WORDS {
            Ok(Self(value))
        } else {
            Err(PncError::SourceWord(value))
        }
    }

    pub fn from_labels(ue1: u8, ue2: u8) -> Self {
        Self(((ue1 & 3) << 2) | (ue2 & 3))
    }

    pub fn from_bits(bits: [u8; 4]) -> Self {
        Self(bits.iter().fold(0u8, |acc, b| (acc << 1) | (b & 1)))
    }

    /// All 16 words in counter order.
    pub fn all() -> impl Iterator<Item = SourceWord> {
        (0..NUM_WORDS as u8).map(SourceWord)
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn ue1(self) -> u8 {
        self.0 >> 2
    }

    pub fn ue2(self) -> u8 {
        self.0 & 3
    }

    pub fn bits(self) -> [u8; 4] {
        [
            (self.0 >> 3) & 1,
            (self.0 >> 2) & 1,
            (self.0 >> 1) & 1,
            self.0 & 1,
        ]
    }

    pub fn to_vector(self) -> Gf2Vector {
        Gf2Vector::from_counter(self.0, 4).expect("length 4 is valid")
    }

    pub fn from_vector(v: Gf2Vector) -> Result<Self, PncError> {
        if v.len() != 4 {
            return Err(PncError::MappingShape {
                expected_rows: 4,
                rows: v.len(),
                cols: 1,
            });
        }
        Ok(Self(v.to_counter()))
    }
}

impl fmt::Debug for SourceWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w({:02b},{:02b})", self.ue1(), self.ue2())
    }
}

/// Network coded vector: the two linear network coded bits one AP forwards.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ncv(u8);

impl Ncv {
    pub fn from_bits(bits: [u8; 2]) -> Self {
        Self(((bits[0] & 1) << 1) | (bits[1] & 1))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn from_value(value: u8) -> Self {
        Self(value & 3)
    }

    pub fn bits(self) -> [u8; 2] {
        [(self.0 >> 1) & 1, self.0 & 1]
    }

    pub fn to_vector(self) -> Gf2Vector {
        Gf2Vector::from_counter(self.0, 2).expect("length 2 is valid")
    }

    pub fn from_vector(v: Gf2Vector) -> Result<Self, PncError> {
        if v.len() != 2 {
            return Err(PncError::MappingShape {
                expected_rows: 2,
                rows: v.len(),
                cols: 1,
            });
        }
        Ok(Self(v.to_counter()))
    }
}

impl fmt::Debug for Ncv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ncv({:02b})", self.0)
    }
}

/// The 16 noiseless points `h1·s1(w) + h2·s2(w)` seen by one AP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperposedConstellation {
    pub h: [Complex64; 2],
    pub points: [Complex64; NUM_WORDS],
}

impl SuperposedConstellation {
    pub fn point(&self, w: SourceWord) -> Complex64 {
        self.points[w.index()]
    }

    /// Number of distinct points when coincidence is judged with `tol`.
    pub fn distinct_points(&self, tol: f64) -> usize {
        let mut reps: Vec<Complex64> = Vec::new();
        for &p in &self.points {
            if !reps.iter().any(|&q| coincident(p, q, tol)) {
                reps.push(p);
            }
        }
        reps.len()
    }
}

pub fn superimpose(h: [Complex64; 2], c: &Qam4) -> SuperposedConstellation {
    let mut points = [Complex64::default(); NUM_WORDS];
    for w in SourceWord::all() {
        points[w.index()] = h[0] * c.point(w.ue1()) + h[1] * c.point(w.ue2());
    }
    SuperposedConstellation { h, points }
}
