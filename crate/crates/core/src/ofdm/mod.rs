//! OFDM framing and recovery for the two-UE uplink.
//!
//! Carriers are numbered 1..=64 with carrier 33 at DC, so carrier `k` sits
//! in FFT bin `(k − 33) mod 64`. UE1 sends the whole frame: a PN detection
//! sequence, one coarse-CFO preamble, two fine-CFO preambles and the data
//! symbols. UE2 sends only data symbols, time aligned with UE1's.

mod dump;
mod estimate;
mod frame;
mod sync;

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub use dump::{parse_samples_csv, write_samples_csv};
pub use estimate::{ChannelEstimate, PairRatios, DEGENERATE_GAIN};
pub use frame::{pn_sequence, UeFrame};
pub use sync::correct_cfo;

#[derive(Debug, Error)]
pub enum OfdmError {
    #[error("payload of {got} bits exceeds the {capacity}-bit frame budget")]
    PayloadOverflow { got: usize, capacity: usize },
    #[error("payload bit {0} is not 0 or 1")]
    BadBit(u8),
    #[error("UE id must be 1 or 2, got {0}")]
    UeId(u8),
    #[error(
        "frame offset {offset} leaves no room for an {frame_len}-sample frame in {len} samples"
    )]
    OffsetOutOfBounds {
        offset: usize,
        frame_len: usize,
        len: usize,
    },
    #[error("no frame found (peak metric {0:.3})")]
    NotFound(f64),
    #[error("all pilots are zero")]
    ZeroPilots,
    #[error("|h1| = {0:e} is too small to form a channel ratio")]
    DegenerateChannel(f64),
    #[error("invalid frame spec: {0}")]
    Spec(String),
    #[error("grid has {got} symbols, {needed} needed")]
    GridTooShort { got: usize, needed: usize },
    #[error("malformed sample line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Frame constants. Defaults follow the prototype parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSpec {
    pub fft_len: usize,
    pub cp_len: usize,
    pub used_subcarriers: usize,
    pub sample_rate: f64,
    pub data_symbols: usize,
    pub pn_len: usize,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            fft_len: 64,
            cp_len: 16,
            used_subcarriers: 48,
            sample_rate: 1e6,
            data_symbols: 6,
            pn_len: 64,
        }
    }
}

impl FrameSpec {
    pub fn validate(&self) -> Result<(), OfdmError> {
        if self.fft_len != 64 || self.used_subcarriers != 48 {
            return Err(OfdmError::Spec(
                "the carrier plan is defined for a 64-point FFT with 48 used carriers".into(),
            ));
        }
        if self.cp_len == 0
            || 2 * self.cp_len > self.fft_len
            || !self.fft_len.is_multiple_of(self.cp_len)
        {
            return Err(OfdmError::Spec(format!(
                "cp_len {} unsupported",
                self.cp_len
            )));
        }
        if self.data_symbols == 0 {
            return Err(OfdmError::Spec(
                "at least one data symbol is required".into(),
            ));
        }
        if self.pn_len < 8 || !self.pn_len.is_multiple_of(8) {
            return Err(OfdmError::Spec(format!(
                "pn_len {} must be a positive multiple of 8",
                self.pn_len
            )));
        }
        if !(self.sample_rate > 0.0) {
            return Err(OfdmError::Spec("sample_rate must be positive".into()));
        }
        Ok(())
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.sample_rate / self.fft_len as f64
    }

    /// CP plus one FFT body.
    pub fn preamble_len(&self) -> usize {
        self.cp_len + self.fft_len
    }

    /// Head CP, body, tail CP.
    pub fn data_symbol_len(&self) -> usize {
        self.fft_len + 2 * self.cp_len
    }

    pub fn coarse_preamble_offset(&self) -> usize {
        self.pn_len
    }

    pub fn fine_preamble_offsets(&self) -> [usize; 2] {
        let p2 = self.pn_len + self.preamble_len();
        [p2, p2 + self.preamble_len()]
    }

    /// Start of the first data symbol (including its head CP).
    pub fn data_offset(&self) -> usize {
        self.pn_len + 3 * self.preamble_len()
    }

    pub fn frame_len(&self) -> usize {
        self.data_offset() + self.data_symbols * self.data_symbol_len()
    }

    /// Unambiguous CFO range of the lag-`cp_len` coarse estimator, ±Hz.
    pub fn cfo_range(&self) -> f64 {
        self.sample_rate / (2.0 * self.cp_len as f64)
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }
}

/// Signed frequency index of 1-based carrier `k`.
pub fn carrier_bin(k: usize) -> i64 {
    k as i64 - 33
}

/// FFT slot of 1-based carrier `k`.
pub fn carrier_slot(k: usize, fft_len: usize) -> usize {
    carrier_bin(k).rem_euclid(fft_len as i64) as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotMap {
    pub ue1: [usize; 8],
    pub ue2: [usize; 8],
}

impl Default for PilotMap {
    fn default() -> Self {
        Self {
            ue1: [11, 17, 23, 29, 36, 42, 48, 54],
            ue2: [12, 18, 24, 30, 37, 43, 49, 55],
        }
    }
}

impl PilotMap {
    pub fn pilots(&self, ue: u8) -> &[usize; 8] {
        if ue == 1 {
            &self.ue1
        } else {
            &self.ue2
        }
    }

    pub fn is_null(k: usize) -> bool {
        k <= 8 || k >= 58 || k == 33
    }

    pub fn used_carriers() -> Vec<usize> {
        (1..=64).filter(|&k| !Self::is_null(k)).collect()
    }

    /// Carriers carrying superimposed data from both UEs, ascending.
    pub fn data_carriers(&self) -> Vec<usize> {
        Self::used_carriers()
            .into_iter()
            .filter(|k| !self.ue1.contains(k) && !self.ue2.contains(k))
            .collect()
    }
}

/// Known pilot symbol.
pub const PILOT: Complex64 = Complex64::new(1.0, 0.0);

/// Demodulated data symbols: `grid[s][k − 1]` is carrier `k` of symbol `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierGrid {
    pub symbols: Vec<Vec<Complex64>>,
}

impl SubcarrierGrid {
    pub fn num_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn get(&self, symbol: usize, carrier: usize) -> Complex64 {
        self.symbols[symbol][carrier - 1]
    }
}

/// FFT plans, frame constants and pilot plan in one reusable handle.
#[derive(Clone)]
pub struct OfdmModem {
    spec: FrameSpec,
    pilots: PilotMap,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pn: Vec<Complex64>,
    coarse: Vec<Complex64>,
    fine: Vec<Complex64>,
}

impl std::fmt::Debug for OfdmModem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmModem")
            .field("spec", &self.spec)
            .field("pilots", &self.pilots)
            .finish_non_exhaustive()
    }
}

impl OfdmModem {
    pub fn new(spec: FrameSpec, pilots: PilotMap) -> Result<Self, OfdmError> {
        spec.validate()?;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(spec.fft_len);
        let inv = planner.plan_fft_inverse(spec.fft_len);
        let mut modem = Self {
            spec,
            pilots,
            fwd,
            inv,
            pn: Vec::new(),
            coarse: Vec::new(),
            fine: Vec::new(),
        };
        modem.pn = frame::pn_sequence(spec.pn_len);
        modem.coarse = modem.coarse_preamble();
        modem.fine = modem.fine_preamble();
        Ok(modem)
    }

    pub fn spec(&self) -> &FrameSpec {
        &self.spec
    }

    pub fn pilot_map(&self) -> &PilotMap {
        &self.pilots
    }

    pub fn pn(&self) -> &[Complex64] {
        &self.pn
    }

    /// Payload bits per UE per frame.
    pub fn capacity_bits(&self) -> usize {
        2 * self.spec.data_symbols * self.pilots.data_carriers().len()
    }

    /// Unitary inverse transform of a 64-slot carrier vector (FFT order).
    pub(crate) fn ifft(&self, slots: &[Complex64]) -> Vec<Complex64> {
        let mut buf = slots.to_vec();
        self.inv.process(&mut buf);
        let s = 1.0 / (self.spec.fft_len as f64).sqrt();
        buf.iter_mut().for_each(|x| *x *= s);
        buf
    }

    /// Unitary forward transform, FFT order.
    pub(crate) fn fft(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = samples.to_vec();
        self.fwd.process(&mut buf);
        let s = 1.0 / (self.spec.fft_len as f64).sqrt();
        buf.iter_mut().for_each(|x| *x *= s);
        buf
    }

    /// Time-domain body from values on 1-based carriers.
    pub(crate) fn body_from_carriers(&self, carriers: &[(usize, Complex64)]) -> Vec<Complex64> {
        let mut slots = vec![Complex64::default(); self.spec.fft_len];
        for &(k, v) in carriers {
            slots[carrier_slot(k, self.spec.fft_len)] = v;
        }
        self.ifft(&slots)
    }
}

impl Default for OfdmModem {
    fn default() -> Self {
        Self::new(FrameSpec::default(), PilotMap::default()).expect("default spec is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_constants() {
        let s = FrameSpec::default();
        assert_eq!(s.subcarrier_spacing(), 15625.0);
        assert_eq!(s.frame_len(), 880);
        assert_eq!(s.data_offset(), 304);
        assert_eq!(s.cfo_range(), 31250.0);
        assert_eq!(PilotMap::used_carriers().len(), 48);
    }

    #[test]
    fn pilot_plan() {
        let p = PilotMap::default();
        assert!(p.ue1.iter().all(|k| !p.ue2.contains(k)));
        assert_eq!(p.data_carriers().len(), 32);
        assert!(p.ue1.iter().chain(&p.ue2).all(|&k| !PilotMap::is_null(k)));
        assert_eq!(OfdmModem::default().capacity_bits(), 384);
        // every run of six used carriers holds one pilot of each UE
        let used = PilotMap::used_carriers();
        for chunk in used[2..used.len() - 4].chunks(6) {
            if chunk.len() == 6 {
                assert_eq!(chunk.iter().filter(|k| p.ue1.contains(k)).count(), 1);
                assert_eq!(chunk.iter().filter(|k| p.ue2.contains(k)).count(), 1);
            }
        }
    }

    #[test]
    fn carrier_slots() {
        assert_eq!(carrier_slot(33, 64), 0);
        assert_eq!(carrier_slot(34, 64), 1);
        assert_eq!(carrier_slot(32, 64), 63);
        assert_eq!(carrier_slot(9, 64), 40);
    }

    #[test]
    fn unitary_transforms() {
        let m = OfdmModem::default();
        let x: Vec<Complex64> = (0..64)
            .map(|n| Complex64::new((n as f64).sin(), (n as f64 * 0.3).cos()))
            .collect();
        let back = m.ifft(&m.fft(&x));
        let e_in: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let e_f: f64 = m.fft(&x).iter().map(|v| v.norm_sqr()).sum();
        assert!((e_in - e_f).abs() < 1e-9);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_unsupported_specs() {
        let s = FrameSpec {
            fft_len: 128,
            ..FrameSpec::default()
        };
        assert!(s.validate().is_err());
        let s = FrameSpec {
            data_symbols: 0,
            ..FrameSpec::default()
        };
        assert!(s.validate().is_err());
    }
}
