use std::f64::consts::PI;

use num_complex::Complex64;

use super::{OfdmError, OfdmModem, SubcarrierGrid};

/// PN correlation is summed noncoherently over segments of this many chips
/// so a large CFO does not wash out the peak.
const SEGMENT: usize = 8;

/// Default acceptance threshold for the normalized detection metric.
pub const DETECTION_THRESHOLD: f64 = 0.6;

/// Multiplies sample `n` by `exp(−j2π·cfo·n/fs)`.
pub fn correct_cfo(rx: &[Complex64], cfo_hz: f64, sample_rate: f64) -> Vec<Complex64> {
    let w = -2.0 * PI * cfo_hz / sample_rate;
    rx.iter()
        .enumerate()
        .map(|(n, &x)| x * Complex64::from_polar(1.0, w * n as f64))
        .collect()
}

impl OfdmModem {
    /// Normalized segmented PN correlation at `offset`, in [0, 1].
    pub fn detection_metric(&self, rx: &[Complex64], offset: usize) -> f64 {
        let pn = &self.pn;
        let win = &rx[offset..offset + pn.len()];
        let e_rx: f64 = win.iter().map(|x| x.norm_sqr()).sum();
        let e_pn: f64 = pn.iter().map(|x| x.norm_sqr()).sum();
        if e_rx <= f64::MIN_POSITIVE {
            return 0.0;
        }
        let mut acc = 0.0;
        for (a, b) in win.chunks(SEGMENT).zip(pn.chunks(SEGMENT)) {
            let c: Complex64 = a.iter().zip(b).map(|(x, p)| x * p.conj()).sum();
            acc += c.norm();
        }
        acc / (e_rx * e_pn).sqrt()
    }

    /// Start of the first frame in `rx`, with the default threshold.
    pub fn detect_frame(&self, rx: &[Complex64]) -> Result<usize, OfdmError> {
        self.detect_frame_with(rx, DETECTION_THRESHOLD)
    }

    pub fn detect_frame_with(&self, rx: &[Complex64], threshold: f64) -> Result<usize, OfdmError> {
        let frame_len = self.spec().frame_len();
        if rx.len() < frame_len {
            return Err(OfdmError::OffsetOutOfBounds {
                offset: 0,
                frame_len,
                len: rx.len(),
            });
        }
        let mut best = (0usize, f64::NEG_INFINITY);
        for off in 0..=rx.len() - frame_len {
            let m = self.detection_metric(rx, off);
            if m > best.1 {
                best = (off, m);
            }
        }
        if best.1 >= threshold {
            Ok(best.0)
        } else {
            Err(OfdmError::NotFound(best.1.max(0.0)))
        }
    }

    /// Coarse estimate from the lag-`cp_len` correlation over the coarse
    /// preamble, refined with the correlation between the two identical fine
    /// preambles (lag `cp_len + fft_len`).
    pub fn estimate_cfo(&self, rx: &[Complex64], frame_offset: usize) -> Result<f64, OfdmError> {
        self.check_offset(rx, frame_offset)?;
        let (coarse, fine) = self.cfo_components(rx, frame_offset);
        let spec = self.spec();
        let alias = spec.sample_rate / spec.preamble_len() as f64;
        let k = ((coarse - fine) / alias).round();
        Ok(fine + k * alias)
    }

    /// Coarse and fine (aliased) CFO estimates in Hz.
    pub fn cfo_components(&self, rx: &[Complex64], frame_offset: usize) -> (f64, f64) {
        let spec = self.spec();
        let fs = spec.sample_rate;
        let (cp, n) = (spec.cp_len, spec.fft_len);

        let p1 = frame_offset + spec.coarse_preamble_offset();
        let c: Complex64 = (p1..p1 + n).map(|i| rx[i].conj() * rx[i + cp]).sum();
        let coarse = c.arg() * fs / (2.0 * PI * cp as f64);

        let [p2, p3] = spec.fine_preamble_offsets();
        let lag = p3 - p2;
        let p2 = frame_offset + p2;
        // the last cp_len samples of the second preamble are skipped: an
        // early UE2 data symbol can overlap them
        let f: Complex64 = (p2..p2 + lag - cp)
            .map(|i| rx[i].conj() * rx[i + lag])
            .sum();
        let fine = f.arg() * fs / (2.0 * PI * lag as f64);
        (coarse, fine)
    }

    fn check_offset(&self, rx: &[Complex64], offset: usize) -> Result<(), OfdmError> {
        let frame_len = self.spec().frame_len();
        if offset + frame_len > rx.len() {
            return Err(OfdmError::OffsetOutOfBounds {
                offset,
                frame_len,
                len: rx.len(),
            });
        }
        Ok(())
    }

    /// Transforms the central `fft_len` samples of every data symbol.
    pub fn demodulate_ofdm(
        &self,
        rx: &[Complex64],
        frame_offset: usize,
    ) -> Result<SubcarrierGrid, OfdmError> {
        self.check_offset(rx, frame_offset)?;
        let spec = self.spec();
        let n = spec.fft_len;
        let mut symbols = Vec::with_capacity(spec.data_symbols);
        for s in 0..spec.data_symbols {
            let start =
                frame_offset + spec.data_offset() + s * spec.data_symbol_len() + spec.cp_len;
            let slots = self.fft(&rx[start..start + n]);
            let carriers = (1..=n).map(|k| slots[super::carrier_slot(k, n)]).collect();
            symbols.push(carriers);
        }
        Ok(SubcarrierGrid { symbols })
    }
}
