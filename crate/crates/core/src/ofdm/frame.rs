use num_complex::Complex64;

use super::{OfdmError, OfdmModem, PilotMap, PILOT};
use crate::pnc::Qam4;

/// One UE's transmitted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct UeFrame {
    pub ue: u8,
    pub samples: Vec<Complex64>,
    /// 4-QAM labels, `labels[s * n_data + c]` for data carrier `c` of
    /// symbol `s`.
    pub labels: Vec<u8>,
}

impl UeFrame {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Maximal-length sequence from `x^6 + x + 1`, BPSK mapped and extended
/// cyclically to `len` chips.
pub fn pn_sequence(len: usize) -> Vec<Complex64> {
    let mut state = 0b100000u8;
    let mut chips = Vec::with_capacity(63);
    for _ in 0..63 {
        let out = state & 1;
        chips.push(if out == 1 { -1.0 } else { 1.0 });
        let fb = (state ^ (state >> 1)) & 1;
        state = (state >> 1) | (fb << 5);
    }
    let mut out = Vec::with_capacity(len);
    // the 64th chip balances the sequence (the m-sequence has one extra -1)
    for n in 0..len {
        let c = if n % 64 == 63 {
            1.0
        } else {
            chips[(n % 64) % 63]
        };
        out.push(Complex64::new(c, 0.0));
    }
    out
}

/// Mean power of a data-symbol body: 40 active unit carriers over 64.
fn data_power(modem: &OfdmModem) -> f64 {
    (modem.pilot_map().data_carriers().len() + 8) as f64 / modem.spec().fft_len as f64
}

impl OfdmModem {
    pub(super) fn pn_scaled(&self) -> Vec<Complex64> {
        let g = data_power(self).sqrt();
        pn_sequence(self.spec().pn_len)
            .into_iter()
            .map(|c| c * g)
            .collect()
    }

    /// 80 samples with period `cp_len`: carriers on every fourth bin.
    pub(super) fn coarse_preamble(&self) -> Vec<Complex64> {
        let step = self.spec().fft_len / self.spec().cp_len;
        let mut carriers = Vec::new();
        for k in PilotMap::used_carriers() {
            let bin = super::carrier_bin(k);
            if bin % step as i64 == 0 {
                carriers.push(k);
            }
        }
        let amp = (data_power(self) * self.spec().fft_len as f64 / carriers.len() as f64).sqrt();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let vals: Vec<(usize, Complex64)> = carriers
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let q = [(a, a), (-a, a), (-a, -a), (a, -a)][(i * i + i / 2) % 4];
                (k, Complex64::new(q.0, q.1) * amp)
            })
            .collect();
        let body = self.body_from_carriers(&vals);
        self.with_head_cp(&body)
    }

    /// CP plus a known symbol on all used carriers.
    pub(super) fn fine_preamble(&self) -> Vec<Complex64> {
        let used = PilotMap::used_carriers();
        let amp = (data_power(self) * self.spec().fft_len as f64 / used.len() as f64).sqrt();
        let chips = pn_sequence(used.len() + 7);
        let vals: Vec<(usize, Complex64)> = used
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, chips[i + 7] * amp))
            .collect();
        let body = self.body_from_carriers(&vals);
        self.with_head_cp(&body)
    }

    fn with_head_cp(&self, body: &[Complex64]) -> Vec<Complex64> {
        let cp = self.spec().cp_len;
        let mut out = body[body.len() - cp..].to_vec();
        out.extend_from_slice(body);
        out
    }

    /// `[tail CP | body | head CP]`.
    fn with_double_cp(&self, body: &[Complex64]) -> Vec<Complex64> {
        let cp = self.spec().cp_len;
        let mut out = self.with_head_cp(body);
        out.extend_from_slice(&body[..cp]);
        out
    }

    /// Builds a frame from payload bits (two bits per 4-QAM symbol, the
    /// first one most significant). Short payloads are zero padded.
    pub fn build_ue_frame(
        &self,
        payload_bits: &[u8],
        ue: u8,
        c: &Qam4,
    ) -> Result<UeFrame, OfdmError> {
        let cap = self.capacity_bits();
        if payload_bits.len() > cap {
            return Err(OfdmError::PayloadOverflow {
                got: payload_bits.len(),
                capacity: cap,
            });
        }
        if let Some(&b) = payload_bits.iter().find(|&&b| b > 1) {
            return Err(OfdmError::BadBit(b));
        }
        let mut labels = vec![0u8; cap / 2];
        for (i, pair) in payload_bits.chunks(2).enumerate() {
            labels[i] = (pair[0] << 1) | pair.get(1).copied().unwrap_or(0);
        }
        self.build_ue_frame_from_labels(&labels, ue, c)
    }

    /// Builds a frame whose data carriers carry the given 4-QAM labels.
    pub fn build_ue_frame_from_labels(
        &self,
        labels: &[u8],
        ue: u8,
        c: &Qam4,
    ) -> Result<UeFrame, OfdmError> {
        if ue != 1 && ue != 2 {
            return Err(OfdmError::UeId(ue));
        }
        let data = self.pilot_map().data_carriers();
        let cap = data.len() * self.spec().data_symbols;
        if labels.len() != cap {
            return Err(OfdmError::PayloadOverflow {
                got: 2 * labels.len(),
                capacity: 2 * cap,
            });
        }
        let spec = self.spec();
        let mut samples = Vec::with_capacity(spec.frame_len());
        if ue == 1 {
            samples.extend(self.pn_scaled());
            samples.extend_from_slice(&self.coarse);
            samples.extend_from_slice(&self.fine);
            samples.extend_from_slice(&self.fine);
        } else {
            samples.resize(spec.data_offset(), Complex64::default());
        }
        let own = *self.pilot_map().pilots(ue);
        for s in 0..spec.data_symbols {
            let mut vals: Vec<(usize, Complex64)> = own.iter().map(|&k| (k, PILOT)).collect();
            for (i, &k) in data.iter().enumerate() {
                vals.push((k, c.point(labels[s * data.len() + i])));
            }
            let body = self.body_from_carriers(&vals);
            samples.extend(self.with_double_cp(&body));
        }
        Ok(UeFrame {
            ue,
            samples,
            labels: labels.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pn_is_balanced_with_flat_periodic_autocorrelation() {
        let pn = pn_sequence(64);
        assert_eq!(pn.len(), 64);
        let sum: f64 = pn.iter().map(|c| c.re).sum();
        assert_eq!(sum, 0.0);
        // the 63-chip core has two-valued periodic autocorrelation
        for lag in 1..63 {
            let r: f64 = (0..63).map(|n| pn[n].re * pn[(n + lag) % 63].re).sum();
            assert_eq!(r, -1.0, "lag {lag}");
        }
    }

    #[test]
    fn frame_lengths_and_silence() {
        let m = OfdmModem::default();
        let q = Qam4::gray();
        let f1 = m.build_ue_frame(&[1, 0, 1, 1], 1, &q).unwrap();
        let f2 = m.build_ue_frame(&[0; 384], 2, &q).unwrap();
        assert_eq!(f1.len(), 880);
        assert_eq!(f2.len(), 880);
        assert!(f2.samples[..304].iter().all(|s| s.norm() == 0.0));
        assert!(f2.samples[304..].iter().any(|s| s.norm() > 0.0));
        assert_eq!(&f1.labels[..2], &[0b10, 0b11]);
    }

    #[test]
    fn payload_checks() {
        let m = OfdmModem::default();
        let q = Qam4::gray();
        assert!(matches!(
            m.build_ue_frame(&[0; 385], 1, &q),
            Err(OfdmError::PayloadOverflow { .. })
        ));
        assert!(m.build_ue_frame(&[2], 1, &q).is_err());
        assert!(m.build_ue_frame(&[0], 3, &q).is_err());
    }

    #[test]
    fn preamble_structure() {
        let m = OfdmModem::default();
        let c = &m.coarse;
        assert_eq!(c.len(), 80);
        for n in 0..64 {
            assert!((c[n] - c[n + 16]).norm() < 1e-12);
        }
        let f = &m.fine;
        for n in 0..16 {
            assert!((f[n] - f[n + 64]).norm() < 1e-12);
        }
    }

    #[test]
    fn data_symbols_have_cp_at_both_ends() {
        let m = OfdmModem::default();
        let q = Qam4::gray();
        let bits: Vec<u8> = (0..384).map(|i| ((i * 7) % 3 == 0) as u8).collect();
        let f = m.build_ue_frame(&bits, 2, &q).unwrap();
        for s in 0..6 {
            let sym = &f.samples[304 + 96 * s..304 + 96 * (s + 1)];
            for n in 0..16 {
                assert!((sym[n] - sym[n + 64]).norm() < 1e-12);
                assert!((sym[80 + n] - sym[16 + n]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn section_powers_match() {
        let m = OfdmModem::default();
        let q = Qam4::gray();
        let bits: Vec<u8> = (0..384).map(|i| ((i * 5) % 7 < 3) as u8).collect();
        let f = m.build_ue_frame(&bits, 1, &q).unwrap();
        let p = |r: std::ops::Range<usize>| {
            let n = r.len() as f64;
            f.samples[r].iter().map(|s| s.norm_sqr()).sum::<f64>() / n
        };
        let target = 40.0 / 64.0;
        assert!((p(0..64) - target).abs() < 1e-12);
        assert!((p(64..144) - target).abs() < 1e-9);
        assert!((p(160..224) - target).abs() < 1e-9);
        let body = &f.samples[304 + 16..304 + 80];
        let e: f64 = body.iter().map(|s| s.norm_sqr()).sum::<f64>() / 64.0;
        assert!((e - target).abs() < 1e-9);
    }
}
