use std::f64::consts::PI;

use num_complex::Complex64;

use super::{OfdmError, OfdmModem, PilotMap, SubcarrierGrid, PILOT};

/// |h1| below this makes a channel ratio meaningless.
pub const DEGENERATE_GAIN: f64 = 1e-12;

const PHI_GRID: usize = 4096;

/// Per-UE channel estimates on all 64 carriers plus the per-carrier phase
/// increment `phi` caused by residual timing offset.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// `h[ue − 1][k − 1]`.
    pub h: [Vec<Complex64>; 2],
    /// Least-squares estimates on each UE's own pilots, `(carrier, h)`.
    pub pilot_h: [Vec<(usize, Complex64)>; 2],
    pub phi: [f64; 2],
}

impl ChannelEstimate {
    pub fn at(&self, ue: u8, carrier: usize) -> Complex64 {
        self.h[usize::from(ue - 1)][carrier - 1]
    }

    /// `ĥ2/ĥ1` per pilot pair, both evaluated on the UE1 pilot carrier.
    pub fn ratios(&self) -> Result<PairRatios, OfdmError> {
        let mut ratios = Vec::with_capacity(self.pilot_h[0].len());
        for (&(p1, h1), &(p2, h2)) in self.pilot_h[0].iter().zip(&self.pilot_h[1]) {
            if h1.norm() < DEGENERATE_GAIN {
                return Err(OfdmError::DegenerateChannel(h1.norm()));
            }
            let h2_at_p1 = h2 * Complex64::from_polar(1.0, self.phi[1] * (p1 as f64 - p2 as f64));
            ratios.push(h2_at_p1 / h1);
        }
        let mean = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
        Ok(PairRatios { ratios, mean })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRatios {
    pub ratios: Vec<Complex64>,
    /// Average over pilot pairs; used for the per-frame SFS decision.
    pub mean: Complex64,
}

/// Slope of the pilot phase across carriers. A periodogram picks the
/// unaliased slope, then a weighted line fit on the residual phase refines
/// it.
pub fn estimate_phase_slope(pilots: &[(usize, Complex64)]) -> f64 {
    let power = |phi: f64| -> f64 {
        pilots
            .iter()
            .map(|&(k, g)| g * Complex64::from_polar(1.0, -phi * k as f64))
            .sum::<Complex64>()
            .norm_sqr()
    };
    let mut phi = 0.0;
    let mut best = power(0.0);
    for i in 0..PHI_GRID {
        let cand = -PI + 2.0 * PI * i as f64 / PHI_GRID as f64;
        let p = power(cand);
        if p > best {
            best = p;
            phi = cand;
        }
    }
    for _ in 0..2 {
        let rot: Vec<(f64, Complex64)> = pilots
            .iter()
            .map(|&(k, g)| (k as f64, g * Complex64::from_polar(1.0, -phi * k as f64)))
            .collect();
        let common: Complex64 = rot.iter().map(|r| r.1).sum();
        let pts: Vec<(f64, f64, f64)> = rot
            .iter()
            .map(|&(k, r)| (k, (r * common.conj()).arg(), r.norm()))
            .collect();
        let w: f64 = pts.iter().map(|p| p.2).sum();
        if w <= 0.0 {
            break;
        }
        let kbar = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / w;
        let ybar = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / w;
        let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - kbar) * (p.1 - ybar)).sum();
        let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - kbar).powi(2)).sum();
        if sxx <= 0.0 {
            break;
        }
        phi += sxy / sxx;
    }
    phi
}

impl OfdmModem {
    /// Pilot-based channel and phase-slope estimation from the first
    /// `pilot_symbols` data symbols.
    pub fn estimate_channels_and_sco(
        &self,
        grid: &SubcarrierGrid,
        pilot_symbols: usize,
    ) -> Result<ChannelEstimate, OfdmError> {
        let n_sym = pilot_symbols.max(1);
        if grid.num_symbols() < n_sym {
            return Err(OfdmError::GridTooShort {
                got: grid.num_symbols(),
                needed: n_sym,
            });
        }
        let map = self.pilot_map();
        let mut h: [Vec<Complex64>; 2] = [Vec::new(), Vec::new()];
        let mut pilot_h: [Vec<(usize, Complex64)>; 2] = [Vec::new(), Vec::new()];
        let mut phi = [0.0; 2];
        for ue in 1..=2u8 {
            let u = usize::from(ue - 1);
            let est: Vec<(usize, Complex64)> = map
                .pilots(ue)
                .iter()
                .map(|&k| {
                    let s: Complex64 = (0..n_sym).map(|i| grid.get(i, k)).sum();
                    (k, s / (n_sym as f64 * PILOT))
                })
                .collect();
            if est.iter().all(|p| p.1.norm() == 0.0) {
                return Err(OfdmError::ZeroPilots);
            }
            let slope = estimate_phase_slope(&est);
            h[u] = (1..=self.spec().fft_len)
                .map(|k| {
                    if PilotMap::is_null(k) {
                        return Complex64::default();
                    }
                    let &(p, g) = est
                        .iter()
                        .min_by_key(|(p, _)| p.abs_diff(k))
                        .expect("eight pilots");
                    g * Complex64::from_polar(1.0, slope * (k as f64 - p as f64))
                })
                .collect();
            pilot_h[u] = est;
            phi[u] = slope;
        }
        Ok(ChannelEstimate { h, pilot_h, phi })
    }
}
