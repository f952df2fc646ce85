//! Access-link channel: flat gain, CFO, sample delay and AWGN.
//!
//! `y = h1·delay(cfo(s1)) + h2·delay(cfo(s2)) + z`. Eb/N0 is referenced to
//! unit symbol energy per UE per subcarrier, so with 4-QAM `Eb = 1/2` and the
//! noise variance per real dimension is `N0/2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("delay difference {0} samples is outside the CP tolerance of {1}")]
    DelayOutOfRange(f64, usize),
    #[error("channel gain {0} is not finite")]
    NonFiniteGain(Complex64),
    #[error("frames have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("SNR undefined for a zero signal")]
    ZeroSignal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkChannel {
    pub h: Complex64,
    /// Signed delay in samples, may be fractional.
    pub delay: f64,
    pub cfo_hz: f64,
}

impl LinkChannel {
    pub fn flat(h: Complex64) -> Self {
        Self {
            h,
            delay: 0.0,
            cfo_hz: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    Fixed(Complex64),
    /// Circularly-symmetric complex Gaussian, unit mean square, redrawn per
    /// link per packet.
    RayleighBlock,
}

/// Draws a flat link with no delay or CFO.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R, model: FadingModel) -> LinkChannel {
    match model {
        FadingModel::Fixed(h) => LinkChannel::flat(h),
        FadingModel::RayleighBlock => LinkChannel::flat(complex_gaussian(rng, 0.5)),
    }
}

/// `N(0, var)` in each real dimension.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var_per_dim: f64) -> Complex64 {
    let s = var_per_dim.sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub ebno_db: f64,
    pub bits_per_symbol: u32,
    pub symbol_energy: f64,
}

impl NoiseSpec {
    pub fn new(ebno_db: f64) -> Self {
        Self {
            ebno_db,
            bits_per_symbol: 2,
            symbol_energy: 1.0,
        }
    }

    pub fn eb(&self) -> f64 {
        self.symbol_energy / self.bits_per_symbol as f64
    }

    pub fn n0(&self) -> f64 {
        self.eb() / 10f64.powf(self.ebno_db / 10.0)
    }

    /// σ² per real dimension.
    pub fn sigma2(&self) -> f64 {
        self.n0() / 2.0
    }

    pub fn esno_db(&self) -> f64 {
        self.ebno_db + 10.0 * (self.bits_per_symbol as f64).log10()
    }
}

/// Multiplies sample `n` by `exp(j2π·cfo·n/fs)`.
pub fn cfo_shift(x: &[Complex64], cfo_hz: f64, sample_rate: f64) -> Vec<Complex64> {
    let w = 2.0 * PI * cfo_hz / sample_rate;
    x.iter()
        .enumerate()
        .map(|(n, &v)| v * Complex64::from_polar(1.0, w * n as f64))
        .collect()
}

/// `out[n] = x(n − d)`, same length as `x`. Integer delays are exact shifts
/// with zero fill; fractional delays use ideal band-limited interpolation
/// over a zero-padded FFT.
pub fn delay_shift(x: &[Complex64], d: f64) -> Vec<Complex64> {
    let n = x.len();
    let di = d.round();
    if (d - di).abs() < 1e-12 {
        let di = di as i64;
        return (0..n as i64)
            .map(|i| {
                let j = i - di;
                if j >= 0 && (j as usize) < n {
                    x[j as usize]
                } else {
                    Complex64::default()
                }
            })
            .collect();
    }
    let pad = (n + 2 * (d.abs().ceil() as usize) + 256).next_power_of_two();
    let mut buf = x.to_vec();
    buf.resize(pad, Complex64::default());
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(pad).process(&mut buf);
    for (m, v) in buf.iter_mut().enumerate() {
        let f = if 2 * m < pad {
            m as f64
        } else {
            m as f64 - pad as f64
        };
        if 2 * m == pad {
            *v *= (PI * d).cos();
        } else {
            *v *= Complex64::from_polar(1.0, -2.0 * PI * f * d / pad as f64);
        }
    }
    planner.plan_fft_inverse(pad).process(&mut buf);
    let s = 1.0 / pad as f64;
    buf.truncate(n);
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

fn propagate(x: &[Complex64], ch: &LinkChannel, sample_rate: f64) -> Vec<Complex64> {
    let shifted = if ch.cfo_hz == 0.0 {
        x.to_vec()
    } else {
        cfo_shift(x, ch.cfo_hz, sample_rate)
    };
    let delayed = if ch.delay == 0.0 {
        shifted
    } else {
        delay_shift(&shifted, ch.delay)
    };
    delayed.into_iter().map(|v| v * ch.h).collect()
}

/// Received samples at one AP. The output has the frames' length; noise
/// is added when `noise` is given.
#[allow(clippy::too_many_arguments)]
pub fn apply_access_link<R: Rng + ?Sized>(
    f1: &[Complex64],
    f2: &[Complex64],
    ch1: &LinkChannel,
    ch2: &LinkChannel,
    noise: Option<&NoiseSpec>,
    sample_rate: f64,
    cp_len: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>, ChannelError> {
    if f1.len() != f2.len() {
        return Err(ChannelError::LengthMismatch(f1.len(), f2.len()));
    }
    for ch in [ch1, ch2] {
        if !ch.h.re.is_finite() || !ch.h.im.is_finite() {
            return Err(ChannelError::NonFiniteGain(ch.h));
        }
    }
    let dd = ch2.delay - ch1.delay;
    if !(dd.abs() < cp_len as f64) {
        return Err(ChannelError::DelayOutOfRange(dd, cp_len));
    }
    let mut y = propagate(f1, ch1, sample_rate);
    if ch2.h != Complex64::default() {
        for (a, b) in y.iter_mut().zip(propagate(f2, ch2, sample_rate)) {
            *a += b;
        }
    }
    if let Some(ns) = noise {
        let var = ns.sigma2();
        for v in y.iter_mut() {
            *v += complex_gaussian(rng, var);
        }
    }
    Ok(y)
}

/// `10·log10(Σ|clean|² / Σ|noisy − clean|²)`; `+inf` when identical.
pub fn measured_snr(clean: &[Complex64], noisy: &[Complex64]) -> Result<f64, ChannelError> {
    if clean.len() != noisy.len() {
        return Err(ChannelError::LengthMismatch(clean.len(), noisy.len()));
    }
    let ps: f64 = clean.iter().map(|v| v.norm_sqr()).sum();
    if ps == 0.0 {
        return Err(ChannelError::ZeroSignal);
    }
    let pn: f64 = clean
        .iter()
        .zip(noisy)
        .map(|(a, b)| (b - a).norm_sqr())
        .sum();
    if pn == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (ps / pn).log10())
}
