use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ChannelKind, CsiMode, SimConfig};
use super::SimError;
use crate::channel::{apply_access_link, complex_gaussian, LinkChannel, NoiseSpec};
use crate::ofdm::{carrier_bin, correct_cfo, ChannelEstimate, OfdmModem, PilotMap, SubcarrierGrid};
use crate::pnc::{
    ap_detect_word, offline_search, MappingCatalog, Qam4, SourceWord, DEFAULT_TOLERANCE,
};
use crate::protocol::{ApInput, Backhaul, RoundOutcome};

/// Zero samples before and after the frames in each received buffer.
pub(crate) const LEAD: usize = 32;
const TAIL: usize = 32;

/// Everything random about one trial except the noise, drawn in a fixed
/// order so that every configuration sees the same values.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDraw {
    /// 4-QAM labels per UE, `labels[ue − 1][s * n_data + c]`.
    pub labels: [Vec<u8>; 2],
    /// `links[ap − 1][ue − 1]`.
    pub links: [[LinkChannel; 2]; 2],
}

/// One AP's view of a received frame.
#[derive(Debug, Clone)]
pub struct ApView {
    pub grid: SubcarrierGrid,
    pub csi: ChannelEstimate,
    pub ratio: Complex64,
    pub sfs: usize,
    pub words: Vec<SourceWord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialResult {
    pub symbols: u64,
    /// Joint-word errors after the hub.
    pub errors: u64,
    pub ue_errors: [u64; 2],
    pub baseline_errors: u64,
    pub completed: u64,
    pub fallback: u64,
    pub stalled: u64,
    /// Rounds where at least one AP missed the frame.
    pub undetected: u64,
    /// Stalled rounds in which both APs detected their frame.
    pub backhaul_stalls: u64,
    pub integrity_errors: u64,
}

impl std::ops::AddAssign for TrialResult {
    fn add_assign(&mut self, o: Self) {
        self.symbols += o.symbols;
        self.errors += o.errors;
        self.ue_errors[0] += o.ue_errors[0];
        self.ue_errors[1] += o.ue_errors[1];
        self.baseline_errors += o.baseline_errors;
        self.completed += o.completed;
        self.fallback += o.fallback;
        self.stalled += o.stalled;
        self.undetected += o.undetected;
        self.backhaul_stalls += o.backhaul_stalls;
        self.integrity_errors += o.integrity_errors;
    }
}

/// Shared, read-only state for running trials.
#[derive(Clone)]
pub struct Simulator {
    pub cfg: SimConfig,
    pub modem: OfdmModem,
    pub catalog: MappingCatalog,
    data_carriers: Vec<usize>,
}

impl Simulator {
    /// Validates `cfg` and runs the offline search for the catalog.
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let catalog = offline_search(&Qam4::gray(), DEFAULT_TOLERANCE)?.catalog;
        Self::with_catalog(cfg, catalog)
    }

    pub fn with_catalog(cfg: SimConfig, catalog: MappingCatalog) -> Result<Self, SimError> {
        cfg.validate()?;
        let modem = OfdmModem::new(cfg.system.frame_spec(), PilotMap::default())?;
        let data_carriers = modem.pilot_map().data_carriers();
        Ok(Self {
            cfg,
            modem,
            catalog,
            data_carriers,
        })
    }

    pub fn qam(&self) -> &Qam4 {
        self.catalog.constellation()
    }

    fn units(&self) -> usize {
        self.data_carriers.len() * self.modem.spec().data_symbols
    }

    /// RNG for the draws and noise of trial `t`.
    pub fn trial_rng(&self, t: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(t);
        rng
    }

    /// RNG for the backhaul erasures of session `s`.
    pub fn session_rng(&self, s: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ 0x5eed_ba5e_0000_0001);
        rng.set_stream(s);
        rng
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> TrialDraw {
        let n = self.units();
        let labels = [
            (0..n).map(|_| rng.gen_range(0..4u8)).collect(),
            (0..n).map(|_| rng.gen_range(0..4u8)).collect(),
        ];
        let fixed = self.cfg.fixed_gains();
        let im = &self.cfg.impairments;
        let mut links = [[LinkChannel::flat(Complex64::default()); 2]; 2];
        for (ap, row) in links.iter_mut().enumerate() {
            let g = [complex_gaussian(rng, 0.5), complex_gaussian(rng, 0.5)];
            let cfo: f64 = rng.gen_range(-1.0..=1.0);
            let dmax = im.delay_max as i64;
            let d_int = rng.gen_range(-dmax..=dmax) as f64;
            let frac: [f64; 2] = [rng.gen_range(0.0..=0.5), rng.gen_range(0.0..=0.5)];
            for ue in 0..2 {
                let h = match self.cfg.channel {
                    ChannelKind::Fixed => fixed[ap][ue],
                    ChannelKind::Rayleigh => g[ue],
                };
                let mut delay = if im.sco { frac[ue] } else { 0.0 };
                if ue == 1 && im.delay {
                    delay += d_int;
                }
                row[ue] = LinkChannel {
                    h,
                    delay,
                    cfo_hz: if im.cfo { cfo * im.cfo_max_hz } else { 0.0 },
                };
            }
        }
        TrialDraw { labels, links }
    }

    /// Transmitted UE frames, padded with leading and trailing zeros.
    pub fn tx_frames(&self, draw: &TrialDraw) -> Result<[Vec<Complex64>; 2], SimError> {
        let mut out: [Vec<Complex64>; 2] = Default::default();
        for ue in 0..2 {
            let f = self.modem.build_ue_frame_from_labels(
                &draw.labels[ue],
                ue as u8 + 1,
                self.qam(),
            )?;
            let mut s = vec![Complex64::default(); LEAD];
            s.extend_from_slice(&f.samples);
            s.resize(s.len() + TAIL, Complex64::default());
            out[ue] = s;
        }
        Ok(out)
    }

    /// Received samples at AP `ap` (0-based). `noise` of `None` is noiseless.
    pub fn receive<R: Rng + ?Sized>(
        &self,
        frames: &[Vec<Complex64>; 2],
        draw: &TrialDraw,
        ap: usize,
        noise: Option<&NoiseSpec>,
        rng: &mut R,
    ) -> Result<Vec<Complex64>, SimError> {
        let spec = self.modem.spec();
        let [l1, l2] = &draw.links[ap];
        Ok(apply_access_link(
            &frames[0],
            &frames[1],
            l1,
            l2,
            noise,
            spec.sample_rate,
            spec.cp_len,
            rng,
        )?)
    }

    /// Channel seen on each carrier after ideal timing and CFO correction.
    pub fn true_csi(&self, links: &[LinkChannel; 2]) -> ChannelEstimate {
        let spec = self.modem.spec();
        let n = spec.fft_len;
        let mut h: [Vec<Complex64>; 2] = Default::default();
        let mut phi = [0.0; 2];
        for ue in 0..2 {
            let l = &links[ue];
            let common =
                l.h * Complex64::from_polar(1.0, -2.0 * PI * l.cfo_hz * l.delay / spec.sample_rate);
            phi[ue] = -2.0 * PI * l.delay / n as f64;
            h[ue] = (1..=n)
                .map(|k| common * Complex64::from_polar(1.0, phi[ue] * carrier_bin(k) as f64))
                .collect();
        }
        let pm = self.modem.pilot_map();
        let pilot_h = [1u8, 2].map(|ue| {
            pm.pilots(ue)
                .iter()
                .map(|&p| (p, h[usize::from(ue - 1)][p - 1]))
                .collect()
        });
        ChannelEstimate { h, pilot_h, phi }
    }

    /// Synchronizes, estimates and detects one AP's frame. `None` when the
    /// frame is not detected.
    pub fn process_ap(
        &self,
        rx: &[Complex64],
        links: &[LinkChannel; 2],
        mode: CsiMode,
    ) -> Result<Option<ApView>, SimError> {
        let fs = self.modem.spec().sample_rate;
        let (grid, csi) = match mode {
            CsiMode::Perfect => {
                let y = correct_cfo(rx, links[0].cfo_hz, fs);
                (self.modem.demodulate_ofdm(&y, LEAD)?, self.true_csi(links))
            }
            CsiMode::Estimated => {
                let Ok(off) = self.modem.detect_frame(rx) else {
                    return Ok(None);
                };
                let cfo = self.modem.estimate_cfo(rx, off)?;
                let y = correct_cfo(rx, cfo, fs);
                let grid = self.modem.demodulate_ofdm(&y, off)?;
                let csi = self
                    .modem
                    .estimate_channels_and_sco(&grid, self.cfg.pilot_symbols)?;
                (grid, csi)
            }
        };
        let ratio = csi
            .ratios()
            .map_or(Complex64::new(f64::INFINITY, f64::INFINITY), |r| r.mean);
        let sfs = self.catalog.sfs().nearest(ratio);
        let mut words = Vec::with_capacity(self.units());
        for s in 0..grid.num_symbols() {
            for &k in &self.data_carriers {
                let h = [csi.at(1, k), csi.at(2, k)];
                words.push(ap_detect_word(grid.get(s, k), h, self.qam()));
            }
        }
        Ok(Some(ApView {
            grid,
            csi,
            ratio,
            sfs,
            words,
        }))
    }

    /// Joint ML over both APs' observations; units where no AP detected
    /// the frame come back as `None`.
    pub fn comp_detect(&self, views: &[Option<ApView>; 2]) -> Option<Vec<SourceWord>> {
        let avail: Vec<&ApView> = views.iter().flatten().collect();
        if avail.is_empty() {
            return None;
        }
        let c = self.qam();
        let mut out = Vec::with_capacity(self.units());
        for s in 0..avail[0].grid.num_symbols() {
            for &k in &self.data_carriers {
                let mut best = (f64::INFINITY, SourceWord::from_labels(0, 0));
                for w in SourceWord::all() {
                    let (x1, x2) = (c.point(w.ue1()), c.point(w.ue2()));
                    let m: f64 = avail
                        .iter()
                        .map(|v| {
                            (v.grid.get(s, k) - v.csi.at(1, k) * x1 - v.csi.at(2, k) * x2)
                                .norm_sqr()
                        })
                        .sum();
                    if m < best.0 {
                        best = (m, w);
                    }
                }
                out.push(best.1);
            }
        }
        Some(out)
    }

    /// Runs trial `t` at `ebno_db` through `backhaul`, which carries the
    /// fallback mapping between trials of one session.
    pub fn run_trial<R: Rng + ?Sized>(
        &self,
        ebno_db: f64,
        t: u64,
        backhaul: &mut Backhaul,
        proto_rng: &mut R,
    ) -> Result<TrialResult, SimError> {
        let mut rng = self.trial_rng(t);
        let draw = self.draw(&mut rng);
        let frames = self.tx_frames(&draw)?;
        let noise = NoiseSpec::new(ebno_db);
        let mut views: [Option<ApView>; 2] = [None, None];
        for (ap, v) in views.iter_mut().enumerate() {
            let rx = self.receive(&frames, &draw, ap, Some(&noise), &mut rng)?;
            *v = self.process_ap(&rx, &draw.links[ap], self.cfg.csi)?;
        }

        let truth: Vec<SourceWord> = draw.labels[0]
            .iter()
            .zip(&draw.labels[1])
            .map(|(&a, &b)| SourceWord::from_labels(a, b))
            .collect();
        let n = truth.len() as u64;
        let mut res = TrialResult {
            symbols: n,
            ..Default::default()
        };

        let inputs = views.clone().map(|v| match v {
            Some(v) => ApInput {
                sfs: Some(v.sfs),
                words: v.words,
            },
            None => ApInput {
                sfs: None,
                words: Vec::new(),
            },
        });
        let report = backhaul.run_round(inputs, &self.catalog, proto_rng)?;
        match report.outcome {
            RoundOutcome::Completed => res.completed = 1,
            RoundOutcome::FallbackUsed => res.fallback = 1,
            RoundOutcome::Stalled => res.stalled = 1,
        }
        res.undetected = u64::from(views.iter().any(Option::is_none));
        res.backhaul_stalls = res.stalled * (1 - res.undetected);
        res.integrity_errors = report.integrity_errors.len() as u64;
        match report.words {
            Some(words) if words.len() == truth.len() => {
                for (w, t) in words.iter().zip(&truth) {
                    res.errors += u64::from(w != t);
                    res.ue_errors[0] += u64::from(w.ue1() != t.ue1());
                    res.ue_errors[1] += u64::from(w.ue2() != t.ue2());
                }
            }
            _ => {
                res.errors = n;
                res.ue_errors = [n, n];
            }
        }
        res.baseline_errors = match self.comp_detect(&views) {
            Some(words) => words.iter().zip(&truth).filter(|(w, t)| w != t).count() as u64,
            None => n,
        };
        Ok(res)
    }
}
