use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{SimConfig, StopRule};
use super::trial::{Simulator, TrialResult};
use super::SimError;
use crate::protocol::Backhaul;

/// Consecutive trials sharing one backhaul, so that a timed-out AP has a
/// previous mapping to fall back on.
pub const SESSION_LEN: u64 = 16;

/// Sessions run in parallel between early-stopping checks.
const WAVE_SESSIONS: u64 = 32;

/// Which error count drives early stopping and the `ser` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Pnc,
    Comp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerPoint {
    pub ebno_db: f64,
    pub trials: u64,
    pub totals: TrialResult,
}

impl SerPoint {
    pub fn ser(&self) -> f64 {
        ratio(self.totals.errors, self.totals.symbols)
    }

    pub fn baseline_ser(&self) -> f64 {
        ratio(self.totals.baseline_errors, self.totals.symbols)
    }

    pub fn ue_ser(&self, ue: u8) -> f64 {
        ratio(
            self.totals.ue_errors[usize::from(ue - 1)],
            self.totals.symbols,
        )
    }

    pub fn stall_rate(&self) -> f64 {
        ratio(self.totals.stalled, self.trials)
    }

    /// Stalls not explained by a missed frame.
    pub fn backhaul_stall_rate(&self) -> f64 {
        ratio(self.totals.backhaul_stalls, self.trials)
    }

    pub fn fallback_rate(&self) -> f64 {
        ratio(self.totals.fallback, self.trials)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// 95 % Wilson score half-width for `k` errors in `n` symbols.
pub fn wilson_halfwidth(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.5;
    }
    let z = 1.959_963_984_540_054_f64;
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / (1.0 + z2 / n_f)
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerRow {
    pub ebno_db: f64,
    pub symbols: u64,
    pub errors: u64,
    pub ser: f64,
    pub ci_halfwidth: f64,
    pub baseline_ser: f64,
    pub fallback_rate: f64,
    pub stall_rate: f64,
    pub ue1_ser: f64,
    pub ue2_ser: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerReport {
    pub target: Target,
    pub points: Vec<SerPoint>,
}

impl SerReport {
    /// `ser` is the target's SER, `baseline_ser` the other scheme's.
    pub fn rows(&self) -> Vec<SerRow> {
        self.points
            .iter()
            .map(|p| {
                let t = &p.totals;
                let (errors, other) = match self.target {
                    Target::Pnc => (t.errors, t.baseline_errors),
                    Target::Comp => (t.baseline_errors, t.errors),
                };
                SerRow {
                    ebno_db: p.ebno_db,
                    symbols: t.symbols,
                    errors,
                    ser: ratio(errors, t.symbols),
                    ci_halfwidth: wilson_halfwidth(errors, t.symbols),
                    baseline_ser: ratio(other, t.symbols),
                    fallback_rate: p.fallback_rate(),
                    stall_rate: p.stall_rate(),
                    ue1_ser: p.ue_ser(1),
                    ue2_ser: p.ue_ser(2),
                    trials: p.trials,
                }
            })
            .collect()
    }
}

pub fn write_ser_csv<W: Write>(out: W, report: &SerReport) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for row in report.rows() {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ser_csv<R: Read>(input: R) -> Result<Vec<SerRow>, SimError> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<Result<Vec<SerRow>, _>>()?;
    Ok(rows)
}

impl Simulator {
    fn run_session(
        &self,
        ebno_db: f64,
        session: u64,
        trials: u64,
    ) -> Result<TrialResult, SimError> {
        let mut bh = Backhaul::new(self.cfg.protocol());
        let mut prng = self.session_rng(session);
        let mut acc = TrialResult::default();
        let first = session * SESSION_LEN;
        for t in first..(first + SESSION_LEN).min(trials) {
            acc += self.run_trial(ebno_db, t, &mut bh, &mut prng)?;
        }
        Ok(acc)
    }

    /// All trials of one Eb/N0 point. Sessions run in parallel in waves;
    /// the stopping check happens between waves, so the result does not
    /// depend on thread count or scheduling.
    pub fn run_point(&self, ebno_db: f64, target: Target) -> Result<SerPoint, SimError> {
        let (target_errors, cap) = match self.cfg.stop_rule() {
            StopRule::Trials(n) => (u64::MAX, n),
            StopRule::ErrorEvents { target, max_trials } => (target, max_trials),
        };
        let n_sessions = cap.div_ceil(SESSION_LEN);
        let mut totals = TrialResult::default();
        let mut next = 0;
        while next < n_sessions {
            let end = (next + WAVE_SESSIONS).min(n_sessions);
            let parts: Vec<TrialResult> = (next..end)
                .into_par_iter()
                .map(|s| self.run_session(ebno_db, s, cap))
                .collect::<Result<_, _>>()?;
            for p in parts {
                totals += p;
            }
            next = end;
            let errs = match target {
                Target::Pnc => totals.errors,
                Target::Comp => totals.baseline_errors,
            };
            if errs >= target_errors {
                break;
            }
        }
        let trials = totals.completed + totals.fallback + totals.stalled;
        let p = SerPoint {
            ebno_db,
            trials,
            totals,
        };
        // missed frames at low SNR are reported, not fatal
        if p.backhaul_stall_rate() > 0.5 {
            return Err(SimError::TooManyStalls {
                ebno_db,
                rate: p.backhaul_stall_rate(),
            });
        }
        Ok(p)
    }

    pub fn run_sweep(&self, target: Target) -> Result<SerReport, SimError> {
        let points = self
            .cfg
            .ebno_db
            .iter()
            .map(|&e| self.run_point(e, target))
            .collect::<Result<_, _>>()?;
        Ok(SerReport { target, points })
    }
}

/// PNC SER sweep; `baseline_ser` holds CoMP on the same draws.
pub fn run_ser_sweep(cfg: &SimConfig) -> Result<SerReport, SimError> {
    Simulator::new(cfg.clone())?.run_sweep(Target::Pnc)
}

/// CoMP joint-ML sweep; `baseline_ser` holds PNC on the same draws.
pub fn run_comp_baseline(cfg: &SimConfig) -> Result<SerReport, SimError> {
    Simulator::new(cfg.clone())?.run_sweep(Target::Comp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::CsiMode;
    use proptest::prelude::*;

    fn cfg(trials: u64) -> SimConfig {
        SimConfig {
            ebno_db: vec![5.0, 15.0],
            trials: Some(trials),
            ..SimConfig::default()
        }
    }

    #[test]
    fn wilson_against_closed_form() {
        // k = 0: z²/(n + z²)
        let z2 = 1.959_963_984_540_054_f64.powi(2);
        let n = 1000;
        let expect = (z2 / (2.0 * n as f64)) / (1.0 + z2 / n as f64);
        assert!((wilson_halfwidth(0, n) - expect).abs() < 1e-15);
        // large n approaches the Wald interval
        let w = wilson_halfwidth(50_000, 1_000_000);
        let wald = 1.959_963_984_540_054 * (0.05f64 * 0.95 / 1e6).sqrt();
        assert!((w - wald).abs() / wald < 1e-3);
    }

    #[test]
    fn sweep_is_deterministic_and_thread_independent() {
        let sim = Simulator::new(cfg(40)).unwrap();
        let a = sim.run_sweep(Target::Pnc).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| sim.run_sweep(Target::Pnc)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points[0].trials, 40);
        assert_eq!(a.points[0].totals.symbols, 40 * 192);
    }

    #[test]
    fn error_event_stop_and_cap() {
        let mut c = cfg(1);
        c.trials = None;
        c.error_events = Some(1);
        c.max_trials = 10_000;
        c.ebno_db = vec![0.0];
        let p = Simulator::new(c.clone())
            .unwrap()
            .run_point(0.0, Target::Pnc)
            .unwrap();
        // stops after the first wave
        assert_eq!(p.trials, SESSION_LEN * WAVE_SESSIONS);
        c.error_events = Some(u64::MAX);
        c.max_trials = 20;
        let p = Simulator::new(c)
            .unwrap()
            .run_point(0.0, Target::Pnc)
            .unwrap();
        assert_eq!(p.trials, 20);
    }

    #[test]
    fn csv_round_trip() {
        let rep = Simulator::new(cfg(16))
            .unwrap()
            .run_sweep(Target::Pnc)
            .unwrap();
        let mut buf = Vec::new();
        write_ser_csv(&mut buf, &rep).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "ebno_db,symbols,errors,ser,ci_halfwidth,baseline_ser,fallback_rate,stall_rate"
        ));
        assert_eq!(read_ser_csv(&buf[..]).unwrap(), rep.rows());
    }

    #[test]
    fn comp_target_swaps_columns() {
        let sim = Simulator::new(cfg(16)).unwrap();
        let p = sim.run_sweep(Target::Pnc).unwrap();
        let c = sim.run_sweep(Target::Comp).unwrap();
        for (a, b) in p.rows().iter().zip(c.rows()) {
            assert_eq!(a.ser, b.baseline_ser);
            assert_eq!(a.baseline_ser, b.ser);
        }
    }

    #[test]
    fn heavy_loss_aborts() {
        let mut c = cfg(32);
        c.loss = 0.95;
        c.replication = 1;
        c.csi = CsiMode::Perfect;
        let e = Simulator::new(c)
            .unwrap()
            .run_sweep(Target::Pnc)
            .unwrap_err();
        assert!(matches!(e, SimError::TooManyStalls { .. }), "{e}");
    }

    proptest! {
        #[test]
        fn wilson_interval_is_inside_unit_range(n in 1u64..1_000_000, frac in 0.0f64..=1.0) {
            let k = (frac * n as f64) as u64;
            let h = wilson_halfwidth(k, n);
            let p = k as f64 / n as f64;
            let z2 = 1.959_963_984_540_054_f64.powi(2);
            let centre = (p + z2 / (2.0 * n as f64)) / (1.0 + z2 / n as f64);
            prop_assert!(h > 0.0 && h <= 0.5);
            prop_assert!(centre - h >= -1e-12 && centre + h <= 1.0 + 1e-12);
            prop_assert!(centre - h <= p + 1e-12 && p <= centre + h + 1e-12);
        }
    }
}
