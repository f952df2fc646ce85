use rand::Rng;

use super::machines::{ApAction, ApEvent, ApState, HubAction, HubState};
use super::{Envelope, EventQueue, Message, MessageKind, Node, ProtocolConfig, SimTime};
use crate::pnc::{MappingCatalog, PncError, SourceWord};

/// What one AP hands to the protocol after processing its frame. `sfs` is
/// `None` when the frame was not detected.
#[derive(Debug, Clone, PartialEq)]
pub struct ApInput {
    pub sfs: Option<usize>,
    pub words: Vec<SourceWord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundOutcome {
    Completed,
    FallbackUsed,
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MessageCounts {
    pub sfs: usize,
    pub mapping: usize,
    pub data: usize,
}

impl MessageCounts {
    fn bump(&mut self, k: MessageKind) {
        match k {
            MessageKind::Sfs => self.sfs += 1,
            MessageKind::Mapping => self.mapping += 1,
            MessageKind::Data => self.data += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: u64,
    pub outcome: RoundOutcome,
    /// Words recovered by the hub.
    pub words: Option<Vec<SourceWord>>,
    /// Mapping index chosen by the hub, if it heard both SFS reports.
    pub selected: Option<usize>,
    /// Mapping index each AP encoded with.
    pub used: [Option<usize>; 2],
    pub sent: MessageCounts,
    pub delivered: MessageCounts,
    pub integrity_errors: Vec<String>,
    pub finished_at: SimTime,
}

#[derive(Debug, Clone)]
enum Event {
    Deliver(Envelope),
    Timeout { ap: u8, round: u64 },
}

/// AP and hub state carried across rounds.
#[derive(Debug, Clone)]
pub struct Backhaul {
    pub config: ProtocolConfig,
    pub aps: [ApState; 2],
    pub hub: HubState,
    now: SimTime,
    round: u64,
    trace: Option<Vec<String>>,
}

impl Backhaul {
    pub fn new(config: ProtocolConfig) -> Self {
        Self {
            config,
            aps: [ApState::new(1), ApState::new(2)],
            hub: HubState::new(),
            now: SimTime(0),
            round: 0,
            trace: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn trace(&self) -> &[String] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    fn log(&mut self, t: SimTime, kind: &str, src: &str, dst: &str, payload: String) {
        if let Some(tr) = self.trace.as_mut() {
            tr.push(format!("{t} {kind} {src} {dst} {payload}"));
        }
    }

    fn transmit<R: Rng + ?Sized>(
        &mut self,
        q: &mut EventQueue<Event>,
        now: SimTime,
        env: Envelope,
        report: &mut RoundReport,
        rng: &mut R,
    ) {
        let kind = env.msg.kind();
        let p = self.config.loss.for_kind(kind);
        let air = self.config.airtime(kind);
        let proc = SimTime::from_secs(self.config.processing_s);
        let mut t = now;
        for _ in 0..self.config.replication {
            t = t + air;
            report.sent.bump(kind);
            let erased = if p <= 0.0 {
                false
            } else if p >= 1.0 {
                true
            } else {
                rng.gen::<f64>() < p
            };
            if erased {
                let (s, d) = (env.src.to_string(), env.dst.to_string());
                self.log(
                    t,
                    &format!("drop-{}", kind.name()),
                    &s,
                    &d,
                    env.msg_payload(),
                );
            } else {
                q.push(t + proc, Event::Deliver(env.clone()));
            }
        }
    }

    /// Runs one full exchange and returns when no events remain.
    pub fn run_round<R: Rng + ?Sized>(
        &mut self,
        inputs: [ApInput; 2],
        cat: &MappingCatalog,
        rng: &mut R,
    ) -> Result<RoundReport, PncError> {
        let round = self.round;
        self.round += 1;
        let start = self.now;
        let timeout = SimTime::from_secs(self.config.timeout_s);
        let mut report = RoundReport {
            round,
            outcome: RoundOutcome::Stalled,
            words: None,
            selected: None,
            used: [None, None],
            sent: MessageCounts::default(),
            delivered: MessageCounts::default(),
            integrity_errors: Vec::new(),
            finished_at: start,
        };
        let mut fallback = false;
        let mut q: EventQueue<Event> = EventQueue::new();

        for (k, input) in inputs.into_iter().enumerate() {
            let Some(sfs) = input.sfs else {
                self.log(
                    start,
                    "stall",
                    &format!("ap{}", k + 1),
                    "-",
                    format!("round={round} no-frame"),
                );
                continue;
            };
            let ev = ApEvent::Frame {
                round,
                sfs,
                words: input.words,
            };
            let acts = self.aps[k].step(start, timeout, ev, cat)?;
            self.apply_ap(k, acts, start, &mut q, &mut report, &mut fallback, rng);
        }

        let mut end = start;
        while let Some(s) = q.pop() {
            let now = s.time;
            match s.event {
                Event::Deliver(env) => {
                    end = now;
                    report.delivered.bump(env.msg.kind());
                    let (src, dst) = (env.src.to_string(), env.dst.to_string());
                    self.log(now, env.msg.kind().name(), &src, &dst, env.msg_payload());
                    match env.dst {
                        Node::Hub => {
                            let acts = self.hub.step(env.round, &env.msg, cat);
                            for a in acts {
                                match a {
                                    HubAction::Send { dst, round, msg } => {
                                        if let Message::MappingIndex { mapping } = msg {
                                            report.selected = Some(mapping);
                                        }
                                        let e = Envelope {
                                            round,
                                            src: Node::Hub,
                                            dst,
                                            msg,
                                        };
                                        self.transmit(&mut q, now, e, &mut report, rng);
                                    }
                                    HubAction::Decoded { words, .. } => {
                                        self.log(
                                            now,
                                            "decode",
                                            "hub",
                                            "-",
                                            format!("round={round} units={}", words.len()),
                                        );
                                        report.words = Some(words);
                                    }
                                    HubAction::IntegrityError { reason, .. } => {
                                        self.log(
                                            now,
                                            "integrity",
                                            "hub",
                                            "-",
                                            format!("round={round} {reason}"),
                                        );
                                        report.integrity_errors.push(reason);
                                    }
                                }
                            }
                        }
                        Node::Ap(id) => {
                            if let Message::MappingIndex { mapping } = env.msg {
                                let k = usize::from(id - 1);
                                let ev = ApEvent::Mapping {
                                    round: env.round,
                                    mapping,
                                };
                                let acts = self.aps[k].step(now, timeout, ev, cat)?;
                                self.apply_ap(
                                    k,
                                    acts,
                                    now,
                                    &mut q,
                                    &mut report,
                                    &mut fallback,
                                    rng,
                                );
                            }
                        }
                    }
                }
                Event::Timeout { ap, round: r } => {
                    let k = usize::from(ap - 1);
                    if self.aps[k].deadline() != Some(now) {
                        continue;
                    }
                    end = now;
                    self.log(
                        now,
                        "timeout",
                        &format!("ap{ap}"),
                        "-",
                        format!("round={r}"),
                    );
                    let acts =
                        self.aps[k].step(now, timeout, ApEvent::Timeout { round: r }, cat)?;
                    self.apply_ap(k, acts, now, &mut q, &mut report, &mut fallback, rng);
                }
            }
        }

        report.outcome = match (&report.words, fallback) {
            (Some(_), false) => RoundOutcome::Completed,
            (Some(_), true) => RoundOutcome::FallbackUsed,
            (None, _) => RoundOutcome::Stalled,
        };
        report.finished_at = end;
        self.now = end;
        Ok(report)
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_ap<R: Rng + ?Sized>(
        &mut self,
        k: usize,
        acts: Vec<ApAction>,
        now: SimTime,
        q: &mut EventQueue<Event>,
        report: &mut RoundReport,
        fallback: &mut bool,
        rng: &mut R,
    ) {
        let id = (k + 1) as u8;
        for a in acts {
            match a {
                ApAction::Send { dst, round, msg } => {
                    if let Message::NcsData { mapping, .. } = msg {
                        report.used[k] = Some(mapping);
                    }
                    let e = Envelope {
                        round,
                        src: Node::Ap(id),
                        dst,
                        msg,
                    };
                    self.transmit(q, now, e, report, rng);
                }
                ApAction::ArmTimeout { round, at } => q.push(at, Event::Timeout { ap: id, round }),
                ApAction::FallbackUsed { round, mapping } => {
                    *fallback = true;
                    self.log(
                        now,
                        "fallback",
                        &format!("ap{id}"),
                        "-",
                        format!("round={round} mapping={mapping}"),
                    );
                }
                ApAction::Stall { round } => {
                    self.log(
                        now,
                        "stall",
                        &format!("ap{id}"),
                        "-",
                        format!("round={round}"),
                    );
                }
            }
        }
    }
}

impl Envelope {
    fn msg_payload(&self) -> String {
        self.msg.payload(self.round)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pnc::{offline_search, pnc_encode, Qam4, DEFAULT_TOLERANCE};
    use crate::protocol::LossProfile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cat() -> MappingCatalog {
        offline_search(&Qam4::gray(), DEFAULT_TOLERANCE)
            .unwrap()
            .catalog
    }

    fn inputs(i: usize, j: usize) -> [ApInput; 2] {
        let w: Vec<SourceWord> = SourceWord::all().collect();
        [
            ApInput {
                sfs: Some(i),
                words: w.clone(),
            },
            ApInput {
                sfs: Some(j),
                words: w,
            },
        ]
    }

    fn cfg(r: usize, loss: LossProfile) -> ProtocolConfig {
        ProtocolConfig {
            replication: r,
            loss,
            ..ProtocolConfig::default()
        }
    }

    #[test]
    fn lossless_single_copy_round() {
        let cat = cat();
        let mut bh = Backhaul::new(cfg(1, LossProfile::none())).with_trace();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = bh.run_round(inputs(3, 1), &cat, &mut rng).unwrap();
        assert_eq!(r.outcome, RoundOutcome::Completed);
        assert_eq!(r.selected, Some(11));
        assert_eq!(r.used, [Some(11), Some(11)]);
        assert_eq!(
            r.delivered,
            MessageCounts {
                sfs: 2,
                mapping: 2,
                data: 2
            }
        );
        assert_eq!(r.words.unwrap(), SourceWord::all().collect::<Vec<_>>());
        assert_eq!(bh.trace().len(), 7);
        assert!(
            bh.trace()[0].starts_with("0.001560000 sfs ap1 hub round=0 sfs=3"),
            "{}",
            bh.trace()[0]
        );
        assert!(r.finished_at < SimTime::from_secs(0.1));
    }

    #[test]
    fn replicated_copies_are_idempotent() {
        let cat = cat();
        let mut bh = Backhaul::new(cfg(4, LossProfile::none()));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = bh.run_round(inputs(4, 4), &cat, &mut rng).unwrap();
        assert_eq!(r.outcome, RoundOutcome::Completed);
        assert_eq!(r.selected, Some(19));
        assert_eq!(
            r.sent,
            MessageCounts {
                sfs: 8,
                mapping: 8,
                data: 8
            }
        );
    }

    #[test]
    fn lost_reply_falls_back_to_previous_mapping() {
        let cat = cat();
        let mut bh = Backhaul::new(cfg(2, LossProfile::none()));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let first = bh.run_round(inputs(4, 4), &cat, &mut rng).unwrap();
        assert_eq!(first.outcome, RoundOutcome::Completed);
        bh.config.loss = LossProfile {
            mapping: 1.0,
            ..LossProfile::none()
        };
        let r = bh.run_round(inputs(4, 4), &cat, &mut rng).unwrap();
        assert_eq!(r.outcome, RoundOutcome::FallbackUsed);
        assert_eq!(r.used, [Some(19), Some(19)]);
        assert_eq!(r.words.unwrap(), SourceWord::all().collect::<Vec<_>>());
        assert!(r.finished_at >= first.finished_at + SimTime::from_secs(1.0));
    }

    #[test]
    fn lost_reply_without_history_stalls() {
        let cat = cat();
        let loss = LossProfile {
            mapping: 1.0,
            ..LossProfile::none()
        };
        let mut bh = Backhaul::new(cfg(4, loss)).with_trace();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = bh.run_round(inputs(2, 5), &cat, &mut rng).unwrap();
        assert_eq!(r.outcome, RoundOutcome::Stalled);
        assert_eq!(r.delivered.data, 0);
        assert!(bh.trace().iter().any(|l| l.contains(" stall ap1 ")));
    }

    #[test]
    fn undetected_frame_stalls() {
        let cat = cat();
        let mut bh = Backhaul::new(ProtocolConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut inp = inputs(1, 1);
        inp[1].sfs = None;
        assert_eq!(
            bh.run_round(inp, &cat, &mut rng).unwrap().outcome,
            RoundOutcome::Stalled
        );
    }

    #[test]
    fn fallback_to_different_mappings_is_checked() {
        let cat = cat();
        let mut bh = Backhaul::new(cfg(1, LossProfile::none()));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        bh.run_round(inputs(1, 1), &cat, &mut rng).unwrap();
        bh.aps[1].last_mapping = Some(2);
        bh.config.loss.mapping = 1.0;
        let r = bh.run_round(inputs(5, 5), &cat, &mut rng).unwrap();
        let ok = crate::protocol::machines::combined_for(&cat, 1, 2).is_ok();
        assert_eq!(r.outcome == RoundOutcome::FallbackUsed, ok);
        if let Some(words) = r.words {
            // mixed halves still invert exactly
            let top = cat.by_mapping_index(1).unwrap().top();
            assert_eq!(words.len(), 16);
            let _ = pnc_encode(&top, words[0]).unwrap();
        }
    }

    #[test]
    fn completion_rate_matches_erasure_arithmetic() {
        let cat = cat();
        let (p, r) = (0.5, 8usize);
        let mut bh = Backhaul::new(cfg(r, LossProfile::uniform(p)));
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 10_000;
        let mut completed = 0;
        for _ in 0..n {
            let rep = bh.run_round(inputs(3, 1), &cat, &mut rng).unwrap();
            if rep.outcome == RoundOutcome::Completed {
                completed += 1;
            }
        }
        let rate = completed as f64 / n as f64;
        let want = (1.0 - p.powi(r as i32)).powi(6);
        let sd = (want * (1.0 - want) / n as f64).sqrt();
        assert!((rate - want).abs() < 4.0 * sd, "{rate} vs {want}");
        // each direction succeeds with probability 1 - p^R per AP
        assert!(rate >= (1.0 - 2.0 * p.powi(r as i32)).powi(3) - 4.0 * sd);
    }

    #[test]
    fn deterministic_trace() {
        let cat = cat();
        let run = || {
            let mut bh = Backhaul::new(cfg(3, LossProfile::uniform(0.4))).with_trace();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let outs: Vec<RoundOutcome> = (0..30)
                .map(|_| bh.run_round(inputs(2, 3), &cat, &mut rng).unwrap().outcome)
                .collect();
            (outs, bh.trace().to_vec())
        };
        assert_eq!(run(), run());
    }
}
