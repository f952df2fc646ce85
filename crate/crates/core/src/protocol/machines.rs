use super::{Message, Node, SimTime};
use crate::gf2::Gf2Matrix;
use crate::pnc::{hub_decode, pnc_encode, MappingCatalog, Ncv, PncError, SourceWord};

#[derive(Debug, Clone, PartialEq)]
pub enum ApEvent {
    /// Frame processed: nearest SFS and the detected joint words.
    Frame {
        round: u64,
        sfs: usize,
        words: Vec<SourceWord>,
    },
    Mapping {
        round: u64,
        mapping: usize,
    },
    Timeout {
        round: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ApAction {
    Send { dst: Node, round: u64, msg: Message },
    ArmTimeout { round: u64, at: SimTime },
    FallbackUsed { round: u64, mapping: usize },
    Stall { round: u64 },
}

#[derive(Debug, Clone, PartialEq)]
struct Pending {
    round: u64,
    deadline: SimTime,
    words: Vec<SourceWord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApState {
    pub id: u8,
    pub last_mapping: Option<usize>,
    pending: Option<Pending>,
}

impl ApState {
    pub fn new(id: u8) -> Self {
        Self {
            id,
            last_mapping: None,
            pending: None,
        }
    }

    /// Deadline of the outstanding mapping request, if any.
    pub fn deadline(&self) -> Option<SimTime> {
        self.pending.as_ref().map(|p| p.deadline)
    }

    fn encode(
        &self,
        cat: &MappingCatalog,
        mapping: usize,
        words: &[SourceWord],
    ) -> Result<Vec<Ncv>, PncError> {
        let m = cat.by_mapping_index(mapping)?.half(usize::from(self.id));
        words.iter().map(|&w| pnc_encode(&m, w)).collect()
    }

    pub fn step(
        &mut self,
        now: SimTime,
        timeout: SimTime,
        event: ApEvent,
        cat: &MappingCatalog,
    ) -> Result<Vec<ApAction>, PncError> {
        let mut out = Vec::new();
        match event {
            ApEvent::Frame { round, sfs, words } => {
                let deadline = now + timeout;
                self.pending = Some(Pending {
                    round,
                    deadline,
                    words,
                });
                out.push(ApAction::Send {
                    dst: Node::Hub,
                    round,
                    msg: Message::SfsIndex { ap: self.id, sfs },
                });
                out.push(ApAction::ArmTimeout {
                    round,
                    at: deadline,
                });
            }
            ApEvent::Mapping { round, mapping } => {
                // late or duplicate replies find no matching request
                if let Some(p) = self.pending.take_if(|p| p.round == round) {
                    let ncvs = self.encode(cat, mapping, &p.words)?;
                    self.last_mapping = Some(mapping);
                    out.push(ApAction::Send {
                        dst: Node::Hub,
                        round,
                        msg: Message::NcsData {
                            ap: self.id,
                            mapping,
                            ncvs,
                        },
                    });
                }
            }
            ApEvent::Timeout { round } => {
                if let Some(p) = self
                    .pending
                    .take_if(|p| p.round == round && p.deadline <= now)
                {
                    match self.last_mapping {
                        Some(mapping) => {
                            let ncvs = self.encode(cat, mapping, &p.words)?;
                            out.push(ApAction::FallbackUsed { round, mapping });
                            out.push(ApAction::Send {
                                dst: Node::Hub,
                                round,
                                msg: Message::NcsData {
                                    ap: self.id,
                                    mapping,
                                    ncvs,
                                },
                            });
                        }
                        None => out.push(ApAction::Stall { round }),
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HubAction {
    Send { dst: Node, round: u64, msg: Message },
    Decoded { round: u64, words: Vec<SourceWord> },
    IntegrityError { round: u64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HubState {
    /// Round currently being served; later rounds reset the state.
    pub round: Option<u64>,
    pub received_sfs: [Option<usize>; 2],
    replied: bool,
    data: [Option<(usize, Vec<Ncv>)>; 2],
    done: bool,
}

impl HubState {
    pub fn new() -> Self {
        Self::default()
    }

    fn enter(&mut self, round: u64) -> bool {
        match self.round {
            Some(r) if r == round => true,
            Some(r) if r > round => false,
            _ => {
                *self = HubState {
                    round: Some(round),
                    ..HubState::default()
                };
                true
            }
        }
    }

    pub fn step(&mut self, round: u64, msg: &Message, cat: &MappingCatalog) -> Vec<HubAction> {
        let mut out = Vec::new();
        if !self.enter(round) {
            // stale round
            return out;
        }
        match msg {
            Message::SfsIndex { ap, sfs } => {
                let slot = &mut self.received_sfs[usize::from(ap - 1)];
                if slot.is_none() {
                    *slot = Some(*sfs);
                }
                if let ([Some(i), Some(j)], false) = (self.received_sfs, self.replied) {
                    self.replied = true;
                    match cat.entry(i, j) {
                        Ok(e) => {
                            let mapping = e.mapping_index();
                            for ap in [1, 2] {
                                out.push(HubAction::Send {
                                    dst: Node::Ap(ap),
                                    round,
                                    msg: Message::MappingIndex { mapping },
                                });
                            }
                        }
                        Err(e) => out.push(HubAction::IntegrityError {
                            round,
                            reason: e.to_string(),
                        }),
                    }
                }
            }
            Message::MappingIndex { .. } => {}
            Message::NcsData { ap, mapping, ncvs } => {
                let slot = &mut self.data[usize::from(ap - 1)];
                if slot.is_none() {
                    *slot = Some((*mapping, ncvs.clone()));
                }
                if self.done {
                    return out;
                }
                if let [Some((m1, x1)), Some((m2, x2))] = &self.data {
                    self.done = true;
                    match decode_all(cat, *m1, *m2, x1, x2) {
                        Ok(words) => out.push(HubAction::Decoded { round, words }),
                        Err(e) => out.push(HubAction::IntegrityError {
                            round,
                            reason: e.to_string(),
                        }),
                    }
                }
            }
        }
        out
    }
}

/// Combined matrix from the halves each AP actually used.
pub(crate) fn combined_for(
    cat: &MappingCatalog,
    m1: usize,
    m2: usize,
) -> Result<Gf2Matrix, PncError> {
    let top = cat.by_mapping_index(m1)?.top();
    let bottom = cat.by_mapping_index(m2)?.bottom();
    let c = top.vstack(&bottom)?;
    if c.rank() != 4 {
        return Err(PncError::SingularMapping);
    }
    Ok(c)
}

fn decode_all(
    cat: &MappingCatalog,
    m1: usize,
    m2: usize,
    x1: &[Ncv],
    x2: &[Ncv],
) -> Result<Vec<SourceWord>, PncError> {
    let c = combined_for(cat, m1, m2)?;
    if x1.len() != x2.len() {
        return Err(PncError::Parse {
            line: 0,
            msg: format!(
                "NCV streams differ in length ({} vs {})",
                x1.len(),
                x2.len()
            ),
        });
    }
    x1.iter()
        .zip(x2)
        .map(|(&a, &b)| hub_decode(&c, a, b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pnc::{offline_search, Qam4, DEFAULT_TOLERANCE};

    fn cat() -> MappingCatalog {
        offline_search(&Qam4::gray(), DEFAULT_TOLERANCE)
            .unwrap()
            .catalog
    }

    fn words() -> Vec<SourceWord> {
        SourceWord::all().collect()
    }

    #[test]
    fn ap_encodes_with_indexed_mapping() {
        let cat = cat();
        let mut ap = ApState::new(2);
        let t = SimTime::from_secs(1.0);
        let acts = ap
            .step(
                SimTime(0),
                t,
                ApEvent::Frame {
                    round: 0,
                    sfs: 1,
                    words: words(),
                },
                &cat,
            )
            .unwrap();
        assert_eq!(acts.len(), 2);
        assert_eq!(ap.deadline(), Some(t));
        let acts = ap
            .step(
                SimTime(10),
                t,
                ApEvent::Mapping {
                    round: 0,
                    mapping: 11,
                },
                &cat,
            )
            .unwrap();
        let m = cat.entry(3, 1).unwrap().bottom();
        match &acts[..] {
            [ApAction::Send {
                msg: Message::NcsData {
                    mapping: 11, ncvs, ..
                },
                ..
            }] => {
                for (w, x) in words().iter().zip(ncvs) {
                    assert_eq!(*x, pnc_encode(&m, *w).unwrap());
                }
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(ap.deadline(), None);
        // duplicate reply is ignored
        assert!(ap
            .step(
                SimTime(11),
                t,
                ApEvent::Mapping {
                    round: 0,
                    mapping: 11
                },
                &cat
            )
            .unwrap()
            .is_empty());
        // a stale timeout does nothing
        assert!(ap
            .step(t, t, ApEvent::Timeout { round: 0 }, &cat)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn ap_timeout_paths() {
        let cat = cat();
        let t = SimTime::from_secs(1.0);
        let mut ap = ApState::new(1);
        ap.step(
            SimTime(0),
            t,
            ApEvent::Frame {
                round: 0,
                sfs: 4,
                words: words(),
            },
            &cat,
        )
        .unwrap();
        assert_eq!(
            ap.step(t, t, ApEvent::Timeout { round: 0 }, &cat).unwrap(),
            vec![ApAction::Stall { round: 0 }]
        );

        ap.last_mapping = Some(19);
        ap.step(
            t,
            t,
            ApEvent::Frame {
                round: 1,
                sfs: 4,
                words: words(),
            },
            &cat,
        )
        .unwrap();
        let acts = ap
            .step(t + t, t, ApEvent::Timeout { round: 1 }, &cat)
            .unwrap();
        assert_eq!(
            acts[0],
            ApAction::FallbackUsed {
                round: 1,
                mapping: 19
            }
        );
        let m = cat.entry(4, 4).unwrap().top();
        match &acts[1] {
            ApAction::Send {
                msg: Message::NcsData { ncvs, .. },
                ..
            } => {
                assert_eq!(
                    ncvs[5],
                    pnc_encode(&m, SourceWord::new(5).unwrap()).unwrap()
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hub_replies_once_per_round() {
        let cat = cat();
        let mut hub = HubState::new();
        assert!(hub
            .step(0, &Message::SfsIndex { ap: 1, sfs: 3 }, &cat)
            .is_empty());
        assert!(hub
            .step(0, &Message::SfsIndex { ap: 1, sfs: 3 }, &cat)
            .is_empty());
        let acts = hub.step(0, &Message::SfsIndex { ap: 2, sfs: 1 }, &cat);
        assert_eq!(acts.len(), 2);
        assert!(acts.iter().all(|a| matches!(
            a,
            HubAction::Send {
                msg: Message::MappingIndex { mapping: 11 },
                ..
            }
        )));
        assert!(hub
            .step(0, &Message::SfsIndex { ap: 2, sfs: 1 }, &cat)
            .is_empty());

        let acts = hub.step(1, &Message::SfsIndex { ap: 1, sfs: 4 }, &cat);
        assert!(acts.is_empty());
        let acts = hub.step(1, &Message::SfsIndex { ap: 2, sfs: 4 }, &cat);
        assert!(matches!(
            acts[0],
            HubAction::Send {
                msg: Message::MappingIndex { mapping: 19 },
                ..
            }
        ));
        // stale round traffic is dropped
        assert!(hub
            .step(0, &Message::SfsIndex { ap: 1, sfs: 2 }, &cat)
            .is_empty());
    }

    #[test]
    fn hub_decodes_and_rejects_bad_context() {
        let cat = cat();
        let e = cat.entry(2, 5).unwrap();
        let x1: Vec<Ncv> = words()
            .iter()
            .map(|&w| pnc_encode(&e.top(), w).unwrap())
            .collect();
        let x2: Vec<Ncv> = words()
            .iter()
            .map(|&w| pnc_encode(&e.bottom(), w).unwrap())
            .collect();
        let mut hub = HubState::new();
        let mi = e.mapping_index();
        assert!(hub
            .step(
                0,
                &Message::NcsData {
                    ap: 1,
                    mapping: mi,
                    ncvs: x1.clone()
                },
                &cat
            )
            .is_empty());
        let acts = hub.step(
            0,
            &Message::NcsData {
                ap: 2,
                mapping: mi,
                ncvs: x2,
            },
            &cat,
        );
        assert_eq!(
            acts,
            vec![HubAction::Decoded {
                round: 0,
                words: words()
            }]
        );

        let mut hub = HubState::new();
        hub.step(
            3,
            &Message::NcsData {
                ap: 1,
                mapping: 0,
                ncvs: x1.clone(),
            },
            &cat,
        );
        let acts = hub.step(
            3,
            &Message::NcsData {
                ap: 2,
                mapping: 1,
                ncvs: x1,
            },
            &cat,
        );
        assert!(matches!(acts[0], HubAction::IntegrityError { .. }));
    }

    #[test]
    fn mixed_halves_must_be_invertible() {
        let cat = cat();
        // every completed pairing is invertible
        for k in 1..=25 {
            assert!(combined_for(&cat, k, k).is_ok());
        }
        let singular = (1..=25)
            .flat_map(|a| (1..=25).map(move |b| (a, b)))
            .filter(|&(a, b)| combined_for(&cat, a, b).is_err())
            .count();
        assert!(singular > 0);
    }
}
