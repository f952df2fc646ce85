//! Backhaul signalling between the two APs and the hub.
//!
//! Each round the APs report their SFS index, the hub answers with one
//! mapping index for both, and the APs forward NCVs encoded with that
//! mapping. Every packet is sent `R` times and each copy may be erased. An
//! AP that hears no mapping index before its timeout falls back to the last
//! mapping it used, or stalls if it never had one.

mod machines;
mod queue;
mod round;

use std::fmt;

pub use machines::{ApAction, ApEvent, ApState, HubAction, HubState};
pub use queue::{EventQueue, Scheduled};
pub use round::{ApInput, Backhaul, MessageCounts, RoundOutcome, RoundReport};

use crate::pnc::Ncv;

/// Simulated time in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub fn from_secs(s: f64) -> Self {
        Self((s * 1e9).round() as u64)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 * 1e-9
    }
}

impl std::ops::Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:09}",
            self.0 / 1_000_000_000,
            self.0 % 1_000_000_000
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Ap(u8),
    Hub,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Ap(id) => write!(f, "ap{id}"),
            Node::Hub => write!(f, "hub"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    SfsIndex {
        ap: u8,
        sfs: usize,
    },
    MappingIndex {
        mapping: usize,
    },
    /// NCVs plus the mapping they were encoded with.
    NcsData {
        ap: u8,
        mapping: usize,
        ncvs: Vec<Ncv>,
    },
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::SfsIndex { .. } => MessageKind::Sfs,
            Message::MappingIndex { .. } => MessageKind::Mapping,
            Message::NcsData { .. } => MessageKind::Data,
        }
    }

    fn payload(&self, round: u64) -> String {
        match self {
            Message::SfsIndex { sfs, .. } => format!("round={round} sfs={sfs}"),
            Message::MappingIndex { mapping } => format!("round={round} mapping={mapping}"),
            Message::NcsData { mapping, ncvs, .. } => {
                format!("round={round} mapping={mapping} units={}", ncvs.len())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    Sfs,
    Mapping,
    Data,
}

impl MessageKind {
    pub fn name(self) -> &'static str {
        match self {
            MessageKind::Sfs => "sfs",
            MessageKind::Mapping => "mapping",
            MessageKind::Data => "data",
        }
    }
}

/// A message in flight, tagged with its round.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub round: u64,
    pub src: Node,
    pub dst: Node,
    pub msg: Message,
}

/// Per-copy erasure probability for each packet type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossProfile {
    pub sfs: f64,
    pub mapping: f64,
    pub data: f64,
}

impl LossProfile {
    pub fn uniform(p: f64) -> Self {
        Self {
            sfs: p,
            mapping: p,
            data: p,
        }
    }

    pub fn none() -> Self {
        Self::uniform(0.0)
    }

    pub fn for_kind(&self, k: MessageKind) -> f64 {
        match k {
            MessageKind::Sfs => self.sfs,
            MessageKind::Mapping => self.mapping,
            MessageKind::Data => self.data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub timeout_s: f64,
    pub replication: usize,
    pub loss: LossProfile,
    pub sample_rate: f64,
    /// Backhaul packet lengths in samples.
    pub sfs_packet: usize,
    pub mapping_packet: usize,
    pub data_packet: usize,
    /// Fixed processing delay added to every hop.
    pub processing_s: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            timeout_s: 1.0,
            replication: 4,
            loss: LossProfile::none(),
            sample_rate: 1e6,
            sfs_packet: 560,
            mapping_packet: 560,
            data_packet: 800,
            processing_s: 1e-3,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.replication == 0 {
            return Err("replication must be at least 1".into());
        }
        for (name, p) in [
            ("sfs", self.loss.sfs),
            ("mapping", self.loss.mapping),
            ("data", self.loss.data),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} loss probability {p} outside [0, 1]"));
            }
        }
        if !(self.timeout_s > 0.0) {
            return Err("timeout must be positive".into());
        }
        if !(self.sample_rate > 0.0) {
            return Err("sample_rate must be positive".into());
        }
        Ok(())
    }

    pub fn airtime(&self, kind: MessageKind) -> SimTime {
        let n = match kind {
            MessageKind::Sfs => self.sfs_packet,
            MessageKind::Mapping => self.mapping_packet,
            MessageKind::Data => self.data_packet,
        };
        SimTime::from_secs(n as f64 / self.sample_rate)
    }
}
