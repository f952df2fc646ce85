//! Monte Carlo SER harness: end-to-end trials over the OFDM access links,
//! the PNC relay and the backhaul protocol, with a CoMP joint-ML baseline
//! evaluated on the same draws.

mod config;
mod dump;
mod sweep;
mod trial;

use thiserror::Error;

use crate::channel::ChannelError;
use crate::ofdm::OfdmError;
use crate::pnc::PncError;

pub use config::{
    parse_complex, parse_complex_pair, parse_ebno_list, ChannelKind, CsiMode, Impairments,
    SimConfig, StopRule, SystemParams, DEFAULT_ERROR_EVENTS,
};
pub use dump::{
    channel_dump, constellation_dump, write_channel_csv, write_constellation_csv, ChannelDumpRow,
    ConstellationDump, ConstellationRow,
};
pub use sweep::{
    read_ser_csv, run_comp_baseline, run_ser_sweep, wilson_halfwidth, write_ser_csv, SerPoint,
    SerReport, SerRow, Target,
};
pub use trial::{ApView, Simulator, TrialDraw, TrialResult};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Ofdm(#[from] OfdmError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Pnc(#[from] PncError),
    #[error("backhaul stalled-round rate {rate:.3} at {ebno_db} dB exceeds 0.5; check loss, replication and timeout")]
    TooManyStalls { ebno_db: f64, rate: f64 },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for SimError {
    fn from(e: csv::Error) -> Self {
        SimError::Csv(e.to_string())
    }
}
