#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod gf2;
pub mod ofdm;
pub mod pnc;
pub mod protocol;
pub mod sim;

pub use num_complex;

pub use gf2::{Gf2Error, Gf2Matrix, Gf2Vector};
pub use pnc::{MappingCatalog, Ncv, PncError, Qam4, SfsCatalog, SourceWord};
