//! Delivery-time bounds and scheme synthesis for fog radio access networks
//! with cache-enabled multi-antenna edge nodes and a cloud fronthaul.

pub mod envelope;
pub mod error;
pub mod lp;
pub mod model;
pub mod ndt_pipelined;
pub mod ndt_serial;
pub mod par;
pub mod scheme;
pub mod sweep;
pub mod zf;

pub use error::{Error, Result};
pub use model::{LowerBound, Multiplicity, NdtBreakdown, Rational, SystemConfig};
