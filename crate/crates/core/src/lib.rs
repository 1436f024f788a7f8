//! Cooperative lookup-table filtering for 8-bit images and video.
//!
//! Filtering networks are cached into low-dimensional lookup tables that are
//! queried with integer simplex (or trilinear) interpolation. Several spatial
//! patterns, rotation ensembles, progressive receptive-field growth and
//! cross-channel tables are chained into a pipeline, and tables can be
//! compacted along their diagonal to cut storage.

pub mod compact;
pub mod container;
pub mod error;
pub mod interp;
pub mod io;
pub mod lut;
pub mod lutgen;
pub mod metrics;
pub mod pattern;
pub mod pipeline;
pub mod plane;
pub mod rd;
pub mod table;
pub mod verify;

pub use error::{Error, Result};
