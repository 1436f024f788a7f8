use crate::compact::CompactedLut;
use crate::error::{Error, Result};
use crate::interp;
use crate::lut::{ClippedLut, Sampling, Signedness};
use crate::metrics::{NoOps, OpSink};

/// A retrievable table, either dense or compacted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Table {
    Clipped(ClippedLut),
    Compacted(CompactedLut),
}

impl Table {
    pub fn dims(&self) -> usize {
        match self {
            Table::Clipped(t) => t.dims(),
            Table::Compacted(t) => t.dims(),
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            Table::Clipped(t) => t.channels(),
            Table::Compacted(t) => t.channels(),
        }
    }

    pub fn sampling(&self) -> Sampling {
        match self {
            Table::Clipped(t) => t.sampling(),
            Table::Compacted(t) => t.sampling(),
        }
    }

    pub fn signedness(&self) -> Signedness {
        match self {
            Table::Clipped(t) => t.signedness(),
            Table::Compacted(t) => t.signedness(),
        }
    }

    pub fn payload_bytes(&self) -> usize {
        match self {
            Table::Clipped(t) => t.payload_bytes(),
            Table::Compacted(t) => t.payload_bytes(),
        }
    }

    #[inline]
    pub fn retrieve_with<O: OpSink>(&self, px: &[u8], out: &mut [i32], ops: &mut O) {
        match self {
            Table::Clipped(t) => interp::retrieve_with(t, px, out, ops),
            Table::Compacted(t) => t.retrieve_with(px, out, ops),
        }
    }

    /// Retrieves only cached channels `first..first + out.len()`.
    #[inline]
    pub fn retrieve_from<O: OpSink>(&self, px: &[u8], first: usize, out: &mut [i32], ops: &mut O) {
        match self {
            Table::Clipped(t) => interp::retrieve_from(t, px, first, out, ops),
            Table::Compacted(t) => t.retrieve_from(px, first, out, ops),
        }
    }

    pub fn retrieve(&self, px: &[u8], out: &mut [i32]) -> Result<()> {
        if px.len() != self.dims() || out.len() != self.channels() {
            return Err(Error::Dimension(format!(
                "query of {} inputs / {} outputs for a {}-D table caching {}",
                px.len(),
                out.len(),
                self.dims(),
                self.channels()
            )));
        }
        self.retrieve_with(px, out, &mut NoOps);
        Ok(())
    }

    /// The dense table, compacting nothing.
    pub fn as_clipped(&self) -> Option<&ClippedLut> {
        match self {
            Table::Clipped(t) => Some(t),
            Table::Compacted(_) => None,
        }
    }
}

impl From<ClippedLut> for Table {
    fn from(t: ClippedLut) -> Self {
        Table::Clipped(t)
    }
}

impl From<CompactedLut> for Table {
    fn from(t: CompactedLut) -> Self {
        Table::Compacted(t)
    }
}
