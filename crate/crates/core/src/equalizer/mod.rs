//! Conventional full-rank MIMO DFE and the known-channel linear MMSE reference.

mod full_rank;
mod mmse;

pub use full_rank::FullRankDfe;
pub use mmse::{mmse_bound, MmseBound};
