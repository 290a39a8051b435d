//! Reduced-rank MIMO decision feedback equalization with joint iterative
//! RLS estimation of projection, reduced-rank weights and feedback, a
//! full-rank RLS DFE baseline, a linear MMSE bound and a Monte Carlo BER
//! harness.

pub mod channel;
pub mod equalizer;
pub mod error;
pub mod harness;
pub mod jio;
pub mod modem;
pub mod numerics;
pub mod rls;

pub use channel::{ChannelRealization, SystemConfig};
pub use equalizer::{mmse_bound, FullRankDfe, MmseBound};
pub use error::{Error, Result};
pub use jio::{JioDfe, JioStreamState};
pub use numerics::{ComplexMatrix, ComplexVector, SeededRng};
