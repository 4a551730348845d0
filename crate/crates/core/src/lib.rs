//! Secret-key rates of BB84 driven by multiplexed heralded single-photon
//! sources.
//!
//! The crate is organised bottom-up:
//!
//! * [`sources`]: photon-number statistics of every source architecture,
//!   including the click/no-click conditional statistics.
//! * [`channel`]: depolarizing lossy channel and threshold-detector receiver.
//! * [`protocols`]: asymptotic key rates without decoy, with active decoy and
//!   with passive (heralding-conditioned) decoy.
//! * [`estimation`]: yield and error-rate bounds from two branch observations.
//! * [`optimizer`]: maximisation over the pump level and loss sweeps.
//! * [`montecarlo`]: event-level simulation of the switch networks.

pub mod channel;
pub mod error;
pub mod estimation;
pub mod montecarlo;
pub mod optimizer;
pub mod protocols;
pub mod sources;

pub use channel::{ChannelDetectorSpec, ObservedChannel, YieldModel};
pub use error::{Error, Result};
pub use optimizer::{Protocol, Scenario, SearchConfig, SweepRecord};
pub use sources::{Branch, PhotonStatistics, SourceKind, SourceSpec, TruncationPolicy};
