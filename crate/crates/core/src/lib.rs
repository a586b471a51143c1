//! Polar codes over the natural-order Kronecker kernel, decoded by belief
//! propagation, with auxiliary polar codes attached to the semipolarized
//! channels of one or more inner codes.
//!
//! The crate is organised bottom-up:
//!
//! * [`construction`] computes Bhattacharyya parameters and splits the bit
//!   channels into information, semipolarized and frozen sets.
//! * [`codec`] encodes with the in-place butterfly.
//! * [`bp`] holds the factor-graph message state and processing elements.
//! * [`coupling`] wires inner and auxiliary codes together (serial, parallel
//!   and ring augmentation) and runs the joint decoding schedule.
//! * [`channel`] provides BPSK/AWGN and the seeded Monte Carlo driver.
//! * [`bench`] is the experiment configuration, CSV output and complexity
//!   report used by the `polar-aug` binary.

pub mod bench;
pub mod bp;
pub mod channel;
pub mod codec;
pub mod construction;
pub mod coupling;
pub mod error;

pub use error::{Error, Result};

/// Hard bit stored as `0` or `1`.
pub type Bit = u8;
