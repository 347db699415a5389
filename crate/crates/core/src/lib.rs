//! Generalized ABBA (GABBA) space-time block codes.
//!
//! The crate covers the whole link: symbolic code construction, encoded
//! channel matrices, the nested orthogonal decoder, Gray-mapped modems,
//! fading generators, exact MGF-based BER analysis and a reproducible
//! Monte-Carlo harness.
//!
//! ```
//! use gabba::code_construction::build_mother;
//! use gabba::matrix::C64;
//! use gabba::orthogonal_decoder::decode;
//!
//! let k = 8;
//! let s: Vec<C64> = (0..k).map(|i| C64::new(i as f64, 1.0)).collect();
//! let h: Vec<C64> = (0..k).map(|i| C64::new(1.0, 0.1 * i as f64)).collect();
//! let r = build_mother(k).unwrap().encode(&s).unwrap().mul_vec(&h);
//! let out = decode(&[r], &[h], k).unwrap();
//! for (a, b) in out.estimates.iter().zip(&s) {
//!     assert!((a - b).norm() < 1e-9);
//! }
//! ```

pub mod ber_analytics;
pub mod code_construction;
pub mod encoded_channel;
pub mod error;
pub mod fading_sim;
pub mod harness;
pub mod matrix;
pub mod modem;
pub mod orthogonal_decoder;
pub mod scalar;

pub use error::{GabbaError, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    struct Overview;
    #[doc = include_str!("../../../book/src/construction.md")]
    struct Construction;
    #[doc = include_str!("../../../book/src/decoding.md")]
    struct Decoding;
    #[doc = include_str!("../../../book/src/channels.md")]
    struct Channels;
    #[doc = include_str!("../../../book/src/analytics.md")]
    struct Analytics;
    #[doc = include_str!("../../../book/src/experiments.md")]
    struct Experiments;
}
