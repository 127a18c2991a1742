//! Two-round decentralized secure aggregation over prime fields.
//!
//! `K` users on a broadcast channel compute the sum of the round-1 survivors'
//! inputs. Any `U` survivors suffice to decode, and a user colluding with up
//! to `T` others learns nothing beyond that sum. Keys come from a trusted
//! dealer and are projected through a `(T+1)`-private MDS matrix.
//!
//! The [`entropy`] module is an exact verification oracle: every protocol
//! observable is a linear map of i.i.d. uniform field symbols, so entropies
//! in q-ary units are matrix ranks.

pub mod entropy;
pub mod field;
pub mod keys;
pub mod linalg;
pub mod mds;
pub mod protocol;
pub mod sim;
