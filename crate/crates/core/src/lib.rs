//! Secure coded distributed computing over placement delivery arrays.
//!
//! The crate simulates two MapReduce-style schemes on a lossless broadcast
//! channel, both driven by a placement delivery array:
//!
//! * `t1`, secure data shuffling: files are placed by the array's stars and every
//!   multicast is one-time padded, so an eavesdropper learns nothing.
//! * `t2`, secure coded computing: nodes store ramp secret shares instead of
//!   files, exchange coded intermediate values, and recover only the values of
//!   their own output function.
//!
//! Loads are exact rationals measured from the transcript. The [`audit`] module
//! checks both security notions exactly, by enumeration on small instances and
//! by GF(2) rank computations on larger ones.

pub mod audit;
pub mod config;
pub mod gf2e;
pub mod mapreduce;
pub mod pda;
pub mod scheme;
pub mod secret_sharing;
pub mod transcript;
