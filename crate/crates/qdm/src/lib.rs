//! Exact computation of the blowup decomposition of quantum D-modules.
//!
//! The crate is organised bottom-up:
//!
//! * [`exact_arith`]: Q and cyclotomic fields Q(ζ_m);
//! * [`graded_series`]: truncated supercommutative Laurent series;
//! * [`geometry_model`]: cohomology models and blowup data loaded from TOML;
//! * [`gw_quantum`]: WDVV reconstruction, quantum products, fundamental solutions;
//! * [`novikov_embed`]: common-ring embeddings and the branch constants;
//! * [`init_conditions`]: τ°, ς°, the Fourier bracket and Ψ°;
//! * [`decomposition`]: Birkhoff factorization and the coordinate change;
//! * [`verify`]: the named checks shared by the CLI and the acceptance tests.

pub mod exact_arith;
pub mod graded_series;
pub mod geometry_model;
pub mod gw_quantum;
pub mod novikov_embed;
pub mod init_conditions;
pub mod decomposition;
pub mod verify;
