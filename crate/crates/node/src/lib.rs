//! Storage simulator, file formats and tooling around `pmpir-core`.
//!
//! [`store`] reads and writes node files, [`wire`] frames client/server
//! messages, [`sim`] runs a cluster of servers with download accounting,
//! [`audit`] checks the query distribution and [`rate_table`] renders the
//! rate comparisons as self-checking CSV.

pub mod audit;
pub mod error;
pub mod rate_table;
pub mod sim;
pub mod store;
pub mod transcript;
pub mod wire;

pub use error::{SimError, SimResult};
