//! Private linear transformation over replicated, non-colluding servers.
//!
//! A user wants one linear combination of `D` among `K` stored messages
//! without revealing which `D`. Queries are built from a generalized
//! Reed-Solomon code ([`grs`]), answered through a private-computation plan
//! over all `C(K, D)` candidate supports ([`pc`]), and run end to end by
//! [`engine`] in process or over TCP ([`net`]).

pub mod audit;
pub mod capacity;
pub mod engine;
pub mod error;
pub mod field;
pub mod grs;
pub mod linalg;
pub mod net;
pub mod pc;
pub mod poly;
pub mod rng;
pub mod wire;

pub use capacity::{BoundKind, CapacityQuery, CapacityReport};
pub use engine::{Database, QueryBundle, RunOptions, SideInfoInstance, Transcript};
pub use error::{PltError, Result};
pub use field::{Fe, PrimeField};
pub use grs::{Demand, GrsOverrides};
pub use pc::{Expression, KeepOrder, PlanLimits, Term};
