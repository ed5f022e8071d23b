//! # wpcn
//!
//! Time-allocation optimization for a full-duplex wireless-powered
//! communication network: one hybrid access point charges K users over the
//! downlink while collecting their uplink data in TDMA slots, and each user
//! may only spend energy harvested before its own slot.
//!
//! Two problems are solved exactly:
//!
//! - **Sum-throughput maximization** ([`stm`]): split a unit block between
//!   the charging slot and the K transmit slots to maximize total uplink
//!   throughput. Solved in closed form with a two-pass O(K) recursion built
//!   on the Lambert W function.
//! - **Total-time minimization** ([`ttm`]): meet a per-user data demand in
//!   the least total time. Solved by tangent-point geometry on the per-user
//!   charging-time curves plus a pivot search.
//!
//! Cheap baselines live in [`heuristics`], independent brute-force and
//! gradient verification in [`oracle`], and a reproducible Monte-Carlo
//! fading harness in [`sim`]. The `wpcn` binary exposes solves, sweeps and
//! the verification battery; the `examples/` directory shows one runnable
//! program per capability.
//!
//! # Example
//!
//! ```
//! use wpcn::model::Instance;
//! use wpcn::stm::solve_stm;
//!
//! // Two users with effective SNRs 1 and 4.
//! let inst = Instance::from_gammas(&[1.0, 4.0]).unwrap();
//! let sol = solve_stm(&inst).unwrap();
//! assert!((sol.allocation.total() - 1.0).abs() < 1e-12);
//! assert!(sol.total_throughput > 0.0);
//! ```

pub mod cli;
pub mod error;
pub mod heuristics;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod specialfn;
pub mod stm;
pub mod ttm;

pub use error::{Error, Result};
