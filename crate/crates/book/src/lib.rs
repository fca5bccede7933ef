//! The guide in `book/` rendered as doctests, one module per chapter, so
//! that `cargo test` keeps every listing compiling and passing.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/zonotopes.md")]
pub mod zonotopes {}
#[doc = include_str!("../../../book/src/model_sets.md")]
pub mod model_sets {}
#[doc = include_str!("../../../book/src/nullspace.md")]
pub mod nullspace {}
#[doc = include_str!("../../../book/src/reachability.md")]
pub mod reachability {}
#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/benchmark.md")]
pub mod benchmark {}
