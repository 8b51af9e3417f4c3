//! The guide in `book/` is plain mdBook Markdown. Each chapter is pulled in
//! here as the docs of an empty module so `cargo test --doc` runs its code
//! listings against the current crate. One module per chapter makes it
//! easier to see which chapter a failing listing came from.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/candidates.md")]
pub mod candidates {}
#[doc = include_str!("../../../book/src/mmd.md")]
pub mod mmd {}
#[doc = include_str!("../../../book/src/rounding.md")]
pub mod rounding {}
#[doc = include_str!("../../../book/src/wasserstein.md")]
pub mod wasserstein {}
#[doc = include_str!("../../../book/src/baselines.md")]
pub mod baselines {}
#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
