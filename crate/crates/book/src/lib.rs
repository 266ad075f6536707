//! Doctests for the guide in `book/`. Every Rust block there compiles and runs
//! as part of `cargo test`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/recursion.md")]
pub mod recursion {}

#[doc = include_str!("../../../book/src/compilation.md")]
pub mod compilation {}

#[doc = include_str!("../../../book/src/polynomials.md")]
pub mod polynomials {}

#[doc = include_str!("../../../book/src/estimation.md")]
pub mod estimation {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
