#![no_std]
// When std enters the dependency graph (dev-dependencies unify features),
// its inherent float methods make the `Float` imports redundant.
#![allow(unused_imports)]
// `!(a > b)` deliberately rejects NaN; tabulated constants keep their
// published digits; index loops mirror the formulas they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]
extern crate alloc;

pub mod born_kernel;
pub mod chebyshev;
pub mod classical;
pub mod cutoffs;
pub mod error;
pub mod fd;
pub mod fit;
pub mod jet;
pub mod linalg;
pub mod parabolic;
pub mod ode;
pub mod oscillatory;
pub mod quadrature;
pub mod special;
pub mod transport_symbols;
