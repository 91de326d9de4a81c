//! Exact and certified computations around ranks of universal quadratic
//! lattices over real quadratic fields.
//!
//! The crate is organised bottom-up:
//!
//! * [`surd_cf`]: quadratic surds and their periodic continued fractions.
//! * [`numberfield`]: arithmetic in `Q(sqrt D)` and its ring of integers,
//!   semiconvergents, the dual element `delta` and the trace-form transfer.
//! * [`lattice`]: exact short-vector counts and the explicit bounds `C(r, n)`
//!   and `B(R, m)`.
//! * [`measure`]: rational intervals of fixed continued-fraction rank and the
//!   explicit interval covers built from them.
//! * [`equidist`]: fractional-part counts, discrepancy and Erdős–Turán type
//!   bounds for `sqrt D` and `(1 + sqrt D)/2`.
//! * [`survey`]: census sweeps over `D <= X`, density bounds and rank lower
//!   bounds.
//! * [`cli`]: the `uqf` command-line front end.
//!
//! Real-valued bounds are carried as [`certified::BoundValue`], an interval
//! enclosure computed with directed rounding, so every comparison against an
//! exact integer count is a proof, not an approximation.

pub mod arith;
pub mod certified;
pub mod cli;
pub mod equidist;
pub mod error;
pub mod lattice;
pub mod measure;
pub mod numberfield;
pub mod surd_cf;
pub mod survey;

pub use certified::{BoundValue, Dyadic, Interval};
pub use error::{Error, Result};
pub use surd_cf::{Convergent, PeriodicCF, QuadraticSurd};
