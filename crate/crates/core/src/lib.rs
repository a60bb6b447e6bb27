//! Sparse flat testing for generalized Reed-Muller codes over GF(p^k).

pub mod affine;
pub mod corrector;
pub mod error;
pub mod generic;
pub mod gf;
pub mod grassmann;
pub mod linalg;
pub mod mpoly;
pub mod oracle;
pub mod stats;
pub mod sweep;
pub mod tester;

pub use affine::{AffineMap, FlatBasis, Restriction, ZoomSpec};
pub use error::{Error, Result};
pub use gf::{Elem, Field};
pub use mpoly::{EvalTable, MPoly};
pub use tester::{
    build_spec, derive_params, estimate_rejection, run_sparse_test, CallbackOracle, CountingOracle,
    FunctionOracle, RMParams, TestReport, TesterSpec,
};
