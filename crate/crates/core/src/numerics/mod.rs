//! Small numerical kernels shared by the rest of the crate.
//!
//! Everything here is a pure function of its inputs. Matrices are tiny
//! (a handful of lines per vertex, a few dozen unknowns for compound graphs),
//! so dense elimination is all that is needed.

mod linalg;
mod matrix;
mod quadrature;
mod roots;

pub use linalg::{rank, solve_linear};
pub use matrix::ComplexMatrix;
pub use quadrature::integrate;
pub use roots::find_root;

use crate::{Error, Result};

/// Absolute/relative stopping tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Result<Self> {
        let ok = |t: f64| t.is_finite() && t >= 0.0;
        if !ok(abs_tol) || !ok(rel_tol) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be finite and non-negative (abs {abs_tol}, rel {rel_tol})"
            )));
        }
        if abs_tol == 0.0 && rel_tol == 0.0 {
            return Err(Error::InvalidParameter(
                "abs_tol and rel_tol cannot both be zero".into(),
            ));
        }
        Ok(Self { abs_tol, rel_tol })
    }

    pub fn absolute(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
        }
    }

    /// Target for a quantity of magnitude `scale`.
    pub fn target(&self, scale: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * scale.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
        }
    }
}
