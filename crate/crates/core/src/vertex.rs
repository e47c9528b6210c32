//! Vertex couplings written as `A·Ψ(0) + B·Ψ'(0) = 0`.
//!
//! Derivatives are taken outward along each line (coordinate `x ≥ 0`
//! measured from the vertex).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::{rank, ComplexMatrix};
use crate::scattering::{smatrix, ChannelSet};
use crate::{Error, Result};

const RANK_TOL: f64 = 1e-12;
const SCALE_CHECK_MOMENTA: (f64, f64) = (0.1, 10.0);
const SCALE_CHECK_TOL: f64 = 1e-10;

/// A vertex coupling for `n` lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoundaryConditionJson", into = "BoundaryConditionJson")]
pub struct BoundaryCondition {
    a: ComplexMatrix,
    b: ComplexMatrix,
}

impl BoundaryCondition {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(
                "boundary matrices must be finite".into(),
            ));
        }
        Ok(Self { a, b })
    }

    /// Degree of the vertex.
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    /// ST-form coupling: `B = [[I_m, T], [0, 0]]`, `A = [[0, 0], [−T*, I_{n−m}]]`.
    ///
    /// The top `m` rows tie derivatives together, the bottom `n − m` rows
    /// express the remaining values through the first `m`
    /// (`ψ_bottom = T*·ψ_top`).
    pub fn st_form(n: usize, m: usize, t: &ComplexMatrix) -> Result<Self> {
        if m == 0 || m >= n {
            return Err(Error::DimensionMismatch(format!(
                "need 1 <= m < n, got m={m}, n={n}"
            )));
        }
        if t.rows() != m || t.cols() != n - m {
            return Err(Error::DimensionMismatch(format!(
                "T must be {m}x{}, got {}x{}",
                n - m,
                t.rows(),
                t.cols()
            )));
        }
        if !t.is_finite() {
            return Err(Error::InvalidParameter("T entries must be finite".into()));
        }
        let mut b = ComplexMatrix::zeros(n, n);
        b.set_block(0, 0, &ComplexMatrix::identity(m));
        b.set_block(0, m, t);
        let mut a = ComplexMatrix::zeros(n, n);
        a.set_block(m, 0, &(-&t.adjoint()));
        a.set_block(m, m, &ComplexMatrix::identity(n - m));
        Ok(Self { a, b })
    }

    /// δ-coupling of the given strength: continuity of all values plus
    /// `Σ ψ'_i = strength · ψ`. For `n = 1` this is the Robin end `ψ' = strength·ψ`.
    pub fn delta(n: usize, strength: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "δ-coupling needs at least one line".into(),
            ));
        }
        if !strength.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "δ strength {strength} is not finite"
            )));
        }
        let one = Complex64::new(1.0, 0.0);
        let mut a = ComplexMatrix::zeros(n, n);
        let mut b = ComplexMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i)] = one;
            a[(i, i + 1)] = -one;
        }
        a[(n - 1, 0)] = Complex64::new(-strength, 0.0);
        for j in 0..n {
            b[(n - 1, j)] = one;
        }
        Ok(Self { a, b })
    }

    /// `‖A·B* − B·A*‖_max`; zero for self-adjoint couplings.
    pub fn hermiticity_defect(&self) -> f64 {
        let ab = &self.a * &self.b.adjoint();
        let ba = &self.b * &self.a.adjoint();
        (&ab - &ba).max_abs()
    }

    /// Rank of the `n × 2n` block `(A | B)`.
    pub fn rank(&self) -> usize {
        let ab = self.a.hstack(&self.b).expect("A and B share row count");
        rank(&ab, RANK_TOL)
    }

    pub fn validate(&self) -> Diagnostics {
        let n = self.n();
        let rank = self.rank();
        let hermiticity_defect = self.hermiticity_defect();
        let scale_invariant = if n >= 2 && rank == n {
            let s_at =
                |k: f64| ChannelSet::new(vec![0.0; n], k * k).and_then(|ch| smatrix(self, &ch));
            match (s_at(SCALE_CHECK_MOMENTA.0), s_at(SCALE_CHECK_MOMENTA.1)) {
                (Ok(s1), Ok(s2)) => Some((s1.s() - s2.s()).max_abs() < SCALE_CHECK_TOL),
                _ => None,
            }
        } else {
            None
        };
        Diagnostics {
            n,
            rank,
            full_rank: rank == n,
            hermiticity_defect,
            scale_invariant,
        }
    }
}

/// Parameters of an ST-form coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct StForm {
    pub n: usize,
    pub m: usize,
    pub t: ComplexMatrix,
}

impl StForm {
    pub fn new(n: usize, m: usize, t: ComplexMatrix) -> Result<Self> {
        BoundaryCondition::st_form(n, m, &t)?;
        Ok(Self { n, m, t })
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        BoundaryCondition::st_form(self.n, self.m, &self.t).expect("validated on construction")
    }
}

pub fn make_st_form(n: usize, m: usize, t: &ComplexMatrix) -> Result<BoundaryCondition> {
    BoundaryCondition::st_form(n, m, t)
}

pub fn make_delta(n: usize, strength: f64) -> Result<BoundaryCondition> {
    BoundaryCondition::delta(n, strength)
}

/// Report produced by [`BoundaryCondition::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub n: usize,
    pub rank: usize,
    pub full_rank: bool,
    pub hermiticity_defect: f64,
    /// `None` when the S-matrix cannot be evaluated (rank failure, `n < 2`).
    pub scale_invariant: Option<bool>,
}

impl Diagnostics {
    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.full_rank && self.hermiticity_defect <= tol
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixJson {
    Flat(Vec<[f64; 2]>),
    Nested(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BoundaryConditionJson {
    n: usize,
    #[serde(rename = "A")]
    a: MatrixJson,
    #[serde(rename = "B")]
    b: MatrixJson,
}

impl MatrixJson {
    fn into_matrix(self, n: usize) -> Result<ComplexMatrix> {
        let to_c = |p: [f64; 2]| Complex64::new(p[0], p[1]);
        match self {
            MatrixJson::Flat(v) => ComplexMatrix::from_vec(n, n, v.into_iter().map(to_c).collect()),
            MatrixJson::Nested(rows) => {
                let rows: Vec<Vec<Complex64>> = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(to_c).collect())
                    .collect();
                let m = ComplexMatrix::from_rows(&rows)?;
                if m.rows() != n || m.cols() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "expected {n}x{n}, got {}x{}",
                        m.rows(),
                        m.cols()
                    )));
                }
                Ok(m)
            }
        }
    }

    fn from_matrix(m: &ComplexMatrix) -> Self {
        MatrixJson::Flat(m.as_slice().iter().map(|z| [z.re, z.im]).collect())
    }
}

impl TryFrom<BoundaryConditionJson> for BoundaryCondition {
    type Error = Error;

    fn try_from(j: BoundaryConditionJson) -> Result<Self> {
        BoundaryCondition::new(j.a.into_matrix(j.n)?, j.b.into_matrix(j.n)?)
    }
}

impl From<BoundaryCondition> for BoundaryConditionJson {
    fn from(bc: BoundaryCondition) -> Self {
        BoundaryConditionJson {
            n: bc.n(),
            a: MatrixJson::from_matrix(&bc.a),
            b: MatrixJson::from_matrix(&bc.b),
        }
    }
}
