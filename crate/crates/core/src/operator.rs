//! Dense complex operator algebra: states, superoperators, Choi matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Absolute asymmetry (scaled by the largest entry when that exceeds one)
/// below which a matrix is treated as Hermitian and symmetrized.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Condition number above which [`Superoperator::invert`] falls back to the
/// pseudoinverse.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e8;

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Returns `(A + A†)/2`, or an error when `A` is farther from Hermitian than
/// float drift can explain.
pub fn hermitian_part(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let adj = a.adjoint();
    let asymmetry = max_abs(&(a - &adj));
    if asymmetry > HERMITIAN_TOL * max_abs(a).max(1.0) {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok((a + adj).scale(0.5))
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    let h = hermitian_part(a)?;
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

/// Trace norm `Σ|λᵢ|` of a Hermitian matrix.
pub fn trace_norm(a: &CMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(a)?.iter().map(|l| l.abs()).sum())
}

/// Identity matrix of size `n`.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Column-stacking vectorization.
pub fn vectorize(rho: &CMatrix) -> DVector<C64> {
    // nalgebra storage is column-major, which is exactly column stacking.
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// Which tensor factor of a bipartite operator an operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

fn check_bipartite(rho: &CMatrix, dims: (usize, usize)) -> Result<()> {
    let n = dims.0 * dims.1;
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho.nrows(),
        });
    }
    Ok(())
}

/// Partial transpose of a bipartite operator; the composite index of `(a, b)`
/// is `a·d_B + b`.
pub fn partial_transpose(
    rho: &CMatrix,
    dims: (usize, usize),
    subsystem: Subsystem,
) -> Result<CMatrix> {
    check_bipartite(rho, dims)?;
    let (da, db) = dims;
    let n = da * db;
    Ok(CMatrix::from_fn(n, n, |r, c| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        match subsystem {
            Subsystem::A => rho[(a2 * db + b, a * db + b2)],
            Subsystem::B => rho[(a * db + b2, a2 * db + b)],
        }
    }))
}

/// Partial trace over `traced`, returning the operator on the other factor.
pub fn partial_trace(rho: &CMatrix, dims: (usize, usize), traced: Subsystem) -> Result<CMatrix> {
    check_bipartite(rho, dims)?;
    let (da, db) = dims;
    Ok(match traced {
        Subsystem::B => CMatrix::from_fn(da, da, |a, a2| {
            (0..db).map(|b| rho[(a * db + b, a2 * db + b)]).sum()
        }),
        Subsystem::A => CMatrix::from_fn(db, db, |b, b2| {
            (0..da).map(|a| rho[(a * db + b, a * db + b2)]).sum()
        }),
    })
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let matrix = hermitian_part(&matrix)?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = hermitian_eigenvalues(&matrix)?[0];
        if min < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Pure state `|ψ⟩⟨ψ|`; the vector is normalized first.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = psi.unscale(norm);
        Self::new(&psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// `|Φ⟩ = Σₙ |n⟩|n⟩ / √d` and its projector.
#[derive(Clone, Debug)]
pub struct MaxEntangledState {
    dim: usize,
    vector: DVector<C64>,
    projector: CMatrix,
}

impl MaxEntangledState {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "maximally entangled state needs d >= 2, got {dim}"
            )));
        }
        let amp = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
        let vector = DVector::from_fn(dim * dim, |k, _| {
            if k / dim == k % dim {
                amp
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let projector = &vector * vector.adjoint();
        Ok(Self {
            dim,
            vector,
            projector,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.vector
    }

    pub fn projector(&self) -> &CMatrix {
        &self.projector
    }
}

/// Shorthand for [`MaxEntangledState::new`].
pub fn max_entangled(dim: usize) -> Result<MaxEntangledState> {
    MaxEntangledState::new(dim)
}

/// Linear map on `d×d` operators as a `d²×d²` matrix (column stacking).
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        let n = dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows(),
            });
        }
        Ok(Self { dim, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: identity(dim * dim),
        }
    }

    /// Tabulates an arbitrary linear map by applying it to each `|i⟩⟨j|`.
    pub fn from_linear_map(dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let n = dim * dim;
        let mut matrix = CMatrix::zeros(n, n);
        for j in 0..dim {
            for i in 0..dim {
                let mut unit = CMatrix::zeros(dim, dim);
                unit[(i, j)] = C64::new(1.0, 0.0);
                let image = vectorize(&f(&unit));
                matrix.set_column(i + dim * j, &image);
            }
        }
        Self { dim, matrix }
    }

    /// `ρ ↦ Σ Kᵢ ρ Kᵢ†`.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let dim = kraus
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty Kraus set".into()))?
            .nrows();
        let n = dim * dim;
        let mut matrix = CMatrix::zeros(n, n);
        for k in kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.nrows(),
                });
            }
            matrix += k.conjugate().kronecker(k);
        }
        Ok(Self { dim, matrix })
    }

    /// The (positive but not completely positive) transposition map.
    pub fn transposition(dim: usize) -> Self {
        Self::from_linear_map(dim, |m| m.transpose())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.nrows(),
            });
        }
        Ok(unvectorize(&(&self.matrix * vectorize(rho)), self.dim))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Largest deviation of `vec(1)† S` from `vec(1)†`.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim;
        (0..d * d)
            .map(|col| {
                let row_sum: C64 = (0..d).map(|i| self.matrix[(i + d * i, col)]).sum();
                let target = if col % d == col / d { 1.0 } else { 0.0 };
                (row_sum - target).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.matrix.clone().singular_values().iter().copied().collect()
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Exact inverse when the condition number is below `cond_threshold`,
    /// otherwise the Moore–Penrose pseudoinverse with `pseudo` set.
    pub fn invert(&self, cond_threshold: f64) -> Inversion {
        let svd = self.matrix.clone().svd(true, true);
        let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let min = svd
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let condition = if min == 0.0 { f64::INFINITY } else { max / min };
        if condition < cond_threshold {
            if let Some(inv) = self.matrix.clone().try_inverse() {
                return Inversion {
                    map: Self {
                        dim: self.dim,
                        matrix: inv,
                    },
                    pseudo: false,
                    condition,
                };
            }
        }
        let n = self.dim * self.dim;
        let matrix = svd
            .pseudo_inverse(max / cond_threshold)
            .unwrap_or_else(|_| CMatrix::zeros(n, n));
        Inversion {
            map: Self {
                dim: self.dim,
                matrix,
            },
            pseudo: true,
            condition,
        }
    }

    /// `max |S − P S̄ P|`, where `P` maps `vec(ρ)` to `vec(ρᵀ)`; zero iff the
    /// map sends Hermitian matrices to Hermitian matrices.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.hermitian_mirror()))
    }

    /// Nearest Hermiticity-preserving map, `ρ ↦ (E(ρ) + E(ρ†)†)/2`.
    pub fn hermiticity_preserving_part(&self) -> Self {
        Self {
            dim: self.dim,
            matrix: (&self.matrix + self.hermitian_mirror()).scale(0.5),
        }
    }

    fn hermitian_mirror(&self) -> CMatrix {
        let d = self.dim;
        let swap = |k: usize| (k / d) + d * (k % d);
        let n = d * d;
        CMatrix::from_fn(n, n, |r, c| self.matrix[(swap(r), swap(c))].conj())
    }

    /// `(E ⊗ 1)|Φ⟩⟨Φ|`, computed by reshuffling the superoperator matrix:
    /// `C[a·d+i, b·d+j] = S[a + d·b, i + d·j] / d`.
    pub fn choi(&self) -> ChoiMatrix {
        let d = self.dim;
        let n = d * d;
        let inv_d = 1.0 / d as f64;
        let matrix = CMatrix::from_fn(n, n, |r, c| {
            let (a, i) = (r / d, r % d);
            let (b, j) = (c / d, c % d);
            self.matrix[(a + d * b, i + d * j)] * inv_d
        });
        ChoiMatrix { dim: d, matrix }
    }
}

/// Result of [`Superoperator::invert`].
#[derive(Clone, Debug)]
pub struct Inversion {
    pub map: Superoperator,
    /// Set when the pseudoinverse was used.
    pub pseudo: bool,
    pub condition: f64,
}

/// `(E ⊗ 1)|Φ⟩⟨Φ|` for a map `E` on a `d`-level system.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn trace_norm(&self) -> Result<f64> {
        trace_norm(&self.matrix)
    }

    pub fn is_completely_positive(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol)
    }
}

/// Shorthand for [`Superoperator::choi`].
pub fn choi_of(map: &Superoperator) -> ChoiMatrix {
    map.choi()
}
