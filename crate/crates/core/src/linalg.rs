//! Dense complex linear-algebra kernel: tensor products, partial trace,
//! Hermitian eigendecomposition, matrix exponential, SVD, polar
//! decomposition, and matrix norms.
//!
//! Subsystem ordering convention: factor 0 is the most significant part of
//! the flattened index, i.e. for dims `(d0, d1)` the joint index is
//! `i0 * d1 + i1`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, SVD, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    data: Array2<C64>,
}

impl ComplexMatrix {
    pub fn from_array(data: Array2<C64>) -> Self {
        Self { data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: Array2::zeros((rows, cols)),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: Array2::eye(n),
        }
    }

    /// Build from a row-major slice of entries.
    pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self {
            data: Array2::from_shape_vec((rows, cols), entries.to_vec()).unwrap(),
        })
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let v: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(rows, cols, &v)
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m.data[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[(i, j)] = v;
    }

    pub fn array(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let mut out = Array2::zeros((self.cols(), self.rows()));
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out[(j, i)] = self.data[(i, j)].conj();
            }
        }
        Self { data: out }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols(), other.rows(), "matmul dimension mismatch");
        Self {
            data: self.data.dot(&other.data),
        }
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols(), v.len(), "matvec dimension mismatch");
        let v = Array1::from(v.to_vec());
        self.data.dot(&v).to_vec()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            data: &self.data - &other.data,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            data: self.data.mapv(|x| x * s),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows().min(self.cols()))
            .map(|i| self.data[(i, i)])
            .sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from the adjoint.
    pub fn max_asymmetry(&self) -> f64 {
        if self.rows() != self.cols() {
            return f64::INFINITY;
        }
        let mut m = 0.0f64;
        for i in 0..self.rows() {
            for j in 0..=i {
                let d = (self.data[(i, j)] - self.data[(j, i)].conj()).norm();
                m = m.max(d);
            }
        }
        m
    }

    pub fn is_hermitian(&self, atol: f64) -> bool {
        self.max_asymmetry() <= atol
    }

    /// `‖A†A − I‖_F`
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.dagger().matmul(self);
        g.sub(&Self::identity(g.rows())).frobenius()
    }

    pub fn is_unitary(&self, atol: f64) -> bool {
        self.rows() == self.cols() && self.unitarity_defect() <= atol
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Pure state amplitudes with subsystem metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    subsystem_dims: Vec<usize>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>, subsystem_dims: Vec<usize>) -> Result<Self> {
        let dim: usize = subsystem_dims.iter().product();
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "state has {} amplitudes but subsystem dims multiply to {}",
                amplitudes.len(),
                dim
            )));
        }
        Ok(Self {
            amplitudes,
            subsystem_dims,
        })
    }

    /// Computational basis state `|k⟩` of the given dimension.
    pub fn basis(dim: usize, k: usize, subsystem_dims: Vec<usize>) -> Result<Self> {
        if k >= dim {
            return Err(Error::IndexOutOfRange(format!("basis index {k} ≥ dim {dim}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[k] = C64::new(1.0, 0.0);
        Self::new(amps, subsystem_dims)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn subsystem_dims(&self) -> &[usize] {
        &self.subsystem_dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Outer product `|ψ⟩⟨ψ|` as a density matrix.
    pub fn to_density(&self) -> DensityMatrix {
        let d = self.dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, self.amplitudes[i] * self.amplitudes[j].conj());
            }
        }
        DensityMatrix::new_unchecked(m, self.subsystem_dims.clone())
    }

    /// Fix the global phase by making the largest-modulus amplitude
    /// real-positive. Deterministic for regression tests.
    pub fn fix_phase(&mut self) {
        let mut best = 0usize;
        let mut best_mod = 0.0f64;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm() > best_mod {
                best_mod = a.norm();
                best = i;
            }
        }
        if best_mod > 0.0 {
            let phase = self.amplitudes[best] / best_mod;
            let corr = phase.conj();
            for a in &mut self.amplitudes {
                *a *= corr;
            }
        }
    }
}

/// Density matrix with subsystem metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    subsystem_dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validating constructor: Hermitian, unit trace, PSD.
    pub fn new(matrix: ComplexMatrix, subsystem_dims: Vec<usize>) -> Result<Self> {
        let dim: usize = subsystem_dims.iter().product();
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "density matrix is {}x{} but subsystem dims multiply to {}",
                matrix.rows(),
                matrix.cols(),
                dim
            )));
        }
        let asym = matrix.max_asymmetry();
        if asym > tol::HERMITICITY {
            return Err(Error::NotHermitian { max_asymmetry: asym });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::DimensionMismatch(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let (evals, _) = eig_hermitian(&matrix)?;
        if evals.iter().any(|&x| x < -tol::PSD) {
            return Err(Error::DimensionMismatch(format!(
                "density matrix has negative eigenvalue {:.3e}",
                evals.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        Ok(Self {
            matrix,
            subsystem_dims,
        })
    }

    /// Constructor for internally produced matrices where validity is
    /// guaranteed by construction.
    pub fn new_unchecked(matrix: ComplexMatrix, subsystem_dims: Vec<usize>) -> Self {
        Self {
            matrix,
            subsystem_dims,
        }
    }

    pub fn pure(state: &StateVector) -> Self {
        state.to_density()
    }

    pub fn maximally_mixed(subsystem_dims: Vec<usize>) -> Self {
        let dim: usize = subsystem_dims.iter().product();
        let m = ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0));
        Self::new_unchecked(m, subsystem_dims)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn subsystem_dims(&self) -> &[usize] {
        &self.subsystem_dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).trace().re
    }

    /// `⟨k|ρ|k⟩` for a computational basis index.
    pub fn diagonal_element(&self, k: usize) -> f64 {
        self.matrix.get(k, k).re
    }

    /// `½‖ρ − σ‖₁` (half the sum of singular values of the difference).
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let diff = self.matrix.sub(&other.matrix);
        0.5 * norms(&diff).trace_norm
    }

    /// Spectral decomposition into `(probability, eigenvector)` pairs,
    /// skipping numerically zero weights.
    pub fn eigen_mixture(&self) -> Result<Vec<(f64, StateVector)>> {
        let (evals, evecs) = eig_hermitian(&self.matrix)?;
        let mut out = Vec::new();
        for (k, &p) in evals.iter().enumerate() {
            if p > 1e-14 {
                let amps: Vec<C64> = (0..self.dim()).map(|i| evecs.get(i, k)).collect();
                out.push((p, StateVector::new(amps, self.subsystem_dims.clone())?));
            }
        }
        Ok(out)
    }
}

/// Matrix norms computed in one pass over the SVD.
#[derive(Debug, Clone, Copy)]
pub struct Norms {
    pub frobenius: f64,
    /// Sum of singular values (standard trace norm).
    pub trace_norm: f64,
    /// Largest singular value.
    pub spectral: f64,
}

/// Kronecker product with the first factor most significant:
/// `(A⊗B)[i_a·rb + i_b, j_a·cb + j_b] = A[i_a, j_a]·B[i_b, j_b]`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = (a.rows(), a.cols());
    let (rb, cb) = (b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    for ia in 0..ra {
        for ja in 0..ca {
            let x = a.get(ia, ja);
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..rb {
                for jb in 0..cb {
                    out.set(ia * rb + ib, ja * cb + jb, x * b.get(ib, jb));
                }
            }
        }
    }
    out
}

/// Tensor product of state vectors, first factor most significant.
pub fn tensor_states(a: &StateVector, b: &StateVector) -> StateVector {
    let mut amps = Vec::with_capacity(a.dim() * b.dim());
    for x in a.amplitudes() {
        for y in b.amplitudes() {
            amps.push(x * y);
        }
    }
    let mut dims = a.subsystem_dims().to_vec();
    dims.extend_from_slice(b.subsystem_dims());
    StateVector::new(amps, dims).unwrap()
}

/// Reduced density matrix over the kept subsystems (order preserved).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = rho.subsystem_dims();
    let n = dims.len();
    if keep.is_empty() {
        return Err(Error::IndexOutOfRange("keep set is empty".into()));
    }
    for &k in keep {
        if k >= n {
            return Err(Error::IndexOutOfRange(format!(
                "keep index {k} out of range for {n} subsystems"
            )));
        }
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() {
        return Err(Error::IndexOutOfRange("duplicate keep index".into()));
    }
    let keep = sorted;
    let traced: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();

    // Strides for the original flattened index, factor 0 most significant.
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let keep_dims: Vec<usize> = keep.iter().map(|&i| dims[i]).collect();
    let keep_dim: usize = keep_dims.iter().product();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let traced_dim: usize = traced_dims.iter().product::<usize>().max(1);

    let unflatten = |mut idx: usize, ds: &[usize]| -> Vec<usize> {
        let mut out = vec![0usize; ds.len()];
        for i in (0..ds.len()).rev() {
            out[i] = idx % ds[i];
            idx /= ds[i];
        }
        out
    };

    let mut out = ComplexMatrix::zeros(keep_dim, keep_dim);
    for r in 0..keep_dim {
        let r_multi = unflatten(r, &keep_dims);
        for c in 0..keep_dim {
            let c_multi = unflatten(c, &keep_dims);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..traced_dim {
                let t_multi = unflatten(t, &traced_dims);
                let mut row = 0usize;
                let mut col = 0usize;
                for (pos, &sub) in keep.iter().enumerate() {
                    row += r_multi[pos] * strides[sub];
                    col += c_multi[pos] * strides[sub];
                }
                for (pos, &sub) in traced.iter().enumerate() {
                    row += t_multi[pos] * strides[sub];
                    col += t_multi[pos] * strides[sub];
                }
                acc += rho.matrix().get(row, col);
            }
            out.set(r, c, acc);
        }
    }
    Ok(DensityMatrix::new_unchecked(out, keep_dims))
}

/// Hermitian eigendecomposition `h = Q Λ Q†`, eigenvalues ascending,
/// eigenvectors as columns of `Q`.
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let asym = h.max_asymmetry();
    if asym > tol::HERMITICITY {
        return Err(Error::NotHermitian { max_asymmetry: asym });
    }
    // The backend reads the row-major buffer as its transpose, so for a
    // Hermitian input it diagonalizes conj(H); conjugating the returned
    // vectors recovers the eigenvectors of H (verified by the residual
    // oracle tests below).
    let (w, q) = h.array().eigh(UPLO::Lower)?;
    Ok((w.to_vec(), ComplexMatrix::from_array(q.mapv(|z| z.conj()))))
}

/// General complex eigendecomposition (eigenvalues plus right eigenvectors
/// as columns). Used for superoperator spectra.
pub fn eig_general(m: &ComplexMatrix) -> Result<(Vec<C64>, ComplexMatrix)> {
    let (vals, vecs) = m.array().eig()?;
    Ok((vals.to_vec(), ComplexMatrix::from_array(vecs)))
}

/// Eigenvalues only of a general complex matrix.
pub fn eigvals_general(m: &ComplexMatrix) -> Result<Vec<C64>> {
    // LAPACK zgeev without eigenvectors; ndarray-linalg exposes it via
    // `eigvals` on the underlying array.
    use ndarray_linalg::EigVals;
    Ok(m.array().eigvals()?.to_vec())
}

/// `U = exp(−iHt)` via Hermitian eigendecomposition.
pub fn evolve_unitary(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let (w, q) = eig_hermitian(h)?;
    let phases: Vec<C64> = w
        .iter()
        .map(|&lam| (C64::new(0.0, -lam * t)).exp())
        .collect();
    let d = ComplexMatrix::diag(&phases);
    Ok(q.matmul(&d).matmul(&q.dagger()))
}

/// Singular value decomposition `m = U Σ V†`; returns `(U, σ, V†)`.
pub fn svd(m: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    let (u, s, vt) = m.array().svd(true, true)?;
    Ok((
        ComplexMatrix::from_array(u.unwrap()),
        s.to_vec(),
        ComplexMatrix::from_array(vt.unwrap()),
    ))
}

/// Singular values only.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let (_, s, _) = m.array().svd(false, false)?;
    Ok(s.to_vec())
}

/// Left polar decomposition `d = p·v` with `v` unitary and `p` PSD
/// Hermitian. Returned as `(v, p, non_unique)`.
///
/// Computed via SVD `d = AΣB†`: `v = AB†`, `p = AΣA†`. For singular values
/// below the floor the unitary completion pairs the left and right null
/// vectors in SVD index order, which is deterministic for a fixed input;
/// `non_unique` is set in that case.
pub fn polar_decompose(d: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix, bool)> {
    if d.rows() != d.cols() {
        return Err(Error::DimensionMismatch(format!(
            "polar decomposition needs a square matrix, got {}x{}",
            d.rows(),
            d.cols()
        )));
    }
    let (a, s, bt) = svd(d)?;
    let non_unique = s.iter().any(|&x| x < tol::SINGULAR_FLOOR);
    let v = a.matmul(&bt);
    let sd = ComplexMatrix::diag(&s.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
    let p = a.matmul(&sd).matmul(&a.dagger());
    Ok((v, p, non_unique))
}

/// Frobenius, trace, and spectral norms.
pub fn norms(m: &ComplexMatrix) -> Norms {
    let frobenius = m.frobenius();
    let s = singular_values(m).expect("SVD failed in norms");
    Norms {
        frobenius,
        trace_norm: s.iter().sum(),
        spectral: s.first().copied().unwrap_or(0.0),
    }
}


#[cfg(test)]
pub use tests::haar_unitary;
