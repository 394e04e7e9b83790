//! Construction and spectral analysis of the induced CP maps τ and τ′:
//! Kraus/superoperator forms, fixed points, ergodicity certification,
//! mixing rate κ, and channel iteration.
//!
//! Vectorization is column-stacking: `vec(ρ)[d·b + a] = ρ[a,b]`, so the
//! superoperator is `Σ_i conj(K_i) ⊗ K_i` under the first-factor-most-
//! significant Kronecker convention.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_general, eigvals_general, tensor_product, ComplexMatrix, DensityMatrix, StateVector,
};
use crate::tol;

type C64 = Complex64;

/// A CP trace-preserving map held as Kraus operators.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
}

/// Spectral diagnostics of a channel's superoperator.
#[derive(Debug, Clone)]
pub struct ChannelDiagnostics {
    /// Superoperator eigenvalues, sorted by descending modulus.
    pub eigenvalues: Vec<C64>,
    /// Fixed point reconstructed from the eigenvalue-1 eigenvector,
    /// Hermitized and trace-normalized.
    pub fixed_point: DensityMatrix,
    /// Second-largest eigenvalue modulus (the mixing rate).
    pub kappa: f64,
    /// True iff eigenvalue 1 is nondegenerate, the rest of the spectrum is
    /// strictly inside the unit disk, and the fixed point is pure.
    pub ergodic_pure: bool,
    pub purity_of_fixed_point: f64,
    /// All fixed points when the eigenvalue-1 eigenspace is degenerate
    /// (empty in the nondegenerate case).
    pub degenerate_fixed_points: Vec<DensityMatrix>,
}

fn qubit_dims(dim: usize) -> Vec<usize> {
    if dim.is_power_of_two() {
        vec![2; dim.trailing_zeros() as usize]
    } else {
        vec![dim]
    }
}

impl QuantumChannel {
    pub fn from_kraus(dim: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let mut completeness = ComplexMatrix::zeros(dim, dim);
        for k in &kraus {
            if k.rows() != dim || k.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, channel dim is {}",
                    k.rows(),
                    k.cols(),
                    dim
                )));
            }
            completeness = completeness.add(&k.dagger().matmul(k));
        }
        let defect = completeness
            .sub(&ComplexMatrix::identity(dim))
            .frobenius();
        if defect > tol::UNITARITY {
            return Err(Error::DimensionMismatch(format!(
                "Kraus set is not trace preserving: ‖ΣK†K − I‖_F = {defect:.3e}"
            )));
        }
        Ok(Self { dim, kraus })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// One application of the channel.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} vs channel dim {}",
                rho.dim(),
                self.dim
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out = out.add(&k.matmul(rho.matrix()).matmul(&k.dagger()));
        }
        Ok(DensityMatrix::new_unchecked(out, rho.subsystem_dims().to_vec()))
    }

    /// Dense superoperator matrix `Σ_i conj(K_i) ⊗ K_i`.
    pub fn superoperator(&self) -> ComplexMatrix {
        let d2 = self.dim * self.dim;
        let mut s = ComplexMatrix::zeros(d2, d2);
        for k in &self.kraus {
            let kc = conj(k);
            s = s.add(&tensor_product(&kc, k));
        }
        s
    }

    /// Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ τ(|i⟩⟨j|)`; PSD for a CP map.
    pub fn choi(&self) -> ComplexMatrix {
        let d = self.dim;
        let mut c = ComplexMatrix::zeros(d * d, d * d);
        for k in &self.kraus {
            for i in 0..d {
                for a in 0..d {
                    let x = k.get(a, i);
                    if x.norm_sqr() == 0.0 {
                        continue;
                    }
                    for j in 0..d {
                        for b in 0..d {
                            let add = x * k.get(b, j).conj();
                            let r = i * d + a;
                            let cidx = j * d + b;
                            c.set(r, cidx, c.get(r, cidx) + add);
                        }
                    }
                }
            }
        }
        c
    }
}

fn conj(m: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out.set(i, j, m.get(i, j).conj());
        }
    }
    out
}

/// The downloading channel
/// `τ(ρ) = Tr_C[U(|0⟩_C⟨0| ⊗ ρ)U†]` with Kraus operators
/// `K_i = (⟨i|_C ⊗ I) U (|0⟩_C ⊗ I)`.
pub fn make_tau(
    u: &ComplexMatrix,
    zero_c: &StateVector,
    dims: (usize, usize),
) -> Result<QuantumChannel> {
    let (d_c, d_cbar) = dims;
    if u.rows() != d_c * d_cbar || u.cols() != d_c * d_cbar {
        return Err(Error::DimensionMismatch(format!(
            "U is {}x{}, expected {}",
            u.rows(),
            u.cols(),
            d_c * d_cbar
        )));
    }
    let defect = u.unitarity_defect();
    if defect > tol::UNITARITY {
        return Err(Error::NotUnitary { defect });
    }
    if zero_c.dim() != d_c {
        return Err(Error::DimensionMismatch(format!(
            "controller state dim {} vs d_C {}",
            zero_c.dim(),
            d_c
        )));
    }
    if (zero_c.norm() - 1.0).abs() > tol::TRACE {
        return Err(Error::DimensionMismatch(
            "controller state is not normalized".into(),
        ));
    }
    let mut kraus = Vec::with_capacity(d_c);
    for i in 0..d_c {
        let mut k = ComplexMatrix::zeros(d_cbar, d_cbar);
        for a in 0..d_cbar {
            for ap in 0..d_cbar {
                let mut acc = C64::new(0.0, 0.0);
                for (j, &amp) in zero_c.amplitudes().iter().enumerate() {
                    acc += u.get(i * d_cbar + a, j * d_cbar + ap) * amp;
                }
                k.set(a, ap, acc);
            }
        }
        kraus.push(k);
    }
    QuantumChannel::from_kraus(d_cbar, kraus)
}

/// The uploading channel τ′: as `make_tau` with `U ↦ U†`.
pub fn make_tau_prime(
    u: &ComplexMatrix,
    zero_c: &StateVector,
    dims: (usize, usize),
) -> Result<QuantumChannel> {
    make_tau(&u.dagger(), zero_c, dims)
}

/// `τⁿ(ρ)` by repeated Kraus application.
pub fn iterate(ch: &QuantumChannel, rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    for _ in 0..n {
        out = ch.apply(&out)?;
    }
    Ok(out)
}

/// `η = ⟨0|τ^{L−1}(ρ′)|0⟩` for L ≥ 1.
pub fn eta_from_channel(
    ch: &QuantumChannel,
    rho_prime: &DensityMatrix,
    l_rounds: usize,
    zero_cbar: &StateVector,
) -> Result<f64> {
    assert!(l_rounds >= 1, "L must be at least 1");
    let rho = iterate(ch, rho_prime, l_rounds - 1)?;
    Ok(overlap(&rho, zero_cbar))
}

fn overlap(rho: &DensityMatrix, state: &StateVector) -> f64 {
    let v = rho.matrix().matvec(state.amplitudes());
    state
        .amplitudes()
        .iter()
        .zip(v.iter())
        .map(|(a, b)| (a.conj() * b).re)
        .sum()
}

/// η for every L in 1..=lmax, computed incrementally, together with a
/// cancellation-free `1 − η` (sum of the off-vacuum diagonal weight; only
/// available when the reference state is the computational vacuum).
pub fn eta_sequence(
    ch: &QuantumChannel,
    rho_prime: &DensityMatrix,
    lmax: usize,
    zero_cbar: &StateVector,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let vacuum_index = basis_index(zero_cbar);
    let mut etas = Vec::with_capacity(lmax);
    let mut residuals = Vec::with_capacity(lmax);
    let mut rho = rho_prime.clone();
    for l in 1..=lmax {
        if l > 1 {
            rho = ch.apply(&rho)?;
        }
        etas.push(overlap(&rho, zero_cbar));
        let res = match vacuum_index {
            Some(k) => (0..rho.dim())
                .filter(|&i| i != k)
                .map(|i| rho.diagonal_element(i).max(0.0))
                .sum::<f64>(),
            None => 1.0 - overlap(&rho, zero_cbar),
        };
        residuals.push(res);
    }
    Ok((etas, residuals))
}

fn basis_index(state: &StateVector) -> Option<usize> {
    let mut idx = None;
    for (i, a) in state.amplitudes().iter().enumerate() {
        if a.norm() > 1e-12 {
            if idx.is_some() {
                return None;
            }
            if (a - C64::new(1.0, 0.0)).norm() > 1e-12 {
                return None;
            }
            idx = Some(i);
        }
    }
    idx
}

/// Least-squares fit of the tail of `log(1−η)` against L.
///
/// `etas[i]` is `η^(L)` for `L = i + 1`; `residuals` may carry a
/// cancellation-free `1 − η` (pass the same-length vector from
/// [`eta_sequence`]), otherwise it is recomputed as `1 − η`.
/// Returns `(rate, prefactor)` with `1−η ≈ prefactor·e^{rate·L}` on the
/// fitted tail.
pub fn convergence_fit(etas: &[f64], residuals: Option<&[f64]>) -> Result<(f64, f64)> {
    let res: Vec<f64> = match residuals {
        Some(r) => r.to_vec(),
        None => etas.iter().map(|&e| 1.0 - e).collect(),
    };
    let valid: Vec<(f64, f64)> = res
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > tol::ETA_FLOOR)
        .map(|(i, &r)| ((i + 1) as f64, r.ln()))
        .collect();
    if valid.len() < 8 {
        return Err(Error::FitRefused(format!(
            "only {} points above the numerical floor; need at least 8",
            valid.len()
        )));
    }
    let tail = &valid[valid.len() / 2..];
    let n = tail.len() as f64;
    let sx: f64 = tail.iter().map(|p| p.0).sum();
    let sy: f64 = tail.iter().map(|p| p.1).sum();
    let sxx: f64 = tail.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = tail.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(Error::FitRefused("degenerate abscissa in fit".into()));
    }
    let rate = (n * sxy - sx * sy) / denom;
    let intercept = (sy - rate * sx) / n;
    Ok((rate, intercept.exp()))
}

/// Excitation-difference grading of a Kraus set.
///
/// When every Kraus operator shifts the popcount of the basis index by a
/// single constant, the superoperator is block-diagonal over the
/// excitation difference `q = popcount(row) − popcount(col)` of the
/// vectorized index pair. Heisenberg evolution with a computational-basis
/// controller state always has this property; the spectrum is then
/// computed per block, which is what keeps the 4096-dimensional
/// superoperators of 6 uncontrolled qubits tractable.
fn excitation_grading(kraus: &[ComplexMatrix], dim: usize) -> Option<Vec<i64>> {
    if !dim.is_power_of_two() {
        return None;
    }
    let exc = |i: usize| (i as u64).count_ones() as i64;
    let mut shifts = Vec::with_capacity(kraus.len());
    for k in kraus {
        let mut shift: Option<i64> = None;
        for a in 0..dim {
            for ap in 0..dim {
                if k.get(a, ap).norm() > 1e-13 {
                    let s = exc(a) - exc(ap);
                    match shift {
                        None => shift = Some(s),
                        Some(prev) if prev != s => return None,
                        _ => {}
                    }
                }
            }
        }
        // An identically zero Kraus operator is compatible with any shift.
        shifts.push(shift.unwrap_or(0));
    }
    Some(shifts)
}

struct SpectrumResult {
    eigenvalues: Vec<C64>,
    /// Eigenvectors (in full d² vectorized coordinates) for eigenvalues
    /// within the degeneracy gap of 1.
    unit_eigenvectors: Vec<Vec<C64>>,
}

fn spectrum_dense(ch: &QuantumChannel) -> Result<SpectrumResult> {
    let s = ch.superoperator();
    let (vals, vecs) = eig_general(&s)?;
    let d2 = ch.dim() * ch.dim();
    let mut unit = Vec::new();
    for (k, lam) in vals.iter().enumerate() {
        if (lam - C64::new(1.0, 0.0)).norm() <= tol::SPECTRAL_GAP {
            unit.push((0..d2).map(|i| vecs.get(i, k)).collect());
        }
    }
    Ok(SpectrumResult {
        eigenvalues: vals,
        unit_eigenvectors: unit,
    })
}

fn spectrum_graded(ch: &QuantumChannel) -> Result<SpectrumResult> {
    let d = ch.dim();
    let n_qubits = d.trailing_zeros() as i64;
    let exc = |i: usize| (i as u64).count_ones() as i64;
    let mut eigenvalues = Vec::with_capacity(d * d);
    let mut unit_eigenvectors = Vec::new();

    for q in -n_qubits..=n_qubits {
        // Vectorized basis pairs (a, b) with exc(a) − exc(b) = q;
        // vec index is d·b + a.
        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|b| (0..d).map(move |a| (a, b)))
            .filter(|&(a, b)| exc(a) - exc(b) == q)
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let m = pairs.len();
        let mut block = ComplexMatrix::zeros(m, m);
        for (r, &(a, b)) in pairs.iter().enumerate() {
            for (c, &(ap, bp)) in pairs.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for k in ch.kraus() {
                    acc += k.get(a, ap) * k.get(b, bp).conj();
                }
                block.set(r, c, acc);
            }
        }
        // Eigenvalue 1 can only live in the q = 0 block (the fixed point
        // is Hermitian); vectors are only needed there.
        if q == 0 {
            let (vals, vecs) = eig_general(&block)?;
            for (k, lam) in vals.iter().enumerate() {
                if (lam - C64::new(1.0, 0.0)).norm() <= tol::SPECTRAL_GAP {
                    let mut full = vec![C64::new(0.0, 0.0); d * d];
                    for (r, &(a, b)) in pairs.iter().enumerate() {
                        full[d * b + a] = vecs.get(r, k);
                    }
                    unit_eigenvectors.push(full);
                }
            }
            eigenvalues.extend(vals);
        } else {
            eigenvalues.extend(eigvals_general(&block)?);
        }
    }
    Ok(SpectrumResult {
        eigenvalues,
        unit_eigenvectors,
    })
}

fn density_from_vectorized(v: &[C64], dim: usize) -> Option<DensityMatrix> {
    let mut rho = ComplexMatrix::zeros(dim, dim);
    for b in 0..dim {
        for a in 0..dim {
            rho.set(a, b, v[dim * b + a]);
        }
    }
    // Hermitize; an eigenvector is only defined up to a phase.
    let herm = rho.add(&rho.dagger()).scale(C64::new(0.5, 0.0));
    let anti = rho.sub(&rho.dagger()).scale(C64::new(0.5, 0.0));
    let rho = if herm.frobenius() >= anti.frobenius() {
        herm
    } else {
        // purely anti-Hermitian phase: rotate by i
        anti.scale(C64::new(0.0, -1.0))
    };
    let tr = rho.trace();
    if tr.norm() < 1e-10 * rho.frobenius().max(1e-300) {
        return None; // traceless invariant operator, not a state
    }
    let rho = rho.scale(C64::new(1.0, 0.0) / tr);
    Some(DensityMatrix::new_unchecked(rho, qubit_dims(dim)))
}

/// Full spectral diagnostics of a channel.
///
/// A degenerate eigenvalue-1 eigenspace is reported, not an error:
/// `ergodic_pure` is false and every reconstructed fixed point is listed.
pub fn diagnose(ch: &QuantumChannel) -> Result<ChannelDiagnostics> {
    if ch.dim() > tol::UNCONTROLLED_DIM_CAP {
        return Err(Error::DimensionMismatch(format!(
            "channel dim {} exceeds the superoperator spectrum cap {}",
            ch.dim(),
            tol::UNCONTROLLED_DIM_CAP
        )));
    }
    let spectrum = match excitation_grading(ch.kraus(), ch.dim()) {
        Some(_) => spectrum_graded(ch)?,
        None => spectrum_dense(ch)?,
    };
    let mut eigenvalues = spectrum.eigenvalues;
    eigenvalues.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());

    let top = eigenvalues.first().copied().unwrap_or_default();
    if (top.norm() - 1.0).abs() > tol::SPECTRAL_GAP {
        return Err(Error::Backend(format!(
            "largest superoperator eigenvalue modulus {} differs from 1",
            top.norm()
        )));
    }
    let kappa = eigenvalues.get(1).map(|z| z.norm()).unwrap_or(0.0).min(1.0);

    let mut fixed_points: Vec<DensityMatrix> = spectrum
        .unit_eigenvectors
        .iter()
        .filter_map(|v| density_from_vectorized(v, ch.dim()))
        .collect();
    if fixed_points.is_empty() {
        return Err(Error::Backend(
            "no fixed point recovered from the eigenvalue-1 eigenspace".into(),
        ));
    }
    let degenerate = spectrum.unit_eigenvectors.len() > 1;
    let fixed_point = fixed_points.remove(0);
    let purity = fixed_point.purity();
    let ergodic_pure = !degenerate
        && kappa <= 1.0 - tol::SPECTRAL_GAP
        && purity >= 1.0 - tol::PURE_FIXED_POINT;

    Ok(ChannelDiagnostics {
        eigenvalues,
        fixed_point,
        kappa,
        ergodic_pure,
        purity_of_fixed_point: purity,
        degenerate_fixed_points: if degenerate { fixed_points } else { Vec::new() },
    })
}

/// Second-largest eigenvalue modulus restricted to the magnetization-
/// diagonal (q = 0) block of the superoperator.
///
/// For excitation-graded channels this block alone governs the
/// asymptotic decay of the vacuum population 1 − η: the globally
/// subleading modes are coherences between different excitation
/// sectors and carry no diagonal weight, so populations relax at the
/// q = 0 rate (generically κ² when the global κ sits in the q = ±1
/// blocks). Falls back to the global second-largest modulus when the
/// Kraus set carries no grading.
pub fn vacuum_rate_kappa(ch: &QuantumChannel) -> Result<f64> {
    if excitation_grading(ch.kraus(), ch.dim()).is_none() {
        return Ok(diagnose(ch)?.kappa);
    }
    let d = ch.dim();
    let exc = |i: usize| (i as u64).count_ones() as i64;
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|b| (0..d).map(move |a| (a, b)))
        .filter(|&(a, b)| exc(a) == exc(b))
        .collect();
    let m = pairs.len();
    let mut block = ComplexMatrix::zeros(m, m);
    for (r, &(a, b)) in pairs.iter().enumerate() {
        for (c, &(ap, bp)) in pairs.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in ch.kraus() {
                acc += k.get(a, ap) * k.get(b, bp).conj();
            }
            block.set(r, c, acc);
        }
    }
    let mut moduli: Vec<f64> = eigvals_general(&block)?.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|x, y| y.partial_cmp(x).unwrap());
    if moduli.is_empty() || (moduli[0] - 1.0).abs() > tol::SPECTRAL_GAP {
        return Err(Error::Backend(
            "q = 0 block lacks a unit-modulus eigenvalue".into(),
        ));
    }
    Ok(moduli.get(1).copied().unwrap_or(0.0).min(1.0))
}
