//! Code vectors, Gram matrix, the linear map D and its best-unitary
//! approximation (the decoder/encoder), exact download/upload fidelities,
//! and the analytic lower bounds.
//!
//! D is never materialized on the exponentially large memory space. With
//! `w_k = D|ψ_k⟩` (the unnormalized code vectors) and `G = [⟨w_j|w_k⟩]`,
//! every quantity reduces to d×d algebra: the nearest isometry to D has
//! column matrix `Φ G^{−1/2}`, the residual is `Σ(√λ_k − 1)²` over the
//! eigenvalues of G, and the abstract d×d decoder unitary is the polar
//! factor of the (positive-diagonal) Cholesky factor of G.

use num_complex::Complex64;

use crate::channel;
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexMatrix, DensityMatrix, StateVector};
use crate::protocol::{CompiledProtocol, Direction};
use crate::tol;

type C64 = Complex64;

/// The per-basis code data and derived decoder for one protocol
/// configuration and direction.
#[derive(Debug, Clone)]
pub struct CodeMap {
    pub basis_labels: Vec<String>,
    /// Normalized code vectors |φ_k⟩ on the memory space (natural phases,
    /// as produced by the swap stage).
    pub phi_vectors: Vec<StateVector>,
    /// Gram matrix of the normalized code vectors; unit diagonal.
    pub gram: ComplexMatrix,
    pub eta_list: Vec<f64>,
    pub eta0: f64,
    /// Abstract d×d unitary representing the best-unitary approximation in
    /// a canonical orthonormal frame of the code subspace.
    pub decoder: ComplexMatrix,
    /// `‖D − V‖_F`.
    pub residual: f64,
    /// Eigenvalues of D†D, kept for bound checks and serialization.
    pub lambdas: Vec<f64>,
    /// Column matrix of the nearest isometry `V = Φ G^{−1/2}`
    /// (memory dim × d, orthonormal columns).
    frame: ComplexMatrix,
    direction: Direction,
    l_rounds: usize,
    t: f64,
    dim: usize,
}

impl CodeMap {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    fn check_match(&self, p: &CompiledProtocol) -> Result<()> {
        let ok = self.direction == p.cfg.direction
            && self.l_rounds == p.cfg.l_rounds
            && self.t == p.cfg.t
            && self.dim == p.layout().dim_system();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "code map was computed for a different protocol configuration".into(),
            ))
        }
    }

    /// Encode a system-basis coordinate vector into the memory space:
    /// the column action of the nearest isometry.
    pub fn encode(&self, coords: &[C64]) -> Result<Vec<C64>> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "coordinate vector has length {}, code dimension is {}",
                coords.len(),
                self.dim
            )));
        }
        Ok(self.frame.matvec(coords))
    }

    /// Versioned text dump for regression comparison.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("codemap v1\n");
        out.push_str(&format!(
            "dim {} rounds {} t {:.16e} direction {}\n",
            self.dim,
            self.l_rounds,
            self.t,
            match self.direction {
                Direction::Forward => "download",
                Direction::Reverse => "upload",
            }
        ));
        out.push_str(&format!("eta0 {:.16e}\n", self.eta0));
        out.push_str(&format!("residual {:.16e}\n", self.residual));
        for (label, eta) in self.basis_labels.iter().zip(&self.eta_list) {
            out.push_str(&format!("eta {label} {eta:.16e}\n"));
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                let g = self.gram.get(i, j);
                out.push_str(&format!("gram {i} {j} {:.16e} {:.16e}\n", g.re, g.im));
            }
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.decoder.get(i, j);
                out.push_str(&format!("decoder {i} {j} {:.16e} {:.16e}\n", v.re, v.im));
            }
        }
        out
    }
}

/// Raw code vector of one basis state: the memory block left after
/// projecting C on the reset state and C̄ on the vacuum. Returns
/// `(η_k, unnormalized block)`.
fn raw_code_vector(p: &CompiledProtocol, full: &StateVector) -> Result<(f64, Vec<C64>)> {
    let d_c = p.dim_controlled();
    let d_cbar = p.dim_uncontrolled();
    let dm = p.dim_memory();
    let amps = full.amplitudes();
    let zc = p.cfg.zero_c.amplitudes();

    let mut kept = 0.0;
    let mut w = vec![C64::new(0.0, 0.0); dm];
    for b in 0..d_cbar {
        for m in 0..dm {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..d_c {
                acc += zc[a].conj() * amps[(a * d_cbar + b) * dm + m];
            }
            kept += acc.norm_sqr();
            if b == 0 {
                w[m] = acc;
            }
        }
    }
    let total: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let deviation = (total - kept).abs().sqrt();
    if deviation > tol::C_FACTOR_PURITY {
        return Err(Error::ControllerNotReset { deviation });
    }
    let eta: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    Ok((eta, w))
}

/// Upper-triangular Cholesky factor `R` with real-positive diagonal,
/// `G = R†R`. Dimensions here are the code dimension, so the textbook
/// algorithm is plenty.
fn cholesky_upper(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = g.rows();
    let mut r = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = g.get(j, j).re;
        for k in 0..j {
            diag -= r.get(k, j).norm_sqr();
        }
        if diag <= tol::SINGULAR_FLOOR {
            return Err(Error::Backend(
                "Gram matrix is numerically singular".into(),
            ));
        }
        let rjj = diag.sqrt();
        r.set(j, j, C64::new(rjj, 0.0));
        for i in (j + 1)..n {
            let mut acc = g.get(j, i);
            for k in 0..j {
                acc -= r.get(k, j).conj() * r.get(k, i);
            }
            r.set(j, i, acc / rjj);
        }
    }
    Ok(r)
}

/// Hermitian inverse square root via eigendecomposition.
fn inv_sqrt(g: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>)> {
    let (evals, evecs) = eig_hermitian(g)?;
    if evals.iter().any(|&l| l <= tol::SINGULAR_FLOOR) {
        return Err(Error::Backend(
            "Gram matrix is numerically singular".into(),
        ));
    }
    let n = g.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += evecs.get(i, k) * evecs.get(j, k).conj() / evals[k].sqrt();
            }
            out.set(i, j, acc);
        }
    }
    Ok((out, evals))
}

/// Build the code map for the direction baked into the compiled protocol:
/// forward = download (W, τ), reverse = upload (W′, τ′).
pub fn compute_code_map(p: &CompiledProtocol) -> Result<CodeMap> {
    p.ensure_register_cap()?;
    let d = p.layout().dim_system();
    let dm = p.dim_memory();
    if dm < d {
        return Err(Error::Config(format!(
            "memory dimension {dm} is smaller than the code dimension {d}; \
             increase L"
        )));
    }

    let ch = p.channel()?;
    let diag = channel::diagnose(&ch)?;
    if !diag.ergodic_pure {
        return Err(Error::NotErgodic(format!(
            "κ = {:.6}, fixed-point purity = {:.6}, degenerate fixed points: {}",
            diag.kappa,
            diag.purity_of_fixed_point,
            diag.degenerate_fixed_points.len()
        )));
    }

    let n_sys = p.layout().n_system();
    let mut etas = Vec::with_capacity(d);
    let mut raw = Vec::with_capacity(d);
    let mut labels = Vec::with_capacity(d);
    for k in 0..d {
        let psi = StateVector::basis(d, k, vec![d])?;
        let full = match p.cfg.direction {
            Direction::Forward => p.apply_w(&psi)?,
            Direction::Reverse => p.apply_w_prime(&psi)?,
        };
        let (eta, w) = raw_code_vector(p, &full)?;
        etas.push(eta);
        raw.push(w);
        labels.push(format!("{:0width$b}", k, width = n_sys));
    }

    let eta0 = etas.iter().cloned().fold(f64::INFINITY, f64::min);
    if eta0 < 0.5 {
        let l = p.cfg.l_rounds;
        let kappa = diag.kappa.clamp(1e-6, 1.0 - 1e-9);
        let extra = ((0.5 / (1.0 - eta0)).ln() / kappa.ln()).ceil().max(1.0);
        return Err(Error::EtaTooSmall {
            eta0,
            suggested_l: l + extra as usize,
        });
    }

    let mut phi_vectors = Vec::with_capacity(d);
    for (k, w) in raw.iter().enumerate() {
        let inv = 1.0 / etas[k].sqrt();
        phi_vectors.push(StateVector::new(
            w.iter().map(|z| z * inv).collect(),
            vec![p.dim_controlled(); p.cfg.l_rounds],
        )?);
    }

    let mut gram = ComplexMatrix::zeros(d, d);
    let mut g_w = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..dm {
                acc += raw[j][m].conj() * raw[k][m];
            }
            g_w.set(j, k, acc);
            gram.set(j, k, acc / (etas[j].sqrt() * etas[k].sqrt()));
        }
    }

    let (g_inv_sqrt, lambdas) = inv_sqrt(&g_w)?;
    let residual = lambdas
        .iter()
        .map(|&l| (l.sqrt() - 1.0).powi(2))
        .sum::<f64>()
        .sqrt();
    let r = cholesky_upper(&g_w)?;
    let decoder = r.matmul(&g_inv_sqrt);

    // frame = Φ G^{-1/2}: memory-dim × d with orthonormal columns
    let mut frame = ComplexMatrix::zeros(dm, d);
    for col in 0..d {
        for m in 0..dm {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                acc += raw[k][m] * g_inv_sqrt.get(k, col);
            }
            frame.set(m, col, acc);
        }
    }

    Ok(CodeMap {
        basis_labels: labels,
        phi_vectors,
        gram,
        eta_list: etas,
        eta0,
        decoder,
        residual,
        lambdas,
        frame,
        direction: p.cfg.direction,
        l_rounds: p.cfg.l_rounds,
        t: p.cfg.t,
        dim: d,
    })
}

/// `(‖D−V‖_F, √3·d·(1−η₀)^{1/4})` — the residual and its analytic bound.
pub fn decoder_residual_bound(code: &CodeMap) -> (f64, f64) {
    let rhs = 3.0f64.sqrt() * code.dim as f64 * (1.0 - code.eta0).max(0.0).powf(0.25);
    (code.residual, rhs)
}

/// `η₀ − 10·d·(1−η₀)^{1/4}` (may be negative).
pub fn bound_down(eta0: f64, d: usize) -> f64 {
    eta0 - 10.0 * d as f64 * (1.0 - eta0).max(0.0).powf(0.25)
}

/// Same functional form for the uploading direction.
pub fn bound_up(eta0_prime: f64, d: usize) -> f64 {
    bound_down(eta0_prime, d)
}

/// Exact downloading fidelity: run the swap stage on ψ, reduce over the
/// system, and project the memory through the decoder's target state.
pub fn fidelity_down(psi: &StateVector, p: &CompiledProtocol, code: &CodeMap) -> Result<f64> {
    code.check_match(p)?;
    if code.direction != Direction::Forward {
        return Err(Error::Config(
            "fidelity_down needs a download (forward) code map".into(),
        ));
    }
    let chi = code.encode(psi.amplitudes())?;
    let full = p.apply_w(psi)?;
    let ds = p.layout().dim_system();
    let dm = p.dim_memory();
    let amps = full.amplitudes();
    let mut f = 0.0;
    for i in 0..ds {
        let mut overlap = C64::new(0.0, 0.0);
        for m in 0..dm {
            overlap += chi[m].conj() * amps[i * dm + m];
        }
        f += overlap.norm_sqr();
    }
    Ok(f)
}

/// Exact uploading fidelity for a payload state (expressed in the code
/// coordinates), plus the analytic lower bound for comparison.
pub fn fidelity_up(psi: &StateVector, p: &CompiledProtocol, code: &CodeMap) -> Result<(f64, f64)> {
    code.check_match(p)?;
    if code.direction != Direction::Reverse {
        return Err(Error::Config(
            "fidelity_up needs an upload (reverse) code map".into(),
        ));
    }
    let chi = code.encode(psi.amplitudes())?;
    let xi = upload_state(p, &chi)?;
    let f = payload_overlap(p, psi.amplitudes(), &xi);
    Ok((f, bound_up(code.eta0, code.dim)))
}

/// `W′† (|0⟩_CC̄ ⊗ |χ⟩_M)` for an encoded memory payload.
fn upload_state(p: &CompiledProtocol, chi: &[C64]) -> Result<StateVector> {
    let d_cbar = p.dim_uncontrolled();
    let dm = p.dim_memory();
    let ds = p.layout().dim_system();
    let mut amps = vec![C64::new(0.0, 0.0); ds * dm];
    for (a, &za) in p.cfg.zero_c.amplitudes().iter().enumerate() {
        if za.norm_sqr() == 0.0 {
            continue;
        }
        for (m, &cm) in chi.iter().enumerate() {
            amps[(a * d_cbar) * dm + m] = za * cm;
        }
    }
    let mut dims = vec![p.dim_controlled(), d_cbar];
    dims.extend(std::iter::repeat(p.dim_controlled()).take(p.cfg.l_rounds));
    let full = StateVector::new(amps, dims)?;
    p.apply_w_prime_dagger(&full)
}

/// `⟨ψ| Tr_M[|Ξ⟩⟨Ξ|] |ψ⟩` without materializing the reduced matrix.
fn payload_overlap(p: &CompiledProtocol, coords: &[C64], xi: &StateVector) -> f64 {
    let ds = p.layout().dim_system();
    let dm = p.dim_memory();
    let amps = xi.amplitudes();
    let mut f = 0.0;
    for m in 0..dm {
        let mut overlap = C64::new(0.0, 0.0);
        for i in 0..ds {
            overlap += coords[i].conj() * amps[i * dm + m];
        }
        f += overlap.norm_sqr();
    }
    f
}

/// Exact download → decode → re-encode → upload composition. The returned
/// value folds in the decode success weight (no renormalization), so it is
/// the probability-weighted fidelity of recovering ψ on the system.
pub fn roundtrip_fidelity(
    psi: &StateVector,
    p_down: &CompiledProtocol,
    code_down: &CodeMap,
    p_up: &CompiledProtocol,
    code_up: &CodeMap,
) -> Result<f64> {
    code_down.check_match(p_down)?;
    code_up.check_match(p_up)?;
    let d = code_down.dim;
    let dm = p_down.dim_memory();
    let ds = p_down.layout().dim_system();

    // download, then express the memory reduced state in code coordinates:
    // σ = V† R_M V = O†O with O[i][j] = ⟨frame_j | Ψ_i⟩
    let full = p_down.apply_w(psi)?;
    let amps = full.amplitudes();
    let mut o = vec![vec![C64::new(0.0, 0.0); d]; ds];
    for i in 0..ds {
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..dm {
                acc += code_down.frame.get(m, j).conj() * amps[i * dm + m];
            }
            o[i][j] = acc;
        }
    }
    let mut sigma = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            // σ = Σ_i (V†Ψ_i)(V†Ψ_i)† with (V†Ψ_i)[j] = O[i][j]
            let mut acc = C64::new(0.0, 0.0);
            for row in o.iter() {
                acc += row[j] * row[k].conj();
            }
            sigma.set(j, k, acc);
        }
    }

    // upload each eigencomponent and compare against the original ψ
    let sigma = DensityMatrix::new_unchecked(sigma, vec![d]);
    let mut f = 0.0;
    for (weight, vec) in sigma.eigen_mixture()? {
        let chi = code_up.encode(vec.amplitudes())?;
        let xi = upload_state(p_up, &chi)?;
        f += weight * payload_overlap(p_up, psi.amplitudes(), &xi);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::SpinNetwork;
    use crate::protocol::ProtocolConfig;
    use crate::states::random_pure_state;
    use rand::SeedableRng;

    fn two_spin(t: f64, l: usize, dir: Direction) -> CompiledProtocol {
        let net = SpinNetwork::chain(2, 1.0, 1).unwrap();
        ProtocolConfig::new(net, t, l, dir).unwrap().compile().unwrap()
    }

    fn three_chain(t: f64, l: usize, dir: Direction) -> CompiledProtocol {
        let net = SpinNetwork::chain(3, 1.0, 1).unwrap();
        ProtocolConfig::new(net, t, l, dir).unwrap().compile().unwrap()
    }

    #[test]
    fn swap_step_gives_exact_code() {
        // at t = π/4 the 2-spin Heisenberg step is a SWAP up to phase: after
        // two rounds the entire input sits in memory
        let p = two_spin(std::f64::consts::FRAC_PI_4, 2, Direction::Forward);
        let code = compute_code_map(&p).unwrap();
        assert!((code.eta0 - 1.0).abs() < 1e-10);
        for j in 0..4 {
            for k in 0..4 {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((code.gram.get(j, k).norm() - expect).abs() < 1e-10);
            }
        }
        assert!(code.residual <= 1e-10);
        assert!(code.decoder.is_unitary(1e-10));
    }

    #[test]
    fn gram_invariants_and_bounds() {
        let p = three_chain(0.7, 10, Direction::Forward);
        let code = compute_code_map(&p).unwrap();
        // Hermitian, unit diagonal
        assert!(code.gram.max_asymmetry() < 1e-10);
        for k in 0..8 {
            assert!((code.gram.get(k, k).re - 1.0).abs() < 1e-10);
            assert!((code.phi_vectors[k].norm() - 1.0).abs() < 1e-10);
        }
        assert!((code.eta0 - code.eta_list.iter().cloned().fold(f64::INFINITY, f64::min)).abs() < 1e-15);

        let slack = 3.0 * (1.0 - code.eta0).sqrt();
        for j in 0..8 {
            for k in 0..8 {
                if j != k {
                    assert!(
                        code.gram.get(j, k).norm() <= slack + 1e-12,
                        "off-diagonal {} exceeds {}",
                        code.gram.get(j, k).norm(),
                        slack
                    );
                }
            }
        }
        let lam_slack = 3.0 * 8.0 * (1.0 - code.eta0).sqrt();
        for &l in &code.lambdas {
            assert!((l - 1.0).abs() <= lam_slack + 1e-12);
        }
        let (lhs, rhs) = decoder_residual_bound(&code);
        assert!(lhs <= rhs + 1e-12);
        assert!(code.decoder.is_unitary(1e-10));
    }

    #[test]
    fn residual_shrinks_with_rounds() {
        let mut last = f64::INFINITY;
        for l in [4usize, 6, 8, 10] {
            let p = three_chain(0.7, l, Direction::Forward);
            let code = compute_code_map(&p).unwrap();
            assert!(
                code.residual <= last + 1e-9,
                "residual grew at L={l}: {} > {last}",
                code.residual
            );
            last = code.residual;
        }
        assert!(last < 0.5);
    }

    #[test]
    fn vacuum_fidelities_are_one() {
        let pd = three_chain(0.7, 6, Direction::Forward);
        let cd = compute_code_map(&pd).unwrap();
        let vac = StateVector::basis(8, 0, vec![8]).unwrap();
        let f = fidelity_down(&vac, &pd, &cd).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "F_down(vacuum) = {f}");

        let pu = three_chain(0.7, 6, Direction::Reverse);
        let cu = compute_code_map(&pu).unwrap();
        let (f, _) = fidelity_up(&vac, &pu, &cu).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "F_up(vacuum) = {f}");
    }

    #[test]
    fn download_bound_and_convergence() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let p = two_spin(0.55, 12, Direction::Forward);
        let code = compute_code_map(&p).unwrap();
        let bound = bound_down(code.eta0, 4);
        for _ in 0..20 {
            let psi = random_pure_state(4, &mut rng);
            let f = fidelity_down(&psi, &p, &code).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&f));
            assert!(f >= 0.99, "F_down = {f}");
            if bound > 0.0 {
                assert!(f >= bound - 1e-12);
            }
        }
    }

    #[test]
    fn upload_bound_holds() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(12);
        let p = two_spin(0.55, 12, Direction::Reverse);
        let code = compute_code_map(&p).unwrap();
        for _ in 0..10 {
            let psi = random_pure_state(4, &mut rng);
            let (f, bound) = fidelity_up(&psi, &p, &code).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&f));
            if bound > 0.0 {
                assert!(f >= bound - 1e-12);
            }
        }
    }

    #[test]
    fn pre_decoder_overlap_is_unity_on_basis_states() {
        let p = three_chain(0.7, 8, Direction::Forward);
        let code = compute_code_map(&p).unwrap();
        for k in 0..8 {
            let psi = StateVector::basis(8, k, vec![8]).unwrap();
            let full = p.apply_w(&psi).unwrap();
            let (eta, w) = super::raw_code_vector(&p, &full).unwrap();
            let overlap: C64 = code.phi_vectors[k]
                .amplitudes()
                .iter()
                .zip(w.iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            // |⟨φ_k | Dψ_k⟩| / ‖Dψ_k‖ = 1
            assert!((overlap.norm() / eta.sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn decoder_is_reused_bit_identically() {
        let p = two_spin(0.55, 8, Direction::Forward);
        let code = compute_code_map(&p).unwrap();
        let before: Vec<C64> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| code.decoder.get(i, j))
            .collect();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..3 {
            let psi = random_pure_state(4, &mut rng);
            fidelity_down(&psi, &p, &code).unwrap();
        }
        let after: Vec<C64> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| code.decoder.get(i, j))
            .collect();
        assert_eq!(before, after);

        // recomputation is deterministic too
        let code2 = compute_code_map(&p).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(code.decoder.get(i, j), code2.decoder.get(i, j));
            }
        }
    }

    #[test]
    fn roundtrip_recovers_random_states() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(21);
        let pd = two_spin(0.55, 12, Direction::Forward);
        let cd = compute_code_map(&pd).unwrap();
        let pu = two_spin(0.55, 12, Direction::Reverse);
        let cu = compute_code_map(&pu).unwrap();
        for _ in 0..10 {
            let psi = random_pure_state(4, &mut rng);
            let f = roundtrip_fidelity(&psi, &pd, &cd, &pu, &cu).unwrap();
            assert!(f >= 0.98, "composite fidelity {f}");
            assert!(f <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn bound_examples() {
        assert!((bound_down(1.0, 4) - 1.0).abs() < 1e-15);
        assert!((bound_down(0.9999, 4) - (-3.0001)).abs() < 1e-10);
        // 10·d·(1 − η₀)^{1/4} with η₀ = 1 − 1e−12 and d = 4 leaves a
        // 4e−2 gap below η₀
        let b = bound_down(1.0 - 1e-12, 4);
        assert!((b - 0.96).abs() < 1e-4, "bound = {b}");
    }

    #[test]
    fn refuses_small_eta_with_suggestion() {
        // a few rounds on the 3-chain still leave most of the weight
        // outside the vacuum for excited basis states
        let p = three_chain(1.0, 3, Direction::Forward);
        match compute_code_map(&p) {
            Err(Error::EtaTooSmall { eta0, suggested_l }) => {
                assert!(eta0 < 0.5);
                assert!(suggested_l > 3);
            }
            other => panic!("expected EtaTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn refuses_non_ergodic_channel() {
        // disconnected network: excitations on the far spin never reach C
        let net = SpinNetwork::new(3, vec![(0, 1, 1.0)], vec![0]).unwrap();
        let p = ProtocolConfig::new(net, 1.0, 6, Direction::Forward)
            .unwrap()
            .compile()
            .unwrap();
        assert!(matches!(
            compute_code_map(&p),
            Err(Error::NotErgodic(_))
        ));
    }

    #[test]
    fn serialization_is_stable() {
        let p = two_spin(0.55, 8, Direction::Forward);
        let code = compute_code_map(&p).unwrap();
        let a = code.to_text();
        let b = compute_code_map(&p).unwrap().to_text();
        assert_eq!(a, b);
        assert!(a.starts_with("codemap v1\n"));
        assert!(a.contains("direction download"));
    }
}
