//! Full-register simulation of the swap-staged unitaries W and W′†, the
//! post-protocol state decomposition, and the reduced-dynamics identity
//! used as a cross-validation oracle.
//!
//! The full register is a dense amplitude vector ordered C, C̄,
//! M₁…M_L (factor 0 most significant). Each free evolution acts on the
//! C⊗C̄ factor only; swaps are amplitude permutations.

use ndarray::ArrayView2;
use num_complex::Complex64;

use crate::channel::{self, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{partial_trace, ComplexMatrix, DensityMatrix, StateVector};
use crate::network::{build_heisenberg, RegisterLayout, SpinNetwork};
use crate::tol;

type C64 = Complex64;

/// Which step unitary the swap stage interleaves: `U` for downloading (W)
/// or `U†` for uploading (W′).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// Configuration of one protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub network: SpinNetwork,
    pub t: f64,
    pub l_rounds: usize,
    pub zero_c: StateVector,
    pub direction: Direction,
}

impl ProtocolConfig {
    /// Config with the all-spin-down controller reset state.
    pub fn new(network: SpinNetwork, t: f64, l_rounds: usize, direction: Direction) -> Result<Self> {
        let d_c = network.dim_controlled();
        let zero_c = StateVector::basis(d_c, 0, vec![d_c])?;
        Self::with_controller(network, t, l_rounds, zero_c, direction)
    }

    pub fn with_controller(
        network: SpinNetwork,
        t: f64,
        l_rounds: usize,
        zero_c: StateVector,
        direction: Direction,
    ) -> Result<Self> {
        if l_rounds == 0 {
            return Err(Error::Config("L must be at least 1".into()));
        }
        if t <= 0.0 {
            return Err(Error::Config("time step must be positive".into()));
        }
        if zero_c.dim() != network.dim_controlled() {
            return Err(Error::DimensionMismatch(format!(
                "controller state dim {} vs d_C {}",
                zero_c.dim(),
                network.dim_controlled()
            )));
        }
        Ok(Self {
            network,
            t,
            l_rounds,
            zero_c,
            direction,
        })
    }

    pub fn layout(&self) -> RegisterLayout {
        RegisterLayout::new(
            self.network.controlled().len(),
            self.network.uncontrolled().len(),
            self.l_rounds,
        )
    }

    /// Precompute the step unitary and layout for repeated runs.
    pub fn compile(&self) -> Result<CompiledProtocol> {
        CompiledProtocol::new(self.clone())
    }
}

/// A protocol config with its step unitary `U = exp(−iHt)` precomputed on
/// the layout-ordered register (C block first).
#[derive(Debug, Clone)]
pub struct CompiledProtocol {
    pub cfg: ProtocolConfig,
    layout: RegisterLayout,
    /// Forward step unitary on C⊗C̄ in layout order.
    u: ComplexMatrix,
}

impl CompiledProtocol {
    pub fn new(cfg: ProtocolConfig) -> Result<Self> {
        let layout = cfg.layout();
        let relabeled = cfg.network.relabeled_for_layout();
        let h = build_heisenberg(&relabeled)?;
        let u = crate::linalg::evolve_unitary(&h, cfg.t)?;
        Ok(Self { cfg, layout, u })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    /// The forward step unitary (layout-ordered).
    pub fn u(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn dim_controlled(&self) -> usize {
        1 << self.layout.n_controlled
    }

    pub fn dim_uncontrolled(&self) -> usize {
        1 << self.layout.n_uncontrolled
    }

    /// The induced channel on C̄ for this config's direction.
    pub fn channel(&self) -> Result<QuantumChannel> {
        let dims = (self.dim_controlled(), self.dim_uncontrolled());
        match self.cfg.direction {
            Direction::Forward => channel::make_tau(&self.u, &self.cfg.zero_c, dims),
            Direction::Reverse => channel::make_tau_prime(&self.u, &self.cfg.zero_c, dims),
        }
    }

    pub fn dim_memory(&self) -> usize {
        self.dim_controlled().pow(self.cfg.l_rounds as u32)
    }

    /// Full-register simulation is capped; channel-iteration paths
    /// (cooling at large L) deliberately bypass this.
    pub fn ensure_register_cap(&self) -> Result<()> {
        let n = self.cfg.network.n_qubits();
        let c = self.cfg.network.controlled().len();
        let total = n + self.cfg.l_rounds * c;
        if total > tol::REGISTER_CAP {
            return Err(Error::RegisterCapExceeded {
                n,
                l: self.cfg.l_rounds,
                c,
                total,
                cap: tol::REGISTER_CAP,
            });
        }
        Ok(())
    }

    fn full_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.dim_controlled(), self.dim_uncontrolled()];
        dims.extend(std::iter::repeat(self.dim_controlled()).take(self.cfg.l_rounds));
        dims
    }

    /// ψ ⊗ (⊗_ℓ |0⟩_{M_ℓ}) with the memory sectors initialized to the
    /// controller reset state.
    fn initial_full_state(&self, psi: &StateVector) -> Result<Vec<C64>> {
        self.ensure_register_cap()?;
        let ds = self.layout.dim_system();
        if psi.dim() != ds {
            return Err(Error::DimensionMismatch(format!(
                "input state dim {} vs system dim {}",
                psi.dim(),
                ds
            )));
        }
        let dm = self.dim_memory();
        let d_c = self.dim_controlled();
        let l = self.cfg.l_rounds;
        // memory amplitude = Π_ℓ zero_c[digit_ℓ(m)]
        let mut mem = vec![C64::new(1.0, 0.0); dm];
        for (m, amp) in mem.iter_mut().enumerate() {
            let mut rest = m;
            for _ in 0..l {
                let digit = rest % d_c;
                rest /= d_c;
                *amp *= self.cfg.zero_c.amplitudes()[digit];
            }
        }
        let mut full = vec![C64::new(0.0, 0.0); ds * dm];
        for (i, &a) in psi.amplitudes().iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (m, &b) in mem.iter().enumerate() {
                full[i * dm + m] = a * b;
            }
        }
        Ok(full)
    }

    /// Apply the step unitary (or its adjoint) to the C⊗C̄ factor of the
    /// full register, block-wise across memory indices.
    fn apply_step(&self, state: &mut Vec<C64>, adjoint: bool) {
        let ds = self.layout.dim_system();
        let dm = state.len() / ds;
        let view = ArrayView2::from_shape((ds, dm), state.as_slice()).unwrap();
        let op = if adjoint { self.u.dagger() } else { self.u.clone() };
        let out = op.array().dot(&view);
        *state = out.into_raw_vec();
    }

    /// In-place amplitude permutation exchanging the C block with memory
    /// sector `ell` (1-based). An involution.
    pub fn apply_swap(&self, state: &mut [C64], ell: usize) -> Result<()> {
        let l = self.cfg.l_rounds;
        if ell < 1 || ell > l {
            return Err(Error::IndexOutOfRange(format!(
                "sector {ell} out of range 1..={l}"
            )));
        }
        let d_c = self.dim_controlled();
        let d_cbar = self.dim_uncontrolled();
        let dm = self.dim_memory();
        let sector_stride = d_c.pow((l - ell) as u32);
        let sys_stride = d_cbar * dm;
        for idx in 0..state.len() {
            let a = idx / sys_stride;
            let rest = idx % sys_stride;
            let m = rest % dm;
            let m_ell = (m / sector_stride) % d_c;
            // each pair is visited once, from the side whose C digit is larger
            if a <= m_ell {
                continue;
            }
            let new_m = m - m_ell * sector_stride + a * sector_stride;
            let partner = m_ell * sys_stride + (rest - m) + new_m;
            state.swap(idx, partner);
        }
        Ok(())
    }

    /// `W = S_L U S_{L−1} U ⋯ S_1 U` applied to ψ ⊗ |0⟩_M.
    pub fn apply_w(&self, psi: &StateVector) -> Result<StateVector> {
        if self.cfg.direction != Direction::Forward {
            return Err(Error::Config(
                "apply_w requires a forward-direction config".into(),
            ));
        }
        self.run_swap_stage(psi, false)
    }

    /// `W′ = S_L U† S_{L−1} U† ⋯ S_1 U†` applied to ψ ⊗ |0⟩_M.
    pub fn apply_w_prime(&self, psi: &StateVector) -> Result<StateVector> {
        if self.cfg.direction != Direction::Reverse {
            return Err(Error::Config(
                "apply_w_prime requires a reverse-direction config".into(),
            ));
        }
        self.run_swap_stage(psi, true)
    }

    fn run_swap_stage(&self, psi: &StateVector, adjoint_u: bool) -> Result<StateVector> {
        let mut state = self.initial_full_state(psi)?;
        for ell in 1..=self.cfg.l_rounds {
            self.apply_step(&mut state, adjoint_u);
            self.apply_swap(&mut state, ell)?;
        }
        StateVector::new(state, self.full_dims())
    }

    /// `W†` applied to a full-register state.
    pub fn apply_w_dagger(&self, full: &StateVector) -> Result<StateVector> {
        self.run_adjoint_stage(full, true)
    }

    /// `W′† = U S_1 ⋯ U S_L` applied to a full-register state.
    pub fn apply_w_prime_dagger(&self, full: &StateVector) -> Result<StateVector> {
        self.run_adjoint_stage(full, false)
    }

    fn run_adjoint_stage(&self, full: &StateVector, adjoint_u: bool) -> Result<StateVector> {
        self.ensure_register_cap()?;
        let expected = self.layout.dim_system() * self.dim_memory();
        if full.dim() != expected {
            return Err(Error::DimensionMismatch(format!(
                "full-register state dim {} vs expected {}",
                full.dim(),
                expected
            )));
        }
        let mut state = full.amplitudes().to_vec();
        for ell in (1..=self.cfg.l_rounds).rev() {
            self.apply_swap(&mut state, ell)?;
            self.apply_step(&mut state, adjoint_u);
        }
        StateVector::new(state, self.full_dims())
    }

    /// `ρ′_C̄ = Tr_C[U|ψ⟩⟨ψ|U†]` for this config's step direction.
    pub fn rho_prime(&self, psi: &StateVector) -> Result<DensityMatrix> {
        let ds = self.layout.dim_system();
        if psi.dim() != ds {
            return Err(Error::DimensionMismatch(format!(
                "input state dim {} vs system dim {}",
                psi.dim(),
                ds
            )));
        }
        let step = match self.cfg.direction {
            Direction::Forward => self.u.clone(),
            Direction::Reverse => self.u.dagger(),
        };
        let chi = step.matvec(psi.amplitudes());
        let d_cbar = self.dim_uncontrolled();
        let d_c = self.dim_controlled();
        let mut rho = ComplexMatrix::zeros(d_cbar, d_cbar);
        for a in 0..d_c {
            for b in 0..d_cbar {
                for bp in 0..d_cbar {
                    let add = chi[a * d_cbar + b] * chi[a * d_cbar + bp].conj();
                    rho.set(b, bp, rho.get(b, bp) + add);
                }
            }
        }
        Ok(DensityMatrix::new_unchecked(
            rho,
            vec![2; self.layout.n_uncontrolled],
        ))
    }

    /// Mixed-state variant of [`rho_prime`] by linear extension.
    pub fn rho_prime_mixed(&self, rho0: &DensityMatrix) -> Result<DensityMatrix> {
        let ds = self.layout.dim_system();
        if rho0.dim() != ds {
            return Err(Error::DimensionMismatch(format!(
                "input state dim {} vs system dim {}",
                rho0.dim(),
                ds
            )));
        }
        let step = match self.cfg.direction {
            Direction::Forward => self.u.clone(),
            Direction::Reverse => self.u.dagger(),
        };
        let evolved = step.matmul(rho0.matrix()).matmul(&step.dagger());
        let joint = DensityMatrix::new_unchecked(evolved, vec![self.dim_controlled(), self.dim_uncontrolled()]);
        let reduced = partial_trace(&joint, &[1])?;
        Ok(DensityMatrix::new_unchecked(
            reduced.matrix().clone(),
            vec![2; self.layout.n_uncontrolled],
        ))
    }

    /// Reduced density matrix of C̄ from a full-register state
    /// (trace over C and M).
    pub fn reduce_to_uncontrolled(&self, full: &StateVector) -> DensityMatrix {
        let d_c = self.dim_controlled();
        let d_cbar = self.dim_uncontrolled();
        let dm = self.dim_memory();
        let amps = full.amplitudes();
        let mut rho = ComplexMatrix::zeros(d_cbar, d_cbar);
        for a in 0..d_c {
            for m in 0..dm {
                for b in 0..d_cbar {
                    let x = amps[(a * d_cbar + b) * dm + m];
                    if x.norm_sqr() == 0.0 {
                        continue;
                    }
                    for bp in 0..d_cbar {
                        let y = amps[(a * d_cbar + bp) * dm + m];
                        rho.set(b, bp, rho.get(b, bp) + x * y.conj());
                    }
                }
            }
        }
        DensityMatrix::new_unchecked(rho, vec![2; self.layout.n_uncontrolled])
    }

    /// Compare the direct full-register reduction with channel iteration;
    /// the two are provably identical, so the returned trace distance is a
    /// numerical-consistency oracle.
    pub fn reduced_dynamics_check(
        &self,
        psi: &StateVector,
    ) -> Result<(DensityMatrix, DensityMatrix, f64)> {
        let full = match self.cfg.direction {
            Direction::Forward => self.apply_w(psi)?,
            Direction::Reverse => self.apply_w_prime(psi)?,
        };
        let lhs = self.reduce_to_uncontrolled(&full);
        let ch = self.channel()?;
        let rho_p = self.rho_prime(psi)?;
        let rhs = channel::iterate(&ch, &rho_p, self.cfg.l_rounds - 1)?;
        let distance = lhs.trace_distance(&rhs);
        Ok((lhs, rhs, distance))
    }

    /// Decompose a post-swap-stage state as
    /// `|0⟩_C ⊗ [√η |0⟩_C̄ |φ⟩_M + √(1−η) |Δ⟩_C̄M]`.
    pub fn decompose(&self, full: &StateVector) -> Result<DecompositionResult> {
        let d_c = self.dim_controlled();
        let d_cbar = self.dim_uncontrolled();
        let dm = self.dim_memory();
        let amps = full.amplitudes();
        if amps.len() != d_c * d_cbar * dm {
            return Err(Error::DimensionMismatch(
                "full-register state has wrong dimension".into(),
            ));
        }

        // Project the C factor onto the controller reset state; the swap
        // stage guarantees the C factor is exactly that state, so any
        // projection loss signals a layout bug.
        let mut projected = vec![C64::new(0.0, 0.0); d_cbar * dm];
        for b in 0..d_cbar {
            for m in 0..dm {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..d_c {
                    acc += self.cfg.zero_c.amplitudes()[a].conj() * amps[(a * d_cbar + b) * dm + m];
                }
                projected[b * dm + m] = acc;
            }
        }
        let total: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        let kept: f64 = projected.iter().map(|z| z.norm_sqr()).sum();
        let deviation = (total - kept).abs().sqrt();
        if deviation > tol::C_FACTOR_PURITY {
            return Err(Error::ControllerNotReset { deviation });
        }

        let eta: f64 = (0..dm).map(|m| projected[m].norm_sqr()).sum();
        const DEFINED: f64 = 1e-12;

        let phi_m = if eta > DEFINED {
            let inv = 1.0 / eta.sqrt();
            let mut phi = StateVector::new(
                projected[..dm].iter().map(|z| z * inv).collect(),
                vec![d_c; self.cfg.l_rounds],
            )?;
            phi.fix_phase();
            Some(phi)
        } else {
            None
        };

        let delta = if eta < 1.0 - DEFINED {
            let inv = 1.0 / (1.0 - eta).sqrt();
            let mut damps = vec![C64::new(0.0, 0.0); d_cbar * dm];
            for b in 1..d_cbar {
                for m in 0..dm {
                    damps[b * dm + m] = projected[b * dm + m] * inv;
                }
            }
            // b = 0 block: subtract the √η |0⟩|φ⟩ component; it vanishes
            // identically because φ is proportional to that block.
            let mut dims = vec![d_cbar];
            dims.extend(std::iter::repeat(d_c).take(self.cfg.l_rounds));
            // Δ keeps its natural phase so √η|0⟩|φ⟩ + √(1−η)|Δ⟩ stays a
            // faithful split of the projected state (only φ is
            // phase-normalized for reporting).
            Some(StateVector::new(damps, dims)?)
        } else {
            None
        };

        Ok(DecompositionResult { eta, phi_m, delta })
    }

    /// `η̃ = |⟨ψ, 0_M| W† (|0⟩_CC̄ ⊗ |φ⟩_M)|²` — the adjoint-side overlap,
    /// provably equal to η.
    pub fn eta_tilde(&self, psi: &StateVector, phi: &StateVector) -> Result<f64> {
        let d_cbar = self.dim_uncontrolled();
        let dm = self.dim_memory();
        // |0⟩_CC̄ ⊗ |φ⟩: the C factor is the controller reset state, the
        // C̄ factor the computational vacuum (the fixed point).
        let mut amps = vec![C64::new(0.0, 0.0); self.layout.dim_system() * dm];
        for (a, &za) in self.cfg.zero_c.amplitudes().iter().enumerate() {
            for (m, &pm) in phi.amplitudes().iter().enumerate() {
                amps[(a * d_cbar) * dm + m] = za * pm;
            }
        }
        let full = StateVector::new(amps, self.full_dims())?;
        let back = match self.cfg.direction {
            Direction::Forward => self.apply_w_dagger(&full)?,
            Direction::Reverse => {
                // adjoint of W′ interleaves U (not U†)
                self.run_adjoint_stage(&full, false)?
            }
        };
        let target = self.initial_full_state(psi)?;
        let overlap: C64 = target
            .iter()
            .zip(back.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(overlap.norm_sqr())
    }
}

/// Result of the post-swap-stage state decomposition.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    /// Overlap weight on the cooled component.
    pub eta: f64,
    /// Memory payload `|φ⟩_M` (absent when η is numerically zero).
    pub phi_m: Option<StateVector>,
    /// Residual component on C̄⊗M, orthogonal to `|0⟩_C̄`
    /// (absent when η is numerically one).
    pub delta: Option<StateVector>,
}

/// Swap permutation as an explicit unitary matrix. Exponentially large in
/// the register size; intended for small-dimension tests.
pub fn swap_gate(compiled: &CompiledProtocol, ell: usize) -> Result<ComplexMatrix> {
    let dim = compiled.layout().dim_system() * compiled.dim_memory();
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        let mut basis = vec![C64::new(0.0, 0.0); dim];
        basis[i] = C64::new(1.0, 0.0);
        compiled.apply_swap(&mut basis, ell)?;
        for (j, &x) in basis.iter().enumerate() {
            if x.norm_sqr() > 0.0 {
                m.set(j, i, x);
            }
        }
    }
    Ok(m)
}
