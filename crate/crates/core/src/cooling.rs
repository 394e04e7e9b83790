//! Cooling-efficiency analysis: success-probability sequences, average
//! excitation counts, the P₀ ≥ 1 − ⟨N̂⟩ bound, and the random-shuffle
//! estimator for ⟨N̂⟩ decay.
//!
//! Everything here routes through channel iteration on the uncontrolled
//! region, never full-register simulation, so sequences with hundreds of
//! rounds stay cheap. Ergodicity certification is the caller's job (one
//! spectrum diagnosis per configuration, see the CLI); these functions
//! assume it and simply iterate.

use crate::error::{Error, Result};
use crate::linalg::{partial_trace, DensityMatrix};
use crate::protocol::CompiledProtocol;

/// Sequences indexed by round count L = 0..=Lmax. Row 0 describes the
/// initial state itself.
#[derive(Debug, Clone)]
pub struct CoolingTrace {
    pub l_values: Vec<usize>,
    /// Probability of zero excitations on the whole system.
    pub p0: Vec<f64>,
    /// Average excitation number on the whole system.
    pub avg_n: Vec<f64>,
    /// Overlap of the uncontrolled region with the fixed point.
    pub eta: Vec<f64>,
    /// Random-shuffle closed-form estimate of `avg_n`.
    pub estimator: Vec<f64>,
    pub initial_state_label: String,
}

impl CoolingTrace {
    /// Check the trace-level invariants; returns the largest violation of
    /// `p0 ≥ 1 − avg_n`.
    pub fn bound_violation(&self) -> f64 {
        self.p0
            .iter()
            .zip(self.avg_n.iter())
            .map(|(&p, &n)| (1.0 - n) - p)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn diag_expectations(rho: &DensityMatrix) -> (f64, f64) {
    // (vacuum weight, average excitation number) from the diagonal
    let mut p0 = 0.0;
    let mut avg = 0.0;
    for i in 0..rho.dim() {
        let p = rho.diagonal_element(i);
        if i == 0 {
            p0 = p;
        }
        avg += p * (i.count_ones() as f64);
    }
    (p0, avg)
}

fn controller_contributions(p: &CompiledProtocol) -> (f64, f64) {
    // The controller is reset to |0⟩_C after every round; its vacuum weight
    // and excitation count are fixed by that state (1 and 0 for all-down).
    let zc = &p.cfg.zero_c;
    let p0_c = zc.amplitudes()[0].norm_sqr();
    let n_c: f64 = zc
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| a.norm_sqr() * (i.count_ones() as f64))
        .sum();
    (p0_c, n_c)
}

/// All three channel-iterated sequences at once, for L = 0..=Lmax.
/// Returns `(p0, avg_n, eta)`.
pub fn sequences(
    rho0: &DensityMatrix,
    p: &CompiledProtocol,
    lmax: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let ds = p.layout().dim_system();
    if rho0.dim() != ds {
        return Err(Error::DimensionMismatch(format!(
            "initial state dim {} vs system dim {}",
            rho0.dim(),
            ds
        )));
    }
    let mut p0 = Vec::with_capacity(lmax + 1);
    let mut avg_n = Vec::with_capacity(lmax + 1);
    let mut eta = Vec::with_capacity(lmax + 1);

    // L = 0: the initial state itself.
    let (p0_full, n_full) = diag_expectations(rho0);
    p0.push(p0_full);
    avg_n.push(n_full);
    let rho0_dims = DensityMatrix::new_unchecked(
        rho0.matrix().clone(),
        vec![p.dim_controlled(), p.dim_uncontrolled()],
    );
    let reduced0 = partial_trace(&rho0_dims, &[1])?;
    eta.push(reduced0.diagonal_element(0));

    // L ≥ 1: one free evolution, then channel iteration on C̄ with the
    // controller pinned to its reset state.
    let (p0_c, n_c) = controller_contributions(p);
    let ch = p.channel()?;
    let mut rho = p.rho_prime_mixed(rho0)?;
    for l in 1..=lmax {
        if l > 1 {
            rho = ch.apply(&rho)?;
        }
        let (vac, n_cbar) = diag_expectations(&rho);
        eta.push(vac);
        p0.push(p0_c * vac);
        avg_n.push(n_c + n_cbar);
    }
    Ok((p0, avg_n, eta))
}

/// `P₀^(L)` for L = 0..=Lmax.
pub fn p0_sequence(rho0: &DensityMatrix, p: &CompiledProtocol, lmax: usize) -> Result<Vec<f64>> {
    Ok(sequences(rho0, p, lmax)?.0)
}

/// `⟨N̂⟩^(L)` for L = 0..=Lmax.
pub fn avg_excitations(
    rho0: &DensityMatrix,
    p: &CompiledProtocol,
    lmax: usize,
) -> Result<Vec<f64>> {
    Ok(sequences(rho0, p, lmax)?.1)
}

/// Closed-form shuffle estimate `n₀ · (|C̄| / (|C| + |C̄|))^L`.
pub fn shuffle_estimate(n0: f64, size_c: usize, size_cbar: usize, l: usize) -> f64 {
    assert!(size_c >= 1 && size_cbar >= 1);
    let ratio = size_cbar as f64 / (size_c + size_cbar) as f64;
    n0 * ratio.powi(l as i32)
}

/// Assemble a full trace for one initial state.
pub fn compute_trace(
    rho0: &DensityMatrix,
    p: &CompiledProtocol,
    lmax: usize,
    label: &str,
) -> Result<CoolingTrace> {
    let (p0, avg_n, eta) = sequences(rho0, p, lmax)?;
    let size_c = p.cfg.network.controlled().len();
    let size_cbar = p.cfg.network.uncontrolled().len();
    let n0 = avg_n[0];
    let estimator = (0..=lmax)
        .map(|l| shuffle_estimate(n0, size_c, size_cbar, l))
        .collect();
    Ok(CoolingTrace {
        l_values: (0..=lmax).collect(),
        p0,
        avg_n,
        eta,
        estimator,
        initial_state_label: label.to_string(),
    })
}

/// Grid search for the time step whose exact ⟨N̂⟩ sequence best matches the
/// shuffle estimator (total squared deviation over L = 0..=Lmax). Ties
/// break toward the smaller t.
pub fn fit_time_step(
    rho0: &DensityMatrix,
    template: &crate::protocol::ProtocolConfig,
    lmax: usize,
    t_grid: &[f64],
) -> Result<(f64, f64)> {
    if t_grid.is_empty() {
        return Err(Error::Config("empty time-step grid".into()));
    }
    let size_c = template.network.controlled().len();
    let size_cbar = template.network.uncontrolled().len();
    let mut best: Option<(f64, f64)> = None;
    for &t in t_grid {
        let mut cfg = template.clone();
        cfg.t = t;
        let p = cfg.compile()?;
        let avg = avg_excitations(rho0, &p, lmax)?;
        let dev: f64 = avg
            .iter()
            .enumerate()
            .map(|(l, &x)| {
                let est = shuffle_estimate(avg[0], size_c, size_cbar, l);
                (x - est).powi(2)
            })
            .sum();
        let better = match best {
            None => true,
            Some((_, d)) => dev < d,
        };
        if better {
            best = Some((t, dev));
        }
    }
    Ok(best.unwrap())
}

/// Relative RMS deviation `√(Σ(x−y)² / Σx²)` between an exact sequence and
/// an estimate.
pub fn relative_rms(exact: &[f64], estimate: &[f64]) -> f64 {
    assert_eq!(exact.len(), estimate.len());
    let num: f64 = exact
        .iter()
        .zip(estimate.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let den: f64 = exact.iter().map(|a| a * a).sum();
    (num / den).sqrt()
}
