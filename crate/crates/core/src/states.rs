//! Initial-state construction.
//!
//! Named states are provided through a small registry of builder objects so
//! the CLI (and tests) can resolve a label like `ghz` or `mixed` to a state
//! for any qubit count, and external amplitude files plug in via the same
//! interface.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, StateVector};

type C64 = Complex64;

/// A named strategy that builds an initial state on `n` qubits.
pub trait InitialStateBuilder: Sync + Send {
    fn name(&self) -> &'static str;
    fn build(&self, n_qubits: usize) -> Result<DensityMatrix>;
}

fn pure(amps: Vec<C64>, n: usize) -> Result<DensityMatrix> {
    let mut psi = StateVector::new(amps, vec![2; n])?;
    psi.normalize();
    Ok(psi.to_density())
}

/// `|0…0⟩` — all spins down.
struct Vacuum;
impl InitialStateBuilder for Vacuum {
    fn name(&self) -> &'static str {
        "vacuum"
    }
    fn build(&self, n: usize) -> Result<DensityMatrix> {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        pure(amps, n)
    }
}

/// `|1…1⟩` — all spins up (maximal excitation number).
struct AllOnes;
impl InitialStateBuilder for AllOnes {
    fn name(&self) -> &'static str {
        "all_ones"
    }
    fn build(&self, n: usize) -> Result<DensityMatrix> {
        let dim = 1 << n;
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[dim - 1] = C64::new(1.0, 0.0);
        pure(amps, n)
    }
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
struct Ghz;
impl InitialStateBuilder for Ghz {
    fn name(&self) -> &'static str {
        "ghz"
    }
    fn build(&self, n: usize) -> Result<DensityMatrix> {
        let dim = 1 << n;
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        let x = std::f64::consts::FRAC_1_SQRT_2;
        amps[0] = C64::new(x, 0.0);
        amps[dim - 1] = C64::new(x, 0.0);
        pure(amps, n)
    }
}

/// Equal superposition of all single-excitation basis states.
struct WState;
impl InitialStateBuilder for WState {
    fn name(&self) -> &'static str {
        "w"
    }
    fn build(&self, n: usize) -> Result<DensityMatrix> {
        let dim = 1 << n;
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        let x = 1.0 / (n as f64).sqrt();
        for q in 0..n {
            amps[1 << q] = C64::new(x, 0.0);
        }
        pure(amps, n)
    }
}

/// `I / 2ⁿ` — the maximally mixed state.
struct Mixed;
impl InitialStateBuilder for Mixed {
    fn name(&self) -> &'static str {
        "mixed"
    }
    fn build(&self, n: usize) -> Result<DensityMatrix> {
        Ok(DensityMatrix::maximally_mixed(vec![2; n]))
    }
}

/// Registry mapping labels to builders. `resolve` also accepts `@path`
/// labels pointing at an amplitude file.
pub struct StateRegistry {
    builders: Vec<Box<dyn InitialStateBuilder>>,
}

impl StateRegistry {
    /// Registry with the canonical label set:
    /// `vacuum | all_ones | ghz | w | mixed`.
    pub fn standard() -> Self {
        let mut reg = Self {
            builders: Vec::new(),
        };
        reg.register(Box::new(Vacuum));
        reg.register(Box::new(AllOnes));
        reg.register(Box::new(Ghz));
        reg.register(Box::new(WState));
        reg.register(Box::new(Mixed));
        reg
    }

    pub fn register(&mut self, builder: Box<dyn InitialStateBuilder>) {
        self.builders.push(builder);
    }

    pub fn labels(&self) -> Vec<&'static str> {
        self.builders.iter().map(|b| b.name()).collect()
    }

    pub fn resolve(&self, label: &str, n_qubits: usize) -> Result<DensityMatrix> {
        if let Some(path) = label.strip_prefix('@') {
            return load_amplitude_file(Path::new(path), n_qubits);
        }
        for b in &self.builders {
            if b.name() == label {
                return b.build(n_qubits);
            }
        }
        Err(Error::Config(format!(
            "unknown initial state '{}'; known labels: {}, or @FILE",
            label,
            self.labels().join(", ")
        )))
    }
}

/// Amplitude file: one amplitude per line as `re im` (whitespace separated,
/// `#` comments and blank lines ignored), exactly 2ⁿ entries, normalized on
/// load.
pub fn load_amplitude_file(path: &Path, n_qubits: usize) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)?;
    let mut amps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let re: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected 're im'".into(),
            })?;
        let im: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected 're im'".into(),
            })?;
        amps.push(C64::new(re, im));
    }
    let dim = 1usize << n_qubits;
    if amps.len() != dim {
        return Err(Error::Config(format!(
            "amplitude file has {} entries, graph needs {}",
            amps.len(),
            dim
        )));
    }
    let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::Config("amplitude file is the zero vector".into()));
    }
    pure(amps, n_qubits)
}

/// Haar-distributed random pure state (normalized complex Gaussian vector).
pub fn random_pure_state(dim: usize, rng: &mut impl Rng) -> StateVector {
    let amps: Vec<C64> = (0..dim)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        })
        .collect();
    let mut psi = StateVector::new(amps, vec![dim]).expect("nonempty");
    psi.normalize();
    psi
}
