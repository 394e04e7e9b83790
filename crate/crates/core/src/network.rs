//! Spin-network description, Heisenberg Hamiltonian construction, and the
//! graph-spec file format.
//!
//! Spin convention: `|0⟩` is spin-down with `Z|0⟩ = −|0⟩` and
//! `Z|1⟩ = +|1⟩`, so `N̂ = Σ(Z+1)/2` literally counts `|1⟩`s. This is the
//! opposite of a common convention; everything downstream relies on it.

use std::collections::HashMap;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{tensor_product, ComplexMatrix};
use crate::tol;

type C64 = Complex64;

/// Weighted coupling graph plus the controlled/uncontrolled partition.
#[derive(Debug, Clone)]
pub struct SpinNetwork {
    n_qubits: usize,
    edges: Vec<(usize, usize, f64)>,
    controlled: Vec<usize>,
    uncontrolled: Vec<usize>,
}

impl SpinNetwork {
    pub fn new(
        n_qubits: usize,
        edges: Vec<(usize, usize, f64)>,
        controlled: Vec<usize>,
    ) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::InvalidNetwork(
                "a network needs at least 2 sites".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for &(j, jp, _) in &edges {
            if j == jp {
                return Err(Error::InvalidNetwork(format!("self-loop at site {j}")));
            }
            if j >= n_qubits || jp >= n_qubits {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({j},{jp}) out of range for {n_qubits} sites"
                )));
            }
            let key = (j.min(jp), j.max(jp));
            if !seen.insert(key) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate undirected edge ({},{})",
                    key.0, key.1
                )));
            }
        }
        let mut ctrl = controlled.clone();
        ctrl.sort_unstable();
        ctrl.dedup();
        if ctrl.len() != controlled.len() {
            return Err(Error::InvalidNetwork("duplicate controlled site".into()));
        }
        if ctrl.iter().any(|&s| s >= n_qubits) {
            return Err(Error::InvalidNetwork("controlled site out of range".into()));
        }
        if ctrl.is_empty() || ctrl.len() >= n_qubits {
            return Err(Error::InvalidNetwork(
                "need at least one controlled and one uncontrolled site".into(),
            ));
        }
        let uncontrolled: Vec<usize> = (0..n_qubits).filter(|s| !ctrl.contains(s)).collect();
        Ok(Self {
            n_qubits,
            edges,
            controlled: ctrl,
            uncontrolled,
        })
    }

    /// Open chain with equal couplings, control on the first `n_controlled`
    /// sites.
    pub fn chain(n: usize, coupling: f64, n_controlled: usize) -> Result<Self> {
        let edges = (0..n - 1).map(|j| (j, j + 1, coupling)).collect();
        Self::new(n, edges, (0..n_controlled).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn controlled(&self) -> &[usize] {
        &self.controlled
    }

    pub fn uncontrolled(&self) -> &[usize] {
        &self.uncontrolled
    }

    pub fn dim_controlled(&self) -> usize {
        1 << self.controlled.len()
    }

    pub fn dim_uncontrolled(&self) -> usize {
        1 << self.uncontrolled.len()
    }

    pub fn max_coupling(&self) -> f64 {
        self.edges
            .iter()
            .map(|&(_, _, d)| d.abs())
            .fold(0.0, f64::max)
    }

    /// Default evolution interval: 1.0 in units of the inverse largest
    /// coupling strength.
    pub fn default_time_step(&self) -> f64 {
        let m = self.max_coupling();
        if m > 0.0 {
            1.0 / m
        } else {
            1.0
        }
    }

    /// Site order used by the protocol register: controlled sites first,
    /// then uncontrolled, both in ascending site order.
    pub fn layout_sites(&self) -> Vec<usize> {
        let mut order = self.controlled.clone();
        order.extend_from_slice(&self.uncontrolled);
        order
    }

    /// The same network with sites relabeled so that the layout order
    /// becomes 0..n (controlled block first).
    pub fn relabeled_for_layout(&self) -> SpinNetwork {
        let order = self.layout_sites();
        let mut pos = vec![0usize; self.n_qubits];
        for (p, &s) in order.iter().enumerate() {
            pos[s] = p;
        }
        let edges = self
            .edges
            .iter()
            .map(|&(j, jp, d)| (pos[j], pos[jp], d))
            .collect();
        SpinNetwork::new(
            self.n_qubits,
            edges,
            (0..self.controlled.len()).collect(),
        )
        .expect("relabeling preserves validity")
    }
}

/// Register ordering: C sites, then C̄ sites, then memory sectors
/// M₁…M_L of |C| qubits each. Factor 0 is most significant.
#[derive(Debug, Clone)]
pub struct RegisterLayout {
    pub n_controlled: usize,
    pub n_uncontrolled: usize,
    pub rounds: usize,
}

impl RegisterLayout {
    pub fn new(n_controlled: usize, n_uncontrolled: usize, rounds: usize) -> Self {
        Self {
            n_controlled,
            n_uncontrolled,
            rounds,
        }
    }

    pub fn n_system(&self) -> usize {
        self.n_controlled + self.n_uncontrolled
    }

    pub fn total_qubits(&self) -> usize {
        self.n_system() + self.rounds * self.n_controlled
    }

    pub fn memory_qubits(&self) -> usize {
        self.rounds * self.n_controlled
    }

    pub fn dim_system(&self) -> usize {
        1 << self.n_system()
    }

    pub fn dim_memory(&self) -> usize {
        1 << self.memory_qubits()
    }

    /// Most-significant-first bit offset of sector `ell` (1-based).
    pub fn sector_offset(&self, ell: usize) -> usize {
        self.n_system() + (ell - 1) * self.n_controlled
    }
}

const PAULI_AXES: [char; 3] = ['X', 'Y', 'Z'];

fn pauli_2x2(axis: char) -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    match axis {
        'X' => ComplexMatrix::from_rows(2, 2, &[z, one, one, z]).unwrap(),
        // Satisfies XY = iZ under the spin-down = |0⟩ convention.
        'Y' => ComplexMatrix::from_rows(
            2,
            2,
            &[z, C64::new(0.0, 1.0), C64::new(0.0, -1.0), z],
        )
        .unwrap(),
        'Z' => ComplexMatrix::from_rows(2, 2, &[-one, z, z, one]).unwrap(),
        _ => panic!("unknown Pauli axis {axis}"),
    }
}

/// Pauli operator at one site of an n-qubit register (identity elsewhere),
/// site 0 most significant.
pub fn pauli_on(site: usize, axis: char, n: usize) -> Result<ComplexMatrix> {
    if site >= n {
        return Err(Error::IndexOutOfRange(format!(
            "site {site} out of range for {n} qubits"
        )));
    }
    assert!(PAULI_AXES.contains(&axis), "axis must be X, Y, or Z");
    let mut m = ComplexMatrix::identity(1);
    for s in 0..n {
        let factor = if s == site {
            pauli_2x2(axis)
        } else {
            ComplexMatrix::identity(2)
        };
        m = tensor_product(&m, &factor);
    }
    Ok(m)
}

/// `H = Σ_{(j,j')∈G} d_{j,j'} (X_jX_{j'} + Y_jY_{j'} + Z_jZ_{j'})`.
pub fn build_heisenberg(net: &SpinNetwork) -> Result<ComplexMatrix> {
    let n = net.n_qubits();
    if n > tol::NETWORK_CAP {
        return Err(Error::NetworkTooLarge {
            n,
            cap: tol::NETWORK_CAP,
        });
    }
    let dim = 1usize << n;
    let mut h = ComplexMatrix::zeros(dim, dim);
    for &(j, jp, d) in net.edges() {
        for axis in PAULI_AXES {
            let term = pauli_on(j, axis, n)?.matmul(&pauli_on(jp, axis, n)?);
            h = h.add(&term.scale(C64::new(d, 0.0)));
        }
    }
    Ok(h)
}

/// Diagonal operator counting `|1⟩` (spin-up) sites: `N̂ = Σ_k (Z_k+1)/2`.
/// Its eigenvalue on basis index `i` is `popcount(i)`.
pub fn excitation_number(n: usize) -> ComplexMatrix {
    let dim = 1usize << n;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        m.set(i, i, C64::new((i as u32).count_ones() as f64, 0.0));
    }
    m
}

/// Total-Z operator, used for magnetization-conservation checks.
pub fn total_z(n: usize) -> ComplexMatrix {
    let dim = 1usize << n;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        let ups = (i as u32).count_ones() as f64;
        m.set(i, i, C64::new(2.0 * ups - n as f64, 0.0));
    }
    m
}

/// Parse the line-oriented graph-spec format:
///
/// ```text
/// # comment
/// n 7
/// pos 0 0.0 2.0
/// edge 0 1 auto      # coupling from Euclidean distance between pos entries
/// edge 1 2 1.5       # explicit coupling
/// control 0
/// ```
pub fn parse_graph(text: &str) -> Result<SpinNetwork> {
    let mut n: Option<usize> = None;
    let mut positions: HashMap<usize, (f64, f64)> = HashMap::new();
    let mut raw_edges: Vec<(usize, usize, Option<f64>, usize)> = Vec::new();
    let mut controlled: Vec<usize> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let kw = tokens.next().unwrap();
        let parse_usize = |tok: Option<&str>, what: &str| -> Result<usize> {
            tok.ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("missing {what}"),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid {what}"),
            })
        };
        let parse_f64 = |tok: Option<&str>, what: &str| -> Result<f64> {
            tok.ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("missing {what}"),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid {what}"),
            })
        };
        match kw {
            "n" => n = Some(parse_usize(tokens.next(), "site count")?),
            "pos" => {
                let site = parse_usize(tokens.next(), "site index")?;
                let x = parse_f64(tokens.next(), "x coordinate")?;
                let y = parse_f64(tokens.next(), "y coordinate")?;
                positions.insert(site, (x, y));
            }
            "edge" => {
                let j = parse_usize(tokens.next(), "edge endpoint")?;
                let jp = parse_usize(tokens.next(), "edge endpoint")?;
                let coupling_tok = tokens.next().ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: "missing coupling (number or 'auto')".into(),
                })?;
                let coupling = if coupling_tok == "auto" {
                    None
                } else {
                    Some(coupling_tok.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        message: format!("invalid coupling '{coupling_tok}'"),
                    })?)
                };
                raw_edges.push((j, jp, coupling, lineno));
            }
            "control" => {
                for tok in tokens {
                    controlled.push(parse_usize(Some(tok), "controlled site")?);
                }
            }
            other => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("unknown keyword '{other}'"),
                });
            }
        }
    }

    let n = n.ok_or(Error::Parse {
        line: 0,
        message: "missing 'n <count>' line".into(),
    })?;
    let mut edges = Vec::new();
    for (j, jp, coupling, lineno) in raw_edges {
        let d = match coupling {
            Some(d) => d,
            None => {
                let pj = positions.get(&j).ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: format!("edge {j} {jp} auto needs 'pos {j} ...'"),
                })?;
                let pjp = positions.get(&jp).ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: format!("edge {j} {jp} auto needs 'pos {jp} ...'"),
                })?;
                ((pj.0 - pjp.0).powi(2) + (pj.1 - pjp.1).powi(2)).sqrt()
            }
        };
        edges.push((j, jp, d));
    }
    SpinNetwork::new(n, edges, controlled)
}

pub fn load_graph(path: &Path) -> Result<SpinNetwork> {
    let text = std::fs::read_to_string(path)?;
    parse_graph(&text)
}
