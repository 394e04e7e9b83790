//! Command-line front end: graph loading, experiment execution, and
//! deterministic CSV output.
//!
//! Output contract: RFC-4180-style CSV, '.' decimal separator, 17
//! significant digits, a `#` comment line carrying the artifact version and
//! an FNV-1a hash of the run configuration, then the header row. Files are
//! written atomically (temp file + rename). Randomized suites use
//! ChaCha12 seeded from `--seed`, so fixed seeds give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::channel::{self, ChannelDiagnostics};
use crate::coding;
use crate::cooling;
use crate::error::{Error, Result};
use crate::network::{load_graph, SpinNetwork};
use crate::protocol::{CompiledProtocol, Direction, ProtocolConfig};
use crate::states::{random_pure_state, StateRegistry};

pub const ARTIFACT_VERSION: &str = "coolnet v1";

#[derive(Parser, Debug)]
#[command(
    name = "coolnet",
    about = "Cooling and state-transfer experiments on spin networks",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certify ergodicity: superoperator spectra of both induced channels.
    Diagnose {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Cooling traces for the canonical initial-state quartet (plus the
    /// vacuum sanity trace).
    Fig3 {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100)]
        lmax: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Exact average-excitation decay vs the shuffle estimator for control
    /// region sizes 1..=3.
    Fig4 {
        #[arg(long)]
        graph: PathBuf,
        /// Time step, or "fit" to grid-search per control size.
        #[arg(long, default_value = "fit")]
        t: String,
        #[arg(long, default_value_t = 15)]
        lmax: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Download/upload fidelities and bounds for seeded random states.
    Roundtrip {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long = "L")]
        l: usize,
        #[arg(long, default_value_t = 10)]
        n_states: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// One cooling trace for a chosen initial state.
    Cool {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100)]
        lmax: usize,
        /// vacuum | all_ones | ghz | w | mixed | @amplitude-file
        #[arg(long, default_value = "all_ones")]
        initial: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Dump the code maps (Gram, per-basis η, decoder) for both directions.
    Codemap {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long = "L")]
        l: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Exit code mapping: 0 success, 2 configuration/parse errors,
/// 3 resource-cap refusals.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::RegisterCapExceeded { .. } | Error::NetworkTooLarge { .. } => 3,
        _ => 2,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Diagnose { graph, t, out } => cmd_diagnose(graph, *t, out),
        Command::Fig3 {
            graph,
            t,
            lmax,
            out,
        } => cmd_fig3(graph, *t, *lmax, out),
        Command::Fig4 {
            graph,
            t,
            lmax,
            out,
        } => cmd_fig4(graph, t, *lmax, out),
        Command::Roundtrip {
            graph,
            t,
            l,
            n_states,
            seed,
            out,
        } => cmd_roundtrip(graph, *t, *l, *n_states, *seed, out),
        Command::Cool {
            graph,
            t,
            lmax,
            initial,
            out,
        } => cmd_cool(graph, *t, *lmax, initial, out),
        Command::Codemap { graph, t, l, out } => cmd_codemap(graph, *t, *l, out),
    }
}

// ---------------------------------------------------------------------------
// CSV plumbing

/// 17 significant digits, enough to round-trip an f64 exactly.
pub fn fmt_real(x: f64) -> String {
    format!("{:.16e}", x)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_csv(path: &Path, config_desc: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut body = String::new();
    writeln!(
        body,
        "# {} config=0x{:016x} {}",
        ARTIFACT_VERSION,
        fnv1a(config_desc.as_bytes()),
        config_desc
    )
    .expect("infallible");
    writeln!(body, "{}", header.join(",")).expect("infallible");
    for row in rows {
        writeln!(body, "{}", row.join(",")).expect("infallible");
    }
    write_atomic(path, &body)
}

// ---------------------------------------------------------------------------
// Commands

fn compiled(net: &SpinNetwork, t: f64, l: usize, dir: Direction) -> Result<CompiledProtocol> {
    ProtocolConfig::new(net.clone(), t, l, dir)?.compile()
}

fn diagnostics_rows(label: &str, diag: &ChannelDiagnostics, rows: &mut Vec<Vec<String>>) {
    for (i, ev) in diag.eigenvalues.iter().enumerate() {
        rows.push(vec![
            label.to_string(),
            i.to_string(),
            fmt_real(ev.norm()),
            fmt_real(diag.kappa),
            fmt_real(diag.purity_of_fixed_point),
            diag.ergodic_pure.to_string(),
        ]);
    }
}

fn cmd_diagnose(graph: &Path, t: f64, out: &Path) -> Result<()> {
    let net = load_graph(graph)?;
    let mut rows = Vec::new();
    for (label, dir) in [("tau", Direction::Forward), ("tau_prime", Direction::Reverse)] {
        let p = compiled(&net, t, 1, dir)?;
        let diag = channel::diagnose(&p.channel()?)?;
        diagnostics_rows(label, &diag, &mut rows);
    }
    let desc = format!("diagnose graph={} t={}", graph.display(), fmt_real(t));
    write_csv(
        &out.join("diagnose.csv"),
        &desc,
        &[
            "channel",
            "eigenvalue_index",
            "modulus",
            "kappa",
            "fixed_point_purity",
            "ergodic_pure",
        ],
        &rows,
    )
}

fn ensure_ergodic(p: &CompiledProtocol) -> Result<()> {
    let diag = channel::diagnose(&p.channel()?)?;
    if diag.ergodic_pure {
        Ok(())
    } else {
        Err(Error::NotErgodic(format!(
            "κ = {:.6}, fixed-point purity = {:.6}",
            diag.kappa, diag.purity_of_fixed_point
        )))
    }
}

fn trace_rows(trace: &cooling::CoolingTrace) -> Vec<Vec<String>> {
    trace
        .l_values
        .iter()
        .map(|&l| {
            vec![
                l.to_string(),
                fmt_real(trace.p0[l]),
                fmt_real(trace.avg_n[l]),
                fmt_real(trace.eta[l]),
                fmt_real(trace.estimator[l]),
            ]
        })
        .collect()
}

const TRACE_HEADER: [&str; 5] = ["L", "p0", "avg_n", "eta", "estimator"];

fn cmd_fig3(graph: &Path, t: f64, lmax: usize, out: &Path) -> Result<()> {
    let net = load_graph(graph)?;
    let p = compiled(&net, t, 1, Direction::Forward)?;
    ensure_ergodic(&p)?;
    let reg = StateRegistry::standard();
    for label in ["vacuum", "all_ones", "ghz", "mixed", "w"] {
        let rho0 = reg.resolve(label, net.n_qubits())?;
        let trace = cooling::compute_trace(&rho0, &p, lmax, label)?;
        let desc = format!(
            "fig3 graph={} t={} lmax={lmax} initial={label}",
            graph.display(),
            fmt_real(t)
        );
        write_csv(
            &out.join(format!("fig3_{label}.csv")),
            &desc,
            &TRACE_HEADER,
            &trace_rows(&trace),
        )?;
    }
    Ok(())
}

fn cmd_cool(graph: &Path, t: f64, lmax: usize, initial: &str, out: &Path) -> Result<()> {
    let net = load_graph(graph)?;
    let p = compiled(&net, t, 1, Direction::Forward)?;
    ensure_ergodic(&p)?;
    let rho0 = StateRegistry::standard().resolve(initial, net.n_qubits())?;
    let trace = cooling::compute_trace(&rho0, &p, lmax, initial)?;
    let desc = format!(
        "cool graph={} t={} lmax={lmax} initial={initial}",
        graph.display(),
        fmt_real(t)
    );
    let stem: String = initial
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect();
    write_csv(
        &out.join(format!("cool_{stem}.csv")),
        &desc,
        &TRACE_HEADER,
        &trace_rows(&trace),
    )
}

/// Deterministic fit grid for `--t fit`.
fn fit_grid() -> Vec<f64> {
    (1..=40).map(|i| i as f64 * 0.05).collect()
}

fn cmd_fig4(graph: &Path, t_arg: &str, lmax: usize, out: &Path) -> Result<()> {
    let net = load_graph(graph)?;
    let reg = StateRegistry::standard();
    let rho0 = reg.resolve("all_ones", net.n_qubits())?;
    for c_size in 1..=3usize {
        if c_size >= net.n_qubits() {
            return Err(Error::Config(format!(
                "control size {c_size} needs a graph with more than {c_size} sites"
            )));
        }
        let net_c = SpinNetwork::new(
            net.n_qubits(),
            net.edges().to_vec(),
            (0..c_size).collect(),
        )?;
        let template = ProtocolConfig::new(net_c.clone(), 1.0, 1, Direction::Forward)?;
        let (t_best, _) = match t_arg {
            "fit" => cooling::fit_time_step(&rho0, &template, lmax, &fit_grid())?,
            other => {
                let t: f64 = other
                    .parse()
                    .map_err(|_| Error::Config(format!("--t must be a number or 'fit', got '{other}'")))?;
                (t, 0.0)
            }
        };
        let p = compiled(&net_c, t_best, 1, Direction::Forward)?;
        ensure_ergodic(&p)?;
        let trace = cooling::compute_trace(&rho0, &p, lmax, "all_ones")?;
        let rms = cooling::relative_rms(&trace.avg_n, &trace.estimator);
        let rows: Vec<Vec<String>> = trace
            .l_values
            .iter()
            .map(|&l| {
                vec![
                    l.to_string(),
                    fmt_real(trace.avg_n[l]),
                    fmt_real(trace.estimator[l]),
                    fmt_real(t_best),
                    fmt_real(rms),
                ]
            })
            .collect();
        let desc = format!(
            "fig4 graph={} t={t_arg} lmax={lmax} c_size={c_size}",
            graph.display()
        );
        write_csv(
            &out.join(format!("fig4_c{c_size}.csv")),
            &desc,
            &["L", "exact", "estimator", "t_best", "rms"],
            &rows,
        )?;
    }
    Ok(())
}

fn cmd_roundtrip(
    graph: &Path,
    t: f64,
    l: usize,
    n_states: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let net = load_graph(graph)?;
    let p_down = compiled(&net, t, l, Direction::Forward)?;
    p_down.ensure_register_cap()?;
    let p_up = compiled(&net, t, l, Direction::Reverse)?;
    let code_down = coding::compute_code_map(&p_down)?;
    let code_up = coding::compute_code_map(&p_up)?;
    let dim = p_down.layout().dim_system();
    let b_down = coding::bound_down(code_down.eta0, dim);
    let b_up = coding::bound_up(code_up.eta0, dim);

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_states);
    for k in 0..n_states {
        let psi = random_pure_state(dim, &mut rng);
        let f_down = coding::fidelity_down(&psi, &p_down, &code_down)?;
        let (f_up, _) = coding::fidelity_up(&psi, &p_up, &code_up)?;
        let composite = coding::roundtrip_fidelity(&psi, &p_down, &code_down, &p_up, &code_up)?;
        rows.push(vec![
            k.to_string(),
            fmt_real(f_down),
            fmt_real(f_up),
            fmt_real(composite),
            fmt_real(b_down),
            fmt_real(b_up),
        ]);
    }
    let desc = format!(
        "roundtrip graph={} t={} L={l} n_states={n_states} seed={seed}",
        graph.display(),
        fmt_real(t)
    );
    write_csv(
        &out.join("roundtrip.csv"),
        &desc,
        &[
            "state_index",
            "f_down",
            "f_up",
            "composite",
            "bound_down",
            "bound_up",
        ],
        &rows,
    )
}

fn cmd_codemap(graph: &Path, t: f64, l: usize, out: &Path) -> Result<()> {
    let net = load_graph(graph)?;
    for (name, dir) in [
        ("codemap_download.txt", Direction::Forward),
        ("codemap_upload.txt", Direction::Reverse),
    ] {
        let p = compiled(&net, t, l, dir)?;
        let code = coding::compute_code_map(&p)?;
        write_atomic(&out.join(name), &code.to_text())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_formatting_has_seventeen_significant_digits() {
        let s = fmt_real(std::f64::consts::PI);
        assert!(s.starts_with("3.1415926535897931e0"));
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = fnv1a(b"diagnose t=1");
        let b = fnv1a(b"diagnose t=1");
        let c = fnv1a(b"diagnose t=2");
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn exit_codes_distinguish_cap_errors() {
        let cap = Error::RegisterCapExceeded {
            n: 7,
            l: 20,
            c: 1,
            total: 27,
            cap: 22,
        };
        assert_eq!(exit_code(&cap), 3);
        assert_eq!(exit_code(&Error::Config("bad label".into())), 2);
        assert_eq!(
            exit_code(&Error::Parse {
                line: 3,
                message: "nope".into()
            }),
            2
        );
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join("coolnet_cli_test");
        let path = dir.join("x.csv");
        write_atomic(&path, "first").unwrap();
        write_atomic(&path, "second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        assert!(!path.with_extension("tmp").exists());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn csv_layout() {
        let dir = std::env::temp_dir().join("coolnet_cli_csv_test");
        let path = dir.join("t.csv");
        write_csv(
            &path,
            "unit test",
            &["a", "b"],
            &[vec!["1".into(), fmt_real(0.5)]],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        let comment = lines.next().unwrap();
        assert!(comment.starts_with("# coolnet v1 config=0x"));
        assert_eq!(lines.next().unwrap(), "a,b");
        assert_eq!(lines.next().unwrap(), "1,5.0000000000000000e-1");
        std::fs::remove_dir_all(&dir).ok();
    }
}
