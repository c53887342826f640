use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tracepds::logic;
use tracepds::oracle;
use tracepds::reach::ReachTable;
use tracepds::{Error, FnfRelation, Tpds, Trace};

#[derive(Parser)]
#[command(name = "tpds", version, about = "Reachability analysis for pushdown systems over traces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a system: (P1), (P2), saturation, optionally loop-connectedness
    Check {
        file: PathBuf,
        /// Also check loop-connectedness of the saturated system
        #[arg(long)]
        loop_connected: bool,
    },
    /// Print the saturated system in the text format
    Saturate { file: PathBuf },
    /// Print the Foata normal form of a word over the system's alphabet
    Fnf { file: PathBuf, word: String },
    /// Build the step/reach automata and write them as artifacts
    Build {
        file: PathBuf,
        /// Output directory
        #[arg(short, long)]
        out: PathBuf,
        /// Artifact format
        #[arg(long, default_value = "json", value_parser = ["json", "dot"])]
        format: String,
    },
    /// Decide reach membership: states and stack words for both endpoints
    Query {
        file: PathBuf,
        p: String,
        w1: String,
        q: String,
        w2: String,
    },
    /// Evaluate a formula against the built structure
    Mc {
        file: PathBuf,
        /// `s` for trace-level formulas, `g` for configuration-level
        #[arg(long, value_parser = ["s", "g"])]
        level: String,
        formula: String,
    },
    /// Cross-validate the built automata against bounded search
    Oracle {
        file: PathBuf,
        /// Endpoint trace length bound
        #[arg(long, default_value_t = 4)]
        max_trace_len: usize,
        /// Intermediate trace length bound for the completeness direction
        #[arg(long, default_value_t = 8)]
        intermediate: usize,
    },
}

/// Exit codes: 0 success / formula true, 1 property or formula fails,
/// 2 input error, 3 internal diagnostic failure.
fn error_code(e: &Error) -> u8 {
    match e {
        Error::ClosureCapExhausted(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}

fn load(file: &Path) -> Result<(Tpds, String), Error> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| Error::Precondition(format!("cannot read {}: {e}", file.display())))?;
    Ok((Tpds::parse(&text)?, text))
}

/// Full validation pipeline; returns the saturated, loop-checked system.
fn validate(mut sys: Tpds) -> Result<Tpds, Error> {
    if let Some(t) = sys.check_p1() {
        return Err(Error::Precondition(format!(
            "(P1) fails at {}",
            sys.show_transition(&t)
        )));
    }
    if let Some((t1, t2)) = sys.check_p2() {
        return Err(Error::Precondition(format!(
            "(P2) fails at {} ; {}",
            sys.show_transition(&t1),
            sys.show_transition(&t2)
        )));
    }
    let mut sat = sys.saturate()?;
    if let Some(w) = sat.check_loop_connected()? {
        return Err(Error::Precondition(format!(
            "not loop-connected: {}",
            show_loop_witness(&sat, &w)
        )));
    }
    Ok(sat)
}

fn show_loop_witness(sys: &Tpds, w: &tracepds::tpds::LoopWitness) -> String {
    let graph = sys.loop_graph();
    let mut parts = Vec::new();
    for &e in &w.walk {
        let (from, to, label) = graph.edges[e];
        let (fp, fa) = graph.nodes[from];
        let (tp, ta) = graph.nodes[to];
        parts.push(format!(
            "({},{}) --{}--> ({},{})",
            sys.state_names[fp],
            sys.alphabet.name(fa),
            sys.alphabet.show_set(label),
            sys.state_names[tp],
            sys.alphabet.name(ta)
        ));
    }
    format!(
        "closed walk {} writes the disconnected set {}",
        parts.join(" ; "),
        sys.alphabet.show_set(w.label_union)
    )
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.cmd {
        Cmd::Check {
            file,
            loop_connected,
        } => {
            let (mut sys, _) = load(&file)?;
            if let Some(t) = sys.check_p1() {
                println!("P1: fail at {}", sys.show_transition(&t));
                return Ok(1);
            }
            println!("P1: ok");
            if let Some((t1, t2)) = sys.check_p2() {
                println!(
                    "P2: fail at {} ; {}",
                    sys.show_transition(&t1),
                    sys.show_transition(&t2)
                );
                return Ok(1);
            }
            println!("P2: ok");
            let mut sat = sys.saturate()?;
            let added = sat.transitions.len() - sys.transitions.len();
            println!("saturation: {added} transition(s) added");
            if loop_connected {
                match sat.check_loop_connected()? {
                    Some(w) => {
                        println!("loop-connected: fail, {}", show_loop_witness(&sat, &w));
                        return Ok(1);
                    }
                    None => println!("loop-connected: ok"),
                }
            }
            Ok(0)
        }
        Cmd::Saturate { file } => {
            let (mut sys, _) = load(&file)?;
            if let Some(t) = sys.check_p1() {
                return Err(Error::Precondition(format!(
                    "(P1) fails at {}",
                    sys.show_transition(&t)
                )));
            }
            if let Some((t1, t2)) = sys.check_p2() {
                return Err(Error::Precondition(format!(
                    "(P2) fails at {} ; {}",
                    sys.show_transition(&t1),
                    sys.show_transition(&t2)
                )));
            }
            print!("{}", sys.saturate()?.to_text());
            Ok(0)
        }
        Cmd::Fnf { file, word } => {
            let (sys, _) = load(&file)?;
            let t = Trace::parse(&word, &sys.alphabet)?;
            println!("{}", t.show(&sys.alphabet));
            Ok(0)
        }
        Cmd::Build { file, out, format } => {
            let (sys, text) = load(&file)?;
            let sat = validate(sys)?;
            let table = ReachTable::build(&sat)?;
            let digest = hex_digest(&text);
            std::fs::create_dir_all(&out)
                .map_err(|e| Error::Precondition(format!("cannot create {}: {e}", out.display())))?;
            let names = &sat.state_names;
            let mut artifacts: Vec<(String, &FnfRelation)> = Vec::new();
            for p in 0..sat.state_count() {
                for q in 0..sat.state_count() {
                    artifacts.push((format!("step.{}.{}", names[p], names[q]), table.step(p, q)));
                    artifacts.push((format!("reach.{}.{}", names[p], names[q]), table.reach(p, q)));
                }
            }
            for piece in &table.pieces {
                artifacts.push((
                    format!("piece.{}.{}.{}", piece.tag, names[piece.from], names[piece.to]),
                    &piece.rel,
                ));
            }
            for (stem, rel) in artifacts {
                let (ext, data) = match format.as_str() {
                    "dot" => ("dot", relation_dot(rel)),
                    _ => (
                        "json",
                        serde_json::to_string_pretty(&relation_doc(rel, &digest))
                            .expect("serializable")
                            + "\n",
                    ),
                };
                let path = out.join(format!("{stem}.{ext}"));
                std::fs::write(&path, data).map_err(|e| {
                    Error::Precondition(format!("cannot write {}: {e}", path.display()))
                })?;
            }
            println!(
                "wrote {} artifacts to {} ({} fixpoint iterations)",
                2 * sat.state_count() * sat.state_count() + table.pieces.len(),
                out.display(),
                table.iterations
            );
            Ok(0)
        }
        Cmd::Query { file, p, w1, q, w2 } => {
            let (sys, _) = load(&file)?;
            let sat = validate(sys)?;
            let (pi, qi) = (sat.state_index(&p)?, sat.state_index(&q)?);
            let (t1, t2) = (
                Trace::parse(&w1, &sat.alphabet)?,
                Trace::parse(&w2, &sat.alphabet)?,
            );
            let table = ReachTable::build(&sat)?;
            let verdict = table.reach(pi, qi).membership(&[t1, t2])?;
            println!("{verdict}");
            Ok(if verdict { 0 } else { 1 })
        }
        Cmd::Mc {
            file,
            level,
            formula,
        } => {
            let (sys, _) = load(&file)?;
            let sat = validate(sys)?;
            let table = ReachTable::build(&sat)?;
            let truth = if level == "s" {
                let f = logic::parse_s(&formula)?;
                let out = logic::evaluate_s(&f, &table)?;
                for (var, t) in &out.witness {
                    println!("witness {} = {}", var, t.show(&sat.alphabet));
                }
                out.truth
            } else {
                let f = logic::parse_g(&formula)?;
                let out = logic::evaluate_g(&f, &table)?;
                for (var, state, t) in &out.witness {
                    println!("witness {} = ({}, {})", var, state, t.show(&sat.alphabet));
                }
                out.truth
            };
            println!("{truth}");
            Ok(if truth { 0 } else { 1 })
        }
        Cmd::Oracle {
            file,
            max_trace_len,
            intermediate,
        } => {
            let (sys, _) = load(&file)?;
            let sat = validate(sys)?;
            let table = ReachTable::build(&sat)?;
            let report = oracle::cross_validate(&sat, &table, max_trace_len, intermediate);
            print!("{}", report.to_text());
            println!(
                "{}",
                serde_json::to_string(&report).expect("serializable report")
            );
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

fn hex_digest(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct AutomatonDoc {
    version: String,
    digest: String,
    arity: usize,
    /// Each symbol is a tuple of blocks; each block a list of letter names.
    symbols: Vec<Vec<Vec<String>>>,
    states: usize,
    initial: Vec<usize>,
    #[serde(rename = "final")]
    finals: Vec<usize>,
    transitions: Vec<(usize, usize, usize)>,
}

fn relation_doc(rel: &FnfRelation, digest: &str) -> AutomatonDoc {
    let blocks = rel.blocks();
    let alpha = blocks.alpha();
    let symbols = (0..blocks.tuple_domain(rel.arity()))
        .map(|sym| {
            blocks
                .tuple_at(sym, rel.arity())
                .into_iter()
                .map(|set| set.iter().map(|l| alpha.name(l).to_string()).collect())
                .collect()
        })
        .collect();
    let auto = rel.auto();
    AutomatonDoc {
        version: env!("CARGO_PKG_VERSION").to_string(),
        digest: digest.to_string(),
        arity: rel.arity(),
        symbols,
        states: auto.states,
        initial: auto.initial.iter().copied().collect(),
        finals: auto.finals.iter().copied().collect(),
        transitions: auto.transitions.iter().copied().collect(),
    }
}

fn relation_dot(rel: &FnfRelation) -> String {
    let blocks = rel.blocks().clone();
    let arity = rel.arity();
    rel.auto().to_dot(&move |sym| blocks.show_tuple(sym, arity))
}
