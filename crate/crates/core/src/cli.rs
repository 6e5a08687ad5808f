//! The `btypes` command line. [`run`] takes the arguments and output
//! streams explicitly so it can be driven from tests.
//!
//! Exit codes: 0 when the checked property holds, 1 when it is violated
//! (deadlock or incompatibility found, types differ, run not conformant,
//! no priorities found), 2 on usage, input or I/O errors.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::automaton::{complete, equals, minimize, normalize, refines, validate, BehavioralType, Label, Severity};
use crate::composition::{analyze, check_compatibility, detect_deadlocks, AnalysisVerdict, ComponentSystem};
use crate::fixtures;
use crate::model_io::{load_file, save, save_file, ModelDocument, ModelIoError, Payload};
use crate::osgi::{
    explore_exhaustive, monitor, parse_log, run_random, run_script, MonitorVerdict, SystemDef, TraceEvent,
};
use crate::registry::adapt_protocol;
use crate::synthesis::{explain, format_trace, synthesize, SynthesisStatus, DEFAULT_MAX_RULES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "btypes", version, about = "Behavioral types for reconfigurable components")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct OutputArg {
    /// Write the result here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a model file loads and is well formed.
    Validate { file: PathBuf },
    /// Rename locations to the canonical q0, q1, ... numbering.
    Normalize {
        file: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Merge equivalent locations of a deterministic, complete type.
    Minimize {
        file: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Route every missing edge to an error location.
    Complete {
        file: PathBuf,
        /// Behavioral type whose alphabet to complete over.
        #[arg(long)]
        alphabet: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Compare two types up to location renaming.
    Equal {
        a: PathBuf,
        b: PathBuf,
        /// Also require identical location names.
        #[arg(long)]
        names: bool,
    },
    /// Compare an implementation with a specification on chosen labels.
    Refine {
        implementation: PathBuf,
        specification: PathBuf,
        /// Comma-separated label names (default: both alphabets).
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
    },
    /// Search a component system for deadlocks.
    Deadlock {
        system: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Search component systems for calls the receiver cannot accept.
    Compat {
        #[arg(required = true)]
        systems: Vec<PathBuf>,
        /// Check this many systems at once.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        json: bool,
    },
    /// Synthesize priority rules removing deadlocks and incompatibilities.
    Synth {
        system: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_RULES)]
        max_rules: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run an OSGi system definition.
    Simulate {
        system: PathBuf,
        #[arg(long, requires = "steps", conflicts_with_all = ["exhaustive", "script"])]
        seed: Option<u64>,
        #[arg(long, requires = "seed")]
        steps: Option<usize>,
        #[arg(long, requires = "depth", conflicts_with = "script")]
        exhaustive: bool,
        #[arg(long, requires = "exhaustive")]
        depth: Option<usize>,
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Check the calls of one object in an event log against a type.
    Monitor {
        log: PathBuf,
        /// The observed object, as bundle/object.
        subject: String,
        r#type: PathBuf,
    },
    /// Walk through a built-in scenario.
    Demo {
        #[arg(value_parser = ["booking"])]
        scenario: String,
    },
}

struct Failure(String);

impl From<ModelIoError> for Failure {
    fn from(e: ModelIoError) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

fn fail<E: std::fmt::Display>(context: &Path) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure(format!("{}: {e}", context.display()))
}

fn load_doc(path: &Path) -> Result<ModelDocument, Failure> {
    load_file(path).map_err(|e| match e {
        ModelIoError::Io { .. } => Failure(e.to_string()),
        e => Failure(format!("{}:{e}", path.display())),
    })
}

fn load_type(path: &Path) -> Result<(Option<String>, BehavioralType), Failure> {
    let doc = load_doc(path)?;
    let note = doc.note.clone();
    Ok((note, doc.into_behavioral_type().map_err(fail(path))?))
}

fn load_system(path: &Path) -> Result<ComponentSystem, Failure> {
    load_doc(path)?.into_component_system().map_err(fail(path))
}

fn load_osys(path: &Path) -> Result<SystemDef, Failure> {
    load_doc(path)?.into_system_def().map_err(fail(path))
}

fn emit(out: &mut dyn Write, target: &OutputArg, doc: &ModelDocument) -> Result<(), Failure> {
    match &target.output {
        Some(p) => save_file(p, doc).map_err(Failure::from),
        None => write!(out, "{}", save(doc)).map_err(|e| Failure(e.to_string())),
    }
}

/// Which sections [`format_verdict`] prints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checks {
    pub deadlocks: bool,
    pub compatibility: bool,
}

impl Checks {
    pub const ALL: Checks = Checks { deadlocks: true, compatibility: true };
    pub const DEADLOCKS: Checks = Checks { deadlocks: true, compatibility: false };
    pub const COMPATIBILITY: Checks = Checks { deadlocks: false, compatibility: true };
}

/// Plain-text rendering of a verdict with one trace per reported state.
pub fn format_verdict(v: &AnalysisVerdict, checks: Checks) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "components: {}", v.components.join(", "));
    let _ = writeln!(
        s,
        "explored {} states{}, {} terminal",
        v.explored,
        if v.complete { "" } else { " (bound reached, result partial)" },
        v.terminal
    );
    if checks.deadlocks && v.deadlocks.is_empty() {
        let _ = writeln!(s, "deadlocks: none");
    } else if checks.deadlocks {
        let _ = writeln!(s, "deadlocks: {}", v.deadlocks.len());
        for d in &v.deadlocks {
            let _ = writeln!(s, "  deadlock at {d}");
            let _ = writeln!(s, "    trace: {}", format_trace(v.trace_for(d).unwrap_or_default()));
        }
    }
    if checks.compatibility && v.incompatibilities.is_empty() {
        let _ = writeln!(s, "incompatibilities: none");
    } else if checks.compatibility {
        let _ = writeln!(s, "incompatibilities: {}", v.incompatibilities.len());
        for i in &v.incompatibilities {
            let _ = writeln!(s, "  at {}: {} calls {}, which {} refuses", i.state, i.sender, i.label.name, i.refuser);
            let _ = writeln!(s, "    trace: {}", format_trace(v.trace_for(&i.state).unwrap_or_default()));
        }
    }
    s
}

fn print(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| Failure(e.to_string()))
}

fn verdict_output(out: &mut dyn Write, v: &AnalysisVerdict, checks: Checks, json: bool) -> Result<(), Failure> {
    if json {
        print(out, &save(&ModelDocument::new(Payload::Verdict(v.clone()))))
    } else {
        print(out, &format_verdict(v, checks))
    }
}

fn exit_for(violated: bool) -> i32 {
    if violated {
        EXIT_VIOLATED
    } else {
        EXIT_OK
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Validate { file } => {
            let doc = match load_file(&file) {
                Ok(doc) => doc,
                Err(e @ ModelIoError::Invalid { .. }) => {
                    print(out, &format!("{}:{e}\n", file.display()))?;
                    return Ok(EXIT_VIOLATED);
                }
                Err(e) => return Err(Failure(format!("{}:{e}", file.display()))),
            };
            let kind = doc.payload.kind();
            if let Payload::BehavioralType(bt) = &doc.payload {
                for v in validate(bt).iter().filter(|v| v.severity == Severity::Warning) {
                    print(out, &format!("{v}\n"))?;
                }
            }
            print(out, &format!("{}: valid {kind}\n", file.display()))?;
            Ok(EXIT_OK)
        }
        Command::Normalize { file, out: target } => {
            let (note, bt) = load_type(&file)?;
            emit(out, &target, &ModelDocument { note, payload: Payload::BehavioralType(normalize(&bt)) })?;
            Ok(EXIT_OK)
        }
        Command::Minimize { file, out: target } => {
            let (note, bt) = load_type(&file)?;
            let min = minimize(&bt).map_err(fail(&file))?;
            emit(out, &target, &ModelDocument { note, payload: Payload::BehavioralType(min) })?;
            Ok(EXIT_OK)
        }
        Command::Complete {
            file,
            alphabet,
            out: target,
        } => {
            let (note, bt) = load_type(&file)?;
            let (_, full) = load_type(&alphabet)?;
            let done = complete(&bt, &full.alphabet).map_err(fail(&file))?;
            emit(out, &target, &ModelDocument { note, payload: Payload::BehavioralType(done) })?;
            Ok(EXIT_OK)
        }
        Command::Equal { a, b, names } => {
            let (_, ta) = load_type(&a)?;
            let (_, tb) = load_type(&b)?;
            let r = equals(&ta, &tb, names);
            print(out, &equality_report(&r))?;
            Ok(exit_for(!r.equal))
        }
        Command::Refine {
            implementation,
            specification,
            labels,
        } => {
            let (_, imp) = load_type(&implementation)?;
            let (_, spec) = load_type(&specification)?;
            let considered: Option<BTreeSet<Label>> = labels.map(|names| {
                imp.alphabet
                    .iter()
                    .chain(&spec.alphabet)
                    .filter(|l| names.contains(&l.name))
                    .cloned()
                    .collect()
            });
            if considered.as_ref().is_some_and(BTreeSet::is_empty) {
                return Err(Failure("none of the given labels occur in either type".into()));
            }
            let r = refines(&imp, &spec, considered.as_ref()).map_err(fail(&implementation))?;
            print(out, &equality_report(&r))?;
            Ok(exit_for(!r.equal))
        }
        Command::Deadlock { system, json } => {
            let sys = load_system(&system)?;
            let v = detect_deadlocks(&sys);
            verdict_output(out, &v, Checks::DEADLOCKS, json)?;
            Ok(exit_for(!v.deadlocks.is_empty() || !v.complete))
        }
        Command::Compat { systems, threads, json } => {
            let mut loaded = Vec::new();
            for p in &systems {
                loaded.push(load_system(p)?);
            }
            let verdicts = compat_all(&loaded, threads.max(1));
            let mut violated = false;
            for (path, v) in systems.iter().zip(verdicts) {
                let v = v.map_err(fail(path))?;
                violated |= !v.incompatibilities.is_empty() || !v.complete;
                if systems.len() > 1 && !json {
                    print(out, &format!("== {}\n", path.display()))?;
                }
                verdict_output(out, &v, Checks::COMPATIBILITY, json)?;
            }
            Ok(exit_for(violated))
        }
        Command::Synth { system, max_rules, json } => {
            let sys = load_system(&system)?;
            let r = synthesize(&sys, max_rules).map_err(fail(&system))?;
            if json {
                print(out, &save(&ModelDocument::new(Payload::SynthesisResult(r.clone()))))?;
            } else {
                print(out, &explain(&r))?;
            }
            Ok(exit_for(r.status != SynthesisStatus::Solved))
        }
        Command::Simulate {
            system,
            seed,
            steps,
            exhaustive,
            depth,
            script,
        } => {
            let def = load_osys(&system)?;
            if let (Some(seed), Some(steps)) = (seed, steps) {
                let r = run_random(&def, seed, steps).map_err(fail(&system))?;
                print(out, &r.state.log_text())?;
            } else if exhaustive {
                let depth = depth.expect("clap requires --depth");
                let s = explore_exhaustive(&def, depth).map_err(fail(&system))?;
                let mut text = format!(
                    "depth {}: {} maximal traces, {} terminal, {} blocked, {} at the depth limit\n",
                    s.depth,
                    s.traces.len(),
                    s.terminal,
                    s.blocked,
                    s.frontier
                );
                for t in &s.traces {
                    let steps: Vec<String> = t.iter().map(|s| s.to_string()).collect();
                    let _ = writeln!(text, "  {}", steps.join("; "));
                }
                print(out, &text)?;
            } else if let Some(path) = script {
                let steps = load_doc(&path)?.into_script().map_err(fail(&path))?;
                let r = run_script(&def, &steps).map_err(fail(&path))?;
                print(out, &r.state.log_text())?;
            } else {
                return Err(Failure(
                    "simulate needs --seed N --steps K, --exhaustive --depth D, or --script FILE".into(),
                ));
            }
            Ok(EXIT_OK)
        }
        Command::Monitor { log, subject, r#type } => {
            let text = std::fs::read_to_string(&log).map_err(fail(&log))?;
            let events = parse_log(&text).map_err(fail(&log))?;
            let (bundle, object) = subject
                .split_once('/')
                .ok_or_else(|| Failure(format!("subject {subject:?} is not of the form bundle/object")))?;
            let (_, bt) = load_type(&r#type)?;
            let verdict = monitor(&events, (bundle, object), &bt);
            print(out, &describe_monitor(&verdict, &events, &subject))?;
            Ok(exit_for(!verdict.is_conformant()))
        }
        Command::Demo { .. } => {
            print(out, &booking_demo()?)?;
            Ok(EXIT_OK)
        }
    }
}

fn describe_monitor(verdict: &MonitorVerdict, log: &[TraceEvent], subject: &str) -> String {
    match verdict {
        MonitorVerdict::Conformant { events } => format!("conformant: {events} observed calls of {subject}\n"),
        MonitorVerdict::Violation { seq, label } => {
            let line = log.iter().find(|e| e.seq == *seq).map(|e| e.to_string()).unwrap_or_default();
            format!("violation at event {seq}: {label} is not allowed here\n  {line}\n")
        }
    }
}

fn equality_report(r: &crate::automaton::EqualityResult) -> String {
    let mut s = String::new();
    if r.equal {
        let _ = writeln!(s, "equal");
        for (l, rr) in &r.mapping {
            let _ = writeln!(s, "  {l} -> {rr}");
        }
    } else {
        let _ = writeln!(s, "not equal");
        if let Some(d) = &r.first_difference {
            let _ = writeln!(s, "  {d}");
        }
    }
    s
}

fn compat_all(systems: &[ComponentSystem], threads: usize) -> Vec<Result<AnalysisVerdict, crate::composition::CompositionError>> {
    if threads <= 1 || systems.len() <= 1 {
        return systems.iter().map(check_compatibility).collect();
    }
    let chunk = systems.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = systems
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(check_compatibility).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("compatibility worker panicked"))
            .collect()
    })
}

fn booking_demo() -> Result<String, Failure> {
    let err = |e: &dyn std::fmt::Display| Failure(e.to_string());
    let mut s = String::new();

    let _ = writeln!(s, "# 1. Two components, two protocol versions");
    let _ = writeln!(s, "# A can open a session with newPrtcl or oldPrtcl; B only accepts newPrtcl.");
    let fig3 = fixtures::fig3();
    let v = analyze(&fig3).map_err(|e| err(&e))?;
    let _ = write!(s, "{}", format_verdict(&v, Checks::ALL));
    let _ = writeln!(s, "# Synthesizing priorities for the pair:");
    let r = synthesize(&fig3, DEFAULT_MAX_RULES).map_err(|e| err(&e))?;
    let _ = write!(s, "{}", explain(&r));
    let chosen = adapt_protocol(&fixtures::fig3_caller(), &fixtures::fig3_callee()).map_err(|e| err(&e))?;
    let names: Vec<&str> = chosen.iter().map(|l| l.name.as_str()).collect();
    let _ = writeln!(s, "# At runtime A looks at the priorities and picks: {}", names.join(", "));
    let _ = writeln!(s);

    let _ = writeln!(s, "# 2. Seat reservation for one flight");
    let seat = fixtures::seat_reservation();
    let completed = complete(&seat, &seat.alphabet).map_err(|e| err(&e))?;
    let m = minimize(&completed).map_err(|e| err(&e))?;
    let _ = writeln!(
        s,
        "# {} locations; completed with an error location: {}; minimized: {}.",
        seat.locations.len(),
        completed.locations.len(),
        m.locations.len()
    );
    let _ = writeln!(s);

    let _ = writeln!(s, "# 3. Two people booking two connecting flights");
    let _ = writeln!(s, "# Each flight has one seat left. person1 books AB first, person2 books BC first.");
    let flights = fixtures::booking_two_flights();
    let v = detect_deadlocks(&flights);
    let _ = write!(s, "{}", format_verdict(&v, Checks::DEADLOCKS));
    let _ = writeln!(s);

    let _ = writeln!(s, "# 4. Running the booking deployment");
    let def = fixtures::booking_osys();
    let run = run_random(&def, 1, 200).map_err(|e| err(&e))?;
    let mut kinds = std::collections::BTreeMap::new();
    for e in &run.state.log {
        *kinds.entry(e.kind.as_str()).or_insert(0usize) += 1;
    }
    let counts: Vec<String> = kinds.iter().map(|(k, n)| format!("{k} {n}")).collect();
    let _ = writeln!(s, "# 200 random steps (seed 1), {} events: {}", run.state.log.len(), counts.join(", "));
    let mw = fixtures::middleware_outgoing();
    for object in ["mw1", "mw2"] {
        let verdict = monitor(&run.state.log, ("core", object), &mw);
        let _ = write!(s, "# {}", describe_monitor(&verdict, &run.state.log, &format!("core/{object}")));
    }
    let _ = writeln!(s);

    let _ = writeln!(s, "# 5. A middleware process that charges before reserving");
    let bad = fixtures::system_def("middleware_misordered.osys");
    let run = run_script(&bad, &fixtures::script("middleware_misordered.bscript")).map_err(|e| err(&e))?;
    let _ = write!(s, "{}", run.state.log_text());
    let verdict = monitor(&run.state.log, ("core", "mw1"), &mw);
    let _ = write!(s, "# {}", describe_monitor(&verdict, &run.state.log, "core/mw1"));
    Ok(s)
}

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}
