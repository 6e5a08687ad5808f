use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::apply_step_mut;
use super::{enabled_steps, init_system, ActiveMethodState, OsgiError, Step, SystemDef, SystemState};

/// How [`run`] picks steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    /// Uniform choice among enabled steps, reproducible from the seed.
    SeededRandom { seed: u64, max_steps: usize },
    /// Every interleaving up to `depth` steps.
    Exhaustive { depth: usize },
    /// The given steps, in order.
    Script(Vec<Step>),
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub def: SystemDef,
    pub state: SystemState,
    pub steps: Vec<Step>,
    /// No step was enabled when the run ended.
    pub stuck: bool,
}

/// Outcome of an exhaustive run. Configurations are counted up to the
/// event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustiveSummary {
    pub depth: usize,
    /// Traces that cannot be extended within the depth, in lexicographic
    /// order of their steps.
    pub traces: Vec<Vec<Step>>,
    /// Distinct configurations with no active method left.
    pub terminal: usize,
    /// Distinct configurations with active methods but no enabled step.
    pub blocked: usize,
    /// Distinct configurations at the depth limit that could continue.
    pub frontier: usize,
}

#[derive(Debug, Clone)]
pub enum RunOutcome {
    Run(RunResult),
    Explored(ExhaustiveSummary),
}

pub fn run(def: &SystemDef, strategy: &Strategy) -> Result<RunOutcome, OsgiError> {
    Ok(match strategy {
        Strategy::SeededRandom { seed, max_steps } => RunOutcome::Run(run_random(def, *seed, *max_steps)?),
        Strategy::Exhaustive { depth } => RunOutcome::Explored(explore_exhaustive(def, *depth)?),
        Strategy::Script(steps) => RunOutcome::Run(run_script(def, steps)?),
    })
}

/// Runs at most `max_steps` steps, each chosen uniformly among the enabled
/// ones. Equal seeds give equal runs.
pub fn run_random(def: &SystemDef, seed: u64, max_steps: usize) -> Result<RunResult, OsgiError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut def = def.clone();
    let mut state = init_system(&def)?;
    let mut steps = Vec::new();
    let mut stuck = false;
    while steps.len() < max_steps {
        let enabled = enabled_steps(&def, &state)?;
        if enabled.is_empty() {
            stuck = true;
            break;
        }
        let step = enabled[rng.gen_range(0..enabled.len())].clone();
        apply_step_mut(&mut def, &mut state, &step)?;
        steps.push(step);
    }
    Ok(RunResult { def, state, steps, stuck })
}

/// Applies `script` verbatim, failing at the first step that is not enabled.
pub fn run_script(def: &SystemDef, script: &[Step]) -> Result<RunResult, OsgiError> {
    let mut def = def.clone();
    let mut state = init_system(&def)?;
    for (index, step) in script.iter().enumerate() {
        if !enabled_steps(&def, &state)?.contains(step) {
            return Err(OsgiError::ScriptStepDisabled {
                index,
                step: step.to_string(),
            });
        }
        apply_step_mut(&mut def, &mut state, step)?;
    }
    let stuck = enabled_steps(&def, &state)?.is_empty();
    Ok(RunResult {
        def,
        state,
        steps: script.to_vec(),
        stuck,
    })
}

type Configuration = (SystemDef, BTreeMap<String, BTreeMap<String, Vec<ActiveMethodState>>>);

struct Explorer {
    depth: usize,
    traces: Vec<Vec<Step>>,
    terminal: BTreeSet<Configuration>,
    blocked: BTreeSet<Configuration>,
    frontier: BTreeSet<Configuration>,
}

impl Explorer {
    fn visit(&mut self, def: &SystemDef, state: &SystemState, path: &mut Vec<Step>) -> Result<(), OsgiError> {
        let enabled = enabled_steps(def, state)?;
        if enabled.is_empty() || path.len() == self.depth {
            self.traces.push(path.clone());
            let config = (def.clone(), state.bundles.clone());
            match (enabled.is_empty(), state.is_idle()) {
                (true, true) => self.terminal.insert(config),
                (true, false) => self.blocked.insert(config),
                (false, _) => self.frontier.insert(config),
            };
            return Ok(());
        }
        for step in enabled {
            let mut d = def.clone();
            let mut s = state.clone();
            apply_step_mut(&mut d, &mut s, &step)?;
            path.push(step);
            self.visit(&d, &s, path)?;
            path.pop();
        }
        Ok(())
    }
}

/// Enumerates every interleaving of at most `depth` steps.
pub fn explore_exhaustive(def: &SystemDef, depth: usize) -> Result<ExhaustiveSummary, OsgiError> {
    let state = init_system(def)?;
    let mut ex = Explorer {
        depth,
        traces: Vec::new(),
        terminal: BTreeSet::new(),
        blocked: BTreeSet::new(),
        frontier: BTreeSet::new(),
    };
    ex.visit(def, &state, &mut Vec::new())?;
    ex.traces.sort();
    Ok(ExhaustiveSummary {
        depth,
        traces: ex.traces,
        terminal: ex.terminal.len(),
        blocked: ex.blocked.len(),
        frontier: ex.frontier.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::testing::*;
    use super::super::{MethodDef, ObjectDef, START};
    use super::*;

    /// `start` calls two independent one-step workers at once.
    fn two_workers() -> SystemDef {
        let start = MethodDef::new(START, "s0").with_edge("s0", "s1", vec![call("b", "x", "go"), call("b", "y", "go")]);
        let worker = |id: &str| ObjectDef {
            id: id.into(),
            methods: vec![MethodDef::new("go", "g0")],
        };
        system(vec![bundle("b", start, vec![worker("x"), worker("y")])])
    }

    #[test]
    fn edgeless_start_returns_once() {
        let def = system(vec![bundle("b", MethodDef::new(START, "s0"), vec![])]);
        let r = run_random(&def, 1, 10).unwrap();
        assert_eq!(r.steps.len(), 1);
        assert!(r.stuck);
        assert!(r.state.is_idle());
    }

    #[test]
    fn same_seed_same_log() {
        let def = two_workers();
        let a = run_random(&def, 42, 100).unwrap();
        let b = run_random(&def, 42, 100).unwrap();
        assert_eq!(a.state.log_text(), b.state.log_text());
    }

    #[test]
    fn exhaustive_counts_interleavings() {
        let s = explore_exhaustive(&two_workers(), 10).unwrap();
        // the two workers return in either order
        assert_eq!(s.traces.len(), 2);
        assert_eq!(s.terminal, 1);
        assert_eq!(s.blocked, 0);
        assert_eq!(s.frontier, 0);
        assert!(s.traces.iter().all(|t| t.len() == 4));
    }

    #[test]
    fn exhaustive_depth_cuts_traces() {
        let s = explore_exhaustive(&two_workers(), 2).unwrap();
        assert_eq!(s.traces.len(), 2);
        assert_eq!(s.frontier, 2);
        assert_eq!(s.terminal, 0);
    }

    #[test]
    fn script_rejects_disabled_step() {
        let def = caller_callee();
        let bad = Step::Return {
            bundle: "b".into(),
            object: "act".into(),
            call_id: 0,
        };
        assert_eq!(
            run_script(&def, &[bad]).unwrap_err(),
            OsgiError::ScriptStepDisabled {
                index: 0,
                step: "return b/act#0".into()
            }
        );
    }

    #[test]
    fn script_replays_random_run() {
        let def = two_workers();
        let r = run_random(&def, 7, 50).unwrap();
        let s = run_script(&def, &r.steps).unwrap();
        assert_eq!(s.state, r.state);
        assert!(s.stuck);
    }

    #[test]
    fn run_dispatches() {
        let def = two_workers();
        assert!(matches!(run(&def, &Strategy::Exhaustive { depth: 3 }).unwrap(), RunOutcome::Explored(_)));
        assert!(matches!(run(&def, &Strategy::Script(vec![])).unwrap(), RunOutcome::Run(_)));
    }
}
