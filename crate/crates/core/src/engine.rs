//! The generic run loop: guarded laws applied in order, once per time step.
//!
//! Laws run sequentially against the same state, so law `i+1` sees what law
//! `i` wrote. After every transition the state invariants are re-checked and
//! a violation aborts the run naming the law.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::locality::AccessFootprint;
use crate::rng::{DrawRecord, RngState};
use crate::state::{StateError, StateEvent, SystemState};
use crate::Error;

pub type Condition = Arc<dyn Fn(&SystemState) -> bool + Send + Sync>;
pub type Transition = Arc<dyn Fn(&mut SystemState) -> Result<(), Error> + Send + Sync>;
pub type Predicate = Arc<dyn Fn(&SystemState) -> bool + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid engine config: {0}")]
    InvalidConfig(String),
    #[error("law list is empty")]
    NoLaws,
    #[error("duplicate law id `{0}`")]
    DuplicateLaw(String),
    #[error("state time step {found} differs from requested {expected}")]
    TimestepMismatch { expected: f64, found: f64 },
    #[error("law `{law}` broke a state invariant: {source}")]
    Invariant {
        law: String,
        #[source]
        source: StateError,
    },
    #[error("law `{law}` failed: {source}")]
    Law {
        law: String,
        #[source]
        source: Box<Error>,
    },
}

/// `IF condition(s) THEN s = transition(s)`.
#[derive(Clone)]
pub struct Law {
    pub id: String,
    pub condition: Condition,
    pub transition: Transition,
    pub footprint: AccessFootprint,
}

impl Law {
    pub fn new<C, T, E>(id: impl Into<String>, condition: C, transition: T, footprint: AccessFootprint) -> Self
    where
        C: Fn(&SystemState) -> bool + Send + Sync + 'static,
        T: Fn(&mut SystemState) -> Result<(), E> + Send + Sync + 'static,
        E: Into<Error>,
    {
        Self {
            id: id.into(),
            condition: Arc::new(condition),
            transition: Arc::new(move |s| transition(s).map_err(Into::into)),
            footprint,
        }
    }

    /// A law whose condition is always true.
    pub fn always<T, E>(id: impl Into<String>, transition: T, footprint: AccessFootprint) -> Self
    where
        T: Fn(&mut SystemState) -> Result<(), E> + Send + Sync + 'static,
        E: Into<Error>,
    {
        Self::new(id, |_| true, transition, footprint)
    }
}

impl fmt::Debug for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Law")
            .field("id", &self.id)
            .field("footprint", &self.footprint)
            .finish_non_exhaustive()
    }
}

/// Named stopping predicate; `max_steps` in [`EngineConfig`] is always a
/// backstop.
#[derive(Clone)]
pub struct Termination {
    pub name: String,
    pub predicate: Predicate,
}

impl Termination {
    pub fn custom(name: impl Into<String>, f: impl Fn(&SystemState) -> bool + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            predicate: Arc::new(f),
        }
    }

    /// Runs until `max_steps`.
    pub fn never() -> Self {
        Self::custom("never", |_| false)
    }

    pub fn no_objects() -> Self {
        Self::custom("no-objects", |s| s.object_count() == 0)
    }
}

impl fmt::Debug for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Termination").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub delta_t: f64,
    pub max_steps: u64,
    pub seed: u64,
    pub termination: Termination,
    /// Log every RNG draw into the trace.
    pub record_draws: bool,
}

impl EngineConfig {
    pub fn new(delta_t: f64, max_steps: u64, seed: u64) -> Self {
        Self {
            delta_t,
            max_steps,
            seed,
            termination: Termination::never(),
            record_draws: false,
        }
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn recording_draws(mut self) -> Self {
        self.record_draws = true;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.delta_t.is_finite() && self.delta_t > 0.0) {
            return Err(EngineError::InvalidConfig(format!(
                "delta_t must be positive, got {}",
                self.delta_t
            )));
        }
        if self.max_steps == 0 {
            return Err(EngineError::InvalidConfig("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    /// Time after the step.
    pub t: f64,
    pub fired: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub draws: Vec<DrawRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub events: Vec<StateEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Predicate(String),
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    pub law_order: Vec<String>,
    pub steps: Vec<StepRecord>,
    pub stop: StopReason,
}

impl RunTrace {
    pub fn step_count(&self) -> u64 {
        self.steps.len() as u64
    }

    /// Header line, one line per step, then the stop reason.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        let header = serde_json::json!({ "seed": self.seed, "law_order": self.law_order });
        out.push_str(&header.to_string());
        out.push('\n');
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("step records serialize"));
            out.push('\n');
        }
        let footer = serde_json::json!({ "stop": self.stop, "steps": self.steps.len() });
        out.push_str(&footer.to_string());
        out.push('\n');
        out
    }
}

fn check_laws(laws: &[Law]) -> Result<(), EngineError> {
    if laws.is_empty() {
        return Err(EngineError::NoLaws);
    }
    let mut seen = BTreeSet::new();
    for law in laws {
        if !seen.insert(law.id.as_str()) {
            return Err(EngineError::DuplicateLaw(law.id.clone()));
        }
    }
    Ok(())
}

/// Applies every law once, in order, then advances the clock by one step.
pub fn step(state: &mut SystemState, delta_t: f64, laws: &[Law]) -> Result<StepRecord, EngineError> {
    if !(delta_t.is_finite() && delta_t > 0.0) {
        return Err(EngineError::InvalidConfig(format!("delta_t must be positive, got {delta_t}")));
    }
    let found = state.clock().delta_t();
    if found != delta_t {
        return Err(EngineError::TimestepMismatch {
            expected: delta_t,
            found,
        });
    }
    state.clear_touched();
    let mut fired = Vec::new();
    for law in laws {
        if !(law.condition)(state) {
            continue;
        }
        (law.transition)(state).map_err(|e| EngineError::Law {
            law: law.id.clone(),
            source: Box::new(e),
        })?;
        state.check_invariants().map_err(|source| EngineError::Invariant {
            law: law.id.clone(),
            source,
        })?;
        fired.push(law.id.clone());
    }
    state.clock_mut().tick();
    Ok(StepRecord {
        step: state.clock().steps(),
        t: state.t(),
        fired,
        draws: state.rng.take_log(),
        events: state.take_events(),
    })
}

/// Steps until the termination predicate holds or `max_steps` is reached.
///
/// The state's RNG is reseeded from `cfg.seed`, so the seed in the config
/// fully determines every draw of the run.
pub fn run(mut state: SystemState, cfg: &EngineConfig, laws: &[Law]) -> Result<(SystemState, RunTrace), EngineError> {
    cfg.validate()?;
    check_laws(laws)?;
    state.rng = RngState::from_seed(cfg.seed);
    if cfg.record_draws {
        state.rng.enable_log();
    }
    let mut steps = Vec::new();
    let stop = loop {
        if (cfg.termination.predicate)(&state) {
            break StopReason::Predicate(cfg.termination.name.clone());
        }
        if steps.len() as u64 >= cfg.max_steps {
            break StopReason::MaxSteps;
        }
        steps.push(step(&mut state, cfg.delta_t, laws)?);
    };
    // Events recorded while setting up the state belong to no step.
    let trace = RunTrace {
        seed: cfg.seed,
        law_order: laws.iter().map(|l| l.id.clone()).collect(),
        steps,
        stop,
    };
    Ok((state, trace))
}
