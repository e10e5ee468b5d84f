//! Seeded Monte Carlo experiment drivers and their estimators.
//!
//! Every trial builds a fresh [`World`] and runs it under either the
//! centralized engine or the refined runtime. Trial `i` uses the seed
//! `derive_seed(seed, i)`, so results do not depend on whether trials run in
//! parallel.

mod bell;
mod double_slit;
mod lhv;
mod pendulum;
mod stats;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, EngineConfig, Law, Termination};
use crate::physics::{centralized_laws, Physics};
use crate::refined::{run_refined, RefinedConfig, Scheduler};
use crate::rng::derive_seed;
use crate::state::{FieldGrid, QuantumObject, Space, SystemState};
use crate::Error;

pub use bell::{
    bell_world, extract_outcomes, run_bell_experiment, run_bell_scan, run_single_sg, run_unentangled_pair,
    spin_probability, BellConfig, BellPhysics, BellScan, Emitters, SingleSgResult, SpindirPolicy,
    UnentangledConfig, SG_AXIS_FIELD, SG_PRESENT_FIELD,
};
pub use double_slit::{
    hit_cell, run_double_slit, slit_world, visibility, DoubleSlitConfig, DoubleSlitPhysics, ScreenHistogram, SlitGeometry,
};
pub use lhv::{evaluate_bell, lhv_oracle, model_correlation, BellForm, LhvReport, Strategy};
pub use pendulum::{run_pendulum, PendulumConfig, PendulumMode, PendulumResult, PendulumSample};
pub use stats::{total_variation, JointStats};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("trial {trial} ended without the expected detector hits")]
    MissingOutcome { trial: u64 },
    #[error("step size {delta_t} is unstable: omega * dt = {product} >= 2")]
    UnstableStep { delta_t: f64, product: f64 },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Initial contents of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub space: Space,
    pub fields: Vec<FieldGrid>,
    pub objects: Vec<QuantumObject>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "runtime", content = "scheduler")]
pub enum Runtime {
    #[default]
    Centralized,
    Refined(Scheduler),
}

/// A physics plus its centralized law list, reused across trials.
#[derive(Clone)]
pub struct Simulator {
    physics: Arc<dyn Physics>,
    laws: Vec<Law>,
    termination: Termination,
    max_steps: u64,
}

impl Simulator {
    pub fn new(physics: Arc<dyn Physics>, max_steps: u64) -> Self {
        let p = physics.clone();
        let termination = Termination::custom("finished", move |s: &SystemState| {
            p.finished(&s.objects().collect::<Vec<_>>())
        });
        Self {
            laws: centralized_laws(physics.clone()),
            physics,
            termination,
            max_steps,
        }
    }

    pub fn physics(&self) -> &Arc<dyn Physics> {
        &self.physics
    }

    /// Runs one trial and returns the final objects.
    pub fn run_trial(&self, world: World, seed: u64, runtime: Runtime) -> Result<Vec<QuantumObject>, Error> {
        match runtime {
            Runtime::Centralized => {
                let mut state = SystemState::new(world.space, 1.0, seed)?;
                for f in world.fields {
                    state.add_field(f)?;
                }
                for o in world.objects {
                    state.insert_object(o)?;
                }
                let cfg = EngineConfig::new(1.0, self.max_steps, seed).with_termination(self.termination.clone());
                let (state, _) = engine::run(state, &cfg, &self.laws)?;
                Ok(state.objects().cloned().collect())
            }
            Runtime::Refined(scheduler) => {
                let cfg = RefinedConfig {
                    seed,
                    scheduler,
                    max_rounds: self.max_steps,
                };
                let run = run_refined(world, self.physics.clone(), &cfg)?;
                Ok(run.objects)
            }
        }
    }
}

/// Maps `f` over trials `0..trials` with per-trial seeds, in parallel,
/// keeping trial order in the output.
pub fn map_trials<T, F>(trials: u64, seed: u64, f: F) -> Result<Vec<T>, Error>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T, Error> + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .map(|i| f(i, derive_seed(seed, i)))
        .collect()
}
