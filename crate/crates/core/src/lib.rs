//! Causal-model simulation of quantum objects on a lattice.
//!
//! * [`state`]: space, fields and multi-path quantum objects.
//! * [`engine`]: guarded laws applied in uniform time steps.
//! * [`interaction`]: point interactions with path-set reduction.
//! * [`physics`]: per-experiment physics and the centralized law list.
//! * [`experiments`]: Bell, double slit, coupled pendulums, LHV oracle.
//! * [`wave`]: the wave equation as a cellular automaton.
//! * [`locality`]: static locality classification of declared footprints.
//! * [`refined`]: one autonomous engine per quantum object.

pub mod config;
pub mod engine;
pub mod experiments;
pub mod interaction;
pub mod locality;
pub mod physics;
pub mod refined;
pub mod rng;
pub mod state;
pub mod wave;

use thiserror::Error;

pub use config::{build_system_state, ConfigError, ExperimentConfig};
pub use engine::{run, step, EngineConfig, EngineError, Law, RunTrace, Termination};
pub use interaction::{InteractionCandidate, InteractionError, InteractionObject, OutcomeTable};
pub use locality::{classify_law, classify_model, parse_model_spec, AccessFootprint, AccessRef, LocalityClass, ModelSpec};
pub use physics::Physics;
pub use rng::{random_draw, DrawError, RngState};
pub use state::{
    Complex, ConservedQuantities, ObjectId, ObjectKind, ParticleInfo, Path, PathState, QuantumObject, Space,
    SpacePoint, StateError, SystemState,
};
pub use wave::{WaveError, WaveGrid};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Draw(#[from] DrawError),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Spec(#[from] locality::SpecError),
    #[error(transparent)]
    Experiment(#[from] experiments::ExperimentError),
    #[error(transparent)]
    Refined(#[from] refined::RefinedError),
}

impl Error {
    /// True when the error means a law broke a state invariant, as opposed
    /// to bad input.
    pub fn is_invariant_failure(&self) -> bool {
        match self {
            Error::Engine(EngineError::Invariant { .. }) => true,
            Error::Engine(EngineError::Law { source, .. }) => source.is_invariant_failure(),
            Error::Refined(e) => e.is_invariant_failure(),
            _ => false,
        }
    }
}
