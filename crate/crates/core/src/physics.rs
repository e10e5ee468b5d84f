//! Pluggable per-experiment physics and the two laws of the centralized
//! engine.
//!
//! The centralized engine applies, every step:
//!
//! 1. `qft-interaction`: for each object (by id), collect interaction
//!    candidates with every other object, draw one and run the pipeline. An
//!    object takes part in at most one interaction per step.
//! 2. `qobject-update`: every object not involved in an interaction this step
//!    evolves on its own.
//!
//! The refined runtime reuses the same [`Physics`] through per-object
//! engines, so the two agree on everything except scheduling.

use std::sync::Arc;

use crate::engine::Law;
use crate::interaction::{
    determine_potential_interactions, perform_interaction_with, InteractionCandidate, InteractionObject,
    OutcomeTable,
};
use crate::locality::{AccessFootprint, AccessRef};
use crate::rng::RngState;
use crate::state::{FieldGrid, ObjectId, ParticleInfo, QuantumObject, Space, SystemState};
use crate::Error;

/// What an object may look at while evolving: the space and the fields.
#[derive(Debug, Clone, Copy)]
pub struct Environment<'a> {
    pub space: &'a Space,
    pub fields: &'a [FieldGrid],
}

impl<'a> Environment<'a> {
    pub fn field(&self, id: &str) -> Option<&'a FieldGrid> {
        self.fields.iter().find(|f| f.id == id)
    }
}

pub trait Physics: Send + Sync {
    /// Free evolution of one object over one step. May draw from `rng`.
    fn evolve(&self, obj: &mut QuantumObject, env: &Environment<'_>, rng: &mut RngState) -> Result<(), Error>;

    /// Whether particles of these two types undergo a point interaction.
    fn interacts(&self, a: &ParticleInfo, b: &ParticleInfo) -> bool;

    /// Outcome rows for an interaction; may draw from `rng`.
    fn outcome(&self, ia: &InteractionObject, rng: &mut RngState) -> Result<OutcomeTable, Error>;

    /// Run is over.
    fn finished(&self, objects: &[&QuantumObject]) -> bool;
}

/// Candidates between `a` and `b` that `physics` lets interact.
pub fn interacting_candidates(physics: &dyn Physics, a: &QuantumObject, b: &QuantumObject) -> Vec<InteractionCandidate> {
    let mut cands = determine_potential_interactions(a, b);
    cands.retain(|c| physics.interacts(&a.particles[c.particle_a], &b.particles[c.particle_b]));
    cands
}

/// One pass of the interaction loop over all objects.
pub fn apply_interactions(physics: &dyn Physics, state: &mut SystemState) -> Result<(), Error> {
    for id in state.object_ids() {
        if state.is_touched(id) {
            continue;
        }
        let Some(a) = state.object(id) else { continue };
        let mut partners: Vec<ObjectId> = Vec::new();
        let mut cands: Vec<InteractionCandidate> = Vec::new();
        for b in state.objects() {
            if b.id == id || state.is_touched(b.id) {
                continue;
            }
            for c in interacting_candidates(physics, a, b) {
                partners.push(b.id);
                cands.push(c);
            }
        }
        if cands.is_empty() {
            continue;
        }
        let weights: Vec<f64> = cands.iter().map(|c| c.weight).collect();
        let k = state.rng.draw_weighted(&weights)?;
        perform_interaction_with(state, id, partners[k], &cands[k], |ia, rng| physics.outcome(ia, rng))?;
    }
    Ok(())
}

/// Evolves every object not touched by an interaction this step.
pub fn apply_updates(physics: &dyn Physics, state: &mut SystemState) -> Result<(), Error> {
    for id in state.object_ids() {
        if state.is_touched(id) {
            continue;
        }
        let mut obj = state.remove_object(id)?;
        let env = Environment {
            space: &state.space,
            fields: &state.fields,
        };
        physics.evolve(&mut obj, &env, &mut state.rng)?;
        state.insert_object(obj)?;
    }
    Ok(())
}

/// `[qft-interaction, qobject-update]` for `physics`.
pub fn centralized_laws(physics: Arc<dyn Physics>) -> Vec<Law> {
    let p1 = physics.clone();
    let interaction = Law::always(
        "qft-interaction",
        move |s: &mut SystemState| apply_interactions(p1.as_ref(), s),
        AccessFootprint::new(
            [AccessRef::WholeObjectSet, AccessRef::all_paths("qa"), AccessRef::all_paths("qb")],
            [AccessRef::WholeObjectSet],
        ),
    );
    let update = Law::always(
        "qobject-update",
        move |s: &mut SystemState| apply_updates(physics.as_ref(), s),
        AccessFootprint::new([AccessRef::WholeObjectSet], [AccessRef::WholeObjectSet]),
    );
    vec![interaction, update]
}

/// Object snapshot passed to [`Physics::finished`].
pub fn object_refs(state: &SystemState) -> Vec<&QuantumObject> {
    state.objects().collect()
}
