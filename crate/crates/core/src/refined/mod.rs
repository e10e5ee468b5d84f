//! Object-local runtime: every quantum object runs its own engine.
//!
//! There is no global time step and no shared mutable state except the
//! [`SpaceMediator`]. A round of the scheduler does, per engine:
//!
//! 1. apply pending flags left by an interaction (dropped particles,
//!    collapse onto one path) and retire if no particle is left;
//! 2. advertise footprint and path weights in the shared space;
//! 3. propose one interaction against the adverts of others, drawn with the
//!    engine's own RNG;
//! 4. the mediator grants proposals whose two participants are both still
//!    unclaimed, and the pipeline spawns a new engine for the result;
//! 5. engines not claimed this round evolve freely.
//!
//! An interaction never edits the partner's paths directly; it only sets the
//! partner's flags, which the partner applies on its own next step.

mod mediator;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::experiments::World;
use crate::interaction::{create_interaction_object, in_sums, process_interaction_object};
use crate::physics::{Environment, Physics};
use crate::rng::{derive_seed, RngState};
use crate::state::{ConservedQuantities, FieldGrid, ObjectId, QuantumObject, Space, SpacePoint, StateError};
use crate::Error;

pub use mediator::{Occupancy, Proposal, SpaceMediator};

#[derive(Debug, thiserror::Error)]
pub enum RefinedError {
    #[error("object {0} already has an engine")]
    DuplicateEngine(ObjectId),
    #[error("interaction at round {round} unbalanced: before {before:?}, after {after:?}")]
    Unbalanced {
        round: u64,
        before: Box<ConservedQuantities>,
        after: Box<ConservedQuantities>,
    },
    #[error("object {object} broke an invariant in round {round}: {source}")]
    Invariant {
        object: ObjectId,
        round: u64,
        source: StateError,
    },
    #[error("engine of object {object}: {source}")]
    Engine { object: ObjectId, source: Box<Error> },
}

impl RefinedError {
    pub fn is_invariant_failure(&self) -> bool {
        match self {
            RefinedError::Unbalanced { .. } | RefinedError::Invariant { .. } => true,
            RefinedError::Engine { source, .. } => source.is_invariant_failure(),
            RefinedError::DuplicateEngine(_) => false,
        }
    }
}

fn engine_err(object: ObjectId) -> impl Fn(Error) -> RefinedError {
    move |e| RefinedError::Engine {
        object,
        source: Box::new(e),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheduler {
    /// Proposals granted in ascending proposer id.
    #[default]
    RoundRobin,
    /// Proposals granted in a seeded random order.
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinedConfig {
    pub seed: u64,
    #[serde(default)]
    pub scheduler: Scheduler,
    pub max_rounds: u64,
}

/// Autonomous engine of one quantum object.
#[derive(Debug, Clone)]
pub struct ObjectEngine {
    object: QuantumObject,
    rng: RngState,
    /// Own steps taken (proper time in update cycles).
    proper_time: u64,
}

impl ObjectEngine {
    pub fn id(&self) -> ObjectId {
        self.object.id
    }

    pub fn object(&self) -> &QuantumObject {
        &self.object
    }

    pub fn proper_time(&self) -> u64 {
        self.proper_time
    }

    pub fn rng(&self) -> &RngState {
        &self.rng
    }

    /// Applies flags set by a past interaction. Returns `false` when the
    /// object has no particle left and the engine should retire.
    fn apply_flags(&mut self) -> Result<bool, StateError> {
        let flags = std::mem::take(&mut self.object.globals.flags);
        if let Some(path) = flags.collapse_to {
            let conserved = self.object.conserved;
            let globals = self.object.globals.clone();
            self.object = self.object.reduce_to_path(path)?;
            self.object.conserved = conserved;
            self.object.globals = globals;
        }
        if flags.dropped_particles.len() >= self.object.particle_count() {
            return Ok(false);
        }
        // Highest column first so the remaining indices stay valid.
        for &k in flags.dropped_particles.iter().rev() {
            self.object.remove_particle(k)?;
        }
        Ok(true)
    }
}

/// Engine with an RNG substream derived from `(seed, object id)`.
pub fn spawn_object_engine(obj: QuantumObject, seed: u64) -> ObjectEngine {
    ObjectEngine {
        rng: RngState::from_seed(derive_seed(seed, obj.id.0)),
        object: obj,
        proper_time: 0,
    }
}

/// Conservation record of one interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub round: u64,
    pub a: ObjectId,
    pub b: ObjectId,
    pub position: SpacePoint,
    pub interaction: ObjectId,
    pub result: ObjectId,
    pub before: ConservedQuantities,
    pub after: ConservedQuantities,
}

impl LedgerEntry {
    pub fn balanced(&self) -> bool {
        self.before == self.after
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessKind {
    /// An engine read or wrote the paths of the object it owns.
    OwnPaths,
    /// An engine read another object's advert.
    Advert,
    /// The interaction pipeline read a participant's selected path.
    Pipeline,
    /// The pipeline set a participant's flags.
    Flags,
}

/// Who touched which object's data, for the isolation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRecord {
    pub round: u64,
    pub actor: ObjectId,
    pub target: ObjectId,
    pub kind: AccessKind,
}

#[derive(Debug, Clone)]
pub struct RefinedRun {
    pub objects: Vec<QuantumObject>,
    pub ledger: Vec<LedgerEntry>,
    pub access_log: Vec<AccessRecord>,
    pub rounds: u64,
    /// Engines created over the run, initial ones included.
    pub engines_spawned: u64,
}

impl RefinedRun {
    pub fn ledger_balanced(&self) -> bool {
        self.ledger.iter().all(LedgerEntry::balanced)
    }

    pub fn ledger_json_lines(&self) -> String {
        self.ledger
            .iter()
            .map(|e| serde_json::to_string(e).expect("ledger entries serialize") + "\n")
            .collect()
    }
}

struct Runtime<'a> {
    physics: &'a dyn Physics,
    space: Space,
    fields: Vec<FieldGrid>,
    seed: u64,
    engines: BTreeMap<ObjectId, ObjectEngine>,
    mediator: SpaceMediator,
    next_id: u64,
    ledger: Vec<LedgerEntry>,
    access_log: Vec<AccessRecord>,
    spawned: u64,
    round: u64,
}

impl Runtime<'_> {
    fn log(&mut self, actor: ObjectId, target: ObjectId, kind: AccessKind) {
        self.access_log.push(AccessRecord {
            round: self.round,
            actor,
            target,
            kind,
        });
    }

    fn spawn(&mut self, obj: QuantumObject) -> Result<(), RefinedError> {
        let id = obj.id;
        if self.engines.contains_key(&id) {
            return Err(RefinedError::DuplicateEngine(id));
        }
        self.next_id = self.next_id.max(id.0 + 1);
        self.engines.insert(id, spawn_object_engine(obj, self.seed));
        self.spawned += 1;
        Ok(())
    }

    fn allocate(&mut self) -> ObjectId {
        let id = ObjectId(self.next_id);
        self.next_id += 1;
        id
    }

    fn finished(&self) -> bool {
        let objects: Vec<&QuantumObject> = self.engines.values().map(|e| &e.object).collect();
        self.physics.finished(&objects)
    }

    fn apply_flags(&mut self) -> Result<(), RefinedError> {
        let ids: Vec<ObjectId> = self.engines.keys().copied().collect();
        for id in ids {
            let engine = self.engines.get_mut(&id).expect("listed");
            let flags = &engine.object.globals.flags;
            if flags.dropped_particles.is_empty() && flags.collapse_to.is_none() {
                continue;
            }
            let round = self.round;
            let alive = engine
                .apply_flags()
                .map_err(|source| RefinedError::Invariant { object: id, round, source })?;
            self.log(id, id, AccessKind::OwnPaths);
            if !alive {
                self.engines.remove(&id);
            }
        }
        Ok(())
    }

    fn propose(&mut self) -> Result<Vec<Proposal>, RefinedError> {
        let mut proposals = Vec::new();
        let ids: Vec<ObjectId> = self.engines.keys().copied().collect();
        for id in ids {
            let engine = self.engines.get(&id).expect("listed");
            let cands = self.mediator.candidates_for(&engine.object, self.physics);
            let mut partners: Vec<ObjectId> = cands.iter().map(|(b, _)| *b).collect();
            partners.dedup();
            for b in partners {
                self.log(id, b, AccessKind::Advert);
            }
            if cands.is_empty() {
                continue;
            }
            let weights: Vec<f64> = cands.iter().map(|(_, c)| c.weight).collect();
            let engine = self.engines.get_mut(&id).expect("listed");
            let k = engine.rng.draw_weighted(&weights).map_err(|e| engine_err(id)(e.into()))?;
            let (b, candidate) = cands[k].clone();
            proposals.push(Proposal { a: id, b, candidate });
        }
        Ok(proposals)
    }

    /// Runs the interaction pipeline for a granted proposal.
    fn claim_and_interact(&mut self, p: &Proposal) -> Result<(), RefinedError> {
        let (a, b, cand) = (p.a, p.b, &p.candidate);
        let err = engine_err(a);
        self.log(a, a, AccessKind::Pipeline);
        self.log(a, b, AccessKind::Pipeline);
        let ia_id = self.allocate();
        let result_id = self.allocate();
        let obj_a = &self.engines[&a].object;
        let obj_b = &self.engines[&b].object;
        let before = in_sums(obj_a, obj_b, cand).map_err(|e| err(e.into()))?;
        let ia = create_interaction_object(obj_a, obj_b, cand, ia_id).map_err(|e| err(e.into()))?;
        let engine_a = self.engines.get_mut(&a).expect("granted");
        let table = self.physics.outcome(&ia, &mut engine_a.rng).map_err(&err)?;
        let result = process_interaction_object(&ia, &table, &self.space, result_id).map_err(|e| err(e.into()))?;

        for (id, particle, path) in [(a, cand.particle_a, cand.path_a), (b, cand.particle_b, cand.path_b)] {
            let flags = &mut self.engines.get_mut(&id).expect("granted").object.globals.flags;
            flags.dropped_particles.insert(particle);
            if self.engines[&id].object.path_count() > 1 {
                self.engines.get_mut(&id).expect("granted").object.globals.flags.collapse_to = Some(path);
            }
            self.log(a, id, AccessKind::Flags);
        }

        let entry = LedgerEntry {
            round: self.round,
            a,
            b,
            position: cand.position,
            interaction: ia_id,
            result: result_id,
            before,
            after: result.conserved,
        };
        if !entry.balanced() {
            return Err(RefinedError::Unbalanced {
                round: self.round,
                before: Box::new(entry.before),
                after: Box::new(entry.after),
            });
        }
        self.ledger.push(entry);
        self.spawn(result)?;
        self.mediator.hold(result_id);
        Ok(())
    }

    fn grant(&mut self, mut proposals: Vec<Proposal>, scheduler: Scheduler, rng: &mut RngState) -> Result<(), RefinedError> {
        match scheduler {
            // Proposals are already in ascending proposer id.
            Scheduler::RoundRobin => {}
            Scheduler::Randomized => {
                for i in (1..proposals.len()).rev() {
                    let j = rng
                        .draw_weighted(&vec![1.0; i + 1])
                        .map_err(|e| engine_err(ObjectId(0))(e.into()))?;
                    proposals.swap(i, j);
                }
            }
        }
        for p in &proposals {
            if self.engines.contains_key(&p.b) && self.mediator.try_claim(p.a, p.b) {
                self.claim_and_interact(p)?;
            }
        }
        Ok(())
    }

    fn evolve_unclaimed(&mut self) -> Result<(), RefinedError> {
        let env = Environment {
            space: &self.space,
            fields: &self.fields,
        };
        let mut touched = Vec::new();
        for (&id, engine) in self.engines.iter_mut() {
            if self.mediator.is_claimed(id) {
                continue;
            }
            self.physics
                .evolve(&mut engine.object, &env, &mut engine.rng)
                .map_err(engine_err(id))?;
            engine.proper_time += 1;
            engine
                .object
                .validate_in(&self.space)
                .map_err(|source| RefinedError::Invariant {
                    object: id,
                    round: self.round,
                    source,
                })?;
            touched.push(id);
        }
        for id in touched {
            self.log(id, id, AccessKind::OwnPaths);
        }
        Ok(())
    }
}

/// Runs `world` with one engine per object until `physics` reports the run
/// finished or `max_rounds` rounds have passed.
pub fn run_refined(world: World, physics: Arc<dyn Physics>, cfg: &RefinedConfig) -> Result<RefinedRun, RefinedError> {
    let mut rt = Runtime {
        physics: physics.as_ref(),
        space: world.space,
        fields: world.fields,
        seed: cfg.seed,
        engines: BTreeMap::new(),
        mediator: SpaceMediator::default(),
        next_id: 1,
        ledger: Vec::new(),
        access_log: Vec::new(),
        spawned: 0,
        round: 0,
    };
    for obj in world.objects {
        obj.validate_in(&rt.space).map_err(|source| RefinedError::Invariant {
            object: obj.id,
            round: 0,
            source,
        })?;
        rt.spawn(obj)?;
    }
    // Object ids start at 1, so stream 0 is free for the scheduler.
    let mut scheduler_rng = RngState::substream(cfg.seed, 0);
    while rt.round < cfg.max_rounds {
        rt.apply_flags()?;
        if rt.finished() {
            break;
        }
        rt.round += 1;
        rt.mediator.reset();
        let ids: Vec<ObjectId> = rt.engines.keys().copied().collect();
        for id in ids {
            rt.mediator.advertise(&rt.engines[&id].object);
        }
        let proposals = rt.propose()?;
        rt.grant(proposals, cfg.scheduler, &mut scheduler_rng)?;
        rt.evolve_unclaimed()?;
    }
    if rt.round >= cfg.max_rounds {
        rt.apply_flags()?;
    }
    Ok(RefinedRun {
        objects: rt.engines.into_values().map(|e| e.object).collect(),
        ledger: rt.ledger,
        access_log: rt.access_log,
        rounds: rt.round,
        engines_spawned: rt.spawned,
    })
}
