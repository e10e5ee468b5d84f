//! Shared space: what objects advertise about themselves and the claim
//! registry that serializes interactions.

use std::collections::{BTreeMap, BTreeSet};

use crate::interaction::InteractionCandidate;
use crate::physics::Physics;
use crate::state::{ObjectId, ParticleInfo, QuantumObject, SpacePoint};

/// One (particle, path) presence in a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupancy {
    pub object: ObjectId,
    pub particle: usize,
    pub path: usize,
    /// `|amplitude|²` of the path.
    pub weight: f64,
}

/// A proposed interaction, oriented so that `a` is the proposer.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub a: ObjectId,
    pub b: ObjectId,
    pub candidate: InteractionCandidate,
}

/// Occupancy adverts for the current round plus the claim registry.
#[derive(Debug, Default)]
pub struct SpaceMediator {
    occupancy: BTreeMap<SpacePoint, Vec<Occupancy>>,
    particles: BTreeMap<ObjectId, Vec<ParticleInfo>>,
    claimed: BTreeSet<ObjectId>,
}

impl SpaceMediator {
    /// Drops last round's adverts and claims.
    pub fn reset(&mut self) {
        self.occupancy.clear();
        self.particles.clear();
        self.claimed.clear();
    }

    /// Publishes the footprint and path weights of `obj`.
    pub fn advertise(&mut self, obj: &QuantumObject) {
        self.particles.insert(obj.id, obj.particles.clone());
        for (path, p) in obj.paths.iter().enumerate() {
            let weight = p.amplitude.norm_sqr();
            if weight.is_nan() || weight <= 0.0 {
                continue;
            }
            for (particle, s) in p.states.iter().enumerate() {
                for &cell in &s.spacepoints {
                    self.occupancy.entry(cell).or_default().push(Occupancy {
                        object: obj.id,
                        particle,
                        path,
                        weight,
                    });
                }
            }
        }
    }

    pub fn advertised_particle(&self, object: ObjectId, particle: usize) -> Option<&ParticleInfo> {
        self.particles.get(&object)?.get(particle)
    }

    /// Candidates of `own` against every other advertised object, with the
    /// partner object per candidate. `own`'s paths are its engine's own
    /// data; everything about partners comes from adverts.
    pub fn candidates_for(&self, own: &QuantumObject, physics: &dyn Physics) -> Vec<(ObjectId, InteractionCandidate)> {
        let mut out = Vec::new();
        for (path_a, p) in own.paths.iter().enumerate() {
            let wa = p.amplitude.norm_sqr();
            if wa.is_nan() || wa <= 0.0 {
                continue;
            }
            for (particle_a, s) in p.states.iter().enumerate() {
                for cell in &s.spacepoints {
                    let Some(entries) = self.occupancy.get(cell) else { continue };
                    for e in entries {
                        if e.object == own.id {
                            continue;
                        }
                        let Some(info_b) = self.advertised_particle(e.object, e.particle) else { continue };
                        if !physics.interacts(&own.particles[particle_a], info_b) {
                            continue;
                        }
                        out.push((
                            e.object,
                            InteractionCandidate {
                                position: *cell,
                                particle_a,
                                path_a,
                                particle_b: e.particle,
                                path_b: e.path,
                                weight: wa * e.weight,
                            },
                        ));
                    }
                }
            }
        }
        out
    }

    /// Claims both participants; fails if either is already claimed.
    pub fn try_claim(&mut self, a: ObjectId, b: ObjectId) -> bool {
        if a == b || self.claimed.contains(&a) || self.claimed.contains(&b) {
            return false;
        }
        self.claimed.insert(a);
        self.claimed.insert(b);
        true
    }

    pub fn is_claimed(&self, id: ObjectId) -> bool {
        self.claimed.contains(&id)
    }

    /// Marks a freshly spawned object as busy for the rest of the round.
    pub(crate) fn hold(&mut self, id: ObjectId) {
        self.claimed.insert(id);
    }
}
