//! Point-like interactions between quantum objects.
//!
//! Two objects can interact at a cell where a path of one and a path of the
//! other both have support. Exactly one such candidate is drawn with weight
//! `|amp_a · amp_b|²`; the two selected particles are destroyed, every other
//! path of their objects is discarded, and a new particle collection is
//! produced from a table of outcome rows.

use serde::{Deserialize, Serialize};

use crate::rng::{DrawError, RngState};
use crate::state::{
    Complex, ConservedQuantities, GlobalAttributes, ObjectId, ObjectKind, ParticleInfo, Path, PathState,
    QuantumObject, Space, SpacePoint, StateError, StateEvent, SystemState, Vec3, NORM_TOLERANCE,
};
use crate::Error;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InteractionError {
    #[error("no interaction candidates")]
    NoCandidates,
    #[error("an object cannot interact with itself ({0})")]
    SameObject(ObjectId),
    #[error("position {0} is not in the support of both selected paths")]
    NotInOverlap(SpacePoint),
    #[error("outcome table has no rows")]
    EmptyOutcomeTable,
    #[error("outcome row {row} has {found} particle states, expected {expected}")]
    OutcomeArity { row: usize, expected: usize, found: usize },
    #[error("outcome row {row} particle {particle} has no cells")]
    OutcomeEmptySupport { row: usize, particle: usize },
    #[error("outcome amplitudes are all zero or non-finite")]
    OutcomeDegenerate,
    #[error("outcome row {row} particle {particle} leaves the space from {position}")]
    OutcomeOutOfBounds {
        row: usize,
        particle: usize,
        position: SpacePoint,
    },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Draw(#[from] DrawError),
}

/// A cell where one particle of `a` (on one path) meets one particle of `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionCandidate {
    pub position: SpacePoint,
    pub particle_a: usize,
    pub path_a: usize,
    pub particle_b: usize,
    pub path_b: usize,
    /// `|amp_a · amp_b|²`, always positive.
    pub weight: f64,
}

/// Every (path of `a`, path of `b`, particle pair, shared cell) with
/// non-zero joint weight, in path-major order.
pub fn determine_potential_interactions(a: &QuantumObject, b: &QuantumObject) -> Vec<InteractionCandidate> {
    let mut out = Vec::new();
    if a.id == b.id {
        return out;
    }
    for (path_a, pa) in a.paths.iter().enumerate() {
        for (path_b, pb) in b.paths.iter().enumerate() {
            let weight = (pa.amplitude * pb.amplitude).norm_sqr();
            if weight.is_nan() || weight <= 0.0 {
                continue;
            }
            for (particle_a, sa) in pa.states.iter().enumerate() {
                for (particle_b, sb) in pb.states.iter().enumerate() {
                    for &position in sa.spacepoints.intersection(&sb.spacepoints) {
                        out.push(InteractionCandidate {
                            position,
                            particle_a,
                            path_a,
                            particle_b,
                            path_b,
                            weight,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Index of one candidate drawn with probability `weight / Σ weight`.
pub fn select_interaction_index(candidates: &[InteractionCandidate], rng: &mut RngState) -> Result<usize, InteractionError> {
    if candidates.is_empty() {
        return Err(InteractionError::NoCandidates);
    }
    let weights: Vec<f64> = candidates.iter().map(|c| c.weight).collect();
    Ok(rng.draw_weighted(&weights)?)
}

pub fn select_interaction<'a>(
    candidates: &'a [InteractionCandidate],
    rng: &mut RngState,
) -> Result<&'a InteractionCandidate, InteractionError> {
    Ok(&candidates[select_interaction_index(candidates, rng)?])
}

/// State of one particle in an outcome row, placed relative to the
/// interaction position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeState {
    /// Cell offsets from the interaction position making up the support.
    pub offsets: Vec<Vec<i64>>,
    #[serde(default)]
    pub momentum: Vec3,
    #[serde(default)]
    pub angular_momentum: Vec3,
    #[serde(default)]
    pub spindir: f64,
}

impl OutcomeState {
    pub fn at(offset: &[i64]) -> Self {
        Self {
            offsets: vec![offset.to_vec()],
            momentum: [0.0; 3],
            angular_momentum: [0.0; 3],
            spindir: 0.0,
        }
    }

    pub fn with_momentum(mut self, momentum: Vec3) -> Self {
        self.momentum = momentum;
        self
    }

    pub fn with_spindir(mut self, degrees: f64) -> Self {
        self.spindir = degrees;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub amplitude: Complex,
    pub states: Vec<OutcomeState>,
}

/// Alternative out-states of one interaction type. Normalized on
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeTable {
    particles: Vec<ParticleInfo>,
    rows: Vec<OutcomeRow>,
}

impl OutcomeTable {
    pub fn new(particles: Vec<ParticleInfo>, mut rows: Vec<OutcomeRow>) -> Result<Self, InteractionError> {
        if rows.is_empty() {
            return Err(InteractionError::EmptyOutcomeTable);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.states.len() != particles.len() {
                return Err(InteractionError::OutcomeArity {
                    row,
                    expected: particles.len(),
                    found: r.states.len(),
                });
            }
            if let Some(particle) = r.states.iter().position(|s| s.offsets.is_empty()) {
                return Err(InteractionError::OutcomeEmptySupport { row, particle });
            }
        }
        let norm: f64 = rows.iter().map(|r| r.amplitude.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(InteractionError::OutcomeDegenerate);
        }
        if (norm * norm - 1.0).abs() > NORM_TOLERANCE {
            for r in &mut rows {
                r.amplitude /= norm;
            }
        }
        Ok(Self { particles, rows })
    }

    /// One row with amplitude 1.
    pub fn single(particles: Vec<ParticleInfo>, states: Vec<OutcomeState>) -> Result<Self, InteractionError> {
        Self::new(
            particles,
            vec![OutcomeRow {
                amplitude: Complex::new(1.0, 0.0),
                states,
            }],
        )
    }

    pub fn particles(&self) -> &[ParticleInfo] {
        &self.particles
    }

    pub fn rows(&self) -> &[OutcomeRow] {
        &self.rows
    }
}

#[derive(Deserialize)]
struct RawOutcomeTable {
    particles: Vec<ParticleInfo>,
    rows: Vec<OutcomeRow>,
}

impl<'de> Deserialize<'de> for OutcomeTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawOutcomeTable::deserialize(d)?;
        OutcomeTable::new(raw.particles, raw.rows).map_err(serde::de::Error::custom)
    }
}

/// Which objects, particles and paths met, and where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub a: ObjectId,
    pub b: ObjectId,
    pub particle_a: usize,
    pub particle_b: usize,
    pub path_a: usize,
    pub path_b: usize,
    pub position: SpacePoint,
}

/// The transient object merging the two selected particle states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionObject {
    pub object: QuantumObject,
    pub provenance: Provenance,
}

impl InteractionObject {
    pub fn position(&self) -> SpacePoint {
        self.provenance.position
    }

    /// The two merged particle states, `a` first.
    pub fn states(&self) -> &[PathState] {
        &self.object.paths[0].states
    }

    pub fn particles(&self) -> &[ParticleInfo] {
        &self.object.particles
    }
}

/// Energy (rest energy = mass), momentum and angular momentum carried by one
/// particle on one path.
pub fn contribution(info: &ParticleInfo, state: &PathState) -> ConservedQuantities {
    ConservedQuantities {
        energy: info.mass,
        momentum: state.momentum,
        angular_momentum: state.angular_momentum,
    }
}

fn selected(obj: &QuantumObject, path: usize, particle: usize) -> Result<(&ParticleInfo, &PathState), StateError> {
    let p = obj.paths.get(path).ok_or(StateError::PathIndex {
        index: path,
        len: obj.paths.len(),
    })?;
    let state = p.states.get(particle).ok_or(StateError::ParticleIndex {
        index: particle,
        len: p.states.len(),
    })?;
    Ok((&obj.particles[particle], state))
}

/// Sum of the selected particles' contributions, `a` first.
pub fn in_sums(a: &QuantumObject, b: &QuantumObject, cand: &InteractionCandidate) -> Result<ConservedQuantities, StateError> {
    let (ia, sa) = selected(a, cand.path_a, cand.particle_a)?;
    let (ib, sb) = selected(b, cand.path_b, cand.particle_b)?;
    Ok(contribution(ia, sa) + contribution(ib, sb))
}

pub fn create_interaction_object(
    a: &QuantumObject,
    b: &QuantumObject,
    cand: &InteractionCandidate,
    id: ObjectId,
) -> Result<InteractionObject, InteractionError> {
    if a.id == b.id {
        return Err(InteractionError::SameObject(a.id));
    }
    let (info_a, state_a) = selected(a, cand.path_a, cand.particle_a)?;
    let (info_b, state_b) = selected(b, cand.path_b, cand.particle_b)?;
    let x = cand.position;
    if !state_a.spacepoints.contains(&x) || !state_b.spacepoints.contains(&x) {
        return Err(InteractionError::NotInOverlap(x));
    }
    let conserved = contribution(info_a, state_a) + contribution(info_b, state_b);
    let localize = |s: &PathState| PathState {
        spacepoints: [x].into(),
        ..s.clone()
    };
    let object = QuantumObject {
        id,
        kind: ObjectKind::InteractionObject,
        particles: vec![info_a.clone(), info_b.clone()],
        paths: vec![Path::new(Complex::new(1.0, 0.0), vec![localize(state_a), localize(state_b)])],
        globals: GlobalAttributes {
            position: x.0.map(|c| c as f64),
            momentum: conserved.momentum,
            flags: Default::default(),
        },
        conserved,
    };
    Ok(InteractionObject {
        object,
        provenance: Provenance {
            a: a.id,
            b: b.id,
            particle_a: cand.particle_a,
            particle_b: cand.particle_b,
            path_a: cand.path_a,
            path_b: cand.path_b,
            position: x,
        },
    })
}

/// Destroys particle column `particle` of object `id`; the object itself is
/// removed once it holds no particle.
pub fn drop_particle(state: &mut SystemState, id: ObjectId, particle: usize) -> Result<(), StateError> {
    let obj = state.object_mut(id).ok_or(StateError::UnknownObject(id))?;
    if obj.particle_count() == 1 && particle == 0 {
        state.remove_object(id)?;
        state.record(StateEvent::DroppedParticle { object: id, particle });
        state.record(StateEvent::Removed { object: id });
        return Ok(());
    }
    obj.remove_particle(particle)?;
    state.record(StateEvent::DroppedParticle { object: id, particle });
    Ok(())
}

/// Keeps only path `path` of object `id`.
pub fn eliminate_unaffected_paths(state: &mut SystemState, id: ObjectId, path: usize) -> Result<(), StateError> {
    let obj = state.object(id).ok_or(StateError::UnknownObject(id))?;
    let reduced = obj.reduce_to_path(path)?;
    let changed = obj.path_count() > 1;
    *state.object_mut(id).expect("checked above") = reduced;
    if changed {
        state.record(StateEvent::Reduced { object: id, path });
    }
    Ok(())
}

/// Turns the outcome rows into the paths of one particle collection placed
/// at the interaction position.
pub fn process_interaction_object(
    ia: &InteractionObject,
    table: &OutcomeTable,
    space: &Space,
    id: ObjectId,
) -> Result<QuantumObject, InteractionError> {
    let x = ia.position();
    let mut paths = Vec::with_capacity(table.rows.len());
    for (row, r) in table.rows.iter().enumerate() {
        let mut states = Vec::with_capacity(r.states.len());
        for (particle, s) in r.states.iter().enumerate() {
            let cells = s
                .offsets
                .iter()
                .map(|o| {
                    space.offset(x, o).ok_or(InteractionError::OutcomeOutOfBounds {
                        row,
                        particle,
                        position: x,
                    })
                })
                .collect::<Result<_, _>>()?;
            states.push(PathState {
                spacepoints: cells,
                momentum: s.momentum,
                angular_momentum: s.angular_momentum,
                spindir: 0.0,
            }
            .with_spindir(s.spindir));
        }
        paths.push(Path::new(r.amplitude, states));
    }
    let mut out = QuantumObject::collection(id, table.particles.clone(), paths)?;
    out.conserved = ia.object.conserved;
    out.globals.position = ia.object.globals.position;
    out.globals.momentum = ia.object.conserved.momentum;
    Ok(out)
}

/// What a performed interaction produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Performed {
    pub interaction: InteractionObject,
    pub result: ObjectId,
}

/// Runs the whole pipeline with an outcome table chosen from the interaction
/// object (the closure may draw from the RNG).
pub fn perform_interaction_with<F>(
    state: &mut SystemState,
    a: ObjectId,
    b: ObjectId,
    cand: &InteractionCandidate,
    outcome: F,
) -> Result<Performed, Error>
where
    F: FnOnce(&InteractionObject, &mut RngState) -> Result<OutcomeTable, Error>,
{
    let ia_id = state.allocate_id();
    let obj_a = state.object(a).ok_or(StateError::UnknownObject(a))?;
    let obj_b = state.object(b).ok_or(StateError::UnknownObject(b))?;
    let ia = create_interaction_object(obj_a, obj_b, cand, ia_id)?;
    let table = outcome(&ia, &mut state.rng)?;

    drop_particle(state, a, cand.particle_a)?;
    drop_particle(state, b, cand.particle_b)?;
    for (id, path) in [(a, cand.path_a), (b, cand.path_b)] {
        if state.object(id).is_some() {
            eliminate_unaffected_paths(state, id, path)?;
        }
    }

    let result_id = state.allocate_id();
    let result = process_interaction_object(&ia, &table, &state.space, result_id)?;
    state.insert_object(result)?;
    state.record(StateEvent::Created { object: result_id });
    state.record(StateEvent::Interaction {
        a,
        b,
        position: cand.position,
        result: result_id,
    });
    for id in [a, b, result_id] {
        state.mark_touched(id);
    }
    Ok(Performed {
        interaction: ia,
        result: result_id,
    })
}

pub fn perform_interaction(
    state: &mut SystemState,
    a: ObjectId,
    b: ObjectId,
    cand: &InteractionCandidate,
    table: &OutcomeTable,
) -> Result<Performed, Error> {
    perform_interaction_with(state, a, b, cand, |_, _| Ok(table.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    fn particle(id: u64, tag: &str, paths: Vec<(f64, Vec<usize>)>) -> QuantumObject {
        QuantumObject::particle(
            ObjectId(id),
            ParticleInfo::new(tag, 1.0),
            paths
                .into_iter()
                .map(|(a, cells)| (c(a), PathState::at(cells.into_iter().map(SpacePoint::x))))
                .collect(),
        )
        .unwrap()
    }

    fn cand(x: usize) -> InteractionCandidate {
        InteractionCandidate {
            position: SpacePoint::x(x),
            particle_a: 0,
            path_a: 0,
            particle_b: 0,
            path_b: 0,
            weight: 1.0,
        }
    }

    #[test]
    fn disjoint_supports_have_no_candidates() {
        let a = particle(1, "e", vec![(1.0, vec![1, 2])]);
        let b = particle(2, "e", vec![(1.0, vec![5])]);
        assert!(determine_potential_interactions(&a, &b).is_empty());
    }

    #[test]
    fn single_overlap() {
        let a = particle(1, "e", vec![(1.0, vec![1, 2])]);
        let b = particle(2, "e", vec![(1.0, vec![2, 3])]);
        let cands = determine_potential_interactions(&a, &b);
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].position, SpacePoint::x(2));
    }

    #[test]
    fn two_paths_against_extended_path() {
        let a = particle(1, "e", vec![(1.0, vec![3]), (1.0, vec![9])]);
        let b = particle(2, "s", vec![(1.0, (3..=9).collect())]);
        let cands = determine_potential_interactions(&a, &b);
        // Brute force: every cell of every path of a that is also in b.
        let mut expected = Vec::new();
        for (pi, p) in a.paths.iter().enumerate() {
            for cell in &p.states[0].spacepoints {
                if b.paths[0].states[0].spacepoints.contains(cell) {
                    expected.push((pi, *cell));
                }
            }
        }
        let got: Vec<_> = cands.iter().map(|c| (c.path_a, c.position)).collect();
        assert_eq!(got, expected);
        assert_eq!(got.len(), 2);
        for c in &cands {
            assert!((c.weight - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn selection_frequencies_follow_weights() {
        for (amps, expected) in [([FRAC_1_SQRT_2, FRAC_1_SQRT_2], [0.5, 0.5]), ([0.6, 0.8], [0.36, 0.64])] {
            let a = particle(1, "e", vec![(amps[0], vec![3]), (amps[1], vec![9])]);
            let b = particle(2, "s", vec![(1.0, (0..12).collect())]);
            let cands = determine_potential_interactions(&a, &b);
            let mut rng = RngState::from_seed(11);
            let n = 100_000;
            let mut first = 0;
            for _ in 0..n {
                if select_interaction_index(&cands, &mut rng).unwrap() == 0 {
                    first += 1;
                }
            }
            let f = first as f64 / n as f64;
            assert!((f - expected[0]).abs() < 0.01, "{f} vs {expected:?}");
        }
    }

    #[test]
    fn single_candidate_always_selected() {
        let mut rng = RngState::from_seed(0);
        let cands = vec![cand(4)];
        for _ in 0..100 {
            assert_eq!(select_interaction(&cands, &mut rng).unwrap().position, SpacePoint::x(4));
        }
        assert_eq!(select_interaction(&[], &mut rng).unwrap_err(), InteractionError::NoCandidates);
    }

    fn moving(id: u64, x: usize, p: Vec3) -> QuantumObject {
        QuantumObject::particle(
            ObjectId(id),
            ParticleInfo::new("e", 1.0),
            vec![(c(1.0), PathState::at([SpacePoint::x(x)]).with_momentum(p))],
        )
        .unwrap()
    }

    #[test]
    fn conserved_sums() {
        let a = moving(1, 3, [2.0, 0.0, 0.0]);
        let b = moving(2, 3, [-2.0, 0.0, 0.0]);
        let ia = create_interaction_object(&a, &b, &cand(3), ObjectId(9)).unwrap();
        assert_eq!(ia.object.conserved.momentum, [0.0; 3]);
        assert_eq!(ia.object.conserved.energy, 2.0);
        assert_eq!(ia.object.kind, ObjectKind::InteractionObject);

        let a = moving(1, 3, [1.0, 0.0, 0.0]);
        let b = moving(2, 3, [0.0, 1.0, 0.0]);
        let ia = create_interaction_object(&a, &b, &cand(3), ObjectId(9)).unwrap();
        assert_eq!(ia.object.conserved.momentum, [1.0, 1.0, 0.0]);
        assert_eq!(ia.provenance.a, ObjectId(1));
        assert_eq!(ia.provenance.position, SpacePoint::x(3));

        assert_eq!(
            create_interaction_object(&a, &b, &cand(4), ObjectId(9)).unwrap_err(),
            InteractionError::NotInOverlap(SpacePoint::x(4))
        );
    }

    fn world(objects: Vec<QuantumObject>) -> SystemState {
        let mut s = SystemState::new(Space::new(&[16], 1.0).unwrap(), 1.0, 0).unwrap();
        for o in objects {
            s.insert_object(o).unwrap();
        }
        s
    }

    #[test]
    fn drop_particle_contract() {
        let mut s = world(vec![moving(1, 0, [0.0; 3])]);
        drop_particle(&mut s, ObjectId(1), 0).unwrap();
        assert_eq!(s.object_count(), 0);
        assert_eq!(
            drop_particle(&mut s, ObjectId(1), 0).unwrap_err(),
            StateError::UnknownObject(ObjectId(1))
        );

        let mut s = world(vec![moving(1, 0, [0.0; 3]), moving(2, 1, [0.0; 3]), moving(3, 2, [0.0; 3])]);
        drop_particle(&mut s, ObjectId(2), 0).unwrap();
        assert_eq!(s.object_ids(), vec![ObjectId(1), ObjectId(3)]);
    }

    #[test]
    fn eliminate_paths_contract() {
        let mut s = world(vec![particle(1, "e", vec![(1.0, vec![1])])]);
        let before = s.object(ObjectId(1)).unwrap().clone();
        eliminate_unaffected_paths(&mut s, ObjectId(1), 0).unwrap();
        assert_eq!(s.object(ObjectId(1)).unwrap(), &before);

        let mut s = world(vec![particle(1, "e", vec![(1.0, vec![1]), (2.0, vec![2]), (3.0, vec![3]), (1.0, vec![4])])]);
        eliminate_unaffected_paths(&mut s, ObjectId(1), 2).unwrap();
        let o = s.object(ObjectId(1)).unwrap();
        assert_eq!(o.path_count(), 1);
        assert!((o.paths[0].amplitude.norm() - 1.0).abs() < 1e-15);
        assert_eq!(o.footprint(), BTreeSet::from([SpacePoint::x(3)]));
    }

    fn hit_table() -> OutcomeTable {
        OutcomeTable::single(vec![ParticleInfo::new("hit", 0.0)], vec![OutcomeState::at(&[0])]).unwrap()
    }

    #[test]
    fn one_row_table_gives_one_path() {
        let mut s = world(vec![moving(1, 5, [1.0, 0.0, 0.0]), moving(2, 5, [0.0; 3])]);
        let done = perform_interaction(&mut s, ObjectId(1), ObjectId(2), &cand(5), &hit_table()).unwrap();
        assert_eq!(s.object_count(), 1);
        let out = s.object(done.result).unwrap();
        assert_eq!(out.kind, ObjectKind::ParticleCollection);
        assert_eq!(out.path_count(), 1);
        assert_eq!(out.conserved, done.interaction.object.conserved);
        assert_eq!(out.footprint(), BTreeSet::from([SpacePoint::x(5)]));
    }

    #[test]
    fn two_row_source_table_gives_entangled_pair() {
        let pair = vec![ParticleInfo::new("e", 1.0), ParticleInfo::new("e", 1.0)];
        let row = |theta: f64| OutcomeRow {
            amplitude: c(1.0),
            states: vec![
                OutcomeState::at(&[-1]).with_spindir(theta).with_momentum([-1.0, 0.0, 0.0]),
                OutcomeState::at(&[1]).with_spindir(theta).with_momentum([1.0, 0.0, 0.0]),
            ],
        };
        let table = OutcomeTable::new(pair, vec![row(10.0), row(190.0)]).unwrap();
        let mut s = world(vec![moving(1, 5, [0.0; 3]), moving(2, 5, [0.0; 3])]);
        let done = perform_interaction(&mut s, ObjectId(1), ObjectId(2), &cand(5), &table).unwrap();
        let out = s.object(done.result).unwrap();
        assert_eq!((out.particle_count(), out.path_count()), (2, 2));
        for p in &out.paths {
            assert!((p.amplitude.re - FRAC_1_SQRT_2).abs() < 1e-15);
            assert_eq!(p.states[0].spacepoints, BTreeSet::from([SpacePoint::x(4)]));
            assert_eq!(p.states[1].spacepoints, BTreeSet::from([SpacePoint::x(6)]));
        }
        assert_eq!(out.paths[1].states[1].spindir, 190.0);
    }

    #[test]
    fn n_row_table_is_normalized() {
        let rows: Vec<OutcomeRow> = (0..7)
            .map(|i| OutcomeRow {
                amplitude: Complex::new(i as f64 + 1.0, -0.5 * i as f64),
                states: vec![OutcomeState::at(&[0])],
            })
            .collect();
        let table = OutcomeTable::new(vec![ParticleInfo::new("x", 0.0)], rows).unwrap();
        let a = moving(1, 2, [0.0; 3]);
        let b = moving(2, 2, [0.0; 3]);
        let ia = create_interaction_object(&a, &b, &cand(2), ObjectId(3)).unwrap();
        let space = Space::new(&[8], 1.0).unwrap();
        let out = process_interaction_object(&ia, &table, &space, ObjectId(4)).unwrap();
        assert_eq!(out.path_count(), 7);
        assert!((out.norm_squared() - 1.0).abs() < NORM_TOLERANCE);
    }

    #[test]
    fn outcome_table_checks() {
        let one = vec![ParticleInfo::new("x", 0.0)];
        assert_eq!(OutcomeTable::new(one.clone(), vec![]).unwrap_err(), InteractionError::EmptyOutcomeTable);
        let zero = OutcomeRow {
            amplitude: c(0.0),
            states: vec![OutcomeState::at(&[0])],
        };
        assert_eq!(OutcomeTable::new(one.clone(), vec![zero]).unwrap_err(), InteractionError::OutcomeDegenerate);
        let ragged = OutcomeRow {
            amplitude: c(1.0),
            states: vec![],
        };
        assert!(matches!(
            OutcomeTable::new(one, vec![ragged]),
            Err(InteractionError::OutcomeArity { .. })
        ));
    }

    #[test]
    fn outcome_leaving_space_is_an_error() {
        let table = OutcomeTable::single(vec![ParticleInfo::new("x", 0.0)], vec![OutcomeState::at(&[-1])]).unwrap();
        let mut s = world(vec![moving(1, 0, [0.0; 3]), moving(2, 0, [0.0; 3])]);
        assert!(perform_interaction(&mut s, ObjectId(1), ObjectId(2), &cand(0), &table).is_err());
    }

    #[test]
    fn measuring_one_particle_reduces_its_partner() {
        // Two-particle, two-path object: particle 0 at 1 or 2, particle 1 at
        // 10 or 11, rows correlated.
        let pair = QuantumObject::collection(
            ObjectId(1),
            vec![ParticleInfo::new("e", 1.0), ParticleInfo::new("e", 1.0)],
            vec![
                Path::new(c(1.0), vec![PathState::at([SpacePoint::x(1)]), PathState::at([SpacePoint::x(10)])]),
                Path::new(c(1.0), vec![PathState::at([SpacePoint::x(2)]), PathState::at([SpacePoint::x(11)])]),
            ],
        )
        .unwrap();
        let screen = particle(2, "screen", vec![(1.0, vec![0, 1, 2, 3])]);
        let mut s = world(vec![pair, screen]);
        let cands = determine_potential_interactions(s.object(ObjectId(1)).unwrap(), s.object(ObjectId(2)).unwrap());
        assert_eq!(cands.len(), 2);
        let chosen = cands[1].clone();
        perform_interaction(&mut s, ObjectId(1), ObjectId(2), &chosen, &hit_table()).unwrap();
        let partner = s.object(ObjectId(1)).unwrap();
        assert_eq!(partner.particle_count(), 1);
        assert_eq!(partner.path_count(), 1);
        assert_eq!(partner.footprint(), BTreeSet::from([SpacePoint::x(11)]));
        assert!(s.object(ObjectId(2)).is_none());
        assert!(s.is_touched(ObjectId(1)));
    }
}
