//! Property tests for the state model, interaction pipeline and engine.

use std::collections::BTreeSet;
use std::sync::Arc;

use causim_core::engine::{self, EngineConfig, Termination};
use causim_core::experiments::{
    bell_world, lhv_oracle, run_bell_experiment, spin_probability, BellConfig, BellForm, BellPhysics, Emitters,
    JointStats, Strategy as LhvStrategy,
};
use causim_core::interaction::{
    create_interaction_object, determine_potential_interactions, in_sums, perform_interaction, OutcomeState,
    OutcomeTable,
};
use causim_core::physics::{apply_interactions, centralized_laws};
use causim_core::state::{StateEvent, NORM_TOLERANCE};
use causim_core::{Complex, ObjectId, ParticleInfo, Path, PathState, QuantumObject, Space, SpacePoint, SystemState};
use proptest::prelude::*;

const W: usize = 6;
const H: usize = 4;

fn arb_point() -> impl Strategy<Value = SpacePoint> {
    (0..W, 0..H).prop_map(|(x, y)| SpacePoint::xy(x, y))
}

fn arb_state() -> impl Strategy<Value = PathState> {
    (
        prop::collection::btree_set(arb_point(), 1..4),
        prop::array::uniform3(-3.0f64..3.0),
        prop::array::uniform3(-3.0f64..3.0),
        -720.0f64..720.0,
    )
        .prop_map(|(cells, momentum, angular, spin)| PathState {
            angular_momentum: angular,
            ..PathState::at(cells).with_momentum(momentum).with_spindir(spin)
        })
}

fn arb_amplitude() -> impl Strategy<Value = Complex> {
    (-2.0f64..2.0, -2.0f64..2.0)
        .prop_filter("non-zero", |(re, im)| re.abs() + im.abs() > 1e-3)
        .prop_map(|(re, im)| Complex::new(re, im))
}

/// Object with `particles` particles and 1–4 paths.
fn arb_object(id: u64, particles: usize) -> impl Strategy<Value = QuantumObject> {
    prop::collection::vec((arb_amplitude(), prop::collection::vec(arb_state(), particles)), 1..5).prop_map(
        move |rows| {
            let infos = (0..particles).map(|k| ParticleInfo::new(format!("p{k}"), 1.0 + k as f64)).collect();
            let paths = rows.into_iter().map(|(a, s)| Path::new(a, s)).collect();
            QuantumObject::collection(ObjectId(id), infos, paths).unwrap()
        },
    )
}

proptest! {
    #[test]
    fn construction_normalizes_and_keeps_ratios(obj in arb_object(1, 2)) {
        prop_assert!((obj.norm_squared() - 1.0).abs() < NORM_TOLERANCE);
        for p in &obj.paths {
            prop_assert_eq!(p.states.len(), obj.particle_count());
        }
        let mut again = obj.clone();
        again.normalize_amplitudes().unwrap();
        for (x, y) in obj.paths.iter().zip(&again.paths) {
            prop_assert!((x.amplitude - y.amplitude).norm() < 1e-12);
        }
    }

    #[test]
    fn reduction_is_idempotent_and_unit(obj in arb_object(1, 2), pick in 0usize..4) {
        let i = pick % obj.path_count();
        let once = obj.reduce_to_path(i).unwrap();
        prop_assert_eq!(once.path_count(), 1);
        prop_assert!((once.paths[0].amplitude.norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(&once.paths[0].states, &obj.paths[i].states);
        prop_assert_eq!(once.reduce_to_path(0).unwrap(), once.clone());
        prop_assert!(obj.reduce_to_path(obj.path_count()).is_err());
    }

    #[test]
    fn footprint_is_the_union_and_in_bounds(obj in arb_object(1, 3)) {
        let space = Space::new(&[W, H], 1.0).unwrap();
        let fp = obj.footprint();
        let mut union = BTreeSet::new();
        for p in &obj.paths {
            for s in &p.states {
                union.extend(s.spacepoints.iter().copied());
                prop_assert!((0.0..360.0).contains(&s.spindir));
            }
        }
        prop_assert_eq!(&fp, &union);
        prop_assert!(fp.iter().all(|&p| space.contains(p)));
    }

    #[test]
    fn interaction_conserves_exactly_at_one_point(
        a in arb_object(1, 2),
        b in arb_object(2, 1),
        pick in any::<prop::sample::Index>(),
        seed in any::<u64>(),
    ) {
        let cands = determine_potential_interactions(&a, &b);
        prop_assume!(!cands.is_empty());
        let cand = cands[pick.index(cands.len())].clone();
        let ia = create_interaction_object(&a, &b, &cand, ObjectId(10)).unwrap();
        prop_assert_eq!(ia.object.conserved, in_sums(&a, &b, &cand).unwrap());
        for s in ia.states() {
            prop_assert_eq!(s.spacepoints.len(), 1);
            prop_assert!(s.spacepoints.contains(&cand.position));
        }

        let mut state = SystemState::new(Space::new(&[W, H], 1.0).unwrap(), 1.0, seed).unwrap();
        state.insert_object(a.clone()).unwrap();
        state.insert_object(b.clone()).unwrap();
        let table = OutcomeTable::single(vec![ParticleInfo::new("x", 0.0)], vec![OutcomeState::at(&[0, 0])]).unwrap();
        let done = perform_interaction(&mut state, a.id, b.id, &cand, &table).unwrap();
        let result = state.object(done.result).unwrap();
        prop_assert_eq!(result.conserved, ia.object.conserved);
        // The two-particle object keeps its other particle on the selected path only.
        let rest = state.object(a.id).unwrap();
        prop_assert_eq!(rest.path_count(), 1);
        prop_assert_eq!(rest.particle_count(), 1);
        prop_assert!(state.object(b.id).is_none());
    }

    #[test]
    fn outcome_depends_only_on_selected_paths(
        a in arb_object(1, 1),
        b in arb_object(2, 1),
        other in arb_state(),
        pick in any::<prop::sample::Index>(),
    ) {
        let cands = determine_potential_interactions(&a, &b);
        prop_assume!(!cands.is_empty());
        let cand = cands[pick.index(cands.len())].clone();
        let mut changed = a.clone();
        for (i, p) in changed.paths.iter_mut().enumerate() {
            if i != cand.path_a {
                p.states[0] = other.clone();
            }
        }
        let x = create_interaction_object(&a, &b, &cand, ObjectId(9)).unwrap();
        let y = create_interaction_object(&changed, &b, &cand, ObjectId(9)).unwrap();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn each_object_interacts_at_most_once_per_step(
        objs in prop::collection::vec(arb_object(0, 1), 2..6),
        seed in any::<u64>(),
    ) {
        let mut state = SystemState::new(Space::new(&[W, H], 1.0).unwrap(), 1.0, seed).unwrap();
        for (i, mut o) in objs.into_iter().enumerate() {
            o.id = ObjectId(i as u64 + 1);
            state.insert_object(o).unwrap();
        }
        apply_interactions(&Promiscuous, &mut state).unwrap();
        let mut seen = BTreeSet::new();
        for e in state.take_events() {
            if let StateEvent::Interaction { a, b, .. } = e {
                prop_assert!(seen.insert(a), "{a} twice");
                prop_assert!(seen.insert(b), "{b} twice");
            }
        }
    }

    #[test]
    fn spin_probability_is_a_probability(delta in -1000.0f64..1000.0) {
        let p = spin_probability(delta);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - spin_probability(-delta)).abs() < 1e-12);
        prop_assert!((p - spin_probability(delta + 180.0)).abs() < 1e-9);
        prop_assert!((p + spin_probability(delta + 90.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn joint_stats_are_consistent(c in prop::array::uniform4(0u64..1000)) {
        prop_assume!(c.iter().sum::<u64>() > 0);
        let s = JointStats::from_counts(c[0], c[1], c[2], c[3]);
        prop_assert_eq!(s.trials, c.iter().sum::<u64>());
        prop_assert!((-1.0..=1.0).contains(&s.correlation));
        prop_assert!((s.frequencies.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn admissible_strategies_satisfy_the_bound(angles in prop::array::uniform3(0.0f64..360.0)) {
        for form in [BellForm::Identical, BellForm::Anticorrelated] {
            let r = lhv_oracle(angles, form);
            prop_assert!(r.admissible_max <= 0.0);
            for s in LhvStrategy::all().iter().filter(|s| s.admissible(form)) {
                prop_assert!(s.functional(form) <= 0.0);
            }
        }
    }
}

/// Everything interacts with everything; outcome is a single marker.
struct Promiscuous;

impl causim_core::Physics for Promiscuous {
    fn evolve(
        &self,
        _: &mut QuantumObject,
        _: &causim_core::physics::Environment<'_>,
        _: &mut causim_core::RngState,
    ) -> Result<(), causim_core::Error> {
        Ok(())
    }

    fn interacts(&self, _: &ParticleInfo, _: &ParticleInfo) -> bool {
        true
    }

    fn outcome(
        &self,
        _: &causim_core::InteractionObject,
        _: &mut causim_core::RngState,
    ) -> Result<OutcomeTable, causim_core::Error> {
        Ok(OutcomeTable::single(vec![ParticleInfo::new("x", 0.0)], vec![OutcomeState::at(&[0, 0])])?)
    }

    fn finished(&self, _: &[&QuantumObject]) -> bool {
        false
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn perfect_correlation_for_any_seed(seed in any::<u64>(), angle in 0.0f64..360.0) {
        let s = run_bell_experiment(&BellConfig::new(angle, angle, 500, seed)).unwrap();
        prop_assert_eq!(s.differing(), 0);
    }

    #[test]
    fn runs_are_bit_deterministic(seed in any::<u64>(), dt in 0.01f64..10.0) {
        let physics: Arc<dyn causim_core::Physics> = Arc::new(BellPhysics::default());
        let laws = centralized_laws(physics.clone());
        let go = || {
            let w = bell_world(0.0, 30.0, Emitters::Source).unwrap();
            let mut state = SystemState::new(w.space, dt, 0).unwrap();
            for f in w.fields {
                state.add_field(f).unwrap();
            }
            for o in w.objects {
                state.insert_object(o).unwrap();
            }
            let cfg = EngineConfig::new(dt, 7, seed).with_termination(Termination::never()).recording_draws();
            engine::run(state, &cfg, &laws).unwrap()
        };
        let (s1, t1) = go();
        let (s2, t2) = go();
        prop_assert_eq!(t1.to_json_lines(), t2.to_json_lines());
        prop_assert_eq!(s1.objects().cloned().collect::<Vec<_>>(), s2.objects().cloned().collect::<Vec<_>>());
        // Time is the step count times the step, never accumulated.
        prop_assert_eq!(s1.t(), 7.0 * dt);
    }
}
