//! Inputs shared by the benchmarks, built once outside the timed loops.

use std::sync::Arc;

use causim_core::experiments::{
    bell_world, slit_world, BellPhysics, DoubleSlitPhysics, Emitters, Simulator, SlitGeometry, World,
};
use causim_core::interaction::{determine_potential_interactions, OutcomeState};
use causim_core::wave::{periodic_gaussian, Boundary};
use causim_core::{
    InteractionCandidate, ObjectId, OutcomeTable, ParticleInfo, Path, PathState, QuantumObject, Space, SpacePoint,
    SystemState, WaveGrid,
};

/// Step budget for a trial; both geometries finish well inside it.
pub const TRIAL_STEPS: u64 = 16;

/// Periodic grid of `cells` holding a right-moving Gaussian at Courant 1.
pub fn wave_grid(cells: usize) -> WaveGrid {
    let n = cells as f64;
    let f = |x: f64| periodic_gaussian(x, n / 4.0, n / 40.0, n);
    let psi = (0..cells).map(|i| f(i as f64)).collect();
    let prev = (0..cells).map(|i| f(i as f64 + 1.0)).collect();
    WaveGrid::with_prev(psi, prev, 1.0, 1.0, 1.0, Boundary::Periodic).expect("valid grid")
}

pub fn bell_fixture(angle_a: f64, angle_b: f64) -> (Simulator, World) {
    let sim = Simulator::new(Arc::new(BellPhysics::default()), TRIAL_STEPS);
    (sim, bell_world(angle_a, angle_b, Emitters::Source).expect("valid Bell world"))
}

pub fn slit_fixture(marker: bool) -> (Simulator, World) {
    let sim = Simulator::new(Arc::new(DoubleSlitPhysics::default()), TRIAL_STEPS);
    (sim, slit_world(&SlitGeometry::default(), marker).expect("valid slit world"))
}

/// Two objects with `paths` paths each, overlapping at one cell, plus the
/// candidate interaction there and a one-row outcome table.
pub struct InteractionFixture {
    pub state: SystemState,
    pub a: ObjectId,
    pub b: ObjectId,
    pub candidate: InteractionCandidate,
    pub table: OutcomeTable,
}

pub fn interaction_fixture(paths: usize) -> InteractionFixture {
    let width = paths.max(2) + 2;
    let space = Space::new(&[width, 3], 1.0).expect("valid space");
    let object = |id: u64, row: usize| {
        let rows = (0..paths)
            .map(|k| {
                let cell = SpacePoint::xy(k + 1, row);
                // Every path of both objects also touches the shared cell.
                let state = PathState::at([cell, SpacePoint::xy(0, 1)]).with_momentum([k as f64, 0.0, 0.0]);
                Path::new(causim_core::Complex::new(1.0, 0.0), vec![state])
            })
            .collect();
        QuantumObject::collection(ObjectId(id), vec![ParticleInfo::new("p", 1.0)], rows).expect("valid object")
    };
    let (a, b) = (object(1, 0), object(2, 2));
    let candidate = determine_potential_interactions(&a, &b)
        .into_iter()
        .next()
        .expect("objects overlap");
    let mut state = SystemState::new(space, 1.0, 0).expect("valid state");
    state.insert_object(a).expect("fits");
    state.insert_object(b).expect("fits");
    let table = OutcomeTable::single(vec![ParticleInfo::new("x", 2.0)], vec![OutcomeState::at(&[0, 0])])
        .expect("valid table");
    InteractionFixture {
        state,
        a: ObjectId(1),
        b: ObjectId(2),
        candidate,
        table,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use causim_core::experiments::Runtime;
    use causim_core::interaction::perform_interaction;

    #[test]
    fn fixtures_run() {
        assert_eq!(wave_grid(64).step().len(), 64);
        let (sim, world) = bell_fixture(0.0, 30.0);
        assert!(!sim.run_trial(world, 1, Runtime::Centralized).unwrap().is_empty());
        let (sim, world) = slit_fixture(true);
        assert!(!sim.run_trial(world, 1, Runtime::Centralized).unwrap().is_empty());
        let mut f = interaction_fixture(8);
        perform_interaction(&mut f.state, f.a, f.b, &f.candidate, &f.table).unwrap();
    }
}
