//! Spin measurements on single particles, independent pairs and entangled
//! pairs.
//!
//! Geometry on a 7×3 lattice (x to the right, y up):
//!
//! ```text
//! y=2  S  .  .  .  .  .  S      S  screen cells (x=0 and x=6, all y)
//! y=1  S  G  e  *  e  G  S      G  Stern-Gerlach apparatus
//! y=0  S  .  .  .  .  .  S      *  pump + source, e  emitted pair
//! ```
//!
//! Each step a particle moves one cell along the sign of its x momentum.
//! Arriving at an apparatus cell it is measured: case 1 with probability
//! `cos²(spindir − axis)`, after which it is deflected to y=2 (case 1) or
//! y=0 (case 2) and the spin direction of every particle of its object is
//! set to `axis` (case 1) or `axis + 90°` (case 2). The screen then turns the
//! particle into a hit record whose y coordinate is the outcome.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::lhv::{evaluate_bell, lhv_oracle, BellForm, LhvReport};
use super::stats::JointStats;
use super::{invalid, map_trials, ExperimentError, Runtime, Simulator, World};
use crate::interaction::{InteractionObject, OutcomeRow, OutcomeState, OutcomeTable};
use crate::physics::{Environment, Physics};
use crate::rng::{derive_seed, RngState};
use crate::state::{
    normalize_degrees, Complex, FieldGrid, FieldValues, ObjectId, ParticleInfo, PathState, QuantumObject, Space,
    SpacePoint, StateError,
};
use crate::Error;

/// `1` at apparatus cells, `0` elsewhere.
pub const SG_PRESENT_FIELD: &str = "sg-present";
/// Apparatus axis in degrees.
pub const SG_AXIS_FIELD: &str = "sg-axis";

pub const ELECTRON: &str = "electron";
pub const PUMP: &str = "pump";
pub const SOURCE: &str = "source";
pub const SCREEN: &str = "screen";
pub const HIT: &str = "hit";

const WIDTH: usize = 7;
const HEIGHT: usize = 3;
const CENTRE: usize = 3;
const BEAM_Y: usize = 1;
const SG_A_X: usize = 1;
const SG_B_X: usize = 5;
const SCREEN_A_X: usize = 0;
const SCREEN_B_X: usize = 6;
const UP_Y: usize = 2;
const DOWN_Y: usize = 0;
const MAX_STEPS: u64 = 16;

/// Case-1 probability `cos²(Δθ)` for an angle in degrees.
///
/// Angles within 1e-9° of a multiple of 90° are snapped, so that aligned and
/// orthogonal settings give exactly 1 and 0.
pub fn spin_probability(delta_degrees: f64) -> f64 {
    let d = normalize_degrees(delta_degrees);
    let quarter = (d / 90.0).round();
    if (d - quarter * 90.0).abs() < 1e-9 {
        return if quarter as i64 % 2 == 0 { 1.0 } else { 0.0 };
    }
    d.to_radians().cos().powi(2)
}

/// How the source chooses the common spin direction of a pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpindirPolicy {
    /// Uniform in `[0, 360)`, drawn per pair.
    #[default]
    Uniform,
    Fixed(f64),
}

#[derive(Debug, Clone, Default)]
pub struct BellPhysics {
    pub policy: SpindirPolicy,
}

fn axis_at(env: &Environment<'_>, p: SpacePoint) -> Option<f64> {
    let present = env.field(SG_PRESENT_FIELD)?.at(env.space, p)?;
    if present.re == 0.0 {
        return None;
    }
    Some(env.field(SG_AXIS_FIELD)?.at(env.space, p)?.re)
}

fn first_cell(s: &PathState) -> SpacePoint {
    *s.spacepoints.iter().next().expect("supports are non-empty")
}

impl Physics for BellPhysics {
    fn evolve(&self, obj: &mut QuantumObject, env: &Environment<'_>, rng: &mut RngState) -> Result<(), Error> {
        for k in 0..obj.particle_count() {
            if obj.particles[k].tag != ELECTRON {
                continue;
            }
            for path in &mut obj.paths {
                let s = &mut path.states[k];
                let dx = s.momentum[0].signum() as i64;
                if s.momentum[0] == 0.0 {
                    continue;
                }
                s.spacepoints = s
                    .spacepoints
                    .iter()
                    .map(|&p| {
                        env.space.offset(p, &[dx]).ok_or(StateError::OutOfBounds {
                            object: obj.id,
                            point: p,
                        })
                    })
                    .collect::<Result<_, _>>()?;
            }
            let Some(axis) = axis_at(env, first_cell(&obj.paths[0].states[k])) else {
                continue;
            };
            // One outcome for the whole object; the case-1 probability is
            // averaged over its paths (identical for the source's rows).
            let p: f64 = obj
                .paths
                .iter()
                .map(|path| path.amplitude.norm_sqr() * spin_probability(path.states[k].spindir - axis))
                .sum::<f64>()
                / obj.norm_squared();
            let case1 = rng.draw_bernoulli(p.clamp(0.0, 1.0))?;
            let (y, spindir) = if case1 { (UP_Y, axis) } else { (DOWN_Y, axis + 90.0) };
            for path in &mut obj.paths {
                let s = &mut path.states[k];
                s.spacepoints = s.spacepoints.iter().map(|p| SpacePoint([p.0[0], y, p.0[2]])).collect();
                for (j, s) in path.states.iter_mut().enumerate() {
                    if obj.particles[j].tag == ELECTRON {
                        s.set_spindir(spindir);
                    }
                }
            }
        }
        Ok(())
    }

    fn interacts(&self, a: &ParticleInfo, b: &ParticleInfo) -> bool {
        matches!(
            (a.tag.as_str(), b.tag.as_str()),
            (PUMP, SOURCE) | (SOURCE, PUMP) | (ELECTRON, SCREEN) | (SCREEN, ELECTRON)
        )
    }

    fn outcome(&self, ia: &InteractionObject, rng: &mut RngState) -> Result<OutcomeTable, Error> {
        let tags: Vec<&str> = ia.particles().iter().map(|p| p.tag.as_str()).collect();
        if tags.contains(&PUMP) {
            let theta = match self.policy {
                SpindirPolicy::Uniform => rng.draw_uniform(0.0, 360.0)?,
                SpindirPolicy::Fixed(t) => t,
            };
            let row = |t: f64| OutcomeRow {
                amplitude: Complex::new(1.0, 0.0),
                states: vec![
                    OutcomeState::at(&[-1, 0]).with_momentum([-1.0, 0.0, 0.0]).with_spindir(t),
                    OutcomeState::at(&[1, 0]).with_momentum([1.0, 0.0, 0.0]).with_spindir(t),
                ],
            };
            let electron = ParticleInfo::new(ELECTRON, 1.0);
            return Ok(OutcomeTable::new(vec![electron.clone(), electron], vec![row(theta), row(theta + 180.0)])?);
        }
        let k = tags
            .iter()
            .position(|t| *t == ELECTRON)
            .ok_or_else(|| invalid("interaction", format!("no outcome rule for {tags:?}")))?;
        let spindir = ia.states()[k].spindir;
        Ok(OutcomeTable::single(
            vec![ParticleInfo::new(HIT, 0.0)],
            vec![OutcomeState::at(&[0, 0]).with_spindir(spindir)],
        )?)
    }

    fn finished(&self, objects: &[&QuantumObject]) -> bool {
        !objects
            .iter()
            .any(|o| o.particles.iter().any(|p| p.tag == ELECTRON || p.tag == PUMP))
    }
}

/// What starts at the centre of the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Emitters {
    /// A pump particle meeting the pair source.
    Source,
    /// Two independent particles with fixed spin directions.
    Pair { spindir_a: f64, spindir_b: f64 },
    /// One particle heading for wing a.
    Single { spindir: f64 },
}

fn single_particle(id: u64, tag: &str, mass: f64, state: PathState) -> Result<QuantumObject, StateError> {
    QuantumObject::particle(ObjectId(id), ParticleInfo::new(tag, mass), vec![(Complex::new(1.0, 0.0), state)])
}

/// Initial world; screens get ids 1 and 2 so wing a is always processed
/// first.
pub fn bell_world(angle_a: f64, angle_b: f64, emitters: Emitters) -> Result<World, Error> {
    let space = Space::new(&[WIDTH, HEIGHT], 1.0)?;
    let mut present = vec![0.0; space.cell_count()];
    let mut axis = vec![0.0; space.cell_count()];
    for (x, angle) in [(SG_A_X, angle_a), (SG_B_X, angle_b)] {
        if !angle.is_finite() {
            return Err(invalid("angle", format!("{angle} is not finite")).into());
        }
        let i = space.linear_index(SpacePoint::xy(x, BEAM_Y)).expect("inside");
        present[i] = 1.0;
        axis[i] = angle;
    }
    let fields = vec![
        FieldGrid::new(SG_PRESENT_FIELD, &space, FieldValues::Real(present))?,
        FieldGrid::new(SG_AXIS_FIELD, &space, FieldValues::Real(axis))?,
    ];
    let screen = |id: u64, x: usize| {
        single_particle(id, SCREEN, 0.0, PathState::at((0..HEIGHT).map(|y| SpacePoint::xy(x, y))))
    };
    let mut objects = vec![screen(1, SCREEN_A_X)?, screen(2, SCREEN_B_X)?];
    let electron = |id: u64, x: usize, dir: f64, spindir: f64| {
        single_particle(
            id,
            ELECTRON,
            1.0,
            PathState::at([SpacePoint::xy(x, BEAM_Y)])
                .with_momentum([dir, 0.0, 0.0])
                .with_spindir(spindir),
        )
    };
    match emitters {
        Emitters::Source => {
            let centre = PathState::at([SpacePoint::xy(CENTRE, BEAM_Y)]);
            objects.push(single_particle(3, PUMP, 0.0, centre.clone())?);
            objects.push(single_particle(4, SOURCE, 1.0, centre)?);
        }
        Emitters::Pair { spindir_a, spindir_b } => {
            objects.push(electron(3, CENTRE - 1, -1.0, spindir_a)?);
            objects.push(electron(4, CENTRE + 1, 1.0, spindir_b)?);
        }
        Emitters::Single { spindir } => objects.push(electron(3, CENTRE - 1, -1.0, spindir)?),
    }
    Ok(World {
        space,
        fields,
        objects,
    })
}

/// Outcome (`+1` up, `−1` down) recorded on the wing-a and wing-b screens.
pub fn extract_outcomes(objects: &[QuantumObject]) -> (Option<i8>, Option<i8>) {
    let mut out = (None, None);
    for o in objects {
        for (k, info) in o.particles.iter().enumerate() {
            if info.tag != HIT {
                continue;
            }
            let p = first_cell(&o.paths[0].states[k]);
            let value = if p.0[1] == UP_Y { 1 } else { -1 };
            match p.0[0] {
                SCREEN_A_X => out.0 = Some(value),
                SCREEN_B_X => out.1 = Some(value),
                _ => {}
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellConfig {
    pub angle_a: f64,
    pub angle_b: f64,
    #[serde(default)]
    pub policy: SpindirPolicy,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub runtime: Runtime,
}

impl BellConfig {
    pub fn new(angle_a: f64, angle_b: f64, trials: u64, seed: u64) -> Self {
        Self {
            angle_a,
            angle_b,
            policy: SpindirPolicy::Uniform,
            trials,
            seed,
            runtime: Runtime::Centralized,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if let SpindirPolicy::Fixed(t) = self.policy {
            if !t.is_finite() {
                return Err(invalid("policy", "fixed spin direction must be finite"));
            }
        }
        Ok(())
    }
}

fn run_pairs(
    physics: BellPhysics,
    world: World,
    trials: u64,
    seed: u64,
    runtime: Runtime,
) -> Result<JointStats, Error> {
    let sim = Simulator::new(Arc::new(physics), MAX_STEPS);
    let pairs = map_trials(trials, seed, |trial, s| {
        let objects = sim.run_trial(world.clone(), s, runtime)?;
        match extract_outcomes(&objects) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(ExperimentError::MissingOutcome { trial }.into()),
        }
    })?;
    Ok(JointStats::from_outcomes(pairs))
}

/// Entangled pairs from the source, measured at `angle_a` and `angle_b`.
pub fn run_bell_experiment(cfg: &BellConfig) -> Result<JointStats, Error> {
    cfg.validate()?;
    let world = bell_world(cfg.angle_a, cfg.angle_b, Emitters::Source)?;
    run_pairs(BellPhysics { policy: cfg.policy }, world, cfg.trials, cfg.seed, cfg.runtime)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnentangledConfig {
    pub spindir_a: f64,
    pub spindir_b: f64,
    #[serde(default)]
    pub angle_a: f64,
    #[serde(default)]
    pub angle_b: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub runtime: Runtime,
}

/// Two independent particles with fixed spin directions.
pub fn run_unentangled_pair(cfg: &UnentangledConfig) -> Result<JointStats, Error> {
    if cfg.trials == 0 {
        return Err(invalid("trials", "must be at least 1").into());
    }
    let world = bell_world(
        cfg.angle_a,
        cfg.angle_b,
        Emitters::Pair {
            spindir_a: cfg.spindir_a,
            spindir_b: cfg.spindir_b,
        },
    )?;
    run_pairs(BellPhysics::default(), world, cfg.trials, cfg.seed, cfg.runtime)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleSgResult {
    pub delta: f64,
    pub trials: u64,
    pub case1: u64,
    pub frequency: f64,
    pub expected: f64,
    pub standard_error: f64,
}

/// One particle with spin direction `delta` through an apparatus at 0°.
pub fn run_single_sg(delta: f64, trials: u64, seed: u64) -> Result<SingleSgResult, Error> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1").into());
    }
    let world = bell_world(0.0, 0.0, Emitters::Single { spindir: delta })?;
    let sim = Simulator::new(Arc::new(BellPhysics::default()), MAX_STEPS);
    let ups = map_trials(trials, seed, |trial, s| {
        let objects = sim.run_trial(world.clone(), s, Runtime::Centralized)?;
        extract_outcomes(&objects)
            .0
            .map(|v| v > 0)
            .ok_or_else(|| ExperimentError::MissingOutcome { trial }.into())
    })?;
    let case1 = ups.iter().filter(|&&u| u).count() as u64;
    let frequency = case1 as f64 / trials as f64;
    let expected = spin_probability(delta);
    Ok(SingleSgResult {
        delta,
        trials,
        case1,
        frequency,
        expected,
        standard_error: (expected * (1.0 - expected) / trials as f64).sqrt(),
    })
}

/// Correlations for the three setting pairs and the resulting Bell margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellScan {
    pub angles: [f64; 3],
    pub form: BellForm,
    pub ab: JointStats,
    pub ac: JointStats,
    pub bc: JointStats,
    pub margin: f64,
    /// Propagated standard error of the margin.
    pub margin_se: f64,
    pub lhv: LhvReport,
}

/// Runs `(a,b)`, `(a,c)` and `(b,c)` with independent seeds.
///
/// The source emits equal-outcome pairs. For the anticorrelated form wing b
/// is read with the opposite sign, which turns them into opposite-outcome
/// pairs with correlation `−cos 2Δ`.
pub fn run_bell_scan(
    angles: [f64; 3],
    form: BellForm,
    policy: SpindirPolicy,
    trials: u64,
    seed: u64,
    runtime: Runtime,
) -> Result<BellScan, Error> {
    let [a, b, c] = angles;
    let run = |k: u64, x: f64, y: f64| {
        run_bell_experiment(&BellConfig {
            angle_a: x,
            angle_b: y,
            policy,
            trials,
            seed: derive_seed(seed, k),
            runtime,
        })
    };
    let ab = run(0, a, b)?;
    let ac = run(1, a, c)?;
    let bc = run(2, b, c)?;
    let sign = match form {
        BellForm::Identical => 1.0,
        BellForm::Anticorrelated => -1.0,
    };
    let margin = evaluate_bell(sign * ab.correlation, sign * ac.correlation, sign * bc.correlation, form);
    let margin_se = (ab.correlation_se.powi(2) + ac.correlation_se.powi(2) + bc.correlation_se.powi(2)).sqrt();
    Ok(BellScan {
        angles,
        form,
        ab,
        ac,
        bc,
        margin,
        margin_se,
        lhv: lhv_oracle(angles, form),
    })
}
