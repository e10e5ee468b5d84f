//! System state: lattice space, fields and multi-path quantum objects.
//!
//! A quantum object is a table with one row per path and one column per
//! particle. Every row carries a complex amplitude and one [`PathState`] per
//! particle, so the table is always rectangular.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Add;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RngState;

pub type Complex = Complex64;
pub type Vec3 = [f64; 3];

/// Amplitudes are normalized to within this tolerance.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("object {object}: point {point} outside space")]
    OutOfBounds { object: ObjectId, point: SpacePoint },
    #[error("object {0} has no paths")]
    EmptyPaths(ObjectId),
    #[error("object {object} path {path} has {found} path states, expected {expected}")]
    Ragged {
        object: ObjectId,
        path: usize,
        expected: usize,
        found: usize,
    },
    #[error("object {object} path {path} particle {particle} has an empty support")]
    EmptySupport {
        object: ObjectId,
        path: usize,
        particle: usize,
    },
    #[error("object {0} is a Particle but does not hold exactly one particle")]
    ParticleArity(ObjectId),
    #[error("object {0} has all-zero amplitudes")]
    DegenerateAmplitudes(ObjectId),
    #[error("object {0} holds a non-finite amplitude or state value")]
    NonFinite(ObjectId),
    #[error("path index {index} out of range for {len} paths")]
    PathIndex { index: usize, len: usize },
    #[error("particle index {index} out of range for {len} particles")]
    ParticleIndex { index: usize, len: usize },
    #[error("duplicate object id {0}")]
    DuplicateObject(ObjectId),
    #[error("unknown object id {0}")]
    UnknownObject(ObjectId),
    #[error("field {id}: expected {expected} values, found {found}")]
    FieldShape {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("field {0} holds a non-finite value")]
    NonFiniteField(String),
    #[error("invalid time step {0}")]
    InvalidTimestep(f64),
}

/// Integer cell coordinates; unused trailing dimensions are zero.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct SpacePoint(pub [usize; 3]);

impl SpacePoint {
    pub fn new(coords: &[usize]) -> Self {
        let mut c = [0; 3];
        for (slot, &v) in c.iter_mut().zip(coords) {
            *slot = v;
        }
        SpacePoint(c)
    }

    pub fn x(x: usize) -> Self {
        SpacePoint([x, 0, 0])
    }

    pub fn xy(x: usize, y: usize) -> Self {
        SpacePoint([x, y, 0])
    }

    pub fn coords(&self) -> [usize; 3] {
        self.0
    }
}

impl fmt::Display for SpacePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

/// Regular lattice of 1 to 3 dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Space {
    dims: usize,
    extents: [usize; 3],
    delta_x: f64,
}

impl Space {
    pub fn new(extents: &[usize], delta_x: f64) -> Result<Self, StateError> {
        if extents.is_empty() || extents.len() > 3 {
            return Err(StateError::InvalidSpace(format!(
                "expected 1 to 3 dimensions, got {}",
                extents.len()
            )));
        }
        if let Some(d) = extents.iter().position(|&e| e == 0) {
            return Err(StateError::InvalidSpace(format!("extent of dimension {d} is zero")));
        }
        if !(delta_x.is_finite() && delta_x > 0.0) {
            return Err(StateError::InvalidSpace(format!("delta_x must be positive, got {delta_x}")));
        }
        let mut ext = [1; 3];
        ext[..extents.len()].copy_from_slice(extents);
        Ok(Self {
            dims: extents.len(),
            extents: ext,
            delta_x,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents[..self.dims]
    }

    pub fn delta_x(&self) -> f64 {
        self.delta_x
    }

    pub fn cell_count(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn contains(&self, p: SpacePoint) -> bool {
        p.0.iter().zip(self.extents.iter()).all(|(&c, &e)| c < e)
    }

    /// Row-major index of `p`, x varying fastest.
    pub fn linear_index(&self, p: SpacePoint) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let [x, y, z] = p.0;
        Some(x + self.extents[0] * (y + self.extents[1] * z))
    }

    /// Shifts `p` by a signed offset; `None` when the result leaves the lattice.
    pub fn offset(&self, p: SpacePoint, offset: &[i64]) -> Option<SpacePoint> {
        let mut out = p.0;
        for (d, &o) in offset.iter().enumerate() {
            if d >= 3 {
                return None;
            }
            let shifted = out[d] as i64 + o;
            if shifted < 0 {
                return None;
            }
            out[d] = shifted as usize;
        }
        let q = SpacePoint(out);
        self.contains(q).then_some(q)
    }

    /// Continuous coordinate of a cell, `index * delta_x` per dimension.
    pub fn position(&self, p: SpacePoint) -> Vec3 {
        p.0.map(|c| c as f64 * self.delta_x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum FieldValues {
    Real(Vec<f64>),
    Complex(Vec<Complex>),
}

impl FieldValues {
    pub fn len(&self) -> usize {
        match self {
            FieldValues::Real(v) => v.len(),
            FieldValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One scalar value per lattice cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub id: String,
    pub values: FieldValues,
}

impl FieldGrid {
    pub fn new(id: impl Into<String>, space: &Space, values: FieldValues) -> Result<Self, StateError> {
        let grid = Self {
            id: id.into(),
            values,
        };
        grid.validate(space)?;
        Ok(grid)
    }

    pub fn real(id: impl Into<String>, space: &Space, values: Vec<f64>) -> Result<Self, StateError> {
        Self::new(id, space, FieldValues::Real(values))
    }

    pub fn complex(
        id: impl Into<String>,
        space: &Space,
        values: Vec<Complex>,
    ) -> Result<Self, StateError> {
        Self::new(id, space, FieldValues::Complex(values))
    }

    pub fn validate(&self, space: &Space) -> Result<(), StateError> {
        if self.values.len() != space.cell_count() {
            return Err(StateError::FieldShape {
                id: self.id.clone(),
                expected: space.cell_count(),
                found: self.values.len(),
            });
        }
        let finite = match &self.values {
            FieldValues::Real(v) => v.iter().all(|x| x.is_finite()),
            FieldValues::Complex(v) => v.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        };
        if !finite {
            return Err(StateError::NonFiniteField(self.id.clone()));
        }
        Ok(())
    }

    /// Value at `p` widened to complex.
    pub fn at(&self, space: &Space, p: SpacePoint) -> Option<Complex> {
        let i = space.linear_index(p)?;
        Some(match &self.values {
            FieldValues::Real(v) => Complex::new(v[i], 0.0),
            FieldValues::Complex(v) => v[i],
        })
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ObjectId(pub u64);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Wraps an angle in degrees into `[0, 360)`.
pub fn normalize_degrees(angle: f64) -> f64 {
    let a = angle.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// State of one particle along one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub spacepoints: BTreeSet<SpacePoint>,
    pub momentum: Vec3,
    pub angular_momentum: Vec3,
    /// Planar spin direction in degrees, kept in `[0, 360)`.
    pub spindir: f64,
}

impl PathState {
    pub fn at(points: impl IntoIterator<Item = SpacePoint>) -> Self {
        Self {
            spacepoints: points.into_iter().collect(),
            momentum: [0.0; 3],
            angular_momentum: [0.0; 3],
            spindir: 0.0,
        }
    }

    pub fn with_momentum(mut self, momentum: Vec3) -> Self {
        self.momentum = momentum;
        self
    }

    pub fn with_angular_momentum(mut self, angular_momentum: Vec3) -> Self {
        self.angular_momentum = angular_momentum;
        self
    }

    pub fn with_spindir(mut self, degrees: f64) -> Self {
        self.set_spindir(degrees);
        self
    }

    pub fn set_spindir(&mut self, degrees: f64) {
        self.spindir = normalize_degrees(degrees);
    }

    fn is_finite(&self) -> bool {
        self.spindir.is_finite()
            && self.momentum.iter().all(|v| v.is_finite())
            && self.angular_momentum.iter().all(|v| v.is_finite())
    }
}

/// One row of the object table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub amplitude: Complex,
    pub states: Vec<PathState>,
}

impl Path {
    pub fn new(amplitude: Complex, states: Vec<PathState>) -> Self {
        Self { amplitude, states }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleInfo {
    /// Particle type tag, e.g. `"electron"`.
    pub tag: String,
    pub mass: f64,
}

impl ParticleInfo {
    pub fn new(tag: impl Into<String>, mass: f64) -> Self {
        Self {
            tag: tag.into(),
            mass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Particle,
    ParticleCollection,
    InteractionObject,
}

/// Object-wide flags that the object-local runtime consults instead of
/// mutating paths from the outside.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectFlags {
    /// Particle columns destroyed by an interaction, applied on the object's
    /// next own update.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub dropped_particles: BTreeSet<usize>,
    /// Pending collapse onto this path index.
    pub collapse_to: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GlobalAttributes {
    pub position: Vec3,
    pub momentum: Vec3,
    #[serde(default)]
    pub flags: ObjectFlags,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConservedQuantities {
    pub energy: f64,
    pub momentum: Vec3,
    pub angular_momentum: Vec3,
}

impl Add for ConservedQuantities {
    type Output = ConservedQuantities;

    fn add(self, rhs: Self) -> Self {
        let add3 = |a: Vec3, b: Vec3| [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
        ConservedQuantities {
            energy: self.energy + rhs.energy,
            momentum: add3(self.momentum, rhs.momentum),
            angular_momentum: add3(self.angular_momentum, rhs.angular_momentum),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumObject {
    pub id: ObjectId,
    pub kind: ObjectKind,
    pub particles: Vec<ParticleInfo>,
    pub paths: Vec<Path>,
    pub globals: GlobalAttributes,
    pub conserved: ConservedQuantities,
}

impl QuantumObject {
    /// A single particle; amplitudes are normalized.
    pub fn particle(id: ObjectId, info: ParticleInfo, paths: Vec<(Complex, PathState)>) -> Result<Self, StateError> {
        let paths = paths
            .into_iter()
            .map(|(a, s)| Path::new(a, vec![s]))
            .collect();
        Self::build(id, ObjectKind::Particle, vec![info], paths)
    }

    pub fn collection(id: ObjectId, particles: Vec<ParticleInfo>, paths: Vec<Path>) -> Result<Self, StateError> {
        Self::build(id, ObjectKind::ParticleCollection, particles, paths)
    }

    fn build(
        id: ObjectId,
        kind: ObjectKind,
        particles: Vec<ParticleInfo>,
        paths: Vec<Path>,
    ) -> Result<Self, StateError> {
        let mut obj = Self {
            id,
            kind,
            particles,
            paths,
            globals: GlobalAttributes::default(),
            conserved: ConservedQuantities::default(),
        };
        obj.validate()?;
        obj.normalize_amplitudes()?;
        Ok(obj)
    }

    pub fn particle_count(&self) -> usize {
        self.particles.len()
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    /// Σ |amplitude|² over all paths.
    pub fn norm_squared(&self) -> f64 {
        self.paths.iter().map(|p| p.amplitude.norm_sqr()).sum()
    }

    /// Structural invariants: non-empty, rectangular, finite, Particle arity.
    pub fn validate(&self) -> Result<(), StateError> {
        if self.paths.is_empty() {
            return Err(StateError::EmptyPaths(self.id));
        }
        if self.kind == ObjectKind::Particle && self.particles.len() != 1 {
            return Err(StateError::ParticleArity(self.id));
        }
        let expected = self.particles.len();
        for (i, path) in self.paths.iter().enumerate() {
            if path.states.len() != expected {
                return Err(StateError::Ragged {
                    object: self.id,
                    path: i,
                    expected,
                    found: path.states.len(),
                });
            }
            if !(path.amplitude.re.is_finite() && path.amplitude.im.is_finite()) {
                return Err(StateError::NonFinite(self.id));
            }
            for (j, state) in path.states.iter().enumerate() {
                if state.spacepoints.is_empty() {
                    return Err(StateError::EmptySupport {
                        object: self.id,
                        path: i,
                        particle: j,
                    });
                }
                if !state.is_finite() {
                    return Err(StateError::NonFinite(self.id));
                }
            }
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus every support inside `space`.
    pub fn validate_in(&self, space: &Space) -> Result<(), StateError> {
        self.validate()?;
        for path in &self.paths {
            for state in &path.states {
                if let Some(&point) = state.spacepoints.iter().find(|p| !space.contains(**p)) {
                    return Err(StateError::OutOfBounds {
                        object: self.id,
                        point,
                    });
                }
            }
        }
        Ok(())
    }

    /// Rescales amplitudes so that Σ|a|² = 1, keeping order and ratios.
    pub fn normalize_amplitudes(&mut self) -> Result<(), StateError> {
        let norm = self.norm_squared().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(StateError::DegenerateAmplitudes(self.id));
        }
        for path in &mut self.paths {
            path.amplitude /= norm;
        }
        Ok(())
    }

    /// Keeps only path `index`, with its amplitude scaled to modulus 1.
    pub fn reduce_to_path(&self, index: usize) -> Result<QuantumObject, StateError> {
        let path = self.paths.get(index).ok_or(StateError::PathIndex {
            index,
            len: self.paths.len(),
        })?;
        let mut kept = path.clone();
        let modulus = kept.amplitude.norm();
        // Leave unit amplitudes untouched so that reducing twice is exact.
        if modulus == 0.0 {
            kept.amplitude = Complex::new(1.0, 0.0);
        } else if (modulus - 1.0).abs() > 4.0 * f64::EPSILON {
            kept.amplitude /= modulus;
        }
        Ok(QuantumObject {
            paths: vec![kept],
            ..self.clone_without_paths()
        })
    }

    fn clone_without_paths(&self) -> QuantumObject {
        QuantumObject {
            id: self.id,
            kind: self.kind,
            particles: self.particles.clone(),
            paths: Vec::new(),
            globals: self.globals.clone(),
            conserved: self.conserved,
        }
    }

    /// Union of all spacepoints over all paths and particles.
    pub fn footprint(&self) -> BTreeSet<SpacePoint> {
        self.paths
            .iter()
            .flat_map(|p| p.states.iter())
            .flat_map(|s| s.spacepoints.iter().copied())
            .collect()
    }

    /// Removes particle column `index` from every path.
    pub fn remove_particle(&mut self, index: usize) -> Result<ParticleInfo, StateError> {
        if index >= self.particles.len() {
            return Err(StateError::ParticleIndex {
                index,
                len: self.particles.len(),
            });
        }
        for path in &mut self.paths {
            path.states.remove(index);
        }
        Ok(self.particles.remove(index))
    }
}

/// Simulation clock. Time is always `steps * delta_t`, never accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clock {
    steps: u64,
    delta_t: f64,
}

impl Clock {
    pub fn new(delta_t: f64) -> Result<Self, StateError> {
        if !(delta_t.is_finite() && delta_t > 0.0) {
            return Err(StateError::InvalidTimestep(delta_t));
        }
        Ok(Self { steps: 0, delta_t })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn t(&self) -> f64 {
        self.steps as f64 * self.delta_t
    }

    pub(crate) fn tick(&mut self) {
        self.steps += 1;
    }
}

/// Structural changes recorded while laws run; drained into the run trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum StateEvent {
    Created { object: ObjectId },
    DroppedParticle { object: ObjectId, particle: usize },
    Removed { object: ObjectId },
    Reduced { object: ObjectId, path: usize },
    Interaction {
        a: ObjectId,
        b: ObjectId,
        position: SpacePoint,
        result: ObjectId,
    },
}

/// The single mutable world of a centralized run.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub space: Space,
    pub fields: Vec<FieldGrid>,
    objects: BTreeMap<ObjectId, QuantumObject>,
    clock: Clock,
    pub rng: RngState,
    next_id: u64,
    events: Vec<StateEvent>,
    /// Objects that took part in an interaction during the current step.
    touched: BTreeSet<ObjectId>,
}

impl SystemState {
    pub fn new(space: Space, delta_t: f64, seed: u64) -> Result<Self, StateError> {
        Ok(Self {
            space,
            fields: Vec::new(),
            objects: BTreeMap::new(),
            clock: Clock::new(delta_t)?,
            rng: RngState::from_seed(seed),
            next_id: 1,
            events: Vec::new(),
            touched: BTreeSet::new(),
        })
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn t(&self) -> f64 {
        self.clock.t()
    }

    pub(crate) fn clock_mut(&mut self) -> &mut Clock {
        &mut self.clock
    }

    pub fn add_field(&mut self, field: FieldGrid) -> Result<(), StateError> {
        field.validate(&self.space)?;
        self.fields.push(field);
        Ok(())
    }

    pub fn field(&self, id: &str) -> Option<&FieldGrid> {
        self.fields.iter().find(|f| f.id == id)
    }

    pub fn field_mut(&mut self, id: &str) -> Option<&mut FieldGrid> {
        self.fields.iter_mut().find(|f| f.id == id)
    }

    /// Makes [`allocate_id`](Self::allocate_id) continue from at least `next`.
    pub fn reserve_ids_below(&mut self, next: u64) {
        self.next_id = self.next_id.max(next);
    }

    /// Fresh id, never colliding with inserted objects.
    pub fn allocate_id(&mut self) -> ObjectId {
        let id = ObjectId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn insert_object(&mut self, obj: QuantumObject) -> Result<ObjectId, StateError> {
        obj.validate_in(&self.space)?;
        if self.objects.contains_key(&obj.id) {
            return Err(StateError::DuplicateObject(obj.id));
        }
        let id = obj.id;
        self.next_id = self.next_id.max(id.0 + 1);
        self.objects.insert(id, obj);
        Ok(id)
    }

    pub fn remove_object(&mut self, id: ObjectId) -> Result<QuantumObject, StateError> {
        self.objects.remove(&id).ok_or(StateError::UnknownObject(id))
    }

    pub fn object(&self, id: ObjectId) -> Option<&QuantumObject> {
        self.objects.get(&id)
    }

    pub fn object_mut(&mut self, id: ObjectId) -> Option<&mut QuantumObject> {
        self.objects.get_mut(&id)
    }

    pub fn objects(&self) -> impl Iterator<Item = &QuantumObject> {
        self.objects.values()
    }

    pub fn object_ids(&self) -> Vec<ObjectId> {
        self.objects.keys().copied().collect()
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn record(&mut self, event: StateEvent) {
        self.events.push(event);
    }

    pub fn take_events(&mut self) -> Vec<StateEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn mark_touched(&mut self, id: ObjectId) {
        self.touched.insert(id);
    }

    pub fn is_touched(&self, id: ObjectId) -> bool {
        self.touched.contains(&id)
    }

    pub(crate) fn clear_touched(&mut self) {
        self.touched.clear();
    }

    /// Checks every object and field against the state invariants.
    pub fn check_invariants(&self) -> Result<(), StateError> {
        for field in &self.fields {
            field.validate(&self.space)?;
        }
        for obj in self.objects.values() {
            obj.validate_in(&self.space)?;
        }
        Ok(())
    }
}
