//! TOML experiment configuration and construction of the initial state.
//!
//! ```toml
//! seed = 7
//! delta_t = 1.0
//!
//! [space]
//! extents = [7, 3]
//! delta_x = 1.0
//!
//! [[fields]]
//! id = "sg-present"
//! constant = 0.0
//! set = [{ cell = [1, 1], value = 1.0 }]
//!
//! [[objects]]
//! id = 1
//! particles = [{ tag = "electron", mass = 1.0 }, { tag = "electron", mass = 1.0 }]
//!
//! [[objects.paths]]
//! amplitude = 1.0
//! states = [
//!   { cells = [[2, 1]], momentum = [-1.0, 0.0, 0.0], spindir = 0.0 },
//!   { cells = [[4, 1]], momentum = [1.0, 0.0, 0.0], spindir = 0.0 },
//! ]
//! ```
//!
//! Amplitudes are a real number or `[re, im]`. Fields are given in full
//! (`real = [...]`, `complex = [[re, im], ...]`) or as a `constant` with
//! optional per-cell overrides in `set`. `[outcome_tables.<name>]` holds
//! named outcome tables, and the free-form `[experiment]` table carries
//! driver settings read by the command-line tool.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiments::World;
use crate::interaction::OutcomeTable;
use crate::state::{
    Complex, FieldGrid, FieldValues, ObjectId, ObjectKind, ParticleInfo, Path, PathState, QuantumObject, Space,
    SpacePoint, StateError, SystemState, Vec3,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed configuration: {0}")]
    Parse(String),
    #[error("invalid configuration field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    /// Offending field, when known.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

fn bad(field: impl Into<String>, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub extents: Vec<usize>,
    #[serde(default = "one")]
    pub delta_x: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellValue {
    pub cell: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub id: String,
    pub real: Option<Vec<f64>>,
    pub complex: Option<Vec<Complex>>,
    pub constant: Option<f64>,
    #[serde(default)]
    pub set: Vec<CellValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AmplitudeConfig {
    Real(f64),
    Complex([f64; 2]),
}

impl AmplitudeConfig {
    pub fn value(self) -> Complex {
        match self {
            AmplitudeConfig::Real(re) => Complex::new(re, 0.0),
            AmplitudeConfig::Complex([re, im]) => Complex::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub cells: Vec<Vec<usize>>,
    #[serde(default)]
    pub momentum: Vec3,
    #[serde(default)]
    pub angular_momentum: Vec3,
    #[serde(default)]
    pub spindir: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub amplitude: AmplitudeConfig,
    pub states: Vec<StateConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub id: u64,
    /// Defaults to `particle` for one particle, `particle_collection`
    /// otherwise.
    pub kind: Option<ObjectKind>,
    pub particles: Vec<ParticleInfo>,
    pub paths: Vec<PathConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub delta_t: f64,
    pub space: Option<SpaceConfig>,
    #[serde(default)]
    pub fields: Vec<FieldConfig>,
    #[serde(default)]
    pub objects: Vec<ObjectConfig>,
    #[serde(default)]
    pub outcome_tables: BTreeMap<String, OutcomeTable>,
    /// Driver settings, uninterpreted here.
    #[serde(default)]
    pub experiment: toml::Table,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<FsPath>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn build_space(&self) -> Result<Space, ConfigError> {
        let s = self.space.as_ref().ok_or_else(|| bad("space", "missing [space] table"))?;
        if s.extents.is_empty() || s.extents.len() > 3 {
            return Err(bad("space.extents", format!("need 1 to 3 dimensions, got {}", s.extents.len())));
        }
        if let Some(i) = s.extents.iter().position(|&e| e == 0) {
            return Err(bad(format!("space.extents[{i}]"), "must be positive"));
        }
        if !(s.delta_x.is_finite() && s.delta_x > 0.0) {
            return Err(bad("space.delta_x", format!("must be positive, got {}", s.delta_x)));
        }
        Space::new(&s.extents, s.delta_x).map_err(|e| bad("space", e))
    }

    fn build_field(&self, i: usize, f: &FieldConfig, space: &Space) -> Result<FieldGrid, ConfigError> {
        let name = |k: &str| format!("fields[{i}].{k}");
        let given = [f.real.is_some(), f.complex.is_some(), f.constant.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(bad(format!("fields[{i}]"), "give exactly one of real, complex, constant"));
        }
        let n = space.cell_count();
        let mut values = if let Some(v) = &f.real {
            FieldValues::Real(v.clone())
        } else if let Some(v) = &f.complex {
            FieldValues::Complex(v.clone())
        } else {
            FieldValues::Real(vec![f.constant.expect("checked"); n])
        };
        if values.len() != n {
            let key = if f.real.is_some() { "real" } else { "complex" };
            return Err(bad(name(key), format!("expected {n} values, found {}", values.len())));
        }
        for (j, c) in f.set.iter().enumerate() {
            let p = point(space, &c.cell).ok_or_else(|| bad(name(&format!("set[{j}].cell")), "outside the space"))?;
            let k = space.linear_index(p).expect("inside");
            match &mut values {
                FieldValues::Real(v) => v[k] = c.value,
                FieldValues::Complex(v) => v[k] = Complex::new(c.value, 0.0),
            }
        }
        FieldGrid::new(f.id.clone(), space, values).map_err(|e| bad(format!("fields[{i}]"), e))
    }

    fn build_object(&self, i: usize, o: &ObjectConfig, space: &Space) -> Result<QuantumObject, ConfigError> {
        let at = |k: String| format!("objects[{i}].{k}");
        if o.particles.is_empty() {
            return Err(bad(at("particles".into()), "need at least one particle"));
        }
        if o.paths.is_empty() {
            return Err(bad(at("paths".into()), "need at least one path"));
        }
        for (k, p) in o.particles.iter().enumerate() {
            if !(p.mass.is_finite() && p.mass >= 0.0) {
                return Err(bad(at(format!("particles[{k}].mass")), "must be finite and non-negative"));
            }
        }
        let mut paths = Vec::with_capacity(o.paths.len());
        for (j, p) in o.paths.iter().enumerate() {
            if p.states.len() != o.particles.len() {
                return Err(bad(
                    at(format!("paths[{j}].states")),
                    format!("expected {} states, one per particle, found {}", o.particles.len(), p.states.len()),
                ));
            }
            let mut states = Vec::with_capacity(p.states.len());
            for (k, s) in p.states.iter().enumerate() {
                let field = || at(format!("paths[{j}].states[{k}].cells"));
                if s.cells.is_empty() {
                    return Err(bad(field(), "support must not be empty"));
                }
                let cells = s
                    .cells
                    .iter()
                    .map(|c| point(space, c).ok_or_else(|| bad(field(), format!("{c:?} outside the space"))))
                    .collect::<Result<Vec<_>, _>>()?;
                states.push(
                    PathState::at(cells)
                        .with_momentum(s.momentum)
                        .with_angular_momentum(s.angular_momentum)
                        .with_spindir(s.spindir),
                );
            }
            paths.push(Path::new(p.amplitude.value(), states));
        }
        let kind = o.kind.unwrap_or(if o.particles.len() == 1 {
            ObjectKind::Particle
        } else {
            ObjectKind::ParticleCollection
        });
        let id = ObjectId(o.id);
        let result = match kind {
            ObjectKind::Particle => {
                if o.particles.len() != 1 {
                    return Err(bad(at("kind".into()), "a particle holds exactly one particle"));
                }
                let paths = paths.into_iter().map(|p| (p.amplitude, p.states.into_iter().next().expect("one"))).collect();
                QuantumObject::particle(id, o.particles[0].clone(), paths)
            }
            ObjectKind::ParticleCollection => QuantumObject::collection(id, o.particles.clone(), paths),
            ObjectKind::InteractionObject => {
                return Err(bad(at("kind".into()), "interaction objects are created by the engine only"))
            }
        };
        result.map_err(|e: StateError| bad(at("paths".into()), e))
    }

    /// Space, fields and objects without the clock.
    pub fn world(&self) -> Result<World, ConfigError> {
        let space = self.build_space()?;
        let fields = self
            .fields
            .iter()
            .enumerate()
            .map(|(i, f)| self.build_field(i, f, &space))
            .collect::<Result<Vec<_>, _>>()?;
        let mut objects = Vec::with_capacity(self.objects.len());
        for (i, o) in self.objects.iter().enumerate() {
            if self.objects[..i].iter().any(|p| p.id == o.id) {
                return Err(bad(format!("objects[{i}].id"), format!("duplicate id {}", o.id)));
            }
            objects.push(self.build_object(i, o, &space)?);
        }
        Ok(World { space, fields, objects })
    }

    pub fn outcome_table(&self, name: &str) -> Result<&OutcomeTable, ConfigError> {
        self.outcome_tables
            .get(name)
            .ok_or_else(|| bad(format!("outcome_tables.{name}"), "no such table"))
    }
}

fn point(space: &Space, coords: &[usize]) -> Option<SpacePoint> {
    if coords.len() != space.dims() {
        return None;
    }
    let p = SpacePoint::new(coords);
    space.contains(p).then_some(p)
}

/// Fresh state at `t = 0` with the configured objects and fields.
pub fn build_system_state(config: &ExperimentConfig) -> Result<SystemState, ConfigError> {
    if !(config.delta_t.is_finite() && config.delta_t > 0.0) {
        return Err(bad("delta_t", format!("must be positive, got {}", config.delta_t)));
    }
    let world = config.world()?;
    let mut state = SystemState::new(world.space, config.delta_t, config.seed).map_err(|e| bad("delta_t", e))?;
    for f in world.fields {
        let id = f.id.clone();
        state.add_field(f).map_err(|e| bad(format!("fields.{id}"), e))?;
    }
    for o in world.objects {
        let id = o.id;
        state.insert_object(o).map_err(|e| bad(format!("objects.{}", id.0), e))?;
    }
    Ok(state)
}
