//! Model specs shipped with the crate.

use super::{parse_model_spec, ModelSpec, SpecError};

pub const WAVE_CA: &str = include_str!("../../../../specs/wave-ca.model");
pub const PENDULUM: &str = include_str!("../../../../specs/pendulum.model");
pub const CENTRAL_QT: &str = include_str!("../../../../specs/central-qt.model");
pub const REFINED_QT: &str = include_str!("../../../../specs/refined-qt.model");

/// `(file stem, source)` for every bundled spec.
pub const ALL: [(&str, &str); 4] = [
    ("wave-ca", WAVE_CA),
    ("pendulum", PENDULUM),
    ("central-qt", CENTRAL_QT),
    ("refined-qt", REFINED_QT),
];

pub fn load(name: &str) -> Option<Result<ModelSpec, SpecError>> {
    ALL.iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_model_spec(text))
}
