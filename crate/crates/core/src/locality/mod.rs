//! Static locality classification of laws from their declared access
//! footprints.
//!
//! A law is space-point local when it touches one position and its ±1
//! neighbourhood, object local when it additionally reads or writes global
//! attributes of a single compound object, and non-local otherwise.

mod parser;
pub mod specs;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use parser::{parse_model_spec, ParseError, SemanticError, SpecError};

/// One state reference made by a law.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "ref", rename_all = "snake_case")]
pub enum AccessRef {
    /// Cell at a signed offset from the law's own position.
    CellAt { offset: Vec<i64> },
    /// A fixed lattice position.
    CellAbsolute { point: Vec<i64> },
    /// A global attribute of one compound object.
    ObjectGlobal { object: String, attribute: String },
    /// The complete path set of a spatially extended object.
    ObjectAllPaths { object: String },
    WholeSpace,
    WholeObjectSet,
}

impl AccessRef {
    pub fn cell(offset: &[i64]) -> Self {
        AccessRef::CellAt {
            offset: offset.to_vec(),
        }
    }

    pub fn absolute(point: &[i64]) -> Self {
        AccessRef::CellAbsolute {
            point: point.to_vec(),
        }
    }

    pub fn global(object: &str, attribute: &str) -> Self {
        AccessRef::ObjectGlobal {
            object: object.into(),
            attribute: attribute.into(),
        }
    }

    pub fn all_paths(object: &str) -> Self {
        AccessRef::ObjectAllPaths {
            object: object.into(),
        }
    }

    /// Object named by this reference, if any.
    pub fn object(&self) -> Option<&str> {
        match self {
            AccessRef::ObjectGlobal { object, .. } | AccessRef::ObjectAllPaths { object } => {
                Some(object)
            }
            _ => None,
        }
    }
}

fn write_ints(f: &mut fmt::Formatter<'_>, values: &[i64], signed: bool) -> fmt::Result {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        if signed && *v > 0 {
            write!(f, "+{v}")?;
        } else {
            write!(f, "{v}")?;
        }
    }
    Ok(())
}

/// Renders in the model-spec syntax.
impl fmt::Display for AccessRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccessRef::CellAt { offset } => {
                f.write_str("cell(")?;
                write_ints(f, offset, true)?;
                f.write_str(")")
            }
            AccessRef::CellAbsolute { point } => {
                f.write_str("cell@(")?;
                write_ints(f, point, false)?;
                f.write_str(")")
            }
            AccessRef::ObjectGlobal { object, attribute } => write!(f, "global({object}.{attribute})"),
            AccessRef::ObjectAllPaths { object } => write!(f, "allpaths({object})"),
            AccessRef::WholeSpace => f.write_str("space"),
            AccessRef::WholeObjectSet => f.write_str("objects"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessFootprint {
    pub reads: BTreeSet<AccessRef>,
    pub writes: BTreeSet<AccessRef>,
}

impl AccessFootprint {
    pub fn new(
        reads: impl IntoIterator<Item = AccessRef>,
        writes: impl IntoIterator<Item = AccessRef>,
    ) -> Self {
        Self {
            reads: reads.into_iter().collect(),
            writes: writes.into_iter().collect(),
        }
    }

    /// The ±1 stencil around a cell in `dims` dimensions, writing the centre.
    pub fn stencil(dims: usize) -> Self {
        let mut reads = vec![AccessRef::cell(&vec![0; dims])];
        for d in 0..dims {
            for s in [-1, 1] {
                let mut o = vec![0; dims];
                o[d] = s;
                reads.push(AccessRef::cell(&o));
            }
        }
        Self::new(reads, [AccessRef::cell(&vec![0; dims])])
    }

    pub fn all(&self) -> impl Iterator<Item = &AccessRef> {
        self.reads.iter().chain(self.writes.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.reads.is_empty() && self.writes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LocalityClass {
    SpacePointLocal,
    ObjectLocal,
    NonLocal,
}

impl fmt::Display for LocalityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LocalityClass::SpacePointLocal => "SpacePointLocal",
            LocalityClass::ObjectLocal => "ObjectLocal",
            LocalityClass::NonLocal => "NonLocal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectDecl {
    pub id: String,
    pub globals: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawDecl {
    pub id: String,
    pub footprint: AccessFootprint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub objects: Vec<ObjectDecl>,
    pub laws: Vec<LawDecl>,
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model {}", self.name)?;
        for obj in &self.objects {
            writeln!(f, "object {} {{ globals: {} }}", obj.id, obj.globals.join(", "))?;
        }
        for law in &self.laws {
            let join = |set: &BTreeSet<AccessRef>| {
                set.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
            };
            writeln!(
                f,
                "law {} {{ reads: {}; writes: {}; }}",
                law.id,
                join(&law.footprint.reads),
                join(&law.footprint.writes)
            )?;
        }
        Ok(())
    }
}

/// Class of a law plus the references responsible for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawClassification {
    pub class: LocalityClass,
    pub offenders: Vec<AccessRef>,
}

/// Classifies a single footprint.
///
/// Offenders are the references that lifted the class above
/// `SpacePointLocal`; for a `NonLocal` law only the non-local ones are listed.
pub fn classify_footprint(footprint: &AccessFootprint) -> LawClassification {
    let refs: BTreeSet<&AccessRef> = footprint.all().collect();
    let mut nonlocal: BTreeSet<AccessRef> = BTreeSet::new();

    let mut absolute = BTreeSet::new();
    let mut global_objects = BTreeSet::new();
    for r in &refs {
        match r {
            AccessRef::ObjectAllPaths { .. } | AccessRef::WholeSpace | AccessRef::WholeObjectSet => {
                nonlocal.insert((*r).clone());
            }
            AccessRef::CellAt { offset } => {
                if offset.iter().any(|o| o.abs() > 1) {
                    nonlocal.insert((*r).clone());
                }
            }
            AccessRef::CellAbsolute { point } => {
                absolute.insert(point.clone());
            }
            AccessRef::ObjectGlobal { object, .. } => {
                global_objects.insert(object.clone());
            }
        }
    }
    if absolute.len() > 1 {
        nonlocal.extend(
            refs.iter()
                .filter(|r| matches!(r, AccessRef::CellAbsolute { .. }))
                .map(|r| (*r).clone()),
        );
    }
    if global_objects.len() > 1 {
        nonlocal.extend(
            refs.iter()
                .filter(|r| matches!(r, AccessRef::ObjectGlobal { .. }))
                .map(|r| (*r).clone()),
        );
    }
    if !nonlocal.is_empty() {
        return LawClassification {
            class: LocalityClass::NonLocal,
            offenders: nonlocal.into_iter().collect(),
        };
    }
    let globals: Vec<AccessRef> = refs
        .iter()
        .filter(|r| matches!(r, AccessRef::ObjectGlobal { .. }))
        .map(|r| (*r).clone())
        .collect();
    if globals.is_empty() {
        LawClassification {
            class: LocalityClass::SpacePointLocal,
            offenders: Vec::new(),
        }
    } else {
        LawClassification {
            class: LocalityClass::ObjectLocal,
            offenders: globals,
        }
    }
}

pub fn classify_law(law: &LawDecl) -> LocalityClass {
    classify_footprint(&law.footprint).class
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawReport {
    pub law: String,
    pub class: LocalityClass,
    pub offenders: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub model: String,
    pub class: LocalityClass,
    pub laws: Vec<LawReport>,
}

impl LocalityReport {
    /// Laws whose class equals the model class, i.e. the ones that set it.
    pub fn deciding_laws(&self) -> impl Iterator<Item = &LawReport> {
        self.laws.iter().filter(move |l| l.class == self.class)
    }
}

impl fmt::Display for LocalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model {}: {}", self.model, self.class)?;
        for law in &self.laws {
            write!(f, "  law {:<28} {}", law.law, law.class)?;
            if !law.offenders.is_empty() {
                write!(f, "  [{}]", law.offenders.join(", "))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Model class is the maximum over its laws; an empty model is space-point local.
pub fn classify_model(spec: &ModelSpec) -> LocalityReport {
    let laws: Vec<LawReport> = spec
        .laws
        .iter()
        .map(|law| {
            let c = classify_footprint(&law.footprint);
            LawReport {
                law: law.id.clone(),
                class: c.class,
                offenders: c.offenders.iter().map(ToString::to_string).collect(),
            }
        })
        .collect();
    let class = laws
        .iter()
        .map(|l| l.class)
        .max()
        .unwrap_or(LocalityClass::SpacePointLocal);
    LocalityReport {
        model: spec.name.clone(),
        class,
        laws,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fp(reads: &[AccessRef], writes: &[AccessRef]) -> AccessFootprint {
        AccessFootprint::new(reads.iter().cloned(), writes.iter().cloned())
    }

    #[test]
    fn wave_stencil_is_space_point_local() {
        let c = classify_footprint(&AccessFootprint::stencil(1));
        assert_eq!(c.class, LocalityClass::SpacePointLocal);
        assert!(c.offenders.is_empty());
        assert_eq!(
            classify_footprint(&AccessFootprint::stencil(3)).class,
            LocalityClass::SpacePointLocal
        );
    }

    #[test]
    fn wide_stencil_is_nonlocal() {
        let c = classify_footprint(&fp(&[AccessRef::cell(&[2])], &[AccessRef::cell(&[0])]));
        assert_eq!(c.class, LocalityClass::NonLocal);
        assert_eq!(c.offenders, vec![AccessRef::cell(&[2])]);
    }

    #[test]
    fn single_absolute_position_is_local() {
        let c = classify_footprint(&fp(
            &[AccessRef::absolute(&[4]), AccessRef::cell(&[1])],
            &[AccessRef::absolute(&[4])],
        ));
        assert_eq!(c.class, LocalityClass::SpacePointLocal);
    }

    #[test]
    fn two_positions_of_two_masses_are_nonlocal() {
        let c = classify_footprint(&fp(
            &[AccessRef::global("ma", "x"), AccessRef::global("mb", "x")],
            &[AccessRef::global("ma", "x")],
        ));
        assert_eq!(c.class, LocalityClass::NonLocal);
        assert_eq!(c.offenders.len(), 2);

        let c = classify_footprint(&fp(&[AccessRef::absolute(&[3]), AccessRef::absolute(&[9])], &[]));
        assert_eq!(c.class, LocalityClass::NonLocal);
    }

    #[test]
    fn global_flag_of_one_object_is_object_local() {
        let c = classify_footprint(&fp(
            &[AccessRef::global("partner", "collapse"), AccessRef::cell(&[0])],
            &[AccessRef::cell(&[0])],
        ));
        assert_eq!(c.class, LocalityClass::ObjectLocal);
        assert_eq!(c.offenders, vec![AccessRef::global("partner", "collapse")]);
    }

    #[test]
    fn whole_set_references_are_nonlocal() {
        for r in [
            AccessRef::WholeSpace,
            AccessRef::WholeObjectSet,
            AccessRef::all_paths("q"),
        ] {
            let c = classify_footprint(&fp(std::slice::from_ref(&r), &[AccessRef::cell(&[0])]));
            assert_eq!(c.class, LocalityClass::NonLocal);
            assert_eq!(c.offenders, vec![r]);
        }
    }

    #[test]
    fn empty_model_is_space_point_local() {
        let spec = ModelSpec {
            name: "empty".into(),
            objects: vec![],
            laws: vec![],
        };
        let r = classify_model(&spec);
        assert_eq!(r.class, LocalityClass::SpacePointLocal);
        assert!(r.laws.is_empty());
    }

    #[test]
    fn model_class_is_max() {
        let spec = ModelSpec {
            name: "m".into(),
            objects: vec![ObjectDecl {
                id: "q".into(),
                globals: vec!["flag".into()],
            }],
            laws: vec![
                LawDecl {
                    id: "a".into(),
                    footprint: AccessFootprint::stencil(1),
                },
                LawDecl {
                    id: "b".into(),
                    footprint: fp(&[AccessRef::global("q", "flag")], &[AccessRef::cell(&[0])]),
                },
            ],
        };
        let r = classify_model(&spec);
        assert_eq!(r.class, LocalityClass::ObjectLocal);
        assert_eq!(r.deciding_laws().map(|l| l.law.as_str()).collect::<Vec<_>>(), ["b"]);
    }

    fn arb_ref() -> impl Strategy<Value = AccessRef> {
        let name = prop::sample::select(vec!["a", "b", "c"]);
        prop_oneof![
            prop::collection::vec(-2i64..=2, 1..=3).prop_map(|o| AccessRef::CellAt { offset: o }),
            prop::collection::vec(0i64..5, 1..=2).prop_map(|p| AccessRef::CellAbsolute { point: p }),
            (name.clone(), prop::sample::select(vec!["x", "flag"]))
                .prop_map(|(o, a)| AccessRef::global(o, a)),
            name.prop_map(AccessRef::all_paths),
            Just(AccessRef::WholeSpace),
            Just(AccessRef::WholeObjectSet),
        ]
    }

    proptest! {
        #[test]
        fn adding_a_reference_never_lowers_the_class(
            reads in prop::collection::vec(arb_ref(), 0..6),
            writes in prop::collection::vec(arb_ref(), 0..4),
            extra in arb_ref(),
            into_reads in any::<bool>(),
        ) {
            let base = AccessFootprint::new(reads.clone(), writes.clone());
            let mut grown = base.clone();
            if into_reads {
                grown.reads.insert(extra);
            } else {
                grown.writes.insert(extra);
            }
            prop_assert!(classify_footprint(&grown).class >= classify_footprint(&base).class);
        }
    }
}
