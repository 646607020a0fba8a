//! JSON interchange form:
//! `{"primitives":[{"kind":"line","construction":false,"params":[..]}],
//!   "constraints":[{"kind":"coincident","refs":[{"primitive":0,"slot":"second"}, ..]}]}`

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::Scalar;

use super::{Constraint, ConstraintKind, Primitive, PrimitiveKind, Reference, Sketch, SketchError, Slot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPrimitive {
    pub kind: String,
    #[serde(default)]
    pub construction: bool,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReference {
    pub primitive: usize,
    pub slot: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawConstraint {
    pub kind: String,
    pub refs: Vec<RawReference>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawSketch {
    pub primitives: Vec<RawPrimitive>,
    #[serde(default)]
    pub constraints: Vec<RawConstraint>,
}

impl<T: Scalar> From<&Sketch<T>> for RawSketch {
    fn from(s: &Sketch<T>) -> Self {
        RawSketch {
            primitives: s
                .primitives()
                .iter()
                .map(|p| RawPrimitive {
                    kind: p.kind().name().to_string(),
                    construction: p.is_construction(),
                    params: p.params().iter().map(|v| v.to_f64_lossy()).collect(),
                })
                .collect(),
            constraints: s
                .constraints()
                .iter()
                .map(|c| RawConstraint {
                    kind: c.kind().name().to_string(),
                    refs: c
                        .refs()
                        .iter()
                        .map(|r| RawReference { primitive: r.primitive, slot: r.slot.name().to_string() })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl<T: Scalar> TryFrom<&RawSketch> for Sketch<T> {
    type Error = SketchError;

    fn try_from(raw: &RawSketch) -> Result<Self, SketchError> {
        let prims = raw
            .primitives
            .iter()
            .map(|p| {
                let kind = PrimitiveKind::from_name(&p.kind)?;
                Primitive::new(kind, p.params.iter().map(|&v| T::lit(v)).collect(), p.construction)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cons = raw
            .constraints
            .iter()
            .map(|c| {
                let kind = ConstraintKind::from_name(&c.kind)?;
                let refs = c
                    .refs
                    .iter()
                    .map(|r| Ok(Reference::new(r.primitive, Slot::from_name(&r.slot)?)))
                    .collect::<Result<Vec<_>, SketchError>>()?;
                Constraint::new(kind, refs)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Sketch::new(prims, cons)
    }
}

impl<T: Scalar> Sketch<T> {
    pub fn from_json(text: &str) -> Result<Self, SketchError> {
        let raw: RawSketch = serde_json::from_str(text).map_err(|e| SketchError::Json(e.to_string()))?;
        Self::try_from(&raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&RawSketch::from(self)).expect("sketch serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&RawSketch::from(self)).expect("sketch serializes")
    }
}

impl<T: Scalar> Serialize for Sketch<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawSketch::from(self).serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Sketch<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawSketch::deserialize(deserializer)?;
        Sketch::try_from(&raw).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Reference {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawReference { primitive: self.primitive, slot: self.slot.name().to_string() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Reference {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawReference::deserialize(deserializer)?;
        Ok(Reference::new(raw.primitive, Slot::from_name(&raw.slot).map_err(serde::de::Error::custom)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{"primitives":[{"kind":"line","construction":false,"params":[0.0,0.0,1.0,0.0]},{"kind":"line","construction":true,"params":[1.0,0.0,1.0,1.0]}],"constraints":[{"kind":"coincident","refs":[{"primitive":0,"slot":"second"},{"primitive":1,"slot":"first"}]}]}"#;

    #[test]
    fn exact_field_names() {
        let s = Sketch::<f64>::from_json(DOC).unwrap();
        assert_eq!(s.primitives().len(), 2);
        assert!(s.primitives()[1].is_construction());
        assert_eq!(s.constraints()[0].refs()[0], Reference::new(0, Slot::Second));
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        let expected: serde_json::Value = serde_json::from_str(DOC).unwrap();
        assert_eq!(v, expected);
    }

    #[test]
    fn unknown_kind_is_typed_error() {
        let doc = r#"{"primitives":[{"kind":"spline","params":[0.0]}]}"#;
        assert_eq!(
            Sketch::<f64>::from_json(doc).unwrap_err(),
            SketchError::UnknownPrimitiveKind("spline".into())
        );
    }

    #[test]
    fn doubles_round_trip_exactly() {
        let doc = r#"{"primitives":[{"kind":"point","params":[0.1,-0.30000000000000004]}]}"#;
        let s = Sketch::<f64>::from_json(doc).unwrap();
        let back = Sketch::<f64>::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }
}
