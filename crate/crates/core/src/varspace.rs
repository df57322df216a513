//! Named tensor variables and their packing into the flat vector the solver
//! iterates on.
//!
//! Entries are concatenated in declaration order and every tensor is
//! flattened row-major.

use std::collections::BTreeMap;

use nalgebra::DVector;
use thiserror::Error;

use crate::tensor::Tensor;

/// The flat optimization vector. Its length is fixed by the owning [`VarSpace`].
pub type FlatVector = DVector<f64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VarSpaceError {
    #[error("variable name must be nonempty")]
    EmptyName,
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("variable `{0}` has an empty shape")]
    EmptyShape(String),
    #[error("variable `{0}` has a zero-sized dimension")]
    ZeroDimension(String),
    #[error("variable `{name}` has shape {found:?}, expected {expected:?}")]
    ShapeMismatch { name: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("missing variable `{0}`")]
    MissingVariable(String),
    #[error("unexpected variable `{0}`")]
    UnknownVariable(String),
    #[error("flat vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarEntry {
    pub name: String,
    pub shape: Vec<usize>,
    offset: usize,
}

impl VarEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offset of this variable's first element inside the flat vector.
    pub fn offset(&self) -> usize {
        self.offset
    }
}

/// An ordered, immutable set of named tensor variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSpace {
    entries: Vec<VarEntry>,
    total_dim: usize,
}

/// Values for every variable of a [`VarSpace`], keyed by name.
pub type VarStruct = BTreeMap<String, Tensor>;

impl VarSpace {
    pub fn new<S: Into<String>>(
        specs: impl IntoIterator<Item = (S, Vec<usize>)>,
    ) -> Result<Self, VarSpaceError> {
        let mut entries: Vec<VarEntry> = Vec::new();
        let mut offset = 0;
        for (name, shape) in specs {
            let name = name.into();
            if name.is_empty() {
                return Err(VarSpaceError::EmptyName);
            }
            if entries.iter().any(|e| e.name == name) {
                return Err(VarSpaceError::DuplicateName(name));
            }
            if shape.is_empty() {
                return Err(VarSpaceError::EmptyShape(name));
            }
            if shape.contains(&0) {
                return Err(VarSpaceError::ZeroDimension(name));
            }
            let len: usize = shape.iter().product();
            entries.push(VarEntry { name, shape, offset });
            offset += len;
        }
        Ok(Self { entries, total_dim: offset })
    }

    pub fn entries(&self) -> &[VarEntry] {
        &self.entries
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn get(&self, name: &str) -> Option<&VarEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn pack(&self, vars: &VarStruct) -> Result<FlatVector, VarSpaceError> {
        if let Some(extra) = vars.keys().find(|k| self.get(k).is_none()) {
            return Err(VarSpaceError::UnknownVariable(extra.clone()));
        }
        let mut out = Vec::with_capacity(self.total_dim);
        for entry in &self.entries {
            let t = vars
                .get(&entry.name)
                .ok_or_else(|| VarSpaceError::MissingVariable(entry.name.clone()))?;
            if t.shape() != entry.shape.as_slice() {
                return Err(VarSpaceError::ShapeMismatch {
                    name: entry.name.clone(),
                    expected: entry.shape.clone(),
                    found: t.shape().to_vec(),
                });
            }
            out.extend_from_slice(t.data());
        }
        Ok(FlatVector::from_vec(out))
    }

    pub fn unpack(&self, x: &FlatVector) -> Result<VarStruct, VarSpaceError> {
        self.unpack_slice(x.as_slice())
    }

    pub fn unpack_slice(&self, x: &[f64]) -> Result<VarStruct, VarSpaceError> {
        if x.len() != self.total_dim {
            return Err(VarSpaceError::LengthMismatch { expected: self.total_dim, found: x.len() });
        }
        Ok(self
            .entries
            .iter()
            .map(|e| {
                let data = x[e.offset..e.offset + e.len()].to_vec();
                (e.name.clone(), Tensor::new(e.shape.clone(), data).expect("entry length"))
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn space(specs: &[(&str, &[usize])]) -> VarSpace {
        VarSpace::new(specs.iter().map(|(n, s)| (*n, s.to_vec()))).unwrap()
    }

    #[test]
    fn define() {
        assert_eq!(space(&[("q", &[3, 1])]).total_dim(), 3);
        assert_eq!(space(&[("a", &[2, 2]), ("b", &[3])]).total_dim(), 7);
        assert_eq!(
            VarSpace::new([("a", vec![2]), ("a", vec![2])]),
            Err(VarSpaceError::DuplicateName("a".into()))
        );
        assert_eq!(VarSpace::new([("a", vec![])]), Err(VarSpaceError::EmptyShape("a".into())));
        assert_eq!(VarSpace::new([("a", vec![2, 0])]), Err(VarSpaceError::ZeroDimension("a".into())));
        assert_eq!(VarSpace::new([("", vec![1])]), Err(VarSpaceError::EmptyName));
    }

    #[test]
    fn pack_row_major_and_in_order() {
        let s = space(&[("a", &[2, 2])]);
        let v = VarStruct::from([("a".into(), Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]))]);
        assert_eq!(s.pack(&v).unwrap().as_slice(), &[1.0, 2.0, 3.0, 4.0]);

        let s = space(&[("a", &[1]), ("b", &[2])]);
        let v = VarStruct::from([
            ("b".into(), Tensor::vector(vec![6.0, 7.0])),
            ("a".into(), Tensor::vector(vec![5.0])),
        ]);
        assert_eq!(s.pack(&v).unwrap().as_slice(), &[5.0, 6.0, 7.0]);
    }

    #[test]
    fn pack_errors() {
        let s = space(&[("a", &[1])]);
        let v = VarStruct::from([("a".into(), Tensor::vector(vec![5.0, 5.0]))]);
        assert!(matches!(s.pack(&v), Err(VarSpaceError::ShapeMismatch { .. })));
        assert_eq!(s.pack(&VarStruct::new()), Err(VarSpaceError::MissingVariable("a".into())));
    }

    #[test]
    fn unpack_cases() {
        let s = space(&[("a", &[2, 2])]);
        let v = s.unpack(&FlatVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(v["a"], Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]));

        let empty = VarSpace::new(Vec::<(String, Vec<usize>)>::new()).unwrap();
        assert!(empty.unpack(&FlatVector::zeros(0)).unwrap().is_empty());

        let s = space(&[("a", &[3])]);
        assert_eq!(
            s.unpack(&FlatVector::from_vec(vec![1.0, 2.0])),
            Err(VarSpaceError::LengthMismatch { expected: 3, found: 2 })
        );
    }

    proptest! {
        #[test]
        fn round_trips_are_bit_exact(xs in proptest::collection::vec(any::<f64>(), 7)) {
            let s = space(&[("a", &[2, 2]), ("b", &[3])]);
            let x = FlatVector::from_vec(xs);
            let back = s.pack(&s.unpack(&x).unwrap()).unwrap();
            for (u, v) in back.iter().zip(x.iter()) {
                prop_assert_eq!(u.to_bits(), v.to_bits());
            }
        }

        #[test]
        fn pack_is_linear(
            u in proptest::collection::vec(-1e3..1e3f64, 7),
            v in proptest::collection::vec(-1e3..1e3f64, 7),
            a in -10.0..10.0f64,
            b in -10.0..10.0f64,
        ) {
            let s = space(&[("a", &[2, 2]), ("b", &[3])]);
            let su = s.unpack_slice(&u).unwrap();
            let sv = s.unpack_slice(&v).unwrap();
            let combo: VarStruct = su
                .iter()
                .map(|(k, t)| (k.clone(), t.zip(&sv[k], |p, q| a * p + b * q)))
                .collect();
            let lhs = s.pack(&combo).unwrap();
            let rhs = s.pack(&su).unwrap() * a + s.pack(&sv).unwrap() * b;
            prop_assert_eq!(lhs, rhs);
        }
    }
}
