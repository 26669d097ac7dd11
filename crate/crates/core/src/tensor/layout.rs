use crate::error::{Error, Result};
use crate::tensor::DenseVector;

/// One named block of parameters inside a flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl LayoutEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Ordered description of how a parameter tree maps onto contiguous storage.
///
/// Entries are laid out in insertion order; each entry is row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamLayout {
    entries: Vec<LayoutEntry>,
    total_len: usize,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, shape: &[usize]) -> &LayoutEntry {
        let entry = LayoutEntry {
            name: name.into(),
            shape: shape.to_vec(),
            offset: self.total_len,
        };
        self.total_len += entry.len();
        self.entries.push(entry);
        self.entries.last().unwrap()
    }

    /// Appends every entry of `other`, prefixing names with `prefix`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &ParamLayout) {
        for e in &other.entries {
            self.push(format!("{prefix}{}", e.name), &e.shape);
        }
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn total_len(&self) -> usize {
        self.total_len
    }

    pub fn get(&self, name: &str) -> Option<&LayoutEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// A named, shaped block of values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }
}

/// Structured parameter values, keyed by entry name in layout order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamTree {
    pub entries: Vec<(String, Tensor)>,
}

impl ParamTree {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        let name = name.into();
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = tensor,
            None => self.entries.push((name, tensor)),
        }
    }
}

/// Packs `params` into one contiguous vector following `layout`.
pub fn flatten(params: &ParamTree, layout: &ParamLayout) -> Result<DenseVector> {
    let mut out = Vec::with_capacity(layout.total_len());
    for entry in layout.entries() {
        let tensor = params
            .get(&entry.name)
            .ok_or_else(|| Error::MissingEntry(entry.name.clone()))?;
        if tensor.shape != entry.shape || tensor.data.len() != entry.len() {
            return Err(Error::ShapeMismatch {
                name: entry.name.clone(),
                expected: entry.shape.clone(),
                actual: tensor.shape.clone(),
            });
        }
        out.extend_from_slice(&tensor.data);
    }
    Ok(DenseVector::from_vec(out))
}

/// Inverse of [`flatten`].
pub fn fold(v: &[f64], layout: &ParamLayout) -> Result<ParamTree> {
    if v.len() != layout.total_len() {
        return Err(Error::LengthMismatch {
            expected: layout.total_len(),
            actual: v.len(),
        });
    }
    let entries = layout
        .entries()
        .iter()
        .map(|e| (e.name.clone(), Tensor::new(&e.shape, v[e.range()].to_vec())))
        .collect();
    Ok(ParamTree { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wb_layout() -> ParamLayout {
        let mut layout = ParamLayout::new();
        layout.push("w", &[2, 2]);
        layout.push("b", &[2]);
        layout
    }

    #[test]
    fn flatten_orders_by_entry_then_row_major() {
        let layout = wb_layout();
        let mut tree = ParamTree::default();
        tree.insert("b", Tensor::new(&[2], vec![5.0, 6.0]));
        tree.insert("w", Tensor::new(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]));
        let v = flatten(&tree, &layout).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);

        let back = fold(&v, &layout).unwrap();
        assert_eq!(back.get("w").unwrap().data, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(back.get("b").unwrap().data, vec![5.0, 6.0]);
    }

    #[test]
    fn empty_layout() {
        let layout = ParamLayout::new();
        assert!(flatten(&ParamTree::default(), &layout).unwrap().is_empty());
    }

    #[test]
    fn errors_name_the_entry() {
        let layout = wb_layout();
        let mut tree = ParamTree::default();
        tree.insert("w", Tensor::new(&[2, 2], vec![0.0; 4]));
        tree.insert("b", Tensor::new(&[3], vec![0.0; 3]));
        match flatten(&tree, &layout) {
            Err(Error::ShapeMismatch { name, .. }) => assert_eq!(name, "b"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(fold(&[1.0; 5], &layout), Err(Error::LengthMismatch { .. })));
    }

    proptest! {
        #[test]
        fn round_trip_is_bitwise(
            shapes in prop::collection::vec(prop::collection::vec(1usize..4, 0..3), 0..5),
            seed in any::<u64>(),
        ) {
            let mut layout = ParamLayout::new();
            for (i, s) in shapes.iter().enumerate() {
                layout.push(format!("p{i}"), s);
            }
            let mut rng = crate::tensor::RngState::new(seed);
            let v = rng.gaussian(layout.total_len());
            let tree = fold(&v, &layout).unwrap();
            let again = flatten(&tree, &layout).unwrap();
            prop_assert!(v.iter().zip(again.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(fold(&again, &layout).unwrap(), tree);
        }
    }
}
