//! Named parameter registry. Every trainable tensor is addressable by a
//! dotted name so the gradient checker and the optimizer can iterate the
//! full set in a stable order.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet { entries: Vec::new(), index: HashMap::new() }
    }

    /// Registers a tensor initialized uniform(-0.1, 0.1). Names must be unique.
    pub fn register<R: Rng>(&mut self, name: &str, rows: usize, cols: usize, rng: &mut R) -> usize {
        assert!(!self.index.contains_key(name), "duplicate parameter {name}");
        let mut t = Tensor::zeros(rows, cols);
        for v in t.data.iter_mut() {
            *v = rng.gen_range(-0.1..0.1);
        }
        let id = self.entries.len();
        self.entries.push((name.to_string(), t));
        self.index.insert(name.to_string(), id);
        id
    }

    /// Rebuilds the name index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.clone(), i))
            .collect();
    }

    pub fn id(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Lookup(format!("parameter {name}")))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.entries[id].0
    }

    pub fn tensor(&self, id: usize) -> &Tensor {
        &self.entries[id].1
    }

    pub fn tensor_mut(&mut self, id: usize) -> &mut Tensor {
        &mut self.entries[id].1
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        Ok(self.tensor(self.id(name)?))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        let id = self.id(name)?;
        Ok(self.tensor_mut(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    /// Fresh zero gradients with matching shapes.
    pub fn zero_grads(&self) -> Gradients {
        Gradients {
            by_id: self
                .entries
                .iter()
                .map(|(_, t)| Tensor::zeros(t.rows, t.cols))
                .collect(),
        }
    }
}

impl Default for ParamSet {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradient tensors aligned with a `ParamSet` by id.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub by_id: Vec<Tensor>,
}

impl Gradients {
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        assert_eq!(self.by_id.len(), other.by_id.len());
        for (a, b) in self.by_id.iter_mut().zip(other.by_id.iter()) {
            for (x, y) in a.data.iter_mut().zip(b.data.iter()) {
                *x += scale * y;
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.by_id.iter().map(|t| t.frobenius_sq()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.by_id.iter_mut() {
            for v in t.data.iter_mut() {
                *v *= s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn register_and_lookup() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = ParamSet::new();
        let id = p.register("enc.W", 2, 3, &mut rng);
        assert_eq!(p.id("enc.W").unwrap(), id);
        assert_eq!(p.tensor(id).rows, 2);
        assert!(p.tensor(id).data.iter().all(|v| v.abs() < 0.1));
        assert!(p.id("missing").is_err());
    }

    #[test]
    fn registration_order_is_deterministic() {
        let build = || {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut p = ParamSet::new();
            p.register("a", 2, 2, &mut rng);
            p.register("b", 1, 4, &mut rng);
            p
        };
        let p1 = build();
        let p2 = build();
        assert_eq!(p1.entries, p2.entries);
    }
}
