use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::numerics::{Scalar, Tape, Tensor, Var};
use crate::{Error, Result};

/// Named `f32` parameter tensors in a fixed order.
///
/// The order is the checkpoint order and the order gradients are handed to
/// the optimizer in.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    entries: Vec<(String, Tensor<f32>)>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<f32>) {
        let name = name.into();
        debug_assert!(self.get(&name).is_none(), "duplicate parameter {name}");
        self.entries.push((name, value));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<f32>> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<f32>> {
        self.entries.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn require(&self, name: &str) -> Result<&Tensor<f32>> {
        self.get(name)
            .ok_or_else(|| Error::Data(format!("missing parameter {name}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<f32>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor<f32>> {
        self.entries.iter_mut().map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_values(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    /// Records every parameter on `tape` as a trainable leaf.
    pub fn bind<T: Scalar>(&self, tape: &mut Tape<T>) -> Bound {
        self.bind_with(tape, true)
    }

    /// Records every parameter as a constant (inference).
    pub fn bind_frozen<T: Scalar>(&self, tape: &mut Tape<T>) -> Bound {
        self.bind_with(tape, false)
    }

    /// Handles for parameters already recorded on a tape, in store order.
    pub fn attach(&self, vars: &[Var]) -> Result<Bound> {
        if vars.len() != self.entries.len() {
            return Err(Error::Data(format!(
                "{} handles for {} parameters",
                vars.len(),
                self.entries.len()
            )));
        }
        let index = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.clone(), i))
            .collect();
        Ok(Bound {
            vars: vars.to_vec(),
            index,
        })
    }

    fn bind_with<T: Scalar>(&self, tape: &mut Tape<T>, trainable: bool) -> Bound {
        let mut vars = Vec::with_capacity(self.entries.len());
        let mut index = HashMap::with_capacity(self.entries.len());
        for (i, (name, t)) in self.entries.iter().enumerate() {
            let v = if trainable {
                tape.param(t.cast())
            } else {
                tape.constant(t.cast())
            };
            vars.push(v);
            index.insert(name.clone(), i);
        }
        Bound { vars, index }
    }

    /// Gradients of every bound parameter, in store order, as `f32`.
    pub fn gradients<T: Scalar>(&self, tape: &Tape<T>, bound: &Bound) -> Vec<Tensor<f32>> {
        self.entries
            .iter()
            .zip(&bound.vars)
            .map(|((_, t), &v)| match tape.grad(v) {
                Some(g) => g.cast(),
                None => Tensor::zeros(t.shape().to_vec()),
            })
            .collect()
    }
}

/// Tape handles for a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Bound {
    vars: Vec<Var>,
    index: HashMap<String, usize>,
}

impl Bound {
    pub fn var(&self, name: &str) -> Result<Var> {
        self.index
            .get(name)
            .map(|&i| self.vars[i])
            .ok_or_else(|| Error::Data(format!("missing parameter {name}")))
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Glorot/Xavier uniform initialization on `U(−a, a)`, `a = √(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Tensor<f32> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.random_range(-limit..limit) as f32).collect();
    Tensor::from_parts(shape.to_vec(), data)
}
