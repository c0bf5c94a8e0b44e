//! Named parameter store with Adam state.
//!
//! Parameters live in a `BTreeMap` so iteration order (and therefore every
//! downstream artifact) is deterministic. The store is single-owner mutable
//! during training; a frozen store is safe to share for inference.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::matrix::Matrix;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// One tensor plus its Adam moment buffers.
#[derive(Debug, Clone)]
pub struct Param {
    pub value: Matrix,
    m: Matrix,
    v: Matrix,
}

/// Named tensors, per-tensor Adam moments, and a shared step counter.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    params: BTreeMap<String, Param>,
    step: u64,
}

/// Gradients keyed by parameter name. Missing keys mean zero gradient.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    grads: BTreeMap<String, Matrix>,
}

impl Gradients {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accumulate into the named slot, creating it on first touch.
    pub fn add(&mut self, name: &str, grad: Matrix) {
        match self.grads.get_mut(name) {
            Some(g) => g.add_assign(&grad),
            None => {
                self.grads.insert(name.to_string(), grad);
            }
        }
    }

    /// Accumulate into a single row of the named slot (embedding updates).
    pub fn add_row(&mut self, name: &str, shape: (usize, usize), row: usize, delta: &[f64]) {
        let g = self
            .grads
            .entry(name.to_string())
            .or_insert_with(|| Matrix::zeros(shape.0, shape.1));
        for (a, b) in g.row_mut(row).iter_mut().zip(delta) {
            *a += b;
        }
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.grads.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Matrix)> {
        self.grads.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// Merge another gradient set into this one.
    pub fn merge(&mut self, other: Gradients) {
        for (name, g) in other.grads {
            self.add(&name, g);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in self.grads.values_mut() {
            g.scale(s);
        }
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a zero-initialized tensor.
    pub fn insert_zeros(&mut self, name: &str, rows: usize, cols: usize) {
        self.insert(name, Matrix::zeros(rows, cols));
    }

    /// Register a tensor with explicit values.
    pub fn insert(&mut self, name: &str, value: Matrix) {
        let (r, c) = value.shape();
        self.params.insert(
            name.to_string(),
            Param { value, m: Matrix::zeros(r, c), v: Matrix::zeros(r, c) },
        );
    }

    /// Glorot-uniform init: ±√(6/(fan_in+fan_out)), seeded ChaCha stream.
    pub fn insert_glorot(&mut self, name: &str, rows: usize, cols: usize, rng: &mut ChaCha8Rng) {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let value = Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..bound));
        self.insert(name, value);
    }

    pub fn get(&self, name: &str) -> &Matrix {
        &self.params.get(name).unwrap_or_else(|| panic!("unknown parameter {name:?}")).value
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Matrix {
        &mut self.params.get_mut(name).unwrap_or_else(|| panic!("unknown parameter {name:?}")).value
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }

    pub fn tensors(&self) -> impl Iterator<Item = (&String, &Matrix)> {
        self.params.iter().map(|(k, p)| (k, &p.value))
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn param_count(&self) -> usize {
        self.params.values().map(|p| p.value.len()).sum()
    }

    /// One Adam update (β1=0.9, β2=0.999, ε=1e-8) with decoupled weight
    /// decay. Parameters without a gradient entry decay only their moments'
    /// bias correction (their moments and values stay untouched).
    ///
    /// Errors if any gradient or updated value is non-finite.
    pub fn adam_step(&mut self, grads: &Gradients, lr: f64, decay: f64) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        for (name, param) in self.params.iter_mut() {
            let Some(grad) = grads.get(name) else { continue };
            if grad.shape() != param.value.shape() {
                return Err(Error::Shape(format!(
                    "gradient for {name:?} has shape {:?}, parameter has {:?}",
                    grad.shape(),
                    param.value.shape()
                )));
            }
            if !grad.is_finite() {
                return Err(Error::NonFinite(format!("gradient of {name}")));
            }
            for i in 0..param.value.data.len() {
                let g = grad.data[i];
                let m = ADAM_BETA1 * param.m.data[i] + (1.0 - ADAM_BETA1) * g;
                let v = ADAM_BETA2 * param.v.data[i] + (1.0 - ADAM_BETA2) * g * g;
                param.m.data[i] = m;
                param.v.data[i] = v;
                let m_hat = m / bc1;
                let v_hat = v / bc2;
                let p = &mut param.value.data[i];
                *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                *p -= lr * decay * *p;
            }
            if !param.value.is_finite() {
                return Err(Error::NonFinite(format!("parameter {name} after Adam step")));
            }
        }
        Ok(())
    }
}

/// Seeded RNG for parameter init and sampling. ChaCha8 is a counter-based
/// stream, so draws are reproducible across platforms.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
