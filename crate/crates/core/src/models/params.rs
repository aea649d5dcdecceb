use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use candle_core::{DType, Device, Tensor, Var};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Named model parameters with seeded initialization.
///
/// A frozen store hands out detached tensors, so nothing downstream records
/// gradients for its parameters.
pub struct ParamStore {
    vars: BTreeMap<String, Var>,
    rng: ChaCha8Rng,
    device: Device,
    frozen: bool,
}

impl ParamStore {
    pub fn new(seed: u64) -> Self {
        Self {
            vars: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            device: Device::Cpu,
            frozen: false,
        }
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    fn insert(&mut self, name: &str, values: Vec<f32>, shape: &[usize]) -> Result<Tensor> {
        if self.vars.contains_key(name) {
            return Err(Error::Checkpoint(format!("parameter {name} registered twice")));
        }
        let var = Var::from_vec(values, shape, &self.device)?;
        self.vars.insert(name.to_string(), var);
        self.get(name)
    }

    /// Uniform in `[-bound, bound]`.
    pub fn uniform(&mut self, name: &str, shape: &[usize], bound: f64) -> Result<Tensor> {
        let count = shape.iter().product();
        let values = (0..count)
            .map(|_| (self.rng.gen_range(-bound..=bound)) as f32)
            .collect();
        self.insert(name, values, shape)
    }

    pub fn constant(&mut self, name: &str, shape: &[usize], value: f32) -> Result<Tensor> {
        let count = shape.iter().product();
        self.insert(name, vec![value; count], shape)
    }

    pub fn get(&self, name: &str) -> Result<Tensor> {
        let var = self
            .vars
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name}")))?;
        Ok(if self.frozen {
            var.as_tensor().detach()
        } else {
            var.as_tensor().clone()
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.keys().map(String::as_str)
    }

    pub fn vars(&self) -> Vec<Var> {
        self.vars.values().cloned().collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.vars.values().map(|v| v.as_tensor().elem_count()).sum()
    }

    /// Overwrites every parameter whose name is also in `other`.
    pub fn copy_matching(&mut self, other: &ParamStore) -> Result<usize> {
        let mut copied = 0;
        for (name, var) in &self.vars {
            if let Some(src) = other.vars.get(name) {
                var.set(src.as_tensor())?;
                copied += 1;
            }
        }
        Ok(copied)
    }

    /// SHA-256 over parameter names, shapes and little-endian values.
    pub fn hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        for (name, var) in &self.vars {
            h.update(name.as_bytes());
            for d in var.as_tensor().dims() {
                h.update((*d as u64).to_le_bytes());
            }
            let values = var.as_tensor().flatten_all()?.to_vec1::<f32>()?;
            for v in values {
                h.update(v.to_le_bytes());
            }
        }
        Ok(hex::encode(h.finalize()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let map: HashMap<String, Tensor> = self
            .vars
            .iter()
            .map(|(k, v)| (k.clone(), v.as_tensor().clone()))
            .collect();
        candle_core::safetensors::save(&map, path)?;
        Ok(())
    }

    /// Loads values for every registered parameter; shapes must match.
    pub fn load(&mut self, path: &Path) -> Result<()> {
        if !path.exists() {
            return Err(Error::Checkpoint(format!("weights file {} not found", path.display())));
        }
        let map = candle_core::safetensors::load(path, &self.device)?;
        for (name, var) in &self.vars {
            let t = map
                .get(name)
                .ok_or_else(|| Error::Checkpoint(format!("weights file lacks {name}")))?;
            if t.dims() != var.as_tensor().dims() {
                return Err(Error::Checkpoint(format!(
                    "{name}: expected shape {:?}, found {:?}",
                    var.as_tensor().dims(),
                    t.dims()
                )));
            }
            var.set(&t.to_dtype(DType::F32)?)?;
        }
        Ok(())
    }
}
