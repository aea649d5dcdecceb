use candle_core::{DType, Device, Tensor};
use serde::{Deserialize, Serialize};

use super::net::{sinusoid, EncoderLayer, Linear, LayerNorm};
use super::ParamStore;
use crate::error::{Error, Result};
use crate::motion::MotionSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dim: usize,
    pub joints: usize,
    pub layers: usize,
    pub width: usize,
    pub heads: usize,
    pub ff: usize,
    /// Prompt classes including the null class at index 0.
    pub vocab: usize,
}

impl ModelConfig {
    pub fn new(joints: usize, vocab: usize) -> Self {
        Self {
            dim: 12 * joints - 1,
            joints,
            layers: 4,
            width: 128,
            heads: 4,
            ff: 256,
            vocab,
        }
    }

    pub fn condition_dim(&self) -> usize {
        6 * self.joints + 6
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.heads == 0 || self.width % self.heads != 0 || self.width % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "width {} must be even and divisible by heads {}",
                self.width, self.heads
            )));
        }
        if self.layers == 0 || self.vocab == 0 {
            return Err(Error::InvalidArgument("model needs at least one layer and one prompt class".into()));
        }
        Ok(())
    }
}

/// Shared trunk: input projection, step and prompt embeddings and the layer stack.
struct Trunk {
    in_proj: Linear,
    time1: Linear,
    time2: Linear,
    prompt_emb: Tensor,
    layers: Vec<EncoderLayer>,
}

impl Trunk {
    fn new(store: &mut ParamStore, cfg: &ModelConfig) -> Result<Self> {
        let h = cfg.width;
        Ok(Self {
            in_proj: Linear::new(store, "in_proj", cfg.dim, h, 1.0)?,
            time1: Linear::new(store, "time1", h, h, 1.0)?,
            time2: Linear::new(store, "time2", h, h, 1.0)?,
            prompt_emb: store.uniform("prompt_emb", &[cfg.vocab, h], 1.0)?,
            layers: (0..cfg.layers)
                .map(|i| EncoderLayer::new(store, &format!("layers.{i}"), h, cfg.heads, cfg.ff))
                .collect::<Result<_>>()?,
        })
    }

    fn load(store: &ParamStore, cfg: &ModelConfig) -> Result<Self> {
        Ok(Self {
            in_proj: Linear::load(store, "in_proj")?,
            time1: Linear::load(store, "time1")?,
            time2: Linear::load(store, "time2")?,
            prompt_emb: store.get("prompt_emb")?,
            layers: (0..cfg.layers)
                .map(|i| EncoderLayer::load(store, &format!("layers.{i}"), cfg.heads))
                .collect::<Result<_>>()?,
        })
    }

    /// Input tokens `(B, N, H)`.
    fn embed(&self, x: &Tensor, t: &[usize], prompts: &[u32], width: usize) -> Result<Tensor> {
        let (b, n, _) = x.dims3()?;
        if t.len() != b || prompts.len() != b {
            return Err(Error::DimensionMismatch {
                what: "step/prompt count",
                expected: b,
                got: t.len().min(prompts.len()),
            });
        }
        let dev = x.device();
        let temb = Tensor::from_vec(sinusoid(t, width), (b, width), dev)?;
        let temb = self.time2.forward(&self.time1.forward(&temb)?.silu()?)?;
        let ids = Tensor::from_vec(prompts.to_vec(), b, dev)?;
        let pemb = self.prompt_emb.index_select(&ids, 0)?;
        let positions: Vec<usize> = (0..n).collect();
        let pos = Tensor::from_vec(sinusoid(&positions, width), (1, n, width), dev)?;
        let tokens = self.in_proj.forward(x)?.broadcast_add(&pos)?;
        Ok(tokens.broadcast_add(&(temb + pemb)?.unsqueeze(1)?)?)
    }
}

/// The x0-predicting transformer.
pub struct Denoiser {
    pub config: ModelConfig,
    store: ParamStore,
    trunk: Trunk,
    final_ln: LayerNorm,
    out_proj: Linear,
}

impl Denoiser {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new(seed);
        let trunk = Trunk::new(&mut store, &config)?;
        let final_ln = LayerNorm::new(&mut store, "final_ln", config.width)?;
        // small output weights: predictions start near the zero mean
        let out_proj = Linear::new(&mut store, "out_proj", config.width, config.dim, 0.01)?;
        Ok(Self {
            config,
            store,
            trunk,
            final_ln,
            out_proj,
        })
    }

    fn rebuild(config: ModelConfig, store: ParamStore) -> Result<Self> {
        Ok(Self {
            trunk: Trunk::load(&store, &config)?,
            final_ln: LayerNorm::load(&store, "final_ln")?,
            out_proj: Linear::load(&store, "out_proj")?,
            config,
            store,
        })
    }

    /// Stops gradient tracking for every parameter.
    pub fn freeze(mut self) -> Result<Self> {
        self.store.set_frozen(true);
        Self::rebuild(self.config, self.store)
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// `x`: `(B, N, D)`. With `residuals`, layer `l`'s output gains
    /// `residuals[l]`.
    pub fn forward(&self, x: &Tensor, t: &[usize], prompts: &[u32], residuals: Option<&[Tensor]>) -> Result<Tensor> {
        if let Some(r) = residuals {
            if r.len() != self.config.layers {
                return Err(Error::DimensionMismatch {
                    what: "residual feature count",
                    expected: self.config.layers,
                    got: r.len(),
                });
            }
        }
        let mut h = self.trunk.embed(x, t, prompts, self.config.width)?;
        for (l, layer) in self.trunk.layers.iter().enumerate() {
            h = layer.forward(&h)?;
            if let Some(r) = residuals {
                h = (h + &r[l])?;
            }
        }
        self.out_proj.forward(&self.final_ln.forward(&h)?)
    }
}

/// Trainable copy of the denoiser trunk plus condition projection and
/// zero-initialized links into the denoiser's layers.
pub struct ControlNet {
    pub config: ModelConfig,
    store: ParamStore,
    trunk: Trunk,
    cond_proj: Linear,
    links: Vec<Linear>,
}

impl ControlNet {
    /// Copies the denoiser's trunk weights; links start at exactly zero.
    pub fn from_denoiser(denoiser: &Denoiser, seed: u64) -> Result<Self> {
        let config = denoiser.config;
        let mut store = ParamStore::new(seed);
        let trunk = Trunk::new(&mut store, &config)?;
        let cond_proj = Linear::new(&mut store, "cond_proj", config.condition_dim(), config.width, 1.0)?;
        let links = (0..config.layers)
            .map(|i| Linear::zeros(&mut store, &format!("links.{i}"), config.width, config.width))
            .collect::<Result<_>>()?;
        store.copy_matching(denoiser.store())?;
        Ok(Self {
            config,
            store,
            trunk,
            cond_proj,
            links,
        })
    }

    /// Registers the parameter layout without copying weights, for loading.
    pub fn empty(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new(0);
        let trunk = Trunk::new(&mut store, &config)?;
        let cond_proj = Linear::new(&mut store, "cond_proj", config.condition_dim(), config.width, 1.0)?;
        let links = (0..config.layers)
            .map(|i| Linear::zeros(&mut store, &format!("links.{i}"), config.width, config.width))
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            store,
            trunk,
            cond_proj,
            links,
        })
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Residual features, one `(B, N, H)` tensor per denoiser layer.
    pub fn forward(&self, x: &Tensor, t: &[usize], prompts: &[u32], cond: &Tensor) -> Result<Vec<Tensor>> {
        let mut h = self.trunk.embed(x, t, prompts, self.config.width)?;
        h = (h + self.cond_proj.forward(cond)?)?;
        let mut out = Vec::with_capacity(self.links.len());
        for (layer, link) in self.trunk.layers.iter().zip(&self.links) {
            h = layer.forward(&h)?;
            out.push(link.forward(&h)?);
        }
        Ok(out)
    }
}

/// Stacks motions into a `(B, N, D)` `f32` tensor.
pub fn batch_tensor(batch: &[MotionSequence], device: &Device) -> Result<Tensor> {
    let first = batch
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty batch".into()))?;
    let (n, d) = (first.frames(), first.dim());
    let mut data = Vec::with_capacity(batch.len() * n * d);
    for m in batch {
        if !m.same_shape(first) {
            return Err(Error::DimensionMismatch {
                what: "batch motion size",
                expected: n * d,
                got: m.frames() * m.dim(),
            });
        }
        data.extend(m.as_slice().iter().map(|v| *v as f32));
    }
    Ok(Tensor::from_vec(data, (batch.len(), n, d), device)?)
}

pub fn unbatch(t: &Tensor) -> Result<Vec<MotionSequence>> {
    let (b, n, d) = t.dims3()?;
    let flat = t.to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?;
    (0..b)
        .map(|i| {
            MotionSequence::new(n, d, flat[i * n * d..(i + 1) * n * d].iter().map(|v| *v as f64).collect())
        })
        .collect()
}
