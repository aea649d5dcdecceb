//! Transformer building blocks on plain candle ops.

use candle_core::{Tensor, D};

use super::ParamStore;
use crate::error::Result;

pub struct Linear {
    weight: Tensor,
    bias: Tensor,
}

impl Linear {
    /// PyTorch-style uniform init scaled by `gain`.
    pub fn new(store: &mut ParamStore, name: &str, inp: usize, out: usize, gain: f64) -> Result<Self> {
        let bound = gain / (inp as f64).sqrt();
        Ok(Self {
            weight: store.uniform(&format!("{name}.weight"), &[out, inp], bound)?,
            bias: store.uniform(&format!("{name}.bias"), &[out], bound)?,
        })
    }

    pub fn zeros(store: &mut ParamStore, name: &str, inp: usize, out: usize) -> Result<Self> {
        Ok(Self {
            weight: store.constant(&format!("{name}.weight"), &[out, inp], 0.0)?,
            bias: store.constant(&format!("{name}.bias"), &[out], 0.0)?,
        })
    }

    pub fn load(store: &ParamStore, name: &str) -> Result<Self> {
        Ok(Self {
            weight: store.get(&format!("{name}.weight"))?,
            bias: store.get(&format!("{name}.bias"))?,
        })
    }

    /// `x`: `(..., inp)`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let w = self.weight.t()?;
        let y = match x.rank() {
            3 => {
                let (b, n, i) = x.dims3()?;
                x.reshape((b * n, i))?.matmul(&w)?.reshape((b, n, ()))?
            }
            _ => x.matmul(&w)?,
        };
        Ok(y.broadcast_add(&self.bias)?)
    }
}

pub struct LayerNorm {
    weight: Tensor,
    bias: Tensor,
}

const LN_EPS: f64 = 1e-5;

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Result<Self> {
        Ok(Self {
            weight: store.constant(&format!("{name}.weight"), &[dim], 1.0)?,
            bias: store.constant(&format!("{name}.bias"), &[dim], 0.0)?,
        })
    }

    pub fn load(store: &ParamStore, name: &str) -> Result<Self> {
        Ok(Self {
            weight: store.get(&format!("{name}.weight"))?,
            bias: store.get(&format!("{name}.bias"))?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mean = x.mean_keepdim(D::Minus1)?;
        let xc = x.broadcast_sub(&mean)?;
        let var = xc.sqr()?.mean_keepdim(D::Minus1)?;
        let xn = xc.broadcast_div(&(var + LN_EPS)?.sqrt()?)?;
        Ok(xn.broadcast_mul(&self.weight)?.broadcast_add(&self.bias)?)
    }
}

fn softmax_last(x: &Tensor) -> Result<Tensor> {
    let max = x.max_keepdim(D::Minus1)?.detach();
    let e = x.broadcast_sub(&max)?.exp()?;
    let s = e.sum_keepdim(D::Minus1)?;
    Ok(e.broadcast_div(&s)?)
}

/// Pre-norm self-attention encoder layer.
pub struct EncoderLayer {
    heads: usize,
    ln1: LayerNorm,
    qkv: Linear,
    proj: Linear,
    ln2: LayerNorm,
    ff1: Linear,
    ff2: Linear,
}

impl EncoderLayer {
    pub fn new(store: &mut ParamStore, name: &str, width: usize, heads: usize, ff: usize) -> Result<Self> {
        Ok(Self {
            heads,
            ln1: LayerNorm::new(store, &format!("{name}.ln1"), width)?,
            qkv: Linear::new(store, &format!("{name}.qkv"), width, 3 * width, 1.0)?,
            proj: Linear::new(store, &format!("{name}.proj"), width, width, 1.0)?,
            ln2: LayerNorm::new(store, &format!("{name}.ln2"), width)?,
            ff1: Linear::new(store, &format!("{name}.ff1"), width, ff, 1.0)?,
            ff2: Linear::new(store, &format!("{name}.ff2"), ff, width, 1.0)?,
        })
    }

    pub fn load(store: &ParamStore, name: &str, heads: usize) -> Result<Self> {
        Ok(Self {
            heads,
            ln1: LayerNorm::load(store, &format!("{name}.ln1"))?,
            qkv: Linear::load(store, &format!("{name}.qkv"))?,
            proj: Linear::load(store, &format!("{name}.proj"))?,
            ln2: LayerNorm::load(store, &format!("{name}.ln2"))?,
            ff1: Linear::load(store, &format!("{name}.ff1"))?,
            ff2: Linear::load(store, &format!("{name}.ff2"))?,
        })
    }

    /// `x`: `(B, N, H)`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, n, h) = x.dims3()?;
        let hd = h / self.heads;
        let qkv = self.qkv.forward(&self.ln1.forward(x)?)?;
        let split = |i: usize| -> Result<Tensor> {
            Ok(qkv
                .narrow(2, i * h, h)?
                .reshape((b, n, self.heads, hd))?
                .transpose(1, 2)?
                .contiguous()?)
        };
        let (q, k, v) = (split(0)?, split(1)?, split(2)?);
        let scores = (q.matmul(&k.t()?.contiguous()?)? / (hd as f64).sqrt())?;
        let attn = softmax_last(&scores)?.matmul(&v)?;
        let attn = attn.transpose(1, 2)?.contiguous()?.reshape((b, n, h))?;
        let x = (x + self.proj.forward(&attn)?)?;
        let ff = self.ff2.forward(&self.ff1.forward(&self.ln2.forward(&x)?)?.gelu()?)?;
        Ok((x + ff)?)
    }
}

/// Sinusoidal features, `(len, dim)`, for integer positions.
pub fn sinusoid(positions: &[usize], dim: usize) -> Vec<f32> {
    let half = dim / 2;
    let mut out = vec![0f32; positions.len() * dim];
    for (r, &p) in positions.iter().enumerate() {
        for i in 0..half {
            let freq = (-(10000f64.ln()) * i as f64 / half as f64).exp();
            let a = p as f64 * freq;
            out[r * dim + 2 * i] = a.sin() as f32;
            out[r * dim + 2 * i + 1] = a.cos() as f32;
        }
    }
    out
}
