use serde::{Deserialize, Serialize};

use super::ModelError;

/// One strided 1-D convolution of the waveform front end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    pub kernel: usize,
    pub stride: usize,
    pub channels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub sample_rate: u32,
    pub conv_layers: Vec<ConvLayerSpec>,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub k_units: usize,
    /// Width of the projection compared against unit embeddings.
    pub proj_dim: usize,
    pub temperature: f64,
    pub mask_span: usize,
    pub mask_start_prob: f64,
    pub max_pos: usize,
}

/// Output frames per second of the front end.
pub const FRAME_RATE: u32 = 50;

fn factor_strides(mut n: usize) -> Vec<usize> {
    let mut strides = Vec::new();
    for f in [5, 4, 3, 2] {
        while n.is_multiple_of(f) && n > 1 && strides.len() < 4 {
            strides.push(f);
            n /= f;
        }
    }
    if n > 1 {
        strides.push(n);
    }
    strides
}

impl EncoderConfig {
    /// Toy configuration: d_model 32, two layers of two heads, 16 conv channels,
    /// strides whose product gives 50 frames per second.
    pub fn for_rate(sample_rate: u32, k_units: usize) -> Self {
        let conv_layers = factor_strides((sample_rate / FRAME_RATE) as usize)
            .into_iter()
            .map(|stride| ConvLayerSpec { kernel: (2 * stride).max(3), stride, channels: 16 })
            .collect();
        Self {
            sample_rate,
            conv_layers,
            d_model: 32,
            n_layers: 2,
            n_heads: 2,
            d_ff: 64,
            k_units,
            proj_dim: 16,
            temperature: 0.1,
            mask_span: 10,
            mask_start_prob: 0.08,
            max_pos: 512,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        let hop: usize = self.conv_layers.iter().map(|c| c.stride).product();
        if !self.sample_rate.is_multiple_of(FRAME_RATE) || hop != (self.sample_rate / FRAME_RATE) as usize {
            return bad(format!("product of conv strides {hop} must equal sample_rate/{FRAME_RATE}"));
        }
        if self.conv_layers.iter().any(|c| c.kernel == 0 || c.stride == 0 || c.channels == 0) {
            return bad("conv kernel, stride and channels must be positive".into());
        }
        if self.d_model == 0 || self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return bad("d_model must be a positive multiple of n_heads".into());
        }
        if !self.d_model.is_multiple_of(2) {
            return bad("d_model must be even for sinusoidal positions".into());
        }
        if self.n_layers == 0 || self.d_ff == 0 || self.proj_dim == 0 || self.k_units == 0 || self.max_pos == 0 {
            return bad("layer count, widths, k_units and max_pos must be positive".into());
        }
        if !(self.temperature > 0.0) {
            return bad("temperature must be positive".into());
        }
        if !(self.mask_start_prob > 0.0 && self.mask_start_prob <= 1.0) || self.mask_span == 0 {
            return bad("mask_start_prob must lie in (0, 1] and mask_span be positive".into());
        }
        Ok(())
    }

    /// Samples per output frame.
    pub fn hop(&self) -> usize {
        self.conv_layers.iter().map(|c| c.stride).product()
    }

    /// Input samples seen by one output frame.
    pub fn receptive_field(&self) -> usize {
        let mut jump = 1;
        let mut rf = 1;
        for c in &self.conv_layers {
            rf += (c.kernel - 1) * jump;
            jump *= c.stride;
        }
        rf
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// Middle transformer layer, as the 6th of 12 or the 12th of 24.
    pub fn default_refit_layer(&self) -> usize {
        (self.n_layers / 2).saturating_sub(1)
    }
}
