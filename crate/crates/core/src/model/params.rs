use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dimensions that fix the parameter layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelShape {
    pub num_classes: usize,
    pub hidden: usize,
    pub mel_bins: usize,
}

/// Named tensors of the predictor, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TensorId {
    NormMean,
    NormStd,
    ProjW,
    ProjB,
    GateZW,
    GateRW,
    CandW,
    GateZU,
    GateRU,
    CandU,
    GateZB,
    GateRB,
    CandB,
    HeadW,
    HeadB,
}

impl TensorId {
    pub const ALL: [TensorId; 15] = [
        TensorId::NormMean,
        TensorId::NormStd,
        TensorId::ProjW,
        TensorId::ProjB,
        TensorId::GateZW,
        TensorId::GateRW,
        TensorId::CandW,
        TensorId::GateZU,
        TensorId::GateRU,
        TensorId::CandU,
        TensorId::GateZB,
        TensorId::GateRB,
        TensorId::CandB,
        TensorId::HeadW,
        TensorId::HeadB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TensorId::NormMean => "input.mean",
            TensorId::NormStd => "input.std",
            TensorId::ProjW => "proj.weight",
            TensorId::ProjB => "proj.bias",
            TensorId::GateZW => "gru.update.input",
            TensorId::GateRW => "gru.reset.input",
            TensorId::CandW => "gru.candidate.input",
            TensorId::GateZU => "gru.update.hidden",
            TensorId::GateRU => "gru.reset.hidden",
            TensorId::CandU => "gru.candidate.hidden",
            TensorId::GateZB => "gru.update.bias",
            TensorId::GateRB => "gru.reset.bias",
            TensorId::CandB => "gru.candidate.bias",
            TensorId::HeadW => "head.weight",
            TensorId::HeadB => "head.bias",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Input normalisation statistics are fitted from data, not trained.
    pub fn trainable(self) -> bool {
        !matches!(self, TensorId::NormMean | TensorId::NormStd)
    }

    pub fn dims(self, s: &ModelShape) -> Vec<usize> {
        let (h, k2, mel) = (s.hidden, 2 * s.num_classes, s.mel_bins);
        match self {
            TensorId::NormMean | TensorId::NormStd => vec![mel],
            TensorId::ProjW => vec![h, mel],
            TensorId::ProjB | TensorId::GateZB | TensorId::GateRB | TensorId::CandB => vec![h],
            TensorId::GateZW
            | TensorId::GateRW
            | TensorId::CandW
            | TensorId::GateZU
            | TensorId::GateRU
            | TensorId::CandU => vec![h, h],
            TensorId::HeadW => vec![k2, h],
            TensorId::HeadB => vec![k2],
        }
    }

    pub fn len(self, s: &ModelShape) -> usize {
        self.dims(s).iter().product()
    }

    fn index(self) -> usize {
        Self::ALL.iter().position(|&t| t == self).expect("listed")
    }
}

fn offsets(shape: &ModelShape) -> [usize; 16] {
    let mut out = [0; 16];
    for (i, t) in TensorId::ALL.iter().enumerate() {
        out[i + 1] = out[i] + t.len(shape);
    }
    out
}

/// All predictor parameters in one flat single-precision buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PENetParams {
    shape: ModelShape,
    offsets: [usize; 16],
    data: Vec<f32>,
}

impl PENetParams {
    /// All weights zero, identity input normalisation.
    pub fn zeros(shape: ModelShape) -> Self {
        let offsets = offsets(&shape);
        let mut p = Self {
            shape,
            offsets,
            data: vec![0.0; offsets[15]],
        };
        p.tensor_mut(TensorId::NormStd).fill(1.0);
        p
    }

    /// Glorot-uniform weights, zero gate biases, a small positive head bias
    /// so every evidence unit starts in the active region of the ReLU.
    pub fn init(shape: ModelShape, seed: u64) -> Self {
        let mut p = Self::zeros(shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in TensorId::ALL {
            let dims = t.dims(&shape);
            if dims.len() == 2 {
                let limit = (6.0 / (dims[0] + dims[1]) as f64).sqrt() as f32;
                for w in p.tensor_mut(t) {
                    *w = rng.random_range(-limit..limit);
                }
            }
        }
        p.tensor_mut(TensorId::HeadB).fill(0.5);
        p
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn tensor(&self, t: TensorId) -> &[f32] {
        let i = t.index();
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn tensor_mut(&mut self, t: TensorId) -> &mut [f32] {
        let i = t.index();
        &mut self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn range(&self, t: TensorId) -> std::ops::Range<usize> {
        let i = t.index();
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Gradients in the same layout as [`PENetParams`], double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    shape: ModelShape,
    offsets: [usize; 16],
    data: Vec<f64>,
}

impl Gradients {
    pub fn zeros(shape: ModelShape) -> Self {
        let offsets = offsets(&shape);
        Self {
            shape,
            offsets,
            data: vec![0.0; offsets[15]],
        }
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn tensor(&self, t: TensorId) -> &[f64] {
        let i = t.index();
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn clear(&mut self) {
        self.data.fill(0.0);
    }

    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }
}
