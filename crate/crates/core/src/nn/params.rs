use super::lstm::LstmParams;
use super::mlp::MlpParams;
use crate::error::{Error, Result};
use crate::seed;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Width of every hidden layer in the production networks.
pub const DEFAULT_HIDDEN: usize = 200;

/// Anything that can be viewed as an ordered list of flat tensors.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

impl Parameters for Vec<f64> {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}

impl Parameters for MlpParams {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.w.data.as_slice(), l.b.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.w.data.as_mut_slice(), l.b.as_mut_slice()])
            .collect()
    }
}

impl Parameters for LstmParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self
            .layers
            .iter()
            .flat_map(|l| [l.w_x.data.as_slice(), l.w_h.data.as_slice(), l.b.as_slice()])
            .collect();
        out.push(&self.head.w.data);
        out.push(&self.head.b);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.w_x.data.as_mut_slice(),
                    l.w_h.data.as_mut_slice(),
                    l.b.as_mut_slice(),
                ]
            })
            .collect();
        out.push(&mut self.head.w.data);
        out.push(&mut self.head.b);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Mlp,
    Lstm,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Mlp => "MLP",
            ModelKind::Lstm => "LSTM",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "MLP" => Ok(ModelKind::Mlp),
            "LSTM" => Ok(ModelKind::Lstm),
            other => Err(format!("unknown model kind `{other}`")),
        }
    }
}

/// Network family plus hidden width. The production architectures are a
/// 4-layer tanh MLP and a 3-layer LSTM with a linear read-out, both 200 wide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub kind: ModelKind,
    pub hidden: usize,
}

impl Arch {
    pub const MLP_HIDDEN_LAYERS: usize = 3;
    pub const LSTM_LAYERS: usize = 3;

    pub fn standard(kind: ModelKind) -> Self {
        Arch {
            kind,
            hidden: DEFAULT_HIDDEN,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PolicyParams {
    Mlp(MlpParams),
    Lstm(LstmParams),
}

impl PolicyParams {
    pub fn init(arch: Arch, input: usize, output: usize, seed: u64) -> Result<Self> {
        if arch.hidden == 0 {
            return Err(Error::arg("hidden width must be positive"));
        }
        let mut rng = seed::rng(seed);
        Ok(match arch.kind {
            ModelKind::Mlp => {
                let mut widths = vec![input];
                widths.extend(std::iter::repeat_n(arch.hidden, Arch::MLP_HIDDEN_LAYERS));
                widths.push(output);
                PolicyParams::Mlp(MlpParams::init(&widths, &mut rng)?)
            }
            ModelKind::Lstm => PolicyParams::Lstm(LstmParams::init(
                input,
                arch.hidden,
                Arch::LSTM_LAYERS,
                output,
                &mut rng,
            )?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            PolicyParams::Mlp(_) => ModelKind::Mlp,
            PolicyParams::Lstm(_) => ModelKind::Lstm,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            PolicyParams::Mlp(p) => p.input_dim(),
            PolicyParams::Lstm(p) => p.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            PolicyParams::Mlp(p) => p.output_dim(),
            PolicyParams::Lstm(p) => p.output_dim(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        match self {
            PolicyParams::Mlp(p) => PolicyParams::Mlp(p.zeros_like()),
            PolicyParams::Lstm(p) => PolicyParams::Lstm(p.zeros_like()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

impl Parameters for PolicyParams {
    fn tensors(&self) -> Vec<&[f64]> {
        match self {
            PolicyParams::Mlp(p) => p.tensors(),
            PolicyParams::Lstm(p) => p.tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            PolicyParams::Mlp(p) => p.tensors_mut(),
            PolicyParams::Lstm(p) => p.tensors_mut(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn production_architectures() {
        let mlp = PolicyParams::init(Arch::standard(ModelKind::Mlp), 18, 18, 0).unwrap();
        let PolicyParams::Mlp(m) = &mlp else { unreachable!() };
        assert_eq!(m.layers.len(), 4);
        assert_eq!(m.activation_count(), 3);
        assert!(m.layers[..3].iter().all(|l| l.output_dim() == 200));

        let lstm = PolicyParams::init(Arch::standard(ModelKind::Lstm), 18, 18, 0).unwrap();
        let PolicyParams::Lstm(l) = &lstm else { unreachable!() };
        assert_eq!(l.hidden_sizes(), vec![200, 200, 200]);
        assert_eq!(l.head.input_dim(), 200);
        assert_eq!(l.output_dim(), 18);
    }

    #[test]
    fn tensor_views_cover_every_parameter() {
        let p = PolicyParams::init(Arch { kind: ModelKind::Lstm, hidden: 4 }, 3, 2, 1).unwrap();
        // 3 layers: (16·3 + 16·4 + 16) + 2·(16·4 + 16·4 + 16), head 2·4 + 2.
        assert_eq!(p.param_count(), 128 + 2 * 144 + 10);
        let mut q = p.clone();
        assert_eq!(q.tensors_mut().len(), p.tensors().len());
    }

    #[test]
    fn same_seed_same_init() {
        let a = PolicyParams::init(Arch::standard(ModelKind::Mlp), 12, 18, 9).unwrap();
        let b = PolicyParams::init(Arch::standard(ModelKind::Mlp), 12, 18, 9).unwrap();
        assert_eq!(a, b);
    }
}
