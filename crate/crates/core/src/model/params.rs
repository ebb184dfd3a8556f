use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, Variant};
use crate::autograd::Array;
use crate::{Error, Result};

pub const PRELU_INIT_SLOPE: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    Matrix,
    Zeros,
    Slope,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
    pub frozen: bool,
}

/// Gate order in every index array: input, forget, output, candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmIdx {
    pub w_x: [usize; 4],
    pub w_h: [usize; 4],
    /// Profile terms of the input, forget and output gates.
    pub w_d: Option<[usize; 3]>,
    pub b: [usize; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionIdx {
    pub w_a0: usize,
    pub w_a1: usize,
    pub w_a2: usize,
    pub b_a: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FcIdx {
    pub w: usize,
    pub b: usize,
    pub slope: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadIdx {
    pub w: usize,
    pub b: usize,
}

/// Positions of every parameter in the store, by role.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub embed: Option<usize>,
    pub behaviors: Vec<LstmIdx>,
    pub attention: Option<AttentionIdx>,
    pub trends: Vec<LstmIdx>,
    /// `units[l][n]`.
    pub units: Vec<Vec<FcIdx>>,
    pub heads: Vec<HeadIdx>,
}

struct Declarer {
    specs: Vec<ParamSpec>,
}

impl Declarer {
    fn add(&mut self, name: String, shape: Vec<usize>, init: Init, frozen: bool) -> usize {
        self.specs.push(ParamSpec {
            name,
            shape,
            init,
            frozen,
        });
        self.specs.len() - 1
    }

    fn lstm(&mut self, prefix: &str, input: usize, hidden: usize, profile: Option<(usize, bool)>) -> LstmIdx {
        const GATES: [char; 4] = ['i', 'f', 'o', 'c'];
        let w_x = GATES.map(|q| self.add(format!("{prefix}.W_{q}x"), vec![hidden, input], Init::Matrix, false));
        let w_h = GATES.map(|q| self.add(format!("{prefix}.W_{q}h"), vec![hidden, hidden], Init::Matrix, false));
        let w_d = profile.map(|(e, frozen)| {
            let init = if frozen { Init::Zeros } else { Init::Matrix };
            [0, 1, 2].map(|k| self.add(format!("{prefix}.W_{}D", GATES[k]), vec![hidden, e], init, frozen))
        });
        let b = GATES.map(|q| self.add(format!("{prefix}.b_{q}"), vec![hidden], Init::Zeros, false));
        LstmIdx { w_x, w_h, w_d, b }
    }
}

/// Enumerates every parameter of `config` in a fixed order.
pub fn declare(config: &ModelConfig) -> (Vec<ParamSpec>, Layout) {
    let mut d = Declarer { specs: Vec::new() };
    let v = config.variant;
    let e = config.embed_dim;
    let severed = v == Variant::StandardLstmGates;
    let mut layout = Layout {
        embed: None,
        behaviors: Vec::new(),
        attention: None,
        trends: Vec::new(),
        units: Vec::new(),
        heads: Vec::new(),
    };
    if v.uses_behaviour() {
        layout.embed = Some(d.add("embed.W_D".into(), vec![e, config.profile_dim], Init::Matrix, false));
        for (k, (&f, &h)) in config.behavior_dims.iter().zip(&config.behavior_hidden).enumerate() {
            layout.behaviors.push(d.lstm(&format!("behavior{}", k + 1), f, h, Some((e, severed))));
        }
        if v != Variant::NoSoftAttention {
            let hsum: usize = config.behavior_hidden.iter().sum();
            let a = config.attention_dim;
            let w_a2_init = if severed { Init::Zeros } else { Init::Matrix };
            layout.attention = Some(AttentionIdx {
                w_a0: d.add("attention.W_a0".into(), vec![1, a], Init::Matrix, false),
                w_a1: d.add("attention.W_a1".into(), vec![a, hsum], Init::Matrix, false),
                w_a2: d.add("attention.W_a2".into(), vec![a, e], w_a2_init, severed),
                b_a: d.add("attention.b_a".into(), vec![a], Init::Zeros, false),
            });
        }
    }
    for n in 0..config.task_count {
        layout
            .trends
            .push(d.lstm(&format!("trend{}", n + 1), 1, config.trend_hidden, None));
    }
    if v.uses_behaviour() {
        for l in 0..config.num_units {
            let unit = (0..config.task_count)
                .map(|n| {
                    let input = if l == 0 { config.task_input_dim(n) } else { config.unit_fc_dim };
                    let p = format!("unit{}.task{}", l + 1, n + 1);
                    FcIdx {
                        w: d.add(format!("{p}.W"), vec![config.unit_fc_dim, input], Init::Matrix, false),
                        b: d.add(format!("{p}.b"), vec![config.unit_fc_dim], Init::Zeros, false),
                        slope: d.add(format!("{p}.prelu"), vec![1], Init::Slope, false),
                    }
                })
                .collect();
            layout.units.push(unit);
        }
    }
    let head_in = if v.uses_behaviour() { config.unit_fc_dim } else { config.trend_hidden };
    for n in 0..config.task_count {
        layout.heads.push(HeadIdx {
            w: d.add(format!("head{}.W_O", n + 1), vec![1, head_in], Init::Matrix, false),
            b: d.add(format!("head{}.b_O", n + 1), vec![1], Init::Zeros, false),
        });
    }
    (d.specs, layout)
}

/// Named parameter arrays in declaration order. Frozen entries are never
/// updated by the optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterStore {
    names: Vec<String>,
    values: Vec<Array>,
    frozen: Vec<bool>,
}

impl ParameterStore {
    /// Random initialization under `seed`.
    pub fn init(specs: &[ParamSpec], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = specs
            .iter()
            .map(|s| match s.init {
                Init::Zeros => Array::zeros(&s.shape),
                Init::Slope => Array::new(s.shape.clone(), vec![PRELU_INIT_SLOPE; s.shape.iter().product()])
                    .expect("declared shapes are valid"),
                Init::Matrix => {
                    let fan_in = s.shape[s.shape.len() - 1] as f64;
                    let r = 1.0 / fan_in.sqrt();
                    let u = Uniform::new_inclusive(-r, r).expect("finite bound");
                    let n: usize = s.shape.iter().product();
                    Array::new(s.shape.clone(), (0..n).map(|_| u.sample(&mut rng)).collect())
                        .expect("declared shapes are valid")
                }
            })
            .collect();
        Self::from_parts(specs, values)
    }

    /// Every parameter set to zero.
    pub fn zeros(specs: &[ParamSpec]) -> Self {
        Self::from_parts(specs, specs.iter().map(|s| Array::zeros(&s.shape)).collect())
    }

    fn from_parts(specs: &[ParamSpec], values: Vec<Array>) -> Self {
        Self {
            names: specs.iter().map(|s| s.name.clone()).collect(),
            values,
            frozen: specs.iter().map(|s| s.frozen).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Array] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Array] {
        &mut self.values
    }

    pub fn value(&self, i: usize) -> &Array {
        &self.values[i]
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Array> {
        self.index_of(name).map(|i| &self.values[i])
    }

    pub fn set(&mut self, name: &str, value: Array) -> Result<()> {
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter named {name}")))?;
        if value.shape() != self.values[i].shape() {
            return Err(Error::Shape {
                primitive: "set_parameter",
                left: self.values[i].shape().to_vec(),
                right: value.shape().to_vec(),
            });
        }
        self.values[i] = value;
        Ok(())
    }

    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Array::len).sum()
    }

    /// Name to `{shape, values}` map in declaration order.
    pub fn to_named(&self) -> IndexMap<String, StoredParam> {
        self.names
            .iter()
            .zip(&self.values)
            .map(|(n, v)| {
                (
                    n.clone(),
                    StoredParam {
                        shape: v.shape().to_vec(),
                        values: v.data().to_vec(),
                    },
                )
            })
            .collect()
    }

    /// Rebuilds a store for `specs` from named arrays, rejecting missing,
    /// extra or shape-incompatible entries.
    pub fn from_named(specs: &[ParamSpec], named: &IndexMap<String, StoredParam>) -> Result<Self> {
        if let Some(extra) = named.keys().find(|k| !specs.iter().any(|s| &s.name == *k)) {
            return Err(Error::Checkpoint(format!("unexpected parameter {extra}")));
        }
        let values = specs
            .iter()
            .map(|s| {
                let p = named
                    .get(&s.name)
                    .ok_or_else(|| Error::Checkpoint(format!("missing parameter {}", s.name)))?;
                if p.shape != s.shape {
                    return Err(Error::Checkpoint(format!(
                        "parameter {} has shape {:?}, expected {:?}",
                        s.name, p.shape, s.shape
                    )));
                }
                let a = Array::new(p.shape.clone(), p.values.clone())
                    .map_err(|e| Error::Checkpoint(format!("parameter {}: {e}", s.name)))?;
                if !a.all_finite() {
                    return Err(Error::Checkpoint(format!("parameter {} is not finite", s.name)));
                }
                Ok(a)
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_parts(specs, values))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredParam {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}
