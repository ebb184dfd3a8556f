use std::path::Path;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, Variant};
use super::layers::{
    build_task_inputs, embed_profile, interaction_unit, mean_pool, output_head, run_lstm, soft_attention,
    trend_encode, AttentionVars, FcVars, LstmVars,
};
use super::params::{declare, Layout, LstmIdx, ParamSpec, ParameterStore, StoredParam};
use crate::autograd::{Array, Gradients, Graph, Mode, Var};
use crate::ingest::{DatasetScalers, TaskSample};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "dapamt-checkpoint/1";

/// Maps store parameters onto graph leaves, binding each one on first use.
pub struct Binder<'a> {
    store: &'a ParameterStore,
    vars: Vec<Option<Var>>,
}

impl<'a> Binder<'a> {
    pub fn lazy(store: &'a ParameterStore) -> Self {
        Self {
            store,
            vars: vec![None; store.len()],
        }
    }

    /// Uses leaves already created in store order.
    pub fn with_vars(store: &'a ParameterStore, vars: &[Var]) -> Result<Self> {
        if vars.len() != store.len() {
            return Err(Error::InvalidArgument(format!(
                "{} leaves for {} parameters",
                vars.len(),
                store.len()
            )));
        }
        Ok(Self {
            store,
            vars: vars.iter().copied().map(Some).collect(),
        })
    }

    pub fn var(&mut self, g: &mut Graph, i: usize) -> Var {
        *self.vars[i].get_or_insert_with(|| g.param(self.store.value(i).clone()))
    }

    fn lstm(&mut self, g: &mut Graph, idx: &LstmIdx) -> LstmVars {
        LstmVars {
            w_x: idx.w_x.map(|i| self.var(g, i)),
            w_h: idx.w_h.map(|i| self.var(g, i)),
            w_d: idx.w_d.map(|w| w.map(|i| self.var(g, i))),
            b: idx.b.map(|i| self.var(g, i)),
        }
    }

    /// Gradient per store parameter; parameters never bound get zeros.
    pub fn gradients(&self, mut grads: Gradients) -> Result<Vec<Array>> {
        self.vars
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                Some(v) => grads.take(*v),
                None => Ok(Array::zeros(self.store.value(i).shape())),
            })
            .collect()
    }
}

/// Attention weights recorded during a forward pass.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AttentionTrace {
    /// Soft-attention weight per day; empty for the history-only variant.
    pub alpha: Vec<f64>,
    /// Per unit, one co-attention weight per unordered task pair.
    pub beta: Vec<Vec<f64>>,
}

pub struct Forward {
    /// One-element prediction per task; tasks a variant does not compute are
    /// constant zero.
    pub predictions: Vec<Var>,
    /// Pooled behaviour representation.
    pub pooled: Option<Var>,
    /// Profile embedding concatenated with the pooled behaviour.
    pub representation: Option<Var>,
    pub trace: AttentionTrace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    config: ModelConfig,
    store: ParameterStore,
    layout: Layout,
}

impl Model {
    /// Randomly initialized model.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let (specs, layout) = declare(&config);
        Ok(Self {
            store: ParameterStore::init(&specs, seed),
            config,
            layout,
        })
    }

    /// Model with every parameter zero.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (specs, layout) = declare(&config);
        Ok(Self {
            store: ParameterStore::zeros(&specs),
            config,
            layout,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn store(&self) -> &ParameterStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn specs(&self) -> Vec<ParamSpec> {
        declare(&self.config).0
    }

    fn check_sample(&self, s: &TaskSample) -> Result<()> {
        let c = &self.config;
        let fail = |what: &str| {
            Err(Error::InvalidArgument(format!(
                "sample {} does not match the model: {what}",
                s.student_id
            )))
        };
        if s.histories.len() != c.task_count || s.task_features.len() != c.task_count {
            return fail("task count");
        }
        for (n, v) in s.task_features.iter().enumerate() {
            if v.len() != c.task_feature_dims[n] {
                return fail("course feature width");
            }
        }
        if c.variant.uses_behaviour() {
            if s.profile.len() != c.profile_dim {
                return fail("profile width");
            }
            if s.behaviors.len() != c.behavior_kinds() {
                return fail("behaviour kinds");
            }
            for (b, &w) in s.behaviors.iter().zip(&c.behavior_dims) {
                if b.shape() != [c.days, w] {
                    return fail("behaviour sequence shape");
                }
            }
        }
        Ok(())
    }

    /// Builds the forward pass of one sample on `g`. Dropout draws from
    /// `rng` in train mode only.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        binder: &mut Binder,
        sample: &TaskSample,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Forward> {
        self.check_sample(sample)?;
        let c = &self.config;
        let l = &self.layout;
        let tasks = c.task_count;
        let mut trace = AttentionTrace::default();

        let mut trends = vec![None; tasks];
        for n in (0..tasks).filter(|&n| c.variant.computes_task(n)) {
            let p = binder.lstm(g, &l.trends[n]);
            trends[n] = Some(trend_encode(g, &p, &sample.histories[n], c.trend_hidden)?);
        }

        let (mut head_inputs, pooled, representation) = if c.variant.uses_behaviour() {
            let embed = binder.var(g, l.embed.expect("behaviour variants embed profiles"));
            let one_hot = g.constant(Array::vector(sample.profile.clone()));
            let d = embed_profile(g, embed, one_hot)?;

            let mut per_kind = Vec::with_capacity(c.behavior_kinds());
            for (k, idx) in l.behaviors.iter().enumerate() {
                let p = binder.lstm(g, idx);
                let seq = &sample.behaviors[k];
                let inputs: Vec<Var> = (0..c.days).map(|x| g.constant(Array::vector(seq.row(x).to_vec()))).collect();
                per_kind.push(run_lstm(g, &p, &inputs, c.behavior_hidden[k], Some(d))?);
            }
            let states = (0..c.days)
                .map(|x| {
                    let parts: Vec<Var> = per_kind.iter().map(|h| h[x]).collect();
                    g.concat(&parts)
                })
                .collect::<Result<Vec<_>>>()?;

            let pooled = match &l.attention {
                Some(a) => {
                    let a = AttentionVars {
                        w_a0: binder.var(g, a.w_a0),
                        w_a1: binder.var(g, a.w_a1),
                        w_a2: binder.var(g, a.w_a2),
                        b_a: binder.var(g, a.b_a),
                    };
                    let (alpha, pooled) = soft_attention(g, &a, &states, d)?;
                    trace.alpha = g.value(alpha).data().to_vec();
                    pooled
                }
                None => {
                    trace.alpha = vec![1.0 / c.days as f64; c.days];
                    mean_pool(g, &states)?
                }
            };
            let r = g.concat(&[d, pooled])?;

            let active: Vec<usize> = (0..tasks).filter(|&n| c.variant.computes_task(n)).collect();
            let active_trends: Vec<Var> = active.iter().map(|&n| trends[n].expect("computed")).collect();
            let features: Vec<Option<Var>> = active
                .iter()
                .map(|&n| {
                    let v = &sample.task_features[n];
                    (!v.is_empty()).then(|| g.constant(Array::vector(v.clone())))
                })
                .collect();
            let built = build_task_inputs(g, r, &active_trends, &features)?;
            let mut xs: Vec<Option<Var>> = vec![None; tasks];
            for (&n, x) in active.iter().zip(built) {
                xs[n] = Some(x);
            }
            for unit in &l.units {
                let fc: Vec<Option<FcVars>> = unit
                    .iter()
                    .zip(&xs)
                    .map(|(f, x)| {
                        x.map(|_| FcVars {
                            w: binder.var(g, f.w),
                            b: binder.var(g, f.b),
                            slope: binder.var(g, f.slope),
                        })
                    })
                    .collect();
                let out = interaction_unit(g, &xs, &fc)?;
                trace.beta.push(out.betas);
                xs = out.outputs;
            }
            (xs, Some(pooled), Some(r))
        } else {
            (trends, None, None)
        };

        let mut predictions = Vec::with_capacity(tasks);
        for (n, x) in head_inputs.iter_mut().enumerate() {
            let Some(x) = *x else {
                predictions.push(g.constant(Array::vector(vec![0.0])));
                continue;
            };
            let x = g.dropout(x, c.dropout_rate, mode, rng)?;
            let w = binder.var(g, l.heads[n].w);
            let b = binder.var(g, l.heads[n].b);
            predictions.push(output_head(g, w, b, x)?);
        }
        Ok(Forward {
            predictions,
            pooled,
            representation,
            trace,
        })
    }

    /// Eval-mode predictions in scaled label space, plus the attention trace.
    pub fn predict(&self, sample: &TaskSample) -> Result<(Vec<f64>, AttentionTrace)> {
        let mut g = Graph::new();
        let mut binder = Binder::lazy(&self.store);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = self.forward(&mut g, &mut binder, sample, Mode::Eval, &mut rng)?;
        let y = f.predictions.iter().map(|&p| g.value(p).item()).collect();
        Ok((y, f.trace))
    }

    pub fn to_checkpoint(&self, scalers: Option<DatasetScalers>) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            config: self.config.clone(),
            parameters: self.store.to_named(),
            scalers,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown checkpoint format `{}`", ck.format)));
        }
        ck.config.validate()?;
        let (specs, layout) = declare(&ck.config);
        Ok(Self {
            store: ParameterStore::from_named(&specs, &ck.parameters)?,
            config: ck.config.clone(),
            layout,
        })
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }
}

/// Serialized model: configuration, named parameters and the scalers of the
/// dataset it was trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config: ModelConfig,
    pub parameters: IndexMap<String, StoredParam>,
    pub scalers: Option<DatasetScalers>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }
}
