//! Forward pass of the profile-aware multi-task model.
//!
//! A dense embedding `D` of the one-hot profile conditions one LSTM per
//! behaviour kind through extra input, forget and output gate terms. Daily
//! hidden states are concatenated, pooled with profile-conditioned soft
//! attention and joined with `D` into `R`. Each task appends its trend
//! encoding (an LSTM over past labels) and course features, then passes
//! through stacked interaction units that exchange information between tasks
//! via sigmoid co-attention, and finally a `tanh` head.

mod check;
mod config;
mod forward;
pub mod layers;
mod params;

pub use check::{check_gradients, probe_sample};
pub use config::{ModelConfig, Variant};
pub use forward::{AttentionTrace, Binder, Checkpoint, Forward, Model, CHECKPOINT_FORMAT};
pub use layers::{
    build_task_inputs, embed_profile, interaction_unit, lstm_cell, mean_pool, output_head, plstm_step, run_lstm,
    soft_attention, trend_encode, AttentionVars, FcVars, LstmVars, UnitOutput,
};
pub use params::{
    declare, AttentionIdx, FcIdx, HeadIdx, Init, Layout, LstmIdx, ParamSpec, ParameterStore, StoredParam,
    PRELU_INIT_SLOPE,
};
