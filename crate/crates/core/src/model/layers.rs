//! Building blocks of the forward pass, expressed on an autograd [`Graph`].

use crate::autograd::{Array, Graph, Var};
use crate::{Error, Result};

/// One LSTM's parameters, gates ordered input, forget, output, candidate.
/// `w_d` holds the profile terms of the first three gates, if any.
#[derive(Clone, Copy, Debug)]
pub struct LstmVars {
    pub w_x: [Var; 4],
    pub w_h: [Var; 4],
    pub w_d: Option<[Var; 3]>,
    pub b: [Var; 4],
}

#[derive(Clone, Copy, Debug)]
pub struct AttentionVars {
    pub w_a0: Var,
    pub w_a1: Var,
    pub w_a2: Var,
    pub b_a: Var,
}

/// One task branch of an interaction unit: `PReLU(W x + b)`.
#[derive(Clone, Copy, Debug)]
pub struct FcVars {
    pub w: Var,
    pub b: Var,
    pub slope: Var,
}

/// Dense profile embedding `W_D · one_hot`.
pub fn embed_profile(g: &mut Graph, w_d: Var, one_hot: Var) -> Result<Var> {
    g.matmul(w_d, one_hot)
}

/// `W_iD·D`, `W_fD·D`, `W_oD·D`, computed once per sequence.
pub fn profile_terms(g: &mut Graph, p: &LstmVars, d: Var) -> Result<Option<[Var; 3]>> {
    let Some(w_d) = p.w_d else { return Ok(None) };
    Ok(Some([g.matmul(w_d[0], d)?, g.matmul(w_d[1], d)?, g.matmul(w_d[2], d)?]))
}

/// One LSTM step. Profile terms, when present, enter the three sigmoid gates
/// but not the candidate.
pub fn lstm_cell(
    g: &mut Graph,
    p: &LstmVars,
    x: Var,
    h: Var,
    c: Var,
    profile: Option<&[Var; 3]>,
) -> Result<(Var, Var)> {
    let mut pre = [x; 4];
    for q in 0..4 {
        let wx = g.matmul(p.w_x[q], x)?;
        let wh = g.matmul(p.w_h[q], h)?;
        pre[q] = match (profile, q < 3) {
            (Some(terms), true) => g.add_n(&[wx, wh, terms[q], p.b[q]])?,
            _ => g.add_n(&[wx, wh, p.b[q]])?,
        };
    }
    let state = g.lstm_cell(pre, c)?;
    let n = g.value(c).len();
    let h = g.slice(state, 0, n)?;
    let c = g.slice(state, n, n)?;
    Ok((h, c))
}

/// Profile-aware LSTM step.
pub fn plstm_step(g: &mut Graph, p: &LstmVars, x: Var, h: Var, c: Var, d: Var) -> Result<(Var, Var)> {
    let terms = profile_terms(g, p, d)?;
    lstm_cell(g, p, x, h, c, terms.as_ref())
}

/// Runs an LSTM from the zero state and returns the hidden state after each
/// input.
pub fn run_lstm(g: &mut Graph, p: &LstmVars, inputs: &[Var], hidden: usize, d: Option<Var>) -> Result<Vec<Var>> {
    let terms = match d {
        Some(d) => profile_terms(g, p, d)?,
        None => None,
    };
    let mut h = g.constant(Array::zeros(&[hidden]));
    let mut c = h;
    let mut out = Vec::with_capacity(inputs.len());
    for &x in inputs {
        (h, c) = lstm_cell(g, p, x, h, c, terms.as_ref())?;
        out.push(h);
    }
    Ok(out)
}

/// Last hidden state of a standard LSTM over scalar history values; the zero
/// state when the history is empty.
pub fn trend_encode(g: &mut Graph, p: &LstmVars, history: &[f64], hidden: usize) -> Result<Var> {
    let inputs: Vec<Var> = history.iter().map(|&y| g.constant(Array::vector(vec![y]))).collect();
    let states = run_lstm(g, p, &inputs, hidden, None)?;
    Ok(match states.last() {
        Some(&h) => h,
        None => g.constant(Array::zeros(&[hidden])),
    })
}

/// Soft-attention pooling over daily states. Returns the weight vector and
/// the weighted sum of the states.
pub fn soft_attention(g: &mut Graph, a: &AttentionVars, states: &[Var], d: Var) -> Result<(Var, Var)> {
    if states.is_empty() {
        return Err(Error::Empty("attention inputs"));
    }
    let profile = g.matmul(a.w_a2, d)?;
    let bias = g.add(profile, a.b_a)?;
    let mut scores = Vec::with_capacity(states.len());
    for &s in states {
        let proj = g.matmul(a.w_a1, s)?;
        let pre = g.add(proj, bias)?;
        let act = g.tanh(pre)?;
        scores.push(g.matmul(a.w_a0, act)?);
    }
    let scores = g.concat(&scores)?;
    let alpha = g.softmax(scores)?;
    let mut pooled = None;
    for (x, &s) in states.iter().enumerate() {
        let w = g.slice(alpha, x, 1)?;
        let term = g.scale_by(s, w)?;
        pooled = Some(match pooled {
            None => term,
            Some(acc) => g.add(acc, term)?,
        });
    }
    Ok((alpha, pooled.expect("states is non-empty")))
}

/// Uniform mean of the daily states.
pub fn mean_pool(g: &mut Graph, states: &[Var]) -> Result<Var> {
    let Some((&first, rest)) = states.split_first() else {
        return Err(Error::Empty("pooling inputs"));
    };
    let mut acc = first;
    for &s in rest {
        acc = g.add(acc, s)?;
    }
    g.scale(acc, 1.0 / states.len() as f64)
}

/// `R ⊕ trend_n ⊕ features_n` per task; tasks without course features get
/// `R ⊕ trend_n`.
pub fn build_task_inputs(g: &mut Graph, r: Var, trends: &[Var], features: &[Option<Var>]) -> Result<Vec<Var>> {
    if trends.len() != features.len() {
        return Err(Error::InvalidArgument(format!(
            "{} trends but {} feature slots",
            trends.len(),
            features.len()
        )));
    }
    trends
        .iter()
        .zip(features)
        .map(|(&t, f)| match f {
            Some(v) => g.concat(&[r, t, *v]),
            None => g.concat(&[r, t]),
        })
        .collect()
}

/// Output of one interaction unit.
#[derive(Clone, Debug)]
pub struct UnitOutput {
    pub outputs: Vec<Option<Var>>,
    /// Co-attention weights per unordered task pair, ordered (1,2), (1,3), ...,
    /// (2,3), ...
    pub betas: Vec<f64>,
}

/// Multi-task interaction unit. Each present branch goes through its FC and
/// PReLU, every pair of branches gets one sigmoid co-attention weight from
/// the dot product of their FC outputs, and each branch adds the other
/// branches weighted by those shared weights. Absent branches act as zero
/// vectors.
pub fn interaction_unit(g: &mut Graph, inputs: &[Option<Var>], fc: &[Option<FcVars>]) -> Result<UnitOutput> {
    if inputs.len() != fc.len() {
        return Err(Error::InvalidArgument(format!(
            "{} unit inputs but {} task layers",
            inputs.len(),
            fc.len()
        )));
    }
    let n = inputs.len();
    let mut proj = Vec::with_capacity(n);
    for (x, p) in inputs.iter().zip(fc) {
        proj.push(match (x, p) {
            (Some(x), Some(p)) => {
                let z = g.affine(p.w, *x, p.b)?;
                Some(g.prelu(z, p.slope)?)
            }
            (None, _) => None,
            (Some(_), None) => return Err(Error::InvalidArgument("unit input without a task layer".into())),
        });
    }
    let mut beta_vars = vec![vec![None; n]; n];
    let mut betas = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            match (proj[i], proj[j]) {
                (Some(a), Some(b)) => {
                    let d = g.dot(a, b)?;
                    let s = g.sigmoid(d)?;
                    betas.push(g.value(s).item());
                    beta_vars[i][j] = Some(s);
                    beta_vars[j][i] = Some(s);
                }
                _ => betas.push(0.5),
            }
        }
    }
    let mut outputs = Vec::with_capacity(n);
    for k in 0..n {
        let Some(own) = proj[k] else {
            outputs.push(None);
            continue;
        };
        let mut acc = own;
        for (i, other) in proj.iter().enumerate() {
            if let (Some(o), Some(b)) = (other, beta_vars[k][i]) {
                let t = g.scale_by(*o, b)?;
                acc = g.add(acc, t)?;
            }
        }
        outputs.push(Some(acc));
    }
    Ok(UnitOutput { outputs, betas })
}

/// `tanh(W_O x + b_O)` as a one-element vector.
pub fn output_head(g: &mut Graph, w: Var, b: Var, x: Var) -> Result<Var> {
    let z = g.affine(w, x, b)?;
    g.tanh(z)
}
