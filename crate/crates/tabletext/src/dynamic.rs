//! Dynamic content planning: bidirectional encoding of the planned records
//! and a per-decoding-step sigmoid gate, conditioned on the decoder's
//! second-layer memory cell, that rescales each plan position. Unlike the
//! static encoding h^s, the rescaled h^d changes at every decoding step.

use crate::error::{Error, Result};
use crate::lstm::lstm_step;
use crate::model::Model;
use crate::tape::{Tape, Var};

/// Bidirectional encoding of the planned records.
#[derive(Clone, Debug)]
pub struct PlanEncoding {
    /// One d-dim row per plan position.
    pub h_s: Vec<Vec<f64>>,
    pub fw_h: Vec<f64>,
    pub fw_c: Vec<f64>,
    pub bw_h: Vec<f64>,
    pub bw_c: Vec<f64>,
}

pub(crate) struct PlanEncVars {
    pub h_s: Vec<Var>,
    pub fw_h: Var,
    pub fw_c: Var,
    pub bw_h: Var,
    pub bw_c: Var,
}

/// Forward and backward recurrences at d/2 each, concatenated per position.
pub(crate) fn encode_plan_vars(t: &mut Tape, m: &Model, selected: &[Var]) -> Result<PlanEncVars> {
    let k = selected.len();
    if k == 0 {
        return Err(Error::Invalid("plan encoder needs a non-empty plan".into()));
    }
    let h = m.config.d / 2;

    let mut fw = Vec::with_capacity(k);
    let mut hv = t.zeros(h);
    let mut cv = t.zeros(h);
    for &x in selected {
        let (h2, c2) = lstm_step(t, &m.ids.plan_fw, x, hv, cv);
        hv = h2;
        cv = c2;
        fw.push(hv);
    }
    let (fw_h, fw_c) = (hv, cv);

    let mut bw = vec![0; k];
    let mut hv = t.zeros(h);
    let mut cv = t.zeros(h);
    for (i, &x) in selected.iter().enumerate().rev() {
        let (h2, c2) = lstm_step(t, &m.ids.plan_bw, x, hv, cv);
        hv = h2;
        cv = c2;
        bw[i] = hv;
    }
    let (bw_h, bw_c) = (hv, cv);

    let h_s = fw.iter().zip(&bw).map(|(&f, &b)| t.concat(&[f, b])).collect();
    Ok(PlanEncVars { h_s, fw_h, fw_c, bw_h, bw_c })
}

/// Plan encoding over concrete gated vectors ordered by the static plan.
pub fn encode_plan(m: &Model, selected: &[Vec<f64>]) -> Result<PlanEncoding> {
    let mut t = Tape::new(&m.params);
    let vars: Vec<Var> = selected.iter().map(|v| t.leaf(v.clone())).collect();
    let enc = encode_plan_vars(&mut t, m, &vars)?;
    Ok(PlanEncoding {
        h_s: enc.h_s.iter().map(|&v| t.value(v).to_vec()).collect(),
        fw_h: t.value(enc.fw_h).to_vec(),
        fw_c: t.value(enc.fw_c).to_vec(),
        bw_h: t.value(enc.bw_h).to_vec(),
        bw_c: t.value(enc.bw_c).to_vec(),
    })
}

/// Per-step gate output.
#[derive(Clone, Debug)]
pub struct DynamicGateOutput {
    /// Selection probability per plan position.
    pub p: Vec<f64>,
    /// Normalized weights (sum to 1).
    pub tau: Vec<f64>,
    /// Rescaled plan rows for this step.
    pub h_d: Vec<Vec<f64>>,
}

pub(crate) struct GateVars {
    pub p: Vec<Var>,
    pub tau: Var,
    pub h_d: Vec<Var>,
}

/// p_j = sigmoid(W_d [D_i; h_j^s]); tau = p / sum(p); h_d row j = tau_j h_j^s.
pub(crate) fn dynamic_gate_vars(t: &mut Tape, m: &Model, d_i: Var, h_s: &[Var]) -> GateVars {
    let mut p = Vec::with_capacity(h_s.len());
    for &row in h_s {
        let cat = t.concat(&[d_i, row]);
        let logit = t.matvec(m.ids.gate_w_d, cat);
        p.push(t.sigmoid(logit));
    }
    let pv = t.concat(&p);
    let total = t.sum(pv);
    let inv = t.recip(total);
    let tau = t.scale(pv, inv);
    let h_d = h_s
        .iter()
        .enumerate()
        .map(|(j, &row)| {
            let w = t.at(tau, j);
            t.scale(row, w)
        })
        .collect();
    GateVars { p, tau, h_d }
}

/// Uniform-weight stand-in for the gate (ablation mode): tau = 1/k for all
/// positions, no selection probabilities.
pub(crate) fn uniform_gate_vars(t: &mut Tape, h_s: &[Var]) -> GateVars {
    let k = h_s.len();
    let tau = t.leaf(vec![1.0 / k as f64; k]);
    let h_d = h_s.iter().map(|&row| t.mul_const(row, 1.0 / k as f64)).collect();
    GateVars { p: Vec::new(), tau, h_d }
}

/// Gate evaluation for one step given the previous decoder memory cell.
/// With `ablate_gate` set on the model, tau is uniform and `p` is empty.
pub fn dynamic_gate(m: &Model, d_i: &[f64], plan_enc: &PlanEncoding) -> Result<DynamicGateOutput> {
    if d_i.len() != m.config.d {
        return Err(Error::Shape(format!(
            "decoder cell has dimension {}, expected {}",
            d_i.len(),
            m.config.d
        )));
    }
    let mut t = Tape::new(&m.params);
    let d_var = t.leaf(d_i.to_vec());
    let rows: Vec<Var> = plan_enc.h_s.iter().map(|r| t.leaf(r.clone())).collect();
    let g = if m.config.ablate_gate {
        uniform_gate_vars(&mut t, &rows)
    } else {
        dynamic_gate_vars(&mut t, m, d_var, &rows)
    };
    Ok(DynamicGateOutput {
        p: g.p.iter().map(|&v| t.scalar(v)).collect(),
        tau: t.value(g.tau).to_vec(),
        h_d: g.h_d.iter().map(|&v| t.value(v).to_vec()).collect(),
    })
}

/// Supervised gate loss: per step, log p at the gold position plus
/// log(1 - p) elsewhere, averaged over steps and negated. Probabilities are
/// clamped to [1e-7, 1 - 1e-7] before the logs.
pub fn dynamic_plan_loss(per_step_p: &[Vec<f64>], gold: &[usize]) -> f64 {
    assert_eq!(per_step_p.len(), gold.len(), "one gold position per step");
    if gold.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for (ps, &j) in per_step_p.iter().zip(gold) {
        for (l, &p) in ps.iter().enumerate() {
            let p = p.clamp(1e-7, 1.0 - 1e-7);
            acc += if l == j { p.ln() } else { (1.0 - p).ln() };
        }
    }
    -acc / gold.len() as f64
}
