//! Record reconstruction: an attention LSTM over the decoder hidden states
//! regenerates all four fields of each planned record in order (value,
//! entity, rtype, side), teacher-forced on the gold fields. Training-time
//! only; the regularizer spreads per-record field probabilities away from
//! their mean so the reconstructor cannot settle on a few easy fields.

use crate::error::{Error, Result};
use crate::lstm::lstm_step;
use crate::model::{Mode, Model};
use crate::tape::{Tape, Var};

fn maybe_dropout(t: &mut Tape, x: Var, rate: f64, mode: &mut Mode) -> Var {
    match mode {
        Mode::Eval => x,
        Mode::Train(rng) => {
            if rate <= 0.0 {
                return x;
            }
            let keep = 1.0 - rate;
            let n = t.value(x).len();
            let mask: Vec<f64> = (0..n)
                .map(|_| {
                    if rand::Rng::gen::<f64>(rng) < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
                .collect();
            let m = t.leaf(mask);
            t.mul(x, m)
        }
    }
}

/// Emits the 4k teacher-forced field probabilities as scalar nodes, in
/// (record, field) order.
pub(crate) fn reconstruct_probs_vars(
    t: &mut Tape,
    m: &Model,
    decoder_states: &[Var],
    rec_fields: &[[(usize, usize); 4]],
    mode: &mut Mode,
) -> Result<Vec<[Var; 4]>> {
    if decoder_states.is_empty() {
        return Err(Error::Invalid("reconstruction needs decoder states".into()));
    }
    let d = m.config.d;
    let mut h = t.zeros(d);
    let mut c = t.zeros(d);
    let mut prev_input = t.vector_param(m.ids.rec_start);
    let mut out = Vec::with_capacity(rec_fields.len());
    for fields in rec_fields {
        let mut row = [0usize; 4];
        for (j, &(input_id, target_id)) in fields.iter().enumerate() {
            let x = maybe_dropout(t, prev_input, m.config.dropout, mode);
            let (h2, c2) = lstm_step(t, &m.ids.rec_lstm, x, h, c);
            h = h2;
            c = c2;
            // Bilinear attention over the decoder states.
            let mut logits = Vec::with_capacity(decoder_states.len());
            for &s in decoder_states {
                let proj = t.matvec(m.ids.rec_w_a, s);
                logits.push(t.dot(h, proj));
            }
            let stacked = t.concat(&logits);
            let gamma = t.softmax(stacked);
            let context = t.mix_vecs(gamma, decoder_states);
            let cat = t.concat(&[h, context]);
            let att = t.matvec(m.ids.rec_w_d, cat);
            let h_att = t.tanh(att);
            let h_att = maybe_dropout(t, h_att, m.config.dropout, mode);

            let (w_head, b_head) = m.ids.rec_heads[j];
            let head_logits = t.matvec(w_head, h_att);
            let b = t.vector_param(b_head);
            let head_logits = t.add(head_logits, b);
            let probs = t.softmax(head_logits);
            row[j] = t.at(probs, target_id);

            prev_input = t.row(m.ids.embed, input_id);
        }
        out.push(row);
    }
    Ok(out)
}

/// Full reconstruction loss on the tape: L'_rec + gamma_r * L_reg.
pub(crate) fn reconstruction_vars(
    t: &mut Tape,
    m: &Model,
    decoder_states: &[Var],
    rec_fields: &[[(usize, usize); 4]],
    mode: &mut Mode,
) -> Result<Var> {
    let k = rec_fields.len();
    if k == 0 {
        return Ok(t.scalar_leaf(0.0));
    }
    let probs = reconstruct_probs_vars(t, m, decoder_states, rec_fields, mode)?;
    let denom = -1.0 / (4.0 * k as f64);
    let mut log_terms = Vec::with_capacity(4 * k);
    let mut reg_terms = Vec::with_capacity(4 * k);
    for row in &probs {
        let stacked = t.concat(row);
        let sum = t.sum(stacked);
        let p_bar = t.mul_const(sum, 0.25);
        for &p in row {
            log_terms.push(t.ln(p));
            let diff = t.sub(p, p_bar);
            let ad = t.abs(diff);
            let ad = t.clamp(ad, 1e-7, f64::INFINITY);
            reg_terms.push(t.ln(ad));
        }
    }
    let log_stack = t.concat(&log_terms);
    let log_sum = t.sum(log_stack);
    let base = t.mul_const(log_sum, denom);
    let reg_stack = t.concat(&reg_terms);
    let reg_sum = t.sum(reg_stack);
    let reg = t.mul_const(reg_sum, denom * m.config.gamma_r);
    Ok(t.add(base, reg))
}

/// Teacher-forced field probabilities (k records x 4 fields) over concrete
/// decoder states.
pub fn reconstruct(
    m: &Model,
    decoder_states: &[Vec<f64>],
    gold_plan_records: &[crate::corpus::Record],
) -> Result<Vec<[f64; 4]>> {
    let mut rec_fields = Vec::with_capacity(gold_plan_records.len());
    for r in gold_plan_records {
        let side = r.side.to_string();
        rec_fields.push([
            (m.vocab.feature_id(&r.value)?, m.vocab.values.strict(&r.value)?),
            (m.vocab.feature_id(&r.entity)?, m.vocab.entities.strict(&r.entity)?),
            (m.vocab.feature_id(&r.rtype)?, m.vocab.rtypes.strict(&r.rtype)?),
            (m.vocab.feature_id(&side)?, m.vocab.sides.strict(&side)?),
        ]);
    }
    if rec_fields.is_empty() {
        return Ok(Vec::new());
    }
    let mut t = Tape::new(&m.params);
    let states: Vec<Var> = decoder_states.iter().map(|s| t.leaf(s.clone())).collect();
    let probs = reconstruct_probs_vars(&mut t, m, &states, &rec_fields, &mut Mode::Eval)?;
    Ok(probs
        .iter()
        .map(|row| [t.scalar(row[0]), t.scalar(row[1]), t.scalar(row[2]), t.scalar(row[3])])
        .collect())
}

/// Reconstruction loss over concrete probabilities; empty plans cost 0.
pub fn reconstruction_loss(p_rec: &[[f64; 4]], gamma_r: f64) -> f64 {
    let k = p_rec.len();
    if k == 0 {
        return 0.0;
    }
    let denom = 4.0 * k as f64;
    let mut base = 0.0;
    let mut reg = 0.0;
    for row in p_rec {
        let p_bar: f64 = row.iter().sum::<f64>() / 4.0;
        for &p in row {
            base += p.ln();
            reg += (p - p_bar).abs().max(1e-7).ln();
        }
    }
    -base / denom - gamma_r * reg / denom
}
