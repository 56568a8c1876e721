//! Two-layer decoder with input feeding, attention over the dynamically
//! gated plan rows, and a conditional copy gate mixing generation with
//! attention mass on plan positions whose record value equals the token.

use crate::error::{Error, Result};
use crate::lstm::lstm_step;
use crate::model::{Mode, Model};
use crate::tape::{Tape, Var};

/// Concrete recurrent state carried between steps at inference time.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderState {
    pub h1: Vec<f64>,
    pub c1: Vec<f64>,
    pub h2: Vec<f64>,
    pub c2: Vec<f64>,
    /// Previous attention output (input feeding); zeros at the first step.
    pub h_att: Vec<f64>,
}

impl DecoderState {
    pub fn zeros(d: usize) -> Self {
        DecoderState {
            h1: vec![0.0; d],
            c1: vec![0.0; d],
            h2: vec![0.0; d],
            c2: vec![0.0; d],
            h_att: vec![0.0; d],
        }
    }
}

/// Full emission distribution for one step.
#[derive(Clone, Debug)]
pub struct StepDistribution {
    /// Probability over the vocabulary, copy mass folded onto the value
    /// tokens of the plan.
    pub probs: Vec<f64>,
    pub copy_gate: f64,
    /// Attention over plan positions.
    pub attention: Vec<f64>,
}

pub(crate) struct DecStepVars {
    pub h1: Var,
    pub c1: Var,
    pub h2: Var,
    pub c2: Var,
    pub h_att: Var,
    pub beta: Var,
    pub p_gen: Var,
    pub p_ga: Var,
}

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

/// One decoder step as a tape subgraph. `state` is (h1, c1, h2, c2, h_att).
#[allow(clippy::too_many_arguments)]
pub(crate) fn decode_step_vars(
    t: &mut Tape,
    m: &Model,
    y_prev: usize,
    state: (Var, Var, Var, Var, Var),
    h_d: &[Var],
    dropout: f64,
    mode: &mut Mode,
) -> DecStepVars {
    let (h1, c1, h2, c2, h_att_prev) = state;
    let emb = t.row(m.ids.embed, y_prev);
    let x1 = t.concat(&[emb, h_att_prev]);
    let x1 = maybe_dropout(t, x1, dropout, mode);
    let (h1n, c1n) = lstm_step(t, &m.ids.dec_l1, x1, h1, c1);
    let x2 = maybe_dropout(t, h1n, dropout, mode);
    let (h2n, c2n) = lstm_step(t, &m.ids.dec_l2, x2, h2, c2);

    let mut logits = Vec::with_capacity(h_d.len());
    for &row in h_d {
        let proj = t.matvec(m.ids.dec_w_a, row);
        logits.push(t.dot(h2n, proj));
    }
    let stacked = t.concat(&logits);
    let beta = t.softmax(stacked);
    let context = t.mix_vecs(beta, h_d);
    let cat = t.concat(&[h2n, context]);
    let att = t.matvec(m.ids.dec_w_d, cat);
    let h_att = t.tanh(att);
    let h_att = maybe_dropout(t, h_att, dropout, mode);

    let logits_v = t.matvec(m.ids.dec_w_o, h_att);
    let b_y = t.vector_param(m.ids.dec_b_y);
    let logits_v = t.add(logits_v, b_y);
    let p_gen = t.softmax(logits_v);

    let copy_logit = t.matvec(m.ids.dec_w_copy, h_att);
    let b_copy = t.vector_param(m.ids.dec_b_copy);
    let copy_logit = t.add(copy_logit, b_copy);
    let p_ga = t.sigmoid(copy_logit);

    DecStepVars { h1: h1n, c1: c1n, h2: h2n, c2: c2n, h_att, beta, p_gen, p_ga }
}

/// Folds copy mass onto the vocabulary distribution:
/// p(y) = p_ga * sum_{k: value(z_k) = y} beta_k + (1 - p_ga) * p_gen(y).
pub(crate) fn mix_emission(
    p_gen: &[f64],
    beta: &[f64],
    p_ga: f64,
    plan_value_ids: &[usize],
) -> Vec<f64> {
    let mut probs: Vec<f64> = p_gen.iter().map(|p| (1.0 - p_ga) * p).collect();
    for (k, &vid) in plan_value_ids.iter().enumerate() {
        probs[vid] += p_ga * beta[k];
    }
    probs
}

/// One inference step over concrete state and gated plan rows; `h_d` must
/// come from the dynamic gate for this step. `plan_value_ids` maps plan
/// positions to the vocabulary ids of their record values.
pub fn decode_step(
    m: &Model,
    y_prev: usize,
    state: &DecoderState,
    h_d: &[Vec<f64>],
    plan_value_ids: &[usize],
) -> Result<(DecoderState, StepDistribution)> {
    let d = m.config.d;
    if state.h1.len() != d || state.c2.len() != d || state.h_att.len() != d {
        return Err(Error::Shape("decoder state dimension mismatch".into()));
    }
    if h_d.len() != plan_value_ids.len() {
        return Err(Error::Shape("h_d and plan_value_ids lengths differ".into()));
    }
    if h_d.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("h_d row dimension mismatch".into()));
    }
    let mut t = Tape::new(&m.params);
    let s = (
        t.leaf(state.h1.clone()),
        t.leaf(state.c1.clone()),
        t.leaf(state.h2.clone()),
        t.leaf(state.c2.clone()),
        t.leaf(state.h_att.clone()),
    );
    let rows: Vec<Var> = h_d.iter().map(|r| t.leaf(r.clone())).collect();
    let step = decode_step_vars(&mut t, m, y_prev, s, &rows, 0.0, &mut Mode::Eval);
    let beta = t.value(step.beta).to_vec();
    let p_gen = t.value(step.p_gen).to_vec();
    let p_ga = t.scalar(step.p_ga);
    let probs = mix_emission(&p_gen, &beta, p_ga, plan_value_ids);
    Ok((
        DecoderState {
            h1: t.value(step.h1).to_vec(),
            c1: t.value(step.c1).to_vec(),
            h2: t.value(step.h2).to_vec(),
            c2: t.value(step.c2).to_vec(),
            h_att: t.value(step.h_att).to_vec(),
        },
        StepDistribution { probs, copy_gate: p_ga, attention: beta },
    ))
}

/// Language-model loss with the repetition regularizer: the mean reference
/// probability couples all steps, and |p - mean| is clamped at 1e-7 before
/// the log.
pub fn lm_loss(step_probs: &[f64], gamma_l: f64) -> f64 {
    assert!(!step_probs.is_empty());
    let t = step_probs.len() as f64;
    let p_bar: f64 = step_probs.iter().sum::<f64>() / t;
    let mut acc = 0.0;
    for &p in step_probs {
        acc += p.ln() + gamma_l * (p - p_bar).abs().max(1e-7).ln();
    }
    -acc / t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TrainConfig;
    use crate::corpus::{build_vocab, generate_synthetic};
    use crate::model::Model;

    fn tiny_model(d: usize, seed: u64) -> Model {
        let corpus = generate_synthetic(2, 2, 2, 2);
        let vocab = build_vocab(&corpus, 1);
        Model::new(TrainConfig { d, seed, ..TrainConfig::default() }, vocab).unwrap()
    }

    #[test]
    fn zero_copy_params_mix_evenly() {
        let mut m = tiny_model(4, 3);
        m.params.get_mut("dec.W_copy").unwrap().fill(0.0);
        m.params.get_mut("dec.b_copy").unwrap().fill(0.0);
        let state = DecoderState::zeros(4);
        let h_d = vec![vec![0.2, -0.1, 0.4, 0.0], vec![0.1, 0.3, -0.2, 0.5]];
        let value_ids = vec![5, 6];
        let (_, dist) = decode_step(&m, 2, &state, &h_d, &value_ids).unwrap();
        assert!((dist.copy_gate - 0.5).abs() < 1e-12);
        // Emission = 0.5 * copy + 0.5 * generation; total mass still 1.
        assert!((dist.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((dist.attention.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_copy_support_leaves_generation_only() {
        let m = tiny_model(4, 4);
        let state = DecoderState::zeros(4);
        let h_d = vec![vec![0.2; 4]];
        // mix_emission with p_ga = 0 reduces exactly to p_gen.
        let (_, dist) = decode_step(&m, 2, &state, &h_d, &[5]).unwrap();
        let p_gen_only = mix_emission(
            &dist.probs.iter().map(|_| 0.0).collect::<Vec<_>>(),
            &dist.attention,
            0.0,
            &[5],
        );
        assert!(p_gen_only.iter().all(|p| *p == 0.0));
        let p = mix_emission(&[0.25, 0.25, 0.5], &[1.0], 0.0, &[1]);
        assert_eq!(p, vec![0.25, 0.25, 0.5]);
    }

    #[test]
    fn duplicate_values_pool_copy_mass() {
        // Two plan positions share one value token: copy mass on that token
        // is p_ga * (beta_1 + beta_2) = p_ga when betas sum to one.
        let p_gen = vec![0.0, 0.0, 1.0];
        let beta = vec![0.7, 0.3];
        let p_ga = 0.4;
        let probs = mix_emission(&p_gen, &beta, p_ga, &[1, 1]);
        assert!((probs[1] - p_ga).abs() < 1e-12);
        assert!((probs[2] - 0.6).abs() < 1e-12);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn emission_sums_to_one_and_beta_normalizes() {
        let m = tiny_model(8, 9);
        let state = DecoderState::zeros(8);
        let h_d: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..8).map(|j| ((i * 3 + j) as f64 * 0.41).cos() * 0.3).collect())
            .collect();
        let value_ids = vec![4, 9, 4];
        let (next, dist) = decode_step(&m, 2, &state, &h_d, &value_ids).unwrap();
        assert!((dist.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((dist.attention.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(dist.copy_gate > 0.0 && dist.copy_gate < 1.0);
        assert_eq!(next.h1.len(), 8);
        // Deterministic: same inputs, same outputs.
        let (next2, dist2) = decode_step(&m, 2, &state, &h_d, &value_ids).unwrap();
        assert_eq!(next, next2);
        assert_eq!(dist.probs, dist2.probs);
    }

    #[test]
    fn state_dimension_mismatch_is_an_error() {
        let m = tiny_model(4, 9);
        let state = DecoderState::zeros(6);
        assert!(decode_step(&m, 2, &state, &[vec![0.0; 4]], &[0]).is_err());
    }

    #[test]
    fn lm_loss_gamma_zero_is_mean_nll() {
        let probs = [0.5, 0.25, 0.125];
        let want = -(0.5f64.ln() + 0.25f64.ln() + 0.125f64.ln()) / 3.0;
        assert!((lm_loss(&probs, 0.0) - want).abs() < 1e-12);
    }

    #[test]
    fn lm_loss_equal_probs_hit_the_clamp() {
        // All reference probabilities equal the mean, so every regularizer
        // term is ln(1e-7): maximal repetition penalty.
        let probs = [0.3, 0.3, 0.3];
        let gamma = 0.05;
        let want = -(0.3f64.ln() + gamma * 1e-7f64.ln());
        assert!((lm_loss(&probs, gamma) - want).abs() < 1e-12);
    }

    #[test]
    fn lm_loss_matches_frozen_oracle() {
        // T=3, probs (0.2, 0.5, 0.8), gamma 0.05; mean is exactly 0.5 so the
        // middle term clamps. Expected value computed with 50-digit
        // arithmetic:
        //   -(ln 0.2 + 0.05 ln 0.3 + ln 0.5 + 0.05 ln 1e-7
        //     + ln 0.8 + 0.05 ln 0.3) / 3 = 1.15067690242958834...
        let want = 1.1506769024295884_f64;
        let got = lm_loss(&[0.2, 0.5, 0.8], 0.05);
        assert!((got - want).abs() < 1e-12, "{got}");
    }
}
