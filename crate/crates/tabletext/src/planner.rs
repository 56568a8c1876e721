//! Static content planner: a pointer-style LSTM over the gated record
//! encodings. The candidate list is the records plus a learned end-of-plan
//! sentinel; teacher-forced training targets the gold plan followed by the
//! sentinel, and greedy inference stops when the sentinel wins.

use crate::error::{Error, Result};
use crate::lstm::lstm_step;
use crate::model::{Mode, Model};
use crate::plans::StaticPlan;
use crate::tape::{Tape, Var};

/// Teacher-forced pointer scores.
#[derive(Clone, Debug)]
pub struct PlannerOutput {
    /// Per step, per candidate (records then sentinel last).
    pub logits: Vec<Vec<f64>>,
    pub probs: Vec<Vec<f64>>,
    pub chosen: StaticPlan,
}

pub(crate) struct PlannerVars {
    pub loss: Var,
    pub step_probs: Vec<Var>,
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

/// Mean of the gated encodings initializes the recurrence.
fn mean_vec(t: &mut Tape, items: &[Var]) -> Var {
    let weights = t.leaf(vec![1.0 / items.len() as f64; items.len()]);
    t.mix_vecs(weights, items)
}

/// One pointer distribution: softmax over h^T W_c candidate_j.
fn pointer_probs(t: &mut Tape, h: Var, projected: &[Var]) -> Var {
    let logits: Vec<Var> = projected.iter().map(|&q| t.dot(h, q)).collect();
    let stacked = t.concat(&logits);
    t.softmax(stacked)
}

/// Teacher-forced forward over `gold` (record indices); runs gold.len() + 1
/// steps, the last targeting the sentinel. Returns the summed negative
/// log-likelihood (Eq.-4-style sum, not a mean) and the per-step pointer
/// distributions.
pub(crate) fn plan_forward_vars(
    t: &mut Tape,
    m: &Model,
    gated: &[Var],
    gold: &[usize],
    mode: &mut Mode,
) -> Result<PlannerVars> {
    let n = gated.len();
    if n == 0 {
        return Err(Error::Invalid("planner needs at least one record".into()));
    }
    for &g in gold {
        if g >= n {
            return Err(Error::Validation(format!("gold plan index {g} out of range")));
        }
    }
    let sentinel = t.vector_param(m.ids.planner_sentinel);
    let mut candidates: Vec<Var> = gated.to_vec();
    candidates.push(sentinel);
    let projected: Vec<Var> =
        candidates.iter().map(|&c| t.matvec(m.ids.planner_w_c, c)).collect();

    let mut h = mean_vec(t, gated);
    let mut c = t.zeros(m.config.d);
    let mut step_probs = Vec::with_capacity(gold.len() + 1);
    let mut log_terms = Vec::with_capacity(gold.len() + 1);

    for i in 0..=gold.len() {
        let input = if i == 0 { t.vector_param(m.ids.planner_start) } else { candidates[gold[i - 1]] };
        let input = maybe_dropout(t, input, m.config.dropout, mode);
        let (h2, c2) = lstm_step(t, &m.ids.planner_lstm, input, h, c);
        h = h2;
        c = c2;
        let probs = pointer_probs(t, h, &projected);
        let target = if i < gold.len() { gold[i] } else { n };
        let p = t.at(probs, target);
        log_terms.push(t.ln(p));
        step_probs.push(probs);
    }
    let stacked = t.concat(&log_terms);
    let sum = t.sum(stacked);
    let loss = t.mul_const(sum, -1.0);
    Ok(PlannerVars { loss, step_probs })
}

/// Teacher-forced pointer scores over concrete gated encodings.
pub fn plan_forward(m: &Model, gated: &[Vec<f64>], gold: &StaticPlan) -> Result<PlannerOutput> {
    let mut t = Tape::new(&m.params);
    let gated_vars: Vec<Var> = gated.iter().map(|g| t.leaf(g.clone())).collect();
    let vars = plan_forward_vars(&mut t, m, &gated_vars, &gold.indices, &mut Mode::Eval)?;
    let probs: Vec<Vec<f64>> =
        vars.step_probs.iter().map(|&v| t.value(v).to_vec()).collect();
    let logits = probs
        .iter()
        .map(|row| row.iter().map(|p| p.max(1e-300).ln()).collect())
        .collect();
    Ok(PlannerOutput { logits, probs, chosen: gold.clone() })
}

/// Summed pointer negative log-likelihood over however many steps `gold`
/// covers of `output`.
pub fn static_plan_loss(output: &PlannerOutput, gold: &[usize]) -> f64 {
    let mut loss = 0.0;
    for (i, &g) in gold.iter().enumerate() {
        loss -= output.probs[i][g].ln();
    }
    loss
}

/// Greedy pointer inference (argmax per step, ties to the lowest index),
/// feeding the chosen record back in; stops at the sentinel or after
/// `max_plan_length` picks.
pub fn plan_infer(m: &Model, gated: &[Vec<f64>], max_plan_length: usize) -> Result<StaticPlan> {
    let n = gated.len();
    if n == 0 {
        return Err(Error::Invalid("planner needs at least one record".into()));
    }
    let mut t = Tape::new(&m.params);
    let gated_vars: Vec<Var> = gated.iter().map(|g| t.leaf(g.clone())).collect();
    let sentinel = t.vector_param(m.ids.planner_sentinel);
    let mut candidates = gated_vars.clone();
    candidates.push(sentinel);
    let projected: Vec<Var> =
        candidates.iter().map(|&c| t.matvec(m.ids.planner_w_c, c)).collect();

    let mut h = mean_vec(&mut t, &gated_vars);
    let mut c = t.zeros(m.config.d);
    let mut input = t.vector_param(m.ids.planner_start);
    let mut plan = Vec::new();
    for _ in 0..max_plan_length {
        let (h2, c2) = lstm_step(&mut t, &m.ids.planner_lstm, input, h, c);
        h = h2;
        c = c2;
        let probs = pointer_probs(&mut t, h, &projected);
        let row = t.value(probs);
        let mut best = 0;
        for (j, &p) in row.iter().enumerate() {
            if p > row[best] {
                best = j;
            }
        }
        if best == n {
            break;
        }
        plan.push(best);
        input = candidates[best];
    }
    Ok(StaticPlan::new(plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TrainConfig;
    use crate::corpus::{build_vocab, generate_synthetic};
    use crate::lstm::lstm_ids;
    use crate::model::Model;
    use crate::tensor::Tensor;

    fn tiny_model(d: usize, seed: u64) -> Model {
        let corpus = generate_synthetic(2, 2, 2, 2);
        let vocab = build_vocab(&corpus, 1);
        Model::new(TrainConfig { d, seed, ..TrainConfig::default() }, vocab).unwrap()
    }

    #[test]
    fn zero_pointer_matrix_gives_uniform_rows() {
        let mut m = tiny_model(4, 5);
        m.params.get_mut("planner.W_c").unwrap().fill(0.0);
        let gated = vec![vec![0.1; 4], vec![0.5; 4], vec![0.3; 4]];
        let out = plan_forward(&m, &gated, &StaticPlan::new(vec![0, 2])).unwrap();
        assert_eq!(out.probs.len(), 3); // two gold steps plus the sentinel step
        for row in &out.probs {
            assert_eq!(row.len(), 4); // three records plus sentinel
            for p in row {
                assert!((p - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_candidate_has_probability_one() {
        // Pointer softmax over a single candidate is a point mass; exercised
        // directly on the distribution builder.
        let m = tiny_model(4, 6);
        let mut t = Tape::new(&m.params);
        let h = t.leaf(vec![0.3, -0.2, 0.1, 0.9]);
        let cand = t.leaf(vec![0.5, 0.5, 0.0, 0.1]);
        let q = t.matvec(m.ids.planner_w_c, cand);
        let probs = pointer_probs(&mut t, h, &[q]);
        assert_eq!(t.value(probs), &[1.0]);
    }

    #[test]
    fn forward_matches_direct_recurrence_oracle() {
        // Hand-rolled step-by-step recurrence at d=2 with 3 records.
        let m = tiny_model(2, 9);
        let gated =
            vec![vec![0.2, -0.1], vec![0.05, 0.3], vec![-0.2, 0.15]];
        let gold = vec![1, 0];
        let out = plan_forward(&m, &gated, &StaticPlan::new(gold.clone())).unwrap();

        let ids = lstm_ids(&m.params, "planner.lstm", 2);
        let w_x = m.params.tensor(ids.w_x).clone();
        let w_h = m.params.tensor(ids.w_h).clone();
        let b = m.params.tensor(ids.b).row(0).to_vec();
        let w_c = m.params.get("planner.W_c").unwrap().clone();
        let sentinel = m.params.get("planner.sentinel").unwrap().row(0).to_vec();
        let start = m.params.get("planner.start").unwrap().row(0).to_vec();

        let mut cands = gated.clone();
        cands.push(sentinel);
        let mut h = vec![0.0; 2];
        for g in &gated {
            for (hv, gv) in h.iter_mut().zip(g) {
                *hv += gv / 3.0;
            }
        }
        let mut c = vec![0.0; 2];
        let mut probs_oracle = Vec::new();
        for i in 0..=gold.len() {
            let input = if i == 0 { start.clone() } else { cands[gold[i - 1]].clone() };
            let (h2, c2) = step_ref(&w_x, &w_h, &b, &input, &h, &c);
            h = h2;
            c = c2;
            let mut logits = Vec::new();
            for cand in &cands {
                let proj = w_c.matvec(cand);
                logits.push(h.iter().zip(&proj).map(|(a, b)| a * b).sum::<f64>());
            }
            let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
            let z: f64 = exps.iter().sum();
            probs_oracle.push(exps.iter().map(|e| e / z).collect::<Vec<f64>>());
        }
        for (got, want) in out.probs.iter().zip(&probs_oracle) {
            for (a, b) in got.iter().zip(want) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    fn step_ref(
        w_x: &Tensor,
        w_h: &Tensor,
        b: &[f64],
        x: &[f64],
        h: &[f64],
        c: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let d = h.len();
        let mut z = w_x.matvec(x);
        for (zv, hv) in z.iter_mut().zip(w_h.matvec(h)) {
            *zv += hv;
        }
        for (zv, bv) in z.iter_mut().zip(b) {
            *zv += bv;
        }
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h2 = vec![0.0; d];
        let mut c2 = vec![0.0; d];
        for k in 0..d {
            let i = sig(z[k]);
            let f = sig(z[d + k]);
            let g = z[2 * d + k].tanh();
            let o = sig(z[3 * d + k]);
            c2[k] = f * c[k] + i * g;
            h2[k] = o * c2[k].tanh();
        }
        (h2, c2)
    }

    #[test]
    fn loss_zero_when_gold_has_probability_one() {
        let out = PlannerOutput {
            logits: vec![vec![0.0, -100.0]],
            probs: vec![vec![1.0, 0.0]],
            chosen: StaticPlan::new(vec![0]),
        };
        assert_eq!(static_plan_loss(&out, &[0]), 0.0);
    }

    #[test]
    fn loss_uniform_is_k_ln_n() {
        let n = 5;
        let k = 3;
        let out = PlannerOutput {
            logits: vec![vec![0.0; n]; k],
            probs: vec![vec![1.0 / n as f64; n]; k],
            chosen: StaticPlan::new(vec![0; k]),
        };
        let loss = static_plan_loss(&out, &[1, 2, 0]);
        assert!((loss - k as f64 * (n as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_matches_summation_oracle_on_random_rows() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let k = 4;
        let n = 6;
        let mut probs = Vec::new();
        for _ in 0..k {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.01).collect();
            let z: f64 = raw.iter().sum();
            probs.push(raw.iter().map(|v| v / z).collect::<Vec<f64>>());
        }
        let gold: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
        let out = PlannerOutput {
            logits: probs.clone(),
            probs: probs.clone(),
            chosen: StaticPlan::new(gold.clone()),
        };
        let mut oracle = 0.0;
        for (i, &g) in gold.iter().enumerate() {
            oracle -= probs[i][g].ln();
        }
        assert!((static_plan_loss(&out, &gold) - oracle).abs() < 1e-12);
    }

    #[test]
    fn infer_with_zero_pointer_matrix_ties_to_lowest_index() {
        let mut m = tiny_model(4, 5);
        m.params.get_mut("planner.W_c").unwrap().fill(0.0);
        let gated = vec![vec![0.1; 4], vec![0.5; 4]];
        let plan = plan_infer(&m, &gated, 6).unwrap();
        // Uniform rows tie-break to candidate 0, never the sentinel.
        assert_eq!(plan.indices, vec![0; 6]);
    }

    #[test]
    fn infer_single_record_repeats_until_cutoff() {
        let mut m = tiny_model(4, 8);
        m.params.get_mut("planner.W_c").unwrap().fill(0.0);
        let gated = vec![vec![0.4, 0.2, 0.1, 0.3]];
        let plan = plan_infer(&m, &gated, 4).unwrap();
        assert_eq!(plan.indices, vec![0; 4]);
    }

    #[test]
    fn pointer_rows_are_stochastic() {
        let m = tiny_model(8, 12);
        let gated: Vec<Vec<f64>> =
            (0..5).map(|i| (0..8).map(|j| ((i * 8 + j) as f64 * 0.013).sin() * 0.2).collect()).collect();
        let out = plan_forward(&m, &gated, &StaticPlan::new(vec![0, 3, 1])).unwrap();
        for row in &out.probs {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }
}
