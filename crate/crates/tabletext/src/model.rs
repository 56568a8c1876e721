//! Model assembly: the named parameter set for all four components, example
//! encoding, and the joint teacher-forced forward pass that produces the
//! combined loss lambda1*L_sp + lambda2*L_dp + lambda3*L_lm + lambda4*L_rec
//! on a single tape.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::corpus::{GameExample, Record, Vocabulary, BEGIN, END};
use crate::decoder;
use crate::dynamic;
use crate::encoder;
use crate::error::{Error, Result};
use crate::lstm::{self, LstmIds};
use crate::params::ParamSet;
use crate::planner;
use crate::reconstruct;
use crate::tape::{Tape, Var};

/// Parameter ids resolved once at construction.
#[derive(Clone, Debug)]
pub struct ParamIds {
    pub embed: usize,
    pub enc_w_r: usize,
    pub enc_b_r: usize,
    pub enc_w_a: usize,
    pub enc_w_g: usize,
    pub planner_lstm: LstmIds,
    pub planner_w_c: usize,
    pub planner_start: usize,
    pub planner_sentinel: usize,
    pub plan_fw: LstmIds,
    pub plan_bw: LstmIds,
    pub bridge_h1: usize,
    pub bridge_c1: usize,
    pub bridge_h2: usize,
    pub bridge_c2: usize,
    pub gate_w_d: usize,
    pub dec_l1: LstmIds,
    pub dec_l2: LstmIds,
    pub dec_w_a: usize,
    pub dec_w_d: usize,
    pub dec_w_o: usize,
    pub dec_b_y: usize,
    pub dec_w_copy: usize,
    pub dec_b_copy: usize,
    pub rec_lstm: LstmIds,
    pub rec_w_a: usize,
    pub rec_w_d: usize,
    pub rec_start: usize,
    pub rec_heads: [(usize, usize); 4],
}

#[derive(Clone, Debug)]
pub struct Model {
    pub config: TrainConfig,
    pub vocab: Vocabulary,
    pub params: ParamSet,
    pub ids: ParamIds,
}

impl Model {
    /// Builds a fresh model, parameters uniform(-0.1, 0.1) from the config
    /// seed.
    pub fn new(config: TrainConfig, vocab: Vocabulary) -> Result<Model> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.d;
        let v = vocab.size();
        let mut p = ParamSet::new();

        let embed = p.register("embed.E", v, d, &mut rng);
        let enc_w_r = p.register("enc.W_r", d, 4 * d, &mut rng);
        let enc_b_r = p.register("enc.b_r", 1, d, &mut rng);
        let enc_w_a = p.register("enc.W_a", d, d, &mut rng);
        let enc_w_g = p.register("enc.W_g", d, 2 * d, &mut rng);

        let planner_lstm = lstm::register_lstm(&mut p, "planner.lstm", d, d, &mut rng);
        let planner_w_c = p.register("planner.W_c", d, d, &mut rng);
        let planner_start = p.register("planner.start", 1, d, &mut rng);
        let planner_sentinel = p.register("planner.sentinel", 1, d, &mut rng);

        let h = d / 2;
        let plan_fw = lstm::register_lstm(&mut p, "plan_enc.fw", d, h, &mut rng);
        let plan_bw = lstm::register_lstm(&mut p, "plan_enc.bw", d, h, &mut rng);
        let bridge_h1 = p.register("bridge.W_h1", d, d, &mut rng);
        let bridge_c1 = p.register("bridge.W_c1", d, d, &mut rng);
        let bridge_h2 = p.register("bridge.W_h2", d, d, &mut rng);
        let bridge_c2 = p.register("bridge.W_c2", d, d, &mut rng);

        let gate_w_d = p.register("gate.W_d", 1, 2 * d, &mut rng);

        let dec_l1 = lstm::register_lstm(&mut p, "dec.l1", 2 * d, d, &mut rng);
        let dec_l2 = lstm::register_lstm(&mut p, "dec.l2", d, d, &mut rng);
        let dec_w_a = p.register("dec.W_a", d, d, &mut rng);
        let dec_w_d = p.register("dec.W_d", d, 2 * d, &mut rng);
        let dec_w_o = p.register("dec.W_o", v, d, &mut rng);
        let dec_b_y = p.register("dec.b_y", 1, v, &mut rng);
        let dec_w_copy = p.register("dec.W_copy", 1, d, &mut rng);
        let dec_b_copy = p.register("dec.b_copy", 1, 1, &mut rng);

        let rec_lstm = lstm::register_lstm(&mut p, "rec.lstm", d, d, &mut rng);
        let rec_w_a = p.register("rec.W_a", d, d, &mut rng);
        let rec_w_d = p.register("rec.W_d", d, 2 * d, &mut rng);
        let rec_start = p.register("rec.start", 1, d, &mut rng);
        let rec_heads = [
            (
                p.register("rec.W_val", vocab.values.len().max(1), d, &mut rng),
                p.register("rec.b_val", 1, vocab.values.len().max(1), &mut rng),
            ),
            (
                p.register("rec.W_ent", vocab.entities.len().max(1), d, &mut rng),
                p.register("rec.b_ent", 1, vocab.entities.len().max(1), &mut rng),
            ),
            (
                p.register("rec.W_typ", vocab.rtypes.len().max(1), d, &mut rng),
                p.register("rec.b_typ", 1, vocab.rtypes.len().max(1), &mut rng),
            ),
            (
                p.register("rec.W_side", vocab.sides.len().max(1), d, &mut rng),
                p.register("rec.b_side", 1, vocab.sides.len().max(1), &mut rng),
            ),
        ];

        let ids = ParamIds {
            embed,
            enc_w_r,
            enc_b_r,
            enc_w_a,
            enc_w_g,
            planner_lstm,
            planner_w_c,
            planner_start,
            planner_sentinel,
            plan_fw,
            plan_bw,
            bridge_h1,
            bridge_c1,
            bridge_h2,
            bridge_c2,
            gate_w_d,
            dec_l1,
            dec_l2,
            dec_w_a,
            dec_w_d,
            dec_w_o,
            dec_b_y,
            dec_w_copy,
            dec_b_copy,
            rec_lstm,
            rec_w_a,
            rec_w_d,
            rec_start,
            rec_heads,
        };
        Ok(Model { config, vocab, params: p, ids })
    }

    /// Rebuilds derived ids after loading parameters from a checkpoint.
    pub fn from_parts(config: TrainConfig, vocab: Vocabulary, params: ParamSet) -> Result<Model> {
        let mut m = Model::new(config, vocab)?;
        if params.len() != m.params.len() {
            return Err(Error::Shape(format!(
                "checkpoint has {} tensors, model expects {}",
                params.len(),
                m.params.len()
            )));
        }
        for id in 0..params.len() {
            if params.name(id) != m.params.name(id)
                || params.tensor(id).rows != m.params.tensor(id).rows
                || params.tensor(id).cols != m.params.tensor(id).cols
            {
                return Err(Error::Shape(format!(
                    "checkpoint tensor {} does not match model layout",
                    params.name(id)
                )));
            }
        }
        m.params = params;
        Ok(m)
    }

    pub fn record_feature_ids(&self, r: &Record) -> Result<[usize; 4]> {
        Ok([
            self.vocab.feature_id(&r.value)?,
            self.vocab.feature_id(&r.entity)?,
            self.vocab.feature_id(&r.rtype)?,
            self.vocab.feature_id(&r.side.to_string())?,
        ])
    }

    pub fn joint_loss(&self, ex: &GameExample) -> Result<LossBreakdown> {
        let enc = encode_example(&self.vocab, ex)?;
        let mut tape = Tape::new(&self.params);
        let out = forward_joint(self, &mut tape, &enc, &mut Mode::Eval, None)?;
        Ok(out.breakdown)
    }
}

/// Integer-encoded training example.
#[derive(Clone, Debug)]
pub struct EncodedExample {
    pub feature_ids: Vec<[usize; 4]>,
    /// Gold static plan as record indices.
    pub gold_plan: Vec<usize>,
    /// Main-vocab id of each planned record's value (copy support).
    pub plan_value_ids: Vec<usize>,
    /// Decoder inputs: begin symbol then the text.
    pub inputs: Vec<usize>,
    /// Decoder targets: the text then the end symbol.
    pub targets: Vec<usize>,
    /// Gold dynamic pointer per decoding step (the end step repeats the
    /// final pointer).
    pub gold_pointers: Vec<usize>,
    /// Per planned record, per field: (main-vocab id for teacher-forced
    /// input, field-vocab target id).
    pub rec_fields: Vec<[(usize, usize); 4]>,
}

/// Encodes an example for training; both gold plans must be present.
pub fn encode_example(vocab: &Vocabulary, ex: &GameExample) -> Result<EncodedExample> {
    let sp = ex.static_plan.as_ref().ok_or_else(|| {
        Error::Invalid("example has no static plan; run extract-plans first".into())
    })?;
    let dp = ex.dynamic_plan.as_ref().ok_or_else(|| {
        Error::Invalid("example has no dynamic plan; run extract-plans first".into())
    })?;
    if sp.is_empty() {
        return Err(Error::Invalid("example has an empty static plan".into()));
    }
    if dp.pointers.len() != ex.text.len() {
        return Err(Error::Validation("dynamic plan length != text length".into()));
    }
    let mut feature_ids = Vec::with_capacity(ex.records.len());
    for r in &ex.records {
        feature_ids.push([
            vocab.feature_id(&r.value)?,
            vocab.feature_id(&r.entity)?,
            vocab.feature_id(&r.rtype)?,
            vocab.feature_id(&r.side.to_string())?,
        ]);
    }
    let mut plan_value_ids = Vec::with_capacity(sp.len());
    let mut rec_fields = Vec::with_capacity(sp.len());
    for &ri in &sp.indices {
        let r = ex.records.get(ri).ok_or_else(|| {
            Error::Validation(format!("static plan index {ri} out of range"))
        })?;
        plan_value_ids.push(vocab.feature_id(&r.value)?);
        let side = r.side.to_string();
        rec_fields.push([
            (vocab.feature_id(&r.value)?, vocab.values.strict(&r.value)?),
            (vocab.feature_id(&r.entity)?, vocab.entities.strict(&r.entity)?),
            (vocab.feature_id(&r.rtype)?, vocab.rtypes.strict(&r.rtype)?),
            (vocab.feature_id(&side)?, vocab.sides.strict(&side)?),
        ]);
    }
    let text_ids = vocab.encode_text(&ex.text);
    let mut inputs = Vec::with_capacity(text_ids.len() + 1);
    inputs.push(BEGIN);
    inputs.extend(&text_ids);
    let mut targets = text_ids.clone();
    targets.push(END);
    let mut gold_pointers = dp.pointers.clone();
    gold_pointers.push(dp.pointers.last().copied().unwrap_or(0));
    Ok(EncodedExample {
        feature_ids,
        gold_plan: sp.indices.clone(),
        plan_value_ids,
        inputs,
        targets,
        gold_pointers,
        rec_fields,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub sp: f64,
    pub dp: f64,
    pub lm: f64,
    pub rec: f64,
}

/// Forward-pass diagnostics: every normalized distribution the architecture
/// produces, copied out of the tape.
#[derive(Clone, Debug, Default)]
pub struct ForwardTrace {
    pub alphas: Vec<Vec<f64>>,
    pub pointer_probs: Vec<Vec<f64>>,
    pub gate_p: Vec<Vec<f64>>,
    pub taus: Vec<Vec<f64>>,
    pub betas: Vec<Vec<f64>>,
    pub copy_gates: Vec<f64>,
    /// Total probability mass of the full emission distribution per step.
    pub emission_totals: Vec<f64>,
}

pub enum Mode {
    Eval,
    /// Dropout active, masks drawn from the carried rng.
    Train(ChaCha8Rng),
}

pub struct JointForward {
    pub loss: Var,
    pub breakdown: LossBreakdown,
}

fn dropout_mask(t: &mut Tape, n: usize, rate: f64, rng: &mut ChaCha8Rng) -> Option<Var> {
    if rate <= 0.0 {
        return None;
    }
    let keep = 1.0 - rate;
    let mask: Vec<f64> =
        (0..n).map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect();
    Some(t.leaf(mask))
}

fn maybe_dropout(t: &mut Tape, x: Var, rate: f64, mode: &mut Mode) -> Var {
    match mode {
        Mode::Eval => x,
        Mode::Train(rng) => {
            let n = t.value(x).len();
            match dropout_mask(t, n, rate, rng) {
                Some(m) => t.mul(x, m),
                None => x,
            }
        }
    }
}

/// Builds the full teacher-forced graph for one example and returns the
/// joint loss node. `trace` collects normalized distributions when given.
pub fn forward_joint(
    m: &Model,
    t: &mut Tape,
    ex: &EncodedExample,
    mode: &mut Mode,
    mut trace: Option<&mut ForwardTrace>,
) -> Result<JointForward> {
    let cfg = &m.config;
    let drop = cfg.dropout;

    // Record encoder with content selection.
    let enc = encoder::encode_records_vars(t, m, &ex.feature_ids)?;
    if let Some(tr) = trace.as_deref_mut() {
        tr.alphas = enc.alphas.iter().map(|&v| t.value(v).to_vec()).collect();
    }

    // Static planner, teacher-forced over the gold plan plus the sentinel.
    let planner_out = planner::plan_forward_vars(t, m, &enc.gated, &ex.gold_plan, mode)?;
    if let Some(tr) = trace.as_deref_mut() {
        tr.pointer_probs =
            planner_out.step_probs.iter().map(|&v| t.value(v).to_vec()).collect();
    }
    let sp_loss = planner_out.loss;

    // Plan encoder over the gold-plan representations.
    let selected: Vec<Var> = ex.gold_plan.iter().map(|&ri| enc.gated[ri]).collect();
    let selected_in: Vec<Var> =
        selected.iter().map(|&v| maybe_dropout(t, v, drop, mode)).collect();
    let plan_enc = dynamic::encode_plan_vars(t, m, &selected_in)?;

    // Decoder initial states from the plan encoder's final states.
    let h_cat = t.concat(&[plan_enc.fw_h, plan_enc.bw_h]);
    let c_cat = t.concat(&[plan_enc.fw_c, plan_enc.bw_c]);
    let mut h1 = t.matvec(m.ids.bridge_h1, h_cat);
    let mut c1 = t.matvec(m.ids.bridge_c1, c_cat);
    let mut h2 = t.matvec(m.ids.bridge_h2, h_cat);
    let mut c2 = t.matvec(m.ids.bridge_c2, c_cat);
    let mut h_att = t.zeros(cfg.d);

    let k = ex.gold_plan.len();
    let steps = ex.targets.len();
    let mut dp_terms = Vec::with_capacity(steps);
    let mut target_probs = Vec::with_capacity(steps);
    let mut h2_states = Vec::with_capacity(steps);

    for i in 0..steps {
        // BPTT truncation: cut the recurrent carry every bptt_truncation steps.
        if i > 0 && i % cfg.bptt_truncation == 0 {
            h1 = t.detach(h1);
            c1 = t.detach(c1);
            h2 = t.detach(h2);
            c2 = t.detach(c2);
            h_att = t.detach(h_att);
        }

        // Dynamic gate conditioned on the previous step's second-layer cell;
        // the ablated variant fixes tau uniform and has no supervision.
        let gate = if cfg.ablate_gate {
            dynamic::uniform_gate_vars(t, &plan_enc.h_s)
        } else {
            dynamic::dynamic_gate_vars(t, m, c2, &plan_enc.h_s)
        };
        if let Some(tr) = trace.as_deref_mut() {
            tr.gate_p.push(gate.p.iter().map(|&v| t.scalar(v)).collect());
            tr.taus.push(t.value(gate.tau).to_vec());
        }

        if !cfg.ablate_gate {
            // Gate supervision: log p at the gold slot, log(1-p) elsewhere,
            // probabilities clamped away from 0 and 1.
            let gold_j = ex.gold_pointers[i].min(k - 1);
            let mut term = None;
            for (j, &p) in gate.p.iter().enumerate() {
                let pc = t.clamp(p, 1e-7, 1.0 - 1e-7);
                let contrib = if j == gold_j {
                    t.ln(pc)
                } else {
                    let neg = t.mul_const(pc, -1.0);
                    let one_minus = t.add_const(neg, 1.0);
                    t.ln(one_minus)
                };
                term = Some(match term {
                    None => contrib,
                    Some(acc) => t.add(acc, contrib),
                });
            }
            dp_terms.push(term.expect("plan is non-empty"));
        }

        let step = decoder::decode_step_vars(
            t,
            m,
            ex.inputs[i],
            (h1, c1, h2, c2, h_att),
            &gate.h_d,
            drop,
            mode,
        );
        h1 = step.h1;
        c1 = step.c1;
        h2 = step.h2;
        c2 = step.c2;
        h_att = step.h_att;
        h2_states.push(step.h2);

        if let Some(tr) = trace.as_deref_mut() {
            tr.betas.push(t.value(step.beta).to_vec());
            let p_ga = t.scalar(step.p_ga);
            tr.copy_gates.push(p_ga);
            let beta = t.value(step.beta).to_vec();
            let p_gen = t.value(step.p_gen).to_vec();
            let total = p_ga * beta.iter().sum::<f64>()
                + (1.0 - p_ga) * p_gen.iter().sum::<f64>();
            tr.emission_totals.push(total);
        }

        // Emission probability of the reference token (Eq. 14 mixture).
        let y = ex.targets[i];
        let gen_y = t.at(step.p_gen, y);
        let neg_ga = t.mul_const(step.p_ga, -1.0);
        let one_minus_ga = t.add_const(neg_ga, 1.0);
        let gen_term = t.mul(one_minus_ga, gen_y);
        let copy_positions: Vec<usize> = ex
            .plan_value_ids
            .iter()
            .enumerate()
            .filter(|(_, &vid)| vid == y)
            .map(|(j, _)| j)
            .collect();
        let p_y = if copy_positions.is_empty() {
            gen_term
        } else {
            let betas: Vec<Var> =
                copy_positions.iter().map(|&j| t.at(step.beta, j)).collect();
            let stacked = t.concat(&betas);
            let mass = t.sum(stacked);
            let copy_term = t.mul(step.p_ga, mass);
            t.add(copy_term, gen_term)
        };
        target_probs.push(p_y);
    }

    // L_dp: mean over steps of the accumulated gate terms, negated.
    let dp_loss = if dp_terms.is_empty() {
        t.scalar_leaf(0.0)
    } else {
        let stacked = t.concat(&dp_terms);
        let dp_sum = t.sum(stacked);
        t.mul_const(dp_sum, -1.0 / steps as f64)
    };

    // L_lm with the repetition regularizer around the mean reference
    // probability.
    let p_bar = t.mean_scalars(&target_probs);
    let mut lm_terms = Vec::with_capacity(steps);
    for &p in &target_probs {
        let lp = t.ln(p);
        let diff = t.sub(p, p_bar);
        let ad = t.abs(diff);
        let ad = t.clamp(ad, 1e-7, f64::INFINITY);
        let lad = t.ln(ad);
        let reg = t.mul_const(lad, cfg.gamma_l);
        lm_terms.push(t.add(lp, reg));
    }
    let lm_sum = {
        let stacked = t.concat(&lm_terms);
        t.sum(stacked)
    };
    let lm_loss = t.mul_const(lm_sum, -1.0 / steps as f64);

    // Record reconstruction (training-time only component).
    let rec_loss = if cfg.use_reconstruction && cfg.lambda4 > 0.0 {
        Some(reconstruct::reconstruction_vars(t, m, &h2_states, &ex.rec_fields, mode)?)
    } else {
        None
    };

    let sp_term = t.mul_const(sp_loss, cfg.lambda1);
    let dp_term = t.mul_const(dp_loss, cfg.lambda2);
    let lm_term = t.mul_const(lm_loss, cfg.lambda3);
    let mut total = t.add(sp_term, dp_term);
    total = t.add(total, lm_term);
    if let Some(rl) = rec_loss {
        let rec_term = t.mul_const(rl, cfg.lambda4);
        total = t.add(total, rec_term);
    }

    let breakdown = LossBreakdown {
        total: t.scalar(total),
        sp: t.scalar(sp_loss),
        dp: t.scalar(dp_loss),
        lm: t.scalar(lm_loss),
        rec: rec_loss.map(|r| t.scalar(r)).unwrap_or(0.0),
    };
    Ok(JointForward { loss: total, breakdown })
}
