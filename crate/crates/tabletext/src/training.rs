//! Joint training: Adagrad with per-epoch learning-rate decay, global-norm
//! gradient clipping, per-epoch JSON checkpoints (config + vocabulary +
//! named tensors + optimizer state), and the central-difference gradient
//! checker that iterates every named parameter tensor.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::corpus::{build_vocab, mix_seed, Corpus, GameExample, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{encode_example, forward_joint, EncodedExample, LossBreakdown, Mode, Model};
use crate::params::ParamSet;
use crate::tape::Tape;
use crate::tensor::Tensor;

pub const CHECKPOINT_VERSION: u32 = 1;
const ADAGRAD_EPS: f64 = 1e-10;

/// Live training state; serialized as a checkpoint after every epoch.
pub struct TrainState {
    pub model: Model,
    /// Adagrad squared-gradient accumulators, aligned with the params.
    pub accum: Vec<Tensor>,
    pub lr: f64,
    pub next_epoch: usize,
    /// Mean joint loss per completed epoch.
    pub epoch_losses: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config: TrainConfig,
    vocab: Vocabulary,
    params: ParamSet,
    accum: Vec<Tensor>,
    lr: f64,
    next_epoch: usize,
    epoch_losses: Vec<f64>,
}

pub fn save_checkpoint<P: AsRef<Path>>(state: &TrainState, path: P) -> Result<()> {
    let ck = Checkpoint {
        version: CHECKPOINT_VERSION,
        config: state.model.config.clone(),
        vocab: state.model.vocab.clone(),
        params: state.model.params.clone(),
        accum: state.accum.clone(),
        lr: state.lr,
        next_epoch: state.next_epoch,
        epoch_losses: state.epoch_losses.clone(),
    };
    fs::write(path.as_ref(), serde_json::to_string(&ck)?)?;
    Ok(())
}

pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<TrainState> {
    let content = fs::read_to_string(path.as_ref())?;
    let mut ck: Checkpoint = serde_json::from_str(&content)?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(Error::Invalid(format!(
            "checkpoint version {} not supported (expected {CHECKPOINT_VERSION})",
            ck.version
        )));
    }
    ck.params.reindex();
    let model = Model::from_parts(ck.config, ck.vocab, ck.params)?;
    Ok(TrainState {
        model,
        accum: ck.accum,
        lr: ck.lr,
        next_epoch: ck.next_epoch,
        epoch_losses: ck.epoch_losses,
    })
}

/// Fresh state: vocabulary from the corpus, parameters from the config seed.
pub fn init_train(corpus: &Corpus, config: &TrainConfig) -> Result<TrainState> {
    config.validate()?;
    let vocab = build_vocab(corpus, config.min_count);
    let model = Model::new(config.clone(), vocab)?;
    let accum = model
        .params
        .iter()
        .map(|(_, t)| Tensor::zeros(t.rows, t.cols))
        .collect();
    Ok(TrainState { model, accum, lr: config.lr, next_epoch: 0, epoch_losses: Vec::new() })
}

/// Examples the teacher-forced loss is defined on (non-empty plans).
fn encode_corpus(model: &Model, corpus: &Corpus) -> Result<Vec<EncodedExample>> {
    let mut out = Vec::new();
    let mut skipped = 0usize;
    for ex in &corpus.examples {
        match encode_example(&model.vocab, ex) {
            Ok(enc) => out.push(enc),
            Err(Error::Invalid(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} examples without usable plans");
    }
    if out.is_empty() {
        return Err(Error::Invalid("no trainable examples (are plans extracted?)".into()));
    }
    Ok(out)
}

/// Runs epochs `state.next_epoch ..` until `config.max_epochs`, writing a
/// checkpoint to `checkpoint_path` after each epoch when given. A non-finite
/// loss aborts with the last finite checkpoint already on disk.
pub fn run_epochs(
    state: &mut TrainState,
    corpus: &Corpus,
    checkpoint_path: Option<&Path>,
) -> Result<()> {
    let encoded = encode_corpus(&state.model, corpus)?;
    let seed = state.model.config.seed;
    let max_epochs = state.model.config.max_epochs;
    let batch_size = state.model.config.batch_size;

    while state.next_epoch < max_epochs {
        let epoch = state.next_epoch;
        let mut order: Vec<usize> = (0..encoded.len()).collect();
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xe90c + epoch as u64));
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(batch_size) {
            let mut grads = state.model.params.zero_grads();
            for &idx in batch {
                let ex = &encoded[idx];
                let drop_rng = ChaCha8Rng::seed_from_u64(mix_seed(
                    mix_seed(seed, epoch as u64),
                    idx as u64,
                ));
                let mut mode = Mode::Train(drop_rng);
                let mut tape = Tape::new(&state.model.params);
                let fwd = forward_joint(&state.model, &mut tape, ex, &mut mode, None)?;
                if !fwd.breakdown.total.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                epoch_loss += fwd.breakdown.total;
                tape.backward(fwd.loss, &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            let clip = state.model.config.grad_clip;
            if clip > 0.0 {
                let norm = grads.global_norm();
                if norm > clip {
                    grads.scale(clip / norm);
                }
            }
            adagrad_step(&mut state.model.params, &mut state.accum, &grads.by_id, state.lr);
        }
        let mean_loss = epoch_loss / encoded.len() as f64;
        state.epoch_losses.push(mean_loss);
        state.lr *= state.model.config.lr_decay;
        state.next_epoch += 1;
        log::info!("epoch {epoch}: mean joint loss {mean_loss:.6}, lr now {:.6}", state.lr);
        if let Some(path) = checkpoint_path {
            save_checkpoint(state, path)?;
        }
    }
    Ok(())
}

/// Full training run on a corpus with extracted plans.
pub fn train(corpus: &Corpus, config: &TrainConfig) -> Result<TrainState> {
    let mut state = init_train(corpus, config)?;
    run_epochs(&mut state, corpus, None)?;
    Ok(state)
}

fn adagrad_step(params: &mut ParamSet, accum: &mut [Tensor], grads: &[Tensor], lr: f64) {
    for id in 0..grads.len() {
        let acc = &mut accum[id];
        let g = &grads[id];
        let t = params.tensor_mut(id);
        for k in 0..g.data.len() {
            let gv = g.data[k];
            acc.data[k] += gv * gv;
            t.data[k] -= lr * gv / (acc.data[k].sqrt() + ADAGRAD_EPS);
        }
    }
}

/// Per-tensor maximum relative error between analytic and central-difference
/// gradients.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub per_tensor: Vec<(String, f64)>,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error <= tolerance
    }
}

/// Relative error with an absolute floor so that near-zero gradient pairs
/// compare absolutely.
pub(crate) fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

/// Central-difference check of the joint loss against the tape gradients,
/// sampling up to `samples_per_tensor` entries of every named tensor.
/// Evaluation mode: dropout off, clipping not involved.
pub fn gradient_check(
    model: &mut Model,
    example: &GameExample,
    epsilon: f64,
    samples_per_tensor: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let enc = encode_example(&model.vocab, example)?;
    let mut grads = model.params.zero_grads();
    {
        let mut tape = Tape::new(&model.params);
        let fwd = forward_joint(model, &mut tape, &enc, &mut Mode::Eval, None)?;
        tape.backward(fwd.loss, &mut grads);
    }
    let loss_at = |m: &Model| -> Result<f64> {
        let mut tape = Tape::new(&m.params);
        let fwd = forward_joint(m, &mut tape, &enc, &mut Mode::Eval, None)?;
        Ok(fwd.breakdown.total)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_tensor = Vec::with_capacity(model.params.len());
    let mut max_rel: f64 = 0.0;
    for id in 0..model.params.len() {
        let n = model.params.tensor(id).len();
        let samples: Vec<usize> = if n <= samples_per_tensor {
            (0..n).collect()
        } else {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx.truncate(samples_per_tensor);
            idx
        };
        let mut worst: f64 = 0.0;
        for &k in &samples {
            let orig = model.params.tensor(id).data[k];
            model.params.tensor_mut(id).data[k] = orig + epsilon;
            let up = loss_at(model)?;
            model.params.tensor_mut(id).data[k] = orig - epsilon;
            let down = loss_at(model)?;
            model.params.tensor_mut(id).data[k] = orig;
            let fd = (up - down) / (2.0 * epsilon);
            worst = worst.max(rel_error(grads.by_id[id].data[k], fd));
        }
        max_rel = max_rel.max(worst);
        per_tensor.push((model.params.name(id).to_string(), worst));
    }
    Ok(GradCheckReport { per_tensor, max_rel_error: max_rel })
}

/// Verifies that the comparison flags corrupted gradients: multiplies every
/// sampled analytic gradient by `factor` and reports the resulting error.
/// Used by the harness sabotage test.
pub fn compare_corrupted(analytic: f64, fd: f64, factor: f64) -> f64 {
    rel_error(analytic * factor, fd)
}

/// Joint loss with component breakdown (evaluation mode).
pub fn joint_loss(model: &Model, example: &GameExample) -> Result<LossBreakdown> {
    model.joint_loss(example)
}

/// Minimal two-player fixture (6 records, 10 text tokens) with extracted
/// plans; the vocabulary it induces stays under 40 entries. Used by the
/// gradient-check harness and its CLI subcommand.
pub fn grad_check_example() -> (GameExample, Corpus) {
    use crate::corpus::{Record, Side, F_NAME, PTS, S_NAME};
    use crate::plans::{extract_dynamic_plan, extract_static_plan};
    let records = vec![
        Record::new("Alan", "Alan_Stone", F_NAME, Side::H),
        Record::new("Stone", "Alan_Stone", S_NAME, Side::H),
        Record::new("7", "Alan_Stone", PTS, Side::H),
        Record::new("Bria", "Bria_Reyes", F_NAME, Side::V),
        Record::new("Reyes", "Bria_Reyes", S_NAME, Side::V),
        Record::new("9", "Bria_Reyes", PTS, Side::V),
    ];
    let text: Vec<String> = "Alan Stone scored 7 . Bria Reyes scored 9 ."
        .split_whitespace()
        .map(|t| t.to_string())
        .collect();
    let sp = extract_static_plan(&records, &text);
    let dp = extract_dynamic_plan(&sp, &records, &text);
    let mut ex = GameExample::new(records, text);
    ex.static_plan = Some(sp);
    ex.dynamic_plan = Some(dp);
    let corpus = Corpus::new(vec![ex.clone()]);
    (ex, corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate_synthetic;

    fn small_corpus() -> Corpus {
        generate_synthetic(99, 4, 1, 1)
    }

    fn fast_config() -> TrainConfig {
        TrainConfig {
            d: 8,
            max_epochs: 2,
            dropout: 0.0,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn lr_zero_leaves_parameters_unchanged() {
        let corpus = small_corpus();
        let config = TrainConfig { lr: 0.0, max_epochs: 1, ..fast_config() };
        let before = init_train(&corpus, &config).unwrap();
        let snapshot: Vec<Tensor> =
            before.model.params.iter().map(|(_, t)| t.clone()).collect();
        let after = train(&corpus, &config).unwrap();
        for (id, t) in snapshot.iter().enumerate() {
            assert_eq!(t, after.model.params.tensor(id));
        }
    }

    #[test]
    fn same_seed_same_losses() {
        let corpus = small_corpus();
        let config = fast_config();
        let a = train(&corpus, &config).unwrap();
        let b = train(&corpus, &config).unwrap();
        assert_eq!(a.epoch_losses, b.epoch_losses);
        for id in 0..a.model.params.len() {
            assert_eq!(a.model.params.tensor(id), b.model.params.tensor(id));
        }
    }

    #[test]
    fn resume_replays_identically() {
        let dir = std::env::temp_dir().join(format!("ttx-resume-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let ck = dir.join("ck.json");
        let corpus = small_corpus();
        let config = TrainConfig { max_epochs: 4, ..fast_config() };

        let full = train(&corpus, &config).unwrap();

        let mut half = init_train(&corpus, &TrainConfig { max_epochs: 2, ..config.clone() }).unwrap();
        run_epochs(&mut half, &corpus, Some(&ck)).unwrap();
        let mut resumed = load_checkpoint(&ck).unwrap();
        resumed.model.config.max_epochs = 4;
        run_epochs(&mut resumed, &corpus, None).unwrap();

        assert_eq!(full.epoch_losses, resumed.epoch_losses);
        for id in 0..full.model.params.len() {
            assert_eq!(full.model.params.tensor(id), resumed.model.params.tensor(id));
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn checkpoint_round_trips_bytes() {
        let dir = std::env::temp_dir().join(format!("ttx-ck-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p1 = dir.join("a.json");
        let p2 = dir.join("b.json");
        let corpus = small_corpus();
        let state = train(&corpus, &fast_config()).unwrap();
        save_checkpoint(&state, &p1).unwrap();
        let loaded = load_checkpoint(&p1).unwrap();
        save_checkpoint(&loaded, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn joint_loss_is_linear_in_lambdas() {
        let corpus = small_corpus();
        let base = TrainConfig { use_reconstruction: true, ..fast_config() };
        let state = init_train(&corpus, &base).unwrap();
        let ex = &corpus.examples[0];
        let bd = state.model.joint_loss(ex).unwrap();
        let want = base.lambda1 * bd.sp + base.lambda2 * bd.dp + base.lambda3 * bd.lm
            + base.lambda4 * bd.rec;
        assert!((bd.total - want).abs() < 1e-9, "{} vs {want}", bd.total);

        // All lambdas zero: the joint loss vanishes.
        let zero = TrainConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            lambda4: 0.0,
            ..base
        };
        let state = init_train(&corpus, &zero).unwrap();
        let bd = state.model.joint_loss(ex).unwrap();
        assert_eq!(bd.total, 0.0);
    }

    #[test]
    fn missing_plans_give_a_directing_error() {
        let corpus = small_corpus();
        let state = init_train(&corpus, &fast_config()).unwrap();
        let mut ex = corpus.examples[0].clone();
        ex.static_plan = None;
        ex.dynamic_plan = None;
        let err = state.model.joint_loss(&ex).unwrap_err();
        assert!(err.to_string().contains("extract-plans"), "{err}");
    }

    #[test]
    fn gradient_check_passes_on_small_model() {
        let corpus = generate_synthetic(7, 1, 1, 1);
        let config = TrainConfig {
            d: 8,
            dropout: 0.0,
            use_reconstruction: true,
            seed: 5,
            ..TrainConfig::default()
        };
        let mut state = init_train(&corpus, &config).unwrap();
        let report =
            gradient_check(&mut state.model, &corpus.examples[0], 1e-5, 4, 11).unwrap();
        assert!(
            report.passes(1e-4),
            "max rel error {} at {:?}",
            report.max_rel_error,
            report
                .per_tensor
                .iter()
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        );
    }

    #[test]
    fn corrupted_gradients_are_flagged() {
        // A gradient off by 50% must show up well above the tolerance.
        let err = compare_corrupted(0.02, 0.02, 1.5);
        assert!(err > 1e-2, "{err}");
    }

    #[test]
    fn lambda_isolation_zeroes_unused_paths() {
        let corpus = generate_synthetic(7, 1, 1, 1);
        let config = TrainConfig {
            d: 8,
            dropout: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            lambda4: 0.0,
            seed: 5,
            ..TrainConfig::default()
        };
        let state = init_train(&corpus, &config).unwrap();
        let enc = encode_example(&state.model.vocab, &corpus.examples[0]).unwrap();
        let mut grads = state.model.params.zero_grads();
        let mut tape = Tape::new(&state.model.params);
        let fwd = forward_joint(&state.model, &mut tape, &enc, &mut Mode::Eval, None).unwrap();
        tape.backward(fwd.loss, &mut grads);
        // Decoder-only parameters receive no gradient from the isolated
        // static-planner path.
        for name in ["dec.W_o", "dec.W_copy", "gate.W_d", "rec.W_val"] {
            let id = state.model.params.id(name).unwrap();
            assert!(
                grads.by_id[id].data.iter().all(|g| *g == 0.0),
                "{name} unexpectedly received gradient"
            );
        }
        // The encoder and planner do.
        for name in ["enc.W_r", "planner.W_c", "embed.E"] {
            let id = state.model.params.id(name).unwrap();
            assert!(grads.by_id[id].data.iter().any(|g| *g != 0.0), "{name} has no gradient");
        }
    }
}
