//! Record encoder: four-feature embedding with a ReLU projection, then
//! content-selection gating where each record attends to all others and a
//! sigmoid gate rescales its own representation.

use crate::error::{Error, Result};
use crate::model::Model;
use crate::tape::{Tape, Var};

/// Per-record raw and gated representations.
#[derive(Clone, Debug)]
pub struct RecordEncoding {
    pub raw: Vec<Vec<f64>>,
    pub gated: Vec<Vec<f64>>,
    /// Attention rows (over the other records) from the selection step.
    pub alphas: Vec<Vec<f64>>,
}

pub(crate) struct EncoderVars {
    pub raw: Vec<Var>,
    pub gated: Vec<Var>,
    pub alphas: Vec<Var>,
}

/// ReLU(W_r [E(value); E(entity); E(rtype); E(side)] + b_r).
pub(crate) fn embed_record_var(t: &mut Tape, m: &Model, feature_ids: &[usize; 4]) -> Var {
    let embed = m.ids.embed;
    let parts: Vec<Var> = feature_ids.iter().map(|&id| t.row(embed, id)).collect();
    let cat = t.concat(&parts);
    let proj = t.matvec(m.ids.enc_w_r, cat);
    let b = t.vector_param(m.ids.enc_b_r);
    let z = t.add(proj, b);
    t.relu(z)
}

/// Gating over raw encodings; needs at least two records because each record
/// attends to the others (k != j).
pub(crate) fn content_select_vars(
    t: &mut Tape,
    m: &Model,
    raw: &[Var],
) -> Result<(Vec<Var>, Vec<Var>)> {
    let n = raw.len();
    if n < 2 {
        return Err(Error::Invalid(format!(
            "content selection needs at least 2 records, got {n}"
        )));
    }
    let projected: Vec<Var> = raw.iter().map(|&r| t.matvec(m.ids.enc_w_a, r)).collect();
    let mut gated = Vec::with_capacity(n);
    let mut alphas = Vec::with_capacity(n);
    for j in 0..n {
        let mut logits = Vec::with_capacity(n - 1);
        let mut others = Vec::with_capacity(n - 1);
        for k in 0..n {
            if k == j {
                continue;
            }
            logits.push(t.dot(raw[j], projected[k]));
            others.push(raw[k]);
        }
        let logit_vec = t.concat(&logits);
        let alpha = t.softmax(logit_vec);
        let context = t.mix_vecs(alpha, &others);
        let cat = t.concat(&[raw[j], context]);
        let att = t.matvec(m.ids.enc_w_g, cat);
        let gate = t.sigmoid(att);
        gated.push(t.mul(gate, raw[j]));
        alphas.push(alpha);
    }
    Ok((gated, alphas))
}

pub(crate) fn encode_records_vars(
    t: &mut Tape,
    m: &Model,
    feature_ids: &[[usize; 4]],
) -> Result<EncoderVars> {
    let raw: Vec<Var> = feature_ids.iter().map(|f| embed_record_var(t, m, f)).collect();
    let (gated, alphas) = content_select_vars(t, m, &raw)?;
    Ok(EncoderVars { raw, gated, alphas })
}

/// Embeds one record; unresolvable features are an error, never unknown.
pub fn embed_record(m: &Model, record: &crate::corpus::Record) -> Result<Vec<f64>> {
    let ids = m.record_feature_ids(record)?;
    let mut t = Tape::new(&m.params);
    let v = embed_record_var(&mut t, m, &ids);
    Ok(t.value(v).to_vec())
}

/// Content selection over concrete raw vectors; returns gated vectors and
/// the attention rows.
pub fn content_select(m: &Model, raw: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut t = Tape::new(&m.params);
    let raw_vars: Vec<Var> = raw.iter().map(|r| t.leaf(r.clone())).collect();
    let (gated, alphas) = content_select_vars(&mut t, m, &raw_vars)?;
    Ok((
        gated.iter().map(|&v| t.value(v).to_vec()).collect(),
        alphas.iter().map(|&v| t.value(v).to_vec()).collect(),
    ))
}

/// Full record-table encoding.
pub fn encode_records(m: &Model, records: &[crate::corpus::Record]) -> Result<RecordEncoding> {
    let mut feats = Vec::with_capacity(records.len());
    for r in records {
        feats.push(m.record_feature_ids(r)?);
    }
    let mut t = Tape::new(&m.params);
    let vars = encode_records_vars(&mut t, m, &feats)?;
    Ok(RecordEncoding {
        raw: vars.raw.iter().map(|&v| t.value(v).to_vec()).collect(),
        gated: vars.gated.iter().map(|&v| t.value(v).to_vec()).collect(),
        alphas: vars.alphas.iter().map(|&v| t.value(v).to_vec()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TrainConfig;
    use crate::corpus::{build_vocab, generate_synthetic, Record, Side};
    use crate::model::Model;

    fn fixture_corpus() -> crate::corpus::Corpus {
        let records = vec![
            Record::new("Mesa", "Hawks", "T-CITY", Side::V),
            Record::new("Hawks", "Hawks", "T-NAME", Side::V),
            Record::new("7", "Hawks", "T-PTS", Side::V),
            Record::new("Alan", "Alan_Stone", "F_NAME", Side::H),
            Record::new("Stone", "Alan_Stone", "S_NAME", Side::H),
            Record::new("12", "Alan_Stone", "PTS", Side::H),
        ];
        let text: Vec<String> =
            "Alan Stone scored 12 points .".split_whitespace().map(String::from).collect();
        crate::corpus::Corpus::new(vec![crate::corpus::GameExample::new(records, text)])
    }

    fn tiny_model(d: usize, seed: u64) -> Model {
        let vocab = build_vocab(&fixture_corpus(), 1);
        let config = TrainConfig { d, seed, ..TrainConfig::default() };
        Model::new(config, vocab).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_embedding() {
        let mut m = tiny_model(4, 1);
        m.params.get_mut("enc.W_r").unwrap().fill(0.0);
        m.params.get_mut("enc.b_r").unwrap().fill(0.0);
        let r = Record::new("Mesa", "Hawks", "T-CITY", Side::V);
        let v = embed_record(&m, &r).unwrap();
        assert!(v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn negative_bias_is_clipped_by_relu() {
        let mut m = tiny_model(4, 1);
        m.params.get_mut("enc.W_r").unwrap().fill(0.0);
        m.params.get_mut("enc.b_r").unwrap().fill(-1.0);
        let r = Record::new("Mesa", "Hawks", "T-CITY", Side::V);
        let v = embed_record(&m, &r).unwrap();
        assert!(v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn hand_computed_embedding_at_d2() {
        // d=2: concatenated embedding has 8 entries; set W_r so that
        // out[0] = sum of first four, out[1] = sum of last four, bias 0.
        let mut m = tiny_model(2, 1);
        {
            let e = m.params.get_mut("embed.E").unwrap();
            e.fill(0.0);
        }
        let r = Record::new("Mesa", "Hawks", "T-CITY", Side::V);
        let ids = m.record_feature_ids(&r).unwrap();
        {
            let e = m.params.get_mut("embed.E").unwrap();
            for (pos, &id) in ids.iter().enumerate() {
                *e.at_mut(id, 0) = 0.1 * (pos as f64 + 1.0);
                *e.at_mut(id, 1) = -0.2 * (pos as f64 + 1.0);
            }
        }
        {
            let w = m.params.get_mut("enc.W_r").unwrap();
            w.fill(0.0);
            for c in 0..8 {
                *w.at_mut(c % 2, c) = 1.0;
            }
        }
        m.params.get_mut("enc.b_r").unwrap().fill(0.0);
        // Row layout: W_r[0] picks even positions (all the 0.1k entries of
        // dimension 0 interleaved), W_r[1] the odd ones.
        // concat = [0.1,-0.2, 0.2,-0.4, 0.3,-0.6, 0.4,-0.8]
        // out[0] = 0.1+0.2+0.3+0.4 = 1.0 ; out[1] = -(0.2+0.4+0.6+0.8) = -2.0 -> ReLU 0
        let v = embed_record(&m, &r).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12, "{v:?}");
        assert_eq!(v[1], 0.0);
    }

    #[test]
    fn unresolvable_feature_is_an_error() {
        let m = tiny_model(4, 1);
        let r = Record::new("NotAValue", "Nobody", "NOPE", Side::V);
        assert!(embed_record(&m, &r).is_err());
    }

    #[test]
    fn identical_raw_vectors_give_uniform_attention() {
        let m = tiny_model(4, 2);
        let raw = vec![vec![0.5, 0.1, 0.2, 0.3]; 3];
        let (_, alphas) = content_select(&m, &raw).unwrap();
        for row in &alphas {
            assert_eq!(row.len(), 2);
            for a in row {
                assert!((a - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_gate_weights_halve_the_raw_vectors() {
        let mut m = tiny_model(4, 3);
        m.params.get_mut("enc.W_g").unwrap().fill(0.0);
        let raw = vec![
            vec![0.5, 0.1, 0.2, 0.3],
            vec![0.4, 0.0, 0.9, 0.1],
            vec![0.2, 0.2, 0.2, 0.2],
        ];
        let (gated, _) = content_select(&m, &raw).unwrap();
        for (g, r) in gated.iter().zip(&raw) {
            for (gv, rv) in g.iter().zip(r) {
                assert!((gv - 0.5 * rv).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_direct_summation_oracle() {
        // Independent oracle: direct three-term sums at d=2, n=3.
        let m = tiny_model(2, 7);
        let raw = vec![vec![0.3, -0.2], vec![0.15, 0.4], vec![-0.05, 0.2]];
        let (gated, alphas) = content_select(&m, &raw).unwrap();

        let w_a = m.params.get("enc.W_a").unwrap();
        let w_g = m.params.get("enc.W_g").unwrap();
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        for j in 0..3 {
            let others: Vec<usize> = (0..3).filter(|k| *k != j).collect();
            let mut exps = Vec::new();
            for &k in &others {
                let mut s = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        s += raw[j][a] * w_a.at(a, b) * raw[k][b];
                    }
                }
                exps.push(s.exp());
            }
            let z: f64 = exps.iter().sum();
            let alpha: Vec<f64> = exps.iter().map(|e| e / z).collect();
            for (got, want) in alphas[j].iter().zip(&alpha) {
                assert!((got - want).abs() < 1e-12);
            }
            let mut c = [0.0; 2];
            for (w, &k) in alpha.iter().zip(&others) {
                for a in 0..2 {
                    c[a] += w * raw[k][a];
                }
            }
            let cat = [raw[j][0], raw[j][1], c[0], c[1]];
            for a in 0..2 {
                let mut att = 0.0;
                for (bidx, cv) in cat.iter().enumerate() {
                    att += w_g.at(a, bidx) * cv;
                }
                let want = sig(att) * raw[j][a];
                assert!((gated[j][a] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attention_rows_sum_to_one_and_gates_shrink() {
        let corpus = generate_synthetic(4, 1, 2, 2);
        let vocab = build_vocab(&corpus, 1);
        let m = Model::new(TrainConfig { d: 8, seed: 11, ..TrainConfig::default() }, vocab)
            .unwrap();
        let enc = encode_records(&m, &corpus.examples[0].records).unwrap();
        for row in &enc.alphas {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        for (g, r) in enc.gated.iter().zip(&enc.raw) {
            for (gv, rv) in g.iter().zip(r) {
                assert!(gv.abs() <= rv.abs() + 1e-12);
                assert!(*rv >= 0.0);
            }
        }
    }

    #[test]
    fn fewer_than_two_records_is_an_error() {
        let m = tiny_model(4, 1);
        assert!(content_select(&m, &[vec![0.0; 4]]).is_err());
    }
}
