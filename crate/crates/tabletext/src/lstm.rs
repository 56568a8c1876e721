//! Single LSTM cell as a tape subgraph. Gate layout in the fused
//! projection is [input, forget, cell, output].

use rand::Rng;

use crate::params::ParamSet;
use crate::tape::{Tape, Var};

#[derive(Clone, Copy, Debug)]
pub struct LstmIds {
    pub w_x: usize,
    pub w_h: usize,
    pub b: usize,
    pub hidden: usize,
}

/// Registers the three tensors of one cell under `prefix`.
pub fn register_lstm<R: Rng>(
    params: &mut ParamSet,
    prefix: &str,
    input: usize,
    hidden: usize,
    rng: &mut R,
) -> LstmIds {
    LstmIds {
        w_x: params.register(&format!("{prefix}.W_x"), 4 * hidden, input, rng),
        w_h: params.register(&format!("{prefix}.W_h"), 4 * hidden, hidden, rng),
        b: params.register(&format!("{prefix}.b"), 1, 4 * hidden, rng),
        hidden,
    }
}

pub fn lstm_ids(params: &ParamSet, prefix: &str, hidden: usize) -> LstmIds {
    LstmIds {
        w_x: params.id(&format!("{prefix}.W_x")).expect("lstm W_x"),
        w_h: params.id(&format!("{prefix}.W_h")).expect("lstm W_h"),
        b: params.id(&format!("{prefix}.b")).expect("lstm b"),
        hidden,
    }
}

/// One step: returns (h', c').
pub fn lstm_step(t: &mut Tape, ids: &LstmIds, x: Var, h: Var, c: Var) -> (Var, Var) {
    let d = ids.hidden;
    let zx = t.matvec(ids.w_x, x);
    let zh = t.matvec(ids.w_h, h);
    let z = t.add(zx, zh);
    let b = t.vector_param(ids.b);
    let z = t.add(z, b);

    let i_pre = t.slice(z, 0, d);
    let f_pre = t.slice(z, d, d);
    let g_pre = t.slice(z, 2 * d, d);
    let o_pre = t.slice(z, 3 * d, d);

    let i = t.sigmoid(i_pre);
    let f = t.sigmoid(f_pre);
    let g = t.tanh(g_pre);
    let o = t.sigmoid(o_pre);

    let fc = t.mul(f, c);
    let ig = t.mul(i, g);
    let c_new = t.add(fc, ig);
    let tc = t.tanh(c_new);
    let h_new = t.mul(o, tc);
    (h_new, c_new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Plain-loop reference, independent of the tape ops.
    pub fn lstm_step_reference(
        w_x: &crate::tensor::Tensor,
        w_h: &crate::tensor::Tensor,
        b: &[f64],
        x: &[f64],
        h: &[f64],
        c: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let d = h.len();
        let mut z = w_x.matvec(x);
        let zh = w_h.matvec(h);
        for (zv, hv) in z.iter_mut().zip(zh) {
            *zv += hv;
        }
        for (zv, bv) in z.iter_mut().zip(b) {
            *zv += bv;
        }
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h_new = vec![0.0; d];
        let mut c_new = vec![0.0; d];
        for k in 0..d {
            let i = sig(z[k]);
            let f = sig(z[d + k]);
            let g = z[2 * d + k].tanh();
            let o = sig(z[3 * d + k]);
            c_new[k] = f * c[k] + i * g;
            h_new[k] = o * c_new[k].tanh();
        }
        (h_new, c_new)
    }

    #[test]
    fn step_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut params = ParamSet::new();
        let ids = register_lstm(&mut params, "cell", 3, 4, &mut rng);

        let x = vec![0.3, -0.2, 0.9];
        let h = vec![0.1, 0.0, -0.4, 0.2];
        let c = vec![0.5, -0.1, 0.2, 0.0];

        let mut t = Tape::new(&params);
        let xv = t.leaf(x.clone());
        let hv = t.leaf(h.clone());
        let cv = t.leaf(c.clone());
        let (h2, c2) = lstm_step(&mut t, &ids, xv, hv, cv);

        let (hr, cr) = lstm_step_reference(
            params.get("cell.W_x").unwrap(),
            params.get("cell.W_h").unwrap(),
            params.get("cell.b").unwrap().row(0),
            &x,
            &h,
            &c,
        );
        for (a, b) in t.value(h2).iter().zip(&hr) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in t.value(c2).iter().zip(&cr) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weights_keep_state_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params = ParamSet::new();
        let ids = register_lstm(&mut params, "z", 2, 3, &mut rng);
        params.get_mut("z.W_x").unwrap().fill(0.0);
        params.get_mut("z.W_h").unwrap().fill(0.0);
        params.get_mut("z.b").unwrap().fill(0.0);

        let mut t = Tape::new(&params);
        let x = t.leaf(vec![1.0, -1.0]);
        let h = t.zeros(3);
        let c = t.zeros(3);
        let (h2, c2) = lstm_step(&mut t, &ids, x, h, c);
        assert!(t.value(h2).iter().all(|v| *v == 0.0));
        assert!(t.value(c2).iter().all(|v| *v == 0.0));
    }
}
