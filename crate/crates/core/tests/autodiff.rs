use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sied::autodiff::nn::{lstm_cell, LstmParams, LstmState};
use sied::autodiff::{
    adam_step, check_all_ops, AdamState, AutodiffError, Checkpoint, ParamGrads, ParamStore, Tape, Tensor,
};

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn square_gradient() {
    let mut tape = Tape::new();
    let x = tape.variable(Tensor::vector(vec![3.0])).unwrap();
    let y = tape.mul(x, x).unwrap();
    let y = tape.sum(y).unwrap();
    let g = tape.backward(y).unwrap();
    assert_eq!(g.wrt(x).unwrap().data(), &[6.0]);
}

#[test]
fn sum_of_softmax_has_zero_gradient() {
    let mut tape = Tape::new();
    let x = tape.variable(Tensor::vector(vec![0.3, -2.0, 5.0, 1.0])).unwrap();
    let s = tape.softmax(x).unwrap();
    let l = tape.sum(s).unwrap();
    let g = tape.backward(l).unwrap();
    assert!(g.wrt(x).unwrap().data().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn gradients_accumulate_across_uses() {
    let mut tape = Tape::new();
    let x = tape.variable(Tensor::vector(vec![2.0, -1.0])).unwrap();
    let a = tape.scale(x, 3.0).unwrap();
    let b = tape.add(a, x).unwrap();
    let l = tape.sum(b).unwrap();
    let g = tape.backward(l).unwrap();
    assert_eq!(g.wrt(x).unwrap().data(), &[4.0, 4.0]);
}

#[test]
fn non_scalar_loss_is_rejected() {
    let mut tape = Tape::new();
    let x = tape.variable(Tensor::vector(vec![1.0, 2.0])).unwrap();
    assert!(matches!(tape.backward(x), Err(AutodiffError::NonScalarLoss(_))));
}

#[test]
fn non_finite_forward_names_the_op() {
    let mut tape = Tape::new();
    let x = tape.variable(Tensor::vector(vec![1e200])).unwrap();
    let err = tape.mul(x, x).unwrap_err();
    assert!(matches!(err, AutodiffError::NonFinite { op: "mul", pass: "forward" }), "{err}");
}

#[test]
fn finite_difference_all_ops_twenty_seeds() {
    for seed in 0..20 {
        for (op, r) in check_all_ops(seed, 1e-5).unwrap() {
            assert!(r.checked > 0, "{op}");
            assert!(r.max_rel_error <= 1e-4, "seed {seed} op {op}: rel {}", r.max_rel_error);
        }
    }
}

#[test]
fn backward_is_deterministic() {
    let run = || {
        let mut tape = Tape::new();
        let x = tape.variable(Tensor::vector(vec![0.1, 0.7, -0.3])).unwrap();
        let y = tape.tanh(x).unwrap();
        let z = tape.softmax_cross_entropy(y, 1).unwrap();
        tape.backward(z).unwrap().wrt(x).unwrap().clone()
    };
    assert_eq!(run(), run());
}

fn zero_lstm(input: usize, hidden: usize) -> (ParamStore, LstmParams) {
    let mut store = ParamStore::new();
    let p = LstmParams::register(&mut store, "l", input, hidden, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    *store.get_mut(p.w) = Tensor::zeros(&[4 * hidden, input + hidden]);
    (store, p)
}

#[test]
fn lstm_zero_params() {
    let (store, p) = zero_lstm(2, 3);
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::vector(vec![0.5, -0.2])).unwrap();
    let h = tape.constant(Tensor::zeros(&[3])).unwrap();
    let c = tape.constant(Tensor::zeros(&[3])).unwrap();
    let s = lstm_cell(&mut tape, &store, &p, x, LstmState { h, c }).unwrap();
    assert!(tape.value(s.h).data().iter().all(|v| *v == 0.0));
    assert!(tape.value(s.c).data().iter().all(|v| *v == 0.0));

    let v = vec![1.0, -2.0, 0.25];
    let c = tape.constant(Tensor::vector(v.clone())).unwrap();
    let s = lstm_cell(&mut tape, &store, &p, x, LstmState { h, c }).unwrap();
    for (k, vk) in v.iter().enumerate() {
        assert!((tape.value(s.c).data()[k] - 0.5 * vk).abs() < 1e-15);
        assert!((tape.value(s.h).data()[k] - 0.5 * (0.5 * vk).tanh()).abs() < 1e-15);
    }
}

#[test]
fn lstm_matches_direct_gate_computation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (xd, hd) = (4, 3);
    let mut store = ParamStore::new();
    let p = LstmParams::register(&mut store, "l", xd, hd, &mut rng).unwrap();
    let w = rand_vec(&mut rng, 4 * hd * (xd + hd));
    let b = rand_vec(&mut rng, 4 * hd);
    *store.get_mut(p.w) = Tensor::matrix(4 * hd, xd + hd, w.clone()).unwrap();
    *store.get_mut(p.b) = Tensor::vector(b.clone());
    let (x, h, c) = (rand_vec(&mut rng, xd), rand_vec(&mut rng, hd), rand_vec(&mut rng, hd));

    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let xh: Vec<f64> = x.iter().chain(&h).copied().collect();
    let pre = |gate: usize, k: usize| {
        let row = gate * hd + k;
        b[row] + (0..xd + hd).map(|j| w[row * (xd + hd) + j] * xh[j]).sum::<f64>()
    };
    let mut want_h = vec![0.0; hd];
    let mut want_c = vec![0.0; hd];
    for k in 0..hd {
        let (i, f, g, o) = (sig(pre(0, k)), sig(pre(1, k)), pre(2, k).tanh(), sig(pre(3, k)));
        want_c[k] = f * c[k] + i * g;
        want_h[k] = o * want_c[k].tanh();
    }

    let mut tape = Tape::new();
    let xv = tape.constant(Tensor::vector(x)).unwrap();
    let hv = tape.constant(Tensor::vector(h)).unwrap();
    let cv = tape.constant(Tensor::vector(c)).unwrap();
    let s = lstm_cell(&mut tape, &store, &p, xv, LstmState { h: hv, c: cv }).unwrap();
    for k in 0..hd {
        assert!((tape.value(s.h).data()[k] - want_h[k]).abs() < 1e-12);
        assert!((tape.value(s.c).data()[k] - want_c[k]).abs() < 1e-12);
    }
}

#[test]
fn lstm_dimension_mismatch() {
    let (store, p) = zero_lstm(2, 3);
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::zeros(&[5])).unwrap();
    let h = tape.constant(Tensor::zeros(&[3])).unwrap();
    assert!(lstm_cell(&mut tape, &store, &p, x, LstmState { h, c: h }).is_err());
}

fn conv(rows: Tensor, filters: Vec<(Tensor, Tensor)>, windows: &[usize]) -> Vec<f64> {
    let mut tape = Tape::new();
    let r = tape.constant(rows).unwrap();
    let fs: Vec<_> =
        filters.into_iter().map(|(w, b)| (tape.constant(w).unwrap(), tape.constant(b).unwrap())).collect();
    let out = tape.conv_ngram_maxpool(r, windows, &fs).unwrap();
    tape.value(out).data().to_vec()
}

#[test]
fn conv_single_token_identity_filter() {
    let emb = vec![0.4, -0.7, 1.2];
    let eye = Tensor::matrix(3, 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
    let out = conv(Tensor::matrix(1, 3, emb.clone()).unwrap(), vec![(eye, Tensor::zeros(&[3]))], &[1]);
    assert_eq!(out, emb.iter().map(|v| v.max(0.0)).collect::<Vec<_>>());
}

#[test]
fn conv_zero_filters_negative_bias() {
    let rows = Tensor::matrix(3, 2, vec![1.0; 6]).unwrap();
    let f = |w: usize| (Tensor::zeros(&[4, w * 2]), Tensor::vector(vec![-1.0; 4]));
    let out = conv(rows, vec![f(1), f(2), f(3)], &[1, 2, 3]);
    assert_eq!(out, vec![0.0; 12]);
}

#[test]
fn conv_matches_nested_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, d, fm) = (5, 3, 4);
    let rows = rand_vec(&mut rng, n * d);
    let mut filters = Vec::new();
    let mut want = Vec::new();
    for w in 1..=3 {
        let wt = rand_vec(&mut rng, fm * w * d);
        let bt = rand_vec(&mut rng, fm);
        for f in 0..fm {
            let mut best = f64::NEG_INFINITY;
            for p in 0..=n - w {
                let mut s = 0.0;
                for r in 0..w {
                    for k in 0..d {
                        s += wt[f * w * d + r * d + k] * rows[(p + r) * d + k];
                    }
                }
                best = best.max((s + bt[f]).max(0.0));
            }
            want.push(best);
        }
        filters.push((Tensor::matrix(fm, w * d, wt).unwrap(), Tensor::vector(bt)));
    }
    let got = conv(Tensor::matrix(n, d, rows).unwrap(), filters, &[1, 2, 3]);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn conv_rejects_too_short_input() {
    let mut tape = Tape::new();
    let r = tape.constant(Tensor::matrix(1, 2, vec![1.0, 1.0]).unwrap()).unwrap();
    let w = tape.constant(Tensor::zeros(&[1, 4])).unwrap();
    let b = tape.constant(Tensor::zeros(&[1])).unwrap();
    assert!(tape.conv_ngram_maxpool(r, &[2], &[(w, b)]).is_err());
}

fn one_param_store(v: f64) -> ParamStore {
    let mut s = ParamStore::new();
    s.insert("x", Tensor::scalar(v)).unwrap();
    s
}

#[test]
fn adam_first_step_moves_by_lr() {
    let mut store = one_param_store(1.0);
    let mut state = AdamState::new(&store);
    let mut g = ParamGrads::new(1);
    g.add(store.id("x").unwrap(), &Tensor::scalar(0.5));
    adam_step(&mut store, &g, &mut state, 1e-3).unwrap();
    let delta = store.get(store.id("x").unwrap()).data()[0] - 1.0;
    assert!((delta + 1e-3).abs() < 1e-10, "{delta}");
}

#[test]
fn adam_zero_gradient_is_a_no_op() {
    let mut store = one_param_store(2.5);
    let mut state = AdamState::new(&store);
    let mut g = ParamGrads::new(1);
    g.add(store.id("x").unwrap(), &Tensor::scalar(0.0));
    for _ in 0..3 {
        adam_step(&mut store, &g, &mut state, 1e-2).unwrap();
    }
    assert_eq!(store.get(store.id("x").unwrap()).data()[0], 2.5);
    assert_eq!(state.step_count(), 3);
}

#[test]
fn adam_three_steps_on_quadratic_match_recurrence() {
    // f(x) = (x - 3)^2, grad 2(x - 3)
    let lr = 0.1;
    let mut store = one_param_store(0.0);
    let id = store.id("x").unwrap();
    let mut state = AdamState::new(&store);
    let (mut x, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
    for t in 1..=3 {
        let gx = 2.0 * (x - 3.0);
        m = 0.9 * m + 0.1 * gx;
        v = 0.999 * v + 0.001 * gx * gx;
        let mh = m / (1.0 - 0.9f64.powi(t));
        let vh = v / (1.0 - 0.999f64.powi(t));
        x -= lr * mh / (vh.sqrt() + 1e-8);

        let mut g = ParamGrads::new(1);
        g.add(id, &Tensor::scalar(2.0 * (store.get(id).data()[0] - 3.0)));
        adam_step(&mut store, &g, &mut state, lr).unwrap();
        assert!((store.get(id).data()[0] - x).abs() < 1e-14);
    }
}

#[test]
fn adam_shape_mismatch() {
    let mut store = one_param_store(0.0);
    let mut state = AdamState::new(&store);
    let mut g = ParamGrads::new(1);
    g.add(store.id("x").unwrap(), &Tensor::vector(vec![1.0, 2.0]));
    assert!(adam_step(&mut store, &g, &mut state, 0.1).is_err());
}

#[test]
fn dropout_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut tape = Tape::new();
    let n = 20_000;
    let x = tape.variable(Tensor::vector(vec![1.0; n])).unwrap();
    let y = tape.dropout(x, 0.4, &mut rng).unwrap();
    let vals = tape.value(y).data();
    let zeros = vals.iter().filter(|v| **v == 0.0).count() as f64 / n as f64;
    assert!((zeros - 0.4).abs() < 0.02, "{zeros}");
    assert!(vals.iter().all(|v| *v == 0.0 || (v - 1.0 / 0.6).abs() < 1e-12));
    let same = tape.dropout(x, 0.0, &mut rng).unwrap();
    assert_eq!(same, x);
}

#[test]
fn checkpoint_roundtrip_and_shape_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    let mut store = ParamStore::new();
    store.insert("a", Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
    store.insert("b", Tensor::vector(vec![0.5])).unwrap();
    Checkpoint::from_store(&store, serde_json::json!({"hidden": 2}), 9).save(&path).unwrap();
    let ck = Checkpoint::load(&path).unwrap();
    assert_eq!(ck.seed, 9);
    assert_eq!(ck.to_store().unwrap(), store);

    let mut other = ParamStore::new();
    other.insert("a", Tensor::zeros(&[2, 2])).unwrap();
    other.insert("b", Tensor::zeros(&[2])).unwrap();
    assert!(ck.load_into(&mut other).is_err());
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(xs in proptest::collection::vec(-50.0f64..50.0, 1..20)) {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(xs)).unwrap();
        let s = tape.softmax(x).unwrap();
        let p = tape.value(s).data();
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eval_dropout_is_identity(xs in proptest::collection::vec(-5.0f64..5.0, 1..10)) {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(xs.clone())).unwrap();
        let y = tape.dropout(x, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        prop_assert_eq!(tape.value(y).data(), xs.as_slice());
    }
}
