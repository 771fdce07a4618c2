//! Central finite-difference gradient checking.

use super::{AutodiffError, ParamStore, Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
}

impl GradCheckReport {
    fn merge(&mut self, analytic: f64, numeric: f64) {
        let abs = (analytic - numeric).abs();
        let rel = abs / analytic.abs().max(numeric.abs()).max(1e-6);
        self.max_abs_error = self.max_abs_error.max(abs);
        self.max_rel_error = self.max_rel_error.max(rel);
        self.checked += 1;
    }
}

fn empty_report() -> GradCheckReport {
    GradCheckReport { max_rel_error: 0.0, max_abs_error: 0.0, checked: 0 }
}

/// Compares reverse-mode gradients of the scalar `f(inputs)` with central
/// differences of step `eps` for every input component.
pub fn check_input_gradients<F>(inputs: &[Tensor], eps: f64, f: F) -> Result<GradCheckReport, AutodiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
{
    let eval = |ts: &[Tensor]| -> Result<f64, AutodiffError> {
        let mut tape = Tape::new();
        let vars = ts.iter().map(|t| tape.variable(t.clone())).collect::<Result<Vec<_>, _>>()?;
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).data()[0])
    };
    let mut tape = Tape::new();
    let vars = inputs.iter().map(|t| tape.variable(t.clone())).collect::<Result<Vec<_>, _>>()?;
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let mut report = empty_report();
    let mut work = inputs.to_vec();
    for (k, v) in vars.iter().enumerate() {
        let analytic = grads.wrt(*v).cloned().unwrap_or_else(|| inputs[k].zeros_like());
        for i in 0..inputs[k].len() {
            let orig = work[k].data()[i];
            work[k].data_mut()[i] = orig + eps;
            let up = eval(&work)?;
            work[k].data_mut()[i] = orig - eps;
            let down = eval(&work)?;
            work[k].data_mut()[i] = orig;
            report.merge(analytic.data()[i], (up - down) / (2.0 * eps));
        }
    }
    Ok(report)
}

/// Same as [`check_input_gradients`] but over every value in a parameter
/// store. `f` must read parameters through `tape.param`.
pub fn check_param_gradients<F>(store: &ParamStore, eps: f64, f: F) -> Result<GradCheckReport, AutodiffError>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var, AutodiffError>,
{
    let mut tape = Tape::new();
    let out = f(&mut tape, store)?;
    let grads = tape.backward(out)?;
    let mut work = store.clone();
    let mut report = empty_report();
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let analytic = grads.param(id).cloned().unwrap_or_else(|| store.get(id).zeros_like());
        for i in 0..store.get(id).len() {
            let orig = work.get(id).data()[i];
            work.get_mut(id).data_mut()[i] = orig + eps;
            let mut t = Tape::new();
            let o = f(&mut t, &work)?;
            let up = t.value(o).data()[0];
            work.get_mut(id).data_mut()[i] = orig - eps;
            let mut t = Tape::new();
            let o = f(&mut t, &work)?;
            let down = t.value(o).data()[0];
            work.get_mut(id).data_mut()[i] = orig;
            report.merge(analytic.data()[i], (up - down) / (2.0 * eps));
        }
    }
    Ok(report)
}

fn random_tensor<R: rand::Rng>(shape: &[usize], rng: &mut R) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("shape")
}

/// Runs the finite-difference check for every differentiable op (plus an
/// LSTM step) on random inputs drawn from `seed`. Each op output is reduced
/// to a scalar by a dot product with fixed random weights.
pub fn check_all_ops(seed: u64, eps: f64) -> Result<Vec<(&'static str, GradCheckReport)>, AutodiffError> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::nn::{lstm_cell, LstmParams, LstmState};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut run = |name: &'static str,
                   inputs: Vec<Tensor>,
                   out_len: usize,
                   f: &dyn Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
                   rng: &mut ChaCha8Rng|
     -> Result<(), AutodiffError> {
        let proj = random_tensor(&[out_len], rng);
        let report = check_input_gradients(&inputs, eps, |tape, vs| {
            let y = f(tape, vs)?;
            if tape.value(y).is_scalar() && out_len == 1 {
                return Ok(y);
            }
            let flat = tape.value(y).len();
            let y = if tape.value(y).shape().len() == 2 { tape.slice(y, 0, flat)? } else { y };
            let p = tape.constant(proj.clone())?;
            tape.dot(y, p)
        })?;
        out.push((name, report));
        Ok(())
    };

    let m = random_tensor(&[3, 4], &mut rng);
    let v4 = random_tensor(&[4], &mut rng);
    let v3 = random_tensor(&[3], &mut rng);
    run("matvec", vec![m.clone(), v4.clone()], 3, &|t, v| t.matvec(v[0], v[1]), &mut rng)?;
    run("mat_t_vec", vec![m.clone(), v3.clone()], 4, &|t, v| t.mat_t_vec(v[0], v[1]), &mut rng)?;
    let w4 = random_tensor(&[4], &mut rng);
    run("add", vec![v4.clone(), w4.clone()], 4, &|t, v| t.add(v[0], v[1]), &mut rng)?;
    run("add_scalar", vec![v4.clone(), Tensor::scalar(0.3)], 4, &|t, v| t.add_scalar(v[0], v[1]), &mut rng)?;
    run("mul", vec![v4.clone(), w4.clone()], 4, &|t, v| t.mul(v[0], v[1]), &mut rng)?;
    run("scale", vec![v4.clone()], 4, &|t, v| t.scale(v[0], -1.7), &mut rng)?;
    run("sigmoid", vec![v4.clone()], 4, &|t, v| t.sigmoid(v[0]), &mut rng)?;
    run("tanh", vec![v4.clone()], 4, &|t, v| t.tanh(v[0]), &mut rng)?;
    run("relu", vec![v4.clone()], 4, &|t, v| t.relu(v[0]), &mut rng)?;
    run("concat", vec![v4.clone(), v3.clone()], 7, &|t, v| t.concat(&[v[0], v[1]]), &mut rng)?;
    run("slice", vec![v4.clone()], 2, &|t, v| t.slice(v[0], 1, 2), &mut rng)?;
    run("stack", vec![v4.clone(), w4.clone()], 8, &|t, v| t.stack(&[v[0], v[1]]), &mut rng)?;
    let table = random_tensor(&[5, 3], &mut rng);
    run("gather_rows", vec![table], 9, &|t, v| t.gather_rows(v[0], &[4, 0, 4]), &mut rng)?;
    let rows = random_tensor(&[5, 3], &mut rng);
    let (w1, b1) = (random_tensor(&[2, 3], &mut rng), random_tensor(&[2], &mut rng));
    let (w2, b2) = (random_tensor(&[2, 6], &mut rng), random_tensor(&[2], &mut rng));
    let (w3, b3) = (random_tensor(&[2, 9], &mut rng), random_tensor(&[2], &mut rng));
    run(
        "conv_ngram_maxpool",
        vec![rows, w1, b1, w2, b2, w3, b3],
        6,
        &|t, v| t.conv_ngram_maxpool(v[0], &[1, 2, 3], &[(v[1], v[2]), (v[3], v[4]), (v[5], v[6])]),
        &mut rng,
    )?;
    run("softmax", vec![v4.clone()], 4, &|t, v| t.softmax(v[0]), &mut rng)?;
    run("softmax_cross_entropy", vec![v4.clone()], 1, &|t, v| t.softmax_cross_entropy(v[0], 2), &mut rng)?;
    run("sum", vec![v4.clone()], 1, &|t, v| t.sum(v[0]), &mut rng)?;
    run("add_n", vec![v4.clone(), w4.clone(), v4.clone()], 4, &|t, v| t.add_n(&[v[0], v[1], v[2]]), &mut rng)?;
    run("dot", vec![v4.clone(), w4.clone()], 1, &|t, v| t.dot(v[0], v[1]), &mut rng)?;
    let mask_seed = seed ^ 0x5eed;
    run(
        "dropout",
        vec![v4.clone()],
        4,
        &|t, v| t.dropout(v[0], 0.5, &mut ChaCha8Rng::seed_from_u64(mask_seed)),
        &mut rng,
    )?;

    let (x, h, c) = (random_tensor(&[4], &mut rng), random_tensor(&[3], &mut rng), random_tensor(&[3], &mut rng));
    let mut store = ParamStore::new();
    let lp = LstmParams::register(&mut store, "lstm", 4, 3, &mut rng)?;
    *store.get_mut(lp.w) = random_tensor(&[12, 7], &mut rng);
    *store.get_mut(lp.b) = random_tensor(&[12], &mut rng);
    let proj = random_tensor(&[3], &mut rng);
    let cell = |tape: &mut Tape, s: &ParamStore, vs: &[Var]| -> Result<Var, AutodiffError> {
        let next = lstm_cell(tape, s, &lp, vs[0], LstmState { h: vs[1], c: vs[2] })?;
        let both = tape.add(next.h, next.c)?;
        let p = tape.constant(proj.clone())?;
        tape.dot(both, p)
    };
    let inputs = vec![x.clone(), h.clone(), c.clone()];
    out.push(("lstm_cell(inputs)", check_input_gradients(&inputs, eps, |t, vs| cell(t, &store, vs))?));
    let report = check_param_gradients(&store, eps, |t, s| {
        let vs = [t.variable(x.clone())?, t.variable(h.clone())?, t.variable(c.clone())?];
        cell(t, s, &vs)
    })?;
    out.push(("lstm_cell(params)", report));
    Ok(out)
}
