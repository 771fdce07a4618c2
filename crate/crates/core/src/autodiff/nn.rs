//! Neural building blocks composed from tape ops.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::{AutodiffError, ParamId, ParamStore, Tape, Tensor, Var};

/// Weights of one LSTM layer: `W` is 4H × (X + H) with gate blocks in the
/// order input, forget, candidate, output; `b` has length 4H.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LstmParams {
    pub w: ParamId,
    pub b: ParamId,
    pub input_dim: usize,
    pub hidden: usize,
}

impl LstmParams {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self, AutodiffError> {
        let w = store.insert(&format!("{prefix}.w"), uniform_init(&[4 * hidden, input_dim + hidden], 0.08, rng))?;
        let b = store.insert(&format!("{prefix}.b"), Tensor::zeros(&[4 * hidden]))?;
        Ok(Self { w, b, input_dim, hidden })
    }
}

/// Hidden and cell state of an LSTM.
#[derive(Clone, Copy, Debug)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

/// One LSTM step:
/// `c' = f ⊙ c + i ⊙ g`, `h' = o ⊙ tanh(c')`.
pub fn lstm_cell(
    tape: &mut Tape,
    store: &ParamStore,
    params: &LstmParams,
    x: Var,
    state: LstmState,
) -> Result<LstmState, AutodiffError> {
    let hd = params.hidden;
    let (xl, hl, cl) = (tape.value(x).len(), tape.value(state.h).len(), tape.value(state.c).len());
    if xl != params.input_dim || hl != hd || cl != hd {
        return Err(AutodiffError::Shape(format!(
            "lstm_cell: x {xl}, h {hl}, c {cl} against input {} hidden {hd}",
            params.input_dim
        )));
    }
    let w = tape.param(store, params.w)?;
    let b = tape.param(store, params.b)?;
    let xh = tape.concat(&[x, state.h])?;
    let z = tape.matvec(w, xh)?;
    let z = tape.add(z, b)?;
    let zi = tape.slice(z, 0, hd)?;
    let zf = tape.slice(z, hd, hd)?;
    let zg = tape.slice(z, 2 * hd, hd)?;
    let zo = tape.slice(z, 3 * hd, hd)?;
    let i = tape.sigmoid(zi)?;
    let f = tape.sigmoid(zf)?;
    let g = tape.tanh(zg)?;
    let o = tape.sigmoid(zo)?;
    let fc = tape.mul(f, state.c)?;
    let ig = tape.mul(i, g)?;
    let c_new = tape.add(fc, ig)?;
    let tc = tape.tanh(c_new)?;
    let h_new = tape.mul(o, tc)?;
    Ok(LstmState { h: h_new, c: c_new })
}

pub fn zero_state(tape: &mut Tape, hidden: usize) -> Result<LstmState, AutodiffError> {
    let h = tape.constant(Tensor::zeros(&[hidden]))?;
    let c = tape.constant(Tensor::zeros(&[hidden]))?;
    Ok(LstmState { h, c })
}

pub fn uniform_init<R: Rng + ?Sized>(shape: &[usize], limit: f64, rng: &mut R) -> Tensor {
    let dist = Uniform::new_inclusive(-limit, limit);
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| dist.sample(rng)).collect();
    Tensor::new(shape.to_vec(), data).expect("init shape")
}

pub fn normal_init<R: Rng + ?Sized>(shape: &[usize], std: f64, rng: &mut R) -> Tensor {
    let dist = Normal::new(0.0, std).expect("finite std");
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| dist.sample(rng)).collect();
    Tensor::new(shape.to_vec(), data).expect("init shape")
}
