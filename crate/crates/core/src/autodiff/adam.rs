use super::{AutodiffError, ParamGrads, ParamStore, Tensor};

/// Moment estimates for Adam, one pair per parameter of a store.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        Self::with_hyper(store, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(store: &ParamStore, beta1: f64, beta2: f64, eps: f64) -> Self {
        let m: Vec<Tensor> = store.iter().map(|(_, _, t)| t.zeros_like()).collect();
        Self { beta1, beta2, eps, step: 0, v: m.clone(), m }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, i: usize) -> &Tensor {
        &self.m[i]
    }

    pub fn second_moment(&self, i: usize) -> &Tensor {
        &self.v[i]
    }
}

/// One bias-corrected Adam update. Parameters without a gradient are
/// treated as having a zero gradient (their moments still decay).
pub fn adam_step(
    params: &mut ParamStore,
    grads: &ParamGrads,
    state: &mut AdamState,
    lr: f64,
) -> Result<(), AutodiffError> {
    if grads.len() != params.len() || state.m.len() != params.len() {
        return Err(AutodiffError::Shape(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for id in params.ids() {
        if let Some(g) = grads.get(id) {
            if g.shape() != params.get(id).shape() {
                return Err(AutodiffError::Shape(format!(
                    "adam: gradient {:?} for {} {:?}",
                    g.shape(),
                    params.name(id),
                    params.get(id).shape()
                )));
            }
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for id in params.ids() {
        let i = id.0;
        let g = grads.get(id);
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        let p = params.get_mut(id).data_mut();
        for k in 0..p.len() {
            let gk = g.map_or(0.0, |g| g.data()[k]);
            m[k] = b1 * m[k] + (1.0 - b1) * gk;
            v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
