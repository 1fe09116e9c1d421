//! Trainable layers used by the sequence models: a GRU cell and a dense
//! projection. Layers register their parameters in a [`ParamSet`] at
//! construction and reference them by id when building a graph.

use rand::Rng;

use crate::autodiff::graph::{BoundParams, Graph, NodeId};
use crate::autodiff::params::{ParamId, ParamSet};
use crate::autodiff::tensor::Tensor;
use crate::error::Result;

/// Gated recurrent unit with update gate `z`, reset gate `r` and candidate
/// state `h~`:
///
/// ```text
/// z  = sigmoid(x W_z + h U_z + b_z)
/// r  = sigmoid(x W_r + h U_r + b_r)
/// h~ = tanh(x W_h + (r * h) U_h + b_h)
/// h' = (1 - z) * h + z * h~
/// ```
#[derive(Debug, Clone)]
pub struct GruCell {
    pub input_dim: usize,
    pub hidden_dim: usize,
    w_z: ParamId,
    u_z: ParamId,
    b_z: ParamId,
    w_r: ParamId,
    u_r: ParamId,
    b_r: ParamId,
    w_h: ParamId,
    u_h: ParamId,
    b_h: ParamId,
}

impl GruCell {
    pub fn new(
        params: &mut ParamSet,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let w_z = params.add_uniform(format!("{prefix}.w_z"), vec![input_dim, hidden_dim], input_dim, rng)?;
        let u_z = params.add_uniform(format!("{prefix}.u_z"), vec![hidden_dim, hidden_dim], hidden_dim, rng)?;
        let b_z = params.add_uniform(format!("{prefix}.b_z"), vec![hidden_dim], hidden_dim, rng)?;
        let w_r = params.add_uniform(format!("{prefix}.w_r"), vec![input_dim, hidden_dim], input_dim, rng)?;
        let u_r = params.add_uniform(format!("{prefix}.u_r"), vec![hidden_dim, hidden_dim], hidden_dim, rng)?;
        let b_r = params.add_uniform(format!("{prefix}.b_r"), vec![hidden_dim], hidden_dim, rng)?;
        let w_h = params.add_uniform(format!("{prefix}.w_h"), vec![input_dim, hidden_dim], input_dim, rng)?;
        let u_h = params.add_uniform(format!("{prefix}.u_h"), vec![hidden_dim, hidden_dim], hidden_dim, rng)?;
        let b_h = params.add_uniform(format!("{prefix}.b_h"), vec![hidden_dim], hidden_dim, rng)?;
        Ok(GruCell {
            input_dim,
            hidden_dim,
            w_z,
            u_z,
            b_z,
            w_r,
            u_r,
            b_r,
            w_h,
            u_h,
            b_h,
        })
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        vec![
            self.w_z, self.u_z, self.b_z, self.w_r, self.u_r, self.b_r, self.w_h, self.u_h,
            self.b_h,
        ]
    }

    /// Zero initial hidden state for a batch of `batch` rows.
    pub fn initial_state(&self, g: &mut Graph, batch: usize) -> Result<NodeId> {
        Ok(g.leaf(Tensor::zeros(vec![batch, self.hidden_dim])?))
    }

    /// One recurrence step: `x_t` is `[B, input_dim]`, `h_prev` is
    /// `[B, hidden_dim]`; returns `h_t` of shape `[B, hidden_dim]`.
    pub fn step(
        &self,
        g: &mut Graph,
        bound: &BoundParams,
        x_t: NodeId,
        h_prev: NodeId,
    ) -> Result<NodeId> {
        let gate = |g: &mut Graph, w: ParamId, u: ParamId, b: ParamId, h: NodeId| -> Result<NodeId> {
            let xw = g.matmul(x_t, bound.node(w))?;
            let hu = g.matmul(h, bound.node(u))?;
            let s = g.add(xw, hu)?;
            g.add(s, bound.node(b))
        };
        let z_pre = gate(g, self.w_z, self.u_z, self.b_z, h_prev)?;
        let z = g.sigmoid(z_pre);
        let r_pre = gate(g, self.w_r, self.u_r, self.b_r, h_prev)?;
        let r = g.sigmoid(r_pre);
        let rh = g.mul(r, h_prev)?;
        let cand_pre = gate(g, self.w_h, self.u_h, self.b_h, rh)?;
        let cand = g.tanh(cand_pre);
        // h' = h + z*(h~ - h) == (1 - z)*h + z*h~
        let diff = g.sub(cand, h_prev)?;
        let zdiff = g.mul(z, diff)?;
        g.add(h_prev, zdiff)
    }
}

/// Dense projection `x W + b` with an optional activation applied by the
/// caller.
#[derive(Debug, Clone)]
pub struct Linear {
    pub input_dim: usize,
    pub output_dim: usize,
    w: ParamId,
    b: ParamId,
}

impl Linear {
    pub fn new(
        params: &mut ParamSet,
        prefix: &str,
        input_dim: usize,
        output_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let w = params.add_uniform(
            format!("{prefix}.w"),
            vec![input_dim, output_dim],
            input_dim,
            rng,
        )?;
        let b = params.add_uniform(format!("{prefix}.b"), vec![output_dim], input_dim, rng)?;
        Ok(Linear {
            input_dim,
            output_dim,
            w,
            b,
        })
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        vec![self.w, self.b]
    }

    pub fn apply(&self, g: &mut Graph, bound: &BoundParams, x: NodeId) -> Result<NodeId> {
        let xw = g.matmul(x, bound.node(self.w))?;
        g.add(xw, bound.node(self.b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::graph::BoundParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_and_inputs_give_zero_state() {
        let mut params = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cell = GruCell::new(&mut params, "gru", 2, 3, &mut rng).unwrap();
        for id in cell.param_ids() {
            for v in params.tensor_mut(id).data_mut() {
                *v = 0.0;
            }
        }
        let mut g = Graph::new();
        let bound = BoundParams::bind(&mut g, &params);
        let x = g.leaf(Tensor::matrix(1, 2, vec![0.0, 0.0]).unwrap());
        let h0 = cell.initial_state(&mut g, 1).unwrap();
        let h1 = cell.step(&mut g, &bound, x, h0).unwrap();
        assert_eq!(g.value(h1).data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn state_stays_in_unit_interval_when_previous_state_does() {
        let mut params = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cell = GruCell::new(&mut params, "gru", 2, 4, &mut rng).unwrap();
        let mut g = Graph::new();
        let bound = BoundParams::bind(&mut g, &params);
        let x = g.leaf(Tensor::matrix(2, 2, vec![0.9, -0.8, 0.1, 0.4]).unwrap());
        let h0 = g.leaf(Tensor::matrix(2, 4, vec![0.5, -0.5, 0.9, -0.9, 0.0, 0.3, -0.3, 0.7]).unwrap());
        let mut h = h0;
        for _ in 0..3 {
            h = cell.step(&mut g, &bound, x, h).unwrap();
        }
        // convex combination of h_prev and a tanh output
        assert!(g.value(h).data().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn gradient_check_through_three_unrolled_steps() {
        let input_dim = 2;
        let hidden = 3;
        let batch = 2;
        let steps = 3;
        let mut params = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cell = GruCell::new(&mut params, "gru", input_dim, hidden, &mut rng).unwrap();
        let xs: Vec<Vec<f64>> = (0..steps)
            .map(|_| (0..batch * input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();

        let run = |params: &ParamSet| -> f64 {
            let mut g = Graph::new();
            let bound = BoundParams::bind(&mut g, params);
            let mut h = cell.initial_state(&mut g, batch).unwrap();
            for x in &xs {
                let xn = g.leaf(Tensor::matrix(batch, input_dim, x.clone()).unwrap());
                h = cell.step(&mut g, &bound, xn, h).unwrap();
            }
            let sq = g.mul(h, h).unwrap();
            let s = g.sum(sq);
            g.value(s).item().unwrap()
        };

        // reverse-mode gradients
        let mut g = Graph::new();
        let bound = BoundParams::bind(&mut g, &params);
        let mut h = cell.initial_state(&mut g, batch).unwrap();
        for x in &xs {
            let xn = g.leaf(Tensor::matrix(batch, input_dim, x.clone()).unwrap());
            h = cell.step(&mut g, &bound, xn, h).unwrap();
        }
        let sq = g.mul(h, h).unwrap();
        let s = g.sum(sq);
        g.backward(s).unwrap();
        let grads = bound.grads(&g);

        let h_step = 1e-5;
        for id in cell.param_ids() {
            let grad = grads[id.0].as_ref().unwrap().clone();
            let numel = params.tensor(id).numel();
            for i in 0..numel {
                let orig = params.tensor(id).data()[i];
                let mut p_plus = params.clone();
                p_plus.tensor_mut(id).data_mut()[i] = orig + h_step;
                let mut p_minus = params.clone();
                p_minus.tensor_mut(id).data_mut()[i] = orig - h_step;
                let fd = (run(&p_plus) - run(&p_minus)) / (2.0 * h_step);
                let ad = grad[i];
                let rel = (ad - fd).abs() / fd.abs().max(ad.abs()).max(1.0);
                assert!(rel < 1e-4, "param {:?}[{i}]: ad={ad} fd={fd}", id);
            }
        }
    }
}
