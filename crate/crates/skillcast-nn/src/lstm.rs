//! LSTM cell (no peepholes) with exact backpropagation through time.
//!
//! Gate matrices are stacked row-wise in the order input, forget, candidate,
//! output, so `wx` is `[4H, I]`, `wh` is `[4H, H]`, and `b` is `[4H]`.

use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::layer::{init_uniform, sigmoid, Param, SequenceLayer};
use crate::tensor::{matvec, matvec_acc, matvec_t_acc, outer_acc, Tensor};

pub struct Lstm {
    in_width: usize,
    hidden: usize,
    wx: Param,
    wh: Param,
    b: Param,
    cache: Option<Cache>,
}

struct Cache {
    input: Tensor,   // [T, I]
    gates: Tensor,   // [T, 4H], post-activation, stacked i|f|g|o
    cells: Tensor,   // [T+1, H], cells[0] is the zero initial state
    hiddens: Tensor, // [T+1, H]
    tanh_c: Tensor,  // [T, H]
}

impl Lstm {
    /// `forget_bias` seeds the forget-gate bias (1.0 keeps early gradients
    /// flowing; pass 0.0 to disable the nudge).
    pub fn new(
        prefix: &str,
        in_width: usize,
        hidden: usize,
        forget_bias: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let wx = Param::new(
            format!("{prefix}.wx"),
            init_uniform(rng, in_width, &[4 * hidden, in_width]),
        );
        let wh = Param::new(
            format!("{prefix}.wh"),
            init_uniform(rng, hidden, &[4 * hidden, hidden]),
        );
        let mut bias = Tensor::zeros(&[4 * hidden]);
        for v in &mut bias.data_mut()[hidden..2 * hidden] {
            *v = forget_bias;
        }
        let b = Param::new(format!("{prefix}.b"), bias);
        Self {
            in_width,
            hidden,
            wx,
            wh,
            b,
            cache: None,
        }
    }
}

impl SequenceLayer for Lstm {
    fn kind(&self) -> &'static str {
        "lstm"
    }

    fn in_width(&self) -> usize {
        self.in_width
    }

    fn out_width(&self) -> usize {
        self.hidden
    }

    fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let shape = input.shape();
        if shape.len() != 2 || shape[1] != self.in_width {
            return Err(NnError::Shape(format!(
                "lstm expected input [steps, {}], got {:?}",
                self.in_width, shape
            )));
        }
        let steps = shape[0];
        if steps == 0 {
            return Err(NnError::Shape("lstm input has zero steps".into()));
        }
        let h = self.hidden;
        let mut gates = Tensor::zeros(&[steps, 4 * h]);
        let mut cells = Tensor::zeros(&[steps + 1, h]);
        let mut hiddens = Tensor::zeros(&[steps + 1, h]);
        let mut tanh_c = Tensor::zeros(&[steps, h]);
        let mut pre = vec![0.0; 4 * h];

        for t in 0..steps {
            matvec(&self.wx.value, input.row(t), self.b.value.data(), &mut pre);
            matvec_acc(&self.wh.value, hiddens.row(t), &mut pre);
            let g_row = gates.row_mut(t);
            for j in 0..h {
                g_row[j] = sigmoid(pre[j]); // input gate
                g_row[h + j] = sigmoid(pre[h + j]); // forget gate
                g_row[2 * h + j] = pre[2 * h + j].tanh(); // candidate
                g_row[3 * h + j] = sigmoid(pre[3 * h + j]); // output gate
            }
            for j in 0..h {
                let c =
                    gates.at(t, h + j) * cells.at(t, j) + gates.at(t, j) * gates.at(t, 2 * h + j);
                cells.set(t + 1, j, c);
                let tc = c.tanh();
                tanh_c.set(t, j, tc);
                hiddens.set(t + 1, j, gates.at(t, 3 * h + j) * tc);
            }
        }

        let mut out = Tensor::zeros(&[steps, h]);
        for t in 0..steps {
            out.row_mut(t).copy_from_slice(hiddens.row(t + 1));
        }
        self.cache = Some(Cache {
            input: input.clone(),
            gates,
            cells,
            hiddens,
            tanh_c,
        });
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| NnError::Config("lstm backward called before forward".into()))?;
        let steps = cache.input.shape()[0];
        let h = self.hidden;
        if grad_out.shape() != [steps, h] {
            return Err(NnError::Shape(format!(
                "lstm expected output gradient [{steps}, {h}], got {:?}",
                grad_out.shape()
            )));
        }

        let mut grad_in = Tensor::zeros(&[steps, self.in_width]);
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dpre = vec![0.0; 4 * h];

        for t in (0..steps).rev() {
            let gates = cache.gates.row(t);
            for j in 0..h {
                let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                let tc = cache.tanh_c.at(t, j);
                let dh = grad_out.at(t, j) + dh_next[j];
                let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
                dpre[j] = dc * g * i * (1.0 - i);
                dpre[h + j] = dc * cache.cells.at(t, j) * f * (1.0 - f);
                dpre[2 * h + j] = dc * i * (1.0 - g * g);
                dpre[3 * h + j] = dh * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            outer_acc(&mut self.wx.grad, &dpre, cache.input.row(t));
            outer_acc(&mut self.wh.grad, &dpre, cache.hiddens.row(t));
            for (db, dp) in self.b.grad.data_mut().iter_mut().zip(&dpre) {
                *db += dp;
            }
            matvec_t_acc(&self.wx.value, &dpre, grad_in.row_mut(t));
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_acc(&self.wh.value, &dpre, &mut dh_next);
        }
        Ok(grad_in)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.wx, &self.wh, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.wx, &mut self.wh, &mut self.b]
    }
}
