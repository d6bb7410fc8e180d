//! GRU cell with exact backpropagation through time.
//!
//! Gate matrices are stacked row-wise in the order update, reset, candidate,
//! so `wx` is `[3H, I]`, `wh` is `[3H, H]`, and `b` is `[3H]`. The candidate's
//! recurrent term gates the previous hidden state before the matrix (`Un (r ⊙
//! h_prev)`), and the state blends as `h = z ⊙ h_prev + (1 − z) ⊙ n`, so a
//! saturated update gate carries the previous hidden state through unchanged.

use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::layer::{init_uniform, sigmoid, Param, SequenceLayer};
use crate::tensor::{matvec_t_acc, outer_acc, Tensor};

pub struct Gru {
    in_width: usize,
    hidden: usize,
    wx: Param,
    wh: Param,
    b: Param,
    cache: Option<Cache>,
}

struct Cache {
    input: Tensor,   // [T, I]
    z: Tensor,       // [T, H]
    r: Tensor,       // [T, H]
    n: Tensor,       // [T, H]
    rh: Tensor,      // [T, H], r ⊙ h_prev (the candidate's recurrent input)
    hiddens: Tensor, // [T+1, H]
}

impl Gru {
    pub fn new(prefix: &str, in_width: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let wx = Param::new(
            format!("{prefix}.wx"),
            init_uniform(rng, in_width, &[3 * hidden, in_width]),
        );
        let wh = Param::new(
            format!("{prefix}.wh"),
            init_uniform(rng, hidden, &[3 * hidden, hidden]),
        );
        let b = Param::new(format!("{prefix}.b"), Tensor::zeros(&[3 * hidden]));
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

impl SequenceLayer for Gru {
    fn kind(&self) -> &'static str {
        "gru"
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
                "gru expected input [steps, {}], got {:?}",
                self.in_width, shape
            )));
        }
        let steps = shape[0];
        if steps == 0 {
            return Err(NnError::Shape("gru input has zero steps".into()));
        }
        let h = self.hidden;
        let mut z = Tensor::zeros(&[steps, h]);
        let mut r = Tensor::zeros(&[steps, h]);
        let mut n = Tensor::zeros(&[steps, h]);
        let mut rh = Tensor::zeros(&[steps, h]);
        let mut hiddens = Tensor::zeros(&[steps + 1, h]);

        for t in 0..steps {
            let x = input.row(t);
            for j in 0..h {
                let mut pre_z = self.b.value.data()[j];
                let mut pre_r = self.b.value.data()[h + j];
                for (k, xv) in x.iter().enumerate() {
                    pre_z += self.wx.value.at(j, k) * xv;
                    pre_r += self.wx.value.at(h + j, k) * xv;
                }
                for k in 0..h {
                    let hp = hiddens.at(t, k);
                    pre_z += self.wh.value.at(j, k) * hp;
                    pre_r += self.wh.value.at(h + j, k) * hp;
                }
                z.set(t, j, sigmoid(pre_z));
                r.set(t, j, sigmoid(pre_r));
            }
            for j in 0..h {
                rh.set(t, j, r.at(t, j) * hiddens.at(t, j));
            }
            for j in 0..h {
                let mut pre_n = self.b.value.data()[2 * h + j];
                for (k, xv) in x.iter().enumerate() {
                    pre_n += self.wx.value.at(2 * h + j, k) * xv;
                }
                for k in 0..h {
                    pre_n += self.wh.value.at(2 * h + j, k) * rh.at(t, k);
                }
                n.set(t, j, pre_n.tanh());
            }
            for j in 0..h {
                let zt = z.at(t, j);
                let ht = zt * hiddens.at(t, j) + (1.0 - zt) * n.at(t, j);
                hiddens.set(t + 1, j, ht);
            }
        }

        let mut out = Tensor::zeros(&[steps, h]);
        for t in 0..steps {
            out.row_mut(t).copy_from_slice(hiddens.row(t + 1));
        }
        self.cache = Some(Cache {
            input: input.clone(),
            z,
            r,
            n,
            rh,
            hiddens,
        });
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| NnError::Config("gru backward called before forward".into()))?;
        let steps = cache.input.shape()[0];
        let h = self.hidden;
        if grad_out.shape() != [steps, h] {
            return Err(NnError::Shape(format!(
                "gru expected output gradient [{steps}, {h}], got {:?}",
                grad_out.shape()
            )));
        }

        let mut grad_in = Tensor::zeros(&[steps, self.in_width]);
        let mut dh_next = vec![0.0; h];
        let mut dpre = vec![0.0; 3 * h];
        let mut drh = vec![0.0; h];

        for t in (0..steps).rev() {
            let h_prev = cache.hiddens.row(t);
            for j in 0..h {
                let (zj, nj) = (cache.z.at(t, j), cache.n.at(t, j));
                let dh = grad_out.at(t, j) + dh_next[j];
                let dz = dh * (h_prev[j] - nj);
                let dn = dh * (1.0 - zj);
                dpre[j] = dz * zj * (1.0 - zj);
                dpre[2 * h + j] = dn * (1.0 - nj * nj);
            }
            // The candidate's recurrent input is r ⊙ h_prev, so its upstream
            // gradient splits between the reset gate and the hidden state.
            for k in 0..h {
                let mut acc = 0.0;
                for j in 0..h {
                    acc += self.wh.value.at(2 * h + j, k) * dpre[2 * h + j];
                }
                drh[k] = acc;
            }
            for j in 0..h {
                let rj = cache.r.at(t, j);
                let dr = drh[j] * h_prev[j];
                dpre[h + j] = dr * rj * (1.0 - rj);
            }

            outer_acc(&mut self.wx.grad, &dpre, cache.input.row(t));
            for j in 0..h {
                for k in 0..h {
                    let hp = h_prev[k];
                    let dwz = dpre[j] * hp;
                    let dwr = dpre[h + j] * hp;
                    let dwn = dpre[2 * h + j] * cache.rh.at(t, k);
                    self.wh.grad.row_mut(j)[k] += dwz;
                    self.wh.grad.row_mut(h + j)[k] += dwr;
                    self.wh.grad.row_mut(2 * h + j)[k] += dwn;
                }
            }
            for (db, dp) in self.b.grad.data_mut().iter_mut().zip(&dpre) {
                *db += dp;
            }
            matvec_t_acc(&self.wx.value, &dpre, grad_in.row_mut(t));

            for k in 0..h {
                let dh = grad_out.at(t, k) + dh_next[k];
                let mut acc = dh * cache.z.at(t, k) + drh[k] * cache.r.at(t, k);
                for j in 0..h {
                    acc += self.wh.value.at(j, k) * dpre[j];
                    acc += self.wh.value.at(h + j, k) * dpre[h + j];
                }
                drh[k] = acc; // reuse as scratch for the new dh_next
            }
            dh_next.copy_from_slice(&drh);
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
