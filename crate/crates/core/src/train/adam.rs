use crate::par::{self, Exec};

/// Dense Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u32,
}

const CHUNK: usize = 4096;

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn steps(&self) -> u32 {
        self.step
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64], exec: Exec) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), params.len());
        self.step += 1;
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        // First pass: moments, chunked alongside the gradient.
        let m = &mut self.m;
        let v = &mut self.v;
        par::zip_chunks_mut(exec, m, grads, CHUNK, |_, m, g| {
            for (m, g) in m.iter_mut().zip(g) {
                *m = b1 * *m + (1.0 - b1) * g;
            }
        });
        par::zip_chunks_mut(exec, v, grads, CHUNK, |_, v, g| {
            for (v, g) in v.iter_mut().zip(g) {
                *v = b2 * *v + (1.0 - b2) * g * g;
            }
        });
        let m = &self.m;
        let v = &self.v;
        par::zip_chunks_mut(exec, params, m, CHUNK, |i, p, m| {
            let v = &v[i * CHUNK..i * CHUNK + p.len()];
            for ((p, m), v) in p.iter_mut().zip(m).zip(v) {
                let mh = m / c1;
                let vh = v / c2;
                *p -= lr * mh / (vh.sqrt() + eps);
            }
        });
    }
}
