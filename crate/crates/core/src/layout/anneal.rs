//! Dual annealing (generalized simulated annealing with a Tsallis visiting
//! distribution, followed by local refinement) over the unit square.
//!
//! The visiting and acceptance rules follow the classical generalized
//! simulated annealing formulation: a distorted Cauchy-Lorentz visit with
//! parameter `visit`, a Metropolis-like acceptance with parameter `accept`,
//! and a temperature schedule `T0·(2^(qv-1)-1)/((t+1)^(qv-1)-1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use super::{ContinuousPlacement, InteractionGraph};
use crate::config::AnnealConfig;
use crate::geometry::Point;

const TAIL_LIMIT: f64 = 1e8;
const MIN_VISIT_BOUND: f64 = 1e-10;

/// The placement objective: Σ (w_ij + cohesion)·d_ij² over all pairs plus a
/// hinge penalty K·max(0, s − d_ij)² for pairs closer than `s`.
#[derive(Debug, Clone)]
pub struct Objective {
    n: usize,
    coeff: Vec<f64>,
    hinge: f64,
    spacing: f64,
}

impl Objective {
    pub fn new(graph: &InteractionGraph, config: &AnnealConfig) -> Self {
        let n = graph.num_qubits;
        let mut coeff = vec![config.cohesion; n * n];
        for (&(i, j), &w) in &graph.edges {
            coeff[i * n + j] += w as f64;
            coeff[j * n + i] += w as f64;
        }
        let heaviest = graph.edges.values().copied().max().unwrap_or(1) as f64;
        let spacing = config.min_spacing.unwrap_or(0.0);
        Objective {
            n,
            coeff,
            hinge: if spacing > 0.0 {
                config.spacing_weight * heaviest
            } else {
                0.0
            },
            spacing,
        }
    }

    fn pair(&self, i: usize, j: usize, xi: f64, yi: f64, xj: f64, yj: f64) -> f64 {
        let d2 = (xi - xj).powi(2) + (yi - yj).powi(2);
        let mut e = self.coeff[i * self.n + j] * d2;
        if self.hinge > 0.0 && d2 < self.spacing * self.spacing {
            e += self.hinge * (self.spacing - d2.sqrt()).powi(2);
        }
        e
    }

    /// Objective for a flat `[x0, y0, x1, y1, ...]` vector.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                e += self.pair(i, j, x[2 * i], x[2 * i + 1], x[2 * j], x[2 * j + 1]);
            }
        }
        e
    }

    /// Sum of the terms involving qubit `q` when it sits at (qx, qy).
    fn contribution(&self, x: &[f64], q: usize, qx: f64, qy: f64) -> f64 {
        (0..self.n)
            .filter(|&j| j != q)
            .map(|j| self.pair(q, j, qx, qy, x[2 * j], x[2 * j + 1]))
            .sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let dx = x[2 * i] - x[2 * j];
                let dy = x[2 * i + 1] - x[2 * j + 1];
                let c = self.coeff[i * self.n + j];
                let mut gx = 2.0 * c * dx;
                let mut gy = 2.0 * c * dy;
                let d = dx.hypot(dy);
                if self.hinge > 0.0 && d < self.spacing && d > 0.0 {
                    let f = -2.0 * self.hinge * (self.spacing - d) / d;
                    gx += f * dx;
                    gy += f * dy;
                }
                g[2 * i] += gx;
                g[2 * i + 1] += gy;
                g[2 * j] -= gx;
                g[2 * j + 1] -= gy;
            }
        }
    }
}

/// Tsallis visiting distribution.
struct Visitor {
    qv: f64,
    factor4_p: f64,
    factor6: f64,
}

impl Visitor {
    fn new(qv: f64) -> Self {
        let factor2 = ((4.0 - qv) * (qv - 1.0).ln()).exp();
        let factor3 = ((2.0 - qv) * 2f64.ln() / (qv - 1.0)).exp();
        let factor4_p = std::f64::consts::PI.sqrt() * factor2 / (factor3 * (3.0 - qv));
        let factor5 = 1.0 / (qv - 1.0) - 0.5;
        let d1 = 2.0 - factor5;
        let pi_f = std::f64::consts::PI * (1.0 - factor5);
        let factor6 = pi_f / pi_f.sin() / ln_gamma(d1).exp();
        Visitor {
            qv,
            factor4_p,
            factor6,
        }
    }

    fn sample(&self, temperature: f64, rng: &mut ChaCha8Rng) -> f64 {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let qv = self.qv;
        let factor1 = (temperature.ln() / (qv - 1.0)).exp();
        let factor4 = self.factor4_p * factor1;
        let sigma = (-(qv - 1.0) * (self.factor6 / factor4).ln() / (3.0 - qv)).exp();
        let den = ((qv - 1.0) * y.abs().ln() / (3.0 - qv)).exp();
        x * sigma / den
    }

    fn clip(&self, v: f64, rng: &mut ChaCha8Rng) -> f64 {
        if v > TAIL_LIMIT {
            TAIL_LIMIT * rng.random::<f64>()
        } else if v < -TAIL_LIMIT {
            -TAIL_LIMIT * rng.random::<f64>()
        } else if v.is_nan() {
            0.0
        } else {
            v
        }
    }
}

fn wrap_unit(v: f64) -> f64 {
    let w = (v % 1.0 + 1.0) % 1.0;
    if w.abs() < MIN_VISIT_BOUND {
        w + MIN_VISIT_BOUND
    } else {
        w
    }
}

fn local_search(obj: &Objective, start: &[f64], iters: usize) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut f = obj.value(&x);
    let mut g = vec![0.0; x.len()];
    let mut trial = vec![0.0; x.len()];
    let mut step = 0.05;
    for _ in 0..iters {
        obj.gradient(&x, &mut g);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            break;
        }
        let mut improved = false;
        while step > 1e-12 {
            for (t, (xi, gi)) in trial.iter_mut().zip(x.iter().zip(&g)) {
                *t = (xi - step * gi / norm).clamp(0.0, 1.0);
            }
            let ft = obj.value(&trial);
            if ft < f {
                std::mem::swap(&mut x, &mut trial);
                f = ft;
                step *= 1.5;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, f)
}

/// Runs dual annealing and returns the best placement together with the
/// best objective value recorded after every iteration.
pub fn anneal_with_history(
    graph: &InteractionGraph,
    seed: u64,
    config: &AnnealConfig,
) -> (ContinuousPlacement, Vec<f64>) {
    let n = graph.num_qubits;
    let dim = 2 * n;
    let obj = Objective::new(graph, config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    if n <= 1 {
        let coords = current.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
        return (
            ContinuousPlacement {
                coords,
                objective_value: 0.0,
            },
            vec![0.0],
        );
    }
    let visitor = Visitor::new(config.visit);
    let qa = config.accept;
    let mut e_cur = obj.value(&current);
    let mut best = current.clone();
    let mut e_best = e_cur;
    let mut history = Vec::with_capacity(config.max_iter);

    let t1 = ((config.visit - 1.0) * 2f64.ln()).exp() - 1.0;
    let restart_temp = config.initial_temp * config.restart_temp_ratio;
    let mut iteration = 0;
    'outer: while iteration < config.max_iter {
        for i in 0.. {
            if iteration >= config.max_iter {
                break 'outer;
            }
            let s = i as f64 + 2.0;
            let t2 = ((config.visit - 1.0) * s.ln()).exp() - 1.0;
            let temperature = config.initial_temp * t1 / t2;
            if temperature < restart_temp {
                current = (0..dim).map(|_| rng.random::<f64>()).collect();
                e_cur = obj.value(&current);
                break;
            }
            let temperature_step = temperature / (i as f64 + 1.0);
            let mut improved = i == 0;
            for j in 0..2 * dim {
                let (candidate, e_new) = if j < dim {
                    let upper: f64 = rng.random();
                    let lower: f64 = rng.random();
                    let cand: Vec<f64> = current
                        .iter()
                        .map(|&c| {
                            let mut v = visitor.sample(temperature, &mut rng);
                            if v > TAIL_LIMIT {
                                v = TAIL_LIMIT * upper;
                            } else if v < -TAIL_LIMIT {
                                v = -TAIL_LIMIT * lower;
                            } else if v.is_nan() {
                                v = 0.0;
                            }
                            wrap_unit(c + v)
                        })
                        .collect();
                    let e = obj.value(&cand);
                    (cand, e)
                } else {
                    let k = j - dim;
                    let q = k / 2;
                    let v = visitor.sample(temperature, &mut rng);
                    let v = visitor.clip(v, &mut rng);
                    let mut cand = current.clone();
                    cand[k] = wrap_unit(current[k] + v);
                    let before = obj.contribution(&current, q, current[2 * q], current[2 * q + 1]);
                    let after = obj.contribution(&current, q, cand[2 * q], cand[2 * q + 1]);
                    (cand, e_cur - before + after)
                };
                if e_new < e_cur {
                    current = candidate;
                    e_cur = e_new;
                    if e_cur < e_best {
                        best.clone_from(&current);
                        e_best = e_cur;
                        improved = true;
                    }
                } else {
                    let r: f64 = rng.random();
                    let pqv_temp = 1.0 - (1.0 - qa) * (e_new - e_cur) / temperature_step;
                    let pqv = if pqv_temp <= 0.0 {
                        0.0
                    } else {
                        (pqv_temp.ln() / (1.0 - qa)).exp()
                    };
                    if r <= pqv {
                        current = candidate;
                        e_cur = e_new;
                    }
                }
            }
            // drop accumulated rounding from single-coordinate updates
            e_cur = obj.value(&current);
            if improved {
                let (x, f) = local_search(&obj, &best, config.local_search_iter);
                let e_exact = obj.value(&best);
                if f < e_exact {
                    best.clone_from(&x);
                    current = x;
                    e_cur = f;
                }
                e_best = obj.value(&best);
            }
            history.push(e_best);
            iteration += 1;
        }
    }
    let coords = best.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
    (
        ContinuousPlacement {
            coords,
            objective_value: obj.value(&best),
        },
        history,
    )
}
