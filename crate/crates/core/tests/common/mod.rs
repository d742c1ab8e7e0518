//! Shared fixtures for the integration tests: seeded random circuits and a
//! dense state-vector simulator written straight from the gate matrices.

#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nacc::circuit::{Circuit, Gate, GateKind};

pub fn benchmarks_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks")
}

/// Every bundled benchmark as (stem, source), sorted by name.
pub fn benchmarks() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(benchmarks_dir())
        .expect("benchmarks directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "qasm"))
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            (stem, std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

/// `gates` gates on `qubits` qubits; roughly half are CZs on uniform pairs,
/// the rest U3s with uniform angles.
pub fn random_circuit(rng: &mut ChaCha8Rng, qubits: usize, gates: usize) -> Circuit {
    let mut c = Circuit::new(qubits);
    for _ in 0..gates {
        if rng.random_bool(0.5) {
            let a = rng.random_range(0..qubits);
            let mut b = rng.random_range(0..qubits - 1);
            if b >= a {
                b += 1;
            }
            c.cz(a, b);
        } else {
            let tau = std::f64::consts::TAU;
            c.u3(rng.random_range(0..qubits), rng.random_range(0.0..tau), rng.random_range(0.0..tau), rng.random_range(0.0..tau));
        }
    }
    c
}

/// Circuit number `i` of the fuzz corpus: 5–20 qubits, 20–400 gates.
pub fn fuzz_circuit(i: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF0_22 + i);
    let n = rng.random_range(5..=20);
    let g = rng.random_range(20..=400);
    random_circuit(&mut rng, n, g)
}

/// Dense state of `n` qubits; qubit k is bit k of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl State {
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        State { n, amps }
    }

    /// A fixed, entangled-looking start so that phases matter.
    pub fn scrambled(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        State { n, amps }
    }

    /// U3(θ, φ, λ) = [[cos θ/2, −e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]].
    pub fn u3(&mut self, q: usize, theta: f64, phi: f64, lambda: f64) {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let m = [
            [Complex64::new(c, 0.0), -Complex64::from_polar(s, lambda)],
            [Complex64::from_polar(s, phi), Complex64::from_polar(c, phi + lambda)],
        ];
        let bit = 1 << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// CZ = diag(1, 1, 1, −1).
    pub fn cz(&mut self, a: usize, b: usize) {
        let mask = (1 << a) | (1 << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    pub fn apply(&mut self, g: &Gate) {
        match g.kind {
            GateKind::U3 { theta, phi, lambda } => self.u3(g.operands[0], theta, phi, lambda),
            GateKind::CZ => self.cz(g.operands[0], g.operands[1]),
        }
    }

    pub fn max_diff(&self, other: &State) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Final state of `circuit` applied to `start` in program order.
pub fn run_circuit(circuit: &Circuit, start: &State) -> State {
    let mut s = start.clone();
    for g in &circuit.gates {
        s.apply(g);
    }
    s
}

/// Final state of the gates of `order` (ids into `circuit`).
pub fn run_order(circuit: &Circuit, order: impl IntoIterator<Item = usize>, start: &State) -> State {
    let mut s = start.clone();
    for id in order {
        s.apply(&circuit.gates[id]);
    }
    s
}
