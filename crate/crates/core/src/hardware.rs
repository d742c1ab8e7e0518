//! Runtime accounting and the success-probability estimate.

use serde::{Deserialize, Serialize};

use crate::config::HardwareParams;
use crate::schedule::Schedule;

/// Per-source success factors; their product is the success probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityFactors {
    pub cz: f64,
    pub u3: f64,
    pub readout: f64,
    pub decoherence: f64,
    pub movement: f64,
    pub atom_loss: f64,
}

impl FidelityFactors {
    pub fn product(&self) -> f64 {
        self.cz * self.u3 * self.readout * self.decoherence * self.movement * self.atom_loss
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub p_success: f64,
    pub factors: FidelityFactors,
}

/// Success probability from raw counts. `runtime_us` drives decoherence:
/// every qubit decays by exp(−T/T1)·exp(−T/T2).
pub fn success_from_counts(
    cz_count: usize,
    u3_count: usize,
    trap_change_count: usize,
    runtime_us: f64,
    n_qubits: usize,
    params: &HardwareParams,
) -> FidelityReport {
    let t_s = runtime_us * 1e-6;
    let n = n_qubits as i32;
    let per_qubit_decay = (-t_s / params.t1_s).exp() * (-t_s / params.t2_s).exp();
    let factors = FidelityFactors {
        cz: (1.0 - params.cz_error).powi(cz_count as i32),
        u3: (1.0 - params.u3_error).powi(u3_count as i32),
        readout: (1.0 - params.readout_error).powi(n),
        decoherence: per_qubit_decay.powi(n),
        movement: (1.0 - params.move_loss).powi(trap_change_count as i32),
        atom_loss: (1.0 - params.atom_loss_rate).powi(n),
    };
    FidelityReport {
        p_success: factors.product(),
        factors,
    }
}

pub fn estimate_success(schedule: &Schedule, n_qubits: usize, params: &HardwareParams) -> FidelityReport {
    success_from_counts(
        schedule.cz_count,
        schedule.u3_count,
        schedule.trap_change_count,
        schedule.total_runtime_us,
        n_qubits,
        params,
    )
}

/// Sum of layer durations.
pub fn compute_runtime(schedule: &Schedule) -> f64 {
    schedule.layers.iter().map(|l| l.duration_us).sum()
}

/// Time of the parallel gate phase: U3 pulses and Rydberg excitations run
/// at the same time, so the phase lasts as long as the slowest kind present.
pub fn gate_phase_us(params: &HardwareParams, has_u3: bool, has_cz: bool) -> f64 {
    let u3 = if has_u3 { params.u3_time_us } else { 0.0 };
    let cz = if has_cz { params.cz_time_us } else { 0.0 };
    u3.max(cz)
}

/// Two trap switches plus the trip out and back.
pub fn trap_change_us(params: &HardwareParams, max_distance_um: f64) -> f64 {
    2.0 * params.trap_switch_us + 2.0 * params.move_time_us(max_distance_um)
}
