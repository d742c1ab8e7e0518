//! The JSON compile report and the comparison table built from reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::hardware::FidelityFactors;
use crate::pipeline::Compilation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParallelSummary {
    pub copies: usize,
    pub tiling: (usize, usize),
    pub footprint: (usize, usize),
    pub atoms_per_aod_row: usize,
    pub atoms_per_aod_col: usize,
    pub shots: u64,
    pub physical_shots: u64,
    pub total_execution_time_us: f64,
    pub serial_execution_time_us: f64,
    pub reduction_vs_serial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileReport {
    pub circuit_name: String,
    pub strategy: String,
    pub seed: u64,
    pub machine: String,
    pub num_qubits: usize,
    pub homing: bool,
    pub aod_count_used: usize,
    /// CZ gates of the input circuit.
    pub cz_count: usize,
    /// CZ gates executed, SWAP decompositions included.
    pub cz_count_total: usize,
    pub u3_count: usize,
    pub swap_count: usize,
    pub trap_change_count: usize,
    pub trap_change_cz_fraction: f64,
    pub layer_count: usize,
    pub dependency_layer_count: usize,
    pub interaction_radius_um: f64,
    pub blockade_radius_um: f64,
    pub circuit_runtime_us: f64,
    pub p_success: f64,
    pub fidelity_factors: FidelityFactors,
    pub parallel: ParallelSummary,
    /// Wall-clock compile time; present only when requested, since it
    /// breaks byte-for-byte reproducibility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compile_time_ms: Option<f64>,
}

impl CompileReport {
    pub fn from_compilation(c: &Compilation, circuit_name: &str, machine: &str) -> Self {
        let s = &c.schedule;
        let p = &c.parallel;
        CompileReport {
            circuit_name: circuit_name.to_string(),
            strategy: c.strategy.name().to_string(),
            seed: s.rng_seed,
            machine: machine.to_string(),
            num_qubits: c.circuit.num_qubits,
            homing: s.homing,
            aod_count_used: c.aod_count_used,
            cz_count: c.circuit.cz_count(),
            cz_count_total: s.cz_count,
            u3_count: s.u3_count,
            swap_count: s.swap_count,
            trap_change_count: s.trap_change_count,
            trap_change_cz_fraction: s.trap_change_cz_fraction,
            layer_count: s.layers.len(),
            dependency_layer_count: s.dependency_layer_count,
            interaction_radius_um: c.topology.interaction_radius_um,
            blockade_radius_um: c.topology.blockade_radius_um,
            circuit_runtime_us: s.total_runtime_us,
            p_success: c.fidelity.p_success,
            fidelity_factors: c.fidelity.factors,
            parallel: ParallelSummary {
                copies: p.copies,
                tiling: p.tiling,
                footprint: p.footprint,
                atoms_per_aod_row: p.atoms_per_aod_row,
                atoms_per_aod_col: p.atoms_per_aod_col,
                shots: p.shots,
                physical_shots: p.physical_shots,
                total_execution_time_us: p.total_execution_time_us,
                serial_execution_time_us: p.serial_execution_time_us,
                reduction_vs_serial: p.reduction_vs_serial,
            },
            compile_time_ms: None,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Fixed-width comparison table, one row per report, followed by per-circuit
/// movement-vs-SWAP comparisons where both strategies are present.
pub fn summarize(reports: &[CompileReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:<14} {:>7} {:>7} {:>6} {:>7} {:>12} {:>10} {:>7} {:>14}",
        "circuit", "strategy", "qubits", "cz", "swaps", "layers", "runtime_us", "p_success", "copies", "total_exec_us"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<20} {:<14} {:>7} {:>7} {:>6} {:>7} {:>12.3} {:>10.6} {:>7} {:>14.3}",
            r.circuit_name,
            r.strategy,
            r.num_qubits,
            r.cz_count_total,
            r.swap_count,
            r.layer_count,
            r.circuit_runtime_us,
            r.p_success,
            r.parallel.copies,
            r.parallel.total_execution_time_us
        );
    }
    let mut by_circuit: BTreeMap<&str, (Option<&CompileReport>, Option<&CompileReport>)> = BTreeMap::new();
    for r in reports {
        let e = by_circuit.entry(&r.circuit_name).or_default();
        match r.strategy.as_str() {
            "parallax" => e.0 = Some(r),
            "swap-baseline" => e.1 = Some(r),
            _ => {}
        }
    }
    let pairs: Vec<_> = by_circuit
        .iter()
        .filter_map(|(name, (m, b))| Some((*name, (*m)?, (*b)?)))
        .collect();
    if !pairs.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<20} {:>14} {:>14}", "circuit", "cz_reduction", "success_gain");
        for (name, m, b) in pairs {
            let red = if b.cz_count_total == 0 {
                0.0
            } else {
                1.0 - m.cz_count_total as f64 / b.cz_count_total as f64
            };
            let gain = if b.p_success > 0.0 { m.p_success / b.p_success - 1.0 } else { 0.0 };
            let _ = writeln!(out, "{:<20} {:>13.1}% {:>13.1}%", name, 100.0 * red, 100.0 * gain);
        }
    }
    out
}
