//! End-to-end compilation: QASM text to schedule, fidelity and parallel plan.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aod::{place_in_aod, score_qubits, select_aod_atoms, AodError, AodGrid, QubitWeight};
use crate::baseline::{route_with_swaps, RoutedCircuit};
use crate::circuit::Circuit;
use crate::config::{AnnealConfig, CompilerConfig, ConfigError};
use crate::hardware::{estimate_success, FidelityReport};
use crate::layout::{anneal_placement, discretize, ContinuousPlacement, DiscreteTopology, InteractionGraph, LayoutError};
use crate::parallel::{plan_parallel, ParallelError, ParallelPlan};
use crate::qasm::{parse_qasm, QasmError};
use crate::schedule::{compile, Schedule, ScheduleError, ScheduleOptions};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Qasm(#[from] QasmError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Aod(#[from] AodError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Parallel(#[from] ParallelError),
    #[error("placement cache {path}: {source}")]
    CacheIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("placement cache {path}: {message}")]
    CacheFormat { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Atom movement with trap-change fallback; never inserts a SWAP.
    #[default]
    Parallax,
    /// Static layout with SWAP chains.
    SwapBaseline,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Parallax => "parallax",
            Strategy::SwapBaseline => "swap-baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOptions {
    pub strategy: Strategy,
    pub seed: u64,
    pub shots: u64,
    /// Loaded when the file exists, written after annealing otherwise.
    pub placement_cache: Option<PathBuf>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            strategy: Strategy::Parallax,
            seed: 0,
            shots: 8000,
            placement_cache: None,
        }
    }
}

/// Every intermediate product of one compilation.
#[derive(Debug, Clone, PartialEq)]
pub struct Compilation {
    pub circuit: Circuit,
    pub strategy: Strategy,
    pub graph: InteractionGraph,
    pub placement: ContinuousPlacement,
    pub topology: DiscreteTopology,
    pub weights: Vec<QubitWeight>,
    pub aod: AodGrid,
    /// AOD row/column pairs actually used after any capacity fallback.
    pub aod_count_used: usize,
    pub routed: Option<RoutedCircuit>,
    /// Gates scheduled: the input for movement, the routed circuit otherwise.
    pub scheduled_circuit: Circuit,
    pub schedule: Schedule,
    pub fidelity: FidelityReport,
    pub parallel: ParallelPlan,
}

/// Annealer settings with the spacing floor defaulted to one lattice pitch
/// in unit-square coordinates.
pub fn anneal_config_for(config: &CompilerConfig) -> AnnealConfig {
    let mut a = config.anneal;
    if a.min_spacing.is_none() {
        let span = config.grid.sites_x.max(config.grid.sites_y).saturating_sub(1).max(1);
        a.min_spacing = Some(1.0 / span as f64);
    }
    a
}

fn load_or_anneal(
    graph: &InteractionGraph,
    config: &CompilerConfig,
    seed: u64,
    cache: Option<&Path>,
) -> Result<ContinuousPlacement, Error> {
    let Some(path) = cache else {
        return Ok(anneal_placement(graph, seed, &anneal_config_for(config)));
    };
    let show = path.display().to_string();
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|source| Error::CacheIo {
            path: show.clone(),
            source,
        })?;
        let placement: ContinuousPlacement = serde_json::from_str(&text).map_err(|e| Error::CacheFormat {
            path: show.clone(),
            message: e.to_string(),
        })?;
        let bad = placement
            .coords
            .iter()
            .any(|p| !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y));
        if bad {
            return Err(Error::CacheFormat {
                path: show,
                message: "coordinates must lie in the unit square".into(),
            });
        }
        return Ok(placement);
    }
    let placement = anneal_placement(graph, seed, &anneal_config_for(config));
    let text = serde_json::to_string_pretty(&placement).expect("placement serializes");
    std::fs::write(path, text).map_err(|source| Error::CacheIo { path: show, source })?;
    Ok(placement)
}

/// Selects and places AOD atoms, dropping the lowest-ranked atom whenever
/// line deduplication runs off the grid.
fn assign_aod(weights: &[QubitWeight], topo: &DiscreteTopology, aod_count: usize) -> Result<(AodGrid, usize), AodError> {
    let mut count = aod_count;
    loop {
        let selected = select_aod_atoms(weights, count);
        match place_in_aod(&selected, topo) {
            Ok(grid) => return Ok((grid, selected.len())),
            Err(AodError::BoundaryExceeded { .. }) if selected.len() > 1 => count = selected.len() - 1,
            Err(e) => return Err(e),
        }
    }
}

pub fn compile_qasm(source: &str, config: &CompilerConfig, opts: &CompileOptions) -> Result<Compilation, Error> {
    let circuit = parse_qasm(source)?;
    compile_circuit(circuit, config, opts)
}

pub fn compile_circuit(circuit: Circuit, config: &CompilerConfig, opts: &CompileOptions) -> Result<Compilation, Error> {
    config.validate()?;
    let graph = InteractionGraph::build(&circuit);
    let placement = load_or_anneal(&graph, config, opts.seed, opts.placement_cache.as_deref())?;
    let topology = discretize(&placement, &graph, config.grid, config.blockade_factor)?;
    let weights = score_qubits(&circuit, &topology);
    let sched_opts = ScheduleOptions {
        seed: opts.seed,
        homing: config.homing,
        transient_aod_pairs: config.transient_aod_pairs,
        recursion_limit: config.recursion_limit,
    };
    let (aod, aod_count_used, routed, scheduled_circuit, schedule) = match opts.strategy {
        Strategy::Parallax => {
            let (aod, used) = assign_aod(&weights, &topology, config.aod_count)?;
            let schedule = compile(&circuit, &topology, &aod, &config.hardware, sched_opts)?;
            (aod, used, None, circuit.clone(), schedule)
        }
        Strategy::SwapBaseline => {
            let routed = route_with_swaps(&circuit, &topology);
            let aod = AodGrid::empty();
            let mut schedule = compile(&routed.circuit, &topology, &aod, &config.hardware, sched_opts)?;
            schedule.swap_count = routed.swap_count;
            // layering of the routed circuit would hide the SWAP overhead
            schedule.dependency_layer_count = routed.circuit.nominal_layers().len();
            let c = routed.circuit.clone();
            (aod, 0, Some(routed), c, schedule)
        }
    };
    let fidelity = estimate_success(&schedule, circuit.num_qubits, &config.hardware);
    let parallel = plan_parallel(
        &schedule,
        &topology,
        &aod,
        &config.grid,
        opts.shots,
        config.inter_shot_overhead_us,
    )?;
    Ok(Compilation {
        circuit,
        strategy: opts.strategy,
        graph,
        placement,
        topology,
        weights,
        aod,
        aod_count_used,
        routed,
        scheduled_circuit,
        schedule,
        fidelity,
        parallel,
    })
}
