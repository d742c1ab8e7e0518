//! Compiler for neutral-atom quantum computers that never inserts SWAP
//! gates. Out-of-range CZ partners are brought together by moving atoms held
//! in an acousto-optic deflector (AOD) grid; static atoms fall back to a
//! trap change.
//!
//! The usual entry point is [`pipeline::compile_qasm`]:
//!
//! ```
//! use nacc::config::CompilerConfig;
//! use nacc::pipeline::{compile_qasm, CompileOptions};
//!
//! let src = "OPENQASM 2.0;\nqreg q[3];\ncx q[0],q[2];\nh q[1];\n";
//! let out = compile_qasm(src, &CompilerConfig::default(), &CompileOptions::default()).unwrap();
//! assert_eq!(out.schedule.swap_count, 0);
//! assert_eq!(out.schedule.cz_count, 1);
//! ```

pub mod aod;
pub mod baseline;
pub mod circuit;
pub mod config;
pub mod geometry;
pub mod hardware;
pub mod layout;
pub mod movement;
pub mod parallel;
pub mod pipeline;
pub mod qasm;
pub mod render;
pub mod report;
pub mod schedule;
pub mod validate;

pub use pipeline::{compile_circuit, compile_qasm, Compilation, CompileOptions, Error, Strategy};

/// The guide's code samples, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/frontend.md")]
    mod frontend {}
    #[doc = include_str!("../../../book/src/layout.md")]
    mod layout {}
    #[doc = include_str!("../../../book/src/aod.md")]
    mod aod {}
    #[doc = include_str!("../../../book/src/movement.md")]
    mod movement {}
    #[doc = include_str!("../../../book/src/scheduling.md")]
    mod scheduling {}
    #[doc = include_str!("../../../book/src/hardware.md")]
    mod hardware {}
    #[doc = include_str!("../../../book/src/parallel.md")]
    mod parallel {}
    #[doc = include_str!("../../../book/src/baseline.md")]
    mod baseline {}
    #[doc = include_str!("../../../book/src/reports.md")]
    mod reports {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
