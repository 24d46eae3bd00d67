//! Simulation and tuning of a reconfigurable lumped-element matching network
//! built from two-valued MEMS varactors.
//!
//! The network has two stages: a Π-matching cascade of four CL sections
//! (8 control bits) followed by a reflective-type phase shifter, a 3-dB
//! quadrature coupler with two identical reflective loads (3 control bits).
//! An 11-bit [`ConfigurationWord`] selects one of 2048 circuit variants.
//!
//! ```
//! use rfmems_match::{build_full_network, s_parameters, ComponentTable, ConfigurationWord, CouplerMode, LossModel};
//!
//! let table = ComponentTable::default();
//! let net = build_full_network(&table, CouplerMode::Ideal);
//! let word = ConfigurationWord::new(0b101_0000_0011).unwrap();
//! let s = s_parameters(&net, table.f_design, word, &LossModel::default()).unwrap();
//! assert!(s.get(2, 2).norm() <= 1.0);
//! ```
//!
//! The guide in `book/` walks through each layer; its code listings are
//! compiled and run as doc-tests of this crate.

pub mod analysis;
pub mod components;
mod error;
pub mod netlist;
pub mod network;
pub mod numeric;
pub mod solver;
pub mod tuner;

pub use analysis::{
    circular_span_deg, coupler_balance, coverage_metrics, enumerate_states, loss_sweep,
    phase_calibration, phase_span, phase_span_over, write_csv, CouplerBalance, CoverageReport,
    LossSweepRow, PhaseCalibration, PhaseSpan, StatePoint,
};
pub use components::{
    element_admittance, element_impedance, ideal_hybrid_smatrix, reflective_load_impedance,
    resolve_switches, rtps_response, LossModel,
};
pub use error::Error;
pub use netlist::{
    parse_netlist, ConfigurationWord, Element, ElementKind, Netlist, NodeId, Violation,
};
pub use network::{
    build_full_network, phase_stage_network, pi_stage_network, ComponentTable, CouplerMode,
    TwoValue,
};
pub use numeric::{invert, lu_solve, ComplexMatrix, ComplexScalar};
pub use solver::{
    assemble_admittance, port_zmatrix, reflection, s_parameters, z_to_s, SParameterBlock, TwoPort,
};
pub use tuner::{tune_exhaustive, tune_greedy, Objective, TuneQuery, TuneResult};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/netlists.md")]
    mod netlists {}
    #[doc = include_str!("../../../book/src/nodal-analysis.md")]
    mod nodal_analysis {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/phase-shifter.md")]
    mod phase_shifter {}
    #[doc = include_str!("../../../book/src/coverage.md")]
    mod coverage {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    mod tuning {}
}
