//! Gadget compiler: every operation becomes a schedule of species-wide pulses.

mod decouple;
mod ec;
mod mirror;
mod primitives;
pub mod synth;

pub use synth::{canonical_layout, BlockSynth, Emitter};
mod transport;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::CompileError;
use crate::layout::{ChainLayout, Species};
use crate::pulse::{schedule_cost, CostRecord, Gate, GlobalPulse, Pair, PulseSchedule};

pub use ec::{code_placement, compile_ec_round, compile_intrablock_transversal_cz, EcPlan, Readout};
pub use decouple::{compile_decoupling, decoupled_window, ALWAYS_ON};
pub use mirror::{compile_global_s, compile_mirror_cycle, k_mirror, mirror_cycle_pulses, s_step, LocalFrame, MirrorEntry, MIRROR_TABLE};
pub use primitives::{
    cnot_ba, compile_cz_ab, compile_edge_phase, compile_edge_rotation, compile_swap_interface, compile_swap_interface_dir,
    compile_swap_interface_unfused, compile_swap_round_trip, cz_ab, swap_pulses, Side, SwapDirection,
};
pub use transport::{compile_ancilla_reset, compile_interblock_cz, compile_interblock_phase, compile_syndrome_reset};

/// What a compiled schedule is claimed to do.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimedAction {
    /// Target unitary family, e.g. `CZ(A,B)`.
    pub family: String,
    /// Cell roles it acts on; everything else is claimed identity.
    pub acts_on: String,
}

#[derive(Debug, Clone)]
pub struct CompilationResult {
    pub schedule: PulseSchedule,
    pub claimed_action: ClaimedAction,
    /// Per-cell cost on the layout the result was compiled for, if any.
    pub budget: Option<CostRecord>,
}

impl CompilationResult {
    pub(crate) fn new(gadget: &str, level: u32, pulses: Vec<GlobalPulse>, family: impl Into<String>, acts_on: impl Into<String>) -> Self {
        CompilationResult {
            schedule: PulseSchedule::from_pulses(gadget, level, pulses),
            claimed_action: ClaimedAction { family: family.into(), acts_on: acts_on.into() },
            budget: None,
        }
    }

    pub fn with_budget(mut self, layout: &ChainLayout) -> Self {
        self.budget = Some(schedule_cost(&self.schedule, layout));
        self
    }

    pub(crate) fn with_param(mut self, key: &str, v: impl Into<serde_json::Value>) -> Self {
        self.schedule = self.schedule.with_param(key, v);
        self
    }
}

pub(crate) fn h(s: Species) -> GlobalPulse {
    GlobalPulse::unitary(s, Gate::H)
}

pub(crate) fn x(s: Species) -> GlobalPulse {
    GlobalPulse::unitary(s, Gate::X)
}

pub(crate) fn rz(s: Species, theta: f64) -> GlobalPulse {
    GlobalPulse::unitary(s, Gate::Z(theta))
}

/// Time-reversed inverse of a reset-free pulse sequence.
///
/// # Panics
/// On ResetC, which has no inverse.
pub fn invert(pulses: &[GlobalPulse]) -> Vec<GlobalPulse> {
    pulses
        .iter()
        .rev()
        .map(|p| match *p {
            GlobalPulse::SpeciesUnitary { species, gate: Gate::Z(t) } => rz(species, -t),
            GlobalPulse::Coupling { pairs, angle } => GlobalPulse::Coupling { pairs, angle: -angle },
            GlobalPulse::ResetC => panic!("ResetC has no inverse"),
            other => other,
        })
        .collect()
}

/// Gadget names accepted by [`compile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GadgetName {
    GlobalS,
    MirrorCycle,
    Decouple,
    EdgePhase,
    EdgeRotation,
    CzAb,
    SwapInterface,
    SyndromeReset,
    InterblockCz,
    IntrablockTransversalCz,
    AncillaReset,
    EcRound,
}

impl GadgetName {
    pub const ALL: [GadgetName; 12] = [
        GadgetName::GlobalS,
        GadgetName::MirrorCycle,
        GadgetName::Decouple,
        GadgetName::EdgePhase,
        GadgetName::EdgeRotation,
        GadgetName::CzAb,
        GadgetName::SwapInterface,
        GadgetName::SyndromeReset,
        GadgetName::InterblockCz,
        GadgetName::IntrablockTransversalCz,
        GadgetName::AncillaReset,
        GadgetName::EcRound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GadgetName::GlobalS => "global_S",
            GadgetName::MirrorCycle => "mirror_cycle",
            GadgetName::Decouple => "decouple",
            GadgetName::EdgePhase => "edge_phase",
            GadgetName::EdgeRotation => "edge_rotation",
            GadgetName::CzAb => "cz_ab",
            GadgetName::SwapInterface => "swap_interface",
            GadgetName::SyndromeReset => "syndrome_reset",
            GadgetName::InterblockCz => "interblock_cz",
            GadgetName::IntrablockTransversalCz => "intrablock_transversal_cz",
            GadgetName::AncillaReset => "ancilla_reset",
            GadgetName::EcRound => "ec_round",
        }
    }
}

impl fmt::Display for GadgetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GadgetName {
    type Err = CompileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GadgetName::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| CompileError::Unsupported(format!("unknown gadget `{}`", s)))
    }
}

/// Gadget parameters; unused fields are ignored by a given gadget.
#[derive(Debug, Clone, PartialEq)]
pub struct GadgetParams {
    pub theta: f64,
    pub species: Vec<Species>,
    pub pairs: Vec<Pair>,
    pub side: Side,
    pub code: String,
}

impl Default for GadgetParams {
    fn default() -> Self {
        GadgetParams {
            theta: std::f64::consts::FRAC_PI_4,
            species: vec![Species::A],
            pairs: vec![Pair::AC],
            side: Side::AC,
            code: "steane".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GadgetSpec {
    pub name: GadgetName,
    pub level: u32,
    pub params: GadgetParams,
}

impl GadgetSpec {
    pub fn new(name: GadgetName, level: u32) -> Self {
        GadgetSpec { name, level, params: GadgetParams::default() }
    }
}

/// Compile a gadget for a layout; the result carries its budget on that layout.
pub fn compile(spec: &GadgetSpec, layout: &ChainLayout) -> Result<CompilationResult, CompileError> {
    let p = &spec.params;
    let code = || crate::qec::builtin_code(&p.code).map_err(|e| CompileError::Unsupported(e.to_string()));
    let first_species = || p.species.first().copied().ok_or(CompileError::EmptySpeciesSet);
    let r = match spec.name {
        GadgetName::GlobalS => compile_global_s(&p.species)?,
        GadgetName::MirrorCycle => compile_mirror_cycle(first_species()?, spec.level, layout)?,
        GadgetName::Decouple => compile_decoupling(&p.pairs, p.theta)?,
        GadgetName::EdgePhase => compile_edge_phase(first_species()?, p.theta)?,
        GadgetName::EdgeRotation => compile_edge_rotation(p.theta, spec.level),
        GadgetName::CzAb => compile_cz_ab(spec.level),
        GadgetName::SwapInterface => compile_swap_interface(p.side),
        GadgetName::SyndromeReset => compile_syndrome_reset(spec.level, layout)?,
        GadgetName::InterblockCz => compile_interblock_cz(spec.level, layout)?,
        GadgetName::IntrablockTransversalCz => compile_intrablock_transversal_cz(&code()?, layout)?,
        GadgetName::AncillaReset => compile_ancilla_reset(spec.level, layout)?,
        GadgetName::EcRound => compile_ec_round(&code()?, spec.level, layout)?,
    };
    Ok(r.with_budget(layout))
}
