//! Edge operations anchored on C cells: edge phase, CZ(A,B), edge rotation, interface SWAP.

use std::f64::consts::FRAC_PI_4;

use serde::Serialize;

use crate::error::CompileError;
use crate::layout::Species;
use crate::pulse::{GlobalPulse, Pair, PairSet};

use super::decouple::decoupled_window;
use super::{h, invert, rz, x, CompilationResult};

use Species::{A, B, C};

/// `exp(i·angle·Z_X Z_C)` on X–C bonds only (X = A or B).
pub(crate) fn window(species: Species, angle: f64) -> Vec<GlobalPulse> {
    let pair = Pair::of(species, C).expect("A or B");
    decoupled_window(PairSet::from_pairs(&[pair]), angle).expect("single pair never conflicts")
}

pub fn compile_edge_phase(species: Species, angle: f64) -> Result<CompilationResult, CompileError> {
    if species == C {
        return Err(CompileError::Unsupported("edge phase acts on species A or B".into()));
    }
    let mut pulses = vec![GlobalPulse::ResetC];
    pulses.extend(window(species, angle));
    Ok(CompilationResult::new(
        "edge_phase",
        0,
        pulses,
        format!("exp(i·{}·Z)", angle),
        format!("{} cells adjacent to a C cell; C left in |0⟩", species),
    )
    .with_param("angle", angle)
    .with_param("species", species.to_string()))
}

/// CZ between the A and B neighbours of every C cell, using only C-local pulses.
pub fn cz_ab() -> Vec<GlobalPulse> {
    let p = FRAC_PI_4;
    let mut out = Vec::new();
    out.extend(window(B, -p));
    out.extend([rz(C, p), h(C)]);
    out.extend(window(A, -p));
    out.extend([rz(C, p), h(C)]);
    out.extend(window(B, p));
    out.extend([rz(C, -p), h(C), rz(C, -p)]);
    out.extend(window(A, p));
    out.push(h(C));
    out
}

pub fn compile_cz_ab(level: u32) -> CompilationResult {
    CompilationResult::new("cz_ab", level, cz_ab(), "CZ(A,B)", "A and B neighbours of each C cell; C and bulk identity")
}

/// CNOT with the B neighbour of each C as control and the A neighbour as target.
pub fn cnot_ba() -> Vec<GlobalPulse> {
    let mut out = vec![h(A)];
    out.extend(cz_ab());
    out.push(h(A));
    out
}

pub fn compile_edge_rotation(theta: f64, level: u32) -> CompilationResult {
    let flip = || {
        let mut v = cnot_ba();
        v.push(x(B));
        v.extend(cnot_ba());
        v
    };
    let mut pulses = vec![rz(A, theta / 2.0)];
    pulses.extend(flip());
    pulses.push(rz(A, -theta / 2.0));
    pulses.extend(flip());
    CompilationResult::new(
        "edge_rotation",
        level,
        pulses,
        format!("exp(i·{}·Z)", theta),
        "A cells facing a B cell across a C cell; bulk, B and C identity",
    )
    .with_param("theta", theta)
}

/// Interface whose C-side partner is transported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    AC,
    BC,
}

impl Side {
    pub fn species(self) -> Species {
        match self {
            Side::AC => A,
            Side::BC => B,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::AC => "A-C",
            Side::BC => "B-C",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s {
            "A-C" | "AC" => Some(Side::AC),
            "B-C" | "BC" => Some(Side::BC),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SwapDirection {
    On,
    Off,
}

/// Three-window SWAP with the CNOT dressing fused into the H/Z layers.
///
/// Exact SWAP on every (X, C) bond. Cells of species X without a C neighbour
/// pick up `H·Z(π/4)·H` from `On`; `Off` is the exact inverse sequence, so an
/// On/Off pair leaves them untouched.
pub fn swap_pulses(side: Side, dir: SwapDirection) -> Vec<GlobalPulse> {
    let s = side.species();
    let p = FRAC_PI_4;
    let w = window(s, p);
    let mut on = vec![h(C), rz(C, 3.0 * p), h(C)];
    on.extend(w.iter().copied());
    on.extend([h(s), h(C)]);
    on.extend(w.iter().copied());
    on.extend([rz(s, p), rz(C, p), h(s), h(C)]);
    on.extend(w.iter().copied());
    on.extend([h(C), rz(C, 3.0 * p), h(C)]);
    match dir {
        SwapDirection::On => on,
        SwapDirection::Off => invert(&on),
    }
}

pub fn compile_swap_interface_dir(side: Side, dir: SwapDirection) -> CompilationResult {
    let d = match dir {
        SwapDirection::On => "on",
        SwapDirection::Off => "off",
    };
    let frame = match dir {
        SwapDirection::On => "H·Z(π/4)·H",
        SwapDirection::Off => "H·Z(-π/4)·H",
    };
    CompilationResult::new(
        "swap_interface",
        0,
        swap_pulses(side, dir),
        "SWAP",
        format!("each C cell and its {} neighbour; other {} cells get {}", side.species(), side.species(), frame),
    )
    .with_param("side", side.name())
    .with_param("direction", d)
}

pub fn compile_swap_interface(side: Side) -> CompilationResult {
    compile_swap_interface_dir(side, SwapDirection::On)
}

/// Swap on followed by swap off: identity on every cell.
pub fn compile_swap_round_trip(side: Side) -> CompilationResult {
    let mut pulses = swap_pulses(side, SwapDirection::On);
    pulses.extend(swap_pulses(side, SwapDirection::Off));
    CompilationResult::new("swap_interface", 0, pulses, "identity", "all cells").with_param("side", side.name())
}

/// Textbook three-CNOT SWAP, each CNOT an H-conjugated CZ.
pub fn compile_swap_interface_unfused(side: Side) -> CompilationResult {
    let s = side.species();
    let cz = || {
        let mut v = window(s, FRAC_PI_4);
        v.extend([rz(s, -FRAC_PI_4), rz(C, -FRAC_PI_4)]);
        v
    };
    let cnot_target = |t: Species| {
        let mut v = vec![h(t)];
        v.extend(cz());
        v.push(h(t));
        v
    };
    let mut pulses = cnot_target(C);
    pulses.extend(cnot_target(s));
    pulses.extend(cnot_target(C));
    CompilationResult::new(
        "swap_interface",
        0,
        pulses,
        "SWAP",
        format!("each C cell and its {} neighbour; other {} cells get Z(-π/4)·H·Z(-π/4)·H·Z(-π/4)", s, s),
    )
    .with_param("side", side.name())
    .with_param("form", "unfused")
}
