//! Gadgets that move qubits through C cells and B wires.

use std::f64::consts::FRAC_PI_4;

use crate::error::CompileError;
use crate::layout::{CellRole, ChainLayout, Species};
use crate::pulse::GlobalPulse;

use super::mirror::mirror_cycle_pulses;
use super::primitives::{swap_pulses, window, Side, SwapDirection};
use super::{h, invert, rz, CompilationResult};

use Species::{A, B, C};

fn mirror_repeats(level: u32) -> Result<usize, CompileError> {
    match level {
        0 => Ok(1),
        1 => Ok(3),
        l => Err(CompileError::Unsupported(format!("transport at level {} (levels 0 and 1 are compiled)", l))),
    }
}

/// Every C cell may face at most one cell of each species.
fn check_interfaces(layout: &ChainLayout) -> Result<(), CompileError> {
    let n = layout.len();
    for c in layout.cells_of(C) {
        let nb: Vec<Species> = [c.wrapping_sub(1), c + 1].into_iter().filter(|&j| j < n).map(|j| layout.species(j)).collect();
        if nb.len() == 2 && nb[0] == nb[1] && nb[0] != C {
            return Err(CompileError::LayoutMismatch(format!("C cell {} has two {} neighbours", c, nb[0])));
        }
    }
    Ok(())
}

/// C → B, mirror the B runs, B → C: exchanges the contents of the C cells flanking each B run.
fn b_transport(layout: &ChainLayout, level: u32) -> Result<Vec<GlobalPulse>, CompileError> {
    let mut out = swap_pulses(Side::BC, SwapDirection::On);
    out.extend(mirror_cycle_pulses(B, layout, false, mirror_repeats(level)?)?);
    out.extend(swap_pulses(Side::BC, SwapDirection::Off));
    Ok(out)
}

fn reset_pulses(level: u32, layout: &ChainLayout) -> Result<Vec<GlobalPulse>, CompileError> {
    mirror_repeats(level)?;
    check_interfaces(layout)?;
    let adjacent = layout.c_adjacent(A);
    if !layout.cells_with_role(CellRole::Syndrome).iter().any(|i| adjacent.contains(i)) {
        return Err(CompileError::LayoutMismatch("no syndrome cell adjacent to a C cell".into()));
    }
    let has_b = !layout.cells_of(B).is_empty();
    let mut out = swap_pulses(Side::AC, SwapDirection::On);
    if has_b {
        out.extend(b_transport(layout, level)?);
    }
    out.push(GlobalPulse::ResetC);
    if has_b {
        out.extend(b_transport(layout, level)?);
    }
    out.extend(swap_pulses(Side::AC, SwapDirection::Off));
    Ok(out)
}

pub fn compile_syndrome_reset(level: u32, layout: &ChainLayout) -> Result<CompilationResult, CompileError> {
    Ok(CompilationResult::new(
        "syndrome_reset",
        level,
        reset_pulses(level, layout)?,
        "reset to |0⟩",
        "A cells adjacent to C cells; all other cells preserved, C left in |0⟩",
    ))
}

/// Same transport-and-erase path, addressed to the ancillas at block ends.
pub fn compile_ancilla_reset(level: u32, layout: &ChainLayout) -> Result<CompilationResult, CompileError> {
    Ok(CompilationResult::new(
        "ancilla_reset",
        level,
        reset_pulses(level, layout)?,
        "reset to |0⟩",
        "block-end A cells; all other cells preserved, C left in |0⟩",
    ))
}

fn cnot_a_to_c() -> Vec<GlobalPulse> {
    let mut out = vec![h(C)];
    out.extend(window(A, FRAC_PI_4));
    out.extend([rz(A, -FRAC_PI_4), rz(C, -FRAC_PI_4), h(C)]);
    out
}

fn phase_pulses(level: u32, layout: &ChainLayout) -> Result<Vec<GlobalPulse>, CompileError> {
    if layout.cells_of(B).is_empty() {
        return Err(CompileError::LayoutMismatch("missing interconnect between A blocks".into()));
    }
    check_interfaces(layout)?;
    let copy = cnot_a_to_c();
    let mut out = copy.clone();
    out.extend(b_transport(layout, level)?);
    out.extend(window(A, -FRAC_PI_4 / 2.0));
    out.extend(b_transport(layout, level)?);
    out.extend(invert(&copy));
    Ok(out)
}

/// `exp(-iπ/4·Z Z)` between the edge A cells facing each other across an interconnect.
pub fn compile_interblock_phase(level: u32, layout: &ChainLayout) -> Result<CompilationResult, CompileError> {
    Ok(CompilationResult::new(
        "interblock_cz",
        level,
        phase_pulses(level, layout)?,
        "exp(-iπ/4·Z⊗Z)",
        "facing edge A cells across each interconnect; wires and C cells start and end in |0⟩",
    )
    .with_param("dressed", false))
}

pub fn compile_interblock_cz(level: u32, layout: &ChainLayout) -> Result<CompilationResult, CompileError> {
    let mut pulses = phase_pulses(level, layout)?;
    pulses.push(GlobalPulse::ResetC);
    pulses.extend(window(A, FRAC_PI_4));
    Ok(CompilationResult::new(
        "interblock_cz",
        level,
        pulses,
        "CZ",
        "facing edge A cells across each interconnect; wires and C cells start and end in |0⟩",
    )
    .with_param("dressed", true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densesim::{
        cz_matrix, diagonal, embed_index, equivalent_up_to_phase, find_local_z_dressing, restricted_action, StateVector, C64, EQ_TOL,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interblock_phase_and_cz() {
        for (pat, level) in [("ACBBCA", 0), ("ACBBBBCA", 1)] {
            let layout = ChainLayout::from_pattern(pat).unwrap();
            let n = layout.len();
            let edges = [0, n - 1];
            let ph = compile_interblock_phase(level, &layout).unwrap();
            let ra = restricted_action(&ph.schedule, &layout, &edges).unwrap();
            assert!(ra.leakage < 1e-12, "{}", pat);
            let zz = diagonal(2, |i| C64::from_polar(1.0, if i == 0 || i == 3 { -FRAC_PI_4 } else { FRAC_PI_4 }));
            assert!(equivalent_up_to_phase(&ra.matrix, &zz, EQ_TOL).unwrap().equal_up_to_phase, "{}", pat);
            let found = find_local_z_dressing(&ra.matrix, &cz_matrix(2, 0, 1), &[0, 1], 2, EQ_TOL).unwrap();
            assert!(found.equal_up_to_phase);
            let cz = compile_interblock_cz(level, &layout).unwrap();
            let ra = restricted_action(&cz.schedule, &layout, &edges).unwrap();
            assert!(equivalent_up_to_phase(&ra.matrix, &cz_matrix(2, 0, 1), EQ_TOL).unwrap().equal_up_to_phase, "{}", pat);
        }
    }

    #[test]
    fn interblock_bulk_identity() {
        let layout = ChainLayout::from_pattern("AACBBCAA").unwrap();
        let cz = compile_interblock_cz(0, &layout).unwrap();
        let ra = restricted_action(&cz.schedule, &layout, &[0, 1, 6, 7]).unwrap();
        assert!(ra.leakage < 1e-12);
        assert!(equivalent_up_to_phase(&ra.matrix, &cz_matrix(4, 1, 2), EQ_TOL).unwrap().equal_up_to_phase);
    }

    #[test]
    fn interblock_needs_interconnect() {
        let layout = ChainLayout::from_pattern("CAAC").unwrap();
        assert!(matches!(compile_interblock_cz(0, &layout), Err(CompileError::LayoutMismatch(_))));
    }

    fn reset_check(pat: &str, level: u32) {
        let layout = ChainLayout::from_pattern(pat).unwrap();
        let n = layout.len();
        let syn: Vec<usize> = layout.c_adjacent(A);
        let data: Vec<usize> = layout.cells_with_role(CellRole::Data);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = StateVector::random(data.len(), &mut rng);
        // Embed data, syndromes in |1⟩, everything else |0⟩.
        let ones = syn.iter().fold(0usize, |m, &q| m | 1 << (n - 1 - q));
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        for (j, a) in d.amplitudes().iter().enumerate() {
            amps[embed_index(n, &data, j) | ones] = *a;
        }
        let input = StateVector::from_amplitudes(n, amps).unwrap();
        let r = compile_syndrome_reset(level, &layout).unwrap();
        let out = crate::densesim::apply_schedule(&input, &r.schedule, &layout).unwrap();
        let mut want = vec![C64::new(0.0, 0.0); 1 << n];
        for (j, a) in d.amplitudes().iter().enumerate() {
            want[embed_index(n, &data, j)] = *a;
        }
        let want = StateVector::from_amplitudes(n, want).unwrap();
        assert!((out.fidelity(&want) - 1.0).abs() < 1e-10, "{}", pat);
    }

    #[test]
    fn syndrome_reset_preserves_data() {
        reset_check("CAAACBBCAAAC", 0);
        reset_check("AACBBBBCAA", 1);
        reset_check("CAAAAC", 0);
    }

    #[test]
    fn reset_rejects_deep_levels() {
        let layout = ChainLayout::from_pattern("AACBBCAA").unwrap();
        assert!(matches!(compile_syndrome_reset(2, &layout), Err(CompileError::Unsupported(_))));
    }
}
