//! Encoded gadgets inside A blocks: the error-correction round and transversal CZ.

use std::f64::consts::FRAC_PI_4;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::CompileError;
use crate::layout::{CellRole, ChainLayout, Species};
use crate::pauli::{Pauli1, PauliString};
use crate::pulse::{Gate, GlobalPulse, Pair, PairSet, PulseSchedule};
use crate::qec::CodeSpec;

use super::decouple::decoupled_window;
use super::primitives::window;
use super::synth::{BlockSynth, Emitter};
use super::transport::compile_syndrome_reset;
use super::CompilationResult;

/// A syndrome bit read as the Z value of `cell` after the first `after` pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Readout {
    pub after: usize,
    pub cell: usize,
    pub logical: usize,
    pub generator: usize,
}

/// Classical side of an EC round: where syndromes are read and when they are decoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcPlan {
    pub readouts: Vec<Readout>,
    /// Pulse count at which the decoder runs and the frame is updated.
    pub decode_at: Option<usize>,
    /// Cells of every logical qubit, in code-qubit order.
    pub logicals: Vec<Vec<usize>>,
    pub generators: usize,
    /// Whether a closing mirror cycle restores block orientation.
    pub parity_fix: bool,
}

impl EcPlan {
    pub fn from_schedule(s: &PulseSchedule) -> Option<EcPlan> {
        s.meta.params.get("ec_plan").and_then(|v| serde_json::from_value(v.clone()).ok())
    }

    /// The same plan for a schedule placed after `offset` pulses.
    pub fn shifted(&self, offset: usize) -> EcPlan {
        let mut p = self.clone();
        p.readouts.iter_mut().for_each(|r| r.after += offset);
        p.decode_at = p.decode_at.map(|d| d + offset);
        p
    }
}

/// Equal-length A blocks bounded by C.
fn a_blocks(layout: &ChainLayout) -> Result<(Vec<Range<usize>>, usize), CompileError> {
    let runs = layout.runs(Species::A);
    let n = runs.first().map(|r| r.len()).ok_or_else(|| CompileError::LayoutMismatch("no A block".into()))?;
    if !layout.runs_bounded_by_c(Species::A) {
        return Err(CompileError::LayoutMismatch("A blocks must be bounded by C cells (use a capped layout)".into()));
    }
    if runs.iter().any(|r| r.len() != n) {
        return Err(CompileError::LayoutMismatch("A blocks of different lengths".into()));
    }
    Ok((runs, n))
}

/// Block sites (offsets from the block start) holding logical 0's code qubits.
fn left_sites(code: &CodeSpec, layout: &ChainLayout, block: &Range<usize>) -> Result<Vec<usize>, CompileError> {
    let n = block.len();
    let mut sites: Vec<usize> = (0..n / 2).filter(|&s| layout.cells[block.start + s].role == CellRole::Data).take(code.n).collect();
    if sites.len() < code.n && code.stabilizers.is_empty() {
        // Unencoded qubits may sit anywhere, including next to C.
        sites = (0..n / 2).take(code.n).collect();
    }
    if sites.len() < code.n {
        return Err(CompileError::LayoutMismatch(format!("block holds {} data cells per half, code needs {}", sites.len(), code.n)));
    }
    Ok(sites)
}

/// Cells of each logical qubit: two per block, the second the mirror image of the first.
pub fn code_placement(code: &CodeSpec, layout: &ChainLayout) -> Result<Vec<Vec<usize>>, CompileError> {
    let (blocks, n) = a_blocks(layout)?;
    let mut out = Vec::new();
    for b in &blocks {
        let sites = left_sites(code, layout, b)?;
        out.push(sites.iter().map(|s| b.start + s).collect());
        out.push(sites.iter().map(|s| b.start + n - 1 - s).collect());
    }
    Ok(out)
}

fn on_sites(n: usize, sites: &[usize], p: &PauliString, offset: usize) -> PauliString {
    let mut out = PauliString::identity(n);
    for (i, &s) in sites.iter().enumerate() {
        out.set(s + offset, p.get(i));
    }
    out
}

/// One round: per generator, rotate the edge ancilla into the X basis, imprint the
/// generator's parity, rotate back, read, and reset. Decoding happens once per round.
pub fn compile_ec_round(code: &CodeSpec, level: u32, layout: &ChainLayout) -> Result<CompilationResult, CompileError> {
    if level != 0 {
        return Err(CompileError::Unsupported(format!("pulse-level EC round at layout level {} (level 0 is compiled)", level)));
    }
    let logicals = code_placement(code, layout)?;
    let (blocks, n) = a_blocks(layout)?;
    if code.stabilizers.is_empty() {
        let plan = EcPlan { readouts: Vec::new(), decode_at: None, logicals, generators: 0, parity_fix: false };
        return Ok(CompilationResult::new("ec_round", level, vec![GlobalPulse::unitary(Species::A, Gate::Z(0.0))], "identity", "every A cell")
            .with_param("code", code.name.clone())
            .with_param("ec_plan", serde_json::to_value(&plan).expect("plan serializes")));
    }
    let block = &blocks[0];
    let sites = left_sites(code, layout, block)?;
    if layout.cells[block.start].role != CellRole::Syndrome || sites.contains(&0) {
        return Err(CompileError::LayoutMismatch("EC needs a syndrome cell at each block edge".into()));
    }
    let reset = compile_syndrome_reset(0, layout)?.schedule.pulses;
    let synth = BlockSynth::new(n)?;
    let mut e = Emitter::new(&synth);
    let z0 = PauliString::single(n, 0, Pauli1::Z);
    let y0 = PauliString::single(n, 0, Pauli1::Y);
    let mut readouts = Vec::new();
    for (gi, g) in code.stabilizers.iter().enumerate() {
        let zg = z0.mul(&on_sites(n, &sites, g, 0));
        e.rotation(&y0, -FRAC_PI_4);
        e.rotation(&z0, -FRAC_PI_4);
        e.rotation(&zg, FRAC_PI_4);
        e.rotation(&y0, FRAC_PI_4);
        let reversed = e.reversed();
        let after = e.position();
        for (b, r) in blocks.iter().enumerate() {
            let (first, second) = if reversed { (r.end - 1, r.start) } else { (r.start, r.end - 1) };
            readouts.push(Readout { after, cell: first, logical: 2 * b, generator: gi });
            readouts.push(Readout { after, cell: second, logical: 2 * b + 1, generator: gi });
        }
        e.raw(&reset);
    }
    let parity_fix = e.reversed();
    e.restore_orientation();
    let pulses = e.finish();
    let plan = EcPlan { readouts, decode_at: Some(pulses.len()), logicals, generators: code.stabilizers.len(), parity_fix };
    Ok(CompilationResult::new(
        "ec_round",
        level,
        pulses,
        "syndrome extraction, decode, frame recovery",
        "both logical qubits of every A block; syndrome cells end in |0⟩",
    )
    .with_param("code", code.name.clone())
    .with_param("ec_plan", serde_json::to_value(&plan).expect("plan serializes")))
}

/// CZ between each code qubit of logical 0 and its mirror partner in logical 1.
pub fn compile_intrablock_transversal_cz(code: &CodeSpec, layout: &ChainLayout) -> Result<CompilationResult, CompileError> {
    if !code.transversal_cz {
        return Err(CompileError::NoTransversalCz(code.name.clone()));
    }
    let logicals = code_placement(code, layout)?;
    let (blocks, n) = a_blocks(layout)?;
    let sites = left_sites(code, layout, &blocks[0])?;
    let pulses = if n == 2 {
        let mut p = decoupled_window(PairSet::from_pairs(&[Pair::AA]), FRAC_PI_4)?;
        p.push(GlobalPulse::ResetC);
        p.extend(window(Species::A, -FRAC_PI_4));
        p
    } else {
        let synth = BlockSynth::new(n)?;
        let mut e = Emitter::new(&synth);
        for &s in &sites {
            let z = PauliString::single(n, s, Pauli1::Z);
            e.rotation(&z, -FRAC_PI_4);
            e.straddling(&z, FRAC_PI_4);
        }
        e.restore_orientation();
        e.finish()
    };
    Ok(CompilationResult::new("intrablock_transversal_cz", 0, pulses, "logical CZ", "the two logical qubits of every A block; C left in |0⟩")
        .with_param("code", code.name.clone())
        .with_param("logicals", serde_json::to_value(&logicals).expect("cells serialize")))
}
