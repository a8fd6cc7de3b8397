//! The mirror automaton S = H̄·CZ̄ and whole-subchain reversal.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::Serialize;

use crate::error::CompileError;
use crate::layout::{ChainLayout, Species};
use crate::pulse::{GlobalPulse, Pair, PairSet};

use super::decouple::decoupled_window;
use super::{h, rz, CompilationResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LocalFrame {
    Identity,
    /// Hadamard on every cell of the run.
    Hadamard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MirrorEntry {
    pub n: usize,
    /// Fewest S steps that reverse a run of length n.
    pub k: usize,
    /// Order of S on the run; S^(k + j·period) reverses for every j.
    pub period: usize,
    /// Local frame left on the reversed run.
    pub frame: LocalFrame,
}

const fn entry(n: usize) -> MirrorEntry {
    if n == 1 {
        MirrorEntry { n, k: 1, period: 2, frame: LocalFrame::Hadamard }
    } else {
        MirrorEntry { n, k: n + 1, period: 2 * (n + 1), frame: LocalFrame::Identity }
    }
}

/// Measured by the dense and symplectic oracles in this module's tests.
pub const MIRROR_TABLE: [MirrorEntry; 32] = [
    entry(1),
    entry(2),
    entry(3),
    entry(4),
    entry(5),
    entry(6),
    entry(7),
    entry(8),
    entry(9),
    entry(10),
    entry(11),
    entry(12),
    entry(13),
    entry(14),
    entry(15),
    entry(16),
    entry(17),
    entry(18),
    entry(19),
    entry(20),
    entry(21),
    entry(22),
    entry(23),
    entry(24),
    entry(25),
    entry(26),
    entry(27),
    entry(28),
    entry(29),
    entry(30),
    entry(31),
    entry(32),
];

pub fn k_mirror(n: usize) -> Result<MirrorEntry, CompileError> {
    if n == 0 || n > MIRROR_TABLE.len() {
        return Err(CompileError::UnknownSubchainLength(n));
    }
    Ok(MIRROR_TABLE[n - 1])
}

/// One S step on the given species; exact on runs bounded by C cells in |0⟩.
pub fn s_step(set: &[Species], reset: bool) -> Result<Vec<GlobalPulse>, CompileError> {
    if set.is_empty() {
        return Err(CompileError::EmptySpeciesSet);
    }
    if set.contains(&Species::C) {
        return Err(CompileError::Unsupported("S acts on species A and B only".into()));
    }
    let mut set: Vec<Species> = set.to_vec();
    set.sort();
    set.dedup();
    let same = |s: Species| Pair::of(s, s).expect("A or B");
    let edge = |s: Species| Pair::of(s, Species::C).expect("A or B");
    let intra = PairSet::from_pairs(&set.iter().map(|&s| same(s)).collect::<Vec<_>>());
    let edges = PairSet::from_pairs(&set.iter().map(|&s| edge(s)).collect::<Vec<_>>());
    let mut out = decoupled_window(intra, FRAC_PI_4)?;
    out.extend(set.iter().map(|&s| rz(s, -FRAC_PI_2)));
    if reset {
        out.push(GlobalPulse::ResetC);
    }
    out.extend(decoupled_window(edges, FRAC_PI_4)?);
    out.extend(set.iter().map(|&s| h(s)));
    Ok(out)
}

pub fn compile_global_s(set: &[Species]) -> Result<CompilationResult, CompileError> {
    let pulses = s_step(set, false)?;
    let names: Vec<String> = set.iter().map(|s| s.to_string()).collect();
    Ok(CompilationResult::new(
        "global_S",
        0,
        pulses,
        "one mirror-automaton step H̄·CZ̄",
        format!("every run of species {} bounded by C cells in |0⟩", names.join(",")),
    ))
}

/// Smallest step count reversing every run of `species` in the layout.
fn cycle_steps(species: Species, layout: &ChainLayout) -> Result<(usize, Vec<usize>), CompileError> {
    let runs = layout.runs(species);
    if runs.is_empty() {
        return Err(CompileError::LayoutMismatch(format!("layout has no {} cells", species)));
    }
    if !layout.runs_bounded_by_c(species) {
        return Err(CompileError::LayoutMismatch(format!(
            "runs of {} must be bounded by C cells (use a capped layout)",
            species
        )));
    }
    let mut lens: Vec<usize> = runs.iter().map(|r| r.len()).collect();
    lens.sort();
    lens.dedup();
    let entries = lens.iter().map(|&n| k_mirror(n)).collect::<Result<Vec<_>, _>>()?;
    if entries.iter().any(|e| e.frame != LocalFrame::Identity) && entries.len() > 1 {
        return Err(CompileError::Unsupported("length-1 runs mixed with longer runs".into()));
    }
    let lcm = entries.iter().fold(1usize, |l, e| l / gcd(l, e.period) * e.period);
    let k = (1..=lcm)
        .find(|k| entries.iter().all(|e| k % e.period == e.k % e.period))
        .ok_or_else(|| CompileError::Unsupported(format!("no common mirror step count for run lengths {:?}", lens)))?;
    Ok((k, lens))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `repeats` full mirror cycles of one species.
pub fn mirror_cycle_pulses(species: Species, layout: &ChainLayout, reset: bool, repeats: usize) -> Result<Vec<GlobalPulse>, CompileError> {
    let (k, _) = cycle_steps(species, layout)?;
    let step = s_step(&[species], reset)?;
    Ok(step.iter().copied().cycle().take(step.len() * k * repeats).collect())
}

pub fn compile_mirror_cycle(species: Species, level: u32, layout: &ChainLayout) -> Result<CompilationResult, CompileError> {
    let (k, lens) = cycle_steps(species, layout)?;
    let reset = species == Species::A;
    let pulses = mirror_cycle_pulses(species, layout, reset, 1)?;
    let frame = if lens == [1] { "Hadamard frame" } else { "identity frame" };
    Ok(CompilationResult::new(
        "mirror_cycle",
        level,
        pulses,
        format!("spatial reversal of each run ({})", frame),
        format!("all runs of species {} (lengths {:?})", species, lens),
    )
    .with_param("steps", k)
    .with_param("species", species.to_string()))
}
