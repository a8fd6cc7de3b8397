//! Stroboscopic X refocusing of the always-on couplings.

use crate::error::CompileError;
use crate::layout::Species;
use crate::pulse::{GlobalPulse, Pair, PairSet};

use super::{x, CompilationResult};

/// Couplings that are physically present in every window.
pub const ALWAYS_ON: [Pair; 2] = [Pair::AC, Pair::BC];

fn find(parent: &mut [usize; 3], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    parent[i] = r;
    r
}

/// Pulses for `exp(i·angle·ZZ)` on the kept pairs, identity on the refocused ones.
pub fn decoupled_window(keep: PairSet, angle: f64) -> Result<Vec<GlobalPulse>, CompileError> {
    let always = PairSet::from_pairs(&ALWAYS_ON);
    let window = always.union(keep);
    let refocus = always.minus(keep);
    let mut parent = [0, 1, 2];
    for p in keep.iter() {
        let (a, b) = p.species();
        let (ra, rb) = (find(&mut parent, a.index()), find(&mut parent, b.index()));
        parent[ra] = rb;
    }
    let class: Vec<usize> = (0..3).map(|i| find(&mut parent, i)).collect();
    for p in refocus.iter() {
        let (a, b) = p.species();
        if class[a.index()] == class[b.index()] {
            return Err(CompileError::DecouplingConflict(format!(
                "{} must be refocused but keeping {} couples {} and {}",
                p.name(),
                keep,
                a,
                b
            )));
        }
    }
    if angle == 0.0 {
        return Ok(Vec::new());
    }
    if refocus.is_empty() {
        return Ok(vec![GlobalPulse::Coupling { pairs: window, angle }]);
    }
    // Every refocused pair contains C, so two colours suffice: flip either
    // C's class or all classes of its refocused partners, whichever is fewer.
    let c = class[Species::C.index()];
    let own: Vec<Species> = Species::ALL.into_iter().filter(|s| class[s.index()] == c).collect();
    let others: Vec<Species> = Species::ALL.into_iter().filter(|s| class[s.index()] != c).collect();
    let flipped = if own.len() <= others.len() { own } else { others };
    let half = GlobalPulse::Coupling { pairs: window, angle: angle / 2.0 };
    let mut out = vec![half];
    out.extend(flipped.iter().map(|&s| x(s)));
    out.push(half);
    out.extend(flipped.iter().map(|&s| x(s)));
    Ok(out)
}

pub fn compile_decoupling(keep: &[Pair], angle: f64) -> Result<CompilationResult, CompileError> {
    let set = PairSet::from_pairs(keep);
    let pulses = decoupled_window(set, angle)?;
    Ok(CompilationResult::new(
        "decouple",
        0,
        pulses,
        format!("exp(i·{}·ZZ) on kept pairs", angle),
        format!("adjacent pairs in {}; refocused pairs identity", set),
    )
    .with_param("angle", angle)
    .with_param("keep", set.to_string()))
}
