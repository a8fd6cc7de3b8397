//! Heisenberg-picture action of Clifford pulses on signed Pauli strings.

use crate::error::SimError;
use std::ops::Range;

use crate::layout::{ChainLayout, Species};
use crate::pauli::{quarter_turns, PauliString};
use crate::pulse::{Gate, GlobalPulse, PairSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `U P U†`: where an error at the pulse input ends up.
    Forward,
    /// `U† P U`: what an observable at the pulse output reads at its input.
    Backward,
}

/// Adjacent bonds `(i, i+1)` activated by a pair set.
pub fn bonds(layout: &ChainLayout, pairs: PairSet) -> Vec<(usize, usize)> {
    (0..layout.len().saturating_sub(1))
        .filter(|&i| pairs.couples(layout.species(i), layout.species(i + 1)))
        .map(|i| (i, i + 1))
        .collect()
}

/// Conjugate `p` through one pulse. ResetC is not unitary and is rejected.
pub fn conjugate(p: &mut PauliString, pulse: &GlobalPulse, layout: &ChainLayout, dir: Direction) -> Result<(), SimError> {
    let sign = if dir == Direction::Forward { 1 } else { -1 };
    match *pulse {
        GlobalPulse::SpeciesUnitary { species, gate } => {
            let cells = layout.cells_of(species);
            match gate {
                Gate::H => cells.iter().for_each(|&q| p.conj_h(q)),
                Gate::X => cells.iter().for_each(|&q| p.conj_x(q)),
                Gate::Z(t) => {
                    let k = sign * quarter_turns(t)?;
                    cells.iter().for_each(|&q| p.conj_z_rotation(&[q], k));
                }
            }
        }
        GlobalPulse::Coupling { pairs, angle } => {
            let k = sign * quarter_turns(angle)?;
            for (a, b) in bonds(layout, pairs) {
                p.conj_z_rotation(&[a, b], k);
            }
        }
        GlobalPulse::ResetC => return Err(SimError::NonUnitary),
        GlobalPulse::SiteAddressed { .. } => return Err(SimError::SiteAddressed),
    }
    Ok(())
}

/// Conjugate through a pulse sequence given in time order.
pub fn conjugate_all(p: &mut PauliString, pulses: &[GlobalPulse], layout: &ChainLayout, dir: Direction) -> Result<(), SimError> {
    match dir {
        Direction::Forward => pulses.iter().try_for_each(|g| conjugate(p, g, layout, dir)),
        Direction::Backward => pulses.iter().rev().try_for_each(|g| conjugate(p, g, layout, dir)),
    }
}

/// A Clifford step of a lowered schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum CliffordOp {
    Pulse(GlobalPulse),
    /// Run of coupling and X pulses: `F · Π exp(i·k·π/4·Z_a Z_b)` with F the net X flips.
    Window { bonds: Vec<(usize, usize, i32)>, flips: Vec<Species> },
    Reset,
}

/// Lowered op plus the range of source pulses it replaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Lowered {
    pub op: CliffordOp,
    pub source: Range<usize>,
}

/// Merge each maximal run of coupling/X pulses that starts with a coupling into
/// its net Clifford. Refocused half-windows are not Clifford on their own.
pub fn lower(pulses: &[GlobalPulse], layout: &ChainLayout) -> Result<Vec<Lowered>, SimError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < pulses.len() {
        match pulses[i] {
            GlobalPulse::Coupling { .. } => {
                let lo = i;
                let mut flipped = [false; 3];
                let mut angle = vec![0.0f64; layout.len().saturating_sub(1)];
                while i < pulses.len() {
                    match pulses[i] {
                        GlobalPulse::Coupling { pairs, angle: a } => {
                            for (p, q) in bonds(layout, pairs) {
                                let f = flipped[layout.species(p).index()] ^ flipped[layout.species(q).index()];
                                angle[p] += if f { -a } else { a };
                            }
                        }
                        GlobalPulse::SpeciesUnitary { species, gate: Gate::X } => flipped[species.index()] ^= true,
                        _ => break,
                    }
                    i += 1;
                }
                let mut bs = Vec::new();
                for (p, &a) in angle.iter().enumerate() {
                    let k = quarter_turns(a)?.rem_euclid(4);
                    if k != 0 {
                        bs.push((p, p + 1, k));
                    }
                }
                let flips = Species::ALL.into_iter().filter(|s| flipped[s.index()]).collect();
                out.push(Lowered { op: CliffordOp::Window { bonds: bs, flips }, source: lo..i });
            }
            GlobalPulse::ResetC => {
                out.push(Lowered { op: CliffordOp::Reset, source: i..i + 1 });
                i += 1;
            }
            GlobalPulse::SiteAddressed { .. } => return Err(SimError::SiteAddressed),
            p => {
                if let GlobalPulse::SpeciesUnitary { gate: Gate::Z(t), .. } = p {
                    quarter_turns(t)?;
                }
                out.push(Lowered { op: CliffordOp::Pulse(p), source: i..i + 1 });
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Conjugate through one lowered op; Reset is rejected.
pub fn conjugate_op(p: &mut PauliString, op: &CliffordOp, layout: &ChainLayout, dir: Direction) -> Result<(), SimError> {
    match op {
        CliffordOp::Pulse(g) => conjugate(p, g, layout, dir),
        CliffordOp::Reset => Err(SimError::NonUnitary),
        CliffordOp::Window { bonds, flips } => {
            let flip = |p: &mut PauliString| {
                for &s in flips {
                    layout.cells_of(s).into_iter().for_each(|q| p.conj_x(q));
                }
            };
            let diag = |p: &mut PauliString, sign: i32| {
                for &(a, b, k) in bonds {
                    p.conj_z_rotation(&[a, b], sign * k);
                }
            };
            match dir {
                Direction::Forward => {
                    diag(p, 1);
                    flip(p);
                }
                Direction::Backward => {
                    flip(p);
                    diag(p, -1);
                }
            }
            Ok(())
        }
    }
}

/// Conjugate through reset-free lowered ops given in time order.
pub fn conjugate_ops(p: &mut PauliString, ops: &[Lowered], layout: &ChainLayout, dir: Direction) -> Result<(), SimError> {
    match dir {
        Direction::Forward => ops.iter().try_for_each(|o| conjugate_op(p, &o.op, layout, dir)),
        Direction::Backward => ops.iter().rev().try_for_each(|o| conjugate_op(p, &o.op, layout, dir)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densesim::{apply_schedule, StateVector};
    use crate::layout::Species;
    use crate::pulse::{Pair, PulseSchedule};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn arb_clifford_pulse() -> impl Strategy<Value = GlobalPulse> {
        let sp = prop_oneof![Just(Species::A), Just(Species::B), Just(Species::C)];
        let k = -3i32..=3;
        prop_oneof![
            (sp.clone(), prop_oneof![Just(Gate::H), Just(Gate::X)]).prop_map(|(s, g)| GlobalPulse::unitary(s, g)),
            (sp, k.clone()).prop_map(|(s, k)| GlobalPulse::unitary(s, Gate::Z(k as f64 * FRAC_PI_4))),
            (proptest::sample::subsequence(Pair::ALL.to_vec(), 1..4), k)
                .prop_map(|(ps, k)| GlobalPulse::coupling(&ps, k as f64 * FRAC_PI_4)),
        ]
    }

    proptest! {
        // U P U† computed symbolically matches the dense sandwich on a random state.
        #[test]
        fn matches_dense(pulses in proptest::collection::vec(arb_clifford_pulse(), 1..6), seed in 0u64..500, q in 0usize..5, which in 1u8..4) {
            let layout = ChainLayout::from_pattern("ACBBCA").unwrap();
            let n = layout.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = StateVector::random(n, &mut rng);
            let inv = PulseSchedule::from_pulses("t", 0, crate::compiler::invert(&pulses));
            let pw = match which { 1 => crate::pauli::Pauli1::X, 2 => crate::pauli::Pauli1::Y, _ => crate::pauli::Pauli1::Z };
            let p0 = PauliString::single(n, q, pw);
            let mut fwd = p0.clone();
            conjugate_all(&mut fwd, &pulses, &layout, Direction::Forward).unwrap();
            // <ψ| U P U† |ψ> = <U†ψ| P |U†ψ>
            let back = apply_schedule(&psi, &inv, &layout).unwrap();
            let lhs = psi.expectation(&fwd);
            let rhs = back.expectation(&p0);
            prop_assert!((lhs - rhs).norm() < 1e-9);
            let mut bwd = fwd;
            conjugate_all(&mut bwd, &pulses, &layout, Direction::Backward).unwrap();
            prop_assert_eq!(bwd, p0);
        }

        // Lowered half-window sandwiches agree with the dense sandwich.
        #[test]
        fn lowered_matches_dense(keep in proptest::sample::subsequence(Pair::ALL.to_vec(), 0..3), k in -3i32..=3, seed in 0u64..200, q in 0usize..6, which in 1u8..4) {
            let layout = ChainLayout::from_pattern("ACBBCA").unwrap();
            let n = layout.len();
            let Ok(mut pulses) = crate::compiler::decoupled_window(crate::pulse::PairSet::from_pairs(&keep), k as f64 * FRAC_PI_4) else {
                return Ok(());
            };
            pulses.insert(0, GlobalPulse::unitary(Species::C, Gate::H));
            let ops = lower(&pulses, &layout).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = StateVector::random(n, &mut rng);
            let pw = match which { 1 => crate::pauli::Pauli1::X, 2 => crate::pauli::Pauli1::Y, _ => crate::pauli::Pauli1::Z };
            let p0 = PauliString::single(n, q, pw);
            let mut fwd = p0.clone();
            conjugate_ops(&mut fwd, &ops, &layout, Direction::Forward).unwrap();
            let inv = PulseSchedule::from_pulses("t", 0, crate::compiler::invert(&pulses));
            let back = apply_schedule(&psi, &inv, &layout).unwrap();
            prop_assert!((psi.expectation(&fwd) - back.expectation(&p0)).norm() < 1e-9);
            let mut bwd = fwd;
            conjugate_ops(&mut bwd, &ops, &layout, Direction::Backward).unwrap();
            prop_assert_eq!(bwd, p0);
        }
    }
}
