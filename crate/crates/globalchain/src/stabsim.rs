//! Stabilizer tableau and Pauli-frame backend for noisy Clifford schedules.
//!
//! A noiseless tableau run fixes the reference readouts. Noise is then tracked
//! as a Pauli frame: per trajectory by direct simulation, or in bulk through a
//! [`FaultTable`] that records which observables each fault location flips.
//!
//! Syndrome readout is ideal Z inspection of the designated cell; the physical
//! readout mechanism under global control is left open.

use std::ops::{BitXor, BitXorAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::Serialize;

use crate::clifford::{lower, CliffordOp};
use crate::compiler::{code_placement, EcPlan, Readout};
use crate::error::SimError;
use crate::exec::Executor;
use crate::layout::{ChainLayout, Species};
use crate::pauli::{quarter_turns, Pauli1, PauliString};
use crate::pulse::{Gate, GlobalPulse, PulseSchedule};
use crate::qec::{decode, logical_flips, CodeSpec, Syndrome};

/// CHP tableau: rows `0..n` destabilizers, `n..2n` stabilizers, stored by qubit column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    w: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<u64>,
}

impl Tableau {
    /// `|0…0⟩`.
    pub fn new(n: usize) -> Self {
        let w = (2 * n).div_ceil(64).max(1);
        let mut t = Tableau { n, w, x: vec![0; n * w], z: vec![0; n * w], r: vec![0; w] };
        for q in 0..n {
            t.x[q * w + q / 64] |= 1 << (q % 64);
            let s = n + q;
            t.z[q * w + s / 64] |= 1 << (s % 64);
        }
        t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn cols(&mut self, q: usize) -> (&mut [u64], &mut [u64], &mut [u64]) {
        let w = self.w;
        (&mut self.x[q * w..(q + 1) * w], &mut self.z[q * w..(q + 1) * w], &mut self.r)
    }

    pub fn h(&mut self, q: usize) {
        let (x, z, r) = self.cols(q);
        for k in 0..x.len() {
            r[k] ^= x[k] & z[k];
            std::mem::swap(&mut x[k], &mut z[k]);
        }
    }

    pub fn s(&mut self, q: usize) {
        let (x, z, r) = self.cols(q);
        for k in 0..x.len() {
            r[k] ^= x[k] & z[k];
            z[k] ^= x[k];
        }
    }

    pub fn sdg(&mut self, q: usize) {
        let (x, z, r) = self.cols(q);
        for k in 0..x.len() {
            r[k] ^= x[k] & !z[k];
            z[k] ^= x[k];
        }
    }

    pub fn pauli_x(&mut self, q: usize) {
        let (_, z, r) = self.cols(q);
        r.iter_mut().zip(z.iter()).for_each(|(r, z)| *r ^= z);
    }

    pub fn pauli_z(&mut self, q: usize) {
        let (x, _, r) = self.cols(q);
        r.iter_mut().zip(x.iter()).for_each(|(r, x)| *r ^= x);
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        let w = self.w;
        for k in 0..w {
            let (xa, xb) = (self.x[a * w + k], self.x[b * w + k]);
            let (za, zb) = (self.z[a * w + k], self.z[b * w + k]);
            self.r[k] ^= xa & xb & (za ^ zb);
            self.z[a * w + k] ^= xb;
            self.z[b * w + k] ^= xa;
        }
    }

    /// `exp(i·k·π/4·Z)` up to phase.
    pub fn z_quarter(&mut self, q: usize, k: i32) {
        match k.rem_euclid(4) {
            1 => self.sdg(q),
            2 => self.pauli_z(q),
            3 => self.s(q),
            _ => {}
        }
    }

    /// `exp(i·k·π/4·Z_a Z_b)` up to phase.
    pub fn zz_quarter(&mut self, a: usize, b: usize, k: i32) {
        match k.rem_euclid(4) {
            1 => {
                self.cz(a, b);
                self.sdg(a);
                self.sdg(b);
            }
            2 => {
                self.pauli_z(a);
                self.pauli_z(b);
            }
            3 => {
                self.cz(a, b);
                self.s(a);
                self.s(b);
            }
            _ => {}
        }
    }

    /// Bitset over rows that anticommute with `p`.
    fn anti_rows(&self, p: &PauliString) -> Vec<u64> {
        let w = self.w;
        let mut acc = vec![0u64; w];
        for q in p.support() {
            if p.z_bit(q) {
                acc.iter_mut().zip(&self.x[q * w..(q + 1) * w]).for_each(|(a, b)| *a ^= b);
            }
            if p.x_bit(q) {
                acc.iter_mut().zip(&self.z[q * w..(q + 1) * w]).for_each(|(a, b)| *a ^= b);
            }
        }
        acc
    }

    fn bit(v: &[u64], i: usize) -> bool {
        v[i / 64] >> (i % 64) & 1 == 1
    }

    /// Row `i` with its sign.
    pub fn row(&self, i: usize) -> PauliString {
        let w = self.w;
        let mut p = PauliString::identity(self.n);
        for q in 0..self.n {
            let (x, z) = (Self::bit(&self.x[q * w..], i), Self::bit(&self.z[q * w..], i));
            p.set(q, Pauli1::from_bits(x, z));
        }
        if Self::bit(&self.r, i) {
            p.negate();
        }
        p
    }

    fn set_row(&mut self, i: usize, p: &PauliString) {
        let w = self.w;
        let (k, m) = (i / 64, 1u64 << (i % 64));
        for q in 0..self.n {
            let (x, z) = p.get(q).bits();
            self.x[q * w + k] = (self.x[q * w + k] & !m) | if x { m } else { 0 };
            self.z[q * w + k] = (self.z[q * w + k] & !m) | if z { m } else { 0 };
        }
        self.r[k] = (self.r[k] & !m) | if p.phase() & 2 != 0 { m } else { 0 };
    }

    pub fn stabilizers(&self) -> Vec<PauliString> {
        (self.n..2 * self.n).map(|i| self.row(i)).collect()
    }

    /// Sign-resolved product of the stabilizers selected by destabilizer anticommutation.
    fn deterministic_sign(&self, p: &PauliString, anti: &[u64]) -> bool {
        let mut acc = PauliString::identity(self.n);
        for i in (0..self.n).filter(|&i| Self::bit(anti, i)) {
            acc = self.row(self.n + i).mul(&acc);
        }
        debug_assert!(acc.eq_unsigned(p));
        (acc.phase() + 4 - p.phase()) % 4 == 2
    }

    /// `Some(true)` if the state is a −1 eigenstate of `p`, `None` if the outcome is random.
    pub fn expectation(&self, p: &PauliString) -> Option<bool> {
        let anti = self.anti_rows(p);
        if (self.n..2 * self.n).any(|i| Self::bit(&anti, i)) {
            return None;
        }
        Some(self.deterministic_sign(p, &anti))
    }

    /// Projective measurement of a Hermitian Pauli; returns (outcome is −1, was deterministic).
    pub fn measure<R: Rng>(&mut self, p: &PauliString, rng: &mut R) -> (bool, bool) {
        let anti = self.anti_rows(p);
        let Some(s) = (self.n..2 * self.n).find(|&i| Self::bit(&anti, i)) else {
            return (self.deterministic_sign(p, &anti), true);
        };
        let rs = self.row(s);
        for i in (0..2 * self.n).filter(|&i| i != s && Self::bit(&anti, i)) {
            let mut prod = rs.mul(&self.row(i));
            if prod.phase() % 2 == 1 {
                // destabilizer rows carry no meaningful sign
                prod = prod.with_phase(0);
            }
            self.set_row(i, &prod);
        }
        self.set_row(s - self.n, &rs);
        let outcome: bool = rng.gen();
        let mut np = p.clone();
        if outcome {
            np.negate();
        }
        self.set_row(s, &np);
        (outcome, false)
    }

    pub fn reset<R: Rng>(&mut self, q: usize, rng: &mut R) {
        let (one, _) = self.measure(&PauliString::single(self.n, q, Pauli1::Z), rng);
        if one {
            self.pauli_x(q);
        }
    }

    /// Multiply the state by a Pauli (signs only change).
    pub fn apply_pauli(&mut self, p: &PauliString) {
        let anti = self.anti_rows(p);
        self.r.iter_mut().zip(&anti).for_each(|(r, a)| *r ^= a);
    }

    pub fn apply_pulse(&mut self, g: &GlobalPulse, layout: &ChainLayout) -> Result<(), SimError> {
        match *g {
            GlobalPulse::SpeciesUnitary { species, gate } => {
                let k = match gate {
                    Gate::Z(t) => quarter_turns(t)?,
                    _ => 0,
                };
                for q in layout.cells_of(species) {
                    match gate {
                        Gate::H => self.h(q),
                        Gate::X => self.pauli_x(q),
                        Gate::Z(_) => self.z_quarter(q, k),
                    }
                }
                Ok(())
            }
            GlobalPulse::Coupling { pairs, angle } => {
                let k = quarter_turns(angle)?;
                for (a, b) in crate::clifford::bonds(layout, pairs) {
                    self.zz_quarter(a, b, k);
                }
                Ok(())
            }
            GlobalPulse::ResetC => {
                // deterministic stream: a reset has no observable randomness after the X fix
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                layout.cells_of(Species::C).into_iter().for_each(|q| self.reset(q, &mut rng));
                Ok(())
            }
            GlobalPulse::SiteAddressed { .. } => Err(SimError::SiteAddressed),
        }
    }

    pub fn apply_op<R: Rng>(&mut self, op: &CliffordOp, layout: &ChainLayout, rng: &mut R) -> Result<(), SimError> {
        match op {
            CliffordOp::Pulse(g) => self.apply_pulse(g, layout),
            CliffordOp::Reset => {
                layout.cells_of(Species::C).into_iter().for_each(|q| self.reset(q, rng));
                Ok(())
            }
            CliffordOp::Window { bonds, flips } => {
                for &(a, b, k) in bonds {
                    self.zz_quarter(a, b, k);
                }
                for &s in flips {
                    layout.cells_of(s).into_iter().for_each(|q| self.pauli_x(q));
                }
                Ok(())
            }
        }
    }
}

/// Bit lanes a frame can be packed into.
pub(crate) trait Lane: Copy + Default + PartialEq + BitXor<Output = Self> + BitXorAssign {}
impl Lane for bool {}
impl Lane for u64 {}
impl Lane for u128 {}

/// Action of a lowered op on Pauli-frame bits. Every map is an involution,
/// so the same rule propagates frames forward and observables backward.
#[derive(Debug, Clone, PartialEq)]
enum FrameOp {
    Swap(Vec<usize>),
    Phase(Vec<usize>),
    Bonds(Vec<(usize, usize)>),
    Clear(Vec<usize>),
    Nop,
}

impl FrameOp {
    fn of(op: &CliffordOp, layout: &ChainLayout) -> Result<FrameOp, SimError> {
        Ok(match op {
            CliffordOp::Pulse(GlobalPulse::SpeciesUnitary { species, gate: Gate::H }) => FrameOp::Swap(layout.cells_of(*species)),
            CliffordOp::Pulse(GlobalPulse::SpeciesUnitary { species, gate: Gate::Z(t) }) => {
                if quarter_turns(*t)?.rem_euclid(2) == 1 {
                    FrameOp::Phase(layout.cells_of(*species))
                } else {
                    FrameOp::Nop
                }
            }
            CliffordOp::Pulse(GlobalPulse::SpeciesUnitary { gate: Gate::X, .. }) => FrameOp::Nop,
            CliffordOp::Pulse(GlobalPulse::Coupling { pairs, angle }) => {
                if quarter_turns(*angle)?.rem_euclid(2) == 1 {
                    FrameOp::Bonds(crate::clifford::bonds(layout, *pairs))
                } else {
                    FrameOp::Nop
                }
            }
            CliffordOp::Pulse(GlobalPulse::ResetC) | CliffordOp::Reset => FrameOp::Clear(layout.cells_of(Species::C)),
            CliffordOp::Pulse(GlobalPulse::SiteAddressed { .. }) => return Err(SimError::SiteAddressed),
            CliffordOp::Window { bonds, .. } => {
                FrameOp::Bonds(bonds.iter().filter(|b| b.2.rem_euclid(2) == 1).map(|b| (b.0, b.1)).collect())
            }
        })
    }

    fn apply<L: Lane>(&self, x: &mut [L], z: &mut [L]) {
        match self {
            FrameOp::Swap(qs) => qs.iter().for_each(|&q| std::mem::swap(&mut x[q], &mut z[q])),
            FrameOp::Phase(qs) => qs.iter().for_each(|&q| z[q] ^= x[q]),
            FrameOp::Bonds(bs) => {
                for &(a, b) in bs {
                    let t = x[a] ^ x[b];
                    z[a] ^= t;
                    z[b] ^= t;
                }
            }
            FrameOp::Clear(qs) => qs.iter().for_each(|&q| {
                x[q] = L::default();
                z[q] = L::default();
            }),
            FrameOp::Nop => {}
        }
    }
}

/// Independent Pauli noise: each touched qubit suffers X, Y or Z with probability eps/3 each per pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    pub eps: f64,
    pub eps_idle: f64,
    pub rng_seed: u64,
}

impl NoiseModel {
    pub fn new(eps: f64, rng_seed: u64) -> Result<Self, SimError> {
        Self::with_idle(eps, 0.0, rng_seed)
    }

    pub fn with_idle(eps: f64, eps_idle: f64, rng_seed: u64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&eps) || !(0.0..=1.0).contains(&eps_idle) {
            return Err(SimError::Input(format!("probabilities must lie in [0, 1] (eps {}, eps_idle {})", eps, eps_idle)));
        }
        Ok(NoiseModel { eps, eps_idle, rng_seed })
    }

    pub fn noiseless() -> Self {
        NoiseModel { eps: 0.0, eps_idle: 0.0, rng_seed: 0 }
    }
}

const PAULIS: [Pauli1; 3] = [Pauli1::X, Pauli1::Y, Pauli1::Z];

/// Faults after one pulse, touched cells first in cell order, then idle cells.
pub fn sample_noise<R: Rng>(noise: &NoiseModel, pulse: &GlobalPulse, layout: &ChainLayout, rng: &mut R) -> Vec<(usize, Pauli1)> {
    let touched = pulse.touched(layout);
    let mut out = Vec::new();
    let mut draw = |q: usize, p: f64, rng: &mut R| {
        if p > 0.0 && rng.gen::<f64>() < p {
            out.push((q, PAULIS[rng.gen_range(0..3)]));
        }
    };
    for &q in &touched {
        draw(q, noise.eps, rng);
    }
    if noise.eps_idle > 0.0 {
        let mut hit = vec![false; layout.len()];
        touched.iter().for_each(|&q| hit[q] = true);
        (0..layout.len()).filter(|&q| !hit[q]).for_each(|q| draw(q, noise.eps_idle, rng));
    }
    out
}

/// Logical outcome of one encoded qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LogicalFailure {
    /// Z̄ readout flipped (X-type logical error).
    pub x_flip: bool,
    /// X̄ readout flipped (Z-type logical error).
    pub z_flip: bool,
}

impl LogicalFailure {
    pub fn any(&self) -> bool {
        self.x_flip || self.z_flip
    }
}

/// Ideal final decode of the frame on each logical's cells.
pub fn logical_failure(frame: &PauliString, code: &CodeSpec, logicals: &[Vec<usize>]) -> Vec<LogicalFailure> {
    logicals
        .iter()
        .map(|cells| {
            let mut e = PauliString::identity(code.n);
            for (i, &c) in cells.iter().enumerate() {
                e.set(i, frame.get(c));
            }
            let c = decode(code, &code.syndrome(&e)).expect("table is total");
            let f = logical_flips(code, &c.pauli.mul(&e));
            LogicalFailure { x_flip: f.iter().any(|v| v.0), z_flip: f.iter().any(|v| v.1) }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    /// `[round][logical]` observed syndromes.
    pub syndromes: Vec<Vec<Syndrome>>,
    pub failures: Vec<LogicalFailure>,
    /// Non-identity Paulis drawn by the noise model.
    pub faults: usize,
}

#[derive(Debug, Clone)]
struct Step {
    op: CliffordOp,
    frame: FrameOp,
    /// Source pulse range; noise is applied after the whole step.
    source: std::ops::Range<usize>,
}

#[derive(Debug, Clone)]
struct Round {
    /// `[logical][generator]`.
    readouts: Vec<Vec<Readout>>,
    decode_at: usize,
}

/// Lowered schedules plus the classical plan and the noiseless reference.
#[derive(Debug, Clone)]
pub struct Circuit {
    layout: ChainLayout,
    code: CodeSpec,
    pulses: Vec<GlobalPulse>,
    steps: Vec<Step>,
    rounds: Vec<Round>,
    logicals: Vec<Vec<usize>>,
    /// Reference Z value of each readout, `[round][logical][generator]`.
    reference: Vec<Vec<Vec<bool>>>,
    /// Every stabilizer and Z̄ of every logical is +1 at the end of the reference run.
    reference_in_code: bool,
}

impl Circuit {
    pub fn new(schedules: &[PulseSchedule], layout: &ChainLayout, code: &CodeSpec) -> Result<Circuit, SimError> {
        let logicals = code_placement(code, layout).map_err(|e| SimError::Input(e.to_string()))?;
        let mut pulses = Vec::new();
        let mut rounds = Vec::new();
        let mut cuts = vec![0];
        for s in schedules {
            if let Some(plan) = EcPlan::from_schedule(s) {
                let plan = plan.shifted(pulses.len());
                if let Some(d) = plan.decode_at {
                    let mut per: Vec<Vec<Readout>> = vec![Vec::new(); logicals.len()];
                    for r in &plan.readouts {
                        per.get_mut(r.logical).ok_or_else(|| SimError::Input(format!("readout for unknown logical {}", r.logical)))?.push(*r);
                    }
                    for v in &mut per {
                        v.sort_by_key(|r| r.generator);
                        if !v.is_empty() && v.len() != code.stabilizers.len() {
                            return Err(SimError::Input("readouts do not cover every generator".into()));
                        }
                    }
                    cuts.extend(plan.readouts.iter().map(|r| r.after));
                    cuts.push(d);
                    rounds.push(Round { readouts: per, decode_at: d });
                }
            }
            pulses.extend_from_slice(&s.pulses);
        }
        cuts.push(pulses.len());
        cuts.sort_unstable();
        cuts.dedup();
        let mut steps = Vec::new();
        for w in cuts.windows(2) {
            for l in lower(&pulses[w[0]..w[1]], layout)? {
                let frame = FrameOp::of(&l.op, layout)?;
                steps.push(Step { op: l.op, frame, source: l.source.start + w[0]..l.source.end + w[0] });
            }
        }
        let mut c = Circuit {
            layout: layout.clone(),
            code: code.clone(),
            pulses,
            steps,
            rounds,
            logicals,
            reference: Vec::new(),
            reference_in_code: false,
        };
        c.run_reference()?;
        Ok(c)
    }

    pub fn pulses(&self) -> usize {
        self.pulses.len()
    }

    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn logicals(&self) -> &[Vec<usize>] {
        &self.logicals
    }

    pub fn reference_in_code(&self) -> bool {
        self.reference_in_code
    }

    /// Reference readouts, `[round][logical]` as syndromes.
    pub fn reference_syndromes(&self) -> Vec<Vec<Syndrome>> {
        self.reference.iter().map(|r| r.iter().map(|b| Syndrome::from_bits(b)).collect()).collect()
    }

    /// A code-level Pauli placed on the cells of logical `l`.
    pub fn on_logical(&self, p: &PauliString, l: usize) -> PauliString {
        self.embed(p, &self.logicals[l])
    }

    /// Apply the whole circuit to a tableau, ignoring the classical plan.
    pub fn evolve<R: Rng>(&self, t: &mut Tableau, rng: &mut R) -> Result<(), SimError> {
        self.steps.iter().try_for_each(|s| t.apply_op(&s.op, &self.layout, rng))
    }

    fn embed(&self, p: &PauliString, cells: &[usize]) -> PauliString {
        let mut out = PauliString::identity(self.layout.len());
        for (i, &c) in cells.iter().enumerate() {
            out.set(c, p.get(i));
        }
        if p.phase() != 0 {
            out = out.with_phase(p.phase());
        }
        out
    }

    /// Every logical in `|0̄⟩`, all other cells in `|0⟩`.
    pub fn encoded_zero(&self) -> Tableau {
        let mut t = Tableau::new(self.layout.len());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for cells in &self.logicals {
            let bits: Vec<bool> = self.code.stabilizers.iter().map(|g| t.measure(&self.embed(g, cells), &mut rng).0).collect();
            let c = decode(&self.code, &Syndrome::from_bits(&bits)).expect("table is total");
            t.apply_pauli(&self.embed(&c.pauli, cells));
            for (zl, xl) in self.code.logical_z.iter().zip(&self.code.logical_x) {
                if t.expectation(&self.embed(zl, cells)) != Some(false) {
                    t.apply_pauli(&self.embed(xl, cells));
                }
            }
        }
        t
    }

    fn run_reference(&mut self) -> Result<(), SimError> {
        let mut t = self.encoded_zero();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = self.layout.len();
        let mut reference: Vec<Vec<Vec<bool>>> =
            self.rounds.iter().map(|r| r.readouts.iter().map(|v| vec![false; v.len()]).collect()).collect();
        let mut read = |t: &Tableau, b: usize| -> Result<(), SimError> {
            for (ri, r) in self.rounds.iter().enumerate() {
                for (li, v) in r.readouts.iter().enumerate() {
                    for (gi, ro) in v.iter().enumerate().filter(|(_, ro)| ro.after == b) {
                        reference[ri][li][gi] = t
                            .expectation(&PauliString::single(n, ro.cell, Pauli1::Z))
                            .ok_or(SimError::NondeterministicReadout { cell: ro.cell, after: ro.after })?;
                    }
                }
            }
            Ok(())
        };
        read(&t, 0)?;
        for s in &self.steps {
            t.apply_op(&s.op, &self.layout, &mut rng)?;
            read(&t, s.source.end)?;
        }
        self.reference = reference;
        self.reference_in_code = self.logicals.iter().all(|cells| {
            self.code.stabilizers.iter().chain(&self.code.logical_z).all(|g| t.expectation(&self.embed(g, cells)) == Some(false))
        });
        Ok(())
    }

    /// One noisy trajectory; `trial` selects an independent stream of `noise.rng_seed`.
    pub fn trajectory(&self, noise: &NoiseModel, trial: u64) -> TrajectoryRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
        rng.set_stream(trial);
        self.run_frame(Some((noise, &mut rng)), &[])
    }

    /// Noiseless trajectory with Paulis injected after the given pulse counts.
    pub fn inject(&self, injections: &[(usize, PauliString)]) -> TrajectoryRecord {
        self.run_frame(None, injections)
    }

    fn run_frame(&self, mut noise: Option<(&NoiseModel, &mut ChaCha8Rng)>, injections: &[(usize, PauliString)]) -> TrajectoryRecord {
        let n = self.layout.len();
        let mut x = vec![false; n];
        let mut z = vec![false; n];
        let mut faults = 0;
        let mut syndromes: Vec<Vec<Syndrome>> = vec![Vec::new(); self.rounds.len()];
        let mut latched: Vec<Vec<Vec<bool>>> =
            self.rounds.iter().map(|r| r.readouts.iter().map(|v| vec![false; v.len()]).collect()).collect();
        let mut at = |b: usize, x: &mut [bool], z: &mut [bool]| {
            for (_, p) in injections.iter().filter(|i| i.0 == b) {
                for q in p.support() {
                    x[q] ^= p.x_bit(q);
                    z[q] ^= p.z_bit(q);
                }
            }
            for (ri, r) in self.rounds.iter().enumerate() {
                for (li, v) in r.readouts.iter().enumerate() {
                    for (gi, ro) in v.iter().enumerate().filter(|(_, ro)| ro.after == b) {
                        latched[ri][li][gi] = self.reference[ri][li][gi] ^ x[ro.cell];
                    }
                }
            }
            for (ri, r) in self.rounds.iter().enumerate().filter(|(_, r)| r.decode_at == b) {
                syndromes[ri] = r
                    .readouts
                    .iter()
                    .enumerate()
                    .map(|(li, v)| {
                        let s = Syndrome::from_bits(&latched[ri][li]);
                        if !v.is_empty() {
                            let c = decode(&self.code, &s).expect("table is total");
                            for (i, &cell) in self.logicals[li].iter().enumerate() {
                                x[cell] ^= c.pauli.x_bit(i);
                                z[cell] ^= c.pauli.z_bit(i);
                            }
                        }
                        s
                    })
                    .collect();
            }
        };
        at(0, &mut x, &mut z);
        for s in &self.steps {
            s.frame.apply(&mut x, &mut z);
            if let Some((nm, rng)) = noise.as_mut() {
                for g in &self.pulses[s.source.clone()] {
                    for (q, p) in sample_noise(nm, g, &self.layout, *rng) {
                        let (px, pz) = p.bits();
                        x[q] ^= px;
                        z[q] ^= pz;
                        faults += 1;
                    }
                }
            }
            at(s.source.end, &mut x, &mut z);
        }
        let mut frame = PauliString::identity(n);
        for q in 0..n {
            frame.set(q, Pauli1::from_bits(x[q], z[q]));
        }
        TrajectoryRecord { syndromes, failures: logical_failure(&frame, &self.code, &self.logicals), faults }
    }
}

/// Convenience wrapper: build the circuit and run one trajectory (stream 0).
pub fn run_trajectory(schedules: &[PulseSchedule], layout: &ChainLayout, code: &CodeSpec, noise: &NoiseModel) -> Result<TrajectoryRecord, SimError> {
    Ok(Circuit::new(schedules, layout, code)?.trajectory(noise, 0))
}

/// A fault location: noise after the first `after` pulses on `cell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub after: usize,
    pub cell: usize,
}

/// Observable flips caused by X and by Z at one location (Y flips both).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Effect {
    x: u128,
    z: u128,
}

impl Effect {
    fn of(self, p: Pauli1) -> u128 {
        match p {
            Pauli1::X => self.x,
            Pauli1::Y => self.x ^ self.z,
            Pauli1::Z => self.z,
            Pauli1::I => 0,
        }
    }
}

#[derive(Debug, Clone)]
struct RoundTable {
    bits: Vec<u32>,
    /// Observable flips of the decoder's correction, indexed by syndrome.
    correction: Vec<u128>,
}

/// Fault-location table for one tracked logical, tested in the Z basis.
///
/// Observables are the tracked logical's readouts, its final stabilizers and Z̄.
/// Each is propagated backward once; a trial is then the XOR of the sampled
/// faults' effects followed by the classical decoder.
#[derive(Debug, Clone)]
pub struct FaultTable {
    active: Vec<Effect>,
    active_at: Vec<Location>,
    idle: Vec<Effect>,
    rounds: Vec<RoundTable>,
    final_bits: Vec<u32>,
    zbar: u32,
    final_flip: Vec<bool>,
    reference: u128,
    total_active: usize,
}

const CHUNK: u64 = 4096;

impl FaultTable {
    pub fn new(circuit: &Circuit, tracked: usize) -> Result<FaultTable, SimError> {
        let code = &circuit.code;
        if code.k != 1 {
            return Err(SimError::Input("fault tables track single-logical codes".into()));
        }
        let cells = circuit.logicals.get(tracked).ok_or_else(|| SimError::Input(format!("no logical {}", tracked)))?.clone();
        if !circuit.reference_in_code {
            return Err(SimError::Input("noiseless reference leaves the code space".into()));
        }
        let g = code.stabilizers.len();
        let r = circuit.rounds.len();
        let n_obs = r * g + g + 1;
        if n_obs > 128 {
            return Err(SimError::Input(format!("{} observables exceed the 128-bit table ({} rounds)", n_obs, r)));
        }
        let n = circuit.layout.len();
        let mut xl = vec![0u128; n];
        let mut zl = vec![0u128; n];
        let mut reference = 0u128;
        for (ri, round) in circuit.rounds.iter().enumerate() {
            for (gi, &b) in circuit.reference[ri].get(tracked).map(|v| v.as_slice()).unwrap_or(&[]).iter().enumerate() {
                if b {
                    reference |= 1 << (ri * g + gi);
                }
            }
            if !round.readouts.get(tracked).is_some_and(|v| v.len() == g) && g > 0 {
                return Err(SimError::Input(format!("round {} does not read logical {}", ri, tracked)));
            }
        }
        let final_bits: Vec<u32> = (0..g).map(|i| (r * g + i) as u32).collect();
        let zbar = (r * g + g) as u32;
        let final_flip = (0..1usize << g)
            .map(|s| {
                let c = decode(code, &syndrome_of(s, g)).expect("table is total");
                !code.logical_z[0].commutes(&c.pauli)
            })
            .collect();
        let end = circuit.pulses.len();
        let mut rounds: Vec<RoundTable> = (0..r).map(|ri| RoundTable { bits: (0..g).map(|i| (ri * g + i) as u32).collect(), correction: Vec::new() }).collect();

        let add = |xl: &mut [u128], zl: &mut [u128], p: &PauliString, bit: u32| {
            for (i, &c) in cells.iter().enumerate() {
                if p.x_bit(i) {
                    xl[c] |= 1 << bit;
                }
                if p.z_bit(i) {
                    zl[c] |= 1 << bit;
                }
            }
        };
        let effect_of = |xl: &[u128], zl: &[u128], p: &PauliString| -> u128 {
            let mut m = 0;
            for (i, &c) in cells.iter().enumerate() {
                if p.x_bit(i) {
                    m ^= zl[c];
                }
                if p.z_bit(i) {
                    m ^= xl[c];
                }
            }
            m
        };
        let mut events = |b: usize, xl: &mut Vec<u128>, zl: &mut Vec<u128>| {
            if b == end {
                for (i, s) in code.stabilizers.iter().enumerate() {
                    add(xl, zl, s, final_bits[i]);
                }
                add(xl, zl, &code.logical_z[0], zbar);
            }
            for (ri, round) in circuit.rounds.iter().enumerate().filter(|(_, x)| x.decode_at == b) {
                rounds[ri].correction = (0..1usize << g)
                    .map(|s| {
                        let c = decode(code, &syndrome_of(s, g)).expect("table is total");
                        effect_of(xl, zl, &c.pauli)
                    })
                    .collect();
                let _ = round;
            }
            for (ri, round) in circuit.rounds.iter().enumerate() {
                for (gi, ro) in round.readouts.get(tracked).into_iter().flatten().enumerate().filter(|(_, ro)| ro.after == b) {
                    zl[ro.cell] ^= 1 << (ri * g + gi);
                }
            }
        };
        events(end, &mut xl, &mut zl);
        let (mut active, mut active_at, mut idle) = (Vec::new(), Vec::new(), Vec::new());
        let mut total_active = 0;
        let mut hit = vec![false; n];
        for s in circuit.steps.iter().rev() {
            let b = s.source.end;
            for p in &circuit.pulses[s.source.clone()] {
                let touched = p.touched(&circuit.layout);
                total_active += touched.len();
                hit.iter_mut().for_each(|h| *h = false);
                for &q in &touched {
                    hit[q] = true;
                    let e = Effect { x: zl[q], z: xl[q] };
                    if e.x != 0 || e.z != 0 {
                        active.push(e);
                        active_at.push(Location { after: b, cell: q });
                    }
                }
                for q in (0..n).filter(|&q| !hit[q]) {
                    let e = Effect { x: zl[q], z: xl[q] };
                    if e.x != 0 || e.z != 0 {
                        idle.push(e);
                    }
                }
            }
            s.frame.apply(&mut xl, &mut zl);
            events(s.source.start, &mut xl, &mut zl);
        }
        if circuit.steps.is_empty() && end != 0 {
            events(0, &mut xl, &mut zl);
        }
        Ok(FaultTable { active, active_at, idle, rounds, final_bits, zbar, final_flip, reference, total_active })
    }

    /// Fault locations on touched qubits, including those with no effect.
    pub fn total_locations(&self) -> usize {
        self.total_active
    }

    /// Locations whose faults can change the outcome.
    pub fn relevant_locations(&self) -> &[Location] {
        &self.active_at
    }

    /// Single (location, Pauli) faults that alone cause a failure.
    pub fn malignant_single_faults(&self) -> usize {
        self.active.iter().map(|e| PAULIS.iter().filter(|&&p| self.evaluate(e.of(p))).count()).sum()
    }

    /// Outcome for raw observable flips: true if the tracked Z̄ readout is wrong after decoding.
    pub fn evaluate(&self, flips: u128) -> bool {
        let mut m = flips ^ self.reference;
        let gather = |m: u128, bits: &[u32]| bits.iter().enumerate().fold(0usize, |s, (i, &b)| s | ((m >> b & 1) as usize) << i);
        for r in &self.rounds {
            m ^= r.correction[gather(m, &r.bits)];
        }
        (m >> self.zbar & 1 == 1) ^ self.final_flip[gather(m, &self.final_bits)]
    }

    /// Outcome when exactly the given relevant-location faults occur.
    pub fn evaluate_faults(&self, faults: &[(usize, Pauli1)]) -> bool {
        self.evaluate(faults.iter().fold(0, |m, &(i, p)| m ^ self.active[i].of(p)))
    }

    fn scatter<R: Rng>(locs: &[Effect], geo: Option<&Geometric>, rng: &mut R, m: &mut u128) {
        let Some(geo) = geo else { return };
        let len = locs.len() as u64;
        let mut i = 0u64;
        loop {
            i = i.saturating_add(geo.sample(rng));
            if i >= len {
                return;
            }
            *m ^= locs[i as usize].of(PAULIS[rng.gen_range(0..3)]);
            i += 1;
        }
    }

    /// Failures among `trials` noisy runs. Chunks use fixed streams of `noise.rng_seed`,
    /// so the count does not depend on the executor.
    pub fn count_failures(&self, noise: &NoiseModel, trials: u64, exec: Executor) -> u64 {
        let geo = |p: f64| if p > 0.0 { Some(Geometric::new(p).expect("probability in (0, 1]")) } else { None };
        let (ga, gi) = (geo(noise.eps), geo(noise.eps_idle));
        let chunks = trials.div_ceil(CHUNK) as usize;
        exec.map(chunks, |c| {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
            rng.set_stream(c as u64);
            let here = CHUNK.min(trials - c as u64 * CHUNK);
            let mut fails = 0u64;
            for _ in 0..here {
                let mut m = 0u128;
                Self::scatter(&self.active, ga.as_ref(), &mut rng, &mut m);
                Self::scatter(&self.idle, gi.as_ref(), &mut rng, &mut m);
                fails += self.evaluate(m) as u64;
            }
            fails
        })
        .into_iter()
        .sum()
    }
}

fn syndrome_of(s: usize, g: usize) -> Syndrome {
    Syndrome::from_bits(&(0..g).map(|i| s >> i & 1 == 1).collect::<Vec<_>>())
}
