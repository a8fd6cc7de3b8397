//! Mirror-symmetric Pauli rotations inside a C-capped A block.
//!
//! A native unit `G, S^t, E(θ), S^(n+1-t), G⁻¹` (G a uniform one-qubit Clifford on A,
//! S the mirror iterate, E the edge phase) acts as `M · exp(iθ(Q + mirror Q))`, where
//! M reverses the block and Q is the edge Z pulled back through `G, S^t`. Arbitrary
//! symmetric rotations are reduced to natives by conjugation with two-site natives.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::clifford::{conjugate, conjugate_ops, lower, Direction, Lowered};
use crate::error::CompileError;
use crate::layout::{ChainLayout, Species};
use crate::pauli::{quarter_turns, Pauli1, PauliString};
use crate::pulse::{Gate, GlobalPulse, Pair, PairSet};

use super::decouple::decoupled_window;
use super::mirror::s_step;
use super::primitives::window;

use Species::A;

/// One-qubit Clifford as forward images of X and Z: (Pauli, negative).
type Action = [(Pauli1, bool); 2];

fn word_action(word: &[Gate]) -> Action {
    let image = |p: Pauli1| {
        let mut s = PauliString::single(1, 0, p);
        for g in word {
            match *g {
                Gate::H => s.conj_h(0),
                Gate::X => s.conj_x(0),
                Gate::Z(t) => s.conj_z_rotation(&[0], quarter_turns(t).expect("Clifford word")),
            }
        }
        (s.get(0), s.sign() == Some(-1))
    };
    [image(Pauli1::X), image(Pauli1::Z)]
}

fn invert_word(word: &[Gate]) -> Vec<Gate> {
    word.iter()
        .rev()
        .map(|g| match *g {
            Gate::Z(t) => Gate::Z(-t),
            other => other,
        })
        .collect()
}

/// Shortest pulse words for the 24 one-qubit Cliffords.
#[derive(Debug, Clone)]
struct CliffordWords {
    words: Vec<Vec<Gate>>,
    index: HashMap<Action, usize>,
}

impl CliffordWords {
    fn new() -> Self {
        let gens = [Gate::H, Gate::Z(FRAC_PI_4), Gate::Z(FRAC_PI_2), Gate::Z(-FRAC_PI_4)];
        let mut words = vec![Vec::new()];
        let mut index = HashMap::from([(word_action(&[]), 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in gens {
                let mut w = words[i].clone();
                w.push(g);
                let a = word_action(&w);
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(a) {
                    e.insert(words.len());
                    queue.push_back(words.len());
                    words.push(w);
                }
            }
        }
        debug_assert_eq!(words.len(), 24);
        CliffordWords { words, index }
    }

    /// Index of `a` followed by `b`.
    fn then(&self, a: usize, b: usize) -> usize {
        let w: Vec<Gate> = self.words[a].iter().chain(&self.words[b]).copied().collect();
        self.index[&word_action(&w)]
    }

    fn inverse(&self, a: usize) -> usize {
        self.index[&word_action(&invert_word(&self.words[a]))]
    }

    fn pulses(&self, a: usize) -> Vec<GlobalPulse> {
        self.words[a].iter().map(|&g| GlobalPulse::unitary(A, g)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Native {
    g: usize,
    t: usize,
    /// Q = sign · key.
    sign: i32,
}

/// A symmetric rotation `exp(i·angle·(P + mirror P))` about a native key, or a
/// G-conjugated A–A window.
#[derive(Debug, Clone, PartialEq)]
enum Op {
    Native { key: PauliString, angle: f64 },
    Central { g: usize, angle: f64 },
}

/// Native-unit synthesizer for blocks of `n` A cells bounded by C.
#[derive(Debug, Clone)]
pub struct BlockSynth {
    n: usize,
    step: Vec<GlobalPulse>,
    cliffords: CliffordWords,
    natives: HashMap<PauliString, Vec<Native>>,
    /// Z pulled back through each Clifford word: the pair Pauli of a conjugated window.
    pair_pauli: Vec<PauliString>,
}

fn unsigned(p: &PauliString) -> PauliString {
    p.clone().with_phase(0)
}

fn times_i(q: &PauliString, p: &PauliString) -> PauliString {
    let r = q.mul(p);
    let ph = r.phase();
    r.with_phase(ph + 1)
}

fn other_than(ex: &[Pauli1]) -> Pauli1 {
    [Pauli1::X, Pauli1::Y, Pauli1::Z].into_iter().find(|p| !ex.contains(p)).expect("a free Pauli")
}

fn two_site(n: usize, j: usize, a: Pauli1, b: Pauli1) -> PauliString {
    let mut q = PauliString::identity(n);
    q.set(j, a);
    q.set(j + 1, b);
    q
}

impl BlockSynth {
    pub fn new(n: usize) -> Result<Self, CompileError> {
        if n < 4 || n % 2 == 1 {
            return Err(CompileError::LayoutMismatch(format!("in-block synthesis needs an even block of at least 4 cells, got {}", n)));
        }
        let layout = canonical_layout(n);
        let step = s_step(&[A], false)?;
        let lowered: Vec<Lowered> = lower(&step, &layout).map_err(|e| CompileError::Synthesis(e.to_string()))?;
        let cliffords = CliffordWords::new();
        let m = n / 2;
        let mut natives: HashMap<PauliString, Vec<Native>> = HashMap::new();
        let mut zt = PauliString::single(n + 2, 1, Pauli1::Z);
        for t in 0..=n {
            if t > 0 {
                conjugate_ops(&mut zt, &lowered, &layout, Direction::Backward).map_err(|e| CompileError::Synthesis(e.to_string()))?;
            }
            for (g, _) in cliffords.words.iter().enumerate() {
                let mut q = zt.clone();
                for p in cliffords.pulses(g).iter().rev() {
                    conjugate(&mut q, p, &layout, Direction::Backward).map_err(|e| CompileError::Synthesis(e.to_string()))?;
                }
                if q.x_bit(0) || q.x_bit(n + 1) {
                    continue;
                }
                q.set(0, Pauli1::I);
                q.set(n + 1, Pauli1::I);
                let mut q = q.slice(1, n + 1);
                let sup = q.support();
                if sup.is_empty() {
                    continue;
                }
                if sup[0] >= m {
                    q = q.mirrored();
                } else if *sup.last().unwrap() >= m {
                    continue;
                }
                let sign = q.sign().expect("Hermitian pull-back");
                natives.entry(unsigned(&q)).or_default().push(Native { g, t, sign });
            }
        }
        let pair_pauli = (0..cliffords.words.len())
            .map(|g| {
                let mut z = PauliString::single(1, 0, Pauli1::Z);
                for gate in invert_word(&cliffords.words[g]) {
                    match gate {
                        Gate::H => z.conj_h(0),
                        Gate::Z(t) => z.conj_z_rotation(&[0], quarter_turns(t).unwrap()),
                        Gate::X => z.conj_x(0),
                    }
                }
                z
            })
            .collect();
        let s = BlockSynth { n, step, cliffords, natives, pair_pauli };
        s.check_coverage()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Every single-site Pauli at the edge and every anticommuting pair on left-half bonds.
    fn check_coverage(&self) -> Result<(), CompileError> {
        let ps = [Pauli1::X, Pauli1::Y, Pauli1::Z];
        for a in ps {
            if !self.natives.contains_key(&PauliString::single(self.n, 0, a)) {
                return Err(CompileError::Synthesis(format!("no native for {} at the edge", a.to_char())));
            }
            for b in ps.into_iter().filter(|&b| b != a) {
                for j in 0..self.n / 2 - 1 {
                    if !self.natives.contains_key(&two_site(self.n, j, a, b)) {
                        return Err(CompileError::Synthesis(format!("no native {}{} at sites {},{}", a.to_char(), b.to_char(), j, j + 1)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of distinct native keys (left-half Paulis reachable by one unit).
    pub fn native_count(&self) -> usize {
        self.natives.len()
    }

    fn rotation(&self, p: &PauliString, theta: f64, out: &mut Vec<Op>) {
        let key = unsigned(p);
        if key.is_identity() {
            return;
        }
        let s = p.sign().expect("Hermitian rotation axis") as f64;
        if self.natives.contains_key(&key) {
            out.push(Op::Native { key, angle: s * theta });
            return;
        }
        let sup = key.support();
        let r = *sup.last().unwrap();
        let (pr, pl) = (key.get(r), key.get(r - 1));
        let q = if pl == Pauli1::I {
            two_site(self.n, r - 1, pr, other_than(&[pr]))
        } else {
            two_site(self.n, r - 1, other_than(&[pl, pr]), pr)
        };
        let reduced = times_i(&q, p);
        self.rotation(&q, FRAC_PI_4, out);
        self.rotation(&reduced, theta, out);
        self.rotation(&q, -FRAC_PI_4, out);
    }

    /// `exp(iθ·L ⊗ mirror L)` for a left-half L; signs of L cancel.
    fn straddling(&self, l: &PauliString, theta: f64, out: &mut Vec<Op>) {
        let m = self.n / 2;
        let sup = l.support();
        let lo = sup[0];
        if sup.len() == 1 && lo == m - 1 {
            let a = l.get(lo);
            let g = (0..self.pair_pauli.len()).find(|&g| self.pair_pauli[g].get(0) == a).expect("all Paulis are reachable");
            out.push(Op::Central { g, angle: theta });
            for j in 0..m - 1 {
                self.rotation(&two_site(self.n, j, a, a), -theta, out);
            }
            return;
        }
        let (pl, pn) = (l.get(lo), l.get(lo + 1));
        let q = if pn == Pauli1::I {
            two_site(self.n, lo, other_than(&[pl]), pl)
        } else {
            two_site(self.n, lo, pl, other_than(&[pn, pl]))
        };
        let moved = times_i(&q, l);
        self.rotation(&q, FRAC_PI_4, out);
        self.straddling(&moved, theta, out);
        self.rotation(&q, -FRAC_PI_4, out);
    }

    fn best_option(&self, key: &PauliString, cur: Option<(usize, usize)>) -> (Native, bool) {
        let opts = &self.natives[key];
        if let Some((g, last)) = cur {
            if let Some(o) = opts.iter().filter(|o| o.g == g && o.t >= last).min_by_key(|o| o.t) {
                return (*o, true);
            }
        }
        (*opts.iter().min_by_key(|o| (o.t, o.g)).unwrap(), false)
    }
}

/// `C A^n C`.
pub fn canonical_layout(n: usize) -> ChainLayout {
    ChainLayout::from_pattern(&format!("C{}C", "A".repeat(n))).expect("valid pattern")
}

/// Builds pulse schedules from symmetric rotations, packing natives that share a
/// Clifford frame into one unit and merging adjacent frame words.
#[derive(Debug)]
pub struct Emitter<'a> {
    synth: &'a BlockSynth,
    pulses: Vec<GlobalPulse>,
    ops: Vec<Op>,
    pending: usize,
    odd: bool,
    units: usize,
}

impl<'a> Emitter<'a> {
    pub fn new(synth: &'a BlockSynth) -> Self {
        Emitter { synth, pulses: Vec::new(), ops: Vec::new(), pending: 0, odd: false, units: 0 }
    }

    /// Queue `exp(iθ(P + mirror P))` for a signed left-half Pauli over the block sites.
    pub fn rotation(&mut self, p: &PauliString, theta: f64) {
        assert_eq!(p.len(), self.synth.n);
        assert!(p.support().iter().all(|&q| q < self.synth.n / 2), "axis must lie in the left half");
        self.synth.rotation(p, theta, &mut self.ops);
    }

    /// Queue `exp(iθ·L ⊗ mirror L)`.
    pub fn straddling(&mut self, l: &PauliString, theta: f64) {
        assert!(!l.is_identity() && l.support().iter().all(|&q| q < self.synth.n / 2));
        self.synth.straddling(&unsigned(l), theta, &mut self.ops);
    }

    fn frame_word(&mut self, g: usize) {
        let c = self.synth.cliffords.then(self.pending, g);
        self.pulses.extend(self.synth.cliffords.pulses(c));
        self.pending = self.synth.cliffords.inverse(g);
    }

    fn steps(&mut self, k: usize) {
        for _ in 0..k {
            self.pulses.extend_from_slice(&self.synth.step);
        }
    }

    fn lower_ops(&mut self) {
        let ops = std::mem::take(&mut self.ops);
        let mut i = 0;
        while i < ops.len() {
            match &ops[i] {
                Op::Central { g, angle } => {
                    self.frame_word(*g);
                    let w = decoupled_window(PairSet::from_pairs(&[Pair::AA]), *angle).expect("single kept pair");
                    self.pulses.extend(w);
                    i += 1;
                }
                Op::Native { key, angle } => {
                    let (first, _) = self.synth.best_option(key, None);
                    self.frame_word(first.g);
                    let mut t = 0;
                    let mut events = vec![(first.t, angle * first.sign as f64)];
                    i += 1;
                    while let Some(Op::Native { key, angle }) = ops.get(i) {
                        let (o, same) = self.synth.best_option(key, Some((first.g, events.last().unwrap().0)));
                        if !same {
                            break;
                        }
                        events.push((o.t, angle * o.sign as f64));
                        i += 1;
                    }
                    for (te, a) in events {
                        self.steps(te - t);
                        t = te;
                        self.pulses.push(GlobalPulse::ResetC);
                        self.pulses.extend(window(A, a));
                    }
                    self.steps(self.synth.n + 1 - t);
                    self.odd ^= true;
                    self.units += 1;
                }
            }
        }
    }

    fn flush_frame(&mut self) {
        self.lower_ops();
        let w = std::mem::take(&mut self.pending);
        self.pulses.extend(self.synth.cliffords.pulses(w));
    }

    /// Whether the block is currently reversed.
    pub fn reversed(&mut self) -> bool {
        self.lower_ops();
        self.odd
    }

    /// Append non-synthesized pulses after everything queued so far.
    pub fn raw(&mut self, pulses: &[GlobalPulse]) {
        self.flush_frame();
        self.pulses.extend_from_slice(pulses);
    }

    /// Append a full mirror cycle if the block is reversed.
    pub fn restore_orientation(&mut self) {
        self.flush_frame();
        if self.odd {
            self.steps(self.synth.n + 1);
            self.odd = false;
        }
    }

    /// Current pulse count after flushing queued rotations.
    pub fn position(&mut self) -> usize {
        self.flush_frame();
        self.pulses.len()
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn finish(mut self) -> Vec<GlobalPulse> {
        self.flush_frame();
        self.pulses
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densesim::{apply_schedule, StateVector, C64};
    use crate::pulse::PulseSchedule;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn expected(psi: &StateVector, rots: &[(PauliString, f64, bool)], reversed: bool, n: usize) -> StateVector {
        let cells = n + 2;
        let mut out = psi.clone();
        for (p, theta, straddle) in rots {
            let left = p.embed(cells, 1);
            let right = p.mirrored().embed(cells, 1);
            let factors: Vec<PauliString> = if *straddle { vec![left.mul(&right)] } else { vec![left, right] };
            for f in factors {
                let mut v = out.clone();
                v.apply_pauli(&f);
                let (c, s) = (theta.cos(), theta.sin());
                let amps: Vec<C64> = out.amplitudes().iter().zip(v.amplitudes()).map(|(a, b)| a * c + C64::new(0.0, s) * b).collect();
                out = StateVector::from_amplitudes(cells, amps).unwrap();
            }
        }
        if reversed {
            let amps = out.amplitudes();
            let mut r = vec![C64::new(0.0, 0.0); amps.len()];
            for (i, a) in amps.iter().enumerate() {
                let mut j = 0;
                for q in 0..cells {
                    let bit = i >> (cells - 1 - q) & 1;
                    let tq = if q == 0 || q == cells - 1 { q } else { cells - 1 - q };
                    j |= bit << (cells - 1 - tq);
                }
                r[j] = *a;
            }
            out = StateVector::from_amplitudes(cells, r).unwrap();
        }
        out
    }

    fn random_input(n: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = StateVector::random(n, &mut rng);
        let mut amps = vec![C64::new(0.0, 0.0); 1 << (n + 2)];
        for (j, x) in a.amplitudes().iter().enumerate() {
            amps[j << 1] = *x;
        }
        StateVector::from_amplitudes(n + 2, amps).unwrap()
    }

    fn check(n: usize, rots: &[(PauliString, f64, bool)], seed: u64) {
        let synth = BlockSynth::new(n).unwrap();
        let mut e = Emitter::new(&synth);
        for (p, th, straddle) in rots {
            if *straddle {
                e.straddling(p, *th);
            } else {
                e.rotation(p, *th);
            }
        }
        let rev = e.reversed();
        let pulses = e.finish();
        let layout = canonical_layout(n);
        let psi = random_input(n, seed);
        let out = apply_schedule(&psi, &PulseSchedule::from_pulses("t", 0, pulses), &layout).unwrap();
        let want = expected(&psi, rots, rev, n);
        assert!((out.fidelity(&want) - 1.0).abs() < 1e-9, "fidelity {}", out.fidelity(&want));
    }

    #[test]
    fn clifford_words_are_short() {
        let c = CliffordWords::new();
        assert_eq!(c.words.len(), 24);
        let longest = c.words.iter().map(Vec::len).max().unwrap();
        assert!(longest <= 4, "{}", longest);
        for a in 0..24 {
            assert_eq!(c.then(a, c.inverse(a)), 0);
        }
    }

    #[test]
    fn natives_cover_edges_and_bonds() {
        for n in [4, 6, 8, 26] {
            let s = BlockSynth::new(n).unwrap();
            assert!(s.native_count() >= 3 + 6 * (n / 2 - 1));
        }
        assert!(BlockSynth::new(5).is_err());
    }

    #[test]
    fn single_unit_matches_dense() {
        let n = 6;
        let p = PauliString::single(n, 0, Pauli1::Y);
        check(n, &[(p, FRAC_PI_4, false)], 1);
    }

    #[test]
    fn compressed_rotations_match_dense() {
        let n = 6;
        let p: PauliString = "+XIZIII".parse().unwrap();
        check(n, &[(p, -FRAC_PI_4, false)], 2);
        let p: PauliString = "-ZYXIII".parse().unwrap();
        check(n, &[(p, FRAC_PI_4, false)], 3);
    }

    #[test]
    fn straddling_zz_matches_dense() {
        let n = 6;
        check(n, &[(PauliString::single(n, 2, Pauli1::Z), FRAC_PI_4, true)], 4);
        check(n, &[(PauliString::single(n, 0, Pauli1::Z), -FRAC_PI_4, true)], 5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn random_sequences_match_dense(seq in proptest::collection::vec((0u64..64, 0u8..3, any::<bool>()), 1..4), seed in 0u64..1000) {
            let n = 6;
            let ps = [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z];
            let mut rots = Vec::new();
            for (bits, kind, neg) in seq {
                let mut p = PauliString::identity(n);
                for q in 0..3 {
                    p.set(q, ps[(bits >> (2 * q) & 3) as usize]);
                }
                if p.is_identity() {
                    continue;
                }
                let straddle = kind == 2;
                let th = if neg { -FRAC_PI_4 } else { FRAC_PI_4 };
                rots.push((p, th, straddle));
            }
            if !rots.is_empty() {
                check(n, &rots, seed);
            }
        }
    }
}
