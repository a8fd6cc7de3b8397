//! Exact state-vector and unitary backend for small chains.
//!
//! Cell 0 is the most significant bit of the basis index.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::SimError;
use crate::layout::{ChainLayout, Species};
use crate::pauli::PauliString;
use crate::pulse::{Gate, GlobalPulse, PulseSchedule};

pub type C64 = Complex64;

pub const DEFAULT_MAX_QUBITS: usize = 14;
pub const EQ_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;
const RESET_TOL: f64 = 1e-8;

pub fn gate_matrix(g: Gate) -> [[C64; 2]; 2] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    match g {
        Gate::H => [[h, h], [h, -h]],
        Gate::X => [[z, o], [o, z]],
        Gate::Z(t) => [[C64::from_polar(1.0, t), z], [z, C64::from_polar(1.0, -t)]],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self, SimError> {
        if amps.len() != 1 << n {
            return Err(SimError::Dimension(format!("{} amplitudes for {} qubits", amps.len(), n)));
        }
        Ok(StateVector { n, amps })
    }

    /// Tensor product of single-qubit states, cell 0 first.
    pub fn product(qubits: &[[C64; 2]]) -> Self {
        let mut amps = vec![C64::new(1.0, 0.0)];
        for q in qubits {
            amps = amps.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        }
        StateVector { n: qubits.len(), amps }
    }

    pub fn random_qubit<R: Rng>(rng: &mut R) -> [C64; 2] {
        let v = [C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5), C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)];
        let nrm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        [v[0] / nrm, v[1] / nrm]
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mut amps: Vec<C64> = (0..1usize << n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let nrm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= nrm);
        StateVector { n, amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, o: &StateVector) -> C64 {
        self.amps.iter().zip(&o.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn fidelity(&self, o: &StateVector) -> f64 {
        self.inner(o).norm_sqr()
    }

    fn bit(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    /// Probability that cell `q` reads 1.
    pub fn prob_one(&self, q: usize) -> f64 {
        let m = self.bit(q);
        self.amps.iter().enumerate().filter(|(i, _)| i & m != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn apply_1q(&mut self, q: usize, m: &[[C64; 2]; 2]) {
        let b = self.bit(q);
        for i in 0..self.amps.len() {
            if i & b == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | b]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | b] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Multiply every amplitude by a phase depending on its basis index.
    pub fn apply_diagonal(&mut self, f: impl Fn(usize) -> C64) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= f(i);
        }
    }

    /// `⟨ψ|P|ψ⟩` for a Pauli string over the cells.
    pub fn expectation(&self, p: &PauliString) -> C64 {
        let mut v = self.clone();
        v.apply_pauli(p);
        self.inner(&v)
    }

    pub fn apply_pauli(&mut self, p: &PauliString) {
        let i = C64::new(0.0, 1.0);
        for q in 0..p.len() {
            let (x, z) = (p.x_bit(q), p.z_bit(q));
            let one = C64::new(1.0, 0.0);
            let zero = C64::new(0.0, 0.0);
            let m = match (x, z) {
                (false, false) => continue,
                (true, false) => [[zero, one], [one, zero]],
                (false, true) => [[one, zero], [zero, -one]],
                (true, true) => [[zero, -i], [i, zero]],
            };
            self.apply_1q(q, &m);
        }
        let ph = i.powu(p.phase() as u32);
        self.amps.iter_mut().for_each(|a| *a *= ph);
    }

    /// Residual of the best product split between cell `q` and the rest.
    fn split_residual(&self, q: usize) -> (f64, usize) {
        let b = self.bit(q);
        let (mut g00, mut g11, mut g01) = (0.0, 0.0, C64::new(0.0, 0.0));
        for i in 0..self.amps.len() {
            if i & b == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | b]);
                g00 += a0.norm_sqr();
                g11 += a1.norm_sqr();
                g01 += a0 * a1.conj();
            }
        }
        let tr = g00 + g11;
        let det = g00 * g11 - g01.norm_sqr();
        let disc = ((tr * tr / 4.0) - det).max(0.0).sqrt();
        let lam_min = (tr / 2.0 - disc).max(0.0);
        (lam_min, if g00 >= g11 { 0 } else { 1 })
    }

    /// Replace cell `q` by |0⟩; the cell must be unentangled.
    pub fn reset_cell(&mut self, q: usize) -> Result<(), SimError> {
        let (residual, keep) = self.split_residual(q);
        if residual > RESET_TOL {
            return Err(SimError::EntangledReset { cell: q, residual });
        }
        let b = self.bit(q);
        let mut nrm = 0.0;
        for i in 0..self.amps.len() {
            if i & b == 0 {
                let src = if keep == 0 { self.amps[i] } else { self.amps[i | b] };
                self.amps[i] = src;
                self.amps[i | b] = C64::new(0.0, 0.0);
                nrm += src.norm_sqr();
            }
        }
        let s = nrm.sqrt();
        self.amps.iter_mut().for_each(|a| *a /= s);
        Ok(())
    }
}

fn check_pulse(p: &GlobalPulse) -> Result<(), SimError> {
    if let GlobalPulse::SiteAddressed { .. } = p {
        return Err(SimError::SiteAddressed);
    }
    Ok(())
}

/// Species masks and coupling-pair lists precomputed for one layout.
struct Plan<'a> {
    layout: &'a ChainLayout,
    n: usize,
}

impl Plan<'_> {
    fn apply(&self, state: &mut StateVector, p: &GlobalPulse) -> Result<(), SimError> {
        check_pulse(p)?;
        match *p {
            GlobalPulse::SpeciesUnitary { species, gate } => {
                let m = gate_matrix(gate);
                for q in self.layout.cells_of(species) {
                    state.apply_1q(q, &m);
                }
            }
            GlobalPulse::Coupling { pairs, angle } => {
                let bonds: Vec<(usize, usize)> = (0..self.n.saturating_sub(1))
                    .filter(|&i| pairs.couples(self.layout.species(i), self.layout.species(i + 1)))
                    .map(|i| (self.n - 1 - i, self.n - 2 - i))
                    .collect();
                if !bonds.is_empty() {
                    state.apply_diagonal(|idx| {
                        let s: i32 = bonds.iter().map(|&(a, b)| if (idx >> a ^ idx >> b) & 1 == 0 { 1 } else { -1 }).sum();
                        C64::from_polar(1.0, angle * s as f64)
                    });
                }
            }
            GlobalPulse::ResetC => {
                for q in self.layout.cells_of(Species::C) {
                    state.reset_cell(q)?;
                }
            }
            GlobalPulse::SiteAddressed { .. } => unreachable!(),
        }
        Ok(())
    }
}

pub fn apply_schedule(state: &StateVector, schedule: &PulseSchedule, layout: &ChainLayout) -> Result<StateVector, SimError> {
    if state.n != layout.len() {
        return Err(SimError::Dimension(format!("state has {} qubits, layout {}", state.n, layout.len())));
    }
    let plan = Plan { layout, n: layout.len() };
    let mut s = state.clone();
    for p in &schedule.pulses {
        plan.apply(&mut s, p)?;
    }
    Ok(s)
}

pub fn schedule_unitary(schedule: &PulseSchedule, layout: &ChainLayout) -> Result<Array2<C64>, SimError> {
    schedule_unitary_with_ceiling(schedule, layout, DEFAULT_MAX_QUBITS)
}

pub fn schedule_unitary_with_ceiling(schedule: &PulseSchedule, layout: &ChainLayout, max_qubits: usize) -> Result<Array2<C64>, SimError> {
    let n = layout.len();
    if n > max_qubits {
        return Err(SimError::TooManyQubits(n, max_qubits));
    }
    if schedule.pulses.iter().any(|p| matches!(p, GlobalPulse::ResetC)) {
        return Err(SimError::NonUnitary);
    }
    for p in &schedule.pulses {
        check_pulse(p)?;
    }
    let dim = 1usize << n;
    let cols = crate::exec::map_indices(dim, |j| {
        apply_schedule(&StateVector::basis(n, j), schedule, layout).map(|s| s.amps)
    });
    let mut u = Array2::zeros((dim, dim));
    for (j, col) in cols.into_iter().enumerate() {
        let col = col?;
        for (i, a) in col.into_iter().enumerate() {
            u[[i, j]] = a;
        }
    }
    Ok(u)
}

/// Action of a schedule on `free` cells when every other cell starts in |0⟩.
#[derive(Debug, Clone)]
pub struct RestrictedAction {
    /// 2^k × 2^k matrix on the free cells, first free cell most significant.
    pub matrix: Array2<C64>,
    /// Largest weight left outside the all-|0⟩ subspace of the other cells.
    pub leakage: f64,
}

/// Embed a free-cell basis index into a full register index.
pub fn embed_index(n: usize, free: &[usize], j: usize) -> usize {
    let k = free.len();
    free.iter().enumerate().fold(0, |acc, (t, &q)| acc | ((j >> (k - 1 - t) & 1) << (n - 1 - q)))
}

pub fn restricted_action(schedule: &PulseSchedule, layout: &ChainLayout, free: &[usize]) -> Result<RestrictedAction, SimError> {
    let n = layout.len();
    if n > DEFAULT_MAX_QUBITS {
        return Err(SimError::TooManyQubits(n, DEFAULT_MAX_QUBITS));
    }
    let k = free.len();
    let dim = 1usize << k;
    let cols = crate::exec::map_indices(dim, |j| {
        apply_schedule(&StateVector::basis(n, embed_index(n, free, j)), schedule, layout).map(|s| s.amps)
    });
    let mut m = Array2::zeros((dim, dim));
    let mut leakage: f64 = 0.0;
    for (j, col) in cols.into_iter().enumerate() {
        let col = col?;
        let mut kept = 0.0;
        for i in 0..dim {
            let a = col[embed_index(n, free, i)];
            m[[i, j]] = a;
            kept += a.norm_sqr();
        }
        leakage = leakage.max((1.0 - kept).abs());
    }
    Ok(RestrictedAction { matrix: m, leakage })
}

/// Kronecker product of single-qubit matrices, cell 0 first.
pub fn kron_all(ms: &[[[C64; 2]; 2]]) -> Array2<C64> {
    let mut u = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
    for m in ms {
        let d = u.nrows();
        let mut v = Array2::zeros((2 * d, 2 * d));
        for i in 0..d {
            for j in 0..d {
                for a in 0..2 {
                    for b in 0..2 {
                        v[[2 * i + a, 2 * j + b]] = u[[i, j]] * m[a][b];
                    }
                }
            }
        }
        u = v;
    }
    u
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::eye(1 << n)
}

/// Diagonal unitary from a phase function on basis indices.
pub fn diagonal(n: usize, f: impl Fn(usize) -> C64) -> Array2<C64> {
    let mut u = Array2::zeros((1 << n, 1 << n));
    for i in 0..1usize << n {
        u[[i, i]] = f(i);
    }
    u
}

/// Bit of cell `q` in basis index `idx` of an n-cell register.
pub fn cell_bit(n: usize, idx: usize, q: usize) -> usize {
    idx >> (n - 1 - q) & 1
}

/// CZ between two cells, identity elsewhere.
pub fn cz_matrix(n: usize, a: usize, b: usize) -> Array2<C64> {
    diagonal(n, |i| if cell_bit(n, i, a) & cell_bit(n, i, b) == 1 { C64::new(-1.0, 0.0) } else { C64::new(1.0, 0.0) })
}

/// Permutation unitary exchanging two cells.
pub fn swap_matrix(n: usize, a: usize, b: usize) -> Array2<C64> {
    let mut u = Array2::zeros((1 << n, 1 << n));
    for i in 0..1usize << n {
        let (ba, bb) = (cell_bit(n, i, a), cell_bit(n, i, b));
        let j = if ba != bb { i ^ (1 << (n - 1 - a)) ^ (1 << (n - 1 - b)) } else { i };
        u[[j, i]] = C64::new(1.0, 0.0);
    }
    u
}

/// Permutation unitary reversing the cells in `lo..hi`.
pub fn reversal_matrix(n: usize, lo: usize, hi: usize) -> Array2<C64> {
    let mut u = Array2::zeros((1 << n, 1 << n));
    for i in 0..1usize << n {
        let mut j = i;
        for q in lo..hi {
            let r = hi - 1 - (q - lo);
            let bit = cell_bit(n, i, q);
            let m = 1 << (n - 1 - r);
            j = if bit == 1 { j | m } else { j & !m };
        }
        u[[j, i]] = C64::new(1.0, 0.0);
    }
    u
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub equal_up_to_phase: bool,
    pub max_deviation: f64,
    pub phase: f64,
    /// Local Z(k·π/4) frame as (cell, k) pairs, when one was searched for.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dressing: Option<Vec<(usize, i32)>>,
}

pub fn equivalent_up_to_phase(u: &Array2<C64>, v: &Array2<C64>, tol: f64) -> Result<EquivalenceReport, SimError> {
    if u.dim() != v.dim() {
        return Err(SimError::Dimension(format!("{:?} vs {:?}", u.dim(), v.dim())));
    }
    let anchor = v.iter().zip(u.iter()).find(|(b, _)| b.norm() > 1e-3);
    let phase = match anchor {
        Some((b, a)) if a.norm() > 0.0 => (a / b).arg(),
        _ => 0.0,
    };
    let ph = C64::from_polar(1.0, phase);
    let dev = u.iter().zip(v.iter()).map(|(a, b)| (a - ph * b).norm()).fold(0.0, f64::max);
    Ok(EquivalenceReport { equal_up_to_phase: dev <= tol, max_deviation: dev, phase, dressing: None })
}

/// Search Z(k·π/4) rotations on `sites` so that dressing·U equals target up to phase.
pub fn find_local_z_dressing(u: &Array2<C64>, target: &Array2<C64>, sites: &[usize], n: usize, tol: f64) -> Result<EquivalenceReport, SimError> {
    if u.dim() != target.dim() || u.nrows() != 1 << n {
        return Err(SimError::Dimension(format!("{:?} vs {:?}", u.dim(), target.dim())));
    }
    let combos = 8usize.pow(sites.len() as u32);
    let mut best: Option<EquivalenceReport> = None;
    for c in 0..combos {
        let ks: Vec<i32> = (0..sites.len()).map(|j| ((c / 8usize.pow(j as u32)) % 8) as i32).collect();
        let mut d = u.clone();
        for (i, mut row) in d.rows_mut().into_iter().enumerate() {
            let ang: f64 = sites
                .iter()
                .zip(&ks)
                .map(|(&q, &k)| {
                    let s = if cell_bit(n, i, q) == 0 { 1.0 } else { -1.0 };
                    s * k as f64 * std::f64::consts::FRAC_PI_4
                })
                .sum();
            let ph = C64::from_polar(1.0, ang);
            row.iter_mut().for_each(|a| *a *= ph);
        }
        let mut rep = equivalent_up_to_phase(&d, target, tol)?;
        rep.dressing = Some(sites.iter().copied().zip(ks).collect());
        if rep.equal_up_to_phase {
            return Ok(rep);
        }
        if best.as_ref().is_none_or(|b| rep.max_deviation < b.max_deviation) {
            best = Some(rep);
        }
    }
    Ok(best.unwrap_or(EquivalenceReport { equal_up_to_phase: false, max_deviation: f64::INFINITY, phase: 0.0, dressing: None }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::Pair;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn sched(p: Vec<GlobalPulse>) -> PulseSchedule {
        PulseSchedule::from_pulses("t", 0, p)
    }

    #[test]
    fn hadamard_on_species() {
        let l = ChainLayout::from_pattern("AC").unwrap();
        let s = apply_schedule(&StateVector::zero(2), &sched(vec![GlobalPulse::unitary(Species::A, Gate::H)]), &l).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - h).abs() < 1e-15);
        assert!((s.amplitudes()[2].re - h).abs() < 1e-15);
    }

    #[test]
    fn coupling_phase_on_11() {
        let l = ChainLayout::from_pattern("AC").unwrap();
        let s = apply_schedule(&StateVector::basis(2, 3), &sched(vec![GlobalPulse::coupling(&[Pair::AC], FRAC_PI_4)]), &l).unwrap();
        assert!((s.amplitudes()[3] - C64::from_polar(1.0, FRAC_PI_4)).norm() < 1e-15);
    }

    #[test]
    fn reset_product_and_entangled() {
        let l = ChainLayout::from_pattern("CA").unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = StateVector::random_qubit(&mut rng);
        let plus = [C64::new(h, 0.0), C64::new(h, 0.0)];
        let s = StateVector::product(&[plus, psi]);
        let out = apply_schedule(&s, &sched(vec![GlobalPulse::ResetC]), &l).unwrap();
        let want = StateVector::product(&[[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], psi]);
        assert!((out.fidelity(&want) - 1.0).abs() < 1e-12);
        let bell = StateVector::from_amplitudes(2, vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)]).unwrap();
        assert!(matches!(apply_schedule(&bell, &sched(vec![GlobalPulse::ResetC]), &l), Err(SimError::EntangledReset { cell: 0, .. })));
    }

    #[test]
    fn unitary_examples() {
        let l = ChainLayout::from_pattern("A").unwrap();
        let u = schedule_unitary(&sched(vec![]), &l).unwrap();
        assert!(equivalent_up_to_phase(&u, &identity(1), 0.0).unwrap().equal_up_to_phase);
        let u = schedule_unitary(&sched(vec![GlobalPulse::unitary(Species::A, Gate::X)]), &l).unwrap();
        let x = kron_all(&[gate_matrix(Gate::X)]);
        assert!(equivalent_up_to_phase(&u, &x, 1e-15).unwrap().max_deviation == 0.0);
        assert_eq!(schedule_unitary(&sched(vec![GlobalPulse::ResetC]), &l), Err(SimError::NonUnitary));
        let big = ChainLayout::from_pattern(&"A".repeat(15)).unwrap();
        assert_eq!(schedule_unitary(&sched(vec![]), &big), Err(SimError::TooManyQubits(15, 14)));
        let bad = sched(vec![GlobalPulse::site_addressed_for_testing(0, Gate::X)]);
        assert_eq!(apply_schedule(&StateVector::zero(1), &bad, &l), Err(SimError::SiteAddressed));
    }

    #[test]
    fn equivalence_examples() {
        let u = cz_matrix(2, 0, 1);
        let ph = C64::from_polar(1.0, std::f64::consts::PI / 7.0);
        let v = u.mapv(|a| a * ph);
        let r = equivalent_up_to_phase(&v, &u, 1e-10).unwrap();
        assert!(r.equal_up_to_phase);
        assert!((r.phase - std::f64::consts::PI / 7.0).abs() < 1e-12);
        assert!(!equivalent_up_to_phase(&u, &swap_matrix(2, 0, 1), 1e-10).unwrap().equal_up_to_phase);
        assert!(equivalent_up_to_phase(&u, &identity(3), 1e-10).is_err());
    }

    #[test]
    fn ising_dresses_to_cz() {
        let ising = diagonal(2, |i| {
            let s = if cell_bit(2, i, 0) == cell_bit(2, i, 1) { 1.0 } else { -1.0 };
            C64::from_polar(1.0, -FRAC_PI_4 * s)
        });
        let cz = cz_matrix(2, 0, 1);
        let r = find_local_z_dressing(&ising, &cz, &[0, 1], 2, 1e-10).unwrap();
        assert!(r.equal_up_to_phase);
        let d = r.dressing.unwrap();
        assert!(d.iter().all(|&(_, k)| k % 2 == 1), "{:?}", d);
        let r = find_local_z_dressing(&cz, &cz, &[0, 1], 2, 1e-10).unwrap();
        assert_eq!(r.dressing.unwrap(), vec![(0, 0), (1, 0)]);
    }

    #[test]
    fn linearity_spot_check() {
        let l = ChainLayout::from_pattern("ACAB").unwrap();
        let s = sched(vec![
            GlobalPulse::unitary(Species::A, Gate::H),
            GlobalPulse::coupling(&[Pair::AC, Pair::BC], 0.37),
            GlobalPulse::unitary(Species::C, Gate::Z(0.2)),
            GlobalPulse::unitary(Species::B, Gate::H),
        ]);
        let u = schedule_unitary(&s, &l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let psi = StateVector::random(4, &mut rng);
        let out = apply_schedule(&psi, &s, &l).unwrap();
        for i in 0..16 {
            let want: C64 = (0..16).map(|j| u[[i, j]] * psi.amplitudes()[j]).sum();
            assert!((want - out.amplitudes()[i]).norm() < 1e-12);
        }
    }

    fn arb_pulse() -> impl Strategy<Value = GlobalPulse> {
        let sp = prop_oneof![Just(Species::A), Just(Species::B), Just(Species::C)];
        let gate = prop_oneof![Just(Gate::H), Just(Gate::X), (-4.0f64..4.0).prop_map(Gate::Z)];
        let pair = prop_oneof![Just(Pair::AC), Just(Pair::BC), Just(Pair::AA), Just(Pair::BB), Just(Pair::AB)];
        prop_oneof![
            (sp, gate).prop_map(|(species, gate)| GlobalPulse::SpeciesUnitary { species, gate }),
            (pair, -4.0f64..4.0).prop_map(|(p, a)| GlobalPulse::coupling(&[p], a)),
        ]
    }

    proptest! {
        #[test]
        fn norm_and_composition(a in proptest::collection::vec(arb_pulse(), 0..8), b in proptest::collection::vec(arb_pulse(), 0..8), seed in 0u64..1000) {
            let l = ChainLayout::from_pattern("AACBBCA").unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = StateVector::random(7, &mut rng);
            let s1 = sched(a);
            let s2 = sched(b);
            let joined = s1.clone().then(&s2);
            let direct = apply_schedule(&psi, &joined, &l).unwrap();
            let staged = apply_schedule(&apply_schedule(&psi, &s1, &l).unwrap(), &s2, &l).unwrap();
            prop_assert!((direct.norm() - 1.0).abs() < NORM_TOL);
            prop_assert!((direct.fidelity(&staged) - 1.0).abs() < 1e-12);
        }
    }
}
