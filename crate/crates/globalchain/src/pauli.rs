//! Pauli strings with phase, bit-packed, plus Clifford conjugation rules.

use std::fmt;
use std::str::FromStr;

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli1 {
    I,
    X,
    Y,
    Z,
}

impl Pauli1 {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli1::I => (false, false),
            Pauli1::X => (true, false),
            Pauli1::Y => (true, true),
            Pauli1::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli1 {
        match (x, z) {
            (false, false) => Pauli1::I,
            (true, false) => Pauli1::X,
            (true, true) => Pauli1::Y,
            (false, true) => Pauli1::Z,
        }
    }

    pub fn anticommutes(self, o: Pauli1) -> bool {
        let (a, b) = self.bits();
        let (c, d) = o.bits();
        (a & d) ^ (b & c)
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli1::I => 'I',
            Pauli1::X => 'X',
            Pauli1::Y => 'Y',
            Pauli1::Z => 'Z',
        }
    }
}

/// Exponent of i picked up by σ(x1,z1)·σ(x2,z2) = i^g σ(x1^x2, z1^z2).
fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
    let (x2, z2) = (x2 as i32, z2 as i32);
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 - x2,
        (true, false) => z2 * (2 * x2 - 1),
        (false, true) => x2 * (1 - 2 * z2),
    }
}

/// `i^phase · ⊗ σ_j` with σ ∈ {I, X, Y, Z}, qubit j stored at bit j.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

fn words(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { n, x: vec![0; words(n)], z: vec![0; words(n)], phase: 0 }
    }

    pub fn single(n: usize, q: usize, p: Pauli1) -> Self {
        let mut s = PauliString::identity(n);
        s.set(q, p);
        s
    }

    pub fn from_paulis(ps: &[Pauli1]) -> Self {
        let mut s = PauliString::identity(ps.len());
        for (q, &p) in ps.iter().enumerate() {
            s.set(q, p);
        }
        s
    }

    /// Phase-free string from raw bit masks (single-word chains only).
    pub fn from_masks(n: usize, x: u64, z: u64) -> Self {
        assert!(n <= 64);
        PauliString { n, x: vec![x], z: vec![z], phase: 0 }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, k: u8) -> Self {
        self.phase = k % 4;
        self
    }

    /// +1 or -1 for a Hermitian string; None if the prefactor is ±i.
    pub fn sign(&self) -> Option<i32> {
        match self.phase {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) % 4;
    }

    pub fn negated(mut self) -> Self {
        self.negate();
        self
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.x[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.z[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn get(&self, q: usize) -> Pauli1 {
        Pauli1::from_bits(self.x_bit(q), self.z_bit(q))
    }

    pub fn set(&mut self, q: usize, p: Pauli1) {
        assert!(q < self.n, "qubit {} out of range {}", q, self.n);
        let (xb, zb) = p.bits();
        let m = 1u64 << (q % 64);
        let w = q / 64;
        self.x[w] = if xb { self.x[w] | m } else { self.x[w] & !m };
        self.z[w] = if zb { self.z[w] | m } else { self.z[w] & !m };
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q) || self.z_bit(q)).collect()
    }

    pub fn commutes(&self, o: &PauliString) -> bool {
        let mut par = 0u32;
        for w in 0..self.x.len() {
            par ^= ((self.x[w] & o.z[w]) ^ (self.z[w] & o.x[w])).count_ones() & 1;
        }
        par == 0
    }

    /// `self · o`.
    pub fn mul(&self, o: &PauliString) -> PauliString {
        assert_eq!(self.n, o.n);
        let mut k = self.phase as i32 + o.phase as i32;
        for q in 0..self.n {
            k += g(self.x_bit(q), self.z_bit(q), o.x_bit(q), o.z_bit(q));
        }
        PauliString {
            n: self.n,
            x: self.x.iter().zip(&o.x).map(|(a, b)| a ^ b).collect(),
            z: self.z.iter().zip(&o.z).map(|(a, b)| a ^ b).collect(),
            phase: k.rem_euclid(4) as u8,
        }
    }

    /// Same Pauli operator ignoring phase.
    pub fn eq_unsigned(&self, o: &PauliString) -> bool {
        self.x == o.x && self.z == o.z
    }

    /// Reverse qubit order (chain mirror).
    pub fn mirrored(&self) -> PauliString {
        let mut s = PauliString::identity(self.n);
        for q in 0..self.n {
            s.set(self.n - 1 - q, self.get(q));
        }
        s.phase = self.phase;
        s
    }

    /// `H P H` on qubit q.
    pub fn conj_h(&mut self, q: usize) {
        let p = self.get(q);
        match p {
            Pauli1::X => self.set(q, Pauli1::Z),
            Pauli1::Z => self.set(q, Pauli1::X),
            Pauli1::Y => self.negate(),
            Pauli1::I => {}
        }
    }

    /// `X P X` on qubit q.
    pub fn conj_x(&mut self, q: usize) {
        if self.z_bit(q) {
            self.negate();
        }
    }

    /// `U P U†` for `U = exp(i·k·π/4·Q)`.
    pub fn conj_rotation(&mut self, q_op: &PauliString, k: i32) {
        let k = k.rem_euclid(4);
        if k == 0 || self.commutes(q_op) {
            return;
        }
        match k {
            1 => *self = q_op.mul(self).with_phase_add(1),
            2 => self.negate(),
            _ => *self = q_op.mul(self).with_phase_add(3),
        }
    }

    /// `U P U†` for `U = exp(i·k·π/4·Z_{q1}⋯Z_{qm})`.
    pub fn conj_z_rotation(&mut self, qs: &[usize], k: i32) {
        let k = k.rem_euclid(4);
        if k == 0 {
            return;
        }
        let anti = qs.iter().filter(|&&q| self.x_bit(q)).count() % 2 == 1;
        if !anti {
            return;
        }
        if k == 2 {
            self.negate();
            return;
        }
        // (Z_q1⋯Z_qm)·P picks up i^{x_q(1-2z_q)} per site.
        let mut ph = self.phase as i32 + if k == 1 { 1 } else { 3 };
        for &q in qs {
            let (x, z) = (self.x_bit(q) as i32, self.z_bit(q) as i32);
            ph += x * (1 - 2 * z);
            self.z[q / 64] ^= 1 << (q % 64);
        }
        self.phase = ph.rem_euclid(4) as u8;
    }

    fn with_phase_add(mut self, k: u8) -> Self {
        self.phase = (self.phase + k) % 4;
        self
    }

    /// Restriction to a sub-range of qubits (phase kept).
    pub fn slice(&self, lo: usize, hi: usize) -> PauliString {
        let mut s = PauliString::identity(hi - lo);
        for q in lo..hi {
            s.set(q - lo, self.get(q));
        }
        s.phase = self.phase;
        s
    }

    /// Embed into a longer string at offset.
    pub fn embed(&self, n: usize, offset: usize) -> PauliString {
        let mut s = PauliString::identity(n);
        for q in 0..self.n {
            s.set(q + offset, self.get(q));
        }
        s.phase = self.phase;
        s
    }
}

/// Angle as an integer multiple of π/4, if it is one.
pub fn quarter_turns(theta: f64) -> Result<i32, SimError> {
    let k = theta / std::f64::consts::FRAC_PI_4;
    let r = k.round();
    if (k - r).abs() > 1e-9 {
        return Err(SimError::NonClifford(theta));
    }
    Ok(r as i32)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pre = ["+", "+i", "-", "-i"][self.phase as usize];
        f.write_str(pre)?;
        for q in 0..self.n {
            write!(f, "{}", self.get(q).to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (phase, body) = if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else {
            (0, s)
        };
        let ps = body
            .chars()
            .map(|c| match c {
                'I' | '_' => Ok(Pauli1::I),
                'X' => Ok(Pauli1::X),
                'Y' => Ok(Pauli1::Y),
                'Z' => Ok(Pauli1::Z),
                other => Err(format!("bad Pauli character `{}`", other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PauliString::from_paulis(&ps).with_phase(phase))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_qubit_products() {
        assert_eq!(p("X").mul(&p("Y")), p("+iZ"));
        assert_eq!(p("Y").mul(&p("X")), p("-iZ"));
        assert_eq!(p("Z").mul(&p("X")), p("+iY"));
        assert_eq!(p("Y").mul(&p("Y")), p("I"));
    }

    #[test]
    fn rotation_rule() {
        // exp(iπ/4 Z) X exp(-iπ/4 Z) = -Y
        let mut x = p("X");
        x.conj_rotation(&p("Z"), 1);
        assert_eq!(x, p("-Y"));
        let mut y = p("XI");
        y.conj_rotation(&p("ZZ"), 1);
        assert_eq!(y, p("-YZ"));
        let mut h = p("Y");
        h.conj_h(0);
        assert_eq!(h, p("-Y"));
    }

    #[test]
    fn display_round_trip() {
        for s in ["+XYZI", "-iZZ", "+iI", "-Y"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert!("XQ".parse::<PauliString>().is_err());
        assert_eq!(quarter_turns(std::f64::consts::FRAC_PI_2).unwrap(), 2);
        assert!(quarter_turns(0.3).is_err());
    }

    proptest! {
        #[test]
        fn z_rotation_fast_path(a in arb(8), k in -4i32..4, q1 in 0usize..8, q2 in 0usize..8) {
            prop_assume!(q1 != q2);
            let mut zz = PauliString::identity(8);
            zz.set(q1, Pauli1::Z);
            zz.set(q2, Pauli1::Z);
            let mut slow = a.clone();
            slow.conj_rotation(&zz, k);
            let mut fast = a.clone();
            fast.conj_z_rotation(&[q1, q2], k);
            prop_assert_eq!(&slow, &fast);
            let mut s1 = a.clone();
            s1.conj_rotation(&PauliString::single(8, q1, Pauli1::Z), k);
            let mut f1 = a;
            f1.conj_z_rotation(&[q1], k);
            prop_assert_eq!(s1, f1);
        }
    }

    fn arb(n: usize) -> impl Strategy<Value = PauliString> {
        (proptest::collection::vec(0u8..4, n), 0u8..4).prop_map(|(v, k)| {
            let ps: Vec<Pauli1> = v.iter().map(|&b| [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z][b as usize]).collect();
            PauliString::from_paulis(&ps).with_phase(k)
        })
    }

    proptest! {
        #[test]
        fn mul_associative(a in arb(70), b in arb(70), c in arb(70)) {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        }

        #[test]
        fn commutation_matches_products(a in arb(9), b in arb(9)) {
            let ab = a.mul(&b);
            let ba = b.mul(&a);
            prop_assert_eq!(a.commutes(&b), ab == ba);
        }

        #[test]
        fn rotation_is_invertible(a in arb(6), q in arb(6), k in -3i32..4) {
            let mut r = a.clone();
            r.conj_rotation(&q.clone().with_phase(0), k);
            r.conj_rotation(&q.with_phase(0), -k);
            prop_assert_eq!(r, a);
        }
    }
}
