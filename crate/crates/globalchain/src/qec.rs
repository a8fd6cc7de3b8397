//! Stabilizer codes, minimal-weight lookup decoding and the circuit-free EC reference.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::QecError;
use crate::pauli::{Pauli1, PauliString};

/// Generator outcome bits, one per stabilizer generator (bit i = generator i).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Syndrome {
    pub bits: u64,
    pub len: usize,
}

impl Syndrome {
    pub fn from_bits(bits: &[bool]) -> Self {
        let v = bits.iter().enumerate().fold(0u64, |m, (i, &b)| m | (b as u64) << i);
        Syndrome { bits: v, len: bits.len() }
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    pub fn is_trivial(&self) -> bool {
        self.bits == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub pauli: PauliString,
    /// Set when the correction exceeds the code's correction radius.
    pub beyond_radius: bool,
}

#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub stabilizers: Vec<PauliString>,
    pub logical_x: Vec<PauliString>,
    pub logical_z: Vec<PauliString>,
    pub distance: usize,
    pub transversal_cz: bool,
    table: HashMap<u64, PauliString>,
}

#[derive(Serialize, Deserialize)]
struct CodeJson {
    name: String,
    stabilizers: Vec<String>,
    logical_x: Vec<String>,
    logical_z: Vec<String>,
    #[serde(default)]
    transversal_cz: Option<bool>,
}

fn parse_ops(v: &[String]) -> Result<Vec<PauliString>, QecError> {
    v.iter()
        .map(|s| {
            let t = if s.starts_with(['+', '-']) { s.clone() } else { format!("+{}", s) };
            t.parse::<PauliString>().map_err(|e| QecError::InvalidCode(format!("`{}`: {}", s, e)))
        })
        .collect()
}

const STEANE_ROWS: [&str; 3] = ["0001111", "0110011", "1010101"];

impl CodeSpec {
    /// Validate operators, compute distance and the decoder table.
    pub fn new(
        name: &str,
        stabilizers: Vec<PauliString>,
        logical_x: Vec<PauliString>,
        logical_z: Vec<PauliString>,
    ) -> Result<Self, QecError> {
        let n = logical_z.first().map(PauliString::len).ok_or_else(|| QecError::InvalidCode("no logical operators".into()))?;
        let all = stabilizers.iter().chain(&logical_x).chain(&logical_z);
        if all.clone().any(|p| p.len() != n) {
            return Err(QecError::InvalidCode("operators of mixed length".into()));
        }
        if stabilizers.len() > 63 {
            return Err(QecError::InvalidCode("more than 63 generators".into()));
        }
        for (i, a) in stabilizers.iter().enumerate() {
            if stabilizers[i + 1..].iter().any(|b| !a.commutes(b)) {
                return Err(QecError::InvalidCode(format!("generator {} does not commute", i)));
            }
            if logical_x.iter().chain(&logical_z).any(|l| !a.commutes(l)) {
                return Err(QecError::InvalidCode(format!("generator {} anticommutes with a logical", i)));
            }
        }
        if logical_x.len() != logical_z.len() {
            return Err(QecError::InvalidCode("unpaired logical operators".into()));
        }
        for (i, xl) in logical_x.iter().enumerate() {
            for (j, zl) in logical_z.iter().enumerate() {
                if xl.commutes(zl) == (i == j) {
                    return Err(QecError::InvalidCode(format!("logical X{} / Z{} commutation", i, j)));
                }
            }
        }
        let k = logical_x.len();
        let mut code = CodeSpec {
            name: name.to_string(),
            n,
            k,
            stabilizers,
            logical_x,
            logical_z,
            distance: 0,
            transversal_cz: false,
            table: HashMap::new(),
        };
        code.build_table();
        code.distance = code.compute_distance();
        code.transversal_cz = code.check_transversal_cz();
        Ok(code)
    }

    pub fn from_json(text: &str) -> Result<Self, QecError> {
        let j: CodeJson = serde_json::from_str(text).map_err(|e| QecError::InvalidCode(e.to_string()))?;
        let mut c = CodeSpec::new(&j.name, parse_ops(&j.stabilizers)?, parse_ops(&j.logical_x)?, parse_ops(&j.logical_z)?)?;
        if let Some(f) = j.transversal_cz {
            c.transversal_cz &= f;
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        let s = |v: &[PauliString]| v.iter().map(|p| p.to_string()).collect();
        serde_json::to_string_pretty(&CodeJson {
            name: self.name.clone(),
            stabilizers: s(&self.stabilizers),
            logical_x: s(&self.logical_x),
            logical_z: s(&self.logical_z),
            transversal_cz: Some(self.transversal_cz),
        })
        .expect("code serializes")
    }

    pub fn syndrome(&self, e: &PauliString) -> Syndrome {
        let bits: Vec<bool> = self.stabilizers.iter().map(|g| !g.commutes(e)).collect();
        Syndrome::from_bits(&bits)
    }

    /// Paulis ordered by weight, then lexicographically by their I/X/Y/Z string.
    fn paulis_of_weight(&self, w: usize) -> Vec<PauliString> {
        let mut out = Vec::new();
        let mut pos: Vec<usize> = (0..w).collect();
        if w > self.n {
            return out;
        }
        loop {
            for code in 0..3usize.pow(w as u32) {
                let mut p = PauliString::identity(self.n);
                for (t, &q) in pos.iter().enumerate() {
                    let d = code / 3usize.pow((w - 1 - t) as u32) % 3;
                    p.set(q, [Pauli1::X, Pauli1::Y, Pauli1::Z][d]);
                }
                out.push(p);
            }
            // next combination
            let mut i = w;
            loop {
                if i == 0 {
                    out.sort_by_cached_key(|p| p.to_string());
                    return out;
                }
                i -= 1;
                if pos[i] < self.n - w + i {
                    pos[i] += 1;
                    for j in i + 1..w {
                        pos[j] = pos[j - 1] + 1;
                    }
                    break;
                }
            }
            if w == 0 {
                return out;
            }
        }
    }

    fn build_table(&mut self) {
        let full = 1usize << self.stabilizers.len();
        for w in 0..=self.n {
            for p in self.paulis_of_weight(w) {
                let s = self.syndrome(&p).bits;
                self.table.entry(s).or_insert(p);
            }
            if self.table.len() == full {
                break;
            }
        }
    }

    fn is_logical(&self, p: &PauliString) -> bool {
        self.stabilizers.iter().all(|g| g.commutes(p))
            && self.logical_x.iter().chain(&self.logical_z).any(|l| !l.commutes(p))
    }

    fn compute_distance(&self) -> usize {
        (1..=self.n).find(|&w| self.paulis_of_weight(w).iter().any(|p| self.is_logical(p))).unwrap_or(self.n)
    }

    /// Transversal CZ between two copies preserves the two-block stabilizer group.
    fn check_transversal_cz(&self) -> bool {
        let n = self.n;
        let both = |p: &PauliString, off: usize| p.embed(2 * n, off);
        let mut gens: Vec<PauliString> = Vec::new();
        for g in &self.stabilizers {
            gens.push(both(g, 0));
            gens.push(both(g, n));
        }
        let mut logicals = Vec::new();
        for l in self.logical_x.iter().chain(&self.logical_z) {
            logicals.push(both(l, 0));
            logicals.push(both(l, n));
        }
        gens.iter().all(|g| {
            let mut t = g.clone();
            for q in 0..n {
                cz_conj(&mut t, q, q + n);
            }
            gens.iter().all(|h| h.commutes(&t)) && logicals.iter().all(|l| l.commutes(&t))
        })
    }

    pub fn correction_radius(&self) -> usize {
        self.distance.saturating_sub(1) / 2
    }
}

/// CZ P CZ on qubits a, b (phase-exact).
fn cz_conj(p: &mut PauliString, a: usize, b: usize) {
    // CZ = exp(iπ/4)·exp(-iπ/4 ZZ)·exp(iπ/4 Z_a)·exp(iπ/4 Z_b)
    p.conj_z_rotation(&[b], 1);
    p.conj_z_rotation(&[a], 1);
    p.conj_z_rotation(&[a, b], -1);
}

pub fn builtin_code(id: &str) -> Result<CodeSpec, QecError> {
    match id {
        "bare" => CodeSpec::new(
            "bare",
            Vec::new(),
            vec![PauliString::from_paulis(&[Pauli1::X])],
            vec![PauliString::from_paulis(&[Pauli1::Z])],
        ),
        "steane" => {
            let row = |r: &str, p: Pauli1| {
                PauliString::from_paulis(&r.chars().map(|c| if c == '1' { p } else { Pauli1::I }).collect::<Vec<_>>())
            };
            let mut gens: Vec<PauliString> = STEANE_ROWS.iter().map(|r| row(r, Pauli1::X)).collect();
            gens.extend(STEANE_ROWS.iter().map(|r| row(r, Pauli1::Z)));
            CodeSpec::new("steane", gens, vec![row("1111111", Pauli1::X)], vec![row("1111111", Pauli1::Z)])
        }
        other => Err(QecError::UnknownCode(other.to_string())),
    }
}

pub fn decode(code: &CodeSpec, syndrome: &Syndrome) -> Result<Correction, QecError> {
    if syndrome.len != code.stabilizers.len() {
        return Err(QecError::SyndromeLength { got: syndrome.len, want: code.stabilizers.len() });
    }
    let pauli = code.table.get(&syndrome.bits).cloned().ok_or_else(|| QecError::InvalidCode("syndrome outside table".into()))?;
    let beyond_radius = pauli.weight() > code.correction_radius();
    Ok(Correction { pauli, beyond_radius })
}

/// Logical flips left by a residual Pauli: (flips Z̄ readout, flips X̄ readout) per logical.
pub fn logical_flips(code: &CodeSpec, residual: &PauliString) -> Vec<(bool, bool)> {
    code.logical_x
        .iter()
        .zip(&code.logical_z)
        .map(|(xl, zl)| (!zl.commutes(residual), !xl.commutes(residual)))
        .collect()
}

/// Inject, decode ideally, correct; true if any logical operator is flipped.
pub fn ec_round_reference(code: &CodeSpec, injected: &PauliString) -> bool {
    ec_round_reference_flips(code, injected).iter().any(|&(x, z)| x || z)
}

pub fn ec_round_reference_flips(code: &CodeSpec, injected: &PauliString) -> Vec<(bool, bool)> {
    let c = decode(code, &code.syndrome(injected)).expect("table is total");
    logical_flips(code, &c.pauli.mul(injected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_weight(code: &CodeSpec, w: usize) -> Vec<PauliString> {
        code.paulis_of_weight(w)
    }

    #[test]
    fn builtins() {
        let b = builtin_code("bare").unwrap();
        assert_eq!((b.n, b.k, b.stabilizers.len(), b.distance), (1, 1, 0, 1));
        let s = builtin_code("steane").unwrap();
        assert_eq!((s.n, s.k, s.stabilizers.len(), s.distance), (7, 1, 6, 3));
        assert!(s.transversal_cz);
        assert!(matches!(builtin_code("surface"), Err(QecError::UnknownCode(_))));
    }

    #[test]
    fn decoder_examples() {
        let s = builtin_code("steane").unwrap();
        let z = decode(&s, &Syndrome { bits: 0, len: 6 }).unwrap();
        assert!(z.pauli.is_identity() && !z.beyond_radius);
        let e = PauliString::single(7, 3, Pauli1::X);
        assert_eq!(decode(&s, &s.syndrome(&e)).unwrap().pauli, e);
        // X0 X1 aliases X2 (H columns 1 ^ 2 = 3).
        let two = PauliString::single(7, 0, Pauli1::X).mul(&PauliString::single(7, 1, Pauli1::X));
        let c = decode(&s, &s.syndrome(&two)).unwrap();
        assert_eq!(c.pauli, PauliString::single(7, 2, Pauli1::X));
        assert!(ec_round_reference(&s, &two));
        assert!(decode(&s, &Syndrome { bits: 0, len: 5 }).is_err());
    }

    #[test]
    fn weight_one_never_fails() {
        let s = builtin_code("steane").unwrap();
        let ones = all_weight(&s, 1);
        assert_eq!(ones.len(), 21);
        assert!(ones.iter().all(|e| !ec_round_reference(&s, e)));
        assert!(!ec_round_reference(&s, &PauliString::identity(7)));
    }

    #[test]
    fn decoder_minimal_weight_and_total() {
        let s = builtin_code("steane").unwrap();
        assert_eq!(s.table.len(), 64);
        for w in 0..=2 {
            for e in all_weight(&s, w) {
                let c = decode(&s, &s.syndrome(&e)).unwrap();
                assert!(c.pauli.weight() <= e.weight());
                assert_eq!(s.syndrome(&c.pauli), s.syndrome(&e));
            }
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = builtin_code("steane").unwrap();
        let t = CodeSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(t.distance, 3);
        assert_eq!(t.stabilizers, s.stabilizers);
        let bad = r#"{"name":"x","stabilizers":["XI"],"logical_x":["XX"],"logical_z":["ZZ"]}"#;
        assert!(CodeSpec::from_json(bad).is_err());
        let rep = r#"{"name":"rep3","stabilizers":["ZZI","IZZ"],"logical_x":["XXX"],"logical_z":["ZII"]}"#;
        let r = CodeSpec::from_json(rep).unwrap();
        assert_eq!(r.distance, 1);
    }

    #[test]
    fn transversal_cz_preserves_code() {
        let s = builtin_code("steane").unwrap();
        assert!(s.check_transversal_cz());
        // The [[5,1,3]] code has no transversal CZ.
        let five = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"].iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let c = CodeSpec::new("five", parse_ops(&five).unwrap(), parse_ops(&["XXXXX".into()]).unwrap(), parse_ops(&["ZZZZZ".into()]).unwrap()).unwrap();
        assert_eq!(c.distance, 3);
        assert!(!c.transversal_cz);
    }

    proptest! {
        #[test]
        fn decode_deterministic(bits in 0u64..64) {
            let s = builtin_code("steane").unwrap();
            let syn = Syndrome { bits, len: 6 };
            let a = decode(&s, &syn).unwrap();
            let b = decode(&s, &syn).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(s.syndrome(&a.pauli), syn);
        }
    }
}
