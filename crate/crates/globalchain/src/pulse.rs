//! Global-pulse vocabulary, schedules, legality and JSON form.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::PulseError;
use crate::layout::{ChainLayout, Species};

/// Species pair of an adjacent coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pair {
    AA,
    BB,
    AB,
    AC,
    BC,
}

impl Pair {
    pub const ALL: [Pair; 5] = [Pair::AA, Pair::BB, Pair::AB, Pair::AC, Pair::BC];

    pub fn of(a: Species, b: Species) -> Option<Pair> {
        use Species::*;
        match (a.min(b), a.max(b)) {
            (A, A) => Some(Pair::AA),
            (B, B) => Some(Pair::BB),
            (A, B) => Some(Pair::AB),
            (A, C) => Some(Pair::AC),
            (B, C) => Some(Pair::BC),
            _ => None,
        }
    }

    pub fn species(self) -> (Species, Species) {
        use Species::*;
        match self {
            Pair::AA => (A, A),
            Pair::BB => (B, B),
            Pair::AB => (A, B),
            Pair::AC => (A, C),
            Pair::BC => (B, C),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pair::AA => "A-A",
            Pair::BB => "B-B",
            Pair::AB => "A-B",
            Pair::AC => "A-C",
            Pair::BC => "B-C",
        }
    }

    pub fn parse(s: &str) -> Option<Pair> {
        let mut it = s.split('-');
        let a = Species::from_char(it.next()?.chars().next()?)?;
        let b = Species::from_char(it.next()?.chars().next()?)?;
        if it.next().is_some() || s.len() != 3 {
            return None;
        }
        Pair::of(a, b)
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// Set of species pairs, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PairSet(u8);

impl PairSet {
    pub const EMPTY: PairSet = PairSet(0);

    pub fn from_pairs(pairs: &[Pair]) -> Self {
        PairSet(pairs.iter().fold(0, |m, p| m | p.bit()))
    }

    pub fn contains(self, p: Pair) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn with(self, p: Pair) -> Self {
        PairSet(self.0 | p.bit())
    }

    pub fn union(self, o: PairSet) -> Self {
        PairSet(self.0 | o.0)
    }

    pub fn minus(self, o: PairSet) -> Self {
        PairSet(self.0 & !o.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Pair> {
        Pair::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    pub fn couples(self, a: Species, b: Species) -> bool {
        Pair::of(a, b).is_some_and(|p| self.contains(p))
    }
}

impl fmt::Display for PairSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Pair::name).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H,
    X,
    /// exp(iθZ)
    Z(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlobalPulse {
    SpeciesUnitary { species: Species, gate: Gate },
    /// exp(i·angle·Z⊗Z) on every adjacent pair whose species pair is active.
    Coupling { pairs: PairSet, angle: f64 },
    ResetC,
    /// Never produced by the compiler; exists so legality checks can be exercised.
    #[doc(hidden)]
    SiteAddressed { site: usize, gate: Gate },
}

impl GlobalPulse {
    pub fn unitary(species: Species, gate: Gate) -> Self {
        GlobalPulse::SpeciesUnitary { species, gate }
    }

    pub fn coupling(pairs: &[Pair], angle: f64) -> Self {
        GlobalPulse::Coupling { pairs: PairSet::from_pairs(pairs), angle }
    }

    /// Test-only constructor of an illegal site-addressed pseudo-pulse.
    pub fn site_addressed_for_testing(site: usize, gate: Gate) -> Self {
        GlobalPulse::SiteAddressed { site, gate }
    }

    /// Cells this pulse acts on (noise and cost attach to these).
    pub fn touched(&self, layout: &ChainLayout) -> Vec<usize> {
        match *self {
            GlobalPulse::SpeciesUnitary { species, .. } => layout.cells_of(species),
            GlobalPulse::ResetC => layout.cells_of(Species::C),
            GlobalPulse::Coupling { pairs, .. } => {
                let n = layout.len();
                let mut hit = vec![false; n];
                for i in 0..n.saturating_sub(1) {
                    if pairs.couples(layout.species(i), layout.species(i + 1)) {
                        hit[i] = true;
                        hit[i + 1] = true;
                    }
                }
                (0..n).filter(|&i| hit[i]).collect()
            }
            GlobalPulse::SiteAddressed { site, .. } => {
                if site < layout.len() {
                    vec![site]
                } else {
                    Vec::new()
                }
            }
        }
    }

    fn to_json(self) -> Value {
        let gate_json = |g: Gate| match g {
            Gate::H => json!("H"),
            Gate::X => json!("X"),
            Gate::Z(t) => json!({ "Z": t }),
        };
        match self {
            GlobalPulse::SpeciesUnitary { species, gate } => {
                json!({"op": "species_unitary", "species": species.to_string(), "gate": gate_json(gate)})
            }
            GlobalPulse::Coupling { pairs, angle } => {
                let names: Vec<&str> = pairs.iter().map(Pair::name).collect();
                json!({"op": "coupling", "pairs": names, "angle": angle})
            }
            GlobalPulse::ResetC => json!({"op": "reset_c"}),
            GlobalPulse::SiteAddressed { site, gate } => {
                json!({"op": "site_unitary", "site": site, "gate": gate_json(gate)})
            }
        }
    }

    fn from_json(v: &Value) -> Result<Self, PulseError> {
        let obj = v.as_object().ok_or_else(|| PulseError::Malformed("pulse is not an object".into()))?;
        let op = obj
            .get("op")
            .and_then(Value::as_str)
            .ok_or_else(|| PulseError::MissingField("op".into()))?;
        let angle = |key: &str, o: &Map<String, Value>| -> Result<f64, PulseError> {
            let a = o.get(key).ok_or_else(|| PulseError::MissingField(key.into()))?;
            let a = a.as_f64().ok_or(PulseError::NonFiniteAngle)?;
            if a.is_finite() {
                Ok(a)
            } else {
                Err(PulseError::NonFiniteAngle)
            }
        };
        match op {
            "species_unitary" => {
                let s = obj
                    .get("species")
                    .and_then(Value::as_str)
                    .ok_or_else(|| PulseError::MissingField("species".into()))?;
                let species = match s {
                    "A" => Species::A,
                    "B" => Species::B,
                    "C" => Species::C,
                    other => return Err(PulseError::Malformed(format!("unknown species `{}`", other))),
                };
                let g = obj.get("gate").ok_or_else(|| PulseError::MissingField("gate".into()))?;
                let gate = match g {
                    Value::String(s) if s == "H" => Gate::H,
                    Value::String(s) if s == "X" => Gate::X,
                    Value::Object(o) if o.contains_key("Z") => Gate::Z(angle("Z", o)?),
                    other => return Err(PulseError::Malformed(format!("unknown gate {}", other))),
                };
                Ok(GlobalPulse::SpeciesUnitary { species, gate })
            }
            "coupling" => {
                let arr = obj
                    .get("pairs")
                    .and_then(Value::as_array)
                    .ok_or_else(|| PulseError::MissingField("pairs".into()))?;
                let mut set = PairSet::EMPTY;
                for p in arr {
                    let name = p.as_str().ok_or_else(|| PulseError::Malformed("pair is not a string".into()))?;
                    let pair = Pair::parse(name).ok_or_else(|| PulseError::Malformed(format!("unknown pair `{}`", name)))?;
                    set = set.with(pair);
                }
                if set.is_empty() {
                    return Err(PulseError::Malformed("empty pair set".into()));
                }
                Ok(GlobalPulse::Coupling { pairs: set, angle: angle("angle", obj)? })
            }
            "reset_c" => Ok(GlobalPulse::ResetC),
            other => Err(PulseError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScheduleMeta {
    pub gadget: String,
    pub level: u32,
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSchedule {
    pub pulses: Vec<GlobalPulse>,
    pub meta: ScheduleMeta,
}

impl PulseSchedule {
    pub fn new(gadget: &str, level: u32) -> Self {
        PulseSchedule { pulses: Vec::new(), meta: ScheduleMeta { gadget: gadget.to_string(), level, params: Map::new() } }
    }

    pub fn from_pulses(gadget: &str, level: u32, pulses: Vec<GlobalPulse>) -> Self {
        let mut s = PulseSchedule::new(gadget, level);
        s.pulses = pulses;
        s
    }

    pub fn with_param(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.meta.params.insert(key.to_string(), v.into());
        self
    }

    pub fn push(&mut self, p: GlobalPulse) {
        self.pulses.push(p);
    }

    pub fn extend(&mut self, other: &PulseSchedule) {
        self.pulses.extend_from_slice(&other.pulses);
    }

    /// `self` followed by `other`; meta of `self` is kept.
    pub fn then(mut self, other: &PulseSchedule) -> Self {
        self.extend(other);
        self
    }

    pub fn repeated(&self, k: usize) -> PulseSchedule {
        let mut s = PulseSchedule { pulses: Vec::with_capacity(self.pulses.len() * k), meta: self.meta.clone() };
        for _ in 0..k {
            s.pulses.extend_from_slice(&self.pulses);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn to_value(&self) -> Value {
        json!({
            "meta": {"gadget": self.meta.gadget, "level": self.meta.level, "params": Value::Object(self.meta.params.clone())},
            "pulses": self.pulses.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
        })
    }

    pub fn serialize(&self) -> String {
        serde_json::to_string(&self.to_value()).expect("schedule serializes")
    }

    pub fn parse(text: &str) -> Result<Self, PulseError> {
        let v: Value = serde_json::from_str(text).map_err(|e| PulseError::Malformed(e.to_string()))?;
        PulseSchedule::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, PulseError> {
        let obj = v.as_object().ok_or_else(|| PulseError::Malformed("schedule is not an object".into()))?;
        let pulses = obj
            .get("pulses")
            .and_then(Value::as_array)
            .ok_or_else(|| PulseError::MissingField("pulses".into()))?
            .iter()
            .map(GlobalPulse::from_json)
            .collect::<Result<Vec<_>, _>>()?;
        let meta = obj.get("meta").ok_or_else(|| PulseError::MissingField("meta".into()))?;
        let gadget = meta.get("gadget").and_then(Value::as_str).unwrap_or("").to_string();
        let level = meta.get("level").map_or(Ok(0), |l| {
            l.as_u64().map(|x| x as u32).ok_or_else(|| PulseError::Malformed("meta.level must be a non-negative integer".into()))
        })?;
        let params = match meta.get("params") {
            Some(Value::Object(m)) => m.clone(),
            None => Map::new(),
            Some(_) => return Err(PulseError::Malformed("meta.params must be an object".into())),
        };
        Ok(PulseSchedule { pulses, meta: ScheduleMeta { gadget, level, params } })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub legal: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

pub fn validate_schedule(schedule: &PulseSchedule) -> ValidationReport {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    for (index, p) in schedule.pulses.iter().enumerate() {
        let mut bad = |reason: &str| violations.push(Violation { index, reason: reason.to_string() });
        match *p {
            GlobalPulse::SiteAddressed { .. } => bad("site addressing"),
            GlobalPulse::Coupling { pairs, angle } => {
                if pairs.is_empty() {
                    bad("empty pair set");
                }
                if !angle.is_finite() {
                    bad("non-finite angle");
                }
            }
            GlobalPulse::SpeciesUnitary { gate: Gate::Z(t), .. } => {
                if !t.is_finite() {
                    bad("non-finite angle");
                } else if t.abs() > 2.0 * PI {
                    warnings.push(Violation { index, reason: "angle exceeds 2π (normalization)".to_string() });
                }
            }
            _ => {}
        }
    }
    ValidationReport { legal: violations.is_empty(), violations, warnings }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostRecord {
    pub total_pulses: usize,
    pub per_qubit: Vec<usize>,
}

impl CostRecord {
    pub fn max_per_qubit(&self) -> usize {
        self.per_qubit.iter().copied().max().unwrap_or(0)
    }

    pub fn add(&self, other: &CostRecord) -> CostRecord {
        CostRecord {
            total_pulses: self.total_pulses + other.total_pulses,
            per_qubit: self.per_qubit.iter().zip(&other.per_qubit).map(|(a, b)| a + b).collect(),
        }
    }
}

pub fn schedule_cost(schedule: &PulseSchedule, layout: &ChainLayout) -> CostRecord {
    let mut per_qubit = vec![0; layout.len()];
    for p in &schedule.pulses {
        for q in p.touched(layout) {
            per_qubit[q] += 1;
        }
    }
    CostRecord { total_pulses: schedule.pulses.len(), per_qubit }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_layout, LayoutConfig};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn arb_pulse() -> impl Strategy<Value = GlobalPulse> {
        let species = prop_oneof![Just(Species::A), Just(Species::B), Just(Species::C)];
        let gate = prop_oneof![Just(Gate::H), Just(Gate::X), (-10.0f64..10.0).prop_map(Gate::Z)];
        prop_oneof![
            (species, gate).prop_map(|(species, gate)| GlobalPulse::SpeciesUnitary { species, gate }),
            (1u8..32, -7.0f64..7.0).prop_map(|(m, angle)| GlobalPulse::Coupling { pairs: PairSet(m), angle }),
            Just(GlobalPulse::ResetC),
        ]
    }

    fn arb_schedule() -> impl Strategy<Value = PulseSchedule> {
        proptest::collection::vec(arb_pulse(), 0..12).prop_map(|p| PulseSchedule::from_pulses("prop", 0, p))
    }

    #[test]
    fn legality_examples() {
        let s = PulseSchedule::from_pulses(
            "t",
            0,
            vec![GlobalPulse::unitary(Species::A, Gate::H), GlobalPulse::coupling(&[Pair::AC], FRAC_PI_4), GlobalPulse::ResetC],
        );
        assert!(validate_schedule(&s).legal);
        assert!(validate_schedule(&PulseSchedule::default()).legal);
        let mut bad = s.clone();
        bad.push(GlobalPulse::site_addressed_for_testing(3, Gate::X));
        let rep = validate_schedule(&bad);
        assert!(!rep.legal);
        assert_eq!(rep.violations, vec![Violation { index: 3, reason: "site addressing".into() }]);
        let big = PulseSchedule::from_pulses("t", 0, vec![GlobalPulse::unitary(Species::A, Gate::Z(7.0))]);
        let rep = validate_schedule(&big);
        assert!(rep.legal);
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn cost_examples() {
        let l = build_layout(&LayoutConfig::new(4, 0, 2, "bare")).unwrap();
        let c = schedule_cost(&PulseSchedule::default(), &l);
        assert_eq!(c.total_pulses, 0);
        assert!(c.per_qubit.iter().all(|&x| x == 0));
        let s = PulseSchedule::from_pulses("t", 0, vec![GlobalPulse::unitary(Species::A, Gate::H)]);
        let c = schedule_cost(&s, &l);
        assert_eq!(c.total_pulses, 1);
        assert_eq!(c.per_qubit.iter().filter(|&&x| x == 1).count(), 8);
        let w = PulseSchedule::from_pulses("t", 0, vec![GlobalPulse::coupling(&[Pair::AC], 0.3)]);
        let touched: Vec<usize> = (0..12).filter(|&i| schedule_cost(&w, &l).per_qubit[i] == 1).collect();
        assert_eq!(touched, vec![3, 4, 7, 8]);
    }

    #[test]
    fn parse_examples() {
        let s = PulseSchedule::parse(r#"{"pulses":[{"op":"reset_c"}],"meta":{"gadget":"x","level":0,"params":{}}}"#).unwrap();
        assert_eq!(s.pulses, vec![GlobalPulse::ResetC]);
        let e = PulseSchedule::parse(r#"{"pulses":[{"op":"measure_site_3"}],"meta":{}}"#).unwrap_err();
        assert_eq!(e.to_string(), "unknown pulse kind `measure_site_3`");
        let e = PulseSchedule::parse(r#"{"pulses":[{"op":"coupling","angle":1.0}],"meta":{}}"#).unwrap_err();
        assert_eq!(e, PulseError::MissingField("pairs".into()));
        let e = PulseSchedule::parse(r#"{"pulses":[{"op":"coupling","pairs":["A-C"],"angle":"nan"}],"meta":{}}"#).unwrap_err();
        assert_eq!(e, PulseError::NonFiniteAngle);
        assert!(PulseSchedule::parse(r#"{"meta":{}}"#).is_err());
    }

    #[test]
    fn pair_names() {
        for p in Pair::ALL {
            assert_eq!(Pair::parse(p.name()), Some(p));
        }
        assert_eq!(Pair::parse("C-A"), Some(Pair::AC));
        assert_eq!(Pair::parse("C-C"), None);
        assert_eq!(Pair::parse("A-CC"), None);
    }

    proptest! {
        #[test]
        fn json_round_trip_bit_exact(s in arb_schedule()) {
            let back = PulseSchedule::parse(&s.serialize()).unwrap();
            prop_assert_eq!(back.pulses.len(), s.pulses.len());
            for (a, b) in back.pulses.iter().zip(&s.pulses) {
                match (a, b) {
                    (GlobalPulse::Coupling { angle: x, pairs: p }, GlobalPulse::Coupling { angle: y, pairs: q }) => {
                        prop_assert_eq!(x.to_bits(), y.to_bits());
                        prop_assert_eq!(p, q);
                    }
                    (GlobalPulse::SpeciesUnitary { gate: Gate::Z(x), species: s1 }, GlobalPulse::SpeciesUnitary { gate: Gate::Z(y), species: s2 }) => {
                        prop_assert_eq!(x.to_bits(), y.to_bits());
                        prop_assert_eq!(s1, s2);
                    }
                    _ => prop_assert_eq!(a, b),
                }
            }
        }

        #[test]
        fn legality_is_conjunctive(a in arb_schedule(), b in arb_schedule(), site in proptest::option::of(0usize..5)) {
            let mut b = b;
            if let Some(q) = site {
                b.push(GlobalPulse::site_addressed_for_testing(q, Gate::H));
            }
            let joined = a.clone().then(&b);
            prop_assert_eq!(validate_schedule(&joined).legal, validate_schedule(&a).legal && validate_schedule(&b).legal);
        }

        #[test]
        fn cost_is_additive(a in arb_schedule(), b in arb_schedule(), n in 1usize..4) {
            let l = build_layout(&LayoutConfig::new(4, 0, n, "bare")).unwrap();
            let joined = a.clone().then(&b);
            prop_assert_eq!(schedule_cost(&joined, &l), schedule_cost(&a, &l).add(&schedule_cost(&b, &l)));
        }
    }
}
