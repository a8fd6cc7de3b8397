//! Gadget verification suite: exact dense checks on small chains, tableau checks
//! on full encoded blocks, and stabilizer/dense agreement.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::clifford::lower;
use crate::compiler::{
    code_placement, compile, compile_ancilla_reset, compile_cz_ab, compile_decoupling, compile_ec_round, compile_edge_phase,
    compile_edge_rotation, compile_global_s, compile_interblock_cz, compile_interblock_phase, compile_intrablock_transversal_cz,
    compile_mirror_cycle, compile_swap_interface, compile_swap_interface_unfused, compile_swap_round_trip, compile_syndrome_reset,
    k_mirror, CompilationResult, GadgetName, GadgetSpec, LocalFrame, Side,
};
use crate::densesim::{
    apply_schedule, cz_matrix, diagonal, embed_index, equivalent_up_to_phase, find_local_z_dressing, gate_matrix, identity, kron_all,
    restricted_action, reversal_matrix, schedule_unitary, swap_matrix, EquivalenceReport, StateVector, C64, EQ_TOL,
};
use crate::error::{CompileError, SimError};
use crate::layout::{build_layout, CellRole, ChainLayout, LayoutConfig, Species};
use crate::pauli::{Pauli1, PauliString};
use crate::pulse::{schedule_cost, validate_schedule, Gate, GlobalPulse, Pair, PulseSchedule};
use crate::qec::{builtin_code, ec_round_reference_flips, CodeSpec};
use crate::stabsim::{Circuit, Tableau};

/// Maximum per-qubit operations allowed for an interface round trip.
pub const ROUND_TRIP_BUDGET: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Dense,
    Stabilizer,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GadgetCheck {
    pub gadget: String,
    pub level: u32,
    pub layout: String,
    pub backend: Backend,
    pub pass: bool,
    pub max_deviation: f64,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EquivalenceReport>,
}

#[derive(Debug, thiserror::Error)]
enum CheckError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Qec(#[from] crate::error::QecError),
    #[error(transparent)]
    Layout(#[from] crate::error::LayoutError),
}

struct Outcome {
    pass: bool,
    dev: f64,
    detail: String,
    report: Option<EquivalenceReport>,
}

impl Outcome {
    fn from_report(r: EquivalenceReport, detail: impl Into<String>) -> Self {
        Outcome { pass: r.equal_up_to_phase, dev: r.max_deviation, detail: detail.into(), report: Some(r) }
    }

    fn deviation(dev: f64, detail: impl Into<String>) -> Self {
        Outcome { pass: dev <= EQ_TOL, dev, detail: detail.into(), report: None }
    }

    fn and(self, o: Outcome) -> Outcome {
        Outcome {
            pass: self.pass && o.pass,
            dev: self.dev.max(o.dev),
            detail: [self.detail, o.detail].into_iter().filter(|s| !s.is_empty()).collect::<Vec<_>>().join("; "),
            report: self.report.or(o.report),
        }
    }
}

fn run(gadget: &str, level: u32, layout: &str, backend: Backend, f: impl FnOnce() -> Result<Outcome, CheckError>) -> GadgetCheck {
    let (pass, max_deviation, detail, report) = match f() {
        Ok(o) => (o.pass, o.dev, o.detail, o.report),
        Err(e) => (false, f64::INFINITY, e.to_string(), None),
    };
    GadgetCheck { gadget: gadget.to_string(), level, layout: layout.to_string(), backend, pass, max_deviation, detail, report }
}

fn pattern(p: &str) -> Result<ChainLayout, CheckError> {
    Ok(ChainLayout::from_pattern(p)?)
}

fn zrot(t: f64) -> [[C64; 2]; 2] {
    gate_matrix(Gate::Z(t))
}

fn id2() -> [[C64; 2]; 2] {
    zrot(0.0)
}

fn legal(r: &CompilationResult) -> Outcome {
    let v = validate_schedule(&r.schedule);
    Outcome { pass: v.legal, dev: 0.0, detail: if v.legal { String::new() } else { "illegal schedule".into() }, report: None }
}

/// Restricted action with leakage folded into the deviation.
fn restricted(s: &PulseSchedule, layout: &ChainLayout, free: &[usize], target: &Array2<C64>) -> Result<Outcome, CheckError> {
    let ra = restricted_action(s, layout, free)?;
    let rep = equivalent_up_to_phase(&ra.matrix, target, EQ_TOL)?;
    let leak = ra.leakage;
    let mut o = Outcome::from_report(rep, format!("leakage {:.1e}", leak));
    o.dev = o.dev.max(leak);
    o.pass &= leak <= EQ_TOL;
    Ok(o)
}

pub fn check_cz_ab(level: u32) -> GadgetCheck {
    run("cz_ab", level, "ACB", Backend::Dense, || {
        let layout = pattern("ACB")?;
        let r = compile_cz_ab(level);
        let u = schedule_unitary(&r.schedule, &layout)?;
        Ok(Outcome::from_report(equivalent_up_to_phase(&u, &cz_matrix(3, 0, 2), EQ_TOL)?, "CZ(A,B)⊗I_C").and(legal(&r)))
    })
}

/// Edge rotation on a 4-cell chain: `Z(θ)` on the C-adjacent A cell, identity elsewhere.
pub fn check_edge_rotation(theta: f64, level: u32) -> GadgetCheck {
    run("edge_rotation", level, "BCAA", Backend::Dense, || {
        let layout = pattern("BCAA")?;
        let r = compile_edge_rotation(theta, level);
        let u = schedule_unitary(&r.schedule, &layout)?;
        let want = kron_all(&[id2(), id2(), zrot(theta), id2()]);
        Ok(Outcome::from_report(equivalent_up_to_phase(&u, &want, EQ_TOL)?, format!("theta {}", theta)).and(legal(&r)))
    })
}

pub fn check_edge_phase(theta: f64) -> GadgetCheck {
    run("edge_phase", 0, "AACAA", Backend::Dense, || {
        let layout = pattern("AACAA")?;
        let r = compile_edge_phase(Species::A, theta)?;
        let want = kron_all(&[id2(), zrot(theta), zrot(theta), id2()]);
        Ok(restricted(&r.schedule, &layout, &[0, 1, 3, 4], &want)?.and(legal(&r)))
    })
}

pub fn check_decouple(theta: f64) -> GadgetCheck {
    run("decouple", 0, "ACBBCA", Backend::Dense, || {
        let layout = pattern("ACBBCA")?;
        let r = compile_decoupling(&[Pair::AC], theta)?;
        let u = schedule_unitary(&r.schedule, &layout)?;
        let n = layout.len();
        let z = |i: usize, q: usize| 1.0 - 2.0 * crate::densesim::cell_bit(n, i, q) as f64;
        let want = diagonal(n, |i| C64::from_polar(1.0, theta * (z(i, 0) * z(i, 1) + z(i, 4) * z(i, 5))));
        Ok(Outcome::from_report(equivalent_up_to_phase(&u, &want, EQ_TOL)?, "only A-C bonds evolve").and(legal(&r)))
    })
}

pub fn check_global_s() -> GadgetCheck {
    run("global_S", 0, "CAAAC", Backend::Dense, || {
        let layout = pattern("CAAAC")?;
        let r = compile_global_s(&[Species::A])?;
        let hh = gate_matrix(Gate::H);
        let want = kron_all(&[hh, hh, hh]).dot(&cz_matrix(3, 0, 1)).dot(&cz_matrix(3, 1, 2));
        Ok(restricted(&r.schedule, &layout, &[1, 2, 3], &want)?.and(legal(&r)))
    })
}

/// Mirror cycle on `C A^n C`: random product states come out reversed up to the recorded frame.
pub fn check_mirror(n: usize, seed: u64) -> GadgetCheck {
    let pat = format!("C{}C", "A".repeat(n));
    run("mirror_cycle", 0, &pat, Backend::Dense, || {
        let layout = pattern(&pat)?;
        let e = k_mirror(n)?;
        let r = compile_mirror_cycle(Species::A, 0, &layout)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let mut worst: f64 = 0.0;
        for _ in 0..4 {
            let qs: Vec<[C64; 2]> = (0..n).map(|_| StateVector::random_qubit(&mut rng)).collect();
            let mut input = vec![zero];
            input.extend(qs.iter().copied());
            input.push(zero);
            let hm = gate_matrix(Gate::H);
            let mut want = vec![zero];
            for q in qs.iter().rev() {
                want.push(match e.frame {
                    LocalFrame::Identity => *q,
                    LocalFrame::Hadamard => [hm[0][0] * q[0] + hm[0][1] * q[1], hm[1][0] * q[0] + hm[1][1] * q[1]],
                });
            }
            want.push(zero);
            let out = apply_schedule(&StateVector::product(&input), &r.schedule, &layout)?;
            worst = worst.max((1.0 - out.fidelity(&StateVector::product(&want))).abs());
        }
        Ok(Outcome::deviation(worst, format!("k = {} steps, frame {:?}", e.k, e.frame)).and(legal(&r)))
    })
}

/// Mirror cycle unitary on the A run equals the reversal permutation.
pub fn check_mirror_unitary(n: usize) -> GadgetCheck {
    let pat = format!("C{}C", "A".repeat(n));
    run("mirror_cycle", 0, &pat, Backend::Dense, || {
        let layout = pattern(&pat)?;
        let r = compile_mirror_cycle(Species::A, 0, &layout)?;
        let free: Vec<usize> = (1..=n).collect();
        let mut want = reversal_matrix(n, 0, n);
        if k_mirror(n)?.frame == LocalFrame::Hadamard {
            want = kron_all(&vec![gate_matrix(Gate::H); n]).dot(&want);
        }
        restricted(&r.schedule, &layout, &free, &want)
    })
}

/// Both SWAP forms equal SWAP on a bare interface; the round trip fits the budget.
pub fn check_swap() -> GadgetCheck {
    run("swap_interface", 0, "AC, CB, CAAC", Backend::Dense, || {
        let mut o = Outcome::deviation(0.0, "");
        for (pat, side) in [("AC", Side::AC), ("CB", Side::BC)] {
            let layout = pattern(pat)?;
            for r in [compile_swap_interface(side), compile_swap_interface_unfused(side)] {
                let u = schedule_unitary(&r.schedule, &layout)?;
                o = o.and(Outcome::from_report(equivalent_up_to_phase(&u, &swap_matrix(2, 0, 1), EQ_TOL)?, "").and(legal(&r)));
            }
        }
        let layout = pattern("CAAC")?;
        let rt = compile_swap_round_trip(Side::AC);
        let u = schedule_unitary(&rt.schedule, &layout)?;
        o = o.and(Outcome::from_report(equivalent_up_to_phase(&u, &identity(4), EQ_TOL)?, ""));
        let cost = schedule_cost(&rt.schedule, &layout).per_qubit[1];
        let within = cost <= ROUND_TRIP_BUDGET;
        o = o.and(Outcome {
            pass: within,
            dev: 0.0,
            detail: format!("round trip costs {} ops on the transported qubit (budget {})", cost, ROUND_TRIP_BUDGET),
            report: None,
        });
        Ok(o)
    })
}

/// Random entangled data, random product syndromes; afterwards syndromes and C are |0⟩ and data is untouched.
fn reset_check(r: &CompilationResult, layout: &ChainLayout, seed: u64) -> Result<Outcome, CheckError> {
    let n = layout.len();
    let syn = layout.c_adjacent(Species::A);
    let data = layout.cells_with_role(CellRole::Data);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = StateVector::random(data.len(), &mut rng);
    let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let mut qs = vec![zero; n];
    syn.iter().for_each(|&q| qs[q] = StateVector::random_qubit(&mut rng));
    let rest = StateVector::product(&qs);
    // |data⟩ on data cells times the product state elsewhere
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    for (i, a) in rest.amplitudes().iter().enumerate() {
        if data.iter().any(|&q| crate::densesim::cell_bit(n, i, q) == 1) || a.norm() == 0.0 {
            continue;
        }
        for (j, b) in d.amplitudes().iter().enumerate() {
            amps[i | embed_index(n, &data, j)] += a * b;
        }
    }
    let input = StateVector::from_amplitudes(n, amps)?;
    let out = apply_schedule(&input, &r.schedule, layout)?;
    let mut want = vec![C64::new(0.0, 0.0); 1 << n];
    for (j, b) in d.amplitudes().iter().enumerate() {
        want[embed_index(n, &data, j)] = *b;
    }
    let f = out.fidelity(&StateVector::from_amplitudes(n, want)?);
    Ok(Outcome::deviation((1.0 - f).abs(), format!("data fidelity {:.12}", f)).and(legal(r)))
}

pub fn check_syndrome_reset(level: u32, ancilla: bool) -> GadgetCheck {
    let pat = if level == 0 { "CAAACBBCAAAC" } else { "AACBBBBCAA" };
    let name = if ancilla { "ancilla_reset" } else { "syndrome_reset" };
    run(name, level, pat, Backend::Dense, || {
        let layout = pattern(pat)?;
        let r = if ancilla { compile_ancilla_reset(level, &layout)? } else { compile_syndrome_reset(level, &layout)? };
        reset_check(&r, &layout, 11 + level as u64)
    })
}

/// Phase gadget equals a dressed CZ and the composed gadget equals CZ, on the facing edge cells.
pub fn check_interblock(level: u32) -> GadgetCheck {
    let pat = if level == 0 { "ACBBCA" } else { "ACBBBBCA" };
    run("interblock_cz", level, pat, Backend::Dense, || {
        let layout = pattern(pat)?;
        let edges = [0, layout.len() - 1];
        let ph = compile_interblock_phase(level, &layout)?;
        let ra = restricted_action(&ph.schedule, &layout, &edges)?;
        let dressed = find_local_z_dressing(&ra.matrix, &cz_matrix(2, 0, 1), &[0, 1], 2, EQ_TOL)?;
        let mut o = Outcome::from_report(dressed, format!("phase gadget leakage {:.1e}", ra.leakage));
        o.pass &= ra.leakage <= EQ_TOL;
        let cz = compile_interblock_cz(level, &layout)?;
        Ok(o.and(restricted(&cz.schedule, &layout, &edges, &cz_matrix(2, 0, 1))?).and(legal(&cz)))
    })
}

fn steane_layout() -> Result<(CodeSpec, ChainLayout), CheckError> {
    let code = builtin_code("steane")?;
    let layout = build_layout(&LayoutConfig::new(26, 0, 1, "steane").capped())?;
    Ok((code, layout))
}

/// Dense on a bare block; tableau logical-CZ check on a Steane block.
pub fn check_transversal_cz(code_id: &str) -> GadgetCheck {
    match code_id {
        "bare" => run("intrablock_transversal_cz", 0, "CAAAAAAC", Backend::Dense, || {
            let code = builtin_code("bare")?;
            let layout = pattern("CAAAAAAC")?;
            let r = compile_intrablock_transversal_cz(&code, &layout)?;
            let p = code_placement(&code, &layout)?;
            let free: Vec<usize> = (1..7).collect();
            Ok(restricted(&r.schedule, &layout, &free, &cz_matrix(6, p[0][0] - 1, p[1][0] - 1))?.and(legal(&r)))
        }),
        _ => run("intrablock_transversal_cz", 0, "C A^26 C (steane)", Backend::Stabilizer, || {
            let (code, layout) = steane_layout()?;
            let r = compile_intrablock_transversal_cz(&code, &layout)?;
            let c = Circuit::new(std::slice::from_ref(&r.schedule), &layout, &code)?;
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let (lx, lz) = (&code.logical_x[0], &code.logical_z[0]);
            let mut bad = 0;
            for plus in [(true, true), (true, false), (false, true), (false, false)] {
                let mut t = c.encoded_zero();
                for (l, on) in [plus.0, plus.1].into_iter().enumerate() {
                    if on && t.measure(&c.on_logical(lx, l), &mut rng).0 {
                        t.apply_pauli(&c.on_logical(lz, l));
                    }
                }
                c.evolve(&mut t, &mut rng)?;
                for l in 0..2 {
                    let on = if l == 0 { plus.0 } else { plus.1 };
                    let want = if on { c.on_logical(lx, l).mul(&c.on_logical(lz, 1 - l)) } else { c.on_logical(lz, l) };
                    bad += (t.expectation(&want) != Some(false)) as usize;
                    bad += code.stabilizers.iter().filter(|g| t.expectation(&c.on_logical(g, l)) != Some(false)).count();
                }
            }
            Ok(Outcome { pass: bad == 0, dev: bad as f64, detail: format!("{} logical/stabilizer expectations wrong", bad), report: None }
                .and(legal(&r)))
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EcSoundness {
    pub weight1_cases: usize,
    pub weight1_failures: usize,
    pub compared: usize,
    pub mismatches: usize,
    pub trivial_reference_syndromes: bool,
}

/// Compiled Steane round through the frame simulator against the circuit-free reference,
/// for every injection of weight ≤ 2 on either logical of the block.
pub fn ec_soundness() -> Result<EcSoundness, String> {
    let (code, layout) = steane_layout().map_err(|e| e.to_string())?;
    let s = compile_ec_round(&code, 0, &layout).map_err(|e| e.to_string())?.schedule;
    let c = Circuit::new(&[s], &layout, &code).map_err(|e| e.to_string())?;
    let trivial = c.reference_in_code() && c.reference_syndromes().iter().flatten().all(|s| s.is_trivial());
    let mut out = EcSoundness { weight1_cases: 0, weight1_failures: 0, compared: 0, mismatches: 0, trivial_reference_syndromes: trivial };
    for w in 0..=2usize {
        for e in paulis_of_weight(code.n, w) {
            let want = ec_round_reference_flips(&code, &e)[0];
            for l in 0..2 {
                let rec = c.inject(&[(0, c.on_logical(&e, l))]);
                let got = rec.failures[l];
                if w == 1 {
                    out.weight1_cases += 1;
                    out.weight1_failures += got.any() as usize;
                }
                out.compared += 1;
                out.mismatches += ((got.x_flip, got.z_flip) != want || rec.failures[1 - l].any()) as usize;
            }
        }
    }
    Ok(out)
}

fn paulis_of_weight(n: usize, w: usize) -> Vec<PauliString> {
    let mut out = Vec::new();
    for mask in 0u64..1 << n {
        if mask.count_ones() as usize != w {
            continue;
        }
        let sites: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        for k in 0..3usize.pow(w as u32) {
            let mut p = PauliString::identity(n);
            for (j, &q) in sites.iter().enumerate() {
                p.set(q, [Pauli1::X, Pauli1::Y, Pauli1::Z][k / 3usize.pow(j as u32) % 3]);
            }
            out.push(p);
        }
    }
    out
}

pub fn check_ec_round(code_id: &str) -> GadgetCheck {
    match code_id {
        "bare" => run("ec_round", 0, "CAAC", Backend::Dense, || {
            let layout = pattern("CAAC")?;
            let r = compile_ec_round(&builtin_code("bare")?, 0, &layout)?;
            Ok(restricted(&r.schedule, &layout, &[1, 2], &identity(2))?.and(legal(&r)))
        }),
        _ => {
            let mut c = run("ec_round", 0, "C A^26 C (steane)", Backend::Stabilizer, || Ok(Outcome::deviation(0.0, "")));
            match ec_soundness() {
                Ok(s) => {
                    c.pass = s.weight1_failures == 0 && s.mismatches == 0 && s.trivial_reference_syndromes;
                    c.max_deviation = s.mismatches as f64;
                    c.detail = format!(
                        "{} weight-1 injections, {} failures; {} of {} weight<=2 cases differ from the reference",
                        s.weight1_cases, s.weight1_failures, s.mismatches, s.compared
                    );
                }
                Err(e) => {
                    c.pass = false;
                    c.detail = e;
                }
            }
            c
        }
    }
}

/// Default check for one gadget, as run by `verify`.
pub fn verify_gadget(name: GadgetName, level: u32, theta: Option<f64>, code: &str) -> Vec<GadgetCheck> {
    let unsupported = |msg: String| {
        vec![GadgetCheck {
            gadget: name.to_string(),
            level,
            layout: String::new(),
            backend: Backend::Dense,
            pass: false,
            max_deviation: f64::INFINITY,
            detail: msg,
            report: None,
        }]
    };
    let flat = |level: u32| -> Option<Vec<GadgetCheck>> {
        (level > 0).then(|| {
            // gadgets without level structure still go through compile() to reject bad levels
            let layout = ChainLayout::from_pattern("CAAC").expect("valid");
            match compile(&GadgetSpec::new(name, level), &layout) {
                Ok(_) => Vec::new(),
                Err(e) => unsupported(e.to_string()),
            }
        })
    };
    match name {
        GadgetName::CzAb => vec![check_cz_ab(level)],
        GadgetName::EdgeRotation => vec![check_edge_rotation(theta.unwrap_or(FRAC_PI_2), level)],
        GadgetName::EdgePhase => flat(level).filter(|v| !v.is_empty()).unwrap_or_else(|| vec![check_edge_phase(theta.unwrap_or(FRAC_PI_4))]),
        GadgetName::Decouple => flat(level).filter(|v| !v.is_empty()).unwrap_or_else(|| vec![check_decouple(theta.unwrap_or(FRAC_PI_4))]),
        GadgetName::GlobalS => flat(level).filter(|v| !v.is_empty()).unwrap_or_else(|| vec![check_global_s()]),
        GadgetName::MirrorCycle if level == 0 => vec![check_mirror_unitary(5), check_mirror(5, 7)],
        GadgetName::SwapInterface => flat(level).filter(|v| !v.is_empty()).unwrap_or_else(|| vec![check_swap()]),
        GadgetName::SyndromeReset if level <= 1 => vec![check_syndrome_reset(level, false)],
        GadgetName::AncillaReset if level <= 1 => vec![check_syndrome_reset(level, true)],
        GadgetName::InterblockCz if level <= 1 => vec![check_interblock(level)],
        GadgetName::IntrablockTransversalCz if level == 0 => vec![check_transversal_cz(code)],
        GadgetName::EcRound if level == 0 => vec![check_ec_round(code)],
        _ => unsupported(format!("no verification for {} at level {}", name, level)),
    }
}

/// Full suite: every gadget, both levels where a level-1 form exists.
pub fn selftest() -> Vec<GadgetCheck> {
    let mut out = vec![
        check_global_s(),
        check_mirror_unitary(4),
        check_mirror(6, 3),
        check_decouple(0.37),
        check_edge_phase(0.61),
        check_edge_rotation(0.77, 0),
        check_cz_ab(0),
        check_swap(),
        check_syndrome_reset(0, false),
        check_syndrome_reset(1, false),
        check_syndrome_reset(0, true),
        check_interblock(0),
        check_interblock(1),
        check_transversal_cz("bare"),
        check_transversal_cz("steane"),
        check_ec_round("bare"),
        check_ec_round("steane"),
    ];
    out.extend(stabilizer_agreement(1));
    out
}

/// A Clifford gadget instance with the cells a random input may occupy.
struct Instance {
    name: &'static str,
    pattern: &'static str,
    schedule: Result<PulseSchedule, CheckError>,
    /// Cells that start in a random entangled stabilizer state.
    entangled: Vec<usize>,
    /// Cells that start in random single-qubit stabilizer states.
    product: Vec<usize>,
}

fn instances() -> Vec<Instance> {
    let a = |pat: &str| ChainLayout::from_pattern(pat).expect("valid pattern");
    let non_c = |pat: &str| (0..pat.len()).filter(|&i| &pat[i..i + 1] != "C").collect::<Vec<_>>();
    let wire_free = |pat: &str| (0..pat.len()).filter(|&i| &pat[i..i + 1] == "A").collect::<Vec<_>>();
    let s = |r: Result<CompilationResult, CompileError>| r.map(|r| r.schedule).map_err(CheckError::from);
    let reset_pat = "CAAACBBCAAAC";
    let rl = a(reset_pat);
    let syn = rl.c_adjacent(Species::A);
    let data = rl.cells_with_role(CellRole::Data);
    let bare = builtin_code("bare").expect("builtin");
    vec![
        Instance { name: "global_S", pattern: "CAAAAC", schedule: s(compile_global_s(&[Species::A])), entangled: non_c("CAAAAC"), product: vec![] },
        Instance {
            name: "mirror_cycle",
            pattern: "CAAAAAC",
            schedule: s(compile_mirror_cycle(Species::A, 0, &a("CAAAAAC"))),
            entangled: non_c("CAAAAAC"),
            product: vec![],
        },
        Instance { name: "decouple", pattern: "ACBBCA", schedule: s(compile_decoupling(&[Pair::AC], FRAC_PI_4)), entangled: (0..6).collect(), product: vec![] },
        Instance { name: "edge_phase", pattern: "AACAA", schedule: s(compile_edge_phase(Species::A, FRAC_PI_4)), entangled: non_c("AACAA"), product: vec![] },
        Instance { name: "edge_rotation", pattern: "BCAA", schedule: Ok(compile_edge_rotation(FRAC_PI_2, 0).schedule), entangled: (0..4).collect(), product: vec![] },
        Instance { name: "cz_ab", pattern: "AACBB", schedule: Ok(compile_cz_ab(0).schedule), entangled: (0..5).collect(), product: vec![] },
        Instance { name: "swap_interface", pattern: "CAAAC", schedule: Ok(compile_swap_interface(Side::AC).schedule), entangled: non_c("CAAAC"), product: vec![] },
        Instance { name: "swap_interface", pattern: "ACBBBC", schedule: Ok(compile_swap_interface(Side::BC).schedule), entangled: non_c("ACBBBC"), product: vec![] },
        Instance { name: "syndrome_reset", pattern: reset_pat, schedule: s(compile_syndrome_reset(0, &rl)), entangled: data.clone(), product: syn.clone() },
        Instance { name: "ancilla_reset", pattern: reset_pat, schedule: s(compile_ancilla_reset(0, &rl)), entangled: data, product: syn },
        Instance {
            name: "intrablock_transversal_cz",
            pattern: "CAAAAAAC",
            schedule: s(compile_intrablock_transversal_cz(&bare, &a("CAAAAAAC"))),
            entangled: wire_free("CAAAAAAC"),
            product: vec![],
        },
        Instance { name: "ec_round", pattern: "CAAC", schedule: s(compile_ec_round(&bare, 0, &a("CAAC"))), entangled: non_c("CAAC"), product: vec![] },
    ]
}

/// Gadgets whose pulse-level intermediate states are not stabilizer states.
pub const NON_CLIFFORD_GADGETS: [&str; 1] = ["interblock_cz"];

fn random_input(inst: &Instance, n: usize, rng: &mut ChaCha8Rng) -> (Tableau, StateVector) {
    let mut t = Tableau::new(n);
    let mut psi = StateVector::zero(n);
    let hm = gate_matrix(Gate::H);
    let sm = gate_matrix(Gate::Z(-FRAC_PI_4));
    let h = |q: usize, t: &mut Tableau, psi: &mut StateVector| {
        t.h(q);
        psi.apply_1q(q, &hm);
    };
    let s = |q: usize, t: &mut Tableau, psi: &mut StateVector| {
        t.s(q);
        psi.apply_1q(q, &sm);
    };
    for &q in &inst.product {
        for _ in 0..rng.gen_range(0..4) {
            if rng.gen() {
                h(q, &mut t, &mut psi)
            } else {
                s(q, &mut t, &mut psi)
            }
        }
    }
    let e = &inst.entangled;
    for &q in e {
        h(q, &mut t, &mut psi);
    }
    for _ in 0..4 * e.len() {
        match rng.gen_range(0..3) {
            0 => h(e[rng.gen_range(0..e.len())], &mut t, &mut psi),
            1 => s(e[rng.gen_range(0..e.len())], &mut t, &mut psi),
            _ if e.len() > 1 => {
                let a = e[rng.gen_range(0..e.len())];
                let b = e[rng.gen_range(0..e.len())];
                if a != b {
                    t.cz(a, b);
                    psi.apply_diagonal(|i| {
                        if crate::densesim::cell_bit(n, i, a) & crate::densesim::cell_bit(n, i, b) == 1 {
                            C64::new(-1.0, 0.0)
                        } else {
                            C64::new(1.0, 0.0)
                        }
                    });
                }
            }
            _ => {}
        }
    }
    (t, psi)
}

/// Tableau and state vector evolved side by side from random stabilizer inputs; every
/// output stabilizer must be a +1 observable of the dense state (equal stabilizer groups).
pub fn stabilizer_agreement(samples: usize) -> Vec<GadgetCheck> {
    let mut out = Vec::new();
    for (k, inst) in instances().into_iter().enumerate() {
        out.push(run(inst.name, 0, inst.pattern, Backend::Stabilizer, || {
            let layout = pattern(inst.pattern)?;
            let n = layout.len();
            let schedule = inst.schedule.as_ref().map_err(|e| SimError::Input(e.to_string()))?;
            let ops = lower(&schedule.pulses, &layout)?;
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + k as u64);
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let (mut t, psi) = random_input(&inst, n, &mut rng);
                for o in &ops {
                    t.apply_op(&o.op, &layout, &mut rng)?;
                }
                let dense = apply_schedule(&psi, schedule, &layout)?;
                for g in t.stabilizers() {
                    worst = worst.max((dense.expectation(&g) - C64::new(1.0, 0.0)).norm());
                }
            }
            Ok(Outcome::deviation(worst, format!("{} random stabilizer inputs, {} qubits", samples, n)))
        }));
    }
    for name in NON_CLIFFORD_GADGETS {
        out.push(GadgetCheck {
            gadget: name.to_string(),
            level: 0,
            layout: "ACBBCA".into(),
            backend: Backend::Stabilizer,
            pass: true,
            max_deviation: 0.0,
            detail: "skipped: contains exp(iπ/8·ZZ) windows, not simulable by tableau".into(),
            report: None,
        });
    }
    out
}

/// Every compiled gadget passes legality; a site-addressed pulse is rejected.
pub fn legality_sweep() -> (usize, usize, bool) {
    let mut checked = 0;
    let mut illegal = 0;
    let mut push = |r: Result<CompilationResult, CompileError>| {
        if let Ok(r) = r {
            checked += 1;
            illegal += !validate_schedule(&r.schedule).legal as usize;
        }
    };
    let layouts = ["CAAAC", "ACBBCA", "CAAACBBCAAAC", "AACBBBBCAA", "CAAAAAAC"];
    for pat in layouts {
        let layout = ChainLayout::from_pattern(pat).expect("valid");
        for g in GadgetName::ALL {
            for level in 0..2 {
                let mut spec = GadgetSpec::new(g, level);
                spec.params.code = "bare".into();
                push(compile(&spec, &layout));
            }
        }
    }
    if let Ok((code, layout)) = steane_layout() {
        push(compile_ec_round(&code, 0, &layout));
        push(compile_intrablock_transversal_cz(&code, &layout));
    }
    let mut mutated = compile_cz_ab(0).schedule;
    mutated.pulses.insert(3, GlobalPulse::SiteAddressed { site: 1, gate: Gate::X });
    let caught = !validate_schedule(&mutated).legal;
    (checked, illegal, caught)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_checks_pass() {
        for c in [check_cz_ab(0), check_edge_rotation(1.3, 0), check_edge_phase(-0.4), check_decouple(0.9), check_global_s(), check_swap()] {
            assert!(c.pass, "{:?}", c);
        }
        for n in 1..=5 {
            assert!(check_mirror_unitary(n).pass, "n = {}", n);
        }
    }

    #[test]
    fn wrong_target_fails() {
        let c = run("x", 0, "ACB", Backend::Dense, || {
            let u = schedule_unitary(&compile_cz_ab(0).schedule, &pattern("ACB")?)?;
            Ok(Outcome::from_report(equivalent_up_to_phase(&u, &identity(3), EQ_TOL)?, ""))
        });
        assert!(!c.pass && c.max_deviation > 0.5);
    }

    #[test]
    fn agreement_on_small_gadgets() {
        for c in stabilizer_agreement(2) {
            assert!(c.pass, "{:?}", c);
        }
    }

    #[test]
    fn unsupported_levels_fail_cleanly() {
        let v = verify_gadget(GadgetName::SyndromeReset, 3, None, "steane");
        assert!(!v[0].pass);
        assert!(verify_gadget(GadgetName::CzAb, 0, None, "steane")[0].pass);
    }

    #[test]
    fn legality() {
        let (checked, illegal, caught) = legality_sweep();
        assert!(checked > 20);
        assert_eq!(illegal, 0);
        assert!(caught);
    }
}
