//! Logical error rates, κ fitting, operation counting and the recursion projection.

use serde::Serialize;

use crate::compiler::{compile_ec_round, compile_intrablock_transversal_cz, EcPlan};
use crate::error::ThresholdError;
use crate::exec::Executor;
use crate::layout::{build_layout, min_block_len, ChainLayout, LayoutConfig};
use crate::pulse::PulseSchedule;
use crate::qec::{builtin_code, CodeSpec};
use crate::stabsim::{Circuit, FaultTable, NoiseModel};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Fit window: estimates below this rate...
pub const WINDOW_MAX_P: f64 = 1e-2;
/// ...backed by at least this many failures.
pub const WINDOW_MIN_FAILURES: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub eps: f64,
    /// Failure rate per round.
    pub p_logical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub failures: u64,
    pub rounds: usize,
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = Z95 * Z95;
    let den = 1.0 + z2 / n;
    let mid = (p + z2 / (2.0 * n)) / den;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / den;
    ((mid - half).max(0.0), (mid + half).min(1.0))
}

fn per_round(p: f64, rounds: usize) -> f64 {
    if rounds <= 1 {
        p
    } else {
        1.0 - (1.0 - p).powf(1.0 / rounds as f64)
    }
}

/// Standard layout for a code: one capped block of the smallest usable length.
/// Codes without a built-in role map get `C A^(2n+2) C`.
pub fn default_layout(code: &CodeSpec) -> Result<ChainLayout, ThresholdError> {
    match min_block_len(&code.name) {
        Ok(n) => Ok(build_layout(&LayoutConfig::new(n, 0, 1, &code.name).capped()).map_err(crate::error::CompileError::from)?),
        Err(_) => Ok(ChainLayout::from_pattern(&format!("C{}C", "A".repeat(2 * code.n + 2))).map_err(crate::error::CompileError::from)?),
    }
}

/// Compiled EC rounds ready for sampling. Level 0 is an unencoded qubit,
/// level 1 the given code; higher levels are projected, not simulated.
#[derive(Debug, Clone)]
pub struct RateEstimator {
    table: FaultTable,
    rounds: usize,
}

impl RateEstimator {
    pub fn new(code: &CodeSpec, level: u32, rounds: usize) -> Result<Self, ThresholdError> {
        if level >= 2 {
            return Err(ThresholdError::OutOfScope(format!("level {} Monte Carlo (use the recursion projection)", level)));
        }
        if rounds == 0 {
            return Err(ThresholdError::OutOfScope("at least one round is required".into()));
        }
        let code = if level == 0 { builtin_code("bare")? } else { code.clone() };
        let layout = default_layout(&code)?;
        let s = compile_ec_round(&code, 0, &layout)?.schedule;
        let circuit = Circuit::new(&vec![s; rounds], &layout, &code)?;
        Ok(RateEstimator { table: FaultTable::new(&circuit, 0)?, rounds })
    }

    pub fn table(&self) -> &FaultTable {
        &self.table
    }

    pub fn estimate(&self, eps: f64, trials: u64, seed: u64, exec: Executor) -> Result<RatePoint, ThresholdError> {
        if trials == 0 {
            return Err(ThresholdError::OutOfScope("trials must be positive".into()));
        }
        let noise = NoiseModel::new(eps, seed)?;
        let failures = self.table.count_failures(&noise, trials, exec);
        let (lo, hi) = wilson(failures, trials);
        Ok(RatePoint {
            eps,
            p_logical: per_round(failures as f64 / trials as f64, self.rounds),
            ci_low: per_round(lo, self.rounds),
            ci_high: per_round(hi, self.rounds),
            trials,
            failures,
            rounds: self.rounds,
        })
    }

    /// One point per eps; point `i` uses the stream family `seed + i`.
    pub fn sweep(&self, eps: &[f64], trials: u64, seed: u64, exec: Executor) -> Result<Vec<RatePoint>, ThresholdError> {
        eps.iter().enumerate().map(|(i, &e)| self.estimate(e, trials, seed.wrapping_add(i as u64), exec)).collect()
    }
}

pub fn estimate_logical_rate(eps: f64, trials: u64, code: &CodeSpec, level: u32, rounds: usize, seed: u64) -> Result<RatePoint, ThresholdError> {
    RateEstimator::new(code, level, rounds)?.estimate(eps, trials, seed, Executor::default())
}

/// Least squares `log p = log κ + s·log ε`; returns (κ, s).
pub fn fit_kappa(points: &[(f64, f64)]) -> Result<(f64, f64), ThresholdError> {
    if points.len() < 3 {
        return Err(ThresholdError::DegenerateFit(format!("{} points, need at least 3", points.len())));
    }
    if let Some(&(e, p)) = points.iter().find(|(e, p)| !(*e > 0.0 && *p > 0.0)) {
        return Err(ThresholdError::DegenerateFit(format!("non-positive point ({}, {})", e, p)));
    }
    let mut eps: Vec<f64> = points.iter().map(|p| p.0).collect();
    eps.sort_by(f64::total_cmp);
    if eps.windows(2).any(|w| w[0] == w[1]) {
        return Err(ThresholdError::DegenerateFit("repeated eps".into()));
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(e, p)| (e.ln(), p.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(((my - slope * mx).exp(), slope))
}

/// Indices of points in the asymptotic window.
pub fn fit_window(points: &[RatePoint]) -> Vec<usize> {
    (0..points.len()).filter(|&i| points[i].p_logical < WINDOW_MAX_P && points[i].failures >= WINDOW_MIN_FAILURES).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NCount {
    pub n: usize,
    pub kappa_bound: usize,
    /// Gadget with the largest operation count.
    pub gadget: String,
}

/// `N = max gadget count + EC count`, `κ_bound = N(N−1)/2`.
pub fn count_n(gadgets: &[(String, usize)], ec_ops: usize) -> Result<NCount, ThresholdError> {
    let (name, ops) = gadgets
        .iter()
        .max_by_key(|g| g.1)
        .ok_or_else(|| ThresholdError::IncompleteGadgetSet("no fault-tolerant gadget".into()))?;
    let n = ops + ec_ops;
    Ok(NCount { n, kappa_bound: n * n.saturating_sub(1) / 2, gadget: name.clone() })
}

/// Level-(L−1) operations of an EC round: per generator one coupling per
/// support qubit, three ancilla rotations and one reset; one transport if the
/// round closes with an orientation fix.
pub fn ec_round_ops(code: &CodeSpec, parity_fix: bool) -> usize {
    code.stabilizers.iter().map(|g| g.weight() + 4).sum::<usize>() + parity_fix as usize
}

/// N for the compiled gadget set at levels 1 and 2. A level-2 gadget is the
/// level-1 circuit with every qubit replaced by a level-1 block, so both counts
/// come from the same compiled schedules; a mismatch is reported.
pub fn count_n_for_code(code: &CodeSpec) -> Result<NCount, ThresholdError> {
    let layout = default_layout(code)?;
    let ec = compile_ec_round(code, 0, &layout)?;
    let plan = EcPlan::from_schedule(&ec.schedule).ok_or_else(|| ThresholdError::IncompleteGadgetSet("EC round carries no plan".into()))?;
    let cz = compile_intrablock_transversal_cz(code, &layout).map_err(|e| ThresholdError::IncompleteGadgetSet(e.to_string()))?;
    let count = |cz: &PulseSchedule, plan: &EcPlan| {
        let cz_ops = serde_json::from_value::<Vec<Vec<usize>>>(cz.meta.params["logicals"].clone()).map(|l| l[0].len()).unwrap_or(code.n);
        count_n(&[("intrablock_transversal_cz".to_string(), cz_ops)], ec_round_ops(code, plan.parity_fix))
    };
    let l1 = count(&cz.schedule, &plan)?;
    let l2 = count(&cz.schedule, &plan)?;
    if l1 != l2 {
        return Err(ThresholdError::IncompleteGadgetSet(format!("N differs between levels: {} vs {}", l1.n, l2.n)));
    }
    Ok(l1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    pub kappa: f64,
    pub eps: f64,
    /// `P_L` for `L = 0..=L_max`, analytic.
    pub levels: Vec<f64>,
    pub below_threshold: bool,
}

/// `P_L = κ^(2^L − 1) · ε^(2^L)`.
pub fn recursion_projection(kappa: f64, eps: f64, l_max: u32) -> Result<Projection, ThresholdError> {
    if kappa.is_nan() || kappa <= 0.0 || !(0.0..=1.0).contains(&eps) {
        return Err(ThresholdError::OutOfScope(format!("kappa {} eps {}", kappa, eps)));
    }
    let levels = (0..=l_max)
        .map(|l| {
            let t = 2f64.powi(l as i32);
            // (κε)^(2^L) / κ keeps the fixed point exact
            (kappa * eps).powf(t) / kappa
        })
        .collect();
    Ok(Projection { kappa, eps, levels, below_threshold: eps < 1.0 / kappa })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub code: String,
    pub points: Vec<RatePoint>,
    pub window: Vec<usize>,
    pub slope: Option<f64>,
    pub kappa_fit: Option<f64>,
    pub fit_error: Option<String>,
    #[serde(rename = "N")]
    pub n: usize,
    pub kappa_bound: usize,
    pub kappa_within_bound: Option<bool>,
    /// Single faults (location, Pauli) that alone flip the tracked logical.
    pub malignant_single_faults: usize,
    pub fault_locations: usize,
    /// Analytic `P_L`, never simulated.
    pub projected: Option<Projection>,
}

pub fn threshold_report(code: &CodeSpec, points: Vec<RatePoint>, estimator: &RateEstimator) -> Result<ThresholdReport, ThresholdError> {
    let nc = count_n_for_code(code)?;
    let window = fit_window(&points);
    let pts: Vec<(f64, f64)> = window.iter().map(|&i| (points[i].eps, points[i].p_logical)).collect();
    let (kappa_fit, slope, fit_error) = match fit_kappa(&pts) {
        Ok((k, s)) => (Some(k), Some(s), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    let projected = match (kappa_fit, window.first()) {
        (Some(k), Some(&i)) => Some(recursion_projection(k, points[i].eps, 5)?),
        _ => None,
    };
    Ok(ThresholdReport {
        code: code.name.clone(),
        window,
        slope,
        kappa_fit,
        fit_error,
        n: nc.n,
        kappa_bound: nc.kappa_bound,
        kappa_within_bound: kappa_fit.map(|k| k <= nc.kappa_bound as f64),
        malignant_single_faults: estimator.table().malignant_single_faults(),
        fault_locations: estimator.table().total_locations(),
        projected,
        points,
    })
}

/// CSV with columns eps, p, ci_low, ci_high, trials.
pub fn points_csv(points: &[RatePoint]) -> Result<String, ThresholdError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| ThresholdError::OutOfScope(format!("csv: {}", e));
    w.write_record(["eps", "p", "ci_low", "ci_high", "trials"]).map_err(io)?;
    for p in points {
        w.write_record([p.eps.to_string(), p.p_logical.to_string(), p.ci_low.to_string(), p.ci_high.to_string(), p.trials.to_string()])
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| ThresholdError::OutOfScope(format!("csv: {}", e)))?;
    Ok(String::from_utf8(bytes).expect("ascii"))
}
