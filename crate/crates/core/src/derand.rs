//! Derandomized Pauli measurement planning and hit-based energy estimation.
//!
//! The greedy pass fixes one measurement slot at a time, qubit by qubit,
//! choosing the axis that minimizes a confidence-bound score
//! `sum_p exp(-(eps_p^2 / 2) V_p)` where `V_p` accumulates, over slots, the
//! product over the term's support of 1 (assigned and matching), 0
//! (assigned and mismatching) or 1/3 (unassigned). Per-term accuracies are
//! sharpened for heavy coefficients, `eps_p = eps * max|c| / |c_p|`, so
//! large terms collect proportionally more hits.

use crate::dynamics::{sample_bitstrings, QuantumState, ShotRecord};
use crate::error::{Error, Result};
use crate::paulialg::{PauliAxis, PauliHamiltonian, PauliString};
use crate::scalar::{Scalar, C};
use std::collections::HashMap;
use std::fmt;

/// Measurement axis per qubit; no identity entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MeasurementBasis {
    pub axes: Vec<PauliAxis>,
}

impl MeasurementBasis {
    pub fn new(axes: Vec<PauliAxis>) -> Result<Self> {
        if axes.iter().any(|a| *a == PauliAxis::I) {
            return Err(Error::InvalidInput("measurement basis cannot contain identity".into()));
        }
        Ok(Self { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    /// A basis hits an observable when its axes match the observable on the
    /// observable's entire support.
    pub fn hits(&self, observable: &PauliString) -> Result<bool> {
        if observable.len() != self.axes.len() {
            return Err(Error::DimensionMismatch(format!(
                "basis length {} vs observable length {}",
                self.axes.len(),
                observable.len()
            )));
        }
        Ok(observable.support().all(|q| self.axes[q] == observable.axis(q)))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let axes: Option<Vec<PauliAxis>> = text.chars().map(PauliAxis::from_symbol).collect();
        let axes =
            axes.ok_or_else(|| Error::InvalidInput(format!("bad basis string '{text}'")))?;
        Self::new(axes)
    }
}

impl fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.axes {
            write!(f, "{}", a.symbol())?;
        }
        Ok(())
    }
}

/// Ordered distinct bases with shot counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementPlan {
    pub bases: Vec<MeasurementBasis>,
    pub repetitions: Vec<usize>,
    /// indices of Hamiltonian terms no basis hits (excluding the constant)
    pub uncovered_terms: Vec<usize>,
}

impl MeasurementPlan {
    pub fn total_shots(&self) -> usize {
        self.repetitions.iter().sum()
    }

    pub fn distinct_bases(&self) -> usize {
        self.bases.len()
    }

    /// Rescale the shot allocation to a new total, proportionally to the
    /// existing repetitions with the remainder going to the earliest bases.
    pub fn reallocate(&self, budget: usize) -> Self {
        let old_total = self.total_shots().max(1);
        let mut reps: Vec<usize> =
            self.repetitions.iter().map(|&r| r * budget / old_total).collect();
        let mut assigned: usize = reps.iter().sum();
        let len = reps.len();
        let mut i = 0;
        while assigned < budget {
            reps[i % len] += 1;
            assigned += 1;
            i += 1;
        }
        Self { bases: self.bases.clone(), repetitions: reps, uncovered_terms: self.uncovered_terms.clone() }
    }

    /// Text serialization: `shots: n` then one axis string per line repeated
    /// count lines are collapsed as `BASIS x count`.
    pub fn to_text(&self) -> String {
        let mut out = format!("shots: {}\n", self.total_shots());
        for (b, r) in self.bases.iter().zip(self.repetitions.iter()) {
            out.push_str(&format!("{b} x {r}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut bases = Vec::new();
        let mut reps = Vec::new();
        let mut declared: Option<usize> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("shots:") {
                declared = Some(rest.trim().parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: "bad shot count".into(),
                })?);
                continue;
            }
            let (basis_txt, count) = match line.split_once(" x ") {
                Some((b, c)) => (
                    b.trim(),
                    c.trim().parse::<usize>().map_err(|_| Error::Parse {
                        line: i + 1,
                        msg: "bad repetition count".into(),
                    })?,
                ),
                None => (line, 1),
            };
            bases.push(MeasurementBasis::parse(basis_txt).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?);
            reps.push(count);
        }
        let plan = Self { bases, repetitions: reps, uncovered_terms: Vec::new() };
        if let Some(d) = declared {
            if d != plan.total_shots() {
                return Err(Error::InvalidInput(format!(
                    "declared {d} shots but lines sum to {}",
                    plan.total_shots()
                )));
            }
        }
        Ok(plan)
    }
}

/// Shot bound from Hoeffding's inequality: `ceil((2/eps^2) ln(2/delta))`.
pub fn hoeffding_shots(eps: f64, delta: f64) -> Result<usize> {
    if !(eps > 0.0 && eps <= 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput("need eps in (0, 1] and delta in (0, 1)".into()));
    }
    // the tiny slack keeps float noise from bumping exact integer bounds
    Ok((((2.0 / (eps * eps)) * (2.0 / delta).ln()) - 1e-9).ceil() as usize)
}

struct TermInfo {
    index: usize,
    support: Vec<(usize, PauliAxis)>,
    eps2_half: f64,
}

/// Greedy derandomization over `slots` measurement repetitions (one shot per
/// slot); identical bases merge into repetition counts. Ties between axes
/// break X < Y < Z, making the plan fully deterministic.
pub fn greedy_derandomize<S: Scalar>(
    h: &PauliHamiltonian<S>,
    slots: usize,
    eps_target: f64,
) -> Result<MeasurementPlan> {
    if slots == 0 {
        return Err(Error::InvalidInput("measurement budget must be positive".into()));
    }
    if eps_target <= 0.0 {
        return Err(Error::InvalidInput("eps target must be positive".into()));
    }
    let n = h.qubit_count();
    let cmax = h.max_abs_coefficient().to_f64_lossy();
    let mut terms: Vec<TermInfo> = Vec::new();
    for (i, t) in h.terms().iter().enumerate() {
        if t.string.is_identity() {
            continue;
        }
        let c = t.coefficient.abs().to_f64_lossy().max(1e-300);
        let eps_p = eps_target * cmax / c;
        terms.push(TermInfo {
            index: i,
            support: t.string.support().map(|q| (q, t.string.axis(q))).collect(),
            eps2_half: eps_p * eps_p / 2.0,
        });
    }
    let axes = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];
    let third: f64 = 1.0 / 3.0;
    let mut v_past: Vec<f64> = vec![0.0; terms.len()];
    let mut slots_out: Vec<MeasurementBasis> = Vec::with_capacity(slots);
    // factors (1/3)^k
    let max_supp = terms.iter().map(|t| t.support.len()).max().unwrap_or(0);
    let pow3: Vec<f64> = (0..=max_supp).map(|k| third.powi(k as i32)).collect();

    for s in 0..slots {
        let future = (slots - s - 1) as f64;
        let mut partial: Vec<f64> = vec![1.0; terms.len()];
        let mut basis = Vec::with_capacity(n);
        for q in 0..n {
            let mut best_axis = PauliAxis::X;
            let mut best_score = f64::INFINITY;
            for &ax in &axes {
                let mut score = 0.0;
                for (ti, term) in terms.iter().enumerate() {
                    let mut w = partial[ti];
                    let mut remaining = 0usize;
                    if w > 0.0 {
                        for &(tq, ta) in &term.support {
                            if tq == q {
                                if ta != ax {
                                    w = 0.0;
                                    break;
                                }
                            } else if tq > q {
                                remaining += 1;
                            }
                        }
                    }
                    let fut = future * pow3[term.support.len()];
                    let v = v_past[ti] + w * pow3[remaining] + fut;
                    score += (-term.eps2_half * v).exp();
                }
                if score < best_score - 1e-15 {
                    best_score = score;
                    best_axis = ax;
                }
            }
            basis.push(best_axis);
            for (ti, term) in terms.iter().enumerate() {
                if partial[ti] == 0.0 {
                    continue;
                }
                if let Some(&(_, ta)) = term.support.iter().find(|&&(tq, _)| tq == q) {
                    if ta != best_axis {
                        partial[ti] = 0.0;
                    }
                }
            }
        }
        for (ti, _) in terms.iter().enumerate() {
            v_past[ti] += partial[ti];
        }
        slots_out.push(MeasurementBasis { axes: basis });
    }

    let mut order: Vec<MeasurementBasis> = Vec::new();
    let mut counts: HashMap<MeasurementBasis, usize> = HashMap::new();
    for b in slots_out {
        if !counts.contains_key(&b) {
            order.push(b.clone());
        }
        *counts.entry(b).or_insert(0) += 1;
    }
    let repetitions: Vec<usize> = order.iter().map(|b| counts[b]).collect();
    let uncovered: Vec<usize> = terms
        .iter()
        .enumerate()
        .filter(|(ti, _)| v_past[*ti] == 0.0)
        .map(|(_, t)| t.index)
        .collect();
    Ok(MeasurementPlan { bases: order, repetitions, uncovered_terms: uncovered })
}

/// Confidence-bound score of a finished plan (used by tests to compare the
/// greedy output against random plans).
pub fn plan_confidence_score<S: Scalar>(h: &PauliHamiltonian<S>, plan: &MeasurementPlan) -> f64 {
    let cmax = h.max_abs_coefficient().to_f64_lossy();
    let mut score = 0.0;
    for t in h.terms() {
        if t.string.is_identity() {
            continue;
        }
        let c = t.coefficient.abs().to_f64_lossy().max(1e-300);
        let eps_p = 0.05 * cmax / c;
        let mut v = 0.0;
        for (b, &r) in plan.bases.iter().zip(plan.repetitions.iter()) {
            if b.hits(&t.string).unwrap_or(false) {
                v += r as f64;
            }
        }
        score += (-eps_p * eps_p / 2.0 * v).exp();
    }
    score
}

/// Per-term hit totals, weighted by repetitions.
pub fn hit_counts<S: Scalar>(h: &PauliHamiltonian<S>, plan: &MeasurementPlan) -> Vec<usize> {
    h.terms()
        .iter()
        .map(|t| {
            if t.string.is_identity() {
                return plan.total_shots();
            }
            plan.bases
                .iter()
                .zip(plan.repetitions.iter())
                .filter(|(b, _)| b.hits(&t.string).unwrap_or(false))
                .map(|(_, &r)| r)
                .sum()
        })
        .collect()
}

/// Rotate a state into the measurement frame of `basis` so that a
/// computational-basis readout measures the requested axes.
pub fn rotate_to_basis<S: Scalar>(state: &QuantumState<S>, basis: &MeasurementBasis) -> QuantumState<S> {
    let n = state.qubit_count();
    debug_assert_eq!(n, basis.len());
    let mut amps = state.amplitudes.clone();
    let inv_sqrt2 = S::of(std::f64::consts::FRAC_1_SQRT_2);
    for (q, axis) in basis.axes.iter().enumerate() {
        match axis {
            PauliAxis::Z | PauliAxis::I => {}
            PauliAxis::X => {
                // U = (1/sqrt2) [[1, -1], [1, 1]] maps X to diag(-1, +1)
                let bit = 1 << q;
                for b in 0..amps.len() {
                    if b & bit == 0 {
                        let lo = amps[b];
                        let hi = amps[b | bit];
                        amps[b] = (lo - hi).scale(inv_sqrt2);
                        amps[b | bit] = (lo + hi).scale(inv_sqrt2);
                    }
                }
            }
            PauliAxis::Y => {
                // U = (1/sqrt2) [[1, -i], [1, i]] maps our Y to diag(-1, +1)
                let bit = 1 << q;
                let mi = C::new(S::zero(), -S::one());
                let pi = C::new(S::zero(), S::one());
                for b in 0..amps.len() {
                    if b & bit == 0 {
                        let lo = amps[b];
                        let hi = amps[b | bit];
                        amps[b] = (lo + mi * hi).scale(inv_sqrt2);
                        amps[b | bit] = (lo + pi * hi).scale(inv_sqrt2);
                    }
                }
            }
        }
    }
    QuantumState { amplitudes: amps }
}

/// Sample every plan basis from a prepared state; seeds derive from
/// `(seed, basis index)` so records are reproducible.
pub fn sample_plan<S: Scalar>(
    state: &QuantumState<S>,
    plan: &MeasurementPlan,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    plan.bases
        .iter()
        .zip(plan.repetitions.iter())
        .enumerate()
        .map(|(i, (basis, &reps))| {
            let rotated = rotate_to_basis(state, basis);
            let mut rng = crate::rng::derive(seed, &[0xba5e, i as u64]);
            let subseed: u64 = rand::Rng::gen(&mut rng);
            sample_bitstrings(&rotated, reps.max(1), subseed)
        })
        .collect()
}

/// Hit-based estimator: for each term, average the (+/-1) support products
/// over all shots of hitting bases; the energy is the coefficient-weighted
/// sum, with never-hit terms contributing zero (and reported).
pub fn estimate_energy<S: Scalar>(
    h: &PauliHamiltonian<S>,
    plan: &MeasurementPlan,
    records: &[ShotRecord],
) -> Result<(S, Vec<usize>)> {
    if records.len() != plan.bases.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} records for {} plan bases",
            records.len(),
            plan.bases.len()
        )));
    }
    if records.iter().any(|r| r.bitstrings.is_empty()) {
        return Err(Error::EmptyRecord);
    }
    let mut energy = S::zero();
    let mut unhit = Vec::new();
    for (ti, t) in h.terms().iter().enumerate() {
        if t.string.is_identity() {
            energy = energy + t.coefficient;
            continue;
        }
        let mut num = S::zero();
        let mut den = 0usize;
        for (basis, record) in plan.bases.iter().zip(records.iter()) {
            if !basis.hits(&t.string)? {
                continue;
            }
            for &bits in &record.bitstrings {
                let mut prod = S::one();
                for q in t.string.support() {
                    prod = if (bits >> q) & 1 == 1 { prod } else { -prod };
                }
                num = num + prod;
            }
            den += record.bitstrings.len();
        }
        if den == 0 {
            unhit.push(ti);
        } else {
            energy = energy + t.coefficient * num / S::of(den as f64);
        }
    }
    Ok((energy, unhit))
}
