//! Digital-analog variational loop: iteratively split piecewise-constant
//! pulses, optimize them with a quota-bound derivative-free search, estimate
//! energies through the derandomized measurement pipeline, and track the
//! shot budget. Includes the two-qubit XY exchange path and the alternating
//! global-pulse ansatz.

use crate::derand::{estimate_energy, greedy_derandomize, sample_plan, MeasurementPlan};
use crate::device::{
    ising_hamiltonian, xy_hamiltonian, AtomRegister, DetuningChannel, DeviceConstants,
    DriveProgram, Waveform,
};
use crate::dynamics::{evolve_pure, EvolutionSettings, QuantumState, TimeDependentOperator};
use crate::error::{Error, Result};
use crate::optimize;
use crate::paulialg::{PauliAxis, PauliHamiltonian};
use crate::rng;
use crate::scalar::{Scalar, C};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Piecewise-constant global pulse: interval edges (the last one is the
/// total duration), one Rabi and one detuning value per interval.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(bound(serialize = "S: serde::Serialize", deserialize = "S: serde::de::DeserializeOwned"))]
pub struct PulseParams<S> {
    /// strictly increasing right interval edges; last entry = t_tot
    pub edges_us: Vec<S>,
    pub omegas_mhz: Vec<S>,
    pub deltas_mhz: Vec<S>,
}

impl<S: Scalar> PulseParams<S> {
    pub fn constant(omega: S, delta: S, t_tot: S) -> Self {
        Self { edges_us: vec![t_tot], omegas_mhz: vec![omega], deltas_mhz: vec![delta] }
    }

    pub fn intervals(&self) -> usize {
        self.edges_us.len()
    }

    pub fn t_tot(&self) -> S {
        *self.edges_us.last().expect("at least one interval")
    }

    pub fn validate(&self, min_gap_us: S) -> Result<()> {
        if self.edges_us.is_empty()
            || self.omegas_mhz.len() != self.edges_us.len()
            || self.deltas_mhz.len() != self.edges_us.len()
        {
            return Err(Error::InvalidInput("pulse arrays must share the interval count".into()));
        }
        let mut prev = S::zero();
        for &e in &self.edges_us {
            if e - prev < min_gap_us - S::of(1e-12) {
                return Err(Error::InvalidInput("pulse interval under the gap floor".into()));
            }
            prev = e;
        }
        Ok(())
    }

    /// Realized drive program: step waveforms through duplicated knots.
    pub fn to_program(&self) -> Result<DriveProgram<S>> {
        let t_tot = self.t_tot();
        let mut om = Vec::with_capacity(2 * self.intervals());
        let mut dl = Vec::with_capacity(2 * self.intervals());
        let mut start = S::zero();
        for i in 0..self.intervals() {
            om.push((start, self.omegas_mhz[i]));
            om.push((self.edges_us[i], self.omegas_mhz[i]));
            dl.push((start, self.deltas_mhz[i]));
            dl.push((self.edges_us[i], self.deltas_mhz[i]));
            start = self.edges_us[i];
        }
        DriveProgram::new(
            Waveform::new(om)?,
            DetuningChannel::Global(Waveform::new(dl)?),
            t_tot,
        )
    }

    /// Drive values at a time (for the split-neutrality check).
    pub fn values_at(&self, t: S) -> (S, S) {
        let mut idx = self.intervals() - 1;
        for (i, &e) in self.edges_us.iter().enumerate() {
            if t < e {
                idx = i;
                break;
            }
        }
        (self.omegas_mhz[idx], self.deltas_mhz[idx])
    }
}

/// Split one interval at a random admissible instant; both children inherit
/// the parent's drive values, so the realized waveform is unchanged.
/// Returns `saturated = true` (and the unchanged params) when repeated
/// draws cannot satisfy the gap floor.
pub fn split_time_label<S: Scalar>(
    params: &PulseParams<S>,
    rng: &mut ChaCha8Rng,
    min_gap_us: S,
) -> (PulseParams<S>, bool) {
    let t_tot = params.t_tot();
    for _ in 0..64 {
        let t = S::of(rng.gen_range(0.0..1.0)) * t_tot;
        let mut start = S::zero();
        let mut host = None;
        for (i, &e) in params.edges_us.iter().enumerate() {
            if t > start && t < e {
                host = Some((i, start, e));
                break;
            }
            start = e;
        }
        let Some((i, lo, hi)) = host else { continue };
        if t - lo < min_gap_us || hi - t < min_gap_us {
            continue;
        }
        let mut out = params.clone();
        out.edges_us.insert(i, t);
        out.omegas_mhz.insert(i, params.omegas_mhz[i]);
        out.deltas_mhz.insert(i, params.deltas_mhz[i]);
        return (out, false);
    }
    (params.clone(), true)
}

/// Estimation configuration shared by every energy evaluation.
#[derive(Debug, Clone)]
pub struct EstimatorSettings<S> {
    /// relative accuracy target feeding the plan size
    pub eps_target: f64,
    /// measurement repetitions per evaluation (plan slots); when zero the
    /// Hoeffding bound at delta = 0.05 sizes the plan
    pub shots_per_eval: usize,
    pub evolution: EvolutionSettings<S>,
}

impl<S: Scalar> Default for EstimatorSettings<S> {
    fn default() -> Self {
        Self { eps_target: 0.05, shots_per_eval: 0, evolution: EvolutionSettings::default() }
    }
}

impl<S: Scalar> EstimatorSettings<S> {
    pub fn plan_for<T: Scalar>(&self, h: &PauliHamiltonian<T>) -> Result<MeasurementPlan> {
        let slots = if self.shots_per_eval > 0 {
            self.shots_per_eval
        } else {
            crate::derand::hoeffding_shots(self.eps_target, 0.05)?
        };
        greedy_derandomize(h, slots, self.eps_target)
    }
}

/// Evolve a product state under the pulse program and estimate the target
/// energy from derandomized samples. Returns (energy, shots spent).
#[allow(clippy::too_many_arguments)]
pub fn evaluate_energy<S: Scalar>(
    params: &PulseParams<S>,
    h: &PauliHamiltonian<S>,
    register: &AtomRegister<S>,
    constants: &DeviceConstants<S>,
    plan: &MeasurementPlan,
    evolution: &EvolutionSettings<S>,
    initial_bits: usize,
    seed: u64,
) -> Result<(S, usize)> {
    let program = params.to_program()?;
    let hdev = ising_hamiltonian(register, constants, &program)?;
    let start = QuantumState::basis_state(register.len(), initial_bits);
    let psi = evolve_pure(&hdev, &start, params.t_tot(), evolution)?;
    let records = sample_plan(&psi, plan, seed)?;
    let (e, _unhit) = estimate_energy(h, plan, &records)?;
    Ok((e, plan.total_shots()))
}

/// Exact expectation after the same evolution (virtual scans, tests).
pub fn exact_energy<S: Scalar>(
    params: &PulseParams<S>,
    h: &PauliHamiltonian<S>,
    register: &AtomRegister<S>,
    constants: &DeviceConstants<S>,
    evolution: &EvolutionSettings<S>,
    initial_bits: usize,
) -> Result<S> {
    let program = params.to_program()?;
    let hdev = ising_hamiltonian(register, constants, &program)?;
    let start = QuantumState::basis_state(register.len(), initial_bits);
    let psi = evolve_pure(&hdev, &start, params.t_tot(), evolution)?;
    h.expectation(&psi.amplitudes)
}

/// Variational-loop configuration.
#[derive(Debug, Clone)]
pub struct VqeConfig<S> {
    pub shot_budget: usize,
    /// Rabi bound [0, omega_max]
    pub omega_max_mhz: S,
    /// detuning bound [-delta_max, delta_max]
    pub delta_max_mhz: S,
    pub t_tot_us: S,
    pub min_gap_us: S,
    /// optimizer evaluations per outer iteration
    pub evals_per_iteration: usize,
    pub estimator: EstimatorSettings<S>,
    /// initial product state bits (the warm start)
    pub initial_bits: usize,
    pub seed: u64,
}

impl<S: Scalar> Default for VqeConfig<S> {
    fn default() -> Self {
        Self {
            shot_budget: 350_000,
            omega_max_mhz: S::of(2.0),
            delta_max_mhz: S::of(2.0),
            t_tot_us: S::of(1.0),
            min_gap_us: S::of(0.016),
            evals_per_iteration: 20,
            estimator: EstimatorSettings::default(),
            initial_bits: 0,
            seed: 0,
        }
    }
}

/// One history entry of a run.
#[derive(Debug, Clone)]
pub struct HistoryPoint<S> {
    pub cumulative_shots: usize,
    pub energy: S,
    pub intervals: usize,
}

/// Completed variational run.
#[derive(Debug, Clone)]
pub struct VqeRun<S> {
    pub history: Vec<HistoryPoint<S>>,
    pub best_energy: S,
    pub best_params: PulseParams<S>,
    pub shots_spent: usize,
    /// splitting saturated before the budget ran out
    pub split_saturated: bool,
}

/// Outer loop: optimize the current parameter set under a fixed evaluation
/// quota, then split a random interval, until the shot budget is exhausted.
pub fn vqe_optimize<S: Scalar>(
    h: &PauliHamiltonian<S>,
    register: &AtomRegister<S>,
    constants: &DeviceConstants<S>,
    config: &VqeConfig<S>,
) -> Result<VqeRun<S>> {
    if h.qubit_count() != register.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} qubits vs {} atoms",
            h.qubit_count(),
            register.len()
        )));
    }
    let plan = config.estimator.plan_for(h)?;
    let per_eval = plan.total_shots();
    if config.shot_budget < per_eval {
        return Err(Error::InvalidInput(format!(
            "budget {} under one estimation cost {per_eval}",
            config.shot_budget
        )));
    }
    let mut rng = rng::derive(config.seed, &[0xc0de]);
    let mut params = PulseParams::constant(
        config.omega_max_mhz * S::of(rng.gen_range(0.0..1.0)),
        config.delta_max_mhz * S::of(rng.gen_range(-1.0..1.0)),
        config.t_tot_us,
    );
    let mut history: Vec<HistoryPoint<S>> = Vec::new();
    let mut spent = 0usize;
    let mut best_energy = S::infinity();
    let mut best_params = params.clone();
    let mut eval_counter = 0u64;
    let mut saturated = false;

    loop {
        let remaining_evals = (config.shot_budget - spent) / per_eval;
        if remaining_evals == 0 {
            break;
        }
        let quota = remaining_evals.min(config.evals_per_iteration);
        let k = params.intervals();
        let x0: Vec<S> = params
            .omegas_mhz
            .iter()
            .copied()
            .chain(params.deltas_mhz.iter().copied())
            .collect();
        let mut bounds = vec![(S::zero(), config.omega_max_mhz); k];
        bounds.extend(vec![(-config.delta_max_mhz, config.delta_max_mhz); k]);
        // objective: mutates the shared accounting through the closure
        let base = params.clone();
        let mut inner_history: Vec<(Vec<S>, S)> = Vec::new();
        {
            let objective = |x: &[S]| -> S {
                let mut p = base.clone();
                p.omegas_mhz = x[..k].to_vec();
                p.deltas_mhz = x[k..].to_vec();
                eval_counter += 1;
                let seed = rng_from(config.seed, eval_counter);
                match evaluate_energy(
                    &p,
                    h,
                    register,
                    constants,
                    &plan,
                    &config.estimator.evolution,
                    config.initial_bits,
                    seed,
                ) {
                    Ok((e, _)) => {
                        inner_history.push((x.to_vec(), e));
                        e
                    }
                    Err(_) => S::infinity(),
                }
            };
            let _ = optimize::powell_quota(objective, &x0, &bounds, quota);
        }
        for (x, e) in &inner_history {
            spent += per_eval;
            history.push(HistoryPoint { cumulative_shots: spent, energy: *e, intervals: k });
            if *e < best_energy {
                best_energy = *e;
                best_params = {
                    let mut p = base.clone();
                    p.omegas_mhz = x[..k].to_vec();
                    p.deltas_mhz = x[k..].to_vec();
                    p
                };
            }
        }
        // adopt the best parameters found so far, then grow the ansatz
        params = best_params.clone();
        let (next, sat) = split_time_label(&params, &mut rng, config.min_gap_us);
        saturated |= sat;
        params = next;
    }
    Ok(VqeRun {
        history,
        best_energy,
        best_params,
        shots_spent: spent,
        split_saturated: saturated,
    })
}

fn rng_from(seed: u64, counter: u64) -> u64 {
    rng::derive(seed, &[0x5a3e, counter]).gen()
}

/// Relative error `|exact - estimated| / |exact|`.
pub fn relative_error<S: Scalar>(estimated: S, exact: S) -> Result<S> {
    if exact == S::zero() {
        return Err(Error::InvalidInput("relative error undefined at zero energy".into()));
    }
    Ok((exact - estimated).abs() / exact.abs())
}

/// Outcome of the two-qubit XY exchange path.
#[derive(Debug, Clone)]
pub struct XyUccRun<S> {
    pub best_energy: S,
    pub best_params: [S; 3],
    pub shots_spent: usize,
    pub history: Vec<HistoryPoint<S>>,
    /// largest population found outside the one-excitation sector
    pub max_sector_leakage: S,
    /// terms incompatible with the exchange-symmetric sector
    pub sector_warnings: Vec<String>,
}

/// Exchange-ansatz run for a two-qubit effective Hamiltonian: the state
/// `a|01> + b|10>` is prepared by evolving |01> under the XY Hamiltonian
/// with zero Rabi drive and local detunings `(delta_0, delta_1)` for a
/// duration `t`; the three parameters are optimized by differential
/// evolution under the shot budget.
pub fn xy_ucc_h2<S: Scalar>(
    h_eff: &PauliHamiltonian<S>,
    constants: &DeviceConstants<S>,
    shot_budget: usize,
    seed: u64,
) -> Result<XyUccRun<S>> {
    if h_eff.qubit_count() != 2 {
        return Err(Error::InvalidInput("the exchange path expects a 2-qubit Hamiltonian".into()));
    }
    let mut warnings = Vec::new();
    for t in h_eff.terms() {
        let s = &t.string;
        let ok = s.is_identity()
            || (s.support_len() == 1 && s.support().all(|q| s.axis(q) == PauliAxis::Z))
            || (s.support_len() == 2
                && (s.axis(0) == PauliAxis::Z && s.axis(1) == PauliAxis::Z
                    || s.axis(0) == PauliAxis::X && s.axis(1) == PauliAxis::X
                    || s.axis(0) == PauliAxis::Y && s.axis(1) == PauliAxis::Y));
        if !ok {
            warnings.push(format!("term '{}' leaves the exchange sector", s));
        }
    }
    // fixed two-atom register; the exchange rate is C3/r^3
    let r = S::of(10.0);
    let register = AtomRegister::new(vec![[S::zero(), S::zero()], [r, S::zero()]], constants.min_distance_um)?;
    let plan_shots = 500usize;
    let evals_allowed = (shot_budget / plan_shots).max(1);
    // population-based global search sized to the budget
    let pop = 8usize.min(evals_allowed.max(4));
    let gens = if evals_allowed > pop { (evals_allowed - pop) / pop } else { 0 };
    let plan = greedy_derandomize(h_eff, plan_shots, 0.05)?;
    let evolution = EvolutionSettings::default();

    let mut history = Vec::new();
    let mut spent = 0usize;
    let mut leakage = S::zero();
    let mut eval_counter = 0u64;
    let t_max = S::of(1.0);
    {
        let objective = |x: &[S]| -> S {
            let (d0, d1, t) = (x[0], x[1], x[2]);
            let program = DriveProgram::new(
                Waveform::constant(S::zero(), t),
                DetuningChannel::Local(vec![
                    Waveform::constant(d0, t),
                    Waveform::constant(d1, t),
                ]),
                t,
            )
            .expect("constant program");
            let hxy = match xy_hamiltonian(&register, constants, &program) {
                Ok(h) => h,
                Err(_) => return S::infinity(),
            };
            let start = QuantumState::basis_state(2, 0b01);
            let psi = match evolve_pure(&hxy, &start, t, &evolution) {
                Ok(p) => p,
                Err(_) => return S::infinity(),
            };
            let leak = psi.amplitudes[0b00].norm_sqr() + psi.amplitudes[0b11].norm_sqr();
            if leak > leakage {
                leakage = leak;
            }
            eval_counter += 1;
            let sd = rng_from(seed, eval_counter);
            let records = match sample_plan(&psi, &plan, sd) {
                Ok(r) => r,
                Err(_) => return S::infinity(),
            };
            let (e, _) = match estimate_energy(h_eff, &plan, &records) {
                Ok(v) => v,
                Err(_) => return S::infinity(),
            };
            spent += plan.total_shots();
            history.push(HistoryPoint { cumulative_shots: spent, energy: e, intervals: 1 });
            e
        };
        let bounds = [
            (-S::of(2.0), S::of(2.0)),
            (-S::of(2.0), S::of(2.0)),
            (S::of(0.02), t_max),
        ];
        let out = optimize::differential_evolution(objective, &bounds, pop, gens, seed);
        let best_energy =
            history.iter().map(|p| p.energy).fold(S::infinity(), S::min);
        Ok(XyUccRun {
            best_energy,
            best_params: [out.best_x[0], out.best_x[1], out.best_x[2]],
            shots_spent: spent,
            history,
            max_sector_leakage: leakage,
            sector_warnings: warnings,
        })
    }
}

/// Alternating-pulse ansatz variant.
#[derive(Debug, Clone)]
pub enum AlternatingAnsatz<S> {
    /// layers of (t_a, t_b): H_a carries the detuning, H_b does not
    TwoHamiltonians { omega_mhz: S, delta_mhz: S, durations: Vec<(S, S)> },
    /// layers of (t, phase): one Hamiltonian with a segmented drive phase
    PhaseSegments { omega_mhz: S, segments: Vec<(S, S)> },
}

struct PhasedDrive<S> {
    dim: usize,
    atoms: usize,
    pair_diagonal: Vec<S>,
    half_omega: S,
    phase: S,
}

impl<S: Scalar> TimeDependentOperator<S> for PhasedDrive<S> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn accumulate(&self, _tau: S, psi: &[C<S>], out: &mut [C<S>]) {
        for b in 0..self.dim {
            out[b] = out[b] + psi[b].scale(self.pair_diagonal[b]);
        }
        // (Omega/2)(cos phi X + sin phi Y): amplitude e^{-i phi} on 0 -> 1
        let up = C::from_polar(self.half_omega, -self.phase);
        let down = C::from_polar(self.half_omega, self.phase);
        for b in 0..self.dim {
            for i in 0..self.atoms {
                let bit = 1 << i;
                let amp = if b & bit == 0 { up } else { down };
                out[b ^ bit] = out[b ^ bit] + amp * psi[b];
            }
        }
    }
}

/// Energy of the layered global-pulse ansatz from the all-ground start.
/// With `plan` the energy is shot-estimated; without it the exact
/// expectation is returned.
pub fn alternating_pulse_ansatz<S: Scalar>(
    h: &PauliHamiltonian<S>,
    register: &AtomRegister<S>,
    constants: &DeviceConstants<S>,
    ansatz: &AlternatingAnsatz<S>,
    evolution: &EvolutionSettings<S>,
    plan_and_seed: Option<(&MeasurementPlan, u64)>,
) -> Result<(S, usize)> {
    let atoms = register.len();
    let mut psi = QuantumState::ground(atoms);
    match ansatz {
        AlternatingAnsatz::TwoHamiltonians { omega_mhz, delta_mhz, durations } => {
            for &(ta, tb) in durations {
                if ta < S::zero() || tb < S::zero() {
                    return Err(Error::InvalidInput("negative layer duration".into()));
                }
                if ta > S::zero() {
                    let p = DriveProgram::new(
                        Waveform::constant(*omega_mhz, ta),
                        DetuningChannel::Global(Waveform::constant(*delta_mhz, ta)),
                        ta,
                    )?;
                    let hdev = ising_hamiltonian(register, constants, &p)?;
                    psi = evolve_pure(&hdev, &psi, ta, evolution)?;
                }
                if tb > S::zero() {
                    let p = DriveProgram::new(
                        Waveform::constant(*omega_mhz, tb),
                        DetuningChannel::Global(Waveform::constant(S::zero(), tb)),
                        tb,
                    )?;
                    let hdev = ising_hamiltonian(register, constants, &p)?;
                    psi = evolve_pure(&hdev, &psi, tb, evolution)?;
                }
            }
        }
        AlternatingAnsatz::PhaseSegments { omega_mhz, segments } => {
            let v = register.interaction_matrix(constants);
            let dim = 1usize << atoms;
            let mut pair_diagonal = vec![S::zero(); dim];
            for (b, d) in pair_diagonal.iter_mut().enumerate() {
                let mut acc = S::zero();
                for i in 0..atoms {
                    if (b >> i) & 1 == 0 {
                        continue;
                    }
                    for j in (i + 1)..atoms {
                        if (b >> j) & 1 == 1 {
                            acc = acc + v[(i, j)];
                        }
                    }
                }
                *d = acc;
            }
            for &(t, phase) in segments {
                if t < S::zero() {
                    return Err(Error::InvalidInput("negative segment duration".into()));
                }
                if t == S::zero() {
                    continue;
                }
                let op = PhasedDrive {
                    dim,
                    atoms,
                    pair_diagonal: pair_diagonal.clone(),
                    half_omega: *omega_mhz * S::of(0.5),
                    phase,
                };
                psi = evolve_pure(&op, &psi, t, evolution)?;
            }
        }
    }
    match plan_and_seed {
        Some((plan, seed)) => {
            let records = sample_plan(&psi, plan, seed)?;
            let (e, _) = estimate_energy(h, plan, &records)?;
            Ok((e, plan.total_shots()))
        }
        None => Ok((h.expectation(&psi.amplitudes)?, 0)),
    }
}

/// Rank candidate initial product states by the relative error reached
/// after a single quota-bound optimization step (virtual, exact energies).
pub fn scan_product_states<S: Scalar>(
    h: &PauliHamiltonian<S>,
    register: &AtomRegister<S>,
    constants: &DeviceConstants<S>,
    candidates: Option<&[usize]>,
    config: &VqeConfig<S>,
) -> Result<Vec<(usize, S)>> {
    let n = register.len();
    let all: Vec<usize>;
    let list: &[usize] = match candidates {
        Some(c) => c,
        None => {
            if n > 10 {
                return Err(Error::GuardExceeded(
                    "exhaustive product scan limited to 10 qubits; pass a candidate list".into(),
                ));
            }
            all = (0..(1usize << n)).collect();
            &all
        }
    };
    let (e_exact, _) = h.ground_energy_exact()?;
    let mut rows = Vec::with_capacity(list.len());
    for (ci, &bits) in list.iter().enumerate() {
        let mut rng = rng::derive(config.seed, &[0x5ca2, ci as u64]);
        let base = PulseParams::constant(
            config.omega_max_mhz * S::of(rng.gen_range(0.0..1.0)),
            config.delta_max_mhz * S::of(rng.gen_range(-1.0..1.0)),
            config.t_tot_us,
        );
        // the idle pulse is always available, so the candidate's own
        // expectation bounds its post-step energy
        let bare = QuantumState::basis_state(n, bits);
        let mut best = h.expectation(&bare.amplitudes)?;
        let objective = |x: &[S]| -> S {
            let mut p = base.clone();
            p.omegas_mhz = vec![x[0]];
            p.deltas_mhz = vec![x[1]];
            let e = exact_energy(&p, h, register, constants, &config.estimator.evolution, bits)
                .unwrap_or(S::infinity());
            if e < best {
                best = e;
            }
            e
        };
        let bounds = [
            (S::zero(), config.omega_max_mhz),
            (-config.delta_max_mhz, config.delta_max_mhz),
        ];
        let x0 = vec![base.omegas_mhz[0], base.deltas_mhz[0]];
        let _ = optimize::powell_quota(objective, &x0, &bounds, config.evals_per_iteration);
        rows.push((bits, relative_error(best, e_exact)?));
    }
    rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn consts() -> DeviceConstants<f64> {
        DeviceConstants::default()
    }

    fn small_register(n: usize) -> AtomRegister<f64> {
        let pos: Vec<[f64; 2]> = (0..n).map(|i| [14.0 * i as f64, 0.0]).collect();
        AtomRegister::new(pos, 4.0).unwrap()
    }

    #[test]
    fn split_preserves_realized_waveform() {
        let params = PulseParams::constant(1.0, -0.5, 4.0);
        let mut rng = rng::seeded(3);
        let (split, sat) = split_time_label(&params, &mut rng, 0.016);
        assert!(!sat);
        assert_eq!(split.intervals(), 2);
        for k in 0..40 {
            let t = 0.05 + 0.098 * k as f64;
            assert_eq!(params.values_at(t), split.values_at(t));
        }
    }

    #[test]
    fn split_saturates_when_gap_impossible() {
        let params = PulseParams::constant(1.0, 0.0, 0.03);
        let mut rng = rng::seeded(3);
        let (out, sat) = split_time_label(&params, &mut rng, 0.016);
        assert!(sat);
        assert_eq!(out, params);
    }

    #[test]
    fn repeated_splits_respect_gap_floor() {
        let min_gap = 0.016;
        for seed in 0..40u64 {
            let mut rng = rng::seeded(seed);
            let mut params = PulseParams::constant(1.0, 0.0, 4.0);
            for _ in 0..10 {
                let (next, sat) = split_time_label(&params, &mut rng, min_gap);
                if !sat {
                    params = next;
                }
            }
            assert_eq!(params.intervals(), 11);
            let mut prev = 0.0;
            for &e in &params.edges_us {
                assert!(e - prev >= min_gap - 1e-12, "gap {}", e - prev);
                prev = e;
            }
        }
    }

    #[test]
    fn zero_duration_program_returns_initial_energy() {
        // all-ground state under H = Z0 + Z1 has energy -2c
        let h = PauliHamiltonian::<f64>::parse("qubits: 2\n0.7 Z0\n0.7 Z1\n").unwrap();
        let reg = small_register(2);
        let params = PulseParams::constant(0.0, 0.0, 0.001);
        let e = exact_energy(&params, &h, &reg, &consts(), &EvolutionSettings::default(), 0)
            .unwrap();
        assert_abs_diff_eq!(e, -1.4, epsilon = 1e-9);
    }

    #[test]
    fn estimated_energy_tracks_exact_toy_case() {
        let h = PauliHamiltonian::<f64>::parse("qubits: 2\n1.0 Z0 Z1\n").unwrap();
        let reg = small_register(2);
        let params = PulseParams::constant(1.2, 0.3, 0.8);
        let est = EstimatorSettings { shots_per_eval: 4000, ..Default::default() };
        let plan = est.plan_for(&h).unwrap();
        let (e_est, shots) = evaluate_energy(
            &params,
            &h,
            &reg,
            &consts(),
            &plan,
            &est.evolution,
            0,
            5,
        )
        .unwrap();
        assert_eq!(shots, 4000);
        let e_exact =
            exact_energy(&params, &h, &reg, &consts(), &est.evolution, 0).unwrap();
        // binomial sigma for a +/-1 observable at 4000 shots
        let sigma = (1.0f64 / 4000.0).sqrt();
        assert!((e_est - e_exact).abs() < 3.5 * sigma, "est {e_est} exact {e_exact}");
    }

    #[test]
    fn budget_of_one_estimation_yields_single_point() {
        let h = PauliHamiltonian::<f64>::parse("qubits: 2\n1.0 Z0 Z1\n").unwrap();
        let reg = small_register(2);
        let mut config = VqeConfig::<f64>::default();
        config.estimator.shots_per_eval = 200;
        config.shot_budget = 200;
        config.t_tot_us = 0.4;
        let run = vqe_optimize(&h, &reg, &consts(), &config).unwrap();
        assert_eq!(run.history.len(), 1);
        assert_eq!(run.shots_spent, 200);
        assert_abs_diff_eq!(run.best_energy, run.history[0].energy);
    }

    #[test]
    fn budget_accounting_is_exact_and_best_monotone() {
        let h = PauliHamiltonian::<f64>::parse("qubits: 2\n1.0 Z0 Z1\n0.4 X0\n").unwrap();
        let reg = small_register(2);
        let mut config = VqeConfig::<f64>::default();
        config.estimator.shots_per_eval = 100;
        config.shot_budget = 6050;
        config.t_tot_us = 0.4;
        let run = vqe_optimize(&h, &reg, &consts(), &config).unwrap();
        assert_eq!(run.shots_spent, run.history.len() * 100);
        assert!(run.shots_spent <= 6050);
        assert!(run.shots_spent > 6050 - 100, "underspent: {}", run.shots_spent);
        let mut last = run.history[0].cumulative_shots;
        let mut best = f64::INFINITY;
        for p in &run.history {
            assert!(p.cumulative_shots == last || p.cumulative_shots > last);
            last = p.cumulative_shots;
            best = best.min(p.energy);
        }
        assert_abs_diff_eq!(best, run.best_energy);
    }

    #[test]
    fn runs_are_seed_deterministic() {
        let h = PauliHamiltonian::<f64>::parse("qubits: 2\n1.0 Z0 Z1\n0.4 X0\n").unwrap();
        let reg = small_register(2);
        let mut config = VqeConfig::<f64>::default();
        config.estimator.shots_per_eval = 60;
        config.shot_budget = 1800;
        config.t_tot_us = 0.4;
        config.seed = 11;
        let a = vqe_optimize(&h, &reg, &consts(), &config).unwrap();
        let b = vqe_optimize(&h, &reg, &consts(), &config).unwrap();
        assert_eq!(a.best_energy, b.best_energy);
        assert_eq!(a.history.len(), b.history.len());
        for (x, y) in a.history.iter().zip(b.history.iter()) {
            assert_eq!(x.energy, y.energy);
        }
    }

    #[test]
    fn relative_error_basics() {
        assert_abs_diff_eq!(relative_error(-1.05, -1.0).unwrap(), 0.05, epsilon = 1e-12);
        assert_eq!(relative_error(2.0, 2.0).unwrap(), 0.0);
        assert!(relative_error(1.0, 0.0).is_err());
    }

    #[test]
    fn xy_flat_sector_converges_immediately() {
        // H = -g ZZ: within {|01>, |10>} every state has energy -g... with
        // Z0 Z1 product equal to -1 on anti-aligned bits the sector is flat
        let h = PauliHamiltonian::<f64>::parse("qubits: 2\n0.9 Z0 Z1\n").unwrap();
        let run = xy_ucc_h2(&h, &consts(), 4000, 9).unwrap();
        assert!(run.sector_warnings.is_empty());
        assert!(run.max_sector_leakage < 1e-10);
        assert_abs_diff_eq!(run.best_energy, -0.9, epsilon = 1e-9);
    }

    #[test]
    fn symmetric_detuning_commutes_with_exchange() {
        // with delta_0 = delta_1 the detuning term commutes with the
        // exchange, so the symmetric mode (|01> + |10>)/sqrt(2) returns to
        // itself up to a phase at every time
        let reg = small_register(2);
        for tau in [0.13, 0.37, 0.8] {
            let program = DriveProgram::new(
                Waveform::constant(0.0, tau),
                DetuningChannel::Local(vec![
                    Waveform::constant(0.7, tau),
                    Waveform::constant(0.7, tau),
                ]),
                tau,
            )
            .unwrap();
            let hxy = xy_hamiltonian(&reg, &consts(), &program).unwrap();
            let mut start = QuantumState::basis_state(2, 0b01);
            start.amplitudes[0b10] = start.amplitudes[0b01];
            start.normalize();
            let psi = evolve_pure(&hxy, &start, tau, &EvolutionSettings::default()).unwrap();
            assert!(psi.fidelity(&start) > 1.0 - 1e-9, "tau {tau}");
        }
    }

    #[test]
    fn alternating_zero_durations_return_initial_energy() {
        let h = PauliHamiltonian::<f64>::parse("qubits: 2\n0.7 Z0\n0.7 Z1\n").unwrap();
        let reg = small_register(2);
        let ansatz = AlternatingAnsatz::TwoHamiltonians {
            omega_mhz: 1.0,
            delta_mhz: 0.5,
            durations: vec![(0.0, 0.0); 3],
        };
        let (e, _) = alternating_pulse_ansatz(
            &h,
            &reg,
            &consts(),
            &ansatz,
            &EvolutionSettings::default(),
            None,
        )
        .unwrap();
        assert_abs_diff_eq!(e, -1.4, epsilon = 1e-10);
    }

    #[test]
    fn phase_segments_drive_population() {
        let h = PauliHamiltonian::<f64>::parse("qubits: 1\n1.0 Z0\n").unwrap();
        let reg = small_register(1);
        // pi pulse via a single segment
        let ansatz = AlternatingAnsatz::PhaseSegments {
            omega_mhz: 1.0,
            segments: vec![(0.5, 0.0)],
        };
        let (e, _) = alternating_pulse_ansatz(
            &h,
            &reg,
            &consts(),
            &ansatz,
            &EvolutionSettings::default(),
            None,
        )
        .unwrap();
        assert_abs_diff_eq!(e, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn product_scan_finds_diagonal_ground_state() {
        let h = PauliHamiltonian::<f64>::parse("qubits: 2\n1.0 Z0\n-0.6 Z1\n").unwrap();
        let reg = small_register(2);
        let mut config = VqeConfig::<f64>::default();
        config.t_tot_us = 0.2;
        config.evals_per_iteration = 6;
        let rows = scan_product_states(&h, &reg, &consts(), None, &config).unwrap();
        // diagonal ground state: qubit0 down (bit 0), qubit1 up (bit 1) -> 0b10
        assert_eq!(rows[0].0, 0b10);
        assert!(rows[0].1 < 0.05);
    }
}
