//! Rydberg resource-Hamiltonian model: atom registers, device constants,
//! piecewise-linear drive waveforms, schedule Hamiltonians for the Ising and
//! XY modes, annealing/quench program builders and wall-clock accounting.
//!
//! Ising mode: `H(tau) = sum_{i<j} (C6/r_ij^6) n_i n_j
//!                      + (Omega(tau)/2) sum_i X_i - sum_i delta_i(tau) n_i`
//! with every coefficient a linear frequency in MHz and `n = (1+Z)/2`.

use crate::dynamics::TimeDependentOperator;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{Scalar, C};
use serde::{Deserialize, Serialize};

/// Atom positions in the plane, micrometers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: serde::de::DeserializeOwned"))]
pub struct AtomRegister<S> {
    pub positions_um: Vec<[S; 2]>,
}

impl<S: Scalar> AtomRegister<S> {
    pub fn new(positions_um: Vec<[S; 2]>, min_distance_um: S) -> Result<Self> {
        let reg = Self { positions_um };
        reg.check_min_distance(min_distance_um)?;
        for p in &reg.positions_um {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidInput("non-finite atom coordinate".into()));
            }
        }
        Ok(reg)
    }

    pub fn len(&self) -> usize {
        self.positions_um.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_um.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> S {
        let a = self.positions_um[i];
        let b = self.positions_um[j];
        ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])).sqrt()
    }

    pub fn check_min_distance(&self, min_distance_um: S) -> Result<()> {
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                if self.distance(i, j) < min_distance_um {
                    return Err(Error::InvalidInput(format!(
                        "atoms {i} and {j} closer than the {} um floor",
                        min_distance_um
                    )));
                }
            }
        }
        Ok(())
    }

    /// Symmetric van der Waals pair matrix `C6 / r^6` (zero diagonal), MHz.
    pub fn interaction_matrix(&self, constants: &DeviceConstants<S>) -> Matrix<S> {
        let n = self.len();
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let r = self.distance(i, j);
                let v = constants.c6_over_h / r.powi(6);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Dipolar pair matrix `C3 / r^3` (isotropic), MHz.
    pub fn xy_interaction_matrix(&self, constants: &DeviceConstants<S>) -> Matrix<S> {
        let n = self.len();
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let r = self.distance(i, j);
                let v = constants.c3_over_h / r.powi(3);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("register serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("register JSON: {e}")))
    }
}

/// Hardware constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: serde::de::DeserializeOwned"))]
pub struct DeviceConstants<S> {
    /// van der Waals coefficient, MHz um^6.
    pub c6_over_h: S,
    /// dipolar coefficient for the XY mode, MHz um^3.
    pub c3_over_h: S,
    /// largest drivable Rabi frequency, MHz (linear).
    pub rabi_max: S,
    /// fastest drive switch-on, us.
    pub min_ramp_us: S,
    /// measurement repetition rate, Hz.
    pub repetition_rate_hz: S,
    /// closest allowed atom spacing, um.
    pub min_distance_um: S,
}

impl<S: Scalar> Default for DeviceConstants<S> {
    fn default() -> Self {
        Self {
            c6_over_h: S::of(1947e3),
            c3_over_h: S::of(3000.0),
            rabi_max: S::of(2.5),
            min_ramp_us: S::of(0.05),
            repetition_rate_hz: S::of(3.0),
            min_distance_um: S::of(4.0),
        }
    }
}

impl<S: Scalar> DeviceConstants<S> {
    pub fn validated(self) -> Result<Self> {
        let all = [
            self.c6_over_h,
            self.c3_over_h,
            self.rabi_max,
            self.min_ramp_us,
            self.repetition_rate_hz,
            self.min_distance_um,
        ];
        if all.iter().any(|v| *v <= S::zero() || !v.is_finite()) {
            return Err(Error::InvalidInput("device constants must be positive".into()));
        }
        Ok(self)
    }
}

/// Blockade radius `(C6 / Omega)^(1/6)` in the linear-frequency convention.
pub fn blockade_radius<S: Scalar>(omega_mhz: S, constants: &DeviceConstants<S>) -> Result<S> {
    if omega_mhz <= S::zero() {
        return Err(Error::InvalidInput("Rabi frequency must be positive".into()));
    }
    Ok((constants.c6_over_h / omega_mhz).powf(S::one() / S::of(6.0)))
}

/// Wall-clock estimate in seconds for a total shot count.
pub fn wall_clock_estimate<S: Scalar>(total_shots: usize, constants: &DeviceConstants<S>) -> S {
    S::of(total_shots as f64) / constants.repetition_rate_hz
}

/// Piecewise-linear waveform over (time us, value MHz) breakpoints.
///
/// Duplicated time entries encode steps; evaluation at a duplicated time
/// takes the later value (right-continuous).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: serde::de::DeserializeOwned"))]
pub struct Waveform<S> {
    pub breakpoints: Vec<(S, S)>,
}

impl<S: Scalar> Waveform<S> {
    pub fn new(breakpoints: Vec<(S, S)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidInput("waveform needs breakpoints".into()));
        }
        let mut prev = breakpoints[0].0;
        for &(t, v) in &breakpoints {
            if t < prev {
                return Err(Error::InvalidInput("waveform times must be non-decreasing".into()));
            }
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::InvalidInput("non-finite waveform breakpoint".into()));
            }
            prev = t;
        }
        Ok(Self { breakpoints })
    }

    pub fn constant(value: S, horizon_us: S) -> Self {
        Self { breakpoints: vec![(S::zero(), value), (horizon_us, value)] }
    }

    pub fn ramp(from: S, to: S, horizon_us: S) -> Self {
        Self { breakpoints: vec![(S::zero(), from), (horizon_us, to)] }
    }

    pub fn horizon(&self) -> S {
        self.breakpoints.last().unwrap().0
    }

    pub fn max_abs_value(&self) -> S {
        self.breakpoints.iter().map(|(_, v)| v.abs()).fold(S::zero(), S::max)
    }

    /// Linear interpolation, clamped to the end values outside the span.
    pub fn value(&self, t: S) -> S {
        let pts = &self.breakpoints;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        if t >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        // last segment whose start time is <= t; duplicated knots resolve
        // to the later segment, giving right-continuous steps
        let mut hi = 1;
        while hi < pts.len() - 1 && pts[hi].0 <= t {
            hi += 1;
        }
        let (t0, v0) = pts[hi - 1];
        let (t1, v1) = pts[hi];
        if t1 - t0 <= S::of(1e-15) {
            return v1;
        }
        v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
    }
}

/// Detuning channel: one shared waveform or one per atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: serde::de::DeserializeOwned"))]
pub enum DetuningChannel<S> {
    Global(Waveform<S>),
    Local(Vec<Waveform<S>>),
}

impl<S: Scalar> DetuningChannel<S> {
    pub fn value(&self, atom: usize, t: S) -> S {
        match self {
            DetuningChannel::Global(w) => w.value(t),
            DetuningChannel::Local(ws) => ws[atom].value(t),
        }
    }

    fn horizon(&self) -> S {
        match self {
            DetuningChannel::Global(w) => w.horizon(),
            DetuningChannel::Local(ws) => ws[0].horizon(),
        }
    }
}

/// Drive schedule: global Rabi waveform plus detunings, over one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: serde::de::DeserializeOwned"))]
pub struct DriveProgram<S> {
    pub omega: Waveform<S>,
    pub deltas: DetuningChannel<S>,
    pub horizon_us: S,
}

impl<S: Scalar> DriveProgram<S> {
    pub fn new(omega: Waveform<S>, deltas: DetuningChannel<S>, horizon_us: S) -> Result<Self> {
        let p = Self { omega, deltas, horizon_us };
        p.check_spans()?;
        Ok(p)
    }

    fn check_spans(&self) -> Result<()> {
        let tol = S::of(1e-9);
        let mut spans = vec![self.omega.horizon(), self.deltas.horizon()];
        if let DetuningChannel::Local(ws) = &self.deltas {
            spans.extend(ws.iter().map(|w| w.horizon()));
        }
        if spans.iter().any(|h| (*h - self.horizon_us).abs() > tol) {
            return Err(Error::InvalidInput("waveforms must span the program horizon".into()));
        }
        Ok(())
    }

    pub fn check_rabi_bound(&self, constants: &DeviceConstants<S>) -> Result<()> {
        if self.omega.max_abs_value() > constants.rabi_max + S::of(1e-12) {
            return Err(Error::GuardExceeded(format!(
                "Rabi waveform reaches {} MHz above the {} MHz cap",
                self.omega.max_abs_value(),
                constants.rabi_max
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("program JSON: {e}")))
    }
}

/// Pair-interaction mode of the schedule Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairMode {
    /// diagonal `V n_i n_j`
    Ising,
    /// flip-flop `V (X_i X_j + Y_i Y_j)`
    Xy,
}

/// Compiled time-dependent device Hamiltonian.
pub struct ScheduleHamiltonian<S> {
    dim: usize,
    atoms: usize,
    mode: PairMode,
    /// Ising: diagonal of the pair term; XY: empty.
    pair_diagonal: Vec<S>,
    /// XY: (mask of the two atoms, 2*V coefficient); Ising: empty.
    xy_pairs: Vec<(usize, S)>,
    omega: Waveform<S>,
    deltas: DetuningChannel<S>,
    /// Ising couples -delta to n_i; XY couples -delta/2 to Z_i.
    delta_on_occupation: bool,
}

impl<S: Scalar> ScheduleHamiltonian<S> {
    pub fn atom_count(&self) -> usize {
        self.atoms
    }

    /// Dense snapshot at a fixed time (test/diagnostic helper).
    pub fn dense_at(&self, tau: S) -> Matrix<C<S>> {
        let mut m = Matrix::zeros(self.dim);
        let mut basis = vec![C::new(S::zero(), S::zero()); self.dim];
        let mut out = vec![C::new(S::zero(), S::zero()); self.dim];
        for b in 0..self.dim {
            basis[b] = C::new(S::one(), S::zero());
            for o in out.iter_mut() {
                *o = C::new(S::zero(), S::zero());
            }
            self.accumulate(tau, &basis, &mut out);
            for (r, v) in out.iter().enumerate() {
                m[(r, b)] = *v;
            }
            basis[b] = C::new(S::zero(), S::zero());
        }
        m
    }
}

impl<S: Scalar> TimeDependentOperator<S> for ScheduleHamiltonian<S> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn accumulate(&self, tau: S, psi: &[C<S>], out: &mut [C<S>]) {
        let half_omega = self.omega.value(tau) * S::of(0.5);
        let deltas: Vec<S> = (0..self.atoms).map(|i| self.deltas.value(i, tau)).collect();
        for b in 0..self.dim {
            let mut d =
                if self.mode == PairMode::Ising { self.pair_diagonal[b] } else { S::zero() };
            for (i, dl) in deltas.iter().enumerate() {
                if self.delta_on_occupation {
                    if (b >> i) & 1 == 1 {
                        d = d - *dl;
                    }
                } else {
                    let z = if (b >> i) & 1 == 1 { S::one() } else { -S::one() };
                    d = d - *dl * S::of(0.5) * z;
                }
            }
            out[b] = out[b] + psi[b].scale(d);
        }
        if half_omega != S::zero() {
            for b in 0..self.dim {
                let amp = psi[b].scale(half_omega);
                for i in 0..self.atoms {
                    out[b ^ (1 << i)] = out[b ^ (1 << i)] + amp;
                }
            }
        }
        if self.mode == PairMode::Xy {
            for &(mask, two_v) in &self.xy_pairs {
                for b in 0..self.dim {
                    let pair = b & mask;
                    if pair != 0 && pair != mask {
                        out[b ^ mask] = out[b ^ mask] + psi[b].scale(two_v);
                    }
                }
            }
        }
    }
}

fn check_program<S: Scalar>(
    register: &AtomRegister<S>,
    constants: &DeviceConstants<S>,
    program: &DriveProgram<S>,
) -> Result<()> {
    if register.is_empty() {
        return Err(Error::InvalidInput("empty register".into()));
    }
    if let DetuningChannel::Local(ws) = &program.deltas {
        if ws.len() != register.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} detuning waveforms for {} atoms",
                ws.len(),
                register.len()
            )));
        }
    }
    program.check_spans()?;
    program.check_rabi_bound(constants)?;
    register.check_min_distance(constants.min_distance_um)?;
    Ok(())
}

/// Time-dependent Ising-mode Hamiltonian for a register and drive program.
pub fn ising_hamiltonian<S: Scalar>(
    register: &AtomRegister<S>,
    constants: &DeviceConstants<S>,
    program: &DriveProgram<S>,
) -> Result<ScheduleHamiltonian<S>> {
    check_program(register, constants, program)?;
    let atoms = register.len();
    let dim = 1 << atoms;
    let v = register.interaction_matrix(constants);
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
    Ok(ScheduleHamiltonian {
        dim,
        atoms,
        mode: PairMode::Ising,
        pair_diagonal,
        xy_pairs: Vec::new(),
        omega: program.omega.clone(),
        deltas: program.deltas.clone(),
        delta_on_occupation: true,
    })
}

/// Time-dependent XY-mode Hamiltonian: pair term `(C3/r^3)(X X + Y Y)`,
/// drive `(Omega/2) sum X - (delta_i/2) sum Z`.
pub fn xy_hamiltonian<S: Scalar>(
    register: &AtomRegister<S>,
    constants: &DeviceConstants<S>,
    program: &DriveProgram<S>,
) -> Result<ScheduleHamiltonian<S>> {
    check_program(register, constants, program)?;
    let atoms = register.len();
    let v = register.xy_interaction_matrix(constants);
    let mut xy_pairs = Vec::new();
    for i in 0..atoms {
        for j in (i + 1)..atoms {
            // (XX + YY) on an anti-aligned pair carries amplitude 2
            xy_pairs.push(((1 << i) | (1 << j), S::of(2.0) * v[(i, j)]));
        }
    }
    Ok(ScheduleHamiltonian {
        dim: 1 << atoms,
        atoms,
        mode: PairMode::Xy,
        pair_diagonal: Vec::new(),
        xy_pairs,
        omega: program.omega.clone(),
        deltas: program.deltas.clone(),
        delta_on_occupation: false,
    })
}

/// Final detunings realizing the negated cluster spin Hamiltonian:
/// `delta_i = 0.5 * sum_j V_ij + 2 h_i` with `h_i = z_i * mean(K) * m_bar`,
/// where `K` is the pair-coupling matrix the embedding targets through
/// `C6/r^6 = -4 K_ij`. The sum uses the interactions the register actually
/// realizes, so residual embedding error stays confined to the pair term.
pub fn anneal_end_detunings<S: Scalar>(
    register: &AtomRegister<S>,
    constants: &DeviceConstants<S>,
    coupling: &Matrix<S>,
    nn_pairs: &[(usize, usize)],
    m_bar: S,
    exterior_z: &[usize],
) -> Vec<S> {
    let n = register.len();
    let v = register.interaction_matrix(constants);
    let kbar = if nn_pairs.is_empty() {
        S::zero()
    } else {
        nn_pairs.iter().map(|&(a, b)| coupling[(a, b)]).sum::<S>() / S::of(nn_pairs.len() as f64)
    };
    (0..n)
        .map(|i| {
            let vsum: S = (0..n).filter(|&j| j != i).map(|j| v[(i, j)]).sum();
            let h_i = S::of(exterior_z[i] as f64) * kbar * m_bar;
            vsum * S::of(0.5) + S::of(2.0) * h_i
        })
        .collect()
}

/// Linear annealing schedule: Rabi ramps 0 -> U/2, local detunings ramp
/// `delta_start` -> their end values.
#[allow(clippy::too_many_arguments)]
pub fn linear_anneal_program<S: Scalar>(
    register: &AtomRegister<S>,
    constants: &DeviceConstants<S>,
    u_mhz: S,
    coupling: &Matrix<S>,
    nn_pairs: &[(usize, usize)],
    m_bar: S,
    exterior_z: &[usize],
    tau_max_us: S,
    delta_start_mhz: S,
) -> Result<DriveProgram<S>> {
    if tau_max_us <= S::zero() {
        return Err(Error::InvalidInput("tau_max must be positive".into()));
    }
    let omega_end = u_mhz * S::of(0.5);
    if omega_end > constants.rabi_max + S::of(1e-12) {
        return Err(Error::GuardExceeded(format!(
            "anneal endpoint Omega = U/2 = {} MHz exceeds the {} MHz cap",
            omega_end, constants.rabi_max
        )));
    }
    let ends = anneal_end_detunings(register, constants, coupling, nn_pairs, m_bar, exterior_z);
    let omega = Waveform::ramp(S::zero(), omega_end, tau_max_us);
    let deltas = DetuningChannel::Local(
        ends.iter().map(|&e| Waveform::ramp(delta_start_mhz, e, tau_max_us)).collect(),
    );
    DriveProgram::new(omega, deltas, tau_max_us)
}

/// Interaction quench: Rabi switches 0 -> U_f/2 over `tau_ramp` and holds;
/// detunings hold the equilibrium-solution end values for the whole run.
#[allow(clippy::too_many_arguments)]
pub fn quench_program<S: Scalar>(
    register: &AtomRegister<S>,
    constants: &DeviceConstants<S>,
    u_f_mhz: S,
    tau_ramp_us: S,
    hold_us: S,
    coupling: &Matrix<S>,
    nn_pairs: &[(usize, usize)],
    m_bar: S,
    exterior_z: &[usize],
) -> Result<DriveProgram<S>> {
    if tau_ramp_us < constants.min_ramp_us - S::of(1e-12) {
        return Err(Error::InvalidInput(format!(
            "switch-on time {} us under the device floor {} us",
            tau_ramp_us, constants.min_ramp_us
        )));
    }
    let omega_end = u_f_mhz * S::of(0.5);
    if omega_end > constants.rabi_max + S::of(1e-12) {
        return Err(Error::GuardExceeded(format!(
            "quench endpoint Omega = U_f/2 = {} MHz exceeds the {} MHz cap",
            omega_end, constants.rabi_max
        )));
    }
    let horizon = tau_ramp_us + hold_us;
    let ends = anneal_end_detunings(register, constants, coupling, nn_pairs, m_bar, exterior_z);
    let omega = Waveform::new(vec![
        (S::zero(), S::zero()),
        (tau_ramp_us, omega_end),
        (horizon, omega_end),
    ])?;
    let deltas =
        DetuningChannel::Local(ends.iter().map(|&e| Waveform::constant(e, horizon)).collect());
    DriveProgram::new(omega, deltas, horizon)
}
