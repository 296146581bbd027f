//! Fast property suite (runs on every commit): integrator bounds, the
//! Fock-space oracle for the free-fermion step, estimator unbiasedness,
//! pulse-splitting neutrality and related invariants.

use proptest::prelude::*;
use rydsim_core::derand::{estimate_energy, greedy_derandomize, sample_plan};
use rydsim_core::device::{
    ising_hamiltonian, linear_anneal_program, AtomRegister, DetuningChannel, DeviceConstants,
    DriveProgram, Waveform,
};
use rydsim_core::dynamics::{
    apply_spam, correlators_from_shots, evolve_lindblad, evolve_lindblad_with, evolve_pure,
    sample_bitstrings, EvolutionSettings, NoiseSpec, QuantumState, ShotRecord,
};
use rydsim_core::linalg::Matrix;
use rydsim_core::slavespin::{self, build_cluster, LatticeSpec, SsmfSettings};
use rydsim_core::vqe::{split_time_label, PulseParams};
use rydsim_core::{Complex, PauliHamiltonian, Real};

fn data(path: &str) -> String {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/");
    std::fs::read_to_string(format!("{root}{path}")).expect("data file present")
}

/// An annealing-scale schedule on the four-site register used by the
/// integrator bound checks.
fn n4_anneal() -> (AtomRegister<Real>, DeviceConstants<Real>, DriveProgram<Real>) {
    let constants = DeviceConstants::default();
    let spec = LatticeSpec::<Real>::square(2, 2, 1.0 / 3.0);
    let cluster = build_cluster(&spec).unwrap();
    let j = slavespin::equilibrium_couplings_u0(&cluster).unwrap();
    let k = Matrix::from_fn(4, |r, c| 2.0 * j[(r, c)]);
    let r0 = rydsim_core::embedding::r_init(&k, &constants).unwrap();
    let pos: Vec<[Real; 2]> =
        cluster.unit_positions.iter().map(|p| [p[0] * r0 + 20.0, p[1] * r0 + 20.0]).collect();
    let register = AtomRegister::new(pos, constants.min_distance_um).unwrap();
    let program = linear_anneal_program(
        &register,
        &constants,
        4.0,
        &k,
        &cluster.nn_pairs,
        -0.5,
        &cluster.exterior_z,
        4.0,
        5.0,
    )
    .unwrap();
    (register, constants, program)
}

#[test]
fn pure_state_norm_drift_stays_under_1e6_over_4us() {
    let (register, constants, program) = n4_anneal();
    let h = ising_hamiltonian(&register, &constants, &program).unwrap();
    let mut settings = EvolutionSettings::<Real>::default();
    settings.norm_tolerance = 1e-6;
    let out = evolve_pure(&h, &QuantumState::ground(4), 4.0, &settings).unwrap();
    let drift = (out.norm() - 1.0).abs();
    assert!(drift < 1e-6, "norm drift {drift:e}");
    println!("PASS criterion 8a: norm drift {drift:.2e} over 4 us");
}

#[test]
fn step_halving_changes_final_fidelity_under_1e8() {
    let (register, constants, program) = n4_anneal();
    let h = ising_hamiltonian(&register, &constants, &program).unwrap();
    let coarse = evolve_pure(
        &h,
        &QuantumState::ground(4),
        4.0,
        &EvolutionSettings::with_step(2.5e-4),
    )
    .unwrap();
    let fine = evolve_pure(
        &h,
        &QuantumState::ground(4),
        4.0,
        &EvolutionSettings::with_step(1.25e-4),
    )
    .unwrap();
    let defect = (1.0 - coarse.fidelity(&fine)).abs();
    assert!(defect < 1e-8, "step-halving fidelity defect {defect:e}");
    println!("PASS criterion 8b: step-halving fidelity defect {defect:.2e}");
}

#[test]
fn constant_hamiltonian_conserves_energy() {
    let reg = AtomRegister::<Real>::new(vec![[0.0, 0.0], [9.0, 0.0]], 4.0).unwrap();
    let constants = DeviceConstants::default();
    let tau = 2.0;
    let program = DriveProgram::new(
        Waveform::constant(1.3, tau),
        DetuningChannel::Global(Waveform::constant(0.4, tau)),
        tau,
    )
    .unwrap();
    let h = ising_hamiltonian(&reg, &constants, &program).unwrap();
    let dense = h.dense_at(0.0);
    let energy = |psi: &QuantumState<Real>| -> Real {
        let mut acc = Complex::new(0.0, 0.0);
        for r in 0..4 {
            for c in 0..4 {
                acc += psi.amplitudes[r].conj() * dense[(r, c)] * psi.amplitudes[c];
            }
        }
        acc.re
    };
    let mut start = QuantumState::ground(2);
    start.amplitudes[1] = Complex::new(0.6, 0.1);
    start.amplitudes[2] = Complex::new(-0.2, 0.3);
    start.normalize();
    let e0 = energy(&start);
    let out = evolve_pure(&h, &start, tau, &EvolutionSettings::default()).unwrap();
    let e1 = energy(&out);
    assert!(
        (e1 - e0).abs() <= 1e-6 * e0.abs().max(1.0),
        "energy drifted {e0} -> {e1}"
    );
}

#[test]
fn lindblad_bounds_hold_at_record_times() {
    let (register, constants, program) = n4_anneal();
    let h = ising_hamiltonian(&register, &constants, &program).unwrap();
    let noise = NoiseSpec { gamma_mhz: 0.05, eps: 0.0, eps_prime: 0.0, shots: 1 };
    let mut settings = EvolutionSettings::<Real>::default();
    settings.record_times = vec![1.0, 2.0, 3.0, 4.0];
    settings.validate_records = true; // trace/hermiticity/positivity checks
    let rho0 = QuantumState::<Real>::ground(4).to_density();
    let mut purities = Vec::new();
    let out = evolve_lindblad_with(&h, &rho0, &noise, 4.0, &settings, |_, rho| {
        purities.push(rho.purity());
        Ok(())
    })
    .unwrap();
    out.validate(true).unwrap();
    println!("PASS criterion 8c: Lindblad trace/hermiticity/positivity at 4 record times");
}

#[test]
fn lindblad_purity_non_increasing_for_constant_h() {
    let reg = AtomRegister::<Real>::new(vec![[0.0, 0.0], [8.0, 0.0]], 4.0).unwrap();
    let constants = DeviceConstants::default();
    let tau = 3.0;
    let program = DriveProgram::new(
        Waveform::constant(1.0, tau),
        DetuningChannel::Global(Waveform::constant(0.0, tau)),
        tau,
    )
    .unwrap();
    let h = ising_hamiltonian(&reg, &constants, &program).unwrap();
    let noise = NoiseSpec { gamma_mhz: 0.3, eps: 0.0, eps_prime: 0.0, shots: 1 };
    let mut settings = EvolutionSettings::<Real>::default();
    settings.record_times = (1..=6).map(|k| 0.5 * k as Real).collect();
    let rho0 = QuantumState::<Real>::ground(2).to_density();
    let mut purities = vec![rho0.purity()];
    evolve_lindblad_with(&h, &rho0, &noise, tau, &settings, |_, rho| {
        purities.push(rho.purity());
        Ok(())
    })
    .unwrap();
    for w in purities.windows(2) {
        assert!(w[1] <= w[0] + 1e-8, "purity rose {} -> {}", w[0], w[1]);
    }
}

#[test]
fn lindblad_gamma_zero_matches_pure_evolution() {
    let (register, constants, program) = n4_anneal();
    let h = ising_hamiltonian(&register, &constants, &program).unwrap();
    let settings = EvolutionSettings::<Real>::default();
    let pure = evolve_pure(&h, &QuantumState::ground(4), 4.0, &settings).unwrap();
    let noise = NoiseSpec { gamma_mhz: 0.0, eps: 0.0, eps_prime: 0.0, shots: 1 };
    let rho = evolve_lindblad(
        &h,
        &QuantumState::<Real>::ground(4).to_density(),
        &noise,
        4.0,
        &settings,
    )
    .unwrap();
    let fid = rho.fidelity_with_pure(&pure);
    assert!(fid > 1.0 - 1e-8, "closed-system fidelity {fid}");
}

#[test]
fn single_qubit_dephasing_matches_closed_form() {
    // H = 0, gamma > 0: the off-diagonal decays as exp(-gamma tau / 2);
    // oracle value computed analytically at tau = 1/gamma
    let gamma: Real = 0.8;
    let tau = 1.0 / gamma;
    let reg = AtomRegister::<Real>::new(vec![[0.0, 0.0]], 4.0).unwrap();
    let constants = DeviceConstants::default();
    let program = DriveProgram::new(
        Waveform::constant(0.0, tau),
        DetuningChannel::Global(Waveform::constant(0.0, tau)),
        tau,
    )
    .unwrap();
    let h = ising_hamiltonian(&reg, &constants, &program).unwrap();
    let mut plus = QuantumState::<Real>::ground(1);
    plus.amplitudes[1] = Complex::new(1.0, 0.0);
    plus.normalize();
    let noise = NoiseSpec { gamma_mhz: gamma, eps: 0.0, eps_prime: 0.0, shots: 1 };
    let rho = evolve_lindblad(&h, &plus.to_density(), &noise, tau, &EvolutionSettings::default())
        .unwrap();
    let coherence = rho.entries[(0, 1)].norm();
    let expected = 0.5 * (-0.5f64).exp();
    assert!(
        (coherence - expected).abs() < 0.01 * expected,
        "coherence {coherence} vs {expected}"
    );
}

/// Many-body Fock-space oracle for the free-fermion step: diagonalize
/// `H = sum_{ij sigma} Q_ij f+_i f_j` over all 2^(2N) occupation states,
/// restrict to half filling, and average the one-particle density matrix
/// over the (possibly degenerate) ground manifold.
fn fock_density_oracle(q: &Matrix<Real>) -> Matrix<Real> {
    let n = q.n;
    let orbitals = 2 * n; // (site, spin): p = i + n * s
    let dim = 1usize << orbitals;
    // dense Fock Hamiltonian with fermionic signs (occupation-number order)
    let mut h = Matrix::<Real>::zeros(dim);
    for state in 0..dim {
        for s in 0..2usize {
            for i in 0..n {
                for j in 0..n {
                    if q[(i, j)] == 0.0 {
                        continue;
                    }
                    let p = i + n * s;
                    let r = j + n * s;
                    // f+_p f_r |state>
                    if state & (1 << r) == 0 {
                        continue;
                    }
                    let mid = state & !(1 << r);
                    if mid & (1 << p) != 0 {
                        continue;
                    }
                    let sign_r = ((state & ((1 << r) - 1)).count_ones() % 2) as i32;
                    let sign_p = ((mid & ((1 << p) - 1)).count_ones() % 2) as i32;
                    let sign = if (sign_r + sign_p) % 2 == 0 { 1.0 } else { -1.0 };
                    let target = mid | (1 << p);
                    h[(target, state)] += sign * q[(i, j)];
                }
            }
        }
    }
    // restrict to the half-filled sector
    let sector: Vec<usize> =
        (0..dim).filter(|s| s.count_ones() as usize == n).collect();
    let sdim = sector.len();
    let mut hs = Matrix::<Real>::zeros(sdim);
    for (a, &sa) in sector.iter().enumerate() {
        for (b, &sb) in sector.iter().enumerate() {
            hs[(a, b)] = h[(sa, sb)];
        }
    }
    let (vals, vecs) = rydsim_core::linalg::eigh_real(&hs).unwrap();
    let degenerate: Vec<usize> =
        (0..sdim).filter(|&k| (vals[k] - vals[0]).abs() < 1e-9).collect();
    // G averaged over the ground manifold, spin-up species
    let mut g = Matrix::<Real>::zeros(n);
    for &k in &degenerate {
        let vec: Vec<Real> = vecs.column(k);
        for i in 0..n {
            for j in 0..n {
                // <psi| f+_i f_j |psi>
                let mut acc = 0.0;
                for (b, &sb) in sector.iter().enumerate() {
                    if sb & (1 << j) == 0 {
                        continue;
                    }
                    let mid = sb & !(1 << j);
                    if mid & (1 << i) != 0 {
                        continue;
                    }
                    let sign_j = ((sb & ((1 << j) - 1)).count_ones() % 2) as i32;
                    let sign_i = ((mid & ((1 << i) - 1)).count_ones() % 2) as i32;
                    let sign = if (sign_i + sign_j) % 2 == 0 { 1.0 } else { -1.0 };
                    let target = mid | (1 << i);
                    let a = sector.binary_search(&target).unwrap();
                    acc += sign * vec[a] * vec[b];
                }
                g[(i, j)] += acc / degenerate.len() as Real;
            }
        }
    }
    g
}

#[test]
fn bogoliubov_density_matches_fock_oracle_on_four_sites() {
    let spec = LatticeSpec::<Real>::square(2, 2, 1.0);
    let cluster = build_cluster(&spec).unwrap();
    let (g, fractional) = slavespin::free_fermion_density(&cluster.hopping).unwrap();
    assert!(fractional, "the 2x2 cluster has a degenerate Fermi shell");
    let oracle = fock_density_oracle(&cluster.hopping);
    let mut worst: Real = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((g[(i, j)] - oracle[(i, j)]).abs());
        }
    }
    assert!(worst < 1e-10, "G mismatch {worst:e}");
    println!("PASS criterion 8d: Bogoliubov G matches the Fock oracle to {worst:.1e}");

    // a non-degenerate case: the open 4-site chain
    let chain = build_cluster(&LatticeSpec::<Real>::square(4, 1, 1.0)).unwrap();
    let (g2, frac2) = slavespin::free_fermion_density(&chain.hopping).unwrap();
    assert!(!frac2);
    let oracle2 = fock_density_oracle(&chain.hopping);
    for i in 0..4 {
        for j in 0..4 {
            assert!((g2[(i, j)] - oracle2[(i, j)]).abs() < 1e-10);
        }
    }
}

#[test]
fn fixed_point_is_independent_of_m0() {
    let spec = LatticeSpec::<Real>::square(2, 2, 1.0);
    let mut z = Vec::new();
    for m0 in [0.1, 0.5, 0.9] {
        let mut s = SsmfSettings::exact(8);
        s.m0 = m0;
        s.k = 60;
        s.eta = 1e-7;
        z.push(slavespin::run_ssmf(&spec, 10.0, &s).unwrap().z);
    }
    let spread = z.iter().cloned().fold(Real::NEG_INFINITY, Real::max)
        - z.iter().cloned().fold(Real::INFINITY, Real::min);
    assert!(spread < 0.01, "fixed-point spread {spread} over m0 choices");
    println!("PASS criterion 8e: fixed-point spread {spread:.2e} across m0 in {{0.1,0.5,0.9}}");
}

#[test]
fn derandomized_estimator_is_unbiased() {
    let h = PauliHamiltonian::parse(&data("lih_1.5A.ham")).unwrap();
    let (e0, vec) = h.ground_energy_exact().unwrap();
    let state = QuantumState { amplitudes: vec };
    let plan = greedy_derandomize(&h, 1000, 0.05).unwrap();
    let trials = 200u64;
    let mut estimates = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let records = sample_plan(&state, &plan, 40_000 + t).unwrap();
        let (e, _) = estimate_energy(&h, &plan, &records).unwrap();
        estimates.push(e);
    }
    let mean = estimates.iter().sum::<Real>() / trials as Real;
    let var = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<Real>()
        / (trials as Real - 1.0);
    let se = (var / trials as Real).sqrt();
    assert!(
        (mean - e0).abs() <= 3.0 * se,
        "bias {:.2e} exceeds 3 SE = {:.2e}",
        (mean - e0).abs(),
        3.0 * se
    );
    println!(
        "PASS criterion 8f: estimator mean within {:.2} SE of the exact energy",
        (mean - e0).abs() / se
    );
}

#[test]
fn split_neutrality_over_many_seeds() {
    for seed in 0..200u64 {
        let mut rng = rydsim_core::rng::seeded(seed);
        let params = PulseParams::<Real> {
            edges_us: vec![1.1, 2.0, 4.0],
            omegas_mhz: vec![0.3, 1.7, 0.9],
            deltas_mhz: vec![-0.4, 0.2, 1.1],
        };
        let (split, _) = split_time_label(&params, &mut rng, 0.016);
        for k in 0..80 {
            let t = 0.013 + 0.0497 * k as Real;
            assert_eq!(params.values_at(t), split.values_at(t), "seed {seed} t {t}");
        }
    }
    println!("PASS criterion 8g: pulse splitting leaves the waveform pointwise unchanged");
}

#[test]
fn seeded_shot_records_are_identical() {
    let mut state = QuantumState::<Real>::ground(3);
    state.amplitudes[5] = Complex::new(0.8, 0.1);
    state.amplitudes[2] = Complex::new(-0.3, 0.4);
    state.normalize();
    let a = sample_bitstrings(&state, 500, 99).unwrap();
    let b = sample_bitstrings(&state, 500, 99).unwrap();
    assert_eq!(a, b);
    let c = apply_spam(&a, 0.1, 0.2, 7).unwrap();
    let d = apply_spam(&a, 0.1, 0.2, 7).unwrap();
    assert_eq!(c, d);
    println!("PASS criterion 8h: seeded sampling and readout corruption are reproducible");
}

#[test]
fn sampling_converges_to_born_probabilities() {
    // (|00> + |11>)/sqrt(2): each outcome within 0.005 of one half at 1e6 shots
    let mut bell = QuantumState::<Real>::ground(2);
    bell.amplitudes[3] = Complex::new(1.0, 0.0);
    bell.normalize();
    let record = sample_bitstrings(&bell, 1_000_000, 1).unwrap();
    let mut counts = [0usize; 4];
    for &b in &record.bitstrings {
        counts[b] += 1;
    }
    assert_eq!(counts[1] + counts[2], 0, "mass on odd-parity outcomes");
    for &c in &[counts[0], counts[3]] {
        let f = c as Real / 1e6;
        assert!((f - 0.5).abs() < 0.005, "frequency {f}");
    }
    // deterministic outcome check
    let rr = QuantumState::<Real>::basis_state(2, 3);
    let rec = sample_bitstrings(&rr, 100, 4).unwrap();
    assert!(rec.bitstrings.iter().all(|&b| b == 3));
}

#[test]
fn spam_statistics_match_probabilities() {
    let zeros = ShotRecord { qubits: 10, bitstrings: vec![0usize; 10_000], seed: 0 };
    let flipped = apply_spam::<Real>(&zeros, 0.03, 0.0, 5).unwrap();
    let ones: usize = flipped.bitstrings.iter().map(|b| b.count_ones() as usize).sum();
    let frac = ones as Real / 100_000.0;
    assert!((frac - 0.03).abs() < 0.002, "flip fraction {frac}");
    // certain flip
    let all = apply_spam::<Real>(&zeros, 1.0, 0.0, 5).unwrap();
    assert!(all.bitstrings.iter().all(|&b| b == (1 << 10) - 1));
    // identity at zero probabilities
    let same = apply_spam::<Real>(&zeros, 0.0, 0.0, 5).unwrap();
    assert_eq!(same, zeros);
}

#[test]
fn shot_correlators_reproduce_mixtures() {
    // 100 repetitions of bits 11
    let rec = ShotRecord { qubits: 2, bitstrings: vec![3; 100], seed: 0 };
    let (m, c) = correlators_from_shots::<Real>(&rec).unwrap();
    assert_eq!(m, vec![1.0, 1.0]);
    assert_eq!(c[(0, 1)], 1.0);
    // an equal mix of 01 and 10
    let mut bits = vec![1usize; 50];
    bits.extend(vec![2usize; 50]);
    let rec = ShotRecord { qubits: 2, bitstrings: bits, seed: 0 };
    let (m, c) = correlators_from_shots::<Real>(&rec).unwrap();
    assert!(m[0].abs() < 1e-12 && m[1].abs() < 1e-12);
    assert_eq!(c[(0, 1)], -1.0);
    // empty record is an error
    let empty = ShotRecord { qubits: 2, bitstrings: vec![], seed: 0 };
    assert!(correlators_from_shots::<Real>(&empty).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn waveform_midpoint_is_average(a in -5.0f64..5.0, b in -5.0f64..5.0, t0 in 0.1f64..3.0) {
        let w = Waveform::new(vec![(0.0, a), (t0, b)]).unwrap();
        let mid = w.value(t0 / 2.0);
        prop_assert!((mid - 0.5 * (a + b)).abs() < 1e-12);
    }

    #[test]
    fn expectation_is_linear(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, seed in 0u64..500) {
        let h1 = PauliHamiltonian::parse("qubits: 2\n1.0 Z0 Z1\n0.5 X0\n").unwrap();
        let h2 = PauliHamiltonian::parse("qubits: 2\n0.3 Y0 Y1\n-0.2 Z1\n").unwrap();
        let combo = h1.linear_combination(c1, &h2, c2).unwrap();
        let mut rng = rydsim_core::rng::seeded(seed);
        let mut state = QuantumState::<Real>::ground(2);
        for amp in state.amplitudes.iter_mut() {
            use rand::Rng;
            *amp = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        state.normalize();
        let lhs = combo.expectation(&state.amplitudes).unwrap();
        let rhs = c1 * h1.expectation(&state.amplitudes).unwrap()
            + c2 * h2.expectation(&state.amplitudes).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn ground_energy_is_a_lower_bound(seed in 0u64..100) {
        // variational bound over random unit states
        let h = PauliHamiltonian::parse(
            "qubits: 3\n0.8 Z0 Z1\n-0.5 X1\n0.3 Y0 Y2\n0.4 Z2\n-0.1 X0 X1 X2\n",
        )
        .unwrap();
        let (e0, _) = h.ground_energy_exact().unwrap();
        let mut rng = rydsim_core::rng::seeded(seed);
        let mut state = QuantumState::<Real>::ground(3);
        for amp in state.amplitudes.iter_mut() {
            use rand::Rng;
            *amp = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        state.normalize();
        let e = h.expectation(&state.amplitudes).unwrap();
        prop_assert!(e >= e0 - 1e-10);
    }

    #[test]
    fn shot_correlator_estimates_stay_bounded(seed in 0u64..200, shots in 1usize..400) {
        let mut state = QuantumState::<Real>::ground(3);
        use rand::Rng;
        let mut rng = rydsim_core::rng::seeded(seed);
        for amp in state.amplitudes.iter_mut() {
            *amp = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        state.normalize();
        let rec = sample_bitstrings(&state, shots, seed).unwrap();
        let (m, c) = correlators_from_shots::<Real>(&rec).unwrap();
        for v in &m {
            prop_assert!((-1.0..=1.0).contains(v));
        }
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((-1.0..=1.0).contains(&c[(i, j)]));
                prop_assert!((c[(i, j)] - c[(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parse_merges_duplicate_terms(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0) {
        let text = format!("qubits: 2\n{c1} Z0 Z1\n{c2} Z1 Z0\n");
        let h = PauliHamiltonian::parse(&text).unwrap();
        prop_assert_eq!(h.term_count(), 1);
        prop_assert!((h.terms()[0].coefficient - (c1 + c2)).abs() < 1e-12);
    }
}
