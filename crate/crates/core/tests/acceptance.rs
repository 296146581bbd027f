//! Acceptance gate: one test per shipped criterion, each printing a
//! PASS/FAIL line with the measured quantities. Criterion 5 carries the
//! full-budget variational runs and is marked for the slow suite
//! (`cargo test -- --ignored`).

use rydsim_core::derand::{estimate_energy, greedy_derandomize, sample_plan, MeasurementBasis};
use rydsim_core::dynamics::{sample_bitstrings, NoiseSpec, QuantumState};
use rydsim_core::paulialg::PauliAxis;
use rydsim_core::slavespin::{
    self, build_cluster, cmft_ising_standalone, dz_du, mott_sweep, quench_dynamics,
    quench_spectrum, AnnealSettings, CorrelatorAxis, DistanceMetric, LatticeSpec, SpinBackend,
    SsmfSettings,
};
use rydsim_core::vqe::{scan_product_states, vqe_optimize, xy_ucc_h2, EstimatorSettings, VqeConfig};
use rydsim_core::{DeviceConstants, PauliHamiltonian, Real};

fn data(path: &str) -> String {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/");
    std::fs::read_to_string(format!("{root}{path}")).expect("data file present")
}

fn grid(start: Real, stop: Real, points: usize) -> Vec<Real> {
    (0..points)
        .map(|i| start + (stop - start) * i as Real / (points - 1) as Real)
        .collect()
}

/// Criterion 1: exact-backend Mott transition. The 4-site curve decreases
/// monotonically from Z >= 0.99 to Z <= 0.01 at finite U_c; the 12-site
/// transition sits within 1.5 MHz of 13.5 MHz at unit hopping.
#[test]
fn criterion_1_mott_transition_exact() {
    let spec = LatticeSpec::<Real>::square(2, 2, 1.0);
    let (rows, u_c4) = mott_sweep(&spec, &grid(0.0, 19.0, 20), &SsmfSettings::exact(11)).unwrap();
    assert!(rows[0].z >= 0.99, "Z(0) = {}", rows[0].z);
    for w in rows.windows(2) {
        assert!(w[1].z <= w[0].z + 0.01, "Z rose {} -> {}", w[0].z, w[1].z);
    }
    let u_c4 = u_c4.expect("4-site transition on the grid");
    assert!(rows.last().unwrap().z <= 0.01);

    let spec12 = LatticeSpec::<Real>::square(4, 3, 1.0);
    let (_, u_c12) = mott_sweep(&spec12, &grid(10.0, 16.0, 13), &SsmfSettings::exact(12)).unwrap();
    let u_c12 = u_c12.expect("12-site transition on the grid");
    assert!(
        (u_c12 - 13.5).abs() <= 1.5,
        "12-site U_c = {u_c12} MHz outside 13.5 +/- 1.5"
    );
    println!("PASS criterion 1: N=4 monotone with U_c = {u_c4} MHz; N=12 U_c = {u_c12} MHz");
}

/// Criterion 2: noiseless annealing against exact diagonalization on the
/// 4-site grid: |dZ| <= 0.05 everywhere and every inner solve keeps
/// annealing fidelity >= 0.99.
#[test]
fn criterion_2_backend_equivalence() {
    let spec = LatticeSpec::<Real>::square(2, 2, 1.0 / 3.0);
    let us = grid(0.25, 5.0, 20);
    let mut worst_dz: Real = 0.0;
    let mut worst_fid: Real = 1.0;
    for (i, &u) in us.iter().enumerate() {
        let exact = slavespin::run_ssmf(&spec, u, &SsmfSettings::exact(21)).unwrap();
        let mut s = SsmfSettings::exact(21 + i as u64);
        s.backend = SpinBackend::Anneal(AnnealSettings::<Real>::noiseless(4.0));
        let annealed = slavespin::run_ssmf(&spec, u, &s).unwrap();
        worst_dz = worst_dz.max((annealed.z - exact.z).abs());
        worst_fid = worst_fid.min(annealed.min_fidelity.expect("fidelity tracked"));
    }
    assert!(worst_dz <= 0.05, "worst |dZ| = {worst_dz}");
    assert!(worst_fid >= 0.99, "worst fidelity = {worst_fid}");
    println!("PASS criterion 2: worst |dZ| = {worst_dz:.4}, worst fidelity = {worst_fid:.5}");
}

/// Criterion 3: the noisy pipeline survives: over five seeds, the median Z
/// stays above 0.6 at the smallest interaction and below 0.15 at the
/// largest (gamma = 0.02 MHz, eps = eps' = 3%, 150 shots).
#[test]
fn criterion_3_noisy_pipeline_survival() {
    let spec = LatticeSpec::<Real>::square(2, 2, 1.0 / 3.0);
    let mut low = Vec::new();
    let mut high = Vec::new();
    for seed in 0..5u64 {
        let mut s = SsmfSettings::exact(100 + seed);
        s.backend =
            SpinBackend::Anneal(AnnealSettings::<Real>::with_noise(4.0, NoiseSpec::headline()));
        low.push(slavespin::run_ssmf(&spec, 0.25, &s).unwrap().z);
        high.push(slavespin::run_ssmf(&spec, 5.0, &s).unwrap().z);
    }
    low.sort_by(|a, b| a.partial_cmp(b).unwrap());
    high.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (med_low, med_high) = (low[2], high[2]);
    assert!(med_low > 0.6, "metallic-side median Z = {med_low}");
    assert!(med_high < 0.15, "insulating-side median Z = {med_high}");
    println!("PASS criterion 3: median Z = {med_low:.3} at U = 0.25, {med_high:.3} at U = 5");
}

/// Criterion 4: quench spectroscopy at six sites: the Z spectrum is
/// dominated by U_f at U_f = 25 MHz (within one bin), carries an
/// identifiable U_f/2 line at U_f = 2 MHz, and the magnetization peaks
/// coincide with exact eigenenergy differences within one bin.
#[test]
fn criterion_4_quench_spectroscopy() {
    let hopping = 0.125;
    let spec = LatticeSpec::<Real>::square(3, 2, hopping);
    let settings = SsmfSettings::exact(4);
    let mut messages = Vec::new();
    for u_f in [2.0, 13.0, 25.0] {
        let out = quench_dynamics(&spec, u_f, &settings, 4.0, 0.01).unwrap();
        let spectrum = quench_spectrum(&out).unwrap();
        let bin = spectrum.bin_mhz;
        if u_f == 25.0 {
            let (f, _) = spectrum.dominant_peak(0.3).unwrap();
            assert!((f - u_f).abs() <= bin + 1e-9, "dominant peak at {f} for U_f = {u_f}");
            messages.push(format!("U_f=25 dominant at {f:.3} MHz"));
        }
        if u_f == 2.0 {
            let peaks = spectrum.local_maxima(0.3);
            let half = peaks.iter().find(|(f, _)| (f - u_f / 2.0).abs() <= bin + 1e-9);
            assert!(half.is_some(), "no U_f/2 component for U_f = {u_f}: {peaks:?}");
            messages.push(format!("U_f=2 shows U_f/2 at {:.3} MHz", half.unwrap().0));
        }
        // magnetization peaks against exact eigenenergy differences
        let cluster = build_cluster(&spec).unwrap();
        let j = slavespin::equilibrium_couplings_u0(&cluster).unwrap();
        let h = slavespin::spin_cluster_hamiltonian(&j, u_f, 1.0, &cluster).unwrap();
        let eigs = h.eigenvalues().unwrap();
        let m_trace: Vec<Real> = out.z.iter().map(|z| z.sqrt()).collect();
        let m_spec = rydsim_core::spectral::dft_spectrum(&m_trace, 0.01).unwrap();
        let maxima = m_spec.local_maxima(0.3);
        let floor = maxima.first().map(|(_, a)| a * 0.05).unwrap_or(0.0);
        for &(f, a) in maxima.iter().take(5) {
            if a < floor {
                continue;
            }
            let matched = eigs.iter().enumerate().any(|(x, ex)| {
                eigs[..x].iter().any(|ey| ((ex - ey).abs() - f).abs() <= bin + 1e-9)
            });
            assert!(matched, "U_f = {u_f}: peak {f} MHz is no eigenenergy difference");
        }
    }
    println!("PASS criterion 4: {}", messages.join("; "));
}

fn vqe_runs(file: &str, seeds: std::ops::Range<u64>) -> Vec<Real> {
    let h = PauliHamiltonian::parse(&data(file)).unwrap();
    let constants = DeviceConstants::default();
    let target = rydsim_core::embedding::chemistry_target_matrix(&h);
    let (e_exact, _) = h.ground_energy_exact().unwrap();
    seeds
        .map(|seed| {
            let problem = rydsim_core::embedding::EmbeddingProblem::new(
                target.clone(),
                constants.clone(),
                rydsim_core::embedding::EmbeddingMode::ChemistryScore,
            )
            .unwrap();
            let register =
                rydsim_core::embedding::optimize_positions(&problem, seed, 4000).unwrap().register;
            let mut config = VqeConfig::<Real> {
                shot_budget: 350_000,
                estimator: EstimatorSettings { shots_per_eval: 10_000, ..Default::default() },
                seed,
                ..Default::default()
            };
            config.initial_bits =
                scan_product_states(&h, &register, &constants, None, &config).unwrap()[0].0;
            let run = vqe_optimize(&h, &register, &constants, &config).unwrap();
            assert!(run.shots_spent <= 350_000);
            (e_exact - run.best_energy).abs() / e_exact.abs()
        })
        .collect()
}

/// Criterion 5 (slow suite): the full-budget variational runs reach a
/// median relative error of at most 5% on both shipped molecules, with at
/// least 3 of 5 seeds passing individually.
#[test]
#[ignore = "slow suite: full-budget variational runs"]
fn criterion_5_vqe_budget_targets() {
    for file in ["lih_1.5A.ham", "beh2_1.17A.ham"] {
        let mut errs = vqe_runs(file, 1..6);
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = errs[2];
        let passing = errs.iter().filter(|e| **e <= 0.05).count();
        assert!(median <= 0.05, "{file}: median error {median}");
        assert!(passing >= 3, "{file}: only {passing} of 5 seeds under 5%");
        println!(
            "PASS criterion 5 [{file}]: median rel err = {:.3}%, {passing}/5 seeds under 5%",
            100.0 * median
        );
    }
}

/// Criterion 6: on the converged LiH state, the derandomized plan reaches
/// the 5% error mark with at least 5x fewer shots than uniform per-term
/// estimation at 1000 shots per term.
#[test]
fn criterion_6_measurement_efficiency() {
    let h = PauliHamiltonian::parse(&data("lih_1.5A.ham")).unwrap();
    let (e0, vec) = h.ground_energy_exact().unwrap();
    let state = QuantumState { amplitudes: vec };
    let non_identity = h.terms().iter().filter(|t| !t.string.is_identity()).count();
    let uniform_total = non_identity * 1000;

    // uniform per-term baseline: every term measured in its own basis
    let mut e_uniform = 0.0;
    let mut shot_seed = 0u64;
    for t in h.terms() {
        if t.string.is_identity() {
            e_uniform += t.coefficient;
            continue;
        }
        let axes: Vec<PauliAxis> = (0..h.qubit_count())
            .map(|q| match t.string.axis(q) {
                PauliAxis::I => PauliAxis::Z,
                a => a,
            })
            .collect();
        let basis = MeasurementBasis::new(axes).unwrap();
        let rotated = rydsim_core::derand::rotate_to_basis(&state, &basis);
        shot_seed += 1;
        let record = sample_bitstrings(&rotated, 1000, 7000 + shot_seed).unwrap();
        let mut acc = 0.0;
        for &b in &record.bitstrings {
            let mut prod = 1.0;
            for q in t.string.support() {
                prod *= if (b >> q) & 1 == 1 { 1.0 } else { -1.0 };
            }
            acc += prod;
        }
        e_uniform += t.coefficient * acc / 1000.0;
    }
    let uniform_err = (e_uniform - e0).abs() / e0.abs();
    assert!(uniform_err <= 0.05, "uniform baseline error {uniform_err}");

    // derandomized plan at a 5x-smaller budget than the baseline
    let derand_shots = 1000usize;
    let plan = greedy_derandomize(&h, derand_shots, 0.05).unwrap();
    let mut errs: Vec<Real> = (0..11u64)
        .map(|t| {
            let records = sample_plan(&state, &plan, 600 + t).unwrap();
            let (e, _) = estimate_energy(&h, &plan, &records).unwrap();
            (e - e0).abs() / e0.abs()
        })
        .collect();
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = errs[errs.len() / 2];
    assert!(median <= 0.05, "derandomized median error {median}");
    assert!(
        derand_shots * 5 <= uniform_total,
        "shot advantage under 5x: {derand_shots} vs {uniform_total}"
    );
    println!(
        "PASS criterion 6: derandomized {derand_shots} shots reach {:.2}% (median) vs \
         uniform {uniform_total} shots at {:.2}%; advantage {}x",
        100.0 * median,
        100.0 * uniform_err,
        uniform_total / derand_shots
    );
}

/// Criterion 7: the two-qubit exchange path solves the shipped effective
/// Hamiltonian to 5% within 36500 shots with sector leakage under 1e-10.
#[test]
fn criterion_7_h2_exchange_path() {
    let h = PauliHamiltonian::parse(&data("h2_bk_effective.ham")).unwrap();
    let (e_exact, _) = h.ground_energy_exact().unwrap();
    let run = xy_ucc_h2(&h, &DeviceConstants::default(), 36_500, 3).unwrap();
    assert!(run.shots_spent <= 36_500, "spent {}", run.shots_spent);
    assert!(run.sector_warnings.is_empty());
    assert!(run.max_sector_leakage < 1e-10, "leakage {}", run.max_sector_leakage);
    let rel = (e_exact - run.best_energy).abs() / e_exact.abs();
    assert!(rel <= 0.05, "relative error {rel}");
    println!(
        "PASS criterion 7: rel err = {:.3}% in {} shots, leakage {:.1e}",
        100.0 * rel,
        run.shots_spent,
        run.max_sector_leakage
    );
}

/// Criterion 9: the standalone 3x3 transverse-Ising CMFT study reproduces
/// the correlation-length peaks (1.1 and 12.5 lattice units within 20%)
/// and a single sharp extremum of dZ/dU for each interaction sign.
#[test]
fn criterion_9_cmft_correlation_lengths() {
    let cases = [(true, grid(0.2, 4.4, 22), 1.1), (false, grid(0.2, 4.4, 43), 12.5)];
    let mut msg = Vec::new();
    for (ferro, us, expected) in cases {
        let rows =
            cmft_ising_standalone::<Real>(ferro, &us, CorrelatorAxis::Z, DistanceMetric::Graph)
                .unwrap();
        let peak = rows
            .iter()
            .filter(|r| r.xi.is_finite())
            .map(|r| r.xi)
            .fold(0.0 as Real, Real::max);
        assert!(
            (peak - expected).abs() <= 0.2 * expected,
            "xi peak {peak} vs expected {expected}"
        );
        let slopes = dz_du(&rows);
        let (arg_min, &min) = slopes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let mut mags: Vec<Real> = slopes.iter().map(|s| s.abs()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = mags[mags.len() / 2];
        assert!(min < 0.0, "dZ/dU extremum not negative");
        assert!(
            min.abs() >= 3.0 * median.max(1e-12),
            "extremum {min} not sharp against median {median}"
        );
        let unique = slopes.iter().filter(|s| **s <= min * 0.999).count();
        assert_eq!(unique, 1, "extremum not unique");
        let _ = arg_min;
        msg.push(format!(
            "{} xi peak {:.2}",
            if ferro { "ferro" } else { "antiferro" },
            peak
        ));
    }
    println!("PASS criterion 9: {}", msg.join(", "));
}
