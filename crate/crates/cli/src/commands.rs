//! Command implementations and artifact writers.

use crate::config::RunConfig;
use crate::{Cli, Command, Failure};
use rydsim_core::derand::{greedy_derandomize, hoeffding_shots};
use rydsim_core::device::AtomRegister;
use rydsim_core::dynamics::NoiseSpec;
use rydsim_core::embedding::{
    chemistry_target_matrix, optimize_positions, EmbeddingMode, EmbeddingProblem,
};
use rydsim_core::slavespin::{
    cmft_ising_standalone, dz_du, mott_sweep, quench_dynamics, quench_spectrum, AnnealSettings,
    CorrelatorAxis, DistanceMetric, LatticeKind, SpinBackend, SsmfSettings, SweepRow,
};
use rydsim_core::vqe::{scan_product_states, vqe_optimize, EstimatorSettings, VqeConfig};
use rydsim_core::{LatticeSpec, PauliHamiltonian, Real};
use std::fs;
use std::path::{Path, PathBuf};

type CmdResult = Result<(), Failure>;

pub fn run(cli: &Cli) -> CmdResult {
    let (config, raw) = load_config(cli)?;
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let header = artifact_header(&raw, seed);
    fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::Config(format!("cannot create output dir: {e}")))?;
    match cli.command {
        Command::HubbardSweep => hubbard_sweep(cli, &config, seed, &header),
        Command::HubbardQuench => hubbard_quench(cli, &config, seed, &header),
        Command::Vqe => cmd_vqe(cli, &config, seed, &header),
        Command::Embed => cmd_embed(cli, &config, seed, &header),
        Command::DerandPlan => cmd_derand_plan(cli, &config, &header),
        Command::IsingCmft => cmd_ising_cmft(cli, &config, &header),
        Command::OracleEd => cmd_oracle_ed(cli, &config, &header),
    }
}

fn load_config(cli: &Cli) -> Result<(RunConfig, String), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config <path> is required".into()))?;
    let raw = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig =
        toml::from_str(&raw).map_err(|e| Failure::Config(format!("config parse: {e}")))?;
    Ok((config, raw))
}

/// FNV-1a over the raw config text; embedded in every artifact header.
fn config_hash(raw: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in raw.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

fn artifact_header(raw: &str, seed: u64) -> String {
    format!("# config_hash={:016x} seed={seed}\n", config_hash(raw))
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> CmdResult {
    let path: PathBuf = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn fmt_real(v: Real) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "nan".into()
    }
}

fn lattice_spec(config: &RunConfig) -> Result<LatticeSpec, Failure> {
    let lat = config
        .lattice
        .as_ref()
        .ok_or_else(|| Failure::Config("[lattice] section required".into()))?;
    let kind = match lat.kind.as_str() {
        "square" => LatticeKind::Square,
        "triangular" => LatticeKind::Triangular,
        other => return Err(Failure::Config(format!("unknown lattice kind '{other}'"))),
    };
    Ok(LatticeSpec { kind, nx: lat.nx, ny: lat.ny, hopping_mhz: lat.hopping_mhz })
}

fn backend_for(cli: &Cli, config: &RunConfig) -> Result<SpinBackend<Real>, Failure> {
    let choice = cli.backend.as_deref().unwrap_or("exact");
    match choice {
        "exact" => Ok(SpinBackend::Exact),
        "anneal" => {
            let mut settings = AnnealSettings::noiseless(config.ssmf.tau_max_us);
            settings.constants = config.device.to_constants();
            settings.delta_start_mhz = config.ssmf.delta_start_mhz;
            settings.embed_evals = config.ssmf.embed_evals;
            let noisy = cli.noise.as_deref() == Some("on");
            if noisy {
                let ns = config.noise.clone().unwrap_or_default();
                settings.noise = Some(
                    NoiseSpec {
                        gamma_mhz: ns.gamma_mhz,
                        eps: ns.eps,
                        eps_prime: ns.eps_prime,
                        shots: ns.shots,
                    }
                    .validated()
                    .map_err(Failure::from)?,
                );
            }
            Ok(SpinBackend::Anneal(settings))
        }
        other => Err(Failure::Config(format!("unknown backend '{other}'"))),
    }
}

fn ssmf_settings(
    cli: &Cli,
    config: &RunConfig,
    seed: u64,
) -> Result<SsmfSettings<Real>, Failure> {
    Ok(SsmfSettings {
        k: config.ssmf.k,
        eta: config.ssmf.eta,
        m0: config.ssmf.m0,
        backend: backend_for(cli, config)?,
        seed,
    })
}

fn load_hamiltonian(path: &str) -> Result<PauliHamiltonian, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {path}: {e}")))?;
    PauliHamiltonian::parse(&text).map_err(Failure::from)
}

fn hubbard_sweep(cli: &Cli, config: &RunConfig, seed: u64, header: &str) -> CmdResult {
    let spec = lattice_spec(config)?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::Config("[sweep] section required".into()))?;
    if sweep.u_points < 2 {
        return Err(Failure::Config("sweep needs at least two grid points".into()));
    }
    let grid: Vec<Real> = (0..sweep.u_points)
        .map(|i| {
            sweep.u_start_mhz
                + (sweep.u_stop_mhz - sweep.u_start_mhz) * i as Real
                    / (sweep.u_points - 1) as Real
        })
        .collect();
    let settings = ssmf_settings(cli, config, seed)?;

    // sweep points are independent; split them over the requested workers
    let jobs = cli.jobs.max(1).min(grid.len());
    let mut rows: Vec<Option<(SweepRow<Real>, bool)>> = vec![None; grid.len()];
    let chunks: Vec<Vec<usize>> =
        (0..jobs).map(|w| (w..grid.len()).step_by(jobs).collect()).collect();
    let results: Vec<Result<Vec<(usize, SweepRow<Real>, bool)>, rydsim_core::Error>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    let settings = settings.clone();
                    let spec = spec.clone();
                    let grid = &grid;
                    scope.spawn(move || {
                        let mut out = Vec::new();
                        for &i in chunk {
                            let (r, _) = mott_sweep(&spec, &grid[i..=i], &{
                                let mut s = settings.clone();
                                s.seed = derive_point_seed(seed, i);
                                s
                            })?;
                            let row = r.into_iter().next().expect("one row per point");
                            let conv = row.converged;
                            out.push((i, row, conv));
                        }
                        Ok(out)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
    for res in results {
        for (i, row, conv) in res.map_err(Failure::from)? {
            rows[i] = Some((row, conv));
        }
    }
    let rows: Vec<(SweepRow<Real>, bool)> = rows.into_iter().map(|r| r.unwrap()).collect();

    let mut csv = String::from(header);
    csv.push_str("U_MHz,Z,Z_err,g,converged,inner_iters,outer_iters\n");
    for (r, _) in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_real(r.u_mhz),
            fmt_real(r.z),
            fmt_real(r.z_err),
            fmt_real(r.g),
            r.converged,
            r.inner_iters,
            r.outer_iters
        ));
    }
    write_artifact(&cli.out, "sweep.csv", &csv)?;
    let u_c = rows.iter().find(|(r, _)| r.z < 0.01).map(|(r, _)| r.u_mhz);
    let summary = serde_json::json!({
        "config_hash": format!("{:016x}", config_hash_of(header)),
        "seed": seed,
        "points": rows.len(),
        "u_c_mhz": u_c,
        "all_converged": rows.iter().all(|(r, _)| r.converged),
    });
    write_artifact(&cli.out, "sweep_summary.json", &format!("{summary:#}\n"))?;
    if rows.iter().any(|(r, _)| !r.converged) {
        return Err(Failure::NonConverged(
            "one or more sweep points hit the loop cap before meeting eta".into(),
        ));
    }
    Ok(())
}

fn config_hash_of(header: &str) -> u64 {
    // the hash is already embedded in the header line
    u64::from_str_radix(
        header.split("config_hash=").nth(1).and_then(|s| s.split(' ').next()).unwrap_or("0"),
        16,
    )
    .unwrap_or(0)
}

fn derive_point_seed(seed: u64, index: usize) -> u64 {
    rydsim_core::rng::derive_seed(seed, &[0x9013, index as u64])
}

fn hubbard_quench(cli: &Cli, config: &RunConfig, seed: u64, header: &str) -> CmdResult {
    let spec = lattice_spec(config)?;
    let q = config
        .quench
        .as_ref()
        .ok_or_else(|| Failure::Config("[quench] section required".into()))?;
    let settings = ssmf_settings(cli, config, seed)?;
    let result =
        quench_dynamics(&spec, q.u_f_mhz, &settings, q.horizon_us, q.sample_dt_us)
            .map_err(Failure::from)?;
    let mut csv = String::from(header);
    csv.push_str("tau_us,Z,Z_err\n");
    for i in 0..result.times_us.len() {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_real(result.times_us[i]),
            fmt_real(result.z[i]),
            fmt_real(result.z_err[i])
        ));
    }
    write_artifact(&cli.out, "quench.csv", &csv)?;
    let spec_out = quench_spectrum(&result).map_err(Failure::from)?;
    let mut csv = String::from(header);
    csv.push_str("f_MHz,amplitude\n");
    for (f, a) in spec_out.freqs_mhz.iter().zip(spec_out.amplitudes.iter()) {
        csv.push_str(&format!("{},{}\n", fmt_real(*f), fmt_real(*a)));
    }
    write_artifact(&cli.out, "spectrum.csv", &csv)?;
    Ok(())
}

fn cmd_vqe(cli: &Cli, config: &RunConfig, seed: u64, header: &str) -> CmdResult {
    let section =
        config.vqe.as_ref().ok_or_else(|| Failure::Config("[vqe] section required".into()))?;
    let h = load_hamiltonian(&section.hamiltonian)?;
    let constants = config.device.to_constants();

    let register = if section.register == "optimized" {
        let target = chemistry_target_matrix(&h);
        if target.data.iter().all(|v| *v == 0.0) {
            return Err(Failure::Config(
                "no positive two-Z terms to embed; supply a register file".into(),
            ));
        }
        let problem = EmbeddingProblem::new(target, constants.clone(), EmbeddingMode::ChemistryScore)
            .map_err(Failure::from)?;
        optimize_positions(&problem, seed, section.embed_evals)
            .map_err(Failure::from)?
            .register
    } else {
        let text = fs::read_to_string(&section.register)
            .map_err(|e| Failure::Config(format!("cannot read register: {e}")))?;
        AtomRegister::from_json(&text).map_err(Failure::from)?
    };

    let mut vqe_config = VqeConfig {
        shot_budget: section.shot_budget,
        omega_max_mhz: section.omega_max_mhz,
        delta_max_mhz: section.delta_max_mhz,
        t_tot_us: section.t_tot_us,
        min_gap_us: section.min_gap_us,
        evals_per_iteration: section.evals_per_iteration,
        estimator: EstimatorSettings {
            eps_target: section.eps_target,
            shots_per_eval: section.shots_per_eval,
            ..Default::default()
        },
        initial_bits: 0,
        seed,
    };
    vqe_config.initial_bits = match section.warm_start.as_str() {
        "zeros" => 0,
        "scan" => {
            let rows = scan_product_states(&h, &register, &constants, None, &vqe_config)
                .map_err(Failure::from)?;
            rows[0].0
        }
        other => other
            .parse::<usize>()
            .map_err(|_| Failure::Config(format!("bad warm_start '{other}'")))?,
    };

    let run = vqe_optimize(&h, &register, &constants, &vqe_config).map_err(Failure::from)?;
    let (e_exact, _) = h.ground_energy_exact().map_err(Failure::from)?;

    let mut csv = String::from(header);
    csv.push_str("cum_shots,energy,rel_error,n_intervals\n");
    for p in &run.history {
        let rel = (e_exact - p.energy).abs() / e_exact.abs();
        csv.push_str(&format!(
            "{},{},{},{}\n",
            p.cumulative_shots,
            fmt_real(p.energy),
            fmt_real(rel),
            p.intervals
        ));
    }
    write_artifact(&cli.out, "vqe_log.csv", &csv)?;

    let params = serde_json::json!({
        "config_hash": format!("{:016x}", config_hash_of(header)),
        "seed": seed,
        "best_energy": run.best_energy,
        "exact_energy": e_exact,
        "relative_error": (e_exact - run.best_energy).abs() / e_exact.abs(),
        "shots_spent": run.shots_spent,
        "initial_bits": vqe_config.initial_bits,
        "time_labels_us": run.best_params.edges_us,
        "omegas_mhz": run.best_params.omegas_mhz,
        "deltas_mhz": run.best_params.deltas_mhz,
        "register_um": register.positions_um,
    });
    write_artifact(&cli.out, "best_params.json", &format!("{params:#}\n"))?;
    Ok(())
}

fn cmd_embed(cli: &Cli, config: &RunConfig, seed: u64, header: &str) -> CmdResult {
    let section = config
        .embedding
        .as_ref()
        .ok_or_else(|| Failure::Config("[embedding] section required".into()))?;
    let h = load_hamiltonian(&section.hamiltonian)?;
    let constants = config.device.to_constants();
    let target = chemistry_target_matrix(&h);
    if target.data.iter().all(|v| *v == 0.0) {
        return Err(Failure::Config("no positive two-Z terms to embed".into()));
    }
    let problem = EmbeddingProblem::new(target, constants, EmbeddingMode::ChemistryScore)
        .map_err(Failure::from)?;
    let out = optimize_positions(&problem, seed, section.max_evals).map_err(Failure::from)?;
    let mut register_json = String::from(header.replace('#', "").trim_start());
    register_json.clear();
    register_json.push_str(&out.register.to_json());
    register_json.push('\n');
    write_artifact(&cli.out, "register.json", &register_json)?;
    let mut csv = String::from(header);
    csv.push_str("eval,residual\n");
    for (i, r) in out.residual_log.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i, fmt_real(*r)));
    }
    write_artifact(&cli.out, "residual_log.csv", &csv)?;
    println!("residual {}", out.residual);
    Ok(())
}

fn cmd_derand_plan(cli: &Cli, config: &RunConfig, header: &str) -> CmdResult {
    let section = config
        .derand
        .as_ref()
        .ok_or_else(|| Failure::Config("[derand] section required".into()))?;
    let h = load_hamiltonian(&section.hamiltonian)?;
    let shots = if section.shots > 0 {
        section.shots
    } else {
        hoeffding_shots(section.eps_target, 0.05).map_err(Failure::from)?
    };
    let plan = greedy_derandomize(&h, shots, section.eps_target).map_err(Failure::from)?;
    let mut text = String::from(header);
    text.push_str(&plan.to_text());
    write_artifact(&cli.out, "plan.txt", &text)?;
    println!(
        "{} shots over {} distinct bases; {} uncovered terms",
        plan.total_shots(),
        plan.distinct_bases(),
        plan.uncovered_terms.len()
    );
    Ok(())
}

fn cmd_ising_cmft(cli: &Cli, config: &RunConfig, header: &str) -> CmdResult {
    let section = config
        .cmft
        .as_ref()
        .ok_or_else(|| Failure::Config("[cmft] section required".into()))?;
    let ferro = match section.sign.as_str() {
        "ferro" => true,
        "antiferro" => false,
        other => return Err(Failure::Config(format!("unknown sign '{other}'"))),
    };
    let axis = match section.axis.as_str() {
        "x" => CorrelatorAxis::X,
        "z" => CorrelatorAxis::Z,
        other => return Err(Failure::Config(format!("unknown axis '{other}'"))),
    };
    let metric = match section.metric.as_str() {
        "graph" => DistanceMetric::Graph,
        "euclid" => DistanceMetric::Euclidean,
        other => return Err(Failure::Config(format!("unknown metric '{other}'"))),
    };
    if section.u_points < 3 {
        return Err(Failure::Config("cmft grid needs at least three points".into()));
    }
    let grid: Vec<Real> = (0..section.u_points)
        .map(|i| {
            section.u_start
                + (section.u_stop - section.u_start) * i as Real / (section.u_points - 1) as Real
        })
        .collect();
    let rows = cmft_ising_standalone(ferro, &grid, axis, metric).map_err(Failure::from)?;
    let slopes = dz_du(&rows);
    let mut csv = String::from(header);
    csv.push_str("U,Z,dZ_dU,xi,m_bar\n");
    for (r, s) in rows.iter().zip(slopes.iter()) {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_real(r.u),
            fmt_real(r.z),
            fmt_real(*s),
            fmt_real(r.xi),
            fmt_real(r.m_bar)
        ));
    }
    write_artifact(&cli.out, "cmft.csv", &csv)?;
    let peak = rows
        .iter()
        .filter(|r| r.xi.is_finite())
        .max_by(|a, b| a.xi.partial_cmp(&b.xi).unwrap());
    if let Some(p) = peak {
        println!("xi peak {} at U = {}", p.xi, p.u);
    }
    Ok(())
}

fn cmd_oracle_ed(cli: &Cli, config: &RunConfig, header: &str) -> CmdResult {
    let section = config
        .oracle
        .as_ref()
        .ok_or_else(|| Failure::Config("[oracle] section required".into()))?;
    let h = load_hamiltonian(&section.hamiltonian)?;
    let (e, vec) = h.ground_energy_exact().map_err(Failure::from)?;
    let check = h.expectation(&vec).map_err(Failure::from)?;
    let out = serde_json::json!({
        "config_hash": format!("{:016x}", config_hash_of(header)),
        "qubits": h.qubit_count(),
        "terms": h.term_count(),
        "ground_energy": e,
        "expectation_on_eigenvector": check,
        "self_consistency_residue": (e - check).abs(),
    });
    write_artifact(&cli.out, "oracle.json", &format!("{out:#}\n"))?;
    Ok(())
}
