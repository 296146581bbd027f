//! TOML run configuration. Field names carry explicit units; defaults
//! reproduce the headline device settings.

use rydsim_core::Real;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub device: DeviceSection,
    pub lattice: Option<LatticeSection>,
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub ssmf: SsmfSection,
    pub sweep: Option<SweepSection>,
    pub quench: Option<QuenchSection>,
    pub vqe: Option<VqeSection>,
    pub embedding: Option<EmbeddingSection>,
    pub derand: Option<DerandSection>,
    pub cmft: Option<CmftSection>,
    pub oracle: Option<OracleSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub c6_over_h_mhz_um6: Real,
    pub c3_over_h_mhz_um3: Real,
    pub rabi_max_mhz: Real,
    pub min_ramp_us: Real,
    pub repetition_rate_hz: Real,
    pub min_distance_um: Real,
}

impl Default for DeviceSection {
    fn default() -> Self {
        Self {
            c6_over_h_mhz_um6: 1947e3,
            c3_over_h_mhz_um3: 3000.0,
            rabi_max_mhz: 2.5,
            min_ramp_us: 0.05,
            repetition_rate_hz: 3.0,
            min_distance_um: 4.0,
        }
    }
}

impl DeviceSection {
    pub fn to_constants(&self) -> rydsim_core::DeviceConstants {
        rydsim_core::DeviceConstants {
            c6_over_h: self.c6_over_h_mhz_um6,
            c3_over_h: self.c3_over_h_mhz_um3,
            rabi_max: self.rabi_max_mhz,
            min_ramp_us: self.min_ramp_us,
            repetition_rate_hz: self.repetition_rate_hz,
            min_distance_um: self.min_distance_um,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub kind: String,
    pub nx: usize,
    pub ny: usize,
    pub hopping_mhz: Real,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub gamma_mhz: Real,
    pub eps: Real,
    pub eps_prime: Real,
    pub shots: usize,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { gamma_mhz: 0.02, eps: 0.03, eps_prime: 0.03, shots: 150 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsmfSection {
    pub k: usize,
    pub eta: Real,
    pub m0: Real,
    pub tau_max_us: Real,
    pub delta_start_mhz: Real,
    pub embed_evals: usize,
}

impl Default for SsmfSection {
    fn default() -> Self {
        Self { k: 5, eta: 0.01, m0: 0.5, tau_max_us: 4.0, delta_start_mhz: 5.0, embed_evals: 4000 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub u_start_mhz: Real,
    pub u_stop_mhz: Real,
    pub u_points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchSection {
    pub u_f_mhz: Real,
    pub horizon_us: Real,
    pub sample_dt_us: Real,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeSection {
    pub hamiltonian: String,
    pub shot_budget: usize,
    #[serde(default = "default_eps")]
    pub eps_target: f64,
    /// 0 sizes the plan from the Hoeffding bound
    #[serde(default)]
    pub shots_per_eval: usize,
    #[serde(default = "default_t_tot")]
    pub t_tot_us: Real,
    #[serde(default = "default_omega_max")]
    pub omega_max_mhz: Real,
    #[serde(default = "default_omega_max")]
    pub delta_max_mhz: Real,
    #[serde(default = "default_min_gap")]
    pub min_gap_us: Real,
    #[serde(default = "default_evals_per_iter")]
    pub evals_per_iteration: usize,
    /// "scan" ranks product states first; "zeros" starts from all-ground;
    /// an integer string fixes the start bits
    #[serde(default = "default_warm_start")]
    pub warm_start: String,
    /// "optimized" runs the embedding; a path loads a register JSON file
    #[serde(default = "default_register")]
    pub register: String,
    #[serde(default = "default_embed_evals")]
    pub embed_evals: usize,
}

fn default_eps() -> f64 {
    0.05
}
fn default_t_tot() -> Real {
    1.0
}
fn default_omega_max() -> Real {
    2.0
}
fn default_min_gap() -> Real {
    0.016
}
fn default_evals_per_iter() -> usize {
    20
}
fn default_warm_start() -> String {
    "scan".into()
}
fn default_register() -> String {
    "optimized".into()
}
fn default_embed_evals() -> usize {
    4000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    pub hamiltonian: String,
    #[serde(default = "default_embed_evals")]
    pub max_evals: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerandSection {
    pub hamiltonian: String,
    #[serde(default = "default_eps")]
    pub eps_target: f64,
    /// 0 sizes the plan from the Hoeffding bound
    #[serde(default)]
    pub shots: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmftSection {
    /// "ferro" or "antiferro"
    pub sign: String,
    pub u_start: Real,
    pub u_stop: Real,
    pub u_points: usize,
    #[serde(default = "default_axis")]
    pub axis: String,
    #[serde(default = "default_metric")]
    pub metric: String,
}

fn default_axis() -> String {
    "z".into()
}
fn default_metric() -> String {
    "graph".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub hamiltonian: String,
}
