//! Scenario catalogue, runner, comparison, and sweep machinery.
//!
//! Each catalogue entry is a TOML preset naming one quantitative prediction
//! of the effective-interaction model; the runner rebuilds the Hamiltonian
//! it needs, evolves it, and reports figures of merit plus a sampled time
//! series. Scenario runs are independent: sweeps fan out with rayon and the
//! per-point outputs are written sequentially afterwards, so no two writers
//! ever share a path.

pub mod emit;

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    dissipative_squeezing, epr_pair_variances, epr_sum_variance, optimal_squeezing,
    quadrature_variance, squeeze_factor_from_variance, MeritReport, QuadratureSpec,
};
use crate::dynamics::{evolve_schrodinger, propagate_const, EvolutionSpec};
use crate::error::{CqedError, Result};
use crate::fockspace::{
    basis_state, coherent_amplitudes, coherent_cutoff, dressed_amplitudes, dressed_atomic_state,
    product_state, squeezed_vacuum_cutoff, two_mode_squeezed_cutoff, AtomLevel, DressedSign,
    HilbertSpace, Mode, StateVector,
};
use crate::hamiltonians::{
    build_degenerate_pair, build_effective_pdc, build_effective_puc, build_interaction_picture,
    build_quadratic_cat, effective_couplings, regime_warnings, stark_shift_generator,
    Configuration, Regime, Subspace, SystemParams, TimeDependentHamiltonian,
};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

// ---------------------------------------------------------------------------
// configuration

/// Complex number in a config file: either a bare float (real) or a
/// two-element [re, im] array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexSpec> for C64 {
    fn from(spec: ComplexSpec) -> C64 {
        match spec {
            ComplexSpec::Real(re) => C64::new(re, 0.0),
            ComplexSpec::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoWord {
    #[serde(rename = "auto")]
    Auto,
}

/// Fock cutoff request: an explicit inclusive cutoff or the literal string
/// "auto", which sizes the space from the scenario's predicted state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CutoffSpec {
    Fixed(usize),
    Auto(AutoWord),
}

fn default_sample_count() -> usize {
    401
}
fn default_rel_tol() -> f64 {
    1e-9
}
fn default_abs_tol() -> f64 {
    1e-12
}

/// One scenario run, flat so a config file is a plain list of keys. Unknown
/// keys are rejected. Frequencies and rates are rad/s, times seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    #[serde(default)]
    pub description: Option<String>,
    pub configuration: Configuration,
    pub lambda_a: ComplexSpec,
    pub lambda_b: ComplexSpec,
    pub omega_mag: f64,
    pub phi: f64,
    pub delta_cap: f64,
    pub delta_small: f64,
    pub omega0: f64,
    pub omega_i: f64,
    pub gamma_c: f64,
    pub gamma_a: f64,
    pub tau: f64,
    pub n_max_a: CutoffSpec,
    #[serde(default)]
    pub n_max_b: Option<CutoffSpec>,
    pub initial_state_label: String,
    #[serde(default)]
    pub alpha: Option<ComplexSpec>,
    #[serde(default)]
    pub beta: Option<ComplexSpec>,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default)]
    pub approx_couplings: bool,
}

impl ScenarioConfig {
    pub fn system_params(&self) -> Result<SystemParams> {
        SystemParams::new(
            self.configuration,
            self.lambda_a.into(),
            self.lambda_b.into(),
            self.omega_mag,
            self.phi,
            self.delta_cap,
            self.delta_small,
            self.omega0,
            self.omega_i,
            self.gamma_c,
            self.gamma_a,
        )
    }

    /// Scenario-level validation; collects every offending field instead of
    /// stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut fields = Vec::new();
        let fam = family(&self.scenario_id);
        if fam.is_err() {
            fields.push(format!(
                "scenario_id: unknown scenario `{}`",
                self.scenario_id
            ));
        }
        if !(self.tau > 0.0) {
            fields.push("tau: must be positive".into());
        }
        if self.sample_count < 2 {
            fields.push("sample_count: needs at least two samples".into());
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            fields.push("rel_tol/abs_tol: must be positive".into());
        }
        if let Ok(fam) = fam {
            let want = expected_configuration(fam);
            if self.configuration != want {
                fields.push(format!(
                    "configuration: scenario `{}` needs the {:?} configuration",
                    self.scenario_id, want
                ));
            }
            if family_is_two_mode(fam) {
                if self.n_max_b.is_none() {
                    fields.push("n_max_b: required for two-mode scenarios".into());
                }
            } else if self.n_max_b.is_some() {
                fields.push("n_max_b: must be absent for single-mode scenarios".into());
            }
            if self.initial_state_label.ends_with("coherent") {
                if self.alpha.is_none() {
                    fields.push("alpha: required for coherent initial states".into());
                }
                if family_is_two_mode(fam) && self.beta.is_none() {
                    fields.push("beta: required for two-mode coherent initial states".into());
                }
            }
        }
        if fields.is_empty() {
            Ok(())
        } else {
            Err(CqedError::InvalidConfig { fields })
        }
    }
}

// ---------------------------------------------------------------------------
// catalogue

#[derive(Debug, Clone)]
pub struct CatalogueEntry {
    pub scenario_id: String,
    pub description: String,
}

const PRESET_SOURCES: [(&str, &str); 11] = [
    ("pdc-weak-epr", include_str!("presets/pdc-weak-epr.toml")),
    (
        "pdc-weak-evenodd",
        include_str!("presets/pdc-weak-evenodd.toml"),
    ),
    (
        "pdc-weak-squeeze",
        include_str!("presets/pdc-weak-squeeze.toml"),
    ),
    ("pdc-strong-epr", include_str!("presets/pdc-strong-epr.toml")),
    (
        "pdc-strong-squeeze",
        include_str!("presets/pdc-strong-squeeze.toml"),
    ),
    ("pdc-strong-cat", include_str!("presets/pdc-strong-cat.toml")),
    ("puc-weak-swap", include_str!("presets/puc-weak-swap.toml")),
    ("puc-strong-swap", include_str!("presets/puc-strong-swap.toml")),
    ("validate-weak", include_str!("presets/validate-weak.toml")),
    ("validate-strong", include_str!("presets/validate-strong.toml")),
    (
        "dissipative-squeeze",
        include_str!("presets/dissipative-squeeze.toml"),
    ),
];

fn preset_source(id: &str) -> Result<&'static str> {
    PRESET_SOURCES
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, src)| *src)
        .ok_or_else(|| CqedError::InvalidConfig {
            fields: vec![format!("scenario_id: unknown scenario `{id}`")],
        })
}

fn parse_config(source: &str) -> Result<ScenarioConfig> {
    toml::from_str(source).map_err(|e| CqedError::InvalidConfig {
        fields: vec![e.to_string()],
    })
}

/// The shipped preset for a scenario id.
pub fn preset(id: &str) -> Result<ScenarioConfig> {
    parse_config(preset_source(id)?)
}

/// Every shipped scenario with the claim it reproduces.
pub fn catalogue() -> Result<Vec<CatalogueEntry>> {
    PRESET_SOURCES
        .iter()
        .map(|(id, src)| {
            let config = parse_config(src)?;
            Ok(CatalogueEntry {
                scenario_id: (*id).to_string(),
                description: config.description.unwrap_or_default(),
            })
        })
        .collect()
}

/// Preset for `id`, with the keys of `overlay` (a TOML file) written over
/// it. The overlay may restate but not change the scenario id.
pub fn load_config(id: &str, overlay: Option<&Path>) -> Result<ScenarioConfig> {
    let mut table: toml::Table = toml::from_str(preset_source(id)?).map_err(|e| {
        CqedError::InvalidConfig {
            fields: vec![e.to_string()],
        }
    })?;
    if let Some(path) = overlay {
        let text = fs::read_to_string(path).map_err(|source| CqedError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let over: toml::Table = toml::from_str(&text).map_err(|e| CqedError::InvalidConfig {
            fields: vec![e.to_string()],
        })?;
        for (key, value) in over {
            table.insert(key, value);
        }
    }
    let config: ScenarioConfig = table.try_into().map_err(|e: toml::de::Error| {
        CqedError::InvalidConfig {
            fields: vec![e.to_string()],
        }
    })?;
    if config.scenario_id != id {
        return Err(CqedError::InvalidConfig {
            fields: vec![format!(
                "scenario_id: overlay changes `{id}` to `{}`; run the other scenario instead",
                config.scenario_id
            )],
        });
    }
    Ok(config)
}

// ---------------------------------------------------------------------------
// results

/// One sampled time point. Optional columns are empty in the CSV when the
/// scenario has no value for them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub t_s: f64,
    pub norm: f64,
    pub p_survival_exact: Option<f64>,
    pub p_survival_eff: Option<f64>,
    pub var_x: Option<f64>,
    pub var_p: Option<f64>,
    pub epr_sum_var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(flatten)]
    pub merit: MeritReport,
    pub divergence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub n_max_a: usize,
    pub n_max_b: Option<usize>,
    pub notes: Vec<String>,
    /// the only field two identical runs may disagree on
    pub timestamp_unix_s: u64,
}

/// The JSON summary document: config echo, summary scalars, provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub config: ScenarioConfig,
    pub summary: Summary,
    pub provenance: Provenance,
}

#[derive(Debug)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub rows: Vec<SampleRow>,
    pub summary: Summary,
    pub provenance: Provenance,
    /// the state the scenario's claim is about, when one exists
    pub final_state: Option<StateVector>,
    /// branch-resolved pair of states for two-branch scenarios
    pub branch_states: Option<(StateVector, StateVector)>,
}

impl ScenarioResult {
    pub fn summary_document(&self) -> SummaryDocument {
        SummaryDocument {
            config: self.config.clone(),
            summary: self.summary.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// scenario taxonomy

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    WeakPairEpr,
    WeakEvenOdd,
    WeakDegenerate,
    StrongPairEpr,
    StrongDegenerate,
    Cat,
    WeakSwap,
    StrongSwap,
    ValidateWeak,
    ValidateStrong,
    Dissipative,
}

fn family(id: &str) -> Result<Family> {
    Ok(match id {
        "pdc-weak-epr" => Family::WeakPairEpr,
        "pdc-weak-evenodd" => Family::WeakEvenOdd,
        "pdc-weak-squeeze" => Family::WeakDegenerate,
        "pdc-strong-epr" => Family::StrongPairEpr,
        "pdc-strong-squeeze" => Family::StrongDegenerate,
        "pdc-strong-cat" => Family::Cat,
        "puc-weak-swap" => Family::WeakSwap,
        "puc-strong-swap" => Family::StrongSwap,
        "validate-weak" => Family::ValidateWeak,
        "validate-strong" => Family::ValidateStrong,
        "dissipative-squeeze" => Family::Dissipative,
        other => {
            return Err(CqedError::InvalidConfig {
                fields: vec![format!("scenario_id: unknown scenario `{other}`")],
            })
        }
    })
}

fn expected_configuration(fam: Family) -> Configuration {
    match fam {
        Family::WeakSwap | Family::StrongSwap | Family::ValidateWeak | Family::ValidateStrong => {
            Configuration::Lambda
        }
        _ => Configuration::Ladder,
    }
}

fn family_is_two_mode(fam: Family) -> bool {
    !matches!(
        fam,
        Family::WeakDegenerate | Family::StrongDegenerate | Family::Cat | Family::Dissipative
    )
}

fn family_regime(fam: Family) -> Option<Regime> {
    match fam {
        Family::WeakPairEpr
        | Family::WeakEvenOdd
        | Family::WeakDegenerate
        | Family::WeakSwap
        | Family::ValidateWeak => Some(Regime::Weak),
        Family::StrongPairEpr
        | Family::StrongDegenerate
        | Family::StrongSwap
        | Family::ValidateStrong => Some(Regime::Strong),
        Family::Cat | Family::Dissipative => None,
    }
}

fn resolve_one_cutoff(spec: CutoffSpec, auto: usize) -> usize {
    match spec {
        CutoffSpec::Fixed(n) => n,
        CutoffSpec::Auto(_) => auto,
    }
}

// size the space from the scenario's predicted end state
fn auto_cutoff(fam: Family, config: &ScenarioConfig, params: &SystemParams) -> Result<usize> {
    let alpha_reach = |r: f64| -> f64 {
        let alpha: C64 = config.alpha.map(Into::into).unwrap_or(ZERO);
        let beta: C64 = config.beta.map(Into::into).unwrap_or(ZERO);
        alpha.norm().max(beta.norm()) * r.exp() + 2.0 * r.sinh()
    };
    Ok(match fam {
        Family::WeakPairEpr | Family::WeakEvenOdd => {
            let c = effective_couplings(params)?;
            two_mode_squeezed_cutoff(c.xi_pm_approx().norm() * config.tau, 1e-12)
        }
        Family::StrongPairEpr => {
            let c = effective_couplings(params)?;
            two_mode_squeezed_cutoff(c.zeta_i.norm() * config.tau, 1e-12)
        }
        Family::WeakDegenerate => {
            let c = effective_couplings(params)?;
            squeezed_vacuum_cutoff(2.0 * c.xi_pm_approx().norm() * config.tau, 1e-12)
        }
        Family::StrongDegenerate => {
            let c = effective_couplings(params)?;
            squeezed_vacuum_cutoff(2.0 * c.zeta_i.norm() * config.tau, 1e-12)
        }
        Family::Cat => {
            // the squeezed tail decays slowly; size for it and the grown
            // displacement separately
            let c = effective_couplings(params)?;
            let r = (c.chi * config.tau).asinh();
            squeezed_vacuum_cutoff(r, 1e-12) + coherent_cutoff(alpha_reach(r), 1e-12) + 8
        }
        Family::WeakSwap | Family::StrongSwap => coherent_cutoff(alpha_reach(0.0), 1e-12) + 4,
        Family::ValidateWeak | Family::ValidateStrong => 8,
        Family::Dissipative => 1,
    })
}

fn resolve_cutoffs(
    fam: Family,
    config: &ScenarioConfig,
    params: &SystemParams,
) -> Result<(usize, Option<usize>)> {
    let auto = auto_cutoff(fam, config, params)?;
    let n_a = resolve_one_cutoff(config.n_max_a, auto);
    let n_b = if family_is_two_mode(fam) {
        let spec = config.n_max_b.ok_or_else(|| CqedError::InvalidConfig {
            fields: vec!["n_max_b: required for two-mode scenarios".into()],
        })?;
        Some(resolve_one_cutoff(spec, auto))
    } else {
        None
    };
    Ok((n_a, n_b))
}

fn make_space(n_a: usize, n_b: Option<usize>) -> HilbertSpace {
    match n_b {
        Some(nb) => HilbertSpace::two_mode(n_a, nb),
        None => HilbertSpace::single_mode(n_a),
    }
}

// ---------------------------------------------------------------------------
// initial states

fn initial_state(
    config: &ScenarioConfig,
    params: &SystemParams,
    space: HilbertSpace,
) -> Result<StateVector> {
    let label = config.initial_state_label.as_str();
    let one_photon = |state_space: HilbertSpace| -> Result<()> {
        if state_space.n_max(Mode::A)? < 1 {
            return Err(CqedError::CutoffTooSmall {
                needed: 1,
                got: state_space.n_max(Mode::A)?,
                context: format!("initial state `{label}`"),
            });
        }
        Ok(())
    };
    match label {
        "i-vac" => Ok(basis_state(space, AtomLevel::I, 0, 0)),
        "e-vac" => Ok(basis_state(space, AtomLevel::E, 0, 0)),
        "g-vac" => Ok(basis_state(space, AtomLevel::G, 0, 0)),
        "plus-vac" => Ok(dressed_atomic_state(space, DressedSign::Plus, params.phi)),
        "minus-vac" => Ok(dressed_atomic_state(space, DressedSign::Minus, params.phi)),
        "i-10" => {
            one_photon(space)?;
            Ok(basis_state(space, AtomLevel::I, 1, 0))
        }
        "plus-10" | "minus-10" => {
            one_photon(space)?;
            let sign = if label == "plus-10" {
                DressedSign::Plus
            } else {
                DressedSign::Minus
            };
            product_state(
                space,
                &dressed_amplitudes(sign, params.phi),
                &[ZERO, ONE],
                &[ONE],
            )
        }
        "coherent" | "i-coherent" | "plus-coherent" | "minus-coherent" => {
            let alpha: C64 = config
                .alpha
                .map(Into::into)
                .ok_or_else(|| CqedError::InvalidConfig {
                    fields: vec!["alpha: required for coherent initial states".into()],
                })?;
            let mode_a = coherent_amplitudes(alpha, space.n_max(Mode::A)?)?;
            let mode_b = if space.has_mode_b() {
                let beta: C64 =
                    config
                        .beta
                        .map(Into::into)
                        .ok_or_else(|| CqedError::InvalidConfig {
                            fields: vec![
                                "beta: required for two-mode coherent initial states".into()
                            ],
                        })?;
                coherent_amplitudes(beta, space.n_max(Mode::B)?)?
            } else {
                vec![ONE]
            };
            let atom = match label {
                "coherent" => [ONE, ZERO, ZERO],
                "i-coherent" => [ZERO, ZERO, ONE],
                "plus-coherent" => dressed_amplitudes(DressedSign::Plus, params.phi),
                _ => dressed_amplitudes(DressedSign::Minus, params.phi),
            };
            product_state(space, &atom, &mode_a, &mode_b)
        }
        "pm-10" => Err(CqedError::InvalidConfig {
            fields: vec![
                "initial_state_label: pm-10 names the pair of comparison branches; a single run needs plus-10 or minus-10"
                    .into(),
            ],
        }),
        other => Err(CqedError::InvalidConfig {
            fields: vec![format!("initial_state_label: unknown label `{other}`")],
        }),
    }
}

// multiply each |n_a> component by e^{i angle_per_photon n_a}
fn rotate_mode_phase(state: &StateVector, angle_per_photon: f64) -> Result<StateVector> {
    let space = state.space();
    let mut amps = state.amplitudes().to_owned();
    for (idx, amp) in amps.iter_mut().enumerate() {
        let (_, n_a, _) = space.unindex(idx);
        *amp *= C64::from_polar(1.0, angle_per_photon * n_a as f64);
    }
    StateVector::new(space, amps)
}

// mode amplitudes carried by one dressed branch, relabelled to the ground
// level so the atom reads as a spectator; unnormalised
fn branch_mode_amplitudes(state: &StateVector, sign: DressedSign, phi: f64) -> Array1<C64> {
    let space = state.space();
    let dressed = dressed_amplitudes(sign, phi);
    let mut amps = Array1::zeros(space.dim());
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        let (atom, n_a, n_b) = space.unindex(idx);
        let weight = dressed[atom.index()].conj();
        if weight != ZERO {
            amps[space.index(AtomLevel::G, n_a, n_b)] += weight * *amp;
        }
    }
    amps
}

fn survival(psi0: &StateVector, state: &StateVector) -> Result<f64> {
    Ok(psi0.inner(state)?.norm_sqr())
}

// ---------------------------------------------------------------------------
// running

fn effective_builder(
    fam: Family,
    params: &SystemParams,
    space: HilbertSpace,
    approx: bool,
) -> Result<TimeDependentHamiltonian> {
    match fam {
        Family::WeakPairEpr | Family::WeakEvenOdd => {
            build_effective_pdc(params, space, Regime::Weak, Subspace::DressedPair, approx)
        }
        Family::StrongPairEpr => build_effective_pdc(
            params,
            space,
            Regime::Strong,
            Subspace::Intermediate,
            approx,
        ),
        Family::WeakDegenerate => {
            build_degenerate_pair(params, space, Regime::Weak, Subspace::DressedPair, approx)
        }
        Family::StrongDegenerate => build_degenerate_pair(
            params,
            space,
            Regime::Strong,
            Subspace::Intermediate,
            approx,
        ),
        Family::WeakSwap => {
            build_effective_puc(params, space, Regime::Weak, Subspace::DressedPair, approx)
        }
        Family::StrongSwap => build_effective_puc(
            params,
            space,
            Regime::Strong,
            Subspace::Intermediate,
            approx,
        ),
        _ => Err(CqedError::InvalidConfig {
            fields: vec!["scenario has no single effective generator".into()],
        }),
    }
}

fn epr_rows(times: &[f64], states: &[StateVector], psi0: &StateVector) -> Result<Vec<SampleRow>> {
    times
        .iter()
        .zip(states)
        .map(|(&t, state)| {
            let (vx, vp) = epr_pair_variances(state)?;
            Ok(SampleRow {
                t_s: t,
                norm: state.norm(),
                p_survival_exact: None,
                p_survival_eff: Some(survival(psi0, state)?),
                var_x: Some(vx),
                var_p: Some(vp),
                epr_sum_var: Some(vx + vp),
            })
        })
        .collect()
}

fn quad_rows(times: &[f64], states: &[StateVector], psi0: &StateVector) -> Result<Vec<SampleRow>> {
    times
        .iter()
        .zip(states)
        .map(|(&t, state)| {
            let vx = quadrature_variance(
                state,
                QuadratureSpec {
                    mode: Mode::A,
                    angle: 0.0,
                },
            )?;
            let vp = quadrature_variance(
                state,
                QuadratureSpec {
                    mode: Mode::A,
                    angle: std::f64::consts::FRAC_PI_2,
                },
            )?;
            Ok(SampleRow {
                t_s: t,
                norm: state.norm(),
                p_survival_exact: None,
                p_survival_eff: Some(survival(psi0, state)?),
                var_x: Some(vx),
                var_p: Some(vp),
                epr_sum_var: None,
            })
        })
        .collect()
}

fn pair_merit(state: &StateVector) -> Result<MeritReport> {
    let var = epr_sum_variance(state)?;
    Ok(MeritReport {
        epr_sum_variance: Some(var),
        epr_quality: Some(1.0 - var),
        squeeze_factor_r: (var > 0.0).then(|| -0.5 * var.ln()),
        ..Default::default()
    })
}

fn squeeze_merit(state: &StateVector, notes: &mut Vec<String>) -> Result<MeritReport> {
    let (angle, var) = optimal_squeezing(state, Mode::A)?;
    notes.push(format!("optimal squeezing angle {angle:.6} rad"));
    Ok(MeritReport {
        squeeze_variance: Some(var),
        squeeze_factor_r: Some(squeeze_factor_from_variance(var)),
        ..Default::default()
    })
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default()
}

/// Run one scenario: build its generator, evolve, and report the sampled
/// series plus summary merits. Writes CSV and JSON outputs when the config
/// names an output directory.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let fam = family(&config.scenario_id)?;
    let mut notes = Vec::new();
    let mut params = config.system_params()?;

    if fam == Family::WeakEvenOdd {
        // the branch recombination argument needs |Omega| tau = 2 pi k
        let cycles = params.omega_mag * config.tau / (2.0 * std::f64::consts::PI);
        let k = cycles.round().max(1.0);
        let snapped = 2.0 * std::f64::consts::PI * k / config.tau;
        if snapped != params.omega_mag {
            notes.push(format!(
                "omega_mag adjusted from {:e} to {:e} so that |Omega| tau = 2 pi k (k = {})",
                params.omega_mag, snapped, k
            ));
            params.omega_mag = snapped;
        }
    }

    let (n_a, n_b) = resolve_cutoffs(fam, config, &params)?;
    if matches!(config.n_max_a, CutoffSpec::Auto(_)) {
        notes.push(format!("n_max_a auto-resolved to {n_a}"));
    }
    let space = make_space(n_a, n_b);
    if let Some(regime) = family_regime(fam) {
        notes.extend(regime_warnings(&params, regime));
    }

    let spec = EvolutionSpec::new(0.0, config.tau, config.sample_count)
        .with_tolerances(config.rel_tol, config.abs_tol);

    let (rows, merit, divergence, final_state, branch_states) = match fam {
        Family::Dissipative => {
            let c = effective_couplings(&params)?;
            let zeta_mag = c.zeta_i.norm();
            let mut rows = Vec::with_capacity(config.sample_count);
            for &t in &spec.sample_times() {
                let (_, var) = dissipative_squeezing(zeta_mag, t, params.gamma_a, params.gamma_c)?;
                rows.push(SampleRow {
                    t_s: t,
                    norm: 1.0,
                    p_survival_exact: None,
                    p_survival_eff: None,
                    var_x: Some(var),
                    var_p: None,
                    epr_sum_var: None,
                });
            }
            let (r, var) =
                dissipative_squeezing(zeta_mag, config.tau, params.gamma_a, params.gamma_c)?;
            notes.push(
                "closed-form damped pair generation; var_x is the squeezed-quadrature variance"
                    .into(),
            );
            let merit = MeritReport {
                squeeze_variance: Some(var),
                squeeze_factor_r: Some(r),
                ..Default::default()
            };
            (rows, merit, None, None, None)
        }
        Family::ValidateWeak | Family::ValidateStrong => {
            let detail = compare_detail(config)?;
            notes.extend(detail.notes);
            (detail.rows, MeritReport::default(), Some(detail.divergence), None, None)
        }
        Family::Cat => {
            let psi0 = initial_state(config, &params, space)?;
            let mut branch_finals = Vec::with_capacity(2);
            let mut branch_trajs = Vec::with_capacity(2);
            for sign in [DressedSign::Plus, DressedSign::Minus] {
                let h = build_quadratic_cat(&params, space, sign)?;
                let traj = evolve_schrodinger(&h, &psi0, &spec)?;
                branch_finals.push(rotate_mode_phase(
                    traj.last(),
                    params.omega0 * config.tau,
                )?);
                branch_trajs.push(traj);
            }
            let times = spec.sample_times();
            let mut cats = Vec::with_capacity(times.len());
            for (k, &t) in times.iter().enumerate() {
                let phase = C64::from_polar(1.0, -params.omega_mag * t);
                let combined = StateVector::superpose(&[
                    (phase, &branch_trajs[0].states()[k]),
                    (phase.conj(), &branch_trajs[1].states()[k]),
                ])?;
                cats.push(rotate_mode_phase(&combined, params.omega0 * t)?);
            }
            notes.push(
                "even branch combination e^{-i|Omega|t} psi_+ + e^{+i|Omega|t} psi_-, mode rotation e^{-i omega0 t n} undone before analysis"
                    .into(),
            );
            let rows = quad_rows(&times, &cats, &psi0)?;
            let merit = squeeze_merit(&branch_finals[0], &mut notes)?;
            let cat_final = cats.last().cloned();
            (
                rows,
                merit,
                None,
                cat_final,
                Some((branch_finals[0].clone(), branch_finals[1].clone())),
            )
        }
        Family::WeakEvenOdd => {
            let h = effective_builder(fam, &params, space, config.approx_couplings)?;
            let psi0 = initial_state(config, &params, space)?;
            let traj = evolve_schrodinger(&h, &psi0, &spec)?;
            let times = spec.sample_times();
            let mut evens = Vec::with_capacity(times.len());
            for state in traj.states() {
                let plus = branch_mode_amplitudes(state, DressedSign::Plus, params.phi);
                let minus = branch_mode_amplitudes(state, DressedSign::Minus, params.phi);
                evens.push(StateVector::from_unnormalized(space, plus + minus)?);
            }
            let rows = epr_rows(&times, &evens, &psi0)?;
            let final_raw_plus =
                branch_mode_amplitudes(traj.last(), DressedSign::Plus, params.phi);
            let final_raw_minus =
                branch_mode_amplitudes(traj.last(), DressedSign::Minus, params.phi);
            let even = StateVector::from_unnormalized(
                space,
                &final_raw_plus + &final_raw_minus,
            )?;
            let branch_plus = StateVector::from_unnormalized(space, final_raw_plus)?;
            let branch_minus = StateVector::from_unnormalized(space, final_raw_minus)?;
            let mut merit = pair_merit(&even)?;
            merit.overlap = Some(branch_plus.inner(&branch_minus)?);
            notes.push(
                "atom measured in the bare basis: the e outcome leaves the even rung combination, g the odd; overlap is between the normalised dressed-branch mode states"
                    .into(),
            );
            (rows, merit, None, Some(even), Some((branch_plus, branch_minus)))
        }
        Family::WeakSwap | Family::StrongSwap => {
            let h = effective_builder(fam, &params, space, config.approx_couplings)?;
            let psi0 = initial_state(config, &params, space)?;
            let traj = evolve_schrodinger(&h, &psi0, &spec)?;
            let times = spec.sample_times();
            let rows = epr_rows(&times, traj.states(), &psi0)?;
            let final_state = traj.last().clone();
            let reference = swap_reference(fam, config, &params, space)?;
            let overlap = reference.inner(&final_state)?;
            notes.push(match fam {
                Family::WeakSwap => "swap target |beta, -alpha> on the minus branch".into(),
                _ => "swap target |-beta, alpha> through the intermediate level".into(),
            });
            let merit = MeritReport {
                overlap: Some(overlap),
                ..Default::default()
            };
            (rows, merit, None, Some(final_state), None)
        }
        Family::WeakPairEpr | Family::StrongPairEpr => {
            let h = effective_builder(fam, &params, space, config.approx_couplings)?;
            let psi0 = initial_state(config, &params, space)?;
            let traj = evolve_schrodinger(&h, &psi0, &spec)?;
            let times = spec.sample_times();
            let rows = epr_rows(&times, traj.states(), &psi0)?;
            let final_state = traj.last().clone();
            let merit = pair_merit(&final_state)?;
            (rows, merit, None, Some(final_state), None)
        }
        Family::WeakDegenerate | Family::StrongDegenerate => {
            let h = effective_builder(fam, &params, space, config.approx_couplings)?;
            let psi0 = initial_state(config, &params, space)?;
            let traj = evolve_schrodinger(&h, &psi0, &spec)?;
            let times = spec.sample_times();
            let rows = quad_rows(&times, traj.states(), &psi0)?;
            let final_state = traj.last().clone();
            let merit = squeeze_merit(&final_state, &mut notes)?;
            (rows, merit, None, Some(final_state), None)
        }
    };

    let result = ScenarioResult {
        config: config.clone(),
        rows,
        summary: Summary { merit, divergence },
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            rel_tol: config.rel_tol,
            abs_tol: config.abs_tol,
            n_max_a: n_a,
            n_max_b: n_b,
            notes,
            timestamp_unix_s: timestamp(),
        },
        final_state,
        branch_states,
    };
    if let Some(dir) = &config.output_path {
        emit::write_outputs(&result, Path::new(dir), true, true)?;
    }
    Ok(result)
}

fn swap_reference(
    fam: Family,
    config: &ScenarioConfig,
    params: &SystemParams,
    space: HilbertSpace,
) -> Result<StateVector> {
    let alpha: C64 = config
        .alpha
        .map(Into::into)
        .ok_or_else(|| CqedError::InvalidConfig {
            fields: vec!["alpha: required for swap scenarios".into()],
        })?;
    let beta: C64 = config
        .beta
        .map(Into::into)
        .ok_or_else(|| CqedError::InvalidConfig {
            fields: vec!["beta: required for swap scenarios".into()],
        })?;
    let (target_a, target_b, atom) = match fam {
        // minus-branch pi/2 exchange sends |alpha, beta> to |beta, -alpha>
        Family::WeakSwap => (
            beta,
            -alpha,
            dressed_amplitudes(DressedSign::Minus, params.phi),
        ),
        // intermediate-level exchange rotates the other way
        _ => (-beta, alpha, [ZERO, ZERO, ONE]),
    };
    let mode_a = coherent_amplitudes(target_a, space.n_max(Mode::A)?)?;
    let mode_b = coherent_amplitudes(target_b, space.n_max(Mode::B)?)?;
    product_state(space, &atom, &mode_a, &mode_b)
}

// ---------------------------------------------------------------------------
// exact-vs-effective comparison

struct CompareDetail {
    rows: Vec<SampleRow>,
    divergence: f64,
    notes: Vec<String>,
}

fn compare_subspace(label: &str) -> Result<Subspace> {
    if label.starts_with("i-") {
        Ok(Subspace::Intermediate)
    } else if label.starts_with("plus-") || label.starts_with("minus-") || label == "pm-10" {
        Ok(Subspace::DressedPair)
    } else {
        Err(CqedError::InvalidConfig {
            fields: vec![format!(
                "initial_state_label: `{label}` does not live in a single dressed-basis block"
            )],
        })
    }
}

fn compare_detail(config: &ScenarioConfig) -> Result<CompareDetail> {
    config.validate()?;
    let fam = family(&config.scenario_id)?;
    let regime = family_regime(fam).ok_or_else(|| CqedError::InvalidConfig {
        fields: vec![format!(
            "scenario_id: `{}` has no exact counterpart to compare against",
            config.scenario_id
        )],
    })?;
    if !family_is_two_mode(fam) {
        return Err(CqedError::InvalidConfig {
            fields: vec![format!(
                "scenario_id: `{}` is single-mode; the exact interaction needs both modes",
                config.scenario_id
            )],
        });
    }
    let params = config.system_params()?;
    let (n_a, n_b) = resolve_cutoffs(fam, config, &params)?;
    let space = make_space(n_a, n_b);
    let subspace = compare_subspace(&config.initial_state_label)?;

    let labels: Vec<String> = if config.initial_state_label == "pm-10" {
        vec!["plus-10".into(), "minus-10".into()]
    } else {
        vec![config.initial_state_label.clone()]
    };

    let exact_h = build_interaction_picture(&params, space)?;
    let effective_h = match params.configuration {
        Configuration::Ladder => {
            build_effective_pdc(&params, space, regime, subspace, config.approx_couplings)?
        }
        Configuration::Lambda => {
            build_effective_puc(&params, space, regime, subspace, config.approx_couplings)?
        }
    };
    // the weak builders fold the block Stark shift into the oscillation of
    // the cross term; restore the common frame before comparing states
    let stark_frame = match regime {
        Regime::Weak => Some(stark_shift_generator(&params, space)?),
        Regime::Strong => None,
    };

    let spec = EvolutionSpec::new(0.0, config.tau, config.sample_count)
        .with_tolerances(config.rel_tol, config.abs_tol);
    let times = spec.sample_times();

    let mut notes = Vec::new();
    let mut best: Option<(f64, Vec<SampleRow>, String)> = None;
    for label in &labels {
        let mut sub_config = config.clone();
        sub_config.initial_state_label = label.clone();
        let psi0 = initial_state(&sub_config, &params, space)?;
        let exact_traj = evolve_schrodinger(&exact_h, &psi0, &spec)?;
        let eff_traj = evolve_schrodinger(&effective_h, &psi0, &spec)?;
        let mut rows = Vec::with_capacity(times.len());
        let mut divergence: f64 = 0.0;
        for (k, &t) in times.iter().enumerate() {
            let exact_state = &exact_traj.states()[k];
            let eff_state = match &stark_frame {
                Some(g) => propagate_const(g, &eff_traj.states()[k], t)?,
                None => eff_traj.states()[k].clone(),
            };
            let p_exact = survival(&psi0, exact_state)?;
            let p_eff = survival(&psi0, &eff_state)?;
            divergence = divergence.max((p_exact - p_eff).abs());
            let (vx, vp) = epr_pair_variances(exact_state)?;
            rows.push(SampleRow {
                t_s: t,
                norm: exact_state.norm(),
                p_survival_exact: Some(p_exact),
                p_survival_eff: Some(p_eff),
                var_x: Some(vx),
                var_p: Some(vp),
                epr_sum_var: Some(vx + vp),
            });
        }
        if best
            .as_ref()
            .map(|(d, _, _)| divergence > *d)
            .unwrap_or(true)
        {
            best = Some((divergence, rows, label.clone()));
        }
    }
    let (divergence, rows, worst) = best.expect("at least one comparison branch");
    if labels.len() > 1 {
        notes.push(format!(
            "pm-10 compares both dressed branches; the series follows the worse one ({worst})"
        ));
    }
    Ok(CompareDetail {
        rows,
        divergence,
        notes,
    })
}

/// Maximum absolute difference between the exact and effective survival
/// probabilities of the configured initial state, sampled over [0, tau].
/// Survival is insensitive to global phase, so the metric is frame-safe.
pub fn compare_exact_effective(config: &ScenarioConfig) -> Result<f64> {
    Ok(compare_detail(config)?.divergence)
}

// ---------------------------------------------------------------------------
// sweeps

/// One point of a parameter sweep: the value applied and what came of it.
#[derive(Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: Result<ScenarioResult>,
}

fn apply_vary(config: &mut ScenarioConfig, key: &str, value: f64) -> Result<()> {
    match key {
        "tau" => config.tau = value,
        "omega_mag" => config.omega_mag = value,
        "phi" => config.phi = value,
        "delta_cap" => config.delta_cap = value,
        "delta_small" => config.delta_small = value,
        "omega0" => config.omega0 = value,
        "omega_i" => config.omega_i = value,
        "gamma_c" => config.gamma_c = value,
        "gamma_a" => config.gamma_a = value,
        "rel_tol" => config.rel_tol = value,
        "abs_tol" => config.abs_tol = value,
        other => {
            return Err(CqedError::InvalidConfig {
                fields: vec![format!(
                    "vary: `{other}` is not a sweepable numeric parameter"
                )],
            })
        }
    }
    Ok(())
}

/// Rerun `base` once per value of the named numeric parameter. Points run
/// concurrently, results keep the input order, and a failed point carries
/// its own error without aborting the rest.
pub fn sweep(base: &ScenarioConfig, vary: &str, values: &[f64]) -> Result<Vec<SweepPoint>> {
    // reject unknown keys before paying for any run
    apply_vary(&mut base.clone(), vary, 0.0).map_err(|_| CqedError::InvalidConfig {
        fields: vec![format!(
            "vary: `{vary}` is not a sweepable numeric parameter"
        )],
    })?;
    Ok(values
        .par_iter()
        .map(|&value| {
            let mut config = base.clone();
            // sweep points never share an output path; the caller decides
            // where per-point files go
            config.output_path = None;
            let outcome = apply_vary(&mut config, vary, value).and_then(|()| run_scenario(&config));
            SweepPoint { value, outcome }
        })
        .collect())
}
