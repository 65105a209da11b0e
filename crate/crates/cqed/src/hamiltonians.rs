//! Hamiltonian builders for the driven three-level system, from the exact
//! lab-frame operator down to the closed-form effective interactions in the
//! dressed-state picture.
//!
//! Conventions used throughout (hbar = 1):
//! - drive amplitude Omega = |Omega| e^{-i phi}, drive frequency
//!   omega = 2(omega0 - delta), atomic splitting omega_e - omega_g = 2 omega0
//!   symmetric about zero;
//! - dressed states |+-> = (+-e^{i phi/2}|g> + e^{-i phi/2}|e>)/sqrt(2) with
//!   energies +-|Omega|;
//! - ladder configuration: mode a on g<->i, mode b on i<->e, so
//!   omega_a + omega_b = 2 omega0 and pair processes (ab, a^t b^t) dominate;
//! - lambda configuration: both modes couple upward to |i>, so
//!   omega_a - omega_b = 2 omega0 and hopping processes (a b^t) dominate;
//! - Delta is the common one-photon detuning, delta the half drive detuning.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{CqedError, Result};
use crate::fockspace::{
    atomic_outer, atomic_projector, dressed_amplitudes, ladder_operator, number_operator,
    AtomLevel, DressedSign, HilbertSpace, Mode, OperatorMatrix,
};
use crate::linalg::SparseMatrix;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Three-level coupling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    Ladder,
    Lambda,
}

/// Hierarchy the effective interaction is derived in: weak drive
/// (|Omega| << Delta) or strong drive (|Omega| >> Delta).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Weak,
    Strong,
}

/// Dressed-basis block an effective Hamiltonian acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    Intermediate,
    DressedPair,
}

/// Physical parameters of the driven atom-cavity system, angular frequencies
/// in rad/s.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SystemParams {
    pub configuration: Configuration,
    pub lambda_a: C64,
    pub lambda_b: C64,
    /// |Omega|, the drive amplitude magnitude.
    pub omega_mag: f64,
    /// drive phase; Omega = |Omega| e^{-i phi}.
    pub phi: f64,
    /// common one-photon detuning Delta.
    pub delta_cap: f64,
    /// half detuning delta of the two-photon drive.
    pub delta_small: f64,
    /// half the atomic splitting: omega_e - omega_g = 2 omega0.
    pub omega0: f64,
    pub omega_i: f64,
    pub omega_g: f64,
    pub omega_e: f64,
    /// cavity amplitude decay rate (per mode).
    pub gamma_c: f64,
    /// atomic decay rate out of the upper levels.
    pub gamma_a: f64,
}

impl SystemParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        configuration: Configuration,
        lambda_a: C64,
        lambda_b: C64,
        omega_mag: f64,
        phi: f64,
        delta_cap: f64,
        delta_small: f64,
        omega0: f64,
        omega_i: f64,
        gamma_c: f64,
        gamma_a: f64,
    ) -> Result<Self> {
        if omega_mag < 0.0 {
            return Err(CqedError::InvalidConfig {
                fields: vec!["omega_mag must be nonnegative".into()],
            });
        }
        if gamma_c < 0.0 || gamma_a < 0.0 {
            return Err(CqedError::InvalidConfig {
                fields: vec!["decay rates must be nonnegative".into()],
            });
        }
        Ok(SystemParams {
            configuration,
            lambda_a,
            lambda_b,
            omega_mag,
            phi,
            delta_cap,
            delta_small,
            omega0,
            omega_i,
            omega_g: -omega0,
            omega_e: omega0,
            gamma_c,
            gamma_a,
        })
    }

    /// Complex drive amplitude Omega = |Omega| e^{-i phi}.
    pub fn omega_drive(&self) -> C64 {
        C64::from_polar(self.omega_mag, -self.phi)
    }

    /// Classical drive frequency omega = 2(omega0 - delta).
    pub fn drive_frequency(&self) -> f64 {
        2.0 * (self.omega0 - self.delta_small)
    }

    /// Mode-a frequency implied by the detuning convention.
    pub fn omega_a(&self) -> f64 {
        match self.configuration {
            Configuration::Ladder => self.omega0 + self.omega_i - self.delta_cap,
            Configuration::Lambda => self.omega_i + self.omega0 - self.delta_cap,
        }
    }

    /// Mode-b frequency implied by the detuning convention.
    pub fn omega_b(&self) -> f64 {
        match self.configuration {
            Configuration::Ladder => self.omega0 - self.omega_i + self.delta_cap,
            Configuration::Lambda => self.omega_i - self.omega0 - self.delta_cap,
        }
    }
}

/// One oscillating term amp e^{i freq t} op; Hermiticity of the sum is
/// maintained by storing conjugate partners explicitly. The frequency is
/// complex so decaying envelopes e^{-Gamma t} fit the same representation.
#[derive(Debug, Clone)]
pub struct TdTerm {
    pub amp: C64,
    pub freq: C64,
    pub op: SparseMatrix,
}

/// Hamiltonian as a sum of harmonically oscillating sparse terms.
#[derive(Debug, Clone)]
pub struct TimeDependentHamiltonian {
    space: HilbertSpace,
    terms: Vec<TdTerm>,
}

impl TimeDependentHamiltonian {
    pub fn new(space: HilbertSpace) -> Self {
        TimeDependentHamiltonian {
            space,
            terms: Vec::new(),
        }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn terms(&self) -> &[TdTerm] {
        &self.terms
    }

    /// Add a static, already-Hermitian operator.
    fn push_static(&mut self, op: SparseMatrix) {
        if op.nnz() == 0 {
            return;
        }
        self.terms.push(TdTerm {
            amp: ONE,
            freq: ZERO,
            op,
        });
    }

    /// Add amp e^{i freq t} op together with its Hermitian conjugate.
    fn push_pair(&mut self, amp: C64, freq: C64, op: SparseMatrix) {
        if amp == ZERO || op.nnz() == 0 {
            return;
        }
        self.terms.push(TdTerm {
            amp: amp.conj(),
            freq: -freq.conj(),
            op: op.dagger(),
        });
        self.terms.push(TdTerm { amp, freq, op });
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.freq == ZERO)
    }

    pub(crate) fn assemble(&self, t: f64) -> SparseMatrix {
        let parts: Vec<(C64, &SparseMatrix)> = self
            .terms
            .iter()
            .map(|term| ((C64::i() * term.freq * t).exp() * term.amp, &term.op))
            .collect();
        SparseMatrix::linear_combination(self.space.dim(), &parts)
    }

    /// Assemble the operator at time t; the result carries a verified
    /// Hermitian flag.
    pub fn evaluate(&self, t: f64) -> Result<OperatorMatrix> {
        OperatorMatrix::new_hermitian(self.space, self.assemble(t))
    }

    /// The operator of a time-independent Hamiltonian.
    pub fn constant(&self) -> Result<OperatorMatrix> {
        if !self.is_constant() {
            return Err(CqedError::InvalidState(
                "hamiltonian is time dependent".into(),
            ));
        }
        self.evaluate(0.0)
    }

    /// out += scale * H(t) * psi without assembling H(t).
    pub fn apply_into(
        &self,
        t: f64,
        psi: ndarray::ArrayView1<C64>,
        scale: C64,
        out: &mut ndarray::Array1<C64>,
    ) {
        for term in &self.terms {
            let factor = scale * term.amp * (C64::i() * term.freq * t).exp();
            term.op.matvec_acc(psi, factor, out);
        }
    }

    /// Upper bound on the operator infinity-norm, for step-size choices.
    pub fn norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amp.norm() * t.op.norm_inf())
            .sum()
    }
}

fn require_two_modes(space: HilbertSpace, what: &str) -> Result<()> {
    if !space.has_mode_b() {
        return Err(CqedError::DimensionMismatch {
            expected: 2,
            got: 1,
            context: format!("{what} needs a two-mode space"),
        });
    }
    Ok(())
}

fn lowering(space: HilbertSpace, mode: Mode) -> Result<SparseMatrix> {
    Ok(ladder_operator(space, mode, false)?.matrix().clone())
}

/// Full lab-frame Hamiltonian: bare energies, cavity couplings, and the
/// classical drive oscillating at omega = 2(omega0 - delta).
pub fn build_exact_lab(
    params: &SystemParams,
    space: HilbertSpace,
) -> Result<TimeDependentHamiltonian> {
    require_two_modes(space, "lab-frame hamiltonian")?;
    let omega_a = params.omega_a();
    let omega_b = params.omega_b();
    if omega_a <= 0.0 || omega_b <= 0.0 {
        return Err(CqedError::InvalidConfig {
            fields: vec![format!(
                "implied mode frequencies must be positive (omega_a = {omega_a:.3e}, omega_b = {omega_b:.3e})"
            )],
        });
    }

    let n_a = number_operator(space, Mode::A)?.matrix().clone();
    let n_b = number_operator(space, Mode::B)?.matrix().clone();
    let sig = |k, l| atomic_projector(space, k, l).matrix().clone();

    let mut h = TimeDependentHamiltonian::new(space);
    let dim = space.dim();
    let h0 = SparseMatrix::linear_combination(
        dim,
        &[
            (C64::new(omega_a, 0.0), &n_a),
            (C64::new(omega_b, 0.0), &n_b),
            (C64::new(params.omega_g, 0.0), &sig(AtomLevel::G, AtomLevel::G)),
            (C64::new(params.omega_e, 0.0), &sig(AtomLevel::E, AtomLevel::E)),
            (C64::new(params.omega_i, 0.0), &sig(AtomLevel::I, AtomLevel::I)),
        ],
    );
    h.push_static(h0);

    // cavity couplings: mode a always on g<->i; mode b on i<->e (ladder,
    // where |i> sits between |g> and |e>) or on e<->i (lambda, |i> on top)
    let a = lowering(space, Mode::A)?;
    let b = lowering(space, Mode::B)?;
    let v_a = a.matmul(&sig(AtomLevel::I, AtomLevel::G));
    let v_b = match params.configuration {
        Configuration::Ladder => b.matmul(&sig(AtomLevel::E, AtomLevel::I)),
        Configuration::Lambda => b.matmul(&sig(AtomLevel::I, AtomLevel::E)),
    };
    let static_coupling = SparseMatrix::linear_combination(
        dim,
        &[
            (params.lambda_a, &v_a),
            (params.lambda_a.conj(), &v_a.dagger()),
            (params.lambda_b, &v_b),
            (params.lambda_b.conj(), &v_b.dagger()),
        ],
    );
    h.push_static(static_coupling);

    // drive on the g<->e pair; with omega_e - omega_g = 2 omega0 the
    // co-rotating pairing is e^{-i omega t} sigma_eg in both configurations
    h.push_pair(
        params.omega_drive(),
        C64::new(-params.drive_frequency(), 0.0),
        sig(AtomLevel::E, AtomLevel::G),
    );
    Ok(h)
}

/// Diagonal generator K of the rotating frame U = e^{-i omega t K}:
/// K = (n_a +- n_b + sigma_ee - sigma_gg)/2, + for ladder, - for lambda.
pub fn rotating_frame_generator(
    params: &SystemParams,
    space: HilbertSpace,
) -> Result<OperatorMatrix> {
    require_two_modes(space, "rotating-frame generator")?;
    let sign_b = match params.configuration {
        Configuration::Ladder => 0.5,
        Configuration::Lambda => -0.5,
    };
    let n_a = number_operator(space, Mode::A)?;
    let n_b = number_operator(space, Mode::B)?;
    let half = C64::new(0.5, 0.0);
    let k = SparseMatrix::linear_combination(
        space.dim(),
        &[
            (half, n_a.matrix()),
            (C64::new(sign_b, 0.0), n_b.matrix()),
            (half, atomic_projector(space, AtomLevel::E, AtomLevel::E).matrix()),
            (-half, atomic_projector(space, AtomLevel::G, AtomLevel::G).matrix()),
        ],
    );
    OperatorMatrix::new_hermitian(space, k)
}

/// Time-independent Hamiltonian in the frame rotating at the drive: detuned
/// mode energies, the detuning splitting delta(sigma_ee - sigma_gg), the
/// static drive Omega sigma_eg + h.c., and the cavity couplings.
///
/// Implemented for the ladder configuration, where the frame
/// renders every term static simultaneously.
pub fn to_rotating_frame(params: &SystemParams, space: HilbertSpace) -> Result<OperatorMatrix> {
    require_two_modes(space, "rotating-frame hamiltonian")?;
    if params.configuration != Configuration::Ladder {
        return Err(CqedError::InvalidConfig {
            fields: vec!["rotating-frame form implemented for the ladder configuration".into()],
        });
    }
    let omega = params.drive_frequency();
    let delta_a = params.omega_a() - omega / 2.0;
    let delta_b = params.omega_b() - omega / 2.0;
    let sig = |k, l| atomic_projector(space, k, l).matrix().clone();
    let n_a = number_operator(space, Mode::A)?.matrix().clone();
    let n_b = number_operator(space, Mode::B)?.matrix().clone();
    let a = lowering(space, Mode::A)?;
    let b = lowering(space, Mode::B)?;
    let v_a = a.matmul(&sig(AtomLevel::I, AtomLevel::G));
    let v_b = b.matmul(&sig(AtomLevel::E, AtomLevel::I));
    let omega_drive = params.omega_drive();

    let matrix = SparseMatrix::linear_combination(
        space.dim(),
        &[
            (C64::new(delta_a, 0.0), &n_a),
            (C64::new(delta_b, 0.0), &n_b),
            (
                C64::new(params.omega_g + omega / 2.0, 0.0),
                &sig(AtomLevel::G, AtomLevel::G),
            ),
            (
                C64::new(params.omega_e - omega / 2.0, 0.0),
                &sig(AtomLevel::E, AtomLevel::E),
            ),
            (C64::new(params.omega_i, 0.0), &sig(AtomLevel::I, AtomLevel::I)),
            (omega_drive, &sig(AtomLevel::E, AtomLevel::G)),
            (omega_drive.conj(), &sig(AtomLevel::G, AtomLevel::E)),
            (params.lambda_a, &v_a),
            (params.lambda_a.conj(), &v_a.dagger()),
            (params.lambda_b, &v_b),
            (params.lambda_b.conj(), &v_b.dagger()),
        ],
    );
    OperatorMatrix::new_hermitian(space, matrix)
}

fn sigma_i_dressed(space: HilbertSpace, sign: DressedSign, phi: f64) -> SparseMatrix {
    // sigma_{i,+-} = |i><+-|
    let i_ket = [ZERO, ZERO, ONE];
    let bra = dressed_amplitudes(sign, phi);
    atomic_outer(space, &i_ket, &bra).matrix().clone()
}

fn sigma_dressed_dressed(space: HilbertSpace, sign: DressedSign, phi: f64) -> SparseMatrix {
    let amps = dressed_amplitudes(sign, phi);
    atomic_outer(space, &amps, &amps).matrix().clone()
}

/// Interaction-picture Hamiltonian in the dressed basis: four oscillating
/// sideband families at Delta -+ |Omega| -+ delta. Valid for |delta| <<
/// |Omega|, where the residual delta(sigma_+- + sigma_-+) coupling is
/// negligible; it vanishes identically at delta = 0.
pub fn build_interaction_picture(
    params: &SystemParams,
    space: HilbertSpace,
) -> Result<TimeDependentHamiltonian> {
    require_two_modes(space, "interaction-picture hamiltonian")?;
    let phi = params.phi;
    let dcap = params.delta_cap;
    let omg = params.omega_mag;
    let dsm = params.delta_small;
    let root_half = C64::new(1.0 / 2f64.sqrt(), 0.0);
    let phase_plus = C64::from_polar(1.0, phi / 2.0);
    let phase_minus = C64::from_polar(1.0, -phi / 2.0);

    let a = lowering(space, Mode::A)?;
    let b = lowering(space, Mode::B)?;
    let sig_ip = sigma_i_dressed(space, DressedSign::Plus, phi);
    let sig_im = sigma_i_dressed(space, DressedSign::Minus, phi);

    let mut h = TimeDependentHamiltonian::new(space);

    // mode-a channel, from sigma_ig = e^{i phi/2}(sigma_{i+} - sigma_{i-})/sqrt(2)
    let amp_a = params.lambda_a * phase_plus * root_half;
    h.push_pair(
        amp_a,
        C64::new(dcap - omg - dsm, 0.0),
        a.matmul(&sig_ip),
    );
    h.push_pair(
        -amp_a,
        C64::new(dcap + omg - dsm, 0.0),
        a.matmul(&sig_im),
    );

    match params.configuration {
        Configuration::Ladder => {
            // mode-b channel from sigma_ei = e^{i phi/2}(sigma_{+i} + sigma_{-i})/sqrt(2)
            let amp_b = params.lambda_b * phase_plus * root_half;
            h.push_pair(
                amp_b,
                C64::new(-(dcap - omg + dsm), 0.0),
                b.matmul(&sig_ip.dagger()),
            );
            h.push_pair(
                amp_b,
                C64::new(-(dcap + omg + dsm), 0.0),
                b.matmul(&sig_im.dagger()),
            );
        }
        Configuration::Lambda => {
            // mode-b channel from sigma_ie = e^{-i phi/2}(sigma_{i+} + sigma_{i-})/sqrt(2)
            let amp_b = params.lambda_b * phase_minus * root_half;
            h.push_pair(
                amp_b,
                C64::new(dcap - omg + dsm, 0.0),
                b.matmul(&sig_ip),
            );
            h.push_pair(
                amp_b,
                C64::new(dcap + omg + dsm, 0.0),
                b.matmul(&sig_im),
            );
        }
    }
    Ok(h)
}

/// Closed-form coupling strengths of the second-order effective dynamics.
///
/// The pair couplings (xi, zeta) belong to the ladder configuration, the
/// hopping couplings (gamma, eta) to the lambda configuration. The `_pm`
/// fields hold the |+> branch built from the exact denominator; the |->
/// branch and the textbook approximate forms are exposed as methods. Fields
/// whose denominator vanishes (e.g. xi_i at Delta = 0) are non-finite and
/// must not be used; the Hamiltonian builders check for that.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveCouplings {
    /// pair coupling in the |i> block, |Omega| lambda_a lambda_b e^{i phi}/Delta^2.
    pub xi_i: C64,
    /// pair coupling in the |+> block, lambda_a lambda_b e^{i phi}/2(Delta - |Omega|).
    pub xi_pm: C64,
    /// strong-drive pair coupling in the |i> block, lambda_a lambda_b e^{i phi}/|Omega|.
    pub zeta_i: C64,
    /// strong-drive pair coupling in the |+> block, lambda_a lambda_b e^{i phi}/2(|Omega| - Delta).
    pub zeta_pm: C64,
    /// hopping coupling in the |i> block, |Omega| lambda_a lambda_b^* e^{i phi}/Delta^2.
    pub gamma_i: C64,
    /// hopping coupling in the |+> block, lambda_a lambda_b^* e^{i phi}/2(Delta - |Omega|).
    pub gamma_pm: C64,
    /// strong-drive hopping coupling in the |i> block, lambda_a lambda_b^* e^{i phi}/|Omega|.
    pub eta_i: C64,
    /// signed |+>-block hopping coefficient, -lambda_a lambda_b^* e^{i phi}/2(Delta - |Omega|).
    pub eta_pm_plus: C64,
    /// signed |->-block hopping coefficient, +lambda_a lambda_b^* e^{i phi}/2(Delta + |Omega|).
    pub eta_pm_minus: C64,
    /// quadratic Stark rate (|lambda_a|^2 + |lambda_b|^2)/2|Omega|.
    pub chi: f64,
    /// detuning adjustment for the |i> block as printed in the closed forms.
    pub delta_i_adjust: f64,
    /// detuning adjustment for the |+> block as printed in the closed forms.
    pub delta_pm_adjust: f64,
    configuration: Configuration,
    lambda_pair: C64,
    lambda_hop: C64,
    abs_sq_sum: f64,
    abs_sq_diff: f64,
    delta_cap: f64,
    omega_mag: f64,
}

/// Compute every effective coupling for the given parameters. Fails when
/// Delta = +-|Omega|, where all dressed-branch denominators collapse.
pub fn effective_couplings(params: &SystemParams) -> Result<EffectiveCouplings> {
    let dcap = params.delta_cap;
    let omg = params.omega_mag;
    if (dcap - omg).abs() == 0.0 || (dcap + omg).abs() == 0.0 {
        return Err(CqedError::SingularParameter(format!(
            "effective couplings diverge at Delta = +-|Omega| (Delta = {dcap:.3e}, |Omega| = {omg:.3e})"
        )));
    }
    let phase = C64::from_polar(1.0, params.phi);
    let lambda_pair = params.lambda_a * params.lambda_b * phase;
    let lambda_hop = params.lambda_a * params.lambda_b.conj() * phase;
    let abs_sq_sum = params.lambda_a.norm_sqr() + params.lambda_b.norm_sqr();
    let abs_sq_diff = params.lambda_a.norm_sqr() - params.lambda_b.norm_sqr();

    let (delta_i_adjust, delta_pm_adjust) = match params.configuration {
        Configuration::Ladder => (
            -abs_sq_sum / dcap,
            abs_sq_sum / (2.0 * (dcap - omg)),
        ),
        Configuration::Lambda => (
            -abs_sq_diff / (2.0 * dcap),
            abs_sq_diff / (4.0 * (dcap - omg)),
        ),
    };

    Ok(EffectiveCouplings {
        xi_i: lambda_pair * omg / (dcap * dcap),
        xi_pm: lambda_pair / (2.0 * (dcap - omg)),
        zeta_i: lambda_pair / omg,
        zeta_pm: lambda_pair / (2.0 * (omg - dcap)),
        gamma_i: lambda_hop * omg / (dcap * dcap),
        gamma_pm: lambda_hop / (2.0 * (dcap - omg)),
        eta_i: lambda_hop / omg,
        eta_pm_plus: -lambda_hop / (2.0 * (dcap - omg)),
        eta_pm_minus: lambda_hop / (2.0 * (dcap + omg)),
        chi: abs_sq_sum / (2.0 * omg),
        delta_i_adjust,
        delta_pm_adjust,
        configuration: params.configuration,
        lambda_pair,
        lambda_hop,
        abs_sq_sum,
        abs_sq_diff,
        delta_cap: dcap,
        omega_mag: omg,
    })
}

impl EffectiveCouplings {
    /// Branch-resolved pair coupling lambda_a lambda_b e^{i phi}/2(Delta -+ |Omega|).
    pub fn xi_pm_branch(&self, sign: DressedSign) -> C64 {
        self.lambda_pair / (2.0 * (self.delta_cap - sign.signum() * self.omega_mag))
    }

    /// Weak-drive approximation lambda_a lambda_b e^{i phi}/2 Delta.
    pub fn xi_pm_approx(&self) -> C64 {
        self.lambda_pair / (2.0 * self.delta_cap)
    }

    /// Branch-resolved strong pair coupling lambda_a lambda_b e^{i phi}/2(|Omega| -+ Delta).
    pub fn zeta_pm_branch(&self, sign: DressedSign) -> C64 {
        self.lambda_pair / (2.0 * (self.omega_mag - sign.signum() * self.delta_cap))
    }

    /// Strong-drive approximation lambda_a lambda_b e^{i phi}/2|Omega|.
    pub fn zeta_pm_approx(&self) -> C64 {
        self.lambda_pair / (2.0 * self.omega_mag)
    }

    /// Branch-resolved hopping coupling lambda_a lambda_b^* e^{i phi}/2(Delta -+ |Omega|).
    pub fn gamma_pm_branch(&self, sign: DressedSign) -> C64 {
        self.lambda_hop / (2.0 * (self.delta_cap - sign.signum() * self.omega_mag))
    }

    /// Weak-drive approximation lambda_a lambda_b^* e^{i phi}/2 Delta.
    pub fn gamma_pm_approx(&self) -> C64 {
        self.lambda_hop / (2.0 * self.delta_cap)
    }

    /// Strong-drive approximation lambda_a lambda_b^* e^{i phi}/2|Omega|,
    /// common to both dressed branches at Delta = 0.
    pub fn eta_pm_approx(&self) -> C64 {
        self.lambda_hop / (2.0 * self.omega_mag)
    }

    /// Signed branch hopping coefficient with the exact denominator.
    pub fn eta_pm_branch(&self, sign: DressedSign) -> C64 {
        match sign {
            DressedSign::Plus => self.eta_pm_plus,
            DressedSign::Minus => self.eta_pm_minus,
        }
    }

    /// |zeta_i| / chi; equals 1 exactly when |lambda_a| = |lambda_b|, the
    /// critical point of the quadratic single-mode dynamics.
    pub fn critical_ratio(&self) -> f64 {
        self.zeta_i.norm() / self.chi
    }

    /// Branch-resolved printed detuning adjustment for the dressed blocks.
    pub fn delta_pm_adjust_branch(&self, sign: DressedSign) -> f64 {
        let den = self.delta_cap - sign.signum() * self.omega_mag;
        match self.configuration {
            Configuration::Ladder => self.abs_sq_sum / (2.0 * den),
            Configuration::Lambda => self.abs_sq_diff / (4.0 * den),
        }
    }

    /// Drive detuning that makes the weak-regime effective interaction in
    /// the given block exactly static. This is half the printed adjustment
    /// for the pair interaction and equal to it for the hopping interaction.
    pub fn static_detuning(&self, subspace: Subspace, sign: DressedSign, approx: bool) -> f64 {
        let (c_a, c_b) = stark_coefficients_raw(
            self.delta_cap,
            self.omega_mag,
            self.abs_sq_sum,
            self.abs_sq_diff,
            subspace,
            sign,
            approx,
        );
        match self.configuration {
            Configuration::Ladder => -(c_a + c_b) / 2.0,
            Configuration::Lambda => -(c_a - c_b) / 2.0,
        }
    }
}

// per-mode Stark rates (coefficients of n_a and n_b) of a dressed block,
// with exact or weak-approximated denominators
fn stark_coefficients_raw(
    dcap: f64,
    omg: f64,
    abs_sq_sum: f64,
    abs_sq_diff: f64,
    subspace: Subspace,
    sign: DressedSign,
    approx: bool,
) -> (f64, f64) {
    let sq_a = (abs_sq_sum + abs_sq_diff) / 2.0;
    let sq_b = (abs_sq_sum - abs_sq_diff) / 2.0;
    match subspace {
        Subspace::Intermediate => {
            if approx {
                (sq_a / dcap, sq_b / dcap)
            } else {
                let den = dcap * dcap - omg * omg;
                (dcap * sq_a / den, dcap * sq_b / den)
            }
        }
        Subspace::DressedPair => {
            let den = if approx {
                2.0 * dcap
            } else {
                2.0 * (dcap - sign.signum() * omg)
            };
            (-sq_a / den, -sq_b / den)
        }
    }
}

fn stark_coefficients(
    params: &SystemParams,
    subspace: Subspace,
    sign: DressedSign,
    regime: Regime,
    approx: bool,
) -> (f64, f64) {
    let sq_a = params.lambda_a.norm_sqr();
    let sq_b = params.lambda_b.norm_sqr();
    if approx && regime == Regime::Strong {
        // printed strong-drive forms at Delta = 0: no |i>-block shift, and
        // +-(|lambda|^2 ...)/2|Omega| on the dressed blocks
        return match subspace {
            Subspace::Intermediate => (0.0, 0.0),
            Subspace::DressedPair => {
                let den = 2.0 * params.omega_mag * sign.signum();
                (sq_a / den, sq_b / den)
            }
        };
    }
    stark_coefficients_raw(
        params.delta_cap,
        params.omega_mag,
        sq_a + sq_b,
        sq_a - sq_b,
        subspace,
        sign,
        approx,
    )
}

fn check_finite(value: C64, what: &str) -> Result<C64> {
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(CqedError::SingularParameter(format!(
            "{what} is singular for these parameters"
        )))
    }
}

// pair operator ab (ladder) or hopping operator a b^dagger (lambda)
fn cross_mode_op(space: HilbertSpace, configuration: Configuration) -> Result<SparseMatrix> {
    let a = lowering(space, Mode::A)?;
    let b = lowering(space, Mode::B)?;
    Ok(match configuration {
        Configuration::Ladder => a.matmul(&b),
        Configuration::Lambda => a.matmul(&b.dagger()),
    })
}

// phase rate of the cross-mode operator inside a Stark-shifted block
fn cross_phase_rate(params: &SystemParams, c_a: f64, c_b: f64) -> f64 {
    match params.configuration {
        Configuration::Ladder => -(2.0 * params.delta_small + c_a + c_b),
        Configuration::Lambda => -(2.0 * params.delta_small + c_a - c_b),
    }
}

// Stark operator of one block: q_a weights n_a-like factor, q_b the other;
// `vac_a`/`vac_b` add the vacuum offsets (aa^t vs a^t a bookkeeping).
fn stark_block(
    space: HilbertSpace,
    c_a: f64,
    c_b: f64,
    vac_a: bool,
    vac_b: bool,
    block: &SparseMatrix,
) -> Result<SparseMatrix> {
    let n_a = number_operator(space, Mode::A)?.matrix().clone();
    let n_b = number_operator(space, Mode::B)?.matrix().clone();
    let eye = SparseMatrix::identity(space.dim());
    let mut shift = 0.0;
    if vac_a {
        shift += c_a;
    }
    if vac_b {
        shift += c_b;
    }
    let combo = SparseMatrix::linear_combination(
        space.dim(),
        &[
            (C64::new(c_a, 0.0), &n_a),
            (C64::new(c_b, 0.0), &n_b),
            (C64::new(shift, 0.0), &eye),
        ],
    );
    Ok(combo.matmul(block))
}

/// Effective pair-generation Hamiltonian of the ladder configuration in one
/// dressed-basis block.
///
/// Weak regime: the block's Stark shift is absorbed into the oscillation of
/// the pair term, which becomes static exactly when the drive detuning
/// equals `EffectiveCouplings::static_detuning`. Strong regime: delta must
/// be zero and the dressed-pair Stark terms are kept explicitly.
/// `approx` selects the printed single-denominator coupling forms instead of
/// the exact second-order denominators.
pub fn build_effective_pdc(
    params: &SystemParams,
    space: HilbertSpace,
    regime: Regime,
    subspace: Subspace,
    approx: bool,
) -> Result<TimeDependentHamiltonian> {
    if params.configuration != Configuration::Ladder {
        return Err(CqedError::InvalidConfig {
            fields: vec!["pair-generation effective form needs the ladder configuration".into()],
        });
    }
    build_effective_cross(params, space, regime, subspace, approx)
}

/// Effective photon-hopping Hamiltonian of the lambda configuration in one
/// dressed-basis block; same regime conventions as the pair form.
pub fn build_effective_puc(
    params: &SystemParams,
    space: HilbertSpace,
    regime: Regime,
    subspace: Subspace,
    approx: bool,
) -> Result<TimeDependentHamiltonian> {
    if params.configuration != Configuration::Lambda {
        return Err(CqedError::InvalidConfig {
            fields: vec!["photon-hopping effective form needs the lambda configuration".into()],
        });
    }
    build_effective_cross(params, space, regime, subspace, approx)
}

fn build_effective_cross(
    params: &SystemParams,
    space: HilbertSpace,
    regime: Regime,
    subspace: Subspace,
    approx: bool,
) -> Result<TimeDependentHamiltonian> {
    require_two_modes(space, "effective hamiltonian")?;
    let couplings = effective_couplings(params)?;
    if regime == Regime::Strong && params.delta_small != 0.0 {
        return Err(CqedError::InvalidConfig {
            fields: vec!["strong-regime effective forms are derived at delta = 0".into()],
        });
    }
    let cross = cross_mode_op(space, params.configuration)?;
    let phi = params.phi;
    let mut h = TimeDependentHamiltonian::new(space);

    match subspace {
        Subspace::Intermediate => {
            let sig_ii = atomic_projector(space, AtomLevel::I, AtomLevel::I)
                .matrix()
                .clone();
            let g = match (params.configuration, regime, approx) {
                (Configuration::Ladder, Regime::Weak, true) => couplings.xi_i,
                (Configuration::Ladder, Regime::Strong, true) => -couplings.zeta_i,
                (Configuration::Lambda, Regime::Weak, true) => couplings.gamma_i,
                (Configuration::Lambda, Regime::Strong, true) => -couplings.eta_i,
                // exact second-order form, valid in either hierarchy
                (Configuration::Ladder, _, false) => {
                    let den = params.delta_cap.powi(2) - params.omega_mag.powi(2);
                    couplings.lambda_pair * params.omega_mag / den
                }
                (Configuration::Lambda, _, false) => {
                    let den = params.delta_cap.powi(2) - params.omega_mag.powi(2);
                    couplings.lambda_hop * params.omega_mag / den
                }
            };
            let g = check_finite(g, "intermediate-block cross coupling")?;
            match regime {
                Regime::Weak => {
                    let (c_a, c_b) =
                        stark_coefficients(params, subspace, DressedSign::Plus, regime, approx);
                    if !c_a.is_finite() || !c_b.is_finite() {
                        return Err(CqedError::SingularParameter(
                            "intermediate-block Stark rate is singular".into(),
                        ));
                    }
                    let freq = cross_phase_rate(params, c_a, c_b);
                    h.push_pair(g, C64::new(freq, 0.0), cross.matmul(&sig_ii));
                }
                Regime::Strong => {
                    h.push_pair(g, ZERO, cross.matmul(&sig_ii));
                    // residual Stark shift; vanishes identically at Delta = 0
                    let (c_a, c_b) =
                        stark_coefficients(params, subspace, DressedSign::Plus, regime, false);
                    if c_a != 0.0 || c_b != 0.0 {
                        let vac_b = params.configuration == Configuration::Lambda;
                        let stark = stark_block(space, c_a, c_b, true, vac_b, &sig_ii)?;
                        h.push_static(stark);
                    }
                }
            }
        }
        Subspace::DressedPair => {
            for sign in [DressedSign::Plus, DressedSign::Minus] {
                let block = sigma_dressed_dressed(space, sign, phi);
                // signed block coefficient of the cross operator
                let g = if approx {
                    match (params.configuration, regime) {
                        (Configuration::Ladder, Regime::Weak) => match sign {
                            DressedSign::Plus => -couplings.xi_pm_approx(),
                            DressedSign::Minus => couplings.xi_pm_approx(),
                        },
                        // at Delta = 0 both branches carry the same + coefficient
                        (Configuration::Ladder, Regime::Strong) => couplings.zeta_pm_approx(),
                        (Configuration::Lambda, Regime::Weak) => match sign {
                            DressedSign::Plus => -couplings.gamma_pm_approx(),
                            DressedSign::Minus => couplings.gamma_pm_approx(),
                        },
                        (Configuration::Lambda, Regime::Strong) => couplings.eta_pm_approx(),
                    }
                } else {
                    match params.configuration {
                        Configuration::Ladder => match sign {
                            DressedSign::Plus => -couplings.xi_pm_branch(sign),
                            DressedSign::Minus => couplings.xi_pm_branch(sign),
                        },
                        Configuration::Lambda => couplings.eta_pm_branch(sign),
                    }
                };
                let g = check_finite(g, "dressed-block cross coupling")?;
                match regime {
                    Regime::Weak => {
                        let (c_a, c_b) = stark_coefficients(params, subspace, sign, regime, approx);
                        let freq = cross_phase_rate(params, c_a, c_b);
                        h.push_pair(g, C64::new(freq, 0.0), cross.matmul(&block));
                    }
                    Regime::Strong => {
                        h.push_pair(g, ZERO, cross.matmul(&block));
                        let (c_a, c_b) = stark_coefficients(params, subspace, sign, regime, approx);
                        let vac_b = params.configuration == Configuration::Ladder;
                        let stark = stark_block(space, c_a, c_b, false, vac_b, &block)?;
                        h.push_static(stark);
                    }
                }
            }
        }
    }
    Ok(h)
}

// degenerate-cavity Stark operator: both per-mode rates land on the one
// mode, (c_a + c_b) n plus whichever vacuum offsets the block carries
fn stark_block_degenerate(
    space: HilbertSpace,
    c_a: f64,
    c_b: f64,
    vac_a: bool,
    vac_b: bool,
    block: &SparseMatrix,
) -> Result<SparseMatrix> {
    let n = number_operator(space, Mode::A)?.matrix().clone();
    let eye = SparseMatrix::identity(space.dim());
    let mut shift = 0.0;
    if vac_a {
        shift += c_a;
    }
    if vac_b {
        shift += c_b;
    }
    let combo = SparseMatrix::linear_combination(
        space.dim(),
        &[
            (C64::new(c_a + c_b, 0.0), &n),
            (C64::new(shift, 0.0), &eye),
        ],
    );
    Ok(combo.matmul(block))
}

/// Effective pair interaction when both ladder transitions share one cavity
/// mode: the pair operator degenerates to a^2 and the couplings are the same
/// as in the two-mode form.
///
/// Because both emitted photons now land in the same mode, the block Stark
/// phase advances twice as fast: the weak form is static when the drive
/// detuning equals twice `EffectiveCouplings::static_detuning`. Strong
/// regime again requires delta = 0 and keeps the Stark terms explicitly.
pub fn build_degenerate_pair(
    params: &SystemParams,
    space: HilbertSpace,
    regime: Regime,
    subspace: Subspace,
    approx: bool,
) -> Result<TimeDependentHamiltonian> {
    if params.configuration != Configuration::Ladder {
        return Err(CqedError::InvalidConfig {
            fields: vec!["degenerate pair form needs the ladder configuration".into()],
        });
    }
    if space.has_mode_b() {
        return Err(CqedError::InvalidConfig {
            fields: vec!["degenerate pair form lives on a single mode".into()],
        });
    }
    if regime == Regime::Strong && params.delta_small != 0.0 {
        return Err(CqedError::InvalidConfig {
            fields: vec!["strong-regime effective forms are derived at delta = 0".into()],
        });
    }
    let couplings = effective_couplings(params)?;
    let a = lowering(space, Mode::A)?;
    let pair = a.matmul(&a);
    let phi = params.phi;
    let mut h = TimeDependentHamiltonian::new(space);

    match subspace {
        Subspace::Intermediate => {
            let sig_ii = atomic_projector(space, AtomLevel::I, AtomLevel::I)
                .matrix()
                .clone();
            let g = if approx {
                match regime {
                    Regime::Weak => couplings.xi_i,
                    Regime::Strong => -couplings.zeta_i,
                }
            } else {
                let den = params.delta_cap.powi(2) - params.omega_mag.powi(2);
                couplings.lambda_pair * params.omega_mag / den
            };
            let g = check_finite(g, "intermediate-block pair coupling")?;
            match regime {
                Regime::Weak => {
                    let (c_a, c_b) =
                        stark_coefficients(params, subspace, DressedSign::Plus, regime, approx);
                    if !c_a.is_finite() || !c_b.is_finite() {
                        return Err(CqedError::SingularParameter(
                            "intermediate-block Stark rate is singular".into(),
                        ));
                    }
                    let freq = -(2.0 * params.delta_small + 2.0 * (c_a + c_b));
                    h.push_pair(g, C64::new(freq, 0.0), pair.matmul(&sig_ii));
                }
                Regime::Strong => {
                    h.push_pair(g, ZERO, pair.matmul(&sig_ii));
                    let (c_a, c_b) =
                        stark_coefficients(params, subspace, DressedSign::Plus, regime, false);
                    if c_a != 0.0 || c_b != 0.0 {
                        let stark =
                            stark_block_degenerate(space, c_a, c_b, true, false, &sig_ii)?;
                        h.push_static(stark);
                    }
                }
            }
        }
        Subspace::DressedPair => {
            for sign in [DressedSign::Plus, DressedSign::Minus] {
                let block = sigma_dressed_dressed(space, sign, phi);
                let g = if approx {
                    match regime {
                        Regime::Weak => match sign {
                            DressedSign::Plus => -couplings.xi_pm_approx(),
                            DressedSign::Minus => couplings.xi_pm_approx(),
                        },
                        Regime::Strong => couplings.zeta_pm_approx(),
                    }
                } else {
                    match sign {
                        DressedSign::Plus => -couplings.xi_pm_branch(sign),
                        DressedSign::Minus => couplings.xi_pm_branch(sign),
                    }
                };
                let g = check_finite(g, "dressed-block pair coupling")?;
                match regime {
                    Regime::Weak => {
                        let (c_a, c_b) = stark_coefficients(params, subspace, sign, regime, approx);
                        let freq = -(2.0 * params.delta_small + 2.0 * (c_a + c_b));
                        h.push_pair(g, C64::new(freq, 0.0), pair.matmul(&block));
                    }
                    Regime::Strong => {
                        h.push_pair(g, ZERO, pair.matmul(&block));
                        let (c_a, c_b) = stark_coefficients(params, subspace, sign, regime, approx);
                        let stark = stark_block_degenerate(space, c_a, c_b, false, true, &block)?;
                        h.push_static(stark);
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Full second-order effective Hamiltonian: all three dressed-basis blocks
/// with exact denominators, explicit Stark shifts, and cross terms
/// oscillating at e^{-+2i delta t}.
pub fn build_effective_general(
    params: &SystemParams,
    space: HilbertSpace,
) -> Result<TimeDependentHamiltonian> {
    require_two_modes(space, "effective hamiltonian")?;
    let dcap = params.delta_cap;
    let omg = params.omega_mag;
    if dcap * dcap == omg * omg {
        return Err(CqedError::SingularParameter(
            "effective forms diverge at Delta = +-|Omega|".into(),
        ));
    }
    let couplings = effective_couplings(params)?;
    let cross = cross_mode_op(space, params.configuration)?;
    let phi = params.phi;
    let two_delta = C64::new(-2.0 * params.delta_small, 0.0);
    let mut h = TimeDependentHamiltonian::new(space);

    // |i> block
    let sig_ii = atomic_projector(space, AtomLevel::I, AtomLevel::I)
        .matrix()
        .clone();
    let (ci_a, ci_b) = stark_coefficients(
        params,
        Subspace::Intermediate,
        DressedSign::Plus,
        Regime::Weak,
        false,
    );
    let vac_b_i = params.configuration == Configuration::Lambda;
    h.push_static(stark_block(space, ci_a, ci_b, true, vac_b_i, &sig_ii)?);
    let g_i = match params.configuration {
        Configuration::Ladder => couplings.lambda_pair * omg / (dcap * dcap - omg * omg),
        Configuration::Lambda => couplings.lambda_hop * omg / (dcap * dcap - omg * omg),
    };
    h.push_pair(g_i, two_delta, cross.matmul(&sig_ii));

    // dressed blocks
    for sign in [DressedSign::Plus, DressedSign::Minus] {
        let block = sigma_dressed_dressed(space, sign, phi);
        let (c_a, c_b) =
            stark_coefficients(params, Subspace::DressedPair, sign, Regime::Weak, false);
        let vac_b = params.configuration == Configuration::Ladder;
        h.push_static(stark_block(space, c_a, c_b, false, vac_b, &block)?);
        let g = match params.configuration {
            Configuration::Ladder => match sign {
                DressedSign::Plus => -couplings.xi_pm_branch(sign),
                DressedSign::Minus => couplings.xi_pm_branch(sign),
            },
            Configuration::Lambda => couplings.eta_pm_branch(sign),
        };
        h.push_pair(g, two_delta, cross.matmul(&block));
    }
    Ok(h)
}

/// Static generator of the block-diagonal Stark frame: the exact level
/// shifts of all three dressed-basis blocks. Applying e^{-iGt} to states
/// evolved under the phase-absorbed effective forms reinstates the shifts
/// when comparing against the exact interaction-picture evolution.
pub fn stark_shift_generator(
    params: &SystemParams,
    space: HilbertSpace,
) -> Result<OperatorMatrix> {
    require_two_modes(space, "stark generator")?;
    let sig_ii = atomic_projector(space, AtomLevel::I, AtomLevel::I)
        .matrix()
        .clone();
    let (ci_a, ci_b) = stark_coefficients(
        params,
        Subspace::Intermediate,
        DressedSign::Plus,
        Regime::Weak,
        false,
    );
    let vac_b_i = params.configuration == Configuration::Lambda;
    let mut total = stark_block(space, ci_a, ci_b, true, vac_b_i, &sig_ii)?;
    for sign in [DressedSign::Plus, DressedSign::Minus] {
        let block = sigma_dressed_dressed(space, sign, params.phi);
        let (c_a, c_b) =
            stark_coefficients(params, Subspace::DressedPair, sign, Regime::Weak, false);
        let vac_b = params.configuration == Configuration::Ladder;
        total = total.add(&stark_block(space, c_a, c_b, false, vac_b, &block)?);
    }
    OperatorMatrix::new_hermitian(space, total)
}

/// Quadratic single-mode Hamiltonian of one dressed branch in the
/// degenerate strong-drive setup:
/// (omega0 +- chi) n_a + (zeta e^{-2i omega0 t} a^t a^t + h.c.), written in
/// the non-rotating picture of the degenerate mode at delta = 0.
pub fn build_quadratic_cat(
    params: &SystemParams,
    space: HilbertSpace,
    sign: DressedSign,
) -> Result<TimeDependentHamiltonian> {
    if space.has_mode_b() {
        return Err(CqedError::DimensionMismatch {
            expected: 1,
            got: 2,
            context: "quadratic branch hamiltonian is single-mode".into(),
        });
    }
    if params.delta_cap != 0.0 || params.delta_small != 0.0 {
        return Err(CqedError::InvalidConfig {
            fields: vec!["quadratic branch form is derived at Delta = 0, delta = 0".into()],
        });
    }
    let couplings = effective_couplings(params)?;
    let zeta = check_finite(couplings.zeta_pm, "quadratic pair coupling")?;
    if !couplings.chi.is_finite() {
        return Err(CqedError::SingularParameter(
            "quadratic Stark rate needs |Omega| > 0".into(),
        ));
    }
    let omega = params.omega0;
    let n_a = number_operator(space, Mode::A)?.matrix().clone();
    let a = lowering(space, Mode::A)?;
    let a_dag_sq = a.dagger().matmul(&a.dagger());

    let mut h = TimeDependentHamiltonian::new(space);
    h.push_static(n_a.scaled(C64::new(omega + sign.signum() * couplings.chi, 0.0)));
    h.push_pair(zeta, C64::new(-2.0 * omega, 0.0), a_dag_sq);
    Ok(h)
}

/// Human-readable warnings when the stated hierarchy of an effective form
/// is stretched by the given parameters.
pub fn regime_warnings(params: &SystemParams, regime: Regime) -> Vec<String> {
    let mut warnings = Vec::new();
    let lam = params.lambda_a.norm().max(params.lambda_b.norm());
    match regime {
        Regime::Weak => {
            if params.omega_mag > 0.3 * params.delta_cap.abs() {
                warnings.push(format!(
                    "weak-drive hierarchy |Omega| << Delta is stretched: |Omega|/Delta = {:.3}",
                    params.omega_mag / params.delta_cap.abs()
                ));
            }
            let gap = (params.delta_cap.abs() - params.omega_mag).abs();
            if gap > 0.0 && lam > 0.3 * gap {
                warnings.push(format!(
                    "dispersive condition lambda << Delta - |Omega| is stretched: ratio = {:.3}",
                    lam / gap
                ));
            }
        }
        Regime::Strong => {
            if params.delta_cap.abs() > 0.3 * params.omega_mag {
                warnings.push(format!(
                    "strong-drive hierarchy Delta << |Omega| is stretched: Delta/|Omega| = {:.3}",
                    params.delta_cap.abs() / params.omega_mag
                ));
            }
            if lam > 0.3 * params.omega_mag {
                warnings.push(format!(
                    "dispersive condition lambda << |Omega| is stretched: ratio = {:.3}",
                    lam / params.omega_mag
                ));
            }
        }
    }
    if params.omega_mag > 0.0 && params.delta_small.abs() > 0.1 * params.omega_mag {
        warnings.push(format!(
            "interaction picture drops a dressed-basis coupling of order delta; |delta|/|Omega| = {:.3}",
            params.delta_small.abs() / params.omega_mag
        ));
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{basis_state, dressed_atomic_state};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn weak_params(configuration: Configuration, phi: f64) -> SystemParams {
        SystemParams::new(
            configuration,
            c(3e5, 0.0),
            c(3e5, 0.0),
            6e5,
            phi,
            3e6,
            0.0,
            6e5,
            3e6,
            0.0,
            0.0,
        )
        .unwrap()
    }

    fn strong_params(configuration: Configuration, phi: f64) -> SystemParams {
        SystemParams::new(
            configuration,
            c(3e5, 0.0),
            c(3e5, 0.0),
            3e6,
            phi,
            0.0,
            0.0,
            6e5,
            3e6,
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn coupling_magnitudes_match_closed_forms() {
        let weak = effective_couplings(&weak_params(Configuration::Ladder, PI / 2.0)).unwrap();
        assert!((weak.xi_i.norm() - 6e3).abs() / 6e3 < 1e-12);
        assert!((weak.xi_pm_approx().norm() - 1.5e4).abs() < 1e-9);
        // exact denominator 2(Delta - |Omega|) = 4.8e6
        assert!((weak.xi_pm.norm() - 9e10 / 4.8e6).abs() < 1e-9);
        assert!((weak.gamma_pm_approx().norm() - 1.5e4).abs() < 1e-9);
        // hopping and pair couplings have equal magnitudes for real lambdas
        assert!((weak.gamma_i.norm() - weak.xi_i.norm()).abs() < 1e-12);

        let strong = effective_couplings(&strong_params(Configuration::Ladder, PI / 2.0)).unwrap();
        assert!((strong.zeta_i.norm() - 3e4).abs() < 1e-9);
        assert!((strong.zeta_pm.norm() - 1.5e4).abs() < 1e-9);
        assert!((strong.chi - 3e4).abs() < 1e-9);
        assert!((strong.critical_ratio() - 1.0).abs() < 1e-12);
        assert!((strong.eta_i.norm() - 3e4).abs() < 1e-9);
        // both dressed-branch hopping coefficients reduce to +lambda^2/2|Omega| at Delta = 0
        assert!((strong.eta_pm_plus - strong.eta_pm_minus).norm() < 1e-12);

        // strong-vs-weak hopping enhancement |eta_i|/|gamma_i| = Delta^2/|Omega|^2
        let weak_puc = effective_couplings(&weak_params(Configuration::Lambda, 0.0)).unwrap();
        assert!(((weak_puc.eta_i.norm() / weak_puc.gamma_i.norm()) - 25.0).abs() < 1e-9);
    }

    #[test]
    fn printed_detuning_adjustments_and_static_values() {
        let params = weak_params(Configuration::Ladder, 0.0);
        let coup = effective_couplings(&params).unwrap();
        let sum = 2.0 * 9e10;
        assert!((coup.delta_i_adjust - (-sum / 3e6)).abs() < 1e-9);
        assert!((coup.delta_pm_adjust - sum / (2.0 * 2.4e6)).abs() < 1e-9);
        // the value that actually freezes the pair term is half the printed one
        let static_i = coup.static_detuning(Subspace::Intermediate, DressedSign::Plus, true);
        assert!((static_i - coup.delta_i_adjust / 2.0).abs() < 1e-9);
        let static_pm = coup.static_detuning(Subspace::DressedPair, DressedSign::Plus, true);
        let printed_approx = sum / (2.0 * 3e6);
        assert!((static_pm - printed_approx / 2.0).abs() < 1e-9);

        // hopping adjustments are printed at their static values already
        let lam_params = SystemParams::new(
            Configuration::Lambda,
            c(3e5, 0.0),
            c(2e5, 0.0),
            6e5,
            0.0,
            3e6,
            0.0,
            6e5,
            5e6,
            0.0,
            0.0,
        )
        .unwrap();
        let lam_coup = effective_couplings(&lam_params).unwrap();
        let diff = 9e10 - 4e10;
        assert!((lam_coup.delta_i_adjust - (-diff / 6e6)).abs() < 1e-9);
        let lam_static = lam_coup.static_detuning(Subspace::Intermediate, DressedSign::Plus, true);
        assert!((lam_static - lam_coup.delta_i_adjust).abs() < 1e-9);
        let lam_static_pm = lam_coup.static_detuning(Subspace::DressedPair, DressedSign::Plus, true);
        assert!((lam_static_pm - diff / (4.0 * 3e6)).abs() < 1e-9);
    }

    #[test]
    fn couplings_reject_degenerate_dressed_splitting() {
        let mut params = weak_params(Configuration::Ladder, 0.0);
        params.omega_mag = params.delta_cap;
        assert!(matches!(
            effective_couplings(&params),
            Err(CqedError::SingularParameter(_))
        ));
    }

    #[test]
    fn builders_produce_hermitian_operators() {
        let space = HilbertSpace::two_mode(3, 3);
        let params = weak_params(Configuration::Ladder, 0.9);
        let mut with_delta = params;
        with_delta.delta_small = 1.5e4;

        let hams: Vec<TimeDependentHamiltonian> = vec![
            build_exact_lab(&params, space).unwrap(),
            build_interaction_picture(&with_delta, space).unwrap(),
            build_effective_pdc(&with_delta, space, Regime::Weak, Subspace::Intermediate, true)
                .unwrap(),
            build_effective_pdc(&with_delta, space, Regime::Weak, Subspace::DressedPair, false)
                .unwrap(),
            build_effective_general(&with_delta, space).unwrap(),
        ];
        for h in &hams {
            for t in [0.0, 1.3e-6, 7.7e-6] {
                // evaluate() validates hermiticity internally
                h.evaluate(t).unwrap();
            }
        }

        let strong = strong_params(Configuration::Lambda, 0.3);
        let h_strong =
            build_effective_puc(&strong, space, Regime::Strong, Subspace::DressedPair, false)
                .unwrap();
        h_strong.evaluate(0.0).unwrap();
        assert!(h_strong.is_constant());
    }

    #[test]
    fn interaction_picture_matches_documented_structure_at_t0() {
        // at t = 0 and phi = 0 the families sum to
        // (lambda_a a (sigma_{i+} - sigma_{i-}) + lambda_b b (sigma_{+i} + sigma_{-i}))/sqrt(2) + h.c.
        let space = HilbertSpace::two_mode(2, 2);
        let params = weak_params(Configuration::Ladder, 0.0);
        let h0 = build_interaction_picture(&params, space)
            .unwrap()
            .evaluate(0.0)
            .unwrap();
        let a = lowering(space, Mode::A).unwrap();
        let b = lowering(space, Mode::B).unwrap();
        let sip = sigma_i_dressed(space, DressedSign::Plus, 0.0);
        let sim = sigma_i_dressed(space, DressedSign::Minus, 0.0);
        let root_half = 1.0 / 2f64.sqrt();
        let lam = c(3e5 * root_half, 0.0);
        let expected_half = SparseMatrix::linear_combination(
            space.dim(),
            &[
                (lam, &a.matmul(&sip)),
                (-lam, &a.matmul(&sim)),
                (lam, &b.matmul(&sip.dagger())),
                (lam, &b.matmul(&sim.dagger())),
            ],
        );
        let expected = expected_half.add(&expected_half.dagger());
        let defect = h0
            .matrix()
            .add(&expected.scaled(c(-1.0, 0.0)))
            .max_abs();
        assert!(defect < 1e-9, "structure defect {defect:.3e}");
    }

    #[test]
    fn dressed_block_matrix_elements_have_opposite_signs() {
        let space = HilbertSpace::two_mode(1, 1);
        let params = weak_params(Configuration::Ladder, PI / 2.0);
        let coup = effective_couplings(&params).unwrap();
        let h = build_effective_pdc(&params, space, Regime::Weak, Subspace::DressedPair, false)
            .unwrap()
            .evaluate(0.0)
            .unwrap();
        let plus_vac = dressed_atomic_state(space, DressedSign::Plus, PI / 2.0);
        let minus_vac = dressed_atomic_state(space, DressedSign::Minus, PI / 2.0);
        let plus_11 = StateHelper::with_fock(&plus_vac, space, 1, 1);
        let minus_11 = StateHelper::with_fock(&minus_vac, space, 1, 1);
        // <+,0,0|H|+,1,1> = -xi_+ and <-,0,0|H|-,1,1> = +xi_-
        let elem_plus = matrix_element(&h, &plus_vac, &plus_11);
        let elem_minus = matrix_element(&h, &minus_vac, &minus_11);
        assert!((elem_plus + coup.xi_pm_branch(DressedSign::Plus)).norm() < 1e-9);
        assert!((elem_minus - coup.xi_pm_branch(DressedSign::Minus)).norm() < 1e-9);
    }

    #[test]
    fn degenerate_pair_form_squeezes_a_single_mode() {
        let space = HilbertSpace::single_mode(6);
        // strong |i> block: static -(zeta a^2 + h.c.) with no Stark residue
        let params = strong_params(Configuration::Ladder, PI / 2.0);
        let h = build_degenerate_pair(&params, space, Regime::Strong, Subspace::Intermediate, true)
            .unwrap();
        assert!(h.is_constant());
        let h0 = h.constant().unwrap();
        let coup = effective_couplings(&params).unwrap();
        let i0 = basis_state(space, AtomLevel::I, 0, 0);
        let i2 = basis_state(space, AtomLevel::I, 2, 0);
        let elem = matrix_element(&h0, &i2, &i0);
        assert!((elem - (-coup.zeta_i).conj() * c(2.0f64.sqrt(), 0.0)).norm() < 1e-9);
        assert!(matrix_element(&h0, &i0, &i0).norm() < 1e-12);

        // weak dressed blocks go static at twice the two-mode detuning pick
        let mut weak = weak_params(Configuration::Ladder, PI / 2.0);
        let coup_w = effective_couplings(&weak).unwrap();
        weak.delta_small =
            2.0 * coup_w.static_detuning(Subspace::DressedPair, DressedSign::Plus, true);
        let hw =
            build_degenerate_pair(&weak, space, Regime::Weak, Subspace::DressedPair, true).unwrap();
        assert!(hw.is_constant());
        let hw0 = hw.constant().unwrap();
        let plus0 = dressed_atomic_state(space, DressedSign::Plus, PI / 2.0);
        let plus2 = StateHelper::with_fock(&plus0, space, 2, 0);
        let elem_p = matrix_element(&hw0, &plus2, &plus0);
        assert!((elem_p - (-coup_w.xi_pm_approx()).conj() * c(2.0f64.sqrt(), 0.0)).norm() < 1e-9);

        // two-mode spaces and the lambda configuration are rejected
        assert!(build_degenerate_pair(
            &weak,
            HilbertSpace::two_mode(2, 2),
            Regime::Weak,
            Subspace::DressedPair,
            true
        )
        .is_err());
        let lambda = weak_params(Configuration::Lambda, 0.0);
        assert!(
            build_degenerate_pair(&lambda, space, Regime::Weak, Subspace::Intermediate, true)
                .is_err()
        );
    }

    // shift the fock occupation of an atom-side superposition state
    struct StateHelper;
    impl StateHelper {
        fn with_fock(
            atom_state: &crate::fockspace::StateVector,
            space: HilbertSpace,
            n_a: usize,
            n_b: usize,
        ) -> crate::fockspace::StateVector {
            let mut amps = ndarray::Array1::zeros(space.dim());
            for atom in AtomLevel::ALL {
                let weight = atom_state.amplitude(atom, 0, 0);
                if weight != ZERO {
                    amps[space.index(atom, n_a, n_b)] = weight;
                }
            }
            crate::fockspace::StateVector::from_unnormalized(space, amps).unwrap()
        }
    }

    fn matrix_element(
        op: &OperatorMatrix,
        bra: &crate::fockspace::StateVector,
        ket: &crate::fockspace::StateVector,
    ) -> C64 {
        crate::fockspace::inner(bra.amplitudes(), op.apply(ket).view())
    }

    #[test]
    fn general_form_vacuum_shift_of_the_plus_block() {
        // <+,0,0|H|+,0,0> = -|lambda_b|^2 / 2(Delta - |Omega|)
        let space = HilbertSpace::two_mode(2, 2);
        let params = weak_params(Configuration::Ladder, 0.4);
        let h = build_effective_general(&params, space)
            .unwrap()
            .evaluate(0.0)
            .unwrap();
        let plus = dressed_atomic_state(space, DressedSign::Plus, 0.4);
        let expected = -9e10 / (2.0 * 2.4e6);
        let got = matrix_element(&h, &plus, &plus);
        assert!((got - c(expected, 0.0)).norm() < 1e-6 * expected.abs());

        // and the |i> block picks up the aa^t vacuum offset
        let i_vac = basis_state(space, AtomLevel::I, 0, 0);
        let den = 9e12 - 3.6e11;
        let expected_i = 3e6 * 9e10 / den;
        let got_i = matrix_element(&h, &i_vac, &i_vac);
        assert!((got_i - c(expected_i, 0.0)).norm() < 1e-6 * expected_i);
    }

    #[test]
    fn strong_dressed_blocks_keep_opposite_stark_shifts() {
        let space = HilbertSpace::two_mode(2, 2);
        let params = strong_params(Configuration::Ladder, PI / 2.0);
        let h = build_effective_pdc(&params, space, Regime::Strong, Subspace::DressedPair, false)
            .unwrap()
            .evaluate(0.0)
            .unwrap();
        let plus = StateHelper::with_fock(
            &dressed_atomic_state(space, DressedSign::Plus, PI / 2.0),
            space,
            1,
            0,
        );
        let minus = StateHelper::with_fock(
            &dressed_atomic_state(space, DressedSign::Minus, PI / 2.0),
            space,
            1,
            0,
        );
        // (|lambda_a|^2 n_a + |lambda_b|^2 (n_b + 1))/2|Omega| on |+>, negated on |->
        let expected = (9e10 + 9e10) / 6e6;
        let got_plus = matrix_element(&h, &plus, &plus);
        let got_minus = matrix_element(&h, &minus, &minus);
        assert!((got_plus - c(expected, 0.0)).norm() < 1e-6 * expected);
        assert!((got_minus + c(expected, 0.0)).norm() < 1e-6 * expected);
    }

    #[test]
    fn cross_interactions_conserve_the_right_photon_combination() {
        let space = HilbertSpace::two_mode(3, 3);
        let n_a = number_operator(space, Mode::A).unwrap().matrix().clone();
        let n_b = number_operator(space, Mode::B).unwrap().matrix().clone();

        let pdc = build_effective_pdc(
            &weak_params(Configuration::Ladder, 0.7),
            space,
            Regime::Weak,
            Subspace::Intermediate,
            false,
        )
        .unwrap()
        .evaluate(0.37e-5)
        .unwrap();
        // pair creation changes n_a - n_b by zero
        let diff = n_a.add(&n_b.scaled(c(-1.0, 0.0)));
        let comm = pdc.matrix().matmul(&diff).add(&diff.matmul(pdc.matrix()).scaled(c(-1.0, 0.0)));
        assert!(comm.max_abs() < 1e-9);

        let puc = build_effective_puc(
            &weak_params(Configuration::Lambda, 0.7),
            space,
            Regime::Weak,
            Subspace::DressedPair,
            false,
        )
        .unwrap()
        .evaluate(0.11e-5)
        .unwrap();
        let total = n_a.add(&n_b);
        let comm2 = puc.matrix().matmul(&total).add(&total.matmul(puc.matrix()).scaled(c(-1.0, 0.0)));
        assert!(comm2.max_abs() < 1e-9);
    }

    #[test]
    fn strong_regime_enforces_zero_drive_detuning() {
        let space = HilbertSpace::two_mode(2, 2);
        let mut params = strong_params(Configuration::Ladder, 0.0);
        params.delta_small = 1e3;
        assert!(build_effective_pdc(&params, space, Regime::Strong, Subspace::Intermediate, true)
            .is_err());
    }

    #[test]
    fn configuration_is_enforced_by_the_effective_builders() {
        let space = HilbertSpace::two_mode(2, 2);
        assert!(build_effective_pdc(
            &weak_params(Configuration::Lambda, 0.0),
            space,
            Regime::Weak,
            Subspace::Intermediate,
            true
        )
        .is_err());
        assert!(build_effective_puc(
            &weak_params(Configuration::Ladder, 0.0),
            space,
            Regime::Weak,
            Subspace::Intermediate,
            true
        )
        .is_err());
    }

    #[test]
    fn lab_frame_needs_two_modes_and_positive_mode_frequencies() {
        let params = weak_params(Configuration::Ladder, 0.0);
        assert!(build_exact_lab(&params, HilbertSpace::single_mode(3)).is_err());
        let mut bad = params;
        bad.omega_i = 1e9;
        assert!(build_exact_lab(&bad, HilbertSpace::two_mode(2, 2)).is_err());
    }

    #[test]
    fn quadratic_branch_form_matches_the_printed_structure() {
        let space = HilbertSpace::single_mode(4);
        let params = strong_params(Configuration::Ladder, PI / 2.0);
        let h = build_quadratic_cat(&params, space, DressedSign::Plus).unwrap();
        assert!(!h.is_constant());
        let coup = effective_couplings(&params).unwrap();
        let op0 = h.evaluate(0.0).unwrap();
        // diagonal: (omega0 + chi) n
        let one_photon = basis_state(space, AtomLevel::G, 1, 0);
        let got = matrix_element(&op0, &one_photon, &one_photon);
        assert!((got.re - (6e5 + coup.chi)).abs() < 1e-6);
        // off-diagonal: <2|zeta a^t a^t|0> = sqrt(2) zeta at t = 0
        let vac = basis_state(space, AtomLevel::G, 0, 0);
        let two_photon = basis_state(space, AtomLevel::G, 2, 0);
        let elem = matrix_element(&op0, &two_photon, &vac);
        assert!((elem - coup.zeta_pm * 2f64.sqrt()).norm() < 1e-9);
        // minus branch flips the Stark sign
        let h_minus = build_quadratic_cat(&params, space, DressedSign::Minus).unwrap();
        let op_minus = h_minus.evaluate(0.0).unwrap();
        let got_minus = matrix_element(&op_minus, &one_photon, &one_photon);
        assert!((got_minus.re - (6e5 - coup.chi)).abs() < 1e-6);
    }

    #[test]
    fn warnings_flag_stretched_hierarchies() {
        let mut params = weak_params(Configuration::Ladder, 0.0);
        assert!(regime_warnings(&params, Regime::Weak).is_empty());
        params.omega_mag = 2e6;
        assert!(!regime_warnings(&params, Regime::Weak).is_empty());
        let strong = strong_params(Configuration::Ladder, 0.0);
        assert!(regime_warnings(&strong, Regime::Strong).is_empty());
    }
}
