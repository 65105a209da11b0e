//! Reference states and figures of merit: squeezed/pair-correlated closed
//! forms, quadrature statistics, EPR correlation variances, and the scalar
//! quality measures reported by the scenario runner.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{CqedError, Result};
use crate::fockspace::{
    self, coherent_amplitudes, ladder_operator, two_mode_squeezed_cutoff, AtomLevel, DressedSign,
    HilbertSpace, Mode, StateVector,
};

/// Photon-number parity sector of a two-branch superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Mode and quadrature angle for a variance request. Angle 0 is the
/// position-like quadrature (a + a^dag)/2, pi/2 the momentum-like one.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub mode: Mode,
    pub angle: f64,
}

/// Figures of merit attached to a scenario result. Every field is optional;
/// a scenario fills in whichever measures its output state supports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeritReport {
    pub epr_sum_variance: Option<f64>,
    pub epr_quality: Option<f64>,
    pub squeeze_variance: Option<f64>,
    pub squeeze_factor_r: Option<f64>,
    pub overlap: Option<C64>,
}

// ---------------------------------------------------------------------------
// reference states

/// Two-mode squeezed vacuum with amplitudes (s tanh r)^n / cosh r on the
/// double-occupancy ladder |n, n>, s = +/-1, atom left in the ground level.
/// The cutoff must leave an amplitude tail tanh(r)^{n_max+1} <= 1e-8.
pub fn two_mode_squeezed_vacuum(r: f64, sign: DressedSign, n_max: usize) -> Result<StateVector> {
    if !r.is_finite() || r < 0.0 {
        return Err(CqedError::InvalidState(format!(
            "two-mode squeeze factor must be finite and nonnegative, got {r}"
        )));
    }
    let t = r.tanh();
    if t.powi(n_max as i32 + 1) > 1e-8 {
        return Err(CqedError::CutoffTooSmall {
            needed: two_mode_squeezed_cutoff(r, 1e-16),
            got: n_max,
            context: format!("two-mode squeezed vacuum at r = {r}"),
        });
    }
    let space = HilbertSpace::two_mode(n_max, n_max);
    let mut amps = Array1::zeros(space.dim());
    let mut c = 1.0 / r.cosh();
    for n in 0..=n_max {
        amps[space.index(AtomLevel::G, n, n)] = C64::new(c, 0.0);
        c *= sign.signum() * t;
    }
    StateVector::from_unnormalized(space, amps)
}

/// Single-mode squeezed vacuum whose minimum-variance quadrature sits at
/// `angle`: amplitudes (-e^{2i angle} tanh r)^m sqrt((2m)!)/(2^m m!) on |2m>,
/// normalised by sqrt(cosh r). Spectator atom in the ground level.
pub fn squeezed_vacuum(r: f64, angle: f64, n_max: usize) -> Result<StateVector> {
    if !r.is_finite() || r < 0.0 {
        return Err(CqedError::InvalidState(format!(
            "squeeze factor must be finite and nonnegative, got {r}"
        )));
    }
    let needed = fockspace::squeezed_vacuum_cutoff(r, 1e-14);
    if n_max < needed {
        return Err(CqedError::CutoffTooSmall {
            needed,
            got: n_max,
            context: format!("squeezed vacuum at r = {r}"),
        });
    }
    let space = HilbertSpace::single_mode(n_max);
    let mut amps = Array1::zeros(space.dim());
    let step = -C64::from_polar(r.tanh(), 2.0 * angle);
    // c_{2m+2}/c_{2m} = step * sqrt((2m+1)(2m+2)) / (2(m+1))
    let mut c = C64::new(1.0 / r.cosh().sqrt(), 0.0);
    let mut m = 0usize;
    loop {
        amps[space.index(AtomLevel::G, 2 * m, 0)] = c;
        if 2 * (m + 1) > n_max {
            break;
        }
        let tm = 2.0 * m as f64;
        c *= step * ((tm + 1.0) * (tm + 2.0)).sqrt() / (tm + 2.0);
        m += 1;
    }
    StateVector::from_unnormalized(space, amps)
}

/// Normalised sum (even) or difference (odd) of the two opposite-sign
/// two-mode squeezed vacua, which keeps only the even or odd rungs of the
/// |n, n> ladder. The odd combination vanishes at r = 0.
pub fn even_odd_epr(r: f64, parity: Parity, n_max: usize) -> Result<StateVector> {
    let plus = two_mode_squeezed_vacuum(r, DressedSign::Plus, n_max)?;
    let minus = two_mode_squeezed_vacuum(r, DressedSign::Minus, n_max)?;
    let relative = match parity {
        Parity::Even => C64::new(1.0, 0.0),
        Parity::Odd => C64::new(-1.0, 0.0),
    };
    StateVector::superpose(&[(C64::new(1.0, 0.0), &plus), (relative, &minus)])
}

/// Normalised e^{-i phase} |beta, -alpha> +/- e^{+i phase} |-beta, alpha>
/// over two modes, atom in the ground level.
pub fn entangled_coherent_state(
    alpha: C64,
    beta: C64,
    phase: f64,
    sign: DressedSign,
    n_max: usize,
) -> Result<StateVector> {
    let space = HilbertSpace::two_mode(n_max, n_max);
    let ca = coherent_amplitudes(beta, n_max)?;
    let cb = coherent_amplitudes(-alpha, n_max)?;
    let da = coherent_amplitudes(-beta, n_max)?;
    let db = coherent_amplitudes(alpha, n_max)?;
    let front = C64::from_polar(1.0, -phase);
    let back = C64::from_polar(1.0, phase) * sign.signum();
    let mut amps = Array1::zeros(space.dim());
    for n in 0..=n_max {
        for m in 0..=n_max {
            amps[space.index(AtomLevel::G, n, m)] = front * ca[n] * cb[m] + back * da[n] * db[m];
        }
    }
    StateVector::from_unnormalized(space, amps)
}

// ---------------------------------------------------------------------------
// quadrature statistics

struct ModeMoments {
    mean: C64,    // <a>
    mean_sq: C64, // <a^2>
    occupation: f64,
}

/// Lowering-operator moments of one mode. Everything downstream is written
/// in terms of these, so no matrix element ever reaches past the cutoff.
fn mode_moments(state: &StateVector, mode: Mode) -> Result<(ModeMoments, Array1<C64>)> {
    let a = ladder_operator(state.space(), mode, false)?;
    let lowered = a.apply(state);
    let twice = a.matrix().matvec(lowered.view());
    let psi = state.amplitudes();
    let moments = ModeMoments {
        mean: fockspace::inner(psi, lowered.view()),
        mean_sq: fockspace::inner(psi, twice.view()),
        occupation: lowered.iter().map(|z| z.norm_sqr()).sum(),
    };
    Ok((moments, lowered))
}

fn quadrature_stats(m: &ModeMoments, angle: f64) -> (f64, f64) {
    let rot = C64::from_polar(1.0, -angle);
    let mean = (rot * m.mean).re;
    let raw_sq = (2.0 * (rot * rot * m.mean_sq).re + 2.0 * m.occupation + 1.0) / 4.0;
    (mean, raw_sq)
}

/// Mean-subtracted variance of X_theta = (a e^{-i theta} + a^dag e^{i theta})/2.
pub fn quadrature_variance(state: &StateVector, spec: QuadratureSpec) -> Result<f64> {
    let (m, _) = mode_moments(state, spec.mode)?;
    let (mean, raw_sq) = quadrature_stats(&m, spec.angle);
    Ok(raw_sq - mean * mean)
}

/// Angle of the minimum-variance quadrature and that variance, both
/// mean-subtracted. With w = <a^2> - <a>^2 the optimum sits at
/// (arg w + pi)/2 and reaches [1 + 2(<n> - |<a>|^2) - 2|w|]/4; a state with
/// w = 0 has no preferred angle and reports angle 0.
pub fn optimal_squeezing(state: &StateVector, mode: Mode) -> Result<(f64, f64)> {
    let (m, _) = mode_moments(state, mode)?;
    let w = m.mean_sq - m.mean * m.mean;
    let centered_n = m.occupation - m.mean.norm_sqr();
    let variance = (1.0 + 2.0 * centered_n - 2.0 * w.norm()) / 4.0;
    if w.norm() < 1e-14 {
        return Ok((0.0, variance));
    }
    let angle = (w.arg() + std::f64::consts::PI) / 2.0;
    Ok((angle.rem_euclid(std::f64::consts::PI), variance))
}

/// Squeeze factor r with variance e^{-2r}/4; nonpositive variances map to
/// infinity.
pub fn squeeze_factor_from_variance(variance: f64) -> f64 {
    if variance <= 0.0 {
        return f64::INFINITY;
    }
    -0.5 * (4.0 * variance).ln()
}

/// Squeezing below the vacuum quadrature variance 1/4, in percent, clipped
/// to [0, 100].
pub fn squeezing_percent(variance: f64) -> f64 {
    (100.0 * (1.0 - 4.0 * variance)).clamp(0.0, 100.0)
}

// ---------------------------------------------------------------------------
// EPR correlations

fn epr_cross_moments(state: &StateVector) -> Result<(ModeMoments, ModeMoments, C64, C64)> {
    if !state.space().has_mode_b() {
        return Err(CqedError::InvalidState(
            "EPR correlation variances need a two-mode state".into(),
        ));
    }
    let (ma, lowered_a) = mode_moments(state, Mode::A)?;
    let (mb, lowered_b) = mode_moments(state, Mode::B)?;
    let a = ladder_operator(state.space(), Mode::A, false)?;
    let ab = a.matrix().matvec(lowered_b.view());
    let pair = fockspace::inner(state.amplitudes(), ab.view()); // <ab>
    let hop = fockspace::inner(lowered_b.view(), lowered_a.view()); // <a b^dag>
    Ok((ma, mb, pair, hop))
}

/// Raw second moments <(x_a - x_b)^2> and <(p_a + p_b)^2> of the joint
/// quadratures, without mean subtraction; each equals 1/2 on vacuum.
pub fn epr_pair_variances(state: &StateVector) -> Result<(f64, f64)> {
    let (ma, mb, pair, hop) = epr_cross_moments(state)?;
    let (_, xa_sq) = quadrature_stats(&ma, 0.0);
    let (_, xb_sq) = quadrature_stats(&mb, 0.0);
    let (_, pa_sq) = quadrature_stats(&ma, std::f64::consts::FRAC_PI_2);
    let (_, pb_sq) = quadrature_stats(&mb, std::f64::consts::FRAC_PI_2);
    let xx = (pair.re + hop.re) / 2.0;
    let pp = (hop.re - pair.re) / 2.0;
    Ok((xa_sq + xb_sq - 2.0 * xx, pa_sq + pb_sq + 2.0 * pp))
}

/// Total EPR correlation variance <(x_a - x_b)^2> + <(p_a + p_b)^2>, raw
/// moments: 1 on vacuum, e^{-2r} on a two-mode squeezed vacuum.
pub fn epr_sum_variance(state: &StateVector) -> Result<f64> {
    let (ma, mb, pair, _) = epr_cross_moments(state)?;
    Ok(ma.occupation + mb.occupation + 1.0 - 2.0 * pair.re)
}

/// EPR quality 1 - e^{-2r} of an ideal pair-correlated state with squeeze
/// factor r: the fractional reduction of the correlation variance below
/// vacuum.
pub fn epr_quality(r: f64) -> f64 {
    1.0 - (-2.0 * r).exp()
}

// ---------------------------------------------------------------------------
// scalar closed forms

/// Squeeze factor arcsinh(2 |zeta| tau) reached by the critical quadratic
/// branch after time tau.
pub fn cat_squeeze_factor(zeta_mag: f64, tau: f64) -> f64 {
    (2.0 * zeta_mag * tau).asinh()
}

/// Pump-depleted squeeze factor and steady quadrature variance for pair
/// generation at rate |zeta| against mode damping gamma_a, with the readout
/// channel decaying at gamma_c over the same window:
/// r = 2|zeta| (1 - e^{-gamma_a tau}) / gamma_a and
/// Var = [1 - (1 - e^{-2r}) e^{-gamma_c tau}]/4.
pub fn dissipative_squeezing(
    zeta_mag: f64,
    tau: f64,
    gamma_a: f64,
    gamma_c: f64,
) -> Result<(f64, f64)> {
    if zeta_mag < 0.0 || tau < 0.0 || gamma_a < 0.0 || gamma_c < 0.0 {
        return Err(CqedError::InvalidState(
            "dissipative squeezing arguments must be nonnegative".into(),
        ));
    }
    let r = if gamma_a == 0.0 {
        2.0 * zeta_mag * tau
    } else {
        2.0 * zeta_mag * (1.0 - (-gamma_a * tau).exp()) / gamma_a
    };
    let variance = (1.0 - (1.0 - (-2.0 * r).exp()) * (-gamma_c * tau).exp()) / 4.0;
    Ok((r, variance))
}

/// |<a|b>|^2 between two normalised states on the same space.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Expectation of the photon-number parity (-1)^n in one mode.
pub fn mode_parity(state: &StateVector, mode: Mode) -> Result<f64> {
    let space = state.space();
    let _ = space.n_max(mode)?;
    let mut total = 0.0;
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        let (_, n_a, n_b) = space.unindex(idx);
        let n = match mode {
            Mode::A => n_a,
            Mode::B => n_b,
        };
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * amp.norm_sqr();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{basis_state, coherent_cutoff, coherent_state, product_state};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const ZERO: C64 = C64::new(0.0, 0.0);

    const ONE: C64 = C64::new(1.0, 0.0);

    #[test]
    fn pair_state_matches_its_closed_form_variances() {
        let state = two_mode_squeezed_vacuum(0.75, DressedSign::Plus, 48).unwrap();
        assert_abs_diff_eq!(
            epr_sum_variance(&state).unwrap(),
            0.223_130_160_148_429_82,
            epsilon = 1e-9
        );
        let (vx, vp) = epr_pair_variances(&state).unwrap();
        assert_abs_diff_eq!(vx, vp, epsilon = 1e-12);
        assert_abs_diff_eq!(vx + vp, 0.223_130_160_148_429_82, epsilon = 1e-9);

        // opposite-sign branches overlap as 1/cosh(2r)
        let minus = two_mode_squeezed_vacuum(0.75, DressedSign::Minus, 48).unwrap();
        let overlap = state.inner(&minus).unwrap();
        assert_abs_diff_eq!(overlap.re, 0.425_096_034_942_280_5, epsilon = 1e-12);
        assert_abs_diff_eq!(overlap.im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            fidelity(&state, &minus).unwrap(),
            0.180_706_638_923_648_55,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pair_state_rejects_a_cutoff_that_clips_the_tail() {
        let err = two_mode_squeezed_vacuum(0.75, DressedSign::Plus, 10).unwrap_err();
        match err {
            CqedError::CutoffTooSmall { needed, got, .. } => {
                assert_eq!(got, 10);
                assert!(needed > 10);
            }
            other => panic!("expected CutoffTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn vacuum_has_unit_epr_variance() {
        let state = basis_state(HilbertSpace::two_mode(4, 4), AtomLevel::G, 0, 0);
        assert_abs_diff_eq!(epr_sum_variance(&state).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn single_mode_states_refuse_epr_measures() {
        let state = basis_state(HilbertSpace::single_mode(4), AtomLevel::G, 0, 0);
        assert!(matches!(
            epr_sum_variance(&state),
            Err(CqedError::InvalidState(_))
        ));
    }

    #[test]
    fn squeezed_vacuum_variances_follow_the_squeeze_axis() {
        let n_max = fockspace::squeezed_vacuum_cutoff(1.0, 1e-14);
        let state = squeezed_vacuum(1.0, std::f64::consts::FRAC_PI_2, n_max).unwrap();
        let squeezed = quadrature_variance(
            &state,
            QuadratureSpec {
                mode: Mode::A,
                angle: std::f64::consts::FRAC_PI_2,
            },
        )
        .unwrap();
        let stretched = quadrature_variance(
            &state,
            QuadratureSpec {
                mode: Mode::A,
                angle: 0.0,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(squeezed, 0.033_833_820_809_153_176, epsilon = 1e-8);
        assert_abs_diff_eq!(stretched, 1.847_264_024_732_662_6, epsilon = 1e-6);

        let (angle, var_min) = optimal_squeezing(&state, Mode::A).unwrap();
        assert_abs_diff_eq!(angle, std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        assert_abs_diff_eq!(var_min, squeezed, epsilon = 1e-10);
        assert_abs_diff_eq!(
            squeeze_factor_from_variance(var_min),
            1.0,
            epsilon = 1e-7
        );
    }

    #[test]
    fn coherent_states_keep_the_vacuum_variance_everywhere() {
        let alpha = C64::new(1.3, 0.4);
        let n_max = coherent_cutoff(alpha.norm(), 1e-12) + 4;
        let state = coherent_state(HilbertSpace::single_mode(n_max), Mode::A, alpha).unwrap();
        for angle in [0.0, 0.7, std::f64::consts::FRAC_PI_2, 2.9] {
            let var = quadrature_variance(
                &state,
                QuadratureSpec {
                    mode: Mode::A,
                    angle,
                },
            )
            .unwrap();
            assert_abs_diff_eq!(var, 0.25, epsilon = 1e-6);
        }
        let (_, var_min) = optimal_squeezing(&state, Mode::A).unwrap();
        assert_abs_diff_eq!(var_min, 0.25, epsilon = 1e-6);
        assert_abs_diff_eq!(squeezing_percent(var_min), 0.0, epsilon = 1e-3);
    }

    #[test]
    fn parity_sectors_come_out_sharp_and_orthogonal() {
        let even = even_odd_epr(0.7, Parity::Even, 40).unwrap();
        let odd = even_odd_epr(0.7, Parity::Odd, 40).unwrap();
        assert_abs_diff_eq!(mode_parity(&even, Mode::A).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mode_parity(&odd, Mode::A).unwrap(), -1.0, epsilon = 1e-12);
        assert!(even.inner(&odd).unwrap().norm() < 1e-12);
        assert!(matches!(
            even_odd_epr(0.0, Parity::Odd, 4),
            Err(CqedError::ZeroVector(_))
        ));
    }

    #[test]
    fn entangled_coherent_state_overlaps_its_first_branch() {
        let ecs = entangled_coherent_state(ONE, ONE, 0.0, DressedSign::Plus, 14).unwrap();
        let space = HilbertSpace::two_mode(14, 14);
        let branch = product_state(
            space,
            &[ONE, ZERO, ZERO],
            &coherent_amplitudes(ONE, 14).unwrap(),
            &coherent_amplitudes(-ONE, 14).unwrap(),
        )
        .unwrap();
        // |<beta,-alpha | ecs>|^2 = (1 + e^{-2|a|^2 - 2|b|^2})/2 at alpha = beta = 1
        assert_abs_diff_eq!(
            fidelity(&ecs, &branch).unwrap(),
            0.509_157_819_444_367_1,
            epsilon = 1e-9
        );
    }

    #[test]
    fn scalar_closed_forms_match_frozen_values() {
        assert_abs_diff_eq!(epr_quality(0.75), 0.776_869_839_851_570_2, epsilon = 1e-15);
        assert_abs_diff_eq!(
            cat_squeeze_factor(1.5e4, 5e-5),
            1.194_763_217_287_109_4,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            squeezing_percent((-2.0f64).exp() / 4.0),
            86.466_471_676_338_73,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(squeezing_percent(0.4), 0.0, epsilon = 0.0);

        let (r, var) = dissipative_squeezing(3e4, 5e-5, 5e3, 1e3).unwrap();
        assert_abs_diff_eq!(r, 2.654_390_603_143_141_5, epsilon = 1e-9);
        assert_abs_diff_eq!(var, 1.336_930_363_365_010_4e-2, epsilon = 1e-12);

        // lossless mode limit
        let (r0, _) = dissipative_squeezing(3e4, 5e-5, 0.0, 1e3).unwrap();
        assert_abs_diff_eq!(r0, 3.0, epsilon = 0.0);
    }

    fn amplitude_vec(dim: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn pair_variance_decays_exponentially(r in 0.05f64..1.0) {
            let n_max = two_mode_squeezed_cutoff(r, 1e-20);
            let state = two_mode_squeezed_vacuum(r, DressedSign::Plus, n_max).unwrap();
            let var = epr_sum_variance(&state).unwrap();
            prop_assert!((var - (-2.0 * r).exp()).abs() < 1e-6);
        }

        #[test]
        fn quadrature_uncertainty_product_is_bounded_below(amps in amplitude_vec(18)) {
            let space = HilbertSpace::single_mode(5);
            let raw: Array1<C64> = amps.iter().map(|&(re, im)| C64::new(re, im)).collect();
            prop_assume!(crate::fockspace::l2_norm(raw.view()) > 1e-3);
            let state = StateVector::from_unnormalized(space, raw).unwrap();
            let vx = quadrature_variance(&state, QuadratureSpec { mode: Mode::A, angle: 0.0 }).unwrap();
            let vp = quadrature_variance(&state, QuadratureSpec { mode: Mode::A, angle: std::f64::consts::FRAC_PI_2 }).unwrap();
            prop_assert!(vx * vp >= 1.0 / 16.0 - 1e-9);
        }

        #[test]
        fn quality_grows_with_the_squeeze_factor(r1 in 0.0f64..5.0, r2 in 0.0f64..5.0) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            prop_assert!(epr_quality(lo) <= epr_quality(hi));
            prop_assert!(epr_quality(lo) >= 0.0 && epr_quality(hi) < 1.0);
        }

        #[test]
        fn squeeze_factor_inverts_the_variance_map(r in 0.05f64..2.0) {
            let var = (-2.0 * r).exp() / 4.0;
            prop_assert!((squeeze_factor_from_variance(var) - r).abs() < 1e-9);
        }
    }
}
