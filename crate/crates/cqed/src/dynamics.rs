//! Time evolution: a Krylov propagator for constant Hamiltonians, an
//! adaptive Runge-Kutta integrator for oscillating ones, and a dense
//! Lindblad solver for open-system checks.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2};
use num_complex::Complex64 as C64;

use crate::error::{CqedError, Result};
use crate::fockspace::{
    l2_norm, DensityMatrix, DressedSign, HilbertSpace, OperatorMatrix, StateVector,
};
use crate::hamiltonians::{build_quadratic_cat, SystemParams, TimeDependentHamiltonian};
use crate::linalg::{expm_dense, SparseMatrix};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Time window, sampling density, and error control for an evolution run.
#[derive(Debug, Clone, Copy)]
pub struct EvolutionSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub sample_count: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl EvolutionSpec {
    pub fn new(t_start: f64, t_end: f64, sample_count: usize) -> Self {
        EvolutionSpec {
            t_start,
            t_end,
            sample_count,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 4_000_000,
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.t_end > self.t_start) {
            bad.push("t_end must exceed t_start".to_string());
        }
        if self.sample_count < 2 {
            bad.push("sample_count must be at least 2".to_string());
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            bad.push("tolerances must be positive".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CqedError::InvalidConfig { fields: bad })
        }
    }

    /// Evenly spaced sample times with exact endpoints.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.sample_count;
        let dt = (self.t_end - self.t_start) / (n as f64 - 1.0);
        let mut times: Vec<f64> = (0..n).map(|k| self.t_start + dt * k as f64).collect();
        times[n - 1] = self.t_end;
        times
    }
}

/// Sampled evolution result. `max_defect` is the largest deviation of the
/// conserved quantity (norm for pure states, trace for density matrices)
/// observed at the sample times before renormalization.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    times: Vec<f64>,
    states: Vec<S>,
    max_defect: f64,
}

impl<S> Trajectory<S> {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &S {
        self.states.last().expect("trajectory holds >= 2 samples")
    }

    pub fn max_defect(&self) -> f64 {
        self.max_defect
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &S)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

// ---------------------------------------------------------------------------
// Krylov propagator for constant Hermitian generators

const KRYLOV_DIM: usize = 30;
const KRYLOV_TOL: f64 = 1e-12;
const NORM_CONTRACT: f64 = 1e-10;

struct KrylovBasis {
    vectors: Vec<Array1<C64>>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    // beta that would extend the basis; zero on invariant-subspace breakdown
    beta_next: f64,
}

fn build_krylov(mat: &SparseMatrix, start: &Array1<C64>, m_max: usize, scale: f64) -> KrylovBasis {
    let mut vectors: Vec<Array1<C64>> = Vec::with_capacity(m_max);
    let mut alphas = Vec::with_capacity(m_max);
    let mut betas = Vec::with_capacity(m_max);
    let norm0 = l2_norm(start.view());
    vectors.push(start.mapv(|x| x / norm0));
    let breakdown = 1e-13 * scale.max(1e-300);
    let mut beta_next = 0.0;

    for j in 0..m_max {
        let mut w = mat.matvec(vectors[j].view());
        if j > 0 {
            let beta_prev = C64::new(betas[j - 1], 0.0);
            let prev = vectors[j - 1].view();
            ndarray::Zip::from(&mut w).and(prev).for_each(|wi, vi| {
                *wi -= beta_prev * vi;
            });
        }
        let alpha = crate::fockspace::inner(vectors[j].view(), w.view()).re;
        let alpha_c = C64::new(alpha, 0.0);
        ndarray::Zip::from(&mut w)
            .and(vectors[j].view())
            .for_each(|wi, vi| {
                *wi -= alpha_c * vi;
            });
        // one full reorthogonalization pass keeps the basis clean over long runs
        for v in &vectors {
            let proj = crate::fockspace::inner(v.view(), w.view());
            if proj != ZERO {
                ndarray::Zip::from(&mut w).and(v.view()).for_each(|wi, vi| {
                    *wi -= proj * vi;
                });
            }
        }
        alphas.push(alpha);
        let beta = l2_norm(w.view());
        if beta <= breakdown {
            beta_next = 0.0;
            break;
        }
        if j + 1 == m_max {
            beta_next = beta;
            break;
        }
        betas.push(beta);
        let inv = C64::new(1.0 / beta, 0.0);
        vectors.push(w.mapv(|x| x * inv));
    }
    KrylovBasis {
        vectors,
        alphas,
        betas,
        beta_next,
    }
}

// first column of exp(-i T dt) for the tridiagonal projection T
fn krylov_exp_column(basis: &KrylovBasis, dt: f64) -> Result<Vec<C64>> {
    let m = basis.vectors.len();
    let mut small = Array2::<C64>::zeros((m, m));
    for j in 0..m {
        small[[j, j]] = C64::new(0.0, -basis.alphas[j] * dt);
        if j + 1 < m {
            let off = C64::new(0.0, -basis.betas[j] * dt);
            small[[j, j + 1]] = off;
            small[[j + 1, j]] = off;
        }
    }
    let e = expm_dense(&small)?;
    Ok(e.column(0).to_vec())
}

/// Apply exp(-i H t) to a state via adaptively restarted Lanczos iterations.
/// Works for negative t; the generator must be Hermitian.
pub fn propagate_const(h: &OperatorMatrix, psi: &StateVector, t: f64) -> Result<StateVector> {
    if h.space() != psi.space() {
        return Err(CqedError::DimensionMismatch {
            expected: h.space().dim(),
            got: psi.space().dim(),
            context: "propagator state".into(),
        });
    }
    if !h.is_hermitian() {
        return Err(CqedError::InvalidState(
            "propagation needs a Hermitian generator".into(),
        ));
    }
    if t == 0.0 {
        return Ok(psi.clone());
    }
    let mat = h.matrix();
    let dim = psi.space().dim();
    let m_max = KRYLOV_DIM.min(dim);
    let total = t.abs();
    let sign = t.signum();
    let scale = mat.norm_inf();

    let mut y = psi.amplitudes().to_owned();
    let mut done = 0.0_f64;
    // seed the chunk length from the local energy scale of the state
    let local = l2_norm(mat.matvec(y.view()).view());
    let mut dt = if local > 0.0 {
        (10.0 / local).min(total)
    } else {
        total
    };
    let mut chunks = 0usize;

    while total - done > total * 1e-14 {
        chunks += 1;
        if chunks > 200_000 {
            return Err(CqedError::Convergence {
                achieved: done * sign,
                requested: t,
                context: "krylov propagation stalled".into(),
            });
        }
        dt = dt.min(total - done);
        let basis = build_krylov(mat, &y, m_max, scale);
        let m = basis.vectors.len();
        // shrink the step on the same basis until the residual estimate fits
        let mut advanced = false;
        for _ in 0..60 {
            let col = krylov_exp_column(&basis, sign * dt)?;
            let est = basis.beta_next * col[m - 1].norm() * dt;
            let budget = KRYLOV_TOL * (dt / total).max(1e-16);
            if est <= budget || basis.beta_next == 0.0 {
                let mut next = Array1::<C64>::zeros(dim);
                for (c, v) in col.iter().zip(basis.vectors.iter()) {
                    if *c != ZERO {
                        ndarray::Zip::from(&mut next).and(v.view()).for_each(|ni, vi| {
                            *ni += c * vi;
                        });
                    }
                }
                let norm0 = l2_norm(y.view());
                y = next.mapv(|x| x * norm0);
                done += dt;
                dt *= 1.4;
                advanced = true;
                break;
            }
            dt *= 0.5;
            if dt < total * 1e-13 {
                break;
            }
        }
        if !advanced {
            return Err(CqedError::Convergence {
                achieved: done * sign,
                requested: t,
                context: "krylov step size underflow".into(),
            });
        }
    }

    let defect = (l2_norm(y.view()) - 1.0).abs();
    if defect > NORM_CONTRACT {
        return Err(CqedError::Convergence {
            achieved: defect,
            requested: NORM_CONTRACT,
            context: "propagated state norm drifted".into(),
        });
    }
    StateVector::from_unnormalized(psi.space(), y)
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) adaptive integrator

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus the embedded fourth-order ones
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

struct Dp54 {
    k: Vec<Array1<C64>>,
    y_stage: Array1<C64>,
    y_err: Array1<C64>,
    h: f64,
    fresh: bool,
    steps: usize,
}

impl Dp54 {
    fn new(dim: usize, h_init: f64) -> Self {
        Dp54 {
            k: (0..7).map(|_| Array1::zeros(dim)).collect(),
            y_stage: Array1::zeros(dim),
            y_err: Array1::zeros(dim),
            h: h_init,
            fresh: true,
            steps: 0,
        }
    }

    /// Advance y from t0 to t1, calling rhs(t, y, out) for the derivative.
    fn march<F>(
        &mut self,
        rhs: &mut F,
        y: &mut Array1<C64>,
        t0: f64,
        t1: f64,
        rel_tol: f64,
        abs_tol: f64,
        max_steps: usize,
    ) -> Result<()>
    where
        F: FnMut(f64, ArrayView1<C64>, &mut Array1<C64>),
    {
        let span = t1 - t0;
        let mut t = t0;
        if self.fresh {
            rhs(t, y.view(), &mut self.k[0]);
            self.fresh = false;
        }
        while t < t1 {
            if self.steps >= max_steps {
                return Err(CqedError::Convergence {
                    achieved: t,
                    requested: t1,
                    context: "integrator step budget exhausted".into(),
                });
            }
            self.steps += 1;
            let h = self.h.min(t1 - t);
            if h < span * 1e-14 {
                return Err(CqedError::Convergence {
                    achieved: t,
                    requested: t1,
                    context: "integrator step size underflow".into(),
                });
            }

            for s in 1..7 {
                self.y_stage.assign(y);
                for (j, &a) in DP_A[s - 1].iter().enumerate().take(s) {
                    if a != 0.0 {
                        self.y_stage.scaled_add(C64::new(h * a, 0.0), &self.k[j]);
                    }
                }
                let (head, tail) = self.k.split_at_mut(s);
                let _ = head;
                rhs(t + DP_C[s] * h, self.y_stage.view(), &mut tail[0]);
            }
            // stage 7 was evaluated at the fifth-order solution itself
            self.y_err.fill(ZERO);
            for (j, &e) in DP_E.iter().enumerate() {
                if e != 0.0 {
                    self.y_err.scaled_add(C64::new(h * e, 0.0), &self.k[j]);
                }
            }
            let y_new_norm = l2_norm(self.y_stage.view());
            let scale = abs_tol + rel_tol * l2_norm(y.view()).max(y_new_norm);
            let err = l2_norm(self.y_err.view()) / scale;

            if err <= 1.0 {
                t += h;
                y.assign(&self.y_stage);
                self.k.swap(0, 6);
            }
            let factor = if err < 1e-10 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            self.h = h * factor;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Schroedinger evolution

/// Evolve a pure state under a (generally time-dependent) Hamiltonian,
/// sampling at the times of `spec`. Constant Hamiltonians take the Krylov
/// path; oscillating ones are integrated adaptively.
pub fn evolve_schrodinger(
    h: &TimeDependentHamiltonian,
    psi0: &StateVector,
    spec: &EvolutionSpec,
) -> Result<Trajectory<StateVector>> {
    spec.validate()?;
    if h.space() != psi0.space() {
        return Err(CqedError::DimensionMismatch {
            expected: h.space().dim(),
            got: psi0.space().dim(),
            context: "evolution initial state".into(),
        });
    }
    let times = spec.sample_times();

    if h.is_constant() {
        let op = h.constant()?;
        let mut states = Vec::with_capacity(times.len());
        states.push(psi0.clone());
        for w in times.windows(2) {
            let next = propagate_const(&op, states.last().unwrap(), w[1] - w[0])?;
            states.push(next);
        }
        return Ok(Trajectory {
            times,
            states,
            max_defect: 0.0,
        });
    }

    let dim = h.space().dim();
    let minus_i = C64::new(0.0, -1.0);
    let mut rhs = |t: f64, y: ArrayView1<C64>, out: &mut Array1<C64>| {
        out.fill(ZERO);
        h.apply_into(t, y, minus_i, out);
    };

    let norm_bound = h.norm_bound().max(f64::MIN_POSITIVE);
    let h_init = ((spec.t_end - spec.t_start) / 100.0).min(0.5 / norm_bound);
    let mut stepper = Dp54::new(dim, h_init);
    let mut y = psi0.amplitudes().to_owned();
    let mut states = Vec::with_capacity(times.len());
    let mut max_defect = 0.0_f64;
    states.push(psi0.clone());

    for w in times.windows(2) {
        stepper.march(
            &mut rhs,
            &mut y,
            w[0],
            w[1],
            spec.rel_tol,
            spec.abs_tol,
            spec.max_steps,
        )?;
        let defect = (l2_norm(y.view()) - 1.0).abs();
        max_defect = max_defect.max(defect);
        if defect > 1e-6 {
            return Err(CqedError::Convergence {
                achieved: defect,
                requested: 1e-6,
                context: "state norm drifted during integration".into(),
            });
        }
        states.push(StateVector::from_unnormalized(h.space(), y.clone())?);
    }
    Ok(Trajectory {
        times,
        states,
        max_defect,
    })
}

// ---------------------------------------------------------------------------
// Lindblad evolution

/// One zero-temperature decay channel with rate gamma: the dissipator
/// gamma (L rho L^t - {L^t L, rho}/2).
#[derive(Debug, Clone)]
pub struct CollapseOp {
    pub rate: f64,
    pub op: OperatorMatrix,
}

/// Evolve a density matrix under H plus decay channels, sampling at the
/// times of `spec`. Dense representation; intended for modest dimensions.
pub fn evolve_lindblad(
    h: &TimeDependentHamiltonian,
    collapse: &[CollapseOp],
    rho0: &DensityMatrix,
    spec: &EvolutionSpec,
) -> Result<Trajectory<DensityMatrix>> {
    spec.validate()?;
    let space = h.space();
    if space != rho0.space() {
        return Err(CqedError::DimensionMismatch {
            expected: space.dim(),
            got: rho0.space().dim(),
            context: "lindblad initial state".into(),
        });
    }
    for c in collapse {
        if c.op.space() != space {
            return Err(CqedError::DimensionMismatch {
                expected: space.dim(),
                got: c.op.space().dim(),
                context: "collapse operator".into(),
            });
        }
        if c.rate < 0.0 {
            return Err(CqedError::InvalidConfig {
                fields: vec!["collapse rates must be nonnegative".into()],
            });
        }
    }
    let dim = space.dim();
    let channels: Vec<(f64, SparseMatrix, SparseMatrix)> = collapse
        .iter()
        .filter(|c| c.rate > 0.0)
        .map(|c| {
            let l = c.op.matrix().clone();
            let ldag_l = l.dagger().matmul(&l);
            (c.rate, l, ldag_l)
        })
        .collect();
    let h_static = if h.is_constant() {
        Some(h.assemble(0.0))
    } else {
        None
    };

    let minus_i = C64::new(0.0, -1.0);
    let mut rhs = |t: f64, y: ArrayView1<C64>, out: &mut Array1<C64>| {
        let rho = ArrayView2::from_shape((dim, dim), y.as_slice().unwrap()).unwrap();
        let rho_owned = rho.to_owned();
        let assembled;
        let hmat = match &h_static {
            Some(m) => m,
            None => {
                assembled = h.assemble(t);
                &assembled
            }
        };
        let h_rho = hmat.mul_dense(&rho_owned);
        let rho_h = hmat.mul_dense_left(&rho_owned);
        {
            let mut out2 =
                ArrayViewMut2::from_shape((dim, dim), out.as_slice_mut().unwrap()).unwrap();
            ndarray::Zip::from(&mut out2)
                .and(&h_rho)
                .and(&rho_h)
                .for_each(|o, &hr, &rh| {
                    *o = minus_i * (hr - rh);
                });
            for (rate, l, ldag_l) in &channels {
                let rho_ldag = l.dagger().mul_dense_left(&rho_owned);
                let jump = l.mul_dense(&rho_ldag);
                let acl = ldag_l.mul_dense(&rho_owned);
                let acr = ldag_l.mul_dense_left(&rho_owned);
                let r = C64::new(*rate, 0.0);
                let half = C64::new(0.5, 0.0);
                ndarray::Zip::from(&mut out2)
                    .and(&jump)
                    .and(&acl)
                    .and(&acr)
                    .for_each(|o, &j, &al, &ar| {
                        *o += r * (j - half * (al + ar));
                    });
            }
        }
    };

    let times = spec.sample_times();
    let h_init = (spec.t_end - spec.t_start) / 200.0;
    let mut stepper = Dp54::new(dim * dim, h_init);
    let mut y = Array1::from_iter(rho0.matrix().iter().copied());
    let mut states = Vec::with_capacity(times.len());
    let mut max_defect = 0.0_f64;
    states.push(rho0.clone());

    for w in times.windows(2) {
        stepper.march(
            &mut rhs,
            &mut y,
            w[0],
            w[1],
            spec.rel_tol,
            spec.abs_tol,
            spec.max_steps,
        )?;
        let rho = Array2::from_shape_vec((dim, dim), y.to_vec()).expect("square buffer");
        // integration preserves Hermiticity up to rounding; restore it exactly
        let sym = (&rho + &rho.t().mapv(|v| v.conj())).mapv(|v| 0.5 * v);
        let trace: C64 = (0..dim).map(|j| sym[[j, j]]).sum();
        let defect = (trace - C64::new(1.0, 0.0)).norm();
        max_defect = max_defect.max(defect);
        if defect > 1e-7 {
            return Err(CqedError::Convergence {
                achieved: defect,
                requested: 1e-7,
                context: "density matrix trace drifted during integration".into(),
            });
        }
        states.push(DensityMatrix::with_tolerances(
            space, sym, 1e-9, 1e-7, -1e-7,
        )?);
    }
    Ok(Trajectory {
        times,
        states,
        max_defect,
    })
}

// ---------------------------------------------------------------------------
// branch evolution for the quadratic single-mode dynamics

/// Evolve the same initial state under both dressed-branch quadratic
/// Hamiltonians for a duration tau, returning the (+, -) branch states.
pub fn evolve_cat_branches(
    params: &SystemParams,
    space: HilbertSpace,
    psi0: &StateVector,
    tau: f64,
) -> Result<(StateVector, StateVector)> {
    if !(tau > 0.0) {
        return Err(CqedError::InvalidConfig {
            fields: vec!["branch evolution needs tau > 0".into()],
        });
    }
    let mut branches = Vec::with_capacity(2);
    for sign in [DressedSign::Plus, DressedSign::Minus] {
        let h = build_quadratic_cat(params, space, sign)?;
        let spec = EvolutionSpec::new(0.0, tau, 2);
        let traj = evolve_schrodinger(&h, psi0, &spec)?;
        branches.push(traj.states().last().expect("two samples").clone());
    }
    let minus = branches.pop().expect("minus branch");
    let plus = branches.pop().expect("plus branch");
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{
        atomic_outer, atomic_projector, basis_state, coherent_state, dressed_amplitudes,
        ladder_operator, number_operator, AtomLevel, Mode,
    };
    use crate::hamiltonians::{
        build_effective_general, build_effective_pdc, build_exact_lab, build_interaction_picture,
        rotating_frame_generator, to_rotating_frame, Configuration, Regime, Subspace,
    };
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn weak_params(phi: f64, delta_small: f64) -> SystemParams {
        SystemParams::new(
            Configuration::Ladder,
            c(3e5, 0.0),
            c(3e5, 0.0),
            6e5,
            phi,
            3e6,
            delta_small,
            6e5,
            3e6,
            0.0,
            0.0,
        )
        .unwrap()
    }

    fn strong_params(phi: f64) -> SystemParams {
        SystemParams::new(
            Configuration::Ladder,
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

    fn mixed_state(space: HilbertSpace) -> StateVector {
        let g = basis_state(space, AtomLevel::G, 1, 1);
        let i = basis_state(space, AtomLevel::I, 0, 0);
        let e = basis_state(space, AtomLevel::E, 0, 1);
        let w = c(1.0 / 3f64.sqrt(), 0.0);
        StateVector::superpose(&[(w, &g), (w, &i), (w, &e)]).unwrap()
    }

    fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
        a.inner(b).unwrap().norm_sqr()
    }

    #[test]
    fn krylov_propagator_matches_dense_exponential() {
        let space = HilbertSpace::two_mode(2, 2);
        let params = weak_params(0.7, 1.1e4);
        let op = build_effective_general(&params, space)
            .unwrap()
            .evaluate(0.3e-5)
            .unwrap();
        let psi0 = mixed_state(space);
        let t = 2.3e-6;
        let got = propagate_const(&op, &psi0, t).unwrap();

        let scaled = op.matrix().to_dense().mapv(|v| v * c(0.0, -t));
        let u = expm_dense(&scaled).unwrap();
        let expected = u.dot(&psi0.amplitudes().to_owned());
        let diff: f64 = got
            .amplitudes()
            .iter()
            .zip(expected.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9, "propagator deviates by {diff:.3e}");
    }

    #[test]
    fn krylov_flows_compose_and_reverse() {
        let space = HilbertSpace::two_mode(2, 2);
        let params = weak_params(0.3, 0.0);
        let op = to_rotating_frame(&params, space).unwrap();
        let psi0 = mixed_state(space);
        let t1 = 1.7e-6;
        let t2 = 3.9e-6;
        let chained = propagate_const(&op, &propagate_const(&op, &psi0, t1).unwrap(), t2).unwrap();
        let direct = propagate_const(&op, &psi0, t1 + t2).unwrap();
        assert!(fidelity(&chained, &direct) > 1.0 - 1e-10);

        let back = propagate_const(&op, &direct, -(t1 + t2)).unwrap();
        assert!(fidelity(&back, &psi0) > 1.0 - 1e-10);
    }

    #[test]
    fn pair_interaction_builds_two_mode_squeezing_amplitudes() {
        // drive phase pi/2 turns the intermediate-block pair term into a
        // squeeze with positive-real pair amplitudes
        let space = HilbertSpace::two_mode(21, 21);
        let params = strong_params(PI / 2.0);
        let h = build_effective_pdc(&params, space, Regime::Strong, Subspace::Intermediate, true)
            .unwrap();
        let op = h.constant().unwrap();
        let tau = 0.75 / 3e4;
        let psi0 = basis_state(space, AtomLevel::I, 0, 0);
        let out = propagate_const(&op, &psi0, tau).unwrap();
        let c0 = out.amplitude(AtomLevel::I, 0, 0);
        let c1 = out.amplitude(AtomLevel::I, 1, 1);
        assert!((c0 - c(0.772_389_673_857, 0.0)).norm() < 1e-6, "c0 = {c0}");
        assert!((c1 - c(0.490_582_492_185, 0.0)).norm() < 1e-6, "c1 = {c1}");
    }

    #[test]
    fn rabi_oscillations_at_the_bare_resonance() {
        // no drive, no b coupling, zero detuning: lab dynamics reduces to
        // vacuum Rabi flopping between |g,n> and |i,n-1> at 2 lambda sqrt(n)
        let params = SystemParams::new(
            Configuration::Ladder,
            c(2e5, 0.0),
            ZERO,
            0.0,
            0.0,
            0.0,
            0.0,
            6e5,
            3e5,
            0.0,
            0.0,
        )
        .unwrap();
        let space = HilbertSpace::two_mode(3, 1);
        let h = build_exact_lab(&params, space).unwrap();
        assert!(h.is_constant());
        for n in [1usize, 2] {
            let psi0 = basis_state(space, AtomLevel::G, n, 0);
            let spec = EvolutionSpec::new(0.0, 8e-6, 9);
            let traj = evolve_schrodinger(&h, &psi0, &spec).unwrap();
            for (t, state) in traj.iter() {
                let p_i: f64 = state
                    .amplitude(AtomLevel::I, n - 1, 0)
                    .norm_sqr();
                let expected = ((n as f64).sqrt() * 2e5 * t).sin().powi(2);
                assert!(
                    (p_i - expected).abs() < 1e-7,
                    "n = {n}, t = {t:.2e}: {p_i} vs {expected}"
                );
            }
        }
    }

    // H0 of the interaction picture: detuned mode energies plus the dressed
    // atomic splitting
    fn dressed_frame_generator(params: &SystemParams, space: HilbertSpace) -> OperatorMatrix {
        let omega = params.drive_frequency();
        let delta_a = params.omega_a() - omega / 2.0;
        let delta_b = params.omega_b() - omega / 2.0;
        let plus = dressed_amplitudes(DressedSign::Plus, params.phi);
        let minus = dressed_amplitudes(DressedSign::Minus, params.phi);
        let mat = SparseMatrix::linear_combination(
            space.dim(),
            &[
                (
                    c(delta_a, 0.0),
                    number_operator(space, Mode::A).unwrap().matrix(),
                ),
                (
                    c(delta_b, 0.0),
                    number_operator(space, Mode::B).unwrap().matrix(),
                ),
                (
                    c(params.omega_i, 0.0),
                    atomic_projector(space, AtomLevel::I, AtomLevel::I).matrix(),
                ),
                (
                    c(params.omega_mag, 0.0),
                    atomic_outer(space, &plus, &plus).matrix(),
                ),
                (
                    c(-params.omega_mag, 0.0),
                    atomic_outer(space, &minus, &minus).matrix(),
                ),
            ],
        );
        OperatorMatrix::new_hermitian(space, mat).unwrap()
    }

    #[test]
    fn interaction_picture_agrees_with_the_rotating_frame() {
        let space = HilbertSpace::two_mode(3, 3);
        let params = weak_params(0.9, 0.0);
        let psi0 = mixed_state(space);
        let tau = 2e-5;

        let h_rot = to_rotating_frame(&params, space).unwrap();
        let reference = propagate_const(&h_rot, &psi0, tau).unwrap();

        let h_ip = build_interaction_picture(&params, space).unwrap();
        let spec = EvolutionSpec::new(0.0, tau, 5);
        let traj = evolve_schrodinger(&h_ip, &psi0, &spec).unwrap();
        assert!(traj.max_defect() < 1e-6);
        // undo the frame: psi_rot(t) = e^{-i H0 t} psi_ip(t)
        let h0 = dressed_frame_generator(&params, space);
        let mapped = propagate_const(&h0, traj.last(), tau).unwrap();
        let fid = fidelity(&mapped, &reference);
        assert!(fid > 1.0 - 1e-6, "frame equivalence fidelity {fid}");
    }

    #[test]
    fn lab_frame_chain_matches_the_rotating_frame() {
        let space = HilbertSpace::two_mode(3, 3);
        let params = weak_params(1.3, 2e4);
        let psi0 = mixed_state(space);
        let tau = 1e-5;

        let h_rot = to_rotating_frame(&params, space).unwrap();
        let rotating = propagate_const(&h_rot, &psi0, tau).unwrap();

        let h_lab = build_exact_lab(&params, space).unwrap();
        let spec = EvolutionSpec::new(0.0, tau, 3);
        let traj = evolve_schrodinger(&h_lab, &psi0, &spec).unwrap();
        // psi_lab(t) = e^{-i omega t K} psi_rot(t)
        let k = rotating_frame_generator(&params, space).unwrap();
        let mapped = propagate_const(&k, &rotating, params.drive_frequency() * tau).unwrap();
        let fid = fidelity(traj.last(), &mapped);
        assert!(fid > 1.0 - 1e-8, "lab chain fidelity {fid}");
    }

    #[test]
    fn step_budget_exhaustion_reports_convergence() {
        let space = HilbertSpace::two_mode(2, 2);
        let params = weak_params(0.0, 0.0);
        let h = build_interaction_picture(&params, space).unwrap();
        let psi0 = basis_state(space, AtomLevel::I, 1, 1);
        let mut spec = EvolutionSpec::new(0.0, 1e-4, 3);
        spec.max_steps = 5;
        match evolve_schrodinger(&h, &psi0, &spec) {
            Err(CqedError::Convergence { .. }) => {}
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn evolution_spec_rejects_bad_windows() {
        let space = HilbertSpace::single_mode(2);
        let params = strong_params(0.0);
        let h = build_quadratic_cat(&params, space, DressedSign::Plus).unwrap();
        let psi0 = basis_state(space, AtomLevel::G, 0, 0);
        let bad = EvolutionSpec::new(1.0, 0.5, 3);
        assert!(matches!(
            evolve_schrodinger(&h, &psi0, &bad),
            Err(CqedError::InvalidConfig { .. })
        ));
        let one_sample = EvolutionSpec::new(0.0, 1e-5, 1);
        assert!(evolve_schrodinger(&h, &psi0, &one_sample).is_err());
    }

    #[test]
    fn damped_cavity_decays_at_the_exact_rate() {
        let space = HilbertSpace::single_mode(12);
        let h = TimeDependentHamiltonian::new(space);
        let a = ladder_operator(space, Mode::A, false).unwrap();
        let gamma = 2e4;
        let channels = [CollapseOp {
            rate: gamma,
            op: a,
        }];
        let spec = EvolutionSpec::new(0.0, 5e-5, 6);

        // single excitation: population e^{-gamma t}
        let rho0 = DensityMatrix::from_pure(&basis_state(space, AtomLevel::G, 1, 0));
        let traj = evolve_lindblad(&h, &channels, &rho0, &spec).unwrap();
        assert!(traj.max_defect() < 1e-8, "trace defect {}", traj.max_defect());
        for (t, rho) in traj.iter() {
            let idx = space.index(AtomLevel::G, 1, 0);
            let p1 = rho.matrix()[[idx, idx]].re;
            let expected = (-gamma * t).exp();
            assert!((p1 - expected).abs() < 1e-8, "p1 = {p1} vs {expected}");
        }

        // coherent state: mean occupation |alpha|^2 e^{-gamma t}
        let rho0 = DensityMatrix::from_pure(&coherent_state(space, Mode::A, c(1.0, 0.0)).unwrap());
        let n_op = number_operator(space, Mode::A).unwrap();
        let traj = evolve_lindblad(&h, &channels, &rho0, &spec).unwrap();
        for (t, rho) in traj.iter() {
            let n_mean = rho.expectation(&n_op).re;
            assert!((n_mean - (-gamma * t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn lindblad_without_channels_matches_pure_evolution() {
        let space = HilbertSpace::two_mode(8, 8);
        let params = strong_params(PI / 2.0);
        let h = build_effective_pdc(&params, space, Regime::Strong, Subspace::Intermediate, true)
            .unwrap();
        let psi0 = basis_state(space, AtomLevel::I, 0, 0);
        let tau = 0.3 / 3e4;
        let spec = EvolutionSpec::new(0.0, tau, 3);

        let pure = evolve_schrodinger(&h, &psi0, &spec).unwrap();
        let rho0 = DensityMatrix::from_pure(&psi0);
        let open = evolve_lindblad(&h, &[], &rho0, &spec).unwrap();
        assert!(open.max_defect() < 1e-7);

        let psi_end = pure.last();
        let rho_end = open.last();
        let mut overlap = ZERO;
        let amps = psi_end.amplitudes();
        for r in 0..space.dim() {
            for col in 0..space.dim() {
                overlap += amps[r].conj() * rho_end.matrix()[[r, col]] * amps[col];
            }
        }
        assert!(overlap.re > 1.0 - 1e-7);
    }

    #[test]
    fn uncoupled_branches_rotate_coherent_states() {
        // lambda_b = 0 removes the squeeze; each branch rotates the mode at
        // omega0 +- chi
        let params = SystemParams::new(
            Configuration::Ladder,
            c(3e5, 0.0),
            ZERO,
            3e6,
            0.0,
            0.0,
            0.0,
            6e5,
            3e6,
            0.0,
            0.0,
        )
        .unwrap();
        let space = HilbertSpace::single_mode(16);
        let alpha = c(1.0, 0.0);
        let psi0 = coherent_state(space, Mode::A, alpha).unwrap();
        let tau = 5e-5;
        let chi = 9e10 / 6e6;
        let (plus, minus) = evolve_cat_branches(&params, space, &psi0, tau).unwrap();

        let expect_plus = coherent_state(
            space,
            Mode::A,
            alpha * C64::from_polar(1.0, -(6e5 + chi) * tau),
        )
        .unwrap();
        let expect_minus = coherent_state(
            space,
            Mode::A,
            alpha * C64::from_polar(1.0, -(6e5 - chi) * tau),
        )
        .unwrap();
        assert!(fidelity(&plus, &expect_plus) > 1.0 - 1e-6);
        assert!(fidelity(&minus, &expect_minus) > 1.0 - 1e-6);
    }
}
