//! Composite Hilbert space for a driven three-level atom coupled to one or
//! two truncated bosonic modes, plus basis states and elementary operators.
//!
//! Basis ordering is fixed globally and every module relies on it: the atomic
//! index varies slowest, then mode a, then mode b, so |atom, n_a, n_b> lives
//! at flat index (atom*(n_max_a+1) + n_a)*(n_max_b+1) + n_b.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64 as C64;

use crate::error::{CqedError, Result};
use crate::linalg::SparseMatrix;

pub const ATOM_DIM: usize = 3;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Atomic levels: ground |g>, excited |e>, intermediate |i>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomLevel {
    G,
    E,
    I,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 3] = [AtomLevel::G, AtomLevel::E, AtomLevel::I];

    pub fn index(self) -> usize {
        match self {
            AtomLevel::G => 0,
            AtomLevel::E => 1,
            AtomLevel::I => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AtomLevel::G => "g",
            AtomLevel::E => "e",
            AtomLevel::I => "i",
        }
    }
}

/// Bosonic cavity modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    A,
    B,
}

/// Branch label for the dressed states |+> and |->.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DressedSign {
    Plus,
    Minus,
}

impl DressedSign {
    pub fn signum(self) -> f64 {
        match self {
            DressedSign::Plus => 1.0,
            DressedSign::Minus => -1.0,
        }
    }
}

/// Truncated composite space: 3-level atom tensor one or two Fock-truncated
/// modes. Mode b is absent in degenerate single-mode scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    n_max_a: usize,
    n_max_b: Option<usize>,
}

impl HilbertSpace {
    pub fn single_mode(n_max_a: usize) -> Self {
        assert!(n_max_a >= 1, "mode a cutoff must be at least 1");
        HilbertSpace {
            n_max_a,
            n_max_b: None,
        }
    }

    pub fn two_mode(n_max_a: usize, n_max_b: usize) -> Self {
        assert!(n_max_a >= 1, "mode a cutoff must be at least 1");
        assert!(n_max_b >= 1, "mode b cutoff must be at least 1");
        HilbertSpace {
            n_max_a,
            n_max_b: Some(n_max_b),
        }
    }

    pub fn has_mode_b(self) -> bool {
        self.n_max_b.is_some()
    }

    /// Fock cutoff of a mode; error when mode b is absent.
    pub fn n_max(self, mode: Mode) -> Result<usize> {
        match mode {
            Mode::A => Ok(self.n_max_a),
            Mode::B => self.n_max_b.ok_or_else(|| CqedError::DimensionMismatch {
                expected: 2,
                got: 1,
                context: "mode b requested on a single-mode space".into(),
            }),
        }
    }

    fn dim_a(self) -> usize {
        self.n_max_a + 1
    }

    fn dim_b(self) -> usize {
        self.n_max_b.map_or(1, |n| n + 1)
    }

    pub fn dim(self) -> usize {
        ATOM_DIM * self.dim_a() * self.dim_b()
    }

    pub fn index(self, atom: AtomLevel, n_a: usize, n_b: usize) -> usize {
        assert!(n_a <= self.n_max_a, "n_a = {n_a} beyond cutoff");
        assert!(n_b < self.dim_b(), "n_b = {n_b} beyond cutoff");
        (atom.index() * self.dim_a() + n_a) * self.dim_b() + n_b
    }

    pub fn unindex(self, idx: usize) -> (AtomLevel, usize, usize) {
        assert!(idx < self.dim(), "index {idx} outside space");
        let n_b = idx % self.dim_b();
        let rest = idx / self.dim_b();
        let n_a = rest % self.dim_a();
        let atom = AtomLevel::ALL[rest / self.dim_a()];
        (atom, n_a, n_b)
    }
}

/// Normalized pure state over a composite space.
#[derive(Debug, Clone)]
pub struct StateVector {
    space: HilbertSpace,
    amplitudes: Array1<C64>,
}

impl StateVector {
    /// Wrap amplitudes that are already normalized (within 1e-9).
    pub fn new(space: HilbertSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(CqedError::DimensionMismatch {
                expected: space.dim(),
                got: amplitudes.len(),
                context: "state amplitudes".into(),
            });
        }
        let norm = l2_norm(amplitudes.view());
        if (norm - 1.0).abs() > 1e-9 {
            return Err(CqedError::InvalidState(format!(
                "state norm {norm:.12} deviates from 1 by more than 1e-9"
            )));
        }
        Ok(StateVector { space, amplitudes })
    }

    /// Normalize arbitrary amplitudes; error on a (near-)zero vector.
    pub fn from_unnormalized(space: HilbertSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(CqedError::DimensionMismatch {
                expected: space.dim(),
                got: amplitudes.len(),
                context: "state amplitudes".into(),
            });
        }
        let norm = l2_norm(amplitudes.view());
        if norm < 1e-12 {
            return Err(CqedError::ZeroVector(
                "cannot normalize a zero-norm amplitude vector".into(),
            ));
        }
        let amplitudes = amplitudes.mapv(|v| v / norm);
        Ok(StateVector { space, amplitudes })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn amplitudes(&self) -> ArrayView1<'_, C64> {
        self.amplitudes.view()
    }

    pub fn amplitude(&self, atom: AtomLevel, n_a: usize, n_b: usize) -> C64 {
        self.amplitudes[self.space.index(atom, n_a, n_b)]
    }

    pub fn norm(&self) -> f64 {
        l2_norm(self.amplitudes.view())
    }

    /// Inner product <self|other>.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(CqedError::DimensionMismatch {
                expected: self.space.dim(),
                got: other.space.dim(),
                context: "inner product between different spaces".into(),
            });
        }
        Ok(inner(self.amplitudes.view(), other.amplitudes.view()))
    }

    /// Normalized linear combination of states on a shared space.
    pub fn superpose(terms: &[(C64, &StateVector)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| CqedError::ZeroVector("empty superposition".into()))?;
        let space = first.1.space;
        let mut acc: Array1<C64> = Array1::zeros(space.dim());
        for (coeff, state) in terms {
            if state.space != space {
                return Err(CqedError::DimensionMismatch {
                    expected: space.dim(),
                    got: state.space.dim(),
                    context: "superposition over different spaces".into(),
                });
            }
            acc.zip_mut_with(&state.amplitudes, |a, &s| *a += coeff * s);
        }
        StateVector::from_unnormalized(space, acc)
    }
}

pub fn inner(bra: ArrayView1<C64>, ket: ArrayView1<C64>) -> C64 {
    bra.iter().zip(ket.iter()).map(|(b, k)| b.conj() * k).sum()
}

pub fn l2_norm(v: ArrayView1<C64>) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Operator on the composite space, sparse-backed. The `hermitian` flag is a
/// verified promise, not a hint.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    space: HilbertSpace,
    matrix: SparseMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(space: HilbertSpace, matrix: SparseMatrix) -> Self {
        assert_eq!(matrix.dim(), space.dim(), "operator dimension mismatch");
        OperatorMatrix {
            space,
            matrix,
            hermitian: false,
        }
    }

    /// Wrap a matrix claimed Hermitian; the claim is checked against
    /// max|M - M^dagger| <= 1e-12 max|M|.
    pub fn new_hermitian(space: HilbertSpace, matrix: SparseMatrix) -> Result<Self> {
        assert_eq!(matrix.dim(), space.dim(), "operator dimension mismatch");
        let scale = matrix.max_abs().max(f64::MIN_POSITIVE);
        let defect = matrix.hermiticity_defect();
        if defect > 1e-12 * scale {
            return Err(CqedError::InvalidState(format!(
                "hermiticity defect {defect:.3e} exceeds 1e-12 x max|M| = {:.3e}",
                1e-12 * scale
            )));
        }
        Ok(OperatorMatrix {
            space,
            matrix,
            hermitian: true,
        })
    }

    pub fn identity(space: HilbertSpace) -> Self {
        OperatorMatrix {
            space,
            matrix: SparseMatrix::identity(space.dim()),
            hermitian: true,
        }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Apply to raw amplitudes; the result is generally unnormalized.
    pub fn apply(&self, state: &StateVector) -> Array1<C64> {
        self.matrix.matvec(state.amplitudes())
    }

    pub fn expectation(&self, state: &StateVector) -> C64 {
        inner(state.amplitudes(), self.apply(state).view())
    }

    pub fn dagger(&self) -> Self {
        OperatorMatrix {
            space: self.space,
            matrix: self.matrix.dagger(),
            hermitian: self.hermitian,
        }
    }

    pub fn scaled(&self, factor: C64) -> Self {
        OperatorMatrix {
            space: self.space,
            matrix: self.matrix.scaled(factor),
            hermitian: self.hermitian && factor.im == 0.0,
        }
    }

    pub fn add(&self, other: &OperatorMatrix) -> Self {
        assert_eq!(self.space, other.space, "operator space mismatch");
        OperatorMatrix {
            space: self.space,
            matrix: self.matrix.add(&other.matrix),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    /// Operator product self * other.
    pub fn compose(&self, other: &OperatorMatrix) -> Self {
        assert_eq!(self.space, other.space, "operator space mismatch");
        OperatorMatrix::new(self.space, self.matrix.matmul(&other.matrix))
    }
}

/// Truncated annihilation (or creation) operator of one mode, tensored with
/// identities on the other factors; <n-1|a|n> = sqrt(n).
pub fn ladder_operator(space: HilbertSpace, mode: Mode, dagger: bool) -> Result<OperatorMatrix> {
    space.n_max(mode)?;
    let mut triplets = Vec::with_capacity(space.dim());
    for atom in AtomLevel::ALL {
        for n_a in 0..=space.n_max_a {
            for n_b in 0..space.dim_b() {
                let n = match mode {
                    Mode::A => n_a,
                    Mode::B => n_b,
                };
                if n == 0 {
                    continue;
                }
                let col = space.index(atom, n_a, n_b);
                let row = match mode {
                    Mode::A => space.index(atom, n_a - 1, n_b),
                    Mode::B => space.index(atom, n_a, n_b - 1),
                };
                triplets.push((row, col, C64::new((n as f64).sqrt(), 0.0)));
            }
        }
    }
    let lowering = SparseMatrix::from_triplets(space.dim(), triplets);
    let matrix = if dagger { lowering.dagger() } else { lowering };
    Ok(OperatorMatrix::new(space, matrix))
}

/// Number operator of one mode.
pub fn number_operator(space: HilbertSpace, mode: Mode) -> Result<OperatorMatrix> {
    space.n_max(mode)?;
    let mut triplets = Vec::with_capacity(space.dim());
    for idx in 0..space.dim() {
        let (_, n_a, n_b) = space.unindex(idx);
        let n = match mode {
            Mode::A => n_a,
            Mode::B => n_b,
        };
        if n > 0 {
            triplets.push((idx, idx, C64::new(n as f64, 0.0)));
        }
    }
    OperatorMatrix::new_hermitian(space, SparseMatrix::from_triplets(space.dim(), triplets))
}

/// Atomic transition operator sigma_kl = |k><l| tensored with mode
/// identities.
pub fn atomic_projector(space: HilbertSpace, k: AtomLevel, l: AtomLevel) -> OperatorMatrix {
    let mut ket = [ZERO; 3];
    let mut bra = [ZERO; 3];
    ket[k.index()] = ONE;
    bra[l.index()] = ONE;
    atomic_outer(space, &ket, &bra)
}

/// General atomic outer product |ket><bra| tensored with mode identities,
/// with ket/bra given by their (g, e, i) amplitudes.
pub fn atomic_outer(space: HilbertSpace, ket: &[C64; 3], bra: &[C64; 3]) -> OperatorMatrix {
    let mut triplets = Vec::new();
    for (k, &kv) in ket.iter().enumerate() {
        if kv == ZERO {
            continue;
        }
        for (l, &bv) in bra.iter().enumerate() {
            if bv == ZERO {
                continue;
            }
            let val = kv * bv.conj();
            for n_a in 0..space.dim_a() {
                for n_b in 0..space.dim_b() {
                    let row = space.index(AtomLevel::ALL[k], n_a, n_b);
                    let col = space.index(AtomLevel::ALL[l], n_a, n_b);
                    triplets.push((row, col, val));
                }
            }
        }
    }
    OperatorMatrix::new(space, SparseMatrix::from_triplets(space.dim(), triplets))
}

/// Amplitudes (g, e, i) of the dressed state
/// |+-> = (+-e^{i phi/2}|g> + e^{-i phi/2}|e>)/sqrt(2).
pub fn dressed_amplitudes(sign: DressedSign, phi: f64) -> [C64; 3] {
    let half = C64::from_polar(1.0 / 2f64.sqrt(), phi / 2.0);
    let half_conj = C64::from_polar(1.0 / 2f64.sqrt(), -phi / 2.0);
    [half * sign.signum(), half_conj, ZERO]
}

/// Dressed atomic state tensored with mode vacua.
pub fn dressed_atomic_state(space: HilbertSpace, sign: DressedSign, phi: f64) -> StateVector {
    let amps = dressed_amplitudes(sign, phi);
    atom_state_with_vacuum(space, &amps)
}

/// Atom in the given superposition, both modes in vacuum.
pub fn atom_state_with_vacuum(space: HilbertSpace, atom_amps: &[C64; 3]) -> StateVector {
    let mut amplitudes = Array1::zeros(space.dim());
    for (k, &av) in atom_amps.iter().enumerate() {
        amplitudes[space.index(AtomLevel::ALL[k], 0, 0)] = av;
    }
    StateVector::from_unnormalized(space, amplitudes)
        .expect("atomic amplitudes must not all vanish")
}

/// Basis state |atom, n_a, n_b>.
pub fn basis_state(space: HilbertSpace, atom: AtomLevel, n_a: usize, n_b: usize) -> StateVector {
    let mut amplitudes = Array1::zeros(space.dim());
    amplitudes[space.index(atom, n_a, n_b)] = ONE;
    StateVector { space, amplitudes }
}

/// Product state from per-factor amplitude vectors; shorter vectors are
/// zero-padded up to the cutoff.
pub fn product_state(
    space: HilbertSpace,
    atom_amps: &[C64; 3],
    mode_a: &[C64],
    mode_b: &[C64],
) -> Result<StateVector> {
    if mode_a.len() > space.dim_a() || mode_b.len() > space.dim_b() {
        return Err(CqedError::DimensionMismatch {
            expected: space.dim_a(),
            got: mode_a.len().max(mode_b.len()),
            context: "mode amplitude vector longer than cutoff".into(),
        });
    }
    let mut amplitudes = Array1::zeros(space.dim());
    for (k, &av) in atom_amps.iter().enumerate() {
        if av == ZERO {
            continue;
        }
        for (n_a, &ca) in mode_a.iter().enumerate() {
            if ca == ZERO {
                continue;
            }
            for (n_b, &cb) in mode_b.iter().enumerate() {
                amplitudes[space.index(AtomLevel::ALL[k], n_a, n_b)] = av * ca * cb;
            }
        }
    }
    StateVector::from_unnormalized(space, amplitudes)
}

/// Truncated coherent amplitudes alpha^n/sqrt(n!) e^{-|alpha|^2/2}; errors
/// when the Poisson tail beyond n_max exceeds 1e-6, naming the smallest
/// adequate cutoff.
pub fn coherent_amplitudes(alpha: C64, n_max: usize) -> Result<Vec<C64>> {
    let needed = coherent_cutoff(alpha.norm(), 1e-6);
    if n_max < needed {
        return Err(CqedError::CutoffTooSmall {
            needed,
            got: n_max,
            context: format!("coherent state with |alpha| = {:.6}", alpha.norm()),
        });
    }
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps.push(c);
    for n in 1..=n_max {
        c *= alpha / C64::new((n as f64).sqrt(), 0.0);
        amps.push(c);
    }
    Ok(amps)
}

/// Coherent state |alpha> in the given mode, vacuum in the other, atom in
/// |g>; renormalized after truncation.
pub fn coherent_state(space: HilbertSpace, mode: Mode, alpha: C64) -> Result<StateVector> {
    let n_max = space.n_max(mode)?;
    let amps = coherent_amplitudes(alpha, n_max)?;
    let vac = [ONE];
    let atom = [ONE, ZERO, ZERO];
    match mode {
        Mode::A => product_state(space, &atom, &amps, &vac),
        Mode::B => product_state(space, &atom, &vac, &amps),
    }
}

/// Smallest cutoff whose Poisson tail sum_{n>n_max} e^{-mu} mu^n/n! is at
/// most `tail`, with mu = |alpha|^2.
pub fn coherent_cutoff(alpha_abs: f64, tail: f64) -> usize {
    let mu = alpha_abs * alpha_abs;
    if mu == 0.0 {
        return 1;
    }
    let mut term = (-mu).exp();
    let mut cumulative = term;
    let mut n = 0usize;
    while 1.0 - cumulative > tail && n < 100_000 {
        n += 1;
        term *= mu / n as f64;
        cumulative += term;
    }
    n.max(1)
}

/// Smallest cutoff with two-mode-squeezed population tail
/// tanh(r)^{2(n_max+1)} <= tail.
pub fn two_mode_squeezed_cutoff(r: f64, tail: f64) -> usize {
    let q = r.tanh().powi(2);
    if q == 0.0 {
        return 1;
    }
    let mut n = 1usize;
    while q.powi(n as i32 + 1) > tail && n < 100_000 {
        n += 1;
    }
    n
}

/// Smallest even cutoff with single-mode squeezed-vacuum population tail at
/// most `tail`.
pub fn squeezed_vacuum_cutoff(r: f64, tail: f64) -> usize {
    let t2 = r.tanh().powi(2);
    if t2 == 0.0 {
        return 2;
    }
    // p_{2m} = (2m-1)!!/(2m)!! tanh^{2m} / cosh
    let mut p = 1.0 / r.cosh();
    let mut cumulative = p;
    let mut m = 0usize;
    while 1.0 - cumulative > tail && m < 200_000 {
        m += 1;
        p *= t2 * (2.0 * m as f64 - 1.0) / (2.0 * m as f64);
        cumulative += p;
    }
    (2 * m).max(2)
}

/// Dense density operator with verified physicality.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    /// Validate Hermiticity (1e-12), unit trace (1e-9), and eigenvalue floor
    /// (-1e-9; checked only for dim <= 128 where the eigensolve is cheap).
    pub fn new(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        Self::with_tolerances(space, matrix, 1e-12, 1e-9, -1e-9)
    }

    pub(crate) fn with_tolerances(
        space: HilbertSpace,
        matrix: Array2<C64>,
        herm_tol: f64,
        trace_tol: f64,
        eig_floor: f64,
    ) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(CqedError::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
                context: "density matrix".into(),
            });
        }
        let scale = matrix.iter().map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max);
        let mut herm_defect: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                herm_defect = herm_defect.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if herm_defect > herm_tol * scale {
            return Err(CqedError::InvalidState(format!(
                "density matrix hermiticity defect {herm_defect:.3e}"
            )));
        }
        let trace: C64 = (0..dim).map(|i| matrix[(i, i)]).sum();
        if (trace.re - 1.0).abs() > trace_tol || trace.im.abs() > trace_tol {
            return Err(CqedError::InvalidState(format!(
                "density matrix trace {:.12} deviates from 1",
                trace.re
            )));
        }
        if dim <= 128 {
            let (evals, _) = crate::linalg::eigh_hermitian(&matrix)?;
            if evals[0] < eig_floor {
                return Err(CqedError::InvalidState(format!(
                    "density matrix eigenvalue {:.3e} below floor {eig_floor:.1e}",
                    evals[0]
                )));
            }
        }
        Ok(DensityMatrix { space, matrix })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let dim = state.space.dim();
        let amps = state.amplitudes();
        let matrix = Array2::from_shape_fn((dim, dim), |(i, j)| amps[i] * amps[j].conj());
        DensityMatrix {
            space: state.space,
            matrix,
        }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        (0..self.space.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn purity(&self) -> f64 {
        let m = crate::linalg::matmul_dense(&self.matrix, &self.matrix);
        (0..self.space.dim()).map(|i| m[(i, i)].re).sum()
    }

    /// tr(rho M).
    pub fn expectation(&self, op: &OperatorMatrix) -> C64 {
        assert_eq!(op.space(), self.space, "operator space mismatch");
        let prod = op.matrix().mul_dense(&self.matrix);
        (0..self.space.dim()).map(|i| prod[(i, i)]).sum()
    }
}
