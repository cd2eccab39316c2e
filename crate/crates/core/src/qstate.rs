//! Dense state vectors and operators over small labeled tensor-product spaces.
//!
//! A [`Space`] is an ordered list of named factors, each either an electron
//! spin or a single photon restricted to a declared list of modes. Basis
//! indices follow Kronecker order: the first factor is the most significant
//! digit. States may be sub-normalized; their squared norm is the probability
//! of the event that produced them, and renormalization is always explicit.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

/// Largest joint dimension a [`Space`] may have.
pub const MAX_DIMENSION: usize = 1 << 20;

const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A 2×2 single-qubit gate, row-major.
pub type Gate2 = [[C64; 2]; 2];

pub mod gates {
    //! Named single-qubit gates. Spin basis order is (↑, ↓).
    use super::{c, Gate2, FRAC_1_SQRT_2};

    pub const IDENTITY: Gate2 = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
    pub const HADAMARD: Gate2 = [
        [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)],
        [c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)],
    ];
    pub const PAULI_X: Gate2 = [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
    pub const PAULI_Y: Gate2 = [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
    pub const PAULI_Z: Gate2 = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const ALL: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

/// Circular polarization of a photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    R,
    L,
}

/// Propagation direction relative to the spin quantization axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhotonMode {
    pub polarization: Polarization,
    pub direction: Direction,
}

impl PhotonMode {
    pub const R_DOWN: PhotonMode = PhotonMode::new(Polarization::R, Direction::Down);
    pub const L_UP: PhotonMode = PhotonMode::new(Polarization::L, Direction::Up);
    pub const R_UP: PhotonMode = PhotonMode::new(Polarization::R, Direction::Up);
    pub const L_DOWN: PhotonMode = PhotonMode::new(Polarization::L, Direction::Down);

    /// Full mode order of a photon factor. The first two modes form the
    /// compact basis used by the parity-check circuit.
    pub const ALL: [PhotonMode; 4] = [Self::R_DOWN, Self::L_UP, Self::R_UP, Self::L_DOWN];
    pub const COMPACT: [PhotonMode; 2] = [Self::R_DOWN, Self::L_UP];

    pub const fn new(polarization: Polarization, direction: Direction) -> Self {
        PhotonMode {
            polarization,
            direction,
        }
    }

    /// The mode a photon leaves in when the cavity reflects it: both the
    /// polarization label and the direction flip.
    pub fn reflected(self) -> PhotonMode {
        PhotonMode::new(
            match self.polarization {
                Polarization::R => Polarization::L,
                Polarization::L => Polarization::R,
            },
            match self.direction {
                Direction::Up => Direction::Down,
                Direction::Down => Direction::Up,
            },
        )
    }
}

impl fmt::Display for PhotonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.polarization {
            Polarization::R => 'R',
            Polarization::L => 'L',
        };
        let d = match self.direction {
            Direction::Up => "up",
            Direction::Down => "down",
        };
        write!(f, "{p}·{d}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactorKind {
    Spin,
    Photon(Vec<PhotonMode>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorLabel {
    Spin(Spin),
    Photon(PhotonMode),
}

/// One named tensor factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    name: String,
    kind: FactorKind,
}

impl Factor {
    pub fn spin(name: impl Into<String>) -> Self {
        Factor {
            name: name.into(),
            kind: FactorKind::Spin,
        }
    }

    /// A photon over all four modes.
    pub fn photon(name: impl Into<String>) -> Self {
        Factor {
            name: name.into(),
            kind: FactorKind::Photon(PhotonMode::ALL.to_vec()),
        }
    }

    /// A photon restricted to {R·down, L·up}.
    pub fn photon_compact(name: impl Into<String>) -> Self {
        Factor {
            name: name.into(),
            kind: FactorKind::Photon(PhotonMode::COMPACT.to_vec()),
        }
    }

    pub fn photon_with_modes(name: impl Into<String>, modes: Vec<PhotonMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidArgument("photon factor needs at least one mode".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::InvalidArgument(format!("repeated photon mode {m}")));
            }
        }
        Ok(Factor {
            name: name.into(),
            kind: FactorKind::Photon(modes),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &FactorKind {
        &self.kind
    }

    pub fn is_spin(&self) -> bool {
        matches!(self.kind, FactorKind::Spin)
    }

    pub fn photon_modes(&self) -> Option<&[PhotonMode]> {
        match &self.kind {
            FactorKind::Photon(m) => Some(m),
            FactorKind::Spin => None,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            FactorKind::Spin => 2,
            FactorKind::Photon(m) => m.len(),
        }
    }

    pub fn label(&self, i: usize) -> FactorLabel {
        match &self.kind {
            FactorKind::Spin => FactorLabel::Spin(Spin::ALL[i]),
            FactorKind::Photon(m) => FactorLabel::Photon(m[i]),
        }
    }

    pub fn index_of(&self, label: FactorLabel) -> Option<usize> {
        match (&self.kind, label) {
            (FactorKind::Spin, FactorLabel::Spin(s)) => Some(s.index()),
            (FactorKind::Photon(modes), FactorLabel::Photon(m)) => modes.iter().position(|x| *x == m),
            _ => None,
        }
    }
}

/// A basis element: one label per factor, in factor order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisLabel(pub Vec<FactorLabel>);

impl BasisLabel {
    pub fn spin(&self, factor: usize) -> Option<Spin> {
        match self.0.get(factor) {
            Some(FactorLabel::Spin(s)) => Some(*s),
            _ => None,
        }
    }

    pub fn photon(&self, factor: usize) -> Option<PhotonMode> {
        match self.0.get(factor) {
            Some(FactorLabel::Photon(m)) => Some(*m),
            _ => None,
        }
    }
}

/// Ordered tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Space {
    factors: Vec<Factor>,
    strides: Vec<usize>,
    dim: usize,
}

impl Space {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        for (i, f) in factors.iter().enumerate() {
            if factors[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::DuplicateFactor(f.name.clone()));
            }
        }
        let mut dim: usize = 1;
        for f in &factors {
            dim = dim.saturating_mul(f.dim());
            if dim > MAX_DIMENSION {
                return Err(Error::DimensionOverflow {
                    dim,
                    limit: MAX_DIMENSION,
                });
            }
        }
        let mut strides = vec![1; factors.len()];
        for k in (0..factors.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * factors[k + 1].dim();
        }
        Ok(Space {
            factors,
            strides,
            dim,
        })
    }

    /// `n` spin factors named by `names`.
    pub fn spins(names: &[&str]) -> Result<Self> {
        Space::new(names.iter().map(|n| Factor::spin(*n)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> Result<&Factor> {
        self.factors.get(i).ok_or(Error::FactorOutOfRange {
            index: i,
            len: self.factors.len(),
        })
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    /// Same factor kinds in the same order, ignoring names.
    pub fn same_shape(&self, other: &Space) -> bool {
        self.factors.len() == other.factors.len()
            && self.factors.iter().zip(&other.factors).all(|(a, b)| a.kind == b.kind)
    }

    fn digit(&self, index: usize, factor: usize) -> usize {
        (index / self.strides[factor]) % self.factors[factor].dim()
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        BasisLabel(
            (0..self.factors.len())
                .map(|k| self.factors[k].label(self.digit(index, k)))
                .collect(),
        )
    }

    pub fn index(&self, label: &BasisLabel) -> Option<usize> {
        if label.0.len() != self.factors.len() {
            return None;
        }
        let mut idx = 0;
        for (k, l) in label.0.iter().enumerate() {
            idx += self.factors[k].index_of(*l)? * self.strides[k];
        }
        Some(idx)
    }

    fn check_factor(&self, i: usize) -> Result<()> {
        self.factor(i).map(|_| ())
    }

    fn subspace(&self, keep: &[usize]) -> Result<Space> {
        Space::new(keep.iter().map(|&k| self.factors[k].clone()).collect())
    }
}

/// Vector of complex amplitudes over a [`Space`].
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    space: Space,
    amps: DVector<C64>,
}

impl PureState {
    pub fn new(space: Space, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: amps.len(),
            });
        }
        let state = PureState {
            space,
            amps: DVector::from_vec(amps),
        };
        let n = state.norm_sqr();
        if n.is_nan() || n > 1.0 + tol::NORM_SLACK {
            return Err(Error::NotSubNormalized(n));
        }
        Ok(state)
    }

    fn from_parts(space: Space, amps: DVector<C64>) -> Self {
        PureState { space, amps }
    }

    pub fn zero(space: Space) -> Self {
        let n = space.dim();
        PureState::from_parts(space, DVector::zeros(n))
    }

    pub fn basis(space: Space, index: usize) -> Result<Self> {
        if index >= space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: index,
            });
        }
        let mut s = PureState::zero(space);
        s.amps[index] = C64::new(1.0, 0.0);
        Ok(s)
    }

    /// Builds a state from `(amplitude, label)` terms; repeated labels add.
    pub fn from_terms(space: Space, terms: &[(C64, BasisLabel)]) -> Result<Self> {
        let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
        for (a, l) in terms {
            let i = space
                .index(l)
                .ok_or_else(|| Error::BasisMismatch(format!("label {l:?} not in space")))?;
            amps[i] += *a;
        }
        PureState::new(space, amps)
    }

    /// A single spin in `s`.
    pub fn spin(name: &str, s: Spin) -> Self {
        let space = Space::new(vec![Factor::spin(name)]).expect("one factor");
        PureState::basis(space, s.index()).expect("in range")
    }

    /// Two spins `first`, `second` in the given Bell state.
    pub fn bell(kind: BellState, first: &str, second: &str) -> Result<Self> {
        PureState::new(Space::spins(&[first, second])?, kind.amplitudes().to_vec())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn amplitude_of(&self, label: &BasisLabel) -> Option<C64> {
        self.space.index(label).map(|i| self.amps[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= tol::ZERO_NORM {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        PureState::from_parts(self.space.clone(), &self.amps * factor)
    }

    /// Same amplitudes under a renamed/reshaped space of equal shape.
    pub fn with_space(&self, space: Space) -> Result<Self> {
        if !space.same_shape(&self.space) {
            return Err(Error::BasisMismatch("spaces differ in shape".into()));
        }
        Ok(PureState::from_parts(space, self.amps.clone()))
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let mut factors = self.space.factors.clone();
        factors.extend(other.space.factors.iter().cloned());
        let space = Space::new(factors)?;
        let amps = self.amps.kronecker(&other.amps);
        Ok(PureState::from_parts(space, amps))
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::BasisMismatch("inner product of states on different spaces".into()));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// Zeroes every amplitude whose label fails `keep`.
    pub fn project<P>(&self, keep: P) -> PureState
    where
        P: Fn(&BasisLabel) -> bool,
    {
        let mut out = self.amps.clone();
        for i in 0..self.dim() {
            if !keep(&self.space.label(i)) {
                out[i] = C64::new(0.0, 0.0);
            }
        }
        PureState::from_parts(self.space.clone(), out)
    }

    /// Projects `factor` onto `ket` and removes it: the result holds
    /// `(⟨ket| ⊗ 1)|self⟩` over the remaining factors.
    pub fn contract_factor(&self, factor: usize, ket: &[C64]) -> Result<PureState> {
        self.space.check_factor(factor)?;
        let d = self.space.factors[factor].dim();
        if ket.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: ket.len(),
            });
        }
        let keep: Vec<usize> = (0..self.space.factors.len()).filter(|&k| k != factor).collect();
        let space = self.space.subspace(&keep)?;
        let stride = self.space.strides[factor];
        let mut out = DVector::zeros(space.dim());
        for i in 0..self.dim() {
            let m = self.space.digit(i, factor);
            let rest = (i / (stride * d)) * stride + i % stride;
            out[rest] += ket[m].conj() * self.amps[i];
        }
        Ok(PureState::from_parts(space, out))
    }

    pub fn apply_single_qubit(&self, factor: usize, gate: &Gate2) -> Result<PureState> {
        self.space.check_factor(factor)?;
        let f = &self.space.factors[factor];
        if f.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: f.dim(),
            });
        }
        let m = DMatrix::from_fn(2, 2, |r, c| gate[r][c]);
        self.apply_matrix(&[factor], &m)
    }

    /// Applies `map` to the listed factors, taken in the listed order.
    pub fn apply_local(&self, factors: &[usize], map: &LinearMap) -> Result<PureState> {
        for &k in factors {
            self.space.check_factor(k)?;
        }
        let sub = self.space.subspace(factors)?;
        if !map.domain.same_shape(&sub) || !map.codomain.same_shape(&sub) {
            return Err(Error::BasisMismatch("local map does not match the addressed factors".into()));
        }
        self.apply_matrix(factors, &map.matrix)
    }

    fn apply_matrix(&self, factors: &[usize], m: &DMatrix<C64>) -> Result<PureState> {
        for (i, k) in factors.iter().enumerate() {
            if factors[..i].contains(k) {
                return Err(Error::InvalidArgument(format!("factor {k} addressed twice")));
            }
        }
        let dims: Vec<usize> = factors.iter().map(|&k| self.space.factors[k].dim()).collect();
        let sub_dim: usize = dims.iter().product();
        // offset of every sub-basis element within the full index
        let offsets: Vec<usize> = (0..sub_dim)
            .map(|mut s| {
                let mut off = 0;
                for (pos, &k) in factors.iter().enumerate().rev() {
                    off += (s % dims[pos]) * self.space.strides[k];
                    s /= dims[pos];
                }
                off
            })
            .collect();
        let mut out = DVector::zeros(self.dim());
        let mut gathered = vec![C64::new(0.0, 0.0); sub_dim];
        for base in 0..self.dim() {
            if factors.iter().any(|&k| self.space.digit(base, k) != 0) {
                continue;
            }
            for (g, off) in gathered.iter_mut().zip(&offsets) {
                *g = self.amps[base + off];
            }
            for r in 0..sub_dim {
                let mut acc = C64::new(0.0, 0.0);
                for (cidx, g) in gathered.iter().enumerate() {
                    acc += m[(r, cidx)] * g;
                }
                out[base + offsets[r]] = acc;
            }
        }
        Ok(PureState::from_parts(self.space.clone(), out))
    }
}

pub fn tensor(a: &PureState, b: &PureState) -> Result<PureState> {
    a.tensor(b)
}

pub fn inner(a: &PureState, b: &PureState) -> Result<C64> {
    a.inner(b)
}

/// |⟨a|b⟩|² / (‖a‖²‖b‖²).
pub fn fidelity_pure(a: &PureState, b: &PureState) -> Result<f64> {
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    if na <= tol::ZERO_NORM * tol::ZERO_NORM || nb <= tol::ZERO_NORM * tol::ZERO_NORM {
        return Err(Error::ZeroNorm);
    }
    let f = a.inner(b)?.norm_sqr() / (na * nb);
    Ok(f.min(1.0))
}

/// Haar-random unit vector over `space`: independent standard complex
/// Gaussian amplitudes, normalized.
pub fn haar_random_state<R: Rng + ?Sized>(space: &Space, rng: &mut R) -> PureState {
    loop {
        let amps: DVector<C64> = DVector::from_fn(space.dim(), |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let n = amps.norm();
        if n > tol::ZERO_NORM {
            return PureState::from_parts(space.clone(), amps / C64::new(n, 0.0));
        }
    }
}

/// The two-qubit Bell basis, in (↑↑, ↑↓, ↓↑, ↓↓) amplitude order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn amplitudes(self) -> [C64; 4] {
        let h = FRAC_1_SQRT_2;
        let z = 0.0;
        let v = match self {
            BellState::PhiPlus => [h, z, z, h],
            BellState::PhiMinus => [h, z, z, -h],
            BellState::PsiPlus => [z, h, h, z],
            BellState::PsiMinus => [z, h, -h, z],
        };
        v.map(|x| C64::new(x, 0.0))
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        })
    }
}

/// Squared overlaps of a two-spin state with each Bell state, in
/// [`BellState::ALL`] order. Not renormalized.
pub fn bell_weights(state: &PureState) -> Result<[f64; 4]> {
    if state.dim() != 4 || !state.space.factors.iter().all(Factor::is_spin) {
        return Err(Error::BasisMismatch("Bell decomposition needs two spins".into()));
    }
    let mut w = [0.0; 4];
    for (k, b) in BellState::ALL.iter().enumerate() {
        let amp: C64 = b
            .amplitudes()
            .iter()
            .zip(state.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum();
        w[k] = amp.norm_sqr();
    }
    Ok(w)
}

/// Density operator over a [`Space`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: Space,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(space: Space, matrix: DMatrix<C64>) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.nrows(),
            });
        }
        let herm_err = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > tol::ALGEBRAIC {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm_err:e})")));
        }
        let tr = matrix.trace().re;
        if !(-tol::NORM_SLACK..=1.0 + tol::NORM_SLACK).contains(&tr) {
            return Err(Error::InvalidDensity(format!("trace {tr} outside [0, 1]")));
        }
        let herm = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        let min_eig = SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < tol::PSD_EIGENVALUE {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(DensityMatrix { space, matrix })
    }

    /// |ψ⟩⟨ψ|, carrying the state's squared norm as trace.
    pub fn from_pure(state: &PureState) -> Self {
        DensityMatrix {
            space: state.space.clone(),
            matrix: &state.amps * state.amps.adjoint(),
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn expectation(&self, state: &PureState) -> Result<f64> {
        if state.space != self.space {
            return Err(Error::BasisMismatch("state and density matrix differ in space".into()));
        }
        Ok(state.amps.dotc(&(&self.matrix * &state.amps)).re)
    }

    /// Traces out every factor not listed in `keep`. Kept factors retain
    /// their original relative order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptyKeep);
        }
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        for &k in &keep {
            self.space.check_factor(k)?;
        }
        let sub = self.space.subspace(&keep)?;
        let traced: Vec<usize> = (0..self.space.factors.len()).filter(|k| !keep.contains(k)).collect();
        let n = self.space.dim();
        let reduce = |i: usize| -> usize {
            keep.iter()
                .zip(&sub.strides)
                .map(|(&k, &s)| self.space.digit(i, k) * s)
                .sum()
        };
        let red: Vec<usize> = (0..n).map(reduce).collect();
        let mut out = DMatrix::zeros(sub.dim(), sub.dim());
        for i in 0..n {
            for j in 0..n {
                if traced.iter().all(|&k| self.space.digit(i, k) == self.space.digit(j, k)) {
                    out[(red[i], red[j])] += self.matrix[(i, j)];
                }
            }
        }
        Ok(DensityMatrix {
            space: sub,
            matrix: out,
        })
    }
}

/// Linear operator between two spaces that never amplifies probability.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    domain: Space,
    codomain: Space,
    matrix: DMatrix<C64>,
}

impl LinearMap {
    pub fn new(domain: Space, codomain: Space, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.ncols() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: matrix.ncols(),
            });
        }
        if matrix.nrows() != codomain.dim() {
            return Err(Error::DimensionMismatch {
                expected: codomain.dim(),
                got: matrix.nrows(),
            });
        }
        let map = LinearMap {
            domain,
            codomain,
            matrix,
        };
        let n2 = map.operator_norm_sqr();
        if n2 > 1.0 + tol::ALGEBRAIC {
            return Err(Error::NotContraction(n2));
        }
        Ok(map)
    }

    pub fn domain(&self) -> &Space {
        &self.domain
    }

    pub fn codomain(&self) -> &Space {
        &self.codomain
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// M†M.
    pub fn gram(&self) -> DMatrix<C64> {
        self.matrix.adjoint() * &self.matrix
    }

    /// Largest eigenvalue of M†M.
    pub fn operator_norm_sqr(&self) -> f64 {
        if self.domain.dim() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.gram())
            .eigenvalues
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        if !state.space.same_shape(&self.domain) {
            return Err(Error::BasisMismatch("state does not match map domain".into()));
        }
        Ok(PureState::from_parts(self.codomain.clone(), &self.matrix * &state.amps))
    }
}
