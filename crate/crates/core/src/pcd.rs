//! Two-photon parity-check detector (PCD) for a pair of electron spins.
//!
//! A polarization-entangled pair (|RR⟩+|LL⟩)/√2 is split so that each photon
//! enters its own cavity: R components travel downwards, L components
//! upwards. After scattering, each photon leaves through the top or the
//! bottom of its cavity and clicks one detector there. Both photons leaving
//! on the same side heralds even spin parity, opposite sides herald odd
//! parity, and a missing click (photon loss) is an invalid run.
//!
//! Inside the circuit every photon stays in the two modes {R·down, L·up}, so
//! the production path runs on a 16-dimensional space (two compact photons
//! and two spins).

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{
    fidelity_pure, haar_random_state, Direction, Factor, LinearMap, PhotonMode, PureState, Space, C64,
};
use crate::rng::{map_indexed, stream_rng};
use crate::scattering::{ideal_scatter_map, practical_scatter_map, ScatterCoefficients};
use crate::stats::{Accumulator, Estimate};
use crate::tol;

/// Haar samples per averaged point unless configured otherwise.
pub const DEFAULT_HAAR_SAMPLES: usize = 20_000;
pub const DEFAULT_SEED: u64 = 2018;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cavity {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Top,
    Bottom,
}

impl Side {
    fn of(direction: Direction) -> Side {
        match direction {
            Direction::Up => Side::Top,
            Direction::Down => Side::Bottom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectorId {
    pub cavity: Cavity,
    pub side: Side,
}

impl DetectorId {
    pub const D1: DetectorId = DetectorId::new(Cavity::A, Side::Top);
    pub const D2: DetectorId = DetectorId::new(Cavity::B, Side::Top);
    pub const D3: DetectorId = DetectorId::new(Cavity::A, Side::Bottom);
    pub const D4: DetectorId = DetectorId::new(Cavity::B, Side::Bottom);

    pub const fn new(cavity: Cavity, side: Side) -> Self {
        DetectorId { cavity, side }
    }

    pub fn name(&self) -> &'static str {
        match (self.cavity, self.side) {
            (Cavity::A, Side::Top) => "D1",
            (Cavity::B, Side::Top) => "D2",
            (Cavity::A, Side::Bottom) => "D3",
            (Cavity::B, Side::Bottom) => "D4",
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Herald {
    Even,
    Odd,
    Invalid,
}

impl Herald {
    fn from_sides(a: Side, b: Side) -> Herald {
        if a == b {
            Herald::Even
        } else {
            Herald::Odd
        }
    }

    fn name(self) -> &'static str {
        match self {
            Herald::Even => "even",
            Herald::Odd => "odd",
            Herald::Invalid => "invalid",
        }
    }
}

/// Detectors clicked by the photon from cavity a and from cavity b.
pub type ClickPattern = (DetectorId, DetectorId);

/// Click patterns in output order.
pub const CLICK_PATTERNS: [ClickPattern; 4] = [
    (DetectorId::D1, DetectorId::D2),
    (DetectorId::D3, DetectorId::D4),
    (DetectorId::D1, DetectorId::D4),
    (DetectorId::D3, DetectorId::D2),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PcdOutcome {
    pub herald: Herald,
    /// Click patterns merged into this outcome; empty for `Invalid`.
    pub detectors: Vec<ClickPattern>,
    pub probability: f64,
    /// Sub-normalized two-electron state (norm² = `probability`). `None`
    /// for `Invalid`, whose conditional state is not pure.
    pub post_state: Option<PureState>,
}

impl PcdOutcome {
    pub fn herald_outcome(outcomes: &[PcdOutcome], herald: Herald) -> Option<&PcdOutcome> {
        outcomes.iter().find(|o| o.herald == herald)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonBasis {
    /// {R·down, L·up} per photon.
    Compact,
    /// All four modes per photon.
    Full,
}

/// The routed photon pair (|R·down R·down⟩ + |L·up L·up⟩)/√2 over photon
/// factors `photon-a`, `photon-b`.
pub fn pcd_input_state_in(basis: PhotonBasis) -> PureState {
    let (fa, fb) = match basis {
        PhotonBasis::Compact => (Factor::photon_compact("photon-a"), Factor::photon_compact("photon-b")),
        PhotonBasis::Full => (Factor::photon("photon-a"), Factor::photon("photon-b")),
    };
    let space = Space::new(vec![fa, fb]).expect("two photon factors");
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
    for mode in PhotonMode::COMPACT {
        let l = crate::qstate::BasisLabel(vec![
            crate::qstate::FactorLabel::Photon(mode),
            crate::qstate::FactorLabel::Photon(mode),
        ]);
        amps[space.index(&l).expect("compact modes are present")] = h;
    }
    PureState::new(space, amps).expect("unit norm")
}

pub fn pcd_input_state() -> PureState {
    pcd_input_state_in(PhotonBasis::Compact)
}

#[derive(Clone, Copy)]
enum Scatter<'a> {
    Ideal,
    Practical(&'a ScatterCoefficients),
}

impl Scatter<'_> {
    fn map(&self, photon: &Factor, spin: &Factor) -> Result<LinearMap> {
        match self {
            Scatter::Ideal => ideal_scatter_map(photon, spin),
            Scatter::Practical(c) => practical_scatter_map(photon, spin, c),
        }
    }
}

fn check_two_spins(state: &PureState) -> Result<()> {
    let f = state.space().factors();
    if f.len() != 2 || !f.iter().all(Factor::is_spin) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: state.dim(),
        });
    }
    let n = state.norm_sqr();
    if (n - 1.0).abs() > tol::NORM_SLACK {
        return Err(Error::InvalidArgument(format!("PCD input must be unit-norm, got norm² {n}")));
    }
    Ok(())
}

fn side_ket(photon: &Factor, side: Side) -> Vec<C64> {
    let modes = photon.photon_modes().expect("photon factor");
    modes
        .iter()
        .map(|m| {
            if Side::of(m.direction) == side {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// Runs the compact circuit and returns one outcome per click pattern plus
/// the aggregated `Invalid` outcome.
fn run_circuit(spin_state: &PureState, scatter: Scatter<'_>) -> Result<Vec<PcdOutcome>> {
    check_two_spins(spin_state)?;
    let user_space = spin_state.space().clone();
    let electrons = spin_state.with_space(Space::spins(&["electron-1", "electron-2"])?)?;
    let joint = pcd_input_state().tensor(&electrons)?;
    let f = joint.space().factors();
    let map_a = scatter.map(&f[0], &f[2])?;
    let map_b = scatter.map(&f[1], &f[3])?;
    let scattered = joint.apply_local(&[0, 2], &map_a)?.apply_local(&[1, 3], &map_b)?;

    let photon = Factor::photon_compact("p");
    let mut outcomes = Vec::with_capacity(5);
    let mut detected = 0.0;
    for (da, db) in CLICK_PATTERNS {
        let post = scattered
            .contract_factor(0, &side_ket(&photon, da.side))?
            .contract_factor(0, &side_ket(&photon, db.side))?
            .with_space(user_space.clone())?;
        let p = post.norm_sqr();
        detected += p;
        outcomes.push(PcdOutcome {
            herald: Herald::from_sides(da.side, db.side),
            detectors: vec![(da, db)],
            probability: p,
            post_state: Some(post),
        });
    }
    outcomes.push(PcdOutcome {
        herald: Herald::Invalid,
        detectors: Vec::new(),
        probability: (1.0 - detected).max(0.0),
        post_state: None,
    });
    Ok(outcomes)
}

/// Merges per-pattern sub-normalized states of one herald into a single
/// pure state. Fails when the patterns are not parallel, i.e. when the
/// coarse-grained conditional state would be mixed.
fn merge_states(herald: Herald, states: &[&PureState], space: &Space) -> Result<PureState> {
    let total: f64 = states.iter().map(|s| s.norm_sqr()).sum();
    let Some(reference) = states
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
    else {
        return Ok(PureState::zero(space.clone()));
    };
    let nr = reference.norm_sqr();
    if nr <= tol::NEGLIGIBLE_PROBABILITY * tol::NEGLIGIBLE_PROBABILITY {
        return Ok(PureState::zero(space.clone()));
    }
    for s in states {
        let ns = s.norm_sqr();
        let overlap = reference.inner(s)?.norm_sqr();
        if ns > 0.0 && overlap < nr * ns * (1.0 - 1e-9) {
            return Err(Error::MixedHerald(herald.name()));
        }
    }
    Ok(reference.scaled(C64::new((total / nr).sqrt(), 0.0)))
}

/// Groups click-pattern outcomes by herald: returns `[Even, Odd, Invalid]`.
pub fn coarse_grain(outcomes: &[PcdOutcome]) -> Result<Vec<PcdOutcome>> {
    let space = outcomes
        .iter()
        .find_map(|o| o.post_state.as_ref().map(|s| s.space().clone()))
        .ok_or_else(|| Error::InvalidArgument("no detected outcomes to merge".into()))?;
    let mut merged = Vec::with_capacity(3);
    for herald in [Herald::Even, Herald::Odd] {
        let group: Vec<&PcdOutcome> = outcomes.iter().filter(|o| o.herald == herald).collect();
        let states: Vec<&PureState> = group.iter().filter_map(|o| o.post_state.as_ref()).collect();
        let post = merge_states(herald, &states, &space)?;
        merged.push(PcdOutcome {
            herald,
            detectors: group.iter().flat_map(|o| o.detectors.iter().copied()).collect(),
            probability: group.iter().map(|o| o.probability).sum(),
            post_state: Some(post),
        });
    }
    merged.push(PcdOutcome {
        herald: Herald::Invalid,
        detectors: Vec::new(),
        probability: outcomes
            .iter()
            .filter(|o| o.herald == Herald::Invalid)
            .map(|o| o.probability)
            .sum(),
        post_state: None,
    });
    Ok(merged)
}

/// Ideal PCD: `[Even, Odd, Invalid]` with parity-projected post states.
pub fn pcd_ideal(spin_state: &PureState) -> Result<Vec<PcdOutcome>> {
    coarse_grain(&run_circuit(spin_state, Scatter::Ideal)?)
}

/// PCD with practical scattering: one outcome per click pattern in
/// [`CLICK_PATTERNS`] order, then `Invalid` carrying the lost probability.
pub fn pcd_practical(spin_state: &PureState, coeffs: &ScatterCoefficients) -> Result<Vec<PcdOutcome>> {
    run_circuit(spin_state, Scatter::Practical(coeffs))
}

/// Conditional map of one herald on the two-electron space.
#[derive(Debug, Clone, PartialEq)]
pub struct PcdConditionalMap {
    pub herald: Herald,
    pub detectors: Vec<ClickPattern>,
    pub map: LinearMap,
}

fn conditional_maps(scatter: Scatter<'_>) -> Result<Vec<PcdConditionalMap>> {
    let space = Space::spins(&["electron-1", "electron-2"])?;
    let mut columns: Vec<Vec<PcdOutcome>> = Vec::with_capacity(4);
    for k in 0..4 {
        let input = PureState::basis(space.clone(), k)?;
        columns.push(coarse_grain(&run_circuit(&input, scatter)?)?);
    }
    [Herald::Even, Herald::Odd]
        .iter()
        .enumerate()
        .map(|(h, &herald)| {
            let m = DMatrix::from_fn(4, 4, |r, c| {
                columns[c][h].post_state.as_ref().expect("detected outcome").amplitude(r)
            });
            Ok(PcdConditionalMap {
                herald,
                detectors: columns[0][h].detectors.clone(),
                map: LinearMap::new(space.clone(), space.clone(), m)?,
            })
        })
        .collect()
}

/// `[Even, Odd]` conditional maps: `post_state = M·ψ`, probability `‖M·ψ‖²`.
pub fn pcd_conditional_maps(coeffs: &ScatterCoefficients) -> Result<Vec<PcdConditionalMap>> {
    conditional_maps(Scatter::Practical(coeffs))
}

/// Conditional maps of the ideal detector (parity projectors, odd with a
/// global −1).
pub fn pcd_ideal_conditional_maps() -> Result<Vec<PcdConditionalMap>> {
    conditional_maps(Scatter::Ideal)
}

/// `1 − Σ M†M`: the POVM element of a lost photon.
pub fn loss_operator(maps: &[PcdConditionalMap]) -> DMatrix<C64> {
    let mut op = DMatrix::<C64>::identity(4, 4);
    for m in maps {
        op -= m.map.gram();
    }
    op
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiguresOfMerit {
    /// Fidelity of the even-herald state with the ideal one; `None` when the
    /// ideal detector never heralds even for this input.
    pub f_even: Option<f64>,
    pub f_odd: Option<f64>,
    /// Probability of an even herald (including false heralds).
    pub eta_even: f64,
    pub eta_odd: f64,
}

fn fidelity_if_present(practical: &PureState, ideal: &PureState) -> Result<Option<f64>> {
    if ideal.norm_sqr() <= tol::NEGLIGIBLE_PROBABILITY || practical.norm_sqr() <= 0.0 {
        return Ok(None);
    }
    fidelity_pure(practical, ideal).map(Some)
}

fn post(outcomes: &[PcdOutcome], herald: Herald) -> &PureState {
    PcdOutcome::herald_outcome(outcomes, herald)
        .and_then(|o| o.post_state.as_ref())
        .expect("coarse-grained outcomes carry even and odd states")
}

/// Fidelities and herald probabilities of the practical detector on one input.
pub fn pcd_figures_of_merit(spin_state: &PureState, coeffs: &ScatterCoefficients) -> Result<FiguresOfMerit> {
    let ideal = pcd_ideal(spin_state)?;
    let practical = coarse_grain(&pcd_practical(spin_state, coeffs)?)?;
    Ok(FiguresOfMerit {
        f_even: fidelity_if_present(post(&practical, Herald::Even), post(&ideal, Herald::Even))?,
        f_odd: fidelity_if_present(post(&practical, Herald::Odd), post(&ideal, Herald::Odd))?,
        eta_even: practical[0].probability,
        eta_odd: practical[1].probability,
    })
}

/// Precomputed ideal and practical herald maps for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PcdModel {
    ideal: Vec<PcdConditionalMap>,
    practical: Vec<PcdConditionalMap>,
}

impl PcdModel {
    pub fn new(coeffs: &ScatterCoefficients) -> Result<Self> {
        Ok(PcdModel {
            ideal: pcd_ideal_conditional_maps()?,
            practical: pcd_conditional_maps(coeffs)?,
        })
    }

    pub fn practical_maps(&self) -> &[PcdConditionalMap] {
        &self.practical
    }

    /// Same as [`pcd_figures_of_merit`], through the precomputed maps.
    pub fn figures_of_merit(&self, spin_state: &PureState) -> Result<FiguresOfMerit> {
        check_two_spins(spin_state)?;
        let mut f = [None, None];
        let mut eta = [0.0, 0.0];
        for h in 0..2 {
            let ideal = self.ideal[h].map.apply(spin_state)?;
            let prac = self.practical[h].map.apply(spin_state)?;
            eta[h] = prac.norm_sqr();
            f[h] = fidelity_if_present(&prac, &ideal)?;
        }
        Ok(FiguresOfMerit {
            f_even: f[0],
            f_odd: f[1],
            eta_even: eta[0],
            eta_odd: eta[1],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageFigures {
    pub f_even: Estimate,
    pub f_odd: Estimate,
    pub eta_even: Estimate,
    pub eta_odd: Estimate,
    pub samples: usize,
}

/// Monte Carlo average of the figures of merit over Haar-random
/// two-electron states. Sample `i` draws from stream `i` of `seed`, so the
/// result is independent of thread scheduling.
pub fn pcd_average_figures(coeffs: &ScatterCoefficients, samples: usize, seed: u64) -> Result<AverageFigures> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one Haar sample is required".into()));
    }
    let model = PcdModel::new(coeffs)?;
    let space = Space::spins(&["electron-1", "electron-2"])?;
    let per_sample = map_indexed(samples, |i| {
        let mut rng = stream_rng(seed, i as u64);
        model.figures_of_merit(&haar_random_state(&space, &mut rng))
    });
    let mut acc = [Accumulator::default(); 4];
    for fom in per_sample {
        let fom = fom?;
        if let Some(f) = fom.f_even {
            acc[0].push(f);
        }
        if let Some(f) = fom.f_odd {
            acc[1].push(f);
        }
        acc[2].push(fom.eta_even);
        acc[3].push(fom.eta_odd);
    }
    Ok(AverageFigures {
        f_even: acc[0].estimate(),
        f_odd: acc[1].estimate(),
        eta_even: acc[2].estimate(),
        eta_odd: acc[3].estimate(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{BellState, Spin};
    use crate::scattering::{coefficients, CavityParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-12;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn spins(amps: [f64; 4]) -> PureState {
        PureState::new(Space::spins(&["1", "2"]).unwrap(), amps.map(r).to_vec()).unwrap()
    }

    fn close(a: &PureState, b: &PureState, eps: f64) -> bool {
        a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| (x - y).norm() < eps)
    }

    fn coeffs(g: f64, ks: f64) -> ScatterCoefficients {
        coefficients(&CavityParams::new(g, ks, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn input_state_amplitudes() {
        let s = pcd_input_state_in(PhotonBasis::Full);
        let label = |a, b| {
            crate::qstate::BasisLabel(vec![
                crate::qstate::FactorLabel::Photon(a),
                crate::qstate::FactorLabel::Photon(b),
            ])
        };
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude_of(&label(PhotonMode::R_DOWN, PhotonMode::R_DOWN)).unwrap() - r(h)).norm() < EPS);
        assert_eq!(s.amplitude_of(&label(PhotonMode::R_DOWN, PhotonMode::L_UP)).unwrap(), r(0.0));
        assert!((s.norm_sqr() - 1.0).abs() < EPS);
        assert!((pcd_input_state().norm_sqr() - 1.0).abs() < EPS);
    }

    #[test]
    fn ideal_even_input() {
        let out = pcd_ideal(&spins([1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].herald, Herald::Even);
        assert!((out[0].probability - 1.0).abs() < EPS);
        assert!(close(out[0].post_state.as_ref().unwrap(), &spins([1.0, 0.0, 0.0, 0.0]), EPS));
        assert!(out[1].probability.abs() < EPS);
        assert!(out[2].probability.abs() < EPS);
    }

    #[test]
    fn ideal_odd_input_has_global_minus_sign() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = spins([0.0, h, h, 0.0]);
        let out = pcd_ideal(&psi).unwrap();
        assert_eq!(out[1].herald, Herald::Odd);
        assert!((out[1].probability - 1.0).abs() < EPS);
        assert!(close(out[1].post_state.as_ref().unwrap(), &psi.scaled(r(-1.0)), EPS));
    }

    #[test]
    fn ideal_equal_superposition_splits_by_parity() {
        let out = pcd_ideal(&spins([0.5; 4])).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out[0].probability - 0.5).abs() < EPS);
        assert!((out[1].probability - 0.5).abs() < EPS);
        let even = out[0].post_state.as_ref().unwrap().normalized().unwrap();
        assert!(close(&even, &spins([h, 0.0, 0.0, h]), EPS));
    }

    #[test]
    fn wrong_dimension_rejected() {
        let one = PureState::spin("e", Spin::Up);
        assert!(matches!(pcd_ideal(&one), Err(Error::DimensionMismatch { .. })));
        assert!(pcd_practical(&spins([0.5, 0.0, 0.0, 0.0]), &ScatterCoefficients::IDEAL).is_err());
    }

    #[test]
    fn practical_patterns_classified_by_side() {
        let out = pcd_practical(&spins([0.5; 4]), &coeffs(1.0, 0.2)).unwrap();
        assert_eq!(out.len(), 5);
        for o in &out[..4] {
            let (a, b) = o.detectors[0];
            assert_eq!(a.cavity, Cavity::A);
            assert_eq!(b.cavity, Cavity::B);
            assert_eq!(o.herald == Herald::Even, a.side == b.side);
        }
        assert_eq!(out[4].herald, Herald::Invalid);
        let total: f64 = out.iter().map(|o| o.probability).sum();
        assert!((total - 1.0).abs() < EPS);
    }

    #[test]
    fn up_up_even_probability_matches_hand_expansion() {
        // Both spins ↑: every photon sees a cold cavity. Even patterns collect
        // stay·stay + flip·flip = t0² + r0² per pattern, divided by √2.
        let c = coeffs(2.4, 0.0);
        let out = pcd_practical(&spins([1.0, 0.0, 0.0, 0.0]), &c).unwrap();
        let amp = (c.t0 * c.t0 + c.r0 * c.r0) / 2f64.sqrt();
        let even: f64 = out.iter().filter(|o| o.herald == Herald::Even).map(|o| o.probability).sum();
        assert!((even - 2.0 * amp * amp).abs() < EPS);
        // ↑↓ in an odd pattern: t0·r + r0·t
        let out = pcd_practical(&spins([0.0, 1.0, 0.0, 0.0]), &c).unwrap();
        let odd_amp = (c.t0 * c.r + c.r0 * c.t) / 2f64.sqrt();
        let odd: f64 = out.iter().filter(|o| o.herald == Herald::Odd).map(|o| o.probability).sum();
        assert!((odd - 2.0 * odd_amp * odd_amp).abs() < EPS);
    }

    #[test]
    fn ideal_conditional_maps_are_parity_projectors() {
        let maps = pcd_ideal_conditional_maps().unwrap();
        let even = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![r(1.0), r(0.0), r(0.0), r(1.0)]));
        let odd = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![r(0.0), r(-1.0), r(-1.0), r(0.0)]));
        assert!((maps[0].map.matrix() - even).norm() < EPS);
        assert!((maps[1].map.matrix() - odd).norm() < EPS);
        let practical_ideal = pcd_conditional_maps(&ScatterCoefficients::IDEAL).unwrap();
        assert_eq!(practical_ideal[0].map.matrix(), maps[0].map.matrix());
        assert!(loss_operator(&maps).norm() < EPS);
    }

    #[test]
    fn maps_are_complete_with_loss() {
        let maps = pcd_conditional_maps(&coeffs(0.8, 0.3)).unwrap();
        let loss = loss_operator(&maps);
        let herm = (&loss + loss.adjoint()) * r(0.5);
        for e in nalgebra::SymmetricEigen::new(herm).eigenvalues.iter() {
            assert!(*e >= -EPS && *e <= 1.0 + EPS);
        }
        // block-diagonal in parity: maps never mix the even and odd sectors
        for m in &maps {
            let a = m.map.matrix();
            for (i, j) in [(0, 1), (0, 2), (3, 1), (3, 2)] {
                assert!(a[(i, j)].norm() < EPS && a[(j, i)].norm() < EPS);
            }
        }
    }

    #[test]
    fn maps_agree_with_circuit_on_random_states() {
        let c = coeffs(1.7, 0.07);
        let maps = pcd_conditional_maps(&c).unwrap();
        let space = Space::spins(&["1", "2"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let psi = haar_random_state(&space, &mut rng);
            let out = coarse_grain(&pcd_practical(&psi, &c).unwrap()).unwrap();
            for h in 0..2 {
                let via_map = maps[h].map.apply(&psi).unwrap();
                assert!(close(&via_map, out[h].post_state.as_ref().unwrap(), EPS));
                assert!((via_map.norm_sqr() - out[h].probability).abs() < EPS);
            }
        }
    }

    #[test]
    fn ideal_limit_matches_ideal_detector() {
        let space = Space::spins(&["1", "2"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let psi = haar_random_state(&space, &mut rng);
            let ideal = pcd_ideal(&psi).unwrap();
            let prac = coarse_grain(&pcd_practical(&psi, &ScatterCoefficients::IDEAL).unwrap()).unwrap();
            for (a, b) in ideal.iter().zip(&prac) {
                assert_eq!(a.herald, b.herald);
                assert_eq!(a.detectors, b.detectors);
                assert!((a.probability - b.probability).abs() < 1e-10);
                if let (Some(x), Some(y)) = (&a.post_state, &b.post_state) {
                    assert!(close(x, y, 1e-10));
                }
            }
        }
    }

    #[test]
    fn herald_symmetry_under_swap() {
        let c = coeffs(1.2, 0.15);
        let space = Space::spins(&["1", "2"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let psi = haar_random_state(&space, &mut rng);
            let a = psi.amplitudes();
            let swapped = PureState::new(space.clone(), vec![a[0], a[2], a[1], a[3]]).unwrap();
            let p = pcd_practical(&psi, &c).unwrap();
            let q = pcd_practical(&swapped, &c).unwrap();
            // swapping cavities maps pattern (x, y) to (y, x)
            let pr = |o: &[PcdOutcome], pat: (Side, Side)| {
                o.iter()
                    .find(|x| x.detectors.first().map(|d| (d.0.side, d.1.side)) == Some(pat))
                    .unwrap()
                    .probability
            };
            for (sa, sb) in [(Side::Top, Side::Top), (Side::Bottom, Side::Bottom), (Side::Top, Side::Bottom)] {
                assert!((pr(&p, (sa, sb)) - pr(&q, (sb, sa))).abs() < EPS);
            }
            assert!((p[4].probability - q[4].probability).abs() < EPS);
        }
    }

    #[test]
    fn figures_of_merit_edge_cases() {
        let ideal = pcd_figures_of_merit(&spins([0.5; 4]), &ScatterCoefficients::IDEAL).unwrap();
        assert!((ideal.f_even.unwrap() - 1.0).abs() < EPS);
        assert!((ideal.f_odd.unwrap() - 1.0).abs() < EPS);
        assert!((ideal.eta_even + ideal.eta_odd - 1.0).abs() < EPS);

        let c = coeffs(2.4, 0.05);
        let up = pcd_figures_of_merit(&spins([1.0, 0.0, 0.0, 0.0]), &c).unwrap();
        assert!(up.f_odd.is_none());
        // false odd herald: both photons cold, amplitude 2·t0·r0/√2 per pattern
        assert!((up.eta_odd - (2.0 * c.t0 * c.r0).powi(2)).abs() < EPS);
        assert!(up.eta_odd > 0.0);
    }

    #[test]
    fn model_path_matches_circuit_path() {
        let c = coeffs(1.5, 0.05);
        let model = PcdModel::new(&c).unwrap();
        let space = Space::spins(&["electron-1", "electron-2"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let psi = haar_random_state(&space, &mut rng);
            let a = model.figures_of_merit(&psi).unwrap();
            let b = pcd_figures_of_merit(&psi, &c).unwrap();
            assert!((a.f_even.unwrap() - b.f_even.unwrap()).abs() < EPS);
            assert!((a.f_odd.unwrap() - b.f_odd.unwrap()).abs() < EPS);
            assert!((a.eta_even - b.eta_even).abs() < EPS);
            assert!((a.eta_odd - b.eta_odd).abs() < EPS);
        }
    }

    #[test]
    fn averages_in_ideal_limit() {
        let avg = pcd_average_figures(&ScatterCoefficients::IDEAL, 500, 1).unwrap();
        assert!((avg.f_even.mean - 1.0).abs() < EPS);
        assert!((avg.f_odd.mean - 1.0).abs() < EPS);
        assert!((avg.eta_even.mean + avg.eta_odd.mean - 1.0).abs() < 1e-12);
        assert!(pcd_average_figures(&ScatterCoefficients::IDEAL, 0, 1).is_err());
    }

    #[test]
    fn average_efficiency_matches_trace_formula() {
        // Haar average of ⟨ψ|A|ψ⟩ is tr(A)/4.
        let c = coeffs(1.0, 0.2);
        let maps = pcd_conditional_maps(&c).unwrap();
        let avg = pcd_average_figures(&c, 20_000, 5).unwrap();
        for (est, m) in [(avg.eta_even, &maps[0]), (avg.eta_odd, &maps[1])] {
            let exact = m.map.gram().trace().re / 4.0;
            assert!((est.mean - exact).abs() < 5.0 * est.stderr, "{} vs {exact}", est.mean);
        }
    }

    #[test]
    fn averages_are_seed_deterministic() {
        let c = coeffs(2.0, 0.05);
        let a = pcd_average_figures(&c, 300, 77).unwrap();
        let b = pcd_average_figures(&c, 300, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bell_inputs_herald_deterministically() {
        for (bell, herald) in [
            (BellState::PhiPlus, Herald::Even),
            (BellState::PhiMinus, Herald::Even),
            (BellState::PsiPlus, Herald::Odd),
            (BellState::PsiMinus, Herald::Odd),
        ] {
            let out = pcd_ideal(&PureState::bell(bell, "1", "2").unwrap()).unwrap();
            let o = PcdOutcome::herald_outcome(&out, herald).unwrap();
            assert!((o.probability - 1.0).abs() < EPS);
        }
    }
}
