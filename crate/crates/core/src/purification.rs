//! Entanglement purification of electron-spin pairs with parity checks.
//!
//! Two pairs AB and CD are shared between Alice (A, C) and Bob (B, D). Each
//! side checks the parity of its two electrons; runs where the parities
//! agree are kept, C and D are measured in the {|+⟩, |−⟩} basis, and a
//! phase flip on A is applied when the two outcomes differ. For bit-flip
//! mixtures F|φ⁺⟩⟨φ⁺| + (1−F)|ψ⁺⟩⟨ψ⁺| this maps input fidelities
//! (F_a, F_b) to F_aF_b / (F_aF_b + (1−F_a)(1−F_b)).
//!
//! In log-odds L(F) = ln(F/(1−F)) a round is plain addition, so any
//! arrangement of rounds over the same raw pairs ends at the same fidelity
//! and the same joint success probability.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcd::{pcd_conditional_maps, Herald, PcdConditionalMap};
use crate::qstate::{bell_weights, gates, BellState, PureState, Space, Spin, C64};
use crate::rng::{map_indexed, stream_rng};
use crate::scattering::ScatterCoefficients;
use crate::stats::{Accumulator, Estimate};
use crate::tol;

/// Bell-diagonal two-qubit state, weights in (φ⁺, φ⁻, ψ⁺, ψ⁻) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellMixture {
    weights: [f64; 4],
}

impl BellMixture {
    pub fn new(phi_plus: f64, phi_minus: f64, psi_plus: f64, psi_minus: f64) -> Result<Self> {
        Self::from_weights([phi_plus, phi_minus, psi_plus, psi_minus])
    }

    pub fn from_weights(weights: [f64; 4]) -> Result<Self> {
        for w in weights {
            if !(-tol::ALGEBRAIC..=1.0 + tol::ALGEBRAIC).contains(&w) {
                return Err(Error::InvalidMixture(format!("weight {w} outside [0, 1]")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol::ALGEBRAIC {
            return Err(Error::InvalidMixture(format!("weights sum to {sum}")));
        }
        Ok(BellMixture {
            weights: weights.map(|w| w.clamp(0.0, 1.0)),
        })
    }

    /// F|φ⁺⟩⟨φ⁺| + (1−F)|ψ⁺⟩⟨ψ⁺|.
    pub fn bit_flip(fidelity: f64) -> Result<Self> {
        check_fidelity(fidelity)?;
        Self::new(fidelity, 0.0, 1.0 - fidelity, 0.0)
    }

    /// F|φ⁺⟩⟨φ⁺| + (1−F)|φ⁻⟩⟨φ⁻|.
    pub fn phase_flip(fidelity: f64) -> Result<Self> {
        check_fidelity(fidelity)?;
        Self::new(fidelity, 1.0 - fidelity, 0.0, 0.0)
    }

    pub fn pure(state: BellState) -> Self {
        let mut weights = [0.0; 4];
        weights[state.index()] = 1.0;
        BellMixture { weights }
    }

    /// Weight of the target state φ⁺.
    pub fn fidelity(&self) -> f64 {
        self.weights[0]
    }

    pub fn weights(&self) -> [f64; 4] {
        self.weights
    }

    pub fn weight(&self, state: BellState) -> f64 {
        self.weights[state.index()]
    }

    /// Weight carried by the phase-flipped components φ⁻ and ψ⁻.
    pub fn phase_error_weight(&self) -> f64 {
        self.weights[1] + self.weights[3]
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BellState {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return BellState::ALL[k];
            }
        }
        // u landed in the rounding gap above the cumulative sum
        BellState::ALL[self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)]
    }
}

impl fmt::Display for BellMixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.weights;
        write!(f, "{{phi+: {a}, phi-: {b}, psi+: {c}, psi-: {d}}}")
    }
}

fn check_fidelity(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidFidelity(f));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub output: BellMixture,
    /// Success probability of the last round.
    pub round_efficiency: f64,
    /// Joint success probability of every round that produced `output`.
    pub cumulative_efficiency: f64,
}

/// One purification round on two bit-flip mixtures.
pub fn purify_round_bitflip(a: &BellMixture, b: &BellMixture) -> Result<RoundResult> {
    for m in [a, b] {
        let w = m.phase_error_weight();
        if w > tol::ALGEBRAIC {
            return Err(Error::PhaseErrorPresent(w));
        }
    }
    let (fa, fb) = (a.fidelity(), b.fidelity());
    let good = fa * fb;
    let eta = good + (1.0 - fa) * (1.0 - fb);
    if eta <= 0.0 {
        return Err(Error::NoSuccess);
    }
    let f = good / eta;
    Ok(RoundResult {
        output: BellMixture::new(f, 0.0, 1.0 - f, 0.0)?,
        round_efficiency: eta,
        cumulative_efficiency: eta,
    })
}

/// Bilateral Hadamard at the mixture level: φ⁻ and ψ⁺ trade weights.
pub fn convert_phase_to_bit(m: &BellMixture) -> BellMixture {
    let [a, b, c, d] = m.weights;
    BellMixture { weights: [a, c, b, d] }
}

/// Binary combining order of raw pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PurificationTree {
    Leaf(f64),
    Node(Box<PurificationTree>, Box<PurificationTree>),
}

impl PurificationTree {
    pub fn leaf(fidelity: f64) -> Self {
        PurificationTree::Leaf(fidelity)
    }

    pub fn node(left: PurificationTree, right: PurificationTree) -> Self {
        PurificationTree::Node(Box::new(left), Box::new(right))
    }

    /// Symmetric arrangement: halves are purified separately, then combined.
    pub fn balanced(leaves: &[f64]) -> Result<Self> {
        match leaves {
            [] => Err(Error::InvalidArgument("a tree needs at least one leaf".into())),
            [f] => Ok(Self::leaf(*f)),
            _ => {
                let mid = leaves.len() / 2;
                Ok(Self::node(Self::balanced(&leaves[..mid])?, Self::balanced(&leaves[mid..])?))
            }
        }
    }

    /// Each round purifies the running pair with one fresh raw pair.
    pub fn left_deep(leaves: &[f64]) -> Result<Self> {
        let (first, rest) = leaves
            .split_first()
            .ok_or_else(|| Error::InvalidArgument("a tree needs at least one leaf".into()))?;
        Ok(rest
            .iter()
            .fold(Self::leaf(*first), |acc, &f| Self::node(acc, Self::leaf(f))))
    }

    pub fn leaves(&self) -> Vec<f64> {
        match self {
            PurificationTree::Leaf(f) => vec![*f],
            PurificationTree::Node(l, r) => {
                let mut v = l.leaves();
                v.extend(r.leaves());
                v
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PurificationTree::Leaf(_) => 1,
            PurificationTree::Node(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    /// Leaves at or below 1/2, which no arrangement can improve.
    pub fn unpurifiable_leaves(&self) -> Vec<f64> {
        self.leaves().into_iter().filter(|&f| f <= 0.5).collect()
    }
}

/// Folds purification rounds over `tree`. The cumulative efficiency is the
/// product of every round's success probability.
pub fn evaluate_tree(tree: &PurificationTree) -> Result<RoundResult> {
    match tree {
        PurificationTree::Leaf(f) => Ok(RoundResult {
            output: BellMixture::bit_flip(*f)?,
            round_efficiency: 1.0,
            cumulative_efficiency: 1.0,
        }),
        PurificationTree::Node(l, r) => {
            let left = evaluate_tree(l)?;
            let right = evaluate_tree(r)?;
            let round = purify_round_bitflip(&left.output, &right.output)?;
            Ok(RoundResult {
                output: round.output,
                round_efficiency: round.round_efficiency,
                cumulative_efficiency: left.cumulative_efficiency
                    * right.cumulative_efficiency
                    * round.round_efficiency,
            })
        }
    }
}

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;
const D: usize = 3;

/// Four-electron state (A, B, C, D) left by agreeing parity heralds on
/// pairs AC and BD, for AB and CD both in φ⁺ or both in ψ⁺.
pub fn intermediate_four_electron_state(ab: BellState, cd: BellState, herald: Herald) -> Result<PureState> {
    use Spin::{Down as Dn, Up};
    let terms: [[Spin; 4]; 2] = match (ab, cd, herald) {
        (BellState::PhiPlus, BellState::PhiPlus, Herald::Even) => [[Up, Up, Up, Up], [Dn, Dn, Dn, Dn]],
        (BellState::PhiPlus, BellState::PhiPlus, Herald::Odd) => [[Up, Up, Dn, Dn], [Dn, Dn, Up, Up]],
        (BellState::PsiPlus, BellState::PsiPlus, Herald::Even) => [[Up, Dn, Up, Dn], [Dn, Up, Dn, Up]],
        (BellState::PsiPlus, BellState::PsiPlus, Herald::Odd) => [[Up, Dn, Dn, Up], [Dn, Up, Up, Dn]],
        _ => {
            return Err(Error::InvalidArgument(format!(
                "no intermediate state for pairs ({ab}, {cd}) with herald {herald:?}"
            )))
        }
    };
    let space = Space::spins(&["A", "B", "C", "D"])?;
    let mut amps = vec![C64::new(0.0, 0.0); 16];
    for t in terms {
        let idx = t.iter().fold(0, |acc, s| acc * 2 + s.index());
        amps[idx] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    }
    PureState::new(space, amps)
}

/// What happened in one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub pair_ab: BellStateName,
    pub pair_cd: BellStateName,
    pub alice: Herald,
    pub bob: Herald,
    pub kept: bool,
    /// Normalized Bell weights of AB after the ± measurement and feedback;
    /// absent when a photon was lost.
    pub ab_weights: Option<[f64; 4]>,
}

/// Serializable Bell-state tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellStateName {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl From<BellState> for BellStateName {
    fn from(b: BellState) -> Self {
        match b {
            BellState::PhiPlus => BellStateName::PhiPlus,
            BellState::PhiMinus => BellStateName::PhiMinus,
            BellState::PsiPlus => BellStateName::PsiPlus,
            BellState::PsiMinus => BellStateName::PsiMinus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub trials: usize,
    pub kept: usize,
    /// Runs with at least one lost photon.
    pub lost: usize,
    pub kept_fraction: Estimate,
    /// Mean Bell weights of the kept AB pairs; `None` if nothing was kept.
    pub output_estimate: Option<BellMixture>,
    pub output_stderr: [f64; 4],
    /// Mean Bell weights of AB in runs discarded for disagreeing parities.
    pub discarded_estimate: Option<BellMixture>,
}

/// Monte Carlo run of the full four-electron procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurificationMc {
    pub coeffs: ScatterCoefficients,
    pub trials: usize,
    pub seed: u64,
    /// Apply a Hadamard to every electron before the parity checks, turning
    /// phase-flip errors into bit-flip errors.
    pub hadamard_first: bool,
}

impl PurificationMc {
    pub fn new(coeffs: ScatterCoefficients, trials: usize, seed: u64) -> Self {
        PurificationMc {
            coeffs,
            trials,
            seed,
            hadamard_first: false,
        }
    }

    pub fn run(&self, a: &BellMixture, b: &BellMixture) -> Result<McSummary> {
        self.run_with_log(a, b).map(|(s, _)| s)
    }

    pub fn run_with_log(&self, a: &BellMixture, b: &BellMixture) -> Result<(McSummary, Vec<TrialRecord>)> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("at least one trial is required".into()));
        }
        let maps = pcd_conditional_maps(&self.coeffs)?;
        let records: Vec<TrialRecord> = map_indexed(self.trials, |i| self.trial(i, a, b, &maps))
            .into_iter()
            .collect::<Result<_>>()?;

        let mut kept_acc = Accumulator::default();
        let mut out_acc = [Accumulator::default(); 4];
        let mut disc_acc = [Accumulator::default(); 4];
        let (mut kept, mut lost) = (0, 0);
        for r in &records {
            kept_acc.push(if r.kept { 1.0 } else { 0.0 });
            match (r.kept, r.ab_weights) {
                (true, Some(w)) => {
                    kept += 1;
                    out_acc.iter_mut().zip(w).for_each(|(acc, x)| acc.push(x));
                }
                (false, Some(w)) => disc_acc.iter_mut().zip(w).for_each(|(acc, x)| acc.push(x)),
                (_, None) => lost += 1,
            }
        }
        let mixture = |acc: &[Accumulator; 4]| -> Result<Option<BellMixture>> {
            if acc[0].estimate().count == 0 {
                return Ok(None);
            }
            let w = acc.map(|a| a.estimate().mean);
            let sum: f64 = w.iter().sum();
            BellMixture::from_weights(w.map(|x| x / sum)).map(Some)
        };
        let summary = McSummary {
            trials: self.trials,
            kept,
            lost,
            kept_fraction: kept_acc.estimate(),
            output_estimate: mixture(&out_acc)?,
            output_stderr: out_acc.map(|a| {
                let e = a.estimate();
                if e.count == 0 {
                    f64::NAN
                } else {
                    e.stderr
                }
            }),
            discarded_estimate: mixture(&disc_acc)?,
        };
        Ok((summary, records))
    }

    fn trial(&self, index: usize, a: &BellMixture, b: &BellMixture, maps: &[PcdConditionalMap]) -> Result<TrialRecord> {
        let mut rng = stream_rng(self.seed, index as u64);
        let pair_ab = a.sample(&mut rng);
        let pair_cd = b.sample(&mut rng);
        let mut state = PureState::bell(pair_ab, "A", "B")?.tensor(&PureState::bell(pair_cd, "C", "D")?)?;
        if self.hadamard_first {
            for k in [A, B, C, D] {
                state = state.apply_single_qubit(k, &gates::HADAMARD)?;
            }
        }

        let mut record = TrialRecord {
            index,
            pair_ab: pair_ab.into(),
            pair_cd: pair_cd.into(),
            alice: Herald::Invalid,
            bob: Herald::Invalid,
            kept: false,
            ab_weights: None,
        };
        let (alice, s) = herald_step(&state, &[A, C], maps, &mut rng)?;
        record.alice = alice;
        let Some(s) = s else { return Ok(record) };
        let (bob, s) = herald_step(&s, &[B, D], maps, &mut rng)?;
        record.bob = bob;
        let Some(s) = s else { return Ok(record) };
        record.kept = alice == bob;

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = [C64::new(h, 0.0), C64::new(h, 0.0)];
        let minus = [C64::new(h, 0.0), C64::new(-h, 0.0)];
        let mut signs = [false; 2];
        let mut s = s;
        for sign in signs.iter_mut() {
            // C sits at index 2; once it is removed, D moves there
            let on_plus = s.contract_factor(C, &plus)?;
            let on_minus = s.contract_factor(C, &minus)?;
            let p_plus = on_plus.norm_sqr() / (on_plus.norm_sqr() + on_minus.norm_sqr());
            *sign = rng.random::<f64>() >= p_plus;
            s = if *sign { on_minus } else { on_plus }.normalized()?;
        }
        if signs[0] != signs[1] {
            s = s.apply_single_qubit(A, &gates::PAULI_Z)?;
        }
        record.ab_weights = Some(bell_weights(&s)?);
        Ok(record)
    }
}

/// Samples a herald of the parity check on `factors`. Returns the herald and
/// the renormalized post state, or `(Invalid, None)` on photon loss.
fn herald_step<R: Rng + ?Sized>(
    state: &PureState,
    factors: &[usize],
    maps: &[PcdConditionalMap],
    rng: &mut R,
) -> Result<(Herald, Option<PureState>)> {
    let norm = state.norm_sqr();
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for m in maps {
        let post = state.apply_local(factors, &m.map)?;
        acc += post.norm_sqr() / norm;
        if u < acc {
            return Ok((m.herald, Some(post.normalized()?)));
        }
    }
    Ok((Herald::Invalid, None))
}

/// Monte Carlo purification of pairs drawn from `a` (AB) and `b` (CD).
pub fn simulate_purification_mc(
    a: &BellMixture,
    b: &BellMixture,
    coeffs: &ScatterCoefficients,
    trials: usize,
    seed: u64,
) -> Result<McSummary> {
    PurificationMc::new(*coeffs, trials, seed).run(a, b)
}
