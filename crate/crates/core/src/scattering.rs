//! Spin-dependent scattering of a single photon off a quantum dot in a
//! double-sided microcavity.
//!
//! A photon whose polarization and direction couple to the trion transition
//! for the current spin sees a "hot" cavity and is mostly reflected; any
//! other photon sees a "cold" cavity and is mostly transmitted. Reflection
//! flips both the polarization label and the direction. Rates are in units
//! of the cavity field decay rate κ, and the photon is taken resonant with
//! both the dot transition and the cavity mode, so every coefficient is real.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{Direction, Factor, FactorKind, LinearMap, PhotonMode, Polarization, PureState, Space, Spin, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Dot-cavity coupling strength.
    pub g: f64,
    /// Cavity field decay rate; the unit for all other rates.
    pub kappa: f64,
    /// Side-leakage rate.
    pub kappa_s: f64,
    /// Trion decay rate.
    pub gamma: f64,
}

impl CavityParams {
    /// Parameters in units of κ (κ = 1).
    pub fn new(g: f64, kappa_s: f64, gamma: f64) -> Result<Self> {
        let p = CavityParams {
            g,
            kappa: 1.0,
            kappa_s,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.g.is_nan() || self.g < 0.0 {
            return Err(Error::InvalidCavity(format!("g = {} must be non-negative", self.g)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidCavity(format!("kappa = {} must be positive", self.kappa)));
        }
        if !(self.kappa_s >= 0.0 && self.kappa_s.is_finite()) {
            return Err(Error::InvalidCavity(format!("kappa_s = {} must be non-negative", self.kappa_s)));
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return Err(Error::InvalidCavity(format!("gamma = {} must be positive", self.gamma)));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Result<ScatterCoefficients> {
        coefficients(self)
    }
}

/// Reflection and transmission amplitudes for hot (`r`, `t`) and cold
/// (`r0`, `t0`) cavities. `r − t = 1` and `r0 − t0 = 1`; the deficit
/// `1 − r² − t²` is the probability of losing the photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterCoefficients {
    pub r: f64,
    pub t: f64,
    pub r0: f64,
    pub t0: f64,
}

impl ScatterCoefficients {
    /// Strong-coupling, leak-free limit.
    pub const IDEAL: ScatterCoefficients = ScatterCoefficients {
        r: 1.0,
        t: 0.0,
        r0: 0.0,
        t0: -1.0,
    };

    pub fn hot_loss(&self) -> f64 {
        1.0 - self.r * self.r - self.t * self.t
    }

    pub fn cold_loss(&self) -> f64 {
        1.0 - self.r0 * self.r0 - self.t0 * self.t0
    }
}

/// Resonant hot- and cold-cavity coefficients.
pub fn coefficients(params: &CavityParams) -> Result<ScatterCoefficients> {
    params.validate()?;
    let CavityParams {
        g,
        kappa,
        kappa_s,
        gamma,
    } = *params;
    let cooperative = 2.0 * g * g / gamma;
    let (r, t) = if cooperative.is_finite() {
        let denom = kappa + kappa_s / 2.0 + cooperative;
        ((kappa_s / 2.0 + cooperative) / denom, -kappa / denom)
    } else {
        (1.0, 0.0)
    };
    let cold = kappa + kappa_s / 2.0;
    Ok(ScatterCoefficients {
        r,
        t,
        r0: (kappa_s / 2.0) / cold,
        t0: -kappa / cold,
    })
}

/// Whether `mode` couples to the trion transition of a dot in spin `spin`.
fn is_hot(mode: PhotonMode, spin: Spin) -> bool {
    let matched = matches!(
        (mode.polarization, mode.direction),
        (Polarization::R, Direction::Up) | (Polarization::L, Direction::Down)
    );
    match spin {
        Spin::Up => matched,
        Spin::Down => !matched,
    }
}

/// The eight ideal scattering rules, listed explicitly.
fn ideal_rule(mode: PhotonMode, spin: Spin) -> (f64, PhotonMode) {
    use PhotonMode as M;
    match (mode, spin) {
        (M::R_UP, Spin::Up) => (1.0, M::L_DOWN),
        (M::L_UP, Spin::Up) => (-1.0, M::L_UP),
        (M::R_DOWN, Spin::Up) => (-1.0, M::R_DOWN),
        (M::L_DOWN, Spin::Up) => (1.0, M::R_UP),
        (M::R_UP, Spin::Down) => (-1.0, M::R_UP),
        (M::L_UP, Spin::Down) => (1.0, M::R_DOWN),
        (M::R_DOWN, Spin::Down) => (1.0, M::L_UP),
        (M::L_DOWN, Spin::Down) => (-1.0, M::L_DOWN),
    }
}

/// Two-term practical rule: `(reflection amp, reflected mode)` and
/// `(transmission amp, same mode)`.
fn practical_rule(mode: PhotonMode, spin: Spin, c: &ScatterCoefficients) -> [(f64, PhotonMode); 2] {
    let (refl, trans) = if is_hot(mode, spin) { (c.r, c.t) } else { (c.r0, c.t0) };
    [(refl, mode.reflected()), (trans, mode)]
}

fn photon_spin_pair(photon: &Factor, spin: &Factor) -> Result<Vec<PhotonMode>> {
    let modes = match photon.kind() {
        FactorKind::Photon(m) => m.clone(),
        FactorKind::Spin => return Err(Error::BasisMismatch("first factor must be a photon".into())),
    };
    if !spin.is_spin() {
        return Err(Error::BasisMismatch("second factor must be a spin".into()));
    }
    Ok(modes)
}

fn build_map<F>(photon: &Factor, spin: &Factor, rule: F) -> Result<LinearMap>
where
    F: Fn(PhotonMode, Spin) -> Vec<(f64, PhotonMode)>,
{
    let modes = photon_spin_pair(photon, spin)?;
    let space = Space::new(vec![photon.clone(), spin.clone()])?;
    let n = space.dim();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for (pi, &mode) in modes.iter().enumerate() {
        for s in Spin::ALL {
            let col = pi * 2 + s.index();
            for (amp, out) in rule(mode, s) {
                if amp == 0.0 {
                    continue;
                }
                let po = modes.iter().position(|&x| x == out).ok_or_else(|| {
                    Error::OpenPhotonBasis(format!("{mode} with spin {s:?} scatters into {out}"))
                })?;
                m[(po * 2 + s.index(), col)] += C64::new(amp, 0.0);
            }
        }
    }
    LinearMap::new(space.clone(), space, m)
}

/// Ideal scattering as a map on `photon ⊗ spin`.
pub fn ideal_scatter_map(photon: &Factor, spin: &Factor) -> Result<LinearMap> {
    build_map(photon, spin, |m, s| vec![ideal_rule(m, s)])
}

/// Practical scattering as a map on `photon ⊗ spin`.
pub fn practical_scatter_map(photon: &Factor, spin: &Factor, coeffs: &ScatterCoefficients) -> Result<LinearMap> {
    build_map(photon, spin, |m, s| practical_rule(m, s, coeffs).to_vec())
}

fn split_pair(state: &PureState) -> Result<(&Factor, &Factor)> {
    match state.space().factors() {
        [p, s] => Ok((p, s)),
        f => Err(Error::BasisMismatch(format!(
            "scattering acts on photon ⊗ spin, got {} factors",
            f.len()
        ))),
    }
}

/// Applies the ideal scattering rules to a `photon ⊗ spin` state.
pub fn ideal_scatter(photon_spin_state: &PureState) -> Result<PureState> {
    let (p, s) = split_pair(photon_spin_state)?;
    ideal_scatter_map(p, s)?.apply(photon_spin_state)
}

/// Applies the practical scattering rules. The output is sub-normalized by
/// the photon-loss probability.
pub fn practical_scatter(photon_spin_state: &PureState, coeffs: &ScatterCoefficients) -> Result<PureState> {
    let (p, s) = split_pair(photon_spin_state)?;
    practical_scatter_map(p, s, coeffs)?.apply(photon_spin_state)
}
