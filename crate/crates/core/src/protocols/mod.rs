//! Prebuilt discrimination protocols: input families, circuits, readout
//! stages and detector banks, plus the reference output expansions used as
//! fixtures.

mod ancilla;
mod baseline;
mod hyper;
mod sfg;
mod timebin;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::detection::DetectorSpec;
use crate::discrimination::{analyze, DiscriminationReport, Normalization, TIMEBIN_EXCLUSION};
use crate::elements::ElementOp;
use crate::error::{Error, Result};
use crate::fock::{Mode, PhotonState, Polarization};

pub use ancilla::ancilla_instance;
pub use timebin::{fit_timebin, TimebinFit, TimebinSettings};

/// Residual above which a reconstructed circuit is reported as unverified.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolId {
    HyperMomentum,
    HyperPolarization,
    HyperOam,
    Timebin,
    Ancilla,
    Sfg,
    Baseline,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 7] = [
        ProtocolId::HyperMomentum,
        ProtocolId::HyperPolarization,
        ProtocolId::HyperOam,
        ProtocolId::Timebin,
        ProtocolId::Ancilla,
        ProtocolId::Sfg,
        ProtocolId::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::HyperMomentum => "hyper_momentum",
            ProtocolId::HyperPolarization => "hyper_polarization",
            ProtocolId::HyperOam => "hyper_oam",
            ProtocolId::Timebin => "timebin",
            ProtocolId::Ancilla => "ancilla",
            ProtocolId::Sfg => "sfg",
            ProtocolId::Baseline => "baseline",
        }
    }

    /// Whether the protocol is parametrized by a pair `(θ₁, θ₂)` rather
    /// than a single `θ`.
    pub fn takes_two_angles(self) -> bool {
        matches!(self, ProtocolId::Ancilla | ProtocolId::Sfg)
    }

    pub fn has_literal(self) -> bool {
        matches!(
            self,
            ProtocolId::HyperMomentum
                | ProtocolId::HyperPolarization
                | ProtocolId::HyperOam
                | ProtocolId::Timebin
        )
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ProtocolId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown protocol {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildMode {
    /// Evolve the inputs through the reconstructed circuit.
    Circuit,
    /// Start from the reference post-circuit expansions.
    Literal,
}

impl FromStr for BuildMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circuit" => Ok(BuildMode::Circuit),
            "literal" => Ok(BuildMode::Literal),
            other => Err(Error::Parameter(format!("unknown mode {other:?}"))),
        }
    }
}

/// State parameters. Single-angle protocols read `theta`; the two-angle
/// ones read `theta1` and `theta2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub theta: Option<f64>,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    /// Ancilla pair count (1 or 2).
    pub pairs: usize,
}

impl Params {
    pub fn theta(theta: f64) -> Self {
        Params {
            theta: Some(theta),
            theta1: None,
            theta2: None,
            pairs: 1,
        }
    }

    pub fn angles(theta1: f64, theta2: f64) -> Self {
        Params {
            theta: None,
            theta1: Some(theta1),
            theta2: Some(theta2),
            pairs: 1,
        }
    }

    pub fn with_pairs(self, pairs: usize) -> Self {
        Params { pairs, ..self }
    }

    fn need(value: Option<f64>, name: &str) -> Result<f64> {
        let v = value.ok_or_else(|| Error::Parameter(format!("missing {name}")))?;
        if v.is_finite() && v > 0.0 && v < FRAC_PI_2 {
            Ok(v)
        } else {
            Err(Error::Domain(format!("{name} = {v} is not in (0, π/2)")))
        }
    }

    pub fn single(&self) -> Result<f64> {
        Params::need(self.theta, "theta")
    }

    pub fn pair(&self) -> Result<(f64, f64)> {
        Ok((
            Params::need(self.theta1, "theta1")?,
            Params::need(self.theta2, "theta2")?,
        ))
    }
}

/// Whether a reconstructed circuit reproduces the reference expansions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verification {
    /// Circuit output agrees with the reference expansion (up to a global
    /// phase per state) within [`VERIFY_TOL`].
    Verified {
        residual: f64,
    },
    Unverified {
        residual: f64,
    },
    /// No reference expansion exists to compare against.
    NoFixture,
}

#[derive(Clone, Debug)]
pub struct ProtocolInstance {
    pub id: ProtocolId,
    pub params: Params,
    pub build_mode: BuildMode,
    pub inputs: Vec<(String, PhotonState)>,
    /// Everything up to the detection stage.
    pub circuit: Circuit,
    /// Final relabelling onto detector paths.
    pub readout: Circuit,
    pub detectors: DetectorSpec,
    pub normalization: Normalization,
    pub verification: Verification,
}

/// Outcome of pushing every input through an instance.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub report: DiscriminationReport,
    /// States at the detectors, before any heralding renormalization.
    pub outputs: Vec<(String, PhotonState)>,
    /// `1 − ‖output‖²` per input.
    pub discarded: Vec<f64>,
}

impl ProtocolInstance {
    /// State just before the readout stage for input `index`.
    pub fn pre_readout(&self, index: usize) -> Result<PhotonState> {
        let input = self
            .inputs
            .get(index)
            .ok_or_else(|| Error::Parameter(format!("no input {index}")))?;
        match self.build_mode {
            BuildMode::Circuit => Ok(self.circuit.apply(&input.1)?.state),
            BuildMode::Literal => literal_output(self.id, index + 1, &self.params),
        }
    }

    /// Circuit followed by readout, as one exportable circuit.
    pub fn full_circuit(&self) -> Circuit {
        let mut full = Circuit::new(self.circuit.name());
        let offset = self.circuit.len();
        for (i, op) in self.circuit.elements().iter().enumerate() {
            if self.circuit.is_loss_point(i) {
                full.push_loss(op.clone());
            } else {
                full.push(op.clone());
            }
        }
        for (i, op) in self.readout.elements().iter().enumerate() {
            if self.readout.is_loss_point(i) {
                full.push_loss(op.clone());
            } else {
                full.push(op.clone());
            }
        }
        debug_assert_eq!(full.len(), offset + self.readout.len());
        full
    }

    pub fn run(&self, priors: Option<&[f64]>) -> Result<ProtocolRun> {
        let outputs = (0..self.inputs.len())
            .into_par_iter()
            .map(|i| {
                let pre = self.pre_readout(i)?;
                Ok((self.inputs[i].0.clone(), self.readout.apply(&pre)?.state))
            })
            .collect::<Result<Vec<_>>>()?;
        let discarded: Vec<f64> = outputs
            .iter()
            .map(|(_, s)| 1.0 - s.squared_norm())
            .collect();
        let report = match self.normalization {
            Normalization::Absolute => analyze(&outputs, &self.detectors, priors)?,
            Normalization::Heralded => {
                let survival: Vec<f64> = outputs.iter().map(|(_, s)| s.squared_norm()).collect();
                if survival.iter().any(|&p| p <= 0.0) {
                    return Err(Error::Contract(
                        "an input never reaches the detectors".into(),
                    ));
                }
                let conditioned: Vec<(String, PhotonState)> = outputs
                    .iter()
                    .zip(&survival)
                    .map(|((id, s), p)| (id.clone(), s.scale_real(1.0 / p.sqrt())))
                    .collect();
                let mut report = analyze(&conditioned, &self.detectors, priors)?;
                report.set_heralded(survival);
                report
            }
        };
        Ok(ProtocolRun {
            report,
            outputs,
            discarded,
        })
    }
}

/// Builds a fully wired protocol instance.
pub fn build(id: ProtocolId, params: &Params, mode: BuildMode) -> Result<ProtocolInstance> {
    if mode == BuildMode::Literal && !id.has_literal() {
        return Err(Error::Parameter(format!(
            "{id} has no reference output expansion"
        )));
    }
    match id {
        ProtocolId::HyperMomentum => hyper::momentum(params, mode),
        ProtocolId::HyperPolarization => hyper::polarization(params, mode),
        ProtocolId::HyperOam => hyper::oam(params, mode),
        ProtocolId::Timebin => timebin::instance(params, mode),
        ProtocolId::Ancilla => {
            let (t1, t2) = params.pair()?;
            ancilla_instance(t1, t2, params.pairs)
        }
        ProtocolId::Sfg => sfg::instance(params),
        ProtocolId::Baseline => baseline::instance(params),
    }
}

/// The reference post-circuit expansion of input `state_index` (1-based),
/// taken just before the detection stage.
pub fn literal_output(id: ProtocolId, state_index: usize, params: &Params) -> Result<PhotonState> {
    if !(1..=4).contains(&state_index) {
        return Err(Error::Parameter(format!(
            "state index {state_index} is not in 1..=4"
        )));
    }
    match id {
        ProtocolId::HyperMomentum => hyper::momentum_literal(state_index, params.single()?),
        ProtocolId::HyperPolarization => hyper::polarization_literal(state_index, params.single()?),
        ProtocolId::HyperOam => hyper::oam_literal(state_index, params.single()?),
        ProtocolId::Timebin => timebin::literal(state_index, timebin_theta(params)?),
        other => Err(Error::Parameter(format!(
            "{other} has no reference output expansion"
        ))),
    }
}

pub(crate) fn timebin_theta(params: &Params) -> Result<f64> {
    let theta = params.single()?;
    if (theta - FRAC_PI_4).abs() < TIMEBIN_EXCLUSION {
        return Err(Error::Domain(format!(
            "θ = {theta} is within {TIMEBIN_EXCLUSION} of π/4"
        )));
    }
    Ok(theta)
}

/// `‖x‖² + ‖y‖² − 2|⟨x|y⟩|`: squared distance after the best global phase.
pub fn phase_insensitive_distance(x: &PhotonState, y: &PhotonState) -> f64 {
    let d = x.squared_norm() + y.squared_norm() - 2.0 * x.inner_product(y).norm();
    d.max(0.0)
}

pub(crate) fn pm(path: &str, pol: Polarization) -> Result<Mode> {
    Mode::polarized(path, pol)
}

/// Readout PBS sending `(p, H)` to path `pH` and `(p, V)` to `pV`.
pub(crate) fn readout_pbs(paths: &[&str]) -> Result<ElementOp> {
    let mut routes = Vec::new();
    for p in paths {
        routes.push((p.to_string(), Polarization::H, format!("{p}H")));
        routes.push((p.to_string(), Polarization::V, format!("{p}V")));
    }
    ElementOp::polarizing_bs(&routes)
}

/// Sum of two-photon terms `(amplitude, photon 1 mode, photon 2 mode)`.
pub(crate) fn two_photon(terms: &[(f64, Mode, Mode)]) -> Result<PhotonState> {
    let mut out = Vec::with_capacity(terms.len());
    for &(amp, a, b) in terms {
        out.push((
            crate::fock::Monomial::new([a, b])?,
            Complex64::new(amp, 0.0),
        ));
    }
    Ok(PhotonState::from_terms(out))
}

pub(crate) fn state_ids(prefix: &str) -> Vec<String> {
    (1..=4).map(|i| format!("{prefix}{i}")).collect()
}
