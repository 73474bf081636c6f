//! Unambiguous-discrimination analysis over detection events.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detection::{enumerate_events, DetectorSpec};
use crate::error::{Error, Result};
use crate::fock::PhotonState;

/// Probabilities below this count as exactly zero for the other inputs.
pub const TAU_ZERO: f64 = 1e-12;
/// An event must be at least this likely to serve as a signature.
pub const TAU_POS: f64 = 1e-10;
/// Points closer than this to π/4 are outside the time-bin formula's domain.
pub const TIMEBIN_EXCLUSION: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub event: String,
    /// `P(event | input_i)` in input order.
    pub probabilities: Vec<f64>,
    /// Index of the input this event identifies, if unambiguous.
    pub unambiguous_for: Option<usize>,
}

/// How success probabilities relate to the pre-circuit inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Event probabilities are relative to the unit-norm inputs.
    Absolute,
    /// Event probabilities are conditioned on the photons reaching the
    /// recorded modes; `survival` holds the unconditioned weight.
    Heralded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub inputs: Vec<String>,
    pub priors: Vec<f64>,
    pub event_table: Vec<EventRow>,
    pub unambiguous_map: BTreeMap<String, String>,
    pub success_probability: f64,
    pub per_state_success: Vec<f64>,
    /// `Σ_events P(event | i)` for each input.
    pub detected_probability: Vec<f64>,
    pub normalization: Normalization,
    /// Fraction of each input's norm that reached the detectors.
    pub survival: Vec<f64>,
    /// `Σ_i prior_i · survival_i · per_state_success_i`.
    pub absolute_success_probability: f64,
}

pub fn uniform_priors(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_priors(priors: &[f64], n: usize) -> Result<()> {
    if priors.len() != n {
        return Err(Error::Input(format!(
            "{} priors supplied for {n} inputs",
            priors.len()
        )));
    }
    if priors.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Input("priors must be non-negative".into()));
    }
    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Input(format!("priors sum to {total}, not 1")));
    }
    Ok(())
}

/// Builds the event table for a set of output states and classifies each
/// event. `priors = None` means uniform.
pub fn analyze(
    outputs: &[(String, PhotonState)],
    detectors: &DetectorSpec,
    priors: Option<&[f64]>,
) -> Result<DiscriminationReport> {
    let n = outputs.len();
    let ids: BTreeSet<&str> = outputs.iter().map(|(id, _)| id.as_str()).collect();
    if ids.len() != n {
        return Err(Error::Input("duplicate state ids".into()));
    }
    let priors = match priors {
        Some(p) => {
            check_priors(p, n)?;
            p.to_vec()
        }
        None => uniform_priors(n),
    };

    let mut table: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, (_, state)) in outputs.iter().enumerate() {
        for (event, p) in enumerate_events(state, detectors)? {
            table.entry(event.label()).or_insert_with(|| vec![0.0; n])[i] += p;
        }
    }

    let mut event_table = Vec::with_capacity(table.len());
    let mut per_state_success = vec![0.0; n];
    let mut detected_probability = vec![0.0; n];
    let mut unambiguous_map = BTreeMap::new();
    for (event, probabilities) in table {
        let owner = classify(&probabilities);
        for (i, p) in probabilities.iter().enumerate() {
            detected_probability[i] += p;
        }
        if let Some(i) = owner {
            per_state_success[i] += probabilities[i];
            unambiguous_map.insert(event.clone(), outputs[i].0.clone());
        }
        event_table.push(EventRow {
            event,
            probabilities,
            unambiguous_for: owner,
        });
    }
    let success_probability = priors
        .iter()
        .zip(&per_state_success)
        .map(|(p, s)| p * s)
        .sum();

    Ok(DiscriminationReport {
        inputs: outputs.iter().map(|(id, _)| id.clone()).collect(),
        priors,
        event_table,
        unambiguous_map,
        success_probability,
        per_state_success,
        detected_probability,
        normalization: Normalization::Absolute,
        survival: vec![1.0; n],
        absolute_success_probability: success_probability,
    })
}

/// The single input for which the event is a signature, if any.
pub fn classify(probabilities: &[f64]) -> Option<usize> {
    let mut owner = None;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > TAU_POS {
            if owner.is_some() {
                return None;
            }
            owner = Some(i);
        } else if p >= TAU_ZERO {
            // Neither a signature nor negligible: it spoils the event for
            // whichever input would otherwise own it.
            return None;
        }
    }
    owner
}

impl DiscriminationReport {
    /// Marks the report as conditioned on reaching the detectors, with the
    /// given per-input survival probabilities.
    pub fn set_heralded(&mut self, survival: Vec<f64>) {
        self.absolute_success_probability = self
            .priors
            .iter()
            .zip(&survival)
            .zip(&self.per_state_success)
            .map(|((p, s), q)| p * s * q)
            .sum();
        self.normalization = Normalization::Heralded;
        self.survival = survival;
    }

    /// Inputs with a nonzero unambiguous probability.
    pub fn distinguishable_count(&self) -> usize {
        self.per_state_success.iter().filter(|&&p| p > 0.0).count()
    }

    /// Largest probability any other input assigns to an event claimed as a
    /// signature.
    pub fn max_cross_probability(&self) -> f64 {
        self.event_table
            .iter()
            .filter_map(|row| {
                let owner = row.unambiguous_for?;
                row.probabilities
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != owner)
                    .map(|(_, p)| *p)
                    .reduce(f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// Reference success formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    HyperMomentum,
    HyperPolarization,
    HyperOam,
    Timebin,
    AncillaGeneral,
    AncillaEqual,
    Sfg,
}

impl Formula {
    pub const ALL: [Formula; 7] = [
        Formula::HyperMomentum,
        Formula::HyperPolarization,
        Formula::HyperOam,
        Formula::Timebin,
        Formula::AncillaGeneral,
        Formula::AncillaEqual,
        Formula::Sfg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formula::HyperMomentum => "hyper_momentum",
            Formula::HyperPolarization => "hyper_polarization",
            Formula::HyperOam => "hyper_oam",
            Formula::Timebin => "timebin",
            Formula::AncillaGeneral => "ancilla_general",
            Formula::AncillaEqual => "ancilla_equal",
            Formula::Sfg => "sfg",
        }
    }

    /// Number of angles the formula takes.
    pub fn arity(self) -> usize {
        match self {
            Formula::AncillaGeneral | Formula::Sfg => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Formula::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parameter(format!("no closed form named {s:?}")))
    }
}

fn check_open_interval(theta: f64, name: &str) -> Result<()> {
    if theta.is_finite() && theta > 0.0 && theta < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} = {theta} is not in (0, π/2)"
        )))
    }
}

/// Evaluates a reference success formula. Angles: `[θ]` for the single
/// parameter protocols and `ancilla_equal` (θ₂), `[θ₁, θ₂]` for
/// `ancilla_general` and `sfg`.
pub fn closed_form(formula: Formula, angles: &[f64]) -> Result<f64> {
    if angles.len() != formula.arity() {
        return Err(Error::Parameter(format!(
            "{formula} takes {} angle(s), got {}",
            formula.arity(),
            angles.len()
        )));
    }
    for (k, &a) in angles.iter().enumerate() {
        check_open_interval(
            a,
            if angles.len() == 1 {
                "θ"
            } else if k == 0 {
                "θ₁"
            } else {
                "θ₂"
            },
        )?;
    }
    Ok(match formula {
        Formula::HyperMomentum | Formula::HyperPolarization | Formula::HyperOam => 0.5,
        Formula::Timebin => {
            let theta = angles[0];
            if (theta - FRAC_PI_4).abs() < TIMEBIN_EXCLUSION {
                return Err(Error::Domain(format!(
                    "θ = {theta} is within {TIMEBIN_EXCLUSION} of π/4"
                )));
            }
            (1.0 + theta.sin().powi(2)) / 4.0
        }
        Formula::AncillaGeneral => {
            let (t1, t2) = (angles[0], angles[1]);
            (-2.0 * (4.0 * t2).cos() - (2.0 * t1).cos() * ((4.0 * t2).cos() + 3.0) + 6.0) / 32.0
        }
        Formula::AncillaEqual => {
            let t2 = angles[0];
            t2.sin().powi(2) * (7.0 * (2.0 * t2).cos() + (4.0 * t2).cos() + 10.0) / 16.0
        }
        Formula::Sfg => 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Mode, Polarization};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn reference_formula_values() {
        assert!((closed_form(Formula::Timebin, &[PI / 6.0]).unwrap() - 0.3125).abs() < 1e-15);
        assert!(
            (closed_form(Formula::AncillaGeneral, &[FRAC_PI_4, FRAC_PI_4]).unwrap() - 0.25).abs()
                < 1e-15
        );
        assert!(
            (closed_form(Formula::AncillaEqual, &[FRAC_PI_4]).unwrap() - 0.28125).abs() < 1e-15
        );
        assert_eq!(closed_form(Formula::Sfg, &[0.3, 1.1]).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            closed_form(Formula::Timebin, &[FRAC_PI_4]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            closed_form(Formula::HyperOam, &[0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            closed_form(Formula::HyperOam, &[FRAC_PI_2]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            closed_form(Formula::Sfg, &[0.3]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(classify(&[0.25, 0.0, 0.0, 0.0]), Some(0));
        assert_eq!(classify(&[0.25, 1e-13, 0.0]), Some(0));
        assert_eq!(classify(&[0.25, 1e-11, 0.0]), None);
        assert_eq!(classify(&[0.25, 0.25]), None);
        assert_eq!(classify(&[1e-11, 0.0]), None);
    }

    #[test]
    fn identical_inputs_have_no_signatures() {
        let s = PhotonState::monomial(
            [Mode::polarized("x", Polarization::H).unwrap()],
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let r = analyze(
            &[("a".into(), s.clone()), ("b".into(), s)],
            &DetectorSpec::paths(),
            None,
        )
        .unwrap();
        assert_eq!(r.success_probability, 0.0);
        assert!(r.unambiguous_map.is_empty());
    }

    #[test]
    fn rejects_duplicates_and_bad_priors() {
        let s = PhotonState::empty();
        let outputs = [("a".to_string(), s.clone()), ("a".to_string(), s.clone())];
        assert!(matches!(
            analyze(&outputs, &DetectorSpec::paths(), None),
            Err(Error::Input(_))
        ));
        let outputs = [("a".to_string(), s.clone()), ("b".to_string(), s)];
        assert!(matches!(
            analyze(&outputs, &DetectorSpec::paths(), Some(&[0.6, 0.6])),
            Err(Error::Input(_))
        ));
    }
}
