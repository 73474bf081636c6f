//! Photon-number-resolving detection and event enumeration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::fock::{FreqBand, Mode, Monomial, PhotonState, Polarization, TimeTag};

/// Mode labels a detector bank can tell apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Path,
    Polarization,
    TimeTag,
    FreqBand,
}

/// Which labels the detectors resolve and, optionally, which detectors
/// exist. A photon whose path (and polarization, when resolved) is not
/// covered by any listed detector makes the state unresolvable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub resolved: BTreeSet<Label>,
    #[serde(default)]
    pub detectors: Vec<Mode>,
}

impl DetectorSpec {
    pub fn new<I: IntoIterator<Item = Label>>(labels: I) -> Self {
        DetectorSpec {
            resolved: labels.into_iter().collect(),
            detectors: Vec::new(),
        }
    }

    /// Detectors sit on paths only; polarization was already converted into
    /// path labels by a readout PBS.
    pub fn paths() -> Self {
        DetectorSpec::new([Label::Path])
    }

    pub fn paths_and_times() -> Self {
        DetectorSpec::new([Label::Path, Label::TimeTag])
    }

    pub fn with_detectors(mut self, detectors: Vec<Mode>) -> Self {
        self.detectors = detectors;
        self
    }

    pub fn resolves(&self, label: Label) -> bool {
        self.resolved.contains(&label)
    }

    fn detector_id(&self, mode: &Mode) -> Result<String> {
        if !self.resolves(Label::Path) {
            return Err(Error::Spec("detectors must resolve the path label".into()));
        }
        if !self.detectors.is_empty() {
            let covered = self.detectors.iter().any(|d| {
                d.path == mode.path && (d.pol == Polarization::Unset || d.pol == mode.pol)
            });
            if !covered {
                return Err(Error::Spec(format!("{mode}: no detector on this mode")));
            }
        }
        let mut id = mode.path.to_string();
        if self.resolves(Label::Polarization) {
            match mode.pol {
                Polarization::Unset => {
                    return Err(Error::Spec(format!("{mode}: polarization is unset")));
                }
                pol => id.push_str(pol.symbol()),
            }
        }
        if self.resolves(Label::FreqBand) && mode.band == FreqBand::Doubled {
            id.push_str("~2f");
        }
        Ok(id)
    }
}

/// Arrival pattern of the photons in one detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrival {
    Same,
    Delayed,
}

/// Photons registered by a single detector.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Click {
    pub detector: String,
    pub count: usize,
    /// Arrival tag of each photon, sorted. Empty unless time tags are
    /// resolved.
    pub tags: SmallVec<[TimeTag; 2]>,
}

impl Click {
    pub fn arrival(&self) -> Arrival {
        if self.tags.windows(2).all(|w| w[0] == w[1]) {
            Arrival::Same
        } else {
            Arrival::Delayed
        }
    }
}

impl fmt::Display for Click {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detector)?;
        let tag = self.tags.first().copied().unwrap_or(TimeTag::Untagged);
        match (self.count, self.arrival()) {
            (_, Arrival::Delayed) => write!(f, "(x{},delay)", self.count),
            (1, Arrival::Same) if tag == TimeTag::Untagged => Ok(()),
            (1, Arrival::Same) => write!(f, "@{}", tag.symbol()),
            (n, Arrival::Same) if tag == TimeTag::Untagged => write!(f, "(x{n})"),
            (n, Arrival::Same) => write!(f, "(x{n})@{}", tag.symbol()),
        }
    }
}

/// Everything the detector bank reports for one shot.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetectionEvent {
    clicks: Vec<Click>,
}

impl DetectionEvent {
    pub fn clicks(&self) -> &[Click] {
        &self.clicks
    }

    pub fn photon_number(&self) -> usize {
        self.clicks.iter().map(|c| c.count).sum()
    }

    /// Canonical label such as `b1V+b2H` or `Ah1(x2,delay)`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DetectionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clicks.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// The event a single monomial produces.
pub fn signature(mono: &Monomial, spec: &DetectorSpec) -> Result<DetectionEvent> {
    let mut by_detector: BTreeMap<String, (usize, SmallVec<[TimeTag; 2]>)> = BTreeMap::new();
    for mode in mono.modes() {
        let id = spec.detector_id(mode)?;
        let entry = by_detector.entry(id).or_default();
        entry.0 += 1;
        if spec.resolves(Label::TimeTag) {
            entry.1.push(mode.tag);
        }
    }
    let clicks = by_detector
        .into_iter()
        .map(|(detector, (count, mut tags))| {
            tags.sort_unstable();
            Click {
                detector,
                count,
                tags,
            }
        })
        .collect();
    Ok(DetectionEvent { clicks })
}

/// Groups the terms of `s` by detection event. Probabilities are
/// `Σ |c_M|² Π n_m!` over the monomials producing each event; the list is
/// sorted by event label.
pub fn enumerate_events(
    s: &PhotonState,
    spec: &DetectorSpec,
) -> Result<Vec<(DetectionEvent, f64)>> {
    // Monomials are first grouped by what each photon looks like to the
    // detectors; the (costlier) event is built once per group.
    type Seen = SmallVec<[(u16, TimeTag); 8]>;
    let mut detectors: FxHashMap<Mode, u16> = FxHashMap::default();
    let mut names: Vec<String> = Vec::new();
    let mut groups: FxHashMap<Seen, f64> = FxHashMap::default();
    let with_tags = spec.resolves(Label::TimeTag);
    for (mono, amp) in s.terms() {
        let mut seen = Seen::new();
        for mode in mono.modes() {
            let d = match detectors.get(mode) {
                Some(&d) => d,
                None => {
                    let id = spec.detector_id(mode)?;
                    let d = match names.iter().position(|n| *n == id) {
                        Some(k) => k as u16,
                        None => {
                            names.push(id);
                            (names.len() - 1) as u16
                        }
                    };
                    detectors.insert(*mode, d);
                    d
                }
            };
            seen.push((
                d,
                if with_tags {
                    mode.tag
                } else {
                    TimeTag::Untagged
                },
            ));
        }
        seen.sort_unstable();
        *groups.entry(seen).or_insert(0.0) += amp.norm_sqr() * mono.weight();
    }
    let mut table: BTreeMap<DetectionEvent, f64> = BTreeMap::new();
    for (seen, p) in groups {
        let mut clicks: BTreeMap<&str, (usize, SmallVec<[TimeTag; 2]>)> = BTreeMap::new();
        for (d, tag) in seen {
            let entry = clicks.entry(names[usize::from(d)].as_str()).or_default();
            entry.0 += 1;
            if with_tags {
                entry.1.push(tag);
            }
        }
        let event = DetectionEvent {
            clicks: clicks
                .into_iter()
                .map(|(detector, (count, mut tags))| {
                    tags.sort_unstable();
                    Click {
                        detector: detector.to_string(),
                        count,
                        tags,
                    }
                })
                .collect(),
        };
        *table.entry(event).or_insert(0.0) += p;
    }
    let mut rows: Vec<_> = table.into_iter().collect();
    rows.sort_by_cached_key(|(e, _)| e.label());
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use Polarization::{H, V};

    fn pm(p: &str, pol: Polarization) -> Mode {
        Mode::polarized(p, pol).unwrap()
    }

    #[test]
    fn doubly_occupied_detector_counts_twice() {
        let c = Complex64::new(0.3, 0.4);
        let s = PhotonState::monomial([pm("a1H", H), pm("a1H", H)], c).unwrap();
        let events = enumerate_events(&s, &DetectorSpec::paths()).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].0.label(), "a1H(x2)");
        assert!((events[0].1 - 2.0 * c.norm_sqr()).abs() < 1e-15);
    }

    #[test]
    fn empty_state_has_no_events() {
        assert!(
            enumerate_events(&PhotonState::empty(), &DetectorSpec::paths())
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn labels_and_polarization_resolution() {
        let s =
            PhotonState::monomial([pm("b2", H), pm("b1", V)], Complex64::new(1.0, 0.0)).unwrap();
        let spec = DetectorSpec::new([Label::Path, Label::Polarization]);
        let events = enumerate_events(&s, &spec).unwrap();
        assert_eq!(events[0].0.label(), "b1V+b2H");
        let unpolarized =
            PhotonState::monomial([Mode::new("b1").unwrap()], Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            enumerate_events(&unpolarized, &spec),
            Err(Error::Spec(_))
        ));
    }

    #[test]
    fn time_tags_render() {
        let th = |p, pol| pm(p, pol).with_tag(TimeTag::Th);
        let tv = |p, pol| pm(p, pol).with_tag(TimeTag::Tv);
        let spec = DetectorSpec::paths_and_times();
        let one = Complex64::new(1.0, 0.0);
        let delayed = PhotonState::monomial([th("Av1", V), tv("Av1", V)], one).unwrap();
        let e = &enumerate_events(&delayed, &spec).unwrap()[0].0;
        assert_eq!(e.label(), "Av1(x2,delay)");
        assert_eq!(e.clicks()[0].arrival(), Arrival::Delayed);
        let split = PhotonState::monomial([th("Ah1", H), tv("Bh2", H)], one).unwrap();
        assert_eq!(
            enumerate_events(&split, &spec).unwrap()[0].0.label(),
            "Ah1@th+Bh2@tv"
        );
        let bunched = PhotonState::monomial([pm("Av1", V), pm("Av1", V)], one).unwrap();
        assert_eq!(
            enumerate_events(&bunched, &spec).unwrap()[0].0.label(),
            "Av1(x2)"
        );
    }

    #[test]
    fn detector_list_is_enforced() {
        let s = PhotonState::monomial([pm("x", H)], Complex64::new(1.0, 0.0)).unwrap();
        let spec = DetectorSpec::paths().with_detectors(vec![Mode::new("y").unwrap()]);
        assert!(matches!(enumerate_events(&s, &spec), Err(Error::Spec(_))));
    }
}
