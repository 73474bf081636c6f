//! Optical elements. Linear elements act as mode maps; the relabelling
//! elements (PBS, hologram, dichroic mirror, delay) move photons between
//! labels; SFG and time coalescing rewrite whole monomials.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::smallvec;

use crate::error::{Error, Result};
use crate::fock::{
    apply_mode_map, path_label, FreqBand, Image, Mode, ModeMap, Monomial, Oam, PathLabel,
    PhotonState, Polarization, TimeTag,
};

/// Slack allowed on singular values of effective maps.
pub const CONTRACTION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SfgType {
    #[serde(rename = "type_i")]
    TypeI,
    #[serde(rename = "type_ii")]
    TypeII,
}

/// `(path, polarization)` routed to an output path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolRoute {
    pub path: PathLabel,
    pub pol: Polarization,
    pub out: PathLabel,
}

/// `(path, OAM value)` routed to an output path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OamRoute {
    pub path: PathLabel,
    pub oam: Oam,
    pub out: PathLabel,
}

/// `(path, frequency band)` routed to an output path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandRoute {
    pub path: PathLabel,
    pub band: FreqBand,
    pub out: PathLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ElementOp {
    /// `a† → √t a† + √(1−t) b†`, `b† → √(1−t) a† − √t b†`.
    #[serde(rename = "bs")]
    BeamSplitter { a: Mode, b: Mode, t: f64 },

    /// Moves each photon to the output path bound to its `(path, pol)`.
    #[serde(rename = "pbs")]
    PolarizingBs { routes: Vec<PolRoute> },

    /// Plate mounted at `angle`; rotates polarization by twice that.
    #[serde(rename = "hwp")]
    HalfWavePlate { h: Mode, v: Mode, angle: f64 },

    /// Sorts `±1` OAM into paths and leaves the photon with OAM 0.
    #[serde(rename = "hologram")]
    Hologram { routes: Vec<OamRoute> },

    #[serde(rename = "delay")]
    Delay {
        path: PathLabel,
        pol: Polarization,
        tag: TimeTag,
    },

    /// Erases time tags from two-photon terms whose photons share a tag.
    #[serde(rename = "coalesce")]
    TimeCoalesce,

    #[serde(rename = "phase")]
    PhaseShift { mode: Mode, phi: f64 },

    #[serde(rename = "dichroic")]
    DichroicRouter { routes: Vec<BandRoute> },

    /// Two fundamental photons on `first` and `second` fuse into one doubled
    /// photon on `out` when their polarizations match the rule table.
    #[serde(rename = "sfg")]
    Sfg {
        sfg_type: SfgType,
        first: PathLabel,
        second: PathLabel,
        out: PathLabel,
    },

    /// Arbitrary contractive linear map. Modes outside its inputs pass
    /// through; inputs with no outputs are discarded.
    #[serde(rename = "map")]
    EffectiveMap { map: ModeMap },
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn check_angle(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{what} must be finite, got {x}")))
    }
}

impl ElementOp {
    pub fn beam_splitter(a: Mode, b: Mode, t: f64) -> Result<Self> {
        let op = ElementOp::BeamSplitter { a, b, t };
        op.validate()?;
        Ok(op)
    }

    pub fn half_wave_plate(h: Mode, v: Mode, angle: f64) -> Result<Self> {
        let op = ElementOp::HalfWavePlate { h, v, angle };
        op.validate()?;
        Ok(op)
    }

    /// HWP on the `H`/`V` pair sharing all other labels with `template`.
    pub fn hwp_on(template: Mode, angle: f64) -> Result<Self> {
        ElementOp::half_wave_plate(
            template.with_pol(Polarization::H),
            template.with_pol(Polarization::V),
            angle,
        )
    }

    pub fn polarizing_bs<P: AsRef<str>>(routes: &[(P, Polarization, P)]) -> Result<Self> {
        let routes = routes
            .iter()
            .map(|(p, pol, out)| {
                Ok(PolRoute {
                    path: path_label(p.as_ref())?,
                    pol: *pol,
                    out: path_label(out.as_ref())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let op = ElementOp::PolarizingBs { routes };
        op.validate()?;
        Ok(op)
    }

    pub fn hologram<P: AsRef<str>>(routes: &[(P, Oam, P)]) -> Result<Self> {
        let routes = routes
            .iter()
            .map(|(p, oam, out)| {
                Ok(OamRoute {
                    path: path_label(p.as_ref())?,
                    oam: *oam,
                    out: path_label(out.as_ref())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let op = ElementOp::Hologram { routes };
        op.validate()?;
        Ok(op)
    }

    pub fn delay(path: &str, pol: Polarization, tag: TimeTag) -> Result<Self> {
        let op = ElementOp::Delay {
            path: path_label(path)?,
            pol,
            tag,
        };
        op.validate()?;
        Ok(op)
    }

    pub fn phase_shift(mode: Mode, phi: f64) -> Result<Self> {
        let op = ElementOp::PhaseShift { mode, phi };
        op.validate()?;
        Ok(op)
    }

    pub fn dichroic_router<P: AsRef<str>>(routes: &[(P, FreqBand, P)]) -> Result<Self> {
        let routes = routes
            .iter()
            .map(|(p, band, out)| {
                Ok(BandRoute {
                    path: path_label(p.as_ref())?,
                    band: *band,
                    out: path_label(out.as_ref())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let op = ElementOp::DichroicRouter { routes };
        op.validate()?;
        Ok(op)
    }

    pub fn sfg(sfg_type: SfgType, first: &str, second: &str, out: &str) -> Result<Self> {
        let op = ElementOp::Sfg {
            sfg_type,
            first: path_label(first)?,
            second: path_label(second)?,
            out: path_label(out)?,
        };
        op.validate()?;
        Ok(op)
    }

    pub fn effective_map(map: ModeMap) -> Result<Self> {
        let op = ElementOp::EffectiveMap { map };
        op.validate()?;
        Ok(op)
    }

    /// Drops every photon found in `modes`.
    pub fn discard(modes: Vec<Mode>) -> Result<Self> {
        let matrix = DMatrix::zeros(0, modes.len());
        ElementOp::effective_map(ModeMap::new(modes, Vec::new(), matrix)?)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ElementOp::BeamSplitter { .. } => "bs",
            ElementOp::PolarizingBs { .. } => "pbs",
            ElementOp::HalfWavePlate { .. } => "hwp",
            ElementOp::Hologram { .. } => "hologram",
            ElementOp::Delay { .. } => "delay",
            ElementOp::TimeCoalesce => "coalesce",
            ElementOp::PhaseShift { .. } => "phase",
            ElementOp::DichroicRouter { .. } => "dichroic",
            ElementOp::Sfg { .. } => "sfg",
            ElementOp::EffectiveMap { .. } => "map",
        }
    }

    /// Checks the element's parameters and bindings.
    pub fn validate(&self) -> Result<()> {
        match self {
            ElementOp::BeamSplitter { a, b, t } => {
                if !(0.0..=1.0).contains(t) {
                    return Err(Error::Parameter(format!(
                        "transmission {t} is outside [0, 1]"
                    )));
                }
                if a == b {
                    return Err(Error::Binding(format!("beam splitter ports coincide: {a}")));
                }
            }
            ElementOp::HalfWavePlate { h, v, angle } => {
                check_angle(*angle, "plate angle")?;
                if h.pol != Polarization::H || v.pol != Polarization::V {
                    return Err(Error::Binding(format!(
                        "wave plate needs an H mode and a V mode, got {h} and {v}"
                    )));
                }
                if h.with_pol(Polarization::V) != *v {
                    return Err(Error::Binding(format!(
                        "wave plate modes {h} and {v} differ beyond polarization"
                    )));
                }
            }
            ElementOp::PolarizingBs { routes } => {
                let keys: BTreeSet<_> = routes.iter().map(|r| (r.path, r.pol)).collect();
                if keys.len() != routes.len() {
                    return Err(Error::Binding("PBS input bound twice".into()));
                }
                if routes.iter().any(|r| r.pol == Polarization::Unset) {
                    return Err(Error::Binding("PBS routes need H or V".into()));
                }
            }
            ElementOp::Hologram { routes } => {
                let keys: BTreeSet<_> = routes.iter().map(|r| (r.path, r.oam)).collect();
                if keys.len() != routes.len() {
                    return Err(Error::Binding("hologram input bound twice".into()));
                }
                let paths: BTreeSet<_> = routes.iter().map(|r| r.path).collect();
                for p in paths {
                    for oam in [Oam::Plus, Oam::Minus] {
                        if !keys.contains(&(p, oam)) {
                            return Err(Error::Binding(format!(
                                "hologram on {p} lacks a route for OAM {}",
                                oam.symbol()
                            )));
                        }
                    }
                }
                if routes
                    .iter()
                    .any(|r| !matches!(r.oam, Oam::Plus | Oam::Minus))
                {
                    return Err(Error::Binding("hologram routes cover OAM ±1 only".into()));
                }
            }
            ElementOp::Delay { tag, .. } => {
                if *tag == TimeTag::Untagged {
                    return Err(Error::Parameter("delay tag must be th or tv".into()));
                }
            }
            ElementOp::TimeCoalesce => {}
            ElementOp::PhaseShift { phi, .. } => check_angle(*phi, "phase")?,
            ElementOp::DichroicRouter { routes } => {
                let keys: BTreeSet<_> = routes.iter().map(|r| (r.path, r.band)).collect();
                if keys.len() != routes.len() {
                    return Err(Error::Binding("dichroic input bound twice".into()));
                }
                for r in routes {
                    for band in [FreqBand::Fundamental, FreqBand::Doubled] {
                        if !keys.contains(&(r.path, band)) {
                            return Err(Error::Binding(format!(
                                "dichroic mirror on {} lacks a route for band {}",
                                r.path,
                                band.symbol()
                            )));
                        }
                    }
                }
            }
            ElementOp::Sfg { first, second, .. } => {
                if first == second {
                    return Err(Error::Binding("SFG inputs must be distinct paths".into()));
                }
            }
            ElementOp::EffectiveMap { map } => {
                if map
                    .matrix()
                    .iter()
                    .any(|z| !z.re.is_finite() || !z.im.is_finite())
                {
                    return Err(Error::Parameter("map has non-finite entries".into()));
                }
                let sv = map.max_singular_value();
                if sv > 1.0 + CONTRACTION_TOL {
                    return Err(Error::Parameter(format!(
                        "map is expansive (largest singular value {sv})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Matrix form for the linear kinds that have one.
    pub fn linear_map(&self) -> Option<ModeMap> {
        let real = |x: f64| Complex64::new(x, 0.0);
        match self {
            ElementOp::BeamSplitter { a, b, t } => {
                let (r, s) = (t.sqrt(), (1.0 - t).sqrt());
                let m = DMatrix::from_row_slice(2, 2, &[real(r), real(s), real(s), real(-r)]);
                ModeMap::square(vec![*a, *b], m).ok()
            }
            ElementOp::HalfWavePlate { h, v, angle } => {
                let (s, c) = (2.0 * angle).sin_cos();
                let m = DMatrix::from_row_slice(2, 2, &[real(c), real(s), real(s), real(-c)]);
                ModeMap::square(vec![*h, *v], m).ok()
            }
            ElementOp::PhaseShift { mode, phi } => {
                let m = DMatrix::from_element(1, 1, Complex64::from_polar(1.0, *phi));
                ModeMap::square(vec![*mode], m).ok()
            }
            ElementOp::EffectiveMap { map } => Some(map.clone()),
            _ => None,
        }
    }

    /// Whether applying this element may lower the squared norm.
    pub fn may_lose_norm(&self) -> bool {
        match self {
            ElementOp::EffectiveMap { map } => {
                !(map.is_square_on_inputs() && map.is_unitary(1e-12))
            }
            ElementOp::TimeCoalesce => true,
            _ => false,
        }
    }

    pub fn apply(&self, s: &PhotonState) -> Result<PhotonState> {
        match self {
            ElementOp::BeamSplitter { .. }
            | ElementOp::HalfWavePlate { .. }
            | ElementOp::PhaseShift { .. }
            | ElementOp::EffectiveMap { .. } => {
                let map = self.linear_map().ok_or_else(|| {
                    Error::Parameter(format!("{} has no matrix form", self.kind_name()))
                })?;
                apply_mode_map(s, &map)
            }
            ElementOp::PolarizingBs { routes } => {
                let bound: BTreeSet<_> = routes.iter().map(|r| r.path).collect();
                s.substitute(|m| {
                    if !bound.contains(&m.path) {
                        return Ok(None);
                    }
                    let route = routes
                        .iter()
                        .find(|r| r.path == m.path && r.pol == m.pol)
                        .ok_or_else(|| Error::Routing(format!("{m} at PBS")))?;
                    Ok(Some(smallvec![(
                        Mode {
                            path: route.out,
                            ..*m
                        },
                        one()
                    )]))
                })
            }
            ElementOp::Hologram { routes } => {
                let bound: BTreeSet<_> = routes.iter().map(|r| r.path).collect();
                s.substitute(|m| {
                    if !bound.contains(&m.path) {
                        return Ok(None);
                    }
                    let route = routes
                        .iter()
                        .find(|r| r.path == m.path && r.oam == m.oam)
                        .ok_or_else(|| Error::Routing(format!("{m} at hologram")))?;
                    let img = Mode {
                        path: route.out,
                        oam: Oam::Zero,
                        ..*m
                    };
                    Ok(Some(smallvec![(img, one())]))
                })
            }
            ElementOp::Delay { path, pol, tag } => s.substitute(|m| {
                if m.path != *path || m.pol != *pol {
                    return Ok(None);
                }
                if m.tag != TimeTag::Untagged {
                    return Err(Error::Contract(format!("{m} is already delayed")));
                }
                Ok(Some(smallvec![(m.with_tag(*tag), one())]))
            }),
            ElementOp::TimeCoalesce => time_coalesce(s),
            ElementOp::DichroicRouter { routes } => s.substitute(|m| {
                Ok(routes
                    .iter()
                    .find(|r| r.path == m.path && r.band == m.band)
                    .map(|r| -> Image { smallvec![(Mode { path: r.out, ..*m }, one())] }))
            }),
            ElementOp::Sfg {
                sfg_type,
                first,
                second,
                out,
            } => s.rewrite(|mono| Ok(vec![sfg_rewrite(mono, *sfg_type, *first, *second, *out)])),
        }
    }
}

/// Applies the coalescing rule: two photons carrying the same delay tag lose
/// it. Every term must hold exactly two photons.
pub fn time_coalesce(s: &PhotonState) -> Result<PhotonState> {
    s.rewrite(|mono| {
        if mono.photon_number() != 2 {
            return Err(Error::Contract(format!(
                "coalescing needs two-photon terms, found {}",
                mono.photon_number()
            )));
        }
        let modes = mono.modes();
        let tag = modes[0].tag;
        if tag != TimeTag::Untagged && modes[1].tag == tag {
            let erased = Monomial::new(modes.iter().map(|m| m.with_tag(TimeTag::Untagged)))?;
            Ok(vec![(erased, one())])
        } else {
            Ok(vec![(mono.clone(), one())])
        }
    })
}

fn sfg_rewrite(
    mono: &Monomial,
    kind: SfgType,
    first: PathLabel,
    second: PathLabel,
    out: PathLabel,
) -> (Monomial, Complex64) {
    use Polarization::{H, V};
    let unchanged = (mono.clone(), one());
    let on = |p: PathLabel| {
        mono.modes()
            .iter()
            .enumerate()
            .filter(|(_, m)| m.path == p && m.band == FreqBand::Fundamental)
            .map(|(i, m)| (i, *m))
            .collect::<Vec<_>>()
    };
    let (a, b) = (on(first), on(second));
    if a.len() != 1 || b.len() != 1 {
        return unchanged;
    }
    let ((ia, ma), (ib, mb)) = (a[0], b[0]);
    let pol = match (kind, ma.pol, mb.pol) {
        (SfgType::TypeI, H, H) => V,
        (SfgType::TypeI, V, V) => H,
        (SfgType::TypeII, V, H) => V,
        (SfgType::TypeII, H, V) => H,
        _ => return unchanged,
    };
    let fused = Mode {
        path: out,
        pol,
        oam: Oam::Unset,
        tag: TimeTag::Untagged,
        band: FreqBand::Doubled,
    };
    let rest = mono
        .modes()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != ia && *i != ib)
        .map(|(_, m)| *m)
        .chain(std::iter::once(fused));
    match Monomial::new(rest) {
        Ok(m) => (m, one()),
        Err(_) => unchanged,
    }
}

/// Physical version of the polarization-dependent rotation used on the
/// first photon in the polarization/OAM analyzers: split `template`'s path
/// by polarization, rotate the `H` arm with a plate at `θ/2` and the `V` arm
/// with a plate at `45° − θ/2`, recombine on a balanced beam splitter and
/// keep one output port. The net map is `h† → (cosθ h† + sinθ v†)/√2`,
/// `v† → (cosθ h† − sinθ v†)/√2`.
pub fn split_rotate_merge(template: Mode, theta: f64) -> Result<Vec<ElementOp>> {
    use Polarization::{H, V};
    let base = template.path_str().to_string();
    let h_arm = format!("{base}.h");
    let v_arm = format!("{base}.v");
    let arm = |p: &str, pol| -> Result<Mode> { Ok(template.with_path(p)?.with_pol(pol)) };
    Ok(vec![
        ElementOp::polarizing_bs(&[
            (base.as_str(), H, h_arm.as_str()),
            (base.as_str(), V, v_arm.as_str()),
        ])?,
        ElementOp::hwp_on(arm(&h_arm, H)?, theta / 2.0)?,
        ElementOp::hwp_on(arm(&v_arm, H)?, std::f64::consts::FRAC_PI_4 - theta / 2.0)?,
        ElementOp::beam_splitter(arm(&h_arm, H)?, arm(&v_arm, H)?, 0.5)?,
        ElementOp::beam_splitter(arm(&h_arm, V)?, arm(&v_arm, V)?, 0.5)?,
        ElementOp::discard(vec![arm(&v_arm, H)?, arm(&v_arm, V)?])?,
        ElementOp::polarizing_bs(&[
            (h_arm.as_str(), H, base.as_str()),
            (h_arm.as_str(), V, base.as_str()),
        ])?,
    ])
}

/// The reference rotation for the first photon, `h† → cosθ h† + sinθ v†`,
/// `v† → cosθ h† − sinθ v†`, scaled by `scale`.
pub fn reference_rotation(template: Mode, theta: f64, scale: f64) -> Result<ModeMap> {
    let (s, c) = theta.sin_cos();
    ModeMap::square_real(
        vec![
            template.with_pol(Polarization::H),
            template.with_pol(Polarization::V),
        ],
        &[&[scale * c, scale * c], &[scale * s, -scale * s]],
    )
}
