//! Polarization analyzer that borrows the arrival-time degree of freedom.
//!
//! Each photon is split by polarization; the horizontal arms meet on a
//! balanced beam splitter and the vertical arms on an unbalanced one. The
//! two arm families are delayed by different amounts, rotated by plates and
//! merged back onto one port per photon. Photon pairs that end up sharing
//! an arrival time lose their time label.

use std::f64::consts::FRAC_PI_8;

use serde::{Deserialize, Serialize};

use super::{
    phase_insensitive_distance, pm, state_ids, timebin_theta, two_photon, BuildMode, Params,
    ProtocolId, ProtocolInstance, Verification, VERIFY_TOL,
};
use crate::circuits::Circuit;
use crate::detection::DetectorSpec;
use crate::discrimination::Normalization;
use crate::elements::ElementOp;
use crate::error::{Error, Result};
use crate::fock::{Mode, PhotonState, Polarization, TimeTag};
use crate::optimizer::nelder_mead;

use Polarization::{H, V};

/// Free parameters of the reconstructed circuit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimebinSettings {
    /// Transmission of the beam splitter joining the vertical arms.
    pub t_v: f64,
    /// Plate angle on the horizontal arms.
    pub alpha_h: f64,
    /// Plate angle on the vertical arms.
    pub alpha_v: f64,
}

impl TimebinSettings {
    /// The settings that reproduce the reference expansions.
    pub fn for_theta(theta: f64) -> Self {
        TimebinSettings {
            t_v: theta.cos().powi(2),
            alpha_h: theta / 2.0,
            alpha_v: FRAC_PI_8,
        }
    }
}

fn inputs(theta: f64) -> Result<Vec<(String, PhotonState)>> {
    let (s, c) = theta.sin_cos();
    let rows = [
        [(H, V, s), (V, H, c)],
        [(H, V, c), (V, H, -s)],
        [(H, H, s), (V, V, c)],
        [(H, H, c), (V, V, -s)],
    ];
    state_ids("psi")
        .into_iter()
        .zip(rows)
        .map(|(id, row)| {
            let terms: Vec<_> = row
                .iter()
                .map(|&(p1, p2, a)| Ok((a, pm("1", p1)?, pm("2", p2)?)))
                .collect::<Result<_>>()?;
            Ok((id, two_photon(&terms)?))
        })
        .collect()
}

pub fn circuit(settings: &TimebinSettings) -> Result<Circuit> {
    let mut c = Circuit::new("timebin");
    c.push(ElementOp::polarizing_bs(&[
        ("1", H, "1h"),
        ("1", V, "1v"),
        ("2", H, "2h"),
        ("2", V, "2v"),
    ])?);
    c.push(ElementOp::beam_splitter(pm("1h", H)?, pm("2h", H)?, 0.5)?);
    c.push(ElementOp::beam_splitter(
        pm("1v", V)?,
        pm("2v", V)?,
        settings.t_v,
    )?);
    for (path, pol, tag) in [
        ("1h", H, TimeTag::Th),
        ("2h", H, TimeTag::Th),
        ("1v", V, TimeTag::Tv),
        ("2v", V, TimeTag::Tv),
    ] {
        c.push(ElementOp::delay(path, pol, tag)?);
    }
    for (path, tag, angle) in [
        ("1h", TimeTag::Th, settings.alpha_h),
        ("2h", TimeTag::Th, settings.alpha_h),
        ("1v", TimeTag::Tv, settings.alpha_v),
        ("2v", TimeTag::Tv, settings.alpha_v),
    ] {
        c.push(ElementOp::hwp_on(pm(path, H)?.with_tag(tag), angle)?);
    }
    c.push(ElementOp::polarizing_bs(&[
        ("1h", H, "A"),
        ("1h", V, "A"),
        ("1v", H, "A"),
        ("1v", V, "A"),
        ("2h", H, "B"),
        ("2h", V, "B"),
        ("2v", H, "B"),
        ("2v", V, "B"),
    ])?);
    c.push(ElementOp::TimeCoalesce);
    Ok(c)
}

fn readout() -> Result<Circuit> {
    let mut r = Circuit::new("timebin-readout");
    r.push(ElementOp::polarizing_bs(&[
        ("A", H, "Ah1"),
        ("A", V, "Av1"),
        ("B", H, "Bh2"),
        ("B", V, "Bv2"),
    ])?);
    Ok(r)
}

/// Sum over the four inputs of the phase-insensitive distance between the
/// circuit output and the reference expansion.
fn residual(
    theta: f64,
    settings: &TimebinSettings,
    inputs: &[(String, PhotonState)],
) -> Result<f64> {
    let c = circuit(settings)?;
    let mut total = 0.0;
    for (i, (_, input)) in inputs.iter().enumerate() {
        let out = c.apply(input)?.state;
        total += phase_insensitive_distance(&out, &literal(i + 1, theta)?);
    }
    Ok(total)
}

pub(super) fn instance(params: &Params, mode: BuildMode) -> Result<ProtocolInstance> {
    let theta = timebin_theta(params)?;
    let settings = TimebinSettings::for_theta(theta);
    let inputs = inputs(theta)?;
    let r = residual(theta, &settings, &inputs)?;
    let verification = if r <= VERIFY_TOL {
        Verification::Verified { residual: r }
    } else {
        Verification::Unverified { residual: r }
    };
    Ok(ProtocolInstance {
        id: ProtocolId::Timebin,
        params: *params,
        build_mode: mode,
        inputs,
        circuit: circuit(&settings)?,
        readout: readout()?,
        detectors: DetectorSpec::paths_and_times(),
        normalization: Normalization::Absolute,
        verification,
    })
}

/// Port, polarization and delay tag of one photon in a reference term.
type Photon<'a> = (&'a str, Polarization, TimeTag);

/// Reference expansions at the two output ports `A` and `B`, before the
/// readout. The second one carries a corrected sign on its first term.
pub(super) fn literal(i: usize, theta: f64) -> Result<PhotonState> {
    let (s, c) = theta.sin_cos();
    let c2 = (2.0 * theta).cos();
    let m = |port: &str, pol, tag| -> Result<Mode> { Ok(pm(port, pol)?.with_tag(tag)) };
    let (th, tv, un) = (TimeTag::Th, TimeTag::Tv, TimeTag::Untagged);
    let rows: Vec<(f64, Photon, Photon)> = match i {
        1 => vec![
            (c / 2.0, ("A", H, th), ("A", H, tv)),
            (-c / 2.0, ("A", H, th), ("A", V, tv)),
            (s / 2.0, ("A", V, th), ("A", H, tv)),
            (-s / 2.0, ("A", V, th), ("A", V, tv)),
            (-c * c2 / 2.0, ("B", H, th), ("A", H, tv)),
            (c * c2 / 2.0, ("B", H, th), ("A", V, tv)),
            (-s * c2 / 2.0, ("B", V, th), ("A", H, tv)),
            (s * c2 / 2.0, ("B", V, th), ("A", V, tv)),
            (-c * c * s, ("B", H, th), ("B", H, tv)),
            (c * c * s, ("B", H, th), ("B", V, tv)),
            (-s * s * c, ("B", V, th), ("B", H, tv)),
            (s * s * c, ("B", V, th), ("B", V, tv)),
        ],
        2 => {
            let inner = [
                (-c / 2.0, ("A", H, th), ("B", H, tv)),
                (c / 2.0, ("A", H, th), ("B", V, tv)),
                (-s / 2.0, ("A", V, th), ("B", H, tv)),
                (s / 2.0, ("A", V, th), ("B", V, tv)),
                (-c * c2 / 2.0, ("B", H, th), ("B", H, tv)),
                (c * c2 / 2.0, ("B", H, th), ("B", V, tv)),
                (-s * c2 / 2.0, ("B", V, th), ("B", H, tv)),
                (s * c2 / 2.0, ("B", V, th), ("B", V, tv)),
                (c * c * s, ("B", H, th), ("A", H, tv)),
                (-c * c * s, ("B", H, th), ("A", V, tv)),
                (s * s * c, ("B", V, th), ("A", H, tv)),
                (-s * s * c, ("B", V, th), ("A", V, tv)),
            ];
            inner.into_iter().map(|(a, x, y)| (-a, x, y)).collect()
        }
        3 => {
            let d = s * s * c - c * c * s;
            vec![
                (s * c * c, ("A", H, un), ("A", H, un)),
                (-s * c * c, ("B", H, un), ("B", H, un)),
                (s / 2.0, ("A", V, un), ("A", V, un)),
                (-s / 2.0, ("B", V, un), ("B", V, un)),
                (d, ("A", H, un), ("A", V, un)),
                (-d, ("B", H, un), ("B", V, un)),
                (-c * c2 / 2.0, ("A", H, un), ("B", H, un)),
                (c * c2 / 2.0, ("A", H, un), ("B", V, un)),
                (c * c2 / 2.0, ("A", V, un), ("B", H, un)),
                (-c * c2 / 2.0, ("A", V, un), ("B", V, un)),
            ]
        }
        _ => {
            let d = s * s * c + c * c * s;
            vec![
                (c * c2 / 2.0, ("A", H, un), ("A", H, un)),
                (-c * c2 / 2.0, ("B", H, un), ("B", H, un)),
                (d, ("A", H, un), ("A", V, un)),
                (-d, ("B", H, un), ("B", V, un)),
                (s * c2 / 2.0, ("A", H, un), ("B", H, un)),
                (-s * c2 / 2.0, ("A", H, un), ("B", V, un)),
                (-s * c2 / 2.0, ("A", V, un), ("B", H, un)),
                (s * c2 / 2.0, ("A", V, un), ("B", V, un)),
            ]
        }
    };
    let mut terms = Vec::with_capacity(rows.len());
    for (a, x, y) in rows {
        terms.push((a, m(x.0, x.1, x.2)?, m(y.0, y.1, y.2)?));
    }
    two_photon(&terms)
}

/// Least-squares recovery of the circuit parameters at one angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimebinFitPoint {
    pub theta: f64,
    pub settings: TimebinSettings,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimebinFit {
    pub points: Vec<TimebinFitPoint>,
    pub max_residual: f64,
}

impl TimebinFit {
    pub fn verified(&self) -> bool {
        self.max_residual <= VERIFY_TOL
    }
}

/// Fits `(t_v, α_h, α_v)` independently at each grid angle by minimizing
/// the summed phase-insensitive distance to the reference expansions, from a
/// handful of starting points.
pub fn fit_timebin(grid: &[f64]) -> Result<TimebinFit> {
    let mut points = Vec::with_capacity(grid.len());
    for &theta in grid {
        let theta = timebin_theta(&Params::theta(theta))?;
        let inputs = inputs(theta)?;
        let objective = |x: &[f64]| -> f64 {
            let settings = TimebinSettings {
                t_v: x[0].cos().powi(2),
                alpha_h: x[1],
                alpha_v: x[2],
            };
            residual(theta, &settings, &inputs).unwrap_or(f64::INFINITY)
        };
        let mut best: Option<(Vec<f64>, f64)> = None;
        for u in [0.4, 1.2] {
            for (ah, av) in [(0.2, 0.3), (0.6, 0.6), (0.4, 0.1)] {
                let (x, fx) = nelder_mead(&objective, &[u, ah, av], 0.2, 1500, 1e-13).best();
                if best.as_ref().is_none_or(|b| fx < b.1) {
                    best = Some((x, fx));
                }
            }
        }
        let (x, fx) = best.ok_or_else(|| Error::Parameter("empty fit".into()))?;
        points.push(TimebinFitPoint {
            theta,
            settings: TimebinSettings {
                t_v: x[0].cos().powi(2),
                alpha_h: x[1],
                alpha_v: x[2],
            },
            residual: fx,
        });
    }
    let max_residual = points.iter().map(|p| p.residual).fold(0.0, f64::max);
    Ok(TimebinFit {
        points,
        max_residual,
    })
}
