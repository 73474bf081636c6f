//! Hyperentangled analyzers. The signal Bell-like state lives in one
//! degree of freedom; a second degree of freedom carries a fixed Bell
//! state and serves as the resource.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};

use super::{
    pm, readout_pbs, state_ids, two_photon, BuildMode, Params, ProtocolId, ProtocolInstance,
    Verification, VERIFY_TOL,
};
use crate::circuits::Circuit;
use crate::detection::DetectorSpec;
use crate::discrimination::Normalization;
use crate::elements::{split_rotate_merge, ElementOp};
use crate::error::Result;
use crate::fock::{Mode, Oam, PhotonState, Polarization};

use Polarization::{H, V};

/// Polarization Bell-like pairs `(pol₁, pol₂, amplitude)` for input `i`:
/// `s hh + c vv`, `c hh − s vv`, `s hv + c vh`, `c hv − s vh`.
fn bell_like_pol(i: usize, theta: f64) -> [(Polarization, Polarization, f64); 2] {
    let (s, c) = theta.sin_cos();
    match i {
        1 => [(H, H, s), (V, V, c)],
        2 => [(H, H, c), (V, V, -s)],
        3 => [(H, V, s), (V, H, c)],
        _ => [(H, V, c), (V, H, -s)],
    }
}

type PolTerms = Vec<(Polarization, Polarization, f64)>;

/// `1 − |⟨x|y⟩|² / (‖x‖²‖y‖²)`: zero when the states are parallel.
fn direction_residual(x: &PhotonState, y: &PhotonState) -> f64 {
    let (nx, ny) = (x.squared_norm(), y.squared_norm());
    if nx == 0.0 || ny == 0.0 {
        return 1.0;
    }
    (1.0 - x.inner_product(y).norm_sqr() / (nx * ny)).max(0.0)
}

/// Compares circuit output with the reference expansions. The heralded
/// analyzers are compared by direction only.
fn verify(
    circuit: &Circuit,
    inputs: &[(String, PhotonState)],
    literal: impl Fn(usize) -> Result<PhotonState>,
) -> Result<Verification> {
    let mut worst: f64 = 0.0;
    for (i, (_, input)) in inputs.iter().enumerate() {
        let out = circuit.apply(input)?.state;
        worst = worst.max(direction_residual(&out, &literal(i + 1)?));
    }
    Ok(if worst <= VERIFY_TOL {
        Verification::Verified { residual: worst }
    } else {
        Verification::Unverified { residual: worst }
    })
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    id: ProtocolId,
    params: &Params,
    mode: BuildMode,
    inputs: Vec<(String, PhotonState)>,
    circuit: Circuit,
    readout_paths: &[&str],
    normalization: Normalization,
    literal: impl Fn(usize) -> Result<PhotonState>,
) -> Result<ProtocolInstance> {
    let mut readout = Circuit::new(format!("{id}-readout"));
    readout.push(readout_pbs(readout_paths)?);
    let verification = verify(&circuit, &inputs, literal)?;
    Ok(ProtocolInstance {
        id,
        params: *params,
        build_mode: mode,
        inputs,
        circuit,
        readout,
        detectors: DetectorSpec::paths(),
        normalization,
        verification,
    })
}

// --- momentum -------------------------------------------------------------

pub(super) fn momentum(params: &Params, mode: BuildMode) -> Result<ProtocolInstance> {
    let theta = params.single()?;
    let (s, c) = theta.sin_cos();
    let pol = [(H, V, FRAC_1_SQRT_2), (V, H, FRAC_1_SQRT_2)];
    let spatial = |i: usize| match i {
        1 => [("a1", "a2", s), ("b1", "b2", c)],
        2 => [("a1", "a2", c), ("b1", "b2", -s)],
        3 => [("a1", "b2", s), ("b1", "a2", c)],
        _ => [("a1", "b2", c), ("b1", "a2", -s)],
    };
    let mut inputs = Vec::new();
    for (i, id) in state_ids("theta").into_iter().enumerate() {
        let mut terms = Vec::new();
        for (o1, o2, a) in spatial(i + 1) {
            for (p1, p2, b) in pol {
                terms.push((a * b, pm(o1, p1)?, pm(o2, p2)?));
            }
        }
        inputs.push((id, two_photon(&terms)?));
    }

    let mut circuit = Circuit::new("hyper_momentum");
    for path in ["b1", "b2"] {
        circuit.push(ElementOp::hwp_on(pm(path, H)?, FRAC_PI_4)?);
    }
    for pol in [H, V] {
        circuit.push(ElementOp::beam_splitter(
            pm("a1", pol)?,
            pm("b1", pol)?,
            0.5,
        )?);
    }
    for pol in [H, V] {
        circuit.push(ElementOp::beam_splitter(
            pm("a2", pol)?,
            pm("b2", pol)?,
            c * c,
        )?);
    }
    assemble(
        ProtocolId::HyperMomentum,
        params,
        mode,
        inputs,
        circuit,
        &["a1", "b1", "a2", "b2"],
        Normalization::Absolute,
        |i| momentum_literal(i, theta),
    )
}

pub(super) fn momentum_literal(i: usize, theta: f64) -> Result<PhotonState> {
    let (s2, c2) = (2.0 * theta).sin_cos();
    let (paths, pols): (&[(&str, &str, f64)], _) = match i {
        1 => (
            &[
                ("a1", "a2", s2 / 2.0),
                ("a1", "b2", -c2 / 2.0),
                ("b1", "b2", 0.5),
            ],
            [(H, V), (V, H)],
        ),
        2 => (
            &[
                ("a1", "a2", c2 / 2.0),
                ("a1", "b2", s2 / 2.0),
                ("b1", "a2", 0.5),
            ],
            [(H, V), (V, H)],
        ),
        3 => (
            &[
                ("a1", "a2", 0.5),
                ("b1", "a2", -c2 / 2.0),
                ("b1", "b2", -s2 / 2.0),
            ],
            [(H, H), (V, V)],
        ),
        _ => (
            &[
                ("a1", "b2", -0.5),
                ("b1", "a2", s2 / 2.0),
                ("b1", "b2", -c2 / 2.0),
            ],
            [(H, H), (V, V)],
        ),
    };
    let mut terms = Vec::new();
    for &(o1, o2, a) in paths {
        for (p1, p2) in pols {
            terms.push((a, pm(o1, p1)?, pm(o2, p2)?));
        }
    }
    two_photon(&terms)
}

// --- polarization ---------------------------------------------------------

pub(super) fn polarization(params: &Params, mode: BuildMode) -> Result<ProtocolInstance> {
    let theta = params.single()?;
    let mut inputs = Vec::new();
    for (i, id) in state_ids("xi").into_iter().enumerate() {
        let mut terms = Vec::new();
        for (p1, p2, a) in bell_like_pol(i + 1, theta) {
            for (o1, o2) in [("a1", "b2"), ("b1", "a2")] {
                terms.push((a * FRAC_1_SQRT_2, pm(o1, p1)?, pm(o2, p2)?));
            }
        }
        inputs.push((id, two_photon(&terms)?));
    }

    let mut circuit = Circuit::new("hyper_polarization");
    // Polarization-controlled path flip on both photons.
    circuit.push(ElementOp::polarizing_bs(&[
        ("a1", H, "a1"),
        ("a1", V, "b1"),
        ("b1", H, "b1"),
        ("b1", V, "a1"),
        ("a2", H, "a2"),
        ("a2", V, "b2"),
        ("b2", H, "b2"),
        ("b2", V, "a2"),
    ])?);
    for path in ["a1", "b1"] {
        circuit.extend(split_rotate_merge(pm(path, H)?, theta)?);
    }
    for path in ["a2", "b2"] {
        circuit.push(ElementOp::hwp_on(pm(path, H)?, theta / 2.0)?);
    }
    assemble(
        ProtocolId::HyperPolarization,
        params,
        mode,
        inputs,
        circuit,
        &["a1", "b1", "a2", "b2"],
        Normalization::Heralded,
        |i| polarization_literal(i, theta),
    )
}

pub(super) fn polarization_literal(i: usize, theta: f64) -> Result<PhotonState> {
    let (s, c) = theta.sin_cos();
    let (c2, c3, s3) = (
        (2.0 * theta).cos(),
        (3.0 * theta).cos(),
        (3.0 * theta).sin(),
    );
    let r = SQRT_2;
    let k = 2.0 * SQRT_2;
    let (paths, pols): ([(&str, &str); 2], PolTerms) = match i {
        1 => (
            [("a1", "b2"), ("b1", "a2")],
            vec![
                (H, H, s / r + s * c2 / r),
                (H, V, -c / k - c3 / k),
                (V, V, s / r),
            ],
        ),
        2 => (
            [("a1", "b2"), ("b1", "a2")],
            vec![
                (H, H, c / k + c3 / k),
                (H, V, s / r + s * c2 / r),
                (V, H, s / r),
            ],
        ),
        3 => (
            [("a1", "a2"), ("b1", "b2")],
            vec![
                (H, H, c / r),
                (V, H, s / k - s3 / k),
                (V, V, -c / k + c3 / k),
            ],
        ),
        _ => (
            [("a1", "a2"), ("b1", "b2")],
            vec![
                (H, V, -c / r),
                (V, H, c / k - c3 / k),
                (V, V, s / k - s3 / k),
            ],
        ),
    };
    let mut terms = Vec::new();
    for (o1, o2) in paths {
        for &(p1, p2, a) in &pols {
            terms.push((a, pm(o1, p1)?, pm(o2, p2)?));
        }
    }
    two_photon(&terms)
}

// --- orbital angular momentum -----------------------------------------------

fn om(path: &str, pol: Polarization, oam: Oam) -> Result<Mode> {
    Ok(pm(path, pol)?.with_oam(oam))
}

pub(super) fn oam(params: &Params, mode: BuildMode) -> Result<ProtocolInstance> {
    let theta = params.single()?;
    let mut inputs = Vec::new();
    for (i, id) in state_ids("pi").into_iter().enumerate() {
        let mut terms = Vec::new();
        for (p1, p2, a) in bell_like_pol(i + 1, theta) {
            for (l1, l2) in [(Oam::Plus, Oam::Minus), (Oam::Minus, Oam::Plus)] {
                terms.push((a * FRAC_1_SQRT_2, om("1", p1, l1)?, om("2", p2, l2)?));
            }
        }
        inputs.push((id, two_photon(&terms)?));
    }

    let zero = |p: &str| om(p, H, Oam::Zero);
    let mut circuit = Circuit::new("hyper_oam");
    circuit.push(ElementOp::hologram(&[
        ("1", Oam::Plus, "u1"),
        ("1", Oam::Minus, "d1"),
        ("2", Oam::Plus, "u2"),
        ("2", Oam::Minus, "d2"),
    ])?);
    for path in ["u2", "d2"] {
        circuit.push(ElementOp::hwp_on(zero(path)?, FRAC_PI_4)?);
    }
    circuit.push(ElementOp::polarizing_bs(&[
        ("u1", H, "u1"),
        ("u1", V, "d1"),
        ("d1", H, "d1"),
        ("d1", V, "u1"),
        ("u2", H, "u2"),
        ("u2", V, "d2"),
        ("d2", H, "d2"),
        ("d2", V, "u2"),
    ])?);
    for path in ["u1", "d1"] {
        circuit.extend(split_rotate_merge(zero(path)?, theta)?);
    }
    for path in ["u2", "d2"] {
        circuit.push(ElementOp::hwp_on(zero(path)?, theta / 2.0)?);
    }
    assemble(
        ProtocolId::HyperOam,
        params,
        mode,
        inputs,
        circuit,
        &["u1", "d1", "u2", "d2"],
        Normalization::Heralded,
        |i| oam_literal(i, theta),
    )
}

pub(super) fn oam_literal(i: usize, theta: f64) -> Result<PhotonState> {
    let (s, c) = theta.sin_cos();
    let (c2, c3, s3) = (
        (2.0 * theta).cos(),
        (3.0 * theta).cos(),
        (3.0 * theta).sin(),
    );
    let r = SQRT_2;
    let k = 2.0 * SQRT_2;
    // (pol₁, path₁, pol₂, path₂, amplitude)
    let rows: Vec<(Polarization, &str, Polarization, &str, f64)> = match i {
        1 => vec![
            (H, "d1", H, "d2", c / r),
            (H, "u1", H, "u2", c / r),
            (V, "d1", H, "d2", s / k - s3 / k),
            (V, "u1", H, "u2", s / k - s3 / k),
            (V, "d1", V, "d2", -c / k + c3 / k),
            (V, "u1", V, "u2", -c / k + c3 / k),
        ],
        2 => vec![
            (H, "d1", V, "d2", -c / r),
            (H, "u1", V, "u2", -c / r),
            (V, "d1", H, "d2", c / k - c3 / k),
            (V, "u1", H, "u2", c / k - c3 / k),
            (V, "d1", V, "d2", s / k - s3 / k),
            (V, "u1", V, "u2", s / k - s3 / k),
        ],
        3 => vec![
            (H, "d1", H, "u2", s / r + s * c2 / r),
            (H, "d1", V, "u2", -c / k - c3 / k),
            (H, "u1", H, "d2", s / r + s * c2 / r),
            (H, "u1", V, "d2", -c / k - c3 / k),
            (V, "d1", V, "u2", s / r),
            (V, "u1", V, "d2", s / r),
        ],
        _ => vec![
            (H, "d1", H, "u2", c / k + c3 / k),
            (H, "d1", V, "u2", s / k + s3 / k),
            (H, "u1", H, "d2", c / k + c3 / k),
            (H, "u1", V, "d2", s / k + s3 / k),
            (V, "u1", H, "d2", s / r),
            (V, "d1", H, "u2", s / r),
        ],
    };
    let mut terms = Vec::new();
    for (p1, o1, p2, o2, a) in rows {
        terms.push((a, om(o1, p1, Oam::Zero)?, om(o2, p2, Oam::Zero)?));
    }
    two_photon(&terms)
}
