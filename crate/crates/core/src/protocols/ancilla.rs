//! Path-encoded analyzer assisted by ancilla pairs of the same Bell-like
//! family. Every mode carries a single path label `1..=8` (one ancilla
//! pair) or `1..=16` (two pairs).

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use super::{state_ids, BuildMode, Params, ProtocolId, ProtocolInstance, Verification};
use crate::circuits::Circuit;
use crate::detection::DetectorSpec;
use crate::discrimination::Normalization;
use crate::elements::ElementOp;
use crate::error::{Error, Result};
use crate::fock::{Mode, Monomial, PhotonState};

fn mode(k: usize) -> Result<Mode> {
    Mode::new(&k.to_string())
}

fn product(amp: f64, modes: &[usize]) -> Result<PhotonState> {
    let modes: Vec<Mode> = modes.iter().map(|&k| mode(k)).collect::<Result<_>>()?;
    Ok(PhotonState::from_terms([(
        Monomial::new(modes)?,
        Complex64::new(amp, 0.0),
    )]))
}

fn pair(a: f64, first: &[usize], b: f64, second: &[usize]) -> Result<PhotonState> {
    Ok(product(a, first)?.add(&product(b, second)?))
}

/// The four system states, each already multiplied by the ancillas.
fn inputs(theta1: f64, theta2: f64, pairs: usize) -> Result<Vec<(String, PhotonState)>> {
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    let mut ancilla = pair(s1, &[5, 7], c1, &[6, 8])?;
    if pairs == 2 {
        ancilla = ancilla.tensor(&pair(s1, &[9, 11, 13, 15], c1, &[10, 12, 14, 16])?)?;
    }
    let system = [
        pair(s2, &[1, 4], c2, &[2, 3])?,
        pair(c2, &[1, 4], -s2, &[2, 3])?,
        pair(s1, &[1, 3], c1, &[2, 4])?,
        pair(c1, &[1, 3], -s1, &[2, 4])?,
    ];
    state_ids("gamma")
        .into_iter()
        .zip(system)
        .map(|(id, sys)| Ok((id, sys.tensor(&ancilla)?)))
        .collect()
}

fn bs(c: &mut Circuit, a: usize, b: usize) -> Result<()> {
    c.push(ElementOp::beam_splitter(mode(a)?, mode(b)?, 0.5)?);
    Ok(())
}

/// Balanced beam-splitter network with phase `π/4` on odd modes and `θ₂`
/// on even modes between the first two layers.
fn network(theta2: f64, pairs: usize) -> Result<Circuit> {
    let n = 8 * pairs;
    let mut c = Circuit::new(format!("ancilla-{pairs}"));
    if pairs == 2 {
        for i in 1..=8 {
            bs(&mut c, i, i + 8)?;
        }
    } else {
        for i in 1..=4 {
            bs(&mut c, i, i + 4)?;
        }
    }
    for k in 1..=n {
        let phi = if k % 2 == 1 { FRAC_PI_4 } else { theta2 };
        c.push(ElementOp::phase_shift(mode(k)?, phi)?);
    }
    if pairs == 2 {
        for base in [0, 8] {
            for i in 1..=4 {
                bs(&mut c, base + i, base + i + 4)?;
            }
        }
    }
    for base in (0..n).step_by(4) {
        bs(&mut c, base + 1, base + 3)?;
        bs(&mut c, base + 2, base + 4)?;
    }
    Ok(c)
}

/// Builds the ancilla-assisted analyzer for one or two ancilla pairs.
pub fn ancilla_instance(theta1: f64, theta2: f64, pairs: usize) -> Result<ProtocolInstance> {
    if !(1..=2).contains(&pairs) {
        return Err(Error::Parameter(format!(
            "pairs must be 1 or 2, got {pairs}"
        )));
    }
    let params = Params::angles(theta1, theta2).with_pairs(pairs);
    let (theta1, theta2) = params.pair()?;
    let detectors = (1..=8 * pairs).map(mode).collect::<Result<Vec<_>>>()?;
    Ok(ProtocolInstance {
        id: ProtocolId::Ancilla,
        params,
        build_mode: BuildMode::Circuit,
        inputs: inputs(theta1, theta2, pairs)?,
        circuit: network(theta2, pairs)?,
        readout: Circuit::new("ancilla-readout"),
        detectors: DetectorSpec::paths().with_detectors(detectors),
        normalization: Normalization::Absolute,
        verification: Verification::NoFixture,
    })
}
