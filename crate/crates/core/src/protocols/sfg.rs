//! Analyzer built on sum-frequency generation: a type-I crystal fuses the
//! parallel-polarization pairs, a type-II crystal fuses the orthogonal
//! ones, and each fused photon is rotated onto a definite polarization.

use std::f64::consts::FRAC_PI_4;

use super::{
    pm, state_ids, two_photon, BuildMode, Params, ProtocolId, ProtocolInstance, Verification,
};
use crate::circuits::Circuit;
use crate::detection::DetectorSpec;
use crate::discrimination::Normalization;
use crate::elements::{ElementOp, SfgType};
use crate::error::Result;
use crate::fock::{FreqBand, Polarization};

use FreqBand::{Doubled, Fundamental};
use Polarization::{H, V};

pub(super) fn instance(params: &Params) -> Result<ProtocolInstance> {
    let (theta1, theta2) = params.pair()?;
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    let rows = [
        [(H, H, s1), (V, V, c1)],
        [(H, H, c1), (V, V, -s1)],
        [(H, V, s2), (V, H, c2)],
        [(H, V, c2), (V, H, -s2)],
    ];
    let mut inputs = Vec::new();
    for (id, row) in state_ids("psi").into_iter().zip(rows) {
        let mut terms = Vec::new();
        for (p1, p2, a) in row {
            terms.push((a, pm("1", p1)?, pm("2", p2)?));
        }
        inputs.push((id, two_photon(&terms)?));
    }

    let mut circuit = Circuit::new("sfg");
    circuit.push(ElementOp::sfg(SfgType::TypeI, "1", "2", "3")?);
    circuit.push(ElementOp::dichroic_router(&[
        ("1", Fundamental, "1b"),
        ("1", Doubled, "1a"),
        ("2", Fundamental, "2b"),
        ("2", Doubled, "2a"),
        ("3", Fundamental, "3b"),
        ("3", Doubled, "3a"),
    ])?);
    circuit.push(ElementOp::hwp_on(
        pm("3a", H)?.with_band(Doubled),
        theta1 / 2.0,
    )?);
    circuit.push(ElementOp::sfg(SfgType::TypeII, "1b", "2b", "3b")?);
    circuit.push(ElementOp::hwp_on(
        pm("3b", H)?.with_band(Doubled),
        FRAC_PI_4 - theta2 / 2.0,
    )?);

    let mut readout = Circuit::new("sfg-readout");
    readout.push(ElementOp::polarizing_bs(&[
        ("3a", H, "h3a"),
        ("3a", V, "v3a"),
        ("3b", H, "h3b"),
        ("3b", V, "v3b"),
    ])?);

    Ok(ProtocolInstance {
        id: ProtocolId::Sfg,
        params: *params,
        build_mode: BuildMode::Circuit,
        inputs,
        circuit,
        readout,
        detectors: DetectorSpec::paths(),
        normalization: Normalization::Absolute,
        verification: Verification::NoFixture,
    })
}
