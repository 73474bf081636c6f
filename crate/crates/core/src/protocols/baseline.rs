//! Reference analyzer with no extra resource: the two photons meet on one
//! balanced beam splitter and are then split by polarization.

use super::{
    pm, readout_pbs, state_ids, two_photon, BuildMode, Params, ProtocolId, ProtocolInstance,
    Verification,
};
use crate::circuits::Circuit;
use crate::detection::DetectorSpec;
use crate::discrimination::Normalization;
use crate::elements::ElementOp;
use crate::error::Result;
use crate::fock::Polarization;

use Polarization::{H, V};

pub(super) fn instance(params: &Params) -> Result<ProtocolInstance> {
    let theta = params.single()?;
    let (s, c) = theta.sin_cos();
    let rows = [
        [(H, H, s), (V, V, c)],
        [(H, H, c), (V, V, -s)],
        [(H, V, s), (V, H, c)],
        [(H, V, c), (V, H, -s)],
    ];
    let mut inputs = Vec::new();
    for (id, row) in state_ids("psi").into_iter().zip(rows) {
        let mut terms = Vec::new();
        for (p1, p2, a) in row {
            terms.push((a, pm("1", p1)?, pm("2", p2)?));
        }
        inputs.push((id, two_photon(&terms)?));
    }
    let mut circuit = Circuit::new("baseline");
    for pol in [H, V] {
        circuit.push(ElementOp::beam_splitter(pm("1", pol)?, pm("2", pol)?, 0.5)?);
    }
    let mut readout = Circuit::new("baseline-readout");
    readout.push(readout_pbs(&["1", "2"])?);
    Ok(ProtocolInstance {
        id: ProtocolId::Baseline,
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
