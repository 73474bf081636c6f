//! Randomized property checks shared by the property suite and the
//! acceptance runner. Each `check_*` takes plain generated data so the
//! same case can be replayed from either harness.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use belldisc_core::circuits::Circuit;
use belldisc_core::detection::{enumerate_events, DetectorSpec};
use belldisc_core::discrimination::TIMEBIN_EXCLUSION;
use belldisc_core::elements::{time_coalesce, ElementOp, SfgType};
use belldisc_core::fock::{
    apply_mode_map, Mode, ModeMap, Monomial, PhotonState, Polarization, TimeTag,
};
use belldisc_core::protocols::{build, BuildMode, Params, ProtocolId};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = Result<(), TestCaseError>;

pub const MAX_MODES: usize = 6;
pub const MAX_PHOTONS: usize = 4;
/// Randomized cases per property.
pub const CASES: u32 = 1000;

/// A random superposition: each term lists mode indices and a coefficient.
#[derive(Clone, Debug)]
pub struct StateCase {
    pub terms: Vec<(Vec<usize>, (f64, f64))>,
}

/// A random square complex matrix, row-major, side `n`.
#[derive(Clone, Debug)]
pub struct MatrixCase {
    pub n: usize,
    pub entries: Vec<(f64, f64)>,
}

pub fn mode(i: usize) -> Mode {
    Mode::new(&format!("m{i}")).unwrap()
}

pub fn modes(n: usize) -> Vec<Mode> {
    (0..n).map(mode).collect()
}

fn c(p: (f64, f64)) -> Complex64 {
    Complex64::new(p.0, p.1)
}

pub fn state_strategy(n: usize) -> impl Strategy<Value = StateCase> {
    let term = (
        prop::collection::vec(0..n, 1..=MAX_PHOTONS),
        (-1.0..1.0f64, -1.0..1.0f64),
    );
    prop::collection::vec(term, 1..=5).prop_map(|terms| StateCase { terms })
}

pub fn matrix_strategy(n: usize) -> impl Strategy<Value = MatrixCase> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
        .prop_map(move |entries| MatrixCase { n, entries })
}

/// Mode count together with a state and two matrices on that many modes.
pub fn system_strategy() -> impl Strategy<Value = (StateCase, StateCase, MatrixCase, MatrixCase)> {
    (2..=MAX_MODES).prop_flat_map(|n| {
        (
            state_strategy(n),
            state_strategy(n),
            matrix_strategy(n),
            matrix_strategy(n),
        )
    })
}

impl StateCase {
    pub fn build(&self) -> PhotonState {
        let terms = self
            .terms
            .iter()
            .map(|(idx, z)| (Monomial::new(idx.iter().map(|&i| mode(i))).unwrap(), c(*z)));
        PhotonState::from_terms(terms)
    }

    /// Unit-norm version, or `None` when the terms cancel.
    pub fn normalized(&self) -> Option<PhotonState> {
        let s = self.build();
        let n = s.squared_norm();
        (n > 1e-6).then(|| s.scale_real(1.0 / n.sqrt()))
    }
}

impl MatrixCase {
    pub fn matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| c(self.entries[i * self.n + j]))
    }

    /// Unitary Q factor of the matrix, or `None` when it is near-singular.
    pub fn unitary(&self) -> Option<DMatrix<Complex64>> {
        let m = self.matrix();
        if m.clone().singular_values().iter().any(|&s| s < 1e-3) {
            return None;
        }
        Some(m.qr().q())
    }

    /// The matrix scaled so that its largest singular value is `scale`.
    pub fn contraction(&self, scale: f64) -> DMatrix<Complex64> {
        let m = self.matrix();
        let top = m
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max);
        if top == 0.0 {
            m
        } else {
            m * Complex64::new(scale / top, 0.0)
        }
    }
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

fn states_close(x: &PhotonState, y: &PhotonState, tol: f64) -> Check {
    let d = x.distance_squared(y).max(0.0).sqrt();
    prop_assert!(d <= tol, "states differ by {d:e}");
    Ok(())
}

/// Norm is preserved by a unitary mode map.
pub fn check_unitarity(state: &StateCase, m: &MatrixCase) -> Check {
    let (Some(s), Some(u)) = (state.normalized(), m.unitary()) else {
        return Ok(());
    };
    let map = ModeMap::square(modes(m.n), u).unwrap();
    prop_assert!(map.is_unitary(1e-12));
    let out = apply_mode_map(&s, &map).unwrap();
    let drift = (out.squared_norm() - 1.0).abs();
    prop_assert!(drift < 1e-10, "norm drift {drift:e}");
    Ok(())
}

/// Applying `U` then `V` equals applying `V·U`.
pub fn check_composition(state: &StateCase, a: &MatrixCase, b: &MatrixCase) -> Check {
    let (Some(s), Some(u), Some(v)) = (state.normalized(), a.unitary(), b.unitary()) else {
        return Ok(());
    };
    let mu = ModeMap::square(modes(a.n), u).unwrap();
    let mv = ModeMap::square(modes(a.n), v).unwrap();
    let stepwise = apply_mode_map(&apply_mode_map(&s, &mu).unwrap(), &mv).unwrap();
    let fused = apply_mode_map(&s, &mu.then(&mv).unwrap()).unwrap();
    states_close(&stepwise, &fused, 1e-10)
}

/// Contractions never raise the norm of a unit state.
pub fn check_contraction(state: &StateCase, m: &MatrixCase, scale: f64) -> Check {
    let Some(s) = state.normalized() else {
        return Ok(());
    };
    let map = ModeMap::new(modes(m.n), modes(m.n), m.contraction(scale)).unwrap();
    let op = ElementOp::effective_map(map).unwrap();
    let out = op.apply(&s).unwrap();
    prop_assert!(out.squared_norm() <= 1.0 + 1e-10, "{}", out.squared_norm());
    Ok(())
}

/// `⟨x|y⟩ = conj⟨y|x⟩` and linearity in the second slot, antilinearity in
/// the first.
pub fn check_sesquilinear(x: &StateCase, y: &StateCase, z: &StateCase, a: (f64, f64)) -> Check {
    let (x, y, z, a) = (x.build(), y.build(), z.build(), c(a));
    let tol = 1e-12 * (1.0 + x.squared_norm() + y.squared_norm() + z.squared_norm()) * 4.0;
    prop_assert!(close(x.inner_product(&y), y.inner_product(&x).conj(), tol));
    let lhs = x.inner_product(&y.scale(a).add(&z));
    let rhs = a * x.inner_product(&y) + x.inner_product(&z);
    prop_assert!(close(lhs, rhs, tol), "{lhs} vs {rhs}");
    let lhs = x.scale(a).add(&z).inner_product(&y);
    let rhs = a.conj() * x.inner_product(&y) + z.inner_product(&y);
    prop_assert!(close(lhs, rhs, tol), "{lhs} vs {rhs}");
    Ok(())
}

/// Counts the bijections pairing equal entries of two mode lists:
/// the vacuum expectation of the matching annihilation/creation product.
fn matching_count(a: &[usize], b: &[usize]) -> f64 {
    fn go(a: &[usize], b: &[usize], used: &mut Vec<bool>) -> f64 {
        let Some((&first, rest)) = a.split_first() else {
            return 1.0;
        };
        let mut total = 0.0;
        for j in 0..b.len() {
            if !used[j] && b[j] == first {
                used[j] = true;
                total += go(rest, b, used);
                used[j] = false;
            }
        }
        total
    }
    if a.len() != b.len() {
        return 0.0;
    }
    go(a, b, &mut vec![false; b.len()])
}

/// Inner product computed term by term from operator matchings, with no
/// normal form or factorial weights.
pub fn oracle_inner(x: &StateCase, y: &StateCase) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (mx, zx) in &x.terms {
        for (my, zy) in &y.terms {
            total += c(*zx).conj() * c(*zy) * matching_count(mx, my);
        }
    }
    total
}

/// Expands every term over every choice of output index for each creation
/// operator, keeping zero-amplitude branches and merging by linear search.
pub fn oracle_substitute(
    state: &StateCase,
    u: &DMatrix<Complex64>,
) -> Vec<(Vec<usize>, Complex64)> {
    let n = u.nrows();
    let mut out: Vec<(Vec<usize>, Complex64)> = Vec::new();
    for (idx, z) in &state.terms {
        let k = idx.len();
        let mut choice = vec![0usize; k];
        loop {
            let mut amp = c(*z);
            for (slot, &input) in idx.iter().enumerate() {
                amp *= u[(choice[slot], input)];
            }
            let mut key = choice.clone();
            key.sort_unstable();
            match out.iter_mut().find(|(m, _)| *m == key) {
                Some((_, acc)) => *acc += amp,
                None => out.push((key, amp)),
            }
            let mut pos = 0;
            while pos < k {
                choice[pos] += 1;
                if choice[pos] < n {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }
    }
    out
}

/// The library's substitution and inner product agree with the oracles.
pub fn check_oracles(x: &StateCase, y: &StateCase, m: &MatrixCase) -> Check {
    let lib = x.build().inner_product(&y.build());
    let oracle = oracle_inner(x, y);
    prop_assert!(
        close(lib, oracle, 1e-12 * (1.0 + oracle.norm())),
        "{lib} vs {oracle}"
    );

    let u = m.matrix();
    let map = ModeMap::square(modes(m.n), u.clone()).unwrap();
    let lib = apply_mode_map(&x.build(), &map).unwrap();
    let expected = oracle_substitute(x, &u);
    for (key, amp) in &expected {
        let mono = Monomial::new(key.iter().map(|&i| mode(i))).unwrap();
        let got = lib.amplitude(&mono);
        prop_assert!(close(got, *amp, 1e-12), "{key:?}: {got} vs {amp}");
    }
    for (mono, amp) in lib.terms() {
        let key: Vec<usize> = mono
            .modes()
            .iter()
            .map(|md| md.path_str()[1..].parse().unwrap())
            .collect();
        let found = expected.iter().any(|(k, _)| *k == key);
        prop_assert!(found || amp.norm() <= 1e-12, "spurious term {key:?}");
    }
    Ok(())
}

/// A small random circuit on `m0..m{n-1}` (polarization unset), built
/// from beam splitters and phases.
#[derive(Clone, Debug)]
pub struct CircuitCase {
    pub n: usize,
    pub ops: Vec<(usize, usize, f64, f64)>,
}

pub fn circuit_strategy(n: usize) -> impl Strategy<Value = CircuitCase> {
    prop::collection::vec((0..n, 0..n, 0.0..1.0f64, -3.2..3.2f64), 1..8)
        .prop_map(move |ops| CircuitCase { n, ops })
}

impl CircuitCase {
    pub fn build(&self, lossy: bool) -> Circuit {
        let mut circuit = Circuit::new("random");
        for &(a, b, t, phi) in &self.ops {
            circuit.push(ElementOp::phase_shift(mode(a), phi).unwrap());
            if a != b {
                circuit.push(ElementOp::beam_splitter(mode(a), mode(b), t).unwrap());
            }
        }
        if lossy {
            circuit.push_loss(ElementOp::discard(vec![mode(0)]).unwrap());
        }
        circuit
    }
}

/// Two states, a circuit on their modes, and two complex scalars.
pub type CircuitSystem = (StateCase, StateCase, CircuitCase, (f64, f64), (f64, f64));

pub fn circuit_system_strategy() -> impl Strategy<Value = CircuitSystem> {
    (2..=MAX_MODES).prop_flat_map(|n| {
        (
            state_strategy(n),
            state_strategy(n),
            circuit_strategy(n),
            (-1.0..1.0f64, -1.0..1.0f64),
            (-1.0..1.0f64, -1.0..1.0f64),
        )
    })
}

/// `apply(αx + βy) = α·apply(x) + β·apply(y)`.
pub fn check_linearity(
    x: &StateCase,
    y: &StateCase,
    circ: &CircuitCase,
    a: (f64, f64),
    b: (f64, f64),
) -> Check {
    let circuit = circ.build(true);
    let (x, y, a, b) = (x.build(), y.build(), c(a), c(b));
    let mixed = circuit.apply(&x.scale(a).add(&y.scale(b))).unwrap().state;
    let split = circuit
        .apply(&x)
        .unwrap()
        .state
        .scale(a)
        .add(&circuit.apply(&y).unwrap().state.scale(b));
    states_close(&mixed, &split, 1e-10)
}

/// Orthogonal inputs stay orthogonal through a loss-free circuit.
pub fn check_orthogonality(x: &StateCase, y: &StateCase, circ: &CircuitCase) -> Check {
    let (Some(x), Some(y)) = (x.normalized(), y.normalized()) else {
        return Ok(());
    };
    let overlap = x.inner_product(&y);
    let y = y.sub(&x.scale(overlap));
    let ny = y.squared_norm();
    if ny < 1e-6 {
        return Ok(());
    }
    let y = y.scale_real(1.0 / ny.sqrt());
    prop_assert!(x.inner_product(&y).norm() < 1e-12);
    let circuit = circ.build(false);
    let ox = circuit.apply(&x).unwrap().state;
    let oy = circuit.apply(&y).unwrap().state;
    let after = ox.inner_product(&oy).norm();
    prop_assert!(after < 1e-10, "overlap {after:e}");
    Ok(())
}

/// Event probabilities plus the discarded weight account for the whole
/// input, and every monomial lands in exactly one event.
pub fn check_event_normalization(x: &StateCase, circ: &CircuitCase) -> Check {
    let Some(x) = x.normalized() else {
        return Ok(());
    };
    let evo = circ.build(true).apply(&x).unwrap();
    let events = enumerate_events(&evo.state, &DetectorSpec::paths()).unwrap();
    let total: f64 = events.iter().map(|(_, p)| p).sum();
    prop_assert!(
        (total + evo.discarded - 1.0).abs() < 1e-10,
        "{total} + {}",
        evo.discarded
    );
    let mut labels: Vec<String> = events.iter().map(|(e, _)| e.label()).collect();
    let n = labels.len();
    labels.sort();
    labels.dedup();
    prop_assert_eq!(labels.len(), n, "an event was reported twice");
    prop_assert!(n <= evo.state.len().max(1));
    Ok(())
}

/// Two photons as `(path, polarization/tag index)` plus a coefficient.
pub type TaggedTerm = ((usize, usize), (usize, usize), (f64, f64));

/// Random two-photon states on tagged polarized modes.
pub fn tagged_pair_strategy() -> impl Strategy<Value = Vec<TaggedTerm>> {
    let photon = (0..2usize, 0..6usize);
    prop::collection::vec((photon.clone(), photon, (-1.0..1.0f64, -1.0..1.0f64)), 1..6)
}

fn tagged_mode(path: usize, label: usize) -> Mode {
    let pol = [Polarization::H, Polarization::V][label % 2];
    let tag = [TimeTag::Untagged, TimeTag::Th, TimeTag::Tv][label / 2];
    Mode::polarized(["A", "B"][path], pol)
        .unwrap()
        .with_tag(tag)
}

/// Coalescing twice is the same as coalescing once.
pub fn check_coalesce_idempotent(terms: &[TaggedTerm]) -> Check {
    let s = PhotonState::from_terms(terms.iter().map(|&(p, q, z)| {
        (
            Monomial::new([tagged_mode(p.0, p.1), tagged_mode(q.0, q.1)]).unwrap(),
            c(z),
        )
    }));
    let once = time_coalesce(&s).unwrap();
    let twice = time_coalesce(&once).unwrap();
    states_close(&once, &twice, 1e-14)
}

/// Type-I fusion maps each two-photon coefficient to one term of the
/// output, so `Σ|c|²` over the coefficients is unchanged.
pub fn check_sfg_coefficients(amps: &[(f64, f64); 4]) -> Check {
    let pols = [
        (Polarization::H, Polarization::H),
        (Polarization::H, Polarization::V),
        (Polarization::V, Polarization::H),
        (Polarization::V, Polarization::V),
    ];
    let s = PhotonState::from_terms(pols.iter().zip(amps).map(|(&(p, q), &z)| {
        (
            Monomial::new([
                Mode::polarized("1", p).unwrap(),
                Mode::polarized("2", q).unwrap(),
            ])
            .unwrap(),
            c(z),
        )
    }));
    let out = ElementOp::sfg(SfgType::TypeI, "1", "2", "3")
        .unwrap()
        .apply(&s)
        .unwrap();
    let sum = |st: &PhotonState| st.terms().map(|(_, z)| z.norm_sqr()).sum::<f64>();
    prop_assert!((sum(&s) - sum(&out)).abs() < 1e-12);
    prop_assert_eq!(s.len(), out.len());
    Ok(())
}

pub fn protocol_strategy() -> impl Strategy<Value = (usize, f64, f64)> {
    (
        0..ProtocolId::ALL.len(),
        1e-3..FRAC_PI_2 - 1e-3,
        1e-3..FRAC_PI_2 - 1e-3,
    )
}

/// For a protocol instance at random angles: inputs are unit and pairwise
/// orthogonal, and detected plus discarded weight is one per input.
pub fn check_protocol(index: usize, t1: f64, t2: f64) -> Check {
    let id = ProtocolId::ALL[index];
    if id == ProtocolId::Timebin && (t1 - FRAC_PI_4).abs() < TIMEBIN_EXCLUSION {
        return Ok(());
    }
    let params = if id.takes_two_angles() {
        Params::angles(t1, t2)
    } else {
        Params::theta(t1)
    };
    let instance = build(id, &params, BuildMode::Circuit).unwrap();
    for (i, (_, x)) in instance.inputs.iter().enumerate() {
        prop_assert!((x.squared_norm() - 1.0).abs() < 1e-12);
        for (_, y) in &instance.inputs[i + 1..] {
            prop_assert!(x.inner_product(y).norm() < 1e-12);
        }
    }
    let run = instance.run(None).unwrap();
    for ((_, out), discarded) in run.outputs.iter().zip(&run.discarded) {
        let events = enumerate_events(out, &instance.detectors).unwrap();
        let total: f64 = events.iter().map(|(_, p)| p).sum();
        prop_assert!(
            (total + discarded - 1.0).abs() < 1e-10,
            "{id}: {total} + {discarded}"
        );
    }
    prop_assert!(run.report.max_cross_probability() < 1e-12);
    Ok(())
}
