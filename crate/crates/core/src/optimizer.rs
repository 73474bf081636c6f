//! Numerical search over universal beam-splitter meshes for the best
//! unambiguous discrimination success of a fixed set of inputs.
//!
//! Each restart draws a random mesh, climbs a smoothed version of the
//! success objective with Nelder–Mead, then identifies the events that are
//! nearly owned by a single input and drives the leaking amplitudes of the
//! other inputs to zero with Levenberg–Marquardt. Only the exact,
//! threshold-based success is ever reported.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::DetectorSpec;
use crate::discrimination::{analyze, classify, uniform_priors};
use crate::error::{Error, Result};
use crate::fock::{apply_mode_map, Mode, ModeMap, Monomial, PhotonState};

pub const DEFAULT_RESTARTS: usize = 20;
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Smoothing exponents for the staged objective.
const SOFT_POWERS: [i32; 3] = [2, 8, 32];
/// An event is assigned to an input when that input carries this share of
/// its weight ...
const ASSIGN_SHARE: f64 = 1.0 - 1e-3;
/// ... and the event itself is at least this likely.
const ASSIGN_FLOOR: f64 = 1e-3;

// --- networks -----------------------------------------------------------------

/// Triangular mesh of two-mode couplers. The parameter vector holds
/// `N(N−1)/2` transmissions in `[0, 1]`, then one phase per coupler, then
/// `N` output phases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReckNetwork {
    pub n_modes: usize,
    pub params: Vec<f64>,
}

fn coupler_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Adjacent mode pairs in mesh order: diagonals of growing length.
fn mesh_order(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(coupler_count(n));
    for k in 1..n {
        for j in (0..k).rev() {
            out.push((j, j + 1));
        }
    }
    out
}

impl ReckNetwork {
    pub fn param_len(n_modes: usize) -> usize {
        2 * coupler_count(n_modes) + n_modes
    }

    pub fn new(n_modes: usize, params: Vec<f64>) -> Result<Self> {
        let net = ReckNetwork { n_modes, params };
        net.check()?;
        Ok(net)
    }

    /// Network with every coupler set from a mixing angle `x` via
    /// `t = cos²x`, output phases zero.
    pub fn from_angles(n_modes: usize, angles: &[f64], phases: &[f64]) -> Result<Self> {
        let m = coupler_count(n_modes);
        if angles.len() != m || phases.len() != m {
            return Err(Error::Parameter(format!(
                "{n_modes} modes need {m} angles and {m} phases"
            )));
        }
        let mut params: Vec<f64> = angles.iter().map(|x| x.cos().powi(2)).collect();
        params.extend_from_slice(phases);
        params.extend(std::iter::repeat_n(0.0, n_modes));
        ReckNetwork::new(n_modes, params)
    }

    fn check(&self) -> Result<()> {
        if self.n_modes < 2 {
            return Err(Error::Parameter(
                "a network needs at least two modes".into(),
            ));
        }
        let want = ReckNetwork::param_len(self.n_modes);
        if self.params.len() != want {
            return Err(Error::Parameter(format!(
                "{} modes need {want} parameters, got {}",
                self.n_modes,
                self.params.len()
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Parameter("network parameters must be finite".into()));
        }
        let m = coupler_count(self.n_modes);
        if let Some(t) = self.params[..m].iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::Parameter(format!(
                "transmission {t} is outside [0, 1]"
            )));
        }
        Ok(())
    }
}

/// Unitary matrix of the mesh. Columns are the images of the input modes.
pub fn realize(net: &ReckNetwork) -> Result<DMatrix<Complex64>> {
    net.check()?;
    let n = net.n_modes;
    let m = coupler_count(n);
    let mut u = DMatrix::<Complex64>::identity(n, n);
    for (k, (i, j)) in mesh_order(n).into_iter().enumerate() {
        let t = net.params[k];
        let (r, s) = (t.sqrt(), (1.0 - t).sqrt());
        let phase = Complex64::from_polar(1.0, net.params[m + k]);
        // Phase on mode i, then the coupler [[√t, √(1−t)], [√(1−t), −√t]].
        let mut b = DMatrix::<Complex64>::identity(n, n);
        b[(i, i)] = phase * r;
        b[(j, i)] = phase * s;
        b[(i, j)] = Complex64::new(s, 0.0);
        b[(j, j)] = Complex64::new(-r, 0.0);
        u = b * u;
    }
    for k in 0..n {
        let phase = Complex64::from_polar(1.0, net.params[2 * m + k]);
        for col in 0..n {
            u[(k, col)] *= phase;
        }
    }
    Ok(u)
}

// --- simplex search ---------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

impl SimplexResult {
    pub fn best(self) -> (Vec<f64>, f64) {
        (self.x, self.value)
    }
}

/// Minimizes `f` with the adaptive Nelder–Mead method. Stops after
/// `max_evals` evaluations or once both the value spread and the simplex
/// diameter fall below `tol`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64 + ?Sized>(
    f: &F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    tol: f64,
) -> SimplexResult {
    let n = x0.len();
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 || max_evals <= 1 {
        let value = if max_evals == 0 {
            f64::INFINITY
        } else {
            eval(x0, &mut evals)
        };
        return SimplexResult {
            x: x0.to_vec(),
            value,
            evaluations: evals,
        };
    }
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)));
    for i in 0..n {
        if evals >= max_evals {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    if simplex.len() < n + 1 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        return SimplexResult {
            x,
            value,
            evaluations: evals,
        };
    }

    let along = |a: &[f64], b: &[f64], coef: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + coef * (q - p)).collect()
    };
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max);
        if spread <= tol && diameter <= tol {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / nf;
            }
        }
        let worst = simplex[n].clone();
        let xr = along(&centroid, &worst.0, -alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            if evals >= max_evals {
                simplex[n] = (xr, fr);
                break;
            }
            let xe = along(&centroid, &worst.0, -alpha * gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        if evals >= max_evals {
            break;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(&centroid, &worst.0, -alpha * rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(&centroid, &worst.0, rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if evals >= max_evals {
                break;
            }
            let x = along(&best, &vertex.0, sigma);
            let v = eval(&x, &mut evals);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value,
        evaluations: evals,
    }
}

// --- least squares polish -----------------------------------------------------------

/// Levenberg–Marquardt with forward-difference Jacobians. Returns the final
/// point and the number of residual evaluations used.
fn levenberg_marquardt<F: Fn(&[f64]) -> Vec<f64>>(
    r: &F,
    x0: &[f64],
    max_evals: usize,
) -> (Vec<f64>, usize) {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut evals = 1;
    let mut res = r(&x);
    let mut cost: f64 = res.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    while evals + n < max_evals && cost > 1e-30 {
        let m = res.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for k in 0..n {
            let h = 1e-7 * x[k].abs().max(1.0);
            let mut xk = x.clone();
            xk[k] += h;
            let rk = r(&xk);
            evals += 1;
            for i in 0..m {
                jac[(i, k)] = (rk[i] - res[i]) / h;
            }
        }
        let rv = DVector::from_vec(res.clone());
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * rv;
        let mut improved = false;
        while evals < max_evals {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(delta) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(p, d)| p + d).collect();
            let tres = r(&trial);
            evals += 1;
            let tcost: f64 = tres.iter().map(|v| v * v).sum();
            if tcost < cost {
                let step = delta.norm();
                x = trial;
                res = tres;
                cost = tcost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = step > 1e-15;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    (x, evals)
}

// --- objective ------------------------------------------------------------------

/// Inputs prepared for repeated evaluation against candidate meshes.
struct Problem {
    modes: Vec<Mode>,
    inputs: Vec<PhotonState>,
    priors: Vec<f64>,
}

/// Per-event weights: for every output monomial, the amplitude each input
/// gives it (scaled by `√(Π n!)`).
type EventAmplitudes = BTreeMap<Monomial, Vec<Complex64>>;

impl Problem {
    fn couplers(&self) -> usize {
        coupler_count(self.modes.len())
    }

    /// Search vector: mixing angles then coupler phases; output phases do
    /// not affect detection and stay at zero.
    fn network(&self, x: &[f64]) -> ReckNetwork {
        let m = self.couplers();
        let mut params: Vec<f64> = x[..m].iter().map(|a| a.cos().powi(2)).collect();
        params.extend_from_slice(&x[m..]);
        params.extend(std::iter::repeat_n(0.0, self.modes.len()));
        ReckNetwork {
            n_modes: self.modes.len(),
            params,
        }
    }

    fn amplitudes(&self, x: &[f64]) -> Result<EventAmplitudes> {
        let u = realize(&self.network(x))?;
        let map = ModeMap::square(self.modes.clone(), u)?;
        let k = self.inputs.len();
        let mut out: EventAmplitudes = BTreeMap::new();
        for (i, s) in self.inputs.iter().enumerate() {
            for (mono, amp) in apply_mode_map(s, &map)?.terms() {
                let w = mono.weight().sqrt();
                out.entry(mono.clone())
                    .or_insert_with(|| vec![Complex64::new(0.0, 0.0); k])[i] = amp * w;
            }
        }
        Ok(out)
    }

    fn prior_weights(&self, amps: &[Complex64]) -> Vec<f64> {
        amps.iter()
            .zip(&self.priors)
            .map(|(a, p)| p * a.norm_sqr())
            .collect()
    }

    /// `Σ_events Σ_i v_i (v_i / Σv)^k` with `v_i = prior_i · P(event|i)`.
    fn soft(&self, x: &[f64], power: i32) -> f64 {
        let Ok(table) = self.amplitudes(x) else {
            return 0.0;
        };
        let mut total = 0.0;
        for amps in table.values() {
            let v = self.prior_weights(amps);
            let sum: f64 = v.iter().sum();
            if sum > 1e-300 {
                total += v.iter().map(|vi| vi * (vi / sum).powi(power)).sum::<f64>();
            }
        }
        total
    }

    /// Exact success with the same thresholds as the analysis module.
    fn strict(&self, x: &[f64]) -> f64 {
        let Ok(table) = self.amplitudes(x) else {
            return 0.0;
        };
        let mut total = 0.0;
        for amps in table.values() {
            let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
            if let Some(i) = classify(&probs) {
                total += self.priors[i] * probs[i];
            }
        }
        total
    }

    /// Events nearly owned by one input, with their owner.
    fn assignment(&self, x: &[f64]) -> Vec<(Monomial, usize)> {
        let Ok(table) = self.amplitudes(x) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for (mono, amps) in table {
            let v = self.prior_weights(&amps);
            let sum: f64 = v.iter().sum();
            let (owner, top) = v
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::MIN), |b, (i, p)| if p > b.1 { (i, p) } else { b });
            if sum > ASSIGN_FLOOR && top / sum > ASSIGN_SHARE {
                out.push((mono, owner));
            }
        }
        out
    }

    /// Real and imaginary parts of every non-owner amplitude on the
    /// assigned events.
    fn leakage(&self, x: &[f64], assigned: &[(Monomial, usize)]) -> Vec<f64> {
        let k = self.inputs.len();
        let table = self.amplitudes(x).unwrap_or_default();
        let zero = vec![Complex64::new(0.0, 0.0); k];
        let mut out = Vec::with_capacity(assigned.len() * 2 * k);
        for (mono, owner) in assigned {
            let amps = table.get(mono).unwrap_or(&zero);
            for (j, a) in amps.iter().enumerate() {
                if j != *owner {
                    out.push(a.re);
                    out.push(a.im);
                }
            }
        }
        out
    }
}

// --- driver -----------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub evaluations: usize,
    /// Exact success at the restart's final point.
    pub success: f64,
    /// Best exact success over this and all earlier restarts.
    pub best_so_far: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub network: ReckNetwork,
    pub modes: Vec<Mode>,
    pub success: f64,
    /// Success of `network` recomputed through the full event analysis.
    pub recomputed_success: f64,
    pub evaluations: usize,
    pub seed: u64,
    pub trace: Vec<RestartTrace>,
}

impl OptimizeResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("optimizer results always serialize")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub n_modes: usize,
    pub budget: usize,
    pub seed: u64,
    pub restarts: usize,
}

impl OptimizeConfig {
    pub fn new(n_modes: usize, budget: usize, seed: u64) -> Self {
        OptimizeConfig {
            n_modes,
            budget,
            seed,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

/// Dual-rail Bell-like inputs on modes `a1, b1, a2, b2`:
/// `s a1a2 + c b1b2`, `c a1a2 − s b1b2`, `s a1b2 + c b1a2`, `c a1b2 − s b1a2`.
pub fn dual_rail_bell_like(theta: f64) -> Result<Vec<(String, PhotonState)>> {
    let (s, c) = theta.sin_cos();
    let rows = [
        [(s, ["a1", "a2"]), (c, ["b1", "b2"])],
        [(c, ["a1", "a2"]), (-s, ["b1", "b2"])],
        [(s, ["a1", "b2"]), (c, ["b1", "a2"])],
        [(c, ["a1", "b2"]), (-s, ["b1", "a2"])],
    ];
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let terms = row
                .iter()
                .map(|(a, paths)| {
                    let modes = paths
                        .iter()
                        .map(|p| Mode::new(p))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((*a, modes))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((format!("psi{}", i + 1), PhotonState::from_real(terms)?))
        })
        .collect()
}

fn prepare(
    inputs: &[(String, PhotonState)],
    n_modes: usize,
    priors: Option<&[f64]>,
) -> Result<Problem> {
    if inputs.is_empty() {
        return Err(Error::Input("no inputs to discriminate".into()));
    }
    let mut support = std::collections::BTreeSet::new();
    for (_, s) in inputs {
        support.extend(s.support());
    }
    if support.len() > n_modes {
        return Err(Error::Parameter(format!(
            "inputs occupy {} modes but the network has {n_modes}",
            support.len()
        )));
    }
    let paths: std::collections::BTreeSet<_> = support.iter().map(|m| m.path).collect();
    if paths.len() != support.len() {
        return Err(Error::Input(
            "each input mode needs its own path label".into(),
        ));
    }
    let mut modes: Vec<Mode> = support.into_iter().collect();
    let mut pad = 0;
    while modes.len() < n_modes {
        let m = Mode::new(&format!("pad{pad}"))?;
        pad += 1;
        if !modes.contains(&m) {
            modes.push(m);
        }
    }
    let priors = match priors {
        Some(p) => p.to_vec(),
        None => uniform_priors(inputs.len()),
    };
    if priors.len() != inputs.len() {
        return Err(Error::Input("one prior per input is required".into()));
    }
    Ok(Problem {
        modes,
        inputs: inputs.iter().map(|(_, s)| s.clone()).collect(),
        priors,
    })
}

/// One restart: staged smoothed simplex climbs, assignment, least-squares
/// polish, exact scoring. Returns `(x, success, evaluations)`.
fn restart(problem: &Problem, rng: &mut ChaCha8Rng, budget: usize) -> (Vec<f64>, f64, usize) {
    let m = problem.couplers();
    let mut x: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..PI)).collect();
    x.extend((0..m).map(|_| rng.random_range(0.0..2.0 * PI)));
    if budget <= 1 {
        let success = problem.strict(&x);
        return (x, success, 1);
    }
    let mut used = 0;
    let search = budget.saturating_sub(2);
    let simplex_share = search * 4 / 5;
    for (stage, power) in SOFT_POWERS.into_iter().enumerate() {
        let share = simplex_share / SOFT_POWERS.len()
            + usize::from(stage < simplex_share % SOFT_POWERS.len());
        let objective = |y: &[f64]| -problem.soft(y, power);
        let res = nelder_mead(&objective, &x, 0.3, share, SIMPLEX_TOL);
        used += res.evaluations;
        x = res.x;
    }
    let coarse = problem.strict(&x);
    used += 1;
    let assigned = problem.assignment(&x);
    let mut best = (x.clone(), coarse);
    if !assigned.is_empty() && budget > used + 1 {
        let residual = |y: &[f64]| problem.leakage(y, &assigned);
        let (polished, evals) = levenberg_marquardt(&residual, &x, budget - used - 1);
        used += evals;
        let fine = problem.strict(&polished);
        used += 1;
        if fine > best.1 {
            best = (polished, fine);
        }
    }
    (best.0, best.1, used)
}

/// Searches `n_modes`-mode meshes for the best unambiguous discrimination
/// of `inputs`. Deterministic for a given seed regardless of thread count.
pub fn optimize(
    inputs: &[(String, PhotonState)],
    priors: Option<&[f64]>,
    config: &OptimizeConfig,
) -> Result<OptimizeResult> {
    if config.budget == 0 {
        return Err(Error::Parameter("budget must be at least 1".into()));
    }
    if config.restarts == 0 {
        return Err(Error::Parameter("at least one restart is required".into()));
    }
    let problem = prepare(inputs, config.n_modes, priors)?;
    let restarts = config.restarts.min(config.budget);
    let base = config.budget / restarts;
    let extra = config.budget % restarts;

    let outcomes: Vec<(Vec<f64>, f64, usize)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            restart(&problem, &mut rng, base + usize::from(r < extra))
        })
        .collect();

    let mut trace = Vec::with_capacity(restarts);
    let mut best_index = 0;
    let mut best_so_far = f64::MIN;
    for (r, (_, success, evals)) in outcomes.iter().enumerate() {
        if *success > best_so_far {
            best_so_far = *success;
            best_index = r;
        }
        trace.push(RestartTrace {
            restart: r,
            evaluations: *evals,
            success: *success,
            best_so_far,
        });
    }
    let (x, success, _) = &outcomes[best_index];
    let network = problem.network(x);

    let u = realize(&network)?;
    let map = ModeMap::square(problem.modes.clone(), u)?;
    let mut outputs = Vec::with_capacity(inputs.len());
    for (id, s) in inputs {
        outputs.push((id.clone(), apply_mode_map(s, &map)?));
    }
    let report = analyze(&outputs, &DetectorSpec::paths(), Some(&problem.priors))?;

    Ok(OptimizeResult {
        network,
        modes: problem.modes,
        success: *success,
        recomputed_success: report.success_probability,
        evaluations: outcomes.iter().map(|o| o.2).sum(),
        seed: config.seed,
        trace,
    })
}
