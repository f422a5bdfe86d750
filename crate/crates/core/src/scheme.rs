//! Controlled phase-space rotation with displaced photon counting.
//!
//! A wire site is prepared by a qubit-controlled rotation `e^{∓iθn̂}` of a
//! coherent state `|α⟩` followed by a Hadamard on the correlation qubit.
//! Counting photons after a real shift `x` applies
//! `H·diag(e^{−iψ}, e^{iψ})` with `ψ = nφ(x) − xγ`, so every outcome is a
//! known unitary and a gate can be compiled by a random walk that replans
//! whenever an unwanted outcome appears.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Poisson};

use crate::fock::{self, FockOperator, TwoModeOperator};
use crate::su2::{self, euler_decompose, phase_gate, Gate2, Gate4, PhaseDistance};
use crate::wire::{self, CorrelationState, WireTensor};
use crate::{Error, Result};

/// Resource parameters: coherent amplitude, rotation angle and oracle cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeParameters {
    pub alpha: f64,
    pub theta: f64,
    pub n_max: usize,
}

impl SchemeParameters {
    pub fn new(alpha: f64, theta: f64, n_max: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", "must be positive and finite"));
        }
        if !(theta > 0.0 && theta < PI / 2.0) {
            return Err(Error::param("theta", "must lie in (0, pi/2)"));
        }
        if n_max == 0 {
            return Err(Error::param("n_max", "must be at least 1"));
        }
        Ok(Self { alpha, theta, n_max })
    }

    /// `α = 2`, `θ = π/8`, `n_max = 40`.
    pub fn desk() -> Self {
        Self { alpha: 2.0, theta: PI / 8.0, n_max: 40 }
    }

    /// `γ = α sin θ`.
    pub fn gamma(&self) -> f64 {
        self.alpha * self.theta.sin()
    }

    /// The shift at which the rotated amplitudes become purely imaginary.
    pub fn centre_shift(&self) -> f64 {
        -self.alpha * self.theta.cos()
    }

    /// Shift range searched by the compiler.
    pub fn shift_window(&self) -> (f64, f64) {
        let c = self.centre_shift();
        (c - 4.0, c + 4.0)
    }
}

/// `φ(x) = atan2(α sinθ, α cosθ + x) ∈ (0, π)`.
pub fn phi_of_x(p: &SchemeParameters, x: f64) -> f64 {
    (p.alpha * p.theta.sin()).atan2(p.alpha * p.theta.cos() + x)
}

pub fn x_of_phi(p: &SchemeParameters, phi: f64) -> Result<f64> {
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::Domain(alloc::format!("phi = {phi} outside (0, pi)")));
    }
    Ok(p.gamma() / phi.tan() - p.alpha * p.theta.cos())
}

/// `ψ_n(x) = nφ(x) − xγ`.
pub fn step_phase(p: &SchemeParameters, x: f64, n: usize) -> f64 {
    n as f64 * phi_of_x(p, x) - x * p.gamma()
}

/// Gate applied by outcome `n` at shift `x`: `H·S(2ψ_n(x))`.
pub fn step_gate(p: &SchemeParameters, x: f64, n: usize) -> Gate2 {
    Gate2::HADAMARD * phase_gate(2.0 * step_phase(p, x, n))
}

/// `H·diag(e^{−inφ}, e^{inφ})` without the displacement phase; agrees with
/// [`step_gate`] only at `x = 0`.
pub fn step_gate_without_displacement_phase(p: &SchemeParameters, x: f64, n: usize) -> Gate2 {
    Gate2::HADAMARD * phase_gate(2.0 * n as f64 * phi_of_x(p, x))
}

/// Photon-number mean after the shift: `|αe^{iθ} + x|²`.
pub fn outcome_mean(p: &SchemeParameters, x: f64) -> f64 {
    p.alpha * p.alpha + x * x + 2.0 * x * p.alpha * p.theta.cos()
}

/// The same mean with the cross term missing its amplitude factor.
pub fn printed_outcome_mean(p: &SchemeParameters, x: f64) -> f64 {
    p.alpha * p.alpha + x * x + 2.0 * x * p.theta.cos()
}

/// Poisson weight of `n` photons at shift `x`.
pub fn outcome_probability(p: &SchemeParameters, x: f64, n: usize) -> f64 {
    poisson(outcome_mean(p, x), n)
}

fn poisson(mean: f64, n: usize) -> f64 {
    if mean <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-mean + n as f64 * mean.ln() - libm::lgamma(n as f64 + 1.0)).exp()
}

fn sample_poisson(mean: f64, rng: &mut dyn RngCore) -> usize {
    if mean < 1e-300 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
}

/// A shift together with the outcome that realises the wanted phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftChoice {
    pub x: f64,
    pub intended_n: usize,
    pub probability: f64,
}

/// Best shift for realising `H·S(phi_s)` with `n ∈ {0, 1}`: all solutions
/// of `ψ_n(x) ≡ phi_s/2 (mod π)` inside the shift window are enumerated and
/// the most likely one wins.
pub fn choose_shift(p: &SchemeParameters, phi_s: f64) -> ShiftChoice {
    let target = 0.5 * phi_s;
    let (lo, hi) = p.shift_window();
    let g = p.gamma();
    let mut best = ShiftChoice { x: 0.0, intended_n: 0, probability: -1.0 };
    let mut consider = |x: f64, n: usize| {
        let prob = outcome_probability(p, x, n);
        if prob > best.probability {
            best = ShiftChoice { x, intended_n: n, probability: prob };
        }
    };
    // n = 0: −xγ = target + kπ
    let k_lo = ((-hi * g - target) / PI).ceil() as i64;
    let k_hi = ((-lo * g - target) / PI).floor() as i64;
    for k in k_lo..=k_hi {
        consider(-(target + k as f64 * PI) / g, 0);
    }
    // n = 1: ψ₁ is strictly decreasing in x
    let (top, bottom) = (step_phase(p, lo, 1), step_phase(p, hi, 1));
    let k_lo = ((bottom - target) / PI).ceil() as i64;
    let k_hi = ((top - target) / PI).floor() as i64;
    for k in k_lo..=k_hi {
        let level = target + k as f64 * PI;
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            if step_phase(p, mid, 1) > level {
                a = mid;
            } else {
                b = mid;
            }
        }
        consider(0.5 * (a + b), 1);
    }
    best
}

/// `min over phases of choose_shift(φ).probability`, by a 720-point grid
/// with golden-section refinement around the worst cell.
pub fn p_floor(p: &SchemeParameters) -> f64 {
    let f = |phi: f64| choose_shift(p, phi).probability;
    let cells = 720;
    let h = TAU / cells as f64;
    let (mut arg, mut worst) = (0.0, f64::INFINITY);
    for i in 0..cells {
        let phi = h * i as f64;
        let v = f(phi);
        if v < worst {
            (arg, worst) = (phi, v);
        }
    }
    let (mut a, mut b) = (arg - h, arg + h);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            (d, fd) = (c, fc);
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            (c, fc) = (d, fd);
            d = a + r * (b - a);
            fd = f(d);
        }
        worst = worst.min(fc).min(fd);
    }
    worst
}

/// Phases `a₁, …, a_k` (time order) with `u ≅ H S(a_k) ⋯ H S(a₁)`; `k ≤ 3`.
pub fn plan_phases(u: &Gate2) -> Result<Vec<f64>> {
    let m = Gate2::HADAMARD * *u;
    let scale = m.op_norm();
    let tight = 1e-13 * scale;
    if m.0[0][1].norm() <= tight && m.0[1][0].norm() <= tight {
        return Ok(vec![(m.0[1][1] / m.0[0][0]).arg()]);
    }
    let flat = scale * FRAC_1_SQRT_2;
    if m.0.iter().flatten().all(|z| (z.norm() - flat).abs() <= tight) {
        return Ok(vec![(m.0[0][1] / m.0[0][0]).arg(), (m.0[1][0] / m.0[0][0]).arg()]);
    }
    let t = euler_decompose(&m)?;
    Ok(vec![t.phi3, t.phi2, t.phi1])
}

/// One site of a compile walk.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkStep {
    pub x: f64,
    pub intended_n: usize,
    pub observed_n: usize,
    pub applied: Gate2,
    /// Distance of the remaining correction from the identity.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkTrace {
    pub target: Gate2,
    pub steps: Vec<WalkStep>,
    pub residual: f64,
    pub success: bool,
}

impl WalkTrace {
    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Product of the applied gates, latest on the left.
    pub fn applied_product(&self) -> Gate2 {
        self.steps.iter().fold(Gate2::IDENTITY, |acc, s| s.applied * acc)
    }

    /// `dist_up_to_phase(product, target)`.
    pub fn replay_distance(&self) -> f64 {
        self.applied_product().dist_up_to_phase(&self.target)
    }
}

/// Upper limit on sites per compile.
pub const STEP_BUDGET: usize = 1_000_000;

/// Random-walk compilation of `target` to within `eps` (up to phase).
pub fn compile_gate(p: &SchemeParameters, target: &Gate2, rng: &mut dyn RngCore, eps: f64) -> Result<WalkTrace> {
    if !(eps > 0.0) {
        return Err(Error::param("eps", "must be positive"));
    }
    let defect = target.unitarity_defect();
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let identity = Gate2::IDENTITY;
    let mut remaining = *target;
    let mut plan: VecDeque<ShiftChoice> = VecDeque::new();
    let mut steps = Vec::new();
    let mut residual = remaining.dist_up_to_phase(&identity);
    while residual > eps {
        if steps.len() >= STEP_BUDGET {
            return Err(Error::StepBudget(STEP_BUDGET));
        }
        if plan.is_empty() {
            plan = plan_phases(&remaining)?.into_iter().map(|a| choose_shift(p, a)).collect();
        }
        let choice = plan[0];
        let observed_n = sample_poisson(outcome_mean(p, choice.x), rng);
        let applied = step_gate(p, choice.x, observed_n);
        remaining = remaining * applied.adjoint();
        if observed_n == choice.intended_n {
            plan.pop_front();
        } else {
            plan.clear();
        }
        residual = remaining.dist_up_to_phase(&identity);
        steps.push(WalkStep { x: choice.x, intended_n: choice.intended_n, observed_n, applied, residual });
    }
    Ok(WalkTrace { target: *target, steps, residual, success: true })
}

/// Probability that the first plan for `target` succeeds without replanning.
pub fn block_success_probability(p: &SchemeParameters, target: &Gate2) -> Result<f64> {
    if target.dist_up_to_phase(&Gate2::IDENTITY) == 0.0 {
        return Ok(1.0);
    }
    Ok(plan_phases(target)?.into_iter().map(|a| choose_shift(p, a).probability).product())
}

/// Oracle wire: controlled rotation of `|α⟩` followed by `H` on the qubit.
pub fn scheme_wire(p: &SchemeParameters) -> Result<WireTensor> {
    let input = fock::coherent_state(C64::new(p.alpha, 0.0), p.n_max)?;
    let u = wire::with_correlation_gate(&wire::controlled_rotation(p.theta, p.n_max), &Gate2::HADAMARD, p.n_max);
    wire::matrices_from_interaction(&u, 2, &input)
}

/// Oracle wire without the Hadamard, as used during coupling.
pub fn coupling_wire(p: &SchemeParameters) -> Result<WireTensor> {
    let input = fock::coherent_state(C64::new(p.alpha, 0.0), p.n_max)?;
    wire::matrices_from_interaction(&wire::controlled_rotation(p.theta, p.n_max), 2, &input)
}

/// Gate and probability from projecting a wire site onto `⟨n|D(x)`.
pub fn oracle_step(w: &WireTensor, x: f64, n: usize) -> Result<(Gate2, f64)> {
    let shift = fock::displacement_op(C64::new(x, 0.0), w.phys_dim() - 1);
    Ok(oracle_steps(w, &shift, &[n])?.remove(0))
}

/// [`oracle_step`] for several counts with a precomputed `D(x)`.
pub fn oracle_steps(w: &WireTensor, shift: &FockOperator, counts: &[usize]) -> Result<Vec<(Gate2, f64)>> {
    let rows: Vec<Vec<C64>> = counts.iter().map(|&n| shift.row(n)).collect();
    wire::skew_measure(w, &rows)
        .into_iter()
        .map(|a| {
            let prob = a.adjoint().matmul(&a).trace().re / 2.0;
            if prob <= 0.0 {
                return Err(Error::param("n", "outcome has zero weight"));
            }
            Ok((Gate2::from_matrix(&a.scale_real(1.0 / prob.sqrt()))?, prob))
        })
        .collect()
}

/// Diagonal coupling gate: exponents `−iπ/4·(n₁+7n₂, 7n₁+n₂, 3n₁+5n₂, 5n₁+3n₂)`.
pub fn coupling_gate(n1: usize, n2: usize) -> Gate4 {
    let (a, b) = (n1 as f64, n2 as f64);
    let e = |k: f64| C64::from_polar(1.0, -PI / 4.0 * k);
    Gate4::diag([e(a + 7.0 * b), e(7.0 * a + b), e(3.0 * a + 5.0 * b), e(5.0 * a + 3.0 * b)])
}

/// Outcome-independent local phase from the displacements:
/// `diag(e^{−iκ}, e^{iκ})^{⊗2}` with `κ = α² sinθ cosθ`.
pub fn coupling_local_phase(p: &SchemeParameters) -> Gate4 {
    let kappa = p.alpha * p.alpha * p.theta.sin() * p.theta.cos();
    let k = Gate2::diag(C64::from_polar(1.0, -kappa), C64::from_polar(1.0, kappa));
    k.kron(&k)
}

/// Mode operations between the two controlled rotations and the counters.
pub fn coupling_operator(p: &SchemeParameters) -> TwoModeOperator {
    let shift = fock::displacement_op(C64::new(p.centre_shift(), 0.0), p.n_max);
    TwoModeOperator::Sequence(vec![
        TwoModeOperator::Local { first: Some(shift.clone()), second: Some(shift) },
        TwoModeOperator::Local { first: None, second: Some(fock::rotation_op(PI / 2.0, p.n_max)) },
        TwoModeOperator::Balanced,
    ])
}

/// `(L₁, L₂)` with `coupling_gate·K ≅ (L₁ ⊗ L₂)·CZ^{n₁+n₂}`.
pub fn cz_local_factors(p: &SchemeParameters, n1: usize, n2: usize) -> (Gate2, Gate2) {
    let (a, b) = (n1 as f64, n2 as f64);
    let e = |k: f64| C64::from_polar(1.0, -PI / 4.0 * k);
    let kappa = p.alpha * p.alpha * p.theta.sin() * p.theta.cos();
    let k = Gate2::diag(C64::from_polar(1.0, -kappa), C64::from_polar(1.0, kappa));
    let l1 = Gate2::diag(e(a + 7.0 * b), e(3.0 * a + 5.0 * b)) * k;
    let l2 = Gate2::diag(C64::new(1.0, 0.0), e(6.0 * a - 6.0 * b)) * k;
    (l1, l2)
}

/// Result of one coupling attempt.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingOutcome {
    pub n1: usize,
    pub n2: usize,
    /// The applied two-qubit gate including the local displacement phase.
    pub gate: Gate4,
    /// True when `n₁ + n₂` is odd, i.e. a `C_Z` was applied.
    pub entangling: bool,
    pub state: CorrelationState,
}

/// Couples two wires. Both counts are Poisson with mean `γ²` whatever the
/// correlation state.
pub fn couple_wires(p: &SchemeParameters, state: &CorrelationState, rng: &mut dyn RngCore) -> Result<CouplingOutcome> {
    if state.dim() != 4 {
        return Err(Error::Dimension { expected: 4, found: state.dim() });
    }
    let mean = p.gamma() * p.gamma();
    let defect = 1.0 - (0..=p.n_max).map(|n| poisson(mean, n)).sum::<f64>();
    let limit = crate::Tolerances::DEFAULT.probability_abort;
    if defect > limit {
        return Err(Error::ProbabilityMass { defect, limit });
    }
    let n1 = sample_poisson(mean, rng);
    let n2 = sample_poisson(mean, rng);
    let gate = coupling_gate(n1, n2) * coupling_local_phase(p);
    Ok(CouplingOutcome { n1, n2, gate, entangling: (n1 + n2) % 2 == 1, state: state.apply_gate4(&gate) })
}

/// `P(n₁ + n₂ odd) = (1 − e^{−4γ²})/2`.
pub fn cz_success_probability(p: &SchemeParameters) -> f64 {
    0.5 * (1.0 - (-4.0 * p.gamma() * p.gamma()).exp())
}

/// The same probability by explicit summation over odd `n₁ + n₂ ≤ 2 n_max`.
pub fn cz_success_probability_by_summation(p: &SchemeParameters) -> f64 {
    let pmf: Vec<f64> = (0..=p.n_max).map(|n| poisson(p.gamma() * p.gamma(), n)).collect();
    let mut odd = 0.0;
    for (i, a) in pmf.iter().enumerate() {
        for (j, b) in pmf.iter().enumerate() {
            if (i + j) % 2 == 1 {
                odd += a * b;
            }
        }
    }
    odd
}

/// Phase picked up by the `|1⟩` branch when the readout displacement is applied.
fn readout_phase(p: &SchemeParameters) -> f64 {
    p.alpha * p.alpha * (2.0 * p.theta).sin()
}

/// Readout Kraus operator for `n` photons: `H·diag(δ_{n0}, e^{iκ}⟨n|2iγ⟩)`.
pub fn readout_kraus(p: &SchemeParameters, n: usize) -> Gate2 {
    let g = p.gamma();
    let coherent = C64::new(0.0, 2.0 * g).powu(n as u32) * (-2.0 * g * g - 0.5 * libm::lgamma(n as f64 + 1.0)).exp();
    let vacuum = if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    Gate2::HADAMARD * Gate2::diag(vacuum, C64::from_polar(1.0, readout_phase(p)) * coherent)
}

/// Unitary frame `H·diag(1, e^{iκ})` undone after each readout round.
pub fn readout_frame(p: &SchemeParameters) -> Gate2 {
    Gate2::HADAMARD * Gate2::diag(C64::new(1.0, 0.0), C64::from_polar(1.0, readout_phase(p)))
}

/// Displacement `−α(cosθ − i sinθ)` used by the readout oracle.
pub fn readout_displacement(p: &SchemeParameters) -> C64 {
    -C64::from_polar(p.alpha, -p.theta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Readout {
    pub bit: u8,
    pub repetitions: usize,
    pub compile_steps: usize,
    pub state: CorrelationState,
    /// Fidelity with the computational basis state of `bit`.
    pub fidelity: f64,
}

/// Stop once the suppressed amplitude falls below this ratio.
pub const READOUT_WEIGHT: f64 = 1e-7;
/// Accuracy of the frame corrections.
pub const CORRECTION_EPS: f64 = 1e-10;

fn apply_compiled(p: &SchemeParameters, state: &CorrelationState, gate: &Gate2, rng: &mut dyn RngCore) -> Result<(CorrelationState, usize)> {
    let trace = compile_gate(p, gate, rng, CORRECTION_EPS)?;
    Ok((state.apply_gate2(&trace.applied_product()), trace.step_count()))
}

/// Repeated weak measurement toward the computational basis.
pub fn readout(p: &SchemeParameters, state: &CorrelationState, rng: &mut dyn RngCore) -> Result<Readout> {
    if state.dim() != 2 {
        return Err(Error::Dimension { expected: 2, found: state.dim() });
    }
    let g2 = p.gamma() * p.gamma();
    let undo = readout_frame(p).adjoint();
    let click = 1.0 - (-4.0 * g2).exp();
    let mut state = state.clone();
    let mut weight = 1.0;
    let mut repetitions = 0;
    let mut compile_steps = 0;
    let bit = loop {
        repetitions += 1;
        let [_, b] = state.as_pair();
        if rng.random::<f64>() < b.norm_sqr() * click {
            state = CorrelationState::basis(1, 2).apply_gate2(&readout_frame(p));
            let (s, k) = apply_compiled(p, &state, &undo, rng)?;
            state = s;
            compile_steps += k;
            break 1;
        }
        let m = readout_kraus(p, 0).to_matrix();
        state = state.evolve(&m)?.0;
        let (s, k) = apply_compiled(p, &state, &undo, rng)?;
        state = s;
        compile_steps += k;
        weight *= (-2.0 * g2).exp();
        if weight <= READOUT_WEIGHT {
            break 0;
        }
    };
    let fidelity = state.fidelity(&CorrelationState::basis(bit as usize, 2));
    Ok(Readout { bit, repetitions, compile_steps, state, fidelity })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Initialization {
    pub readout: Readout,
    pub state: CorrelationState,
    pub fidelity: f64,
}

/// Drives an unknown state to `|0⟩`: readout, then a compiled `X` if the
/// readout gave `1`.
pub fn initialize(p: &SchemeParameters, state: &CorrelationState, rng: &mut dyn RngCore) -> Result<Initialization> {
    let r = readout(p, state, rng)?;
    let state = if r.bit == 1 { apply_compiled(p, &r.state, &Gate2::PAULI_X, rng)?.0 } else { r.state.clone() };
    let fidelity = state.fidelity(&CorrelationState::basis(0, 2));
    Ok(Initialization { readout: r, state, fidelity })
}

/// `2n(1 − p₀)^{k/4}` for `n` couplings spaced `k` sites apart.
pub fn nonadaptive_failure_bound(n_gates: usize, k_spacing: usize, p0: f64) -> Result<f64> {
    if !(p0 > 0.0 && p0 <= 1.0) {
        return Err(Error::param("p0", "must lie in (0, 1]"));
    }
    if k_spacing % 4 != 0 {
        return Err(Error::param("k_spacing", "must be a multiple of 4"));
    }
    Ok(2.0 * n_gates as f64 * (1.0 - p0).powi((k_spacing / 4) as i32))
}

/// Event-level layout: each coupling needs a successful four-site block on
/// both wires within `k/4` attempts. Block success probabilities are drawn
/// from `block_pool`. Returns `true` when some coupling fails.
pub fn simulate_layout_failure(n_gates: usize, k_spacing: usize, block_pool: &[f64], rng: &mut dyn RngCore) -> bool {
    let blocks = k_spacing / 4;
    for _ in 0..2 * n_gates {
        let ok = (0..blocks).any(|_| {
            let p = block_pool[rng.random_range(0..block_pool.len())];
            rng.random::<f64>() < p
        });
        if !ok {
            return true;
        }
    }
    false
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthMode {
    Unitary,
    Nonunitary,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorGrowth {
    /// Distance of the perturbed product from the ideal product.
    pub measured: f64,
    pub bound: f64,
    /// `n·ε`.
    pub linear: f64,
}

/// Error accumulated by `n` gates each within `eps` of its target.
///
/// Unitary mode perturbs Haar targets by random rotations of distance `eps`.
/// Non-unitary mode uses `W_i diag(1+ε, 1) W_{i−1}†` against `W_i W_{i−1}†`,
/// which stacks the excess norm on one direction.
pub fn error_growth(eps: f64, n: usize, mode: GrowthMode, rng: &mut dyn RngCore) -> Result<ErrorGrowth> {
    if !(eps >= 0.0) {
        return Err(Error::param("eps", "must be non-negative"));
    }
    let linear = n as f64 * eps;
    let mut ideal = Gate2::IDENTITY;
    let mut actual = Gate2::IDENTITY;
    match mode {
        GrowthMode::Unitary => {
            let angle = 2.0 * (0.5 * eps.min(2.0)).asin();
            for _ in 0..n {
                let target = su2::haar_unitary(rng);
                let axis = su2::haar_state(2, rng);
                let kick = rotation_about(axis[0], axis[1], angle);
                ideal = target * ideal;
                actual = target * kick * actual;
            }
            Ok(ErrorGrowth { measured: actual.sub(&ideal).op_norm(), bound: linear, linear })
        }
        GrowthMode::Nonunitary => {
            let stretch = Gate2::diag(C64::new(1.0 + eps, 0.0), C64::new(1.0, 0.0));
            let mut previous = su2::haar_unitary(rng);
            for _ in 0..n {
                let next = su2::haar_unitary(rng);
                ideal = next * previous.adjoint() * ideal;
                actual = next * stretch * previous.adjoint() * actual;
                previous = next;
            }
            let bound = linear * (1.0 + eps).powi(n as i32);
            Ok(ErrorGrowth { measured: actual.sub(&ideal).op_norm(), bound, linear })
        }
    }
}

/// `P + e^{−iω}(1 − P)` for the projector `P` onto `(a, b)`; its distance
/// from the identity is `2 sin(ω/2)`.
fn rotation_about(a: C64, b: C64, omega: f64) -> Gate2 {
    let proj = Gate2([[a * a.conj(), a * b.conj()], [b * a.conj(), b * b.conj()]]);
    let rest = Gate2::IDENTITY.sub(&proj);
    let Gate2(mut m) = rest.scale(C64::from_polar(1.0, -omega));
    for (row, prow) in m.iter_mut().zip(proj.0) {
        for (z, pz) in row.iter_mut().zip(prow) {
            *z += pz;
        }
    }
    Gate2(m)
}
