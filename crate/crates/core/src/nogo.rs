//! Wires whose Gaussian measurements leave no room for control.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, RngCore};

use crate::fock::{self, FockVector};
use crate::linalg::ComplexMatrix;
use crate::stats::{self, LineFit};
use crate::su2::{phase_gate, Gate2, PhaseDistance};
use crate::wire::{self, TabulatedDensity, WireTensor};
use crate::{Error, Result};

/// Quadrature centre `(q₀, p₀)` of the rotated coherent input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianWireSpec {
    pub q0: f64,
    pub p0: f64,
}

impl GaussianWireSpec {
    /// `q₀ = √2 α cosθ`, `p₀ = √2 α sinθ`.
    pub fn from_resource(alpha: f64, theta: f64) -> Self {
        Self { q0: SQRT_2 * alpha * theta.cos(), p0: SQRT_2 * alpha * theta.sin() }
    }

    /// Resource with `θ = π/4` and `p₀q₀ ≡ phi (mod 2π)`, so the centred
    /// outcome applies `S(phi)`.
    pub fn for_phase(phi: f64) -> Self {
        let alpha = (phi.rem_euclid(TAU) + TAU).sqrt();
        Self::from_resource(alpha, PI / 4.0)
    }
}

fn gaussian_density(x: f64, centre: f64) -> f64 {
    (-(x - centre) * (x - centre)).exp() / PI.sqrt()
}

/// `q`-homodyne gate `diag(e^{−ip₀(x−q₀/2)}, e^{ip₀(x−q₀/2)})` and its density.
pub fn gaussian_wire_gate(spec: &GaussianWireSpec, x: f64) -> (Gate2, f64) {
    let phase = spec.p0 * (x - 0.5 * spec.q0);
    (Gate2::diag(C64::from_polar(1.0, -phase), C64::from_polar(1.0, phase)), gaussian_density(x, spec.q0))
}

/// Gate and density when the mode is displaced by `(Δq + iΔp)/√2` before
/// the `q`-homodyne measurement, including the displacement's own phase.
pub fn displaced_gaussian_wire_gate(spec: &GaussianWireSpec, dq: f64, dp: f64, x: f64) -> (Gate2, f64) {
    let (q0, p0) = (spec.q0, spec.p0);
    let centre = x - 0.5 * (q0 + dq);
    let lower = (dp - p0) * centre + 0.5 * (dp * q0 + dq * p0);
    let upper = (dp + p0) * centre + 0.5 * (dp * q0 - dq * p0);
    (Gate2::diag(C64::from_polar(1.0, lower), C64::from_polar(1.0, upper)), gaussian_density(x, q0 + dq))
}

/// Largest deviation between the displaced family and the undisplaced
/// family relabelled by `x ↦ x − Δq`, over gates (up to phase) and densities.
pub fn displacement_invariance_check(spec: &GaussianWireSpec, deltas: &[(f64, f64)], xs: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &(dq, dp) in deltas {
        for &x in xs {
            let (shifted, p_shifted) = displaced_gaussian_wire_gate(spec, dq, dp, x);
            let (plain, p_plain) = gaussian_wire_gate(spec, x - dq);
            worst = worst.max(shifted.dist_up_to_phase(&plain)).max((p_shifted - p_plain).abs());
        }
    }
    worst
}

/// The same comparison with the displaced gates built from the Fock-space
/// wire: rows `⟨x|D(Δ)` contracted with the controlled-rotation wire.
pub fn displacement_invariance_oracle_check(
    alpha: f64,
    theta: f64,
    n_max: usize,
    deltas: &[(f64, f64)],
    xs: &[f64],
) -> Result<f64> {
    let input = fock::coherent_state(C64::new(alpha, 0.0), n_max)?;
    let w = wire::matrices_from_interaction(&wire::controlled_rotation(theta, n_max), 2, &input)?;
    let spec = GaussianWireSpec::from_resource(alpha, theta);
    let mut worst: f64 = 0.0;
    for &(dq, dp) in deltas {
        let shift = fock::displacement_op(C64::new(dq, dp) / SQRT_2, n_max);
        for &x in xs {
            let psi = fock::quadrature_wavefunctions(n_max, x);
            let row = shift.matrix().vec_mul(&psi.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>());
            let a = wire::skew_measure(&w, &[row]).remove(0);
            let density = a.adjoint().matmul(&a).trace().re / 2.0;
            let gate = Gate2::from_matrix(&a.scale_real(1.0 / density.sqrt()))?;
            let (plain, p_plain) = gaussian_wire_gate(&spec, x - dq);
            worst = worst.max(gate.dist_up_to_phase(&plain)).max((density - p_plain).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    pub fn angle(self) -> f64 {
        match self {
            Quadrature::Q => 0.0,
            Quadrature::P => PI / 2.0,
        }
    }
}

/// Closed-form gate and density for the `(|0⟩+|2⟩)/√2` input at `θ = π/4`.
pub fn two_basis_example(x: f64, basis: Quadrature) -> (Gate2, f64) {
    let phi = ((2.0 * x * x - 1.0) / SQRT_2).atan();
    let sign = match basis {
        Quadrature::Q => -1.0,
        Quadrature::P => 1.0,
    };
    let gate = Gate2::diag(C64::from_polar(1.0, sign * phi), C64::from_polar(1.0, -sign * phi));
    let x2 = x * x;
    let density = (4.0 * x2 * x2 - 4.0 * x2 + 3.0) * (-x2).exp() / (4.0 * PI.sqrt());
    (gate, density)
}

/// The three-level wire behind [`two_basis_example`].
pub fn two_basis_wire() -> Result<WireTensor> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let input = FockVector::from_amplitudes(vec![C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)]);
    wire::matrices_from_interaction(&wire::controlled_rotation(PI / 4.0, 2), 2, &input)
}

/// Homodyne measurements at every angle on a finite wire.
#[derive(Clone, Debug, PartialEq)]
pub struct HomodyneFamily {
    wire: WireTensor,
    window: f64,
    grid_points: usize,
}

impl HomodyneFamily {
    pub fn new(wire: WireTensor) -> Self {
        Self { wire, window: 8.0, grid_points: 4001 }
    }

    pub fn wire(&self) -> &WireTensor {
        &self.wire
    }

    /// Unnormalized matrix for outcome `x` at quadrature angle `angle`.
    pub fn matrix(&self, angle: f64, x: f64) -> ComplexMatrix {
        let n_max = self.wire.phys_dim() - 1;
        wire::skew_measure(&self.wire, &[fock::homodyne_projector_row(angle, x, n_max)]).remove(0)
    }

    /// State-averaged density `tr(A†A)/D`.
    pub fn density(&self, angle: f64, x: f64) -> f64 {
        let a = self.matrix(angle, x);
        a.adjoint().matmul(&a).trace().re / a.rows() as f64
    }

    /// Normalized gate `A/√density` and the density.
    pub fn gate(&self, angle: f64, x: f64) -> Result<(Gate2, f64)> {
        let a = self.matrix(angle, x);
        let density = a.adjoint().matmul(&a).trace().re / a.rows() as f64;
        Ok((Gate2::from_matrix(&a.scale_real(1.0 / density.sqrt()))?, density))
    }

    pub fn sampler(&self, angle: f64) -> GridSampler {
        let step = 2.0 * self.window / (self.grid_points - 1) as f64;
        let density = (0..self.grid_points).map(|i| self.density(angle, -self.window + step * i as f64)).collect();
        GridSampler { table: TabulatedDensity::new(-self.window, step, density) }
    }
}

/// Inverse-CDF sampler over a tabulated outcome density.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSampler {
    table: TabulatedDensity,
}

impl GridSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.table.quantile(rng.random::<f64>())
    }

    pub fn mass(&self) -> f64 {
        self.table.total()
    }
}

/// Sorted distances `dist(Ā_angle[x], target)` for `samples` outcomes.
pub fn angle_distances(family: &HomodyneFamily, target: &Gate2, angle: f64, samples: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    let sampler = family.sampler(angle);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = sampler.sample(rng);
        out.push(family.gate(angle, x)?.0.dist_up_to_phase(target));
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn count_within(sorted: &[f64], eps: f64) -> usize {
    sorted.partition_point(|&d| d <= eps)
}

/// Settings for [`control_scan`].
#[derive(Clone, Debug, PartialEq)]
pub struct ControlScanConfig {
    pub eps_grid: Vec<f64>,
    /// Uniform angles on `[0, π)` for the coarse search.
    pub angles: usize,
    /// Samples per angle in the coarse search and refinement.
    pub coarse_samples: usize,
    /// Fresh samples at the selected angle for each reported estimate.
    pub samples: usize,
    pub master_seed: u64,
}

impl ControlScanConfig {
    /// Nine log-spaced tolerances on `[1e-3, 1e-1]`.
    pub fn standard(samples: usize, master_seed: u64) -> Self {
        let eps_grid = (0..9).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
        Self { eps_grid, angles: 64, coarse_samples: samples / 10, samples, master_seed }
    }
}

/// Scan outcome for one target.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlScanResult {
    pub eps: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub hits: Vec<usize>,
    pub samples: usize,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub theta_argmax: Vec<f64>,
    /// True where fewer than 10 samples landed within `eps`.
    pub sparse: Vec<bool>,
    pub fit: Option<LineFit>,
}

impl ControlScanResult {
    /// Suppression exponent `λ̂` (slope of `ln p̂` against `ln ε`).
    pub fn lambda(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn lambda_ci(&self) -> Option<(f64, f64)> {
        self.fit.map(|f| f.slope_ci(1.959_963_984_540_054))
    }

    /// `C` in `p̂ ≈ C ε^λ`.
    pub fn prefactor(&self) -> Option<f64> {
        self.fit.map(|f| f.intercept.exp())
    }
}

/// `sup over angles of P(dist(Ā_angle[x], target) ≤ ε)` per tolerance.
///
/// Angles come from a uniform grid refined at `±h/2, ±h/4` around each
/// tolerance's coarse argmax; the reported estimate uses fresh samples at
/// the selected angle.
pub fn control_scan(family: &HomodyneFamily, target: &Gate2, cfg: &ControlScanConfig) -> Result<ControlScanResult> {
    if cfg.angles == 0 || cfg.samples == 0 || cfg.coarse_samples == 0 {
        return Err(Error::param("samples", "angles and sample counts must be positive"));
    }
    let h = PI / cfg.angles as f64;
    let mut stream = 0u64;
    let mut evaluated: Vec<(f64, Vec<f64>)> = Vec::new();
    let run = |angle: f64, n: usize, stream: &mut u64| -> Result<Vec<f64>> {
        let mut rng = crate::rng::stream(cfg.master_seed, *stream);
        *stream += 1;
        angle_distances(family, target, angle, n, &mut rng)
    };
    for i in 0..cfg.angles {
        let angle = h * i as f64;
        evaluated.push((angle, run(angle, cfg.coarse_samples, &mut stream)?));
    }
    let best_of = |evaluated: &[(f64, Vec<f64>)], eps: f64| {
        evaluated
            .iter()
            .map(|(a, d)| (*a, count_within(d, eps)))
            .fold((0.0, 0usize), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0
    };
    let mut chosen = Vec::with_capacity(cfg.eps_grid.len());
    for &eps in &cfg.eps_grid {
        let centre = best_of(&evaluated, eps);
        for offset in [-0.5 * h, 0.5 * h, -0.25 * h, 0.25 * h] {
            let angle = (centre + offset).rem_euclid(PI);
            if evaluated.iter().all(|(a, _)| (a - angle).abs() > 1e-15) {
                evaluated.push((angle, run(angle, cfg.coarse_samples, &mut stream)?));
            }
        }
        chosen.push(best_of(&evaluated, eps));
    }
    let mut fresh: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut hits = Vec::with_capacity(chosen.len());
    for (&eps, &angle) in cfg.eps_grid.iter().zip(&chosen) {
        if !fresh.iter().any(|(a, _)| *a == angle) {
            fresh.push((angle, run(angle, cfg.samples, &mut stream)?));
        }
        let d = &fresh.iter().find(|(a, _)| *a == angle).expect("just inserted").1;
        hits.push(count_within(d, eps));
    }
    let n = cfg.samples as f64;
    let p_hat: Vec<f64> = hits.iter().map(|&k| k as f64 / n).collect();
    let (ci_low, ci_high): (Vec<f64>, Vec<f64>) =
        hits.iter().map(|&k| stats::wilson_interval(k as u64, cfg.samples as u64, 1.959_963_984_540_054)).unzip();
    let sparse = hits.iter().map(|&k| k < 10).collect();
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for ((&eps, &k), &p) in cfg.eps_grid.iter().zip(&hits).zip(&p_hat) {
        if k > 0 && p < 1.0 {
            xs.push(eps.ln());
            ys.push(p.ln());
            ws.push(k as f64 / (1.0 - p));
        }
    }
    let fit = (xs.len() >= 3).then(|| stats::weighted_linear_fit(&xs, &ys, &ws));
    Ok(ControlScanResult {
        eps: cfg.eps_grid.clone(),
        p_hat,
        hits,
        samples: cfg.samples,
        ci_low,
        ci_high,
        theta_argmax: chosen,
        sparse,
        fit,
    })
}

/// Target phase gate drawn uniformly from the diagonal subgroup, the only
/// gates the three-level wire can reach.
pub fn reachable_target<R: Rng + ?Sized>(rng: &mut R) -> Gate2 {
    phase_gate(rng.random_range(-PI..PI))
}

/// Outcome of the weak compiler.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakTrace {
    pub target_phi: f64,
    pub outcomes: Vec<f64>,
    /// Accumulated relative phase of the applied gates.
    pub phase: f64,
    pub distance: f64,
}

impl WeakTrace {
    pub fn step_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn applied(&self) -> Gate2 {
        phase_gate(self.phase)
    }
}

/// Repeats `q`-homodyne steps on the Gaussian wire until the accumulated
/// phase gate is within `eps` of `S(target_phi)`. The wire is tuned with
/// `p₀q₀ ≡ target_phi`, so the first step succeeds when `|2p₀(x − q₀)| ≲ ε`.
pub fn weak_phase_compiler(spec: &GaussianWireSpec, target_phi: f64, eps: f64, rng: &mut dyn RngCore) -> Result<WeakTrace> {
    if !(eps > 0.0) {
        return Err(Error::param("eps", "must be positive"));
    }
    let target = phase_gate(target_phi);
    let normal = rand_distr::Normal::new(spec.q0, core::f64::consts::FRAC_1_SQRT_2).expect("finite spread");
    let mut outcomes = Vec::new();
    let mut phase = 0.0;
    loop {
        if outcomes.len() >= crate::scheme::STEP_BUDGET {
            return Err(Error::StepBudget(crate::scheme::STEP_BUDGET));
        }
        let x: f64 = rand_distr::Distribution::sample(&normal, rng);
        outcomes.push(x);
        phase = (phase + 2.0 * spec.p0 * (x - 0.5 * spec.q0)).rem_euclid(2.0 * TAU);
        let distance = phase_gate(phase).dist_up_to_phase(&target);
        if distance <= eps {
            return Ok(WeakTrace { target_phi, outcomes, phase, distance });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::su2::haar_unitary;
    use proptest::prelude::*;

    #[test]
    fn gaussian_gate_examples() {
        let spec = GaussianWireSpec::from_resource(1.3, 0.6);
        assert!((spec.q0 * spec.q0 + spec.p0 * spec.p0 - 2.0 * 1.69).abs() < 1e-14);
        let (g, _) = gaussian_wire_gate(&spec, 0.5 * spec.q0);
        assert_eq!(g, Gate2::IDENTITY);
        let h = 1e-3;
        let total: f64 = (-8000..=8000).map(|i| gaussian_wire_gate(&spec, i as f64 * h).1 * h).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn invariance_examples() {
        let spec = GaussianWireSpec::from_resource(1.2, 0.7);
        let xs: Vec<f64> = (0..100).map(|i| -4.0 + 0.08 * i as f64).collect();
        assert_eq!(displacement_invariance_check(&spec, &[(0.0, 0.0)], &xs), 0.0);
        assert!(displacement_invariance_check(&spec, &[(1.3, -0.7)], &xs) <= 1e-10);
        let flat = GaussianWireSpec { q0: 1.0, p0: 0.0 };
        for x in [-1.0, 0.0, 2.0] {
            assert!(gaussian_wire_gate(&flat, x).0.dist_up_to_phase(&Gate2::IDENTITY) == 0.0);
        }
    }

    #[test]
    fn invariance_holds_in_fock_space() {
        let xs: Vec<f64> = (0..11).map(|i| -1.0 + 0.3 * i as f64).collect();
        let dev = displacement_invariance_oracle_check(1.0, 0.6, 60, &[(0.0, 0.0), (1.3, -0.7), (-0.4, 0.9)], &xs).unwrap();
        assert!(dev < 1e-8, "{dev}");
    }

    #[test]
    fn two_basis_matches_oracle() {
        let family = HomodyneFamily::new(two_basis_wire().unwrap());
        for basis in [Quadrature::Q, Quadrature::P] {
            for i in 0..40 {
                let x = -3.0 + 0.15 * i as f64;
                let (g, p) = family.gate(basis.angle(), x).unwrap();
                let (g_ref, p_ref) = two_basis_example(x, basis);
                assert!(g.dist_up_to_phase(&g_ref) < 1e-6);
                assert!((p - p_ref).abs() < 1e-6);
            }
        }
        let (g, _) = two_basis_example(core::f64::consts::FRAC_1_SQRT_2, Quadrature::Q);
        assert!(g.dist_up_to_phase(&Gate2::IDENTITY) < 1e-15);
    }

    #[test]
    fn two_basis_density_integrates() {
        let h = 1e-3;
        let total: f64 = (-10_000..=10_000).map(|i| two_basis_example(i as f64 * h, Quadrature::Q).1 * h).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_basis_histogram_matches_density() {
        let family = HomodyneFamily::new(two_basis_wire().unwrap());
        let sampler = family.sampler(0.0);
        let mut r = rng::stream(21, 0);
        let mut xs: Vec<f64> = (0..100_000).map(|_| sampler.sample(&mut r)).collect();
        let h = 1e-3;
        let mut table = Vec::with_capacity(20_001);
        let mut acc = 0.0;
        for i in 0..=20_000 {
            table.push(acc);
            acc += two_basis_example(-10.0 + (i as f64 + 0.5) * h, Quadrature::Q).1 * h;
        }
        let ks = stats::ks_one_sample(&mut xs, |x| {
            let pos = ((x + 10.0) / h).clamp(0.0, 19_999.0);
            let i = pos as usize;
            table[i] + (table[i + 1] - table[i]) * (pos - i as f64)
        });
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn scan_probability_shrinks() {
        let family = HomodyneFamily::new(two_basis_wire().unwrap());
        let cfg = ControlScanConfig {
            eps_grid: vec![0.01, 0.1, 2.5],
            angles: 16,
            coarse_samples: 5_000,
            samples: 50_000,
            master_seed: 5,
        };
        let res = control_scan(&family, &Gate2::IDENTITY, &cfg).unwrap();
        assert!(res.p_hat[0] < res.p_hat[1]);
        assert!((res.p_hat[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weak_compiler_examples() {
        let mut r = rng::stream(22, 0);
        for _ in 0..100 {
            let phi = rand::Rng::random_range(&mut r, -PI..PI);
            let spec = GaussianWireSpec::for_phase(phi);
            assert!(((spec.p0 * spec.q0 - phi).rem_euclid(TAU)).min(TAU - (spec.p0 * spec.q0 - phi).rem_euclid(TAU)) < 1e-9);
            assert_eq!(weak_phase_compiler(&spec, phi, PI, &mut r).unwrap().step_count(), 1);
            let t = weak_phase_compiler(&spec, phi, 0.05, &mut r).unwrap();
            assert!(t.applied().dist_up_to_phase(&phase_gate(phi)) <= 0.05);
        }
    }

    #[test]
    fn centred_outcome_applies_target() {
        let phi = 0.9;
        let spec = GaussianWireSpec::for_phase(phi);
        let (g, _) = gaussian_wire_gate(&spec, spec.q0);
        assert!(g.dist_up_to_phase(&phase_gate(phi)) < 1e-12);
    }

    #[test]
    fn haar_targets_are_unreachable_on_the_finite_wire() {
        let family = HomodyneFamily::new(two_basis_wire().unwrap());
        let mut r = rng::stream(23, 0);
        let u = haar_unitary(&mut r);
        let d = angle_distances(&family, &u, 0.3, 2000, &mut r).unwrap();
        assert!(d[0] > 1e-2);
    }

    proptest! {
        #[test]
        fn invariance_is_exact(dq in -2.0..2.0f64, dp in -2.0..2.0f64, x in -4.0..4.0f64, alpha in 0.2..2.5f64, theta in 0.0..1.5f64) {
            let spec = GaussianWireSpec::from_resource(alpha, theta);
            prop_assert!(displacement_invariance_check(&spec, &[(dq, dp)], &[x]) <= 1e-10);
        }
    }
}
