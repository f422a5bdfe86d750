//! Truncated Fock-space states and operators.
//!
//! Photon numbers run over `0..=n_max`. Operators that do not conserve photon
//! number (displacement, squeezing) are exponentiated at an enlarged internal
//! cutoff and cropped, so the retained block is accurate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{self, ComplexMatrix};
use crate::stats;
use crate::{Error, Result, Tolerances};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Single-mode state truncated at `n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<C64>,
    norm_deficit: f64,
}

impl FockVector {
    /// Wraps amplitudes of a state assumed normalized before truncation.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Self {
        assert!(!amplitudes.is_empty(), "a Fock vector needs at least the vacuum entry");
        let norm_deficit = (1.0 - linalg::norm_sqr(&amplitudes)).max(0.0);
        Self { amplitudes, norm_deficit }
    }

    /// Normalizes the given amplitudes.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        if linalg::normalize(&mut amplitudes) == 0.0 {
            return Err(Error::param("amplitudes", "zero vector"));
        }
        Ok(Self::from_amplitudes(amplitudes))
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::number(0, n_max).expect("vacuum fits any cutoff")
    }

    pub fn number(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::Cutoff { n_max, reason: format!("number state |{n}> lies above the cutoff") });
        }
        let mut amplitudes = vec![ZERO; n_max + 1];
        amplitudes[n] = ONE;
        Ok(Self { amplitudes, norm_deficit: 0.0 })
    }

    pub fn n_max(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_deficit(&self) -> f64 {
        self.norm_deficit
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> C64 {
        linalg::inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum()
    }

    /// Contracts with a row vector `⟨x|` given in the number basis.
    pub fn project(&self, row: &[C64]) -> C64 {
        row.iter().zip(&self.amplitudes).map(|(r, a)| r * a).sum()
    }

    pub fn apply(&self, op: &FockOperator) -> FockVector {
        assert_eq!(op.n_max(), self.n_max(), "operator and state cutoffs differ");
        let amplitudes = op.matrix.mul_vec(&self.amplitudes);
        Self { amplitudes, norm_deficit: self.norm_deficit }
    }
}

pub fn coherent_state(alpha: C64, n_max: usize) -> Result<FockVector> {
    let mut amplitudes = Vec::with_capacity(n_max + 1);
    let mut a = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amplitudes.push(a);
    for n in 1..=n_max {
        a = a * alpha / (n as f64).sqrt();
        amplitudes.push(a);
    }
    let norm_deficit = stats::poisson_tail(alpha.norm_sqr(), n_max);
    if norm_deficit > Tolerances::DEFAULT.cutoff_deficit_reject {
        return Err(Error::Cutoff {
            n_max,
            reason: format!("coherent state with |alpha|^2 = {:.3} loses {norm_deficit:.3} of its norm", alpha.norm_sqr()),
        });
    }
    Ok(FockVector { amplitudes, norm_deficit })
}

/// Truncated single-mode operator.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    matrix: ComplexMatrix,
    pad: usize,
}

impl FockOperator {
    pub fn from_matrix(matrix: ComplexMatrix) -> Self {
        assert!(matrix.is_square(), "Fock operators are square");
        Self { matrix, pad: 0 }
    }

    pub fn identity(n_max: usize) -> Self {
        Self::from_matrix(ComplexMatrix::identity(n_max + 1))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), pad: self.pad }
    }

    pub fn n_max(&self) -> usize {
        self.matrix.rows() - 1
    }

    /// Extra levels used internally before cropping.
    pub fn pad(&self) -> usize {
        self.pad
    }

    /// Row `⟨n|O` as a vector over the number basis.
    pub fn row(&self, n: usize) -> Vec<C64> {
        self.matrix.row(n).to_vec()
    }

    pub fn compose(&self, after: &FockOperator) -> FockOperator {
        Self { matrix: after.matrix.matmul(&self.matrix), pad: self.pad.min(after.pad) }
    }

    /// `‖O†O − 1‖` restricted to photon numbers `0..=block`.
    pub fn unitarity_defect_on(&self, block: usize) -> f64 {
        let gram = self.matrix.adjoint().matmul(&self.matrix);
        let k = block.min(self.n_max()) + 1;
        (&gram.crop(k, k) - &ComplexMatrix::identity(k)).op_norm()
    }
}

/// Annihilation operator on `0..dim`.
pub fn annihilation(dim: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn padded_exponential(generator: impl Fn(usize) -> ComplexMatrix, n_max: usize, pad: usize) -> FockOperator {
    let dim = n_max + 1 + pad;
    let full = generator(dim).expm();
    FockOperator { matrix: full.crop(n_max + 1, n_max + 1), pad }
}

pub fn displacement_op(x: C64, n_max: usize) -> FockOperator {
    displacement_op_with(x, n_max, &Tolerances::DEFAULT)
}

pub fn displacement_op_with(x: C64, n_max: usize, tol: &Tolerances) -> FockOperator {
    let pad = tol.pad_for(x.norm());
    padded_exponential(
        |dim| {
            let a = annihilation(dim);
            &a.adjoint().scale(x) - &a.scale(x.conj())
        },
        n_max,
        pad,
    )
}

/// Clockwise phase-space rotation `exp(−iθ n̂)`.
pub fn rotation_op(theta: f64, n_max: usize) -> FockOperator {
    let diag: Vec<C64> = (0..=n_max).map(|n| C64::from_polar(1.0, -theta * n as f64)).collect();
    FockOperator::from_matrix(ComplexMatrix::from_diag(&diag))
}

/// Norm of the squeezed vacuum retained in `0..=n_max`.
pub fn squeezed_vacuum_retention(r: f64, n_max: usize) -> f64 {
    let t2 = r.tanh().powi(2);
    let mut weight = 1.0 / r.cosh();
    let mut kept = weight;
    let mut m = 1;
    while 2 * m <= n_max {
        weight *= t2 * (2 * m - 1) as f64 / (2 * m) as f64;
        kept += weight;
        m += 1;
    }
    kept
}

/// `exp[(r/2)(â² − â†²)]`.
pub fn squeeze_op(r: f64, n_max: usize) -> Result<FockOperator> {
    squeeze_op_with(r, n_max, &Tolerances::DEFAULT)
}

pub fn squeeze_op_with(r: f64, n_max: usize, tol: &Tolerances) -> Result<FockOperator> {
    let kept = squeezed_vacuum_retention(r, n_max);
    if kept < tol.squeeze_retention {
        return Err(Error::Cutoff {
            n_max,
            reason: format!("squeezed vacuum at r = {r} keeps only {kept:.4} of its norm"),
        });
    }
    let pad = tol.pad_for(r).max(n_max);
    Ok(padded_exponential(
        |dim| {
            let a = annihilation(dim);
            let a2 = a.matmul(&a);
            (&a2 - &a2.adjoint()).scale_real(r / 2.0)
        },
        n_max,
        pad,
    ))
}

/// Normalized Hermite functions `ψ_0(x) ..= ψ_{n_max}(x)`.
///
/// The three-term recurrence runs on rescaled values so that neither the
/// Gaussian factor nor the polynomial growth under/overflows in between.
pub fn quadrature_wavefunctions(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    let mut log_scale = -0.25 * PI.ln() - 0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = 1.0;
    out[0] = log_scale.exp();
    for n in 0..n_max {
        let next = (2.0 / (n + 1) as f64).sqrt() * x * cur - (n as f64 / (n + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
            log_scale += 150.0 * core::f64::consts::LN_10;
        }
        out[n + 1] = cur * log_scale.exp();
    }
    out
}

pub fn quadrature_wavefunction(n: usize, x: f64) -> f64 {
    quadrature_wavefunctions(n, x)[n]
}

/// Row `⟨x_θ|n⟩ = e^{iθn} ψ_n(x)` for `n = 0..=n_max`.
pub fn homodyne_projector_row(theta: f64, x: f64, n_max: usize) -> Vec<C64> {
    quadrature_wavefunctions(n_max, x)
        .into_iter()
        .enumerate()
        .map(|(n, psi)| C64::from_polar(psi, theta * n as f64))
        .collect()
}

/// Trace-norm truncation certificate for a `k`-mode state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationCertificate {
    pub n_mean: f64,
    pub modes: usize,
    pub n_max: usize,
    pub trace_norm_bound: f64,
}

pub fn truncation_bound(n_mean: f64, modes: usize, n_max: usize) -> Result<TruncationCertificate> {
    if n_mean < 0.0 || !n_mean.is_finite() {
        return Err(Error::param("n_mean", "must be finite and non-negative"));
    }
    if modes == 0 {
        return Err(Error::param("modes", "need at least one mode"));
    }
    let trace_norm_bound = 3.0 * (n_mean / (modes as f64 * (n_max + 1) as f64)).sqrt();
    Ok(TruncationCertificate { n_mean, modes, n_max, trace_norm_bound })
}

/// Smallest cutoff whose certificate is at most `target`.
pub fn min_cutoff_for_bound(target: f64, n_mean: f64, modes: usize) -> Result<usize> {
    if target <= 0.0 {
        return Err(Error::param("target", "must be positive"));
    }
    let levels = 9.0 * n_mean / (modes as f64 * target * target);
    let mut n_max = (levels.ceil() as usize).saturating_sub(1);
    while n_max > 0 && truncation_bound(n_mean, modes, n_max - 1)?.trace_norm_bound <= target {
        n_max -= 1;
    }
    while truncation_bound(n_mean, modes, n_max)?.trace_norm_bound > target {
        n_max += 1;
    }
    Ok(n_max)
}

/// `‖ρ − PρP‖₁` for a pure state whose mass above the cutoff is `tail`.
pub fn pure_state_truncation_distance(tail: f64) -> f64 {
    (4.0 * tail - 3.0 * tail * tail).max(0.0).sqrt()
}

/// Exact truncation error of `|α⟩⟨α|` at `n_max`, from the Poisson tail.
pub fn coherent_truncation_distance(alpha: C64, n_max: usize) -> f64 {
    pure_state_truncation_distance(stats::poisson_tail(alpha.norm_sqr(), n_max))
}

/// Two-mode state with a shared cutoff, indexed `n1 * (n_max + 1) + n2`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeVector {
    n_max: usize,
    amplitudes: Vec<C64>,
}

impl TwoModeVector {
    pub fn zeros(n_max: usize) -> Self {
        Self { n_max, amplitudes: vec![ZERO; (n_max + 1) * (n_max + 1)] }
    }

    pub fn product(first: &FockVector, second: &FockVector) -> Self {
        assert_eq!(first.n_max(), second.n_max(), "two-mode cutoffs must agree");
        let amplitudes = first
            .amplitudes()
            .iter()
            .flat_map(|a| second.amplitudes().iter().map(move |b| a * b))
            .collect();
        Self { n_max: first.n_max(), amplitudes }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn amplitude(&self, n1: usize, n2: usize) -> C64 {
        self.amplitudes[n1 * (self.n_max + 1) + n2]
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.amplitudes)
    }

    pub fn inner(&self, other: &TwoModeVector) -> C64 {
        linalg::inner(&self.amplitudes, &other.amplitudes)
    }

    /// `⟨row1| ⊗ ⟨row2|` contracted with the state.
    pub fn project(&self, row1: &[C64], row2: &[C64]) -> C64 {
        let d = self.n_max + 1;
        let mut total = ZERO;
        for (n1, r1) in row1.iter().enumerate().take(d) {
            let inner: C64 = row2.iter().zip(&self.amplitudes[n1 * d..(n1 + 1) * d]).map(|(r, a)| r * a).sum();
            total += r1 * inner;
        }
        total
    }

    /// Weight in each total-photon-number sector `0..=2 n_max`.
    pub fn sector_weights(&self) -> Vec<f64> {
        let d = self.n_max + 1;
        let mut w = vec![0.0; 2 * self.n_max + 1];
        for n1 in 0..d {
            for n2 in 0..d {
                w[n1 + n2] += self.amplitude(n1, n2).norm_sqr();
            }
        }
        w
    }

    pub fn apply_local(&self, first: Option<&FockOperator>, second: Option<&FockOperator>) -> TwoModeVector {
        let d = self.n_max + 1;
        let mut out = self.amplitudes.clone();
        if let Some(op) = second {
            assert_eq!(op.n_max(), self.n_max);
            for n1 in 0..d {
                let v = op.matrix.mul_vec(&out[n1 * d..(n1 + 1) * d]);
                out[n1 * d..(n1 + 1) * d].copy_from_slice(&v);
            }
        }
        if let Some(op) = first {
            assert_eq!(op.n_max(), self.n_max);
            for n2 in 0..d {
                let col: Vec<C64> = (0..d).map(|n1| out[n1 * d + n2]).collect();
                let v = op.matrix.mul_vec(&col);
                for n1 in 0..d {
                    out[n1 * d + n2] = v[n1];
                }
            }
        }
        Self { n_max: self.n_max, amplitudes: out }
    }
}

/// Applies `exp[(θ/2)(â₁†â₂ − â₁â₂†)]` sector by sector in total photon
/// number, so photon number is conserved exactly.
pub fn beamsplitter_apply(state: &TwoModeVector, theta: f64) -> TwoModeVector {
    let n_max = state.n_max;
    let d = n_max + 1;
    let mut out = TwoModeVector::zeros(n_max);
    for total in 0..=2 * n_max {
        let lo = total.saturating_sub(n_max);
        let hi = total.min(n_max);
        let input: Vec<C64> = (lo..=hi).map(|k| state.amplitudes[k * d + (total - k)]).collect();
        if input.iter().all(|z| *z == ZERO) {
            continue;
        }
        // generator on |k, total−k⟩, k = 0..=total
        let size = total + 1;
        let mut gen = ComplexMatrix::zeros(size, size);
        for k in 0..total {
            let w = 0.5 * theta * ((k + 1) as f64 * (total - k) as f64).sqrt();
            gen[(k + 1, k)] = C64::new(w, 0.0);
            gen[(k, k + 1)] = C64::new(-w, 0.0);
        }
        let block = gen.expm();
        for k_out in lo..=hi {
            let mut acc = ZERO;
            for (j, k_in) in (lo..=hi).enumerate() {
                acc += block[(k_out, k_in)] * input[j];
            }
            out.amplitudes[k_out * d + (total - k_out)] = acc;
        }
    }
    out
}

/// Two-mode operations assembled from the single-mode pieces.
#[derive(Clone, Debug, PartialEq)]
pub enum TwoModeOperator {
    Identity,
    Local { first: Option<FockOperator>, second: Option<FockOperator> },
    /// `exp[(θ/2)(â₁†â₂ − â₁â₂†)]`.
    BeamSplitter { theta: f64 },
    /// Balanced splitter mapping `|α⟩|β⟩ → |(α+β)/√2⟩|(α−β)/√2⟩`.
    Balanced,
    BalancedAdjoint,
    /// Applied first to last.
    Sequence(Vec<TwoModeOperator>),
}

impl TwoModeOperator {
    pub fn apply(&self, state: &TwoModeVector) -> TwoModeVector {
        match self {
            TwoModeOperator::Identity => state.clone(),
            TwoModeOperator::Local { first, second } => state.apply_local(first.as_ref(), second.as_ref()),
            TwoModeOperator::BeamSplitter { theta } => beamsplitter_apply(state, *theta),
            TwoModeOperator::Balanced => {
                let mixed = beamsplitter_apply(state, PI / 2.0);
                mixed.apply_local(None, Some(&rotation_op(PI, state.n_max)))
            }
            TwoModeOperator::BalancedAdjoint => {
                let flipped = state.apply_local(None, Some(&rotation_op(-PI, state.n_max)));
                beamsplitter_apply(&flipped, -PI / 2.0)
            }
            TwoModeOperator::Sequence(ops) => ops.iter().fold(state.clone(), |s, op| op.apply(&s)),
        }
    }

    /// Inverse of the (unitary) operation.
    pub fn adjoint(&self) -> TwoModeOperator {
        match self {
            TwoModeOperator::Identity => TwoModeOperator::Identity,
            TwoModeOperator::Local { first, second } => TwoModeOperator::Local {
                first: first.as_ref().map(FockOperator::adjoint),
                second: second.as_ref().map(FockOperator::adjoint),
            },
            TwoModeOperator::BeamSplitter { theta } => TwoModeOperator::BeamSplitter { theta: -theta },
            TwoModeOperator::Balanced => TwoModeOperator::BalancedAdjoint,
            TwoModeOperator::BalancedAdjoint => TwoModeOperator::Balanced,
            TwoModeOperator::Sequence(ops) => TwoModeOperator::Sequence(ops.iter().rev().map(Self::adjoint).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn vacuum_coherent_state() {
        let v = coherent_state(c(0.0, 0.0), 10).unwrap();
        assert_eq!(v.amplitudes()[0], ONE);
        assert!(v.amplitudes()[1..].iter().all(|z| *z == ZERO));
        assert_eq!(v.norm_deficit(), 0.0);
    }

    #[test]
    fn coherent_state_values() {
        let v = coherent_state(c(1.0, 0.0), 30).unwrap();
        assert!((v.amplitudes()[0].re - (-0.5f64).exp()).abs() < 1e-15);
        assert!((v.amplitudes()[0].re - 0.60653).abs() < 1e-5);
        let v = coherent_state(c(2.0, 0.0), 40).unwrap();
        assert!((v.mean_photon_number() - 4.0).abs() < 1e-8);
        assert!((v.norm_deficit() - (1.0 - v.norm_sqr())).abs() < 1e-12);
    }

    #[test]
    fn useless_cutoff_rejected() {
        assert!(matches!(coherent_state(c(3.0, 0.0), 2), Err(Error::Cutoff { .. })));
    }

    #[test]
    fn displacement_generates_coherent_states() {
        assert!((&displacement_op(c(0.0, 0.0), 12).matrix - &ComplexMatrix::identity(13)).max_abs() < 1e-15);
        for alpha in [c(0.5, 0.0), c(-1.2, 0.7), c(2.0, 0.0), c(0.0, -2.0)] {
            let d = displacement_op(alpha, 40);
            let col = d.matrix.column(0);
            let expected = coherent_state(alpha, 40).unwrap();
            assert!(max_diff(&col, expected.amplitudes()) < 1e-8, "alpha = {alpha}");
        }
    }

    #[test]
    fn displacement_inverse_and_unitarity_on_low_block() {
        let x = c(1.3, -0.4);
        let d = displacement_op(x, 40);
        let back = displacement_op(-x, 40);
        let prod = d.matrix.matmul(&back.matrix);
        let low = prod.crop(15, 15);
        assert!((&low - &ComplexMatrix::identity(15)).max_abs() < 1e-8);
        assert!(d.unitarity_defect_on(15) < 1e-8);
    }

    #[test]
    fn displacement_composition_phase() {
        // D(a)D(b) = exp(i Im(a b*)) D(a + b)
        let (a, b) = (c(0.7, 0.2), c(-0.3, 0.9));
        let lhs = displacement_op(a, 40).matrix.matmul(&displacement_op(b, 40).matrix);
        let rhs = displacement_op(a + b, 40).matrix.scale(C64::from_polar(1.0, (a * b.conj()).im));
        assert!((&lhs.crop(12, 12) - &rhs.crop(12, 12)).max_abs() < 1e-9);
    }

    #[test]
    fn rotation_flips_coherent_state() {
        let r = rotation_op(0.0, 8);
        assert_eq!(r.matrix, ComplexMatrix::identity(9));
        let alpha = c(1.1, 0.4);
        let flipped = coherent_state(alpha, 40).unwrap().apply(&rotation_op(PI, 40));
        assert!(max_diff(flipped.amplitudes(), coherent_state(-alpha, 40).unwrap().amplitudes()) < 1e-10);
        let r = rotation_op(0.37, 20);
        assert!((&r.matrix.adjoint().matmul(&r.matrix) - &ComplexMatrix::identity(21)).max_abs() < 1e-15);
    }

    #[test]
    fn squeezing_variances() {
        assert!((&squeeze_op(0.0, 10).unwrap().matrix - &ComplexMatrix::identity(11)).max_abs() < 1e-15);
        let r = 0.3;
        let n_max = 60;
        let s = squeeze_op(r, n_max).unwrap();
        let vac = FockVector::vacuum(n_max).apply(&s);
        let a = annihilation(n_max + 1);
        let q = (&a + &a.adjoint()).scale_real(1.0 / 2f64.sqrt());
        let p = (&a - &a.adjoint()).scale(c(0.0, 1.0 / 2f64.sqrt()));
        let var = |op: &ComplexMatrix| {
            let v = op.mul_vec(vac.amplitudes());
            let m = linalg::inner(vac.amplitudes(), &v).re;
            linalg::norm_sqr(&v) - m * m
        };
        // exp[(r/2)(a² − a†²)] contracts q in the state and stretches p
        assert!((var(&q) / ((-2.0 * r).exp() / 2.0) - 1.0).abs() < 1e-2);
        assert!((var(&p) / ((2.0 * r).exp() / 2.0) - 1.0).abs() < 1e-2);
        // the Heisenberg map S q S† = e^r q
        let sqs = s.matrix.matmul(&q).matmul(&s.matrix.adjoint());
        let expected = q.scale_real(r.exp());
        assert!((&sqs.crop(10, 10) - &expected.crop(10, 10)).max_abs() < 1e-8);
        let back = squeeze_op(-r, n_max).unwrap();
        let prod = s.matrix.matmul(&back.matrix);
        assert!((&prod.crop(20, 20) - &ComplexMatrix::identity(20)).max_abs() < 1e-8);
    }

    #[test]
    fn squeezing_retention_precondition() {
        assert!(squeeze_op(2.5, 10).is_err());
        assert!(squeezed_vacuum_retention(0.0, 0) == 1.0);
    }

    #[test]
    fn balanced_beamsplitter_on_coherent_pairs() {
        let n_max = 40;
        for (a, b) in [(c(1.0, 0.0), c(0.5, 0.0)), (c(-0.4, 1.1), c(1.2, -0.3)), (c(1.5, 0.0), c(0.0, 1.5))] {
            let input = TwoModeVector::product(&coherent_state(a, n_max).unwrap(), &coherent_state(b, n_max).unwrap());
            let out = TwoModeOperator::Balanced.apply(&input);
            let s = 2f64.sqrt();
            let expected = TwoModeVector::product(
                &coherent_state((a + b) / s, n_max).unwrap(),
                &coherent_state((a - b) / s, n_max).unwrap(),
            );
            assert!(max_diff(out.amplitudes(), expected.amplitudes()) < 1e-7);
            // bare generator sends the second output to (β − α)/√2
            let bare = beamsplitter_apply(&input, PI / 2.0);
            let expected = TwoModeVector::product(
                &coherent_state((a + b) / s, n_max).unwrap(),
                &coherent_state((b - a) / s, n_max).unwrap(),
            );
            assert!(max_diff(bare.amplitudes(), expected.amplitudes()) < 1e-7);
        }
    }

    #[test]
    fn balanced_beamsplitter_merges_equal_beams() {
        let a = c(0.8, 0.3);
        let n_max = 30;
        let input = TwoModeVector::product(&coherent_state(a, n_max).unwrap(), &coherent_state(a, n_max).unwrap());
        let out = TwoModeOperator::Balanced.apply(&input);
        let expected =
            TwoModeVector::product(&coherent_state(a * 2f64.sqrt(), n_max).unwrap(), &FockVector::vacuum(n_max));
        assert!(max_diff(out.amplitudes(), expected.amplitudes()) < 1e-8);
        let same = beamsplitter_apply(&input, 0.0);
        assert!(max_diff(same.amplitudes(), input.amplitudes()) < 1e-15);
    }

    #[test]
    fn hermite_values_and_orthonormality() {
        assert!((quadrature_wavefunction(0, 0.0) - PI.powf(-0.25)).abs() < 1e-15);
        assert!((quadrature_wavefunction(0, 0.0) - 0.75112).abs() < 1e-5);
        assert_eq!(quadrature_wavefunction(1, 0.0), 0.0);
        let h = 0.01;
        let grid: Vec<Vec<f64>> = (0..=2000).map(|i| quadrature_wavefunctions(10, -10.0 + i as f64 * h)).collect();
        for n in 0..=10 {
            for m in 0..=10 {
                let integral: f64 = grid.iter().map(|psi| psi[n] * psi[m]).sum::<f64>() * h;
                let expected = if n == m { 1.0 } else { 0.0 };
                assert!((integral - expected).abs() < 1e-8, "n = {n}, m = {m}");
            }
        }
    }

    #[test]
    fn hermite_boundedness() {
        for i in 0..=400 {
            let x = -20.0 + 0.1 * i as f64;
            let psi = quadrature_wavefunctions(200, x);
            assert!(psi.iter().all(|v| v.is_finite() && v.abs() <= 0.8), "x = {x}");
        }
    }

    #[test]
    fn homodyne_rows() {
        let psi = quadrature_wavefunctions(12, 0.4);
        let row = homodyne_projector_row(0.0, 0.4, 12);
        assert!(row.iter().zip(&psi).all(|(r, p)| (r.re - p).abs() < 1e-16 && r.im == 0.0));
        let row = homodyne_projector_row(PI, 0.4, 12);
        for (n, (r, p)) in row.iter().zip(&psi).enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((r - c(sign * p, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn homodyne_density_of_coherent_state() {
        let alpha = 1.3;
        let state = coherent_state(c(alpha, 0.0), 40).unwrap();
        for i in 0..40 {
            let x = -2.0 + 0.15 * i as f64;
            let amp = state.project(&homodyne_projector_row(0.0, x, 40));
            let expected = (-(x - 2f64.sqrt() * alpha).powi(2)).exp() / PI.sqrt();
            assert!((amp.norm_sqr() - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn truncation_certificate_arithmetic() {
        assert_eq!(truncation_bound(0.0, 1, 5).unwrap().trace_norm_bound, 0.0);
        assert_eq!(truncation_bound(4.0, 1, 35).unwrap().trace_norm_bound, 1.0);
        assert!(coherent_truncation_distance(c(2.0, 0.0), 35) <= 1.0);
        let n = min_cutoff_for_bound(0.1, 4.0, 1).unwrap();
        assert!(truncation_bound(4.0, 1, n).unwrap().trace_norm_bound <= 0.1);
        assert!(truncation_bound(4.0, 1, n - 1).unwrap().trace_norm_bound > 0.1);
    }

    #[test]
    fn truncation_distance_matches_eigenvalues() {
        let big = coherent_state(c(1.4, 0.5), 30).unwrap();
        let cut = 4;
        let amps = big.amplitudes();
        let d = amps.len();
        let diff = ComplexMatrix::from_fn(d, d, |r, s| {
            let full = amps[r] * amps[s].conj();
            if r <= cut && s <= cut { ZERO } else { full }
        });
        let trace_norm: f64 = crate::linalg::hermitian_eigen(&diff).values.iter().map(|v| v.abs()).sum();
        let tail: f64 = amps[cut + 1..].iter().map(|z| z.norm_sqr()).sum();
        assert!((pure_state_truncation_distance(tail) - trace_norm).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn beamsplitter_conserves_sectors(theta in -3.0f64..3.0, re in -1.0f64..1.0, im in -1.0f64..1.0, n in 0usize..4) {
            let n_max = 12;
            let input = TwoModeVector::product(
                &coherent_state(c(re, im), n_max).unwrap(),
                &FockVector::number(n, n_max).unwrap(),
            );
            let out = beamsplitter_apply(&input, theta);
            let before = input.sector_weights();
            let after = out.sector_weights();
            for total in 0..=n_max {
                prop_assert!((before[total] - after[total]).abs() < 1e-12);
            }
            prop_assert!((input.norm_sqr() - out.norm_sqr()).abs() < 1e-12 + before[n_max + 1..].iter().sum::<f64>());
        }

        #[test]
        fn certificate_dominates_coherent_truncation(re in -3.0f64..3.0, im in -3.0f64..3.0, n_max in 10usize..60) {
            let alpha = c(re, im);
            let cert = truncation_bound(alpha.norm_sqr(), 1, n_max).unwrap();
            prop_assert!(coherent_truncation_distance(alpha, n_max) <= cert.trace_norm_bound + 1e-15);
        }

        #[test]
        fn certificate_dominates_superpositions(amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..30), cut in 0usize..20) {
            let state = FockVector::normalized(amps.iter().map(|&(a, b)| c(a, b)).collect()).unwrap();
            let tail: f64 = state.amplitudes().iter().skip(cut + 1).map(|z| z.norm_sqr()).sum();
            let cert = truncation_bound(state.mean_photon_number(), 1, cut).unwrap();
            prop_assert!(pure_state_truncation_distance(tail) <= cert.trace_norm_bound + 1e-12);
        }

        #[test]
        fn displacement_heisenberg_map(re in -1.5f64..1.5, im in -1.5f64..1.5, sr in -1.0f64..1.0, si in -1.0f64..1.0) {
            let (x, alpha) = (c(sr, si), c(re, im));
            let out = coherent_state(alpha, 40).unwrap().apply(&displacement_op(x, 40));
            let phase = C64::from_polar(1.0, (x * alpha.conj()).im);
            let expected: Vec<C64> = coherent_state(alpha + x, 40).unwrap().amplitudes().iter().map(|z| z * phase).collect();
            prop_assert!(max_diff(out.amplitudes(), &expected) < 1e-7);
        }
    }
}
