//! Matrix-product-state quantum wires.
//!
//! A wire is a family of correlation-space matrices `A[i]`. Measuring a site
//! in some basis applies `A_B[x] = Σ_i ⟨x|i⟩ A[i]` to the correlation state.
//! Index convention: `A[i]_{k,j} = (⟨k| ⊗ ⟨i|) U (|j⟩ ⊗ |Ψ⟩)`, so rows are
//! outputs and products compose left-multiplied in time order.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, RngCore};

use crate::fock::{FockVector, TwoModeOperator, TwoModeVector};
use crate::linalg::{self, ComplexMatrix};
use crate::su2::{Gate2, Gate4};
use crate::{Error, Result, Tolerances};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Unit vector in correlation space.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationState {
    vector: Vec<C64>,
}

impl CorrelationState {
    /// Normalizes `vector`.
    pub fn new(mut vector: Vec<C64>) -> Result<Self> {
        if linalg::normalize(&mut vector) == 0.0 {
            return Err(Error::param("vector", "zero correlation state"));
        }
        Ok(Self { vector })
    }

    pub fn basis(index: usize, dim: usize) -> Self {
        let mut vector = vec![ZERO; dim];
        vector[index] = ONE;
        Self { vector }
    }

    pub fn haar<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self { vector: crate::su2::haar_state(dim, rng) }
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &CorrelationState) -> f64 {
        linalg::inner(&self.vector, &other.vector).norm_sqr()
    }

    pub fn as_pair(&self) -> [C64; 2] {
        assert_eq!(self.dim(), 2, "not a qubit state");
        [self.vector[0], self.vector[1]]
    }

    pub fn as_quad(&self) -> [C64; 4] {
        assert_eq!(self.dim(), 4, "not a two-qubit state");
        [self.vector[0], self.vector[1], self.vector[2], self.vector[3]]
    }

    /// Applies `m` and renormalizes; returns the new state and `‖m ψ‖²`.
    pub fn evolve(&self, m: &ComplexMatrix) -> Result<(CorrelationState, f64)> {
        let mut v = m.mul_vec(&self.vector);
        let p = linalg::normalize(&mut v).powi(2);
        if p == 0.0 {
            return Err(Error::param("outcome", "zero-probability branch"));
        }
        Ok((Self { vector: v }, p))
    }

    pub fn apply_gate2(&self, g: &Gate2) -> CorrelationState {
        let out = g.apply(&self.as_pair());
        Self::new(out.to_vec()).expect("unitary image of a unit vector")
    }

    pub fn apply_gate4(&self, g: &Gate4) -> CorrelationState {
        let out = g.apply(&self.as_quad());
        Self::new(out.to_vec()).expect("unitary image of a unit vector")
    }

    /// `[a, b] ⊗ [c, d]`.
    pub fn product(first: &CorrelationState, second: &CorrelationState) -> CorrelationState {
        let vector = first
            .vector
            .iter()
            .flat_map(|a| second.vector.iter().map(move |b| a * b))
            .collect();
        Self { vector }
    }
}

/// `‖Σ A†A − 1‖` in operator norm.
pub fn completeness_defect(matrices: &[ComplexMatrix]) -> f64 {
    let Some(first) = matrices.first() else { return 1.0 };
    let d = first.cols();
    let mut sum = ComplexMatrix::zeros(d, d);
    for a in matrices {
        sum = &sum + &a.adjoint().matmul(a);
    }
    (&sum - &ComplexMatrix::identity(d)).op_norm()
}

/// A translation-invariant wire with a discrete physical index.
#[derive(Clone, Debug, PartialEq)]
pub struct WireTensor {
    site_matrices: Vec<ComplexMatrix>,
    boundary_left: Vec<C64>,
    boundary_right: Vec<C64>,
    completeness_defect: f64,
}

impl WireTensor {
    /// Exact wire; completeness must hold to the default tolerance.
    pub fn new(site_matrices: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_limit(site_matrices, Tolerances::DEFAULT.completeness)
    }

    fn with_limit(site_matrices: Vec<ComplexMatrix>, limit: f64) -> Result<Self> {
        let Some(first) = site_matrices.first() else {
            return Err(Error::param("site_matrices", "empty family"));
        };
        let d = first.rows();
        if let Some(bad) = site_matrices.iter().find(|m| m.rows() != d || m.cols() != d) {
            return Err(Error::Dimension { expected: d, found: bad.rows().max(bad.cols()) });
        }
        let defect = completeness_defect(&site_matrices);
        if defect > limit {
            return Err(Error::Completeness { defect, limit });
        }
        let mut boundary_right = vec![ZERO; d];
        boundary_right[0] = ONE;
        let boundary_left = boundary_right.clone();
        Ok(Self { site_matrices, boundary_left, boundary_right, completeness_defect: defect })
    }

    pub fn with_boundaries(mut self, left: Vec<C64>, right: Vec<C64>) -> Result<Self> {
        let d = self.bond_dim();
        for v in [&left, &right] {
            if v.len() != d {
                return Err(Error::Dimension { expected: d, found: v.len() });
            }
        }
        self.boundary_left = left;
        self.boundary_right = right;
        Ok(self)
    }

    pub fn bond_dim(&self) -> usize {
        self.site_matrices[0].rows()
    }

    pub fn phys_dim(&self) -> usize {
        self.site_matrices.len()
    }

    pub fn site_matrices(&self) -> &[ComplexMatrix] {
        &self.site_matrices
    }

    pub fn site(&self, i: usize) -> &ComplexMatrix {
        &self.site_matrices[i]
    }

    pub fn completeness_defect(&self) -> f64 {
        self.completeness_defect
    }

    pub fn boundary_left(&self) -> &[C64] {
        &self.boundary_left
    }

    pub fn boundary_right(&self) -> &[C64] {
        &self.boundary_right
    }

    /// `A[i_L] ⋯ A[i_1]` where `outcomes[0] = i_1` is measured first.
    pub fn product(&self, outcomes: &[usize]) -> ComplexMatrix {
        outcomes
            .iter()
            .fold(ComplexMatrix::identity(self.bond_dim()), |acc, &i| self.site_matrices[i].matmul(&acc))
    }

    /// `⟨L| A[i_L] ⋯ A[i_1] |R⟩`.
    pub fn amplitude(&self, outcomes: &[usize]) -> C64 {
        let v = self.product(outcomes).mul_vec(&self.boundary_right);
        self.boundary_left.iter().zip(&v).map(|(l, x)| l.conj() * x).sum()
    }
}

/// Sequential preparation: `A[i]_{k,j} = Σ_m U[(k,i),(j,m)] Ψ_m`.
///
/// `u` acts on `C^D ⊗ C^{n_max+1}` with the correlation index major.
pub fn matrices_from_interaction(u: &ComplexMatrix, bond_dim: usize, input: &FockVector) -> Result<WireTensor> {
    let phys = input.n_max() + 1;
    if u.rows() != bond_dim * phys || !u.is_square() {
        return Err(Error::Dimension { expected: bond_dim * phys, found: u.rows() });
    }
    let psi = input.amplitudes();
    let mut mats = vec![ComplexMatrix::zeros(bond_dim, bond_dim); phys];
    for (i, a) in mats.iter_mut().enumerate() {
        for k in 0..bond_dim {
            for j in 0..bond_dim {
                let row = u.row(k * phys + i);
                a[(k, j)] = (0..phys).map(|m| row[j * phys + m] * psi[m]).sum();
            }
        }
    }
    WireTensor::with_limit(mats, Tolerances::DEFAULT.completeness_reject)
}

/// Qubit-controlled rotation `|0⟩⟨0| ⊗ e^{−iθn̂} + |1⟩⟨1| ⊗ e^{iθn̂}`.
pub fn controlled_rotation(theta: f64, n_max: usize) -> ComplexMatrix {
    let phys = n_max + 1;
    let diag: Vec<C64> = (0..2 * phys)
        .map(|idx| {
            let (j, m) = (idx / phys, idx % phys);
            let sign = if j == 0 { -1.0 } else { 1.0 };
            C64::from_polar(1.0, sign * theta * m as f64)
        })
        .collect();
    ComplexMatrix::from_diag(&diag)
}

/// `(G ⊗ 1) U` for a correlation-space gate `G`.
pub fn with_correlation_gate(u: &ComplexMatrix, gate: &Gate2, n_max: usize) -> ComplexMatrix {
    let lifted = gate.to_matrix().kron(&ComplexMatrix::identity(n_max + 1));
    lifted.matmul(u)
}

/// `A_B[x] = Σ_i ⟨x|i⟩ A[i]` for each row `⟨x|`.
pub fn skew_measure(w: &WireTensor, basis_rows: &[Vec<C64>]) -> Vec<ComplexMatrix> {
    basis_rows.iter().map(|row| contract_row(w.site_matrices(), row)).collect()
}

fn contract_row(mats: &[ComplexMatrix], row: &[C64]) -> ComplexMatrix {
    let d = mats[0].rows();
    let mut out = ComplexMatrix::zeros(d, d);
    for (a, &r) in mats.iter().zip(row) {
        if r != ZERO {
            out = &out + &a.scale(r);
        }
    }
    out
}

/// `A[x₁,x₂] = Σ_{i,j} ⟨x₁,x₂|W|i,j⟩ A[i] ⊗ A[j]`, returned row-major in
/// `(x₁, x₂)`.
pub fn two_site_matrices(
    w1: &WireTensor,
    w2: &WireTensor,
    coupling: &TwoModeOperator,
    rows1: &[Vec<C64>],
    rows2: &[Vec<C64>],
) -> Result<Vec<ComplexMatrix>> {
    let phys = w1.phys_dim();
    if w2.phys_dim() != phys {
        return Err(Error::Dimension { expected: phys, found: w2.phys_dim() });
    }
    let n_max = phys - 1;
    let adjoint = coupling.adjoint();
    let mut out = Vec::with_capacity(rows1.len() * rows2.len());
    for r1 in rows1 {
        for r2 in rows2 {
            // ⟨x₁,x₂|W|i,j⟩ = conj(⟨i,j|W†|x₁,x₂⟩)
            let ket = TwoModeVector::product(
                &FockVector::from_amplitudes(r1.iter().map(|z| z.conj()).collect()),
                &FockVector::from_amplitudes(r2.iter().map(|z| z.conj()).collect()),
            );
            let pulled = adjoint.apply(&ket);
            let d = w1.bond_dim() * w2.bond_dim();
            let mut m = ComplexMatrix::zeros(d, d);
            for i in 0..=n_max {
                for j in 0..=n_max {
                    let coeff = pulled.amplitude(i, j).conj();
                    if coeff.norm() < 1e-300 {
                        continue;
                    }
                    m = &m + &w1.site(i).kron(w2.site(j)).scale(coeff);
                }
            }
            out.push(m);
        }
    }
    Ok(out)
}

/// Isometry `V: C^d → C^D` used to encode a logical subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingIsometry {
    matrix: ComplexMatrix,
}

impl EncodingIsometry {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let d = matrix.cols();
        if d > matrix.rows() {
            return Err(Error::param("matrix", "an isometry cannot have more columns than rows"));
        }
        let defect = (&matrix.adjoint().matmul(&matrix) - &ComplexMatrix::identity(d)).max_abs();
        if defect > 1e-12 {
            return Err(Error::param("matrix", alloc::format!("isometry defect {defect:.3e}")));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// `B[i] = V† A[i] V` with boundaries projected through `V`.
pub fn encode(w: &WireTensor, v: &EncodingIsometry) -> Result<WireTensor> {
    let vm = v.matrix();
    if vm.rows() != w.bond_dim() {
        return Err(Error::Dimension { expected: w.bond_dim(), found: vm.rows() });
    }
    let vd = vm.adjoint();
    let site_matrices: Vec<ComplexMatrix> = w.site_matrices().iter().map(|a| vd.matmul(a).matmul(vm)).collect();
    let defect = completeness_defect(&site_matrices);
    let left = vd.mul_vec(w.boundary_left());
    let right = vd.mul_vec(w.boundary_right());
    Ok(WireTensor { site_matrices, boundary_left: left, boundary_right: right, completeness_defect: defect })
}

/// A measurement outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    Discrete(usize),
    Continuous(f64),
}

impl Outcome {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Outcome::Discrete(n) => n as f64,
            Outcome::Continuous(x) => x,
        }
    }
}

/// One measured site.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordEntry {
    pub basis: String,
    pub outcome: Outcome,
    /// Probability, or density for continuous outcomes.
    pub probability: f64,
    /// Normalized applied gate `A / √p`.
    pub gate: ComplexMatrix,
    pub unitarity_defect: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeasurementRecord {
    pub entries: Vec<RecordEntry>,
}

impl MeasurementRecord {
    pub fn push(&mut self, entry: RecordEntry) {
        self.entries.push(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Product of the recorded normalized gates, latest on the left.
    pub fn product(&self, dim: usize) -> ComplexMatrix {
        self.entries.iter().fold(ComplexMatrix::identity(dim), |acc, e| e.gate.matmul(&acc))
    }
}

/// A measurement basis on one site of a wire.
pub trait Measurement {
    fn label(&self) -> &str;

    fn bond_dim(&self) -> usize;

    /// Draws an outcome for `state`; returns it with the unnormalized matrix
    /// and its probability (or density).
    fn sample_outcome(&self, state: &CorrelationState, rng: &mut dyn RngCore) -> Result<(Outcome, ComplexMatrix, f64)>;

    /// Outcome-averaged channel `Σ A ⊗ conj(A)` acting on row-major `vec(ρ)`.
    fn channel(&self) -> ComplexMatrix;
}

/// Finite measurement basis, given by its matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteBasis {
    label: String,
    matrices: Vec<ComplexMatrix>,
}

impl DiscreteBasis {
    pub fn new(label: impl Into<String>, matrices: Vec<ComplexMatrix>) -> Result<Self> {
        let defect = completeness_defect(&matrices);
        let limit = Tolerances::DEFAULT.completeness_reject;
        if defect > limit {
            return Err(Error::Completeness { defect, limit });
        }
        Ok(Self { label: label.into(), matrices })
    }

    /// The wire's own computational basis.
    pub fn computational(w: &WireTensor) -> Self {
        Self { label: "number".to_string(), matrices: w.site_matrices().to_vec() }
    }

    pub fn from_rows(w: &WireTensor, label: impl Into<String>, rows: &[Vec<C64>]) -> Result<Self> {
        Self::new(label, skew_measure(w, rows))
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    /// Outcome probabilities for `state`.
    pub fn probabilities(&self, state: &CorrelationState) -> Vec<f64> {
        self.matrices.iter().map(|a| linalg::norm_sqr(&a.mul_vec(state.as_slice()))).collect()
    }
}

impl Measurement for DiscreteBasis {
    fn label(&self) -> &str {
        &self.label
    }

    fn bond_dim(&self) -> usize {
        self.matrices[0].rows()
    }

    fn sample_outcome(&self, state: &CorrelationState, rng: &mut dyn RngCore) -> Result<(Outcome, ComplexMatrix, f64)> {
        let probs = self.probabilities(state);
        let total: f64 = probs.iter().sum();
        let limit = Tolerances::DEFAULT.probability_abort;
        if (total - 1.0).abs() > limit {
            return Err(Error::ProbabilityMass { defect: (total - 1.0).abs(), limit });
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = probs.len() - 1;
        for (k, &p) in probs.iter().enumerate() {
            if u < p {
                pick = k;
                break;
            }
            u -= p;
        }
        while probs[pick] == 0.0 {
            pick -= 1;
        }
        Ok((Outcome::Discrete(pick), self.matrices[pick].clone(), probs[pick]))
    }

    fn channel(&self) -> ComplexMatrix {
        superoperator(self.matrices.iter().map(|a| (a.clone(), 1.0)))
    }
}

fn superoperator(terms: impl Iterator<Item = (ComplexMatrix, f64)>) -> ComplexMatrix {
    let mut out: Option<ComplexMatrix> = None;
    for (a, weight) in terms {
        let conj = ComplexMatrix::from_fn(a.rows(), a.cols(), |r, c| a[(r, c)].conj());
        let term = a.kron(&conj).scale_real(weight);
        out = Some(match out {
            Some(acc) => &acc + &term,
            None => term,
        });
    }
    out.expect("at least one Kraus operator")
}

/// Tabulated density on a uniform grid, sampled by inverse CDF with
/// piecewise-linear interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedDensity {
    start: f64,
    step: f64,
    density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TabulatedDensity {
    pub fn new(start: f64, step: f64, density: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(density.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in density.windows(2) {
            acc += 0.5 * step * (w[0].max(0.0) + w[1].max(0.0));
            cumulative.push(acc);
        }
        Self { start, step, density, cumulative }
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Maps `u ∈ [0, 1)` to a sample.
    pub fn quantile(&self, u: f64) -> f64 {
        let target = u * self.total();
        let cell = match self.cumulative.binary_search_by(|c| c.total_cmp(&target)) {
            Ok(i) => i.min(self.cumulative.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.cumulative.len() - 2),
        };
        let d0 = self.density[cell].max(0.0);
        let d1 = self.density[cell + 1].max(0.0);
        let need = target - self.cumulative[cell];
        let h = self.step;
        // ∫₀ᵗ (d0 + (d1 − d0) s / h) ds = need
        let slope = (d1 - d0) / h;
        let t = if slope.abs() < 1e-300 {
            if d0 > 0.0 { need / d0 } else { 0.5 * h }
        } else {
            let disc = (d0 * d0 + 2.0 * slope * need).max(0.0);
            (2.0 * need) / (d0 + disc.sqrt())
        };
        self.start + h * cell as f64 + t.clamp(0.0, h)
    }

    pub fn grid_point(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }
}

type MatrixFn = Box<dyn Fn(f64) -> ComplexMatrix + Send + Sync>;

/// Continuous-outcome basis `x ↦ A[x]` on a finite window, with a grid
/// refined until `∫ A†A dx = 1` to the quadrature tolerance.
pub struct ContinuousBasis {
    label: String,
    generator: MatrixFn,
    start: f64,
    step: f64,
    gram: Vec<ComplexMatrix>,
    completeness_defect: f64,
}

impl core::fmt::Debug for ContinuousBasis {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ContinuousBasis")
            .field("label", &self.label)
            .field("window", &(self.start, self.start + self.step * (self.gram.len() - 1) as f64))
            .field("points", &self.gram.len())
            .field("completeness_defect", &self.completeness_defect)
            .finish()
    }
}

impl ContinuousBasis {
    pub fn new(
        label: impl Into<String>,
        x_min: f64,
        x_max: f64,
        generator: impl Fn(f64) -> ComplexMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        let tol = Tolerances::DEFAULT;
        let mut points = 257;
        loop {
            let step = (x_max - x_min) / (points - 1) as f64;
            let gram: Vec<ComplexMatrix> = (0..points)
                .map(|i| {
                    let a = generator(x_min + step * i as f64);
                    a.adjoint().matmul(&a)
                })
                .collect();
            let d = gram[0].rows();
            let mut integral = ComplexMatrix::zeros(d, d);
            for (i, g) in gram.iter().enumerate() {
                let w = if i == 0 || i == points - 1 { 0.5 * step } else { step };
                integral = &integral + &g.scale_real(w);
            }
            let defect = (&integral - &ComplexMatrix::identity(d)).op_norm();
            if defect <= tol.quadrature || points >= 1 << 16 {
                if defect > tol.completeness_reject {
                    return Err(Error::Completeness { defect, limit: tol.completeness_reject });
                }
                return Ok(Self {
                    label: label.into(),
                    generator: Box::new(generator),
                    start: x_min,
                    step,
                    gram,
                    completeness_defect: defect,
                });
            }
            points = 2 * points - 1;
        }
    }

    /// Homodyne basis at angle `theta` on a discrete wire, over
    /// `[−x_lim, x_lim]`.
    pub fn homodyne(w: &WireTensor, theta: f64, x_lim: f64) -> Result<Self> {
        let mats = w.site_matrices().to_vec();
        let n_max = mats.len() - 1;
        Self::new(alloc::format!("homodyne({theta})"), -x_lim, x_lim, move |x| {
            contract_row(&mats, &crate::fock::homodyne_projector_row(theta, x, n_max))
        })
    }

    pub fn matrix_at(&self, x: f64) -> ComplexMatrix {
        (self.generator)(x)
    }

    pub fn completeness_defect(&self) -> f64 {
        self.completeness_defect
    }

    pub fn window(&self) -> (f64, f64) {
        (self.start, self.start + self.step * (self.gram.len() - 1) as f64)
    }

    /// Outcome density for `state` on the refined grid.
    pub fn density_table(&self, state: &CorrelationState) -> TabulatedDensity {
        let psi = state.as_slice();
        let density = self.gram.iter().map(|g| linalg::inner(psi, &g.mul_vec(psi)).re).collect();
        TabulatedDensity::new(self.start, self.step, density)
    }
}

impl Measurement for ContinuousBasis {
    fn label(&self) -> &str {
        &self.label
    }

    fn bond_dim(&self) -> usize {
        self.gram[0].rows()
    }

    fn sample_outcome(&self, state: &CorrelationState, rng: &mut dyn RngCore) -> Result<(Outcome, ComplexMatrix, f64)> {
        let table = self.density_table(state);
        let limit = Tolerances::DEFAULT.probability_abort;
        let defect = (table.total() - 1.0).abs();
        if defect > limit {
            return Err(Error::ProbabilityMass { defect, limit });
        }
        let x = table.quantile(rng.random::<f64>());
        let a = self.matrix_at(x);
        let p = linalg::norm_sqr(&a.mul_vec(state.as_slice()));
        Ok((Outcome::Continuous(x), a, p))
    }

    fn channel(&self) -> ComplexMatrix {
        let n = self.gram.len();
        let terms = (0..n).map(|i| {
            let w = if i == 0 || i == n - 1 { 0.5 * self.step } else { self.step };
            (self.matrix_at(self.start + self.step * i as f64), w)
        });
        superoperator(terms)
    }
}

/// Result of one measured site.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub outcome: Outcome,
    pub state: CorrelationState,
    pub entry: RecordEntry,
}

/// Measures one site and updates the correlation state.
pub fn sample_step(basis: &dyn Measurement, state: &CorrelationState, rng: &mut dyn RngCore) -> Result<Step> {
    let (outcome, a, p) = basis.sample_outcome(state, rng)?;
    let (next, _) = state.evolve(&a)?;
    let gate = a.scale_real(1.0 / p.sqrt());
    let unitarity_defect = gate.unitarity_defect();
    Ok(Step {
        outcome,
        state: next,
        entry: RecordEntry { basis: basis.label().to_string(), outcome, probability: p, gate, unitarity_defect },
    })
}

/// `min_ψ` overlap of a product with its polar unitary: `4 s_max s_min / (s_max + s_min)²`.
pub fn conditioned_fidelity(product: &ComplexMatrix) -> f64 {
    let s = linalg::svd(product).singular_values;
    let (hi, lo) = (s[0], *s.last().unwrap());
    if hi == 0.0 {
        return 0.0;
    }
    4.0 * hi * lo / ((hi + lo) * (hi + lo))
}

/// Per-step conditioned fidelity along one trajectory, starting from a
/// Haar-random state. Entry `k` is the fidelity after `k` steps.
pub fn transport_trajectory(basis: &dyn Measurement, n_steps: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    let d = basis.bond_dim();
    let mut state = CorrelationState::haar(d, rng);
    let mut product = ComplexMatrix::identity(d);
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(1.0);
    for _ in 0..n_steps {
        let step = sample_step(basis, &state, rng)?;
        product = step.entry.gate.matmul(&product);
        let scale = product.max_abs();
        product = product.scale_real(1.0 / scale);
        out.push(conditioned_fidelity(&product));
        state = step.state;
    }
    Ok(out)
}

/// Trajectory-averaged conditioned fidelity, trajectories drawn from
/// `stream(seed, t)`.
pub fn transport_fidelity_trace(
    basis: &dyn Measurement,
    n_steps: usize,
    trajectories: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; n_steps + 1];
    for t in 0..trajectories {
        let mut rng = crate::rng::stream(master_seed, t as u64);
        for (s, f) in sum.iter_mut().zip(transport_trajectory(basis, n_steps, &mut rng)?) {
            *s += f;
        }
    }
    Ok(sum.into_iter().map(|s| s / trajectories as f64).collect())
}

/// Outcome-blind transport fidelity `max_U min_ψ ⟨ψ|U Φⁿ(ψψ†) U†|ψ⟩` for a
/// qubit channel, by grid search over `U` and `ψ`.
pub fn blind_fidelity(channel: &ComplexMatrix, n_steps: usize) -> f64 {
    assert_eq!(channel.rows(), 4, "blind fidelity is implemented for qubits");
    let mut power = ComplexMatrix::identity(4);
    let mut base = channel.clone();
    let mut k = n_steps;
    while k > 0 {
        if k & 1 == 1 {
            power = base.matmul(&power);
        }
        base = base.matmul(&base);
        k >>= 1;
    }
    let probes = sphere_probes(96);
    let worst = |u: &Gate2| {
        probes
            .iter()
            .map(|psi| {
                let rho = [psi[0] * psi[0].conj(), psi[0] * psi[1].conj(), psi[1] * psi[0].conj(), psi[1] * psi[1].conj()];
                let out = power.mul_vec(&rho);
                let m = Gate2([[out[0], out[1]], [out[2], out[3]]]);
                let rotated = *u * m * u.adjoint();
                let v = rotated.apply(psi);
                (psi[0].conj() * v[0] + psi[1].conj() * v[1]).re
            })
            .fold(f64::INFINITY, f64::min)
    };
    let angles = |a: f64, b: f64, c: f64| crate::su2::PhaseTriple { phi1: a, phi2: b, phi3: c }.reconstruct();
    let grid = 10;
    let tau = core::f64::consts::TAU;
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    for i in 0..grid {
        for j in 0..grid {
            for k in 0..grid {
                let p = [tau * i as f64 / grid as f64, tau * j as f64 / grid as f64, tau * k as f64 / grid as f64];
                let v = worst(&angles(p[0], p[1], p[2]));
                if v > best.0 {
                    best = (v, p);
                }
            }
        }
    }
    let mut step = tau / grid as f64 / 2.0;
    while step > 1e-4 {
        let mut improved = false;
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut p = best.1;
                p[axis] += sign * step;
                let v = worst(&angles(p[0], p[1], p[2]));
                if v > best.0 {
                    best = (v, p);
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best.0
}

fn sphere_probes(count: usize) -> Vec<[C64; 2]> {
    let golden = core::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let polar = z.clamp(-1.0, 1.0).acos();
            let azimuth = golden * i as f64;
            [C64::new((polar / 2.0).cos(), 0.0), C64::from_polar((polar / 2.0).sin(), azimuth)]
        })
        .collect()
}

/// Two-outcome wire whose gates have singular ratio `ratio` in opposite
/// orientations: `A₀ = U₀ diag(1, r)/√(1+r²)`, `A₁ = U₁ diag(r, 1)/√(1+r²)`.
pub fn synthetic_nonunitary_wire(u0: &Gate2, u1: &Gate2, ratio: f64) -> Result<WireTensor> {
    let norm = 1.0 / (1.0 + ratio * ratio).sqrt();
    let a0 = *u0 * Gate2::diag(C64::new(norm, 0.0), C64::new(ratio * norm, 0.0));
    let a1 = *u1 * Gate2::diag(C64::new(ratio * norm, 0.0), C64::new(norm, 0.0));
    WireTensor::new(vec![a0.to_matrix(), a1.to_matrix()])
}
