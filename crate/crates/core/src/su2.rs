//! 2×2 and 4×4 gate algebra with phase-quotiented distances.

use core::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use core::ops::Mul;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, ComplexMatrix};
use crate::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A 2×2 complex matrix, usually a single-qubit gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate2(pub [[C64; 2]; 2]);

impl Gate2 {
    pub const IDENTITY: Gate2 = Gate2([[ONE, ZERO], [ZERO, ONE]]);
    pub const PAULI_X: Gate2 = Gate2([[ZERO, ONE], [ONE, ZERO]]);
    pub const PAULI_Z: Gate2 = Gate2([[ONE, ZERO], [ZERO, C64 { re: -1.0, im: 0.0 }]]);
    pub const HADAMARD: Gate2 = Gate2([
        [C64 { re: FRAC_1_SQRT_2, im: 0.0 }, C64 { re: FRAC_1_SQRT_2, im: 0.0 }],
        [C64 { re: FRAC_1_SQRT_2, im: 0.0 }, C64 { re: -FRAC_1_SQRT_2, im: 0.0 }],
    ]);

    pub fn diag(a: C64, b: C64) -> Self {
        Gate2([[a, ZERO], [ZERO, b]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Gate2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Gate2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn sub(&self, other: &Gate2) -> Self {
        let (a, b) = (&self.0, &other.0);
        Gate2([[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]])
    }

    pub fn apply(&self, v: &[C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    /// Largest singular value, in closed form.
    pub fn op_norm(&self) -> f64 {
        let m = &self.0;
        let p = m[0][0].norm_sqr() + m[1][0].norm_sqr();
        let r = m[0][1].norm_sqr() + m[1][1].norm_sqr();
        let q = (m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1]).norm();
        let half = (((p - r) / 2.0).powi(2) + q * q).sqrt();
        ((p + r) / 2.0 + half).sqrt()
    }

    /// `‖G†G − 1‖` in operator norm.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint() * *self;
        let p = g.0[0][0].re - 1.0;
        let r = g.0[1][1].re - 1.0;
        let q = g.0[0][1].norm();
        let mid = (p + r) / 2.0;
        let half = (((p - r) / 2.0).powi(2) + q * q).sqrt();
        (mid + half).abs().max((mid - half).abs())
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.0[0][1].norm() <= tol && self.0[1][0].norm() <= tol
    }

    pub fn kron(&self, other: &Gate2) -> Gate4 {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (col, e) in row.iter_mut().enumerate() {
                *e = self.0[r / 2][col / 2] * other.0[r % 2][col % 2];
            }
        }
        Gate4(out)
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |r, c| self.0[r][c])
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if m.rows() != 2 || m.cols() != 2 {
            return Err(Error::Dimension { expected: 2, found: m.rows().max(m.cols()) });
        }
        Ok(Gate2([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]))
    }

    /// Row-major `(re, im)` pairs.
    pub fn to_flat(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (i, z) in self.0.iter().flatten().enumerate() {
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
        out
    }

    pub fn from_flat(v: &[f64; 8]) -> Self {
        Gate2([[c(v[0], v[1]), c(v[2], v[3])], [c(v[4], v[5]), c(v[6], v[7])]])
    }
}

impl Mul for Gate2 {
    type Output = Gate2;
    fn mul(self, rhs: Gate2) -> Gate2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (col, e) in row.iter_mut().enumerate() {
                *e = a[r][0] * b[0][col] + a[r][1] * b[1][col];
            }
        }
        Gate2(out)
    }
}

/// A 4×4 complex matrix on two qubits, index `2·first + second`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate4(pub [[C64; 4]; 4]);

impl Gate4 {
    pub fn identity() -> Self {
        Self::diag([ONE; 4])
    }

    pub fn cz() -> Self {
        Self::diag([ONE, ONE, ONE, -ONE])
    }

    pub fn diag(d: [C64; 4]) -> Self {
        let mut out = [[ZERO; 4]; 4];
        for i in 0..4 {
            out[i][i] = d[i];
        }
        Gate4(out)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (col, e) in row.iter_mut().enumerate() {
                *e = self.0[col][r].conj();
            }
        }
        Gate4(out)
    }

    pub fn apply(&self, v: &[C64; 4]) -> [C64; 4] {
        let mut out = [ZERO; 4];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|k| self.0[r][k] * v[k]).sum();
        }
        out
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(4, 4, |r, c| self.0[r][c])
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if m.rows() != 4 || m.cols() != 4 {
            return Err(Error::Dimension { expected: 4, found: m.rows().max(m.cols()) });
        }
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (col, e) in row.iter_mut().enumerate() {
                *e = m[(r, col)];
            }
        }
        Ok(Gate4(out))
    }

    pub fn op_norm(&self) -> f64 {
        self.to_matrix().op_norm()
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.to_matrix().unitarity_defect()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..4).all(|r| (0..4).all(|c| r == c || self.0[r][c].norm() <= tol))
    }
}

impl Mul for Gate4 {
    type Output = Gate4;
    fn mul(self, rhs: Gate4) -> Gate4 {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (col, e) in row.iter_mut().enumerate() {
                *e = (0..4).map(|k| self.0[r][k] * rhs.0[k][col]).sum();
            }
        }
        Gate4(out)
    }
}

/// `S(φ) = e^{−iφ/2} diag(1, e^{iφ})`.
pub fn phase_gate(phi: f64) -> Gate2 {
    Gate2::diag(C64::from_polar(1.0, -phi / 2.0), C64::from_polar(1.0, phi / 2.0))
}

/// Gates with a phase-quotiented operator-norm distance.
pub trait PhaseDistance {
    /// `min_φ ‖self − e^{iφ} other‖`.
    fn dist_up_to_phase(&self, other: &Self) -> f64;
}

pub fn dist_up_to_phase<G: PhaseDistance>(a: &G, b: &G) -> f64 {
    a.dist_up_to_phase(b)
}

impl PhaseDistance for Gate2 {
    fn dist_up_to_phase(&self, other: &Gate2) -> f64 {
        const UNITARY: f64 = 1e-10;
        if self.unitarity_defect() < UNITARY && other.unitarity_defect() < UNITARY {
            return unitary_distance(&(other.adjoint() * *self));
        }
        if self.is_diagonal(0.0) && other.is_diagonal(0.0) {
            return diagonal_distance(
                [self.0[0][0], self.0[1][1]],
                [other.0[0][0], other.0[1][1]],
            );
        }
        let start = (other.adjoint() * *self).trace().arg();
        minimize_over_phase(start, |phi| self.sub(&other.scale(C64::from_polar(1.0, phi))).op_norm())
    }
}

impl PhaseDistance for Gate4 {
    fn dist_up_to_phase(&self, other: &Gate4) -> f64 {
        let (a, b) = (self.to_matrix(), other.to_matrix());
        let start = b.adjoint().matmul(&a).trace().arg();
        minimize_over_phase(start, |phi| (&a - &b.scale(C64::from_polar(1.0, phi))).op_norm())
    }
}

/// Distance of a 2×2 unitary from the scalars, from its eigenphase gap.
fn unitary_distance(w: &Gate2) -> f64 {
    let root = w.det().sqrt();
    let v = w.scale(root.inv());
    let a = (v.0[0][0] + v.0[1][1].conj()) / 2.0;
    let b = (v.0[1][0] - v.0[0][1].conj()) / 2.0;
    let sin_half_gap = (b.norm_sqr() + a.im * a.im).sqrt();
    let half_gap = sin_half_gap.atan2(a.re.abs());
    2.0 * (half_gap / 2.0).sin()
}

/// Exact minimax of two phase-shifted circles.
fn diagonal_distance(a: [C64; 2], b: [C64; 2]) -> f64 {
    let eval = |phi: f64| {
        let z = C64::from_polar(1.0, phi);
        (a[0] - z * b[0]).norm().max((a[1] - z * b[1]).norm())
    };
    // |a_k − e^{iφ} b_k|² = A_k − B_k cos(φ − δ_k)
    let big_a = [a[0].norm_sqr() + b[0].norm_sqr(), a[1].norm_sqr() + b[1].norm_sqr()];
    let big_b = [2.0 * a[0].norm() * b[0].norm(), 2.0 * a[1].norm() * b[1].norm()];
    let delta = [(a[0] * b[0].conj()).arg(), (a[1] * b[1].conj()).arg()];

    let mut candidates = [delta[0], delta[1], 0.0, 0.0];
    let mut count = 2;
    // B0 cos(φ−δ0) − B1 cos(φ−δ1) = A0 − A1, i.e. p cos φ + q sin φ = r
    let p = big_b[0] * delta[0].cos() - big_b[1] * delta[1].cos();
    let q = big_b[0] * delta[0].sin() - big_b[1] * delta[1].sin();
    let r = big_a[0] - big_a[1];
    let amp = (p * p + q * q).sqrt();
    if amp > 0.0 && r.abs() <= amp {
        let base = q.atan2(p);
        let spread = (r / amp).clamp(-1.0, 1.0).acos();
        candidates[2] = base + spread;
        candidates[3] = base - spread;
        count = 4;
    }
    let best_phi = candidates[..count]
        .iter()
        .copied()
        .min_by(|x, y| eval(*x).total_cmp(&eval(*y)))
        .unwrap_or(0.0);
    // acos loses digits near tangency; a short local search restores them
    const POLISH: f64 = 1e-6;
    eval(best_phi).min(golden_section(&eval, best_phi - POLISH, best_phi + POLISH))
}

fn minimize_over_phase(start: f64, f: impl Fn(f64) -> f64) -> f64 {
    const GRID: usize = 64;
    let step = TAU / GRID as f64;
    let mut samples: [(f64, f64); GRID] = [(0.0, 0.0); GRID];
    for (i, s) in samples.iter_mut().enumerate() {
        let phi = start + i as f64 * step;
        *s = (phi, f(phi));
    }
    samples.sort_by(|x, y| x.1.total_cmp(&y.1));
    let mut best = samples[0].1;
    for &(centre, _) in samples.iter().take(3) {
        best = best.min(golden_section(&f, centre - step, centre + step));
    }
    best
}

fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}

/// Phases of `S(φ₁) H S(φ₂) H S(φ₃)`, each in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseTriple {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

impl PhaseTriple {
    pub fn reconstruct(&self) -> Gate2 {
        phase_gate(self.phi1) * Gate2::HADAMARD * phase_gate(self.phi2) * Gate2::HADAMARD * phase_gate(self.phi3)
    }
}

pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU { 0.0 } else { w }
}

/// Decomposes a unitary as `S(φ₁) H S(φ₂) H S(φ₃)` up to global phase.
///
/// Diagonal inputs give `φ₂ = φ₃ = 0`; anti-diagonal ones give `φ₃ = 0`.
pub fn euler_decompose(u: &Gate2) -> Result<PhaseTriple> {
    let defect = u.unitarity_defect();
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let m = &u.0;
    let diag_mag = (m[0][0].norm() + m[1][1].norm()) / 2.0;
    let off_mag = (m[0][1].norm() + m[1][0].norm()) / 2.0;
    const DEGENERATE: f64 = 1e-14;

    let triple = if off_mag <= DEGENERATE {
        PhaseTriple { phi1: wrap_phase((m[1][1] * m[0][0].conj()).arg()), phi2: 0.0, phi3: 0.0 }
    } else if diag_mag <= DEGENERATE {
        PhaseTriple { phi1: wrap_phase((m[1][0] * m[0][1].conj()).arg()), phi2: PI, phi3: 0.0 }
    } else {
        let phi2 = 2.0 * off_mag.atan2(diag_mag);
        let sum = (m[1][1] * m[0][0].conj()).arg();
        let diff = (m[1][0] * m[0][1].conj()).arg();
        let first = PhaseTriple {
            phi1: wrap_phase((sum + diff) / 2.0),
            phi2: wrap_phase(phi2),
            phi3: wrap_phase((sum - diff) / 2.0),
        };
        let second = PhaseTriple {
            phi1: wrap_phase(first.phi1 + PI),
            phi2: first.phi2,
            phi3: wrap_phase(first.phi3 + PI),
        };
        if first.reconstruct().dist_up_to_phase(u) <= second.reconstruct().dist_up_to_phase(u) {
            first
        } else {
            second
        }
    };
    Ok(triple)
}

/// Operator-Schmidt coefficients of a two-qubit gate, descending.
pub fn operator_schmidt_coefficients(g: &Gate4) -> [f64; 4] {
    // realignment R[(i1 j1), (i2 j2)] = g[(i1 i2), (j1 j2)]
    let realigned = ComplexMatrix::from_fn(4, 4, |row, col| {
        let (i1, j1) = (row / 2, row % 2);
        let (i2, j2) = (col / 2, col % 2);
        g.0[2 * i1 + i2][2 * j1 + j2]
    });
    let s = linalg::svd(&realigned).singular_values;
    [s[0], s[1], s[2], s[3]]
}

/// True unless the gate factorizes as a tensor product.
pub fn is_entangling(g: &Gate4) -> bool {
    let s = operator_schmidt_coefficients(g);
    s[1] > 1e-9 * s[0].max(f64::MIN_POSITIVE)
}

/// `m = U diag(s1, s2) V†` with `s1 ≥ s2 ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularGap {
    pub s1: f64,
    pub s2: f64,
    pub u: Gate2,
    pub v: Gate2,
}

pub fn singular_gap(m: &Gate2) -> SingularGap {
    let svd = linalg::svd(&m.to_matrix());
    SingularGap {
        s1: svd.singular_values[0],
        s2: svd.singular_values[1],
        u: Gate2::from_matrix(&svd.u).expect("2×2"),
        v: Gate2::from_matrix(&svd.v).expect("2×2"),
    }
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian matrix.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> Gate2 {
    let mut z = [[ZERO; 2]; 2];
    for e in z.iter_mut().flatten() {
        *e = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
    }
    let col0 = [z[0][0], z[1][0]];
    let col1 = [z[0][1], z[1][1]];
    let n0 = (col0[0].norm_sqr() + col0[1].norm_sqr()).sqrt();
    let q0 = [col0[0] / n0, col0[1] / n0];
    let overlap = q0[0].conj() * col1[0] + q0[1].conj() * col1[1];
    let r1 = [col1[0] - overlap * q0[0], col1[1] - overlap * q0[1]];
    let n1 = (r1[0].norm_sqr() + r1[1].norm_sqr()).sqrt();
    let q1 = [r1[0] / n1, r1[1] / n1];
    Gate2([[q0[0], q1[0]], [q0[1], q1[1]]])
}

/// Haar-random normalized state in `C^dim`.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> alloc::vec::Vec<C64> {
    let mut v: alloc::vec::Vec<C64> =
        (0..dim).map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    linalg::normalize(&mut v);
    v
}
