//! Complex 2×2 algebra on the correlation space, Pauli decompositions, Kraus
//! set validation and the Pauli transfer matrix of a channel.
//!
//! The Pauli basis is ordered `(σ0, σ1, σ2, σ3) = (I, X, Y, Z)` everywhere in
//! the crate. Transfer matrices are expressed in the orthonormal basis
//! `{σ_i/√2}`, so `m[i][j] = Tr(σ_i 𝒜(σ_j)) / 2`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real3::{self, M3};

/// Structural tolerance (unitarity, CPTP checks).
pub const STRUCTURAL_TOL: f64 = 1e-9;
/// Tolerance for arithmetic identities.
pub const ARITHMETIC_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// A correlation-space ket.
pub type Ket = [C64; 2];

/// Construct a complex scalar, rejecting NaN and infinities.
pub fn complex(re: f64, im: f64) -> Result<C64> {
    if re.is_finite() && im.is_finite() {
        Ok(C64::new(re, im))
    } else {
        Err(Error::NonFinite("complex scalar"))
    }
}

pub fn ket_norm(k: &Ket) -> f64 {
    (k[0].norm_sqr() + k[1].norm_sqr()).sqrt()
}

pub fn inner(a: &Ket, b: &Ket) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// Multiply `k` by a global phase so that its first non-negligible component
/// is real and positive.
pub fn canonical_phase(k: Ket) -> Ket {
    let pivot = if k[0].norm() > 1e-12 { k[0] } else { k[1] };
    if pivot.norm() == 0.0 {
        return k;
    }
    let phase = pivot.conj() / pivot.norm();
    [k[0] * phase, k[1] * phase]
}

/// Pure state with Bloch vector `n` (assumed unit length), canonical phase.
pub fn ket_from_bloch(n: &[f64; 3]) -> Ket {
    let z = n[2].clamp(-1.0, 1.0);
    if 1.0 + z < 1e-14 {
        return [ZERO, ONE];
    }
    let s = (2.0 * (1.0 + z)).sqrt();
    [C64::new((1.0 + z) / s, 0.0), C64::new(n[0], n[1]) / s]
}

/// The state orthogonal to `k` with the phase convention that `[k, k⊥]`
/// forms a matrix of determinant one.
pub fn orthogonal(k: &Ket) -> Ket {
    [-k[1].conj(), k[0].conj()]
}

/// A 2×2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new_unchecked(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    /// Checked constructor: every entry must be finite.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let m = Mat2([[a, b], [c, d]]);
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::NonFinite("2×2 matrix"))
        }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[C64::new(a, 0.0), C64::new(b, 0.0)], [C64::new(c, 0.0), C64::new(d, 0.0)]])
    }

    pub const fn zero() -> Self {
        Mat2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    /// `σ_i` for `i ∈ 0..4`.
    pub fn pauli(i: usize) -> Self {
        match i {
            0 => Self::identity(),
            1 => Mat2([[ZERO, ONE], [ONE, ZERO]]),
            2 => Mat2([[ZERO, -I], [I, ZERO]]),
            3 => Mat2([[ONE, ZERO], [ZERO, -ONE]]),
            _ => panic!("Pauli index {i} out of range"),
        }
    }

    pub fn x() -> Self {
        Self::pauli(1)
    }

    pub fn y() -> Self {
        Self::pauli(2)
    }

    pub fn z() -> Self {
        Self::pauli(3)
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::real(h, h, h, -h)
    }

    /// `Z(φ) = exp(-iφZ/2)`.
    pub fn z_rotation(phi: f64) -> Self {
        let a = C64::from_polar(1.0, -phi / 2.0);
        Mat2([[a, ZERO], [ZERO, a.conj()]])
    }

    /// `exp(iθY) = cos θ I + i sin θ Y`.
    pub fn exp_iy(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::real(c, s, -s, c)
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: &Ket, b: &Ket) -> Self {
        Mat2([
            [a[0] * b[0].conj(), a[0] * b[1].conj()],
            [a[1] * b[0].conj(), a[1] * b[1].conj()],
        ])
    }

    /// Density matrix `I/2 + Σ r_i σ_i / 2` of a Bloch vector.
    pub fn from_bloch(r: &[f64; 3]) -> Self {
        Mat2([
            [C64::new((1.0 + r[2]) / 2.0, 0.0), C64::new(r[0] / 2.0, -r[1] / 2.0)],
            [C64::new(r[0] / 2.0, r[1] / 2.0), C64::new((1.0 - r[2]) / 2.0, 0.0)],
        ])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn apply(&self, k: &Ket) -> Ket {
        let m = &self.0;
        [m[0][0] * k[0] + m[0][1] * k[1], m[1][0] * k[0] + m[1][1] * k[1]]
    }

    /// `⟨a|M|b⟩`
    pub fn sandwich(&self, a: &Ket, b: &Ket) -> C64 {
        inner(a, &self.apply(b))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn distance(&self, other: &Mat2) -> f64 {
        (*self - *other).max_abs()
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        let h = self.dagger() * *self;
        let (vals, _) = h.hermitian_eigen();
        vals[1].max(0.0).sqrt()
    }

    /// Hermiticity residual `max |M - M†|`.
    pub fn hermitian_residual(&self) -> f64 {
        self.distance(&self.dagger())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.dagger() * *self).distance(&Mat2::identity()) <= tol
    }

    /// If `M†M = cI` within `tol` with `c > 0`, returns `c`.
    pub fn unitary_weight(&self, tol: f64) -> Option<f64> {
        let h = self.dagger() * *self;
        let c = h.trace().re / 2.0;
        if c > tol && h.distance(&Mat2::identity().scale_re(c)) <= tol {
            Some(c)
        } else {
            None
        }
    }

    pub fn is_proportional_to_unitary(&self, tol: f64) -> bool {
        self.unitary_weight(tol).is_some()
    }

    /// Bloch components `Tr(σ_i M)` for `i = 1..=3`, real parts.
    pub fn bloch(&self) -> [f64; 3] {
        let c = pauli_decompose(self);
        [2.0 * c[1].re, 2.0 * c[2].re, 2.0 * c[3].re]
    }

    /// Purity `Tr(ρ²)` of a Hermitian matrix divided by `Tr(ρ)²`.
    pub fn purity(&self) -> f64 {
        let t = self.trace().re;
        (*self * *self).trace().re / (t * t)
    }

    /// Eigen-decomposition of a Hermitian matrix (the Hermitian part is used).
    /// Eigenvalues ascending; eigenvectors carry the canonical phase.
    pub fn hermitian_eigen(&self) -> ([f64; 2], [Ket; 2]) {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = (self.0[0][1] + self.0[1][0].conj()) * 0.5;
        let mean = (a + d) / 2.0;
        let half = (a - d) / 2.0;
        let r = (half * half + b.norm_sqr()).sqrt();
        let vals = [mean - r, mean + r];
        if b.norm() <= 1e-300 {
            // already diagonal
            return if a <= d {
                (vals, [[ONE, ZERO], [ZERO, ONE]])
            } else {
                (vals, [[ZERO, ONE], [ONE, ZERO]])
            };
        }
        // eigenvector for the upper eigenvalue, written stably
        let upper = if half >= 0.0 {
            [C64::new(half + r, 0.0), b.conj()]
        } else {
            [b, C64::new(r - half, 0.0)]
        };
        let n = ket_norm(&upper);
        let upper = canonical_phase([upper[0] / n, upper[1] / n]);
        let lower = canonical_phase(orthogonal(&upper));
        (vals, [lower, upper])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + (-rhs)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

/// Coefficients `α_j = Tr(σ_j M)/2` with `M = Σ_j α_j σ_j`.
pub fn pauli_decompose(m: &Mat2) -> [C64; 4] {
    let e = &m.0;
    [
        (e[0][0] + e[1][1]) * 0.5,
        (e[0][1] + e[1][0]) * 0.5,
        (e[0][1] - e[1][0]) * I * 0.5,
        (e[0][0] - e[1][1]) * 0.5,
    ]
}

pub fn pauli_recompose(alpha: &[C64; 4]) -> Mat2 {
    (0..4).fold(Mat2::zero(), |acc, j| acc + Mat2::pauli(j).scale(alpha[j]))
}

/// The Kraus operators `A[i]` of one MPS site together with their weights
/// `c_i = Tr(A†[i]A[i])/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    ops: Vec<Mat2>,
    weights: Vec<f64>,
}

impl KrausSet {
    /// Build from operators; weights are recovered from traces.
    pub fn new(ops: Vec<Mat2>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidKraus("at least one Kraus operator is required".into()));
        }
        if ops.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("Kraus operator"));
        }
        let weights = ops.iter().map(|a| (a.dagger() * *a).trace().re / 2.0).collect();
        Ok(KrausSet { ops, weights })
    }

    /// Build from operators and user-declared weights; the declared weights
    /// must agree with the traces within `tol`.
    pub fn with_weights(ops: Vec<Mat2>, weights: &[f64], tol: f64) -> Result<Self> {
        let set = Self::new(ops)?;
        if weights.len() != set.d() {
            return Err(Error::DimensionMismatch { expected: set.d(), found: weights.len() });
        }
        for (index, (&given, &recovered)) in weights.iter().zip(&set.weights).enumerate() {
            if !given.is_finite() || (given - recovered).abs() > tol {
                return Err(Error::WeightMismatch { index, given, recovered });
            }
        }
        Ok(set)
    }

    /// Physical dimension `d` (number of Kraus operators).
    pub fn d(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Mat2] {
        &self.ops
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `𝒜ρ = Σ_i A[i] ρ A†[i]`, valid for non-Hermitian arguments too.
    pub fn apply(&self, rho: &Mat2) -> Mat2 {
        self.ops.iter().fold(Mat2::zero(), |acc, a| acc + *a * *rho * a.dagger())
    }

    /// `𝒜^m ρ` by repeated Kraus conjugation.
    pub fn apply_pow(&self, rho: &Mat2, m: usize) -> Mat2 {
        (0..m).fold(*rho, |acc, _| self.apply(&acc))
    }

    /// Transfer matrix without validating the channel.
    pub fn transfer_unchecked(&self) -> PauliTransfer {
        let mut m = [[0.0; 4]; 4];
        for j in 0..4 {
            let image = self.apply(&Mat2::pauli(j));
            for (i, row) in m.iter_mut().enumerate() {
                row[j] = (Mat2::pauli(i) * image).trace().re / 2.0;
            }
        }
        PauliTransfer { m }
    }
}

/// Result of checking the CPTP conditions on a Kraus set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CptpReport {
    pub trace_preserving: bool,
    pub unital: bool,
    /// `|Σ_ij |α_ij|² − 1|`
    pub cond1_residual: f64,
    /// `max_l |Σ_i [Σ_jk α_ij α*_ik ε_jkl + α_i0 α*_il + α_il α*_i0]|`; vanishes
    /// exactly when both `Σ A†A` and `Σ AA†` have no traceless part.
    pub cond2_residual: f64,
    /// `max |Σ A†A − I|`
    pub tp_residual: f64,
    /// `max |Σ AA† − I|`
    pub unital_residual: f64,
}

fn levi_civita(j: usize, k: usize, l: usize) -> f64 {
    match (j, k, l) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1.0,
        (3, 2, 1) | (1, 3, 2) | (2, 1, 3) => -1.0,
        _ => 0.0,
    }
}

pub fn verify_cptp(k: &KrausSet, tol: f64) -> CptpReport {
    let alphas: Vec<[C64; 4]> = k.ops.iter().map(pauli_decompose).collect();
    let cond1: f64 = alphas.iter().flat_map(|a| a.iter()).map(|z| z.norm_sqr()).sum();
    let cond1_residual = (cond1 - 1.0).abs();
    let mut cond2_residual = 0.0_f64;
    for l in 1..4 {
        let mut acc = ZERO;
        for a in &alphas {
            for j in 1..4 {
                for kk in 1..4 {
                    let eps = levi_civita(j, kk, l);
                    if eps != 0.0 {
                        acc += a[j] * a[kk].conj() * eps;
                    }
                }
            }
            acc += a[0] * a[l].conj() + a[l] * a[0].conj();
        }
        cond2_residual = cond2_residual.max(acc.norm());
    }
    let sum_dag_a = k.ops.iter().fold(Mat2::zero(), |acc, a| acc + a.dagger() * *a);
    let sum_a_dag = k.ops.iter().fold(Mat2::zero(), |acc, a| acc + *a * a.dagger());
    let tp_residual = sum_dag_a.distance(&Mat2::identity());
    let unital_residual = sum_a_dag.distance(&Mat2::identity());
    CptpReport {
        trace_preserving: tp_residual <= tol && cond1_residual <= tol,
        unital: unital_residual <= tol && cond1_residual <= tol,
        cond1_residual,
        cond2_residual,
        tp_residual,
        unital_residual,
    }
}

/// Reject sets that are not trace preserving, naming the violated condition.
pub fn require_cptp(k: &KrausSet, tol: f64) -> Result<CptpReport> {
    let report = verify_cptp(k, tol);
    if report.cond1_residual > tol {
        return Err(Error::NotCptp {
            condition: "trace preservation (Cond1)",
            residual: report.cond1_residual,
        });
    }
    if report.tp_residual > tol {
        return Err(Error::NotCptp {
            condition: "trace preservation (Cond2)",
            residual: report.tp_residual,
        });
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StochasticUnitaryReport {
    pub ok: bool,
    pub weights: Vec<f64>,
    /// Largest `max |A†A − c I|` over the set.
    pub residual: f64,
}

pub fn verify_stochastic_unitary(k: &KrausSet, tol: f64) -> StochasticUnitaryReport {
    let mut residual = 0.0_f64;
    for (a, &c) in k.ops.iter().zip(&k.weights) {
        let h = a.dagger() * *a;
        residual = residual.max(h.distance(&Mat2::identity().scale_re(c)));
    }
    let sum: f64 = k.weights.iter().sum();
    let positive = k.weights.iter().all(|&c| c > tol);
    StochasticUnitaryReport {
        ok: residual <= tol && (sum - 1.0).abs() <= tol && positive,
        weights: k.weights.clone(),
        residual,
    }
}

pub fn require_stochastic_unitary(k: &KrausSet, tol: f64) -> Result<()> {
    for (index, (a, &c)) in k.ops.iter().zip(&k.weights).enumerate() {
        let residual = (a.dagger() * *a).distance(&Mat2::identity().scale_re(c));
        if residual > tol || c <= tol {
            return Err(Error::NotStochasticUnitary { index, residual });
        }
    }
    let sum: f64 = k.weights.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::NotCptp { condition: "trace preservation (Cond1)", residual: (sum - 1.0).abs() });
    }
    Ok(())
}

/// Real 4×4 representation of a channel in the `{σ_i/√2}` basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PauliTransfer {
    pub m: [[f64; 4]; 4],
}

impl PauliTransfer {
    /// The lower-right 3×3 block `𝒜̃`.
    pub fn block(&self) -> M3 {
        let mut b = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                b[i][j] = self.m[i + 1][j + 1];
            }
        }
        b
    }

    pub fn apply(&self, v: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| self.m[i][j] * v[j]).sum();
        }
        out
    }

    pub fn apply_pow(&self, v: &[f64; 4], l: usize) -> [f64; 4] {
        (0..l).fold(*v, |acc, _| self.apply(&acc))
    }

    /// Largest deviation of the first row and column from `(1, 0, 0, 0)`.
    pub fn unital_tp_residual(&self) -> f64 {
        let mut r = (self.m[0][0] - 1.0).abs();
        for k in 1..4 {
            r = r.max(self.m[0][k].abs()).max(self.m[k][0].abs());
        }
        r
    }
}

/// Pauli coefficients `Tr(σ_i ρ)` of a Hermitian matrix (not divided by √2; the
/// transfer matrix acts identically on either scaling).
pub fn pauli_vector(rho: &Mat2) -> [f64; 4] {
    let c = pauli_decompose(rho);
    [2.0 * c[0].re, 2.0 * c[1].re, 2.0 * c[2].re, 2.0 * c[3].re]
}

pub fn from_pauli_vector(v: &[f64; 4]) -> Mat2 {
    let c = [
        C64::new(v[0] / 2.0, 0.0),
        C64::new(v[1] / 2.0, 0.0),
        C64::new(v[2] / 2.0, 0.0),
        C64::new(v[3] / 2.0, 0.0),
    ];
    pauli_recompose(&c)
}

/// Validated transfer matrix.
pub fn transfer_matrix(k: &KrausSet, tol: f64) -> Result<PauliTransfer> {
    require_cptp(k, tol)?;
    Ok(k.transfer_unchecked())
}

/// `‖𝒜̃‖_∞`, the largest singular value of the 3×3 block.
pub fn block_norm(t: &PauliTransfer) -> f64 {
    real3::op_norm(&t.block())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn decompose_basis_elements() {
        let a = pauli_decompose(&Mat2::z());
        assert_eq!(a, [ZERO, ZERO, ZERO, ONE]);
        let h = pauli_decompose(&Mat2::hadamard());
        assert!((h[0]).norm() < 1e-16);
        assert!((h[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-16);
        assert!((h[2]).norm() < 1e-16);
        assert!((h[3] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn non_finite_entries_rejected() {
        assert!(complex(f64::NAN, 0.0).is_err());
        assert!(Mat2::new(ONE, ZERO, ZERO, c(f64::INFINITY, 0.0)).is_err());
        assert!(KrausSet::new(vec![Mat2::real(f64::NAN, 0.0, 0.0, 1.0)]).is_err());
        assert!(KrausSet::new(vec![]).is_err());
    }

    #[test]
    fn single_scaled_identity_is_not_trace_preserving() {
        let k = KrausSet::new(vec![Mat2::identity().scale_re(FRAC_1_SQRT_2)]).unwrap();
        let r = verify_cptp(&k, STRUCTURAL_TOL);
        assert!(!r.trace_preserving);
        assert!((r.cond1_residual - 0.5).abs() < 1e-15);
        assert!(matches!(
            transfer_matrix(&k, STRUCTURAL_TOL),
            Err(Error::NotCptp { condition: "trace preservation (Cond1)", .. })
        ));
    }

    #[test]
    fn amplitude_damping_is_tp_but_not_unital() {
        let g: f64 = 0.3;
        let k0 = Mat2::real(1.0, 0.0, 0.0, (1.0 - g).sqrt());
        let k1 = Mat2::real(0.0, g.sqrt(), 0.0, 0.0);
        let k = KrausSet::new(vec![k0, k1]).unwrap();
        let r = verify_cptp(&k, STRUCTURAL_TOL);
        assert!(r.trace_preserving);
        assert!(!r.unital);
        assert!(r.cond2_residual > 0.1);
        let t = transfer_matrix(&k, STRUCTURAL_TOL).unwrap();
        assert!((t.m[3][0] - g).abs() < 1e-14);
    }

    #[test]
    fn off_diagonal_tp_violation_names_cond2() {
        // Σ A†A = I + εZ keeps the trace but breaks trace preservation
        let e: f64 = 0.1;
        let k0 = Mat2::real(((1.0 + e) / 2.0).sqrt(), 0.0, 0.0, ((1.0 - e) / 2.0).sqrt());
        let k = KrausSet::new(vec![k0, k0]).unwrap();
        let err = transfer_matrix(&k, STRUCTURAL_TOL).unwrap_err();
        assert!(matches!(err, Error::NotCptp { condition: "trace preservation (Cond2)", .. }));
    }

    #[test]
    fn rank_one_projectors_are_not_stochastic_unitary() {
        let p0 = Mat2::real(1.0, 0.0, 0.0, 0.0);
        let p1 = Mat2::real(0.0, 0.0, 0.0, 1.0);
        let k = KrausSet::new(vec![p0, p1]).unwrap();
        assert!(verify_cptp(&k, STRUCTURAL_TOL).trace_preserving);
        let r = verify_stochastic_unitary(&k, STRUCTURAL_TOL);
        assert!(!r.ok);
        assert_eq!(r.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn declared_weights_must_match_traces() {
        let h = Mat2::hadamard().scale_re(FRAC_1_SQRT_2);
        let hz = (Mat2::hadamard() * Mat2::z()).scale_re(FRAC_1_SQRT_2);
        assert!(KrausSet::with_weights(vec![h, hz], &[0.5, 0.5], STRUCTURAL_TOL).is_ok());
        let err = KrausSet::with_weights(vec![h, hz], &[0.6, 0.4], STRUCTURAL_TOL).unwrap_err();
        assert!(matches!(err, Error::WeightMismatch { index: 0, .. }));
    }

    #[test]
    fn hermitian_eigen_of_pauli_x() {
        let (vals, vecs) = Mat2::x().hermitian_eigen();
        assert!((vals[0] + 1.0).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);
        let plus = vecs[1];
        assert!((plus[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((plus[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        let minus = vecs[0];
        assert!((minus[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((minus[1] + c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bloch_round_trip() {
        let n = [0.36, -0.48, 0.8];
        let k = ket_from_bloch(&n);
        let rho = Mat2::outer(&k, &k);
        let b = rho.bloch();
        for i in 0..3 {
            assert!((b[i] - n[i]).abs() < 1e-15, "{b:?}");
        }
        assert!(rho.distance(&Mat2::from_bloch(&n)) < 1e-15);
    }

    #[test]
    fn z_rotation_and_y_exponential() {
        assert!(Mat2::z_rotation(std::f64::consts::PI).distance(&Mat2::z().scale(-I)) < 1e-15);
        let xz = Mat2::x() * Mat2::z();
        assert!(Mat2::exp_iy(-std::f64::consts::FRAC_PI_2).distance(&xz) < 1e-15);
    }
}
