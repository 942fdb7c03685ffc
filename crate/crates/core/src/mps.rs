//! Translation-invariant matrix-product states with a two-dimensional
//! correlation space, the resource-state presets and normalization factors.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pauli::{
    self, canonical_phase, ket_norm, require_cptp, KrausSet, Ket, Mat2, PauliTransfer, ONE, ZERO,
};

/// A unit-norm boundary vector `|L⟩` or `|R⟩` of the correlation space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryVector(Ket);

impl BoundaryVector {
    /// Accept a ket whose norm is 1 within `tol`.
    pub fn new(k: Ket, tol: f64) -> Result<Self> {
        if !k.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("boundary vector"));
        }
        let norm = ket_norm(&k);
        if (norm - 1.0).abs() > tol {
            return Err(Error::BoundaryNorm { norm });
        }
        Ok(BoundaryVector(k))
    }

    /// Normalize an arbitrary nonzero ket.
    pub fn normalized(k: Ket) -> Result<Self> {
        let norm = ket_norm(&k);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::BoundaryNorm { norm });
        }
        Ok(BoundaryVector([k[0] / norm, k[1] / norm]))
    }

    pub fn zero() -> Self {
        BoundaryVector([ONE, ZERO])
    }

    pub fn one() -> Self {
        BoundaryVector([ZERO, ONE])
    }

    pub fn plus() -> Self {
        BoundaryVector([C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)])
    }

    pub fn minus() -> Self {
        BoundaryVector([C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)])
    }

    /// `+1` eigenvector of `Y`.
    pub fn plus_i() -> Self {
        BoundaryVector([C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2)])
    }

    /// `-1` eigenvector of `Y`.
    pub fn minus_i() -> Self {
        BoundaryVector([C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, -FRAC_1_SQRT_2)])
    }

    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        BoundaryVector([
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ])
    }

    pub fn ket(&self) -> &Ket {
        &self.0
    }

    pub fn density(&self) -> Mat2 {
        Mat2::outer(&self.0, &self.0)
    }

    /// Bloch components `⟨v|σ_i|v⟩`, `i = 1..=3`.
    pub fn bloch(&self) -> [f64; 3] {
        self.density().bloch()
    }
}

/// `f_m(|R⟩, ψ) = ⟨R| 𝒜^m(ψ) |R⟩`, evaluated through powers of the transfer
/// matrix.
pub fn normalization_factor_with(t: &PauliTransfer, right: &BoundaryVector, psi: &Mat2, m: usize) -> f64 {
    let v = t.apply_pow(&pauli::pauli_vector(psi), m);
    expectation_on_pauli_vector(right, &v)
}

/// `⟨R| ρ |R⟩` for `ρ` given by its Pauli vector.
pub fn expectation_on_pauli_vector(right: &BoundaryVector, v: &[f64; 4]) -> f64 {
    let r = right.bloch();
    0.5 * (v[0] + v[1] * r[0] + v[2] * r[1] + v[3] * r[2])
}

pub fn normalization_factor(k: &KrausSet, right: &BoundaryVector, psi: &Mat2, m: usize) -> f64 {
    normalization_factor_with(&k.transfer_unchecked(), right, psi, m)
}

/// A finite chain of `n` sites sharing one Kraus set, plus the current
/// correlation-space state after measuring sites `1..cursor`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsChain {
    n: usize,
    kraus: KrausSet,
    left: BoundaryVector,
    right: BoundaryVector,
    cs_state: Mat2,
    cursor: usize,
    transfer: PauliTransfer,
    label: Option<String>,
}

impl MpsChain {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.kraus.d()
    }

    pub fn kraus(&self) -> &KrausSet {
        &self.kraus
    }

    pub fn left(&self) -> &BoundaryVector {
        &self.left
    }

    pub fn right(&self) -> &BoundaryVector {
        &self.right
    }

    /// Unit-trace correlation-space state at the cursor.
    pub fn cs_state(&self) -> &Mat2 {
        &self.cs_state
    }

    /// Index (1-based) of the next unmeasured site; `n + 1` when exhausted.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn transfer(&self) -> &PauliTransfer {
        &self.transfer
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// `f_m(|R⟩, ρ)` for this chain's channel and right boundary.
    pub fn f(&self, rho: &Mat2, m: usize) -> f64 {
        normalization_factor_with(&self.transfer, &self.right, rho, m)
    }

    /// Number of unmeasured sites.
    pub fn remaining(&self) -> usize {
        self.n + 1 - self.cursor
    }

    /// Same chain with a different right boundary, keeping the cursor state.
    pub fn with_right(&self, right: BoundaryVector) -> Self {
        MpsChain { right, ..self.clone() }
    }

    /// Replace the correlation-space state and cursor. The state is
    /// renormalized to unit trace.
    pub(crate) fn advanced(&self, cs_state: Mat2, cursor: usize) -> Self {
        let tr = cs_state.trace().re;
        MpsChain { cs_state: cs_state.scale_re(1.0 / tr), cursor, ..self.clone() }
    }

    /// Trace out the site at the cursor without measuring it: `ρ ↦ 𝒜ρ`.
    pub fn skip_site(&self) -> Result<Self> {
        if self.cursor > self.n {
            return Err(Error::CursorExhausted { cursor: self.cursor, n: self.n });
        }
        Ok(self.advanced(self.kraus.apply(&self.cs_state), self.cursor + 1))
    }
}

/// Build a chain of `n` sites. The Kraus set must be trace preserving and the
/// resulting state must have nonzero norm.
pub fn make_chain(k: KrausSet, left: BoundaryVector, right: BoundaryVector, n: usize) -> Result<MpsChain> {
    make_chain_with_tol(k, left, right, n, pauli::STRUCTURAL_TOL)
}

pub fn make_chain_with_tol(
    k: KrausSet,
    left: BoundaryVector,
    right: BoundaryVector,
    n: usize,
    tol: f64,
) -> Result<MpsChain> {
    if n == 0 {
        return Err(Error::ZeroSites);
    }
    require_cptp(&k, tol)?;
    let transfer = k.transfer_unchecked();
    let cs_state = left.density();
    let f_n = normalization_factor_with(&transfer, &right, &cs_state, n);
    if f_n <= 1e-14 {
        return Err(Error::ZeroNorm { f_n });
    }
    Ok(MpsChain { n, kraus: k, left, right, cs_state, cursor: 1, transfer, label: None })
}

/// Parameters of the canonical class `A[0] = √(c_m/2) e^{iθ₀Y}`,
/// `A[1] = √(c_m/2) e^{iθ₀Y} Z`, `A[j] = √c_j e^{iθ_jY} B_j` for `j ≥ 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CanonicalClassParams {
    pub theta0: f64,
    pub c_m: f64,
    /// `(θ_j, B_j, c_j)` for `j = 2..d`; `B_j` is a Pauli index `0..4`.
    pub extra: Vec<(f64, usize, f64)>,
}

impl CanonicalClassParams {
    pub fn d(&self) -> usize {
        2 + self.extra.len()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let weights = std::iter::once(self.c_m).chain(self.extra.iter().map(|e| e.2));
        let mut sum = 0.0;
        for w in weights {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParams(format!("weight {w} must be positive")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidParams(format!("weights sum to {sum}, expected 1")));
        }
        if !self.theta0.is_finite() || self.extra.iter().any(|e| !e.0.is_finite()) {
            return Err(Error::NonFinite("canonical-class angle"));
        }
        if self.extra.iter().any(|e| e.1 > 3) {
            return Err(Error::InvalidParams("B_j must be one of I, X, Y, Z".into()));
        }
        Ok(())
    }
}

/// The named resource states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Preset {
    Cluster,
    /// `A[0] = X/√3, A[1] = XZ/√3, A[2] = Z/√3`
    Aklt,
    /// Same set relabeled as a member of the canonical class:
    /// `A[0] = XZ/√3, A[1] = X/√3, A[2] = Z/√3`.
    AkltCanonical,
    Ghz,
    /// `A[i] = U σ_i V / 2`
    Depolarizing4 { u: Mat2, v: Mat2 },
    CanonicalClass(CanonicalClassParams),
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Cluster => "cluster",
            Preset::Aklt => "aklt",
            Preset::AkltCanonical => "aklt_canonical",
            Preset::Ghz => "ghz",
            Preset::Depolarizing4 { .. } => "depolarizing4",
            Preset::CanonicalClass(_) => "canonical_class",
        }
    }

    pub fn kraus(&self) -> Result<KrausSet> {
        let s2 = FRAC_1_SQRT_2;
        let s3 = 1.0 / 3.0_f64.sqrt();
        let (x, z, h) = (Mat2::x(), Mat2::z(), Mat2::hadamard());
        let ops = match self {
            Preset::Cluster => vec![h.scale_re(s2), (h * z).scale_re(s2)],
            Preset::Aklt => vec![x.scale_re(s3), (x * z).scale_re(s3), z.scale_re(s3)],
            Preset::AkltCanonical => vec![(x * z).scale_re(s3), x.scale_re(s3), z.scale_re(s3)],
            Preset::Ghz => vec![Mat2::identity().scale_re(s2), z.scale_re(s2)],
            Preset::Depolarizing4 { u, v } => {
                if !u.is_unitary(pauli::STRUCTURAL_TOL) || !v.is_unitary(pauli::STRUCTURAL_TOL) {
                    return Err(Error::InvalidParams("depolarizing4 requires unitary U and V".into()));
                }
                (0..4).map(|i| (*u * Mat2::pauli(i) * *v).scale_re(0.5)).collect()
            }
            Preset::CanonicalClass(p) => {
                p.validate(pauli::STRUCTURAL_TOL)?;
                let head = Mat2::exp_iy(p.theta0).scale_re((p.c_m / 2.0).sqrt());
                let mut ops = vec![head, head * z];
                for &(theta, b, c) in &p.extra {
                    ops.push((Mat2::exp_iy(theta) * Mat2::pauli(b)).scale_re(c.sqrt()));
                }
                ops
            }
        };
        KrausSet::new(ops)
    }

    /// Boundary vectors used when none are given: `(left, right)`.
    pub fn default_boundaries(&self) -> (BoundaryVector, BoundaryVector) {
        match self {
            Preset::Ghz => (BoundaryVector::plus(), BoundaryVector::zero()),
            Preset::CanonicalClass(_) => (BoundaryVector::zero(), BoundaryVector::plus_i()),
            _ => (BoundaryVector::zero(), BoundaryVector::zero()),
        }
    }

    /// Smallest `l` with `𝒜^l = ℰ` when known in closed form.
    pub fn finite_depolarizing_length(&self) -> Option<usize> {
        match self {
            Preset::Cluster => Some(2),
            Preset::Depolarizing4 { .. } => Some(1),
            _ => None,
        }
    }

    /// Chain with this preset's default boundaries.
    pub fn default_chain(&self, n: usize) -> Result<MpsChain> {
        let (l, r) = self.default_boundaries();
        self.chain(l, r, n)
    }

    pub fn chain(&self, left: BoundaryVector, right: BoundaryVector, n: usize) -> Result<MpsChain> {
        Ok(make_chain(self.kraus()?, left, right, n)?.with_label(self.name()))
    }
}

/// Look up a preset by name. `depolarizing4` takes `(U, V)` and defaults to
/// identities; `canonical_class` requires parameters.
pub fn preset(name: &str, params: Option<CanonicalClassParams>, uv: Option<(Mat2, Mat2)>) -> Result<Preset> {
    match name {
        "cluster" => Ok(Preset::Cluster),
        "aklt" => Ok(Preset::Aklt),
        "aklt_canonical" => Ok(Preset::AkltCanonical),
        "ghz" => Ok(Preset::Ghz),
        "depolarizing4" => {
            let (u, v) = uv.unwrap_or((Mat2::identity(), Mat2::identity()));
            Ok(Preset::Depolarizing4 { u, v })
        }
        "canonical_class" => match params {
            Some(p) => {
                p.validate(pauli::STRUCTURAL_TOL)?;
                Ok(Preset::CanonicalClass(p))
            }
            None => Err(Error::InvalidParams("canonical_class requires parameters".into())),
        },
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

pub const PRESET_NAMES: [&str; 6] = ["cluster", "aklt", "aklt_canonical", "ghz", "depolarizing4", "canonical_class"];

/// `U = R_z(a) R_y(b) R_z(c)` from ZYZ Euler angles.
pub fn euler_zyz(a: f64, b: f64, c: f64) -> Mat2 {
    Mat2::z_rotation(a) * Mat2::exp_iy(-b / 2.0) * Mat2::z_rotation(c)
}

/// Pure-state density matrix of a (not necessarily normalized) ket.
pub fn pure_state(k: Ket) -> Result<Mat2> {
    let b = BoundaryVector::normalized(k)?;
    Ok(b.density())
}

/// Canonical-phase ket spanning a rank-one density matrix.
pub fn dominant_ket(rho: &Mat2) -> Ket {
    let (_, vecs) = rho.hermitian_eigen();
    canonical_phase(vecs[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat2, b: &Mat2) -> bool {
        a.distance(b) < 1e-15
    }

    #[test]
    fn preset_matrices() {
        let s2 = FRAC_1_SQRT_2;
        let s3 = 1.0 / 3.0_f64.sqrt();
        let (x, z, h) = (Mat2::x(), Mat2::z(), Mat2::hadamard());
        let c = Preset::Cluster.kraus().unwrap();
        assert!(close(&c.ops()[0], &h.scale_re(s2)));
        assert!(close(&c.ops()[1], &(h * z).scale_re(s2)));
        let a = Preset::Aklt.kraus().unwrap();
        assert!(close(&a.ops()[0], &x.scale_re(s3)));
        assert!(close(&a.ops()[1], &(x * z).scale_re(s3)));
        assert!(close(&a.ops()[2], &z.scale_re(s3)));
        let g = Preset::Ghz.kraus().unwrap();
        assert!(close(&g.ops()[0], &Mat2::identity().scale_re(s2)));
        assert!(close(&g.ops()[1], &z.scale_re(s2)));
        let u = euler_zyz(0.3, 1.1, -0.4);
        let v = euler_zyz(-1.0, 0.2, 2.5);
        let d4 = Preset::Depolarizing4 { u, v }.kraus().unwrap();
        for i in 0..4 {
            assert!(close(&d4.ops()[i], &(u * Mat2::pauli(i) * v).scale_re(0.5)));
        }
    }

    #[test]
    fn canonical_class_reproduces_aklt_alias() {
        let p = CanonicalClassParams {
            theta0: -std::f64::consts::FRAC_PI_2,
            c_m: 2.0 / 3.0,
            extra: vec![(0.0, 3, 1.0 / 3.0)],
        };
        let k = Preset::CanonicalClass(p).kraus().unwrap();
        let alias = Preset::AkltCanonical.kraus().unwrap();
        for i in 0..3 {
            assert!(k.ops()[i].distance(&alias.ops()[i]) < 1e-15);
        }
    }

    #[test]
    fn chain_construction_errors() {
        let k = Preset::Cluster.kraus().unwrap();
        assert!(matches!(
            make_chain(k.clone(), BoundaryVector::zero(), BoundaryVector::zero(), 0),
            Err(Error::ZeroSites)
        ));
        let bad = KrausSet::new(k.ops().iter().map(|a| a.scale_re(0.9)).collect()).unwrap();
        let err = make_chain(bad, BoundaryVector::zero(), BoundaryVector::zero(), 10).unwrap_err();
        assert!(err.to_string().contains("Cond1"));
        // GHZ with orthogonal boundaries has zero norm
        let g = Preset::Ghz.kraus().unwrap();
        assert!(matches!(
            make_chain(g, BoundaryVector::zero(), BoundaryVector::one(), 4),
            Err(Error::ZeroNorm { .. })
        ));
        assert!(BoundaryVector::new([ONE, ONE], 1e-9).is_err());
    }

    #[test]
    fn new_chain_starts_at_left_boundary() {
        let chain = Preset::Ghz.chain(BoundaryVector::plus(), BoundaryVector::plus(), 8).unwrap();
        assert_eq!(chain.cursor(), 1);
        assert!(chain.cs_state().distance(&BoundaryVector::plus().density()) < 1e-15);
    }

    #[test]
    fn aklt_normalization_factor_example() {
        let k = Preset::Aklt.kraus().unwrap();
        let f = normalization_factor(&k, &BoundaryVector::zero(), &BoundaryVector::zero().density(), 2);
        assert!((f - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn ghz_normalization_factor_is_one_on_z_axis() {
        let k = Preset::Ghz.kraus().unwrap();
        for m in 0..10 {
            let f = normalization_factor(&k, &BoundaryVector::zero(), &BoundaryVector::zero().density(), m);
            assert!((f - 1.0).abs() < 1e-14, "m={m} f={f:e}");
        }
    }

    #[test]
    fn skip_site_applies_channel() {
        let chain = Preset::Ghz.chain(BoundaryVector::plus(), BoundaryVector::plus(), 3).unwrap();
        let next = chain.skip_site().unwrap();
        assert_eq!(next.cursor(), 2);
        assert!(next.cs_state().distance(&Mat2::identity().scale_re(0.5)) < 1e-15);
        let done = next.skip_site().unwrap().skip_site().unwrap();
        assert!(matches!(done.skip_site(), Err(Error::CursorExhausted { .. })));
    }

    #[test]
    fn unknown_preset_rejected() {
        assert!(matches!(preset("w_state", None, None), Err(Error::UnknownPreset(_))));
        assert!(matches!(preset("canonical_class", None, None), Err(Error::InvalidParams(_))));
    }
}
