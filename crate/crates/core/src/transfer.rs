//! Convergence analysis of stochastic-unitary transfer channels: finite-depth
//! depolarization, the asymptotically-normalizable versus non-decaying
//! dichotomy, and correlation lengths.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pauli::{
    self, inner, ket_from_bloch, orthogonal, require_cptp, require_stochastic_unitary, KrausSet, Ket, Mat2,
    PauliTransfer, ONE, ZERO,
};
use crate::real3::{self, M3};

/// Tolerances and horizons used by [`classify`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassifyOptions {
    /// Threshold for `‖𝒜̃‖ = 1` and `max|r±| = 1`.
    pub tol: f64,
    /// Distance from 1 within which a norm or eigenvalue is flagged marginal.
    pub marginal_band: f64,
    /// Power of `𝒜̃` whose norm is reported in the evidence.
    pub horizon: usize,
    /// A decaying channel with `‖𝒜̃^horizon‖` above this value is reported
    /// as slowly converging. The verdict and marginal flag are unaffected.
    pub convergence_tol: f64,
    /// Accepted residual when factoring each operator in the fixed-axis basis.
    pub factor_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { tol: 1e-9, marginal_band: 1e-6, horizon: 100, convergence_tol: 1e-6, factor_tol: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// `𝒜^l = ℰ` for the given `l`.
    FiniteDepolarizing(usize),
    AsymptoticallyNormalizable,
    NonDecaying,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::FiniteDepolarizing(l) => write!(f, "finite-depolarizing (l = {l})"),
            Verdict::AsymptoticallyNormalizable => write!(f, "asymptotically-normalizable"),
            Verdict::NonDecaying => write!(f, "non-decaying"),
        }
    }
}

/// Numerical intermediates of the classification.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    pub block_norm: f64,
    pub spectral_radius: f64,
    /// Top right singular vector `v` of `𝒜̃` and its image `v′ = 𝒜̃v`.
    pub v: Option<[f64; 3]>,
    pub v_image: Option<[f64; 3]>,
    pub betas: Vec<f64>,
    /// Operators with equal `β` merged: `(β, Σ c_i)`.
    pub groups: Vec<(f64, f64)>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub lambda_bar: Option<f64>,
    pub u3_raw: Option<f64>,
    pub r_plus: Option<f64>,
    pub r_minus: Option<f64>,
    pub factor_residual: Option<f64>,
    pub reconstruction_residual: Option<f64>,
    /// `l` values tested by the finite-depth detector.
    pub iterates_checked: usize,
    /// `‖𝒜̃^horizon‖`
    pub horizon_norm: f64,
    /// Decaying, but `horizon_norm` still exceeds the convergence tolerance.
    pub slow_convergence: bool,
}

impl Evidence {
    fn new(block_norm: f64, spectral_radius: f64) -> Self {
        Evidence {
            block_norm,
            spectral_radius,
            v: None,
            v_image: None,
            betas: vec![],
            groups: vec![],
            p: None,
            q: None,
            lambda_bar: None,
            u3_raw: None,
            r_plus: None,
            r_minus: None,
            factor_residual: None,
            reconstruction_residual: None,
            iterates_checked: 0,
            horizon_norm: 0.0,
            slow_convergence: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub verdict: Verdict,
    /// Verdict of the dichotomy alone, kept when a finite depth is found.
    pub theorem_verdict: Option<Verdict>,
    /// Spectral radius of `𝒜̃`; absent for non-decaying channels.
    pub decay_rate: Option<f64>,
    pub u3: Option<i8>,
    /// `φ_i` in `(−π, π]` with `A[i]/√c_i = e^{iχ_i} R X^{(1−u3)/2} Z(φ_i) R†`.
    pub phases: Vec<f64>,
    /// `R`, whose columns are the fixed axis and its orthogonal state.
    pub basis_rotation: Option<Mat2>,
    pub marginal: bool,
    pub evidence: Evidence,
}

fn normalize_angle(x: f64) -> f64 {
    let mut a = x.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// `r± = ½[u3²(1−λ̄)² + 2λ̄ ± (1−λ̄)√((1−λ̄)²u3⁴ + 4λ̄u3²)]`
pub fn r_pm(u3_sq: f64, lambda_bar: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&u3_sq) || !(0.0..1.0).contains(&lambda_bar) {
        return Err(Error::Domain(format!(
            "r_pm requires u3² in [0, 1] and λ̄ in [0, 1), got ({u3_sq}, {lambda_bar})"
        )));
    }
    let om = 1.0 - lambda_bar;
    let base = u3_sq * om * om + 2.0 * lambda_bar;
    let root = om * (om * om * u3_sq * u3_sq + 4.0 * lambda_bar * u3_sq).sqrt();
    Ok((0.5 * (base + root), 0.5 * (base - root)))
}

fn transfer_pow(t: &PauliTransfer, l: usize) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut e = [0.0; 4];
        e[j] = 1.0;
        let col = t.apply_pow(&e, l);
        for i in 0..4 {
            out[i][j] = col[i];
        }
    }
    out
}

/// Smallest `l ≤ min(l_max, 3)` with `𝒜^l = ℰ`. A nilpotent 3×3 block
/// vanishes by its third power, so larger `l` never succeed first.
pub fn detect_finite_depolarizing(k: &KrausSet, l_max: usize, tol: f64) -> Result<Option<usize>> {
    require_cptp(k, tol)?;
    let t = k.transfer_unchecked();
    for l in 1..=l_max.min(3) {
        let m = transfer_pow(&t, l);
        let mut dev = (m[0][0] - 1.0).abs();
        for i in 0..4 {
            for j in 0..4 {
                if (i, j) != (0, 0) {
                    dev = dev.max(m[i][j].abs());
                }
            }
        }
        if dev <= tol {
            return Ok(Some(l));
        }
    }
    Ok(None)
}

/// Eigenvectors of a normal 2×2 matrix as the columns of a unitary.
fn normal_eigenbasis(w: &Mat2) -> Mat2 {
    let [[a, b], [c, d]] = w.0;
    let tr = a + d;
    let disc = (tr * tr - (a * d - b * c) * 4.0).sqrt();
    let lambda = (tr + disc) * 0.5;
    let scale = w.max_abs().max(1.0);
    let first: Ket = if b.norm() > 1e-12 * scale {
        [b, lambda - a]
    } else if c.norm() > 1e-12 * scale {
        [lambda - d, c]
    } else {
        [ONE, ZERO]
    };
    let n = pauli::ket_norm(&first);
    let first = pauli::canonical_phase([first[0] / n, first[1] / n]);
    let second = orthogonal(&first);
    Mat2([[first[0], second[0]], [first[1], second[1]]])
}

/// Rotated operators `R†WR` in the canonical form; returns `(φ_i, residual)`.
fn canonical_phases(ws: &[Mat2], r: &Mat2, u3: i8) -> (Vec<f64>, f64) {
    let mut phases = Vec::with_capacity(ws.len());
    let mut residual = 0.0_f64;
    for w in ws {
        let m = r.dagger() * *w * *r;
        let e = &m.0;
        let (phi, model, anchor) = if u3 > 0 {
            let phi = normalize_angle((e[1][1] / e[0][0]).arg());
            (phi, Mat2::z_rotation(phi), (0, 0))
        } else {
            let phi = normalize_angle((e[0][1] / e[1][0]).arg());
            (phi, Mat2::x() * Mat2::z_rotation(phi), (1, 0))
        };
        let chi = (e[anchor.0][anchor.1] / model.0[anchor.0][anchor.1]).arg();
        residual = residual.max(m.distance(&model.scale(C64::from_polar(1.0, chi))));
        phases.push(phi);
    }
    (phases, residual)
}

/// Apply the dichotomy for stochastic-unitary channels.
pub fn classify(k: &KrausSet, opts: &ClassifyOptions) -> Result<ClassificationResult> {
    require_stochastic_unitary(k, opts.tol)?;
    let t = k.transfer_unchecked();
    let block = t.block();
    let (svals, svecs) = real3::singular_values(&block);
    let s = svals[0];
    let rho = real3::spectral_radius(&block);
    let mut ev = Evidence::new(s, rho);
    let near = |x: f64| {
        let gap = (1.0 - x).abs();
        gap > opts.tol && gap <= opts.marginal_band
    };
    ev.horizon_norm = real3::op_norm(&real3::pow(&block, opts.horizon));
    let decaying = |mut ev: Evidence, marginal: bool| {
        ev.slow_convergence = ev.horizon_norm > opts.convergence_tol;
        ClassificationResult {
            verdict: Verdict::AsymptoticallyNormalizable,
            theorem_verdict: None,
            decay_rate: Some(rho),
            u3: None,
            phases: vec![],
            basis_rotation: None,
            marginal,
            evidence: ev,
        }
    };
    if s < 1.0 - opts.tol {
        return Ok(decaying(ev, near(s)));
    }

    let ws: Vec<Mat2> = k.ops().iter().zip(k.weights()).map(|(a, c)| a.scale_re(1.0 / c.sqrt())).collect();
    let v = [svecs[0][0], svecs[1][0], svecs[2][0]];
    let v_image = real3::apply(&block, &v);
    ev.v = Some(v);
    ev.v_image = Some(v_image);
    let kv = ket_from_bloch(&v);
    let kv_perp = orthogonal(&kv);
    let ref_v = ws[0].apply(&kv);
    let ref_perp = ws[0].apply(&kv_perp);
    let mut factor_residual = 0.0_f64;
    let mut betas = Vec::with_capacity(ws.len());
    for w in &ws {
        let image = w.apply(&kv);
        let a = inner(&ref_v, &image);
        let off = [image[0] - ref_v[0] * a, image[1] - ref_v[1] * a];
        factor_residual = factor_residual.max(pauli::ket_norm(&off));
        let b = inner(&ref_perp, &w.apply(&kv_perp));
        betas.push(normalize_angle(b.arg() - a.arg()));
    }
    ev.factor_residual = Some(factor_residual);
    if factor_residual > opts.factor_tol {
        return Err(Error::Factorization { residual: factor_residual });
    }
    let mut groups: Vec<(f64, f64)> = vec![];
    for (&beta, &c) in betas.iter().zip(k.weights()) {
        match groups.iter_mut().find(|g| normalize_angle(g.0 - beta).abs() <= opts.tol) {
            Some(g) => g.1 += c,
            None => groups.push((beta, c)),
        }
    }
    let p: f64 = groups.iter().map(|g| g.1 * g.0.cos()).sum();
    let q: f64 = groups.iter().map(|g| g.1 * g.0.sin()).sum();
    let u3_raw = real3::dot(&v, &v_image);
    ev.betas = betas;
    ev.p = Some(p);
    ev.q = Some(q);
    ev.u3_raw = Some(u3_raw);

    let nondecaying = |ev: Evidence, r: Mat2, u3: i8, marginal: bool| {
        let (phases, residual) = canonical_phases(&ws, &r, u3);
        let mut ev = ev;
        ev.reconstruction_residual = Some(residual);
        ClassificationResult {
            verdict: Verdict::NonDecaying,
            theorem_verdict: None,
            decay_rate: None,
            u3: Some(u3),
            phases,
            basis_rotation: Some(r),
            marginal,
            evidence: ev,
        }
    };

    if groups.len() == 1 {
        ev.groups = groups;
        ev.lambda_bar = Some(1.0);
        ev.r_plus = Some(1.0);
        ev.r_minus = Some(1.0);
        let r = normal_eigenbasis(&ws[0]);
        return Ok(nondecaying(ev, r, 1, near(s)));
    }
    ev.groups = groups;
    let lambda_bar = (p * p + q * q).clamp(0.0, 1.0 - f64::EPSILON);
    let (rp, rm) = r_pm((u3_raw * u3_raw).clamp(0.0, 1.0), lambda_bar)?;
    ev.lambda_bar = Some(lambda_bar);
    ev.r_plus = Some(rp);
    ev.r_minus = Some(rm);
    let top = rp.abs().max(rm.abs());
    let marginal = near(s) || near(top);
    if top >= 1.0 - opts.tol {
        let u3: i8 = if u3_raw >= 0.0 { 1 } else { -1 };
        let r = Mat2([[kv[0], kv_perp[0]], [kv[1], kv_perp[1]]]);
        return Ok(nondecaying(ev, r, u3, marginal));
    }
    Ok(decaying(ev, marginal))
}

/// Run the finite-depth detector first and fall back to the dichotomy.
pub fn analyze(k: &KrausSet, l_max: usize, opts: &ClassifyOptions) -> Result<ClassificationResult> {
    let finite = detect_finite_depolarizing(k, l_max, opts.tol)?;
    let Some(l) = finite else {
        let mut r = classify(k, opts)?;
        r.evidence.iterates_checked = l_max.min(3);
        return Ok(r);
    };
    let mut r = match classify(k, opts) {
        Ok(r) => r,
        Err(Error::NotStochasticUnitary { .. }) => {
            let block = k.transfer_unchecked().block();
            let ev = Evidence::new(real3::op_norm(&block), real3::spectral_radius(&block));
            ClassificationResult {
                verdict: Verdict::AsymptoticallyNormalizable,
                theorem_verdict: None,
                decay_rate: None,
                u3: None,
                phases: vec![],
                basis_rotation: None,
                marginal: false,
                evidence: ev,
            }
        }
        Err(e) => return Err(e),
    };
    r.theorem_verdict = if r.evidence.v.is_some() || r.decay_rate.is_some() { Some(r.verdict) } else { None };
    r.verdict = Verdict::FiniteDepolarizing(l);
    r.decay_rate = Some(0.0);
    r.marginal = false;
    r.evidence.iterates_checked = l;
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationLength {
    /// Spectral radius of `𝒜̃`.
    pub lambda: f64,
    /// `−1/ln λ`; zero for a nilpotent block, infinite when `λ = 1`.
    #[serde(serialize_with = "crate::io::serialize_real")]
    pub xi: f64,
}

pub fn correlation_length(k: &KrausSet, tol: f64) -> Result<CorrelationLength> {
    require_cptp(k, tol)?;
    let block = k.transfer_unchecked().block();
    if real3::max_abs(&real3::pow(&block, 3)) <= tol {
        return Ok(CorrelationLength { lambda: 0.0, xi: 0.0 });
    }
    let lambda = real3::spectral_radius(&block);
    let xi = if lambda >= 1.0 - tol { f64::INFINITY } else { -1.0 / lambda.ln() };
    Ok(CorrelationLength { lambda, xi })
}

/// `‖𝒜̃^l‖_∞`
pub fn block_power_norm(block: &M3, l: usize) -> f64 {
    real3::op_norm(&real3::pow(block, l))
}

/// Operator-norm distance between `a` and `b` minimized over a global phase.
pub fn phase_distance(a: &Mat2, b: &Mat2) -> f64 {
    let overlap = (b.dagger() * *a).trace();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    (*a - b.scale(phase)).op_norm()
}
