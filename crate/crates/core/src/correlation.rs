//! Expectation values and connected two-point correlators through transfer
//! superoperators, with an exponential upper bound and a decay-rate fit.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mps::{expectation_on_pauli_vector, MpsChain};
use crate::pauli::{self, pauli_vector, Mat2};
use crate::real3;

/// Points with `|c| ≤ FIT_FLOOR` are excluded from the log-linear fit.
pub const FIT_FLOOR: f64 = 1e-13;

/// Roundoff allowance when comparing a computed correlator with its bound.
pub const BOUND_SLACK: f64 = 1e-10;

/// `|c| ≤ bound + BOUND_SLACK`; false when the bound is unavailable.
pub fn within_bound(connected: f64, bound: f64) -> bool {
    bound.is_finite() && connected.abs() <= bound + BOUND_SLACK
}

/// A Hermitian `d×d` observable on one physical site.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteObservable {
    matrix: DMatrix<C64>,
    site: usize,
}

impl SiteObservable {
    pub fn new(matrix: DMatrix<C64>, site: usize, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("observable"));
        }
        let residual = (&matrix - matrix.adjoint()).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if residual > tol {
            return Err(Error::NotHermitian { residual });
        }
        Ok(SiteObservable { matrix, site })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn at(&self, site: usize) -> Self {
        SiteObservable { matrix: self.matrix.clone(), site }
    }

    /// Largest eigenvalue magnitude.
    pub fn norm(&self) -> f64 {
        observable_norm(&self.matrix)
    }
}

pub fn observable_norm(m: &DMatrix<C64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// `𝒪ρ = Σ_{ij} ⟨i|O|j⟩ A[j] ρ A[i]†`
pub fn superoperator(chain: &MpsChain, o: &DMatrix<C64>, rho: &Mat2) -> Mat2 {
    let ops = chain.kraus().ops();
    let mut out = Mat2::zero();
    for (i, ai) in ops.iter().enumerate() {
        for (j, aj) in ops.iter().enumerate() {
            let w = o[(i, j)];
            if w.norm() != 0.0 {
                out = out + (*aj * *rho * ai.dagger()).scale(w);
            }
        }
    }
    out
}

fn check_site(chain: &MpsChain, o: &SiteObservable) -> Result<()> {
    if o.site < chain.cursor() || o.site > chain.n() {
        return Err(Error::SiteOutOfRange { site: o.site, lo: chain.cursor(), hi: chain.n() });
    }
    if o.matrix.nrows() != chain.d() {
        return Err(Error::DimensionMismatch { expected: chain.d(), found: o.matrix.nrows() });
    }
    Ok(())
}

fn propagate(chain: &MpsChain, rho: &Mat2, m: usize) -> Mat2 {
    pauli::from_pauli_vector(&chain.transfer().apply_pow(&pauli_vector(rho), m))
}

/// Unnormalized contraction of single-site observables at increasing sites
/// against the remaining chain.
fn contract(chain: &MpsChain, obs: &[&SiteObservable]) -> f64 {
    let mut rho = *chain.cs_state();
    let mut pos = chain.cursor();
    for o in obs {
        rho = propagate(chain, &rho, o.site - pos);
        rho = superoperator(chain, &o.matrix, &rho);
        pos = o.site + 1;
    }
    let v = chain.transfer().apply_pow(&pauli_vector(&rho), chain.n() + 1 - pos);
    expectation_on_pauli_vector(chain.right(), &v)
}

fn norm_factor(chain: &MpsChain) -> f64 {
    chain.f(chain.cs_state(), chain.remaining())
}

/// `⟨O⟩` in the state of the unmeasured sites.
pub fn expectation(chain: &MpsChain, o: &SiteObservable) -> Result<f64> {
    check_site(chain, o)?;
    Ok(contract(chain, &[o]) / norm_factor(chain))
}

/// `⟨O_a O_b⟩ − ⟨O_a⟩⟨O_b⟩` for `a < b`.
pub fn two_point(chain: &MpsChain, oa: &SiteObservable, ob: &SiteObservable) -> Result<f64> {
    check_site(chain, oa)?;
    check_site(chain, ob)?;
    if oa.site >= ob.site {
        return Err(Error::SiteOrder(format!("site {} must precede site {}", oa.site, ob.site)));
    }
    let f = norm_factor(chain);
    let ab = contract(chain, &[oa, ob]) / f;
    let a = contract(chain, &[oa]) / f;
    let b = contract(chain, &[ob]) / f;
    Ok(ab - a * b)
}

/// Terms of the exponential upper bound on a connected correlator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundTerms {
    pub r: usize,
    /// `f` of the unmeasured part of the chain.
    pub f: f64,
    /// Bound on `|α(O)|`.
    pub alpha_max: f64,
    /// `½‖𝒜̃^n‖`, the deviation of `f_n` from `½`.
    pub f_deviation: f64,
    pub c2_max: f64,
    pub c3_max: f64,
    pub c4_max: f64,
    pub c5_max: f64,
    /// Product `‖O_a‖‖O_b‖` the bound is scaled by.
    pub scale: f64,
    pub bound: f64,
}

fn unital(chain: &MpsChain, tol: f64) -> bool {
    let m = &chain.transfer().m;
    (1..4).all(|k| m[k][0].abs() <= tol)
}

fn bound_terms(chain: &MpsChain, a: usize, b: usize, scale: f64) -> BoundTerms {
    let d = chain.d() as f64;
    let block = chain.transfer().block();
    let pnorm = |l: usize| real3::op_norm(&real3::pow(&block, l));
    let n_eff = chain.remaining();
    let k_eff = a + 1 - chain.cursor();
    let r = b - a;
    let f = norm_factor(chain);
    let alpha_max = d * d;
    let c4_max = d * d;
    let c2_max = 1.5 * d.powi(4) * pnorm(r - 1);
    let c5_max = c2_max;
    let c3_max = 1.5 * d * d * pnorm(n_eff - k_eff);
    let f_deviation = 0.5 * pnorm(n_eff);
    let f2 = f * f;
    let bound = alpha_max * c4_max * f_deviation / (2.0 * f2)
        + c2_max / f
        + alpha_max * c5_max / (2.0 * f2)
        + c3_max * c4_max / (2.0 * f2)
        + c3_max * c5_max / f2;
    BoundTerms { r, f, alpha_max, f_deviation, c2_max, c3_max, c4_max, c5_max, scale, bound: scale * bound }
}

/// Upper bound on `|two_point(chain, oa, ob)|` for unital channels and
/// observables of norm at most 1.
pub fn decay_bound(chain: &MpsChain, oa: &SiteObservable, ob: &SiteObservable) -> Result<BoundTerms> {
    check_site(chain, oa)?;
    check_site(chain, ob)?;
    if oa.site >= ob.site {
        return Err(Error::SiteOrder(format!("site {} must precede site {}", oa.site, ob.site)));
    }
    for o in [oa, ob] {
        let norm = o.norm();
        if norm > 1.0 + pauli::STRUCTURAL_TOL {
            return Err(Error::ObservableNorm { norm });
        }
    }
    if !unital(chain, pauli::STRUCTURAL_TOL) {
        return Err(Error::NotUnital);
    }
    Ok(bound_terms(chain, oa.site, ob.site, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationSeries {
    pub k: usize,
    pub separations: Vec<usize>,
    pub connected: Vec<f64>,
    /// Bound scaled by `‖O_a‖‖O_b‖`; NaN when the channel is not unital.
    #[serde(serialize_with = "crate::io::serialize_reals")]
    pub bound: Vec<f64>,
    pub bound_terms: Vec<BoundTerms>,
    /// `−slope` of `ln|c|` against `r`, when at least three points exceed the floor.
    pub fitted_rate: Option<f64>,
}

/// Least-squares slope of `ln|y|` against `x` over points with `|y| > FIT_FLOOR`, negated.
pub fn fit_decay_rate(xs: &[usize], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(_, y)| y.abs() > FIT_FLOOR).map(|(&x, y)| (x as f64, y.abs().ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

/// Connected correlators of `O_a` at site `k` and `O_b` at `k + r` for `r = 1..=r_max`.
pub fn correlation_series(
    chain: &MpsChain,
    oa: &DMatrix<C64>,
    ob: &DMatrix<C64>,
    k: usize,
    r_max: usize,
) -> Result<CorrelationSeries> {
    if r_max == 0 || k < chain.cursor() || k + r_max > chain.n() {
        return Err(Error::SiteOutOfRange { site: k + r_max, lo: chain.cursor(), hi: chain.n() });
    }
    let a = SiteObservable::new(oa.clone(), k, pauli::STRUCTURAL_TOL)?;
    let b0 = SiteObservable::new(ob.clone(), k + 1, pauli::STRUCTURAL_TOL)?;
    let scale = a.norm() * b0.norm();
    let has_bound = unital(chain, pauli::STRUCTURAL_TOL);
    let mut series = CorrelationSeries {
        k,
        separations: vec![],
        connected: vec![],
        bound: vec![],
        bound_terms: vec![],
        fitted_rate: None,
    };
    for r in 1..=r_max {
        let b = b0.at(k + r);
        series.separations.push(r);
        series.connected.push(two_point(chain, &a, &b)?);
        if has_bound {
            let terms = bound_terms(chain, k, k + r, scale);
            series.bound.push(terms.bound);
            series.bound_terms.push(terms);
        } else {
            series.bound.push(f64::NAN);
        }
    }
    series.fitted_rate = fit_decay_rate(&series.separations, &series.connected);
    Ok(series)
}

/// Named `d×d` observables: `x`, `y`, `z` act on levels 0 and 1; `sz` is
/// `diag(1, …, −1)` with equally spaced entries.
pub fn named_observable(name: &str, d: usize) -> Option<DMatrix<C64>> {
    let mut m = DMatrix::<C64>::zeros(d, d);
    match name {
        "x" => {
            m[(0, 1)] = C64::new(1.0, 0.0);
            m[(1, 0)] = C64::new(1.0, 0.0);
        }
        "y" => {
            m[(0, 1)] = C64::new(0.0, -1.0);
            m[(1, 0)] = C64::new(0.0, 1.0);
        }
        "z" => {
            m[(0, 0)] = C64::new(1.0, 0.0);
            m[(1, 1)] = C64::new(-1.0, 0.0);
        }
        "sz" => {
            for i in 0..d {
                m[(i, i)] = C64::new(1.0 - 2.0 * i as f64 / (d - 1) as f64, 0.0);
            }
        }
        _ => return None,
    }
    Some(m)
}

/// Embed a 2×2 matrix as a `DMatrix`.
pub fn dmatrix_from_mat2(m: &Mat2) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |i, j| m.0[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{BoundaryVector, Preset};
    use crate::pauli::STRUCTURAL_TOL as TOL;

    fn real_diag(v: &[f64]) -> DMatrix<C64> {
        DMatrix::from_fn(v.len(), v.len(), |i, j| if i == j { C64::new(v[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    #[test]
    fn ghz_x_expectation_vanishes() {
        let chain = Preset::Ghz.chain(BoundaryVector::plus(), BoundaryVector::plus(), 4).unwrap();
        let x = SiteObservable::new(dmatrix_from_mat2(&Mat2::x()), 2, TOL).unwrap();
        assert!(expectation(&chain, &x).unwrap().abs() < 1e-15);
    }

    #[test]
    fn identity_expectation_is_one() {
        let chain = Preset::Cluster.chain(BoundaryVector::zero(), BoundaryVector::zero(), 6).unwrap();
        let id = SiteObservable::new(real_diag(&[1.0, 1.0]), 3, TOL).unwrap();
        assert!((expectation(&chain, &id).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ghz_xx_correlation_is_one() {
        let chain = Preset::Ghz.chain(BoundaryVector::plus(), BoundaryVector::plus(), 10).unwrap();
        let x = dmatrix_from_mat2(&Mat2::x());
        let s = correlation_series(&chain, &x, &x, 1, 9).unwrap();
        for c in &s.connected {
            assert!((c - 1.0).abs() < 1e-12);
        }
        assert!(s.fitted_rate.unwrap().abs() < 1e-12);
        for (c, b) in s.connected.iter().zip(&s.bound) {
            assert!(c.abs() <= *b);
        }
    }

    #[test]
    fn cluster_correlations_vanish_beyond_two() {
        let chain = Preset::Cluster.chain(BoundaryVector::zero(), BoundaryVector::plus(), 12).unwrap();
        let o = dmatrix_from_mat2(&(Mat2::x() + Mat2::z()).scale_re(0.5));
        let s = correlation_series(&chain, &o, &o, 2, 6).unwrap();
        for (r, c) in s.separations.iter().zip(&s.connected) {
            if *r > 2 {
                assert!(c.abs() < 1e-12);
            }
        }
        assert_eq!(s.fitted_rate, None);
        // bound vanishes away from the right edge
        assert_eq!(s.bound[2], 0.0);
    }

    #[test]
    fn aklt_rate_is_ln3() {
        let chain = Preset::Aklt.chain(BoundaryVector::zero(), BoundaryVector::zero(), 30).unwrap();
        // |0⟩⟨1| + |1⟩⟨0| carries the Z component of the correlation space
        let o = DMatrix::from_fn(3, 3, |i, j| C64::new(if i + j == 1 { 1.0 } else { 0.0 }, 0.0));
        let s = correlation_series(&chain, &o, &o, 5, 6).unwrap();
        let rate = s.fitted_rate.unwrap();
        assert!((rate - 3f64.ln()).abs() < 0.02 * 3f64.ln(), "{rate}");
        for (c, b) in s.connected.iter().zip(&s.bound) {
            assert!(c.abs() <= *b);
        }
    }

    #[test]
    fn bound_rejects_large_observables() {
        let chain = Preset::Aklt.chain(BoundaryVector::zero(), BoundaryVector::zero(), 8).unwrap();
        let big = SiteObservable::new(real_diag(&[2.0, 0.0, 0.0]), 2, TOL).unwrap();
        let ok = SiteObservable::new(real_diag(&[1.0, 0.0, 0.0]), 4, TOL).unwrap();
        assert!(matches!(decay_bound(&chain, &big, &ok), Err(Error::ObservableNorm { .. })));
        assert!(decay_bound(&chain, &ok.at(2), &ok).is_ok());
    }

    #[test]
    fn ordering_and_hermiticity_checked() {
        let chain = Preset::Ghz.chain(BoundaryVector::plus(), BoundaryVector::plus(), 4).unwrap();
        let x = SiteObservable::new(dmatrix_from_mat2(&Mat2::x()), 3, TOL).unwrap();
        assert!(matches!(two_point(&chain, &x, &x.at(2)), Err(Error::SiteOrder(_))));
        assert!(matches!(expectation(&chain, &x.at(5)), Err(Error::SiteOutOfRange { .. })));
        let nh = DMatrix::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, 0.0));
        assert!(matches!(SiteObservable::new(nh, 1, TOL), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn fit_recovers_exponent() {
        let xs: Vec<usize> = (1..8).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 3.0 * (-0.7 * x as f64).exp()).collect();
        assert!((fit_decay_rate(&xs, &ys).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(fit_decay_rate(&xs[..2], &ys[..2]), None);
    }
}
