//! Brute-force state-vector reference for small chains.
//!
//! Basis strings `|i_n … i_1⟩` are stored at index `Σ_k i_k d^{k−1}`, so site 1
//! is the least significant digit.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mps::MpsChain;
use crate::pauli::{Ket, ZERO};
use std::f64::consts::PI;

use serde::Serialize;

use crate::correlation::{named_observable, two_point, SiteObservable};
use crate::sim::{outcome_probabilities, MeasurementBasis};

/// Largest number of amplitudes the oracle will allocate.
pub const ORACLE_LIMIT: u128 = 10_000_000;

/// Amplitudes over a set of physical sites, not necessarily normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleState {
    d: usize,
    sites: Vec<usize>,
    amps: Vec<C64>,
}

fn check_size(d: usize, n: usize) -> Result<()> {
    let amplitudes = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if amplitudes > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge { amplitudes, limit: ORACLE_LIMIT });
    }
    Ok(())
}

/// Normalized amplitudes `⟨R|A[i_n]…A[i_1]|L⟩ / √f_n` of the chain's full state.
pub fn full_state_vector(chain: &MpsChain) -> Result<Vec<C64>> {
    Ok(oracle_state(chain)?.normalized().amps)
}

/// Unnormalized amplitudes `⟨R|A[i_n]…A[i_1]|L⟩` over sites `1..=n`.
pub fn oracle_state(chain: &MpsChain) -> Result<OracleState> {
    let (d, n) = (chain.d(), chain.n());
    check_size(d, n)?;
    let ops = chain.kraus().ops();
    let mut kets: Vec<Ket> = vec![*chain.left().ket()];
    for _ in 1..n {
        let mut next = Vec::with_capacity(kets.len() * d);
        for a in ops {
            for k in &kets {
                next.push(a.apply(k));
            }
        }
        kets = next;
    }
    let r = chain.right().ket();
    let bras: Vec<Ket> = ops.iter().map(|a| a.dagger().apply(r)).collect();
    let mut amps = Vec::with_capacity(kets.len() * d);
    for b in &bras {
        for k in &kets {
            amps.push(b[0].conj() * k[0] + b[1].conj() * k[1]);
        }
    }
    Ok(OracleState { d, sites: (1..=n).collect(), amps })
}

impl OracleState {
    pub fn d(&self) -> usize {
        self.d
    }

    /// Remaining physical sites in ascending order.
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let s = self.norm_sqr().sqrt();
        OracleState { amps: self.amps.iter().map(|z| z / s).collect(), ..self.clone() }
    }

    fn position(&self, site: usize) -> Result<usize> {
        self.sites.iter().position(|&s| s == site).ok_or(Error::SiteOutOfRange {
            site,
            lo: self.sites.first().copied().unwrap_or(0),
            hi: self.sites.last().copied().unwrap_or(0),
        })
    }

    /// Contract `site` with the bra `⟨v|`, removing it. The result is not renormalized.
    pub fn project_site(&self, site: usize, v: &[C64]) -> Result<Self> {
        if v.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: v.len() });
        }
        let p = self.position(site)?;
        let stride = self.d.pow(p as u32);
        let block = stride * self.d;
        let mut amps = Vec::with_capacity(self.amps.len() / self.d);
        for hi in 0..self.amps.len() / block {
            for lo in 0..stride {
                let base = hi * block + lo;
                let mut acc = ZERO;
                for (i, vi) in v.iter().enumerate() {
                    acc += vi.conj() * self.amps[base + i * stride];
                }
                amps.push(acc);
            }
        }
        let mut sites = self.sites.clone();
        sites.remove(p);
        Ok(OracleState { d: self.d, sites, amps })
    }

    /// Born-rule probabilities of measuring `site` in `basis`.
    pub fn site_marginal(&self, site: usize, basis: &MeasurementBasis) -> Result<Vec<f64>> {
        let total = self.norm_sqr();
        basis
            .vectors()
            .iter()
            .map(|v| Ok(self.project_site(site, v)?.norm_sqr() / total))
            .collect()
    }

    /// Apply a single-site operator in place of the amplitudes.
    pub fn apply_local(&self, site: usize, op: &DMatrix<C64>) -> Result<Self> {
        if op.nrows() != self.d || op.ncols() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: op.nrows() });
        }
        let p = self.position(site)?;
        let stride = self.d.pow(p as u32);
        let block = stride * self.d;
        let mut amps = vec![ZERO; self.amps.len()];
        for hi in 0..self.amps.len() / block {
            for lo in 0..stride {
                let base = hi * block + lo;
                for i in 0..self.d {
                    let mut acc = ZERO;
                    for j in 0..self.d {
                        acc += op[(i, j)] * self.amps[base + j * stride];
                    }
                    amps[base + i * stride] = acc;
                }
            }
        }
        Ok(OracleState { amps, ..self.clone() })
    }

    /// `⟨ψ| Π O_site |ψ⟩ / ⟨ψ|ψ⟩` for operators on distinct sites.
    pub fn expectation(&self, ops: &[(usize, &DMatrix<C64>)]) -> Result<C64> {
        let mut phi = self.clone();
        for (site, op) in ops {
            phi = phi.apply_local(*site, op)?;
        }
        let num: C64 = self.amps.iter().zip(&phi.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(num / self.norm_sqr())
    }

    /// Connected correlator `⟨O_a O_b⟩ − ⟨O_a⟩⟨O_b⟩` for Hermitian observables.
    pub fn connected(&self, a: (usize, &DMatrix<C64>), b: (usize, &DMatrix<C64>)) -> Result<f64> {
        let ab = self.expectation(&[a, b])?.re;
        let ea = self.expectation(&[a])?.re;
        let eb = self.expectation(&[b])?.re;
        Ok(ab - ea * eb)
    }
}

/// Largest deviations between transfer-formalism values and the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleComparison {
    /// `|Σ|amplitude|² − 1|` of the normalized state vector.
    pub normalization: f64,
    /// Site marginals in the computational and Fourier bases.
    pub marginals: f64,
    /// Connected correlators of `x` and `z` on pairs `(1, b)` and `(a, n)`.
    pub correlators: f64,
    pub max_deviation: f64,
    pub marginals_checked: usize,
    pub correlators_checked: usize,
}

fn fourier_basis(d: usize) -> MeasurementBasis {
    let s = 1.0 / (d as f64).sqrt();
    let vectors = (0..d)
        .map(|j| (0..d).map(|k| C64::from_polar(s, 2.0 * PI * (j * k) as f64 / d as f64)).collect())
        .collect();
    MeasurementBasis::new(vectors, 1e-12).expect("Fourier basis is orthonormal")
}

/// Deterministic comparison of marginals and correlators at every site.
pub fn compare_with_oracle(chain: &MpsChain) -> Result<OracleComparison> {
    let state = oracle_state(chain)?;
    let (d, n) = (chain.d(), chain.n());
    let normalization = (state.normalized().norm_sqr() - 1.0).abs();
    let bases = [MeasurementBasis::computational(d), fourier_basis(d)];
    let mut marginals: f64 = 0.0;
    let mut marginals_checked = 0;
    let mut at = chain.clone();
    for site in 1..=n {
        for b in &bases {
            let ours = outcome_probabilities(&at, b)?;
            let theirs = state.site_marginal(site, b)?;
            marginals = ours.iter().zip(&theirs).fold(marginals, |m, (x, y)| m.max((x - y).abs()));
            marginals_checked += 1;
        }
        if site < n {
            at = at.skip_site()?;
        }
    }
    let mut pairs: Vec<(usize, usize)> = (2..=n).map(|b| (1, b)).collect();
    pairs.extend((2..n).map(|a| (a, n)));
    let mut correlators: f64 = 0.0;
    let mut correlators_checked = 0;
    for name in ["x", "z"] {
        let o = named_observable(name, d).expect("known observable");
        for &(a, b) in &pairs {
            let oa = SiteObservable::new(o.clone(), a, 1e-12)?;
            let ob = SiteObservable::new(o.clone(), b, 1e-12)?;
            let ours = two_point(chain, &oa, &ob)?;
            let theirs = state.connected((a, &o), (b, &o))?;
            correlators = correlators.max((ours - theirs).abs());
            correlators_checked += 1;
        }
    }
    Ok(OracleComparison {
        normalization,
        marginals,
        correlators,
        max_deviation: normalization.max(marginals).max(correlators),
        marginals_checked,
        correlators_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{BoundaryVector, Preset};

    #[test]
    fn comparison_on_presets() {
        for p in [Preset::Cluster, Preset::Aklt, Preset::Ghz] {
            let c = compare_with_oracle(&p.default_chain(6).unwrap()).unwrap();
            assert!(c.max_deviation < 1e-10, "{}: {c:?}", p.name());
            assert_eq!(c.marginals_checked, 12);
            assert_eq!(c.correlators_checked, 2 * 9);
        }
    }
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn ghz_zero_boundaries_uniform() {
        let chain = Preset::Ghz.chain(BoundaryVector::zero(), BoundaryVector::zero(), 3).unwrap();
        let v = full_state_vector(&chain).unwrap();
        assert_eq!(v.len(), 8);
        for a in v {
            assert!((a - C64::new(2f64.powf(-1.5), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn ghz_plus_boundaries_even_parity() {
        let chain = Preset::Ghz.chain(BoundaryVector::plus(), BoundaryVector::plus(), 3).unwrap();
        let v = full_state_vector(&chain).unwrap();
        for (idx, a) in v.iter().enumerate() {
            let expected = if idx.count_ones() % 2 == 0 { 0.5 } else { 0.0 };
            assert!((a - C64::new(expected, 0.0)).norm() < 1e-15, "{idx} {a}");
        }
    }

    #[test]
    fn single_site_cluster() {
        let chain = Preset::Cluster.chain(BoundaryVector::zero(), BoundaryVector::plus(), 1).unwrap();
        let v = full_state_vector(&chain).unwrap();
        // ⟨+|H|0⟩ = 1/√2 + ... computed directly
        let plus = BoundaryVector::plus();
        let k = chain.kraus();
        let raw: Vec<C64> = (0..2).map(|i| k.ops()[i].sandwich(plus.ket(), BoundaryVector::zero().ket())).collect();
        let norm = (raw[0].norm_sqr() + raw[1].norm_sqr()).sqrt();
        for i in 0..2 {
            assert!((v[i] - raw[i] / norm).norm() < 1e-15);
        }
        assert!((raw[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn norm_equals_normalization_factor() {
        let chain = Preset::Aklt.chain(BoundaryVector::zero(), BoundaryVector::plus(), 6).unwrap();
        let s = oracle_state(&chain).unwrap();
        let f = chain.f(chain.cs_state(), 6);
        assert!((s.norm_sqr() - f).abs() < 1e-14);
    }

    #[test]
    fn size_guard() {
        let chain = Preset::Depolarizing4 { u: crate::pauli::Mat2::identity(), v: crate::pauli::Mat2::identity() }
            .chain(BoundaryVector::zero(), BoundaryVector::zero(), 12)
            .unwrap();
        assert!(matches!(oracle_state(&chain), Err(Error::OracleTooLarge { .. })));
    }

    #[test]
    fn projection_removes_site() {
        let chain = Preset::Ghz.chain(BoundaryVector::plus(), BoundaryVector::plus(), 3).unwrap();
        let s = oracle_state(&chain).unwrap();
        let one = [ZERO, C64::new(1.0, 0.0)];
        let p = s.project_site(2, &one).unwrap();
        assert_eq!(p.sites(), &[1, 3]);
        assert!((p.norm_sqr() / s.norm_sqr() - 0.5).abs() < 1e-15);
        assert!(s.project_site(4, &one).is_err());
    }
}
