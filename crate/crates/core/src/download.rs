//! Transfer of a correlation-space qubit into a physical site: repeated
//! projection onto the span of `m₀, m₁`, a correlation-space rotation
//! `|φ_j⟩ → |m_j⟩`, and a final measurement of `ℳ`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mps::{self, make_chain, BoundaryVector, MpsChain};
use crate::oracle::oracle_state;
use crate::pauli::{self, inner, ket_norm, Ket, Mat2, ZERO};
use crate::sim::{effective_operator, measured_form, sample_index, MeasuredForm, MeasurementRecord, ProgramStep};

/// Default limit on projection attempts.
pub const MAX_ATTEMPTS: usize = 64;

/// Correlation-space targets `|m₀⟩ = |+⟩`, `|m₁⟩ = |−⟩`.
pub fn targets() -> [Ket; 2] {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

/// How the rotation `|φ_j⟩ → |m_j⟩` is carried out.
#[derive(Clone, Debug, PartialEq)]
pub enum Rotation {
    /// No sites are consumed; valid only when `φ_j` already equal `m_j` up to phases.
    Identity,
    /// Measurements on consecutive sites; `site` counts from 1 at the first
    /// site after the successful projection.
    Program(Vec<ProgramStep>),
    /// Skip the rotation without validating it.
    Skip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DownloadOptions {
    pub rotation: Rotation,
    pub tol: f64,
    pub max_attempts: usize,
}

impl Default for DownloadOptions {
    fn default() -> Self {
        DownloadOptions { rotation: Rotation::Identity, tol: pauli::STRUCTURAL_TOL, max_attempts: MAX_ATTEMPTS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DownloadTrace {
    /// Correlation-space state that was downloaded.
    pub psi: Ket,
    /// Site holding the downloaded qubit.
    pub site: usize,
    pub attempts: usize,
    /// Success probability of each projection attempt.
    pub attempt_probabilities: Vec<f64>,
    /// Failed attempts, each with outcome `j ≥ 2`.
    pub failed_attempts: Vec<MeasurementRecord>,
    pub rotation_steps: Vec<MeasurementRecord>,
    pub rotation_verified: bool,
    /// `δ_j` with `W|φ_j⟩ = κ e^{iδ_j}|m_j⟩`.
    pub rotation_phases: [f64; 2],
    pub c_u: f64,
    /// Site `k′` of the final measurement.
    pub k_prime: usize,
    pub final_outcome: usize,
    pub final_probability: f64,
    /// Reduced state of the downloaded site in the `{|0'⟩, |1'⟩}` basis.
    pub downloaded_density: Mat2,
    /// Dominant eigenvector of `downloaded_density`.
    pub downloaded_state: Ket,
    pub purity: f64,
    /// Unitary `U` applied to `ψ` by the failed attempts.
    pub byproduct: Mat2,
    /// `C = U† D_δ† Z^l H`
    pub correction: Mat2,
    pub corrected_density: Mat2,
    pub fidelity: f64,
    /// Oracle check that the coefficient of `⟨j|ψ⟩|j⟩` is the same for both `j`.
    pub j_independence_residual: Option<f64>,
}

/// Correlation-space operators attached to each physical basis state of the
/// downloaded site: `X[s][t] = J_s J_t†`.
#[derive(Clone, Copy, Debug)]
struct Joint([[Mat2; 2]; 2]);

impl Joint {
    fn map(&self, f: impl Fn(&Mat2) -> Mat2) -> Self {
        let x = &self.0;
        Joint([[f(&x[0][0]), f(&x[0][1])], [f(&x[1][0]), f(&x[1][1])]])
    }

    fn conjugate(&self, e: &Mat2) -> Self {
        self.map(|x| *e * *x * e.dagger())
    }

    fn weight(&self, chain: &MpsChain, m: usize) -> f64 {
        chain.f(&self.0[0][0], m) + chain.f(&self.0[1][1], m)
    }
}

/// `⟨R|𝒜^m(X)|R⟩` for a not necessarily Hermitian `X`.
fn complex_f(chain: &MpsChain, x: &Mat2, m: usize) -> C64 {
    let h1 = (*x + x.dagger()).scale_re(0.5);
    let h2 = (*x - x.dagger()).scale(C64::new(0.0, -0.5));
    C64::new(chain.f(&h1, m), chain.f(&h2, m))
}

fn record(site: usize, outcome: usize, probability: f64, op: Mat2, tol: f64) -> MeasurementRecord {
    let branch_weight = op.unitary_weight(tol);
    MeasurementRecord { site, outcome, probability, effective_op: op, unitary_branch: branch_weight.is_some(), branch_weight }
}

/// Check `W|φ_j⟩ = κ e^{iδ_j}|m_j⟩` with a common `|κ|`; returns `δ`.
fn validate_rotation(w: &Mat2, form: &MeasuredForm, tol: f64) -> Result<[f64; 2]> {
    let m = targets();
    let mut kappa = [ZERO; 2];
    for (j, phi) in [form.phi0, form.phi1].iter().enumerate() {
        let image = w.apply(phi);
        kappa[j] = inner(&m[j], &image);
        let off = [image[0] - m[j][0] * kappa[j], image[1] - m[j][1] * kappa[j]];
        let residual = ket_norm(&off);
        if residual > tol * ket_norm(&image).max(1.0) {
            return Err(Error::Download(format!(
                "rotation does not map φ_{j} onto m_{j}: residual {residual:e}"
            )));
        }
    }
    let (a, b) = (kappa[0].norm(), kappa[1].norm());
    if (a - b).abs() > tol * a.max(b) || a == 0.0 {
        return Err(Error::Download(format!("rotation weights differ between branches: |κ₀| = {a}, |κ₁| = {b}")));
    }
    Ok([kappa[0].arg(), kappa[1].arg()])
}

/// Run the protocol on the pure correlation-space state at the chain's cursor.
pub fn download(chain: &MpsChain, seed: u64, opts: &DownloadOptions) -> Result<DownloadTrace> {
    let tol = opts.tol;
    let rho = *chain.cs_state();
    let purity = rho.purity();
    if (purity - 1.0).abs() > tol {
        return Err(Error::NotPure { purity });
    }
    let psi = mps::dominant_ket(&rho);
    let form = measured_form(chain.kraus(), tol)?;
    let transformed = form.transformed(chain.kraus());
    let d = chain.d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = chain.n();
    let start = chain.cursor();
    // physical vectors measured on each consumed site, for the oracle check
    let mut projections: Vec<(usize, Vec<C64>)> = vec![];

    // (i) repeat-until-success projection onto span{|0'⟩, |1'⟩}
    let mut state = chain.clone();
    let mut attempt_probabilities = vec![];
    let mut failed_attempts = vec![];
    // unitary picked up by the correlation-space state on failed attempts
    let mut byproduct = Mat2::identity();
    let joint = loop {
        if attempt_probabilities.len() >= opts.max_attempts {
            return Err(Error::Download(format!("projection did not succeed within {} attempts", opts.max_attempts)));
        }
        if state.cursor() >= n {
            return Err(Error::Download("ran out of sites before the projection succeeded".into()));
        }
        let m = n - state.cursor();
        let cs = *state.cs_state();
        let denom = state.f(&cs, m + 1);
        let probs: Vec<f64> = (0..d)
            .map(|j| {
                let a = transformed[j];
                state.f(&(a * cs * a.dagger()), m) / denom
            })
            .collect();
        let success = probs[0] + probs[1];
        attempt_probabilities.push(success);
        let mut outcomes = vec![success];
        outcomes.extend_from_slice(&probs[2..]);
        let pick = sample_index(&outcomes, rng.random::<f64>());
        if pick == 0 {
            let current = mps::dominant_ket(&cs);
            let k0 = transformed[0].apply(&current);
            let k1 = transformed[1].apply(&current);
            let x = Joint([[Mat2::outer(&k0, &k0), Mat2::outer(&k0, &k1)], [Mat2::outer(&k1, &k0), Mat2::outer(&k1, &k1)]]);
            break x;
        }
        let j = pick + 1;
        let a = transformed[j];
        let rec = record(state.cursor(), j, probs[j], a, tol);
        let weight = rec.branch_weight.ok_or_else(|| Error::Download(format!("failed outcome {j} is not a unitary branch")))?;
        byproduct = a.scale_re(1.0 / weight.sqrt()) * byproduct;
        failed_attempts.push(rec);
        projections.push((state.cursor(), form.basis_change[j].clone()));
        state = state.advanced(a * cs * a.dagger(), state.cursor() + 1);
    };
    let site = state.cursor();
    let mut joint = joint;
    let mut cursor = site + 1;

    // (ii) rotation φ_j → m_j
    let mut rotation_steps = vec![];
    let mut w = Mat2::identity();
    let mut c_u = 1.0;
    let (rotation_verified, rotation_phases) = match &opts.rotation {
        Rotation::Identity => (true, validate_rotation(&w, &form, tol)?),
        Rotation::Skip => (false, [0.0, 0.0]),
        Rotation::Program(steps) => {
            for (idx, step) in steps.iter().enumerate() {
                if step.site != idx + 1 {
                    return Err(Error::SiteOrder(format!(
                        "rotation step {} must act on relative site {}, found {}",
                        idx + 1,
                        idx + 1,
                        step.site
                    )));
                }
                if step.basis.d() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: step.basis.d() });
                }
                if cursor >= n {
                    return Err(Error::Download("rotation program runs past the end of the chain".into()));
                }
                let m = n - cursor;
                let denom = joint.weight(chain, m + 1);
                let ops: Vec<Mat2> = step
                    .basis
                    .vectors()
                    .iter()
                    .map(|v| effective_operator(chain.kraus(), v, tol).map(|e| e.op))
                    .collect::<Result<_>>()?;
                let probs: Vec<f64> = ops.iter().map(|e| joint.conjugate(e).weight(chain, m) / denom).collect();
                let o = sample_index(&probs, rng.random::<f64>());
                let e = ops[o];
                rotation_steps.push(record(cursor, o, probs[o], e, tol));
                projections.push((cursor, step.basis.vectors()[o].clone()));
                c_u *= (e.dagger() * e).trace().re / 2.0;
                joint = joint.conjugate(&e);
                w = e * w;
                cursor += 1;
            }
            (true, validate_rotation(&w, &form, tol)?)
        }
    };

    // (iii) ℳ at k′
    let k_prime = cursor;
    if k_prime > n {
        return Err(Error::Download("no site left for the final measurement".into()));
    }
    let meas = form.measurement();
    let m = n - k_prime;
    let denom = joint.weight(chain, m + 1);
    let ops: Vec<Mat2> =
        meas.vectors().iter().map(|v| effective_operator(chain.kraus(), v, tol).map(|e| e.op)).collect::<Result<_>>()?;
    let probs: Vec<f64> = ops.iter().map(|e| joint.conjugate(e).weight(chain, m) / denom).collect();
    let l = sample_index(&probs, rng.random::<f64>());
    if l >= 2 {
        return Err(Error::Download(format!("final measurement returned outcome {l} outside span{{m₀, m₁}}")));
    }
    projections.push((k_prime, meas.vectors()[l].clone()));
    let joint = joint.conjugate(&ops[l]);

    let mut dens = Mat2::zero();
    for s in 0..2 {
        for t in 0..2 {
            dens.0[s][t] = complex_f(chain, &joint.0[s][t], m);
        }
    }
    let dens = dens.scale_re(1.0 / dens.trace().re);
    let [d0, d1] = rotation_phases;
    let d_dag = Mat2::new_unchecked(C64::from_polar(1.0, -d0), ZERO, ZERO, C64::from_polar(1.0, -d1));
    let z_l = if l == 1 { Mat2::z() } else { Mat2::identity() };
    let correction = byproduct.dagger() * d_dag * z_l * Mat2::hadamard();
    let corrected = correction * dens * correction.dagger();
    let fidelity = corrected.sandwich(&psi, &psi).re.clamp(0.0, 1.0);

    let j_independence_residual =
        j_independence(chain, &psi, start, site, &projections, &form, &correction).ok();

    Ok(DownloadTrace {
        psi,
        site,
        attempts: attempt_probabilities.len(),
        attempt_probabilities,
        failed_attempts,
        rotation_steps,
        rotation_verified,
        rotation_phases,
        c_u,
        k_prime,
        final_outcome: l,
        final_probability: probs[l],
        downloaded_density: dens,
        downloaded_state: mps::dominant_ket(&dens),
        purity: dens.purity(),
        byproduct,
        correction,
        corrected_density: corrected,
        fidelity,
        j_independence_residual,
    })
}

/// Rebuild the post-measurement state of sites `start..=n` with the oracle,
/// read the downloaded site in the `{|0'⟩, |1'⟩}` basis, apply the
/// correction and compare `χ_j / ⟨j|ψ⟩` across `j`.
fn j_independence(
    chain: &MpsChain,
    psi: &Ket,
    start: usize,
    site: usize,
    projections: &[(usize, Vec<C64>)],
    form: &MeasuredForm,
    correction: &Mat2,
) -> Result<f64> {
    let left = BoundaryVector::normalized(*psi)?;
    let sub = make_chain(chain.kraus().clone(), left, *chain.right(), chain.n() + 1 - start)?;
    let mut st = oracle_state(&sub)?;
    for (s, v) in projections {
        st = st.project_site(s + 1 - start, v)?;
    }
    let local = site + 1 - start;
    let branches: Vec<Vec<C64>> = (0..2)
        .map(|s| Ok(st.project_site(local, &form.basis_change[s])?.amplitudes().to_vec()))
        .collect::<Result<_>>()?;
    let len = branches[0].len();
    let mut chi = vec![vec![ZERO; len]; 2];
    for idx in 0..len {
        for j in 0..2 {
            chi[j][idx] = correction.0[j][0] * branches[0][idx] + correction.0[j][1] * branches[1][idx];
        }
    }
    let norm: f64 = chi.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let active: Vec<usize> = (0..2).filter(|&j| psi[j].norm() > 1e-12).collect();
    let omega: Vec<Vec<C64>> =
        active.iter().map(|&j| chi[j].iter().map(|z| z / (norm * psi[j])).collect()).collect();
    let mean: Vec<C64> = (0..len).map(|i| omega.iter().map(|w| w[i]).sum::<C64>() / omega.len() as f64).collect();
    Ok(omega
        .iter()
        .map(|w| w.iter().zip(&mean).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

/// `⟨ψ| C ρ C† |ψ⟩` of the corrected downloaded state.
pub fn verify_download(trace: &DownloadTrace, psi: &Ket) -> f64 {
    let n = ket_norm(psi);
    let k = [psi[0] / n, psi[1] / n];
    trace.corrected_density.sandwich(&k, &k).re.clamp(0.0, 1.0)
}

/// Chain whose correlation-space state at the cursor is `ψ`.
pub fn with_state(chain: &MpsChain, psi: &Ket) -> Result<MpsChain> {
    let b = BoundaryVector::normalized(*psi)?;
    Ok(chain.advanced(b.density(), chain.cursor()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::Preset;
    use crate::pauli::ONE;

    fn cluster(n: usize) -> MpsChain {
        Preset::Cluster.chain(BoundaryVector::zero(), BoundaryVector::zero(), n).unwrap()
    }

    #[test]
    fn cluster_basis_state_downloads_exactly() {
        let chain = cluster(8);
        for seed in 0..4 {
            let t = download(&chain, seed, &DownloadOptions::default()).unwrap();
            assert_eq!(t.attempts, 1);
            assert!((t.fidelity - 1.0).abs() < 1e-12);
            assert!(t.j_independence_residual.unwrap() < 1e-12);
            // H Z^l |0⟩ before correction
            let expected = Mat2::hadamard() * if t.final_outcome == 1 { Mat2::z() } else { Mat2::identity() };
            let k = expected.apply(&[ONE, ZERO]);
            assert!((t.downloaded_density.sandwich(&k, &k).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cluster_random_state() {
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let chain = with_state(&cluster(8), &psi).unwrap();
        let t = download(&chain, 11, &DownloadOptions::default()).unwrap();
        assert!((verify_download(&t, &psi) - 1.0).abs() < 1e-12);
        assert!(t.j_independence_residual.unwrap() < 1e-12);
        assert!(verify_download(&t, &pauli::orthogonal(&psi)) < 1e-12);
    }

    #[test]
    fn ghz_requires_rotation() {
        let chain = Preset::Ghz.chain(BoundaryVector::plus(), BoundaryVector::zero(), 8).unwrap();
        assert!(matches!(download(&chain, 1, &DownloadOptions::default()), Err(Error::Download(_))));
        let opts = DownloadOptions { rotation: Rotation::Skip, ..DownloadOptions::default() };
        let t = download(&chain, 1, &opts).unwrap();
        assert!(!t.rotation_verified);
        assert!(t.j_independence_residual.unwrap() >= 0.1);
        assert!(t.fidelity < 1.0 - 1e-3);
    }

    #[test]
    fn mixed_state_rejected() {
        let chain = cluster(6).skip_site().unwrap();
        let mixed = chain.kraus().apply(&Mat2::from_bloch(&[0.0, 0.0, 0.3]));
        let chain = chain.advanced(mixed, chain.cursor());
        assert!(matches!(download(&chain, 0, &DownloadOptions::default()), Err(Error::NotPure { .. })));
    }
}
