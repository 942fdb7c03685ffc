//! Single-site measurements and the operations they induce in correlation
//! space, the projective measurement `ℳ` and its correctness condition.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mps::MpsChain;
use crate::pauli::{self, canonical_phase, KrausSet, Ket, Mat2, ONE, ZERO};

/// `d` orthonormal vectors `|α_j⟩ = Σ_i α_{ji}|i⟩` of the physical space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementBasis {
    vectors: Vec<Vec<C64>>,
}

impl MeasurementBasis {
    pub fn new(vectors: Vec<Vec<C64>>, tol: f64) -> Result<Self> {
        let d = vectors.len();
        if d == 0 {
            return Err(Error::InvalidBasis("empty basis".into()));
        }
        for (j, v) in vectors.iter().enumerate() {
            if v.len() != d {
                return Err(Error::InvalidBasis(format!("vector {j} has {} components, expected {d}", v.len())));
            }
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite("measurement basis"));
            }
        }
        for a in 0..d {
            for b in a..d {
                let g: C64 = vectors[a].iter().zip(&vectors[b]).map(|(x, y)| x.conj() * y).sum();
                let target = if a == b { ONE } else { ZERO };
                if (g - target).norm() > tol {
                    return Err(Error::InvalidBasis(format!(
                        "vectors {a} and {b} are not orthonormal: overlap {g}"
                    )));
                }
            }
        }
        Ok(MeasurementBasis { vectors })
    }

    pub fn computational(d: usize) -> Self {
        let vectors = (0..d)
            .map(|j| (0..d).map(|i| if i == j { ONE } else { ZERO }).collect())
            .collect();
        MeasurementBasis { vectors }
    }

    /// Columns of a unitary matrix.
    pub fn from_unitary_columns(u: &DMatrix<C64>, tol: f64) -> Result<Self> {
        let vectors = (0..u.ncols()).map(|j| u.column(j).iter().copied().collect()).collect();
        Self::new(vectors, tol)
    }

    pub fn d(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }
}

/// `A[α] = Σ_i conj(α_i) A[i]` and whether it is proportional to a unitary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveOperator {
    pub op: Mat2,
    pub unitary_branch: bool,
    /// `a` with `A[α]†A[α] = a I`, when such an `a` exists.
    pub branch_weight: Option<f64>,
}

pub fn effective_operator(k: &KrausSet, v: &[C64], tol: f64) -> Result<EffectiveOperator> {
    if v.len() != k.d() {
        return Err(Error::DimensionMismatch { expected: k.d(), found: v.len() });
    }
    let op = k
        .ops()
        .iter()
        .zip(v)
        .fold(Mat2::zero(), |acc, (a, vi)| acc + a.scale(vi.conj()));
    let branch_weight = op.unitary_weight(tol);
    Ok(EffectiveOperator { op, unitary_branch: branch_weight.is_some(), branch_weight })
}

/// One measurement outcome and the operation it induced.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub site: usize,
    pub outcome: usize,
    pub probability: f64,
    pub effective_op: Mat2,
    pub unitary_branch: bool,
    pub branch_weight: Option<f64>,
}

fn require_cursor(chain: &MpsChain) -> Result<()> {
    if chain.cursor() > chain.n() {
        return Err(Error::CursorExhausted { cursor: chain.cursor(), n: chain.n() });
    }
    Ok(())
}

/// Exact probabilities of every outcome when the site at the cursor is
/// measured in `basis`, with the rest of the chain traced out.
pub fn outcome_probabilities(chain: &MpsChain, basis: &MeasurementBasis) -> Result<Vec<f64>> {
    require_cursor(chain)?;
    if basis.d() != chain.d() {
        return Err(Error::DimensionMismatch { expected: chain.d(), found: basis.d() });
    }
    let m = chain.n() - chain.cursor();
    let rho = chain.cs_state();
    let denom = chain.f(rho, m + 1);
    basis
        .vectors()
        .iter()
        .map(|v| {
            let e = effective_operator(chain.kraus(), v, pauli::STRUCTURAL_TOL)?.op;
            Ok(chain.f(&(e * *rho * e.dagger()), m) / denom)
        })
        .collect()
}

/// Condition on outcome `j` at the cursor.
pub fn apply_outcome(chain: &MpsChain, basis: &MeasurementBasis, j: usize) -> Result<(MeasurementRecord, MpsChain)> {
    let probs = outcome_probabilities(chain, basis)?;
    apply_with_probability(chain, basis, j, probs.get(j).copied())
}

fn apply_with_probability(
    chain: &MpsChain,
    basis: &MeasurementBasis,
    j: usize,
    probability: Option<f64>,
) -> Result<(MeasurementRecord, MpsChain)> {
    let probability = probability.ok_or_else(|| Error::Domain(format!("outcome {j} out of range")))?;
    let eff = effective_operator(chain.kraus(), &basis.vectors()[j], pauli::STRUCTURAL_TOL)?;
    let next = eff.op * *chain.cs_state() * eff.op.dagger();
    if next.trace().re <= 1e-300 {
        return Err(Error::Domain(format!("outcome {j} annihilates the correlation-space state")));
    }
    let record = MeasurementRecord {
        site: chain.cursor(),
        outcome: j,
        probability,
        effective_op: eff.op,
        unitary_branch: eff.unitary_branch,
        branch_weight: eff.branch_weight,
    };
    Ok((record, chain.advanced(next, chain.cursor() + 1)))
}

/// Index chosen by inverting the cumulative distribution at `u ∈ [0, 1)`.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last = j;
            acc += p;
            if u < acc {
                return j;
            }
        }
    }
    last
}

/// Measure the site at the cursor, sampling the outcome from `rng`.
pub fn measure_site_with_rng<R: Rng>(
    chain: &MpsChain,
    basis: &MeasurementBasis,
    rng: &mut R,
) -> Result<(MeasurementRecord, MpsChain)> {
    let probs = outcome_probabilities(chain, basis)?;
    let j = sample_index(&probs, rng.random::<f64>());
    apply_with_probability(chain, basis, j, Some(probs[j]))
}

/// Measure the site at the cursor with a fresh generator seeded by `seed`.
pub fn measure_site(chain: &MpsChain, basis: &MeasurementBasis, seed: u64) -> Result<(MeasurementRecord, MpsChain)> {
    measure_site_with_rng(chain, basis, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// The pair of Kraus operators that realizes the projective measurement
/// together with the physical basis change bringing them to the form
/// `A'[0] = √(c_m/2)(|φ₀⟩⟨0| + |φ₁⟩⟨1|)`, `A'[1] = √(c_m/2)(|φ₀⟩⟨0| − |φ₁⟩⟨1|)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasuredForm {
    pub pair: (usize, usize),
    pub phi0: Ket,
    pub phi1: Ket,
    pub c_m: f64,
    /// Row `k` holds the coefficients of the new basis vector `|k'⟩`.
    pub basis_change: Vec<Vec<C64>>,
}

impl MeasuredForm {
    /// The measurement `ℳ = {m₀, m₁, |2'⟩, …}` with `m_{0,1} = (|0'⟩ ± |1'⟩)/√2`.
    pub fn measurement(&self) -> MeasurementBasis {
        let t = &self.basis_change;
        let s = FRAC_1_SQRT_2;
        let m0 = t[0].iter().zip(&t[1]).map(|(a, b)| (a + b) * s).collect();
        let m1 = t[0].iter().zip(&t[1]).map(|(a, b)| (a - b) * s).collect();
        let mut vectors = vec![m0, m1];
        vectors.extend(t.iter().skip(2).cloned());
        MeasurementBasis { vectors }
    }

    /// `A'[k] = Σ_i conj(T_{ki}) A[i]`
    pub fn transformed(&self, k: &KrausSet) -> Vec<Mat2> {
        self.basis_change
            .iter()
            .map(|row| k.ops().iter().zip(row).fold(Mat2::zero(), |acc, (a, t)| acc + a.scale(t.conj())))
            .collect()
    }
}

/// Search index pairs `i < i′` of equal weight with `W_i†W_{i′} = e^{iγ}Z`,
/// `W = A/√c`, in lexicographic order.
pub fn measured_form(k: &KrausSet, tol: f64) -> Result<MeasuredForm> {
    pauli::require_stochastic_unitary(k, tol)?;
    let d = k.d();
    let w = k.weights();
    for i in 0..d {
        for ip in i + 1..d {
            if (w[i] - w[ip]).abs() > tol {
                continue;
            }
            let wi = k.ops()[i].scale_re(1.0 / w[i].sqrt());
            let wip = k.ops()[ip].scale_re(1.0 / w[ip].sqrt());
            let g = wi.dagger() * wip;
            let m = &g.0;
            if m[0][1].norm() > tol || m[1][0].norm() > tol || (m[0][0] + m[1][1]).norm() > tol {
                continue;
            }
            let gamma = m[0][0].arg();
            let col0 = wi.apply(&[ONE, ZERO]);
            let phi0 = canonical_phase(col0);
            let alpha0 = (col0[0] * phi0[0].conj() + col0[1] * phi0[1].conj()).arg();
            let back = C64::from_polar(1.0, -alpha0);
            let col1 = wi.apply(&[ZERO, ONE]);
            let phi1 = [col1[0] * back, col1[1] * back];
            let unit = |idx: usize, phase: f64| -> Vec<C64> {
                (0..d).map(|r| if r == idx { C64::from_polar(1.0, phase) } else { ZERO }).collect()
            };
            let mut basis_change = vec![unit(i, alpha0), unit(ip, alpha0 + gamma)];
            for r in (0..d).filter(|&r| r != i && r != ip) {
                basis_change.push(unit(r, 0.0));
            }
            return Ok(MeasuredForm { pair: (i, ip), phi0, phi1, c_m: w[i] + w[ip], basis_change });
        }
    }
    Err(Error::NoMeasuredForm)
}

/// Outcome probabilities of `ℳ` for a pure correlation-space state `ψ` at the cursor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectiveProbabilities {
    pub p0: f64,
    pub p1: f64,
    /// Total probability of the outcomes `|2'⟩ … |d−1'⟩`.
    pub residual: f64,
}

pub fn projective_probabilities(chain: &MpsChain, psi: &Ket, tol: f64) -> Result<ProjectiveProbabilities> {
    let form = measured_form(chain.kraus(), tol)?;
    let at_psi = chain.advanced(Mat2::outer(psi, psi), chain.cursor());
    let probs = outcome_probabilities(&at_psi, &form.measurement())?;
    Ok(ProjectiveProbabilities { p0: probs[0], p1: probs[1], residual: probs[2..].iter().sum() })
}

/// `p_j = c_m f_{n−k}(|R⟩, |φ_j⟩) |⟨j|ψ⟩|² / f_{n−k+1}(|R⟩, |ψ⟩)` evaluated directly.
pub fn projective_probabilities_closed_form(chain: &MpsChain, psi: &Ket, tol: f64) -> Result<(f64, f64)> {
    require_cursor(chain)?;
    let form = measured_form(chain.kraus(), tol)?;
    let m = chain.n() - chain.cursor();
    let rho = Mat2::outer(psi, psi);
    let denom = chain.f(&rho, m + 1);
    let p = |phi: &Ket, amp: C64| form.c_m * chain.f(&Mat2::outer(phi, phi), m) * amp.norm_sqr() / denom;
    Ok((p(&form.phi0, psi[0]), p(&form.phi1, psi[1])))
}

/// Whether `f_{n−k}(|R⟩, |φ₀⟩) = f_{n−k}(|R⟩, |φ₁⟩)` at site `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub site: usize,
    pub holds: bool,
    pub f0: f64,
    pub f1: f64,
}

pub fn check_condition(chain: &MpsChain, k: usize, tol: f64) -> Result<ConditionReport> {
    if k < 1 || k > chain.n() {
        return Err(Error::SiteOutOfRange { site: k, lo: 1, hi: chain.n() });
    }
    let form = measured_form(chain.kraus(), tol)?;
    let m = chain.n() - k;
    let f0 = chain.f(&Mat2::outer(&form.phi0, &form.phi0), m);
    let f1 = chain.f(&Mat2::outer(&form.phi1, &form.phi1), m);
    Ok(ConditionReport { site: k, holds: (f0 - f1).abs() <= tol, f0, f1 })
}

/// One entry of a measurement program.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProgramStep {
    pub site: usize,
    pub basis: MeasurementBasis,
}

/// Records of one shot plus the final correlation-space state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trace {
    pub shot: u64,
    pub records: Vec<MeasurementRecord>,
    pub final_state: Mat2,
    pub cursor: usize,
}

/// Check that program sites are strictly increasing, start at or after the
/// cursor and stay within the chain.
pub fn validate_program(chain: &MpsChain, program: &[ProgramStep]) -> Result<()> {
    let mut next = chain.cursor();
    for step in program {
        if step.site < next {
            return Err(Error::SiteOrder(format!(
                "site {} is not after the previous site or cursor ({})",
                step.site,
                next - 1
            )));
        }
        if step.site > chain.n() {
            return Err(Error::SiteOutOfRange { site: step.site, lo: chain.cursor(), hi: chain.n() });
        }
        if step.basis.d() != chain.d() {
            return Err(Error::DimensionMismatch { expected: chain.d(), found: step.basis.d() });
        }
        next = step.site + 1;
    }
    Ok(())
}

/// Run a program once with the supplied generator; unlisted sites before a
/// measured one are traced out.
pub fn run_once<R: Rng>(chain: &MpsChain, program: &[ProgramStep], rng: &mut R) -> Result<(Vec<MeasurementRecord>, MpsChain)> {
    validate_program(chain, program)?;
    let mut state = chain.clone();
    let mut records = Vec::with_capacity(program.len());
    for step in program {
        while state.cursor() < step.site {
            state = state.skip_site()?;
        }
        let (rec, next) = measure_site_with_rng(&state, &step.basis, rng)?;
        records.push(rec);
        state = next;
    }
    Ok((records, state))
}

/// Generator for shot `shot` of a run seeded with `seed`.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// Execute `shots` independent runs; shot `s` uses stream `s` of the ChaCha8
/// generator seeded with `seed`.
pub fn run_program(chain: &MpsChain, program: &[ProgramStep], seed: u64, shots: u64) -> Result<Vec<Trace>> {
    validate_program(chain, program)?;
    (0..shots)
        .map(|shot| {
            let (records, end) = run_once(chain, program, &mut shot_rng(seed, shot))?;
            Ok(Trace { shot, records, final_state: *end.cs_state(), cursor: end.cursor() })
        })
        .collect()
}
