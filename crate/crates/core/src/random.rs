//! Random instances: Haar unitaries, kets, observables and Kraus sets.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::correlation::observable_norm;
use crate::pauli::{KrausSet, Ket, Mat2};
use crate::sim::MeasurementBasis;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random `d×d` unitary from the QR decomposition of a Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let (q, r) = g.qr().unpack();
    let mut u = q;
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Haar-random 2×2 unitary.
pub fn haar_mat2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let u = haar_unitary(2, rng);
    Mat2::new_unchecked(u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)])
}

/// Uniformly random unit ket.
pub fn random_ket<R: Rng + ?Sized>(rng: &mut R) -> Ket {
    let k = [gaussian(rng), gaussian(rng)];
    let n = (k[0].norm_sqr() + k[1].norm_sqr()).sqrt();
    [k[0] / n, k[1] / n]
}

/// Haar-random orthonormal measurement basis.
pub fn random_basis<R: Rng + ?Sized>(d: usize, rng: &mut R) -> MeasurementBasis {
    MeasurementBasis::from_unitary_columns(&haar_unitary(d, rng), 1e-9).expect("Haar unitary is orthonormal")
}

/// Random Hermitian observable scaled to operator norm 1.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let h = (&g + g.adjoint()).scale(0.5);
    let n = observable_norm(&h);
    h.scale(1.0 / n)
}

/// Weights drawn uniformly from the probability simplex.
pub fn simplex_weights<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// `A[i] = √c_i U_i` with Haar `U_i` and simplex weights `c_i`.
pub fn random_stochastic_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> KrausSet {
    let w = simplex_weights(d, rng);
    let ops = w.iter().map(|c| haar_mat2(rng).scale_re(c.sqrt())).collect();
    KrausSet::new(ops).expect("finite operators")
}
