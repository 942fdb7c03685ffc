//! Small dense helpers for the real 3×3 block of a Pauli transfer matrix.

use nalgebra::Matrix3;

pub type M3 = [[f64; 3]; 3];

pub const IDENTITY: M3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn mul(a: &M3, b: &M3) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &M3) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn apply(a: &M3, v: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = (0..3).map(|k| a[i][k] * v[k]).sum();
    }
    out
}

pub fn pow(a: &M3, l: usize) -> M3 {
    let mut result = IDENTITY;
    let mut base = *a;
    let mut e = l;
    while e > 0 {
        if e & 1 == 1 {
            result = mul(&result, &base);
        }
        base = mul(&base, &base);
        e >>= 1;
    }
    result
}

pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(v: &[f64; 3]) -> f64 {
    dot(v, v).sqrt()
}

pub fn max_abs(a: &M3) -> f64 {
    a.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Eigen-decomposition of a real symmetric 3×3 matrix by cyclic Jacobi
/// rotations. Eigenvalues are returned in descending order; column `k` of
/// the returned matrix is the eigenvector for eigenvalue `k`.
pub fn symmetric_eigen(a: &M3) -> ([f64; 3], M3) {
    let mut m = *a;
    let mut v = IDENTITY;
    for _sweep in 0..64 {
        let off = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
        let scale = (0..3).map(|i| m[i][i].powi(2)).sum::<f64>() + off;
        if off <= f64::EPSILON * f64::EPSILON * scale || off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // m <- Jᵀ m J with J the (p, q) plane rotation
            for k in 0..3 {
                let mkp = m[k][p];
                let mkq = m[k][q];
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m[p][k];
                let mqk = m[q][k];
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
            for k in 0..3 {
                let vkp = v[k][p];
                let vkq = v[k][q];
                v[k][p] = c * vkp - s * vkq;
                v[k][q] = s * vkp + c * vkq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]));
    let vals = [m[order[0]][order[0]], m[order[1]][order[1]], m[order[2]][order[2]]];
    let mut vecs = [[0.0; 3]; 3];
    for (col, &src) in order.iter().enumerate() {
        let mut col_vec = [v[0][src], v[1][src], v[2][src]];
        canonical_sign(&mut col_vec);
        for row in 0..3 {
            vecs[row][col] = col_vec[row];
        }
    }
    (vals, vecs)
}

/// Flip `v` so that its first component with magnitude above 1e-12 is positive.
pub fn canonical_sign(v: &mut [f64; 3]) {
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Singular values in descending order together with the right singular
/// vectors (columns), via the eigen-decomposition of `aᵀa`.
pub fn singular_values(a: &M3) -> ([f64; 3], M3) {
    let ata = mul(&transpose(a), a);
    let (vals, vecs) = symmetric_eigen(&ata);
    (vals.map(|x| x.max(0.0).sqrt()), vecs)
}

/// Operator 2-norm (largest singular value).
pub fn op_norm(a: &M3) -> f64 {
    singular_values(a).0[0]
}

/// Largest eigenvalue magnitude of a general real 3×3 matrix.
pub fn spectral_radius(a: &M3) -> f64 {
    let m = Matrix3::from_fn(|i, j| a[i][j]);
    m.complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(z.norm()))
}
