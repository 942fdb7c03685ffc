#![allow(dead_code)]

use cswire::mps::{euler_zyz, BoundaryVector, MpsChain, Preset};
use cswire::pauli::Ket;
use cswire::random::random_ket;
use cswire::io::default_canonical_params;
use cswire::C64;
use rand::Rng;

/// Every shipped preset, with fixed rotations for `depolarizing4`.
pub fn all_presets() -> Vec<Preset> {
    vec![
        Preset::Cluster,
        Preset::Aklt,
        Preset::AkltCanonical,
        Preset::Ghz,
        Preset::Depolarizing4 { u: euler_zyz(0.3, 1.2, -0.7), v: euler_zyz(-1.1, 0.4, 2.0) },
        Preset::CanonicalClass(default_canonical_params()),
    ]
}

/// A chain with random boundaries that still has nonzero norm.
pub fn random_chain<R: Rng>(p: &Preset, n: usize, rng: &mut R) -> MpsChain {
    loop {
        let l = BoundaryVector::normalized(random_ket(rng)).unwrap();
        let r = BoundaryVector::normalized(random_ket(rng)).unwrap();
        if let Ok(c) = p.chain(l, r, n) {
            return c;
        }
    }
}

pub fn braket(a: &Ket, b: &Ket) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}
