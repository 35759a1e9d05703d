//! Oracles for the acceptance run that do not go through the certification
//! code: spectra, steering maps computed by hand, and certificate tampering.

use std::path::PathBuf;

use lhs_core::lhs::LhsCertificate;
use lhs_core::operator::{c, partial_transpose, CMatrix};
use lhs_core::{BipartiteCut, DensityMatrix, HermitianOperator, RngStream};

/// `Σ |negative eigenvalues|` of the partial transpose on the first qubit.
pub fn spectral_negativity(rho: &DensityMatrix) -> f64 {
    partial_transpose(rho.op(), &BipartiteCut::single(0))
        .unwrap()
        .eigenvalues()
        .iter()
        .filter(|e| **e < 0.0)
        .map(|e| -e)
        .sum()
}

/// `u · σ`.
pub fn pauli_dot(u: [f64; 3]) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(u[2], 0.0), c(u[0], -u[1]), c(u[0], u[1]), c(-u[2], 0.0)])
}

/// `tr_A[(E ⊗ I) X]` for a two-qubit `X`.
pub fn steer(x: &CMatrix, e: &CMatrix) -> CMatrix {
    let full = e.kronecker(&CMatrix::identity(2, 2)) * x;
    CMatrix::from_fn(2, 2, |i, j| full[(i, j)] + full[(2 + i, 2 + j)])
}

/// Largest entry gap, over 50 random directions and both outcomes, between
/// Bob's conditional states from `ρ` under `Π_û` and from `O` under
/// `rΠ_û + (1−r)I/2`. Zero for a valid certificate.
pub fn depolarization_gap(cert: &LhsCertificate, rho: &DensityMatrix, rng: &mut RngStream) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let v = [rng.standard_normal(), rng.standard_normal(), rng.standard_normal()];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let u = [v[0] / n, v[1] / n, v[2] / n];
        for sign in [1.0, -1.0] {
            let proj = (CMatrix::identity(2, 2) + pauli_dot(u) * c(sign, 0.0)) * c(0.5, 0.0);
            let noisy = (CMatrix::identity(2, 2) + pauli_dot(u) * c(sign * cert.r, 0.0)) * c(0.5, 0.0);
            let from_o = steer(cert.o.entries(), &noisy);
            let from_rho = steer(rho.op().entries(), &proj);
            worst = worst.max((from_o - from_rho).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

fn bump(op: &HermitianOperator, i: usize, j: usize) -> HermitianOperator {
    let mut m = op.entries().clone();
    m[(i, j)] += c(1e-3, 0.0);
    if i != j {
        m[(j, i)] += c(1e-3, 0.0);
    }
    HermitianOperator::new(op.dims().to_vec(), m).unwrap()
}

/// Tampering kind `k % 5`: a diagonal or off-diagonal entry of `O`, of one
/// hidden state, or the shrink radius, each moved by 1e-3.
pub fn tampered(cert: &LhsCertificate, k: usize) -> LhsCertificate {
    let mut t = cert.clone();
    let h = k % t.hidden.len();
    match k % 5 {
        0 => t.o = bump(&t.o, k % 4, k % 4),
        1 => t.o = bump(&t.o, 0, 1 + k % 3),
        2 => t.hidden[h].op = bump(&t.hidden[h].op, k % 2, k % 2),
        3 => t.hidden[h].op = bump(&t.hidden[h].op, 0, 1),
        _ => t.r += 1e-3,
    }
    t
}

/// The `lhs` binary next to the running test executable, or `LHS_BIN`.
pub fn lhs_binary() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("LHS_BIN") {
        return Some(p.into());
    }
    let exe = std::env::current_exe().ok()?;
    // target/<profile>/deps/acceptance-<hash>
    let profile = exe.parent()?.parent()?;
    let bin = profile.join(format!("lhs{}", std::env::consts::EXE_SUFFIX));
    bin.exists().then_some(bin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lhs_core::states::werner;

    #[test]
    fn steering_phi_plus_transposes_the_effect() {
        // tr_A[(E⊗I)|Φ⁺⟩⟨Φ⁺|] = Eᵀ/2
        let phi = werner(1.0).unwrap();
        let e = pauli_dot([0.3, 0.5, -0.2]) + CMatrix::identity(2, 2);
        let got = steer(phi.op().entries(), &e);
        let want = e.transpose() * c(0.5, 0.0);
        assert!((got - want).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn spectral_negativity_of_werner() {
        for w in [0.0, 0.2, 1.0 / 3.0, 0.5, 1.0] {
            let n = spectral_negativity(&werner(w).unwrap());
            assert!((n - ((3.0 * w - 1.0) / 4.0).max(0.0)).abs() < 1e-12, "w={w}");
        }
    }

    #[test]
    fn pauli_dot_squares_to_identity() {
        let u = [0.6, 0.0, 0.8];
        let sq = pauli_dot(u) * pauli_dot(u);
        assert!((sq - CMatrix::identity(2, 2)).iter().all(|z| z.norm() < 1e-14));
    }
}
