use lhs_core::operator::{
    gell_mann_basis, is_ppt, joint_probabilities, negativity, partial_trace, tensor, CMatrix, Measurement,
};
use lhs_core::states::sample_hs_dims;
use lhs_core::{BipartiteCut, DensityMatrix, HermitianOperator, RngStream};
use proptest::prelude::*;

fn random_hermitian(d: usize, rng: &mut RngStream) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| rng.complex_normal());
    (&g + g.adjoint()).map(|z| z * 0.5)
}

fn projective(d: usize, rng: &mut RngStream) -> Measurement {
    // orthonormal eigenbasis of a random Hermitian
    let h = HermitianOperator::new(vec![d], random_hermitian(d, rng)).unwrap();
    let eig = h.entries().clone().symmetric_eigen();
    let effects = (0..d)
        .map(|k| {
            let v = eig.eigenvectors.column(k).into_owned();
            HermitianOperator::new(vec![d], &v * v.adjoint()).unwrap()
        })
        .collect();
    Measurement::new(effects)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn negativity_vanishes_exactly_on_ppt_states(seed in any::<u64>(), shape in 0usize..3) {
        let dims: &[usize] = [&[2, 2][..], &[2, 3], &[3, 2]][shape];
        let mut rng = RngStream::new(seed, 0);
        let rho = sample_hs_dims(dims, &mut rng);
        let cut = BipartiteCut::single(0);
        let n = negativity(&rho, &cut).unwrap();
        let ppt = is_ppt(&rho, &cut, 1e-9).unwrap();
        let side = dims.iter().product::<usize>() as f64;
        if ppt {
            prop_assert!(n <= side * 1e-9, "ppt state with negativity {n}");
        } else {
            prop_assert!(n > 1e-9, "npt state with negativity {n}");
        }
    }

    #[test]
    fn partial_trace_undoes_tensor(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let mut rng = RngStream::new(seed, 1);
        let rho = sample_hs_dims(&[da], &mut rng);
        let sigma = sample_hs_dims(&[db], &mut rng);
        let joint = tensor(rho.op(), sigma.op());
        let back = partial_trace(&joint, &BipartiteCut::single(0)).unwrap();
        prop_assert!(back.max_abs_diff(rho.op()) < 1e-12);
        let back = partial_trace(&joint, &BipartiteCut::single(1)).unwrap();
        prop_assert!(back.max_abs_diff(sigma.op()) < 1e-12);
    }

    #[test]
    fn joint_probabilities_do_not_signal(seed in any::<u64>(), db in 2usize..4) {
        let mut rng = RngStream::new(seed, 2);
        let rho = sample_hs_dims(&[2, db], &mut rng);
        let alice: Vec<_> = (0..3).map(|_| projective(2, &mut rng)).collect();
        let bob: Vec<_> = (0..3).map(|_| projective(db, &mut rng)).collect();
        let p = joint_probabilities(&rho, &alice, &bob).unwrap();
        for x in 0..alice.len() {
            for a in 0..2 {
                let first = p.alice_marginal(a, x, 0);
                for y in 1..bob.len() {
                    prop_assert!((p.alice_marginal(a, x, y) - first).abs() < 1e-10);
                }
            }
        }
        let total: f64 = (0..2).flat_map(|a| (0..db).map(move |b| (a, b))).map(|(a, b)| p.prob(a, b, 1, 2)).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gell_mann_expansion_reconstructs(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = RngStream::new(seed, 3);
        let mut m = random_hermitian(d, &mut rng);
        let shift = m.trace() / d as f64;
        for i in 0..d {
            m[(i, i)] -= shift;
        }
        let x = HermitianOperator::new(vec![d], m).unwrap();
        let basis = gell_mann_basis(d).unwrap();
        prop_assert_eq!(basis.len(), d * d - 1);
        let mut rebuilt = HermitianOperator::zeros(&[d]);
        for g in &basis {
            prop_assert!(g.trace().abs() < 1e-12);
            let coeff = x.inner(g) / g.inner(g);
            rebuilt = &rebuilt + &g.scale(coeff);
        }
        prop_assert!(rebuilt.max_abs_diff(&x) < 1e-10);
    }
}

#[test]
fn ppt_and_npt_branches_are_both_reached() {
    // the proptest above is only meaningful if HS sampling hits both sides
    let cut = BipartiteCut::single(0);
    let (mut ppt, mut npt) = (0, 0);
    for i in 0..200 {
        let rho: DensityMatrix = sample_hs_dims(&[2, 2], &mut RngStream::new(9, i));
        if is_ppt(&rho, &cut, 1e-9).unwrap() {
            ppt += 1;
        } else {
            npt += 1;
        }
    }
    assert!(ppt > 20 && npt > 20, "{ppt} ppt / {npt} npt");
}
