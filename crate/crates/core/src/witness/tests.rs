use super::*;
use crate::operator::{c, is_ppt, negativity, partial_trace, C64};
use crate::rng::RngStream;
use crate::states::{noisy_tripartite, sample_hs, werner, TripartiteKind};
use proptest::prelude::*;

fn cfg() -> WitnessConfig {
    WitnessConfig::default()
}

fn pure_two_qubit(a1: f64) -> DensityMatrix {
    let a2 = (1.0 - a1 * a1).sqrt();
    DensityMatrix::pure(&[2, 2], &[c(a1, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(a2, 0.0)]).unwrap()
}

fn random_states(seed: u64, n: usize, keep: impl Fn(&DensityMatrix) -> bool) -> Vec<DensityMatrix> {
    let mut rng = RngStream::new(seed, 0);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let rho = sample_hs(&mut rng);
        if keep(&rho) {
            out.push(rho);
        }
    }
    out
}

fn entangled(rho: &DensityMatrix) -> bool {
    negativity(rho, &BipartiteCut::single(0)).unwrap() > 1e-3
}

fn ppt(rho: &DensityMatrix) -> bool {
    is_ppt(rho, &BipartiteCut::single(0), 0.0).unwrap()
}

#[test]
fn kind_names_round_trip() {
    for k in QuantifierKind::ALL {
        assert_eq!(k.name().parse::<QuantifierKind>().unwrap(), k);
        assert_eq!(k.short().parse::<QuantifierKind>().unwrap(), k);
    }
    assert!("frobenius".parse::<QuantifierKind>().is_err());
    assert_eq!(QuantifierKind::ALL.iter().filter(|k| k.is_robustness()).count(), 5);
}

#[test]
fn e_from_mu_follows_given_by_column() {
    for k in QuantifierKind::ALL {
        let e = k.e_from_mu(2.0);
        if k.is_robustness() {
            assert!((e - 2.0 / 3.0).abs() < 1e-15);
        } else {
            assert_eq!(e, 2.0);
        }
    }
}

#[test]
fn maximally_entangled_oracles() {
    let phi = werner(1.0).unwrap();
    // (kind, μ*) from the PPT threshold of the corresponding mixture
    let expected = [
        (QuantifierKind::OneSidedRandomRobustness, 2.0),
        (QuantifierKind::OneSidedGeneralizedRobustness, 2.0),
        (QuantifierKind::RandomRobustness, 2.0),
        (QuantifierKind::GeneralizedRobustness, 1.0),
        (QuantifierKind::BestSeparableApproximation, 1.0),
        (QuantifierKind::Negativity, 0.5),
    ];
    for (kind, mu) in expected {
        let r = quantify(&phi, kind, &cfg()).unwrap();
        assert!((r.mu - mu).abs() < 1e-5, "{kind}: {} vs {mu}", r.mu);
        assert!((r.e - kind.e_from_mu(r.mu)).abs() < 1e-9);
        let d = optimal_witness(&phi, kind, &cfg()).unwrap();
        assert!((d.mu - mu).abs() < 1e-5, "{kind} dual: {} vs {mu}", d.mu);
    }
    let rr = quantify(&phi, QuantifierKind::RandomRobustness, &cfg()).unwrap();
    assert!((rr.e - 2.0 / 3.0).abs() < 1e-4);
}

#[test]
fn one_sided_fixed_robustness_of_bell_state_is_infinite() {
    // the |01>,|10> block of (Φ⁺ + μ|0><0|⊗I/2)^Γ is [[μ/2, 1/2], [1/2, 0]]
    let phi = werner(1.0).unwrap();
    let r = quantify(&phi, QuantifierKind::OneSidedFixedRobustness, &cfg()).unwrap();
    assert!(r.mu.is_infinite() && r.e == 1.0 && !r.dual_feasible);
    let d = optimal_witness(&phi, QuantifierKind::OneSidedFixedRobustness, &cfg()).unwrap();
    assert!(d.mu.is_infinite() && d.w.is_none());
}

#[test]
fn pure_state_robustness_closed_forms() {
    // Γ-spectrum of a1|00> + a2|11> is {a1², a2², ±a1a2}
    for a1 in [0.95, 0.8, 0.6] {
        let a2 = (1.0f64 - a1 * a1).sqrt();
        let rho = pure_two_qubit(a1);
        let rr = quantify(&rho, QuantifierKind::RandomRobustness, &cfg()).unwrap();
        assert!((rr.mu - 4.0 * a1 * a2).abs() < 1e-5, "rr {a1}: {}", rr.mu);
        let gr = quantify(&rho, QuantifierKind::GeneralizedRobustness, &cfg()).unwrap();
        assert!((gr.mu - 2.0 * a1 * a2).abs() < 1e-5, "gr {a1}: {}", gr.mu);
        let srr = quantify(&rho, QuantifierKind::OneSidedRandomRobustness, &cfg()).unwrap();
        assert!((srr.mu - 2.0).abs() < 1e-5, "1srr {a1}: {}", srr.mu);
        let neg = quantify(&rho, QuantifierKind::Negativity, &cfg()).unwrap();
        assert!((neg.mu - a1 * a2).abs() < 1e-6);
    }
}

#[test]
fn ppt_states_have_zero_quantifiers() {
    let states = random_states(41, 5, ppt);
    for rho in states.iter().chain([DensityMatrix::maximally_mixed(&[2, 2])].iter()) {
        for kind in QuantifierKind::ALL {
            let r = quantify(rho, kind, &cfg()).unwrap();
            assert!(r.mu.abs() < 1e-6 && r.e.abs() < 1e-6, "{kind}: {}", r.mu);
        }
    }
}

#[test]
fn negativity_matches_spectrum() {
    for rho in random_states(42, 100, |_| true) {
        let sdp = quantify(&rho, QuantifierKind::Negativity, &cfg()).unwrap().mu;
        let spectral = negativity(&rho, &BipartiteCut::single(0)).unwrap();
        assert!((sdp - spectral).abs() < 1e-6, "{sdp} vs {spectral}");
    }
}

#[test]
fn primal_dual_gap_on_random_states() {
    let states = random_states(43, 100, |_| true);
    for kind in QuantifierKind::ALL {
        for rho in &states {
            let p = quantify(rho, kind, &cfg()).unwrap();
            let d = optimal_witness(rho, kind, &cfg()).unwrap();
            if p.mu.is_infinite() {
                assert!(d.mu.is_infinite(), "{kind}");
                continue;
            }
            assert!((p.mu - d.mu).abs() <= 1e-6, "{kind}: primal {} dual {}", p.mu, d.mu);
            assert!(d.dual_feasible, "{kind}");
            let w = d.w.as_ref().unwrap();
            assert!((witness_value(w, rho).unwrap() + d.mu).abs() < 1e-9 || d.mu == 0.0);
        }
    }
}

/// Smallest `μ` with `ρ + μσ` PPT, by bisection on eigenvalues.
fn mixing_oracle(rho: &DensityMatrix, sigma: &HermitianOperator) -> f64 {
    let cut = BipartiteCut::single(0);
    let ok = |mu: f64| {
        let m = rho.op() + &sigma.scale(mu);
        m.min_eigenvalue() >= 0.0 && partial_transpose(&m, &cut).unwrap().min_eigenvalue() >= 0.0
    };
    if ok(0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid
        } else {
            lo = mid
        }
    }
    hi
}

#[test]
fn mixing_kinds_match_eigenvalue_oracle() {
    let config = cfg();
    for rho in random_states(48, 30, entangled) {
        let rho_b = partial_trace(rho.op(), &BipartiteCut::single(1)).unwrap();
        let cases = [
            (QuantifierKind::RandomRobustness, HermitianOperator::maximally_mixed(&[2, 2])),
            (QuantifierKind::OneSidedRandomRobustness, tensor(&HermitianOperator::maximally_mixed(&[2]), &rho_b)),
            (QuantifierKind::OneSidedFixedRobustness, tensor(config.gamma.op(), &rho_b)),
        ];
        for (kind, sigma) in cases {
            let oracle = mixing_oracle(&rho, &sigma);
            let p = quantify(&rho, kind, &config).unwrap();
            assert!((p.mu - oracle).abs() <= 1e-6 * oracle.max(1.0), "{kind}: {} vs {oracle}", p.mu);
        }
    }
}

#[test]
fn negativity_witness_structure() {
    let phi = werner(1.0).unwrap();
    let d = optimal_witness(&phi, QuantifierKind::Negativity, &cfg()).unwrap();
    let w = d.w.unwrap();
    assert!((witness_value(&w, &phi).unwrap() + 0.5).abs() < 1e-6);
    let y = partial_transpose(&w, &BipartiteCut::single(0)).unwrap();
    let ev = y.eigenvalues();
    assert!(ev[0] >= -1e-7 && *ev.last().unwrap() <= 1.0 + 1e-7);
}

#[test]
fn witnesses_are_nonnegative_on_ppt_states() {
    let targets = random_states(44, 3, entangled);
    let witnesses: Vec<HermitianOperator> = QuantifierKind::ALL
        .iter()
        .flat_map(|&k| targets.iter().filter_map(move |rho| optimal_witness(rho, k, &cfg()).unwrap().w))
        .collect();
    let ppt_states = random_states(45, 1000, ppt);
    for w in &witnesses {
        for rho in &ppt_states {
            assert!(witness_value(w, rho).unwrap() >= -1e-8);
        }
    }
}

#[test]
fn separable_state_witness_value_nonnegative() {
    let rho = werner(0.2).unwrap();
    for kind in QuantifierKind::ALL {
        if let Some(w) = optimal_witness(&rho, kind, &cfg()).unwrap().w {
            assert!(witness_value(&w, &rho).unwrap() >= -1e-8, "{kind}");
        }
    }
}

#[test]
fn robustness_feasibility_is_monotone() {
    // mixing in more noise than μ* keeps the state PPT
    for rho in random_states(46, 10, entangled) {
        let mu = quantify(&rho, QuantifierKind::RandomRobustness, &cfg()).unwrap().mu;
        for extra in [1e-4, 0.1, 1.0] {
            let mixed = DensityMatrix::from_unnormalized(
                rho.op() + &HermitianOperator::maximally_mixed(&[2, 2]).scale(mu + extra),
            )
            .unwrap();
            assert!(is_ppt(&mixed, &BipartiteCut::single(0), 1e-9).unwrap());
        }
        let below = DensityMatrix::from_unnormalized(
            rho.op() + &HermitianOperator::maximally_mixed(&[2, 2]).scale((mu - 1e-3).max(0.0)),
        )
        .unwrap();
        assert!(!is_ppt(&below, &BipartiteCut::single(0), 0.0).unwrap());
    }
}

#[test]
fn witness_value_basics() {
    let mut rng = RngStream::new(47, 0);
    let a = sample_hs(&mut rng);
    let b = sample_hs(&mut rng);
    let i = HermitianOperator::identity(&[2, 2]);
    assert!((witness_value(&i, &a).unwrap() - 1.0).abs() < 1e-14);
    let w = optimal_witness(&werner(1.0).unwrap(), QuantifierKind::GeneralizedRobustness, &cfg()).unwrap().w.unwrap();
    let mid = DensityMatrix::new((a.op() + b.op()).scale(0.5)).unwrap();
    let lhs = witness_value(&w, &mid).unwrap();
    let rhs = 0.5 * (witness_value(&w, &a).unwrap() + witness_value(&w, &b).unwrap());
    assert!((lhs - rhs).abs() < 1e-12);
    assert!(matches!(witness_value(&i, &DensityMatrix::maximally_mixed(&[2, 3])), Err(WitnessError::BadDims(_))));
}

#[test]
fn dims_guard() {
    let big = DensityMatrix::maximally_mixed(&[3, 3]);
    assert!(matches!(quantify(&big, QuantifierKind::Negativity, &cfg()), Err(WitnessError::PptNotExact(_))));
    let allow = WitnessConfig { allow_bound: true, ..cfg() };
    assert!(quantify(&big, QuantifierKind::Negativity, &allow).unwrap().mu.abs() < 1e-6);
    let qutrit = DensityMatrix::maximally_mixed(&[2, 3]);
    assert!(quantify(&qutrit, QuantifierKind::RandomRobustness, &cfg()).is_ok());
}

fn ghz() -> DensityMatrix {
    noisy_tripartite(TripartiteKind::Ghz, 1.0).unwrap()
}

#[test]
fn gme_detects_ghz() {
    let g = gme_witness(&ghz(), &SolverConfig::default()).unwrap();
    assert!(g.detects() && g.value < -1e-3, "{}", g.value);
    assert!((g.w.trace() - 1.0).abs() < 1e-7);
    assert!(g.reconstruction_residual() <= 1e-7);
    for d in &g.decompositions {
        assert!(d.p.min_eigenvalue() >= -1e-8 && d.q.min_eigenvalue() >= -1e-8);
    }
    assert_eq!(g.decompositions.len(), 3);
}

#[test]
fn gme_white_noise_and_biseparable() {
    let cfg = SolverConfig::default();
    let mixed = gme_witness(&DensityMatrix::maximally_mixed(&[2, 2, 2]), &cfg).unwrap();
    assert!(mixed.value >= -1e-8);
    // ½(ρ_A⊗Φ⁺_BC + Φ⁺_AB⊗ρ_C): each term is separable across one cut
    let phi = werner(1.0).unwrap();
    let zero = DensityMatrix::pure(&[2], &[c(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
    let plus = DensityMatrix::pure(&[2], &[c(0.5f64.sqrt(), 0.0), c(0.5f64.sqrt(), 0.0)]).unwrap();
    let bisep = DensityMatrix::new(
        (&tensor(zero.op(), phi.op()) + &tensor(phi.op(), plus.op())).scale(0.5).with_dims(vec![2, 2, 2]).unwrap(),
    )
    .unwrap();
    let g = gme_witness(&bisep, &cfg).unwrap();
    assert!(g.value >= -1e-8, "{}", g.value);
    assert!(matches!(gme_witness(&phi, &cfg), Err(WitnessError::BadDims(_))));
}

#[test]
fn gme_noisy_ghz_threshold() {
    // GHZ-diagonal states are GME iff p > 3/7, and PPT mixtures are exact there
    let cfg = SolverConfig::default();
    let above = gme_witness(&noisy_tripartite(TripartiteKind::Ghz, 0.45).unwrap(), &cfg).unwrap();
    let below = gme_witness(&noisy_tripartite(TripartiteKind::Ghz, 0.41).unwrap(), &cfg).unwrap();
    assert!(above.value < -1e-6, "{}", above.value);
    assert!(below.value >= -1e-8, "{}", below.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn werner_negativity_and_random_robustness(w in 0.0f64..1.0) {
        let rho = werner(w).unwrap();
        let neg = quantify(&rho, QuantifierKind::Negativity, &cfg()).unwrap().mu;
        prop_assert!((neg - ((3.0 * w - 1.0) / 4.0).max(0.0)).abs() < 1e-6);
        // (ρ_w + μ I/4)/(1+μ) = werner(w/(1+μ)), PPT iff w/(1+μ) <= 1/3
        let rr = quantify(&rho, QuantifierKind::RandomRobustness, &cfg()).unwrap().mu;
        prop_assert!((rr - (3.0 * w - 1.0).max(0.0)).abs() < 1e-5);
    }

    #[test]
    fn local_unitaries_preserve_quantifiers(seed in 0u64..500) {
        let mut rng = RngStream::new(seed, 1);
        let rho = sample_hs(&mut rng);
        let ua = crate::states::haar_unitary(2, &mut rng);
        let ub = crate::states::haar_unitary(2, &mut rng);
        let u = ua.kronecker(&ub);
        let rotated = DensityMatrix::new(
            HermitianOperator::new(vec![2, 2], &u * rho.op().entries() * u.adjoint()).unwrap(),
        ).unwrap();
        for kind in [QuantifierKind::GeneralizedRobustness, QuantifierKind::RandomRobustness, QuantifierKind::Negativity] {
            let a = quantify(&rho, kind, &cfg()).unwrap().mu;
            let b = quantify(&rotated, kind, &cfg()).unwrap().mu;
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}
