use proptest::prelude::*;
use rilab::atomic::*;
use rilab::grid::{random_dyadic_map, Interval, MeasureMap, Piece, StepFunction};
use rilab::norms::NormSpec;
use rilab::operators::{
    is_isometry, lamperti_isometry, ElementaryOperator, IsometryOptions, PseudoIntegralOperator,
};
use rilab::scalar::{rational, Rational};

fn squeeze() -> MeasureMap {
    let iv = |a: (i64, i64), b: (i64, i64)| {
        Interval::new(rational(a.0, a.1), rational(b.0, b.1)).unwrap()
    };
    MeasureMap::new(vec![
        Piece::new(iv((0, 1), (1, 2)), iv((0, 1), (1, 4))),
        Piece::new(iv((1, 2), (1, 1)), iv((1, 4), (1, 1))),
    ])
    .unwrap()
}

#[test]
fn permutation_on_lorentz_stays_at_one() {
    let perm = MeasureMap::cell_permutation(2, &[3, 1, 0, 2]).unwrap();
    let t = ElementaryOperator::<Rational>::new(
        perm,
        vec![
            rational(1, 1),
            rational(-1, 1),
            rational(1, 1),
            rational(1, 1),
        ],
    )
    .unwrap();
    let r = kp_experiment(
        &NormSpec::reference_lorentz(),
        &t,
        100,
        7,
        &[0.25, 0.5, 0.75, 1.0],
    )
    .unwrap();
    assert_eq!(r.samples.len(), 100);
    assert_eq!(r.violations, 0);
    assert!(r
        .samples
        .iter()
        .flat_map(|s| &s.functionals)
        .all(|v| *v == 1.0));
    assert!(r.base.iter().all(|v| *v == 1.0));
}

#[test]
fn lamperti_functional_below_one() {
    let t: ElementaryOperator<f64> = lamperti_isometry(2.0, &squeeze(), &[1, 1]).unwrap();
    let r = kp_experiment(&NormSpec::lp(2.0).unwrap(), &t, 20, 3, &[1.0]).unwrap();
    let expected = 0.5f64.sqrt() / 2.0 + 1.5f64.sqrt() / 2.0;
    assert!((r.base[0] - expected).abs() < 1e-12, "{}", r.base[0]);
    assert!((expected - 0.9659).abs() < 1e-4);
    assert_eq!(r.violations, 0);
    assert!(r.samples.iter().all(|s| s.certified));
    assert!(r.max <= 1.0 + KP_TOL);
    assert!(!r.square_function.is_empty());
    // one nonzero term per point, so every square function is ‖|a|‖
    for (n, p, v) in &r.square_function {
        assert!((v - r.modulus_norm).abs() < 1e-12, "n={n} p={p}");
    }
}

#[test]
fn identity_automorphism_gives_square() {
    let t: ElementaryOperator<f64> = lamperti_isometry(2.0, &squeeze(), &[1, -1]).unwrap();
    let sq = t.compose(&t).unwrap();
    let k = kernel_of(&PseudoIntegralOperator::from(sq)).unwrap();
    assert!(kernel_functional(&k, 1.0).unwrap() <= 1.0 + KP_TOL);
}

#[test]
fn non_isometry_is_rejected() {
    let t = ElementaryOperator::<f64>::scalar(2.0);
    assert!(kp_experiment(&NormSpec::lp(1.0).unwrap(), &t, 4, 0, &[1.0]).is_err());
}

#[test]
fn kernel_reproduces_operator() {
    for seed in 0..10 {
        let a = ElementaryOperator::<f64>::from_map(random_dyadic_map(3, 4, seed).unwrap());
        let b = ElementaryOperator::<f64>::from_map(random_dyadic_map(3, 4, seed + 50).unwrap())
            .compose(&ElementaryOperator::scalar(-0.5))
            .unwrap();
        let Ok(t) = PseudoIntegralOperator::new(vec![a, b]) else {
            continue;
        };
        // at level 10 every branch maps each cell inside a level-3 cell
        let k = kernel_of_terms(t.terms(), Some(10)).unwrap();
        for i in 1..=8 {
            let f = StepFunction::basis(3, i).unwrap();
            let direct = t.apply(&f).unwrap().refine(10).unwrap();
            assert!(
                direct.same_function(&k.integrate(&f).unwrap()),
                "seed {seed} cell {i}"
            );
        }
    }
}

#[test]
fn composed_kernel_matches_composition() {
    for seed in 0..10 {
        let s =
            ElementaryOperator::<f64>::new(random_dyadic_map(2, 3, seed).unwrap(), vec![1.5; 4])
                .unwrap_or_else(|_| {
                    let m = random_dyadic_map(2, 3, seed).unwrap();
                    let n = m.pieces().len();
                    ElementaryOperator::new(m, vec![1.5; n]).unwrap()
                });
        let t = ElementaryOperator::<f64>::from_map(random_dyadic_map(2, 3, seed + 9).unwrap());
        let st = s.compose(&t).unwrap();
        let k = kernel_of_terms(std::slice::from_ref(&st), Some(12)).unwrap();
        for i in 1..=4 {
            let f = StepFunction::basis(2, i).unwrap();
            let two_step = s.apply(&t.apply(&f).unwrap()).unwrap().refine(12).unwrap();
            assert!(two_step.same_function(&k.integrate(&f).unwrap()));
        }
    }
}

#[test]
fn isometries_on_built_in_specs_have_small_functionals() {
    let opts = IsometryOptions::default();
    for spec in NormSpec::built_in() {
        for seed in 0..5 {
            let sigma = random_dyadic_map(3, 4, seed).unwrap();
            let signs: Vec<i8> = (0..sigma.pieces().len())
                .map(|i| if i % 2 == 0 { 1 } else { -1 })
                .collect();
            let mut ops = vec![];
            let perm = MeasureMap::cell_permutation(2, &[1, 3, 0, 2]).unwrap();
            ops.push(ElementaryOperator::<f64>::from_map(perm));
            if let Some(p) = spec.lp_exponent().filter(|p| p.is_finite()) {
                ops.push(lamperti_isometry(p, &sigma, &signs).unwrap());
            }
            for op in ops {
                if is_isometry(&spec, &op, &opts).verdict() == Some(false) {
                    continue;
                }
                let k = kernel_of(&PseudoIntegralOperator::from(op)).unwrap();
                for p in [0.25, 0.5, 0.75, 1.0] {
                    assert!(
                        kernel_functional(&k, p).unwrap() <= 1.0 + KP_TOL,
                        "{spec:?} seed {seed} p {p}"
                    );
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn dyadic_variation_climbs_to_the_atomic_value(
        atoms in prop::collection::btree_map(0u64..256, -4.0f64..4.0, 1..8),
        p in 0.1f64..=1.0,
    ) {
        let atoms: Vec<_> = atoms.into_iter().filter(|a| a.1.abs() > 1e-3).map(|(k, a)| (rational(k as i64, 256), a)).collect();
        prop_assume!(!atoms.is_empty());
        let mu = AtomicMeasure::new(atoms).unwrap();
        let seq = dyadic_p_variation(&mu, p, 10).unwrap();
        let full = p_variation(&mu, p).unwrap();
        for w in seq.windows(2) {
            prop_assert!(w[1] >= w[0] * (1.0 - 1e-12));
        }
        let sep = mu.separation_level().unwrap() as usize;
        prop_assert!(sep <= 8);
        prop_assert!((seq[sep] - full).abs() <= 1e-12 * full);
        prop_assert!(seq.iter().all(|v| *v <= full * (1.0 + 1e-12)));
    }
}
