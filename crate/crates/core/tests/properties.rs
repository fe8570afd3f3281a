use mixedq::analysis::{schatten_norm, SpinSetup};
use mixedq::combinatorics::{Caps, Partition};
use mixedq::fock::{gram, FockBasis};
use mixedq::moments::{moment, wick_decompose, wick_inner};
use mixedq::spinmodel::{gradient_form, normalized_trace, ou_spin, Representation};
use mixedq::{StructureMatrix, WickWord};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn structure(n: usize, seed: u64) -> StructureMatrix {
    StructureMatrix::random(n, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn labels(n: usize, max_len: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=n, 0..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_is_a_partial_order(a in prop::collection::vec(0..3usize, 1..7), b in prop::collection::vec(0..3usize, 1..7)) {
        let d = a.len().min(b.len());
        let (p, r) = (Partition::from_labels(&a[..d]), Partition::from_labels(&b[..d]));
        prop_assert!(p.refines(&p).unwrap());
        let m = p.meet(&r).unwrap();
        prop_assert!(m.refines(&p).unwrap() && m.refines(&r).unwrap());
        if p.refines(&r).unwrap() && r.refines(&p).unwrap() {
            prop_assert_eq!(&p, &r);
        }
        if p.refines(&r).unwrap() {
            prop_assert_eq!(m, p);
        }
    }

    #[test]
    fn moments_are_tracial_and_symmetric(seed in any::<u64>(), w in labels(3, 8)) {
        let q = structure(3, seed);
        let base = moment(&q, &w).unwrap();
        let mut rotated = w.clone();
        rotated.rotate_left(1.min(w.len()));
        let reversed: Vec<usize> = w.iter().rev().copied().collect();
        prop_assert!((moment(&q, &rotated).unwrap() - base).abs() < 1e-12);
        prop_assert!((moment(&q, &reversed).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn moments_are_invariant_under_relabeling(seed in any::<u64>(), w in labels(3, 8), shift in 0..3usize) {
        let q = structure(3, seed);
        let perm = |i: usize| (i - 1 + shift) % 3 + 1;
        let rows: Vec<Vec<f64>> = (1..=3)
            .map(|i| (1..=3).map(|j| {
                let inv = |x: usize| (x + 2 * 3 - 1 - shift) % 3 + 1;
                q.q(inv(i), inv(j))
            }).collect())
            .collect();
        let permuted = StructureMatrix::from_rows(&rows).unwrap();
        let relabeled: Vec<usize> = w.iter().map(|&i| perm(i)).collect();
        let diff = moment(&permuted, &relabeled).unwrap() - moment(&q, &w).unwrap();
        prop_assert!(diff.abs() < 1e-12);
    }

    #[test]
    fn vacuum_part_of_decomposition_is_the_moment(seed in any::<u64>(), w in labels(2, 7)) {
        let q = structure(2, seed);
        let dec = wick_decompose(&q, &w, &Caps::default()).unwrap();
        prop_assert!((dec.vacuum_coefficient() - moment(&q, &w).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn wick_inner_is_symmetric(seed in any::<u64>(), a in labels(3, 4), b in labels(3, 4)) {
        let q = structure(3, seed);
        let (x, y) = (WickWord::new(a), WickWord::new(b));
        let d = wick_inner(&q, &x, &y).unwrap() - wick_inner(&q, &y, &x).unwrap();
        prop_assert!(d.abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gram_blocks_are_symmetric(seed in any::<u64>()) {
        let q = structure(2, seed);
        let basis = FockBasis::new(2, 4).unwrap();
        let g = gram(&q, &basis).unwrap();
        for s in 0..=4 {
            let b = g.block(s);
            prop_assert!((b - b.transpose()).amax() < 1e-12);
        }
    }

    #[test]
    fn schatten_norms_increase_with_p(seed in any::<u64>(), idx in 0..50usize) {
        let setup = SpinSetup::new(&structure(2, seed), 2, seed).unwrap();
        let f = setup.sample(seed, idx).unwrap();
        let rep = Representation::for_elements(&[&f]).unwrap();
        let m = rep.matrix(&f).unwrap();
        let norms: Vec<f64> = [1.0, 1.5, 2.0, 3.0, 4.0, 8.0]
            .iter()
            .map(|&p| schatten_norm(&m, p).unwrap())
            .collect();
        for w in norms.windows(2) {
            prop_assert!(w[0] <= w[1] * (1.0 + 1e-12));
        }
        let tr = normalized_trace(&(m.adjoint() * &m)).re;
        prop_assert!((norms[2].powi(2) - tr).abs() < 1e-9 * tr.max(1.0));
    }

    #[test]
    fn semigroup_contracts_every_lp(seed in any::<u64>(), t in 0.0..2.0f64, idx in 0..50usize) {
        let setup = SpinSetup::new(&structure(2, seed), 2, seed).unwrap();
        let f = setup.sample(seed, idx).unwrap();
        let tf = ou_spin(&f, t).unwrap();
        let rep = Representation::for_elements(&[&f, &tf]).unwrap();
        let (mf, mt) = (rep.matrix(&f).unwrap(), rep.matrix(&tf).unwrap());
        for p in [1.0, 2.0, 3.0, 6.0] {
            prop_assert!(schatten_norm(&mt, p).unwrap() <= schatten_norm(&mf, p).unwrap() * (1.0 + 1e-10));
        }
    }

    #[test]
    fn gradient_form_is_positive(seed in any::<u64>(), idx in 0..50usize) {
        let setup = SpinSetup::new(&structure(2, seed), 2, seed).unwrap();
        let f = setup.sample(seed, idx).unwrap();
        let g = gradient_form(&f, &f).unwrap();
        let rep = Representation::for_elements(&[&g]).unwrap();
        let m: DMatrix<_> = rep.matrix(&g).unwrap();
        let scale = m.iter().fold(1.0f64, |a, z| a.max(z.norm()));
        let min = m.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-10 * scale);
    }
}
