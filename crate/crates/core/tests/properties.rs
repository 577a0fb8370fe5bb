//! Randomized invariants across the algebraic layers.

use germflow_core::document::{bundled, GermSpecDocument};
use germflow_core::dynamics::ParabolicFrame;
use germflow_core::jets::GermJet;
use germflow_core::lattice::{hermite_normal_form, integer_kernel, rank, same_lattice};
use germflow_core::multi_index::{monomials_in_range, MultiIndex};
use germflow_core::normalform::{is_normal_form, poincare_dulac_normalize, NormalizeOptions};
use germflow_core::numeric::{eigenvalues, projective_distance};
use germflow_core::pipeline::{analyze, Analysis, Settings};
use germflow_core::resonance::{check_m_resonant, find_generators, resonance_monoid};
use germflow_core::shadow::{
    certify, characteristic_directions, director_matrix, shadow_rescale, transport_direction,
    ParabolicShadow,
};
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn ex1a() -> &'static Analysis {
    static CELL: OnceLock<Analysis> = OnceLock::new();
    CELL.get_or_init(|| {
        let doc = GermSpecDocument::from_json(bundled("ex1a").unwrap()).unwrap();
        analyze(doc, &Settings::default()).unwrap()
    })
}

fn complex(bound: f64) -> impl Strategy<Value = Complex64> {
    (-bound..bound, -bound..bound).prop_map(|(re, im)| Complex64::new(re, im))
}

fn index(n: usize, max: u32) -> impl Strategy<Value = MultiIndex> {
    prop::collection::vec(0..=max, n).prop_map(MultiIndex::new)
}

fn int_rows() -> impl Strategy<Value = Vec<Vec<i128>>> {
    (1usize..=3, 2usize..=4)
        .prop_flat_map(|(k, n)| prop::collection::vec(prop::collection::vec(-12i128..=12, n), k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multi_index_addition_is_invertible((a, b) in (1usize..5).prop_flat_map(|n| (index(n, 6), index(n, 6)))) {
        let s = a.add(&b);
        prop_assert_eq!(s.degree(), a.degree() + b.degree());
        prop_assert!(a.divides(&s));
        prop_assert_eq!(s.checked_sub(&b), Some(a.clone()));
        if !b.divides(&a) {
            prop_assert_eq!(a.checked_sub(&b), None);
        }
    }

    #[test]
    fn hermite_form_spans_the_same_lattice(rows in int_rows()) {
        let h = hermite_normal_form(&rows);
        prop_assert!(same_lattice(&h, &rows));
        prop_assert_eq!(h.len(), rank(&rows));
        prop_assert_eq!(hermite_normal_form(&h), h);
    }

    #[test]
    fn kernel_vectors_are_annihilated(rows in int_rows()) {
        let n = rows[0].len();
        let kernel = integer_kernel(&rows, n);
        prop_assert_eq!(kernel.len(), n - rank(&rows));
        for v in &kernel {
            for row in &rows {
                prop_assert_eq!(row.iter().zip(v).map(|(a, b)| a * b).sum::<i128>(), 0);
            }
        }
    }

    #[test]
    fn frame_round_trip(v in prop::collection::vec(complex(2.0), 2..4), x in complex(1.0), k0 in 1u32..4) {
        prop_assume!(v.iter().any(|c| c.norm() > 0.1) && x.norm() > 1e-3);
        let frame = ParabolicFrame::new(v.clone(), k0);
        let yhat: Vec<Complex64> = (1..v.len()).map(|t| Complex64::new(0.1 * t as f64, -0.05)).collect();
        let u = frame.point(x, &yhat);
        let (x2, y2) = frame.coordinates(&u);
        prop_assert!((x2 - x).norm() < 1e-12);
        for (a, b) in y2.iter().zip(&yhat) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compose_with_inverse_is_identity(
        lin in prop::collection::vec(complex(1.0), 2),
        coeffs in prop::collection::vec(complex(0.5), 2 * 9),
    ) {
        prop_assume!(lin.iter().all(|l| l.norm() > 0.2));
        let mut f = GermJet::new(lin, 4).unwrap();
        let monomials = monomials_in_range(2, 2, 4);
        for j in 0..2 {
            for (q, c) in monomials.iter().zip(&coeffs[j * 9..]) {
                f.set_term(j, q.clone(), *c).unwrap();
            }
        }
        let g = f.invert(4).unwrap();
        let id = GermJet::identity(2, 4);
        prop_assert!(f.compose(&g, 4).unwrap().max_deviation(&id) < 1e-9);
        prop_assert!(g.compose(&f, 4).unwrap().max_deviation(&id) < 1e-9);
    }

    #[test]
    fn normalization_conjugates_to_a_normal_form(coeffs in prop::collection::vec(complex(0.5), 3 * 31)) {
        let a = ex1a();
        let structure = check_m_resonant(&a.spec, 21).unwrap();
        let mut f = GermJet::new(a.spec.eigenvalues(), 4).unwrap();
        let monomials = monomials_in_range(3, 2, 4);
        prop_assert_eq!(monomials.len(), 31);
        for j in 0..3 {
            for (q, c) in monomials.iter().zip(&coeffs[j * 31..]) {
                f.set_term(j, q.clone(), *c).unwrap();
            }
        }
        let result = poincare_dulac_normalize(&f, &structure, 4, NormalizeOptions::default()).unwrap();
        let lhs = result.change.compose(&f, 4).unwrap();
        let rhs = result.normal_form.compose(&result.change, 4).unwrap();
        prop_assert!(lhs.max_deviation(&rhs) < 1e-10);
        prop_assert!(is_normal_form(&result.normal_form, &structure).is_normal_form);
    }

    #[test]
    fn random_planar_shadows_meet_the_bezout_count(
        k0 in 1u32..4,
        coeffs in prop::collection::vec(complex(1.0), 8),
    ) {
        let mut entries = Vec::new();
        for t in 0..2 {
            for a in 0..=k0 {
                let k = MultiIndex::new(vec![a, k0 - a]);
                entries.push(((k, t), coeffs[t * 4 + a as usize]));
            }
        }
        let shadow = ParabolicShadow::from_coefficients(2, k0, entries);
        let set = characteristic_directions(&shadow).unwrap();
        prop_assert_eq!(set.total_multiplicity, (((k0 + 1) * (k0 + 1) - 1) / k0) as usize);
        let scale = shadow.scale();
        for d in set.directions.iter().filter(|d| !d.degenerate) {
            let h = shadow.eval(&d.v);
            for (ht, vt) in h.iter().zip(&d.v) {
                prop_assert!((ht + vt / k0 as f64).norm() < 1e-8 * scale.max(1.0));
            }
            // directors at the normalized point are the eigenvalues of the director matrix
            let direct = eigenvalues(&director_matrix(&shadow, &d.v));
            for x in &d.directors {
                prop_assert!(direct.iter().any(|y| (x - y).norm() < 1e-8 * (1.0 + x.norm())));
            }
        }
    }

    #[test]
    fn rescaling_transports_directions(
        moduli in prop::collection::vec(0.5f64..2.0, 3),
        args in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let a = ex1a();
        let mu: Vec<Complex64> = moduli.iter().zip(&args).map(|(r, t)| Complex64::from_polar(*r, *t)).collect();
        let shadow = a.shadow().unwrap();
        let base = certify(&shadow);
        let moved = certify(&shadow_rescale(&shadow, &a.structure, &mu).unwrap());
        prop_assert_eq!(moved.directions.len(), base.directions.len());
        prop_assert_eq!(moved.parabolically_attracting, base.parabolically_attracting);
        for d in &base.directions {
            let w = transport_direction(&a.structure, &mu, &d.v);
            let i = moved.find_direction(&w);
            prop_assert!(i.is_some());
            let m = &moved.directions[i.unwrap()];
            prop_assert!(projective_distance(&m.v, &w) < 1e-8);
            for x in &d.directors {
                prop_assert!(m.directors.iter().any(|y| (x - y).norm() < 1e-8));
            }
        }
    }

    #[test]
    fn generators_ignore_monoid_order(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let a = ex1a();
        let mut monoid = resonance_monoid(&a.spec, 21).unwrap();
        let mut reference = find_generators(&monoid);
        reference.sort();
        monoid.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let mut g = find_generators(&monoid);
        g.sort();
        prop_assert_eq!(g, reference);
    }
}
