//! Seeded property tests for the algebraic laws the constructions rely on.

use std::sync::Arc;

use orbifold_double::atlas::{descend, example_z2_abc, restrict, validate_section};
use orbifold_double::double::{
    double_braiding, double_tensor, roundtrip_double, roundtrip_inertia, tau_apply, theta, verify_half_braiding,
    InertiaModule, PanelOptions,
};
use orbifold_double::equivariant::{
    find_isomorphism, hom_dim, hom_space, pullback, random_combination, random_module, rng_from_seed, swap, tensor,
    EquivariantModule, ModuleMap,
};
use orbifold_double::group::{splitting_prime, FiniteGroup};
use orbifold_double::gset::{inertia, GroupAction};
use orbifold_double::linalg::{solve_linear, Matrix, PrimeField};
use orbifold_double::twisted::{twisted_quotient, FunctionRing};
use proptest::prelude::*;

/// A small zoo of actions with |G| ≤ 6 and |X| ≤ 4.
fn action(i: usize) -> Arc<GroupAction> {
    let (s3, perms, _) = FiniteGroup::from_permutations(&[vec![1, 0, 2], vec![1, 2, 0]]).unwrap();
    let a = match i % 8 {
        0 => GroupAction::point(FiniteGroup::cyclic(2)),
        1 => GroupAction::point(FiniteGroup::cyclic(3)),
        2 => GroupAction::point(s3),
        3 => GroupAction::new(FiniteGroup::cyclic(2), 3, vec![vec![0, 1, 2], vec![1, 0, 2]]).unwrap(),
        4 => GroupAction::new(s3, 3, perms).unwrap(),
        5 => {
            let table = perms.iter().map(|p| p.iter().copied().chain([3]).collect()).collect();
            GroupAction::new(s3, 4, table).unwrap()
        }
        6 => GroupAction::regular(FiniteGroup::cyclic(4)),
        _ => GroupAction::new(FiniteGroup::cyclic(4), 2, vec![vec![0, 1], vec![1, 0], vec![0, 1], vec![1, 0]]).unwrap(),
    };
    Arc::new(a)
}

fn field_for(a: &GroupAction) -> PrimeField {
    PrimeField::new(splitting_prime(a.group()).unwrap() as u64).unwrap()
}

fn random_endo(m: &EquivariantModule, seed: u64) -> ModuleMap {
    let basis = hom_space(m, m).unwrap();
    random_combination(&basis, m, m, &mut rng_from_seed(seed))
}

fn random_matrix(field: PrimeField, rows: usize, cols: usize, entries: &[u32]) -> Matrix {
    let data = (0..rows * cols).map(|i| entries[i % entries.len()] % field.modulus()).collect();
    Matrix::from_vec(field, rows, cols, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rank_plus_nullity(rows in 1usize..6, cols in 1usize..6, entries in prop::collection::vec(0u32..7, 1..36)) {
        let field = PrimeField::new(7).unwrap();
        let m = random_matrix(field, rows, cols, &entries);
        let kernel = m.kernel();
        prop_assert_eq!(m.rank() + kernel.len(), cols);
        for v in &kernel {
            prop_assert!(m.mul_vec(v).iter().all(|&e| e == 0));
        }
    }

    #[test]
    fn solutions_solve(rows in 1usize..5, cols in 1usize..5, entries in prop::collection::vec(0u32..5, 1..25), x in prop::collection::vec(0u32..5, 5)) {
        let field = PrimeField::new(5).unwrap();
        let a = random_matrix(field, rows, cols, &entries);
        let b = a.mul_vec(&x[..cols]);
        let s = solve_linear(&a, &b).unwrap();
        prop_assert_eq!(a.mul_vec(&s.particular), b);
        prop_assert_eq!(s.kernel.len(), cols - a.rank());
    }

    #[test]
    fn inverse_is_two_sided(n in 1usize..5, entries in prop::collection::vec(0u32..11, 1..25)) {
        let field = PrimeField::new(11).unwrap();
        let m = random_matrix(field, n, n, &entries);
        match m.inverse() {
            Ok(inv) => {
                prop_assert!(m.mul(&inv).is_identity());
                prop_assert!(inv.mul(&m).is_identity());
            }
            Err(_) => prop_assert!(m.rank() < n),
        }
    }

    #[test]
    fn tensor_is_functorial(i in 0usize..8, seed in any::<u64>()) {
        let a = action(i);
        let field = field_for(&a);
        let m = random_module(&a, field, 2, seed).unwrap();
        let n = random_module(&a, field, 2, seed ^ 1).unwrap();
        let (f1, f2) = (random_endo(&m, seed ^ 2), random_endo(&m, seed ^ 3));
        let (g1, g2) = (random_endo(&n, seed ^ 4), random_endo(&n, seed ^ 5));
        let lhs = f1.then(&f2).unwrap().tensor(&g1.then(&g2).unwrap()).unwrap();
        let rhs = f1.tensor(&g1).unwrap().then(&f2.tensor(&g2).unwrap()).unwrap();
        prop_assert_eq!(lhs.components(), rhs.components());
    }

    #[test]
    fn swap_is_natural_and_involutive(i in 0usize..8, seed in any::<u64>()) {
        let a = action(i);
        let field = field_for(&a);
        let m = random_module(&a, field, 2, seed).unwrap();
        let n = random_module(&a, field, 2, seed ^ 7).unwrap();
        let f = random_endo(&m, seed ^ 8);
        let g = random_endo(&n, seed ^ 9);
        let s = swap(&m, &n).unwrap();
        let lhs = f.tensor(&g).unwrap().then(&s).unwrap();
        let rhs = s.then(&g.tensor(&f).unwrap()).unwrap();
        prop_assert_eq!(lhs.components(), rhs.components());
        let back = s.then(&swap(&n, &m).unwrap()).unwrap();
        prop_assert!(back.components().iter().all(Matrix::is_identity));
    }

    #[test]
    fn hom_dimension_is_symmetric(i in 0usize..8, seed in any::<u64>()) {
        let a = action(i);
        let field = field_for(&a);
        let m = random_module(&a, field, 2, seed).unwrap();
        let n = random_module(&a, field, 2, seed ^ 11).unwrap();
        prop_assert_eq!(hom_dim(&m, &n).unwrap(), hom_dim(&n, &m).unwrap());
    }

    #[test]
    fn pullback_along_projection_is_monoidal(i in 0usize..8, seed in any::<u64>()) {
        let a = action(i);
        let field = field_for(&a);
        let inert = inertia(&a);
        let m = random_module(&a, field, 2, seed).unwrap();
        let n = random_module(&a, field, 2, seed ^ 13).unwrap();
        let pi = inert.projection();
        let lhs = pullback(pi, &tensor(&m, &n).unwrap()).unwrap();
        let rhs = tensor(&pullback(pi, &m).unwrap(), &pullback(pi, &n).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn inertia_round_trips(i in 0usize..8, seed in any::<u64>()) {
        let a = action(i);
        let field = field_for(&a);
        let inert = Arc::new(inertia(&a));
        let mp = InertiaModule::random(&inert, field, 2, seed).unwrap();
        prop_assert!(roundtrip_inertia(&mp).unwrap().is_isomorphism());
        let d = theta(&mp).unwrap();
        prop_assert!(roundtrip_double(&d, &inert).unwrap().is_isomorphism());
        let opts = PanelOptions { seed, random_modules: 1, max_dim: 1 };
        prop_assert!(verify_half_braiding(&d, &opts).passed());
    }

    #[test]
    fn tau_is_natural_in_the_probe(i in 0usize..8, seed in any::<u64>()) {
        let a = action(i);
        let field = field_for(&a);
        let inert = Arc::new(inertia(&a));
        let d = theta(&InertiaModule::random(&inert, field, 2, seed).unwrap()).unwrap();
        let n = random_module(&a, field, 2, seed ^ 17).unwrap();
        let f = random_endo(&n, seed ^ 19);
        let t = tau_apply(&d, &n).unwrap();
        let one_f = d.module().identity_map().tensor(&f).unwrap();
        let lhs = one_f.then(&t).unwrap();
        let rhs = t.then(&one_f).unwrap();
        prop_assert_eq!(lhs.components(), rhs.components());
    }

    #[test]
    fn braiding_is_invertible_and_tensor_is_valid(i in 0usize..8, seed in any::<u64>()) {
        let a = action(i);
        let field = field_for(&a);
        let inert = Arc::new(inertia(&a));
        let d1 = theta(&InertiaModule::random(&inert, field, 2, seed).unwrap()).unwrap();
        let d2 = theta(&InertiaModule::random(&inert, field, 2, seed ^ 23).unwrap()).unwrap();
        prop_assert!(double_braiding(&d1, &d2).unwrap().is_isomorphism());
        let t = double_tensor(&d1, &d2).unwrap();
        let opts = PanelOptions { seed, random_modules: 1, max_dim: 1 };
        prop_assert!(verify_half_braiding(&t, &opts).passed());
    }

    #[test]
    fn quotient_dimension_counts_fixed_points(i in 0usize..8) {
        let a = action(i);
        let ring = FunctionRing::new(a.clone(), field_for(&a));
        for h in a.group().elements() {
            prop_assert_eq!(twisted_quotient(&ring, h).unwrap().dim, a.fixed_points(h).len());
        }
    }

    #[test]
    fn restrict_then_descend(seed in any::<u64>()) {
        let atlas = example_z2_abc();
        let field = PrimeField::new(3).unwrap();
        let m = random_module(atlas.base(), field, 2, seed).unwrap();
        let s = restrict(&atlas, &m).unwrap();
        prop_assert!(validate_section(&atlas, &s).is_ok());
        let glued = descend(&atlas, &s).unwrap().module;
        prop_assert!(find_isomorphism(&glued, &m, &mut rng_from_seed(seed)).unwrap().is_some());
    }
}
