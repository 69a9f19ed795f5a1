mod common;

use num_traits::One;
use proptest::prelude::*;

use crepant_core::exact::ratio;
use crepant_core::pipeline;
use crepant_core::regularity::{pull_all_with_witness, verify_regularity, RegularityWitness};
use crepant_core::subdivision::{pull, pull_literal, verify, PointStore, Subdivision};
use crepant_core::sylvester::duality_map;
use crepant_core::toric::{betti_sum, fan_from_triangulation, index_formula};
use crepant_core::{BigInt, BigRat, CellPolytope, Error, LatticePoint};

fn polytope(d: usize, coords: &[i64]) -> Option<Subdivision> {
    let pts: Vec<LatticePoint> = coords.chunks(d).map(|c| LatticePoint::new(c.to_vec())).collect();
    let cp = CellPolytope::from_points(&pts).ok()?;
    if cp.dim() != d {
        return None;
    }
    let store = PointStore::new(cp.lattice_points_bruteforce().ok()?).ok()?;
    Subdivision::trivial(store, cp.vertices()).ok()
}

/// Zero on the vertices of the single cell, one elsewhere.
fn trivial_witness(s: &Subdivision) -> RegularityWitness {
    let cell = s.cell(0);
    let values: Vec<i64> = (0..s.store().len() as u32).map(|i| i64::from(!cell.contains(&i))).collect();
    RegularityWitness::from_ints(&values)
}

fn arb_polytope() -> impl Strategy<Value = Option<Subdivision>> {
    (1usize..=3)
        .prop_flat_map(|d| (Just(d), d + 1..=6usize))
        .prop_flat_map(|(d, k)| (Just(d), prop::collection::vec(-2i64..=2, d * k)))
        .prop_map(|(d, c)| polytope(d, &c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pull_matches_literal_definition(s in arb_polytope(), pick in any::<prop::sample::Index>()) {
        let Some(s) = s else { return Ok(()) };
        let m = pick.index(s.store().len()) as u32;
        prop_assert_eq!(pull(&s, m).unwrap(), pull_literal(&s, m).unwrap());
    }

    #[test]
    fn witnessed_pull_all_is_regular_and_unimodular_in_the_plane(s in arb_polytope()) {
        let Some(s) = s else { return Ok(()) };
        let w = trivial_witness(&s);
        let (t, w, _) = pull_all_with_witness(&s, &w, None).unwrap();
        let r = verify(&t).unwrap();
        prop_assert!(r.valid, "{:?}", r.reasons);
        prop_assert_eq!(&r.volume_checksum, &r.ambient_nvol);
        if t.dim() <= 2 {
            prop_assert!(r.unimodular);
        }
        prop_assert!(verify_regularity(&t, &w).unwrap().regular);
        let cells: Vec<Vec<u32>> = t.cells().map(<[u32]>::to_vec).collect();
        prop_assert_eq!(common::regularity_violation(t.store().points(), &cells, w.values()), None);
    }

    #[test]
    fn duality_map_inverts(n in 1usize..=5, raw in prop::collection::vec(-50i64..=50, 5)) {
        let t = duality_map(n).unwrap();
        let p = LatticePoint::new(raw[..n].to_vec());
        prop_assert_eq!(t.apply_inverse(&t.apply(&p).unwrap()).unwrap(), p);
    }

    #[test]
    fn witness_strings_round_trip(vals in prop::collection::vec((-1000i64..1000, 1i64..64), 0..20)) {
        let w = RegularityWitness::new(vals.iter().map(|&(a, b)| ratio(a, b)).collect());
        prop_assert_eq!(RegularityWitness::from_strings(&w.to_strings()).unwrap(), w);
    }

    #[test]
    fn regularity_is_invariant_under_affine_shifts_and_scaling(
        a in -5i64..=5, b in -5i64..=5, c in -5i64..=5, k in 1i64..=9,
    ) {
        let art = pipeline::triangulate_p2dual(2).unwrap();
        let t = &art.triangulation;
        let shifted: Vec<BigRat> = t
            .store()
            .points()
            .iter()
            .zip(art.witness.values())
            .map(|(p, w)| w * ratio(k, 3) + BigRat::from_integer(BigInt::from(a * p.coords()[0] + b * p.coords()[1] + c)))
            .collect();
        prop_assert!(verify_regularity(t, &RegularityWitness::new(shifted)).unwrap().regular);
        let flipped = art.witness.scaled(&-BigRat::one());
        prop_assert!(!verify_regularity(t, &flipped).unwrap().regular);
    }
}

#[test]
fn closed_forms_agree_with_sylvester_products() {
    let s = common::sylvester(6);
    for n in 1..=6 {
        let sn1 = BigInt::from(s[n - 1]);
        assert_eq!(index_formula(n).unwrap(), (&sn1 - 1) * (2 * &sn1 - 3));
        let prod: BigInt = s[..=n].iter().map(|&x| BigInt::from(x - 1)).product();
        assert_eq!(betti_sum(n).unwrap(), 2 * prod);
    }
}

#[test]
fn fans_need_the_origin_inside() {
    let s = polytope(2, &[0, 0, 2, 0, 0, 2]).unwrap();
    let w = trivial_witness(&s);
    let (t, _, _) = pull_all_with_witness(&s, &w, None).unwrap();
    assert!(matches!(fan_from_triangulation(&t), Err(Error::Domain(_))));
}
