use proptest::prelude::*;
use purefilter::torus::{alpha_star, kernel_points, GridSpec, IntervalSet, Rat, TorusRat};

const DENOM: i64 = 24;

fn interval_set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((-(DENOM)..DENOM, 0..DENOM), 0..4).prop_map(|pieces| {
        IntervalSet::from_pairs(
            pieces
                .into_iter()
                .map(|(a, len)| (Rat::new(a, DENOM), Rat::new(a + len, DENOM))),
        )
        .unwrap()
    })
}

/// Points `k / (D·N·2)`, fine enough to separate every set built here and
/// its images and preimages.
fn probe_points(scale: usize) -> Vec<TorusRat> {
    let d = DENOM * scale as i64 * 2;
    (0..d).map(|k| TorusRat::from_frac(k, d)).collect()
}

fn in_image(s: &IntervalSet, x: &TorusRat, scale: usize) -> bool {
    (0..scale).any(|k| {
        let y = TorusRat::new((x.value().clone() + Rat::from_integer(k as i64)) / Rat::from_integer(scale as i64));
        s.contains(&y)
    })
}

proptest! {
    #[test]
    fn image_measure_is_bounded(s in interval_set(), scale in 2usize..5) {
        let n = Rat::from_integer(scale as i64);
        let bound = (n * s.measure()).min(Rat::one());
        prop_assert!(s.image_under_alpha_star(scale).measure() <= bound);
        prop_assert_eq!(s.preimage_under_alpha_star(scale).measure(), s.measure());
    }

    #[test]
    fn image_and_preimage_match_pointwise(s in interval_set(), scale in 2usize..4) {
        let image = s.image_under_alpha_star(scale);
        let pre = s.preimage_under_alpha_star(scale);
        for x in probe_points(scale) {
            prop_assert_eq!(image.contains(&x), in_image(&s, &x, scale));
            prop_assert_eq!(pre.contains(&x), s.contains(&alpha_star(&x, scale)));
        }
    }

    #[test]
    fn image_preimage_compositions(s in interval_set(), scale in 2usize..4) {
        prop_assert!(s.is_subset_of(&s.image_under_alpha_star(scale).preimage_under_alpha_star(scale)));
        prop_assert_eq!(s.preimage_under_alpha_star(scale).image_under_alpha_star(scale), s.clone());
    }

    #[test]
    fn normalization_is_canonical(s in interval_set(), t in interval_set()) {
        prop_assert_eq!(s.normalize(), s.clone());
        let st = s.union(&t);
        prop_assert_eq!(st.normalize(), st.clone());
        let probes = probe_points(2);
        let same_points = probes.iter().all(|x| s.contains(x) == t.contains(x));
        prop_assert_eq!(same_points, s == t);
    }

    #[test]
    fn set_algebra_matches_membership(s in interval_set(), t in interval_set()) {
        let u = s.union(&t);
        let i = s.intersection(&t);
        let c = s.complement();
        for x in probe_points(2) {
            prop_assert_eq!(u.contains(&x), s.contains(&x) || t.contains(&x));
            prop_assert_eq!(i.contains(&x), s.contains(&x) && t.contains(&x));
            prop_assert_eq!(c.contains(&x), !s.contains(&x));
        }
        prop_assert_eq!(u.measure() + i.measure(), s.measure() + t.measure());
    }

    #[test]
    fn kernel_is_a_subgroup(scale in 2usize..4, n in 1u32..4, l in 1usize..4) {
        let points = kernel_points(scale, n);
        prop_assert_eq!(points.len(), scale.pow(n));
        for a in &points {
            for b in &points {
                prop_assert!(points.binary_search(&a.add(b)).is_ok());
            }
        }
        let grid = GridSpec::new(scale, l, n).unwrap();
        let cells: Vec<TorusRat> = (0..grid.cell_count()).map(|t| grid.point(t)).collect();
        for k in &points {
            let mut shifted: Vec<TorusRat> = cells.iter().map(|x| x.add(k)).collect();
            shifted.sort();
            prop_assert_eq!(&shifted, &cells);
        }
    }

    #[test]
    fn rationals_stay_reduced(p in -1000i64..1000, q in 1i64..1000) {
        let r = Rat::new(p, -q);
        let text = r.to_string();
        let back: Rat = text.parse().unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert!(r.denom() > &0.into());
        let x = TorusRat::new(r);
        prop_assert!(x.value() >= &Rat::zero() && x.value() < &Rat::one());
    }
}

#[test]
fn alpha_star_on_sevenths() {
    assert_eq!(alpha_star(&TorusRat::from_frac(3, 7), 2), TorusRat::from_frac(6, 7));
    assert_eq!(alpha_star(&TorusRat::from_frac(1, 4), 2), TorusRat::from_frac(1, 2));
    assert_eq!(alpha_star(&TorusRat::zero(), 2), TorusRat::zero());
}
