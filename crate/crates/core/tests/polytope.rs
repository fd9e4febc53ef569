mod common;

use obliquebart::polytope::{lp_solve, phi_range, Direction, Halfspace, LeafPolytope, LpOutcome, PhiRange, Sense};
use proptest::prelude::*;

fn normalize(v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 1e-3).then(|| v.into_iter().map(|x| x / n).collect())
}

/// A direction in `p` dimensions and up to four cuts, all passing within
/// 0.6 of a shared interior point so the region is never empty.
fn case() -> impl Strategy<Value = (Vec<f64>, Vec<(Vec<f64>, f64)>)> {
    (1usize..=3).prop_flat_map(|p| {
        let vec = prop::collection::vec(-1.0f64..1.0, p);
        (
            vec.clone(),
            prop::collection::vec(-0.8f64..0.8, p),
            prop::collection::vec((vec, 0.0f64..0.6), 0..=4),
        )
            .prop_filter_map("degenerate direction", |(phi, z, cuts)| {
                let phi = normalize(phi)?;
                let cuts = cuts
                    .into_iter()
                    .map(|(n, slack)| {
                        let n = normalize(n)?;
                        let off = n.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() + slack;
                        Some((n, off))
                    })
                    .collect::<Option<Vec<_>>>()?;
                Some((phi, cuts))
            })
    })
}

fn polytope(p: usize, cuts: &[(Vec<f64>, f64)]) -> LeafPolytope<f64> {
    let mut poly = LeafPolytope::unit_box(p);
    for (n, off) in cuts {
        poly.push(Halfspace::new(n.clone(), *off, Sense::Less));
    }
    poly
}

fn range(poly: &LeafPolytope<f64>, phi: &[f64]) -> (f64, f64) {
    match phi_range(poly, phi).unwrap() {
        PhiRange::Interval { lo, hi } => (lo, hi),
        PhiRange::Empty => panic!("region should not be empty"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_vertex_enumeration((phi, cuts) in case()) {
        let (lo, hi) = range(&polytope(phi.len(), &cuts), &phi);
        let (olo, ohi) = common::vertex_range(&phi, &cuts, 1e-9).expect("nonempty");
        prop_assert!((lo - olo).abs() < 1e-9 && (hi - ohi).abs() < 1e-9);
    }

    #[test]
    fn extra_cut_shrinks_range((phi, cuts) in case()) {
        prop_assume!(!cuts.is_empty());
        let p = phi.len();
        let (wlo, whi) = range(&polytope(p, &cuts[..cuts.len() - 1]), &phi);
        let (nlo, nhi) = range(&polytope(p, &cuts), &phi);
        prop_assert!(nlo >= wlo - 1e-9 && nhi <= whi + 1e-9);
    }

    #[test]
    fn optimal_points_are_feasible((phi, cuts) in case()) {
        let poly = polytope(phi.len(), &cuts);
        for dir in [Direction::Minimize, Direction::Maximize] {
            match lp_solve(&poly, &phi, dir).unwrap() {
                LpOutcome::Optimal { value, point } => {
                    prop_assert!(poly.contains(&point, 1e-9));
                    let v: f64 = phi.iter().zip(&point).map(|(a, b)| a * b).sum();
                    prop_assert!((v - value).abs() < 1e-9);
                }
                LpOutcome::Empty => prop_assert!(false, "unexpected empty region"),
            }
        }
    }

    #[test]
    fn single_precision_agrees((phi, cuts) in case()) {
        let (lo, hi) = range(&polytope(phi.len(), &cuts), &phi);
        let mut poly32 = LeafPolytope::<f32>::unit_box(phi.len());
        for (n, off) in &cuts {
            poly32.push(Halfspace::new(n.iter().map(|&v| v as f32).collect(), *off as f32, Sense::Less));
        }
        let phi32: Vec<f32> = phi.iter().map(|&v| v as f32).collect();
        match phi_range(&poly32, &phi32).unwrap() {
            PhiRange::Interval { lo: l32, hi: h32 } => {
                prop_assert!((l32 as f64 - lo).abs() < 1e-3 && (h32 as f64 - hi).abs() < 1e-3);
            }
            PhiRange::Empty => prop_assert!(false, "f32 region came out empty"),
        }
    }
}

#[test]
fn disjoint_cuts_are_empty() {
    let poly = LeafPolytope::unit_box(2)
        .with(Halfspace::new(vec![1.0, 0.0], -0.5, Sense::Less))
        .with(Halfspace::new(vec![1.0, 0.0], 0.5, Sense::GreaterEq));
    assert_eq!(phi_range(&poly, &[0.6, 0.8]).unwrap(), PhiRange::Empty);
    assert_eq!(common::vertex_range(&[0.6, 0.8], &[(vec![1.0, 0.0], -0.5), (vec![-1.0, 0.0], -0.5)], 1e-9), None);
}
