use std::path::Path;

use atol::io::{read_measures, write_measures};
use atol::quantizer::lloyd_fit_traced;
use atol::{
    distortion, empirical_mean, voronoi_assign, Bandwidth, Codebook, ContrastFamily, MeasureCollection,
    PointMeasure, QuantizerConfig, VectorizationMap,
};
use proptest::prelude::*;

const DIM: usize = 2;

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, DIM)
}

fn measure(max_atoms: usize) -> impl Strategy<Value = PointMeasure> {
    prop::collection::vec((point(), 0.0f64..3.0), 0..max_atoms).prop_map(|atoms| {
        let mut m = PointMeasure::empty(DIM);
        for (x, w) in atoms {
            m.push(&x, w).unwrap();
        }
        m
    })
}

/// Codebook with pairwise-distinct centers.
fn codebook(max: usize) -> impl Strategy<Value = Codebook> {
    prop::collection::vec(point(), 2..max).prop_filter_map("distinct centers", |c| {
        let cb = Codebook::new(DIM, &c).ok()?;
        cb.find_duplicate().is_none().then_some(cb)
    })
}

fn family() -> impl Strategy<Value = ContrastFamily> {
    prop_oneof![Just(ContrastFamily::Laplacian), Just(ContrastFamily::Gaussian)]
}

fn map(max: usize) -> impl Strategy<Value = VectorizationMap> {
    (codebook(max), family()).prop_map(|(cb, f)| VectorizationMap::with_bandwidth(cb, f, Bandwidth::Adaptive).unwrap())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn transform_is_linear(m in map(8), a in measure(12), b in measure(12), alpha in 0.0f64..5.0) {
        let combined = a.scaled(alpha).unwrap().superpose(&b).unwrap();
        let lhs = m.transform(&combined).unwrap();
        let va = m.transform(&a).unwrap();
        let vb = m.transform(&b).unwrap();
        for i in 0..m.budget() {
            prop_assert!(close(lhs[i], alpha * va[i] + vb[i]));
        }
    }

    #[test]
    fn components_bounded_by_mass(m in map(8), x in measure(20)) {
        let mass = x.mass();
        for v in m.transform(&x).unwrap() {
            prop_assert!(v >= 0.0);
            prop_assert!(v <= mass * (1.0 + 1e-12));
        }
    }

    #[test]
    fn atom_order_does_not_matter(m in map(8), x in measure(20), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..x.len()).collect();
        let n = order.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let mut shuffled = PointMeasure::empty(DIM);
        for &k in &order {
            shuffled.push(x.point(k), x.weight(k)).unwrap();
        }
        let a = m.transform(&x).unwrap();
        let b = m.transform(&shuffled).unwrap();
        for i in 0..m.budget() {
            prop_assert!(close(a[i], b[i]));
        }
    }

    #[test]
    fn merging_duplicates_preserves_features(m in map(6), x in measure(8)) {
        let doubled = x.superpose(&x).unwrap();
        let merged = doubled.merge_duplicates();
        prop_assert!(merged.len() <= x.len());
        let a = m.transform(&doubled).unwrap();
        let b = m.transform(&merged).unwrap();
        for i in 0..m.budget() {
            prop_assert!(close(a[i], b[i]));
        }
    }

    #[test]
    fn laplacian_contrast_is_lipschitz(cb in codebook(6), x in point(), y in point()) {
        let m = VectorizationMap::with_bandwidth(cb, ContrastFamily::Laplacian, Bandwidth::Adaptive).unwrap();
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        for i in 0..m.budget() {
            let gap = (m.contrast(i, &x) - m.contrast(i, &y)).abs();
            prop_assert!(gap <= dist / m.sigmas()[i] + 1e-12);
        }
    }

    #[test]
    fn voronoi_matches_naive_scan(centers in prop::collection::vec(point(), 1..10), x in point()) {
        let cb = Codebook::new(DIM, &centers).unwrap();
        let d2 = |c: &Vec<f64>| c.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let best = centers.iter().map(d2).fold(f64::INFINITY, f64::min);
        let expected = centers.iter().position(|c| d2(c) == best).unwrap();
        prop_assert_eq!(voronoi_assign(&x, &cb), expected);
    }

    #[test]
    fn csv_round_trip_is_exact(ms in prop::collection::vec(measure(6), 1..5)) {
        let c = MeasureCollection::new(DIM, ms).unwrap();
        let text = write_measures(&c);
        let back = read_measures(text.as_bytes(), Path::new("mem")).unwrap();
        // measures without atoms cannot appear in a long-format file
        let nonempty: Vec<&PointMeasure> = c.measures().iter().filter(|m| !m.is_empty()).collect();
        prop_assert_eq!(back.len(), nonempty.len());
        for (a, b) in back.measures().iter().zip(nonempty) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn mean_measure_mass_is_average_mass(ms in prop::collection::vec(measure(6), 1..6)) {
        let mean = empirical_mean(&ms).unwrap();
        let avg = ms.iter().map(PointMeasure::mass).sum::<f64>() / ms.len() as f64;
        prop_assert!(close(mean.mass(), avg));
    }

    #[test]
    fn lloyd_distortion_never_increases(
        pts in prop::collection::vec(point(), 6..30),
        b in 1usize..5,
        seed in any::<u64>(),
    ) {
        let m = PointMeasure::unit(DIM, &pts).unwrap();
        prop_assume!(m.merge_duplicates().len() >= b);
        let fit = lloyd_fit_traced(std::slice::from_ref(&m), &QuantizerConfig::new(b, seed)).unwrap();
        for w in fit.distortion_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn extra_center_never_increases_distortion(centers in prop::collection::vec(point(), 1..6), extra in point(), x in measure(15)) {
        prop_assume!(x.mass() > 0.0);
        let cb = Codebook::new(DIM, &centers).unwrap();
        let mut more = centers.clone();
        more.push(extra);
        let cb2 = Codebook::new(DIM, &more).unwrap();
        let xs = std::slice::from_ref(&x);
        prop_assert!(distortion(&cb2, xs).unwrap() <= distortion(&cb, xs).unwrap() * (1.0 + 1e-12));
    }
}
