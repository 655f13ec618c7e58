use affdim::code_tree::{
    build_code_tree, compose, deterministic_tree, partition_sum, sample_graph_sequence, AffineMap,
    CodeTreeRealization, IfsFamily, LogPartitionTable,
};
use affdim::dimension::{box_dimension, pressure_zero};
use affdim::exterior::{
    apply_map, compound_matrix, exterior_inner, hodge_star, wedge, ExteriorVector, MultiIndex,
};
use affdim::fs::{check_cm, iterate_closure, LinearFamily};
use affdim::io::{parse_system, parse_system_file, serialize_system};
use affdim::sampling::{gaussian_matrix, gaussian_vector, random_orthogonal, stream_rng};
use affdim::singular::SingularSpectrum;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use std::path::PathBuf;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn random_exterior(seed: u64, d: usize, m: usize) -> ExteriorVector {
    let mut rng = stream_rng(seed, 99);
    let n = MultiIndex::all(d, m).len();
    ExteriorVector::from_coords(d, m, gaussian_vector(&mut rng, n)).unwrap()
}

/// A matrix with singular values drawn from `[lo, hi]`.
fn contraction(seed: u64, d: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, 7);
    let u = random_orthogonal(&mut rng, d);
    let v = random_orthogonal(&mut rng, d);
    let s = DVector::from_fn(d, |_, _| rng.random_range(lo..=hi));
    u * DMatrix::from_diagonal(&s) * v
}

fn similarity_tree(r: f64, offsets: &[f64], depth: usize) -> CodeTreeRealization {
    let maps = offsets
        .iter()
        .enumerate()
        .map(|(i, &a)| AffineMap::new(DMatrix::from_element(1, 1, r), i, DVector::from_element(1, a)).unwrap())
        .collect();
    deterministic_tree(IfsFamily::new("sim", maps).unwrap(), depth).unwrap()
}

fn constant_tree(seed: u64, d: usize, maps: usize, depth: usize) -> CodeTreeRealization {
    let maps = (0..maps)
        .map(|i| {
            let t = contraction(seed.wrapping_add(i as u64 * 7919), d, 0.1, 0.45);
            AffineMap::new(t, i, DVector::zeros(d)).unwrap()
        })
        .collect();
    deterministic_tree(IfsFamily::new("c", maps).unwrap(), depth).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn cauchy_binet(seed in any::<u64>(), d in 2usize..=5) {
        let mut rng = stream_rng(seed, 0);
        let a = gaussian_matrix(&mut rng, d);
        let b = gaussian_matrix(&mut rng, d);
        for m in 0..=d {
            let ab = compound_matrix(&(&a * &b), m).unwrap().into_matrix();
            let ca = compound_matrix(&a, m).unwrap().into_matrix();
            let cb = compound_matrix(&b, m).unwrap().into_matrix();
            let scale = ca.norm() * cb.norm();
            prop_assert!((ab - &ca * &cb).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn top_grade_is_determinant(seed in any::<u64>(), d in 1usize..=5) {
        let a = gaussian_matrix(&mut stream_rng(seed, 0), d);
        let top = compound_matrix(&a, d).unwrap().into_matrix();
        prop_assert_eq!(top.shape(), (1, 1));
        let det = a.determinant();
        prop_assert!((top[(0, 0)] - det).abs() <= 1e-10 * a.norm().powi(d as i32));
    }

    #[test]
    fn double_star_sign(seed in any::<u64>(), d in 1usize..=5, m in 0usize..=5) {
        prop_assume!(m <= d);
        let v = random_exterior(seed, d, m);
        let twice = hodge_star(&hodge_star(&v));
        let sign = if (m * (d - m)) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((twice.coords() - v.coords() * sign).amax() <= 1e-14 * v.coords().amax().max(1.0));
    }

    #[test]
    fn compound_adjoint(seed in any::<u64>(), d in 2usize..=5, m in 1usize..=5) {
        prop_assume!(m <= d);
        let a = gaussian_matrix(&mut stream_rng(seed, 1), d);
        let v = random_exterior(seed, d, m);
        let w = random_exterior(seed ^ 0xabcdef, d, m);
        let lhs = exterior_inner(&apply_map(&a, &v).unwrap(), &w).unwrap();
        let rhs = exterior_inner(&v, &apply_map(&a.transpose(), &w).unwrap()).unwrap();
        let scale = compound_matrix(&a, m).unwrap().matrix().norm() * v.norm() * w.norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn wedge_commutes_with_maps(seed in any::<u64>(), d in 2usize..=5, m in 1usize..=5) {
        prop_assume!(m <= d);
        let mut rng = stream_rng(seed, 2);
        let a = gaussian_matrix(&mut rng, d);
        let vs: Vec<_> = (0..m).map(|_| gaussian_vector(&mut rng, d)).collect();
        let mapped: Vec<_> = vs.iter().map(|v| &a * v).collect();
        let lhs = wedge(&mapped).unwrap();
        let rhs = apply_map(&a, &wedge(&vs).unwrap()).unwrap();
        prop_assert!((lhs.coords() - rhs.coords()).norm() <= 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn phi_submultiplicative_below_dimension(seed in any::<u64>(), d in 2usize..=5, j in 0usize..=20) {
        let mut rng = stream_rng(seed, 3);
        let a = gaussian_matrix(&mut rng, d);
        let b = gaussian_matrix(&mut rng, d);
        let s = d as f64 * j as f64 / 20.0;
        let (sa, sb, sab) = (
            SingularSpectrum::of_unchecked(&a),
            SingularSpectrum::of_unchecked(&b),
            SingularSpectrum::of_unchecked(&(&a * &b)),
        );
        let excess = (sab.log_phi(s) - sa.log_phi(s) - sb.log_phi(s)).exp_m1();
        prop_assert!(excess <= 1e-12, "excess {excess:e} at s = {s}");
    }

    #[test]
    fn phi_multiplicative_beyond_dimension(seed in any::<u64>(), d in 2usize..=5, t in 0.0f64..=1.0) {
        let mut rng = stream_rng(seed, 4);
        let a = gaussian_matrix(&mut rng, d);
        let b = gaussian_matrix(&mut rng, d);
        let s = d as f64 + t;
        let (sa, sb, sab) = (
            SingularSpectrum::of_unchecked(&a),
            SingularSpectrum::of_unchecked(&b),
            SingularSpectrum::of_unchecked(&(&a * &b)),
        );
        let gap = (sab.log_phi(s) - sa.log_phi(s) - sb.log_phi(s)).abs();
        let floor = 64.0 * f64::EPSILON * (sab.condition() + sa.condition() + sb.condition());
        prop_assert!(gap <= floor, "gap {gap:e} floor {floor:e}");
    }

    #[test]
    fn phi_continuous_and_decreasing(seed in any::<u64>(), d in 1usize..=5) {
        let t = contraction(seed, d, 0.05, 0.95);
        let spec = SingularSpectrum::of_unchecked(&t);
        for m in 1..=d {
            let at = spec.log_phi(m as f64);
            for s in [m as f64 - 1e-13, m as f64 + 1e-13] {
                prop_assert!((spec.log_phi(s) - at).abs() <= 1e-12 * at.abs().max(1.0));
            }
        }
        let mut prev = spec.phi(0.0);
        for j in 1..=40 {
            let cur = spec.phi((d + 1) as f64 * j as f64 / 40.0);
            prop_assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn compound_norm_identity(seed in any::<u64>(), d in 2usize..=5) {
        let t = gaussian_matrix(&mut stream_rng(seed, 5), d);
        let spec = SingularSpectrum::of_unchecked(&t);
        for m in 1..=d {
            let prod: f64 = spec.values()[..m].iter().product();
            let norm = compound_matrix(&t, m).unwrap().matrix().singular_values().max();
            prop_assert!((prod - norm).abs() <= 1e-8 * norm);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn verdict_kind_is_scale_invariant(seed in any::<u64>(), d in 2usize..=3, n in 1usize..=4, alpha in 0.01f64..100.0) {
        let mut rng = stream_rng(seed, 6);
        let fam = LinearFamily::new((0..n).map(|_| gaussian_matrix(&mut rng, d)).collect()).unwrap();
        for m in 1..d {
            let base = check_cm(&fam, m, 200, 1e-9, seed).unwrap();
            let scaled = check_cm(&fam.scaled(alpha), m, 200, 1e-9, seed).unwrap();
            prop_assert_eq!(base.kind(), scaled.kind());
        }
    }

    #[test]
    fn too_few_maps_fail(seed in any::<u64>(), d in 2usize..=5, m in 1usize..=4) {
        prop_assume!(m < d);
        let required = MultiIndex::all(d, m).len();
        let mut rng = stream_rng(seed, 8);
        let n = 1 + (seed as usize) % (required - 1).max(1);
        prop_assume!(n < required);
        let fam = LinearFamily::new((0..n).map(|_| gaussian_matrix(&mut rng, d)).collect()).unwrap();
        prop_assert!(check_cm(&fam, m, 50, 1e-9, seed).unwrap().is_fail());
    }

    #[test]
    fn shared_invariant_line_fails(seed in any::<u64>(), n in 1usize..=3, depth in 1usize..=3) {
        let mut rng = stream_rng(seed, 9);
        let maps = (0..n)
            .map(|_| {
                let mut t = gaussian_matrix(&mut rng, 2);
                t[(1, 0)] = 0.0;
                t[(0, 0)] += 3.0f64.copysign(t[(0, 0)]);
                t[(1, 1)] += 3.0f64.copysign(t[(1, 1)]);
                t
            })
            .collect();
        let fam = iterate_closure(&LinearFamily::new(maps).unwrap(), depth).unwrap();
        prop_assert!(check_cm(&fam, 1, 100, 1e-9, seed).unwrap().is_fail());
    }

    #[test]
    fn spec_round_trip(seed in any::<u64>(), p in 0.05f64..0.95) {
        let mut spec = parse_system_file(&fixture("graph.json")).unwrap();
        let mut rng = stream_rng(seed, 10);
        let graph = spec.graph.as_mut().unwrap();
        graph.labels[0].prob = p;
        graph.labels[1].prob = 1.0 - p;
        for fam in &mut spec.families {
            for map in &mut fam.maps {
                map.t[0][0] = rng.random_range(0.2..=0.4);
            }
        }
        spec.translations = Some((1..=6).map(|c| (c, vec![rng.random::<f64>()])).collect());
        let back = parse_system(&serialize_system(&spec)).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn partition_sums_are_deterministic(seed in any::<u64>(), s in 0.0f64..2.0) {
        let tree = constant_tree(seed, 2, 3, 7);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| partition_sum(&tree, 7, s)).unwrap();
        let b = four.install(|| partition_sum(&tree, 7, s)).unwrap();
        let c = four.install(|| partition_sum(&tree, 7, s)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
        prop_assert_eq!(b.to_bits(), c.to_bits());
        let rebuilt = constant_tree(seed, 2, 3, 7);
        prop_assert!(tree.subtree_matches(0, 0, &rebuilt, 0, 0));
    }

    #[test]
    fn sums_submultiplicative_on_constant_trees(seed in any::<u64>(), s in 0.0f64..2.5) {
        let tree = constant_tree(seed, 2, 2, 8);
        let sum = |k: usize| if k == 0 { 1.0 } else { partition_sum(&tree, k, s).unwrap() };
        for k in 1..=4 {
            for l in 1..=4 {
                prop_assert!(sum(k + l) <= sum(k) * sum(l) * (1.0 + 1e-12));
            }
        }
        let rates: Vec<f64> = [1, 2, 4, 8].iter().map(|&k| LogPartitionTable::new(&tree, k).unwrap().pressure(s)).collect();
        for w in rates.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn composed_maps_stay_in_singular_range(seed in any::<u64>(), word in proptest::collection::vec(0usize..3, 1..=6)) {
        let tree = constant_tree(seed, 3, 3, 6);
        let (lo, hi) = tree.singular_range();
        let (t, _) = compose(&tree, &word).unwrap();
        let spec = SingularSpectrum::of_unchecked(&t);
        let k = word.len() as i32;
        prop_assert!(spec.smallest() >= lo.powi(k) * (1.0 - 1e-12));
        prop_assert!(spec.largest() <= hi.powi(k) * (1.0 + 1e-12));
    }

    #[test]
    fn neck_subtrees_coincide(seed in any::<u64>(), thinning in 1usize..=3) {
        let spec = parse_system_file(&fixture("graph.json")).unwrap();
        let gs = spec.graph_system(&spec.translation_assignment(seed)).unwrap().unwrap();
        let g = sample_graph_sequence(&gs, seed, 10);
        let tree = build_code_tree(&gs, &g, gs.v0(), 10, thinning).unwrap();
        prop_assert!(tree.verify_necks());
        prop_assert!(tree.necks().windows(2).all(|w| w[0] < w[1]));
        for &n in tree.necks() {
            if n < tree.depth() {
                for b in 1..tree.levels()[n].len() {
                    prop_assert!(tree.subtrees_equal(n, 0, b));
                }
            }
        }
    }

    #[test]
    fn pressure_zero_ignores_thinning(seed in any::<u64>()) {
        let spec = parse_system_file(&fixture("graph.json")).unwrap();
        let gs = spec.graph_system(&spec.translation_assignment(seed)).unwrap().unwrap();
        let g = sample_graph_sequence(&gs, seed, 9);
        let tol = 1e-7;
        let zeros: Vec<f64> = [1, 2, 4]
            .iter()
            .map(|&th| pressure_zero(&build_code_tree(&gs, &g, gs.v0(), 9, th).unwrap(), 9, tol).unwrap().s0)
            .collect();
        prop_assert!((zeros[0] - zeros[1]).abs() <= tol);
        prop_assert!((zeros[0] - zeros[2]).abs() <= tol);
    }

    #[test]
    fn similarity_zero_is_exact_at_every_k(r in 0.1f64..0.45, m in 2usize..=4, k in 1usize..=5) {
        let offsets: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let tree = similarity_tree(r, &offsets, 5);
        let z = pressure_zero(&tree, k, 1e-9).unwrap();
        let expected = (m as f64).ln() / -r.ln();
        prop_assert!((z.s0 - expected).abs() <= 1e-8, "{} vs {}", z.s0, expected);
    }

    #[test]
    fn box_dimension_within_bounds(seed in any::<u64>(), d in 1usize..=3, n in 1000usize..3000, spread in 0usize..3) {
        let mut rng = stream_rng(seed, 11);
        let pts: Vec<DVector<f64>> = (0..n)
            .map(|_| {
                let mut p = DVector::from_fn(d, |_, _| rng.random::<f64>());
                for c in p.iter_mut().skip(d - spread.min(d - 1)) {
                    *c = 0.0;
                }
                p
            })
            .collect();
        let fit = box_dimension(&pts, 1, 8).unwrap();
        prop_assert!(fit.estimate >= 0.0 && fit.estimate <= d as f64 + 0.05, "{}", fit.estimate);
    }
}
