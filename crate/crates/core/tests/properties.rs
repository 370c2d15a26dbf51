mod common;

use lasskit_core::eval::{argmax_error, precision_recall_f1, top_t_set_error};
use lasskit_core::graph::{connected_components, laplacian, SparseSimilarity};
use lasskit_core::io::{read_matrix_market, write_matrix_market};
use lasskit_core::lass::{solve, Problem, SolverConfig};
use lasskit_core::linsolve::cg::{cg_solve, CgConfig};
use lasskit_core::linsolve::ShiftedFactor;
use lasskit_core::oos::{OosModel, OosMode, OosQuery};
use lasskit_core::simplex::project_simplex;
use lasskit_core::spectrum::extreme_eigenvalues;
use lasskit_core::ssl::{harmonic_solve, LabeledSplit};
use ndarray::{Array2, Axis};
use proptest::prelude::*;

use common::{dense_laplacian, random_connected_graph, random_g, rng, simplex_by_enumeration, unnormalized};

fn edges(n: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    prop::collection::vec((0..n, 0..n, 0.05f64..2.0), 0..3 * n)
}

fn graph(n: usize, raw: Vec<(usize, usize, f64)>) -> SparseSimilarity {
    let mut seen = std::collections::BTreeMap::new();
    for (i, j, w) in raw {
        if i != j {
            seen.insert((i.min(j), i.max(j)), w);
        }
    }
    SparseSimilarity::from_edges(n, seen.into_iter().map(|((i, j), w)| (i, j, w))).unwrap()
}

fn on_simplex(v: &[f64], tol: f64) -> bool {
    (v.iter().sum::<f64>() - 1.0).abs() <= tol && v.iter().all(|&x| x >= -tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_is_feasible_and_optimal(v in prop::collection::vec(-5.0f64..5.0, 1..7)) {
        let p = project_simplex(&v);
        prop_assert!(on_simplex(&p, 1e-12));
        let e = simplex_by_enumeration(&v);
        for (a, b) in p.iter().zip(&e) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn projection_shift_and_idempotence(v in prop::collection::vec(-5.0f64..5.0, 1..12), c in -10.0f64..10.0) {
        let p = project_simplex(&v);
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        for (a, b) in project_simplex(&shifted).iter().zip(&p) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        for (a, b) in project_simplex(&p).iter().zip(&p) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn laplacian_rows_sum_to_zero_and_form_is_edge_sum(
        (n, raw, z) in (2usize..15).prop_flat_map(|n| (Just(n), edges(n), prop::collection::vec(-1.0f64..1.0, n * 2)))
    ) {
        let w = graph(n, raw);
        let l = laplacian(&w, false);
        prop_assert!(l.matrix().is_symmetric(0.0));
        for s in l.matrix().row_sums() {
            prop_assert!(s.abs() <= 1e-12);
        }
        let z = Array2::from_shape_vec((n, 2), z).unwrap();
        let direct: f64 = w.edges().map(|(i, j, v)| {
            v * ((z[[i, 0]] - z[[j, 0]]).powi(2) + (z[[i, 1]] - z[[j, 1]]).powi(2))
        }).sum();
        prop_assert!((l.quadratic_form(z.view()) - direct).abs() <= 1e-10 * (1.0 + direct));
    }

    #[test]
    fn components_agree_with_union_find((n, raw) in (1usize..30).prop_flat_map(|n| (Just(n), edges(n)))) {
        let w = graph(n, raw);
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            if p[i] != i {
                let r = find(p, p[i]);
                p[i] = r;
            }
            p[i]
        }
        for (i, j, _) in w.edges() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            parent[a] = b;
        }
        let split = connected_components(&w);
        for i in 0..n {
            for j in 0..n {
                let same = find(&mut parent, i) == find(&mut parent, j);
                prop_assert_eq!(same, split.labels[i] == split.labels[j]);
            }
        }
    }

    #[test]
    fn metrics_match_naive_loops(
        (n, k, vals, truth) in (1usize..12, 2usize..7).prop_flat_map(|(n, k)| (
            Just(n), Just(k),
            prop::collection::vec(0.0f64..1.0, n * k),
            prop::collection::vec(prop::collection::btree_set(0..k, 1..=k), n),
        ))
    ) {
        let pred = Array2::from_shape_vec((n, k), vals).unwrap();
        let truth: Vec<Vec<usize>> = truth.into_iter().map(|s| s.into_iter().collect()).collect();
        let ranked = |r: usize| {
            let mut idx: Vec<usize> = (0..k).collect();
            idx.sort_by(|&a, &b| pred[[r, b]].total_cmp(&pred[[r, a]]).then(a.cmp(&b)));
            idx
        };

        let first: Vec<usize> = truth.iter().map(|t| t[0]).collect();
        let mut wrong = 0;
        for r in 0..n {
            if ranked(r)[0] != first[r] {
                wrong += 1;
            }
        }
        prop_assert_eq!(argmax_error(pred.view(), &first).unwrap(), wrong as f64 / n as f64);

        let mut set_wrong = 0;
        for r in 0..n {
            let mut top = ranked(r)[..truth[r].len()].to_vec();
            top.sort();
            if top != truth[r] {
                set_wrong += 1;
            }
        }
        prop_assert_eq!(top_t_set_error(pred.view(), &truth).unwrap(), set_wrong as f64 / n as f64);

        let len = 3.min(k);
        let (mut ps, mut rs, mut fs) = (0.0, 0.0, 0.0);
        for r in 0..n {
            let hit = ranked(r)[..len].iter().filter(|c| truth[r].contains(c)).count() as f64;
            let p = hit / len as f64;
            let q = hit / truth[r].len() as f64;
            ps += p;
            rs += q;
            fs += if p + q > 0.0 { 2.0 * p * q / (p + q) } else { 0.0 };
        }
        let (p, r, f) = precision_recall_f1(pred.view(), &truth, len).unwrap();
        prop_assert!((p - ps / n as f64).abs() <= 1e-12);
        prop_assert!((r - rs / n as f64).abs() <= 1e-12);
        prop_assert!((f - fs / n as f64).abs() <= 1e-12);
    }

    #[test]
    fn matrix_market_round_trip((n, raw) in (1usize..20).prop_flat_map(|n| (Just(n), edges(n)))) {
        let w = graph(n, raw);
        for symmetric in [true, false] {
            let mut buf = Vec::new();
            write_matrix_market(&mut buf, w.matrix(), symmetric).unwrap();
            let back = read_matrix_market(buf.as_slice()).unwrap();
            prop_assert_eq!(&back, w.matrix());
        }
    }

    #[test]
    fn oos_prediction_is_feasible(seed in 0u64..1000, lambda in 0.01f64..100.0) {
        let mut r = rng(seed);
        let z = Array2::from_shape_fn((8, 3), |(i, j)| ((i * 3 + j + seed as usize) % 5) as f64 + 0.1);
        let z = &z / &z.sum_axis(Axis(1)).insert_axis(Axis(1));
        let model = OosModel::new(z.clone()).unwrap();
        let g = random_g(1, 3, &mut r).row(0).to_vec();
        let w = vec![(0, 0.5), (3, 1.0), (7, 0.25)];
        let q = OosQuery { w: w.clone(), g, lambda };
        let (a, hit_a) = model.predict_traced(&q).unwrap();
        let (b, hit_b) = model.predict_traced(&q).unwrap();
        prop_assert!(on_simplex(&a.z, 1e-12));
        prop_assert_eq!(&a, &b);
        prop_assert!(!hit_a && hit_b);
        let zero = model.predict(&OosQuery { w, g: vec![0.0; 3], lambda }).unwrap();
        prop_assert_eq!(zero.mode, OosMode::CrowdOnly);
        prop_assert_eq!(Some(zero.z), zero.zbar);
    }
}

#[test]
fn objective_gradient_matches_finite_differences() {
    let mut r = rng(11);
    for _ in 0..10 {
        let w = random_connected_graph(12, 0.2, &mut r);
        let p = Problem::new(unnormalized(&w), random_g(12, 3, &mut r), 0.7).unwrap();
        let z = random_g(12, 3, &mut r);
        let grad = p.gradient(z.view()).unwrap();
        let h = 1e-6;
        for i in 0..12 {
            for c in 0..3 {
                let (mut up, mut down) = (z.clone(), z.clone());
                up[[i, c]] += h;
                down[[i, c]] -= h;
                let fd = (p.objective(up.view()).unwrap() - p.objective(down.view()).unwrap()) / (2.0 * h);
                assert!((fd - grad[[i, c]]).abs() < 1e-6, "({i}, {c}): {fd} vs {}", grad[[i, c]]);
            }
        }
    }
}

#[test]
fn factor_and_cg_agree_with_dense_solve() {
    let mut r = rng(12);
    for _ in 0..5 {
        let w = random_connected_graph(40, 0.08, &mut r);
        let l = unnormalized(&w);
        let (lambda, rho) = (0.8, 0.3);
        let b = random_g(40, 6, &mut r);
        let a = 2.0 * lambda * dense_laplacian(&w) + rho * nalgebra::DMatrix::<f64>::identity(40, 40);
        let lu = a.lu();
        let factor = ShiftedFactor::factorize(&l, lambda, rho).unwrap();
        let x = factor.solve(b.view()).unwrap();
        let cg = cg_solve(&l, lambda, rho, b.view(), None, &CgConfig { residual_tolerance: 1e-12, ..CgConfig::default() })
            .unwrap()
            .x;
        for c in 0..6 {
            let col = nalgebra::DVector::from_iterator(40, b.column(c).iter().copied());
            let exact = lu.solve(&col).unwrap();
            for i in 0..40 {
                assert!((x[[i, c]] - exact[i]).abs() < 1e-10);
                assert!((cg[[i, c]] - exact[i]).abs() < 1e-8);
            }
        }
        // The factor is reused for a second right-hand side.
        let again = factor.solve(b.view()).unwrap();
        assert_eq!(x, again);
    }
}

#[test]
fn extreme_eigenvalues_match_dense() {
    let mut r = rng(13);
    for _ in 0..5 {
        let w = random_connected_graph(30, 0.1, &mut r);
        let eig = dense_laplacian(&w).symmetric_eigen().eigenvalues;
        let mut sorted: Vec<f64> = eig.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = extreme_eigenvalues(&unnormalized(&w), 1e-10).unwrap();
        assert!((lo - sorted[1]).abs() < 1e-6 * sorted[29], "{lo} vs {}", sorted[1]);
        assert!((hi - sorted[29]).abs() < 1e-6 * sorted[29], "{hi} vs {}", sorted[29]);
    }
}

#[test]
fn harmonic_rows_average_their_neighbors() {
    let mut r = rng(14);
    let w = random_connected_graph(50, 0.05, &mut r);
    let labeled = vec![0, 7, 21, 33];
    let z_l = ndarray::array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0]];
    let split = LabeledSplit::new(50, labeled, z_l).unwrap();
    let z = split.assemble(harmonic_solve(&unnormalized(&w), &split).unwrap().view()).unwrap();
    let d = w.degrees();
    for &i in split.unlabeled() {
        let (nbrs, vals) = w.matrix().row(i);
        for c in 0..3 {
            let avg: f64 = nbrs.iter().zip(vals).map(|(&j, &v)| v * z[[j, c]]).sum::<f64>() / d[i];
            assert!((avg - z[[i, c]]).abs() < 1e-12);
        }
    }
}

#[test]
fn solutions_are_row_stochastic_and_better_than_perturbations() {
    let mut r = rng(15);
    for case in 0..10 {
        let w = random_connected_graph(25, 0.1, &mut r);
        let p = Problem::new(unnormalized(&w), random_g(25, 4, &mut r), [0.1, 1.0][case % 2]).unwrap();
        let sol = solve(&p, &SolverConfig { tol: 1e-9, ..SolverConfig::default() }, None).unwrap();
        for row in sol.z.axis_iter(Axis(0)) {
            assert!(on_simplex(row.as_slice().unwrap(), 1e-12));
        }
        let best = p.objective(sol.z.view()).unwrap();
        for _ in 0..20 {
            let mut z = &sol.z + &(0.05 * random_g(25, 4, &mut r));
            for mut row in z.axis_iter_mut(Axis(0)) {
                let v = project_simplex(row.as_slice().unwrap());
                row.assign(&ndarray::Array1::from(v));
            }
            assert!(p.objective(z.view()).unwrap() >= best - 1e-9);
        }
    }
}
