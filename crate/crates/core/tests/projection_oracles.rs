use projloss::geometry::Geometry;
use projloss::polytope::Polytope;
use projloss::projection::{project, project_fw, project_with, ProjectOptions};
use projloss::verify::{brute_force_projection, gaussian_point, oracle_discrepancy, BruteForceOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_polytopes() -> Vec<Polytope<f64>> {
    let mut out = Vec::new();
    for k in 2..=4 {
        out.push(Polytope::Simplex(k));
        out.push(Polytope::Cube(k));
        out.push(Polytope::Knapsack { k, lower: 1, upper: k - 1 });
        out.push(Polytope::Birkhoff(k));
        out.push(Polytope::RowStochastic(k));
        out.push(Polytope::Permutahedron((1..=k).rev().map(|x| x as f64).collect()));
        out.push(Polytope::OrderSimplex(k + 1));
    }
    out.push(Polytope::Knapsack { k: 4, lower: 0, upper: 2 });
    out.push(Polytope::Knapsack { k: 3, lower: 2, upper: 2 });
    out.push(Polytope::Permutahedron(vec![3.0, 1.0, 1.0, -0.5]));
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn euclidean_projection_matches_brute_force() {
    for (i, poly) in small_polytopes().iter().enumerate() {
        let gap = oracle_discrepancy(poly, Geometry::Euclidean, 30, 100 + i as u64).unwrap();
        assert!(gap <= 1e-4, "{poly:?}: {gap}");
    }
}

#[test]
fn kl_projection_matches_brute_force() {
    let polys = [
        Polytope::Simplex(3),
        Polytope::Cube(3),
        Polytope::Knapsack { k: 4, lower: 1, upper: 2 },
        Polytope::Birkhoff(3),
        Polytope::RowStochastic(3),
        Polytope::Permutahedron(vec![3.0, 2.0, 1.0]),
        Polytope::Permutahedron(vec![2.0, 1.5, 0.5, 0.25]),
        Polytope::OrderSimplex(4),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = BruteForceOptions::default();
    for poly in &polys {
        for _ in 0..10 {
            let theta = gaussian_point(&mut rng, poly.ambient_dim(), 1.0);
            let fast = project_with(poly, Geometry::ShannonKl, &theta, &ProjectOptions { tol: 1e-12, max_iter: 100_000 })
                .unwrap()
                .mu;
            let slow = brute_force_projection(poly, Geometry::ShannonKl, &theta, &opts).unwrap();
            let gap = fast.iter().zip(&slow).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(gap <= 1e-4, "{poly:?}: {gap}");
        }
    }
}

#[test]
fn optimality_conditions_against_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for poly in small_polytopes() {
        let vertices = poly.enumerate_vertices(10_000).unwrap();
        for _ in 0..20 {
            let theta = gaussian_point(&mut rng, poly.ambient_dim(), 3.0);
            let tight = ProjectOptions { tol: 1e-12, max_iter: 100_000 };
            let mu = project_with(&poly, Geometry::Euclidean, &theta, &tight).unwrap().mu;
            assert!(poly.contains(&mu, 1e-6));
            let r: Vec<f64> = theta.iter().zip(&mu).map(|(t, m)| t - m).collect();
            for v in &vertices {
                let d: Vec<f64> = v.point.iter().zip(&mu).map(|(x, m)| x - m).collect();
                assert!(dot(&r, &d) <= 1e-7, "{poly:?}");
            }
            let positive_weights = match &poly {
                Polytope::Permutahedron(w) => w.iter().all(|&x| x > 0.0),
                _ => true,
            };
            if !positive_weights {
                continue;
            }
            let mu = project_with(&poly, Geometry::ShannonKl, &theta, &tight).unwrap().mu;
            assert!(poly.contains(&mu, 1e-6));
            if mu.iter().all(|&x| x > 0.0) {
                let g: Vec<f64> = mu.iter().zip(&theta).map(|(m, t)| m.ln() - t + 1.0).collect();
                for v in &vertices {
                    let d: Vec<f64> = v.point.iter().zip(&mu).map(|(x, m)| x - m).collect();
                    assert!(dot(&g, &d) >= -1e-6, "{poly:?}");
                }
            }
        }
    }
}

#[test]
fn idempotence_and_nonexpansiveness() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let tight = ProjectOptions { tol: 1e-13, max_iter: 100_000 };
    for poly in small_polytopes() {
        for _ in 0..20 {
            let t1 = gaussian_point(&mut rng, poly.ambient_dim(), 3.0);
            let t2 = gaussian_point(&mut rng, poly.ambient_dim(), 3.0);
            let p1 = project_with(&poly, Geometry::Euclidean, &t1, &tight).unwrap().mu;
            let p2 = project_with(&poly, Geometry::Euclidean, &t2, &tight).unwrap().mu;
            let again = project_with(&poly, Geometry::Euclidean, &p1, &tight).unwrap().mu;
            let idem = p1.iter().zip(&again).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(idem <= 1e-9, "{poly:?}: {idem}");
            let dp: f64 = p1.iter().zip(&p2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let dt: f64 = t1.iter().zip(&t2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(dp <= dt + 1e-9, "{poly:?}");
        }
    }
}

#[test]
fn frank_wolfe_agrees_with_dedicated_routines() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for poly in small_polytopes() {
        for _ in 0..5 {
            let theta = gaussian_point(&mut rng, poly.ambient_dim(), 2.0);
            let fw = project_fw(&poly, &theta, 1e-12, 200_000).unwrap();
            let exact = project(&poly, Geometry::Euclidean, &theta).unwrap().mu;
            let gap = fw.mu.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(gap <= 1e-4, "{poly:?}: {gap}");
        }
    }
}
