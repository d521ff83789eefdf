//! Pencil entries against an independent quadrature of the basis functions.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::SeedableRng;

use safem::boundary::{BoundaryUnitary, Preset};
use safem::eigensolve::Discretization;
use safem::fem::{self, BoundaryFunctionSet};
use safem::linalg::{self, CMatrix};
use safem::IntervalManifold;

const NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189,
];

/// Node values of every basis function, built from the definition: hats at
/// interior nodes, with the first and last hat of each interval extended to
/// the endpoints by the columns of `V`.
fn node_values(bfs: &BoundaryFunctionSet) -> Vec<Vec<Vec<C64>>> {
    let mesh = bfs.mesh();
    let basis = bfs.basis();
    let n = mesh.counts().len();
    let mut out = vec![Vec::new(); basis.len()];
    for (alpha, &r) in mesh.counts().iter().enumerate() {
        for j in 1..=r {
            let idx = basis.index_of(alpha, j);
            let mut vals: Vec<Vec<C64>> = mesh.counts().iter().map(|&q| vec![C64::new(0.0, 0.0); q + 2]).collect();
            vals[alpha][j] = C64::new(1.0, 0.0);
            let owner = if j == 1 {
                Some(2 * alpha)
            } else if j == r {
                Some(2 * alpha + 1)
            } else {
                None
            };
            if let Some(k) = owner {
                for beta in 0..n {
                    let last = mesh.counts()[beta] + 1;
                    vals[beta][0] = bfs.v[(2 * beta, k)];
                    vals[beta][last] = bfs.v[(2 * beta + 1, k)];
                }
            }
            out[idx] = vals;
        }
    }
    out
}

fn quadrature_pencil(bfs: &BoundaryFunctionSet) -> (CMatrix, CMatrix) {
    let mesh = bfs.mesh();
    let manifold = mesh.manifold();
    let values = node_values(bfs);
    let dim = values.len();
    let mut a = CMatrix::zeros(dim, dim);
    let mut b = CMatrix::zeros(dim, dim);
    for alpha in 0..mesh.counts().len() {
        let xs = mesh.nodes(alpha);
        let root = manifold.metric(alpha).sqrt();
        for s in 0..xs.len() - 1 {
            let (x0, x1) = (xs[s], xs[s + 1]);
            let len = x1 - x0;
            let active: Vec<usize> = (0..dim)
                .filter(|&p| values[p][alpha][s].norm() > 0.0 || values[p][alpha][s + 1].norm() > 0.0)
                .collect();
            for &p in &active {
                for &q in &active {
                    let (p0, p1) = (values[p][alpha][s], values[p][alpha][s + 1]);
                    let (q0, q1) = (values[q][alpha][s], values[q][alpha][s + 1]);
                    let dp = (p1 - p0) / len;
                    let dq = (q1 - q0) / len;
                    for (t, w) in NODES.iter().zip(WEIGHTS) {
                        let u = 0.5 * (1.0 + t);
                        let weight = 0.5 * len * w;
                        let fp = p0 * (1.0 - u) + p1 * u;
                        let fq = q0 * (1.0 - u) + q1 * u;
                        b[(p, q)] += fp.conj() * fq * weight * root;
                        a[(p, q)] += dp.conj() * dq * weight / root;
                    }
                }
            }
        }
        // outward normal derivatives from the edge slopes, in metric length
        let last = xs.len() - 1;
        let h_left = (xs[1] - xs[0]) * root;
        let h_right = (xs[last] - xs[last - 1]) * root;
        for p in 0..dim {
            for q in 0..dim {
                let left = values[p][alpha][0].conj() * (-(values[q][alpha][1] - values[q][alpha][0]) / h_left);
                let right =
                    values[p][alpha][last].conj() * ((values[q][alpha][last] - values[q][alpha][last - 1]) / h_right);
                a[(p, q)] -= left + right;
            }
        }
    }
    (a, b)
}

fn compare(d: &Discretization, tol: f64) {
    let (qa, qb) = quadrature_pencil(&d.functions);
    let a = d.pencil.a.to_dense();
    let b = d.pencil.b.to_dense();
    let sa = qa.max_abs();
    let sb = qb.max_abs();
    assert!(a.max_abs_diff(&qa) <= tol * sa, "A differs by {:e}", a.max_abs_diff(&qa) / sa);
    assert!(b.max_abs_diff(&qb) <= tol * sb, "B differs by {:e}", b.max_abs_diff(&qb) / sb);
}

#[test]
fn entries_match_quadrature_for_presets() {
    let m = IntervalManifold::euclidean(&[(0.0, 2.0 * PI)]).unwrap();
    let presets = [
        Preset::Dirichlet,
        Preset::Neumann,
        Preset::Robin { angles: vec![0.4, -1.3] },
        Preset::periodic_per_interval(1),
        Preset::quasi_periodic_per_interval(1, 0.5 * PI),
        Preset::RobinLocal { theta: 0.9 * PI },
    ];
    for p in presets {
        let u = p.build(2).unwrap();
        let d = Discretization::new(&m, &u, 23).unwrap();
        compare(&d, 1e-12);
    }
}

#[test]
fn entries_match_quadrature_for_random_unitaries_and_metrics() {
    let mut rng = StdRng::seed_from_u64(11);
    let m = IntervalManifold::new(&[(0.0, 1.0), (-1.0, 1.5), (3.0, 3.7)], &[1.0, 2.5, 0.3]).unwrap();
    for _ in 0..20 {
        let u = BoundaryUnitary::new(linalg::random_unitary(6, &mut rng)).unwrap();
        let d = match Discretization::new(&m, &u, 31) {
            Ok(d) => d,
            Err(safem::Error::SingularBoundaryMatrix { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        compare(&d, 1e-12);
        assert!(d.pencil.a.is_exactly_hermitian());
        assert!(d.pencil.b.is_exactly_hermitian());
    }
}

/// Entries of the single-interval pencil in closed form; scaled by `1/h`
/// for `A` and `h/6` for `B`.
fn closed_form(v: &CMatrix, r: usize, a: usize, b: usize) -> (C64, C64) {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let (lo, hi) = (a.min(b), a.max(b));
    let (ea, eb) = if lo == 0 && hi == r - 1 {
        (
            -v[(0, 1)],
            2.0 * (v[(0, 0)].conj() * v[(0, 1)] + v[(1, 0)].conj() * v[(1, 1)]) + v[(0, 1)] + v[(1, 0)].conj(),
        )
    } else if lo == hi && lo == 0 {
        (
            2.0 * one - v[(0, 0)],
            C64::new(4.0 + 2.0 * (v[(0, 0)].norm_sqr() + v[(1, 0)].norm_sqr()) + 2.0 * v[(0, 0)].re, 0.0),
        )
    } else if lo == hi && lo == r - 1 {
        (
            2.0 * one - v[(1, 1)],
            C64::new(4.0 + 2.0 * (v[(0, 1)].norm_sqr() + v[(1, 1)].norm_sqr()) + 2.0 * v[(1, 1)].re, 0.0),
        )
    } else if lo == hi {
        (C64::new(2.0, 0.0), C64::new(4.0, 0.0))
    } else if hi == lo + 1 {
        (C64::new(-1.0, 0.0), one)
    } else {
        (zero, zero)
    };
    if a > b {
        (ea.conj(), eb.conj())
    } else {
        (ea, eb)
    }
}

#[test]
fn single_interval_entries_match_closed_forms() {
    let m = IntervalManifold::euclidean(&[(0.0, 2.0 * PI)]).unwrap();
    let mut rng = StdRng::seed_from_u64(3);
    let mut unitaries: Vec<BoundaryUnitary> = [
        Preset::Neumann,
        Preset::Dirichlet,
        Preset::periodic_per_interval(1),
        Preset::quasi_periodic_per_interval(1, 0.5 * PI),
        Preset::RobinLocal { theta: 0.9 * PI },
    ]
    .iter()
    .map(|p| p.build(2).unwrap())
    .collect();
    unitaries.extend((0..5).map(|_| BoundaryUnitary::new(linalg::random_unitary(2, &mut rng)).unwrap()));
    for u in &unitaries {
        for n in [8, 57, 250] {
            let d = Discretization::new(&m, u, n).unwrap();
            let r = d.mesh().counts()[0];
            let h = d.mesh().steps()[0];
            let v = &d.functions.v;
            for a in 0..r {
                for b in 0..r {
                    let (ea, eb) = closed_form(v, r, a, b);
                    let (ea, eb) = (ea / h, eb * (h / 6.0));
                    let ga = d.pencil.a.get(a, b);
                    let gb = d.pencil.b.get(a, b);
                    assert!((ga - ea).norm() <= 1e-12 * ea.norm().max(1.0 / h), "A[{a},{b}] {ga} vs {ea}");
                    assert!((gb - eb).norm() <= 1e-12 * eb.norm().max(h), "B[{a},{b}] {gb} vs {eb}");
                }
            }
        }
    }
}

#[test]
fn border_mass_entry_has_no_constant_term() {
    // for Neumann V = I: the first and last boundary functions have
    // disjoint supports, so their coupling vanishes
    let m = IntervalManifold::euclidean(&[(0.0, 2.0 * PI)]).unwrap();
    let u = Preset::Neumann.build(2).unwrap();
    let d = Discretization::new(&m, &u, 40).unwrap();
    let r = d.mesh().counts()[0];
    let h = d.mesh().steps()[0];
    let got = d.pencil.b.get(0, r - 1);
    assert!(got.norm() <= 1e-15 * h, "{got}");
    let with_constant = 2.0 * h / 6.0;
    assert!((got.re - with_constant).abs() > 0.3 * h);
}

#[test]
fn equal_steps_give_conjugate_symmetric_values() {
    let mut rng = StdRng::seed_from_u64(5);
    let m = IntervalManifold::euclidean(&[(0.0, 2.0 * PI)]).unwrap();
    for _ in 0..50 {
        let u = BoundaryUnitary::new(linalg::random_unitary(2, &mut rng)).unwrap();
        let d = Discretization::new(&m, &u, 40).unwrap();
        let v = &d.functions.v;
        assert_eq!(v[(1, 0)], v[(0, 1)].conj());
        assert_eq!(v[(0, 0)].im, 0.0);
        assert_eq!(v[(1, 1)].im, 0.0);
    }
}

#[test]
fn pencil_is_covariant_under_rescaling() {
    // stretching [0, 2π] by s scales A by 1/s and B by s for scale-free conditions
    let s = 3.0;
    for p in [Preset::Neumann, Preset::Dirichlet, Preset::periodic_per_interval(1)] {
        let u = p.build(2).unwrap();
        let a = Discretization::new(&IntervalManifold::euclidean(&[(0.0, 2.0 * PI)]).unwrap(), &u, 60).unwrap();
        let b = Discretization::new(&IntervalManifold::euclidean(&[(0.0, 2.0 * PI * s)]).unwrap(), &u, 60).unwrap();
        let (aa, ab) = (a.pencil.a.to_dense(), a.pencil.b.to_dense());
        let (ba, bb) = (b.pencil.a.to_dense(), b.pencil.b.to_dense());
        assert!(ba.scale(C64::new(s, 0.0)).max_abs_diff(&aa) <= 1e-12 * aa.max_abs());
        assert!(bb.scale(C64::new(1.0 / s, 0.0)).max_abs_diff(&ab) <= 1e-12 * ab.max_abs());
    }
}

#[test]
fn metric_is_equivalent_to_stretching() {
    // η = s² on [0, L] has metric length sL
    let s: f64 = 1.7;
    let mut rng = StdRng::seed_from_u64(9);
    for _ in 0..5 {
        let u = BoundaryUnitary::new(linalg::random_unitary(2, &mut rng)).unwrap();
        let curved = IntervalManifold::new(&[(0.0, 2.0)], &[s * s]).unwrap();
        let flat = IntervalManifold::euclidean(&[(0.0, 2.0 * s)]).unwrap();
        let a = Discretization::new(&curved, &u, 30).unwrap();
        let b = Discretization::new(&flat, &u, 30).unwrap();
        let da = a.pencil.a.to_dense();
        let db = b.pencil.a.to_dense();
        assert!(da.max_abs_diff(&db) <= 1e-12 * db.max_abs());
        let ma = a.pencil.b.to_dense();
        let mb = b.pencil.b.to_dense();
        assert!(ma.max_abs_diff(&mb) <= 1e-12 * mb.max_abs());
    }
}

#[test]
fn boundary_functions_satisfy_the_condition() {
    let mut rng = StdRng::seed_from_u64(21);
    let m = IntervalManifold::new(&[(0.0, 1.0), (0.0, 2.0)], &[1.0, 0.5]).unwrap();
    for _ in 0..30 {
        let u = BoundaryUnitary::new(linalg::random_unitary(4, &mut rng)).unwrap();
        let d = Discretization::new(&m, &u, 50).unwrap();
        let bfs = &d.functions;
        let dim = bfs.boundary_dim();
        for k in 0..dim {
            let phi = bfs.v.column(k);
            let dphi = bfs.derivs.column(k);
            let res = u.residual(&phi, &dphi).unwrap();
            assert!(res.full <= 1e-10, "column {k}: {:e}", res.full);
        }
    }
}

#[test]
fn local_robin_columns_satisfy_the_condition() {
    let m = IntervalManifold::euclidean(&[(0.0, 2.0 * PI)]).unwrap();
    for theta in [0.1 * PI, 0.5 * PI, 0.9 * PI, -0.7 * PI] {
        let u = Preset::RobinLocal { theta }.build(2).unwrap();
        let d = Discretization::new(&m, &u, 200).unwrap();
        let bfs = &d.functions;
        let c = (0.5 * theta).tan();
        for k in 0..2 {
            // Neumann at the left end, Ψ'(2π) = cΨ(2π) at the right end
            assert!(bfs.derivs[(0, k)].norm() <= 1e-12);
            assert!((bfs.derivs[(1, k)] - c * bfs.v[(1, k)]).norm() <= 1e-10 * (1.0 + c.abs()));
        }
    }
}

#[test]
fn traces_of_random_combinations_satisfy_the_condition() {
    let mut rng = StdRng::seed_from_u64(4);
    let m = IntervalManifold::euclidean(&[(0.0, 2.0 * PI), (1.0, 2.0)]).unwrap();
    let u = BoundaryUnitary::new(linalg::random_unitary(4, &mut rng)).unwrap();
    let d = Discretization::new(&m, &u, 80).unwrap();
    let dim = d.pencil.dim();
    use rand::Rng;
    let c: Vec<C64> = (0..dim).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let (phi, dphi) = fem::trace_of(&c, &d.functions).unwrap();
    let res = u.residual(&phi, &dphi).unwrap();
    assert!(res.full <= 1e-10 * linalg::norm2(&c));
}
