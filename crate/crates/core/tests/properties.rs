use num_traits::{One, Zero};
use proptest::prelude::*;

use pascal_core::compact::{
    cond_expect, harmonic_extension, mu_integral, s_sequence, self_adjoint_check, tau_model_build,
    verify_upstairs_identities, CZeroVec, TriangularFn,
};
use pascal_core::field::{q, qf};
use pascal_core::graph::{covering_to_gamma0, gamma_graph, hat, is_partageable, line_graph, triangle_graph};
use pascal_core::julia::{branch_point_code, code_to_point, f_eval, f_preimages, point_to_code, preimage_tree, JuliaCode};
use pascal_core::linalg::{char_poly_exact, char_poly_rational, kernel_rational};
use pascal_core::sierpinski::{xi_int, xi_star_int};
use pascal_core::spectra::{
    apply_delta, apply_delta_int, dot_int, eigenspace_exact, is_eigenvector, lift_norm_factor, lift_r_x,
    lifting_pairs, pi_int, pi_star_int, Eigenbasis, Scalar,
};
use pascal_core::transfer::{sample_points, transfer_apply, WeightFn};
use pascal_core::{Field, IntPolynomial, QuadraticScalar, Side, SubstGraph, VertexAddress, Q};

fn small_vec(len: usize) -> impl Strategy<Value = Vec<i128>> {
    prop::collection::vec(-20i128..=20, len)
}

fn level_and_vec(max: usize) -> impl Strategy<Value = (usize, Vec<i128>)> {
    (0..=max).prop_flat_map(|n| (Just(n), small_vec(4 * 3usize.pow(n as u32))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hat_fibers_are_triangles(n in 0usize..=3) {
        let g = gamma_graph(n);
        let h = hat(&g).unwrap();
        let parent = h.parent_map().unwrap();
        let tris = h.triangles();
        prop_assert_eq!(tris.len(), g.len());
        for t in &tris {
            prop_assert!(t.iter().all(|&v| parent[v] == parent[t[0]]));
        }
        let mut count = vec![0; g.len()];
        for &p in parent {
            count[p] += 1;
        }
        prop_assert!(count.iter().all(|&c| c == 3));
    }

    #[test]
    fn gamma_is_regular_and_not_bipartite(n in 0usize..=4) {
        let g = gamma_graph(n);
        prop_assert_eq!(g.len(), 4 * 3usize.pow(n as u32));
        prop_assert!((0..g.len()).all(|v| g.degree(v) == 3));
        prop_assert!(is_partageable(&g).unwrap().is_none());
    }

    #[test]
    fn triangle_corner_distance(n in 1usize..=6) {
        let t = triangle_graph(n).unwrap();
        let b = t.boundary_vertices();
        prop_assert_eq!(b.len(), 3);
        let d = t.distances_from(&[b[0]]);
        prop_assert_eq!(d[b[1]], Some((1usize << n) - 1));
        prop_assert_eq!(d[b[2]], Some((1usize << n) - 1));
    }

    #[test]
    fn coverings_from_any_anchor_labels(n in 0usize..=3, perm in Just([0u8, 1, 2, 3]).prop_shuffle()) {
        let g = gamma_graph(n);
        let nb = g.neighbors(0).to_vec();
        let anchors = [(0, perm[0]), (nb[0], perm[1]), (nb[1], perm[2]), (nb[2], perm[3])];
        let cover = covering_to_gamma0(&g, &anchors).unwrap();
        prop_assert!(cover.is_valid(&g));
        for p in 0..g.len() {
            let own = cover.target_labels[p];
            let mut labels: Vec<u8> = g.neighbors(p).iter().map(|&v| cover.target_labels[v]).collect();
            labels.sort_unstable();
            labels.dedup();
            prop_assert_eq!(labels.len(), 3);
            prop_assert!(!labels.contains(&own));
        }
    }

    #[test]
    fn adjacency_is_symmetric((n, v) in level_and_vec(3), seed in small_vec(4 * 27)) {
        let g = gamma_graph(n);
        let w = &seed[..g.len()];
        prop_assert_eq!(dot_int(&apply_delta_int(&g, &v), w), dot_int(&v, &apply_delta_int(&g, w)));
    }

    #[test]
    fn decimation_on_random_vectors((n, phi) in level_and_vec(3)) {
        let g = gamma_graph(n);
        let h = hat(&g).unwrap();
        let up = pi_star_int(&h, &phi).unwrap();
        let back = pi_int(&h, &up, g.len()).unwrap();
        prop_assert!(back.iter().zip(&phi).all(|(b, p)| *b == 3 * p));
        let d = apply_delta_int(&g, &phi);
        let d_up = apply_delta_int(&h, &up);
        let dd_up = apply_delta_int(&h, &d_up);
        let up_d = pi_star_int(&h, &d).unwrap();
        for r in 0..h.len() {
            prop_assert_eq!(dd_up[r] - d_up[r] - 3 * up[r], up_d[r]);
        }
        let pdp = pi_int(&h, &d_up, g.len()).unwrap();
        for r in 0..g.len() {
            prop_assert_eq!(pdp[r], 6 * phi[r] + d[r]);
        }
    }

    #[test]
    fn line_graph_identities_on_random_vectors((n, phi) in level_and_vec(3)) {
        let g = gamma_graph(n);
        let lg = line_graph(&g);
        prop_assert!((0..lg.len()).all(|e| lg.degree(e) == 4));
        let d = apply_delta_int(&g, &phi);
        let up = xi_star_int(&g, &phi);
        let d_up = apply_delta_int(&lg, &up);
        let up_d = xi_star_int(&g, &d);
        for e in 0..lg.len() {
            prop_assert_eq!(d_up[e] - up[e], up_d[e]);
        }
        let back = xi_int(&g, &up);
        for p in 0..g.len() {
            prop_assert_eq!(back[p], 3 * phi[p] + d[p]);
        }
    }

    #[test]
    fn eigenvector_residuals_vanish(n in 1usize..=2, k in 0usize..4) {
        let g = gamma_graph(n);
        let x = [q(0), q(-2), q(3), q(2)][k].clone();
        match eigenspace_exact(&g, &Scalar::Rational(x.clone())) {
            Eigenbasis::Rational(basis) => {
                prop_assert!(!basis.is_empty());
                for v in &basis {
                    prop_assert!(is_eigenvector(&g, v, &x));
                }
            }
            Eigenbasis::Quadratic(_) => prop_assert!(false, "rational eigenvalue gave a quadratic basis"),
        }
    }

    #[test]
    fn lifting_law_on_random_combinations(k in 0usize..6, coeffs in prop::collection::vec(-5i64..=5, 8)) {
        let g = gamma_graph(1);
        let h = hat(&g).unwrap();
        let (y, x) = lifting_pairs()[k].clone();
        let basis = pascal_core::spectra::eigenspace_rational(&g, &q(y));
        let mut psi = vec![QuadraticScalar::zero(); g.len()];
        for (c, b) in coeffs.iter().zip(&basis) {
            for (p, bv) in psi.iter_mut().zip(b) {
                *p = p.clone() + QuadraticScalar::from_q(bv * q(*c));
            }
        }
        let (lifted, _) = lift_r_x(&h, &psi, &x).unwrap();
        prop_assert!(is_eigenvector(&h, &lifted, &x));
        let norm = |v: &[QuadraticScalar]| v.iter().fold(QuadraticScalar::zero(), |acc, a| acc + a.clone() * a.clone());
        prop_assert_eq!(norm(&lifted), lift_norm_factor(&x) * norm(&psi));
    }

    #[test]
    fn quadratic_field_arithmetic(a in -30i64..30, b in -30i64..30, c in -30i64..30, d in 1i64..30) {
        let x = QuadraticScalar::from_ints(a, b, d, 13);
        let y = QuadraticScalar::from_ints(c, 1, d, 13);
        prop_assert_eq!((x.clone() * y.clone()) / y.clone(), x.clone());
        prop_assert_eq!((x.clone() * y.clone()).norm(), x.norm() * y.norm());
        prop_assert_eq!(x.clone() + x.conj(), QuadraticScalar::from_q(qf(2 * a, d)));
        prop_assert!(((x.clone() * y.clone()).to_f64() - x.to_f64() * y.to_f64()).abs() < 1e-9 * (1.0 + (x.to_f64() * y.to_f64()).abs()));
    }

    #[test]
    fn kernel_vectors_annihilate(rows in 1usize..6, cols in 1usize..7, entries in prop::collection::vec(-4i64..=4, 42)) {
        let m: Vec<Vec<i64>> = (0..rows).map(|i| entries[i * cols..(i + 1) * cols].to_vec()).collect();
        let ker = kernel_rational(&m);
        let rank = pascal_core::linalg::rank_mod(&m, 1_000_000_007);
        prop_assert_eq!(ker.len(), cols - rank);
        for v in &ker {
            for r in &m {
                let s = r.iter().zip(v).fold(Q::zero(), |acc, (a, x)| acc + q(*a) * x);
                prop_assert!(s.is_zero());
            }
        }
    }

    #[test]
    fn modular_and_rational_char_polys_agree(n in 1usize..7, entries in prop::collection::vec(-6i64..=6, 36)) {
        let mut m = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in 0..=i {
                m[i][j] = entries[i * 6 + j];
                m[j][i] = entries[i * 6 + j];
            }
        }
        let exact = char_poly_exact(&m);
        prop_assert!(exact.is_monic());
        let rational = char_poly_rational(&m.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect::<Vec<_>>());
        let coeffs: Vec<Q> = exact.coeffs().iter().map(|c| Q::from_integer(c.clone())).collect();
        prop_assert_eq!(coeffs, rational);
    }

    #[test]
    fn polynomial_composition_evaluates(p in prop::collection::vec(-5i64..=5, 1..5), r in prop::collection::vec(-5i64..=5, 1..4), x in -6i64..=6) {
        let (p, r) = (IntPolynomial::from_i64(&p), IntPolynomial::from_i64(&r));
        let x = x.into();
        prop_assert_eq!(p.compose(&r).eval(&x), p.eval(&r.eval(&x)));
        prop_assert_eq!(p.pow(3).eval(&x), p.eval(&x).pow(3));
    }

    #[test]
    fn transfer_normalization(i in 0usize..64, d in 1usize..=10) {
        let x = sample_points()[i];
        let one = transfer_apply(WeightFn::Rho, |_| 1.0, x, d).unwrap();
        prop_assert!((one - 1.0).abs() < 1e-12);
        let z = transfer_apply(WeightFn::Zeta, |_| 1.0, x, d).unwrap();
        prop_assert!((z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positivity_of_transfer(i in 0usize..64, d in 1usize..=8) {
        let x = sample_points()[i];
        let v = transfer_apply(WeightFn::Rho, |y| (y - 0.3).powi(2), x, d).unwrap();
        prop_assert!(v >= -1e-12);
    }

    #[test]
    fn preimages_are_preimages(y in -3.0f64..3.0) {
        let (a, b) = f_preimages(y).unwrap();
        prop_assert!(a <= b);
        prop_assert!((f_eval(a) - y).abs() < 1e-12);
        prop_assert!((f_eval(b) - y).abs() < 1e-12);
    }

    #[test]
    fn code_roundtrip(bits in any::<u64>(), len in 1usize..=30) {
        let code = JuliaCode::from_bits(bits, len);
        let p = code_to_point(&code, 1e-12).unwrap();
        prop_assert!((-2.0..=3.0).contains(&p.value));
        prop_assert_eq!(branch_point_code(&p, len).unwrap(), code.clone());
        if len <= 12 {
            prop_assert_eq!(point_to_code(p.value, len).unwrap(), code.clone());
        }
        if len > 1 {
            let next = code_to_point(&code.shift(), 1e-12).unwrap();
            prop_assert!((f_eval(p.value) - next.value).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_sum_triples(s in -9i64..=9, t in -9i64..=9, u in -9i64..=9) {
        let v = CZeroVec::from_i64(s, t, u);
        prop_assert_eq!(v.is_ok(), s + t + u == 0);
        if let Ok(v) = v {
            prop_assert_eq!(v.norm0(), qf(s * s + t * t + u * u, 3));
        }
    }

    #[test]
    fn conditional_expectation_preserves_integral(vals in prop::collection::vec(-9i64..=9, 81), m in 1usize..4) {
        let phi = TriangularFn::from_i64(4, &vals).unwrap();
        let psi = cond_expect(&phi, m).unwrap();
        prop_assert_eq!(psi.level, m);
        prop_assert_eq!(mu_integral(&psi), mu_integral(&phi));
    }

    #[test]
    fn upstairs_identities_on_random_functions(vals in prop::collection::vec(-9i64..=9, 9), level in 3usize..=4) {
        let phi = TriangularFn::from_i64(2, &vals).unwrap();
        for c in verify_upstairs_identities(level, &phi).unwrap() {
            prop_assert!(c.passed(), "{:?}", c);
        }
    }

    #[test]
    fn laplacian_is_self_adjoint(a in prop::collection::vec(-9i64..=9, 9), b in prop::collection::vec(-9i64..=9, 9)) {
        let phi = TriangularFn::from_i64(2, &a).unwrap();
        let psi = TriangularFn::from_i64(2, &b).unwrap();
        prop_assert!(self_adjoint_check(3, &phi, &psi).unwrap());
    }

    #[test]
    fn harmonic_maximum_principle(n in 1usize..=4, a in -20i64..=20, b in -20i64..=20, c in -20i64..=20) {
        let phi = harmonic_extension(n, [q(a), q(b), q(c)]).unwrap();
        let bound = q(a.abs().max(b.abs()).max(c.abs()));
        prop_assert!(phi.values.iter().all(|x| num_traits::Signed::abs(x) <= bound));
        prop_assert_eq!(phi.corners(), [q(a), q(b), q(c)]);
    }
}

#[test]
fn tau_model_invariants() {
    for n in 1..=4usize {
        let m = tau_model_build(n).unwrap();
        let r = 3i64.pow(n as u32);
        let total: Q = m.weights.iter().cloned().sum();
        assert_eq!(total, Q::one());
        let interior = m.weights.iter().filter(|w| **w == qf(1, r)).count();
        let corners = m.weights.iter().filter(|w| **w == qf(1, 2 * r)).count();
        assert_eq!(interior, r as usize - 3);
        assert_eq!(corners, 6);
        for h in 0..6 {
            assert_eq!(m.pairing[m.pairing[h]], h);
        }
    }
}

#[test]
fn s_sequence_decreases_to_zero() {
    let s = s_sequence(12).exact;
    assert_eq!(s[0], Q::one());
    assert!(s.windows(2).all(|w| w[1] < w[0] && w[1] > Q::zero()));
    assert!(s[11] < qf(1, 100));
}

#[test]
fn preimage_trees_are_increasing_and_avoid_poles() {
    for y0 in [0.0, -2.0] {
        for depth in 1..=12 {
            let t = preimage_tree(y0, depth).unwrap();
            assert_eq!(t.len(), 1 << depth);
            assert!(t.windows(2).all(|w| w[0] < w[1]));
            assert!(t.iter().all(|x| (x - 0.5).abs() > 1e-6 && (x - 1.0).abs() > 1e-6));
        }
    }
}

fn cycle(len: usize) -> SubstGraph {
    let vertices = (0..len)
        .map(|i| VertexAddress { side: Side::None, root: None, word: Vec::new(), edge: Some((i, i)), raw_id: i })
        .collect();
    let edges: Vec<(usize, usize)> = (0..len).map(|i| (i, (i + 1) % len)).collect();
    SubstGraph::from_parts(0, vertices, &edges, vec![false; len], None).unwrap()
}

#[test]
fn bipartition_of_cycles_and_triangles() {
    assert!(is_partageable(&cycle(6)).unwrap().is_some());
    assert!(is_partageable(&cycle(7)).unwrap().is_none());
    assert!(is_partageable(&triangle_graph(3).unwrap()).unwrap().is_none());
}

#[test]
fn apply_delta_generic_matches_integer() {
    let g = gamma_graph(2);
    let v: Vec<i128> = (0..g.len() as i128).map(|i| (i * 7) % 11 - 5).collect();
    let vq: Vec<Q> = v.iter().map(|&x| Q::from_integer((x as i64).into())).collect();
    let d = apply_delta(&g, &vq);
    let di = apply_delta_int(&g, &v);
    assert!(d.iter().zip(&di).all(|(a, b)| *a == Q::from_integer((*b as i64).into())));
    assert!(QuadraticScalar::from_i64(2).to_f64() == 2.0);
}
