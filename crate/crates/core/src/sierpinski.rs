//! The Sierpiński line graph Θ: the edge lift Ξ*, its identities, the
//! conjugated dynamics g(x) = x² − 3x and the moments of θ₀ = Ξ*φ₀.
//!
//! Edges are indexed in the order of `SubstGraph::edges`, which is also the
//! vertex order of `line_graph`.

use serde::Serialize;

use crate::error::Result;
use crate::field::Field;
use crate::graph::{gamma_graph, line_graph, SubstGraph};
use crate::julia::{code_to_point, lambda_samples, JuliaCode};
use crate::linalg::kernel_rational;
use crate::moments::{ball_for_moments, MomentTable};
use crate::spectra::{adjacency, apply_delta_int, graph_moment, phi0, IdentityCheck};
use crate::transfer::{identity_row, sample_points, theta0_moments_transfer, IdentityRow, WeightFn};
use crate::{field::Q, julia::f_eval};

/// (Ξ*φ)({p, q}) = φ(p) + φ(q).
pub fn xi_star<F: Field>(g: &SubstGraph, phi: &[F]) -> Vec<F> {
    g.edges().into_iter().map(|(p, r)| phi[p].clone() + phi[r].clone()).collect()
}

/// (Ξψ)(p) = Σ_{e ∋ p} ψ(e), the adjoint of Ξ*.
pub fn xi<F: Field>(g: &SubstGraph, psi: &[F]) -> Vec<F> {
    let mut out = vec![F::zero(); g.len()];
    for (i, (p, r)) in g.edges().into_iter().enumerate() {
        out[p] = out[p].clone() + psi[i].clone();
        out[r] = out[r].clone() + psi[i].clone();
    }
    out
}

pub fn xi_star_int(g: &SubstGraph, phi: &[i128]) -> Vec<i128> {
    g.edges().into_iter().map(|(p, r)| phi[p] + phi[r]).collect()
}

pub fn xi_int(g: &SubstGraph, psi: &[i128]) -> Vec<i128> {
    let mut out = vec![0; g.len()];
    for (i, (p, r)) in g.edges().into_iter().enumerate() {
        out[p] += psi[i];
        out[r] += psi[i];
    }
    out
}

/// θ₀ = Ξ*φ₀ on the line graph of a Pascal ball.
pub fn theta0(ball: &SubstGraph) -> Vec<i128> {
    xi_star_int(ball, &phi0(ball))
}

/// (Δ − 1)Ξ* = Ξ*Δ on edges whose endpoints have degree 3, and ΞΞ* = 3 + Δ
/// on vertices of degree 3, column by column on the basis δ_p. On graphs of
/// at most `complement_limit` edges, also checks that every vector of
/// ker Ξ = range(Ξ*)^⊥ is a (−2)-eigenvector of the line graph.
pub fn verify_xi_identities(g: &SubstGraph, complement_limit: usize) -> Result<Vec<IdentityCheck>> {
    let lg = line_graph(g);
    let edges = g.edges();
    let full = |v: usize| g.degree(v) == 3;
    let edge_rows: Vec<usize> = (0..edges.len()).filter(|&i| full(edges[i].0) && full(edges[i].1)).collect();
    let vertex_rows: Vec<usize> = (0..g.len()).filter(|&v| full(v)).collect();
    let mut lift = IdentityCheck { name: "(D - 1) Xi* = Xi* D".into(), rows_checked: 0, failures: 0 };
    let mut square = IdentityCheck { name: "Xi Xi* = 3 + D".into(), rows_checked: 0, failures: 0 };
    for p in 0..g.len() {
        let mut e = vec![0i128; g.len()];
        e[p] = 1;
        let up = xi_star_int(g, &e);
        let d_up = apply_delta_int(&lg, &up);
        let de = apply_delta_int(g, &e);
        let up_de = xi_star_int(g, &de);
        for &i in &edge_rows {
            lift.rows_checked += 1;
            if d_up[i] - up[i] != up_de[i] {
                lift.failures += 1;
            }
        }
        let back = xi_int(g, &up);
        for &v in &vertex_rows {
            square.rows_checked += 1;
            if back[v] != 3 * e[v] + de[v] {
                square.failures += 1;
            }
        }
    }
    let mut out = vec![lift, square];
    if edges.len() <= complement_limit {
        out.push(complement_check(g, &lg)?.0);
    }
    Ok(out)
}

fn complement_check(g: &SubstGraph, lg: &SubstGraph) -> Result<(IdentityCheck, usize, usize)> {
    let edges = g.edges();
    let mut incidence = vec![vec![0i64; edges.len()]; g.len()];
    for (i, &(p, r)) in edges.iter().enumerate() {
        incidence[p][i] = 1;
        incidence[r][i] = 1;
    }
    let complement = kernel_rational(&incidence);
    let failures = complement
        .iter()
        .filter(|psi| {
            let d = crate::spectra::apply_delta(lg, psi);
            d.iter().zip(psi.iter()).any(|(a, b)| *a != Q::from_integer((-2).into()) * b)
        })
        .count();
    let mut shifted = adjacency(lg);
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] += 2;
    }
    let eigen_dim = kernel_rational(&shifted).len();
    let check = IdentityCheck {
        name: "range(Xi*)^perp = ker(D + 2)".into(),
        rows_checked: complement.len(),
        failures: failures + usize::from(eigen_dim != complement.len()),
    };
    Ok((check, complement.len(), eigen_dim))
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplementReport {
    pub level: usize,
    pub vertices: usize,
    pub edges: usize,
    pub complement_dim: usize,
    pub eigen_minus2_dim: usize,
    pub all_eigen: bool,
}

/// On the line graph of Γ_n: dim range(Ξ*)^⊥ = dim ker(Δ_Θ + 2) and every
/// vector of the complement is a (−2)-eigenvector.
pub fn xi_complement_report(n: usize) -> Result<ComplementReport> {
    let g = gamma_graph(n);
    let lg = line_graph(&g);
    let (check, complement_dim, eigen_minus2_dim) = complement_check(&g, &lg)?;
    Ok(ComplementReport {
        level: n,
        vertices: g.len(),
        edges: lg.len(),
        complement_dim,
        eigen_minus2_dim,
        all_eigen: check.passed() || (complement_dim == 0 && eigen_minus2_dim == 0),
    })
}

pub fn g_eval(y: f64) -> f64 {
    y * y - 3.0 * y
}

/// The two preimages of y under g, minus branch first.
fn g_branch(sym: i8, y: f64) -> f64 {
    let s = (9.0 + 4.0 * y).max(0.0).sqrt();
    if sym == -2 {
        (3.0 - s) / 2.0
    } else {
        (3.0 + s) / 2.0
    }
}

/// g∘t = t∘f, γ∘t = ρ, c∘t = (k∘t)·h, and Σ = t(Λ) through the coding: the
/// g-branches applied from the fixed point 4 = t(3) land on t of the
/// f-branches applied from 3.
pub fn g_conjugation_suite(tol: f64) -> Result<Vec<IdentityRow>> {
    let pts = sample_points();
    let t = |x: f64| x + 1.0;
    let mut rows = vec![
        identity_row("g(t(x)) = t(f(x))", &pts, tol, |x| Ok(g_eval(t(x))), |x| t(f_eval(x)))?,
        identity_row("gamma(t(x)) = rho(x)", &pts, tol, |x| WeightFn::GammaW.checked(t(x)), |x| WeightFn::Rho.eval(x))?,
        identity_row(
            "c(t(x)) = k(t(x)) h(x)",
            &pts,
            tol,
            |x| WeightFn::CW.checked(t(x)),
            |x| WeightFn::K.eval(t(x)) * WeightFn::H.eval(x),
        )?,
    ];
    let len = 12;
    let mut err: f64 = 0.0;
    let mut count = 0;
    for bits in (0..1u64 << len).step_by(61) {
        let code = JuliaCode::from_bits(bits, len);
        let mut y = 4.0;
        for &s in code.0.iter().rev() {
            y = g_branch(s, y);
        }
        err = err.max((y - t(code_to_point(&code, 1e-15)?.value)).abs());
        count += 1;
    }
    rows.push(IdentityRow { name: "g-coding = t(f-coding)".into(), max_abs_error: err, points: count, passed: err < tol, erratum: None });
    let samples = lambda_samples(10);
    let outside = samples.iter().map(|&x| ((-1.0 - t(x)).max(t(x) - 4.0)).max(0.0)).fold(0.0, f64::max);
    rows.push(IdentityRow {
        name: "t(Lambda) in [-1, 4]".into(),
        max_abs_error: outside,
        points: samples.len(),
        passed: outside == 0.0,
        erratum: None,
    });
    Ok(rows)
}

/// ⟨Δ_Θⁿθ₀, θ₀⟩ on line_graph(pascal_ball(m)) against
/// ∫ (x + 1)ⁿ (x + 3) h dν_ρ, n = 0..=max_n.
pub fn theta0_moment_check(max_n: usize, tol: f64) -> Result<MomentTable> {
    let ball = ball_for_moments(max_n, 2)?;
    let lg = line_graph(&ball);
    let th = theta0(&ball);
    let graph: Vec<Q> = (0..=max_n).map(|n| Q::from_integer(graph_moment(&lg, &th, n).into())).collect();
    let transfer = theta0_moments_transfer(max_n + 1, 1e-12)?;
    Ok(MomentTable::new("theta0", &graph, &transfer, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::pascal_ball;
    use crate::spectra::dot_int;

    #[test]
    fn theta0_shape() {
        let ball = pascal_ball(3).unwrap();
        let th = theta0(&ball);
        let support: Vec<i128> = th.iter().copied().filter(|&x| x != 0).collect();
        assert_eq!(support.len(), 4);
        assert!(support.iter().all(|x| x.abs() == 1));
        assert_eq!(dot_int(&th, &th), 4);
        let ones = vec![1i128; ball.len()];
        assert!(xi_star_int(&ball, &ones).iter().all(|&x| x == 2));
    }

    #[test]
    fn identities_on_small_graphs() {
        for c in verify_xi_identities(&pascal_ball(3).unwrap(), 200).unwrap() {
            assert!(c.passed(), "{c:?}");
        }
        for c in verify_xi_identities(&gamma_graph(2), 200).unwrap() {
            assert!(c.passed(), "{c:?}");
        }
        let r = xi_complement_report(1).unwrap();
        assert_eq!(r.complement_dim, r.edges - r.vertices);
        assert!(r.all_eigen);
    }

    #[test]
    fn conjugation() {
        assert_eq!(g_eval(4.0), 4.0);
        assert_eq!(WeightFn::GammaW.eval(-1.0), 0.4);
        for row in g_conjugation_suite(1e-10).unwrap() {
            assert!(row.passed, "{row:?}");
        }
    }
}
