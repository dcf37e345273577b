//! Graph-side moments against transfer-side integrals.

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::compact::{e1_graph_moments, CZeroVec};
use crate::error::{Error, Result};
use crate::field::{q_to_f64, Q};
use crate::graph::{pascal_ball, SubstGraph};
use crate::spectra::{apply_delta_int, ball_moment, graph_moment, phi0};
use crate::transfer::{e1_moments_transfer, phi0_moments_transfer, pushforward_moments_transfer, Integral};

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub n: usize,
    /// Exact graph value.
    pub graph: String,
    pub transfer: f64,
    pub rel_err: f64,
    pub depth: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentTable {
    pub name: String,
    pub tol: f64,
    pub rows: Vec<MomentRow>,
}

impl MomentTable {
    /// rel_err = |graph − transfer| / max(1, |graph|).
    pub fn new(name: &str, graph: &[Q], transfer: &Integral, tol: f64) -> MomentTable {
        let rows = graph
            .iter()
            .zip(&transfer.values)
            .enumerate()
            .map(|(n, (g, &t))| {
                let gf = q_to_f64(g);
                let rel_err = (gf - t).abs() / gf.abs().max(1.0);
                MomentRow { n, graph: g.to_string(), transfer: t, rel_err, depth: transfer.depth, passed: rel_err < tol }
            })
            .collect();
        MomentTable { name: name.into(), tol, rows }
    }

    pub fn passed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.passed)
    }

    pub fn max_rel_err(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_err).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,graph,transfer,rel_err,depth\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.12e},{:.3e},{}\n", r.n, r.graph, r.transfer, r.rel_err, r.depth));
        }
        out
    }
}

/// Smallest Pascal ball on which moments up to `max_n` of a vector supported
/// within `spread` of the apexes are exact: 2^{m−1} > max_n + spread.
pub fn ball_for_moments(max_n: usize, spread: usize) -> Result<SubstGraph> {
    let m = (1..).find(|&m| 1usize << (m - 1) > max_n + spread).expect("finite");
    pascal_ball(m)
}

fn int_moments(g: &SubstGraph, v: &[i128], max_n: usize) -> Vec<Q> {
    (0..=max_n).map(|n| Q::from_integer(graph_moment(g, v, n).into())).collect()
}

/// ⟨Δⁿφ₀, φ₀⟩ against ∫ xⁿ h dν_ρ, n = 0..=max_n.
pub fn compare_phi0(max_n: usize, tol: f64) -> Result<MomentTable> {
    let ball = ball_for_moments(max_n, 1)?;
    let p = phi0(&ball);
    let graph: Vec<Q> =
        (0..=max_n).map(|n| ball_moment(&ball, &p, n).map(|x| Q::from_integer(x.into()))).collect::<Result<_>>()?;
    let transfer = phi0_moments_transfer(max_n + 1, 1e-12)?;
    Ok(MomentTable::new("phi0", &graph, &transfer, tol))
}

/// ⟨Δⁿ(Δ + 2)φ₀, (Δ + 2)φ₀⟩ against ∫ L_θ(lⁿ)·h dν_ρ.
pub fn pushforward_moment_check(max_n: usize, tol: f64) -> Result<MomentTable> {
    let ball = ball_for_moments(max_n, 2)?;
    let p = phi0(&ball);
    let d = apply_delta_int(&ball, &p);
    let v: Vec<i128> = d.iter().zip(&p).map(|(a, b)| a + 2 * b).collect();
    let graph = int_moments(&ball, &v, max_n);
    let transfer = pushforward_moments_transfer(max_n + 1, 1e-12)?;
    Ok(MomentTable::new("pushforward", &graph, &transfer, tol))
}

/// ⟨Δ̄ᴺφ_v, φ_v⟩/‖v‖₀² against ∫ xᴺ 3j dν_ζ.
pub fn compare_e1(v: &CZeroVec, max_n: usize, tol: f64) -> Result<MomentTable> {
    let norm = v.norm0();
    if norm.to_f64().is_none_or(|x| x == 0.0) {
        return Err(Error::InvalidArgument("v must be nonzero".into()));
    }
    let graph: Vec<Q> = e1_graph_moments(v, max_n)?.into_iter().map(|m| m / &norm).collect();
    let transfer = e1_moments_transfer(max_n + 1, 1e-10)?;
    Ok(MomentTable::new("e1", &graph, &transfer, tol))
}
