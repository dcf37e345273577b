//! Named verification suites: each runs a set of independent checks in
//! parallel and returns them in a fixed order.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::compact::{
    cylinder_masses, e1_orthogonality, en_structure_check, harmonic_scaling_check, invariant_charpoly,
    q0bar_constant, qbar_x_check, sommet_mass, verify_e1_identities, verify_tau_measurability,
    verify_upstairs_identities, CZeroVec, Symmetry, TriangularFn,
};
use crate::error::{Error, Result};
use crate::field::{q, QuadraticScalar, Q};
use crate::graph::{covering_to_gamma0, gamma_graph, hat, is_partageable, pascal_ball, triangle_graph, apexes};
use crate::plane::{anchored_isomorphism, contraction_fixed_cells, origin_images, parity_patch};
use crate::sierpinski::{g_conjugation_suite, verify_xi_identities, xi_complement_report};
use crate::spectra::{
    char_poly_of_graph, constrained_eigenbasis, eigenspace_rational, lifting_law_check, q0_norm_constant,
    qx_scaling_check, closed_form_charpoly, verify_decimation_identities, verify_fixture_relations, IdentityCheck,
};
use crate::transfer::{sigma_decay_check, weight_identity_suite, IdentityRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    ErratumCandidate,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::ErratumCandidate => "erratum-candidate",
            Status::Fail => "fail",
        }
    }

    pub fn from_label(s: &str) -> Status {
        match s {
            "pass" => Status::Pass,
            "erratum-candidate" => Status::ErratumCandidate,
            _ => Status::Fail,
        }
    }

    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub values: Value,
    pub seconds: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, status: Status, values: Value) -> Check {
        Check { name: name.into(), status, values, seconds: 0.0 }
    }

    pub fn from_identities(name: impl Into<String>, checks: &[IdentityCheck]) -> Check {
        let ok = !checks.is_empty() && checks.iter().all(IdentityCheck::passed);
        Check::new(name, Status::from_bool(ok), json!(checks))
    }

    /// A transfer identity row; a failing row with an erratum note is an
    /// erratum-candidate.
    pub fn from_row(row: &IdentityRow) -> Check {
        let status = match (row.passed, &row.erratum) {
            (true, _) => Status::Pass,
            (false, Some(_)) => Status::ErratumCandidate,
            (false, None) => Status::Fail,
        };
        Check::new(row.name.clone(), status, json!(row))
    }
}

/// Worst status of a list: fail beats erratum-candidate beats pass.
pub fn overall(checks: &[Check]) -> Status {
    checks.iter().map(|c| c.status).max().unwrap_or(Status::Fail)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Graph,
    Decimation,
    Charpoly,
    Eigenspaces,
    Lifting,
    Q0Constant,
    Fixtures,
    Transfer,
    Plane,
    Compact,
    Sierpinski,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Graph,
        Suite::Decimation,
        Suite::Charpoly,
        Suite::Eigenspaces,
        Suite::Lifting,
        Suite::Q0Constant,
        Suite::Fixtures,
        Suite::Transfer,
        Suite::Plane,
        Suite::Compact,
        Suite::Sierpinski,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Graph => "graph",
            Suite::Decimation => "decimation",
            Suite::Charpoly => "charpoly",
            Suite::Eigenspaces => "eigenspaces",
            Suite::Lifting => "lifting",
            Suite::Q0Constant => "q0-constant",
            Suite::Fixtures => "fixtures",
            Suite::Transfer => "transfer",
            Suite::Plane => "plane",
            Suite::Compact => "compact",
            Suite::Sierpinski => "sierpinski",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SuiteOptions {
    /// Level for single-level suites.
    pub level: usize,
    /// Largest level for suites that sweep levels.
    pub max_level: usize,
    pub tol: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { level: 3, max_level: 4, tol: 1e-10 }
    }
}

type Job = Box<dyn Fn() -> Result<Check> + Send + Sync>;

fn job(f: impl Fn() -> Result<Check> + Send + Sync + 'static) -> Job {
    Box::new(f)
}

/// Runs the jobs concurrently; the output keeps the job order. A job that
/// returns an error becomes a failing check.
fn run_jobs(jobs: Vec<(String, Job)>) -> Vec<Check> {
    jobs.into_par_iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let mut c = f().unwrap_or_else(|e| Check::new(name, Status::Fail, json!({ "error": e.to_string() })));
            c.seconds = start.elapsed().as_secs_f64();
            c
        })
        .collect()
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<Vec<Check>> {
    let jobs = match suite {
        Suite::Graph => graph_jobs(opts.max_level),
        Suite::Decimation => decimation_jobs(opts.level),
        Suite::Charpoly => charpoly_jobs(opts.max_level),
        Suite::Eigenspaces => eigenspace_jobs(opts.max_level),
        Suite::Lifting => lifting_jobs(opts.level),
        Suite::Q0Constant => q0_jobs(),
        Suite::Fixtures => fixture_jobs(opts.level),
        Suite::Transfer => return transfer_checks(opts.tol),
        Suite::Plane => plane_jobs(opts.max_level.min(5)),
        Suite::Compact => compact_jobs(opts.level),
        Suite::Sierpinski => sierpinski_jobs(opts.level, opts.tol),
    };
    Ok(run_jobs(jobs))
}

fn graph_jobs(max_level: usize) -> Vec<(String, Job)> {
    let mut jobs: Vec<(String, Job)> = Vec::new();
    for n in 0..=max_level.min(5) {
        let name = format!("Gamma_{n}: 4*3^n vertices, 3-regular, covering of K4, not bipartite");
        jobs.push((
            name.clone(),
            job(move || {
                let g = gamma_graph(n);
                g.validate()?;
                let regular = (0..g.len()).all(|v| g.degree(v) == 3);
                let nb = g.neighbors(0).to_vec();
                let cover = covering_to_gamma0(&g, &[(0, 0), (nb[0], 1), (nb[1], 2), (nb[2], 3)])?;
                let bipartite = is_partageable(&g)?.is_some();
                let ok = g.len() == 4 * 3usize.pow(n as u32) && regular && cover.is_valid(&g) && !bipartite;
                Ok(Check::new(
                    name.clone(),
                    Status::from_bool(ok),
                    json!({ "vertices": g.len(), "regular": regular, "covering": cover.is_valid(&g), "bipartite": bipartite }),
                ))
            }),
        ));
    }
    for n in 1..=max_level.clamp(1, 6) {
        let name = format!("T_{n}: 3^n vertices, 3 corners at distance 2^n - 1, hat fibers are triangles");
        jobs.push((
            name.clone(),
            job(move || {
                let t = triangle_graph(n)?;
                t.validate()?;
                let b = t.boundary_vertices();
                let d = t.distances_from(&[b[0]]);
                let dist_ok = b[1..].iter().all(|&c| d[c] == Some((1 << n) - 1));
                let h = hat(&t)?;
                let parent = h.parent_map().ok_or(Error::MissingParentMap)?;
                let fibers_ok = h.triangles().iter().all(|tri| tri.iter().all(|&v| parent[v] == parent[tri[0]]))
                    && h.triangles().len() == t.len();
                let ok = t.len() == 3usize.pow(n as u32) && b.len() == 3 && dist_ok && fibers_ok;
                Ok(Check::new(
                    name.clone(),
                    Status::from_bool(ok),
                    json!({ "vertices": t.len(), "corners": b.len(), "corner_distance": dist_ok, "fibers": fibers_ok }),
                ))
            }),
        ));
    }
    jobs
}

fn decimation_jobs(level: usize) -> Vec<(String, Job)> {
    let mut jobs: Vec<(String, Job)> = Vec::new();
    let name = format!("decimation identities on Gamma_{level}");
    jobs.push((name.clone(), job(move || Ok(Check::from_identities(name.clone(), &verify_decimation_identities(&gamma_graph(level))?)))));
    let m = level.max(3);
    let name = format!("decimation identities on pascal_ball({m})");
    jobs.push((name.clone(), job(move || Ok(Check::from_identities(name.clone(), &verify_decimation_identities(&pascal_ball(m)?)?)))));
    jobs
}

fn charpoly_jobs(max_level: usize) -> Vec<(String, Job)> {
    (0..=max_level)
        .map(|n| {
            let name = format!("char poly of Gamma_{n} = closed form");
            let j = job({
                let name = name.clone();
                move || {
                    let computed = char_poly_of_graph(&gamma_graph(n));
                    let closed = closed_form_charpoly(n as u32);
                    Ok(Check::new(
                        name.clone(),
                        Status::from_bool(computed == closed),
                        json!({ "vertices": 4 * 3usize.pow(n as u32), "degree": computed.degree(), "equal": computed == closed }),
                    ))
                }
            });
            (name, j)
        })
        .collect()
}

/// Dimensions of ker(Δ − x) on Γ_n against the exponents of the closed form.
pub fn eigenspace_dims(n: usize) -> Value {
    let g = gamma_graph(n);
    let dim = |x: i64| eigenspace_rational(&g, &q(x)).len();
    json!({ "0": dim(0), "-2": dim(-2), "3": dim(3), "-3": dim(-3) })
}

fn eigenspace_jobs(max_level: usize) -> Vec<(String, Job)> {
    let mut jobs: Vec<(String, Job)> = Vec::new();
    for n in 1..=max_level {
        let name = format!("eigenspace dimensions on Gamma_{n}");
        jobs.push((
            name.clone(),
            job(move || {
                let d = eigenspace_dims(n);
                let e = 2 * 3u64.pow(n as u32 - 1);
                let ok = d["0"] == e && d["-2"] == e + 1 && d["3"] == 1 && d["-3"] == 0;
                Ok(Check::new(name.clone(), Status::from_bool(ok), json!({ "dims": d, "expected_0": e, "expected_-2": e + 1 })))
            }),
        ));
        let name = format!("constraint bases on Gamma_{n} = eigenspaces");
        jobs.push((
            name.clone(),
            job(move || {
                let h = hat(&gamma_graph(n - 1))?;
                let z = constrained_eigenbasis(&h, 0)?.len();
                let m = constrained_eigenbasis(&h, -2)?.len();
                let ez = eigenspace_rational(&h, &q(0)).len();
                let em = eigenspace_rational(&h, &q(-2)).len();
                Ok(Check::new(
                    name.clone(),
                    Status::from_bool(z == ez && m == em),
                    json!({ "constrained_0": z, "eigen_0": ez, "constrained_-2": m, "eigen_-2": em }),
                ))
            }),
        ));
    }
    jobs
}

fn lifting_jobs(level: usize) -> Vec<(String, Job)> {
    let name = format!("lifting law R_x from Gamma_{level}");
    vec![(
        name.clone(),
        job(move || {
            let rows = lifting_law_check(level as u32)?;
            let ok = rows.iter().all(|r| r.passed());
            Ok(Check::new(name.clone(), Status::from_bool(ok), json!(rows)))
        }),
    )]
}

fn q0_jobs() -> Vec<(String, Job)> {
    let mut jobs: Vec<(String, Job)> = vec![(
        "Q0 norm constant (alpha, beta)".into(),
        job(|| {
            let r = q0_norm_constant(&pascal_ball(4)?)?;
            Ok(Check::new(
                "Q0 norm constant (alpha, beta)",
                Status::from_label(r.status()),
                json!({ "report": r, "provenance": { "alpha": "measured", "beta": "measured", "stated_alpha": "stated", "stated_beta": "stated" } }),
            ))
        }),
    )];
    for sign in [1i64, -1] {
        let name = format!("Q_x scaling, x = (1 {} sqrt 13)/2", if sign > 0 { "+" } else { "-" });
        jobs.push((
            name.clone(),
            job(move || {
                let ball = pascal_ball(4)?;
                let alpha: Q = q0_norm_constant(&ball)?.alpha.parse().map_err(|_| Error::InvalidArgument("alpha".into()))?;
                let x = QuadraticScalar::from_ints(1, sign, 2, 13);
                let r = qx_scaling_check(&ball, &x, &alpha)?;
                let ok = r.eigen_equation
                    && r.norm_law
                    && r.constant_on_exterior_edges_of_2_triangles
                    && r.constant_on_exterior_edges_of_3_triangles
                    && r.p3_recovers_psi;
                Ok(Check::new(name.clone(), Status::from_bool(ok), json!({ "report": r, "alpha": alpha.to_string() })))
            }),
        ));
    }
    jobs
}

fn fixture_jobs(level: usize) -> Vec<(String, Job)> {
    let m = level.max(2);
    let name = format!("fixture relations on pascal_ball({m})");
    vec![(name.clone(), job(move || Ok(Check::from_identities(name.clone(), &verify_fixture_relations(&pascal_ball(m)?)?))))]
}

fn transfer_checks(tol: f64) -> Result<Vec<Check>> {
    let mut out: Vec<Check> = weight_identity_suite(tol)?.iter().map(Check::from_row).collect();
    let d = sigma_decay_check(12)?;
    out.push(Check::new("L_sigma^d(1) decays", Status::from_bool(d.strictly_decreasing && d.below_half_by_8), json!(d)));
    Ok(out)
}

fn plane_jobs(max_level: usize) -> Vec<(String, Job)> {
    let mut jobs: Vec<(String, Job)> = Vec::new();
    for m in 1..=max_level.max(1) {
        let name = format!("parity_patch({m}) = pascal_ball({m}); fixed cells = group images of the origin");
        jobs.push((
            name.clone(),
            job(move || {
                let (patch, _) = parity_patch(m as u32)?;
                let ball = pascal_ball(m)?;
                let (a, b) = apexes(&ball);
                let iso = anchored_isomorphism(&patch, &ball, &[(0, a), (1, b)]).is_some();
                let fixed = contraction_fixed_cells(m as u32)?;
                let images = origin_images(m as u32)?;
                Ok(Check::new(
                    name.clone(),
                    Status::from_bool(iso && fixed == images),
                    json!({ "isomorphic": iso, "fixed": fixed, "images": images }),
                ))
            }),
        ));
    }
    jobs
}

fn compact_jobs(level: usize) -> Vec<(String, Job)> {
    let level = level.clamp(2, 6);
    let mut jobs: Vec<(String, Job)> = Vec::new();
    for n in 1..=level {
        let name = format!("cylinder masses 1/(6*3^{n})");
        jobs.push((
            name.clone(),
            job(move || {
                let r = cylinder_masses(n)?;
                Ok(Check::new(name.clone(), Status::from_bool(r.all_masses_equal && r.theta_uniform && r.brechet_uniform), json!(r)))
            }),
        ));
        let name = format!("sommet mass at level {n}");
        jobs.push((
            name.clone(),
            job(move || {
                let r = sommet_mass(n)?;
                Ok(Check::new(name.clone(), Status::from_label(r.status), json!(r)))
            }),
        ));
    }
    for n in 2..=level + 1 {
        let name = format!("harmonic scaling at level {n}");
        jobs.push((
            name.clone(),
            job(move || {
                let r = harmonic_scaling_check(n)?;
                Ok(Check::new(name.clone(), Status::from_bool(r.passed()), json!(r)))
            }),
        ));
    }
    for n in 2..=level {
        let name = format!("E_n = F_n + G_n at level {n}");
        jobs.push((
            name.clone(),
            job(move || {
                let r = en_structure_check(n)?;
                Ok(Check::new(name.clone(), Status::from_bool(r.passed()), json!(r)))
            }),
        ));
    }
    for n in 1..=4 {
        for sym in [Symmetry::Invariant, Symmetry::Semi] {
            if sym == Symmetry::Semi && n == 1 {
                continue;
            }
            let name = format!("symmetric char poly, {sym:?}, level {n}");
            jobs.push((
                name.clone(),
                job(move || {
                    let r = invariant_charpoly(n, sym)?;
                    Ok(Check::new(name.clone(), Status::from_label(r.status()), json!(r)))
                }),
            ));
        }
    }
    jobs.push((
        "Q0bar norm constants".into(),
        job(|| {
            let r = q0bar_constant(&[3, 4, 5])?;
            Ok(Check::new("Q0bar norm constants", Status::from_label(r.status()), json!(r)))
        }),
    ));
    for sign in [1i64, -1] {
        let name = format!("Q0bar_x factor, sign {sign}");
        jobs.push((
            name.clone(),
            job(move || {
                let r = qbar_x_check(3, sign)?;
                Ok(Check::new(name.clone(), Status::from_label(r.status()), json!(r)))
            }),
        ));
    }
    for n in 2..=level {
        let name = format!("tau model at level {n}");
        jobs.push((name.clone(), job(move || Ok(Check::from_identities(name.clone(), &verify_tau_measurability(n)?)))));
    }
    jobs.push((
        "upstairs identities on the cylinder model".into(),
        job(|| {
            let phi = TriangularFn::from_i64(2, &[1, -2, 0, 3, 1, 0, -1, 2, 5])?;
            Ok(Check::from_identities("upstairs identities on the cylinder model", &verify_upstairs_identities(4, &phi)?))
        }),
    ));
    jobs.push((
        "E1 identities".into(),
        job(|| {
            let v = CZeroVec::from_i64(1, -1, 0)?;
            Ok(Check::from_identities("E1 identities", &verify_e1_identities(&v, 4)?))
        }),
    ));
    for n in 2..=level.min(5) {
        let name = format!("E1 orthogonal to 0 and -2 eigenfunctions, level {n}");
        jobs.push((name.clone(), job(move || Ok(Check::from_identities(name.clone(), &[e1_orthogonality(n)?])))));
    }
    jobs
}

fn sierpinski_jobs(level: usize, tol: f64) -> Vec<(String, Job)> {
    let level = level.clamp(1, 4);
    let mut jobs: Vec<(String, Job)> = Vec::new();
    let name = format!("Xi identities on Gamma_{level}");
    jobs.push((name.clone(), job(move || Ok(Check::from_identities(name.clone(), &verify_xi_identities(&gamma_graph(level), 600)?)))));
    let m = level + 2;
    let name = format!("Xi identities on pascal_ball({m})");
    jobs.push((name.clone(), job(move || Ok(Check::from_identities(name.clone(), &verify_xi_identities(&pascal_ball(m)?, 600)?)))));
    let name = format!("range(Xi*)^perp on Gamma_{}", level.min(3));
    jobs.push((
        name.clone(),
        job(move || {
            let r = xi_complement_report(level.min(3))?;
            Ok(Check::new(name.clone(), Status::from_bool(r.all_eigen && r.complement_dim == r.eigen_minus2_dim), json!(r)))
        }),
    ));
    jobs.push((
        "conjugation by t(x) = x + 1".into(),
        job(move || {
            let rows = g_conjugation_suite(tol)?;
            let ok = rows.iter().all(|r| r.passed);
            Ok(Check::new("conjugation by t(x) = x + 1", Status::from_bool(ok), json!(rows)))
        }),
    ));
    jobs
}

/// Decimation and line-graph identities on random integer vectors over
/// Γ_level, drawn from a seeded ChaCha stream. The vectors are returned in
/// the check values so that a run can be replayed.
pub fn random_probe_checks(level: usize, seed: u64, count: usize) -> Result<Vec<Check>> {
    use crate::graph::line_graph;
    use crate::sierpinski::{xi_int, xi_star_int};
    use crate::spectra::{apply_delta_int, pi_int, pi_star_int};
    use rand::{Rng, SeedableRng};

    let g = gamma_graph(level);
    let h = hat(&g)?;
    let lg = line_graph(&g);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0..count {
        let phi: Vec<i128> = (0..g.len()).map(|_| rng.random_range(-9..=9)).collect();
        let d = apply_delta_int(&g, &phi);
        let up = pi_star_int(&h, &phi)?;
        let d_up = apply_delta_int(&h, &up);
        let dd_up = apply_delta_int(&h, &d_up);
        let up_d = pi_star_int(&h, &d)?;
        let decimation = (0..h.len()).all(|r| dd_up[r] - d_up[r] - 3 * up[r] == up_d[r]);
        let pdp = pi_int(&h, &d_up, g.len())?;
        let compression = (0..g.len()).all(|r| pdp[r] == 6 * phi[r] + d[r]);
        let lifted = xi_star_int(&g, &phi);
        let d_lifted = apply_delta_int(&lg, &lifted);
        let lifted_d = xi_star_int(&g, &d);
        let line = (0..lg.len()).all(|e| d_lifted[e] - lifted[e] == lifted_d[e]);
        let back = xi_int(&g, &lifted);
        let square = (0..g.len()).all(|r| back[r] == 3 * phi[r] + d[r]);
        let ok = decimation && compression && line && square;
        out.push(Check::new(
            format!("random probe {k} on Gamma_{level}"),
            Status::from_bool(ok),
            json!({
                "seed": seed,
                "vector": phi.iter().map(|&x| x as i64).collect::<Vec<_>>(),
                "decimation": decimation,
                "pi_delta_pi_star": compression,
                "xi_lift": line,
                "xi_square": square,
            }),
        ));
    }
    Ok(out)
}
