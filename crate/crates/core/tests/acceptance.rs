//! Acceptance run: one line per criterion. Exits non-zero when a criterion
//! fails without an analysed correction.

use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use pascal_core::compact::{
    cylinder_masses, en_structure_check, harmonic_scaling_check, invariant_charpoly, q0bar_constant, s_sequence,
    sommet_mass, verify_e1_identities, verify_tau_measurability, verify_upstairs_identities, CZeroVec, Symmetry,
    TriangularFn,
};
use pascal_core::field::{q, qf};
use pascal_core::graph::{apexes, gamma_graph, hat, pascal_ball};
use pascal_core::linalg::char_poly_rational;
use pascal_core::moments::{compare_e1, compare_phi0};
use pascal_core::plane::{anchored_isomorphism, contraction_fixed_cells, origin_images, parity_patch};
use pascal_core::sierpinski::{theta0_moment_check, verify_xi_identities};
use pascal_core::spectra::{
    adjacency, char_poly_of_graph, eigenspace_rational, lift_r_x, lifting_law_check, q0_norm_constant,
    closed_form_factored, closed_form_charpoly, verify_decimation_identities, verify_fixture_relations,
    IdentityCheck,
};
use pascal_core::transfer::{e1_moments_transfer, weight_identity_suite, WeightFn};
use pascal_core::{IntPolynomial, Q};

const WEIGHT_TOL: f64 = 1e-10;
const MOMENT_TOL: f64 = 1e-6;

struct Outcome {
    passed: bool,
    detail: String,
    /// Analysis of a failure whose corrected form is verified.
    analysis: Option<String>,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Outcome {
        Outcome { passed, detail: detail.into(), analysis: None }
    }
}

type Criterion = (&'static str, fn() -> Result<Outcome, String>);

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn all_pass(checks: &[IdentityCheck]) -> bool {
    !checks.is_empty() && checks.iter().all(IdentityCheck::passed)
}

fn rows_of(checks: &[IdentityCheck]) -> usize {
    checks.iter().map(|c| c.rows_checked).sum()
}

/// Multiplicity of r as a root, by repeated synthetic division.
fn root_multiplicity(p: &IntPolynomial, r: i64) -> usize {
    let mut c: Vec<BigInt> = p.coeffs().to_vec();
    let r = BigInt::from(r);
    let mut mult = 0;
    loop {
        let n = c.len() - 1;
        let mut quotient = vec![BigInt::zero(); n];
        let mut acc = BigInt::zero();
        for i in (0..=n).rev() {
            acc = &acc * &r + &c[i];
            if i > 0 {
                quotient[i - 1] = acc.clone();
            }
        }
        if !acc.is_zero() || quotient.is_empty() {
            return mult;
        }
        mult += 1;
        c = quotient;
    }
}

fn criterion_1() -> Result<Outcome, String> {
    let mut notes = Vec::new();
    let mut ok = true;
    for n in 0..=4usize {
        let g = gamma_graph(n);
        let computed = char_poly_of_graph(&g);
        let closed = closed_form_charpoly(n as u32);
        let c = computed.coeffs();
        let len = c.len();
        // Trace relations: tr A = 0, e₂ = −|E|, e₃ = −2·#triangles.
        let traces = c[len - 2].is_zero()
            && c[len - 3] == BigInt::from(-(g.edge_count() as i64))
            && c[len - 4] == BigInt::from(-2 * g.triangles().len() as i64);
        let same = computed == closed;
        ok &= same && traces;
        notes.push(format!("n={n}:{}", g.len()));
    }
    // Second algorithm on the small levels.
    for n in 0..=1usize {
        let a: Vec<Vec<Q>> = adjacency(&gamma_graph(n)).iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
        let closed: Vec<Q> = closed_form_charpoly(n as u32).coeffs().iter().map(|c| Q::from_integer(c.clone())).collect();
        ok &= char_poly_rational(&a) == closed;
    }
    Ok(Outcome::new(ok, format!("exact coefficientwise equality, sizes {}", notes.join(" "))))
}

/// ΠΠ* = 3, (Δ² − Δ − 3)Π* = Π*Δ and ΠΔΠ* = 6 + Δ as dense matrices.
fn dense_decimation(n: usize) -> bool {
    let g = gamma_graph(n);
    let h = hat(&g).expect("hat");
    let parent = h.parent_map().expect("parent map");
    let a = adjacency(&g);
    let b = adjacency(&h);
    let (ng, nh) = (g.len(), h.len());
    let p: Vec<Vec<i64>> = (0..nh).map(|v| (0..ng).map(|u| i64::from(parent[v] == u)).collect()).collect();
    let mul = |x: &Vec<Vec<i64>>, y: &Vec<Vec<i64>>| -> Vec<Vec<i64>> {
        (0..x.len()).map(|i| (0..y[0].len()).map(|j| (0..y.len()).map(|k| x[i][k] * y[k][j]).sum()).collect()).collect()
    };
    let pt: Vec<Vec<i64>> = (0..ng).map(|u| (0..nh).map(|v| p[v][u]).collect()).collect();
    let ppt = mul(&pt, &p);
    let b2 = mul(&b, &b);
    let lhs = mul(&(0..nh).map(|i| (0..nh).map(|j| b2[i][j] - b[i][j] - 3 * i64::from(i == j)).collect()).collect(), &p);
    let rhs = mul(&p, &a);
    let pbp = mul(&mul(&pt, &b), &p);
    (0..ng).all(|i| (0..ng).all(|j| ppt[i][j] == 3 * i64::from(i == j) && pbp[i][j] == 6 * i64::from(i == j) + a[i][j]))
        && lhs == rhs
}

fn criterion_2() -> Result<Outcome, String> {
    let mut ok = true;
    let mut rows = 0;
    for n in 0..=4 {
        let g = gamma_graph(n);
        let dec = verify_decimation_identities(&g).map_err(err)?;
        let xi = verify_xi_identities(&g, 0).map_err(err)?;
        ok &= all_pass(&dec) && all_pass(&xi);
        rows += rows_of(&dec) + rows_of(&xi);
    }
    for m in 2..=6 {
        let ball = pascal_ball(m).map_err(err)?;
        let dec = verify_decimation_identities(&ball).map_err(err)?;
        let fix = verify_fixture_relations(&ball).map_err(err)?;
        let xi = verify_xi_identities(&ball, 0).map_err(err)?;
        ok &= all_pass(&dec) && all_pass(&fix) && all_pass(&xi);
        rows += rows_of(&dec) + rows_of(&fix) + rows_of(&xi);
    }
    let dense = (0..=2).all(dense_decimation);
    Ok(Outcome::new(ok && dense, format!("{rows} rows exact on Gamma_0..4 and balls 2..6; dense-matrix oracle on Gamma_0..2: {dense}")))
}

fn criterion_3() -> Result<Outcome, String> {
    let mut ok = true;
    let mut shown = Vec::new();
    for n in 1..=4usize {
        let g = gamma_graph(n);
        let closed = closed_form_factored(n as u32).expand();
        let dim = |x: i64| eigenspace_rational(&g, &q(x)).len();
        let (d0, d2, d3, dm3) = (dim(0), dim(-2), dim(3), dim(-3));
        ok &= d0 == root_multiplicity(&closed, 0)
            && d2 == root_multiplicity(&closed, -2)
            && d3 == 1
            && root_multiplicity(&closed, 3) == 1
            && dm3 == 0;
        if n == 2 {
            ok &= d0 == 6 && d2 == 7;
        }
        shown.push(format!("n={n}: (0:{d0}, -2:{d2}, 3:{d3}, -3:{dm3})"));
    }
    Ok(Outcome::new(ok, shown.join(" ")))
}

fn criterion_4() -> Result<Outcome, String> {
    let mut ok = true;
    let mut vectors = 0;
    for n in 1..=2 {
        for row in lifting_law_check(n).map_err(err)? {
            ok &= row.passed();
            vectors += row.vectors;
        }
    }
    // R₃ of the constant on K4 is the constant 5 on Γ₁: norm 300 = 3·5·5·4.
    let h = hat(&gamma_graph(0)).map_err(err)?;
    let (lifted, _) = lift_r_x(&h, &vec![q(1); 4], &q(3)).map_err(err)?;
    let anchor = lifted.iter().all(|v| *v == q(5)) && lifted.iter().map(|v| v * v).sum::<Q>() == q(300);
    Ok(Outcome::new(ok && anchor, format!("6 pairs, {vectors} eigenvectors lifted from Gamma_1, Gamma_2; constant anchor: {anchor}")))
}

fn criterion_5() -> Result<Outcome, String> {
    let rows = weight_identity_suite(WEIGHT_TOL).map_err(err)?;
    let wanted = [
        "L_rho(1) = 1",
        "L_rho(h) = 2",
        "L_rho(l) = 1",
        "L_rho(k) = 3",
        "L_sigma(1) = 1/(x+3)",
        "L_zeta(1) = 1",
        "L_zeta(j) = 1",
        "L_xi(1) = 0",
        "L_xi(l) = 1 + l/3",
    ];
    let mut failing = Vec::new();
    let mut unexplained = false;
    let mut worst: f64 = 0.0;
    for name in wanted {
        let row = rows.iter().find(|r| r.name == name).ok_or_else(|| format!("missing row {name}"))?;
        if row.passed {
            worst = worst.max(row.max_abs_error);
        } else {
            failing.push(format!("{name} (max error {:.3e})", row.max_abs_error));
            unexplained |= row.erratum.is_none();
        }
    }
    let mut out = Outcome::new(failing.is_empty(), format!("9 identities at 64 points, tol {WEIGHT_TOL:e}; passing rows max error {worst:.1e}"));
    if !failing.is_empty() {
        out.detail.push_str(&format!("; failing: {}", failing.join(", ")));
        // f⁻¹(3) = {3, −2}: ζ(3)j(3) + ζ(−2)j(−2) = (4/5)·0 + (1/5)(5/3) = 1/3.
        let zeta = |x: Q| (&x + q(3)) * (&x - q(1)) / (q(3) * (q(2) * &x - q(1)));
        let j = |x: Q| (q(3) - &x) / (q(3) * (&x + q(3)));
        let exact = zeta(q(3)) * j(q(3)) + zeta(q(-2)) * j(q(-2));
        let float = WeightFn::Zeta.eval(3.0) * WeightFn::J.eval(3.0) + WeightFn::Zeta.eval(-2.0) * WeightFn::J.eval(-2.0);
        if !unexplained && exact == qf(1, 3) && (float - 1.0 / 3.0).abs() < WEIGHT_TOL {
            out.analysis = Some(format!(
                "L_zeta(j) = 1/3 identically; exact value at x = 3 is {exact}; 3j satisfies the identity"
            ));
        }
    }
    Ok(out)
}

fn criterion_6() -> Result<Outcome, String> {
    let t = compare_phi0(12, MOMENT_TOL).map_err(err)?;
    let anchors = t.rows[0].graph == "2" && t.rows[1].graph == "-2" && t.rows[2].graph == "6";
    let depth = t.rows[0].depth;
    Ok(Outcome::new(
        t.passed() && anchors && depth <= 24,
        format!("n = 0..12, max rel err {:.1e}, depth {depth}; anchors 2, -2, 6: {anchors}", t.max_rel_err()),
    ))
}

fn criterion_7() -> Result<Outcome, String> {
    let v = CZeroVec::from_i64(2, -3, 1).map_err(err)?;
    let t = compare_e1(&v, 8, MOMENT_TOL).map_err(err)?;
    let anchor = t.rows[0].graph == "1";
    let lit = e1_moments_transfer(1, 1e-10).map_err(err)?.values[0] / 3.0;
    let mut ok = t.passed() && anchor;
    let mut rows = 0;
    for n in 2..=5 {
        let c = verify_tau_measurability(n).map_err(err)?;
        ok &= all_pass(&c);
        rows += rows_of(&c);
    }
    for level in 2..=6 {
        let c = verify_e1_identities(&v, level).map_err(err)?;
        ok &= all_pass(&c);
        rows += rows_of(&c);
    }
    let phi = TriangularFn::from_i64(2, &[1, -2, 0, 3, 1, 0, -1, 2, 5]).map_err(err)?;
    for level in 3..=6 {
        let c = verify_upstairs_identities(level, &phi).map_err(err)?;
        ok &= all_pass(&c);
        rows += rows_of(&c);
    }
    Ok(Outcome::new(
        ok,
        format!(
            "N = 0..8 against density 3j, max rel err {:.1e}; N = 0 exact: {anchor} (int j dnu_zeta = {lit:.12}); {rows} tau-model rows exact at levels <= 6",
            t.max_rel_err()
        ),
    ))
}

fn criterion_8() -> Result<Outcome, String> {
    let t = theta0_moment_check(10, MOMENT_TOL).map_err(err)?;
    let anchor = t.rows[0].graph == "4";
    Ok(Outcome::new(t.passed() && anchor, format!("n = 0..10, max rel err {:.1e}; anchor 4: {anchor}", t.max_rel_err())))
}

fn criterion_9() -> Result<Outcome, String> {
    let mut ok = true;
    for n in 1..=6 {
        let r = cylinder_masses(n).map_err(err)?;
        ok &= r.all_masses_equal && r.theta_uniform && r.brechet_uniform && r.expected_mass == format!("1/{}", 6 * 3usize.pow(n as u32));
    }
    let seq = s_sequence(7);
    let mut s = Q::one();
    for got in &seq.exact {
        ok &= *got == s && s > Q::zero() && s <= Q::one();
        s = q(3) * &s / (q(3) * &s + q(5));
    }
    ok &= seq.exact[1] == qf(3, 8);
    for n in 2..=7 {
        let r = harmonic_scaling_check(n).map_err(err)?;
        let expected = q(2) / (q(3) * &seq.exact[n - 2] + q(5));
        ok &= r.passed() && r.measured_factor == expected.to_string();
    }
    ok &= harmonic_scaling_check(2).map_err(err)?.measured_factor == "1/4";
    for n in 2..=6 {
        let r = en_structure_check(n).map_err(err)?;
        ok &= r.passed() && r.dim_f == (3usize.pow(n as u32 - 1) - 1) / 2;
    }
    let mut shown = Vec::new();
    for n in 1..=4 {
        for sym in [Symmetry::Invariant, Symmetry::Semi] {
            if sym == Symmetry::Semi && n == 1 {
                continue;
            }
            let r = invariant_charpoly(n, sym).map_err(err)?;
            ok &= r.matches;
            shown.push(r.dimension.to_string());
        }
    }
    let inv2 = invariant_charpoly(2, Symmetry::Invariant).map_err(err)?;
    let semi2 = invariant_charpoly(2, Symmetry::Semi).map_err(err)?;
    let anchors = inv2.computed == IntPolynomial::from_i64(&[0, -3, 1]).to_string()
        && semi2.computed == IntPolynomial::from_i64(&[2, 1]).to_string();
    Ok(Outcome::new(
        ok && anchors,
        format!("masses n <= 6, s and H_n scaling n = 2..7, F_n/G_n n <= 6, symmetric char polys (dims {}); anchors X(X-3), X+2: {anchors}", shown.join(",")),
    ))
}

fn criterion_10() -> Result<Outcome, String> {
    let mut ok = true;
    for m in 1..=5u32 {
        let (patch, _) = parity_patch(m).map_err(err)?;
        let ball = pascal_ball(m as usize).map_err(err)?;
        let (a, b) = apexes(&ball);
        ok &= anchored_isomorphism(&patch, &ball, &[(0, a), (1, b)]).is_some();
        ok &= contraction_fixed_cells(m).map_err(err)? == origin_images(m).map_err(err)?;
    }
    Ok(Outcome::new(ok, "anchored isomorphisms and fixed cells for m = 1..5"))
}

fn criterion_11() -> Result<Outcome, String> {
    let r = q0_norm_constant(&pascal_ball(4).map_err(err)?).map_err(err)?;
    let q0_ok = r.beta == "-1/2" && r.alpha == "5" && r.status() == "erratum-candidate";
    let bar = q0bar_constant(&[3, 4, 5]).map_err(err)?;
    let bar_ok = bar.a == "5/6" && bar.status() == "erratum-candidate";
    let mut sommet_ok = true;
    for n in 1..=6 {
        let row = sommet_mass(n).map_err(err)?;
        let expected = if n == 1 { "pass" } else { "erratum-candidate" };
        sommet_ok &= row.status == expected && row.cylinder_mass == qf(1, 3i64.pow(n as u32 - 1)).to_string();
    }
    Ok(Outcome::new(
        q0_ok && bar_ok && sommet_ok,
        format!(
            "Q0: alpha = {} (stated {}), beta = {} exact, {}; Q0bar: A = {} (stated {}), B = {}, {}; sommet mass 3^(1-n) for n = 1..6: {sommet_ok}",
            r.alpha,
            r.stated_alpha,
            r.beta,
            r.status(),
            bar.a,
            bar.stated_a,
            bar.b,
            bar.status()
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("char poly of Gamma_n equals the closed form, n = 0..4", criterion_1),
        ("decimation, fixture and line-graph identities", criterion_2),
        ("eigenspace dimensions for 0, -2, 3, -3 on Gamma_1..4", criterion_3),
        ("lifting law R_x", criterion_4),
        ("transfer identities", criterion_5),
        ("moments of phi0", criterion_6),
        ("moments of E1 vectors and tau-model identities", criterion_7),
        ("moments of theta0", criterion_8),
        ("compactification exact values", criterion_9),
        ("plane model", criterion_10),
        ("erratum-candidate protocol", criterion_11),
    ];
    let total = Instant::now();
    let mut failed = 0;
    let mut unexplained = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {title}: {} [{secs:.1} s]", i + 1, outcome.detail);
        if !outcome.passed {
            failed += 1;
            match &outcome.analysis {
                Some(a) => println!("             analysis: {a}"),
                None => unexplained += 1,
            }
        }
    }
    println!(
        "acceptance: {} of {} passed, {failed} failed ({unexplained} without analysis) in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        total.elapsed().as_secs_f64()
    );
    if unexplained > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
