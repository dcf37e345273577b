//! Ruelle transfer operators L_κφ(x) = Σ_{f(y)=x} κ(y)φ(y) for f(x) = x² − x − 3,
//! evaluated as exact sums over the 2^depth inverse branches, and the
//! equilibrium integrals ∫ g dν_κ = lim L_κⁿ g(x₀) for normalized κ.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::julia::{f_preimages, lambda_samples};

pub const POLE_GUARD: f64 = 1e-9;
pub const MAX_DEPTH: usize = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightFn {
    Rho,
    Theta,
    Sigma,
    TauW,
    Zeta,
    J,
    Xi,
    TauBar,
    MW,
    GammaW,
    CW,
    H,
    K,
    L,
    T,
    One,
}

impl WeightFn {
    pub const ALL: [WeightFn; 16] = [
        WeightFn::Rho,
        WeightFn::Theta,
        WeightFn::Sigma,
        WeightFn::TauW,
        WeightFn::Zeta,
        WeightFn::J,
        WeightFn::Xi,
        WeightFn::TauBar,
        WeightFn::MW,
        WeightFn::GammaW,
        WeightFn::CW,
        WeightFn::H,
        WeightFn::K,
        WeightFn::L,
        WeightFn::T,
        WeightFn::One,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WeightFn::Rho => "rho",
            WeightFn::Theta => "theta",
            WeightFn::Sigma => "sigma",
            WeightFn::TauW => "tau_w",
            WeightFn::Zeta => "zeta",
            WeightFn::J => "j",
            WeightFn::Xi => "xi",
            WeightFn::TauBar => "tau_bar",
            WeightFn::MW => "m_w",
            WeightFn::GammaW => "gamma_w",
            WeightFn::CW => "c_w",
            WeightFn::H => "h",
            WeightFn::K => "k",
            WeightFn::L => "l",
            WeightFn::T => "t",
            WeightFn::One => "one",
        }
    }

    pub fn parse(s: &str) -> Result<WeightFn> {
        WeightFn::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown weight {s:?}")))
    }

    pub fn poles(self) -> &'static [f64] {
        match self {
            WeightFn::Rho | WeightFn::Theta | WeightFn::Zeta | WeightFn::Xi | WeightFn::TauBar => &[0.5],
            WeightFn::Sigma | WeightFn::TauW => &[0.0, 0.5],
            WeightFn::J => &[-3.0],
            WeightFn::MW => &[1.0],
            WeightFn::GammaW => &[1.5],
            _ => &[],
        }
    }

    /// Closed form; NaN within `POLE_GUARD` of a pole.
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        if self.poles().iter().any(|p| (x - p).abs() < POLE_GUARD) {
            return f64::NAN;
        }
        match self {
            WeightFn::Rho => x / (2.0 * x - 1.0),
            WeightFn::Theta => x * (x + 2.0) / (2.0 * x - 1.0),
            WeightFn::Sigma => 1.0 / (x * (2.0 * x - 1.0)),
            WeightFn::TauW => (x + 2.0) / (x * (2.0 * x - 1.0)),
            WeightFn::Zeta => (x + 3.0) * (x - 1.0) / (3.0 * (2.0 * x - 1.0)),
            WeightFn::J => (3.0 - x) / (3.0 * (x + 3.0)),
            WeightFn::Xi => x * (x - 1.0) / (3.0 * (2.0 * x - 1.0)),
            WeightFn::TauBar => x * (x + 2.0) / (3.0 * (2.0 * x - 1.0)),
            WeightFn::MW => (x + 2.0) / (x - 1.0),
            WeightFn::GammaW => (x - 1.0) / (2.0 * x - 3.0),
            WeightFn::CW => (x + 2.0) * (4.0 - x),
            WeightFn::H => 3.0 - x,
            WeightFn::K => x + 2.0,
            WeightFn::L => x,
            WeightFn::T => x + 1.0,
            WeightFn::One => 1.0,
        }
    }

    pub fn checked(self, x: f64) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            let p = self.poles().iter().copied().find(|p| (x - p).abs() < POLE_GUARD).unwrap_or(f64::NAN);
            Err(Error::Pole(x, p))
        }
    }
}

/// Below this many remaining levels the leaves are summed sequentially.
const LEAF_BLOCK: usize = 6;
/// Above this many remaining levels the two subtrees run in parallel.
const PAR_LEVELS: usize = 14;

fn accumulate_block<G>(w: WeightFn, g: &G, y: f64, weight: f64, depth: usize, acc: &mut [f64], tmp: &mut [f64])
where
    G: Fn(f64, &mut [f64]) + Sync,
{
    if depth == 0 {
        g(y, tmp);
        for (a, t) in acc.iter_mut().zip(tmp.iter()) {
            *a += weight * t;
        }
        return;
    }
    let (a, b) = match f_preimages(y) {
        Ok(p) => p,
        Err(_) => {
            acc.iter_mut().for_each(|v| *v = f64::NAN);
            return;
        }
    };
    accumulate_block(w, g, a, weight * w.eval(a), depth - 1, acc, tmp);
    accumulate_block(w, g, b, weight * w.eval(b), depth - 1, acc, tmp);
}

fn tree_sum<G>(w: WeightFn, g: &G, k: usize, y: f64, weight: f64, depth: usize) -> Vec<f64>
where
    G: Fn(f64, &mut [f64]) + Sync,
{
    if depth <= LEAF_BLOCK {
        let mut acc = vec![0.0; k];
        let mut tmp = vec![0.0; k];
        accumulate_block(w, g, y, weight, depth, &mut acc, &mut tmp);
        return acc;
    }
    let (a, b) = match f_preimages(y) {
        Ok(p) => p,
        Err(_) => return vec![f64::NAN; k],
    };
    let (wa, wb) = (weight * w.eval(a), weight * w.eval(b));
    let (left, right) = if depth > PAR_LEVELS {
        rayon::join(|| tree_sum(w, g, k, a, wa, depth - 1), || tree_sum(w, g, k, b, wb, depth - 1))
    } else {
        (tree_sum(w, g, k, a, wa, depth - 1), tree_sum(w, g, k, b, wb, depth - 1))
    };
    left.into_iter().zip(right).map(|(l, r)| l + r).collect()
}

/// (L_w^depth g_i)(x) for the k functions written by `g` into its output slice.
pub fn transfer_apply_many<G>(w: WeightFn, g: &G, k: usize, x: f64, depth: usize) -> Result<Vec<f64>>
where
    G: Fn(f64, &mut [f64]) + Sync,
{
    if depth > MAX_DEPTH {
        return Err(Error::InvalidArgument(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    let out = tree_sum(w, g, k, x, 1.0, depth);
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::Pole(x, f64::NAN))
    }
}

pub fn transfer_apply<G>(w: WeightFn, g: G, x: f64, depth: usize) -> Result<f64>
where
    G: Fn(f64) -> f64 + Sync,
{
    let many = move |y: f64, out: &mut [f64]| out[0] = g(y);
    Ok(transfer_apply_many(w, &many, 1, x, depth)?[0])
}

/// Weights with L_w(1) = 1, for which λ_w = 1.
pub fn is_normalized(w: WeightFn) -> bool {
    matches!(w, WeightFn::Rho | WeightFn::Zeta)
}

#[derive(Clone, Debug, Serialize)]
pub struct Integral {
    pub values: Vec<f64>,
    pub depth: usize,
    pub last_delta: f64,
    pub deltas: Vec<f64>,
}

/// Iterates L_wⁿ g(x₀) with increasing depth until two successive depths
/// differ by less than tol·max(1, |value|) in every component.
pub fn equilibrium_integrals_at<G>(w: WeightFn, g: &G, k: usize, tol: f64, x0: f64) -> Result<Integral>
where
    G: Fn(f64, &mut [f64]) + Sync,
{
    if !is_normalized(w) {
        return Err(Error::InvalidArgument(format!("{} is not normalized", w.name())));
    }
    let mut prev = transfer_apply_many(w, g, k, x0, 1)?;
    let mut before = prev[0];
    let mut deltas = Vec::new();
    for depth in 2..=MAX_DEPTH {
        let cur = transfer_apply_many(w, g, k, x0, depth)?;
        let delta = cur
            .iter()
            .zip(&prev)
            .map(|(c, p)| (c - p).abs() / c.abs().max(1.0))
            .fold(0.0, f64::max);
        deltas.push(delta);
        if delta < tol {
            return Ok(Integral { values: cur, depth, last_delta: delta, deltas });
        }
        before = prev[0];
        prev = cur;
    }
    Err(Error::Budget { depth: MAX_DEPTH as u32, prev: before, last: prev[0] })
}

pub fn equilibrium_integrals<G>(w: WeightFn, g: &G, k: usize, tol: f64) -> Result<Integral>
where
    G: Fn(f64, &mut [f64]) + Sync,
{
    equilibrium_integrals_at(w, g, k, tol, 3.0)
}

pub fn equilibrium_integral<G>(w: WeightFn, g: G, tol: f64) -> Result<(f64, usize)>
where
    G: Fn(f64) -> f64 + Sync,
{
    let many = move |y: f64, out: &mut [f64]| out[0] = g(y);
    let r = equilibrium_integrals(w, &many, 1, tol)?;
    Ok((r.values[0], r.depth))
}

/// ∫ (x + shift)ⁿ d(x) dν_w for n < count.
pub fn equilibrium_moments(w: WeightFn, density: WeightFn, shift: f64, count: usize, tol: f64) -> Result<Integral> {
    let g = move |y: f64, out: &mut [f64]| {
        let mut p = density.eval(y);
        let s = y + shift;
        for o in out.iter_mut() {
            *o = p;
            p *= s;
        }
    };
    equilibrium_integrals(w, &g, count, tol)
}

/// ∫ xⁿ h dν_ρ, n < count: the moments of the spectral measure of φ₀.
pub fn phi0_moments_transfer(count: usize, tol: f64) -> Result<Integral> {
    equilibrium_moments(WeightFn::Rho, WeightFn::H, 0.0, count, tol)
}

pub fn phi0_moment_transfer(n: usize) -> Result<f64> {
    Ok(phi0_moments_transfer(n + 1, 1e-10)?.values[n])
}

/// Density of the E₁ spectral measures against ν_ζ: (3 − x)/(x + 3) = 3j.
///
/// Σ_{f(x)=y} ζ(x)j(x) = 1/3 for every y, so j itself has ∫ j dν_ζ = 1/3.
pub fn e1_density(x: f64) -> f64 {
    3.0 * WeightFn::J.eval(x)
}

/// ∫ xⁿ 3j dν_ζ, n < count. N = 0 gives 1.
pub fn e1_moments_transfer(count: usize, tol: f64) -> Result<Integral> {
    let g = move |y: f64, out: &mut [f64]| {
        let mut p = e1_density(y);
        for o in out.iter_mut() {
            *o = p;
            p *= y;
        }
    };
    equilibrium_integrals(WeightFn::Zeta, &g, count, tol)
}

pub fn e1_moment_transfer(n: usize) -> Result<f64> {
    Ok(e1_moments_transfer(n + 1, 1e-10)?.values[n])
}

/// ∫ (x + 1)ⁿ (x + 3) h dν_ρ, n < count.
pub fn theta0_moments_transfer(count: usize, tol: f64) -> Result<Integral> {
    let g = move |y: f64, out: &mut [f64]| {
        let mut p = (y + 3.0) * (3.0 - y);
        for o in out.iter_mut() {
            *o = p;
            p *= y + 1.0;
        }
    };
    equilibrium_integrals(WeightFn::Rho, &g, count, tol)
}

/// ∫ L_θ(lⁿ)·h dν_ρ for n < count: the pushed-forward side of the moments of
/// Π*φ₀.
pub fn pushforward_moments_transfer(count: usize, tol: f64) -> Result<Integral> {
    let g = move |y: f64, out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        let (a, b) = f_preimages(y).unwrap_or((f64::NAN, f64::NAN));
        let h = 3.0 - y;
        for x in [a, b] {
            let mut p = WeightFn::Theta.eval(x) * h;
            for o in out.iter_mut() {
                *o += p;
                p *= x;
            }
        }
    };
    equilibrium_integrals(WeightFn::Rho, &g, count, tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityRow {
    pub name: String,
    pub max_abs_error: f64,
    pub points: usize,
    pub passed: bool,
    /// Set when the stated identity fails identically and a corrected form holds.
    pub erratum: Option<String>,
}

pub(crate) fn identity_row(name: &str, points: &[f64], tol: f64, lhs: impl Fn(f64) -> Result<f64>, rhs: impl Fn(f64) -> f64) -> Result<IdentityRow> {
    let mut err: f64 = 0.0;
    for &x in points {
        err = err.max((lhs(x)? - rhs(x)).abs());
    }
    Ok(IdentityRow { name: name.into(), max_abs_error: err, points: points.len(), passed: err < tol, erratum: None })
}

/// The 64 sample points of Λ coded by the words of length 6.
pub fn sample_points() -> Vec<f64> {
    lambda_samples(6)
}

/// Pointwise transfer identities at the sample points.
pub fn weight_identity_suite(tol: f64) -> Result<Vec<IdentityRow>> {
    let pts = sample_points();
    let l1 = |w: WeightFn, g: WeightFn| move |x: f64| transfer_apply(w, move |y| g.eval(y), x, 1);
    Ok(vec![
        identity_row("L_rho(1) = 1", &pts, tol, l1(WeightFn::Rho, WeightFn::One), |_| 1.0)?,
        identity_row("L_rho(h) = 2", &pts, tol, l1(WeightFn::Rho, WeightFn::H), |_| 2.0)?,
        identity_row("L_rho(l) = 1", &pts, tol, l1(WeightFn::Rho, WeightFn::L), |_| 1.0)?,
        identity_row("L_rho(k) = 3", &pts, tol, l1(WeightFn::Rho, WeightFn::K), |_| 3.0)?,
        identity_row("L_sigma(1) = 1/(x+3)", &pts, tol, l1(WeightFn::Sigma, WeightFn::One), |x| 1.0 / (x + 3.0))?,
        identity_row("L_zeta(1) = 1", &pts, tol, l1(WeightFn::Zeta, WeightFn::One), |_| 1.0)?,
        zeta_j_row(&pts, tol)?,
        identity_row("L_xi(1) = 0", &pts, tol, l1(WeightFn::Xi, WeightFn::One), |_| 0.0)?,
        identity_row("L_xi(l) = 1 + l/3", &pts, tol, l1(WeightFn::Xi, WeightFn::L), |x| 1.0 + x / 3.0)?,
        identity_row("L_theta(1) = 3", &pts, tol, l1(WeightFn::Theta, WeightFn::One), |_| 3.0)?,
    ])
}

/// L_ζ(j) = 1 as stated. When it fails, the row records whether L_ζ(j) ≡ 1/3,
/// i.e. whether 3j satisfies the identity instead.
fn zeta_j_row(pts: &[f64], tol: f64) -> Result<IdentityRow> {
    let lzj = |x: f64| transfer_apply(WeightFn::Zeta, |y| WeightFn::J.eval(y), x, 1);
    let mut row = identity_row("L_zeta(j) = 1", pts, tol, lzj, |_| 1.0)?;
    if !row.passed {
        let third = identity_row("L_zeta(j) = 1/3", pts, tol, lzj, |_| 1.0 / 3.0)?;
        if third.passed {
            row.erratum = Some(format!(
                "L_zeta(j) = 1/3 at every sample point (max error {:.1e}); 3j satisfies L_zeta(3j) = 1",
                third.max_abs_error
            ));
        }
    }
    Ok(row)
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub max_by_depth: Vec<f64>,
    pub strictly_decreasing: bool,
    pub below_half_by_8: bool,
}

/// max over the sample points of L_σ^d(1), d = 1..=depth_max.
pub fn sigma_decay_check(depth_max: usize) -> Result<DecayReport> {
    let pts = sample_points();
    let mut max_by_depth = Vec::with_capacity(depth_max);
    for d in 1..=depth_max {
        let mut m: f64 = 0.0;
        for &x in &pts {
            m = m.max(transfer_apply(WeightFn::Sigma, |_| 1.0, x, d)?);
        }
        max_by_depth.push(m);
    }
    let strictly_decreasing = max_by_depth.windows(2).all(|w| w[1] < w[0]);
    let below_half_by_8 = max_by_depth.get(7).is_none_or(|&v| v < 0.5);
    Ok(DecayReport { max_by_depth, strictly_decreasing, below_half_by_8 })
}
