//! Essentially regular exhaustions: detection of `q`, the domain `Ω`, the
//! completions `Λ`, `ξ`, `Ξ` with their functional equations under
//! `u -> 1/(qu)`, and the transition-operator form of `log Z`.

use crate::error::{Error, Result};
use crate::fractal_builders::Exhaustion;
use crate::scalar::rational_to_f64;
use crate::spectral_counts::{ambient_walk_traces, default_through, limit_bound, path_count_table};
use crate::zeta_engine::analytic_det_spectrum;
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Width of the exclusion band around the boundary of `Ω`.
pub const OMEGA_BAND: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    /// Degree of all but the exceptional vertices, minus one.
    pub q: Option<usize>,
    /// Vertices of `K_n` whose degree in the union differs from `q + 1`, per level.
    pub exceptional: Vec<usize>,
    pub essentially_regular: bool,
}

/// Picks `q + 1` as the most frequent degree on the deepest level and calls
/// the exhaustion essentially regular when the exceptional count is the same
/// on the last three levels.
pub fn detect_regularity(x: &Exhaustion) -> Result<RegularityReport> {
    let levels = x.max_level();
    if levels < 3 {
        return Err(Error::Guard(format!("regularity needs at least 3 levels, got {levels}")));
    }
    let top = x.ambient_degrees(levels)?;
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in &top {
        *freq.entry(d).or_default() += 1;
    }
    // ties go to the larger degree
    let (&mode, _) = freq.iter().max_by_key(|(d, c)| (**c, **d)).unwrap();
    let exceptional: Vec<usize> = (1..=levels)
        .map(|n| Ok(x.ambient_degrees(n)?.iter().filter(|&&d| d != mode).count()))
        .collect::<Result<_>>()?;
    let tail = &exceptional[levels - 3..];
    let regular = mode >= 2 && tail.iter().all(|&c| c == tail[0]);
    Ok(RegularityReport { q: regular.then_some(mode - 1), exceptional, essentially_regular: regular })
}

/// `u ∈ Ω`: off the circle `|u|^2 = 1/q` and the real segments
/// `1/q <= |x| <= 1`, each widened by [`OMEGA_BAND`].
pub fn omega_membership(u: Complex64, q: usize) -> bool {
    if q < 2 {
        return false;
    }
    let qf = q as f64;
    if (u.norm() - 1.0 / qf.sqrt()).abs() <= OMEGA_BAND {
        return false;
    }
    let x = u.re.abs();
    !(u.im.abs() <= OMEGA_BAND && x >= 1.0 / qf - OMEGA_BAND && x <= 1.0 + OMEGA_BAND)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Completions {
    #[serde(serialize_with = "ser_complex")]
    pub lambda: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub xi: Complex64,
    #[serde(rename = "Xi", serialize_with = "ser_complex")]
    pub xi_upper: Complex64,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// Principal power `z^a = exp(a Log z)`.
fn ppow(z: Complex64, a: f64) -> Complex64 {
    if z.is_zero() {
        return Complex64::zero();
    }
    (z.ln() * a).exp()
}

/// `Λ = (1-u^2)^{q/2} (1-q^2u^2)^{1/2} Z`, `ξ = (1+u)^{(q-1)/2} (1-u)^{(q+1)/2} (1-qu) Z`,
/// `Ξ = (1-u^2)^{(q-1)/2} (1+qu^2) Z`, every power principal. The product of
/// the two principal square roots in `Λ` is analytic off the real segments,
/// so it is the continuation from `u = 0`.
pub fn completions(u: Complex64, q: usize, z: Complex64) -> Result<Completions> {
    if !omega_membership(u, q) {
        return Err(Error::Guard(format!("u = {u} is not in the domain for q = {q}")));
    }
    let qf = q as f64;
    let one = Complex64::one();
    let u2 = u * u;
    let lambda = ppow(one - u2, qf / 2.0) * ppow(one - u2 * (qf * qf), 0.5) * z;
    let xi = ppow(one + u, (qf - 1.0) / 2.0) * ppow(one - u, (qf + 1.0) / 2.0) * (one - u * qf) * z;
    let xi_upper = ppow(one - u2, (qf - 1.0) / 2.0) * (one + u2 * qf) * z;
    Ok(Completions { lambda, xi, xi_upper })
}

/// Finite-level continuation of `Z` for an essentially `(q+1)`-regular
/// exhaustion: `Z_n(u) = (1-u^2)^{(1-q)/2} / det_τ((1+qu^2) I - u A_n)`,
/// with the spectrum of `A_n` computed once.
#[derive(Clone, Debug)]
pub struct RegularLevel {
    pub q: usize,
    pub level: usize,
    pub eigenvalues: Vec<f64>,
}

impl RegularLevel {
    pub fn new(x: &Exhaustion, level: usize, q: usize) -> Result<Self> {
        let g = x.level(level)?;
        let n = g.num_vertices();
        if n > crate::zeta_engine::EIGEN_LIMIT {
            return Err(Error::Guard(format!("level {level} has {n} vertices, above the eigenvalue limit")));
        }
        let a = DMatrix::<f64>::from_fn(n, n, |r, c| if g.has_edge(r, c) { 1.0 } else { 0.0 });
        let mut eigenvalues: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(RegularLevel { q, level, eigenvalues })
    }

    /// `det_τ((1+qu^2) I - u A_n)`.
    pub fn determinant(&self, u: Complex64) -> Result<Complex64> {
        let c = Complex64::one() + u * u * self.q as f64;
        let spec: Vec<Complex64> = self.eigenvalues.iter().map(|&l| c - u * l).collect();
        Ok(analytic_det_spectrum(&spec)?.0)
    }

    pub fn zeta(&self, u: Complex64) -> Result<Complex64> {
        if !u.is_zero() && !omega_membership(u, self.q) {
            return Err(Error::Guard(format!("u = {u} is not in the domain for q = {}", self.q)));
        }
        let pre = ppow(Complex64::one() - u * u, (1.0 - self.q as f64) / 2.0);
        Ok(pre / self.determinant(u)?)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualRow {
    pub u_re: f64,
    pub u_im: f64,
    pub lambda_residual: f64,
    pub xi_residual: f64,
    #[serde(rename = "Xi_residual")]
    pub xi_upper_residual: f64,
    pub tolerance: f64,
}

impl ResidualRow {
    pub fn passes(&self) -> bool {
        self.lambda_residual < self.tolerance && self.xi_residual < self.tolerance && self.xi_upper_residual < self.tolerance
    }
}

/// Eight points with `u` and `1/(qu)` both in `Ω`, inside and outside the circle.
pub fn default_grid(q: usize) -> Vec<Complex64> {
    let r = 1.0 / (q as f64).sqrt();
    [(0.2, 0.3), (0.35, 1.1), (0.5, 2.0), (0.6, -0.7), (0.75, 3.0), (0.3, -2.5), (0.45, 1.6), (0.55, -1.9)]
        .iter()
        .map(|&(s, t)| Complex64::from_polar(s * r, t))
        .collect()
}

/// `|Λ(u) + Λ(1/(qu))|`, `|ξ(u) - ξ(1/(qu))|`, `|Ξ(u) - Ξ(1/(qu))|` at each
/// grid point, both sides through the finite-level continuation.
pub fn funceq_residuals(level: &RegularLevel, grid: &[Complex64], tolerance: f64) -> Result<Vec<ResidualRow>> {
    let q = level.q;
    grid.par_iter()
        .map(|&u| {
            if u.is_zero() {
                return Err(Error::Guard("u = 0 has no partner 1/(qu)".into()));
            }
            let w = Complex64::one() / (u * q as f64);
            let a = completions(u, q, level.zeta(u)?)?;
            let b = completions(w, q, level.zeta(w)?)?;
            Ok(ResidualRow {
                u_re: u.re,
                u_im: u.im,
                lambda_residual: (a.lambda + b.lambda).norm(),
                xi_residual: (a.xi - b.xi).norm(),
                xi_upper_residual: (a.xi_upper - b.xi_upper).norm(),
                tolerance,
            })
        })
        .collect()
}

pub fn residuals_csv(rows: &[ResidualRow]) -> String {
    let mut out = String::from("u_re,u_im,lambda_residual,xi_residual,Xi_residual,tolerance\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:e},{:e},{:e},{:e}\n",
            r.u_re, r.u_im, r.lambda_residual, r.xi_residual, r.xi_upper_residual, r.tolerance
        ));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitionRow {
    pub m: usize,
    /// `N_m / m` from the reduced counts.
    pub counts_route: f64,
    /// Coefficient of `u^m` from the transition-operator series.
    pub transition_route: f64,
    pub difference: f64,
    /// Sum of the rigorous distances of both routes to the common limit.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitionReport {
    pub q: usize,
    pub level: usize,
    /// `φ_n(P^k)` with `P = A/(q+1)`, as `p/q` strings.
    pub tr_p: Vec<String>,
    pub rows: Vec<TransitionRow>,
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// Rebuilds `log Z` from `(1-q)/2 log(1-u^2)` and
/// `Σ_n (1/n) Σ_k C(n,k) (q+1)^k (-q)^{n-k} u^{2n-k} Tr(P^k)` and compares it with
/// `Σ N_m u^m / m` at the deepest usable level. `A/(q+1)` stands in for `P`;
/// the two differ only at exceptional vertices, a set of density zero.
pub fn transition_series_check(x: &Exhaustion, q: usize, max_order: usize) -> Result<TransitionReport> {
    let report = detect_regularity(x)?;
    if report.q != Some(q) {
        return Err(Error::Guard(format!("exhaustion is not essentially {}-regular", q + 1)));
    }
    let level = default_through(x);
    let table = path_count_table(x, Some(level), max_order)?;
    let walks = ambient_walk_traces(x, level, max_order)?;
    let walk = &walks[level - 1];
    let d = x.max_degree();
    let eps = rational_to_f64(table.epsilon(level));
    let q1 = BigInt::from(q + 1);
    let tr_p: Vec<BigRational> = walk
        .iter()
        .enumerate()
        .map(|(k, t)| t / BigRational::from_integer(q1.pow(k as u32)))
        .collect();
    let i = table.deepest_index();
    let mut rows = Vec::new();
    for m in 1..=max_order {
        let counts_route = &table.rows[m].n_m[i] / BigRational::from_integer(BigInt::from(m));
        let mut coeff = BigRational::zero();
        if m % 2 == 0 {
            // (1-q)/2 * (-1/(m/2))
            coeff += BigRational::new(BigInt::from(q as i64 - 1), BigInt::from(m as i64));
        }
        let mut bound = table.rows[m].err_m[i] / m as f64;
        for n in m.div_ceil(2)..=m {
            let k = 2 * n - m;
            let weight = BigRational::new(
                binomial(n, k) * q1.pow(k as u32) * BigInt::from(-(q as i64)).pow((n - k) as u32),
                BigInt::from(n),
            );
            coeff += &weight * &tr_p[k];
            // ‖P^k‖ <= (d/(q+1))^k through ‖A‖ <= d
            let norm = (d as f64 / (q + 1) as f64).powi(k as i32);
            bound += rational_to_f64(&weight).abs() * limit_bound(norm, eps, d, k);
        }
        let difference = rational_to_f64(&(&counts_route - &coeff));
        rows.push(TransitionRow {
            m,
            counts_route: rational_to_f64(&counts_route),
            transition_route: rational_to_f64(&coeff),
            difference: difference.abs(),
            bound,
        });
    }
    Ok(TransitionReport { q, level, tr_p: tr_p.iter().map(crate::scalar::rational_string).collect(), rows })
}

/// `(χ_n/|K_n|` at the deepest level, `(1-q)/2)`.
pub fn euler_characteristic_check(x: &Exhaustion, q: usize) -> (f64, f64) {
    let chi = x.euler_characteristic_average();
    (rational_to_f64(chi.last().unwrap()), (1.0 - q as f64) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal_builders::Family;
    use crate::graph_core::test_graphs::complete;
    use proptest::prelude::*;

    #[test]
    fn gasket_is_essentially_four_regular() {
        let x = Exhaustion::build(Family::Gasket, 5).unwrap();
        let r = detect_regularity(&x).unwrap();
        assert_eq!(r.q, Some(3));
        assert!(r.exceptional.iter().all(|&c| c == 1), "{:?}", r.exceptional);
        let (chi, target) = euler_characteristic_check(&x, 3);
        assert_eq!(target, -1.0);
        assert!((chi - target).abs() < 0.05);
    }

    #[test]
    fn other_families_are_not_regular() {
        for (f, n) in [(Family::Vicsek, 4), (Family::Lindstrom, 3), (Family::Carpet, 3)] {
            let r = detect_regularity(&Exhaustion::build(f, n).unwrap()).unwrap();
            assert!(!r.essentially_regular, "{f}: {:?}", r.exceptional);
        }
    }

    #[test]
    fn degenerate_triangle_is_two_regular() {
        let x = Exhaustion::from_single_graph(complete(3), 3).unwrap();
        let r = detect_regularity(&x).unwrap();
        assert_eq!(r.q, Some(1));
        assert_eq!(r.exceptional, vec![0, 0, 0]);
        assert!(detect_regularity(&Exhaustion::from_single_graph(complete(3), 2).unwrap()).is_err());
    }

    #[test]
    fn omega_examples() {
        assert!(omega_membership(Complex64::zero(), 3));
        assert!(!omega_membership(Complex64::new(1.0 / 3f64.sqrt(), 0.0), 3));
        assert!(!omega_membership(Complex64::new(0.5, 0.0), 3));
        assert!(!omega_membership(Complex64::new(-0.9, 0.0), 3));
        assert!(omega_membership(Complex64::new(0.5, 0.1), 3));
        assert!(omega_membership(Complex64::new(2.0, 0.0), 3));
        assert!(!omega_membership(Complex64::new(0.1, 0.0), 1));
    }

    #[test]
    fn completions_at_zero_and_outside() {
        let c = completions(Complex64::zero(), 3, Complex64::one()).unwrap();
        for v in [c.lambda, c.xi, c.xi_upper] {
            assert!((v - 1.0).norm() < 1e-15);
        }
        assert!(completions(Complex64::new(0.5, 0.0), 3, Complex64::one()).is_err());
    }

    #[test]
    fn default_grid_pairs_stay_in_omega() {
        for u in default_grid(3) {
            assert!(omega_membership(u, 3));
            assert!(omega_membership(Complex64::one() / (u * 3.0), 3));
        }
    }

    #[test]
    fn functional_equations_hold_on_gasket() {
        let x = Exhaustion::build(Family::Gasket, 5).unwrap();
        let level = RegularLevel::new(&x, 5, 3).unwrap();
        assert!((level.zeta(Complex64::zero()).unwrap() - 1.0).norm() < 1e-15);
        let rows = funceq_residuals(&level, &default_grid(3), 1e-8).unwrap();
        assert!(rows.iter().all(|r| r.passes()), "{rows:?}");
        let single = funceq_residuals(&level, &[Complex64::new(0.1, 0.0)], 1e-8).unwrap();
        assert!(single[0].passes());
    }

    #[test]
    fn transition_route_matches_counts_on_gasket() {
        let x = Exhaustion::build(Family::Gasket, 6).unwrap();
        let report = transition_series_check(&x, 3, 8).unwrap();
        assert_eq!(report.tr_p[0], "1");
        assert_eq!(report.tr_p[1], "0");
        for row in &report.rows {
            assert!(row.difference <= row.bound, "{row:?}");
        }
        assert!(report.rows[1].difference < 0.05, "{:?}", report.rows[1]);
        assert!(transition_series_check(&Exhaustion::build(Family::Vicsek, 4).unwrap(), 3, 4).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn prefactors_relate_the_completions(re in -0.3f64..0.3, im in -0.3f64..0.3) {
            let u = Complex64::new(re, im);
            prop_assume!(omega_membership(u, 3));
            let c = completions(u, 3, Complex64::one()).unwrap();
            let one = Complex64::one();
            // for q = 3: Ξ / ξ = (1 + 3u^2) / ((1 - u)^2 (1 + u) (1 - 3u)) * (1 - u^2)
            let ratio = c.xi_upper / c.xi;
            let expected = (one + u * u * 3.0) * (one - u * u) / ((one - u) * (one - u) * (one + u) * (one - u * 3.0));
            prop_assert!((ratio - expected).norm() < 1e-12 * expected.norm().max(1.0));
        }
    }
}
