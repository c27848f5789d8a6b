//! Zeta functions as power series and point evaluations: the exponential of
//! `Σ N_m u^m / m`, the Euler product over prime classes, the determinant
//! formula at finite levels, the finite-graph zeta and its normalised root.

use crate::cycle_oracle::CycleRecord;
use crate::error::{Error, Result};
use crate::fractal_builders::Exhaustion;
use crate::graph_core::Graph;
use crate::scalar::{rational_to_f64, Field};
use crate::spectral_counts::{alpha, proper_path_bound, PathCountTable};
use nalgebra::{DMatrix, Schur};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Truncated power series `c_0 + c_1 u + ... + c_M u^M`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Field> PowerSeries<T> {
    /// Pads with zeros or truncates to order `order`.
    pub fn new(mut coeffs: Vec<T>, order: usize) -> Self {
        coeffs.resize(order + 1, T::zero());
        PowerSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(Vec::new(), order)
    }

    pub fn one(order: usize) -> Self {
        Self::new(vec![T::one()], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::new(self.coeffs[..=order.min(self.order())].to_vec(), order)
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        Self::new((0..=order).map(|k| self.coeffs[k].clone() + other.coeffs[k].clone()).collect(), order)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        Self::new((0..=order).map(|k| self.coeffs[k].clone() - other.coeffs[k].clone()).collect(), order)
    }

    pub fn scale(&self, c: &T) -> Self {
        PowerSeries { coeffs: self.coeffs.iter().map(|x| x.clone() * c.clone()).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut out = vec![T::zero(); order + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        PowerSeries { coeffs: out }
    }

    /// `f'`, of order `M - 1`.
    pub fn derivative(&self) -> Self {
        let order = self.order().saturating_sub(1);
        Self::new(
            (1..=self.order()).map(|k| self.coeffs[k].clone() * T::from_i64(k as i64)).collect(),
            order,
        )
    }

    /// `u f'`, of order `M`.
    pub fn euler_derivative(&self) -> Self {
        PowerSeries {
            coeffs: self.coeffs.iter().enumerate().map(|(k, c)| c.clone() * T::from_i64(k as i64)).collect(),
        }
    }

    pub fn reciprocal(&self) -> Result<Self> {
        if self.coeffs[0].is_zero() {
            return Err(Error::Inconsistent("series with zero constant term has no reciprocal".into()));
        }
        let r0 = T::one() / self.coeffs[0].clone();
        let mut r = vec![r0.clone()];
        for n in 1..=self.order() {
            let mut s = T::zero();
            for k in 1..=n {
                s = s + self.coeffs[k].clone() * r[n - k].clone();
            }
            r.push(-(r0.clone() * s));
        }
        Ok(PowerSeries { coeffs: r })
    }

    /// `exp(f)` for `f(0) = 0`.
    pub fn exp(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::Inconsistent("exp needs a series without constant term".into()));
        }
        let mut b = vec![T::one()];
        for n in 1..=self.order() {
            let mut s = T::zero();
            for k in 1..=n {
                s = s + T::from_i64(k as i64) * self.coeffs[k].clone() * b[n - k].clone();
            }
            b.push(s / T::from_i64(n as i64));
        }
        Ok(PowerSeries { coeffs: b })
    }

    /// `log(f)` for `f(0) = 1`.
    pub fn log(&self) -> Result<Self> {
        if !(self.coeffs[0].clone() - T::one()).is_zero() {
            return Err(Error::Inconsistent("log needs a series with constant term 1".into()));
        }
        let mut l = vec![T::zero()];
        for n in 1..=self.order() {
            let mut s = T::zero();
            for k in 1..n {
                s = s + T::from_i64(k as i64) * l[k].clone() * self.coeffs[n - k].clone();
            }
            l.push(self.coeffs[n].clone() - s / T::from_i64(n as i64));
        }
        Ok(PowerSeries { coeffs: l })
    }

    /// `(1 - u^k)^{-μ} = Σ_j binom(μ + j - 1, j) u^{kj}`.
    pub fn binomial_power(k: usize, mu: &T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = T::one();
        if k == 0 {
            return PowerSeries { coeffs };
        }
        let mut c = T::one();
        let mut j = 1;
        while k * j <= order {
            c = c * (mu.clone() + T::from_i64(j as i64 - 1)) / T::from_i64(j as i64);
            coeffs[k * j] = c.clone();
            j += 1;
        }
        PowerSeries { coeffs }
    }

    /// Horner evaluation at a complex point.
    pub fn evaluate(&self, u: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::zero(), |acc, c| acc * u + c.to_complex())
    }
}

impl PowerSeries<BigRational> {
    pub fn from_integers(coeffs: &[BigInt], order: usize) -> Self {
        Self::new(coeffs.iter().map(|c| BigRational::from_integer(c.clone())).collect(), order)
    }

    /// CSV with columns `order,num,den`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,num,den\n");
        for (k, c) in self.coeffs.iter().enumerate() {
            out.push_str(&format!("{k},{},{}\n", c.numer(), c.denom()));
        }
        out
    }
}

/// `log Z` and `Z` as exact series.
#[derive(Clone, Debug)]
pub struct ZetaSeries {
    pub log_z: PowerSeries<BigRational>,
    pub z: PowerSeries<BigRational>,
}

/// `Z = exp(Σ_{m>=1} N_m u^m / m)`; `counts[m]` is `N_m`, `counts[0]` ignored.
pub fn zeta_from_reduced_counts(counts: &[BigRational], order: usize) -> Result<ZetaSeries> {
    let coeffs = (0..=order)
        .map(|m| {
            if m == 0 || m >= counts.len() {
                BigRational::zero()
            } else {
                &counts[m] / BigRational::from_integer(BigInt::from(m))
            }
        })
        .collect();
    let log_z = PowerSeries::new(coeffs, order);
    let z = log_z.exp()?;
    Ok(ZetaSeries { log_z, z })
}

/// Zeta series from the spectral counts of one level (the deepest by default).
pub fn zeta_from_counts(table: &PathCountTable, level: Option<usize>, order: usize) -> Result<ZetaSeries> {
    if order > table.max_order {
        return Err(Error::OrderTooLarge { order, cap: table.max_order });
    }
    let i = level_index(table, level)?;
    let counts: Vec<BigRational> = table.rows.iter().map(|r| r.n_m[i].clone()).collect();
    zeta_from_reduced_counts(&counts, order)
}

fn level_index(table: &PathCountTable, level: Option<usize>) -> Result<usize> {
    match level {
        None => Ok(table.deepest_index()),
        Some(l) => table
            .levels
            .iter()
            .position(|&k| k == l)
            .ok_or(Error::MissingLevel { level: l, max: *table.levels.last().unwrap() }),
    }
}

/// One `G`-class of prime cycles.
#[derive(Clone, Debug)]
pub struct PrimeClass {
    pub length: usize,
    pub multiplicity: Option<BigRational>,
}

impl From<&CycleRecord> for PrimeClass {
    fn from(r: &CycleRecord) -> Self {
        PrimeClass { length: r.length, multiplicity: Some(r.multiplicity.value.clone()) }
    }
}

/// `Π_C (1 - u^{|C|})^{-μ(C)}` to order `order`.
pub fn euler_product(classes: &[PrimeClass], order: usize) -> Result<PowerSeries<BigRational>> {
    let mut z = PowerSeries::one(order);
    for c in classes {
        let mu = c
            .multiplicity
            .as_ref()
            .ok_or_else(|| Error::Guard(format!("prime class of length {} has no multiplicity", c.length)))?;
        if c.length == 0 {
            return Err(Error::Inconsistent("prime class of length 0".into()));
        }
        if c.length <= order {
            z = z.mul(&PowerSeries::binomial_power(c.length, mu, order));
        }
    }
    Ok(z)
}

/// Separating half-plane `{Re(z e^{-iθ_0}) > 0}` containing the spectrum.
#[derive(Clone, Debug)]
pub struct DetDomainCertificate {
    pub spectrum: Vec<Complex64>,
    pub direction: f64,
    /// `min_i Re(λ_i e^{-iθ_0}) / |λ_i|`, the cosine of the largest angle to θ_0.
    pub margin: f64,
}

/// Builds the certificate: the arguments must fit in an arc shorter than `π`,
/// i.e. the largest circular gap between consecutive arguments exceeds `π`.
pub fn certify(spectrum: &[Complex64]) -> Result<DetDomainCertificate> {
    if spectrum.is_empty() {
        return Err(Error::NoCertificate("empty spectrum".into()));
    }
    let scale = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if spectrum.iter().any(|z| z.norm() <= 1e-14 * scale.max(1e-300)) {
        return Err(Error::NoCertificate("0 is an eigenvalue".into()));
    }
    let mut args: Vec<f64> = spectrum.iter().map(|z| z.arg()).collect();
    args.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // gap after args[i], circularly
    let mut best = (args[0] + 2.0 * PI - args[args.len() - 1], args.len() - 1);
    for i in 0..args.len() - 1 {
        let gap = args[i + 1] - args[i];
        if gap > best.0 {
            best = (gap, i);
        }
    }
    let (gap, i) = best;
    if gap <= PI + 1e-12 {
        return Err(Error::NoCertificate(format!("largest angular gap {gap} does not exceed π")));
    }
    // covering arc runs from args[i+1] counter-clockwise to args[i]
    let start = args[(i + 1) % args.len()];
    let width = 2.0 * PI - gap;
    let direction = wrap(start + width / 2.0);
    let margin = spectrum.iter().map(|z| (z * Complex64::from_polar(1.0, -direction)).re / z.norm()).fold(1.0, f64::min);
    Ok(DetDomainCertificate { spectrum: spectrum.to_vec(), direction, margin })
}

fn wrap(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t <= -PI {
        t + 2.0 * PI
    } else {
        t
    }
}

/// `log_θ(z) = iθ + Log(z e^{-iθ})`, the branch with cut along the ray `θ + π`.
pub fn log_with_direction(z: Complex64, theta: f64) -> Complex64 {
    Complex64::new(0.0, theta) + (z * Complex64::from_polar(1.0, -theta)).ln()
}

/// `exp(mean_i log_θ λ_i)`; `θ` must put every eigenvalue in the open
/// half-plane `Re(z e^{-iθ}) > 0`.
pub fn analytic_det_with_direction(spectrum: &[Complex64], theta: f64) -> Result<Complex64> {
    if spectrum.iter().any(|z| (z * Complex64::from_polar(1.0, -theta)).re <= 0.0) {
        return Err(Error::NoCertificate(format!("direction {theta} does not separate the spectrum from 0")));
    }
    let mean = spectrum.iter().map(|&z| log_with_direction(z, theta)).sum::<Complex64>() / spectrum.len() as f64;
    Ok(mean.exp())
}

/// `det_τ` with the normalised trace, from the spectrum.
pub fn analytic_det_spectrum(spectrum: &[Complex64]) -> Result<(Complex64, DetDomainCertificate)> {
    let cert = certify(spectrum)?;
    let det = analytic_det_with_direction(spectrum, cert.direction)?;
    Ok((det, cert))
}

/// Eigenvalues of a complex square matrix from its Schur form.
pub fn spectrum(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::Inconsistent("spectrum of a non-square matrix".into()));
    }
    let schur = Schur::try_new(m.clone(), 1e-14, 0)
        .ok_or_else(|| Error::Inconsistent("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// `det_τ(m) = exp(τ(log m))` with `τ` the normalised trace.
pub fn analytic_det(m: &DMatrix<Complex64>) -> Result<(Complex64, DetDomainCertificate)> {
    analytic_det_spectrum(&spectrum(m)?)
}

/// Radii of the series, determinant-formula and approximation domains.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DomainRadii {
    pub degree: usize,
    pub series: f64,
    pub det: f64,
    pub approx: f64,
}

/// `1/(d-1)`, `1/α` and `1/(d + sqrt(d^2 + 2(d-1)))`, asserting
/// `1/(2α) < r_approx < 1/α`.
pub fn domain_guards(d: usize) -> Result<DomainRadii> {
    if d < 2 {
        return Err(Error::Guard(format!("maximum degree {d} < 2")));
    }
    let df = d as f64;
    let a = alpha(d);
    let radii = DomainRadii {
        degree: d,
        series: 1.0 / (df - 1.0),
        det: 1.0 / a,
        approx: 1.0 / (df + (df * df + 2.0 * (df - 1.0)).sqrt()),
    };
    if !(1.0 / (2.0 * a) < radii.approx && radii.approx < radii.det) {
        return Err(Error::Inconsistent(format!("radius ordering fails for d = {d}")));
    }
    Ok(radii)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    Euler,
    DetFormula,
    FiniteApprox,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::Euler => "euler",
            Method::DetFormula => "det_formula",
            Method::FiniteApprox => "finite_approx",
        }
    }
}

/// Which `Q` restricts to `K_n` in the determinant formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetVariant {
    /// `E_n Q E_n`, degrees of the union graph.
    Ambient,
    /// `Q_n`, the level's own degrees; gives `Z_{K_n}^{1/|K_n|}` exactly.
    Own,
}

/// A value of `Z` at one point.
#[derive(Clone, Debug, Serialize)]
pub struct ZetaEvaluation {
    #[serde(serialize_with = "ser_complex")]
    pub u: Complex64,
    pub method: Method,
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    pub level: usize,
    /// Rigorous bound on the distance to the limit, when one is known.
    pub bound: Option<f64>,
    /// Domain in which the method is valid.
    pub domain: String,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

/// Bound on `Σ_{m>M} d (d-1)^{m-1} |u|^m / m` for `(d-1)|u| < 1`.
pub fn series_tail_bound(d: usize, order: usize, u: f64) -> f64 {
    let rho = (d as f64 - 1.0) * u;
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    proper_path_bound(d, order + 1) * u.powi(order as i32 + 1) / ((order + 1) as f64 * (1.0 - rho))
}

/// `exp(Σ_{m<=M} N_m u^m / m)` at one level of the count table.
///
/// `bound` combines the truncation tail with the rigorous per-order errors of
/// the counts. Rejects `|u| >= 1/(d-1)` and, when `tol` is given, truncations
/// whose tail exceeds it.
pub fn series_zeta(table: &PathCountTable, level: Option<usize>, u: Complex64, tol: Option<f64>) -> Result<ZetaEvaluation> {
    let d = table.max_degree;
    let radii = domain_guards(d)?;
    let r = u.norm();
    if r >= radii.series {
        return Err(Error::Guard(format!("|u| = {r} is outside the series disc of radius {}", radii.series)));
    }
    let i = level_index(table, level)?;
    let order = table.max_order;
    let tail = series_tail_bound(d, order, r);
    if let Some(tol) = tol {
        if tail > tol {
            return Err(Error::Guard(format!("series truncation at order {order} leaves a tail of {tail:e} > {tol:e}")));
        }
    }
    let mut log = Complex64::zero();
    let mut count_err = 0.0;
    for m in 1..=order {
        let row = &table.rows[m];
        log += u.powi(m as i32) * (rational_to_f64(&row.n_m[i]) / m as f64);
        count_err += row.err_m[i] * r.powi(m as i32) / m as f64;
    }
    let value = log.exp();
    let total = tail + count_err;
    Ok(ZetaEvaluation {
        u,
        method: Method::Series,
        value,
        level: table.levels[i],
        bound: Some(value.norm() * total.exp_m1()),
        domain: format!("|u| < {}", radii.series),
    })
}

/// Euler product evaluated at `u` from an exact expansion to `order`.
pub fn euler_zeta(classes: &[PrimeClass], u: Complex64, order: usize, d: usize) -> Result<ZetaEvaluation> {
    let radii = domain_guards(d)?;
    if u.norm() >= radii.series {
        return Err(Error::Guard(format!("|u| = {} is outside the disc of radius {}", u.norm(), radii.series)));
    }
    let z = euler_product(classes, order)?;
    Ok(ZetaEvaluation {
        u,
        method: Method::Euler,
        value: z.evaluate(u),
        level: 0,
        bound: None,
        domain: format!("|u| < {}", radii.series),
    })
}

/// Spectra larger than this go through the logarithm series.
pub const EIGEN_LIMIT: usize = 3000;

/// `mean_i log λ_i(I - u A + u^2 Q)` on `g` with the diagonal `q`, together
/// with the determinant certificate when eigenvalues were used.
fn mean_log_det(g: &Graph, q: &[i64], u: Complex64) -> Result<(Complex64, Option<DetDomainCertificate>)> {
    let n = g.num_vertices();
    if n > EIGEN_LIMIT {
        return Ok((log_series_mean(g, q, u)?, None));
    }
    let spec: Vec<Complex64> = if u.im == 0.0 {
        let x = u.re;
        let m = DMatrix::<f64>::from_fn(n, n, |r, c| {
            if r == c {
                1.0 + x * x * q[r] as f64
            } else if g.has_edge(r, c) {
                -x
            } else {
                0.0
            }
        });
        m.symmetric_eigen().eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)).collect()
    } else {
        let m = DMatrix::<Complex64>::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::one() + u * u * q[r] as f64
            } else if g.has_edge(r, c) {
                -u
            } else {
                Complex64::zero()
            }
        });
        spectrum(&m)?
    };
    let cert = certify(&spec)?;
    let mean = spec.iter().map(|&z| log_with_direction(z, cert.direction)).sum::<Complex64>() / n as f64;
    Ok((mean, Some(cert)))
}

/// `(1/n) Tr log(I - f)` with `f = uA - u^2 Q` as `-Σ_k (1/n) Tr f^k / k`,
/// using ball-restricted diagonals of `f^k`. Requires `‖f‖ <= 0.9`.
fn log_series_mean(g: &Graph, q: &[i64], u: Complex64) -> Result<Complex64> {
    let d = g.max_degree().max(q.iter().map(|&x| (x + 1) as usize).max().unwrap_or(0));
    let r = u.norm();
    let norm = d as f64 * r + (d as f64 - 1.0) * r * r;
    if norm > 0.9 {
        return Err(Error::Guard(format!("log series needs ‖f(u)‖ <= 0.9, bound is {norm}")));
    }
    let mut terms = 1;
    while norm.powi(terms as i32 + 1) / ((terms + 1) as f64 * (1.0 - norm)) > 1e-15 {
        terms += 1;
    }
    let n = g.num_vertices();
    let radius = terms / 2;
    let sums: Vec<Complex64> = (0..n as u32)
        .into_par_iter()
        .map_init(
            || vec![u32::MAX; n],
            |local, v| {
                let mut order = vec![v];
                let mut dist = vec![0usize];
                local[v as usize] = 0;
                let mut head = 0;
                while head < order.len() {
                    let w = order[head] as usize;
                    let dw = dist[head];
                    head += 1;
                    if dw == radius {
                        continue;
                    }
                    for &x in g.neighbors(w) {
                        if local[x as usize] == u32::MAX {
                            local[x as usize] = order.len() as u32;
                            order.push(x);
                            dist.push(dw + 1);
                        }
                    }
                }
                let nbrs: Vec<Vec<u32>> = order
                    .iter()
                    .map(|&w| {
                        g.neighbors(w as usize)
                            .iter()
                            .filter_map(|&x| (local[x as usize] != u32::MAX).then_some(local[x as usize]))
                            .collect()
                    })
                    .collect();
                let qs: Vec<f64> = order.iter().map(|&w| q[w as usize] as f64).collect();
                for &w in &order {
                    local[w as usize] = u32::MAX;
                }
                let mut x = vec![Complex64::zero(); order.len()];
                x[0] = Complex64::one();
                let mut acc = Complex64::zero();
                let u2 = u * u;
                for k in 1..=terms {
                    let limit = dist.partition_point(|&dd| dd <= k.min(terms - k));
                    let next: Vec<Complex64> = (0..order.len())
                        .map(|i| {
                            if i >= limit {
                                return Complex64::zero();
                            }
                            let s: Complex64 = nbrs[i].iter().map(|&l| x[l as usize]).sum();
                            u * s - u2 * qs[i] * x[i]
                        })
                        .collect();
                    x = next;
                    acc += x[0] / k as f64;
                }
                -acc
            },
        )
        .collect();
    Ok(sums.iter().sum::<Complex64>() / n as f64)
}

/// `Z` at level `n` through the determinant formula:
/// `1/Z ≈ (1-u^2)^{-χ_n} exp(mean log λ_i(E_n(I - Au + Qu^2)E_n))`.
pub fn det_formula_zeta(x: &Exhaustion, u: Complex64, level: usize, variant: DetVariant) -> Result<ZetaEvaluation> {
    let radii = domain_guards(x.max_degree())?;
    if u.norm() >= radii.det {
        return Err(Error::Guard(format!("|u| = {} is outside the determinant disc of radius {}", u.norm(), radii.det)));
    }
    det_formula_unguarded(x, u, level, variant, Method::DetFormula, format!("|u| < {}", radii.det))
}

fn det_formula_unguarded(
    x: &Exhaustion,
    u: Complex64,
    level: usize,
    variant: DetVariant,
    method: Method,
    domain: String,
) -> Result<ZetaEvaluation> {
    let g = x.level(level)?;
    let q: Vec<i64> = match variant {
        DetVariant::Ambient => x.ambient_degrees(level)?.iter().map(|&d| d as i64 - 1).collect(),
        DetVariant::Own => g.degrees().iter().map(|&d| d as i64 - 1).collect(),
    };
    let chi = g.euler_characteristic() as f64 / g.num_vertices() as f64;
    let (mean_log, _) = mean_log_det(g, &q, u)?;
    let one_minus = Complex64::one() - u * u;
    let log_inv = -chi * one_minus.ln() + mean_log;
    Ok(ZetaEvaluation { u, method, value: (-log_inv).exp(), level, bound: None, domain })
}

/// `Z_{K_n}(u)^{1/|K_n|}` for each level, principal branch (continuous along
/// `[0, u]` since `‖f(tu)‖ < 1/2`). Rejects `|u| >= 1/(d + sqrt(d^2 + 2(d-1)))`.
pub fn approx_zeta(x: &Exhaustion, u: Complex64, levels: &[usize]) -> Result<Vec<ZetaEvaluation>> {
    let radii = domain_guards(x.max_degree())?;
    if u.norm() >= radii.approx {
        return Err(Error::Guard(format!(
            "|u| = {} is outside the approximation disc of radius {}",
            u.norm(),
            radii.approx
        )));
    }
    levels
        .iter()
        .map(|&n| det_formula_unguarded(x, u, n, DetVariant::Own, Method::FiniteApprox, format!("|u| < {}", radii.approx)))
        .collect()
}

/// The finite-graph zeta `1/Z_K = (1-u^2)^{|E|-|V|} det(I - Au + Qu^2)`.
#[derive(Clone, Debug)]
pub struct FiniteZeta {
    /// `|E| - |V|`.
    pub euler_exponent: i64,
    /// `det(I - Au + Qu^2)` modulo `u^{M+1}`.
    pub det_series: Vec<BigInt>,
    /// The full polynomial of degree `<= 2|V|`, for small graphs.
    pub det_polynomial: Option<Vec<BigInt>>,
    pub inverse: PowerSeries<BigRational>,
    pub z: PowerSeries<BigRational>,
}

/// Graphs up to this size also get the full determinant polynomial.
pub const POLYNOMIAL_LIMIT: usize = 40;

fn series_mul(a: &[BigInt], b: &[BigInt], order: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); order + 1];
    for (i, x) in a.iter().enumerate().take(order + 1) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Inverse of an integer series with constant term `±1`.
fn series_unit_inverse(a: &[BigInt], order: usize) -> Vec<BigInt> {
    let c0 = a[0].clone();
    let mut r = vec![c0.clone()];
    for n in 1..=order {
        let mut s = BigInt::zero();
        for k in 1..=n.min(a.len() - 1) {
            s += &a[k] * &r[n - k];
        }
        r.push(-(&c0 * s));
    }
    r
}

/// `det(I - Au + Qu^2) mod u^{order+1}` by elimination over integer series.
/// Every pivot stays `≡ 1 (mod u)`, so no division leaves the integers.
pub fn det_series(g: &Graph, order: usize) -> Result<Vec<BigInt>> {
    let n = g.num_vertices();
    let cost = (n as f64).powi(3) * ((order + 1) as f64).powi(2);
    if cost > 4e9 {
        return Err(Error::Guard(format!("series determinant on {n} vertices to order {order} is too large")));
    }
    let mut m: Vec<Vec<Vec<BigInt>>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    let mut s = vec![BigInt::zero(); order + 1];
                    if r == c {
                        s[0] = BigInt::one();
                        if order >= 2 {
                            s[2] = BigInt::from(g.degree(r) as i64 - 1);
                        }
                    } else if g.has_edge(r, c) && order >= 1 {
                        s[1] = BigInt::from(-1);
                    }
                    s
                })
                .collect()
        })
        .collect();
    let mut det = vec![BigInt::zero(); order + 1];
    det[0] = BigInt::one();
    for k in 0..n {
        let pivot = m[k][k].clone();
        det = series_mul(&det, &pivot, order);
        let inv = series_unit_inverse(&pivot, order);
        let row_k: Vec<Vec<BigInt>> = m[k].clone();
        for r in k + 1..n {
            if m[r][k].iter().all(|c| c.is_zero()) {
                continue;
            }
            let factor = series_mul(&m[r][k], &inv, order);
            for c in k + 1..n {
                if row_k[c].iter().all(|x| x.is_zero()) {
                    continue;
                }
                let sub = series_mul(&factor, &row_k[c], order);
                for (e, s) in m[r][c].iter_mut().zip(sub) {
                    *e -= s;
                }
            }
        }
    }
    Ok(det)
}

/// `(1 - u^2)^k` for any integer `k`, as an integer series.
fn one_minus_u2_power(k: i64, order: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); order + 1];
    // coefficient of u^{2j} is (-1)^j binom(k, j), generalised for k < 0
    let mut c = BigInt::one();
    let mut j = 0usize;
    while 2 * j <= order {
        out[2 * j] = c.clone();
        c = -(c * BigInt::from(k - j as i64)) / BigInt::from(j as i64 + 1);
        j += 1;
    }
    out
}

pub fn finite_ihara_zeta(g: &Graph, order: usize) -> Result<FiniteZeta> {
    let n = g.num_vertices();
    let euler_exponent = g.num_edges() as i64 - n as i64;
    let full = n <= POLYNOMIAL_LIMIT;
    let det_order = if full { order.max(2 * n) } else { order };
    let det = det_series(g, det_order)?;
    let det_polynomial = full.then(|| {
        let mut p = det.clone();
        p.truncate(2 * n + 1);
        while p.len() > 1 && p.last().unwrap().is_zero() {
            p.pop();
        }
        p
    });
    let det_series: Vec<BigInt> = det[..=order].to_vec();
    let inverse_int = series_mul(&one_minus_u2_power(euler_exponent, order), &det_series, order);
    let inverse = PowerSeries::from_integers(&inverse_int, order);
    let z = inverse.reciprocal()?;
    Ok(FiniteZeta { euler_exponent, det_series, det_polynomial, inverse, z })
}
