use crate::{BuildArgs, Levels, Mode, RunArgs};
use anyhow::{Context, Result};
use fractal_zeta::cycle_oracle::weighted_census;
use fractal_zeta::fractal_builders::{Exhaustion, Family};
use fractal_zeta::funceq::{
    default_grid, detect_regularity, euler_characteristic_check, funceq_residuals, omega_membership, residuals_csv,
    RegularLevel,
};
use fractal_zeta::scalar::{rational_string, rational_to_f64};
use fractal_zeta::spectral_counts::{check_vertex_counts, compare_with_census, path_count_table, MAX_ORDER};
use fractal_zeta::zeta_engine::{
    approx_zeta, det_formula_zeta, euler_zeta, series_zeta, zeta_from_counts, DetVariant, PrimeClass, ZetaEvaluation,
    EIGEN_LIMIT,
};
use fractal_zeta::Error;
use num_complex::Complex64;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

/// The Euler product needs a census of the deepest level; keep it affordable.
const EULER_MAX_ORDER: usize = 12;
const FUNCEQ_DEFAULT_TOL: f64 = 1e-8;
/// Largest admissible series truncation tail when `--tol` is absent.
const SERIES_DEFAULT_TOL: f64 = 1e-3;

/// Outcome of a completed run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    GuardRejections,
    ConsistencyFailure,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::GuardRejections => 2,
            Status::ConsistencyFailure => 3,
        }
    }
}

/// Exit code for a run that was aborted with an error.
pub fn error_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::Guard(_)
            | Error::LevelTooLarge { .. }
            | Error::OrderTooLarge { .. }
            | Error::BudgetExceeded { .. }
            | Error::NoCertificate(_)
            | Error::MissingLevel { .. },
        ) => 2,
        Some(Error::Inconsistent(_)) => 3,
        _ => 1,
    }
}

fn is_guard(e: &Error) -> bool {
    matches!(
        e,
        Error::Guard(_) | Error::LevelTooLarge { .. } | Error::OrderTooLarge { .. } | Error::BudgetExceeded { .. } | Error::NoCertificate(_)
    )
}

/// Artifacts go to `--out` when given; the JSON summary always goes to stdout.
struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn new(dir: &Option<PathBuf>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Output { dir: dir.clone() })
    }

    fn write(&self, name: &str, content: &str) -> Result<()> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }

    fn finish(&self, summary: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(summary)?;
        self.write("summary.json", &format!("{text}\n"))?;
        println!("{text}");
        Ok(())
    }
}

fn default_last(family: Family, command: &str) -> usize {
    match (family, command) {
        (Family::Gasket, "funceq" | "zeta" | "converge") => 6,
        (Family::Gasket, _) => 5,
        (Family::Vicsek, _) => 4,
        (Family::Lindstrom | Family::Carpet, _) => 3,
    }
}

fn levels_of(a: &RunArgs, command: &str, first_default: usize) -> Levels {
    a.levels.unwrap_or(Levels { first: first_default, last: default_last(a.family, command) })
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::OrderTooLarge { order, cap: MAX_ORDER }.into());
    }
    Ok(())
}

fn build_exhaustion(family: Family, last: usize) -> Result<Exhaustion> {
    Ok(Exhaustion::build(family, last)?)
}

fn read_grid(path: &Path) -> Result<Vec<Complex64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading grid {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let u = crate::parse_point(line).map_err(|msg| Error::Parse { line: i + 1, msg })?;
        out.push(u);
    }
    Ok(out)
}

fn points_of(a: &RunArgs, fallback: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let mut pts = match &a.grid {
        Some(p) => read_grid(p)?,
        None => Vec::new(),
    };
    pts.extend(a.points.iter().copied());
    Ok(if pts.is_empty() { fallback } else { pts })
}

fn c(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn rejection(u: Complex64, method: &str, e: &Error) -> Value {
    json!({ "u": c(u), "method": method, "reason": e.to_string() })
}

pub fn build(a: &BuildArgs) -> Result<Status> {
    let x = build_exhaustion(a.family, a.levels.last)?;
    let out = Output::new(&a.out)?;
    let mut levels = Vec::new();
    for n in 1..=x.max_level() {
        let g = x.level(n)?;
        out.write(&format!("level_{n}.edges"), &g.to_edge_list())?;
        let desc = x.descriptor(n)?;
        let predicted = a.family.predicted_vertices(n);
        if (predicted - desc.vertices as f64).abs() > 0.5 {
            return Err(Error::Inconsistent(format!(
                "level {n} has {} vertices, closed form gives {predicted}",
                desc.vertices
            ))
            .into());
        }
        let mut v = serde_json::to_value(&desc)?;
        v["predicted_V"] = json!(predicted);
        levels.push(v);
    }
    out.finish(&json!({ "schema": 1, "command": "build", "family": a.family.name(), "levels": levels }))?;
    Ok(Status::Ok)
}

fn number(r: &num_rational::BigRational, mode: Mode) -> Value {
    match mode {
        Mode::Exact => json!(rational_string(r)),
        Mode::Float => json!(rational_to_f64(r)),
    }
}

pub fn counts(a: &RunArgs) -> Result<Status> {
    check_order(a.order)?;
    let lv = levels_of(a, "counts", 1);
    let x = build_exhaustion(a.family, lv.last)?;
    let out = Output::new(&a.out)?;
    let table = path_count_table(&x, None, a.order)?;
    match a.mode {
        Mode::Exact => out.write("counts.csv", &table.to_csv())?,
        Mode::Float => {
            let mut csv = String::from("m,level,tr_Am,t_m,N_m,err_m\n");
            for row in &table.rows {
                for (i, level) in table.levels.iter().enumerate() {
                    csv.push_str(&format!(
                        "{},{},{:e},{:e},{:e},{:e}\n",
                        row.m,
                        level,
                        rational_to_f64(&row.tr_am[i]),
                        rational_to_f64(&row.t_m[i]),
                        rational_to_f64(&row.n_m[i]),
                        row.err_m[i]
                    ));
                }
            }
            out.write("counts.csv", &csv)?;
        }
    }

    // The oracle runs level by level until the budget gives out.
    let mut oracle_rows = Vec::new();
    let mut truncated = None;
    for n in lv.first..=*table.levels.last().unwrap() {
        match compare_with_census(&x, &[n], a.order, a.budget) {
            Ok(rows) => oracle_rows.extend(rows),
            Err(e @ Error::BudgetExceeded { .. }) => {
                eprintln!("oracle stopped at level {n}: {e}");
                truncated = Some(json!({ "level": n, "reason": e.to_string() }));
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut csv = String::from("level,m,spectral,census,tail_err,boundary_err,agrees\n");
    for r in &oracle_rows {
        csv.push_str(&format!(
            "{},{},{:e},{:e},{:e},{:e},{}\n",
            r.level, r.m, r.spectral, r.census, r.tail_err, r.boundary_err, r.agrees
        ));
    }
    out.write("oracle.csv", &csv)?;
    let disagreements = oracle_rows.iter().filter(|r| !r.agrees).count();
    let i = table.deepest_index();
    let rows: Vec<Value> = table
        .rows
        .iter()
        .skip(1)
        .map(|r| json!({ "m": r.m, "N_m": number(&r.n_m[i], a.mode), "err_m": r.err_m[i], "clipped": r.clipped[i] }))
        .collect();
    out.finish(&json!({
        "schema": 1,
        "command": "counts",
        "family": a.family.name(),
        "level": table.levels[i],
        "order": a.order,
        "mode": format!("{:?}", a.mode).to_lowercase(),
        "rows": rows,
        "oracle": { "rows": oracle_rows.len(), "disagreements": disagreements, "truncated": truncated },
    }))?;
    Ok(if disagreements > 0 {
        Status::ConsistencyFailure
    } else if truncated.is_some() {
        Status::GuardRejections
    } else {
        Status::Ok
    })
}

fn max_pairwise_delta(evals: &[ZetaEvaluation]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, a) in evals.iter().enumerate() {
        for b in &evals[i + 1..] {
            let d = (a.value - b.value).norm();
            best = Some(best.map_or(d, |x| x.max(d)));
        }
    }
    best
}

pub fn zeta(a: &RunArgs) -> Result<Status> {
    check_order(a.order)?;
    let lv = levels_of(a, "zeta", 1);
    let x = build_exhaustion(a.family, lv.last)?;
    let out = Output::new(&a.out)?;
    let points = points_of(a, vec![Complex64::new(0.0, 0.0), Complex64::new(0.05, 0.0)])?;
    let table = path_count_table(&x, None, a.order)?;
    if a.mode == Mode::Exact {
        out.write("series.csv", &zeta_from_counts(&table, None, a.order)?.z.to_csv())?;
    }
    let euler_order = a.order.min(EULER_MAX_ORDER);
    let classes: std::result::Result<Vec<PrimeClass>, Error> =
        weighted_census(&x, euler_order, a.budget).map(|w| w.primes().map(PrimeClass::from).collect());
    let top = x.max_level();
    let d = x.max_degree();

    let mut results = Vec::new();
    let mut rejections = Vec::new();
    for &u in &points {
        let attempts: Vec<(&str, std::result::Result<ZetaEvaluation, Error>)> = vec![
            ("series", series_zeta(&table, None, u, Some(a.tol.unwrap_or(SERIES_DEFAULT_TOL)))),
            (
                "euler",
                match &classes {
                    Ok(cl) => euler_zeta(cl, u, euler_order, d),
                    Err(e) => Err(Error::Guard(format!("census for the Euler product failed: {e}"))),
                },
            ),
            ("det_formula", det_formula_zeta(&x, u, top, DetVariant::Ambient)),
            ("finite_approx", approx_zeta(&x, u, &[top]).map(|mut v| v.remove(0))),
        ];
        let mut evals = Vec::new();
        for (name, r) in attempts {
            match r {
                Ok(e) => evals.push(e),
                Err(e) if is_guard(&e) => rejections.push(rejection(u, name, &e)),
                Err(e) => return Err(e.into()),
            }
        }
        results.push(json!({
            "u": c(u),
            "evaluations": evals,
            "max_pairwise_delta": max_pairwise_delta(&evals),
        }));
    }
    out.finish(&json!({
        "schema": 1,
        "command": "zeta",
        "family": a.family.name(),
        "order": a.order,
        "euler_order": euler_order,
        "points": results,
        "rejections": rejections,
    }))?;
    Ok(if rejections.is_empty() { Status::Ok } else { Status::GuardRejections })
}

pub fn funceq(a: &RunArgs) -> Result<Status> {
    let lv = levels_of(a, "funceq", 1);
    let x = build_exhaustion(a.family, lv.last)?;
    let out = Output::new(&a.out)?;
    let report = detect_regularity(&x)?;
    let q = report
        .q
        .ok_or_else(|| Error::Guard(format!("{} is not essentially regular: exceptional counts {:?}", a.family, report.exceptional)))?;
    let level = (1..=x.max_level())
        .rev()
        .find(|&n| x.level(n).is_ok_and(|g| g.num_vertices() <= EIGEN_LIMIT))
        .unwrap_or(1);
    let reg = RegularLevel::new(&x, level, q)?;
    let tol = a.tol.unwrap_or(FUNCEQ_DEFAULT_TOL);
    let mut kept = Vec::new();
    let mut rejections = Vec::new();
    for u in points_of(a, default_grid(q))? {
        let partner_ok = u.norm() > 0.0 && omega_membership(Complex64::new(1.0, 0.0) / (u * q as f64), q);
        if omega_membership(u, q) && partner_ok {
            kept.push(u);
        } else {
            rejections.push(rejection(u, "funceq", &Error::Guard("u or 1/(qu) outside the domain".into())));
        }
    }
    let rows = funceq_residuals(&reg, &kept, tol)?;
    out.write("residuals.csv", &residuals_csv(&rows))?;
    let failures = rows.iter().filter(|r| !r.passes()).count();
    let (chi, chi_target) = euler_characteristic_check(&x, q);
    out.finish(&json!({
        "schema": 1,
        "command": "funceq",
        "family": a.family.name(),
        "q": q,
        "level": level,
        "exceptional": report.exceptional,
        "chi_average": { "deepest_level": chi, "target": chi_target },
        "tolerance": tol,
        "rows": rows,
        "failures": failures,
        "rejections": rejections,
    }))?;
    Ok(if failures > 0 {
        Status::ConsistencyFailure
    } else if !rejections.is_empty() {
        Status::GuardRejections
    } else {
        Status::Ok
    })
}

pub fn converge(a: &RunArgs) -> Result<Status> {
    check_order(a.order)?;
    let lv = levels_of(a, "converge", 2);
    let x = build_exhaustion(a.family, lv.last)?;
    let out = Output::new(&a.out)?;
    let table = path_count_table(&x, None, a.order)?;
    let levels: Vec<usize> = (lv.first..=lv.last).collect();
    let mut csv = String::from("u_re,u_im,level,approx_re,approx_im,series_re,series_im,gap,series_bound\n");
    let mut points = Vec::new();
    let mut rejections = Vec::new();
    for u in points_of(a, vec![Complex64::new(0.05, 0.0)])? {
        let attempt = series_zeta(&table, None, u, Some(a.tol.unwrap_or(SERIES_DEFAULT_TOL))).and_then(|s| Ok((s, approx_zeta(&x, u, &levels)?)));
        let (reference, approx) = match attempt {
            Ok(v) => v,
            Err(e) if is_guard(&e) => {
                rejections.push(rejection(u, "converge", &e));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let mut gaps = Vec::new();
        for ev in &approx {
            let gap = (ev.value - reference.value).norm();
            gaps.push(gap);
            csv.push_str(&format!(
                "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                u.re,
                u.im,
                ev.level,
                ev.value.re,
                ev.value.im,
                reference.value.re,
                reference.value.im,
                gap,
                reference.bound.unwrap_or(f64::NAN)
            ));
        }
        points.push(json!({
            "u": c(u),
            "series": c(reference.value),
            "series_bound": reference.bound,
            "levels": levels,
            "gaps": gaps,
            "final_below_first": gaps.last() < gaps.first(),
        }));
    }
    out.write("converge.csv", &csv)?;
    out.finish(&json!({
        "schema": 1,
        "command": "converge",
        "family": a.family.name(),
        "order": a.order,
        "points": points,
        "rejections": rejections,
    }))?;
    Ok(if rejections.is_empty() { Status::Ok } else { Status::GuardRejections })
}

pub fn oracle(a: &RunArgs) -> Result<Status> {
    check_order(a.order)?;
    let lv = levels_of(a, "oracle", 1);
    // one extra level so that the frontier of the last requested level is known
    let x = build_exhaustion(a.family, lv.last + 1)?;
    let out = Output::new(&a.out)?;
    let mut csv = String::from("level,m,spectral,census,tail_err,boundary_err,agrees\n");
    let mut disagreements = 0;
    let mut checks = Vec::new();
    for n in lv.first..=lv.last {
        for r in compare_with_census(&x, &[n], a.order, a.budget)? {
            disagreements += usize::from(!r.agrees);
            csv.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e},{}\n",
                r.level, r.m, r.spectral, r.census, r.tail_err, r.boundary_err, r.agrees
            ));
        }
        let v = check_vertex_counts(&x, n, a.order, a.budget)?;
        disagreements += v.mismatches.len();
        checks.push(v);
    }
    out.write("oracle.csv", &csv)?;
    out.write("vertex_check.json", &serde_json::to_string_pretty(&checks)?)?;
    out.finish(&json!({
        "schema": 1,
        "command": "oracle",
        "family": a.family.name(),
        "levels": [lv.first, lv.last],
        "order": a.order,
        "vertex_checks": checks,
        "disagreements": disagreements,
    }))?;
    Ok(if disagreements > 0 { Status::ConsistencyFailure } else { Status::Ok })
}
