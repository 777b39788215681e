use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use kpz_core::asep::{height_ensemble, tau_moment_contour, tau_moment_mc, AsepRates, InitialCondition};
use kpz_core::distributions::{crossover_cdf_and_density, tw_table as tw_table_core, two_point_covariance, CrossoverParams, DistributionTable, Ensemble, TableProvenance, TwOptions};
use kpz_core::polymer::{log_partition_samples, log_partition_variance, Disorder};
use kpz_core::replica::moment_via_strings;
use kpz_core::she::{brownian_invariance_check, crossover_cross_validation, moment_growth_from_samples, normalized_moment, sharp_wedge_samples, SheGrid};
use kpz_core::stats::{compare_with_table, ecdf, exponent_fit, Estimate};

use crate::config::{ConfigError, Params};
use crate::output::Output;

fn config_error(msg: String) -> anyhow::Error {
    ConfigError(msg).into()
}

fn uniform_grid(start: f64, step: f64, end: f64) -> Vec<f64> {
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| start + step * k as f64).collect()
}

fn report(paths: &[&Path], pass: bool) {
    for p in paths {
        println!("wrote {}", p.display());
    }
    println!("{}", if pass { "PASS" } else { "FAIL" });
}

pub fn tw_table(p: &mut Params, dir: &Path) -> Result<bool> {
    let which: String = p.get("which", "gue".to_string())?;
    let ensemble = match which.as_str() {
        "gue" => Ensemble::Gue,
        "goe" => Ensemble::Goe,
        other => return Err(config_error(format!("which must be gue or goe, got {other:?}"))),
    };
    let s_min = p.get("s_min", -8.0)?;
    let s_max = p.get("s_max", if ensemble == Ensemble::Gue { 5.0 } else { 10.0 })?;
    let ds = p.get("ds", 0.05)?;
    let n = p.get("n", 40usize)?;
    let length = p.get("l", 10.0)?;
    p.check(s_min < s_max && ds > 0.0, || format!("need s_min < s_max and ds > 0, got [{s_min}, {s_max}], ds = {ds}"))?;
    p.check(n >= 4 && length > 0.0, || format!("need n ≥ 4 and L > 0, got n = {n}, L = {length}"))?;
    p.reject_unknown()?;
    let out = Output::new(dir, p, None);
    if out.cached(&["csv", "json"]) {
        println!("cached {}", out.path("csv").display());
        return Ok(true);
    }
    let table = tw_table_core(ensemble, s_min, s_max, ds, TwOptions { n, length })?;
    let (mean, variance) = table.mean_variance();
    let csv = out.write_csv(&table.to_csv())?;
    let js = out.write_json(json!({
        "which": which,
        "n": n,
        "length": length,
        "points": table.s.len(),
        "mean": mean,
        "variance": variance,
        "pass": true,
    }))?;
    report(&[&csv, &js], true);
    Ok(true)
}

pub fn crossover(p: &mut Params, dir: &Path) -> Result<bool> {
    let t: f64 = p.get("t", 1.0)?;
    p.check(t.is_finite() && t > 0.0, || format!("t must be positive, got {t}"))?;
    let gamma = (0.5 * t).cbrt();
    // the Gumbel smoothing spreads the generating function over ~1/γ_t
    let s_min = p.get("s_min", -(6.0 + 4.0 / gamma).ceil())?;
    let s_max = p.get("s_max", (8.0 + 10.0 / gamma).ceil())?;
    let ds = p.get("ds", 0.05)?;
    p.check(s_min < s_max && ds > 0.0, || format!("need s_min < s_max and ds > 0, got [{s_min}, {s_max}], ds = {ds}"))?;
    p.reject_unknown()?;
    let out = Output::new(dir, p, None);
    if out.cached(&["csv", "json"]) {
        println!("cached {}", out.path("csv").display());
        return Ok(true);
    }
    let params = CrossoverParams::new(t)?;
    let grid = uniform_grid(s_min, ds, s_max);
    let dec = crossover_cdf_and_density(&params, &grid)?;
    let density = dec.table.density.as_deref().context("deconvolution returned no density")?;
    let mut body = String::from("s,G,F,density\n");
    for i in 0..grid.len() {
        writeln!(body, "{:.10},{:.15e},{:.15e},{:.15e}", grid[i], dec.generating[i], dec.table.cdf[i], density[i])?;
    }
    let (mean, variance) = dec.table.mean_variance();
    let csv = out.write_csv(&body)?;
    let js = out.write_json(json!({
        "t": t,
        "gamma_t": params.gamma_t,
        "regularization": dec.regularization,
        "round_trip_residual": dec.round_trip_residual,
        "min_raw_density": dec.min_raw_density,
        "mean": mean,
        "variance": variance,
        "pass": true,
    }))?;
    report(&[&csv, &js], true);
    Ok(true)
}

pub fn two_point(p: &mut Params, dir: &Path) -> Result<bool> {
    let w: f64 = p.get("w", 1.0)?;
    p.check(w.is_finite() && w > 0.0, || format!("w must be positive, got {w}"))?;
    p.reject_unknown()?;
    let out = Output::new(dir, p, None);
    if out.cached(&["json"]) {
        println!("cached {}", out.path("json").display());
        return Ok(true);
    }
    let r = two_point_covariance(w)?;
    let js = out.write_json(json!({
        "w": r.w,
        "estimate": r.g,
        "g": r.g,
        "covariance": r.covariance,
        "variance": r.variance,
        "large_w_asymptote": 2.0 * r.variance - 2.0 / (w * w),
        "determinants": r.determinants,
        "pass": true,
    }))?;
    report(&[&js], true);
    Ok(true)
}

pub fn simulate_asep(p: &mut Params, dir: &Path) -> Result<bool> {
    let init: String = p.get("init", "step".to_string())?;
    let initial = match init.as_str() {
        "step" => InitialCondition::Step,
        "flat" => InitialCondition::Flat,
        "stationary" => InitialCondition::Stationary { rho: p.get("rho", 0.5)? },
        other => return Err(config_error(format!("init must be step, flat or stationary, got {other:?}"))),
    };
    let rates = AsepRates::new(p.get("p", 0.0)?, p.get("q", 1.0)?)?;
    let t: f64 = p.get("t", 100.0)?;
    let replicas = p.get("replicas", 100usize)?;
    let seed = p.get("seed", 1u64)?;
    let sites = p.list("sites", &[0i64])?;
    p.check(t.is_finite() && t >= 0.0, || format!("t must be non-negative, got {t}"))?;
    p.check(replicas >= 2, || format!("at least two replicas needed, got {replicas}"))?;
    p.reject_unknown()?;
    let out = Output::new(dir, p, Some(seed));
    let heights = height_ensemble(initial, &rates, t, &sites, replicas, seed)?;
    let mut body = String::from("replica,site,canonical_height\n");
    for (r, row) in heights.iter().enumerate() {
        for (j, h) in sites.iter().zip(row) {
            writeln!(body, "{r},{j},{h}")?;
        }
    }
    let per_site = sites
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let hs: Vec<f64> = heights.iter().map(|row| row[k] as f64).collect();
            let rate: Vec<f64> = hs.iter().map(|h| h / t.max(f64::MIN_POSITIVE)).collect();
            let est = Estimate::from_samples(&rate)?;
            let mean = hs.iter().sum::<f64>() / hs.len() as f64;
            let variance = hs.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (hs.len() - 1) as f64;
            Ok(json!({
                "site": j,
                "estimate": est.estimate,
                "se": est.se,
                "n_samples": est.n_samples,
                "mean_height": mean,
                "height_variance": variance,
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    let csv = out.write_csv(&body)?;
    let js = out.write_json(json!({ "init": init, "t": t, "sites": per_site, "pass": true }))?;
    report(&[&csv, &js], true);
    Ok(true)
}

pub fn tau_moment(p: &mut Params, dir: &Path) -> Result<bool> {
    let n = p.get("n", 1usize)?;
    p.check((1..=3).contains(&n), || format!("N must be 1, 2 or 3, got {n}"))?;
    let default_sites: Vec<i64> = (0..n as i64).collect();
    let sites = p.list("sites", &default_sites)?;
    p.check(sites.len() == n, || format!("{} sites given for N = {n}", sites.len()))?;
    let t: f64 = p.get("t", 1.0)?;
    let tau = p.get("tau", 0.5)?;
    let replicas = p.get("replicas", 4000usize)?;
    let seed = p.get("seed", 1u64)?;
    p.check(replicas >= 2, || format!("at least two replicas needed, got {replicas}"))?;
    p.reject_unknown()?;
    let out = Output::new(dir, p, Some(seed));
    let rates = AsepRates::from_tau(tau)?;
    let exact = tau_moment_contour(&sites, t, &rates)?;
    let mc = tau_moment_mc(&sites, t, &rates, replicas, seed)?;
    let z = mc.z_score(exact.value);
    let pass = z <= 3.0;
    let js = out.write_json(json!({
        "sites": sites,
        "t": t,
        "tau": tau,
        "estimate": mc.estimate,
        "se": mc.se,
        "n_samples": mc.n_samples,
        "contour": exact.value,
        "contour_nodes": exact.nodes,
        "contour_radius": exact.radius,
        "z": z,
        "tolerance": 3.0,
        "pass": pass,
    }))?;
    report(&[&js], pass);
    Ok(pass)
}

pub fn simulate_polymer(p: &mut Params, dir: &Path) -> Result<bool> {
    let beta = p.get("beta", 1.0)?;
    let dist: String = p.get("dist", "gaussian".to_string())?;
    let disorder = match dist.as_str() {
        "gaussian" => Disorder::standard_gaussian(),
        "bernoulli" => Disorder::Bernoulli,
        "exponential" => Disorder::Exponential { rate: p.get("rate", 1.0)? },
        other => return Err(config_error(format!("dist must be gaussian, bernoulli or exponential, got {other:?}"))),
    };
    let ladder = p.list("n_ladder", &[64usize, 128, 256, 512, 1024])?;
    let replicas = p.get("replicas", 1000usize)?;
    let seed = p.get("seed", 1u64)?;
    p.check(ladder.len() >= 2 && ladder.iter().all(|&n| n >= 2 && n % 2 == 0), || format!("N-ladder needs at least two even lengths, got {ladder:?}"))?;
    p.check(replicas >= 10, || format!("at least ten replicas needed, got {replicas}"))?;
    p.reject_unknown()?;
    disorder.admits(beta)?;
    let out = Output::new(dir, p, Some(seed));
    let mut points = Vec::with_capacity(ladder.len());
    for &n in &ladder {
        let samples = log_partition_samples(n, beta, disorder, seed, replicas)?;
        points.push((n, log_partition_variance(&samples)));
    }
    let mut body = String::from("N,variance,variance_se\n");
    for (n, (v, se)) in &points {
        writeln!(body, "{n},{v:.10e},{se:.4e}")?;
    }
    let target = 2.0 / 3.0;
    let tolerance = 0.1;
    let degenerate = points.iter().all(|(_, (v, _))| *v == 0.0);
    let (summary, pass) = if degenerate {
        // without disorder weights log Z is deterministic
        (json!({ "estimate": Value::Null, "se": Value::Null, "degenerate": true }), beta == 0.0)
    } else if points.iter().any(|(_, (v, _))| *v <= 0.0) {
        (json!({ "estimate": Value::Null, "se": Value::Null, "degenerate": false }), false)
    } else {
        let ns: Vec<f64> = points.iter().map(|(n, _)| *n as f64).collect();
        let vs: Vec<f64> = points.iter().map(|(_, (v, _))| *v).collect();
        let fit = exponent_fit(&ns, &vs)?;
        (json!({ "estimate": fit.slope, "se": fit.slope_se, "degenerate": false }), (fit.slope - target).abs() <= tolerance)
    };
    let mut report_json = json!({
        "beta": beta,
        "dist": dist,
        "n_samples": replicas,
        "target": target,
        "tolerance": tolerance,
        "pass": pass,
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut report_json, summary) {
        a.extend(b);
    }
    let csv = out.write_csv(&body)?;
    let js = out.write_json(report_json)?;
    report(&[&csv, &js], pass);
    Ok(pass)
}

pub fn simulate_she(p: &mut Params, dir: &Path) -> Result<bool> {
    let check: String = p.get("check", "crossover".to_string())?;
    match check.as_str() {
        "crossover" => she_crossover(p, dir),
        "moments" => she_moments(p, dir),
        "brownian" => she_brownian(p, dir),
        other => Err(config_error(format!("check must be crossover, moments or brownian, got {other:?}"))),
    }
}

fn she_crossover(p: &mut Params, dir: &Path) -> Result<bool> {
    let t = p.get("t", 0.25)?;
    let dx = p.get("dx", 0.02)?;
    let replicas = p.get("replicas", 10_000usize)?;
    let seed = p.get("seed", 1u64)?;
    let s_min = p.get("s_min", -5.0)?;
    let ds = p.get("ds", 0.5)?;
    let points = p.get("points", 15usize)?;
    p.check(points >= 1 && ds > 0.0, || format!("need points ≥ 1 and ds > 0, got {points}, {ds}"))?;
    p.reject_unknown()?;
    let out = Output::new(dir, p, Some(seed));
    let s_grid: Vec<f64> = (0..points).map(|k| s_min + ds * k as f64).collect();
    let mut rep = crossover_cross_validation(t, &s_grid, dx, replicas, seed)?;
    rep.config_hash = Some(out.hash.clone());
    let mut body = String::from("s,estimate,se,reference,z\n");
    for q in &rep.points {
        writeln!(body, "{:.6},{:.12e},{:.6e},{:.12e},{:.4}", q.s, q.estimate, q.se, q.reference, q.z)?;
    }
    let pass = rep.pass;
    let csv = out.write_csv(&body)?;
    let js = out.write_json(json!({
        "check": "crossover",
        "t": t,
        "dx": dx,
        "n_samples": replicas,
        "max_z": rep.max_z(),
        "tolerance": rep.z_tolerance,
        "points": rep.points,
        "pass": pass,
    }))?;
    report(&[&csv, &js], pass);
    Ok(pass)
}

fn she_moments(p: &mut Params, dir: &Path) -> Result<bool> {
    let times = p.list("times", &[0.25, 0.5, 0.75, 1.0])?;
    let dx = p.get("dx", 0.05)?;
    let replicas = p.get("replicas", 4000usize)?;
    let seed = p.get("seed", 1u64)?;
    p.check(times.len() >= 2 && times.iter().all(|&t| t > 0.0 && t <= 1.5), || format!("need at least two times in (0, 1.5], got {times:?}"))?;
    p.check(times.windows(2).all(|w| w[0] < w[1]), || format!("times must increase, got {times:?}"))?;
    p.reject_unknown()?;
    let out = Output::new(dir, p, Some(seed));
    let t_max = *times.last().expect("non-empty");
    let grid = SheGrid::for_time(dx, t_max)?;
    let samples = sharp_wedge_samples(&grid, &times, &[0.0], replicas, seed)?;
    let z: Vec<Vec<f64>> = samples.iter().map(|per_t| per_t.iter().map(|xs| xs[0]).collect()).collect();

    let moment_tolerance = 0.05;
    let rate_tolerance = 0.1;
    let mut pass = true;
    let mut body = String::from("N,t,normalized_moment,se,strings\n");
    let mut second = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let zz: Vec<f64> = z.iter().map(|row| row[k] * row[k]).collect();
        let mc = Estimate::from_samples(&zz)?;
        let exact = moment_via_strings(2, t)?;
        let rel = mc.estimate / exact - 1.0;
        pass &= rel.abs() <= moment_tolerance;
        second.push(json!({ "t": t, "estimate": mc.estimate, "se": mc.se, "strings": exact, "relative_difference": rel }));
    }
    let mut growth = Vec::new();
    for n in [2u32, 3] {
        let g = moment_growth_from_samples(n, &times, &z)?;
        for (k, &t) in times.iter().enumerate() {
            let column: Vec<f64> = z.iter().map(|row| row[k]).collect();
            let ratio = normalized_moment(&column, n)?;
            let strings = moment_via_strings(n as usize, t)? / moment_via_strings(1, t)?.powi(n as i32);
            writeln!(body, "{n},{t},{:.10e},{:.4e},{:.10e}", ratio.estimate, ratio.se, strings)?;
        }
        let ok = (g.rate - g.target).abs() <= rate_tolerance * g.target;
        pass &= ok;
        growth.push(json!({ "N": n, "estimate": g.rate, "se": g.rate_se, "target": g.target, "pass": ok }));
    }
    let csv = out.write_csv(&body)?;
    let js = out.write_json(json!({
        "check": "moments",
        "dx": dx,
        "n_samples": replicas,
        "second_moment": second,
        "second_moment_tolerance": moment_tolerance,
        "growth": growth,
        "tolerance": rate_tolerance,
        "pass": pass,
    }))?;
    report(&[&csv, &js], pass);
    Ok(pass)
}

fn she_brownian(p: &mut Params, dir: &Path) -> Result<bool> {
    let theta = p.get("theta", 0.0)?;
    let t = p.get("t", 0.5)?;
    let xs = p.list("xs", &[0.25, 0.5, 0.75, 1.0])?;
    let dx = p.get("dx", 0.05)?;
    let replicas = p.get("replicas", 400usize)?;
    let seed = p.get("seed", 1u64)?;
    p.reject_unknown()?;
    let out = Output::new(dir, p, Some(seed));
    let rep = brownian_invariance_check(theta, t, &xs, dx, replicas, seed)?;
    let tolerance = 0.05;
    let pass = (rep.slope - 1.0).abs() <= tolerance;
    let mut body = String::from("x,increment_variance,se\n");
    for (x, e) in &rep.points {
        writeln!(body, "{x},{:.10e},{:.4e}", e.estimate, e.se)?;
    }
    let csv = out.write_csv(&body)?;
    let js = out.write_json(json!({
        "check": "brownian",
        "theta": theta,
        "t": t,
        "estimate": rep.slope,
        "se": rep.slope_se,
        "n_samples": replicas,
        "tolerance": tolerance,
        "pass": pass,
    }))?;
    report(&[&csv, &js], pass);
    Ok(pass)
}

/// Numeric rows of a CSV: comment lines and a non-numeric header are skipped.
fn numeric_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match fields.iter().filter(|f| !f.is_empty()).map(|f| f.parse::<f64>()).collect::<Result<Vec<f64>, _>>() {
            Ok(values) => rows.push(values),
            Err(_) if rows.is_empty() => continue,
            Err(e) => return Err(config_error(format!("line {}: {e}", i + 1))),
        }
    }
    Ok(rows)
}

fn read_input(p: &mut Params, key: &str) -> Result<String> {
    let path: String = p.get(key, String::new())?;
    p.check(!path.is_empty(), || format!("{key} file is required"))?;
    let text = std::fs::read_to_string(&path).map_err(|e| config_error(format!("cannot read {path}: {e}")))?;
    p.record(&format!("{key}_sha256"), hex::encode(Sha256::digest(text.as_bytes())));
    Ok(text)
}

pub fn compare(p: &mut Params, dir: &Path) -> Result<bool> {
    let samples_text = read_input(p, "samples")?;
    let table_text = read_input(p, "table")?;
    let tolerance = p.get("tolerance", 0.05)?;
    p.reject_unknown()?;
    let out = Output::new(dir, p, None);
    let samples: Vec<f64> = numeric_rows(&samples_text)?.into_iter().filter_map(|r| r.first().copied()).collect();
    let rows = numeric_rows(&table_text)?;
    if rows.iter().any(|r| r.len() < 2) {
        return Err(config_error("table rows need at least the columns s,F".into()));
    }
    let s: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let cdf: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let table = DistributionTable::new(s, cdf, None, TableProvenance::default())?;
    let emp = ecdf(&samples)?;
    let rep = compare_with_table(&emp, &table, tolerance)?;
    let pass = rep.pass;
    let js = out.write_json(json!({
        "estimate": rep.ks,
        "tolerance": tolerance,
        "n_samples": samples.len(),
        "mean_difference": rep.mean_difference,
        "variance_difference": rep.variance_difference,
        "pass": pass,
    }))?;
    println!("{}", rep.summary());
    report(&[&js], pass);
    Ok(pass)
}
