//! Stochastic heat equation ∂_tZ = ½∂_x²Z + ξZ on a finite grid, in the
//! λ = D = 1, ν = ½ units, and the KPZ height h = log Z.
//!
//! One step applies the explicit heat update with the three-point Laplacian,
//! then multiplies every cell by exp(√(dt/dx)·N(0,1) − dt/(2dx)), whose mean is
//! one (Itô convention). Boundaries are Dirichlet.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::CrossoverParams;
use crate::error::{require, KpzError, Result};
use crate::rng::{stream, StreamPurpose};
use crate::stats::{gumbel_convolve_compare, linear_fit, ComparisonReport, Estimate, Moments};

/// Relative mass allowed within `EDGE_CELLS` of either boundary.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;
const EDGE_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheGrid {
    pub dx: f64,
    pub dt: f64,
    /// Cells sit at x_i = (i − center)·dx for i < cells.
    pub cells: usize,
    pub center: usize,
}

impl SheGrid {
    /// Grid on [−L, L] with the largest stable step dt = dx²/2 unless given.
    pub fn new(dx: f64, half_width: f64, dt: Option<f64>) -> Result<Self> {
        require(dx > 0.0 && dx.is_finite(), || format!("dx must be positive, got {dx}"))?;
        require(half_width >= 2.0 * dx, || format!("half width {half_width} too small for dx = {dx}"))?;
        let dt = dt.unwrap_or(0.5 * dx * dx);
        if !(dt > 0.0 && dt <= 0.5 * dx * dx * (1.0 + 1e-12)) {
            return Err(KpzError::Stability { dt, limit: 0.5 * dx * dx });
        }
        let center = (half_width / dx).round() as usize;
        Ok(Self { dx, dt, cells: 2 * center + 1, center })
    }

    /// Grid wide enough for sharp-wedge data up to time `t`: L = 7√t + 2.
    pub fn for_time(dx: f64, t: f64) -> Result<Self> {
        Self::new(dx, 7.0 * t.max(0.0).sqrt() + 2.0, None)
    }

    pub fn half_width(&self) -> f64 {
        self.center as f64 * self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.center as f64) * self.dx
    }

    /// Index of the cell nearest to x.
    pub fn index(&self, x: f64) -> Result<usize> {
        let i = (x / self.dx).round() + self.center as f64;
        require(i >= 0.0 && (i as usize) < self.cells, || format!("x = {x} lies outside the grid"))?;
        Ok(i as usize)
    }

    /// Number of steps and the step that lands exactly on `t`.
    pub fn steps_to(&self, t: f64) -> (usize, f64) {
        let n = (t / self.dt * (1.0 - 1e-12)).ceil().max(0.0) as usize;
        if n == 0 { (0, self.dt) } else { (n, t / n as f64) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SheInitial {
    /// Z(x, 0) = δ(x), realized as 1/dx on the origin cell.
    SharpWedge,
    /// h(x, 0) two-sided Brownian motion with unit diffusivity and drift ϑ.
    Brownian { theta: f64 },
    Flat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SheField {
    pub z: Vec<f64>,
    pub time: f64,
    pub initial: SheInitial,
}

impl SheField {
    pub fn new(grid: &SheGrid, initial: SheInitial, rng: &mut impl Rng) -> Self {
        let mut z = vec![0.0; grid.cells];
        match initial {
            SheInitial::SharpWedge => z[grid.center] = 1.0 / grid.dx,
            SheInitial::Flat => z.iter_mut().for_each(|v| *v = 1.0),
            SheInitial::Brownian { theta } => {
                let sd = grid.dx.sqrt();
                let mut h = 0.0;
                for i in grid.center + 1..grid.cells {
                    h += theta * grid.dx + sd * rng.sample::<f64, _>(StandardNormal);
                    z[i] = h;
                }
                h = 0.0;
                for i in (0..grid.center).rev() {
                    h -= theta * grid.dx + sd * rng.sample::<f64, _>(StandardNormal);
                    z[i] = h;
                }
                z.iter_mut().for_each(|v| *v = v.exp());
            }
        }
        Self { z, time: 0.0, initial }
    }

    /// Σ Z(x_i)·dx.
    pub fn mass(&self, grid: &SheGrid) -> f64 {
        self.z.iter().sum::<f64>() * grid.dx
    }

    /// CSV with header "x,Z,h".
    pub fn to_csv(&self, grid: &SheGrid) -> String {
        let mut out = String::from("x,Z,h\n");
        for (i, z) in self.z.iter().enumerate() {
            out.push_str(&format!("{:.6},{z:.10e},{:.10e}\n", grid.x(i), z.ln()));
        }
        out
    }
}

/// One explicit step with per-cell log-normal factors of log-scale `sigma`.
fn step(z: &mut [f64], scratch: &mut [f64], r: f64, sigma: f64, normals: impl Iterator<Item = f64>, lo: usize, hi: usize) {
    let drift = -0.5 * sigma * sigma;
    let n = z.len();
    for i in lo..hi {
        let left = if i > 0 { z[i - 1] } else { 0.0 };
        let right = if i + 1 < n { z[i + 1] } else { 0.0 };
        scratch[i] = z[i] + r * (left - 2.0 * z[i] + right);
    }
    for (i, g) in (lo..hi).zip(normals) {
        z[i] = scratch[i] * (sigma * g + drift).exp();
    }
}

/// Evolves the field to time `field.time + t` with noise amplitude `strength`
/// (0 gives the discrete heat semigroup, 1 the SHE).
pub fn integrate_she_with(field: &SheField, grid: &SheGrid, t: f64, strength: f64, rng: &mut impl Rng) -> Result<SheField> {
    require(t >= 0.0 && t.is_finite(), || format!("integration time must be non-negative, got {t}"))?;
    require(field.z.len() == grid.cells, || "field does not match the grid".into())?;
    let (steps, dt) = grid.steps_to(t);
    if dt > 0.5 * grid.dx * grid.dx * (1.0 + 1e-12) {
        return Err(KpzError::Stability { dt, limit: 0.5 * grid.dx * grid.dx });
    }
    let r = 0.5 * dt / (grid.dx * grid.dx);
    let sigma = strength * (dt / grid.dx).sqrt();
    let mut z = field.z.clone();
    let mut scratch = vec![0.0; z.len()];
    // sharp-wedge support spreads by one cell per step
    let mut support = match field.initial {
        SheInitial::SharpWedge if field.time == 0.0 => Some(0usize),
        _ => None,
    };
    for _ in 0..steps {
        let (lo, hi) = match support.as_mut() {
            Some(k) => {
                *k += 1;
                (grid.center.saturating_sub(*k), (grid.center + *k + 1).min(grid.cells))
            }
            None => (0, grid.cells),
        };
        let normals = std::iter::repeat_with(|| rng.sample::<f64, _>(StandardNormal));
        if sigma == 0.0 {
            step(&mut z, &mut scratch, r, 0.0, std::iter::repeat(0.0), lo, hi);
        } else {
            step(&mut z, &mut scratch, r, sigma, normals, lo, hi);
        }
    }
    let out = SheField { z, time: field.time + t, initial: field.initial };
    check_field(&out, grid)?;
    Ok(out)
}

/// SHE evolution over time `t`.
pub fn integrate_she(field: &SheField, grid: &SheGrid, t: f64, rng: &mut impl Rng) -> Result<SheField> {
    integrate_she_with(field, grid, t, 1.0, rng)
}

fn check_field(field: &SheField, grid: &SheGrid) -> Result<()> {
    if let Some(bad) = field.z.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(KpzError::NonFinite(format!("field value {bad}")));
    }
    if matches!(field.initial, SheInitial::SharpWedge) {
        let total: f64 = field.z.iter().sum();
        let edge: f64 = field.z[..EDGE_CELLS].iter().chain(&field.z[grid.cells - EDGE_CELLS..]).sum();
        if !(edge <= BOUNDARY_MASS_LIMIT * total) {
            return Err(KpzError::BoundaryMass { boundary: edge * grid.dx, total: total * grid.dx });
        }
    }
    Ok(())
}

/// h = log Z on every cell.
pub fn height(field: &SheField) -> Result<Vec<f64>> {
    field
        .z
        .iter()
        .enumerate()
        .map(|(i, &z)| if z > 0.0 { Ok(z.ln()) } else { Err(KpzError::InvalidArgument(format!("non-positive field {z} at cell {i}"))) })
        .collect()
}

/// η(x, t) = h(x, t) + x²/2t + t/24.
pub fn eta_transform(h: f64, x: f64, t: f64) -> Result<f64> {
    require(t > 0.0, || format!("η needs t > 0, got {t}"))?;
    Ok(h + x * x / (2.0 * t) + t / 24.0)
}

/// Sharp-wedge replicas run to the last of `times`, recording Z at the cells
/// nearest to `xs`; result[r][k][j] is replica r, time k, point j.
pub fn sharp_wedge_samples(grid: &SheGrid, times: &[f64], xs: &[f64], replicas: usize, seed: u64) -> Result<Vec<Vec<Vec<f64>>>> {
    require(!times.is_empty() && times.windows(2).all(|w| w[0] < w[1]) && times[0] > 0.0, || "times must be positive and increasing".into())?;
    let cells: Vec<usize> = xs.iter().map(|&x| grid.index(x)).collect::<Result<_>>()?;
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r, StreamPurpose::SheNoise);
            let mut field = SheField::new(grid, SheInitial::SharpWedge, &mut rng);
            let mut out = Vec::with_capacity(times.len());
            for &t in times {
                field = integrate_she(&field, grid, t - field.time, &mut rng)?;
                out.push(cells.iter().map(|&i| field.z[i]).collect());
            }
            Ok(out)
        })
        .collect()
}

/// η(0, t) samples for sharp-wedge data; result[k] holds the samples at times[k].
pub fn eta_samples(grid: &SheGrid, times: &[f64], replicas: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let raw = sharp_wedge_samples(grid, times, &[0.0], replicas, seed)?;
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| raw.iter().map(|rep| eta_transform(positive_log(rep[k][0])?, 0.0, t)).collect())
        .collect()
}

fn positive_log(z: f64) -> Result<f64> {
    if z > 0.0 {
        Ok(z.ln())
    } else {
        Err(KpzError::InvalidArgument(format!("non-positive field value {z}")))
    }
}

/// Paired coarse/fine runs driven by the same white noise: the coarse cell
/// (i, step) receives the normalized sum of the eight fine normals from
/// fine cells 2i, 2i + 1 over four fine steps. Returns
/// (η coarse, η fine) at x = 0 and time t.
pub fn coupled_refinement_eta(coarse: &SheGrid, t: f64, replica: u64, seed: u64) -> Result<(f64, f64)> {
    let fine = SheGrid::new(coarse.dx / 2.0, coarse.half_width(), Some(coarse.dt / 4.0))?;
    let (steps, dt) = coarse.steps_to(t);
    let (rc, rf) = (0.5 * dt / (coarse.dx * coarse.dx), 0.5 * (dt / 4.0) / (fine.dx * fine.dx));
    let (sc, sf) = ((dt / coarse.dx).sqrt(), (dt / 4.0 / fine.dx).sqrt());
    let mut rng = stream(seed, replica, StreamPurpose::SheNoise);
    let mut zc = vec![0.0; coarse.cells];
    let mut zf = vec![0.0; fine.cells];
    zc[coarse.center] = 1.0 / coarse.dx;
    zf[fine.center] = 1.0 / fine.dx;
    let (mut bc, mut bf) = (vec![0.0; coarse.cells], vec![0.0; fine.cells]);
    let mut acc = vec![0.0; coarse.cells];
    let mut normals = vec![0.0; fine.cells];
    // fine cell j sits at x = (j/2 − center)·dx + (j mod 2)·dx/2, inside coarse cell j/2
    let norm: Vec<f64> = (0..coarse.cells).map(|i| if i + 1 == coarse.cells { 2.0 } else { 8f64.sqrt() }).collect();
    for _ in 0..steps {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for _ in 0..4 {
            for (j, g) in normals.iter_mut().enumerate() {
                *g = rng.sample(StandardNormal);
                acc[j / 2] += *g;
            }
            step(&mut zf, &mut bf, rf, sf, normals.iter().copied(), 0, fine.cells);
        }
        let gs = acc.iter().zip(&norm).map(|(a, n)| a / n);
        step(&mut zc, &mut bc, rc, sc, gs, 0, coarse.cells);
    }
    let fc = SheField { z: zc, time: t, initial: SheInitial::SharpWedge };
    let ff = SheField { z: zf, time: t, initial: SheInitial::SharpWedge };
    check_field(&fc, coarse)?;
    check_field(&ff, &fine)?;
    Ok((eta_transform(positive_log(fc.z[coarse.center])?, 0.0, t)?, eta_transform(positive_log(ff.z[fine.center])?, 0.0, t)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianReport {
    pub theta: f64,
    pub t: f64,
    /// (x, Var(h(x, t) − h(0, t)) averaged over ±x).
    pub points: Vec<(f64, Estimate)>,
    /// Least-squares slope through the origin.
    pub slope: f64,
    pub slope_se: f64,
}

/// Increment variances of h(·, t) started from Brownian data.
pub fn brownian_invariance_check(theta: f64, t: f64, xs: &[f64], dx: f64, replicas: usize, seed: u64) -> Result<BrownianReport> {
    require(replicas >= 100, || format!("at least 100 replicas needed, got {replicas}"))?;
    require(!xs.is_empty() && xs.iter().all(|&x| x > 0.0), || "increment ladder must be positive".into())?;
    let x_max = xs.iter().cloned().fold(0.0, f64::max);
    let grid = SheGrid::new(dx, x_max + 8.0 * t.sqrt() + 4.0, None)?;
    let offsets: Vec<(usize, usize)> = xs.iter().map(|&x| Ok((grid.index(x)?, grid.index(-x)?))).collect::<Result<_>>()?;
    let per_replica: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut init = stream(seed, r, StreamPurpose::SheInitial);
            let mut noise = stream(seed, r, StreamPurpose::SheNoise);
            let field = SheField::new(&grid, SheInitial::Brownian { theta }, &mut init);
            let field = integrate_she(&field, &grid, t, &mut noise)?;
            let h0 = positive_log(field.z[grid.center])?;
            offsets
                .iter()
                .map(|&(p, m)| Ok([positive_log(field.z[p])? - h0, positive_log(field.z[m])? - h0]))
                .collect::<Result<Vec<[f64; 2]>>>()
                .map(|v| v.into_iter().flatten().collect())
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(xs.len());
    for (k, &x) in xs.iter().enumerate() {
        let right = Moments::from_slice(&per_replica.iter().map(|v| v[2 * k]).collect::<Vec<_>>());
        let left = Moments::from_slice(&per_replica.iter().map(|v| v[2 * k + 1]).collect::<Vec<_>>());
        let var = 0.5 * (right.variance() + left.variance());
        // Gaussian increments: SE(var) ≈ var·√(2/n) per side, averaged over two sides
        let se = var * (1.0 / replicas as f64).sqrt();
        points.push((x, Estimate { estimate: var, se, n_samples: replicas }));
    }
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let slope = points.iter().map(|(x, e)| x * e.estimate).sum::<f64>() / sxx;
    let slope_se = points.iter().map(|(x, e)| (x * e.se).powi(2)).sum::<f64>().sqrt() / sxx;
    Ok(BrownianReport { theta, t, points, slope, slope_se })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentGrowth {
    pub n: u32,
    /// (t, ⟨Z(0,t)^N⟩/⟨Z(0,t)⟩^N with its delta-method standard error).
    pub points: Vec<(f64, Estimate)>,
    pub rate: f64,
    pub rate_se: f64,
    /// N(N² − 1)/24.
    pub target: f64,
}

/// Normalized N-th moment ratio with a delta-method standard error.
pub fn normalized_moment(samples: &[f64], n: u32) -> Result<Estimate> {
    require(samples.len() >= 2, || "need at least two samples".into())?;
    let m1 = Moments::from_slice(samples);
    let powered: Vec<f64> = samples.iter().map(|z| z.powi(n as i32)).collect();
    let mn = Moments::from_slice(&powered);
    let ratio = mn.mean / m1.mean.powi(n as i32);
    let len = samples.len() as f64;
    // Var of log(ratio) ≈ Var(Z^N)/(N-th moment)² + N² Var(Z)/⟨Z⟩² − 2N Cov/(both)
    let cov = samples.iter().zip(&powered).map(|(z, p)| (z - m1.mean) * (p - mn.mean)).sum::<f64>() / (len - 1.0);
    let rel = mn.variance() / (mn.mean * mn.mean) + (n * n) as f64 * m1.variance() / (m1.mean * m1.mean)
        - 2.0 * n as f64 * cov / (mn.mean * m1.mean);
    Ok(Estimate { estimate: ratio, se: ratio * (rel.max(0.0) / len).sqrt(), n_samples: samples.len() })
}

/// Exponential rate of ⟨Z(0,t)^N⟩/⟨Z(0,t)⟩^N along the t-ladder.
pub fn moment_growth_check(n: u32, times: &[f64], dx: f64, replicas: usize, seed: u64) -> Result<MomentGrowth> {
    require((1..=3).contains(&n), || format!("moment order must be 1, 2 or 3, got {n}"))?;
    require(times.len() >= 2, || "need at least two times".into())?;
    let grid = SheGrid::for_time(dx, *times.last().unwrap())?;
    let raw = sharp_wedge_samples(&grid, times, &[0.0], replicas, seed)?;
    moment_growth_from_samples(n, times, &raw.iter().map(|rep| rep.iter().map(|v| v[0]).collect()).collect::<Vec<Vec<f64>>>())
}

/// Same as [`moment_growth_check`] on precomputed Z(0, t) samples, indexed [replica][time].
pub fn moment_growth_from_samples(n: u32, times: &[f64], z: &[Vec<f64>]) -> Result<MomentGrowth> {
    let target = n as f64 * ((n * n) as f64 - 1.0) / 24.0;
    let points: Vec<(f64, Estimate)> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| Ok((t, normalized_moment(&z.iter().map(|rep| rep[k]).collect::<Vec<_>>(), n)?)))
        .collect::<Result<_>>()?;
    if n == 1 {
        return Ok(MomentGrowth { n, points, rate: 0.0, rate_se: 0.0, target });
    }
    let ts: Vec<f64> = points.iter().map(|p| p.0).collect();
    let logs: Vec<f64> = points.iter().map(|p| p.1.estimate.ln()).collect();
    let fit = linear_fit(&ts, &logs)?;
    // statistical error of the slope from the per-point log errors
    let mt = ts.iter().sum::<f64>() / ts.len() as f64;
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let stat = points.iter().map(|(t, e)| ((t - mt) * e.se / e.estimate).powi(2)).sum::<f64>().sqrt() / sxx;
    let rate_se = stat.max(fit.slope_se);
    if rate_se > 0.25 * target {
        return Err(KpzError::InsufficientStatistics(format!("rate error {rate_se} exceeds 25% of the target {target}")));
    }
    Ok(MomentGrowth { n, points, rate: fit.slope, rate_se, target })
}

/// Monte Carlo ⟨exp(−exp(η(0,t) − γ_t s))⟩ against the crossover determinant.
pub fn crossover_cross_validation(t: f64, s_grid: &[f64], dx: f64, replicas: usize, seed: u64) -> Result<ComparisonReport> {
    require((0.25..=1.0).contains(&t), || format!("t = {t} outside the reliable window [0.25, 1]"))?;
    require(!s_grid.is_empty(), || "empty s grid".into())?;
    let grid = SheGrid::for_time(dx, t)?;
    let eta = eta_samples(&grid, &[t], replicas, seed)?.remove(0);
    let mut report = gumbel_convolve_compare(&eta, &CrossoverParams::new(t)?, s_grid)?;
    report.seed = Some(seed);
    Ok(report)
}
