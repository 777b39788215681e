use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{require, KpzError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsepRates {
    pub p: f64,
    pub q: f64,
    pub tau: f64,
}

impl AsepRates {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        require((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q), || format!("rates must lie in [0, 1], got p={p}, q={q}"))?;
        require((p + q - 1.0).abs() < 1e-12, || format!("rates must satisfy p + q = 1, got {}", p + q))?;
        require(q > 0.0, || "q must be positive".into())?;
        Ok(Self { p, q, tau: p / q })
    }

    /// Totally asymmetric case p = 0, q = 1.
    pub fn tasep() -> Self {
        Self { p: 0.0, q: 1.0, tau: 0.0 }
    }

    /// Rates with τ = p/q.
    pub fn from_tau(tau: f64) -> Result<Self> {
        require((0.0..=1.0).contains(&tau), || format!("τ must lie in [0, 1], got {tau}"))?;
        Self::new(tau / (1.0 + tau), 1.0 / (1.0 + tau))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    Step,
    Flat,
    Stationary { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Corner {
    Valley,
    Peak,
    Slope,
}

/// Indexed set supporting O(1) insert, remove and uniform sampling.
#[derive(Debug, Clone)]
struct SiteSet {
    items: Vec<usize>,
    pos: Vec<usize>,
}

impl SiteSet {
    fn new(n: usize) -> Self {
        Self { items: Vec::new(), pos: vec![usize::MAX; n] }
    }

    fn insert(&mut self, i: usize) {
        if self.pos[i] == usize::MAX {
            self.pos[i] = self.items.len();
            self.items.push(i);
        }
    }

    fn remove(&mut self, i: usize) {
        let k = self.pos[i];
        if k != usize::MAX {
            let last = self.items.pop().expect("non-empty");
            if last != i {
                self.items[k] = last;
                self.pos[last] = k;
            }
            self.pos[i] = usize::MAX;
        }
    }
}

/// Height profile on j ∈ [−W, W] (growth frame) with its clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsepState {
    pub window: i64,
    heights: Vec<i64>,
    pub time: f64,
    pub initial: InitialCondition,
    pub flips: u64,
    /// Largest |j| at which a flip has occurred.
    pub activity: i64,
}

impl AsepState {
    fn from_heights(window: i64, heights: Vec<i64>, initial: InitialCondition) -> Self {
        Self { window, heights, time: 0.0, initial, flips: 0, activity: 0 }
    }

    fn index(&self, j: i64) -> usize {
        (j + self.window) as usize
    }

    /// Growth-frame height h(j).
    pub fn height(&self, j: i64) -> i64 {
        assert!(j.abs() <= self.window, "site {j} outside window {}", self.window);
        self.heights[self.index(j)]
    }

    /// Canonical-frame height h_c(j) = −h(−j).
    pub fn canonical_height(&self, j: i64) -> i64 {
        -self.height(-j)
    }

    pub fn heights(&self) -> &[i64] {
        &self.heights
    }

    /// Canonical-frame profile ordered by j = −W..=W.
    pub fn canonical_heights(&self) -> Vec<i64> {
        (-self.window..=self.window).map(|j| self.canonical_height(j)).collect()
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        -self.window..=self.window
    }

    pub fn slopes_valid(&self) -> bool {
        self.heights.windows(2).all(|w| (w[1] - w[0]).abs() == 1)
    }

    /// Sites within this distance of the origin are unaffected by the walls.
    pub fn trusted_radius(&self, rates: &AsepRates) -> i64 {
        match self.initial {
            InitialCondition::Step => self.window,
            _ => self.window - (4.0 * (rates.p + rates.q) * self.time).ceil() as i64 - 1,
        }
    }

    /// Canonical-frame snapshot as CSV with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,h\n");
        for j in self.sites() {
            out += &format!("{j},{}\n", self.canonical_height(j));
        }
        out
    }

    fn corner(&self, i: usize) -> Corner {
        if i == 0 || i + 1 >= self.heights.len() {
            return Corner::Slope;
        }
        let (l, c, r) = (self.heights[i - 1], self.heights[i], self.heights[i + 1]);
        if l > c && r > c {
            Corner::Valley
        } else if l < c && r < c {
            Corner::Peak
        } else {
            Corner::Slope
        }
    }
}

/// Step data: canonical −|j|, growth frame |j|.
pub fn init_step(window: i64) -> Result<AsepState> {
    require(window >= 1, || format!("window must be ≥ 1, got {window}"))?;
    let heights = (-window..=window).map(|j| j.abs()).collect();
    Ok(AsepState::from_heights(window, heights, InitialCondition::Step))
}

/// Zero mean slope: canonical heights |j| mod 2.
pub fn init_flat(window: i64) -> Result<AsepState> {
    require(window >= 1, || format!("window must be ≥ 1, got {window}"))?;
    let heights = (-window..=window).map(|j: i64| -(j.abs() % 2)).collect();
    Ok(AsepState::from_heights(window, heights, InitialCondition::Flat))
}

/// I.i.d. slopes, +1 with probability ρ, pinned at h(0) = 0.
pub fn init_stationary(window: i64, rho: f64, rng: &mut impl Rng) -> Result<AsepState> {
    require(window >= 1, || format!("window must be ≥ 1, got {window}"))?;
    require(rho > 0.0 && rho <= 1.0, || format!("density must lie in (0, 1], got {rho}"))?;
    let n = (2 * window + 1) as usize;
    let slopes: Vec<i64> = (0..n - 1).map(|_| if rng.random::<f64>() < rho { 1 } else { -1 }).collect();
    let mut heights = vec![0i64; n];
    for i in 1..n {
        heights[i] = heights[i - 1] + slopes[i - 1];
    }
    let offset = heights[window as usize];
    heights.iter_mut().for_each(|h| *h -= offset);
    Ok(AsepState::from_heights(window, heights, InitialCondition::Stationary { rho }))
}

/// Rejection-free continuous-time evolution over a duration T. Walls at ±W
/// are frozen; for step data a flip next to a wall aborts the trajectory,
/// and for other data the window must leave a non-empty trusted region.
pub fn kmc_evolve(mut state: AsepState, rates: &AsepRates, duration: f64, rng: &mut impl Rng) -> Result<AsepState> {
    require(duration >= 0.0 && duration.is_finite(), || format!("duration must be non-negative, got {duration}"))?;
    let end = state.time + duration;
    if state.initial != InitialCondition::Step {
        let reach = (4.0 * (rates.p + rates.q) * end).ceil() as i64;
        if reach + 1 > state.window {
            return Err(KpzError::BoundaryCone(format!(
                "window {} is smaller than the disturbance cone {reach} at t = {end}",
                state.window
            )));
        }
    }
    let n = state.heights.len();
    let mut valleys = SiteSet::new(n);
    let mut peaks = SiteSet::new(n);
    for i in 1..n - 1 {
        match state.corner(i) {
            Corner::Valley => valleys.insert(i),
            Corner::Peak => peaks.insert(i),
            Corner::Slope => {}
        }
    }
    let edge = state.window - 1;
    loop {
        let up = rates.q * valleys.items.len() as f64;
        let down = rates.p * peaks.items.len() as f64;
        let total = up + down;
        if total <= 0.0 {
            state.time = end;
            break;
        }
        let wait: f64 = rng.sample::<f64, _>(Exp1) / total;
        if state.time + wait > end {
            state.time = end;
            break;
        }
        state.time += wait;
        let pick_up = rng.random::<f64>() * total < up;
        let set = if pick_up { &valleys } else { &peaks };
        let i = set.items[rng.random_range(0..set.items.len())];
        state.heights[i] += if pick_up { 2 } else { -2 };
        state.flips += 1;
        let j = i as i64 - state.window;
        state.activity = state.activity.max(j.abs());
        if state.initial == InitialCondition::Step && j.abs() >= edge {
            return Err(KpzError::BoundaryCone(format!(
                "flip at site {j} reached the wall of window {} at t = {:.3}",
                state.window, state.time
            )));
        }
        for k in i.saturating_sub(1)..=(i + 1).min(n - 1) {
            valleys.remove(k);
            peaks.remove(k);
            match state.corner(k) {
                Corner::Valley => valleys.insert(k),
                Corner::Peak => peaks.insert(k),
                Corner::Slope => {}
            }
        }
    }
    Ok(state)
}

/// Window large enough for step data to run for a duration T without
/// reaching the walls except with negligible probability.
pub fn step_window(rates: &AsepRates, duration: f64) -> i64 {
    (4.0 * (rates.p + rates.q) * duration).ceil() as i64 + 16
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamPurpose};
    use proptest::prelude::*;

    #[test]
    fn step_profile() {
        let s = init_step(2).unwrap();
        assert_eq!(s.canonical_heights(), vec![-2, -1, 0, -1, -2]);
        assert_eq!(s.canonical_height(0), 0);
        assert_eq!(s.height(-2) - s.height(-1), 1);
        assert!(init_step(0).is_err());
    }

    #[test]
    fn flat_and_stationary_profiles() {
        assert_eq!(init_flat(2).unwrap().canonical_heights(), vec![0, 1, 0, 1, 0]);
        let mut rng = stream(1, 0, StreamPurpose::Test);
        let s = init_stationary(5, 1.0, &mut rng).unwrap();
        assert!(s.heights().windows(2).all(|w| w[1] - w[0] == 1));
        let s = init_stationary(5000, 0.5, &mut rng).unwrap();
        let slopes: Vec<f64> = s.heights().windows(2).map(|w| (w[1] - w[0]) as f64).collect();
        let m = slopes.iter().sum::<f64>() / slopes.len() as f64;
        // slopes ±1 have unit variance
        assert!(m.abs() < 3.0 / (slopes.len() as f64).sqrt(), "mean slope {m}");
    }

    #[test]
    fn tasep_never_decreases() {
        let rates = AsepRates::tasep();
        let mut rng = stream(2, 0, StreamPurpose::Test);
        let s0 = init_step(step_window(&rates, 30.0)).unwrap();
        let s = kmc_evolve(s0.clone(), &rates, 30.0, &mut rng).unwrap();
        assert!(s.flips > 0);
        assert!(s.heights().iter().zip(s0.heights()).all(|(a, b)| a >= b));
        assert!(s.slopes_valid());
    }

    #[test]
    fn identical_seeds_reproduce_trajectories() {
        let rates = AsepRates::new(0.3, 0.7).unwrap();
        let run = |seed| {
            let mut rng = stream(seed, 3, StreamPurpose::AsepDynamics);
            kmc_evolve(init_step(100).unwrap(), &rates, 15.0, &mut rng).unwrap()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9).heights(), run(10).heights());
    }

    #[test]
    fn wall_contact_aborts_step_runs() {
        let rates = AsepRates::tasep();
        let mut rng = stream(4, 0, StreamPurpose::Test);
        let r = kmc_evolve(init_step(3).unwrap(), &rates, 50.0, &mut rng);
        assert!(matches!(r, Err(KpzError::BoundaryCone(_))));
        let r = kmc_evolve(init_flat(10).unwrap(), &rates, 50.0, &mut rng);
        assert!(matches!(r, Err(KpzError::BoundaryCone(_))));
    }

    #[test]
    fn stationary_flip_count_linear_in_time() {
        // half-filled stationary TASEP: each bond carries a flip at rate ρ(1 − ρ) = 1/4
        let rates = AsepRates::tasep();
        let mut counts = Vec::new();
        for &t in &[2.0, 4.0, 8.0] {
            let mut total = 0.0;
            for r in 0..40 {
                let mut rng = stream(5, r, StreamPurpose::Test);
                let s0 = init_stationary(400, 0.5, &mut rng).unwrap();
                total += kmc_evolve(s0, &rates, t, &mut rng).unwrap().flips as f64;
            }
            counts.push(total / 40.0);
        }
        let per_time: Vec<f64> = counts.iter().zip([2.0, 4.0, 8.0]).map(|(c, t)| c / t).collect();
        for v in &per_time {
            assert!((v / per_time[0] - 1.0).abs() < 0.05, "{per_time:?}");
        }
        // ~799 interior sites, valleys at density 1/4
        assert!((per_time[0] / 799.0 - 0.25).abs() < 0.02, "{}", per_time[0] / 799.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn slope_invariant_preserved(seed in 0u64..1000, p in 0.0f64..0.5, t in 0.0f64..6.0) {
            let rates = AsepRates::new(p, 1.0 - p).unwrap();
            let mut rng = stream(seed, 0, StreamPurpose::Test);
            let s = kmc_evolve(init_step(step_window(&rates, t)).unwrap(), &rates, t, &mut rng).unwrap();
            prop_assert!(s.slopes_valid());
            prop_assert!((s.time - t).abs() < 1e-12);
        }
    }
}
