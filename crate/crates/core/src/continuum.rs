//! Coding pairs `(e, z)` sampled on the uniform grid `t_i = i / N` of
//! `[0, 1]`: the tree pseudo-metric coded by `e`, the re-rooting transform at
//! the minimum of `z`, the two equivalence relations, simple geodesics, the
//! upper bound for the map metric and the occupation measure.
//!
//! Grid points are addressed by their index `i ∈ 0..=N`; [`CodingPair::index_of`]
//! converts a time in `[0, 1]` when it lies on the grid.

use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::mobile::ContourEncoding;
use crate::rmq::RangeMin;
use crate::{Error, Result};

/// Scale factor for the contour function of a p-mobile, `½ √(p / (p - 1))`.
pub fn lambda_p(p: usize) -> f64 {
    0.5 * (p as f64 / (p as f64 - 1.0)).sqrt()
}

/// Scale factor for the labels of a p-mobile, `(9 / (4 p (p - 1)))^{1/4}`.
pub fn kappa_p(p: usize) -> f64 {
    (9.0 / (4.0 * p as f64 * (p as f64 - 1.0))).powf(0.25)
}

/// Which function of the pair a tree quantity refers to.
/// A branch counts towards [`CodingPair::class_runs`] only if it reaches
/// this many tolerances away from the point.
pub const BRANCH_REACH: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    E,
    Z,
}

#[derive(Debug)]
pub struct CodingPair {
    e: Vec<f64>,
    z: Vec<f64>,
    rerooted: bool,
    source: String,
    seed: Option<u64>,
    constants: Option<(f64, f64)>,
    e_min: OnceLock<RangeMin<f64>>,
    z_min: OnceLock<RangeMin<f64>>,
}

impl Clone for CodingPair {
    fn clone(&self) -> Self {
        CodingPair {
            e: self.e.clone(),
            z: self.z.clone(),
            rerooted: self.rerooted,
            source: self.source.clone(),
            seed: self.seed,
            constants: self.constants,
            e_min: OnceLock::new(),
            z_min: OnceLock::new(),
        }
    }
}

/// Absolute slack for deciding equalities between reals on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance(f64);

impl Tolerance {
    pub fn new(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps.is_finite() {
            Ok(Tolerance(eps))
        } else {
            Err(Error::Parameter(format!("tolerance must be positive, got {eps}")))
        }
    }

    /// Three times the largest step of `z` between adjacent grid points.
    pub fn default_for(pair: &CodingPair) -> Self {
        let step = pair.z.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        Tolerance(if step > 0.0 { 3.0 * step } else { f64::EPSILON })
    }

    /// The largest step of `e`, the grid resolution of the tree relation `∼`.
    pub fn tree_default_for(pair: &CodingPair) -> Self {
        let step = pair.e.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        Tolerance(if step > 0.0 { step } else { f64::EPSILON })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl CodingPair {
    /// Checks the excursion conditions on `e` and, for a re-rooted pair,
    /// that `z` vanishes at both ends and is non-negative.
    pub fn new(e: Vec<f64>, z: Vec<f64>, rerooted: bool) -> Result<Self> {
        if e.len() < 3 || e.len() != z.len() {
            return Err(Error::Parameter(format!(
                "need two sequences of equal length >= 3, got {} and {}",
                e.len(),
                z.len()
            )));
        }
        if e[0] != 0.0 || *e.last().unwrap() != 0.0 || e.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::Parameter("e must be a non-negative excursion from 0 to 0".into()));
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("z must be finite".into()));
        }
        let pair = CodingPair {
            e,
            z,
            rerooted,
            source: "manual".into(),
            seed: None,
            constants: None,
            e_min: OnceLock::new(),
            z_min: OnceLock::new(),
        };
        if rerooted {
            let tol = Tolerance::default_for(&pair).value();
            if pair.z[0] != 0.0 || pair.z[pair.steps()] != 0.0 || pair.z.iter().any(|&x| x <= -tol) {
                return Err(Error::Parameter("a re-rooted z must vanish at 0 and 1 and stay non-negative".into()));
            }
        }
        Ok(pair)
    }

    /// Records where the pair came from; written into the CSV header.
    pub fn with_metadata(mut self, source: &str, seed: Option<u64>, constants: Option<(f64, f64)>) -> Self {
        self.source = source.to_string();
        self.seed = seed;
        self.constants = constants;
        self
    }

    /// Number of grid steps `N`.
    pub fn steps(&self) -> usize {
        self.e.len() - 1
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn is_rerooted(&self) -> bool {
        self.rerooted
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.steps() as f64
    }

    /// Grid index of time `t`, which must be a multiple of `1/N` up to
    /// rounding error.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t * self.steps() as f64;
        let i = x.round();
        if !(0.0..=1.0).contains(&t) || (x - i).abs() > 1e-9 * self.steps() as f64 {
            return Err(Error::OffGrid(t));
        }
        Ok(i as usize)
    }

    fn check(&self, i: usize) -> Result<()> {
        if i > self.steps() {
            return Err(Error::IndexOutOfRange {
                index: i,
                max: self.steps(),
            });
        }
        Ok(())
    }

    fn values(&self, c: Component) -> &[f64] {
        match c {
            Component::E => &self.e,
            Component::Z => &self.z,
        }
    }

    fn range_min(&self, c: Component) -> &RangeMin<f64> {
        match c {
            Component::E => self.e_min.get_or_init(|| RangeMin::new(&self.e)),
            Component::Z => self.z_min.get_or_init(|| RangeMin::new(&self.z)),
        }
    }

    /// Minimum of `g` over `[s ∧ t, s ∨ t]`.
    pub fn m_g(&self, c: Component, s: usize, t: usize) -> Result<f64> {
        self.check(s)?;
        self.check(t)?;
        Ok(self.range_min(c).min(s, t))
    }

    /// `g(s) + g(t) - 2 m_g(s, t)`.
    pub fn d_g(&self, c: Component, s: usize, t: usize) -> Result<f64> {
        let m = self.m_g(c, s, t)?;
        let g = self.values(c);
        Ok(g[s] + g[t] - 2.0 * m)
    }

    /// Tree distance coded by `e`.
    pub fn d_e(&self, s: usize, t: usize) -> Result<f64> {
        self.d_g(Component::E, s, t)
    }

    /// Re-roots the pair at the first grid point where `z` is minimal.
    pub fn reroot_pair(&self) -> Result<CodingPair> {
        if self.rerooted {
            return Err(Error::Parameter("pair is already re-rooted".into()));
        }
        let n = self.steps();
        let s_star = argmin_first(&self.z);
        let rm = self.range_min(Component::E);
        let mut e = Vec::with_capacity(n + 1);
        let mut z = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let j = cyclic_add(s_star, i, n);
            e.push((self.e[s_star] + self.e[j] - 2.0 * rm.min(s_star, j)).max(0.0));
            z.push(self.z[j] - self.z[s_star]);
        }
        e[0] = 0.0;
        e[n] = 0.0;
        z[0] = 0.0;
        z[n] = 0.0;
        let mut out = CodingPair::new(e, z, true)?;
        out.source = format!("{} (re-rooted at index {s_star})", self.source);
        out.seed = self.seed;
        out.constants = self.constants;
        Ok(out)
    }

    /// `s ∼ t`: the tree distance coded by `e` is within `tol` of zero.
    pub fn sim_relation(&self, s: usize, t: usize, tol: f64) -> Result<bool> {
        Ok(self.d_e(s, t)? <= tol)
    }

    /// `s ≈ t`: `z` takes (up to `tol`) equal values at `s` and `t` and does
    /// not go lower in between.
    pub fn approx_relation(&self, s: usize, t: usize, tol: f64) -> Result<bool> {
        let m = self.m_g(Component::Z, s, t)?;
        let (zs, zt) = (self.z[s], self.z[t]);
        Ok((zs - zt).abs() <= tol && m >= zs.min(zt) - tol)
    }

    /// Simple geodesic from `s` towards the root, evaluated at level `t`:
    /// the last grid point `r <= s` with `z_r <= t`, or with `dual` the first
    /// grid point `r >= s` with `z_r <= t`.
    pub fn simple_geodesic(&self, s: usize, t: f64, dual: bool) -> Result<usize> {
        self.check(s)?;
        if !(t >= 0.0 && t <= self.z[s]) {
            return Err(Error::Parameter(format!("level {t} outside [0, z_s = {}]", self.z[s])));
        }
        let hit = if dual {
            (s..=self.steps()).find(|&r| self.z[r] <= t)
        } else {
            (0..=s).rev().find(|&r| self.z[r] <= t)
        };
        // z vanishes at both ends of a re-rooted pair, so a hit always exists
        hit.ok_or_else(|| Error::Parameter(format!("z never drops to {t}")))
    }

    /// `z_s + z_t - 2 min_{[s ∧ t, s ∨ t]} z`, an upper bound for the map
    /// distance between the points coded by `s` and `t`.
    pub fn d_upper(&self, s: usize, t: usize) -> Result<f64> {
        self.d_g(Component::Z, s, t)
    }

    /// Fraction of grid points with `z <= eps`.
    pub fn occupation(&self, eps: f64) -> f64 {
        let count = self.z.iter().filter(|&&x| x <= eps).count();
        count as f64 / self.z.len() as f64
    }

    /// Number of branches of the tree at the point coded by `s`, read off the
    /// grid: the contour times `t` with `s ∼ t` (up to `tol`) split the
    /// circle `[0, N)` into gaps, each spent in one component of the tree
    /// minus the `tol`-ball around the point. Gaps that get farther than
    /// [`BRANCH_REACH`]` * tol` from the point are counted, so that the many
    /// small subtrees hanging inside the ball are not; at least 1 is
    /// returned. With `tol = 0` on a discrete tree this is the number of
    /// corners.
    pub fn class_runs(&self, s: usize, tol: f64) -> Result<usize> {
        self.check(s)?;
        let n = self.steps();
        let s = s % n;
        let (mut branches, mut gap_max) = (0, None::<f64>);
        for i in 1..=n {
            let t = (s + i) % n;
            let d = self.d_e(s, t)?;
            if d <= tol {
                if gap_max.take().is_some_and(|m| m > BRANCH_REACH * tol) {
                    branches += 1;
                }
            } else {
                gap_max = Some(gap_max.map_or(d, |m| m.max(d)));
            }
        }
        Ok(branches.max(1))
    }

    /// Multiplicity of the tree point coded by `s`: [`class_runs`](Self::class_runs)
    /// capped at 3.
    pub fn multiplicity(&self, s: usize, tol: f64) -> Result<u8> {
        Ok(self.class_runs(s, tol)?.min(3) as u8)
    }

    /// CSV with a comment header line and columns `t,e,z`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into());
        let (lambda, kappa) = match self.constants {
            Some((l, k)) => (l.to_string(), k.to_string()),
            None => ("none".into(), "none".into()),
        };
        let _ = writeln!(
            out,
            "# N={}, source={}, seed={seed}, rerooted={}, lambda_p={lambda}, kappa_p={kappa}",
            self.steps(),
            self.source,
            self.rerooted
        );
        out.push_str("t,e,z\n");
        for i in 0..=self.steps() {
            let _ = writeln!(out, "{},{},{}", self.time(i), self.e[i], self.z[i]);
        }
        out
    }
}

fn argmin_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

/// Grid form of cyclic addition on `[0, 1]`: `s + i` if it stays at most `N`,
/// otherwise `s + i - N`.
pub fn cyclic_add(s: usize, i: usize, n: usize) -> usize {
    if s + i <= n {
        s + i
    } else {
        s + i - n
    }
}

/// Rescaled contour pair of a mobile: `N = pn`, `e_i = λ_p n^{-1/2} C_i` and
/// `z_i = κ_p n^{-1/4} (Λ_i - 1)`. Mobiles are rooted at a vertex of label 1,
/// so the pair is already in re-rooted form.
pub fn from_mobile(enc: &ContourEncoding) -> Result<CodingPair> {
    enc.validate()?;
    let (lambda, kappa) = (lambda_p(enc.p), kappa_p(enc.p));
    let n = enc.n as f64;
    let es = lambda / n.sqrt();
    let zs = kappa / n.powf(0.25);
    let e = enc.heights.iter().map(|&c| es * c as f64).collect();
    let z = enc.labels.iter().map(|&l| zs * (l - 1) as f64).collect();
    Ok(CodingPair::new(e, z, true)?.with_metadata(
        &format!("mobile p={} n={}", enc.p, enc.n),
        None,
        Some((lambda, kappa)),
    ))
}

/// Normalized Brownian excursion on `N + 1` grid points: a Gaussian random
/// walk turned into a bridge and cyclically shifted to start at its minimum.
pub fn sample_excursion<R: Rng + ?Sized>(steps: usize, rng: &mut R) -> Vec<f64> {
    let sd = (1.0 / steps as f64).sqrt();
    let mut walk = Vec::with_capacity(steps + 1);
    walk.push(0.0);
    for _ in 0..steps {
        let x: f64 = rng.sample(StandardNormal);
        walk.push(walk.last().unwrap() + sd * x);
    }
    let end = walk[steps];
    let bridge: Vec<f64> = walk
        .iter()
        .enumerate()
        .map(|(i, &w)| w - end * i as f64 / steps as f64)
        .collect();
    let m = argmin_first(&bridge[..steps]);
    let mut e: Vec<f64> = (0..=steps).map(|i| bridge[(m + i) % steps] - bridge[m]).collect();
    e[0] = 0.0;
    e[steps] = 0.0;
    e
}

/// Brownian snake head on the grid over a freshly sampled excursion.
///
/// The ancestral label path is kept as a stack of knots `(height, value)`.
/// Moving from `i` to `i + 1` truncates it at `m = min(e_i, e_{i+1})`, where
/// the value is drawn from the Brownian bridge between the surrounding knots,
/// then extends it by a Gaussian increment of variance `e_{i+1} - m`. This
/// makes `Cov(z_i, z_j) = min_{[i, j]} e` exactly.
pub fn sample_snake_grid<R: Rng + ?Sized>(steps: usize, rng: &mut R) -> Result<CodingPair> {
    if steps < 2 {
        return Err(Error::Parameter(format!("need at least 2 grid steps, got {steps}")));
    }
    let e = sample_excursion(steps, rng);
    let z = snake_over(&e, rng);
    Ok(CodingPair::new(e, z, false)?.with_metadata("snake", None, None))
}

/// Snake head values over a given lifetime sequence `e` (with `e_0 = 0`).
pub fn snake_over<R: Rng + ?Sized>(e: &[f64], rng: &mut R) -> Vec<f64> {
    let mut knots: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut z = Vec::with_capacity(e.len());
    z.push(0.0);
    for i in 0..e.len() - 1 {
        let m = e[i].min(e[i + 1]);
        let mut popped = None;
        while knots.len() > 1 && knots.last().unwrap().0 > m {
            popped = knots.pop();
        }
        let (h_a, v_a) = *knots.last().unwrap();
        let v = if h_a == m {
            v_a
        } else {
            let (h_b, v_b) = popped.expect("a knot above the truncation height");
            let w = (m - h_a) / (h_b - h_a);
            let var = (m - h_a) * (h_b - m) / (h_b - h_a);
            let x: f64 = rng.sample(StandardNormal);
            let v = v_a + w * (v_b - v_a) + var.max(0.0).sqrt() * x;
            knots.push((m, v));
            v
        };
        let rise = e[i + 1] - m;
        let next = if rise > 0.0 {
            let x: f64 = rng.sample(StandardNormal);
            let next = v + rise.sqrt() * x;
            knots.push((e[i + 1], next));
            next
        } else {
            v
        };
        z.push(next);
    }
    z
}
