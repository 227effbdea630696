//! Seeded Monte Carlo experiments on random 2p-angulations.
//!
//! Every experiment takes an [`ExperimentConfig`] and returns a
//! [`SampleTable`] of `(experiment, p, n, replica, statistic, value)` rows.
//! Replica `r` at size `n` draws from its own stream
//! [`replica_stream`](crate::rng::replica_stream)`(seed, n, r)`, so the table
//! is a deterministic function of the configuration, whatever the thread
//! count. Per-size summaries have an empty replica cell; the constants
//! `lambda_p` and `kappa_p` are recorded with empty size and replica cells.
//!
//! Dimensionless thresholds are converted to distances with
//! [`abs_threshold`], `⌈x n^{1/4}⌉`.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bdgmap::{build_map_from_encoding, PlanarMap, ROOT_VERTEX};
use crate::continuum::{from_mobile, kappa_p, lambda_p};
use crate::geodesy::{bfs, spread_at_least, BfsScratch, Geodesy};
use crate::mobile::{contour, sample_mobile, ContourEncoding, SamplerMode};
use crate::rng::{replica_stream, Stream};
use crate::stats;
use crate::{Error, Result};

/// Environment variable that overrides the configured master seed.
pub const SEED_ENV: &str = "MOBILEMAP_SEED";

pub const EXPERIMENTS: [&str; 8] = [
    "radius",
    "two_point",
    "ball_volume",
    "uniqueness",
    "multiplicity",
    "confluence",
    "reroot_invariance",
    "occupation",
];

/// Experiment parameters. JSON keys mirror the command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub p: usize,
    #[serde(rename = "n")]
    pub ns: Vec<usize>,
    #[serde(rename = "reps")]
    pub replicas: usize,
    pub seed: Option<u64>,
    pub delta: f64,
    pub alpha: f64,
    pub chi: f64,
    pub beta: f64,
    pub mode: Option<SamplerMode>,
    pub out: Option<String>,
    /// Query vertices (or ball centres) per map.
    pub queries: usize,
    /// Ball-volume radii as multiples of `n^{1/4}`.
    pub radii: Vec<f64>,
    /// Occupation levels `2^{-k}` times the median maximal label height.
    pub eps_exponents: Vec<i32>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "radius".into(),
            p: 2,
            ns: vec![1000],
            replicas: 10,
            seed: None,
            delta: 0.3,
            alpha: 0.1,
            chi: 1.0,
            beta: 0.1,
            mode: None,
            out: None,
            queries: 50,
            radii: vec![0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.2],
            eps_exponents: vec![2, 3, 4, 5],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return bad(format!("unknown experiment {:?}; known: {}", self.experiment, EXPERIMENTS.join(", ")));
        }
        if self.replicas < 1 {
            return bad("reps must be at least 1".into());
        }
        if self.ns.is_empty() || self.ns.contains(&0) {
            return bad("n must be a non-empty list of positive sizes".into());
        }
        if self.p < 2 || self.p > crate::mobile::MAX_P {
            return bad(format!("p must lie in 2..={}", crate::mobile::MAX_P));
        }
        for (name, x) in [("delta", self.delta), ("alpha", self.alpha), ("chi", self.chi), ("beta", self.beta)] {
            if !(x > 0.0 && x.is_finite()) {
                return bad(format!("{name} must be positive, got {x}"));
            }
        }
        if self.queries < 1 {
            return bad("queries must be at least 1".into());
        }
        if self.experiment == "confluence" && self.chi <= self.beta {
            return bad(format!("confluence needs chi > beta, got chi = {}, beta = {}", self.chi, self.beta));
        }
        Ok(())
    }

    /// The configured seed, unless [`SEED_ENV`] is set.
    pub fn resolve_seed(&self) -> Result<Option<u64>> {
        match std::env::var(SEED_ENV) {
            Ok(s) => s
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Error::Parameter(format!("{SEED_ENV} must be an unsigned integer, got {s:?}"))),
            Err(_) => Ok(self.seed),
        }
    }

    fn seed_or_zero(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn mode_for(&self, n: usize) -> SamplerMode {
        self.mode.unwrap_or_else(|| SamplerMode::default_for(n))
    }
}

/// `⌈x n^{1/4}⌉`, with a relative slack of `1e-9` so that products that are
/// integers in exact arithmetic are not pushed up by rounding.
pub fn abs_threshold(x: f64, n: usize) -> u32 {
    let v = x * (n as f64).powf(0.25);
    (v - 1e-9 * v.abs().max(1.0)).ceil().max(0.0) as u32
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub p: usize,
    pub n: Option<usize>,
    pub replica: Option<usize>,
    pub statistic: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SampleTable {
    pub rows: Vec<Row>,
}

impl SampleTable {
    pub const CSV_HEADER: &'static str = "experiment,p,n,replica,statistic,value";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        let cell = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            let value = r.value.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{},{}", r.experiment, r.p, cell(r.n), cell(r.replica), r.statistic, value);
        }
        out
    }

    /// Values of `statistic` over the replicas at size `n`, skipping missing ones.
    pub fn values(&self, n: usize, statistic: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.n == Some(n) && r.replica.is_some() && r.statistic == statistic)
            .filter_map(|r| r.value)
            .collect()
    }

    /// Number of replica rows of `statistic` at size `n`, missing ones included.
    pub fn count(&self, n: usize, statistic: &str) -> usize {
        self.rows
            .iter()
            .filter(|r| r.n == Some(n) && r.replica.is_some() && r.statistic == statistic)
            .count()
    }

    /// A per-size summary value.
    pub fn summary(&self, n: usize, statistic: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n == Some(n) && r.replica.is_none() && r.statistic == statistic)
            .and_then(|r| r.value)
    }
}

type Stats = Vec<(String, Option<f64>)>;

fn stat(name: impl Into<String>, v: f64) -> (String, Option<f64>) {
    (name.into(), Some(v))
}

/// One sampled map with everything the statistics need.
struct Sample {
    enc: ContourEncoding,
    map: PlanarMap,
}

fn sample(cfg: &ExperimentConfig, n: usize, rng: &mut Stream) -> Result<Sample> {
    let m = sample_mobile(n, cfg.p, rng, cfg.mode_for(n))?;
    let enc = contour(&m);
    let map = build_map_from_encoding(&enc);
    Ok(Sample { enc, map })
}

fn scale(cfg: &ExperimentConfig, n: usize) -> f64 {
    kappa_p(cfg.p) / (n as f64).powf(0.25)
}

/// Runs the experiment named in `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SampleTable> {
    cfg.validate()?;
    match cfg.experiment.as_str() {
        "radius" => radius_experiment(cfg),
        "two_point" => two_point_experiment(cfg),
        "ball_volume" => ball_volume_experiment(cfg),
        "uniqueness" => uniqueness_experiment(cfg),
        "multiplicity" => multiplicity_experiment(cfg),
        "confluence" => confluence_experiment(cfg),
        "reroot_invariance" => reroot_invariance_experiment(cfg),
        "occupation" => occupation_experiment(cfg),
        _ => unreachable!("validated above"),
    }
}

/// Runs `per_replica` for every `(n, replica)` and assembles the table with
/// constant rows first, then each size's replica rows followed by the
/// summaries computed from them.
fn run_replicas<F, S>(cfg: &ExperimentConfig, per_replica: F, summarize: S) -> Result<SampleTable>
where
    F: Fn(usize, &mut Stream) -> Result<Stats> + Sync,
    S: Fn(usize, &SampleTable) -> Stats,
{
    cfg.validate()?;
    let seed = cfg.seed_or_zero();
    let jobs: Vec<(usize, usize)> = cfg
        .ns
        .iter()
        .flat_map(|&n| (0..cfg.replicas).map(move |r| (n, r)))
        .collect();
    let results: Vec<Result<Stats>> = jobs
        .par_iter()
        .map(|&(n, r)| per_replica(n, &mut replica_stream(seed, n, r)))
        .collect();

    let name = cfg.experiment.clone();
    let mut table = SampleTable::default();
    for (statistic, value) in [("lambda_p", lambda_p(cfg.p)), ("kappa_p", kappa_p(cfg.p))] {
        table.rows.push(Row {
            experiment: name.clone(),
            p: cfg.p,
            n: None,
            replica: None,
            statistic: statistic.into(),
            value: Some(value),
        });
    }
    let mut results = results.into_iter();
    for &n in &cfg.ns {
        let mut block = SampleTable::default();
        for r in 0..cfg.replicas {
            for (statistic, value) in results.next().expect("one result per job")? {
                block.rows.push(Row {
                    experiment: name.clone(),
                    p: cfg.p,
                    n: Some(n),
                    replica: Some(r),
                    statistic,
                    value,
                });
            }
        }
        for (statistic, value) in summarize(n, &block) {
            block.rows.push(Row {
                experiment: name.clone(),
                p: cfg.p,
                n: Some(n),
                replica: None,
                statistic,
                value,
            });
        }
        table.rows.extend(block.rows);
    }
    Ok(table)
}

fn opt(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn mean_and_se(values: &[f64], prefix: &str) -> Stats {
    if values.is_empty() {
        return vec![(format!("mean_{prefix}"), None), (format!("se_{prefix}"), None)];
    }
    vec![
        (format!("mean_{prefix}"), Some(stats::mean(values))),
        (format!("se_{prefix}"), opt(stats::std_error(values))),
    ]
}

/// Rescaled radius `κ_p n^{-1/4} max_v d(∂, v)` per replica.
pub fn radius_experiment(cfg: &ExperimentConfig) -> Result<SampleTable> {
    run_replicas(
        cfg,
        |n, rng| {
            let m = sample_mobile(n, cfg.p, rng, cfg.mode_for(n))?;
            let r = *m.labels().iter().max().expect("non-empty") as f64;
            Ok(vec![stat("radius", r), stat("radius_rescaled", scale(cfg, n) * r)])
        },
        |n, t| {
            let v = t.values(n, "radius_rescaled");
            vec![stat("median_radius_rescaled", stats::median(&v))]
        },
    )
}

/// Rescaled distance from ∂ to a uniform white vertex per replica. The last
/// summary row compares each size with the next one by a KS statistic.
pub fn two_point_experiment(cfg: &ExperimentConfig) -> Result<SampleTable> {
    let mut table = run_replicas(
        cfg,
        |n, rng| {
            let m = sample_mobile(n, cfg.p, rng, cfg.mode_for(n))?;
            let v = rng.gen_range(0..m.labels().len());
            let d = m.labels()[v] as f64;
            Ok(vec![stat("distance", d), stat("distance_rescaled", scale(cfg, n) * d)])
        },
        |n, t| {
            let v = t.values(n, "distance_rescaled");
            vec![stat("median_distance_rescaled", stats::median(&v))]
        },
    )?;
    for w in cfg.ns.windows(2) {
        let ks = stats::ks_statistic(&table.values(w[0], "distance_rescaled"), &table.values(w[1], "distance_rescaled"));
        let pos = table.rows.iter().rposition(|r| r.n == Some(w[0])).expect("rows for n") + 1;
        table.rows.insert(
            pos,
            Row {
                experiment: cfg.experiment.clone(),
                p: cfg.p,
                n: Some(w[0]),
                replica: None,
                statistic: format!("ks_vs_n{}", w[1]),
                value: Some(ks),
            },
        );
    }
    Ok(table)
}

/// Integer radii `⌈c n^{1/4}⌉` for the configured coefficients, deduplicated.
pub fn ball_radii(cfg: &ExperimentConfig, n: usize) -> Vec<u32> {
    let mut radii: Vec<u32> = cfg.radii.iter().map(|&c| abs_threshold(c, n).max(1)).collect();
    radii.sort_unstable();
    radii.dedup();
    radii
}

/// For `queries` uniform centres of one map per replica: normalized ball
/// volumes at the configured radii and the log-log slope of volume against
/// radius. The radii must be at least 3 distinct values spanning a decade.
pub fn ball_volume_experiment(cfg: &ExperimentConfig) -> Result<SampleTable> {
    for &n in &cfg.ns {
        let radii = ball_radii(cfg, n);
        if radii.len() < 3 {
            return Err(Error::DegenerateFit(format!(
                "n = {n} gives only {} distinct radii {radii:?}; need at least 3",
                radii.len()
            )));
        }
        if radii[radii.len() - 1] < 10 * radii[0] {
            return Err(Error::Parameter(format!(
                "n = {n} gives radii {radii:?}, which span less than a decade"
            )));
        }
    }
    run_replicas(
        cfg,
        |n, rng| {
            let s = sample(cfg, n, rng)?;
            let radii = ball_radii(cfg, n);
            let xs: Vec<f64> = radii.iter().map(|&r| r as f64).collect();
            let total = s.map.vertex_count() as f64;
            let mut scratch = BfsScratch::new(s.map.vertex_count());
            let mut out = Vec::new();
            let mut slopes = Vec::with_capacity(cfg.queries);
            for c in 0..cfg.queries {
                let x = rng.gen_range(0..s.map.vertex_count());
                let sizes = scratch.ball_sizes(&s.map, x, &radii);
                let vols: Vec<f64> = sizes.iter().map(|&v| v as f64 / total).collect();
                for (r, v) in radii.iter().zip(&vols) {
                    out.push(stat(format!("c{c}:vol@{r}"), *v));
                }
                let slope = stats::log_log_slope(&xs, &vols)?;
                out.push(stat(format!("c{c}:slope"), slope));
                slopes.push(slope);
            }
            out.push(stat("mean_slope", stats::mean(&slopes)));
            Ok(out)
        },
        |n, t| {
            let v = t.values(n, "mean_slope");
            let mut s = mean_and_se(&v, "slope");
            s.insert(0, stat("radii", ball_radii(cfg, n).len() as f64));
            s
        },
    )
}

/// Fraction of `queries` uniform vertices whose geodesics to ∂ have spread
/// at least `⌈δ n^{1/4}⌉`.
pub fn uniqueness_experiment(cfg: &ExperimentConfig) -> Result<SampleTable> {
    run_replicas(
        cfg,
        |n, rng| {
            let s = sample(cfg, n, rng)?;
            let threshold = abs_threshold(cfg.delta, n);
            let from_root = bfs(&s.map, ROOT_VERTEX as usize);
            let mut scratch = BfsScratch::new(s.map.vertex_count());
            let mut hits = 0;
            for _ in 0..cfg.queries {
                let a = rng.gen_range(0..s.map.vertex_count());
                let from_a = bfs(&s.map, a);
                if spread_at_least(&s.map, &mut scratch, a, &from_root, &from_a, threshold) {
                    hits += 1;
                }
            }
            Ok(vec![stat("fraction", hits as f64 / cfg.queries as f64)])
        },
        |n, t| {
            let mut s = vec![stat("delta_abs", abs_threshold(cfg.delta, n) as f64)];
            s.extend(mean_and_se(&t.values(n, "fraction"), "fraction"));
            s
        },
    )
}

/// Per replica: (i) the largest corner multiplicity at `⌈δ n^{1/4}⌉` over
/// `queries` uniform white vertices; (ii) whether some triplet at
/// `⌈α n^{1/4}⌉` yields three corner geodesics pairwise `⌈δ n^{1/4}⌉` apart.
pub fn multiplicity_experiment(cfg: &ExperimentConfig) -> Result<SampleTable> {
    run_replicas(
        cfg,
        |n, rng| {
            let s = sample(cfg, n, rng)?;
            let delta_abs = abs_threshold(cfg.delta, n);
            let alpha_abs = abs_threshold(cfg.alpha, n).max(1);
            let geo = Geodesy::new(&s.enc, &s.map);
            let mut scratch = BfsScratch::new(s.map.vertex_count());
            let mut max_mult = 0;
            for _ in 0..cfg.queries {
                let a = rng.gen_range(1..s.map.vertex_count());
                max_mult = max_mult.max(geo.corner_multiplicity(&mut scratch, a, delta_abs)?);
            }
            let three = geo.three_geodesics_reaching(alpha_abs, delta_abs)?.is_some();
            Ok(vec![
                stat("max_corner_multiplicity", max_mult as f64),
                stat("three_geodesics", if three { 1.0 } else { 0.0 }),
            ])
        },
        |n, t| {
            let mult = t.values(n, "max_corner_multiplicity");
            let le3 = mult.iter().filter(|&&m| m <= 3.0).count() as f64 / mult.len() as f64;
            let mut s = vec![
                stat("delta_abs", abs_threshold(cfg.delta, n) as f64),
                stat("alpha_abs", abs_threshold(cfg.alpha, n).max(1) as f64),
                stat("fraction_mult_le_3", le3),
            ];
            s.extend(mean_and_se(&t.values(n, "three_geodesics"), "three_geodesics"));
            s
        },
    )
}

/// Prefix divergence over `⌈β n^{1/4}⌉` steps of all corner geodesics of
/// length at least `⌈χ n^{1/4}⌉`, raw and rescaled; missing when no corner
/// is that far from ∂.
pub fn confluence_experiment(cfg: &ExperimentConfig) -> Result<SampleTable> {
    run_replicas(
        cfg,
        |n, rng| {
            let s = sample(cfg, n, rng)?;
            let chi_abs = abs_threshold(cfg.chi, n);
            let beta_abs = abs_threshold(cfg.beta, n).max(1);
            let geo = Geodesy::new(&s.enc, &s.map);
            let mut scratch = BfsScratch::new(s.map.vertex_count());
            let div = geo.confluence(&mut scratch, chi_abs.max(beta_abs + 1), beta_abs)?;
            Ok(vec![
                ("divergence".into(), div.map(|d| d as f64)),
                ("divergence_rescaled".into(), div.map(|d| scale(cfg, n) * d as f64)),
            ])
        },
        |n, t| {
            let delta_abs = abs_threshold(cfg.delta, n) as f64;
            let v = t.values(n, "divergence");
            let total = t.count(n, "divergence");
            let within = v.iter().filter(|&&d| d <= delta_abs).count() as f64;
            vec![
                stat("chi_abs", abs_threshold(cfg.chi, n) as f64),
                stat("beta_abs", abs_threshold(cfg.beta, n).max(1) as f64),
                stat("delta_abs", delta_abs),
                stat("missing", (total - v.len()) as f64),
                stat("fraction_within_delta", within / total as f64),
            ]
        },
    )
}

/// Radius seen from the root vertex of one map against the radius seen from
/// the tail of a uniform oriented edge of an independent map, summarized by
/// a two-sample KS test per size.
pub fn reroot_invariance_experiment(cfg: &ExperimentConfig) -> Result<SampleTable> {
    run_replicas(
        cfg,
        |n, rng| {
            let a = sample(cfg, n, rng)?;
            let original = bfs(&a.map, a.map.root_vertex() as usize).eccentricity();
            let b = sample(cfg, n, rng)?;
            let k = rng.gen_range(0..2 * b.map.edge_count());
            let e = b.map.oriented_edges().nth(k).expect("k < 2|E|");
            let moved = b.map.reroot(e)?;
            let rerooted = bfs(&moved, moved.root_vertex() as usize).eccentricity();
            Ok(vec![stat("radius_original", original as f64), stat("radius_rerooted", rerooted as f64)])
        },
        |n, t| {
            let a = t.values(n, "radius_original");
            let b = t.values(n, "radius_rerooted");
            let d = stats::ks_statistic(&a, &b);
            vec![stat("ks_statistic", d), stat("ks_p_value", stats::ks_p_value(d, a.len(), b.len()))]
        },
    )
}

/// Occupation measure of `[0, ε]` under the rescaled label process of each
/// replica, for `ε = 2^{-k}` times the median over replicas of `max z`, and
/// the log-log slope of the replica mean against `ε`. Each map is drawn
/// twice from the same stream: once for the median, once for the measure.
pub fn occupation_experiment(cfg: &ExperimentConfig) -> Result<SampleTable> {
    cfg.validate()?;
    let max_z = |n: usize, rng: &mut Stream| -> Result<(crate::continuum::CodingPair, f64)> {
        let m = sample_mobile(n, cfg.p, rng, cfg.mode_for(n))?;
        let pair = from_mobile(&contour(&m))?;
        let top = pair.z().iter().cloned().fold(0.0, f64::max);
        Ok((pair, top))
    };
    let mut medians = Vec::new();
    for &n in &cfg.ns {
        let seed = cfg.seed_or_zero();
        let tops: Vec<f64> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| max_z(n, &mut replica_stream(seed, n, r)).map(|x| x.1))
            .collect::<Result<_>>()?;
        medians.push((n, stats::median(&tops)));
    }
    let median_of = |n: usize| medians.iter().find(|m| m.0 == n).expect("median per n").1;
    let eps_of = |n: usize, k: i32| median_of(n) * 2f64.powi(-k);
    run_replicas(
        cfg,
        |n, rng| {
            let (pair, top) = max_z(n, rng)?;
            let mut out = vec![stat("max_z", top)];
            for &k in &cfg.eps_exponents {
                out.push(stat(format!("occupation@2^-{k}"), pair.occupation(eps_of(n, k))));
            }
            Ok(out)
        },
        |n, t| {
            let mut s = vec![stat("median_max_z", median_of(n))];
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for &k in &cfg.eps_exponents {
                let mean = stats::mean(&t.values(n, &format!("occupation@2^-{k}")));
                s.push(stat(format!("mean_occupation@2^-{k}"), mean));
                xs.push(eps_of(n, k));
                ys.push(mean);
            }
            s.push(("slope".into(), stats::log_log_slope(&xs, &ys).ok()));
            s
        },
    )
}

/// A finite metric space given by its distance oracle.
pub trait FiniteMetric {
    fn size(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;
}

/// A finite metric stored as a full matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMetric(pub Vec<Vec<f64>>);

impl FiniteMetric for DenseMetric {
    fn size(&self) -> usize {
        self.0.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }
}

/// Graph metric of a map, by one BFS per vertex.
pub fn map_metric(map: &PlanarMap) -> DenseMetric {
    DenseMetric(
        (0..map.vertex_count())
            .map(|v| bfs(map, v).dist.iter().map(|&d| d as f64).collect())
            .collect(),
    )
}

/// `sup |d1(x, y) - d2(x', y')|` over pairs `(x, x'), (y, y')` of the
/// correspondence, which must cover every point of both spaces.
pub fn distortion(d1: &dyn FiniteMetric, d2: &dyn FiniteMetric, corr: &[(usize, usize)]) -> Result<f64> {
    let mut left = vec![false; d1.size()];
    let mut right = vec![false; d2.size()];
    for &(x, y) in corr {
        if x >= d1.size() || y >= d2.size() {
            return Err(Error::NotCorrespondence(format!("pair ({x}, {y}) is out of range")));
        }
        left[x] = true;
        right[y] = true;
    }
    if let Some(x) = left.iter().position(|c| !c) {
        return Err(Error::NotCorrespondence(format!("point {x} of the first space is uncovered")));
    }
    if let Some(y) = right.iter().position(|c| !c) {
        return Err(Error::NotCorrespondence(format!("point {y} of the second space is uncovered")));
    }
    let mut best = 0.0f64;
    for &(x, xp) in corr {
        for &(y, yp) in corr {
            best = best.max((d1.dist(x, y) - d2.dist(xp, yp)).abs());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdgmap::build_map;
    use crate::fixtures::cycle4;
    use proptest::prelude::*;

    fn cfg(experiment: &str, ns: Vec<usize>, replicas: usize) -> ExperimentConfig {
        ExperimentConfig {
            experiment: experiment.into(),
            ns,
            replicas,
            seed: Some(11),
            queries: 5,
            ..Default::default()
        }
    }

    #[test]
    fn thresholds_use_ceiling() {
        assert_eq!(abs_threshold(0.3, 10_000), 3);
        assert_eq!(abs_threshold(0.31, 10_000), 4);
        assert_eq!(abs_threshold(0.1, 10_000), 1);
        assert_eq!(abs_threshold(0.05, 10_000), 1);
        assert_eq!(abs_threshold(0.5, 1), 1);
    }

    proptest! {
        #[test]
        fn thresholds_match_exact_arithmetic(k in 1u64..500, m in 1u64..40) {
            // x = k / 100 and n = m^4, so x n^{1/4} = k m / 100 exactly
            let n = (m * m * m * m) as usize;
            let exact = (k * m).div_ceil(100) as u32;
            prop_assert_eq!(abs_threshold(k as f64 / 100.0, n), exact);
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg("radius", vec![10], 1).validate().is_ok());
        assert!(cfg("nope", vec![10], 1).validate().is_err());
        assert!(cfg("radius", vec![], 1).validate().is_err());
        assert!(cfg("radius", vec![10], 0).validate().is_err());
        let mut c = cfg("confluence", vec![10], 1);
        c.beta = 2.0;
        assert!(c.validate().is_err());
        let json = r#"{"experiment":"radius","p":3,"n":[10,20],"reps":2,"seed":5,"mode":"pointed"}"#;
        let c: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.ns, vec![10, 20]);
        assert_eq!(c.mode, Some(SamplerMode::Pointed));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn radius_n1_is_one_or_two() {
        let t = radius_experiment(&cfg("radius", vec![1], 40)).unwrap();
        let v = t.values(1, "radius");
        assert_eq!(v.len(), 40);
        assert!(v.iter().all(|&r| r == 1.0 || r == 2.0));
        assert!(v.contains(&1.0) && v.contains(&2.0));
        assert_eq!(t.rows[0].statistic, "lambda_p");
        assert_eq!(t.rows[0].value, Some(lambda_p(2)));
        assert_eq!(t.rows[1].value, Some(kappa_p(2)));
    }

    #[test]
    fn tables_are_deterministic() {
        for name in EXPERIMENTS {
            let mut c = cfg(name, vec![30, 60], 3);
            c.radii = vec![0.3, 1.0, 2.0, 5.0];
            c.chi = 0.6;
            let a = run_experiment(&c).unwrap().to_csv();
            let b = run_experiment(&c).unwrap().to_csv();
            assert_eq!(a, b, "{name}");
            assert!(a.starts_with("experiment,p,n,replica,statistic,value\n"));
        }
    }

    #[test]
    fn two_point_values() {
        let c = cfg("two_point", vec![50, 200], 30);
        let t = two_point_experiment(&c).unwrap();
        let raw = t.values(50, "distance");
        let res = t.values(50, "distance_rescaled");
        assert!(raw.iter().all(|&d| d >= 1.0));
        for (d, r) in raw.iter().zip(&res) {
            assert!((r - kappa_p(2) * 50f64.powf(-0.25) * d).abs() < 1e-12);
        }
        assert!(t.summary(50, "ks_vs_n200").unwrap() <= 1.0);
    }

    #[test]
    fn ball_volumes() {
        let mut c = cfg("ball_volume", vec![300], 2);
        c.radii = vec![0.3, 0.6, 1.0, 10.0];
        let t = ball_volume_experiment(&c).unwrap();
        let big = abs_threshold(10.0, 300);
        assert!(t.values(300, &format!("c0:vol@{big}")).iter().all(|&v| v == 1.0));
        c.radii = vec![0.01, 0.02];
        assert!(matches!(ball_volume_experiment(&c), Err(Error::DegenerateFit(_))));
        c.radii = vec![0.3, 0.6, 1.0];
        assert!(matches!(ball_volume_experiment(&c), Err(Error::Parameter(_))));
    }

    #[test]
    fn uniqueness_extremes() {
        let mut c = cfg("uniqueness", vec![200], 4);
        c.delta = 50.0;
        let t = uniqueness_experiment(&c).unwrap();
        assert!(t.values(200, "fraction").iter().all(|&f| f == 0.0));
    }

    #[test]
    fn multiplicity_and_confluence_ranges() {
        let t = multiplicity_experiment(&cfg("multiplicity", vec![300], 5)).unwrap();
        assert!(t.values(300, "max_corner_multiplicity").iter().all(|&m| m >= 1.0));
        let mut c = cfg("confluence", vec![300], 5);
        c.beta = 0.05;
        c.chi = 0.5;
        let t = confluence_experiment(&c).unwrap();
        for d in t.values(300, "divergence") {
            assert!(d == 0.0 || d == 2.0);
        }
        c.chi = 100.0;
        let t = confluence_experiment(&c).unwrap();
        assert_eq!(t.count(300, "divergence"), 5);
        assert!(t.values(300, "divergence").is_empty());
        assert!(t.to_csv().contains(",0,divergence,\n"));
    }

    #[test]
    fn reroot_ks_in_range() {
        let t = reroot_invariance_experiment(&cfg("reroot_invariance", vec![100], 20)).unwrap();
        let ks = t.summary(100, "ks_statistic").unwrap();
        assert!((0.0..=1.0).contains(&ks));
    }

    #[test]
    fn distortion_examples() {
        let two = |d: f64| DenseMetric(vec![vec![0.0, d], vec![d, 0.0]]);
        let diagonal = [(0, 0), (1, 1)];
        assert_eq!(distortion(&two(1.0), &two(3.0), &diagonal).unwrap(), 2.0);
        let product = [(0, 0), (0, 1), (1, 0), (1, 1)];
        assert_eq!(distortion(&two(1.0), &two(3.0), &product).unwrap(), 3.0);
        let map = build_map(&crate::fixtures::hexangulation_mobile());
        let m = map_metric(&map);
        let id: Vec<(usize, usize)> = (0..m.size()).map(|i| (i, i)).collect();
        assert_eq!(distortion(&m, &m, &id).unwrap(), 0.0);
        assert!(matches!(distortion(&m, &m, &id[1..]), Err(Error::NotCorrespondence(_))));
        let c4 = map_metric(&cycle4());
        let corr = [(0, 1), (1, 2), (2, 3), (3, 0), (5, 1)];
        let corr = &corr[..4];
        let flipped: Vec<(usize, usize)> = corr.iter().map(|&(a, b)| (b, a)).collect();
        let sub = DenseMetric(m.0[..4].iter().map(|r| r[..4].to_vec()).collect());
        assert_eq!(
            distortion(&sub, &c4, corr).unwrap(),
            distortion(&c4, &sub, &flipped).unwrap()
        );
    }
}
