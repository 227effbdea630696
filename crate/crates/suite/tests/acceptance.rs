//! Acceptance suite: one line per criterion, PASS or FAIL with the measured
//! numbers. Runs as a plain binary so the lines always reach the output.
//! `cargo test -p mobilemap-suite --test acceptance -- A5 A7` runs a subset.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::time::Instant;

use mobilemap::bdgmap::{build_map, validate};
use mobilemap::continuum::{from_mobile, sample_snake_grid, Component, Tolerance};
use mobilemap::geodesy::{bfs, geodesic_spread};
use mobilemap::mobile::enumerate_mobiles;
use mobilemap::rng::substream;
use mobilemap::scalinglab::{run_experiment, ExperimentConfig};
use mobilemap::{contour, sample_mobile, Mobile, PlanarMap, SamplerMode};
use rand::Rng;

const SEED: u64 = 1;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("A1", a1_validation),
        ("A2", a2_enumeration_and_uniformity),
        ("A3", a3_spread_oracle),
        ("A4", a4_radius_medians),
        ("A5", a5_uniqueness_trend),
        ("A6", a6_three_geodesics_trend),
        ("A7", a7_multiplicity_bound),
        ("A8", a8_ball_volume_slope),
        ("A9", a9_occupation_slope),
        ("A10", a10_confluence),
        ("A11", a11_reroot_invariance),
        ("A12", a12_continuum_axioms),
    ];
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (name, check) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == name) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("{name} {status} ({:.1}s): {}", start.elapsed().as_secs_f64(), v.detail);
        if !v.pass {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        std::process::exit(1);
    }
}

fn config(experiment: &str, ns: &[usize], replicas: usize) -> ExperimentConfig {
    ExperimentConfig {
        experiment: experiment.into(),
        ns: ns.to_vec(),
        replicas,
        seed: Some(SEED),
        ..Default::default()
    }
}

fn summary(cfg: &ExperimentConfig, n: usize, statistic: &str) -> f64 {
    let table = run_experiment(cfg).expect("experiment runs");
    table.summary(n, statistic).expect("summary row present")
}

/// Adjacency lists straight from the edge list.
fn adjacency(map: &PlanarMap) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); map.vertex_count()];
    for &[u, v] in map.edges() {
        adj[u as usize].push(v as usize);
        adj[v as usize].push(u as usize);
    }
    adj
}

fn distances(adj: &[Vec<usize>], s: usize) -> Vec<Option<u32>> {
    let mut d = vec![None; adj.len()];
    d[s] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        let du = d[u].unwrap();
        for &w in &adj[u] {
            if d[w].is_none() {
                d[w] = Some(du + 1);
                q.push_back(w);
            }
        }
    }
    d
}

fn a1_validation() -> Verdict {
    let mut rng = substream(SEED, 1);
    let sizes: Vec<(usize, usize)> = [2, 3, 4].iter().flat_map(|&p| [10, 100, 1000].map(|n| (p, n))).collect();
    let mut bad = Vec::new();
    for i in 0..200 {
        let (p, n) = sizes[i % sizes.len()];
        let m = sample_mobile(n, p, &mut rng, SamplerMode::default_for(n)).unwrap();
        let map = build_map(&m);
        let report = validate(&map, &m);
        let adj = adjacency(&map);
        let d = distances(&adj, 0);
        let mut ok = report.is_ok()
            && map.vertex_count() == (p - 1) * n + 2
            && map.edge_count() == p * n
            && d.iter().all(|x| x.is_some());
        ok &= map.edges().iter().all(|&[u, v]| d[u as usize] != d[v as usize]);
        ok &= m.labels().iter().enumerate().all(|(r, &l)| d[r + 1] == Some(l as u32));
        if !ok {
            bad.push((p, n, i));
        }
    }
    verdict(bad.is_empty(), format!("200 maps over p in {{2,3,4}}, n in {{10,100,1000}}; failures: {bad:?}"))
}

fn key(m: &Mobile) -> String {
    serde_json::to_string(m).unwrap()
}

fn a2_enumeration_and_uniformity() -> Verdict {
    let c1 = enumerate_mobiles(1, 2).unwrap().len();
    let c2 = enumerate_mobiles(2, 2).unwrap().len();
    let mut ok = c1 == 2 && c2 == 9;
    let mut detail = format!("counts {c1} (n=1) and {c2} (n=2)");
    let draws = 100_000usize;
    for (n, stream) in [(1usize, 21u64), (2, 22)] {
        let all: Vec<String> = enumerate_mobiles(n, 2).unwrap().iter().map(key).collect();
        let mut counts: HashMap<String, usize> = all.iter().map(|k| (k.clone(), 0)).collect();
        let mut rng = substream(SEED, stream);
        let mut stray = 0;
        for _ in 0..draws {
            let m = sample_mobile(n, 2, &mut rng, SamplerMode::ExactRooted).unwrap();
            match counts.get_mut(&key(&m)) {
                Some(c) => *c += 1,
                None => stray += 1,
            }
        }
        let q = 1.0 / all.len() as f64;
        let se = (q * (1.0 - q) / draws as f64).sqrt();
        let worst = counts
            .values()
            .map(|&c| (c as f64 / draws as f64 - q).abs() / se)
            .fold(0.0, f64::max);
        ok &= stray == 0 && worst <= 3.0;
        detail.push_str(&format!("; n={n}: {draws} draws, worst deviation {worst:.2} SE, {stray} unknown"));
    }
    verdict(ok, detail)
}

/// Every geodesic from `a` to `0`, as vertex lists indexed by distance from 0.
fn geodesics_to_root(adj: &[Vec<usize>], d0: &[Option<u32>], a: usize) -> Vec<Vec<usize>> {
    fn walk(adj: &[Vec<usize>], d0: &[Option<u32>], v: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        path.push(v);
        if d0[v] == Some(0) {
            let mut p = path.clone();
            p.reverse();
            out.push(p);
        } else {
            for &w in &adj[v] {
                if d0[w].unwrap() + 1 == d0[v].unwrap() {
                    walk(adj, d0, w, path, out);
                }
            }
        }
        path.pop();
    }
    let mut out = Vec::new();
    walk(adj, d0, a, &mut Vec::new(), &mut out);
    out
}

fn a3_spread_oracle() -> Verdict {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for n in 1..=3 {
        for m in enumerate_mobiles(n, 2).unwrap() {
            let map = build_map(&m);
            let adj = adjacency(&map);
            let all: Vec<Vec<Option<u32>>> = (0..adj.len()).map(|s| distances(&adj, s)).collect();
            let from_root = bfs(&map, 0);
            for a in 0..map.vertex_count() {
                let geos = geodesics_to_root(&adj, &all[0], a);
                let mut brute = 0;
                for g in &geos {
                    for h in &geos {
                        for i in 0..g.len() {
                            brute = brute.max(all[g[i]][h[i]].unwrap());
                        }
                    }
                }
                let got = geodesic_spread(&map, a, &from_root, &bfs(&map, a));
                checked += 1;
                if got != brute {
                    mismatches.push((n, a, got, brute));
                }
            }
        }
    }
    verdict(mismatches.is_empty(), format!("{checked} vertices over all p=2 maps with n <= 3; mismatches: {mismatches:?}"))
}

fn a4_radius_medians() -> Verdict {
    let ns = [1000, 4000, 16000];
    let cfg = config("radius", &ns, 200);
    let table = run_experiment(&cfg).unwrap();
    let medians: Vec<f64> = ns.iter().map(|&n| table.summary(n, "median_radius_rescaled").unwrap()).collect();
    let lo = medians.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = medians.iter().cloned().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    verdict(
        spread <= 0.15,
        format!("medians of the rescaled radius at n = 1000, 4000, 16000 (200 replicas): {medians:.4?}; relative spread {spread:.4} (limit 0.15)"),
    )
}

fn a5_uniqueness_trend() -> Verdict {
    let mut cfg = config("uniqueness", &[1000, 16000], 100);
    cfg.delta = 0.3;
    cfg.queries = 50;
    let table = run_experiment(&cfg).unwrap();
    let m = |n| table.summary(n, "mean_fraction").unwrap();
    let s = |n| table.summary(n, "se_fraction").unwrap();
    let gap = m(1000) - m(16000);
    let se = (s(1000).powi(2) + s(16000).powi(2)).sqrt();
    verdict(
        gap >= 3.0 * se,
        format!(
            "mean fraction with spread >= ceil(0.3 n^(1/4)): {:.4} (n=1000) vs {:.4} (n=16000); gap {gap:.4} = {:.1} combined SE (need 3)",
            m(1000),
            m(16000),
            gap / se
        ),
    )
}

fn a6_three_geodesics_trend() -> Verdict {
    let n = 10_000;
    let mut freq = Vec::new();
    for alpha in [0.2, 0.1, 0.05] {
        let mut cfg = config("multiplicity", &[n], 200);
        cfg.delta = 0.02;
        cfg.alpha = alpha;
        cfg.queries = 1;
        let table = run_experiment(&cfg).unwrap();
        freq.push((
            alpha,
            table.summary(n, "alpha_abs").unwrap(),
            table.summary(n, "mean_three_geodesics").unwrap(),
            table.summary(n, "se_three_geodesics").unwrap(),
        ));
    }
    let monotone = freq.windows(2).all(|w| w[1].2 >= w[0].2);
    let (first, last) = (freq[0], freq[2]);
    let gap = last.2 - first.2;
    let se = (first.3.powi(2) + last.3.powi(2)).sqrt();
    let significant = gap > 0.0 && gap >= 3.0 * se;
    let rows: Vec<String> = freq
        .iter()
        .map(|(a, abs, f, s)| format!("alpha={a} (abs {abs}): {f:.3} +- {s:.3}"))
        .collect();
    verdict(
        monotone && significant,
        format!(
            "three separated geodesics at n=10^4, delta=0.02 (abs 1), 200 replicas: {}; monotone {monotone}, gap {gap:.3} vs 3 SE = {:.3}",
            rows.join(", "),
            3.0 * se
        ),
    )
}

fn a7_multiplicity_bound() -> Verdict {
    let n = 10_000;
    let mut cfg = config("multiplicity", &[n], 200);
    cfg.delta = 0.5;
    cfg.queries = 100;
    let frac = summary(&cfg, n, "fraction_mult_le_3");
    verdict(frac >= 0.95, format!("replicas with max corner multiplicity <= 3 over 100 vertices (n=10^4, delta=0.5, 200 replicas): {frac:.3} (need 0.95)"))
}

fn a8_ball_volume_slope() -> Verdict {
    let n = 100_000;
    let mut cfg = config("ball_volume", &[n], 4);
    cfg.queries = 50;
    let table = run_experiment(&cfg).unwrap();
    let slope = stats_mean(&table.values(n, "mean_slope"));
    let radii: Vec<u32> = mobilemap::scalinglab::ball_radii(&cfg, n);
    verdict(
        (3.4..=4.6).contains(&slope),
        format!("mean log-log ball-volume slope over 4 x 50 centres at n=10^5, radii {radii:?}: {slope:.3} (need [3.4, 4.6])"),
    )
}

fn stats_mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn a9_occupation_slope() -> Verdict {
    let n = 10_000;
    let cfg = config("occupation", &[n], 500);
    let table = run_experiment(&cfg).unwrap();
    let slope = table.summary(n, "slope").unwrap();
    let means: Vec<f64> = (2..=5)
        .map(|k| table.summary(n, &format!("mean_occupation@2^-{k}")).unwrap())
        .collect();
    verdict(
        (3.2..=4.8).contains(&slope),
        format!("occupation of [0, eps] over 500 pairs at n=10^4, eps = 2^-2..2^-5 x median max z: means {means:.3?}; slope {slope:.3} (need [3.2, 4.8])"),
    )
}

fn a10_confluence() -> Verdict {
    let n = 10_000;
    let mut rows = Vec::new();
    let mut any = false;
    for beta in [0.05, 0.1, 0.2] {
        let mut cfg = config("confluence", &[n], 200);
        cfg.chi = 1.0;
        cfg.beta = beta;
        cfg.delta = 0.2;
        let table = run_experiment(&cfg).unwrap();
        let frac = table.summary(n, "fraction_within_delta").unwrap();
        let beta_abs = table.summary(n, "beta_abs").unwrap();
        any |= frac >= 0.9;
        rows.push(format!("beta={beta} (abs {beta_abs}): {frac:.3}"));
    }
    verdict(any, format!("P(divergence <= ceil(0.2 n^(1/4)) = 2) at n=10^4, chi=1, 200 replicas: {} (need 0.9 for some beta)", rows.join(", ")))
}

/// Canonical form of a rooted multigraph: the lexicographically least sorted
/// edge list over all relabellings sending the root edge to `0 -> 1`.
fn canonical(map: &PlanarMap) -> Vec<[u32; 2]> {
    let [t, h] = map.endpoints(map.root());
    let others: Vec<u32> = (0..map.vertex_count() as u32).filter(|&v| v != t && v != h).collect();
    let mut best: Option<Vec<[u32; 2]>> = None;
    let mut perm = others.clone();
    permutations(&mut perm, 0, &mut |order| {
        let mut label = vec![0u32; map.vertex_count()];
        label[t as usize] = 0;
        label[h as usize] = 1;
        for (i, &v) in order.iter().enumerate() {
            label[v as usize] = i as u32 + 2;
        }
        let mut edges: Vec<[u32; 2]> = map
            .edges()
            .iter()
            .map(|&[u, v]| {
                let (a, b) = (label[u as usize], label[v as usize]);
                [a.min(b), a.max(b)]
            })
            .collect();
        edges.sort_unstable();
        if best.as_ref().is_none_or(|b| edges < *b) {
            best = Some(edges);
        }
    });
    best.unwrap()
}

fn permutations(v: &mut Vec<u32>, k: usize, f: &mut dyn FnMut(&[u32])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, f);
        v.swap(k, i);
    }
}

fn a11_reroot_invariance() -> Verdict {
    let maps: Vec<PlanarMap> = enumerate_mobiles(2, 2).unwrap().iter().map(build_map).collect();
    let mut uniform: BTreeMap<Vec<[u32; 2]>, usize> = BTreeMap::new();
    for m in &maps {
        *uniform.entry(canonical(m)).or_default() += 1;
    }
    let mut pushed: BTreeMap<Vec<[u32; 2]>, usize> = BTreeMap::new();
    let mut total = 0;
    for m in &maps {
        for e in m.oriented_edges() {
            *pushed.entry(canonical(&m.reroot(e).unwrap())).or_default() += 1;
            total += 1;
        }
    }
    // uniform over 9 rooted maps: each class carries (its count) / 9
    let exact = pushed.len() == uniform.len()
        && pushed.iter().all(|(k, &c)| uniform.get(k).is_some_and(|&u| c * maps.len() == u * total));

    let n = 500;
    let cfg = config("reroot_invariance", &[n], 500);
    let table = run_experiment(&cfg).unwrap();
    let ks = table.summary(n, "ks_statistic").unwrap();
    let pv = table.summary(n, "ks_p_value").unwrap();
    verdict(
        exact && pv > 0.01,
        format!(
            "n=2 pushforward over {total} rooted edges equals the uniform law on {} graph classes: {exact}; n=500, 500 replicas: KS {ks:.4}, p-value {pv:.4} (need > 0.01)",
            uniform.len()
        ),
    )
}

fn a12_continuum_axioms() -> Verdict {
    let mut rng = substream(SEED, 12);
    let pair = sample_snake_grid(20_000, &mut rng).unwrap();
    let steps = pair.steps();
    let mut triangle_failures = 0;
    for _ in 0..10_000 {
        let (s, t, u) = (rng.gen_range(0..=steps), rng.gen_range(0..=steps), rng.gen_range(0..=steps));
        for c in [Component::E, Component::Z] {
            let d = |a, b| pair.d_g(c, a, b).unwrap();
            // slack for floating-point round-off only
            if d(s, u) > d(s, t) + d(t, u) + 1e-12 {
                triangle_failures += 1;
            }
        }
    }

    let re = pair.reroot_pair().unwrap();
    let z = pair.z();
    let s_star = (0..=steps).fold(0, |best, i| if z[i] < z[best] { i } else { best });
    let modulus = pair.e().windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let shift = |i: usize| (s_star + i) % steps;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (s, t) = (rng.gen_range(0..=steps), rng.gen_range(0..=steps));
        let gap = (re.d_e(s, t).unwrap() - pair.d_e(shift(s), shift(t)).unwrap()).abs();
        worst = worst.max(gap);
    }
    let isometric = worst <= 2.0 * modulus;

    let mut max_mult = 0;
    let mut max_runs = 0;
    let mut tested = 0;
    let enc_pair = {
        let mut r = substream(SEED, 13);
        from_mobile(&contour(&sample_mobile(2000, 2, &mut r, SamplerMode::ExactRooted).unwrap())).unwrap()
    };
    for p in [&re, &enc_pair] {
        let tol = Tolerance::tree_default_for(p).value();
        for _ in 0..200 {
            let s = rng.gen_range(0..=p.steps());
            max_mult = max_mult.max(p.multiplicity(s, tol).unwrap());
            max_runs = max_runs.max(p.class_runs(s, tol).unwrap());
            tested += 1;
        }
    }
    verdict(
        triangle_failures == 0 && isometric && max_mult <= 3,
        format!(
            "triangle violations {triangle_failures} over 10^4 triples (e and z); re-rooting isometry worst gap {worst:.2e} vs 2 moduli {:.2e}; max multiplicity {max_mult} over {tested} points (uncapped class runs up to {max_runs})",
            2.0 * modulus
        ),
    )
}
