mod common;

use std::time::{Duration, Instant};

use common::{prim_lengths, sorted, uniform};
use delrips::complex_order::{build_delaunay_rips, build_rips};
use delrips::experiments::{
    bound_histogram, generate, histogram_csv, stability_csv, stability_sweep, InstanceKind, InstanceSpec,
};
use delrips::geometry::{diameter, jung_constant, meb_radius, validate_general_position, PointCloud};
use delrips::metrics::{bottleneck, log_diagram, rips_diagram, DiagramPointSet};
use delrips::oracle;
use delrips::persistence::{
    compute_diagrams, compute_diagrams_with, run_pipeline, PersistenceDiagram, PersistenceOptions, PipelineOptions,
    Units,
};
use delrips::spanning::verify_spanning_acycle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

const EPS: f64 = 1e-3;
const TOL: f64 = 1e-9;

/// The 200-cloud corpus: 100 planar, 80 spatial and 20 four-dimensional clouds.
fn corpus() -> Vec<PointCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let mut out = Vec::with_capacity(200);
    for i in 0..200u64 {
        let (d, n) = match i {
            0..=99 => (2, rng.random_range(4..=40)),
            100..=179 => (3, rng.random_range(5..=40)),
            _ => (4, rng.random_range(6..=15)),
        };
        out.push(uniform(n, d, 10_000 + i));
    }
    out
}

fn spec(kind: InstanceKind, n: usize, seed: u64) -> InstanceSpec {
    InstanceSpec::new(kind, n, seed)
}

fn oracle_equivalence(clouds: &[PointCloud]) -> Outcome {
    let start = Instant::now();
    let opts = PersistenceOptions {
        keep_zero_persistence: true,
        ..PersistenceOptions::default()
    };
    let mut bad = Vec::new();
    for (i, c) in clouds.iter().enumerate() {
        let ours = compute_diagrams_with(c, &opts).unwrap();
        let reference = oracle::reduce(&build_delaunay_rips(c).unwrap()).unwrap();
        if ours.value_multiset() != reference.value_multiset() {
            bad.push(i);
        }
    }
    let t = start.elapsed();
    Outcome::new(
        bad.is_empty() && t < Duration::from_secs(60),
        format!("{} clouds, {} mismatches {:?}, {:.2}s (limit 60s)", clouds.len(), bad.len(), bad, t.as_secs_f64()),
    )
}

fn most_persistent(d: &PersistenceDiagram, k: usize) -> Option<(f64, f64)> {
    d.finite(k).into_iter().max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn log_gap(dr: &PersistenceDiagram, rips: &PersistenceDiagram, k: usize) -> f64 {
    let a = log_diagram(&DiagramPointSet::from_diagram(dr, k)).unwrap();
    let b = log_diagram(&DiagramPointSet::from_diagram(rips, k)).unwrap();
    bottleneck(&a, &b)
}

fn worst_cases() -> Outcome {
    let s3 = 3f64.sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for (kind, k, dr_expect, rips_expect, gap_expect) in [
        (InstanceKind::HexagonWorst, 1, (1.0, 2.0), (1.0, s3), (2.0 / s3).ln()),
        (
            InstanceKind::DodecahedronWorst,
            2,
            (2.0 / s3, 2.0),
            (2.0 / s3, 4.0 / 6f64.sqrt()),
            (6f64.sqrt() / 2.0).ln(),
        ),
    ] {
        let mut sp = spec(kind, 0, 1);
        sp.epsilon = EPS;
        let c = generate(&sp).unwrap();
        let dr = compute_diagrams(&c).unwrap();
        let rips = rips_diagram(&c, k).unwrap();
        let (Some(a), Some(b)) = (most_persistent(&dr, k), most_persistent(&rips, k)) else {
            return Outcome::new(false, format!("{}: missing PH{k} point", kind.name()));
        };
        let (ea, eb) = (linf(a, dr_expect), linf(b, rips_expect));
        let gap = log_gap(&dr, &rips, k);
        let ok = ea <= 5.0 * EPS && eb <= 5.0 * EPS && (gap - gap_expect).abs() <= 0.01;
        pass &= ok;
        parts.push(format!(
            "{}: DR ({:.4},{:.4}) err {:.1e}, Rips ({:.4},{:.4}) err {:.1e}, log gap {:.4} vs {:.4}",
            kind.name(),
            a.0,
            a.1,
            ea,
            b.0,
            b.1,
            eb,
            gap,
            gap_expect
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn bound_histograms() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut circle_max = f64::NAN;
    for (kind, sigma) in [
        (InstanceKind::UniformCube, None),
        (InstanceKind::NoisyCircle, Some(0.01)),
        (InstanceKind::NoisyCircle, None),
        (InstanceKind::NoisySphere, None),
    ] {
        for k in [1, 2] {
            let mut sp = spec(kind, 30, 1);
            if let Some(s) = sigma {
                sp.sigma = s;
            }
            let run = bound_histogram(&sp, 200, k).unwrap();
            let max = run.summary.max;
            let ok = max <= run.bound + TOL && run.samples.iter().all(|s| s.value >= 0.0);
            pass &= ok;
            if kind == InstanceKind::NoisyCircle && k == 1 && sigma.is_some() {
                circle_max = max;
            }
            parts.push(format!("{}(sigma {}) k={k} max {:.4}/{:.4}", kind.name(), sp.sigma, max, run.bound));
        }
    }
    let target = jung_constant(2).ln() - 0.05;
    let approached = circle_max >= target;
    pass &= approached;
    parts.push(format!("noisy-circle k=1 approach {:.4} >= {:.4}", circle_max, target));
    Outcome::new(pass, parts.join("; "))
}

fn ph0_identity(clouds: &[PointCloud]) -> Outcome {
    let mut bad = 0;
    for c in clouds {
        let dr = compute_diagrams(c).unwrap();
        let rips = oracle::reduce(&build_rips(c, 1).unwrap()).unwrap().without_zero_persistence();
        let deaths = sorted(dr.finite(0).iter().map(|p| p.1).collect());
        let ok = dr.finite(0) == rips.finite(0)
            && dr.essential(0) == rips.essential(0)
            && deaths == prim_lengths(c)
            && deaths.len() == c.len() - 1;
        if !ok {
            bad += 1;
        }
    }
    Outcome::new(bad == 0, format!("{} instances, {bad} violations", clouds.len()))
}

fn lemma_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e11a);
    let mut counts = [0usize; 5];
    let mut violations = [0usize; 5];
    let names = ["msa-in-us", "births-in-us-minus-msa", "ph1-births-eq-ug-minus-mst", "msa-values-eq-deaths", "spanning"];
    let mut seed = 20_000;
    while counts.iter().any(|&c| c < 100) {
        seed += 1;
        let d = if rng.random_bool(0.5) { 2 } else { 3 };
        let c = uniform(rng.random_range(8..=40), d, seed);
        let fc = build_delaunay_rips(&c).unwrap();
        let out = run_pipeline(&fc, &PipelineOptions::default()).unwrap();
        let reference = oracle::reduce(&fc).unwrap();
        let msa = |k: usize| out.msa[k].as_ref().unwrap();

        let mut ok = [true; 5];
        for k in 1..d {
            ok[0] &= msa(k).is_subset(out.urquhart[k].as_ref().unwrap());
        }
        for p in reference.all_pairs().filter(|p| p.dim >= 1 && p.death > p.birth) {
            let us = out.urquhart[p.dim].as_ref().unwrap();
            ok[1] &= us.contains(p.birth_simplex) && !msa(p.dim).contains(p.birth_simplex);
        }
        let distinct = !validate_general_position(&c).has_repeated_distance();
        if distinct {
            let births: Vec<usize> = sorted_ranks(
                reference.pairs(1).iter().filter(|p| p.death > p.birth).map(|p| p.birth_simplex).collect(),
            );
            let expected = sorted_ranks(out.urquhart[1].as_ref().unwrap().difference(msa(1)).ranks().collect());
            ok[2] = births == expected;
        }
        for k in 1..=d {
            let values = sorted(msa(k).ranks().map(|r| fc.value(k, r)).collect());
            let deaths = sorted(reference.pairs(k - 1).iter().filter(|p| !p.is_essential()).map(|p| p.death).collect());
            ok[3] &= values == deaths;
            ok[4] &= verify_spanning_acycle(&fc, k, msa(k)).unwrap();
        }
        for (i, &good) in ok.iter().enumerate() {
            if i == 2 && !distinct {
                continue;
            }
            if counts[i] < 100 {
                counts[i] += 1;
                violations[i] += usize::from(!good);
            }
        }
    }
    let detail = names
        .iter()
        .zip(counts.iter().zip(&violations))
        .map(|(n, (c, v))| format!("{n} {v}/{c}"))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::new(violations.iter().all(|&v| v == 0), detail)
}

fn sorted_ranks(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn stability() -> Outcome {
    let grid = [0.001, 0.01, 0.05, 0.1];
    let mut pass = true;
    let mut witnessed = 0;
    let mut parts = Vec::new();
    for (kind, trials) in [
        (InstanceKind::UniformCube, 20),
        (InstanceKind::NoisyCircle, 50),
        (InstanceKind::NoisySphere, 20),
    ] {
        let run = stability_sweep(&spec(kind, 30, 1), trials, &grid, 1).unwrap();
        let rips_ok = run.levels.iter().all(|l| l.rips_holds);
        let dr_ok = run.levels.iter().all(|l| l.dr_holds);
        let above: Vec<usize> = run.levels.iter().map(|l| l.dr_above_rips_bound).collect();
        if kind == InstanceKind::NoisyCircle {
            witnessed = above.iter().sum();
        }
        pass &= rips_ok && dr_ok;
        parts.push(format!("{}: rips {rips_ok}, dr {dr_ok}, dr>2eps {:?}", kind.name(), above));
    }
    pass &= witnessed > 0;
    parts.push(format!("noisy-circle witnesses {witnessed}"));
    Outcome::new(pass, parts.join("; "))
}

fn jung() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a9);
    let mut bad = 0;
    for t in 0..10_000 {
        let k = 1 + t % 5;
        let ambient = k + rng.random_range(0..=1);
        let coords: Vec<f64> = (0..(k + 1) * ambient).map(|_| rng.random::<f64>()).collect();
        let c = PointCloud::new(ambient, coords).unwrap();
        let v: Vec<usize> = (0..=k).collect();
        let delta = diameter(&v, &c).unwrap();
        let two_r = 2.0 * meb_radius(&v, &c).unwrap();
        if !(delta <= two_r + TOL && two_r <= jung_constant(k) * delta + TOL) {
            bad += 1;
        }
    }
    let mut regular_err = 0.0f64;
    for k in 1..=5 {
        // standard basis of R^(k+1): a regular k-simplex with side sqrt 2
        let coords: Vec<f64> = (0..=k).flat_map(|i| (0..=k).map(move |j| if i == j { 1.0 } else { 0.0 })).collect();
        let c = PointCloud::new(k + 1, coords).unwrap();
        let v: Vec<usize> = (0..=k).collect();
        let two_r = 2.0 * meb_radius(&v, &c).unwrap();
        regular_err = regular_err.max((two_r - jung_constant(k) * diameter(&v, &c).unwrap()).abs());
    }
    Outcome::new(
        bad == 0 && regular_err <= TOL,
        format!("10000 simplices, {bad} violations; regular simplex error {regular_err:.1e}"),
    )
}

fn json(d: &PersistenceDiagram) -> String {
    d.to_json(Units::Diameter).to_string()
}

fn determinism(clouds: &[PointCloud]) -> Outcome {
    let mut bad = Vec::new();
    for kind in InstanceKind::ALL {
        let sp = spec(kind, 60, 7);
        let a = generate(&sp).unwrap();
        let b = generate(&sp).unwrap();
        if a.to_text() != b.to_text() || json(&compute_diagrams(&a).unwrap()) != json(&compute_diagrams(&b).unwrap()) {
            bad.push(kind.name().to_string());
        }
    }
    let sp = spec(InstanceKind::NoisyCircle, 20, 3);
    let h = || histogram_csv(&bound_histogram(&sp, 10, 1).unwrap()).unwrap();
    let s = || stability_csv(&stability_sweep(&sp, 5, &[0.01, 0.05], 1).unwrap()).unwrap();
    if h() != h() || s() != s() {
        bad.push("experiments".into());
    }
    let mut parallel_bad = 0;
    for c in clouds.iter().step_by(4).take(50) {
        let one = compute_diagrams(c).unwrap();
        let four = compute_diagrams_with(
            c,
            &PersistenceOptions {
                threads: 4,
                ..PersistenceOptions::default()
            },
        )
        .unwrap();
        if json(&one) != json(&four) {
            parallel_bad += 1;
        }
    }
    Outcome::new(
        bad.is_empty() && parallel_bad == 0,
        format!("non-deterministic: {bad:?}; threads 4 vs 1 mismatches {parallel_bad}/50"),
    )
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn performance() -> Outcome {
    let c = generate(&spec(InstanceKind::UniformCube, 10_000, 1)).unwrap();
    let start = Instant::now();
    let d = compute_diagrams(&c).unwrap();
    let t = start.elapsed();
    let finite0 = d.finite(0).len();
    let peak = peak_rss_bytes();
    let mem_ok = peak.is_some_and(|b| b < 2 << 30);
    Outcome::new(
        t < Duration::from_secs(10) && mem_ok && finite0 == 9_999,
        format!(
            "n=10000 in R^3: {:.2}s (limit 10s), peak RSS {} (limit 2 GiB), {} PH0 pairs",
            t.as_secs_f64(),
            peak.map_or("unavailable".into(), |b| format!("{:.0} MiB", b as f64 / (1 << 20) as f64)),
            finite0
        ),
    )
}

fn main() {
    // measured first so the peak resident set belongs to this run alone
    let perf = performance();
    let clouds = corpus();
    let results = [
        ("oracle equivalence", oracle_equivalence(&clouds)),
        ("worst-case configurations", worst_cases()),
        ("log-bottleneck bound", bound_histograms()),
        ("PH0 identity", ph0_identity(&clouds)),
        ("lemma suite", lemma_suite()),
        ("stability envelopes", stability()),
        ("Jung property", jung()),
        ("determinism and threads", determinism(&clouds)),
        ("performance", perf),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
