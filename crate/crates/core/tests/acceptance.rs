//! Exit criteria. Every criterion prints one PASS/FAIL line; the test fails
//! if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

use twohop_lattice::channel::{hop1, hop2, ChannelParams, InterferenceKind, InterferenceSpec, Model};
use twohop_lattice::lattice::{NestedChain, ScaledLattice};
use twohop_lattice::model1::Model1State;
use twohop_lattice::model2::Model2State;
use twohop_lattice::output::emit_results;
use twohop_lattice::rates::{achievable_rate, achievable_rate_harmonic, gap};
use twohop_lattice::sim::{run_trials, OutputFormat, RunConfig};
use twohop_lattice::stats::{intervals_overlap, ks_uniform};
use twohop_lattice::verify::mmse_sweep;

/// Union-bound threshold for S1 = S2 = 255, n = 8, k1 = k2 = 2, summed over
/// both decoding stages: 2n·Q(half-cell/σeff) with half-cells a/(2·k1·k2)
/// (σeff² = 1/256) and a/(2·k1) (σeff² = 1/256 + 1/16), a = √12.
/// Precomputed independently of this crate; `union_bound_oracle` recomputes it.
const FROZEN_UNION_BOUND: f64 = 6.220_243_609_620_61e-3;

fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn union_bound_oracle() -> f64 {
    let n = 8.0;
    let a = 12f64.sqrt();
    let (k1, k2, snr) = (2.0, 2.0, 255.0f64);
    let sigma2q = 1.0 / (k1 * k2 * k1 * k2);
    let unique_stage = 2.0 * n * q_function((a / (2.0 * k1 * k2)) / (1.0 / (1.0 + snr)).sqrt());
    let residual_stage = 2.0 * n * q_function((a / (2.0 * k1)) / (1.0 / (1.0 + snr) + sigma2q).sqrt());
    unique_stage + residual_stage
}

fn log_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| 10f64.powf(-2.0 + 8.0 * i as f64 / (points - 1) as f64)).collect()
}

fn mod_dist(lat: &ScaledLattice, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| lat.reduce(x - y).abs()).fold(0.0, f64::max)
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn within(elapsed: Duration, limit: Duration, passed: bool, detail: String) -> Outcome {
    let ok = passed && elapsed < limit;
    Outcome { passed: ok, detail: format!("{detail} [{:.2?} / limit {:.0?}]", elapsed, limit) }
}

fn c1_theorem_forms() -> Outcome {
    let start = Instant::now();
    let grid = log_grid(50);
    let mut worst: f64 = 0.0;
    for &a in &grid {
        for &b in &grid {
            let direct = (0.5 * ((a * b + a + b + 1.0) / (a + b + 2.0)).log2()).max(0.0);
            let lib = achievable_rate(a, b).unwrap();
            let harm = achievable_rate_harmonic(a, b).unwrap();
            worst = worst.max((lib - harm).abs()).max((lib - direct).abs());
        }
        let special = (0.5 * (0.5 + a / 2.0).log2()).max(0.0);
        worst = worst.max((achievable_rate(a, a).unwrap() - special).abs());
    }
    within(start.elapsed(), Duration::from_secs(1), worst <= 1e-12, format!("max |difference| {worst:.2e}"))
}

fn c2_half_bit_gap() -> Outcome {
    let start = Instant::now();
    let grid = log_grid(50);
    let mut worst = f64::NEG_INFINITY;
    let mut diag: f64 = 0.0;
    for &a in &grid {
        for &b in &grid {
            worst = worst.max(gap(a, b).unwrap());
        }
        if a > 1.0 {
            diag = diag.max((gap(a, a).unwrap() - 0.5).abs());
        }
    }
    let ok = worst <= 0.5 + 1e-12 && diag <= 1e-9;
    within(start.elapsed(), Duration::from_secs(1), ok, format!("max gap {worst:.15}, diagonal deviation {diag:.2e}"))
}

fn random_setup(rng: &mut ChaCha8Rng) -> (NestedChain, f64, f64, ChannelParams, Vec<f64>) {
    let n = rng.random_range(1..=8);
    let chain = NestedChain::build(n, rng.random_range(2..=4), rng.random_range(1..=3), 1.0).unwrap();
    let a1 = rng.random_range(0.05..=1.0);
    let a2 = rng.random_range(0.05..=1.0);
    let params = ChannelParams::new(10f64.powf(rng.random_range(-1.0..3.0)), 10f64.powf(rng.random_range(-1.0..3.0))).unwrap();
    let s = (0..n)
        .map(|_| {
            let m = 10f64.powf(rng.random_range(-2.0..9.0));
            if rng.random_bool(0.5) { m } else { -m }
        })
        .collect();
    (chain, a1, a2, params, s)
}

fn c3_identities() -> Outcome {
    let start = Instant::now();
    let mut worst1: f64 = 0.0;
    let mut worst2: f64 = 0.0;
    for noisy in [false, true] {
        let mut rng = ChaCha8Rng::seed_from_u64(if noisy { 31 } else { 30 });
        for _ in 0..1000 {
            let (chain, a1, a2, mut params, s) = random_setup(&mut rng);
            params.noiseless = !noisy;
            let n = chain.dim();
            let (lat, q) = (chain.coarse(), chain.quant());
            let scale = s.iter().fold(1.0f64, |m, v| m.max(v.abs()));

            // list-decoding relay
            let st = Model1State::sample(chain, a1, a2, &mut rng).unwrap();
            let x1 = st.encode_source();
            let y2 = hop1(Model::One, &x1, &s, &params, &mut rng).unwrap();
            let z2: Vec<f64> = (0..n).map(|i| y2[i] - x1[i] - s[i]).collect();
            let y2p = st.relay_scale(&y2).unwrap();
            let arg: Vec<f64> = (0..n).map(|i| a1 * s[i] + st.uq[i]).collect();
            let qq = q.nearest_point(&arg).unwrap();
            let rr = q.mod_lattice(&arg).unwrap();
            let rhs: Vec<f64> = (0..n).map(|i| st.codeword[i] + qq[i] + rr[i] - (1.0 - a1) * x1[i] + a1 * z2[i]).collect();
            worst1 = worst1.max(mod_dist(lat, &y2p, &rhs) / scale);
            let v = st.list_target(&s).unwrap();
            let vt: Vec<f64> = (0..n).map(|i| st.codeword[i] + qq[i]).collect();
            worst1 = worst1.max(mod_dist(lat, &v, &vt) / scale);
            let back = st.resolve(&[v], &s).unwrap().unwrap();
            worst1 = worst1.max(mod_dist(lat, &back, &st.codeword) / scale);

            // pre-cancellation
            let st = Model2State::sample(chain, a1, a2, &mut rng).unwrap();
            let arg: Vec<f64> = (0..n).map(|i| a2 * s[i] + st.uq[i]).collect();
            let qq = q.nearest_point(&arg).unwrap();
            let rr = q.mod_lattice(&arg).unwrap();
            let t_big: Vec<f64> = (0..n).map(|i| lat.reduce(st.codeword[i] - qq[i])).collect();
            worst2 = worst2.max(mod_dist(lat, &st.shifted_codeword(&s).unwrap(), &t_big) / scale);
            let x1 = st.encode_source(&s).unwrap();
            let y2 = hop1(Model::Two, &x1, &s, &params, &mut rng).unwrap();
            let z2: Vec<f64> = (0..n).map(|i| y2[i] - x1[i]).collect();
            let rhs: Vec<f64> = (0..n).map(|i| t_big[i] - (1.0 - a1) * x1[i] + a1 * z2[i]).collect();
            worst2 = worst2.max(mod_dist(lat, &st.relay_scale(&y2).unwrap(), &rhs) / scale);
            let x2 = st.relay_reencode(&t_big).unwrap();
            let y3 = hop2(Model::Two, &x2, &s, &params, &mut rng).unwrap();
            let z3: Vec<f64> = (0..n).map(|i| y3[i] - x2[i] - s[i]).collect();
            let rhs: Vec<f64> = (0..n).map(|i| st.codeword[i] + rr[i] - (1.0 - a2) * x2[i] + a2 * z3[i]).collect();
            worst2 = worst2.max(mod_dist(lat, &st.destination_scale(&y3).unwrap(), &rhs) / scale);
        }
    }
    let ok = worst1 <= 1e-9 && worst2 <= 1e-9;
    within(
        start.elapsed(),
        Duration::from_secs(10),
        ok,
        format!("max relative residual: list scheme {worst1:.2e}, pre-cancellation {worst2:.2e}"),
    )
}

fn c4_noiseless() -> Outcome {
    let start = Instant::now();
    let mut errors = 0;
    let mut trials = 0;
    for model in [Model::One, Model::Two] {
        for kind in InterferenceKind::ALL {
            let param = if kind == InterferenceKind::Gaussian { 1e12 } else { 1e6 };
            let cfg = RunConfig {
                model,
                noiseless: true,
                alpha1: Some(1.0),
                alpha2: Some(1.0),
                interference: InterferenceSpec::new(kind, param),
                trials: 1000,
                seed: 4,
                ..RunConfig::default()
            };
            let s = run_trials(&cfg).unwrap();
            errors += s.errors;
            trials += s.trials;
        }
    }
    within(start.elapsed(), Duration::from_secs(10), errors == 0, format!("{errors} errors in {trials} trials"))
}

fn criterion5_config(model: Model, interference: InterferenceSpec) -> RunConfig {
    RunConfig {
        model,
        s1: 255.0,
        s2: 255.0,
        n: 8,
        k1: Some(2),
        k2: Some(2),
        interference,
        trials: 10_000,
        seed: 5,
        ..RunConfig::default()
    }
}

fn c5_noisy_operation() -> Outcome {
    let start = Instant::now();
    let oracle = union_bound_oracle();
    let oracle_ok = (oracle / FROZEN_UNION_BOUND - 1.0).abs() < 1e-9;
    let mut ok = oracle_ok;
    let mut parts = vec![format!("threshold {FROZEN_UNION_BOUND:.3e}")];
    for model in [Model::One, Model::Two] {
        let s = run_trials(&criterion5_config(model, InterferenceSpec::gaussian(1e4))).unwrap();
        ok &= s.error_rate < FROZEN_UNION_BOUND;
        parts.push(format!("model {model}: {}/{} (rate {:.2e})", s.errors, s.trials, s.error_rate));
    }
    within(start.elapsed(), Duration::from_secs(60), ok, parts.join(", "))
}

fn c6_interference_independence() -> Outcome {
    let specs = [InterferenceSpec::constant(0.0), InterferenceSpec::constant(1e6), InterferenceSpec::gaussian(1e12)];
    let mut ok = true;
    let mut parts = Vec::new();
    for model in [Model::One, Model::Two] {
        let runs: Vec<_> = specs.iter().map(|&sp| run_trials(&criterion5_config(model, sp)).unwrap()).collect();
        for i in 0..runs.len() {
            for j in i + 1..runs.len() {
                ok &= intervals_overlap(runs[i].interval(), runs[j].interval());
            }
        }
        let rates: Vec<String> = runs.iter().map(|r| format!("{}:{}", r.interference, r.errors)).collect();
        parts.push(format!("model {model} errors {}", rates.join(" ")));
    }
    Outcome { passed: ok, detail: parts.join("; ") }
}

fn c7_crypto_lemma() -> Outcome {
    let lat = ScaledLattice::new(3, 12f64.sqrt()).unwrap();
    let a = lat.scale();
    let xs = [vec![0.0, 0.4, -1.1], vec![12.3 * a, -7.77 * a, 0.5 * a], vec![1000.0 * a + 0.3, -1000.0 * a, 999.25 * a]];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut min_p: f64 = 1.0;
    for x in &xs {
        let mut cols: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(100_000)).collect();
        for _ in 0..100_000 {
            let u = lat.sample_dither(&mut rng);
            let y: Vec<f64> = x.iter().zip(&u).map(|(x, u)| x + u).collect();
            for (c, v) in cols.iter_mut().zip(lat.mod_lattice(&y).unwrap()) {
                c.push(v);
            }
        }
        for c in cols.iter_mut() {
            min_p = min_p.min(ks_uniform(c, -a / 2.0, a / 2.0).p_value);
        }
    }
    Outcome { passed: min_p >= 0.01, detail: format!("min per-component KS p-value {min_p:.4} over 9 tests") }
}

fn c8_mmse() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for snr in [3.0, 15.0, 255.0] {
        let sweep = mmse_sweep(snr, 101, 12_500, 8).unwrap();
        let (best, _) = sweep.iter().copied().fold((f64::NAN, f64::INFINITY), |b, p| if p.1 < b.1 { p } else { b });
        let opt = snr / (snr + 1.0);
        ok &= (best - opt).abs() <= 0.01 + 1e-12;
        parts.push(format!("S={snr}: argmin {best:.2} vs {opt:.4}"));
    }
    Outcome { passed: ok, detail: parts.join("; ") }
}

/// Counts Λq points in the half-open box `centre + [−a/(2k1), a/(2k1))ⁿ` by scanning.
fn scan_count(chain: &NestedChain, centre: &[f64]) -> usize {
    let delta = chain.quant().scale();
    let half = 0.5 * chain.fine().scale();
    centre
        .iter()
        .map(|&c| {
            let lo = ((c - half) / delta).floor() as i64 - 2;
            let hi = ((c + half) / delta).ceil() as i64 + 2;
            (lo..=hi).filter(|&m| { let p = m as f64 * delta; p >= c - half && p < c + half }).count()
        })
        .product()
}

fn c9_list_cardinality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ok = true;
    for (n, k2) in [(2usize, 2u32), (3, 2), (4, 3)] {
        let chain = NestedChain::build(n, 2, k2, 1.0).unwrap();
        let expected = (k2 as usize).pow(n as u32);
        let by_rate = (n as f64 * (chain.quant_rate() - chain.message_rate())).exp2().round() as usize;
        ok &= by_rate == expected;
        for _ in 0..100 {
            let centre: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let list = chain.enumerate_fine_in_region(&centre).unwrap();
            ok &= list.len() == expected && scan_count(&chain, &centre) == expected;
        }
    }
    Outcome { passed: ok, detail: "(n,k2) in {(2,2),(3,2),(4,3)}, 100 centres each".into() }
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut ok = true;
    for model in [Model::One, Model::Two] {
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            let mut files = Vec::new();
            for (rep, workers) in [(0, 1), (1, 1), (0, 4), (1, 4)] {
                let cfg = RunConfig {
                    model,
                    s1: 40.0,
                    s2: 40.0,
                    trials: 3000,
                    seed: 10,
                    workers: Some(workers),
                    interference: InterferenceSpec::gaussian(1e6),
                    ..RunConfig::default()
                };
                let summary = run_trials(&cfg).unwrap();
                let path = dir.path().join(format!("m{model}-{format:?}-{workers}-{rep}"));
                emit_results(&[summary], format, &path).unwrap();
                files.push(std::fs::read(&path).unwrap());
            }
            ok &= files.windows(2).all(|w| w[0] == w[1]);
        }
    }
    Outcome { passed: ok, detail: "csv+json, both models, workers {1,4}, two runs each".into() }
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("C1 theorem closed forms", c1_theorem_forms),
        ("C2 half-bit gap", c2_half_bit_gap),
        ("C3 derivation identities", c3_identities),
        ("C4 noiseless exactness", c4_noiseless),
        ("C5 finite-n noisy operation", c5_noisy_operation),
        ("C6 interference independence", c6_interference_independence),
        ("C7 crypto-lemma uniformity", c7_crypto_lemma),
        ("C8 MMSE optimality", c8_mmse),
        ("C9 list cardinality", c9_list_cardinality),
        ("C10 determinism", c10_determinism),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let o = run();
        println!("{} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
