//! Invariant battery behind the `verify` subcommand.
//!
//! Each check returns a named pass/fail entry; a failing check never aborts
//! the others. The measurement helpers are public so that experiments can
//! reuse them with other parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::channel::{hop1, hop2, ChannelParams, InterferenceKind, InterferenceSpec, Model};
use crate::error::Result;
use crate::lattice::{CodebookKind, CodewordIndex, NestedChain, ScaledLattice};
use crate::model1::{mmse_coefficient, Model1State};
use crate::model2::Model2State;
use crate::rates::{achievable_rate, achievable_rate_harmonic, gap, is_feasible, plan_parameters};
use crate::sim::{run_trials, RunConfig};
use crate::stats::ks_uniform;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Relay MMSE coefficient used in the effective-noise measurement
    /// instead of `S1/(S1+1)`. The prediction always uses the optimum.
    pub alpha1_override: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 2024, alpha1_override: None }
    }
}

/// Largest distance from zero of `(a − b) mod Λ` over all components.
pub fn mod_distance(lat: &ScaledLattice, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| lat.reduce(x - y).abs()).fold(0.0, f64::max)
}

/// Log-uniform magnitude in `[1e-3, max]` with a random sign.
fn wild_scalar<R: Rng + ?Sized>(rng: &mut R, max: f64) -> f64 {
    let mag = 10f64.powf(rng.random_range(-3.0..max.log10()));
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Largest relative reconstruction error `‖x − (Q(x) + x mod Λ)‖ / ‖x‖`.
pub fn mod_reconstruction_error(samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let n = rng.random_range(1..=8);
        let lat = ScaledLattice::new(n, rng.random_range(0.01..100.0)).expect("valid lattice");
        let x: Vec<f64> = (0..n).map(|_| wild_scalar(&mut rng, 1e9)).collect();
        let q = lat.nearest_point(&x).expect("dims");
        let r = lat.mod_lattice(&x).expect("dims");
        let half = 0.5 * lat.scale();
        if r.iter().any(|&v| !(v >= -half && v < half)) {
            return f64::INFINITY;
        }
        let err: f64 = x.iter().zip(q.iter().zip(&r)).map(|(x, (q, r))| (x - q - r).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(err / norm);
    }
    worst
}

/// Per-component KS p-values of `(x + U) mod Λ`, `U` uniform on V(Λ).
pub fn crypto_lemma_pvalues(lat: &ScaledLattice, x: &[f64], samples: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = lat.dim();
    let mut cols = vec![Vec::with_capacity(samples); n];
    for _ in 0..samples {
        let u = lat.sample_dither(&mut rng);
        let shifted: Vec<f64> = x.iter().zip(&u).map(|(x, u)| x + u).collect();
        for (col, v) in cols.iter_mut().zip(lat.mod_lattice(&shifted)?) {
            col.push(v);
        }
    }
    let half = 0.5 * lat.scale();
    Ok(cols.iter_mut().map(|c| ks_uniform(c, -half, half).p_value).collect())
}

fn random_instance_params<R: Rng + ?Sized>(rng: &mut R) -> (NestedChain, f64, f64, ChannelParams) {
    let n = rng.random_range(1..=8);
    let k1 = rng.random_range(2..=5);
    let k2 = rng.random_range(1..=4);
    let chain = NestedChain::build(n, k1, k2, 1.0).expect("valid chain");
    let alpha1 = rng.random_range(0.05..=1.0);
    let alpha2 = rng.random_range(0.05..=1.0);
    let params = ChannelParams::new(10f64.powf(rng.random_range(-1.0..4.0)), 10f64.powf(rng.random_range(-1.0..4.0)))
        .expect("positive snr");
    (chain, alpha1, alpha2, params)
}

/// Worst relative residual of the relay-side derivation of the
/// list-decoding scheme, over random chains, dithers, coefficients and
/// interference up to `max_s`. Each intermediate expression is compared to
/// the processed relay signal `(α1·Y2 + Uq − U1) mod Λ`.
pub fn model1_identity_error(instances: usize, max_s: f64, noisy: bool, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (chain, alpha1, alpha2, mut params) = random_instance_params(&mut rng);
        params.noiseless = !noisy;
        let n = chain.dim();
        let st = Model1State::sample(chain, alpha1, alpha2, &mut rng)?;
        let s: Vec<f64> = (0..n).map(|_| wild_scalar(&mut rng, max_s)).collect();
        let x1 = st.encode_source();
        let y2 = hop1(Model::One, &x1, &s, &params, &mut rng)?;
        let z2: Vec<f64> = (0..n).map(|i| y2[i] - x1[i] - s[i]).collect();
        let lhs = st.relay_scale(&y2)?;

        let q = chain.quant();
        let a = alpha1;
        let shifted: Vec<f64> = (0..n).map(|i| a * s[i] + st.uq[i]).collect();
        let qq = q.nearest_point(&shifted)?;
        let resid = q.mod_lattice(&shifted)?;
        let steps: [Vec<f64>; 3] = [
            (0..n).map(|i| a * x1[i] + a * s[i] + a * z2[i] + st.uq[i] - st.u1[i]).collect(),
            (0..n)
                .map(|i| st.codeword[i] + st.u1[i] - (1.0 - a) * x1[i] + a * s[i] + a * z2[i] + st.uq[i] - st.u1[i])
                .collect(),
            (0..n)
                .map(|i| st.codeword[i] + qq[i] + resid[i] - (1.0 - a) * x1[i] + a * z2[i])
                .collect(),
        ];
        let scale = s.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for rhs in &steps {
            worst = worst.max(mod_distance(chain.coarse(), &lhs, rhs) / scale);
        }
        // destination: stripping the integer part from v recovers t
        let v = st.list_target(&s)?;
        let back: Vec<f64> = (0..n).map(|i| v[i] - qq[i]).collect();
        worst = worst.max(mod_distance(chain.coarse(), &back, &st.codeword) / scale);
    }
    Ok(worst)
}

/// Worst relative residual of the pre-cancellation derivation (relay and
/// destination), same protocol as [`model1_identity_error`].
pub fn model2_identity_error(instances: usize, max_s: f64, noisy: bool, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (chain, alpha1, alpha2, mut params) = random_instance_params(&mut rng);
        params.noiseless = !noisy;
        let n = chain.dim();
        let st = Model2State::sample(chain, alpha1, alpha2, &mut rng)?;
        let s: Vec<f64> = (0..n).map(|_| wild_scalar(&mut rng, max_s)).collect();
        let scale = s.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let q = chain.quant();

        let shifted_s: Vec<f64> = (0..n).map(|i| alpha2 * s[i] + st.uq[i]).collect();
        let qq = q.nearest_point(&shifted_s)?;
        let t_big: Vec<f64> = chain.coarse().mod_lattice(&(0..n).map(|i| st.codeword[i] - qq[i]).collect::<Vec<_>>())?;
        worst = worst.max(mod_distance(chain.coarse(), &st.shifted_codeword(&s)?, &t_big) / scale);

        let x1 = st.encode_source(&s)?;
        let y2 = hop1(Model::Two, &x1, &s, &params, &mut rng)?;
        let z2: Vec<f64> = (0..n).map(|i| y2[i] - x1[i]).collect();
        let y2p = st.relay_scale(&y2)?;
        let a1 = alpha1;
        let relay_steps: [Vec<f64>; 2] = [
            (0..n).map(|i| a1 * x1[i] + a1 * z2[i] - st.u1[i]).collect(),
            (0..n).map(|i| t_big[i] - (1.0 - a1) * x1[i] + a1 * z2[i]).collect(),
        ];
        for rhs in &relay_steps {
            worst = worst.max(mod_distance(chain.coarse(), &y2p, rhs) / scale);
        }

        // destination, assuming the relay forwarded T exactly
        let x2 = st.relay_reencode(&t_big)?;
        let y3 = hop2(Model::Two, &x2, &s, &params, &mut rng)?;
        let z3: Vec<f64> = (0..n).map(|i| y3[i] - x2[i] - s[i]).collect();
        let y3p = st.destination_scale(&y3)?;
        let a2 = alpha2;
        let resid = q.mod_lattice(&shifted_s)?;
        let dest_steps: [Vec<f64>; 2] = [
            (0..n)
                .map(|i| t_big[i] + st.u2[i] - (1.0 - a2) * x2[i] + a2 * s[i] + a2 * z3[i] + st.uq[i] - st.u2[i])
                .collect(),
            (0..n).map(|i| st.codeword[i] + resid[i] - (1.0 - a2) * x2[i] + a2 * z3[i]).collect(),
        ];
        for rhs in &dest_steps {
            worst = worst.max(mod_distance(chain.coarse(), &y3p, rhs) / scale);
        }
    }
    Ok(worst)
}

/// Per-dimension variance of `(Y2' − v) mod Λ` at the list-decoding relay.
pub fn model1_effective_noise(chain: NestedChain, s1: f64, alpha1: f64, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = ChannelParams::new(s1, 1.0)?;
    let spec = InterferenceSpec::gaussian(1e6);
    let mut acc = 0.0;
    for _ in 0..trials {
        let st = Model1State::sample(chain, alpha1, 1.0, &mut rng)?;
        let s = crate::channel::gen_interference(&spec, chain.dim(), &mut rng)?;
        let y2 = hop1(Model::One, &st.encode_source(), &s, &params, &mut rng)?;
        let y2p = st.relay_scale(&y2)?;
        let v = st.list_target(&s)?;
        acc += y2p.iter().zip(&v).map(|(y, v)| chain.coarse().reduce(y - v).powi(2)).sum::<f64>();
    }
    Ok(acc / (trials * chain.dim()) as f64)
}

/// Per-dimension variance of the destination residual `(α2·S + Uq) mod Λq`.
pub fn model2_residual_variance(chain: NestedChain, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    let mut count = 0usize;
    let spec = InterferenceSpec::new(InterferenceKind::Uniform, 1e7);
    while count < samples {
        let st = Model2State::sample(chain, 1.0, rng.random_range(0.1..1.0), &mut rng)?;
        let s = crate::channel::gen_interference(&spec, chain.dim(), &mut rng)?;
        for r in st.residual(&s)? {
            acc += r * r;
            count += 1;
        }
    }
    Ok(acc / count as f64)
}

/// Effective-noise variance of the MMSE-scaled, dithered receiver,
/// `((α·(X + Z) − U) mod Λ − T) mod Λ`, on the grid `α = i/(points − 1)`.
/// Every grid point reuses the same random draws.
pub fn mmse_sweep(snr: f64, points: usize, trials: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let chain = NestedChain::build(8, 2, 2, 1.0)?;
    let lat = chain.coarse();
    let noise = Normal::new(0.0, (1.0 / snr).sqrt()).expect("positive snr");
    let k = chain.radix(CodebookKind::Quant);
    (0..points)
        .map(|i| {
            let alpha = i as f64 / (points - 1) as f64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut acc = 0.0;
            for _ in 0..trials {
                let t = chain.codeword(CodebookKind::Quant, &CodewordIndex::random(k, chain.dim(), &mut rng))?;
                let u = lat.sample_dither(&mut rng);
                for j in 0..chain.dim() {
                    let x = lat.reduce(t[j] + u[j]);
                    let y = x + noise.sample(&mut rng);
                    let e = lat.reduce(lat.reduce(alpha * y - u[j]) - t[j]);
                    acc += e * e;
                }
            }
            Ok((alpha, acc / (trials * chain.dim()) as f64))
        })
        .collect()
}

pub fn log_grid(points: usize, lo_exp: f64, hi_exp: f64) -> Vec<f64> {
    (0..points)
        .map(|i| 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / (points - 1) as f64))
        .collect()
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn guard(name: &'static str, r: Result<CheckOutcome>) -> CheckOutcome {
    r.unwrap_or_else(|e| outcome(name, false, format!("error: {e}")))
}

pub fn verify_suite(opts: &VerifyOptions) -> VerifyReport {
    let seed = opts.seed;
    let mut checks = Vec::new();

    let err = mod_reconstruction_error(10_000, seed);
    checks.push(outcome("mod_reconstruction", err <= 1e-9, format!("max relative error {err:.3e}")));

    checks.push(guard("crypto_lemma_uniformity", (|| {
        let lat = ScaledLattice::new(2, 12f64.sqrt())?;
        let a = lat.scale();
        let mut min_p: f64 = 1.0;
        for (i, x) in [[0.3, -0.1], [17.2 * a, -3.9 * a], [1000.0 * a + 0.37, -999.5 * a]].iter().enumerate() {
            for p in crypto_lemma_pvalues(&lat, x, 100_000, seed + i as u64)? {
                min_p = min_p.min(p);
            }
        }
        Ok(outcome("crypto_lemma_uniformity", min_p >= 0.01, format!("min KS p-value {min_p:.4}")))
    })()));

    checks.push(guard("model1_derivation_identity", (|| {
        let e = model1_identity_error(1000, 1e9, true, seed)?.max(model1_identity_error(1000, 1e9, false, seed + 1)?);
        Ok(outcome("model1_derivation_identity", e <= 1e-9, format!("max relative residual {e:.3e}")))
    })()));

    checks.push(guard("model2_derivation_identity", (|| {
        let e = model2_identity_error(1000, 1e9, true, seed)?.max(model2_identity_error(1000, 1e9, false, seed + 1)?);
        Ok(outcome("model2_derivation_identity", e <= 1e-9, format!("max relative residual {e:.3e}")))
    })()));

    checks.push(guard("model1_effective_noise", (|| {
        let s1 = 255.0;
        let chain = NestedChain::build(8, 2, 2, 1.0)?;
        let opt = mmse_coefficient(s1);
        let alpha = opts.alpha1_override.unwrap_or(opt);
        let measured = model1_effective_noise(chain, s1, alpha, 125_000, seed)?;
        let predicted = (1.0 - opt).powi(2) + opt * opt / s1 + chain.quant().second_moment();
        let rel = (measured / predicted - 1.0).abs();
        Ok(outcome(
            "model1_effective_noise",
            rel <= 0.10,
            format!("alpha1 {alpha:.4}: measured {measured:.5}, predicted {predicted:.5}"),
        ))
    })()));

    checks.push(guard("model2_residual_variance", (|| {
        let chain = NestedChain::build(8, 2, 2, 1.0)?;
        let v = model2_residual_variance(chain, 100_000, seed)?;
        let target = chain.quant().second_moment();
        let rel = (v / target - 1.0).abs();
        Ok(outcome("model2_residual_variance", rel <= 0.05, format!("measured {v:.5}, sigma2q {target:.5}")))
    })()));

    checks.push(guard("list_cardinality", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ok = true;
        for (n, k2) in [(2usize, 2u32), (3, 2), (4, 3)] {
            let chain = NestedChain::build(n, 2, k2, 1.0)?;
            for _ in 0..100 {
                let c: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
                ok &= chain.enumerate_fine_in_region(&c)?.len() == (k2 as usize).pow(n as u32);
            }
        }
        Ok(outcome("list_cardinality", ok, "|L| = k2^n at 300 random centres".into()))
    })()));

    checks.push(guard("noiseless_exactness", (|| {
        let mut errors = 0;
        for model in [Model::One, Model::Two] {
            for kind in InterferenceKind::ALL {
                let cfg = RunConfig {
                    model,
                    noiseless: true,
                    alpha1: Some(1.0),
                    alpha2: Some(1.0),
                    interference: InterferenceSpec::new(kind, 1e6),
                    trials: 1000,
                    seed,
                    ..RunConfig::default()
                };
                errors += run_trials(&cfg)?.errors;
            }
        }
        Ok(outcome("noiseless_exactness", errors == 0, format!("{errors} errors in 8000 noiseless trials")))
    })()));

    checks.push(guard("theorem_forms_agree", (|| {
        let grid = log_grid(50, -2.0, 6.0);
        let mut worst: f64 = 0.0;
        for &a in &grid {
            for &b in &grid {
                worst = worst.max((achievable_rate(a, b)? - achievable_rate_harmonic(a, b)?).abs());
            }
        }
        Ok(outcome("theorem_forms_agree", worst <= 1e-12, format!("max difference {worst:.3e}")))
    })()));

    checks.push(guard("gap_grid", (|| {
        let grid = log_grid(50, -2.0, 6.0);
        let mut worst: f64 = f64::NEG_INFINITY;
        let mut diag_ok = true;
        for &a in &grid {
            for &b in &grid {
                worst = worst.max(gap(a, b)?);
            }
            if a > 1.0 {
                diag_ok &= (gap(a, a)? - 0.5).abs() <= 1e-9;
            }
        }
        Ok(outcome(
            "gap_grid",
            worst <= 0.5 + 1e-12 && diag_ok,
            format!("max gap {worst:.12}, diagonal exact: {diag_ok}"),
        ))
    })()));

    checks.push(guard("planner_soundness", (|| {
        let mut plans = 0;
        let mut ok = true;
        for model in [Model::One, Model::Two] {
            for &s1 in &[3.0, 15.0, 63.0, 255.0, 1023.0, 1e4] {
                for &s2 in &[3.0, 15.0, 63.0, 255.0, 1023.0, 1e4] {
                    for &margin in &[0.0, 0.25, 0.5] {
                        if let Some(p) = plan_parameters(model, s1, s2, margin, 8)? {
                            plans += 1;
                            ok &= p.constraints.iter().all(|c| c.value < c.bound);
                            ok &= p.quant_rate > p.rate;
                            for k2 in 1..=128 {
                                ok &= !is_feasible(model, s1, s2, margin, p.k1 + 1, k2)?;
                            }
                        }
                    }
                }
            }
        }
        Ok(outcome("planner_soundness", ok, format!("{plans} plans re-validated")))
    })()));

    checks.push(guard("mmse_optimality", (|| {
        let mut ok = true;
        let mut detail = Vec::new();
        for snr in [3.0, 15.0, 255.0] {
            let sweep = mmse_sweep(snr, 101, 12_500, seed)?;
            let (best, _) = sweep.iter().copied().fold((0.0, f64::INFINITY), |b, p| if p.1 < b.1 { p } else { b });
            let opt = mmse_coefficient(snr);
            ok &= (best - opt).abs() <= 0.01 + 1e-12;
            detail.push(format!("S={snr}: argmin {best:.2} vs {opt:.4}"));
        }
        Ok(outcome("mmse_optimality", ok, detail.join("; ")))
    })()));

    VerifyReport { checks }
}
