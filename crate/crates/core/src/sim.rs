//! Monte Carlo trial runner.
//!
//! Trial `i` of a run seeded with `seed` draws every random quantity from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`. A run with
//! `reseed = false` draws its single interference vector from stream
//! [`FIXED_INTERFERENCE_STREAM`]. Results therefore do not depend on how
//! trials are scheduled across workers, and counters merge by addition.

use std::ops::Add;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{gen_interference, hop1, hop2, ChannelParams, InterferenceSpec, Model};
use crate::error::{Error, Result};
use crate::lattice::{CodebookKind, NestedChain};
use crate::model1::{mmse_coefficient, Model1State};
use crate::model2::Model2State;
use crate::rates::{plan_parameters, PlannedConfig};
use crate::stats::{intervals_overlap, wilson_interval};

pub const FIXED_INTERFERENCE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown output format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub s1: f64,
    pub s2: f64,
    pub n: usize,
    /// `None` for both selects the planner.
    pub k1: Option<u32>,
    pub k2: Option<u32>,
    /// Planner back-off in bits/dim, used only when `k1`/`k2` are auto.
    pub margin: f64,
    pub interference: InterferenceSpec,
    pub trials: u64,
    pub seed: u64,
    /// Model 1 only: replace the hop-2 lattice code with an error-free index pipe.
    pub ideal_hop2: bool,
    pub noiseless: bool,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Model::One,
            s1: 255.0,
            s2: 255.0,
            n: 8,
            k1: Some(2),
            k2: Some(2),
            margin: 0.5,
            interference: InterferenceSpec::constant(0.0),
            trials: 10_000,
            seed: 0,
            ideal_hop2: false,
            noiseless: false,
            alpha1: None,
            alpha2: None,
            output: None,
            format: OutputFormat::Csv,
            workers: None,
        }
    }
}

/// A validated configuration with every derived quantity fixed.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub chain: NestedChain,
    pub params: ChannelParams,
    pub alpha1: f64,
    pub alpha2: f64,
    pub plan: Option<PlannedConfig>,
    fixed_interference: Option<Vec<f64>>,
}

fn check_alpha(name: &str, a: f64) -> Result<f64> {
    if a > 0.0 && a <= 1.0 {
        Ok(a)
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1], got {a}")))
    }
}

impl RunConfig {
    pub fn resolve(&self) -> Result<ResolvedRun> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("dimension n must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        let mut params = ChannelParams::new(self.s1, self.s2)?;
        params.noiseless = self.noiseless;
        self.interference.validate()?;

        let (chain, plan) = match (self.k1, self.k2) {
            (Some(k1), Some(k2)) => (NestedChain::build(self.n, k1, k2, 1.0)?, None),
            (None, None) => {
                let plan = plan_parameters(self.model, self.s1, self.s2, self.margin, self.n)
                    .map_err(|e| Error::Config(e.to_string()))?
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "no feasible nesting for model {} at S1={}, S2={}, margin={}",
                            self.model, self.s1, self.s2, self.margin
                        ))
                    })?;
                (NestedChain::build(self.n, plan.k1, plan.k2, 1.0)?, Some(plan))
            }
            _ => return Err(Error::Config("k1 and k2 must both be set or both be auto".into())),
        };

        if self.ideal_hop2 {
            if self.model != Model::One {
                return Err(Error::Config("ideal_hop2 applies to model 1 only".into()));
            }
            let limit = 0.5 * (1.0 + self.s2).log2();
            if chain.quant_rate() >= limit {
                return Err(Error::Config(format!(
                    "ideal hop 2 needs Rq = {} < {limit}",
                    chain.quant_rate()
                )));
            }
        }

        let alpha1 = check_alpha("alpha1", self.alpha1.unwrap_or_else(|| mmse_coefficient(self.s1)))?;
        let alpha2 = check_alpha("alpha2", self.alpha2.unwrap_or_else(|| mmse_coefficient(self.s2)))?;

        let fixed_interference = if self.interference.reseed {
            None
        } else {
            let mut rng = trial_rng(self.seed, FIXED_INTERFERENCE_STREAM);
            Some(gen_interference(&self.interference, self.n, &mut rng)?)
        };

        Ok(ResolvedRun {
            config: self.clone(),
            chain,
            params,
            alpha1,
            alpha2,
            plan,
            fixed_interference,
        })
    }
}

pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Outcome of one end-to-end block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialRecord {
    pub message_error: bool,
    /// Model 1: true point missing from the relay list. Model 2: wrong `T̂`,
    /// which the destination may still absorb when the miss is one quantizer step.
    pub relay_error: bool,
    /// Model 1 only: wrong list index after hop 2.
    pub hop2_error: bool,
    /// Model 1 only: list resolution did not leave exactly one Λc point.
    pub ambiguity: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub trials: u64,
    pub errors: u64,
    pub relay: u64,
    pub hop2_index: u64,
    pub ambiguity: u64,
}

impl Tally {
    fn from_record(r: TrialRecord) -> Self {
        Self {
            trials: 1,
            errors: r.message_error as u64,
            relay: r.relay_error as u64,
            hop2_index: r.hop2_error as u64,
            ambiguity: r.ambiguity as u64,
        }
    }
}

impl Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            errors: self.errors + o.errors,
            relay: self.relay + o.relay,
            hop2_index: self.hop2_index + o.hop2_index,
            ambiguity: self.ambiguity + o.ambiguity,
        }
    }
}

impl ResolvedRun {
    fn interference(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match &self.fixed_interference {
            Some(s) => Ok(s.clone()),
            None => gen_interference(&self.config.interference, self.config.n, rng),
        }
    }

    pub fn run_trial(&self, index: u64) -> Result<TrialRecord> {
        let mut rng = trial_rng(self.config.seed, index);
        match self.config.model {
            Model::One => self.model1_trial(&mut rng),
            Model::Two => self.model2_trial(&mut rng),
        }
    }

    fn model1_trial(&self, rng: &mut ChaCha8Rng) -> Result<TrialRecord> {
        let chain = &self.chain;
        let st = Model1State::sample(*chain, self.alpha1, self.alpha2, rng)?;
        let s = self.interference(rng)?;

        let y2 = hop1(Model::One, &st.encode_source(), &s, &self.params, rng)?;
        let list = st.relay_list(&st.relay_scale(&y2)?)?;
        let target = chain.index_of(CodebookKind::Quant, &st.list_target(&s)?)?;
        let mut relay_error = true;
        for p in &list.points {
            if chain.index_of(CodebookKind::Quant, p)? == target {
                relay_error = false;
                break;
            }
        }

        let u_hat = if self.config.ideal_hop2 {
            list.index.clone()
        } else {
            let x2 = st.hop2_encode(&list.index)?;
            let y3 = hop2(Model::One, &x2, &s, &self.params, rng)?;
            st.hop2_decode(&y3)?
        };
        let hop2_error = u_hat != list.index;

        let (message_error, ambiguity) = match st.resolve(&st.list_for_index(&u_hat)?, &s)? {
            Ok(t_hat) => (chain.index_of(CodebookKind::Message, &t_hat)? != st.message, false),
            Err(_) => (true, true),
        };
        Ok(TrialRecord { message_error, relay_error, hop2_error, ambiguity })
    }

    fn model2_trial(&self, rng: &mut ChaCha8Rng) -> Result<TrialRecord> {
        let chain = &self.chain;
        let st = Model2State::sample(*chain, self.alpha1, self.alpha2, rng)?;
        let s = self.interference(rng)?;

        let shifted = st.shifted_codeword(&s)?;
        let y2 = hop1(Model::Two, &st.encode_source(&s)?, &s, &self.params, rng)?;
        let t_hat = st.relay_decode(&y2)?;
        let relay_error =
            chain.index_of(CodebookKind::Quant, &t_hat)? != chain.index_of(CodebookKind::Quant, &shifted)?;

        let y3 = hop2(Model::Two, &st.relay_reencode(&t_hat)?, &s, &self.params, rng)?;
        let message_error = st.destination_decode(&y3)? != st.message;
        Ok(TrialRecord { message_error, relay_error, hop2_error: false, ambiguity: false })
    }

    pub fn execute_sequential(&self) -> Result<Tally> {
        (0..self.config.trials).try_fold(Tally::default(), |acc, i| {
            Ok(acc + Tally::from_record(self.run_trial(i)?))
        })
    }

    #[cfg(feature = "parallel")]
    pub fn execute_parallel(&self) -> Result<Tally> {
        use rayon::prelude::*;
        let work = || {
            (0..self.config.trials)
                .into_par_iter()
                .map(|i| self.run_trial(i).map(Tally::from_record))
                .try_reduce(Tally::default, |a, b| Ok(a + b))
        };
        match self.config.workers {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
                .install(work),
            None => work(),
        }
    }

    pub fn execute(&self) -> Result<Tally> {
        #[cfg(feature = "parallel")]
        {
            self.execute_parallel()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.execute_sequential()
        }
    }

    pub fn summarize(&self, tally: Tally, elapsed: Duration) -> RunSummary {
        let (ci_lo, ci_hi) = wilson_interval(tally.errors, tally.trials);
        let c = &self.config;
        RunSummary {
            model: c.model,
            s1: c.s1,
            s2: c.s2,
            n: c.n,
            k1: self.chain.k1(),
            k2: self.chain.k2(),
            rate: self.chain.message_rate(),
            quant_rate: self.chain.quant_rate(),
            sigma2q: self.chain.quant().second_moment(),
            interference: c.interference,
            noiseless: c.noiseless,
            ideal_hop2: c.ideal_hop2,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            trials: tally.trials,
            errors: tally.errors,
            error_rate: tally.errors as f64 / tally.trials as f64,
            ci_lo,
            ci_hi,
            seed: c.seed,
            stage_errors: StageErrors {
                relay: tally.relay,
                hop2_index: tally.hop2_index,
                ambiguity: tally.ambiguity,
            },
            plan: self.plan.clone(),
            elapsed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageErrors {
    pub relay: u64,
    pub hop2_index: u64,
    pub ambiguity: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: Model,
    pub s1: f64,
    pub s2: f64,
    pub n: usize,
    pub k1: u32,
    pub k2: u32,
    pub rate: f64,
    pub quant_rate: f64,
    pub sigma2q: f64,
    pub interference: InterferenceSpec,
    pub noiseless: bool,
    pub ideal_hop2: bool,
    pub alpha1: f64,
    pub alpha2: f64,
    pub trials: u64,
    pub errors: u64,
    pub error_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
    pub stage_errors: StageErrors,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub plan: Option<PlannedConfig>,
    /// Wall-clock time; excluded from serialized output.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl RunSummary {
    pub fn interval(&self) -> (f64, f64) {
        (self.ci_lo, self.ci_hi)
    }
}

/// Runs `config.trials` independent end-to-end blocks.
pub fn run_trials(config: &RunConfig) -> Result<RunSummary> {
    let run = config.resolve()?;
    let start = Instant::now();
    let tally = run.execute()?;
    Ok(run.summarize(tally, start.elapsed()))
}

/// Single-threaded reference path; identical results to [`run_trials`].
pub fn run_trials_sequential(config: &RunConfig) -> Result<RunSummary> {
    let run = config.resolve()?;
    let start = Instant::now();
    let tally = run.execute_sequential()?;
    Ok(run.summarize(tally, start.elapsed()))
}

/// Paired runs that differ only in the interference descriptor.
#[derive(Debug, Clone)]
pub struct InterferenceSweep {
    pub summaries: Vec<RunSummary>,
    /// `(i, j, overlap)` for every pair of runs.
    pub overlaps: Vec<(usize, usize, bool)>,
}

impl InterferenceSweep {
    pub fn all_overlap(&self) -> bool {
        self.overlaps.iter().all(|&(_, _, o)| o)
    }
}

pub fn run_interference_sweep(config: &RunConfig, specs: &[InterferenceSpec]) -> Result<InterferenceSweep> {
    // validate every variant before running any of them
    let runs: Vec<ResolvedRun> = specs
        .iter()
        .map(|spec| RunConfig { interference: *spec, ..config.clone() }.resolve())
        .collect::<Result<_>>()?;
    let summaries = runs
        .iter()
        .map(|run| {
            let start = Instant::now();
            Ok(run.summarize(run.execute()?, start.elapsed()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut overlaps = Vec::new();
    for i in 0..summaries.len() {
        for j in i + 1..summaries.len() {
            overlaps.push((i, j, intervals_overlap(summaries[i].interval(), summaries[j].interval())));
        }
    }
    Ok(InterferenceSweep { summaries, overlaps })
}
