//! Monte Carlo experiment engine.
//!
//! One experiment sweeps an SNR grid and, per point, draws `trials`
//! independent channel sets, optionally corrupts the transmitter's copy,
//! groups and designs beams on that copy, evaluates rates on the true
//! channels, and accumulates outage counts (per norm rank and overall),
//! sum rates, and rate histograms.
//!
//! Determinism: trial `t` draws from the streams
//! `(master seed, experiment label, domain, t)` regardless of scheduling,
//! trials are processed in fixed 1024-trial chunks, and chunk results are
//! folded in chunk order, so every output is bit-identical for any worker
//! count (and for the sequential build without the `parallel` feature).
//! Channel streams depend only on the trial index, never on the scheme or
//! CSI mode, which gives common random numbers across paired runs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{corrupt_csi, sample_channels, ChannelSet, CsiModel};
use crate::grouping::{Grouping, GroupingConfig, GroupingError};
use crate::streams::{StreamDomain, StreamFactory};
use crate::transceiver::{mixture_rates_mismatched, zf_rates_mismatched, TransceiverError};

const CHUNK_TRIALS: u64 = 1024;

/// Histogram bin width in bits per channel use.
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.05;
/// Histogram range covers rates up to 32 bits per channel use.
pub const HISTOGRAM_BINS: usize = 640;

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(&'static str),
    #[error("slope fit: {0}")]
    SlopeFit(&'static str),
    #[error(transparent)]
    Grouping(#[from] GroupingError),
    #[error(transparent)]
    Transceiver(#[from] TransceiverError),
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Transceiver scheme under test.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    /// Adaptive grouping, inter-group ZF, intra-group superposition/SIC.
    Mixture(GroupingConfig),
    /// Full zero-forcing with per-user power `P_t / K`.
    Zf,
    /// Single-user maximum ratio transmission (requires `K = 1`).
    Mrt,
    /// All users in one superposition/SIC group.
    SingleGroup,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Mixture(GroupingConfig::Algorithm1 { .. }) => "mixture",
            Scheme::Mixture(GroupingConfig::Sus { .. }) => "mixture-sus",
            Scheme::Zf => "zf",
            Scheme::Mrt => "mrt",
            Scheme::SingleGroup => "single_group",
        }
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    /// Schemes evaluated on the same channel draws (common random numbers).
    pub schemes: Vec<Scheme>,
    pub r_th: f64,
    pub c_margin: f64,
    pub snr_grid_db: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    /// Label deriving the RNG streams; runs that must share channel draws
    /// must share this label.
    pub stream_label: String,
    pub csi: CsiModel,
    /// Worker threads; `None` uses the process-global pool. Never affects
    /// results, only wall-clock.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.n == 0 || self.k == 0 {
            return Err(MonteCarloError::InvalidConfig("N and K must be at least 1"));
        }
        if self.k > self.n {
            return Err(MonteCarloError::InvalidConfig("K must not exceed N"));
        }
        if self.schemes.is_empty() {
            return Err(MonteCarloError::InvalidConfig("at least one scheme required"));
        }
        if self.trials == 0 {
            return Err(MonteCarloError::InvalidConfig("trials must be at least 1"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(MonteCarloError::InvalidConfig("SNR grid must be nonempty"));
        }
        for pair in self.snr_grid_db.windows(2) {
            if pair[1] <= pair[0] {
                return Err(MonteCarloError::InvalidConfig(
                    "SNR grid must be strictly increasing",
                ));
            }
        }
        if !(self.r_th >= 0.0) {
            return Err(MonteCarloError::InvalidConfig("target rate must be nonnegative"));
        }
        if !(self.c_margin > 0.0) {
            return Err(MonteCarloError::InvalidConfig("margin must be positive"));
        }
        self.csi
            .validate()
            .map_err(|_| MonteCarloError::InvalidConfig("invalid CSI model"))?;
        for s in &self.schemes {
            match s {
                Scheme::Mixture(gc) => gc.validate()?,
                Scheme::Mrt => {
                    if self.k != 1 {
                        return Err(MonteCarloError::InvalidConfig("MRT requires K = 1"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Outage counts at one SNR point.
#[derive(Debug, Clone)]
pub struct OutagePoint {
    pub snr_db: f64,
    pub trials: u64,
    /// Events per norm rank (rank 0 = largest true channel norm).
    pub per_rank_events: Vec<u64>,
    /// Trials in which any user was in outage.
    pub overall_events: u64,
}

impl OutagePoint {
    pub fn rank_outage(&self, rank: usize) -> f64 {
        self.per_rank_events[rank] as f64 / self.trials as f64
    }

    pub fn overall_outage(&self) -> f64 {
        self.overall_events as f64 / self.trials as f64
    }

    pub fn rank_ci(&self, rank: usize) -> (f64, f64) {
        wilson_interval(self.per_rank_events[rank], self.trials)
    }

    pub fn overall_ci(&self) -> (f64, f64) {
        wilson_interval(self.overall_events, self.trials)
    }
}

#[derive(Debug, Clone)]
pub struct OutageCurve {
    pub scheme: String,
    pub points: Vec<OutagePoint>,
}

#[derive(Debug, Clone)]
pub struct SumRatePoint {
    pub snr_db: f64,
    pub trials: u64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct SumRateCurve {
    pub scheme: String,
    pub points: Vec<SumRatePoint>,
}

/// Pooled per-user rate histogram at one SNR point.
#[derive(Debug, Clone)]
pub struct RateHistogram {
    pub scheme: String,
    pub snr_db: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub total_values: u64,
    /// Rate values strictly below the target rate.
    pub below_target: u64,
    /// Rate values inside `[cap - 0.1, cap]` where `cap = log2(2^r + C)`
    /// is the common saturation cap of the power-distribution design.
    pub near_cap: u64,
    pub cap: f64,
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(events: u64, trials: u64) -> (f64, f64) {
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = events as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let hw = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - hw).max(0.0), (center + hw).min(1.0))
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// What to accumulate during a sweep.
#[derive(Debug, Clone, Default)]
pub struct MeasureRequest {
    pub outage: bool,
    pub sum_rate: bool,
    /// SNR points (matched against the grid within 1e-9) at which pooled
    /// rate histograms are recorded.
    pub histogram_snr_db: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub outage: Vec<OutageCurve>,
    pub sum_rate: Vec<SumRateCurve>,
    pub histograms: Vec<RateHistogram>,
}

#[derive(Clone)]
struct SchemeAccum {
    rank_events: Vec<u64>,
    overall_events: u64,
    sum_rate: f64,
    sum_rate_sq: f64,
    hist: Vec<u64>,
    below_target: u64,
    near_cap: u64,
}

impl SchemeAccum {
    fn new(k: usize, with_hist: bool) -> Self {
        SchemeAccum {
            rank_events: vec![0; k],
            overall_events: 0,
            sum_rate: 0.0,
            sum_rate_sq: 0.0,
            hist: if with_hist { vec![0; HISTOGRAM_BINS] } else { Vec::new() },
            below_target: 0,
            near_cap: 0,
        }
    }

    fn merge(&mut self, other: &SchemeAccum) {
        for (a, b) in self.rank_events.iter_mut().zip(&other.rank_events) {
            *a += b;
        }
        self.overall_events += other.overall_events;
        self.sum_rate += other.sum_rate;
        self.sum_rate_sq += other.sum_rate_sq;
        if !self.hist.is_empty() {
            for (a, b) in self.hist.iter_mut().zip(&other.hist) {
                *a += b;
            }
        }
        self.below_target += other.below_target;
        self.near_cap += other.near_cap;
    }
}

/// Run the configured sweep and collect the requested measures.
pub fn run_measures(
    config: &ExperimentConfig,
    request: &MeasureRequest,
) -> Result<ExperimentResults, MonteCarloError> {
    config.validate()?;

    let run = || -> ExperimentResults {
        let factory = StreamFactory::new(
            config.master_seed,
            StreamFactory::experiment_id(&config.stream_label),
        );
        let cap = (2f64.powf(config.r_th) + config.c_margin).log2();
        let mut outage: Vec<OutageCurve> = Vec::new();
        let mut sum_rate: Vec<SumRateCurve> = Vec::new();
        let mut histograms: Vec<RateHistogram> = Vec::new();
        if request.outage {
            outage = config
                .schemes
                .iter()
                .map(|s| OutageCurve { scheme: s.name().to_string(), points: Vec::new() })
                .collect();
        }
        if request.sum_rate {
            sum_rate = config
                .schemes
                .iter()
                .map(|s| SumRateCurve { scheme: s.name().to_string(), points: Vec::new() })
                .collect();
        }

        for &snr_db in &config.snr_grid_db {
            let want_hist = request
                .histogram_snr_db
                .iter()
                .any(|h| (h - snr_db).abs() < 1e-9);
            let accums = run_point(config, &factory, snr_db, want_hist, cap);
            for (si, acc) in accums.into_iter().enumerate() {
                if request.outage {
                    outage[si].points.push(OutagePoint {
                        snr_db,
                        trials: config.trials,
                        per_rank_events: acc.rank_events.clone(),
                        overall_events: acc.overall_events,
                    });
                }
                if request.sum_rate {
                    let n = config.trials as f64;
                    let mean = acc.sum_rate / n;
                    let var = (acc.sum_rate_sq / n - mean * mean).max(0.0);
                    sum_rate[si].points.push(SumRatePoint {
                        snr_db,
                        trials: config.trials,
                        mean,
                        stderr: (var / n).sqrt(),
                    });
                }
                if want_hist {
                    histograms.push(RateHistogram {
                        scheme: config.schemes[si].name().to_string(),
                        snr_db,
                        bin_width: HISTOGRAM_BIN_WIDTH,
                        counts: acc.hist,
                        total_values: config.trials * config.k as u64,
                        below_target: acc.below_target,
                        near_cap: acc.near_cap,
                        cap,
                    });
                }
            }
        }
        ExperimentResults { outage, sum_rate, histograms }
    };

    #[cfg(feature = "parallel")]
    {
        if let Some(w) = config.workers {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|_| MonteCarloError::InvalidConfig("cannot build worker pool"))?;
            return Ok(pool.install(run));
        }
    }
    Ok(run())
}

fn run_point(
    config: &ExperimentConfig,
    factory: &StreamFactory,
    snr_db: f64,
    with_hist: bool,
    cap: f64,
) -> Vec<SchemeAccum> {
    let p_t = 10f64.powf(snr_db / 10.0);
    let n_chunks = config.trials.div_ceil(CHUNK_TRIALS);

    let run_chunk = |chunk: u64| -> Vec<SchemeAccum> {
        let lo = chunk * CHUNK_TRIALS;
        let hi = ((chunk + 1) * CHUNK_TRIALS).min(config.trials);
        let mut accums: Vec<SchemeAccum> = config
            .schemes
            .iter()
            .map(|_| SchemeAccum::new(config.k, with_hist))
            .collect();
        let mut rates_by_rank = vec![0.0f64; config.k];
        for trial in lo..hi {
            let mut ch_rng = factory.trial_rng(StreamDomain::Channels, trial);
            let truth = sample_channels(config.n, config.k, &mut ch_rng)
                .expect("validated dimensions");
            let design = match config.csi {
                CsiModel::Perfect => None,
                ref model => {
                    let mut noise_rng = factory.trial_rng(StreamDomain::CsiNoise, trial);
                    Some(corrupt_csi(&truth, model, p_t, &mut noise_rng))
                }
            };
            let design_ref = design.as_ref().unwrap_or(&truth);
            let mut solver_rng = factory.trial_rng(StreamDomain::Solver, trial);

            for (si, scheme) in config.schemes.iter().enumerate() {
                let rates = eval_scheme(scheme, &truth, design_ref, p_t, config, &mut solver_rng);
                for (r, slot) in rates_by_rank.iter_mut().enumerate() {
                    *slot = rates[truth.ranked_user(r)];
                }
                record(&mut accums[si], &rates_by_rank, config.r_th, with_hist, cap);
            }
        }
        accums
    };

    #[cfg(feature = "parallel")]
    let per_chunk: Vec<Vec<SchemeAccum>> =
        (0..n_chunks).into_par_iter().map(run_chunk).collect();
    #[cfg(not(feature = "parallel"))]
    let per_chunk: Vec<Vec<SchemeAccum>> = (0..n_chunks).map(run_chunk).collect();

    // Ordered fold keeps floating-point sums identical for any worker count.
    let mut totals: Vec<SchemeAccum> = config
        .schemes
        .iter()
        .map(|_| SchemeAccum::new(config.k, with_hist))
        .collect();
    for chunk in per_chunk {
        for (t, c) in totals.iter_mut().zip(&chunk) {
            t.merge(c);
        }
    }
    totals
}

fn eval_scheme<R: rand::Rng + ?Sized>(
    scheme: &Scheme,
    truth: &ChannelSet,
    design: &ChannelSet,
    p_t: f64,
    config: &ExperimentConfig,
    solver_rng: &mut R,
) -> Vec<f64> {
    match scheme {
        Scheme::Mixture(gc) => {
            let grouping = gc.group(design).expect("validated thresholds");
            mixture_rates_mismatched(
                truth,
                design,
                &grouping,
                p_t,
                config.r_th,
                config.c_margin,
                solver_rng,
            )
            .expect("validated inputs")
            .achieved
        }
        Scheme::SingleGroup => {
            let grouping = Grouping::single_group(design);
            mixture_rates_mismatched(
                truth,
                design,
                &grouping,
                p_t,
                config.r_th,
                config.c_margin,
                solver_rng,
            )
            .expect("validated inputs")
            .achieved
        }
        Scheme::Zf => zf_rates_mismatched(truth, design, p_t),
        Scheme::Mrt => {
            let w = design
                .channel(0)
                .normalized()
                .unwrap_or_else(|| crate::subspace::CVector::basis(truth.n_antennas(), 0));
            vec![(1.0 + p_t * truth.channel(0).inner(&w).norm_sqr()).log2()]
        }
    }
}

fn record(acc: &mut SchemeAccum, rates_by_rank: &[f64], r_th: f64, with_hist: bool, cap: f64) {
    let mut any = false;
    let mut sum = 0.0;
    for (rank, &r) in rates_by_rank.iter().enumerate() {
        if r < r_th {
            acc.rank_events[rank] += 1;
            any = true;
        }
        sum += r;
        if with_hist {
            let bin = ((r / HISTOGRAM_BIN_WIDTH) as usize).min(HISTOGRAM_BINS - 1);
            acc.hist[bin] += 1;
            if r < r_th {
                acc.below_target += 1;
            }
            if r >= cap - 0.1 && r <= cap {
                acc.near_cap += 1;
            }
        }
    }
    if any {
        acc.overall_events += 1;
    }
    acc.sum_rate += sum;
    acc.sum_rate_sq += sum * sum;
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Outage curves for every configured scheme, on common channel draws.
pub fn estimate_outage(config: &ExperimentConfig) -> Result<Vec<OutageCurve>, MonteCarloError> {
    let res = run_measures(
        config,
        &MeasureRequest { outage: true, ..Default::default() },
    )?;
    Ok(res.outage)
}

/// Mean sum rate (with standard error) per SNR point per scheme.
pub fn avg_sum_rate(config: &ExperimentConfig) -> Result<Vec<SumRateCurve>, MonteCarloError> {
    let res = run_measures(
        config,
        &MeasureRequest { sum_rate: true, ..Default::default() },
    )?;
    Ok(res.sum_rate)
}

/// Pooled per-user rate histogram at one SNR point per scheme.
pub fn rate_histogram(
    config: &ExperimentConfig,
    snr_db: f64,
) -> Result<Vec<RateHistogram>, MonteCarloError> {
    let mut cfg = config.clone();
    cfg.snr_grid_db = vec![snr_db];
    let res = run_measures(
        &cfg,
        &MeasureRequest { histogram_snr_db: vec![snr_db], ..Default::default() },
    )?;
    Ok(res.histograms)
}

/// Paired outage curves under fixed-variance and power-scaled CSI error,
/// on identical channel streams.
#[derive(Debug, Clone)]
pub struct CsiFloorStudy {
    pub fixed: Vec<OutageCurve>,
    pub power_scaled: Vec<OutageCurve>,
}

pub fn csi_floor_study(
    config: &ExperimentConfig,
    fixed_sigma_e2: f64,
) -> Result<CsiFloorStudy, MonteCarloError> {
    let mut fixed_cfg = config.clone();
    fixed_cfg.csi = CsiModel::FixedError { sigma_e2: fixed_sigma_e2 };
    let mut scaled_cfg = config.clone();
    scaled_cfg.csi = CsiModel::PowerScaled;
    Ok(CsiFloorStudy {
        fixed: estimate_outage(&fixed_cfg)?,
        power_scaled: estimate_outage(&scaled_cfg)?,
    })
}

/// Slope-fit target: one norm rank (0-based) or the overall outage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeTarget {
    Rank(usize),
    Overall,
}

/// Outage estimates qualify for a slope fit inside this band: above the
/// rare-event noise floor, below saturation.
pub const SLOPE_FIT_RANGE: (f64, f64) = (1e-5, 1e-1);
/// Minimum outage events for a point to qualify.
pub const SLOPE_MIN_EVENTS: u64 = 50;

/// Least-squares slope of `-log10(outage)` against `log10(P_t)` over the
/// qualifying grid points; the high-SNR limit of this quantity is the
/// diversity order.
pub fn fit_slope(curve: &OutageCurve, target: SlopeTarget) -> Result<f64, MonteCarloError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in &curve.points {
        let (events, estimate) = match target {
            SlopeTarget::Rank(r) => (p.per_rank_events[r], p.rank_outage(r)),
            SlopeTarget::Overall => (p.overall_events, p.overall_outage()),
        };
        if events < SLOPE_MIN_EVENTS {
            continue;
        }
        if estimate < SLOPE_FIT_RANGE.0 || estimate > SLOPE_FIT_RANGE.1 {
            continue;
        }
        xs.push(p.snr_db / 10.0);
        ys.push(-estimate.log10());
    }
    if xs.len() < 3 {
        return Err(MonteCarloError::SlopeFit(
            "need at least 3 qualifying grid points",
        ));
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(MonteCarloError::SlopeFit("degenerate grid"));
    }
    Ok((n * sxy - sx * sy) / denom)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn mrt_config(n: usize, snr_db: Vec<f64>, trials: u64) -> ExperimentConfig {
        ExperimentConfig {
            n,
            k: 1,
            schemes: vec![Scheme::Mrt],
            r_th: 1.0,
            c_margin: 2.0,
            snr_grid_db: snr_db,
            trials,
            master_seed: 7,
            stream_label: "test-mrt".into(),
            csi: CsiModel::Perfect,
            workers: Some(2),
        }
    }

    fn mixture_config(n: usize, k: usize) -> ExperimentConfig {
        ExperimentConfig {
            n,
            k,
            schemes: vec![Scheme::Mixture(GroupingConfig::Algorithm1 { theta_th: 0.9 })],
            r_th: 1.5,
            c_margin: 2.0,
            snr_grid_db: vec![6.0, 10.0, 14.0],
            trials: 20_000,
            master_seed: 11,
            stream_label: "test-mixture".into(),
            csi: CsiModel::Perfect,
            workers: Some(2),
        }
    }

    #[test]
    fn validation_catches_bad_configs() {
        let mut cfg = mrt_config(2, vec![10.0], 100);
        cfg.k = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = mrt_config(2, vec![10.0, 10.0], 100);
        cfg.k = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = mrt_config(2, vec![10.0], 0);
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = mrt_config(2, vec![10.0], 100);
        cfg.k = 2;
        assert!(cfg.validate().is_err(), "MRT requires K = 1");
    }

    #[test]
    fn mrt_outage_matches_exact_exponential_law() {
        // N = 1, snr 20 dB: exact outage 1 - exp(-(2^r - 1)/(2 snr)).
        let cfg = mrt_config(1, vec![20.0], 200_000);
        let curves = estimate_outage(&cfg).unwrap();
        let est = curves[0].points[0].overall_outage();
        let exact = 1.0 - (-(2f64.powf(1.0) - 1.0) / (2.0 * 100.0)).exp();
        let stderr = (exact * (1.0 - exact) / 200_000f64).sqrt();
        assert!(
            (est - exact).abs() < 3.0 * stderr,
            "estimate {} exact {} (3se {})",
            est,
            exact,
            3.0 * stderr
        );
    }

    #[test]
    fn zero_target_rate_never_outages() {
        let mut cfg = mrt_config(2, vec![0.0, 6.0, 12.0], 5_000);
        cfg.r_th = 0.0;
        let curves = estimate_outage(&cfg).unwrap();
        for p in &curves[0].points {
            assert_eq!(p.overall_events, 0);
        }
    }

    #[test]
    fn reproducible_across_worker_counts() {
        let mut cfg = mixture_config(3, 3);
        cfg.trials = 4_000;
        let a = estimate_outage(&cfg).unwrap();
        cfg.workers = Some(8);
        let b = estimate_outage(&cfg).unwrap();
        cfg.workers = Some(1);
        let c = estimate_outage(&cfg).unwrap();
        for ((pa, pb), pc) in a[0]
            .points
            .iter()
            .zip(&b[0].points)
            .zip(&c[0].points)
        {
            assert_eq!(pa.per_rank_events, pb.per_rank_events);
            assert_eq!(pa.per_rank_events, pc.per_rank_events);
            assert_eq!(pa.overall_events, pb.overall_events);
        }
        // Sum-rate accumulators must be bit-identical too.
        let s1 = avg_sum_rate(&cfg).unwrap();
        cfg.workers = Some(8);
        let s2 = avg_sum_rate(&cfg).unwrap();
        for (x, y) in s1[0].points.iter().zip(&s2[0].points) {
            assert_eq!(x.mean.to_bits(), y.mean.to_bits());
            assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
        }
    }

    #[test]
    fn scheme_results_independent_of_companions() {
        // ZF results must be identical whether run alone or paired with the
        // mixture scheme on the same label (common random numbers).
        let mut cfg = mixture_config(3, 3);
        cfg.trials = 2_000;
        cfg.schemes = vec![
            Scheme::Mixture(GroupingConfig::Algorithm1 { theta_th: 0.9 }),
            Scheme::Zf,
        ];
        let paired = estimate_outage(&cfg).unwrap();
        cfg.schemes = vec![Scheme::Zf];
        let alone = estimate_outage(&cfg).unwrap();
        for (pa, pb) in paired[1].points.iter().zip(&alone[0].points) {
            assert_eq!(pa.per_rank_events, pb.per_rank_events);
            assert_eq!(pa.overall_events, pb.overall_events);
        }
    }

    #[test]
    fn outage_monotone_and_rank_ordered() {
        let cfg = mixture_config(3, 2);
        let curves = estimate_outage(&cfg).unwrap();
        let pts = &curves[0].points;
        for pair in pts.windows(2) {
            // Monotone within 3 standard errors.
            let (lo, hi) = (pair[1].overall_outage(), pair[0].overall_outage());
            let se = (hi.max(1e-9) / pair[0].trials as f64).sqrt();
            assert!(lo <= hi + 3.0 * se, "outage must not grow with SNR");
        }
        for p in pts {
            // Weaker rank fails at least as often (within 3 se).
            let se = (p.rank_outage(1).max(1e-9) / p.trials as f64).sqrt();
            assert!(p.rank_outage(0) <= p.rank_outage(1) + 3.0 * se);
        }
    }

    #[test]
    fn fit_slope_recovers_synthetic_exponent() {
        // outage = P_t^{-3} exactly.
        let trials = 1_000_000_000u64;
        let points: Vec<OutagePoint> = [10.0f64, 12.0, 14.0]
            .iter()
            .map(|&snr_db| {
                let p_t = 10f64.powf(snr_db / 10.0);
                let events = (p_t.powi(-3) * trials as f64).round() as u64;
                OutagePoint {
                    snr_db,
                    trials,
                    per_rank_events: vec![events],
                    overall_events: events,
                }
            })
            .collect();
        let curve = OutageCurve { scheme: "synthetic".into(), points };
        let slope = fit_slope(&curve, SlopeTarget::Overall).unwrap();
        assert!((slope - 3.0).abs() < 1e-3, "slope {}", slope);
    }

    #[test]
    fn fit_slope_needs_enough_points() {
        let curve = OutageCurve {
            scheme: "sparse".into(),
            points: vec![OutagePoint {
                snr_db: 10.0,
                trials: 1000,
                per_rank_events: vec![100],
                overall_events: 100,
            }],
        };
        assert!(fit_slope(&curve, SlopeTarget::Overall).is_err());
    }

    #[test]
    fn mrt_slope_matches_antenna_count() {
        // N = 2 at moderate SNR: fitted slope within 0.3 of 2.
        let cfg = mrt_config(2, vec![10.0, 12.0, 14.0, 16.0], 400_000);
        let curves = estimate_outage(&cfg).unwrap();
        let slope = fit_slope(&curves[0], SlopeTarget::Overall).unwrap();
        assert!((slope - 2.0).abs() < 0.3, "slope {}", slope);
    }

    #[test]
    fn histogram_accounts_every_rate_value() {
        let mut cfg = mixture_config(3, 3);
        cfg.trials = 3_000;
        cfg.snr_grid_db = vec![12.0];
        let hists = rate_histogram(&cfg, 12.0).unwrap();
        assert_eq!(hists.len(), 1);
        let h = &hists[0];
        let total: u64 = h.counts.iter().sum();
        assert_eq!(total, h.total_values);
        assert_eq!(h.total_values, 3 * 3_000);
        assert!((h.cap - (2f64.powf(1.5) + 2.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn single_user_histogram_is_unimodal_mrt() {
        let mut cfg = mrt_config(2, vec![10.0], 50_000);
        cfg.r_th = 1.5;
        let hists = rate_histogram(&cfg, 10.0).unwrap();
        let h = &hists[0];
        // One user, all mass accounted, and concentrated around
        // log2(1 + 10 * E||h||^2) = log2(41) within a few bits.
        assert_eq!(h.counts.iter().sum::<u64>(), 50_000);
        let mode_bin = h
            .counts
            .iter()
            .enumerate()
            .max_by_key(|(_, &c)| c)
            .map(|(i, _)| i)
            .unwrap();
        let mode_rate = mode_bin as f64 * h.bin_width;
        assert!((mode_rate - 41f64.log2()).abs() < 1.5, "mode {}", mode_rate);
    }

    #[test]
    fn csi_fixed_zero_matches_perfect() {
        let mut cfg = mixture_config(3, 2);
        cfg.trials = 2_000;
        let perfect = estimate_outage(&cfg).unwrap();
        cfg.csi = CsiModel::FixedError { sigma_e2: 0.0 };
        let zero_err = estimate_outage(&cfg).unwrap();
        for (pa, pb) in perfect[0].points.iter().zip(&zero_err[0].points) {
            assert_eq!(pa.per_rank_events, pb.per_rank_events);
            assert_eq!(pa.overall_events, pb.overall_events);
        }
    }

    #[test]
    fn csi_study_pairs_same_channels() {
        let mut cfg = mixture_config(3, 2);
        cfg.trials = 1_000;
        cfg.snr_grid_db = vec![10.0, 20.0];
        let study = csi_floor_study(&cfg, 0.1).unwrap();
        assert_eq!(study.fixed[0].points.len(), 2);
        assert_eq!(study.power_scaled[0].points.len(), 2);
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        for &(e, n) in &[(0u64, 100u64), (5, 100), (50, 100), (100, 100)] {
            let (lo, hi) = wilson_interval(e, n);
            let p = e as f64 / n as f64;
            assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
    }
}
