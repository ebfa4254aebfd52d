//! Channel generation and the reference distributions used to validate it.
//!
//! Channels are i.i.d. circularly-symmetric complex Gaussian with per-entry
//! covariance 2 (real and imaginary parts each unit variance), so a squared
//! norm in dimension `N` is chi-square with `2N` degrees of freedom. The
//! module also provides the order-statistic density of ranked norms, CSI
//! error models, a lower-tail exponent estimator, and a Kolmogorov-Smirnov
//! helper; these are the oracles the Monte Carlo experiments are checked
//! against.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::subspace::{CMatrix, CVector, Cx};

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("insufficient tail data: {in_window} samples in window, need at least {need}")]
    InsufficientTailData { in_window: usize, need: usize },
}

// ---------------------------------------------------------------------------
// Channel sets
// ---------------------------------------------------------------------------

/// `K` channel vectors in dimension `N` plus the norm ordering
/// (rank 0 holds the user with the largest squared norm; ties break by
/// original user index).
#[derive(Debug, Clone)]
pub struct ChannelSet {
    h: CMatrix,
    norms_sq: Vec<f64>,
    ordering: Vec<usize>,
}

impl ChannelSet {
    pub fn from_matrix(h: CMatrix) -> Self {
        let norms_sq: Vec<f64> = h.cols().iter().map(|c| c.norm_sq()).collect();
        let mut ordering: Vec<usize> = (0..h.n_cols()).collect();
        ordering.sort_by(|&a, &b| {
            norms_sq[b]
                .partial_cmp(&norms_sq[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        ChannelSet { h, norms_sq, ordering }
    }

    pub fn n_antennas(&self) -> usize {
        self.h.dim()
    }

    pub fn n_users(&self) -> usize {
        self.h.n_cols()
    }

    pub fn channel(&self, user: usize) -> &CVector {
        self.h.col(user)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn norm_sq(&self, user: usize) -> f64 {
        self.norms_sq[user]
    }

    /// Rank -> user map; rank 0 is the largest squared norm.
    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    /// User with the `rank`-th largest squared norm (0-based).
    pub fn ranked_user(&self, rank: usize) -> usize {
        self.ordering[rank]
    }
}

/// Draw `K` independent Rayleigh-fading channel vectors in dimension `N`.
/// Each complex entry has independent standard-normal real and imaginary
/// parts (per-entry complex variance 2).
pub fn sample_channels<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<ChannelSet, ChannelError> {
    if n == 0 || k == 0 {
        return Err(ChannelError::InvalidConfiguration("N and K must be at least 1"));
    }
    if k > n {
        return Err(ChannelError::InvalidConfiguration("K must not exceed N"));
    }
    let cols = (0..k)
        .map(|_| {
            CVector::new(
                (0..n)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Cx::new(re, im)
                    })
                    .collect(),
            )
        })
        .collect();
    Ok(ChannelSet::from_matrix(
        CMatrix::from_cols(n, cols).expect("columns have dimension n"),
    ))
}

// ---------------------------------------------------------------------------
// Chi-square and order statistics
// ---------------------------------------------------------------------------

/// pdf and cdf of the chi-square distribution with `dof` degrees of freedom
/// (`dof` must be even and positive: squared channel norms have `2N`).
///
/// pdf `x^{N-1} e^{-x/2} / (2^N (N-1)!)` with `N = dof/2`; cdf via the
/// regularized lower incomplete gamma function.
pub fn chi2_pdf_cdf(x: f64, dof: usize) -> Result<(f64, f64), ChannelError> {
    if dof == 0 || dof % 2 != 0 {
        return Err(ChannelError::InvalidInput("dof must be even and positive"));
    }
    if !(x >= 0.0) {
        return Err(ChannelError::InvalidInput("x must be nonnegative"));
    }
    let n = (dof / 2) as f64;
    let pdf = if x == 0.0 {
        if dof == 2 {
            0.5
        } else {
            0.0
        }
    } else {
        ((n - 1.0) * x.ln() - 0.5 * x - n * std::f64::consts::LN_2 - ln_gamma(n)).exp()
    };
    let cdf = reg_lower_gamma(n, 0.5 * x);
    Ok((pdf, cdf))
}

/// Density of the `k`-th LARGEST of `K` i.i.d. squared norms in dimension
/// `N` (1-based `k`): `K!/((k-1)!(K-k)!) F^{K-k} (1-F)^{k-1} f`.
pub fn order_stat_pdf(x: f64, k: usize, big_k: usize, n: usize) -> Result<f64, ChannelError> {
    if k == 0 || k > big_k {
        return Err(ChannelError::InvalidInput("rank k must satisfy 1 <= k <= K"));
    }
    if !(x >= 0.0) {
        return Err(ChannelError::InvalidInput("x must be nonnegative"));
    }
    let (f, big_f) = chi2_pdf_cdf(x, 2 * n)?;
    let coef = (ln_gamma(big_k as f64 + 1.0)
        - ln_gamma(k as f64)
        - ln_gamma((big_k - k) as f64 + 1.0))
    .exp();
    Ok(coef * big_f.powi((big_k - k) as i32) * (1.0 - big_f).powi(k as i32 - 1) * f)
}

// ---------------------------------------------------------------------------
// CSI error models
// ---------------------------------------------------------------------------

/// Transmitter-side channel knowledge model. Estimation error is zero-mean
/// complex Gaussian per entry; the power-scaled mode ties the error variance
/// to the transmit power as `1/(1 + P_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CsiModel {
    Perfect,
    FixedError { sigma_e2: f64 },
    PowerScaled,
}

impl CsiModel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if let CsiModel::FixedError { sigma_e2 } = self {
            if !(*sigma_e2 >= 0.0) {
                return Err(ChannelError::InvalidInput("sigma_e2 must be nonnegative"));
            }
        }
        Ok(())
    }

    /// Per-entry complex error variance at transmit power `p_t`.
    pub fn sigma_e2(&self, p_t: f64) -> f64 {
        match self {
            CsiModel::Perfect => 0.0,
            CsiModel::FixedError { sigma_e2 } => *sigma_e2,
            CsiModel::PowerScaled => 1.0 / (1.0 + p_t),
        }
    }
}

/// Estimated channels `H + E` with per-entry complex error variance
/// `sigma_e2` (real/imag parts each `sigma_e2 / 2`). Perfect mode returns
/// the input unchanged. The returned set re-ranks users by estimated norms.
pub fn corrupt_csi<R: Rng + ?Sized>(
    channels: &ChannelSet,
    model: &CsiModel,
    p_t: f64,
    rng: &mut R,
) -> ChannelSet {
    if *model == CsiModel::Perfect {
        return channels.clone();
    }
    let s = (model.sigma_e2(p_t) / 2.0).sqrt();
    let n = channels.n_antennas();
    let cols = channels
        .matrix()
        .cols()
        .iter()
        .map(|c| {
            CVector::new(
                c.as_slice()
                    .iter()
                    .map(|z| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        z + Cx::new(s * re, s * im)
                    })
                    .collect(),
            )
        })
        .collect();
    ChannelSet::from_matrix(CMatrix::from_cols(n, cols).expect("dims preserved"))
}

// ---------------------------------------------------------------------------
// Tail exponent
// ---------------------------------------------------------------------------

/// Minimum number of samples inside the window for a slope fit.
pub const TAIL_MIN_IN_WINDOW: usize = 50;
/// Minimum total sample count for a meaningful lower-tail estimate.
pub const TAIL_MIN_SAMPLES: usize = 100_000;

/// Default fitting window `[0.02, 0.2] * median` of the sample set.
pub fn tail_window_default(samples: &[f64]) -> (f64, f64) {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let med = sorted[sorted.len() / 2];
    (0.02 * med, 0.2 * med)
}

/// Window spanning two empirical quantiles of the sample set. Useful when
/// the default median-scaled window leaves too few points for steep tails.
pub fn tail_window_quantiles(samples: &[f64], q_lo: f64, q_hi: f64) -> (f64, f64) {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len();
    let at = |q: f64| sorted[(((n as f64) * q) as usize).min(n - 1)];
    (at(q_lo), at(q_hi))
}

/// Least-squares slope of `log` empirical CDF vs `log x` over the window:
/// an estimate of the lower-tail exponent (the degrees of freedom of a
/// fading channel when applied to squared channel norms).
pub fn tail_exponent(samples: &[f64], window: (f64, f64)) -> Result<f64, ChannelError> {
    let (x_lo, x_hi) = window;
    if !(x_lo > 0.0 && x_hi > x_lo) {
        return Err(ChannelError::InvalidInput("window must satisfy 0 < lo < hi"));
    }
    if samples.len() < TAIL_MIN_SAMPLES {
        return Err(ChannelError::InvalidInput("need at least 1e5 samples"));
    }
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len() as f64;

    // One point per sample inside the window: (ln x_(i), ln((i+1)/n)).
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut count = 0usize;
    for (i, &x) in sorted.iter().enumerate() {
        if x <= x_lo {
            continue;
        }
        if x > x_hi {
            break;
        }
        let lx = x.ln();
        let ly = ((i + 1) as f64 / n).ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        count += 1;
    }
    if count < TAIL_MIN_IN_WINDOW {
        return Err(ChannelError::InsufficientTailData {
            in_window: count,
            need: TAIL_MIN_IN_WINDOW,
        });
    }
    let m = count as f64;
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(ChannelError::InvalidInput("window too narrow for a slope fit"));
    }
    Ok((m * sxy - sx * sy) / denom)
}

// ---------------------------------------------------------------------------
// Goodness of fit
// ---------------------------------------------------------------------------

/// Kolmogorov-Smirnov statistic of `samples` against a reference cdf.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi.max(lo));
    }
    d
}

/// Critical KS distance at the 1% significance level (Stephens's
/// approximation, accurate for n in the tens and beyond).
pub fn ks_critical_1pct(n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    1.62762 / (sn + 0.12 + 0.11 / sn)
}

// ---------------------------------------------------------------------------
// Gamma functions (local, kept independent of the sampling path)
// ---------------------------------------------------------------------------

/// Natural log of the gamma function (Lanczos, g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEF.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`: series expansion for
/// `x < a + 1`, Lentz continued fraction for the complement otherwise.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // P = prefix * sum_{n>=0} x^n / (a (a+1) ... (a+n)).
        let mut term = 1.0 / a;
        let mut sum = term;
        for n in 1..500 {
            term *= x / (a + n as f64);
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (log_prefix.exp() * sum).clamp(0.0, 1.0)
    } else {
        // Q = prefix * continued fraction; P = 1 - Q.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (1.0 - log_prefix.exp() * h).clamp(0.0, 1.0)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
