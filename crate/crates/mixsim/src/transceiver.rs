//! Beam design and rate computation.
//!
//! Inter-group zero-forcing reduces each group to an isolated broadcast
//! channel over the projected effective channels. Inside a group all users
//! share one unit-norm beam and a geometric power split; receivers decode
//! weaker users' messages first and cancel them. This module provides:
//!
//! - the max-min common-beam solver with its proven `1/c` floor
//!   ([`maxmin_beam`], [`c_constant`]),
//! - the power-distribution construction that keeps every SIC stage's
//!   rate cap strictly above a target rate ([`delta_solution`],
//!   [`saturation_caps`]),
//! - exact SIC rates and the closed-form per-user rate lower bounds
//!   ([`group_rates_exact`], [`prop1_lower_bounds`]),
//! - full ZF / single-user MRT baselines and the end-to-end mixture rate
//!   evaluation, with or without transmitter-side CSI mismatch.
//!
//! Noise variance is 1 throughout, so SNR coincides with transmit power.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::channel::ChannelSet;
use crate::grouping::Grouping;
use crate::subspace::{CVector, Cx, OrthoBasis};

#[derive(Debug, Error, PartialEq)]
pub enum TransceiverError {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

// ---------------------------------------------------------------------------
// Constants and power distribution
// ---------------------------------------------------------------------------

/// The max-min floor constant: `L` for `L <= 3` (where the semidefinite
/// relaxation is tight), `8 L^2` beyond.
pub fn c_constant(l: usize) -> Result<u64, TransceiverError> {
    if l < 1 {
        return Err(TransceiverError::InvalidInput("group size must be at least 1"));
    }
    let l = l as u64;
    Ok(if l <= 3 { l } else { 8 * l * l })
}

/// Power-distribution factors for an `l`-user group with target rate
/// `r_th` and margin `c_margin`:
/// `delta_1 = 1/(2^r + C)^{l-1}`, `delta_i = (2^r - 1 + C)/(2^r + C)^{l-i+1}`.
///
/// The tuple sums to one and satisfies
/// `delta_i / sum_{m<i} delta_m = 2^r - 1 + C > 2^r - 1` for every `i >= 2`,
/// which keeps each SIC stage's saturation cap strictly above the target.
pub fn delta_solution(l: usize, r_th: f64, c_margin: f64) -> Result<Vec<f64>, TransceiverError> {
    if l < 1 {
        return Err(TransceiverError::InvalidInput("group size must be at least 1"));
    }
    if !(r_th > 0.0) {
        return Err(TransceiverError::InvalidInput("target rate must be positive"));
    }
    if !(c_margin > 0.0) {
        return Err(TransceiverError::InvalidInput("margin must be positive"));
    }
    let base = 2f64.powf(r_th) + c_margin;
    let mut deltas = Vec::with_capacity(l);
    deltas.push(base.powi(-(l as i32 - 1)));
    for i in 2..=l {
        deltas.push((base - 1.0) * base.powi(-((l - i + 1) as i32)));
    }
    Ok(deltas)
}

/// Per-user rate caps under a fixed power split: the first user's rate
/// scales with power (cap infinity); user `i >= 2` saturates at
/// `log2(1 + delta_i / sum_{m<i} delta_m)`.
pub fn saturation_caps(deltas: &[f64]) -> Vec<f64> {
    let mut caps = Vec::with_capacity(deltas.len());
    let mut cum = 0.0;
    for (i, &d) in deltas.iter().enumerate() {
        if i == 0 || cum <= 0.0 {
            caps.push(f64::INFINITY);
        } else {
            caps.push((1.0 + d / cum).log2());
        }
        cum += d;
    }
    caps
}

// ---------------------------------------------------------------------------
// Max-min common beam
// ---------------------------------------------------------------------------

/// Solver controls: number of Gaussian randomization candidates and the
/// projected-subgradient polish applied to each.
#[derive(Debug, Clone, Copy)]
pub struct MaxMinParams {
    pub randomizations: usize,
    pub polish_iters: usize,
    pub step0: f64,
}

impl Default for MaxMinParams {
    fn default() -> Self {
        MaxMinParams { randomizations: 200, polish_iters: 500, step0: 0.1 }
    }
}

/// Result of the max-min beam search.
#[derive(Debug, Clone)]
pub struct MaxMinBeam {
    /// Unit-norm common beam.
    pub beam: CVector,
    /// `min_i |v_i^H w|^2` attained by `beam`.
    pub achieved: f64,
    /// Whether `achieved >= 1/c(L) - 1e-9`, the proven floor of the optimum.
    pub certificate_ok: bool,
}

fn objective(units: &[CVector], w: &CVector) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for (i, v) in units.iter().enumerate() {
        let val = v.inner(w).norm_sqr();
        if val < best {
            best = val;
            arg = i;
        }
    }
    (best, arg)
}

/// Maximize `min_i |v_i^H w|^2` over unit-norm `w` for unit-norm inputs.
///
/// `L = 1` is maximum-ratio transmission; `L = 2` has the closed-form
/// phase-aligned bisector optimum `(1 + |v_1^H v_2|)/2`. For `L >= 3` the
/// search seeds with the principal eigenvector of `sum v_i v_i^H` plus
/// Gaussian randomizations of that matrix and polishes every candidate by
/// projected subgradient ascent on the sphere, keeping the best iterate.
/// `certificate_ok` reports whether the proven `1/c` floor was reached.
pub fn maxmin_beam<R: Rng + ?Sized>(
    units: &[CVector],
    rng: &mut R,
) -> Result<MaxMinBeam, TransceiverError> {
    maxmin_beam_with(units, MaxMinParams::default(), rng)
}

pub fn maxmin_beam_with<R: Rng + ?Sized>(
    units: &[CVector],
    params: MaxMinParams,
    rng: &mut R,
) -> Result<MaxMinBeam, TransceiverError> {
    let l = units.len();
    if l == 0 {
        return Err(TransceiverError::InvalidInput("need at least one channel"));
    }
    let dim = units[0].dim();
    for v in units {
        if v.dim() != dim {
            return Err(TransceiverError::InvalidInput("channel dimensions differ"));
        }
        if (v.norm() - 1.0).abs() > 1e-10 {
            return Err(TransceiverError::InvalidInput("channels must be unit-norm"));
        }
    }
    let c = c_constant(l)? as f64;
    let floor = 1.0 / c;

    if l == 1 {
        return Ok(MaxMinBeam { beam: units[0].clone(), achieved: 1.0, certificate_ok: true });
    }
    if l == 2 {
        // Align phases so v_1^H v_2 becomes real nonnegative, then bisect.
        // The minimum cannot exceed (1 + rho)/2 (largest Gram eigenvalue
        // over two), and the bisector attains it, so this is the optimum.
        let cross = units[0].inner(&units[1]);
        let rho = cross.norm();
        let phase = if rho > 0.0 { cross / rho } else { Cx::new(1.0, 0.0) };
        let mut sum = units[0].scaled(phase);
        sum.add_scaled(Cx::new(1.0, 0.0), &units[1]);
        let beam = sum.normalized().unwrap_or_else(|| units[0].clone());
        let (achieved, _) = objective(units, &beam);
        return Ok(MaxMinBeam { beam, achieved, certificate_ok: achieved >= floor - 1e-9 });
    }

    // Principal eigenvector of sum v_i v_i^H by power iteration, seeded
    // with the phase-free candidate sum v_i.
    let mut seed = CVector::zeros(dim);
    for v in units {
        seed.add_scaled(Cx::new(1.0, 0.0), v);
    }
    let mut eig = seed.normalized().unwrap_or_else(|| units[0].clone());
    for _ in 0..100 {
        let mut next = CVector::zeros(dim);
        for v in units {
            let coef = v.inner(&eig);
            next.add_scaled(coef, v);
        }
        match next.normalized() {
            Some(u) => eig = u,
            None => break,
        }
    }

    let mut best_w = eig.clone();
    let mut best_f = objective(units, &best_w).0;

    let polish = |start: CVector, best_w: &mut CVector, best_f: &mut f64| {
        let mut w = start;
        for t in 1..=params.polish_iters {
            let (f, arg) = objective(units, &w);
            if f > *best_f {
                *best_f = f;
                *best_w = w.clone();
            }
            let step = params.step0 / (t as f64).sqrt();
            let v = &units[arg];
            let coef = v.inner(&w) * Cx::new(step, 0.0);
            let mut next = w;
            next.add_scaled(coef, v);
            match next.normalized() {
                Some(u) => w = u,
                None => return,
            }
        }
        let (f, _) = objective(units, &w);
        if f > *best_f {
            *best_f = f;
            *best_w = w;
        }
    };

    polish(eig, &mut best_w, &mut best_f);
    let half_sqrt = 1.0 / 2f64.sqrt();
    for _ in 0..params.randomizations {
        // Gaussian rounding of the feasible covariance sum v_i v_i^H:
        // sum_i z_i v_i with z ~ CN(0, I) has exactly that covariance.
        let mut cand = CVector::zeros(dim);
        for v in units {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            cand.add_scaled(Cx::new(re * half_sqrt, im * half_sqrt), v);
        }
        let Some(cand) = cand.normalized() else { continue };
        polish(cand, &mut best_w, &mut best_f);
    }

    Ok(MaxMinBeam {
        beam: best_w,
        achieved: best_f,
        certificate_ok: best_f >= floor - 1e-9,
    })
}

// ---------------------------------------------------------------------------
// Rates and bounds
// ---------------------------------------------------------------------------

/// SIC rates with per-receiver extra interference (zero in the perfect
/// inter-group ZF case). `gains[j] = |g_j^H w|^2` in the group's member
/// order, strongest designed receiver first.
fn sic_rates(gains: &[f64], interference: &[f64], deltas: &[f64], p: f64) -> Vec<f64> {
    let l = gains.len();
    let mut rates = Vec::with_capacity(l);
    let mut cum = 0.0;
    for i in 0..l {
        if i == 0 {
            rates.push((1.0 + deltas[0] * p * gains[0] / (1.0 + interference[0])).log2());
        } else {
            // User i's message must be decodable at receivers 1..=i.
            let mut sinr = f64::INFINITY;
            for j in 0..=i {
                let s = deltas[i] * p * gains[j] / (cum * p * gains[j] + 1.0 + interference[j]);
                sinr = sinr.min(s);
            }
            rates.push((1.0 + sinr).log2());
        }
        cum += deltas[i];
    }
    rates
}

/// Exact rates of one superposition/SIC group under a common beam `w`:
/// `R_1 = log2(1 + d_1 P |g_1^H w|^2)` and for `i >= 2`
/// `R_i = log2(1 + min_{j<=i} SINR_j^i)` with
/// `SINR_j^i = d_i P |g_j^H w|^2 / (sum_{m<i} d_m P |g_j^H w|^2 + 1)`.
///
/// `effective` must be sorted by descending norm and `w` must satisfy
/// `||w||^2 <= 1`.
pub fn group_rates_exact(
    effective: &[CVector],
    w: &CVector,
    deltas: &[f64],
    p: f64,
) -> Result<Vec<f64>, TransceiverError> {
    let l = effective.len();
    if l == 0 || deltas.len() != l {
        return Err(TransceiverError::InvalidInput("deltas must match the group size"));
    }
    if w.norm_sq() > 1.0 + 1e-12 {
        return Err(TransceiverError::InvalidInput("beam power exceeds 1"));
    }
    if !(p >= 0.0) {
        return Err(TransceiverError::InvalidInput("group power must be nonnegative"));
    }
    for pair in effective.windows(2) {
        if pair[0].norm_sq() < pair[1].norm_sq() * (1.0 - 1e-12) {
            return Err(TransceiverError::InvalidInput(
                "effective channels must be sorted by descending norm",
            ));
        }
    }
    let gains: Vec<f64> = effective.iter().map(|g| g.inner(w).norm_sqr()).collect();
    let zeros = vec![0.0; l];
    Ok(sic_rates(&gains, &zeros, deltas, p))
}

/// Closed-form per-user rate lower bounds for a superposition/SIC group:
/// `B_1 = log2(1 + d_1 ||g_1||^2 P / c)` and for `i >= 2`
/// `B_i = log2(1 + (d_i / S_i) / (1 + (||g_i||^2 S_i P / c)^{-1}))` with
/// `S_i = sum_{m<i} d_m` and `c = c_constant(L)`.
///
/// `norms_sq` must be sorted descending. For `L = 1` the constant is 1 and
/// the bound coincides with the exact MRT rate.
pub fn prop1_lower_bounds(
    norms_sq: &[f64],
    deltas: &[f64],
    p: f64,
) -> Result<Vec<f64>, TransceiverError> {
    let l = norms_sq.len();
    if l == 0 || deltas.len() != l {
        return Err(TransceiverError::InvalidInput("deltas must match the group size"));
    }
    for pair in norms_sq.windows(2) {
        if pair[0] < pair[1] * (1.0 - 1e-12) {
            return Err(TransceiverError::InvalidInput("norms must be sorted descending"));
        }
    }
    let c = c_constant(l)? as f64;
    let mut bounds = Vec::with_capacity(l);
    bounds.push((1.0 + deltas[0] * norms_sq[0] * p / c).log2());
    let mut cum = deltas[0];
    for i in 1..l {
        let inner = norms_sq[i] * cum * p / c;
        let bound = if inner <= 0.0 {
            0.0
        } else {
            (1.0 + (deltas[i] / cum) / (1.0 + 1.0 / inner)).log2()
        };
        bounds.push(bound);
        cum += deltas[i];
    }
    Ok(bounds)
}

/// Closed-form high-SNR approximation of the single-user MRT outage
/// probability: `(2^r - 1)^N / (2^N N! snr^N)`. Used as an acceptance
/// oracle, not in the simulation path.
pub fn mrt_outage_closed_form(n: usize, r_th: f64, snr: f64) -> f64 {
    let x = 2f64.powf(r_th) - 1.0;
    let ln_num = (n as f64) * x.ln();
    let ln_den = (n as f64) * (2.0 * snr).ln() + crate::channel::ln_gamma(n as f64 + 1.0);
    (ln_num - ln_den).exp()
}

// ---------------------------------------------------------------------------
// ZF baseline
// ---------------------------------------------------------------------------

/// Full zero-forcing rates with per-user power `P_t / K`:
/// `R_k = log2(1 + (P_t/K) ||Pi^perp_k h_k||^2)` where the projection
/// removes every other user's channel. Users whose channel falls inside
/// the others' span (rank-deficient set) get rate 0.
pub fn zf_baseline_rates(channels: &ChannelSet, p_t: f64) -> Vec<f64> {
    let k = channels.n_users();
    let per_user = p_t / k as f64;
    (0..k)
        .map(|u| {
            let basis = others_span(channels, u);
            let g = basis.project_complement(channels.channel(u));
            let gain = g.norm_sq();
            if gain <= 1e-18 * channels.norm_sq(u) {
                0.0
            } else {
                (1.0 + per_user * gain).log2()
            }
        })
        .collect()
}

/// ZF rates when beams are designed from `design` but the air interface is
/// `truth`: residual inter-user interference enters every SINR.
pub fn zf_rates_mismatched(truth: &ChannelSet, design: &ChannelSet, p_t: f64) -> Vec<f64> {
    let k = truth.n_users();
    let per_user = p_t / k as f64;
    let beams: Vec<Option<CVector>> = (0..k)
        .map(|u| {
            let basis = others_span(design, u);
            let g = basis.project_complement(design.channel(u));
            if g.norm_sq() <= 1e-18 * design.norm_sq(u) {
                None
            } else {
                g.normalized()
            }
        })
        .collect();
    (0..k)
        .map(|u| {
            let Some(own) = &beams[u] else { return 0.0 };
            let h = truth.channel(u);
            let signal = per_user * h.inner(own).norm_sqr();
            let mut interference = 0.0;
            for (m, beam) in beams.iter().enumerate() {
                if m == u {
                    continue;
                }
                if let Some(b) = beam {
                    interference += per_user * h.inner(b).norm_sqr();
                }
            }
            (1.0 + signal / (1.0 + interference)).log2()
        })
        .collect()
}

fn others_span(channels: &ChannelSet, user: usize) -> OrthoBasis {
    let cols: Vec<CVector> = (0..channels.n_users())
        .filter(|&v| v != user)
        .map(|v| channels.channel(v).clone())
        .collect();
    OrthoBasis::spanning_cols(channels.n_antennas(), &cols)
}

// ---------------------------------------------------------------------------
// Mixture transceiver evaluation
// ---------------------------------------------------------------------------

/// Per-group beam design record.
#[derive(Debug, Clone)]
pub struct BeamDesign {
    /// Common unit beam for the group (the MRT beam for singletons).
    pub beam: CVector,
    /// Power-distribution factors in the group's member order.
    pub deltas: Vec<f64>,
    /// `min_i |v_i^H w|^2` over the group's unit effective channels.
    pub achieved_minimum: f64,
    /// Whether the achieved minimum reached the proven `1/c` floor.
    pub certificate_ok: bool,
}

/// Per-group design plus its members sorted by designed decode order
/// (descending effective norm, ties by user index).
#[derive(Debug, Clone)]
pub struct GroupDesign {
    pub members: Vec<usize>,
    pub design: BeamDesign,
}

/// Rates, bounds, and caps of one mixture-architecture evaluation,
/// indexed by user.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub achieved: Vec<f64>,
    pub lower_bound: Vec<f64>,
    pub saturation_cap: Vec<f64>,
    /// The certificate flag of each user's group.
    pub certificate_ok: Vec<bool>,
    pub groups: Vec<GroupDesign>,
}

/// Mixture-architecture rates under perfect transmitter CSI.
///
/// Singleton groups get the MRT beam on their effective channel with power
/// `P_t / K`; larger groups use the power split from [`delta_solution`],
/// the common beam from [`maxmin_beam`], and group power `L P_t / K`. The
/// report carries the closed-form lower bounds and saturation caps.
pub fn mixture_rates<R: Rng + ?Sized>(
    channels: &ChannelSet,
    grouping: &Grouping,
    p_t: f64,
    r_th: f64,
    c_margin: f64,
    rng: &mut R,
) -> Result<RateReport, TransceiverError> {
    evaluate_mixture(channels, channels, grouping, p_t, r_th, c_margin, rng)
}

/// Mixture rates when grouping/beams were computed from `design` while the
/// true channels are `truth`: the residual inter-group leakage enters
/// every receiver's SINR. Bounds and caps still describe the design-side
/// contract.
pub fn mixture_rates_mismatched<R: Rng + ?Sized>(
    truth: &ChannelSet,
    design: &ChannelSet,
    grouping: &Grouping,
    p_t: f64,
    r_th: f64,
    c_margin: f64,
    rng: &mut R,
) -> Result<RateReport, TransceiverError> {
    evaluate_mixture(truth, design, grouping, p_t, r_th, c_margin, rng)
}

fn evaluate_mixture<R: Rng + ?Sized>(
    truth: &ChannelSet,
    design: &ChannelSet,
    grouping: &Grouping,
    p_t: f64,
    r_th: f64,
    c_margin: f64,
    rng: &mut R,
) -> Result<RateReport, TransceiverError> {
    let k = truth.n_users();
    if design.n_users() != k || grouping.groups().iter().map(|g| g.len()).sum::<usize>() != k {
        return Err(TransceiverError::InvalidInput("grouping does not cover the channel set"));
    }
    if !(p_t >= 0.0) {
        return Err(TransceiverError::InvalidInput("transmit power must be nonnegative"));
    }

    // Design every group first (beams, powers, bounds).
    let mut groups: Vec<GroupDesign> = Vec::with_capacity(grouping.n_groups());
    let mut group_power: Vec<f64> = Vec::with_capacity(grouping.n_groups());
    for members in grouping.groups() {
        let mut ordered = members.clone();
        ordered.sort_by(|&a, &b| {
            let na = grouping.effective_channel(a).norm_sq();
            let nb = grouping.effective_channel(b).norm_sq();
            nb.partial_cmp(&na).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        let l = ordered.len();
        let p = l as f64 * p_t / k as f64;
        let deltas = delta_solution(l, r_th, c_margin)?;
        let design_rec = if l == 1 {
            let g = grouping.effective_channel(ordered[0]);
            let beam = g
                .normalized()
                .unwrap_or_else(|| CVector::basis(truth.n_antennas(), 0));
            BeamDesign { beam, deltas, achieved_minimum: 1.0, certificate_ok: true }
        } else {
            let units: Vec<CVector> = ordered
                .iter()
                .map(|&u| {
                    grouping
                        .effective_channel(u)
                        .normalized()
                        .unwrap_or_else(|| CVector::basis(truth.n_antennas(), 0))
                })
                .collect();
            let solved = maxmin_beam(&units, rng)?;
            BeamDesign {
                beam: solved.beam,
                deltas,
                achieved_minimum: solved.achieved,
                certificate_ok: solved.certificate_ok,
            }
        };
        groups.push(GroupDesign { members: ordered, design: design_rec });
        group_power.push(p);
    }

    // Inter-group leakage at each true receiver (exactly zero under
    // perfect CSI, up to floating-point residue).
    let mut leakage = vec![0.0f64; k];
    for (u, leak) in leakage.iter_mut().enumerate() {
        let h = truth.channel(u);
        for (j, gd) in groups.iter().enumerate() {
            if gd.members.contains(&u) {
                continue;
            }
            *leak += group_power[j] * h.inner(&gd.design.beam).norm_sqr();
        }
    }

    let mut achieved = vec![0.0f64; k];
    let mut lower_bound = vec![0.0f64; k];
    let mut saturation_cap = vec![f64::INFINITY; k];
    let mut certificate_ok = vec![true; k];

    for (j, gd) in groups.iter().enumerate() {
        let p = group_power[j];
        let gains: Vec<f64> = gd
            .members
            .iter()
            .map(|&u| truth.channel(u).inner(&gd.design.beam).norm_sqr())
            .collect();
        let interference: Vec<f64> = gd.members.iter().map(|&u| leakage[u]).collect();
        let rates = sic_rates(&gains, &interference, &gd.design.deltas, p);

        let norms_sq: Vec<f64> = gd
            .members
            .iter()
            .map(|&u| grouping.effective_channel(u).norm_sq())
            .collect();
        let bounds = prop1_lower_bounds(&norms_sq, &gd.design.deltas, p)?;
        let caps = saturation_caps(&gd.design.deltas);

        for (i, &u) in gd.members.iter().enumerate() {
            achieved[u] = rates[i];
            lower_bound[u] = bounds[i];
            saturation_cap[u] = caps[i];
            certificate_ok[u] = gd.design.certificate_ok;
        }
    }

    Ok(RateReport { achieved, lower_bound, saturation_cap, certificate_ok, groups })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channels;
    use crate::grouping::group_algorithm1;
    use crate::subspace::CMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn unit(v: CVector) -> CVector {
        v.normalized().unwrap()
    }

    fn random_unit(n: usize, rng: &mut ChaCha12Rng) -> CVector {
        loop {
            let cs = sample_channels(n, 1, rng).unwrap();
            if let Some(u) = cs.channel(0).normalized() {
                return u;
            }
        }
    }

    #[test]
    fn c_constant_exact_values() {
        assert_eq!(c_constant(1).unwrap(), 1);
        assert_eq!(c_constant(2).unwrap(), 2);
        assert_eq!(c_constant(3).unwrap(), 3);
        assert_eq!(c_constant(4).unwrap(), 128);
        assert_eq!(c_constant(10).unwrap(), 800);
        assert!(c_constant(0).is_err());
        for l in 1..=64usize {
            let want = if l <= 3 { l as u64 } else { 8 * (l as u64) * (l as u64) };
            assert_eq!(c_constant(l).unwrap(), want);
        }
    }

    #[test]
    fn delta_solution_reference_values() {
        assert_eq!(delta_solution(1, 1.5, 2.0).unwrap(), vec![1.0]);
        let d2 = delta_solution(2, 1.5, 2.0).unwrap();
        assert!((d2[0] - 0.2071).abs() < 1e-4 && (d2[1] - 0.7929).abs() < 1e-4);
        let d3 = delta_solution(3, 1.5, 2.0).unwrap();
        for (a, b) in d3.iter().zip([0.0429, 0.1642, 0.7929]) {
            assert!((a - b).abs() < 1e-4, "{} vs {}", a, b);
        }
        let d4 = delta_solution(4, 1.5, 2.0).unwrap();
        for (a, b) in d4.iter().zip([0.0089, 0.0340, 0.1642, 0.7929]) {
            assert!((a - b).abs() < 1e-4, "{} vs {}", a, b);
        }
        assert!(delta_solution(0, 1.5, 2.0).is_err());
        assert!(delta_solution(2, 0.0, 2.0).is_err());
        assert!(delta_solution(2, 1.5, 0.0).is_err());
    }

    #[test]
    fn delta_solution_sums_to_one_and_keeps_margin() {
        for l in 1..=8 {
            for &(r, c) in &[(0.5, 0.5), (1.5, 2.0), (3.0, 1.0)] {
                let d = delta_solution(l, r, c).unwrap();
                let sum: f64 = d.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12, "sum {}", sum);
                let gap_floor = c / (2f64.powf(r) + c);
                let mut cum = d[0];
                for &di in &d[1..] {
                    let margin = di / cum - (2f64.powf(r) - 1.0);
                    assert!(margin >= gap_floor - 1e-12, "margin {}", margin);
                    // The construction makes the ratio exactly 2^r - 1 + C.
                    assert!((margin - c).abs() < 1e-9, "margin {} vs C {}", margin, c);
                    cum += di;
                }
            }
        }
    }

    #[test]
    fn saturation_caps_reference_values() {
        let caps = saturation_caps(&[0.2071, 0.7929]);
        assert!(caps[0].is_infinite());
        assert!((caps[1] - 2.2716).abs() < 1e-3, "cap {}", caps[1]);
        let caps4 = saturation_caps(&[0.0089, 0.0340, 0.1642, 0.7929]);
        assert!(caps4[0].is_infinite());
        for (a, b) in caps4[1..].iter().zip([2.2691, 2.2713, 2.2716]) {
            assert!((a - b).abs() < 1e-3, "{} vs {}", a, b);
        }
        let even = saturation_caps(&[0.5, 0.5]);
        assert!((even[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maxmin_single_user_is_mrt() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let v = random_unit(3, &mut rng);
        let out = maxmin_beam(std::slice::from_ref(&v), &mut rng).unwrap();
        assert!((out.achieved - 1.0).abs() < 1e-12);
        assert!(out.certificate_ok);
        assert_eq!(out.beam.as_slice(), v.as_slice());
    }

    #[test]
    fn maxmin_two_orthogonal_hits_half() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let units = vec![CVector::basis(2, 0), CVector::basis(2, 1)];
        let out = maxmin_beam(&units, &mut rng).unwrap();
        assert!((out.achieved - 0.5).abs() < 1e-12, "achieved {}", out.achieved);
        assert!(out.certificate_ok);
    }

    #[test]
    fn maxmin_two_aligned_hits_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let v = random_unit(3, &mut rng);
        let rotated = v.scaled(Cx::new(0.0, 1.0));
        let out = maxmin_beam(&[v, rotated], &mut rng).unwrap();
        assert!((out.achieved - 1.0).abs() < 1e-12, "achieved {}", out.achieved);
    }

    #[test]
    fn maxmin_two_closed_form_value() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..50 {
            let v1 = random_unit(3, &mut rng);
            let v2 = random_unit(3, &mut rng);
            let rho = v1.inner(&v2).norm();
            let out = maxmin_beam(&[v1, v2], &mut rng).unwrap();
            assert!(
                (out.achieved - (1.0 + rho) / 2.0).abs() < 1e-12,
                "achieved {} vs (1+rho)/2 {}",
                out.achieved,
                (1.0 + rho) / 2.0
            );
            assert!(out.certificate_ok);
        }
    }

    #[test]
    fn maxmin_rejects_non_unit_inputs() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let v = random_unit(3, &mut rng).scaled(Cx::new(1.5, 0.0));
        assert!(maxmin_beam(&[v], &mut rng).is_err());
        assert!(maxmin_beam(&[], &mut rng).is_err());
    }

    #[test]
    fn maxmin_three_user_certificate_and_quality() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let mut cert_count = 0;
        let total = 40;
        for _ in 0..total {
            let units: Vec<CVector> = (0..3).map(|_| random_unit(4, &mut rng)).collect();
            let out = maxmin_beam(&units, &mut rng).unwrap();
            assert!((out.beam.norm() - 1.0).abs() < 1e-9);
            assert!(out.achieved <= 1.0 + 1e-12);
            if out.certificate_ok {
                cert_count += 1;
            }
        }
        assert!(cert_count >= total - 1, "certificates {}/{}", cert_count, total);
    }

    #[test]
    fn maxmin_invariant_under_unitary_rotation() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        // A haphazard unitary from orthonormalizing random vectors.
        let q = {
            let cols: Vec<CVector> = (0..3).map(|_| random_unit(3, &mut rng)).collect();
            OrthoBasis::spanning_cols(3, &cols)
        };
        assert_eq!(q.rank(), 3);
        let rotate = |v: &CVector| {
            let mut out = CVector::zeros(3);
            for (i, b) in q.vectors().iter().enumerate() {
                out.add_scaled(v.as_slice()[i], b);
            }
            out
        };
        for trial in 0..10u64 {
            let units: Vec<CVector> = (0..2).map(|_| random_unit(3, &mut rng)).collect();
            let rotated: Vec<CVector> = units.iter().map(|v| unit(rotate(v))).collect();
            let mut r1 = ChaCha12Rng::seed_from_u64(100 + trial);
            let mut r2 = ChaCha12Rng::seed_from_u64(100 + trial);
            let a = maxmin_beam(&units, &mut r1).unwrap();
            let b = maxmin_beam(&rotated, &mut r2).unwrap();
            assert!(
                (a.achieved - b.achieved).abs() < 1e-9,
                "rotation changed achieved value: {} vs {}",
                a.achieved,
                b.achieved
            );
        }
    }

    #[test]
    fn group_rates_hand_instance() {
        // g1 = 2 e1, g2 = e1, w = e1, deltas (0.2, 0.8), P = 10.
        let g1 = CVector::basis(2, 0).scaled(Cx::new(2.0, 0.0));
        let g2 = CVector::basis(2, 0);
        let w = CVector::basis(2, 0);
        let rates = group_rates_exact(&[g1, g2], &w, &[0.2, 0.8], 10.0).unwrap();
        assert!((rates[0] - 9f64.log2()).abs() < 1e-12, "R1 {}", rates[0]);
        // Weaker receiver: 8*1/(2*1+1); stronger: 32/9 is larger.
        let expect = (1.0 + 8.0 / 3.0f64).log2();
        assert!((rates[1] - expect).abs() < 1e-12, "R2 {}", rates[1]);
    }

    #[test]
    fn group_rates_single_user_is_mrt() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let cs = sample_channels(3, 1, &mut rng).unwrap();
        let g = cs.channel(0).clone();
        let w = g.normalized().unwrap();
        let rates = group_rates_exact(std::slice::from_ref(&g), &w, &[1.0], 5.0).unwrap();
        let expect = (1.0 + 5.0 * g.norm_sq()).log2();
        assert!((rates[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn group_rates_zero_first_delta() {
        let g = CVector::basis(2, 0);
        let w = CVector::basis(2, 0);
        let rates = group_rates_exact(std::slice::from_ref(&g), &w, &[0.0], 10.0).unwrap();
        assert_eq!(rates[0], 0.0);
    }

    #[test]
    fn group_rates_rejects_unsorted() {
        let g1 = CVector::basis(2, 0);
        let g2 = CVector::basis(2, 0).scaled(Cx::new(2.0, 0.0));
        let w = CVector::basis(2, 0);
        assert!(group_rates_exact(&[g1, g2], &w, &[0.2, 0.8], 10.0).is_err());
    }

    #[test]
    fn prop1_limit_matches_saturation() {
        let deltas = delta_solution(2, 1.5, 2.0).unwrap();
        let caps = saturation_caps(&deltas);
        let bounds = prop1_lower_bounds(&[3.0, 1.5], &deltas, 1e12).unwrap();
        assert!(
            (bounds[1] - caps[1]).abs() < 1e-6,
            "bound {} cap {}",
            bounds[1],
            caps[1]
        );
    }

    #[test]
    fn prop1_single_user_is_exact_mrt_expression() {
        let b = prop1_lower_bounds(&[4.0], &[1.0], 10.0).unwrap();
        assert!((b[0] - (1.0 + 40.0f64).log2()).abs() < 1e-12);
    }

    #[test]
    fn bounds_dominated_by_achieved_rates_when_certified() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..200 {
            let l = 2 + (rand::RngCore::next_u64(&mut rng) % 2) as usize;
            let cs = sample_channels(4, l, &mut rng).unwrap();
            let mut gs: Vec<CVector> = (0..l).map(|u| cs.channel(u).clone()).collect();
            gs.sort_by(|a, b| b.norm_sq().partial_cmp(&a.norm_sq()).unwrap());
            let units: Vec<CVector> = gs.iter().map(|g| g.normalized().unwrap()).collect();
            let solved = maxmin_beam(&units, &mut rng).unwrap();
            if !solved.certificate_ok {
                continue;
            }
            let deltas = delta_solution(l, 1.5, 2.0).unwrap();
            let p = 25.0;
            let rates = group_rates_exact(&gs, &solved.beam, &deltas, p).unwrap();
            let norms: Vec<f64> = gs.iter().map(|g| g.norm_sq()).collect();
            let bounds = prop1_lower_bounds(&norms, &deltas, p).unwrap();
            for (r, b) in rates.iter().zip(&bounds) {
                assert!(r >= &(b - 1e-9), "rate {} below bound {}", r, b);
            }
        }
    }

    #[test]
    fn sic_rate_saturates_at_cap() {
        let deltas = delta_solution(2, 1.5, 2.0).unwrap();
        let caps = saturation_caps(&deltas);
        let g1 = CVector::basis(2, 0).scaled(Cx::new(2.0, 0.0));
        let g2 = unit(CVector::new(vec![Cx::new(1.0, 0.0), Cx::new(0.4, 0.2)]));
        let w = unit(CVector::new(vec![Cx::new(1.0, 0.1), Cx::new(0.3, 0.0)]));
        let mut last = 0.0;
        for &p in &[1.0, 10.0, 100.0, 1e4, 1e8] {
            let rates = group_rates_exact(&[g1.clone(), g2.clone()], &w, &deltas, p).unwrap();
            assert!(rates[1] >= last - 1e-12, "monotone in power");
            assert!(rates[1] <= caps[1] + 1e-12, "rate {} cap {}", rates[1], caps[1]);
            last = rates[1];
        }
    }

    #[test]
    fn mrt_outage_closed_form_values() {
        assert!((mrt_outage_closed_form(1, 1.0, 100.0) - 5e-3).abs() < 1e-12);
        assert!((mrt_outage_closed_form(2, 1.0, 100.0) - 1.25e-5).abs() < 1e-12);
        // First-order agreement with the exact exponential law at N = 1.
        let snr = 500.0;
        let exact = 1.0 - (-(2f64.powf(1.0) - 1.0) / (2.0 * snr)).exp();
        let approx = mrt_outage_closed_form(1, 1.0, snr);
        assert!((exact - approx).abs() < 1e-3 * approx);
    }

    #[test]
    fn zf_orthogonal_channels_equal_mrt() {
        let cols = vec![
            CVector::basis(3, 0).scaled(Cx::new(2.0, 0.0)),
            CVector::basis(3, 1),
            CVector::basis(3, 2).scaled(Cx::new(0.0, 3.0)),
        ];
        let cs = ChannelSet::from_matrix(CMatrix::from_cols(3, cols).unwrap());
        let rates = zf_baseline_rates(&cs, 9.0);
        for u in 0..3 {
            let expect = (1.0 + 3.0 * cs.norm_sq(u)).log2();
            assert!((rates[u] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn zf_single_user_is_mrt() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let cs = sample_channels(3, 1, &mut rng).unwrap();
        let rates = zf_baseline_rates(&cs, 7.0);
        assert!((rates[0] - (1.0 + 7.0 * cs.norm_sq(0)).log2()).abs() < 1e-12);
    }

    #[test]
    fn zf_duplicated_channel_gets_zero_rate() {
        let h = unit(CVector::new(vec![Cx::new(1.0, 0.2), Cx::new(0.5, 0.0), Cx::new(0.0, 1.0)]));
        let cols = vec![h.clone(), h.scaled(Cx::new(2.0, 0.0)), CVector::basis(3, 1)];
        let cs = ChannelSet::from_matrix(CMatrix::from_cols(3, cols).unwrap());
        let rates = zf_baseline_rates(&cs, 100.0);
        assert_eq!(rates[0], 0.0);
        assert_eq!(rates[1], 0.0);
        assert!(rates[2] > 0.0);
    }

    #[test]
    fn zf_effective_gain_mean_is_two() {
        // For K = N the ZF effective gain is exponential with mean 2.
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let trials = 20_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..trials {
            let cs = sample_channels(3, 3, &mut rng).unwrap();
            let basis = others_span(&cs, 0);
            let gain = basis.project_complement(cs.channel(0)).norm_sq();
            sum += gain;
            sum_sq += gain * gain;
        }
        let mean = sum / trials as f64;
        let var = sum_sq / trials as f64 - mean * mean;
        let stderr = (var / trials as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * stderr, "mean {} +- {}", mean, stderr);
    }

    #[test]
    fn mixture_orthogonal_channels_match_zf() {
        let cols = vec![
            CVector::basis(3, 0).scaled(Cx::new(2.0, 0.0)),
            CVector::basis(3, 1),
            CVector::basis(3, 2).scaled(Cx::new(0.0, 3.0)),
        ];
        let cs = ChannelSet::from_matrix(CMatrix::from_cols(3, cols).unwrap());
        let grouping = group_algorithm1(&cs, 0.9).unwrap();
        assert_eq!(grouping.n_groups(), 3);
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let report = mixture_rates(&cs, &grouping, 9.0, 1.5, 2.0, &mut rng).unwrap();
        let zf = zf_baseline_rates(&cs, 9.0);
        for u in 0..3 {
            assert!(
                (report.achieved[u] - zf[u]).abs() < 1e-9,
                "user {}: mixture {} zf {}",
                u,
                report.achieved[u],
                zf[u]
            );
            assert!(report.saturation_cap[u].is_infinite());
            assert!(report.certificate_ok[u]);
        }
    }

    #[test]
    fn mixture_single_user_is_mrt() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let cs = sample_channels(1, 1, &mut rng).unwrap();
        let grouping = group_algorithm1(&cs, 0.9).unwrap();
        let report = mixture_rates(&cs, &grouping, 50.0, 1.5, 2.0, &mut rng).unwrap();
        let expect = (1.0 + 50.0 * cs.norm_sq(0)).log2();
        assert!((report.achieved[0] - expect).abs() < 1e-9);
    }

    #[test]
    fn mixture_duplicated_direction_matches_formula() {
        // Users 0 and 1 share a direction (grouped), user 2 orthogonal.
        let h = unit(CVector::new(vec![
            Cx::new(0.6, 0.3),
            Cx::new(0.2, -0.7),
            Cx::new(0.0, 0.0),
        ]));
        let cols = vec![
            h.scaled(Cx::new(2.0, 0.0)),
            h.clone(),
            CVector::basis(3, 2).scaled(Cx::new(1.5, 0.0)),
        ];
        let cs = ChannelSet::from_matrix(CMatrix::from_cols(3, cols).unwrap());
        let grouping = group_algorithm1(&cs, 0.9).unwrap();
        assert_eq!(grouping.n_groups(), 2);
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let p_t = 30.0;
        let report = mixture_rates(&cs, &grouping, p_t, 1.5, 2.0, &mut rng).unwrap();

        // Independent recomputation of the pair's rates from first
        // principles: both users share direction h, so the max-min beam
        // yields |g_i^H w|^2 = ||g_i||^2 and the SIC formulas collapse.
        let deltas = delta_solution(2, 1.5, 2.0).unwrap();
        let p = 2.0 * p_t / 3.0;
        let (n1, n2) = (cs.norm_sq(0), cs.norm_sq(1));
        let r1 = (1.0 + deltas[0] * p * n1).log2();
        let sinr_at = |n: f64| deltas[1] * p * n / (deltas[0] * p * n + 1.0);
        let r2 = (1.0 + sinr_at(n1).min(sinr_at(n2))).log2();
        assert!(
            (report.achieved[0] - r1).abs() < 1e-9,
            "{} vs {}",
            report.achieved[0],
            r1
        );
        assert!(
            (report.achieved[1] - r2).abs() < 1e-9,
            "{} vs {}",
            report.achieved[1],
            r2
        );
        // Orthogonal singleton keeps its MRT rate.
        let r3 = (1.0 + (p_t / 3.0) * cs.norm_sq(2)).log2();
        assert!((report.achieved[2] - r3).abs() < 1e-9);
    }

    #[test]
    fn mismatched_evaluation_stays_finite() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let cs = sample_channels(4, 4, &mut rng).unwrap();
        let noisy = crate::channel::corrupt_csi(
            &cs,
            &crate::channel::CsiModel::FixedError { sigma_e2: 0.3 },
            100.0,
            &mut rng,
        );
        let grouping = group_algorithm1(&noisy, 0.9).unwrap();
        let mut r1 = ChaCha12Rng::seed_from_u64(99);
        let mismatched =
            mixture_rates_mismatched(&cs, &noisy, &grouping, 100.0, 1.5, 2.0, &mut r1).unwrap();
        for u in 0..4 {
            assert!(mismatched.achieved[u].is_finite());
            assert!(mismatched.achieved[u] >= 0.0);
        }
    }
}
