//! Channel-adaptive user grouping.
//!
//! Two constructions are provided. The exhaustive threshold search walks
//! group cardinalities in ascending order and accepts the first (smallest,
//! lexicographically first) subset whose projected channel subspace has
//! alignment at most `theta_th` with the remaining users' projected
//! subspace; every accepted split keeps the effective-channel norms above
//! `(1 - theta_th)^{N_g - 1}` of the raw norms. The scalable variant seeds
//! groups by semi-orthogonal user selection inside intersecting hyperslabs
//! and then attaches or merges the leftover users by pairwise channel angle.
//!
//! Effective channels are always the raw channels projected onto the
//! orthogonal complement of every *other* group's raw channel span, which
//! the sequential-projection identity lets the exhaustive search accumulate
//! stage by stage.

use thiserror::Error;

use crate::channel::ChannelSet;
use crate::subspace::{projector_orth, SubspaceError};
use crate::subspace::{theta_from_bases, CMatrix, CVector, OrthoBasis, Projector};

/// Exhaustive search cost grows as K^(K/2); beyond this many users the
/// caller is directed to the scalable variant.
pub const ALGORITHM1_MAX_USERS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum GroupingError {
    #[error("invalid threshold: {0}")]
    InvalidThreshold(&'static str),
    #[error("exhaustive grouping supports at most {max} users (got {got}); use the SUS variant")]
    TooManyUsers { max: usize, got: usize },
    #[error("norm-floor verification requires an exhaustive-search grouping")]
    WrongMethod,
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
}

/// Which construction produced a grouping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupingMethod {
    /// Exhaustive threshold search with the given `theta_th`.
    Algorithm1 { theta_th: f64 },
    /// SUS seeding plus angle-based assignment/merging.
    Sus { theta_tau1: f64, theta_tau2: f64 },
}

/// Grouping configuration selected by experiment configs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupingConfig {
    Algorithm1 { theta_th: f64 },
    Sus { theta_tau1: f64, theta_tau2: f64 },
}

impl GroupingConfig {
    pub fn validate(&self) -> Result<(), GroupingError> {
        match *self {
            GroupingConfig::Algorithm1 { theta_th } => {
                if !(theta_th > 0.0 && theta_th < 1.0) {
                    return Err(GroupingError::InvalidThreshold("theta_th must be in (0, 1)"));
                }
            }
            GroupingConfig::Sus { theta_tau1, theta_tau2 } => {
                let half_pi = std::f64::consts::FRAC_PI_2;
                if !(theta_tau1 > 0.0 && theta_tau1 < half_pi) {
                    return Err(GroupingError::InvalidThreshold(
                        "theta_tau1 must be in (0, pi/2)",
                    ));
                }
                if !(theta_tau2 > 0.0 && theta_tau2 < half_pi - theta_tau1) {
                    return Err(GroupingError::InvalidThreshold(
                        "theta_tau2 must be in (0, pi/2 - theta_tau1)",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn group(&self, channels: &ChannelSet) -> Result<Grouping, GroupingError> {
        match *self {
            GroupingConfig::Algorithm1 { theta_th } => group_algorithm1(channels, theta_th),
            GroupingConfig::Sus { theta_tau1, theta_tau2 } => {
                group_sus(channels, theta_tau1, theta_tau2)
            }
        }
    }
}

/// A partition of the users into groups, with the inter-group ZF effective
/// channel of every user.
#[derive(Debug, Clone)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
    effective: Vec<CVector>,
    method: GroupingMethod,
}

impl Grouping {
    /// All users in one group: no inter-group projection, effective
    /// channels equal the raw channels.
    pub fn single_group(channels: &ChannelSet) -> Self {
        let k = channels.n_users();
        Grouping {
            groups: vec![(0..k).collect()],
            effective: (0..k).map(|u| channels.channel(u).clone()).collect(),
            method: GroupingMethod::Algorithm1 { theta_th: 0.999_999 },
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn method(&self) -> GroupingMethod {
        self.method
    }

    /// Effective channel `g` of a user: its raw channel projected off the
    /// span of all other groups' raw channels.
    pub fn effective_channel(&self, user: usize) -> &CVector {
        &self.effective[user]
    }

    /// Norm-reduction floor `(1 - theta_th)^{N_g - 1}` guaranteed by the
    /// exhaustive search; `None` for SUS groupings (no such guarantee).
    pub fn reduction_floor(&self) -> Option<f64> {
        match self.method {
            GroupingMethod::Algorithm1 { theta_th } => {
                Some((1.0 - theta_th).powi(self.groups.len() as i32 - 1))
            }
            GroupingMethod::Sus { .. } => None,
        }
    }

    /// Inter-group ZF projector for group `j` (projection onto the
    /// complement of all other groups' raw channel spans).
    pub fn zf_projector(
        &self,
        j: usize,
        channels: &ChannelSet,
    ) -> Result<Projector, SubspaceError> {
        let dim = channels.n_antennas();
        let mut cols = Vec::new();
        for (g, members) in self.groups.iter().enumerate() {
            if g == j {
                continue;
            }
            for &u in members {
                cols.push(channels.channel(u).clone());
            }
        }
        projector_orth(&CMatrix::from_cols(dim, cols).expect("channel dims agree"))
    }

    fn others_basis(groups: &[Vec<usize>], j: usize, channels: &ChannelSet) -> OrthoBasis {
        let mut cols: Vec<CVector> = Vec::new();
        for (g, members) in groups.iter().enumerate() {
            if g == j {
                continue;
            }
            for &u in members {
                cols.push(channels.channel(u).clone());
            }
        }
        OrthoBasis::spanning_cols(channels.n_antennas(), &cols)
    }

    /// Assemble from a raw partition, computing every effective channel
    /// directly from the definition.
    fn from_partition(
        groups: Vec<Vec<usize>>,
        channels: &ChannelSet,
        method: GroupingMethod,
    ) -> Self {
        let k = channels.n_users();
        let mut effective = vec![CVector::zeros(channels.n_antennas()); k];
        for j in 0..groups.len() {
            let basis = Self::others_basis(&groups, j, channels);
            for &u in &groups[j] {
                effective[u] = basis.project_complement(channels.channel(u));
            }
        }
        Grouping { groups, effective, method }
    }
}

// ---------------------------------------------------------------------------
// Exhaustive threshold search
// ---------------------------------------------------------------------------

/// Adaptive grouping by exhaustive subset search.
///
/// Cardinalities are tried in ascending order. Within a cardinality,
/// subsets of the remaining users are enumerated lexicographically (by
/// sorted user index) and the first subset `S` whose current projected
/// vectors satisfy `theta(F_rest, F_S) <= theta_th` is split off; the
/// remaining users' vectors are then projected onto the complement of
/// `S`'s current span. When no split exists through cardinality
/// `|remaining| - 1`, the remaining users form one group (the alignment
/// against an empty matrix is zero).
pub fn group_algorithm1(channels: &ChannelSet, theta_th: f64) -> Result<Grouping, GroupingError> {
    GroupingConfig::Algorithm1 { theta_th }.validate()?;
    let k = channels.n_users();
    if k > ALGORITHM1_MAX_USERS {
        return Err(GroupingError::TooManyUsers { max: ALGORITHM1_MAX_USERS, got: k });
    }
    let dim = channels.n_antennas();

    // Current projected vector per ungrouped user.
    let mut current: Vec<CVector> = (0..k).map(|u| channels.channel(u).clone()).collect();
    let mut candidates: Vec<usize> = (0..k).collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut effective: Vec<CVector> = vec![CVector::zeros(dim); k];
    let mut card = 1usize;

    while !candidates.is_empty() {
        let m = candidates.len();
        let accepted: Option<Vec<usize>> = if card >= m {
            // No split left to test: the remainder becomes one group.
            Some((0..m).collect())
        } else {
            find_subset(&current, &candidates, card, theta_th)
        };
        match accepted {
            Some(subset_pos) => {
                let members: Vec<usize> = subset_pos.iter().map(|&p| candidates[p]).collect();
                let rest: Vec<usize> = candidates
                    .iter()
                    .copied()
                    .filter(|u| !members.contains(u))
                    .collect();

                // Effective channels: one more projection of the accepted
                // users' vectors off the rest's current span finishes the
                // sequential cascade for this group.
                let rest_basis = OrthoBasis::spanning_cols(
                    dim,
                    &rest.iter().map(|&u| current[u].clone()).collect::<Vec<_>>(),
                );
                for &u in &members {
                    effective[u] = rest_basis.project_complement(&current[u]);
                }

                // Project the remaining users off the accepted span.
                let group_basis = OrthoBasis::spanning_cols(
                    dim,
                    &members.iter().map(|&u| current[u].clone()).collect::<Vec<_>>(),
                );
                for &u in &rest {
                    current[u] = group_basis.project_complement(&current[u]);
                }

                groups.push(members);
                candidates = rest;
            }
            None => card += 1,
        }
    }

    Ok(Grouping {
        groups,
        effective,
        method: GroupingMethod::Algorithm1 { theta_th },
    })
}

/// First subset (lexicographic positions into `candidates`) of the given
/// cardinality whose span alignment with the rest stays within the
/// threshold.
fn find_subset(
    current: &[CVector],
    candidates: &[usize],
    card: usize,
    theta_th: f64,
) -> Option<Vec<usize>> {
    let m = candidates.len();
    debug_assert!(card < m);
    let dim = current[0].dim();
    let mut pos: Vec<usize> = (0..card).collect();
    loop {
        let subset_cols: Vec<CVector> =
            pos.iter().map(|&p| current[candidates[p]].clone()).collect();
        let rest_cols: Vec<CVector> = (0..m)
            .filter(|p| !pos.contains(p))
            .map(|p| current[candidates[p]].clone())
            .collect();
        let qs = OrthoBasis::spanning_cols(dim, &subset_cols);
        let qr = OrthoBasis::spanning_cols(dim, &rest_cols);
        if theta_from_bases(&qr, &rest_cols, &qs, &subset_cols) <= theta_th {
            return Some(pos);
        }
        // Next combination in lexicographic order.
        let mut i = card;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if pos[i] != i + m - card {
                break;
            }
        }
        pos[i] += 1;
        for j in i + 1..card {
            pos[j] = pos[j - 1] + 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Norm-floor verification
// ---------------------------------------------------------------------------

/// Per-user norm-floor check result.
#[derive(Debug, Clone)]
pub struct FloorCheck {
    pub user: usize,
    pub effective_norm_sq: f64,
    pub channel_norm_sq: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct NormFloorReport {
    pub floor: f64,
    pub checks: Vec<FloorCheck>,
}

impl NormFloorReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.ok).count()
    }
}

/// Check `||g||^2 >= (1 - theta_th)^{N_g - 1} ||h||^2` for every user of an
/// exhaustive-search grouping, with 1e-9 relative slack.
pub fn verify_norm_floor(
    grouping: &Grouping,
    channels: &ChannelSet,
) -> Result<NormFloorReport, GroupingError> {
    let floor = grouping.reduction_floor().ok_or(GroupingError::WrongMethod)?;
    let checks = (0..channels.n_users())
        .map(|u| {
            let g2 = grouping.effective_channel(u).norm_sq();
            let h2 = channels.norm_sq(u);
            FloorCheck {
                user: u,
                effective_norm_sq: g2,
                channel_norm_sq: h2,
                ok: g2 >= floor * h2 * (1.0 - 1e-9),
            }
        })
        .collect();
    Ok(NormFloorReport { floor, checks })
}

// ---------------------------------------------------------------------------
// SUS-based scalable grouping
// ---------------------------------------------------------------------------

/// Scalable grouping: semi-orthogonal seeding then angle-based attachment.
///
/// Phase 1 seeds groups with the max-norm user, then repeatedly adds the
/// max-norm user inside the intersection of all seeds' hyperslabs
/// (`|h_s^H h| / (||h_s|| ||h||) <= gamma` with
/// `gamma = cos(pi/2 - theta_tau1)`). Phase 2 assigns every leftover user
/// to the group holding its minimum-angle member (angles on raw channels),
/// then merges all groups whose angle to that user falls below
/// `theta_tau2`.
pub fn group_sus(
    channels: &ChannelSet,
    theta_tau1: f64,
    theta_tau2: f64,
) -> Result<Grouping, GroupingError> {
    let config = GroupingConfig::Sus { theta_tau1, theta_tau2 };
    config.validate()?;
    let k = channels.n_users();
    let gamma = (std::f64::consts::FRAC_PI_2 - theta_tau1).cos();

    let cos_abs = |a: usize, b: usize| -> f64 {
        let num = channels.channel(a).inner(channels.channel(b)).norm();
        let den = (channels.norm_sq(a) * channels.norm_sq(b)).sqrt();
        if den <= 0.0 {
            1.0
        } else {
            (num / den).min(1.0)
        }
    };

    // Phase 1: seeds. ordering() already ranks users by norm with ties
    // broken by index, so "max-norm user inside the intersection" is the
    // first ranked user passing every hyperslab test.
    let mut seeds: Vec<usize> = Vec::new();
    let mut selected = vec![false; k];
    loop {
        let next = channels
            .ordering()
            .iter()
            .copied()
            .find(|&u| !selected[u] && seeds.iter().all(|&s| cos_abs(s, u) <= gamma));
        match next {
            Some(u) => {
                selected[u] = true;
                seeds.push(u);
                if seeds.len() == k {
                    break;
                }
            }
            None => break,
        }
    }

    let mut groups: Vec<Vec<usize>> = seeds.iter().map(|&s| vec![s]).collect();

    // Phase 2: leftovers in ascending user order.
    for u in 0..k {
        if selected[u] {
            continue;
        }
        // Minimum angle to each group over its current members.
        let angles: Vec<f64> = groups
            .iter()
            .map(|members| {
                members
                    .iter()
                    .map(|&m| cos_abs(u, m).clamp(0.0, 1.0).acos())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let assigned = angles
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(j, _)| j)
            .expect("at least one group exists");
        let close: Vec<usize> = (0..groups.len()).filter(|&j| angles[j] < theta_tau2).collect();
        if close.len() >= 2 {
            // The assigned group has the minimum angle, so whenever the
            // merge set is nonempty it contains the assigned group.
            let target = close[0];
            for &j in close[1..].iter().rev() {
                let moved = std::mem::take(&mut groups[j]);
                groups[target].extend(moved);
            }
            groups[target].push(u);
            groups.retain(|g| !g.is_empty());
        } else {
            groups[assigned].push(u);
        }
        selected[u] = true;
    }

    Ok(Grouping::from_partition(
        groups,
        channels,
        GroupingMethod::Sus { theta_tau1, theta_tau2 },
    ))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
