//! Regions in matrix groups and certified covering verification.
//!
//! All "open set inside open set" claims are replaced by finite
//! certificates: a net over the closure of the covered region plus a
//! Lipschitz margin at every net point. A certificate is sound
//! (sufficient) but verification may fail on true coverings when the
//! net is too coarse; callers distinguish "inconclusive" from
//! "refuted" on that basis.
//!
//! Two covering-to-multiple-covering pipelines live here: the group/IFS
//! route (prefix-disjoint layers over a slack region U B_{R0}, verified
//! by sampling since the slack region is too large to net), and the
//! cocycle route in `cocycle_cover` (per-letter singleton layers with
//! exhaustively netted inclusions into a finite union of regions).

use crate::cocycle::GroupTag;
use crate::mat::{Mat, MatError};
use crate::sft::SftError;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoveringError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Sft(#[from] SftError),
    #[error(transparent)]
    Cocycle(#[from] crate::cocycle::CocycleError),
    #[error("family is empty")]
    EmptyFamily,
    #[error("family must contain at least two elements to form disjoint layers")]
    FamilyTooSmall,
    #[error("net spacing {0} is too coarse for atom radius {1}")]
    DegenerateNet(f64, f64),
    #[error("ball nets require radius < 1 (got {0})")]
    BallTooLarge(f64),
    #[error("inverse-norm bound unavailable: atom ball may contain singular matrices")]
    UnboundedRegion,
    #[error("covering not certified at spacing {spacing}: net point with best margin {best_margin:.6e}; retry with smaller spacing")]
    Inconclusive { spacing: f64, best_margin: f64 },
    #[error("no positive delta certifiable at the 1e-6 floor; suggest finer spacing")]
    DeltaFloor,
    #[error("region discovery exceeded the budget of {0} regions")]
    RegionBudget(usize),
    #[error("witness chain search failed after {0} steps")]
    ChainSearchFailed(usize),
    #[error("{0}")]
    Invalid(String),
}

// ---------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Atom {
    pub center: Mat,
    pub radius: f64,
}

/// A finite-witness region: the union of operator-norm balls around
/// in-group centers, optionally multiplied by the slack ball
/// B_R = {g : ||g - Id|| < R}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Region {
    pub dim: usize,
    pub tag: GroupTag,
    pub atoms: Vec<Atom>,
    pub slack: f64,
}

/// Best membership witness for a point, possibly with negative margin.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Membership {
    pub atom: usize,
    pub margin: f64,
    /// ||u^{-1}|| of the witness when the slack test was used, else 1;
    /// multiplies Lipschitz constants in margin accounting.
    pub witness_inv_norm: f64,
}

impl Region {
    pub fn ball(center: Mat, radius: f64, tag: GroupTag) -> Self {
        let dim = center.d;
        Region { dim, tag, atoms: vec![Atom { center, radius }], slack: 0.0 }
    }

    pub fn id_ball(dim: usize, radius: f64, tag: GroupTag) -> Self {
        Region::ball(Mat::identity(dim), radius, tag)
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    pub fn validate(&self) -> Result<(), CoveringError> {
        for a in &self.atoms {
            if a.radius <= 0.0 {
                return Err(CoveringError::Invalid("atom radius must be positive".into()));
            }
            if self.tag.det_constrained() && (a.center.det() - 1.0).abs() > 1e-9 {
                return Err(CoveringError::Invalid(format!(
                    "atom center det {} violates the group tag",
                    a.center.det()
                )));
            }
        }
        if self.slack < 0.0 {
            return Err(CoveringError::Invalid("slack must be nonnegative".into()));
        }
        Ok(())
    }

    /// Best witness for `v`. Slack-free regions use the direct ball
    /// test; slack regions use witness centers u with the sufficient
    /// test ||u^{-1} v - Id|| < slack.
    pub fn membership(&self, v: &Mat) -> Result<Membership, CoveringError> {
        let mut best: Option<Membership> = None;
        for (i, a) in self.atoms.iter().enumerate() {
            let cand = if self.slack == 0.0 {
                Membership {
                    atom: i,
                    margin: a.radius - v.dist(&a.center),
                    witness_inv_norm: 1.0,
                }
            } else {
                let cinv = a.center.inverse()?;
                Membership {
                    atom: i,
                    margin: self.slack - cinv.mul(v).dist_id(),
                    witness_inv_norm: cinv.spectral_norm(),
                }
            };
            if best.map_or(true, |b| cand.margin > b.margin) {
                best = Some(cand);
            }
        }
        best.ok_or_else(|| CoveringError::Invalid("region has no atoms".into()))
    }

    /// Upper bound for sup over the closure of max(||v||, ||v^{-1}||).
    pub fn norm_bound(&self) -> Result<f64, CoveringError> {
        let mut bound: f64 = 0.0;
        for a in &self.atoms {
            let fwd = a.center.spectral_norm() + a.radius;
            let inv = inverse_norm_bound(&a.center, a.radius, self.tag)
                .ok_or(CoveringError::UnboundedRegion)?;
            bound = bound.max(fwd).max(inv);
        }
        if self.slack > 0.0 {
            let bslack = 1.0 + self.slack;
            let binv = match self.tag {
                GroupTag::SpecialLinear => bslack.powi(self.dim as i32 - 1),
                GroupTag::Rotation2 => bslack,
                GroupTag::General => {
                    if self.slack < 1.0 {
                        1.0 / (1.0 - self.slack)
                    } else {
                        return Err(CoveringError::UnboundedRegion);
                    }
                }
            };
            bound *= bslack.max(binv);
        }
        Ok(bound)
    }

    /// Random point of the closed region (atom ball times slack ball),
    /// reached through exponential coordinates. Returns the point and
    /// the exact slack-ball log used, for witness-chain hints.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<(Mat, usize, Option<Mat>), CoveringError> {
        let idx = rng.gen_range(0..self.atoms.len());
        let a = &self.atoms[idx];
        let x = random_algebra_direction(self.dim, self.tag, rng);
        let t = rng.gen::<f64>();
        let (p, _) = scale_to_ball_s(&a.center, &x, t * a.radius);
        if self.slack == 0.0 {
            return Ok((p, idx, None));
        }
        let y = random_algebra_direction(self.dim, self.tag, rng);
        let t2 = rng.gen::<f64>();
        let id = Mat::identity(self.dim);
        let (b, s) = scale_to_ball_s(&id, &y, t2 * self.slack);
        Ok((p.mul(&b), idx, Some(y.scale(s))))
    }
}

/// ||v^{-1}|| bound over the ball around `center`, tag-aware.
pub(crate) fn inverse_norm_bound(center: &Mat, radius: f64, tag: GroupTag) -> Option<f64> {
    let cinv = center.inverse().ok()?;
    let ci = cinv.spectral_norm();
    match tag {
        GroupTag::Rotation2 => Some(center.spectral_norm() + radius),
        GroupTag::SpecialLinear => {
            // For SL(d), ||v^{-1}|| <= ||v||^{d-1}.
            let fwd = center.spectral_norm() + radius;
            let neumann = if ci * radius < 1.0 {
                Some(ci / (1.0 - ci * radius))
            } else {
                None
            };
            let sl = fwd.powi(center.d as i32 - 1);
            Some(neumann.map_or(sl, |n| n.min(sl)))
        }
        GroupTag::General => {
            if ci * radius < 1.0 {
                Some(ci / (1.0 - ci * radius))
            } else {
                None
            }
        }
    }
}

pub(crate) fn random_algebra_direction(dim: usize, tag: GroupTag, rng: &mut impl Rng) -> Mat {
    if tag == GroupTag::Rotation2 {
        let t: f64 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let mut x = Mat::zeros(2);
        x.set(0, 1, -t);
        x.set(1, 0, t);
        return x;
    }
    let mut x = Mat::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            x.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    if tag == GroupTag::SpecialLinear {
        let t = x.trace() / dim as f64;
        for i in 0..dim {
            x.set(i, i, x.get(i, i) - t);
        }
    }
    x
}

/// Largest s with ||c exp(sX) - c|| <= target, returning c exp(sX).
pub(crate) fn scale_to_ball(center: &Mat, x: &Mat, target: f64) -> Mat {
    scale_to_ball_s(center, x, target).0
}

fn scale_to_ball_s(center: &Mat, x: &Mat, target: f64) -> (Mat, f64) {
    if target <= 0.0 {
        return (center.clone(), 0.0);
    }
    let dist = |s: f64| center.mul(&x.scale(s).exp()).dist(center);
    let mut hi = 1.0f64;
    let mut grow = 0;
    while dist(hi) < target && grow < 40 {
        hi *= 2.0;
        grow += 1;
    }
    let mut lo = 0.0f64;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if dist(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (center.mul(&x.scale(lo).exp()), lo)
}

// ---------------------------------------------------------------------
// Nets
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Net {
    pub spacing: f64,
    pub points: Vec<Mat>,
}

/// Basis of the Lie algebra with per-coordinate box factors relative to
/// the operator norm of the algebra element.
fn algebra_basis(dim: usize, tag: GroupTag) -> Vec<(Mat, f64)> {
    let mut basis = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let mut e = Mat::zeros(dim);
            e.set(i, j, 1.0);
            basis.push((e, 1.0));
        }
    }
    match tag {
        GroupTag::SpecialLinear => {
            // Traceless diagonals D_i = E_ii - E_{i+1,i+1}; the i-th
            // coordinate is a partial sum of diagonal entries, bounded
            // by (i+1) times the operator norm.
            for i in 0..dim - 1 {
                let mut e = Mat::zeros(dim);
                e.set(i, i, 1.0);
                e.set(i + 1, i + 1, -1.0);
                basis.push((e, (i + 1) as f64));
            }
        }
        GroupTag::General => {
            for i in 0..dim {
                let mut e = Mat::zeros(dim);
                e.set(i, i, 1.0);
                basis.push((e, 1.0));
            }
        }
        GroupTag::Rotation2 => {
            // One-dimensional algebra spanned by the rotation generator.
            assert_eq!(dim, 2, "rotation tag is two-dimensional");
            basis.clear();
            let mut e = Mat::zeros(2);
            e.set(0, 1, -1.0);
            e.set(1, 0, 1.0);
            basis.push((e, 1.0));
        }
    }
    basis
}

/// Net of the closed ball {g in G : ||g - Id|| <= rho} with covering
/// spacing at most `h`: a coefficient grid in exponential coordinates,
/// with boundary points radially clamped back into the closed ball.
pub fn net_ball_identity(
    dim: usize,
    tag: GroupTag,
    rho: f64,
    h: f64,
) -> Result<Net, CoveringError> {
    if rho >= 1.0 {
        return Err(CoveringError::BallTooLarge(rho));
    }
    if h <= 0.0 || h > 2.0 {
        return Err(CoveringError::DegenerateNet(h, rho));
    }
    let basis = algebra_basis(dim, tag);
    let rx = -(1.0 - rho).ln();
    let sum_norms: f64 = basis.iter().map(|(b, _)| b.spectral_norm()).sum();
    // Nearest-grid error e_x = (step/2) * sum of basis norms maps to an
    // image error e_x * exp(rx + e_x); keep that below h with slack.
    let lip = (rx + 0.1).exp();
    let step = 2.0 * h / (1.15 * sum_norms * lip);
    if step <= 0.0 {
        return Err(CoveringError::DegenerateNet(h, rho));
    }
    let id = Mat::identity(dim);
    let mut points = vec![id.clone()];
    let ranges: Vec<i64> = basis
        .iter()
        .map(|(_, c)| ((c * rx) / step).ceil() as i64)
        .collect();
    let mut idx: Vec<i64> = ranges.iter().map(|r| -r).collect();
    fn advance(idx: &mut [i64], ranges: &[i64]) -> bool {
        for i in 0..idx.len() {
            if idx[i] < ranges[i] {
                idx[i] += 1;
                for (j, x) in idx.iter_mut().enumerate().take(i) {
                    *x = -ranges[j];
                }
                return true;
            }
        }
        false
    }
    loop {
        if idx.iter().any(|&v| v != 0) {
            let mut x = Mat::zeros(dim);
            for (a, &iv) in idx.iter().enumerate() {
                if iv != 0 {
                    x = x.add(&basis[a].0.scale(iv as f64 * step));
                }
            }
            let g = x.exp();
            let dist = g.dist_id();
            if dist <= rho * (1.0 + 1e-12) {
                points.push(g);
            } else if dist <= rho + 2.0 * h {
                // Clamp radially toward the boundary of the closed ball.
                points.push(scale_to_ball(&id, &x, rho));
            }
        }
        if !advance(&mut idx, &ranges) {
            break;
        }
    }
    Ok(Net { spacing: h, points })
}

/// Covering net of the closure of a region. Atom balls are netted in
/// exponential coordinates around their centers; slack regions compose
/// the atom net with a slack-ball net (spacing is subadditive with the
/// obvious norm factors).
pub fn build_net(region: &Region, h: f64) -> Result<Net, CoveringError> {
    region.validate()?;
    const MAX_POINTS: usize = 4_000_000;
    let mut points = Vec::new();
    let slack_net = if region.slack > 0.0 {
        Some(net_ball_identity(region.dim, region.tag, region.slack, h / 2.0)?)
    } else {
        None
    };
    for a in &region.atoms {
        let cinv = a.center.inverse()?;
        let rho = (cinv.spectral_norm() * a.radius).min(0.999);
        let cnorm = a.center.spectral_norm();
        let h_atom = match &slack_net {
            None => h / cnorm,
            Some(_) => h / (2.0 * cnorm * (1.0 + region.slack)),
        };
        let ball = net_ball_identity(region.dim, region.tag, rho, h_atom)?;
        for b in &ball.points {
            let mut p = a.center.mul(b);
            // Membership check with a radial clamp for overshoot.
            if p.dist(&a.center) > a.radius * (1.0 + 1e-12) {
                match cinv.mul(&p).log() {
                    Ok(x) => p = scale_to_ball(&a.center, &x, a.radius),
                    Err(_) => continue,
                }
            }
            match &slack_net {
                None => points.push(p),
                Some(sn) => {
                    for b2 in &sn.points {
                        points.push(p.mul(b2));
                    }
                }
            }
            if points.len() > MAX_POINTS {
                return Err(CoveringError::DegenerateNet(h, a.radius));
            }
        }
    }
    Ok(Net { spacing: h, points })
}

// ---------------------------------------------------------------------
// Family search: hash-grid index with a Frobenius prescreen.
// ---------------------------------------------------------------------

pub struct FamilySearch {
    pub mats: Vec<Mat>,
    cell: f64,
    dims: usize,
    buckets: HashMap<Vec<i32>, Vec<usize>>,
}

impl FamilySearch {
    pub fn build(mats: Vec<Mat>) -> Self {
        let dims = mats.first().map_or(0, |m| m.a.len().min(4));
        // Cell size from a sampled nearest-neighbor scale, then halved
        // until buckets stay shallow.
        let mut cell = Self::estimate_cell(&mats).max(1e-4);
        loop {
            let mut buckets: HashMap<Vec<i32>, Vec<usize>> = HashMap::new();
            for (i, m) in mats.iter().enumerate() {
                buckets.entry(Self::key(m, cell, dims)).or_default().push(i);
            }
            let deepest = buckets.values().map(|v| v.len()).max().unwrap_or(0);
            if deepest <= 64 || cell <= 2e-4 {
                return FamilySearch { mats, cell, dims, buckets };
            }
            cell /= 2.0;
        }
    }

    fn estimate_cell(mats: &[Mat]) -> f64 {
        if mats.len() < 2 {
            return 0.1;
        }
        let stride = (mats.len() / 64).max(1);
        let mut dists = Vec::new();
        for i in (0..mats.len()).step_by(stride) {
            let mut best = f64::INFINITY;
            for j in (0..mats.len()).step_by(stride) {
                if i == j {
                    continue;
                }
                best = best.min(frob_dist(&mats[i], &mats[j]));
            }
            if best.is_finite() {
                dists.push(best);
            }
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = dists.get(dists.len() / 2).copied().unwrap_or(0.1);
        (med * 1.5).clamp(1e-4, 0.5)
    }

    fn key(m: &Mat, cell: f64, dims: usize) -> Vec<i32> {
        m.a[..dims].iter().map(|&x| (x / cell).floor() as i32).collect()
    }

    /// Indices whose key cell neighbors the target's, with a Frobenius
    /// prescreen keeping the closest `keep`.
    pub fn nearest(&self, target: &Mat, keep: usize) -> Vec<usize> {
        let base = Self::key(target, self.cell, self.dims);
        let mut found: Vec<(f64, usize)> = Vec::new();
        let mut offs = vec![-1i32; self.dims];
        loop {
            let key: Vec<i32> = base.iter().zip(&offs).map(|(b, o)| b + o).collect();
            if let Some(v) = self.buckets.get(&key) {
                for &i in v {
                    found.push((frob_dist(&self.mats[i], target), i));
                }
            }
            let mut carried = false;
            for o in offs.iter_mut() {
                if *o < 1 {
                    *o += 1;
                    carried = true;
                    break;
                }
                *o = -1;
            }
            if !carried {
                break;
            }
        }
        found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        found.truncate(keep);
        found.into_iter().map(|(_, i)| i).collect()
    }

    /// Global Frobenius prescreen over the whole family (fallback when
    /// the hash finds nothing useful).
    pub fn nearest_global(&self, target: &Mat, keep: usize) -> Vec<usize> {
        let mut found: Vec<(f64, usize)> = self
            .mats
            .iter()
            .enumerate()
            .map(|(i, m)| (frob_dist(m, target), i))
            .collect();
        found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        found.truncate(keep);
        found.into_iter().map(|(_, i)| i).collect()
    }
}

fn frob_dist(a: &Mat, b: &Mat) -> f64 {
    a.a.iter()
        .zip(&b.a)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------
// Covering certificates
// ---------------------------------------------------------------------

pub const MARGIN_SAFETY: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyMember {
    pub label: String,
    pub mat: Mat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointWitness {
    pub family: usize,
    pub atom: usize,
    /// Margin after subtracting Lip(g) * h and the safety term.
    pub margin: f64,
}

/// Exhaustive net certificate for closure(U) inside family^{-1} U.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringCertificate {
    pub family: Vec<FamilyMember>,
    pub region: Region,
    pub spacing: f64,
    pub safety: f64,
    pub net_points: Vec<Mat>,
    pub witnesses: Vec<PointWitness>,
    pub min_margin: f64,
}

/// Margin of `g * v` inside `target`, already reduced by the Lipschitz
/// times spacing term and the safety constant.
fn certified_margin(
    g: &Mat,
    v: &Mat,
    target: &Region,
    h: f64,
) -> Result<(f64, usize), CoveringError> {
    let image = g.mul(v);
    let mem = target.membership(&image)?;
    let lip = mem.witness_inv_norm * g.spectral_norm();
    Ok((mem.margin - lip * h - MARGIN_SAFETY, mem.atom))
}

/// Verify the covering condition closure(U) inside family^{-1} U by a
/// net with Lipschitz margins. Returns a sound certificate or an
/// inconclusive failure (the method cannot refute).
pub fn verify_covering(
    family: &[FamilyMember],
    u: &Region,
    h: f64,
) -> Result<CoveringCertificate, CoveringError> {
    verify_covering_into(family, u, u, h)
}

/// Verify closure(`source`) inside family^{-1} `target`.
pub fn verify_covering_into(
    family: &[FamilyMember],
    source: &Region,
    target: &Region,
    h: f64,
) -> Result<CoveringCertificate, CoveringError> {
    if family.is_empty() {
        return Err(CoveringError::EmptyFamily);
    }
    let net = build_net(source, h)?;
    let (witnesses, failing) = cover_points(family, &net.points, target, h)?;
    if let Some(&fi) = failing.first() {
        return Err(CoveringError::Inconclusive {
            spacing: h,
            best_margin: witnesses[fi].margin,
        });
    }
    let min_margin = witnesses
        .iter()
        .map(|w| w.margin)
        .fold(f64::INFINITY, f64::min);
    Ok(CoveringCertificate {
        family: family.to_vec(),
        region: source.clone(),
        spacing: h,
        safety: MARGIN_SAFETY,
        net_points: net.points,
        witnesses,
        min_margin,
    })
}

/// Best witness per point, plus the indices of points with no positive
/// margin (the caller may enrich the family and retry).
pub fn cover_points(
    family: &[FamilyMember],
    points: &[Mat],
    target: &Region,
    h: f64,
) -> Result<(Vec<PointWitness>, Vec<usize>), CoveringError> {
    if family.is_empty() {
        return Err(CoveringError::EmptyFamily);
    }
    let search = FamilySearch::build(family.iter().map(|f| f.mat.clone()).collect());
    let small = family.len() <= 96;
    let mut witnesses = Vec::with_capacity(points.len());
    let mut failing = Vec::new();
    for (pi, v) in points.iter().enumerate() {
        let mut best: Option<PointWitness> = None;
        let mut consider = |i: usize, best: &mut Option<PointWitness>| -> Result<(), CoveringError> {
            let (margin, atom) = certified_margin(&search.mats[i], v, target, h)?;
            if best.as_ref().map_or(true, |b| margin > b.margin) {
                *best = Some(PointWitness { family: i, atom, margin });
            }
            Ok(())
        };
        if small {
            for i in 0..family.len() {
                consider(i, &mut best)?;
            }
        } else {
            let mut prescreen: Vec<usize> = Vec::new();
            if let Ok(vinv) = v.inverse() {
                for a in &target.atoms {
                    prescreen.extend(search.nearest(&a.center.mul(&vinv), 8));
                }
            }
            prescreen.sort_unstable();
            prescreen.dedup();
            for i in prescreen {
                consider(i, &mut best)?;
            }
            if best.as_ref().map_or(true, |b| b.margin <= 0.0) {
                // Fallback: global prescreen (hash lookup is a heuristic).
                if let Ok(vinv) = v.inverse() {
                    for a in &target.atoms {
                        for i in search.nearest_global(&a.center.mul(&vinv), 24) {
                            consider(i, &mut best)?;
                        }
                    }
                }
            }
        }
        let best = best.ok_or(CoveringError::EmptyFamily)?;
        if best.margin <= 0.0 {
            failing.push(pi);
        }
        witnesses.push(best);
    }
    Ok((witnesses, failing))
}

/// Re-check a certificate from its own data alone: every stored witness
/// must still have a positive margin against the target region.
pub fn reverify_certificate(
    cert: &CoveringCertificate,
    target: &Region,
) -> Result<bool, CoveringError> {
    if cert.net_points.len() != cert.witnesses.len() {
        return Ok(false);
    }
    for (v, w) in cert.net_points.iter().zip(&cert.witnesses) {
        if w.family >= cert.family.len() {
            return Ok(false);
        }
        let (margin, _) = certified_margin(&cert.family[w.family].mat, v, target, cert.spacing)?;
        if margin <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------
// eta and uniform delta
// ---------------------------------------------------------------------

/// The explicit constant eta(U, S, r) = 1 + (r+1) beta^3 (plus a safety
/// term) with beta a bound on ||g^{+-1}|| over S and the inflated atoms
/// of U; guarantees U B_r inside s U B_eta for every s in S.
pub fn eta(u: &Region, s_bound: f64, r: f64) -> Result<f64, CoveringError> {
    if u.slack > 0.0 {
        return Err(CoveringError::Invalid("eta over slack regions unsupported".into()));
    }
    let mut beta: f64 = s_bound;
    for a in &u.atoms {
        let fwd = a.center.spectral_norm() + a.radius;
        let inv = inverse_norm_bound(&a.center, a.radius, u.tag)
            .ok_or(CoveringError::UnboundedRegion)?;
        beta = beta.max(fwd).max(inv);
    }
    Ok(1.0 + (r + 1.0) * beta.powi(3) + 1e-9)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformDelta {
    pub delta: f64,
    pub initial_guess: f64,
    pub bisections: u32,
    pub samples: usize,
    /// The bisection floor is an engineering surrogate for the paper's
    /// compactness constant and is flagged in reports.
    pub floor: f64,
}

/// A delta > 0 such that U B_{R+delta} lands inside family^{-1} U
/// B_{R-delta} across a grid of R in [r_lo, r_hi] (grid step at most
/// delta/2). Seeded from the base covering margin (delta_0 = margin /
/// (2 max Lip)) and bisected down against sampled witness searches.
pub fn uniform_delta(
    cert: &CoveringCertificate,
    u: &Region,
    r_lo: f64,
    r_hi: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<UniformDelta, CoveringError> {
    let max_lip = cert
        .family
        .iter()
        .map(|f| f.mat.spectral_norm())
        .fold(1.0f64, f64::max);
    let initial = cert.min_margin / (2.0 * max_lip);
    let search = FamilySearch::build(cert.family.iter().map(|f| f.mat.clone()).collect());
    let mut delta = initial;
    let mut bisections = 0;
    let floor = 1e-6;
    'outer: loop {
        if delta < floor {
            return Err(CoveringError::DeltaFloor);
        }
        let grid_n = (((r_hi - r_lo) / (delta / 2.0)).ceil() as usize).clamp(3, 4096);
        let dense_every = grid_n / 16 + 1;
        for gi in 0..=grid_n {
            let r = r_lo + (r_hi - r_lo) * gi as f64 / grid_n as f64;
            let trials = if gi % dense_every == 0 {
                (samples / 48).max(8)
            } else {
                2
            };
            for _ in 0..trials {
                if !delta_sample_ok(&search, u, r, delta, rng)? {
                    delta /= 2.0;
                    bisections += 1;
                    continue 'outer;
                }
            }
        }
        return Ok(UniformDelta { delta, initial_guess: initial, bisections, samples, floor });
    }
}

/// One sampled check of U B_{R+delta} inside family^{-1} U B_{R-delta}.
fn delta_sample_ok(
    search: &FamilySearch,
    u: &Region,
    r: f64,
    delta: f64,
    rng: &mut impl Rng,
) -> Result<bool, CoveringError> {
    let big = u.clone().with_slack(r + delta);
    let small = u.clone().with_slack(r - delta);
    let (z, _, ylog) = big.sample(rng)?;
    Ok(single_step_witness(search, &small, &z, ylog.as_ref())?.is_some())
}

/// Find one family element g with g z inside `target` (witness test with
/// positive margin). Candidate targets use partial cancellation of the
/// sampled slack-ball direction when available.
fn single_step_witness(
    search: &FamilySearch,
    target: &Region,
    z: &Mat,
    ball_log: Option<&Mat>,
) -> Result<Option<usize>, CoveringError> {
    let mut candidates: Vec<usize> = Vec::new();
    let zinv = z.inverse().ok();
    if let Some(zi) = &zinv {
        for a in &target.atoms {
            candidates.extend(search.nearest(&a.center.mul(zi), 8));
        }
    }
    // Partial cancellation: for z = u exp(Y) the map exp(-sY) u^{-1}
    // (= exp((1-s)Y) z^{-1}) contracts the slack factor by the fraction
    // s while staying within a bounded-norm family.
    if let (Some(y), Some(zi)) = (ball_log, &zinv) {
        for s in [0.01, 0.03, 0.08, 0.2, 0.5, 1.0] {
            let t = y.scale(1.0 - s).exp().mul(zi);
            candidates.extend(search.nearest(&t, 4));
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    let mut best: Option<(usize, f64)> = None;
    for i in candidates {
        let mem = target.membership(&search.mats[i].mul(z))?;
        if mem.margin > MARGIN_SAFETY && best.map_or(true, |(_, m)| mem.margin > m) {
            best = Some((i, mem.margin));
        }
    }
    if best.is_none() {
        // Complete fallback: scan the whole family. A miss here is a
        // genuine sampled refutation, not a search artifact.
        for (i, g) in search.mats.iter().enumerate() {
            let mem = target.membership(&g.mul(z))?;
            if mem.margin > MARGIN_SAFETY && best.map_or(true, |(_, m)| mem.margin > m) {
                best = Some((i, mem.margin));
            }
        }
    }
    Ok(best.map(|(i, _)| i))
}

// ---------------------------------------------------------------------
// Multiple covering for matrix families (the IFS route)
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IfsLayer {
    /// Indices into the family forming the k0-prefix of every word of
    /// this layer; the remaining m slots range over the whole family.
    pub prefix: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IfsMultiCover {
    pub family: Vec<FamilyMember>,
    pub base_region: Region,
    pub k0: usize,
    pub r0: f64,
    pub delta: UniformDelta,
    /// Smallest m with r0 - m delta < 1.
    pub m: usize,
    pub layers: Vec<IfsLayer>,
    /// The covered region V = U B_{r0}.
    pub v_region: Region,
    /// Seed used for the sampled layer verification at build time.
    pub seed: u64,
    pub samples: usize,
    pub min_sample_margin: f64,
}

/// Follow the covering-to-multiple-covering construction for a matrix
/// family: choose k0 with |family|^{k0} >= n_layers, R0 beyond
/// eta(U, inverse k0-products, 1), delta from the uniform-delta
/// surrogate, m the smallest integer with R0 - m delta < 1, and layers
/// indexed by distinct k0-prefixes. Layer inclusions over the slack
/// region V are verified by sampled witness chains (V is too large to
/// net exhaustively).
pub fn multi_cover_from_cover(
    cert: &CoveringCertificate,
    u: &Region,
    n_layers: usize,
    samples: usize,
    seed: u64,
) -> Result<IfsMultiCover, CoveringError> {
    use rand::SeedableRng;
    let family = &cert.family;
    if family.len() < 2 {
        return Err(CoveringError::FamilyTooSmall);
    }
    let mut k0 = 1usize;
    while family.len().pow(k0 as u32) < n_layers {
        k0 += 1;
    }
    let mut fam_bound: f64 = 1.0;
    for f in family {
        fam_bound = fam_bound
            .max(f.mat.spectral_norm())
            .max(f.mat.inverse()?.spectral_norm());
    }
    let s_bound = fam_bound.powi(k0 as i32);
    let r0 = eta(u, s_bound, 1.0)? + 0.5;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let delta = uniform_delta(cert, u, 1.0, r0, samples.min(1500), &mut rng)?;
    let m = ((r0 - 1.0) / delta.delta).floor() as usize + 1;
    // First n_layers distinct k0-tuples in lexicographic order.
    let mut layers = Vec::with_capacity(n_layers);
    let mut tuple = vec![0usize; k0];
    for _ in 0..n_layers {
        layers.push(IfsLayer { prefix: tuple.clone() });
        for slot in (0..k0).rev() {
            if tuple[slot] + 1 < family.len() {
                tuple[slot] += 1;
                break;
            }
            tuple[slot] = 0;
        }
    }
    let v_region = u.clone().with_slack(r0);
    let mut mc = IfsMultiCover {
        family: family.to_vec(),
        base_region: u.clone(),
        k0,
        r0,
        delta,
        m,
        layers,
        v_region,
        seed,
        samples,
        min_sample_margin: f64::INFINITY,
    };
    let min_margin = verify_ifs_multi_cover(&mc, samples, seed)?;
    mc.min_sample_margin = min_margin;
    Ok(mc)
}

/// Sampled verification of every layer inclusion closure(V) inside
/// (P_layer)^{-1} V: each sample point admits a full-length layer word
/// whose product maps it back into V with positive margin. Returns the
/// minimum sampled margin.
pub fn verify_ifs_multi_cover(
    mc: &IfsMultiCover,
    samples: usize,
    seed: u64,
) -> Result<f64, CoveringError> {
    use rand::SeedableRng;
    for i in 0..mc.layers.len() {
        for j in i + 1..mc.layers.len() {
            if mc.layers[i].prefix == mc.layers[j].prefix {
                return Err(CoveringError::Invalid("layers share a prefix".into()));
            }
        }
    }
    let d = mc.delta.delta;
    if !(mc.r0 - mc.m as f64 * d < 1.0 && 1.0 <= mc.r0 - (mc.m as f64 - 1.0) * d) {
        return Err(CoveringError::Invalid("m does not match R0 and delta".into()));
    }
    let search = FamilySearch::build(mc.family.iter().map(|f| f.mat.clone()).collect());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut min_margin = f64::INFINITY;
    let per_layer = (samples / mc.layers.len()).max(1);
    for layer in &mc.layers {
        for _ in 0..per_layer {
            let (z, _, _) = mc.v_region.sample(&mut rng)?;
            let margin = layer_chain_margin(mc, &search, layer, &z)?;
            min_margin = min_margin.min(margin);
            if margin <= 0.0 {
                return Err(CoveringError::ChainSearchFailed(mc.m));
            }
        }
    }
    Ok(min_margin)
}

/// Drive one sample through a layer: apply the k0 prefix, then choose m
/// family elements greedily so the final product point sits in V with
/// positive margin.
fn layer_chain_margin(
    mc: &IfsMultiCover,
    search: &FamilySearch,
    layer: &IfsLayer,
    z: &Mat,
) -> Result<f64, CoveringError> {
    let mut state = z.clone();
    for &i in &layer.prefix {
        state = mc.family[i].mat.mul(&state);
    }
    for _step in 0..mc.m {
        let pick = descend_step(search, &mc.base_region, &state)?;
        state = search.mats[pick].mul(&state);
    }
    Ok(mc.v_region.membership(&state)?.margin)
}

/// One greedy descent step: pick the family element whose application
/// minimizes the witnessed distance to the atom part of the region
/// (candidate targets built by partial cancellation in exponential
/// coordinates).
fn descend_step(
    search: &FamilySearch,
    u: &Region,
    state: &Mat,
) -> Result<usize, CoveringError> {
    let mut candidates: Vec<usize> = Vec::new();
    for a in &u.atoms {
        if let Ok(ainv) = a.center.inverse() {
            if let Ok(x) = ainv.mul(state).log() {
                for s in [1.0, 0.6, 0.35, 0.2, 0.1, 0.05] {
                    let target = x.scale(-s).exp().mul(&ainv);
                    candidates.extend(search.nearest(&target, 4));
                }
            }
        }
        if let Ok(sinv) = state.inverse() {
            candidates.extend(search.nearest(&a.center.mul(&sinv), 4));
        }
    }
    // Identity-ish fallback member keeps finished chains in place.
    candidates.extend(search.nearest(&Mat::identity(state.d), 2));
    candidates.sort_unstable();
    candidates.dedup();
    let mut best: Option<(usize, f64)> = None;
    for i in candidates {
        let next = search.mats[i].mul(state);
        let mut score = f64::INFINITY;
        for a in &u.atoms {
            if let Ok(ainv) = a.center.inverse() {
                score = score.min(ainv.mul(&next).dist_id());
            }
        }
        if best.map_or(true, |(_, s)| score < s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i).ok_or(CoveringError::ChainSearchFailed(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sl2() -> GroupTag {
        GroupTag::SpecialLinear
    }

    #[test]
    fn ball_net_contains_identity_and_grows() {
        let n1 = net_ball_identity(2, sl2(), 0.1, 0.05).unwrap();
        assert!(n1.points.iter().any(|p| p.dist_id() < 1e-12));
        assert!(n1.points.iter().all(|p| p.dist_id() <= 0.1 + 1e-9));
        let n2 = net_ball_identity(2, sl2(), 0.1, 0.025).unwrap();
        let ratio = n2.points.len() as f64 / n1.points.len() as f64;
        assert!(
            (3.0..24.0).contains(&ratio),
            "halving h should grow a 3-dim net roughly 8x, got {ratio}"
        );
    }

    #[test]
    fn ball_net_covers_sampled_points() {
        let rho = 0.2;
        let h = 0.06;
        let net = net_ball_identity(2, sl2(), rho, h).unwrap();
        let region = Region::id_ball(2, rho, sl2());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..400 {
            let (p, _, _) = region.sample(&mut rng).unwrap();
            let d = nearest_dist(&net.points, &p);
            assert!(d <= h, "sampled point at distance {d} > {h}");
        }
    }

    fn nearest_dist(points: &[Mat], p: &Mat) -> f64 {
        // Single-pass Frobenius prescreen, operator-norm check on the
        // shortlist.
        let short = top_k_frobenius(points, p, 16);
        short
            .into_iter()
            .map(|i| points[i].dist(p))
            .fold(f64::INFINITY, f64::min)
    }

    fn top_k_frobenius(points: &[Mat], p: &Mat, k: usize) -> Vec<usize> {
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (i, q) in points.iter().enumerate() {
            let d = frob_dist(q, p);
            if best.len() < k {
                best.push((d, i));
                best.sort_by(|a, b| a.partial_cmp(b).unwrap());
            } else if d < best[k - 1].0 {
                best[k - 1] = (d, i);
                best.sort_by(|a, b| a.partial_cmp(b).unwrap());
            }
        }
        best.into_iter().map(|(_, i)| i).collect()
    }

    #[test]
    fn composed_net_covers_slack_region() {
        // Product nets multiply in size, so keep the spacing coarse.
        let region = Region::id_ball(2, 0.15, sl2()).with_slack(0.2);
        let h = 0.3;
        let net = build_net(&region, h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..60 {
            let (p, _, _) = region.sample(&mut rng).unwrap();
            let d = nearest_dist(&net.points, &p);
            assert!(d <= h, "slack sample at distance {d} > {h}");
        }
    }

    pub(super) fn inverse_net_family(rho: f64, spacing: f64) -> Vec<FamilyMember> {
        let net = net_ball_identity(2, GroupTag::SpecialLinear, rho, spacing).unwrap();
        net.points
            .iter()
            .enumerate()
            .map(|(i, p)| FamilyMember {
                label: format!("inv{i}"),
                mat: p.inverse().unwrap(),
            })
            .collect()
    }

    #[test]
    fn inverse_net_certifies_and_identity_family_fails() {
        let u = Region::id_ball(2, 0.2, sl2());
        let family = inverse_net_family(0.3, 0.05);
        let cert = verify_covering(&family, &u, 0.06).unwrap();
        assert!(cert.min_margin >= 1e-3, "margin {}", cert.min_margin);
        assert!(reverify_certificate(&cert, &u).unwrap());
        let idf = vec![FamilyMember { label: "id".into(), mat: Mat::identity(2) }];
        assert!(matches!(
            verify_covering(&idf, &u, 0.06),
            Err(CoveringError::Inconclusive { .. })
        ));
    }

    #[test]
    fn certificate_soundness_sampled() {
        let u = Region::id_ball(2, 0.2, sl2());
        let family = inverse_net_family(0.3, 0.05);
        let cert = verify_covering(&family, &u, 0.06).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (p, _, _) = u.sample(&mut rng).unwrap();
            // Nearest net point's witness must send p strictly inside.
            let (wi, _) = top_k_frobenius(&cert.net_points, &p, 16)
                .into_iter()
                .map(|i| (i, cert.net_points[i].dist(&p)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            let w = &cert.witnesses[wi];
            let image = cert.family[w.family].mat.mul(&p);
            let mem = u.membership(&image).unwrap();
            assert!(mem.margin > 0.0, "sampled point escaped: {}", mem.margin);
        }
    }

    #[test]
    fn rotation_atoms_region_covered_by_rotations() {
        // U is an arc around the identity inside SO(2) (a union of
        // rotation-centered arc atoms); a net of inverse rotations
        // covers it. In the full group SL(2) rotations could never
        // supply a radial margin.
        let mut atoms = Vec::new();
        for i in -2i32..=2 {
            atoms.push(Atom { center: Mat::rotation2(0.1 * i as f64), radius: 0.12 });
        }
        let u = Region { dim: 2, tag: GroupTag::Rotation2, atoms, slack: 0.0 };
        let mut family: Vec<FamilyMember> = Vec::new();
        let mut t = -0.5;
        let mut i = 0;
        while t <= 0.5 {
            family.push(FamilyMember { label: format!("rot{i}"), mat: Mat::rotation2(-t) });
            t += 0.02;
            i += 1;
        }
        for extra in [1.0, -1.0] {
            family.push(FamilyMember {
                label: format!("r3x{extra}"),
                mat: Mat::rotation2(extra * 2.0 * std::f64::consts::PI / 3.0),
            });
        }
        let cert = verify_covering(&family, &u, 0.04).unwrap();
        assert!(cert.min_margin > 0.0);
    }

    #[test]
    fn eta_formula_values() {
        // beta = 2, r = 1 -> eta = 17 (+ safety).
        let u = Region::id_ball(2, 0.2, sl2());
        let e = eta(&u, 2.0, 1.0).unwrap();
        assert!((e - 17.0).abs() < 1e-6);
        // S = {Id}, degenerate atom: beta = 1, eta = r + 2.
        let tiny = Region::id_ball(2, 1e-9, sl2());
        let e = eta(&tiny, 1.0, 0.5).unwrap();
        assert!((e - 2.5).abs() < 1e-6);
    }

    #[test]
    fn eta_guarantee_sampled() {
        let u = Region::id_ball(2, 0.2, sl2());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s_mats: Vec<Mat> = (0..5)
            .map(|_| random_algebra_direction(2, sl2(), &mut rng).scale(0.3).exp())
            .collect();
        let s_bound = s_mats
            .iter()
            .map(|m| m.spectral_norm().max(m.inverse().unwrap().spectral_norm()))
            .fold(1.0f64, f64::max);
        let r = 1.0;
        let e = eta(&u, s_bound, r).unwrap();
        let ur = u.clone().with_slack(r);
        for _ in 0..1000 {
            let (ub, _, _) = ur.sample(&mut rng).unwrap();
            for s in &s_mats {
                // u b lands in s U B_eta, witnessed by u' = Id.
                let test = s.inverse().unwrap().mul(&ub);
                assert!(test.dist_id() < e, "eta guarantee violated");
            }
        }
    }

    #[test]
    fn uniform_delta_certifies_and_reverifies() {
        let u = Region::id_ball(2, 0.2, sl2());
        let family = inverse_net_family(0.3, 0.04);
        let cert = verify_covering(&family, &u, 0.06).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ud = uniform_delta(&cert, &u, 1.0, 3.0, 400, &mut rng).unwrap();
        assert!(ud.delta > 0.0);
        assert!(ud.delta <= ud.initial_guess);
        // Independent re-check at lo, mid, hi.
        let search = FamilySearch::build(cert.family.iter().map(|f| f.mat.clone()).collect());
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for r in [1.0, 2.0, 3.0] {
            for _ in 0..60 {
                assert!(delta_sample_ok(&search, &u, r, ud.delta, &mut rng).unwrap());
            }
        }
    }

    #[test]
    fn ifs_multi_cover_two_layers() {
        let u = Region::id_ball(2, 0.2, sl2());
        let family = inverse_net_family(0.3, 0.04);
        let cert = verify_covering(&family, &u, 0.06).unwrap();
        let mc = multi_cover_from_cover(&cert, &u, 2, 150, 77).unwrap();
        assert_eq!(mc.k0, 1);
        assert_eq!(mc.layers.len(), 2);
        assert_ne!(mc.layers[0].prefix, mc.layers[1].prefix);
        let d = mc.delta.delta;
        assert!(mc.r0 - mc.m as f64 * d < 1.0);
        assert!(1.0 <= mc.r0 - (mc.m as f64 - 1.0) * d);
        let margin = verify_ifs_multi_cover(&mc, 60, 78).unwrap();
        assert!(margin > 0.0);
    }

    #[test]
    fn monotone_in_spacing() {
        // If verification succeeds at h it succeeds at every finer h.
        let u = Region::id_ball(2, 0.2, sl2());
        let family = inverse_net_family(0.3, 0.05);
        let coarse = verify_covering(&family, &u, 0.08).unwrap();
        let fine = verify_covering(&family, &u, 0.04).unwrap();
        assert!(fine.min_margin >= coarse.min_margin - 1e-9);
    }

    #[test]
    fn norm_bounds() {
        let u = Region::id_ball(2, 0.2, sl2());
        assert!(u.norm_bound().unwrap() >= 1.2);
        let v = u.with_slack(3.0);
        assert!(v.norm_bound().unwrap() >= 4.0 * 1.2);
    }
}

