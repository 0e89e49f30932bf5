//! Covering and multiple-covering conditions for locally constant
//! cocycles.
//!
//! The base covering condition is verified per window letter: the
//! closure of the region must be covered by pullbacks of transition
//! products starting at that letter. The multiple-covering construction
//! then produces, for every discovered region and letter, two layers of
//! transition words. All words of both layers carry the same chain
//! advance and funnel through a common anchor letter before one of two
//! detours that diverge right after a branching vertex, so the union of
//! the two layers is an anti-chain by construction. Every layer carries
//! an exhaustively netted inclusion certificate into the union of the
//! discovered regions.
//!
//! The discovered regions play the role of the finite subcover in the
//! covering-to-multiple-covering argument: the construction tracks only
//! the part of the group that products actually reach, which keeps
//! every net small enough to check exhaustively.

use crate::cocycle::Cocycle;
use crate::covering::{
    build_net, cover_points, eta, reverify_certificate, uniform_delta, verify_covering_into,
    Atom, CoveringCertificate, CoveringError, FamilyMember, Region, UniformDelta,
    MARGIN_SAFETY,
};
use crate::mat::Mat;
use crate::sft::{amalgamate, higher_block, shortest_transition, transitions, Word};
use serde::{Deserialize, Serialize};

/// Where the transition words for a covering family come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum WordSource {
    /// Enumerate all admissible transitions up to this length.
    Enumerate { max_len: usize },
    /// Use exactly these words (filtered per letter).
    Explicit(Vec<Word>),
}

/// Transition words from one letter together with their products and an
/// (advance, terminal letter) index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordFamily {
    pub letter: Word,
    pub words: Vec<Word>,
    pub members: Vec<FamilyMember>,
    /// Parallel to `words`: iterate advance and terminal letter index.
    pub advance: Vec<usize>,
    pub terminal: Vec<usize>,
}

/// Build the per-letter family: words with the letter as prefix, some
/// element of `letters` as suffix, and at least one iterate of advance.
pub fn transition_products(
    a: &Cocycle,
    from: &Word,
    letters: &[Word],
    source: &WordSource,
) -> Result<WordFamily, CoveringError> {
    let mut words = Vec::new();
    match source {
        WordSource::Enumerate { max_len } => {
            for b in letters {
                words.extend(transitions(&a.ts, from, b, *max_len)?);
            }
            words.sort();
            words.dedup();
            words.retain(|w| a.advance(w) >= 1);
        }
        WordSource::Explicit(list) => {
            for w in list {
                if w.len() <= from.len() || w.0[..from.len()] != from.0[..] {
                    continue;
                }
                if a.advance(w) < 1 {
                    continue;
                }
                let suffix_ok = letters
                    .iter()
                    .any(|b| w.len() >= b.len() && w.0[w.len() - b.len()..] == b.0[..]);
                if suffix_ok && a.ts.is_admissible(w)? {
                    words.push(w.clone());
                }
            }
            words.sort();
            words.dedup();
        }
    }
    let mut members = Vec::with_capacity(words.len());
    let mut advance = Vec::with_capacity(words.len());
    let mut terminal = Vec::with_capacity(words.len());
    for w in &words {
        members.push(FamilyMember {
            label: w.to_string(),
            mat: a.product_over_transition(w)?,
        });
        advance.push(a.advance(w));
        let t = letters
            .iter()
            .position(|b| w.len() >= b.len() && w.0[w.len() - b.len()..] == b.0[..])
            .ok_or_else(|| CoveringError::Invalid("word lost its terminal letter".into()))?;
        terminal.push(t);
    }
    Ok(WordFamily { letter: from.clone(), words, members, advance, terminal })
}

/// Base covering condition certificates, one per letter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CocycleCovering {
    pub letters: Vec<Word>,
    pub region: Region,
    pub spacing: f64,
    pub families: Vec<WordFamily>,
    pub certs: Vec<CoveringCertificate>,
}

impl CocycleCovering {
    pub fn min_margin(&self) -> f64 {
        self.certs
            .iter()
            .map(|c| c.min_margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Certify the covering condition for `a` over the letter set: for every
/// letter, closure(U) sits inside the union of pullbacks of transition
/// products starting at that letter.
pub fn verify_cocycle_covering(
    a: &Cocycle,
    letters: &[Word],
    u: &Region,
    h: f64,
    source: &WordSource,
) -> Result<CocycleCovering, CoveringError> {
    if letters.is_empty() {
        return Err(CoveringError::Invalid("letter set is empty".into()));
    }
    let wl = a.window_len();
    for l in letters {
        if l.len() != wl || !a.ts.is_admissible(l)? {
            return Err(CoveringError::Invalid(format!(
                "letter {l} is not an admissible window word"
            )));
        }
    }
    let mut families = Vec::with_capacity(letters.len());
    let mut certs = Vec::with_capacity(letters.len());
    for from in letters {
        let fam = transition_products(a, from, letters, source)?;
        if fam.members.is_empty() {
            return Err(CoveringError::EmptyFamily);
        }
        let cert = verify_covering_into(&fam.members, u, u, h)?;
        families.push(fam);
        certs.push(cert);
    }
    Ok(CocycleCovering {
        letters: letters.to_vec(),
        region: u.clone(),
        spacing: h,
        families,
        certs,
    })
}

/// The two detours out of the anchor letter: a common approach to a
/// branching vertex, the two distinct continuations, and shortest
/// returns into the letter set. The pair is an anti-chain because the
/// words first differ right after the branching vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetourPair {
    pub words: [Word; 2],
    pub products: [Mat; 2],
    pub advances: [usize; 2],
    pub terminals: [usize; 2],
}

fn build_detours(
    a: &Cocycle,
    letters: &[Word],
    anchor: &Word,
) -> Result<DetourPair, CoveringError> {
    let g = higher_block(&a.ts, 1)?;
    let q_idx = crate::sft::branching_vertex(&g).ok_or_else(|| {
        CoveringError::Invalid("base system has entropy zero: no branching vertex".into())
    })?;
    let q = g.vertices[q_idx].0[0];
    let succ = a.ts.successors(q);
    let (q1, q2) = (succ[0], succ[1]);
    let approach = shortest_transition(&a.ts, anchor, &Word(vec![q]))?;
    let mut words = Vec::with_capacity(2);
    let mut terminals = Vec::with_capacity(2);
    for qi in [q1, q2] {
        let with_branch = amalgamate(&approach, &Word(vec![q, qi]), 1, Some(&a.ts))?;
        let mut best: Option<(Word, usize)> = None;
        for (ti, target) in letters.iter().enumerate() {
            let ret = shortest_transition(&a.ts, &Word(vec![qi]), target)?;
            let cand = amalgamate(&with_branch, &ret, 1, Some(&a.ts))?;
            if best.as_ref().map_or(true, |(b, _)| {
                cand.len() < b.len() || (cand.len() == b.len() && cand < *b)
            }) {
                best = Some((cand, ti));
            }
        }
        let (w, t) = best.expect("letters nonempty");
        words.push(w);
        terminals.push(t);
    }
    let products = [
        a.product_over_transition(&words[0])?,
        a.product_over_transition(&words[1])?,
    ];
    let advances = [a.advance(&words[0]), a.advance(&words[1])];
    Ok(DetourPair {
        words: [words[0].clone(), words[1].clone()],
        products,
        advances,
        terminals: [terminals[0], terminals[1]],
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmcParams {
    /// Net spacing for the per-inclusion certificates.
    pub spacing: f64,
    /// Radius of freshly discovered regions.
    pub region_radius: f64,
    pub max_regions: usize,
    /// Common iterate advance of every chain part (the detour advance
    /// comes on top). Equal advances make layer unions anti-chains.
    pub chain_advance: usize,
    /// Enrichment rounds per layer before giving up.
    pub max_rounds: usize,
    /// Samples for the uniform-delta surrogate.
    pub delta_samples: usize,
    pub seed: u64,
}

impl Default for CmcParams {
    fn default() -> Self {
        CmcParams {
            spacing: 0.02,
            region_radius: 0.1,
            max_regions: 64,
            chain_advance: 40,
            max_rounds: 12,
            delta_samples: 240,
            seed: 1,
        }
    }
}

/// One layer: point-adapted words (all of one length) whose pullbacks
/// jointly cover the region, certified by a net.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerEntry {
    pub words: Vec<Word>,
    pub cert: CoveringCertificate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiCoverEntry {
    pub region: usize,
    pub letter: usize,
    pub layers: Vec<LayerEntry>,
}

/// Multiple covering certificate for a cocycle: discovered regions
/// U_1..U_n, per-(region, letter) layer word sets forming anti-chains,
/// and one netted inclusion certificate per layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CocycleMultiCover {
    pub letters: Vec<Word>,
    pub base_region: Region,
    pub regions: Vec<Atom>,
    pub entries: Vec<MultiCoverEntry>,
    pub layers: usize,
    pub spacing: f64,
    /// Constants from the construction: detour norm bound, R0 from eta,
    /// the uniform-delta surrogate, and the chain-step cap m.
    pub s_bound: f64,
    pub r0: f64,
    pub delta: UniformDelta,
    pub m_chain: usize,
    /// Max iterate advance over all layer words (the constant L).
    pub max_advance: usize,
    pub window: usize,
}

impl CocycleMultiCover {
    pub fn union_region(&self) -> Region {
        Region {
            dim: self.base_region.dim,
            tag: self.base_region.tag,
            atoms: self.regions.clone(),
            slack: 0.0,
        }
    }

    pub fn entry(&self, region: usize, letter: usize) -> Option<&MultiCoverEntry> {
        self.entries
            .iter()
            .find(|e| e.region == region && e.letter == letter)
    }

    pub fn letter_index(&self, w: &Word) -> Option<usize> {
        self.letters.iter().position(|l| l == w)
    }

    /// Terminal letter index of a layer word.
    pub fn terminal_letter(&self, w: &Word) -> Option<usize> {
        self.letters
            .iter()
            .position(|l| w.len() >= l.len() && w.0[w.len() - l.len()..] == l.0[..])
    }
}

struct ChainContext<'c> {
    a: &'c Cocycle,
    base: &'c CocycleCovering,
    /// Min advance to the anchor from each letter.
    reserve: Vec<usize>,
    anchor: usize,
}

impl<'c> ChainContext<'c> {
    fn new(
        a: &'c Cocycle,
        base: &'c CocycleCovering,
        anchor: usize,
    ) -> Result<Self, CoveringError> {
        let mut reserve = Vec::with_capacity(base.letters.len());
        for fam in &base.families {
            let r = fam
                .advance
                .iter()
                .zip(&fam.terminal)
                .filter(|(_, &t)| t == anchor)
                .map(|(&adv, _)| adv)
                .min()
                .ok_or_else(|| {
                    CoveringError::Invalid("a letter has no transition to the anchor".into())
                })?;
            reserve.push(r);
        }
        Ok(ChainContext { a, base, reserve, anchor })
    }

    /// Build a chain of exactly `budget` iterate advance from `letter`
    /// to the anchor whose product keeps `point` as deep in U as the
    /// greedy search manages. Limited backtracking over the top-scoring
    /// steps.
    fn adapted_chain(
        &self,
        point: &Mat,
        letter: usize,
        budget: usize,
    ) -> Option<(Word, Mat)> {
        self.rec(point, letter, budget, None, Mat::identity(self.a.dim), 0)
    }

    fn rec(
        &self,
        point: &Mat,
        letter: usize,
        remaining: usize,
        word: Option<Word>,
        prod: Mat,
        depth: usize,
    ) -> Option<(Word, Mat)> {
        if remaining == 0 {
            return if letter == self.anchor {
                word.map(|w| (w, prod))
            } else {
                None
            };
        }
        if depth > 24 {
            return None;
        }
        let fam = &self.base.families[letter];
        let u = &self.base.region;
        // Candidates: exact finishers into the anchor, or interior steps
        // leaving room for a finisher.
        let mut scored: Vec<(f64, usize)> = Vec::new();
        for i in 0..fam.words.len() {
            let adv = fam.advance[i];
            let ok = (adv == remaining && fam.terminal[i] == self.anchor)
                || (adv + self.reserve[fam.terminal[i]] <= remaining);
            if !ok {
                continue;
            }
            let image = fam.members[i].mat.mul(&prod).mul(point);
            let margin = u.membership(&image).ok()?.margin;
            scored.push((margin, i));
        }
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        for &(_, i) in scored.iter().take(4) {
            let w = &fam.words[i];
            let next_word = match &word {
                None => w.clone(),
                Some(c) => amalgamate(c, w, self.a.window_len(), Some(&self.a.ts)).ok()?,
            };
            let next_prod = fam.members[i].mat.mul(&prod);
            if let Some(hit) = self.rec(
                point,
                fam.terminal[i],
                remaining - fam.advance[i],
                Some(next_word),
                next_prod,
                depth + 1,
            ) {
                return Some(hit);
            }
        }
        None
    }
}

/// Run the covering-to-multiple-covering construction for a cocycle.
///
/// Constants first: the detour norm bound S, R0 from the eta formula,
/// the uniform-delta surrogate and the chain cap m. Then regions are
/// discovered to a fixpoint: for every (region, letter, layer), point-
/// adapted chain words are added until the region's net is covered,
/// creating a region wherever an image lacks a home. Finally every
/// layer is certified against the full union and the certificate is
/// re-verified before being returned.
pub fn cocycle_multi_cover(
    a: &Cocycle,
    base: &CocycleCovering,
    params: &CmcParams,
) -> Result<CocycleMultiCover, CoveringError> {
    use rand::SeedableRng;
    let u = &base.region;
    let anchor = 0usize;
    let detours = build_detours(a, &base.letters, &base.letters[anchor])?;
    let mut s_bound: f64 = 1.0;
    for p in &detours.products {
        s_bound = s_bound
            .max(p.spectral_norm())
            .max(p.inverse()?.spectral_norm());
    }
    let r0 = eta(u, s_bound, 1.0)? + 0.5;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.seed);
    let mut delta_best: Option<UniformDelta> = None;
    for cert in &base.certs {
        let d = uniform_delta(cert, u, 1.0, r0, params.delta_samples, &mut rng)?;
        if delta_best.as_ref().map_or(true, |b| d.delta < b.delta) {
            delta_best = Some(d);
        }
    }
    let delta = delta_best.ok_or(CoveringError::EmptyFamily)?;
    let m_chain = ((r0 - 1.0) / delta.delta).floor() as usize + 1;
    let ctx = ChainContext::new(a, base, anchor)?;

    // Discovery: per (region, letter, layer) collect point-adapted words
    // until the net is covered, creating regions where images land.
    let mut regions: Vec<Atom> = vec![Atom {
        center: Mat::identity(a.dim),
        radius: params.region_radius,
    }];
    struct Planned {
        region: usize,
        letter: usize,
        words: [Vec<Word>; 2],
        products: [Vec<Mat>; 2],
    }
    let mut planned: Vec<Planned> = Vec::new();
    let mut queue: Vec<(usize, usize)> = (0..base.letters.len()).map(|l| (0, l)).collect();
    let mut qi = 0;
    while qi < queue.len() {
        let (ri, li) = queue[qi];
        qi += 1;
        let source = Region {
            dim: a.dim,
            tag: u.tag,
            atoms: vec![regions[ri].clone()],
            slack: 0.0,
        };
        let net = build_net(&source, params.spacing)?;
        let mut entry_words: [Vec<Word>; 2] = [Vec::new(), Vec::new()];
        let mut entry_products: [Vec<Mat>; 2] = [Vec::new(), Vec::new()];
        for layer in 0..2 {
            let det_word = &detours.words[layer];
            let det_prod = &detours.products[layer];
            let words = &mut entry_words[layer];
            let products = &mut entry_products[layer];
            let mut pending: Vec<Mat> = vec![regions[ri].center.clone()];
            let mut round = 0;
            loop {
                for point in pending.drain(..) {
                    let Some((chain, chain_prod)) =
                        ctx.adapted_chain(&point, li, params.chain_advance)
                    else {
                        continue;
                    };
                    let w = amalgamate(&chain, det_word, a.window_len(), Some(&a.ts))?;
                    if words.contains(&w) {
                        continue;
                    }
                    let prod = det_prod.mul(&chain_prod);
                    // Make sure the image neighborhood has a home region.
                    let image = prod.mul(&point);
                    let lip = prod.spectral_norm();
                    let need =
                        lip * params.spacing + MARGIN_SAFETY + 0.25 * params.region_radius;
                    let union = Region {
                        dim: a.dim,
                        tag: u.tag,
                        atoms: regions.clone(),
                        slack: 0.0,
                    };
                    if union.membership(&image)?.margin < need {
                        if regions.len() >= params.max_regions {
                            return Err(CoveringError::RegionBudget(params.max_regions));
                        }
                        regions.push(Atom {
                            center: image.clone(),
                            radius: params.region_radius,
                        });
                        let new_idx = regions.len() - 1;
                        for l in 0..base.letters.len() {
                            queue.push((new_idx, l));
                        }
                    }
                    words.push(w);
                    products.push(prod);
                }
                if words.is_empty() {
                    return Err(CoveringError::ChainSearchFailed(params.chain_advance));
                }
                let union = Region {
                    dim: a.dim,
                    tag: u.tag,
                    atoms: regions.clone(),
                    slack: 0.0,
                };
                let members: Vec<FamilyMember> = words
                    .iter()
                    .zip(products.iter())
                    .map(|(w, p)| FamilyMember { label: w.to_string(), mat: p.clone() })
                    .collect();
                let (_, failing) = cover_points(&members, &net.points, &union, params.spacing)?;
                if failing.is_empty() {
                    break;
                }
                round += 1;
                if round > params.max_rounds {
                    return Err(CoveringError::Inconclusive {
                        spacing: params.spacing,
                        best_margin: -1.0,
                    });
                }
                pending.extend(failing.iter().take(32).map(|&fi| net.points[fi].clone()));
            }
        }
        planned.push(Planned {
            region: ri,
            letter: li,
            words: entry_words,
            products: entry_products,
        });
    }

    // Final pass: certify every layer against the final union.
    let union = Region {
        dim: a.dim,
        tag: u.tag,
        atoms: regions.clone(),
        slack: 0.0,
    };
    let mut entries = Vec::with_capacity(planned.len());
    let mut max_advance = 0usize;
    for p in planned {
        let source = Region {
            dim: a.dim,
            tag: u.tag,
            atoms: vec![regions[p.region].clone()],
            slack: 0.0,
        };
        let mut layers = Vec::with_capacity(2);
        for layer in 0..2 {
            let members: Vec<FamilyMember> = p.words[layer]
                .iter()
                .zip(p.products[layer].iter())
                .map(|(w, m)| FamilyMember { label: w.to_string(), mat: m.clone() })
                .collect();
            let cert = verify_covering_into(&members, &source, &union, params.spacing)?;
            for w in &p.words[layer] {
                max_advance = max_advance.max(a.advance(w));
            }
            layers.push(LayerEntry { words: p.words[layer].clone(), cert });
        }
        entries.push(MultiCoverEntry { region: p.region, letter: p.letter, layers });
    }
    entries.sort_by_key(|e| (e.region, e.letter));
    let mc = CocycleMultiCover {
        letters: base.letters.clone(),
        base_region: u.clone(),
        regions,
        entries,
        layers: 2,
        spacing: params.spacing,
        s_bound,
        r0,
        delta,
        m_chain,
        max_advance,
        window: a.window_len(),
    };
    let check = verify_multi_cover(a, &mc)?;
    if !check.ok {
        return Err(CoveringError::Invalid(format!(
            "freshly built multi-cover failed its own verification: {:?}",
            check.failures
        )));
    }
    Ok(mc)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiCoverCheck {
    pub ok: bool,
    pub anti_chain_ok: bool,
    pub min_margin: f64,
    pub failures: Vec<String>,
}

/// Re-verify a multiple-covering certificate: anti-chain property per
/// (region, letter), products recomputed from the cocycle, and every
/// layer inclusion re-checked with positive margin.
pub fn verify_multi_cover(
    a: &Cocycle,
    mc: &CocycleMultiCover,
) -> Result<MultiCoverCheck, CoveringError> {
    let union = mc.union_region();
    let mut failures = Vec::new();
    let mut anti_chain_ok = true;
    let mut min_margin = f64::INFINITY;
    for entry in &mc.entries {
        if entry.layers.is_empty() || entry.layers.iter().any(|l| l.words.is_empty()) {
            failures.push(format!(
                "region {} letter {}: empty layer set",
                entry.region, entry.letter
            ));
            continue;
        }
        // Anti-chain over the union of all layers.
        let mut all_words: Vec<Word> = Vec::new();
        for l in &entry.layers {
            all_words.extend(l.words.iter().cloned());
        }
        if !is_anti_chain(&all_words) {
            anti_chain_ok = false;
            failures.push(format!(
                "region {} letter {}: layer union is not an anti-chain",
                entry.region, entry.letter
            ));
        }
        for (j, layer) in entry.layers.iter().enumerate() {
            let tag = format!(
                "region {} letter {} layer {}",
                entry.region, entry.letter, j
            );
            if layer.words.len() != layer.cert.family.len() {
                failures.push(format!("{tag}: word/certificate family mismatch"));
                continue;
            }
            let letter = &mc.letters[entry.letter];
            for (wi, w) in layer.words.iter().enumerate() {
                if !a.ts.is_admissible(w)? {
                    failures.push(format!("{tag}: word {w} not admissible"));
                    continue;
                }
                if w.0[..letter.len()] != letter.0[..] {
                    failures.push(format!("{tag}: word {w} does not start at its letter"));
                }
                if mc.terminal_letter(w).is_none() {
                    failures.push(format!("{tag}: word {w} does not end in the letter set"));
                }
                let product = a.product_over_transition(w)?;
                if product.dist(&layer.cert.family[wi].mat)
                    > 1e-10 * product.spectral_norm().max(1.0)
                {
                    failures.push(format!("{tag}: stored product of {w} does not match"));
                }
            }
            match reverify_certificate(&layer.cert, &union) {
                Ok(true) => {
                    min_margin = min_margin.min(
                        layer
                            .cert
                            .witnesses
                            .iter()
                            .map(|w| w.margin)
                            .fold(f64::INFINITY, f64::min),
                    );
                }
                Ok(false) => failures.push(format!("{tag}: inclusion failed re-verification")),
                Err(e) => failures.push(format!("{tag}: {e}")),
            }
        }
    }
    Ok(MultiCoverCheck {
        ok: failures.is_empty(),
        anti_chain_ok,
        min_margin,
        failures,
    })
}

/// Brute-force all-pairs prefix check, for cross-validating the
/// anti-chain verdicts.
pub fn is_anti_chain(words: &[Word]) -> bool {
    for i in 0..words.len() {
        for j in 0..words.len() {
            if i != j && words[i].is_strict_prefix_of(&words[j]) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn block_cocycle_covering_certifies() {
        let fx = fixtures::block_golden_fixture();
        let cover = verify_cocycle_covering(
            &fx.cocycle,
            &fx.letters,
            &fx.region,
            fx.spacing,
            &fx.source,
        )
        .unwrap();
        assert!(cover.min_margin() > 0.0, "margin {}", cover.min_margin());
    }

    #[test]
    fn multi_cover_builds_and_verifies() {
        let fx = fixtures::block_golden_fixture();
        let cover = verify_cocycle_covering(
            &fx.cocycle,
            &fx.letters,
            &fx.region,
            fx.spacing,
            &fx.source,
        )
        .unwrap();
        let mc = cocycle_multi_cover(&fx.cocycle, &cover, &fx.cmc).unwrap();
        assert_eq!(mc.layers, 2);
        assert!(mc.max_advance > 0);
        for e in &mc.entries {
            let mut words: Vec<Word> = Vec::new();
            for l in &e.layers {
                words.extend(l.words.iter().cloned());
            }
            assert!(is_anti_chain(&words));
        }
        let check = verify_multi_cover(&fx.cocycle, &mc).unwrap();
        assert!(check.ok, "failures: {:?}", check.failures);
        assert!(check.min_margin > 0.0);
    }

    #[test]
    fn corrupting_a_layer_word_fails_verification() {
        let fx = fixtures::block_golden_fixture();
        let cover = verify_cocycle_covering(
            &fx.cocycle,
            &fx.letters,
            &fx.region,
            fx.spacing,
            &fx.source,
        )
        .unwrap();
        let mc = cocycle_multi_cover(&fx.cocycle, &cover, &fx.cmc).unwrap();
        let mut bad = mc.clone();
        let w = &mut bad.entries[0].layers[0].words[0];
        let mid = w.len() / 2;
        w.0[mid] = if w.0[mid] == 1 { 2 } else { 1 };
        let check = verify_multi_cover(&fx.cocycle, &bad).unwrap();
        assert!(!check.ok);
        assert!(check.failures.iter().any(|f| f.contains("region 0")));
        let mut empty = mc;
        empty.entries[0].layers.clear();
        let check2 = verify_multi_cover(&fx.cocycle, &empty).unwrap();
        assert!(!check2.ok);
    }
}
