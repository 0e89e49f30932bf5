//! Locally constant cocycles over subshifts of finite type: window
//! tables, products over transition words and the exact composition law,
//! bounded-word languages with prefix pruning, and Hölder seminorms.
//!
//! A cocycle value may carry overlay rules: on cylinders matching a
//! fixed pattern the table value is right-multiplied by a factor. The
//! table is then materialized only on the base window, which keeps
//! perturbed cocycles (whose effective windows are long) linear in the
//! plan size.

use crate::mat::{Mat, MatError};
use crate::sft::{SftError, Symbol, TransitionSystem, Word};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CocycleError {
    #[error(transparent)]
    Sft(#[from] SftError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error("table is missing window {0}")]
    MissingWindow(Word),
    #[error("value at window {0} is not invertible enough (|det| = {1:.3e})")]
    NotInvertible(Word, f64),
    #[error("value at window {0} violates the special-linear tag (det = {1:.12})")]
    NotSpecialLinear(Word, f64),
    #[error("word of length {0} is too short for one window plus a step (need >= {1})")]
    WordTooShort(usize, usize),
    #[error("word {0} is not admissible")]
    NotAdmissible(Word),
    #[error("{0} is not a periodic point: wrap transition forbidden")]
    NotPeriodic(Word),
    #[error("kappa = {0} is vacuous: the identity already has norm 1")]
    VacuousBound(f64),
    #[error("operation requires a plain table without overlay rules")]
    RulesUnsupported,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupTag {
    SpecialLinear,
    General,
    /// The rotation subgroup SO(2) inside SL(2, R); regions tagged with
    /// it are arcs rather than full-dimensional balls.
    Rotation2,
}

impl GroupTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            GroupTag::SpecialLinear => "special-linear",
            GroupTag::General => "general",
            GroupTag::Rotation2 => "rotation-2",
        }
    }

    pub fn parse(s: &str) -> Option<GroupTag> {
        match s {
            "special-linear" => Some(GroupTag::SpecialLinear),
            "general" => Some(GroupTag::General),
            "rotation-2" => Some(GroupTag::Rotation2),
            _ => None,
        }
    }

    /// Determinant constraint carried by the tag.
    pub fn det_constrained(&self) -> bool {
        !matches!(self, GroupTag::General)
    }
}

/// Overlay rule: when the effective window contains `pattern` starting at
/// center offset `offset`, the base value is right-multiplied by `factor`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlayRule {
    pub offset: isize,
    pub pattern: Word,
    pub factor: Mat,
}

impl OverlayRule {
    /// Largest |position| relative to the center the rule inspects.
    pub fn reach(&self) -> usize {
        let lo = -self.offset;
        let hi = self.offset + self.pattern.len() as isize - 1;
        lo.max(hi).max(0) as usize
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cocycle {
    pub ts: TransitionSystem,
    pub dim: usize,
    pub tag: GroupTag,
    /// Window radius of the dense table.
    pub base_radius: usize,
    /// Effective window radius (>= base_radius once rules are attached).
    pub radius: usize,
    pub table: BTreeMap<Word, Mat>,
    pub rules: Vec<OverlayRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundMode {
    /// Every prefix partial product P satisfies ||P^{+-1}|| <= kappa.
    ForwardPrefix,
    /// Every interval sub-product has norm <= kappa^2.
    AllIntervals,
}

impl BoundMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundMode::ForwardPrefix => "forward-prefix",
            BoundMode::AllIntervals => "all-intervals",
        }
    }

    pub fn parse(s: &str) -> Option<BoundMode> {
        match s {
            "forward-prefix" => Some(BoundMode::ForwardPrefix),
            "all-intervals" => Some(BoundMode::AllIntervals),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundedLanguage {
    pub kappa: f64,
    pub n: usize,
    pub mode: BoundMode,
    pub words: Vec<Word>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundedEntropyUpper {
    /// (1/n) log count; None when the language is empty.
    pub estimate: Option<f64>,
    pub count: u128,
    /// Set when no word of length n can violate the bound, so the count
    /// was taken from the transfer matrix without enumeration.
    pub exhaustive_shortcut: bool,
}

impl Cocycle {
    /// Build a plain locally constant cocycle from a total window table.
    pub fn new(
        ts: TransitionSystem,
        dim: usize,
        tag: GroupTag,
        radius: usize,
        table: BTreeMap<Word, Mat>,
    ) -> Result<Self, CocycleError> {
        let c = Cocycle {
            ts,
            dim,
            tag,
            base_radius: radius,
            radius,
            table,
            rules: Vec::new(),
        };
        c.validate()?;
        Ok(c)
    }

    /// A constant cocycle (window radius 0, one value for every symbol).
    pub fn constant(ts: TransitionSystem, value: Mat, tag: GroupTag) -> Result<Self, CocycleError> {
        let dim = value.d;
        let mut table = BTreeMap::new();
        for s in 1..=ts.alphabet as Symbol {
            table.insert(Word(vec![s]), value.clone());
        }
        Cocycle::new(ts, dim, tag, 0, table)
    }

    /// Attach overlay rules, enlarging the effective window radius.
    pub fn with_rules(mut self, rules: Vec<OverlayRule>) -> Result<Self, CocycleError> {
        let mut radius = self.base_radius;
        for r in &rules {
            if r.factor.d != self.dim {
                return Err(CocycleError::Invalid("rule factor dimension mismatch".into()));
            }
            radius = radius.max(r.reach());
            // The pattern must determine the base window so values on
            // affected cylinders stay well-defined.
            let lo = r.offset;
            let hi = r.offset + r.pattern.len() as isize - 1;
            if lo > -(self.base_radius as isize) || hi < self.base_radius as isize {
                return Err(CocycleError::Invalid(
                    "rule pattern must cover the base window".into(),
                ));
            }
        }
        self.rules = rules;
        self.radius = radius;
        Ok(self)
    }

    fn validate(&self) -> Result<(), CocycleError> {
        let n = 2 * self.base_radius + 1;
        for w in self.ts.admissible_words(n)? {
            let m = self.table.get(&w).ok_or_else(|| CocycleError::MissingWindow(w.clone()))?;
            if m.d != self.dim {
                return Err(CocycleError::Invalid(format!(
                    "window {w} has dimension {} != {}",
                    m.d, self.dim
                )));
            }
            let det = m.det();
            if det.abs() < 1e-12 {
                return Err(CocycleError::NotInvertible(w.clone(), det.abs()));
            }
            if self.tag.det_constrained() && (det - 1.0).abs() > 1e-9 {
                return Err(CocycleError::NotSpecialLinear(w.clone(), det));
            }
        }
        Ok(())
    }

    pub fn window_len(&self) -> usize {
        2 * self.radius + 1
    }

    /// Iterate count carried by a transition word.
    pub fn advance(&self, w: &Word) -> usize {
        w.len().saturating_sub(self.window_len())
    }

    /// Value of the cocycle on the cylinder given by an effective window.
    pub fn value_at_window(&self, w: &[Symbol]) -> Result<Mat, CocycleError> {
        debug_assert_eq!(w.len(), self.window_len());
        let lo = self.radius - self.base_radius;
        let base_word = &w[lo..lo + 2 * self.base_radius + 1];
        let base = self
            .table
            .get(&Word(base_word.to_vec()))
            .ok_or_else(|| CocycleError::MissingWindow(Word(base_word.to_vec())))?;
        let center = self.radius as isize;
        let mut value: Option<Mat> = None;
        for r in &self.rules {
            let start = center + r.offset;
            let end = start + r.pattern.len() as isize;
            if start < 0 || end > w.len() as isize {
                continue;
            }
            if w[start as usize..end as usize] == r.pattern.0[..] {
                // Affected cylinders are pairwise disjoint, so at most
                // one rule may fire on a window.
                if value.is_some() {
                    return Err(CocycleError::Invalid(
                        "two overlay rules fired on one window".into(),
                    ));
                }
                value = Some(base.mul(&r.factor));
            }
        }
        Ok(value.unwrap_or_else(|| base.clone()))
    }

    /// Product of the cocycle along a transition word, excluding the
    /// final window: factors at window positions 1..=|w|-(2k+1).
    pub fn product_over_transition(&self, w: &Word) -> Result<Mat, CocycleError> {
        let wl = self.window_len();
        if w.len() < wl + 1 {
            return Err(CocycleError::WordTooShort(w.len(), wl + 1));
        }
        if !self.ts.is_admissible(w)? {
            return Err(CocycleError::NotAdmissible(w.clone()));
        }
        let mut p = Mat::identity(self.dim);
        for i in 0..w.len() - wl {
            let f = self.value_at_window(&w.0[i..i + wl])?;
            p = f.mul(&p);
        }
        Ok(p)
    }

    /// Check the composition law over an amalgamated pair of transitions.
    pub fn check_composition(&self, w: &Word, w2: &Word) -> Result<(bool, f64), CocycleError> {
        let overlap = self.window_len();
        let glued = crate::sft::amalgamate(w, w2, overlap, Some(&self.ts))?;
        let lhs = self.product_over_transition(&glued)?;
        let rhs = self.product_over_transition(w2)?.mul(&self.product_over_transition(w)?);
        let err = lhs.dist(&rhs) / rhs.spectral_norm().max(1.0);
        Ok((err <= 1e-10, err))
    }

    /// n-th iterate at the periodic point of `p`.
    pub fn iterate_on_periodic(&self, p: &Word, n: usize) -> Result<Mat, CocycleError> {
        if !self.ts.is_cyclically_admissible(p)? {
            return Err(CocycleError::NotPeriodic(p.clone()));
        }
        let period = p.len();
        let wl = self.window_len();
        let mut prod = Mat::identity(self.dim);
        let mut window: Vec<Symbol> = Vec::with_capacity(wl);
        for j in 0..n {
            window.clear();
            for t in 0..wl {
                // Window at time j spans positions j-k .. j+k of the
                // periodic extension.
                let pos = j as isize - self.radius as isize + t as isize;
                let idx = pos.rem_euclid(period as isize) as usize;
                window.push(p.0[idx]);
            }
            let f = self.value_at_window(&window)?;
            prod = f.mul(&prod);
        }
        Ok(prod)
    }

    /// Supremum of max(||phi||, ||phi^{-1}||) over all windows, rules
    /// included.
    pub fn sup_norm(&self) -> Result<f64, CocycleError> {
        let mut m: f64 = 0.0;
        for v in self.table.values() {
            m = m.max(v.spectral_norm()).max(v.inverse()?.spectral_norm());
        }
        for r in &self.rules {
            let base = self.base_value_of_rule(r)?;
            let v = base.mul(&r.factor);
            m = m.max(v.spectral_norm()).max(v.inverse()?.spectral_norm());
        }
        Ok(m)
    }

    /// Sup over windows of ||phi|| alone (no inverses).
    pub fn sup_value_norm(&self) -> Result<f64, CocycleError> {
        let mut m: f64 = 0.0;
        for v in self.table.values() {
            m = m.max(v.spectral_norm());
        }
        for r in &self.rules {
            let v = self.base_value_of_rule(r)?.mul(&r.factor);
            m = m.max(v.spectral_norm());
        }
        Ok(m)
    }

    /// Base table value on the cylinder a rule fires on (the pattern
    /// covers the base window by construction).
    pub fn base_value_of_rule(&self, r: &OverlayRule) -> Result<Mat, CocycleError> {
        let lo = (-(self.base_radius as isize) - r.offset) as usize;
        let base_word = &r.pattern.0[lo..lo + 2 * self.base_radius + 1];
        self.table
            .get(&Word(base_word.to_vec()))
            .cloned()
            .ok_or_else(|| CocycleError::MissingWindow(Word(base_word.to_vec())))
    }

    /// C0 distance to the same cocycle without its overlay rules.
    pub fn rule_deviation_sup(&self) -> Result<f64, CocycleError> {
        let mut m: f64 = 0.0;
        for r in &self.rules {
            let base = self.base_value_of_rule(r)?;
            m = m.max(base.mul(&r.factor).dist(&base));
        }
        Ok(m)
    }

    /// Local alpha-Hölder seminorm from the window table: max over window
    /// pairs u != v of ||phi(u) - phi(v)|| 2^{alpha a(u,v)} with a(u,v)
    /// the least |i| <= k where the windows differ (center-indexed).
    /// Exact for the full shift, an upper bound otherwise.
    pub fn holder_seminorm(&self, alpha: f64) -> Result<f64, CocycleError> {
        if !self.rules.is_empty() {
            return Err(CocycleError::RulesUnsupported);
        }
        let windows: Vec<(&Word, &Mat)> = self.table.iter().collect();
        let k = self.radius as isize;
        let mut best: f64 = 0.0;
        for i in 0..windows.len() {
            for j in i + 1..windows.len() {
                let (u, mu) = windows[i];
                let (v, mv) = windows[j];
                let mut a = usize::MAX;
                for t in 0..u.len() {
                    if u.0[t] != v.0[t] {
                        let center_dist = (t as isize - k).unsigned_abs();
                        a = a.min(center_dist);
                    }
                }
                if a == usize::MAX {
                    continue;
                }
                let val = mu.dist(mv) * f64::powf(2.0, alpha * a as f64);
                best = best.max(val);
            }
        }
        Ok(best)
    }

    /// Upper bound on the alpha-Hölder seminorm of the overlay part
    /// (the difference to the rule-free cocycle).
    pub fn rule_holder_bound(&self, alpha: f64) -> Result<f64, CocycleError> {
        let sup = self.rule_deviation_sup()?;
        let reach = self.rules.iter().map(|r| r.reach()).max().unwrap_or(0);
        Ok(2.0 * sup * f64::powf(2.0, alpha * reach as f64))
    }

    /// Enumerate bounded words of length `n` at bound `kappa`,
    /// lexicographically sorted. A failed prefix kills its subtree.
    pub fn bounded_words(
        &self,
        n: usize,
        kappa: f64,
        mode: BoundMode,
    ) -> Result<BoundedLanguage, CocycleError> {
        if kappa < 1.0 {
            return Err(CocycleError::VacuousBound(kappa));
        }
        let wl = self.window_len();
        if n < wl + 1 {
            return Err(CocycleError::WordTooShort(n, wl + 1));
        }
        let mut words = Vec::new();
        let mut stack: Vec<Symbol> = Vec::with_capacity(n);
        let mut state = DfsState {
            prefix: vec![(Mat::identity(self.dim), Mat::identity(self.dim))],
            suffixes: Vec::new(),
        };
        self.bounded_dfs(n, kappa, mode, &mut stack, &mut state, &mut words)?;
        Ok(BoundedLanguage { kappa, n, mode, words })
    }

    fn bounded_dfs(
        &self,
        n: usize,
        kappa: f64,
        mode: BoundMode,
        stack: &mut Vec<Symbol>,
        state: &mut DfsState,
        out: &mut Vec<Word>,
    ) -> Result<(), CocycleError> {
        if stack.len() == n {
            out.push(Word(stack.clone()));
            return Ok(());
        }
        let candidates: Vec<Symbol> = if stack.is_empty() {
            (1..=self.ts.alphabet as Symbol).collect()
        } else {
            self.ts.successors(*stack.last().unwrap())
        };
        let wl = self.window_len();
        for s in candidates {
            stack.push(s);
            let mut pushed_prefix = false;
            let mut pushed_suffix = false;
            let mut ok = true;
            // A new iterate appears once the word exceeds one window.
            if stack.len() > wl {
                let win = &stack[stack.len() - wl - 1..stack.len() - 1];
                let f = self.value_at_window(win)?;
                match mode {
                    BoundMode::ForwardPrefix => {
                        let (p, pinv) = state.prefix.last().unwrap();
                        let p2 = f.mul(p);
                        let p2inv = pinv.mul(&f.inverse()?);
                        ok = p2.spectral_norm() <= kappa && p2inv.spectral_norm() <= kappa;
                        state.prefix.push((p2, p2inv));
                        pushed_prefix = true;
                    }
                    BoundMode::AllIntervals => {
                        // Rolling suffix products: P_{[i..=T]} for all i.
                        let bound = kappa * kappa;
                        let mut new_suffixes = Vec::with_capacity(
                            state.suffixes.last().map_or(0, |v| v.len()) + 1,
                        );
                        if f.spectral_norm() > bound {
                            ok = false;
                        }
                        new_suffixes.push(f.clone());
                        if let Some(prev) = state.suffixes.last() {
                            for sfx in prev {
                                let m = f.mul(sfx);
                                if m.spectral_norm() > bound {
                                    ok = false;
                                }
                                new_suffixes.push(m);
                            }
                        }
                        state.suffixes.push(new_suffixes);
                        pushed_suffix = true;
                    }
                }
            }
            if ok {
                self.bounded_dfs(n, kappa, mode, stack, state, out)?;
            }
            if pushed_prefix {
                state.prefix.pop();
            }
            if pushed_suffix {
                state.suffixes.pop();
            }
            stack.pop();
        }
        Ok(())
    }

    /// Finite-horizon entropy upper estimate from the all-intervals
    /// bounded language.
    pub fn bounded_entropy_upper(
        &self,
        kappa: f64,
        n: usize,
    ) -> Result<BoundedEntropyUpper, CocycleError> {
        if kappa < 1.0 {
            return Err(CocycleError::VacuousBound(kappa));
        }
        // When no interval product can exceed kappa^2 the language is the
        // whole language and the transfer matrix counts it exactly.
        let sup = self.sup_value_norm()?;
        let advance_max = n.saturating_sub(self.window_len());
        if advance_max as f64 * sup.max(1.0).ln() <= 2.0 * kappa.ln() {
            let count = self.ts.word_count(n)?;
            let estimate = if count == 0 {
                None
            } else {
                Some((count as f64).ln() / n as f64)
            };
            return Ok(BoundedEntropyUpper { estimate, count, exhaustive_shortcut: true });
        }
        let lang = self.bounded_words(n, kappa, BoundMode::AllIntervals)?;
        let count = lang.words.len() as u128;
        let estimate = if count == 0 {
            None
        } else {
            Some((count as f64).ln() / n as f64)
        };
        Ok(BoundedEntropyUpper { estimate, count, exhaustive_shortcut: false })
    }
}

struct DfsState {
    /// (P, P^{-1}) per iterate depth, for forward-prefix mode.
    prefix: Vec<(Mat, Mat)>,
    /// Rolling suffix products per iterate depth, for all-intervals mode.
    suffixes: Vec<Vec<Mat>>,
}

/// Seeded random cocycle with values exp(X) for small random X
/// (projected traceless for the special-linear tag).
pub fn random_cocycle(
    ts: &TransitionSystem,
    dim: usize,
    radius: usize,
    spread: f64,
    tag: GroupTag,
    rng: &mut impl Rng,
) -> Result<Cocycle, CocycleError> {
    let mut table = BTreeMap::new();
    for w in ts.admissible_words(2 * radius + 1)? {
        let mut x = Mat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                x.set(i, j, rng.gen_range(-spread..spread));
            }
        }
        if tag == GroupTag::SpecialLinear {
            let t = x.trace() / dim as f64;
            for i in 0..dim {
                x.set(i, i, x.get(i, i) - t);
            }
        }
        table.insert(w, x.exp());
    }
    Cocycle::new(ts.clone(), dim, tag, radius, table)
}

// ---------------------------------------------------------------------
// Cocycle files: header with d, k, group tag; one line per window word
// followed by the d*d row-major entries; optional overlay rules.
// ---------------------------------------------------------------------

pub fn format_cocycle(c: &Cocycle) -> String {
    let mut s = String::new();
    s.push_str(&format!("d {}\n", c.dim));
    s.push_str(&format!("k {}\n", c.base_radius));
    s.push_str(&format!("group {}\n", c.tag.as_str()));
    for (w, m) in &c.table {
        let cells: Vec<String> = m.a.iter().map(|x| format!("{x:.16e}")).collect();
        s.push_str(&format!("window {w} {}\n", cells.join(" ")));
    }
    for r in &c.rules {
        let cells: Vec<String> = r.factor.a.iter().map(|x| format!("{x:.16e}")).collect();
        s.push_str(&format!("rule {} {} {}\n", r.offset, r.pattern, cells.join(" ")));
    }
    s
}

pub fn parse_cocycle(text: &str, ts: &TransitionSystem) -> Result<Cocycle, CocycleError> {
    let mut dim = None;
    let mut k = None;
    let mut tag = None;
    let mut table = BTreeMap::new();
    let mut rules = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("d") => dim = parts.next().and_then(|t| t.parse::<usize>().ok()),
            Some("k") => k = parts.next().and_then(|t| t.parse::<usize>().ok()),
            Some("group") => tag = parts.next().and_then(GroupTag::parse),
            Some("window") => {
                let w = Word::parse(parts.next().ok_or_else(|| parse_err("window word"))?)?;
                let d = dim.ok_or_else(|| parse_err("d before windows"))?;
                let a = parse_floats(parts, d * d)?;
                table.insert(w, Mat { d, a });
            }
            Some("rule") => {
                let offset: isize = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse_err("rule offset"))?;
                let pattern = Word::parse(parts.next().ok_or_else(|| parse_err("rule pattern"))?)?;
                let d = dim.ok_or_else(|| parse_err("d before rules"))?;
                let a = parse_floats(parts, d * d)?;
                rules.push(OverlayRule { offset, pattern, factor: Mat { d, a } });
            }
            _ => return Err(parse_err(&format!("unrecognized line '{line}'"))),
        }
    }
    let dim = dim.ok_or_else(|| parse_err("missing d"))?;
    let k = k.ok_or_else(|| parse_err("missing k"))?;
    let tag = tag.ok_or_else(|| parse_err("missing group"))?;
    let c = Cocycle::new(ts.clone(), dim, tag, k, table)?;
    if rules.is_empty() {
        Ok(c)
    } else {
        c.with_rules(rules)
    }
}

fn parse_floats<'a>(
    parts: impl Iterator<Item = &'a str>,
    need: usize,
) -> Result<Vec<f64>, CocycleError> {
    let v: Result<Vec<f64>, _> = parts.map(|t| t.parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == need => Ok(v),
        _ => Err(parse_err("matrix entries")),
    }
}

fn parse_err(what: &str) -> CocycleError {
    CocycleError::Invalid(format!("cocycle file: bad or missing {what}"))
}
