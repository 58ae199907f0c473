//! Concept taxonomy, subsumption reasoning and the matchmaking operators.
//!
//! A [`Taxonomy`] is an immutable DAG of concepts (multiple parents are
//! allowed). Its reflexive-transitive ancestor relation is computed once when
//! the taxonomy is built, so every degree query afterwards is two binary
//! searches. [`WalkingMatcher`] answers the same queries by walking the parent
//! edges on demand; it stands in for a remote reasoner when measuring
//! matchmaking cost.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Interned handle of a concept inside one [`Taxonomy`].
///
/// Handles are only meaningful for the taxonomy that issued them; the token
/// itself is available through [`Taxonomy::name`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptId(u32);

impl ConceptId {
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub const fn from_index(index: usize) -> Self {
        ConceptId(index as u32)
    }
}

/// Semantic match degree between a source (output) and a target (input).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatchDegree {
    Exact,
    Plugin,
    Subsume,
    Fail,
}

impl MatchDegree {
    /// Preference rank, higher is stronger. Only used for reporting.
    pub const fn strength(self) -> u8 {
        match self {
            MatchDegree::Exact => 3,
            MatchDegree::Plugin => 2,
            MatchDegree::Subsume => 1,
            MatchDegree::Fail => 0,
        }
    }
}

impl fmt::Display for MatchDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchDegree::Exact => "exact",
            MatchDegree::Plugin => "plugin",
            MatchDegree::Subsume => "subsume",
            MatchDegree::Fail => "fail",
        })
    }
}

/// Which degrees count as a compatible match.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MatchConfig {
    pub allow_subsume: bool,
}

impl MatchConfig {
    pub const fn accepts(self, degree: MatchDegree) -> bool {
        match degree {
            MatchDegree::Exact | MatchDegree::Plugin => true,
            MatchDegree::Subsume => self.allow_subsume,
            MatchDegree::Fail => false,
        }
    }
}

/// Anything able to compute the match degree of two concepts.
pub trait Matchmaker {
    fn degree(&self, source: ConceptId, target: ConceptId) -> MatchDegree;
}

impl<M: Matchmaker + ?Sized> Matchmaker for &M {
    fn degree(&self, source: ConceptId, target: ConceptId) -> MatchDegree {
        (**self).degree(source, target)
    }
}

pub fn cmatch<M: Matchmaker + ?Sized>(m: &M, cfg: MatchConfig, source: ConceptId, target: ConceptId) -> bool {
    cfg.accepts(m.degree(source, target))
}

/// The `⊗` operator: the concepts of `target` compatibly matched by at least
/// one concept of `source`, in `target` order.
///
/// Each target stops at its first matching source, so the matchmaker is asked
/// at most `|source| * |target|` and at least `|target|` times (when the first
/// source matches everything).
pub fn match_sets<M: Matchmaker + ?Sized>(
    m: &M,
    cfg: MatchConfig,
    source: &[ConceptId],
    target: &[ConceptId],
) -> Vec<ConceptId> {
    let mut matched = Vec::new();
    if source.is_empty() {
        return matched;
    }
    for &t in target {
        if source.iter().any(|&s| cmatch(m, cfg, s, t)) {
            matched.push(t);
        }
    }
    matched
}

/// `source ⊗ target = target`. Vacuously true for an empty target.
pub fn is_full_match<M: Matchmaker + ?Sized>(
    m: &M,
    cfg: MatchConfig,
    source: &[ConceptId],
    target: &[ConceptId],
) -> bool {
    target.iter().all(|&t| source.iter().any(|&s| cmatch(m, cfg, s, t)))
}

/// `source ⊗ target ≠ ∅`, stopping at the first compatible pair.
pub fn any_match<M: Matchmaker + ?Sized>(
    m: &M,
    cfg: MatchConfig,
    source: &[ConceptId],
    target: &[ConceptId],
) -> bool {
    target.iter().any(|&t| source.iter().any(|&s| cmatch(m, cfg, s, t)))
}

/// Incrementally declares concepts; [`TaxonomyBuilder::build`] validates the
/// hierarchy and computes the closure.
#[derive(Debug, Default, Clone)]
pub struct TaxonomyBuilder {
    names: Vec<String>,
    index: BTreeMap<String, ConceptId>,
    pending_parents: Vec<Vec<String>>,
}

impl TaxonomyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `name` with its direct parents. Parents may be declared later.
    pub fn add_concept<I, S>(&mut self, name: &str, parents: I) -> Result<ConceptId>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.trim();
        check_token(name).map_err(|_| Error::InvalidConceptId(name.to_string()))?;
        if self.index.contains_key(name) {
            return Err(Error::DuplicateConcept(name.to_string()));
        }
        let id = ConceptId::from_index(self.names.len());
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        let mut parents: Vec<String> = parents.into_iter().map(|p| p.as_ref().trim().to_string()).collect();
        parents.sort();
        parents.dedup();
        self.pending_parents.push(parents);
        Ok(id)
    }

    pub fn add_root(&mut self, name: &str) -> Result<ConceptId> {
        self.add_concept(name, core::iter::empty::<&str>())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name.trim())
    }

    pub fn build(self) -> Result<Taxonomy> {
        let n = self.names.len();
        let mut parents: Vec<Vec<ConceptId>> = Vec::with_capacity(n);
        for (i, ps) in self.pending_parents.iter().enumerate() {
            let mut resolved = Vec::with_capacity(ps.len());
            for p in ps {
                match self.index.get(p.as_str()) {
                    Some(&pid) => resolved.push(pid),
                    None => {
                        return Err(Error::UndeclaredParent {
                            concept: self.names[i].clone(),
                            parent: p.clone(),
                        })
                    }
                }
            }
            resolved.sort();
            parents.push(resolved);
        }

        let mut children: Vec<Vec<ConceptId>> = vec![Vec::new(); n];
        for (c, ps) in parents.iter().enumerate() {
            for p in ps {
                children[p.index()].push(ConceptId::from_index(c));
            }
        }

        // Kahn over child -> parent edges: a concept is closed once all of its
        // parents are.
        let mut waiting: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<ConceptId> = (0..n)
            .filter(|&i| waiting[i] == 0)
            .map(ConceptId::from_index)
            .collect();
        let mut ancestors: Vec<Vec<ConceptId>> = vec![Vec::new(); n];
        let mut closed = 0usize;
        while let Some(c) = queue.pop_front() {
            let mut acc = vec![c];
            for p in &parents[c.index()] {
                acc.extend_from_slice(&ancestors[p.index()]);
            }
            acc.sort_unstable();
            acc.dedup();
            ancestors[c.index()] = acc;
            closed += 1;
            for &child in &children[c.index()] {
                waiting[child.index()] -= 1;
                if waiting[child.index()] == 0 {
                    queue.push_back(child);
                }
            }
        }
        if closed != n {
            let on_cycle = find_cycle_member(&parents, &waiting);
            return Err(Error::TaxonomyCycle(self.names[on_cycle].clone()));
        }

        let mut descendants: Vec<Vec<ConceptId>> = vec![Vec::new(); n];
        for (c, anc) in ancestors.iter().enumerate() {
            for a in anc {
                descendants[a.index()].push(ConceptId::from_index(c));
            }
        }

        Ok(Taxonomy {
            names: self.names,
            index: self.index,
            parents,
            ancestors,
            descendants,
        })
    }
}

fn find_cycle_member(parents: &[Vec<ConceptId>], waiting: &[usize]) -> usize {
    // Every unclosed concept has an unclosed parent, so following unclosed
    // parents must revisit a node, and the revisited node lies on a cycle.
    let start = waiting.iter().position(|&w| w > 0).unwrap_or(0);
    let mut seen = vec![false; parents.len()];
    let mut cur = start;
    loop {
        if seen[cur] {
            return cur;
        }
        seen[cur] = true;
        match parents[cur].iter().find(|p| waiting[p.index()] > 0) {
            Some(p) => cur = p.index(),
            None => return cur,
        }
    }
}

pub(crate) fn check_token(token: &str) -> core::result::Result<(), ()> {
    if token.is_empty() || token.chars().any(|c| c.is_whitespace() || c == '|') {
        Err(())
    } else {
        Ok(())
    }
}

/// Immutable concept hierarchy with its precomputed subsumption closure.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    names: Vec<String>,
    index: BTreeMap<String, ConceptId>,
    parents: Vec<Vec<ConceptId>>,
    // Sorted, reflexive.
    ancestors: Vec<Vec<ConceptId>>,
    descendants: Vec<Vec<ConceptId>>,
}

impl Taxonomy {
    pub fn builder() -> TaxonomyBuilder {
        TaxonomyBuilder::new()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn concepts(&self) -> impl ExactSizeIterator<Item = ConceptId> + '_ {
        (0..self.names.len()).map(ConceptId::from_index)
    }

    pub fn lookup(&self, name: &str) -> Result<ConceptId> {
        self.index
            .get(name.trim())
            .copied()
            .ok_or_else(|| Error::UnknownConcept(name.trim().to_string()))
    }

    pub fn lookup_all<'a, I>(&self, names: I) -> Result<Vec<ConceptId>>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut out = names.into_iter().map(|n| self.lookup(n)).collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn name(&self, c: ConceptId) -> &str {
        &self.names[c.index()]
    }

    pub fn parents(&self, c: ConceptId) -> &[ConceptId] {
        &self.parents[c.index()]
    }

    /// All ancestors of `c`, including `c`, sorted.
    pub fn ancestors(&self, c: ConceptId) -> &[ConceptId] {
        &self.ancestors[c.index()]
    }

    /// All descendants of `c`, including `c`, sorted.
    pub fn descendants(&self, c: ConceptId) -> &[ConceptId] {
        &self.descendants[c.index()]
    }

    pub fn is_ancestor(&self, ancestor: ConceptId, c: ConceptId) -> bool {
        self.ancestors[c.index()].binary_search(&ancestor).is_ok()
    }

    pub fn degree(&self, a: ConceptId, b: ConceptId) -> MatchDegree {
        let b_above = self.is_ancestor(b, a);
        let a_above = self.is_ancestor(a, b);
        match (b_above, a_above) {
            (true, true) => MatchDegree::Exact,
            (true, false) => MatchDegree::Plugin,
            (false, true) => MatchDegree::Subsume,
            (false, false) => MatchDegree::Fail,
        }
    }

    pub fn cmatch(&self, a: ConceptId, b: ConceptId, cfg: MatchConfig) -> bool {
        cfg.accepts(self.degree(a, b))
    }

    pub fn match_sets(&self, source: &[ConceptId], target: &[ConceptId], cfg: MatchConfig) -> Vec<ConceptId> {
        match_sets(self, cfg, source, target)
    }

    pub fn is_full_match(&self, source: &[ConceptId], target: &[ConceptId], cfg: MatchConfig) -> bool {
        is_full_match(self, cfg, source, target)
    }

    /// Name-based [`Taxonomy::degree`], failing on unknown tokens.
    pub fn degree_of(&self, a: &str, b: &str) -> Result<MatchDegree> {
        Ok(self.degree(self.lookup(a)?, self.lookup(b)?))
    }

    /// Concepts `t` with `cmatch(source, t)`.
    pub fn compatible_targets(&self, source: ConceptId, cfg: MatchConfig) -> impl Iterator<Item = ConceptId> + '_ {
        let subsumed: &[ConceptId] = if cfg.allow_subsume { self.descendants(source) } else { &[] };
        self.ancestors(source)
            .iter()
            .copied()
            .chain(subsumed.iter().copied().filter(move |&d| d != source))
    }

    /// Concepts `s` with `cmatch(s, target)`.
    pub fn compatible_sources(&self, target: ConceptId, cfg: MatchConfig) -> impl Iterator<Item = ConceptId> + '_ {
        let subsuming: &[ConceptId] = if cfg.allow_subsume { self.ancestors(target) } else { &[] };
        self.descendants(target)
            .iter()
            .copied()
            .chain(subsuming.iter().copied().filter(move |&a| a != target))
    }
}

impl Matchmaker for Taxonomy {
    fn degree(&self, source: ConceptId, target: ConceptId) -> MatchDegree {
        Taxonomy::degree(self, source, target)
    }
}

/// Answers degree queries by walking parent edges on every call, with an
/// optional per-query hook (used to inject artificial latency).
pub struct WalkingMatcher<'a> {
    taxonomy: &'a Taxonomy,
    on_query: Option<&'a (dyn Fn() + Sync)>,
}

impl<'a> WalkingMatcher<'a> {
    pub fn new(taxonomy: &'a Taxonomy) -> Self {
        WalkingMatcher { taxonomy, on_query: None }
    }

    pub fn with_hook(mut self, hook: &'a (dyn Fn() + Sync)) -> Self {
        self.on_query = Some(hook);
        self
    }

    fn reaches(&self, from: ConceptId, to: ConceptId) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.taxonomy.len()];
        let mut stack = vec![from];
        seen[from.index()] = true;
        while let Some(c) = stack.pop() {
            for &p in self.taxonomy.parents(c) {
                if p == to {
                    return true;
                }
                if !seen[p.index()] {
                    seen[p.index()] = true;
                    stack.push(p);
                }
            }
        }
        false
    }
}

impl Matchmaker for WalkingMatcher<'_> {
    fn degree(&self, source: ConceptId, target: ConceptId) -> MatchDegree {
        if let Some(hook) = self.on_query {
            hook();
        }
        match (self.reaches(source, target), self.reaches(target, source)) {
            (true, true) => MatchDegree::Exact,
            (true, false) => MatchDegree::Plugin,
            (false, true) => MatchDegree::Subsume,
            (false, false) => MatchDegree::Fail,
        }
    }
}
