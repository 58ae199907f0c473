//! Independent composition checker.
//!
//! Replays a composition against the registry and taxonomy alone: starting
//! from the request inputs, every service must find all of its inputs matched
//! by what is available before it runs, and at the end the goals must be
//! matched. The precedence pairs define a partial order; small compositions
//! are checked under every linear extension, larger ones under the canonical
//! one and the level order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::Request;
use crate::ontology::ConceptId;
use crate::registry::{Registry, ServiceIdx};
use crate::search::Composition;

/// Compositions with at most this many services are checked under every
/// topological order.
pub const EXHAUSTIVE_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    /// Position in the execution order; equal to the service count for the
    /// final goal check.
    pub position: usize,
    /// `None` for the final goal check.
    pub service: Option<String>,
    pub unmatched: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violated_at: Option<Violation>,
    pub sorts_checked: usize,
}

pub fn is_valid(composition: &Composition, request: &Request, registry: &Registry) -> Result<ValidationReport> {
    let mut order: Vec<&str> = composition.services().collect();
    order.dedup();
    let mut idx = Vec::with_capacity(order.len());
    for id in &order {
        idx.push(registry.find(id).ok_or_else(|| Error::UnknownCompositionService((*id).into()))?);
    }
    let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut preds: Vec<BTreeSet<usize>> = alloc::vec![BTreeSet::new(); order.len()];
    for (a, b) in &composition.precedence {
        let pa = *pos.get(a.as_str()).ok_or_else(|| Error::UnknownCompositionService(a.clone()))?;
        let pb = *pos.get(b.as_str()).ok_or_else(|| Error::UnknownCompositionService(b.clone()))?;
        preds[pb].insert(pa);
    }
    let canonical = kahn(&preds, &order).map_err(|at| Error::CyclicComposition(order[at].into()))?;

    let mut sorts_checked = 0;
    let mut first_violation = None;
    let mut check = |perm: &[usize]| {
        sorts_checked += 1;
        if first_violation.is_none() {
            first_violation = replay(perm, &idx, request, registry);
        }
    };
    if order.len() <= EXHAUSTIVE_LIMIT {
        let mut placed = alloc::vec![false; order.len()];
        let mut perm = Vec::with_capacity(order.len());
        all_sorts(&preds, &mut placed, &mut perm, &mut check);
    } else {
        check(&canonical);
        // Level order: the services as listed, level by level.
        let level_order: Vec<usize> = (0..order.len()).collect();
        if level_order != canonical {
            check(&level_order);
        }
    }
    Ok(ValidationReport { valid: first_violation.is_none(), violated_at: first_violation, sorts_checked })
}

fn replay(perm: &[usize], idx: &[ServiceIdx], request: &Request, registry: &Registry) -> Option<Violation> {
    let tax = registry.taxonomy();
    let cfg = registry.matching();
    let mut available: BTreeSet<ConceptId> = request.inputs.iter().copied().collect();
    let unmatched = |avail: &BTreeSet<ConceptId>, needed: &[ConceptId]| -> Vec<String> {
        let have: Vec<ConceptId> = avail.iter().copied().collect();
        let hit = tax.match_sets(&have, needed, cfg);
        needed.iter().filter(|c| !hit.contains(c)).map(|&c| tax.name(c).into()).collect()
    };
    for (position, &p) in perm.iter().enumerate() {
        let service = registry.service(idx[p]);
        let missing = unmatched(&available, &service.inputs);
        if !missing.is_empty() {
            return Some(Violation { position, service: Some(service.id.clone()), unmatched: missing });
        }
        available.extend(service.outputs.iter().copied());
    }
    let missing = unmatched(&available, &request.outputs);
    (!missing.is_empty()).then_some(Violation { position: perm.len(), service: None, unmatched: missing })
}

/// Kahn's algorithm taking the smallest id first. On a cycle, returns the
/// position of a service on it.
fn kahn(preds: &[BTreeSet<usize>], names: &[&str]) -> core::result::Result<Vec<usize>, usize> {
    let n = preds.len();
    let mut indeg: Vec<usize> = preds.iter().map(BTreeSet::len).collect();
    let mut ready: BTreeSet<(&str, usize)> = (0..n).filter(|&i| indeg[i] == 0).map(|i| (names[i], i)).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(first) = ready.pop_first() {
        let i = first.1;
        out.push(i);
        for j in 0..n {
            if preds[j].contains(&i) {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.insert((names[j], j));
                }
            }
        }
    }
    if out.len() == n {
        Ok(out)
    } else {
        Err((0..n).find(|&i| indeg[i] > 0).unwrap_or(0))
    }
}

fn all_sorts(preds: &[BTreeSet<usize>], placed: &mut [bool], perm: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if perm.len() == preds.len() {
        visit(perm);
        return;
    }
    for i in 0..preds.len() {
        if !placed[i] && preds[i].iter().all(|&p| placed[p]) {
            placed[i] = true;
            perm.push(i);
            all_sorts(preds, placed, perm, visit);
            perm.pop();
            placed[i] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Taxonomy;
    use crate::registry::DiscoveryConfig;
    use crate::search::Cost;
    use alloc::string::ToString;
    use alloc::vec;

    fn registry() -> Registry {
        let mut t = Taxonomy::builder();
        for c in ["A", "B", "C"] {
            t.add_root(c).unwrap();
        }
        let mut b = Registry::builder(t.build().unwrap(), DiscoveryConfig::default());
        b.add_named("ab", &["A"], &["B"]).unwrap();
        b.add_named("bc", &["B"], &["C"]).unwrap();
        b.build()
    }

    fn comp(levels: &[&[&str]], precedence: &[(&str, &str)]) -> Composition {
        Composition {
            levels: levels.iter().map(|l| l.iter().map(|s| s.to_string()).collect()).collect(),
            precedence: precedence.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            cost: Cost::default(),
        }
    }

    #[test]
    fn chain_is_valid() {
        let r = registry();
        let req = Request::named(r.taxonomy(), &["A"], &["C"]).unwrap();
        let rep = is_valid(&comp(&[&["ab"], &["bc"]], &[("ab", "bc")]), &req, &r).unwrap();
        assert!(rep.valid);
        assert_eq!(rep.sorts_checked, 1);
    }

    #[test]
    fn missing_precedence_is_caught() {
        let r = registry();
        let req = Request::named(r.taxonomy(), &["A"], &["C"]).unwrap();
        let rep = is_valid(&comp(&[&["ab"], &["bc"]], &[]), &req, &r).unwrap();
        assert!(!rep.valid);
        assert_eq!(rep.sorts_checked, 2);
        let v = rep.violated_at.unwrap();
        assert_eq!((v.position, v.service.as_deref()), (0, Some("bc")));
        assert_eq!(v.unmatched, vec!["B".to_string()]);
    }

    #[test]
    fn unmet_goal_reports_final_position() {
        let r = registry();
        let req = Request::named(r.taxonomy(), &["A"], &["C"]).unwrap();
        let rep = is_valid(&comp(&[&["ab"]], &[]), &req, &r).unwrap();
        let v = rep.violated_at.unwrap();
        assert_eq!((v.position, v.service), (1, None));
    }

    #[test]
    fn structural_errors() {
        let r = registry();
        let req = Request::named(r.taxonomy(), &["A"], &["C"]).unwrap();
        assert_eq!(
            is_valid(&comp(&[&["zz"]], &[]), &req, &r),
            Err(Error::UnknownCompositionService("zz".into()))
        );
        let cyclic = comp(&[&["ab", "bc"]], &[("ab", "bc"), ("bc", "ab")]);
        assert!(matches!(is_valid(&cyclic, &req, &r), Err(Error::CyclicComposition(_))));
    }
}
