//! Synthetic layered datasets with a planted solution.
//!
//! The taxonomy has a live branch and a dead branch. Live concepts come in
//! layers `c<j>_<x>` (`j` in `0..=l`, `x` in `0..m`), each under its own
//! generalization `g<j>_<x>`. One planted service per layer `j` reads `n`
//! concepts from the pools of earlier layers (at least one from layer `j-1`)
//! and produces every `c<j>_*`. The request provides `c0_*` and asks for
//! `c<l>_*`, so the planted chain is a solution of cost `(l, l)`.
//!
//! Dead concepts are split into sinks (never produced) and junk (produced,
//! never consumed). The remaining services are distractors:
//! - decoys: one live input plus dead-sink inputs, so they turn up in
//!   discovery at one layer but can never run;
//! - alternatives: partial copies of a planted service;
//! - noise: dead-sink inputs only.
//!
//! Each remaining service becomes a decoy with a probability chosen so that
//! about `w / k` services are input-relevant per layer, counting the live
//! services already relevant there; a decoy's layer is drawn in proportion to
//! what each layer still lacks.

use std::path::Path;

use iocompose_core::graph::fwd_graph;
use iocompose_core::ontology::ConceptId;
use iocompose_core::{DiscoveryConfig, Request, Service, Taxonomy};
use rand::seq::SliceRandom;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{self, Dataset};

pub const PLANTED_FILE: &str = "planted.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Total number of services.
    pub w: usize,
    /// Total number of concepts in the taxonomy.
    pub concepts: usize,
    /// Layers of the planted solution.
    pub l: usize,
    /// New concepts per layer.
    pub m: usize,
    /// Inputs per planted service.
    pub n: usize,
    /// Target relevance reduction factor.
    pub k: f64,
    pub seed: u64,
}

impl GeneratorParams {
    /// Live concepts plus the three branch roots.
    pub fn min_concepts(&self) -> usize {
        2 * self.m * (self.l + 1) + 3 + 2 * self.n.max(1)
    }

    pub fn check(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Params(msg));
        if self.l == 0 || self.m == 0 || self.n == 0 {
            return fail("l, m and n must be at least 1".into());
        }
        if self.w < self.l {
            return fail(format!("w = {} is smaller than l = {}", self.w, self.l));
        }
        if self.n > 2 * self.m {
            return fail(format!("n = {} exceeds the 2m = {} concepts of the first layer", self.n, 2 * self.m));
        }
        if self.k.is_nan() || self.k < 1.0 {
            return fail(format!("k = {} must be at least 1", self.k));
        }
        if self.concepts < self.min_concepts() {
            return fail(format!("taxonomy needs at least {} concepts, got {}", self.min_concepts(), self.concepts));
        }
        Ok(())
    }
}

/// Ground truth written next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Planted {
    pub params: GeneratorParams,
    pub length: usize,
    pub services: usize,
    pub service_ids: Vec<String>,
    /// Input-relevant services found at each layer of the graph build.
    pub relevant_per_layer: Vec<usize>,
    /// `w` over the mean of `relevant_per_layer`.
    pub realized_k: f64,
}

pub struct Generated {
    pub dataset: Dataset,
    pub planted: Planted,
}

enum Kind {
    Planted(usize),
    Decoy(usize),
    Alternative(usize),
    Noise,
}

pub fn generate(params: &GeneratorParams, name: &str) -> Result<Generated> {
    params.check()?;
    let GeneratorParams { w, concepts, l, m, n, k, seed } = *params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut tb = Taxonomy::builder();
    let add = |tb: &mut iocompose_core::TaxonomyBuilder, name: &str, parent: &str| {
        tb.add_concept(name, [parent]).expect("generated names are unique");
    };
    tb.add_root("Thing").expect("fresh");
    add(&mut tb, "live", "Thing");
    add(&mut tb, "dead", "Thing");
    for j in 0..=l {
        for x in 0..m {
            add(&mut tb, &format!("g{j}_{x}"), "live");
            add(&mut tb, &format!("c{j}_{x}"), &format!("g{j}_{x}"));
        }
    }
    let dead_count = concepts - 3 - 2 * m * (l + 1);
    for d in 0..dead_count {
        add(&mut tb, &format!("d{d}"), "dead");
    }
    let taxonomy = tb.build().expect("generated taxonomy is a tree");
    let id = |s: String| taxonomy.lookup(&s).expect("declared above");
    let c = |j: usize| -> Vec<ConceptId> { (0..m).map(|x| id(format!("c{j}_{x}"))).collect() };
    let pool = |j: usize| -> Vec<ConceptId> {
        (0..m).flat_map(|x| [id(format!("g{j}_{x}")), id(format!("c{j}_{x}"))]).collect()
    };
    let dead: Vec<ConceptId> = (0..dead_count).map(|d| id(format!("d{d}"))).collect();
    let (dead_sinks, junk) = dead.split_at(dead_count / 2);

    let pick = |rng: &mut ChaCha8Rng, from: &[ConceptId], k: usize| -> Vec<ConceptId> {
        from.choose_multiple(rng, k.min(from.len())).copied().collect()
    };
    let planted_inputs = |rng: &mut ChaCha8Rng, j: usize| -> Vec<ConceptId> {
        let mut ins = pick(rng, &pool(j - 1), 1);
        let earlier: Vec<ConceptId> = (0..j).flat_map(pool).filter(|x| !ins.contains(x)).collect();
        ins.extend(pick(rng, &earlier, n - 1));
        ins
    };
    let junk_outputs = |rng: &mut ChaCha8Rng| {
        let k = rng.gen_range(1..=m);
        pick(rng, junk, k)
    };

    let distractors = w - l;
    let alternatives = (l / 2).min(distractors);
    let mut kinds: Vec<Kind> = (1..=l).map(Kind::Planted).collect();
    kinds.extend((0..alternatives).map(|_| Kind::Alternative(rng.gen_range(1..=l))));
    // Interfaces of the live services are fixed first so that their own
    // relevance can be subtracted from the per-layer decoy quota.
    let mut live_io: Vec<(Vec<ConceptId>, Vec<ConceptId>)> = Vec::new();
    let mut fixed = vec![0usize; l];
    for kind in &kinds {
        let (j, planted) = match *kind {
            Kind::Planted(j) => (j, true),
            Kind::Alternative(j) => (j, false),
            _ => unreachable!("only live services so far"),
        };
        let ins = planted_inputs(&mut rng, j);
        let outs = if planted {
            c(j)
        } else {
            let k = rng.gen_range(1..=m);
            pick(&mut rng, &c(j), k)
        };
        for (t, count) in fixed.iter_mut().enumerate().take(j) {
            if pool(t).iter().any(|x| ins.contains(x)) {
                *count += 1;
            }
        }
        live_io.push((ins, outs));
    }
    let target = w as f64 / k;
    let quota: Vec<f64> = fixed.iter().map(|&f| (target - f as f64).max(0.0)).collect();
    let rest = distractors - alternatives;
    let total: f64 = quota.iter().sum();
    let p = if rest == 0 { 0.0 } else { (total / rest as f64).min(1.0) };
    let layer_of = (total > 0.0).then(|| WeightedIndex::new(&quota).expect("positive total"));
    for _ in 0..rest {
        match &layer_of {
            Some(dist) if rng.gen_bool(p) => kinds.push(Kind::Decoy(dist.sample(&mut rng))),
            _ => kinds.push(Kind::Noise),
        }
    }

    let mut order: Vec<usize> = (0..kinds.len()).collect();
    order.shuffle(&mut rng);
    let width = (kinds.len() - 1).to_string().len();
    let mut services = vec![None; kinds.len()];
    let mut planted_ids = vec![String::new(); l];
    for (slot, &which) in order.iter().enumerate() {
        let sid = format!("s{slot:0width$}");
        let (ins, outs) = match kinds[which] {
            Kind::Planted(j) => {
                planted_ids[j - 1] = sid.clone();
                live_io[which].clone()
            }
            Kind::Alternative(_) => live_io[which].clone(),
            Kind::Decoy(j) => {
                let mut ins = pick(&mut rng, &pool(j), 1);
                ins.extend(pick(&mut rng, dead_sinks, n.saturating_sub(1).max(1)));
                (ins, junk_outputs(&mut rng))
            }
            Kind::Noise => (pick(&mut rng, dead_sinks, n), junk_outputs(&mut rng)),
        };
        services[slot] = Some(Service::new(sid, ins, outs));
    }
    let services: Vec<Service> = services.into_iter().map(|s| s.expect("every slot filled")).collect();
    let request = Request::new(c(0), c(l))?;
    let dataset = Dataset { name: name.to_string(), taxonomy, services, request };

    let registry = dataset.registry(DiscoveryConfig::default())?;
    let build = fwd_graph(&dataset.request, &registry)?;
    if !build.outcome.is_solved() {
        return Err(Error::Invariant("generated instance is unsolvable".into()));
    }
    let relevant = &build.relevant_per_layer;
    let mean = relevant.iter().sum::<usize>() as f64 / relevant.len().max(1) as f64;
    let planted = Planted {
        params: *params,
        length: l,
        services: l,
        service_ids: planted_ids,
        relevant_per_layer: relevant.clone(),
        realized_k: if mean > 0.0 { w as f64 / mean } else { f64::INFINITY },
    };
    Ok(Generated { dataset, planted })
}

/// Checks the parameters, then writes the dataset files and the sidecar.
pub fn generate_to(params: &GeneratorParams, dir: &Path) -> Result<Planted> {
    params.check()?;
    let name = dir.file_name().map_or_else(|| "generated".to_string(), |n| n.to_string_lossy().into_owned());
    let g = generate(params, &name)?;
    g.dataset.save(dir)?;
    let json = serde_json::to_string_pretty(&g.planted).expect("plain data serializes");
    formats::write(&dir.join(PLANTED_FILE), &(json + "\n"))?;
    Ok(g.planted)
}

pub fn load_planted(dir: &Path) -> Result<Option<Planted>> {
    let path = dir.join(PLANTED_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = formats::read(&path)?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Parse { file: path.display().to_string(), line: e.line(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GeneratorParams {
        GeneratorParams { w: 20, concepts: 40, l: 3, m: 2, n: 2, k: 4.0, seed: 7 }
    }

    #[test]
    fn parameter_errors() {
        let bad = |f: fn(&mut GeneratorParams)| {
            let mut p = params();
            f(&mut p);
            assert!(matches!(generate(&p, "x"), Err(Error::Params(_))));
        };
        bad(|p| p.w = 2);
        bad(|p| p.n = 5);
        bad(|p| p.concepts = 10);
        bad(|p| p.m = 0);
        bad(|p| p.k = 0.5);
    }

    #[test]
    fn planted_chain_is_recorded() {
        let g = generate(&params(), "x").unwrap();
        assert_eq!(g.dataset.services.len(), 20);
        assert_eq!((g.planted.length, g.planted.services), (3, 3));
        assert_eq!(g.planted.relevant_per_layer.len(), 3);
        for id in &g.planted.service_ids {
            assert!(g.dataset.services.iter().any(|s| &s.id == id));
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let a = generate(&params(), "x").unwrap();
        let b = generate(&params(), "x").unwrap();
        assert_eq!(a.dataset.services, b.dataset.services);
        let c = generate(&GeneratorParams { seed: 8, ..params() }, "x").unwrap();
        assert_ne!(a.dataset.services, c.dataset.services);
    }
}
