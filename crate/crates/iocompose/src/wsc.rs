//! Best-effort importer for Web Service Challenge 2008 datasets.
//!
//! A dataset directory holds `taxonomy.xml`, `services.xml` and
//! `problem.xml`. The taxonomy nests `<concept name=..>` elements, with
//! `<instance name=..>` leaves under them. Service parameters and the problem's
//! provided/wanted parameters are instance names. Each instance is replaced
//! by the concept it sits under, so matching happens between concepts.
//! Element names are compared case-insensitively; the problem file may call
//! the goal element `Resultant` or `Wanted`.

use std::collections::BTreeMap;
use std::path::Path;

use iocompose_core::ontology::ConceptId;
use iocompose_core::{Request, Service, Taxonomy};
use roxmltree::{Document, Node};

use crate::error::{Error, Result};
use crate::formats::{self, Dataset};

pub const TAXONOMY_XML: &str = "taxonomy.xml";
pub const SERVICES_XML: &str = "services.xml";
pub const PROBLEM_XML: &str = "problem.xml";

fn is(node: &Node<'_, '_>, tag: &str) -> bool {
    node.is_element() && node.tag_name().name().eq_ignore_ascii_case(tag)
}

fn xml_err(file: &str, doc_text: &str, pos: usize, message: impl Into<String>) -> Error {
    let line = doc_text[..pos.min(doc_text.len())].matches('\n').count() + 1;
    Error::Parse { file: file.to_string(), line, message: message.into() }
}

fn parse_doc<'a>(text: &'a str, file: &str) -> Result<Document<'a>> {
    Document::parse(text).map_err(|e| Error::Parse {
        file: file.to_string(),
        line: e.pos().row as usize,
        message: e.to_string(),
    })
}

struct Ontology {
    taxonomy: Taxonomy,
    /// Concept or instance name to concept.
    resolve: BTreeMap<String, ConceptId>,
}

fn parse_taxonomy(text: &str, file: &str) -> Result<Ontology> {
    let doc = parse_doc(text, file)?;
    let mut builder = Taxonomy::builder();
    let mut instances: BTreeMap<String, String> = BTreeMap::new();
    for node in doc.descendants().filter(|n| is(n, "concept")) {
        let name = node
            .attribute("name")
            .ok_or_else(|| xml_err(file, text, node.range().start, "concept without a name"))?;
        let parent = node.ancestors().skip(1).find(|a| is(a, "concept")).and_then(|a| a.attribute("name"));
        builder
            .add_concept(name, parent)
            .map_err(|e| xml_err(file, text, node.range().start, e.to_string()))?;
        for inst in node.children().filter(|c| is(c, "instance")) {
            if let Some(i) = inst.attribute("name") {
                instances.insert(i.to_string(), name.to_string());
            }
        }
    }
    let taxonomy = builder.build()?;
    let mut resolve: BTreeMap<String, ConceptId> =
        taxonomy.concepts().map(|c| (taxonomy.name(c).to_string(), c)).collect();
    for (inst, concept) in instances {
        let c = resolve[&concept];
        resolve.entry(inst).or_insert(c);
    }
    Ok(Ontology { taxonomy, resolve })
}

fn params(ont: &Ontology, node: Node<'_, '_>, text: &str, file: &str, owner: &str) -> Result<Vec<ConceptId>> {
    node.descendants()
        .filter(|n| is(n, "instance") || is(n, "concept"))
        .map(|n| {
            let name = n.attribute("name").unwrap_or_default();
            ont.resolve
                .get(name)
                .copied()
                .ok_or_else(|| xml_err(file, text, n.range().start, format!("{owner} uses unknown parameter `{name}`")))
        })
        .collect()
}

fn parse_services(text: &str, file: &str, ont: &Ontology) -> Result<Vec<Service>> {
    let doc = parse_doc(text, file)?;
    let mut out = Vec::new();
    for node in doc.descendants().filter(|n| is(n, "service")) {
        let id = node
            .attribute("name")
            .ok_or_else(|| xml_err(file, text, node.range().start, "service without a name"))?;
        let side = |tag: &str| -> Result<Vec<ConceptId>> {
            match node.children().find(|c| is(c, tag)) {
                Some(n) => params(ont, n, text, file, &format!("service `{id}`")),
                None => Ok(Vec::new()),
            }
        };
        out.push(Service::new(id, side("inputs")?, side("outputs")?));
    }
    Ok(out)
}

fn parse_problem(text: &str, file: &str, ont: &Ontology) -> Result<Request> {
    let doc = parse_doc(text, file)?;
    let find = |tags: &[&str]| doc.descendants().find(|n| tags.iter().any(|t| is(n, t)));
    let provided = match find(&["provided"]) {
        Some(n) => params(ont, n, text, file, "problem")?,
        None => Vec::new(),
    };
    let wanted = find(&["resultant", "wanted"])
        .ok_or_else(|| xml_err(file, text, 0, "no <Resultant> or <Wanted> element"))?;
    Ok(Request::new(provided, params(ont, wanted, text, file, "problem")?)?)
}

/// Reads a WSC'08 dataset directory.
pub fn import(dir: &Path) -> Result<Dataset> {
    let read = |name: &str| -> Result<(String, String)> {
        let p = dir.join(name);
        Ok((formats::read(&p)?, p.display().to_string()))
    };
    let (tt, tf) = read(TAXONOMY_XML)?;
    let ont = parse_taxonomy(&tt, &tf)?;
    let (st, sf) = read(SERVICES_XML)?;
    let services = parse_services(&st, &sf, &ont)?;
    let (pt, pf) = read(PROBLEM_XML)?;
    let request = parse_problem(&pt, &pf, &ont)?;
    let name = dir.file_name().map_or_else(|| "wsc".to_string(), |n| n.to_string_lossy().into_owned());
    Ok(Dataset { name, taxonomy: ont.taxonomy, services, request })
}
