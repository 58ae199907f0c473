//! Plain-text dataset formats.
//!
//! Taxonomy: one concept per line, `<concept> [<parent> ...]`; parents may be
//! declared further down. Services: `<id> | <inputs...> | <outputs...>`, either
//! side may be empty. Request: an `inputs:` line and an `outputs:` line. In
//! all three, blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use iocompose_core::graph::{CompositionGraph, Edge};
use iocompose_core::ontology::ConceptId;
use iocompose_core::search::Composition;
use iocompose_core::{DiscoveryConfig, Registry, Request, Service, Taxonomy};

use crate::error::{Error, Result};

pub const TAXONOMY_FILE: &str = "taxonomy.txt";
pub const SERVICES_FILE: &str = "services.txt";
pub const REQUEST_FILE: &str = "request.txt";

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { file: file.to_string(), line, message: message.into() }
}

pub fn parse_taxonomy(text: &str, file: &str) -> Result<Taxonomy> {
    let mut builder = Taxonomy::builder();
    let mut lines = BTreeMap::new();
    for (n, line) in content_lines(text) {
        let mut tokens = line.split_whitespace();
        let concept = tokens.next().expect("line is not blank");
        builder
            .add_concept(concept, tokens)
            .map_err(|e| parse_err(file, n, e.to_string()))?;
        lines.insert(concept.to_string(), n);
    }
    builder.build().map_err(|e| match &e {
        iocompose_core::Error::UndeclaredParent { concept, .. } | iocompose_core::Error::TaxonomyCycle(concept) => {
            parse_err(file, lines[concept], e.to_string())
        }
        _ => Error::Core(e),
    })
}

pub fn parse_services(text: &str, file: &str, taxonomy: &Taxonomy) -> Result<Vec<Service>> {
    let mut services = Vec::new();
    let mut seen = BTreeMap::new();
    for (n, line) in content_lines(text) {
        let parts: Vec<&str> = line.split('|').collect();
        let [id, ins, outs] = parts[..] else {
            return Err(parse_err(file, n, "expected `<id> | <inputs> | <outputs>`"));
        };
        let id = id.trim();
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(parse_err(file, n, format!("invalid service id `{id}`")));
        }
        if let Some(prev) = seen.insert(id.to_string(), n) {
            return Err(parse_err(file, n, format!("duplicate service `{id}` (first on line {prev})")));
        }
        let resolve = |side: &str| -> Result<Vec<ConceptId>> {
            side.split_whitespace()
                .map(|tok| {
                    taxonomy
                        .lookup(tok)
                        .map_err(|_| parse_err(file, n, format!("service `{id}` uses unknown concept `{tok}`")))
                })
                .collect()
        };
        services.push(Service::new(id, resolve(ins)?, resolve(outs)?));
    }
    Ok(services)
}

pub fn parse_request(text: &str, file: &str, taxonomy: &Taxonomy) -> Result<Request> {
    let mut inputs = None;
    let mut outputs = None;
    for (n, line) in content_lines(text) {
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| parse_err(file, n, "expected `inputs:` or `outputs:`"))?;
        let slot = match key.trim() {
            "inputs" => &mut inputs,
            "outputs" => &mut outputs,
            other => return Err(parse_err(file, n, format!("unknown key `{other}`"))),
        };
        if slot.is_some() {
            return Err(parse_err(file, n, format!("`{}` given twice", key.trim())));
        }
        let concepts = rest
            .split_whitespace()
            .map(|tok| taxonomy.lookup(tok).map_err(|e| parse_err(file, n, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        *slot = Some(concepts);
    }
    let outputs = outputs.ok_or_else(|| parse_err(file, 0, "missing `outputs:` line"))?;
    Request::new(inputs.unwrap_or_default(), outputs).map_err(Error::Core)
}

fn names(taxonomy: &Taxonomy, concepts: &[ConceptId]) -> String {
    concepts.iter().map(|&c| taxonomy.name(c)).collect::<Vec<_>>().join(" ")
}

pub fn write_taxonomy(taxonomy: &Taxonomy) -> String {
    let mut out = String::new();
    for c in taxonomy.concepts() {
        out.push_str(taxonomy.name(c));
        for &p in taxonomy.parents(c) {
            out.push(' ');
            out.push_str(taxonomy.name(p));
        }
        out.push('\n');
    }
    out
}

pub fn write_services(services: &[Service], taxonomy: &Taxonomy) -> String {
    let mut out = String::new();
    for s in services {
        let _ = writeln!(out, "{} | {} | {}", s.id, names(taxonomy, &s.inputs), names(taxonomy, &s.outputs));
    }
    out
}

pub fn write_request(request: &Request, taxonomy: &Taxonomy) -> String {
    format!(
        "inputs: {}\noutputs: {}\n",
        names(taxonomy, &request.inputs),
        names(taxonomy, &request.outputs)
    )
}

/// One edge per line, tagged `CW`, `WC` or `CC`, sorted.
pub fn dump_graph(graph: &CompositionGraph, taxonomy: &Taxonomy) -> String {
    let mut lines: Vec<String> = graph
        .edges()
        .into_iter()
        .map(|e| match e {
            Edge::Cw(c, s) => format!("CW {} {s}", taxonomy.name(c)),
            Edge::Wc(s, c) => format!("WC {s} {}", taxonomy.name(c)),
            Edge::Cc(a, b) => format!("CC {} {}", taxonomy.name(a), taxonomy.name(b)),
        })
        .collect();
    lines.sort();
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

pub fn composition_text(composition: &Composition) -> String {
    let mut out = format!("cost {} {}\n", composition.cost.length, composition.cost.services);
    for (i, level) in composition.levels.iter().enumerate() {
        let _ = writeln!(out, "level {} {}", i + 1, level.join(" "));
    }
    for (a, b) in &composition.precedence {
        let _ = writeln!(out, "before {a} {b}");
    }
    out
}

/// Taxonomy, services and request loaded from one directory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub taxonomy: Taxonomy,
    pub services: Vec<Service>,
    pub request: Request,
}

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Self> {
        let file = |name: &str| -> (PathBuf, String) {
            let p = dir.join(name);
            let shown = p.display().to_string();
            (p, shown)
        };
        let (tp, tn) = file(TAXONOMY_FILE);
        let taxonomy = parse_taxonomy(&read(&tp)?, &tn)?;
        let (sp, sn) = file(SERVICES_FILE);
        let services = parse_services(&read(&sp)?, &sn, &taxonomy)?;
        let (rp, rn) = file(REQUEST_FILE);
        let request = parse_request(&read(&rp)?, &rn, &taxonomy)?;
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        Ok(Dataset { name, taxonomy, services, request })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write(&dir.join(TAXONOMY_FILE), &write_taxonomy(&self.taxonomy))?;
        write(&dir.join(SERVICES_FILE), &write_services(&self.services, &self.taxonomy))?;
        write(&dir.join(REQUEST_FILE), &write_request(&self.request, &self.taxonomy))
    }

    pub fn registry(&self, config: DiscoveryConfig) -> Result<Registry> {
        let mut b = Registry::builder(self.taxonomy.clone(), config);
        for s in &self.services {
            b.add(s.clone())?;
        }
        Ok(b.build())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAX: &str = "# demo\nBook Thing\n\nThing\nNovel Book\n";

    #[test]
    fn taxonomy_allows_forward_parents() {
        let t = parse_taxonomy(TAX, "t").unwrap();
        let novel = t.lookup("Novel").unwrap();
        assert!(t.is_ancestor(t.lookup("Thing").unwrap(), novel));
        assert_eq!(parse_taxonomy(&write_taxonomy(&t), "t").unwrap().len(), 3);
    }

    #[test]
    fn taxonomy_errors_carry_line_numbers() {
        let e = parse_taxonomy("A\nB Missing\n", "t.txt").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_taxonomy("A\nA\n", "t.txt").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_taxonomy("A B\nB A\n", "t.txt").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }), "{e}");
    }

    #[test]
    fn services_round_trip() {
        let t = parse_taxonomy(TAX, "t").unwrap();
        let text = "s1 | Book | Novel\ns2 |  | Thing\n";
        let services = parse_services(text, "s", &t).unwrap();
        assert!(services[1].inputs.is_empty());
        assert_eq!(write_services(&services, &t), "s1 | Book | Novel\ns2 |  | Thing\n");
    }

    #[test]
    fn service_errors() {
        let t = parse_taxonomy(TAX, "t").unwrap();
        let e = parse_services("s1 | Book\n", "s", &t).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_services("s1 | Book | Nope\n", "s", &t).unwrap_err();
        assert!(e.to_string().contains("`s1`") && e.to_string().contains("`Nope`"), "{e}");
        let e = parse_services("s1 | | Book\n#\ns1 | | Book\n", "s", &t).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn request_parsing() {
        let t = parse_taxonomy(TAX, "t").unwrap();
        let r = parse_request("inputs: Book\noutputs: Novel Thing\n", "r", &t).unwrap();
        assert_eq!(r.outputs.len(), 2);
        assert_eq!(write_request(&r, &t), "inputs: Book\noutputs: Thing Novel\n");
        assert!(parse_request("inputs: Book\n", "r", &t).is_err());
        assert!(matches!(parse_request("inputs: Book\noutputs:\n", "r", &t), Err(Error::Core(_))));
    }
}
