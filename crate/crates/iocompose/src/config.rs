//! Optional `key = value` defaults file. Command-line flags win.

use std::path::Path;

use iocompose_core::{DiscoveryMode, Heuristic};

use crate::error::{Error, Result};
use crate::formats;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FileConfig {
    pub mode: Option<DiscoveryMode>,
    pub allow_subsume: Option<bool>,
    pub heuristic: Option<Heuristic>,
    pub latency_ms: Option<u64>,
}

pub fn parse_heuristic(s: &str) -> Option<Heuristic> {
    match s {
        "zero" => Some(Heuristic::Zero),
        "depth" => Some(Heuristic::Depth),
        _ => None,
    }
}

pub fn parse(text: &str, file: &str) -> Result<FileConfig> {
    let mut cfg = FileConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { file: file.to_string(), line: i + 1, message };
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = || err(format!("invalid value `{value}` for `{key}`"));
        match key {
            "mode" => cfg.mode = Some(value.parse().map_err(|_| bad())?),
            "allow_subsume" => cfg.allow_subsume = Some(value.parse().map_err(|_| bad())?),
            "heuristic" => cfg.heuristic = Some(parse_heuristic(value).ok_or_else(bad)?),
            "latency_ms" => cfg.latency_ms = Some(value.parse().map_err(|_| bad())?),
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<FileConfig> {
    parse(&formats::read(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let c = parse("# defaults\nmode = scan\nallow_subsume=true\nheuristic = zero\n", "c").unwrap();
        assert_eq!(c.mode, Some(DiscoveryMode::Scan));
        assert_eq!(c.allow_subsume, Some(true));
        assert_eq!(c.heuristic, Some(Heuristic::Zero));
        assert_eq!(c.latency_ms, None);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(matches!(parse("colour = red", "c"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("\nmode = fast", "c"), Err(Error::Parse { line: 2, .. })));
        assert!(parse("mode", "c").is_err());
    }
}
