//! Plain key=value configuration. Values given on the command line win
//! over the file; the file wins over built-in defaults. Paths in the
//! file resolve relative to the file's own directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use patrol_core::model::{Rfid, Tick};
use patrol_core::netsim::NodeId;

/// Defaults match the console's fixed echo line: pi=5, delta_max=0.010,
/// trash_max=10.0%. The aggregator tolerances mirror those scales.
pub const DEFAULT_PI: Tick = 5;
pub const DEFAULT_DELTA_MAX: f64 = 0.010;
pub const DEFAULT_TRASH_MAX: f64 = 0.10;
pub const DEFAULT_EPS: f64 = 0.010;
pub const DEFAULT_TAU: Tick = 5;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ANON_OUT: &str = "anonymized.txt";

#[derive(Debug, Clone)]
pub struct Config {
    pub registry: Option<PathBuf>,
    pub repo: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub anon_out: Option<PathBuf>,
    pub topology: Option<PathBuf>,
    pub sources: Vec<NodeId>,
    pub pi: Tick,
    pub max_radius: Option<f64>,
    pub delta_max: f64,
    pub trash_max: f64,
    pub eps: f64,
    pub tau: Tick,
    pub guard: bool,
    pub seed: u64,
    pub zones: BTreeMap<u32, Vec<Rfid>>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            registry: None,
            repo: None,
            data: None,
            anon_out: None,
            topology: None,
            sources: Vec::new(),
            pi: DEFAULT_PI,
            max_radius: None,
            delta_max: DEFAULT_DELTA_MAX,
            trash_max: DEFAULT_TRASH_MAX,
            eps: DEFAULT_EPS,
            tau: DEFAULT_TAU,
            guard: false,
            seed: DEFAULT_SEED,
            zones: BTreeMap::new(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base).with_context(|| format!("in config file {}", path.display()))
    }

    fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {lineno}: expected key=value, found `{line}`"))?;
            let key = key.trim();
            let value = value.trim();
            let path_of = |v: &str| resolve(base, v);
            match key {
                "registry" => cfg.registry = Some(path_of(value)),
                "repo" => cfg.repo = Some(path_of(value)),
                "data" => cfg.data = Some(path_of(value)),
                "anon_out" => cfg.anon_out = Some(path_of(value)),
                "topology" => cfg.topology = Some(path_of(value)),
                "sources" => {
                    cfg.sources = split_ids(value)
                        .map_err(|e| anyhow!("line {lineno}: sources: {e}"))?
                }
                "pi" => cfg.pi = parse_num(value, lineno, "pi")?,
                "max_radius" => cfg.max_radius = Some(parse_num(value, lineno, "max_radius")?),
                "delta_max" => cfg.delta_max = parse_num(value, lineno, "delta_max")?,
                "trash_max" => cfg.trash_max = parse_num(value, lineno, "trash_max")?,
                "eps" => cfg.eps = parse_num(value, lineno, "eps")?,
                "tau" => cfg.tau = parse_num(value, lineno, "tau")?,
                "seed" => cfg.seed = parse_num(value, lineno, "seed")?,
                "guard" => {
                    cfg.guard = match value {
                        "true" | "on" | "1" => true,
                        "false" | "off" | "0" => false,
                        other => bail!("line {lineno}: guard must be true/false, found `{other}`"),
                    }
                }
                _ => {
                    if let Some(zone) = key.strip_prefix("zone.") {
                        let zone_id: u32 = zone
                            .parse()
                            .map_err(|_| anyhow!("line {lineno}: invalid zone number `{zone}`"))?;
                        let ids = split_ids(value)
                            .map_err(|e| anyhow!("line {lineno}: zone.{zone_id}: {e}"))?;
                        cfg.zones.insert(zone_id, ids.into_iter().map(Rfid).collect());
                    } else {
                        bail!("line {lineno}: unknown key `{key}`");
                    }
                }
            }
        }
        Ok(cfg)
    }

    /// Working cluster-radius bound; defaults to half the radius cap.
    pub fn max_radius(&self) -> f64 {
        self.max_radius.unwrap_or(self.delta_max / 2.0)
    }
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = Path::new(value);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, lineno: usize, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow!("line {lineno}: invalid {key} value `{value}`"))
}

pub(crate) fn split_ids(value: &str) -> Result<Vec<u64>, String> {
    let ids: Result<Vec<u64>, _> = value
        .split([' ', ',', '\t'])
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect();
    let ids = ids.map_err(|e| e.to_string())?;
    if ids.is_empty() {
        return Err("needs at least one id".into());
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_console_echo() {
        let cfg = Config::default();
        assert_eq!(cfg.pi, 5);
        assert_eq!(cfg.delta_max, 0.010);
        assert_eq!(cfg.trash_max, 0.10);
        assert_eq!(cfg.max_radius(), 0.005);
    }

    #[test]
    fn parses_zones_and_paths_relative_to_file() {
        let text = "registry=reg.txt\nzone.0=501 502 503\nzone.3=9,10\npi=10\nguard=on\n";
        let cfg = Config::parse(text, Path::new("/tmp/conf")).unwrap();
        assert_eq!(cfg.registry.as_deref(), Some(Path::new("/tmp/conf/reg.txt")));
        assert_eq!(cfg.zones[&0], vec![Rfid(501), Rfid(502), Rfid(503)]);
        assert_eq!(cfg.zones[&3], vec![Rfid(9), Rfid(10)]);
        assert_eq!(cfg.pi, 10);
        assert!(cfg.guard);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Config::parse("nope=1\n", Path::new(".")).is_err());
        assert!(Config::parse("pi=abc\n", Path::new(".")).is_err());
        assert!(Config::parse("zone.x=1\n", Path::new(".")).is_err());
        assert!(Config::parse("just a line\n", Path::new(".")).is_err());
    }
}
