//! Run configuration: flat `key=value` settings from a file and flags.

use anyhow::{anyhow, bail, Context, Result};
use btq_core::linalg::c;
use btq_core::linalg::CMat;
use btq_core::symplectic::{CompatibleStructure, StructurePath};
use btq_core::transport::regression_paths;
use btq_core::Complex64;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Transport,
    Coeff,
    Trace,
    Approx,
    Oracle,
}

impl Command {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "verify" => Self::Verify,
            "transport" => Self::Transport,
            "coeff" => Self::Coeff,
            "trace" => Self::Trace,
            "approx" => Self::Approx,
            "oracle" => Self::Oracle,
            _ => bail!("unknown command {s:?}"),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Verify => "verify",
            Self::Transport => "transport",
            Self::Coeff => "coeff",
            Self::Trace => "trace",
            Self::Approx => "approx",
            Self::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub path: Option<String>,
    pub map: Option<[f64; 4]>,
    pub tau: Complex64,
    pub t: f64,
    pub p_list: Vec<u32>,
    pub grid: Option<usize>,
    pub steps: Option<usize>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub output: Output,
    pub out: Option<PathBuf>,
    /// The merged settings, echoed into the report.
    pub settings: BTreeMap<String, String>,
}

pub const KEYS: [&str; 14] =
    ["command", "path", "map", "tau", "t", "pmin", "pmax", "plist", "grid", "steps", "tol", "seed", "output", "out"];

/// Settings from a `key=value` file; blank lines and `#` comments ignored.
pub fn read_settings(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value", i + 1))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            bail!("line {}: unknown key {k:?}", i + 1);
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn positive<T: std::str::FromStr + PartialOrd + Default>(key: &str, v: &str) -> Result<T> {
    let x: T = v.parse().map_err(|_| anyhow!("{key}: cannot parse {v:?}"))?;
    if !(x > T::default()) {
        bail!("{key} must be positive");
    }
    Ok(x)
}

impl RunConfig {
    pub fn from_settings(settings: BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| settings.get(k).map(String::as_str);
        let command = Command::parse(get("command").ok_or_else(|| anyhow!("no command given"))?)?;
        let map = get("map").map(parse_map).transpose()?;
        let tau = get("tau").map(parse_complex).transpose()?.unwrap_or(c(0.0, 1.0));
        if !(tau.im > 0.0) {
            bail!("tau must have positive imaginary part");
        }
        let t = match get("t") {
            Some(v) => v.parse::<f64>().map_err(|_| anyhow!("t: cannot parse {v:?}"))?,
            None => 1.0,
        };
        if !(0.0..=1.0).contains(&t) {
            bail!("t must lie in [0, 1]");
        }
        let p_list = match (get("plist"), get("pmax")) {
            (Some(list), _) => list.split(',').map(|s| positive::<u32>("plist", s.trim())).collect::<Result<Vec<_>>>()?,
            (None, Some(max)) => {
                let max: u32 = positive("pmax", max)?;
                let min: u32 = get("pmin").map(|v| positive("pmin", v)).transpose()?.unwrap_or(4);
                (min..=max).collect()
            }
            (None, None) => Vec::new(),
        };
        if matches!(command, Command::Trace | Command::Approx) && p_list.is_empty() {
            bail!("{} needs --pmax or --plist", command.name());
        }
        let output = match get("output").unwrap_or("json") {
            "json" => Output::Json,
            "csv" => Output::Csv,
            o => bail!("output must be json or csv, got {o:?}"),
        };
        Ok(Self {
            command,
            path: get("path").map(str::to_string),
            map,
            tau,
            t,
            p_list,
            grid: get("grid").map(|v| positive("grid", v)).transpose()?,
            steps: get("steps").map(|v| positive("steps", v)).transpose()?,
            tol: get("tol").map(|v| positive("tol", v)).transpose()?,
            seed: get("seed").map(|v| v.parse().map_err(|_| anyhow!("seed: cannot parse {v:?}"))).transpose()?.unwrap_or(7),
            output,
            out: get("out").map(PathBuf::from),
            settings,
        })
    }

    /// Settings echo, without the output location.
    pub fn echo(&self) -> Map<String, Value> {
        self.settings
            .iter()
            .filter(|(k, _)| k.as_str() != "out")
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect()
    }

    pub fn integer_map(&self) -> Result<[[i64; 2]; 2]> {
        let m = self.map.ok_or_else(|| anyhow!("--map is required"))?;
        if m.iter().any(|x| x.fract() != 0.0) {
            bail!("--map must have integer entries here");
        }
        Ok([[m[0] as i64, m[1] as i64], [m[2] as i64, m[3] as i64]])
    }
}

/// `a+bi`, `a-bi`, `bi`, `i`, `-i` or a real number.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
    let bad = || anyhow!("cannot parse complex number {s:?}");
    let Some(body) = s.strip_suffix('i') else {
        return Ok(c(s.parse().map_err(|_| bad())?, 0.0));
    };
    // Split before the last sign that is not a leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse().map_err(|_| bad())?,
    };
    Ok(c(re.parse().map_err(|_| bad())?, im))
}

/// Row-major `a,b,c,d`.
pub fn parse_map(s: &str) -> Result<[f64; 4]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| anyhow!("cannot parse map entry {x:?}")))
        .collect::<Result<_>>()?;
    v.try_into().map_err(|_| anyhow!("--map needs four entries a,b,c,d"))
}

/// Path descriptors: `scaling:<s>`, `scaling<n>:<s>`, `segment:<tau0>,<tau1>`,
/// `file:<path>` (lines `t re im`), or a regression path name, optionally
/// followed by `;power:<k>` for the clock `t -> t^k`.
pub fn parse_path(s: &str) -> Result<StructurePath> {
    if let Some((_, p)) = regression_paths().into_iter().find(|(name, _)| name == s) {
        return Ok(p);
    }
    if let Some((base, power)) = s.rsplit_once(";power:") {
        let k: f64 = power.parse().map_err(|_| anyhow!("cannot parse power {power:?}"))?;
        return Ok(StructurePath::reparametrized(parse_path(base)?, k)?);
    }
    let (kind, arg) = s.split_once(':').ok_or_else(|| anyhow!("path {s:?} has no kind prefix"))?;
    Ok(match kind {
        "segment" => {
            let (a, b) = arg.split_once(',').ok_or_else(|| anyhow!("segment needs two moduli"))?;
            StructurePath::upper_half_plane_segment(parse_complex(a)?, parse_complex(b)?)?
        }
        "file" => read_path_file(arg)?,
        k if k.starts_with("scaling") => {
            let n = match &k["scaling".len()..] {
                "" => 1,
                d => d.parse().map_err(|_| anyhow!("bad scaling dimension {d:?}"))?,
            };
            StructurePath::diagonal_scaling(n, arg.parse().map_err(|_| anyhow!("bad scaling rate {arg:?}"))?)?
        }
        _ => bail!("unknown path kind {kind:?}"),
    })
}

fn read_path_file(path: &str) -> Result<StructurePath> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let mut samples = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line.split_whitespace().map(|x| x.parse::<f64>()).collect::<std::result::Result<_, _>>()?;
        let [t, re, im] = v[..] else { bail!("path file lines must be `t re im`") };
        let z = CMat::from_element(1, 1, c(re, im));
        samples.push((t, CompatibleStructure::from_siegel(&z)?));
    }
    Ok(StructurePath::sampled(samples)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("0+1i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("1+i").unwrap(), c(1.0, 1.0));
        assert_eq!(parse_complex("-0.5-1.7i").unwrap(), c(-0.5, -1.7));
        assert_eq!(parse_complex("1e-3+2e1i").unwrap(), c(1e-3, 20.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1.5").unwrap(), c(1.5, 0.0));
        assert!(parse_complex("1+xi").is_err());
    }

    #[test]
    fn paths() {
        assert_eq!(parse_path("scaling:1.0").unwrap(), StructurePath::diagonal_scaling(1, 1.0).unwrap());
        assert_eq!(parse_path("scaling2:-0.6").unwrap().n(), 2);
        assert!(parse_path("segment:i,2i").is_ok());
        assert!(parse_path("segment:0.3+0.8i,-0.5+1.7i;power:2").is_ok());
        assert!(parse_path("siegel2").is_ok());
        assert!(parse_path("segment:i,-i").is_err());
        assert!(parse_path("bogus").is_err());
    }

    #[test]
    fn settings() {
        let s = read_settings("command = trace\n# comment\nmap=2,1,1,1\npmax=8\n").unwrap();
        let cfg = RunConfig::from_settings(s).unwrap();
        assert_eq!(cfg.p_list, vec![4, 5, 6, 7, 8]);
        assert_eq!(cfg.integer_map().unwrap(), [[2, 1], [1, 1]]);
        assert!(read_settings("colour=red").is_err());
        let mut s = BTreeMap::new();
        s.insert("command".to_string(), "approx".to_string());
        assert!(RunConfig::from_settings(s).is_err());
    }
}
