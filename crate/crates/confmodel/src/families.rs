//! Named degree families and degree-source parsing.
//!
//! A family string has the form `name:key=val,...`. Regular and all-ones
//! families are sized by their vertex count `n`; every other family is sized
//! by its half-edge total `N`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use confmodel_core::degrees::{
    make_heavy_pair, make_heavy_tail, make_ones, make_power_block, make_regular,
};
use confmodel_core::{BipartiteDegreePair, DegreeSequence};

use crate::error::{HarnessError, Result};
use crate::montecarlo::Ensemble;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeFamily {
    Regular { d: u32 },
    Ones,
    HeavyPair,
    PowerBlock { exponent: f64 },
    HeavyTail { ratio: f64 },
    /// One hub with `Σ d_i² / N ≈ ln N`.
    LogHub,
    /// Left side `[N - ⌊√N⌋, 1, …]`, right side `[2, 1, …]`.
    BipartiteCounterexample,
    BipartiteRegular { s: u32, t: u32 },
}

impl DegreeFamily {
    pub fn is_bipartite(&self) -> bool {
        matches!(
            self,
            DegreeFamily::BipartiteCounterexample | DegreeFamily::BipartiteRegular { .. }
        )
    }

    /// Whether `Σ d_i² / N` stays bounded as the size grows.
    pub fn is_bounded(&self) -> bool {
        match self {
            DegreeFamily::Regular { .. }
            | DegreeFamily::Ones
            | DegreeFamily::HeavyPair
            | DegreeFamily::HeavyTail { .. }
            | DegreeFamily::BipartiteRegular { .. } => true,
            DegreeFamily::PowerBlock { exponent } => *exponent <= 0.5,
            DegreeFamily::LogHub | DegreeFamily::BipartiteCounterexample => false,
        }
    }

    /// `n` for regular and all-ones families, `N` otherwise.
    pub fn size_key(&self) -> &'static str {
        match self {
            DegreeFamily::Regular { .. } | DegreeFamily::Ones => "n",
            _ => "N",
        }
    }

    pub fn instantiate(&self, size: u64) -> Result<Ensemble> {
        let n = usize::try_from(size).map_err(|_| HarnessError::Parse("size too large".into()))?;
        let ens = match *self {
            DegreeFamily::Regular { d } => Ensemble::General(make_regular(n, d)?),
            DegreeFamily::Ones => Ensemble::General(make_ones(n)?),
            DegreeFamily::HeavyPair => Ensemble::General(make_heavy_pair(size)?),
            DegreeFamily::PowerBlock { exponent } => {
                Ensemble::General(make_power_block(size, exponent)?)
            }
            DegreeFamily::HeavyTail { ratio } => Ensemble::General(make_heavy_tail(size, ratio)?),
            DegreeFamily::LogHub => {
                let ratio = (size as f64).ln().max(1.0);
                Ensemble::General(make_heavy_tail(size, ratio)?)
            }
            DegreeFamily::BipartiteCounterexample => {
                Ensemble::Bipartite(BipartiteDegreePair::hub_counterexample(size)?)
            }
            DegreeFamily::BipartiteRegular { s, t } => {
                if s == 0 || t == 0 || size % u64::from(s) != 0 || size % u64::from(t) != 0 {
                    return Err(HarnessError::Parse(format!(
                        "N={size} is not divisible by both side degrees {s} and {t}"
                    )));
                }
                Ensemble::Bipartite(BipartiteDegreePair::regular(
                    (size / u64::from(s)) as usize,
                    s,
                    (size / u64::from(t)) as usize,
                    t,
                )?)
            }
        };
        Ok(ens)
    }
}

impl fmt::Display for DegreeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegreeFamily::Regular { d } => write!(f, "regular:d={d}"),
            DegreeFamily::Ones => write!(f, "ones"),
            DegreeFamily::HeavyPair => write!(f, "heavy_pair"),
            DegreeFamily::PowerBlock { exponent } => write!(f, "power_block:exponent={exponent}"),
            DegreeFamily::HeavyTail { ratio } => write!(f, "heavy_tail:ratio={ratio}"),
            DegreeFamily::LogHub => write!(f, "log_hub"),
            DegreeFamily::BipartiteCounterexample => write!(f, "bip_counterexample"),
            DegreeFamily::BipartiteRegular { s, t } => write!(f, "bip_regular:s={s},t={t}"),
        }
    }
}

/// A parsed family string, optionally carrying a concrete size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    pub family: DegreeFamily,
    pub size: Option<u64>,
}

impl FamilySpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (name, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut params: BTreeMap<&str, &str> = BTreeMap::new();
        for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| HarnessError::Parse(format!("expected key=value, got `{item}`")))?;
            params.insert(k.trim(), v.trim());
        }
        let mut take = |key: &str| params.remove(key);
        let family = match name.trim() {
            "regular" => DegreeFamily::Regular { d: num(take("d"), "d")? },
            "ones" => DegreeFamily::Ones,
            "heavy_pair" => DegreeFamily::HeavyPair,
            "power_block" => DegreeFamily::PowerBlock {
                exponent: opt_num(take("exponent"), "exponent")?.unwrap_or(0.6),
            },
            "heavy_tail" => DegreeFamily::HeavyTail { ratio: num(take("ratio"), "ratio")? },
            "log_hub" => DegreeFamily::LogHub,
            "bip_counterexample" => DegreeFamily::BipartiteCounterexample,
            "bip_regular" => DegreeFamily::BipartiteRegular {
                s: num(take("s"), "s")?,
                t: num(take("t"), "t")?,
            },
            other => return Err(HarnessError::Parse(format!("unknown degree family `{other}`"))),
        };
        let size = opt_num(take(family.size_key()), family.size_key())?;
        if let Some(key) = params.keys().next() {
            return Err(HarnessError::Parse(format!("unknown parameter `{key}` for `{name}`")));
        }
        Ok(Self { family, size })
    }

    pub fn instantiate(&self) -> Result<Ensemble> {
        let size = self.size.ok_or_else(|| {
            HarnessError::Parse(format!("family `{}` needs {}=<size>", self.family, self.family.size_key()))
        })?;
        self.family.instantiate(size)
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = self.family.to_string();
        match self.size {
            None => f.write_str(&base),
            Some(size) => {
                let sep = if base.contains(':') { ',' } else { ':' };
                write!(f, "{base}{sep}{}={size}", self.family.size_key())
            }
        }
    }
}

fn opt_num<T: std::str::FromStr>(value: Option<&str>, key: &str) -> Result<Option<T>> {
    value
        .map(|v| v.parse::<T>().map_err(|_| HarnessError::Parse(format!("bad value `{v}` for `{key}`"))))
        .transpose()
}

fn num<T: std::str::FromStr>(value: Option<&str>, key: &str) -> Result<T> {
    opt_num(value, key)?.ok_or_else(|| HarnessError::Parse(format!("missing parameter `{key}`")))
}

/// Raw degree list from inline JSON, a JSON or CSV file, or a generator.
pub fn parse_degree_list(source: &str) -> Result<Vec<i64>> {
    let trimmed = source.trim();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed)
            .map_err(|e| HarnessError::Parse(format!("degree list: {e}")));
    }
    let path = Path::new(trimmed);
    if path.is_file() {
        return read_degree_file(path);
    }
    match FamilySpec::parse(trimmed)?.instantiate()? {
        Ensemble::General(ds) => Ok(ds.degrees().iter().map(|&d| i64::from(d)).collect()),
        Ensemble::Bipartite(_) => Err(HarnessError::Parse(
            "bipartite family given where a single degree sequence is expected".into(),
        )),
    }
}

pub fn parse_degrees(source: &str) -> Result<DegreeSequence> {
    Ok(DegreeSequence::validate(&parse_degree_list(source)?)?)
}

/// A general or bipartite ensemble from CLI-style sources: either a single
/// degree source or a generator string naming a bipartite family.
pub fn parse_ensemble(source: &str) -> Result<Ensemble> {
    let trimmed = source.trim();
    if !trimmed.starts_with('[') && !Path::new(trimmed).is_file() {
        let spec = FamilySpec::parse(trimmed)?;
        return spec.instantiate();
    }
    Ok(Ensemble::General(parse_degrees(trimmed)?))
}

pub fn parse_bipartite(s: &str, t: &str) -> Result<BipartiteDegreePair> {
    Ok(BipartiteDegreePair::validate(&parse_degree_list(s)?, &parse_degree_list(t)?)?)
}

/// Reads a JSON array or one degree per line (blank lines and `#` comments
/// ignored; a non-numeric first line is taken as a header).
pub fn read_degree_file(path: &Path) -> Result<Vec<i64>> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text.trim())
            .map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())));
    }
    let mut out = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = record.get(0).unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<i64>() {
            Ok(d) => out.push(d),
            Err(_) if line == 0 => continue,
            Err(_) => {
                return Err(HarnessError::Parse(format!(
                    "{}: line {}: `{field}` is not an integer",
                    path.display(),
                    line + 1
                )))
            }
        }
    }
    Ok(out)
}

/// Writes one degree per line under a `degree` header.
pub fn write_degree_csv<W: std::io::Write>(degrees: &[u32], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["degree"])?;
    for d in degrees {
        w.write_record([d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_strings() {
        let spec = FamilySpec::parse("regular:n=1000,d=3").unwrap();
        assert_eq!(spec.family, DegreeFamily::Regular { d: 3 });
        assert_eq!(spec.size, Some(1000));
        assert_eq!(spec.to_string(), "regular:d=3,n=1000");
        let ds = parse_degrees("heavy_pair:N=100").unwrap();
        assert_eq!(&ds.degrees()[..2], &[10, 10]);
        assert_eq!(ds.len(), 82);
        assert!(FamilySpec::parse("regular:n=10").is_err());
        assert!(FamilySpec::parse("regular:d=3,q=1").is_err());
        assert!(FamilySpec::parse("nope:n=1").is_err());
        assert!(FamilySpec::parse("regular:d=3").unwrap().instantiate().is_err());
    }

    #[test]
    fn inline_and_files() {
        assert_eq!(parse_degree_list("[2, 2, 2]").unwrap(), vec![2, 2, 2]);
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("d.csv");
        let mut buf = Vec::new();
        write_degree_csv(&[3, 1, 2], &mut buf).unwrap();
        std::fs::write(&csv_path, &buf).unwrap();
        assert_eq!(parse_degree_list(csv_path.to_str().unwrap()).unwrap(), vec![3, 1, 2]);
        let json_path = dir.path().join("d.json");
        std::fs::write(&json_path, "[4,2,2]\n").unwrap();
        assert_eq!(parse_degree_list(json_path.to_str().unwrap()).unwrap(), vec![4, 2, 2]);
        std::fs::write(&csv_path, "# comment\n1\nx\n").unwrap();
        assert!(parse_degree_list(csv_path.to_str().unwrap()).is_err());
    }

    #[test]
    fn bipartite_families() {
        let ens = FamilySpec::parse("bip_regular:s=2,t=2,N=20").unwrap().instantiate().unwrap();
        match ens {
            Ensemble::Bipartite(bp) => {
                assert_eq!(bp.left().len(), 10);
                assert_eq!(bp.total(), 20);
            }
            _ => panic!("expected bipartite"),
        }
        assert!(parse_degrees("bip_counterexample:N=100").is_err());
        assert!(DegreeFamily::LogHub.instantiate(1000).is_ok());
        assert!(!DegreeFamily::PowerBlock { exponent: 0.6 }.is_bounded());
    }
}
