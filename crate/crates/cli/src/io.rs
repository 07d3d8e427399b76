//! Input files and argument parsing.

use std::collections::BTreeMap;
use std::path::Path;

use admnet::tree::TreeAddress;
use admnet::{ComplexFrequency, EdgeParams, FiniteNetwork, OperatorKind, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Complex number as it appears in files and reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Cx {
    fn from(z: C64) -> Self {
        Cx { re: z.re, im: z.im }
    }
}

impl From<Cx> for C64 {
    fn from(z: Cx) -> Self {
        C64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub u: String,
    pub v: String,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeRecord>,
}

impl NetworkFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn from_network(net: &FiniteNetwork, names: &[String]) -> Self {
        NetworkFile {
            vertices: names.to_vec(),
            edges: net
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    u: names[e.u].clone(),
                    v: names[e.v].clone(),
                    l: e.params.l(),
                    r: e.params.r(),
                    d: e.params.d(),
                })
                .collect(),
        }
    }

    pub fn to_network(&self) -> CliResult<(FiniteNetwork, BTreeMap<String, usize>)> {
        let mut index = BTreeMap::new();
        for (i, name) in self.vertices.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(
                    admnet::Error::InvalidNetwork(format!("duplicate vertex `{name}`")).into(),
                );
            }
        }
        let lookup = |n: &str| {
            index.get(n).copied().ok_or_else(|| {
                CliError::from(admnet::Error::InvalidNetwork(format!(
                    "edge uses unknown vertex `{n}`"
                )))
            })
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            edges.push((
                lookup(&e.u)?,
                lookup(&e.v)?,
                EdgeParams::new(e.l, e.r, e.d)?,
            ));
        }
        Ok((FiniteNetwork::new(self.vertices.len(), edges)?, index))
    }
}

/// Boundary distribution or harmonic function given on tree addresses.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeValuesFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    pub values: BTreeMap<String, Cx>,
}

impl TreeValuesFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn parsed(&self) -> CliResult<BTreeMap<TreeAddress, C64>> {
        self.values
            .iter()
            .map(|(k, v)| Ok((parse_address(k)?, C64::from(*v))))
            .collect()
    }
}

pub fn parse_address(s: &str) -> CliResult<TreeAddress> {
    s.parse()
        .map_err(|e: admnet::Error| CliError::Parse(e.to_string()))
}

pub fn parse_complex(s: &str) -> CliResult<C64> {
    let bad = || CliError::Parse(format!("`{s}` is not a complex number RE,IM"));
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    Ok(C64::new(
        re.trim().parse().map_err(|_| bad())?,
        im.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn parse_frequency(s: &str) -> CliResult<ComplexFrequency> {
    Ok(ComplexFrequency::new(parse_complex(s)?)?)
}

/// `;`-separated list, empty entries dropped.
pub fn split_list(s: &str) -> Vec<String> {
    s.split(';')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(String::from)
        .collect()
}

/// `complex`, `t=T`, `tilde` or `check`, relative to the frequency `s`.
pub fn parse_kind(s: &str, freq: ComplexFrequency) -> CliResult<OperatorKind> {
    match s.trim() {
        "complex" => Ok(OperatorKind::Complex(freq)),
        "tilde" => Ok(OperatorKind::Tilde(freq)),
        "check" => Ok(OperatorKind::Check(freq)),
        other => match other.strip_prefix("t=") {
            Some(t) => {
                let t: f64 = t
                    .parse()
                    .map_err(|_| CliError::Parse(format!("bad kind `{other}`")))?;
                Ok(OperatorKind::at_t(t)?)
            }
            None => Err(CliError::Parse(format!("unknown kind `{other}`"))),
        },
    }
}

/// `A0:A1:STEP`, inclusive of `A1` up to rounding.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Parse(format!("`{s}` is not a grid A0:A1:STEP"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<CliResult<_>>()?;
    let [a0, a1, step] = parts[..] else {
        return Err(bad());
    };
    if step.is_nan() || step <= 0.0 || a1 < a0 {
        return Err(bad());
    }
    let n = ((a1 - a0) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| a0 + step * i as f64).collect())
}
