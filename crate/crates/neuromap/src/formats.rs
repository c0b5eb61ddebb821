//! JSON file formats for networks, fabric configs, placements and routing
//! tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use neuromap_core::fabric::{CoreEntry, FabricTopology, NeuronRows};
use neuromap_core::placer::{CoreAssignment, Layout, LayoutStrategy, PlacementResult};
use neuromap_core::{EdgeSign, FabricConfig, NetworkModel, RouterLevel, RoutingTables};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;

/// Reads and parses a JSON file; errors name the file and the line/column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| {
        anyhow::anyhow!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        )
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub neurons: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub populations: Option<Vec<Vec<usize>>>,
    /// `"src-dst"` -> `"exc"` or `"inh"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<BTreeMap<String, String>>,
}

impl NetworkFile {
    pub fn from_model(net: &NetworkModel, manifest: Option<RunManifest>) -> Self {
        let signs = (!net.signs().is_empty()).then(|| {
            net.signs()
                .iter()
                .map(|(&(s, d), sign)| {
                    let tag = match sign {
                        EdgeSign::Excitatory => "exc",
                        EdgeSign::Inhibitory => "inh",
                    };
                    (format!("{s}-{d}"), tag.to_string())
                })
                .collect()
        });
        Self {
            manifest,
            neurons: net.num_neurons(),
            edges: net.edges().iter().map(|&(s, d)| [s, d]).collect(),
            populations: net.populations().map(<[_]>::to_vec),
            signs,
        }
    }

    pub fn to_model(&self) -> Result<NetworkModel> {
        for (i, &[s, d]) in self.edges.iter().enumerate() {
            if s >= self.neurons || d >= self.neurons {
                bail!(
                    "edges[{i}]: [{s}, {d}] references a neuron outside 0..{}",
                    self.neurons
                );
            }
            if s == d {
                bail!("edges[{i}]: self connection on neuron {s}");
            }
        }
        let mut net = NetworkModel::new(self.neurons, self.edges.iter().map(|&[s, d]| (s, d)))
            .context("edges")?;
        if let Some(pops) = &self.populations {
            net = net.with_populations(pops.clone()).context("populations")?;
        }
        if let Some(signs) = &self.signs {
            let mut parsed = BTreeMap::new();
            for (key, tag) in signs {
                let edge = key
                    .split_once('-')
                    .and_then(|(s, d)| Some((s.parse().ok()?, d.parse().ok()?)))
                    .with_context(|| format!("signs: key {key:?} is not \"src-dst\""))?;
                let sign = match tag.as_str() {
                    "exc" => EdgeSign::Excitatory,
                    "inh" => EdgeSign::Inhibitory,
                    other => bail!("signs[{key:?}]: expected \"exc\" or \"inh\", got {other:?}"),
                };
                parsed.insert(edge, sign);
            }
            net = net.with_signs(parsed).context("signs")?;
        }
        Ok(net)
    }
}

pub fn load_network(path: &Path) -> Result<(NetworkModel, NetworkFile)> {
    let file: NetworkFile = read_json(path)?;
    let net = file
        .to_model()
        .with_context(|| format!("{}", path.display()))?;
    Ok((net, file))
}

/// Fabric config file: every field optional, defaults as in [`FabricConfig`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FabricFile {
    pub core_size: usize,
    pub cores_per_r1: usize,
    pub r1_per_r2: usize,
    /// Absent or null means the architectural fan-in capacity.
    pub fanin_budget: Option<usize>,
    pub programmable_per_core: usize,
    pub r1_rows: usize,
    pub r1_row_bits: usize,
    pub r2_rows: usize,
    pub r2_row_bits: usize,
}

impl Default for FabricFile {
    fn default() -> Self {
        Self::from(&FabricConfig::default())
    }
}

impl From<&FabricConfig> for FabricFile {
    fn from(c: &FabricConfig) -> Self {
        Self {
            core_size: c.core_size,
            cores_per_r1: c.cores_per_r1,
            r1_per_r2: c.r1_per_r2,
            fanin_budget: c.fanin_budget,
            programmable_per_core: c.programmable_per_core,
            r1_rows: c.r1_rows,
            r1_row_bits: c.r1_row_bits,
            r2_rows: c.r2_rows,
            r2_row_bits: c.r2_row_bits,
        }
    }
}

impl From<&FabricFile> for FabricConfig {
    fn from(f: &FabricFile) -> Self {
        Self {
            core_size: f.core_size,
            cores_per_r1: f.cores_per_r1,
            r1_per_r2: f.r1_per_r2,
            fanin_budget: f.fanin_budget,
            programmable_per_core: f.programmable_per_core,
            r1_rows: f.r1_rows,
            r1_row_bits: f.r1_row_bits,
            r2_rows: f.r2_rows,
            r2_row_bits: f.r2_row_bits,
        }
    }
}

/// Loads and validates a fabric file; `None` gives the defaults.
pub fn load_fabric(path: Option<&Path>) -> Result<FabricConfig> {
    let Some(path) = path else {
        return Ok(FabricConfig::default());
    };
    let file: FabricFile = read_json(path)?;
    let cfg = FabricConfig::from(&file);
    cfg.validate()
        .with_context(|| format!("{}", path.display()))?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreRecord {
    pub r1_cluster: usize,
    pub position: usize,
    pub neurons: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacedEdge {
    pub src: usize,
    pub dst: usize,
    pub level: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementFile {
    pub manifest: RunManifest,
    pub fabric: FabricFile,
    pub layout: String,
    pub depth: usize,
    pub cores: Vec<CoreRecord>,
    pub distance_map: Vec<Vec<i64>>,
    pub placed: Vec<PlacedEdge>,
    pub programmable: Vec<[usize; 2]>,
    pub unplaceable: Vec<[usize; 2]>,
    pub fanin_used: Vec<usize>,
    pub extra_neurons: usize,
    pub spurious_in_core: Vec<[usize; 2]>,
}

fn pairs(edges: &[(usize, usize)]) -> Vec<[usize; 2]> {
    edges.iter().map(|&(s, d)| [s, d]).collect()
}

fn unpairs(edges: &[[usize; 2]]) -> Vec<(usize, usize)> {
    edges.iter().map(|&[s, d]| (s, d)).collect()
}

fn parse_level(name: &str) -> Result<RouterLevel> {
    match name {
        "R0" => Ok(RouterLevel::R0),
        "R1" => Ok(RouterLevel::R1),
        "R2" => Ok(RouterLevel::R2),
        other => bail!("unknown router level {other:?}"),
    }
}

fn parse_strategy(name: &str) -> Result<LayoutStrategy> {
    [
        LayoutStrategy::Greedy,
        LayoutStrategy::Spread,
        LayoutStrategy::Sequential,
    ]
    .into_iter()
    .find(|s| s.name() == name)
    .with_context(|| format!("unknown layout {name:?}"))
}

impl PlacementFile {
    pub fn new(
        manifest: RunManifest,
        cfg: &FabricConfig,
        p: &PlacementResult,
        distance_map: &[Vec<i64>],
    ) -> Self {
        let topo = &p.layout.topology;
        Self {
            manifest,
            fabric: FabricFile::from(cfg),
            layout: p.layout.strategy.name().to_string(),
            depth: p.depth.depth(),
            cores: (0..p.assignment.num_cores())
                .map(|c| CoreRecord {
                    r1_cluster: topo.cluster_of(c),
                    position: topo.position_of(c),
                    neurons: p.assignment.members(c).to_vec(),
                })
                .collect(),
            distance_map: distance_map.to_vec(),
            placed: p
                .placed
                .iter()
                .map(|&((src, dst), level)| PlacedEdge {
                    src,
                    dst,
                    level: level.name().to_string(),
                })
                .collect(),
            programmable: pairs(&p.programmable),
            unplaceable: pairs(&p.unplaceable),
            fanin_used: p.fanin_used.clone(),
            extra_neurons: p.extra_neurons,
            spurious_in_core: pairs(&p.spurious_in_core),
        }
    }

    pub fn config(&self) -> FabricConfig {
        FabricConfig::from(&self.fabric)
    }

    /// Rebuilds the in-memory placement.
    pub fn to_placement(&self) -> Result<PlacementResult> {
        let cfg = self.config();
        cfg.validate().context("fabric")?;
        let neurons = self.fanin_used.len();
        let assignment = CoreAssignment::from_cores(
            neurons,
            cfg.core_size,
            self.cores.iter().map(|c| c.neurons.clone()).collect(),
        )
        .context("cores")?;
        let placements: Vec<_> = self
            .cores
            .iter()
            .map(|c| (c.r1_cluster, c.position))
            .collect();
        let topology = FabricTopology::new(&cfg, &placements).context("cores")?;
        let mut placed = Vec::with_capacity(self.placed.len());
        for (i, e) in self.placed.iter().enumerate() {
            let level = parse_level(&e.level).with_context(|| format!("placed[{i}].level"))?;
            placed.push(((e.src, e.dst), level));
        }
        Ok(PlacementResult {
            assignment,
            layout: Layout {
                strategy: parse_strategy(&self.layout).context("layout")?,
                topology,
            },
            depth: RouterLevel::from_depth(self.depth).context("depth")?,
            placed,
            programmable: unpairs(&self.programmable),
            unplaceable: unpairs(&self.unplaceable),
            fanin_used: self.fanin_used.clone(),
            extra_neurons: self.extra_neurons,
            spurious_in_core: unpairs(&self.spurious_in_core),
        })
    }
}

/// Row values as little-endian bit strings: character `i` is bit `i`.
pub fn to_bits(value: u8, width: usize) -> String {
    (0..width)
        .map(|i| if value >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn from_bits(bits: &str) -> Result<u8> {
    if bits.len() > 8 {
        bail!("bit string {bits:?} is wider than 8 bits");
    }
    bits.chars()
        .enumerate()
        .try_fold(0u8, |acc, (i, c)| match c {
            '0' => Ok(acc),
            '1' => Ok(acc | 1 << i),
            _ => bail!("bit string {bits:?} may only contain 0 and 1"),
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronRecord {
    pub r0_bit: u8,
    pub r1_rows: Vec<String>,
    pub r2_rows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesFile {
    pub manifest: RunManifest,
    pub fabric: FabricFile,
    pub cores: Vec<CoreRecord>,
    pub neurons: Vec<NeuronRecord>,
    pub programmable: Vec<[usize; 2]>,
}

impl TablesFile {
    pub fn new(manifest: RunManifest, t: &RoutingTables) -> Self {
        let cfg = t.config();
        Self {
            manifest,
            fabric: FabricFile::from(cfg),
            cores: t
                .cores()
                .iter()
                .map(|c| CoreRecord {
                    r1_cluster: c.r1_cluster,
                    position: c.position,
                    neurons: c.neurons.clone(),
                })
                .collect(),
            neurons: t
                .neuron_rows()
                .iter()
                .map(|r| NeuronRecord {
                    r0_bit: r.r0.into(),
                    r1_rows: r.r1.iter().map(|&v| to_bits(v, cfg.r1_row_bits)).collect(),
                    r2_rows: r.r2.iter().map(|&v| to_bits(v, cfg.r2_row_bits)).collect(),
                })
                .collect(),
            programmable: pairs(t.programmable()),
        }
    }

    pub fn to_tables(&self) -> Result<RoutingTables> {
        let cfg = FabricConfig::from(&self.fabric);
        let mut rows = Vec::with_capacity(self.neurons.len());
        for (i, n) in self.neurons.iter().enumerate() {
            let r0 = match n.r0_bit {
                0 => false,
                1 => true,
                b => bail!("neurons[{i}].r0_bit: expected 0 or 1, got {b}"),
            };
            let parse = |rows: &[String], width: usize, field: &str| -> Result<Vec<u8>> {
                rows.iter()
                    .enumerate()
                    .map(|(k, bits)| {
                        if bits.len() != width {
                            bail!("neurons[{i}].{field}[{k}]: expected {width} bits, got {bits:?}");
                        }
                        from_bits(bits).with_context(|| format!("neurons[{i}].{field}[{k}]"))
                    })
                    .collect()
            };
            rows.push(NeuronRows {
                r0,
                r1: parse(&n.r1_rows, cfg.r1_row_bits, "r1_rows")?,
                r2: parse(&n.r2_rows, cfg.r2_row_bits, "r2_rows")?,
            });
        }
        let cores = self
            .cores
            .iter()
            .map(|c| CoreEntry {
                r1_cluster: c.r1_cluster,
                position: c.position,
                neurons: c.neurons.clone(),
            })
            .collect();
        Ok(RoutingTables::new(
            cfg,
            cores,
            rows,
            unpairs(&self.programmable),
        )?)
    }
}

pub fn load_tables(path: &Path) -> Result<RoutingTables> {
    let file: TablesFile = read_json(path)?;
    file.to_tables()
        .with_context(|| format!("{}", path.display()))
}

pub fn load_placement(path: &Path) -> Result<PlacementResult> {
    let file: PlacementFile = read_json(path)?;
    file.to_placement()
        .with_context(|| format!("{}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_are_little_endian() {
        assert_eq!(to_bits(2, 2), "01");
        assert_eq!(to_bits(1, 2), "10");
        assert_eq!(to_bits(0, 1), "0");
        assert_eq!(from_bits("01").unwrap(), 2);
        assert!(from_bits("2").is_err());
    }

    #[test]
    fn two_line_fabric_file() {
        let f: FabricFile = serde_json::from_str(r#"{"core_size": 2}"#).unwrap();
        assert_eq!(
            FabricConfig::from(&f),
            FabricConfig::default().with_core_size(2)
        );
    }

    #[test]
    fn unknown_fabric_field_rejected() {
        assert!(serde_json::from_str::<FabricFile>(r#"{"cores": 2}"#).is_err());
    }
}
