//! Chip-design metrics per fabric configuration and Pareto recommendation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::fabric::{memory_bits_per_neuron, routing_row_bits, FabricConfig, RouterLevel};
use crate::placer::PlacementResult;

/// Exact mean `sum / count`, ordered by value.
#[derive(Debug, Clone, Copy)]
pub struct Mean {
    pub sum: u64,
    pub count: u64,
}

impl Mean {
    pub fn new(sum: u64, count: u64) -> Self {
        Self { sum, count }
    }

    /// The mean as a float; 0 for an empty sample.
    pub fn value(self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum as f64 / self.count as f64
        }
    }
}

impl PartialEq for Mean {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Mean {}

impl PartialOrd for Mean {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mean {
    fn cmp(&self, other: &Self) -> Ordering {
        // empty samples compare as zero
        let lhs = self.sum as u128 * other.count.max(1) as u128;
        let rhs = other.sum as u128 * self.count.max(1) as u128;
        lhs.cmp(&rhs)
    }
}

/// Minimization front over `(a, b)` pairs; equal points are all kept.
pub fn pareto_front<T: PartialOrd>(points: &[(T, T)]) -> Vec<bool> {
    points
        .iter()
        .map(|p| {
            !points
                .iter()
                .any(|q| q.0 <= p.0 && q.1 <= p.1 && (q.0 < p.0 || q.1 < p.1))
        })
        .collect()
}

/// Metrics of one compiled configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigReport {
    pub core_size: usize,
    pub num_cores: usize,
    pub num_r1: usize,
    pub depth: RouterLevel,
    /// R1 + R2 row bits per neuron, R0 bit excluded.
    pub routing_row_bits: usize,
    /// Routing bits per neuron including the R0 bit.
    pub bits_per_neuron: usize,
    pub hardware_neurons: usize,
    /// `bits_per_neuron * hardware_neurons`.
    pub total_bits: usize,
    pub extra_neurons: usize,
    pub programmable: usize,
    pub unplaceable: usize,
    pub pareto: bool,
}

pub fn config_metrics(placement: &PlacementResult, cfg: &FabricConfig) -> Result<ConfigReport> {
    let depth = placement.depth.depth();
    let bits_per_neuron = memory_bits_per_neuron(cfg, depth)?;
    let num_cores = placement.assignment.num_cores();
    let hardware_neurons = num_cores * cfg.core_size;
    Ok(ConfigReport {
        core_size: cfg.core_size,
        num_cores,
        num_r1: placement.layout.topology.num_r1(),
        depth: placement.depth,
        routing_row_bits: routing_row_bits(cfg, depth)?,
        bits_per_neuron,
        hardware_neurons,
        total_bits: bits_per_neuron * hardware_neurons,
        extra_neurons: placement.extra_neurons,
        programmable: placement.programmable.len(),
        unplaceable: placement.unplaceable.len(),
        pareto: false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChipReport {
    pub rows: Vec<ConfigReport>,
}

impl ChipReport {
    pub fn recommended(&self) -> impl Iterator<Item = &ConfigReport> {
        self.rows.iter().filter(|r| r.pareto)
    }

    pub fn dominated(&self) -> impl Iterator<Item = &ConfigReport> {
        self.rows.iter().filter(|r| !r.pareto)
    }

    /// Aligned plain-text table, one line per configuration.
    pub fn render_table(&self) -> String {
        let header = [
            "core_size",
            "cores",
            "r1",
            "depth",
            "row_bits",
            "bits/neuron",
            "hw_neurons",
            "total_bits",
            "extra",
            "programmable",
            "unplaceable",
            "pareto",
        ];
        let body: Vec<[String; 12]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.core_size.to_string(),
                    r.num_cores.to_string(),
                    r.num_r1.to_string(),
                    r.depth.depth().to_string(),
                    r.routing_row_bits.to_string(),
                    r.bits_per_neuron.to_string(),
                    r.hardware_neurons.to_string(),
                    r.total_bits.to_string(),
                    r.extra_neurons.to_string(),
                    r.programmable.to_string(),
                    r.unplaceable.to_string(),
                    String::from(if r.pareto { "yes" } else { "dominated" }),
                ]
            })
            .collect();
        render_aligned(&header, &body)
    }
}

/// Right-aligned columns separated by two spaces.
pub fn render_aligned<const N: usize>(header: &[&str; N], body: &[[String; N]]) -> String {
    let mut widths = header.map(str::len);
    for row in body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut first = true;
        for (cell, w) in cells.zip(widths) {
            if !first {
                out.push_str("  ");
            }
            first = false;
            let _ = write!(out, "{cell:>w$}");
        }
        out.push('\n');
    };
    line(&mut header.iter().copied());
    for row in body {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

/// Metrics per configuration plus the configurations on the
/// (total bits, extra neurons) Pareto front.
pub fn chip_spec_report(entries: &[(PlacementResult, FabricConfig)]) -> Result<ChipReport> {
    if entries.is_empty() {
        return Err(Error::InvalidFabric(
            "report needs at least one configuration".into(),
        ));
    }
    let mut rows = entries
        .iter()
        .map(|(p, cfg)| config_metrics(p, cfg))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<_> = rows
        .iter()
        .map(|r| (r.total_bits, r.extra_neurons))
        .collect();
    for (row, keep) in rows.iter_mut().zip(pareto_front(&points)) {
        row.pareto = keep;
    }
    Ok(ChipReport { rows })
}
