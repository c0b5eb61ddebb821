//! Parallel deviation sweep, CSV export and the core-size recommendation.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use neuromap_core::experiments::{
    aggregate, evaluate_instance, sort_rows, sweep_jobs, InstanceRow, SweepCell, SweepResult,
    SweepSpec,
};
use neuromap_core::report::{pareto_front, render_aligned, Mean};
use neuromap_core::{FabricConfig, NetworkModel};
use rayon::prelude::*;
use serde::Serialize;

use crate::manifest::RunManifest;

/// Same result as the sequential sweep; instances run on the rayon pool.
pub fn parallel_sweep(
    base: &NetworkModel,
    spec: &SweepSpec,
    template: &FabricConfig,
) -> Result<SweepResult> {
    let sizes: Vec<usize> = spec
        .core_sizes
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let jobs = sweep_jobs(base, spec)?;
    let work: Vec<_> = jobs
        .iter()
        .flat_map(|j| sizes.iter().map(move |&s| (j, s)))
        .collect();
    let mut rows = work
        .par_iter()
        .map(|&(job, size)| evaluate_instance(base, job, template, size))
        .collect::<Result<Vec<InstanceRow>, _>>()?;
    sort_rows(&mut rows);
    Ok(SweepResult {
        cells: aggregate(spec, &rows),
        rows,
    })
}

/// `x` with 6 significant digits, trailing zeros dropped.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0".into()
        } else {
            x.to_string()
        };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub const CSV_HEADER: [&str; 5] = [
    "k",
    "core_size",
    "mean_extra_neurons",
    "mean_unplaceable",
    "samples",
];

pub fn write_csv<W: Write>(out: W, cells: &[SweepCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in cells {
        w.write_record([
            c.k.to_string(),
            c.core_size.to_string(),
            sig6(c.mean_extra().value()),
            sig6(c.mean_unplaceable().value()),
            c.samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(path: &Path, cells: &[SweepCell]) -> Result<()> {
    let file =
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_csv(file, cells).with_context(|| format!("cannot write {}", path.display()))
}

/// Per core size, pooled over every removal count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SizeSummary {
    pub core_size: usize,
    pub samples: u64,
    pub extra_sum: u64,
    pub unplaceable_sum: u64,
    pub total_bits_sum: u64,
    pub pareto: bool,
}

impl SizeSummary {
    fn extra(&self) -> Mean {
        Mean::new(self.extra_sum, self.samples)
    }

    fn bits(&self) -> Mean {
        Mean::new(self.total_bits_sum, self.samples)
    }

    fn unplaceable(&self) -> Mean {
        Mean::new(self.unplaceable_sum, self.samples)
    }
}

/// Pareto front over (mean total routing bits, mean extra neurons).
pub fn recommend(cells: &[SweepCell]) -> Vec<SizeSummary> {
    let sizes: BTreeSet<usize> = cells.iter().map(|c| c.core_size).collect();
    let mut out: Vec<SizeSummary> = sizes
        .into_iter()
        .map(|core_size| {
            let mine = cells.iter().filter(|c| c.core_size == core_size);
            let mut s = SizeSummary {
                core_size,
                samples: 0,
                extra_sum: 0,
                unplaceable_sum: 0,
                total_bits_sum: 0,
                pareto: false,
            };
            for c in mine {
                s.samples += c.samples;
                s.extra_sum += c.extra_sum;
                s.unplaceable_sum += c.unplaceable_sum;
                s.total_bits_sum += c.total_bits_sum;
            }
            s
        })
        .collect();
    let points: Vec<_> = out.iter().map(|s| (s.bits(), s.extra())).collect();
    for (s, keep) in out.iter_mut().zip(pareto_front(&points)) {
        s.pareto = keep;
    }
    out
}

pub fn render_recommendation(summary: &[SizeSummary]) -> String {
    let header = [
        "core_size",
        "samples",
        "mean_total_bits",
        "mean_extra",
        "mean_unplaceable",
        "pareto",
    ];
    let body: Vec<[String; 6]> = summary
        .iter()
        .map(|s| {
            [
                s.core_size.to_string(),
                s.samples.to_string(),
                sig6(s.bits().value()),
                sig6(s.extra().value()),
                sig6(s.unplaceable().value()),
                if s.pareto { "recommended" } else { "dominated" }.to_string(),
            ]
        })
        .collect();
    render_aligned(&header, &body)
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub k: usize,
    pub core_size: usize,
    pub samples: u64,
    pub extra_sum: u64,
    pub unplaceable_sum: u64,
    pub total_bits_sum: u64,
    pub mean_extra_neurons: f64,
    pub mean_unplaceable: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowRecord {
    pub k: usize,
    pub core_size: usize,
    pub victims: Vec<usize>,
    pub num_neurons: usize,
    pub num_cores: usize,
    pub depth: usize,
    pub extra_neurons: usize,
    pub programmable: usize,
    pub unplaceable: usize,
    pub total_bits: usize,
}

/// JSON mirror of a sweep with the raw instance rows.
#[derive(Debug, Clone, Serialize)]
pub struct SweepFile {
    pub manifest: RunManifest,
    pub cells: Vec<CellRecord>,
    pub recommendation: Vec<SizeSummary>,
    pub rows: Vec<RowRecord>,
}

impl SweepFile {
    pub fn new(manifest: RunManifest, result: &SweepResult) -> Self {
        Self {
            manifest,
            cells: result
                .cells
                .iter()
                .map(|c| CellRecord {
                    k: c.k,
                    core_size: c.core_size,
                    samples: c.samples,
                    extra_sum: c.extra_sum,
                    unplaceable_sum: c.unplaceable_sum,
                    total_bits_sum: c.total_bits_sum,
                    mean_extra_neurons: c.mean_extra().value(),
                    mean_unplaceable: c.mean_unplaceable().value(),
                })
                .collect(),
            recommendation: recommend(&result.cells),
            rows: result
                .rows
                .iter()
                .map(|r| RowRecord {
                    k: r.k,
                    core_size: r.core_size,
                    victims: r.victims.clone(),
                    num_neurons: r.num_neurons,
                    num_cores: r.num_cores,
                    depth: r.depth.depth(),
                    extra_neurons: r.extra_neurons,
                    programmable: r.programmable,
                    unplaceable: r.unplaceable,
                    total_bits: r.total_bits,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(1.5166666666), "1.51667");
        assert_eq!(sig6(3.4142857142857), "3.41429");
        assert_eq!(sig6(0.0071428571), "0.00714286");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "k,core_size,mean_extra_neurons,mean_unplaceable,samples\n"
        );
    }
}
