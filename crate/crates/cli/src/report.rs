use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sgrpo_core::frontier::{mean_ci95, shared_reference};
use sgrpo_core::{FrontierReport64, OperatingPoint64};

use crate::error::{CliError, Result};
use crate::svg::{self, Series};
use crate::sweep::SweepRow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    /// Half-width of the normal 95% interval over seeds.
    pub ci95: f64,
}

impl MeanCi {
    fn of(values: &[f64]) -> Self {
        let (mean, ci95) = mean_ci95(values);
        Self { mean, ci95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedIndicators {
    pub seed: u64,
    pub hv: f64,
    pub dip: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFrontier {
    pub mode: String,
    /// Every operating point of the model, pooled over seeds.
    pub points: Vec<OperatingPoint64>,
    pub nd: Vec<OperatingPoint64>,
    pub hv: f64,
    pub dip: f64,
    pub r2: f64,
    pub per_seed: Vec<SeedIndicators>,
    pub hv_seeds: MeanCi,
    pub dip_seeds: MeanCi,
    pub r2_seeds: MeanCi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierOutput {
    #[serde(rename = "ref")]
    pub reference: (f64, f64),
    pub ideal: (f64, f64),
    pub models: BTreeMap<String, ModelFrontier>,
}

/// Rows grouped by model, then by seed, in first-seen order within each seed.
fn group_rows(rows: &[SweepRow]) -> BTreeMap<&str, (String, BTreeMap<u64, Vec<OperatingPoint64>>)> {
    let mut grouped: BTreeMap<&str, (String, BTreeMap<u64, Vec<OperatingPoint64>>)> = BTreeMap::new();
    for row in rows {
        let entry = grouped.entry(&row.model).or_insert_with(|| (row.mode.clone(), BTreeMap::new()));
        entry.1.entry(row.seed).or_default().push(row.to_point());
    }
    grouped
}

/// Indicators per model against one reference point: the componentwise
/// minimum over every row unless `reference` overrides it.
pub fn frontier_report(rows: &[SweepRow], reference: Option<(f64, f64)>) -> Result<FrontierOutput> {
    if rows.is_empty() {
        return Err(CliError::Input("no operating points to report".into()));
    }
    if let Some(bad) = rows.iter().find(|r| !(r.utility.is_finite() && r.diversity.is_finite())) {
        return Err(CliError::Input(format!(
            "non-finite operating point for model {} at temperature {}",
            bad.model, bad.temperature
        )));
    }
    let all: Vec<OperatingPoint64> = rows.iter().map(SweepRow::to_point).collect();
    let reference = match reference {
        Some(r) => r,
        None => shared_reference(&[&all]).expect("rows are nonempty"),
    };
    let mut models = BTreeMap::new();
    for (name, (mode, by_seed)) in group_rows(rows) {
        let pooled: Vec<OperatingPoint64> = by_seed.values().flatten().copied().collect();
        let report = FrontierReport64::build(pooled, reference)?;
        let per_seed = by_seed
            .iter()
            .map(|(&seed, pts)| {
                let r = FrontierReport64::build(pts.clone(), reference)?;
                Ok(SeedIndicators {
                    seed,
                    hv: r.hv,
                    dip: r.dip,
                    r2: r.r2,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let column = |f: fn(&SeedIndicators) -> f64| per_seed.iter().map(f).collect::<Vec<_>>();
        models.insert(
            name.to_string(),
            ModelFrontier {
                mode,
                hv_seeds: MeanCi::of(&column(|s| s.hv)),
                dip_seeds: MeanCi::of(&column(|s| s.dip)),
                r2_seeds: MeanCi::of(&column(|s| s.r2)),
                points: report.points,
                nd: report.nd,
                hv: report.hv,
                dip: report.dip,
                r2: report.r2,
                per_seed,
            },
        );
    }
    Ok(FrontierOutput {
        reference,
        ideal: (1.0, 1.0),
        models,
    })
}

pub fn render_svg(report: &FrontierOutput) -> String {
    let series: Vec<Series<'_>> = report
        .models
        .iter()
        .map(|(name, m)| Series {
            name,
            points: &m.points,
        })
        .collect();
    svg::render(&series, report.reference)
}

/// Parses a `U,V` pair.
pub fn parse_reference(s: &str) -> std::result::Result<(f64, f64), String> {
    let (u, v) = s.split_once(',').ok_or_else(|| format!("expected U,V but got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(u)?, parse(v)?))
}
