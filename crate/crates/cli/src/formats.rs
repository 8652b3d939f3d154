//! JSON and CSV file formats: scenarios, atlases, raster maps, metrics.

use std::io::{Read, Write};

use anyhow::{bail, Context};
use fieldatlas_core::atlas::{Atlas, AttractorLetter, RasterGrid};
use fieldatlas_core::field::{FarFieldParams, NearFieldParams, SwitchingField};
use fieldatlas_core::sim::{sim_switch_radius, Scenario};
use fieldatlas_core::traj::Point;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Scenario JSON

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioDoc {
    bounds: [[f64; 2]; 2],
    seed: u64,
    attractors: Vec<AttractorDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AttractorDoc {
    x0: Vec<f64>,
    beta: f64,
    sigma2: f64,
}

pub fn read_scenario<R: Read>(source: R) -> anyhow::Result<Scenario> {
    let doc: ScenarioDoc = serde_json::from_reader(source).context("parsing scenario JSON")?;
    if doc.attractors.is_empty() {
        bail!("scenario has no attractors");
    }
    let [min, max] = doc.bounds;
    if !(max[0] > min[0] && max[1] > min[1]) {
        bail!("scenario bounds are degenerate");
    }
    let mut attractors = Vec::with_capacity(doc.attractors.len());
    for (i, a) in doc.attractors.iter().enumerate() {
        if a.x0.len() != 2 {
            bail!("attractor {i}: x0 must have 2 coordinates");
        }
        if !(a.beta > 0.0) || !(a.sigma2 > 0.0) {
            bail!("attractor {i}: beta and sigma2 must be positive");
        }
        let sigma = a.sigma2.sqrt();
        attractors.push(SwitchingField {
            near: NearFieldParams {
                beta: a.beta,
                alpha: a.beta,
                x0: Point::new(a.x0.clone()),
                sigma,
            },
            far: FarFieldParams { mu_log: a.beta.ln(), sigma_far: 0.0 },
            r_switch: sim_switch_radius(sigma),
        });
    }
    Ok(Scenario { attractors, bounds: doc.bounds, seed: doc.seed })
}

pub fn write_scenario<W: Write>(out: W, scenario: &Scenario) -> anyhow::Result<()> {
    let doc = ScenarioDoc {
        bounds: scenario.bounds,
        seed: scenario.seed,
        attractors: scenario
            .attractors
            .iter()
            .map(|a| AttractorDoc {
                x0: a.near.x0.coords.clone(),
                beta: a.near.beta,
                sigma2: a.near.sigma * a.near.sigma,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Atlas JSON

#[derive(Debug, Serialize, Deserialize)]
struct AtlasDoc {
    dim: usize,
    letters: Vec<LetterDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LetterDoc {
    id: usize,
    beta: f64,
    alpha: f64,
    x0: Vec<f64>,
    sigma: f64,
    mu_log: f64,
    sigma_far: f64,
    r_switch: f64,
    support: usize,
}

pub fn write_atlas<W: Write>(out: W, atlas: &Atlas) -> anyhow::Result<()> {
    let doc = AtlasDoc {
        dim: atlas.dim,
        letters: atlas
            .letters
            .iter()
            .map(|l| LetterDoc {
                id: l.m,
                beta: l.params.beta,
                alpha: l.params.alpha,
                x0: l.params.x0.coords.clone(),
                sigma: l.params.sigma,
                mu_log: l.far.mu_log,
                sigma_far: l.far.sigma_far,
                r_switch: l.r_switch,
                support: l.support,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

pub fn read_atlas<R: Read>(source: R) -> anyhow::Result<Atlas> {
    let doc: AtlasDoc = serde_json::from_reader(source).context("parsing atlas JSON")?;
    let mut letters = Vec::with_capacity(doc.letters.len());
    for l in doc.letters {
        if l.x0.len() != doc.dim {
            bail!("letter {}: x0 has {} coordinates, atlas dim is {}", l.id, l.x0.len(), doc.dim);
        }
        if !(l.beta > 0.0 && l.alpha > 0.0 && l.sigma > 0.0) {
            bail!("letter {}: beta, alpha and sigma must be positive", l.id);
        }
        letters.push(AttractorLetter {
            m: l.id,
            params: NearFieldParams {
                beta: l.beta,
                alpha: l.alpha,
                x0: Point::new(l.x0),
                sigma: l.sigma,
            },
            far: FarFieldParams { mu_log: l.mu_log, sigma_far: l.sigma_far },
            r_switch: l.r_switch,
            support: l.support,
        });
    }
    Ok(Atlas { letters, dim: doc.dim })
}

// ---------------------------------------------------------------------------
// Raster CSV + sidecar JSON

#[derive(Debug, Serialize, Deserialize)]
pub struct RasterSidecar {
    pub bounds: [[f64; 2]; 2],
    pub resolution: usize,
}

pub fn write_raster<W: Write>(out: W, grid: &RasterGrid) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "x", "y", "intensity"])?;
    for row in 0..grid.resolution {
        for col in 0..grid.resolution {
            let (x, y) = grid.cell_center(row, col);
            w.write_record([
                row.to_string(),
                col.to_string(),
                format!("{x}"),
                format!("{y}"),
                format!("{}", grid.value(row, col)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_raster_sidecar<W: Write>(out: W, grid: &RasterGrid) -> anyhow::Result<()> {
    let doc = RasterSidecar { bounds: [grid.min, grid.max], resolution: grid.resolution };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Metrics JSON

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    /// One entry per evaluated atlas, in input order.
    pub entries: Vec<EntryReport>,
    /// Normalized error per entry; empty when any attractor was unmatched
    /// in any entry.
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EntryReport {
    pub atlas: String,
    /// One row per ground-truth attractor, in scenario order.
    pub matches: Vec<MatchEntry>,
    /// Letters not claimed by any attractor.
    pub unmatched_letters: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MatchEntry {
    pub attractor: usize,
    /// Matched letter id, absent when no letter was available.
    pub letter: Option<usize>,
    pub delta_x0: Option<f64>,
    pub delta_beta: Option<f64>,
    pub delta_sigma2: Option<f64>,
}

pub fn write_metrics<W: Write>(out: W, report: &MetricsReport) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}
