//! Command implementations behind the binary, separated from argument
//! parsing so integration tests can drive them directly.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::Context;
use fieldatlas_core::atlas::{rasterize_field_map, Atlas};
use fieldatlas_core::metrics::{normalized_error, param_vector};
use fieldatlas_core::pipeline::learn_atlas;
use fieldatlas_core::sim::{generate_dataset, reference_scenario, Scenario};

use crate::config::RunConfig;
use crate::formats;
use crate::ingest;

/// Error carrying the process exit code: 2 usage/validation, 3 I/O,
/// 4 numerical failure.
#[derive(Debug)]
pub struct CmdError {
    pub exit_code: i32,
    pub inner: anyhow::Error,
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.inner)
    }
}

pub type CmdResult = Result<(), CmdError>;

fn usage<E: Into<anyhow::Error>>(e: E) -> CmdError {
    CmdError { exit_code: 2, inner: e.into() }
}

fn io_err<E: Into<anyhow::Error>>(e: E) -> CmdError {
    CmdError { exit_code: 3, inner: e.into() }
}

fn numeric<E: Into<anyhow::Error>>(e: E) -> CmdError {
    CmdError { exit_code: 4, inner: e.into() }
}

fn open_reader(path: &Path) -> Result<BufReader<File>, CmdError> {
    File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map(BufReader::new)
        .map_err(io_err)
}

fn create_writer(path: &Path) -> Result<BufWriter<File>, CmdError> {
    File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map(BufWriter::new)
        .map_err(io_err)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CmdError> {
    match path {
        Some(p) => RunConfig::load(p).map_err(usage),
        None => Ok(RunConfig::default()),
    }
}

fn load_scenario(path: Option<&Path>, seed: u64) -> Result<Scenario, CmdError> {
    match path {
        Some(p) => {
            let mut s = formats::read_scenario(open_reader(p)?).map_err(usage)?;
            s.seed = seed;
            Ok(s)
        }
        None => Ok(reference_scenario(seed)),
    }
}

// ---------------------------------------------------------------------------

pub struct SimulateArgs {
    pub scenario: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub snr: Option<f64>,
    pub n_trajectories: Option<usize>,
    pub out: PathBuf,
}

pub fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    let cfg = load_config(args.config.as_deref())?;
    let mut sim = cfg.sim_config();
    if let Some(snr) = args.snr {
        sim.snr = snr;
    }
    if let Some(n) = args.n_trajectories {
        sim.n_trajectories = n;
    }
    sim.validate().map_err(usage)?;
    let scenario = load_scenario(args.scenario.as_deref(), args.seed)?;
    let data = generate_dataset(&scenario, &sim).map_err(numeric)?;
    ingest::write_trajectories(create_writer(&args.out)?, &data).map_err(io_err)?;
    eprintln!(
        "simulated {} trajectories (snr {}, seed {}) -> {}",
        data.len(),
        sim.snr,
        args.seed,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------

pub struct LearnArgs {
    pub input: PathBuf,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn cmd_learn(args: &LearnArgs) -> CmdResult {
    let cfg = load_config(args.config.as_deref())?;
    let parsed = ingest::parse_trajectories(open_reader(&args.input)?, None).map_err(usage)?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }

    let atlas = if parsed.trajectories.is_empty() {
        eprintln!("warning: no usable trajectories; writing empty atlas");
        Atlas { letters: Vec::new(), dim: 2 }
    } else {
        let dim = parsed.trajectories[0].dim();
        let pipeline = cfg.pipeline_config(dim, args.seed);
        let (atlas, estimates) = learn_atlas(&parsed.trajectories, &pipeline).map_err(numeric)?;
        if atlas.letters.is_empty() {
            eprintln!("warning: no stable segments found; atlas is empty");
        }
        eprintln!(
            "learned {} letter(s) from {} segment estimate(s) over {} trajectories",
            atlas.letters.len(),
            estimates.len(),
            parsed.trajectories.len()
        );
        atlas
    };

    for l in &atlas.letters {
        let x0: Vec<String> = l.params.x0.coords.iter().map(|c| format!("{c:.4}")).collect();
        eprintln!(
            "  letter {}: x0 = ({}), beta = {:.4}, sigma^2 = {:.4}, support = {}",
            l.m,
            x0.join(", "),
            l.params.beta,
            l.params.sigma * l.params.sigma,
            l.support
        );
    }
    formats::write_atlas(create_writer(&args.out)?, &atlas).map_err(io_err)?;
    Ok(())
}

// ---------------------------------------------------------------------------

pub struct EvaluateArgs {
    pub atlases: Vec<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CmdResult {
    if args.atlases.is_empty() {
        return Err(usage(anyhow::anyhow!("evaluate needs at least one atlas")));
    }
    let scenario = load_scenario(args.scenario.as_deref(), args.seed)?;
    let report = evaluate_atlases(&args.atlases, &scenario)?;

    for entry in &report.entries {
        eprintln!("atlas {}:", entry.atlas);
        for m in &entry.matches {
            match m.letter {
                Some(l) => eprintln!(
                    "  attractor {} <- letter {}: |dx0| = {:.4}, |dbeta| = {:.4}, |dsigma2| = {:.4}",
                    m.attractor,
                    l,
                    m.delta_x0.unwrap_or(f64::NAN),
                    m.delta_beta.unwrap_or(f64::NAN),
                    m.delta_sigma2.unwrap_or(f64::NAN)
                ),
                None => eprintln!("  attractor {}: unmatched", m.attractor),
            }
        }
        if !entry.unmatched_letters.is_empty() {
            eprintln!("  extra letters: {:?}", entry.unmatched_letters);
        }
    }
    if report.epsilon.is_empty() {
        eprintln!("epsilon: unavailable (unmatched attractors)");
    } else {
        let eps: Vec<String> = report.epsilon.iter().map(|e| format!("{e:.4}")).collect();
        eprintln!("epsilon: [{}]", eps.join(", "));
    }

    if let Some(out) = &args.out {
        formats::write_metrics(create_writer(out)?, &report).map_err(io_err)?;
    }
    Ok(())
}

/// Nearest-center matching of letters to ground truth plus the normalized
/// error across the atlas sequence.
pub fn evaluate_atlases(
    paths: &[PathBuf],
    scenario: &Scenario,
) -> Result<formats::MetricsReport, CmdError> {
    let truth: Vec<_> = scenario.attractors.iter().map(|a| a.near.clone()).collect();
    let mut entries = Vec::new();
    let mut estimate_rows: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut complete = true;

    for path in paths {
        let atlas = formats::read_atlas(open_reader(path)?).map_err(usage)?;
        let mut used = vec![false; atlas.letters.len()];
        let mut matches = Vec::new();
        let mut row = Vec::new();
        for (ai, gt) in truth.iter().enumerate() {
            let best = atlas
                .letters
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .min_by(|(_, a), (_, b)| {
                    let da = a.params.x0.distance(&gt.x0);
                    let db = b.params.x0.distance(&gt.x0);
                    da.partial_cmp(&db).expect("finite distances")
                })
                .map(|(i, _)| i);
            match best {
                Some(i) => {
                    used[i] = true;
                    let l = &atlas.letters[i];
                    matches.push(formats::MatchEntry {
                        attractor: ai,
                        letter: Some(l.m),
                        delta_x0: Some(l.params.x0.distance(&gt.x0)),
                        delta_beta: Some((l.params.beta - gt.beta).abs()),
                        delta_sigma2: Some(
                            (l.params.sigma * l.params.sigma - gt.sigma * gt.sigma).abs(),
                        ),
                    });
                    row.push(param_vector(&l.params));
                }
                None => {
                    complete = false;
                    matches.push(formats::MatchEntry {
                        attractor: ai,
                        letter: None,
                        delta_x0: None,
                        delta_beta: None,
                        delta_sigma2: None,
                    });
                }
            }
        }
        let unmatched_letters = atlas
            .letters
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(_, l)| l.m)
            .collect();
        entries.push(formats::EntryReport {
            atlas: path.display().to_string(),
            matches,
            unmatched_letters,
        });
        estimate_rows.push(row);
    }

    let epsilon = if complete {
        let gt_vectors: Vec<Vec<f64>> = truth.iter().map(param_vector).collect();
        normalized_error(&gt_vectors, &estimate_rows).map_err(numeric)?
    } else {
        Vec::new()
    };
    Ok(formats::MetricsReport { entries, epsilon })
}

// ---------------------------------------------------------------------------

pub struct RenderArgs {
    pub atlas: PathBuf,
    /// [xmin, ymin, xmax, ymax].
    pub bounds: [f64; 4],
    pub resolution: usize,
    pub out: PathBuf,
}

pub fn cmd_render(args: &RenderArgs) -> CmdResult {
    let atlas = formats::read_atlas(open_reader(&args.atlas)?).map_err(usage)?;
    let [xmin, ymin, xmax, ymax] = args.bounds;
    let grid = rasterize_field_map(&atlas, [xmin, ymin], [xmax, ymax], args.resolution)
        .map_err(usage)?;
    formats::write_raster(create_writer(&args.out)?, &grid).map_err(io_err)?;
    let sidecar = args.out.with_extension("meta.json");
    formats::write_raster_sidecar(create_writer(&sidecar)?, &grid).map_err(io_err)?;
    eprintln!(
        "rendered {0}x{0} raster -> {1} (+ {2})",
        args.resolution,
        args.out.display(),
        sidecar.display()
    );
    Ok(())
}
