//! Experiment configuration: a TOML file plus command-line overrides,
//! resolved into a fully specified record that is echoed into every report.

use std::fmt;
use std::path::{Path, PathBuf};

use gsim::experiments::{GraphSpec, ScheduleSpec, WeightResampling};
use gsim::Graph;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Rmse,
    Prob,
    Noise,
    Trace,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Rmse => "rmse",
            Study::Prob => "prob",
            Study::Noise => "noise",
            Study::Trace => "trace",
        }
    }
}

/// Every problem found while resolving a config.
#[derive(Debug)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration ({} problem{}):", self.0.len(), if self.0.len() == 1 { "" } else { "s" })?;
        for p in &self.0 {
            write!(f, "\n  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Regular,
    Density,
    File,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub generator: Option<Generator>,
    pub n: Option<usize>,
    pub degree: Option<usize>,
    pub density: Option<f64>,
    pub path: Option<PathBuf>,
    /// Generator seed for the graph structure; defaults to the run seed.
    pub structure_seed: Option<u64>,
    pub weight_low: Option<f64>,
    pub weight_high: Option<f64>,
}

/// The file format; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub graph: GraphSection,
    pub ks: Option<Vec<usize>>,
    pub samples: Option<usize>,
    pub graph_seeds: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub runs: Option<usize>,
    pub schedules: Option<Vec<ScheduleSpec>>,
    pub schedule: Option<ScheduleSpec>,
    pub levels: Option<Vec<f64>>,
    /// Runs per weight draw; 0 keeps the weights fixed.
    pub resample_batch: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Ok(toml::from_str(&text)?)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub ks: Option<Vec<usize>>,
    pub runs: Option<usize>,
    pub levels: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub graph_seeds: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "generator", rename_all = "lowercase")]
pub enum GraphSource {
    Regular { n: usize, degree: usize, structure_seed: u64 },
    Density { n: usize, density: f64, structure_seed: u64 },
    File { path: PathBuf },
}

/// A config with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub study: Study,
    pub seed: u64,
    pub graph: GraphSource,
    pub n: usize,
    pub weight_low: f64,
    pub weight_high: f64,
    pub ks: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub schedules: Vec<ScheduleSpec>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resampling: Option<WeightResampling>,
}

impl Resolved {
    pub fn graph_spec(&self, n: usize) -> Option<GraphSpec> {
        match self.graph {
            GraphSource::Regular { degree, .. } => Some(GraphSpec::Regular { n, degree }),
            GraphSource::Density { density, .. } => Some(GraphSpec::Density { n, density }),
            GraphSource::File { .. } => None,
        }
    }

    /// The study graph: the file, or the generator at `structure_seed`.
    pub fn load_graph(&self) -> anyhow::Result<Graph> {
        Ok(match &self.graph {
            GraphSource::Regular { n, degree, structure_seed } => {
                Graph::gen_regular(*n, *degree, self.weight_low, self.weight_high, *structure_seed)?
            }
            GraphSource::Density { n, density, structure_seed } => {
                Graph::gen_density(*n, *density, self.weight_low, self.weight_high, *structure_seed)?
            }
            GraphSource::File { path } => crate::commands::load_graph(path)?,
        })
    }
}

const DEFAULT_SEED: u64 = 1;
const DEFAULT_SAMPLES: usize = 1000;
const DEFAULT_GRAPH_SEEDS: usize = 20;
const DEFAULT_RUNS: usize = 200;
const DEFAULT_RESAMPLE_BATCH: usize = 10;
const DEFAULT_LEVELS: [f64; 4] = [0.0, 0.01, 0.02, 0.05];
const DEFAULT_RATES: [f64; 3] = [0.99, 0.995, 0.999];

pub fn resolve(study: Study, file: &FileConfig, cli: &Overrides) -> Result<Resolved, ConfigError> {
    let mut errs = Vec::new();
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let g = &file.graph;
    let weight_low = g.weight_low.unwrap_or(0.0);
    let weight_high = g.weight_high.unwrap_or(1.0);
    if weight_low.partial_cmp(&weight_high) != Some(std::cmp::Ordering::Less) {
        errs.push(format!("graph.weight_low ({weight_low}) must be below graph.weight_high ({weight_high})"));
    }
    let structure_seed = g.structure_seed.unwrap_or(seed);

    let generator = g.generator.unwrap_or(if g.path.is_some() {
        Generator::File
    } else if g.density.is_some() {
        Generator::Density
    } else {
        Generator::Regular
    });
    let (graph, n) = match generator {
        Generator::File => match &g.path {
            Some(path) => match crate::commands::load_graph(path) {
                Ok(gr) => (GraphSource::File { path: path.clone() }, gr.n()),
                Err(e) => {
                    errs.push(format!("graph.path: {e:#}"));
                    (GraphSource::File { path: path.clone() }, 0)
                }
            },
            None => {
                errs.push("graph.generator = \"file\" needs graph.path".into());
                (GraphSource::File { path: PathBuf::new() }, 0)
            }
        },
        Generator::Regular => {
            let n = g.n.unwrap_or(20);
            let degree = g.degree.unwrap_or(5);
            if degree == 0 || degree >= n || (n * degree) % 2 == 1 {
                errs.push(format!("no {degree}-regular graph on {n} vertices"));
            }
            (GraphSource::Regular { n, degree, structure_seed }, n)
        }
        Generator::Density => {
            let n = g.n.unwrap_or(20);
            let density = g.density.unwrap_or(5.0 / 19.0);
            if !(density > 0.0 && density <= 1.0) {
                errs.push(format!("graph.density {density} outside (0, 1]"));
            }
            (GraphSource::Density { n, density, structure_seed }, n)
        }
    };
    if generator != Generator::File && n < 2 {
        errs.push(format!("graph.n = {n} must be at least 2"));
    }

    let ks = cli.ks.clone().or_else(|| file.ks.clone()).unwrap_or_else(|| default_ks(study, n));
    let min_k = if study == Study::Rmse { 0 } else { 1 };
    if ks.is_empty() {
        errs.push("ks is empty".into());
    }
    for &k in &ks {
        if n > 0 && (k < min_k || k > n) {
            errs.push(format!("K = {k} outside {min_k}..={n}"));
        }
    }

    let mut r = Resolved {
        study,
        seed,
        graph,
        n,
        weight_low,
        weight_high,
        ks,
        samples: None,
        graph_seeds: None,
        sizes: None,
        runs: None,
        schedules: Vec::new(),
        levels: Vec::new(),
        resampling: None,
    };

    match study {
        Study::Rmse => {
            let samples = cli.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES);
            if samples < 2 {
                errs.push(format!("samples = {samples} must be at least 2"));
            }
            let graph_seeds = cli.graph_seeds.or(file.graph_seeds).unwrap_or(DEFAULT_GRAPH_SEEDS);
            if graph_seeds == 0 {
                errs.push("graph_seeds must be at least 1".into());
            }
            let sizes = file.sizes.clone().unwrap_or_else(|| vec![n]);
            match r.graph {
                GraphSource::Regular { .. } if sizes != [n] => {
                    errs.push("sizes other than graph.n need the density generator".into())
                }
                GraphSource::File { .. } if file.sizes.is_some() => {
                    errs.push("sizes cannot be used with a graph file".into())
                }
                _ => {}
            }
            if sizes.iter().any(|&s| s < 2) {
                errs.push("every size must be at least 2".into());
            }
            r.samples = Some(samples);
            if !matches!(r.graph, GraphSource::File { .. }) {
                r.graph_seeds = Some(graph_seeds);
                r.sizes = Some(sizes);
            }
        }
        Study::Prob | Study::Noise | Study::Trace => {
            let runs = cli.runs.or(file.runs).unwrap_or(DEFAULT_RUNS);
            if runs == 0 {
                errs.push("runs must be at least 1".into());
            }
            r.runs = Some(runs);
            r.schedules = if study == Study::Prob {
                file.schedules
                    .clone()
                    .unwrap_or_else(|| DEFAULT_RATES.iter().map(|&rate| ScheduleSpec::with_rate(rate)).collect())
            } else {
                vec![file.schedule.unwrap_or_default()]
            };
            if r.schedules.is_empty() {
                errs.push("schedules is empty".into());
            }
            for (i, s) in r.schedules.iter().enumerate() {
                if let Err(e) = s.resolve(1.0) {
                    errs.push(format!("schedule {i}: {e}"));
                }
            }
            if study == Study::Noise {
                r.levels = cli.levels.clone().or_else(|| file.levels.clone()).unwrap_or(DEFAULT_LEVELS.to_vec());
                if r.levels.is_empty() {
                    errs.push("levels is empty".into());
                }
                for l in &r.levels {
                    if !(*l >= 0.0 && l.is_finite()) {
                        errs.push(format!("noise level {l} must be >= 0"));
                    }
                }
            }
            if study != Study::Trace {
                let fixed = matches!(r.graph, GraphSource::File { .. });
                let batch = file.resample_batch.unwrap_or(if fixed { 0 } else { DEFAULT_RESAMPLE_BATCH });
                if batch > 0 {
                    r.resampling = Some(WeightResampling { batch_runs: batch, low: weight_low, high: weight_high });
                }
            }
        }
    }

    if errs.is_empty() {
        Ok(r)
    } else {
        Err(ConfigError(errs))
    }
}

fn default_ks(study: Study, n: usize) -> Vec<usize> {
    match study {
        Study::Rmse => (0..=n).collect(),
        Study::Prob => (1..=n).collect(),
        Study::Noise => vec![n],
        Study::Trace => {
            let mut ks: Vec<usize> = [n / 4, n / 2, 3 * n / 4, n].into_iter().filter(|&k| k > 0).collect();
            ks.dedup();
            ks
        }
    }
}
