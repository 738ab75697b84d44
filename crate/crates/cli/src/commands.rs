use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gsim::experiments::{self, report, report::Provenance};
use gsim::ising::{brute_force_maxcut, cut_value};
use gsim::optics::{MacropixelConfig, NoiseMode, NoiseModel, DEFAULT_SPAN_SAMPLES};
use gsim::rng::derived_rng;
use gsim::spectral::eigendecompose;
use gsim::{anneal, Backend, Graph, GraphFormat, HrvEvaluator, Model, Schedule};
use serde_json::json;

use crate::config::{self, FileConfig, Overrides, Resolved, Study};
use crate::{BackendArg, DecomposeArgs, ExperimentArgs, GenArgs, NoiseModeArg, SolveArgs};

pub fn load_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let g = match GraphFormat::from_path(path) {
        GraphFormat::Json => Graph::from_json(&text),
        GraphFormat::Rudy => Graph::from_rudy(&text),
    };
    g.with_context(|| format!("parsing {}", path.display()))
}

pub enum Instance {
    Graph(Graph),
    Matrix(Model),
}

/// Graphs come as rudy or `{"n","edges"}` JSON; matrices as CSV or
/// `{"n","J"}` JSON.
pub fn load_instance(path: &Path) -> Result<Instance> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let ctx = || format!("parsing {}", path.display());
    Ok(match ext.as_str() {
        "csv" => Instance::Matrix(Model::from_csv(&text).with_context(ctx)?),
        "json" => {
            let v: serde_json::Value = serde_json::from_str(&text).map_err(gsim::Error::from).with_context(ctx)?;
            if v.get("edges").is_some() {
                Instance::Graph(Graph::from_json(&text).with_context(ctx)?)
            } else {
                Instance::Matrix(Model::from_json(&text).with_context(ctx)?)
            }
        }
        _ => Instance::Graph(Graph::from_rudy(&text).with_context(ctx)?),
    })
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn summary(
    command: &str,
    seed: Option<u64>,
    config: serde_json::Value,
    results: serde_json::Value,
) -> serde_json::Value {
    json!({
        "command": command,
        "seed": seed,
        "config_hash": report::config_hash(&config),
        "config": config,
        "results": results,
    })
}

pub fn gen(a: &GenArgs) -> Result<String> {
    let g = match (a.degree, a.density) {
        (Some(d), None) => Graph::gen_regular(a.n, d, a.low, a.high, a.seed)?,
        (None, Some(d)) => Graph::gen_density(a.n, d, a.low, a.high, a.seed)?,
        _ => unreachable!("clap enforces exactly one of --degree/--density"),
    };
    fs::create_dir_all(&a.out)?;
    let rudy = a.out.join(format!("{}.rudy", a.name));
    let json_path = a.out.join(format!("{}.json", a.name));
    g.write(&rudy, GraphFormat::Rudy)?;
    g.write(&json_path, GraphFormat::Json)?;
    let density = g.density()?;
    Ok(format!(
        "n {}\nedges {}\ndensity {density}\ntotal_weight {}\nwrote {}\nwrote {}\n",
        g.n(),
        g.edge_count(),
        g.total_weight(),
        rudy.display(),
        json_path.display()
    ))
}

pub fn decompose(a: &DecomposeArgs) -> Result<String> {
    let m = match load_instance(&a.input)? {
        Instance::Graph(g) => Model::from_graph(&g),
        Instance::Matrix(m) => m,
    };
    let b = eigendecompose(&m)?;
    let n = b.n();
    let mut out = format!("# n {n} sweeps {} frobenius {}\n", b.sweeps(), m.frobenius_norm());
    out.push_str("k index lambda sign error_ratio tail_frobenius\n");
    let mut rows = Vec::with_capacity(n);
    for (rank, &idx) in b.order().iter().enumerate() {
        let k = rank + 1;
        let lambda = b.lambda()[idx];
        let sign = b.signs()[idx].value::<f64>();
        let mu = b.error_ratio(k)?;
        let tail = b.tail_frobenius(k)?;
        let _ = writeln!(out, "{k} {idx} {lambda} {} {mu} {tail}", if sign > 0.0 { "+" } else { "-" });
        rows.push((k, idx, lambda, sign, mu, tail));
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        let mut w = csv_writer(&dir.join("spectrum.csv"))?;
        w.write_record(["k", "index", "lambda", "sign", "error_ratio", "tail_frobenius"])?;
        for (k, idx, lambda, sign, mu, tail) in &rows {
            w.write_record([
                k.to_string(),
                idx.to_string(),
                lambda.to_string(),
                sign.to_string(),
                mu.to_string(),
                tail.to_string(),
            ])?;
        }
        w.flush()?;
        fs::write(dir.join("eigen.json"), b.to_json() + "\n")?;
        let config = json!({ "input": a.input });
        let results = json!({ "n": n, "sweeps": b.sweeps(), "frobenius": m.frobenius_norm() });
        write_json(&dir.join("summary.json"), &summary("decompose", None, config, results))?;
    }
    Ok(out)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

pub fn solve(a: &SolveArgs) -> Result<String> {
    let g = match load_instance(&a.input)? {
        Instance::Graph(g) => g,
        Instance::Matrix(_) => bail!("solve needs a graph instance (rudy or edge-list JSON)"),
    };
    let n = g.n();
    if a.oracle && n > gsim::ising::BRUTE_FORCE_MAX_N {
        return Err(gsim::Error::SizeGuard { n, max: gsim::ising::BRUTE_FORCE_MAX_N }.into());
    }
    let k = a.k.unwrap_or(n);
    let bundle = eigendecompose(&Model::from_graph(&g))?;
    let ens = bundle.build_ensemble(k, a.p)?;
    let backend = match a.backend {
        BackendArg::Analytic => Backend::Analytic,
        BackendArg::Field => Backend::field(MacropixelConfig::for_spins(n, a.block)?),
    };
    let mut ev = HrvEvaluator::new(ens, backend)?;
    let span = ev.estimate_span(DEFAULT_SPAN_SAMPLES, &mut derived_rng(a.seed, "span", 0));
    if a.noise > 0.0 {
        let mode = match a.noise_mode {
            NoiseModeArg::PerHrv => NoiseMode::PerHrv,
            NoiseModeArg::PerFrame => NoiseMode::PerFrame,
        };
        ev = ev.with_noise(NoiseModel::from_span(a.noise, span, DEFAULT_SPAN_SAMPLES)?.with_mode(mode));
    }
    let s = Schedule::new(a.t0.unwrap_or(span), a.rate, a.iters, a.flip_floor)?;
    let trace = anneal(&ev, &g, &s, a.seed)?;
    let final_cut = cut_value(&g, &trace.final_state)?;

    let mut out = format!(
        "n {n}\nk {k}\nbackend {}\nt0 {}\nfinal_cut {final_cut}\nfinal_hrv {}\nstate {}\n",
        ev.backend().name(),
        s.t0,
        trace.final_hrv,
        trace.final_state
    );
    let mut oracle = serde_json::Value::Null;
    if a.oracle {
        let best = brute_force_maxcut(&g)?;
        let optimal = (final_cut - best.best_cut).abs() <= gsim::anneal::OPTIMUM_TOL;
        let _ = write!(out, "optimum {}\noptimum_state {}\noptimal {optimal}\n", best.best_cut, best.best_state);
        oracle = json!({ "optimum": best.best_cut, "state": best.best_state.to_string(), "optimal": optimal });
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        trace.write_csv(fs::File::create(dir.join("trace.csv"))?)?;
        let config = json!({
            "input": a.input,
            "k": k,
            "p": a.p,
            "backend": ev.backend().name(),
            "block": a.block,
            "noise": a.noise,
            "noise_mode": format!("{:?}", a.noise_mode),
            "t0": s.t0,
            "rate": s.rate,
            "iters": s.iters,
            "flip_floor": s.flip_floor,
            "oracle": a.oracle,
        });
        let results = json!({
            "final_cut": final_cut,
            "final_hrv": trace.final_hrv,
            "state": trace.final_state.to_string(),
            "span": span,
            "oracle": oracle,
        });
        write_json(&dir.join("summary.json"), &summary("solve", Some(a.seed), config, results))?;
    }
    Ok(out)
}

pub fn experiment(a: &ExperimentArgs) -> Result<String> {
    let file = match &a.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let cli = Overrides {
        seed: a.seed,
        ks: a.ks.clone(),
        runs: a.runs,
        levels: a.levels.clone(),
        samples: a.samples,
        graph_seeds: a.graph_seeds,
    };
    let r = config::resolve(a.study, &file, &cli)?;
    let echo = serde_json::to_value(&r)?;
    let prov = Provenance::new(a.study.name(), r.seed, echo);
    let files = match a.study {
        Study::Rmse => run_rmse(&r, &prov, &a.out)?,
        Study::Prob => {
            let g = r.load_graph()?;
            let t = experiments::probability_vs_k(&g, &r.ks, &r.schedules, r.runs.unwrap_or(1), r.seed, r.resampling)?;
            report::write_probability(&a.out, &t, &prov)?
        }
        Study::Noise => {
            let g = r.load_graph()?;
            let t = experiments::noise_sweep(
                &g,
                &r.ks,
                &r.levels,
                r.schedules[0],
                r.runs.unwrap_or(1),
                r.seed,
                r.resampling,
            )?;
            report::write_noise(&a.out, &t, &prov)?
        }
        Study::Trace => {
            let g = r.load_graph()?;
            let t = experiments::anneal_trace_study(&g, &r.ks, r.schedules[0], r.runs.unwrap_or(1), r.seed)?;
            report::write_trace(&a.out, &t, &prov)?
        }
    };
    let mut out = format!("study {}\nconfig_hash {}\n", a.study.name(), report::config_hash(&prov.config));
    for f in files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    Ok(out)
}

fn run_rmse(r: &Resolved, prov: &Provenance, out: &Path) -> Result<Vec<PathBuf>> {
    let g = r.load_graph()?;
    let samples = r.samples.unwrap_or(2);
    let mut files = Vec::new();
    let single = experiments::rmse_vs_k(&Model::from_graph(&g), &r.ks, samples, r.seed)?;
    files.extend(report::write_match(&out.join("match"), &single, prov)?);
    if let Some(sizes) = &r.sizes {
        let sweeps = sizes
            .iter()
            .map(|&n| {
                let spec = r.graph_spec(n).expect("sizes only resolve for generated graphs");
                let ks: Vec<usize> = if n == r.n { r.ks.clone() } else { (0..=n).collect() };
                Ok(experiments::rmse_sweep(
                    spec,
                    r.weight_low,
                    r.weight_high,
                    &ks,
                    r.graph_seeds.unwrap_or(1),
                    samples,
                    r.seed,
                )?)
            })
            .collect::<Result<Vec<_>>>()?;
        files.extend(report::write_sweeps(&out.join("sweep"), &sweeps, prov)?);
    }
    Ok(files)
}
