use std::collections::HashMap;
use std::path::Path;

use causalcast::augment::{kernelsynth, sample_kernel, tsmixup};
use causalcast::chronoslite::{bands_csv, rolling_forecast, window_corpus, ForecastBundle};
use causalcast::citest::CiTest;
use causalcast::discovery::{discover as run_discovery, GraphMode};
use causalcast::evalstats;
use causalcast::panel::{
    aggregate_quarterly, parse_csv, standard_scale, AggregationMethod, Frequency, Period, TimeSeriesPanel,
};
use causalcast::seed::derive_seed;
use serde_json::{json, Value};

use crate::config::{AugmentMode, RunConfig};
use crate::output::Outputs;
use crate::CliError;

/// Tags a library error with the module it came from.
fn at(module: &'static str) -> impl Fn(causalcast::Error) -> CliError {
    move |e| {
        let e = CliError::from(e);
        CliError { message: format!("{module}: {}", e.message), ..e }
    }
}

fn utf8(bytes: Vec<u8>, path: &Path) -> Result<String, CliError> {
    String::from_utf8(bytes).map_err(|_| CliError::usage(format!("{} is not UTF-8 text", path.display())))
}

fn read_panel(out: &mut Outputs, path: &Path, cfg: &RunConfig) -> Result<TimeSeriesPanel, CliError> {
    let text = utf8(out.input(path)?, path)?;
    let date = cfg.date_column.as_deref();
    let panel = if cfg.aggregate {
        aggregate_quarterly(&parse_csv(&text, date, Frequency::Monthly).map_err(at("panel"))?, AggregationMethod::Mean)
            .map_err(at("panel"))?
    } else {
        parse_csv(&text, date, cfg.frequency).map_err(at("panel"))?
    };
    Ok(panel)
}

fn row_of(panel: &TimeSeriesPanel, label: &str) -> Result<usize, CliError> {
    let freq = panel.frequency().unwrap_or(Frequency::Quarterly);
    let p = Period::parse(label, freq).map_err(CliError::usage)?;
    panel.index().iter().position(|q| *q == p).ok_or_else(|| CliError::usage(format!("period {label} not in data")))
}

/// Data file, variable selection and span restriction.
fn load_panel(out: &mut Outputs, cfg: &RunConfig) -> Result<TimeSeriesPanel, CliError> {
    let path = cfg.data.as_ref().ok_or_else(|| CliError::usage("--data is required"))?;
    let mut panel = read_panel(out, path, cfg)?;
    if !cfg.variables.is_empty() {
        let names: Vec<&str> = cfg.variables.iter().map(String::as_str).collect();
        panel = panel.select(&names).map_err(at("panel"))?;
    }
    let start = cfg.start.as_deref().map(|s| row_of(&panel, s)).transpose()?.unwrap_or(0);
    let end = match cfg.end.as_deref() {
        Some(s) => row_of(&panel, s)? + 1,
        None => panel.len(),
    };
    panel.slice_rows(start, end).map_err(at("panel"))
}

fn complete(out: &mut Outputs, panel: TimeSeriesPanel) -> Result<TimeSeriesPanel, CliError> {
    if panel.is_fully_observed() {
        return Ok(panel);
    }
    let (p, (a, b)) = panel.complete_span().map_err(at("panel"))?;
    out.note(format!(
        "missing values: restricted to the longest complete span {}..{} ({} rows)",
        p.index()[0],
        p.index()[b - a - 1],
        b - a
    ));
    Ok(p)
}

fn parse_node(spec: &str, panel: &TimeSeriesPanel) -> Result<(usize, usize), CliError> {
    let (name, lag) = match spec.rsplit_once(':') {
        Some((n, l)) => (n, l.parse::<usize>().map_err(|_| CliError::usage(format!("bad lag in {spec:?}")))?),
        None => (spec, 0),
    };
    let var = panel.var_index(name).ok_or_else(|| CliError::usage(format!("unknown variable {name:?}")))?;
    Ok((var, lag))
}

pub fn citest(cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = Outputs::new(cfg, "citest")?;
    let panel = load_panel(&mut out, cfg)?;
    let panel = complete(&mut out, panel)?;
    let c = &cfg.citest;
    let x = parse_node(c.x.as_deref().ok_or_else(|| CliError::usage("--x is required"))?, &panel)?;
    let y = parse_node(c.y.as_deref().ok_or_else(|| CliError::usage("--y is required"))?, &panel)?;
    let z = c.z.iter().map(|s| parse_node(s, &panel)).collect::<Result<Vec<_>, _>>()?;
    let tau = z.iter().chain([&x, &y]).map(|n| n.1).max().unwrap_or(0);
    let t = panel.len();
    if t <= tau + 1 {
        return Err(CliError::usage(format!("{t} rows cannot cover lag {tau}")));
    }
    let series = |(v, lag): (usize, usize)| &panel.column(v)[tau - lag..t - lag];
    let zs: Vec<&[f64]> = z.iter().map(|n| series(*n)).collect();
    let test = CiTest::from_kind(c.test, c.n_perm);
    let result = test.run(series(x), series(y), &zs, derive_seed(cfg.seed, 0)).map_err(at("citest"))?;
    out.write_json(
        "citest.json",
        &json!({
            "x": c.x, "y": c.y, "z": c.z,
            "test": c.test,
            "result": result,
        }),
    )?;
    out.finish()
}

pub fn discover(cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = Outputs::new(cfg, "discover")?;
    let panel = load_panel(&mut out, cfg)?;
    let mut panel = complete(&mut out, panel)?;
    if cfg.scale {
        panel = standard_scale(&panel).map_err(at("panel"))?.0;
    }
    let graph = run_discovery(&panel, &cfg.discovery).map_err(at("discovery"))?;
    graph.check_invariants().map_err(at("discovery"))?;
    if graph.mode == GraphMode::LpcmciLite {
        out.note("mode lpcmci-lite: reduced LPCMCI variant (ancestor-restricted conditioning, collider orientation only, no tail marks)");
    }
    let mut value: Value =
        serde_json::from_str(&graph.to_json().map_err(at("discovery"))?).map_err(|e| CliError::usage(e.to_string()))?;
    if let Value::Object(m) = &mut value {
        m.insert("span".into(), json!([panel.index()[0].to_string(), panel.index()[panel.len() - 1].to_string()]));
    }
    out.write_json("graph.json", &value)?;
    let dot = format!("// config_hash={}\n{}", out.config_hash, graph.to_dot().map_err(at("discovery"))?);
    out.write_text("graph.dot", &dot)?;
    out.finish()
}

pub fn forecast(cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = Outputs::new(cfg, "forecast")?;
    let panel = load_panel(&mut out, cfg)?;
    let var = match (&cfg.forecast.var, panel.n_vars()) {
        (Some(v), _) => v.clone(),
        (None, 1) => panel.names()[0].clone(),
        (None, _) => return Err(CliError::usage("--var is required for multi-column data")),
    };
    let panel = complete(&mut out, panel.select(&[var.as_str()]).map_err(at("panel"))?)?;
    let labels: Vec<String> = panel.index().iter().map(|p| p.to_string()).collect();
    let f = &cfg.forecast;
    let mut model = f.model.clone();
    model.seed = cfg.seed;
    let mut corpus = Vec::new();
    if f.synthetic > 0 {
        let mut synth = Vec::with_capacity(f.synthetic);
        for i in 0..f.synthetic as u64 {
            let expr =
                sample_kernel(f.synthetic_max_terms, derive_seed(cfg.seed ^ 0x5eed, 2 * i)).map_err(at("augment"))?;
            synth.push(
                kernelsynth(f.synthetic_len, &expr, derive_seed(cfg.seed ^ 0x5eed, 2 * i + 1))
                    .map_err(at("augment"))?,
            );
        }
        corpus = window_corpus(&synth, &model).map_err(at("chronoslite"))?;
        out.note(format!("training corpus seeded with {} KernelSynth windows", corpus.len()));
    }
    let bundles = rolling_forecast(panel.column(0), Some(&labels), &model, &corpus).map_err(at("chronoslite"))?;
    out.write_json(
        "forecast.json",
        &json!({
            "var": var,
            "bundles": bundles.iter().map(ForecastBundle::to_json_value).collect::<Vec<_>>(),
        }),
    )?;
    let bands = format!("# config_hash={}\n{}", out.config_hash, bands_csv(&bundles).map_err(at("chronoslite"))?);
    out.write_text("bands.csv", &bands)?;
    out.finish()
}

fn parse_bundles(text: &str, path: &Path) -> Result<(Option<String>, Vec<ForecastBundle>), CliError> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| CliError::usage(format!("invalid bundle file {}: {e}", path.display())))?;
    let (var, list) = match v {
        Value::Array(a) => (None, a),
        Value::Object(mut m) if m.contains_key("bundles") => {
            let var = m.get("var").and_then(Value::as_str).map(str::to_string);
            match m.remove("bundles") {
                Some(Value::Array(a)) => (var, a),
                _ => return Err(CliError::usage("\"bundles\" must be an array")),
            }
        }
        obj @ Value::Object(_) => (None, vec![obj]),
        _ => return Err(CliError::usage(format!("{} holds no forecast bundles", path.display()))),
    };
    let bundles = list
        .into_iter()
        .map(ForecastBundle::from_json_value)
        .collect::<Result<Vec<_>, _>>()
        .map_err(at("chronoslite"))?;
    Ok((var, bundles))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn distribution_rows(d: &[evalstats::HorizonDistribution]) -> Vec<Vec<String>> {
    d.iter()
        .flat_map(|h| {
            h.values.iter().enumerate().map(move |(i, v)| vec![h.horizon.to_string(), i.to_string(), fmt(*v)])
        })
        .collect()
}

fn posterior_rows(p: &[evalstats::PosteriorSummary]) -> Vec<Vec<String>> {
    p.iter()
        .enumerate()
        .map(|(h, s)| {
            vec![
                (h + 1).to_string(),
                s.k.to_string(),
                s.n.to_string(),
                fmt(s.k as f64 / s.n.max(1) as f64),
                fmt(s.a),
                fmt(s.b),
                fmt(s.mean),
                fmt(s.lower),
                fmt(s.upper),
            ]
        })
        .collect()
}

const POSTERIOR_HEADER: [&str; 9] = ["horizon", "k", "n", "proportion", "a", "b", "mean", "lower", "upper"];

pub fn evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = Outputs::new(cfg, "evaluate")?;
    let e = &cfg.evaluation;
    if let Some(counts) = &e.counts {
        let n = e.n.ok_or_else(|| CliError::usage("--n is required with --counts"))?;
        if counts.is_empty() {
            return Err(CliError::usage("--counts is empty"));
        }
        let posteriors = counts
            .iter()
            .map(|k| evalstats::beta_posterior(*k, n))
            .collect::<Result<Vec<_>, _>>()
            .map_err(at("evalstats"))?;
        let k: usize = counts.iter().sum();
        let total = n * counts.len();
        let report = json!({
            "level": e.level,
            "proportions": counts.iter().map(|k| *k as f64 / n as f64).collect::<Vec<_>>(),
            "posteriors": posteriors,
            "pooled_posterior": evalstats::beta_posterior(k, total).map_err(at("evalstats"))?,
            "calibration": evalstats::binomial_calibration(total - k, total, 1.0 - e.level).map_err(at("evalstats"))?,
            "per_horizon_calibration": counts.iter()
                .map(|k| evalstats::binomial_calibration(n - k, n, 1.0 - e.level))
                .collect::<Result<Vec<_>, _>>()
                .map_err(at("evalstats"))?,
        });
        out.write_json("report.json", &report)?;
        out.write_csv("posteriors.csv", &POSTERIOR_HEADER, &posterior_rows(&posteriors))?;
        return out.finish();
    }

    let bpath = e.bundles.as_ref().ok_or_else(|| CliError::usage("--bundles (or --counts) is required"))?;
    let text = utf8(out.input(bpath)?, bpath)?;
    let (file_var, mut bundles) = parse_bundles(&text, bpath)?;
    if bundles.is_empty() {
        return Err(CliError::usage(format!("{} contains no forecast bundles", bpath.display())));
    }
    let apath = e.actuals.as_ref().or(cfg.data.as_ref()).ok_or_else(|| CliError::usage("--actuals is required"))?;
    let panel = read_panel(&mut out, apath, cfg)?;
    let var = match (e.var.clone().or(file_var), panel.n_vars()) {
        (Some(v), _) => v,
        (None, 1) => panel.names()[0].clone(),
        (None, _) => return Err(CliError::usage("--var is required for multi-column actuals")),
    };
    let actuals = panel.column_by_name(&var).map_err(at("panel"))?.to_vec();
    let rows: HashMap<String, usize> = panel.index().iter().enumerate().map(|(i, p)| (p.to_string(), i)).collect();
    for b in &mut bundles {
        b.origin_index = *rows.get(&b.origin).ok_or_else(|| {
            at("evalstats")(causalcast::Error::Alignment(format!("origin {} not found in actuals", b.origin)))
        })?;
    }
    let report = evalstats::evaluate(&actuals, &bundles, e.level, e.alpha).map_err(at("evalstats"))?;
    out.write_json("report.json", &report)?;
    let header = ["horizon", "origin", "value"];
    out.write_csv("errors.csv", &header, &distribution_rows(&report.errors))?;
    out.write_csv("widths.csv", &header, &distribution_rows(&report.widths))?;
    out.write_csv("posteriors.csv", &POSTERIOR_HEADER, &posterior_rows(&report.posteriors))?;
    let anomalies: Vec<Vec<String>> = report
        .anomalies
        .iter()
        .map(|a| {
            vec![
                a.origin.clone(),
                a.step.to_string(),
                panel.index()[a.index].to_string(),
                fmt(a.observed),
                fmt(a.lower_tail),
                fmt(a.upper_tail),
                fmt(a.tail_probability),
                a.flagged.to_string(),
            ]
        })
        .collect();
    out.write_csv(
        "anomalies.csv",
        &["origin", "step", "period", "observed", "lower_tail", "upper_tail", "tail_probability", "flagged"],
        &anomalies,
    )?;
    out.finish()
}

pub fn augment(cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = Outputs::new(cfg, "augment")?;
    let a = &cfg.augment;
    let mut series: Vec<Vec<f64>> = Vec::with_capacity(a.n);
    let mut meta: Vec<Value> = Vec::with_capacity(a.n);
    match a.mode {
        AugmentMode::Kernelsynth => {
            for i in 0..a.n as u64 {
                let expr = sample_kernel(a.max_terms, derive_seed(cfg.seed, 2 * i)).map_err(at("augment"))?;
                series.push(kernelsynth(a.length, &expr, derive_seed(cfg.seed, 2 * i + 1)).map_err(at("augment"))?);
                meta.push(json!({"kernel": expr, "description": expr.describe()}));
            }
        }
        AugmentMode::Tsmixup => {
            let path =
                cfg.data.as_ref().ok_or_else(|| CliError::usage("tsmixup needs --data with a pool of series"))?;
            let panel = read_panel(&mut out, path, cfg)?;
            let mut pool = Vec::new();
            for v in 0..panel.n_vars() {
                let col = panel.column(v);
                let (mut best, mut cur) = ((0, 0), 0);
                for (t, x) in col.iter().enumerate() {
                    cur = if x.is_finite() { cur + 1 } else { 0 };
                    if cur > best.1 - best.0 {
                        best = (t + 1 - cur, t + 1);
                    }
                }
                if best.1 > best.0 {
                    pool.push(col[best.0..best.1].to_vec());
                }
            }
            for i in 0..a.n as u64 {
                let m = tsmixup(&pool, &a.tsmixup, derive_seed(cfg.seed, i)).map_err(at("augment"))?;
                meta.push(json!({
                    "sources": m.sources.iter().map(|s| panel.names()[*s].clone()).collect::<Vec<_>>(),
                    "offsets": m.offsets,
                    "weights": m.weights,
                    "length": m.values.len(),
                }));
                series.push(m.values);
            }
        }
    }
    let len = series.iter().map(Vec::len).max().unwrap_or(0);
    let header: Vec<String> = (0..series.len()).map(|i| format!("series_{i}")).collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> =
        (0..len).map(|t| series.iter().map(|s| s.get(t).map(|v| fmt(*v)).unwrap_or_default()).collect()).collect();
    out.write_csv("augment.csv", &header_refs, &rows)?;
    out.write_json("augment.meta.json", &json!({"mode": a.mode, "series": meta}))?;
    out.finish()
}
