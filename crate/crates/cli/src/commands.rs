use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use phasefit_core::dataio::{
    format_dataset, parse_model, parse_report, plot_series, read_dataset_file, report_document, series_csv, CurveSeries,
    Dataset, GofDoc, GroupedDataset, ModelSpec, PlotRequest, ReportEntry, ZoneSpec,
};
use phasefit_core::fit::{
    em_fit_group, em_fit_point, fit_density, fit_ocp, scan_cut_points, sweep_states, FitMethod, FitOptions, FitResult,
    FittedModel, ParametricRefit,
};
use phasefit_core::gof::{gof_report, GoFReport, PValueMethod, Refit};
use phasefit_core::phd::StructureKind;
use phasefit_core::{Error, Lifetime};
use serde::Serialize;

use crate::args::*;
use crate::Failure;

type Outcome = Result<(), Failure>;

pub fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    match command {
        Command::Eval(a) => eval(a, stdout),
        Command::Fit(a) => fit(a, stdout),
        Command::FitOcp(a) => fit_ocp_cmd(a, stdout),
        Command::Sweep(a) => sweep(a, stdout),
        Command::Sample(a) => sample(a, stdout),
        Command::Gof(a) => gof(a, stdout),
        Command::Serve(a) => serve(a, stderr),
    }
}

fn emit(output: &Output, text: &str, stdout: &mut dyn Write) -> Outcome {
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => stdout.write_all(text.as_bytes()).map_err(Error::from)?,
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    Ok(std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?)
}

fn rows(text: &str) -> Result<Vec<Vec<f64>>, Failure> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Failure::usage(format!("bad matrix entry '{v}'"))))
                .collect()
        })
        .collect()
}

/// A fitted result when the document is a report, else just the model.
fn load_model(path: &Path, entry: usize) -> Result<(FittedModel, Option<FitResult>), Failure> {
    let text = read_text(path)?;
    if let Ok(entries) = parse_report(&text) {
        let n = entries.len();
        let e = entries.into_iter().nth(entry).ok_or_else(|| Failure::usage(format!("report has {n} entries")))?;
        return Ok((e.fit.model.clone(), Some(e.fit)));
    }
    Ok((parse_model(&text)?, None))
}

fn build_model(a: &ModelArgs) -> Result<FittedModel, Failure> {
    if let Some(path) = &a.model {
        return Ok(load_model(path, 0)?.0);
    }
    let structure = a.structure.ok_or_else(|| Failure::usage("--structure or --model is required"))?;
    let second = [a.rate2.is_some(), a.rates2.is_some(), a.branch2.is_some(), a.subgen2.is_some()];
    let zone2 = if second.iter().any(|&s| s) {
        Some(ZoneSpec {
            rate: a.rate2,
            rates: a.rates2.clone(),
            branch: a.branch2.clone(),
            subgen: a.subgen2.as_deref().map(rows).transpose()?,
        })
    } else {
        None
    };
    let spec = ModelSpec {
        structure,
        states: a.states,
        rate: a.rate,
        rates: a.rates.clone(),
        alpha: a.alpha.clone(),
        branch: a.branch.clone(),
        shapes: a.shapes.clone(),
        subgen: a.subgen.as_deref().map(rows).transpose()?,
        cut: a.cut,
        zone2,
    };
    Ok(spec.build()?)
}

/// One row per grid point; curves without a jump repeat their value on the
/// duplicated cut row.
fn wide_csv(series: &[CurveSeries]) -> String {
    let Some(master) = series.iter().max_by_key(|s| s.points.len()) else {
        return String::new();
    };
    let mut out = String::from("x");
    for s in series {
        let _ = write!(out, ",{}", s.curve);
    }
    out.push('\n');
    let mut cursor = vec![0usize; series.len()];
    for &(x, _) in &master.points {
        let _ = write!(out, "{x}");
        for (s, j) in series.iter().zip(cursor.iter_mut()) {
            let y = if *j < s.points.len() && s.points[*j].0 == x {
                *j += 1;
                s.points[*j - 1].1
            } else {
                s.points[j.saturating_sub(1)].1
            };
            match y {
                Some(y) => {
                    let _ = write!(out, ",{y}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

fn eval(a: EvalArgs, stdout: &mut dyn Write) -> Outcome {
    let model = build_model(&a.model)?;
    let horizon = match a.horizon {
        Some(h) => h,
        None => model.default_horizon()?,
    };
    let req = PlotRequest { horizon, points: a.points, curves: a.curves };
    let series = plot_series(&model, &req)?;
    let text = if series.len() == 1 { series_csv(&series[0]) } else { wide_csv(&series) };
    emit(&a.output, &text, stdout)
}

fn options(em: &EmArgs) -> Result<FitOptions, Failure> {
    let opts = FitOptions { max_iter: em.max_iter, rel_tol: em.rel_tol, restarts: em.restarts, seed: em.seed };
    opts.validate()?;
    Ok(opts)
}

fn pvalue(p: &PValueArgs, seed: u64) -> Result<PValueMethod, Failure> {
    match p.pvalue.as_str() {
        "asymptotic" => Ok(PValueMethod::Asymptotic),
        "bootstrap" => Ok(PValueMethod::Bootstrap { replicates: p.replicates, seed }),
        other => Err(Failure::usage(format!("unknown p-value method '{other}'"))),
    }
}

fn test_fit(data: &Dataset, fit: &FitResult, opts: FitOptions, method: PValueMethod) -> Result<GoFReport, Failure> {
    let refit = ParametricRefit { fit, opts };
    Ok(gof_report(data, &fit.model, method, Some(&refit))?)
}

fn need_input(input: &Option<std::path::PathBuf>, method: FitMethod) -> Result<Dataset, Failure> {
    let path = input.as_ref().ok_or_else(|| Failure::usage(format!("--input is required for method '{method}'")))?;
    Ok(read_dataset_file(path)?)
}

fn sturges(n: usize) -> usize {
    (n as f64).log2().ceil() as usize + 1
}

fn fit(a: FitArgs, stdout: &mut dyn Write) -> Outcome {
    let opts = options(&a.em)?;
    let method = pvalue(&a.pvalue, a.em.seed)?;
    let (result, data) = match a.method {
        FitMethod::Point => {
            let data = need_input(&a.input, a.method)?;
            (em_fit_point(&data, a.structure, a.states, &opts)?, Some(data))
        }
        FitMethod::Group => {
            let data = need_input(&a.input, a.method)?;
            let grouped = match (&a.edges, a.bins) {
                (Some(edges), _) => GroupedDataset::from_dataset(&data, edges.clone())?,
                (None, bins) => GroupedDataset::equal_width(&data, bins.unwrap_or_else(|| sturges(data.len())), data.max())?,
            };
            (em_fit_group(&grouped, a.structure, a.states, &opts)?, Some(data))
        }
        FitMethod::Density => {
            let target = a.target.ok_or_else(|| Failure::usage("--target is required for method 'density'"))?;
            let horizon = match a.target_horizon {
                Some(h) => h,
                None => target.default_horizon()?,
            };
            let fit = fit_density(&|x| target.pdf(x), horizon, a.nodes, a.structure, a.states, &opts)?;
            let data = a.input.as_ref().map(read_dataset_file).transpose()?;
            (fit, data)
        }
        FitMethod::OneCutPoint => return Err(Failure::usage("cut-point fits use the fit-ocp command")),
    };
    let gof = data.as_ref().map(|d| test_fit(d, &result, opts, method)).transpose()?;
    let doc = report_document(&[ReportEntry { fit: result, gof }])?;
    emit(&a.output, &doc, stdout)
}

fn fit_ocp_cmd(a: FitOcpArgs, stdout: &mut dyn Write) -> Outcome {
    let data = read_dataset_file(&a.input)?;
    let opts = options(&a.em)?;
    if a.scan {
        let rows = scan_cut_points(&data, a.states, a.cuts.as_deref(), &opts);
        let mut out = String::from("cut,rate1,rate2,loglik,aic,a2,p_value,error\n");
        for row in rows {
            match row.outcome {
                Ok(s) => {
                    let FittedModel::OneCutPoint(m) = &s.fit.model else { unreachable!("cut scans fit cut-point models") };
                    let (l1, l2) = (-m.t1()[(0, 0)], -m.t2()[(0, 0)]);
                    let _ = writeln!(
                        out,
                        "{},{l1},{l2},{},{},{},{},",
                        row.cut, s.fit.loglik, s.fit.aic, s.gof.a2, s.gof.p_value
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "{},,,,,,,{}", row.cut, csv_text(&e.to_string()));
                }
            }
        }
        return emit(&a.output, &out, stdout);
    }
    let method = pvalue(&a.pvalue, a.em.seed)?;
    let cut = a.cut.unwrap_or_else(|| (data.mean() * 100.0).round() / 100.0);
    let mut entries = Vec::new();
    if a.compare {
        let erlang = em_fit_point(&data, StructureKind::Erlang, a.states, &opts)?;
        let gof = test_fit(&data, &erlang, opts, method)?;
        entries.push(ReportEntry { fit: erlang, gof: Some(gof) });
    }
    let ocp = fit_ocp(&data, a.states, cut, &opts)?;
    let gof = test_fit(&data, &ocp, opts, method)?;
    entries.push(ReportEntry { fit: ocp, gof: Some(gof) });
    emit(&a.output, &report_document(&entries)?, stdout)
}

fn csv_text(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn state_range(s: &str) -> Result<std::ops::RangeInclusive<usize>, Failure> {
    let bad = || Failure::usage(format!("--states '{s}' is not M, LO..HI or LO-HI"));
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
    let (lo, hi) = match s.split_once("..").or_else(|| s.split_once('-')) {
        Some((lo, hi)) => (parse(lo)?, parse(hi.trim_start_matches('='))?),
        None => {
            let m = parse(s)?;
            (m, m)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

fn sweep(a: SweepArgs, stdout: &mut dyn Write) -> Outcome {
    let data = read_dataset_file(&a.input)?;
    let opts = options(&a.em)?;
    let rows = sweep_states(&data, &a.structures, state_range(&a.states)?, &opts)?;
    let mut out = String::from("structure,states,loglik,aic,n_params,iterations,converged,a2,p_value,error\n");
    for row in rows {
        match row.outcome {
            Ok(s) => {
                let f = &s.fit;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},",
                    row.structure, row.m, f.loglik, f.aic, f.n_params, f.iterations, f.converged, s.gof.a2, s.gof.p_value
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{},{},,,,,,,,{}", row.structure, row.m, csv_text(&e.to_string()));
            }
        }
    }
    emit(&a.output, &out, stdout)
}

fn sample(a: SampleArgs, stdout: &mut dyn Write) -> Outcome {
    if a.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let model = build_model(&a.model)?;
    let data = Dataset::new(model.sample(a.n, a.seed)?)?;
    emit(&a.output, &format_dataset(&data, &a.header), stdout)
}

#[derive(Serialize)]
struct GofFile {
    gof: GofDoc,
}

fn gof(a: GofArgs, stdout: &mut dyn Write) -> Outcome {
    let data = read_dataset_file(&a.input)?;
    let (model, fit) = load_model(&a.model, a.entry)?;
    let method = pvalue(&a.pvalue, a.seed)?;
    let report = match &fit {
        Some(fit) => {
            let opts = FitOptions { seed: fit.seed, ..FitOptions::default() };
            let refit = ParametricRefit { fit, opts };
            gof_report(&data, &model, method, Some(&refit as &dyn Refit))?
        }
        None => gof_report(&data, &model, method, None)?,
    };
    let text = toml::to_string(&GofFile { gof: GofDoc::from(&report) }).map_err(|e| Error::Format(e.to_string()))?;
    emit(&a.output, &text, stdout)
}

fn serve(a: ServeArgs, stderr: &mut dyn Write) -> Outcome {
    let config = phasefit_server::Config {
        bind: a.bind,
        port: a.port,
        capacity: a.capacity,
        max_upload: a.max_upload,
        cors_origin: a.cors_origin,
        ..phasefit_server::Config::default()
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure { code: crate::EXIT_NUMERIC, message: e.to_string() })?;
    runtime.block_on(async {
        let addr = std::net::SocketAddr::new(config.bind, config.port);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::usage(format!("cannot bind {addr}: {e}")))?;
        let _ = writeln!(stderr, "phasefit: listening on http://{}", listener.local_addr().unwrap_or(addr));
        phasefit_server::serve_on(listener, &config)
            .await
            .map_err(|e| Failure { code: crate::EXIT_NUMERIC, message: e.to_string() })
    })
}
