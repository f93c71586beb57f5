use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use multilad::baselines::{activity_detect, aggregate_scores, AggregationMode};
use multilad::detector::{resolve_k, score_signatures, view_signatures};
use multilad::evaluation::{
    bench_family, format_table, hits_at_n, parse_truth, run_trials, write_reports_csv,
    write_truth, BenchOptions,
};
use multilad::generators::{generate_experiment, ExperimentFile};
use multilad::graph::{header_for, parse_edge_stream_with_header, write_edge_stream};
use multilad::multiview::{multilad_spectra, score_aggregated, write_spectrum_csv};
use multilad::{
    lad_detect, AnomalyScoreSeries, DetectorConfig, Error, LaplacianKind, PowerMeanConfig,
    SignatureSize, SolverOptions,
};

use crate::manifest::ManifestBuilder;
use crate::{BenchArgs, DetectArgs, EvalArgs, GenerateArgs, LaplacianArg, MethodArg};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_SOLVER: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_IO,
            Error::Convergence { .. } | Error::DenseLimit { .. } => EXIT_SOLVER,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn in_file(path: &Path, e: Error) -> CliError {
    let mut err = CliError::from(e);
    err.message = format!("{}: {}", path.display(), err.message);
    err
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

/// Creates `path`, runs `body` on a buffered writer and flushes.
fn write_file<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let io_err = |e: std::io::Error| CliError::io(format!("cannot write {}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    body(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// `dir/stem<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn report_manifest(path: &Path) {
    log::info!("manifest written to {}", path.display());
}

pub fn generate(a: &GenerateArgs, argv: &[String], jobs: Option<usize>) -> Result<(), CliError> {
    let text = read(&a.config)?;
    let file = ExperimentFile::parse(&text).map_err(|e| in_file(&a.config, e))?;
    let (schedule, mut cfg) = file.resolve().map_err(|e| in_file(&a.config, e))?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let (g, truth) = generate_experiment(&schedule, &cfg)?;
    let truth_path = a.truth.clone().unwrap_or_else(|| sibling(&a.out, ".truth.csv"));

    let mut m = ManifestBuilder::new("generate", argv, cfg.seed, jobs);
    m.config(&a.config);
    m.param("steps", g.num_steps());
    m.param("views", g.num_views());
    m.param("nodes", cfg.n_nodes);
    m.param("continuity", cfg.continuity);
    m.param("noise", cfg.noise);

    write_file(&a.out, |w| write_edge_stream(&g, &header_for(&g, true), w))?;
    m.output(&a.out);
    write_file(&truth_path, |w| write_truth(&truth, w))?;
    m.output(&truth_path);
    report_manifest(&m.finish(&a.out)?);
    Ok(())
}

pub fn detect(a: &DetectArgs, argv: &[String], jobs: Option<usize>) -> Result<(), CliError> {
    if a.p.is_some() && a.method != MethodArg::Multilad {
        return Err(CliError::usage("--p only applies to --method multilad"));
    }
    if a.dump_spectrum.is_some() && !matches!(a.method, MethodArg::Lad | MethodArg::Multilad) {
        return Err(CliError::usage("--dump-spectrum only applies to lad and multilad"));
    }
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(CliError::usage("--tol must be a positive number"));
    }
    let text = read(&a.input)?;
    let (g, header) =
        parse_edge_stream_with_header(&text, a.nodes).map_err(|e| in_file(&a.input, e))?;
    let synthetic = header.synthetic;
    let window = |given: Option<usize>, default: usize, flag: &str| {
        given.or(synthetic.then_some(default)).ok_or_else(|| {
            CliError::usage(format!("{flag} is required for inputs not produced by `generate`"))
        })
    };
    let ws = window(a.ws, 5, "--ws")?;
    let wl = window(a.wl, 10, "--wl")?;
    let k = a.k.unwrap_or(if synthetic {
        SignatureSize::Full
    } else {
        SignatureSize::Top(6)
    });
    let laplacian = match a.laplacian {
        LaplacianArg::Unnormalized => LaplacianKind::Unnormalized,
        LaplacianArg::Normalized => LaplacianKind::Normalized,
    };
    let det = DetectorConfig {
        short_window: ws,
        long_window: wl,
        k,
        laplacian,
        solver: SolverOptions {
            tol: a.tol,
            seed: a.seed,
            ..SolverOptions::default()
        },
        shift: 0.0,
    };
    det.validate()?;
    if matches!(a.method, MethodArg::Lad | MethodArg::Activity) && a.view >= g.num_views() {
        return Err(CliError::usage(format!(
            "--view {} out of range; input has {} view(s)",
            a.view,
            g.num_views()
        )));
    }

    let mut m = ManifestBuilder::new("detect", argv, a.seed, jobs);
    m.param("method", format!("{:?}", a.method).to_lowercase());
    m.param("ws", ws);
    m.param("wl", wl);
    m.param(
        "k",
        match k {
            SignatureSize::Full => "full".to_string(),
            SignatureSize::Top(k) => k.to_string(),
        },
    );
    m.param("tol", a.tol);
    m.param("steps", g.num_steps());
    m.param("views", g.num_views());

    let (scores, spectra) = match a.method {
        MethodArg::Lad => {
            let view = g.view(a.view);
            let k = resolve_k(det.k, view)?;
            let sigs = view_signatures(view, laplacian, k, &det.solver)?;
            m.param("laplacian", format!("{laplacian:?}").to_lowercase());
            m.param("view", a.view);
            (score_signatures(&sigs, &det)?, Some(sigs))
        }
        MethodArg::Multilad => {
            let p = a.p.unwrap_or(-10.0);
            let pm = PowerMeanConfig::new(p)?;
            if g.num_steps() <= wl {
                return Err(CliError::usage(format!(
                    "need more than {wl} steps, got {}",
                    g.num_steps()
                )));
            }
            let merged = multilad_spectra(&g, &det, &pm)?;
            m.param("p", p);
            m.param("epsilon", pm.epsilon);
            (score_aggregated(&merged, &det)?, Some(merged))
        }
        MethodArg::Activity => {
            m.param("view", a.view);
            (activity_detect(g.view(a.view), ws, &det.solver)?, None)
        }
        MethodArg::Maxlad | MethodArg::Meanlad => {
            let mode = if a.method == MethodArg::Maxlad {
                AggregationMode::Max
            } else {
                AggregationMode::Mean
            };
            let per_view = g
                .views()
                .par_iter()
                .map(|v| lad_detect(v, &det))
                .collect::<multilad::Result<Vec<AnomalyScoreSeries>>>()?;
            m.param("laplacian", format!("{laplacian:?}").to_lowercase());
            (aggregate_scores(&per_view, mode)?, None)
        }
    };

    write_file(&a.out, |w| scores.write_csv(w))?;
    m.output(&a.out);
    if let (Some(path), Some(spectra)) = (&a.dump_spectrum, &spectra) {
        write_file(path, |w| write_spectrum_csv(spectra, w))?;
        m.output(path);
    }
    report_manifest(&m.finish(&a.out)?);
    Ok(())
}

pub fn eval(a: &EvalArgs, argv: &[String], jobs: Option<usize>) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::usage("-n must be at least 1"));
    }
    let scores =
        AnomalyScoreSeries::parse_csv(&read(&a.scores)?).map_err(|e| in_file(&a.scores, e))?;
    let truth = parse_truth(&read(&a.truth)?).map_err(|e| in_file(&a.truth, e))?;
    let mut times: Vec<usize> = truth.iter().map(|&(t, _)| t).collect();
    times.sort_unstable();
    times.dedup();
    if let Some(&late) = times.iter().find(|&&t| t >= scores.len()) {
        return Err(CliError::usage(format!(
            "truth step {late} is outside the {} scored steps; files are misaligned",
            scores.len()
        )));
    }
    let hits = hits_at_n(&scores, &times, a.n)?;
    let top = scores.top_n(a.n);
    let join = |v: &[usize], sep: &str| {
        v.iter().map(usize::to_string).collect::<Vec<_>>().join(sep)
    };
    println!("Hits@{} = {hits:.3}", a.n);
    println!("top-{}: {}", a.n, join(&top, " "));

    let out = a.out.clone().unwrap_or_else(|| sibling(&a.scores, ".hits.csv"));
    let mut m = ManifestBuilder::new("eval", argv, 0, jobs);
    m.param("n", a.n);
    m.param("steps", scores.len());
    m.param("hits", hits);
    write_file(&out, |w| {
        writeln!(w, "n,hits,top,truth")?;
        writeln!(w, "{},{hits},{},{}", a.n, join(&top, ";"), join(&times, ";"))
    })?;
    m.output(&out);
    report_manifest(&m.finish(&out)?);
    Ok(())
}

pub fn bench(a: &BenchArgs, argv: &[String], jobs: Option<usize>) -> Result<(), CliError> {
    if a.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let opts = BenchOptions {
        c_out: a.c_out,
        noise: a.noise,
        views: a.views,
        p: a.p,
    };
    let families = bench_family(&a.experiment, &opts)?;
    let mut reports = Vec::new();
    for (exp, methods) in &families {
        log::info!("{}: {} methods, {} trials", exp.id, methods.len(), a.trials);
        reports.extend(run_trials(exp, methods, a.trials, a.seed)?);
    }
    print!("{}", format_table(&reports));

    let out = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("bench-{}.csv", a.experiment)));
    let mut m = ManifestBuilder::new("bench", argv, a.seed, jobs);
    m.param("experiment", &a.experiment);
    m.param("trials", a.trials);
    write_file(&out, |w| write_reports_csv(&reports, w))?;
    m.output(&out);
    report_manifest(&m.finish(&out)?);
    Ok(())
}
