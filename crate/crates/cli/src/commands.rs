use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::json;

use curvitopo::geometry::{mpr, thin3d, Binarization, MprConfig};
use curvitopo::loss::{
    cldice_loss, gats_loss, grad_check, GradCheckConfig, LossFn, DEFAULT_CLDICE_ALPHA,
    DEFAULT_GATS_ALPHA,
};
use curvitopo::metrics::{evaluate, write_csv, EvalOptions, Metric, MetricReport};
use curvitopo::morphology::{
    difference_histogram, run_with_window, support_difference_histogram, Morphology, PoolKernel,
    PoolKind,
};
use curvitopo::phantom::{generate, standard_suite, PhantomSpec};
use curvitopo::volume::{read_volume, write_volume, Format};
use curvitopo::{Axis, Volume};

use crate::args::*;
use crate::Invalid;

fn invalid<T>(msg: String) -> Result<T> {
    Err(Invalid(msg).into())
}

fn format_of(path: &Path) -> Result<Format> {
    match Format::from_path(path) {
        Some(f) => Ok(f),
        None => invalid(format!("{}: expected a .npy or .raw file", path.display())),
    }
}

fn load(path: &Path) -> Result<Volume> {
    read_volume(path, format_of(path)?).with_context(|| format!("reading {}", path.display()))
}

fn save(v: &Volume, path: &Path) -> Result<()> {
    write_volume(v, path, format_of(path)?).with_context(|| format!("writing {}", path.display()))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn in_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        invalid(format!("--{name} must lie in [0, 1], got {v}"))
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .context("starting worker threads")?;
    match cli.command {
        Command::Skeletonize(a) => morph(a, Morphology::Skeletonize),
        Command::Smooth(a) => morph(a, Morphology::Smooth),
        Command::Mpr(a) => mpr_cmd(a),
        Command::Metrics(a) => metrics_cmd(a),
        Command::LossEval(a) => loss_cmd(a),
        Command::GradCheck(a) => grad_cmd(a),
        Command::Thin(a) => thin_cmd(a),
        Command::Phantom(a) => phantom_cmd(a),
    }
}

fn mpr_config(s: &SliceArgs) -> Result<MprConfig> {
    if s.n == 0 {
        return invalid("--n must be at least 1".into());
    }
    let axes = s
        .axes
        .iter()
        .map(|a| a.parse::<Axis>())
        .collect::<curvitopo::Result<Vec<_>>>()?;
    if axes.is_empty() {
        return invalid("--axes must name at least one axis".into());
    }
    in_unit("threshold", s.threshold)?;
    Ok(MprConfig {
        n: s.n,
        seed: s.seed,
        binarization: if s.otsu {
            Binarization::Otsu
        } else {
            Binarization::Fixed(s.threshold)
        },
        axes,
        ..MprConfig::default()
    })
}

fn morph(a: MorphArgs, morphology: Morphology) -> Result<ExitCode> {
    PoolKernel::new(PoolKind::Avg, a.window)?;
    let cfg = mpr_config(&a.slices)?;
    if a.histogram.is_some() && a.bins == 0 {
        return invalid("--bins must be at least 1".into());
    }
    format_of(&a.input)?;
    format_of(&a.out)?;

    let v = load(&a.input)?;
    let k = if a.auto_k {
        let r = mpr(&v, &cfg).context("estimating k")?;
        log::info!("mpr chose k = {}", r.k);
        r.k
    } else {
        a.k
    };
    let out = run_with_window(&v, k, morphology, a.window)?;
    save(&out, &a.out)?;
    if let Some(path) = &a.histogram {
        let hist = if a.support_only {
            support_difference_histogram(&v, &out, a.bins)?
        } else {
            difference_histogram(&v, &out, a.bins)?
        };
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["bin_start", "bin_end", "count"])?;
        for (i, c) in hist.iter().enumerate() {
            let lo = i as f64 / a.bins as f64;
            let hi = (i + 1) as f64 / a.bins as f64;
            w.write_record([lo.to_string(), hi.to_string(), c.to_string()])?;
        }
        w.flush()?;
    }
    print_json(&json!({ "k": k, "out": a.out }))?;
    Ok(ExitCode::SUCCESS)
}

fn mpr_cmd(a: MprArgs) -> Result<ExitCode> {
    let cfg = mpr_config(&a.slices)?;
    for p in &a.inputs {
        format_of(p)?;
    }
    let results: Vec<_> = a
        .inputs
        .par_iter()
        .map(|p| -> Result<_> {
            let v = load(p)?;
            mpr(&v, &cfg).with_context(|| format!("mpr on {}", p.display()))
        })
        .collect::<Result<_>>()?;
    if results.len() == 1 {
        print_json(&results[0])?;
    } else {
        print_json(&results)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn pair_name(p: &Path, g: &Path) -> String {
    let stem = |x: &Path| {
        x.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    format!("{}:{}", stem(p), stem(g))
}

fn metrics_cmd(a: MetricsArgs) -> Result<ExitCode> {
    if a.pred.len() != a.gt.len() {
        return invalid(format!(
            "{} predictions but {} ground truths",
            a.pred.len(),
            a.gt.len()
        ));
    }
    let metrics = a
        .metrics
        .iter()
        .map(|m| m.parse::<Metric>())
        .collect::<curvitopo::Result<Vec<_>>>()?;
    let opts = EvalOptions {
        k: a.k,
        rho: a.rho,
        threshold: a.threshold,
        metrics,
        normalize_betti: a.normalize_betti,
    };
    opts.validate()?;
    for p in a.pred.iter().chain(&a.gt) {
        format_of(p)?;
    }
    let pairs: Vec<(&PathBuf, &PathBuf)> = a.pred.iter().zip(&a.gt).collect();
    let reports: Vec<MetricReport> = pairs
        .par_iter()
        .map(|(p, g)| -> Result<MetricReport> {
            let (pv, gv) = (load(p)?, load(g)?);
            let mut r =
                evaluate(&pv, &gv, &opts).with_context(|| format!("scoring {}", p.display()))?;
            r.pair = pair_name(p, g);
            Ok(r)
        })
        .collect::<Result<_>>()?;

    let mut sink: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("writing {}", path.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    match a.format {
        ReportFormat::Csv => write_csv(&reports, &mut sink)?,
        ReportFormat::Json => {
            if reports.len() == 1 {
                serde_json::to_writer_pretty(&mut sink, &reports[0])?;
            } else {
                serde_json::to_writer_pretty(&mut sink, &reports)?;
            }
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn loss_cmd(a: LossArgs) -> Result<ExitCode> {
    let alpha = a.alpha.unwrap_or(match a.loss {
        LossName::Gats => DEFAULT_GATS_ALPHA,
        LossName::Cldice => DEFAULT_CLDICE_ALPHA,
    });
    in_unit("alpha", alpha)?;
    for p in [&a.pred, &a.gt].into_iter().chain(a.gradient_out.as_ref()) {
        format_of(p)?;
    }
    let (p, g) = (load(&a.pred)?, load(&a.gt)?);
    let l = match a.loss {
        LossName::Gats => gats_loss(&p, &g, alpha, a.k)?,
        LossName::Cldice => cldice_loss(&p, &g, alpha, a.k)?,
    };
    if let Some(path) = &a.gradient_out {
        save(&l.gradient, path)?;
    }
    let name = match a.loss {
        LossName::Gats => "gats",
        LossName::Cldice => "cldice",
    };
    print_json(
        &json!({ "loss": name, "alpha": alpha, "k": a.k, "value": l.value, "flags": l.flags }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn grad_cmd(a: GradCheckArgs) -> Result<ExitCode> {
    let loss: LossFn = a.loss.parse()?;
    in_unit("alpha", a.alpha)?;
    if !(a.step > 0.0 && a.step.is_finite()) {
        return invalid(format!("--step must be positive, got {}", a.step));
    }
    if let Some(n) = a.sample {
        if n < 64 {
            return invalid(format!("--sample needs at least 64 coordinates, got {n}"));
        }
    }
    format_of(&a.pred)?;
    format_of(&a.gt)?;
    let (p, g) = (load(&a.pred)?, load(&a.gt)?);
    let cfg = GradCheckConfig {
        step: a.step,
        alpha: a.alpha,
        k: a.k,
        tolerance: a.tolerance,
        min_grad: a.min_grad,
        sample: a.sample,
        seed: a.seed,
        ..GradCheckConfig::default()
    };
    let report = grad_check(loss, &p, &g, &cfg)?;
    print_json(&report)?;
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "{} of {} coordinates exceed relative error {}",
            report.violations.len(),
            report.checked,
            a.tolerance
        );
        Ok(ExitCode::from(1))
    }
}

fn thin_cmd(a: ThinArgs) -> Result<ExitCode> {
    in_unit("threshold", a.threshold)?;
    format_of(&a.input)?;
    format_of(&a.out)?;
    let v = load(&a.input)?;
    let t = thin3d(&v.threshold(a.threshold))?;
    save(&t.to_volume(), &a.out)?;
    print_json(&json!({ "voxels": t.count(), "out": a.out }))?;
    Ok(ExitCode::SUCCESS)
}

fn phantom_cmd(a: PhantomArgs) -> Result<ExitCode> {
    let suite = standard_suite();
    if a.list {
        for (name, _) in &suite {
            println!("{name}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    let spec: PhantomSpec = match (&a.spec, &a.suite) {
        (_, Some(name)) => match suite.into_iter().find(|(n, _)| n == name) {
            Some((_, s)) => s,
            None => return invalid(format!("no built-in phantom named `{name}`")),
        },
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| Invalid(format!("{}: {e}", path.display())))?
        }
        (None, None) => bail!("one of --spec or --suite is required"),
    };
    let out = a.out.as_ref().expect("clap requires --out");
    format_of(out)?;
    if let Some(c) = &a.centerline_out {
        format_of(c)?;
    }
    let (v, truth) = generate(&spec, a.seed)?;
    save(&v, out)?;
    if let Some(c) = &a.centerline_out {
        save(&truth.centerline.to_volume(), c)?;
    }
    print_json(&json!({
        "spec": spec,
        "betti": truth.betti,
        "max_radius": truth.max_radius,
        "centerline_voxels": truth.centerline.count(),
    }))?;
    Ok(ExitCode::SUCCESS)
}
