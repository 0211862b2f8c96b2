use std::io::Write as _;
use std::path::{Path, PathBuf};

use profilekit::negset::{self, AccuracyScale, FilterMask, NegSetManifest, PoolScoring};
use profilekit::profile::DEFAULT_TRUNCATE;
use profilekit::similarity::{self, DistributionMetric, MetricKind, ProfileFamily};
use profilekit::theory::bayes::{self, MonteCarlo};
use profilekit::theory::manifold::{self, scaling_sweep, unit_grid};
use profilekit::theory::{self, GpModel, Kernel, ManifoldModel, PropertyReport, Rbf, SkillModel, Witness};
use profilekit::{
    load_log, merge_runs, AccuracyGrid, Profiler, RunCollection, Smoothing, TaxonomyConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::*;
use crate::error::{core, CliError};
use crate::plot::{emit_svg, PlotKind, PlotSpec, Table};

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { log } => validate(&log),
        Command::Profile(a) => profile(a),
        Command::Taxonomy(a) => taxonomy(a),
        Command::Distance(a) => distance(a),
        Command::Gap(a) => gap(a),
        Command::Negset(a) => negset_cmd(a),
        Command::NegsetEval(a) => negset_eval(a),
        Command::Theory { model } => theory_cmd(model),
        Command::Plot(a) => plot(a),
    }
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn emit_json(path: Option<&Path>, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    emit(path, &text)
}

fn load_collection(paths: &[PathBuf]) -> Result<RunCollection, CliError> {
    let logs = paths.iter().map(load_log).collect::<Result<Vec<_>, _>>().map_err(core)?;
    merge_runs(logs).map_err(core)
}

fn load_optional(paths: &[PathBuf]) -> Result<Option<RunCollection>, CliError> {
    if paths.is_empty() {
        Ok(None)
    } else {
        load_collection(paths).map(Some)
    }
}

fn smoothing(g: &GridArgs) -> Result<Smoothing, CliError> {
    if g.raw {
        return Ok(Smoothing::none());
    }
    if !(g.sigma >= 0.0) || !g.sigma.is_finite() {
        return Err(CliError::Usage(format!("--sigma must be non-negative, got {}", g.sigma)));
    }
    Ok(Smoothing {
        sigma: g.sigma,
        truncate: DEFAULT_TRUNCATE,
    })
}

fn profiler<'a>(
    runs: &'a RunCollection,
    reference: Option<&RunCollection>,
    g: &GridArgs,
) -> Result<Profiler<'a>, CliError> {
    let base = match reference {
        Some(r) => Profiler::with_reference(runs, r),
        None => Profiler::new(runs),
    }
    .map_err(core)?;
    let grid = AccuracyGrid::covering(base.axes(), g.grid_len).map_err(core)?;
    Ok(base.with_grid(grid).map_err(core)?.with_smoothing(smoothing(g)?))
}

fn validate(path: &Path) -> Result<(), CliError> {
    let log = load_log(path).map_err(core)?;
    emit_json(
        None,
        &json!({
            "run_id": log.run_id(),
            "num_points": log.num_points(),
            "num_classes": log.num_classes(),
            "num_checkpoints": log.checkpoints().len(),
            "resources": log.checkpoints().iter().map(|c| c.resource()).collect::<Vec<_>>(),
            "global_accuracies": log.global_accuracies(),
        }),
    )
}

fn profile(a: ProfileArgs) -> Result<(), CliError> {
    let runs = load_collection(&a.logs)?;
    let reference = load_optional(&a.reference)?;
    let p = profiler(&runs, reference.as_ref(), &a.grid)?;
    let csv = match a.kind {
        KindArg::Acc => p.accuracy(a.point).map_err(core)?.to_csv(),
        KindArg::Softmax => p.softmax(a.point).map_err(core)?.to_csv(),
        KindArg::Softacc => p.soft_accuracy(a.point).map_err(core)?.to_csv(),
        KindArg::Entropy => {
            let h = p.entropy(a.point).map_err(core)?;
            if a.negate { h.negated() } else { h }.to_csv()
        }
    };
    emit(a.out.as_deref(), &csv)
}

fn taxonomy(a: TaxonomyArgs) -> Result<(), CliError> {
    let cfg = TaxonomyConfig::new(a.threshold).map_err(|e| CliError::Usage(e.to_string()))?;
    let runs = load_collection(&a.logs)?;
    let reference = load_optional(&a.reference)?;
    let p = profiler(&runs, reference.as_ref(), &a.grid)?;
    let d = profilekit::decompose(&p, &cfg).map_err(core)?;
    if let Some(path) = &a.summary {
        emit_json(Some(path), &d.summary_json())?;
    }
    emit(a.out.as_deref(), &d.to_csv())
}

fn distance(a: DistanceArgs) -> Result<(), CliError> {
    let mut specs: Vec<(String, Vec<PathBuf>)> = Vec::new();
    if !a.a.is_empty() {
        specs.push(("a".into(), a.a.clone()));
    }
    if !a.b.is_empty() {
        specs.push(("b".into(), a.b.clone()));
    }
    for f in &a.families {
        let (name, dirs) = f
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--family expects NAME=DIR[,DIR...], got `{f}`")))?;
        specs.push((name.to_string(), dirs.split(',').map(PathBuf::from).collect()));
    }
    if specs.len() < 2 {
        return Err(CliError::Usage("distance needs at least two families (--a, --b or --family)".into()));
    }
    let collections = specs
        .iter()
        .map(|(_, dirs)| load_collection(dirs))
        .collect::<Result<Vec<_>, _>>()?;
    let base: Vec<Profiler<'_>> = collections
        .iter()
        .map(|c| Profiler::new(c).map_err(core))
        .collect::<Result<_, _>>()?;
    let axes: Vec<Vec<f64>> = base.iter().flat_map(|p| p.axes().iter().cloned()).collect();
    let grid = AccuracyGrid::covering(&axes, a.grid.grid_len).map_err(core)?;
    let smooth = smoothing(&a.grid)?;
    let families = base
        .into_iter()
        .zip(&specs)
        .map(|(p, (name, _))| {
            let p = p.with_grid(grid.clone()).map_err(core)?.with_smoothing(smooth);
            ProfileFamily::from_profiler(name.clone(), &p, a.points.as_deref()).map_err(core)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let metric = DistributionMetric::new(match a.metric {
        MetricArg::Tv => MetricKind::Tv,
        MetricArg::Kl => MetricKind::Kl,
        MetricArg::Cosine => MetricKind::Cosine,
    });
    let matrix = similarity::pairwise_matrix(&families, &metric).map_err(core)?;
    let csv = matrix.to_csv();
    if let Some(path) = &a.svg {
        write_svg(path, PlotKind::Heatmap, &csv)?;
    }
    emit(a.out.as_deref(), &csv)
}

fn write_svg(path: &Path, kind: PlotKind, csv: &str) -> Result<(), CliError> {
    let svg = emit_svg(&PlotSpec::new(kind), &Table::parse(csv)?)?;
    std::fs::write(path, svg).map_err(|e| CliError::io(path, e))
}

fn gap(a: GapArgs) -> Result<(), CliError> {
    let ca = load_collection(&a.a)?;
    let cb = load_collection(&a.b)?;
    let pa = Profiler::new(&ca).map_err(core)?;
    let pb = Profiler::new(&cb).map_err(core)?;
    let axes: Vec<Vec<f64>> = pa.axes().iter().chain(pb.axes()).cloned().collect();
    let grid = AccuracyGrid::covering(&axes, a.grid.grid_len).map_err(core)?;
    let smooth = smoothing(&a.grid)?;
    let pa = pa.with_grid(grid.clone()).map_err(core)?.with_smoothing(smooth);
    let pb = pb.with_grid(grid).map_err(core)?.with_smoothing(smooth);
    let curve = similarity::pointwise_gap_with(&pa, &pb).map_err(core)?;
    emit(a.out.as_deref(), &curve.to_csv())
}

fn negset_cmd(a: NegsetArgs) -> Result<(), CliError> {
    if a.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let pool = load_collection(&a.pool)?;
    let reference = load_collection(&a.reference)?;
    let p = profiler(&pool, Some(&reference), &a.grid)?;
    let mode = if a.per_run { PoolScoring::PerRun } else { PoolScoring::Pooled };
    let scores = negset::score_pool(&p, mode).map_err(core)?;
    let mask = match &a.filter {
        Some(path) => FilterMask::load(path, pool.num_points()).map_err(core)?,
        None => FilterMask::all("none", pool.num_points()),
    };
    let cands = negset::candidates(&scores, pool.labels(), &mask).map_err(core)?;
    let mut manifest = negset::build_negset(&cands, pool.num_classes(), a.k, mask.name.clone()).map_err(core)?;
    if let Some(prov) = a.provenance {
        manifest = manifest.with_provenance(prov);
    }
    emit_json(
        a.out.as_deref(),
        &serde_json::to_value(&manifest).expect("manifest serializes"),
    )
}

fn negset_eval(a: NegsetEvalArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.manifest).map_err(|e| CliError::io(&a.manifest, e))?;
    let manifest: NegSetManifest =
        serde_json::from_str(&text).map_err(|e| CliError::io(&a.manifest, format!("invalid manifest: {e}")))?;
    let runs = load_collection(&a.logs)?;
    let reference = load_collection(&a.reference)?;
    let scale = if a.probit { AccuracyScale::Probit } else { AccuracyScale::Raw };
    let report = negset::evaluate_correlation(&manifest, &runs, &reference, scale).map_err(core)?;
    let csv = report.to_csv();
    if let Some(path) = &a.csv {
        emit(Some(path), &csv)?;
    }
    if let Some(path) = &a.svg {
        write_svg(path, PlotKind::Scatter, &csv)?;
    }
    emit_json(a.out.as_deref(), &report.summary_json())
}

fn report_value(r: &PropertyReport) -> serde_json::Value {
    serde_json::to_value(r).expect("reports serialize")
}

fn theory_cmd(model: TheoryCommand) -> Result<(), CliError> {
    match model {
        TheoryCommand::Skill {
            skills,
            points,
            range,
            seed,
            out,
        } => {
            if !(range > 0.0) || !range.is_finite() {
                return Err(CliError::Usage(format!("--range must be positive, got {range}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = SkillModel::random(&mut rng, skills, points, range);
            let table = m.accuracy_table();
            let universality = theory::check_universality(&table);
            let monotone = theory::check_accuracy_monotonicity(&table, &m.skill_order()).map_err(core)?;
            emit_json(
                out.as_deref(),
                &json!({
                    "seed": seed,
                    "reports": [report_value(&universality), report_value(&monotone)],
                }),
            )
        }
        TheoryCommand::Manifold {
            dim,
            target,
            cells,
            eval_per_axis,
            out,
            csv,
        } => {
            if dim == 0 || dim > 6 {
                return Err(CliError::Usage(format!("--dim must be between 1 and 6, got {dim}")));
            }
            let root_d = (dim as f64).sqrt();
            let model = match target {
                TargetArg::Sine => {
                    ManifoldModel::new(dim, 3.0 * root_d, 1, |x: &[f64]| x.iter().map(|v| (3.0 * v).sin()).sum())
                }
                TargetArg::Linear => ManifoldModel::new(dim, root_d, 1, |x: &[f64]| x.iter().sum()),
            }
            .map_err(core)?;
            let per_axis = eval_per_axis.unwrap_or(match dim {
                1 => 4097,
                2 => 257,
                3 => 33,
                _ => 9,
            });
            if per_axis < 2 {
                return Err(CliError::Usage("--eval-per-axis must be at least 2".into()));
            }
            let points = unit_grid(dim, per_axis);
            let sweep = scaling_sweep(&model, &cells, &points).map_err(core)?;
            let mut bound_reports = Vec::new();
            let mut rows = String::from("n,max_error,bound\n");
            for (&c, &(n, max)) in cells.iter().zip(&sweep) {
                let m = model.with_cells(c).map_err(core)?;
                bound_reports.push(report_value(&manifold::check_error_bound(&m, &points).map_err(core)?));
                rows.push_str(&format!("{n},{max},{}\n", m.error_bound()));
            }
            let fit = theory::fit_scaling(&sweep).map_err(core)?;
            if let Some(path) = &csv {
                emit(Some(path), &rows)?;
            }
            emit_json(
                out.as_deref(),
                &json!({
                    "dim": dim,
                    "cells_per_axis": cells,
                    "sweep": sweep.iter().map(|&(n, e)| json!({"n": n, "max_error": e})).collect::<Vec<_>>(),
                    "fit": fit,
                    "expected_exponent": 1.0 / dim as f64,
                    "reports": bound_reports,
                }),
            )
        }
        TheoryCommand::Bayes {
            labels,
            observations,
            horizon,
            models,
            mc_samples,
            seed,
            out,
            csv,
        } => {
            if labels == 0 || observations == 0 || models == 0 || mc_samples < 2 {
                return Err(CliError::Usage(
                    "--labels, --observations and --models must be positive and --mc-samples at least 2".into(),
                ));
            }
            let fits = observations
                .checked_pow(horizon as u32)
                .and_then(|s| s.checked_mul(labels))
                .is_some_and(|s| s <= 1 << 22);
            if !fits {
                return Err(CliError::Usage("joint table too large; lower --horizon or --observations".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut reports = Vec::new();
            let mut first_csv = None;
            for i in 0..models {
                let m = bayes::DiscreteBayesModel::random(&mut rng, labels, observations, horizon);
                let curves = bayes::bayes_expected_curves_with(
                    &m,
                    horizon,
                    MonteCarlo {
                        samples: mc_samples,
                        seed: seed.wrapping_add(i as u64),
                    },
                )
                .map_err(core)?;
                if i == 0 {
                    first_csv = Some(curves.to_csv());
                }
                let mut v = report_value(&curves.check_lemma());
                v["estimate"] = serde_json::to_value(&curves.estimate).expect("estimate serializes");
                reports.push(v);
            }
            if let (Some(path), Some(text)) = (&csv, &first_csv) {
                emit(Some(path), text)?;
            }
            let all_pass = reports.iter().all(|r| r["pass"] == true);
            emit_json(out.as_deref(), &json!({"seed": seed, "pass": all_pass, "reports": reports}))
        }
        TheoryCommand::Gp {
            train,
            queries,
            dim,
            length_scale,
            variance,
            jitter,
            seed,
            out,
        } => {
            if dim == 0 {
                return Err(CliError::Usage("--dim must be at least 1".into()));
            }
            let kernel = Rbf::new(length_scale, variance).map_err(|e| CliError::Usage(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |n: usize| -> Vec<Vec<f64>> {
                (0..n).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
            };
            let xs = draw(train);
            let qs = draw(queries);
            let ys: Vec<f64> = xs.iter().map(|x| x.iter().map(|v| v.sin()).sum()).collect();
            let model = GpModel::fit_with_jitter(kernel, xs.clone(), ys.clone(), jitter).map_err(core)?;
            let order = theory::gp_difficulty_order(&model, &qs);

            // adding training points one at a time must never raise a variance
            let mut prev: Vec<f64> = qs.iter().map(|q| kernel.eval(q, q)).collect();
            let mut witness = None;
            'grow: for n in 1..=train {
                let m = GpModel::fit_with_jitter(kernel, xs[..n].to_vec(), ys[..n].to_vec(), jitter).map_err(core)?;
                for (point, (q, p)) in qs.iter().zip(prev.iter_mut()).enumerate() {
                    let var = m.posterior(q).1;
                    if var > *p + 1e-8 {
                        witness = Some(Witness::Curve {
                            curve: format!("variance_of_query_{point}"),
                            step: n,
                            before: *p,
                            after: var,
                        });
                        break 'grow;
                    }
                    *p = var;
                }
            }
            let report = PropertyReport::new("gp_variance_monotonicity", witness);
            emit_json(
                out.as_deref(),
                &json!({
                    "seed": seed,
                    "difficulty_order": order
                        .iter()
                        .map(|&(i, v)| json!({"query": i, "x": qs[i], "variance": v}))
                        .collect::<Vec<_>>(),
                    "reports": [report_value(&report)],
                }),
            )
        }
    }
}

fn plot(a: PlotArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.spec).map_err(|e| CliError::io(&a.spec, e))?;
    let spec: PlotSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Plot(format!("spec {}: {e}", a.spec.display())))?;
    let data = Table::load(&a.data)?;
    let svg = emit_svg(&spec, &data)?;
    std::fs::write(&a.out, svg).map_err(|e| CliError::io(&a.out, e))
}
