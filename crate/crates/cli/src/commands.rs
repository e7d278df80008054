use std::path::Path;

use cascade_gnn::classifier::{embeddings_table, train, user_embeddings, Checkpoint, ModelParams};
use cascade_gnn::data::{read_dataset, write_dataset, CredibilityIndex, Dataset, Scope};
use cascade_gnn::eval::{
    aging_protocol, backward_feature_selection, build_samples, cross_validate, diffusion_sweep, fr_layout, mad_mmd,
    prepare, sample_units, write_json, CsvTable, FoldPlan, Provenance, Role,
};
use cascade_gnn::synth::{generate, summary_stats, EmbeddingMode};
use cascade_gnn::{Error, Executor};
use serde::Serialize;

use crate::config::RunConfig;
use crate::{Cli, Command, Experiment};

pub enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    provenance: &'a Provenance,
    config: &'a RunConfig,
    result: T,
}

struct Ctx {
    cfg: RunConfig,
    provenance: Provenance,
    exec: Executor,
    data: std::path::PathBuf,
    out: std::path::PathBuf,
}

impl Ctx {
    fn dataset(&self) -> Outcome<Dataset> {
        if !self.data.is_dir() {
            return Err(Failure::Run(Error::io(
                &self.data,
                std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
            )));
        }
        Ok(read_dataset(&self.data)?)
    }

    fn out_dir(&self) -> Outcome<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        Ok(&self.out)
    }

    fn report(&self, name: &str, result: impl Serialize) -> Outcome {
        let path = self.out_dir()?.join(name);
        let r = Report {
            provenance: &self.provenance,
            config: &self.cfg,
            result,
        };
        Ok(write_json(&path, &r)?)
    }

    fn csv(&self, name: &str, table: &CsvTable) -> Outcome {
        Ok(table.write(&self.out_dir()?.join(name), &self.provenance)?)
    }

    fn fold_plan(&self, data: &Dataset) -> Outcome<FoldPlan> {
        Ok(FoldPlan::from_stories(&data.stories, self.cfg.harness.folds, self.cfg.harness.seed)?)
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_hours(s: &str) -> Outcome<f64> {
    match s.trim().parse::<f64>() {
        Ok(h) if h.is_finite() && h >= 0.0 => Ok(h),
        _ => usage(format!("--hours expects a non-negative number of hours, got '{s}'")),
    }
}

/// `a..b` (inclusive, 1 h steps), `a,b,c` or a single value.
pub fn parse_hours_list(s: &str) -> Outcome<Vec<f64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse_hours(a)?, parse_hours(b)?);
        if a > b || a.fract() != 0.0 || b.fract() != 0.0 {
            return usage(format!("--hours range '{s}' must be whole hours with start <= end"));
        }
        return Ok((a as u64..=b as u64).map(|h| h as f64).collect());
    }
    s.split(',').map(parse_hours).collect()
}

fn apply_experiment(cfg: &mut RunConfig, exp: &Experiment, allow_range: bool) -> Outcome {
    if let Some(n) = exp.min_cascade_size {
        if cfg.harness.scope == Scope::UrlWise {
            return usage("--min-cascade-size only applies with --scope cascade");
        }
        cfg.harness.min_cascade_size = n;
    }
    if let Some(it) = exp.iterations {
        if it == 0 {
            return usage("--iterations must be positive");
        }
        cfg.harness.model.iterations = it;
    }
    if let Some(h) = &exp.hours {
        if !allow_range {
            cfg.harness.hours = parse_hours(h)?;
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Outcome {
    let g = cli.global;
    let scope_flag = match &cli.command {
        Command::Train(e) | Command::Cv(e) | Command::Sweep(e) | Command::Aging(e) | Command::Ablate(e) | Command::Overlap(e) => {
            e.scope.map(Scope::from)
        }
        Command::ExportEmbeddings { experiment, .. } => experiment.scope.map(Scope::from),
        _ => None,
    };
    let mut cfg = RunConfig::load(g.config.as_deref(), g.seed, scope_flag)?;
    let name = match &cli.command {
        Command::Generate { .. } => "generate",
        Command::Stats => "stats",
        Command::Train(_) => "train",
        Command::Cv(_) => "cv",
        Command::Sweep(_) => "sweep",
        Command::Aging(_) => "aging",
        Command::Ablate(_) => "ablate",
        Command::ExportEmbeddings { .. } => "export-embeddings",
        Command::Layout { .. } => "layout",
        Command::Overlap(_) => "overlap",
    };

    let mut sweep_hours = None;
    match &cli.command {
        Command::Generate {
            urls,
            users,
            mean_cascades,
            embeddings,
        } => {
            let gen = &mut cfg.generator;
            gen.num_urls = urls.unwrap_or(gen.num_urls);
            gen.num_users = users.unwrap_or(gen.num_users);
            gen.mean_cascades_per_url = mean_cascades.unwrap_or(gen.mean_cascades_per_url);
            if let Some(p) = embeddings {
                gen.embedding_mode = EmbeddingMode::LoadFile { path: p.clone() };
            }
            if let Err(e) = gen.validate() {
                return usage(e.to_string());
            }
        }
        Command::Train(e) | Command::Cv(e) | Command::Aging(e) | Command::Ablate(e) | Command::Overlap(e) => {
            apply_experiment(&mut cfg, e, false)?
        }
        Command::ExportEmbeddings { experiment, .. } => apply_experiment(&mut cfg, experiment, false)?,
        Command::Sweep(e) => {
            apply_experiment(&mut cfg, e, true)?;
            sweep_hours = Some(parse_hours_list(e.hours.as_deref().unwrap_or("0..24"))?);
        }
        Command::Layout {
            layout_iterations,
            max_nodes,
        } => {
            cfg.layout.iterations = layout_iterations.unwrap_or(cfg.layout.iterations);
            if let Some(m) = max_nodes {
                cfg.layout.max_nodes = (*m > 0).then_some(*m);
            }
        }
        Command::Stats => {}
    }
    if let Err(e) = cfg.harness.model.validate() {
        return usage(e.to_string());
    }

    let provenance = Provenance::new(name, &cfg, cfg.seed)?;
    let ctx = Ctx {
        cfg,
        provenance,
        exec: Executor::from_jobs(g.jobs),
        data: g.data,
        out: g.out,
    };
    match cli.command {
        Command::Generate { .. } => cmd_generate(&ctx),
        Command::Stats => cmd_stats(&ctx),
        Command::Train(_) => cmd_train(&ctx),
        Command::Cv(_) => cmd_cv(&ctx),
        Command::Sweep(_) => cmd_sweep(&ctx, &sweep_hours.unwrap_or_default()),
        Command::Aging(_) => cmd_aging(&ctx),
        Command::Ablate(_) => cmd_ablate(&ctx),
        Command::ExportEmbeddings { model, .. } => cmd_export_embeddings(&ctx, model.as_deref()),
        Command::Layout { .. } => cmd_layout(&ctx),
        Command::Overlap(_) => cmd_overlap(&ctx),
    }
}

fn cmd_generate(ctx: &Ctx) -> Outcome {
    let data = generate(&ctx.cfg.generator, ctx.exec)?;
    write_dataset(&ctx.data, &data)?;
    let stats = summary_stats(&data)?;
    let r = Report {
        provenance: &ctx.provenance,
        config: &ctx.cfg,
        result: stats,
    };
    write_json(&ctx.data.join("stats.json"), &r)?;
    log::info!("wrote {} stories to {}", data.stories.len(), ctx.data.display());
    Ok(())
}

fn cmd_stats(ctx: &Ctx) -> Outcome {
    let data = ctx.dataset()?;
    ctx.report("stats.json", summary_stats(&data)?)
}

#[derive(Serialize)]
struct TrainSummary {
    train_size: usize,
    validation_size: usize,
    test_size: usize,
    best_iteration: usize,
    test_auc: Option<f64>,
    loss_trace: Vec<(usize, f64)>,
    validation: Vec<cascade_gnn::classifier::ValidationPoint>,
}

/// A model trained on round 0 of the fold plan.
fn train_round0(ctx: &Ctx, data: &Dataset) -> Outcome<(ModelParams, TrainSummary, cascade_gnn::nn::Amsgrad)> {
    let h = &ctx.cfg.harness;
    let graphs = build_samples(data, h.scope, h.hours, h.min_cascade_size, &h.model.schema, ctx.exec)?;
    let prepared = prepare(&graphs, &h.model, &h.model.active_groups, ctx.exec)?;
    let roles = ctx.fold_plan(data)?.roles(0);
    let pick = |role| prepared.iter().filter(|g| roles.get(&g.url_id) == Some(&role)).cloned().collect::<Vec<_>>();
    let (tr, va, te) = (pick(Role::Train), pick(Role::Validation), pick(Role::Test));
    let out = train(&tr, &va, &h.model)?;
    let (test_auc, _) = cascade_gnn::classifier::evaluate(&te, &out.params)?;
    let summary = TrainSummary {
        train_size: tr.len(),
        validation_size: va.len(),
        test_size: te.len(),
        best_iteration: out.best_iteration,
        test_auc,
        loss_trace: out.loss_trace,
        validation: out.validation,
    };
    Ok((out.params, summary, out.optimizer))
}

fn cmd_train(ctx: &Ctx) -> Outcome {
    let data = ctx.dataset()?;
    let (params, summary, opt) = train_round0(ctx, &data)?;
    Checkpoint::new(&ctx.cfg.harness.model, &params, &opt).save(&ctx.out_dir()?.join("model.json"))?;
    ctx.report("report.json", summary)
}

fn cmd_cv(ctx: &Ctx) -> Outcome {
    let data = ctx.dataset()?;
    let plan = ctx.fold_plan(&data)?;
    let report = cross_validate(&data, &ctx.cfg.harness, &plan, ctx.exec)?;
    let mut roc = CsvTable::new(["fpr", "tpr"]);
    if let Some(curve) = &report.pooled_roc {
        for (fpr, tpr) in &curve.points {
            roc.push(vec![fpr.to_string(), tpr.to_string()]);
        }
    }
    ctx.csv("roc.csv", &roc)?;
    ctx.report("report.json", &report)
}

fn cmd_sweep(ctx: &Ctx, hours: &[f64]) -> Outcome {
    let data = ctx.dataset()?;
    let plan = ctx.fold_plan(&data)?;
    let points = diffusion_sweep(&data, &ctx.cfg.harness, &plan, hours, ctx.exec)?;
    let mut t = CsvTable::new(["hours", "mean_auc", "std_auc", "coverage", "num_samples"]);
    for p in &points {
        t.push(vec![
            p.hours.to_string(),
            p.mean_auc.to_string(),
            p.std_auc.to_string(),
            p.coverage.to_string(),
            p.num_samples.to_string(),
        ]);
    }
    ctx.csv("auc_vs_hours.csv", &t)?;
    ctx.report("report.json", &points)
}

fn cmd_aging(ctx: &Ctx) -> Outcome {
    let data = ctx.dataset()?;
    let report = aging_protocol(&data, &ctx.cfg.harness, &ctx.cfg.aging, ctx.exec)?;
    let mut header = vec!["window", "start", "end", "mean_time", "size", "fake"].into_iter().map(String::from).collect::<Vec<_>>();
    header.extend(report.series.iter().map(|s| s.name.clone()));
    let mut t = CsvTable::new(header);
    for (k, w) in report.windows.iter().enumerate() {
        let mut row = vec![
            k.to_string(),
            w.start.to_string(),
            w.end.to_string(),
            w.mean_time.to_string(),
            w.len().to_string(),
            report.window_positives[k].to_string(),
        ];
        row.extend(report.series.iter().map(|s| opt(s.window_aucs[k])));
        t.push(row);
    }
    ctx.csv("aging.csv", &t)?;
    ctx.report("report.json", &report)
}

fn cmd_ablate(ctx: &Ctx) -> Outcome {
    let data = ctx.dataset()?;
    let plan = ctx.fold_plan(&data)?;
    let report = backward_feature_selection(&data, &ctx.cfg.harness, &plan, ctx.exec)?;
    let mut t = CsvTable::new(["level", "num_groups", "groups", "validation_auc", "test_auc", "removed"]);
    for (k, l) in report.levels.iter().enumerate() {
        t.push(vec![
            k.to_string(),
            l.groups.len().to_string(),
            l.groups.iter().map(|g| g.name()).collect::<Vec<_>>().join("+"),
            opt(l.validation_auc),
            opt(l.test_auc),
            l.removed.map(|g| g.name().to_string()).unwrap_or_default(),
        ]);
    }
    ctx.csv("ablation.csv", &t)?;
    ctx.report("report.json", &report)
}

fn cmd_export_embeddings(ctx: &Ctx, model: Option<&Path>) -> Outcome {
    let data = ctx.dataset()?;
    let h = &ctx.cfg.harness;
    let params = match model {
        Some(p) => Checkpoint::load(p)?.model_params()?,
        None => train_round0(ctx, &data)?.0,
    };
    if params.input_width() != h.model.schema.width() {
        return usage(format!(
            "model expects {} input features, schema has {}",
            params.input_width(),
            h.model.schema.width()
        ));
    }
    let graphs = build_samples(&data, h.scope, h.hours, h.min_cascade_size, &h.model.schema, ctx.exec)?;
    let prepared = prepare(&graphs, &h.model, &h.model.active_groups, ctx.exec)?;
    let cred = CredibilityIndex::build(&data.stories, &data.cascades);
    let rows = user_embeddings(&prepared, &params, &cred)?;
    ctx.csv("embeddings.csv", &embeddings_table(&rows))
}

fn cmd_layout(ctx: &Ctx) -> Outcome {
    let data = ctx.dataset()?;
    let cred = CredibilityIndex::build(&data.stories, &data.cascades);
    let positions = fr_layout(&data.social, &ctx.cfg.layout, ctx.exec);
    let mut t = CsvTable::new(["user_id", "x", "y", "credibility"]);
    for p in &positions {
        t.push(vec![p.user_id.to_string(), p.x.to_string(), p.y.to_string(), opt(cred.get(p.user_id))]);
    }
    ctx.csv("layout.csv", &t)
}

fn cmd_overlap(ctx: &Ctx) -> Outcome {
    let data = ctx.dataset()?;
    let h = &ctx.cfg.harness;
    let samples: Vec<Vec<_>> = sample_units(&data, h.scope, h.min_cascade_size)
        .iter()
        .map(|unit| unit.iter().flat_map(|c| c.tweets.iter().map(|t| t.author)).collect())
        .collect();
    ctx.report("overlap.json", mad_mmd(&samples, &data.social, ctx.exec)?)
}
