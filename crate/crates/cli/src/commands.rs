use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use evidet::frontend::SEGMENT_SECONDS;
use evidet::metrics::{
    early_f1, match_events, sweep_backtrack, sweep_vacuity, DecisionTimeline, DetectionRecord, Status,
};
use evidet::model::{load_checkpoint, save_checkpoint, train, Checkpoint, PENetConfig, TrainState};
use evidet::stream::{read_detection_log, DetectionLogWriter, Detector, DetectorConfig};
use evidet::synthgen::write_corpus;
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{Corpus, Split};
use crate::output::{run_in, OutDir};
use crate::{Cli, CliError, Command, DetectArgs, EvalArgs, GenArgs, SplitArg, SweepParam, TrainArgs};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.ok_or_else(|| CliError::Usage("--out DIR is required".into()))?;
    match cli.command {
        Command::Gen(args) => {
            apply_gen(&mut cfg, &args);
            cmd_gen(cfg, &out)
        }
        Command::Train { corpus, resume, train } => {
            apply_train(&mut cfg, &train);
            cmd_train(cfg, &corpus, resume.as_deref(), &out)
        }
        Command::Detect {
            corpus,
            model,
            split,
            train_fraction,
            detect,
        } => {
            apply_detect(&mut cfg, &detect);
            if let Some(f) = train_fraction {
                cfg.split.train_fraction = f;
            }
            cmd_detect(cfg, &corpus, &model, split, &out)
        }
        Command::Eval {
            corpus,
            detections,
            eval,
        } => {
            apply_eval(&mut cfg, &eval);
            cmd_eval(cfg, &corpus, &detections, &out)
        }
        Command::Sweep {
            param,
            corpus,
            model,
            models,
            grid,
            detect,
            eval,
            train,
        } => {
            apply_detect(&mut cfg, &detect);
            apply_eval(&mut cfg, &eval);
            apply_train(&mut cfg, &train);
            match param {
                SweepParam::Vacuity => {
                    if !grid.is_empty() {
                        cfg.sweep.vacuity_grid = grid;
                    }
                    let model = model.ok_or_else(|| CliError::Usage("sweep --param vacuity needs --model".into()))?;
                    cmd_sweep_vacuity(cfg, &corpus, &model, &out)
                }
                SweepParam::Backtrack => {
                    if !grid.is_empty() {
                        if grid.iter().any(|g| *g < 0.0 || g.fract() != 0.0) {
                            return Err(CliError::Usage("backtrack grid must hold non-negative integers".into()));
                        }
                        cfg.sweep.backtrack_grid = grid.iter().map(|&g| g as usize).collect();
                    }
                    cmd_sweep_backtrack(cfg, &corpus, model.as_deref(), &models, &out)
                }
            }
        }
    }
}

fn apply_gen(cfg: &mut RunConfig, a: &GenArgs) {
    if let Some(v) = a.clips {
        cfg.synth.clips = v;
    }
    if let Some(v) = a.num_classes {
        cfg.synth.num_classes = v;
        cfg.model.num_classes = v;
    }
    if let Some(v) = a.snr_min {
        cfg.synth.snr_db.0 = v;
    }
    if let Some(v) = a.snr_max {
        cfg.synth.snr_db.1 = v;
    }
}

fn apply_train(cfg: &mut RunConfig, a: &TrainArgs) {
    let m = &mut cfg.model;
    if let Some(v) = a.epochs {
        m.epochs = v;
    }
    if let Some(v) = a.learning_rate {
        m.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        m.batch_size = v;
    }
    if let Some(v) = a.hidden {
        m.gru_hidden = v;
    }
    if let Some(v) = a.train_context {
        m.context = v;
    }
    if let Some(v) = a.train_forward {
        m.forward = v;
    }
    if let Some(v) = a.train_fraction {
        cfg.split.train_fraction = v;
    }
}

fn apply_detect(cfg: &mut RunConfig, a: &DetectArgs) {
    let d = &mut cfg.detect;
    if let Some(r) = a.rule {
        if r != d.rule && a.threshold.is_none() {
            d.threshold = None;
        }
        d.rule = r;
    }
    if let Some(v) = a.threshold {
        d.threshold = Some(v);
    }
    if let Some(v) = a.context {
        d.context = Some(v);
    }
    if let Some(v) = a.forward {
        d.forward = Some(v);
    }
}

fn apply_eval(cfg: &mut RunConfig, a: &EvalArgs) {
    if let Some(v) = a.tolerance {
        cfg.eval.tolerance = v;
    }
    if a.strict_eq8 {
        cfg.eval.strict_eq8 = true;
    }
}

fn prepare(cfg: &mut RunConfig) -> Result<(), CliError> {
    cfg.resolve_seeds();
    cfg.validate()
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} {} does not exist", path.display())))
    }
}

fn cmd_gen(mut cfg: RunConfig, out: &Path) -> Result<(), CliError> {
    prepare(&mut cfg)?;
    let dir = OutDir::create(out, &cfg.to_json())?;
    run_in(dir, |dir| {
        let manifest = write_corpus(&dir.path, &cfg.synth)?;
        let corpus = Corpus::open(&dir.path)?;
        println!(
            "wrote {} clips with {} events ({} classes) to {}",
            manifest.len(),
            corpus.annotations.num_events(),
            cfg.synth.num_classes,
            dir.path.display()
        );
        Ok(())
    })
}

fn loss_trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (e, l) in trace.iter().enumerate() {
        let _ = writeln!(out, "{},{l:.10}", e + 1);
    }
    out
}

/// Trains on the training split and writes `<stem>.ckpt` and the loss trace.
fn train_into(
    cfg: &RunConfig,
    corpus: &Corpus,
    model_cfg: &PENetConfig,
    resume: Option<TrainState>,
    dir: &OutDir,
    stem: &str,
) -> Result<Checkpoint, CliError> {
    let clips = corpus.labeled(corpus.entries(Split::Train, cfg.split.train_fraction))?;
    info!("training on {} clips, n = {}", clips.len(), model_cfg.forward);
    let started = Instant::now();
    let state = train(model_cfg, &clips, resume, |epoch, loss| {
        info!(
            "epoch {:>3}  loss {loss:.5}  ({:.1} s)",
            epoch + 1,
            started.elapsed().as_secs_f64()
        );
    })?;
    let trace_name = if stem == "model" {
        "loss_trace.csv".to_string()
    } else {
        format!("loss_trace_{stem}.csv")
    };
    dir.write(&trace_name, &loss_trace_csv(&state.loss_trace))?;
    let ckpt = Checkpoint {
        config: model_cfg.clone(),
        class_names: corpus.class_names.clone(),
        state,
    };
    save_checkpoint(&dir.join(&format!("{stem}.ckpt")), &ckpt)?;
    Ok(ckpt)
}

fn check_classes(corpus: &Corpus, ckpt: &Checkpoint) -> Result<(), CliError> {
    if corpus.class_names != ckpt.class_names {
        return Err(CliError::Runtime(format!(
            "model classes {:?} do not match corpus classes {:?}",
            ckpt.class_names, corpus.class_names
        )));
    }
    Ok(())
}

fn cmd_train(mut cfg: RunConfig, corpus_dir: &Path, resume: Option<&Path>, out: &Path) -> Result<(), CliError> {
    Corpus::check(corpus_dir)?;
    if let Some(r) = resume {
        require_file(r, "checkpoint")?;
    }
    let corpus = Corpus::open(corpus_dir)?;
    cfg.model.num_classes = corpus.class_names.len();
    prepare(&mut cfg)?;
    let resume = match resume {
        Some(path) => {
            let ckpt = load_checkpoint(path)?;
            check_classes(&corpus, &ckpt)?;
            if ckpt.config.shape() != cfg.model.shape() {
                return Err(CliError::Runtime(format!(
                    "checkpoint shape {:?} differs from the configured {:?}",
                    ckpt.config.shape(),
                    cfg.model.shape()
                )));
            }
            Some(ckpt.state)
        }
        None => None,
    };
    let dir = OutDir::create(out, &cfg.to_json())?;
    run_in(dir, |dir| {
        let ckpt = train_into(&cfg, &corpus, &cfg.model, resume, dir, "model")?;
        println!(
            "trained {} epochs; final loss {:.5}; checkpoint {}",
            ckpt.state.epochs_completed,
            ckpt.state.loss_trace.last().copied().unwrap_or(f64::NAN),
            dir.join("model.ckpt").display()
        );
        Ok(())
    })
}

/// Written next to a detection log so `eval` can interpret it.
#[derive(Debug, Serialize, Deserialize)]
struct DetectMeta {
    rule: evidet::stream::DecisionRule,
    context: usize,
    forward: usize,
    class_names: Vec<String>,
    clips: Vec<String>,
    segments: usize,
    mean_segment_ms: f64,
    max_segment_ms: f64,
}

fn detector_config(cfg: &RunConfig, ckpt: &Checkpoint) -> DetectorConfig {
    DetectorConfig {
        context: cfg.detect.context.unwrap_or(ckpt.config.context),
        forward: cfg.detect.forward.unwrap_or(ckpt.config.forward),
        rule: cfg.detect.rule(),
        class_thresholds: cfg.detect.class_thresholds.clone(),
    }
}

fn split_of(s: SplitArg) -> Split {
    match s {
        SplitArg::Train => Split::Train,
        SplitArg::Eval => Split::Eval,
        SplitArg::All => Split::All,
    }
}

fn cmd_detect(
    mut cfg: RunConfig,
    corpus_dir: &Path,
    model: &Path,
    split: SplitArg,
    out: &Path,
) -> Result<(), CliError> {
    Corpus::check(corpus_dir)?;
    require_file(model, "checkpoint")?;
    prepare(&mut cfg)?;
    let corpus = Corpus::open(corpus_dir)?;
    let ckpt = load_checkpoint(model)?;
    check_classes(&corpus, &ckpt)?;
    let det_cfg = detector_config(&cfg, &ckpt);
    let dir = OutDir::create(out, &cfg.to_json())?;
    run_in(dir, |dir| {
        let entries = corpus.entries(split_of(split), cfg.split.train_fraction);
        let clips = corpus.eval_clips(entries)?;
        let mut log = DetectionLogWriter::create(&dir.join("detections.csv"))?;
        let (mut total, mut worst, mut segments) = (0.0f64, 0.0f64, 0usize);
        for clip in &clips {
            let mut det = Detector::new(&ckpt.state.params, det_cfg.clone())?;
            for seg in clip.segments.iter().cloned() {
                let started = Instant::now();
                let decision = det.step(seg)?;
                let elapsed = started.elapsed().as_secs_f64();
                total += elapsed;
                worst = worst.max(elapsed);
                segments += 1;
                if let Some(d) = decision {
                    log.write(&clip.id, &d, &ckpt.class_names)?;
                }
            }
            let started = Instant::now();
            let rest = det.finish()?;
            total += started.elapsed().as_secs_f64();
            for d in &rest {
                log.write(&clip.id, d, &ckpt.class_names)?;
            }
        }
        log.finish()?;
        let meta = DetectMeta {
            rule: det_cfg.rule,
            context: det_cfg.context,
            forward: det_cfg.forward,
            class_names: ckpt.class_names.clone(),
            clips: clips.iter().map(|c| c.id.clone()).collect(),
            segments,
            mean_segment_ms: 1e3 * total / segments.max(1) as f64,
            max_segment_ms: 1e3 * worst,
        };
        dir.write(
            "detect.json",
            &(serde_json::to_string_pretty(&meta).expect("serialises") + "\n"),
        )?;
        println!(
            "{} clips, {} segments; mean per-segment inference {:.3} ms (max {:.3} ms); log {}",
            clips.len(),
            segments,
            meta.mean_segment_ms,
            meta.max_segment_ms,
            dir.join("detections.csv").display()
        );
        Ok(())
    })
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    f1: Option<f64>,
    mean_delay: Option<f64>,
    tolerance: f64,
    strict_eq8: bool,
    forward: usize,
}

fn records_csv(rows: &[(String, DetectionRecord)], names: &[String]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
    let mut out = String::from("clip_id,class,status,timeline_time,prediction_time,onset,offset,delay\n");
    for (clip, r) in rows {
        let status = match r.status {
            Status::TruePositive => "TP",
            Status::FalsePositive => "FP",
            Status::FalseNegative => "FN",
        };
        let _ = writeln!(
            out,
            "{clip},{},{status},{},{},{},{},{}",
            names[r.class],
            opt(r.timeline_time),
            opt(r.prediction_time),
            opt(r.annotation.map(|a| a.onset)),
            opt(r.annotation.map(|a| a.offset)),
            opt(r.delay)
        );
    }
    out
}

fn cmd_eval(mut cfg: RunConfig, corpus_dir: &Path, detections: &Path, out: &Path) -> Result<(), CliError> {
    Corpus::check(corpus_dir)?;
    require_file(&detections.join("detections.csv"), "detection log")?;
    require_file(&detections.join("detect.json"), "detection metadata")?;
    prepare(&mut cfg)?;
    let corpus = Corpus::open(corpus_dir)?;
    let meta_path = detections.join("detect.json");
    let meta: DetectMeta =
        serde_json::from_str(&std::fs::read_to_string(&meta_path).map_err(|e| evidet::Error::io(&meta_path, e))?)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", meta_path.display())))?;
    if meta.class_names != corpus.class_names {
        return Err(CliError::Runtime(
            "detection log classes do not match the corpus".into(),
        ));
    }
    let dir = OutDir::create(out, &cfg.to_json())?;
    run_in(dir, |dir| {
        let log = read_detection_log(&detections.join("detections.csv"), &meta.class_names)?;
        let k = meta.class_names.len();
        let mut rows = Vec::new();
        for id in &meta.clips {
            let decisions = log.get(id).cloned().unwrap_or_default();
            let timeline = DecisionTimeline {
                segment_seconds: SEGMENT_SECONDS,
                wait_seconds: meta.forward as f64 * SEGMENT_SECONDS,
                num_classes: k,
                decisions,
            };
            for r in match_events(&timeline, corpus.annotations.events(id), &cfg.eval.matching())? {
                rows.push((id.clone(), r));
            }
        }
        let records: Vec<DetectionRecord> = rows.iter().map(|(_, r)| r.clone()).collect();
        let s = early_f1(&records);
        let summary = EvalSummary {
            tp: s.tp,
            fp: s.fp,
            fn_: s.fn_,
            f1: s.f1,
            mean_delay: s.mean_delay,
            tolerance: cfg.eval.tolerance,
            strict_eq8: cfg.eval.strict_eq8,
            forward: meta.forward,
        };
        dir.write(
            "metrics.json",
            &(serde_json::to_string_pretty(&summary).expect("serialises") + "\n"),
        )?;
        dir.write("records.csv", &records_csv(&rows, &meta.class_names))?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "undefined".into());
        println!(
            "early F1 {}  mean delay {} s  (TP {} FP {} FN {}, L = {} s{})",
            fmt(s.f1),
            fmt(s.mean_delay),
            s.tp,
            s.fp,
            s.fn_,
            cfg.eval.tolerance,
            if cfg.eval.strict_eq8 { ", strict" } else { "" }
        );
        Ok(())
    })
}

fn write_table(dir: &OutDir, table: &evidet::metrics::SweepTable) -> Result<(), CliError> {
    dir.write("sweep.csv", &table.to_csv())?;
    dir.write("summary.txt", &table.summary())?;
    dir.write(
        "sweep.json",
        &(serde_json::to_string_pretty(table).expect("serialises") + "\n"),
    )?;
    print!("{}", table.summary());
    Ok(())
}

fn cmd_sweep_vacuity(mut cfg: RunConfig, corpus_dir: &Path, model: &Path, out: &Path) -> Result<(), CliError> {
    Corpus::check(corpus_dir)?;
    require_file(model, "checkpoint")?;
    prepare(&mut cfg)?;
    cfg.validate_threshold_grid()?;
    let corpus = Corpus::open(corpus_dir)?;
    let ckpt = load_checkpoint(model)?;
    check_classes(&corpus, &ckpt)?;
    let base = detector_config(&cfg, &ckpt);
    let dir = OutDir::create(out, &cfg.to_json())?;
    run_in(dir, |dir| {
        let clips = corpus.eval_clips(corpus.entries(Split::Eval, cfg.split.train_fraction))?;
        let table = sweep_vacuity(
            &ckpt.state.params,
            &clips,
            &base,
            &cfg.sweep.vacuity_grid,
            &cfg.eval.matching(),
        )?;
        write_table(dir, &table)
    })
}

fn cmd_sweep_backtrack(
    mut cfg: RunConfig,
    corpus_dir: &Path,
    shared: Option<&Path>,
    models: &[std::path::PathBuf],
    out: &Path,
) -> Result<(), CliError> {
    Corpus::check(corpus_dir)?;
    for m in shared.iter().copied().chain(models.iter().map(|p| p.as_path())) {
        require_file(m, "checkpoint")?;
    }
    if shared.is_some() && !models.is_empty() {
        return Err(CliError::Usage("give either --model or --models, not both".into()));
    }
    let corpus = Corpus::open(corpus_dir)?;
    cfg.model.num_classes = corpus.class_names.len();
    prepare(&mut cfg)?;
    let dir = OutDir::create(out, &cfg.to_json())?;
    run_in(dir, |dir| {
        // (n, checkpoint) pairs: loaded, or trained here one per n.
        let family: Vec<(usize, Checkpoint)> = if let Some(path) = shared {
            let ckpt = load_checkpoint(path)?;
            check_classes(&corpus, &ckpt)?;
            cfg.sweep.backtrack_grid.iter().map(|&n| (n, ckpt.clone())).collect()
        } else if !models.is_empty() {
            let mut family = Vec::new();
            for path in models {
                let ckpt = load_checkpoint(path)?;
                check_classes(&corpus, &ckpt)?;
                family.push((ckpt.config.forward, ckpt));
            }
            family.sort_by_key(|(n, _)| *n);
            family
        } else {
            let mut family = Vec::new();
            for &n in &cfg.sweep.backtrack_grid {
                let model_cfg = PENetConfig {
                    forward: n,
                    ..cfg.model.clone()
                };
                family.push((
                    n,
                    train_into(&cfg, &corpus, &model_cfg, None, dir, &format!("model_n{n}"))?,
                ));
            }
            family
        };
        let clips = corpus.eval_clips(corpus.entries(Split::Eval, cfg.split.train_fraction))?;
        let pairs: Vec<(usize, &evidet::model::PENetParams)> =
            family.iter().map(|(n, c)| (*n, &c.state.params)).collect();
        let context = cfg.detect.context.unwrap_or(cfg.model.context);
        let table = sweep_backtrack(&pairs, &clips, context, cfg.detect.rule(), &cfg.eval.matching())?;
        write_table(dir, &table)
    })
}
