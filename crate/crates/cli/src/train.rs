use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::Context;
use lattn_core::corpus::{
    build_rebalanced, build_skewed, top_k_functions, EncodedExample, LabelSpace, Recipe, Target,
    Vocab,
};
use lattn_core::eval::{evaluate, Metrics};
use lattn_core::models::{Bundle, Model};
use lattn_core::training::{
    accuracy, freeze_groups, second_step, train as fit, write_history_csv, EpochRecord,
    FreezeAudit, Strategy,
};
use lattn_core::Error;
use serde::Serialize;

use crate::cli::{OneshotArgs, Scheme, TrainArgs};
use crate::data::{encode_known, read_recipes, vocab_from};
use crate::manifest::{create_dir, write_json, ManifestBuilder};
use crate::settings::{from_process_env, Settings};
use crate::Failure;

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const METRICS_FILE: &str = "metrics.json";
pub const HISTORY_FILE: &str = "history.csv";

#[derive(Serialize)]
struct TrainMetrics {
    train_accuracy: f64,
    valid: Option<Metrics>,
    best_epoch: usize,
    steps: usize,
    final_train_loss: Option<f64>,
}

fn write_history(path: &Path, history: &[EpochRecord]) -> anyhow::Result<()> {
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    write_history_csv(&mut out, history)?;
    out.flush()?;
    Ok(())
}

fn save_bundle(path: &Path, bundle: &Bundle) -> anyhow::Result<()> {
    bundle
        .save(path)
        .with_context(|| format!("writing {}", path.display()))
}

pub fn train(args: TrainArgs) -> anyhow::Result<()> {
    if args.seeds.is_empty() {
        return train_one(&args, args.seed);
    }
    if args.parallel == 0 {
        return Err(Failure::Usage("--parallel must be at least 1".into()).into());
    }
    let mut unique = BTreeSet::new();
    if let Some(s) = args.seeds.iter().find(|s| !unique.insert(**s)) {
        return Err(Failure::Usage(format!("seed {s} listed twice")).into());
    }
    // Each seed runs in its own process; `--parallel` only bounds how many
    // run at once, so results do not depend on it.
    let exe = std::env::current_exe().context("locating the lattn executable")?;
    create_dir(&args.out)?;
    for chunk in args.seeds.chunks(args.parallel) {
        let mut children = Vec::new();
        for &seed in chunk {
            let out = args.out.join(format!("seed-{seed}"));
            let child = Command::new(&exe)
                .args(child_args(&args, seed, &out))
                .spawn()
                .with_context(|| format!("starting run for seed {seed}"))?;
            children.push((seed, child));
        }
        for (seed, mut child) in children {
            let status = child.wait()?;
            if !status.success() {
                let code = status.code().unwrap_or(2).clamp(1, 255) as u8;
                return Err(Failure::Child(code, format!("run for seed {seed} failed")).into());
            }
        }
    }
    Ok(())
}

fn child_args(args: &TrainArgs, seed: u64, out: &Path) -> Vec<String> {
    let mut v = vec![
        "train".to_string(),
        "--model".into(),
        args.opts.model.to_string(),
        "--target".into(),
        args.target.to_string(),
        "--train".into(),
        args.train.display().to_string(),
    ];
    if let Some(valid) = &args.valid {
        v.extend(["--valid".into(), valid.display().to_string()]);
    }
    if let Some(config) = &args.opts.config {
        v.extend(["--config".into(), config.display().to_string()]);
    }
    for o in &args.opts.overrides {
        v.extend(["--set".into(), o.clone()]);
    }
    v.extend([
        "--seed".into(),
        seed.to_string(),
        "--out".into(),
        out.display().to_string(),
    ]);
    v
}

fn train_one(args: &TrainArgs, seed: Option<u64>) -> anyhow::Result<()> {
    let settings = from_process_env(&args.opts, seed)?;
    let mut manifest = ManifestBuilder::new("train");
    manifest.config(&settings)?.seed(settings.train.seed);

    let train_recipes = read_recipes(&args.train)?;
    manifest.input(&args.train)?;
    let valid_recipes = match &args.valid {
        Some(path) => {
            manifest.input(path)?;
            read_recipes(path)?
        }
        None => Vec::new(),
    };
    let vocab = vocab_from(&train_recipes, settings.model.max_words);
    let all: Vec<Recipe> = train_recipes
        .iter()
        .chain(&valid_recipes)
        .cloned()
        .collect();
    let labels = LabelSpace::from_recipes(&all, args.target);
    let seq_len = settings.model.seq_len;
    let (train_set, _) = encode_known(&train_recipes, &vocab, &labels, args.target, seq_len)?;
    let (valid_set, _) = encode_known(&valid_recipes, &vocab, &labels, args.target, seq_len)?;

    let config = settings
        .model
        .model_config(args.opts.model, vocab.size(), labels.len());
    let outcome = fit(config, &train_set, &valid_set, &settings.train)?;

    let valid = if valid_set.is_empty() {
        None
    } else {
        Some(evaluate(&outcome.model, &valid_set, &labels, None)?)
    };
    let metrics = TrainMetrics {
        train_accuracy: accuracy(&outcome.model, &train_set)?,
        valid,
        best_epoch: outcome.best_epoch,
        steps: outcome.steps,
        final_train_loss: outcome.history.last().map(|r| r.train_loss),
    };

    create_dir(&args.out)?;
    let checkpoint = args.out.join(CHECKPOINT_FILE);
    save_bundle(
        &checkpoint,
        &Bundle {
            model: outcome.model,
            vocab,
            labels,
            target: args.target,
            seed: settings.train.seed,
        },
    )?;
    write_history(&args.out.join(HISTORY_FILE), &outcome.history)?;
    let metrics_path = args.out.join(METRICS_FILE);
    write_json(&metrics_path, &metrics)?;
    manifest.checkpoint(checkpoint).metrics(metrics_path);
    manifest.finish(&args.out)?;
    eprintln!(
        "seed {}: train accuracy {:.4}, best epoch {}",
        settings.train.seed, metrics.train_accuracy, metrics.best_epoch
    );
    Ok(())
}

/// Majority trigger functions for a one-shot scheme.
fn majority_set(train: &[Recipe], scheme: Scheme, top_k: usize) -> BTreeSet<String> {
    let top = top_k_functions(train, top_k);
    match scheme {
        Scheme::SkewTop => top,
        Scheme::SkewNontop => train
            .iter()
            .map(|r| r.trigger_function.clone())
            .filter(|f| !top.contains(f))
            .collect(),
    }
}

#[derive(Serialize)]
struct StrategyReport {
    metrics: Metrics,
    step1_history: Vec<EpochRecord>,
    step2_history: Vec<EpochRecord>,
    frozen: Vec<String>,
    audit: Vec<FreezeAudit>,
    frozen_unchanged: bool,
}

#[derive(Serialize)]
struct OneshotSummary {
    scheme: String,
    majority_functions: usize,
    skewed_size: usize,
    rebalanced_size: usize,
    test_size: usize,
    test_skipped: usize,
    strategies: BTreeMap<String, Metrics>,
}

struct Prepared {
    vocab: Vocab,
    labels: LabelSpace,
    skewed: Vec<EncodedExample>,
    rebalanced: Vec<EncodedExample>,
    valid: Vec<EncodedExample>,
    test: Vec<EncodedExample>,
    test_skipped: usize,
}

pub fn oneshot(args: OneshotArgs) -> anyhow::Result<()> {
    let settings: Settings = from_process_env(&args.opts, args.seed)?;
    let arch = args.opts.model;
    let strategies: Vec<Strategy> = if args.strategy.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        let mut seen = Vec::new();
        for s in &args.strategy {
            if !seen.contains(s) {
                seen.push(*s);
            }
        }
        seen
    };
    if strategies.contains(&Strategy::TwoStep) {
        freeze_groups(arch)?;
    }

    let mut manifest = ManifestBuilder::new("oneshot");
    manifest.config(&settings)?.seed(settings.train.seed);
    let target = Target::TriggerFunction;
    let train_recipes = read_recipes(&args.train)?;
    manifest.input(&args.train)?;
    let valid_recipes = match &args.valid {
        Some(p) => {
            manifest.input(p)?;
            read_recipes(p)?
        }
        None => Vec::new(),
    };
    let test_recipes = read_recipes(&args.test)?;
    manifest.input(&args.test)?;

    let majority = majority_set(&train_recipes, args.scheme, args.top_k);
    if majority.is_empty() {
        return Err(Error::Data("the majority function set is empty".into()).into());
    }
    let seed = settings.train.seed;
    let skewed = build_skewed(&train_recipes, &majority, args.per_group, seed);
    let rebalanced = build_rebalanced(&skewed, &majority, args.per_group, seed);
    let prepared = prepare(
        &settings,
        &train_recipes,
        &valid_recipes,
        &test_recipes,
        &skewed,
        &rebalanced,
        target,
    )?;

    let config = settings
        .model
        .model_config(arch, prepared.vocab.size(), prepared.labels.len());
    let mut train_cfg = settings.train.clone();
    train_cfg.freeze.clear();
    let step1 = fit(config, &prepared.skewed, &prepared.valid, &train_cfg)?;

    create_dir(&args.out)?;
    let mut reports = BTreeMap::new();
    let mut summary = BTreeMap::new();
    for strategy in &strategies {
        let (model, step2_history, frozen, audit) = match strategy {
            Strategy::Standard => (step1.model.clone(), Vec::new(), Vec::new(), Vec::new()),
            Strategy::NaiveTwoStep | Strategy::TwoStep => {
                let naive = *strategy == Strategy::NaiveTwoStep;
                let (out, frozen, audit) = second_step(
                    &step1.model,
                    &prepared.rebalanced,
                    &prepared.valid,
                    &train_cfg,
                    naive,
                )?;
                (out.model, out.history, frozen, audit)
            }
        };
        let metrics = evaluate(&model, &prepared.test, &prepared.labels, Some(&majority))?;
        let dir = args.out.join(strategy.to_string());
        create_dir(&dir)?;
        save_strategy(&dir, &model, &prepared, seed)?;
        summary.insert(strategy.to_string(), metrics.clone());
        let frozen_unchanged = audit.iter().all(|a| a.unchanged);
        reports.insert(
            strategy.to_string(),
            StrategyReport {
                metrics,
                step1_history: step1.history.clone(),
                step2_history,
                frozen,
                audit,
                frozen_unchanged,
            },
        );
        if !frozen_unchanged {
            return Err(Failure::Numeric(format!(
                "{strategy}: frozen parameters changed during the second step"
            ))
            .into());
        }
    }

    let metrics_path = args.out.join(METRICS_FILE);
    write_json(
        &metrics_path,
        &OneshotSummary {
            scheme: scheme_name(args.scheme),
            majority_functions: majority.len(),
            skewed_size: prepared.skewed.len(),
            rebalanced_size: prepared.rebalanced.len(),
            test_size: prepared.test.len(),
            test_skipped: prepared.test_skipped,
            strategies: summary,
        },
    )?;
    manifest.metrics(metrics_path).extra(&reports)?;
    manifest.finish(&args.out)?;
    for (name, r) in &reports {
        eprintln!(
            "{name}: function {:.4}, channel {:.4}",
            r.metrics.function_accuracy, r.metrics.channel_accuracy
        );
    }
    Ok(())
}

fn prepare(
    settings: &Settings,
    train: &[Recipe],
    valid: &[Recipe],
    test: &[Recipe],
    skewed: &[Recipe],
    rebalanced: &[Recipe],
    target: Target,
) -> anyhow::Result<Prepared> {
    // The vocabulary only sees what the skewed training set contains.
    let vocab = vocab_from(skewed, settings.model.max_words);
    let all: Vec<Recipe> = train.iter().chain(valid).cloned().collect();
    let labels = LabelSpace::from_recipes(&all, target);
    let seq_len = settings.model.seq_len;
    let enc = |r: &[Recipe]| encode_known(r, &vocab, &labels, target, seq_len);
    let (skewed, _) = enc(skewed)?;
    let (rebalanced, _) = enc(rebalanced)?;
    let (valid, _) = enc(valid)?;
    let (test, test_skipped) = enc(test)?;
    Ok(Prepared {
        skewed,
        rebalanced,
        valid,
        test,
        test_skipped,
        vocab,
        labels,
    })
}

fn save_strategy(
    dir: &Path,
    model: &Model,
    prepared: &Prepared,
    seed: u64,
) -> anyhow::Result<PathBuf> {
    let path = dir.join(CHECKPOINT_FILE);
    save_bundle(
        &path,
        &Bundle {
            model: model.clone(),
            vocab: prepared.vocab.clone(),
            labels: prepared.labels.clone(),
            target: Target::TriggerFunction,
            seed,
        },
    )?;
    Ok(path)
}

fn scheme_name(scheme: Scheme) -> String {
    use clap::ValueEnum;
    scheme
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}
