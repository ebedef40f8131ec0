use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use lattn_core::corpus::{encode, tokenize, Recipe, Slot, Target};
use lattn_core::eval::{
    arg_f1, ensemble_table, evaluate, fit_arg_model, predict_args as predict_slot,
    rank_by_validation, ArgPrediction, Ensemble, EnsembleRow, Metrics,
};
use lattn_core::models::{
    predict_label, tiny_gradient_check, Architecture, AttentionKind, Bundle, Model,
};
use lattn_core::Error;
use serde::Serialize;

use crate::cli::{DumpArgs, EnsembleArgs, EvalArgs, GradcheckArgs, PredictArgsArgs};
use crate::data::{encode_known, read_recipes, read_subset};
use crate::manifest::{create_dir, write_json, ManifestBuilder};
use crate::train::METRICS_FILE;
use crate::Failure;

pub const TABLE_FILE: &str = "table.txt";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";

fn load_bundle(path: &Path) -> anyhow::Result<Bundle> {
    Bundle::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

#[derive(Serialize)]
struct EvalReport {
    metrics: Metrics,
    /// Recipes whose gold label the model cannot output.
    skipped: usize,
}

pub fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("eval");
    let bundle = load_bundle(&args.checkpoint)?;
    manifest.input(&args.checkpoint)?.seed(bundle.seed);
    let recipes = read_recipes(&args.data)?;
    manifest.input(&args.data)?;
    let subset = match &args.subset_file {
        Some(p) => {
            manifest.input(p)?;
            Some(read_subset(p)?)
        }
        None => None,
    };
    let seq_len = bundle.model.config().seq_len;
    let (examples, skipped) = encode_known(
        &recipes,
        &bundle.vocab,
        &bundle.labels,
        bundle.target,
        seq_len,
    )?;
    let metrics = evaluate(&bundle.model, &examples, &bundle.labels, subset.as_ref())?;
    create_dir(&args.out)?;
    let path = args.out.join(METRICS_FILE);
    write_json(
        &path,
        &EvalReport {
            metrics: metrics.clone(),
            skipped,
        },
    )?;
    manifest
        .config(bundle.model.config())?
        .checkpoint(args.checkpoint.clone())
        .metrics(path);
    manifest.finish(&args.out)?;
    println!(
        "function {:.4}  channel {:.4}  ({} examples, {} skipped)",
        metrics.function_accuracy, metrics.channel_accuracy, metrics.count, skipped
    );
    Ok(())
}

#[derive(Serialize)]
struct RankEntry {
    checkpoint: PathBuf,
    seed: u64,
    valid_accuracy: f64,
}

#[derive(Serialize)]
struct EnsembleReport {
    ranking: Vec<RankEntry>,
    rows: Vec<EnsembleRow>,
    test_skipped: usize,
}

pub fn ensemble_eval(args: EnsembleArgs) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("ensemble-eval");
    let mut bundles = Vec::with_capacity(args.checkpoints.len());
    for path in &args.checkpoints {
        bundles.push(load_bundle(path)?);
        manifest.input(path)?;
    }
    let first = &bundles[0];
    for (b, path) in bundles.iter().zip(&args.checkpoints).skip(1) {
        if b.vocab != first.vocab
            || b.labels != first.labels
            || b.target != first.target
            || b.model.config().seq_len != first.model.config().seq_len
        {
            return Err(Error::Data(format!(
                "{} does not share vocabulary, labels, target and sequence length with {}",
                path.display(),
                args.checkpoints[0].display()
            ))
            .into());
        }
    }
    let k_max = args.k.unwrap_or(bundles.len());
    if k_max == 0 || k_max > bundles.len() {
        return Err(
            Failure::Usage(format!("--k must be in 1..={}, got {k_max}", bundles.len())).into(),
        );
    }
    let valid = read_recipes(&args.valid)?;
    manifest.input(&args.valid)?;
    let test = read_recipes(&args.test)?;
    manifest.input(&args.test)?;
    let subset = match &args.subset_file {
        Some(p) => {
            manifest.input(p)?;
            Some(read_subset(p)?)
        }
        None => None,
    };

    let (vocab, labels, target) = (&first.vocab, &first.labels, first.target);
    let seq_len = first.model.config().seq_len;
    let (valid_set, _) = encode_known(&valid, vocab, labels, target, seq_len)?;
    let (test_set, test_skipped) = encode_known(&test, vocab, labels, target, seq_len)?;

    let candidates: Vec<(u64, &Model)> = bundles.iter().map(|b| (b.seed, &b.model)).collect();
    let ranked = rank_by_validation(&candidates, &valid_set)?;
    let mut rows = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let members: Vec<&Model> = ranked[..k].iter().map(|(i, _)| candidates[*i].1).collect();
        let ensemble = Ensemble::new(members)?;
        let metrics = evaluate(&ensemble, &test_set, labels, subset.as_ref())?;
        rows.push(EnsembleRow { k, metrics });
    }
    let table = ensemble_table(&rows);
    create_dir(&args.out)?;
    std::fs::write(args.out.join(TABLE_FILE), &table)?;
    let report = EnsembleReport {
        ranking: ranked
            .iter()
            .map(|(i, acc)| RankEntry {
                checkpoint: args.checkpoints[*i].clone(),
                seed: candidates[*i].0,
                valid_accuracy: *acc,
            })
            .collect(),
        rows,
        test_skipped,
    };
    let path = args.out.join(METRICS_FILE);
    write_json(&path, &report)?;
    manifest.config(first.model.config())?.metrics(path);
    manifest.finish(&args.out)?;
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct ArgRecord<'a> {
    description: &'a str,
    trigger_function: &'a str,
    action_function: &'a str,
    args: BTreeMap<Slot, BTreeMap<String, String>>,
}

#[derive(Serialize)]
struct ArgReport {
    f1: f64,
    count: usize,
    /// Recipes without argument annotations.
    skipped: usize,
    trigger_source: &'static str,
    action_source: &'static str,
}

/// Predicts one slot's function per recipe, or takes the gold one.
fn functions_for(
    recipes: &[&Recipe],
    bundle: Option<&Bundle>,
    slot: Slot,
) -> anyhow::Result<Vec<String>> {
    let Some(bundle) = bundle else {
        return Ok(recipes
            .iter()
            .map(|r| r.function(slot).to_string())
            .collect());
    };
    if bundle.target.slot() != slot {
        return Err(Failure::Usage(format!(
            "checkpoint predicts {} functions, expected {slot}",
            bundle.target.slot()
        ))
        .into());
    }
    let seq_len = bundle.model.config().seq_len;
    recipes
        .iter()
        .map(|r| {
            let ids = encode(&tokenize(&r.description), &bundle.vocab, seq_len)?;
            let id = predict_label(&bundle.model.predict_proba(&ids)?);
            Ok(bundle.labels.function(id)?.to_string())
        })
        .collect()
}

pub fn predict_args(args: PredictArgsArgs) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("predict-args");
    let train = read_recipes(&args.train)?;
    manifest.input(&args.train)?;
    let data = read_recipes(&args.data)?;
    manifest.input(&args.data)?;
    let mut load = |p: &Option<PathBuf>| -> anyhow::Result<Option<Bundle>> {
        match p {
            Some(p) => {
                manifest.input(p)?;
                Ok(Some(load_bundle(p)?))
            }
            None => Ok(None),
        }
    };
    let trigger_model = load(&args.trigger_checkpoint)?;
    let action_model = load(&args.action_checkpoint)?;

    let table = fit_arg_model(&train);
    let annotated: Vec<&Recipe> = data.iter().filter(|r| r.args.is_some()).collect();
    let skipped = data.len() - annotated.len();
    let triggers = functions_for(&annotated, trigger_model.as_ref(), Slot::Trigger)?;
    let actions = functions_for(&annotated, action_model.as_ref(), Slot::Action)?;

    create_dir(&args.out)?;
    let file = std::fs::File::create(args.out.join(PREDICTIONS_FILE))?;
    let mut out = BufWriter::new(file);
    let mut predictions: Vec<ArgPrediction> = Vec::with_capacity(annotated.len());
    let mut gold = Vec::with_capacity(annotated.len());
    for ((recipe, t), a) in annotated.iter().zip(&triggers).zip(&actions) {
        let mut pred = ArgPrediction::new();
        pred.insert(Slot::Trigger, predict_slot(&table, Slot::Trigger, t));
        pred.insert(Slot::Action, predict_slot(&table, Slot::Action, a));
        let printable = pred
            .iter()
            .map(|(slot, m)| {
                let m = m.iter().map(|(k, v)| (k.clone(), v.to_string())).collect();
                (*slot, m)
            })
            .collect();
        serde_json::to_writer(
            &mut out,
            &ArgRecord {
                description: &recipe.description,
                trigger_function: t,
                action_function: a,
                args: printable,
            },
        )?;
        out.write_all(b"\n")?;
        predictions.push(pred);
        gold.push(recipe.args.clone().unwrap_or_default());
    }
    out.flush()?;

    let source = |b: &Option<Bundle>| if b.is_some() { "model" } else { "gold" };
    let report = ArgReport {
        f1: arg_f1(&predictions, &gold),
        count: predictions.len(),
        skipped,
        trigger_source: source(&trigger_model),
        action_source: source(&action_model),
    };
    let path = args.out.join(METRICS_FILE);
    write_json(&path, &report)?;
    manifest.metrics(path);
    manifest.finish(&args.out)?;
    println!("argument F1 {:.4} over {} recipes", report.f1, report.count);
    Ok(())
}

pub fn gradcheck(args: GradcheckArgs) -> anyhow::Result<()> {
    let archs: Vec<Architecture> = match args.model {
        Some(a) => vec![a],
        None => Architecture::all().to_vec(),
    };
    let mut worst = 0.0f64;
    for arch in archs {
        let report = tiny_gradient_check(arch, args.tie_embeddings, args.seed, args.eps)?;
        println!(
            "{:<14} max rel error {:.3e} at {}[{}] (analytic {:.6e}, numeric {:.6e}, {} entries)",
            arch.to_string(),
            report.max_rel_error,
            report.worst_param,
            report.worst_index,
            report.worst_analytic,
            report.worst_numeric,
            report.checked
        );
        worst = worst.max(report.max_rel_error);
    }
    if !(worst < args.tolerance) {
        return Err(Failure::Numeric(format!(
            "max relative error {worst:.3e} is not below {:.0e}",
            args.tolerance
        ))
        .into());
    }
    Ok(())
}

#[derive(Serialize)]
struct SlotAttention {
    function: String,
    latent: Vec<f64>,
    active: Vec<f64>,
}

#[derive(Serialize)]
struct AttentionRecord<'a> {
    description: &'a str,
    tokens: Vec<String>,
    trigger: SlotAttention,
    action: Option<SlotAttention>,
}

fn latent_bundle(path: &Path, expected: Target) -> anyhow::Result<Bundle> {
    let bundle = load_bundle(path)?;
    if bundle.model.config().arch.attention != AttentionKind::Latent {
        return Err(Failure::Usage(format!(
            "{} holds a {} model; attention dumps need Latent Attention",
            path.display(),
            bundle.model.config().arch
        ))
        .into());
    }
    if bundle.target != expected {
        return Err(Failure::Usage(format!(
            "{} predicts {}, expected {expected}",
            path.display(),
            bundle.target
        ))
        .into());
    }
    Ok(bundle)
}

fn slot_attention(bundle: &Bundle, ids: &[usize]) -> anyhow::Result<SlotAttention> {
    let diag = bundle.model.latent_attention_forward(ids)?;
    let id = predict_label(&diag.probs);
    Ok(SlotAttention {
        function: bundle.labels.function(id)?.to_string(),
        latent: diag.latent,
        active: diag.active,
    })
}

pub fn dump_attention(args: DumpArgs) -> anyhow::Result<()> {
    let trigger = latent_bundle(&args.checkpoint, Target::TriggerFunction)?;
    let action = match &args.action_checkpoint {
        Some(p) => Some(latent_bundle(p, Target::ActionFunction)?),
        None => None,
    };
    let recipes = read_recipes(&args.data)?;
    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    for recipe in &recipes {
        let tokens = tokenize(&recipe.description);
        let ids = encode(&tokens, &trigger.vocab, trigger.model.config().seq_len)?;
        let trigger_att = slot_attention(&trigger, &ids)?;
        let action_att = match &action {
            Some(b) => {
                let ids = encode(&tokens, &b.vocab, b.model.config().seq_len)?;
                Some(slot_attention(b, &ids)?)
            }
            None => None,
        };
        let shown = ids
            .iter()
            .map(|&i| trigger.vocab.token(i).unwrap_or("<UNK>").to_string())
            .collect();
        serde_json::to_writer(
            &mut out,
            &AttentionRecord {
                description: &recipe.description,
                tokens: shown,
                trigger: trigger_att,
                action: action_att,
            },
        )?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
