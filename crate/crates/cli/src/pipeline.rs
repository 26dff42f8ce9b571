use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use trait_core::corpus::write_corpus_jsonl;
use trait_core::estimates::{load_profiles, save_profiles};
use trait_core::sampler::Checkpoint;
use trait_core::{CorrespondenceGraph, ModelState, PosteriorEstimates};

use crate::config::{validate_config, RunConfig};
use crate::manifest::{outputs_intact, sha256_file, sha256_parts, Manifest, StageRecord, StageStatus};
use crate::{stages, CliError};

/// Artifact locations inside the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutputs {
    pub dir: PathBuf,
    pub corpus: PathBuf,
    pub graph: PathBuf,
    pub model: PathBuf,
    pub trace: PathBuf,
    pub estimates: PathBuf,
    pub profiles: PathBuf,
    pub coherence: PathBuf,
    pub classification: PathBuf,
    pub similarity: PathBuf,
    pub similarity_tsv: PathBuf,
    pub baseline: PathBuf,
    pub manifest: PathBuf,
}

impl PipelineOutputs {
    pub fn in_dir(dir: &Path) -> Self {
        let p = |name: &str| dir.join(name);
        PipelineOutputs {
            dir: dir.to_path_buf(),
            corpus: p("corpus.jsonl"),
            graph: p("graph.bin"),
            model: p("model.bin"),
            trace: p("trace.tsv"),
            estimates: p("estimates.json"),
            profiles: p("profiles.json"),
            coherence: p("coherence.json"),
            classification: p("classification.json"),
            similarity: p("similarity.json"),
            similarity_tsv: p("similarity.tsv"),
            baseline: p("baseline.json"),
            manifest: p("manifest.json"),
        }
    }

    /// Extra chains beyond the first.
    pub fn chain_model(&self, k: usize) -> PathBuf {
        self.dir.join(format!("model.chain{k}.bin"))
    }
}

struct Runner<'a> {
    force: bool,
    previous: Option<Manifest>,
    manifest: Manifest,
    manifest_path: &'a Path,
}

impl Runner<'_> {
    /// Runs `body` unless a previous run with the same key left intact
    /// outputs. Returns the output hashes.
    fn stage(
        &mut self,
        name: &str,
        key_parts: &[&str],
        outputs: &[&Path],
        body: impl FnOnce() -> Result<()>,
    ) -> Result<BTreeMap<PathBuf, String>> {
        let key = sha256_parts(std::iter::once(name).chain(key_parts.iter().copied()));
        if !self.force {
            if let Some(prev) = self.previous.as_ref().and_then(|m| m.stage(name)) {
                let same_outputs = outputs.iter().all(|p| prev.outputs.contains_key(*p));
                if prev.key == key && prev.status != StageStatus::Failed && same_outputs && outputs_intact(prev) {
                    info!("{name}: cached");
                    let outputs = prev.outputs.clone();
                    self.manifest.stages.push(StageRecord {
                        status: StageStatus::Cached,
                        seconds: 0.0,
                        ..prev.clone()
                    });
                    return Ok(outputs);
                }
            }
        }
        info!("{name}: running");
        let start = Instant::now();
        let result = body();
        let mut record = StageRecord {
            name: name.to_string(),
            key,
            status: StageStatus::Ran,
            seconds: start.elapsed().as_secs_f64(),
            outputs: BTreeMap::new(),
            error: None,
        };
        for p in outputs {
            if p.is_file() {
                record.outputs.insert(p.to_path_buf(), sha256_file(p)?);
            }
        }
        if let Err(e) = &result {
            record.status = StageStatus::Failed;
            record.error = Some(format!("{e:#}"));
        }
        let hashes = record.outputs.clone();
        self.manifest.stages.push(record);
        self.manifest.save(self.manifest_path)?;
        result.with_context(|| format!("stage {name} failed"))?;
        Ok(hashes)
    }
}

fn optional_hash(path: Option<&PathBuf>) -> Result<String> {
    path.map(|p| sha256_file(p)).transpose().map(|h| h.unwrap_or_default())
}

/// Runs every stage in order, reusing outputs from a previous run with the
/// same inputs unless `force` is set.
pub fn run_pipeline(config: &RunConfig, force: bool) -> std::result::Result<Manifest, CliError> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(CliError::Validation(violations));
    }
    Ok(run_validated(config, force)?)
}

fn run_validated(config: &RunConfig, force: bool) -> Result<Manifest> {
    let out = PipelineOutputs::in_dir(&config.paths.output_dir);
    fs::create_dir_all(&out.dir).with_context(|| format!("creating {}", out.dir.display()))?;
    let previous = if out.manifest.is_file() {
        Manifest::load(&out.manifest).map_err(|e| warn!("ignoring previous manifest: {e:#}")).ok()
    } else {
        None
    };

    let config_json = serde_json::to_string(config)?;
    let mut manifest = Manifest::new(config.seed, sha256_parts([config_json.as_str()]));
    let paths = &config.paths;
    let corpus_hash = sha256_file(&paths.corpus)?;
    let sent_hash = optional_hash(paths.sentence_embeddings.as_ref())?;
    let word_hash = optional_hash(paths.word_embeddings.as_ref())?;
    manifest.inputs.insert(paths.corpus.clone(), corpus_hash.clone());
    for p in [&paths.sentence_embeddings, &paths.word_embeddings].into_iter().flatten() {
        manifest.inputs.insert(p.clone(), sha256_file(p)?);
    }
    let mut run = Runner {
        force,
        previous,
        manifest,
        manifest_path: &out.manifest,
    };
    let m = &config.model;
    let sentence_emb = paths.sentence_embeddings.as_deref().filter(|_| m.lambda > 0.0);

    let norm_json = serde_json::to_string(&config.normalization)?;
    let h = run.stage("preprocess", &[&corpus_hash, &norm_json], &[&out.corpus], || {
        let corpus = stages::preprocess(&paths.corpus, &config.normalization)?;
        info!(
            "corpus: {} documents, {} sentences, {} terms",
            corpus.num_documents(),
            corpus.num_sentences(),
            corpus.vocabulary().len()
        );
        Ok(write_corpus_jsonl(&corpus, &out.corpus)?)
    })?;
    let corpus_out = h[&out.corpus].clone();

    let rho = m.rho.to_string();
    let graph_sent_hash = if sentence_emb.is_some() { sent_hash.as_str() } else { "" };
    let h = run.stage("graph", &[&corpus_out, graph_sent_hash, &rho], &[&out.graph], || {
        let corpus = stages::load_tokenized(&out.corpus)?;
        Ok(stages::build_graph(&corpus, sentence_emb, m.rho)?.save(&out.graph)?)
    })?;
    let graph_out = h[&out.graph].clone();

    let model_json = serde_json::to_string(m)?;
    let seed = config.seed.to_string();
    let mut model_outputs: Vec<PathBuf> = vec![out.model.clone(), out.trace.clone()];
    model_outputs.extend((1..m.chains).map(|k| out.chain_model(k)));
    let model_refs: Vec<&Path> = model_outputs.iter().map(|p| p.as_path()).collect();
    let h = run.stage(
        "train",
        &[&corpus_out, &graph_out, &word_hash, &model_json, &norm_json, &seed],
        &model_refs,
        || {
            let corpus = stages::load_tokenized(&out.corpus)?;
            let graph = CorrespondenceGraph::load(&out.graph)?;
            let promotion = stages::build_promotions(&corpus, paths.word_embeddings.as_deref(), m)?;
            let hyper = stages::hyperparams(m, &corpus, &config.normalization, config.seed)?;
            let results: Vec<(Checkpoint, Vec<_>)> = (0..m.chains)
                .into_par_iter()
                .map(|k| {
                    let mut h = hyper.clone();
                    h.seed = config.seed + k as u64;
                    let state = ModelState::init(&corpus, &graph, &promotion, h)?;
                    let label = if m.chains > 1 { format!("chain {k}: ") } else { String::new() };
                    stages::run_chain(state, config.evaluation.log_interval, &label)
                })
                .collect::<Result<_>>()?;
            for (k, (ckpt, trace)) in results.iter().enumerate() {
                let path = if k == 0 { out.model.clone() } else { out.chain_model(k) };
                ckpt.save(&path)?;
                if let Some(last) = trace.last() {
                    info!("chain {k}: final log-joint {:.3}", last.log_joint);
                }
            }
            let traces: Vec<_> = results.into_iter().map(|(_, t)| t).collect();
            stages::write_trace(&out.trace, &traces)
        },
    )?;
    let model_out = h[&out.model].clone();

    let h = run.stage("estimate", &[&model_out], &[&out.estimates], || {
        let ckpt = Checkpoint::load(&out.model)?;
        Ok(PosteriorEstimates::from_checkpoint(&ckpt)?.save(&out.estimates)?)
    })?;
    let est_out = h[&out.estimates].clone();

    let top_aspects = config.evaluation.top_aspects.to_string();
    let h = run.stage("profile", &[&est_out, &top_aspects], &[&out.profiles], || {
        let est = PosteriorEstimates::load(&out.estimates)?;
        Ok(save_profiles(&stages::profiles(&est, config.evaluation.top_aspects), &out.profiles)?)
    })?;
    let profiles_out = h[&out.profiles].clone();

    let top_words = config.evaluation.top_words.to_string();
    let mut eval_outputs = vec![
        out.coherence.as_path(),
        out.classification.as_path(),
        out.similarity.as_path(),
        out.similarity_tsv.as_path(),
    ];
    if paths.sentence_embeddings.is_some() {
        eval_outputs.push(&out.baseline);
    }
    run.stage(
        "evaluate",
        &[&est_out, &profiles_out, &corpus_out, &word_hash, &sent_hash, &top_words],
        &eval_outputs,
        || {
            let est = PosteriorEstimates::load(&out.estimates)?;
            let corpus = stages::load_tokenized(&out.corpus)?;
            let coherence = stages::coherence(&est, &corpus, paths.word_embeddings.as_deref(), config.evaluation.top_words)?;
            stages::write_json(&out.coherence, &coherence)?;
            let classification = match stages::classification(&est, &corpus) {
                Ok(report) => report,
                Err(e) => {
                    warn!("classification skipped: {e:#}");
                    serde_json::json!({ "skipped": format!("{e:#}") })
                }
            };
            stages::write_json(&out.classification, &classification)?;
            stages::similarity(&load_profiles(&out.profiles)?, &out.similarity, &out.similarity_tsv)?;
            if let Some(sent) = &paths.sentence_embeddings {
                stages::baseline(&corpus, sent, &out.baseline)?;
            }
            Ok(())
        },
    )?;

    run.manifest.save(&out.manifest)?;
    Ok(run.manifest)
}
