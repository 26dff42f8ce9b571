use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use trait_core::corpus::write_corpus_jsonl;
use trait_core::estimates::{load_profiles, save_profiles, DEFAULT_TOP_ASPECTS, DEFAULT_TOP_WORDS};
use trait_core::graph::{DEFAULT_PROMOTION_THRESHOLD, DEFAULT_PROMOTION_TOP_K, DEFAULT_RHO};
use trait_core::sampler::{generate_synthetic, Checkpoint, SyntheticSpec};
use trait_core::{CorrespondenceGraph, ModelState, NormalizationConfig, PosteriorEstimates};

use crate::config::{ModelConfig, RunConfig};
use crate::{pipeline, stages, CliError};

#[derive(Debug, Parser)]
#[command(name = "trait", version, about = "Aspect and sentiment discovery for attribute-tagged reviews")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a raw corpus into pre-tokenized JSONL.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML normalization table; defaults apply otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Build the sentence correspondence graph.
    Graph {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        sent_emb: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RHO)]
        rho: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Gibbs sampler and write a checkpoint.
    Train(TrainArgs),
    /// Posterior estimates from a checkpoint.
    Estimate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ranked aspect profiles per attribute value.
    Profile {
        #[arg(long)]
        est: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOP_ASPECTS)]
        top: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// NPMI and embedding coherence of the top words of each topic.
    Coherence {
        #[arg(long)]
        est: PathBuf,
        /// Reference corpus for co-occurrence counts (pre-tokenized).
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        word_emb: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOP_WORDS)]
        topn: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Document sentiment classification against ratings.
    Classify {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Jensen-Shannon distances between attribute profiles.
    Similarity {
        #[arg(long)]
        profiles: PathBuf,
        /// JSON output; a TSV is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Review-embedding cosine baseline between attribute values.
    BaselineSim {
        #[arg(long)]
        sent_emb: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "attribute", value_parser = ["attribute"])]
        group_by: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with planted parameters.
    Synth(SynthArgs),
    /// Run every stage from a TOML configuration.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `paths.output_dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Rerun stages even when cached outputs are intact.
        #[arg(long)]
        force: bool,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Correspondence graph; without it the MRF term is inactive.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub word_emb: Option<PathBuf>,
    #[arg(long = "T", default_value_t = 20)]
    pub aspects: usize,
    #[arg(long = "S", default_value_t = 2)]
    pub sentiments: usize,
    #[arg(long, default_value_t = trait_core::sampler::DEFAULT_ITERATIONS)]
    pub iters: usize,
    #[arg(long, default_value_t = trait_core::sampler::DEFAULT_BURN_IN)]
    pub burn: usize,
    #[arg(long, default_value_t = trait_core::sampler::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_PROMOTION_THRESHOLD)]
    pub promotion_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_PROMOTION_TOP_K)]
    pub promotion_top_k: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Independent chains seeded `seed, seed + 1, ...`; chain k > 0 is
    /// written to `<out>.chain<k>`.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Continue a checkpoint; `--iters` then sets the new post-burn-in total.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Normalization table used to stem the sentiment lexicon.
    #[arg(long)]
    pub norm_config: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub log_every: usize,
    /// Per-sweep log-joint as TSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    pub docs: usize,
    #[arg(long, default_value_t = 2)]
    pub attributes: usize,
    #[arg(long = "S", default_value_t = 2)]
    pub sentiments: usize,
    #[arg(long = "T", default_value_t = 4)]
    pub aspects: usize,
    #[arg(long, default_value_t = 200)]
    pub vocab: usize,
    /// Symmetric Dirichlet parameter of each word distribution.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Corpus JSONL; planted parameters go to `<out>.truth.json`.
    #[arg(long)]
    pub out: PathBuf,
}

fn emit(value: &impl serde::Serialize, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => stages::write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn read_normalization(path: Option<&Path>) -> Result<NormalizationConfig, CliError> {
    let Some(path) = path else {
        return Ok(NormalizationConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Preprocess { input, out, config } => {
            let norm = read_normalization(config.as_deref())?;
            let corpus = stages::preprocess(&input, &norm)?;
            write_corpus_jsonl(&corpus, &out)?;
            info!("wrote {} documents to {}", corpus.num_documents(), out.display());
        }
        Command::Graph {
            corpus,
            sent_emb,
            rho,
            out,
        } => {
            let corpus = stages::load_tokenized(&corpus)?;
            stages::build_graph(&corpus, Some(&sent_emb), rho)?.save(&out)?;
        }
        Command::Train(args) => train(args)?,
        Command::Estimate { model, out } => {
            let ckpt = Checkpoint::load(&model)?;
            PosteriorEstimates::from_checkpoint(&ckpt)?.save(&out)?;
        }
        Command::Profile { est, top, out } => {
            if top == 0 {
                return Err(CliError::Validation(vec!["--top: must be ≥ 1".into()]));
            }
            let est = PosteriorEstimates::load(&est)?;
            save_profiles(&stages::profiles(&est, top), &out)?;
        }
        Command::Coherence {
            est,
            corpus,
            word_emb,
            topn,
            out,
        } => {
            let est = PosteriorEstimates::load(&est)?;
            let corpus = stages::load_tokenized(&corpus)?;
            let report = stages::coherence(&est, &corpus, word_emb.as_deref(), topn)?;
            emit(&report, out.as_deref())?;
        }
        Command::Classify { est, corpus, out } => {
            let est = PosteriorEstimates::load(&est)?;
            let corpus = stages::load_tokenized(&corpus)?;
            emit(&stages::classification(&est, &corpus)?, out.as_deref())?;
        }
        Command::Similarity { profiles, out } => {
            let profiles = load_profiles(&profiles)?;
            match out {
                Some(out) => stages::similarity(&profiles, &out, &out.with_extension("tsv"))?,
                None => {
                    let m = trait_core::eval::profile_distance_matrix(&profiles)?;
                    print!("{}", m.to_tsv());
                }
            }
        }
        Command::BaselineSim {
            sent_emb,
            corpus,
            group_by: _,
            out,
        } => {
            let corpus = stages::load_tokenized(&corpus)?;
            let emb = trait_core::EmbeddingTable::load(&sent_emb)?;
            emit(&trait_core::eval::baseline_matrix(&corpus, &emb)?, out.as_deref())?;
        }
        Command::Synth(args) => synth(args)?,
        Command::Pipeline {
            config,
            out_dir,
            seed,
            force,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(dir) = out_dir {
                cfg.paths.output_dir = dir;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let manifest = pipeline::run_pipeline(&cfg, force)?;
            for s in &manifest.stages {
                info!("{}: {:?} in {:.2}s", s.name, s.status, s.seconds);
            }
        }
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let norm = read_normalization(args.norm_config.as_deref())?;
    let corpus = stages::load_tokenized(&args.corpus)?;
    let graph = match &args.graph {
        Some(p) => CorrespondenceGraph::load(p)?,
        None => CorrespondenceGraph::empty(corpus.num_sentences()),
    };
    let model = ModelConfig {
        sentiments: args.sentiments,
        aspects: args.aspects,
        lambda: args.lambda,
        epsilon: args.epsilon,
        promotion_threshold: args.promotion_threshold,
        promotion_top_k: args.promotion_top_k,
        iterations: args.iters,
        burn_in: args.burn,
        chains: args.chains,
        ..ModelConfig::default()
    };
    if args.epsilon > 0.0 && args.word_emb.is_none() {
        return Err(CliError::Validation(vec!["--word-emb: required when epsilon > 0".into()]));
    }
    if args.chains == 0 {
        return Err(CliError::Validation(vec!["--chains: must be ≥ 1".into()]));
    }

    if let Some(resume) = &args.resume {
        let mut ckpt = Checkpoint::load(resume)?;
        let mut model = model;
        model.epsilon = ckpt.hyper.epsilon;
        let promotion = stages::build_promotions(&corpus, args.word_emb.as_deref(), &model)?;
        ckpt.hyper.iterations = args.iters;
        let state = ModelState::resume(&corpus, &graph, &promotion, ckpt)?;
        let (ckpt, trace) = stages::run_chain(state, args.log_every, "")?;
        ckpt.save(&args.out)?;
        if let Some(path) = &args.trace {
            stages::write_trace(path, &[trace])?;
        }
        return Ok(());
    }

    let promotion = stages::build_promotions(&corpus, args.word_emb.as_deref(), &model)?;
    let hyper = stages::hyperparams(&model, &corpus, &norm, args.seed)?;
    let results = (0..args.chains)
        .into_par_iter()
        .map(|k| {
            let mut h = hyper.clone();
            h.seed = args.seed + k as u64;
            let state = ModelState::init(&corpus, &graph, &promotion, h)?;
            let label = if args.chains > 1 { format!("chain {k}: ") } else { String::new() };
            stages::run_chain(state, args.log_every, &label)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut traces = Vec::new();
    for (k, (ckpt, trace)) in results.into_iter().enumerate() {
        let path = if k == 0 { args.out.clone() } else { with_suffix(&args.out, &format!(".chain{k}")) };
        ckpt.save(&path)?;
        if let Some(last) = trace.last() {
            println!("chain {k} (seed {}): final log-joint {:.6}", ckpt.hyper.seed, last.log_joint);
        }
        traces.push(trace);
    }
    if let Some(path) = &args.trace {
        stages::write_trace(path, &traces)?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec::symmetric(
        args.docs,
        args.attributes,
        args.sentiments,
        args.aspects,
        args.vocab,
        args.alpha,
        args.gamma,
        args.beta,
    );
    let synth = generate_synthetic(&spec, &mut ChaCha8Rng::seed_from_u64(args.seed))?;
    write_corpus_jsonl(&synth.corpus, &args.out)?;
    let truth = serde_json::json!({
        "seed": args.seed,
        "phi": synth.phi,
        "psi": synth.psi,
        "theta": synth.theta,
        "sentiments": synth.sentiments,
        "aspects": synth.aspects,
    });
    let truth_path = with_suffix(&args.out, ".truth.json");
    stages::write_json(&truth_path, &truth).context("writing planted parameters")?;
    Ok(())
}
