use rayon::prelude::*;

use super::{Hyperparams, ModelState};
use crate::corpus::Corpus;
use crate::error::Result;
use crate::graph::{CorrespondenceGraph, PromotionTable};

/// Per-sweep diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    /// One-based sweep number counted from initialization.
    pub sweep: u64,
    pub changed: usize,
    pub log_joint: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub sweeps: Vec<SweepRecord>,
}

impl TrainingTrace {
    pub fn log_joint(&self) -> Vec<f64> {
        self.sweeps.iter().map(|r| r.log_joint).collect()
    }
}

impl<'a> ModelState<'a> {
    /// Runs up to `hyper.burn_in + hyper.iterations` total sweeps, counting
    /// sweeps already done, and calls `observer` after each.
    pub fn run<F>(&mut self, mut observer: F) -> Result<TrainingTrace>
    where
        F: FnMut(&ModelState<'a>, &SweepRecord) -> Result<()>,
    {
        let target = self.hyper.total_sweeps() as u64;
        let mut trace = TrainingTrace::default();
        while self.sweeps_done < target {
            let stats = self.gibbs_sweep()?;
            let record = SweepRecord {
                sweep: self.sweeps_done,
                changed: stats.changed,
                log_joint: self.log_joint(),
            };
            observer(self, &record)?;
            trace.sweeps.push(record);
        }
        Ok(trace)
    }
}

/// Initializes a chain and runs it to completion. The final sample is the
/// point estimate.
pub fn train<'a>(
    corpus: &'a Corpus,
    graph: &'a CorrespondenceGraph,
    promotion: &'a PromotionTable,
    hyper: Hyperparams,
) -> Result<(ModelState<'a>, TrainingTrace)> {
    let mut state = ModelState::init(corpus, graph, promotion, hyper)?;
    let trace = state.run(|_, _| Ok(()))?;
    Ok((state, trace))
}

/// Independent chains, one per seed, run in parallel.
pub fn train_chains<'a>(
    corpus: &'a Corpus,
    graph: &'a CorrespondenceGraph,
    promotion: &'a PromotionTable,
    hyper: &Hyperparams,
    seeds: &[u64],
) -> Result<Vec<(ModelState<'a>, TrainingTrace)>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut h = hyper.clone();
            h.seed = seed;
            train(corpus, graph, promotion, h)
        })
        .collect()
}
