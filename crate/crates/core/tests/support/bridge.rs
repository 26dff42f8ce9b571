//! Builds engine inputs from an oracle [`Toy`](super::oracle::Toy).

#![allow(dead_code)]

use trait_core::corpus::{CorpusBuilder, RawDocument};
use trait_core::sampler::{AlphaPrior, Assignment, Direction, Hyperparams, ModelState};
use trait_core::{Corpus, CorrespondenceGraph, PromotionTable, Vocabulary};

use super::oracle::Toy;

pub struct Engine {
    pub corpus: Corpus,
    pub graph: CorrespondenceGraph,
    pub promotion: PromotionTable,
    pub hyper: Hyperparams,
}

pub fn engine(toy: &Toy, epsilon: f64) -> Engine {
    let vocab = Vocabulary::from_terms((0..toy.vocab_size).map(|v| format!("v{v}"))).unwrap();
    let mut builder = CorpusBuilder::new().with_vocabulary(vocab);
    for d in 0..toy.num_docs {
        let sentences = (0..toy.num_sentences())
            .filter(|&i| toy.doc[i] == d)
            .map(|i| toy.words[i].iter().map(|v| format!("v{v}")).collect())
            .collect();
        builder.push(RawDocument {
            id: format!("d{d}"),
            attribute: format!("a{}", toy.doc_attr[d]),
            rating: None,
            sentences,
        });
    }
    let corpus = builder.build().unwrap();
    assert_eq!(corpus.num_sentences(), toy.num_sentences());

    let mut edges = Vec::new();
    for (i, list) in toy.neighbors.iter().enumerate() {
        edges.extend(list.iter().filter(|&&j| j > i).map(|&j| (i, j)));
    }
    let graph = CorrespondenceGraph::from_edges(toy.num_sentences(), 0.7, &edges).unwrap();
    let promotion = PromotionTable::from_lists(
        toy.promotion
            .iter()
            .map(|l| l.iter().map(|&(u, w)| (u as u32, w)).collect())
            .collect(),
    )
    .unwrap();

    let alpha = AlphaPrior::from_values(
        toy.num_sentiments,
        toy.vocab_size,
        toy.alpha.iter().flatten().copied().collect(),
    )
    .unwrap();
    let mut hyper = Hyperparams::new(toy.num_sentiments, toy.num_aspects, alpha);
    hyper.beta = toy.beta.clone();
    hyper.gamma = toy.gamma.clone();
    hyper.lambda = toy.lambda;
    hyper.epsilon = epsilon;
    Engine {
        corpus,
        graph,
        promotion,
        hyper,
    }
}

pub fn assignment(z: &[(usize, usize)]) -> Assignment {
    Assignment::new(
        z.iter().map(|&(s, _)| s as u16).collect(),
        z.iter().map(|&(_, t)| t as u16).collect(),
    )
    .unwrap()
}

/// The engine's normalized conditional for sentence `i` under labels `z`.
pub fn engine_conditional(e: &Engine, z: &[(usize, usize)], i: usize) -> Vec<f64> {
    let mut state =
        ModelState::from_assignment(&e.corpus, &e.graph, &e.promotion, e.hyper.clone(), assignment(z)).unwrap();
    let (s, t) = z[i];
    state.update_counts(i, s, t, Direction::Remove).unwrap();
    let raw = state.gibbs_conditional(i).unwrap();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}
