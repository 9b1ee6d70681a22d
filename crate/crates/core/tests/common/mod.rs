#![allow(dead_code)]

use cxgvar_core::embeddings::{CategoryCentroid, CategoryInventory, EmbeddingTable, Embeddings, Space};
use cxgvar_core::grammar::{Construction, Grammar, SlotConstraint, Stage};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VOCAB: usize = 30;

pub fn vocab_word(i: usize) -> String {
    format!("w{i}")
}

fn random_table(rng: &mut ChaCha8Rng, space: Space) -> EmbeddingTable<f64> {
    let mut text = String::new();
    for i in 0..VOCAB {
        let v: Vec<String> = (0..3).map(|_| format!("{}", rng.gen_range(-1.0..1.0))).collect();
        text.push_str(&format!("{}\t{}\n", vocab_word(i), v.join(" ")));
    }
    EmbeddingTable::parse(&text, space).unwrap()
}

/// Random tables over `w0..w29`, five SYN categories (ids 0..5) and five
/// SEM categories (ids 10..15).
pub fn random_embeddings(seed: u64) -> Embeddings<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let syn = random_table(&mut rng, Space::Syn);
    let sem = random_table(&mut rng, Space::Sem);
    let mut cats = Vec::new();
    for (base, space) in [(0, Space::Syn), (10, Space::Sem)] {
        for k in 0..5 {
            let v = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            cats.push(
                CategoryCentroid::new(base + k, space, v, rng.gen_range(0.0..0.9), format!("c{}", base + k)).unwrap(),
            );
        }
    }
    Embeddings::new(syn, sem, CategoryInventory::new(cats).unwrap()).unwrap()
}

pub fn random_slot(rng: &mut ChaCha8Rng, early: bool) -> SlotConstraint {
    match if early { 1 } else { rng.gen_range(0..3) } {
        0 => SlotConstraint::Lex(if rng.gen_bool(0.9) {
            vocab_word(rng.gen_range(0..VOCAB))
        } else {
            "oov".into()
        }),
        1 => SlotConstraint::Syn(rng.gen_range(0..5)),
        _ => SlotConstraint::Sem(rng.gen_range(10..15)),
    }
}

pub fn random_grammar(seed: u64, size: usize, embeddings: &Embeddings<f64>) -> Grammar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let micros = rng.gen_range(1..=size.clamp(1, 8));
    let macros = rng.gen_range(1..=micros);
    let mut ids: Vec<u32> = (0..(size as u32 * 3)).collect();
    ids.shuffle(&mut rng);
    let constructions = (0..size)
        .map(|i| {
            let early = rng.gen_bool(0.3);
            let micro = rng.gen_range(0..micros) as u32;
            Construction {
                id: ids[i],
                stage: if early { Stage::Early } else { Stage::Late },
                micro,
                macro_: micro % macros as u32,
                slots: (0..rng.gen_range(1..=4))
                    .map(|_| random_slot(&mut rng, early))
                    .collect(),
            }
        })
        .collect();
    Grammar::new(constructions, &embeddings.categories).unwrap()
}

pub fn random_tokens(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.95) {
                vocab_word(rng.gen_range(0..VOCAB))
            } else {
                "unseen".into()
            }
        })
        .collect()
}
