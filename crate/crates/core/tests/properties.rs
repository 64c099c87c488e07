//! Randomized properties over the similarity, dedup, intensity, and
//! clustering primitives. These complement the unit tests with invariants
//! that must hold on arbitrary inputs, not just curated examples.

use newsflow_core::analysis::cluster_seeds;
use newsflow_core::corpus::Phrase;
use newsflow_core::dedup::{
    build_canonical_map, coarse_similarity, fine_similarity, EmbeddingTable,
};
use newsflow_core::graph::CountSeries;
use newsflow_core::hawkes::{intensity, DelayKernel, HawkesParams};
use proptest::prelude::*;

const TOKENS: [&str; 6] = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"];

fn arb_phrase() -> impl Strategy<Value = Phrase> {
    prop::collection::vec(0usize..TOKENS.len(), 1..4).prop_map(|idxs| {
        let text = idxs.iter().map(|&i| TOKENS[i]).collect::<Vec<_>>().join(" ");
        Phrase::parse(&text).expect("non-empty phrase")
    })
}

/// Embeddings covering a random prefix of the token pool, so some phrases
/// are partially or fully out of vocabulary.
fn arb_embeddings() -> impl Strategy<Value = EmbeddingTable> {
    (
        1usize..=TOKENS.len(),
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), TOKENS.len()),
    )
        .prop_map(|(covered, vectors)| {
            let mut emb = EmbeddingTable::new(3);
            for (token, vector) in TOKENS.iter().take(covered).zip(vectors) {
                emb.insert(token, vector);
            }
            emb
        })
}

proptest! {
    #[test]
    fn coarse_similarity_is_symmetric_and_bounded(p in arb_phrase(), q in arb_phrase()) {
        let forward = coarse_similarity(&p, &q);
        let backward = coarse_similarity(&q, &p);
        prop_assert_eq!(forward.to_bits(), backward.to_bits());
        prop_assert!((0.0..=1.0).contains(&forward));
    }

    #[test]
    fn coarse_self_similarity_is_one(p in arb_phrase()) {
        prop_assert_eq!(coarse_similarity(&p, &p), 1.0);
    }

    #[test]
    fn fine_similarity_is_exactly_symmetric(
        p in arb_phrase(),
        q in arb_phrase(),
        emb in arb_embeddings(),
    ) {
        let forward = fine_similarity(&p, &q, &emb);
        let backward = fine_similarity(&q, &p, &emb);
        prop_assert_eq!(forward.value.to_bits(), backward.value.to_bits());
        prop_assert_eq!(forward.fully_oov, backward.fully_oov);
        prop_assert!(forward.value.is_finite());
        if forward.fully_oov {
            prop_assert_eq!(forward.value, 0.0);
        }
    }

    #[test]
    fn canonical_map_representatives_are_fixed_points(
        phrases in prop::collection::btree_set(arb_phrase(), 1..12),
        emb in arb_embeddings(),
    ) {
        let vocab: Vec<(Phrase, u64)> =
            phrases.iter().cloned().map(|p| (p, 1)).collect();
        let map = build_canonical_map(&vocab, &emb, 0.5, 0.4).unwrap();
        for (p, _) in &vocab {
            let rep = map.representative_of(p);
            // idempotent: the representative maps to itself
            prop_assert_eq!(map.representative_of(&rep), rep.clone());
            // closed: representatives come from the vocabulary
            prop_assert!(phrases.contains(&rep));
        }
    }

    #[test]
    fn intensity_never_drops_below_baseline(
        mu in prop::collection::vec(0.01f64..2.0, 2..=3),
        diag in 0.0f64..0.5,
        counts in prop::collection::vec(prop::collection::vec(0u32..6, 10), 2..=3),
    ) {
        prop_assume!(mu.len() == counts.len());
        let params = HawkesParams::diagonal(mu.clone(), diag).unwrap();
        let kernel = DelayKernel::new(0.5).unwrap();
        let y: Vec<Vec<f64>> = counts
            .iter()
            .map(|row| row.iter().map(|&v| f64::from(v)).collect())
            .collect();
        let lambda = intensity(&params, &kernel, &y).unwrap();
        for (m, row) in lambda.lambda.iter().enumerate() {
            for &value in row {
                prop_assert!(value >= mu[m]);
                prop_assert!(value.is_finite());
            }
        }
    }

    #[test]
    fn clustering_partitions_all_series(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 12), 2..8),
        k in 1usize..4,
        seed in 0u64..1000,
    ) {
        prop_assume!(k <= rows.len());
        let series: Vec<CountSeries> = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut s = CountSeries::zeros(i, 4);
                s.append = row[0..4].to_vec();
                s.extend = row[4..8].to_vec();
                s.mutate = row[8..12].to_vec();
                s
            })
            .collect();
        let result = cluster_seeds(&series, k, seed).unwrap();
        prop_assert_eq!(result.assignment.len(), rows.len());
        // every cluster label is used and in range
        let mut seen = vec![false; k];
        for &label in &result.assignment {
            prop_assert!(label < k);
            seen[label] = true;
        }
        prop_assert!(seen.into_iter().all(|s| s));
        // the inertia trace never increases
        for pair in result.inertia_trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-9);
        }
    }
}
