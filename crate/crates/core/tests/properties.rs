mod common;

use std::collections::{BTreeSet, HashMap};

use cascade_gnn::classifier::{forward, ModelConfig, ModelParams, PreparedGraph};
use cascade_gnn::data::{credibility_from_counts, estimate_spreading_tree, truncate_cascade, Label, UrlId};
use cascade_gnn::eval::{roc_auc, FoldPlan};
use cascade_gnn::nn::{gat_forward, AttentionGraph, GatParams};
use common::{pairwise_auc, permute_edges, random_cascade_case, random_propagation_graph, random_tensor};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((0u8..6, any::<bool>()), 2..50)
        .prop_filter("both classes", |v| v.iter().any(|x| x.1) && v.iter().any(|x| !x.1))
        .prop_map(|v| (v.iter().map(|x| f64::from(x.0) / 5.0).collect(), v.iter().map(|x| x.1).collect()))
}

proptest! {
    #[test]
    fn auc_matches_pairwise_oracle((scores, labels) in scored()) {
        let r = roc_auc(&scores, &labels).unwrap();
        prop_assert!((r.auc - pairwise_auc(&scores, &labels)).abs() <= 1e-12);
        prop_assert_eq!(r.points.first().copied(), Some((0.0, 0.0)));
        prop_assert_eq!(r.points.last().copied(), Some((1.0, 1.0)));
    }

    #[test]
    fn auc_complement_and_monotone_invariance(
        raw in prop::collection::vec((-1e3f64..1e3, any::<bool>()), 2..40)
    ) {
        let mut seen = BTreeSet::new();
        let items: Vec<(f64, bool)> = raw.into_iter().filter(|(s, _)| seen.insert(s.to_bits())).collect();
        prop_assume!(items.iter().any(|x| x.1) && items.iter().any(|x| !x.1));
        let scores: Vec<f64> = items.iter().map(|x| x.0).collect();
        let labels: Vec<bool> = items.iter().map(|x| x.1).collect();
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let auc = roc_auc(&scores, &labels).unwrap().auc;
        prop_assert!((auc - (1.0 - roc_auc(&scores, &flipped).unwrap().auc)).abs() <= 1e-12);
        let squashed: Vec<f64> = scores.iter().map(|s| (s / 100.0).tanh() * 3.0 + 1.0).collect();
        let distinct = squashed.iter().map(|s| s.to_bits()).collect::<BTreeSet<_>>().len() == squashed.len();
        prop_assume!(distinct);
        prop_assert!((auc - roc_auc(&squashed, &labels).unwrap().auc).abs() <= 1e-12);
    }

    #[test]
    fn folds_partition_urls(n in 5usize..200, fake_share in 0.05f64..0.95, seed in any::<u64>()) {
        let fakes = ((n as f64) * fake_share) as usize;
        let urls: Vec<(UrlId, Label)> = (0..n)
            .map(|i| (UrlId(i as u64), if i < fakes { Label::FakeNews } else { Label::TrueNews }))
            .collect();
        let plan = FoldPlan::new(&urls, 5, seed).unwrap();
        prop_assert_eq!(&plan, &FoldPlan::new(&urls, 5, seed).unwrap());
        let mut all: Vec<UrlId> = plan.folds.iter().flatten().copied().collect();
        all.sort();
        prop_assert_eq!(all, urls.iter().map(|u| u.0).collect::<Vec<_>>());
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for r in 0..5 {
            let round = plan.round(r);
            let roles: BTreeSet<UrlId> = round.train.iter().chain(&round.validation).chain(&round.test).copied().collect();
            prop_assert_eq!(roles.len(), n);
        }
    }

    #[test]
    fn spreading_tree_is_a_tree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (social, cascade) = random_cascade_case(&mut rng, 6, 10);
        let tree = estimate_spreading_tree(&cascade, &social).unwrap();
        prop_assert_eq!(tree.num_links(), cascade.len() - 1);
        let pos: HashMap<_, _> = cascade.tweets.iter().enumerate().map(|(k, t)| (t.tweet_id, k)).collect();
        for t in &cascade.tweets[1..] {
            let p = tree.parent_of(t.tweet_id).unwrap();
            // parents are strictly earlier, hence no cycles
            prop_assert!(pos[&p] < pos[&t.tweet_id]);
        }
    }

    #[test]
    fn truncation_is_nested(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, mut cascade) = random_cascade_case(&mut rng, 4, 12);
        for (k, t) in cascade.tweets.iter_mut().enumerate() {
            t.timestamp = k as i64 * 5_000;
        }
        let mut prev: BTreeSet<_> = BTreeSet::new();
        for h in 0..=30 {
            let now: BTreeSet<_> = truncate_cascade(&cascade, f64::from(h)).tweets.iter().map(|t| t.tweet_id).collect();
            prop_assert!(prev.is_subset(&now));
            prev = now;
        }
    }

    #[test]
    fn credibility_in_range(t in 0usize..1000, f in 0usize..1000) {
        prop_assume!(t + f > 0);
        let c = credibility_from_counts(t, f).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c));
    }
}

#[test]
fn attention_layer_is_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..9 {
        let h = random_tensor(&mut rng, n, 5);
        let g = random_propagation_graph(&mut rng, n, 5, Label::TrueNews);
        let params = GatParams {
            w: random_tensor(&mut rng, 5, 4),
            a: random_tensor(&mut rng, 1, 12),
            bias: random_tensor(&mut rng, 1, 4),
        };
        let out = gat_forward(&h, &AttentionGraph::new(n, &g.edges).unwrap(), &params).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let graph = AttentionGraph::new(n, &permute_edges(&g.edges, &perm)).unwrap();
        let permuted = gat_forward(&h.gather_rows(&inv), &graph, &params).unwrap();
        assert!(permuted.max_abs_diff(&out.gather_rows(&inv)) <= 1e-12);
    }
}

#[test]
fn graph_score_is_permutation_invariant() {
    let cfg = ModelConfig::default();
    let params = ModelParams::init(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_propagation_graph(&mut rng, 7, cfg.schema.width(), Label::FakeNews);
    let base = forward(&PreparedGraph::new(&g, &cfg.active_groups, &cfg.schema).unwrap(), &params).unwrap();
    let mut perm: Vec<usize> = (0..7).collect();
    perm.shuffle(&mut rng);
    let mut inv = vec![0; 7];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    let mut h = g.clone();
    h.node_features = g.node_features.gather_rows(&inv);
    h.edges = permute_edges(&g.edges, &perm);
    let p = forward(&PreparedGraph::new(&h, &cfg.active_groups, &cfg.schema).unwrap(), &params).unwrap();
    assert!((p.scores[0] - base.scores[0]).abs() <= 1e-9);
    assert!((p.scores[1] - base.scores[1]).abs() <= 1e-9);
}
