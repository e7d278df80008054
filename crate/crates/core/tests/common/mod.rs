//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use cascade_gnn::classifier::{hinge_on, loss_and_gradients, ModelConfig, ModelParams, PreparedGraph};
use cascade_gnn::data::{
    CascadeId, CascadeRecord, Edge, EdgeFlags, Label, PropagationGraph, Scope, SocialGraph, Tweet, TweetId, UrlId,
    User, UserId, EMBEDDING_DIM,
};
use cascade_gnn::nn::{AttentionGraph, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
/// Denominator floor of the relative error, so that gradients that are
/// zero up to rounding compare on an absolute scale.
pub const REL_FLOOR: f64 = 1e-6;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

pub fn random_tensor(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_edges(rng: &mut impl Rng, n: usize) -> Vec<Edge> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.5) {
                let mut flags = EdgeFlags {
                    i_follows_j: rng.random_bool(0.5),
                    j_follows_i: rng.random_bool(0.5),
                    spread_i_to_j: rng.random_bool(0.3),
                    spread_j_to_i: rng.random_bool(0.3),
                };
                if !flags.any() {
                    flags.i_follows_j = true;
                }
                edges.push(Edge { i, j, flags });
            }
        }
    }
    edges
}

/// Relabels node `k` as `perm[k]`, keeping edges stored with `i < j`.
pub fn permute_edges(edges: &[Edge], perm: &[usize]) -> Vec<Edge> {
    let mut out: Vec<Edge> = edges
        .iter()
        .map(|e| {
            let (a, b) = (perm[e.i], perm[e.j]);
            if a < b {
                Edge { i: a, j: b, flags: e.flags }
            } else {
                Edge {
                    i: b,
                    j: a,
                    flags: e.flags.reversed(),
                }
            }
        })
        .collect();
    out.sort_by_key(|e| (e.i, e.j));
    out
}

pub fn random_propagation_graph(rng: &mut impl Rng, n: usize, width: usize, label: Label) -> PropagationGraph {
    PropagationGraph {
        url_id: UrlId(0),
        nodes: (0..n as u64).map(TweetId).collect(),
        authors: (0..n as u64).map(UserId).collect(),
        node_features: random_tensor(rng, n, width),
        edges: random_edges(rng, n),
        label,
        scope: Scope::UrlWise,
        diffusion_window_hours: None,
    }
}

/// Builds `loss = mean_rows(op(inputs)) · w` for a random constant `w`, so
/// every output entry of `op` reaches the scalar loss.
fn reduce<'g>(tape: &mut Tape<'g>, y: Var, w: &Tensor) -> Var {
    let pooled = tape.global_mean_pool(y).unwrap();
    let w = tape.constant(w.clone());
    tape.matmul(pooled, w).unwrap()
}

/// Largest relative error between tape gradients and central differences
/// for a recorded computation `build(tape, params) -> scalar`.
pub fn check_fn<'g>(params: &[Tensor], build: impl Fn(&mut Tape<'g>, &[Var]) -> Var) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = build(&mut tape, &vars);
    let grads = tape.backward(loss).unwrap();
    let eval = |ps: &[Tensor]| {
        let mut t = Tape::new();
        let vs: Vec<Var> = ps.iter().map(|p| t.param(p.clone())).collect();
        let l = build(&mut t, &vs);
        t.value(l).data()[0]
    };
    let mut worst: f64 = 0.0;
    for (k, p) in params.iter().enumerate() {
        let zero = Tensor::zeros(p.rows(), p.cols());
        let g = grads.get(vars[k]).unwrap_or(&zero);
        for idx in 0..p.len() {
            let mut plus = params.to_vec();
            plus[k].data_mut()[idx] += FD_STEP;
            let mut minus = params.to_vec();
            minus[k].data_mut()[idx] -= FD_STEP;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(g.data()[idx], numeric));
        }
    }
    worst
}

/// Per-operation gradient errors on 5-node inputs, by operation name.
pub fn op_errors(seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 5;
    let (fin, fout) = (6, 4);
    let graph = AttentionGraph::new(n, &random_edges(&mut rng, n)).unwrap();
    let graph: &'static AttentionGraph = Box::leak(Box::new(graph));
    let w = random_tensor(&mut rng, fout, 1);
    let w2 = random_tensor(&mut rng, fout / 2, 1);
    let x = random_tensor(&mut rng, n, fin);
    let wx = random_tensor(&mut rng, fin, fout);
    let b = random_tensor(&mut rng, 1, fout);
    let z = random_tensor(&mut rng, n, fout);
    let a = random_tensor(&mut rng, 1, 2 * fout + 4);

    let mut out = Vec::new();
    out.push((
        "matmul",
        check_fn(&[x.clone(), wx.clone()], |t, v| {
            let y = t.matmul(v[0], v[1]).unwrap();
            reduce(t, y, &w)
        }),
    ));
    out.push((
        "add_bias",
        check_fn(&[z.clone(), b.clone()], |t, v| {
            let y = t.add_bias(v[0], v[1]).unwrap();
            reduce(t, y, &w)
        }),
    ));
    out.push((
        "affine",
        check_fn(&[x.clone(), wx.clone(), b.clone()], |t, v| {
            let y = t.affine(v[0], v[1], v[2]).unwrap();
            reduce(t, y, &w)
        }),
    ));
    out.push((
        "selu",
        check_fn(&[z.clone()], |t, v| {
            let y = t.selu(v[0]);
            reduce(t, y, &w)
        }),
    ));
    out.push((
        "mean_pool_channels",
        check_fn(&[z.clone()], |t, v| {
            let y = t.mean_pool_channels(v[0], 2).unwrap();
            reduce(t, y, &w2)
        }),
    ));
    out.push((
        "global_mean_pool",
        check_fn(&[z.clone(), w.clone()], |t, v| {
            let p = t.global_mean_pool(v[0]).unwrap();
            t.matmul(p, v[1]).unwrap()
        }),
    ));
    out.push((
        "attention",
        check_fn(&[z.clone(), a.clone()], |t, v| {
            let y = t.attention(v[0], v[1], graph).unwrap();
            reduce(t, y, &w)
        }),
    ));
    // hinge away from its kink: scores with margin 0.3 for class 0
    let s = Tensor::row_vector(vec![0.2, -0.1]);
    out.push(("hinge", check_fn(&[s], |t, v| t.hinge(v[0], 0).unwrap())));
    out
}

/// Gradient error of the full network on a 5-node graph, every parameter.
pub fn network_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = ModelConfig {
        hidden: 8,
        fc1: 4,
        seed,
        ..ModelConfig::default()
    };
    let label = if seed % 2 == 0 { Label::TrueNews } else { Label::FakeNews };
    let mut g = random_propagation_graph(&mut rng, 5, cfg.schema.width(), label);
    // keep the first layer's pre-activations in a moderate range
    g.node_features = g.node_features.map(|x| x * 0.2);
    let pg = PreparedGraph::new(&g, &cfg.active_groups, &cfg.schema).unwrap();
    let params = ModelParams::init(&cfg);
    let (loss, grads) = loss_and_gradients(&pg, &params).unwrap();
    assert!(loss > 0.0 && (loss - 1.0).abs() > 1e-3, "hinge must be away from its kinks");

    let mut worst: f64 = 0.0;
    for (k, t) in params.tensors.iter().enumerate() {
        // every entry of small tensors, a seeded sample of the large input matrix
        let idx: Vec<usize> = if t.len() > 512 {
            (0..256).map(|_| rng.random_range(0..t.len())).collect()
        } else {
            (0..t.len()).collect()
        };
        for i in idx {
            let mut p = params.clone();
            p.tensors[k].data_mut()[i] += FD_STEP;
            let up = hinge_on(&pg, &p).unwrap();
            p.tensors[k].data_mut()[i] -= 2.0 * FD_STEP;
            let down = hinge_on(&pg, &p).unwrap();
            worst = worst.max(rel_err(grads[k].data()[i], (up - down) / (2.0 * FD_STEP)));
        }
    }
    worst
}

// ---- spreading-tree oracle ----

pub fn user(id: u64, followers: u64) -> User {
    User {
        user_id: UserId(id),
        geo_enabled: false,
        background_picture: false,
        default_profile: false,
        default_profile_image: false,
        verified: false,
        lang: "en".into(),
        description_embedding: vec![0.0; EMBEDDING_DIM],
        statuses_count: 0,
        favourites_count: 0,
        listed_count: 0,
        followers_count: followers,
        friends_count: 0,
        created_at: 0,
    }
}

pub fn tweet(id: u64, author: u64, ts: i64, cascade: u64, is_source: bool) -> Tweet {
    Tweet {
        tweet_id: TweetId(id),
        author: UserId(author),
        timestamp: ts,
        cascade_id: CascadeId(cascade),
        is_source,
        retweeted_reply_count: 0,
        retweeted_quote_count: 0,
        retweeted_favorite_count: 0,
        retweeted_retweet_count: 0,
        source_device: "web".into(),
        text_embedding: vec![0.0; EMBEDDING_DIM],
        hashtag_embedding: vec![0.0; EMBEDDING_DIM],
    }
}

/// A random social graph over `users` users with few distinct follower
/// counts (to force ties) and a random cascade of up to `max_len` tweets.
pub fn random_cascade_case(rng: &mut impl Rng, users: u64, max_len: usize) -> (SocialGraph, CascadeRecord) {
    let people = (0..users).map(|i| user(i, rng.random_range(0..4) * 100)).collect();
    let mut follows = Vec::new();
    for a in 0..users {
        for b in 0..users {
            if a != b && rng.random_bool(0.3) {
                follows.push((UserId(a), UserId(b)));
            }
        }
    }
    let social = SocialGraph::new(people, follows).unwrap();
    let len = rng.random_range(1..=max_len);
    let mut ts = 0;
    let tweets = (0..len)
        .map(|k| {
            ts += rng.random_range(0..3) * 60;
            tweet(k as u64, rng.random_range(0..users), ts, 0, k == 0)
        })
        .collect();
    (
        social,
        CascadeRecord {
            cascade_id: CascadeId(0),
            url_id: UrlId(0),
            tweets,
        },
    )
}

/// Rules applied literally: for each retweet, list every earlier tweet;
/// if the retweeter follows any of their authors take the latest of those,
/// otherwise the most-followed author, earliest on ties.
pub fn brute_force_parents(cascade: &CascadeRecord, social: &SocialGraph) -> Vec<(TweetId, TweetId)> {
    let mut out = Vec::new();
    for (k, t) in cascade.tweets.iter().enumerate().skip(1) {
        let earlier = &cascade.tweets[..k];
        let followed: Vec<&Tweet> = earlier.iter().filter(|e| social.follows(t.author, e.author)).collect();
        let parent = if let Some(last) = followed.last() {
            last.tweet_id
        } else {
            let followers = |e: &Tweet| social.user(e.author).unwrap().followers_count;
            let best = earlier.iter().map(followers).max().unwrap();
            earlier.iter().find(|e| followers(e) == best).unwrap().tweet_id
        };
        out.push((t.tweet_id, parent));
    }
    out
}

// ---- AUC oracle ----

/// `P(pos > neg) + ½ P(pos = neg)` over all positive/negative pairs.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                den += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}
