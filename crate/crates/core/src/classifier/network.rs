//! The four-layer network:
//!
//! ```text
//! GC1(F→64)+SELU → MP1(64→32, channel pairs) → GC2(32→64)+SELU
//!   → MP2(global mean over nodes) → FC1(64→32)+SELU → FC2(32→2) → scores
//! ```
//!
//! Softmax is applied to the scores only for reporting probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::data::{FeatureGroup, FeatureSchema, Label, PropagationGraph, UrlId, UserId};
use crate::error::{Error, Result};
use crate::nn::ops::EDGE_FLAGS;
use crate::nn::{softmax, AttentionGraph, Gradients, Tape, Tensor, Var};

pub const PARAM_NAMES: [&str; 10] = [
    "gc1.w", "gc1.a", "gc1.bias", "gc2.w", "gc2.a", "gc2.bias", "fc1.w", "fc1.bias", "fc2.w", "fc2.bias",
];
const GC1_W: usize = 0;
const GC2_W: usize = 3;

/// Learnable weights, in [`PARAM_NAMES`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub tensors: Vec<Tensor>,
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)).collect();
    Tensor::from_vec(fan_in, fan_out, data).expect("sized by construction")
}

fn glorot_row(rng: &mut ChaCha8Rng, len: usize) -> Tensor {
    let limit = (6.0 / (len + 1) as f64).sqrt();
    Tensor::row_vector((0..len).map(|_| rng.random_range(-limit..limit)).collect())
}

impl ModelParams {
    pub fn init(cfg: &ModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let f = cfg.schema.width();
        let h = cfg.hidden;
        let pooled = h / cfg.pool_window;
        let tensors = vec![
            glorot(&mut rng, f, h),
            glorot_row(&mut rng, 2 * h + EDGE_FLAGS),
            Tensor::zeros(1, h),
            glorot(&mut rng, pooled, h),
            glorot_row(&mut rng, 2 * h + EDGE_FLAGS),
            Tensor::zeros(1, h),
            glorot(&mut rng, h, cfg.fc1),
            Tensor::zeros(1, cfg.fc1),
            glorot(&mut rng, cfg.fc1, 2),
            Tensor::zeros(1, 2),
        ];
        Self { tensors }
    }

    pub fn input_width(&self) -> usize {
        self.tensors[GC1_W].rows()
    }

    pub fn hidden(&self) -> usize {
        self.tensors[GC2_W].cols()
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, &Tensor)> {
        PARAM_NAMES.iter().copied().zip(&self.tensors)
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

/// A propagation graph ready for the network: masked features and
/// attention neighbourhoods.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub url_id: UrlId,
    pub label: Label,
    pub authors: Vec<UserId>,
    pub features: Tensor,
    pub attention: AttentionGraph,
}

impl PreparedGraph {
    pub fn new(graph: &PropagationGraph, active: &[FeatureGroup], schema: &FeatureSchema) -> Result<Self> {
        if graph.node_features.cols() != schema.width() {
            return Err(Error::Shape(format!(
                "graph features are {} wide, schema is {}",
                graph.node_features.cols(),
                schema.width()
            )));
        }
        let masked = apply_feature_mask(graph, active, schema);
        Ok(Self {
            url_id: graph.url_id,
            label: graph.label,
            authors: graph.authors.clone(),
            attention: AttentionGraph::new(graph.num_nodes(), &graph.edges)?,
            features: masked.node_features,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }
}

/// Zeroes the node-feature columns of inactive groups. Topology and edge
/// flags are kept.
pub fn apply_feature_mask(graph: &PropagationGraph, active: &[FeatureGroup], schema: &FeatureSchema) -> PropagationGraph {
    let mut out = graph.clone();
    for group in FeatureGroup::ALL.into_iter().filter(|g| !active.contains(g)) {
        for range in schema.group_ranges(group) {
            for i in 0..out.node_features.rows() {
                out.node_features.row_mut(i)[range.clone()].fill(0.0);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Raw `(s_true, s_fake)`.
    pub scores: [f64; 2],
    pub probabilities: [f64; 2],
    /// Output of the second convolution after SELU, one row per node.
    pub node_embeddings: Tensor,
}

impl Prediction {
    /// Ranking score for the fake class, `s_fake − s_true`.
    pub fn fake_margin(&self) -> f64 {
        self.scores[1] - self.scores[0]
    }
}

struct Recorded {
    params: Vec<Var>,
    scores: Var,
    embeddings: Var,
}

fn record<'g>(tape: &mut Tape<'g>, params: &ModelParams, graph: &'g PreparedGraph, trainable: bool, window: usize) -> Result<Recorded> {
    if graph.features.cols() != params.input_width() {
        return Err(Error::Shape(format!(
            "graph features are {} wide, model expects {}",
            graph.features.cols(),
            params.input_width()
        )));
    }
    let p: Vec<Var> = params
        .tensors
        .iter()
        .map(|t| if trainable { tape.param(t.clone()) } else { tape.constant(t.clone()) })
        .collect();
    let x = tape.constant(graph.features.clone());

    let z1 = tape.matmul(x, p[0])?;
    let a1 = tape.attention(z1, p[1], &graph.attention)?;
    let h1 = tape.add_bias(a1, p[2])?;
    let h1 = tape.selu(h1);
    let pooled = tape.mean_pool_channels(h1, window)?;

    let z2 = tape.matmul(pooled, p[3])?;
    let a2 = tape.attention(z2, p[4], &graph.attention)?;
    let h2 = tape.add_bias(a2, p[5])?;
    let embeddings = tape.selu(h2);

    let readout = tape.global_mean_pool(embeddings)?;
    let f1 = tape.affine(readout, p[6], p[7])?;
    let f1 = tape.selu(f1);
    let scores = tape.affine(f1, p[8], p[9])?;
    Ok(Recorded {
        params: p,
        scores,
        embeddings,
    })
}

fn pool_window(params: &ModelParams) -> usize {
    // GC2 consumes the pooled GC1 output
    params.tensors[0].cols() / params.tensors[GC2_W].rows()
}

pub fn forward(graph: &PreparedGraph, params: &ModelParams) -> Result<Prediction> {
    let mut tape = Tape::new();
    let rec = record(&mut tape, params, graph, false, pool_window(params))?;
    let s = tape.value(rec.scores).data();
    let scores = [s[0], s[1]];
    if !scores.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("network scores".into()));
    }
    let probs = softmax(&scores);
    Ok(Prediction {
        scores,
        probabilities: [probs[0], probs[1]],
        node_embeddings: tape.value(rec.embeddings).clone(),
    })
}

/// Hinge loss of one graph and its gradient for every parameter.
pub fn loss_and_gradients(graph: &PreparedGraph, params: &ModelParams) -> Result<(f64, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let rec = record(&mut tape, params, graph, true, pool_window(params))?;
    let loss = tape.hinge(rec.scores, graph.label.class_index())?;
    let value = tape.value(loss).data()[0];
    if !value.is_finite() {
        return Err(Error::NonFinite("training loss".into()));
    }
    let mut grads: Gradients = tape.backward(loss)?;
    let out = rec
        .params
        .iter()
        .zip(&params.tensors)
        .map(|(v, t)| grads.take_or_zeros(*v, t.rows(), t.cols()))
        .collect();
    Ok((value, out))
}

pub fn hinge_on(graph: &PreparedGraph, params: &ModelParams) -> Result<f64> {
    let p = forward(graph, params)?;
    crate::nn::hinge_loss(&p.scores, graph.label.class_index())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::data::{Edge, EdgeFlags, Scope, TweetId};

    pub(crate) fn random_graph(seed: u64, n: usize, width: usize, label: Label) -> PropagationGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * width).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.5) {
                    let flags = EdgeFlags {
                        i_follows_j: rng.random_bool(0.5),
                        j_follows_i: rng.random_bool(0.5),
                        spread_i_to_j: true,
                        spread_j_to_i: false,
                    };
                    edges.push(Edge { i, j, flags });
                }
            }
        }
        PropagationGraph {
            url_id: UrlId(seed),
            nodes: (0..n as u64).map(TweetId).collect(),
            authors: (0..n as u64).map(UserId).collect(),
            node_features: Tensor::from_vec(n, width, data).unwrap(),
            edges,
            label,
            scope: Scope::UrlWise,
            diffusion_window_hours: None,
        }
    }

    #[test]
    fn single_node_graph_runs() {
        let cfg = ModelConfig::default();
        let params = ModelParams::init(&cfg);
        let g = random_graph(1, 1, cfg.schema.width(), Label::TrueNews);
        let pg = PreparedGraph::new(&g, &cfg.active_groups, &cfg.schema).unwrap();
        let p = forward(&pg, &params).unwrap();
        assert!(p.scores.iter().all(|x| x.is_finite()));
        assert!((p.probabilities[0] + p.probabilities[1] - 1.0).abs() < 1e-12);
        assert_eq!(p.node_embeddings.shape(), (1, 64));
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let cfg = ModelConfig::default();
        let g = random_graph(1, 3, 10, Label::TrueNews);
        assert!(PreparedGraph::new(&g, &cfg.active_groups, &cfg.schema).is_err());
    }

    #[test]
    fn mask_zeroes_only_inactive_groups() {
        let schema = FeatureSchema::standard();
        let g = random_graph(3, 4, schema.width(), Label::FakeNews);
        let all = apply_feature_mask(&g, &FeatureGroup::ALL, &schema);
        assert_eq!(all, g);
        let no_content: Vec<_> = FeatureGroup::ALL.into_iter().filter(|x| *x != FeatureGroup::Content).collect();
        let m = apply_feature_mask(&g, &no_content, &schema);
        let text = schema.slice("text_embedding").unwrap().start;
        for i in 0..4 {
            assert!(m.node_features.row(i)[text..text + 400].iter().all(|&x| x == 0.0));
            assert_eq!(m.node_features.row(i)[..text], g.node_features.row(i)[..text]);
        }
        assert_eq!(m.edges, g.edges);
    }

    #[test]
    fn masked_columns_get_zero_gradient() {
        let cfg = ModelConfig {
            active_groups: vec![FeatureGroup::UserProfile, FeatureGroup::NetworkSpreading],
            ..ModelConfig::default()
        };
        let params = ModelParams::init(&cfg);
        let g = random_graph(5, 5, cfg.schema.width(), Label::FakeNews);
        let pg = PreparedGraph::new(&g, &cfg.active_groups, &cfg.schema).unwrap();
        let (loss, grads) = loss_and_gradients(&pg, &params).unwrap();
        assert!(loss > 0.0, "test needs a non-zero loss");
        let dw = &grads[0];
        for group in [FeatureGroup::UserActivity, FeatureGroup::Content] {
            for r in cfg.schema.group_ranges(group) {
                for row in r {
                    assert!(dw.row(row).iter().all(|&x| x == 0.0));
                }
            }
        }
        assert!(dw.data().iter().any(|&x| x != 0.0));
    }
}
