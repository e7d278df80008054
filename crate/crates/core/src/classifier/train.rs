use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::{forward, loss_and_gradients, ModelParams, PreparedGraph};
use crate::error::{Error, Result};
use crate::eval::roc_auc;
use crate::nn::{hinge_loss, Amsgrad};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub iteration: usize,
    /// `None` when the validation set holds a single class.
    pub auc: Option<f64>,
    pub loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub optimizer: Amsgrad,
    /// Mean training hinge loss over each evaluation interval.
    pub loss_trace: Vec<(usize, f64)>,
    pub validation: Vec<ValidationPoint>,
    pub best_iteration: usize,
}

/// Validation AUC and mean hinge loss of `params`.
pub fn evaluate(graphs: &[PreparedGraph], params: &ModelParams) -> Result<(Option<f64>, f64)> {
    if graphs.is_empty() {
        return Ok((None, f64::NAN));
    }
    let mut scores = Vec::with_capacity(graphs.len());
    let mut labels = Vec::with_capacity(graphs.len());
    let mut loss = 0.0;
    for g in graphs {
        let p = forward(g, params)?;
        loss += hinge_loss(&p.scores, g.label.class_index())?;
        scores.push(p.fake_margin());
        labels.push(g.label.is_fake());
    }
    let auc = roc_auc(&scores, &labels).ok().map(|r| r.auc);
    Ok((auc, loss / graphs.len() as f64))
}

fn better(candidate: &ValidationPoint, best: &ValidationPoint) -> bool {
    match (candidate.auc, best.auc) {
        (Some(c), Some(b)) => c > b,
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => candidate.loss < best.loss,
    }
}

/// Single-graph AMSGrad steps on uniformly sampled training graphs.
///
/// Every `eval_every` iterations (and after the last one) the validation
/// set is scored; the parameters with the best validation AUC are returned,
/// falling back to the lowest validation loss when AUC is undefined. With an
/// empty validation set the final parameters are returned.
pub fn train(train_set: &[PreparedGraph], validation: &[PreparedGraph], cfg: &ModelConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let mut params = ModelParams::init(cfg);
    let mut opt = Amsgrad::new(cfg.lr);
    // a separate stream from the weight initialisation
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    let mut loss_trace = Vec::new();
    let mut validation_trace: Vec<ValidationPoint> = Vec::new();
    let mut best: Option<(ValidationPoint, ModelParams)> = None;
    let mut window_loss = 0.0;
    let mut window_len = 0usize;

    for it in 1..=cfg.iterations {
        let g = &train_set[rng.random_range(0..train_set.len())];
        let (loss, grads) = loss_and_gradients(g, &params)?;
        opt.step(&mut params.tensors, &grads)?;
        window_loss += loss;
        window_len += 1;

        if it % cfg.eval_every == 0 || it == cfg.iterations {
            loss_trace.push((it, window_loss / window_len as f64));
            window_loss = 0.0;
            window_len = 0;
            if !validation.is_empty() {
                let (auc, loss) = evaluate(validation, &params)?;
                let point = ValidationPoint {
                    iteration: it,
                    auc,
                    loss,
                };
                if best.as_ref().is_none_or(|(b, _)| better(&point, b)) {
                    best = Some((point.clone(), params.clone()));
                }
                validation_trace.push(point);
            }
        }
    }

    let (best_iteration, params) = match best {
        Some((point, p)) => (point.iteration, p),
        None => (cfg.iterations, params),
    };
    Ok(TrainOutcome {
        params,
        optimizer: opt,
        loss_trace,
        validation: validation_trace,
        best_iteration,
    })
}
