use std::cmp::Ordering;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, scheduled_lr, AdamParams, AdamState};
use super::mlp::{init_model, Gradients, MlpModel, Mode};
use crate::circuit::{Assignment, Circuit};
use crate::error::{Error, Result};
use crate::mmap::{score, MmapProblem, MmapSolution, VariablePartition};
use crate::qpc::{QpcContext, SoftAssignment};
use crate::sampler::{substream, EvidenceDataset};

/// Candidate entropy weights searched by cross-validation by default.
pub const ALPHA_GRID: [f64; 6] = [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0];

const STREAM_SHUFFLE: u64 = 1;
const STREAM_FOLDS: u64 = 2;
/// Dropout streams start here, one per processed example.
const STREAM_EXAMPLES: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub alpha: f64,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub decay_interval: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub hidden: Vec<usize>,
    pub seed: u64,
    pub adam: AdamParams,
    /// Share of rows held out from training and scored after each epoch.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.0,
            learning_rate: 1e-3,
            lr_decay: 0.9,
            decay_interval: 10,
            epochs: 50,
            batch_size: 128,
            dropout: 0.0,
            hidden: vec![64, 64],
            seed: 0,
            adam: AdamParams::default(),
            validation_fraction: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidSpec(what.to_string()));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be finite and non-negative");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("learning-rate decay must lie in (0, 1]");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation fraction must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        scheduled_lr(self.learning_rate, self.lr_decay, self.decay_interval, epoch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean total loss over the processed training examples.
    pub loss: f64,
    pub nll: f64,
    pub entropy: f64,
    /// Mean L2 norm of the batch-averaged parameter gradient.
    pub grad_norm: f64,
    /// Mean log score of rounded predictions on the held-out rows.
    pub val_ll: Option<f64>,
    pub processed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn first(&self) -> Option<&EpochRecord> {
        self.epochs.first()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

struct Example {
    loss: f64,
    nll: f64,
    entropy: f64,
    grads: Gradients,
}

/// Shared minibatch loop. `step` returns `None` for an example that has to
/// be skipped.
fn fit<F, V>(mut model: MlpModel, n_rows: usize, cfg: &TrainConfig, step: F, validate: V) -> Result<(MlpModel, TrainHistory)>
where
    F: Fn(&MlpModel, usize, &mut ChaCha8Rng) -> Result<Option<Example>> + Sync,
    V: Fn(&MlpModel) -> Result<Option<f64>>,
{
    let mut state = AdamState::new(&model);
    let mut shuffle = substream(cfg.seed, STREAM_SHUFFLE);
    let mut order: Vec<usize> = (0..n_rows).collect();
    let mut history = TrainHistory::default();
    let mut counter = 0u64;

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        order.shuffle(&mut shuffle);
        let (mut loss, mut nll, mut entropy, mut norm_sum) = (0.0, 0.0, 0.0, 0.0);
        let (mut processed, mut skipped, mut batches) = (0, 0, 0);
        for batch in order.chunks(cfg.batch_size) {
            let base = counter;
            counter += batch.len() as u64;
            let results: Vec<Result<Option<Example>>> = batch
                .par_iter()
                .enumerate()
                .map(|(k, &row)| step(&model, row, &mut substream(cfg.seed, STREAM_EXAMPLES + base + k as u64)))
                .collect();
            let mut sum = Gradients::zeros_like(&model);
            let mut count = 0usize;
            for r in results {
                match r? {
                    Some(ex) => {
                        sum.add_assign(&ex.grads);
                        loss += ex.loss;
                        nll += ex.nll;
                        entropy += ex.entropy;
                        count += 1;
                    }
                    None => skipped += 1,
                }
            }
            if count == 0 {
                continue;
            }
            processed += count;
            sum.scale(1.0 / count as f64);
            norm_sum += sum.norm();
            batches += 1;
            adam_step(&mut model, &sum, &mut state, lr, &cfg.adam)?;
        }
        let denom = processed.max(1) as f64;
        history.epochs.push(EpochRecord {
            epoch,
            learning_rate: lr,
            loss: loss / denom,
            nll: nll / denom,
            entropy: entropy / denom,
            grad_norm: norm_sum / batches.max(1) as f64,
            val_ll: validate(&model)?,
            processed,
            skipped,
        });
    }
    Ok((model, history))
}

fn split_rows(n: usize, fraction: f64) -> (usize, usize) {
    let held = ((n as f64) * fraction).floor() as usize;
    (n - held, held)
}

/// Mean log score of rounded predictions; `-inf` if any prediction has
/// probability zero.
pub fn mean_log_likelihood(model: &MlpModel, c: &Circuit, part: &VariablePartition, rows: &[Vec<u8>]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::InvalidSpec("no rows to score".into()));
    }
    let scores = rows
        .par_iter()
        .map(|row| {
            let q = model.predict(row)?;
            let e = Assignment::from_bits(part.evidence(), row);
            score(c, &e, &Assignment::from_bits(part.query(), &q.round()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.iter().sum::<f64>() / rows.len() as f64)
}

fn model_dims(part: &VariablePartition, cfg: &TrainConfig) -> Result<Vec<usize>> {
    let (n, m, _) = part.sizes();
    if n == 0 {
        return Err(Error::InvalidSpec("the network needs at least one evidence variable as input".into()));
    }
    let mut dims = vec![n];
    dims.extend(&cfg.hidden);
    dims.push(m);
    Ok(dims)
}

/// Self-supervised training on unlabeled evidence with the relaxed-circuit
/// loss. Examples whose evidence has probability zero are skipped and
/// counted.
pub fn train_ssmp(c: &Circuit, part: &VariablePartition, data: &EvidenceDataset, cfg: &TrainConfig) -> Result<(MlpModel, TrainHistory)> {
    cfg.check()?;
    data.check_columns(c, part)?;
    let mut model = init_model(&model_dims(part, cfg)?, cfg.dropout, cfg.seed)?;
    model.meta.alpha = Some(cfg.alpha);
    model.meta.objective = Some("ssmp".into());
    let (n_train, n_val) = split_rows(data.len(), cfg.validation_fraction);
    let (train_rows, val_rows) = data.rows.split_at(n_train);

    let step = |model: &MlpModel, i: usize, rng: &mut ChaCha8Rng| -> Result<Option<Example>> {
        let row = &train_rows[i];
        let e = Assignment::from_bits(part.evidence(), row);
        let ctx = QpcContext::new(c, part, &e)?;
        let (q, cache) = model.forward(row, Mode::Train, rng)?;
        let (lv, g) = match ctx.loss_and_grad(&q, cfg.alpha) {
            Ok(r) => r,
            Err(Error::NonpositiveCircuitValue) => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(Some(Example {
            loss: lv.total,
            nll: lv.nll,
            entropy: lv.entropy_term,
            grads: model.backward(&cache, &g)?,
        }))
    };
    let validate = |m: &MlpModel| {
        if n_val == 0 {
            Ok(None)
        } else {
            mean_log_likelihood(m, c, part, val_rows).map(Some)
        }
    };
    fit(model, n_train, cfg, step, validate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupervisedLoss {
    Mse,
    Mae,
}

impl SupervisedLoss {
    /// Per-example loss averaged over output coordinates, and its gradient.
    pub fn value_and_grad(self, q: &[f64], y: &[u8]) -> (f64, Vec<f64>) {
        let m = q.len() as f64;
        let diffs = q.iter().zip(y).map(|(q, y)| q - f64::from(*y));
        match self {
            SupervisedLoss::Mse => {
                let d: Vec<f64> = diffs.collect();
                (d.iter().map(|d| d * d).sum::<f64>() / m, d.iter().map(|d| 2.0 * d / m).collect())
            }
            SupervisedLoss::Mae => {
                let d: Vec<f64> = diffs.collect();
                let g = d
                    .iter()
                    .map(|&d| match d.partial_cmp(&0.0) {
                        Some(Ordering::Greater) => 1.0 / m,
                        Some(Ordering::Less) => -1.0 / m,
                        _ => 0.0,
                    })
                    .collect();
                (d.iter().map(|d| d.abs()).sum::<f64>() / m, g)
            }
        }
    }
}

/// An evidence row with its discrete query label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub evidence: Vec<u8>,
    pub label: Vec<u8>,
}

/// Regression of the network outputs onto discrete labels.
pub fn train_supervised(
    c: &Circuit,
    part: &VariablePartition,
    labeled: &[LabeledExample],
    kind: SupervisedLoss,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    cfg.check()?;
    let (n, m, _) = part.sizes();
    for ex in labeled {
        if ex.evidence.len() != n || ex.label.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "labeled example has {} inputs and {} labels, expected {n} and {m}",
                ex.evidence.len(),
                ex.label.len()
            )));
        }
        if ex.label.iter().chain(&ex.evidence).any(|&b| b > 1) {
            return Err(Error::InvalidSpec("labels and evidence must be 0/1".into()));
        }
    }
    let mut model = init_model(&model_dims(part, cfg)?, cfg.dropout, cfg.seed)?;
    model.meta.objective = Some(match kind {
        SupervisedLoss::Mse => "mse".into(),
        SupervisedLoss::Mae => "mae".into(),
    });
    let (n_train, n_val) = split_rows(labeled.len(), cfg.validation_fraction);
    let (train, val) = labeled.split_at(n_train);
    let val_rows: Vec<Vec<u8>> = val.iter().map(|ex| ex.evidence.clone()).collect();

    let step = |model: &MlpModel, i: usize, rng: &mut ChaCha8Rng| -> Result<Option<Example>> {
        let (q, cache) = model.forward(&train[i].evidence, Mode::Train, rng)?;
        let (loss, g) = kind.value_and_grad(q.values(), &train[i].label);
        Ok(Some(Example {
            loss,
            nll: loss,
            entropy: 0.0,
            grads: model.backward(&cache, &g)?,
        }))
    };
    let validate = |m: &MlpModel| {
        if n_val == 0 {
            Ok(None)
        } else {
            mean_log_likelihood(m, c, part, &val_rows).map(Some)
        }
    };
    fit(model, n_train, cfg, step, validate)
}

/// Seeded split of `n` row indices into `folds` groups whose sizes differ by
/// at most one.
pub fn fold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::InvalidSpec(format!("cannot split {n} rows into {folds} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut substream(seed, STREAM_FOLDS));
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for k in 0..folds {
        let len = n / folds + usize::from(k < n % folds);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaScore {
    pub alpha: f64,
    pub mean_ll: f64,
    pub fold_ll: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub best_alpha: f64,
    pub scores: Vec<AlphaScore>,
    pub folds: usize,
}

/// k-fold selection of the entropy weight by mean held-out log score of
/// rounded predictions. Ties go to the smaller weight.
pub fn cross_validate_alpha(
    c: &Circuit,
    part: &VariablePartition,
    data: &EvidenceDataset,
    grid: &[f64],
    folds: usize,
    cfg: &TrainConfig,
) -> Result<CvReport> {
    if grid.is_empty() {
        return Err(Error::InvalidSpec("alpha grid is empty".into()));
    }
    data.check_columns(c, part)?;
    let split = fold_indices(data.len(), folds, cfg.seed)?;
    let mut scores = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let fold_cfg = TrainConfig {
            alpha,
            validation_fraction: 0.0,
            ..cfg.clone()
        };
        let mut fold_ll = Vec::with_capacity(folds);
        for k in 0..folds {
            let train_idx: Vec<usize> = (0..folds).filter(|&j| j != k).flat_map(|j| split[j].iter().copied()).collect();
            let (model, _) = train_ssmp(c, part, &data.subset(&train_idx), &fold_cfg)?;
            let held = data.subset(&split[k]);
            fold_ll.push(mean_log_likelihood(&model, c, part, &held.rows)?);
        }
        let mean_ll = fold_ll.iter().sum::<f64>() / folds as f64;
        scores.push(AlphaScore { alpha, mean_ll, fold_ll });
    }
    let best = scores
        .iter()
        .max_by(|a, b| {
            a.mean_ll
                .partial_cmp(&b.mean_ll)
                .unwrap_or(Ordering::Equal)
                .then(b.alpha.total_cmp(&a.alpha))
        })
        .expect("grid is non-empty");
    Ok(CvReport {
        best_alpha: best.alpha,
        scores: scores.clone(),
        folds,
    })
}

/// Evaluation-mode prediction rounded at 0.5 (ties to 0) and scored.
pub fn predict_mmap(model: &MlpModel, p: &MmapProblem) -> Result<MmapSolution> {
    let start = Instant::now();
    let (n, m, _) = p.partition.sizes();
    if model.n_inputs() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: model.n_inputs(),
        });
    }
    if model.n_outputs() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: model.n_outputs(),
        });
    }
    let q = model.predict(&p.evidence_bits())?;
    p.solution(p.query_assignment(&q.round()), "ssmp", start)
}

/// Round a soft query assignment and score it against the problem.
pub fn round_and_score(p: &MmapProblem, q: &SoftAssignment) -> Result<MmapSolution> {
    if q.len() != p.partition.query().len() {
        return Err(Error::DimensionMismatch {
            expected: p.partition.query().len(),
            got: q.len(),
        });
    }
    p.solution(p.query_assignment(&q.round()), "ssmp", Instant::now())
}

/// Soft outputs for each row.
pub fn predict_soft(model: &MlpModel, rows: &[Vec<u8>]) -> Result<Vec<SoftAssignment>> {
    rows.par_iter().map(|r| model.predict(r)).collect()
}
