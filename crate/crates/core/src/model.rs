//! The encoder-only dual sequence model: embeddings, stacked pre-LN
//! encoder layers, a per-line generation classifier, training,
//! prediction, and the failed-line F1 metric.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dual::TrainingPair;
use crate::nn::{
    masked_cross_entropy, normal_init, optimizer_step, pre_ln_encoder_layer, uniform_init,
    AdamHyper, AdamState, EncoderLayerVars, MaskMode, NnError, Real, Tape, Tensor, Var,
};
use crate::seed::seeded_rng;

#[allow(unused_imports)]
use num_traits::Float;

/// Numeric width the model trains in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn tag(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "f32" => Some(Precision::F32),
            "f64" => Some(Precision::F64),
            _ => None,
        }
    }
}

/// Model and training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub n_lines: usize,
    /// Largest representable failure generation; the classifier has
    /// `g_max + 1` classes (0 = stays alive).
    pub g_max: usize,
    pub layers: usize,
    pub heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub precision: Precision,
    pub mask_mode: MaskMode,
}

impl ModelConfig {
    /// Small profile for workstation runs.
    pub fn desk(n_lines: usize) -> Self {
        ModelConfig {
            n_lines,
            g_max: crate::dual::DEFAULT_G_MAX,
            layers: 2,
            heads: 4,
            d_model: 64,
            d_ff: 128,
            batch_size: 32,
            learning_rate: 1e-3,
            epochs: 20,
            seed: 0,
            precision: Precision::F32,
            mask_mode: MaskMode::MultiplicativePostSoftmax,
        }
    }

    /// Reference profile at publication scale (6 layers, 8 heads, 256/1024).
    pub fn paper(n_lines: usize) -> Self {
        ModelConfig {
            layers: 6,
            heads: 8,
            d_model: 256,
            d_ff: 1024,
            ..Self::desk(n_lines)
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_lines == 0 {
            return Err(ModelError::BadConfig("n_lines must be >= 1".into()));
        }
        if self.g_max == 0 {
            return Err(ModelError::BadConfig("g_max must be >= 1".into()));
        }
        if self.d_model % 2 != 0 {
            return Err(ModelError::BadConfig(format!(
                "d_model {} must be even to split between the two embeddings",
                self.d_model
            )));
        }
        if self.heads == 0 || self.d_model % self.heads != 0 {
            return Err(ModelError::BadConfig(format!(
                "d_model {} must divide into {} heads",
                self.d_model, self.heads
            )));
        }
        if self.layers == 0 {
            return Err(ModelError::BadConfig("layers must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(ModelError::BadConfig("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(ModelError::BadConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }

    fn d_half(&self) -> usize {
        self.d_model / 2
    }

    fn classes(&self) -> usize {
        self.g_max + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    BadConfig(String),
    LabelOutOfRange { line: usize, label: usize, g_max: usize },
    WrongLength { expected: usize, got: usize },
    PairMismatch { detail: String },
    EmptyTrainingSet,
    Nn(NnError),
    MissingTensor { name: String },
    ShapeMismatch { name: String, expected: Vec<usize>, got: Vec<usize> },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::BadConfig(msg) => write!(f, "bad model config: {msg}"),
            ModelError::LabelOutOfRange { line, label, g_max } => {
                write!(f, "line {line}: label {label} exceeds g_max {g_max}")
            }
            ModelError::WrongLength { expected, got } => {
                write!(f, "sequence length {got}, model expects {expected}")
            }
            ModelError::PairMismatch { detail } => write!(f, "pair does not fit the model: {detail}"),
            ModelError::EmptyTrainingSet => write!(f, "training set is empty"),
            ModelError::Nn(e) => write!(f, "{e}"),
            ModelError::MissingTensor { name } => write!(f, "checkpoint is missing tensor {name}"),
            ModelError::ShapeMismatch { name, expected, got } => {
                write!(f, "tensor {name}: shape {got:?}, expected {expected:?}")
            }
        }
    }
}

impl From<NnError> for ModelError {
    fn from(e: NnError) -> Self {
        ModelError::Nn(e)
    }
}

impl core::error::Error for ModelError {}

/// Canonical `(name, shape)` list of every learned tensor for a config,
/// in serialization order.
pub fn tensor_manifest(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let d = config.d_model;
    let mut out = vec![
        ("position_embedding".into(), vec![config.n_lines, config.d_half()]),
        ("generation_embedding".into(), vec![config.classes(), config.d_half()]),
    ];
    for i in 0..config.layers {
        for (field, shape) in [
            ("ln1_gamma", vec![d]),
            ("ln1_beta", vec![d]),
            ("wq", vec![d, d]),
            ("bq", vec![d]),
            ("wk", vec![d, d]),
            ("bk", vec![d]),
            ("wv", vec![d, d]),
            ("bv", vec![d]),
            ("wo", vec![d, d]),
            ("bo", vec![d]),
            ("ln2_gamma", vec![d]),
            ("ln2_beta", vec![d]),
            ("ff_w1", vec![d, config.d_ff]),
            ("ff_b1", vec![config.d_ff]),
            ("ff_w2", vec![config.d_ff, d]),
            ("ff_b2", vec![d]),
        ] {
            out.push((format!("layers.{i}.{field}"), shape));
        }
    }
    out.push(("final_ln_gamma".into(), vec![d]));
    out.push(("final_ln_beta".into(), vec![d]));
    out.push(("output_weight".into(), vec![d, config.classes()]));
    out.push(("output_bias".into(), vec![config.classes()]));
    out
}

/// Parameters of one encoder layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayerParams<T: Real> {
    pub ln1_gamma: Tensor<T>,
    pub ln1_beta: Tensor<T>,
    pub wq: Tensor<T>,
    pub bq: Tensor<T>,
    pub wk: Tensor<T>,
    pub bk: Tensor<T>,
    pub wv: Tensor<T>,
    pub bv: Tensor<T>,
    pub wo: Tensor<T>,
    pub bo: Tensor<T>,
    pub ln2_gamma: Tensor<T>,
    pub ln2_beta: Tensor<T>,
    pub ff_w1: Tensor<T>,
    pub ff_b1: Tensor<T>,
    pub ff_w2: Tensor<T>,
    pub ff_b2: Tensor<T>,
}

/// All learned tensors. The dual embedding splits `d_model` evenly between
/// the position (line id) table and the generation-label table.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T: Real> {
    pub position_embedding: Tensor<T>,
    pub generation_embedding: Tensor<T>,
    pub layers: Vec<EncoderLayerParams<T>>,
    pub final_ln_gamma: Tensor<T>,
    pub final_ln_beta: Tensor<T>,
    pub output_weight: Tensor<T>,
    pub output_bias: Tensor<T>,
}

impl<T: Real> ModelParams<T> {
    /// Fresh parameters from the config seed: embeddings Normal(0, 0.02),
    /// projections Xavier-uniform, norms at identity, biases zero.
    pub fn init(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = seeded_rng(config.seed, 0x1417);
        let d = config.d_model;
        let ones = |n: usize| Tensor::from_vec(&[n], vec![T::one(); n]);
        let layers = (0..config.layers)
            .map(|_| EncoderLayerParams {
                ln1_gamma: ones(d),
                ln1_beta: Tensor::zeros(&[d]),
                wq: uniform_init(&mut rng, d, d),
                bq: Tensor::zeros(&[d]),
                wk: uniform_init(&mut rng, d, d),
                bk: Tensor::zeros(&[d]),
                wv: uniform_init(&mut rng, d, d),
                bv: Tensor::zeros(&[d]),
                wo: uniform_init(&mut rng, d, d),
                bo: Tensor::zeros(&[d]),
                ln2_gamma: ones(d),
                ln2_beta: Tensor::zeros(&[d]),
                ff_w1: uniform_init(&mut rng, d, config.d_ff),
                ff_b1: Tensor::zeros(&[config.d_ff]),
                ff_w2: uniform_init(&mut rng, config.d_ff, d),
                ff_b2: Tensor::zeros(&[d]),
            })
            .collect();
        Ok(ModelParams {
            position_embedding: normal_init(&mut rng, config.n_lines, config.d_half(), 0.02),
            generation_embedding: normal_init(&mut rng, config.classes(), config.d_half(), 0.02),
            layers,
            final_ln_gamma: ones(d),
            final_ln_beta: Tensor::zeros(&[d]),
            output_weight: uniform_init(&mut rng, d, config.classes()),
            output_bias: Tensor::zeros(&[config.classes()]),
        })
    }

    /// Tensors in manifest order.
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut out = vec![&self.position_embedding, &self.generation_embedding];
        for layer in &self.layers {
            out.extend([
                &layer.ln1_gamma,
                &layer.ln1_beta,
                &layer.wq,
                &layer.bq,
                &layer.wk,
                &layer.bk,
                &layer.wv,
                &layer.bv,
                &layer.wo,
                &layer.bo,
                &layer.ln2_gamma,
                &layer.ln2_beta,
                &layer.ff_w1,
                &layer.ff_b1,
                &layer.ff_w2,
                &layer.ff_b2,
            ]);
        }
        out.extend([
            &self.final_ln_gamma,
            &self.final_ln_beta,
            &self.output_weight,
            &self.output_bias,
        ]);
        out
    }

    /// Mutable tensors in manifest order.
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out: Vec<&mut Tensor<T>> =
            vec![&mut self.position_embedding, &mut self.generation_embedding];
        for layer in &mut self.layers {
            out.extend([
                &mut layer.ln1_gamma,
                &mut layer.ln1_beta,
                &mut layer.wq,
                &mut layer.bq,
                &mut layer.wk,
                &mut layer.bk,
                &mut layer.wv,
                &mut layer.bv,
                &mut layer.wo,
                &mut layer.bo,
                &mut layer.ln2_gamma,
                &mut layer.ln2_beta,
                &mut layer.ff_w1,
                &mut layer.ff_b1,
                &mut layer.ff_w2,
                &mut layer.ff_b2,
            ]);
        }
        out.extend([
            &mut self.final_ln_gamma,
            &mut self.final_ln_beta,
            &mut self.output_weight,
            &mut self.output_bias,
        ]);
        out
    }

    /// Rebuild parameters from named tensors, checking every shape against
    /// the config manifest.
    pub fn from_tensor_map(
        config: &ModelConfig,
        mut map: BTreeMap<String, Tensor<T>>,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        let mut ordered = Vec::new();
        for (name, shape) in tensor_manifest(config) {
            let tensor = map
                .remove(&name)
                .ok_or_else(|| ModelError::MissingTensor { name: name.clone() })?;
            if tensor.shape() != shape.as_slice() {
                return Err(ModelError::ShapeMismatch {
                    name,
                    expected: shape,
                    got: tensor.shape().to_vec(),
                });
            }
            ordered.push(tensor);
        }
        let mut it = ordered.into_iter();
        let mut next = || it.next().expect("manifest length matches");
        let position_embedding = next();
        let generation_embedding = next();
        let layers = (0..config.layers)
            .map(|_| EncoderLayerParams {
                ln1_gamma: next(),
                ln1_beta: next(),
                wq: next(),
                bq: next(),
                wk: next(),
                bk: next(),
                wv: next(),
                bv: next(),
                wo: next(),
                bo: next(),
                ln2_gamma: next(),
                ln2_beta: next(),
                ff_w1: next(),
                ff_b1: next(),
                ff_w2: next(),
                ff_b2: next(),
            })
            .collect();
        Ok(ModelParams {
            position_embedding,
            generation_embedding,
            layers,
            final_ln_gamma: next(),
            final_ln_beta: next(),
            output_weight: next(),
            output_bias: next(),
        })
    }
}

/// Per-line class probabilities plus the last layer's attention weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult<T: Real> {
    /// `(N, g_max + 1)` rows summing to 1.
    pub probabilities: Tensor<T>,
    /// `(heads, N, N)` masked attention weights of the last encoder layer.
    pub last_layer_attention: Tensor<T>,
}

struct StagedModel {
    position: Var,
    generation: Var,
    layers: Vec<EncoderLayerVars>,
    final_ln_gamma: Var,
    final_ln_beta: Var,
    output_weight: Var,
    output_bias: Var,
    /// Vars in manifest order, for gradient collection.
    order: Vec<Var>,
}

fn stage<T: Real>(tape: &mut Tape<T>, params: &ModelParams<T>) -> StagedModel {
    let order: Vec<Var> = params.tensors().into_iter().map(|t| tape.leaf(t.clone())).collect();
    let mut it = order.iter().copied();
    let mut next = || it.next().expect("staged in manifest order");
    let position = next();
    let generation = next();
    let layers = (0..params.layers.len())
        .map(|_| EncoderLayerVars {
            ln1_gamma: next(),
            ln1_beta: next(),
            wq: next(),
            bq: next(),
            wk: next(),
            bk: next(),
            wv: next(),
            bv: next(),
            wo: next(),
            bo: next(),
            ln2_gamma: next(),
            ln2_beta: next(),
            ff_w1: next(),
            ff_b1: next(),
            ff_w2: next(),
            ff_b2: next(),
        })
        .collect();
    StagedModel {
        position,
        generation,
        layers,
        final_ln_gamma: next(),
        final_ln_beta: next(),
        output_weight: next(),
        output_bias: next(),
        order,
    }
}

fn check_input(config: &ModelConfig, labels: &[usize], inp_mask: &[bool]) -> Result<(), ModelError> {
    if labels.len() != config.n_lines {
        return Err(ModelError::WrongLength { expected: config.n_lines, got: labels.len() });
    }
    if inp_mask.len() != config.n_lines {
        return Err(ModelError::WrongLength { expected: config.n_lines, got: inp_mask.len() });
    }
    for (line, &label) in labels.iter().enumerate() {
        if label > config.g_max {
            return Err(ModelError::LabelOutOfRange { line, label, g_max: config.g_max });
        }
    }
    Ok(())
}

/// Build the forward graph for one input; returns the probability node and
/// the last layer's per-head attention-weight nodes.
fn forward_on_tape<T: Real>(
    tape: &mut Tape<T>,
    staged: &StagedModel,
    config: &ModelConfig,
    labels: &[usize],
    inp_mask: &[bool],
) -> Result<(Var, Vec<Var>), ModelError> {
    check_input(config, labels, inp_mask)?;
    let gen_rows = tape.gather_rows(staged.generation, labels.to_vec());
    let mut x = tape.concat_cols(staged.position, gen_rows);
    let mut last_weights = Vec::new();
    for layer in &staged.layers {
        let (next, attention) =
            pre_ln_encoder_layer(tape, x, inp_mask, layer, config.heads, config.mask_mode)?;
        x = next;
        last_weights = attention.head_weights;
    }
    let normed = tape.layer_norm_rows(x, staged.final_ln_gamma, staged.final_ln_beta);
    let logits0 = tape.matmul(normed, staged.output_weight);
    let logits = tape.add_bias(logits0, staged.output_bias);
    let probabilities = tape.softmax_rows(logits);
    Ok((probabilities, last_weights))
}

/// Run the model on one dual sequence.
pub fn forward<T: Real>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    labels: &[usize],
    inp_mask: &[bool],
) -> Result<ForwardResult<T>, ModelError> {
    let mut tape = Tape::new();
    let staged = stage(&mut tape, params);
    let (p, weights) = forward_on_tape(&mut tape, &staged, config, labels, inp_mask)?;
    let n = config.n_lines;
    let mut attention = Vec::with_capacity(weights.len() * n * n);
    for &w in &weights {
        attention.extend_from_slice(tape.value(w).data());
    }
    Ok(ForwardResult {
        probabilities: tape.value(p).clone(),
        last_layer_attention: Tensor::from_vec(&[weights.len(), n, n], attention),
    })
}

fn check_pair(config: &ModelConfig, pair: &TrainingPair) -> Result<(), ModelError> {
    if pair.n_lines() != config.n_lines {
        return Err(ModelError::PairMismatch {
            detail: format!("pair has {} lines, model {}", pair.n_lines(), config.n_lines),
        });
    }
    if pair.t + 1 > config.g_max {
        return Err(ModelError::PairMismatch {
            detail: format!("pair targets generation {}, beyond g_max {}", pair.t + 1, config.g_max),
        });
    }
    Ok(())
}

/// Graph for one pair's masked loss.
fn pair_loss_on_tape<T: Real>(
    tape: &mut Tape<T>,
    staged: &StagedModel,
    config: &ModelConfig,
    pair: &TrainingPair,
) -> Result<Var, ModelError> {
    check_pair(config, pair)?;
    let (p, _) = forward_on_tape(tape, staged, config, &pair.inp.labels, &pair.inp_mask)?;
    Ok(masked_cross_entropy(tape, p, &pair.tar.labels, &pair.tar_mask)?)
}

/// Mean masked loss over a pair set, forward only.
pub fn mean_masked_loss<T: Real>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    pairs: &[TrainingPair],
) -> Result<f64, ModelError> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for pair in pairs {
        let mut tape = Tape::new();
        let staged = stage(&mut tape, params);
        let loss = pair_loss_on_tape(&mut tape, &staged, config, pair)?;
        total += tape.value(loss).item().to_f64().expect("loss is finite");
    }
    Ok(total / pairs.len() as f64)
}

/// Per-epoch mean train and validation loss; index 0 is the untrained
/// model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

/// Minimize the masked loss over shuffled mini-batches. Deterministic for
/// a fixed config: the shuffle draws from `(seed, epoch)` and gradients
/// accumulate in a fixed order.
pub fn train<T: Real>(
    config: &ModelConfig,
    params: &mut ModelParams<T>,
    train_pairs: &[TrainingPair],
    val_pairs: &[TrainingPair],
) -> Result<TrainReport, ModelError> {
    config.validate()?;
    if train_pairs.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    for pair in train_pairs.iter().chain(val_pairs) {
        check_pair(config, pair)?;
    }

    let mut report = TrainReport {
        train_loss: vec![mean_masked_loss(params, config, train_pairs)?],
        val_loss: vec![mean_masked_loss(params, config, val_pairs)?],
    };
    let mut state = AdamState::new(params.tensors().into_iter());
    let hyper = AdamHyper::with_step_size(config.learning_rate);

    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    for epoch in 0..config.epochs {
        let mut rng = seeded_rng(config.seed, 0xE90C_0000 + epoch as u64);
        for i in (1..order.len()).rev() {
            let j = rand::Rng::random_range(&mut rng, 0..=i);
            order.swap(i, j);
        }
        for batch in order.chunks(config.batch_size) {
            let mut tape = Tape::new();
            let staged = stage(&mut tape, params);
            let losses: Vec<Var> = batch
                .iter()
                .map(|&i| pair_loss_on_tape(&mut tape, &staged, config, &train_pairs[i]))
                .collect::<Result<_, _>>()?;
            let batch_loss = tape.mean_of(losses);
            let grads = tape.backward(batch_loss);
            let grad_tensors: Vec<Tensor<T>> = staged
                .order
                .iter()
                .map(|&v| grads.wrt(v, tape.value(v).shape()))
                .collect();
            let mut tensors = params.tensors_mut();
            optimizer_step(&mut tensors, &grad_tensors, &mut state, &hyper);
        }
        report.train_loss.push(mean_masked_loss(params, config, train_pairs)?);
        report.val_loss.push(mean_masked_loss(params, config, val_pairs)?);
    }
    Ok(report)
}

/// Argmax per probability row, ties broken toward the smaller class.
pub fn predict_generation<T: Real>(probabilities: &Tensor<T>) -> Vec<usize> {
    let (m, n) = (probabilities.rows(), probabilities.cols());
    (0..m)
        .map(|r| {
            let row = &probabilities.data()[r * n..(r + 1) * n];
            let mut best = 0;
            for (g, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = g;
                }
            }
            best
        })
        .collect()
}

/// Counts and scores for the failed-line prediction metric: lines alive in
/// both target and prediction are excluded; a true positive is an exact
/// non-zero generation match; a false negative is a missed failure; every
/// other disagreement is a false positive.
#[derive(Debug, Clone, PartialEq)]
pub struct F1Report {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn f1_score(targets: &[Vec<usize>], predictions: &[Vec<usize>]) -> F1Report {
    assert_eq!(targets.len(), predictions.len(), "target/prediction set sizes differ");
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (target, prediction) in targets.iter().zip(predictions) {
        assert_eq!(target.len(), prediction.len(), "sequence lengths differ");
        for (&truth, &guess) in target.iter().zip(prediction) {
            match (truth, guess) {
                (0, 0) => {}
                (t, g) if t == g => tp += 1,
                (t, 0) if t != 0 => fn_ += 1,
                _ => fp += 1,
            }
        }
    }
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    F1Report {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision,
        recall,
        f1,
    }
}

/// Predict every pair's target labels and score them.
pub fn evaluate_f1<T: Real>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    pairs: &[TrainingPair],
) -> Result<F1Report, ModelError> {
    let mut targets = Vec::with_capacity(pairs.len());
    let mut predictions = Vec::with_capacity(pairs.len());
    for pair in pairs {
        check_pair(config, pair)?;
        let result = forward(params, config, &pair.inp.labels, &pair.inp_mask)?;
        predictions.push(predict_generation(&result.probabilities));
        targets.push(pair.tar.labels.clone());
    }
    Ok(f1_score(&targets, &predictions))
}
