//! Weighted least-squares training of word and context vectors.
//!
//! Each nonzero cell `M_iz` contributes
//!
//! ```text
//! weight(M_iz) * (w_i . w~_z + b_i + b~_z - ln M_iz)^2
//! ```
//!
//! to the cost. Parameters are updated per record with accumulator-scaled
//! (AdaGrad) steps. With one thread the run is bit-reproducible; with more,
//! workers update shared parameters without locks.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cooccur::{shuffle_records, CooccurRecord, CooccurSet};
use crate::error::{Error, Result};
use crate::weighting::WeightingSpec;

const STAGE_INIT: u64 = 0x1;
const STAGE_SHUFFLE: u64 = 0x2;

/// Mix a user seed with a stage tag (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stage: u64) -> u64 {
    let mut z = seed ^ stage.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub weighting: WeightingSpec,
    pub seed: u64,
    pub threads: usize,
    /// Fit `ln(M + 1)` instead of `ln M`.
    pub log_smoothing: bool,
    /// Records whose largest single-parameter step exceeds this are skipped.
    pub step_guard: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 50,
            epochs: 20,
            initial_lr: 0.05,
            weighting: WeightingSpec::default(),
            seed: 0,
            threads: 1,
            log_smoothing: false,
            step_guard: 100.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.initial_lr
            )));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if !(self.step_guard > 0.0) {
            return Err(Error::Config("step guard must be positive".into()));
        }
        self.weighting.validate()
    }
}

/// Word vectors, context vectors, biases and their squared-gradient
/// accumulators. Matrices are row-major `vocab_size x dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub vocab_size: usize,
    pub dim: usize,
    pub w: Vec<f64>,
    pub w_ctx: Vec<f64>,
    pub b: Vec<f64>,
    pub b_ctx: Vec<f64>,
    pub grad_sq_w: Vec<f64>,
    pub grad_sq_w_ctx: Vec<f64>,
    pub grad_sq_b: Vec<f64>,
    pub grad_sq_b_ctx: Vec<f64>,
}

impl ModelParams {
    /// All-zero vectors and biases with unit accumulators.
    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        let n = vocab_size * dim;
        ModelParams {
            vocab_size,
            dim,
            w: vec![0.0; n],
            w_ctx: vec![0.0; n],
            b: vec![0.0; vocab_size],
            b_ctx: vec![0.0; vocab_size],
            grad_sq_w: vec![1.0; n],
            grad_sq_w_ctx: vec![1.0; n],
            grad_sq_b: vec![1.0; vocab_size],
            grad_sq_b_ctx: vec![1.0; vocab_size],
        }
    }

    pub fn word(&self, i: u32) -> &[f64] {
        let i = i as usize;
        &self.w[i * self.dim..(i + 1) * self.dim]
    }

    pub fn context(&self, z: u32) -> &[f64] {
        let z = z as usize;
        &self.w_ctx[z * self.dim..(z + 1) * self.dim]
    }

    pub fn all_finite(&self) -> bool {
        [
            &self.w,
            &self.w_ctx,
            &self.b,
            &self.b_ctx,
            &self.grad_sq_w,
            &self.grad_sq_w_ctx,
            &self.grad_sq_b,
            &self.grad_sq_b_ctx,
        ]
        .iter()
        .all(|v| v.iter().all(|x| x.is_finite()))
    }

    fn check_ids(&self, rec: &CooccurRecord) -> Result<()> {
        let bound = self.vocab_size;
        if rec.target as usize >= bound || rec.context as usize >= bound {
            return Err(Error::Config(format!(
                "record ({}, {}) outside vocabulary of size {bound}",
                rec.target, rec.context
            )));
        }
        Ok(())
    }
}

/// Uniform `[-0.5/d, 0.5/d)` vectors, zero biases, unit accumulators.
pub fn init_params(vocab_size: usize, config: &TrainConfig) -> Result<ModelParams> {
    if vocab_size == 0 {
        return Err(Error::Config("vocabulary size must be at least 1".into()));
    }
    if config.dim == 0 {
        return Err(Error::Config("dim must be at least 1".into()));
    }
    let mut params = ModelParams::zeros(vocab_size, config.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STAGE_INIT));
    let dim = config.dim as f64;
    for x in params.w.iter_mut().chain(params.w_ctx.iter_mut()) {
        *x = (rng.random::<f64>() - 0.5) / dim;
    }
    Ok(params)
}

/// Gradient of one record's cost term with respect to the four touched
/// parameter blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordGrads {
    pub target: u32,
    pub context: u32,
    pub w: Vec<f64>,
    pub w_ctx: Vec<f64>,
    pub b: f64,
    pub b_ctx: f64,
}

#[inline]
fn log_target(value: f64, log_smoothing: bool) -> f64 {
    if log_smoothing {
        value.ln_1p()
    } else {
        value.ln()
    }
}

fn overflow(rec: &CooccurRecord, what: &'static str) -> Error {
    Error::NumericOverflow {
        target: rec.target,
        context: rec.context,
        what,
    }
}

fn record_diff(params: &ModelParams, rec: &CooccurRecord, log_smoothing: bool) -> f64 {
    let dot: f64 = params
        .word(rec.target)
        .iter()
        .zip(params.context(rec.context))
        .map(|(a, b)| a * b)
        .sum();
    dot + params.b[rec.target as usize] + params.b_ctx[rec.context as usize]
        - log_target(rec.value, log_smoothing)
}

/// Cost term of a single record.
pub fn record_cost(
    params: &ModelParams,
    rec: &CooccurRecord,
    weighting: &WeightingSpec,
    log_smoothing: bool,
) -> Result<f64> {
    params.check_ids(rec)?;
    let weight = weighting.weight(rec.value)?;
    let diff = record_diff(params, rec, log_smoothing);
    let cost = weight * diff * diff;
    if !cost.is_finite() {
        return Err(overflow(rec, "cost"));
    }
    Ok(cost)
}

pub fn record_cost_and_grads(
    params: &ModelParams,
    rec: &CooccurRecord,
    weighting: &WeightingSpec,
    log_smoothing: bool,
) -> Result<(f64, RecordGrads)> {
    if !(rec.value > 0.0) {
        return Err(Error::Config(format!(
            "record ({}, {}) has non-positive value",
            rec.target, rec.context
        )));
    }
    let cost = record_cost(params, rec, weighting, log_smoothing)?;
    let weight = weighting.weight_unchecked(rec.value);
    let scale = 2.0 * weight * record_diff(params, rec, log_smoothing);
    let grads = RecordGrads {
        target: rec.target,
        context: rec.context,
        w: params.context(rec.context).iter().map(|x| scale * x).collect(),
        w_ctx: params.word(rec.target).iter().map(|x| scale * x).collect(),
        b: scale,
        b_ctx: scale,
    };
    Ok((cost, grads))
}

/// `theta -= lr * g / sqrt(G); G += g^2` on the rows named in `grads`.
///
/// Nothing is written if any step would be non-finite.
pub fn adagrad_step(params: &mut ModelParams, grads: &RecordGrads, lr: f64) -> Result<()> {
    if !(lr > 0.0) {
        return Err(Error::Config("learning rate must be positive".into()));
    }
    let rec = CooccurRecord::new(grads.target, grads.context, 1.0);
    params.check_ids(&rec)?;
    if grads.w.len() != params.dim || grads.w_ctx.len() != params.dim {
        return Err(Error::Config("gradient dimension mismatch".into()));
    }
    let d = params.dim;
    let (i, z) = (grads.target as usize, grads.context as usize);
    let w_rows = i * d..(i + 1) * d;
    let c_rows = z * d..(z + 1) * d;

    let finite = |g: f64, acc: f64| (lr * g / acc.sqrt()).is_finite() && (acc + g * g).is_finite();
    let ok = grads.w.iter().zip(&params.grad_sq_w[w_rows.clone()]).all(|(&g, &a)| finite(g, a))
        && grads.w_ctx.iter().zip(&params.grad_sq_w_ctx[c_rows.clone()]).all(|(&g, &a)| finite(g, a))
        && finite(grads.b, params.grad_sq_b[i])
        && finite(grads.b_ctx, params.grad_sq_b_ctx[z]);
    if !ok {
        return Err(overflow(&rec, "update"));
    }

    let apply = |theta: &mut f64, acc: &mut f64, g: f64| {
        *theta -= lr * g / acc.sqrt();
        *acc += g * g;
    };
    for ((theta, acc), &g) in params.w[w_rows.clone()]
        .iter_mut()
        .zip(&mut params.grad_sq_w[w_rows])
        .zip(&grads.w)
    {
        apply(theta, acc, g);
    }
    for ((theta, acc), &g) in params.w_ctx[c_rows.clone()]
        .iter_mut()
        .zip(&mut params.grad_sq_w_ctx[c_rows])
        .zip(&grads.w_ctx)
    {
        apply(theta, acc, g);
    }
    apply(&mut params.b[i], &mut params.grad_sq_b[i], grads.b);
    apply(&mut params.b_ctx[z], &mut params.grad_sq_b_ctx[z], grads.b_ctx);
    Ok(())
}

/// Worst relative error between analytic gradients and central differences
/// with step `eps` over every touched coordinate. Pairs differing by at most
/// `1e-9` in absolute terms count as exact.
pub fn finite_difference_check(
    params: &ModelParams,
    rec: &CooccurRecord,
    weighting: &WeightingSpec,
    log_smoothing: bool,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1e-2) {
        return Err(Error::Config(format!("eps must be in (0, 1e-2), got {eps}")));
    }
    let (_, grads) = record_cost_and_grads(params, rec, weighting, log_smoothing)?;
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;

    let d = params.dim;
    let (i, z) = (rec.target as usize, rec.context as usize);
    let mut coords: Vec<(Block, usize, f64)> = Vec::with_capacity(2 * d + 2);
    coords.extend((0..d).map(|k| (Block::Word, i * d + k, grads.w[k])));
    coords.extend((0..d).map(|k| (Block::Context, z * d + k, grads.w_ctx[k])));
    coords.push((Block::Bias, i, grads.b));
    coords.push((Block::ContextBias, z, grads.b_ctx));

    for (block, idx, analytic) in coords {
        let original = block.get(&probe, idx);
        block.set(&mut probe, idx, original + eps);
        let plus = record_cost(&probe, rec, weighting, log_smoothing)?;
        block.set(&mut probe, idx, original - eps);
        let minus = record_cost(&probe, rec, weighting, log_smoothing)?;
        block.set(&mut probe, idx, original);
        let numeric = (plus - minus) / (2.0 * eps);
        let gap = (analytic - numeric).abs();
        if gap > 1e-9 {
            worst = worst.max(gap / analytic.abs().max(numeric.abs()));
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy)]
enum Block {
    Word,
    Context,
    Bias,
    ContextBias,
}

impl Block {
    fn slice<'a>(&self, p: &'a mut ModelParams) -> &'a mut Vec<f64> {
        match self {
            Block::Word => &mut p.w,
            Block::Context => &mut p.w_ctx,
            Block::Bias => &mut p.b,
            Block::ContextBias => &mut p.b_ctx,
        }
    }

    fn get(&self, p: &ModelParams, idx: usize) -> f64 {
        match self {
            Block::Word => p.w[idx],
            Block::Context => p.w_ctx[idx],
            Block::Bias => p.b[idx],
            Block::ContextBias => p.b_ctx[idx],
        }
    }

    fn set(&self, p: &mut ModelParams, idx: usize, v: f64) {
        self.slice(p)[idx] = v;
    }
}

/// Per-epoch cost summary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    /// 1-based.
    pub epoch: usize,
    pub total_cost: f64,
    pub mean_cost: f64,
    /// Records skipped by the step guard.
    pub skipped: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossHistory {
    pub epochs: Vec<EpochLoss>,
}

impl LossHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }

    /// Mean cost of the 1-based `epoch`.
    pub fn mean_at(&self, epoch: usize) -> Option<f64> {
        self.epochs
            .iter()
            .find(|e| e.epoch == epoch)
            .map(|e| e.mean_cost)
    }

    /// `epoch,total_cost,mean_cost` with 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,total_cost,mean_cost")?;
        for e in &self.epochs {
            writeln!(out, "{},{:.11e},{:.11e}", e.epoch, e.total_cost, e.mean_cost)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Element access shared by the exclusive and the lock-free update paths.
trait Slots {
    fn get(&self, k: usize) -> f64;
    fn set(&mut self, k: usize, v: f64);
}

impl Slots for &mut [f64] {
    #[inline]
    fn get(&self, k: usize) -> f64 {
        self[k]
    }

    #[inline]
    fn set(&mut self, k: usize, v: f64) {
        self[k] = v;
    }
}

/// Racy view over shared parameters. Individual loads and stores are atomic
/// (relaxed); read-modify-write sequences are not.
struct SharedRow<'a>(&'a [AtomicU64]);

impl Slots for SharedRow<'_> {
    #[inline]
    fn get(&self, k: usize) -> f64 {
        f64::from_bits(self.0[k].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&mut self, k: usize, v: f64) {
        self.0[k].store(v.to_bits(), Ordering::Relaxed);
    }
}

struct Rows<S> {
    w: S,
    w_ctx: S,
    gw: S,
    gw_ctx: S,
    /// Scalars are length-1 rows.
    b: S,
    b_ctx: S,
    gb: S,
    gb_ctx: S,
}

enum Outcome {
    Applied(f64),
    Skipped(f64),
}

/// Fused cost, gradient and AdaGrad update for one record. Steps for the
/// word row use the context row as it was before the update and vice versa.
#[inline]
fn sgd_record<S: Slots>(
    rows: &mut Rows<S>,
    dim: usize,
    value: f64,
    weighting: &WeightingSpec,
    lr: f64,
    log_smoothing: bool,
    guard: f64,
    steps: &mut [f64],
) -> Outcome {
    let mut dot = 0.0;
    for k in 0..dim {
        dot += rows.w.get(k) * rows.w_ctx.get(k);
    }
    let diff = dot + rows.b.get(0) + rows.b_ctx.get(0) - log_target(value, log_smoothing);
    let weight = weighting.weight_unchecked(value);
    let cost = weight * diff * diff;
    let scale = 2.0 * weight * diff;

    // steps[..dim] word row, steps[dim..] context row
    let mut largest: f64 = 0.0;
    for k in 0..dim {
        let gw = scale * rows.w_ctx.get(k);
        let gc = scale * rows.w.get(k);
        let sw = lr * gw / rows.gw.get(k).sqrt();
        let sc = lr * gc / rows.gw_ctx.get(k).sqrt();
        steps[k] = sw;
        steps[dim + k] = sc;
        largest = largest.max(sw.abs()).max(sc.abs());
    }
    let sb = lr * scale / rows.gb.get(0).sqrt();
    let sbc = lr * scale / rows.gb_ctx.get(0).sqrt();
    largest = largest.max(sb.abs()).max(sbc.abs());
    if !(largest <= guard) || !cost.is_finite() {
        return Outcome::Skipped(cost);
    }

    for k in 0..dim {
        let (gw, gc) = (scale * rows.w_ctx.get(k), scale * rows.w.get(k));
        rows.w.set(k, rows.w.get(k) - steps[k]);
        rows.w_ctx.set(k, rows.w_ctx.get(k) - steps[dim + k]);
        rows.gw.set(k, rows.gw.get(k) + gw * gw);
        rows.gw_ctx.set(k, rows.gw_ctx.get(k) + gc * gc);
    }
    rows.b.set(0, rows.b.get(0) - sb);
    rows.b_ctx.set(0, rows.b_ctx.get(0) - sbc);
    rows.gb.set(0, rows.gb.get(0) + scale * scale);
    rows.gb_ctx.set(0, rows.gb_ctx.get(0) + scale * scale);
    Outcome::Applied(cost)
}

fn exclusive_rows(p: &mut ModelParams, i: usize, z: usize) -> Rows<&mut [f64]> {
    let d = p.dim;
    Rows {
        w: &mut p.w[i * d..(i + 1) * d],
        w_ctx: &mut p.w_ctx[z * d..(z + 1) * d],
        gw: &mut p.grad_sq_w[i * d..(i + 1) * d],
        gw_ctx: &mut p.grad_sq_w_ctx[z * d..(z + 1) * d],
        b: &mut p.b[i..=i],
        b_ctx: &mut p.b_ctx[z..=z],
        gb: &mut p.grad_sq_b[i..=i],
        gb_ctx: &mut p.grad_sq_b_ctx[z..=z],
    }
}

/// Parameters bit-cast into atomics for lock-free sharing.
struct SharedParams {
    dim: usize,
    blocks: [Vec<AtomicU64>; 8],
}

impl SharedParams {
    fn from_params(p: &ModelParams) -> Self {
        let share = |v: &Vec<f64>| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect();
        SharedParams {
            dim: p.dim,
            blocks: [
                share(&p.w),
                share(&p.w_ctx),
                share(&p.grad_sq_w),
                share(&p.grad_sq_w_ctx),
                share(&p.b),
                share(&p.b_ctx),
                share(&p.grad_sq_b),
                share(&p.grad_sq_b_ctx),
            ],
        }
    }

    fn write_back(&self, p: &mut ModelParams) {
        let targets: [&mut Vec<f64>; 8] = [
            &mut p.w,
            &mut p.w_ctx,
            &mut p.grad_sq_w,
            &mut p.grad_sq_w_ctx,
            &mut p.b,
            &mut p.b_ctx,
            &mut p.grad_sq_b,
            &mut p.grad_sq_b_ctx,
        ];
        for (dst, src) in targets.into_iter().zip(&self.blocks) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = f64::from_bits(s.load(Ordering::Relaxed));
            }
        }
    }

    fn rows(&self, i: usize, z: usize) -> Rows<SharedRow<'_>> {
        let d = self.dim;
        let [w, w_ctx, gw, gw_ctx, b, b_ctx, gb, gb_ctx] = &self.blocks;
        Rows {
            w: SharedRow(&w[i * d..(i + 1) * d]),
            w_ctx: SharedRow(&w_ctx[z * d..(z + 1) * d]),
            gw: SharedRow(&gw[i * d..(i + 1) * d]),
            gw_ctx: SharedRow(&gw_ctx[z * d..(z + 1) * d]),
            b: SharedRow(&b[i..=i]),
            b_ctx: SharedRow(&b_ctx[z..=z]),
            gb: SharedRow(&gb[i..=i]),
            gb_ctx: SharedRow(&gb_ctx[z..=z]),
        }
    }
}

/// Train on every record of `set` for `vocab_size` words.
pub fn train(
    set: &CooccurSet,
    vocab_size: usize,
    config: &TrainConfig,
) -> Result<(ModelParams, LossHistory)> {
    train_with(set, vocab_size, config, |_, _| Ok(()))
}

/// Like [`train`], calling `on_epoch` after every epoch with the loss entry
/// just recorded and the current parameters.
pub fn train_with<F>(
    set: &CooccurSet,
    vocab_size: usize,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<(ModelParams, LossHistory)>
where
    F: FnMut(&EpochLoss, &ModelParams) -> Result<()>,
{
    config.validate()?;
    if set.is_empty() {
        return Err(Error::Config("no co-occurrence records to train on".into()));
    }
    if set.id_bound() > vocab_size {
        return Err(Error::Config(format!(
            "records reference id {} but vocabulary has {vocab_size} words",
            set.id_bound() - 1
        )));
    }
    let mut params = init_params(vocab_size, config)?;
    let mut records = set.records().to_vec();
    let mut history = LossHistory::default();
    let shuffle_seed = derive_seed(config.seed, STAGE_SHUFFLE);

    for epoch in 0..config.epochs {
        shuffle_records(&mut records, shuffle_seed ^ epoch as u64);
        let (total, skipped) = if config.threads == 1 {
            epoch_exclusive(&mut params, &records, config)
        } else {
            epoch_shared(&mut params, &records, config)
        };
        if !total.is_finite() {
            return Err(Error::NumericOverflow {
                target: 0,
                context: 0,
                what: "epoch cost",
            });
        }
        if !params.all_finite() {
            return Err(Error::NumericOverflow {
                target: 0,
                context: 0,
                what: "parameters",
            });
        }
        let entry = EpochLoss {
            epoch: epoch + 1,
            total_cost: total,
            mean_cost: total / records.len() as f64,
            skipped,
        };
        history.epochs.push(entry);
        on_epoch(&entry, &params)?;
    }
    Ok((params, history))
}

fn epoch_exclusive(
    params: &mut ModelParams,
    records: &[CooccurRecord],
    config: &TrainConfig,
) -> (f64, u64) {
    let dim = params.dim;
    let mut steps = vec![0.0; 2 * dim];
    let mut total = 0.0;
    let mut skipped = 0;
    for rec in records {
        let mut rows = exclusive_rows(params, rec.target as usize, rec.context as usize);
        match sgd_record(
            &mut rows,
            dim,
            rec.value,
            &config.weighting,
            config.initial_lr,
            config.log_smoothing,
            config.step_guard,
            &mut steps,
        ) {
            Outcome::Applied(c) => total += c,
            Outcome::Skipped(c) => {
                total += c;
                skipped += 1;
            }
        }
    }
    (total, skipped)
}

fn epoch_shared(
    params: &mut ModelParams,
    records: &[CooccurRecord],
    config: &TrainConfig,
) -> (f64, u64) {
    let shared = SharedParams::from_params(params);
    let chunk = records.len().div_ceil(config.threads);
    let partials: Vec<(f64, u64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = records
            .chunks(chunk)
            .map(|part| {
                let shared = &shared;
                scope.spawn(move || {
                    let dim = shared.dim;
                    let mut steps = vec![0.0; 2 * dim];
                    let (mut total, mut skipped) = (0.0, 0u64);
                    for rec in part {
                        let mut rows = shared.rows(rec.target as usize, rec.context as usize);
                        match sgd_record(
                            &mut rows,
                            dim,
                            rec.value,
                            &config.weighting,
                            config.initial_lr,
                            config.log_smoothing,
                            config.step_guard,
                            &mut steps,
                        ) {
                            Outcome::Applied(c) => total += c,
                            Outcome::Skipped(c) => {
                                total += c;
                                skipped += 1;
                            }
                        }
                    }
                    (total, skipped)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training worker panicked"))
            .collect()
    });
    shared.write_back(params);
    partials
        .into_iter()
        .fold((0.0, 0), |(t, s), (pt, ps)| (t + pt, s + ps))
}
