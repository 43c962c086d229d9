//! Rule learning from answer-only supervision: a dense composite rule
//! weight store, weighted rule sampling, BCE + semantic loss, alternating
//! Adam optimizers, evaluation, and rule export.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::CompositionOracle;
use crate::engine::{backward, forward, predict, EngineError, EngineRule, ForwardConfig};
use crate::logic::{instantiate_template, Program, RelationId, RuleTemplate, Sample, Vocabulary};

const PROB_CLAMP: f64 = 1e-7;

/// Minimum weight enforced during the grace epochs.
const GRACE_FLOOR: f64 = 0.02;

#[derive(Error, Debug)]
pub enum LearnError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("vocabulary size mismatch: store built for {expected} relations, got {found}")]
    VocabMismatch { expected: usize, found: usize },
}

/// Dense weight store over every composite rule `(r1, r2, r3)`. For the
/// 20-relation kinship vocabulary this is 8000 slots; the slot index also
/// serves as the gradient routing key.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RuleWeightStore {
    n_relations: usize,
    weights: Vec<f64>,
}

impl RuleWeightStore {
    pub fn new(n_relations: usize) -> Self {
        RuleWeightStore { n_relations, weights: vec![0.0; n_relations.pow(3)] }
    }

    pub fn n_relations(&self) -> usize {
        self.n_relations
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn slot(&self, r1: RelationId, r2: RelationId, r3: RelationId) -> usize {
        (r1.index() * self.n_relations + r2.index()) * self.n_relations + r3.index()
    }

    pub fn template(&self, slot: usize) -> RuleTemplate {
        let n = self.n_relations;
        let r3 = slot % n;
        let r2 = slot / n % n;
        let r1 = slot / (n * n);
        RuleTemplate::Composite(RelationId(r1 as u8), RelationId(r2 as u8), RelationId(r3 as u8))
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.weights[slot]
    }

    pub fn set(&mut self, slot: usize, w: f64) {
        self.weights[slot] = w;
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Slots of the `n` heaviest rules, weight descending, slot ascending on
    /// ties. Zero-weight rules are never returned.
    pub fn top_rules(&self, n: usize) -> Vec<usize> {
        let mut slots: Vec<usize> = (0..self.weights.len())
            .filter(|&i| self.weights[i] > 0.0)
            .collect();
        slots.sort_by(|&a, &b| {
            self.weights[b].partial_cmp(&self.weights[a]).unwrap().then(a.cmp(&b))
        });
        slots.truncate(n);
        slots
    }

    /// Weighted sampling of `n` distinct rules without replacement
    /// (Efraimidis–Vitter reservoir keys: `ln(u) / w`, largest kept).
    ///
    pub fn sample_rules(&self, n: usize, rng: &mut impl Rng) -> Vec<usize> {
        let mut keyed: Vec<(f64, usize)> = self
            .weights
            .iter()
            .enumerate()
            .filter_map(|(i, &w)| {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                (w > 0.0).then(|| (u.ln() / w, i))
            })
            .collect();
        keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        keyed.truncate(n);
        let mut slots: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();
        slots.sort_unstable();
        slots
    }
}

/// Initialize weights: prior rules at their given weight, everything else
/// uniform in [0, 0.1).
pub fn init_rule_weights(
    vocab: &Vocabulary,
    priors: &BTreeMap<RuleTemplate, f64>,
    rng: &mut impl Rng,
) -> RuleWeightStore {
    let mut store = RuleWeightStore::new(vocab.len());
    for slot in 0..store.len() {
        store.set(slot, rng.gen_range(0.0..0.1));
    }
    for (t, &w) in priors {
        if let RuleTemplate::Composite(r1, r2, r3) = *t {
            let slot = store.slot(r1, r2, r3);
            store.set(slot, w);
        }
    }
    store
}

/// Build evaluation-ready rules for a set of slots: the program's fixed
/// rules plus the selected composite rules with weights clamped to [0, 1].
pub fn build_rules(
    program: &Program,
    store: &RuleWeightStore,
    slots: &[usize],
) -> Vec<EngineRule> {
    let vocab = &program.vocab;
    let mut rules: Vec<EngineRule> = program
        .fixed_rules
        .iter()
        .map(|r| EngineRule::fixed(r.clone(), "fixed".into()))
        .collect();
    for (t, w) in &program.template_facts {
        rules.push(EngineRule::weighted(
            instantiate_template(t),
            w.clamp(0.0, 1.0),
            None,
            describe_template(vocab, t),
        ));
    }
    for &slot in slots {
        let t = store.template(slot);
        rules.push(EngineRule::weighted(
            instantiate_template(&t),
            store.get(slot).clamp(0.0, 1.0),
            Some(slot),
            describe_template(vocab, &t),
        ));
    }
    rules
}

fn describe_template(vocab: &Vocabulary, t: &RuleTemplate) -> String {
    let names: Vec<&str> = t.args().iter().map(|&r| vocab.name(r)).collect();
    format!("{}({})", t.kind_name(), names.join(", "))
}

/// Binary cross-entropy over the per-relation probabilities against a
/// one-hot target; each relation's WMC is an independent Bernoulli.
pub fn bce_loss(y_hat: &[f64], answer: RelationId) -> f64 {
    let mut loss = 0.0;
    for (i, &p) in y_hat.iter().enumerate() {
        let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss -= if i == answer.index() { p.ln() } else { (1.0 - p).ln() };
    }
    loss
}

/// d(BCE)/d(y_hat) per relation, evaluated at the clamped probabilities.
pub fn bce_grad(y_hat: &[f64], answer: RelationId) -> Vec<f64> {
    y_hat
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if i == answer.index() {
                -1.0 / p
            } else {
                1.0 / (1.0 - p)
            }
        })
        .collect()
}

/// Adam optimizer state over the full rule slot space.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState { m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    /// One Adam step over the accumulated `(slot, grad)` pairs. Movement
    /// further outside [0, 1] is projected out (a weight at 0 can only go
    /// up, a weight at or above 1 can only come down); weights are floored
    /// at `floor` afterwards (0 in normal operation, slightly above 0
    /// during the early-training grace period so no rule dies before it
    /// has been explored).
    pub fn step(&mut self, store: &mut RuleWeightStore, grads: &[(usize, f64)], lr: f64, floor: f64) {
        if grads.is_empty() {
            return;
        }
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        for &(slot, g) in grads {
            self.m[slot] = ADAM_BETA1 * self.m[slot] + (1.0 - ADAM_BETA1) * g;
            self.v[slot] = ADAM_BETA2 * self.v[slot] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.m[slot] / bc1;
            let v_hat = self.v[slot] / bc2;
            let delta = lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            let w = store.get(slot);
            if (w <= 0.0 && delta > 0.0) || (w >= 1.0 && delta < 0.0) {
                continue;
            }
            store.set(slot, (w - delta).max(floor));
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Rules sampled per batch during training.
    pub sample_n: usize,
    /// Rules used at evaluation time.
    pub top_n: usize,
    pub lr_rule: f64,
    pub lr_fact: f64,
    /// Top-k proof bound.
    pub k: usize,
    pub max_iters: usize,
    pub w_result_ic: f64,
    pub w_rule_ic: f64,
    pub with_constraints: bool,
    pub seed: u64,
    /// Swap the active optimizer every this many batches.
    pub optimizer_period: usize,
    /// Epochs during which weights may not collapse to zero.
    pub grace_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 16,
            sample_n: 150,
            top_n: 150,
            lr_rule: 0.1,
            lr_fact: 1e-5,
            k: 3,
            max_iters: 16,
            w_result_ic: 0.1,
            w_rule_ic: 0.01,
            with_constraints: true,
            seed: 1,
            optimizer_period: 10,
            grace_epochs: 2,
        }
    }
}

/// One metrics record per epoch, serialized to a JSONL log. Deliberately
/// contains no wall-clock fields so identical runs produce identical logs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub bce: f64,
    pub semantic: f64,
    pub train_accuracy: f64,
    pub active_rules: usize,
}

pub struct TrainOutput {
    pub store: RuleWeightStore,
    pub adam_rule: AdamState,
    pub adam_fact: AdamState,
    pub metrics: Vec<EpochMetrics>,
}

/// Fit composite rule weights from answer-only supervision.
///
/// Each batch samples `sample_n` rules by weight, runs the differentiable
/// forward pass on every sample, and backpropagates BCE plus weighted
/// constraint-violation (semantic) loss into the sampled rule slots. Two
/// Adam optimizers (rule weights and fact probabilities) alternate every
/// `optimizer_period` batches; with fully certain KB facts the fact phase
/// leaves the parameters untouched. Everything is seeded, and parallel
/// per-sample passes are reduced in input order, so a rerun with the same
/// config is bit-identical.
pub fn train(
    samples: &[Sample],
    program: &Program,
    cfg: &TrainConfig,
) -> Result<TrainOutput, LearnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut store = init_rule_weights(&program.vocab, &prior_map(program), &mut rng);
    let mut adam_rule = AdamState::new(store.len());
    let mut adam_fact = AdamState::new(store.len());
    let fwd = ForwardConfig {
        k: cfg.k,
        max_iters: cfg.max_iters,
        w_result_ic: cfg.w_result_ic,
        w_rule_ic: cfg.w_rule_ic,
        with_constraints: cfg.with_constraints,
    };
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let mut global_batch = 0usize;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_bce = 0.0;
        let mut epoch_sl = 0.0;
        let mut correct = 0usize;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            let slots = store.sample_rules(cfg.sample_n, &mut rng);
            let rules = build_rules(program, &store, &slots);
            let results: Vec<Result<(f64, f64, bool, Vec<(usize, f64)>), EngineError>> = batch
                .par_iter()
                .map(|&i| {
                    let sample = &samples[i];
                    let mut out = forward(sample, program, &rules, &fwd)?;
                    let bce = bce_loss(&out.y_hat, sample.answer);
                    let upstream = bce_grad(&out.y_hat, sample.answer);
                    let grads = backward(&mut out.trace, &upstream, 1.0)?;
                    let hit = predict(&out.y_hat) == sample.answer;
                    Ok((bce, out.semantic_loss, hit, grads.rule))
                })
                .collect();
            // Sequential, ordered reduction keeps the sums reproducible.
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            let mut batch_loss = 0.0;
            for res in results {
                let (bce, sl, hit, rule_grads) = res?;
                epoch_bce += bce;
                epoch_sl += sl;
                batch_loss += bce + sl;
                correct += hit as usize;
                for (slot, g) in rule_grads {
                    *acc.entry(slot).or_insert(0.0) += g;
                }
            }
            if !batch_loss.is_finite() {
                return Err(LearnError::NonFiniteLoss { epoch, batch: batch_idx });
            }
            let grads: Vec<(usize, f64)> = acc.into_iter().collect();
            let rule_phase = (global_batch / cfg.optimizer_period) % 2 == 0;
            let floor = if epoch < cfg.grace_epochs { GRACE_FLOOR } else { 0.0 };
            if rule_phase {
                adam_rule.step(&mut store, &grads, cfg.lr_rule, floor);
            } else {
                // Fact probabilities are per-sample inputs here, not shared
                // parameters; the fact phase advances its clock and nothing
                // else.
                adam_fact.t += 1;
            }
            global_batch += 1;
        }
        let n = samples.len().max(1) as f64;
        metrics.push(EpochMetrics {
            epoch,
            loss: (epoch_bce + epoch_sl) / n,
            bce: epoch_bce / n,
            semantic: epoch_sl / n,
            train_accuracy: correct as f64 / n,
            active_rules: store.weights().iter().filter(|&&w| w > 0.0).count(),
        });
    }
    Ok(TrainOutput { store, adam_rule, adam_fact, metrics })
}

fn prior_map(program: &Program) -> BTreeMap<RuleTemplate, f64> {
    program.template_facts.iter().cloned().collect()
}

/// Accuracy report split by chain length.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    /// k -> (correct, total)
    pub per_k: BTreeMap<u32, (usize, usize)>,
    pub correct: usize,
    pub total: usize,
}

impl EvalReport {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.correct as f64 / self.total as f64
    }
}

/// Evaluate the `top_n` heaviest rules on a test set; prediction is the
/// argmax relation of the answer distribution.
pub fn evaluate(
    samples: &[Sample],
    program: &Program,
    store: &RuleWeightStore,
    cfg: &TrainConfig,
) -> Result<EvalReport, LearnError> {
    if store.n_relations() != program.vocab.len() {
        return Err(LearnError::VocabMismatch {
            expected: store.n_relations(),
            found: program.vocab.len(),
        });
    }
    let slots = store.top_rules(cfg.top_n);
    let rules = build_rules(program, store, &slots);
    let fwd = ForwardConfig {
        k: cfg.k,
        max_iters: cfg.max_iters,
        with_constraints: false,
        ..Default::default()
    };
    let hits: Vec<Result<(u32, bool), EngineError>> = samples
        .par_iter()
        .map(|sample| {
            let out = forward(sample, program, &rules, &fwd)?;
            Ok((sample.k, predict(&out.y_hat) == sample.answer))
        })
        .collect();
    let mut report = EvalReport::default();
    for res in hits {
        let (k, hit) = res?;
        let entry = report.per_k.entry(k).or_insert((0, 0));
        entry.0 += hit as usize;
        entry.1 += 1;
        report.correct += hit as usize;
        report.total += 1;
    }
    Ok(report)
}

/// Render the `top` heaviest rules, one per line:
/// `weight\tr3(a,c) <- r1(a,b) ^ r2(b,c)` with the unicode arrow and wedge.
pub fn export_rules(store: &RuleWeightStore, vocab: &Vocabulary, top: usize) -> String {
    let mut out = String::new();
    for slot in store.top_rules(top) {
        let RuleTemplate::Composite(r1, r2, r3) = store.template(slot) else { continue };
        out.push_str(&format!(
            "{:.6}\t{}(a,c) \u{2190} {}(a,b) \u{2227} {}(b,c)\n",
            store.get(slot),
            vocab.name(r3),
            vocab.name(r1),
            vocab.name(r2),
        ));
    }
    out
}

/// How many of the `top` heaviest rules appear in the composition oracle.
pub fn oracle_matches(store: &RuleWeightStore, oracle: &CompositionOracle, top: usize) -> usize {
    store
        .top_rules(top)
        .iter()
        .filter(|&&slot| {
            let RuleTemplate::Composite(r1, r2, r3) = store.template(slot) else { return false };
            oracle.compose(r1, r2) == Some(r3)
        })
        .count()
}

/// Serializable training checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub store: RuleWeightStore,
    pub adam_rule: AdamState,
    pub adam_fact: AdamState,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn new(out: &TrainOutput) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            store: out.store.clone(),
            adam_rule: out.adam_rule.clone(),
            adam_fact: out.adam_fact.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_dataset, GenSpec};

    fn vocab() -> Vocabulary {
        Vocabulary::kinship()
    }

    #[test]
    fn slot_round_trip() {
        let store = RuleWeightStore::new(20);
        assert_eq!(store.len(), 8000);
        for slot in [0usize, 1, 19, 20, 400, 7999, 4321] {
            let RuleTemplate::Composite(r1, r2, r3) = store.template(slot) else { panic!() };
            assert_eq!(store.slot(r1, r2, r3), slot);
        }
    }

    #[test]
    fn top_rules_orders_by_weight_then_slot() {
        let mut store = RuleWeightStore::new(20);
        store.set(5, 0.9);
        store.set(3, 0.9);
        store.set(7, 0.5);
        assert_eq!(store.top_rules(2), vec![3, 5]);
        assert_eq!(store.top_rules(10), vec![3, 5, 7]);
    }

    #[test]
    fn sampling_is_weight_biased_and_deterministic() {
        let mut store = RuleWeightStore::new(20);
        for slot in 0..store.len() {
            store.set(slot, 0.01);
        }
        store.set(42, 50.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut hits = 0;
        for _ in 0..50 {
            if store.sample_rules(10, &mut rng).contains(&42) {
                hits += 1;
            }
        }
        assert!(hits >= 48, "heavy rule sampled only {hits}/50 times");

        let a = store.sample_rules(150, &mut ChaCha8Rng::seed_from_u64(3));
        let b = store.sample_rules(150, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert_eq!(a.len(), 150);
    }

    #[test]
    fn bce_gradient_matches_finite_differences() {
        let y = vec![0.3, 0.9, 0.001];
        let ans = RelationId(1);
        let grad = bce_grad(&y, ans);
        let h = 1e-6;
        for i in 0..y.len() {
            let mut up = y.clone();
            let mut dn = y.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (bce_loss(&up, ans) - bce_loss(&dn, ans)) / (2.0 * h);
            assert!((grad[i] - fd).abs() < 1e-4 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn adam_projects_at_bounds() {
        let mut store = RuleWeightStore::new(2);
        let mut adam = AdamState::new(store.len());
        store.set(0, 0.0);
        store.set(1, 1.2);
        // Positive grad at 0 would push below 0: blocked.
        adam.step(&mut store, &[(0, 1.0)], 0.1, 0.0);
        assert_eq!(store.get(0), 0.0);
        // Negative grad at 0 moves up.
        let mut adam = AdamState::new(store.len());
        adam.step(&mut store, &[(0, -1.0)], 0.1, 0.0);
        assert!(store.get(0) > 0.0);
        // Negative grad above 1 would push further out: blocked.
        let mut adam = AdamState::new(store.len());
        adam.step(&mut store, &[(1, -1.0)], 0.1, 0.0);
        assert_eq!(store.get(1), 1.2);
        // Positive grad above 1 pulls back in.
        adam.step(&mut store, &[(1, 1.0)], 0.1, 0.0);
        assert!(store.get(1) < 1.2);
    }

    fn tiny_program() -> Program {
        Program { vocab: vocab(), ..Default::default() }
    }

    fn tiny_dataset(n: u32, k: u32, seed: u64) -> Vec<Sample> {
        let v = vocab();
        let oracle = CompositionOracle::builtin(&v).unwrap();
        let spec = GenSpec { counts: vec![(k, n)], seed, distractors: false };
        generate_dataset(&spec, &oracle, &v).unwrap()
    }

    #[test]
    fn training_learns_a_rule_on_a_tiny_set() {
        let program = tiny_program();
        let samples = tiny_dataset(60, 2, 11);
        let cfg = TrainConfig {
            epochs: 10,
            sample_n: 400,
            seed: 5,
            ..Default::default()
        };
        let out = train(&samples, &program, &cfg).unwrap();
        assert_eq!(out.metrics.len(), 10);
        let first = &out.metrics[0];
        let last = out.metrics.last().unwrap();
        assert!(last.loss < first.loss, "{} !< {}", last.loss, first.loss);
        let report = evaluate(&samples, &program, &out.store, &cfg).unwrap();
        assert!(report.accuracy() > 0.3, "accuracy {}", report.accuracy());
    }

    #[test]
    fn identical_configs_train_identically() {
        let program = tiny_program();
        let samples = tiny_dataset(8, 2, 3);
        let cfg = TrainConfig { epochs: 2, sample_n: 100, seed: 9, ..Default::default() };
        let a = train(&samples, &program, &cfg).unwrap();
        let b = train(&samples, &program, &cfg).unwrap();
        assert_eq!(a.store, b.store);
        assert_eq!(a.metrics, b.metrics);
        let ja = serde_json::to_string(&a.metrics).unwrap();
        let jb = serde_json::to_string(&b.metrics).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn export_lines_reparse() {
        let v = vocab();
        let mut store = RuleWeightStore::new(v.len());
        let slot = store.slot(
            v.relation("sister").unwrap(),
            v.relation("mother").unwrap(),
            v.relation("mother").unwrap(),
        );
        store.set(slot, 1.154);
        let text = export_rules(&store, &v, 1);
        assert!(text.starts_with("1.154000\tmother(a,c)"));
        let parsed = crate::parser::parse_priors(&text, &v).unwrap();
        assert_eq!(parsed.weights.len(), 1);
    }

    #[test]
    fn checkpoint_round_trips_through_json() {
        let program = tiny_program();
        let samples = tiny_dataset(4, 2, 2);
        let cfg = TrainConfig { epochs: 1, sample_n: 50, seed: 4, ..Default::default() };
        let out = train(&samples, &program, &cfg).unwrap();
        let ck = Checkpoint::new(&out);
        let json = serde_json::to_string(&ck).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(ck, back);
    }

    #[test]
    fn oracle_match_counting() {
        let v = vocab();
        let oracle = CompositionOracle::builtin(&v).unwrap();
        let mut store = RuleWeightStore::new(v.len());
        for (r1, r2, r3) in oracle.entries() {
            let slot = store.slot(r1, r2, r3);
            store.set(slot, 0.9);
        }
        assert_eq!(oracle_matches(&store, &oracle, 92), 92);
        // A junk rule with higher weight displaces one oracle rule.
        store.set(0, 1.0);
        assert_eq!(oracle_matches(&store, &oracle, 92), 91);
    }
}
