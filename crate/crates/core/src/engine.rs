//! Grounding and semi-naive fixpoint deduction with proof provenance,
//! answer distributions via WMC, constraint violation probabilities, and
//! the backward pass that turns upstream loss gradients into gradients on
//! fact probabilities and rule weights.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::logic::{Constraint, Program, RelationId, Rule, Sample, Vocabulary};
use crate::provenance::{
    tag_and, tag_or, FormulaArena, FormulaId, Proof, Tag, VarId, VarOrigin, WmcError,
    WmcEvaluator,
};

/// Interned entity handle, valid within one sample.
pub type EntityId = u32;

/// Ground atom key: (predicate, subject, object).
pub type AtomKey = (RelationId, EntityId, EntityId);

#[derive(Error, Debug)]
pub enum EngineError {
    #[error(transparent)]
    Wmc(#[from] WmcError),
    #[error("fact probability {0} outside [0, 1]")]
    BadFactProb(f64),
    #[error("trace does not match the gradient request: {0}")]
    StaleTrace(String),
}

/// What a provenance variable stands for, kept for proof reporting.
#[derive(Clone, PartialEq, Debug)]
pub enum VarLabel {
    Fact { pred: RelationId, sub: String, obj: String },
    Rule { description: String },
}

/// A rule ready for evaluation. `prob` is the clamped weight of the rule
/// variable (None for deterministic rules); `grad_key` routes gradients
/// back to a slot of the rule weight store.
#[derive(Clone, Debug)]
pub struct EngineRule {
    pub rule: Rule,
    pub prob: Option<f64>,
    pub grad_key: Option<usize>,
    pub description: String,
}

impl EngineRule {
    pub fn fixed(rule: Rule, description: String) -> Self {
        EngineRule { rule, prob: None, grad_key: None, description }
    }

    pub fn weighted(rule: Rule, prob: f64, grad_key: Option<usize>, description: String) -> Self {
        EngineRule { rule, prob: Some(prob), grad_key, description }
    }
}

/// Ground atoms with their tags plus the provenance variable registry.
#[derive(Clone, Debug, Default)]
pub struct FactStore {
    atoms: BTreeMap<AtomKey, Tag>,
    pub probs: Vec<f64>,
    pub origins: Vec<VarOrigin>,
    pub labels: Vec<VarLabel>,
    /// Gradient routing key per variable: fact index or rule store slot.
    pub grad_keys: Vec<Option<usize>>,
    entity_names: Vec<String>,
    entity_ids: HashMap<String, EntityId>,
    pub duplicate_facts: usize,
}

impl FactStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> EntityId {
        if let Some(&id) = self.entity_ids.get(name) {
            return id;
        }
        let id = self.entity_names.len() as EntityId;
        self.entity_names.push(name.to_string());
        self.entity_ids.insert(name.to_string(), id);
        id
    }

    pub fn entity(&self, name: &str) -> Option<EntityId> {
        self.entity_ids.get(name).copied()
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entity_names[id as usize]
    }

    fn fresh_var(&mut self, prob: f64, origin: VarOrigin, label: VarLabel, key: Option<usize>) -> VarId {
        let v = VarId(self.probs.len() as u32);
        self.probs.push(prob);
        self.origins.push(origin);
        self.labels.push(label);
        self.grad_keys.push(key);
        v
    }

    pub fn tag(&self, key: &AtomKey) -> Option<&Tag> {
        self.atoms.get(key)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&AtomKey, &Tag)> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn var_count(&self) -> usize {
        self.probs.len()
    }
}

/// Load a sample's KB into a fresh store: each fact gets its probability,
/// a fresh variable, and a singleton tag. Duplicate (pred, sub, obj)
/// entries keep the higher probability and are counted for diagnostics.
pub fn load_kb(sample: &Sample) -> Result<FactStore, EngineError> {
    let mut store = FactStore::new();
    for fact in &sample.facts {
        if !(0.0..=1.0).contains(&fact.prob) || fact.prob.is_nan() {
            return Err(EngineError::BadFactProb(fact.prob));
        }
        let sub = store.intern(&fact.sub);
        let obj = store.intern(&fact.obj);
        let key = (fact.pred, sub, obj);
        if let Some(existing) = store.atoms.get(&key) {
            store.duplicate_facts += 1;
            // Keep the max-probability copy of a duplicate fact.
            let existing_var = existing.proofs()[0].vars()[0];
            if fact.prob > store.probs[existing_var.index()] {
                store.probs[existing_var.index()] = fact.prob;
            }
            continue;
        }
        let fact_idx = store.atoms.len();
        let v = store.fresh_var(
            fact.prob,
            VarOrigin::Fact,
            VarLabel::Fact {
                pred: fact.pred,
                sub: fact.sub.clone(),
                obj: fact.obj.clone(),
            },
            Some(fact_idx),
        );
        store.atoms.insert(key, Tag::singleton(v));
    }
    Ok(store)
}

/// Register rule variables for the weighted rules in `rules`, returning the
/// per-rule optional variable in input order.
pub fn register_rule_vars(store: &mut FactStore, rules: &[EngineRule]) -> Vec<Option<VarId>> {
    rules
        .iter()
        .map(|r| {
            r.prob.map(|p| {
                store.fresh_var(
                    p,
                    VarOrigin::Rule,
                    VarLabel::Rule { description: r.description.clone() },
                    r.grad_key,
                )
            })
        })
        .collect()
}

fn match_atom(
    pattern: &crate::logic::Atom,
    key: &AtomKey,
    bindings: &mut [Option<EntityId>],
) -> Option<Vec<usize>> {
    if pattern.pred != key.0 {
        return None;
    }
    let mut bound_here = Vec::new();
    for (slot, val) in [(pattern.args[0], key.1), (pattern.args[1], key.2)] {
        match bindings[slot as usize] {
            Some(existing) if existing != val => {
                for b in bound_here {
                    bindings[b] = None;
                }
                return None;
            }
            Some(_) => {}
            None => {
                bindings[slot as usize] = Some(val);
                bound_here.push(slot as usize);
            }
        }
    }
    Some(bound_here)
}

/// Outcome of the fixpoint loop.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct FixpointInfo {
    pub iterations: usize,
    pub saturated: bool,
}

/// Semi-naive bottom-up evaluation. Each firing ANDs the body tags and the
/// rule's own variable tag, then ORs the result into the head atom's tag.
/// Iterates until no tag changes or `max_iters` is hit.
pub fn fixpoint(
    store: &mut FactStore,
    rules: &[EngineRule],
    k: usize,
    max_iters: usize,
) -> FixpointInfo {
    let rule_vars = register_rule_vars(store, rules);
    fixpoint_with_vars(store, rules, &rule_vars, k, max_iters)
}

pub fn fixpoint_with_vars(
    store: &mut FactStore,
    rules: &[EngineRule],
    rule_vars: &[Option<VarId>],
    k: usize,
    max_iters: usize,
) -> FixpointInfo {
    let mut delta: BTreeSet<AtomKey> = store.atoms.keys().copied().collect();
    let mut iterations = 0;
    while !delta.is_empty() && iterations < max_iters {
        iterations += 1;
        let mut pending: BTreeMap<AtomKey, Tag> = BTreeMap::new();
        for (rule_idx, er) in rules.iter().enumerate() {
            let rule = &er.rule;
            let nvars = rule.var_count();
            // Require at least one body atom from the delta set.
            for delta_pos in 0..rule.body.len() {
                for key in delta.iter() {
                    let mut bindings = vec![None; nvars];
                    if match_atom(&rule.body[delta_pos], key, &mut bindings).is_none() {
                        continue;
                    }
                    let seed_tag = store.atoms[key].clone();
                    join_rest(
                        store,
                        rule,
                        delta_pos,
                        0,
                        &mut bindings,
                        seed_tag,
                        rule_vars[rule_idx],
                        k,
                        &mut pending,
                    );
                }
            }
        }
        let mut next_delta = BTreeSet::new();
        for (key, tag) in pending {
            let merged = match store.atoms.get(&key) {
                Some(existing) => tag_or(existing, &tag, k, &store.probs),
                None => tag,
            };
            let changed = store.atoms.get(&key) != Some(&merged);
            if changed {
                store.atoms.insert(key, merged);
                next_delta.insert(key);
            }
        }
        delta = next_delta;
    }
    FixpointInfo { iterations, saturated: delta.is_empty() }
}

/// Extend a partial match over the remaining body atoms, then fire.
#[allow(clippy::too_many_arguments)]
fn join_rest(
    store: &FactStore,
    rule: &Rule,
    delta_pos: usize,
    pos: usize,
    bindings: &mut Vec<Option<EntityId>>,
    tag_so_far: Tag,
    rule_var: Option<VarId>,
    k: usize,
    pending: &mut BTreeMap<AtomKey, Tag>,
) {
    if pos == rule.body.len() {
        for &(x, y) in &rule.neq_guards {
            if bindings[x as usize] == bindings[y as usize] {
                return;
            }
        }
        let head_sub = match bindings[rule.head.args[0] as usize] {
            Some(e) => e,
            None => return,
        };
        let head_obj = match bindings[rule.head.args[1] as usize] {
            Some(e) => e,
            None => return,
        };
        let mut firing = tag_so_far;
        if let Some(v) = rule_var {
            firing = tag_and(&firing, &Tag::singleton(v), k, &store.probs);
        }
        let key = (rule.head.pred, head_sub, head_obj);
        let merged = match pending.get(&key) {
            Some(existing) => tag_or(existing, &firing, k, &store.probs),
            None => firing,
        };
        pending.insert(key, merged);
        return;
    }
    if pos == delta_pos {
        let tag = tag_so_far;
        join_rest(store, rule, delta_pos, pos + 1, bindings, tag, rule_var, k, pending);
        return;
    }
    let pattern = &rule.body[pos];
    // Scan atoms of the pattern's predicate; stores are small per sample.
    let lo = (pattern.pred, 0, 0);
    let hi = (RelationId(pattern.pred.0 + 1), 0, 0);
    let matches: Vec<(AtomKey, Tag)> = store
        .atoms
        .range(lo..hi)
        .map(|(key, tag)| (*key, tag.clone()))
        .collect();
    for (key, tag) in matches {
        let saved = bindings.clone();
        if match_atom(pattern, &key, bindings).is_some() {
            let combined = tag_and(&tag_so_far, &tag, k, &store.probs);
            join_rest(store, rule, delta_pos, pos + 1, bindings, combined, rule_var, k, pending);
        }
        *bindings = saved;
    }
}

/// The per-relation answer probabilities; independent WMC values, not
/// required to sum to one.
pub type AnswerDistribution = Vec<f64>;

/// Everything the backward pass needs: the formula arena, the registry
/// snapshot, and the per-relation / per-constraint formulas.
pub struct ForwardTrace {
    pub arena: FormulaArena,
    pub probs: Vec<f64>,
    pub origins: Vec<VarOrigin>,
    pub grad_keys: Vec<Option<usize>>,
    pub relation_formulas: Vec<FormulaId>,
    /// (loss weight, violation formula) per evaluated constraint.
    pub constraint_terms: Vec<(f64, FormulaId)>,
    pub saturated: bool,
}

/// Argmax over the distribution; ties break toward the smallest id.
pub fn predict(y_hat: &AnswerDistribution) -> RelationId {
    let mut best = 0usize;
    for (i, &p) in y_hat.iter().enumerate() {
        if p > y_hat[best] {
            best = i;
        }
    }
    RelationId(best as u8)
}

/// WMC the tag of every relation on the query pair.
pub fn answer_distribution(
    store: &FactStore,
    query: (&str, &str),
    vocab: &Vocabulary,
    arena: &mut FormulaArena,
) -> Result<(AnswerDistribution, Vec<FormulaId>), EngineError> {
    let sub = store.entity(query.0);
    let obj = store.entity(query.1);
    let mut formulas = Vec::with_capacity(vocab.len());
    for r in vocab.ids() {
        let formula = match (sub, obj) {
            (Some(s), Some(o)) => match store.tag(&(r, s, o)) {
                Some(tag) => arena.from_tag(tag),
                None => arena.fls(),
            },
            _ => arena.fls(),
        };
        formulas.push(formula);
    }
    let mut eval = WmcEvaluator::new(arena, &store.probs);
    let mut dist = Vec::with_capacity(formulas.len());
    for &f in &formulas {
        dist.push(eval.wmc(f)?);
    }
    Ok((dist, formulas))
}

/// Build the violation formula of one constraint.
///
/// Result IC: NOT of the conjunction, over every entity pair carrying the
/// premise, of `premise(a,b) => OR conclusions(b,a)`. Rule ICs: OR over the
/// variables of table-violating composite rules.
pub fn constraint_formula(
    store: &FactStore,
    c: &Constraint,
    vocab: &Vocabulary,
    rules: &[EngineRule],
    rule_vars: &[Option<VarId>],
    arena: &mut FormulaArena,
) -> FormulaId {
    match c {
        Constraint::ResultIc { premise, conclusions } => {
            let lo = (*premise, 0, 0);
            let hi = (RelationId(premise.0 + 1), 0, 0);
            let pairs: Vec<(EntityId, EntityId, Tag)> = store
                .atoms
                .range(lo..hi)
                .map(|(&(_, a, b), tag)| (a, b, tag.clone()))
                .collect();
            let mut implications = Vec::new();
            for (a, b, premise_tag) in pairs {
                let prem = arena.from_tag(&premise_tag);
                let concl_parts: Vec<FormulaId> = conclusions
                    .iter()
                    .filter_map(|&cr| store.tag(&(cr, b, a)))
                    .map(|tag| arena.from_tag(tag))
                    .collect();
                let concl = arena.or(concl_parts);
                let not_prem = arena.not(prem);
                implications.push(arena.or([not_prem, concl]));
            }
            let all_hold = arena.and(implications);
            arena.not(all_hold)
        }
        Constraint::RuleGenderIc | Constraint::RuleGenIc => {
            let mut violators = Vec::new();
            for (idx, er) in rules.iter().enumerate() {
                let Some(var) = rule_vars[idx] else { continue };
                // Only composite-shaped rules fall under the rule ICs.
                if er.rule.body.len() != 2 {
                    continue;
                }
                let r1 = er.rule.body[0].pred;
                let r2 = er.rule.body[1].pred;
                let r3 = er.rule.head.pred;
                if crate::logic::composite_violates(vocab, c, r1, r2, r3) {
                    violators.push(arena.var(var));
                }
            }
            arena.or(violators)
        }
    }
}

/// Evaluate one constraint against a finished store: violation probability
/// plus its gradient on every participating variable.
pub fn constraint_violation(
    store: &FactStore,
    c: &Constraint,
    vocab: &Vocabulary,
    rules: &[EngineRule],
    rule_vars: &[Option<VarId>],
) -> Result<(f64, Vec<(VarId, f64)>), EngineError> {
    let mut arena = FormulaArena::new();
    let f = constraint_formula(store, c, vocab, rules, rule_vars, &mut arena);
    let (value, grads) = WmcEvaluator::new(&mut arena, &store.probs).wmc_grad(f)?;
    Ok((value, grads))
}

/// Forward-pass configuration.
#[derive(Clone, Copy, Debug)]
pub struct ForwardConfig {
    /// Top-k proof bound.
    pub k: usize,
    pub max_iters: usize,
    pub w_result_ic: f64,
    pub w_rule_ic: f64,
    /// Skip constraint evaluation entirely (evaluation-only passes).
    pub with_constraints: bool,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            k: 3,
            max_iters: 16,
            w_result_ic: 0.1,
            w_rule_ic: 0.01,
            with_constraints: true,
        }
    }
}

pub struct ForwardOutput {
    pub y_hat: AnswerDistribution,
    pub semantic_loss: f64,
    pub trace: ForwardTrace,
    pub store: FactStore,
}

/// Full deduction pass: load the KB, register rule variables, run the
/// fixpoint, read off the answer distribution, and evaluate the weighted
/// constraint violations.
pub fn forward(
    sample: &Sample,
    program: &Program,
    rules: &[EngineRule],
    config: &ForwardConfig,
) -> Result<ForwardOutput, EngineError> {
    let mut store = load_kb(sample)?;
    let rule_vars = register_rule_vars(&mut store, rules);
    let info = fixpoint_with_vars(&mut store, rules, &rule_vars, config.k, config.max_iters);

    let mut arena = FormulaArena::new();
    let (y_hat, relation_formulas) = answer_distribution(
        &store,
        (&sample.query.0, &sample.query.1),
        &program.vocab,
        &mut arena,
    )?;

    let mut constraint_terms = Vec::new();
    let mut semantic_loss = 0.0;
    if config.with_constraints {
        for c in &program.constraints {
            let weight = match c {
                Constraint::ResultIc { .. } => config.w_result_ic,
                Constraint::RuleGenderIc | Constraint::RuleGenIc => config.w_rule_ic,
            };
            if weight == 0.0 {
                continue;
            }
            let f = constraint_formula(&store, c, &program.vocab, rules, &rule_vars, &mut arena);
            let value = WmcEvaluator::new(&mut arena, &store.probs).wmc(f)?;
            semantic_loss += weight * value;
            constraint_terms.push((weight, f));
        }
    }

    let trace = ForwardTrace {
        arena,
        probs: store.probs.clone(),
        origins: store.origins.clone(),
        grad_keys: store.grad_keys.clone(),
        relation_formulas,
        constraint_terms,
        saturated: info.saturated,
    };
    Ok(ForwardOutput { y_hat, semantic_loss, trace, store })
}

/// Gradients on fact variables (keyed by fact index) and rule variables
/// (keyed by rule store slot).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    pub fact: Vec<(usize, f64)>,
    pub rule: Vec<(usize, f64)>,
}

/// Chain rule through every stored formula: `upstream_y[r] * dWMC_r/dp(v)`
/// plus `upstream_sl * weight_c * dWMC_c/dp(v)`, accumulated in a fixed
/// deterministic order.
pub fn backward(
    trace: &mut ForwardTrace,
    upstream_y: &[f64],
    upstream_sl: f64,
) -> Result<Gradients, EngineError> {
    if upstream_y.len() != trace.relation_formulas.len() {
        return Err(EngineError::StaleTrace(format!(
            "{} upstream entries for {} relation formulas",
            upstream_y.len(),
            trace.relation_formulas.len()
        )));
    }
    let mut acc: BTreeMap<VarId, f64> = BTreeMap::new();
    let probs = trace.probs.clone();
    let mut eval = WmcEvaluator::new(&mut trace.arena, &probs);
    for (r, &f) in trace.relation_formulas.iter().enumerate() {
        let up = upstream_y[r];
        if up == 0.0 {
            continue;
        }
        let (_, grads) = eval.wmc_grad(f)?;
        for (v, g) in grads {
            *acc.entry(v).or_insert(0.0) += up * g;
        }
    }
    if upstream_sl != 0.0 {
        for &(weight, f) in &trace.constraint_terms {
            let (_, grads) = eval.wmc_grad(f)?;
            for (v, g) in grads {
                *acc.entry(v).or_insert(0.0) += upstream_sl * weight * g;
            }
        }
    }
    let mut out = Gradients::default();
    for (v, g) in acc {
        let key = trace
            .grad_keys
            .get(v.index())
            .copied()
            .flatten();
        let origin = *trace
            .origins
            .get(v.index())
            .ok_or_else(|| EngineError::StaleTrace(format!("variable v{} not in trace", v.0)))?;
        if let Some(key) = key {
            match origin {
                VarOrigin::Fact => out.fact.push((key, g)),
                VarOrigin::Rule => out.rule.push((key, g)),
            }
        }
    }
    Ok(out)
}

/// Brute-force possible-worlds oracle: enumerate every assignment of fact
/// and rule variables, run plain boolean Datalog per world, and sum the
/// weights of worlds where `target(s, o)` is derivable.
pub fn possible_worlds_distribution(
    sample: &Sample,
    vocab: &Vocabulary,
    rules: &[EngineRule],
    max_iters: usize,
) -> Result<AnswerDistribution, EngineError> {
    let n_facts = sample.facts.len();
    let weighted: Vec<usize> = (0..rules.len()).filter(|&i| rules[i].prob.is_some()).collect();
    let n_vars = n_facts + weighted.len();
    if n_vars > 24 {
        return Err(EngineError::StaleTrace(format!(
            "possible-worlds oracle capped at 24 variables, got {n_vars}"
        )));
    }
    let mut dist = vec![0.0; vocab.len()];
    for mask in 0u64..(1u64 << n_vars) {
        let mut weight = 1.0;
        for (i, fact) in sample.facts.iter().enumerate() {
            let on = mask >> i & 1 == 1;
            weight *= if on { fact.prob } else { 1.0 - fact.prob };
        }
        for (j, &ri) in weighted.iter().enumerate() {
            let on = mask >> (n_facts + j) & 1 == 1;
            let p = rules[ri].prob.unwrap();
            weight *= if on { p } else { 1.0 - p };
        }
        if weight == 0.0 {
            continue;
        }
        // Boolean Datalog in this world.
        let world_sample = Sample {
            facts: sample
                .facts
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, f)| crate::logic::ProbFact { prob: 1.0, ..f.clone() })
                .collect(),
            ..sample.clone()
        };
        let world_rules: Vec<EngineRule> = rules
            .iter()
            .enumerate()
            .filter(|(i, r)| {
                r.prob.is_none() || {
                    let j = weighted.iter().position(|&w| w == *i).unwrap();
                    mask >> (n_facts + j) & 1 == 1
                }
            })
            .map(|(_, r)| EngineRule::fixed(r.rule.clone(), r.description.clone()))
            .collect();
        let mut store = load_kb(&world_sample)?;
        fixpoint(&mut store, &world_rules, crate::provenance::K_INF, max_iters);
        let (sub, obj) = (store.entity(&sample.query.0), store.entity(&sample.query.1));
        if let (Some(s), Some(o)) = (sub, obj) {
            for r in vocab.ids() {
                if store.tag(&(r, s, o)).is_some() {
                    dist[r.index()] += weight;
                }
            }
        }
    }
    Ok(dist)
}

/// Human-readable proof listing for the predicted relation, for reports.
pub fn proof_report(
    store: &FactStore,
    vocab: &Vocabulary,
    query: (&str, &str),
    relation: RelationId,
) -> Vec<Vec<String>> {
    let (Some(s), Some(o)) = (store.entity(query.0), store.entity(query.1)) else {
        return Vec::new();
    };
    let Some(tag) = store.tag(&(relation, s, o)) else {
        return Vec::new();
    };
    tag.proofs()
        .iter()
        .map(|p: &Proof| {
            p.vars()
                .iter()
                .map(|v| match &store.labels[v.index()] {
                    VarLabel::Fact { pred, sub, obj } => format!(
                        "{:.4}::{}({}, {})",
                        store.probs[v.index()],
                        vocab.name(*pred),
                        sub,
                        obj
                    ),
                    VarLabel::Rule { description } => {
                        format!("{:.4}::rule[{}]", store.probs[v.index()], description)
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{instantiate_template, ProbFact, RuleTemplate};
    use crate::provenance::K_INF;

    fn vocab() -> Vocabulary {
        Vocabulary::kinship()
    }

    fn fact(v: &Vocabulary, rel: &str, sub: &str, obj: &str, prob: f64) -> ProbFact {
        ProbFact {
            pred: v.relation(rel).unwrap(),
            sub: sub.into(),
            obj: obj.into(),
            prob,
        }
    }

    fn composite_rule(v: &Vocabulary, r1: &str, r2: &str, r3: &str, prob: f64) -> EngineRule {
        let t = RuleTemplate::Composite(
            v.relation(r1).unwrap(),
            v.relation(r2).unwrap(),
            v.relation(r3).unwrap(),
        );
        EngineRule::weighted(
            instantiate_template(&t),
            prob,
            None,
            format!("composite({r1}, {r2}, {r3})"),
        )
    }

    fn program(v: &Vocabulary) -> Program {
        Program { vocab: v.clone(), ..Default::default() }
    }

    #[test]
    fn load_kb_basics() {
        let v = vocab();
        let sample = Sample {
            facts: vec![
                fact(&v, "brother", "D", "R", 0.9),
                fact(&v, "daughter", "R", "K", 0.8),
            ],
            query: ("D".into(), "K".into()),
            answer: v.relation("niece").unwrap(),
            k: 2,
        };
        let store = load_kb(&sample).unwrap();
        assert_eq!(store.var_count(), 2);
        assert_eq!(store.len(), 2);
        let key = (v.relation("brother").unwrap(), 0, 1);
        assert_eq!(store.tag(&key), Some(&Tag::singleton(VarId(0))));
        assert_eq!(store.probs[0], 0.9);

        let empty = Sample { facts: vec![], query: ("a".into(), "b".into()), answer: RelationId(0), k: 2 };
        assert!(load_kb(&empty).unwrap().is_empty());
    }

    #[test]
    fn duplicate_fact_keeps_max_prob() {
        let v = vocab();
        let sample = Sample {
            facts: vec![
                fact(&v, "brother", "D", "R", 0.4),
                fact(&v, "brother", "D", "R", 0.9),
            ],
            query: ("D".into(), "R".into()),
            answer: v.relation("brother").unwrap(),
            k: 2,
        };
        let store = load_kb(&sample).unwrap();
        assert_eq!(store.var_count(), 1);
        assert_eq!(store.duplicate_facts, 1);
        assert_eq!(store.probs[0], 0.9);
    }

    #[test]
    fn niece_propagation_is_0_72() {
        let v = vocab();
        let sample = Sample {
            facts: vec![
                fact(&v, "brother", "D", "R", 0.9),
                fact(&v, "daughter", "R", "K", 0.8),
            ],
            query: ("D".into(), "K".into()),
            answer: v.relation("niece").unwrap(),
            k: 2,
        };
        let rules = vec![composite_rule(&v, "brother", "daughter", "niece", 1.0)];
        let out = forward(&sample, &program(&v), &rules, &ForwardConfig::default()).unwrap();
        let niece = v.relation("niece").unwrap();
        assert!((out.y_hat[niece.index()] - 0.72).abs() < 1e-12);
        assert_eq!(predict(&out.y_hat), niece);
    }

    #[test]
    fn deterministic_chain_derives_at_probability_one() {
        let v = vocab();
        let sample = Sample {
            facts: vec![
                fact(&v, "brother", "A", "B", 1.0),
                fact(&v, "father", "B", "C", 1.0),
            ],
            query: ("A".into(), "C".into()),
            answer: v.relation("father").unwrap(),
            k: 2,
        };
        let rules = vec![composite_rule(&v, "brother", "father", "father", 1.0)];
        let out = forward(&sample, &program(&v), &rules, &ForwardConfig::default()).unwrap();
        assert!((out.y_hat[v.relation("father").unwrap().index()] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_applicable_rules_is_a_one_iteration_fixpoint() {
        let v = vocab();
        let sample = Sample {
            facts: vec![fact(&v, "brother", "A", "B", 1.0)],
            query: ("A".into(), "B".into()),
            answer: v.relation("brother").unwrap(),
            k: 2,
        };
        let mut store = load_kb(&sample).unwrap();
        let before = store.len();
        let rules = vec![composite_rule(&v, "father", "mother", "grandmother", 1.0)];
        let info = fixpoint(&mut store, &rules, 3, 16);
        assert_eq!(store.len(), before);
        assert!(info.saturated);
        assert_eq!(info.iterations, 1);
    }

    #[test]
    fn disjoint_proofs_combine_to_0_75() {
        // Two disjoint derivations of the same relation, each 0.5.
        let v = vocab();
        let sample = Sample {
            facts: vec![
                fact(&v, "brother", "A", "B", 0.5),
                fact(&v, "sister", "A", "C", 1.0),
                fact(&v, "brother", "C", "B", 0.5),
            ],
            query: ("A".into(), "B".into()),
            answer: v.relation("brother").unwrap(),
            k: 2,
        };
        let rules = vec![composite_rule(&v, "sister", "brother", "brother", 1.0)];
        let out = forward(&sample, &program(&v), &rules, &ForwardConfig::default()).unwrap();
        let brother = v.relation("brother").unwrap();
        // P(direct OR derived) with the sister edge certain: 1 - 0.5 * 0.5.
        assert!((out.y_hat[brother.index()] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn query_entities_absent_gives_all_zeros() {
        let v = vocab();
        let sample = Sample {
            facts: vec![fact(&v, "brother", "A", "B", 1.0)],
            query: ("X".into(), "Y".into()),
            answer: v.relation("brother").unwrap(),
            k: 2,
        };
        let out = forward(&sample, &program(&v), &[], &ForwardConfig::default()).unwrap();
        assert!(out.y_hat.iter().all(|&p| p == 0.0));
        assert_eq!(predict(&out.y_hat), RelationId(0));
    }

    #[test]
    fn predict_tie_breaks_to_smallest_id() {
        let mut y = vec![0.0; 20];
        y[3] = 0.6;
        y[7] = 0.6;
        assert_eq!(predict(&y), RelationId(3));
    }

    #[test]
    fn result_ic_father_without_inverse() {
        let v = vocab();
        let sample = Sample {
            facts: vec![fact(&v, "father", "A", "B", 1.0)],
            query: ("A".into(), "B".into()),
            answer: v.relation("father").unwrap(),
            k: 2,
        };
        let store = load_kb(&sample).unwrap();
        let c = Constraint::ResultIc {
            premise: v.relation("father").unwrap(),
            conclusions: vec![v.relation("son").unwrap(), v.relation("daughter").unwrap()],
        };
        let (viol, _) = constraint_violation(&store, &c, &v, &[], &[]).unwrap();
        assert!((viol - 1.0).abs() < 1e-12);
    }

    #[test]
    fn result_ic_partial_inverse() {
        let v = vocab();
        let sample = Sample {
            facts: vec![
                fact(&v, "father", "A", "B", 1.0),
                fact(&v, "son", "B", "A", 0.7),
            ],
            query: ("A".into(), "B".into()),
            answer: v.relation("father").unwrap(),
            k: 2,
        };
        let store = load_kb(&sample).unwrap();
        let c = Constraint::ResultIc {
            premise: v.relation("father").unwrap(),
            conclusions: vec![v.relation("son").unwrap(), v.relation("daughter").unwrap()],
        };
        let (viol, grads) = constraint_violation(&store, &c, &v, &[], &[]).unwrap();
        assert!((viol - 0.3).abs() < 1e-12);
        // Raising P(son) lowers the violation.
        let son_grad = grads.iter().find(|(u, _)| u.index() == 1).unwrap().1;
        assert!(son_grad < 0.0);
    }

    #[test]
    fn rule_ic_violation_equals_rule_weight() {
        let v = vocab();
        let sample = Sample {
            facts: vec![],
            query: ("A".into(), "B".into()),
            answer: RelationId(0),
            k: 2,
        };
        let mut store = load_kb(&sample).unwrap();
        // nephew instead of niece flips the gender.
        let rules = vec![composite_rule(&v, "brother", "daughter", "nephew", 0.37)];
        let rule_vars = register_rule_vars(&mut store, &rules);
        let (viol, _) =
            constraint_violation(&store, &Constraint::RuleGenderIc, &v, &rules, &rule_vars)
                .unwrap();
        assert!((viol - 0.37).abs() < 1e-12);
        // The same rule satisfies the generation IC.
        let (viol, _) =
            constraint_violation(&store, &Constraint::RuleGenIc, &v, &rules, &rule_vars).unwrap();
        assert_eq!(viol, 0.0);
    }

    #[test]
    fn backward_product_rule() {
        let v = vocab();
        let sample = Sample {
            facts: vec![
                fact(&v, "brother", "D", "R", 0.9),
                fact(&v, "daughter", "R", "K", 0.8),
            ],
            query: ("D".into(), "K".into()),
            answer: v.relation("niece").unwrap(),
            k: 2,
        };
        let rules = vec![composite_rule(&v, "brother", "daughter", "niece", 1.0)];
        let mut out = forward(&sample, &program(&v), &rules, &ForwardConfig::default()).unwrap();
        let mut upstream = vec![0.0; v.len()];
        upstream[v.relation("niece").unwrap().index()] = 1.0;
        let grads = backward(&mut out.trace, &upstream, 0.0).unwrap();
        let m: std::collections::HashMap<usize, f64> = grads.fact.into_iter().collect();
        assert!((m[&0] - 0.8).abs() < 1e-12);
        assert!((m[&1] - 0.9).abs() < 1e-12);

        // Zero upstream -> zero grads.
        let grads = backward(&mut out.trace, &vec![0.0; v.len()], 0.0).unwrap();
        assert!(grads.fact.is_empty() && grads.rule.is_empty());

        // Mismatched upstream length -> stale trace error.
        assert!(backward(&mut out.trace, &[0.0; 3], 0.0).is_err());
    }

    #[test]
    fn chain_saturates_within_k_iterations() {
        let v = vocab();
        // mother chain of length 6 with the transitive-style composite rule.
        let k = 6usize;
        let names: Vec<String> = (0..=k).map(|i| format!("e{i}")).collect();
        let facts = (0..k)
            .map(|i| fact(&v, "mother", &names[i], &names[i + 1], 1.0))
            .collect();
        let sample = Sample {
            facts,
            query: (names[0].clone(), names[k].clone()),
            answer: v.relation("grandmother").unwrap(),
            k: k as u32,
        };
        let mut store = load_kb(&sample).unwrap();
        let rules = vec![composite_rule(&v, "mother", "grandmother", "grandmother", 1.0),
                         composite_rule(&v, "mother", "mother", "grandmother", 1.0)];
        let info = fixpoint(&mut store, &rules, 3, 16);
        assert!(info.saturated);
        assert!(info.iterations <= k + 1);
    }

    #[test]
    fn fixpoint_matches_possible_worlds_on_small_instance() {
        let v = vocab();
        let sample = Sample {
            facts: vec![
                fact(&v, "brother", "D", "R", 0.9),
                fact(&v, "daughter", "R", "K", 0.8),
                fact(&v, "niece", "D", "K", 0.3),
            ],
            query: ("D".into(), "K".into()),
            answer: v.relation("niece").unwrap(),
            k: 2,
        };
        let rules = vec![composite_rule(&v, "brother", "daughter", "niece", 0.7)];
        let cfg = ForwardConfig { k: K_INF, with_constraints: false, ..Default::default() };
        let out = forward(&sample, &program(&v), &rules, &cfg).unwrap();
        let oracle = possible_worlds_distribution(&sample, &v, &rules, 16).unwrap();
        for (a, b) in out.y_hat.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
