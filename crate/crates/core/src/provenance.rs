//! Top-k proof provenance and exact differentiable weighted model counting.
//!
//! Derived facts carry a [`Tag`]: a set of at most K proofs, each proof a set
//! of boolean variables (fact variables and rule variables). Tags lower to
//! DNF formulas whose probability under independent Bernoulli variables is
//! computed exactly by Shannon expansion over a hash-consed formula store.

use std::collections::HashMap;

use thiserror::Error;

/// Boolean variable backing one probabilistic fact or one sampled rule.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VarOrigin {
    Fact,
    Rule,
}

/// One proof: a duplicate-free, sorted set of positive variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Proof(Vec<VarId>);

impl Proof {
    pub fn empty() -> Self {
        Proof(Vec::new())
    }

    pub fn singleton(v: VarId) -> Self {
        Proof(vec![v])
    }

    pub fn from_vars(mut vars: Vec<VarId>) -> Self {
        vars.sort_unstable();
        vars.dedup();
        Proof(vars)
    }

    pub fn vars(&self) -> &[VarId] {
        &self.0
    }

    /// Merge two proofs (conjunction of premises).
    pub fn union(&self, other: &Proof) -> Proof {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Proof(out)
    }

    pub fn is_superset_of(&self, other: &Proof) -> bool {
        if other.0.len() > self.0.len() {
            return false;
        }
        let mut i = 0;
        for v in &other.0 {
            loop {
                if i >= self.0.len() {
                    return false;
                }
                match self.0[i].cmp(v) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Equal => {
                        i += 1;
                        break;
                    }
                    std::cmp::Ordering::Greater => return false,
                }
            }
        }
        true
    }

    pub fn prob(&self, probs: &[f64]) -> f64 {
        self.0.iter().map(|v| probs[v.index()]).product()
    }
}

/// Unbounded K: keep every proof.
pub const K_INF: usize = usize::MAX;

/// A set of at most K proofs with absorption applied (no proof is a
/// superset of another). Stored in canonical lexicographic order.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Tag {
    proofs: Vec<Proof>,
}

impl Tag {
    pub fn empty() -> Self {
        Tag { proofs: Vec::new() }
    }

    /// The always-true tag (one empty proof).
    pub fn one() -> Self {
        Tag { proofs: vec![Proof::empty()] }
    }

    pub fn singleton(v: VarId) -> Self {
        Tag { proofs: vec![Proof::singleton(v)] }
    }

    pub fn from_proofs(proofs: Vec<Proof>, k: usize, probs: &[f64]) -> Self {
        normalize(proofs, k, probs)
    }

    pub fn proofs(&self) -> &[Proof] {
        &self.proofs
    }

    pub fn is_empty(&self) -> bool {
        self.proofs.is_empty()
    }
}

/// Absorption plus top-K truncation by product probability, then canonical
/// lexicographic ordering. Ties on probability break lexicographically so
/// the result is independent of input order.
fn normalize(mut proofs: Vec<Proof>, k: usize, probs: &[f64]) -> Tag {
    proofs.sort_unstable();
    proofs.dedup();
    // Absorption: drop any proof that is a superset of another.
    let mut kept: Vec<Proof> = Vec::with_capacity(proofs.len());
    'outer: for (i, p) in proofs.iter().enumerate() {
        for (j, q) in proofs.iter().enumerate() {
            if i != j && p.is_superset_of(q) && (!q.is_superset_of(p) || j < i) {
                continue 'outer;
            }
        }
        kept.push(p.clone());
    }
    if kept.len() > k {
        let mut scored: Vec<(f64, Proof)> =
            kept.into_iter().map(|p| (p.prob(probs), p)).collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.1.cmp(&b.1))
        });
        scored.truncate(k);
        kept = scored.into_iter().map(|(_, p)| p).collect();
        kept.sort_unstable();
    }
    Tag { proofs: kept }
}

/// Disjunction of two tags: union of proof sets, absorption, top-K.
pub fn tag_or(t1: &Tag, t2: &Tag, k: usize, probs: &[f64]) -> Tag {
    let mut proofs = t1.proofs.clone();
    proofs.extend(t2.proofs.iter().cloned());
    normalize(proofs, k, probs)
}

/// Conjunction of two tags: pairwise proof unions, absorption, top-K.
pub fn tag_and(t1: &Tag, t2: &Tag, k: usize, probs: &[f64]) -> Tag {
    let mut proofs = Vec::with_capacity(t1.proofs.len() * t2.proofs.len());
    for p in &t1.proofs {
        for q in &t2.proofs {
            proofs.push(p.union(q));
        }
    }
    normalize(proofs, k, probs)
}

/// Hash-consed boolean formula node.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum Node {
    True,
    False,
    Var(VarId),
    Not(FormulaId),
    And(Vec<FormulaId>),
    Or(Vec<FormulaId>),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FormulaId(u32);

#[derive(Error, Debug, PartialEq)]
pub enum WmcError {
    #[error("variable v{0} has no probability binding")]
    UnboundVar(u32),
    #[error("probability {0} for v{1} outside [0, 1]")]
    BadProb(f64, u32),
    #[error("formula has {0} variables, brute force capped at {1}")]
    TooManyVars(usize, usize),
}

/// Arena of hash-consed formulas. Structural sharing makes the Shannon
/// expansion memo effective across conditioning branches.
#[derive(Default, Debug)]
pub struct FormulaArena {
    nodes: Vec<Node>,
    dedup: HashMap<Node, FormulaId>,
}

impl FormulaArena {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, node: Node) -> FormulaId {
        if let Some(&id) = self.dedup.get(&node) {
            return id;
        }
        let id = FormulaId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.dedup.insert(node, id);
        id
    }

    pub fn tru(&mut self) -> FormulaId {
        self.intern(Node::True)
    }

    pub fn fls(&mut self) -> FormulaId {
        self.intern(Node::False)
    }

    pub fn var(&mut self, v: VarId) -> FormulaId {
        self.intern(Node::Var(v))
    }

    pub fn not(&mut self, f: FormulaId) -> FormulaId {
        match self.nodes[f.0 as usize] {
            Node::True => self.fls(),
            Node::False => self.tru(),
            Node::Not(inner) => inner,
            _ => self.intern(Node::Not(f)),
        }
    }

    pub fn and(&mut self, parts: impl IntoIterator<Item = FormulaId>) -> FormulaId {
        let mut flat = Vec::new();
        for f in parts {
            match &self.nodes[f.0 as usize] {
                Node::True => {}
                Node::False => return self.fls(),
                Node::And(inner) => flat.extend(inner.iter().copied()),
                _ => flat.push(f),
            }
        }
        flat.sort_unstable_by_key(|f| f.0);
        flat.dedup();
        match flat.len() {
            0 => self.tru(),
            1 => flat[0],
            _ => self.intern(Node::And(flat)),
        }
    }

    pub fn or(&mut self, parts: impl IntoIterator<Item = FormulaId>) -> FormulaId {
        let mut flat = Vec::new();
        for f in parts {
            match &self.nodes[f.0 as usize] {
                Node::False => {}
                Node::True => return self.tru(),
                Node::Or(inner) => flat.extend(inner.iter().copied()),
                _ => flat.push(f),
            }
        }
        flat.sort_unstable_by_key(|f| f.0);
        flat.dedup();
        match flat.len() {
            0 => self.fls(),
            1 => flat[0],
            _ => self.intern(Node::Or(flat)),
        }
    }

    /// Lower a tag to an OR of ANDs over its proof variables.
    pub fn from_tag(&mut self, tag: &Tag) -> FormulaId {
        let parts: Vec<FormulaId> = tag
            .proofs()
            .iter()
            .map(|p| {
                let vars: Vec<FormulaId> = p.vars().iter().map(|&v| self.var(v)).collect();
                self.and(vars)
            })
            .collect();
        self.or(parts)
    }

    /// Distinct variables appearing in `f`, sorted ascending.
    pub fn support(&self, f: FormulaId) -> Vec<VarId> {
        let mut counts = HashMap::new();
        self.occurrences_into(f, &mut counts, &mut HashMap::new());
        let mut vars: Vec<VarId> = counts.into_keys().collect();
        vars.sort_unstable();
        vars
    }

    /// Occurrence counts per variable (counting shared subformulas once).
    fn occurrences_into(
        &self,
        f: FormulaId,
        counts: &mut HashMap<VarId, usize>,
        seen: &mut HashMap<FormulaId, ()>,
    ) {
        if seen.insert(f, ()).is_some() {
            return;
        }
        match &self.nodes[f.0 as usize] {
            Node::True | Node::False => {}
            Node::Var(v) => *counts.entry(*v).or_insert(0) += 1,
            Node::Not(inner) => self.occurrences_into(*inner, counts, seen),
            Node::And(parts) | Node::Or(parts) => {
                for &p in parts {
                    self.occurrences_into(p, counts, seen);
                }
            }
        }
    }

    fn eval(&self, f: FormulaId, assignment: &HashMap<VarId, bool>) -> bool {
        match &self.nodes[f.0 as usize] {
            Node::True => true,
            Node::False => false,
            Node::Var(v) => assignment[v],
            Node::Not(inner) => !self.eval(*inner, assignment),
            Node::And(parts) => parts.iter().all(|&p| self.eval(p, assignment)),
            Node::Or(parts) => parts.iter().any(|&p| self.eval(p, assignment)),
        }
    }
}

fn check_probs(vars: &[VarId], probs: &[f64]) -> Result<(), WmcError> {
    for &v in vars {
        let p = *probs.get(v.index()).ok_or(WmcError::UnboundVar(v.0))?;
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(WmcError::BadProb(p, v.0));
        }
    }
    Ok(())
}

/// Shannon-expansion WMC evaluator with per-pass memo tables.
pub struct WmcEvaluator<'a> {
    arena: &'a mut FormulaArena,
    probs: &'a [f64],
    /// Variables ordered by descending occurrence count in the query root.
    order: Vec<VarId>,
    wmc_memo: HashMap<FormulaId, f64>,
    restrict_memo: HashMap<(FormulaId, VarId, bool), FormulaId>,
}

impl<'a> WmcEvaluator<'a> {
    pub fn new(arena: &'a mut FormulaArena, probs: &'a [f64]) -> Self {
        WmcEvaluator {
            arena,
            probs,
            order: Vec::new(),
            wmc_memo: HashMap::new(),
            restrict_memo: HashMap::new(),
        }
    }

    /// Exact probability of `f` under independent Bernoulli variables.
    pub fn wmc(&mut self, f: FormulaId) -> Result<f64, WmcError> {
        self.prepare_order(f)?;
        Ok(self.expand(f))
    }

    /// WMC value plus the gradient with respect to every support variable:
    /// dWMC/dp(v) = WMC(f | v=1) - WMC(f | v=0).
    pub fn wmc_grad(&mut self, f: FormulaId) -> Result<(f64, Vec<(VarId, f64)>), WmcError> {
        self.prepare_order(f)?;
        let value = self.expand(f);
        let support = self.arena.support(f);
        let mut grads = Vec::with_capacity(support.len());
        for v in support {
            let hi = self.restrict(f, v, true);
            let lo = self.restrict(f, v, false);
            let g = self.expand(hi) - self.expand(lo);
            grads.push((v, g));
        }
        Ok((value, grads))
    }

    fn prepare_order(&mut self, f: FormulaId) -> Result<(), WmcError> {
        let mut counts = HashMap::new();
        self.arena
            .occurrences_into(f, &mut counts, &mut HashMap::new());
        let vars: Vec<VarId> = counts.keys().copied().collect();
        check_probs(&vars, self.probs)?;
        let mut order: Vec<(usize, VarId)> =
            counts.into_iter().map(|(v, c)| (c, v)).collect();
        order.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        // Merge with any previously seen variables so repeated calls on one
        // evaluator stay consistent with the memo tables.
        for (_, v) in order {
            if !self.order.contains(&v) {
                self.order.push(v);
            }
        }
        Ok(())
    }

    fn expand(&mut self, f: FormulaId) -> f64 {
        if let Some(&v) = self.wmc_memo.get(&f) {
            return v;
        }
        let result = match &self.arena.nodes[f.0 as usize] {
            Node::True => 1.0,
            Node::False => 0.0,
            _ => {
                let support = self.arena.support(f);
                let pivot = self
                    .order
                    .iter()
                    .copied()
                    .find(|v| support.contains(v))
                    .expect("non-constant formula must have support");
                let p = self.probs[pivot.index()];
                let hi = self.restrict(f, pivot, true);
                let lo = self.restrict(f, pivot, false);
                p * self.expand(hi) + (1.0 - p) * self.expand(lo)
            }
        };
        self.wmc_memo.insert(f, result);
        result
    }

    fn restrict(&mut self, f: FormulaId, v: VarId, val: bool) -> FormulaId {
        if let Some(&id) = self.restrict_memo.get(&(f, v, val)) {
            return id;
        }
        let result = match self.arena.nodes[f.0 as usize].clone() {
            Node::True | Node::False => f,
            Node::Var(u) => {
                if u == v {
                    if val {
                        self.arena.tru()
                    } else {
                        self.arena.fls()
                    }
                } else {
                    f
                }
            }
            Node::Not(inner) => {
                let r = self.restrict(inner, v, val);
                self.arena.not(r)
            }
            Node::And(parts) => {
                let rs: Vec<FormulaId> =
                    parts.iter().map(|&p| self.restrict(p, v, val)).collect();
                self.arena.and(rs)
            }
            Node::Or(parts) => {
                let rs: Vec<FormulaId> =
                    parts.iter().map(|&p| self.restrict(p, v, val)).collect();
                self.arena.or(rs)
            }
        };
        self.restrict_memo.insert((f, v, val), result);
        result
    }
}

/// Convenience wrapper: one-shot WMC with a fresh memo.
pub fn wmc(arena: &mut FormulaArena, f: FormulaId, probs: &[f64]) -> Result<f64, WmcError> {
    WmcEvaluator::new(arena, probs).wmc(f)
}

/// Convenience wrapper: one-shot WMC with gradients.
pub fn wmc_grad(
    arena: &mut FormulaArena,
    f: FormulaId,
    probs: &[f64],
) -> Result<(f64, Vec<(VarId, f64)>), WmcError> {
    WmcEvaluator::new(arena, probs).wmc_grad(f)
}

pub const BRUTE_FORCE_VAR_CAP: usize = 20;

/// Independent oracle: enumerate all 2^n assignments and sum the weights of
/// the satisfying worlds. Capped at [`BRUTE_FORCE_VAR_CAP`] variables.
pub fn brute_force_wmc(
    arena: &FormulaArena,
    f: FormulaId,
    probs: &[f64],
) -> Result<f64, WmcError> {
    let vars = arena.support(f);
    check_probs(&vars, probs)?;
    if vars.len() > BRUTE_FORCE_VAR_CAP {
        return Err(WmcError::TooManyVars(vars.len(), BRUTE_FORCE_VAR_CAP));
    }
    let mut total = 0.0;
    let mut assignment = HashMap::new();
    for mask in 0u32..(1u32 << vars.len()) {
        let mut weight = 1.0;
        for (i, &v) in vars.iter().enumerate() {
            let bit = mask >> i & 1 == 1;
            assignment.insert(v, bit);
            let p = probs[v.index()];
            weight *= if bit { p } else { 1.0 - p };
        }
        if weight > 0.0 && arena.eval(f, &assignment) {
            total += weight;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> VarId {
        VarId(i)
    }

    #[test]
    fn tag_or_empty_proof_absorbs() {
        let probs = vec![0.5; 4];
        let t1 = Tag::one();
        let t2 = Tag::singleton(v(0));
        let out = tag_or(&t1, &t2, K_INF, &probs);
        assert_eq!(out, Tag::one());
    }

    #[test]
    fn tag_or_superset_dropped() {
        let probs = vec![0.5; 4];
        let t1 = Tag::singleton(v(0));
        let t2 = Tag::from_proofs(vec![Proof::from_vars(vec![v(0), v(1)])], K_INF, &probs);
        let out = tag_or(&t1, &t2, K_INF, &probs);
        assert_eq!(out, Tag::singleton(v(0)));
    }

    #[test]
    fn tag_or_truncates_to_most_probable() {
        // probs a:0.9, c:0.8; K=1 keeps {a}.
        let mut probs = vec![0.0; 4];
        probs[0] = 0.9;
        probs[2] = 0.8;
        let t1 = Tag::singleton(v(0));
        let t2 = Tag::singleton(v(2));
        let out = tag_or(&t1, &t2, 1, &probs);
        assert_eq!(out, Tag::singleton(v(0)));
    }

    #[test]
    fn tag_and_examples() {
        let probs = vec![0.5; 4];
        let a = Tag::singleton(v(0));
        let b = Tag::singleton(v(1));
        let out = tag_and(&a, &b, K_INF, &probs);
        assert_eq!(out.proofs(), &[Proof::from_vars(vec![v(0), v(1)])]);

        // AND with the unit tag is identity.
        let out = tag_and(&a, &Tag::one(), K_INF, &probs);
        assert_eq!(out, a);

        // {{a},{b}} AND {{c}} with K=2 gives both pairwise unions.
        let ab = tag_or(&a, &b, K_INF, &probs);
        let c = Tag::singleton(v(2));
        let out = tag_and(&ab, &c, 2, &probs);
        assert_eq!(
            out.proofs(),
            &[
                Proof::from_vars(vec![v(0), v(2)]),
                Proof::from_vars(vec![v(1), v(2)]),
            ]
        );
    }

    #[test]
    fn wmc_single_var() {
        let mut arena = FormulaArena::new();
        let f = arena.var(v(0));
        assert_eq!(wmc(&mut arena, f, &[0.9]).unwrap(), 0.9);
    }

    #[test]
    fn wmc_shared_variable_dnf() {
        // (a AND b) OR (a AND c) with all probs 0.5 -> 0.375.
        let mut arena = FormulaArena::new();
        let (a, b, c) = (arena.var(v(0)), arena.var(v(1)), arena.var(v(2)));
        let ab = arena.and([a, b]);
        let ac = arena.and([a, c]);
        let f = arena.or([ab, ac]);
        let got = wmc(&mut arena, f, &[0.5, 0.5, 0.5]).unwrap();
        assert!((got - 0.375).abs() < 1e-12);
    }

    #[test]
    fn wmc_niece_example() {
        // a AND b at p = (0.9, 0.8) -> 0.72.
        let mut arena = FormulaArena::new();
        let (a, b) = (arena.var(v(0)), arena.var(v(1)));
        let f = arena.and([a, b]);
        let got = wmc(&mut arena, f, &[0.9, 0.8]).unwrap();
        assert!((got - 0.72).abs() < 1e-12);
    }

    #[test]
    fn wmc_grad_examples() {
        let mut arena = FormulaArena::new();
        let f = arena.var(v(0));
        let (val, grads) = wmc_grad(&mut arena, f, &[0.3]).unwrap();
        assert!((val - 0.3).abs() < 1e-12);
        assert_eq!(grads, vec![(v(0), 1.0)]);

        // (a AND b) OR (a AND c), all 0.5: d/dp(a) = WMC(b OR c) = 0.75.
        let (a, b, c) = (arena.var(v(0)), arena.var(v(1)), arena.var(v(2)));
        let ab = arena.and([a, b]);
        let ac = arena.and([a, c]);
        let f = arena.or([ab, ac]);
        let (_, grads) = wmc_grad(&mut arena, f, &[0.5, 0.5, 0.5]).unwrap();
        let ga = grads.iter().find(|(u, _)| *u == v(0)).unwrap().1;
        assert!((ga - 0.75).abs() < 1e-12);

        // a AND b at (0.9, 0.8): gradients (0.8, 0.9).
        let f = arena.and([a, b]);
        let (_, grads) = wmc_grad(&mut arena, f, &[0.9, 0.8, 0.5]).unwrap();
        assert!((grads[0].1 - 0.8).abs() < 1e-12 || (grads[1].1 - 0.8).abs() < 1e-12);
        let m: HashMap<VarId, f64> = grads.into_iter().collect();
        assert!((m[&v(0)] - 0.8).abs() < 1e-12);
        assert!((m[&v(1)] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn brute_force_basics() {
        let mut arena = FormulaArena::new();
        let t = arena.tru();
        assert_eq!(brute_force_wmc(&arena, t, &[]).unwrap(), 1.0);

        let (a, b) = (arena.var(v(0)), arena.var(v(1)));
        let f = arena.or([a, b]);
        let got = brute_force_wmc(&arena, f, &[0.5, 0.5]).unwrap();
        assert!((got - 0.75).abs() < 1e-12);

        let na = arena.not(a);
        let got = brute_force_wmc(&arena, na, &[0.3]).unwrap();
        assert!((got - 0.7).abs() < 1e-12);
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let mut arena = FormulaArena::new();
        let f = arena.var(v(5));
        assert!(matches!(wmc(&mut arena, f, &[0.5]), Err(WmcError::UnboundVar(5))));
    }

    #[test]
    fn monotone_in_probabilities() {
        let mut arena = FormulaArena::new();
        let (a, b, c) = (arena.var(v(0)), arena.var(v(1)), arena.var(v(2)));
        let ab = arena.and([a, b]);
        let f = arena.or([ab, c]);
        let low = wmc(&mut arena, f, &[0.2, 0.5, 0.3]).unwrap();
        let high = wmc(&mut arena, f, &[0.6, 0.5, 0.3]).unwrap();
        assert!(high >= low);
    }

    #[test]
    fn tag_lowering_matches_brute_force() {
        let probs = vec![0.3, 0.7, 0.5, 0.9];
        let t1 = Tag::from_proofs(
            vec![
                Proof::from_vars(vec![v(0), v(1)]),
                Proof::from_vars(vec![v(2)]),
                Proof::from_vars(vec![v(1), v(3)]),
            ],
            K_INF,
            &probs,
        );
        let mut arena = FormulaArena::new();
        let f = arena.from_tag(&t1);
        let exact = wmc(&mut arena, f, &probs).unwrap();
        let oracle = brute_force_wmc(&arena, f, &probs).unwrap();
        assert!((exact - oracle).abs() < 1e-12);
    }
}

/// Random formula tree over `n_vars` variables with bounded depth, used by
/// randomized equivalence tests and the `check-wmc` subcommand.
pub fn random_formula(
    arena: &mut FormulaArena,
    n_vars: usize,
    depth: usize,
    rng: &mut impl rand::Rng,
) -> FormulaId {
    if depth == 0 || rng.gen_bool(0.3) {
        let v = VarId(rng.gen_range(0..n_vars) as u32);
        let f = arena.var(v);
        return if rng.gen_bool(0.3) { arena.not(f) } else { f };
    }
    let arity = rng.gen_range(2..=4);
    let parts: Vec<_> = (0..arity)
        .map(|_| random_formula(arena, n_vars, depth - 1, rng))
        .collect();
    if rng.gen_bool(0.5) {
        arena.and(parts)
    } else {
        arena.or(parts)
    }
}
