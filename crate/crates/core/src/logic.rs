//! Domain types: relation vocabulary, facts, rules, higher-order templates,
//! integrity constraints, and whole programs.

use std::fmt;

use thiserror::Error;

/// Index into the relation vocabulary. The value `vocab.len()` is reserved
/// for the "n/a" class and never appears inside a fact store.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RelationId(pub u8);

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Gender {
    Male,
    Female,
    Neutral,
}

impl Gender {
    pub fn name(self) -> &'static str {
        match self {
            Gender::Male => "MALE",
            Gender::Female => "FEMALE",
            Gender::Neutral => "NEUTRAL",
        }
    }
}

/// Static per-relation metadata: the gender of the object position and the
/// generation offset of the object relative to the subject.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct RelationMeta {
    pub gender: Gender,
    pub gen: i8,
}

#[derive(Error, Debug, PartialEq)]
pub enum LogicError {
    #[error("relation id {0} is the n/a class and carries no metadata")]
    NoMeta(u8),
    #[error("unknown relation name `{0}`")]
    UnknownRelation(String),
}

/// A fixed relation vocabulary together with its metadata table.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Vocabulary {
    names: Vec<String>,
    meta: Vec<RelationMeta>,
}

/// The 20 kinship relations in canonical id order, with gender and
/// generation offset. The paper's appendix fixes the endpoints of this
/// ordering (DAUGHTER = 0, SISTER = 1, MOTHER_IN_LAW = 19) and elides the
/// middle; the full table here is a reconstruction validated against the
/// gender and generation integrity constraints.
pub const KINSHIP_RELATIONS: [(&str, Gender, i8); 20] = [
    ("daughter", Gender::Female, -1),
    ("sister", Gender::Female, 0),
    ("son", Gender::Male, -1),
    ("aunt", Gender::Female, 1),
    ("father", Gender::Male, 1),
    ("husband", Gender::Male, 0),
    ("granddaughter", Gender::Female, -2),
    ("brother", Gender::Male, 0),
    ("nephew", Gender::Male, -1),
    ("mother", Gender::Female, 1),
    ("uncle", Gender::Male, 1),
    ("grandfather", Gender::Male, 2),
    ("wife", Gender::Female, 0),
    ("grandmother", Gender::Female, 2),
    ("niece", Gender::Female, -1),
    ("grandson", Gender::Male, -2),
    ("son_in_law", Gender::Male, -1),
    ("daughter_in_law", Gender::Female, -1),
    ("father_in_law", Gender::Male, 1),
    ("mother_in_law", Gender::Female, 1),
];

impl Vocabulary {
    pub fn new(names: Vec<String>, meta: Vec<RelationMeta>) -> Self {
        assert_eq!(names.len(), meta.len());
        Vocabulary { names, meta }
    }

    /// The standard 20-relation kinship vocabulary.
    pub fn kinship() -> Self {
        let names = KINSHIP_RELATIONS
            .iter()
            .map(|(n, _, _)| n.to_string())
            .collect();
        let meta = KINSHIP_RELATIONS
            .iter()
            .map(|&(_, gender, gen)| RelationMeta { gender, gen })
            .collect();
        Vocabulary { names, meta }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// The reserved id for the "n/a" class.
    pub fn na(&self) -> RelationId {
        RelationId(self.names.len() as u8)
    }

    pub fn relation(&self, name: &str) -> Result<RelationId, LogicError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| RelationId(i as u8))
            .ok_or_else(|| LogicError::UnknownRelation(name.to_string()))
    }

    pub fn name(&self, r: RelationId) -> &str {
        if r.index() < self.names.len() {
            &self.names[r.index()]
        } else {
            "n/a"
        }
    }

    pub fn meta(&self, r: RelationId) -> Result<RelationMeta, LogicError> {
        self.meta
            .get(r.index())
            .copied()
            .ok_or(LogicError::NoMeta(r.0))
    }

    pub fn ids(&self) -> impl Iterator<Item = RelationId> {
        (0..self.names.len() as u8).map(RelationId)
    }
}

/// A ground probabilistic fact `pred(sub, obj)` as it appears in a dataset
/// record. Entities stay as strings until interned by the engine.
#[derive(Clone, PartialEq, Debug)]
pub struct ProbFact {
    pub pred: RelationId,
    pub sub: String,
    pub obj: String,
    pub prob: f64,
}

/// One datapoint: an entity-relation KB, a query pair, the gold answer
/// relation, and the reasoning chain length k.
#[derive(Clone, PartialEq, Debug)]
pub struct Sample {
    pub facts: Vec<ProbFact>,
    pub query: (String, String),
    pub answer: RelationId,
    pub k: u32,
}

/// The five higher-order predicate templates that generate horn clauses.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum RuleTemplate {
    Composite(RelationId, RelationId, RelationId),
    Transitive(RelationId),
    Symmetric(RelationId),
    Inverse(RelationId, RelationId),
    Implies(RelationId, RelationId),
}

impl RuleTemplate {
    pub fn kind_name(&self) -> &'static str {
        match self {
            RuleTemplate::Composite(..) => "composite",
            RuleTemplate::Transitive(..) => "transitive",
            RuleTemplate::Symmetric(..) => "symmetric",
            RuleTemplate::Inverse(..) => "inverse",
            RuleTemplate::Implies(..) => "implies",
        }
    }

    pub fn args(&self) -> Vec<RelationId> {
        match *self {
            RuleTemplate::Composite(a, b, c) => vec![a, b, c],
            RuleTemplate::Transitive(a) => vec![a],
            RuleTemplate::Symmetric(a) => vec![a],
            RuleTemplate::Inverse(a, b) => vec![a, b],
            RuleTemplate::Implies(a, b) => vec![a, b],
        }
    }
}

/// Variable slot inside one rule, numbered by first occurrence in the head.
pub type Var = u8;

pub const VAR_A: Var = 0;
pub const VAR_B: Var = 1;
pub const VAR_C: Var = 2;

/// An atom pattern `pred(x, y)` over variable slots.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Atom {
    pub pred: RelationId,
    pub args: [Var; 2],
}

/// A ground-relation horn clause with optional inequality guards.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
    /// Pairs of variables required to be distinct.
    pub neq_guards: Vec<(Var, Var)>,
}

impl Rule {
    pub fn var_count(&self) -> usize {
        let mut max = self.head.args.iter().copied().max().unwrap_or(0);
        for atom in &self.body {
            max = max.max(atom.args[0]).max(atom.args[1]);
        }
        max as usize + 1
    }
}

/// Expand a higher-order template into its horn clause.
///
/// `composite(r1,r2,r3)` becomes `r3(a,c) <- r1(a,b), r2(b,c), a != c`;
/// the other kinds follow the obvious patterns.
pub fn instantiate_template(t: &RuleTemplate) -> Rule {
    match *t {
        RuleTemplate::Composite(r1, r2, r3) => Rule {
            head: Atom { pred: r3, args: [VAR_A, VAR_C] },
            body: vec![
                Atom { pred: r1, args: [VAR_A, VAR_B] },
                Atom { pred: r2, args: [VAR_B, VAR_C] },
            ],
            neq_guards: vec![(VAR_A, VAR_C)],
        },
        RuleTemplate::Transitive(r) => Rule {
            head: Atom { pred: r, args: [VAR_A, VAR_C] },
            body: vec![
                Atom { pred: r, args: [VAR_A, VAR_B] },
                Atom { pred: r, args: [VAR_B, VAR_C] },
            ],
            neq_guards: vec![(VAR_A, VAR_C)],
        },
        RuleTemplate::Symmetric(r) => Rule {
            head: Atom { pred: r, args: [VAR_B, VAR_A] },
            body: vec![Atom { pred: r, args: [VAR_A, VAR_B] }],
            neq_guards: vec![],
        },
        RuleTemplate::Inverse(r, p) => Rule {
            head: Atom { pred: p, args: [VAR_B, VAR_A] },
            body: vec![Atom { pred: r, args: [VAR_A, VAR_B] }],
            neq_guards: vec![],
        },
        RuleTemplate::Implies(r, p) => Rule {
            head: Atom { pred: p, args: [VAR_A, VAR_B] },
            body: vec![Atom { pred: r, args: [VAR_A, VAR_B] }],
            neq_guards: vec![],
        },
    }
}

/// An integrity constraint. Result ICs quantify over entity pairs of the
/// derived store; rule ICs quantify over composite template instantiations
/// checked against the vocabulary metadata.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Constraint {
    /// `forall a, b: premise(a, b) => conclusions[0](b, a) or ...`
    ResultIc {
        premise: RelationId,
        conclusions: Vec<RelationId>,
    },
    /// `forall r1, r2, r3: composite(r1,r2,r3) and gender(r2,g) => gender(r3,g)`
    RuleGenderIc,
    /// `forall r1, r2, r3: composite(r1,r2,r3) and gen(r1,g1) and gen(r2,g2)
    ///  => gen(r3, g1 + g2)`
    RuleGenIc,
}

/// Does a composite instantiation violate a rule IC under this vocabulary?
pub fn composite_violates(
    vocab: &Vocabulary,
    c: &Constraint,
    r1: RelationId,
    r2: RelationId,
    r3: RelationId,
) -> bool {
    let (m1, m2, m3) = match (vocab.meta(r1), vocab.meta(r2), vocab.meta(r3)) {
        (Ok(m1), Ok(m2), Ok(m3)) => (m1, m2, m3),
        _ => return false,
    };
    match c {
        Constraint::RuleGenderIc => m3.gender != m2.gender,
        Constraint::RuleGenIc => i32::from(m3.gen) != i32::from(m1.gen) + i32::from(m2.gen),
        Constraint::ResultIc { .. } => false,
    }
}

/// Predicate type declaration, kept for program printing and arity checks.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TypeDecl {
    pub name: String,
    pub params: Vec<(String, String)>,
}

/// The answer rule `answer(r) = query(s, o), kinship(r, s, o)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AnswerDecl {
    pub query_pred: String,
    pub kinship_pred: String,
}

/// A parsed logic program: vocabulary, deduction rules, template facts,
/// and integrity constraints.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Program {
    pub vocab: Vocabulary,
    pub type_decls: Vec<TypeDecl>,
    /// Whether the program declares the composite-driven deduction rule.
    pub has_composite_rule: bool,
    /// Literal horn rules (no higher-order body atoms), fixed at weight 1.
    pub fixed_rules: Vec<Rule>,
    /// Template facts declared directly in the program, with their weights.
    pub template_facts: Vec<(RuleTemplate, f64)>,
    pub answer: Option<AnswerDecl>,
    pub constraints: Vec<Constraint>,
}

impl Program {
    pub fn result_constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints
            .iter()
            .filter(|c| matches!(c, Constraint::ResultIc { .. }))
    }

    pub fn rule_constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints
            .iter()
            .filter(|c| matches!(c, Constraint::RuleGenderIc | Constraint::RuleGenIc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(vocab: &Vocabulary, name: &str) -> RelationId {
        vocab.relation(name).unwrap()
    }

    #[test]
    fn kinship_vocabulary_anchors() {
        let v = Vocabulary::kinship();
        assert_eq!(v.len(), 20);
        assert_eq!(r(&v, "daughter"), RelationId(0));
        assert_eq!(r(&v, "sister"), RelationId(1));
        assert_eq!(r(&v, "mother_in_law"), RelationId(19));
    }

    #[test]
    fn relation_meta_examples() {
        let v = Vocabulary::kinship();
        let m = v.meta(r(&v, "daughter")).unwrap();
        assert_eq!(m, RelationMeta { gender: Gender::Female, gen: -1 });
        let m = v.meta(r(&v, "sister")).unwrap();
        assert_eq!(m, RelationMeta { gender: Gender::Female, gen: 0 });
        let m = v.meta(r(&v, "mother_in_law")).unwrap();
        assert_eq!(m, RelationMeta { gender: Gender::Female, gen: 1 });
    }

    #[test]
    fn meta_total_over_vocabulary_and_errors_on_na() {
        let v = Vocabulary::kinship();
        for id in v.ids() {
            let m = v.meta(id).unwrap();
            assert!((-2..=2).contains(&m.gen));
        }
        assert_eq!(v.meta(v.na()), Err(LogicError::NoMeta(20)));
    }

    #[test]
    fn composite_instantiation_shape() {
        let v = Vocabulary::kinship();
        let t = RuleTemplate::Composite(r(&v, "brother"), r(&v, "daughter"), r(&v, "niece"));
        let rule = instantiate_template(&t);
        assert_eq!(rule.head, Atom { pred: r(&v, "niece"), args: [VAR_A, VAR_C] });
        assert_eq!(rule.body.len(), 2);
        assert_eq!(rule.body[0], Atom { pred: r(&v, "brother"), args: [VAR_A, VAR_B] });
        assert_eq!(rule.body[1], Atom { pred: r(&v, "daughter"), args: [VAR_B, VAR_C] });
        assert_eq!(rule.neq_guards, vec![(VAR_A, VAR_C)]);
        assert_eq!(rule.var_count(), 3);
    }

    #[test]
    fn symmetric_and_implies_instantiation() {
        let v = Vocabulary::kinship();
        let spouse = r(&v, "husband");
        let rule = instantiate_template(&RuleTemplate::Symmetric(spouse));
        assert_eq!(rule.head, Atom { pred: spouse, args: [VAR_B, VAR_A] });
        assert_eq!(rule.body, vec![Atom { pred: spouse, args: [VAR_A, VAR_B] }]);
        assert!(rule.neq_guards.is_empty());

        let rule = instantiate_template(&RuleTemplate::Implies(r(&v, "mother"), r(&v, "aunt")));
        assert_eq!(rule.head.args, [VAR_A, VAR_B]);
        assert_eq!(rule.body[0].args, [VAR_A, VAR_B]);
    }

    #[test]
    fn inverse_instantiation() {
        let v = Vocabulary::kinship();
        let rule =
            instantiate_template(&RuleTemplate::Inverse(r(&v, "husband"), r(&v, "wife")));
        assert_eq!(rule.head, Atom { pred: r(&v, "wife"), args: [VAR_B, VAR_A] });
        assert_eq!(rule.body, vec![Atom { pred: r(&v, "husband"), args: [VAR_A, VAR_B] }]);
    }

    #[test]
    fn rule_ic_violation_checks() {
        let v = Vocabulary::kinship();
        let brother = r(&v, "brother");
        let daughter = r(&v, "daughter");
        let niece = r(&v, "niece");
        let nephew = r(&v, "nephew");
        let mother = r(&v, "mother");
        // comp(brother, daughter, niece) satisfies both ICs.
        assert!(!composite_violates(&v, &Constraint::RuleGenderIc, brother, daughter, niece));
        assert!(!composite_violates(&v, &Constraint::RuleGenIc, brother, daughter, niece));
        // Gender flip violates the gender IC only.
        assert!(composite_violates(&v, &Constraint::RuleGenderIc, brother, daughter, nephew));
        // Wrong generation violates the generation IC.
        assert!(composite_violates(&v, &Constraint::RuleGenIc, brother, daughter, mother));
    }
}
