//! Synthetic kinship chain generator.
//!
//! Chains of length k are drawn so that left-fold composition through the
//! hand-written oracle is defined at every step, then checked so that the
//! full derivation closure over the chain yields exactly one relation for
//! the query pair. Samples are emitted in the line-delimited dataset format.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::logic::{
    composite_violates, Constraint, ProbFact, RelationId, Sample, Vocabulary,
};

/// The hand-written kinship composition table: `(r1, r2) -> r3` meaning
/// "my r1's r2 is my r3". The paper's 92-rule knowledge base is not printed
/// anywhere, so this is a reconstruction; every entry is validated against
/// the gender and generation integrity constraints at load time.
const COMPOSE_TABLE: [(&str, &str, &str); 92] = [
    ("brother", "brother", "brother"),
    ("brother", "sister", "sister"),
    ("brother", "father", "father"),
    ("brother", "mother", "mother"),
    ("brother", "son", "nephew"),
    ("brother", "daughter", "niece"),
    ("brother", "grandfather", "grandfather"),
    ("brother", "grandmother", "grandmother"),
    ("brother", "uncle", "uncle"),
    ("brother", "aunt", "aunt"),
    ("sister", "brother", "brother"),
    ("sister", "sister", "sister"),
    ("sister", "father", "father"),
    ("sister", "mother", "mother"),
    ("sister", "son", "nephew"),
    ("sister", "daughter", "niece"),
    ("sister", "grandfather", "grandfather"),
    ("sister", "grandmother", "grandmother"),
    ("sister", "uncle", "uncle"),
    ("sister", "aunt", "aunt"),
    ("father", "father", "grandfather"),
    ("father", "mother", "grandmother"),
    ("father", "brother", "uncle"),
    ("father", "sister", "aunt"),
    ("father", "son", "brother"),
    ("father", "daughter", "sister"),
    ("father", "wife", "mother"),
    ("father", "father_in_law", "grandfather"),
    ("father", "mother_in_law", "grandmother"),
    ("mother", "father", "grandfather"),
    ("mother", "mother", "grandmother"),
    ("mother", "brother", "uncle"),
    ("mother", "sister", "aunt"),
    ("mother", "son", "brother"),
    ("mother", "daughter", "sister"),
    ("mother", "husband", "father"),
    ("mother", "father_in_law", "grandfather"),
    ("mother", "mother_in_law", "grandmother"),
    ("son", "son", "grandson"),
    ("son", "daughter", "granddaughter"),
    ("son", "brother", "son"),
    ("son", "sister", "daughter"),
    ("son", "wife", "daughter_in_law"),
    ("son", "uncle", "brother"),
    ("son", "aunt", "sister"),
    ("daughter", "son", "grandson"),
    ("daughter", "daughter", "granddaughter"),
    ("daughter", "brother", "son"),
    ("daughter", "sister", "daughter"),
    ("daughter", "husband", "son_in_law"),
    ("daughter", "uncle", "brother"),
    ("daughter", "aunt", "sister"),
    ("husband", "father", "father_in_law"),
    ("husband", "mother", "mother_in_law"),
    ("husband", "son", "son"),
    ("husband", "daughter", "daughter"),
    ("husband", "grandson", "grandson"),
    ("husband", "granddaughter", "granddaughter"),
    ("wife", "father", "father_in_law"),
    ("wife", "mother", "mother_in_law"),
    ("wife", "son", "son"),
    ("wife", "daughter", "daughter"),
    ("wife", "grandson", "grandson"),
    ("wife", "granddaughter", "granddaughter"),
    ("grandfather", "wife", "grandmother"),
    ("grandmother", "husband", "grandfather"),
    ("grandson", "brother", "grandson"),
    ("grandson", "sister", "granddaughter"),
    ("granddaughter", "brother", "grandson"),
    ("granddaughter", "sister", "granddaughter"),
    ("uncle", "brother", "uncle"),
    ("uncle", "sister", "aunt"),
    ("uncle", "father", "grandfather"),
    ("uncle", "mother", "grandmother"),
    ("uncle", "wife", "aunt"),
    ("aunt", "brother", "uncle"),
    ("aunt", "sister", "aunt"),
    ("aunt", "father", "grandfather"),
    ("aunt", "mother", "grandmother"),
    ("aunt", "husband", "uncle"),
    ("father_in_law", "wife", "mother_in_law"),
    ("mother_in_law", "husband", "father_in_law"),
    ("son_in_law", "wife", "daughter"),
    ("son_in_law", "son", "grandson"),
    ("son_in_law", "daughter", "granddaughter"),
    ("daughter_in_law", "husband", "son"),
    ("daughter_in_law", "son", "grandson"),
    ("daughter_in_law", "daughter", "granddaughter"),
    ("nephew", "brother", "nephew"),
    ("nephew", "sister", "niece"),
    ("niece", "brother", "nephew"),
    ("niece", "sister", "niece"),
];

#[derive(Error, Debug)]
pub enum DatagenError {
    #[error("oracle entry ({0}, {1}, {2}) violates an integrity constraint")]
    BadOracleEntry(String, String, String),
    #[error("duplicate oracle entry for ({0}, {1})")]
    DuplicateOracleEntry(String, String),
    #[error("chain generation for k = {0} exceeded {1} attempts")]
    ResamplingCap(u32, usize),
    #[error(transparent)]
    Logic(#[from] crate::logic::LogicError),
}

/// Partial composition map over relation pairs.
#[derive(Clone, Debug)]
pub struct CompositionOracle {
    map: HashMap<(RelationId, RelationId), RelationId>,
}

impl CompositionOracle {
    /// Build an oracle from explicit entries, validating each against the
    /// gender and generation rule ICs.
    pub fn from_entries(
        vocab: &Vocabulary,
        entries: &[(RelationId, RelationId, RelationId)],
    ) -> Result<Self, DatagenError> {
        let mut map = HashMap::new();
        for &(r1, r2, r3) in entries {
            if composite_violates(vocab, &Constraint::RuleGenderIc, r1, r2, r3)
                || composite_violates(vocab, &Constraint::RuleGenIc, r1, r2, r3)
            {
                return Err(DatagenError::BadOracleEntry(
                    vocab.name(r1).into(),
                    vocab.name(r2).into(),
                    vocab.name(r3).into(),
                ));
            }
            if map.insert((r1, r2), r3).is_some() {
                return Err(DatagenError::DuplicateOracleEntry(
                    vocab.name(r1).into(),
                    vocab.name(r2).into(),
                ));
            }
        }
        Ok(CompositionOracle { map })
    }

    /// The built-in hand-written table.
    pub fn builtin(vocab: &Vocabulary) -> Result<Self, DatagenError> {
        let entries: Vec<_> = COMPOSE_TABLE
            .iter()
            .map(|&(a, b, c)| {
                Ok((vocab.relation(a)?, vocab.relation(b)?, vocab.relation(c)?))
            })
            .collect::<Result<_, crate::logic::LogicError>>()?;
        Self::from_entries(vocab, &entries)
    }

    pub fn compose(&self, r1: RelationId, r2: RelationId) -> Option<RelationId> {
        self.map.get(&(r1, r2)).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Entries sorted by (r1, r2, r3) for deterministic output.
    pub fn entries(&self) -> Vec<(RelationId, RelationId, RelationId)> {
        let mut out: Vec<_> = self.map.iter().map(|(&(a, b), &c)| (a, b, c)).collect();
        out.sort_unstable();
        out
    }

    /// All relations derivable for every span of the chain, CYK style.
    /// Span (i, j) covers facts i..j.
    pub fn chain_closure(&self, chain: &[RelationId]) -> Vec<Vec<BTreeSet<RelationId>>> {
        let n = chain.len();
        let mut spans = vec![vec![BTreeSet::new(); n + 1]; n + 1];
        for (i, &r) in chain.iter().enumerate() {
            spans[i][i + 1].insert(r);
        }
        for width in 2..=n {
            for i in 0..=(n - width) {
                let j = i + width;
                let mut derived = BTreeSet::new();
                for m in (i + 1)..j {
                    for &x in &spans[i][m] {
                        for &y in &spans[m][j] {
                            if let Some(z) = self.compose(x, y) {
                                derived.insert(z);
                            }
                        }
                    }
                }
                spans[i][j] = derived;
            }
        }
        spans
    }

    /// Left-fold answer for a chain, if defined at every step.
    pub fn fold_chain(&self, chain: &[RelationId]) -> Option<RelationId> {
        let mut acc = *chain.first()?;
        for &r in &chain[1..] {
            acc = self.compose(acc, r)?;
        }
        Some(acc)
    }
}

/// 200 entity names used for randomized family members.
pub const NAME_POOL: [&str; 200] = [
    "Aaron", "Abigail", "Adam", "Adrian", "Aiden", "Alan", "Albert", "Alexa",
    "Alexander", "Alice", "Alyssa", "Amanda", "Amber", "Amelia", "Amy", "Andrea",
    "Andrew", "Angela", "Anna", "Annie", "Anthony", "April", "Arthur", "Ashley",
    "Austin", "Barbara", "Beatrice", "Benjamin", "Bernard", "Beth", "Betty", "Beverly",
    "Blake", "Bonnie", "Bradley", "Brandon", "Brenda", "Brian", "Brittany", "Bruce",
    "Bryan", "Caleb", "Cameron", "Carl", "Carla", "Carmen", "Carol", "Caroline",
    "Carrie", "Catherine", "Cecilia", "Chad", "Charles", "Charlotte", "Chelsea", "Cheryl",
    "Chloe", "Christian", "Christina", "Christopher", "Cindy", "Claire", "Clara", "Clarence",
    "Claudia", "Clifford", "Cody", "Colin", "Connie", "Corey", "Craig", "Crystal",
    "Curtis", "Cynthia", "Dale", "Daniel", "Danielle", "Darlene", "David", "Dawn",
    "Dean", "Deborah", "Dennis", "Derek", "Diana", "Diane", "Dolores", "Donald",
    "Donna", "Doris", "Dorothy", "Douglas", "Duane", "Dustin", "Dylan", "Earl",
    "Edgar", "Edith", "Edward", "Eleanor", "Elena", "Elijah", "Elizabeth", "Ellen",
    "Emily", "Emma", "Eric", "Erica", "Ernest", "Esther", "Ethan", "Eugene",
    "Evelyn", "Felicia", "Fiona", "Florence", "Frances", "Francis", "Frank", "Fred",
    "Gabriel", "Gail", "Gary", "George", "Gerald", "Gilbert", "Gina", "Gladys",
    "Glenn", "Gloria", "Gordon", "Grace", "Gregory", "Hannah", "Harold", "Harry",
    "Hazel", "Heather", "Helen", "Henry", "Herbert", "Holly", "Howard", "Hugh",
    "Ian", "Irene", "Isaac", "Isabella", "Jack", "Jacob", "Jacqueline", "James",
    "Janet", "Janice", "Jared", "Jasmine", "Jason", "Jean", "Jeffrey", "Jennifer",
    "Jeremy", "Jerome", "Jessica", "Joan", "Joanna", "Joel", "John", "Jonathan",
    "Jordan", "Joseph", "Josephine", "Joshua", "Joyce", "Judith", "Julia", "Julian",
    "Justin", "Karen", "Katherine", "Kathleen", "Keith", "Kelly", "Kenneth", "Kevin",
    "Kimberly", "Kyle", "Laura", "Lauren", "Lawrence", "Leah", "Leonard", "Lillian",
    "Linda", "Lisa", "Lois", "Louis", "Louise", "Lucas", "Lucille", "Lucy",
];

/// Per-k sample counts plus the master seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenSpec {
    /// (k, count) pairs; k >= 2.
    pub counts: Vec<(u32, u32)>,
    pub seed: u64,
    /// Optional probability of adding one distractor edge (default off).
    pub distractors: bool,
}

const RESAMPLE_CAP: usize = 1000;

/// Draw one chain sample of length k: relations chained through the oracle,
/// distinct entities from the name pool, facts shuffled, probability 1.
pub fn generate_sample(
    k: u32,
    rng: &mut ChaCha8Rng,
    oracle: &CompositionOracle,
    vocab: &Vocabulary,
) -> Result<Sample, DatagenError> {
    let all: Vec<RelationId> = vocab.ids().collect();
    'attempt: for _ in 0..RESAMPLE_CAP {
        let mut chain = Vec::with_capacity(k as usize);
        let mut acc = all[rng.gen_range(0..all.len())];
        chain.push(acc);
        for _ in 1..k {
            let continuations: Vec<RelationId> = all
                .iter()
                .copied()
                .filter(|&r| oracle.compose(acc, r).is_some())
                .collect();
            if continuations.is_empty() {
                continue 'attempt;
            }
            let next = continuations[rng.gen_range(0..continuations.len())];
            acc = oracle.compose(acc, next).unwrap();
            chain.push(next);
        }
        // The full derivation closure must agree on a single answer.
        let spans = oracle.chain_closure(&chain);
        let answers = &spans[0][k as usize];
        if answers.len() != 1 || !answers.contains(&acc) {
            continue 'attempt;
        }
        let mut names: Vec<&str> = NAME_POOL.to_vec();
        names.shuffle(rng);
        let entities: Vec<String> = names[..=k as usize].iter().map(|s| s.to_string()).collect();
        let mut facts: Vec<ProbFact> = chain
            .iter()
            .enumerate()
            .map(|(i, &r)| ProbFact {
                pred: r,
                sub: entities[i].clone(),
                obj: entities[i + 1].clone(),
                prob: 1.0,
            })
            .collect();
        facts.shuffle(rng);
        return Ok(Sample {
            facts,
            query: (entities[0].clone(), entities[k as usize].clone()),
            answer: acc,
            k,
        });
    }
    Err(DatagenError::ResamplingCap(k, RESAMPLE_CAP))
}

/// Serialize one sample as a dataset line.
pub fn sample_to_json(sample: &Sample, vocab: &Vocabulary) -> String {
    let facts: Vec<serde_json::Value> = sample
        .facts
        .iter()
        .map(|f| {
            if (f.prob - 1.0).abs() < f64::EPSILON {
                serde_json::json!([vocab.name(f.pred), f.sub, f.obj])
            } else {
                serde_json::json!([vocab.name(f.pred), f.sub, f.obj, f.prob])
            }
        })
        .collect();
    serde_json::json!({
        "facts": facts,
        "query": [sample.query.0, sample.query.1],
        "answer": vocab.name(sample.answer),
        "k": sample.k,
    })
    .to_string()
}

/// Generate a whole dataset deterministically: sample i of the spec uses
/// RNG stream (seed, i), so generation is order-independent.
pub fn generate_dataset(
    spec: &GenSpec,
    oracle: &CompositionOracle,
    vocab: &Vocabulary,
) -> Result<Vec<Sample>, DatagenError> {
    let mut samples = Vec::new();
    let mut index = 0u64;
    for &(k, count) in &spec.counts {
        for _ in 0..count {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(index);
            let mut sample = generate_sample(k, &mut rng, oracle, vocab)?;
            if spec.distractors {
                add_distractor(&mut sample, &mut rng, vocab);
            }
            samples.push(sample);
            index += 1;
        }
    }
    Ok(samples)
}

/// Append one edge between two fresh entities. The distractor component is
/// disconnected from the chain, so the query answer is unchanged.
fn add_distractor(sample: &mut Sample, rng: &mut ChaCha8Rng, vocab: &Vocabulary) {
    let used: BTreeSet<&str> = sample
        .facts
        .iter()
        .flat_map(|f| [f.sub.as_str(), f.obj.as_str()])
        .collect();
    let free: Vec<&str> = NAME_POOL
        .iter()
        .copied()
        .filter(|n| !used.contains(n))
        .collect();
    if free.len() < 2 {
        return;
    }
    let all: Vec<RelationId> = vocab.ids().collect();
    let pred = all[rng.gen_range(0..all.len())];
    let a = rng.gen_range(0..free.len());
    let mut b = rng.gen_range(0..free.len() - 1);
    if b >= a {
        b += 1;
    }
    sample.facts.push(ProbFact {
        pred,
        sub: free[a].to_string(),
        obj: free[b].to_string(),
        prob: 1.0,
    });
}

/// Dataset file content for a sample list.
pub fn dataset_to_text(samples: &[Sample], vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&sample_to_json(s, vocab));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Vocabulary, CompositionOracle) {
        let v = Vocabulary::kinship();
        let o = CompositionOracle::builtin(&v).unwrap();
        (v, o)
    }

    #[test]
    fn oracle_has_92_valid_entries() {
        let (_, o) = setup();
        assert_eq!(o.len(), 92);
    }

    #[test]
    fn compose_examples() {
        let (v, o) = setup();
        let r = |n: &str| v.relation(n).unwrap();
        assert_eq!(o.compose(r("brother"), r("daughter")), Some(r("niece")));
        assert_eq!(o.compose(r("father"), r("mother")), Some(r("grandmother")));
        assert_eq!(o.compose(r("husband"), r("husband")), None);
    }

    #[test]
    fn oracle_rejects_ic_violations() {
        let v = Vocabulary::kinship();
        let r = |n: &str| v.relation(n).unwrap();
        // niece -> nephew flips gender.
        let bad = [(r("brother"), r("daughter"), r("nephew"))];
        assert!(matches!(
            CompositionOracle::from_entries(&v, &bad),
            Err(DatagenError::BadOracleEntry(..))
        ));
    }

    #[test]
    fn generated_sample_folds_to_its_answer() {
        let (v, o) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 2..=6 {
            let s = generate_sample(k, &mut rng, &o, &v).unwrap();
            assert_eq!(s.facts.len(), k as usize);
            assert_eq!(s.k, k);
            // Reconstruct the chain order from the entities.
            let mut chain = Vec::new();
            let mut cur = s.query.0.clone();
            while cur != s.query.1 {
                let f = s.facts.iter().find(|f| f.sub == cur).unwrap();
                chain.push(f.pred);
                cur = f.obj.clone();
            }
            assert_eq!(o.fold_chain(&chain), Some(s.answer));
            let spans = o.chain_closure(&chain);
            assert_eq!(spans[0][chain.len()].len(), 1);
        }
    }

    #[test]
    fn dataset_generation_is_deterministic() {
        let (v, o) = setup();
        let spec = GenSpec { counts: vec![(2, 5), (3, 5)], seed: 7, distractors: false };
        let a = dataset_to_text(&generate_dataset(&spec, &o, &v).unwrap(), &v);
        let b = dataset_to_text(&generate_dataset(&spec, &o, &v).unwrap(), &v);
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 10);
    }

    #[test]
    fn answers_cover_many_relations() {
        let (v, o) = setup();
        let spec = GenSpec { counts: vec![(2, 300), (3, 300)], seed: 3, distractors: false };
        let samples = generate_dataset(&spec, &o, &v).unwrap();
        let distinct: BTreeSet<RelationId> = samples.iter().map(|s| s.answer).collect();
        // Every relation is reachable as an answer at small k.
        assert!(distinct.len() >= 18, "only {} distinct answers", distinct.len());
    }
}
