//! Python bindings for the differentiable Datalog engine.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use difflog::datagen::{dataset_to_text, generate_dataset, CompositionOracle, GenSpec};
use difflog::engine::{forward, predict, proof_report, ForwardConfig};
use difflog::learner::{
    build_rules, evaluate, export_rules, oracle_matches, train, Checkpoint, RuleWeightStore,
    TrainConfig,
};
use difflog::logic::Program as CoreProgram;
use difflog::parser::{self, parse_dataset, parse_priors, print_program};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A parsed logic program (vocabulary, rules, constraints).
#[pyclass(name = "Program", skip_from_py_object)]
#[derive(Clone)]
struct PyProgram {
    inner: CoreProgram,
}

#[pymethods]
impl PyProgram {
    /// The built-in 20-relation kinship program.
    #[staticmethod]
    fn kinship() -> Self {
        PyProgram { inner: parser::kinship_program() }
    }

    /// Parse a program from source text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyProgram { inner: parser::parse_program(text).map_err(value_err)? })
    }

    /// Canonical program text; `Program.parse(p.text())` round-trips.
    fn text(&self) -> String {
        print_program(&self.inner)
    }

    /// Relation names in id order.
    fn relations(&self) -> Vec<String> {
        self.inner
            .vocab
            .ids()
            .map(|r| self.inner.vocab.name(r).to_string())
            .collect()
    }

    fn constraint_count(&self) -> usize {
        self.inner.constraints.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Program({} relations, {} constraints)",
            self.inner.vocab.len(),
            self.inner.constraints.len()
        )
    }
}

/// Learned composite rule weights plus optimizer state.
#[pyclass(name = "RuleWeights", skip_from_py_object)]
#[derive(Clone)]
struct PyRuleWeights {
    ck: Checkpoint,
}

#[pymethods]
impl PyRuleWeights {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyRuleWeights { ck: serde_json::from_str(text).map_err(value_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.ck).map_err(runtime_err)
    }

    /// `weight\tr3(a,c) <- r1(a,b) ^ r2(b,c)` lines for the heaviest rules.
    fn export(&self, top: usize) -> String {
        export_rules(&self.ck.store, &difflog::logic::Vocabulary::kinship(), top)
    }

    /// How many of the top rules agree with the built-in composition table.
    fn oracle_matches(&self, top: usize) -> PyResult<usize> {
        let vocab = difflog::logic::Vocabulary::kinship();
        let oracle = CompositionOracle::builtin(&vocab).map_err(runtime_err)?;
        Ok(oracle_matches(&self.ck.store, &oracle, top))
    }

    fn __repr__(&self) -> String {
        let active = self.ck.store.weights().iter().filter(|&&w| w > 0.0).count();
        format!("RuleWeights({} slots, {} active)", self.ck.store.len(), active)
    }
}

/// Generate a chain dataset as JSONL text. `counts` is a list of
/// `(k, count)` pairs.
#[pyfunction]
#[pyo3(signature = (counts, seed=0, distractors=false))]
fn generate(counts: Vec<(u32, u32)>, seed: u64, distractors: bool) -> PyResult<String> {
    let vocab = difflog::logic::Vocabulary::kinship();
    let oracle = CompositionOracle::builtin(&vocab).map_err(runtime_err)?;
    let spec = GenSpec { counts, seed, distractors };
    let samples = generate_dataset(&spec, &oracle, &vocab).map_err(runtime_err)?;
    Ok(dataset_to_text(&samples, &vocab))
}

/// Train rule weights on a JSONL dataset; returns (weights, metrics) where
/// metrics is one JSON string per epoch.
#[pyfunction]
#[pyo3(signature = (program, data, epochs=20, seed=1, lr_rule=0.1, sample_rules=150, with_constraints=true))]
fn train_rules(
    program: &PyProgram,
    data: &str,
    epochs: usize,
    seed: u64,
    lr_rule: f64,
    sample_rules: usize,
    with_constraints: bool,
) -> PyResult<(PyRuleWeights, Vec<String>)> {
    let samples = parse_dataset(data, &program.inner.vocab).map_err(value_err)?;
    let cfg = TrainConfig {
        epochs,
        seed,
        lr_rule,
        sample_n: sample_rules,
        with_constraints,
        ..Default::default()
    };
    let out = train(&samples, &program.inner, &cfg).map_err(runtime_err)?;
    let metrics = out
        .metrics
        .iter()
        .map(|m| serde_json::to_string(m).map_err(runtime_err))
        .collect::<PyResult<Vec<_>>>()?;
    Ok((PyRuleWeights { ck: Checkpoint::new(&out) }, metrics))
}

/// Accuracy of the top rules on a JSONL dataset: returns
/// (overall_accuracy, {k: (correct, total)}).
#[pyfunction]
#[pyo3(signature = (program, data, weights, top=150))]
fn accuracy(
    program: &PyProgram,
    data: &str,
    weights: &PyRuleWeights,
    top: usize,
) -> PyResult<(f64, BTreeMap<u32, (usize, usize)>)> {
    let samples = parse_dataset(data, &program.inner.vocab).map_err(value_err)?;
    let cfg = TrainConfig { top_n: top, ..Default::default() };
    let report = evaluate(&samples, &program.inner, &weights.ck.store, &cfg).map_err(runtime_err)?;
    Ok((report.accuracy(), report.per_k))
}

/// Run deduction on record `index` of a JSONL KB. Rules come from a priors
/// text (`composite r1 r2 r3 w` lines) and/or trained weights. Returns
/// (distribution dict, predicted relation, proofs for the prediction).
#[pyfunction]
#[pyo3(signature = (program, kb, index=0, rules=None, weights=None, top=150, topk=3))]
#[allow(clippy::too_many_arguments)]
fn infer(
    program: &PyProgram,
    kb: &str,
    index: usize,
    rules: Option<&str>,
    weights: Option<&PyRuleWeights>,
    top: usize,
    topk: usize,
) -> PyResult<(BTreeMap<String, f64>, String, Vec<Vec<String>>)> {
    let mut prog = program.inner.clone();
    if let Some(text) = rules {
        let priors = parse_priors(text, &prog.vocab).map_err(value_err)?;
        for (t, w) in priors.weights {
            prog.template_facts.push((t, w));
        }
    }
    let store = match weights {
        Some(w) => w.ck.store.clone(),
        None => RuleWeightStore::new(prog.vocab.len()),
    };
    let slots = store.top_rules(top);
    let engine_rules = build_rules(&prog, &store, &slots);
    let samples = parse_dataset(kb, &prog.vocab).map_err(value_err)?;
    let sample = samples
        .get(index)
        .ok_or_else(|| value_err(format!("no record {index} in KB")))?;
    let fwd = ForwardConfig { k: topk, with_constraints: false, ..Default::default() };
    let out = forward(sample, &prog, &engine_rules, &fwd).map_err(runtime_err)?;
    let pred = predict(&out.y_hat);
    let dist = prog
        .vocab
        .ids()
        .filter(|r| out.y_hat[r.index()] > 0.0)
        .map(|r| (prog.vocab.name(r).to_string(), out.y_hat[r.index()]))
        .collect();
    let proofs = proof_report(
        &out.store,
        &prog.vocab,
        (&sample.query.0, &sample.query.1),
        pred,
    );
    Ok((dist, prog.vocab.name(pred).to_string(), proofs))
}

/// Exact WMC of a DNF given as proofs (lists of variable indices) and
/// per-variable probabilities. Returns (value, gradient list).
#[pyfunction]
fn wmc_dnf(proofs: Vec<Vec<u32>>, probs: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
    use difflog::provenance::{FormulaArena, VarId, WmcEvaluator};
    let mut arena = FormulaArena::new();
    let disjuncts: Vec<_> = proofs
        .iter()
        .map(|p| {
            let lits: Vec<_> = p.iter().map(|&v| arena.var(VarId(v))).collect();
            arena.and(lits)
        })
        .collect();
    let f = arena.or(disjuncts);
    let (value, grads) = WmcEvaluator::new(&mut arena, &probs)
        .wmc_grad(f)
        .map_err(value_err)?;
    let mut dense = vec![0.0; probs.len()];
    for (v, g) in grads {
        dense[v.index()] = g;
    }
    Ok((value, dense))
}

#[pymodule]
fn difflog_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProgram>()?;
    m.add_class::<PyRuleWeights>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(train_rules, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(infer, m)?)?;
    m.add_function(wrap_pyfunction!(wmc_dnf, m)?)?;
    Ok(())
}
