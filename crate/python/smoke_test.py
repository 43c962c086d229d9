#!/usr/bin/env python3
"""Smoke test for the difflog_py extension module.

Builds the cdylib with cargo if needed, loads it, and exercises the main
entry points: program parsing, dataset generation, inference, WMC, and a
tiny training run.

Usage: python3 python/smoke_test.py
"""

import json
import pathlib
import shutil
import subprocess
import sys
import tempfile

REPO = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    lib = REPO / "target" / "debug" / "libdifflog_py.so"
    if not lib.exists():
        subprocess.run(
            ["cargo", "build", "-p", "difflog-py"], cwd=REPO, check=True
        )
    staging = pathlib.Path(tempfile.mkdtemp(prefix="difflog_py_"))
    shutil.copy(lib, staging / "difflog_py.so")
    sys.path.insert(0, str(staging))
    import difflog_py

    return difflog_py


def main():
    dl = load_module()

    # Program parsing and round-trip.
    program = dl.Program.kinship()
    relations = program.relations()
    assert len(relations) == 20, relations
    assert relations[0] == "daughter" and relations[19] == "mother_in_law"
    assert program.constraint_count() == 8
    reparsed = dl.Program.parse(program.text())
    assert reparsed.relations() == relations
    print(f"program: {program!r}")

    # Dataset generation is deterministic in the seed.
    data = dl.generate([(2, 5), (3, 5)], seed=11)
    again = dl.generate([(2, 5), (3, 5)], seed=11)
    assert data == again
    records = [json.loads(line) for line in data.splitlines()]
    assert len(records) == 10
    assert all(r["answer"] in relations for r in records)
    print(f"generated {len(records)} samples")

    # Inference with an explicit rule on the textbook example.
    kb = json.dumps(
        {
            "facts": [
                ["brother", "Dorothy", "Richard", 0.9],
                ["daughter", "Richard", "Kate", 0.8],
            ],
            "query": ["Dorothy", "Kate"],
            "answer": "niece",
            "k": 2,
        }
    )
    dist, pred, proofs = dl.infer(
        program, kb, rules="composite brother daughter niece 1.0\n"
    )
    assert pred == "niece", (dist, pred)
    assert abs(dist["niece"] - 0.72) < 1e-12, dist
    assert proofs and len(proofs[0]) == 3, proofs
    print(f"inference: niece = {dist['niece']:.4f}, {len(proofs)} proof(s)")

    # Exact WMC with gradients: two overlapping proofs.
    value, grads = dl.wmc_dnf([[0, 1], [0, 2]], [0.9, 0.8, 0.5])
    expected = 0.9 * (1 - (1 - 0.8) * (1 - 0.5))
    assert abs(value - expected) < 1e-12, value
    assert abs(grads[0] - expected / 0.9) < 1e-12, grads
    print(f"wmc: {value:.4f}, grad {['%.3f' % g for g in grads]}")

    # A tiny training run learns something and round-trips as JSON.
    train_data = dl.generate([(2, 30)], seed=5)
    weights, metrics = dl.train_rules(
        program, train_data, epochs=4, seed=7, sample_rules=400
    )
    assert len(metrics) == 4
    first, last = json.loads(metrics[0]), json.loads(metrics[-1])
    assert last["loss"] < first["loss"], (first, last)
    back = dl.RuleWeights.from_json(weights.to_json())
    assert back.export(5) == weights.export(5)
    acc, per_k = dl.accuracy(program, train_data, weights)
    print(f"training: loss {first['loss']:.2f} -> {last['loss']:.2f}, "
          f"train accuracy {acc:.2f}")

    print("smoke test passed")


if __name__ == "__main__":
    main()
