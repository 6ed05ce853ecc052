# Two cascaded rule sets on binary inputs a1, a2: first -> b (pairs), second -> c (parity).
from pathlib import Path

import numpy as np

from possrules.files import load_cascade, read_samples
from possrules.inference import infer_cells, premise_degrees
from possrules.learning import build_system, cascade_learn, one_hot, solve

here = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
cascade = load_cascade(here / "running_example.json")
first, second = cascade.stages

# partition of the output domain of the first rule set, in sign-tuple order
print(first.partition.dump(first.output_domain.labels))

# inference matrix with all parameters 0: certain rules
print(first.matrix)

samples = read_samples(here / "running_example_train.jsonl", cascade)
for n, sample in enumerate(samples, start=1):
    degrees = premise_degrees(first, sample.inputs)
    system = build_system(first, degrees, one_hot(4, sample.targets["b"]))
    result = solve(system)
    print(f"sample {n}: lam={degrees.lam} rho={degrees.rho} nabla={result.nabla:g} "
          f"lowest approximation={result.y_approx}")

# samples 3 and 4 are unreliable under 0.05, the rest gives zero parameters
learned, reports = cascade_learn(cascade, samples, 0.05)
for report in reports:
    print(report.stage, report.nablas, report.selected)
for stage in learned.stages:
    print(stage.name, "s =", stage.s, "r =", stage.r)

for sample in samples:
    print(infer_cells(first, sample.inputs), learned.infer(sample.inputs)["c"])

# a noisy second sample: the cell of (1,1) still wins
noisy = {"a1": np.array([0.2, 1.0]), "a2": np.array([0.3, 1.0])}
print(learned.infer(noisy))
