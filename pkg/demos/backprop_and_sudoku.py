# Running rules backwards, then a 4x4 Sudoku validity cascade.
from pathlib import Path

import numpy as np

from possrules.backprop import omega_system, solve_omega, targeted_inputs
from possrules.benchmarks import INVALID_SUDOKU_4, VALID_SUDOKU_4, sudoku_cascade, sudoku_constraints
from possrules.core import antipignistic_inverse
from possrules.files import load_cascade
from possrules.inference import infer

here = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
first = load_cascade(here / "running_example.json").stage("first")

# which inputs make b = (1,0) certain?
target = np.array([0, 0, 1, 0.0])
solution = solve_omega(omega_system(first, target))
print("lowest premise degrees", solution.f_low, "consistent", solution.consistent)
inputs = targeted_inputs(first, solution)
for attr, pi in inputs.items():
    print(attr, pi, "as probabilities", antipignistic_inverse(pi))
print("re-inferred", infer(first, inputs))

# a target that keeps (1,0) and (1,1) open
solution = solve_omega(omega_system(first, [0, 0, 1, 1.0]))
print(targeted_inputs(first, solution))

cascade = sudoku_cascade(4)
print(len(sudoku_constraints(4)), "cell pairs,", sum(s.n for s in cascade.stages), "rules,",
      len(cascade.attributes), "attributes")
for grid in (VALID_SUDOKU_4, INVALID_SUDOKU_4):
    crisp = {f"a_{i + 1}_{j + 1}": np.eye(4)[grid[i][j]] for i in range(4) for j in range(4)}
    print(np.array(grid), "-> c =", cascade.infer(crisp)["c"])

# an unsure reading of one cell lowers the certainty of validity
soft = {f"a_{i + 1}_{j + 1}": np.eye(4)[VALID_SUDOKU_4[i][j]] for i in range(4) for j in range(4)}
soft["a_1_1"] = np.array([1.0, 0.3, 0.0, 0.0])
print("one unsure cell -> c =", cascade.infer(soft)["c"])
