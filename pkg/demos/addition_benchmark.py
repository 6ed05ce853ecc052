# Two-digit addition with synthetic digit classifiers.
import time

from possrules.benchmarks import SyntheticNoiseModel, addition_cascade, addition_dataset, evaluate
from possrules.learning import ThresholdConfig, cascade_learn, threshold_search

k = 2
cascade = addition_cascade(k)
print(cascade, sum(s.n for s in cascade.stages), "rules")

# peak mass 0.9 on the true digit, remaining mass spread by softmaxed noise
model = SyntheticNoiseModel(base=0.9, temperature=0.5, seed=1)
train = addition_dataset(k, 600, model).samples()
valid = addition_dataset(k, 200, SyntheticNoiseModel(0.9, 0.5, 0.0, 2)).samples()
test = addition_dataset(k, 600, SyntheticNoiseModel(0.9, 0.5, 0.0, 3)).samples()

start = time.perf_counter()
found = threshold_search(cascade, train, valid, ThresholdConfig())
print("thresholds", found.taus, "validation accuracy", found.accuracy)
learned, reports = cascade_learn(cascade, train, found.taus)
print(f"learned in {time.perf_counter() - start:.1f} s")
for report in reports:
    print(f"{report.stage}: {report.selected_percent:.0f}% reliable, stacked nabla {report.stacked_nabla:g}")

fixed = evaluate(cascade, test)
trained = evaluate(learned, test)
print("zero parameters:", fixed.accuracy, "learned:", trained.accuracy, "ties:", trained.ambiguous)

# a flipped classifier output on one operand digit
flipped = addition_dataset(k, 300, SyntheticNoiseModel(0.9, 0.5, 0.05, 4)).samples()
print("with 5% flipped digits:", evaluate(learned, flipped).accuracy)
