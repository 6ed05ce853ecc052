"""Command line: validate, infer, learn, eval, transform, backprop, generate.

Exit status 0 on success, 1 on invalid input, 2 when no training sample is reliable.
"""

from __future__ import annotations

import argparse
import functools
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import benchmarks, files
from .backprop import Conflict, UnsupportedPremiseShape, omega_system, solve_omega, targeted_inputs
from .core import ValidationError, antipignistic, antipignistic_inverse, argmax_label, min_specificity, to_possibility
from .inference import Cascade
from .learning import NoReliableSamples, Sample, ThresholdConfig, cascade_learn, threshold_search
from .parallel import default_jobs, parallel_map

EXIT_INVALID = 1
EXIT_NO_RELIABLE = 2
AMBIGUOUS = "AMBIGUOUS"


def _rules(args) -> Cascade:
    cascade = files.load_cascade(args.rules)
    if getattr(args, "params", None):
        cascade = files.load_parameters(cascade, args.params)
    return cascade


def _write_json(data, path):
    text = json.dumps(data, indent=1) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_samples(path, cascade: Cascade, transform: str | None, renormalize: bool) -> list[Sample]:
    if str(path).endswith(".jsonl"):
        return files.read_samples(path, cascade, transform or "none", renormalize)
    _, dataset = files.load_manifest_dataset(path)
    return dataset.samples(transform or "antipignistic")


def cmd_validate(args) -> int:
    cascade = _rules(args)
    problems = []
    for stage in cascade.stages:
        problems += stage.warnings()
        part = stage.partition
        print(f"{stage.name}: output {stage.output} ({stage.output_domain.size} values), {stage.n} rules, "
              f"{part.omega} cells, {part.operations} intersections, reads {stage.input_attributes}")
        if args.dump:
            print(part.dump(stage.output_domain.labels))
    for message in problems:
        print(f"warning: {message}", file=sys.stderr)
    print(f"ok: {len(cascade.stages)} rule sets, {sum(s.n for s in cascade.stages)} rules, "
          f"{len(cascade.attributes)} attributes")
    return 0


def _infer_row(cascade, emit, inputs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        outputs = cascade.infer(inputs)
    return [outputs[attr] for attr in emit]


def cmd_infer(args) -> int:
    cascade = _rules(args)
    given = {}
    for spec in args.input:
        attr, _, path = spec.partition("=")
        if not path or attr not in cascade.attributes:
            raise ValidationError(f"--input expects ATTR=FILE with a declared attribute, got {spec!r}")
        _, rows = files.read_distributions(path, cascade.attributes[attr].labels)
        given[attr] = rows
    missing = [a for a in cascade.input_attributes if a not in given]
    if missing:
        raise ValidationError(f"missing --input for {missing}")
    counts = {len(rows) for rows in given.values()}
    if len(counts) != 1:
        raise ValidationError("all input files must have the same number of rows")
    samples = []
    for n in range(counts.pop()):
        inputs = {}
        for attr, rows in given.items():
            try:
                inputs[attr] = to_possibility(rows[n], args.transform, args.renormalize)
            except ValidationError as err:
                raise ValidationError(f"input {attr!r}, data row {n + 1}: {err}") from None
        samples.append(inputs)
    emit = args.emit or cascade.final_outputs
    for attr in emit:
        if attr not in cascade.produced:
            raise ValidationError(f"{attr!r} is not produced by any rule set")
    results = parallel_map(functools.partial(_infer_row, cascade, emit), samples, args.jobs)
    if len(emit) == 1:
        header = list(cascade.attributes[emit[0]].labels)
        extra = ["argmax"]
    else:
        header = [f"{attr}={label}" for attr in emit for label in cascade.attributes[attr].labels]
        extra = [f"{attr}:argmax" for attr in emit]
    rows, picks = [], []
    for outs in results:
        rows.append(np.concatenate(outs))
        pick = []
        for attr, out in zip(emit, outs):
            idx = argmax_label(out)
            pick.append(AMBIGUOUS if idx is None else cascade.attributes[attr].labels[idx])
        picks.append(pick)
    files.write_distributions(args.output or sys.stdout, header, rows, extra, picks)
    return 0


def _taus(args, cascade):
    if not args.tau:
        return None
    groups = {stage.tau_group for stage in cascade.stages} | {stage.name for stage in cascade.stages}
    taus, default = {}, None
    for spec in args.tau:
        if "=" in spec:
            key, _, value = spec.partition("=")
            if key not in groups:
                raise ValidationError(f"--tau names unknown group or rule set {key!r}")
            taus[key] = float(value)
        else:
            default = float(spec)
    if default is not None:
        for stage in cascade.stages:
            taus.setdefault(stage.tau_group, default)
    return taus


def cmd_learn(args) -> int:
    cascade = _rules(args)
    train = _load_samples(args.train, cascade, args.transform, args.renormalize)
    report = {"train_samples": len(train)}
    if args.search:
        if not args.valid:
            raise ValidationError("--search needs --valid")
        valid = _load_samples(args.valid, cascade, args.transform, args.renormalize)
        config = ThresholdConfig(args.l, args.h, args.eps, args.min_improvement, args.stagnation)
        found = threshold_search(cascade, train, valid, config, jobs=args.jobs)
        if found.taus is None:
            raise NoReliableSamples(cascade.stages[0].name, float(config.candidates()[-1]))
        taus = found.taus
        report["threshold_search"] = {"taus": taus, "validation_accuracy": found.accuracy,
                                      "tested": [{"taus": t, "accuracy": a} for t, a in found.history]}
    else:
        taus = _taus(args, cascade)
        if taus is None:
            raise ValidationError("give --tau or --search")
    learned, stages = cascade_learn(cascade, train, taus, args.jobs)
    report["taus"] = taus
    report["stages"] = [s.as_dict() for s in stages]
    files.save_parameters(learned, args.output)
    for s in stages:
        print(f"{s.stage}: tau={files.fmt(s.tau)} reliable {s.selected_count}/{len(s.selected)} "
              f"({s.selected_percent:.1f}%), stacked nabla {files.fmt(s.stacked_nabla)}")
    if args.report:
        _write_json(report, args.report)
    return 0


def cmd_eval(args) -> int:
    cascade = _rules(args)
    test = _load_samples(args.test, cascade, args.transform, args.renormalize)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = benchmarks.evaluate(cascade, test, jobs=args.jobs)
    _write_json(result.as_dict(), args.report)
    return 0


def cmd_transform(args) -> int:
    labels, rows = files.read_distributions(args.input)
    fn = {"antipignistic": antipignistic, "minspec": min_specificity, "inverse": antipignistic_inverse}[args.method]
    out = []
    for n, row in enumerate(rows, start=1):
        try:
            out.append(fn(row, args.renormalize))
        except ValidationError as err:
            raise ValidationError(f"{args.input}: data row {n}: {err}") from None
    files.write_distributions(args.output or sys.stdout, labels, out)
    return 0


def cmd_backprop(args) -> int:
    cascade = _rules(args)
    stage = cascade.stage(args.stage) if args.stage else cascade.stages[-1]
    domain = stage.output_domain
    if args.target is not None:
        target = np.zeros(domain.size)
        target[domain.index(args.target)] = 1.0
    else:
        _, rows = files.read_distributions(args.target_csv, domain.labels)
        target = rows[0]
    solution = solve_omega(omega_system(stage, target))
    summary = {"stage": stage.name, "consistent": solution.consistent,
               "f_low": [float(v) for v in solution.f_low], "f_high": [float(v) for v in solution.f_high]}
    if not solution.consistent:
        _write_json(summary, None)
        print("error: the target cannot be produced with these rule parameters", file=sys.stderr)
        return EXIT_INVALID
    try:
        inputs = targeted_inputs(stage, solution, args.pick)
    except UnsupportedPremiseShape as err:
        summary["premise_constraints"] = [{"rule": i, "lambda": lam, "rho": rho} for i, lam, rho in err.constraints]
        _write_json(summary, None)
        print(f"warning: {err}", file=sys.stderr)
        return 0
    except Conflict as err:
        print(f"error: conflict on {err.attribute!r} value {err.value!r}: {err}", file=sys.stderr)
        return EXIT_INVALID
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for attr, pi in inputs.items():
        labels = stage.domains[attr].labels
        files.write_distributions(out_dir / f"{attr}_possibility.csv", labels, [pi])
        files.write_distributions(out_dir / f"{attr}_probability.csv", labels, [antipignistic_inverse(pi)])
    summary["inputs"] = {attr: [float(v) for v in pi] for attr, pi in inputs.items()}
    _write_json(summary, None)
    return 0


def cmd_generate(args) -> int:
    if args.what == "rules":
        cascade = (benchmarks.addition_cascade(args.k) if args.problem == "addition"
                   else benchmarks.sudoku_cascade(args.side))
        files.save_cascade(cascade, args.output)
        print(f"{args.output}: {len(cascade.stages)} rule sets, {sum(s.n for s in cascade.stages)} rules, "
              f"{len(cascade.attributes)} attributes")
        return 0
    model = benchmarks.SyntheticNoiseModel(args.base, args.temperature, args.flip, args.seed)
    if args.problem == "addition":
        dataset = benchmarks.addition_dataset(args.k, args.count, model)
        path = files.save_manifest_dataset(args.output, dataset, "addition", "k", args.k, args.split)
    else:
        grids = benchmarks.random_sudoku_grids(args.side, args.count, args.seed)
        dataset = benchmarks.sudoku_dataset(grids, model)
        path = files.save_manifest_dataset(args.output, dataset, "sudoku", "side", args.side, args.split)
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pirules", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, params=True):
        p.add_argument("rules", help="rule file (JSON)")
        if params:
            p.add_argument("--params", help="learned parameter file (JSON)")
        p.add_argument("--renormalize", action="store_true",
                       help="divide un-normalized inputs by their max (possibility) or sum (probability)")
        p.add_argument("--jobs", type=int, default=None, help="worker processes (default $PI_RULES_JOBS or 1)")

    transforms = ["none", "antipignistic", "minspec"]

    p = sub.add_parser("validate", help="check a rule file and report its partitions")
    common(p)
    p.add_argument("--dump", action="store_true", help="print every partition cell")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("infer", help="infer output distributions from input CSVs")
    common(p)
    p.add_argument("--input", action="append", default=[], metavar="ATTR=FILE", help="input distributions per attribute")
    p.add_argument("--transform", choices=transforms, default="none", help="inputs are probabilities to transform")
    p.add_argument("--emit", action="append", metavar="ATTR", help="output attribute to write (default: final outputs)")
    p.add_argument("--output", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("learn", help="learn rule parameters in cascade")
    common(p)
    p.add_argument("--train", required=True, help="training samples (.jsonl) or dataset manifest (.json)")
    p.add_argument("--valid", help="validation samples for --search")
    p.add_argument("--tau", action="append", metavar="[GROUP=]VALUE", help="reliability threshold(s)")
    p.add_argument("--search", action="store_true", help="pick thresholds on the validation data")
    p.add_argument("--l", type=int, default=30)
    p.add_argument("--h", type=float, default=5.0)
    p.add_argument("--eps", type=float, default=0.001)
    p.add_argument("--min-improvement", type=float, default=0.01)
    p.add_argument("--stagnation", type=int, default=1)
    p.add_argument("--transform", choices=transforms, default=None,
                   help="input transform (default none for .jsonl, antipignistic for manifests)")
    p.add_argument("--output", required=True, help="learned parameter file to write")
    p.add_argument("--report", help="reliability report (JSON)")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval", help="accuracy of a cascade on test samples")
    common(p)
    p.add_argument("--test", required=True, help="test samples (.jsonl) or dataset manifest (.json)")
    p.add_argument("--transform", choices=transforms, default=None)
    p.add_argument("--report", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("transform", help="probability/possibility transforms of a distribution CSV")
    p.add_argument("input")
    p.add_argument("--method", choices=["antipignistic", "minspec", "inverse"], default="antipignistic")
    p.add_argument("--output")
    p.add_argument("--renormalize", action="store_true")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("backprop", help="input distributions that produce a target output")
    common(p)
    p.add_argument("--stage", help="rule set to invert (default: the last one)")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--target", help="output label receiving degree 1, all others 0")
    target.add_argument("--target-csv", help="CSV with one target possibility distribution")
    p.add_argument("--pick", choices=["low", "high"], default="low", help="lowest or greatest premise solution")
    p.add_argument("--out-dir", default=".", help="directory for the generated CSVs")
    p.set_defaults(func=cmd_backprop)

    p = sub.add_parser("generate", help="generate benchmark rule files or synthetic datasets")
    p.add_argument("what", choices=["rules", "data"])
    p.add_argument("problem", choices=["addition", "sudoku"])
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--side", type=int, default=4, choices=[4, 9])
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--base", type=float, default=1.0, help="probability mass on the true label")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--flip", type=float, default=0.0, help="chance that the peak is on a wrong label")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", default="train")
    p.add_argument("--output", required=True, help="rule file, or directory for data")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if hasattr(args, "jobs") and args.jobs is None:
        args.jobs = default_jobs()
    try:
        return args.func(args)
    except NoReliableSamples as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NO_RELIABLE
    except (ValidationError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
