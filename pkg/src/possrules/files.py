"""Reading and writing rule files, distribution CSVs, training JSONL, parameters and dataset manifests."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Domain, ValidationError, to_possibility
from .inference import Cascade, Proposition, Rule, RuleSet
from .learning import Sample


def fmt(value: float) -> str:
    return format(float(value), ".12g")


def _load_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise ValidationError(f"{path}: invalid JSON at line {err.lineno}: {err.msg}") from None
    except OSError as err:
        raise ValidationError(f"{path}: {err.strerror}") from None


def cascade_from_dict(data: Mapping) -> Cascade:
    try:
        attrs = {}
        for entry in data["attributes"]:
            if entry["name"] in attrs:
                raise ValidationError(f"attribute {entry['name']!r} declared twice")
            attrs[entry["name"]] = Domain(tuple(entry["labels"]))
        sets = {}
        for entry in data["rule_sets"]:
            name = entry["name"]
            output = entry["output"]
            if output not in attrs:
                raise ValidationError(f"rule set {name!r}: undeclared output attribute {output!r}")
            rules = []
            used = {output}
            for i, rule in enumerate(entry["rules"], start=1):
                premise = []
                for prop in rule["premise"]:
                    attr = prop["attr"]
                    if attr not in attrs:
                        raise ValidationError(f"rule set {name!r}, rule {i}: undeclared attribute {attr!r}")
                    used.add(attr)
                    premise.append(Proposition(attr, attrs[attr].indices(prop["values"])))
                rules.append(Rule(tuple(premise), attrs[output].indices(rule["conclusion"]),
                                  float(rule.get("s", 0.0)), float(rule.get("r", 0.0))))
            if name in sets:
                raise ValidationError(f"rule set {name!r} declared twice")
            sets[name] = RuleSet(name, output, {a: attrs[a] for a in used}, rules, entry.get("tau_group"))
        order = data.get("cascade") or [{"rule_set": name} for name in sets]
        stages = []
        for step in order:
            step = {"rule_set": step} if isinstance(step, str) else step
            if step["rule_set"] not in sets:
                raise ValidationError(f"cascade refers to unknown rule set {step['rule_set']!r}")
            stages.append(sets[step["rule_set"]])
        cascade = Cascade(attrs, stages)
        for step, stage in zip(order, stages):
            if isinstance(step, Mapping) and "chain" in step:
                actual = set(cascade.chained_attributes(stage))
                if set(step["chain"]) != actual:
                    raise ValidationError(f"cascade step {stage.name!r} declares chained attributes "
                                          f"{sorted(step['chain'])} but reads {sorted(actual)}")
        return cascade
    except KeyError as err:
        raise ValidationError(f"rule file is missing the field {err.args[0]!r}") from None


def cascade_to_dict(cascade: Cascade) -> dict:
    sets = []
    for stage in cascade.stages:
        out_labels = stage.output_domain.labels
        rules = []
        for rule in stage.rules:
            premise = [{"attr": p.attribute, "values": [stage.domains[p.attribute].labels[v] for v in sorted(p.values)]}
                       for p in rule.premise]
            rules.append({"premise": premise, "conclusion": [out_labels[v] for v in sorted(rule.conclusion)],
                          "s": rule.s, "r": rule.r})
        sets.append({"name": stage.name, "output": stage.output, "tau_group": stage.tau_group, "rules": rules})
    return {
        "attributes": [{"name": name, "labels": list(dom.labels)} for name, dom in cascade.attributes.items()],
        "rule_sets": sets,
        "cascade": [{"rule_set": s.name, "chain": cascade.chained_attributes(s)} for s in cascade.stages],
    }


def load_cascade(path) -> Cascade:
    data = _load_json(path)
    if not isinstance(data, Mapping):
        raise ValidationError(f"{path}: a rule file holds a JSON object")
    try:
        return cascade_from_dict(data)
    except ValidationError as err:
        raise ValidationError(f"{path}: {err}") from None


def save_cascade(cascade: Cascade, path) -> None:
    Path(path).write_text(json.dumps(cascade_to_dict(cascade), indent=1) + "\n", encoding="utf-8")


def read_distributions(path, expected: Sequence[str] | None = None) -> tuple[list[str], np.ndarray]:
    """Header row of labels, then one row of degrees per distribution."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise ValidationError(f"{path}: empty file, no samples")
            header = [h.strip() for h in header]
            if expected is not None and list(expected) != header:
                raise ValidationError(f"{path}: header {header} does not match the labels {list(expected)}")
            rows = []
            for line_no, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != len(header):
                    raise ValidationError(f"{path}: line {line_no} has {len(row)} cells, expected {len(header)}")
                values = []
                for col, cell in zip(header, row):
                    try:
                        value = float(cell)
                    except ValueError:
                        raise ValidationError(f"{path}: line {line_no}, column {col!r}: "
                                              f"{cell!r} is not a number") from None
                    if not 0.0 <= value <= 1.0:
                        raise ValidationError(f"{path}: line {line_no}, column {col!r}: "
                                              f"degree {cell} is outside [0, 1]")
                    values.append(value)
                rows.append(values)
    except OSError as err:
        raise ValidationError(f"{path}: {err.strerror}") from None
    if not rows:
        raise ValidationError(f"{path}: no samples")
    return header, np.array(rows)


def write_distributions(path_or_file, labels: Sequence[str], rows: Iterable[Sequence[float]],
                        extra: Sequence[str] = (), extra_values: Iterable[Sequence[str]] | None = None) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(labels) + list(extra))
        extras = iter(extra_values) if extra_values is not None else None
        for row in rows:
            cells = [fmt(v) for v in row]
            if extras is not None:
                cells += list(next(extras))
            writer.writerow(cells)
    finally:
        if own:
            fh.close()


def read_samples(path, cascade: Cascade, transform: str = "none", renormalize: bool = False) -> list[Sample]:
    """JSON lines of {"inputs": {attr: [degrees]}, "targets": {attr: label}}."""
    samples = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise ValidationError(f"{path}: {err.strerror}") from None
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            inputs = {}
            for attr, degrees in record["inputs"].items():
                if attr not in cascade.attributes:
                    raise ValidationError(f"unknown attribute {attr!r}")
                if len(degrees) != cascade.attributes[attr].size:
                    raise ValidationError(f"attribute {attr!r} needs {cascade.attributes[attr].size} degrees")
                inputs[attr] = to_possibility(degrees, transform, renormalize)
            targets = {}
            for attr, label in record.get("targets", {}).items():
                if attr not in cascade.attributes:
                    raise ValidationError(f"unknown target attribute {attr!r}")
                targets[attr] = cascade.attributes[attr].index(label)
        except json.JSONDecodeError as err:
            raise ValidationError(f"{path}: line {line_no}: invalid JSON ({err.msg})") from None
        except (KeyError, TypeError) as err:
            raise ValidationError(f"{path}: line {line_no}: malformed record ({err})") from None
        except ValidationError as err:
            raise ValidationError(f"{path}: line {line_no}: {err}") from None
        samples.append(Sample(inputs, targets))
    if not samples:
        raise ValidationError(f"{path}: no samples")
    return samples


def write_samples(path, samples: Sequence[Sample], cascade: Cascade) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            record = {
                "inputs": {attr: [float(v) for v in row] for attr, row in sample.inputs.items()},
                "targets": {attr: cascade.attributes[attr].labels[idx] for attr, idx in sample.targets.items()},
            }
            fh.write(json.dumps(record) + "\n")


def parameters_to_dict(cascade: Cascade) -> dict:
    return {stage.name: {str(i): {"s": rule.s, "r": rule.r} for i, rule in enumerate(stage.rules, start=1)}
            for stage in cascade.stages}


def save_parameters(cascade: Cascade, path) -> None:
    Path(path).write_text(json.dumps(parameters_to_dict(cascade), indent=1, sort_keys=False) + "\n",
                          encoding="utf-8")


def apply_parameters(cascade: Cascade, params: Mapping) -> Cascade:
    stages = []
    for stage in cascade.stages:
        given = params.get(stage.name)
        if given is None:
            stages.append(stage)
            continue
        s, r = stage.s.copy(), stage.r.copy()
        for key, value in given.items():
            i = int(key) - 1
            if not 0 <= i < stage.n:
                raise ValidationError(f"parameters for {stage.name!r} refer to missing rule {key}")
            s[i] = float(value.get("s", s[i]))
            r[i] = float(value.get("r", r[i]))
        stages.append(stage.with_parameters(s, r))
    unknown = set(params) - {stage.name for stage in cascade.stages}
    if unknown:
        raise ValidationError(f"parameters given for unknown rule sets {sorted(unknown)}")
    return cascade.with_stages(stages)


def load_parameters(cascade: Cascade, path) -> Cascade:
    data = _load_json(path)
    if not isinstance(data, Mapping):
        raise ValidationError(f"{path}: a parameter file holds a JSON object")
    return apply_parameters(cascade, data)


def load_manifest_dataset(path):
    """Dataset described by a manifest {problem, k|side, distributions, labels, split}.

    The distributions CSV holds one row per input image, grouped by sample in the
    order of the labels CSV columns; the labels CSV has one row of true digits per sample.
    """
    from .benchmarks import Dataset, addition_targets, sudoku_is_valid, sudoku_targets

    manifest = _load_json(path)
    if not isinstance(manifest, Mapping):
        raise ValidationError(f"{path}: a manifest holds a JSON object")
    base = Path(path).parent
    try:
        problem = manifest["problem"]
        dist_path = base / manifest["distributions"]
        label_path = base / manifest["labels"]
    except KeyError as err:
        raise ValidationError(f"{path}: manifest is missing {err.args[0]!r}") from None
    if problem == "addition":
        k = int(manifest["k"])
        attrs = [f"a_{i}" for i in range(1, 2 * k + 1)]
        size = 10
    elif problem == "sudoku":
        side = int(manifest["side"])
        attrs = [f"a_{i}_{j}" for i in range(1, side + 1) for j in range(1, side + 1)]
        size = side
    else:
        raise ValidationError(f"{path}: unknown problem {problem!r}")
    _, rows = read_distributions(dist_path, [str(d) for d in range(size)])
    try:
        with open(label_path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            records = [row for row in reader if any(v.strip() for v in row.values() if v)]
    except OSError as err:
        raise ValidationError(f"{label_path}: {err.strerror}") from None
    if rows.shape[0] != len(records) * len(attrs):
        raise ValidationError(f"{dist_path}: {rows.shape[0]} rows, expected {len(records) * len(attrs)} "
                              f"({len(records)} samples x {len(attrs)} inputs)")
    labels = np.array([[int(rec[a]) for a in attrs] for rec in records], dtype=int)
    probs = rows.reshape(len(records), len(attrs), size)
    for n, row in enumerate(probs):
        for a, dist in zip(attrs, row):
            if abs(dist.sum() - 1.0) > 1e-6:
                raise ValidationError(f"{dist_path}: sample {n + 1}, attribute {a}: probabilities sum to {dist.sum()}")
    if problem == "addition":
        targets = [addition_targets(row, k) for row in labels]
    else:
        targets = []
        for rec, row in zip(records, labels):
            grid = row.reshape(side, side)
            valid = bool(int(rec["valid"])) if rec.get("valid") not in (None, "") else sudoku_is_valid(grid)
            targets.append(sudoku_targets(grid, valid))
    return manifest, Dataset(attrs, probs, labels, targets)


def save_manifest_dataset(directory, dataset, problem: str, size_key: str, size: int, split: str) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n_labels = dataset.probabilities.shape[2]
    write_distributions(directory / f"{split}_distributions.csv", [str(d) for d in range(n_labels)],
                        dataset.probabilities.reshape(-1, n_labels))
    with open(directory / f"{split}_labels.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        extra = ["valid"] if problem == "sudoku" else []
        writer.writerow(dataset.attributes + extra)
        for labels, targets in zip(dataset.labels, dataset.targets):
            writer.writerow([str(v) for v in labels] + ([str(targets["c"])] if extra else []))
    manifest = {"problem": problem, size_key: size, "distributions": f"{split}_distributions.csv",
                "labels": f"{split}_labels.csv", "split": split}
    path = directory / f"{split}_manifest.json"
    path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return path
