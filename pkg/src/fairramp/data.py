"""Ingestion, validation, splitting, synthetic generators and serialization.

File formats
------------
Score file: CSV with a header row; columns ``id``, ``score`` (or ``prob``),
``group``, optional ``sensitive`` (0/1) and ``label`` (0/1). UTF-8, comma
separated, '.' decimal. A ``prob`` column is converted via f = 2p - 1.

Model file: line-oriented text. Header lines ``key=value`` in the order
format_version, gamma, criterion, rho, epsilon, K; then K lines
``k lambda mu`` (``k lambda mu rate`` for the covariance criterion, where
rate is the frozen per-group sensitive-bit mean). Floats are written with
repr, which round-trips exactly.

All randomness in this package (shuffles, synthetic draws, sampled hard
labels) uses numpy's PCG64 generator, seeded explicitly, so runs are
reproducible bit-for-bit.
"""

import csv
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .core import (
    ConditionalCovariance,
    ConstraintSpec,
    DualState,
    RampModel,
    ScoredExample,
    StatisticalParity,
    TrainingInfo,
)
from .errors import (
    DataValidationError,
    MissingFieldError,
    ParseError,
    SerializationError,
    VersionError,
)

__all__ = [
    "Dataset",
    "ingest_scores",
    "write_scores",
    "three_way_split",
    "Atom",
    "SyntheticSpec",
    "THREE_ATOM_DEMO",
    "generate_from_spec",
    "generate_three_atom",
    "generate_smooth_scores",
    "generate_saturated_scores",
    "inject_selection_bias",
    "TabularData",
    "generate_adult_like",
    "load_adult_file",
    "save_model",
    "load_model",
]

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Dataset:
    """An immutable bag of scored examples with a declared group count."""

    examples: tuple[ScoredExample, ...]
    group_count: int
    provenance: str = ""
    split: str | None = None

    def __len__(self) -> int:
        return len(self.examples)

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.examples)

    @cached_property
    def scores(self) -> np.ndarray:
        return np.array([e.score for e in self.examples], dtype=np.float64)

    @cached_property
    def groups(self) -> np.ndarray:
        return np.array([e.group for e in self.examples], dtype=np.int64)

    @cached_property
    def sensitive_bits(self) -> np.ndarray | None:
        bits = [e.sensitive_bit for e in self.examples]
        if any(b is None for b in bits):
            return None
        return np.array(bits, dtype=np.int64)

    @cached_property
    def labels(self) -> np.ndarray | None:
        labels = [e.label for e in self.examples]
        if any(y is None for y in labels):
            return None
        return np.array(labels, dtype=np.int64)

    def subset(self, indices, split: str | None = None) -> "Dataset":
        return Dataset(
            examples=tuple(self.examples[int(i)] for i in indices),
            group_count=self.group_count,
            provenance=self.provenance,
            split=split if split is not None else self.split,
        )


def _parse_binary(raw: str, column: str, line: int) -> int:
    if raw not in ("0", "1"):
        raise ParseError(f"column {column!r} must be 0 or 1, got {raw!r}", line)
    return int(raw)


def ingest_scores(path, schema: str = "auto") -> Dataset:
    """Load and validate a score CSV. schema selects the score column:
    'auto' uses whichever of score/prob the header declares, 'score' and
    'prob' force the interpretation."""
    path = Path(path)
    if schema not in ("auto", "score", "prob"):
        raise DataValidationError(f"unknown schema {schema!r}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty, expected a header row", 1) from None
        header = [c.strip() for c in header]
        cols = {name: i for i, name in enumerate(header)}
        if "id" not in cols or "group" not in cols:
            raise ParseError("header must contain 'id' and 'group' columns", 1)
        if schema == "auto":
            if "score" in cols:
                value_col, as_prob = cols["score"], False
            elif "prob" in cols:
                value_col, as_prob = cols["prob"], True
            else:
                raise ParseError("header must contain a 'score' or 'prob' column", 1)
        else:
            name = schema
            if name not in cols:
                raise ParseError(f"header does not contain the requested {name!r} column", 1)
            value_col, as_prob = cols[name], name == "prob"
        sens_col = cols.get("sensitive")
        label_col = cols.get("label")

        examples = []
        seen = set()
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line_no)
            ex_id = row[cols["id"]].strip()
            if ex_id in seen:
                raise ParseError(f"duplicate id {ex_id!r}", line_no)
            seen.add(ex_id)
            try:
                value = float(row[value_col])
            except ValueError:
                raise ParseError(f"could not parse score value {row[value_col]!r}", line_no) from None
            if not math.isfinite(value):
                raise ParseError(f"non-finite score value {value}", line_no)
            if as_prob:
                if not (0.0 <= value <= 1.0):
                    raise ParseError(f"probability {value} outside [0, 1]", line_no)
                value = 2.0 * value - 1.0
            elif not (-1.0 <= value <= 1.0):
                raise ParseError(f"score {value} outside [-1, +1]", line_no)
            try:
                group = int(row[cols["group"]])
            except ValueError:
                raise ParseError(f"could not parse group {row[cols['group']]!r}", line_no) from None
            if group < 1:
                raise ParseError(f"group must be >= 1, got {group}", line_no)
            sensitive = None
            if sens_col is not None and row[sens_col].strip() != "":
                sensitive = _parse_binary(row[sens_col].strip(), "sensitive", line_no)
            label = None
            if label_col is not None and row[label_col].strip() != "":
                label = _parse_binary(row[label_col].strip(), "label", line_no)
            examples.append(
                ScoredExample(id=ex_id, score=value, group=group, sensitive_bit=sensitive, label=label)
            )
    group_count = max((e.group for e in examples), default=0)
    return Dataset(examples=tuple(examples), group_count=group_count, provenance=str(path))


def write_scores(dataset: Dataset, path) -> None:
    """Write a dataset in the score-file format (decimal text, byte-stable)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "score", "group", "sensitive", "label"])
        for e in dataset.examples:
            writer.writerow(
                [
                    e.id,
                    repr(e.score),
                    e.group,
                    "" if e.sensitive_bit is None else e.sensitive_bit,
                    "" if e.label is None else e.label,
                ]
            )


def three_way_split(dataset: Dataset, seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded shuffle into equal thirds (remainder goes to test)."""
    n = len(dataset)
    if n < 3:
        raise DataValidationError(f"need at least 3 examples to split, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    third = n // 3
    return (
        dataset.subset(perm[:third], split="train_post"),
        dataset.subset(perm[third:2 * third], split="validation"),
        dataset.subset(perm[2 * third:], split="test"),
    )


@dataclass(frozen=True)
class Atom:
    """One point mass of a synthetic population."""

    x: float                # score atom: f(x) = 2*eta - 1 must equal this
    probability: float
    eta: float              # p(y = 1 | x)
    sensitive_rate: float   # p(s = 1 | x)


@dataclass(frozen=True)
class SyntheticSpec:
    atoms: tuple[Atom, ...]

    def __post_init__(self):
        total = sum(a.probability for a in self.atoms)
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise DataValidationError(f"atom probabilities sum to {total}, expected 1")
        for a in self.atoms:
            if not (0.0 <= a.eta <= 1.0):
                raise DataValidationError(f"eta must lie in [0, 1], got {a.eta}")
            if not (0.0 <= a.sensitive_rate <= 1.0):
                raise DataValidationError(f"sensitive rate must lie in [0, 1], got {a.sensitive_rate}")


# Three score atoms where the accuracy-optimal rule under exact parity must
# randomize at the middle atom: deterministic post-processing cannot reach it.
THREE_ATOM_DEMO = SyntheticSpec(
    atoms=(
        Atom(x=-1.0, probability=1.0 / 2.0, eta=0.0, sensitive_rate=1.0 / 2.0),
        Atom(x=0.0, probability=1.0 / 3.0, eta=0.5, sensitive_rate=1.0),
        Atom(x=1.0, probability=1.0 / 6.0, eta=1.0, sensitive_rate=0.0),
    )
)


def generate_from_spec(spec: SyntheticSpec, n: int, seed: int, id_prefix: str = "syn") -> Dataset:
    """i.i.d. draws from a point-mass population. The group is the sensitive
    bit plus one; the score is 2*eta(x) - 1."""
    if n < 1:
        raise DataValidationError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    probs = np.array([a.probability for a in spec.atoms])
    idx = rng.choice(len(spec.atoms), size=n, p=probs)
    rates = np.array([a.sensitive_rate for a in spec.atoms])[idx]
    etas = np.array([a.eta for a in spec.atoms])[idx]
    s = (rng.random(n) < rates).astype(np.int64)
    y = (rng.random(n) < etas).astype(np.int64)
    scores = 2.0 * etas - 1.0
    examples = tuple(
        ScoredExample(
            id=f"{id_prefix}-{i:06d}",
            score=float(scores[i]),
            group=int(s[i]) + 1,
            sensitive_bit=int(s[i]),
            label=int(y[i]),
        )
        for i in range(n)
    )
    return Dataset(examples=examples, group_count=2, provenance=f"{id_prefix}(seed={seed}, n={n})")


def generate_three_atom(n: int, seed: int) -> Dataset:
    """Sample of the three-atom randomization-necessity population."""
    return generate_from_spec(THREE_ATOM_DEMO, n, seed, id_prefix="atom3")


def generate_smooth_scores(
    n: int,
    seed: int,
    separation: float = 1.2,
    group_shift: float = 0.8,
    offset: float = -0.3,
) -> Dataset:
    """Two-group population with continuous scores: f = tanh(separation * u +
    group_shift * (2s - 1) + offset) for u ~ N(0, 1), labels drawn from
    eta = (f + 1) / 2. The group shift injects bias."""
    if n < 1:
        raise DataValidationError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    s = (rng.random(n) < 0.5).astype(np.int64)
    u = rng.standard_normal(n)
    f = np.tanh(separation * u + group_shift * (2.0 * s - 1.0) + offset)
    y = (rng.random(n) < (f + 1.0) / 2.0).astype(np.int64)
    examples = tuple(
        ScoredExample(
            id=f"smooth-{i:06d}",
            score=float(f[i]),
            group=int(s[i]) + 1,
            sensitive_bit=int(s[i]),
            label=int(y[i]),
        )
        for i in range(n)
    )
    return Dataset(examples=examples, group_count=2, provenance=f"smooth(seed={seed}, n={n})")


def generate_saturated_scores(n: int, seed: int, bias: float = 0.3, base_rate: float = 0.5) -> Dataset:
    """Two groups whose scores sit exactly on {-1, +1}, with the positive-score
    rate differing by `bias` between groups. Labels equal 1{f = +1}. This is
    the regime where deterministic band rules and multiplicative corrections
    cannot move any prediction."""
    if n < 1:
        raise DataValidationError(f"n must be >= 1, got {n}")
    q1 = base_rate + bias / 2.0
    q2 = base_rate - bias / 2.0
    if not (0.0 <= q2 and q1 <= 1.0):
        raise DataValidationError("base_rate +- bias/2 must stay inside [0, 1]")
    rng = np.random.default_rng(seed)
    s = (rng.random(n) < 0.5).astype(np.int64)
    q = np.where(s == 0, q1, q2)
    pos = rng.random(n) < q
    f = np.where(pos, 1.0, -1.0)
    examples = tuple(
        ScoredExample(
            id=f"sat-{i:06d}",
            score=float(f[i]),
            group=int(s[i]) + 1,
            sensitive_bit=int(s[i]),
            label=int(pos[i]),
        )
        for i in range(n)
    )
    return Dataset(examples=examples, group_count=2, provenance=f"saturated(seed={seed}, n={n})")


def inject_selection_bias(dataset: Dataset, seed: int, drop_probability: float = 0.5) -> Dataset:
    """Keep every example whose sensitive bit equals its label; drop the rest
    independently with the given probability. Biases the sample while the
    underlying population stays unbiased."""
    if dataset.labels is None or dataset.sensitive_bits is None:
        raise MissingFieldError("selection-bias injection needs labels and sensitive bits")
    rng = np.random.default_rng(seed)
    keep = []
    for i, e in enumerate(dataset.examples):
        if e.sensitive_bit == e.label or rng.random() >= drop_probability:
            keep.append(i)
    return replace(dataset, examples=tuple(dataset.examples[i] for i in keep))


@dataclass(frozen=True)
class TabularData:
    """Raw feature rows for the scorer path (pre-score data)."""

    numeric: dict[str, np.ndarray]
    categorical: dict[str, np.ndarray]
    sensitive: np.ndarray
    label: np.ndarray
    ids: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.ids)

    def take(self, indices) -> "TabularData":
        idx = np.asarray(indices)
        return TabularData(
            numeric={k: v[idx] for k, v in self.numeric.items()},
            categorical={k: v[idx] for k, v in self.categorical.items()},
            sensitive=self.sensitive[idx],
            label=self.label[idx],
            ids=tuple(self.ids[int(i)] for i in idx),
        )


def generate_adult_like(n: int, seed: int) -> TabularData:
    """Synthetic census-style table: mixed numeric/categorical features, a
    binary sensitive attribute correlated with several features, and a label
    drawn from a logistic model that is exactly linear in the one-hot/z-score
    encoding. A local stand-in with the same shape and difficulty profile as
    the income-prediction benchmark, for use where the real file is absent."""
    rng = np.random.default_rng(seed)
    sensitive = (rng.random(n) < 0.67).astype(np.int64)

    age = np.clip(rng.normal(38 + 2.0 * sensitive, 13), 17, 90).round()
    edu = np.clip(rng.normal(10 + 0.3 * sensitive, 2.6), 1, 16).round()
    hours = np.clip(rng.normal(38 + 5.0 * sensitive, 11), 1, 99).round()
    capital = np.where(rng.random(n) < 0.08, rng.exponential(12000, n), 0.0).round()

    workclass = rng.choice(np.array(["private", "gov", "self", "other"]), size=n,
                           p=[0.7, 0.13, 0.11, 0.06])
    occupation_skill = rng.choice(3, size=n, p=[0.45, 0.35, 0.2])
    occupation = np.array(["service", "skilled", "professional"])[occupation_skill]
    married_p = 0.35 + 0.3 * sensitive
    marital = np.where(rng.random(n) < married_p, "married", "single")
    sex = np.where(sensitive == 1, "male", "female")

    logit = (
        -4.75
        + 0.055 * (age - 38)
        + 0.65 * (edu - 10)
        + 0.06 * (hours - 40)
        + 1.1e-4 * capital
        + 0.9 * occupation_skill
        + 2.0 * (marital == "married")
        + 0.9 * sensitive
    )
    label = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(np.int64)
    return TabularData(
        numeric={"age": age, "education_num": edu, "hours_per_week": hours, "capital_gain": capital},
        categorical={"workclass": workclass, "occupation": occupation, "marital": marital, "sex": sex},
        sensitive=sensitive,
        label=label,
        ids=tuple(f"adult-{i:06d}" for i in range(n)),
    )


_ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num", "marital_status",
    "occupation", "relationship", "race", "sex", "capital_gain", "capital_loss",
    "hours_per_week", "native_country", "income",
]
_ADULT_NUMERIC = ["age", "fnlwgt", "education_num", "capital_gain", "capital_loss", "hours_per_week"]


def load_adult_file(path) -> TabularData:
    """Read the standard 15-column UCI census income file (no header, comma
    separated, '?' for missing). Rows with missing fields are dropped; the
    sensitive attribute is sex (Male = 1) and the label is income > 50K."""
    path = Path(path)
    rows = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != len(_ADULT_COLUMNS):
                raise ParseError(f"expected {len(_ADULT_COLUMNS)} fields, got {len(parts)}", line_no)
            if "?" in parts:
                continue
            rows.append(parts)
    if not rows:
        raise ParseError("no usable rows in file", 1)
    table = {name: [r[i] for r in rows] for i, name in enumerate(_ADULT_COLUMNS)}
    numeric = {}
    for name in _ADULT_NUMERIC:
        try:
            numeric[name] = np.array([float(v) for v in table[name]])
        except ValueError:
            raise ParseError(f"non-numeric value in column {name!r}") from None
    categorical = {
        name: np.array(table[name])
        for name in ("workclass", "education", "marital_status", "occupation",
                     "relationship", "race", "native_country")
    }
    sensitive = np.array([1 if v == "Male" else 0 for v in table["sex"]], dtype=np.int64)
    label = np.array([1 if v.rstrip(".") == ">50K" else 0 for v in table["income"]], dtype=np.int64)
    return TabularData(
        numeric=numeric,
        categorical=categorical,
        sensitive=sensitive,
        label=label,
        ids=tuple(f"adult-{i:06d}" for i in range(len(rows))),
    )


def _criterion_fields(model: RampModel) -> tuple[str, float, float]:
    crit = model.constraint.criterion
    if isinstance(crit, StatisticalParity):
        return "statistical_parity", crit.rho, crit.epsilon
    return "conditional_covariance", 0.0, crit.epsilon


def save_model(model: RampModel, path) -> None:
    """Write the multipliers the model actually predicts with (decimal text,
    exact round-trip)."""
    path = Path(path)
    name, rho, epsilon = _criterion_fields(model)
    lam, mu = model.multipliers()
    lines = [
        f"format_version={MODEL_FORMAT_VERSION}",
        f"gamma={float(model.gamma)!r}",
        f"criterion={name}",
        f"rho={float(rho)!r}",
        f"epsilon={float(epsilon)!r}",
        f"K={model.group_count}",
    ]
    rates = model.constraint.group_rates
    for k in range(model.group_count):
        row = f"{k + 1} {float(lam[k])!r} {float(mu[k])!r}"
        if rates is not None:
            row += f" {float(rates[k])!r}"
        lines.append(row)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _header_value(lines: list[str], index: int, key: str) -> str:
    if index >= len(lines):
        raise SerializationError(f"model file truncated before {key!r} header")
    line = lines[index].strip()
    if not line.startswith(key + "="):
        raise SerializationError(f"expected {key!r} header, found {line!r}")
    return line[len(key) + 1:]


def load_model(path) -> RampModel:
    """Read a model file; the loaded model predicts exactly as the saved one."""
    path = Path(path)
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    version = _header_value(lines, 0, "format_version")
    if version != str(MODEL_FORMAT_VERSION):
        raise VersionError(f"unsupported model format version {version!r}")
    gamma = float(_header_value(lines, 1, "gamma"))
    criterion_name = _header_value(lines, 2, "criterion")
    rho = float(_header_value(lines, 3, "rho"))
    epsilon = float(_header_value(lines, 4, "epsilon"))
    k_count = int(_header_value(lines, 5, "K"))
    body = lines[6:]
    if len(body) != k_count:
        raise SerializationError(f"expected {k_count} group lines, found {len(body)}")

    if criterion_name == "statistical_parity":
        criterion = StatisticalParity(rho=rho, epsilon=epsilon)
        expect_rate = False
    elif criterion_name == "conditional_covariance":
        criterion = ConditionalCovariance(epsilon=epsilon)
        expect_rate = True
    else:
        raise SerializationError(f"unknown criterion {criterion_name!r}")

    lam = np.zeros(k_count)
    mu = np.zeros(k_count)
    rates = [0.0] * k_count if expect_rate else None
    for line in body:
        parts = line.split()
        if len(parts) != (4 if expect_rate else 3):
            raise SerializationError(f"malformed group line {line!r}")
        k = int(parts[0])
        if not (1 <= k <= k_count):
            raise SerializationError(f"group id {k} outside 1..{k_count}")
        lam[k - 1] = float(parts[1])
        mu[k - 1] = float(parts[2])
        if expect_rate:
            rates[k - 1] = float(parts[3])

    spec = ConstraintSpec(
        criterion=criterion,
        group_count=k_count,
        offset=rho if criterion_name == "statistical_parity" else 0.0,
        slack_coefficient=epsilon / 2.0 if criterion_name == "statistical_parity" else epsilon,
        group_slack=None,
        group_rates=None if rates is None else tuple(rates),
    )
    dual = DualState(lam=lam, mu=mu, lam_avg=lam.copy(), mu_avg=mu.copy(), step_count=0)
    info = TrainingInfo(schedule="loaded", use_averaged_iterates=False)
    return RampModel(gamma=gamma, constraint=spec, dual=dual, group_count=k_count, training=info)
