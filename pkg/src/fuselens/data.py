"""File formats, loaders/writers, and the synthetic fixture generator.

Embeddings travel in a little-endian binary format (header + fixed-size
records) because evaluation sets can reach millions of rows; a JSON-lines
variant is accepted for interoperability and ad-hoc tooling. Classifiers
are small, human-audited JSON documents whose floats are written with 17
significant digits so a write/read cycle is value-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import (
    DEFAULT_TEMPERATURE,
    ClassifierKind,
    ClassifierWeights,
    Embedding,
    Split,
    unit_rows,
)
from .errors import FormatError, InvariantError
from .evaluation import EvalSet

MAGIC = b"FUSLENS1"
FLAG_LABELS = 0x1
FLAG_SPLITS = 0x2

_HEADER = struct.Struct("<8sIQI")
_SPLIT_CODES = {Split.BASE: 0, Split.NOVEL: 1, Split.UNLABELED: 2}
_SPLIT_FROM_CODE = {code: split for split, code in _SPLIT_CODES.items()}

CLASSIFIER_FORMAT_VERSION = 1


@dataclass(frozen=True)
class EmbeddingFileHeader:
    dim: int
    count: int
    flags: int

    @property
    def has_labels(self) -> bool:
        return bool(self.flags & FLAG_LABELS)

    @property
    def has_splits(self) -> bool:
        return bool(self.flags & FLAG_SPLITS)


def _record_dtype(dim: int, has_labels: bool, has_splits: bool) -> np.dtype:
    fields: list[tuple[str, str] | tuple[str, str, tuple[int, ...]]] = [
        ("values", "<f4", (dim,))
    ]
    if has_labels:
        fields.append(("label", "<u4"))
    if has_splits:
        fields.append(("split", "u1"))
    return np.dtype(fields)


def write_embeddings(path: str | Path, records: list[Embedding] | tuple[Embedding, ...]) -> None:
    """Write records in the binary embedding format.

    Labels and split tags are all-or-nothing per file (recorded in the
    header flags). Values are stored as 32-bit floats; sample ids are not
    persisted in this format.
    """
    records = tuple(records)
    if not records:
        raise InvariantError("refusing to write an empty embedding file")
    dim = records[0].dim
    has_labels = records[0].label is not None
    has_splits = records[0].split is not None
    for i, rec in enumerate(records):
        if rec.dim != dim:
            raise InvariantError(f"record {i} has dimension {rec.dim}, expected {dim}")
        if (rec.label is not None) != has_labels:
            raise InvariantError("labels must be present on all records or none")
        if (rec.split is not None) != has_splits:
            raise InvariantError("split tags must be present on all records or none")
        if has_labels and rec.label >= 2**32:
            raise InvariantError(f"record {i} label does not fit in 32 bits")
    flags = (FLAG_LABELS if has_labels else 0) | (FLAG_SPLITS if has_splits else 0)
    values = np.vstack([rec.values for rec in records]).astype("<f4")
    if not np.all(np.isfinite(values)):
        raise InvariantError("a value exceeds 32-bit float range")
    arr = np.empty(len(records), dtype=_record_dtype(dim, has_labels, has_splits))
    arr["values"] = values
    if has_labels:
        arr["label"] = np.array([rec.label for rec in records], dtype="<u4")
    if has_splits:
        arr["split"] = np.array([_SPLIT_CODES[rec.split] for rec in records], dtype="u1")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, dim, len(records), flags))
        f.write(arr.tobytes())


def read_embedding_header(path: str | Path) -> EmbeddingFileHeader:
    """Read and validate only the binary header."""
    with open(path, "rb") as f:
        raw = f.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, dim, count, flags = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if dim < 1:
        raise FormatError(f"{path}: header dimension must be >= 1")
    if count < 1:
        raise FormatError(f"{path}: header count must be >= 1")
    return EmbeddingFileHeader(dim=int(dim), count=int(count), flags=int(flags))


def read_embeddings(path: str | Path) -> list[Embedding]:
    """Read a binary embedding file; values are widened to float64."""
    header = read_embedding_header(path)
    dtype = _record_dtype(header.dim, header.has_labels, header.has_splits)
    with open(path, "rb") as f:
        f.seek(_HEADER.size)
        payload = f.read()
    expected = header.count * dtype.itemsize
    if len(payload) < expected:
        raise FormatError(
            f"{path}: truncated file ({len(payload)} payload bytes, expected {expected})"
        )
    if len(payload) > expected:
        raise FormatError(f"{path}: {len(payload) - expected} trailing bytes")
    arr = np.frombuffer(payload, dtype=dtype, count=header.count)
    values = arr["values"].astype(np.float64)
    labels = arr["label"].astype(np.int64) if header.has_labels else None
    splits = None
    if header.has_splits:
        codes = arr["split"]
        bad = set(np.unique(codes)) - set(_SPLIT_FROM_CODE)
        if bad:
            raise FormatError(f"{path}: unknown split codes {sorted(bad)}")
        splits = [_SPLIT_FROM_CODE[int(c)] for c in codes]
    records = []
    for i in range(header.count):
        try:
            records.append(
                Embedding(
                    values=values[i],
                    label=int(labels[i]) if labels is not None else None,
                    split=splits[i] if splits is not None else None,
                )
            )
        except InvariantError as exc:
            raise FormatError(f"{path}: record {i}: {exc}") from exc
    return records


def write_embeddings_jsonl(path: str | Path, records: list[Embedding] | tuple[Embedding, ...]) -> None:
    """Write records as JSON lines: id, label, split, values per line."""
    records = tuple(records)
    if not records:
        raise InvariantError("refusing to write an empty embedding file")
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            doc = {
                "id": rec.sample_id,
                "label": rec.label,
                "split": rec.split.value if rec.split is not None else None,
                "values": [float(v) for v in rec.values],
            }
            f.write(json.dumps(doc, separators=(",", ":")) + "\n")


def read_embeddings_jsonl(path: str | Path) -> list[Embedding]:
    """Read the JSON-lines embedding format."""
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(doc, dict) or "values" not in doc:
                raise FormatError(f"{path}: line {lineno}: missing 'values'")
            split = doc.get("split")
            try:
                records.append(
                    Embedding(
                        values=np.asarray(doc["values"], dtype=np.float64),
                        sample_id=doc.get("id"),
                        label=doc.get("label"),
                        split=Split(split) if split is not None else None,
                    )
                )
            except (InvariantError, ValueError, TypeError) as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from exc
    if not records:
        raise FormatError(f"{path}: no records")
    return records


def load_embeddings(path: str | Path) -> list[Embedding]:
    """Read either embedding format, dispatching on the leading bytes."""
    with open(path, "rb") as f:
        head = f.read(len(MAGIC))
    if head == MAGIC:
        return read_embeddings(path)
    return read_embeddings_jsonl(path)


def _fmt17(x: float) -> str:
    # 17 significant digits identify a float64 uniquely, so read(write(x)) == x.
    return format(float(x), ".17g")


def write_classifier(path: str | Path, classifier: ClassifierWeights) -> None:
    """Write a classifier as a JSON document with value-exact floats."""
    lines = [
        "{",
        f'  "format_version": {CLASSIFIER_FORMAT_VERSION},',
        f'  "kind": {json.dumps(classifier.kind.value)},',
        f'  "temperature": {_fmt17(classifier.temperature)},',
        f'  "class_names": {json.dumps(list(classifier.class_names))},',
        '  "weights": [',
    ]
    last = classifier.n_classes - 1
    for i, row in enumerate(classifier.weights):
        body = ", ".join(_fmt17(v) for v in row)
        lines.append(f"    [{body}]" + ("," if i < last else ""))
    lines += ["  ]", "}", ""]
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def read_classifier(path: str | Path) -> tuple[ClassifierWeights, list[str]]:
    """Read a classifier document; returns (classifier, warnings).

    A missing temperature falls back to the default (0.01) and is reported
    as a warning rather than an error.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: classifier document must be a JSON object")
    version = doc.get("format_version")
    if version != CLASSIFIER_FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format_version {version!r}")
    try:
        kind = ClassifierKind(doc.get("kind"))
    except ValueError as exc:
        raise FormatError(f"{path}: unknown classifier kind {doc.get('kind')!r}") from exc
    warnings: list[str] = []
    if "temperature" in doc:
        temperature = doc["temperature"]
        if not isinstance(temperature, (int, float)) or isinstance(temperature, bool):
            raise FormatError(f"{path}: temperature must be a number")
        if not temperature > 0:
            raise FormatError(f"{path}: temperature must be positive")
    else:
        temperature = DEFAULT_TEMPERATURE
        warnings.append(f"temperature missing; defaulted to {DEFAULT_TEMPERATURE}")
    names = doc.get("class_names")
    rows = doc.get("weights")
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise FormatError(f"{path}: class_names must be a list of strings")
    if not isinstance(rows, list) or not rows:
        raise FormatError(f"{path}: weights must be a non-empty list of rows")
    width = len(rows[0]) if isinstance(rows[0], list) else -1
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != width:
            raise FormatError(f"{path}: weight row {i} length mismatch")
        for v in row:
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise FormatError(f"{path}: weight row {i} contains a non-number")
    try:
        classifier = ClassifierWeights(
            weights=np.asarray(rows, dtype=np.float64),
            class_names=tuple(names),
            temperature=float(temperature),
            kind=kind,
        )
    except InvariantError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return classifier, warnings


def sniff_format(path: str | Path) -> str:
    """Best-effort identification of any repo file format."""
    with open(path, "rb") as f:
        head = f.read(len(MAGIC))
    if head == MAGIC:
        return "embedding-binary"
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: unrecognized binary content") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict):
        if "weights" in doc and "class_names" in doc:
            return "classifier"
        if "n_base_classes" in doc:
            return "synthetic-spec"
        raise FormatError(f"{path}: unrecognized JSON document")
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    try:
        line_doc = json.loads(first)
    except json.JSONDecodeError:
        line_doc = None
    if isinstance(line_doc, dict) and "values" in line_doc:
        return "embedding-jsonl"
    raise FormatError(f"{path}: unrecognized file format")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic embedding/classifier generator.

    The few-shot classifier's rows stay close to the true class centers on
    base classes (controlled by fs_advantage_base) and are fully random on
    novel classes; the zero-shot classifier mirrors that. Both eval splits
    get disjoint label spaces by construction.
    """

    n_base_classes: int = 8
    n_novel_classes: int = 8
    dim: int = 32
    per_class_count: int = 50
    class_center_scale: float = 1.0
    noise_scale: float = 0.08
    fs_advantage_base: float = 0.9
    zs_advantage_novel: float = 0.9
    temperature: float = 0.25
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_base_classes < 1 or self.n_novel_classes < 1:
            raise InvariantError("class counts must be >= 1")
        if self.n_base_classes + self.n_novel_classes < 2:
            raise InvariantError("need at least two classes overall")
        if self.dim < 2:
            raise InvariantError("dimension must be >= 2")
        if self.per_class_count < 1:
            raise InvariantError("per_class_count must be >= 1")
        if not self.class_center_scale > 0:
            raise InvariantError("class_center_scale must be positive")
        if self.noise_scale < 0:
            raise InvariantError("noise_scale must be non-negative")
        for name in ("fs_advantage_base", "zs_advantage_novel"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvariantError(f"{name}={v} outside [0, 1]")
        if not self.temperature > 0:
            raise InvariantError("temperature must be positive")


@dataclass(frozen=True, eq=False)
class SyntheticBundle:
    base: EvalSet
    novel: EvalSet
    fs_base: ClassifierWeights
    zs_base: ClassifierWeights
    fs_novel: ClassifierWeights
    zs_novel: ClassifierWeights
    spec: SyntheticSpec


def generate_synthetic(spec: SyntheticSpec) -> SyntheticBundle:
    """Deterministically generate eval splits and two competing classifiers.

    Draw order (fixed for reproducibility): class centers, base-split noise
    per class, novel-split noise per class, then the perturbation units for
    the few-shot and the zero-shot classifier. Each classifier row is
    normalize((1-eps)*center + eps*random_unit) with eps = 1-advantage on
    the split it is good at and eps = 1 on the other split.
    """
    rng = np.random.default_rng(spec.seed)
    nb, nn, dim = spec.n_base_classes, spec.n_novel_classes, spec.dim
    centers = unit_rows(rng.standard_normal((nb + nn, dim)))
    base_names = tuple(f"base{i:03d}" for i in range(nb))
    novel_names = tuple(f"novel{i:03d}" for i in range(nn))

    base_set = _sample_split(rng, spec, centers[:nb], base_names, Split.BASE)
    novel_set = _sample_split(rng, spec, centers[nb:], novel_names, Split.NOVEL)

    fs_base_rows = _perturb_rows(rng, centers[:nb], 1.0 - spec.fs_advantage_base)
    fs_novel_rows = _perturb_rows(rng, centers[nb:], 1.0)
    zs_base_rows = _perturb_rows(rng, centers[:nb], 1.0)
    zs_novel_rows = _perturb_rows(rng, centers[nb:], 1.0 - spec.zs_advantage_novel)

    tau = spec.temperature
    return SyntheticBundle(
        base=base_set,
        novel=novel_set,
        fs_base=ClassifierWeights(fs_base_rows, base_names, tau, ClassifierKind.FEW_SHOT),
        zs_base=ClassifierWeights(zs_base_rows, base_names, tau, ClassifierKind.ZERO_SHOT),
        fs_novel=ClassifierWeights(fs_novel_rows, novel_names, tau, ClassifierKind.FEW_SHOT),
        zs_novel=ClassifierWeights(zs_novel_rows, novel_names, tau, ClassifierKind.ZERO_SHOT),
        spec=spec,
    )


def _sample_split(
    rng: np.random.Generator,
    spec: SyntheticSpec,
    centers: np.ndarray,
    names: tuple[str, ...],
    split: Split,
) -> EvalSet:
    samples = []
    for c in range(centers.shape[0]):
        noise = rng.standard_normal((spec.per_class_count, spec.dim))
        raw = spec.class_center_scale * centers[c] + spec.noise_scale * noise
        vectors = unit_rows(raw)
        for j in range(spec.per_class_count):
            samples.append(
                Embedding(
                    values=vectors[j],
                    sample_id=f"{split.value}-c{c:03d}-s{j:04d}",
                    label=c,
                    split=split,
                )
            )
    return EvalSet(samples=tuple(samples), class_names=names)


def _perturb_rows(rng: np.random.Generator, centers: np.ndarray, eps: float) -> np.ndarray:
    units = unit_rows(rng.standard_normal(centers.shape))
    return unit_rows((1.0 - eps) * centers + eps * units)


BUNDLE_FILES = (
    "base.emb",
    "novel.emb",
    "fs-base.classifier.json",
    "zs-base.classifier.json",
    "fs-novel.classifier.json",
    "zs-novel.classifier.json",
    "spec.json",
)


def write_bundle(bundle: SyntheticBundle, out_dir: str | Path) -> list[Path]:
    """Write a synthetic bundle into out_dir; returns the paths in fixed order."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / name for name in BUNDLE_FILES]
    write_embeddings(paths[0], bundle.base.samples)
    write_embeddings(paths[1], bundle.novel.samples)
    write_classifier(paths[2], bundle.fs_base)
    write_classifier(paths[3], bundle.zs_base)
    write_classifier(paths[4], bundle.fs_novel)
    write_classifier(paths[5], bundle.zs_novel)
    paths[6].write_text(
        json.dumps(asdict(bundle.spec), indent=2) + "\n", encoding="utf-8"
    )
    return paths


def read_synthetic_spec(path: str | Path) -> SyntheticSpec:
    """Read a generator spec document; unknown keys are rejected."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: spec document must be a JSON object")
    known = set(SyntheticSpec.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise FormatError(f"{path}: unknown spec fields {sorted(unknown)}")
    try:
        return SyntheticSpec(**doc)
    except (InvariantError, TypeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
