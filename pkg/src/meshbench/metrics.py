"""Benchmark scoring: per-output relative RMSE and its aggregation.

Field RRMSE over a test set of n samples::

    sqrt( (1/n) * sum_i  ( (1/N_i) * ||ref_i - pred_i||_2^2 / ||ref_i||_inf^2 ) )

where N_i is the entity count of sample i at the field's location and the
sup norm is the maximum *absolute* component (so sign conventions cannot
zero the denominator).  Scalar RRMSE::

    sqrt( (1/n) * sum_i  |ref_i - pred_i|^2 / |ref_i|^2 )

The submission score ``total_error`` is the unweighted mean of all
per-output RRMSEs.  A reference whose norm falls below 1e-30 is a hard
error, not a skip: dropping samples would silently alter n and make
scores incomparable across submissions.

All reductions run in sorted-id order with numpy's pairwise summation, so
scores are bitwise reproducible regardless of thread count.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import yaml

from .dataset import PRIVATE, PUBLIC, Dataset, ProblemDefinition
from .errors import (
    AmbiguousQuery,
    DegenerateReference,
    FormatError,
    MissingOutput,
    NoPartition,
    NoSuchSplit,
    NotFound,
    ShapeMismatch,
)
from .sample import Sample
from .storage import (
    BlobWriter,
    FORMAT_VERSION,
    format_real,
    parse_real,
    read_blob_array,
    _load_yaml,
    _write_text,
)

DEGENERATE_NORM = 1e-30


@dataclass
class SamplePrediction:
    """Predicted outputs for one sample."""

    fields: dict[str, np.ndarray] = field(default_factory=dict)
    scalars: dict[str, float] = field(default_factory=dict)


@dataclass
class PredictionBundle:
    """Per-sample predicted outputs keyed by sample id."""

    predictions: dict[int, SamplePrediction] = field(default_factory=dict)

    def prediction_for(self, sample_id: int) -> SamplePrediction:
        return self.predictions.setdefault(sample_id, SamplePrediction())

    def set_field(self, sample_id: int, name: str, values) -> None:
        self.prediction_for(sample_id).fields[name] = \
            np.ascontiguousarray(values, dtype=np.float64)

    def set_scalar(self, sample_id: int, name: str, value: float) -> None:
        self.prediction_for(sample_id).scalars[name] = float(value)


@dataclass
class ScoreReport:
    """Per-output RRMSEs and their unweighted mean."""

    field_rrmse: dict[str, float] = field(default_factory=dict)
    scalar_rrmse: dict[str, float] = field(default_factory=dict)
    total_error: float = 0.0

    def as_dict(self) -> dict:
        return {"fields": dict(self.field_rrmse),
                "scalars": dict(self.scalar_rrmse),
                "total_error": self.total_error}

    def table(self) -> str:
        """Stable-ordered text table, one row per output plus the total."""
        rows = [(f"field {name}", self.field_rrmse[name])
                for name in sorted(self.field_rrmse)]
        rows += [(f"scalar {name}", self.scalar_rrmse[name])
                 for name in sorted(self.scalar_rrmse)]
        rows.append(("total_error", self.total_error))
        width = max(len(label) for label, _ in rows)
        return "\n".join(f"{label:<{width}}  {value:.6e}"
                         for label, value in rows) + "\n"


# ---------------------------------------------------------------------------
# core formulas

def _paired(refs, preds):
    """Normalize the two per-sample collections into aligned pairs."""
    if isinstance(refs, Mapping) != isinstance(preds, Mapping):
        raise ShapeMismatch("refs and preds must both be mappings or both sequences")
    if isinstance(refs, Mapping):
        if set(refs) != set(preds):
            raise ShapeMismatch(
                f"sample sets differ: {sorted(set(refs) ^ set(preds))}")
        keys = sorted(refs)
        return [(refs[k], preds[k]) for k in keys]
    refs = list(refs)
    preds = list(preds)
    if len(refs) != len(preds):
        raise ShapeMismatch(f"{len(refs)} references vs {len(preds)} predictions")
    return list(zip(refs, preds))


def rrmse_field(refs, preds) -> float:
    """Field RRMSE; refs/preds are per-sample arrays (mapping or sequence)."""
    pairs = _paired(refs, preds)
    if not pairs:
        raise ShapeMismatch("empty sample set")
    terms = np.empty(len(pairs))
    for i, (ref, pred) in enumerate(pairs):
        ref = np.asarray(ref, dtype=np.float64)
        pred = np.asarray(pred, dtype=np.float64)
        if ref.shape != pred.shape or ref.ndim != 1:
            raise ShapeMismatch(
                f"sample {i}: reference shape {ref.shape} vs prediction "
                f"shape {pred.shape}")
        sup = np.max(np.abs(ref)) if ref.size else 0.0
        if sup < DEGENERATE_NORM:
            raise DegenerateReference(
                f"sample {i}: reference sup norm {sup} below {DEGENERATE_NORM}")
        diff = ref - pred
        terms[i] = (diff @ diff) / ref.size / (sup * sup)
    return float(np.sqrt(np.sum(terms) / len(pairs)))


def rrmse_scalar(refs, preds) -> float:
    """Scalar RRMSE; refs/preds are per-sample reals (mapping or sequence)."""
    pairs = _paired(refs, preds)
    if not pairs:
        raise ShapeMismatch("empty sample set")
    terms = np.empty(len(pairs))
    for i, (ref, pred) in enumerate(pairs):
        ref = float(ref)
        pred = float(pred)
        if abs(ref) < DEGENERATE_NORM:
            raise DegenerateReference(
                f"sample {i}: |reference| {abs(ref)} below {DEGENERATE_NORM}")
        terms[i] = (ref - pred) ** 2 / ref ** 2
    return float(np.sqrt(np.sum(terms) / len(pairs)))


# ---------------------------------------------------------------------------
# dataset-level scoring

def find_reference_field(sample: Sample, name: str) -> np.ndarray:
    """Locate the unique field named ``name`` in the sample's default tree.

    Scans every base/zone/location; exactly one match is required, which
    also pins the entity count used as N in the field RRMSE.
    """
    tree = sample.get_mesh(apply_links=True)
    matches = []
    for b in tree.bases:
        for z in b.zones:
            for f in z.fields:
                if f.name == name:
                    matches.append((b.name, z.name, f))
    if not matches:
        raise NotFound(f"reference sample defines no field '{name}'")
    if len(matches) > 1:
        where = [(b, z) for b, z, _ in matches]
        raise AmbiguousQuery(f"field '{name}' appears in several zones: {where}")
    return matches[0][2].values


def total_error(problem: ProblemDefinition, reference: Dataset,
                bundle: PredictionBundle,
                ids: Optional[Sequence[int]] = None) -> ScoreReport:
    """Score a bundle against reference outputs on the test split.

    ``ids`` restricts scoring to a subset (used for hidden-split scoring);
    default is the full test split.
    """
    if ids is None:
        if "test" not in problem.splits:
            raise NoSuchSplit("problem defines no 'test' split")
        ids = problem.splits["test"]
    ids = sorted(int(i) for i in ids)
    if not ids:
        raise ShapeMismatch("empty id set to score")

    report = ScoreReport()
    for name in sorted(problem.out_fields_names):
        refs: dict[int, np.ndarray] = {}
        preds: dict[int, np.ndarray] = {}
        for sid in ids:
            refs[sid] = find_reference_field(reference.sample_at(sid), name)
            entry = bundle.predictions.get(sid)
            if entry is None or name not in entry.fields:
                raise MissingOutput(
                    f"bundle lacks field '{name}' for sample {sid}")
            preds[sid] = entry.fields[name]
        report.field_rrmse[name] = rrmse_field(refs, preds)

    for name in sorted(problem.out_scalars_names):
        refs_s: dict[int, float] = {}
        preds_s: dict[int, float] = {}
        for sid in ids:
            refs_s[sid] = reference.sample_at(sid).get_scalar(name)
            entry = bundle.predictions.get(sid)
            if entry is None or name not in entry.scalars:
                raise MissingOutput(
                    f"bundle lacks scalar '{name}' for sample {sid}")
            preds_s[sid] = entry.scalars[name]
        report.scalar_rrmse[name] = rrmse_scalar(refs_s, preds_s)

    values = [report.field_rrmse[n] for n in sorted(report.field_rrmse)]
    values += [report.scalar_rrmse[n] for n in sorted(report.scalar_rrmse)]
    if not values:
        raise MissingOutput("problem declares no outputs to score")
    report.total_error = float(np.mean(values))
    return report


def score_hidden(problem: ProblemDefinition, reference: Dataset,
                 bundle: PredictionBundle) -> tuple[ScoreReport, ScoreReport]:
    """Score the public and private halves of the hidden test partition."""
    part = problem.hidden_partition
    if part is None:
        raise NoPartition("problem has no hidden partition")
    test_ids = set(problem.splits.get("test", []))
    if set(part) != test_ids:
        raise NoPartition("hidden partition does not cover exactly the test split")
    public_ids = sorted(i for i, c in part.items() if c == PUBLIC)
    private_ids = sorted(i for i, c in part.items() if c == PRIVATE)
    if not public_ids or not private_ids:
        raise NoPartition("both Public and Private subsets must be non-empty")
    return (total_error(problem, reference, bundle, ids=public_ids),
            total_error(problem, reference, bundle, ids=private_ids))


# ---------------------------------------------------------------------------
# bundle persistence (same manifest+blob encoding as the dataset store)

def save_bundle(bundle: PredictionBundle, root_path) -> None:
    root = Path(root_path)
    root.mkdir(parents=True, exist_ok=True)
    docs = []
    for sid in sorted(bundle.predictions):
        entry = bundle.predictions[sid]
        writer = BlobWriter(root, f"pred_{sid:09d}")
        docs.append({
            "id": sid,
            "scalars": {name: format_real(entry.scalars[name])
                        for name in sorted(entry.scalars)},
            "fields": {name: writer.write(entry.fields[name])
                       for name in sorted(entry.fields)},
        })
    text = yaml.safe_dump({"format_version": FORMAT_VERSION, "samples": docs},
                          sort_keys=True, allow_unicode=True)
    _write_text(root / "bundle.manifest", text)


def load_bundle(root_path) -> PredictionBundle:
    root = Path(root_path)
    manifest = root / "bundle.manifest"
    doc = _load_yaml(manifest)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"bundle format_version {version!r} unsupported",
                          path=manifest)
    bundle = PredictionBundle()
    for entry in doc.get("samples", []):
        try:
            sid = int(entry["id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed bundle entry: {exc}", path=manifest)
        for name, value in (entry.get("scalars") or {}).items():
            bundle.set_scalar(sid, name, parse_real(value))
        for name, array_entry in (entry.get("fields") or {}).items():
            bundle.prediction_for(sid).fields[name] = \
                read_blob_array(root, array_entry, manifest)
    return bundle


def hidden_table(public: ScoreReport, private: ScoreReport) -> str:
    buf = io.StringIO()
    buf.write("== public subset ==\n")
    buf.write(public.table())
    buf.write("== private subset ==\n")
    buf.write(private.table())
    return buf.getvalue()


def report_json(report: ScoreReport, public: Optional[ScoreReport] = None,
                private: Optional[ScoreReport] = None) -> str:
    doc = report.as_dict()
    if public is not None and private is not None:
        doc["public"] = public.as_dict()
        doc["private"] = private.as_dict()
        doc["public_total"] = public.total_error
        doc["private_total"] = private.total_error
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
