"""Dataset container: ordered samples, problem definition, named splits.

Samples may be supplied in memory or through per-sample loader callables
(lazy mode); both behave identically to callers.  The lazy cache guarantees
each sample is materialized exactly once even under concurrent first access.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .errors import IdOutOfRange, NoSuchSplit
from .sample import Sample, samples_equal
from .tree import ValidationReport, validate_tree

_NESTED_SPLIT = re.compile(r"^train_(\d+)$")

PUBLIC = "Public"
PRIVATE = "Private"

#: infos key declaring that every sample shares node count and connectivity
CONSTANT_MESH_KEY = "nodes_and_connectivity_constant"


@dataclass
class ProblemDefinition:
    """Learning task attached to a dataset: names, splits, hidden partition."""

    task: str = "Regression"
    in_scalars_names: list[str] = field(default_factory=list)
    out_scalars_names: list[str] = field(default_factory=list)
    in_fields_names: list[str] = field(default_factory=list)
    out_fields_names: list[str] = field(default_factory=list)
    splits: dict[str, list[int]] = field(default_factory=dict)
    hidden_partition: Optional[dict[int, str]] = None

    def __post_init__(self):
        self.splits = {name: sorted(int(i) for i in ids)
                       for name, ids in self.splits.items()}
        if self.hidden_partition is not None:
            self.hidden_partition = {int(k): str(v)
                                     for k, v in self.hidden_partition.items()}


class Dataset:
    """Ordered, lazily-loadable collection of samples plus metadata."""

    def __init__(self, samples: Optional[Sequence[Sample]] = None,
                 infos: Optional[dict] = None,
                 problem: Optional[ProblemDefinition] = None,
                 loaders: Optional[Sequence[Callable[[], Sample]]] = None):
        if (samples is None) == (loaders is None):
            raise ValueError("pass exactly one of samples or loaders")
        if samples is not None:
            self._samples: list[Optional[Sample]] = list(samples)
            self._loaders: Optional[list[Callable[[], Sample]]] = None
        else:
            self._samples = [None] * len(loaders)
            self._loaders = list(loaders)
        self.infos: dict = dict(infos or {})
        self.problem: ProblemDefinition = problem or ProblemDefinition()
        # one lock per slot: distinct samples load concurrently, while each
        # loader still runs at most once (single-population guarantee)
        self._slot_locks = [threading.Lock() for _ in self._samples]

    def __len__(self) -> int:
        return len(self._samples)

    @property
    def n_samples(self) -> int:
        return len(self._samples)

    def sample_at(self, sample_id: int) -> Sample:
        if not 0 <= sample_id < len(self._samples):
            raise IdOutOfRange(
                f"sample id {sample_id} outside [0, {len(self._samples)})")
        found = self._samples[sample_id]
        if found is not None:
            return found
        with self._slot_locks[sample_id]:
            found = self._samples[sample_id]
            if found is None:
                found = self._loaders[sample_id]()
                self._samples[sample_id] = found
        return found

    def __getitem__(self, sample_id: int) -> Sample:
        return self.sample_at(sample_id)

    def get_split(self, name: str) -> list[int]:
        try:
            return list(self.problem.splits[name])
        except KeyError:
            raise NoSuchSplit(
                f"no split '{name}'; available: {sorted(self.problem.splits)}"
            ) from None

    def iterate(self, ids: Iterable[int]) -> Iterator[Sample]:
        """Yield samples in the given id order; lazy loads happen per yield."""
        for i in ids:
            yield self.sample_at(i)


def validate_dataset(dataset: Dataset) -> ValidationReport:
    """Aggregate per-sample tree reports plus problem-level checks."""
    report = ValidationReport()
    problem = dataset.problem
    n = dataset.n_samples

    for i in range(n):
        sample = dataset.sample_at(i)
        for t, tree in sample.trees.items():
            sub = validate_tree(tree)
            report.extend_prefixed(f"sample_{i:09d}/mesh@{t!r}", sub)

    for name, ids in problem.splits.items():
        for sid in ids:
            if not 0 <= sid < n:
                report.add(f"splits/{name}",
                           f"sample id {sid} outside [0, {n})")

    nested = sorted(
        ((int(m.group(1)), name) for name, m in
         ((nm, _NESTED_SPLIT.match(nm)) for nm in problem.splits) if m))
    for k, name in nested:
        if len(problem.splits[name]) != k:
            report.add(f"splits/{name}",
                       f"declared size {k} but holds {len(problem.splits[name])} ids")
    for (k1, n1), (k2, n2) in zip(nested, nested[1:]):
        if not set(problem.splits[n1]) <= set(problem.splits[n2]):
            report.add(f"splits/{n1}", f"not a subset of {n2}")

    if problem.hidden_partition is not None:
        test_ids = set(problem.splits.get("test", []))
        part = problem.hidden_partition
        if set(part) != test_ids:
            report.add("hidden_partition",
                       "partition ids do not cover exactly the test split")
        classes = set(part.values())
        if not classes <= {PUBLIC, PRIVATE}:
            report.add("hidden_partition",
                       f"unknown subset labels: {sorted(classes - {PUBLIC, PRIVATE})}")
        if part and (PUBLIC not in classes or PRIVATE not in classes):
            report.add("hidden_partition",
                       "both Public and Private subsets must be non-empty")

    _check_name_coverage(dataset, report)
    if dataset.infos.get(CONSTANT_MESH_KEY):
        _check_constant_mesh(dataset, report)
    return report


def _iter_field_names(sample: Sample) -> set[str]:
    names = set()
    for tree in sample.trees.values():
        for b in tree.bases:
            for z in b.zones:
                names.update(f.name for f in z.fields)
    return names


def _check_name_coverage(dataset: Dataset, report: ValidationReport) -> None:
    problem = dataset.problem
    n = dataset.n_samples
    test_ids = set(problem.splits.get("test", []))

    seen_fields: set[str] = set()
    for i in range(n):
        sample = dataset.sample_at(i)
        seen_fields |= _iter_field_names(sample)
        scalar_names = set(sample.scalars)
        for name in problem.in_scalars_names:
            if name not in scalar_names:
                report.add(f"sample_{i:09d}/scalars",
                           f"input scalar '{name}' missing")
        if i not in test_ids:
            # outputs are only promised outside the test split
            for name in problem.out_scalars_names:
                if name not in scalar_names:
                    report.add(f"sample_{i:09d}/scalars",
                               f"output scalar '{name}' missing")

    for name in problem.in_fields_names + problem.out_fields_names:
        if name not in seen_fields:
            report.add("problem", f"field '{name}' appears in no sample")


def _check_constant_mesh(dataset: Dataset, report: ValidationReport) -> None:
    reference = None
    for i in range(dataset.n_samples):
        sample = dataset.sample_at(i)
        times = sample.get_all_mesh_times()
        if not times:
            continue
        tree = sample.get_mesh(time=times[0], apply_links=True)
        signature = [
            (b.name, z.name, z.n_vertices,
             tuple((blk.element_type, blk.connectivity.tobytes())
                   for blk in z.element_blocks))
            for b in tree.bases for z in b.zones]
        if reference is None:
            reference = (i, signature)
        elif signature != reference[1]:
            report.add(f"sample_{i:09d}",
                       f"declared constant mesh but differs from sample "
                       f"{reference[0]} (node count or connectivity)")


def datasets_equal(a: Dataset, b: Dataset) -> bool:
    """Structural equality including bit-exact arrays in every sample."""
    if a.n_samples != b.n_samples or a.infos != b.infos:
        return False
    if a.problem != b.problem:
        return False
    return all(samples_equal(a.sample_at(i), b.sample_at(i))
               for i in range(a.n_samples))
