"""Bit-exact on-disk dataset format: text manifests plus raw binary blobs.

Layout under a dataset root::

    root/
      infos.yaml                          # format_version + free metadata
      problem_definition/
        problem_infos.yaml                # task and input/output name lists
        split.csv                         # split_name,sample_id rows
        hidden_partition.csv              # sample_id,subset rows (optional)
      dataset/samples/sample_{9-digit}/
        scalars.csv                       # header row + one value row
        time_series.csv                   # name,time,value rows (optional)
        meshes/mesh_{9-digit}.manifest    # tree structure (YAML)
        meshes/mesh_{9-digit}_{NNN}.blob  # raw little-endian arrays

Arrays are stored as raw little-endian IEEE-754 doubles or signed 64-bit
integers; the manifest records dtype, shape and blob filename, so every
array round-trips losslessly.  Real scalars embedded in text files use the
shortest decimal form that restores the exact double (Python ``repr``).
All text files are UTF-8 with LF line endings.  Node indices are written
0-based; the manifest header declares the base.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .dataset import Dataset, ProblemDefinition, validate_dataset
from .errors import FormatError, InvalidDataset, IoFailure, VersionMismatch
from .sample import Sample
from .tree import (
    Base,
    ElementBlock,
    ElementType,
    FieldArray,
    LinkSpec,
    Location,
    MeshTree,
    TagKind,
    TagSet,
    Zone,
    ZoneType,
    build_tree,
)

FORMAT_VERSION = 1

_DTYPES = {"float64": np.dtype("<f8"), "int64": np.dtype("<i8")}


def format_real(x: float) -> str:
    """Shortest decimal string restoring the exact double."""
    return repr(float(x))


def parse_real(s: str) -> float:
    return float(s)


# ---------------------------------------------------------------------------
# blob codec

class BlobWriter:
    """Writes arrays as sibling blob files with deterministic names."""

    def __init__(self, directory: Path, prefix: str):
        self.directory = directory
        self.prefix = prefix
        self.counter = 0

    def write(self, array: np.ndarray) -> dict:
        if array.dtype == np.float64:
            dtype = "float64"
        elif array.dtype == np.int64:
            dtype = "int64"
        else:
            raise IoFailure(f"unsupported array dtype {array.dtype}")
        name = f"{self.prefix}_{self.counter:03d}.blob"
        self.counter += 1
        data = np.ascontiguousarray(array, dtype=_DTYPES[dtype]).tobytes()
        (self.directory / name).write_bytes(data)
        return {"blob": name, "dtype": dtype, "shape": list(array.shape)}


def read_blob_array(directory: Path, entry: dict, manifest_path: Path) -> np.ndarray:
    """Load one manifest array entry; validates dtype, size and shape."""
    try:
        blob_name = entry["blob"]
        dtype_name = entry["dtype"]
        shape = tuple(int(s) for s in entry["shape"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed array entry: {exc}", path=manifest_path)
    if dtype_name not in _DTYPES:
        raise FormatError(f"unknown dtype '{dtype_name}'", path=manifest_path)
    blob_path = directory / blob_name
    if not blob_path.is_file():
        raise FormatError("referenced blob missing", path=blob_path)
    data = blob_path.read_bytes()
    expected = int(np.prod(shape, dtype=np.int64)) * 8
    if len(data) != expected:
        raise FormatError(
            f"blob holds {len(data)} bytes, expected {expected}",
            path=blob_path, offset=min(len(data), expected))
    array = np.frombuffer(data, dtype=_DTYPES[dtype_name]).reshape(shape)
    array.setflags(write=False)
    return array


# ---------------------------------------------------------------------------
# mesh tree manifests

def write_tree(tree: MeshTree, meshes_dir: Path, prefix: str) -> None:
    """Write one tree as ``{prefix}.manifest`` plus blob files."""
    writer = BlobWriter(meshes_dir, prefix)
    doc = {
        "index_base": 0,
        "time": format_real(tree.time),
        "links": [
            {"target_time": format_real(l.target_time),
             "target_paths": list(l.target_paths)}
            for l in tree.links],
        "bases": [_base_doc(b, writer) for b in tree.bases],
    }
    text = yaml.safe_dump(doc, sort_keys=False, default_flow_style=False,
                          allow_unicode=True)
    _write_text(meshes_dir / f"{prefix}.manifest", text)


def _base_doc(base: Base, writer: BlobWriter) -> dict:
    return {
        "name": base.name,
        "cell_dim": base.cell_dim,
        "phys_dim": base.phys_dim,
        "zones": [_zone_doc(z, writer) for z in base.zones],
    }


def _zone_doc(zone: Zone, writer: BlobWriter) -> dict:
    doc = {
        "name": zone.name,
        "zone_type": zone.zone_type.value,
        "n_vertices": zone.n_vertices,
        "structured_dims": (list(zone.structured_dims)
                            if zone.structured_dims is not None else None),
        "coordinates": (writer.write(zone.coordinates)
                        if zone.coordinates is not None else None),
        "element_blocks": [
            {"element_type": blk.element_type.value,
             "global_range": list(blk.global_range),
             "connectivity": writer.write(blk.connectivity)}
            for blk in zone.element_blocks],
        "fields": [
            {"name": f.name, "location": f.location.value,
             "values": writer.write(f.values)}
            for f in zone.fields],
        "tags": [
            {"name": t.name, "kind": t.kind.value, "ids": writer.write(t.ids)}
            for t in zone.tags],
    }
    return doc


def read_tree(manifest_path: Path) -> MeshTree:
    doc = _load_yaml(manifest_path)
    directory = manifest_path.parent
    try:
        if int(doc.get("index_base", 0)) != 0:
            raise FormatError("only 0-based node indices are supported",
                              path=manifest_path)
        time = parse_real(doc["time"])
        links = [LinkSpec(parse_real(l["target_time"]),
                          tuple(l["target_paths"]))
                 for l in doc.get("links", [])]
        bases = [_base_from_doc(b, directory, manifest_path)
                 for b in doc.get("bases", [])]
    except FormatError:
        raise
    except Exception as exc:
        raise FormatError(f"malformed tree manifest: {exc}", path=manifest_path)
    return build_tree(bases, time, links)


def _base_from_doc(doc: dict, directory: Path, manifest_path: Path) -> Base:
    zones = tuple(_zone_from_doc(z, directory, manifest_path)
                  for z in doc.get("zones", []))
    return Base(doc["name"], int(doc["cell_dim"]), int(doc["phys_dim"]), zones)


def _zone_from_doc(doc: dict, directory: Path, manifest_path: Path) -> Zone:
    coords_entry = doc.get("coordinates")
    coordinates = (read_blob_array(directory, coords_entry, manifest_path)
                   if coords_entry is not None else None)
    blocks = tuple(
        ElementBlock(
            ElementType(b["element_type"]),
            read_blob_array(directory, b["connectivity"], manifest_path),
            tuple(int(x) for x in b["global_range"]))
        for b in doc.get("element_blocks", []))
    fields = tuple(
        FieldArray(f["name"], Location(f["location"]),
                   read_blob_array(directory, f["values"], manifest_path))
        for f in doc.get("fields", []))
    tags = tuple(
        TagSet(t["name"], TagKind(t["kind"]),
               read_blob_array(directory, t["ids"], manifest_path))
        for t in doc.get("tags", []))
    dims = doc.get("structured_dims")
    return Zone(
        name=doc["name"],
        zone_type=ZoneType(doc["zone_type"]),
        n_vertices=int(doc["n_vertices"]),
        coordinates=coordinates,
        element_blocks=blocks,
        fields=fields,
        tags=tags,
        structured_dims=tuple(int(d) for d in dims) if dims is not None else None,
    )


# ---------------------------------------------------------------------------
# samples

def write_sample(sample: Sample, sample_dir: Path) -> None:
    sample_dir.mkdir(parents=True, exist_ok=True)
    names = sorted(sample.scalars)
    if names:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        w.writerow([format_real(sample.scalars[n]) for n in names])
        _write_text(sample_dir / "scalars.csv", buf.getvalue())
    else:
        _write_text(sample_dir / "scalars.csv", "")

    if sample.time_series:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "time", "value"])
        for name in sorted(sample.time_series):
            for t, v in sample.time_series[name]:
                w.writerow([name, format_real(t), format_real(v)])
        _write_text(sample_dir / "time_series.csv", buf.getvalue())

    meshes_dir = sample_dir / "meshes"
    meshes_dir.mkdir(exist_ok=True)
    for index, time in enumerate(sample.get_all_mesh_times()):
        write_tree(sample.trees[time], meshes_dir, f"mesh_{index:09d}")


def read_sample(sample_dir: Path) -> Sample:
    scalars = _read_scalars(sample_dir / "scalars.csv")
    time_series = _read_time_series(sample_dir / "time_series.csv")
    trees = {}
    meshes_dir = sample_dir / "meshes"
    if meshes_dir.is_dir():
        for manifest in sorted(meshes_dir.glob("mesh_*.manifest")):
            tree = read_tree(manifest)
            if tree.time in trees:
                raise FormatError(f"duplicate tree time {tree.time!r}",
                                  path=manifest)
            trees[tree.time] = tree
    return Sample(trees=trees, scalars=scalars, time_series=time_series)


def _read_scalars(path: Path) -> dict[str, float]:
    if not path.is_file():
        return {}
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return {}
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) != 2 or len(rows[0]) != len(rows[1]):
        raise FormatError("scalars table must be a header row plus one value row",
                          path=path)
    try:
        return {name: parse_real(value) for name, value in zip(rows[0], rows[1])}
    except ValueError as exc:
        raise FormatError(f"unparsable scalar value: {exc}", path=path)


def _read_time_series(path: Path) -> dict[str, list[tuple[float, float]]]:
    if not path.is_file():
        return {}
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    if not rows:
        return {}
    if rows[0] != ["name", "time", "value"]:
        raise FormatError("time series header must be name,time,value", path=path)
    series: dict[str, list[tuple[float, float]]] = {}
    try:
        for name, t, v in rows[1:]:
            series.setdefault(name, []).append((parse_real(t), parse_real(v)))
    except ValueError as exc:
        raise FormatError(f"unparsable time series row: {exc}", path=path)
    return series


# ---------------------------------------------------------------------------
# datasets

def save_dataset(dataset: Dataset, root_path) -> None:
    """Write the dataset under a fresh root; arrays round-trip bit-exactly.

    Refuses to write when the root already holds files or when the dataset
    violates its invariants.
    """
    root = Path(root_path)
    if root.exists() and not root.is_dir():
        raise IoFailure(f"destination {root} exists and is not a directory")
    if root.is_dir() and any(root.iterdir()):
        raise IoFailure(f"refusing to write into non-empty directory {root}")
    report = validate_dataset(dataset)
    if not report.empty:
        path, message = report.violations[0]
        raise InvalidDataset(f"{path}: {message} "
                             f"({len(report.violations)} violation(s) total)")
    try:
        root.mkdir(parents=True, exist_ok=True)
        _write_text(root / "infos.yaml", yaml.safe_dump(
            {"format_version": FORMAT_VERSION, "infos": dataset.infos},
            sort_keys=True, allow_unicode=True))

        problem_dir = root / "problem_definition"
        problem_dir.mkdir()
        _write_problem(dataset.problem, problem_dir)

        samples_dir = root / "dataset" / "samples"
        samples_dir.mkdir(parents=True)
        for i in range(dataset.n_samples):
            write_sample(dataset.sample_at(i), samples_dir / f"sample_{i:09d}")
    except OSError as exc:
        raise IoFailure(f"failed writing dataset to {root}: {exc}") from exc


def _write_problem(problem: ProblemDefinition, problem_dir: Path) -> None:
    _write_text(problem_dir / "problem_infos.yaml", yaml.safe_dump(
        {"task": problem.task,
         "in_scalars_names": list(problem.in_scalars_names),
         "out_scalars_names": list(problem.out_scalars_names),
         "in_fields_names": list(problem.in_fields_names),
         "out_fields_names": list(problem.out_fields_names)},
        sort_keys=True, allow_unicode=True))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["split_name", "sample_id"])
    for name in sorted(problem.splits):
        for sid in problem.splits[name]:
            w.writerow([name, sid])
    _write_text(problem_dir / "split.csv", buf.getvalue())

    if problem.hidden_partition is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_id", "subset"])
        for sid in sorted(problem.hidden_partition):
            w.writerow([sid, problem.hidden_partition[sid]])
        _write_text(problem_dir / "hidden_partition.csv", buf.getvalue())


def load_dataset(root_path, lazy: bool = False) -> Dataset:
    """Load a dataset root, eagerly or with per-sample deferred loading.

    Both modes are observationally identical; lazy mode reads a sample's
    files only on first access.
    """
    root = Path(root_path)
    infos_path = root / "infos.yaml"
    if not infos_path.is_file():
        raise FormatError("infos.yaml missing", path=infos_path)
    infos_doc = _load_yaml(infos_path)
    version = infos_doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"format_version {version!r} not supported (expected {FORMAT_VERSION})")
    infos = infos_doc.get("infos", {}) or {}

    problem = _read_problem(root / "problem_definition")

    samples_dir = root / "dataset" / "samples"
    sample_dirs = sorted(samples_dir.glob("sample_*")) if samples_dir.is_dir() else []
    for i, d in enumerate(sample_dirs):
        if d.name != f"sample_{i:09d}":
            raise FormatError(f"sample directories not contiguous: found {d.name}, "
                              f"expected sample_{i:09d}", path=d)

    if lazy:
        loaders = [(lambda d=d: read_sample(d)) for d in sample_dirs]
        return Dataset(loaders=loaders, infos=infos, problem=problem)
    samples = [read_sample(d) for d in sample_dirs]
    return Dataset(samples=samples, infos=infos, problem=problem)


def _read_problem(problem_dir: Path) -> ProblemDefinition:
    infos_path = problem_dir / "problem_infos.yaml"
    if not infos_path.is_file():
        raise FormatError("problem_infos.yaml missing", path=infos_path)
    doc = _load_yaml(infos_path)

    splits: dict[str, list[int]] = {}
    split_path = problem_dir / "split.csv"
    if split_path.is_file():
        rows = list(csv.reader(io.StringIO(split_path.read_text(encoding="utf-8"))))
        if not rows or rows[0] != ["split_name", "sample_id"]:
            raise FormatError("split.csv header must be split_name,sample_id",
                              path=split_path)
        for row in rows[1:]:
            if len(row) != 2:
                raise FormatError(f"malformed split row {row!r}", path=split_path)
            try:
                splits.setdefault(row[0], []).append(int(row[1]))
            except ValueError:
                raise FormatError(f"non-integer sample id {row[1]!r}",
                                  path=split_path)

    hidden: Optional[dict[int, str]] = None
    hidden_path = problem_dir / "hidden_partition.csv"
    if hidden_path.is_file():
        rows = list(csv.reader(io.StringIO(hidden_path.read_text(encoding="utf-8"))))
        if not rows or rows[0] != ["sample_id", "subset"]:
            raise FormatError("hidden_partition.csv header must be sample_id,subset",
                              path=hidden_path)
        hidden = {}
        for row in rows[1:]:
            if len(row) != 2:
                raise FormatError(f"malformed partition row {row!r}", path=hidden_path)
            hidden[int(row[0])] = row[1]

    return ProblemDefinition(
        task=doc.get("task", "Regression"),
        in_scalars_names=list(doc.get("in_scalars_names", [])),
        out_scalars_names=list(doc.get("out_scalars_names", [])),
        in_fields_names=list(doc.get("in_fields_names", [])),
        out_fields_names=list(doc.get("out_fields_names", [])),
        splits=splits,
        hidden_partition=hidden,
    )


# ---------------------------------------------------------------------------
# participant export

def participant_export(dataset: Dataset) -> Dataset:
    """Strip test-split outputs and the hidden partition for publication.

    Test samples keep their meshes, inputs and input fields; output fields
    and output scalars are removed, mirroring benchmarks whose test outputs
    stay hidden.
    """
    problem = dataset.problem
    test_ids = set(problem.splits.get("test", []))
    out_fields = set(problem.out_fields_names)
    out_scalars = set(problem.out_scalars_names)

    samples = []
    for i in range(dataset.n_samples):
        sample = dataset.sample_at(i)
        if i not in test_ids:
            samples.append(sample)
            continue
        scalars = {k: v for k, v in sample.scalars.items() if k not in out_scalars}
        trees = {}
        for t, tree in sample.trees.items():
            bases = []
            for b in tree.bases:
                zones = tuple(
                    Zone(z.name, z.zone_type, z.n_vertices, z.coordinates,
                         z.element_blocks,
                         tuple(f for f in z.fields if f.name not in out_fields),
                         z.tags, z.structured_dims)
                    for z in b.zones)
                bases.append(Base(b.name, b.cell_dim, b.phys_dim, zones))
            trees[t] = build_tree(bases, tree.time, tree.links)
        samples.append(Sample(trees=trees, scalars=scalars,
                              time_series=sample.time_series))

    stripped = ProblemDefinition(
        task=problem.task,
        in_scalars_names=list(problem.in_scalars_names),
        out_scalars_names=list(problem.out_scalars_names),
        in_fields_names=list(problem.in_fields_names),
        out_fields_names=list(problem.out_fields_names),
        splits={k: list(v) for k, v in problem.splits.items()},
        hidden_partition=None,
    )
    return Dataset(samples=samples, infos=dict(dataset.infos), problem=stripped)


# ---------------------------------------------------------------------------
# shared low-level helpers

def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_yaml(path: Path):
    if not path.is_file():
        raise FormatError("file missing", path=path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise FormatError(f"invalid YAML: {exc}", path=path)
