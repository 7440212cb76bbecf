"""Morphing + interpolation + POD + GP surrogate pipeline.

Training: every sample's triangulated 2-D zone is embedded onto the unit
disk (or used as-is when morphing is off and all meshes share a node
count), its coordinate fields are interpolated onto a common mesh (the
first training sample's, morphed), and snapshot POD over those transferred
coordinate fields yields a compact shape embedding.  GP inputs concatenate
shape coefficients with the problem's input scalars.  Each output field is
transferred to the common mesh and POD-compressed; one GP is trained per
retained coefficient, plus one GP per output scalar.

Prediction embeds the query sample the same way, GP-predicts coefficients,
reconstructs fields on the common mesh and evaluates them back at the
sample's own (morphed) vertex positions.

Everything is deterministic for a fixed config, whatever the thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .dataset import Dataset, ProblemDefinition
from .errors import ConfigInvalid, FormatError, NoSuchSplit, ShapeMismatch
from .gp import DEFAULT_JITTER, GpModel, Kernel, gp_fit, gp_predict
from .metrics import find_reference_field
from .morphing import build_surface_mesh, tutte_embed
from .parallel import parallel_map
from .pod import (
    PodBasis,
    mean_only_basis,
    numerical_rank,
    pod_fit,
    pod_project,
    pod_reconstruct,
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
from .transfer import apply_transfer, build_transfer
from .tree import ElementType, ZoneType

#: snap tolerance used for pipeline transfers; discrete morphed boundaries
#: are inscribed polygons of the unit circle, so nodes of one mesh fall
#: outside another by O(h^2) and need a generous snap band
PIPELINE_TRANSFER_TOL = 0.05

_KERNEL_ALIASES = {"matern52": "Matern52", "rbf": "RBF"}
_BOOL_WORDS = {"on": True, "true": True, "yes": True, "1": True,
               "off": False, "false": False, "no": False, "0": False}


@dataclass(frozen=True)
class MmgpConfig:
    morphing: bool = True
    shape_modes: int = 8
    field_modes: int = 8
    kernel: str = "Matern52"
    train_split: str = "train"
    jitter: float = DEFAULT_JITTER
    transfer_tol: float = PIPELINE_TRANSFER_TOL

    def validate(self) -> None:
        if self.shape_modes < 1 or self.field_modes < 1:
            raise ConfigInvalid("mode counts must be at least 1")
        if self.kernel not in ("Matern52", "RBF"):
            raise ConfigInvalid(f"unknown kernel '{self.kernel}'")
        if self.jitter <= 0 or self.transfer_tol <= 0:
            raise ConfigInvalid("jitter and transfer_tol must be positive")


def parse_config_text(text: str) -> MmgpConfig:
    """Parse ``key = value`` lines ('#' starts a comment)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()

    config = MmgpConfig()
    for key, value in values.items():
        try:
            if key == "morphing":
                word = value.lower()
                if word not in _BOOL_WORDS:
                    raise ValueError(f"not a boolean: {value!r}")
                config = replace(config, morphing=_BOOL_WORDS[word])
            elif key in ("shape_modes", "field_modes"):
                config = replace(config, **{key: int(value)})
            elif key == "kernel":
                config = replace(
                    config, kernel=_KERNEL_ALIASES.get(value.lower(), value))
            elif key == "train_split":
                config = replace(config, train_split=value)
            elif key in ("jitter", "transfer_tol"):
                config = replace(config, **{key: float(value)})
            else:
                raise ConfigInvalid(f"unknown config key '{key}'")
        except (ValueError, TypeError) as exc:
            raise ConfigInvalid(f"bad value for '{key}': {exc}") from None
    config.validate()
    return config


def load_config(path) -> MmgpConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# geometry extraction

def extract_triangle_geometry(sample: Sample) -> tuple[np.ndarray, np.ndarray]:
    """The sample's unique triangulated 2-D zone as (coords, triangles)."""
    tree = sample.get_mesh(apply_links=True)
    found = []
    for b in tree.bases:
        if b.cell_dim != 2:
            continue
        for z in b.zones:
            if z.zone_type is not ZoneType.Unstructured:
                continue
            if z.element_blocks and all(
                    blk.element_type is ElementType.TRI_3
                    for blk in z.element_blocks):
                found.append((b, z))
    if len(found) != 1:
        raise ConfigInvalid(
            f"pipeline needs exactly one all-triangle 2-D zone, found "
            f"{len(found)}")
    _, zone = found[0]
    blocks = sorted(zone.element_blocks, key=lambda blk: blk.global_range[0])
    triangles = np.vstack([blk.connectivity for blk in blocks])
    return zone.coordinates, triangles


def _output_field(sample: Sample, name: str, n_vertices: int) -> np.ndarray:
    values = find_reference_field(sample, name)
    if values.shape[0] != n_vertices:
        raise ConfigInvalid(
            f"output field '{name}' has {values.shape[0]} entries; only "
            f"vertex fields on the triangulated zone ({n_vertices} nodes) "
            f"are supported")
    return values


# ---------------------------------------------------------------------------
# regressors (GP with a constant-target fallback)

@dataclass(frozen=True)
class Regressor:
    """GP regressor, or a constant when the targets carry no variance."""

    gp: Optional[GpModel] = None
    constant: Optional[float] = None

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.gp is not None:
            return gp_predict(self.gp, x)[0]
        return np.full(len(np.atleast_2d(x)), self.constant)

    @property
    def is_gp(self) -> bool:
        return self.gp is not None


def _fit_regressor(x: np.ndarray, y: np.ndarray, kind: str,
                   jitter: float) -> Regressor:
    if np.ptp(y) == 0.0:
        return Regressor(constant=float(y[0]))
    return Regressor(gp=gp_fit(x, y, kind=kind, jitter=jitter))


def _fit_basis_clamped(snapshots: np.ndarray, k: int) -> PodBasis:
    """POD with the mode count clamped to the numerical rank (0 allowed)."""
    k_eff = min(k, numerical_rank(snapshots))
    if k_eff == 0:
        return mean_only_basis(snapshots)
    return pod_fit(snapshots, k_eff)


# ---------------------------------------------------------------------------
# model

@dataclass
class MmgpModel:
    config: MmgpConfig
    in_scalars: list[str]
    out_fields: list[str]
    out_scalars: list[str]
    common_nodes: np.ndarray        # (N, 2)
    common_triangles: np.ndarray    # (M, 3)
    shape_basis: PodBasis           # over stacked (x, y) coordinate fields
    field_bases: dict[str, PodBasis] = field(default_factory=dict)
    field_regressors: dict[str, list[Regressor]] = field(default_factory=dict)
    scalar_regressors: dict[str, Regressor] = field(default_factory=dict)

    @property
    def n_common_vertices(self) -> int:
        return self.common_nodes.shape[0]

    @property
    def n_regressors(self) -> int:
        return (sum(len(v) for v in self.field_regressors.values())
                + len(self.scalar_regressors))

    @property
    def gp_input_dim(self) -> int:
        return self.shape_basis.n_modes + len(self.in_scalars)


def _preprocess_sample(coords, triangles, morphing, common_nodes, tol):
    """Morph, locate, and return (shape_vector, transfer_op or None)."""
    if not morphing:
        return np.concatenate([coords[:, 0], coords[:, 1]]), None
    surface = build_surface_mesh(coords, triangles)
    morphed = tutte_embed(surface)
    op = build_transfer(morphed.positions, surface.triangles, common_nodes,
                        tol=tol)
    shape_vec = np.concatenate([apply_transfer(op, coords[:, 0]),
                                apply_transfer(op, coords[:, 1])])
    return shape_vec, op


def mmgp_fit(dataset: Dataset, problem: ProblemDefinition, config: MmgpConfig,
             threads: int = 1) -> MmgpModel:
    """Train the full pipeline on the configured training split."""
    config.validate()
    if config.train_split not in problem.splits:
        raise NoSuchSplit(f"no split '{config.train_split}'")
    ids = problem.splits[config.train_split]
    if not ids:
        raise ConfigInvalid("training split is empty")
    samples = [dataset.sample_at(i) for i in ids]
    geometries = parallel_map(extract_triangle_geometry, samples,
                              threads=threads)

    if config.morphing:
        # the common mesh is the first training sample morphed to the disk
        first_surface = build_surface_mesh(*geometries[0])
        first_morphed = tutte_embed(first_surface)
        common_nodes = first_morphed.positions
        common_triangles = first_surface.triangles
    else:
        counts = {g[0].shape[0] for g in geometries}
        if len(counts) != 1:
            raise ShapeMismatch(
                f"morphing is off but vertex counts differ: {sorted(counts)}")
        common_nodes, common_triangles = geometries[0]

    pre = parallel_map(
        lambda g: _preprocess_sample(g[0], g[1], config.morphing,
                                     common_nodes, config.transfer_tol),
        geometries, threads=threads)
    shape_snapshots = np.stack([vec for vec, _ in pre])
    ops = [op for _, op in pre]

    shape_basis = _fit_basis_clamped(shape_snapshots, config.shape_modes)
    shape_coeffs = np.stack([pod_project(shape_basis, vec)
                             for vec, _ in pre])
    scalar_inputs = np.array(
        [[s.get_scalar(name) for name in problem.in_scalars_names]
         for s in samples])
    x_train = np.hstack([shape_coeffs, scalar_inputs])

    model = MmgpModel(
        config=config,
        in_scalars=list(problem.in_scalars_names),
        out_fields=sorted(problem.out_fields_names),
        out_scalars=sorted(problem.out_scalars_names),
        common_nodes=common_nodes,
        common_triangles=common_triangles,
        shape_basis=shape_basis,
    )

    gp_tasks: list[tuple[str, object, np.ndarray]] = []
    for name in model.out_fields:
        snapshots = np.stack([
            (apply_transfer(ops[i], _output_field(samples[i], name,
                                                  geometries[i][0].shape[0]))
             if ops[i] is not None else
             _output_field(samples[i], name, geometries[i][0].shape[0]))
            for i in range(len(samples))])
        basis = _fit_basis_clamped(snapshots, config.field_modes)
        model.field_bases[name] = basis
        coeffs = np.stack([pod_project(basis, snapshots[i])
                           for i in range(len(samples))])
        for j in range(basis.n_modes):
            gp_tasks.append(("field", (name, j), coeffs[:, j]))

    for name in model.out_scalars:
        targets = np.array([s.get_scalar(name) for s in samples])
        gp_tasks.append(("scalar", name, targets))

    fitted = parallel_map(
        lambda task: _fit_regressor(x_train, task[2], config.kernel,
                                    config.jitter),
        gp_tasks, threads=threads)

    for (kind, key, _), regressor in zip(gp_tasks, fitted):
        if kind == "field":
            name, j = key
            model.field_regressors.setdefault(name, [])
            assert len(model.field_regressors[name]) == j
            model.field_regressors[name].append(regressor)
        else:
            model.scalar_regressors[key] = regressor
    return model


def mmgp_predict(model: MmgpModel, sample: Sample
                 ) -> tuple[dict[str, float], dict[str, np.ndarray]]:
    """Predict output scalars and fields on the sample's own mesh."""
    coords, triangles = extract_triangle_geometry(sample)
    tol = model.config.transfer_tol

    if model.config.morphing:
        surface = build_surface_mesh(coords, triangles)
        morphed = tutte_embed(surface)
        op_fwd = build_transfer(morphed.positions, surface.triangles,
                                model.common_nodes, tol=tol)
        shape_vec = np.concatenate([apply_transfer(op_fwd, coords[:, 0]),
                                    apply_transfer(op_fwd, coords[:, 1])])
    else:
        if coords.shape[0] != model.n_common_vertices:
            raise ShapeMismatch(
                f"model was trained without morphing on "
                f"{model.n_common_vertices}-node meshes; sample has "
                f"{coords.shape[0]} nodes")
        shape_vec = np.concatenate([coords[:, 0], coords[:, 1]])

    scalars_in = [sample.get_scalar(name) for name in model.in_scalars]
    x = np.concatenate([pod_project(model.shape_basis, shape_vec),
                        np.asarray(scalars_in)])[None, :]

    common_fields = {}
    for name in model.out_fields:
        coeffs = np.array([reg.predict(x)[0]
                           for reg in model.field_regressors[name]])
        common_fields[name] = pod_reconstruct(model.field_bases[name], coeffs)

    if model.config.morphing:
        op_back = build_transfer(model.common_nodes, model.common_triangles,
                                 morphed.positions, tol=tol)
        fields_out = {name: apply_transfer(op_back, values)
                      for name, values in common_fields.items()}
    else:
        fields_out = common_fields

    scalars_out = {name: float(model.scalar_regressors[name].predict(x)[0])
                   for name in model.out_scalars}
    return scalars_out, fields_out


# ---------------------------------------------------------------------------
# persistence (same manifest + blob encoding as the dataset store)

def save_model(model: MmgpModel, root_path) -> None:
    root = Path(root_path)
    root.mkdir(parents=True, exist_ok=True)
    writer = BlobWriter(root, "model")

    def basis_doc(basis: PodBasis) -> dict:
        return {"mean": writer.write(basis.mean),
                "modes": writer.write(np.ascontiguousarray(basis.modes)),
                "singular_values": writer.write(basis.singular_values)}

    def regressor_doc(reg: Regressor) -> dict:
        if not reg.is_gp:
            return {"kind": "constant", "value": format_real(reg.constant)}
        gp = reg.gp
        return {
            "kind": "gp",
            "kernel": gp.kernel.kind,
            "variance": format_real(gp.kernel.variance),
            "lengthscales": writer.write(gp.kernel.lengthscales),
            "x_train": writer.write(gp.x_train),
            "alpha": writer.write(gp.alpha),
            "chol_lower": writer.write(gp.chol_lower),
            "x_mean": writer.write(gp.x_mean),
            "x_std": writer.write(gp.x_std),
            "y_mean": format_real(gp.y_mean),
            "y_std": format_real(gp.y_std),
            "jitter": format_real(gp.jitter),
        }

    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "mmgp-model",
        "config": {
            "morphing": model.config.morphing,
            "shape_modes": model.config.shape_modes,
            "field_modes": model.config.field_modes,
            "kernel": model.config.kernel,
            "train_split": model.config.train_split,
            "jitter": format_real(model.config.jitter),
            "transfer_tol": format_real(model.config.transfer_tol),
        },
        "in_scalars": list(model.in_scalars),
        "out_fields": list(model.out_fields),
        "out_scalars": list(model.out_scalars),
        "common_nodes": writer.write(np.ascontiguousarray(model.common_nodes)),
        "common_triangles": writer.write(
            np.ascontiguousarray(model.common_triangles)),
        "shape_basis": basis_doc(model.shape_basis),
        "field_bases": {name: basis_doc(b)
                        for name, b in sorted(model.field_bases.items())},
        "field_regressors": {
            name: [regressor_doc(r) for r in regs]
            for name, regs in sorted(model.field_regressors.items())},
        "scalar_regressors": {
            name: regressor_doc(r)
            for name, r in sorted(model.scalar_regressors.items())},
    }
    _write_text(root / "model.manifest",
                yaml.safe_dump(doc, sort_keys=True, allow_unicode=True))


def load_model(root_path) -> MmgpModel:
    root = Path(root_path)
    manifest = root / "model.manifest"
    doc = _load_yaml(manifest)
    if doc.get("format_version") != FORMAT_VERSION or doc.get("kind") != "mmgp-model":
        raise FormatError("not a supported model manifest", path=manifest)

    def read(entry):
        return read_blob_array(root, entry, manifest)

    def basis_from(doc_b) -> PodBasis:
        return PodBasis(mean=read(doc_b["mean"]), modes=read(doc_b["modes"]),
                        singular_values=read(doc_b["singular_values"]))

    def regressor_from(doc_r) -> Regressor:
        if doc_r["kind"] == "constant":
            return Regressor(constant=parse_real(doc_r["value"]))
        kernel = Kernel(kind=doc_r["kernel"],
                        variance=parse_real(doc_r["variance"]),
                        lengthscales=read(doc_r["lengthscales"]))
        gp = GpModel(kernel=kernel, x_train=read(doc_r["x_train"]),
                     alpha=read(doc_r["alpha"]),
                     chol_lower=read(doc_r["chol_lower"]),
                     x_mean=read(doc_r["x_mean"]), x_std=read(doc_r["x_std"]),
                     y_mean=parse_real(doc_r["y_mean"]),
                     y_std=parse_real(doc_r["y_std"]),
                     jitter=parse_real(doc_r["jitter"]))
        return Regressor(gp=gp)

    cfg = doc["config"]
    config = MmgpConfig(
        morphing=bool(cfg["morphing"]),
        shape_modes=int(cfg["shape_modes"]),
        field_modes=int(cfg["field_modes"]),
        kernel=cfg["kernel"],
        train_split=cfg["train_split"],
        jitter=parse_real(cfg["jitter"]),
        transfer_tol=parse_real(cfg["transfer_tol"]),
    )
    try:
        model = MmgpModel(
            config=config,
            in_scalars=list(doc["in_scalars"]),
            out_fields=list(doc["out_fields"]),
            out_scalars=list(doc["out_scalars"]),
            common_nodes=read(doc["common_nodes"]),
            common_triangles=read(doc["common_triangles"]),
            shape_basis=basis_from(doc["shape_basis"]),
            field_bases={name: basis_from(b)
                         for name, b in doc["field_bases"].items()},
            field_regressors={name: [regressor_from(r) for r in regs]
                              for name, regs in doc["field_regressors"].items()},
            scalar_regressors={name: regressor_from(r)
                               for name, r in doc["scalar_regressors"].items()},
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed model manifest: {exc}", path=manifest)
    return model
