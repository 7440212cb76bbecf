"""Sample container: time-indexed mesh trees plus scalars and time series.

A sample is the unit of learning data.  Getters resolve omitted arguments
automatically: an omitted base or zone is accepted when exactly one
candidate exists, the default location is Vertex, and the default time is
the smallest stored time (requiring a single stored time or a time at 0).
Stored times are matched with an absolute tolerance of 1e-12 and are never
re-quantized.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    AmbiguousDefault,
    AmbiguousQuery,
    DimensionMismatch,
    FieldNotFound,
    NotFound,
    NoSuchTime,
)
from .tree import (
    Base,
    Location,
    MeshTree,
    TagKind,
    Zone,
    ZoneType,
    implicit_connectivity,
    resolve_links,
    trees_equal,
)

TIME_TOLERANCE = 1e-12


@dataclass(frozen=True)
class QuerySelector:
    """Field query with optional scope narrowing; None means 'resolve'."""

    name: str
    base_name: Optional[str] = None
    zone_name: Optional[str] = None
    location: Optional[Location] = None
    time: Optional[float] = None


class Sample:
    """Immutable bundle of mesh trees (by time), scalars and time series.

    Parameters
    ----------
    trees : mapping time -> MeshTree, each tree's own time must equal its key
    scalars : mapping name -> float
    time_series : mapping name -> sequence of (time, value) pairs, strictly
        increasing in time
    """

    def __init__(self, trees=None, scalars=None, time_series=None):
        trees = dict(trees or {})
        for t, tree in trees.items():
            if abs(tree.time - t) > TIME_TOLERANCE:
                raise DimensionMismatch(
                    f"tree stored at time {t!r} carries time {tree.time!r}")
        self._trees: dict[float, MeshTree] = {
            t: trees[t] for t in sorted(trees)}
        self._scalars: dict[str, float] = {
            k: float(v) for k, v in (scalars or {}).items()}
        self._time_series: dict[str, tuple[tuple[float, float], ...]] = {}
        for name, pairs in (time_series or {}).items():
            pairs = tuple((float(a), float(b)) for a, b in pairs)
            times = [a for a, _ in pairs]
            if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
                raise DimensionMismatch(
                    f"time series '{name}' times must be strictly increasing")
            self._time_series[name] = pairs
        self._resolved_cache: dict[float, MeshTree] = {}
        self._cache_lock = threading.Lock()

    # -- plain accessors ---------------------------------------------------

    @property
    def trees(self) -> dict[float, MeshTree]:
        return dict(self._trees)

    @property
    def scalars(self) -> dict[str, float]:
        return dict(self._scalars)

    @property
    def time_series(self) -> dict[str, tuple[tuple[float, float], ...]]:
        return dict(self._time_series)

    def get_all_mesh_times(self) -> list[float]:
        """Ascending, duplicate-free times of the stored trees."""
        return sorted(self._trees)

    # -- time resolution ---------------------------------------------------

    def _match_time(self, time: float) -> Optional[float]:
        for t in self._trees:
            if abs(t - time) <= TIME_TOLERANCE:
                return t
        return None

    def _default_time(self) -> float:
        times = self.get_all_mesh_times()
        if not times:
            raise NoSuchTime("sample holds no meshes")
        if len(times) == 1:
            return times[0]
        if abs(times[0]) <= TIME_TOLERANCE:
            return times[0]
        raise AmbiguousDefault(
            f"cannot pick a default among times {times}; pass time explicitly")

    def _resolve_time(self, time: Optional[float]) -> float:
        if time is None:
            return self._default_time()
        matched = self._match_time(float(time))
        if matched is None:
            raise NoSuchTime(
                f"no stored mesh within {TIME_TOLERANCE} of time {time!r}; "
                f"stored times: {self.get_all_mesh_times()}")
        return matched

    # -- mesh access -------------------------------------------------------

    def get_mesh(self, time: Optional[float] = None,
                 apply_links: bool = False) -> MeshTree:
        """Tree at the resolved time, optionally with links materialized.

        With ``apply_links`` the sample's own earlier trees act as the link
        provider (resolved recursively).
        """
        t = self._resolve_time(time)
        if not apply_links:
            return self._trees[t]
        return self._resolved(t)

    def _resolved(self, t: float) -> MeshTree:
        with self._cache_lock:
            cached = self._resolved_cache.get(t)
        if cached is not None:
            return cached
        resolved = resolve_links(self._trees[t], self._provider)
        with self._cache_lock:
            return self._resolved_cache.setdefault(t, resolved)

    def _provider(self, target_time: float) -> Optional[MeshTree]:
        matched = self._match_time(target_time)
        if matched is None:
            return None
        return self._resolved(matched)

    # -- scope resolution ----------------------------------------------------

    def _resolve_base(self, tree: MeshTree, base_name: Optional[str]) -> Base:
        if base_name is not None:
            for b in tree.bases:
                if b.name == base_name:
                    return b
            raise NotFound(f"no base named '{base_name}'")
        if len(tree.bases) == 1:
            return tree.bases[0]
        names = [b.name for b in tree.bases]
        raise AmbiguousQuery(
            f"base_name omitted but tree has {len(names)} bases: {names}")

    def _resolve_zone(self, base: Base, zone_name: Optional[str]) -> Zone:
        if zone_name is not None:
            for z in base.zones:
                if z.name == zone_name:
                    return z
            raise NotFound(f"no zone named '{zone_name}' in base '{base.name}'")
        if len(base.zones) == 1:
            return base.zones[0]
        names = [z.name for z in base.zones]
        raise AmbiguousQuery(
            f"zone_name omitted but base '{base.name}' has {len(names)} "
            f"zones: {names}")

    def _resolve_scope(self, base_name, zone_name, time) -> Zone:
        tree = self.get_mesh(time=time, apply_links=True)
        base = self._resolve_base(tree, base_name)
        return self._resolve_zone(base, zone_name)

    # -- field and geometry getters ------------------------------------------

    def get_field(self, name: str, base_name: Optional[str] = None,
                  zone_name: Optional[str] = None,
                  location: Optional[Location] = None,
                  time: Optional[float] = None) -> np.ndarray:
        """Values of the unique field matching the selector.

        Omitted base/zone resolve when unambiguous; omitted location
        defaults to Vertex; omitted time follows get_mesh's default.
        """
        selector = QuerySelector(name, base_name, zone_name, location, time)
        zone = self._resolve_scope(selector.base_name, selector.zone_name,
                                   selector.time)
        loc = selector.location or Location.Vertex
        for f in zone.fields:
            if f.name == name and f.location is loc:
                return f.values
        raise FieldNotFound(
            f"no field '{name}' at {loc.value} in zone '{zone.name}'")

    def get_scalar(self, name: str) -> float:
        try:
            return self._scalars[name]
        except KeyError:
            raise NotFound(f"no scalar named '{name}'") from None

    def get_scalar_names(self) -> list[str]:
        return sorted(self._scalars)

    def get_time_series(self, name: str) -> tuple[tuple[float, float], ...]:
        try:
            return self._time_series[name]
        except KeyError:
            raise NotFound(f"no time series named '{name}'") from None

    def get_field_names(self, time: Optional[float] = None) -> list[str]:
        """Sorted unique field names across the whole tree at that time."""
        tree = self.get_mesh(time=time, apply_links=True)
        names = {f.name for b in tree.bases for z in b.zones for f in z.fields}
        return sorted(names)

    def get_nodes(self, base_name: Optional[str] = None,
                  zone_name: Optional[str] = None,
                  time: Optional[float] = None) -> np.ndarray:
        zone = self._resolve_scope(base_name, zone_name, time)
        if zone.coordinates is None:
            raise NotFound(f"zone '{zone.name}' has no materialized coordinates")
        return zone.coordinates

    def get_elements(self, base_name: Optional[str] = None,
                     zone_name: Optional[str] = None,
                     time: Optional[float] = None) -> dict[str, np.ndarray]:
        """Connectivity per element type, blocks merged in global-id order."""
        zone = self._resolve_scope(base_name, zone_name, time)
        blocks = list(zone.element_blocks)
        if zone.zone_type is ZoneType.Structured:
            blocks = implicit_connectivity(zone)
        merged: dict[str, list[np.ndarray]] = {}
        for blk in sorted(blocks, key=lambda b: b.global_range[0]):
            merged.setdefault(blk.element_type.value, []).append(blk.connectivity)
        return {etype: np.vstack(parts) if len(parts) > 1 else parts[0]
                for etype, parts in merged.items()}

    def get_nodal_tags(self, base_name: Optional[str] = None,
                       zone_name: Optional[str] = None,
                       time: Optional[float] = None) -> dict[str, np.ndarray]:
        zone = self._resolve_scope(base_name, zone_name, time)
        return {t.name: t.ids for t in zone.tags if t.kind is TagKind.NodalTag}


def samples_equal(a: Sample, b: Sample) -> bool:
    """Structural equality, bit-exact on arrays and scalar values."""
    if sorted(a.trees) != sorted(b.trees):
        return False
    for t, tree in a.trees.items():
        if not trees_equal(tree, b.trees[t]):
            return False
    sa, sb = a.scalars, b.scalars
    if sorted(sa) != sorted(sb):
        return False
    for k, v in sa.items():
        if np.float64(v).tobytes() != np.float64(sb[k]).tobytes():
            return False
    return a.time_series == b.time_series
