import numpy as np
import pytest

from meshbench import (
    Base,
    ElementType,
    LinkSpec,
    Location,
    build_tree,
    implicit_connectivity,
    make_field,
    make_structured_zone,
    make_unstructured_zone,
    resolve_links,
    trees_equal,
    validate_tree,
)
from meshbench.errors import (
    DimensionMismatch,
    DuplicateName,
    IndexOutOfRange,
    MissingLinkTarget,
    NotStructured,
)
from meshbench.tree import FieldArray, MeshTree, Zone, ZoneType

from conftest import square_zone


def tri_zone(name="Zone"):
    return make_unstructured_zone(
        name, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        blocks=[(ElementType.TRI_3, [[0, 1, 2]])])


def test_build_minimal_tree():
    tree = build_tree([Base("Base_2_2", 2, 2, (tri_zone(),))], time=0.0)
    assert len(tree.bases) == 1
    assert tree.bases[0].zones[0].n_vertices == 3
    assert validate_tree(tree).empty


def test_duplicate_base_names_rejected():
    bases = [Base("Base_2_2", 2, 2, (tri_zone(),)),
             Base("Base_2_2", 2, 2, (tri_zone(),))]
    with pytest.raises(DuplicateName):
        build_tree(bases, time=0.0)


def test_connectivity_out_of_range_rejected():
    zone = make_unstructured_zone(
        "Zone", [[0, 0], [1, 0], [0, 1], [1, 1]],
        blocks=[(ElementType.TRI_3, [[0, 1, 7]])])
    with pytest.raises(IndexOutOfRange):
        build_tree([Base("Base_2_2", 2, 2, (zone,))], time=0.0)


def test_cell_dim_exceeding_phys_dim_rejected():
    with pytest.raises(DimensionMismatch):
        build_tree([Base("Base_3_2", 3, 2, ())], time=0.0)


def test_validate_vertex_field_length():
    bad = Zone(name="Zone", zone_type=ZoneType.Unstructured, n_vertices=4,
               coordinates=np.zeros((4, 2)),
               fields=(FieldArray("f", Location.Vertex, np.zeros(5)),))
    report = validate_tree(MeshTree(bases=(Base("B", 2, 2, (bad,)),), time=0.0))
    assert len(report.violations) == 1
    path, message = report.violations[0]
    assert path == "B/Zone/fields/f"
    assert "5" in message and "4" in message


def test_validate_structured_dims_product():
    zone = Zone(name="S", zone_type=ZoneType.Structured, n_vertices=8,
                coordinates=np.zeros((8, 3)), structured_dims=(3, 3, 1))
    report = validate_tree(MeshTree(bases=(Base("B", 3, 3, (zone,)),), time=0.0))
    assert len(report.violations) == 1
    assert "dims" in report.violations[0][1]


def test_facecenter_length_is_noted_not_violated():
    zone = make_unstructured_zone(
        "Zone", [[0, 0], [1, 0], [0, 1]],
        blocks=[(ElementType.TRI_3, [[0, 1, 2]])],
        fields=[make_field("flux", [1.0, 2.0, 3.0, 4.0], Location.FaceCenter)])
    tree = build_tree([Base("B", 2, 2, (zone,))], 0.0)
    report = validate_tree(tree)
    assert report.empty
    assert any("unchecked" in note for _, note in report.notes)


def test_construction_implies_conformance_randomized():
    rng = np.random.default_rng(5)
    for _ in range(25):
        n = int(rng.integers(3, 30))
        coords = rng.normal(size=(n, 2))
        conn = rng.integers(0, n, size=(int(rng.integers(1, 20)), 3))
        fields = [make_field("f", rng.normal(size=n), Location.Vertex)]
        zone = make_unstructured_zone("Z", coords,
                                      blocks=[(ElementType.TRI_3, conn)],
                                      fields=fields)
        tree = build_tree([Base("Base_2_2", 2, 2, (zone,))],
                          time=float(rng.uniform(0, 10)))
        assert validate_tree(tree).empty


# -- links -------------------------------------------------------------------


def linked_pair():
    tree0 = build_tree([Base("B", 2, 2, (square_zone(),))], time=0.0)
    shell = Zone(name="Fluid", zone_type=ZoneType.Unstructured, n_vertices=4,
                 coordinates=None)
    tree1 = build_tree([Base("B", 2, 2, (shell,))], time=0.01,
                       links=[LinkSpec(0.0, ("B/Fluid",))])
    return tree0, tree1


def test_resolve_links_copies_content():
    tree0, tree1 = linked_pair()
    resolved = resolve_links(tree1, {0.0: tree0}.get)
    zone = resolved.bases[0].zones[0]
    source = tree0.bases[0].zones[0]
    assert np.array_equal(zone.coordinates, source.coordinates)
    assert np.array_equal(zone.element_blocks[0].connectivity,
                          source.element_blocks[0].connectivity)
    assert resolved.links == ()
    assert tree1.bases[0].zones[0].coordinates is None  # source unmodified


def test_resolve_without_links_is_identity():
    tree = build_tree([Base("B", 2, 2, (square_zone(),))], time=0.0)
    assert trees_equal(resolve_links(tree, lambda t: None), tree)


def test_resolve_is_idempotent():
    tree0, tree1 = linked_pair()
    once = resolve_links(tree1, {0.0: tree0}.get)
    twice = resolve_links(once, lambda t: None)
    assert trees_equal(once, twice)


def test_resolve_missing_time_raises():
    _, tree1 = linked_pair()
    other = build_tree([Base("B", 2, 2, (square_zone(),))], time=0.005)
    with pytest.raises(MissingLinkTarget):
        resolve_links(tree1, {0.005: other}.get)


def test_resolve_missing_path_raises():
    tree0 = build_tree([Base("Other", 2, 2, (square_zone(),))], time=0.0)
    _, tree1 = linked_pair()
    with pytest.raises(MissingLinkTarget):
        resolve_links(tree1, {0.0: tree0}.get)


def test_link_must_point_at_a_gap():
    zone = square_zone()  # fully materialized
    with pytest.raises(MissingLinkTarget):
        build_tree([Base("B", 2, 2, (zone,))], time=0.01,
                   links=[LinkSpec(0.0, ("B/Fluid/coordinates",))])


def test_gap_without_link_rejected():
    shell = Zone(name="Fluid", zone_type=ZoneType.Unstructured, n_vertices=4,
                 coordinates=None)
    with pytest.raises(MissingLinkTarget):
        build_tree([Base("B", 2, 2, (shell,))], time=0.01)


def test_link_target_time_must_be_earlier():
    shell = Zone(name="Fluid", zone_type=ZoneType.Unstructured, n_vertices=4,
                 coordinates=None)
    with pytest.raises(MissingLinkTarget):
        build_tree([Base("B", 2, 2, (shell,))], time=0.01,
                   links=[LinkSpec(0.02, ("B/Fluid",))])


# -- implicit connectivity ----------------------------------------------------


def quad_oracle(ni, nj):
    """Enumerate quad cells of an (ni, nj) vertex grid, i fastest."""
    cells = []
    for cj in range(nj - 1):
        for ci in range(ni - 1):
            v = lambda di, dj: (ci + di) + ni * (cj + dj)
            cells.append([v(0, 0), v(1, 0), v(1, 1), v(0, 1)])
    return np.asarray(cells)


def hexa_oracle(ni, nj, nk):
    cells = []
    for ck in range(nk - 1):
        for cj in range(nj - 1):
            for ci in range(ni - 1):
                v = lambda di, dj, dk: ((ci + di) + ni * ((cj + dj)
                                        + nj * (ck + dk)))
                cells.append([v(0, 0, 0), v(1, 0, 0), v(1, 1, 0), v(0, 1, 0),
                              v(0, 0, 1), v(1, 0, 1), v(1, 1, 1), v(0, 1, 1)])
    return np.asarray(cells)


def test_implicit_quads_3x2():
    zone = make_structured_zone("S", np.zeros((6, 2)), (3, 2))
    blocks = implicit_connectivity(zone)
    assert blocks[0].element_type is ElementType.QUAD_4
    assert blocks[0].connectivity.tolist() == [[0, 1, 4, 3], [1, 2, 5, 4]]
    assert np.array_equal(blocks[0].connectivity, quad_oracle(3, 2))


def test_implicit_quads_2x2():
    zone = make_structured_zone("S", np.zeros((4, 2)), (2, 2))
    blocks = implicit_connectivity(zone)
    assert blocks[0].connectivity.tolist() == [[0, 1, 3, 2]]


def test_implicit_not_structured():
    with pytest.raises(NotStructured):
        implicit_connectivity(tri_zone())


@pytest.mark.parametrize("dims", [(2, 3), (4, 4), (5, 2), (7, 3)])
def test_implicit_quads_match_oracle(dims):
    ni, nj = dims
    zone = make_structured_zone("S", np.zeros((ni * nj, 2)), dims)
    blocks = implicit_connectivity(zone)
    assert np.array_equal(blocks[0].connectivity, quad_oracle(ni, nj))
    assert blocks[0].n_elements == (ni - 1) * (nj - 1)
    assert blocks[0].connectivity.min() >= 0
    assert blocks[0].connectivity.max() < ni * nj


@pytest.mark.parametrize("dims", [(2, 2, 2), (3, 2, 2), (3, 4, 2)])
def test_implicit_hexa_match_oracle(dims):
    ni, nj, nk = dims
    zone = make_structured_zone("S", np.zeros((ni * nj * nk, 3)), dims)
    blocks = implicit_connectivity(zone)
    assert blocks[0].element_type is ElementType.HEXA_8
    assert np.array_equal(blocks[0].connectivity, hexa_oracle(*dims))


def test_structured_zone_validates_against_cellcenter_field():
    coords = np.zeros((6, 2))
    zone = make_structured_zone(
        "S", coords, (3, 2),
        fields=[make_field("q", [1.0, 2.0], Location.CellCenter)])
    tree = build_tree([Base("B", 2, 2, (zone,))], 0.0)
    assert validate_tree(tree).empty  # 2 implicit cells and 2 values
