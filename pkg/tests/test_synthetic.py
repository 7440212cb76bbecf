import math

import numpy as np
import pytest

from meshbench import SynthConfig, datasets_equal, generate, validate_dataset
from meshbench.errors import ConfigInvalid
from meshbench.morphing import build_surface_mesh, tutte_embed
from meshbench.mmgp import extract_triangle_geometry


def test_deterministic_regeneration():
    a = generate(SynthConfig(n_samples=6, seed=42))
    b = generate(SynthConfig(n_samples=6, seed=42), threads=3)
    assert datasets_equal(a, b)


def test_fields_match_closed_form_oracle():
    ds = generate(SynthConfig(n_samples=4, seed=3))
    for sid in range(4):
        s = ds.sample_at(sid)
        a = s.get_scalar("a")
        p = s.get_scalar("p")
        coords = s.get_nodes(base_name="Base_2_2")
        u = s.get_field("u")
        du = s.get_field("du_dx")
        for i in range(coords.shape[0]):
            x, y = coords[i]
            expected_u = p * (1 + a * y) * math.sin(math.pi * x) * \
                math.sin(math.pi * y / (1 + a))
            expected_du = p * (1 + a * y) * math.pi * math.cos(math.pi * x) * \
                math.sin(math.pi * y / (1 + a))
            assert abs(u[i] - expected_u) <= 1e-14 * max(1, abs(expected_u))
            assert abs(du[i] - expected_du) <= 1e-14 * max(1, abs(expected_du))
        assert s.get_scalar("u_max") == u.max()


def test_flat_plate_has_zero_field_on_horizontal_boundaries():
    ds = generate(SynthConfig(n_samples=2, seed=1, amplitude_range=(0.0, 0.0)))
    s = ds.sample_at(0)
    coords = s.get_nodes(base_name="Base_2_2")
    u = s.get_field("u")
    boundary = (np.abs(coords[:, 1]) < 1e-15) | (np.abs(coords[:, 1] - 1) < 1e-12)
    assert np.abs(u[boundary]).max() < 1e-13


def test_split_layout_n10():
    ds = generate(SynthConfig(n_samples=10, seed=0))
    splits = ds.problem.splits
    assert len(splits["train"]) == 8
    assert len(splits["test"]) == 2
    assert splits["train_2"] == splits["train_4"][:2]
    assert set(splits["train_2"]) <= set(splits["train_4"]) <= set(splits["train_8"])
    part = ds.problem.hidden_partition
    assert sorted(part) == splits["test"]
    assert sorted(set(part.values())) == ["Private", "Public"]


def test_generated_dataset_validates_clean():
    ds = generate(SynthConfig(n_samples=8, seed=5))
    assert validate_dataset(ds).empty


def test_meshes_are_disk_topology():
    ds = generate(SynthConfig(n_samples=4, seed=9, min_nodes_per_side=5,
                              max_nodes_per_side=9))
    for sid in range(4):
        coords, triangles = extract_triangle_geometry(ds.sample_at(sid))
        morphed = tutte_embed(build_surface_mesh(coords, triangles))
        assert np.isfinite(morphed.positions).all()


def test_nodal_tags_mark_top_and_bottom_rows():
    ds = generate(SynthConfig(n_samples=2, seed=4))
    s = ds.sample_at(0)
    coords = s.get_nodes(base_name="Base_2_2")
    tags = s.get_nodal_tags(base_name="Base_2_2")
    assert np.allclose(coords[tags["bottom"], 1], 0.0)
    top_y = coords[tags["top"], 1]
    assert (top_y >= 1.0 - 1e-12).all()


def test_invalid_configs_rejected():
    with pytest.raises(ConfigInvalid):
        generate(SynthConfig(n_samples=1))
    with pytest.raises(ConfigInvalid):
        generate(SynthConfig(case="cube3d"))
    with pytest.raises(ConfigInvalid):
        generate(SynthConfig(min_nodes_per_side=9, max_nodes_per_side=5))
    with pytest.raises(ConfigInvalid):
        generate(SynthConfig(amplitude_range=(0.5, 0.1)))
