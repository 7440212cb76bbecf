import threading

import numpy as np
import pytest

from meshbench import (
    Base,
    Dataset,
    ProblemDefinition,
    Sample,
    build_tree,
    datasets_equal,
    load_dataset,
    participant_export,
    save_dataset,
    validate_dataset,
)
from meshbench.dataset import CONSTANT_MESH_KEY
from meshbench.errors import (
    FormatError,
    IdOutOfRange,
    InvalidDataset,
    IoFailure,
    NoSuchSplit,
    VersionMismatch,
)
from meshbench.storage import read_sample, write_sample

from conftest import square_zone


def small_dataset(two_base_sample):
    plain = Sample(
        trees={0.0: build_tree(
            [Base("Base_2_2", 2, 2, (square_zone([0.1, 0.25, 1.0 / 3.0, 1e-300]),))],
            time=0.0)},
        scalars={"P": 0.1, "Omega": -2.5e-17, "u_max": 1.0})
    other = Sample(
        trees={0.0: build_tree(
            [Base("Base_2_2", 2, 2, (square_zone([4.0, 3.0, 2.0, 1.0]),))],
            time=0.0)},
        scalars={"P": 7.0, "Omega": 1.0})
    problem = ProblemDefinition(
        in_scalars_names=["P", "Omega"],
        out_scalars_names=["u_max"],
        out_fields_names=["mach"],
        splits={"train": [0], "test": [1, 2]},
    )
    return Dataset(samples=[plain, two_base_sample, other],
                   infos={"origin": "unit-test"}, problem=problem)


def test_round_trip_bitwise(tmp_path, two_base_sample):
    ds = small_dataset(two_base_sample)
    root = tmp_path / "ds"
    save_dataset(ds, root)
    for lazy in (False, True):
        loaded = load_dataset(root, lazy=lazy)
        assert datasets_equal(ds, loaded), f"lazy={lazy}"


def test_layout_matches_contract(tmp_path, two_base_sample):
    root = tmp_path / "ds"
    save_dataset(small_dataset(two_base_sample), root)
    assert (root / "infos.yaml").is_file()
    assert (root / "problem_definition" / "problem_infos.yaml").is_file()
    assert (root / "problem_definition" / "split.csv").is_file()
    for i in range(3):
        sdir = root / "dataset" / "samples" / f"sample_{i:09d}"
        assert (sdir / "scalars.csv").is_file()
        assert (sdir / "meshes" / "mesh_000000000.manifest").is_file()
    # the linked second time step of sample 1
    assert (root / "dataset" / "samples" / "sample_000000001" / "meshes"
            / "mesh_000000001.manifest").is_file()
    split_text = (root / "problem_definition" / "split.csv").read_text()
    assert split_text.splitlines()[0] == "split_name,sample_id"
    assert "\r" not in split_text  # LF line endings


def test_scalar_exact_decimal_round_trip(tmp_path):
    values = {"a": 0.1, "b": 1.0 / 3.0, "c": -2.5e-17, "d": 1e-300,
              "e": 12345.678901234567}
    sample = Sample(scalars=values)
    write_sample(sample, tmp_path / "s")
    back = read_sample(tmp_path / "s")
    for name, value in values.items():
        assert np.float64(back.scalars[name]).tobytes() == \
            np.float64(value).tobytes()


def test_time_series_round_trip(tmp_path, two_base_sample):
    write_sample(two_base_sample, tmp_path / "s")
    back = read_sample(tmp_path / "s")
    assert back.time_series == two_base_sample.time_series


def test_lazy_eager_equivalence(tmp_path, two_base_sample):
    root = tmp_path / "ds"
    save_dataset(small_dataset(two_base_sample), root)
    eager = load_dataset(root, lazy=False)
    lazy = load_dataset(root, lazy=True)
    for sid in (2, 0, 1):  # arbitrary access order
        a = eager.sample_at(sid)
        b = lazy.sample_at(sid)
        assert a.get_scalar_names() == b.get_scalar_names()
        assert a.get_field_names() == b.get_field_names()


def test_split_accessors(tmp_path, two_base_sample):
    ds = small_dataset(two_base_sample)
    assert ds.get_split("train") == [0]
    assert ds.get_split("test") == [1, 2]
    with pytest.raises(NoSuchSplit):
        ds.get_split("nope")
    with pytest.raises(IdOutOfRange):
        ds.sample_at(3)
    assert [s.get_scalar("P") for s in ds.iterate([2, 0])] == [7.0, 0.1]


def test_save_rejects_out_of_range_split(tmp_path, two_base_sample):
    ds = small_dataset(two_base_sample)
    ds.problem.splits["bogus"] = [5]
    with pytest.raises(InvalidDataset):
        save_dataset(ds, tmp_path / "ds")


def test_save_refuses_non_empty_dir(tmp_path, two_base_sample):
    root = tmp_path / "ds"
    root.mkdir()
    (root / "existing.txt").write_text("hello")
    with pytest.raises(IoFailure):
        save_dataset(small_dataset(two_base_sample), root)


def test_truncated_blob_reports_file(tmp_path, two_base_sample):
    root = tmp_path / "ds"
    save_dataset(small_dataset(two_base_sample), root)
    blob = sorted((root / "dataset" / "samples" / "sample_000000000"
                   / "meshes").glob("*.blob"))[0]
    blob.write_bytes(blob.read_bytes()[:-3])
    with pytest.raises(FormatError) as err:
        load_dataset(root, lazy=False)
    assert blob.name in str(err.value)


def test_unknown_format_version(tmp_path, two_base_sample):
    root = tmp_path / "ds"
    save_dataset(small_dataset(two_base_sample), root)
    (root / "infos.yaml").write_text("format_version: 99\ninfos: {}\n")
    with pytest.raises(VersionMismatch):
        load_dataset(root)


def test_validate_dataset_clean(two_base_sample):
    assert validate_dataset(small_dataset(two_base_sample)).empty


def test_validate_nested_split_family(two_base_sample):
    ds = small_dataset(two_base_sample)
    ds.problem.splits["train_2"] = [0, 1]
    ds.problem.splits["train_1"] = [1]  # {1} <= {0, 1}: nested, fine
    assert validate_dataset(ds).empty
    ds.problem.splits["train_1"] = [2]  # not contained in train_2
    report = validate_dataset(ds)
    assert any("subset" in m for _, m in report.violations)
    ds.problem.splits["train_1"] = [0, 1]  # size mismatch with name
    report = validate_dataset(ds)
    assert any("size" in m for _, m in report.violations)


def test_validate_hidden_partition(two_base_sample):
    ds = small_dataset(two_base_sample)
    ds.problem.hidden_partition = {1: "Public", 2: "Private"}
    assert validate_dataset(ds).empty
    ds.problem.hidden_partition = {1: "Public"}
    report = validate_dataset(ds)
    assert any("cover" in m for _, m in report.violations)
    ds.problem.hidden_partition = {1: "Public", 2: "Public"}
    report = validate_dataset(ds)
    assert any("Public and Private" in m for _, m in report.violations)


def test_validate_output_field_coverage(two_base_sample):
    ds = small_dataset(two_base_sample)
    ds.problem.out_fields_names.append("ghost_field")
    report = validate_dataset(ds)
    assert any("ghost_field" in m for _, m in report.violations)


def test_validate_constant_mesh_flag():
    def square_sample(values):
        return Sample(trees={0.0: build_tree(
            [Base("Base_2_2", 2, 2, (square_zone(values),))], time=0.0)})

    same = Dataset(samples=[square_sample([1.0, 2.0, 3.0, 4.0]),
                            square_sample([5.0, 6.0, 7.0, 8.0])],
                   infos={CONSTANT_MESH_KEY: True},
                   problem=ProblemDefinition(splits={"train": [0, 1]}))
    assert validate_dataset(same).empty

    renamed = Sample(trees={0.0: build_tree(
        [Base("Base_2_2", 2, 2, (square_zone([1.0, 2.0, 3.0, 4.0], name="Z"),))],
        time=0.0)})
    differing = Dataset(samples=[square_sample([1.0, 2.0, 3.0, 4.0]), renamed],
                        infos={CONSTANT_MESH_KEY: True},
                        problem=ProblemDefinition(splits={"train": [0, 1]}))
    report = validate_dataset(differing)
    assert any("constant mesh" in m for _, m in report.violations)


def test_participant_export_strips_test_outputs(tmp_path, two_base_sample):
    ds = small_dataset(two_base_sample)
    ds.problem.hidden_partition = {1: "Public", 2: "Private"}
    exported = participant_export(ds)

    test_sample = exported.sample_at(2)
    assert "u_max" not in test_sample.scalars
    assert "P" in test_sample.scalars  # inputs kept
    assert test_sample.get_field_names() == []  # 'mach' stripped
    assert test_sample.get_nodes(base_name="Base_2_2").shape == (4, 2)

    linked_test = exported.sample_at(1)  # non-output fields survive
    assert "M_iso" in linked_test.get_field_names()
    assert "mach" not in linked_test.get_field_names()

    train_sample = exported.sample_at(0)
    assert "mach" in train_sample.get_field_names()
    assert exported.problem.hidden_partition is None

    root = tmp_path / "export"
    save_dataset(exported, root)
    assert not (root / "problem_definition" / "hidden_partition.csv").exists()


def test_lazy_cache_single_population(tmp_path, two_base_sample):
    calls = []

    def loader():
        calls.append(1)
        return Sample(scalars={"x": 1.0})

    ds = Dataset(loaders=[loader], problem=ProblemDefinition())
    barrier = threading.Barrier(8)
    results = []

    def hit():
        barrier.wait()
        results.append(ds.sample_at(0))

    threads = [threading.Thread(target=hit) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(calls) == 1
    assert all(r is results[0] for r in results)
