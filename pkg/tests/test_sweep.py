import math
import numpy as np
import pytest

from icefill.models import ExperimentConfig, SweepRow, SWEEP_COLUMNS, UpaGeometry
from icefill.sweep import build_point, run_sweep, dumps, dump, load, print_results, clustered_kernel
from icefill.channel import ClusteredChannelParams
from icefill.exceptions import ConfigError, InvalidInputError


SMALL = """
geometry: {mx: 2, my: 2, spacing: 0.25}
channel: {source: gaussian, kernel: exponential}
design: {designers: [wf, if, random-gaussian], q: 4}
sweep: {axis: snr_db, values: [0.0, 10.0]}
run: {trials: 40, workers: 1, base_seed: 7}
"""


def small_config(**run) -> ExperimentConfig:
    config = ExperimentConfig.loads(SMALL)
    data = config.to_dict()
    data["run"].update(run)
    return ExperimentConfig.from_dict(data)


def test_build_point():
    config = small_config()
    point = build_point(config, 10.0)
    assert point.geometry.num_antennas == 4
    assert point.q == 4
    assert point.prior is point.truth
    assert point.power == pytest.approx(4.0)
    assert point.sigma2 == pytest.approx(0.4)


def test_statistical_prior_is_shifted():
    config = ExperimentConfig.loads(SMALL + "kernel: {name: statistical, sigma_h2_db: -10}\n")
    point = build_point(config, 0.0)
    shift = np.real(np.diag(point.prior.matrix - point.truth.matrix))
    assert np.allclose(shift, 0.1 * point.truth.trace / 4)


def test_small_sweep_rows():
    result = run_sweep(small_config())
    assert len(result) == 6
    for row in result:
        assert row.trials == 40
        assert row.axis == "snr_db"
        assert math.isfinite(row.nmse_db)
        assert math.isfinite(row.analytic_nmse_db)
    # more SNR, less error
    for designer in ("wf", "if"):
        curve = result.curve(designer)
        assert curve[10.0] < curve[0.0]


def test_sweep_is_reproducible_across_workers():
    first = dumps(run_sweep(small_config(workers=1)))
    second = dumps(run_sweep(small_config(workers=3)))
    # the header carries the config hash, which includes the worker count
    assert first.splitlines()[1:] == second.splitlines()[1:]
    assert first == dumps(run_sweep(small_config(workers=1)))


def test_sweep_file(tmp_path):
    result = run_sweep(small_config(trials=5))
    path = str(tmp_path / "out" / "sweep.csv")
    dump(result, path, timing=True)
    text = open(path).read()
    assert text.startswith("# icefill-sweep v1 config=")
    assert text.splitlines()[1] == ",".join(SWEEP_COLUMNS + ["wall_time"])
    loaded = load(path)
    assert loaded.config_hash == result.config_hash
    assert [r.nmse_db for r in loaded] == [r.nmse_db for r in result]
    print_results(loaded)


def test_load_rejects_foreign_files(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("designer,estimator\n")
    with pytest.raises(InvalidInputError):
        load(str(path))
    path.write_text("# icefill-sweep v0 config=abc\n")
    with pytest.raises(InvalidInputError):
        load(str(path))


def test_dft_with_least_squares():
    config = ExperimentConfig.loads(SMALL.replace("[wf, if, random-gaussian]", "[dft]") +
                                    "estimation: {estimators: [mmse, ls]}\n")
    result = run_sweep(config)
    ls = {row.value : row for row in result.select(estimator="ls")}
    mmse = {row.value : row for row in result.select(estimator="mmse")}
    for value in (0.0, 10.0):
        assert ls[value].delta == pytest.approx(4 * 10 ** (-value / 10) * 4)
        assert mmse[value].delta < ls[value].delta


def test_inconsistent_configs():
    with pytest.raises(ConfigError):
        run_sweep(ExperimentConfig.loads(SMALL.replace("axis: snr_db", "axis: sigma_h2")))
    with pytest.raises(ConfigError):
        run_sweep(ExperimentConfig.loads(SMALL.replace("source: gaussian", "source: clustered, rank: 2")))


def test_clustered_kernel_is_cached(tmp_path):
    geom = UpaGeometry.from_ratio(2, 2, 0.5)
    params = ClusteredChannelParams(num_clusters=3, rays_per_cluster=4)
    first = clustered_kernel(geom, params, 500, 1, cache_dir=str(tmp_path))
    assert clustered_kernel(geom, params, 500, 1) is first
    assert len(list(tmp_path.glob("clustered-*.npy"))) == 1


def test_rows_round_trip_through_dicts():
    row = SweepRow("if", "mmse", "q", 16.0, -12.5, 0.1, 0.09, -12.6, 100, 1.5)
    assert SweepRow.from_dict({k : str(v) for k, v in row.to_dict(timing=True).items()}) == row
    assert "wall_time" not in row.to_dict()


@pytest.mark.slow
def test_empirical_mse_follows_closed_form():
    config = ExperimentConfig.loads("""
geometry: {mx: 4, my: 4, spacing: 0.25}
channel: {source: gaussian, kernel: exponential}
design: {designers: [wf, if], q: 16}
sweep: {axis: snr_db, values: [0.0, 10.0]}
run: {trials: 2000, workers: 4}
""")
    result = run_sweep(config)
    for row in result:
        power = build_point(config, row.value).power
        assert 10 * math.log10(row.mse / power) == pytest.approx(row.analytic_nmse_db, abs=0.3)
    for value in (0.0, 10.0):
        wf = next(r for r in result.select("wf") if r.value == value)
        ice = next(r for r in result.select("if") if r.value == value)
        assert abs(wf.analytic_nmse_db - ice.analytic_nmse_db) <= 0.75
