import math

import numpy as np
import pytest

import varbh


@pytest.fixture(scope="module")
def params():
    return varbh.lattice_parameters(varbh.LatticeSetup(sites=4, points_per_site=512), 3)


def test_parameters_have_expected_shape_and_symmetry(params):
    assert params.num_bands == 3
    assert len(params.J) == 3 and len(params.E) == 3
    u = params.U
    assert u.shape == (3, 3, 3, 3)
    assert np.allclose(u, u.transpose(1, 0, 2, 3), atol=1e-12)
    assert u[0, 0, 0, 1] == 0.0
    assert params.E[0] < params.E[1] < params.E[2]


def test_single_band_methods_agree(params):
    p = params.truncated(1).with_coupling(1.0)
    e_mbh = varbh.mbh_ground_energy(p, 4, 4)
    e_tdv, converged = varbh.tdv_ground_energy(p, 4, 4, starts=2)
    assert converged
    assert abs(e_mbh - e_tdv) < 1e-9


def test_sweep_rows_are_ordered(params):
    rows = varbh.gs_sweep(params, varbh.LatticeSetup(sites=2, points_per_site=512), particles=2,
                          g=[0.5], mbh_bands=[1, 2], tdv_bands=[2], starts=2)
    assert [r["method"] for r in rows] == ["mbh", "mbh", "tdv"]
    assert rows[0]["relative"] == 0.0
    assert rows[1]["energy"] <= rows[0]["energy"]


def test_overlap_bound():
    alpha, beta, value = varbh.psi13_overlap_bound()
    assert value == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-8)


def test_bad_arguments_raise():
    with pytest.raises(ValueError):
        varbh.omega_grid(1.0, 0.0, 0.1)


def test_cache_round_trip(tmp_path):
    lattice = varbh.LatticeSetup(sites=2, points_per_site=256)
    cold, hit_cold = varbh.cached_parameters(str(tmp_path), lattice, 2)
    warm, hit_warm = varbh.cached_parameters(str(tmp_path), lattice, 2)
    assert (hit_cold, hit_warm) == (False, True)
    assert cold.J == warm.J and cold.E == warm.E
    assert varbh.format_double(0.1) == "0.10000000000000001"
