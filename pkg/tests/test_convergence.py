import numpy as np
import pytest

from dampedwave import convergence as cvg
from dampedwave.errors import ParameterError


class TestVerifyExactness:
    def test_decreasing_table(self):
        ok, report = cvg.verify_exactness([0.8, 0.5, 0.3, 0.2, 0.12], window=3)
        assert ok
        assert len(report["rates"]) == 4
        assert report["rates"][0] == pytest.approx(np.log(0.8 / 0.5))

    def test_constant_table(self):
        ok, _ = cvg.verify_exactness([0.5, 0.5, 0.5], window=2)
        assert not ok

    def test_window_too_large(self):
        with pytest.raises(ParameterError):
            cvg.verify_exactness([0.5, 0.4], window=2)


class TestRayGeometry:
    def test_angles(self):
        assert cvg.branch_ray_angle(1) == pytest.approx(2 * np.pi / 3)
        assert cvg.angular_gap(1) == pytest.approx(np.pi / 6)
        assert cvg.angular_gap(4) == pytest.approx(np.pi / 18)


@pytest.fixture(scope="module")
def table_k1():
    return cvg.lambda_branch([1, 2, 3, 4, 6, 8], k=1, a0=0.0, q0=0.0, tol=1e-8)


class TestLambdaBranch:
    def test_no_branch_lost(self, table_k1):
        assert not any(r.branch_lost for r in table_k1.rows)

    def test_limit_value(self, table_k1):
        assert table_k1.limit.values[0] == pytest.approx(1j * np.pi / 2, abs=1e-14)

    def test_errors_eventually_decrease(self, table_k1):
        ok, _ = cvg.verify_exactness(table_k1, window=3)
        assert ok

    def test_exact_ray_angles(self, table_k1):
        for row in table_k1.rows:
            gap = np.angle(row.lam) - np.pi / 2
            assert abs(gap - cvg.angular_gap(row.n)) < 1e-10

    def test_rows_ascending_in_n(self, table_k1):
        ns = [r.n for r in table_k1.rows]
        assert ns == sorted(ns)

    def test_requires_ascending_n(self):
        with pytest.raises(ParameterError):
            cvg.lambda_branch([3, 1], k=1)

    def test_overdamped_branch_tracks_real_pair(self):
        table = cvg.lambda_branch([1, 2, 3, 4], k=1, a0=3.0, q0=0.0, tol=1e-8)
        assert table.limit.real_pair
        errors = table.errors
        assert len(errors) == 4
        assert all(a > b for a, b in zip(errors, errors[1:]))

    def test_error_grows_with_mode_index(self):
        # non-uniform convergence: higher limit modes are approximated worse
        for n in (1, 2, 3):
            e1 = cvg.lambda_branch([n], k=1).rows[0].error
            e4 = cvg.lambda_branch([n], k=4).rows[0].error
            assert e4 > e1
