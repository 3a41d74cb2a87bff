from unittest.mock import MagicMock

import pytest

from querylab import acceptance
from querylab.runner import ExperimentConfig


@pytest.fixture
def config():
    return ExperimentConfig(command="all-acceptance", trials=10, seed=0)


class TestScaling:
    def test_nominal_size(self):
        nominal = ExperimentConfig(command="all-acceptance", trials=1000)
        assert acceptance._scaled(500, nominal) == 500

    def test_scaled_down(self, config):
        assert acceptance._scaled(500, config) == 5

    def test_floor_of_two(self):
        tiny = ExperimentConfig(command="all-acceptance", trials=1)
        assert acceptance._scaled(200, tiny) == 2


class TestCriteria:
    def test_numbering(self):
        assert [number for number, _, _ in acceptance.CRITERIA] == list(range(1, 13))

    def test_spectral_exactness(self, config):
        passed, detail = acceptance.spectral_exactness(config)
        assert passed
        assert detail["max_abs_error"] <= 1e-10

    def test_success_bounds(self, config):
        passed, detail = acceptance.success_bounds(config)
        assert passed
        assert detail["violations"] == 0

    def test_cgt_single_query(self, config):
        passed, detail = acceptance.cgt_single_query(config)
        assert passed
        assert detail["exact_single_query"] == detail["instances"] == 30

    def test_stage_z_limit(self):
        assert acceptance.stage_z_limit(1) == pytest.approx(3.0, abs=1e-3)
        assert acceptance.stage_z_limit(200) > acceptance.stage_z_limit(10) > 3.0

    def test_wildcard_search_scores_each_stage(self, config):
        _, detail = acceptance.wildcard_search(config)
        assert detail["recovered"] == detail["trials"] == 20
        assert detail["stages_tested"] > 4
        assert detail["stage_z_limit"] == acceptance.stage_z_limit(
            detail["stages_tested"]
        )

    def test_adversary_values(self, config):
        passed, detail = acceptance.adversary_values(config)
        assert passed
        assert detail["n4"] == 2.0

    def test_reduction(self, config):
        passed, detail = acceptance.reduction(config)
        assert passed
        assert detail["instances"] == sum(1 << k for k in range(1, 9))

    def test_determinism(self, config):
        passed, detail = acceptance.determinism(config)
        assert passed
        assert detail["unstable"] == []


class TestRunAcceptance:
    def test_rows_and_progress(self, config, monkeypatch):
        fake = [
            (1, "always", lambda c: (True, {"value": 1})),
            (2, "never", lambda c: (False, {"value": 2})),
        ]
        monkeypatch.setattr(acceptance, "CRITERIA", fake)
        handler = MagicMock()

        rows = acceptance.run_acceptance(config, progress_handler=handler)

        assert rows == [
            {"criterion": 1, "name": "always", "passed": True, "detail": {"value": 1}},
            {"criterion": 2, "name": "never", "passed": False, "detail": {"value": 2}},
        ]
        assert handler.call_count == 2
        assert "FAILED" in handler.call_args_list[1].args[0]
