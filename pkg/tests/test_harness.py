import numpy as np
import pytest

from halfspace import UnknownExperiment
from halfspace.harness import (ExperimentConfig, default_config,
                               experiment_names, parse_complex,
                               run_experiment, system_from_spec)


def test_registry_lists_all_experiments():
    names = experiment_names()
    assert len(names) == 13
    assert "lp_wellposed" in names
    assert "counterexample_dipole" in names


def test_unknown_experiment():
    with pytest.raises(UnknownExperiment):
        run_experiment(ExperimentConfig(name="bogus"))
    with pytest.raises(UnknownExperiment):
        default_config("bogus")


def test_parse_complex_pairs():
    assert parse_complex([1, -2]) == 1 - 2j
    assert parse_complex(3.5) == 3.5 + 0j
    with pytest.raises(Exception):
        parse_complex("nope")


def test_system_from_spec_lame():
    sys_ = system_from_spec({"kind": "lame", "mu": [1, 0], "lambda": [1, 0],
                             "n": 2})
    assert sys_.M == 2
    assert sys_.ellipticity_margin > 0.9


def test_reports_deterministic():
    cfg = default_config("counterexample_linear", seed=11)
    r1 = run_experiment(cfg)
    r2 = run_experiment(default_config("counterexample_linear", seed=11))
    assert r1.to_json() == r2.to_json()


def test_seed_changes_fingerprint():
    r1 = run_experiment(default_config("counterexample_linear", seed=1))
    r2 = run_experiment(default_config("counterexample_linear", seed=2))
    assert r1.fingerprint["seed"] != r2.fingerprint["seed"]


def test_linear_counterexample_content():
    rep = run_experiment(default_config("counterexample_linear"))
    assert rep.passed
    assert rep.value("trace_sup") < 1e-10
    assert rep.value("representation_failure") > 0.99


def test_lp_wellposed_small_config():
    cfg = default_config("lp_wellposed", N=512, h=0.25, refine=False)
    rep = run_experiment(cfg)
    assert rep.passed
    assert rep.value("ratio_lower") >= 0.999
    assert np.isfinite(rep.value("ratio_upper"))


def test_lame_linfty_finite_constant(shared_lame_report):
    rep = shared_lame_report
    assert rep.passed
    assert rep.value("sup_ratio_upper") >= 1.0 - 1e-6


@pytest.fixture(scope="module")
def shared_lame_report():
    cfg = default_config(
        "linfty_maximum", N=512, h=0.25, refine=False,
        system={"kind": "lame", "mu": [1, 0], "lambda": [1, 0], "n": 2})
    return run_experiment(cfg)


def test_tolerance_overrides_respected():
    cfg = default_config("counterexample_linear",
                         tolerances={"trace": 1e-30})
    rep = run_experiment(cfg)
    # the override flows into the config snapshot
    assert rep.fingerprint["tolerances"]["trace"] == 1e-30


@pytest.mark.parametrize("name,kw", [
    ("weighted_l1_wellposed", {"N": 512, "h": 0.25, "refine": False}),
    ("classical_continuity", {"N": 1024, "h": 0.125}),
    ("scg_local_max", {"N": 512, "h": 0.25, "refine": False}),
    ("slg_wellposed", {"N": 512, "h": 0.25, "refine": False}),
    ("holder_wellposed", {"N": 512, "h": 0.25, "refine": False}),
    ("bmo_carleson", {"N": 512, "h": 0.25, "refine": False}),
    ("h1_atoms", {"N": 512, "h": 0.25, "refine": False, "params": {"atoms": 6}}),
    ("fatou_trace_recovery", {"N": 512, "h": 0.25, "refine": False}),
    ("counterexample_kernel_column", {"N": 512, "h": 0.125}),
    ("counterexample_dipole", {"N": 2048, "h": 0.0625}),
])
def test_every_experiment_passes_at_small_scale(name, kw):
    rep = run_experiment(default_config(name, **kw))
    assert rep.passed, "\n".join(rep.summary_lines())
