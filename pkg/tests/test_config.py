import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasemoments.config import ExperimentConfig, from_dict, from_json, load
from phasemoments.errors import ConfigError


def test_defaults_describe_the_squeezed_run():
    cfg = ExperimentConfig()
    assert cfg.state.kind == "squeezed" and cfg.state.s == 6.0
    assert abs(cfg.state.alpha - 5.0 * complex(0.8253356149096783, 0.5646424733950354)) < 1e-12
    assert (cfg.fock_dim, cfg.n_theta, cfg.total_events, cfg.k_max) == (160, 41, 6020, 6)
    assert (cfg.allocation.min_events, cfg.allocation.max_events) == (10, 800)


def test_round_trip_defaults():
    cfg = ExperimentConfig()
    assert from_json(cfg.to_json()).to_dict() == cfg.to_dict()


def test_partial_config_fills_defaults():
    cfg = from_dict({"state": {"kind": "fock", "n": 2}, "fock_dim": 10})
    assert cfg.state.n == 2 and cfg.total_events == 6020
    assert cfg.to_dict()["state"] == {"kind": "fock", "n": 2}


@pytest.mark.parametrize("doc, match", [
    ({"colour": 1}, "unknown"),
    ({"state": {"kind": "squid"}}, "kind"),
    ({"state": {"kind": "fock", "n": 1, "s": 2.0}}, "not valid"),
    ({"grid": {"x_points": 4096, "spacing": 1}}, "unknown"),
    ({"version": 2}, "version"),
    ({"k_max": 2.5}, "integer"),
    ({"seed": True}, "integer"),
    ({"k_max": 0}, "k_max"),
    ({"allocation": {"strategy": "greedy"}}, "strategy"),
    ({"allocation": {"min_events": 900}}, "min_events"),
    ({"total_events": 10}, "total_events"),
    ({"state": {"kind": "squeezed", "s": -1.0}}, "s must"),
    ({"state": {"kind": "fock", "n": 200}}, "Fock level"),
    ({"grid": {"crossover_x": 12.005}}, "multiple"),
    ([], "object"),
])
def test_rejects_invalid(doc, match):
    with pytest.raises(ConfigError, match=match):
        from_dict(doc)


def test_invalid_json_and_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        from_json("{")
    with pytest.raises(ConfigError):
        load(tmp_path / "missing.json")


def test_overrides_are_validated():
    cfg = ExperimentConfig().with_overrides(seed=3, k_max=None)
    assert cfg.seed == 3 and cfg.k_max == 6
    with pytest.raises(ConfigError):
        ExperimentConfig().with_overrides(k_max=20)


def test_digest_tracks_content():
    a, b = ExperimentConfig(), ExperimentConfig().with_overrides(seed=1)
    assert a.digest() == ExperimentConfig().digest() != b.digest()


state_docs = st.one_of(
    st.fixed_dictionaries({"kind": st.just("coherent"), "alpha_abs": st.floats(0, 3),
                           "alpha_phase": st.floats(-7, 7)}),
    st.fixed_dictionaries({"kind": st.just("squeezed"), "alpha_abs": st.floats(0, 3),
                           "alpha_phase": st.floats(-7, 7), "s": st.floats(0.1, 10)}),
    st.fixed_dictionaries({"kind": st.just("fock"), "n": st.integers(0, 50)}),
)


@settings(max_examples=60, deadline=None)
@given(state_docs, st.integers(60, 300), st.integers(1, 60), st.integers(0, 2**31),
       st.sampled_from(["uniform", "psi1-optimal"]), st.integers(1, 8))
def test_parse_serialise_parse_is_identity(state, dim, n_theta, seed, strategy, k_max):
    doc = {"state": state, "fock_dim": dim, "n_theta": n_theta, "total_events": 5000,
           "seed": seed, "allocation": {"strategy": strategy}, "k_max": k_max}
    cfg = from_dict(doc)
    text = cfg.to_json()
    again = from_json(text)
    assert again.to_dict() == cfg.to_dict()
    assert json.loads(again.to_json()) == json.loads(text)
