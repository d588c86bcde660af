"""Shared fixtures: archetype parameterizations and cached pipeline runs."""

from __future__ import annotations

import pytest

from jumplab.automaton import AutomatonSpec, ModeParams
from jumplab.fit import FitConfig
from jumplab.harness import (ProtocolConfig, SyntheticGame, SyntheticGameSpec,
                             run_protocol)
from jumplab.pipeline import PipelineConfig, extract, fit_modes, learn_model


def P(gravity, reset, multiplier=0.0):
    return ModeParams(gravity=gravity, reset=reset, multiplier=multiplier)


# Acceptance parameterizations: two per archetype, one Metroid-style
# up/down-symmetric case and one Mario-style asymmetric case included.
# Controlled cases keep max_hold below the up-control apex time
# -reset/(2*gravity) so every release happens while still rising.
GAMES = {
    "mario": ("PARABOLIC_CONTROLLED", dict(
        up_control=P(-0.08, 3.2), up_fixed=P(-0.15, 0.0, 1.0),
        down=P(-0.25, 0.0), min_hold=2, max_hold=14, has_control=True)),
    "mario_b": ("PARABOLIC_CONTROLLED", dict(
        up_control=P(-0.1, 4.0), up_fixed=P(-0.2, 0.5, 0.9),
        down=P(-0.3, 0.0), min_hold=3, max_hold=18, has_control=True)),
    "metroid": ("VELOCITY_CUT", dict(
        up_control=P(-0.12, 4.8), up_fixed=P(-0.12, 0.0),
        down=P(-0.12, 0.0), min_hold=6, max_hold=18, has_control=True)),
    "metroid_b": ("VELOCITY_CUT", dict(
        up_control=P(-0.09, 4.0), up_fixed=P(-0.09, 0.0),
        down=P(-0.09, 0.0), min_hold=5, max_hold=20, has_control=True)),
    "fixed": ("FIXED", dict(
        up_control=None, up_fixed=P(-0.18, 4.5), down=P(-0.15, 0.0),
        min_hold=1, max_hold=1, has_control=False)),
    "fixed_b": ("FIXED", dict(
        up_control=None, up_fixed=P(-0.22, 4.5), down=P(-0.12, 0.2),
        min_hold=1, max_hold=1, has_control=False)),
}


def automaton_for(name: str) -> AutomatonSpec:
    _, kw = GAMES[name]
    return AutomatonSpec(ground_screen_y=184, **kw)


def game_for(name: str, **extra) -> SyntheticGame:
    archetype, _ = GAMES[name]
    return SyntheticGame(SyntheticGameSpec(archetype=archetype,
                                           automaton=automaton_for(name),
                                           **extra))


def log_for(name: str, **extra):
    return run_protocol(game_for(name, **extra), ProtocolConfig(),
                        game_id=name, character_id="player")


def pipeline_config() -> PipelineConfig:
    return PipelineConfig(fit=FitConfig(multiplier_min_spread=1.0))


@pytest.fixture(scope="session")
def logs():
    return {name: log_for(name) for name in GAMES}


@pytest.fixture(scope="session")
def _timed_extractions(logs):
    import time

    cfg = pipeline_config()
    out = {}
    for name, log in logs.items():
        t0 = time.perf_counter()
        out[name] = (extract(log, cfg), time.perf_counter() - t0)
    return out


@pytest.fixture(scope="session")
def extractions(_timed_extractions):
    return {name: ex for name, (ex, _) in _timed_extractions.items()}


@pytest.fixture(scope="session")
def extract_seconds(_timed_extractions):
    return {name: secs for name, (_, secs) in _timed_extractions.items()}


@pytest.fixture(scope="session")
def learned(logs, extractions):
    """name -> (model, elapsed seconds), reusing the cached extraction."""
    import time

    from jumplab.fit import assemble_model

    cfg = pipeline_config()
    out = {}
    for name, log in logs.items():
        t0 = time.perf_counter()
        ex = extractions[name]
        params = fit_modes(ex, cfg)
        traces = {hold: tr.h for hold, tr in ex.traces.items()}
        model = assemble_model(log.game_id, log.character_id, ex.bounds,
                               params, traces)
        out[name] = (model, time.perf_counter() - t0)
    return out
