"""Acceptance suite: one test (and one pass/fail line) per criterion.

Run with ``pytest -v tests/test_acceptance.py`` to see the per-criterion
verdicts; each test also prints an explicit PASS line on success.
"""

import itertools
import math
import random

import numpy as np
import pytest

from conftest import GAMES, automaton_for, game_for, pipeline_config

from jumplab.analysis import (CORPUS_LABELS, featurize, generate_corpus,
                              kmeans_scan, pca)
from jumplab.automaton import AutomatonSpec, ModeParams
from jumplab.fit import JumpModel, export_model, import_model
from jumplab.framelog import (BUTTONS, ExperimentLog, Frame, SpriteEntry,
                              TrialRecord, parse_log, write_log)
from jumplab.harness import (ProtocolConfig, SyntheticGame, SyntheticGameSpec,
                             run_protocol)
from jumplab.pipeline import learn_model
from jumplab.spritemerge import (CooccurrenceStats, accumulate_stats,
                                 build_merge_map, npmi)
from jumplab.tracker import (NEW_TRACK, Track, TrackerConfig, assign,
                             likelihood, run_tracker)
from jumplab.spritemerge import MergedSprite


def ok(message):
    print(f"\nACCEPTANCE PASS: {message}")


def within(got, want, rel, floor):
    return abs(got - want) <= max(rel * abs(want), floor)


def test_criterion_1_round_trip_parameter_recovery(learned, extract_seconds):
    """min/max hold and has_control exact; gravity within max(2%, 0.01);
    resets within max(2%, 0.05); <= 30 s per game."""
    for name, (_, kw) in GAMES.items():
        model, fit_secs = learned[name]
        total = fit_secs + extract_seconds[name]
        assert total <= 30.0, f"{name}: {total:.1f} s"
        assert model.min_hold == kw["min_hold"], name
        assert model.max_hold == kw["max_hold"], name
        assert model.has_control == kw["has_control"], name
        for mode in ("up_control", "up_fixed", "down"):
            want = kw[mode]
            if want is None:
                assert getattr(model, mode) is None
                continue
            got = getattr(model, mode)
            assert within(got.gravity, want.gravity, 0.02, 0.01), \
                f"{name}.{mode}.gravity {got.gravity} vs {want.gravity}"
            assert within(got.reset, want.reset, 0.02, 0.05), \
                f"{name}.{mode}.reset {got.reset} vs {want.reset}"
    ok("round-trip recovery within tolerance for all 6 parameterizations")


def test_criterion_2_protocol_fidelity(logs):
    """Default config: 120 trials, holds 1..120, >= 120 wait frames."""
    for name, log in logs.items():
        assert len(log.trials) == 120, name
        assert [t.hold_frames for t in log.trials] == list(range(1, 121))
        for t in log.trials:
            assert len(t.frames) - t.hold_frames >= 120
    ok("default protocol: 120 trials, holds 1..120, >= 120 wait frames")


def test_criterion_3_metroid_hold_bound_fixture():
    """min_hold = 10: trials 1-10 byte-identical, trial 11 differs."""
    spec = AutomatonSpec(
        up_control=ModeParams(gravity=-0.12, reset=4.8),
        up_fixed=ModeParams(gravity=-0.12, reset=0.0),
        down=ModeParams(gravity=-0.12, reset=0.0),
        min_hold=10, max_hold=18, has_control=True)
    game = SyntheticGame(SyntheticGameSpec(archetype="VELOCITY_CUT",
                                           automaton=spec))
    log = run_protocol(game, ProtocolConfig(trial_count=12, wait_frames=100))

    def sprite_bytes(trial, n_frames):
        return repr([f.sprites for f in trial.frames[:n_frames]]).encode()

    n = len(log.trials[0].frames)
    reference = sprite_bytes(log.trials[0], n)
    for trial in log.trials[1:10]:
        assert sprite_bytes(trial, n) == reference, trial.hold_frames
    assert sprite_bytes(log.trials[10], n) != reference
    ok("min_hold=10 fixture: trials 1-10 identical, trial 11 differs")


def test_criterion_4_merging(logs):
    """One 8-member group among decorations; exact NPMI anchors."""
    stats = accumulate_stats(logs["mario"])
    merge_map = build_merge_map(stats, 0.1)
    eights = [g for g in merge_map.groups if len(g) == 8]
    assert len(eights) == 1
    assert {k.tile_index for k in eights[0]} == set(range(0x10, 0x18))

    from jumplab.framelog import SpriteKey
    ka = SpriteKey(0, 0, False, False, False)
    kb = SpriteKey(1, 0, False, False, False)

    def anchor_stats(on_a, on_b, touch_ab, frames):
        on = np.array([on_a, on_b], np.int64)
        touch = np.array([[on_a, touch_ab], [touch_ab, on_b]], np.int64)
        return CooccurrenceStats((ka, kb), on, touch, frames)

    assert npmi(anchor_stats(10, 10, 10, 10), ka, kb) == 1.0
    assert npmi(anchor_stats(2, 2, 1, 4), ka, kb) == 0.0
    assert npmi(anchor_stats(10, 10, 0, 10), ka, kb) == -1.0
    ok("merging: single 8-member group; NPMI anchors 1.0 / 0.0 / -1.0 exact")


def test_criterion_5_tracking():
    """Flicker <= 4 keeps identity, 5-frame gap splits, matching equals
    the brute-force max-weight oracle on all instances with <= 6 nodes."""
    cfg = TrackerConfig()

    def det(x, y):
        return MergedSprite(0, (x, y, x, y))

    def frames_with_gap(gap):
        return [(f, [] if 8 <= f < 8 + gap else [det(60 + f, 100)])
                for f in range(20)]

    for gap in (1, 2, 3, 4):
        assert len(run_tracker(cfg, frames_with_gap(gap))) == 1
    assert len(run_tracker(cfg, frames_with_gap(5))) == 2

    init_w = likelihood(cfg, cfg.initiation_distance)
    rng = np.random.default_rng(23)
    for nd in range(1, 6):
        for nt in range(0, 7 - nd):
            for _ in range(25):
                dets = [det(int(rng.integers(0, 120)),
                            int(rng.integers(0, 120))) for _ in range(nd)]
                trks = [Track(i, 0, {0: (int(rng.integers(0, 120)),
                                         int(rng.integers(0, 120)))}, 0, 0)
                        for i in range(nt)]
                w = np.array([[likelihood(cfg, math.hypot(
                    d.anchor_x - t.last_point[0],
                    d.anchor_y - t.last_point[1])) for t in trks]
                    for d in dets]).reshape(nd, nt)
                best = -math.inf
                for r in range(min(nd, nt) + 1):
                    for ds in itertools.combinations(range(nd), r):
                        for ts in itertools.permutations(range(nt), r):
                            best = max(best, (nd - r) * init_w
                                       + sum(w[d, t]
                                             for d, t in zip(ds, ts)))
                matches = assign(cfg, trks, dets)
                got = sum(init_w if m == NEW_TRACK else w[d, m]
                          for d, m in enumerate(matches))
                assert got == pytest.approx(best, abs=1e-9)
    ok("tracking: flicker/gap behavior and max-weight matching oracle")


def test_criterion_6_segmentation_pragmatics(learned):
    """STAIR_STEP, LANDING_CLIP, GROUND_HOVER segment and fit without
    error; residuals reported; <= 1.5 px mean for physical archetypes."""
    cfg = ProtocolConfig(trial_count=20, wait_frames=80)
    for archetype in ("STAIR_STEP", "LANDING_CLIP", "GROUND_HOVER"):
        game = SyntheticGame(SyntheticGameSpec(archetype=archetype,
                                               automaton=automaton_for("mario")))
        log = run_protocol(game, cfg, archetype.lower(), "p")
        model = learn_model(log, pipeline_config())
        assert np.isfinite(model.residual_mean_abs), archetype
        assert np.isfinite(model.residual_max_abs), archetype
    for name, (model, _) in learned.items():
        assert model.residual_mean_abs <= 1.5, name
    ok("pragmatic archetypes fit cleanly; physical residual means <= 1.5 px")


def test_criterion_7_pca():
    """Fraction/contribution invariants, an SVD oracle up to 6x6, and
    <= 5 components reaching >= 75% on the bundled corpus."""
    from jumplab.analysis import FeatureMatrix

    rng = np.random.default_rng(31)
    for d in range(2, 7):
        for _ in range(4):
            x = rng.normal(size=(d + 5, d)) @ rng.normal(size=(d, d))
            std = (x - x.mean(axis=0)) / x.std(axis=0)
            matrix = FeatureMatrix(tuple(("g", str(i)) for i in range(len(x))),
                                   x, x.mean(axis=0), x.std(axis=0), std)
            result = pca(matrix)
            assert result.variance_fractions.sum() == pytest.approx(1.0,
                                                                    abs=1e-9)
            assert np.all(np.diff(result.variance_fractions) <= 1e-12)
            assert np.allclose(result.contributions.sum(axis=0), 100.0,
                               atol=1e-6)
            _, s, vt = np.linalg.svd(std - std.mean(axis=0),
                                     full_matrices=False)
            var = s ** 2 / (len(std) - 1)
            assert np.allclose(result.variance_fractions, var / var.sum(),
                               atol=1e-6)
            for i in range(d):
                if var[i] / var.sum() > 1e-9:
                    assert abs(float(result.components[i] @ vt[i])) == \
                        pytest.approx(1.0, abs=1e-6)

    models, _, _ = generate_corpus()
    corpus_pca = pca(featurize(models))
    assert corpus_pca.variance_fractions[:5].sum() >= 0.75
    ok("PCA invariants, SVD oracle, and corpus scree (<= 5 PCs for 75%)")


def test_criterion_8_kmeans():
    """WCSS non-increasing over 2..15; corpus elbow k=3 with >= 90%
    archetype agreement up to label permutation."""
    models, labels, _ = generate_corpus()
    result = kmeans_scan(featurize(models))
    scan = [result.wcss_scan[k] for k in range(2, 16)]
    assert all(a >= b - 1e-9 for a, b in zip(scan, scan[1:]))
    assert result.k == 3
    want = np.array([CORPUS_LABELS.index(lab) for lab in labels])
    agreement = max(
        float((np.array([p[g] for g in result.assignments]) == want).mean())
        for p in itertools.permutations(range(3)))
    assert agreement >= 0.90
    ok(f"k-means: monotone scan, elbow k=3, {agreement:.0%} agreement")


def _random_log(rng):
    trials = []
    holds = sorted(rng.sample(range(1, 60), rng.randint(1, 3)))
    for hold in holds:
        frames = []
        numbers = sorted(rng.sample(range(0, 150), rng.randint(1, 4)))
        for num in numbers:
            sprites = tuple(
                SpriteEntry(rng.randint(0, 255), rng.randint(0, 255),
                            rng.randint(0, 239), rng.randint(0, 3),
                            rng.random() < 0.5, rng.random() < 0.5,
                            rng.random() < 0.5, 8,
                            rng.choice((8, 16)))
                for _ in range(rng.randint(0, 4)))
            buttons = frozenset(b for b in BUTTONS if rng.random() < 0.2)
            frames.append(Frame(num, sprites, buttons))
        trials.append(TrialRecord(hold, tuple(frames)))
    return ExperimentLog(f"g{rng.randint(0, 999)}", "c", tuple(trials))


def _random_model(rng):
    def params():
        return ModeParams(gravity=rng.uniform(-2, 2),
                          reset=rng.uniform(-5, 5),
                          multiplier=rng.uniform(-2, 2))

    has_control = rng.random() < 0.5
    min_hold = rng.randint(1, 20)
    max_hold = min_hold + rng.randint(1, 40) if has_control else min_hold
    return JumpModel(
        game_id=f"g{rng.randint(0, 999)}", character_id="c",
        up_fixed=params(), down=params(),
        up_control=params() if has_control else None,
        min_hold=min_hold, max_hold=max_hold, has_control=has_control,
        residual_mean_abs=rng.uniform(0, 3),
        residual_max_abs=rng.uniform(0, 9))


def test_criterion_9_format_round_trips():
    """>= 1000 randomized frame-log and model-file round trips."""
    rng = random.Random(17)
    for _ in range(600):
        log = _random_log(rng)
        assert parse_log(write_log(log)) == log
    for _ in range(600):
        model = _random_model(rng)
        assert import_model(export_model(model)) == model
    ok("1200 randomized format round trips (600 frame logs, 600 models)")


def test_criterion_10_cli_determinism(tmp_path):
    """Every subcommand, run twice with identical inputs, is byte-identical."""
    from cli_workflow import run_all_subcommands

    first = run_all_subcommands(tmp_path / "a")
    second = run_all_subcommands(tmp_path / "b")
    assert first.keys() == second.keys()
    for name in first:
        assert first[name] == second[name], name
    ok(f"CLI determinism: {len(first)} artifacts byte-identical across reruns")
