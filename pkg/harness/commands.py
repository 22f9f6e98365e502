"""
harness.commands module.

This module contains configuration parsing and the dispatch of every CLI
command to the protocol modules.
"""

import math
import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from config.constants import APP_VERSION
from harness.validate import run_validation
from models.experiment_config import ExperimentConfig, load_config
from models.report import ReportBundle
from protocols.adversary import (
    AttackKind, AttackModel, OutcomeWeights, predicted_contrast, steal_resend_curve,
)
from protocols.qkd import run_session
from protocols.teleportation import added_noise_variance, teleport_monte_carlo, teleport_multiplexed
from spectral.channels import CrosstalkModel, CrosstalkMode, crosstalk_error_metric, sample_neighbour_grid
from spectral.optics import design_optics
from utils.errors import MqpError, ValidationFailure
from utils.logger import dbg
from utils.seeding import child_seed, stream
from workers.sweep_worker import run_sweep


def parse_config(path: Optional[Union[str, Path]] = None,
                 overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Load, merge and validate an experiment file; CLI flags go in `overrides`."""
    return load_config(path, overrides)


def _sweep_attack(kind: AttackKind, t: float, idealized: bool,
                  weights: OutcomeWeights = OutcomeWeights.TABULATED) -> AttackModel:
    if kind is AttackKind.STEAL:
        return AttackModel.steal(1.0 - t)
    if kind is AttackKind.STEAL_RESEND:
        return AttackModel.steal_resend(1.0 - t, weights=weights)
    if kind is AttackKind.INTERCEPT_RESEND:
        return AttackModel.intercept_resend(idealized)
    return AttackModel.none()


def _pooled_contrast(report) -> Tuple[float, float]:
    values = [v for v in report.contrast if v is not None]
    if not values:
        return math.nan, math.nan
    sems = [s for v, s in zip(report.contrast, report.contrast_sem) if v is not None]
    return float(np.mean(values)), float(math.sqrt(sum(s * s for s in sems)) / len(sems))


def _run_qkd(cfg: ExperimentConfig, bundle: ReportBundle) -> None:
    session = cfg.session_config()
    attack = cfg.attack_model()
    report = run_session(session, attack, cfg.mode)
    bundle.records["session"] = report.to_dict()
    table = bundle.table("channels", ("channel", "V", "V_sem", "I_max", "I_min", "qber",
                                      "V_closed_form"))
    for c in range(session.channels):
        predicted = predicted_contrast(attack, session.gains[c], session.bob_gain_ratio,
                                       session.transmission[c])
        table.add(c, report.contrast[c], report.contrast_sem[c], report.i_max[c],
                  report.i_min[c], report.channel_qber[c], predicted)


def _attack_sweep_point(cfg: ExperimentConfig, kind: AttackKind, index: int, t: float,
                        gain: float) -> tuple:
    a = cfg.section("attack")
    attack = _sweep_attack(kind, t, bool(a["idealized"]), OutcomeWeights(a["outcome_weights"]))
    line = 1.0
    if kind in (AttackKind.NONE, AttackKind.INTERCEPT_RESEND):
        line = t
    session = cfg.session_config(seed=child_seed(cfg.seed, index), gain=gain)
    if line != 1.0:
        session = replace(session, transmission=line)
    report = run_session(session, attack, cfg.mode)
    v, sem = _pooled_contrast(report)
    predicted = predicted_contrast(attack, gain, session.bob_gain_ratio, session.transmission[0])
    dbg(f"Sweep {kind.value}: T = {t:.3f}, V = {v:.6f} (atteso {predicted:.6f})")
    return t, v, sem, predicted, report.qber


def _attack_sweep(cfg: ExperimentConfig, bundle: ReportBundle) -> None:
    sweep = cfg.section("sweep")
    kind = AttackKind(sweep["attack"])
    gain = float(sweep["gain"])
    grid = cfg.t_grid()
    bundle.records["sweep"] = {"attack": kind.value, "gain": gain, "points": len(grid),
                               "outcome_weights": cfg.section("attack")["outcome_weights"]}
    tasks: List[Callable[[], Any]] = [
        (lambda i=i, t=t: _attack_sweep_point(cfg, kind, i, t, gain)) for i, t in enumerate(grid)]
    rows = run_sweep(tasks, cfg.workers)
    columns = ["T", "V_mc", "V_sem", "V_closed_form", "qber"]
    if kind is AttackKind.STEAL_RESEND:
        columns.extend(("V_steal", "V_closed_form_derived"))
        extra = {t: (st, sr) for t, sr, st in steal_resend_curve(gain, grid, OutcomeWeights.DERIVED)}
    table = bundle.table("contrast", columns)
    for row in rows:
        if kind is AttackKind.STEAL_RESEND:
            row = row + extra[row[0]]
        table.add(*row)


def _teleport_point(cfg: ExperimentConfig, index: int, g: float) -> tuple:
    t = cfg.section("teleport")
    settings = cfg.squeeze_settings(g)
    n = int(t["samples"])
    channels = int(t["channels"])
    if channels > 1:
        rngs = [stream(cfg.seed, index, c) for c in range(channels)]
        stats = teleport_multiplexed([settings] * channels, t["mean"], n, rngs)
        added = float(np.mean([s.added_variance.mean() for s in stats.channels]))
        cross = stats.max_cross_correlation
    else:
        stats = teleport_monte_carlo(t["mean"], settings, n, stream(cfg.seed, index))
        added = float(stats.added_variance.mean())
        cross = math.nan
    return g, added, added_noise_variance(g), cross


def _run_teleport(cfg: ExperimentConfig, bundle: ReportBundle) -> None:
    grid = cfg.g_grid()
    rows = run_sweep([(lambda i=i, g=g: _teleport_point(cfg, i, g)) for i, g in enumerate(grid)],
                     cfg.workers)
    columns = ["g", "added_var_mc", "added_var_pred"]
    multiplexed = int(cfg.section("teleport")["channels"]) > 1
    if multiplexed:
        columns.append("max_cross_correlation")
    table = bundle.table("teleport", columns)
    for row in rows:
        table.add(*(row if multiplexed else row[:3]))


def _design_setup(cfg: ExperimentConfig, bundle: ReportBundle) -> None:
    args = cfg.optics_args()
    design = design_optics(**args)
    bundle.records["inputs"] = args
    bundle.records["design"] = design.to_dict()
    table = bundle.table("design", ("f_lens", "grating_period", "capacity"))
    table.add(design.f_lens, design.grating_period, design.capacity)


def _crosstalk_point(cfg: ExperimentConfig, index: int, leak: float):
    c = cfg.section("crosstalk")
    mode = CrosstalkMode(c["mode"])
    points = int(c["phase_points"])
    phis = np.linspace(0.0, 2 * math.pi, points, endpoint=False)
    left, right = cfg.leak_pair(leak)
    model = CrosstalkModel.tridiagonal(2, left, right, mode)
    rng = stream(cfg.seed, index)
    curves = tuple(
        crosstalk_error_metric(sample_neighbour_grid(model, phis, rng, int(c["repeats"]),
                                                     float(c["counts_scale"]), channel))
        for channel in (0, 1))
    base = cfg.session_config(seed=child_seed(cfg.seed, index), leak=leak)
    if base.channels < 2:
        base = replace(base, channels=3, gains=base.gains[0], transmission=base.transmission[0],
                       phase_offsets=base.phase_offsets[0],
                       crosstalk=CrosstalkModel.tridiagonal(3, left, right, mode))
    report = run_session(base, cfg.attack_model(), cfg.mode)
    dbg(f"Crosstalk: perdita ({left:.4g}, {right:.4g}), QBER {report.qber:.6f}")
    return leak, left, right, phis, curves, report.qber


def _crosstalk_test(cfg: ExperimentConfig, bundle: ReportBundle) -> None:
    leaks = [float(v) for v in cfg.section("crosstalk")["leak_grid"]]
    rows = run_sweep([(lambda i=i, e=e: _crosstalk_point(cfg, i, e)) for i, e in enumerate(leaks)],
                     cfg.workers)
    err = bundle.table("error", ("leak", "phi_neighbour", "err1", "err1_sigma", "err2", "err2_sigma"))
    qber = bundle.table("qber", ("leak", "leak_left", "leak_right", "qber",
                                 "err1_amplitude", "err2_amplitude"))
    for leak, left, right, phis, (first, second), q in rows:
        for k, phi in enumerate(phis):
            err.add(leak, phi, first[0][k], first[1][k], second[0][k], second[1][k])
        qber.add(leak, left, right, q, float(np.max(np.abs(first[0]))),
                 float(np.max(np.abs(second[0]))))


def _validate(cfg: ExperimentConfig, bundle: ReportBundle) -> None:
    results = run_validation()
    table = bundle.table("properties", ("property", "passed", "detail"))
    for r in results:
        table.add(r.name, r.passed, r.detail)
    failed = [r.name for r in results if not r.passed]
    bundle.records["passed"] = not failed
    if failed:
        raise ValidationFailure(f"properties failed: {', '.join(failed)}")


COMMANDS: Dict[str, Callable[[ExperimentConfig, ReportBundle], None]] = {
    "run-qkd": _run_qkd,
    "attack-sweep": _attack_sweep,
    "run-teleport": _run_teleport,
    "design-setup": _design_setup,
    "crosstalk-test": _crosstalk_test,
    "validate": _validate,
}


def execute(cfg: ExperimentConfig) -> ReportBundle:
    """
    Dispatch one command.

    On failure the partial bundle is attached to the exception as `bundle`
    with its failure marker set, so the caller can still flush it.
    """
    bundle = ReportBundle(cfg.command, metadata={
        "seed": cfg.seed, "mode": cfg.mode.value, "version": APP_VERSION, "workers": cfg.workers})
    start = time.perf_counter()
    dbg(f"Esecuzione comando {cfg.command}")
    try:
        COMMANDS[cfg.command](cfg, bundle)
    except MqpError as e:
        bundle.failure = str(e)
        e.bundle = bundle
        raise
    finally:
        bundle.metadata["elapsed_s"] = round(time.perf_counter() - start, 3)
    return bundle
