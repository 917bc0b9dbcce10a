"""Central finite-difference verification of reverse-mode gradients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ParamSet
from .tensor import no_grad

# Absolute scale below which gradients count as zero: about 100x the roundoff
# of a central difference (|f| * machine epsilon / eps ~ 1e-11 at eps = 1e-5).
GRAD_FLOOR = 1e-6


class NonDeterministicError(RuntimeError):
    pass


@dataclass
class GradCheckReport:
    max_rel_error: float
    checked: dict = field(default_factory=dict)  # group -> number of coordinates
    group_errors: dict = field(default_factory=dict)  # group -> max relative error
    worst: tuple = ()  # (param name, flat index, analytic, numeric)


def _rel(a, n, floor):
    return abs(a - n) / max(abs(a), abs(n), floor)


def finite_diff_report(f, params: ParamSet, eps=1e-5, max_coords=512, groups=None,
                       rng=None, floor=GRAD_FLOOR) -> GradCheckReport:
    """Compare ``backward()`` gradients of ``f()`` with central differences.

    ``f`` takes no arguments and returns a scalar :class:`Tensor` built from
    ``params``. Coordinates are sampled per group (default: one group per
    parameter), at most ``max_coords`` per group. The per-coordinate error is
    ``|a - n| / max(|a|, |n|, floor)``.
    """
    if not (1e-6 <= eps <= 1e-3):
        raise ValueError("eps must lie in [1e-6, 1e-3]")
    rng = np.random.default_rng(0) if rng is None else rng
    params.zero_grad()
    loss = f()
    base = loss.data.copy()
    loss.backward()
    analytic = {n: params.grad(n).copy() for n in params}
    with no_grad():
        again = f().data
    if again.tobytes() != base.tobytes():
        raise NonDeterministicError("f() returned different values on repeated evaluation")

    if groups is None:
        groups = {n: [n] for n in params}
    report = GradCheckReport(max_rel_error=0.0)
    for gname, names in groups.items():
        coords = [(n, i) for n in names for i in range(params[n].size)]
        if len(coords) > max_coords:
            pick = rng.choice(len(coords), size=max_coords, replace=False)
            coords = [coords[i] for i in sorted(pick)]
        worst = 0.0
        for n, i in coords:
            p = params[n]
            flat = p.data.reshape(-1)
            orig = flat[i]
            with no_grad():
                flat[i] = orig + eps
                fp = float(f().data)
                flat[i] = orig - eps
                fm = float(f().data)
            flat[i] = orig
            num = (fp - fm) / (2.0 * eps)
            a = float(analytic[n].reshape(-1)[i])
            err = _rel(a, num, floor)
            if err > worst:
                worst = err
            if err > report.max_rel_error:
                report.max_rel_error = err
                report.worst = (n, i, a, num)
        report.checked[gname] = len(coords)
        report.group_errors[gname] = worst
    params.zero_grad()
    return report


def finite_diff_check(f, params: ParamSet, eps=1e-5, max_coords=512, rng=None) -> float:
    """Maximum relative error over at most ``max_coords`` sampled coordinates per parameter."""
    return finite_diff_report(f, params, eps=eps, max_coords=max_coords, rng=rng).max_rel_error
