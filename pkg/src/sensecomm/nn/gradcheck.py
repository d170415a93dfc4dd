"""Central finite-difference verification of analytic gradients.

The checker perturbs tensor entries in place, re-evaluates a scalar loss
closure, and compares (f(x+h) - f(x-h)) / 2h against the analytic gradient.
Relative error uses a floored denominator so that near-zero coordinates do
not amplify finite-difference noise:

    rel = |analytic - fd| / max(|analytic|, |fd|, 1e-4)

Run checks in 64-bit; at 32-bit the difference quotient itself is noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..rng import Rng

FD_STEP = 1e-5
REL_FLOOR = 1e-4


@dataclass
class TensorReport:
    name: str
    max_rel_error: float
    checked: int


@dataclass
class GradCheckReport:
    tolerance: float
    tensors: list[TensorReport] = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        return max((t.max_rel_error for t in self.tensors), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def summary(self) -> str:
        lines = [
            f"  {t.name:28s} rel_err={t.max_rel_error:.3e} ({t.checked} coords)"
            for t in self.tensors
        ]
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"  max rel error {self.max_rel_error:.3e} "
                     f"(tolerance {self.tolerance:.1e}) -> {verdict}")
        return "\n".join(lines)


def _coords(size: int, max_coords: int | None, rng: Rng | None) -> np.ndarray:
    if max_coords is None or size <= max_coords:
        return np.arange(size)
    if rng is None:
        rng = Rng(0)
    return np.sort(rng.permutation(size)[:max_coords])


def check_gradients(loss_fn: Callable[[], float],
                    tensors: dict[str, np.ndarray],
                    analytic: dict[str, np.ndarray],
                    tolerance: float = 1e-4,
                    step: float = FD_STEP,
                    max_coords: int | None = None,
                    rng: Rng | None = None) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    ``loss_fn`` must recompute the loss from the current contents of the
    arrays in ``tensors`` (they are perturbed in place and restored). With
    ``max_coords`` set, a deterministic random subset of entries per tensor
    is checked; otherwise every entry is.
    """
    report = GradCheckReport(tolerance=tolerance)
    for name, arr in tensors.items():
        an = analytic[name]
        if an.shape != arr.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        flat = arr.reshape(-1)
        an_flat = an.reshape(-1)
        worst = 0.0
        idx = _coords(flat.size, max_coords, rng)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + step
            f_plus = loss_fn()
            flat[i] = orig - step
            f_minus = loss_fn()
            flat[i] = orig
            fd = (f_plus - f_minus) / (2.0 * step)
            denom = max(abs(an_flat[i]), abs(fd), REL_FLOOR)
            worst = max(worst, abs(an_flat[i] - fd) / denom)
        report.tensors.append(TensorReport(name, worst, len(idx)))
    return report
