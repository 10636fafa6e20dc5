"""Online adaptation of a GmmModel to virtual and non-severe real drifts."""
from __future__ import annotations

import numpy as np

from .gmm import Gaussian, GmmModel

NO_GAUSSIAN = -1


def gaussian_close(model: GmmModel, x, y: int):
    """Nearest same-class component and its pertinence (density of ``x``).

    Components of other classes score 0. Returns ``(NO_GAUSSIAN, 0.0)`` when
    class ``y`` has no component.
    """
    same = model.labels == y
    if not same.any():
        return NO_GAUSSIAN, 0.0
    scores = np.where(same, model.densities(x), 0.0)
    idx = int(np.argmax(scores))
    if scores[idx] == 0.0:
        # every same-class density underflowed; pick the first one of class y
        idx = int(np.flatnonzero(same)[0])
    return idx, float(scores[idx])


def update_gaussian(model: GmmModel, index: int, x, posterior: float | None = None,
                    literal_covariance: bool = False) -> GmmModel:
    """Incremental update of one component from a single observation.

    ``posterior`` defaults to the model-wide posterior of ``index`` at ``x``;
    passing it explicitly is used to force ``P = 1``.

    The covariance moves towards the outer product of the residual
    (``C - dmu dmu^T + rate * (r r^T - C)``). ``literal_covariance=True``
    uses the reversed bracket ``rate * (C - r r^T)`` instead, which grows the
    covariance for nearby points and shrinks it for distant ones.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if not 0 <= index < len(model):
        raise IndexError(f"gaussian index {index} out of range")
    p = float(model.posterior(x)[index]) if posterior is None else float(posterior)
    model.sp[index] += p
    rate = p / model.sp[index]
    old_mean = model.means[index].copy()
    new_mean = old_mean + rate * (x - old_mean)
    shift = new_mean - old_mean
    resid = x - new_mean
    cov = model.covs[index]
    if literal_covariance:
        cov = cov - np.outer(shift, shift) + rate * (cov - np.outer(resid, resid))
    else:
        cov = cov - np.outer(shift, shift) + rate * (np.outer(resid, resid) - cov)
    model.means[index] = new_mean
    model.set_covariance(index, cov)
    model.renormalize_from_sp()
    return model


def create_gaussian(model: GmmModel, x, y: int) -> GmmModel:
    """Add a component centred on ``x`` with covariance ``cfc * I`` and ``sp = 1``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    model.append(Gaussian(x, model.cfc * np.eye(model.dim), 1.0, 1.0, int(y)))
    model.renormalize_from_sp()
    return model


def non_severe_adaptation(model: GmmModel, x, y: int) -> bool:
    """Update the nearest same-class component; grow the model if ``x`` is out of reach.

    Returns True when a component was created.
    """
    idx, pertinence = gaussian_close(model, x, y)
    if idx == NO_GAUSSIAN:
        create_gaussian(model, x, y)
        return True
    update_gaussian(model, idx, x)
    if pertinence < model.theta:
        create_gaussian(model, x, y)
        model.theta = pertinence
        return True
    return False
