"""Forward measurement model for the round-trip TOA exchange.

A localization epoch produces 2M stacked measurements, all expressed in
range-equivalent meters:

* M request measurements, one per anchor, taken when the anchors receive
  the device's request signal:  ||p_i - p|| - c*b
* M response measurements, taken when the device receives each anchor's
  reply after delay dt_i:  ||p_i - p - v*dt_i|| + c*b + c*omega*dt_i

where p, v, b, omega are the device state at request transmission time.
All noises are independent zero-mean Gaussians.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .scenario import NoiseSpec, ResponseSchedule, Scenario, UdState

# Distances below this are treated as a degenerate device/anchor overlap.
MIN_RANGE_M = 1e-9


class DegenerateGeometry(ValueError):
    """Device coincides (numerically) with an anchor."""


class InvalidNoise(ValueError):
    """Noise specification unusable for weighting (non-positive sigma)."""


@dataclass(frozen=True)
class ToaMeasurementSet:
    """2M stacked range-equivalent measurements with their weighting matrix."""

    request: np.ndarray  # (M,) m
    response: np.ndarray  # (M,) m
    schedule: ResponseSchedule
    weights: np.ndarray  # (2M, 2M) diagonal, positive

    def __post_init__(self):
        req = np.asarray(self.request, dtype=float)
        resp = np.asarray(self.response, dtype=float)
        m = req.size
        if resp.size != m or self.schedule.delays.size != m:
            raise ValueError("request, response and schedule lengths must match")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (2 * m, 2 * m):
            raise ValueError(f"weights must be {2*m}x{2*m}, got {w.shape}")
        diag = np.diag(w)
        if np.any(diag <= 0.0) or np.any(w != np.diag(diag)):
            raise ValueError("weights must be diagonal with positive diagonal")
        object.__setattr__(self, "request", req)
        object.__setattr__(self, "response", resp)
        object.__setattr__(self, "weights", w)

    @property
    def count(self) -> int:
        return self.request.size

    @property
    def stacked(self) -> np.ndarray:
        """The 2M measurement vector [request, response]."""
        return np.concatenate([self.request, self.response])

    def to_json(self, noise: NoiseSpec | None = None) -> str:
        doc = {
            "request_m": self.request.tolist(),
            "response_m": self.response.tolist(),
            "delta_t_s": self.schedule.delays.tolist(),
            "sigma_m": {
                "request": (1.0 / np.sqrt(np.diag(self.weights)[: self.count])).tolist(),
                "response": float(1.0 / np.sqrt(np.diag(self.weights)[self.count])),
            }
            if noise is None
            else {
                "request": noise.sigma_request.tolist(),
                "response": noise.sigma_response,
            },
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ToaMeasurementSet":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_dict(cls, doc: dict) -> "ToaMeasurementSet":
        sigma = doc["sigma_m"]
        noise = NoiseSpec(np.asarray(sigma["request"], dtype=float), float(sigma["response"]))
        return cls(
            request=np.asarray(doc["request_m"], dtype=float),
            response=np.asarray(doc["response_m"], dtype=float),
            schedule=ResponseSchedule(np.asarray(doc["delta_t_s"], dtype=float)),
            weights=build_weights(noise),
        )


def _checked_norms(diffs: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(np.atleast_2d(diffs), axis=-1)
    if np.any(d < MIN_RANGE_M):
        raise DegenerateGeometry("device position coincides with an anchor")
    return d


def model_request_toa(anchor: np.ndarray, ud: UdState) -> float:
    """Noise-free request measurement ||p_i - p|| - c*b, in meters."""
    d = _checked_norms(np.asarray(anchor, dtype=float) - ud.position)
    return float(d[0]) - ud.clock_offset_m


def model_response_toa(anchor: np.ndarray, ud: UdState, delta_t: float) -> float:
    """Noise-free response measurement after delay delta_t, in meters."""
    if delta_t <= 0.0:
        raise ValueError("delta_t must be positive")
    disp = np.asarray(anchor, dtype=float) - ud.position - ud.velocity * delta_t
    d = _checked_norms(disp)
    return float(d[0]) + ud.clock_offset_m + ud.clock_drift_mps * delta_t


def model_stacked(
    anchors_m: np.ndarray, ud: UdState, schedule: ResponseSchedule
) -> np.ndarray:
    """Vectorized noise-free [request, response] model, 2M entries."""
    pos = np.asarray(anchors_m, dtype=float)
    dt = schedule.delays
    d_req = _checked_norms(pos - ud.position)
    d_resp = _checked_norms(pos - ud.position - ud.velocity * dt[:, None])
    cb = ud.clock_offset_m
    return np.concatenate([d_req - cb, d_resp + cb + ud.clock_drift_mps * dt])


def build_weights(noise: NoiseSpec) -> np.ndarray:
    """Diagonal 2M x 2M weighting matrix diag(1/sigma_i^2, ..., 1/sigma^2, ...)."""
    if np.any(noise.sigma_request <= 0.0) or noise.sigma_response <= 0.0:
        raise InvalidNoise("weighting requires strictly positive sigmas")
    m = noise.sigma_request.size
    diag = np.concatenate(
        [1.0 / noise.sigma_request**2, np.full(m, 1.0 / noise.sigma_response**2)]
    )
    return np.diag(diag)


def generate(
    scenario: Scenario,
    rng: np.random.Generator,
    noise: NoiseSpec | None = None,
) -> ToaMeasurementSet:
    """Draw one noisy measurement epoch from ground truth.

    Request noises are drawn first, then response noises, so two scenarios
    differing only in their schedules produce identical request halves for
    the same generator state. Response noises are i.i.d. per anchor.

    When any sigma is zero the measurements are exact at that index and the
    weighting matrix falls back to identity (a zero-variance measurement has
    no finite ML weight).
    """
    if noise is None:
        noise = scenario.noise
    pos = scenario.anchors.positions
    ud = scenario.ud
    dt = scenario.schedule.delays
    m = scenario.anchors.count

    model = model_stacked(pos, ud, scenario.schedule)
    eps_req = rng.normal(0.0, 1.0, size=m) * noise.sigma_request
    eps_resp = rng.normal(0.0, 1.0, size=m) * noise.sigma_response

    if np.all(noise.sigma_request > 0.0) and noise.sigma_response > 0.0:
        weights = build_weights(noise)
    else:
        weights = np.eye(2 * m)

    return ToaMeasurementSet(
        request=model[:m] + eps_req,
        response=model[m:] + eps_resp,
        schedule=scenario.schedule,
        weights=weights,
    )
