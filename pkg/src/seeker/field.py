"""Scalar signal fields on the plane and on the real line.

Every field is a closed-form description (a kind tag plus real parameters)
so that it can be written into a scenario file and shipped to the compiled
integration kernel. Evaluation is vectorized over trailing ``(..., 2)``
point arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

DEFAULT_FD_STEP = 1e-5

# integer tags understood by the integration kernels
KIND_CODES = {
    "constant": 0,
    "linear": 1,
    "quadratic": 2,
    "ring_gaussian": 3,
    "gaussian_mixture": 4,
}


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class ScalarField:
    """Smooth scalar signal ``psi: R^2 -> R``.

    Use the classmethod constructors rather than building ``params`` by hand.
    The parameter layout per kind is

    * ``constant``: ``(c,)``
    * ``linear``: ``(a1, a2, b)`` for ``a . p + b``
    * ``quadratic``: ``(scale, c1, c2, offset)`` for ``scale |p - c|^2 + offset``
    * ``ring_gaussian``: ``(depth, width, ring_depth, sharpness, radius)`` for
      ``-depth exp(-|p|^2/width) - ring_depth exp(-sharpness (|p|^2 - radius^2)^2)``
    * ``gaussian_mixture``: ``(w, c1, c2, sigma)`` repeated, for
      ``sum_i w_i exp(-|p - c_i|^2 / (2 sigma_i^2))``
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise FieldError(f"unknown field kind {self.kind!r}")
        params = tuple(float(x) for x in self.params)
        object.__setattr__(self, "params", params)
        n = len(params)
        expected = {"constant": 1, "linear": 3, "quadratic": 4, "ring_gaussian": 5}
        if self.kind in expected and n != expected[self.kind]:
            raise FieldError(f"{self.kind} expects {expected[self.kind]} parameters, got {n}")
        if self.kind == "gaussian_mixture":
            if n == 0 or n % 4:
                raise FieldError("gaussian_mixture expects a multiple of 4 parameters")
            if any(s <= 0 for s in params[3::4]):
                raise FieldError("gaussian_mixture widths must be positive")
        if not all(np.isfinite(params)):
            raise FieldError("field parameters must be finite")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c: float) -> ScalarField:
        return cls("constant", (c,))

    @classmethod
    def linear(cls, a, b: float = 0.0) -> ScalarField:
        return cls("linear", (a[0], a[1], b))

    @classmethod
    def quadratic(cls, scale: float = 1.0, center=(0.0, 0.0), offset: float = 0.0) -> ScalarField:
        return cls("quadratic", (scale, center[0], center[1], offset))

    @classmethod
    def ring_gaussian(
        cls,
        depth: float = 5.0,
        width: float = 6.0,
        ring_depth: float = 0.5,
        sharpness: float = 4.0,
        radius: float = 2.0,
    ) -> ScalarField:
        """Deep central well surrounded by a shallow ring of local minima.

        The defaults give ``-5 exp(-|p|^2/6) - 0.5 exp(-4 (|p|^2 - 4)^2)``.
        """
        return cls("ring_gaussian", (depth, width, ring_depth, sharpness, radius))

    @classmethod
    def gaussian_mixture(cls, weights, centers, widths) -> ScalarField:
        weights = list(weights)
        centers = [tuple(c) for c in centers]
        widths = list(widths)
        if not (len(weights) == len(centers) == len(widths)):
            raise FieldError("weights, centers and widths must have equal length")
        flat: list[float] = []
        for w, c, s in zip(weights, centers, widths):
            flat.extend((w, c[0], c[1], s))
        return cls("gaussian_mixture", tuple(flat))

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        p = self.params
        if self.kind == "constant":
            return {"kind": "constant", "c": p[0]}
        if self.kind == "linear":
            return {"kind": "linear", "a": [p[0], p[1]], "b": p[2]}
        if self.kind == "quadratic":
            return {"kind": "quadratic", "scale": p[0], "center": [p[1], p[2]], "offset": p[3]}
        if self.kind == "ring_gaussian":
            keys = ("depth", "width", "ring_depth", "sharpness", "radius")
            return {"kind": "ring_gaussian", **dict(zip(keys, p))}
        comps = np.asarray(p).reshape(-1, 4)
        return {
            "kind": "gaussian_mixture",
            "weights": comps[:, 0].tolist(),
            "centers": comps[:, 1:3].tolist(),
            "widths": comps[:, 3].tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ScalarField:
        """Inverse of :meth:`to_dict`; missing optional keys take defaults.

        Raises ``FieldError`` for unknown kinds and ``KeyError`` for unknown
        or missing keys.
        """
        d = dict(d)
        kind = d.pop("kind")
        allowed = {
            "constant": {"c"},
            "linear": {"a", "b"},
            "quadratic": {"scale", "center", "offset"},
            "ring_gaussian": {"depth", "width", "ring_depth", "sharpness", "radius"},
            "gaussian_mixture": {"weights", "centers", "widths"},
        }
        if kind not in allowed:
            raise FieldError(f"unknown field kind {kind!r}")
        extra = set(d) - allowed[kind]
        if extra:
            raise KeyError(f"field.{sorted(extra)[0]}")
        if kind == "constant":
            return cls.constant(d["c"])
        if kind == "linear":
            return cls.linear(d["a"], d.get("b", 0.0))
        if kind == "quadratic":
            return cls.quadratic(d.get("scale", 1.0), d.get("center", (0.0, 0.0)), d.get("offset", 0.0))
        if kind == "ring_gaussian":
            return cls.ring_gaussian(**d)
        return cls.gaussian_mixture(d["weights"], d["centers"], d["widths"])

    # -- kernel encoding --------------------------------------------------

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    def packed(self) -> np.ndarray:
        return np.asarray(self.params, dtype=np.float64)

    def __call__(self, p):
        return evaluate(self, p)


def evaluate(field: ScalarField, p):
    """Evaluate ``psi`` at ``p``.

    ``p`` has shape ``(2,)`` or ``(..., 2)``; the result drops the last axis.
    A single point returns a Python float.
    """
    p = np.asarray(p, dtype=np.float64)
    x, y = p[..., 0], p[..., 1]
    prm = field.params
    kind = field.kind
    if kind == "constant":
        out = np.full(x.shape, prm[0])
    elif kind == "linear":
        out = prm[0] * x + prm[1] * y + prm[2]
    elif kind == "quadratic":
        dx, dy = x - prm[1], y - prm[2]
        out = prm[0] * (dx * dx + dy * dy) + prm[3]
    elif kind == "ring_gaussian":
        depth, width, ring_depth, sharpness, radius = prm
        s = x * x + y * y
        u = s - radius * radius
        out = -depth * np.exp(-s / width) - ring_depth * np.exp(-sharpness * u * u)
    else:
        out = np.zeros(x.shape)
        for w, c1, c2, sigma in np.asarray(prm).reshape(-1, 4):
            dx, dy = x - c1, y - c2
            out = out + w * np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    if out.ndim == 0:
        return float(out)
    return out


def gradient(field: ScalarField, p) -> np.ndarray:
    """Closed-form gradient of ``psi`` (shape ``(..., 2)``)."""
    p = np.asarray(p, dtype=np.float64)
    x, y = p[..., 0], p[..., 1]
    prm = field.params
    kind = field.kind
    if kind == "constant":
        gx = np.zeros(x.shape)
        gy = np.zeros(x.shape)
    elif kind == "linear":
        gx = np.full(x.shape, prm[0])
        gy = np.full(x.shape, prm[1])
    elif kind == "quadratic":
        gx = 2.0 * prm[0] * (x - prm[1])
        gy = 2.0 * prm[0] * (y - prm[2])
    elif kind == "ring_gaussian":
        depth, width, ring_depth, sharpness, radius = prm
        s = x * x + y * y
        u = s - radius * radius
        # d psi / d s, then chain rule with ds/dp = 2p
        dpsi_ds = (depth / width) * np.exp(-s / width) + ring_depth * 2.0 * sharpness * u * np.exp(
            -sharpness * u * u
        )
        gx = 2.0 * x * dpsi_ds
        gy = 2.0 * y * dpsi_ds
    else:
        gx = np.zeros(x.shape)
        gy = np.zeros(x.shape)
        for w, c1, c2, sigma in np.asarray(prm).reshape(-1, 4):
            dx, dy = x - c1, y - c2
            e = w * np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) / (sigma * sigma)
            gx = gx - dx * e
            gy = gy - dy * e
    return np.stack([gx, gy], axis=-1)


def grad_fd(func, p, step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Central-difference gradient of a planar scalar function.

    ``func`` is a :class:`ScalarField` or any callable taking ``(..., 2)``
    points. Component ``i`` is ``(f(p + step e_i) - f(p - step e_i)) / (2 step)``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if isinstance(func, ScalarField):
        field = func

        def func(q):
            return evaluate(field, q)

    p = np.asarray(p, dtype=np.float64)
    out = np.empty(p.shape)
    for i in range(2):
        e = np.zeros(2)
        e[i] = step
        out[..., i] = (np.asarray(func(p + e)) - np.asarray(func(p - e))) / (2.0 * step)
    return out


@dataclass(frozen=True)
class ScalarField1D:
    """Smooth scalar input-output map ``phi: R -> R``.

    ``polynomial`` stores ascending coefficients; ``gaussian_mixture`` stores
    ``(w, center, sigma)`` triples for ``sum_i w_i exp(-(x - c_i)^2 / (2 sigma_i^2))``.
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        params = tuple(float(x) for x in self.params)
        object.__setattr__(self, "params", params)
        if self.kind == "polynomial":
            if not params:
                raise FieldError("polynomial needs at least one coefficient")
        elif self.kind == "gaussian_mixture":
            if not params or len(params) % 3 or any(s <= 0 for s in params[2::3]):
                raise FieldError("gaussian_mixture expects (w, center, sigma>0) triples")
        else:
            raise FieldError(f"unknown 1-D field kind {self.kind!r}")

    @classmethod
    def polynomial(cls, coeffs) -> ScalarField1D:
        return cls("polynomial", tuple(coeffs))

    @classmethod
    def gaussian_mixture(cls, weights, centers, widths) -> ScalarField1D:
        flat = []
        for triple in zip(weights, centers, widths):
            flat.extend(triple)
        return cls("gaussian_mixture", tuple(flat))

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "polynomial":
            out = np.polynomial.polynomial.polyval(x, self.params)
        else:
            out = np.zeros(x.shape)
            for w, c, s in np.asarray(self.params).reshape(-1, 3):
                out = out + w * np.exp(-((x - c) ** 2) / (2.0 * s * s))
        if np.ndim(out) == 0:
            return float(out)
        return out


def source_location(field: ScalarField) -> tuple[float, float]:
    """Location of the global minimizer used to mark the source in plots.

    Exact for quadratic and ring kinds; for a mixture, the lowest-valued
    center; the origin when the field has no minimizer.
    """
    p = field.params
    if field.kind == "quadratic" and p[0] > 0:
        return (p[1], p[2])
    if field.kind == "gaussian_mixture":
        centers = np.asarray(p).reshape(-1, 4)[:, 1:3]
        best = int(np.argmin(evaluate(field, centers)))
        return (float(centers[best, 0]), float(centers[best, 1]))
    return (0.0, 0.0)


def ring_field() -> ScalarField:
    """The benchmark field with a ring of local minima at radius about 2."""
    return ScalarField.ring_gaussian()
