"""Data-generating processes, inverse-CDF samplers, and exact tail oracles.

Two sampling frameworks live here. In the first, the covariate drives the
tail exponent of the response: ``P(Y > y | X = x) = y**(-alpha(x))`` on
``[1, inf)``. In the second, the exponent is constant and the covariate
enters through location and scale: ``Y = beta(X) + scale(X) * U`` with a
heavy-tailed noise ``U``. The closed-form conditional densities and moments
of the covariate given a tail event -- exact when the exponent (resp. the
covariate pair) is uniformly distributed -- are exposed as oracle functions
so that simulation output can be checked against analytic truth.

All samplers draw from the block-keyed Philox streams in
:mod:`tailgauge.streams` and are bit-reproducible for a fixed seed
regardless of shard count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import t as student_t

from .errors import ConfigurationError, DomainError, InvalidDGPError
from .streams import block_rng, block_spans

__all__ = [
    "Affine",
    "Cosine",
    "ExpAffine",
    "Column",
    "UniformLaw",
    "RectangleLaw",
    "TailIndexDGP",
    "ExtremalQuantileDGP",
    "ObservationSet",
    "UniformTailOracle",
    "sample_tail_index",
    "sample_extremal_quantile",
    "pareto_tail_inverse",
    "abs_student_t_quantile",
    "pareto_quantile",
    "oracle_conditional_density",
    "oracle_conditional_moments",
    "density_bound_envelope",
    "extremal_limit_density",
    "extremal_finite_w_density",
    "conditional_quantile",
    "builtin_dgp",
    "pareto_rectangle_dgp",
    "dgp_from_config",
    "load_dgp_config",
    "BUILTIN_DGP_NAMES",
]


# ---------------------------------------------------------------------------
# Coefficient function forms
#
# Plain dataclass callables instead of lambdas so DGPs are picklable and can
# be echoed back into configuration files.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Affine:
    """a + b * x"""

    a: float
    b: float

    def __call__(self, x):
        return self.a + self.b * np.asarray(x, dtype=float)

    def descriptor(self):
        return {"affine": [self.a, self.b]}


@dataclass(frozen=True)
class Cosine:
    """a + b * cos(c * x)"""

    a: float
    b: float
    c: float

    def __call__(self, x):
        return self.a + self.b * np.cos(self.c * np.asarray(x, dtype=float))

    def descriptor(self):
        return {"cosine": [self.a, self.b, self.c]}


@dataclass(frozen=True)
class ExpAffine:
    """exp(a + b * x); the canonical exponent form of the linear regression model."""

    a: float
    b: float

    def __call__(self, x):
        return np.exp(self.a + self.b * np.asarray(x, dtype=float))

    def descriptor(self):
        return {"exp-affine": [self.a, self.b]}


@dataclass(frozen=True)
class Column:
    """Select one column of a multi-column covariate draw."""

    index: int

    def __call__(self, x):
        return np.asarray(x, dtype=float)[:, self.index]

    def descriptor(self):
        return {"column": [self.index]}


# ---------------------------------------------------------------------------
# Covariate laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformLaw:
    """Scalar covariate, uniform on [low, high]."""

    low: float
    high: float

    def __post_init__(self):
        if not (np.isfinite(self.low) and np.isfinite(self.high)):
            raise InvalidDGPError("covariate support must be finite")
        if not self.low < self.high:
            raise InvalidDGPError(
                f"covariate support must satisfy low < high, got [{self.low}, {self.high}]"
            )

    n_uniforms = 1
    n_cols = 1

    def transform(self, u: np.ndarray) -> np.ndarray:
        return self.low + (self.high - self.low) * u[0]

    def grid(self, k: int = 513) -> np.ndarray:
        return np.linspace(self.low, self.high, k)

    def descriptor(self):
        return {"uniform": [self.low, self.high]}


@dataclass(frozen=True)
class RectangleLaw:
    """Independent uniform pair on [x1_low, x1_high] x [x2_low, x2_high].

    Doubles as the rectangle-of-support argument of the extremal density
    oracles.
    """

    x1_low: float
    x1_high: float
    x2_low: float
    x2_high: float

    def __post_init__(self):
        if not (self.x1_low < self.x1_high and self.x2_low < self.x2_high):
            raise InvalidDGPError("rectangle bounds must satisfy low < high on both axes")

    n_uniforms = 2
    n_cols = 2

    def transform(self, u: np.ndarray) -> np.ndarray:
        x1 = self.x1_low + (self.x1_high - self.x1_low) * u[0]
        x2 = self.x2_low + (self.x2_high - self.x2_low) * u[1]
        return np.column_stack([x1, x2])

    def grid(self, k: int = 33) -> np.ndarray:
        g1 = np.linspace(self.x1_low, self.x1_high, k)
        g2 = np.linspace(self.x2_low, self.x2_high, k)
        m1, m2 = np.meshgrid(g1, g2)
        return np.column_stack([m1.ravel(), m2.ravel()])

    def descriptor(self):
        return {
            "rectangle": [self.x1_low, self.x1_high, self.x2_low, self.x2_high]
        }


# ---------------------------------------------------------------------------
# DGP descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailIndexDGP:
    """Response with covariate-dependent tail exponent.

    ``P(Y > y | X = x) = y**(-alpha_fn(x))`` for ``y >= 1``. The exponent
    must exceed 1 everywhere on the covariate support so the conditional
    mean of Y is finite.
    """

    name: str
    alpha_fn: Callable[[np.ndarray], np.ndarray]
    x_law: UniformLaw = field(default_factory=lambda: UniformLaw(0.0, 1.0))

    def __post_init__(self):
        a = np.asarray(self.alpha_fn(self.x_law.grid()), dtype=float)
        if not np.all(np.isfinite(a)):
            raise InvalidDGPError(f"{self.name}: alpha(x) is non-finite on the support")
        # alpha may touch 1 on a measure-zero boundary (e.g. a uniform
        # exponent on [1, 2]) but must exceed 1 somewhere and never fall below.
        if a.min() < 1.0 or a.max() <= 1.0:
            raise InvalidDGPError(
                f"{self.name}: alpha(x) must be >= 1 with alpha > 1 on the "
                f"interior (range [{a.min():.6g}, {a.max():.6g}]); heavier "
                "tails have no finite conditional mean"
            )


@dataclass(frozen=True)
class ExtremalQuantileDGP:
    """Location-scale response with a constant-exponent heavy-tailed noise.

    ``Y = beta_fn(X) + scale_fn(X) * U`` where U is |Student-t(noise_alpha)|
    (noise="abs-student-t") or exact Pareto with survival u**(-noise_alpha)
    on [1, inf) (noise="pareto"). With a rectangle covariate law, beta_fn
    and scale_fn receive the (n, 2) covariate matrix; with a scalar law they
    receive the covariate vector.
    """

    name: str
    beta_fn: Callable[[np.ndarray], np.ndarray]
    scale_fn: Callable[[np.ndarray], np.ndarray]
    noise_alpha: float
    x_law: UniformLaw | RectangleLaw = field(default_factory=lambda: UniformLaw(0.0, 1.0))
    noise: str = "abs-student-t"

    def __post_init__(self):
        if self.noise not in ("abs-student-t", "pareto"):
            raise InvalidDGPError(f"{self.name}: unknown noise family {self.noise!r}")
        if not self.noise_alpha > 1.0:
            raise InvalidDGPError(
                f"{self.name}: noise tail exponent must exceed 1, got {self.noise_alpha}"
            )
        s = np.asarray(self.scale_fn(self.x_law.grid()), dtype=float)
        if not np.all(np.isfinite(s)) or s.min() <= 0.0:
            raise InvalidDGPError(
                f"{self.name}: scale(x) must be strictly positive on the support"
            )


@dataclass(frozen=True)
class ObservationSet:
    """An i.i.d. sample: design matrix (ones column first) plus response.

    The seed records provenance; identical (dgp, n, seed) triples produce
    bit-identical instances. Arrays are frozen read-only.
    """

    design: np.ndarray
    response: np.ndarray
    seed: int

    def __post_init__(self):
        design = np.ascontiguousarray(self.design, dtype=float)
        response = np.ascontiguousarray(self.response, dtype=float)
        if design.ndim != 2 or response.ndim != 1:
            raise DomainError("design must be 2-D and response 1-D")
        n, p = design.shape
        if response.shape[0] != n:
            raise DomainError("design and response lengths differ")
        if not (n >= p >= 1):
            raise DomainError(f"need n >= p >= 1, got n={n}, p={p}")
        if not np.all(design[:, 0] == 1.0):
            raise DomainError("first design column must be identically 1")
        if not (np.all(np.isfinite(design)) and np.all(np.isfinite(response))):
            raise DomainError("non-finite entries in the sample")
        design.flags.writeable = False
        response.flags.writeable = False
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    @property
    def covariates(self) -> np.ndarray:
        """Design matrix without the intercept column."""
        return self.design[:, 1:]


# ---------------------------------------------------------------------------
# Elementary inverse CDFs
# ---------------------------------------------------------------------------

def pareto_tail_inverse(v, alpha):
    """Map uniform draws v in (0, 1] to Y = v**(-1/alpha), supported on [1, inf)."""
    return np.asarray(v, dtype=float) ** (-1.0 / np.asarray(alpha, dtype=float))


def abs_student_t_quantile(tau, nu: float):
    """tau-th quantile of |T| for T ~ Student-t(nu)."""
    tau = np.asarray(tau, dtype=float)
    return student_t.ppf((1.0 + tau) / 2.0, nu)


def pareto_quantile(tau, alpha: float):
    """tau-th quantile of the exact Pareto law with survival u**(-alpha), u >= 1."""
    tau = np.asarray(tau, dtype=float)
    return (1.0 - tau) ** (-1.0 / alpha)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def _assemble_blocks(n, seed, shards, block_fn):
    """Run block_fn over all spans (optionally threaded), preserving block order."""
    spans = block_spans(n)
    if shards > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=min(shards, len(spans))) as pool:
            parts = list(pool.map(block_fn, spans))
    else:
        parts = [block_fn(s) for s in spans]
    return parts


def sample_tail_index(dgp: TailIndexDGP, n: int, seed: int, *, shards: int = 1) -> ObservationSet:
    """Draw n observations from a tail-index DGP by inverse-CDF sampling.

    Each row draws x from the covariate law and V uniform, then sets
    y = V**(-1/alpha(x)) with V mapped into (0, 1] so y is always finite.
    Deterministic given (dgp, n, seed).
    """
    if n < 1:
        raise ConfigurationError(f"sample size must be >= 1, got {n}")

    def one_block(span):
        j, _, m = span
        u = block_rng(seed, j).random((2, m))
        x = dgp.x_law.transform(u[:1])
        alpha = np.asarray(dgp.alpha_fn(x), dtype=float)
        if np.any(alpha <= 0.0) or not np.all(np.isfinite(alpha)):
            raise InvalidDGPError(f"{dgp.name}: non-positive alpha(x) encountered")
        v = 1.0 - u[1]  # (0, 1]
        return x, pareto_tail_inverse(v, alpha)

    parts = _assemble_blocks(n, seed, shards, one_block)
    x = np.concatenate([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    design = np.column_stack([np.ones(n), x])
    return ObservationSet(design=design, response=y, seed=seed)


_TINY_U = 2.0**-53  # replaces an exact-zero uniform before t.ppf


def sample_extremal_quantile(
    dgp: ExtremalQuantileDGP, n: int, seed: int, *, shards: int = 1
) -> ObservationSet:
    """Draw n observations y = beta(x) + scale(x) * U from an extremal DGP.

    U is produced by inverse CDF on the same uniform stream as the
    covariates (|.| applied after, for the Student-t family), which keeps
    runs deterministic under sharding.
    """
    if n < 1:
        raise ConfigurationError(f"sample size must be >= 1, got {n}")
    law = dgp.x_law

    def one_block(span):
        j, _, m = span
        u = block_rng(seed, j).random((law.n_uniforms + 1, m))
        x = law.transform(u[: law.n_uniforms])
        scale = np.asarray(dgp.scale_fn(x), dtype=float)
        if np.any(scale <= 0.0):
            raise InvalidDGPError(f"{dgp.name}: non-positive scale(x) encountered")
        if dgp.noise == "pareto":
            noise = pareto_tail_inverse(1.0 - u[-1], dgp.noise_alpha)
        else:
            q = np.where(u[-1] == 0.0, _TINY_U, u[-1])
            noise = np.abs(student_t.ppf(q, dgp.noise_alpha))
        y = np.asarray(dgp.beta_fn(x), dtype=float) + scale * noise
        return x, y

    parts = _assemble_blocks(n, seed, shards, one_block)
    if law.n_cols == 1:
        covs = np.concatenate([p[0] for p in parts])
        design = np.column_stack([np.ones(n), covs])
    else:
        covs = np.vstack([p[0] for p in parts])
        design = np.column_stack([np.ones(n), covs])
    y = np.concatenate([p[1] for p in parts])
    return ObservationSet(design=design, response=y, seed=seed)


# ---------------------------------------------------------------------------
# Uniform-exponent oracle: exact conditional law of Z = alpha(X) given Y > w
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformTailOracle:
    """Support endpoints of a uniformly distributed tail exponent Z."""

    u_lo: float
    u_hi: float

    def __post_init__(self):
        if not (0.0 < self.u_lo < self.u_hi):
            raise DomainError(
                f"oracle support must satisfy 0 < u_lo < u_hi, got ({self.u_lo}, {self.u_hi})"
            )

    @property
    def width(self) -> float:
        return self.u_hi - self.u_lo


def _check_w(w: float) -> float:
    w = float(w)
    if not (np.isfinite(w) and w > 1.0):
        raise DomainError(f"threshold must be a finite number > 1, got {w}")
    return w


def oracle_conditional_density(oracle: UniformTailOracle, w: float, z):
    """Exact density of Z at z given Y > w, for Z uniform on [u_lo, u_hi].

    f(z | Y > w) = w**(-(z - u_lo)) * log(w) / (1 - w**(-(u_hi - u_lo))).
    Integrates to one over the support.
    """
    w = _check_w(w)
    z = np.asarray(z, dtype=float)
    if np.any(z < oracle.u_lo) or np.any(z > oracle.u_hi):
        raise DomainError("z outside the oracle support")
    lw = math.log(w)
    denom = -math.expm1(-oracle.width * lw)  # 1 - w**(-width)
    out = np.exp(-(z - oracle.u_lo) * lw) * lw / denom
    return out if out.ndim else float(out)


def oracle_conditional_moments(oracle: UniformTailOracle, w: float) -> tuple[float, float]:
    """Exact (mean, variance) of Z given Y > w for uniform Z.

    mean = u_lo + 1/log(w) - d * w**(-d) / (1 - w**(-d))
    var  = 1/log(w)**2 - d**2 * w**(-d) / (1 - w**(-d))**2,  d = u_hi - u_lo.

    The variance is strictly positive for every w > 1 and decays like
    1/log(w)**2.
    """
    w = _check_w(w)
    d = oracle.width
    lw = math.log(w)
    r = math.exp(-d * lw)  # w**(-d)
    one_minus_r = -math.expm1(-d * lw)
    mean = oracle.u_lo + 1.0 / lw - d * r / one_minus_r
    var = 1.0 / lw**2 - d**2 * r / one_minus_r**2
    return mean, var


def density_bound_envelope(c_ratio: float, w: float, z, u_lo: float, u_hi: float):
    """Upper envelope for the conditional exponent density under a bounded law.

    (c_ratio) * w**(-(z - u_lo)) * log(w) / (1 - w**(-(u_hi - u_lo))), where
    c_ratio is the ratio of the density's upper to lower bound (>= 1). For a
    uniform law (c_ratio = 1) the envelope coincides with the exact density.
    Monotone non-increasing in z; tends to zero for every z > u_lo as w grows.
    """
    if not c_ratio >= 1.0:
        raise DomainError(f"c_ratio must be >= 1, got {c_ratio}")
    return c_ratio * oracle_conditional_density(UniformTailOracle(u_lo, u_hi), w, z)


# ---------------------------------------------------------------------------
# Extremal framework: conditional density of (X1, X2) given Y > w
# ---------------------------------------------------------------------------

def _check_rectangle_point(x1, x2, bounds: RectangleLaw):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if (
        np.any(x1 < bounds.x1_low)
        or np.any(x1 > bounds.x1_high)
        or np.any(x2 < bounds.x2_low)
        or np.any(x2 > bounds.x2_high)
    ):
        raise DomainError("point outside the support rectangle")
    return x1, x2


def extremal_limit_density(x1, x2, alpha: float, bounds: RectangleLaw):
    """Limiting density of (X1, X2) given Y > w as w -> inf (uniform pair).

    (alpha + 1) * x2**alpha /
    ((x1_high - x1_low) * (x2_high**(alpha+1) - x2_low**(alpha+1)))

    Free of x1, maximized at the upper end of the scale coordinate, and
    bounded away from zero on the rectangle: the covariate pair does not
    degenerate in this framework.
    """
    if not alpha > 1.0:
        raise DomainError(f"tail exponent must exceed 1, got {alpha}")
    x1, x2 = _check_rectangle_point(x1, x2, bounds)
    norm = (bounds.x1_high - bounds.x1_low) * (
        bounds.x2_high ** (alpha + 1.0) - bounds.x2_low ** (alpha + 1.0)
    )
    out = (alpha + 1.0) * x2**alpha / norm + 0.0 * x1
    return out if out.ndim else float(out)


def extremal_finite_w_density(x1, x2, w: float, alpha: float, bounds: RectangleLaw):
    """Exact conditional density of (X1, X2) given Y > w for the uniform pair
    with exact-Pareto noise.

    (alpha+1)(alpha-1) * ((w - x1)/x2)**(-alpha) /
    ((x2_high**(a+1) - x2_low**(a+1)) *
     ((w - x1_high)**(-(a-1)) - (w - x1_low)**(-(a-1))))

    Requires w > x1_high; it is the exact conditional density of the sampler
    whenever (w - x1)/x2 >= 1 over the whole rectangle, i.e.
    w >= x1_high + x2_high. Converges pointwise to
    :func:`extremal_limit_density` as w grows.
    """
    if not alpha > 1.0:
        raise DomainError(f"tail exponent must exceed 1, got {alpha}")
    w = float(w)
    if not w > bounds.x1_high:
        raise DomainError(f"threshold must exceed the location upper bound {bounds.x1_high}")
    x1, x2 = _check_rectangle_point(x1, x2, bounds)
    a = alpha
    denom_x1 = (w - bounds.x1_high) ** (-(a - 1.0)) - (w - bounds.x1_low) ** (-(a - 1.0))
    denom_x2 = bounds.x2_high ** (a + 1.0) - bounds.x2_low ** (a + 1.0)
    out = (a + 1.0) * (a - 1.0) * ((w - x1) / x2) ** (-a) / (denom_x2 * denom_x1)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Conditional quantiles of the response
# ---------------------------------------------------------------------------

def conditional_quantile(tau: float, x, model):
    """tau-th conditional quantile of Y given X = x under either framework.

    Tail-index model: (1 - tau)**(-1/alpha(x)). Extremal model:
    beta(x) + scale(x) * Q_noise(tau). tau = 0 returns the support lower
    endpoint.
    """
    if not 0.0 <= tau < 1.0:
        raise DomainError(f"quantile level must lie in [0, 1), got {tau}")
    if isinstance(model, TailIndexDGP):
        alpha = np.asarray(model.alpha_fn(np.asarray(x, dtype=float)), dtype=float)
        out = (1.0 - tau) ** (-1.0 / alpha)
        return out if out.ndim else float(out)
    if isinstance(model, ExtremalQuantileDGP):
        if model.noise == "pareto":
            q = pareto_quantile(tau, model.noise_alpha)
        else:
            q = abs_student_t_quantile(tau, model.noise_alpha)
        x = np.asarray(x, dtype=float)
        out = np.asarray(model.beta_fn(x), dtype=float) + np.asarray(
            model.scale_fn(x), dtype=float
        ) * q
        return out if out.ndim else float(out)
    raise DomainError(f"unsupported model type {type(model).__name__}")


# ---------------------------------------------------------------------------
# Built-in DGPs and configuration loading
# ---------------------------------------------------------------------------

def _dgp1m_tail() -> TailIndexDGP:
    return TailIndexDGP("dgp1m-tail", Affine(1.5, 10.0), UniformLaw(0.0, 1.0))


def _dgp4m_tail() -> TailIndexDGP:
    return TailIndexDGP("dgp4m-tail", Cosine(6.5, -5.0, 20.0), UniformLaw(0.0, 1.0))


def _dgp1m_extremal() -> ExtremalQuantileDGP:
    return ExtremalQuantileDGP(
        "dgp1m-extremal",
        beta_fn=Affine(0.0, 1.0),
        scale_fn=Affine(11.5, -10.0),
        noise_alpha=4.0,
        x_law=UniformLaw(0.0, 1.0),
    )


def _dgp4m_extremal() -> ExtremalQuantileDGP:
    return ExtremalQuantileDGP(
        "dgp4m-extremal",
        beta_fn=Affine(0.0, 1.0),
        scale_fn=Cosine(6.5, 5.0, 20.0),
        noise_alpha=4.0,
        x_law=UniformLaw(0.0, 1.0),
    )


_BUILTIN_FACTORIES = {
    "dgp1m-tail": _dgp1m_tail,
    "dgp4m-tail": _dgp4m_tail,
    "dgp1m-extremal": _dgp1m_extremal,
    "dgp4m-extremal": _dgp4m_extremal,
}

BUILTIN_DGP_NAMES = tuple(sorted(_BUILTIN_FACTORIES))


def builtin_dgp(name: str):
    """Return one of the built-in DGPs by name."""
    try:
        return _BUILTIN_FACTORIES[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown DGP {name!r}; valid names: {', '.join(BUILTIN_DGP_NAMES)}"
        ) from None


def pareto_rectangle_dgp(
    alpha: float,
    x1_bounds: tuple[float, float] = (0.0, 1.0),
    x2_bounds: tuple[float, float] = (1.0, 2.0),
    name: str = "pareto-rectangle",
) -> ExtremalQuantileDGP:
    """Y = X1 + X2 * U with (X1, X2) uniform on a rectangle and exact-Pareto U.

    The configuration for which :func:`extremal_finite_w_density` is the
    exact conditional covariate density.
    """
    law = RectangleLaw(x1_bounds[0], x1_bounds[1], x2_bounds[0], x2_bounds[1])
    return ExtremalQuantileDGP(
        name,
        beta_fn=Column(0),
        scale_fn=Column(1),
        noise_alpha=alpha,
        x_law=law,
        noise="pareto",
    )


_FORMS = {"affine": Affine, "cosine": Cosine, "exp-affine": ExpAffine, "column": Column}


def _form_from_spec(spec, what: str):
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigurationError(
            f"{what} must be a one-key mapping naming a form, e.g. {{'affine': [a, b]}}"
        )
    (kind, coeffs), = spec.items()
    if kind not in _FORMS:
        raise ConfigurationError(
            f"unknown {what} form {kind!r}; valid forms: {', '.join(sorted(_FORMS))}"
        )
    try:
        return _FORMS[kind](*[float(c) if kind != "column" else int(c) for c in coeffs])
    except TypeError:
        raise ConfigurationError(f"wrong coefficient count for {what} form {kind!r}") from None


def dgp_from_config(config: dict):
    """Build a DGP from a key-value configuration mapping.

    Either ``{"dgp": "<built-in name>"}`` or a custom description::

        {"family": "tail-index", "name": "...", "x": [lo, hi],
         "alpha": {"affine": [1.5, 10.0]}}

        {"family": "extremal", "name": "...", "x": [lo, hi],
         "beta": {"affine": [0, 1]}, "scale": {"cosine": [6.5, 5, 20]},
         "noise_alpha": 4.0, "noise": "abs-student-t"}

    Coefficient forms: affine [a, b] -> a + b*x; cosine [a, b, c] ->
    a + b*cos(c*x); exp-affine [a, b] -> exp(a + b*x).
    """
    if "dgp" in config:
        return builtin_dgp(config["dgp"])
    family = config.get("family")
    name = config.get("name", "custom")
    x = config.get("x", [0.0, 1.0])
    if not (isinstance(x, (list, tuple)) and len(x) == 2):
        raise ConfigurationError("'x' must be a [low, high] pair")
    law = UniformLaw(float(x[0]), float(x[1]))
    if family == "tail-index":
        if "alpha" not in config:
            raise ConfigurationError("tail-index DGP requires an 'alpha' form")
        return TailIndexDGP(name, _form_from_spec(config["alpha"], "alpha"), law)
    if family == "extremal":
        for key in ("beta", "scale", "noise_alpha"):
            if key not in config:
                raise ConfigurationError(f"extremal DGP requires {key!r}")
        return ExtremalQuantileDGP(
            name,
            beta_fn=_form_from_spec(config["beta"], "beta"),
            scale_fn=_form_from_spec(config["scale"], "scale"),
            noise_alpha=float(config["noise_alpha"]),
            x_law=law,
            noise=config.get("noise", "abs-student-t"),
        )
    raise ConfigurationError(
        "config must contain 'dgp' or 'family' in {'tail-index', 'extremal'}"
    )


def load_dgp_config(path) -> dict:
    """Read a JSON DGP configuration file."""
    try:
        with open(Path(path), encoding="utf-8") as fh:
            config = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"DGP config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"DGP config is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise ConfigurationError("DGP config must be a JSON object")
    return config
