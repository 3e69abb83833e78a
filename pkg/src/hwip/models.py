"""Stationary increment models with closed-form conditional-expectation oracles.

Two families are implemented.

*Innovation-driven models* (iid, martingale difference, martingale plus
coboundary, linear process) have increments of the form ``f(eps_{t+lo}, ...,
eps_{t+hi})`` for iid innovations; ``f`` is carried around explicitly as a
window function, so shifting by the time map, conditioning on the past and
taking L^p norms are exact operations on the representation.  Rademacher
innovations are tabulated over sign patterns (everything exact by
enumeration); Gaussian innovations are restricted to linear window
functions, where conditional expectations just drop coordinates and L^p
norms are Gaussian moments.

*The renewal chain* is a Markov chain on {0, 1, 2, ...}: from any state
k >= 1 it descends deterministically to k - 1, from 0 it jumps to u_j - 1
with probability p_{u_j}.  Its increments are g(Y_t) = 1{Y_t = 0} - pi_0.
Return times to 0 are iid with law P(tau = u_j) = p_{u_j}, which makes
every conditional sum computable by a regeneration dynamic program.

The two conditional-expectation semigroups exposed per model are

    adapted:     P h = E[h o T | past],  defined for past-measurable h,
    nonadapted:  P h = h o T^-1 - E[h o T^-1 | past],  for E[h | past] = 0,

and both satisfy the semigroup law and the power bound ||P^k h||_p <= 2 ||h||_p
by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.special import gammaln

from .errors import CapabilityError, CapacityError
from .rng import as_generator

__all__ = [
    "HolderExponent",
    "InnovationLaw",
    "RADEMACHER",
    "NORMAL",
    "UNIFORM",
    "TableFunction",
    "LinearFunction",
    "ZERO_FUNCTION",
    "RenewalChainSpec",
    "build_u_sequence",
    "build_renewal_chain",
    "sample_renewal_path",
    "conditional_sum_oracle",
    "chain_transition",
    "chain_lp_norm",
    "renewal_variance_constant",
    "ProcessModel",
    "iid_model",
    "mds_model",
    "coboundary_model",
    "linear_process_model",
    "renewal_model",
    "gaussian_contrast_model",
    "sample_model",
    "apply_PT",
    "conditional_sum_function",
    "model_to_json",
    "model_from_json",
]

# Integer powers beyond 2**53 lose exactness in double precision, which makes
# floor() in the u-sequence rule ill-defined.
_EXACT_INT_LIMIT = 2.0 ** 53

#: Hard cap for the regeneration dynamic program.
DP_BUDGET = 1 << 22


@dataclass(frozen=True)
class HolderExponent:
    """Tail exponent p > 2 and the associated Hölder exponent alpha = 1/2 - 1/p."""

    p: float

    def __post_init__(self):
        if not self.p > 2.0:
            raise ValueError(f"p must exceed 2, got {self.p}")

    @property
    def alpha(self) -> float:
        return 0.5 - 1.0 / self.p


def gaussian_abs_moment(p: float) -> float:
    """(E|N(0,1)|^p)^(1/p) = (2^(p/2) Gamma((p+1)/2) / sqrt(pi))^(1/p)."""
    log_m = 0.5 * p * math.log(2.0) + gammaln(0.5 * (p + 1.0)) - 0.5 * math.log(math.pi)
    return math.exp(log_m / p)


# ---------------------------------------------------------------------------
# Innovation laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InnovationLaw:
    """Mean-zero, unit-variance innovation law."""

    name: str

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.name == "rademacher":
            return rng.integers(0, 2, size=size).astype(float) * 2.0 - 1.0
        if self.name == "normal":
            return rng.standard_normal(size)
        if self.name == "uniform":
            return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=size)
        raise ValueError(f"unknown innovation law {self.name!r}")

    def abs_moment(self, p: float) -> float:
        """(E|eps|^p)^(1/p); used for exact norms of single-coordinate functions."""
        if self.name == "rademacher":
            return 1.0
        if self.name == "normal":
            return gaussian_abs_moment(p)
        if self.name == "uniform":
            # E|U|^p on [-sqrt(3), sqrt(3)] = 3^(p/2) / (p + 1)
            return math.exp((0.5 * p * math.log(3.0) - math.log(p + 1.0)) / p)
        raise ValueError(f"unknown innovation law {self.name!r}")


RADEMACHER = InnovationLaw("rademacher")
NORMAL = InnovationLaw("normal")
UNIFORM = InnovationLaw("uniform")

_LAWS = {law.name: law for law in (RADEMACHER, NORMAL, UNIFORM)}

# Sign-pattern enumeration beyond this window width is rejected.
_MAX_TABLE_WIDTH = 22


# ---------------------------------------------------------------------------
# Window functions: exact finite-memory functionals of the innovations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TableFunction:
    """Function of rademacher innovations at offsets lo..lo+w-1, tabulated
    over the 2^w sign patterns.

    ``table`` has shape (2,)*w; axis i indexes the sign of the innovation at
    offset lo + i (entry 0 for -1, entry 1 for +1).  A 0-d table is a
    constant.  All operations below are exact.
    """

    lo: int
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", np.asarray(self.table, dtype=float))

    @property
    def width(self) -> int:
        return self.table.ndim

    @property
    def hi(self) -> int:
        return self.lo + self.width - 1

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.table == 0.0))

    def shift(self, s: int) -> "TableFunction":
        return TableFunction(self.lo + s, self.table)

    def condexp_past(self, cutoff: int = 0) -> "TableFunction":
        """E[. | innovations at offsets <= cutoff]: average out newer axes."""
        drop = self.hi - cutoff
        if drop <= 0 or self.width == 0:
            return self
        drop = min(drop, self.width)
        axes = tuple(range(self.width - drop, self.width))
        return TableFunction(self.lo, self.table.mean(axis=axes))

    def expectation(self) -> float:
        return float(self.table.mean())

    def _aligned(self, lo: int, hi: int) -> np.ndarray:
        """Broadcast the table to the window lo..hi."""
        width = hi - lo + 1
        shape = [1] * width
        start = self.lo - lo
        for k in range(self.width):
            shape[start + k] = 2
        return np.broadcast_to(self.table.reshape(shape), (2,) * width)

    def _binop(self, other: "TableFunction", op) -> "TableFunction":
        if self.width == 0:
            lo, hi = other.lo, other.hi
        elif other.width == 0:
            lo, hi = self.lo, self.hi
        else:
            lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return TableFunction(lo, op(self._aligned(lo, hi), other._aligned(lo, hi)))

    def __add__(self, other: "TableFunction") -> "TableFunction":
        return self._binop(other, np.add)

    def __sub__(self, other: "TableFunction") -> "TableFunction":
        return self._binop(other, np.subtract)

    def scaled(self, c: float) -> "TableFunction":
        return TableFunction(self.lo, c * self.table)

    def lp_norm(self, p: float, law: InnovationLaw) -> float:
        if law.name != "rademacher":
            raise CapabilityError("tabulated window functions require rademacher innovations")
        return float(np.mean(np.abs(self.table) ** p) ** (1.0 / p))

    def eval_windows(self, eps: np.ndarray, n: int) -> np.ndarray:
        """Evaluate at times t = 0..n-1 given innovations eps[t + i] for
        offset lo + i (eps must have length >= n + width - 1)."""
        if self.width == 0:
            return np.full(n, float(self.table))
        flat = self.table.reshape(-1)
        code = np.zeros(n, dtype=np.int64)
        for i in range(self.width):
            code = (code << 1) | (eps[i : i + n] > 0).astype(np.int64)
        return flat[code]


@dataclass(frozen=True)
class LinearFunction:
    """Linear functional sum_i c_i * eps_{t + o_i} of the innovations.

    Closed under shifting and conditioning for any mean-zero law; with
    Gaussian innovations its L^p norm is an exact Gaussian moment.
    """

    offsets: tuple[int, ...]
    coeffs: tuple[float, ...]

    def __post_init__(self):
        pairs = {}
        for o, c in zip(self.offsets, self.coeffs):
            pairs[int(o)] = pairs.get(int(o), 0.0) + float(c)
        pairs = {o: c for o, c in sorted(pairs.items()) if c != 0.0}
        object.__setattr__(self, "offsets", tuple(pairs.keys()))
        object.__setattr__(self, "coeffs", tuple(pairs.values()))

    @property
    def width(self) -> int:
        return len(self.offsets)

    @property
    def lo(self) -> int:
        return self.offsets[0] if self.offsets else 0

    @property
    def hi(self) -> int:
        return self.offsets[-1] if self.offsets else 0

    @property
    def is_zero(self) -> bool:
        return not self.offsets

    def shift(self, s: int) -> "LinearFunction":
        return LinearFunction(tuple(o + s for o in self.offsets), self.coeffs)

    def condexp_past(self, cutoff: int = 0) -> "LinearFunction":
        kept = [(o, c) for o, c in zip(self.offsets, self.coeffs) if o <= cutoff]
        return LinearFunction(tuple(o for o, _ in kept), tuple(c for _, c in kept))

    def expectation(self) -> float:
        return 0.0

    def __add__(self, other: "LinearFunction") -> "LinearFunction":
        return LinearFunction(self.offsets + other.offsets, self.coeffs + other.coeffs)

    def __sub__(self, other: "LinearFunction") -> "LinearFunction":
        return self + other.scaled(-1.0)

    def scaled(self, c: float) -> "LinearFunction":
        return LinearFunction(self.offsets, tuple(c * x for x in self.coeffs))

    def lp_norm(self, p: float, law: InnovationLaw) -> float:
        if self.is_zero:
            return 0.0
        if law.name == "normal":
            return gaussian_abs_moment(p) * math.sqrt(sum(c * c for c in self.coeffs))
        if law.name == "rademacher":
            return self.to_table().lp_norm(p, law)
        if self.width == 1:
            return abs(self.coeffs[0]) * law.abs_moment(p)
        raise CapabilityError(
            f"no exact L^p norm for linear functions of several {law.name} innovations"
        )

    def to_table(self) -> TableFunction:
        if self.width > _MAX_TABLE_WIDTH:
            raise CapacityError(f"window width {self.width} exceeds enumeration budget")
        if self.is_zero:
            return TableFunction(0, np.zeros(()))
        lo, hi = self.lo, self.hi
        width = hi - lo + 1
        table = np.zeros((2,) * width)
        for o, c in zip(self.offsets, self.coeffs):
            shape = [1] * width
            shape[o - lo] = 2
            table = table + c * np.array([-1.0, 1.0]).reshape(shape)
        return TableFunction(lo, table)

    def eval_windows(self, eps: np.ndarray, n: int) -> np.ndarray:
        if self.is_zero:
            return np.zeros(n)
        lo = self.lo
        out = np.zeros(n)
        for o, c in zip(self.offsets, self.coeffs):
            i = o - lo
            out += c * eps[i : i + n]
        return out


#: The identically-zero increment function (used as the symbolic kernel image).
ZERO_FUNCTION = LinearFunction((), ())


def _window_span(fn) -> tuple[int, int]:
    if fn.width == 0 or fn.is_zero:
        return (0, 0)
    return (fn.lo, fn.hi)


# ---------------------------------------------------------------------------
# Renewal chain
# ---------------------------------------------------------------------------


def build_u_sequence(p: float, depth: int) -> tuple[int, ...]:
    """Return (u_1, ..., u_depth) with u_1 = 1, u_2 = 2 and, for k >= 2,
    u_{k+1} = floor(u_k^(p/2+1)) + 2 -- the minimal integer rule satisfying
    the strict growth constraint u_k^(p/2+1) + 1 < u_{k+1}."""
    if not p > 2.0:
        raise ValueError(f"p must exceed 2, got {p}")
    depth = int(depth)
    if depth < 2:
        raise ValueError("depth must be >= 2")
    u = [1, 2]
    expo = 0.5 * p + 1.0
    for k in range(2, depth):
        power = float(u[-1]) ** expo
        if power >= _EXACT_INT_LIMIT:
            raise CapacityError(
                f"u_{k + 1} exceeds the exactly-representable integer range "
                f"(u_{k} = {u[-1]}, growth exponent {expo})"
            )
        u.append(int(math.floor(power)) + 2)
    return tuple(u)


@dataclass(frozen=True)
class RenewalChainSpec:
    """Return distribution, stationary law and derived constants of the chain.

    Invariants (validated at construction): the return probabilities sum to
    one, ``pi_j = pi_0 * sum_{i > j} p_i`` with ``pi_0 = 1 / E[tau]``, and
    ``sum_j pi_j = 1``.
    """

    p: float
    depth: int
    u: tuple[int, ...]
    c: float
    return_probs: dict[int, float]
    pi: np.ndarray
    pi0: float
    mean_tau: float

    def __post_init__(self):
        probs = np.array([self.return_probs[v] for v in self.u])
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("return probabilities must sum to 1")
        if abs(float(np.sum(self.pi)) - 1.0) > 1e-10:
            raise ValueError("stationary law must sum to 1")
        if not math.isclose(self.mean_tau, float(np.dot(self.u, probs)), rel_tol=1e-12):
            raise ValueError("mean_tau inconsistent with the return distribution")

    @property
    def n_states(self) -> int:
        return self.u[-1]

    @property
    def tau_values(self) -> np.ndarray:
        return np.asarray(self.u, dtype=np.int64)

    @property
    def tau_probs(self) -> np.ndarray:
        return np.array([self.return_probs[v] for v in self.u])

    def tau_moment(self, power: float) -> float:
        return float(np.dot(self.tau_values.astype(float) ** power, self.tau_probs))

    def g(self, states: np.ndarray) -> np.ndarray:
        """Increment function g(y) = 1{y = 0} - pi_0."""
        return (np.asarray(states) == 0).astype(float) - self.pi0

    def g_vector(self) -> np.ndarray:
        return self.g(np.arange(self.n_states))

    def to_dict(self) -> dict:
        return {
            "kind": "renewal_chain",
            "p": self.p,
            "depth": self.depth,
            "u": list(self.u),
            "c": self.c,
            "return_probs": {str(k): v for k, v in self.return_probs.items()},
            "pi0": self.pi0,
            "mean_tau": self.mean_tau,
            "pi": [float(x) for x in self.pi],
        }


def build_renewal_chain(p: float, depth: int) -> RenewalChainSpec:
    """Construct the chain spec at the given depth, normalizing the return
    distribution exactly: c = 1 / sum_{j <= depth} j * u_j^(-1-p/2)."""
    u = build_u_sequence(p, depth)
    j = np.arange(1, depth + 1, dtype=float)
    uf = np.asarray(u, dtype=float)
    weights = j * uf ** (-1.0 - 0.5 * p)
    c = 1.0 / float(weights.sum())
    probs = c * weights
    probs = probs / probs.sum()
    return_probs = {int(v): float(q) for v, q in zip(u, probs)}
    mean_tau = float(np.dot(uf, probs))
    pi0 = 1.0 / mean_tau
    # pi_m = pi_0 * P(tau > m) for m >= 1 (and pi_0 itself at m = 0)
    n_states = u[-1]
    states = np.arange(n_states)
    tail = np.array([probs[uf > m].sum() for m in states])
    pi = pi0 * tail
    pi[0] = pi0
    return RenewalChainSpec(
        p=float(p),
        depth=depth,
        u=u,
        c=c,
        return_probs=return_probs,
        pi=pi,
        pi0=pi0,
        mean_tau=mean_tau,
    )


def sample_renewal_path(
    spec: RenewalChainSpec,
    length: int,
    seed,
    start_state: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample (Y_0, ..., Y_length) and the increments (g(Y_1), ..., g(Y_length)).

    Y_0 is drawn from the stationary law unless ``start_state`` is given.
    The path is reconstructed from its regeneration times: every state
    equals the distance to the next visit of 0, so it suffices to draw the
    initial state and the iid return times.
    """
    length = int(length)
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = as_generator(seed)
    if start_state is None:
        y0 = int(rng.choice(spec.n_states, p=spec.pi / spec.pi.sum()))
    else:
        y0 = int(start_state)
        if not 0 <= y0 < spec.n_states:
            raise ValueError(f"start_state must lie in [0, {spec.n_states})")
    values = spec.tau_values
    probs = spec.tau_probs
    # Return times after 0: y0 (if y0 >= 1), then iid tau increments until
    # the path is covered one return beyond its end.
    blocks = [np.array([y0], dtype=np.int64)] if y0 >= 1 else []
    total = y0
    batch = max(64, int(1.2 * (length / spec.mean_tau)) + 8)
    while total <= length:
        taus = rng.choice(values, size=batch, p=probs)
        blocks.append(taus)
        total += int(taus.sum())
    returns = np.cumsum(np.concatenate(blocks)) if blocks else np.zeros(0, dtype=np.int64)
    anchors = returns if y0 >= 1 else np.concatenate(([0], returns))
    t = np.arange(length + 1)
    nxt = anchors[np.searchsorted(anchors, t, side="left")]
    states = (nxt - t).astype(np.int64)
    increments = spec.g(states[1:])
    return states, increments


class ChainOracle:
    """Regeneration dynamic program for E[S_n | Y_0 = m] with
    S_n = g(Y_1) + ... + g(Y_n).

    ``e[k] = E[S_k | Y_0 = 0]`` satisfies
    ``e_k = sum_j p_{u_j} (1{k >= u_j} - pi_0 min(u_j, k) + 1{k >= u_j} e_{k - u_j})``
    because the first jump lands at u_j - 1 and the chain regenerates on
    hitting 0.  The table is extended lazily and cached.
    """

    def __init__(self, spec: RenewalChainSpec):
        self.spec = spec
        self._e = np.zeros(1)

    def zero_start(self, n: int) -> np.ndarray:
        """Return the array e[0..n]."""
        n = int(n)
        if n > DP_BUDGET:
            raise CapacityError(f"conditional-sum table length {n} exceeds budget {DP_BUDGET}")
        if n < self._e.size:
            return self._e[: n + 1]
        e = np.zeros(n + 1)
        e[: self._e.size] = self._e
        pairs = list(zip(self.spec.u, self.spec.tau_probs))
        pi0 = self.spec.pi0
        for k in range(self._e.size, n + 1):
            total = 0.0
            for u_j, q in pairs:
                if k >= u_j:
                    total += q * (1.0 - pi0 * u_j + e[k - u_j])
                else:
                    total += q * (-pi0 * k)
            e[k] = total
        self._e = e
        return e

    def table(self, n: int) -> np.ndarray:
        """E[S_n | Y_0 = m] for m = 0 .. n_states - 1."""
        n = int(n)
        if n < 1:
            raise ValueError("n must be >= 1")
        e = self.zero_start(n)
        m = np.arange(self.spec.n_states)
        hit = n >= m
        descent = np.where(hit, 1.0, 0.0) - self.spec.pi0 * np.minimum(m, n)
        tail = np.where(hit & (m >= 1), e[np.maximum(n - m, 0)], 0.0)
        out = descent + tail
        out[0] = e[n]
        return out

    def v_sum(self, n: int) -> np.ndarray:
        """V_n g = g + E[S_{n-1} | .] as a state vector (V_1 g = g)."""
        g = self.spec.g_vector()
        if n == 1:
            return g
        return g + self.table(n - 1)

    def v_norms(self, n_max: int, p: float) -> np.ndarray:
        """||V_k g||_p under the stationary law for every k = 1 .. n_max.

        Vectorized over k per state: for m >= 1,
        (V_k g)(m) = g(m) + 1{k-1 >= m} (1 + e_{k-1-m}) - pi_0 min(m, k-1),
        and (V_k g)(0) = g(0) + e_{k-1}.
        """
        n_max = int(n_max)
        e = self.zero_start(max(n_max - 1, 0))
        spec = self.spec
        k = np.arange(1, n_max + 1)
        acc = np.zeros(n_max)
        g = spec.g_vector()
        for m in range(spec.n_states):
            if m == 0:
                v = g[0] + e[k - 1]
            else:
                hit = (k - 1) >= m
                tail = np.where(hit, e[np.maximum(k - 1 - m, 0)], 0.0)
                v = g[m] + np.where(hit, 1.0, 0.0) - spec.pi0 * np.minimum(m, k - 1) + tail
            acc += spec.pi[m] * np.abs(v) ** p
        return acc ** (1.0 / p)


def conditional_sum_oracle(spec: RenewalChainSpec, n: int) -> np.ndarray:
    """Table m -> E[S_n | Y_0 = m] over m = 0 .. u_depth - 1."""
    return ChainOracle(spec).table(n)


def chain_transition(spec: RenewalChainSpec, h: np.ndarray) -> np.ndarray:
    """One-step transition operator (P h)(m) = E[h(Y_1) | Y_0 = m]."""
    h = np.asarray(h, dtype=float)
    if h.shape != (spec.n_states,):
        raise ValueError(f"state function must have shape ({spec.n_states},)")
    out = np.empty_like(h)
    out[1:] = h[:-1]
    out[0] = float(np.dot(spec.tau_probs, h[spec.tau_values - 1]))
    return out


def chain_lp_norm(spec: RenewalChainSpec, h: np.ndarray, p: float) -> float:
    """L^p norm of a state function under the stationary law."""
    return float(np.dot(spec.pi, np.abs(np.asarray(h, dtype=float)) ** p) ** (1.0 / p))


def renewal_variance_constant(spec: RenewalChainSpec) -> float:
    """Long-run variance of the chain increments, Var(S_n)/n -> eta.

    By regeneration, eta = pi_0 * E[(1 - pi_0 tau)^2] (cycle sums are
    1 - pi_0 tau_k with mean zero).
    """
    second = spec.tau_moment(2.0)
    return spec.pi0 * (1.0 - 2.0 * spec.pi0 * spec.mean_tau + spec.pi0 ** 2 * second)


# ---------------------------------------------------------------------------
# Process models
# ---------------------------------------------------------------------------

KINDS = (
    "iid",
    "martingale_difference",
    "martingale_plus_coboundary",
    "linear_process",
    "renewal_chain",
)


@dataclass(frozen=True)
class ProcessModel:
    """A sampler of stationary increments plus whatever oracles it supports.

    ``increment_fn`` is the window function emitting X_t for
    innovation-driven kinds; ``chain`` is set for the renewal kind.
    """

    kind: str
    label: str
    innovation: InnovationLaw | None = None
    increment_fn: TableFunction | LinearFunction | None = None
    chain: RenewalChainSpec | None = None
    params: dict = field(default_factory=dict)

    @property
    def has_PT_adapted(self) -> bool:
        if self.chain is not None:
            return True
        return self.increment_fn is not None and _window_span(self.increment_fn)[1] <= 0

    @property
    def has_PT_nonadapted(self) -> bool:
        return self.chain is None and self.increment_fn is not None

    @property
    def has_conditional_sum(self) -> bool:
        return self.has_PT_adapted

    def increment_lp_norm(self, p: float) -> float:
        """Exact L^p norm of the increment function."""
        if self.chain is not None:
            return chain_lp_norm(self.chain, self.chain.g_vector(), p)
        return self.increment_fn.lp_norm(p, self.innovation)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "label": self.label}
        if self.innovation is not None:
            d["innovation"] = self.innovation.name
        d.update({k: v for k, v in self.params.items()})
        if self.chain is not None:
            d["chain"] = self.chain.to_dict()
        return d


def iid_model(innovation: str = "normal", scale: float = 1.0) -> ProcessModel:
    """iid increments scale * eps_t."""
    law = _LAWS[innovation]
    fn: TableFunction | LinearFunction = LinearFunction((0,), (float(scale),))
    if innovation == "rademacher":
        fn = fn.to_table()
    return ProcessModel(
        kind="iid",
        label=f"iid_{innovation}" + (f"_scale{scale:g}" if scale != 1.0 else ""),
        innovation=law,
        increment_fn=fn,
        params={"scale": float(scale)},
    )


def mds_model(innovation: str = "rademacher", modulation: float = 0.0) -> ProcessModel:
    """Martingale difference X_t = eps_t * (1 + b * tanh(eps_{t-1})).

    b = 0 reduces to iid; b != 0 requires rademacher innovations (the
    modulated increment is tabulated exactly over sign patterns).  Either
    way E[X_t | past] = 0, so the adapted semigroup annihilates the
    increment function.
    """
    law = _LAWS[innovation]
    b = float(modulation)
    if not 0.0 <= abs(b) < 1.0:
        raise ValueError("modulation must satisfy |b| < 1")
    if b == 0.0:
        fn: TableFunction | LinearFunction = LinearFunction((0,), (1.0,))
        if innovation == "rademacher":
            fn = fn.to_table()
    else:
        if innovation != "rademacher":
            raise CapabilityError("modulated martingale differences require rademacher innovations")
        eps_prev = np.array([-1.0, 1.0]).reshape(2, 1)
        eps_now = np.array([-1.0, 1.0]).reshape(1, 2)
        fn = TableFunction(-1, eps_now * (1.0 + b * np.tanh(eps_prev)))
    return ProcessModel(
        kind="martingale_difference",
        label=f"mds_{innovation}" + (f"_b{b:g}" if b else ""),
        innovation=law,
        increment_fn=fn,
        params={"modulation": b},
    )


def coboundary_model(
    g_coeffs: Iterable[float],
    innovation: str = "rademacher",
    mds_part: float | None = 1.0,
    direction: str = "forward",
) -> ProcessModel:
    """Martingale-plus-coboundary increments X_t = m_t + (g o T)_t - g_t with
    g = sum_i c_i eps_{t-i} and m_t = mds_part * eps_t (``mds_part=None``
    gives the pure coboundary, whose partial sums telescope).

    The forward difference anticipates one innovation, so it exposes no
    adapted oracle; ``direction="backward"`` uses g o T^-1 - g instead,
    which also telescopes but stays past-measurable.
    """
    law = _LAWS[innovation]
    coeffs = tuple(float(c) for c in g_coeffs)
    if not coeffs or not all(math.isfinite(c) for c in coeffs):
        raise ValueError("g_coeffs must be a nonempty list of finite numbers")
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    g = LinearFunction(tuple(-i for i in range(len(coeffs))), coeffs)
    shift = 1 if direction == "forward" else -1
    fn: TableFunction | LinearFunction = g.shift(shift) - g
    if mds_part is not None:
        fn = fn + LinearFunction((0,), (float(mds_part),))
    if innovation == "rademacher":
        fn = fn.to_table()
    return ProcessModel(
        kind="martingale_plus_coboundary",
        label=f"mcb_{innovation}_{direction}",
        innovation=law,
        increment_fn=fn,
        params={"g_coeffs": list(coeffs), "mds_part": mds_part, "direction": direction},
    )


def linear_process_model(coeffs: Iterable[float], innovation: str = "normal") -> ProcessModel:
    """Causal linear process X_t = sum_{i < L} a_i eps_{t-i} with an explicit
    truncation length L."""
    law = _LAWS[innovation]
    a = tuple(float(c) for c in coeffs)
    if not a or not all(math.isfinite(c) for c in a):
        raise ValueError("coefficients must be a nonempty list of finite numbers")
    fn: TableFunction | LinearFunction = LinearFunction(tuple(-i for i in range(len(a))), a)
    if innovation == "rademacher":
        fn = fn.to_table()
    return ProcessModel(
        kind="linear_process",
        label=f"linear_{innovation}_L{len(a)}",
        innovation=law,
        increment_fn=fn,
        params={"coeffs": list(a)},
    )


def renewal_model(p: float, depth: int = 4) -> ProcessModel:
    """The heavy-excursion renewal chain at the given tail exponent and depth."""
    spec = build_renewal_chain(p, depth)
    return ProcessModel(
        kind="renewal_chain",
        label=f"renewal_p{p:g}_d{depth}",
        chain=spec,
        params={"p": float(p), "depth": int(depth)},
    )


def gaussian_contrast_model(spec: RenewalChainSpec) -> ProcessModel:
    """iid Gaussian increments whose variance matches the chain's long-run
    variance constant eta; its scaled partial sums have the same Gaussian
    limit as the chain's, which makes it the tight null for contrast runs."""
    sigma = math.sqrt(renewal_variance_constant(spec))
    model = iid_model("normal", scale=sigma)
    return ProcessModel(
        kind="iid",
        label=f"gaussian_contrast_p{spec.p:g}_d{spec.depth}",
        innovation=model.innovation,
        increment_fn=model.increment_fn,
        params={"scale": sigma, "contrast_for": f"renewal_p{spec.p:g}_d{spec.depth}"},
    )


def sample_model(model: ProcessModel, n: int, seed) -> np.ndarray:
    """Draw one stationary increment path of length n (reproducible per seed)."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_generator(seed)
    if model.chain is not None:
        _, increments = sample_renewal_path(model.chain, n, rng)
        return increments
    fn = model.increment_fn
    lo, hi = _window_span(fn)
    eps = model.innovation.sample(rng, n + (hi - lo))
    return fn.eval_windows(eps, n)


def apply_PT(model: ProcessModel, variant: str, h, k: int = 1):
    """Apply the conditional-expectation semigroup k times.

    adapted:     P h = E[h o T | past]        (h must be past-measurable)
    nonadapted:  P h = h o T^-1 - E[h o T^-1 | past]

    The nonadapted operator is defined for every window function; its
    natural domain is {E[h | past] = 0}, and it annihilates past-measurable
    functions outright.  For the chain, h is a state vector and only the
    adapted variant exists.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if variant not in ("adapted", "nonadapted"):
        raise ValueError(f"unknown variant {variant!r}")
    if model.chain is not None:
        if variant != "adapted":
            raise CapabilityError("the renewal chain exposes only the adapted oracle")
        out = np.asarray(h, dtype=float)
        for _ in range(k):
            out = chain_transition(model.chain, out)
        return out
    if model.increment_fn is None:
        raise CapabilityError(f"model kind {model.kind!r} exposes no oracle")
    fn = h
    if variant == "adapted":
        if _window_span(fn)[1] > 0:
            raise CapabilityError("adapted oracle requires a function of present and past innovations")
        for _ in range(k):
            if fn.is_zero:
                return ZERO_FUNCTION
            fn = fn.shift(1).condexp_past(0)
        return ZERO_FUNCTION if fn.is_zero else fn
    for _ in range(k):
        if fn.is_zero:
            return ZERO_FUNCTION
        shifted = fn.shift(-1)
        fn = shifted - shifted.condexp_past(0)
    return ZERO_FUNCTION if fn.is_zero else fn


def semigroup_partial_sum(model: ProcessModel, variant: str, h, n: int):
    """V_n h = sum_{i=0}^{n-1} P^i h, exploiting that finite-memory window
    functions are annihilated after finitely many applications."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if model.chain is not None:
        if variant != "adapted":
            raise CapabilityError("the renewal chain exposes only the adapted oracle")
        h = np.asarray(h, dtype=float)
        if np.array_equal(h, model.chain.g_vector()):
            return ChainOracle(model.chain).v_sum(n)
        total = h.copy()
        term = h
        for _ in range(1, n):
            term = chain_transition(model.chain, term)
            total += term
        return total
    total = h
    term = h
    for _ in range(1, n):
        term = apply_PT(model, variant, term, 1)
        if term.is_zero:
            break
        total = total + term
    return total


def conditional_sum_function(model: ProcessModel, n: int):
    """E[S_n | past] for the model's own increment function (adapted models);
    equals V_n f applied to the increment function."""
    if model.chain is not None:
        return ChainOracle(model.chain).v_sum(n)
    if not model.has_PT_adapted:
        raise CapabilityError(f"model {model.label!r} has no conditional-sum oracle")
    return semigroup_partial_sum(model, "adapted", model.increment_fn, n)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def model_to_json(model: ProcessModel) -> str:
    return json.dumps(model.to_dict(), sort_keys=True)


def model_from_dict(doc: dict) -> ProcessModel:
    kind = doc.get("kind")
    if kind == "iid":
        return iid_model(doc.get("innovation", "normal"), float(doc.get("scale", 1.0)))
    if kind == "martingale_difference":
        return mds_model(doc.get("innovation", "rademacher"), float(doc.get("modulation", 0.0)))
    if kind == "martingale_plus_coboundary":
        return coboundary_model(
            doc.get("g_coeffs", [1.0]),
            doc.get("innovation", "rademacher"),
            doc.get("mds_part", 1.0),
            doc.get("direction", "forward"),
        )
    if kind == "linear_process":
        return linear_process_model(doc.get("coeffs", [1.0]), doc.get("innovation", "normal"))
    if kind == "renewal_chain":
        return renewal_model(float(doc.get("p", 3.0)), int(doc.get("depth", 4)))
    raise ValueError(f"unknown model kind {kind!r}")


def model_from_json(text: str) -> ProcessModel:
    return model_from_dict(json.loads(text))
