"""Convex objectives, gradient oracles, and the constants the schedules consume.

Two problem families ship with the package: separable quadratics
``f(x) = 1/2 sum_i d_i (x_i - c_i)^2`` and finite atomic least-squares
objectives ``f(x) = sum_i w_i 1/2 (b_i - <a_i, x>)^2`` whose targets are
consistent (``b_i = <a_i, x_*>``), so their stochastic gradients carry pure
multiplicative noise.  Least-squares instances are finite weighted sample
lists, which keeps all expectations exact sums and makes the curvature
constants (L, mu, R^2, kappa_tilde) computable in closed form.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

Array = np.ndarray

_EIG_REL_TOL = 1e-12


class InvalidProblemError(ValueError):
    """Raised when a problem description violates its invariants."""


class DimensionMismatchError(ValueError):
    """Raised when a point does not match the problem dimension."""


@dataclass(frozen=True)
class ConvexProblem:
    """An L-smooth, mu-strongly-convex objective with exact oracles.

    Attributes:
        dimension: ambient dimension d.
        value_oracle: x -> f(x).
        grad_oracle: x -> grad f(x).
        optimum: a minimizer x_*.
        optimum_value: f(x_*).
        smoothness: smoothness constant L (quadratic upper curvature).
        strong_convexity: strong convexity mu >= 0 (0 means merely convex;
            for singular least-squares Hessians this is the smallest positive
            curvature on the span of the data).
    """

    dimension: int
    value_oracle: Callable[[Array], float]
    grad_oracle: Callable[[Array], Array]
    optimum: Array
    optimum_value: float
    smoothness: float
    strong_convexity: float

    def value(self, x: Array) -> float:
        return self.value_oracle(np.asarray(x, dtype=float))

    def gap(self, x: Array) -> float:
        return self.value(x) - self.optimum_value


@dataclass(frozen=True)
class QuadraticProblem(ConvexProblem):
    """Separable quadratic; ``diag`` holds the per-coordinate curvatures."""

    diag: Array


@dataclass(frozen=True)
class LeastSquaresProblem(ConvexProblem):
    """Noiseless least squares over a finite weighted list of samples.

    ``hessian`` is H = sum_i w_i a_i a_i^T, ``r_squared`` and ``kappa_tilde``
    are the smallest constants with E[|a|^2 a a^T] <= R^2 H and
    E[|a|^2_{H^-1} a a^T] <= kappa_tilde H (pseudo-inverse on the span).
    """

    atoms: Array
    targets: Array
    weights: Array
    hessian: Array
    hessian_pinv: Array
    r_squared: float
    kappa_tilde: float
    cum_weights: Array

    def dist_sq_hinv(self, u: Array) -> float:
        """Squared H^-1 norm of ``u`` (pseudo-inverse on the data span)."""
        return float(u @ self.hessian_pinv @ u)


@dataclass(frozen=True)
class NoiseModel:
    """Gradient noise description: none, additive(sigma2), or multiplicative.

    Additive noise is isotropic Gaussian with covariance (sigma2/d) I, so its
    total variance E|xi|^2 equals the declared bound sigma2.  Multiplicative
    noise draws one (a, b) atom of a least-squares problem per gradient call.
    """

    kind: str
    sigma2: float = 0.0

    _KINDS = ("none", "additive", "multiplicative")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise InvalidProblemError(f"unknown noise kind {self.kind!r}")
        if self.sigma2 < 0:
            raise InvalidProblemError("sigma2 must be >= 0")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls("none")

    @classmethod
    def additive(cls, sigma2: float) -> "NoiseModel":
        return cls("additive", float(sigma2))

    @classmethod
    def multiplicative(cls) -> "NoiseModel":
        return cls("multiplicative")


def _check_dim(problem: ConvexProblem, x: Array) -> Array:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dimension,):
        raise DimensionMismatchError(
            f"point has shape {x.shape}, expected ({problem.dimension},)"
        )
    return x


def make_quadratic(diag_coeffs, center) -> QuadraticProblem:
    """Build f(x) = 1/2 sum_i d_i (x_i - c_i)^2 with L = max d, mu = min d."""
    diag = np.atleast_1d(np.asarray(diag_coeffs, dtype=float)).copy()
    center = np.atleast_1d(np.asarray(center, dtype=float)).copy()
    if diag.size == 0:
        raise InvalidProblemError("empty curvature vector")
    if np.any(diag <= 0):
        raise InvalidProblemError("all quadratic curvatures must be > 0")
    if diag.shape != center.shape:
        raise InvalidProblemError(
            f"curvatures and center disagree: {diag.shape} vs {center.shape}"
        )
    diag.setflags(write=False)
    center.setflags(write=False)

    def value(x: Array) -> float:
        d = x - center
        return float(0.5 * np.dot(diag * d, d))

    def grad(x: Array) -> Array:
        return diag * (x - center)

    return QuadraticProblem(
        dimension=diag.size,
        value_oracle=value,
        grad_oracle=grad,
        optimum=center,
        optimum_value=0.0,
        smoothness=float(diag.max()),
        strong_convexity=float(diag.min()),
        diag=diag,
    )


def _r2_kappa_tilde(atoms: Array, weights: Array, hessian: Array):
    """Smallest constants for the second-moment dominations, plus H pinv.

    Returns (r_squared, kappa_tilde, hessian_pinv).  Works on the span of the
    data; raises if some atom leaves the span of the Hessian.
    """
    eigvals, q = np.linalg.eigh(hessian)
    top = float(eigvals[-1])
    if top <= 0:
        raise InvalidProblemError("Hessian has no positive eigenvalue")
    pos = eigvals > _EIG_REL_TOL * top
    basis = q[:, pos]
    inv_sqrt = basis / np.sqrt(eigvals[pos])
    pinv = (basis / eigvals[pos]) @ basis.T

    residual = atoms - (atoms @ basis) @ basis.T
    atom_norms = np.linalg.norm(atoms, axis=1)
    if np.any(np.linalg.norm(residual, axis=1) > 1e-8 * np.maximum(atom_norms, 1.0)):
        raise InvalidProblemError("a sample atom leaves the span of the Hessian")

    norms_sq = np.einsum("ij,ij->i", atoms, atoms)
    m1 = (atoms * (weights * norms_sq)[:, None]).T @ atoms
    r_squared = float(np.linalg.eigvalsh(inv_sqrt.T @ m1 @ inv_sqrt)[-1])

    hinv_norms_sq = np.einsum("ij,jk,ik->i", atoms, pinv, atoms)
    m2 = (atoms * (weights * hinv_norms_sq)[:, None]).T @ atoms
    kappa_tilde = float(np.linalg.eigvalsh(inv_sqrt.T @ m2 @ inv_sqrt)[-1])
    return r_squared, kappa_tilde, pinv


def make_least_squares(atoms, optimum, weights=None) -> LeastSquaresProblem:
    """Build a noiseless least-squares problem from atoms and a minimizer.

    Targets are set to b_i = <a_i, x_*> exactly, so every stochastic gradient
    vanishes at the optimum.  ``weights`` default to uniform and are
    normalized to sum to one.
    """
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float)).copy()
    optimum = np.atleast_1d(np.asarray(optimum, dtype=float)).copy()
    n, d = atoms.shape
    if optimum.shape != (d,):
        raise InvalidProblemError(
            f"optimum has shape {optimum.shape}, atoms have dimension {d}"
        )
    if weights is None:
        weights = np.full(n, 1.0 / n)
    else:
        weights = np.asarray(weights, dtype=float).copy()
        if weights.shape != (n,) or np.any(weights <= 0):
            raise InvalidProblemError("weights must be positive, one per sample")
        weights = weights / weights.sum()

    targets = atoms @ optimum
    weighted_atoms = atoms * weights[:, None]
    hessian = weighted_atoms.T @ atoms
    hessian = 0.5 * (hessian + hessian.T)
    r_squared, kappa_tilde, pinv = _r2_kappa_tilde(atoms, weights, hessian)

    eigvals = np.linalg.eigvalsh(hessian)
    top = float(eigvals[-1])
    positive = eigvals[eigvals > _EIG_REL_TOL * top]

    for arr in (atoms, optimum, weights, targets, hessian, pinv):
        arr.setflags(write=False)

    def value(x: Array) -> float:
        res = targets - atoms @ x
        return float(0.5 * np.dot(weights * res, res))

    def grad(x: Array) -> Array:
        return weighted_atoms.T @ (atoms @ x - targets)

    return LeastSquaresProblem(
        dimension=d,
        value_oracle=value,
        grad_oracle=grad,
        optimum=optimum,
        optimum_value=0.0,
        smoothness=top,
        strong_convexity=float(positive.min()),
        atoms=atoms,
        targets=targets,
        weights=weights,
        hessian=hessian,
        hessian_pinv=pinv,
        r_squared=r_squared,
        kappa_tilde=kappa_tilde,
        cum_weights=np.cumsum(weights),
    )


def compute_r2_kappa_tilde(problem: LeastSquaresProblem) -> tuple[float, float]:
    """Recompute (R^2, kappa_tilde) for a least-squares problem."""
    r2, kt, _ = _r2_kappa_tilde(problem.atoms, problem.weights, problem.hessian)
    return r2, kt


def gradient(problem: ConvexProblem, x: Array) -> Array:
    """Exact gradient of ``problem`` at ``x``."""
    return problem.grad_oracle(_check_dim(problem, x))


def stochastic_gradient(
    problem: ConvexProblem, noise: NoiseModel, x: Array, rng: np.random.Generator
) -> Array:
    """One stochastic gradient draw at ``x`` under the given noise model."""
    x = _check_dim(problem, x)
    if noise.kind == "none":
        return problem.grad_oracle(x)
    if noise.kind == "additive":
        scale = np.sqrt(noise.sigma2 / problem.dimension)
        return problem.grad_oracle(x) + scale * rng.standard_normal(problem.dimension)
    if not isinstance(problem, LeastSquaresProblem):
        raise InvalidProblemError(
            "multiplicative noise requires a least-squares problem"
        )
    i = int(np.searchsorted(problem.cum_weights, rng.random(), side="right"))
    i = min(i, len(problem.targets) - 1)
    a = problem.atoms[i]
    return (float(a @ x) - problem.targets[i]) * a


def sample_atom_gradient(problem: LeastSquaresProblem, x: Array, index: int) -> Array:
    """Multiplicative-noise gradient for a fixed atom index (no sampling)."""
    a = problem.atoms[index]
    return (float(a @ x) - problem.targets[index]) * a


# ---------------------------------------------------------------------------
# Structured-text serialization (same grammar as the harness config files).

def _f17(v: float) -> str:
    """Lossless decimal text for a float."""
    return format(float(v), ".17g")


def serialize_problem(problem: ConvexProblem, noise: NoiseModel | None = None) -> str:
    """Render a problem (and optional noise block) as structured text."""
    cp = configparser.ConfigParser()
    if isinstance(problem, QuadraticProblem):
        cp["problem"] = {
            "kind": "quadratic",
            "diag": " ".join(_f17(v) for v in problem.diag),
            "center": " ".join(_f17(v) for v in problem.optimum),
        }
    elif isinstance(problem, LeastSquaresProblem):
        lines = []
        for a, b, w in zip(problem.atoms, problem.targets, problem.weights):
            coords = " ".join(_f17(v) for v in a)
            lines.append(f"{coords} | {_f17(b)} | {_f17(w)}")
        cp["problem"] = {
            "kind": "least_squares",
            "optimum": " ".join(_f17(v) for v in problem.optimum),
            "samples": "\n" + "\n".join(lines),
        }
    else:
        raise InvalidProblemError("only quadratic and least-squares serialize")
    if noise is not None:
        block = {"kind": noise.kind}
        if noise.kind == "additive":
            block["sigma2"] = _f17(noise.sigma2)
        cp["noise"] = block
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _floats(text: str) -> Array:
    return np.array([float(tok) for tok in text.split()], dtype=float)


def parse_problem_text(text: str) -> tuple[ConvexProblem, NoiseModel]:
    """Parse the structured-text problem grammar back into objects."""
    cp = configparser.ConfigParser()
    cp.read_string(text)
    if "problem" not in cp:
        raise InvalidProblemError("missing [problem] section")
    section = cp["problem"]
    kind = section.get("kind", "")
    if kind == "quadratic":
        problem: ConvexProblem = make_quadratic(
            _floats(section.get("diag", "")), _floats(section.get("center", ""))
        )
    elif kind == "least_squares":
        optimum = _floats(section.get("optimum", ""))
        atoms, targets, weights = [], [], []
        for line in section.get("samples", "").strip().splitlines():
            parts = [p.strip() for p in line.split("|")]
            if len(parts) not in (2, 3):
                raise InvalidProblemError(f"bad sample line: {line!r}")
            atoms.append(_floats(parts[0]))
            targets.append(float(parts[1]))
            weights.append(float(parts[2]) if len(parts) == 3 else 1.0)
        problem = make_least_squares(np.array(atoms), optimum, np.array(weights))
        if np.max(np.abs(problem.targets - np.array(targets))) > 1e-10:
            raise InvalidProblemError("targets are inconsistent with the optimum")
    else:
        raise InvalidProblemError(f"unknown problem kind {kind!r}")

    noise = NoiseModel.none()
    if "noise" in cp:
        nsec = cp["noise"]
        nkind = nsec.get("kind", "none")
        if nkind == "additive":
            noise = NoiseModel.additive(float(nsec.get("sigma2", "0")))
        elif nkind == "multiplicative":
            noise = NoiseModel.multiplicative()
        elif nkind != "none":
            raise InvalidProblemError(f"unknown noise kind {nkind!r}")
    return problem, noise
