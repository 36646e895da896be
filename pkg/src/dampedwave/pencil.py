"""Direct grid verification of pencil eigenvalues.

A candidate lambda is an eigenvalue of the generator exactly when 0 is an
eigenvalue of the quadratic pencil T(lambda) = -Laplace + q + 2*lambda*a +
lambda^2, so the algebraic branches from :mod:`dampedwave.dispersion` can be
cross-checked against a truncated second-order discretization of T: the
smallest singular value of T(lambda) must collapse at eigenvalues, an
argument-principle contour integral must count them, and nonlinear inverse
iteration must reproduce them from nearby seeds.

All lambda-dependent matrices here are complex symmetric tridiagonal, which
keeps every factorization banded (bandwidth at most 2 under partial
pivoting).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import lapack

from .dispersion import PencilParams
from .errors import (
    ContourHitsSpectrum,
    ContourInaccurate,
    NumericalError,
    OutOfBasin,
    ParameterError,
)

__all__ = [
    "GridPencil",
    "ContourSpec",
    "SigmaMinResult",
    "assemble",
    "assemble_for_eigenvalues",
    "smallest_singular_value",
    "count_eigs_contour",
    "refine_eig",
]

_DEFAULT_QUAD_POINTS = 64


@dataclass
class GridPencil:
    """Banded discretization of T(lambda) on (-L, L) with Dirichlet ends.

    ``a0_diag``/``a0_off`` hold the symmetric tridiagonal -Laplace + q0 part;
    ``a1_diag`` is the diagonal damping factor 2(x^(2n) + a0), so
    T(lambda) = A0 + lambda*A1 + lambda^2*I stays tridiagonal for every
    lambda.
    """

    params: PencilParams
    L: float
    N: int
    a0_diag: np.ndarray
    a0_off: np.ndarray
    a1_diag: np.ndarray

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.N + 1)

    @property
    def grid(self) -> np.ndarray:
        return -self.L + self.h * np.arange(1, self.N + 1)

    def t_diag(self, lam: complex) -> np.ndarray:
        return self.a0_diag + lam * self.a1_diag + lam * lam

    def t_apply(self, lam: complex, v: np.ndarray) -> np.ndarray:
        out = self.t_diag(lam) * v
        out[:-1] += self.a0_off * v[1:]
        out[1:] += self.a0_off * v[:-1]
        return out

    def t_prime_diag(self, lam: complex) -> np.ndarray:
        """Diagonal of T'(lambda) = A1 + 2*lambda*I (T' is diagonal here)."""
        return self.a1_diag + 2.0 * lam

    def norm_scale(self, lam: complex) -> float:
        """Infinity-norm estimate of T(lambda), used to scale tolerances."""
        return float(np.max(np.abs(self.t_diag(lam))) + 2.0 * np.max(np.abs(self.a0_off)))

    def _band(self, lam: complex) -> np.ndarray:
        # LAPACK general-band storage with kl = ku = 1 (one spare row for fill)
        ab = np.zeros((4, self.N), dtype=complex, order="F")
        ab[1, 1:] = self.a0_off
        ab[2, :] = self.t_diag(lam)
        ab[3, :-1] = self.a0_off
        return ab


@dataclass(frozen=True)
class ContourSpec:
    """Closed rectangle for argument-principle counting.

    The rectangle must avoid the closed negative real axis, where the pencil
    is not defined and the essential spectrum lives.
    """

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    quad_points: int = _DEFAULT_QUAD_POINTS

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ParameterError("rectangle bounds must be ordered")
        if self.quad_points < 2:
            raise ParameterError("need at least 2 quadrature nodes per side")
        crosses_axis = self.im_min <= 0.0 <= self.im_max
        if crosses_axis and self.re_min <= 0.0:
            raise ParameterError(
                "contour rectangle must not intersect the closed negative real axis"
            )

    def corners(self) -> list[complex]:
        return [
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        ]


@dataclass(frozen=True)
class SigmaMinResult:
    """Smallest-singular-value estimate with convergence diagnostics."""

    value: float
    converged: bool
    iterations: int
    exact_singular: bool = False

    def __float__(self):
        return self.value


def assemble(params: PencilParams, L: float, N: int) -> GridPencil:
    """Discretize T(lambda) for damping x^(2n) + a0 and potential q0.

    A0 is the central-difference Dirichlet Laplacian plus q0*I; A1 is the
    diagonal sampling of 2(x^(2n) + a0).
    """
    if L <= 0:
        raise ParameterError(f"half-width must be positive, got {L}")
    if N < 3:
        raise ParameterError(f"need at least 3 grid points, got {N}")
    h = 2.0 * L / (N + 1)
    x = -L + h * np.arange(1, N + 1)
    a0_diag = 2.0 / h**2 + params.q0 * np.ones(N)
    a0_off = np.full(N - 1, -1.0 / h**2)
    a1_diag = 2.0 * (x ** (2 * params.n) + params.a0)
    return GridPencil(params=params, L=L, N=N, a0_diag=a0_diag, a0_off=a0_off, a1_diag=a1_diag)


def assemble_for_eigenvalues(
    params: PencilParams,
    lams,
    decay_budget: float = 25.0,
    points_per_wavelength: int = 40,
    h_max: float = 0.01,
    n_cap: int = 60_000,
) -> GridPencil:
    """Grid sized so every eigenvector for ``lams`` is truncated and resolved.

    The far-field eigenvector behaviour is exp(-sqrt(2 lambda) x^(n+1)/(n+1)),
    so the truncation needs Re sqrt(2 lambda) * L^(n+1)/(n+1) >= decay_budget;
    nearly overdamped branches (arg lambda near pi) decay slowly and need a
    much wider box than the oscillator turning-point rule suggests.  The step
    resolves the fastest eigenvector oscillation |sqrt(2 lambda)| * L^n.
    """
    lams = [complex(z) for z in lams]
    if not lams:
        raise ParameterError("need at least one eigenvalue to size the grid")
    n = params.n
    L = 6.0
    for lam in lams:
        decay_rate = np.sqrt(2.0 * lam).real
        if decay_rate <= 0:
            raise ParameterError(f"eigenvalue {lam} has no decaying far field")
        L = max(L, ((n + 1) * decay_budget / decay_rate) ** (1.0 / (n + 1)))
    k_osc = max(abs(np.sqrt(2.0 * lam)) * L**n for lam in lams)
    h = min(h_max, 2.0 * np.pi / k_osc / points_per_wavelength)
    N = min(max(int(np.ceil(2.0 * L / h)) - 1, 3), n_cap)
    return assemble(params, L, N)


class _BandedLU:
    """One-shot banded LU of T(lambda); solves T x = b and conj(T) x = b."""

    def __init__(self, pencil: GridPencil, lam: complex):
        ab = pencil._band(lam)
        lu, ipiv, info = lapack.zgbtrf(ab, 1, 1)
        if info < 0:
            raise NumericalError(f"zgbtrf: illegal argument {-info}")
        self.exact_singular = info > 0
        self.lu = lu
        self.ipiv = ipiv

    def solve(self, b: np.ndarray) -> np.ndarray:
        x, info = lapack.zgbtrs(self.lu, 1, 1, b.reshape(-1, 1), self.ipiv)
        if info != 0:
            raise NumericalError(f"zgbtrs failed with info={info}")
        return x[:, 0]

    def solve_conj(self, b: np.ndarray) -> np.ndarray:
        # T is complex symmetric, so T* = conj(T) and one factorization serves both.
        return np.conj(self.solve(np.conj(b)))


def _validate_lambda(lam: complex):
    if lam.imag == 0.0 and lam.real <= 0.0:
        raise ParameterError(
            f"lambda={lam} lies on the closed negative real axis where T is undefined"
        )


def smallest_singular_value(
    pencil: GridPencil,
    lam: complex,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> SigmaMinResult:
    """sigma_min(T(lambda)) by inverse iteration on T(lambda)* T(lambda).

    Power iteration on (T*T)^(-1) through one banded LU of T; the returned
    value is the converged Rayleigh estimate.  An exactly singular
    factorization short-circuits to 0 with the ``exact_singular`` flag.
    """
    lam = complex(lam)
    _validate_lambda(lam)
    lu = _BandedLU(pencil, lam)
    if lu.exact_singular:
        return SigmaMinResult(value=0.0, converged=True, iterations=0, exact_singular=True)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(pencil.N) + 1j * rng.standard_normal(pencil.N)
    v /= np.linalg.norm(v)
    rayleigh_prev = np.inf
    for it in range(1, max_iter + 1):
        w = lu.solve_conj(v)          # w = T^{-*} v
        rayleigh = np.linalg.norm(w) ** 2   # <(T*T)^{-1} v, v> for unit v
        u = lu.solve(w)               # u = (T*T)^{-1} v
        nu = np.linalg.norm(u)
        if not np.isfinite(nu) or nu == 0.0:
            raise NumericalError("inverse iteration broke down")
        v = u / nu
        if abs(rayleigh - rayleigh_prev) <= tol * rayleigh:
            return SigmaMinResult(value=rayleigh ** -0.5, converged=True, iterations=it)
        rayleigh_prev = rayleigh
    return SigmaMinResult(value=rayleigh_prev ** -0.5, converged=False, iterations=max_iter)


@njit(cache=True)
def _inverse_diagonal_jit(diag, off, out):
    """Diagonal of the inverse of a complex symmetric tridiagonal matrix.

    Runs the forward and backward pivot recurrences; entry i of the inverse
    diagonal is 1 / (delta_i + sigma_i - diag_i).  Returns 0 on success and
    the 1-based index of a vanishing pivot on breakdown.
    """
    n = diag.size
    delta = np.empty(n, dtype=np.complex128)
    sigma = np.empty(n, dtype=np.complex128)
    delta[0] = diag[0]
    for i in range(1, n):
        if delta[i - 1] == 0:
            return i
        delta[i] = diag[i] - off[i - 1] * off[i - 1] / delta[i - 1]
    sigma[n - 1] = diag[n - 1]
    for i in range(n - 2, -1, -1):
        if sigma[i + 1] == 0:
            return i + 1
        sigma[i] = diag[i] - off[i] * off[i] / sigma[i + 1]
    for i in range(n):
        denom = delta[i] + sigma[i] - diag[i]
        if denom == 0:
            return i + 1
        out[i] = 1.0 / denom
    return 0


def _resolvent_trace(pencil: GridPencil, lam: complex) -> complex:
    """tr(T(lambda)^(-1) T'(lambda)); exact O(N) since T' is diagonal."""
    diag = np.ascontiguousarray(pencil.t_diag(lam))
    off = np.ascontiguousarray(pencil.a0_off.astype(complex))
    inv_diag = np.empty(pencil.N, dtype=complex)
    status = _inverse_diagonal_jit(diag, off, inv_diag)
    if status != 0:
        raise ContourHitsSpectrum(
            f"pivot breakdown at index {status} while factorizing T({lam}); "
            "the contour passes through (or numerically on) the spectrum"
        )
    return complex(np.sum(inv_diag * pencil.t_prime_diag(lam)))


def count_eigs_contour(pencil: GridPencil, contour: ContourSpec) -> int:
    """Number of pencil eigenvalues inside the rectangle, with multiplicity.

    Evaluates (1/2 pi i) * integral of tr(T^(-1) T') over the rectangle by
    composite trapezoid quadrature with ``quad_points`` nodes per side.  The
    pre-rounding value must lie within 0.2 of an integer, otherwise the count
    is rejected as inaccurate (double ``quad_points`` or move the contour).
    """
    corners = contour.corners()
    total = 0.0 + 0.0j
    q = contour.quad_points
    for a, b in zip(corners, corners[1:] + corners[:1]):
        nodes = a + (b - a) * np.arange(q + 1) / q
        weights = np.full(q + 1, 1.0)
        weights[0] = weights[-1] = 0.5
        step = (b - a) / q
        for node, w in zip(nodes, weights):
            total += w * step * _resolvent_trace(pencil, node)
    raw = total / (2j * np.pi)
    count = round(raw.real)
    if abs(raw - count) > 0.2:
        raise ContourInaccurate(
            f"contour integral {raw:.4f} is not within 0.2 of an integer; "
            f"increase quad_points (currently {q}) or move the contour"
        )
    return int(count)


def refine_eig(
    pencil: GridPencil,
    lambda0: complex,
    tol: float = 1e-10,
    max_iter: int = 60,
) -> tuple[complex, float]:
    """Polish an eigenvalue seed by nonlinear inverse iteration.

    Alternates a banded solve T(lambda) v = v_prev with a lambda update from
    the Rayleigh functional: the root of the scalar quadratic
    <T(lambda)v, v> = 0 nearest the current lambda (ties break toward
    Im > 0).  Stops when ||T(lambda)v|| / ||v|| < tol * scale.

    Returns the refined lambda and its scaled residual.  Divergence, leaving
    the closed left half-plane, or exhausting the budget raises
    :class:`OutOfBasin` carrying the last iterate.
    """
    lam = complex(lambda0)
    _validate_lambda(lam)
    seeded_right = lam.real > 0
    # deterministic parity-free start: an even vector (e.g. all ones) has zero
    # overlap with odd eigenvectors and inverse iteration would skip them
    rng = np.random.default_rng(0)
    v = rng.standard_normal(pencil.N) + 1j * rng.standard_normal(pencil.N)
    v /= np.linalg.norm(v)
    # purify the vector at the fixed seed before any lambda update; in
    # crowded regions (overdamped branches near real grid modes) an impure
    # vector would pull the Rayleigh root into a neighbouring basin
    warmup = _BandedLU(pencil, lam)
    if not warmup.exact_singular:
        for _ in range(2):
            v = warmup.solve(v)
            v /= np.linalg.norm(v)
    residual = np.inf
    for _ in range(max_iter):
        lu = _BandedLU(pencil, lam)
        if not lu.exact_singular:
            v = lu.solve(v)
            nv = np.linalg.norm(v)
            if not np.isfinite(nv) or nv == 0.0:
                raise OutOfBasin("inverse iteration diverged", last_iterate=lam)
            v = v / nv
        # Rayleigh functional: lambda^2 + b*lambda + c with real b, c
        b = float(np.real(np.vdot(v, pencil.a1_diag * v)))
        a0v = pencil.a0_diag * v
        a0v[:-1] += pencil.a0_off * v[1:]
        a0v[1:] += pencil.a0_off * v[:-1]
        c = float(np.real(np.vdot(v, a0v)))
        disc = np.sqrt(complex(b * b - 4.0 * c))
        roots = ((-b + disc) / 2.0, (-b - disc) / 2.0)
        lam_new = min(roots, key=lambda r: (abs(r - lam), -r.imag))
        if not np.isfinite(lam_new.real) or abs(lam_new) > 1e8:
            raise OutOfBasin("Rayleigh update diverged", last_iterate=lam)
        lam = lam_new
        if seeded_right and lam.real <= 0:
            raise OutOfBasin(
                f"seed {lambda0} lies in the right half-plane, which holds no "
                f"spectrum; the iteration exited it (reached {lam})",
                last_iterate=lam,
            )
        if not seeded_right and lam.real > 1e-8 * max(1.0, abs(lam)):
            raise OutOfBasin(
                f"iterate {lam} left the closed left half-plane; no spectrum there",
                last_iterate=lam,
            )
        if abs(lam.imag) < 1e-9 * max(1.0, abs(lam)) and lam.real <= 0:
            raise OutOfBasin(
                f"iterate {lam} landed on the negative real axis, a grid "
                "artifact of the essential spectrum rather than a point eigenvalue",
                last_iterate=lam,
            )
        if abs(lam - complex(lambda0)) > max(1.0, 0.5 * abs(lambda0)):
            raise OutOfBasin(
                f"iterate {lam} drifted far from the seed {lambda0}; "
                "the seed was not within the basin of a single eigenvalue",
                last_iterate=lam,
            )
        residual = float(
            np.linalg.norm(pencil.t_apply(lam, v)) / pencil.norm_scale(lam)
        )
        if residual < tol:
            return lam, residual
    raise OutOfBasin(
        f"no convergence within {max_iter} iterations (residual {residual:.3e})",
        last_iterate=lam,
        residual=residual,
    )
