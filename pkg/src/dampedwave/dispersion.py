"""Algebraic characteristic equations for the non-real spectrum.

On the line with damping a(x) = x^(2n) + a0 and constant potential q0, the
non-real eigenvalues of the generator solve

    (lambda^2 + 2*lambda*a0 + q0)^(n+1) = 2*lambda*(-mu_k(n))^(n+1)

with mu_k(n) the oscillator eigenvalues; on the strip of half-width ell with
a(x, y) = x^2 + a0 the transverse Dirichlet modes give the quartic

    [lambda^2 + (j*pi/(2*ell))^2 + 2*lambda*a0 + q0]^2 = 2*lambda*(2k+1)^2.

This module expands those equations into coefficient form, finds all complex
roots by Aberth-Ehrlich simultaneous iteration, filters the physically
admissible branches through the spectral enclosures Re <= -a0, |lambda|^2 >=
q0, and provides the closed-form limit spectrum and large-mu asymptotic seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ParameterError

__all__ = [
    "PencilParams",
    "StripParams",
    "ComplexPolynomial",
    "RootSet",
    "EigenvalueBranch",
    "LimitEigenvalue",
    "line_char_poly",
    "strip_char_poly",
    "roots_all",
    "physical_roots",
    "asymptotic_lambda",
    "limit_lambda",
]

#: scaled-residual acceptance threshold for simple roots
RESIDUAL_TOL = 1e-10
#: enlarged acceptance threshold for near-multiple (clustered) roots
CLUSTER_RESIDUAL_TOL = 1e-7
#: two roots closer than this are treated as a near-multiple pair
CLUSTER_GAP = 1e-6
#: relative floor below which an imaginary part counts as real-axis noise
IM_NOISE_FLOOR = 1e-9
_ABERTH_MAX_ITER = 300


@dataclass(frozen=True)
class PencilParams:
    """Line problem: damping x^(2n) + a0, constant potential q0."""

    n: int
    a0: float = 0.0
    q0: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"damping exponent must be >= 1, got {self.n}")
        if self.a0 < 0 or self.q0 < 0:
            raise ParameterError("a0 and q0 must be non-negative")


@dataclass(frozen=True)
class StripParams:
    """Strip problem R x (-ell, ell): damping x^2 + a0, constant potential q0."""

    ell: float
    a0: float = 0.0
    q0: float = 0.0

    def __post_init__(self):
        if self.ell <= 0:
            raise ParameterError(f"strip half-width must be positive, got {self.ell}")
        if self.a0 < 0 or self.q0 < 0:
            raise ParameterError("a0 and q0 must be non-negative")


@dataclass
class ComplexPolynomial:
    """Polynomial in ascending coefficient order with nonzero leading term."""

    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.ndim != 1 or self.coefficients.size < 1:
            raise ParameterError("coefficients must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.coefficients)):
            raise ParameterError("polynomial coefficients overflowed; rescale the inputs")
        if self.coefficients[-1] == 0:
            raise ParameterError("leading coefficient must be nonzero")

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coefficients)

    def derivative(self, z):
        dcoef = self.coefficients[1:] * np.arange(1, self.coefficients.size)
        return np.polynomial.polynomial.polyval(z, dcoef)

    def scaled_residual(self, z):
        """|p(z)| / (|leading| * max(1, |z|)^degree)."""
        scale = np.abs(self.coefficients[-1]) * np.maximum(1.0, np.abs(z)) ** self.degree
        return np.abs(self(z)) / scale


@dataclass
class RootSet:
    """All roots of one polynomial plus their scaled residuals."""

    roots: np.ndarray
    residuals: np.ndarray
    clusters: list = field(default_factory=list)

    def __post_init__(self):
        self.roots = np.asarray(self.roots, dtype=complex)
        self.residuals = np.asarray(self.residuals, dtype=float)


@dataclass
class EigenvalueBranch:
    """One admissible (Im > 0) eigenvalue branch; the conjugate is implied."""

    lam: complex
    params: PencilParams | StripParams
    mu: float
    k: int | None = None
    j: int | None = None
    residual: float = 0.0
    verified: bool = False

    def __post_init__(self):
        a0 = self.params.a0
        q0 = self.params.q0
        if self.lam.imag <= 0:
            raise ParameterError("branch representative must have Im > 0")
        if self.lam.real > 0 or self.lam.real > -a0 or abs(self.lam) ** 2 < q0:
            raise ParameterError("branch violates the spectral enclosures")


@dataclass(frozen=True)
class LimitEigenvalue:
    """Limit spectrum member(s) for the interval problem with constant damping.

    ``values`` holds one complex number (Im > 0) on the non-degenerate line
    Re = -a0, or the two real values -a0 +- sqrt(a0^2 - mu_k - q0) when the
    discriminant turns negative (``real_pair`` set); both coincide at -a0 in
    the degenerate case (``degenerate`` set, zero discriminant).
    """

    values: tuple
    real_pair: bool
    degenerate: bool = False


def line_char_poly(params: PencilParams, mu: float) -> ComplexPolynomial:
    """(lambda^2 + 2*a0*lambda + q0)^(n+1) - 2*lambda*(-mu)^(n+1) in coefficient form.

    Degree 2(n+1).  Coefficient overflow for extreme (n, mu) raises a
    parameter error instead of propagating infs.
    """
    if mu <= 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    n = params.n
    base = np.array([params.q0, 2.0 * params.a0, 1.0])
    coeffs = np.array([1.0])
    for _ in range(n + 1):
        coeffs = np.convolve(coeffs, base)
    coeffs = coeffs.astype(complex)
    with np.errstate(over="ignore"):
        coeffs[1] -= 2.0 * (-np.float64(mu)) ** (n + 1)
    return ComplexPolynomial(coeffs)


def strip_char_poly(params: StripParams, j: int, k: int) -> ComplexPolynomial:
    """[lambda^2 + (j*pi/(2*ell))^2 + 2*a0*lambda + q0]^2 - 2*lambda*(2k+1)^2."""
    if j < 1:
        raise ParameterError(f"transverse mode index j must be >= 1, got {j}")
    if k < 0:
        raise ParameterError(f"longitudinal mode index k must be >= 0, got {k}")
    sigma_j = (j * np.pi / (2.0 * params.ell)) ** 2
    base = np.array([params.q0 + sigma_j, 2.0 * params.a0, 1.0])
    coeffs = np.convolve(base, base).astype(complex)
    coeffs[1] -= 2.0 * (2 * k + 1) ** 2
    return ComplexPolynomial(coeffs)


def _initial_points(coeffs: np.ndarray) -> np.ndarray:
    """Newton-polygon starting points for Aberth.

    The upper convex hull of (i, log|c_i|) partitions the root magnitudes
    into per-edge estimates r = |c_i1 / c_i2|^(1/(i2-i1)); each edge
    contributes i2-i1 points on a circle of that radius.  Circles are rotated
    by 0.3 rad (plus a per-circle stagger) to break symmetry ties with the
    real coefficient patterns produced here.  This initialization copes with
    the huge coefficient dynamic range of the large-mu characteristic
    polynomials, where a single Cauchy-bound circle stalls.
    """
    deg = coeffs.size - 1
    mags = np.abs(coeffs)
    pts = [(i, float(np.log(mags[i]))) for i in range(deg + 1) if mags[i] > 0.0]
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0.0:
                hull.pop()
            else:
                break
        hull.append(p)
    z = np.empty(deg, dtype=complex)
    pos = 0
    for (i1, l1), (i2, l2) in zip(hull, hull[1:]):
        count = i2 - i1
        radius = np.exp((l1 - l2) / count)
        angles = 2.0 * np.pi * np.arange(count) / count + 0.3 + 0.7 * i1 / (deg + 1)
        z[pos:pos + count] = radius * np.exp(1j * angles)
        pos += count
    return z


def _aberth(coeffs: np.ndarray) -> np.ndarray:
    """All roots of the (deflated, max-normalized) polynomial by Aberth-Ehrlich."""
    deg = coeffs.size - 1
    if deg == 1:
        return np.array([-coeffs[0] / coeffs[1]])
    z = _initial_points(coeffs)
    dcoef = coeffs[1:] * np.arange(1, coeffs.size)
    lead = np.abs(coeffs[-1])
    best = np.inf
    stalled = 0
    for _ in range(_ABERTH_MAX_ITER):
        p = np.polynomial.polynomial.polyval(z, coeffs)
        scaled = float(np.max(np.abs(p) / (lead * np.maximum(1.0, np.abs(z)) ** deg)))
        if scaled < 1e-13:
            break
        # plateau at the floating-point evaluation floor counts as converged
        stalled = stalled + 1 if scaled > 0.5 * best else 0
        best = min(best, scaled)
        if stalled >= 10 and best < 1e-9:
            break
        dp = np.polynomial.polynomial.polyval(z, dcoef)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = np.where(dp != 0, p / dp, 0.0)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            repulsion = np.sum(1.0 / diff, axis=1)
            w = newton / (1.0 - newton * repulsion)
        w = np.where(np.isfinite(w), w, 0.0)
        z = z - w
        if np.max(np.abs(w) / np.maximum(1.0, np.abs(z))) < 1e-14:
            break
    else:
        raise NumericalError(
            f"Aberth iteration did not converge for degree-{deg} polynomial "
            f"with coefficients {coeffs!r}"
        )
    return z


def _symmetrize_conjugates(roots: np.ndarray) -> np.ndarray:
    """Make the root set of a real-coefficient polynomial exactly conjugate-closed.

    Near-critical pairs (conjugates about to merge on the real axis) carry
    the largest numerical asymmetry; averaging each root with its partner's
    conjugate removes it and cancels the leading error term.  Roots with
    imaginary parts at rounding level are snapped onto the axis.
    """
    roots = roots.copy()
    used = np.zeros(roots.size, dtype=bool)
    for i in range(roots.size):
        if used[i]:
            continue
        z = roots[i]
        scale = max(1.0, abs(z))
        if abs(z.imag) <= 1e-12 * scale:
            roots[i] = complex(z.real, 0.0)
            used[i] = True
            continue
        others = [k for k in range(roots.size) if k != i and not used[k]]
        if not others:
            continue
        j = min(others, key=lambda k: abs(roots[k] - np.conj(z)))
        if abs(roots[j] - np.conj(z)) <= 1e-3 * scale:
            mean = 0.5 * (z + np.conj(roots[j]))
            roots[i] = mean
            roots[j] = np.conj(mean)
            used[i] = used[j] = True
    return roots


def roots_all(poly: ComplexPolynomial) -> RootSet:
    """Every complex root of ``poly`` with verified scaled residuals.

    Zero roots are deflated exactly; the rest start on Newton-polygon circles
    and iterate simultaneously, followed by one Newton polish per root.  For
    real coefficients the returned multiset is exactly closed under complex
    conjugation.  Roots closer than 1e-6 are re-polished with a
    multiplicity-2 Newton step and reported in ``clusters`` with an enlarged
    residual tolerance.
    """
    if poly.degree < 1:
        raise ParameterError("polynomial must have degree >= 1")
    coeffs = poly.coefficients.copy()
    n_zero = 0
    while coeffs[0] == 0 and coeffs.size > 1:
        coeffs = coeffs[1:]
        n_zero += 1
    scale = np.max(np.abs(coeffs))
    roots = _aberth(coeffs / scale) if coeffs.size > 1 else np.empty(0, dtype=complex)

    # one Newton polish on the original polynomial
    dp = poly.derivative(roots)
    p = poly(roots)
    polish = np.where(dp != 0, p / dp, 0.0)
    roots = roots - np.where(np.isfinite(polish), polish, 0.0)

    if np.all(poly.coefficients.imag == 0.0):
        roots = _symmetrize_conjugates(roots)

    roots = np.concatenate([np.zeros(n_zero, dtype=complex), roots])

    clusters = []
    order = np.argsort(roots.real + 1e-9 * roots.imag)
    for a in range(roots.size):
        for b in range(a + 1, roots.size):
            if abs(roots[order[a]] - roots[order[b]]) < CLUSTER_GAP:
                pair = (int(order[a]), int(order[b]))
                clusters.append(pair)
                for idx in pair:
                    # multiplicity-2 Newton variant for the near-double pair
                    z = roots[idx]
                    dz = poly.derivative(z)
                    if dz != 0:
                        roots[idx] = z - 2.0 * poly(z) / dz

    residuals = poly.scaled_residual(roots)
    # evaluation floor of the scaled residual: |p| at any double-precision
    # root cannot fall below eps * sum |c_i| |z|^i, whatever the algorithm
    mags = np.abs(poly.coefficients)
    floor = (
        np.finfo(float).eps
        * np.polynomial.polynomial.polyval(np.abs(roots), mags)
        / (mags[-1] * np.maximum(1.0, np.abs(roots)) ** poly.degree)
    )
    clustered = set(i for pair in clusters for i in pair)
    for i, res in enumerate(residuals):
        tol = CLUSTER_RESIDUAL_TOL if i in clustered else RESIDUAL_TOL
        tol = max(tol, 8.0 * float(floor[i]))
        if res > tol:
            raise NumericalError(
                f"root {roots[i]} of degree-{poly.degree} polynomial has scaled "
                f"residual {res:.3e} above {tol:.0e}"
            )
    return RootSet(roots=roots, residuals=residuals, clusters=clusters)


def physical_roots(
    rs: RootSet,
    params: PencilParams | StripParams,
    mu: float,
    k: int | None = None,
    j: int | None = None,
) -> list[EigenvalueBranch]:
    """Admissible branches: Im > 0, Re <= 0, Re <= -a0 and |lambda|^2 >= q0.

    The last two filters are necessary conditions for membership in the
    non-real spectrum, so algebraic roots violating them are spurious and
    dropped.  Roots whose imaginary part is below floating-point noise
    (relative to |lambda|) sit on the real axis, where the characteristic
    equations produce spurious algebraic solutions; they are excluded by the
    strict Im > 0 requirement.  Survivors are ordered by ascending imaginary
    part; conjugates are implied, not stored.  An empty result is legal.
    """
    branches = []
    for root, res in zip(rs.roots, rs.residuals):
        lam = complex(root)
        if lam.imag <= IM_NOISE_FLOOR * max(1.0, abs(lam)) or lam.real > 0:
            continue
        if lam.real > -params.a0 or abs(lam) ** 2 < params.q0:
            continue
        branches.append(
            EigenvalueBranch(lam=lam, params=params, mu=mu, k=k, j=j, residual=float(res))
        )
    branches.sort(key=lambda b: b.lam.imag)
    return branches


def asymptotic_lambda(n: int, a0: float, mu: float) -> complex:
    """Leading-order seed 2^(1/(2n+1)) e^(i pi (n+1)/(2n+1)) mu^((n+1)/(2n+1)) - 2(n+1)/(2n+1) a0.

    The correction terms vanishing for large mu are dropped, so this is a
    seed/estimate, not an eigenvalue.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if mu <= 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    m = 2 * n + 1
    ray = 2.0 ** (1.0 / m) * np.exp(1j * np.pi * (n + 1) / m) * mu ** ((n + 1.0) / m)
    return complex(ray - 2.0 * (n + 1) / m * a0)


def limit_lambda(k: int, a0: float, q0: float, ell: float = 1.0) -> LimitEigenvalue:
    """Limit spectrum of the interval problem with constant damping a0.

    With mu_k = (k*pi/(2*ell))^2: if mu_k + q0 > a0^2 the representative
    -a0 + i*sqrt(mu_k + q0 - a0^2) on the line Re = -a0 is returned; otherwise
    the square root turns real and the two real values -a0 +- sqrt(a0^2 -
    mu_k - q0) are returned flagged as a real pair (the finitely many
    off-line eigenvalues).
    """
    if k < 1:
        raise ParameterError(f"limit mode index k must be >= 1, got {k}")
    if ell <= 0:
        raise ParameterError(f"ell must be positive, got {ell}")
    mu_k = (k * np.pi / (2.0 * ell)) ** 2
    disc = mu_k + q0 - a0**2
    if disc > 0:
        return LimitEigenvalue(values=(complex(-a0, np.sqrt(disc)),), real_pair=False)
    if disc == 0:
        return LimitEigenvalue(values=(-a0, -a0), real_pair=True, degenerate=True)
    r = np.sqrt(-disc)
    return LimitEigenvalue(values=(-a0 - r, -a0 + r), real_pair=True)
