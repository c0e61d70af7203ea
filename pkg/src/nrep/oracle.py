"""Membership oracle for the set K of reachable expectation coordinates.

K_N is the set of coordinate vectors of normalized two-particle reductions
of N-particle states.  Membership of a target vector is decided through
Euclidean projection in coordinate space, computed by conditional-gradient
iteration over the sector density set: each linear subproblem is solved by
the minimum eigenvector of the gradient-lifted Hermitian operator, and the
stepped iterate is then polished over the density set.  The duality gap
bounds the distance error, so every verdict comes with a certificate:
an explicit witness state for YES-side answers and a certified distance
lower bound (optionally a separating hyperplane) for NO-side answers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PointInsideError
from .fock import NSectorDensity, build_basis
from .rdm import (
    ExpectationVector,
    ObservableBasis,
    OneRDM,
    TwoRDM,
    coleman_check,
    observable_basis,
    rdm_normalization,
)

DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 20_000


def min_eigvec(
    mat: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 800,
    seed: int = 0,
    start: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Minimum eigenpair of a Hermitian matrix by shifted power iteration.

    Iterates on (s I - H) with s an upper bound on the spectrum (row-sum
    bound), stopping once the eigen-residual ||Hv - θv|| falls below
    tol * max(1, s); ties in a degenerate extreme eigenspace are broken by
    whichever vector the deterministically seeded start converges to first.
    Each sweep applies the 16th power of the shifted matrix, which changes
    nothing about the limit but cuts the iteration count.  Inside a
    near-degenerate extreme cluster the residual plateaus at the cluster
    width; a stagnation window bounds the effort there, and the value error
    on exit is of the order of that width.
    """
    n = mat.shape[0]
    if n == 1:
        return float(mat[0, 0].real), np.ones(1, dtype=complex)
    shift = float(np.max(np.sum(np.abs(mat), axis=1)))
    flipped = shift * np.eye(n) - mat
    scale = float(np.max(np.abs(flipped)))
    if scale <= 1e-300:
        v = np.zeros(n, dtype=complex)
        v[0] = 1.0
        return float(np.real(mat[0, 0])), v
    stepper = flipped / scale
    for _ in range(4):
        stepper = stepper @ stepper
        stepper /= max(float(np.max(np.abs(stepper))), 1e-300)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    v /= np.linalg.norm(v)
    if start is not None:
        # keep a random component so a stale eigenvector cannot trap the
        # iteration away from the extreme eigenspace
        v = start.astype(complex) / np.linalg.norm(start) + 0.05 * v
    v = v / np.linalg.norm(v)
    cutoff = tol * max(1.0, shift)
    window_best = -np.inf
    window_start = -np.inf
    for sweep in range(max_iter):
        w = flipped @ v
        ray = float(np.real(np.vdot(v, w)))
        if float(np.linalg.norm(w - ray * v)) <= cutoff:
            break
        window_best = max(window_best, ray)
        if sweep % 32 == 31:
            if window_best - window_start <= 1e-12 * max(scale, abs(window_best)):
                break
            window_start = window_best
        w = stepper @ v
        nw = float(np.linalg.norm(w))
        if nw <= 1e-300:
            break  # stepper annihilates v: restart direction is arbitrary
        v = w / nw
    return float(np.real(np.vdot(v, mat @ v))), v


def _density_projection(mat: np.ndarray) -> np.ndarray:
    """Frobenius projection onto the density-matrix set: Hermitize, then
    project the spectrum onto the probability simplex."""
    mat = 0.5 * (mat + mat.conj().T)
    evals, evecs = np.linalg.eigh(mat)
    lam = _project_simplex(evals)
    return (evecs * lam) @ evecs.conj().T


_MAP_LIPSCHITZ: dict[tuple[int, int], float] = {}


def _map_lipschitz(basis: ObservableBasis, n_particles: int, ops: _StackOps) -> float:
    """Upper bound on the curvature of sigma -> ||c(sigma) - t||^2, from a
    short power iteration on the coordinate-map Gram operator."""
    key = (basis.d, n_particles)
    if key not in _MAP_LIPSCHITZ:
        rng = np.random.default_rng(1234)
        x = rng.normal(size=(ops.dim, ops.dim))
        x = (x + x.T).astype(complex)
        norm = 1.0
        for _ in range(25):
            x = ops.lift(ops.coords(x))
            x = 0.5 * (x + x.conj().T)
            norm = float(np.linalg.norm(x))
            if norm <= 1e-300:
                break
            x = x / norm
        _MAP_LIPSCHITZ[key] = 2.1 * max(norm, 1e-12)
    return _MAP_LIPSCHITZ[key]


def _apgd_density_correction(
    ops: _StackOps,
    target: np.ndarray,
    sigma0: np.ndarray,
    lips: float,
    iters: int = 60,
) -> np.ndarray:
    """Accelerated projected-gradient polish of the projection iterate over
    the full density set; every step is feasible, so the result can only
    improve the conditional-gradient iterate it starts from."""
    x = sigma0
    y = sigma0
    t_acc = 1.0
    step = 1.0 / lips
    best = x
    best_val = float(np.linalg.norm(ops.coords(x) - target))
    for _ in range(iters):
        resid = ops.coords(y) - target
        grad = ops.lift(2.0 * resid)
        x_new = _density_projection(y - step * grad)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_acc * t_acc))
        y = x_new + ((t_acc - 1.0) / t_new) * (x_new - x)
        x, t_acc = x_new, t_new
        val = float(np.linalg.norm(ops.coords(x) - target))
        if val < best_val:
            best, best_val = x, val
    return best


@dataclass(frozen=True)
class RepresentabilityInstance:
    rho: TwoRDM
    n_particles: int
    d: int
    beta: float

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("tolerance beta must be nonnegative")
        if not 2 <= self.n_particles <= self.d:
            raise ValueError(f"particle count {self.n_particles} outside [2, {self.d}]")
        if self.rho.d != self.d:
            raise ValueError("TwoRDM mode count disagrees with instance")


@dataclass
class ProjectionResult:
    """Outcome of projecting a coordinate vector onto K."""

    p_star: ExpectationVector
    distance: float
    witness: NSectorDensity
    iterations: int
    gap: float
    gap_slack: float = 0.0
    budget_exhausted: bool = False
    gap_log: list = field(default_factory=list, repr=False)
    warm_data: tuple = field(default=None, repr=False)

    @property
    def certified_gap(self) -> float:
        """Duality gap padded by the eigensolver error allowance, safe to
        use in one-sided certificates."""
        return self.gap + self.gap_slack

    @property
    def distance_lower(self) -> float:
        return float(np.sqrt(max(self.distance**2 - self.certified_gap, 0.0)))

    @property
    def separation_depth(self) -> float:
        """Certified distance from the target to the half-space containing
        K that the final gradient defines: every reachable point alpha
        satisfies n.alpha <= n.p_star + gap/(2 distance) for the unit normal
        n toward the target."""
        if self.distance <= 0:
            return 0.0
        return self.distance - self.certified_gap / (2.0 * self.distance)


@dataclass(frozen=True)
class SeparatingHyperplane:
    normal: np.ndarray
    offset: float
    margin: float


_SCALED_STACKS: dict[tuple[int, int], np.ndarray] = {}
_STACK_OPS: dict[tuple[int, int], "_StackOps"] = {}


def scaled_sector_stack(basis: ObservableBasis, n_particles: int) -> np.ndarray:
    """Observable sector matrices carrying the 2-RDM normalization, so that
    tr(stack[k] sigma) is the k-th coordinate of the reduced state."""
    key = (basis.d, n_particles)
    if key not in _SCALED_STACKS:
        _SCALED_STACKS[key] = rdm_normalization(n_particles) * basis.sector_stack(
            n_particles
        )
    return _SCALED_STACKS[key]


class _StackOps:
    """Coordinate map and its adjoint over one sector, in sparse form when
    the observable matrices are sparse enough to pay off."""

    def __init__(self, stack: np.ndarray):
        ell, dim, _ = stack.shape
        self.ell = ell
        self.dim = dim
        flat = stack.reshape(ell, -1)
        nnz = int(np.count_nonzero(np.abs(flat) > 1e-15))
        if nnz < 0.08 * flat.size:
            import scipy.sparse as sp

            self.fwd = sp.csr_matrix(flat)
            self.bwd = sp.csr_matrix(flat.T.copy())
        else:
            self.fwd = np.ascontiguousarray(flat)
            self.bwd = np.ascontiguousarray(flat.T)

    def coords(self, sigma: np.ndarray) -> np.ndarray:
        """tr(M_k sigma) for every observable."""
        out = self.fwd @ sigma.T.ravel()
        return np.asarray(out).real.reshape(-1)

    def vertex_coords(self, vec: np.ndarray) -> np.ndarray:
        out = self.fwd @ np.outer(vec.conj(), vec).ravel()
        return np.asarray(out).real.reshape(-1)

    def lift(self, weights: np.ndarray) -> np.ndarray:
        """sum_k weights_k M_k as a dense matrix."""
        out = self.bwd @ weights
        return np.asarray(out).reshape(self.dim, self.dim)


def _stack_ops(basis: ObservableBasis, n_particles: int) -> _StackOps:
    key = (basis.d, n_particles)
    if key not in _STACK_OPS:
        _STACK_OPS[key] = _StackOps(scaled_sector_stack(basis, n_particles))
    return _STACK_OPS[key]


def contraction_expectations(
    sigma: NSectorDensity, basis: ObservableBasis | None = None
) -> ExpectationVector:
    """Coordinates of the normalized two-particle reduction of sigma,
    computed directly from sector expectations."""
    d = sigma.basis.d
    if basis is None:
        basis = observable_basis(d)
    stack = scaled_sector_stack(basis, sigma.n_particles)
    vals = np.einsum("kij,ji->k", stack, sigma.matrix).real
    return ExpectationVector(values=vals, d=d, n_particles=sigma.n_particles)


def _project_simplex(w: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    rho_idx = np.nonzero(u * np.arange(1, len(w) + 1) > css)[0][-1]
    theta = css[rho_idx] / (rho_idx + 1.0)
    return np.maximum(w - theta, 0.0)


def project_onto_K(
    alpha_target: ExpectationVector | np.ndarray,
    n_particles: int,
    d: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
    stop_below: float | None = None,
    stop_above: float | None = None,
    stop_separation: tuple[float, float] | None = None,
    basis: ObservableBasis | None = None,
    warm_start: tuple | None = None,
) -> ProjectionResult:
    """Euclidean projection of a coordinate vector onto K_N.

    Minimizes ||c(sigma) - target||^2 over sector densities by conditional
    gradient: the linear subproblem at each step is the minimum eigenvector
    of the lifted gradient, and the stepped iterate is polished over the
    density set.  Terminates when the certified distance sandwich
    closes to tol or the duality gap drops to tol^2; either way the
    returned distance overestimates the true one by at most tol.  Earlier
    exits happen on explicit certificates: distance upper bound below
    `stop_below`, distance lower bound above `stop_above`, or, given
    `stop_separation = (floor, frac)`, a certified separation depth of at
    least frac * distance with distance above the floor.
    """
    if basis is None:
        basis = observable_basis(d)
    target = (
        alpha_target.values
        if isinstance(alpha_target, ExpectationVector)
        else np.asarray(alpha_target, dtype=float)
    )
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    sector = build_basis(d, n_particles)
    ops = _stack_ops(basis, n_particles)
    dim = sector.dim

    # atoms: densities entering the convex iterate; the maximally mixed
    # sector state seeds the first one
    if warm_start is not None:
        atom_mats, columns, weights = warm_start
        atom_mats = list(atom_mats)
        columns = [np.asarray(c) for c in columns]
        weights = np.asarray(weights, dtype=float)
    else:
        mixed = np.eye(dim, dtype=complex) / dim
        atom_mats = [mixed]
        columns = [ops.coords(mixed)]
        weights = np.array([1.0])

    gap = np.inf
    gap_slack = 0.0
    gap_running = np.inf
    gap_log: list[tuple[int, float, float]] = []
    budget_exhausted = False
    it = 0
    vertex = None
    for it in range(1, max_iter + 1):
        col_mat = np.stack(columns, axis=1)
        current = col_mat @ weights
        resid = current - target
        dist = float(np.linalg.norm(resid))

        grad = 2.0 * resid
        lifted = ops.lift(grad)
        lifted = 0.5 * (lifted + lifted.conj().T)
        _, vertex = min_eigvec(lifted, seed=seed, start=vertex)
        vert_col = ops.vertex_coords(vertex)
        gap = float(grad @ (current - vert_col))
        gap = max(gap, 0.0)
        # one-sided certificates must absorb the eigensolver's value error;
        # stalled iterations inside a near-degenerate cluster can miss the
        # extreme value by far more than the residual cutoff suggests
        gap_slack = 1e-6 * (1.0 + float(np.max(np.abs(lifted))))
        gap_running = min(gap_running, gap)
        gap_log.append((it, dist, gap_running))

        certified = gap + gap_slack
        dist_lower = float(np.sqrt(max(dist**2 - certified, 0.0)))
        # the distance sandwich dist_lower <= true <= dist gives the caller
        # guarantee as soon as its width closes to tol; the raw-gap test
        # covers the same ground but is kept as the textbook criterion
        if gap <= tol * tol or dist - dist_lower <= tol:
            break
        if stop_below is not None and dist <= stop_below:
            break
        if stop_above is not None and dist_lower >= stop_above:
            break
        if stop_separation is not None and dist > stop_separation[0]:
            if dist - certified / (2.0 * dist) >= stop_separation[1] * dist:
                break

        # correction: polish the line-searched iterate over the full density
        # set; every polish step is feasible, so this only sharpens the
        # conditional-gradient iterate
        delta = vert_col - current
        denom = float(delta @ delta)
        eta = 1.0 if denom <= 0 else min(1.0, max(0.0, float(-resid @ delta) / denom))
        sigma_now = sum(w * a for w, a in zip(weights, atom_mats))
        stepped = (1 - eta) * sigma_now + eta * np.outer(vertex, vertex.conj())
        lips = _map_lipschitz(basis, n_particles, ops)
        polish_iters = 60 if dim <= 24 else 30
        polished = _apgd_density_correction(
            ops, target, stepped, lips, iters=polish_iters
        )
        atom_mats = [polished]
        columns = [ops.coords(polished)]
        weights = np.array([1.0])
    else:
        budget_exhausted = True

    col_mat = np.stack(columns, axis=1)
    current = col_mat @ weights
    dist = float(np.linalg.norm(current - target))
    sigma = sum(w * a for w, a in zip(weights, atom_mats))
    sigma = 0.5 * (sigma + sigma.conj().T)
    sigma = sigma / float(np.trace(sigma).real)
    witness = NSectorDensity(sector, sigma)
    return ProjectionResult(
        p_star=ExpectationVector(values=current, d=d, n_particles=n_particles),
        distance=dist,
        witness=witness,
        iterations=it,
        gap=float(gap if np.isfinite(gap) else 0.0),
        gap_slack=gap_slack,
        budget_exhausted=budget_exhausted,
        gap_log=gap_log,
        warm_data=(atom_mats, columns, weights),
    )


def separating_hyperplane(
    alpha_target: ExpectationVector | np.ndarray,
    n_particles: int,
    d: int,
    tol: float = DEFAULT_TOL,
    projection: ProjectionResult | None = None,
    basis: ObservableBasis | None = None,
) -> SeparatingHyperplane:
    """Unit-normal hyperplane separating an outside target from K, derived
    from the projection geometry with `tol` slack for projection error."""
    target = (
        alpha_target.values
        if isinstance(alpha_target, ExpectationVector)
        else np.asarray(alpha_target, dtype=float)
    )
    if projection is None:
        projection = project_onto_K(
            target, n_particles, d, tol=tol, basis=basis
        )
    if projection.distance <= 2 * tol:
        raise PointInsideError(
            f"distance {projection.distance:.3e} not above 2*tol = {2 * tol:.3e}"
        )
    diff = target - projection.p_star.values
    dist = float(np.linalg.norm(diff))
    normal = diff / dist
    # the final conditional-gradient certificate bounds n.alpha over K by
    # n.p_star + gap/(2 dist); under the precondition this slack is below
    # the projection tolerance
    slack = projection.certified_gap / (2.0 * dist) + 1e-7
    offset = float(normal @ projection.p_star.values) + slack
    margin = float(normal @ target) - offset
    return SeparatingHyperplane(normal=normal, offset=offset, margin=margin)


def coleman_precheck(rho: TwoRDM, n_particles: int) -> bool:
    """Necessary one-particle condition: contract the pair matrix to a
    one-particle density (rescaled to trace N) and test its spectrum.

    Returns False as a certificate of non-representability; True is
    inconclusive.
    """
    d = rho.d
    pb = rho.pair_basis
    n = n_particles
    gamma = np.zeros((d, d), dtype=complex)
    inv_norm = 1.0 / rdm_normalization(n)
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            acc = 0j
            for k in range(1, d + 1):
                if k == i or k == j:
                    continue
                t_ik = 1.0 if k > i else -1.0
                t_jk = 1.0 if k > j else -1.0
                row = pb.index[(min(j, k), max(j, k))]
                col = pb.index[(min(i, k), max(i, k))]
                acc += t_ik * t_jk * rho.matrix[row, col]
            gamma[i - 1, j - 1] = acc * inv_norm / (n - 1)
    gamma = 0.5 * (gamma + gamma.conj().T)
    tr = float(np.trace(gamma).real)
    if abs(tr) > 1e-12 and abs(tr - n) > 1e-8:
        gamma = gamma * (n / tr)
    return coleman_check(OneRDM(d=d, n_particles=n, matrix=gamma))


@dataclass
class OracleVerdict:
    verdict: str  # YES | NO | BORDERLINE
    distance: float
    beta: float
    iterations: int

    def record(self) -> str:
        return (
            f"verdict={self.verdict} distance={self.distance:.17g} "
            f"beta={self.beta:.17g} iters={self.iterations}"
        )


def is_representable(
    instance: RepresentabilityInstance,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    basis: ObservableBasis | None = None,
) -> OracleVerdict:
    """Decide representability of a pair density within the promise gap.

    The trace-norm tolerance beta is converted to coordinate scale through
    the conservative constant of the observable basis; the YES threshold
    uses the distance upper bound and the NO threshold the certified lower
    bound, so neither answer can be produced in error.  Targets between the
    thresholds are reported BORDERLINE rather than guessed.
    """
    if basis is None:
        basis = observable_basis(instance.d)
    from .rdm import expectation_vector

    target = expectation_vector(instance.rho, basis)
    c_lb = basis.alpha_per_trace_lower()
    t_yes = instance.beta * c_lb / 4.0
    t_no = instance.beta * c_lb / 2.0
    precheck_failed = not coleman_precheck(instance.rho, instance.n_particles)
    result = project_onto_K(
        target,
        instance.n_particles,
        instance.d,
        tol=tol,
        max_iter=max_iter,
        stop_below=t_yes if t_yes > 0 else None,
        stop_above=t_no if t_no > 0 else None,
        basis=basis,
    )
    if precheck_failed:
        verdict = "NO"
    elif result.distance <= t_yes:
        verdict = "YES"
    elif result.distance_lower >= t_no:
        verdict = "NO"
    else:
        verdict = "BORDERLINE"
    return OracleVerdict(
        verdict=verdict,
        distance=result.distance,
        beta=instance.beta,
        iterations=result.iterations,
    )
