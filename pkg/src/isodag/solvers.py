"""Least-squares projection onto the monotone cone of a DAG.

Given data ``y`` and positive weights ``w``, the fit is the minimizer of
``sum_i w_i (y_i - theta_i)^2`` over vectors ``theta`` that are isotonic with
respect to the partial order: ``theta_u <= theta_v`` for every cover edge
``u -> v``.

Three routes to the same projection:

* :func:`pava_chain` -- exact pooling for totally ordered data, O(n).
* :func:`project_dykstra` -- cyclic Dykstra projections over the cover-edge
  halfspaces for general DAGs, with correction terms guaranteeing convergence
  to the exact projection.
* :func:`minmax_project_oracle` -- the closed-form min-max over upper and
  lower sets, exponential in n; the reference oracle for small problems.

:func:`verify_projection_certificate` checks an alleged projection against
the KKT conditions of the cone program, recovering nonnegative edge
multipliers by nonnegative least squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import isotonic_regression, nnls

from .orders import Dag, upper_set_masks

DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 100_000
DEFAULT_CERT_TOL = 1e-6


class ConvergenceError(RuntimeError):
    """Dykstra hit its sweep cap; ``.result`` carries the best iterate."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


class CertificateError(RuntimeError):
    """KKT verification failed; names the condition and how far off it is."""

    def __init__(self, condition, excess, threshold):
        super().__init__(
            f"certificate rejected: {condition} off by {excess:.3e} (threshold {threshold:.3e})")
        self.condition = condition
        self.excess = excess
        self.threshold = threshold


@dataclass
class IsotonicProblem:
    """A weighted least-squares isotonic instance on a DAG.

    ``weights`` defaults to the dag's merged-duplicate multiplicities (all
    ones when there are none).
    """

    dag: Dag
    y: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if self.y.shape != (self.dag.n_vertices,):
            raise ValueError("y length does not match vertex count")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("y must be finite")
        if self.weights is None:
            self.weights = self.dag.weights()
        else:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != self.y.shape:
                raise ValueError("weights shape does not match y")
            if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
                raise ValueError("weights must be positive and finite")


@dataclass
class ProjectionResult:
    theta_hat: np.ndarray
    residual: np.ndarray
    iterations: int
    max_violation: float
    inner_product_gap: float
    certificate: "DualCertificate | None" = None


@dataclass
class DualCertificate:
    """Nonnegative cover-edge multipliers reconstructing the residual.

    At the exact projection the stationarity condition reads
    ``W (y - theta) = sum_e lambda_e (e_u - e_v)`` with ``lambda >= 0`` and
    ``lambda_e (theta_u - theta_v) = 0`` per edge; ``reconstruction_error``
    is the weighted norm of what nonnegative least squares could not match.
    """

    edge_multipliers: np.ndarray
    reconstruction_error: float


# ---------------------------------------------------------------------------
# chains


def pava_chain(y, weights=None) -> np.ndarray:
    """Isotonic fit of a totally ordered sequence by pooling adjacent violators.

    Blocks that violate monotonicity are merged to their weighted mean
    ``(w_u y_u + w_v y_v) / (w_u + w_v)``, repeatedly, in one left-to-right
    pass with back-merging.  Exact projection in O(n).
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("y must be a nonempty 1-d array")
    if weights is None:
        w = np.ones_like(y)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape:
            raise ValueError("weights shape does not match y")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
    n = y.size
    # block stack: start index, weight sum, block mean
    starts = np.empty(n, dtype=np.int64)
    wsum = np.empty(n)
    mean = np.empty(n)
    top = -1
    for i in range(n):
        top += 1
        starts[top] = i
        wsum[top] = w[i]
        mean[top] = y[i]
        while top > 0 and mean[top - 1] > mean[top]:
            tw = wsum[top - 1] + wsum[top]
            mean[top - 1] = (wsum[top - 1] * mean[top - 1] + wsum[top] * mean[top]) / tw
            wsum[top - 1] = tw
            top -= 1
    out = np.empty(n)
    for k in range(top + 1):
        hi = starts[k + 1] if k < top else n
        out[starts[k]:hi] = mean[k]
    return out


def is_chain(dag: Dag) -> bool:
    """True iff the cover edges form a single path through all vertices."""
    n = dag.n_vertices
    m = dag.cover_edges.shape[0]
    if m != n - 1:
        return False
    outdeg = np.bincount(dag.cover_edges[:, 0], minlength=n)
    indeg = np.bincount(dag.cover_edges[:, 1], minlength=n)
    return bool(outdeg.max(initial=0) <= 1 and indeg.max(initial=0) <= 1)


# ---------------------------------------------------------------------------
# Dykstra on general DAGs


def _dykstra_plan(dag: Dag) -> list[tuple[np.ndarray, np.ndarray]]:
    """Cover edges grouped into families of vertex-disjoint paths.

    Edges are scanned in topological order of the source vertex and greedily
    assigned to the first family in which the source has no outgoing and the
    target no incoming edge yet, so each family is a disjoint union of
    monotone paths.  Projecting onto the isotonic set of one family is then
    an exact pooling pass along each of its paths, and Dykstra cycles over
    the few families instead of over single edges -- on a total order the
    single family makes the first sweep exact.

    Returns a list of ``(indices, segment_ids)`` pairs per family: vertex
    ids of the family's paths laid head-to-tail, and the path number of each
    position.  Cached on the dag.
    """
    plan = dag.__dict__.get("_dykstra_plan")
    if plan is not None:
        return plan
    edges = dag.cover_edges
    plan = []
    if edges.size:
        pos = np.empty(dag.n_vertices, dtype=np.int64)
        pos[dag.topo_order] = np.arange(dag.n_vertices)
        order = np.lexsort((pos[edges[:, 1]], pos[edges[:, 0]]))
        out_used: list[set] = []
        in_used: list[set] = []
        fam_edges: list[list[tuple[int, int]]] = []
        for u, v in edges[order].tolist():
            for k in range(len(fam_edges)):
                if u not in out_used[k] and v not in in_used[k]:
                    break
            else:
                k = len(fam_edges)
                out_used.append(set())
                in_used.append(set())
                fam_edges.append([])
            out_used[k].add(u)
            in_used[k].add(v)
            fam_edges[k].append((u, v))
        for k, fe in enumerate(fam_edges):
            succ = dict(fe)
            heads = sorted(set(u for u, _ in fe) - in_used[k])
            idx = []
            seg = []
            for s, h in enumerate(heads):
                node = h
                idx.append(node)
                seg.append(s)
                while node in succ:
                    node = succ[node]
                    idx.append(node)
                    seg.append(s)
            plan.append((np.asarray(idx, dtype=np.int64), np.asarray(seg, dtype=np.int64)))
    dag.__dict__["_dykstra_plan"] = plan
    return plan


def _paths_pava(values: np.ndarray, weights: np.ndarray, seg: np.ndarray) -> np.ndarray:
    """Isotonic fit along each segment independently, via one pooled pass.

    Segments are made non-interacting by adding a per-segment offset of twice
    the data range, so a single C-level pooling call fits them all.  The
    offset must be proportional to the range, not an absolute constant: a
    constant would swamp data whose magnitude is far below it and quantize
    every pooled mean to its ulp, stalling Dykstra short of convergence.
    """
    if values.size == 0 or seg[-1] == 0:
        return isotonic_regression(values, weights=weights).x
    span = float(values.max() - values.min())
    off = seg * (2.0 * span)
    fitted = isotonic_regression(values + off, weights=weights)
    return fitted.x - off


def project_dykstra(problem: IsotonicProblem, tol: float = DEFAULT_TOL,
                    max_sweeps: int = DEFAULT_MAX_SWEEPS) -> ProjectionResult:
    """Exact cone projection by Dykstra's cyclic algorithm with corrections.

    Sweeps cycle over the path families of :func:`_dykstra_plan`; before
    each family projection the family's stored correction vector is added
    back, which is what makes the cycle converge to the projection of ``y``
    rather than just some feasible point.

    Convergence is declared when, after a sweep, (i) the largest edge
    violation is at most ``tol``, (ii) the inner-product gap
    ``|<y - theta, theta>_w|`` is at most ``tol * |y|_w^2`` (both sides
    measured after an exact power-of-two rescale of the data to unit binary
    magnitude, which keeps the test meaningful when ``|y|_w^2`` would
    under- or overflow), and (iii) the sweep moved no coordinate by more
    than ``tol``.  A sweep that leaves the
    iterate and every correction vector bitwise unchanged is an exact
    floating-point fixed point: no later sweep can move it, and a stationary
    iterate is feasible for every family, so it is accepted as the
    projection even if the gap test is stricter than roundoff allows.

    Raises
    ------
    ConvergenceError
        After ``max_sweeps`` sweeps; the exception's ``result`` holds the
        final iterate and its diagnostics.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    y = problem.y
    w = problem.weights
    theta = y.copy()
    families = _dykstra_plan(problem.dag)
    corrections = [np.zeros(len(idx)) for idx, _ in families]
    fam_weights = [w[idx] for idx, _ in families]
    edges = problem.dag.cover_edges
    eu = edges[:, 0] if edges.size else np.zeros(0, dtype=np.int64)
    ev = edges[:, 1] if edges.size else np.zeros(0, dtype=np.int64)
    # The gap test compares |<y - theta, theta>_w| against tol * |y|_w^2.
    # Both sides are evaluated after an exact power-of-two rescale of the
    # data to unit binary magnitude: for well-scaled data every product
    # scales by the same exact factor and the decisions are unchanged, but
    # |y|_w^2 can no longer underflow to zero (which would turn the test
    # into the vacuous 0 <= 0 for data below ~1e-154) or overflow.
    m = float(np.max(np.abs(y), initial=0.0))
    unit = math.ldexp(1.0, min(1 - math.frexp(m)[1], 1023)) if m else 1.0
    ys = y * unit
    gap_tol = tol * float(np.dot(w * ys, ys))
    max_violation = gap = change = 0.0
    sweeps = 0
    stalled_corrections = None
    for sweeps in range(1, max_sweeps + 1):
        prev = theta.copy()
        for k, (idx, seg) in enumerate(families):
            z = theta[idx] + corrections[k]
            fitted = _paths_pava(z, fam_weights[k], seg)
            theta[idx] = fitted
            corrections[k] = z - fitted
        max_violation = float(np.max(theta[eu] - theta[ev], initial=0.0))
        ts = theta * unit
        gap = float(abs(np.dot(w * (ys - ts), ts)))
        change = float(np.max(np.abs(theta - prev), initial=0.0))
        if max_violation <= tol and gap <= gap_tol and change <= tol:
            break
        if change == 0.0:
            if stalled_corrections is not None and all(
                    np.array_equal(c, s)
                    for c, s in zip(corrections, stalled_corrections)):
                break  # exact fixed point of the sweep map
            stalled_corrections = [c.copy() for c in corrections]
        else:
            stalled_corrections = None
    else:
        gap = float(abs(np.dot(w * (y - theta), theta)))
        result = ProjectionResult(theta_hat=theta, residual=y - theta,
                                  iterations=max_sweeps,
                                  max_violation=max_violation,
                                  inner_product_gap=gap)
        raise ConvergenceError(
            f"no convergence in {max_sweeps} sweeps "
            f"(violation {max_violation:.2e}, gap {gap:.2e}, change {change:.2e})",
            result)
    gap = float(abs(np.dot(w * (y - theta), theta)))
    return ProjectionResult(theta_hat=theta, residual=y - theta, iterations=sweeps,
                            max_violation=max_violation, inner_product_gap=gap)


# ---------------------------------------------------------------------------
# min-max oracle


def minmax_project_oracle(problem: IsotonicProblem) -> np.ndarray:
    """Projection by the min-max formula over upper and lower sets.

    ``theta_i = min over lower sets L containing i of max over upper sets U
    containing i of the weighted mean of y over L intersect U``.  Exponential
    enumeration -- inherits the vertex cap of :func:`upper_set_masks`.
    """
    dag = problem.dag
    n = dag.n_vertices
    uppers = np.asarray(upper_set_masks(dag), dtype=np.int64)
    full = (1 << n) - 1
    lowers = full & ~uppers
    wy = problem.weights * problem.y
    wsum = np.zeros(1 << n)
    wysum = np.zeros(1 << n)
    for mask in range(1, 1 << n):
        lsb = mask & -mask
        i = lsb.bit_length() - 1
        rest = mask ^ lsb
        wsum[mask] = wsum[rest] + problem.weights[i]
        wysum[mask] = wysum[rest] + wy[i]
    theta = np.empty(n)
    for i in range(n):
        bit = 1 << i
        Ls = lowers[(lowers & bit) > 0]
        Us = uppers[(uppers & bit) > 0]
        best = np.inf
        # chunk the (L, U) grid to keep the intersection matrix small
        for s in range(0, Ls.size, 256):
            inter = Ls[s:s + 256, None] & Us[None, :]
            means = wysum[inter] / wsum[inter]
            best = min(best, float(means.max(axis=1).min()))
        theta[i] = best
    return theta


# ---------------------------------------------------------------------------
# KKT certificate


def verify_projection_certificate(problem: IsotonicProblem, theta_hat,
                                  tol: float = DEFAULT_CERT_TOL) -> DualCertificate:
    """Check an alleged projection against the cone program's KKT conditions.

    Accepts iff (a) ``theta_hat`` is isotonic within ``tol``, (b) the
    weighted inner product ``<y - theta_hat, theta_hat>_w`` vanishes within
    ``tol * |y|_w^2``, (c) nonnegative least squares reconstructs the scaled
    residual from the cover-edge difference generators within
    ``tol * |y|_w``, and (d) every multiplier above ``tol`` sits on an edge
    that is tight within ``tol``.

    Raises
    ------
    CertificateError
        Naming the first failed condition and by how much it failed.
    """
    y = problem.y
    w = problem.weights
    theta = np.asarray(theta_hat, dtype=float)
    if theta.shape != y.shape:
        raise ValueError("theta_hat shape does not match y")
    edges = problem.dag.cover_edges
    ny2 = float(np.dot(w * y, y))
    ny = np.sqrt(ny2)

    if edges.size:
        gaps = theta[edges[:, 0]] - theta[edges[:, 1]]
        max_violation = float(np.max(gaps, initial=0.0))
    else:
        gaps = np.zeros(0)
        max_violation = 0.0
    if max_violation > tol:
        raise CertificateError("isotonic", max_violation, tol)

    ip_gap = float(abs(np.dot(w * (y - theta), theta)))
    if ip_gap > tol * ny2:
        raise CertificateError("orthogonality", ip_gap, tol * ny2)

    # stationarity: W(y - theta) = A lam with A = [e_u - e_v]_e, lam >= 0;
    # solve min |W^{1/2}(y - theta) - W^{-1/2} A lam| by Lawson-Hanson NNLS
    m = edges.shape[0]
    sqw = np.sqrt(w)
    target = sqw * (y - theta)
    if m == 0:
        lam = np.zeros(0)
        rnorm = float(np.linalg.norm(target))
    else:
        B = np.zeros((y.size, m))
        cols = np.arange(m)
        np.add.at(B, (edges[:, 0], cols), 1.0 / sqw[edges[:, 0]])
        np.add.at(B, (edges[:, 1], cols), -1.0 / sqw[edges[:, 1]])
        lam, rnorm = nnls(B, target)
    if rnorm > tol * ny:
        raise CertificateError("reconstruction", float(rnorm), tol * ny)

    active = lam > tol
    if np.any(active):
        slack = float(np.max(np.abs(gaps[active])))
        if slack > tol:
            raise CertificateError("complementary_slackness", slack, tol)
    return DualCertificate(edge_multipliers=lam, reconstruction_error=float(rnorm))


# ---------------------------------------------------------------------------
# front door


def lse_fit(dag: Dag, y, weights=None, solver: str = "auto", tol: float = DEFAULT_TOL,
            max_sweeps: int = DEFAULT_MAX_SWEEPS, certify: bool = False,
            certificate_tol: float = DEFAULT_CERT_TOL) -> ProjectionResult:
    """Weighted least-squares isotonic fit on a DAG.

    ``solver`` is one of ``"auto"`` (PAVA when the order is a chain, Dykstra
    otherwise), ``"pava"`` (chains only), ``"dykstra"``, or ``"oracle"``
    (min-max enumeration, small n only).  With ``certify=True`` the result
    carries a :class:`DualCertificate`; a failed check raises
    :class:`CertificateError`.
    """
    problem = IsotonicProblem(dag, y, weights)
    choice = solver
    if choice == "auto":
        choice = "pava" if is_chain(dag) else "dykstra"
    if choice == "pava":
        if not is_chain(dag):
            raise ValueError("pava solver requires a chain order")
        order = dag.topo_order
        theta = np.empty_like(problem.y)
        theta[order] = pava_chain(problem.y[order], problem.weights[order])
        result = _result_from_theta(problem, theta, iterations=1)
    elif choice == "dykstra":
        result = project_dykstra(problem, tol=tol, max_sweeps=max_sweeps)
    elif choice == "oracle":
        theta = minmax_project_oracle(problem)
        result = _result_from_theta(problem, theta, iterations=1)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    if certify:
        cert = verify_projection_certificate(problem, result.theta_hat,
                                             tol=certificate_tol)
        result = replace(result, certificate=cert)
    return result


def _result_from_theta(problem: IsotonicProblem, theta: np.ndarray,
                       iterations: int) -> ProjectionResult:
    edges = problem.dag.cover_edges
    if edges.size:
        max_violation = float(np.max(theta[edges[:, 0]] - theta[edges[:, 1]], initial=0.0))
    else:
        max_violation = 0.0
    gap = float(abs(np.dot(problem.weights * (problem.y - theta), theta)))
    return ProjectionResult(theta_hat=theta, residual=problem.y - theta,
                            iterations=iterations, max_violation=max_violation,
                            inner_product_gap=gap)
