"""The family of all potentials of a solved instance.

Fixing one potential pair, every other pair arises by adding a constant
``alpha[k]`` to ``f`` on the rows of component ``k`` and subtracting it from
``g`` on the columns. The admissible vectors form the difference-constraint
polytope ``T = {alpha : alpha[i] - alpha[j] <= a[i, j]}`` where ``a[i, j]``
is the smallest slack ``(cost - f - g) / epsilon`` over the off-support cells
of the block ``rows(C_i) x cols(C_j)``. Potentials are divided by epsilon
before taking slacks so that the constraints live at the unit-regularization
normalization; :func:`apply_shifts` multiplies by epsilon when shifting the
stored rescaled potentials.

Difference-constraint systems are canonical shortest-path objects: the
min-plus closure of ``a`` gives the tightest bound on each difference, pairs
whose two-way bounds sum to zero are forced equal, and the dimension of ``T``
is the number of equivalence classes of that rigidity relation (always at
least one: the global shift).
"""

from dataclasses import dataclass

import numpy as np

from .model import Potentials, ValidationError, density_from_potentials

__all__ = [
    "PolytopeDescription",
    "PotentialConsistencyError",
    "compute_polytope",
    "sample_shifts",
    "apply_shifts",
    "verify_potentials",
    "mirror_pairing",
    "symmetric_shift_interval",
]

RIGID_TOL = 1e-9


class PotentialConsistencyError(RuntimeError):
    """The slack system is infeasible, signalling a solve that did not converge."""


@dataclass(frozen=True)
class PolytopeDescription:
    """Constraint matrix ``a``, its shortest-path closure and rigidity data.

    ``a[i, j]`` is ``+inf`` when the block has no off-support cell (the
    constraint is absent); ``a[i, i] = 0``. ``dist[i, j]`` is the tightest
    implied upper bound on ``alpha[i] - alpha[j]``. ``dimension`` counts the
    rigidity classes; it equals the number of components when no pair is
    forced equal and is always at least one.
    """

    n_components: int
    a: np.ndarray
    dist: np.ndarray
    dimension: int
    rigid_pairs: tuple


def _floyd_warshall(a):
    dist = a.copy()
    n = dist.shape[0]
    for k in range(n):
        np.minimum(dist, dist[:, k, None] + dist[None, k, :], out=dist)
    return dist


def compute_polytope(inst, p, decomp, s, tol=RIGID_TOL):
    """Describe all potential pairs reachable from ``p`` by component shifts.

    Parameters
    ----------
    inst : Instance
    p : Potentials
        Converged potentials of the instance (duality gap at solver tolerance).
    decomp : ComponentDecomposition
    s : SupportSet
        Both derived from the density of the same solve.
    tol : float
        Feasibility and rigidity tolerance.

    Raises
    ------
    PotentialConsistencyError
        If some slack is negative beyond ``tol``, which means the potentials
        and the support mask do not belong to a converged solve.
    """
    count = decomp.count
    slack = (inst.cost - p.f[:, None] - p.g[None, :]) / inst.epsilon
    off = ~s.mask

    a = np.full((count, count), np.inf)
    for i in range(count):
        rows = np.fromiter(decomp.row_projections[i], dtype=int)
        for j in range(count):
            if i == j:
                continue
            cols = np.fromiter(decomp.col_projections[j], dtype=int)
            block_off = off[np.ix_(rows, cols)]
            if block_off.any():
                a[i, j] = float(slack[np.ix_(rows, cols)][block_off].min())
    np.fill_diagonal(a, 0.0)

    if np.any(a < -tol):
        i, j = np.argwhere(a < -tol)[0]
        raise PotentialConsistencyError(
            f"potentials inconsistent with support: a[{i},{j}] = {a[i, j]:.3e} < 0"
        )

    dist = _floyd_warshall(a)
    if np.any(np.diag(dist) < -tol):
        raise PotentialConsistencyError("potentials inconsistent with support: negative cycle")

    rigid = []
    uf_parent = list(range(count))

    def find(i):
        while uf_parent[i] != i:
            uf_parent[i] = uf_parent[uf_parent[i]]
            i = uf_parent[i]
        return i

    for i in range(count):
        for j in range(i + 1, count):
            if dist[i, j] + dist[j, i] <= tol:
                rigid.append((i, j))
                uf_parent[find(i)] = find(j)
    dimension = len({find(i) for i in range(count)})

    a.setflags(write=False)
    dist.setflags(write=False)
    return PolytopeDescription(
        n_components=count,
        a=a,
        dist=dist,
        dimension=dimension,
        rigid_pairs=tuple(rigid),
    )


def _max_violation(pd, alpha):
    diff = alpha[:, None] - alpha[None, :]
    finite = np.isfinite(pd.a)
    if not finite.any():
        return 0.0
    return float(np.max(diff[finite] - pd.a[finite]))


def sample_shifts(pd, k, seed):
    """Draw ``k`` shift vectors from the polytope, anchored at ``alpha[0] = 0``.

    Each remaining coordinate is drawn uniformly inside its two-sided
    shortest-path bound against the anchor, then repaired by 50 rounds of
    cyclic projection onto the pairwise constraints and the anchor plane.
    Every returned vector is verified against all constraints to 1e-9; the
    repair cannot fail on a feasible polytope containing the origin.
    """
    count = pd.n_components
    rng = np.random.default_rng(seed)
    dist = pd.dist
    finite = np.isfinite(dist)
    big = float(np.max(np.abs(dist[finite]))) + 1.0 if finite.any() else 1.0

    lo = np.where(np.isfinite(dist[0, :]), -dist[0, :], -big)
    hi = np.where(np.isfinite(dist[:, 0]), dist[:, 0], big)

    pairs = [
        (i, j)
        for i in range(count)
        for j in range(count)
        if i != j and np.isfinite(dist[i, j])
    ]
    out = []
    for _ in range(k):
        alpha = np.zeros(count)
        for i in range(1, count):
            alpha[i] = rng.uniform(lo[i], hi[i])
        for _round in range(50):
            for i, j in pairs:
                excess = alpha[i] - alpha[j] - dist[i, j]
                if excess > 0:
                    alpha[i] -= 0.5 * excess
                    alpha[j] += 0.5 * excess
            alpha[0] = 0.0
        if _max_violation(pd, alpha) > 1e-9:
            raise AssertionError("shift repair failed on a feasible polytope")
        out.append(alpha)
    return out


def apply_shifts(p, decomp, alpha, eps, pd=None):
    """Shift potentials componentwise: ``f += eps * alpha[k]`` on the rows of
    component ``k`` and ``g -= eps * alpha[k]`` on its columns.

    The factor ``eps`` converts the unit-normalization shift back to the
    rescaled potentials. Rows and columns matched to no component keep their
    values (they are flagged on the decomposition). When a polytope
    description is supplied, the shift is validated against its constraints.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (decomp.count,):
        raise ValidationError(
            f"dimension mismatch: alpha has shape {alpha.shape}, expected ({decomp.count},)"
        )
    if pd is not None and _max_violation(pd, alpha) > 1e-9:
        raise ValidationError("shift vector violates a polytope constraint")

    f = p.f.copy()
    g = p.g.copy()
    for cid in range(decomp.count):
        rows = list(decomp.row_projections[cid])
        cols = list(decomp.col_projections[cid])
        f[rows] += eps * alpha[cid]
        g[cols] -= eps * alpha[cid]
    return Potentials(f=f, g=g)


def verify_potentials(inst, p, z_star, tol=1e-8):
    """True iff the density induced by ``p`` reproduces the optimal density.

    Matching the (unique) optimal density is equivalent to being potentials,
    so this is a complete membership test for the family.
    """
    cd = density_from_potentials(inst, p)
    return bool(np.max(np.abs(cd.z - z_star.z)) <= tol)


def mirror_pairing(decomp):
    """Match each component with its transpose partner on a symmetric support.

    Component ``i`` maps to the component whose row projection equals the
    column projection of ``i`` and vice versa; self-transport supports always
    admit such a pairing. Raises when the support is not symmetric.
    """
    mirror = [-1] * decomp.count
    for i in range(decomp.count):
        for j in range(decomp.count):
            if (
                set(decomp.row_projections[j]) == set(decomp.col_projections[i])
                and set(decomp.col_projections[j]) == set(decomp.row_projections[i])
            ):
                mirror[i] = j
                break
        if mirror[i] < 0:
            raise ValidationError("support is not symmetric: no mirror component found")
    return tuple(mirror)


def symmetric_shift_interval(pd, mirror, pair):
    """Interval of one-parameter shifts preserving ``f' = g'`` along one mirror pair.

    For a mirror pair ``(i, j)``, the shift vector ``alpha = s e_i - s e_j``
    keeps the pair symmetric when the base potentials are symmetric; the
    returned ``(lo, hi)`` is the exact range of ``s`` admitted by the
    polytope with all other components unshifted. Self-mirrored components
    only admit ``s = 0``.
    """
    i, j = pair
    if mirror[i] != j or mirror[j] != i:
        raise ValidationError(f"components {pair} are not mirror partners")
    if i == j:
        return 0.0, 0.0
    direction = np.zeros(pd.n_components)
    direction[i] = 1.0
    direction[j] = -1.0
    lo, hi = -np.inf, np.inf
    for p_ in range(pd.n_components):
        for q in range(pd.n_components):
            if p_ == q or not np.isfinite(pd.dist[p_, q]):
                continue
            coeff = direction[p_] - direction[q]
            bound = pd.dist[p_, q]
            if coeff > 0:
                hi = min(hi, bound / coeff)
            elif coeff < 0:
                lo = max(lo, bound / coeff)
    return float(lo), float(hi)
