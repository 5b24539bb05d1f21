"""Shared instance builders and independent test oracles."""

import numpy as np

from qrot import coupling_from_z, northwest_corner, validate_instance


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion test
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    print(f"\n[acceptance] {status} {name}")


# ---------------------------------------------------------------------------
# named instances


def two_point_offdiag(gamma, eps=1.0):
    """Uniform two-point marginals, cost (2 + gamma) off the diagonal."""
    cost = (2.0 + gamma) * (1.0 - np.eye(2))
    return validate_instance([0.5, 0.5], [0.5, 0.5], cost, epsilon=eps)


def two_point_ondiag(gamma, eps=1.0):
    """Self-transport counterexample: cost (2 + gamma) on the diagonal."""
    cost = (2.0 + gamma) * np.eye(2)
    return validate_instance([0.5, 0.5], [0.5, 0.5], cost, epsilon=eps)


def zero_cost_skewed(lam, eps=1.0):
    """Zero cost, uniform references, marginals (1 - lam, lam) on both sides."""
    return validate_instance(
        [1.0 - lam, lam],
        [1.0 - lam, lam],
        np.zeros((2, 2)),
        mu_tilde=[0.5, 0.5],
        nu_tilde=[0.5, 0.5],
        epsilon=eps,
    )


def offdiag_family(alpha, beta, gamma=None):
    """The two-parameter potential family of the off-diagonal-cost instance."""
    from qrot import Potentials

    return Potentials(f=np.array([alpha, beta]), g=np.array([2.0 - alpha, 2.0 - beta]))


# ---------------------------------------------------------------------------
# random generators


def random_weights(rng, size):
    w = rng.uniform(0.2, 1.0, size)
    return w / w.sum()


def random_instance(
    rng,
    n=None,
    m=None,
    equal_refs=False,
    eps=None,
    cost_kind="uniform",
    max_size=8,
):
    n = int(rng.integers(2, max_size + 1)) if n is None else n
    m = int(rng.integers(2, max_size + 1)) if m is None else m
    mu = random_weights(rng, n)
    nu = random_weights(rng, m)
    mu_tilde = mu if equal_refs else random_weights(rng, n)
    nu_tilde = nu if equal_refs else random_weights(rng, m)
    if cost_kind == "uniform":
        cost = rng.uniform(0.0, 1.0, (n, m))
    elif cost_kind == "gaussian":
        cost = rng.normal(0.0, 1.0, (n, m))
    else:
        raise ValueError(cost_kind)
    if eps is None:
        eps = float(rng.uniform(0.3, 3.0))
    return validate_instance(mu, nu, cost, mu_tilde=mu_tilde, nu_tilde=nu_tilde, epsilon=eps)


def random_symmetric_instance(rng, n=5, eps=1.0, equal_refs=False):
    mu = random_weights(rng, n)
    mu_tilde = mu if equal_refs else random_weights(rng, n)
    cost = rng.uniform(0.0, 1.0, (n, n))
    cost = 0.5 * (cost + cost.T)
    return validate_instance(mu, mu, cost, mu_tilde=mu_tilde, nu_tilde=mu_tilde, epsilon=eps)


def random_feasible_density(rng, inst, n_plans=3):
    """Random point of the coupling-density set, without running any solver.

    Mixes the independent coupling with northwest-corner plans taken under
    random row/column orderings; all of these are feasible, hence so is any
    convex combination.
    """
    densities = [np.outer(inst.mu_ratio, inst.nu_ratio)]
    for _ in range(n_plans):
        rows = rng.permutation(inst.n)
        cols = rng.permutation(inst.m)
        plan = northwest_corner(inst.mu[rows], inst.nu[cols])
        full = np.zeros((inst.n, inst.m))
        full[np.ix_(rows, cols)] = plan
        densities.append(full / inst.ref_weights)
    weights = rng.dirichlet(np.ones(len(densities)))
    mix = sum(w * z for w, z in zip(weights, densities))
    return coupling_from_z(inst, mix)


# ---------------------------------------------------------------------------
# brute-force oracles


def bisect_root(thresholds, weights, target, iters=200):
    """Bisection on the increasing piecewise-linear function, no segment logic."""
    thresholds = np.asarray(thresholds, float)
    weights = np.asarray(weights, float)

    def value(t):
        return float(np.sum(weights * np.maximum(t - thresholds, 0.0)))

    lo = float(thresholds.min()) - 1.0
    hi = float(thresholds.max()) + target / float(weights.min()) + 1.0
    while value(hi) < target:
        hi = 2.0 * hi + 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if value(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def brute_components(mask):
    """Transitive closure of the alternating-path relation on support cells."""
    groups = [{(int(i), int(j))} for i, j in np.argwhere(mask)]
    merged = True
    while merged:
        merged = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                touches = any(
                    a[0] == b[0] or a[1] == b[1] for a in groups[i] for b in groups[j]
                )
                if touches:
                    groups[i] |= groups.pop(j)
                    merged = True
                    break
            if merged:
                break
    return {frozenset(g) for g in groups}
