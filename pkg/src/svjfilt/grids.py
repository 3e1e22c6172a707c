"""State grids for the deterministic filter.

Each latent dimension gets nodes spanning its stationary mean plus/minus
``delta * sqrt(stationary variance)`` with ``delta = 3 + ln(n_nodes)``, so
the span widens slowly as the grid grows.  Variance and intensity nodes are
uniform in the square root of the state (denser near zero where the laws
pile up); jump-size nodes are uniform in the state itself.

Spans are clamped below at the one-step rebound level (``kappa theta h``
for the variance, ``chi omega h`` for the intensity): under full
truncation a state absorbed at zero moves there deterministically on the
next step, so nodes below that level would evaluate measurement densities
at scales the process cannot sustain, which destabilizes the likelihood
when the stationary law piles up at zero.

Every node is the representative point of a half-open interval whose edges
are midpoints between neighbours; the leftmost edge is exactly 0 and the
rightmost is +inf, so the intervals partition [0, inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError
from .models import ModelParams, state_floors, stationary_moments


@dataclass(frozen=True)
class GridSpec:
    """Grid sizes for the filter.

    Parameters
    ----------
    n_v : int
        Variance nodes, at least 2.
    n_lam : int
        Intensity nodes; must be 1 unless the intensity is stochastic.
    n_j : int
        Variance jump-size nodes; 0 collapses the dimension to the single
        node {0} (no variance jumps).
    r_max : int
        Largest jump count in the truncated Poisson sum; residual mass is
        dropped, not renormalized.
    floor_eps : float
        Absolute smallest admissible variance/intensity node; the
        effective clamp is the larger of this and the one-step rebound
        level of the dimension.
    """

    n_v: int = 200
    n_lam: int = 1
    n_j: int = 0
    r_max: int = 0
    floor_eps: float = 1e-8

    def __post_init__(self):
        if self.n_v < 2:
            raise GridError(f"n_v must be >= 2, got {self.n_v}")
        if self.n_lam < 1:
            raise GridError(f"n_lam must be >= 1, got {self.n_lam}")
        if self.n_j < 0 or self.r_max < 0:
            raise GridError("n_j and r_max must be nonnegative")
        if not (self.floor_eps > 0.0):
            raise GridError("floor_eps must be positive")


def default_grid_spec(params_or_variant, n_v: int = None) -> GridSpec:
    """Reference grid sizes per variant.

    Defaults mirror the benchmark settings: 200 variance nodes for
    constant-intensity variants, a 50 x 50 state grid for the stochastic
    intensity variant, jump-size nodes at ceil(n_v / 2.5), and a Poisson
    cap of 2 when jumps are on.
    """
    from .models import ModelVariant
    variant = getattr(params_or_variant, "variant", params_or_variant)
    if variant is ModelVariant.SV:
        n = n_v or 200
        return GridSpec(n_v=n, n_lam=1, n_j=0, r_max=0)
    if variant is ModelVariant.SVYJ:
        n = n_v or 200
        return GridSpec(n_v=n, n_lam=1, n_j=0, r_max=2)
    if variant is ModelVariant.SVCJ:
        n = n_v or 200
        return GridSpec(n_v=n, n_lam=1, n_j=math.ceil(n / 2.5), r_max=2)
    n = n_v or 50
    return GridSpec(n_v=n, n_lam=n, n_j=math.ceil(n / 2.5), r_max=2)


@dataclass(frozen=True)
class StateGrid:
    """Nodes and covering intervals for (v, lam, j)."""

    v_nodes: np.ndarray
    v_edges: np.ndarray      # len(v_nodes) + 1, edges[0] == 0, edges[-1] == inf
    lam_nodes: np.ndarray
    lam_edges: np.ndarray
    j_nodes: np.ndarray
    j_edges: np.ndarray
    spec: GridSpec = field(repr=False, default=None)

    def __post_init__(self):
        for nodes, edges, name in (
                (self.v_nodes, self.v_edges, "v"),
                (self.lam_nodes, self.lam_edges, "lam"),
                (self.j_nodes, self.j_edges, "j")):
            if len(edges) != len(nodes) + 1:
                raise GridError(f"{name}: need len(nodes)+1 edges")
            if len(nodes) > 1 and np.any(np.diff(nodes) <= 0.0):
                raise GridError(f"{name}: nodes must be strictly increasing")
            if edges[0] != 0.0 or not np.isinf(edges[-1]):
                raise GridError(f"{name}: intervals must cover [0, inf)")
            inner = edges[1:-1]
            if len(inner) and np.any(np.diff(inner) <= 0.0):
                raise GridError(f"{name}: edges must be strictly increasing")


def _edges_from_nodes(nodes: np.ndarray) -> np.ndarray:
    """Half-open covering intervals: midpoints inside, 0 and inf outside.

    The left edge of the first interval is the midpoint of the first node
    and its reflection at zero, i.e. exactly 0.
    """
    edges = np.empty(len(nodes) + 1)
    edges[0] = 0.0
    edges[1:-1] = 0.5 * (nodes[:-1] + nodes[1:])
    edges[-1] = np.inf
    return edges


def _sqrt_spaced_nodes(mean: float, var: float, count: int,
                       floor_eps: float, name: str) -> np.ndarray:
    """Nodes uniform in sqrt(state) between clamped span boundaries."""
    delta = 3.0 + math.log(count)
    sd = math.sqrt(var)
    lo = max(mean - delta * sd, floor_eps)
    hi = max(mean + delta * sd, floor_eps)
    if not (hi > lo):
        raise GridError(
            f"{name}: span collapsed (mean={mean:.3g}, var={var:.3g}); "
            f"fewer than 2 distinct nodes")
    roots = np.linspace(math.sqrt(lo), math.sqrt(hi), count)
    nodes = roots * roots
    nodes = _enforce_increasing(nodes, floor_eps)
    if len(np.unique(nodes)) < 2:
        raise GridError(f"{name}: fewer than 2 distinct nodes after clamping")
    return nodes


def _enforce_increasing(nodes: np.ndarray, eps: float) -> np.ndarray:
    """Restore strict monotonicity after clamping by eps-spacing."""
    out = nodes.copy()
    for i in range(1, len(out)):
        if out[i] <= out[i - 1]:
            out[i] = out[i - 1] + eps
    return out


def build_grid(params: ModelParams, spec: GridSpec) -> StateGrid:
    """Build the state grid for one parameter set.

    Requires ``kappa > 0`` (stationary moments must exist).  Non-stochastic
    intensity demands ``n_lam == 1``; the single intensity node sits at the
    long-run level.  ``n_j == 0`` or a degenerate jump-size law produce the
    single jump node {0}.
    """
    mom = stationary_moments(params)
    v_floor, lam_floor = state_floors(params, spec.floor_eps)
    v_nodes = _sqrt_spaced_nodes(mom.e_v, mom.var_v, spec.n_v,
                                 v_floor, "v")

    if params.intensity_stochastic and mom.var_lam > 0.0:
        if spec.n_lam < 2:
            raise GridError("stochastic intensity needs n_lam >= 2")
        lam_nodes = _sqrt_spaced_nodes(mom.e_lam, mom.var_lam, spec.n_lam,
                                       lam_floor, "lam")
    else:
        # constant intensity, or the xi == 0 degenerate limit of the
        # stochastic-intensity variant: one node at the long-run level
        if not params.intensity_stochastic and spec.n_lam != 1:
            raise GridError("n_lam must be 1 unless intensity is stochastic")
        lam_nodes = np.array([mom.e_lam])

    if spec.n_j == 0 or mom.var_j == 0.0:
        j_nodes = np.array([0.0])
    else:
        delta = 3.0 + math.log(spec.n_j)
        sd = math.sqrt(mom.var_j)
        lo = max(mom.e_j - delta * sd, 0.0)
        hi = mom.e_j + delta * sd
        j_nodes = np.linspace(lo, hi, spec.n_j)
        if spec.n_j > 1:
            j_nodes = _enforce_increasing(j_nodes, spec.floor_eps)

    return StateGrid(
        v_nodes=v_nodes, v_edges=_edges_from_nodes(v_nodes),
        lam_nodes=lam_nodes, lam_edges=_edges_from_nodes(lam_nodes),
        j_nodes=j_nodes, j_edges=_edges_from_nodes(j_nodes),
        spec=spec)
