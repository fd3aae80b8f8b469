"""Level dynamics: the trivial direct flow and the reduced Hamiltonian flow.

The configuration flow X -> X + tY on p lifts to a free Hamiltonian
motion on p x p with H = trace_form(Y, Y)/2.  Transported to the slice
coordinates it becomes a flow in (q, p, l):

    dq/dt = p
    G dp/dt|_j = -B(w, [r, H_j])        (G the Gram matrix of the radial
                                         generators, B the trace form)
    dl/dt = [l, w]

where r solves [r, H(q)] = l and w solves [w, H(q)] = r; w is the
kappa-gradient of H with respect to l.  The l equation is a Lax pair, so
the spectrum of l is conserved along with the energy.  The direct flow is
exactly solvable and serves as the oracle for the reduced integration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import ContractViolation
from .radial import WALL_TOL, SliceCoords, radial_decompose
from .reduction import ReducedState, l_from_slice
from .spaces import SpaceDescriptor, check_p_membership, geometry, wall_distance

__all__ = [
    "PhasePoint",
    "Trajectory",
    "OracleReport",
    "direct_flow",
    "reduce_phase_point",
    "reduced_hamiltonian",
    "reduced_vector_field",
    "integrate_reduced",
    "compare_with_oracle",
]

# integration aborts when the radial point comes this close to a wall
_ABORT_FACTOR = 10.0


@dataclass(frozen=True)
class PhasePoint:
    """Unreduced phase point: position X and momentum Y, both in p."""

    X: np.ndarray
    Y: np.ndarray


@dataclass
class Trajectory:
    """Fixed-step reduced trajectory with per-step invariants.

    ``energies`` and ``l_spectra`` log the Hamiltonian and the (sorted,
    imaginary-part) spectrum of l at every retained step; ``aborted``
    carries the reason when a wall approach truncated the integration.
    """

    times: np.ndarray
    states: list[ReducedState]
    energies: np.ndarray
    l_spectra: np.ndarray
    aborted: str | None = None


@dataclass(frozen=True)
class OracleReport:
    times: np.ndarray
    deviations: np.ndarray
    max_deviation: float
    truncated: str | None = None


def direct_flow(start: PhasePoint, t: float) -> PhasePoint:
    """The exactly solvable flow (X, Y) -> (X + tY, Y)."""
    return PhasePoint(start.X + t * start.Y, start.Y)


def reduce_phase_point(d: SpaceDescriptor, point: PhasePoint) -> tuple[ReducedState, np.ndarray]:
    """Slice-reduce an unreduced phase point.

    Returns the reduced state and the compact factor k with
    X = k H(q) k† and Y = k (H(p) + r) k†.
    """
    geo = geometry(d)
    check_p_membership(d, point.Y)
    q, k = radial_decompose(d, point.X)
    Ybody = k.conj().T @ np.asarray(point.Y, dtype=complex) @ k
    p = geo.a_pattern_coords(Ybody)
    r = Ybody - geo.embed_radial(p)
    l = l_from_slice(d, SliceCoords(q, p, r))
    return ReducedState(q=q, p=p, l=l), k


class _Reduced:
    """Coordinate-level reduced system for one descriptor (internal)."""

    def __init__(self, d: SpaceDescriptor):
        self.d = d
        self.geo = geometry(d)
        self.gram = self.geo.gram
        self.T = self.geo.t_tensor  # (rank, dzk, dap)
        self.L = self.geo.zk_bracket_tensor  # (dzk, dzk, dzk)

    def t_matrix(self, q: np.ndarray) -> np.ndarray:
        return np.tensordot(q, self.T, axes=1)

    def solve_r_w(self, q: np.ndarray, lc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        Tq = self.t_matrix(q)
        r = np.linalg.solve(Tq, lc)
        w = np.linalg.solve(Tq.T, r)
        return r, w

    def hamiltonian(self, q, p, lc) -> float:
        r, _ = self.solve_r_w(q, lc)
        return 0.5 * float(p @ self.gram @ p) + 0.5 * float(r @ r)

    def field(self, q, p, lc) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        r, w = self.solve_r_w(q, lc)
        # dH/dq_j = -w . (T_j r); Hamilton's equations flip the sign back
        u = np.array([w @ (Tj @ r) for Tj in self.T])
        dq = p.copy()
        dp = np.linalg.solve(self.gram, u)
        dl = np.einsum("abc,a,b->c", self.L, lc, w)
        return dq, dp, dl

    def l_matrix_spectrum(self, lc: np.ndarray) -> np.ndarray:
        lmat = self.geo.zk_from_coords(lc)
        return np.sort(np.linalg.eigvalsh(1j * lmat))[::-1]


def reduced_hamiltonian(d: SpaceDescriptor, state: ReducedState) -> float:
    """Energy of a reduced state: half the trace-form square of the
    reconstructed momentum H(p) + r(q, l)."""
    sys = _Reduced(d)
    q = np.asarray(state.q, dtype=float)
    if wall_distance(d, q) <= WALL_TOL:
        raise ContractViolation("reduced Hamiltonian undefined on a chamber wall")
    lc = sys.geo.zk_coords(np.asarray(state.l, dtype=complex))
    return sys.hamiltonian(q, np.asarray(state.p, dtype=float), lc)


def reduced_vector_field(
    d: SpaceDescriptor, state: ReducedState
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Time derivatives (dq, dp, dl) of the reduced flow; dl is returned as
    a matrix in the centralizer orthocomplement."""
    sys = _Reduced(d)
    q = np.asarray(state.q, dtype=float)
    if wall_distance(d, q) <= WALL_TOL:
        raise ContractViolation("reduced vector field undefined on a chamber wall")
    lc = sys.geo.zk_coords(np.asarray(state.l, dtype=complex))
    dq, dp, dl = sys.field(q, np.asarray(state.p, dtype=float), lc)
    return dq, dp, sys.geo.zk_from_coords(dl)


def integrate_reduced(
    d: SpaceDescriptor, initial: ReducedState, t_max: float, steps: int
) -> Trajectory:
    """Classical fixed-step fourth-order integration of the reduced flow.

    Logs the energy and the spectrum of l at every step.  If the radial
    point approaches a chamber wall the trajectory is truncated and the
    abort reason recorded.
    """
    if steps < 1:
        raise ContractViolation("steps must be a positive integer")
    sys = _Reduced(d)
    geo = sys.geo
    q = np.asarray(initial.q, dtype=float).copy()
    p = np.asarray(initial.p, dtype=float).copy()
    lc = geo.zk_coords(np.asarray(initial.l, dtype=complex))
    h = float(t_max) / steps
    times = [0.0]
    states = [ReducedState(q.copy(), p.copy(), geo.zk_from_coords(lc))]
    energies = [sys.hamiltonian(q, p, lc)]
    spectra = [sys.l_matrix_spectrum(lc)]
    aborted = None

    def wall_ok(qv) -> bool:
        return wall_distance(d, qv) > _ABORT_FACTOR * WALL_TOL

    if not wall_ok(q):
        raise ContractViolation("initial radial point is too close to a chamber wall")
    for step in range(steps):
        try:
            k1 = sys.field(q, p, lc)
            k2 = sys.field(q + 0.5 * h * k1[0], p + 0.5 * h * k1[1], lc + 0.5 * h * k1[2])
            k3 = sys.field(q + 0.5 * h * k2[0], p + 0.5 * h * k2[1], lc + 0.5 * h * k2[2])
            k4 = sys.field(q + h * k3[0], p + h * k3[1], lc + h * k3[2])
        except np.linalg.LinAlgError:
            aborted = f"singular bracket solve at step {step}"
            break
        q = q + (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        p = p + (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        lc = lc + (h / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not wall_ok(q):
            aborted = f"radial point reached a chamber wall at t={times[-1] + h:.6g}"
            break
        times.append((step + 1) * h)
        states.append(ReducedState(q.copy(), p.copy(), geo.zk_from_coords(lc)))
        energies.append(sys.hamiltonian(q, p, lc))
        spectra.append(sys.l_matrix_spectrum(lc))
    return Trajectory(
        times=np.array(times),
        states=states,
        energies=np.array(energies),
        l_spectra=np.array(spectra),
        aborted=aborted,
    )


def compare_with_oracle(
    d: SpaceDescriptor, start: PhasePoint, t_grid: np.ndarray, steps: int | None = None
) -> OracleReport:
    """Radial coordinates of the direct flow versus the reduced integration.

    The direct flow is exact: q_direct(t) comes from the radial
    decomposition of X + tY.  The reduced flow is integrated with fixed
    steps through the grid and compared pointwise in the sup norm.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or np.any(np.diff(t_grid) <= 0) or t_grid[0] != 0.0:
        raise ContractViolation("t_grid must be an increasing 1-d grid starting at 0")
    state0, _ = reduce_phase_point(d, start)
    n_steps = steps if steps is not None else (t_grid.size - 1)
    traj = integrate_reduced(d, state0, float(t_grid[-1]), n_steps)
    devs = []
    kept = []
    from .radial import radial_coords

    for t in t_grid:
        if t > traj.times[-1] + 1e-12:
            break
        # compare at the nearest computed step time (exact when the grid
        # matches the step count, the default)
        idx = int(np.argmin(np.abs(traj.times - t)))
        t_cmp = float(traj.times[idx])
        q_red = traj.states[idx].q
        q_dir = radial_coords(d, start.X + t_cmp * start.Y)
        devs.append(float(np.max(np.abs(q_dir - q_red))))
        kept.append(t_cmp)
    return OracleReport(
        times=np.array(kept),
        deviations=np.array(devs),
        max_deviation=float(np.max(devs)) if devs else np.nan,
        truncated=traj.aborted,
    )
