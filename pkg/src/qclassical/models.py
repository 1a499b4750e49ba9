"""Executable builders for the worked models: the Lorentzian dephasing spin
with its closed forms and numerical oracle, and the three counterexample
processes.

The dephasing model couples a qubit to a continuous environment mode through
its sigma_z component, with a Lorentzian environment wavefunction.  The
environment is never discretized into a Hilbert space.  Instead the engine
works in the environment's momentum representation, where the wavefunction
is a one-sided exponential sqrt(2 gamma) exp(-gamma p) on p >= 0 and the
coupling shifts the momentum argument conditioned on the system index.  The
joint state stays a finite sum of dyads between shifted wavefunctions; the
only numerics is the overlap integral of two shifted wavefunctions, a
smooth, decaying, non-oscillatory integrand that Gauss-Legendre resolves to
near machine precision.  That overlap quadrature is an implementation path
independent of the closed-form expressions checked against it.

(The tangent-substitution rule in coordinate space was measured first and
rejected: the coordinate-space integrand oscillates without bound at the
substitution endpoints, which caps any fixed real-node rule near 1e-4 at
2000 nodes.)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp

from .channels import (
    CPMap,
    Dephase,
    Identity,
    Observable,
    Superoperator,
    apply,
    embed_left,
    intervention_matrix,
    kraus_channel,
    reset_channel,
    sigma_x_observable,
    sigma_z_observable,
    unitary_channel,
)
from .checkers import PreparationSet, Single, spanning_preparations
from .errors import DimensionError, SequenceError, SingularTimeError
from .linalg import (
    SIGMA_Z,
    DensityMatrix,
    SubnormalizedState,
    bloch_vector,
    ket,
    maximally_mixed,
    pure_state,
    state_from_bloch,
    vec,
)
from .process import InterventionSequence, MarkovProcess, TimeGrid


@dataclass(frozen=True)
class DephasingModelParams:
    """Coupling g, Lorentzian width gamma, initial <sigma_x>, dephasing time
    s and readout time t.  The dephasing rate is g * gamma."""

    g: float = 1.0
    gamma: float = 1.0
    x0: float = 1.0
    s: float = 1.0
    t: float = 3.0

    def __post_init__(self):
        if self.g <= 0 or self.gamma <= 0:
            raise ValueError("g and gamma must be positive")
        if abs(self.x0) > 1:
            raise ValueError("|x0| must not exceed 1")
        if not 0 <= self.s <= self.t:
            raise ValueError("times must satisfy 0 <= s <= t")

    @property
    def rate(self) -> float:
        return self.g * self.gamma


@lru_cache(maxsize=16)
def _leggauss_cached(node_count: int):
    return leggauss(node_count)


@dataclass(frozen=True)
class QuadratureScheme:
    """Gauss-Legendre rule for the shifted-wavefunction overlap integrals.

    Nodes live on the dimensionless range gamma * p in [0, span]; weights
    are normalized so the rule integrates the environment wavefunction's
    norm to exactly 1, which is the tested weight-sum invariant.
    """

    node_count: int = 2000
    span: float = 40.0
    _nodes: np.ndarray = field(init=False, repr=False, compare=False)
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.node_count < 64:
            raise ValueError("node_count must be at least 64")
        if self.span <= 0:
            raise ValueError("span must be positive")
        x, w = _leggauss_cached(self.node_count)
        u = (x + 1.0) * (self.span / 2.0)
        wu = w * (self.span / 2.0)
        norm = float(np.sum(wu * 2.0 * np.exp(-2.0 * u)))
        object.__setattr__(self, "_nodes", u)
        object.__setattr__(self, "_weights", wu / norm)

    def wavefunction_norm(self, gamma: float) -> float:
        """The rule applied to |psi(p)|^2; equals 1 by the normalization."""
        return float(self.overlap(np.zeros(1), np.zeros(1), gamma)[0].real)

    def overlap(self, alpha: np.ndarray, beta: np.ndarray, gamma: float) -> np.ndarray:
        """Overlaps <psi_beta | psi_alpha> of momentum-shifted wavefunctions.

        psi_a(p) = sqrt(2 gamma) exp(-gamma (p + a)) on p >= -a; the common
        support starts at max(-alpha, -beta) and the integrand is evaluated
        literally at the nodes.
        """
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        lo = np.maximum(-alpha, -beta)
        p = lo[:, None] + self._nodes[None, :] / gamma
        integrand = 2.0 * gamma * np.exp(-gamma * (p + alpha[:, None])) * np.exp(
            -gamma * (p + beta[:, None])
        )
        return integrand @ self._weights / gamma


DEFAULT_SCHEME = QuadratureScheme()


# --------------------------------------------------------------------------
# Branch-dyad engine for the dilated model
# --------------------------------------------------------------------------


class _Terms:
    """Finite sum of dyads |a><b| (x) |psi_alpha><psi_beta| with coefficients."""

    __slots__ = ("a", "b", "alpha", "beta", "coeff")

    def __init__(self, matrix: np.ndarray):
        a, b = np.nonzero(matrix)
        self.a = a.astype(np.int64)
        self.b = b.astype(np.int64)
        self.alpha = np.zeros(a.size)
        self.beta = np.zeros(a.size)
        self.coeff = matrix[a, b].astype(complex)

    def evolve(self, g: float, tau: float) -> None:
        """Free evolution: momentum shift conditioned on the system index."""
        half = 0.5 * g * tau
        self.alpha += (1 - 2 * self.a) * half
        self.beta += (1 - 2 * self.b) * half

    def intervene(self, superop_matrix: np.ndarray) -> None:
        """Apply a system superoperator; each dyad spawns up to four."""
        four = superop_matrix.reshape(2, 2, 2, 2)  # (out-col, out-row, in-col, in-row)
        new_a, new_b, new_alpha, new_beta, new_coeff = [], [], [], [], []
        for a_out in range(2):
            for b_out in range(2):
                factors = four[b_out, a_out][self.b, self.a]
                scaled = self.coeff * factors
                keep = np.abs(scaled) > 1e-300
                if not np.any(keep):
                    continue
                new_a.append(np.full(int(keep.sum()), a_out, dtype=np.int64))
                new_b.append(np.full(int(keep.sum()), b_out, dtype=np.int64))
                new_alpha.append(self.alpha[keep])
                new_beta.append(self.beta[keep])
                new_coeff.append(scaled[keep])
        self.a = np.concatenate(new_a) if new_a else np.zeros(0, dtype=np.int64)
        self.b = np.concatenate(new_b) if new_b else np.zeros(0, dtype=np.int64)
        self.alpha = np.concatenate(new_alpha) if new_alpha else np.zeros(0)
        self.beta = np.concatenate(new_beta) if new_beta else np.zeros(0)
        self.coeff = (
            np.concatenate(new_coeff) if new_coeff else np.zeros(0, dtype=complex)
        )

    def reduce(self, scheme: QuadratureScheme, gamma: float) -> np.ndarray:
        """Trace out the environment: weight each dyad by its overlap."""
        rho = np.zeros((2, 2), dtype=complex)
        if self.coeff.size:
            overlaps = scheme.overlap(self.alpha, self.beta, gamma)
            np.add.at(rho, (self.a, self.b), self.coeff * overlaps)
        return rho


@dataclass(frozen=True, eq=False)
class LorentzianDephasingProcess:
    """Exact dilation of the spin coupled to the Lorentzian environment.

    Implements the same evaluator interface as the finite-dimensional
    processes, so all checkers apply directly.
    """

    g: float
    gamma: float
    initial_s: DensityMatrix
    times: TimeGrid
    scheme: QuadratureScheme = DEFAULT_SCHEME
    observables: tuple[Observable, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "observables", tuple(self.observables))
        if self.initial_s.dim != 2:
            raise DimensionError("the dephasing model is a qubit model")
        if self.g <= 0 or self.gamma <= 0:
            raise ValueError("g and gamma must be positive")

    @property
    def dim_s(self) -> int:
        return 2

    @property
    def n_steps(self) -> int:
        return self.times.n_steps

    @property
    def derived(self) -> bool:
        return False

    @property
    def initial_system_matrix(self) -> np.ndarray:
        return self.initial_s.matrix

    def prefix(self, n: int) -> "LorentzianDephasingProcess":
        return replace(self, times=self.times.prefix(n))

    def product_split(self) -> tuple[np.ndarray, None]:
        # The dilation is constructed from a product initial state.
        return self.initial_s.matrix, None

    def _run(self, initial_matrix: np.ndarray, steps) -> np.ndarray:
        terms = _Terms(np.asarray(initial_matrix, dtype=complex))
        for k, step in enumerate(steps, start=1):
            terms.evolve(self.g, self.times.interval(k))
            if step is not None and not isinstance(step, Identity):
                terms.intervene(intervention_matrix(step, 2))
        return terms.reduce(self.scheme, self.gamma)

    def evaluate(self, sequence: InterventionSequence) -> SubnormalizedState:
        if sequence.n_steps != self.n_steps:
            raise SequenceError(
                f"sequence has {sequence.n_steps} steps, process has {self.n_steps}"
            )
        prepared = apply(
            Superoperator(intervention_matrix(sequence.preparation, 2)),
            self.initial_s.matrix,
        )
        return SubnormalizedState(self._run(prepared, sequence.steps))

    def reduced_propagator(self, k: int) -> Superoperator:
        """Start-to-time map of the unmeasured dynamics, by tomography."""
        columns = []
        free = [None] * k
        for j in range(2):
            for i in range(2):
                unit = np.zeros((2, 2), dtype=complex)
                unit[i, j] = 1.0
                columns.append(vec(self.prefix(k)._run(unit, free)))
        return Superoperator(np.column_stack(columns), cp=True, tp=True)


# --------------------------------------------------------------------------
# Closed forms
# --------------------------------------------------------------------------


def dephasing_reduced_state(params: DephasingModelParams, rho0: DensityMatrix) -> DensityMatrix:
    """Reduced state after free evolution for time t: a mixture of the input
    and its sigma_z conjugation with weight (1 - exp(-rate t)) / 2."""
    if rho0.dim != 2:
        raise DimensionError("qubit input required")
    decay = np.exp(-params.rate * params.t)
    rho = rho0.matrix
    return DensityMatrix(
        0.5 * (1.0 + decay) * rho + 0.5 * (1.0 - decay) * (SIGMA_Z @ rho @ SIGMA_Z)
    )


def dephased_trajectory_exact(params: DephasingModelParams) -> float:
    """Closed-form <sigma_x>(t) after a sigma_x-basis dephasing at time s.

    Implements the hyperbolic closed form literally, including its sign
    term, which is undefined at t = 2s; that point raises SingularTimeError
    and both one-sided limits are available from dephased_trajectory_limits.
    For t > 2s the expression reduces to x0/2 (exp(-rate (t-2s)) + exp(-rate t)).
    """
    rate, s, t, x0 = params.rate, params.s, params.t, params.x0
    if t == 2 * s:
        raise SingularTimeError(
            f"the closed form is undefined at t = 2s = {t!r}; "
            "use dephased_trajectory_limits for the one-sided limits"
        )
    sign = np.sign(t - 2 * s)
    return float(
        0.5 * x0 * (np.cosh(rate * (t - 2 * s)) + np.cosh(rate * t))
        - 0.5 * x0 * (np.sinh(rate * t) + np.sinh(rate * (t - 2 * s)) / sign)
    )


def dephased_trajectory_limits(params: DephasingModelParams) -> tuple[float, float]:
    """One-sided limits of the closed form at the singular point t = 2s.

    Approaching from either side, the sign-divided sinh term vanishes and
    the remaining terms are even in (t - 2s), so both limits evaluate to
    x0/2 (1 + exp(-2 rate s)): the formula is continuous at t = 2s with only
    a derivative kink.  Both limits are returned (left, right) so the
    coincidence is reported rather than assumed.
    """
    rate, s, x0 = params.rate, params.s, params.x0
    value = 0.5 * x0 * (1.0 + np.cosh(2.0 * rate * s)) - 0.5 * x0 * np.sinh(
        2.0 * rate * s
    )
    return float(value), float(value)


def ncgd_prediction(params: DephasingModelParams) -> float:
    """<sigma_x>(t) as predicted by dephased-sandwiched map propagation:
    x0 exp(-rate t), independent of the dephasing time s."""
    return float(params.x0 * np.exp(-params.rate * params.t))


def quadrature_oracle(
    params: DephasingModelParams,
    rho0: DensityMatrix,
    intervene: bool,
    scheme: QuadratureScheme = DEFAULT_SCHEME,
) -> DensityMatrix:
    """Reduced state at time t from the branch-dyad engine.

    Evolves to s, optionally applies the sigma_x dephasing, evolves to t and
    traces out the environment numerically; an implementation path
    independent of the closed forms above.
    """
    if rho0.dim != 2:
        raise DimensionError("qubit input required")
    terms = _Terms(rho0.matrix)
    terms.evolve(params.g, params.s)
    if intervene:
        terms.intervene(intervention_matrix(Dephase(sigma_x_observable()), 2))
    terms.evolve(params.g, params.t - params.s)
    return DensityMatrix(terms.reduce(scheme, params.gamma))


def dephasing_liouvillian(rate: float) -> np.ndarray:
    """Generator of the pure-dephasing semigroup in superoperator form."""
    sz = np.kron(SIGMA_Z.conj(), SIGMA_Z)
    return 0.5 * rate * (sz - np.eye(4, dtype=complex))


def bloch_ode_state(params: DephasingModelParams, rho0: DensityMatrix) -> DensityMatrix:
    """Integrate the Bloch equations x' = -rate x, y' = -rate y, z' = 0
    numerically; an independent route to the reduced state."""
    rate = params.rate
    x, y, z = bloch_vector(rho0.matrix)

    def rhs(_t, v):
        return [-rate * v[0], -rate * v[1], 0.0]

    sol = solve_ivp(
        rhs, (0.0, params.t), [x, y, z], method="DOP853", rtol=1e-12, atol=1e-14
    )
    xf, yf, zf = sol.y[:, -1]
    return DensityMatrix(state_from_bloch(xf, yf, zf))


def dephasing_semigroup_map(rate: float, tau: float) -> Superoperator:
    """CPTP interval map of the pure-dephasing semigroup."""
    p = 0.5 * (1.0 + np.exp(-rate * tau))
    return kraus_channel(
        [np.sqrt(p) * np.eye(2, dtype=complex), np.sqrt(1.0 - p) * SIGMA_Z]
    )


def dephasing_semigroup_process(
    rate: float, times: TimeGrid, initial: DensityMatrix | None = None
) -> MarkovProcess:
    """Markov model whose interval maps are the semigroup maps."""
    if initial is None:
        initial = maximally_mixed(2)
    maps = tuple(
        dephasing_semigroup_map(rate, times.interval(k))
        for k in range(1, times.n_steps + 1)
    )
    return MarkovProcess(dim_s=2, maps=maps, initial_s=initial, times=times)


# --------------------------------------------------------------------------
# Trajectory table (figure reproduction data)
# --------------------------------------------------------------------------


def trajectory_table(
    g: float = 1.0,
    gamma: float = 1.0,
    s: float = 1.0,
    x0: float = 1.0,
    t_max: float = 5.0,
    dt: float = 0.01,
) -> np.ndarray:
    """Columns (t, x_exact, x_ncgd) on a uniform grid over [0, t_max].

    The singular grid point t = 2s, where the closed form's sign term is
    undefined, is filled with the (coinciding) one-sided limits.
    """
    if dt <= 0 or t_max <= 0:
        raise ValueError("t_max and dt must be positive")
    steps = int(round(t_max / dt))
    rows = np.empty((steps + 1, 3))
    for i in range(steps + 1):
        t = i * dt
        params = DephasingModelParams(g=g, gamma=gamma, x0=x0, s=min(s, t), t=t)
        if abs(t - 2 * s) < 1e-12:
            exact = dephased_trajectory_limits(params)[0]
        elif t <= s:
            # Dephasing has not happened yet: plain decay.
            exact = x0 * np.exp(-g * gamma * t)
        else:
            exact = dephased_trajectory_exact(params)
        rows[i] = (t, exact, ncgd_prediction(params))
    return rows


def write_trajectory_csv(path, table: np.ndarray) -> None:
    """Write the trajectory table with full-precision positional decimals."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("t,x_exact,x_ncgd\n")
        for t, x_exact, x_ncgd in table:
            fh.write(
                ",".join(
                    np.format_float_positional(v, unique=True, trim="0")
                    for v in (t, x_exact, x_ncgd)
                )
                + "\n"
            )


# --------------------------------------------------------------------------
# Counterexamples and the worked separation instance
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Counterexample:
    name: str
    process: object
    observable: Observable
    preparations: PreparationSet
    expected: dict[str, bool]


def rotation_y(theta: float) -> np.ndarray:
    """exp(-i theta sigma_y / 2) in closed form."""
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def swap_gate() -> np.ndarray:
    u = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            u[2 * j + i, 2 * i + j] = 1.0
    return u


def build_counterexample(which: int) -> Counterexample:
    """The three boundary instances separating the checker notions.

    1: unitary quarter-turn rotations, measured in the rotation-transverse
       basis, with a depolarizing preparation: incoherent for that
       preparation yet non-classical.
    2: same rotations behind a first-step erasure to the maximally mixed
       state: incoherent for every preparation, non-invertible, and still
       non-classical.
    3: two qubits swapped between two measurements of a degenerate local
       observable: classical for every preparation yet not incoherent.
    """
    if which == 1:
        rot = unitary_channel(rotation_y(np.pi / 2.0))
        process = MarkovProcess(
            dim_s=2,
            maps=(rot, rot, rot),
            initial_s=pure_state(ket(0, 2)),
            times=TimeGrid((0.0, 1.0, 2.0, 3.0)),
            observables=(sigma_z_observable(),),
        )
        return Counterexample(
            name="counterexample-1",
            process=process,
            observable=sigma_z_observable(),
            preparations=Single(CPMap(reset_channel(maximally_mixed(2).matrix))),
            expected={"classical": False, "incoherent": True},
        )
    if which == 2:
        rot = unitary_channel(rotation_y(np.pi / 2.0))
        erase = reset_channel(maximally_mixed(2).matrix)
        process = MarkovProcess(
            dim_s=2,
            maps=(erase, rot, rot),
            initial_s=pure_state(ket(0, 2)),
            times=TimeGrid((0.0, 1.0, 2.0, 3.0)),
            observables=(sigma_z_observable(),),
        )
        return Counterexample(
            name="counterexample-2",
            process=process,
            observable=sigma_z_observable(),
            preparations=spanning_preparations(2),
            expected={
                "markov": True,
                "incoherent": True,
                "invertible": False,
                "classical": False,
            },
        )
    if which == 3:
        observable = embed_left(sigma_z_observable(), 2)
        process = MarkovProcess(
            dim_s=4,
            maps=(
                unitary_channel(np.eye(4, dtype=complex)),
                unitary_channel(swap_gate()),
            ),
            initial_s=pure_state(ket(0, 4)),
            times=TimeGrid((0.0, 1.0, 2.0)),
            observables=(observable,),
        )
        return Counterexample(
            name="counterexample-3",
            process=process,
            observable=observable,
            preparations=spanning_preparations(4),
            expected={
                "classical": True,
                "incoherent": False,
                "markov": True,
                "invertible": True,
            },
        )
    raise IndexError(f"counterexample index {which} not in 1..3")


def dephasing_separation_instance(
    g: float = 1.0,
    gamma: float = 1.0,
    s: float = 1.0,
    t: float = 3.0,
    scheme: QuadratureScheme = DEFAULT_SCHEME,
) -> Counterexample:
    """The dilated dephasing model with the transverse observable: NCGD for
    the derived map family, yet not incoherent.

    The grid puts a measurement time between the dephasing time s and the
    readout time t, so the sandwiched-map condition is exercised on a
    genuine middle time rather than holding vacuously.
    """
    if not 0 < s < t:
        raise ValueError("the instance needs 0 < s < t")
    process = LorentzianDephasingProcess(
        g=g,
        gamma=gamma,
        initial_s=maximally_mixed(2),
        times=TimeGrid((0.0, s, 0.5 * (s + t), t)),
        scheme=scheme,
        observables=(sigma_x_observable(),),
    )
    return Counterexample(
        name="appendix-a",
        process=process,
        observable=sigma_x_observable(),
        preparations=spanning_preparations(2),
        expected={"ncgd": True, "incoherent": False},
    )
