"""Linearly implicit Lawson exponential integrators for the SAV-NLS system.

One step of the scheme with an s-stage Gauss tableau:

1. extrapolate stage predictions ``phi*_i`` from the previous step,
2. freeze ``gamma*_i = i |phi*_i|^2 phi*_i / sqrt(<(phi*_i)^2,(phi*_i)^2>_h + C0)``,
3. solve the s-by-s real system ``A X = B`` for ``X_i = Re<L phi_ni, gamma*_i>_h``,
4. rebuild the stages and apply the Lawson-RK update.

All propagators ``exp(i alpha L_h theta tau)`` are diagonal in Fourier space,
so a step works on DFT coefficients and only transforms at its boundaries.
The first step (or any restart) is taken with the fully implicit
Lawson-Gauss method, solved by fixed-point iteration on the stage
predictions until they reproduce themselves.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .sav_core import ModelParams, SavState, gamma_star, initial_auxiliary
from .spectral_grid import (
    LaplacianSymbol,
    from_spectral,
    norm,
    to_spectral,
)

log = logging.getLogger(__name__)

__all__ = [
    "StepFailure",
    "BootstrapError",
    "ButcherTableau",
    "ExtrapolationStencil",
    "StageHistory",
    "StageSystem",
    "StageValues",
    "Propagator",
    "SCHEMES",
    "gauss_tableau",
    "extrapolation_coefficients",
    "lagrange_weights",
    "predict_stages",
    "assemble_stage_system",
    "solve_stage_scalars",
    "reconstruct_stages",
    "step",
    "bootstrap_step",
    "LawsonIntegrator",
    "make_integrator",
]

COND_LIMIT = 1e12


class StepFailure(ArithmeticError):
    """A time step produced a singular stage system or non-finite values."""


class BootstrapError(StepFailure):
    """The implicit fixed-point iteration did not converge."""


@dataclass(frozen=True)
class ButcherTableau:
    c: np.ndarray
    b: np.ndarray
    a: np.ndarray

    @property
    def s(self) -> int:
        return len(self.b)

    def symplectic_defect(self) -> float:
        """``max |b_i a_ij + b_j a_ji - b_i b_j|``."""
        ba = self.b[:, None] * self.a
        return float(np.max(np.abs(ba + ba.T - np.outer(self.b, self.b))))

    def is_symplectic(self, tol: float = 1e-14) -> bool:
        return self.symplectic_defect() <= tol


def gauss_tableau(s: int) -> ButcherTableau:
    """Gauss-Legendre collocation tableau with 2 or 3 stages."""
    if s == 2:
        r3 = np.sqrt(3.0)
        c = np.array([0.5 - r3 / 6, 0.5 + r3 / 6])
        a = np.array([[0.25, 0.25 - r3 / 6], [0.25 + r3 / 6, 0.25]])
        b = np.array([0.5, 0.5])
    elif s == 3:
        r15 = np.sqrt(15.0)
        c = np.array([0.5 - r15 / 10, 0.5, 0.5 + r15 / 10])
        a = np.array(
            [
                [5 / 36, 2 / 9 - r15 / 15, 5 / 36 - r15 / 30],
                [5 / 36 + r15 / 24, 2 / 9, 5 / 36 - r15 / 24],
                [5 / 36 + r15 / 30, 2 / 9 + r15 / 15, 5 / 36],
            ]
        )
        b = np.array([5 / 18, 4 / 9, 5 / 18])
    else:
        raise ValueError(f"only 2- and 3-stage Gauss tableaux are supported, got s={s}")
    for arr in (a, b, c):
        arr.setflags(write=False)
    return ButcherTableau(c=c, b=b, a=a)


def lagrange_weights(nodes: Sequence[float], x: float) -> np.ndarray:
    """Weights ``w_j = prod_{m != j} (x - x_m) / (x_j - x_m)``."""
    nodes = np.asarray(nodes, dtype=float)
    w = np.ones(len(nodes))
    for j in range(len(nodes)):
        for m in range(len(nodes)):
            if m != j:
                w[j] *= (x - nodes[m]) / (nodes[j] - nodes[m])
    return w


@dataclass(frozen=True)
class ExtrapolationStencil:
    """Stage predictors built from the previous step.

    Columns of ``coeffs`` act on ``(phi^{n-1}, phi_{(n-1)1}, ..., phi_{(n-1)s}, phi^n)``,
    located at ``theta = (0, c_1, ..., c_s, 1)`` in units of tau from ``t_{n-1}``.
    Row i predicts the solution at ``theta = 1 + c_i``.
    """

    thetas: np.ndarray
    columns: tuple[int, ...]
    coeffs: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return self.thetas[list(self.columns)]


def extrapolation_coefficients(tableau: ButcherTableau) -> ExtrapolationStencil:
    s = tableau.s
    thetas = np.concatenate([[0.0], tableau.c, [1.0]])
    if s not in (2, 3):
        raise ValueError(f"no extrapolation stencil for s={s}")
    # four-point stencils: s=2 uses (phi^{n-1}, stages, phi^n); s=3 drops phi^n
    columns = (0, 1, 2, 3)
    coeffs = np.zeros((s, s + 2))
    for i, ci in enumerate(tableau.c):
        coeffs[i, list(columns)] = lagrange_weights(thetas[list(columns)], 1.0 + ci)
    coeffs.setflags(write=False)
    return ExtrapolationStencil(thetas=thetas, columns=columns, coeffs=coeffs)


@dataclass
class StageHistory:
    """Previous step's solution and stage fields, together with its tau."""

    prev_solution: np.ndarray | None = None
    prev_stages: list[np.ndarray] = field(default_factory=list)
    tau: float | None = None

    @property
    def valid(self) -> bool:
        return self.prev_solution is not None and len(self.prev_stages) > 0

    def fields(self, phi_n: np.ndarray) -> list[np.ndarray]:
        return [self.prev_solution, *self.prev_stages, phi_n]


def predict_stages(
    history: StageHistory, stencil: ExtrapolationStencil, phi_n: np.ndarray
) -> list[np.ndarray]:
    if not history.valid:
        raise StepFailure("stage history is empty; take a bootstrap step first")
    fields = history.fields(phi_n)
    if len(fields) != stencil.coeffs.shape[1]:
        raise StepFailure(
            f"history holds {len(fields) - 2} stages, stencil expects {stencil.coeffs.shape[0]}"
        )
    preds = []
    for row in stencil.coeffs:
        acc = np.zeros_like(phi_n, dtype=complex)
        for w, f in zip(row, fields):
            if w != 0.0:
                acc += w * f
        preds.append(acc)
    return preds


class Propagator:
    """Cached Fourier multipliers ``exp(i alpha lambda theta tau)``.

    ``applications`` counts every non-identity multiplication.
    """

    def __init__(self, sym: LaplacianSymbol, alpha: float, tau: float):
        self.sym = sym
        self.alpha = float(alpha)
        self.tau = float(tau)
        self.applications = 0
        self._cache: dict[float, np.ndarray] = {}

    def multiplier(self, theta: float) -> np.ndarray:
        key = float(theta)
        m = self._cache.get(key)
        if m is None:
            m = np.exp(1j * self.alpha * key * self.tau * self.sym.eigenvalues)
            self._cache[key] = m
        return m

    def apply(self, u_hat: np.ndarray, theta: float) -> np.ndarray:
        if theta == 0.0:
            return u_hat
        self.applications += 1
        return self.multiplier(theta) * u_hat

    def matches(self, sym: LaplacianSymbol, alpha: float, tau: float) -> bool:
        return self.sym is sym and self.alpha == alpha and self.tau == tau


def _propagator(prop, sym, params, tau) -> Propagator:
    if prop is None or not prop.matches(sym, params.alpha, tau):
        return Propagator(sym, params.alpha, tau)
    return prop


@dataclass
class StageSystem:
    """The s-by-s reduction of the stage equations.

    ``A X = B`` with ``X_i = Re<L_h phi_ni, gamma*_i>_h``. The ``*_hat``
    arrays are DFT coefficients kept for the reconstruction.
    """

    A: np.ndarray
    B: np.ndarray
    gamma_star: list[np.ndarray]
    gamma_star_hat: list[np.ndarray] = field(repr=False)
    gamma_n_hat: list[np.ndarray] = field(repr=False)
    # coupled_hat[i][j] = exp(i alpha L (c_i - c_j) tau) gamma*_j, spectral
    coupled_hat: list[list[np.ndarray]] = field(repr=False)
    # base_hat[i] = exp(i alpha L c_i tau) phi^n, spectral
    base_hat: list[np.ndarray] = field(repr=False)
    phi_n_hat: np.ndarray = field(repr=False)
    sym: LaplacianSymbol = field(repr=False)

    @property
    def gamma_n(self) -> list[np.ndarray]:
        return [from_spectral(g, self.sym.grid) for g in self.gamma_n_hat]


def _re_inner_hat(u_hat, v_hat, scale) -> float:
    return scale * np.vdot(v_hat, u_hat).real


def assemble_stage_system(
    phi_n: np.ndarray,
    p_n: float,
    gamma_stars: Sequence[np.ndarray],
    tableau: ButcherTableau,
    tau: float,
    params: ModelParams,
    sym: LaplacianSymbol,
    propagator: Propagator | None = None,
) -> StageSystem:
    grid = sym.grid
    prop = _propagator(propagator, sym, params, tau)
    s, a, c = tableau.s, tableau.a, tableau.c
    lam = sym.eigenvalues
    scale = grid.cell_volume / grid.size
    bcoef = params.b

    phi_hat = to_spectral(phi_n, grid)
    g_hat = [to_spectral(g, grid) for g in gamma_stars]
    coupled = [[prop.apply(g_hat[j], c[i] - c[j]) for j in range(s)] for i in range(s)]
    base = [prop.apply(phi_hat, c[i]) for i in range(s)]

    # M[i, j] = Re<L exp(i alpha L (c_i - c_j) tau) gamma*_j, gamma*_i>_h
    M = np.empty((s, s))
    lg_conj = [lam * np.conj(g) for g in g_hat]
    for i in range(s):
        for j in range(s):
            M[i, j] = scale * np.dot(coupled[i][j], lg_conj[i]).real
    A = np.eye(s) + 2.0 * params.alpha * bcoef * tau**2 * (a * M) @ a

    gamma_n = []
    B = np.empty(s)
    for i in range(s):
        g = base[i].copy()
        for j in range(s):
            if a[i, j] != 0.0:
                g += (tau * bcoef * p_n * a[i, j]) * coupled[i][j]
        gamma_n.append(g)
        B[i] = scale * np.dot(g, lg_conj[i]).real
    return StageSystem(
        A=A,
        B=B,
        gamma_star=list(gamma_stars),
        gamma_star_hat=g_hat,
        gamma_n_hat=gamma_n,
        coupled_hat=coupled,
        base_hat=base,
        phi_n_hat=phi_hat,
        sym=sym,
    )


def solve_stage_scalars(system: StageSystem) -> np.ndarray:
    A = system.A
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(system.B)):
        raise StepFailure("non-finite stage system")
    cond = np.linalg.cond(A)
    if not cond <= COND_LIMIT:
        raise StepFailure(f"stage matrix is singular or ill-conditioned (cond={cond:.3e})")
    return np.linalg.solve(A, system.B)


@dataclass
class StageValues:
    phi: list[np.ndarray]
    p: np.ndarray
    k: list[np.ndarray]
    l: np.ndarray
    phi_hat: list[np.ndarray] = field(repr=False)
    k_hat: list[np.ndarray] = field(repr=False)


def reconstruct_stages(
    system: StageSystem,
    X: np.ndarray,
    tableau: ButcherTableau,
    tau: float,
    params: ModelParams,
    p_n: float,
) -> StageValues:
    grid = system.sym.grid
    s, a = tableau.s, tableau.a
    l = -2.0 * params.alpha * np.asarray(X, dtype=float)
    p_st = p_n + tau * (a @ l)
    k_hat = [params.b * p_st[j] * system.gamma_star_hat[j] for j in range(s)]
    phi_hat = []
    for i in range(s):
        u = system.base_hat[i].copy()
        for j in range(s):
            if a[i, j] != 0.0:
                # exp(i alpha L (c_i - c_j) tau) k_j is a multiple of coupled_hat[i][j]
                u += (tau * a[i, j] * params.b * p_st[j]) * system.coupled_hat[i][j]
        phi_hat.append(u)
    return StageValues(
        phi=[from_spectral(u, grid) for u in phi_hat],
        p=p_st,
        k=[from_spectral(k, grid) for k in k_hat],
        l=l,
        phi_hat=phi_hat,
        k_hat=k_hat,
    )


def _update(system, stages, tableau, tau, p_n, prop):
    c, bw = tableau.c, tableau.b
    u = prop.apply(system.phi_n_hat, 1.0)
    for i in range(tableau.s):
        u = u + (tau * bw[i]) * prop.apply(stages.k_hat[i], 1.0 - c[i])
    phi_next = from_spectral(u, system.sym.grid)
    p_next = p_n + tau * float(np.dot(bw, stages.l))
    return phi_next, p_next


def _gamma_stars(fields, c0, grid):
    try:
        return [gamma_star(u, c0, grid) for u in fields]
    except ValueError as exc:
        raise StepFailure(str(exc)) from exc


def _check_finite(phi, p, t):
    if not (np.isfinite(p) and np.isfinite(phi.sum())):
        raise StepFailure(f"non-finite solution at t={t:.17g}")


def _linear_step(state, tableau, tau, params, sym, prop, gstars):
    system = assemble_stage_system(state.phi, state.p, gstars, tableau, tau, params, sym, prop)
    X = solve_stage_scalars(system)
    stages = reconstruct_stages(system, X, tableau, tau, params, state.p)
    return system, stages


def step(
    state: SavState,
    history: StageHistory,
    tableau: ButcherTableau,
    stencil: ExtrapolationStencil,
    tau: float,
    params: ModelParams,
    sym: LaplacianSymbol,
    propagator: Propagator | None = None,
) -> tuple[SavState, StageHistory]:
    """One linearly implicit step; needs a history from the previous step."""
    if history.tau is not None and history.tau != tau:
        raise StepFailure("tau changed since the last step; bootstrap again")
    prop = _propagator(propagator, sym, params, tau)
    preds = predict_stages(history, stencil, state.phi)
    gstars = _gamma_stars(preds, params.c0, sym.grid)
    system, stages = _linear_step(state, tableau, tau, params, sym, prop, gstars)
    phi_next, p_next = _update(system, stages, tableau, tau, state.p, prop)
    t_next = state.t + tau
    _check_finite(phi_next, p_next, t_next)
    return (
        SavState(phi=phi_next, p=p_next, t=t_next),
        StageHistory(prev_solution=state.phi, prev_stages=stages.phi, tau=tau),
    )


def bootstrap_step(
    state: SavState,
    tableau: ButcherTableau,
    tau: float,
    params: ModelParams,
    sym: LaplacianSymbol,
    tol: float = 1e-13,
    max_iter: int = 100,
    propagator: Propagator | None = None,
    increments: list[float] | None = None,
) -> tuple[SavState, StageHistory]:
    """One step of the fully implicit Lawson-Gauss method.

    The nonlinearity is evaluated at the unknown stages. Each iteration
    freezes it at the current stage guess and solves the resulting linear
    stage equations exactly; iteration stops once the relative stage
    increment drops to ``tol``. Relative increments are appended to
    ``increments`` when given.
    """
    grid = sym.grid
    prop = _propagator(propagator, sym, params, tau)
    phi_hat = to_spectral(state.phi, grid)
    guess = [from_spectral(prop.multiplier(ci) * phi_hat, grid) for ci in tableau.c]
    for it in range(1, max_iter + 1):
        gstars = _gamma_stars(guess, params.c0, grid)
        system, stages = _linear_step(state, tableau, tau, params, sym, prop, gstars)
        inc = 0.0
        for new, old in zip(stages.phi, guess):
            ref = norm(new, grid)
            diff = norm(new - old, grid)
            inc = max(inc, diff / ref if ref > 0 else diff)
        if increments is not None:
            increments.append(inc)
        if not np.isfinite(inc):
            raise StepFailure(f"non-finite bootstrap iterate at t={state.t:.17g}")
        guess = stages.phi
        if inc <= tol:
            break
    else:
        raise BootstrapError(
            f"implicit stage iteration did not reach tol={tol:g} in {max_iter} iterations "
            f"(last increment {inc:.3e}); reduce tau"
        )
    log.debug("bootstrap converged in %d iterations", it)
    phi_next, p_next = _update(system, stages, tableau, tau, state.p, prop)
    t_next = state.t + tau
    _check_finite(phi_next, p_next, t_next)
    return (
        SavState(phi=phi_next, p=p_next, t=t_next),
        StageHistory(prev_solution=state.phi, prev_stages=stages.phi, tau=tau),
    )


# scheme name -> (stages, fully implicit)
SCHEMES = {
    "li-ei3": (2, False),
    "li-ei4": (3, False),
    "implicit-gauss2": (2, True),
    "implicit-gauss3": (3, True),
}


class LawsonIntegrator:
    """Time stepper bound to one grid, model and step size.

    The linearly implicit schemes bootstrap themselves on the first call to
    :meth:`advance` and after :meth:`reset`.
    """

    def __init__(
        self,
        scheme: str,
        tau: float,
        params: ModelParams,
        sym: LaplacianSymbol,
        *,
        tol: float = 1e-13,
        max_iter: int = 100,
    ):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}")
        if not (tau > 0 and np.isfinite(tau)):
            raise ValueError(f"tau must be positive, got {tau}")
        s, implicit = SCHEMES[scheme]
        self.scheme = scheme
        self.tau = float(tau)
        self.params = params
        self.sym = sym
        self.implicit = implicit
        self.tableau = gauss_tableau(s)
        self.stencil = extrapolation_coefficients(self.tableau)
        self.propagator = Propagator(sym, params.alpha, self.tau)
        self.tol = tol
        self.max_iter = max_iter
        self.history = StageHistory()
        self.steps_taken = 0

    def initial_state(self, phi0: np.ndarray, t0: float = 0.0) -> SavState:
        phi0 = np.asarray(phi0, dtype=complex)
        return SavState(phi=phi0, p=initial_auxiliary(phi0, self.params.c0, self.sym.grid), t=t0)

    def reset(self) -> None:
        self.history = StageHistory()

    def advance(self, state: SavState) -> SavState:
        try:
            if self.implicit or not self.history.valid:
                new, self.history = bootstrap_step(
                    state, self.tableau, self.tau, self.params, self.sym,
                    tol=self.tol, max_iter=self.max_iter, propagator=self.propagator,
                )
            else:
                new, self.history = step(
                    state, self.history, self.tableau, self.stencil, self.tau,
                    self.params, self.sym, propagator=self.propagator,
                )
        except StepFailure as exc:
            raise StepFailure(f"step {self.steps_taken + 1}: {exc}") from exc
        self.steps_taken += 1
        return new

    def run(
        self,
        state: SavState,
        n_steps: int,
        callback: Callable[[int, SavState], None] | None = None,
    ) -> SavState:
        """Take ``n_steps`` steps; ``callback(k, state)`` sees every new state.

        Times are set to ``t0 + k*tau`` rather than accumulated.
        """
        t0 = state.t
        for k in range(1, n_steps + 1):
            state = self.advance(state)
            state.t = t0 + k * self.tau
            if callback is not None:
                callback(k, state)
        return state


def make_integrator(scheme: str, tau: float, params: ModelParams, sym: LaplacianSymbol, **kw) -> LawsonIntegrator:
    return LawsonIntegrator(scheme, tau, params, sym, **kw)
