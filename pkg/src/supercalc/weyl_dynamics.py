"""Classical super-quantities for a spin-1/2 transport equation.

Three groups of tools live here:

* Closed forms for the free two-component (massless spin-1/2) propagator in
  momentum representation, the generating action of its classical super
  phase flow (two construction routes), the associated van Vleck
  super-determinant, and the symbolic Berezin reconstruction of the
  propagator from those classical quantities.

* A generic Hamilton flow integrator over phase states whose coordinates are
  even/odd elements of a finite-generator algebra, together with builders
  for the concrete Hamiltonian functions used in the examples (free
  spin-transport symbol, supersymmetric oscillator, external
  electromagnetic coupling).

* A solver for the degenerate second-order model equation
  ``v_tt = t^2 v_qq + (4k+1) v_q`` whose solution collapses to a finite
  derivative series, plus its first-order systemization helpers and a
  finite-difference cross-check integrator.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .berezin import OddPolynomial, integrate_odd, odd_expand
from .fourier_odd import OddFourierConfig, fo
from .grassmann import (
    AnalyticSpec,
    GrassmannDomainError,
    GrassmannError,
    Supernumber,
    apply_analytic,
    gen,
    gen_left_derivative,
    inverse,
    scalar,
    zero,
)

__all__ = [
    "WeylSymbolParams",
    "FlowState",
    "SuperHamiltonian",
    "free_propagator_momentum",
    "hj_action",
    "van_vleck",
    "van_vleck_amplitude",
    "propagator_from_classical",
    "propagator_matrix_from_classical",
    "super_hamilton_flow",
    "free_weyl_hamiltonian",
    "susy_oscillator_hamiltonian",
    "em_weyl_hamiltonian",
    "pauli_odd_symbols",
    "QiSolution",
    "QiPhaseComponents",
    "qi_solve",
    "qi_coefficients",
    "qi_characteristic_coefficients",
    "qi_phase_components",
    "qi_finite_difference",
    "gaussian_profile",
]

_EXP = AnalyticSpec.named("exp")
_SIN = AnalyticSpec.named("sin")
_COS = AnalyticSpec.named("cos")
_SQRT = AnalyticSpec.named("sqrt")


# ---------------------------------------------------------------------------
# coercion helpers
# ---------------------------------------------------------------------------

def _as_super(v) -> Supernumber:
    if isinstance(v, Supernumber):
        return v
    return Supernumber(0, {0: complex(v)})


def _coerce_tuple(vals, count: int, label: str) -> Tuple[Supernumber, ...]:
    vals = tuple(vals)
    if len(vals) != count:
        raise GrassmannError(f"{label} needs exactly {count} components")
    return tuple(_as_super(v) for v in vals)


def _common_L(*groups: Sequence[Supernumber]) -> int:
    return max((v.L for g in groups for v in g), default=0)


def _embed_all(group: Sequence[Supernumber], L: int) -> Tuple[Supernumber, ...]:
    return tuple(v.embed(L) for v in group)


def _check_parity(group: Sequence[Supernumber], want: str, label: str) -> None:
    for v in group:
        if not v.is_zero() and v.parity != want:
            raise GrassmannDomainError(f"{label} components must be {want}")


def _restrict(X: Supernumber, L: int) -> Supernumber:
    """Drop into the L-generator subalgebra (all masks must already fit)."""
    return X.embed(L)


def _sinc(z: complex) -> complex:
    """sin(z)/z with the removable singularity filled by series."""
    if abs(z) < 1e-4:
        z2 = z * z
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0
    return cmath.sin(z) / z


# ---------------------------------------------------------------------------
# parameter bundle and scalar shorthands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeylSymbolParams:
    """Scales of the spin-transport symbol and its classical quantities.

    ``speed`` multiplies the whole symbol, ``hbar`` is the quantization
    scale, ``kernel_scale`` is the odd-sector Fourier scale, and
    ``pair_weight`` weights the odd pairing in the initial action datum
    (defaults to hbar/kernel_scale; quantization-facing operations need it
    equal to 1).
    """

    speed: float = 1.0
    hbar: float = 1.0
    kernel_scale: complex = 1.0
    pair_weight: complex | None = None

    def __post_init__(self):
        try:
            speed_ok = float(self.speed) > 0
            hbar_ok = float(self.hbar) > 0
        except (TypeError, ValueError):
            speed_ok = hbar_ok = False
        if not speed_ok:
            raise GrassmannError("speed must be a positive real number")
        if not hbar_ok:
            raise GrassmannError("hbar must be a positive real number")
        if complex(self.kernel_scale) == 0:
            raise GrassmannError("kernel_scale must be nonzero")
        if self.pair_weight is None:
            object.__setattr__(
                self, "pair_weight", complex(self.hbar) / complex(self.kernel_scale)
            )
        elif complex(self.pair_weight) == 0:
            raise GrassmannError("pair_weight must be nonzero")

    # -- scalar shorthands (all accept triples of numbers or even elements) --

    def momentum_norm(self, xi) -> Supernumber:
        """Euclidean norm of the momentum triple (principal square root)."""
        xs = _coerce_tuple(xi, 3, "momentum")
        L = _common_L(xs)
        xs = _embed_all(xs, L)
        _check_parity(xs, "even", "momentum")
        sq = xs[0] * xs[0] + xs[1] * xs[1] + xs[2] * xs[2]
        if sq.body == 0:
            raise GrassmannDomainError("momentum norm needs |xi|^2 with nonzero body")
        return apply_analytic(_SQRT, sq)

    def rotation_angle(self, t: float, xi) -> Supernumber:
        """Spin precession angle: speed * t * |xi| / kernel_scale."""
        return (self.speed * float(t) / complex(self.kernel_scale)) * self.momentum_norm(xi)

    def transverse(self, xi) -> Supernumber:
        """xi_1 + i xi_2."""
        xs = _coerce_tuple(xi, 3, "momentum")
        return xs[0] + 1j * xs[1]

    def transverse_mirror(self, xi) -> Supernumber:
        """xi_1 - i xi_2 (literal sign flip, not complex conjugation)."""
        xs = _coerce_tuple(xi, 3, "momentum")
        return xs[0] - 1j * xs[1]

    def dispersion_minus(self, t: float, xi) -> Supernumber:
        """|xi| cos(angle) - i xi_3 sin(angle): the caustic denominator."""
        xs = _coerce_tuple(xi, 3, "momentum")
        norm = self.momentum_norm(xs)
        L = max(norm.L, _common_L(xs))
        xs = _embed_all(xs, L)
        ang = self.rotation_angle(t, xs).embed(L)
        return norm.embed(L) * apply_analytic(_COS, ang) - 1j * xs[2] * apply_analytic(_SIN, ang)

    def dispersion_plus(self, t: float, xi) -> Supernumber:
        """|xi| cos(angle) + i xi_3 sin(angle)."""
        xs = _coerce_tuple(xi, 3, "momentum")
        norm = self.momentum_norm(xs)
        L = max(norm.L, _common_L(xs))
        xs = _embed_all(xs, L)
        ang = self.rotation_angle(t, xs).embed(L)
        return norm.embed(L) * apply_analytic(_COS, ang) + 1j * xs[2] * apply_analytic(_SIN, ang)


# ---------------------------------------------------------------------------
# free propagator in momentum representation (closed form)
# ---------------------------------------------------------------------------

def free_propagator_momentum(t: float, p, c: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """2x2 momentum-space propagator of the free two-component equation.

    cos/sin closed form; the |p| -> 0 limit is filled by series, giving the
    identity at p = 0.  Unitary for real arguments.
    """
    px, py, pz = (float(v) for v in p)
    if not (c > 0 and hbar > 0):
        raise GrassmannError("c and hbar must be positive")
    norm = math.sqrt(px * px + py * py + pz * pz)
    ang = c * float(t) * norm / hbar
    # sin(ang)/norm -> c t / hbar as norm -> 0
    sin_over_norm = (c * float(t) / hbar) * _sinc(ang)
    cos_part = cmath.cos(ang)
    h_mat = np.array([[pz, px - 1j * py], [px + 1j * py, -pz]], dtype=complex)
    return cos_part * np.eye(2, dtype=complex) - 1j * sin_over_norm * h_mat


# ---------------------------------------------------------------------------
# generating action and van Vleck determinant
# ---------------------------------------------------------------------------

_ACTION_ROUTES = ("direct", "jacobi")


def hj_action(t: float, x, xi, theta, pi, params: WeylSymbolParams,
              route: str = "direct") -> Supernumber:
    """Generating action of the free spin-transport flow.

    ``route="direct"`` returns the solution of the Hamilton-Jacobi problem
    (valid for every pair_weight); ``route="jacobi"`` returns the variant
    obtained by evaluating the action integral along the flow, which agrees
    with the direct route exactly when pair_weight == 1.
    """
    if route not in _ACTION_ROUTES:
        raise GrassmannError(f"route must be one of {_ACTION_ROUTES}")
    xs = _coerce_tuple(x, 3, "position")
    xis = _coerce_tuple(xi, 3, "momentum")
    ths = _coerce_tuple(theta, 2, "odd position")
    pis = _coerce_tuple(pi, 2, "odd momentum")
    L = _common_L(xs, xis, ths, pis)
    xs, xis, ths, pis = (_embed_all(g, L) for g in (xs, xis, ths, pis))
    _check_parity(xs, "even", "position")
    _check_parity(xis, "even", "momentum")
    _check_parity(ths, "odd", "odd position")
    _check_parity(pis, "odd", "odd momentum")

    a = complex(params.pair_weight)
    kk = complex(params.kernel_scale)
    norm = params.momentum_norm(xis).embed(L)
    denom = params.dispersion_minus(t, xis).embed(L)
    # the caustic set is where the denominator body vanishes; floating point
    # never lands on it exactly, so flag anything below a relative threshold
    if abs(denom.body) <= 1e-12 * max(abs(norm.body), 1e-300):
        raise GrassmannDomainError("caustic: dispersion denominator has zero body")
    sin_ang = apply_analytic(_SIN, params.rotation_angle(t, xis).embed(L))
    zeta = xis[0] + 1j * xis[1]
    zeta_m = xis[0] - 1j * xis[1]

    pairing = ths[0] * pis[0] + ths[1] * pis[1]
    theta_top = ths[0] * ths[1]
    pi_top = pis[0] * pis[1]
    pi_weight = (a * a / kk) if route == "direct" else ((2.0 * a - 1.0) / kk)

    even_part = xs[0] * xis[0] + xs[1] * xis[1] + xs[2] * xis[2]
    odd_part = inverse(denom) * (
        a * norm * pairing
        - kk * zeta * sin_ang * theta_top
        - pi_weight * zeta_m * sin_ang * pi_top
    )
    return even_part + odd_part


def van_vleck(t: float, xi, params: WeylSymbolParams) -> Supernumber:
    """Super-determinant of the mixed second derivatives of the action."""
    xis = _coerce_tuple(xi, 3, "momentum")
    L = _common_L(xis)
    xis = _embed_all(xis, L)
    _check_parity(xis, "even", "momentum")
    sq = xis[0] * xis[0] + xis[1] * xis[1] + xis[2] * xis[2]
    if sq.body == 0:
        raise GrassmannDomainError("van Vleck determinant needs |xi|^2 with nonzero body")
    a = complex(params.pair_weight)
    denom = params.dispersion_minus(t, xis).embed(L)
    return (1.0 / (a * a)) * inverse(sq) * denom * denom


def van_vleck_amplitude(t: float, xi, params: WeylSymbolParams) -> Supernumber:
    """Amplitude factor: dispersion_minus / (pair_weight * |xi|).

    Its square is exactly ``van_vleck`` (no branch ambiguity).
    """
    xis = _coerce_tuple(xi, 3, "momentum")
    L = _common_L(xis)
    xis = _embed_all(xis, L)
    a = complex(params.pair_weight)
    norm = params.momentum_norm(xis).embed(L)
    denom = params.dispersion_minus(t, xis).embed(L)
    return (1.0 / a) * denom * inverse(norm)


# ---------------------------------------------------------------------------
# propagator reconstructed from the classical quantities
# ---------------------------------------------------------------------------

def propagator_from_classical(t: float, p, u0: complex, u1: complex,
                              hbar: float = 1.0, speed: float = 1.0
                              ) -> Tuple[complex, complex]:
    """Apply the classically-reconstructed propagator to a component pair.

    Symbolic pipeline at fixed real momentum: odd Fourier transform of the
    input pair, multiplication by amplitude and exponentiated action, and
    Berezin integration over the odd momentum variables.  Requires
    pair_weight == 1 (enforced by construction: kernel_scale = hbar).
    """
    params = WeylSymbolParams(speed=speed, hbar=hbar, kernel_scale=hbar)
    px, py, pz = (float(v) for v in p)
    mom = (px, py, pz)

    # theta sector occupies generator bits 0..1; the odd momentum variables
    # used for the Berezin integral live above them.
    thetas = (gen(2, 0), gen(2, 1))
    cfg = OddFourierConfig(2, kernel_scale=hbar)
    fu = fo(OddPolynomial(2, {0: complex(u0), 0b11: complex(u1)}), cfg)
    amp = van_vleck_amplitude(t, mom, params)
    phase_scale = 1j / hbar

    def kernel(pis: Tuple[Supernumber, ...]) -> Supernumber:
        act = hj_action(t, (0.0, 0.0, 0.0), mom,
                        tuple(th.embed(pis[0].L) for th in thetas), pis, params)
        return apply_analytic(_EXP, phase_scale * act) * fu.evaluate(pis)

    integral = integrate_odd(odd_expand(kernel, 2, 2))
    total = (hbar * amp.body) * integral
    return total.coefficient(0), total.coefficient(0b11)


def propagator_matrix_from_classical(t: float, p, hbar: float = 1.0,
                                     speed: float = 1.0) -> np.ndarray:
    """2x2 matrix of the reconstructed propagator (columns = basis images)."""
    v00, v10 = propagator_from_classical(t, p, 1.0, 0.0, hbar=hbar, speed=speed)
    v01, v11 = propagator_from_classical(t, p, 0.0, 1.0, hbar=hbar, speed=speed)
    return np.array([[v00, v01], [v10, v11]], dtype=complex)


# ---------------------------------------------------------------------------
# generic Hamilton flow over supernumber phase states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowState:
    """Phase point: time, even position/momentum, odd position/momentum."""

    t: float
    x: Tuple[Supernumber, ...]
    xi: Tuple[Supernumber, ...]
    theta: Tuple[Supernumber, ...]
    pi: Tuple[Supernumber, ...]

    def __post_init__(self):
        x = tuple(_as_super(v) for v in self.x)
        xi = tuple(_as_super(v) for v in self.xi)
        theta = tuple(_as_super(v) for v in self.theta)
        pi = tuple(_as_super(v) for v in self.pi)
        if len(x) != len(xi):
            raise GrassmannError("x and xi must have the same length")
        if len(theta) != len(pi):
            raise GrassmannError("theta and pi must have the same length")
        L = _common_L(x, xi, theta, pi)
        x, xi, theta, pi = (_embed_all(g, L) for g in (x, xi, theta, pi))
        _check_parity(x, "even", "x")
        _check_parity(xi, "even", "xi")
        _check_parity(theta, "odd", "theta")
        _check_parity(pi, "odd", "pi")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "pi", pi)

    @property
    def L(self) -> int:
        return _common_L(self.x, self.xi, self.theta, self.pi)

    @property
    def even_count(self) -> int:
        return len(self.x)

    @property
    def odd_count(self) -> int:
        return len(self.theta)


_Deriv = Tuple[Tuple[Supernumber, ...], Tuple[Supernumber, ...],
               Tuple[Supernumber, ...], Tuple[Supernumber, ...]]


class SuperHamiltonian:
    """Even scalar function of (t, x, xi, theta, pi) with slot derivatives.

    ``fn(t, x, xi, theta, pi)`` receives tuples of supernumbers in a shared
    algebra and must return an even supernumber of that algebra (it may not
    introduce new generators).  Odd-slot derivatives follow the left
    convention.  ``partials`` optionally supplies closed forms; otherwise
    each derivative is extracted exactly from one evaluation seeded with
    fresh nilpotent generators.
    """

    def __init__(self, fn: Callable, even_count: int, odd_count: int,
                 partials: Callable | None = None):
        self.fn = fn
        self.even_count = int(even_count)
        self.odd_count = int(odd_count)
        self.partials = partials
        if self.even_count < 0 or self.odd_count < 0:
            raise GrassmannError("slot counts must be nonnegative")

    # -- evaluation ---------------------------------------------------------

    def _prepare(self, x, xi, theta, pi):
        xs = _coerce_tuple(x, self.even_count, "x")
        xis = _coerce_tuple(xi, self.even_count, "xi")
        ths = _coerce_tuple(theta, self.odd_count, "theta")
        pis = _coerce_tuple(pi, self.odd_count, "pi")
        L = _common_L(xs, xis, ths, pis)
        return tuple(_embed_all(g, L) for g in (xs, xis, ths, pis)), L

    def value(self, t: float, x, xi, theta, pi) -> Supernumber:
        (xs, xis, ths, pis), L = self._prepare(x, xi, theta, pi)
        val = _as_super(self.fn(t, xs, xis, ths, pis))
        if val.L > L:
            raise GrassmannError("Hamiltonian escaped the state algebra")
        val = val.embed(L)
        if not val.is_zero() and val.parity != "even":
            raise GrassmannDomainError("Hamiltonian values must be even")
        return val

    def value_at(self, state: FlowState) -> Supernumber:
        return self.value(state.t, state.x, state.xi, state.theta, state.pi)

    # -- derivatives --------------------------------------------------------

    def _seeded_even(self, t, groups, L, gi: int, j: int) -> Supernumber:
        """d/d(slot) for an even slot, one evaluation with a nilpotent seed."""
        Lw = L + 2
        seed = gen(Lw, L) * gen(Lw, L + 1)
        lifted = [list(_embed_all(g, Lw)) for g in groups]
        lifted[gi][j] = lifted[gi][j] + seed
        val = _as_super(self.fn(t, *(tuple(g) for g in lifted)))
        if val.L > Lw:
            raise GrassmannError("Hamiltonian escaped the seeded algebra")
        val = val.embed(Lw)
        hi = (1 << L) | (1 << (L + 1))
        picked = {m ^ hi: c for m, c in val.terms.items() if (m & hi) == hi}
        return _restrict(Supernumber(Lw, picked), L)

    def _seeded_odd(self, t, groups, L, gi: int, j: int) -> Supernumber:
        """Left derivative for an odd slot via one fresh-generator seed."""
        Lw = L + 1
        seed = gen(Lw, L)
        lifted = [list(_embed_all(g, Lw)) for g in groups]
        lifted[gi][j] = lifted[gi][j] + seed
        val = _as_super(self.fn(t, *(tuple(g) for g in lifted)))
        if val.L > Lw:
            raise GrassmannError("Hamiltonian escaped the seeded algebra")
        return _restrict(gen_left_derivative(val.embed(Lw), L), L)

    def gradient(self, t: float, x, xi, theta, pi) -> _Deriv:
        """(dH/dx, dH/dxi, dH/dtheta, dH/dpi), odd slots in left convention."""
        (xs, xis, ths, pis), L = self._prepare(x, xi, theta, pi)
        if self.partials is not None:
            out = self.partials(t, xs, xis, ths, pis)
            return tuple(
                tuple(_as_super(v).embed(L) for v in grp) for grp in out
            )  # type: ignore[return-value]
        groups = (xs, xis, ths, pis)
        d_x = tuple(self._seeded_even(t, groups, L, 0, j) for j in range(self.even_count))
        d_xi = tuple(self._seeded_even(t, groups, L, 1, j) for j in range(self.even_count))
        d_th = tuple(self._seeded_odd(t, groups, L, 2, j) for j in range(self.odd_count))
        d_pi = tuple(self._seeded_odd(t, groups, L, 3, j) for j in range(self.odd_count))
        return d_x, d_xi, d_th, d_pi

    def seeded_gradient(self, t: float, x, xi, theta, pi) -> _Deriv:
        """Always-seeded gradient (bypasses closed-form partials)."""
        saved, self.partials = self.partials, None
        try:
            return self.gradient(t, x, xi, theta, pi)
        finally:
            self.partials = saved


def _hamilton_field(h: SuperHamiltonian, t: float, s: FlowState) -> _Deriv:
    """Canonical vector field: (H_xi, -H_x, -H_pi, -H_theta)."""
    d_x, d_xi, d_th, d_pi = h.gradient(t, s.x, s.xi, s.theta, s.pi)
    return (d_xi,
            tuple(-v for v in d_x),
            tuple(-v for v in d_pi),
            tuple(-v for v in d_th))


def _shift_state(s: FlowState, d: _Deriv, h: float, t: float) -> FlowState:
    return FlowState(
        t=t,
        x=tuple(a + h * b for a, b in zip(s.x, d[0])),
        xi=tuple(a + h * b for a, b in zip(s.xi, d[1])),
        theta=tuple(a + h * b for a, b in zip(s.theta, d[2])),
        pi=tuple(a + h * b for a, b in zip(s.pi, d[3])),
    )


def _rk4_next(s: FlowState, k1: _Deriv, k2: _Deriv, k3: _Deriv, k4: _Deriv,
              h: float, t_next: float) -> FlowState:
    def comb(a, b1, b2, b3, b4):
        return a + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)

    return FlowState(
        t=t_next,
        x=tuple(comb(*z) for z in zip(s.x, k1[0], k2[0], k3[0], k4[0])),
        xi=tuple(comb(*z) for z in zip(s.xi, k1[1], k2[1], k3[1], k4[1])),
        theta=tuple(comb(*z) for z in zip(s.theta, k1[2], k2[2], k3[2], k4[2])),
        pi=tuple(comb(*z) for z in zip(s.pi, k1[3], k2[3], k3[3], k4[3])),
    )


def super_hamilton_flow(hamiltonian: SuperHamiltonian, initial: FlowState,
                        t_grid: Sequence[float]) -> List[FlowState]:
    """Classic fourth-order Runge-Kutta over the full supernumber state.

    ``t_grid`` fixes both the output times and the step schedule; it must
    start at the initial time and increase strictly.  Degree bookkeeping
    needs no special handling: the graded arithmetic keeps lower-degree
    components independent of higher-degree initial data automatically.
    """
    if hamiltonian.even_count != initial.even_count or \
            hamiltonian.odd_count != initial.odd_count:
        raise GrassmannError("Hamiltonian and state dimensions disagree")
    grid = [float(v) for v in t_grid]
    if not grid:
        raise GrassmannError("t_grid must contain at least the initial time")
    if abs(grid[0] - initial.t) > 1e-12:
        raise GrassmannError("t_grid must start at the initial time")
    hamiltonian.value_at(initial)  # parity / wellformedness guard
    out = [initial]
    cur = initial
    for t_next in grid[1:]:
        h = t_next - cur.t
        if not (h > 0) or not math.isfinite(h):
            raise GrassmannError("t_grid must increase strictly")
        k1 = _hamilton_field(hamiltonian, cur.t, cur)
        mid1 = _shift_state(cur, k1, h / 2.0, cur.t + h / 2.0)
        k2 = _hamilton_field(hamiltonian, mid1.t, mid1)
        mid2 = _shift_state(cur, k2, h / 2.0, cur.t + h / 2.0)
        k3 = _hamilton_field(hamiltonian, mid2.t, mid2)
        end = _shift_state(cur, k3, h, cur.t + h)
        k4 = _hamilton_field(hamiltonian, end.t, end)
        cur = _rk4_next(cur, k1, k2, k3, k4, h, t_next)
        out.append(cur)
    return out


# ---------------------------------------------------------------------------
# concrete Hamiltonian builders
# ---------------------------------------------------------------------------

def pauli_odd_symbols(theta: Sequence[Supernumber], pi: Sequence[Supernumber],
                      kernel_scale: complex) -> Tuple[Supernumber, Supernumber, Supernumber]:
    """Even quadratic symbols realizing the three spin matrices.

    s1 = th1 th2 + k^-2 pi1 pi2, s2 = i(th1 th2 - k^-2 pi1 pi2),
    s3 = -i k^-1 (th1 pi1 + th2 pi2).
    """
    th = _coerce_tuple(theta, 2, "theta")
    pp = _coerce_tuple(pi, 2, "pi")
    L = _common_L(th, pp)
    th, pp = _embed_all(th, L), _embed_all(pp, L)
    kk = complex(kernel_scale)
    if kk == 0:
        raise GrassmannError("kernel_scale must be nonzero")
    tt = th[0] * th[1]
    qq = pp[0] * pp[1]
    pair = th[0] * pp[0] + th[1] * pp[1]
    s1 = tt + (1.0 / (kk * kk)) * qq
    s2 = 1j * (tt - (1.0 / (kk * kk)) * qq)
    s3 = (-1j / kk) * pair
    return s1, s2, s3


def free_weyl_hamiltonian(params: WeylSymbolParams) -> SuperHamiltonian:
    """Complete even symbol of the free spin-transport generator.

    c (xi1 + i xi2) th1 th2 + c k^-2 (xi1 - i xi2) pi1 pi2
    - i c k^-1 xi3 (th1 pi1 + th2 pi2); no constant term.
    """
    c = params.speed
    kk = complex(params.kernel_scale)

    def fn(t, x, xi, theta, pi):
        s1, s2, s3 = pauli_odd_symbols(theta, pi, kk)
        return c * (xi[0] * s1 + xi[1] * s2 + xi[2] * s3)

    def partials(t, x, xi, theta, pi):
        L = _common_L(x, xi, theta, pi)
        s1, s2, s3 = pauli_odd_symbols(theta, pi, kk)
        zr = zero(L)
        zeta = xi[0] + 1j * xi[1]
        zeta_m = xi[0] - 1j * xi[1]
        d_x = (zr, zr, zr)
        d_xi = (c * s1.embed(L), c * s2.embed(L), c * s3.embed(L))
        d_th = (
            c * zeta * theta[1] - (1j * c / kk) * xi[2] * pi[0],
            -c * zeta * theta[0] - (1j * c / kk) * xi[2] * pi[1],
        )
        d_pi = (
            (c / (kk * kk)) * zeta_m * pi[1] + (1j * c / kk) * xi[2] * theta[0],
            -(c / (kk * kk)) * zeta_m * pi[0] + (1j * c / kk) * xi[2] * theta[1],
        )
        return d_x, d_xi, d_th, d_pi

    return SuperHamiltonian(fn, 3, 2, partials=partials)


def susy_oscillator_hamiltonian(omega: float, kernel_scale: complex = 1.0
                                ) -> SuperHamiltonian:
    """One even and one odd pair: -xi^2/2 - omega^2 x^2/2 - k^-1 omega th pi."""
    w = float(omega)
    kk = complex(kernel_scale)
    if kk == 0:
        raise GrassmannError("kernel_scale must be nonzero")

    def fn(t, x, xi, theta, pi):
        return (-0.5) * xi[0] * xi[0] - 0.5 * w * w * x[0] * x[0] \
            - (w / kk) * theta[0] * pi[0]

    def partials(t, x, xi, theta, pi):
        return ((-(w * w) * x[0],), (-xi[0],),
                (-(w / kk) * pi[0],), ((w / kk) * theta[0],))

    return SuperHamiltonian(fn, 1, 1, partials=partials)


def em_weyl_hamiltonian(params: WeylSymbolParams, charge: float,
                        scalar_potential: Callable | None = None,
                        vector_potential: Callable | None = None,
                        scalar_potential_grad: Callable | None = None,
                        vector_potential_jacobian: Callable | None = None
                        ) -> SuperHamiltonian:
    """Spin-transport symbol minimally coupled to an external field.

    sum_j c s_j(theta,pi) (xi_j - (e/c) A_j(t,x)) + e A0(t,x).  Potentials
    are callables of (t, x-triple of supernumbers); when their derivative
    callables (gradient of A0; Jacobian dA_k/dx_j as jac(t,x)[k][j]) are
    omitted, slot derivatives fall back to exact nilpotent seeding.
    """
    c = params.speed
    kk = complex(params.kernel_scale)
    e = float(charge)

    def a0(t, x):
        return _as_super(scalar_potential(t, x)) if scalar_potential else scalar(0, 0.0)

    def avec(t, x):
        if vector_potential is None:
            return (scalar(0, 0.0),) * 3
        return tuple(_as_super(v) for v in vector_potential(t, x))

    def fn(t, x, xi, theta, pi):
        s = pauli_odd_symbols(theta, pi, kk)
        av = avec(t, x)
        acc = e * a0(t, x)
        for j in range(3):
            acc = acc + c * s[j] * (xi[j] - (e / c) * av[j])
        return acc

    have_grads = (
        (scalar_potential is None or scalar_potential_grad is not None)
        and (vector_potential is None or vector_potential_jacobian is not None)
    )

    def partials(t, x, xi, theta, pi):
        L = _common_L(x, xi, theta, pi)
        s = pauli_odd_symbols(theta, pi, kk)
        s = tuple(v.embed(L) for v in s)
        av = tuple(v.embed(L) for v in avec(t, x))
        eta = tuple(xi[j] - (e / c) * av[j] for j in range(3))
        zeta = eta[0] + 1j * eta[1]
        zeta_m = eta[0] - 1j * eta[1]
        if scalar_potential_grad is not None:
            grad0 = tuple(_as_super(v).embed(L) for v in scalar_potential_grad(t, x))
        else:
            grad0 = (zero(L),) * 3
        if vector_potential_jacobian is not None:
            jac = vector_potential_jacobian(t, x)
            jac = tuple(tuple(_as_super(v).embed(L) for v in row) for row in jac)
        else:
            jac = ((zero(L),) * 3,) * 3
        d_x = tuple(
            e * grad0[j] - e * sum((s[k] * jac[k][j] for k in range(3)), zero(L))
            for j in range(3)
        )
        d_xi = tuple(c * s[j] for j in range(3))
        d_th = (
            c * zeta * theta[1] - (1j * c / kk) * eta[2] * pi[0],
            -c * zeta * theta[0] - (1j * c / kk) * eta[2] * pi[1],
        )
        d_pi = (
            (c / (kk * kk)) * zeta_m * pi[1] + (1j * c / kk) * eta[2] * theta[0],
            -(c / (kk * kk)) * zeta_m * pi[0] + (1j * c / kk) * eta[2] * theta[1],
        )
        return d_x, d_xi, d_th, d_pi

    return SuperHamiltonian(fn, 3, 2, partials=partials if have_grads else None)


# ---------------------------------------------------------------------------
# degenerate model equation: v_tt = t^2 v_qq + (4k+1) v_q
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QiSolution:
    """Solution values on a grid plus the derivative-series coefficients."""

    values: np.ndarray
    coefficients: Tuple[float, ...]


@dataclass(frozen=True)
class QiPhaseComponents:
    """Expansion coefficients of the generating action of the model flow.

    theta_top multiplies th1 th2, pairing multiplies each th_a pi_a,
    momentum_top multiplies pi1 pi2, quartic multiplies the degree-4 term.
    """

    theta_top: complex
    pairing: complex
    momentum_top: complex
    quartic: complex


def qi_coefficients(k: int) -> Tuple[float, ...]:
    """Derivative-series coefficients 2^{2l} k! / ((2l)! (k-l)!), l = 0..k."""
    k = int(k)
    if k < 0:
        raise GrassmannError("k must be a nonnegative integer")
    return tuple(
        (4.0 ** el) * math.factorial(k) / (math.factorial(2 * el) * math.factorial(k - el))
        for el in range(k + 1)
    )


def qi_solve(k: int, phi: AnalyticSpec, t: float, q_grid) -> QiSolution:
    """Finite derivative-series solution of the degenerate model equation.

    v(t,q) = sum_l coeff_l t^{2l} phi^{(l)}(q + t^2/2) with the coefficient
    table from ``qi_coefficients``; k = 0 collapses to phi(q + t^2/2).
    """
    coeffs = qi_coefficients(k)
    tt = float(t)
    shift = tt * tt / 2.0
    qs = np.asarray(q_grid, dtype=float)
    vals = np.zeros(qs.shape, dtype=complex)
    for el, c_el in enumerate(coeffs):
        weight = c_el * tt ** (2 * el)
        if weight == 0.0 and el > 0:
            continue
        vals += weight * np.array(
            [phi.derivative(el, complex(q + shift)) for q in qs.ravel()]
        ).reshape(qs.shape)
    return QiSolution(values=vals, coefficients=coeffs)


def qi_characteristic_coefficients(k: int, xi: complex) -> Tuple[complex, ...]:
    """Ascending t-coefficients of the polynomial whose log-derivative
    solves the model's quadratically nonlinear rate equation.

    Degree 2k; odd slots vanish; slot 2l holds 4^l k!/((2l)!(k-l)!) (i xi)^l.
    """
    k = int(k)
    if k < 0:
        raise GrassmannError("k must be a nonnegative integer")
    base = qi_coefficients(k)
    out = [0j] * (2 * k + 1)
    for el, c_el in enumerate(base):
        out[2 * el] = c_el * (1j * complex(xi)) ** el
    return tuple(out)


def _poly_eval(coeffs: Sequence[complex], t: complex) -> complex:
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def _poly_derivative(coeffs: Sequence[complex]) -> Tuple[complex, ...]:
    return tuple(j * coeffs[j] for j in range(1, len(coeffs)))


def qi_phase_components(k: int, t: float, xi: complex,
                        quad_nodes: int = 64) -> QiPhaseComponents:
    """Closed-form expansion coefficients of the model's generating action.

    theta_top = -i poly'/poly, pairing = e^{-i t^2 xi/2}/poly,
    momentum_top = -i * integral of pairing^2 from 0 to t, quartic = 0.
    """
    coeffs = qi_characteristic_coefficients(k, xi)
    dcoeffs = _poly_derivative(coeffs)
    tt = float(t)
    z = complex(xi)
    p_val = _poly_eval(coeffs, tt)
    if p_val == 0:
        raise GrassmannDomainError("caustic: characteristic polynomial vanishes")
    theta_top = -1j * _poly_eval(dcoeffs, tt) / p_val
    pairing = cmath.exp(-0.5j * tt * tt * z) / p_val

    nodes, weights = np.polynomial.legendre.leggauss(int(quad_nodes))
    half = 0.5 * tt
    acc = 0j
    for u, w in zip(nodes, weights):
        s = half * (u + 1.0)
        ps = _poly_eval(coeffs, s)
        acc += w * cmath.exp(-1j * s * s * z) / (ps * ps)
    momentum_top = -1j * half * acc
    return QiPhaseComponents(theta_top=theta_top, pairing=pairing,
                             momentum_top=momentum_top, quartic=0j)


def qi_finite_difference(k: int, phi: AnalyticSpec, t_final: float,
                         q_min: float = -8.0, q_max: float = 8.0,
                         nq: int = 1000, nt: int = 2000
                         ) -> Tuple[np.ndarray, np.ndarray]:
    """Explicit leapfrog integration of v_tt = t^2 v_qq + (4k+1) v_q.

    Initial data v = phi on the grid, v_t = 0; Dirichlet edges.  Returns
    (q_grid, values at t_final).  Independent of the derivative series, so
    it serves as a cross-check oracle for ``qi_solve``.
    """
    k = int(k)
    if k < 0:
        raise GrassmannError("k must be a nonnegative integer")
    if not (t_final > 0):
        raise GrassmannError("t_final must be positive")
    q = np.linspace(float(q_min), float(q_max), int(nq))
    dx = q[1] - q[0]
    dt = float(t_final) / int(nt)
    drift = 4.0 * k + 1.0

    def rhs(v: np.ndarray, t: float) -> np.ndarray:
        out = np.zeros_like(v)
        interior = slice(1, -1)
        d2 = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (dx * dx)
        d1 = (v[2:] - v[:-2]) / (2.0 * dx)
        out[interior] = (t * t) * d2 + drift * d1
        return out

    v_prev = np.array([phi.derivative(0, complex(z)) for z in q], dtype=complex)
    # second-order start consistent with v_t(0) = 0
    v_cur = v_prev + 0.5 * dt * dt * rhs(v_prev, 0.0)
    t = dt
    for _ in range(1, int(nt)):
        v_next = 2.0 * v_cur - v_prev + dt * dt * rhs(v_cur, t)
        v_prev, v_cur = v_cur, v_next
        t += dt
    return q, v_cur


def gaussian_profile(width: float = 1.0, center: float = 0.0) -> AnalyticSpec:
    """Analytic bell profile exp(-(z-center)^2/(2 width^2)) with derivatives.

    The k-th derivative uses the standard three-term recurrence for the
    associated orthogonal polynomials, so any order is available exactly.
    """
    w = float(width)
    c0 = float(center)
    if not (w > 0):
        raise GrassmannError("width must be positive")

    def deriv(k: int, z: complex) -> complex:
        u = (complex(z) - c0) / w
        base = cmath.exp(-0.5 * u * u)
        if k == 0:
            return base
        hs = [1.0 + 0j, u]
        for n in range(1, k):
            hs.append(u * hs[n] - n * hs[n - 1])
        return ((-1.0 / w) ** k) * hs[k] * base

    return AnalyticSpec.custom(deriv)
