"""Balakrishnan machinery for complex powers of a positive hypoelliptic symbol:
gamma_k(z), half-line quadrature with the lambda^(z-1) weight, the power
coefficients p_{z,j}(w), and the paper-level integral identities as oracles."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInput, InvalidParameter, UnsupportedSymbol
from .fsring import CutoffConfig, FormalSeries, canonical, cutoff_chi, sharp, sharp_power
from .parametrix import resolvent_parametrix
from .symalg import PhasePoint, Registry, SymExpr

# ---------------------------------------------------------------------------
# complex gamma (Lanczos, g = 607/128 with 15 coefficients; reflection for
# Re z < 1/2). Relative accuracy ~ 1e-13 for moderate |z|.
# ---------------------------------------------------------------------------

_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)


def gamma_complex(z: complex) -> complex:
    """Gamma(z) for complex z via a 15-term Lanczos approximation."""
    z = complex(z)
    if z.real < 0.5:
        # reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        s = cmath.sin(cmath.pi * z)
        if s == 0:
            raise InvalidParameter(f"gamma pole at z = {z}")
        return cmath.pi / (s * gamma_complex(1.0 - z))
    zz = z - 1.0
    acc = _LANCZOS_C[0]
    for k in range(1, len(_LANCZOS_C)):
        acc += _LANCZOS_C[k] / (zz + k)
    t = zz + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (zz + 0.5) * cmath.exp(-t) * acc


def gamma_k(z: complex, k: int) -> complex:
    """gamma_k(z) = Gamma(k) / (Gamma(z) Gamma(k - z)).

    Requires Re z > 0 and k > Re z, and k - z must not be a non-positive
    integer (pole configuration)."""
    z = complex(z)
    if k < 1:
        raise InvalidParameter("k must be a positive integer")
    if z.real <= 0:
        raise InvalidParameter("Re z must be positive")
    if not (k > z.real):
        raise InvalidParameter("need k > Re z")
    kz = k - z
    if kz.imag == 0 and kz.real <= 0 and kz.real == int(kz.real):
        raise InvalidParameter("pole configuration: k - z is a non-positive integer")
    return math.factorial(k - 1) / (gamma_complex(z) * gamma_complex(kz))


# ---------------------------------------------------------------------------
# half-line quadrature with the lambda^(z-1) weight
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureScheme:
    """Trapezoid on u = ln(lambda) over [u_min, u_max] with step-halving
    refinements; the integrand's lambda^(z-1) endpoint weight becomes
    exp(z u) under the transform."""

    u_min: float = -40.0
    u_max: float = 40.0
    step: float = 0.05
    refine: int = 2

    def __post_init__(self):
        if not (self.u_min < 0.0 < self.u_max):
            raise InvalidParameter("need u_min < 0 < u_max")
        if self.step <= 0:
            raise InvalidParameter("step must be positive")
        if self.refine < 0:
            raise InvalidParameter("refine must be >= 0")

    def nodes(self, level: int = 0):
        """(u, lambda, weight) arrays at a given refinement level."""
        h = self.step / (2**level)
        n = int(round((self.u_max - self.u_min) / h))
        u = self.u_min + h * np.arange(n + 1)
        w = np.full(n + 1, h)
        w[0] *= 0.5
        w[-1] *= 0.5
        return u, np.exp(u), w


@dataclass
class QuadResult:
    value: complex
    error: float
    warning: bool = False

    def __complex__(self):
        return complex(self.value)


def quad_halfline(f, z: complex, quad: QuadratureScheme | None = None) -> QuadResult:
    """Approximate integral over (0, inf) of lambda^(z-1) f(lambda) d lambda.

    f must accept a numpy array of lambda values and return values
    elementwise (complex ok); it must decay at least like lambda^(-k) with
    k > Re z for the integral to exist (caller's contract).

    Trapezoid on u = ln(lambda) with Richardson extrapolation over the
    step-halving levels, plus first-order endpoint corrections: near 0 the
    integrand is f(0) lambda^(z-1) up to O(lambda), near infinity it is
    matched to a power law with the slope estimated from the last nodes.
    The error estimate is the last extrapolation increment; a non-decaying
    tail sets the warning flag."""
    z = complex(z)
    if z.real <= 0:
        raise InvalidParameter("Re z must be positive")
    quad = quad or QuadratureScheme()
    values = []
    warning = False
    tail_corr = 0.0 + 0.0j
    for level in range(quad.refine + 1):
        u, lam, w = quad.nodes(level)
        fv = np.broadcast_to(np.asarray(f(lam), dtype=complex), lam.shape)
        integrand = np.exp(z * u) * fv
        values.append(complex(np.sum(w * integrand)))
        if level == quad.refine:
            mag = np.abs(integrand)
            head = max(float(np.max(mag)), 1e-300)
            tail = mag[-12:]
            if np.mean(tail[-6:]) > np.mean(tail[:6]) and np.max(tail) > 1e-13 * head:
                warning = True
            # left tail: integral_0^lam0 ~ f(lam0) lam0^z / z
            tail_corr += fv[0] * np.exp(z * u[0]) / z
            # right tail: match f ~ f(lamN) (lam/lamN)^s, s from the last step
            if abs(fv[-1]) > 1e-320 and abs(fv[-2]) > 1e-320:
                s = (np.log(abs(fv[-1])) - np.log(abs(fv[-2]))) / (u[-1] - u[-2])
                if z.real + s < -1e-6:
                    tail_corr += -fv[-1] * np.exp(z * u[-1]) / (z + s)
                elif np.max(tail) > 1e-13 * head:
                    warning = True
    # Romberg table over the halving levels (h^2 expansion)
    table = [values]
    for m in range(1, len(values)):
        prev = table[-1]
        fac = 4.0**m
        table.append([(fac * prev[i + 1] - prev[i]) / (fac - 1.0) for i in range(len(prev) - 1)])
    value = complex(table[-1][-1] + tail_corr)
    if len(values) > 1:
        err = float(abs(table[-1][-1] - table[-2][-1]))
    else:
        err = float("nan")
    return QuadResult(value, err, warning)


# ---------------------------------------------------------------------------
# positivization
# ---------------------------------------------------------------------------


def positivize(a: SymExpr, grid) -> tuple:
    """Shift a by the smallest c in {0, 1, 2, 4, ...} making min Re a + c > 0
    on the grid.  A constant shift stands in for the compactly supported
    positivizer; the sector condition Re a > -B |Im a| is required on the
    far half of the grid."""
    reg = a.reg
    envs = [w.env(reg) for w in grid]
    vals = [complex(a.evaluate_grid(env)) for env in envs]
    brackets = [w.bracket() for w in grid]
    far = sorted(brackets)[len(brackets) // 2]
    for w, v in zip(grid, vals):
        if w.bracket() >= far and v.real < 0 and abs(v.imag) < 1e-300:
            raise UnsupportedSymbol(
                "sector condition Re a > -B |Im a| fails at large |w|"
            )
    min_re = min(v.real for v in vals)
    if min_re > 0:
        return a, 0.0
    shift = 1
    while min_re + shift <= 0:
        shift *= 2
    return a + reg.const(shift), float(shift)


def sector_constant(a0: SymExpr, grid) -> float:
    """Smallest B >= 0 with Re a0 > -B |Im a0| on the grid (inf if violated
    at a real-valued point)."""
    reg = a0.reg
    b = 0.0
    for w in grid:
        v = complex(a0.evaluate_grid(w.env(reg)))
        if v.real >= 0:
            continue
        if abs(v.imag) == 0.0:
            return float("inf")
        b = max(b, -v.real / abs(v.imag))
    return b


# ---------------------------------------------------------------------------
# the power coefficients p_{z,j}
# ---------------------------------------------------------------------------


class PowerEvaluator:
    """Precomputed resolvent machinery for one (a0, z, k):

    the series g_j(lambda, w) = (a0^{#k} # (sum_j q_j^(lambda))^{#k})_j as
    exact expressions in (w, lambda), plus the quadrature scheme that turns
    them into the Balakrishnan coefficients
    p_{z,j}(w) = gamma_k(z) * integral lambda^(z-1) g_j(lambda, w) d lambda.
    """

    def __init__(
        self,
        a0: SymExpr,
        z: complex,
        order: int,
        k: int | None = None,
        quad: QuadratureScheme | None = None,
        lam: str = "lam",
    ):
        z = complex(z)
        if z.real <= 0:
            raise InvalidParameter("Re z must be positive")
        k = k if k is not None else int(math.floor(z.real)) + 1
        if k < math.floor(z.real) + 1:
            raise InvalidParameter("need k >= [Re z] + 1")
        self.a0 = a0
        self.z = z
        self.k = k
        self.order = order
        self.quad = quad or QuadratureScheme()
        self.lam = lam
        self.gamma = gamma_k(z, k)
        reg = a0.reg
        q_series = resolvent_parametrix(a0, order, lam=lam)
        left = sharp_power(canonical(a0, order), k, order)
        right = sharp_power(q_series, k, order)
        self.series = sharp(left, right, order).terms
        # structural sanity: order-0 term is (a0 / (a0 + lambda))^k
        bp = a0.single_base_power()
        qp = q_series[0].single_base_power()
        expect = {
            (reg.zero_mono, tuple(sorted(((bp[1], Fraction(k)), (qp[1], Fraction(-k))))), False): None
        }
        got = self.series[0]
        if set(got.terms) != set(expect):
            raise InvalidInput("order-0 resolvent term is not (a0/(a0+lam))^k")

    def g_term(self, j: int) -> SymExpr:
        if not (0 <= j < self.order):
            raise InvalidParameter("term index outside precomputed order")
        return self.series[j]

    def sharp_with(self, B: FormalSeries, side: str = "right") -> "PowerEvaluator":
        """The coefficient series of (sum_j p_{z,j}) # B (or B # ... for
        side='left'), with B an exact symbol series: the sharp product is
        formed symbolically under the lambda integral, so the resulting
        evaluator samples gamma_k(z) * integral lambda^(z-1) (g # B)_j."""
        clone = object.__new__(PowerEvaluator)
        clone.a0 = self.a0
        clone.z = self.z
        clone.k = self.k
        clone.order = self.order
        clone.quad = self.quad
        clone.lam = self.lam
        clone.gamma = self.gamma
        g_series = FormalSeries(list(self.series))
        if side == "right":
            clone.series = sharp(g_series, B, self.order).terms
        else:
            clone.series = sharp(B, g_series, self.order).terms
        return clone


def power_coefficient(ev: PowerEvaluator, j: int, w: PhasePoint) -> QuadResult:
    """p_{z,j}(w) by half-line quadrature of the precomputed term."""
    g = ev.g_term(j)
    env = w.env(ev.a0.reg)
    if "lam" in env:
        env = dict(env)
        env.pop(ev.lam, None)

    def f(lam_arr):
        e = dict(env)
        e[ev.lam] = lam_arr
        return g.evaluate_grid(e)

    res = quad_halfline(f, ev.z, ev.quad)
    return QuadResult(ev.gamma * res.value, abs(ev.gamma) * res.error, res.warning)


def power_series_eval(
    ev: PowerEvaluator, N: int, w: PhasePoint, cfg: CutoffConfig
) -> complex:
    """Resummed value sum_{j<N} (1 - chi_{j,R}(w)) p_{z,j}(w)."""
    if N > ev.order:
        raise InvalidParameter("N exceeds the precomputed order")
    total = 0.0 + 0.0j
    for j in range(N):
        pj = power_coefficient(ev, j, w)
        total += (1.0 - cutoff_chi(j, cfg, w)) * pj.value
    return complex(total)


def power_series_eval_grid(ev: PowerEvaluator, N: int, env: dict, cfg: CutoffConfig):
    """Vectorised resummed evaluation over coordinate arrays.

    Same trapezoid nodes as power_coefficient; the lambda integral is
    accumulated node by node with the base reciprocal powers shared across
    terms, which makes symbol evaluation on quantization grids feasible."""
    reg = ev.a0.reg
    if N > ev.order:
        raise InvalidParameter("N exceeds the precomputed order")
    u, lam_nodes, wq = ev.quad.nodes(ev.quad.refine)
    lam_w = wq * np.exp(ev.z * u)

    # decompose every g_j term as mono(w) * a0^p * alam^q * lam^s
    bp_a0 = ev.a0.single_base_power()[1]
    name_lam = None
    lam_idx = reg.var_index(ev.lam)
    decomp = []  # per j: list of (coeff, mono_no_lam, p_a0, q_alam, s_lam)
    for j in range(N):
        rows = []
        for (mono, powers, expf), c in ev.g_term(j).terms.items():
            if expf:
                raise UnsupportedSymbol("unexpected exponential atom in power series")
            p_a0 = Fraction(0)
            q_alam = Fraction(0)
            for nm, r in powers:
                if nm == bp_a0:
                    p_a0 = r
                else:
                    if name_lam is None:
                        name_lam = nm
                    if nm != name_lam:
                        raise UnsupportedSymbol("unexpected base in resolvent series")
                    q_alam = r
            rows.append((complex(c), mono, p_a0, q_alam, mono[lam_idx]))
        decomp.append(rows)

    # w-dependent factors
    a0_val = _base_value(reg, bp_a0, env)
    mono_cache: dict = {}

    def mono_val(mono):
        key = mono[: 2 * reg.d]  # lambda and t exponents handled separately
        v = mono_cache.get(key)
        if v is None:
            v = 1.0
            for i, e in enumerate(key):
                if e:
                    v = v * np.asarray(env[reg.names[i]], dtype=float) ** e
            mono_cache[key] = v
        return v

    # distinct (q) exponents needed per lambda node
    q_set = sorted(
        {int(q) for rows in decomp for (_, _, _, q, _) in rows if q.denominator == 1}
    )
    if any(q.denominator != 1 for rows in decomp for (_, _, _, q, _) in rows):
        raise UnsupportedSymbol("resolvent exponents must be integers")

    # accumulate F_{q,s} = sum_nodes lam_w * lam^s * (a0 + lam)^q
    fq: dict = {}
    needed = sorted({(int(q), int(s)) for rows in decomp for (_, _, _, q, s) in rows})
    for i in range(lam_nodes.size):
        lam_i = lam_nodes[i]
        alam = a0_val + lam_i
        rec = 1.0 / alam
        pows = {0: 1.0}
        for qv in q_set:
            if qv not in pows:
                p = 1.0
                src = rec if qv < 0 else alam
                for _ in range(abs(qv)):
                    p = p * src
                pows[qv] = p
        for (qv, sv) in needed:
            contrib = lam_w[i] * (lam_i**sv) * pows[qv]
            acc = fq.get((qv, sv))
            fq[(qv, sv)] = contrib if acc is None else acc + contrib

    out = 0.0 + 0.0j
    for j in range(N):
        pj = 0.0 + 0.0j
        for coeff, mono, p_a0, q_alam, s in decomp[j]:
            val = coeff * mono_val(mono) * fq[(int(q_alam), int(s))]
            if p_a0:
                val = val * a0_val ** float(p_a0)
            pj = pj + val
        pj = pj * ev.gamma
        damp = 1.0 - _chi_grid(j, cfg, reg, env)
        out = out + damp * pj
    return out


def _base_value(reg: Registry, name: str, env: dict):
    v = 0.0
    for m, c in reg.base_poly(name).items():
        term = float(c.re)
        for i, e in enumerate(m):
            if e:
                term = term * np.asarray(env[reg.names[i]], dtype=float) ** e
        v = v + term
    return v


def _chi_grid(j: int, cfg: CutoffConfig, reg: Registry, env: dict):
    from .fsring import cutoff_chi_grid

    xs = [env[f"x{i+1}"] for i in range(reg.d)]
    xis = [env[f"xi{i+1}"] for i in range(reg.d)]
    return cutoff_chi_grid(j, cfg, xs, xis)


# ---------------------------------------------------------------------------
# the two-variable integral identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quadrature2D:
    """Tensor trapezoid on (ln lambda, ln mu) for the divided-difference
    identity; coarser than the 1D scheme but with a wide left window since
    the exponents can sit close to 0."""

    u_min: float = -60.0
    u_max: float = 40.0
    step: float = 0.1

    def nodes(self):
        n = int(round((self.u_max - self.u_min) / self.step))
        u = self.u_min + self.step * np.arange(n + 1)
        w = np.full(n + 1, self.step)
        w[0] *= 0.5
        w[-1] *= 0.5
        return u, np.exp(u), w


def two_var_identity_check(
    f,
    fprime,
    z: complex,
    zeta: complex,
    quad2d: Quadrature2D | None = None,
    quad1d: QuadratureScheme | None = None,
) -> tuple:
    """Both sides of the divided-difference identity

    lhs = gamma_1(z) gamma_1(zeta) * 2D integral of
          lambda^(z-1) mu^(zeta-1) (f(lambda) - f(mu)) / (lambda - mu)
    rhs = gamma_2(z + zeta) * integral lambda^(z+zeta-1) f'(lambda)

    for 0 < Re z, Re zeta < 1.  Returned as (lhs, rhs) for comparison."""
    z, zeta = complex(z), complex(zeta)
    if not (0 < z.real < 1 and 0 < zeta.real < 1):
        raise InvalidParameter("need 0 < Re z, Re zeta < 1")
    quad2d = quad2d or Quadrature2D()
    u, lam, w = quad2d.nodes()
    fl = np.asarray(f(lam), dtype=complex)
    # divided difference on the tensor grid; exact diagonal via fprime
    lam_i = lam[:, None]
    lam_j = lam[None, :]
    num = fl[:, None] - fl[None, :]
    den = lam_i - lam_j
    with np.errstate(divide="ignore", invalid="ignore"):
        dd = num / den
    diag = np.asarray(fprime(lam), dtype=complex)
    idx = np.arange(lam.size)
    dd[idx, idx] = diag
    wz = w * np.exp(z * u)
    wzeta = w * np.exp(zeta * u)
    lhs = gamma_k(z, 1) * gamma_k(zeta, 1) * complex(wz @ dd @ wzeta)
    rhs_quad = quad_halfline(fprime, z + zeta, quad1d or QuadratureScheme())
    rhs = gamma_k(z + zeta, 2) * rhs_quad.value
    return lhs, rhs
