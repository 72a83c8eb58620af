"""Periodic Riccati triples and their spectra.

For integers 4 < k < l <= k^2/4 the cubic ``P(x) = -x^3 + k x^2 - l x + 1``
has three positive roots.  A septuple (alpha, beta, gamma, f, a, b, c) of
p-periodic functions and constants with a + b + c = 0 solves

    alpha' + alpha^2 = f + a,   beta' + beta^2 = f + b,   gamma' + gamma^2 = f + c,

and its spectrum is ``(exp(-int alpha), exp(-int beta), exp(-int gamma))``
over one period.

Reduction used by the solver.  With rho = alpha - beta, sigma = beta - gamma
and w = log(sigma / rho), subtracting the equations pairwise gives
``psi = alpha + beta = (a - b - rho') / rho`` and
``chi = beta + gamma = (b - c - sigma') / sigma``.  Both must produce the same
beta, i.e. ``psi - rho = chi + sigma``.  Substituting sigma = rho e^w, the
rho' terms cancel and the constraint becomes algebraic in rho:

    rho^2 (1 + e^w) - w' rho + (b - c) e^{-w} - (a - b) = 0,

whose positive root is unique when b is the smallest constant.  So once w
is chosen freely, (a, b) determine everything and three scalar unknowns
(a, b, mean of w) are fitted to the three target integrals by Newton's method.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .periodic import TrigSeries

log = logging.getLogger(__name__)

GRID = 256
POSITIVITY_FLOOR = 1e-6
RESIDUAL_TOL = 1e-8


class InvalidKLError(ValueError):
    pass


class NotInUError(ValueError):
    pass


class PositivityError(ValueError):
    pass


class SolverFailure(RuntimeError):
    def __init__(self, message, diagnostics):
        self.diagnostics = diagnostics
        super().__init__(f"{message} ({diagnostics})")


@dataclass(frozen=True)
class KLPair:
    k: int
    l: int

    def __post_init__(self):
        problem = validate_kl(self.k, self.l)
        if problem:
            raise InvalidKLError(problem)


def validate_kl(k, l):
    """None when 4 < k < l <= k^2/4, otherwise a description of the violation."""
    if int(k) != k or int(l) != l:
        return f"k and l must be integers, got ({k}, {l})"
    if not k > 4:
        return f"k = {k} must exceed 4"
    if not k < l:
        return f"l = {l} must exceed k = {k}"
    if not 4 * l <= k * k:
        return f"l = {l} exceeds k^2/4 = {k * k / 4}"
    return None


@dataclass(frozen=True)
class SpectralTriple:
    lam: float
    mu: float
    nu: float

    def __post_init__(self):
        vals = (self.lam, self.mu, self.nu)
        if not all(np.isfinite(vals)) or min(vals) <= 0:
            raise ValueError(f"spectral values must be positive reals, got {vals}")

    def as_array(self):
        return np.array([self.lam, self.mu, self.nu])

    def margins(self):
        """Signed margins of each defining inequality of U (all > 0 inside U)."""
        lam, mu, nu = self.lam, self.mu, self.nu
        return {
            "mu-lam": mu - lam,
            "nu-mu": nu - mu,
            "1-lam": 1.0 - lam,
            "nu-1": nu - 1.0,
            "1-lam*mu": 1.0 - lam * mu,
            "mu*nu-1": mu * nu - 1.0,
            "|lam*nu-1|": abs(lam * nu - 1.0),
        }

    def in_U(self, margin=0.0):
        return all(v > margin for v in self.margins().values())

    @classmethod
    def sorted(cls, values):
        a, b, c = sorted(float(v) for v in values)
        return cls(a, b, c)


def roots_of_P(k, l=None, polish=3):
    """Roots of -x^3 + k x^2 - l x + 1, ascending, as a SpectralTriple.

    Closed-form trigonometric solution of the depressed cubic, polished by a
    few Newton steps.
    """
    kl = k if isinstance(k, KLPair) else KLPair(k, l)
    k, l = float(kl.k), float(kl.l)
    # x = y + k/3 turns x^3 - k x^2 + l x - 1 into y^3 + P y + Q
    P = l - k * k / 3.0
    Q = -2.0 * k**3 / 27.0 + k * l / 3.0 - 1.0
    if not P < 0 or 4 * P**3 + 27 * Q**2 >= 0:
        raise ArithmeticError(f"P has non-real roots for (k, l) = ({kl.k}, {kl.l})")
    r = 2.0 * np.sqrt(-P / 3.0)
    phi = np.arccos(3.0 * Q / (P * r))
    ys = r * np.cos((phi - 2.0 * np.pi * np.arange(3)) / 3.0)
    xs = ys + k / 3.0
    for _ in range(polish):
        xs = xs - (xs**3 - k * xs**2 + l * xs - 1.0) / (3 * xs**2 - 2 * k * xs + l)
    trip = SpectralTriple.sorted(xs)
    if not trip.in_U():
        raise ArithmeticError(f"roots {trip} of P({kl.k}, {kl.l}) are not in U")
    return trip


def _series(values, period, harmonics):
    return TrigSeries.from_samples(values, period, harmonics)


@dataclass
class SolveReport:
    iterations: int
    continuation_steps: int
    spec_residual: float
    history: list = field(default_factory=list)


@dataclass
class Septuple:
    alpha: TrigSeries
    beta: TrigSeries
    gamma: TrigSeries
    f: TrigSeries
    a: float
    b: float
    c: float
    period: float
    report: SolveReport | None = field(default=None, repr=False, compare=False)

    def residuals(self, N=GRID):
        """Max grid residual of each of the three Riccati equations."""
        f = self.f.samples(N)
        out = []
        for y, const in ((self.alpha, self.a), (self.beta, self.b), (self.gamma, self.c)):
            r = y.deriv().samples(N) + y.samples(N) ** 2 - f - const
            out.append(float(np.abs(r).max()))
        return tuple(out)

    def ordering_margin(self, N=GRID):
        al, be, ga = (s.samples(N) for s in (self.alpha, self.beta, self.gamma))
        return float(min((al - be).min(), (be - ga).min()))

    def violations(self, tol=RESIDUAL_TOL, N=GRID):
        out = []
        a, b, c = self.a, self.b, self.c
        if abs(a + b + c) > 1e-12 * max(1.0, abs(a), abs(b), abs(c)):
            out.append(f"a + b + c = {a + b + c:.3g} != 0")
        if len({a, b, c}) < 3:
            out.append("constants a, b, c are not distinct")
        if not b < min(a, c):
            out.append("b is not the smallest constant")
        if not self.ordering_margin(N) > 0:
            out.append("alpha > beta > gamma fails on the grid")
        res = self.residuals(N)
        if max(res) >= tol:
            out.append(f"Riccati residuals {res} exceed {tol:.0e}")
        return out

    def shift(self, t0):
        return Septuple(
            self.alpha.shift(t0), self.beta.shift(t0), self.gamma.shift(t0), self.f.shift(t0),
            self.a, self.b, self.c, self.period,
        )

    def to_dict(self):
        return {
            "alpha": self.alpha.to_dict(),
            "beta": self.beta.to_dict(),
            "gamma": self.gamma.to_dict(),
            "f": self.f.to_dict(),
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "period": self.period,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            TrigSeries.from_dict(d["alpha"]),
            TrigSeries.from_dict(d["beta"]),
            TrigSeries.from_dict(d["gamma"]),
            TrigSeries.from_dict(d["f"]),
            d["a"], d["b"], d["c"], d["period"],
        )


def constant_septuple(target, period):
    """The septuple with constant alpha, beta, gamma realizing ``target``."""
    al, be, ga = -np.log(target.as_array()) / period
    f = (al * al + be * be + ga * ga) / 3.0
    a, b, c = al * al - f, be * be - f, ga * ga - f
    const = [TrigSeries.constant(v, period) for v in (al, be, ga, f)]
    return Septuple(*const, a, b, c, period)


@dataclass(frozen=True)
class SpecResult:
    triple: SpectralTriple
    error_estimate: float


def spec(s, N=GRID):
    """exp(-integral over one period) of alpha, beta, gamma.

    The integrals are evaluated by the trapezoidal rule on N points, which
    is exact for trigonometric polynomials of degree < N; the error estimate
    is the difference from the rule on N/2 points.
    """
    vals, errs = [], []
    for y in (s.alpha, s.beta, s.gamma):
        full = float(np.mean(y.samples(N))) * s.period
        half = float(np.mean(y.samples(N // 2))) * s.period
        vals.append(np.exp(-full))
        errs.append(abs(np.exp(-full) - np.exp(-half)))
    return SpecResult(SpectralTriple(*vals), float(max(errs)))


# ----------------------------------------------------------------------------
# rho / sigma reduction


@dataclass
class RhoSigmaParam:
    rho: TrigSeries
    sigma: TrigSeries
    w: TrigSeries

    def consistency_residual(self, a, b, c, N=GRID):
        """max |(psi - rho) - (chi + sigma)| on the grid (the shared-beta defect)."""
        r, s = self.rho.samples(N), self.sigma.samples(N)
        if min(r.min(), s.min()) <= 0:
            raise PositivityError("rho and sigma must be positive")
        psi = (a - b - self.rho.deriv().samples(N)) / r
        chi = (b - c - self.sigma.deriv().samples(N)) / s
        return float(np.abs((psi - r) - (chi + s)).max())


def rho_from_w(w, wdot, a, b, c):
    """Positive root of rho^2 (1 + e^w) - w' rho + (b - c) e^-w - (a - b) = 0."""
    ew = np.exp(w)
    A = 1.0 + ew
    C = (b - c) / ew - (a - b)
    disc = wdot * wdot - 4.0 * A * C
    if np.any(disc < 0):
        raise PositivityError("no real rho for this w and (a, b, c)")
    return (wdot + np.sqrt(disc)) / (2.0 * A)


def reconstruct_pair(rho, a, b, harmonics=None, N=GRID):
    """(alpha, beta, f) from rho > 0: psi = (a - b - rho') / rho."""
    if not a > b:
        raise ValueError("reconstruction needs a > b")
    r = rho.samples(N)
    if r.min() <= 0:
        raise PositivityError(f"rho touches zero (min {r.min():.3g})")
    psi = (a - b - rho.deriv().samples(N)) / r
    period = rho.period
    alpha = _series(0.5 * (psi + r), period, harmonics)
    beta = _series(0.5 * (psi - r), period, harmonics)
    f = _series(alpha.deriv().samples(N) + alpha.samples(N) ** 2 - a, period, harmonics)
    return alpha, beta, f


def septuple_from_w(w, a, b, harmonics=None, N=GRID):
    """The septuple determined by the free function w and constants (a, b)."""
    c = -a - b
    period = w.period
    rho_v = rho_from_w(w.samples(N), w.deriv().samples(N), a, b, c)
    if rho_v.min() < POSITIVITY_FLOOR:
        raise PositivityError(f"rho dips to {rho_v.min():.3g}")
    sig_v = rho_v * np.exp(w.samples(N))
    rho = _series(rho_v, period, harmonics)
    sigma = _series(sig_v, period, harmonics)
    alpha, beta, f = reconstruct_pair(rho, a, b, harmonics, N)
    gamma = _series(beta.samples(N) - sigma.samples(N), period, harmonics)
    return Septuple(alpha, beta, gamma, f, a, b, c, period), RhoSigmaParam(rho, sigma, w)


def solve_septuple(
    target,
    period,
    amplitude=0.2,
    harmonics=16,
    retries=3,
    steps=5,
    tol=1e-12,
    max_iter=50,
    N=GRID,
):
    """A septuple with prescribed spectrum and nonconstant f.

    The free function is ``w(t) = w0 + amplitude * sin(2 pi t / period)``.
    Starting from the constant septuple (amplitude 0), the amplitude is
    raised in ``steps`` stages; at each stage a damped Newton iteration with
    a finite-difference Jacobian solves for (a, b, w0) so that the logs of
    the spectrum match the target.  Iterates where rho or sigma drops below
    ``POSITIVITY_FLOOR`` are rejected by step halving.  When the final
    septuple fails its invariants (usually the truncated series not
    resolving a large amplitude) the whole solve is repeated with half the
    amplitude, up to ``retries`` times.
    """
    if not isinstance(target, SpectralTriple):
        target = SpectralTriple.sorted(target)
    if not target.in_U():
        raise NotInUError(f"target {target} is not in U (margins {target.margins()})")
    failures = []
    for attempt in range(retries + 1):
        amp = amplitude / 2**attempt
        try:
            return _solve(target, period, amp, harmonics, steps, tol, max_iter, N)
        except SolverFailure as exc:
            log.info("solve at amplitude %.3g failed: %s", amp, exc)
            failures.append({"amplitude": amp, **exc.diagnostics})
    raise SolverFailure("no amplitude produced a valid septuple", {"attempts": failures})


def _solve(target, period, amplitude, harmonics, steps, tol, max_iter, N):
    goal = -np.log(target.as_array()) / period  # mean values of alpha, beta, gamma
    base = constant_septuple(target, period)
    al, be, ga = goal
    x = np.array([base.a, base.b, np.log((be - ga) / (al - be))])

    def w_of(x, amp):
        return TrigSeries(period, x[2], (), (amp,)) if amp else TrigSeries.constant(x[2], period)

    def F(x, amp):
        s, _ = septuple_from_w(w_of(x, amp), x[0], x[1], harmonics, N)
        means = np.array([np.mean(y.samples(N)) for y in (s.alpha, s.beta, s.gamma)])
        return means - goal

    total = 0
    history = []
    for stage in range(1, steps + 1):
        amp = amplitude * stage / steps
        for it in range(max_iter):
            try:
                r = F(x, amp)
            except PositivityError as exc:
                raise SolverFailure("iterate left the positive region", {"stage": stage, "x": x.tolist()}) from exc
            nr = float(np.abs(r).max())
            history.append((amp, nr))
            if nr < tol:
                break
            J = np.empty((3, 3))
            for j in range(3):
                h = 1e-7 * max(1.0, abs(x[j]))
                xp = x.copy()
                xp[j] += h
                xm = x.copy()
                xm[j] -= h
                J[:, j] = (F(xp, amp) - F(xm, amp)) / (2 * h)
            dx = np.linalg.solve(J, -r)
            step = 1.0
            while step > 1e-6:
                xn = x + step * dx
                try:
                    if float(np.abs(F(xn, amp)).max()) < nr:
                        break
                except PositivityError:
                    pass
                step *= 0.5
            else:
                raise SolverFailure(
                    "line search failed",
                    {"stage": stage, "amplitude": amp, "residual": nr, "x": x.tolist()},
                )
            x = xn
            total += 1
        else:
            raise SolverFailure(
                "Newton iteration did not converge",
                {"stage": stage, "amplitude": amp, "residual": nr, "iterations": max_iter},
            )
        log.debug("continuation stage %d amplitude %.3g residual %.2e", stage, amp, nr)

    sept, _ = septuple_from_w(w_of(x, amplitude), x[0], x[1], harmonics, N)
    problems = sept.violations(N=N)
    if np.ptp(sept.f.samples(N)) <= 1e-6:
        problems.append("f is constant")
    if problems:
        raise SolverFailure("solution violates septuple invariants", {"violations": problems})
    got = spec(sept, N).triple.as_array()
    err = float(np.abs(got - target.as_array()).max())
    sept.report = SolveReport(total, steps, err, history)
    return sept
