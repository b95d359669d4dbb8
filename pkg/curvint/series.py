"""
Local coordinates on the curve and truncated Laurent expansions in them.

A `LocalChart` parameterizes a neighbourhood of one point of the compact
curve (a regular point, one disc at a degenerate point, or a puncture)
by ξ in a small disc:

    x = X + ξ^a            (x = ξ^a when the point lies over x = ∞)
    y = Y + ξ^b · w(ξ),    w(0) = η

where (a, b) is the primitive normal of a Newton polygon side and η a
simple root of its side polynomial. The power series w(ξ) solves
F(ξ, w) = ξ^(−m) · P(x, y) = 0 and is computed by Newton iteration with
precision doubling.
"""


__all__ = [
    'LaurentSeries',
    'LocalChart',
    'charts_at',
    'series_inverse',
    'series_mul'
]


import logging
import math
from dataclasses import dataclass

import numpy as np

from curvint import config
from curvint.algebra import _numeric_roots, critical_values
from curvint.core.exceptions import DegenerateInputError, EvaluationError
from curvint.polygon import (
    _orbit_representatives,
    _sides,
    branch_analysis,
    convex_hull,
    side_polynomial
)


logger = logging.getLogger(__name__)


def series_mul(a, b, n):
    """Product of two power series, truncated to `n` terms."""
    return np.convolve(a[:n], b[:n])[:n]


def series_inverse(a, n):
    """
    Reciprocal of a power series with a nonzero constant term,
    truncated to `n` terms.

    Raises
    ------
    core.exceptions.EvaluationError
        If the constant term is zero or a coefficient is not finite.
    """
    a = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a[:n])):
        raise EvaluationError("series has non-finite coefficients")
    if a[0] == 0:
        raise EvaluationError("series has no constant term")
    out = np.zeros(n, dtype=complex)
    out[0] = 1 / a[0]
    for k in range(1, n):
        upper = min(k, len(a) - 1)
        out[k] = -np.dot(a[1:upper + 1], out[k - 1::-1][:upper]) / a[0]
    if not np.all(np.isfinite(out)):
        raise EvaluationError("series reciprocal overflows")
    return out


def _pad(a, n):
    out = np.zeros(n, dtype=complex)
    m = min(n, len(a))
    out[:m] = a[:m]
    return out


@dataclass(frozen=True)
class LaurentSeries:
    """
    A truncated Laurent series Σ_n coeffs[n] · ξ^(valuation + n).

    `coeffs[0]` may be zero only for the zero series.
    """

    valuation: int
    coeffs: np.ndarray

    def coefficient(self, power):
        """Coefficient of ξ^power (0 outside the stored range)."""
        n = power - self.valuation
        if n < 0:
            return 0j
        if n >= len(self.coeffs):
            raise IndexError(f"ξ^{power} is beyond the truncation order")
        return complex(self.coeffs[n])

    @property
    def order(self):
        """Power of ξ of the first omitted term."""
        return self.valuation + len(self.coeffs)


class LocalChart:
    """
    A local coordinate ξ centered at one point of the curve.

    Parameters
    ----------
    P : BivarPoly
        The curve.
    X : complex or None
        x-coordinate of the center, `None` over x = ∞.
    Y : complex
        y-coordinate of the center (0 when y → ∞ there).
    a, b, m : int
        Side normal and its minimum over the support of the shifted
        polynomial.
    eta : complex
        w(0), a simple root of the side polynomial.
    label : str, optional
    kind : {'regular', 'branch', 'puncture'}, optional
    """

    def __init__(self, P, X, Y, a, b, m, eta, label=None, kind='regular'):
        self.P = P.numeric()
        self.X = None if X is None else complex(X)
        self.Y = complex(Y)
        self.a = int(a)
        self.b = int(b)
        self.m = int(m)
        self.eta = complex(eta)
        self.label = label
        self.kind = kind
        self.base = self.P.shift(0 if X is None else X, Y)
        self._w = np.array([self.eta])
        self._check_simple()

    def __repr__(self):
        where = '∞' if self.X is None else f"{self.X:.6g}"
        return (f"LocalChart({self.label or self.kind}, x={where}, "
                f"a={self.a}, b={self.b}, eta={self.eta:.6g})")

    @classmethod
    def at_puncture(cls, P, puncture):
        """Chart in the canonical coordinate of a `PunctureInfo`."""
        if not puncture.simple:
            raise DegenerateInputError(
                f"puncture {puncture.label} has no canonical coordinate "
                "(multiple side-polynomial root)"
            )
        X = None if puncture.at_infinity else puncture.X
        return cls(P, X, puncture.Y, puncture.a, puncture.b, puncture.m,
                   puncture.eta, label=puncture.label, kind='puncture')

    @classmethod
    def at_point(cls, P, x0, y0, label=None):
        """
        Chart at a finite point of the curve where P_y ≠ 0, with ξ = x − x0.
        Points where P_y vanishes get their charts from `charts_at`.
        """
        Pn = P.numeric()
        py = Pn.partial('y')(x0, y0)
        if abs(py) <= math.sqrt(config.root_tol) * max(1.0, Pn.scale()):
            charts = charts_at(P, (x0, y0))
            if len(charts) != 1:
                raise DegenerateInputError(
                    f"({complex(x0):.6g}, {complex(y0):.6g}) is singular; "
                    "pick one of its discs with charts_at"
                )
            return charts[0]
        eta = -Pn.partial('x')(x0, y0) / py
        return cls(P, x0, y0, 1, 1, 1, eta, label=label, kind='regular')

    ########################################
    #           LOCAL SOLUTION             #
    ########################################
    def _f_coefficients(self, n):
        """F(ξ, w) = Σ_j f_j(ξ) w^j, each f_j truncated to `n` terms."""
        d = self.base.degy
        f = np.zeros((d + 1, n), dtype=complex)
        cutoff = math.sqrt(config.root_tol) * self.base.scale()
        for (i, j), c in self.base.items():
            e = self.a * i + self.b * j - self.m
            if e < 0 and abs(c) <= cutoff:
                continue
            if e < 0:
                raise DegenerateInputError(
                    f"side ({self.a}, {self.b}) is not extremal at "
                    f"x^{i} y^{j}"
                )
            if e < n:
                f[j, e] += c
        return f

    def _check_simple(self):
        f0 = self._f_coefficients(1)[:, 0]
        value = np.polyval(f0[::-1], self.eta)
        deriv = np.polyval(np.polyder(f0[::-1]), self.eta)
        scale = max(1.0, float(np.max(np.abs(f0))))
        if abs(value) > math.sqrt(config.root_tol) * scale:
            raise DegenerateInputError(
                f"eta={self.eta:.6g} is not a root of the side polynomial"
            )
        if abs(deriv) <= 1e-8 * scale:
            raise DegenerateInputError(
                f"eta={self.eta:.6g} is a multiple root of the side polynomial"
            )

    @staticmethod
    def _compose(f, w, n):
        """Σ_j f_j(ξ)·w(ξ)^j and its w-derivative, truncated to `n` terms."""
        value = np.zeros(n, dtype=complex)
        deriv = np.zeros(n, dtype=complex)
        for j in range(f.shape[0] - 1, -1, -1):
            deriv = series_mul(deriv, w, n) + value
            value = series_mul(value, w, n) + f[j, :n]
        return value, deriv

    def w_series(self, n):
        """The first `n` coefficients of w(ξ)."""
        if len(self._w) >= n:
            return self._w[:n]
        f = self._f_coefficients(n)
        w = _pad(self._w, 1)
        prec = 1
        while prec < n:
            prec = min(2 * prec, n)
            w = _pad(w, prec)
            value, deriv = self._compose(f, w, prec)
            w = w - series_mul(value, series_inverse(deriv, prec), prec)
        self._w = w
        return w

    ########################################
    #        POINTS OF THE CHART           #
    ########################################
    def x_of(self, xi):
        xi = np.asarray(xi, dtype=complex)
        offset = 0 if self.X is None else self.X
        return offset + xi ** self.a

    def y_of(self, xi, terms=32):
        """
        y at the given ξ: the w-series sum followed by Newton polishing
        on P(x, ·).
        """
        xi = np.asarray(xi, dtype=complex)
        w = np.polynomial.polynomial.polyval(xi, self.w_series(terms))
        y = self.Y + xi ** self.b * w
        x = self.x_of(xi)
        Py = self.P.partial('y')
        for _ in range(3):
            with np.errstate(all='ignore'):
                step = self.P(x, y) / Py(x, y)
            ok = np.isfinite(step) & (np.abs(step) < 1e-2 * (1 + np.abs(y)))
            y = np.where(ok, y - np.where(ok, step, 0), y)
        return y

    def point(self, xi):
        """(x, y) at ξ."""
        return self.x_of(xi), self.y_of(xi)

    def radius(self):
        """
        A radius in ξ whose disc maps into a neighbourhood of the center
        free of other critical x-values.
        """
        crit = critical_values(self.P)
        if self.X is None:
            R = 2 * max([1.0] + [abs(c) for c in crit])
            return R ** (1 / self.a)
        others = [abs(c - self.X) for c in crit
                  if abs(c - self.X) > math.sqrt(config.root_tol)]
        r = 0.5 * min(others) if others else 1.0
        return r ** (1 / self.a)

    ########################################
    #          LAURENT EXPANSIONS          #
    ########################################
    def _poly_series(self, Q, n):
        """
        Q(x(ξ), y(ξ)) as ξ^e · (power series of `n` terms), e the
        smallest exponent a·i + b·j over the support of the shifted Q.
        """
        Qs = Q.numeric().shift(0 if self.X is None else self.X, self.Y)
        if Qs.is_zero():
            return 0, np.zeros(n, dtype=complex)
        e = min(self.a * i + self.b * j for i, j in Qs.support)
        w = self.w_series(n)
        powers = [np.eye(1, n, 0, dtype=complex)[0]]
        for _ in range(Qs.degy):
            powers.append(series_mul(powers[-1], w, n))
        out = np.zeros(n, dtype=complex)
        for (i, j), c in Qs.items():
            shift = self.a * i + self.b * j - e
            if shift < n:
                out[shift:] += c * powers[j][:n - shift]
        return e, out

    def laurent(self, num, den, n=16):
        """
        Laurent expansion of num/den in ξ.

        Parameters
        ----------
        num, den : BivarPoly
        n : int, optional
            Number of coefficients to return, starting at the valuation.

        Returns
        -------
        LaurentSeries
        """
        if num.is_zero():
            return LaurentSeries(0, np.zeros(n, dtype=complex))
        # coefficients grow like radius^(-k); compare them at that scale
        rho = self.radius()
        extra = 16
        while True:
            length = n + extra
            e_num, s_num = self._poly_series(num, length)
            e_den, s_den = self._poly_series(den, length)
            scaled = np.abs(s_den) * rho ** np.arange(length)
            scale = float(np.max(scaled))
            nz = np.flatnonzero(scaled > config.root_tol * scale)
            if not nz.size:
                raise EvaluationError(
                    f"denominator vanishes identically on {self!r}"
                )
            strip = int(nz[0])
            if strip < extra // 2:
                break
            if extra > 4 * config.max_pole_order:
                raise EvaluationError(
                    f"cannot expand denominator on {self!r}"
                )
            extra *= 2
        s_den = s_den[strip:]
        length -= strip
        ratio = series_mul(s_num, series_inverse(s_den, length), length)
        valuation = e_num - e_den - strip
        scaled = np.abs(ratio) * rho ** np.arange(length)
        nz = np.flatnonzero(scaled > config.root_tol * float(np.max(scaled)))
        lead = int(nz[0]) if nz.size else 0
        return LaurentSeries(valuation + lead, ratio[lead:lead + n])

    def form_series(self, num, den, n=16):
        """Laurent expansion of the coefficient of dξ in (num/den)·dx."""
        series = self.laurent(num, den, n)
        return LaurentSeries(series.valuation + self.a - 1,
                             self.a * series.coeffs)

    def times(self, num, den, tol=None):
        """
        The pole data t_k = [ξ^(−k−1)] of (num/den)·dx, k ≥ 0.

        Returns
        -------
        dict
            Maps k to t_k for the nonzero t_k (t_0 is the residue).
        """
        tol = config.root_tol if tol is None else tol
        series = self.form_series(num, den, 1)
        if series.valuation >= 0:
            return {}
        order = -series.valuation
        if order - 1 > config.max_pole_order:
            raise EvaluationError(
                f"pole of order {order} at {self!r} exceeds "
                f"max_pole_order={config.max_pole_order}"
            )
        series = self.form_series(num, den, order + 1)
        scale = max(1.0, float(np.max(np.abs(series.coeffs[:order]))))
        out = {}
        for k in range(order):
            t = series.coefficient(-k - 1)
            if abs(t) > tol * scale:
                out[k] = t
        return out

    def pole_degree(self, num, den):
        """Largest k with t_k ≠ 0, or −1 where the form is holomorphic."""
        return max(self.times(num, den), default=-1)

    def fft_coefficients(self, func, n_samples=128, rho=None):
        """
        Laurent coefficients of a function on the punctured disc by
        sampling a circle |ξ| = ρ.

        Parameters
        ----------
        func : callable
            Called as `func(xi, x, y)` with arrays of matching shape.
        n_samples : int, optional
        rho : float, optional
            Circle radius. Defaults to half of `radius()`.

        Returns
        -------
        dict
            Maps each power p with |p| < n_samples/2 to [ξ^p] func.
        """
        rho = 0.5 * self.radius() if rho is None else rho
        xi = rho * np.exp(2j * np.pi * np.arange(n_samples) / n_samples)
        x, y = self.point(xi)
        values = np.asarray(func(xi, x, y), dtype=complex)
        coeffs = np.fft.fft(values) / n_samples
        out = {}
        half = n_samples // 2
        for p in range(-half + 1, half):
            out[p] = complex(coeffs[p % n_samples] / rho ** p)
        return out


def charts_at(P, beta):
    """
    One chart per local disc at a point (x_β, y_β) of the curve.

    Regular points have a single disc. At degenerate points every
    irreducible segment of the bottom-left chain of the shifted polygon
    yields one disc per orbit of side-polynomial roots.
    """
    Pn = P.numeric()
    xb, yb = complex(beta[0]), complex(beta[1])
    if abs(Pn.partial('y')(xb, yb)) > math.sqrt(config.root_tol) * max(1.0, Pn.scale()):
        return [LocalChart.at_point(P, xb, yb)]
    info = branch_analysis(P, beta)
    shifted = info.shifted
    hull = convex_hull(shifted.support)
    charts = []
    for side in _sides(hull, shifted.support):
        if not (side.a > 0 and side.b > 0):
            continue
        coeffs, _ = side_polynomial(shifted, side)
        roots = [r for r in _numeric_roots(coeffs) if abs(r) > 1e-12]
        for eta in _orbit_representatives(roots, side.a):
            kind = 'branch' if side.a > 1 else 'regular'
            charts.append(LocalChart(P, xb, yb, side.a, side.b, side.m, eta,
                                     label=f"disc{len(charts)}", kind=kind))
    logger.debug("%d local discs at (%s, %s)", len(charts), xb, yb)
    return charts
