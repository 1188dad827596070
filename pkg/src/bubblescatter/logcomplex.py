"""Complex numbers with an unbounded binary exponent.

A value is stored as ``mantissa * 2**exponent`` where the mantissa is a
complex128 array whose larger component lies in [0.5, 1) and the exponent is
an int64 array.  Products and quotients touch only the exponent, so values
such as k**(2n) at k ~ 1e-4, n = 60 stay finite.
"""

from __future__ import annotations

import math

import numpy as np

ZERO_EXP = -(1 << 60)
_LOG10_2 = math.log10(2.0)
_MAX_SHIFT = 2000


def _normalize(m, e):
    m = np.asarray(m, dtype=np.complex128)
    e = np.asarray(e, dtype=np.int64)
    m, e = np.broadcast_arrays(m, e)
    big = np.maximum(np.abs(m.real), np.abs(m.imag))
    _, shift = np.frexp(big)
    shift = shift.astype(np.int64)
    zero = big == 0
    shift = np.where(zero, 0, shift)
    re = np.ldexp(m.real, -shift)
    im = np.ldexp(m.imag, -shift)
    e = np.where(zero, ZERO_EXP, e + shift)
    return re + 1j * im, e


class LogComplex:
    """Array of complex numbers held as mantissa and base-2 exponent.

    Args:
        mantissa: complex mantissa (any shape).
        exponent: integer base-2 exponent, broadcastable against mantissa.
    """

    __slots__ = ("m", "e")
    __array_ufunc__ = None

    def __init__(self, mantissa, exponent=0):
        self.m, self.e = _normalize(mantissa, exponent)

    # construction -----------------------------------------------------
    @classmethod
    def from_complex(cls, z) -> "LogComplex":
        return cls(np.asarray(z, dtype=np.complex128), 0)

    @classmethod
    def from_int(cls, n: int) -> "LogComplex":
        """Exact for integers of any size up to 53 significant bits."""
        n = int(n)
        if n == 0:
            return cls(0.0, 0)
        shift = max(n.bit_length() - 60, 0)
        return cls(float(n >> shift), shift)

    @classmethod
    def from_log10(cls, log10_magnitude, phase=0.0) -> "LogComplex":
        lm = np.asarray(log10_magnitude, dtype=float)
        ph = np.asarray(phase, dtype=float)
        l2 = lm / _LOG10_2
        e = np.floor(l2)
        frac = l2 - e
        m = np.exp2(frac) * np.exp(1j * ph)
        finite = np.isfinite(lm)
        m = np.where(finite, m, 0.0)
        e = np.where(finite, e, 0).astype(np.int64)
        return cls(m, e)

    @classmethod
    def zeros(cls, shape) -> "LogComplex":
        return cls(np.zeros(shape, dtype=np.complex128), 0)

    @classmethod
    def ones(cls, shape) -> "LogComplex":
        return cls(np.ones(shape, dtype=np.complex128), 0)

    @staticmethod
    def coerce(x) -> "LogComplex":
        if isinstance(x, LogComplex):
            return x
        return LogComplex.from_complex(x)

    # views ------------------------------------------------------------
    @property
    def shape(self):
        return self.m.shape

    @property
    def is_zero(self):
        return self.m == 0

    @property
    def log10_magnitude(self):
        with np.errstate(divide="ignore"):
            out = np.log10(np.abs(self.m)) + self.e * _LOG10_2
        return np.where(self.is_zero, -np.inf, out)

    @property
    def log2_magnitude(self):
        with np.errstate(divide="ignore"):
            out = np.log2(np.abs(self.m)) + self.e
        return np.where(self.is_zero, -np.inf, out)

    @property
    def phase(self):
        ph = np.angle(self.m)
        # numpy returns -pi for (-1, -0.0); fold into (-pi, pi]
        return np.where(ph <= -np.pi, np.pi, ph)

    def to_complex(self):
        """Convert to complex128; overflows to inf and underflows to 0."""
        e = np.where(self.is_zero, 0, self.e)
        e = np.clip(e, -1200, 1200).astype(np.int64)
        with np.errstate(over="ignore"):
            re = np.ldexp(self.m.real, e)
            im = np.ldexp(self.m.imag, e)
        out = re + 1j * im
        return out if out.ndim else complex(out)

    def __getitem__(self, idx) -> "LogComplex":
        return LogComplex(self.m[idx], self.e[idx])

    def __len__(self):
        return len(self.m)

    def __repr__(self):
        if self.m.ndim == 0:
            return f"LogComplex(log10|z|={float(self.log10_magnitude):.6g}, arg={float(self.phase):.6g})"
        return f"LogComplex(shape={self.shape})"

    # arithmetic -------------------------------------------------------
    def __mul__(self, other) -> "LogComplex":
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        return LogComplex(self.m * other.m, self.e + other.e)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogComplex":
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        if np.any(other.is_zero):
            raise ZeroDivisionError("LogComplex division by zero")
        return LogComplex(self.m / other.m, self.e - other.e)

    def __rtruediv__(self, other) -> "LogComplex":
        return LogComplex.from_complex(other) / self

    def __neg__(self) -> "LogComplex":
        return LogComplex(-self.m, self.e)

    def __add__(self, other) -> "LogComplex":
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        e1 = np.where(self.is_zero, ZERO_EXP, self.e)
        e2 = np.where(other.is_zero, ZERO_EXP, other.e)
        top = np.maximum(e1, e2)
        s1 = np.clip(e1 - top, -_MAX_SHIFT, 0)
        s2 = np.clip(e2 - top, -_MAX_SHIFT, 0)
        m = (np.ldexp(self.m.real, s1) + 1j * np.ldexp(self.m.imag, s1)
             + np.ldexp(other.m.real, s2) + 1j * np.ldexp(other.m.imag, s2))
        return LogComplex(m, top)

    __radd__ = __add__

    def __sub__(self, other) -> "LogComplex":
        return self + (-LogComplex.coerce(other))

    def __rsub__(self, other) -> "LogComplex":
        return LogComplex.coerce(other) + (-self)

    def __pow__(self, p: int) -> "LogComplex":
        p = int(p)
        if p < 0:
            return 1.0 / (self ** (-p))
        result = LogComplex.ones(self.shape)
        base = self
        while p:
            if p & 1:
                result = result * base
            base = base * base
            p >>= 1
        return result

    def conj(self) -> "LogComplex":
        return LogComplex(np.conj(self.m), self.e)

    def abs(self) -> "LogComplex":
        return LogComplex(np.abs(self.m), self.e)

    def sqrt(self) -> "LogComplex":
        odd = self.e % 2
        return LogComplex(np.sqrt(self.m * np.where(odd, 2.0, 1.0)), (self.e - odd) // 2)

    def sum(self, axis=None) -> "LogComplex":
        """Sum along an axis (all elements when axis is None)."""
        if axis is None:
            flat = LogComplex(self.m.ravel(), self.e.ravel())
            return flat.sum(axis=0)
        e = np.where(self.is_zero, ZERO_EXP, self.e)
        top = np.max(e, axis=axis, keepdims=True)
        s = np.clip(e - top, -_MAX_SHIFT, 0)
        m = np.ldexp(self.m.real, s) + 1j * np.ldexp(self.m.imag, s)
        return LogComplex(np.sum(m, axis=axis), np.squeeze(top, axis=axis))


def lc_stack(items) -> LogComplex:
    """Stack scalar LogComplex values into a 1-D LogComplex array."""
    items = [LogComplex.coerce(v) for v in items]
    return LogComplex(np.stack([v.m for v in items]), np.stack([v.e for v in items]))


def lc_where(cond, a: LogComplex, b: LogComplex) -> LogComplex:
    a, b = LogComplex.coerce(a), LogComplex.coerce(b)
    return LogComplex(np.where(cond, a.m, b.m), np.where(cond, a.e, b.e))
