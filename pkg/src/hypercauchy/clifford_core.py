"""Real Clifford algebra C(V_n) with negative-definite generators.

Generators e_1..e_n satisfy e_i^2 = -1 and e_i e_j = -e_j e_i; e_0 = 1 is
the scalar unit.  Elements are stored densely as 2^n coefficients indexed
by subset bitmask (bit i-1 set  <=>  e_i present in the blade).
"""

from __future__ import annotations

import numpy as np


class ContextMismatchError(ValueError):
    """Operands belong to algebras with different n."""


class SingularInputError(ValueError):
    """Inversion or division by a zero paravector."""


def _reorder_sign(a: int, b: int) -> int:
    # number of transpositions to merge blade a past blade b, mod 2
    a >>= 1
    total = 0
    while a:
        total += bin(a & b).count("1")
        a >>= 1
    return -1 if total & 1 else 1


class AlgebraContext:
    """Multiplication tables for C(V_n), 1 <= n <= 8.

    Tables are dense over the 2^n basis blades: the geometric product of
    blades a, b lands on blade a ^ b with sign ``sign_table[a, b]``.
    """

    def __init__(self, n: int):
        if not 1 <= n <= 8:
            raise ValueError(f"n must be in 1..8, got {n}")
        self.n = n
        self.dim = 1 << n
        d = self.dim

        sign = np.empty((d, d), dtype=np.int8)
        for a in range(d):
            for b in range(d):
                common = a & b
                # each contracted generator contributes e_i^2 = -1
                s = _reorder_sign(a, b)
                if bin(common).count("1") & 1:
                    s = -s
                sign[a, b] = s
        self.sign_table = sign
        self.grade = np.array([bin(a).count("1") for a in range(d)], dtype=np.int64)
        # bar(e_A) = (-1)^(k(k+1)/2) e_A, k = |A|
        self.conj_sign = np.array(
            [(-1) ** ((k * (k + 1) // 2) % 2) for k in self.grade], dtype=np.float64
        )

        # paravector-times-blade tables: row k = 0..n stands for e_k (e_0 = 1)
        pidx = np.empty((n + 1, d), dtype=np.int64)
        psign = np.empty((n + 1, d), dtype=np.float64)
        ridx = np.empty((d, n + 1), dtype=np.int64)
        rsign = np.empty((d, n + 1), dtype=np.float64)
        for k in range(n + 1):
            blade = 0 if k == 0 else (1 << (k - 1))
            for b in range(d):
                pidx[k, b] = blade ^ b
                psign[k, b] = sign[blade, b]
                ridx[b, k] = b ^ blade
                rsign[b, k] = sign[b, blade]
        self.para_idx = pidx
        self.para_sign = psign
        self.para_idx_right = ridx
        self.para_sign_right = rsign

        self._mul_tensor = None

    def mul_tensor(self) -> np.ndarray:
        """Dense product tensor M with (ab)_c = sum_ab M[a,b,c] a_a b_b.

        Only built on demand; kept for n <= 5 where d^3 is small.
        """
        if self._mul_tensor is None:
            if self.n > 5:
                raise ValueError("mul_tensor is limited to n <= 5")
            d = self.dim
            M = np.zeros((d, d, d))
            for a in range(d):
                for b in range(d):
                    M[a, b, a ^ b] = self.sign_table[a, b]
            self._mul_tensor = M
        return self._mul_tensor

    def blade_name(self, a: int) -> str:
        if a == 0:
            return "1"
        return "e" + "".join(str(i + 1) for i in range(self.n) if a >> i & 1)

    def basis_blade(self, a: int) -> "Multivector":
        c = np.zeros(self.dim)
        c[a] = 1.0
        return Multivector(self, c)

    def scalar(self, value: float) -> "Multivector":
        c = np.zeros(self.dim)
        c[0] = float(value)
        return Multivector(self, c)

    def __repr__(self):
        return f"AlgebraContext(n={self.n})"


_CONTEXTS: dict[int, AlgebraContext] = {}


def get_context(n: int) -> AlgebraContext:
    """Shared AlgebraContext instances keyed by n."""
    if n not in _CONTEXTS:
        _CONTEXTS[n] = AlgebraContext(n)
    return _CONTEXTS[n]


class Multivector:
    """Element of C(V_n): dense coefficient vector over the 2^n blades."""

    __slots__ = ("ctx", "coeffs")
    __array_priority__ = 100  # keep numpy from hijacking mv * array

    def __init__(self, ctx: AlgebraContext, coeffs):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape != (ctx.dim,):
            raise ValueError(f"expected {ctx.dim} coefficients, got {coeffs.shape}")
        self.ctx = ctx
        self.coeffs = coeffs

    # -- construction helpers -------------------------------------------------
    @classmethod
    def zero(cls, ctx: AlgebraContext) -> "Multivector":
        return cls(ctx, np.zeros(ctx.dim))

    def copy(self) -> "Multivector":
        return Multivector(self.ctx, self.coeffs.copy())

    # -- ring operations ------------------------------------------------------
    def _check(self, other: "Multivector"):
        if self.ctx.n != other.ctx.n:
            raise ContextMismatchError(
                f"operands from C(V_{self.ctx.n}) and C(V_{other.ctx.n})"
            )

    def __add__(self, other):
        other = _coerce(self.ctx, other)
        self._check(other)
        return Multivector(self.ctx, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(self.ctx, other)
        self._check(other)
        return Multivector(self.ctx, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return _coerce(self.ctx, other) - self

    def __neg__(self):
        return Multivector(self.ctx, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Multivector(self.ctx, self.coeffs * other)
        other = _coerce(self.ctx, other)
        return product(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return Multivector(self.ctx, self.coeffs * other)
        return product(_coerce(self.ctx, other), self)

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return Multivector(self.ctx, self.coeffs / other)
        return NotImplemented

    # -- structure ------------------------------------------------------------
    @property
    def scalar_part(self) -> float:
        return float(self.coeffs[0])

    def grade_select(self, k: int) -> "Multivector":
        out = np.where(self.ctx.grade == k, self.coeffs, 0.0)
        return Multivector(self.ctx, out)

    def is_paravector(self, tol: float = 0.0) -> bool:
        mask = self.ctx.grade > 1
        return bool(np.all(np.abs(self.coeffs[mask]) <= tol))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def conjugate(self) -> "Multivector":
        return Multivector(self.ctx, self.coeffs * self.ctx.conj_sign)

    def __repr__(self):
        terms = []
        for a, c in enumerate(self.coeffs):
            if c != 0.0:
                terms.append(f"{c:+g}*{self.ctx.blade_name(a)}")
        return "Multivector(" + (" ".join(terms) if terms else "0") + ")"


def _coerce(ctx: AlgebraContext, x) -> Multivector:
    if isinstance(x, Multivector):
        return x
    if isinstance(x, Paravector):
        return x.as_multivector(ctx)
    if isinstance(x, (int, float)):
        return ctx.scalar(x)
    raise TypeError(f"cannot interpret {type(x).__name__} as a Multivector")


class Paravector:
    """Element x_0 + x_1 e_1 + ... + x_n e_n, the image of a point of R^{n+1}."""

    __slots__ = ("x0", "vec")

    def __init__(self, x0: float, vec):
        self.x0 = float(x0)
        self.vec = np.asarray(vec, dtype=np.float64)

    @property
    def n(self) -> int:
        return self.vec.shape[0]

    def as_point(self) -> np.ndarray:
        return np.concatenate(([self.x0], self.vec))

    def as_multivector(self, ctx: AlgebraContext | None = None) -> Multivector:
        ctx = ctx or get_context(self.n)
        if ctx.n != self.n:
            raise ContextMismatchError(f"paravector has n={self.n}, context n={ctx.n}")
        c = np.zeros(ctx.dim)
        c[0] = self.x0
        for i in range(self.n):
            c[1 << i] = self.vec[i]
        return Multivector(ctx, c)

    def norm(self) -> float:
        return float(np.sqrt(self.x0 * self.x0 + self.vec @ self.vec))

    def conjugate(self) -> "Paravector":
        return Paravector(self.x0, -self.vec)

    def inverse(self) -> "Paravector":
        n2 = self.x0 * self.x0 + self.vec @ self.vec
        if n2 == 0.0:
            raise SingularInputError("zero paravector has no inverse")
        return Paravector(self.x0 / n2, -self.vec / n2)

    def __neg__(self):
        return Paravector(-self.x0, -self.vec)

    def __repr__(self):
        return f"Paravector(x0={self.x0:g}, vec={self.vec})"


# -- spec operations ----------------------------------------------------------

def product(a: Multivector, b: Multivector) -> Multivector:
    """Geometric product in C(V_n)."""
    a._check(b)
    ctx = a.ctx
    d = ctx.dim
    out = np.zeros(d)
    ca, cb = a.coeffs, b.coeffs
    sign = ctx.sign_table
    for i in range(d):
        cai = ca[i]
        if cai == 0.0:
            continue
        out[i ^ np.arange(d)] += cai * sign[i] * cb
    return Multivector(ctx, out)


def conjugate(a: Multivector) -> Multivector:
    """Bar conjugation: bar(e_A) = (-1)^(k(k+1)/2) e_A, an anti-automorphism."""
    return a.conjugate()


def norm(a) -> float:
    """Euclidean norm of the coefficient vector (agrees with |X| on paravectors)."""
    if isinstance(a, Paravector):
        return a.norm()
    return a.norm()


def paravector_inverse(X: Paravector) -> Paravector:
    """X^{-1} = bar(X) / |X|^2."""
    return X.inverse()


def divide(a: Multivector, b: Paravector, side: str = "left") -> Multivector:
    """Left division b^{-1} a or right division a b^{-1}."""
    if isinstance(b, Multivector):
        if not b.is_paravector():
            raise SingularInputError("divisor must be a paravector")
        b = project_paravector(b)
    binv = b.inverse().as_multivector(a.ctx)
    if side == "left":
        return product(binv, a)
    if side == "right":
        return product(a, binv)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def embed_point(p) -> Paravector:
    """R^{n+1} point (x_0, ..., x_n) -> paravector x_0 + sum x_i e_i."""
    p = np.asarray(p, dtype=np.float64)
    return Paravector(p[0], p[1:])


def project_paravector(X) -> np.ndarray | Paravector:
    """Inverse of embed_point.

    A Paravector maps back to its point; a Multivector is accepted only when
    every coefficient outside grades {0, 1} vanishes.
    """
    if isinstance(X, Paravector):
        return X.as_point()
    if not X.is_paravector():
        bad = [X.ctx.blade_name(a) for a in range(X.ctx.dim)
               if X.ctx.grade[a] > 1 and X.coeffs[a] != 0.0]
        raise ValueError(f"not a paravector: nonzero blades {bad}")
    vec = np.array([X.coeffs[1 << i] for i in range(X.ctx.n)])
    return np.concatenate(([X.coeffs[0]], vec))


# -- batched helpers (coefficient arrays of shape (..., dim)) -----------------

def batch_product(ctx: AlgebraContext, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Geometric product over trailing coefficient axes via the dense tensor."""
    return np.einsum("...a,...b,abc->...c", A, B, ctx.mul_tensor())

def batch_conjugate(ctx: AlgebraContext, A: np.ndarray) -> np.ndarray:
    return A * ctx.conj_sign

def paravectors_as_coeffs(ctx: AlgebraContext, P: np.ndarray) -> np.ndarray:
    """(N, n+1) paravector components -> (N, 2^n) dense coefficients."""
    P = np.atleast_2d(P)
    out = np.zeros((P.shape[0], ctx.dim))
    out[:, 0] = P[:, 0]
    for i in range(ctx.n):
        out[:, 1 << i] = P[:, i + 1]
    return out

def coeffs_as_paravectors(ctx: AlgebraContext, A: np.ndarray) -> np.ndarray:
    """(N, 2^n) coefficients -> (N, n+1) components, grades > 1 ignored."""
    A = np.atleast_2d(A)
    out = np.empty((A.shape[0], ctx.n + 1))
    out[:, 0] = A[:, 0]
    for i in range(ctx.n):
        out[:, i + 1] = A[:, 1 << i]
    return out
