"""Linear-algebraic solver for the determining equations over a declared ansatz.

Every generator component is expanded over a user-declared time basis times
spatial monomials; substituting the ansatz into the determining equations and
collecting over independent atoms yields a homogeneous linear system with
exact rational entries.  The nullspace, with pure-gauge directions (constant
boundary terms) quotiented out, is the solution basis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import sympy as sp

from .conditions import DeterminingSystem, build_conditions, verify
from .context import Context
from .lagrangian import ApproximateGenerator, GeneratorOrder, PerturbedLagrangian
from .normal import (
    DEFAULT_SEED,
    NonNormalizableError,
    normalize,
)

MAX_UNKNOWNS = 10_000


class SolverError(ValueError):
    pass


class UnsupportedEquationError(SolverError):
    """An equation failed to normalize after denominator clearing."""


@dataclass(frozen=True)
class AnsatzSpec:
    """Search space: span{time_basis} x spatial monomials.

    xi_A uses the time basis alone; eta_A^i uses time basis times spatial
    monomials up to spatial_degree; boundary terms f_A go one degree higher.
    include_inverse_powers adds extra spatial monomials (e.g. 1/x) to the
    eta and f spans.
    """

    time_basis: tuple[sp.Expr, ...]
    spatial_degree: int = 1
    include_inverse_powers: tuple[sp.Expr, ...] = ()

    def __post_init__(self):
        basis = tuple(sp.sympify(b) for b in self.time_basis)
        if not basis:
            raise SolverError("time basis must not be empty")
        if self.spatial_degree < 0:
            raise SolverError("spatial degree must be >= 0")
        object.__setattr__(self, "time_basis", basis)
        object.__setattr__(
            self,
            "include_inverse_powers",
            tuple(sp.sympify(m) for m in self.include_inverse_powers),
        )

    def check_independent(self, t: sp.Symbol, seed: int = DEFAULT_SEED) -> None:
        """Wronskian sampling: the basis must be independent at some point."""
        k = len(self.time_basis)
        if k == 1:
            if all(b == 0 for b in self.time_basis):
                raise SolverError("time basis is identically zero")
            return
        wronskian = sp.Matrix(
            k, k, lambda i, j: sp.diff(self.time_basis[j], t, i)
        ).det()
        fn = sp.lambdify(t, wronskian, modules=["math"])
        rng = np.random.default_rng(seed)
        for tv in rng.uniform(0.3, 2.3, size=8):
            try:
                if abs(fn(tv)) > 1e-9:
                    return
            except (ValueError, ZeroDivisionError, OverflowError):
                continue
        raise SolverError("time basis functions are not independent")


@dataclass(frozen=True)
class Ansatz:
    """Instantiated search space: generator with unknown rational coefficients."""

    L: PerturbedLagrangian
    spec: AnsatzSpec
    unknowns: tuple[sp.Symbol, ...]
    gauge_unknowns: tuple[sp.Symbol, ...]
    xi: tuple[sp.Expr, ...]
    eta: tuple[tuple[sp.Expr, ...], ...]
    f: tuple[sp.Expr, ...]


@dataclass(frozen=True)
class LinearSystem:
    ansatz: Ansatz
    matrix: sp.ImmutableMatrix


@dataclass(frozen=True)
class SolutionBasis:
    generators: tuple[ApproximateGenerator, ...]
    nullspace_dim: int
    gauge_note: str
    # non-gauge coefficient vectors, aligned with generators; used for the
    # span-membership test
    vectors: tuple[tuple[sp.Rational, ...], ...] = ()
    ansatz: Optional[Ansatz] = None


def _spatial_monomials(xs, degree: int, extra=()):
    mons = []
    for total in range(degree + 1):
        for powers in itertools.combinations_with_replacement(range(len(xs)), total):
            mon = sp.Integer(1)
            for idx in powers:
                mon *= xs[idx]
            mons.append(mon)
    mons.extend(extra)
    return mons


def instantiate(L: PerturbedLagrangian, spec: AnsatzSpec) -> Ansatz:
    """Expand xi, eta and f over the ansatz with fresh unknown coefficients.

    Unknowns are ordered deterministically with the gauge unknowns (constant
    terms of the boundary ansatz) first, so the nullspace quotient below is a
    plain column convention.
    """
    ctx = L.ctx
    free = L.ctx.free_param_symbols()
    for b in spec.time_basis:
        bad = b.free_symbols - {ctx.t} - set(free)
        if bad:
            raise SolverError(f"time basis element {b} uses undeclared symbols {bad}")
        if b.free_symbols & set(free):
            raise SolverError(
                f"time basis element {b} uses symbolic parameters; bind them to numbers"
            )
    eta_mons = _spatial_monomials(ctx.xs, spec.spatial_degree, spec.include_inverse_powers)
    f_mons = _spatial_monomials(
        ctx.xs, spec.spatial_degree + 1, spec.include_inverse_powers
    )
    n_orders = L.order + 1
    count = n_orders * len(spec.time_basis) * (
        1 + ctx.dimension * len(eta_mons) + len(f_mons)
    )
    if count > MAX_UNKNOWNS:
        raise SolverError(
            f"ansatz sizing: {count} unknowns exceeds the {MAX_UNKNOWNS} limit "
            f"({n_orders} orders x {len(spec.time_basis)} time basis x "
            f"[1 xi + {ctx.dimension}x{len(eta_mons)} eta + {len(f_mons)} f])"
        )
    spec.check_independent(ctx.t)

    gauge = []
    others = []
    xi_parts, eta_parts, f_parts = [], [], []
    for A in range(n_orders):
        f_expr = sp.Integer(0)
        for m_idx, T in enumerate(spec.time_basis):
            for s_idx, M in enumerate(f_mons):
                c = sp.Symbol(f"_f{A}_{m_idx}_{s_idx}")
                f_expr += c * T * M
                if T * M == 1:
                    gauge.append(c)
                else:
                    others.append(c)
        f_parts.append(f_expr)
        xi_expr = sp.Integer(0)
        for m_idx, T in enumerate(spec.time_basis):
            c = sp.Symbol(f"_x{A}_{m_idx}")
            xi_expr += c * T
            others.append(c)
        xi_parts.append(xi_expr)
        comps = []
        for i in range(ctx.dimension):
            e = sp.Integer(0)
            for m_idx, T in enumerate(spec.time_basis):
                for s_idx, M in enumerate(eta_mons):
                    c = sp.Symbol(f"_e{A}_{i}_{m_idx}_{s_idx}")
                    e += c * T * M
                    others.append(c)
            comps.append(e)
        eta_parts.append(tuple(comps))
    unknowns = tuple(gauge) + tuple(others)
    return Ansatz(
        L, spec, unknowns, tuple(gauge), tuple(xi_parts), tuple(eta_parts),
        tuple(f_parts),
    )


def _substitute_ansatz(system: DeterminingSystem, ansatz: Ansatz):
    """Bind the placeholder functions to the ansatz expressions."""
    from .conditions import _placeholders

    L = ansatz.L
    xi, eta, f = _placeholders(L)
    subs = {}
    for A in range(L.order + 1):
        subs[xi[A]] = ansatz.xi[A]
        subs[f[A]] = ansatz.f[A]
        for i in range(L.ctx.dimension):
            subs[eta[A][i]] = ansatz.eta[A][i]
    params = L.ctx.numeric_bindings()
    out = []
    for eq in system.equations:
        lhs = eq.lhs.subs(subs).doit()
        if params:
            lhs = lhs.subs(params)
        out.append((eq, lhs))
    return out


def reduce(ansatz: Ansatz, system: Optional[DeterminingSystem] = None) -> LinearSystem:
    """Collect each substituted equation over independent atoms.

    The equations are linear and homogeneous in the unknowns; after clearing
    denominators, the coefficient of each unknown is normalized and one row
    is emitted per atom appearing across the equation.
    """
    if system is None:
        system = build_conditions(ansatz.L)
    unknowns = ansatz.unknowns
    rows: list[list[sp.Rational]] = []
    for eq, lhs in _substitute_ansatz(system, ansatz):
        numer, _ = sp.fraction(sp.together(lhs))
        numer = sp.expand(numer)
        forms = {}
        keys = set()
        for col, u in enumerate(unknowns):
            coeff = numer.diff(u)
            if coeff == 0:
                continue
            try:
                form = normalize(coeff, strict=False)
            except NonNormalizableError as exc:
                raise UnsupportedEquationError(
                    f"order {eq.order} {eq.kind} {eq.component}: {exc}"
                ) from exc
            forms[col] = form
            keys.update(k for k, _ in form.terms)
        for key in sorted(keys, key=sp.default_sort_key):
            rows.append([
                forms[col].coefficient(key) if col in forms else sp.Integer(0)
                for col in range(len(unknowns))
            ])
    matrix = sp.ImmutableMatrix(rows) if rows else sp.ImmutableMatrix(0, len(unknowns), [])
    return LinearSystem(ansatz, matrix)


def nullspace(system: LinearSystem, tol: float = 1e-10,
              seed: int = DEFAULT_SEED, check: bool = True) -> SolutionBasis:
    """Exact nullspace, gauge-quotiented and canonically ordered.

    The gauge unknowns come first in the column order, so after row-reducing
    the raw nullspace basis the pure-gauge directions are exactly the rows
    supported on the leading gauge block; they are dropped and the rest have
    zero gauge components.
    """
    ansatz = system.ansatz
    null = system.matrix.nullspace() if system.matrix.rows else [
        sp.Matrix([sp.Integer(i == j) for i in range(len(ansatz.unknowns))])
        for j in range(len(ansatz.unknowns))
    ]
    if not null:
        return SolutionBasis((), 0, "no solutions", (), ansatz)
    basis = sp.Matrix.hstack(*null).T.rref()[0]
    n_gauge = len(ansatz.gauge_unknowns)
    kept = []
    dropped = 0
    for r in range(basis.rows):
        vec = basis.row(r)
        if all(v == 0 for v in vec):
            continue
        if all(v == 0 for v in vec[n_gauge:]):
            dropped += 1
            continue
        kept.append(tuple(sp.Rational(v) for v in vec))

    generators = []
    for idx, vec in enumerate(kept):
        subs = {u: vec[c] for c, u in enumerate(ansatz.unknowns)}
        orders = tuple(
            GeneratorOrder(
                sp.expand(ansatz.xi[A].subs(subs)),
                tuple(sp.expand(e.subs(subs)) for e in ansatz.eta[A]),
            )
            for A in range(ansatz.L.order + 1)
        )
        boundary = tuple(
            sp.expand(ansatz.f[A].subs(subs)) for A in range(ansatz.L.order + 1)
        )
        generators.append(ApproximateGenerator(f"S{idx}", orders, boundary))

    def sort_key(pair):
        gen, vec = pair
        low = gen.lowest_order
        return (low if low is not None else ansatz.L.order + 1, vec)

    paired = sorted(zip(generators, kept), key=sort_key)
    generators = tuple(
        ApproximateGenerator(f"S{i}", g.orders, g.boundary)
        for i, (g, _) in enumerate(paired)
    )
    vectors = tuple(v for _, v in paired)
    if check:
        for g in generators:
            report = verify(ansatz.L, g, tol, seed)
            if not report.passed:
                raise SolverError(
                    f"internal: solver produced {g.name} failing verification"
                )
    note = f"removed {dropped} pure-gauge direction(s) (constant boundary terms)"
    return SolutionBasis(generators, len(kept), note, vectors, ansatz)


def solve(L: PerturbedLagrangian, spec: AnsatzSpec, tol: float = 1e-10,
          seed: int = DEFAULT_SEED) -> SolutionBasis:
    """Full pipeline: instantiate, reduce, nullspace, verify."""
    ansatz = instantiate(L, spec)
    return nullspace(reduce(ansatz), tol, seed)


# -- span membership ------------------------------------------------------


def _coordinates(expr: sp.Expr, basis_fns: Sequence[sp.Expr]):
    """Rational coordinates of expr in span{basis_fns}, or None."""
    expr = sp.expand(sp.sympify(expr))
    try:
        target = normalize(expr, strict=False)
        forms = [normalize(sp.expand(b), strict=False) for b in basis_fns]
    except NonNormalizableError:
        return None
    keys = sorted(
        {k for form in forms for k, _ in form.terms} | {k for k, _ in target.terms},
        key=sp.default_sort_key,
    )
    A = sp.Matrix([[form.coefficient(k) for form in forms] for k in keys])
    y = sp.Matrix([target.coefficient(k) for k in keys])
    cs = sp.symbols(f"_d:{len(basis_fns)}")
    sol = sp.linsolve((A, y), *cs) if basis_fns else (sp.EmptySet if keys else {()})
    if not sol:
        return None
    vec = next(iter(sol))
    vec = [v.subs({c: 0 for c in cs}) for v in vec]
    if not all(v.is_Rational for v in vec):
        return None
    return [sp.Rational(v) for v in vec]


def contains(basis: SolutionBasis, X: ApproximateGenerator,
             ignore_boundary_constant: bool = True) -> bool:
    """Exact span-membership test for a candidate generator.

    The candidate is projected onto the ansatz coordinates (failing that, it
    is not in the span) and membership is decided by an exact rational solve
    against the solution vectors.  Constant shifts of the boundary terms are
    gauge and ignored.
    """
    if basis.ansatz is None:
        raise SolverError("solution basis carries no ansatz")
    ansatz = basis.ansatz
    L = ansatz.L
    X.check_shape(L)
    n_gauge = len(ansatz.gauge_unknowns)
    # Each ansatz component is linear in the unknowns with function-valued
    # coefficients; recover the candidate's coordinates componentwise.
    slots = []
    slots.append(("f", [ansatz.f[A] for A in range(L.order + 1)],
                  [X.boundary[A] if X.boundary is not None else sp.Integer(0)
                   for A in range(L.order + 1)]))
    slots.append(("xi", [ansatz.xi[A] for A in range(L.order + 1)],
                  [X.orders[A].xi for A in range(L.order + 1)]))
    for i in range(L.ctx.dimension):
        slots.append((f"eta{i}", [ansatz.eta[A][i] for A in range(L.order + 1)],
                      [X.orders[A].eta[i] for A in range(L.order + 1)]))

    vec = {u: sp.Integer(0) for u in ansatz.unknowns}
    for _, templates, targets in slots:
        for template, target in zip(templates, targets):
            cols = [u for u in ansatz.unknowns if template.diff(u) != 0]
            fns = [template.diff(u) for u in cols]
            coords_part = _coordinates(target, fns)
            if coords_part is None:
                return False
            for u, c in zip(cols, coords_part):
                vec[u] = c
    v = [vec[u] for u in ansatz.unknowns]
    if ignore_boundary_constant:
        for k in range(n_gauge):
            v[k] = sp.Integer(0)
    if not basis.vectors:
        return all(c == 0 for c in v)
    M = sp.Matrix(basis.vectors).T
    cs = sp.symbols(f"_s:{len(basis.vectors)}")
    sol = sp.linsolve((M, sp.Matrix(v)), *cs)
    return bool(sol)
