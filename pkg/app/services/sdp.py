"""
Conic linear programs over blocks of Hermitian matrices.

A program is the primal of the pair

    min  <H1, X>   s.t.  Gamma(X) - H2 in K2,  X in K1
    max  <H2, Y>   s.t.  H1 - Gamma*(Y) in K1*,  Y in K2*

(or its mirror image for sense=max). X and Y are tuples of Hermitian blocks,
each tagged with a cone: psd, zero (the block is {0}) or free (the whole
space). Gamma is a sum of linear maps between blocks, each stored as a sparse
matrix acting on the column-major vectorization of its input block.

Interior-point iterations are delegated to whatever conic backend cvxpy finds
(Clarabel first, SCS as fallback). The dual point is obtained by solving
dualize(p) as a second, independent program, so both certificates are primal
iterates of the backend.
"""
import itertools
import json
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from threading import Lock
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, SolverError
from app.core.logger import get_logger
from app.core.resources import resources
from app.services import linalg

logger = get_logger(__name__)


class Cone(str, Enum):
    PSD = "psd"
    ZERO = "zero"
    FREE = "free"

    @property
    def dual(self) -> "Cone":
        return {Cone.PSD: Cone.PSD, Cone.ZERO: Cone.FREE, Cone.FREE: Cone.ZERO}[self]


class Sense(str, Enum):
    MIN = "min"
    MAX = "max"


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INACCURATE = "inaccurate"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical-failure"

    @property
    def ok(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.INACCURATE)


def vec(m) -> np.ndarray:
    return np.asarray(m).reshape(-1, order="F")


def unvec(v, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d, order="F")


@dataclass(frozen=True)
class Block:
    name: str
    dim: int
    cone: Cone


@dataclass(frozen=True)
class LinearMap:
    """One term of Gamma: constraint block `row` receives matrix @ vec(X[col])."""
    row: int
    col: int
    matrix: sp.csr_matrix = field(repr=False)

    @classmethod
    def from_function(cls, row: int, col: int, fn: Callable[[np.ndarray], np.ndarray],
                      d_in: int, d_out: int) -> "LinearMap":
        rows: List[int] = []
        cols: List[int] = []
        vals: List[complex] = []
        for j in range(d_in):
            for i in range(d_in):
                unit = np.zeros((d_in, d_in), dtype=complex)
                unit[i, j] = 1.0
                image = np.asarray(fn(unit), dtype=complex)
                if image.shape != (d_out, d_out):
                    raise DimensionMismatchError(f"map image has shape {image.shape}, expected {(d_out, d_out)}")
                image = vec(image)
                nz = np.flatnonzero(image)
                rows.extend(nz.tolist())
                cols.extend([i + j * d_in] * len(nz))
                vals.extend(image[nz].tolist())
        matrix = sp.csr_matrix((vals, (rows, cols)), shape=(d_out * d_out, d_in * d_in), dtype=complex)
        return cls(row, col, matrix)

    @classmethod
    def scalar_to_identity(cls, row: int, col: int, d_out: int, coefficient: float = 1.0) -> "LinearMap":
        """t -> coefficient * t * I on a 1x1 input block."""
        column = coefficient * vec(np.eye(d_out, dtype=complex)).reshape(-1, 1)
        return cls(row, col, sp.csr_matrix(column))

    @classmethod
    def identity(cls, row: int, col: int, d: int, coefficient: float = 1.0) -> "LinearMap":
        return cls(row, col, coefficient * sp.identity(d * d, dtype=complex, format="csr"))

    def apply(self, x: np.ndarray, d_out: int) -> np.ndarray:
        return unvec(self.matrix @ vec(x), d_out)

    def adjoint(self, y: np.ndarray, d_in: int) -> np.ndarray:
        return unvec(self.matrix.conj().T @ vec(y), d_in)


@dataclass(frozen=True)
class ConicProgram:
    variables: Tuple[Block, ...]
    constraints: Tuple[Block, ...]
    objective: Tuple[np.ndarray, ...] = field(repr=False)
    offset: Tuple[np.ndarray, ...] = field(repr=False)
    terms: Tuple[LinearMap, ...] = field(repr=False)
    sense: Sense = Sense.MIN
    name: str = "program"

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "sense", Sense(self.sense))
        if len(self.objective) != len(self.variables):
            raise DimensionMismatchError(f"{len(self.objective)} objective blocks for {len(self.variables)} variables")
        if len(self.offset) != len(self.constraints):
            raise DimensionMismatchError(f"{len(self.offset)} offset blocks for {len(self.constraints)} constraints")
        for kind, blocks in (("variable", self.variables), ("constraint", self.constraints)):
            names = [b.name for b in blocks]
            if len(set(names)) != len(names):
                raise DimensionMismatchError(f"duplicate {kind} block names in {names}")

        object.__setattr__(self, "objective", tuple(
            _hermitian_block(h, b, "objective") for h, b in zip(self.objective, self.variables)))
        object.__setattr__(self, "offset", tuple(
            _hermitian_block(h, b, "offset") for h, b in zip(self.offset, self.constraints)))

        for term in self.terms:
            if not (0 <= term.row < len(self.constraints) and 0 <= term.col < len(self.variables)):
                raise DimensionMismatchError(f"term ({term.row}, {term.col}) out of range")
            expected = (self.constraints[term.row].dim ** 2, self.variables[term.col].dim ** 2)
            if term.matrix.shape != expected:
                raise DimensionMismatchError(
                    f"term ({term.row}, {term.col}) has shape {term.matrix.shape}, expected {expected}")

    def gamma(self, xs: Sequence[np.ndarray]) -> List[np.ndarray]:
        out = [np.zeros((b.dim, b.dim), dtype=complex) for b in self.constraints]
        for term in self.terms:
            out[term.row] = out[term.row] + term.apply(xs[term.col], self.constraints[term.row].dim)
        return out

    def gamma_adjoint(self, ys: Sequence[np.ndarray]) -> List[np.ndarray]:
        out = [np.zeros((b.dim, b.dim), dtype=complex) for b in self.variables]
        for term in self.terms:
            out[term.col] = out[term.col] + term.adjoint(ys[term.row], self.variables[term.col].dim)
        return out

    def objective_value(self, xs: Sequence[np.ndarray]) -> float:
        return float(sum(linalg.hs_inner(h, x).real for h, x in zip(self.objective, xs)))

    def scale(self) -> float:
        norms = [np.linalg.norm(h) for h in self.objective + self.offset]
        return max([1.0] + [float(n) for n in norms])


def _hermitian_block(h, block: Block, what: str) -> np.ndarray:
    h = linalg.as_matrix(h)
    if h.shape != (block.dim, block.dim):
        raise DimensionMismatchError(f"{what} for block '{block.name}' has shape {h.shape}, expected {block.dim}")
    return linalg.hermitian_part(linalg.check_hermitian(h))


class ProgramBuilder:
    """Assemble a ConicProgram from named blocks and Python callables."""

    def __init__(self, name: str):
        self.name = name
        self._variables: List[Block] = []
        self._constraints: List[Block] = []
        self._objective: List[np.ndarray] = []
        self._offset: List[np.ndarray] = []
        self._terms: List[LinearMap] = []

    def variable(self, name: str, dim: int, cone: Cone = Cone.FREE, objective=None) -> int:
        self._variables.append(Block(name, int(dim), Cone(cone)))
        self._objective.append(np.zeros((dim, dim), dtype=complex) if objective is None else objective)
        return len(self._variables) - 1

    def constraint(self, name: str, dim: int, cone: Cone, terms: Dict[int, Callable], offset=None) -> int:
        row = len(self._constraints)
        self._constraints.append(Block(name, int(dim), Cone(cone)))
        self._offset.append(np.zeros((dim, dim), dtype=complex) if offset is None else offset)
        for col, fn in terms.items():
            if isinstance(fn, LinearMap):
                self._terms.append(LinearMap(row, col, fn.matrix))
            else:
                self._terms.append(LinearMap.from_function(row, col, fn, self._variables[col].dim, dim))
        return row

    def build(self, sense: Sense = Sense.MIN) -> ConicProgram:
        return ConicProgram(
            variables=tuple(self._variables),
            constraints=tuple(self._constraints),
            objective=tuple(self._objective),
            offset=tuple(self._offset),
            terms=tuple(self._terms),
            sense=sense,
            name=self.name,
        )


@dataclass
class ConicSolution:
    status: SolveStatus
    primal_value: float
    dual_value: float
    primal: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    dual: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    gap: float = float("nan")
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    complementarity: float = float("nan")
    solver: str = ""

    @property
    def value(self) -> float:
        return self.primal_value

    def require_ok(self, what: str = "program") -> "ConicSolution":
        if not self.status.ok:
            raise SolverError(f"{what}: solver returned {self.status.value}")
        return self


def dualize(p: ConicProgram) -> ConicProgram:
    terms = tuple(LinearMap(t.col, t.row, -t.matrix.conj().T.tocsr()) for t in p.terms)
    variables = tuple(Block(b.name, b.dim, b.cone.dual) for b in p.constraints)
    constraints = tuple(Block(b.name, b.dim, b.cone.dual) for b in p.variables)
    if p.sense is Sense.MIN:
        objective, offset, sense = p.offset, tuple(-h for h in p.objective), Sense.MAX
    else:
        objective, offset, sense = tuple(-h for h in p.offset), p.objective, Sense.MIN
    name = p.name[:-5] if p.name.endswith(".dual") else f"{p.name}.dual"
    return ConicProgram(variables, constraints, objective, offset, terms, sense, name)


def cone_residual(m: np.ndarray, cone: Cone) -> float:
    if cone is Cone.FREE or m.size == 0:
        return 0.0
    if cone is Cone.ZERO:
        return float(np.linalg.norm(m))
    return max(0.0, -float(np.linalg.eigvalsh(linalg.hermitian_part(m))[0]))


def primal_residual(p: ConicProgram, xs: Sequence[np.ndarray]) -> float:
    residual = 0.0
    for x, block in zip(xs, p.variables):
        residual = max(residual, cone_residual(x, block.cone))
    for image, h2, block in zip(p.gamma(xs), p.offset, p.constraints):
        residual = max(residual, cone_residual(image - h2, block.cone))
    return residual


_STATUS = {
    cp.OPTIMAL: SolveStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolveStatus.INACCURATE,
    cp.INFEASIBLE: SolveStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolveStatus.INFEASIBLE,
    cp.UNBOUNDED: SolveStatus.UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: SolveStatus.UNBOUNDED,
}


def _solver_options(backend: str) -> Dict[str, object]:
    if backend == "CLARABEL":
        return {"max_iter": settings.QSC_MAX_ITERS}
    if backend == "SCS":
        return {"max_iters": settings.SCS_MAX_ITERS, "eps_abs": 1e-9, "eps_rel": 1e-9}
    return {}


def _term_expression(term: LinearMap, x, d_out: int):
    v = cp.vec(x, order="F")
    real = sp.csr_matrix(term.matrix.real)
    imag = sp.csr_matrix(term.matrix.imag)
    expr = 0
    if real.nnz:
        expr = expr + real @ v
    if imag.nnz:
        expr = expr + 1j * (imag @ v)
    if real.nnz == 0 and imag.nnz == 0:
        return None
    return cp.reshape(expr, (d_out, d_out), order="F")


def _constant_violation(p: ConicProgram, row: int) -> float:
    """Residual of a constraint block that no term touches: -H2 must lie in the cone."""
    return cone_residual(-p.offset[row], p.constraints[row].cone)


@dataclass
class _Compiled:
    problem: cp.Problem
    variables: List[Optional[cp.Variable]]


def _compile(p: ConicProgram) -> Optional[_Compiled]:
    xs: List[Optional[cp.Variable]] = []
    constraints = []
    for block in p.variables:
        if block.cone is Cone.ZERO:
            xs.append(None)
            continue
        x = cp.Variable((block.dim, block.dim), hermitian=True, name=block.name)
        if block.cone is Cone.PSD:
            constraints.append(x >> 0)
        xs.append(x)

    images: List[List] = [[] for _ in p.constraints]
    for term in p.terms:
        if xs[term.col] is None:
            continue
        expr = _term_expression(term, xs[term.col], p.constraints[term.row].dim)
        if expr is not None:
            images[term.row].append(expr)

    for row, (block, parts) in enumerate(zip(p.constraints, images)):
        if block.cone is Cone.FREE:
            continue
        if not parts:
            if _constant_violation(p, row) > settings.FEAS_TOL * p.scale():
                logger.debug(f"SDP: constant constraint '{block.name}' of '{p.name}' is violated")
                return None
            continue
        expr = sum(parts[1:], parts[0]) - p.offset[row]
        if block.cone is Cone.ZERO:
            constraints.append(expr == 0)
        else:
            # expr is Hermitian; cvxpy constrains its Hermitian part
            constraints.append(expr >> 0)

    terms = [cp.real(cp.trace(h @ x)) for h, x in zip(p.objective, xs) if x is not None and np.any(h)]
    objective = sum(terms[1:], terms[0]) if terms else cp.Constant(0.0)
    goal = cp.Minimize(objective) if p.sense is Sense.MIN else cp.Maximize(objective)
    return _Compiled(cp.Problem(goal, constraints), xs)


def _values(p: ConicProgram, compiled: _Compiled) -> List[np.ndarray]:
    out = []
    for block, x in zip(p.variables, compiled.variables):
        if x is None or x.value is None:
            out.append(np.zeros((block.dim, block.dim), dtype=complex))
        else:
            out.append(linalg.hermitian_part(np.asarray(x.value, dtype=complex)))
    return out


def _solve_primal(p: ConicProgram, solvers: Optional[Sequence[str]]) -> Tuple[SolveStatus, List[np.ndarray], str]:
    compiled = _compile(p)
    if compiled is None:
        return SolveStatus.INFEASIBLE, [], ""

    backends = list(solvers) if solvers else resources.solvers
    if not backends:
        raise SolverError(f"no conic backend available among {settings.SOLVERS}")

    fallback: Optional[Tuple[SolveStatus, List[np.ndarray], str]] = None
    for backend in backends:
        start = time.time()
        try:
            compiled.problem.solve(solver=backend, **_solver_options(backend))
        except cp.error.SolverError as e:
            logger.warning(f"SDP: {backend} failed on '{p.name}': {e}")
            continue
        status = _STATUS.get(compiled.problem.status, SolveStatus.NUMERICAL_FAILURE)
        logger.debug(f"SDP: '{p.name}' -> {status.value} with {backend} in {time.time() - start:.3f}s")

        if status in (SolveStatus.OPTIMAL, SolveStatus.INFEASIBLE, SolveStatus.UNBOUNDED):
            return status, _values(p, compiled), backend
        if status is SolveStatus.INACCURATE and fallback is None:
            fallback = (status, _values(p, compiled), backend)
        logger.warning(f"SDP: {backend} returned {compiled.problem.status} on '{p.name}', trying next backend")

    if fallback is not None:
        return fallback
    return SolveStatus.NUMERICAL_FAILURE, [], ""


def _worst(p: ConicProgram) -> float:
    return float("inf") if p.sense is Sense.MIN else float("-inf")


def _certify_infeasible(p: ConicProgram, solvers: Optional[Sequence[str]], backend: str) -> ConicSolution:
    """A backend's infeasibility claim stands only once phase 1 confirms it."""
    result = solve_feasibility(p, solvers=solvers)
    if result.feasible:
        logger.error(f"SDP: {backend or 'compiler'} reported '{p.name}' infeasible "
                     f"but phase-1 slack is {result.slack:.3e}")
        return ConicSolution(SolveStatus.NUMERICAL_FAILURE, float("nan"), float("nan"), solver=backend)
    worst = _worst(p)
    return ConicSolution(SolveStatus.INFEASIBLE, worst, worst, dual=result.witness, solver=backend)


def _complementarity(p: ConicProgram, xs: Sequence[np.ndarray], d: ConicProgram, ys: Sequence[np.ndarray]) -> float:
    """Largest |<slack, multiplier>| over the psd blocks of both programs."""
    worst = 0.0
    for prog, points, multipliers in ((p, xs, ys), (d, ys, xs)):
        for row, (image, h2, block) in enumerate(zip(prog.gamma(points), prog.offset, prog.constraints)):
            if block.cone is Cone.PSD:
                worst = max(worst, abs(linalg.hs_inner(image - h2, multipliers[row])))
    return worst


def _solve(p: ConicProgram, solvers: Optional[Sequence[str]], with_dual: bool, certify: bool,
           gap_tol: Optional[float] = None) -> ConicSolution:
    gap_tol = settings.GAP_TOL if gap_tol is None else gap_tol
    _maybe_dump(p)
    status, xs, backend = _solve_primal(p, solvers)
    if status is SolveStatus.INFEASIBLE:
        if certify:
            return _certify_infeasible(p, solvers, backend)
        logger.error(f"SDP: {backend or 'compiler'} reported the always-feasible '{p.name}' infeasible")
        status = SolveStatus.NUMERICAL_FAILURE
    if status is SolveStatus.UNBOUNDED:
        worst = -_worst(p)
        return ConicSolution(status, worst, worst, solver=backend)
    if status is SolveStatus.NUMERICAL_FAILURE:
        logger.error(f"SDP: every backend failed on '{p.name}'")
        return ConicSolution(status, float("nan"), float("nan"))

    alpha = p.objective_value(xs)
    primal = {b.name: x for b, x in zip(p.variables, xs)}
    solution = ConicSolution(status, alpha, float("nan"), primal=primal,
                             primal_residual=primal_residual(p, xs), solver=backend)
    if not with_dual:
        return solution

    d = dualize(p)
    d_status, ys, _ = _solve_primal(d, solvers)
    if not d_status.ok:
        logger.warning(f"SDP: dual of '{p.name}' returned {d_status.value}")
        solution.status = SolveStatus.INACCURATE
        return solution

    beta = d.objective_value(ys)
    gap = alpha - beta if p.sense is Sense.MIN else beta - alpha
    solution.dual_value = beta
    solution.dual = {b.name: y for b, y in zip(d.variables, ys)}
    solution.gap = gap
    solution.dual_residual = primal_residual(d, ys)
    solution.complementarity = _complementarity(p, xs, d, ys)

    if status is SolveStatus.OPTIMAL and d_status is SolveStatus.OPTIMAL \
            and abs(gap) <= gap_tol * max(1.0, abs(alpha)):
        solution.status = SolveStatus.OPTIMAL
    else:
        logger.warning(f"SDP: '{p.name}' closed with gap {gap:.3e}")
        solution.status = SolveStatus.INACCURATE
    return solution


def solve(p: ConicProgram, solvers: Optional[Sequence[str]] = None, with_dual: bool = True,
          gap_tol: Optional[float] = None) -> ConicSolution:
    """
    Solve p and, unless with_dual is False, its dual. An infeasible status is
    only returned after phase 1 confirms it; the dual then holds the witness.
    gap_tol (relative) defaults to settings.GAP_TOL.
    """
    return _solve(p, solvers, with_dual, certify=True, gap_tol=gap_tol)


@dataclass
class FeasibilityResult:
    feasible: bool
    slack: float
    point: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    witness: Optional[Dict[str, np.ndarray]] = field(default=None, repr=False)
    solution: Optional[ConicSolution] = field(default=None, repr=False)


SLACK = "_slack"
NEG = "_neg"
SHIFT = "_shift"


def phase_one(p: ConicProgram) -> ConicProgram:
    """
    min t  s.t.  Gamma(X) - H2 + t I >= 0        on psd rows,
                 -t I <= Gamma(X) - H2 <= t I    on zero rows,
                 X + t I >= 0                    on psd variables,
                 t >= -1.
    Always feasible and bounded below.
    """
    variables = [Block(b.name, b.dim, Cone.FREE if b.cone is Cone.PSD else b.cone) for b in p.variables]
    variables.append(Block(SLACK, 1, Cone.FREE))
    t = len(variables) - 1

    constraints = [Block(b.name, b.dim, Cone.PSD if b.cone is Cone.ZERO else b.cone) for b in p.constraints]
    offset = list(p.offset)
    terms = list(p.terms)
    for row, block in enumerate(p.constraints):
        if block.cone is Cone.FREE:
            continue
        terms.append(LinearMap.scalar_to_identity(row, t, block.dim))
        if block.cone is Cone.ZERO:
            neg = len(constraints)
            constraints.append(Block(f"{block.name}{NEG}", block.dim, Cone.PSD))
            offset.append(-p.offset[row])
            terms.extend(LinearMap(neg, term.col, -term.matrix) for term in p.terms if term.row == row)
            terms.append(LinearMap.scalar_to_identity(neg, t, block.dim))
    for col, block in enumerate(p.variables):
        if block.cone is Cone.PSD:
            row = len(constraints)
            constraints.append(Block(f"{block.name}{SHIFT}", block.dim, Cone.PSD))
            offset.append(np.zeros((block.dim, block.dim), dtype=complex))
            terms.append(LinearMap.identity(row, col, block.dim))
            terms.append(LinearMap.scalar_to_identity(row, t, block.dim))
    constraints.append(Block(f"{SLACK}_floor", 1, Cone.PSD))
    offset.append(-np.ones((1, 1), dtype=complex))
    terms.append(LinearMap.scalar_to_identity(len(constraints) - 1, t, 1))

    objective = [np.zeros((b.dim, b.dim), dtype=complex) for b in p.variables] + [np.ones((1, 1), dtype=complex)]
    return ConicProgram(tuple(variables), tuple(constraints), tuple(objective), tuple(offset),
                        tuple(terms), Sense.MIN, f"{p.name}.phase1")


def _witness(p: ConicProgram, dual: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """
    Multipliers W (one per constraint of p) and Z (one per psd variable) with
    Gamma*(W) + Z = 0 and sum_l <H2_l, W_l> >= slack > 0: no X can satisfy p.
    """
    witness: Dict[str, np.ndarray] = {}
    for block in p.constraints:
        y = dual[block.name]
        if block.cone is Cone.ZERO:
            y = y - dual[f"{block.name}{NEG}"]
        witness[block.name] = y
    for block in p.variables:
        if block.cone is Cone.PSD:
            witness[f"{block.name}{SHIFT}"] = dual[f"{block.name}{SHIFT}"]
    return witness


def solve_feasibility(p: ConicProgram, tol: float = None, solvers: Optional[Sequence[str]] = None) -> FeasibilityResult:
    tol = settings.FEAS_TOL if tol is None else tol
    solution = _solve(phase_one(p), solvers, with_dual=True, certify=False)
    if not solution.status.ok:
        raise SolverError(f"phase-1 of '{p.name}' returned {solution.status.value}")

    slack = float(solution.primal[SLACK][0, 0].real)
    point = {name: x for name, x in solution.primal.items() if name != SLACK}
    feasible = slack <= tol
    witness = None
    if not feasible:
        if not solution.dual:
            raise SolverError(f"phase-1 of '{p.name}' has no dual point to certify slack {slack:.3e}")
        witness = _witness(p, solution.dual)
    logger.debug(f"SDP: '{p.name}' phase-1 slack {slack:.3e} (feasible={feasible})")
    return FeasibilityResult(feasible, slack, point, witness, solution)


def _triplets(m) -> List[List[float]]:
    m = sp.coo_matrix(m)
    return [[int(i), int(j), float(v.real), float(v.imag)] for i, j, v in zip(m.row, m.col, m.data)]


def dump_program(p: ConicProgram, path: str) -> None:
    """Sparse-triplet JSON: every matrix is a list of [row, col, re, im]; term matrices act on column-major vec."""
    doc = {
        "name": p.name,
        "sense": p.sense.value,
        "variables": [{"name": b.name, "dim": b.dim, "cone": b.cone.value} for b in p.variables],
        "constraints": [{"name": b.name, "dim": b.dim, "cone": b.cone.value} for b in p.constraints],
        "objective": [_triplets(h) for h in p.objective],
        "offset": [_triplets(h) for h in p.offset],
        "terms": [{"row": t.row, "col": t.col, "shape": list(t.matrix.shape), "entries": _triplets(t.matrix)}
                  for t in p.terms],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


_dump_counter = itertools.count()
_dump_lock = Lock()


def _maybe_dump(p: ConicProgram) -> None:
    if not settings.SDP_DUMP_DIR:
        return
    with _dump_lock:
        index = next(_dump_counter)
    os.makedirs(settings.SDP_DUMP_DIR, exist_ok=True)
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in p.name)
    path = os.path.join(settings.SDP_DUMP_DIR, f"{index:05d}-{safe}.json")
    dump_program(p, path)
    logger.debug(f"SDP: dumped '{p.name}' to {path}")
