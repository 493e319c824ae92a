"""
bilevelcuts : Instance model
============================

Copyright MET Norway

Licensed under the GNU GENERAL PUBLIC LICENSE, Version 3; you may not
use this file except in compliance with the License. You may obtain a
copy of the License at

    https://www.gnu.org/licenses/gpl-3.0.en.html

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
implied. See the License for the specific language governing
permissions and limitations under the License.

PURPOSE:
    Domain types for integer bilevel programs with a convex-quadratic
    follower, the line-oriented instance format and the exact
    (rational) feasibility checks used as ground truth by the solvers.

    The leader problem is

        min  c'x + d'y
        s.t. M x + N y >= h
             Mt x + Nt y - ht in K   (product of second-order cones)
             y optimal for the follower at x

    and the follower problem at a fixed x is

        min  y'V'Vy + g'y
        s.t. A x + B y >= f,  CY y >= UY,  lb <= y <= ub,  y integer.
"""

from __future__ import annotations

import enum
import logging
import math

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

Vector = Tuple[Fraction, ...]
Matrix = Tuple[Vector, ...]

FORMAT_HEADER = "bilevel 1"

# Section order of the instance file, with the shape of each section.
SECTIONS = ("c", "d", "M", "N", "h", "Mt", "Nt", "ht", "cones",
            "A", "B", "f", "V", "g", "CY", "UY", "lb", "ub")
MATRIX_SECTIONS = ("M", "N", "Mt", "Nt", "A", "B", "V", "CY")
INTEGER_SECTIONS = ("A", "B", "f", "V", "lb", "ub")


class InstanceFormatError(ValueError):
    """Raised on syntax errors in an instance file."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = "line %d: %s" % (lineno, message)
        super().__init__(message)


class InstanceValidationError(ValueError):
    """Raised when instance data violates a structural invariant."""


def to_fraction(value) -> Fraction:
    """Exact conversion of ints, floats, strings and Fractions."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        return Fraction(int(value))
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError("non-finite value %r" % value)
        return Fraction(float(value))
    return Fraction(str(value).strip())


def _vector(values) -> Vector:
    return tuple(to_fraction(v) for v in values)


def _matrix(rows, ncols) -> Matrix:
    out = tuple(_vector(row) for row in rows)
    for row in out:
        if len(row) != ncols:
            raise InstanceValidationError(
                "matrix row of length %d, expected %d" % (len(row), ncols))
    return out


def _is_integer(value: Fraction) -> bool:
    return value.denominator == 1


def _dot(row: Sequence[Fraction], vec: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(row, vec)), Fraction(0))


@dataclass(frozen=True)
class BilevelInstance:
    """
    Exact data of an integer bilevel program.

    Attributes
    ----------
    n1, n2 : int
        Number of leader (x) and follower (y) variables.
    c, d : tuple of Fraction
        Leader objective on x and y.
    M, N, h : leader linear rows, M x + N y >= h.
    Mt, Nt, ht, cones : leader conic rows, Mt x + Nt y - ht in K where
        ``cones`` lists the second-order cone block sizes.
    A, B, f : integer linking rows, A x + B y >= f (follower constraints).
    V, g : follower objective y'V'Vy + g'y, V integer.
    CY, UY : follower-only rows CY y >= UY.
    lb, ub : integer bounds on (x, y).
    """

    n1: int
    n2: int
    c: Vector
    d: Vector
    M: Matrix = ()
    N: Matrix = ()
    h: Vector = ()
    Mt: Matrix = ()
    Nt: Matrix = ()
    ht: Vector = ()
    cones: Tuple[int, ...] = ()
    A: Matrix = ()
    B: Matrix = ()
    f: Vector = ()
    V: Matrix = ()
    g: Vector = ()
    CY: Matrix = ()
    UY: Vector = ()
    lb: Vector = ()
    ub: Vector = ()
    name: str = ""

    def __post_init__(self):
        n1, n2 = int(self.n1), int(self.n2)
        if n1 < 0 or n2 < 1:
            raise InstanceValidationError("need n1 >= 0 and n2 >= 1")
        setter = object.__setattr__
        setter(self, "n1", n1)
        setter(self, "n2", n2)
        setter(self, "c", _vector(self.c))
        setter(self, "d", _vector(self.d))
        for name, ncols in (("M", n1), ("N", n2), ("Mt", n1), ("Nt", n2), ("A", n1),
                            ("B", n2), ("V", n2), ("CY", n2)):
            setter(self, name, _matrix(getattr(self, name), ncols))
        for name in ("h", "ht", "f", "UY", "lb", "ub"):
            setter(self, name, _vector(getattr(self, name)))
        g = self.g if len(self.g) else [0] * n2
        setter(self, "g", _vector(g))
        setter(self, "cones", tuple(int(k) for k in self.cones))
        self._validate()

    def _validate(self):
        n1, n2 = self.n1, self.n2
        checks = [
            ("c", len(self.c), n1), ("d", len(self.d), n2), ("g", len(self.g), n2),
            ("lb", len(self.lb), n1 + n2), ("ub", len(self.ub), n1 + n2),
        ]
        for rows, other, label in ((self.M, self.N, "M/N"), (self.Mt, self.Nt, "Mt/Nt"),
                                   (self.A, self.B, "A/B")):
            if len(rows) != len(other):
                raise InstanceValidationError("%s row counts differ" % label)
        checks += [("h", len(self.h), len(self.M)), ("ht", len(self.ht), len(self.Mt)),
                   ("f", len(self.f), len(self.A)), ("UY", len(self.UY), len(self.CY))]
        for label, got, want in checks:
            if got != want:
                raise InstanceValidationError(
                    "dimension mismatch in %s: %d != %d" % (label, got, want))
        if len(self.V) > n2:
            raise InstanceValidationError("V has more rows than follower variables")
        if any(k < 1 for k in self.cones) or sum(self.cones) != len(self.Mt):
            raise InstanceValidationError("cone block sizes must be positive and sum to mt1")
        for i, (arow, brow) in enumerate(zip(self.A, self.B)):
            if not any(arow) and not any(brow):
                raise InstanceValidationError("zero linking row %d" % (i + 1))
        for name in INTEGER_SECTIONS:
            data = getattr(self, name)
            flat = [v for row in data for v in row] if name in MATRIX_SECTIONS else data
            if not all(_is_integer(v) for v in flat):
                raise InstanceValidationError("non-integer entry in %s" % name)
        for j, (lo, hi) in enumerate(zip(self.lb, self.ub)):
            if lo > hi:
                raise InstanceValidationError("lb > ub for variable %d" % (j + 1))

    # Dimensions

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def m1(self) -> int:
        return len(self.M)

    @property
    def mt1(self) -> int:
        return len(self.Mt)

    @property
    def m2(self) -> int:
        return len(self.A)

    @property
    def nY(self) -> int:
        return len(self.CY)

    @property
    def n3(self) -> int:
        return len(self.V)

    @property
    def is_binary(self) -> bool:
        return all(lo == 0 for lo in self.lb) and all(hi == 1 for hi in self.ub)

    @property
    def has_cones(self) -> bool:
        return bool(self.cones)

    @property
    def integral_follower_objective(self) -> bool:
        """True when q(y) is an integer at every integer y."""
        return all(_is_integer(v) for v in self.g)

    @property
    def integral_leader_objective(self) -> bool:
        return all(_is_integer(v) for v in self.c + self.d)

    # Floating point views for the numerical layers

    def as_array(self, name: str) -> np.ndarray:
        """Float copy of a data section with its declared shape (cached)."""
        cache = self.__dict__.setdefault("_array_cache", {})
        if name not in cache:
            data = getattr(self, name)
            if name in MATRIX_SECTIONS:
                ncols = self.n1 if name in ("M", "Mt", "A") else self.n2
                arr = np.array([[float(v) for v in row] for row in data],
                               dtype=float).reshape(len(data), ncols)
            else:
                arr = np.array([float(v) for v in data], dtype=float)
            arr.setflags(write=False)
            cache[name] = arr
        return cache[name]

    @property
    def lower(self) -> np.ndarray:
        return self.as_array("lb")

    @property
    def upper(self) -> np.ndarray:
        return self.as_array("ub")

    @property
    def follower_quadratic(self) -> "FollowerQuadratic":
        cache = self.__dict__.setdefault("_array_cache", {})
        if "_quadratic" not in cache:
            cache["_quadratic"] = FollowerQuadratic(self.as_array("V"), self.as_array("g"))
        return cache["_quadratic"]

    def split(self, z) -> Tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        return z[:self.n1], z[self.n1:]

    def leader_objective(self, x, y) -> Fraction:
        return _dot(self.c, _vector(x)) + _dot(self.d, _vector(y))

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("_array_cache", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)


class FollowerQuadratic(object):
    """Floating point view of q(y) = y'Ry + g'y with R = V'V."""

    def __init__(self, V: np.ndarray, g: np.ndarray):
        self.V = np.asarray(V, dtype=float)
        self.g = np.asarray(g, dtype=float)
        self.R = self.V.T @ self.V

    def value(self, y) -> float:
        y = np.asarray(y, dtype=float)
        vy = self.V @ y
        return float(vy @ vy + self.g @ y)

    def values(self, Y: np.ndarray) -> np.ndarray:
        """Row-wise evaluation over a stack of follower points."""
        VY = Y @ self.V.T
        return np.einsum("ij,ij->i", VY, VY) + Y @ self.g

    def gradient(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return 2.0 * (self.R @ y) + self.g


@dataclass(frozen=True)
class Point:
    x: Tuple[float, ...]
    y: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(self.x))
        object.__setattr__(self, "y", tuple(self.y))
        if not all(math.isfinite(float(v)) for v in self.x + self.y):
            raise ValueError("point entries must be finite")

    @classmethod
    def from_vector(cls, inst: BilevelInstance, z) -> "Point":
        z = list(z)
        return cls(tuple(z[:inst.n1]), tuple(z[inst.n1:]))

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.x + self.y], dtype=float)

    def is_integral(self, tol: float = 1e-9) -> bool:
        return all(abs(float(v) - round(float(v))) <= tol for v in self.x + self.y)


@dataclass(frozen=True, eq=False)
class Cut:
    """
    Linear inequality alpha'x + beta'y >= tau.

    ``local_to`` holds the id of the branch-and-bound node whose subtree
    the cut is valid in; None marks a globally valid cut.
    """

    alpha: np.ndarray
    beta: np.ndarray
    tau: float
    local_to: Optional[int] = None

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).ravel()
        beta = np.array(self.beta, dtype=float).ravel()
        alpha.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "tau", float(self.tau))
        if not np.any(alpha) and not np.any(beta) and self.tau != 1.0:
            raise ValueError("cut with zero coefficients must be the always-violated cut")

    @classmethod
    def always_violated(cls, n1: int, n2: int, local_to=None) -> "Cut":
        return cls(np.zeros(n1), np.zeros(n2), 1.0, local_to)

    @property
    def is_always_violated(self) -> bool:
        return not np.any(self.alpha) and not np.any(self.beta)

    @property
    def is_global(self) -> bool:
        return self.local_to is None

    @property
    def scope(self) -> str:
        return "global" if self.local_to is None else "local:%d" % self.local_to

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])

    def violation(self, x, y) -> float:
        lhs = self.alpha @ np.asarray(x, float) + self.beta @ np.asarray(y, float)
        return float(self.tau - lhs)

    def is_satisfied(self, x, y, tol: float = 1e-9) -> bool:
        return self.violation(x, y) <= tol

    def with_scope(self, local_to: Optional[int]) -> "Cut":
        return Cut(self.alpha, self.beta, self.tau, local_to)

    def normalized(self) -> Tuple[np.ndarray, float]:
        """Coefficients and rhs scaled to a unit 2-norm of (alpha, beta)."""
        coef = self.coefficients
        scale = float(np.linalg.norm(coef))
        if scale == 0.0:
            return coef, self.tau
        return coef / scale, self.tau / scale

    def __repr__(self):
        return "Cut(alpha=%s, beta=%s, tau=%.6g, %s)" % (
            np.array2string(self.alpha, precision=4), np.array2string(self.beta, precision=4),
            self.tau, self.scope)


class SolveStatus(enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    UNKNOWN = "Unknown"
    TIME_LIMIT = "TimeLimit"

    def __str__(self):
        return self.value


# Result table columns, in report order.
RUN_RECORD_COLUMNS = ("instance", "setting", "t", "Gap", "Gap*", "RGap", "RGap*", "nNode",
                      "nICut", "nFCut", "nRed", "t_F", "t_S", "nSol", "status")


@dataclass
class RunRecord:
    """Per-instance statistics of one solve; gaps are None when undefined."""

    instance: str
    setting: str
    runtime: float = 0.0
    gap: Optional[float] = None
    gap_star: Optional[float] = None
    rgap: Optional[float] = None
    rgap_star: Optional[float] = None
    nodes: Optional[int] = None
    icuts: int = 0
    fcuts: int = 0
    nred: int = 0
    t_follower: float = 0.0
    t_separation: float = 0.0
    solved: int = 0
    status: SolveStatus = SolveStatus.UNKNOWN
    objective: Optional[float] = None
    bound: Optional[float] = None
    root_objective: Optional[float] = None
    root_bound: Optional[float] = None

    def as_row(self) -> Dict[str, str]:
        def fmt(value, digits=1):
            if value is None:
                return "-"
            if isinstance(value, float):
                return "%.*f" % (digits, value)
            return str(value)

        values = (self.instance, self.setting, fmt(self.runtime), fmt(self.gap),
                  fmt(self.gap_star), fmt(self.rgap), fmt(self.rgap_star), fmt(self.nodes),
                  fmt(self.icuts), fmt(self.fcuts), fmt(self.nred), fmt(self.t_follower),
                  fmt(self.t_separation), fmt(self.solved), str(self.status))
        return dict(zip(RUN_RECORD_COLUMNS, values))


# Instance file format

def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


class _Lines(object):
    """Cursor over the meaningful lines of an instance file."""

    def __init__(self, text: str):
        self.lines = [(no, _strip(raw)) for no, raw in enumerate(text.splitlines(), start=1)]
        self.lines = [(no, line) for no, line in self.lines if line]
        self.pos = 0

    def peek(self):
        return self.lines[self.pos] if self.pos < len(self.lines) else (None, None)

    def take(self, what: str):
        if self.pos >= len(self.lines):
            lineno = self.lines[-1][0] if self.lines else 0
            raise InstanceFormatError("unexpected end of file, expected %s" % what, lineno)
        item = self.lines[self.pos]
        self.pos += 1
        return item


def _parse_numbers(line: str, lineno: int, count: int, section: str) -> List[Fraction]:
    if line == "-":
        tokens = []
    else:
        tokens = line.split()
    if len(tokens) != count:
        raise InstanceFormatError(
            "dimension mismatch in section %s: %d entries, expected %d"
            % (section, len(tokens), count), lineno)
    out = []
    for tok in tokens:
        if tok.lower().lstrip("+-") in ("inf", "infinity", "nan"):
            if section in ("lb", "ub"):
                raise InstanceFormatError("unbounded variable bound %r" % tok, lineno)
            raise InstanceFormatError("non-finite entry %r" % tok, lineno)
        try:
            out.append(Fraction(tok))
        except (ValueError, ZeroDivisionError):
            raise InstanceFormatError("invalid number %r in section %s" % (tok, section), lineno)
    return out


def _section_shapes(n1, n2, m1, mt1, m2, nY, n3):
    n = n1 + n2
    return {
        "c": (None, n1), "d": (None, n2),
        "M": (m1, n1), "N": (m1, n2), "h": (None, m1),
        "Mt": (mt1, n1), "Nt": (mt1, n2), "ht": (None, mt1),
        "A": (m2, n1), "B": (m2, n2), "f": (None, m2),
        "V": (n3, n2), "g": (None, n2),
        "CY": (nY, n2), "UY": (None, nY),
        "lb": (None, n), "ub": (None, n),
    }


def parse_instance(text: Union[str, bytes]) -> BilevelInstance:
    """
    Parse the line-oriented instance format.

    Sections whose data is empty (zero rows or zero entries) may be omitted;
    when present, an empty vector or matrix row is written as ``-``.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = _Lines(text)
    lineno, line = lines.take("header")
    if line.split() != FORMAT_HEADER.split():
        raise InstanceFormatError("expected header %r" % FORMAT_HEADER, lineno)

    name = ""
    lineno, line = lines.take("dims")
    if line.split()[0] == "name":
        name = line[4:].strip()
        lineno, line = lines.take("dims")
    parts = line.split()
    if parts[0] != "dims" or len(parts) != 8:
        raise InstanceFormatError("expected 'dims n1 n2 m1 mt1 m2 nY n3'", lineno)
    try:
        n1, n2, m1, mt1, m2, nY, n3 = (int(p) for p in parts[1:])
    except ValueError:
        raise InstanceFormatError("dims must be integers", lineno)
    if min(n1, m1, mt1, m2, nY, n3) < 0 or n2 < 1:
        raise InstanceFormatError("invalid dims", lineno)

    shapes = _section_shapes(n1, n2, m1, mt1, m2, nY, n3)
    data: Dict[str, object] = {}
    for section in SECTIONS:
        _, head = lines.peek()
        present = head == section
        if section == "cones":
            if present:
                lines.take(section)
                lineno, line = lines.take("cone sizes")
                sizes = _parse_numbers(line, lineno, len(line.split()) if line != "-" else 0,
                                       section)
                if not all(_is_integer(k) and k > 0 for k in sizes):
                    raise InstanceFormatError("cone sizes must be positive integers", lineno)
                data[section] = tuple(int(k) for k in sizes)
            elif mt1 == 0:
                data[section] = ()
            else:
                raise InstanceFormatError("missing section cones", lines.peek()[0])
            continue
        rows, ncols = shapes[section]
        empty = (rows if rows is not None else 1) * ncols == 0
        if not present:
            if not empty:
                raise InstanceFormatError("expected section %s" % section, lines.peek()[0])
            data[section] = tuple(() for _ in range(rows)) if rows is not None else ()
            continue
        lines.take(section)
        if rows is None:
            lineno, line = lines.take("section %s data" % section)
            data[section] = tuple(_parse_numbers(line, lineno, ncols, section))
        else:
            matrix = []
            for _ in range(rows):
                lineno, line = lines.take("section %s row" % section)
                matrix.append(tuple(_parse_numbers(line, lineno, ncols, section)))
            data[section] = tuple(matrix)

    lineno, line = lines.peek()
    if line is not None:
        raise InstanceFormatError("unexpected trailing content %r" % line, lineno)

    try:
        return BilevelInstance(n1=n1, n2=n2, name=name, **data)
    except InstanceValidationError:
        raise
    except ValueError as e:
        raise InstanceFormatError(str(e))


def _format_row(values) -> str:
    return " ".join(str(v) for v in values) if len(values) else "-"


def write_instance(inst: BilevelInstance) -> str:
    """Serialize an instance; rationals are written losslessly as p/q."""
    out = [FORMAT_HEADER]
    if inst.name:
        out.append("name %s" % inst.name)
    out.append("dims %d %d %d %d %d %d %d" % (inst.n1, inst.n2, inst.m1, inst.mt1, inst.m2,
                                               inst.nY, inst.n3))
    shapes = _section_shapes(inst.n1, inst.n2, inst.m1, inst.mt1, inst.m2, inst.nY, inst.n3)
    for section in SECTIONS:
        if section == "cones":
            if inst.cones:
                out.append("cones")
                out.append(_format_row(inst.cones))
            continue
        rows, ncols = shapes[section]
        if (rows if rows is not None else 1) * ncols == 0:
            continue
        out.append(section)
        value = getattr(inst, section)
        if rows is None:
            out.append(_format_row(value))
        else:
            out.extend(_format_row(row) for row in value)
    return "\n".join(out) + "\n"


# Exact evaluation

def eval_follower_objective(inst: BilevelInstance, y) -> Fraction:
    """q(y) = y'V'Vy + g'y in exact rational arithmetic."""
    y = list(y)
    if len(y) != inst.n2:
        raise ValueError("follower point of length %d, expected %d" % (len(y), inst.n2))
    yq = _vector(y)
    value = sum((_dot(row, yq) ** 2 for row in inst.V), Fraction(0))
    return value + _dot(inst.g, yq)


def _integral_vector(values, tol: float = 1e-9) -> Optional[Vector]:
    out = []
    for v in values:
        fv = float(v)
        r = round(fv)
        if not math.isfinite(fv) or abs(fv - r) > tol:
            return None
        out.append(Fraction(int(r)))
    return tuple(out)


def satisfies_hpr(inst: BilevelInstance, x: Sequence, y: Sequence) -> bool:
    """Exact check of bounds, leader, conic, linking and follower rows."""
    x, y = _vector(x), _vector(y)
    z = x + y
    if any(v < lo or v > hi for v, lo, hi in zip(z, inst.lb, inst.ub)):
        return False
    for mrow, nrow, rhs in zip(inst.M, inst.N, inst.h):
        if _dot(mrow, x) + _dot(nrow, y) < rhs:
            return False
    for arow, brow, rhs in zip(inst.A, inst.B, inst.f):
        if _dot(arow, x) + _dot(brow, y) < rhs:
            return False
    for crow, rhs in zip(inst.CY, inst.UY):
        if _dot(crow, y) < rhs:
            return False
    if inst.cones:
        s = [_dot(mrow, x) + _dot(nrow, y) - rhs
             for mrow, nrow, rhs in zip(inst.Mt, inst.Nt, inst.ht)]
        start = 0
        for size in inst.cones:
            block = s[start:start + size]
            start += size
            if block[0] < 0 or block[0] ** 2 < sum((v * v for v in block[1:]), Fraction(0)):
                return False
    return True


def is_bilevel_feasible(inst: BilevelInstance, point: Point,
                        follower_oracle: Optional[Callable] = None) -> bool:
    """
    True iff the point is integral, satisfies every constraint of the high
    point relaxation and q(y) <= Phi(x).

    ``follower_oracle(inst, x)`` returns an object with a ``value``
    attribute holding Phi(x), or None when the follower is infeasible.
    """
    x = _integral_vector(point.x)
    y = _integral_vector(point.y)
    if x is None or y is None or len(x) != inst.n1 or len(y) != inst.n2:
        return False
    if not satisfies_hpr(inst, x, y):
        return False
    if follower_oracle is None:
        from bilevelcuts.follower import follower_solve_optimal
        follower_oracle = follower_solve_optimal
    solution = follower_oracle(inst, [int(v) for v in x])
    if solution is None:
        return False
    return eval_follower_objective(inst, y) <= to_fraction(solution.value)


# Solution files

@dataclass
class SolutionRecord:
    status: SolveStatus
    objective: Optional[Fraction] = None
    x: Tuple[Fraction, ...] = field(default_factory=tuple)
    y: Tuple[Fraction, ...] = field(default_factory=tuple)


def write_solution(record: SolutionRecord) -> str:
    out = ["status %s" % record.status]
    out.append("objective %s" % ("-" if record.objective is None else record.objective))
    out.append("x %s" % _format_row(record.x))
    out.append("y %s" % _format_row(record.y))
    return "\n".join(out) + "\n"


def parse_solution(text: Union[str, bytes]) -> SolutionRecord:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    fields_: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        key, _, rest = line.partition(" ")
        if key not in ("status", "objective", "x", "y"):
            raise InstanceFormatError("unknown solution field %r" % key, lineno)
        fields_[key] = rest.strip()
    try:
        status = SolveStatus(fields_["status"])
    except (KeyError, ValueError):
        raise InstanceFormatError("missing or invalid status")

    def vec(key):
        raw = fields_.get(key, "-")
        return () if raw in ("", "-") else tuple(Fraction(t) for t in raw.split())

    objective = fields_.get("objective", "-")
    return SolutionRecord(status, None if objective == "-" else Fraction(objective),
                          vec("x"), vec("y"))
