"""
bilevelcuts : Instance generators
=================================

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
    Random instance families for benchmarking:

    QBCov   quadratic bilevel covering problems with iid uniform data.
    QBMKP   quadratic bilevel problems derived from multiple knapsack
            (MKP) data by complementing every budget row into a
            covering row, binary or with integer domain {0..5}.

    All randomness comes from a Philox counter-based generator seeded
    with the caller's seed, so a (recipe, seed) pair always produces the
    same instance file.
"""

import logging
import math

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

import numpy as np

from bilevelcuts.model import BilevelInstance

logger = logging.getLogger(__name__)

FAMILIES = ("QBCov", "QBMKP")
LEADER_SHARES = (0.5, 0.75)
INTEGER_UPPER_BOUND = 5


def make_rng(seed: int) -> np.random.Generator:
    """Canonical generator for instance data."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _uniform(rng, low, high, shape) -> np.ndarray:
    """Integers uniform on {low, ..., high}."""
    return rng.integers(low, high + 1, size=shape, dtype=np.int64)


def _rows(arr: np.ndarray):
    return [[int(v) for v in row] for row in arr]


def _quarter_ceil(total: int) -> int:
    return -(-int(total) // 4)


def gen_qbcov(n: int, m1: int = 0, m2: int = 1, seed: int = 0) -> BilevelInstance:
    """
    Binary quadratic bilevel covering instance with n1 = n2 = n/2.

    Entries of c, d, M, N, A and B are uniform on {0..99} and V is
    uniform on {0..9}. Leader rows get h = (row sum)/4 exactly; linking
    rows get f = ceil((row sum)/4), which leaves the integer points of
    the row unchanged.
    """
    n, m1, m2 = int(n), int(m1), int(m2)
    if n < 2 or n % 2:
        raise ValueError("QBCov needs an even number of variables, got %d" % n)
    if m1 not in (0, 1):
        raise ValueError("QBCov supports m1 in {0, 1}, got %d" % m1)
    if m2 not in (1, 2):
        raise ValueError("QBCov supports m2 in {1, 2}, got %d" % m2)
    half = n // 2
    rng = make_rng(seed)
    c = _uniform(rng, 0, 99, half)
    d = _uniform(rng, 0, 99, half)
    M = _uniform(rng, 0, 99, (m1, half))
    N = _uniform(rng, 0, 99, (m1, half))
    A = _uniform(rng, 0, 99, (m2, half))
    B = _uniform(rng, 0, 99, (m2, half))
    V = _uniform(rng, 0, 9, (half, half))
    for i in range(m2):
        if not A[i].any() and not B[i].any():
            B[i, -1] = 1
    h = [Fraction(int(M[r].sum() + N[r].sum()), 4) for r in range(m1)]
    f = [_quarter_ceil(A[i].sum() + B[i].sum()) for i in range(m2)]
    name = "qbcov-n%d-m%d-l%d-s%d" % (n, m1, m2, seed)
    logger.debug("Generated %s", name)
    return BilevelInstance(half, half, c.tolist(), d.tolist(), M=_rows(M), N=_rows(N), h=h,
                           A=_rows(A), B=_rows(B), f=f, V=_rows(V), g=[0] * half,
                           lb=[0] * n, ub=[1] * n, name=name)


# Multiple knapsack data

@dataclass(frozen=True)
class MkpData:
    """max p'z s.t. W z <= capacities, z binary."""

    profits: Tuple[int, ...]
    weights: Tuple[Tuple[int, ...], ...]
    capacities: Tuple[int, ...]
    name: str = "mkp"

    def __post_init__(self):
        if len(self.weights) != len(self.capacities):
            raise ValueError("MKP has %d weight rows but %d capacities"
                             % (len(self.weights), len(self.capacities)))
        if any(len(row) != len(self.profits) for row in self.weights):
            raise ValueError("MKP weight rows must have one entry per item")

    @property
    def items(self) -> int:
        return len(self.profits)

    @property
    def constraints(self) -> int:
        return len(self.weights)


def parse_mkp(text: Union[str, bytes], name: str = "mkp") -> MkpData:
    """
    Read the plain-text MKP layout: a line "items constraints", the item
    profits, one weight row per constraint and the capacities. Numbers
    may wrap across lines; one trailing number (a known optimum) is
    ignored.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    tokens = text.split()
    values = []
    for token in tokens:
        try:
            value = Fraction(token)
        except ValueError:
            raise ValueError("malformed MKP data: bad token %r" % token)
        if value.denominator != 1:
            raise ValueError("malformed MKP data: non-integer entry %s" % token)
        values.append(int(value))
    if len(values) < 2:
        raise ValueError("malformed MKP data: missing size line")
    items, constraints = values[0], values[1]
    if items < 1 or constraints < 1:
        raise ValueError("malformed MKP data: sizes must be positive")
    need = 2 + items + items * constraints + constraints
    if len(values) not in (need, need + 1):
        raise ValueError("malformed MKP data: expected %d numbers, found %d"
                         % (need, len(values)))
    pos = 2
    profits = tuple(values[pos:pos + items])
    pos += items
    weights = []
    for _ in range(constraints):
        weights.append(tuple(values[pos:pos + items]))
        pos += items
    capacities = tuple(values[pos:pos + constraints])
    return MkpData(profits, tuple(weights), capacities, name)


def write_mkp(mkp: MkpData) -> str:
    out = ["%d %d" % (mkp.items, mkp.constraints), " ".join(str(p) for p in mkp.profits)]
    out.extend(" ".join(str(w) for w in row) for row in mkp.weights)
    out.append(" ".join(str(b) for b in mkp.capacities))
    return "\n".join(out) + "\n"


def synth_mkp(items: int, constraints: int, seed: int = 0, tightness: float = 0.5) -> MkpData:
    """
    Synthetic MKP with profits on {1..99}, weights on {0..99} and each
    capacity set to ``tightness`` times its row sum.
    """
    if items < 2 or constraints < 1:
        raise ValueError("synthetic MKP needs at least 2 items and 1 constraint")
    if not 0.0 < tightness < 1.0:
        raise ValueError("tightness must lie in (0, 1)")
    rng = make_rng(seed)
    profits = _uniform(rng, 1, 99, items)
    weights = _uniform(rng, 0, 99, (constraints, items))
    for row in weights:
        if not row.any():
            row[0] = 1
    capacities = [int(math.floor(tightness * int(row.sum()))) for row in weights]
    return MkpData(tuple(profits.tolist()), tuple(tuple(r) for r in _rows(weights)),
                   tuple(capacities), "synth-%dx%d-s%d" % (items, constraints, seed))


def fourth_root_ceil(value: int) -> int:
    """Smallest integer s >= 0 with s**4 >= value."""
    value = int(value)
    if value <= 0:
        return 0
    s = int(round(value ** 0.25))
    while s ** 4 < value:
        s += 1
    while s > 0 and (s - 1) ** 4 >= value:
        s -= 1
    return s


def gen_qbmkp(mkp: MkpData, m2: int = 1, leader_share: float = 0.5,
              integer_flag: bool = False, seed: int = 0) -> BilevelInstance:
    """
    Quadratic bilevel instance from MKP data.

    The first ceil(share * items) items, in file order, become leader
    variables and carry the MKP profits as leader costs. Every budget
    row a'x + b'y <= cap is complemented into the covering row
    a'x + b'y >= e'a + e'b - cap; the last ``m2`` rows become linking
    rows and the others stay with the leader. V is uniform on
    {-sigma..sigma} with sigma = ceil(||d||_inf ** (1/4)). The integer
    variant uses the domain {0..5} and doubles every covering
    right-hand side.
    """
    m2 = int(m2)
    if m2 < 1:
        raise ValueError("need at least one linking row")
    if mkp.constraints < m2 + 1:
        raise ValueError("MKP %s has %d constraints, need at least %d"
                         % (mkp.name, mkp.constraints, m2 + 1))
    n1 = int(math.ceil(leader_share * mkp.items - 1e-9))
    n2 = mkp.items - n1
    if n1 < 1 or n2 < 1:
        raise ValueError("leader share %.2f leaves an empty level for %d items"
                         % (leader_share, mkp.items))
    W = np.array(mkp.weights, dtype=np.int64)
    rhs = W.sum(axis=1) - np.array(mkp.capacities, dtype=np.int64)
    scale = 2 if integer_flag else 1
    rhs = rhs * scale
    c = [int(p) for p in mkp.profits[:n1]]
    d = [int(p) for p in mkp.profits[n1:]]
    sigma = fourth_root_ceil(max(abs(v) for v in d))
    rng = make_rng(seed)
    V = _uniform(rng, -sigma, sigma, (n2, n2))
    lead = mkp.constraints - m2
    top = 1 if not integer_flag else INTEGER_UPPER_BOUND
    name = "qbmkp-%s-l%d-p%d%s-s%d" % (mkp.name, m2, int(round(100 * leader_share)),
                                       "-int" if integer_flag else "", seed)
    logger.debug("Generated %s with sigma %d", name, sigma)
    return BilevelInstance(n1, n2, c, d,
                           M=_rows(W[:lead, :n1]), N=_rows(W[:lead, n1:]),
                           h=[int(v) for v in rhs[:lead]],
                           A=_rows(W[lead:, :n1]), B=_rows(W[lead:, n1:]),
                           f=[int(v) for v in rhs[lead:]],
                           V=_rows(V), g=[0] * n2,
                           lb=[0] * mkp.items, ub=[top] * mkp.items, name=name)


@dataclass(frozen=True)
class GeneratorSpec:
    """
    One instance recipe. QBCov needs an even ``n``; QBMKP needs either a
    source MKP (``mkp`` data or ``mkp_path``) or synthetic sizes
    ``items`` and ``constraints``.
    """

    family: str
    seed: int = 0
    n: Optional[int] = None
    m1: int = 0
    m2: int = 1
    leader_share: float = 0.5
    integer: bool = False
    mkp: Optional[MkpData] = None
    mkp_path: Optional[str] = None
    items: Optional[int] = None
    constraints: Optional[int] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError("unknown instance family %r" % self.family)
        if self.m2 not in (1, 2):
            raise ValueError("m2 must be 1 or 2")
        if self.family == "QBCov":
            if self.n is None or self.n % 2:
                raise ValueError("QBCov requires an even n")
        else:
            synthetic = self.items is not None and self.constraints is not None
            if self.mkp is None and self.mkp_path is None and not synthetic:
                raise ValueError("QBMKP requires a source MKP or synthetic sizes")
            if self.leader_share not in LEADER_SHARES:
                logger.warning("leader share %s differs from the usual 0.5/0.75",
                               self.leader_share)

    def source(self) -> MkpData:
        if self.mkp is not None:
            return self.mkp
        if self.mkp_path is not None:
            with open(self.mkp_path, encoding="utf-8") as fd:
                stem = str(self.mkp_path).replace("\\", "/").rsplit("/", 1)[-1]
                return parse_mkp(fd.read(), name=stem.rsplit(".", 1)[0])
        return synth_mkp(self.items, self.constraints, self.seed)

    def build(self) -> BilevelInstance:
        if self.family == "QBCov":
            return gen_qbcov(self.n, self.m1, self.m2, self.seed)
        return gen_qbmkp(self.source(), self.m2, self.leader_share, self.integer, self.seed)
