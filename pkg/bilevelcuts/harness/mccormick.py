"""
bilevelcuts : McCormick MILP export
===================================

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
    Linearize the follower objective of a binary instance and write the
    resulting mixed-integer bilevel linear program as an LP-format file
    plus an auxiliary file naming the follower columns, rows and
    objective (N, M, LC, LR, LO, OS records).

    On binaries y_i**2 = y_i, so the diagonal of R = V'V moves into the
    linear term. Each off-diagonal product y_i y_j (i < j) with a nonzero
    coefficient gets a follower column w_i_j with

        w >= y_i + y_j - 1,   w <= y_i,   w <= y_j,   w >= 0.
"""

import logging
import math

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from bilevelcuts.bilevel import NotBinaryError
from bilevelcuts.model import BilevelInstance, to_fraction

logger = logging.getLogger(__name__)


def _num(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return repr(float(value))


def _scaled(coefs: Sequence[Fraction], rhs: Fraction) -> Tuple[List[int], int]:
    """Multiply a row through by its common denominator."""
    lcm = 1
    for v in list(coefs) + [rhs]:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    return [int(v * lcm) for v in coefs], int(rhs * lcm)


def _linear_expr(coefs: Sequence, names: Sequence[str], keep_zeros: bool = False) -> str:
    terms = []
    for coef, name in zip(coefs, names):
        if coef == 0 and not keep_zeros:
            continue
        sign = "-" if coef < 0 else "+"
        terms.append("%s %s %s" % (sign, _num(abs(coef)), name))
    if not terms:
        return "0 %s" % names[0]
    text = " ".join(terms)
    return text[2:] if text.startswith("+ ") else text


@dataclass
class McCormickExport:
    """The linearized model with its LP text and auxiliary file."""

    name: str
    lp: str
    aux: str
    columns: List[str]
    follower_columns: List[int]
    follower_rows: List[int]
    linear: Tuple[Fraction, ...]
    products: Dict[Tuple[int, int], Fraction] = field(default_factory=dict)

    def follower_objective(self, y) -> Fraction:
        """
        Linearized follower objective at y, with each w taken from its
        McCormick envelope; on binary y the envelope is a single point.
        """
        y = [to_fraction(v) for v in y]
        value = sum((a * v for a, v in zip(self.linear, y)), Fraction(0))
        for (i, j), coef in self.products.items():
            low = max(Fraction(0), y[i] + y[j] - 1)
            high = min(y[i], y[j])
            if low != high:
                raise ValueError("McCormick envelope of y%d*y%d is not tight at %s"
                                 % (i + 1, j + 1, y))
            value += coef * low
        return value

    def write(self, stem: str) -> Tuple[str, str]:
        """Write <stem>.lp and <stem>.aux; returns both paths."""
        lp_path, aux_path = stem + ".lp", stem + ".aux"
        with open(lp_path, "w", encoding="utf-8") as fd:
            fd.write(self.lp)
        with open(aux_path, "w", encoding="utf-8") as fd:
            fd.write(self.aux)
        logger.info("Wrote %s and %s", lp_path, aux_path)
        return lp_path, aux_path


def follower_products(inst: BilevelInstance) -> Tuple[Tuple[Fraction, ...],
                                                      Dict[Tuple[int, int], Fraction]]:
    """Linear coefficients and off-diagonal product coefficients of q on binaries."""
    n2 = inst.n2
    R = [[sum((row[i] * row[j] for row in inst.V), Fraction(0)) for j in range(n2)]
         for i in range(n2)]
    linear = tuple(inst.g[i] + R[i][i] for i in range(n2))
    products = {}
    for i in range(n2):
        for j in range(i + 1, n2):
            if R[i][j] != 0:
                products[(i, j)] = 2 * R[i][j]
    return linear, products


def export_mccormick(inst: BilevelInstance) -> McCormickExport:
    if not inst.is_binary:
        raise NotBinaryError("McCormick export needs a binary instance")
    if inst.has_cones:
        raise ValueError("conic leader rows cannot be written as a linear program")
    n1, n2 = inst.n1, inst.n2
    linear, products = follower_products(inst)
    xs = ["x%d" % (j + 1) for j in range(n1)]
    ys = ["y%d" % (j + 1) for j in range(n2)]
    ws = ["w_%d_%d" % (i + 1, j + 1) for i, j in products]
    columns = xs + ys + ws
    zero = Fraction(0)

    # The objective lists every column so that column order is fixed.
    objective = list(inst.c) + list(inst.d) + [zero] * len(ws)
    rows: List[Tuple[str, List, List[str], str, int]] = []
    for r, (mrow, nrow, rhs) in enumerate(zip(inst.M, inst.N, inst.h)):
        coefs, b = _scaled(list(mrow) + list(nrow), rhs)
        rows.append(("L%d" % (r + 1), coefs, xs + ys, ">=", b))
    follower_rows = []
    for r, (arow, brow, rhs) in enumerate(zip(inst.A, inst.B, inst.f)):
        coefs, b = _scaled(list(arow) + list(brow), rhs)
        follower_rows.append(len(rows))
        rows.append(("F%d" % (r + 1), coefs, xs + ys, ">=", b))
    for r, (crow, rhs) in enumerate(zip(inst.CY, inst.UY)):
        coefs, b = _scaled(list(crow), rhs)
        follower_rows.append(len(rows))
        rows.append(("Y%d" % (r + 1), coefs, ys, ">=", b))
    for w, (i, j) in zip(ws, products):
        for tag, coefs, names, sense, b in (("a", [1, -1, -1], [w, ys[i], ys[j]], ">=", -1),
                                            ("b", [1, -1], [w, ys[i]], "<=", 0),
                                            ("c", [1, -1], [w, ys[j]], "<=", 0)):
            follower_rows.append(len(rows))
            rows.append(("MC_%d_%d%s" % (i + 1, j + 1, tag), coefs, names, sense, b))

    out = ["\\ %s" % (inst.name or "bilevel instance"),
           "\\ McCormick linearization of the follower objective", "Minimize",
           " obj: %s" % _linear_expr(objective, columns, keep_zeros=True), "Subject To"]
    for label, coefs, names, sense, b in rows:
        out.append(" %s: %s %s %d" % (label, _linear_expr(coefs, names), sense, b))
    out.append("Bounds")
    out.extend(" 0 <= %s <= 1" % name for name in columns)
    out.append("Binaries")
    out.extend(" %s" % name for name in xs + ys)
    out.append("End")
    lp = "\n".join(out) + "\n"

    follower_columns = list(range(n1, len(columns)))
    aux = ["N %d" % len(follower_columns), "M %d" % len(follower_rows)]
    aux.extend("LC %d" % j for j in follower_columns)
    aux.extend("LR %d" % r for r in follower_rows)
    aux.extend("LO %s" % _num(v) for v in list(linear) + list(products.values()))
    aux.append("OS 1")
    logger.debug("McCormick export of %s: %d products, %d rows", inst.name, len(ws), len(rows))
    return McCormickExport(inst.name, lp, "\n".join(aux) + "\n", columns, follower_columns,
                           follower_rows, linear, products)
