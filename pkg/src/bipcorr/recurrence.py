"""Closed recurrence system for the correlator coefficients n_{k,m}.

``CoefficientEngine`` evaluates the same family values the enumeration oracle
defines by filtering (see :mod:`bipcorr.families` for the catalog), but by
recursion instead of enumeration, which is what makes coefficients beyond
enumeration reach affordable.  The two routes share only the family catalog
and ``edge_factor``; agreement between them is checked by the test suite and
the ``crosscheck`` CLI command.

How the recursion peels a walk pair
-----------------------------------
Every equation splits a family at the root r of the gray walk along the first
gray edge (r, v).  Writing f for half the number of traversals of (r, v), the
edge contributes ``edge_factor(2f) = V_2f / p^(f-1)``, and the rest of the
pair falls apart into an "upper" piece beyond v and a "lower" piece at r,
both of which are again family values with strictly smaller half-lengths.
The combinatorial factors are binomial codes: a walk that departs the root
r_g times, f of them through the cut edge, distributes those departures in
``binomial(r_g - 1, f - 1)`` ways when its final return is forced through the
cut edge (or ``binomial(r_g, f)`` style variants when it is not), and the
upper walk interleaves with blue excursions in ``binomial(f + v - 1, f - 1)``
ways.  Out-of-range binomials vanish, which silently kills every branch that
would need a negative count; no explicit range guards appear in the sums.

Termination
-----------
Recursive references either strictly decrease the total half-length
l_g + l_b, or keep it fixed and move to a strictly earlier evaluation stage
(``families.STAGE``).  The engine asserts this ordering on every nested call,
so an accidentally circular edit fails loudly instead of looping.

Memo table
----------
Values are memoized per key, write-once, and tagged with digests of
(alpha, p) and the moment sequence.  ``export_memo``/``import_memo`` move the
table through a JSON file; importing into an engine with a different context
raises ``ContextMismatchError``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable

from . import families as fam
from .model import ModelParams, MomentSequence, edge_factor, validate
from .rational import binomial, format_scalar, parse_scalar

from . import __version__ as _ENGINE_VERSION

_ZERO = Fraction(0)


class ContextMismatchError(Exception):
    code = "context_mismatch"


class CoefficientEngine:
    """Exact evaluator for family values and correlator coefficients."""

    def __init__(self, params: ModelParams, moments: MomentSequence):
        self.params = params
        self.moments = moments
        self._memo: dict = {}
        self._edge_weights: dict = {}
        self._stack: list = []
        self._dispatch = {
            fam.S1: self._eval_s1,
            fam.S1S: self._eval_s1s,
            fam.EQ_C: self._eval_eq_c,
            fam.EQ_C_G: self._eval_eq_c_g,
            fam.EQ_C_R: self._eval_eq_c_r,
            fam.EQ_ANYC: self._eval_eq_anyc,
            fam.NEQ_C: self._eval_neq_c,
            fam.NEQ_C_G: self._eval_neq_c_g,
            fam.NEQ_C_GU: self._eval_neq_c_gu,
            fam.NEQ_C_GD: self._eval_neq_c_gd,
            fam.NEQ_C_R: self._eval_neq_c_r,
            fam.NEQ_C_RU: self._eval_neq_c_ru,
            fam.NEQ_C_RD: self._eval_neq_c_rd,
            fam.NEQ_ANYC_S: self._eval_neq_anyc_s,
            fam.NEQ_ANYC_SGD: self._eval_neq_anyc_sgd,
            fam.NEQ_ANYC_SN: self._eval_neq_anyc_sn,
            fam.TOP: self._eval_top,
        }

    # -- public API --------------------------------------------------------

    def s_value(self, key: fam.FamilyKey) -> Fraction:
        fam.validate_key(key)
        return self._value(key)

    def correlator_coefficient(self, k: int, m: int) -> Fraction:
        """n_{k,m}: the large-N limit of N * Cov(moment k, moment m)."""
        validate(self.params, self.moments, k, m)
        if k % 2 != 0 or m % 2 != 0:
            return _ZERO
        return self._value(fam.top_key(k // 2, m // 2))

    def correlator_table(self, kmax: int, mmax: int) -> dict:
        """All coefficients for 1 <= k <= kmax, 1 <= m <= mmax."""
        return {
            (k, m): self.correlator_coefficient(k, m)
            for k in range(1, kmax + 1)
            for m in range(1, mmax + 1)
        }

    # -- memo table --------------------------------------------------------

    @property
    def memo_size(self) -> int:
        return len(self._memo)

    def memo_items(self) -> Iterable:
        return self._memo.items()

    def context_header(self) -> dict:
        return {
            "alpha": format_scalar(self.params.alpha),
            "p": format_scalar(self.params.p),
            "moments_digest": self.moments.digest(),
            "engine_version": _ENGINE_VERSION,
        }

    def export_memo(self, path: str) -> None:
        def sort_key(item):
            key, _ = item
            return (
                fam.key_total(key),
                fam.key_stage(key),
                key.component or 0,
                key.l_g,
                -1 if key.l_b is None else key.l_b,
                -1 if key.r_g is None else key.r_g,
                -1 if key.r_b is None else key.r_b,
            )

        entries = [
            {
                "family": key.tag,
                "component": key.component,
                "l_g": key.l_g,
                "l_b": key.l_b,
                "r_g": key.r_g,
                "r_b": key.r_b,
                "value": format_scalar(value),
            }
            for key, value in sorted(self._memo.items(), key=sort_key)
        ]
        payload = {"header": self.context_header(), "entries": entries}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")

    def import_memo(self, path: str) -> int:
        """Load an exported memo table; returns the number of entries loaded."""
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        header = payload.get("header", {})
        ours = self.context_header()
        for field in ("alpha", "p", "moments_digest"):
            if header.get(field) != ours[field]:
                raise ContextMismatchError(
                    f"context mismatch on {field}: file has {header.get(field)!r}, "
                    f"engine has {ours[field]!r}"
                )
        count = 0
        for entry in payload["entries"]:
            key = fam.FamilyKey(
                entry["family"],
                entry["component"],
                entry["l_g"],
                entry["l_b"],
                entry["r_g"],
                entry["r_b"],
            )
            fam.validate_key(key)
            value = parse_scalar(entry["value"])
            self._store(key, value)
            count += 1
        return count

    # -- evaluation machinery ---------------------------------------------

    def _value(self, key: fam.FamilyKey) -> Fraction:
        rank = (fam.key_total(key), fam.key_stage(key))
        if self._stack:
            parent = self._stack[-1]
            assert rank < parent, (
                f"recursion order violated: {key} at rank {rank} "
                f"referenced from rank {parent}"
            )
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        self._stack.append(rank)
        try:
            value = self._dispatch[key.tag](key)
        finally:
            self._stack.pop()
        self._store(key, value)
        return value

    def _store(self, key: fam.FamilyKey, value: Fraction) -> None:
        existing = self._memo.get(key)
        if existing is not None and existing != value:
            raise AssertionError(
                f"memo conflict for {key}: stored {existing}, new {value}"
            )
        self._memo[key] = value

    def _alpha(self, component: int) -> Fraction:
        return Fraction(self.params.alpha1 if component == 1 else self.params.alpha2)

    def _w(self, half_multiplicity: int) -> Fraction:
        """Edge weight for an edge traversed 2 * half_multiplicity times."""
        cached = self._edge_weights.get(half_multiplicity)
        if cached is None:
            cached = edge_factor(self.moments, self.params, 2 * half_multiplicity)
            self._edge_weights[half_multiplicity] = cached
        return cached

    def _s1(self, component: int, l: int, r: int) -> Fraction:
        return self._value(fam.single_key(fam.S1, component, l, r))

    def _s1s(self, component: int, l: int, r: int) -> Fraction:
        return self._value(fam.single_key(fam.S1S, component, l, r))

    def _dbl(self, tag: str, component: int, l_g: int, l_b: int, r_g: int, r_b: int) -> Fraction:
        return self._value(fam.double_key(tag, component, l_g, l_b, r_g, r_b))

    # -- single-walk equations --------------------------------------------

    def _eval_s1(self, key: fam.FamilyKey) -> Fraction:
        component, l, r = key.component, key.l_g, key.r_g
        if l == 0:
            return self._alpha(component) if r == 0 else _ZERO
        if r == 0 or r > l:
            return _ZERO
        opp = 3 - component
        total = _ZERO
        for f in range(1, r + 1):
            outer = binomial(r - 1, f - 1) * self._w(f)
            for u in range(0, l - r + 1):
                lower = self._s1(component, l - u - f, r - f)
                if lower == 0:
                    continue
                upper = _ZERO
                for v in range(0, u + 1):
                    upper += binomial(f + v - 1, f - 1) * self._s1(opp, u, v)
                total += outer * lower * upper
        return total

    def _eval_s1s(self, key: fam.FamilyKey) -> Fraction:
        component, l, r = key.component, key.l_g, key.r_g
        if l == 0 or r == 0 or r > l:
            return _ZERO
        opp = 3 - component
        total = _ZERO
        for f in range(1, r + 1):
            outer = binomial(r - 1, f - 1) * self._w(f)
            for u in range(0, l - r + 1):
                lower = self._s1(component, l - u - f, r - f)
                if lower == 0:
                    continue
                upper = _ZERO
                for v in range(0, u + 1):
                    upper += binomial(f + v, f) * self._s1(opp, u, v)
                    upper += binomial(f + v - 1, f) * self._s1s(opp, u, v)
                total += outer * lower * upper
        return total

    # -- equal-root equations ---------------------------------------------

    def _eval_eq_c(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        return self._dbl(fam.EQ_C_G, c, lg, lb, rg, rb) + self._dbl(
            fam.EQ_C_R, c, lg, lb, rg, rb
        )

    def _eval_eq_c_g(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        if rg > lg or rb > lb:
            return _ZERO
        opp = 3 - c
        total = _ZERO
        for f in range(1, rg + 1):
            outer = binomial(rg - 1, f - 1) * self._w(f)
            for u in range(0, lg - rg + 1):
                lower = self._dbl(fam.EQ_C, c, lg - u - f, lb, rg - f, rb)
                if lower == 0:
                    continue
                upper = _ZERO
                for v in range(0, u + 1):
                    upper += binomial(f + v - 1, f - 1) * self._s1(opp, u, v)
                total += outer * lower * upper
        return total

    def _eval_eq_c_r(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        if rg > lg or rb > lb:
            return _ZERO
        opp = 3 - c
        total = _ZERO
        for fg in range(1, rg + 1):
            code_g = binomial(rg - 1, fg - 1)
            for fb in range(1, rb + 1):
                # Blue is rooted at r as well, but its final departure need
                # not use the cut edge, hence the unshifted code count.
                outer = code_g * binomial(rb, fb) * self._w(fg + fb)
                if outer == 0:
                    continue
                for ug in range(0, lg - rg + 1):
                    for ub in range(0, lb - rb + 1):
                        lower = self._dbl(
                            fam.EQ_ANYC, c, lg - ug - fg, lb - ub - fb, rg - fg, rb - fb
                        )
                        if lower == 0:
                            continue
                        upper = _ZERO
                        for vg in range(0, ug + 1):
                            code_vg = binomial(fg + vg - 1, fg - 1)
                            for vb in range(0, ub + 1):
                                upper += (
                                    code_vg
                                    * binomial(fb + vb - 1, fb - 1)
                                    * self._dbl(fam.EQ_ANYC, opp, ug, ub, vg, vb)
                                )
                        total += outer * lower * upper
        return total

    def _eval_eq_anyc(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        # Pairs with no shared edge and a common root are exactly the pairs of
        # independent single walks glued at the root; the root's vertex factor
        # must not be counted twice.
        glued = self._s1(c, lg, rg) * self._s1(c, lb, rb) / self._alpha(c)
        return self._dbl(fam.EQ_C, c, lg, lb, rg, rb) + glued

    # -- distinct-root equations ------------------------------------------

    def _eval_neq_c(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        return self._dbl(fam.NEQ_C_G, c, lg, lb, rg, rb) + self._dbl(
            fam.NEQ_C_R, c, lg, lb, rg, rb
        )

    def _eval_neq_c_g(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        return self._dbl(fam.NEQ_C_GU, c, lg, lb, rg, rb) + self._dbl(
            fam.NEQ_C_GD, c, lg, lb, rg, rb
        )

    def _eval_neq_c_gu(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        if rb != 0 or rg > lg:
            # The blue walk lives beyond the cut edge and cannot touch r.
            return _ZERO
        opp = 3 - c
        total = _ZERO
        for f in range(1, rg + 1):
            outer = binomial(rg - 1, f - 1) * self._w(f)
            for u in range(0, lg - rg + 1):
                lower = self._s1(c, lg - u - f, rg - f)
                if lower == 0:
                    continue
                upper = _ZERO
                for vg in range(0, u + 1):
                    code_vg = binomial(f + vg - 1, f - 1)
                    for vb in range(0, lb + 1):
                        upper += code_vg * (
                            self._dbl(fam.EQ_C, opp, u, lb, vg, vb)
                            + self._dbl(fam.NEQ_C, opp, u, lb, vg, vb)
                        )
                total += outer * lower * upper
        return total

    def _eval_neq_c_gd(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        if rg > lg or rb > lb:
            return _ZERO
        opp = 3 - c
        total = _ZERO
        for f in range(1, rg + 1):
            outer = binomial(rg - 1, f - 1) * self._w(f)
            for u in range(0, lg - rg + 1):
                lower = self._dbl(fam.NEQ_C, c, lg - u - f, lb, rg - f, rb)
                if lower == 0:
                    continue
                upper = _ZERO
                for v in range(0, u + 1):
                    upper += binomial(f + v - 1, f - 1) * self._s1(opp, u, v)
                total += outer * lower * upper
        return total

    def _eval_neq_c_r(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        return self._dbl(fam.NEQ_C_RU, c, lg, lb, rg, rb) + self._dbl(
            fam.NEQ_C_RD, c, lg, lb, rg, rb
        )

    def _eval_neq_c_ru(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        if rg > lg or rb > lb:
            return _ZERO
        opp = 3 - c
        total = _ZERO
        for fg in range(1, rg + 1):
            code_g = binomial(rg - 1, fg - 1)
            for fb in range(1, rb + 1):
                # Blue root sits beyond the cut edge, so blue's final
                # departure from r must return through it.
                outer = code_g * binomial(rb - 1, fb - 1) * self._w(fg + fb)
                if outer == 0:
                    continue
                for ug in range(0, lg - rg + 1):
                    for ub in range(0, lb - rb + 1):
                        lower = self._dbl(
                            fam.EQ_ANYC, c, lg - ug - fg, lb - ub - fb, rg - fg, rb - fb
                        )
                        if lower == 0:
                            continue
                        upper = _ZERO
                        for vg in range(0, ug + 1):
                            code_vg = binomial(fg + vg - 1, fg - 1)
                            for vb in range(0, ub + 1):
                                # Either the upper pair shares the root v, or
                                # the blue root lies deeper and the upper blue
                                # walk merely visits v.
                                upper += code_vg * (
                                    binomial(fb + vb, fb)
                                    * self._dbl(fam.EQ_ANYC, opp, ug, ub, vg, vb)
                                    + binomial(fb + vb - 1, fb)
                                    * self._dbl(fam.NEQ_ANYC_S, opp, ug, ub, vg, vb)
                                )
                        total += outer * lower * upper
        return total

    def _eval_neq_c_rd(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        if rg > lg or rb > lb:
            return _ZERO
        opp = 3 - c
        total = _ZERO
        for fg in range(1, rg + 1):
            code_g = binomial(rg - 1, fg - 1)
            for fb in range(1, rb + 1):
                # Blue root on the r side: blue's final departure from r must
                # stay below, leaving fb unconstrained slots among rb - 1.
                outer = code_g * binomial(rb - 1, fb) * self._w(fg + fb)
                if outer == 0:
                    continue
                for ug in range(0, lg - rg + 1):
                    for ub in range(0, lb - rb + 1):
                        lower = self._dbl(
                            fam.NEQ_ANYC_S, c, lg - ug - fg, lb - ub - fb, rg - fg, rb - fb
                        )
                        if lower == 0:
                            continue
                        upper = _ZERO
                        for vg in range(0, ug + 1):
                            code_vg = binomial(fg + vg - 1, fg - 1)
                            for vb in range(0, ub + 1):
                                upper += (
                                    code_vg
                                    * binomial(fb + vb - 1, fb - 1)
                                    * self._dbl(fam.EQ_ANYC, opp, ug, ub, vg, vb)
                                )
                        total += outer * lower * upper
        return total

    # -- distinct-root, root-visiting equations ---------------------------

    def _eval_neq_anyc_s(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        return (
            self._dbl(fam.NEQ_C_R, c, lg, lb, rg, rb)
            + self._dbl(fam.NEQ_ANYC_SGD, c, lg, lb, rg, rb)
            + self._dbl(fam.NEQ_ANYC_SN, c, lg, lb, rg, rb)
        )

    def _eval_neq_anyc_sgd(self, key: fam.FamilyKey) -> Fraction:
        c, lg, lb, rg, rb = key.component, key.l_g, key.l_b, key.r_g, key.r_b
        if rg > lg or rb > lb:
            return _ZERO
        opp = 3 - c
        total = _ZERO
        for f in range(1, rg + 1):
            outer = binomial(rg - 1, f - 1) * self._w(f)
            for u in range(0, lg - rg + 1):
                lower = self._dbl(fam.NEQ_ANYC_S, c, lg - u - f, lb, rg - f, rb)
                if lower == 0:
                    continue
                upper = _ZERO
                for v in range(0, u + 1):
                    upper += binomial(f + v - 1, f - 1) * self._s1(opp, u, v)
                total += outer * lower * upper
        return total

    def _eval_neq_anyc_sn(self, key: fam.FamilyKey) -> Fraction:
        if key.l_g != 0 or key.r_g != 0:
            return _ZERO
        return self._s1s(key.component, key.l_b, key.r_b)

    # -- top level ---------------------------------------------------------

    def _eval_top(self, key: fam.FamilyKey) -> Fraction:
        lg, lb = key.l_g, key.l_b
        total = _ZERO
        for component in (1, 2):
            for rg in range(0, lg + 1):
                for rb in range(0, lb + 1):
                    total += self._dbl(fam.EQ_C, component, lg, lb, rg, rb)
                    total += self._dbl(fam.NEQ_C, component, lg, lb, rg, rb)
        return total
