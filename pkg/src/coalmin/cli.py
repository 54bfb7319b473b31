"""End-to-end pipeline and command line front end.

parse -> flatten -> refine -> quotient -> (reachability -> restrict) ->
un-flatten -> print.  The output document uses the same term syntax as
the input, names the surviving blocks ``B0, B1, ...``, maps the original
state names onto them, and reports sizes.

Exit codes: 0 success, 1 rejected input, 2 internal consistency failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

from .functors import (
    AtomTerm,
    BagFunctor,
    Constant,
    Coproduct,
    DecodeError,
    Distribution,
    Exponent,
    FunctorExpr,
    Identity,
    InTerm,
    MonoidValued,
    Polynomial,
    Powerset,
    Product,
    SetTerm,
    StateRef,
    SymTerm,
    Term,
    TermShapeError,
    TupleTerm,
    WeightedTerm,
)
from .ingest import ConsistencyError, EncodedCoalgebra, InputSpec, ParseError, flatten, parse
from .quotient import build_quotient
from .reach import reachable, restrict
from .refine import refine

__all__ = ["MinimizeResult", "minimize", "minimize_text", "unflatten_terms", "main"]


# ---------------------------------------------------------------------------
# printing


def format_weight(w) -> str:
    if isinstance(w, Fraction) and w.denominator != 1:
        return f"{w.numerator}/{w.denominator}"
    return str(int(w))


def render_term(f: FunctorExpr, t: Term) -> str:
    """Render a core term in the input syntax of the (sugar-carrying)
    functor expression ``f``."""
    if isinstance(f, Identity):
        assert isinstance(t, StateRef)
        return str(t.state)
    if isinstance(f, Constant):
        assert isinstance(t, AtomTerm)
        return t.name
    if isinstance(f, Powerset):
        assert isinstance(t, SetTerm)
        return "{" + ",".join(render_term(f.child, e) for e in t.elems) + "}"
    if isinstance(f, BagFunctor) or (
        isinstance(f, MonoidValued) and f.sugar == "bag"
    ):
        child = f.child
        assert isinstance(t, WeightedTerm)
        parts = []
        for k, w in t.entries:
            parts.extend([render_term(child, k)] * int(w))
        return "{" + ",".join(parts) + "}"
    if isinstance(f, (MonoidValued, Distribution)):
        child = f.child
        assert isinstance(t, WeightedTerm)
        inner = ", ".join(
            f"{render_term(child, k)}: {format_weight(w)}" for k, w in t.entries
        )
        return "{" + inner + "}"
    if isinstance(f, Exponent):
        assert isinstance(t, SymTerm) and len(t.args) == len(f.letters)
        inner = ", ".join(
            f"{l}: {render_term(f.child, a)}" for l, a in zip(f.letters, t.args)
        )
        return "{" + inner + "}"
    if isinstance(f, Polynomial):
        assert isinstance(t, SymTerm)
        if not t.args:
            return t.symbol
        return t.symbol + "(" + ",".join(render_term(f.child, a) for a in t.args) + ")"
    if isinstance(f, Product):
        assert isinstance(t, TupleTerm)
        return "(" + ",".join(
            render_term(c, i) for c, i in zip(f.children, t.items)
        ) + ")"
    if isinstance(f, Coproduct):
        assert isinstance(t, InTerm)
        return f"in{t.index} " + render_term(f.children[t.index - 1], t.inner)
    raise TypeError(f"cannot render terms of {f!r}")


def render_functor(f: FunctorExpr) -> str:
    """Render a functor expression (used when no verbatim input text is
    available, e.g. for programmatically built systems)."""

    def atom(g: FunctorExpr) -> str:
        s = render_functor(g)
        if isinstance(g, (Identity, Constant, Exponent)):
            return s
        return "(" + s + ")"

    def unary(g: FunctorExpr) -> str:
        s = render_functor(g)
        if isinstance(g, (Product, Coproduct)):
            return "(" + s + ")"
        return s

    if isinstance(f, Identity):
        return "X"
    if isinstance(f, Constant):
        return "C{" + ",".join(f.atoms) + "}"
    if isinstance(f, Powerset):
        return "P " + unary(f.child)
    if isinstance(f, BagFunctor):
        return "B " + unary(f.child)
    if isinstance(f, Distribution):
        return "D " + unary(f.child)
    if isinstance(f, MonoidValued):
        if f.sugar == "bag":
            return "B " + unary(f.child)
        if f.sugar == "dist":
            return "D " + unary(f.child)
        return f"{f.monoid}^(" + render_functor(f.child) + ")"
    if isinstance(f, Exponent):
        return atom(f.child) + "^C{" + ",".join(f.letters) + "}"
    if isinstance(f, Polynomial):
        if f.letters is not None:
            return atom(f.child) + "^C{" + ",".join(f.letters) + "}"
        sig = ",".join(f"{s}/{n}" for s, n in f.signature)
        return "Sig{" + sig + "} " + unary(f.child)
    if isinstance(f, Product):
        return " x ".join(
            "(" + render_functor(c) + ")" if isinstance(c, (Product, Coproduct)) else render_functor(c)
            for c in f.children
        )
    if isinstance(f, Coproduct):
        return " + ".join(
            "(" + render_functor(c) + ")" if isinstance(c, Coproduct) else render_functor(c)
            for c in f.children
        )
    raise TypeError(f"not a functor expression: {f!r}")


# ---------------------------------------------------------------------------
# un-flattening


def _subst(t: Term, f) -> Term:
    """Replace every state reference by ``f(state)`` (a whole term)."""
    if isinstance(t, StateRef):
        return f(t.state)
    if isinstance(t, AtomTerm):
        return t
    if isinstance(t, SetTerm):
        return SetTerm(tuple(_subst(e, f) for e in t.elems))
    if isinstance(t, WeightedTerm):
        return WeightedTerm(tuple((_subst(k, f), w) for k, w in t.entries))
    if isinstance(t, SymTerm):
        return SymTerm(t.symbol, tuple(_subst(a, f) for a in t.args))
    if isinstance(t, TupleTerm):
        return TupleTerm(tuple(_subst(i, f) for i in t.items))
    if isinstance(t, InTerm):
        return InTerm(t.index, _subst(t.inner, f))
    raise TypeError(f"not a term: {t!r}")


def unflatten_terms(C: EncodedCoalgebra) -> list[Term]:
    """Reconstruct one composed term per sort-0 state.

    Intermediate-sort states are decoded and inlined at every occurrence;
    sort-0 targets stay as references carrying the state's display name.
    Flattening never creates cycles among intermediate sorts, so the
    substitution terminates.
    """
    memo: dict[int, Term] = {}

    def resolve(i: int) -> Term:
        if C.sort_of[i] == 0:
            return StateRef(C.names[i])
        return full_term(i)

    def full_term(x: int) -> Term:
        if x in memo:
            return memo[x]
        v, pairs = C.state_payload(x)
        depth_one = C.sorts[C.sort_of[x]].decode(v, pairs)
        t = _subst(depth_one, resolve)
        memo[x] = t
        return t

    return [full_term(x) for x in range(C.n) if C.sort_of[x] == 0]


# ---------------------------------------------------------------------------
# the pipeline


@dataclass
class MinimizeResult:
    document: str
    stats: dict
    system: EncodedCoalgebra


def minimize(
    spec: InputSpec, *, no_reach: bool = False, check: bool = False
) -> MinimizeResult:
    """Compute the reachable part of the simple quotient and print it."""
    t0 = time.perf_counter()
    C = flatten(spec)
    states_in = C.n_user
    edges_in = C.m

    P = refine(C)
    Q = build_quotient(C, P, check=check)

    dropped = 0
    if spec.initial is not None and not no_reach:
        keep = reachable(Q, Q.initial)
        dropped = Q.n - len(keep)
        final = restrict(Q, keep)
    else:
        final = Q

    # final display names; sort-0 blocks come first so these are B0..B{k-1}
    block_names = [f"B{i}" for i in range(final.n)]
    final.names = block_names

    # original user state -> final block (blocks dropped as unreachable map nowhere)
    if final is Q:
        old_to_new = {b: b for b in range(Q.n)}
    else:
        old_to_new = {old: i for i, old in enumerate(sorted(keep))}

    assignment: list[tuple[str, str | None]] = []
    for i, (name, _) in enumerate(spec.states):
        b = P.block_of[i]
        if b in old_to_new:
            assignment.append((name, f"B{old_to_new[b]}"))
        else:
            assignment.append((name, None))

    terms = unflatten_terms(final)
    wall_ms = (time.perf_counter() - t0) * 1000.0

    lines = []
    functor_text = spec.functor_text or render_functor(spec.functor)
    lines.append(f"functor: {functor_text}")
    if spec.initial is not None:
        assert final.initial is not None
        lines.append(f"initial: B{final.initial}")
    for i, t in enumerate(terms):
        lines.append(f"B{i}: " + render_term(spec.functor, t))
    lines.append("")
    lines.append("partition:")
    for name, block in assignment:
        if block is not None:
            lines.append(f"  {name} -> {block}")
    lines.append("")
    lines.append("stats:")
    lines.append(f"  states: {states_in} -> {final.n_user}")
    lines.append(f"  edges: {edges_in} -> {final.m}")
    lines.append(f"  rounds: {P.rounds}")

    stats = {
        "states_in": states_in,
        "states_out": final.n_user,
        "edges_in": edges_in,
        "edges_out": final.m,
        "rounds": P.rounds,
        "reachable_dropped": dropped,
        "wall_ms": wall_ms,
    }
    return MinimizeResult("\n".join(lines) + "\n", stats, final)


def minimize_text(
    text: str,
    *,
    no_reach: bool = False,
    check: bool = False,
    allow_block_names: bool = False,
) -> MinimizeResult:
    return minimize(
        parse(text, allow_block_names=allow_block_names),
        no_reach=no_reach,
        check=check,
    )


# ---------------------------------------------------------------------------
# command line


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="coalmin",
        description="Minimize a finite state-based system: merge behaviourally "
        "equivalent states and drop unreachable ones.",
    )
    ap.add_argument("input", help="input file, or '-' for standard input")
    ap.add_argument(
        "--no-reach",
        action="store_true",
        help="skip the reachability stage even if an initial state is given",
    )
    ap.add_argument(
        "--stats-json",
        action="store_true",
        help="additionally print one line of JSON statistics to stderr",
    )
    ap.add_argument(
        "--check",
        action="store_true",
        help="verify representative independence and index-array hygiene "
        "(slower; for debugging)",
    )
    ap.add_argument(
        "--allow-block-names",
        action="store_true",
        help="accept state names like B0, B1 (needed to re-minimize this "
        "tool's own output)",
    )
    args = ap.parse_args(argv)

    try:
        if args.input == "-":
            text = sys.stdin.read()
        else:
            with open(args.input, "r", encoding="utf-8") as fh:
                text = fh.read()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    try:
        result = minimize_text(
            text,
            no_reach=args.no_reach,
            check=args.check,
            allow_block_names=args.allow_block_names,
        )
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ConsistencyError, DecodeError, TermShapeError) as e:
        print(f"internal consistency failure: {e}", file=sys.stderr)
        return 2

    sys.stdout.write(result.document)
    if args.stats_json:
        print(json.dumps(result.stats), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
