"""Encode / merge / decode per functor shape, and their laws."""

import random

import pytest

from coalmin import (
    Bag,
    BagFunctor,
    Constant,
    Coproduct,
    Distribution,
    Exponent,
    Identity,
    InTerm,
    MonoidElem,
    MonoidValued,
    Polynomial,
    Position,
    Powerset,
    Product,
    SetTerm,
    StateRef,
    SymTerm,
    Tagged,
    TupleTerm,
    UNIT,
    WeightedTerm,
    basic_functor,
    decode_term,
    encode_term,
    map_term,
    merge,
    normalize_functor,
)
from coalmin.bags import fil
from coalmin.functors import (
    Atom,
    DecodeError,
    EmptyFlag,
    EXP_SYMBOL,
    MonoidTotal,
    Symbol,
    TermShapeError,
)

from gen import basic_families, rand_term

POW = basic_functor(Powerset(Identity()))
ZW = basic_functor(MonoidValued("Z", Identity()))
POLY = basic_functor(Polynomial((("f", 2), ("g", 0)), Identity()))

def S(*xs):
    return SetTerm(tuple(StateRef(x) for x in xs))

def W(**kw):
    return WeightedTerm(tuple((StateRef(k), w) for k, w in kw.items()))

# ---------------------------------------------------------------------------
# encode

def test_encode_powerset():
    v, b = encode_term(POW, S("x", "y"))
    assert v == EmptyFlag(True)
    assert b == Bag([(UNIT, "x"), (UNIT, "y")])
    v, b = encode_term(POW, S())
    assert v == EmptyFlag(False) and len(b) == 0

def test_encode_weighted():
    v, b = encode_term(ZW, W(x=3, z=5))
    assert v == MonoidTotal(8)
    assert b == Bag([(MonoidElem("Z", 3), "x"), (MonoidElem("Z", 5), "z")])

def test_encode_polynomial():
    v, b = encode_term(POLY, SymTerm("f", (StateRef("x1"), StateRef("x2"))))
    assert v == Symbol("f")
    assert b == Bag([(Position(1), "x1"), (Position(2), "x2")])
    v, b = encode_term(POLY, SymTerm("g", ()))
    assert v == Symbol("g") and len(b) == 0

def test_encode_product_and_coproduct_tags():
    f = basic_functor(Product((Powerset(Identity()), MonoidValued("Z", Identity()))))
    v, b = encode_term(f, TupleTerm((S("x"), W(y=-2))))
    assert b == Bag([(Tagged(1, UNIT), "x"), (Tagged(2, MonoidElem("Z", -2)), "y")])
    g = basic_functor(Coproduct((Powerset(Identity()), MonoidValued("Z", Identity()))))
    v, b = encode_term(g, InTerm(2, W(y=4)))
    assert b == Bag([(Tagged(2, MonoidElem("Z", 4)), "y")])

def test_encode_rejects_wrong_shapes():
    with pytest.raises(TermShapeError):
        encode_term(POW, W(x=1))
    with pytest.raises(TermShapeError):
        encode_term(POLY, SymTerm("f", (StateRef("x"),)))  # wrong arity
    with pytest.raises(TermShapeError):
        encode_term(POLY, SymTerm("nope", ()))

def test_zero_weight_entries_are_an_ingest_bug():
    with pytest.raises(ValueError):
        WeightedTerm(((StateRef("x"), 0),))

# ---------------------------------------------------------------------------
# merge

def test_merge_weighted_sums():
    got = merge(ZW, Bag([MonoidElem("Z", 3), MonoidElem("Z", 7), MonoidElem("Z", 5)]))
    assert got == Bag([MonoidElem("Z", 15)])

def test_merge_weighted_cancels_to_empty():
    got = merge(ZW, Bag([MonoidElem("Z", 2), MonoidElem("Z", -2)]))
    assert got == Bag()

def test_merge_powerset_collapses():
    assert merge(POW, Bag([UNIT, UNIT])) == Bag([UNIT])
    assert merge(POW, Bag([UNIT])) == Bag([UNIT])

def test_merge_polynomial_is_identity():
    b = Bag([Position(1), Position(2), Position(2)])
    assert merge(POLY, b) == b

def test_merge_preserves_empty_bags():
    for _, f in basic_families():
        assert merge(basic_functor(f), Bag()) == Bag()

def test_merge_tagged_dispatches_per_component():
    f = basic_functor(Product((MonoidValued("Z", Identity()), Powerset(Identity()))))
    b = Bag(
        [
            Tagged(1, MonoidElem("Z", 2)),
            Tagged(1, MonoidElem("Z", 3)),
            Tagged(2, UNIT),
            Tagged(2, UNIT),
        ]
    )
    assert merge(f, b) == Bag([Tagged(1, MonoidElem("Z", 5)), Tagged(2, UNIT)])

def test_merge_rejects_foreign_tags():
    from coalmin.functors import MergeError

    f = basic_functor(Product((Powerset(Identity()), Powerset(Identity()))))
    with pytest.raises(MergeError):
        merge(f, Bag([Tagged(3, UNIT)]))
    with pytest.raises(MergeError):
        merge(f, Bag([UNIT]))

# ---------------------------------------------------------------------------
# decode

def test_decode_powerset():
    t = decode_term(POW, EmptyFlag(True), [(UNIT, "B0")])
    assert t == S("B0")

def test_decode_weighted_fig_instance():
    t = decode_term(ZW, MonoidTotal(15), [(MonoidElem("Z", 15), "S")])
    assert t == W(S=15)

def test_decode_polynomial():
    t = decode_term(POLY, Symbol("f"), [(Position(1), "B2"), (Position(2), "B2")])
    assert t == SymTerm("f", (StateRef("B2"), StateRef("B2")))

def test_decode_rejects_malformed_pairs():
    with pytest.raises(DecodeError):
        decode_term(POLY, Symbol("f"), [(Position(1), "B0")])  # gap at 2
    with pytest.raises(DecodeError):
        decode_term(
            POLY, Symbol("f"), [(Position(1), "a"), (Position(1), "b")]
        )  # duplicate position
    with pytest.raises(DecodeError):
        decode_term(POW, EmptyFlag(True), [(UNIT, "x"), (UNIT, "x")])
    with pytest.raises(DecodeError):
        decode_term(POW, EmptyFlag(False), [(UNIT, "x")])
    with pytest.raises(DecodeError):
        decode_term(ZW, MonoidTotal(3), [(MonoidElem("Z", 2), "x")])

def test_decode_encode_roundtrip_random():
    rng = random.Random(11)
    for name, f in basic_families():
        core = normalize_functor(f)
        basic = basic_functor(core)
        for _ in range(300):
            t = rand_term(rng, core, list(range(5)))
            v, b = encode_term(basic, t)
            assert decode_term(basic, v, list(b)) == t, name

# ---------------------------------------------------------------------------
# normalization

def test_normalize_exponent():
    f = normalize_functor(Exponent(("a", "b"), Identity()))
    assert isinstance(f, Polynomial)
    assert f.signature == ((EXP_SYMBOL, 2),)
    assert f.letters == ("a", "b")

def test_normalize_distribution():
    f = normalize_functor(Distribution(Identity()))
    assert f == MonoidValued("Q", Identity())
    assert f.sugar == "dist"

def test_normalize_bag():
    f = normalize_functor(BagFunctor(Identity()))
    assert f == MonoidValued("N", Identity())
    assert f.sugar == "bag"

def test_constant_functor_must_be_nonempty():
    with pytest.raises(ValueError):
        Constant(())

# ---------------------------------------------------------------------------
# laws: merge axiom, uniformity, injectivity

def _chi(S):
    return lambda x: 1 if x in S else 0

def _random_subset(rng, xs):
    return {x for x in xs if rng.random() < 0.5}

def test_merge_axiom_random():
    rng = random.Random(23)
    states = list(range(6))
    for name, f in basic_families():
        core = normalize_functor(f)
        basic = basic_functor(core)
        for _ in range(400):
            t = rand_term(rng, core, states)
            Sset = _random_subset(rng, states)
            _, flat = encode_term(basic, t)
            lhs = merge(basic, fil(flat, Sset))
            _, flat2 = encode_term(basic, map_term(core, t, _chi(Sset)))
            rhs = fil(flat2, {1})
            assert lhs == rhs, (name, t, Sset)

def test_uniformity_random():
    rng = random.Random(29)
    states = list(range(6))
    for name, f in basic_families():
        core = normalize_functor(f)
        basic = basic_functor(core)
        for _ in range(400):
            t = rand_term(rng, core, states)
            x = rng.choice(states)
            _, flat = encode_term(basic, t)
            lhs = fil(flat, {x})
            _, flat2 = encode_term(basic, map_term(core, t, _chi({x})))
            rhs = fil(flat2, {1})
            assert lhs == rhs, (name, t, x)

def test_single_target_bags_are_merge_fixed_points():
    rng = random.Random(31)
    states = list(range(6))
    for name, f in basic_families():
        core = normalize_functor(f)
        basic = basic_functor(core)
        for _ in range(200):
            t = rand_term(rng, core, states)
            x = rng.choice(states)
            _, flat = encode_term(basic, t)
            b = fil(flat, {x})
            assert merge(basic, b) == b, (name, t, x)

def test_encoding_injectivity_random():
    rng = random.Random(37)
    states = list(range(6))
    for name, f in basic_families():
        core = normalize_functor(f)
        basic = basic_functor(core)
        for _ in range(1000):
            t1 = rand_term(rng, core, states)
            t2 = rand_term(rng, core, states)
            if t1 != t2:
                assert encode_term(basic, t1) != encode_term(basic, t2), (name, t1, t2)

def test_powerset_encoding_is_not_natural():
    # encode {0, 1}, then rename both states to the same point: two unit
    # edges survive, while encoding the renamed term gives only one.
    _, flat = encode_term(POW, S(0, 1))
    renamed_bag = Bag([(a, "*") for a, _ in flat])
    assert renamed_bag == Bag([(UNIT, "*"), (UNIT, "*")])
    _, flat_of_renamed = encode_term(POW, map_term(Powerset(Identity()), S(0, 1), lambda _: "*"))
    assert flat_of_renamed == Bag([(UNIT, "*")])
    assert renamed_bag != flat_of_renamed

def test_polynomial_encoding_is_natural():
    rng = random.Random(41)
    core = Polynomial((("f", 2), ("g", 0), ("u", 1)), Identity())
    basic = basic_functor(core)
    states = list(range(5))
    for _ in range(300):
        t = rand_term(rng, core, states)
        h = {x: rng.randrange(3) for x in states}
        _, flat = encode_term(basic, t)
        lhs = Bag([(a, h[x]) for a, x in flat])
        _, rhs = encode_term(basic, map_term(core, t, lambda x: h[x]))
        assert lhs == rhs
