"""coalmin: generic minimization of finite state-based systems.

Systems are coalgebras for a compositional zoo of set functors
(powerset, weighted, probabilistic, polynomial, products, coproducts,
composition), given in a graph-like encoding.  The tool computes the
reachable part of the simple quotient: the smallest system with the same
behaviour from the initial state.
"""

from .bags import (
    Bag,
    EMPTY_BAG,
    GroupedBag,
    Label,
    MonoidElem,
    Position,
    Tagged,
    UNIT,
    fil,
    group,
    ungroup,
)
from .functors import (
    AtomTerm,
    BagFunctor,
    BasicFunctor,
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
    basic_functor,
    decode_term,
    encode_term,
    map_term,
    merge,
    normalize_functor,
)
from .ingest import (
    ConsistencyError,
    EncodedCoalgebra,
    InputSpec,
    ParseError,
    flatten,
    parse,
)
from .oracle import oracle_canonical_successors, oracle_partition, oracle_reachable
from .quotient import build_quotient
from .reach import reachable, restrict
from .refine import Partition, refine, signature
from .cli import MinimizeResult, minimize, minimize_text

__version__ = "0.1.0"
