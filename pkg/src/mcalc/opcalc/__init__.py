"""Operator calculus for higher derivatives of abstract compositions."""

from mcalc.opcalc.evaluate import evaluate_term
from mcalc.opcalc.polymap import PolyMap, symmetrize
from mcalc.opcalc.printing import format_term, to_json_obj
from mcalc.opcalc.rewrite import (
    chain_rule_base, collect, derivation, differentiate, expand_composition,
    flatten, normalize, normalize_term,
)
from mcalc.opcalc.terms import (
    Chain, Deriv, Func, FuncSymbol, Id, OpSum, OpTerm, SpaceLabel, chain, term,
)

__all__ = [
    "Chain", "Deriv", "Func", "FuncSymbol", "Id", "OpSum", "OpTerm", "PolyMap",
    "SpaceLabel", "chain", "chain_rule_base", "collect", "derivation",
    "differentiate", "evaluate_term", "expand_composition", "flatten",
    "format_term", "normalize", "to_json_obj", "normalize_term", "symmetrize", "term",
]
