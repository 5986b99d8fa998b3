"""The typecheck cache.

An entry records why a method body is known to be safe: the signature it
was checked against, the exact premethod, the body's result type, the
type-table keys the check consulted, and the table the check ran under.
Because the checker is deterministic, re-running it on those inputs
reproduces the derivation, so no proof tree is stored.

Caches are plain dicts treated as immutable values: every operation
returns a new dict.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Optional

from .syntax import MethType, Premethod, ValType
from .typechecker import (
    MethodKey, StaticTypeError, TypeTable, body_env, subtype, typecheck,
)

DynClassTable = Mapping[MethodKey, Premethod]


@dataclass(frozen=True)
class CacheEntry:
    method_type: MethType
    body: Premethod
    result_type: ValType
    deps: frozenset
    table_snapshot: TypeTable


Cache = Mapping[MethodKey, CacheEntry]

EMPTY: Cache = {}


def lookup(x: Cache, key: MethodKey) -> Optional[CacheEntry]:
    return x.get(key)


def store(x: Cache, key: MethodKey, entry: CacheEntry) -> dict:
    out = dict(x)
    out[key] = entry
    return out


def invalidate(x: Cache, key: MethodKey) -> dict:
    """Drop the entry for ``key`` and every entry whose check consulted ``key``."""
    return {k: c for k, c in x.items() if k != key and key not in c.deps}


def upgrade(x: Cache, tt_new: TypeTable) -> dict:
    """Re-point every entry at ``tt_new``.

    Only sound right after ``invalidate`` for the key that changed: the
    surviving derivations never looked that key up.
    """
    return {k: replace(c, table_snapshot=tt_new) for k, c in x.items()}


def rederive(key: MethodKey, c: CacheEntry, tt: Optional[TypeTable] = None) -> bool:
    """Replay the stored derivation (under ``tt`` or the entry's own table)."""
    table = c.table_snapshot if tt is None else tt
    try:
        r = typecheck(table, body_env(c.body.param, c.method_type, key[0]), c.body.body)
    except StaticTypeError:
        return False
    return r.typ == c.result_type and r.deps == c.deps


def entry_consistent(key: MethodKey, c: CacheEntry, tt: TypeTable, dt: DynClassTable) -> bool:
    if dt.get(key) != c.body or tt.get(key) != c.method_type:
        return False
    if c.table_snapshot is not tt and c.table_snapshot != tt:
        return False
    return rederive(key, c) and subtype(c.result_type, c.method_type.rng)


def consistent(x: Cache, tt: TypeTable, dt: DynClassTable) -> bool:
    return all(entry_consistent(k, c, tt, dt) for k, c in x.items())


def inconsistencies(x: Cache, tt: TypeTable, dt: DynClassTable) -> list[str]:
    """Human-readable reasons ``consistent`` fails, one per bad entry."""
    bad = []
    for key, c in x.items():
        name = f"{key[0]}.{key[1]}"
        if dt.get(key) != c.body:
            bad.append(f"{name}: cached body differs from the defined body")
        elif tt.get(key) != c.method_type:
            bad.append(f"{name}: cached signature {c.method_type} differs from {tt.get(key)}")
        elif c.table_snapshot is not tt and c.table_snapshot != tt:
            bad.append(f"{name}: derivation was built against a stale type table")
        elif not rederive(key, c):
            bad.append(f"{name}: stored derivation does not replay")
        elif not subtype(c.result_type, c.method_type.rng):
            bad.append(f"{name}: result {c.result_type} is not a subtype of {c.method_type.rng}")
    return bad
