"""Line-oriented instance descriptions and seeded set generators.

Grammar (segments separated by semicolons, order free except group first):

    group 3 3 3
    set {(0,0,1),(1,2,0)}          explicit elements; {0,1,3} on rank-1 groups
    set random 0.2 seed=7
    set subgroup (1,0,0) (0,1,0)
    set subgroup_plus_noise (1,0,0) k=3 seed=5
    set solution_free (1,1,1) seed=3 method=greedy
    set2 ...                       optional second set (asymmetric covers)
    eq 1 1 1                       equation coefficients
    delta=1/2 eta=1/4 eps=0.5      operation parameters; fractions allowed

All randomness is derived from the explicit per-instance seed, so building
the same text twice yields the same sets.  An unbalanced equation is a
warning, not an error: only the driver pipelines require balance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .additive import EquationSpec, PointSet, sumset
from .groups import GroupDescriptor, make_group


class ParseError(ValueError):
    """A malformed instance line, annotated with the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at column {position})")
        self.position = position


@dataclass(frozen=True)
class SetSpec:
    kind: str                      # literal | random | subgroup | subgroup_plus_noise | solution_free
    coords: tuple = ()
    density: float = 0.0
    seed: int = 0
    noise: int = 0
    coefficients: tuple[int, ...] = ()
    method: str = "greedy"


@dataclass(frozen=True)
class InstanceSpec:
    factors: tuple[int, ...]
    set_spec: SetSpec | None = None
    set2_spec: SetSpec | None = None
    equation: tuple[int, ...] | None = None
    params: dict = field(default_factory=dict)
    raw: str = ""


@dataclass(frozen=True)
class BuiltInstance:
    group: GroupDescriptor
    points: PointSet | None
    points2: PointSet | None
    equation: EquationSpec | None
    params: dict
    warnings: tuple[str, ...]
    raw: str


def _parse_value(token: str):
    try:
        return int(token)
    except ValueError:
        pass
    if "/" in token:
        try:
            return Fraction(token)
        except ValueError:
            pass
    try:
        return float(token)
    except ValueError:
        return token


def _parse_element_token(token: str, pos: int) -> tuple[int, ...]:
    t = token.strip()
    if t.startswith("(") and t.endswith(")"):
        body = t[1:-1]
        if not body:
            raise ParseError("empty element literal", pos)
        try:
            return tuple(int(x) for x in body.split(","))
        except ValueError:
            raise ParseError(f"malformed element {token!r}", pos) from None
    try:
        return (int(t),)
    except ValueError:
        raise ParseError(f"malformed element {token!r}", pos) from None


def _parse_literal_set(body: str, pos: int) -> tuple[tuple[int, ...], ...]:
    text = "".join(body.split())
    if not (text.startswith("{") and text.endswith("}")):
        raise ParseError("set literal must be enclosed in braces", pos)
    inner = text[1:-1]
    if not inner:
        return ()
    out = []
    depth = 0
    start = 0
    for i, ch in enumerate(inner):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            out.append(_parse_element_token(inner[start:i], pos))
            start = i + 1
    out.append(_parse_element_token(inner[start:], pos))
    return tuple(out)


def _split_kv(tokens: list[tuple[str, int]]) -> tuple[list[tuple[str, int]], dict]:
    plain, kv = [], {}
    for tok, pos in tokens:
        if "=" in tok:
            key, _, value = tok.partition("=")
            if not key or not value:
                raise ParseError(f"malformed parameter {tok!r}", pos)
            kv[key] = _parse_value(value)
        else:
            plain.append((tok, pos))
    return plain, kv


def _parse_set_segment(tokens: list[tuple[str, int]], seg_pos: int) -> SetSpec:
    if not tokens:
        raise ParseError("empty set specification", seg_pos)
    head, pos = tokens[0]
    if head.startswith("{"):
        body = "".join(t for t, _ in tokens)
        return SetSpec(kind="literal", coords=_parse_literal_set(body, pos))
    plain, kv = _split_kv(tokens[1:])
    if head == "random":
        if not plain:
            raise ParseError("random set needs a density", pos)
        density = float(_parse_value(plain[0][0]))
        if not 0.0 <= density <= 1.0:
            raise ParseError(f"density {density} outside [0, 1]", plain[0][1])
        return SetSpec(kind="random", density=density, seed=int(kv.get("seed", 0)))
    if head == "subgroup":
        coords = tuple(_parse_element_token(t, p) for t, p in plain)
        if not coords:
            raise ParseError("subgroup needs at least one generator", pos)
        return SetSpec(kind="subgroup", coords=coords)
    if head == "subgroup_plus_noise":
        coords = tuple(_parse_element_token(t, p) for t, p in plain)
        if not coords:
            raise ParseError("subgroup_plus_noise needs at least one generator", pos)
        return SetSpec(kind="subgroup_plus_noise", coords=coords,
                       noise=int(kv.get("k", 1)), seed=int(kv.get("seed", 0)))
    if head == "solution_free":
        if not plain:
            raise ParseError("solution_free needs coefficients", pos)
        coeffs = _parse_element_token(plain[0][0], plain[0][1])
        method = str(kv.get("method", "greedy"))
        if method != "greedy":
            raise ParseError(f"unknown solution_free method {method!r}", pos)
        return SetSpec(kind="solution_free", coefficients=coeffs,
                       seed=int(kv.get("seed", 0)), method=method)
    raise ParseError(f"unknown set kind {head!r}", pos)


def parse_instance(text: str) -> InstanceSpec:
    """Parse one instance line; raises ParseError with a column number."""
    factors: tuple[int, ...] | None = None
    set_spec = set2_spec = None
    equation = None
    params: dict = {}

    offset = 0
    for segment in text.split(";"):
        seg_pos = offset
        offset += len(segment) + 1
        if not segment.strip():
            continue
        tokens: list[tuple[str, int]] = []
        col = seg_pos
        for tok in segment.split(" "):
            if tok:
                tokens.append((tok, col))
            col += len(tok) + 1
        head, pos = tokens[0]
        rest = tokens[1:]
        if head == "group":
            try:
                factors = tuple(int(t) for t, _ in rest)
            except ValueError:
                raise ParseError("group factors must be integers", pos) from None
            if not factors:
                raise ParseError("group needs at least one factor", pos)
        elif head == "set":
            set_spec = _parse_set_segment(rest, pos)
        elif head == "set2":
            set2_spec = _parse_set_segment(rest, pos)
        elif head == "eq":
            try:
                equation = tuple(int(t) for t, _ in rest)
            except ValueError:
                raise ParseError("equation coefficients must be integers", pos) from None
            if len(equation) < 3:
                raise ParseError("equation needs at least 3 coefficients", pos)
        elif "=" in head:
            _, kv = _split_kv(tokens)
            params.update(kv)
        else:
            raise ParseError(f"unknown field {head!r}", pos)
    if factors is None:
        raise ParseError("instance has no group", 0)
    return InstanceSpec(factors=factors, set_spec=set_spec, set2_spec=set2_spec,
                        equation=equation, params=params, raw=text.strip())


# -- seeded generators ---------------------------------------------------------


def random_point_set(group: GroupDescriptor, density: float, seed: int) -> PointSet:
    rng = np.random.default_rng([0x5D, int(seed) & 0x7FFFFFFF])
    return PointSet.from_mask(group, rng.random(group.order) < density)


def random_nonempty_set(group: GroupDescriptor, density: float, seed: int) -> PointSet:
    """Redraw from the same stream until nonempty; used by the suites."""
    rng = np.random.default_rng([0x5D, int(seed) & 0x7FFFFFFF])
    while True:
        ps = PointSet.from_mask(group, rng.random(group.order) < density)
        if ps.size:
            return ps


def subgroup_set(group: GroupDescriptor, generators) -> PointSet:
    """Closure of the generators under addition (hence under inverses too)."""
    mask = np.zeros(group.order, dtype=bool)
    mask[0] = True
    gen_idx = [group.index_of(g) for g in generators]
    changed = True
    while changed:
        changed = False
        for t in gen_idx:
            grown = mask | mask[group.shift_perm(group.neg_index(t))]
            if grown.sum() != mask.sum():
                mask = grown
                changed = True
    return PointSet.from_mask(group, mask)


def subgroup_plus_noise(group: GroupDescriptor, generators, k: int, seed: int) -> PointSet:
    base = subgroup_set(group, generators)
    rng = np.random.default_rng([0x50, int(seed) & 0x7FFFFFFF])
    outside = np.flatnonzero(~base.mask)
    if len(outside) == 0 or k <= 0:
        return base
    take = rng.choice(outside, size=min(k, len(outside)), replace=False)
    return base.union(PointSet.from_indices(group, take))


def _extends_solution_free(group: GroupDescriptor, members: list[int],
                           member_bits: int, candidate: int,
                           eq: EquationSpec) -> bool:
    """True when members + candidate still has no pairwise-distinct solution.

    Only solutions through the candidate need checking; the candidate is
    fixed at each coefficient position in turn and the rest enumerated.
    """
    p = eq.modulus
    coords = group.coords_table
    facs = group._factors_arr
    r = eq.r
    pool = members + [candidate]
    for fixed_pos in range(r):
        order = [fixed_pos] + [i for i in range(r) if i != fixed_pos]
        last = order[-1]
        last_inv = pow(eq.coefficients[last], -1, p)
        chosen = [candidate]
        acc0 = (eq.coefficients[fixed_pos] * coords[candidate]) % facs

        def search(depth: int, acc: np.ndarray) -> bool:
            if depth == r - 1:
                need = int(group.ravel_coords(((-last_inv * acc) % p).reshape(1, -1))[0])
                return bool((member_bits >> need) & 1 or need == candidate) \
                    and need not in chosen
            pos = order[depth]
            for idx in pool:
                if idx in chosen:
                    continue
                chosen.append(idx)
                if search(depth + 1, (acc + eq.coefficients[pos] * coords[idx]) % facs):
                    return True
                chosen.pop()
            return False

        if search(1, acc0):
            return False
    return True


def solution_free_set(group: GroupDescriptor, eq: EquationSpec, seed: int) -> PointSet:
    """Randomized greedy construction of a set with no pairwise-distinct
    ordered solution to the equation."""
    rng = np.random.default_rng([0x5F, int(seed) & 0x7FFFFFFF])
    order = rng.permutation(group.order)
    members: list[int] = []
    bits = 0
    for idx in order:
        idx = int(idx)
        if _extends_solution_free(group, members, bits, idx, eq):
            members.append(idx)
            bits |= 1 << idx
    return PointSet(group, bits)


def build_instance(spec: InstanceSpec, default_seed: int = 0,
                   max_order: int | None = None) -> BuiltInstance:
    """Materialize an InstanceSpec: group, sets, equation and warnings."""
    group = make_group(spec.factors, max_order)
    warnings: list[str] = []
    equation = None
    if spec.equation is not None:
        p = group.prime_field
        if p is None:
            raise ValueError("equations require a prime-field group")
        equation = EquationSpec(p, spec.equation)
        if not equation.balanced:
            s = sum(equation.coefficients) % p
            warnings.append(f"equation is unbalanced: coefficient sum is {s} mod {p}")

    def materialize(ss: SetSpec | None) -> PointSet | None:
        if ss is None:
            return None
        if ss.kind == "literal":
            return PointSet.from_coords(group, ss.coords)
        if ss.kind == "random":
            return random_point_set(group, ss.density, ss.seed or default_seed)
        if ss.kind == "subgroup":
            return subgroup_set(group, ss.coords)
        if ss.kind == "subgroup_plus_noise":
            return subgroup_plus_noise(group, ss.coords, ss.noise,
                                       ss.seed or default_seed)
        if ss.kind == "solution_free":
            p = group.prime_field
            if p is None:
                raise ValueError("solution_free requires a prime-field group")
            gen_eq = EquationSpec(p, ss.coefficients)
            return solution_free_set(group, gen_eq, ss.seed or default_seed)
        raise ValueError(f"unknown set kind {ss.kind!r}")

    points = materialize(spec.set_spec)
    points2 = materialize(spec.set2_spec)
    return BuiltInstance(group=group, points=points, points2=points2,
                         equation=equation, params=dict(spec.params),
                         warnings=tuple(warnings), raw=spec.raw)
