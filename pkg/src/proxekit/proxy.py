"""Primitive-set proxies, their JSON file format, and proxy diffs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .superquadric import SuperquadricParams, wrap_angle

# fixed 16-colour palette handed out to primitives in id order
PALETTE: tuple[tuple[int, int, int], ...] = (
    (230, 25, 75),
    (60, 180, 75),
    (255, 225, 25),
    (0, 130, 200),
    (245, 130, 48),
    (145, 30, 180),
    (70, 240, 240),
    (240, 50, 230),
    (210, 245, 60),
    (250, 190, 212),
    (0, 128, 128),
    (220, 190, 255),
    (170, 110, 40),
    (128, 0, 0),
    (170, 255, 195),
    (0, 0, 128),
)


def palette_color(index: int) -> tuple[int, int, int]:
    return PALETTE[index % len(PALETTE)]


class ProxyFormatError(ValueError):
    """A proxy file does not follow the schema; ``path`` names the bad field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class DuplicateIdError(ValueError):
    pass


@dataclass(frozen=True)
class Primitive:
    id: int
    params: SuperquadricParams
    color: tuple[int, int, int] = (128, 128, 128)

    def __post_init__(self):
        if isinstance(self.id, bool) or not isinstance(self.id, int) or self.id < 0:
            raise ValueError(f"primitive id must be a non-negative integer, got {self.id!r}")
        color = tuple(self.color)
        if len(color) != 3 or not all(isinstance(c, int) and 0 <= c <= 255 for c in color):
            raise ValueError(f"color must be 3 integers in [0, 255], got {self.color!r}")
        object.__setattr__(self, "color", color)


@dataclass(frozen=True)
class Proxy:
    primitives: tuple[Primitive, ...] = ()
    category: str = "object"

    def __post_init__(self):
        prims = tuple(self.primitives)
        seen = set()
        for prim in prims:
            if prim.id in seen:
                raise DuplicateIdError(f"duplicate primitive id {prim.id}")
            seen.add(prim.id)
        object.__setattr__(self, "primitives", prims)

    @property
    def ids(self) -> list[int]:
        return [p.id for p in self.primitives]

    def get(self, prim_id: int) -> Primitive:
        for prim in self.primitives:
            if prim.id == prim_id:
                return prim
        raise KeyError(prim_id)

    def __contains__(self, prim_id) -> bool:
        return any(p.id == prim_id for p in self.primitives)

    def __len__(self) -> int:
        return len(self.primitives)


@dataclass(frozen=True)
class PrimitiveDiff:
    """Classification of an edited proxy against the original.

    ``added`` and ``deleted`` together form the "new" group.
    """

    unchanged: frozenset[int] = frozenset()
    edited: tuple[tuple[Primitive, Primitive], ...] = ()
    added: tuple[Primitive, ...] = ()
    deleted: tuple[Primitive, ...] = ()

    @property
    def edited_ids(self) -> list[int]:
        return [orig.id for orig, _ in self.edited]

    @property
    def added_ids(self) -> list[int]:
        return [p.id for p in self.added]

    @property
    def deleted_ids(self) -> list[int]:
        return [p.id for p in self.deleted]

    @property
    def is_identity(self) -> bool:
        return not (self.edited or self.added or self.deleted)


# -- serialization -----------------------------------------------------------

_FIELDS = ("id", "color", "scale", "shape", "translation", "rotation")


def _round9(x: float) -> float:
    return float(f"{x:.9g}")


def proxy_to_dict(proxy: Proxy) -> dict:
    prims = []
    for prim in proxy.primitives:
        q = prim.params
        prims.append(
            {
                "id": prim.id,
                "color": list(prim.color),
                "scale": [_round9(v) for v in q.scale],
                "shape": [_round9(v) for v in q.shape],
                "translation": [_round9(v) for v in q.translation],
                "rotation": [_round9(v) for v in q.rotation],
            }
        )
    return {"category": proxy.category, "primitives": prims}


def save_proxy(proxy: Proxy) -> bytes:
    """Serialize to UTF-8 JSON with numbers rounded to 9 significant digits."""
    return (json.dumps(proxy_to_dict(proxy), indent=2) + "\n").encode("utf-8")


def _number_list(value, n: int, path: str) -> list[float]:
    if not isinstance(value, list) or len(value) != n:
        raise ProxyFormatError(path, f"expected a list of {n} numbers")
    out = []
    for k, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ProxyFormatError(f"{path}[{k}]", f"expected a finite number, got {v!r}")
        out.append(float(v))
    return out


def _parse_primitive(raw, path: str) -> Primitive:
    if not isinstance(raw, dict):
        raise ProxyFormatError(path, "expected an object")
    for key in raw:
        if key not in _FIELDS:
            raise ProxyFormatError(f"{path}.{key}", "unknown field")
    for key in _FIELDS:
        if key not in raw:
            raise ProxyFormatError(f"{path}.{key}", "missing field")
    prim_id = raw["id"]
    if isinstance(prim_id, bool) or not isinstance(prim_id, int) or prim_id < 0:
        raise ProxyFormatError(f"{path}.id", f"expected a non-negative integer, got {prim_id!r}")
    color = raw["color"]
    if not isinstance(color, list) or len(color) != 3:
        raise ProxyFormatError(f"{path}.color", "expected a list of 3 integers")
    for k, c in enumerate(color):
        if isinstance(c, bool) or not isinstance(c, int) or not 0 <= c <= 255:
            raise ProxyFormatError(f"{path}.color[{k}]", f"expected an integer in [0, 255], got {c!r}")
    scale = _number_list(raw["scale"], 3, f"{path}.scale")
    for k, a in enumerate(scale):
        if a <= 0.0:
            raise ProxyFormatError(f"{path}.scale[{k}]", f"scale must be > 0, got {a}")
    shape = _number_list(raw["shape"], 2, f"{path}.shape")
    for k, e in enumerate(shape):
        if e <= 0.0:
            raise ProxyFormatError(f"{path}.shape[{k}]", f"shape exponent must be > 0, got {e}")
    params = SuperquadricParams(
        tuple(scale),
        tuple(shape),
        tuple(_number_list(raw["translation"], 3, f"{path}.translation")),
        tuple(_number_list(raw["rotation"], 3, f"{path}.rotation")),
    )
    return Primitive(prim_id, params, tuple(color))


def proxy_from_dict(data) -> Proxy:
    if not isinstance(data, dict):
        raise ProxyFormatError("$", "expected a JSON object")
    for key in data:
        if key not in ("category", "primitives"):
            raise ProxyFormatError(key, "unknown field")
    category = data.get("category")
    if not isinstance(category, str):
        raise ProxyFormatError("category", "expected a string")
    raw_prims = data.get("primitives")
    if not isinstance(raw_prims, list):
        raise ProxyFormatError("primitives", "expected a list")
    prims = [_parse_primitive(raw, f"primitives[{i}]") for i, raw in enumerate(raw_prims)]
    seen: dict[int, int] = {}
    for i, prim in enumerate(prims):
        if prim.id in seen:
            raise DuplicateIdError(
                f"duplicate primitive id {prim.id} at primitives[{seen[prim.id]}] and primitives[{i}]"
            )
        seen[prim.id] = i
    return Proxy(tuple(prims), category)


def load_proxy(data: bytes | str) -> Proxy:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProxyFormatError("$", f"not UTF-8 text ({exc})") from None
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ProxyFormatError("$", f"invalid JSON: {exc}") from None
    return proxy_from_dict(raw)


# -- diff ----------------------------------------------------------------------


def params_close(q1: SuperquadricParams, q2: SuperquadricParams, tol: float = 1e-6) -> bool:
    """Per-parameter comparison: relative for scale/shape/translation, absolute for angles.

    Translations also get an absolute floor of ``tol`` so that values near the
    origin do not count as edits.
    """
    for x, y in zip(q1.scale + q1.shape, q2.scale + q2.shape):
        if not math.isclose(x, y, rel_tol=tol, abs_tol=0.0):
            return False
    for x, y in zip(q1.translation, q2.translation):
        if not math.isclose(x, y, rel_tol=tol, abs_tol=tol):
            return False
    for x, y in zip(q1.rotation, q2.rotation):
        if abs(wrap_angle(x - y)) > tol:
            return False
    return True


def diff_proxies(orig: Proxy, edit: Proxy, tol: float = 1e-6) -> PrimitiveDiff:
    """Classify primitives by stable id into unchanged / edited / added / deleted."""
    orig_by_id = {p.id: p for p in orig.primitives}
    edit_ids = set(edit.ids)
    unchanged = set()
    edited = []
    added = []
    for prim in edit.primitives:
        before = orig_by_id.get(prim.id)
        if before is None:
            added.append(prim)
        elif params_close(before.params, prim.params, tol):
            unchanged.add(prim.id)
        else:
            edited.append((before, prim))
    deleted = [p for p in orig.primitives if p.id not in edit_ids]
    return PrimitiveDiff(frozenset(unchanged), tuple(edited), tuple(added), tuple(deleted))
