"""Line-oriented edit scripts over proxies.

Example script::

    # lengthen the legs
    scale #3 #4 by 1 1 1.5
    translate #1 by 0 0.1 0
    rotate #2 by 0 0 0.5
    shape #0 by 0.2 0.2
    delete #7
    add #9 scale 0.1 0.1 0.1 shape 1 1 at 0 0 0.3 rot 0 0 0
    clone #3 as #10 offset 0.2 0 0

Verbs and keywords are case-insensitive.  ``#`` followed by a digit is a
primitive selector; any other ``#`` starts a comment that runs to the end of
the line.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .proxy import Primitive, Proxy, palette_color
from .superquadric import SuperquadricParams, euler_to_matrix, matrix_to_euler

VERBS = ("SCALE", "TRANSLATE", "ROTATE", "SHAPE", "DELETE", "ADD", "CLONE")
_BY_ARITY = {"SCALE": 3, "TRANSLATE": 3, "ROTATE": 3, "SHAPE": 2}

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")
_SELECTOR = re.compile(r"#(\d+)\Z")
_TOKEN = re.compile(r"\S+")


class ScriptError(Exception):
    """Base class for edit-script failures; carries a 1-based position."""

    def __init__(self, message: str, line: int, col: int):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{message} at line {line}, col {col}")


class ScriptSyntaxError(ScriptError):
    pass


class EditError(ScriptError):
    pass


@dataclass(frozen=True)
class EditCommand:
    verb: str
    ids: tuple[int, ...]
    payload: tuple[float, ...] = ()
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class EditScript:
    commands: tuple[EditCommand, ...] = ()
    source: str = field(default="", compare=False)

    def __iter__(self):
        return iter(self.commands)

    def __len__(self) -> int:
        return len(self.commands)


@dataclass
class _Token:
    text: str
    col: int


class _LineParser:
    def __init__(self, tokens: list[_Token], line_no: int, end_col: int):
        self.tokens = tokens
        self.pos = 0
        self.line_no = line_no
        self.end_col = end_col

    def error(self, message: str, tok: _Token | None = None) -> ScriptSyntaxError:
        col = tok.col if tok is not None else self.end_col
        return ScriptSyntaxError(message, self.line_no, col)

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self, what: str) -> _Token:
        tok = self.peek()
        if tok is None:
            raise self.error(f"expected {what}, got end of line")
        self.pos += 1
        return tok

    def keyword(self, word: str) -> None:
        tok = self.next(f"'{word}'")
        if tok.text.lower() != word:
            raise self.error(f"expected '{word}', got '{tok.text}'", tok)

    def selector(self) -> tuple[int, _Token]:
        tok = self.next("selector '#<id>'")
        m = _SELECTOR.match(tok.text)
        if m is None:
            raise self.error(f"expected selector '#<id>', got '{tok.text}'", tok)
        return int(m.group(1)), tok

    def selectors(self) -> list[int]:
        ids = [self.selector()[0]]
        while (tok := self.peek()) is not None and tok.text.startswith("#"):
            ids.append(self.selector()[0])
        return ids

    def numbers(self, n: int, after: str) -> tuple[float, ...]:
        values = []
        for k in range(n):
            tok = self.peek()
            if tok is None:
                raise self.error(f"expected {n} numbers after '{after}', got {k}")
            if _NUMBER.match(tok.text) is None or not math.isfinite(float(tok.text)):
                raise self.error(f"expected a number, got '{tok.text}'", tok)
            self.pos += 1
            values.append(float(tok.text))
        return tuple(values)

    def finish(self, verb: str) -> None:
        tok = self.peek()
        if tok is not None:
            raise self.error(f"too many arguments for {verb.lower()}: unexpected '{tok.text}'", tok)


def _tokenize(line: str) -> list[_Token]:
    tokens = []
    for m in _TOKEN.finditer(line):
        text = m.group(0)
        if text.startswith("#") and not text[1:2].isdigit():
            break
        tokens.append(_Token(text, m.start() + 1))
    return tokens


def parse_script(text: str) -> EditScript:
    """Parse script text; raises :class:`ScriptSyntaxError` at the first bad token."""
    commands = []
    new_ids: dict[int, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(line)
        if not tokens:
            continue
        p = _LineParser(tokens, line_no, tokens[-1].col + len(tokens[-1].text))
        head = p.next("verb")
        verb = head.text.upper()
        if verb not in VERBS:
            raise p.error(f"unknown verb '{head.text}'", head)

        if verb in _BY_ARITY:
            ids = p.selectors()
            p.keyword("by")
            payload = p.numbers(_BY_ARITY[verb], "by")
        elif verb == "DELETE":
            ids = p.selectors()
            payload = ()
        elif verb == "ADD":
            new_id, id_tok = p.selector()
            payload = ()
            for word, n in (("scale", 3), ("shape", 2), ("at", 3), ("rot", 3)):
                p.keyword(word)
                payload += p.numbers(n, word)
            if new_id in new_ids:
                raise p.error(f"duplicate add id {new_id} (already introduced at line {new_ids[new_id]})", id_tok)
            new_ids[new_id] = line_no
            ids = [new_id]
        else:  # CLONE
            src, _ = p.selector()
            p.keyword("as")
            new_id, id_tok = p.selector()
            p.keyword("offset")
            payload = p.numbers(3, "offset")
            if new_id in new_ids:
                raise p.error(f"duplicate add id {new_id} (already introduced at line {new_ids[new_id]})", id_tok)
            new_ids[new_id] = line_no
            ids = [src, new_id]
        p.finish(verb)
        commands.append(EditCommand(verb, tuple(ids), payload, line_no, head.col))
    return EditScript(tuple(commands), text)


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x)) if x != 0 else "0"
    return repr(x)


def format_command(cmd: EditCommand) -> str:
    sel = " ".join(f"#{i}" for i in cmd.ids)
    nums = [_num(v) for v in cmd.payload]
    verb = cmd.verb.lower()
    if cmd.verb in _BY_ARITY:
        return f"{verb} {sel} by {' '.join(nums)}"
    if cmd.verb == "DELETE":
        return f"{verb} {sel}"
    if cmd.verb == "ADD":
        return (
            f"add #{cmd.ids[0]} scale {' '.join(nums[0:3])} shape {' '.join(nums[3:5])}"
            f" at {' '.join(nums[5:8])} rot {' '.join(nums[8:11])}"
        )
    return f"clone #{cmd.ids[0]} as #{cmd.ids[1]} offset {' '.join(nums)}"


def format_script(script: EditScript) -> str:
    """Canonical text form; ``parse_script(format_script(s)) == s``."""
    return "".join(format_command(cmd) + "\n" for cmd in script.commands)


# -- application -----------------------------------------------------------------


def _rotate(q: SuperquadricParams, angles) -> SuperquadricParams:
    if not any(angles):
        return q
    rot = euler_to_matrix(angles) @ euler_to_matrix(q.rotation)
    return q.replace(rotation=matrix_to_euler(rot))


def apply_script(script: EditScript, proxy: Proxy) -> Proxy:
    """Run the commands in order on a copy of ``proxy`` (fail fast, no rollback)."""
    prims: dict[int, Primitive] = {p.id: p for p in proxy.primitives}
    order = list(prims)

    for cmd in script.commands:

        def fail(message: str) -> EditError:
            return EditError(message, cmd.line, cmd.col)

        def lookup(prim_id: int) -> Primitive:
            if prim_id not in prims:
                raise fail(f"unknown id {prim_id}")
            return prims[prim_id]

        if cmd.verb in ("ADD", "CLONE"):
            new_id = cmd.ids[-1]
            if new_id in prims:
                raise fail(f"id {new_id} already exists")
            if cmd.verb == "ADD":
                v = cmd.payload
                if min(v[0:3]) <= 0.0:
                    raise fail(f"scale must be > 0, got {tuple(v[0:3])}")
                params = SuperquadricParams(v[0:3], v[3:5], v[5:8], v[8:11])
            else:
                src = lookup(cmd.ids[0]).params
                offset = np.asarray(cmd.payload)
                params = src.replace(translation=tuple(np.asarray(src.translation) + offset))
            prims[new_id] = Primitive(new_id, params, palette_color(new_id))
            order.append(new_id)
            continue

        targets = [lookup(i) for i in cmd.ids]
        for prim in targets:
            q = prim.params
            if cmd.verb == "DELETE":
                if prim.id not in prims:
                    raise fail(f"unknown id {prim.id}")
                del prims[prim.id]
                order.remove(prim.id)
                continue
            if cmd.verb == "SCALE":
                new_scale = tuple(a * s for a, s in zip(q.scale, cmd.payload))
                if min(new_scale) <= 0.0 or not all(math.isfinite(a) for a in new_scale):
                    raise fail(f"resulting scale of id {prim.id} must be > 0, got {new_scale}")
                q = q.replace(scale=new_scale)
            elif cmd.verb == "TRANSLATE":
                q = q.replace(translation=tuple(t + d for t, d in zip(q.translation, cmd.payload)))
            elif cmd.verb == "ROTATE":
                q = _rotate(q, cmd.payload)
            elif cmd.verb == "SHAPE":
                q = q.replace(shape=cmd.payload)
            prims[prim.id] = Primitive(prim.id, q, prim.color)

    return Proxy(tuple(prims[i] for i in order), proxy.category)
