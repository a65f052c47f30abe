import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxekit.editscript import (
    EditCommand,
    EditError,
    EditScript,
    ScriptSyntaxError,
    apply_script,
    format_script,
    parse_script,
)
from proxekit.proxy import Primitive, Proxy, diff_proxies
from proxekit.superquadric import SuperquadricParams, euler_to_matrix

from test_proxy import simple_proxy


def test_parse_scale():
    s = parse_script("scale #3 by 1.0 1.0 1.5")
    assert s.commands == (EditCommand("SCALE", (3,), (1.0, 1.0, 1.5)),)


def test_parse_multi_selector():
    (cmd,) = parse_script("translate #1 #4 by 0 0.1 0").commands
    assert cmd.verb == "TRANSLATE" and cmd.ids == (1, 4) and cmd.payload == (0.0, 0.1, 0.0)


def test_unknown_verb_message():
    with pytest.raises(ScriptSyntaxError) as err:
        parse_script("shrink #3")
    assert str(err.value) == "unknown verb 'shrink' at line 1, col 1"
    assert (err.value.line, err.value.col) == (1, 1)


def test_comments_blank_lines_and_case():
    text = "# header comment\n\n  SCALE #0 BY 1 2 3   # trailing\n\tdelete #1\n"
    s = parse_script(text)
    assert [c.verb for c in s.commands] == ["SCALE", "DELETE"]
    assert s.commands[0].line == 3 and s.commands[0].col == 3
    assert s.source == text


def test_add_and_clone_syntax():
    s = parse_script("add #9 scale 0.1 0.2 0.3 shape 1 0.5 at 0 0 0.3 rot 0 0 1\nclone #0 as #10 offset 0.2 0 0")
    add, clone = s.commands
    assert add.ids == (9,) and len(add.payload) == 11
    assert clone.ids == (0, 10) and clone.payload == (0.2, 0.0, 0.0)


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("scale #3 by 1 1", 1, 16),
        ("scale #3 by 1 1 x", 1, 17),
        ("scale #3 by 1 1 1 1", 1, 19),
        ("scale 3 by 1 1 1", 1, 7),
        ("scale #3 with 1 1 1", 1, 10),
        ("delete", 1, 7),
        ("\n\ndelete #2 extra", 3, 11),
        ("add #1 scale 1 1 1 shape 1 1 at 0 0 0 rot 0 0 0\nadd #1 scale 1 1 1 shape 1 1 at 0 0 0 rot 0 0 0", 2, 5),
        ("scale #3 by 1 1 inf", 1, 17),
    ],
)
def test_syntax_error_positions(text, line, col):
    with pytest.raises(ScriptSyntaxError) as err:
        parse_script(text)
    assert (err.value.line, err.value.col) == (line, col)


def test_apply_empty_is_identity():
    p = simple_proxy()
    assert apply_script(parse_script(""), p) == p


def test_apply_scale():
    p = Proxy((Primitive(0, SuperquadricParams()), Primitive(1, SuperquadricParams(translation=(0.2, 0, 0)))))
    out = apply_script(parse_script("scale #0 by 1 1 2"), p)
    q = out.get(0).params
    assert q.scale == (1.0, 1.0, 2.0)
    assert q.shape == (1.0, 1.0) and q.translation == (0, 0, 0) and q.rotation == (0, 0, 0)
    assert out.get(1) == p.get(1)
    assert p.get(0).params.scale == (1.0, 1.0, 1.0)  # input untouched


def test_delete_then_translate_fails_at_second_command():
    p = simple_proxy()
    with pytest.raises(EditError) as err:
        apply_script(parse_script("delete #2\ntranslate #2 by 0 0 1"), p)
    assert "unknown id 2" in str(err.value)
    assert (err.value.line, err.value.col) == (2, 1)


def test_apply_translate_shape_delete_add_clone():
    p = simple_proxy(3)
    script = parse_script(
        "translate #0 by 0 0.1 0\nshape #1 by 0.05 3\ndelete #2\n"
        "add #7 scale 0.1 0.1 0.1 shape 1 1 at 0 0 0.2 rot 0 0 0\nclone #0 as #8 offset 0.1 0 0"
    )
    out = apply_script(script, p)
    assert out.ids == [0, 1, 7, 8]
    assert out.get(0).params.translation == pytest.approx((p.get(0).params.translation[0], 0.1, 0.05))
    assert out.get(1).params.shape == (0.1, 1.9)
    assert out.get(7).params.translation == (0, 0, 0.2)
    assert out.get(8).params.translation == pytest.approx((out.get(0).params.translation[0] + 0.1, 0.1, 0.05))
    assert out.get(8).params.scale == out.get(0).params.scale


def test_rotate_composes():
    p = Proxy((Primitive(0, SuperquadricParams(rotation=(0.3, 0, 0))),))
    out = apply_script(parse_script("rotate #0 by 0 0 0.5"), p)
    got = euler_to_matrix(out.get(0).params.rotation)
    np.testing.assert_allclose(got, euler_to_matrix((0, 0, 0.5)) @ euler_to_matrix((0.3, 0, 0)), atol=1e-12)
    twice = apply_script(parse_script("rotate #0 by 3 0 0\nrotate #0 by 3 0 0"), Proxy((Primitive(0, SuperquadricParams()),)))
    assert -math.pi < twice.get(0).params.rotation[0] <= math.pi


@pytest.mark.parametrize(
    "text, message",
    [
        ("translate #42 by 0 0 0", "unknown id 42"),
        ("add #1 scale 1 1 1 shape 1 1 at 0 0 0 rot 0 0 0", "already exists"),
        ("clone #0 as #1 offset 0 0 0", "already exists"),
        ("scale #0 by 1 -1 1", "must be > 0"),
        ("scale #0 by 1 0 1", "must be > 0"),
        ("add #9 scale 1 0 1 shape 1 1 at 0 0 0 rot 0 0 0", "must be > 0"),
        ("delete #0 #0", "unknown id 0"),
    ],
)
def test_apply_errors(text, message):
    with pytest.raises(EditError, match=message):
        apply_script(parse_script(text), simple_proxy(3))


def test_unit_scale_is_unchanged_in_diff():
    p = simple_proxy()
    out = apply_script(parse_script("scale #1 #2 by 1 1 1\nrotate #3 by 0 0 0"), p)
    assert diff_proxies(p, out, 1e-6).is_identity


_real = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
_pos = st.floats(0.01, 10, allow_nan=False)
_ids = st.lists(st.integers(0, 50), min_size=1, max_size=3).map(tuple)


@st.composite
def commands(draw):
    verb = draw(st.sampled_from(["SCALE", "TRANSLATE", "ROTATE", "SHAPE", "DELETE", "ADD", "CLONE"]))
    if verb in ("SCALE", "TRANSLATE", "ROTATE"):
        return EditCommand(verb, draw(_ids), tuple(draw(_real) for _ in range(3)))
    if verb == "SHAPE":
        return EditCommand(verb, draw(_ids), tuple(draw(_real) for _ in range(2)))
    if verb == "DELETE":
        return EditCommand(verb, draw(_ids))
    new_id = draw(st.integers(100, 10_000))
    if verb == "ADD":
        return EditCommand(verb, (new_id,), tuple(draw(_pos) for _ in range(5)) + tuple(draw(_real) for _ in range(6)))
    return EditCommand(verb, (draw(st.integers(0, 50)), new_id), tuple(draw(_real) for _ in range(3)))


@settings(max_examples=200, deadline=None)
@given(cmds=st.lists(commands(), max_size=8))
def test_print_parse_round_trip(cmds):
    seen = set()
    unique = []
    for c in cmds:
        if c.verb in ("ADD", "CLONE"):
            if c.ids[-1] in seen:
                continue
            seen.add(c.ids[-1])
        unique.append(c)
    script = EditScript(tuple(unique))
    text = format_script(script)
    assert parse_script(text) == script
    assert parse_script(format_script(parse_script(text))) == parse_script(text)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, 5), factor=st.floats(0.5, 2.0), dx=st.floats(-0.2, 0.2))
def test_single_id_script_touches_only_that_id(k, factor, dx):
    p = simple_proxy()
    script = parse_script(f"scale #{k} by {factor!r} 1 1\ntranslate #{k} by {dx!r} 0 0")
    d = diff_proxies(p, apply_script(script, p))
    assert d.unchanged >= frozenset(p.ids) - {k}
    assert set(d.edited_ids) <= {k} and not d.added and not d.deleted
