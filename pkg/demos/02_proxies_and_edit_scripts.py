"""
Proxies and edit scripts
========================

Build a two-part proxy, edit it with a short script and classify what changed.
"""

from proxekit.editscript import ScriptError, apply_script, format_script, parse_script
from proxekit.proxy import Primitive, Proxy, diff_proxies, load_proxy, palette_color, save_proxy
from proxekit.superquadric import SuperquadricParams

seat = Primitive(0, SuperquadricParams((0.25, 0.25, 0.04), (0.2, 0.2), (0.0, 0.0, 0.0)), palette_color(0))
back = Primitive(1, SuperquadricParams((0.25, 0.04, 0.25), (0.2, 0.2), (0.0, -0.22, 0.25)), palette_color(1))
chair = Proxy((seat, back), category="chair")

# Proxies serialize to a small JSON document and load back unchanged.
text = save_proxy(chair)
print(text.decode()[:200], "...")
assert load_proxy(text) == chair

# Scripts are line oriented; verbs are case-insensitive and '#' starts a comment
# unless it prefixes an id.
script = parse_script(
    """
    # taller back, plus a cushion
    scale #1 by 1 1 1.4
    translate #1 by 0 0 0.1
    add #5 scale 0.2 0.2 0.03 shape 1 1 at 0 0 0.06 rot 0 0 0
    """
)
print(format_script(script))

edited = apply_script(script, chair)
d = diff_proxies(chair, edited)
print("unchanged", sorted(d.unchanged), "edited", d.edited_ids, "added", d.added_ids, "deleted", d.deleted_ids)

# Errors point at the offending token.
try:
    parse_script("scale #1 by 1 1\n")
except ScriptError as exc:
    print("error:", exc)
