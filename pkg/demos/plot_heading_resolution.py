"""
From a 180 degree axis to a full heading
========================================

A box only knows its axis modulo 180. A head or tail point breaks the tie.
"""

from obbtrack.geom import OrientedBox, Vec2, short_edge_midpoints
from obbtrack.heading import resolve_heading

box = OrientedBox(Vec2(100, 100), 16, 40, 20)   # labelled sideways on purpose
print(f"raw angle {box.theta_raw}, axis {box.axis_deg}, length {box.length}, width {box.width}")

front, back = short_edge_midpoints(box)
cases = {
    "head at front end": dict(head=tuple(front)),
    "head at back end": dict(head=tuple(back)),
    "tail at back end": dict(tail=tuple(back)),
    "head beside the body": dict(head=(100 - 10 * 0.9396926207859084, 100 - 10 * 0.3420201433256687)),
    "no parts": dict(),
    "head and tail on the same side": dict(head=tuple(front), tail=(105.0, 110.0)),
}
for name, kw in cases.items():
    res = resolve_heading(box, **kw)
    heading = "unresolved" if res.result is None else f"{res.result.heading:7.2f}"
    flag = "  (contradiction)" if res.contradiction else ""
    print(f"{name:32s} -> {heading}  via {res.source.value}{flag}")
