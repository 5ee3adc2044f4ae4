"""
Voting over three part detectors
================================

Three detectors look at the same crop. Their head boxes are grouped
by overlap, and the largest group decides where the head is.
"""

from obbtrack.geom import AABox
from obbtrack.parts import DetectorId, PartClass, PartDetection, group_parts, vote_crop

HT, HO, TO = DetectorId.HEAD_TAIL, DetectorId.HEAD_ONLY, DetectorId.TAIL_ONLY
side = 15.5


def box(x, y, score, detector, part=PartClass.HEAD):
    return PartDetection(detector, part, AABox.square((x, y), side), score)


# The two-class detector fires confidently on a shadow far from the animal;
# the other two agree on the real head.
dets = [
    box(34.0, 9.0, 0.93, HT),          # spurious
    box(36.0, 20.0, 0.88, HT, PartClass.TAIL),
    box(4.0, 20.5, 0.71, HO),
    box(5.0, 19.0, 0.66, HT),
    box(37.0, 21.0, 0.80, TO, PartClass.TAIL),
]

heads = [d for d in dets if d.part is PartClass.HEAD]
for g in group_parts(heads):
    c = g.center
    print(f"group at ({c.center.x:5.1f}, {c.center.y:5.1f}) "
          f"center score {c.score:.2f}  votes {g.votes}")

out = vote_crop(dets)
print(f"\nhead -> {tuple(out.head)} with {out.head_votes} votes")
print(f"tail -> {tuple(out.tail)} with {out.tail_votes} votes")

# Taking the single most confident head box instead would have picked the shadow.
best = max(heads, key=lambda d: d.score)
print(f"most confident single head box: {tuple(best.center)}")
