"""
Scoring a diarization hypothesis
================================

DER maps hypothesis singers onto reference singers and counts missed,
false-alarm and confused singer-frames. D-SCER ignores identities and
only asks whether the number of active singers is right. Both are
computed on frames where the reference has someone singing, unless an
external VAD is supplied.
"""

import tempfile
from pathlib import Path

import numpy as np

from singdiar import SegmentList, build_eval_mask, read_rttm, score, segments_to_frames, write_rttm

ref_segs = SegmentList("duet", [("alto", 0.0, 2.0), ("tenor", 1.5, 2.0), ("alto", 4.0, 1.0)])
hyp_segs = SegmentList("duet", [("spk1", 0.0, 2.2), ("spk2", 2.0, 1.5), ("spk1", 4.0, 1.0)])

tmp = Path(tempfile.mkdtemp(prefix="singdiar-score-"))
write_rttm(ref_segs, tmp / "ref.rttm")
write_rttm(hyp_segs, tmp / "hyp.rttm")
print((tmp / "ref.rttm").read_text())

ref_segs, hyp_segs = read_rttm(tmp / "ref.rttm")["duet"], read_rttm(tmp / "hyp.rttm")["duet"]
ref = segments_to_frames(ref_segs, 0.1, 50)
hyp = segments_to_frames(hyp_segs, 0.1, 50)
report = score(ref, hyp)
for key, value in report.to_dict().items():
    print(f"{key:>24}: {value}")

# An external VAD restricts scoring to its sections instead.
vad = SegmentList("duet", [("voice", 0.0, 3.0)])
mask = build_eval_mask(ref, vad)
print("\nscored frames with external VAD:", int(mask.sum()))
print(f"DER inside those sections: {score(ref, hyp, mask).der_pct:.1f}%")
print("frames where hypothesis count differs:", int(np.count_nonzero(ref.counts() != hyp.counts())))
