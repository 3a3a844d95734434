"""
Energy VAD on an isolated vocal
===============================

Labels come from frame energy relative to the clip's own mean, so the
absolute recording level never matters. This script builds a clip with
two sung phrases, labels it, cleans the labels with the median filter
and runs the instrumental check.
"""

import numpy as np

from singdiar import AudioClip, energy_vad, frame_energies, is_instrumental, median_filter
from singdiar.synth import gated_tone

rng = np.random.default_rng(0)

# 30 s at 8 kHz is 300 frames of 100 ms. Two phrases of 10 frames each,
# plus a one-frame breath click that the filter should remove.
activity = np.zeros(300, bool)
activity[40:50] = True
activity[180:190] = True
activity[120] = True
clip = gated_tone(activity, 220.0, 0.4, rng=rng, id="vocal")

e = frame_energies(clip)
print(f"frame energies: max {e.max():.1f} dB, median {np.median(e):.1f} dB")

raw = energy_vad(clip)
smooth = median_filter(raw, width=11)
print("active frames before filtering:", raw.data[0].nonzero()[0].tolist())
print("active frames after filtering: ", smooth.data[0].nonzero()[0].tolist())

# Scaling the whole clip leaves the labels alone.
print("labels unchanged at -60 dB:", energy_vad(clip.scaled(1e-3)) == raw)

# The threshold is relative to the mean, and linear frame energies average
# to one, so at 10 dB at most a tenth of the frames can ever be active.
print(f"active fraction: {raw.data.mean():.3f} (cap {10 ** -1:.2f})")

check = is_instrumental(clip)
print("instrumental?", bool(check), f"(active fraction {check.active_fraction:.3f})")
silent = is_instrumental(AudioClip(np.zeros(8000), 8000, "silence"))
print("silence instrumental?", bool(silent), "silent flag:", silent.silent)
