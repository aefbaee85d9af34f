"""Smoke test for the compiled extension: run from this directory after copying pcgkit*.so here."""

import math

import pcgkit


def main():
    taps = pcgkit.design_bandpass(25.0, 45.0, 1000.0, 60)
    assert len(taps) == 61
    assert all(a == b for a, b in zip(taps, reversed(taps)))
    assert pcgkit.fir_apply([0.5, 0.5], [1.0, 1.0, 1.0, 1.0]) == [0.5, 1.0, 1.0, 1.0]

    tone = [math.sin(2 * math.pi * 100 * n / 4000) for n in range(4000)]
    assert len(pcgkit.resample(tone, 4000.0, 1000.0)) == 1000

    samples, rate, states, label = pcgkit.synthesize(bpm=72.0, murmur="mild", duration=6.0, seed=3)
    assert rate == 4000.0 and len(samples) == len(states) == 24000
    assert label == "mild"

    found, bpm, seg_rate = pcgkit.segment(samples, rate)
    assert abs(bpm - 72.0) < 5.0, bpm
    assert {"S1", "systole", "S2", "diastole"} >= set(found)
    print(f"segmented {len(found) / seg_rate:.1f} s at {bpm:.1f} bpm")

    names, values = pcgkit.acoustic_features(samples, rate)
    assert len(names) == len(values) and all(math.isfinite(v) for v in values)

    uar, acc, recalls = pcgkit.evaluate([0, 1, 1, 0], [0, 1, 0, 0], ["normal", "abnormal"])
    assert abs(uar - (2 / 3 + 1) / 2) < 1e-12 and acc == 0.75 and len(recalls) == 2
    assert pcgkit.majority_vote([1, 2, 1], 3) == 1
    assert pcgkit.majority_vote([0, 1, 2], 3) == 2

    try:
        pcgkit.design_bandpass(50.0, 20.0, 1000.0, 60)
    except ValueError:
        pass
    else:
        raise AssertionError("bad band accepted")
    print("python smoke test passed")


if __name__ == "__main__":
    main()
