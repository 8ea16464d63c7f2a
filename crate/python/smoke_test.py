"""Import the compiled extension and exercise the main entry points.

Build first with `cargo build -p loudloss-python --release`; this script
copies the shared library next to itself as `pyloudloss.so` and imports it.
"""

import math
import os
import shutil
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)


def locate_extension():
    for profile in ("release", "debug"):
        for name in ("libpyloudloss.so", "libpyloudloss.dylib"):
            path = os.path.join(ROOT, "target", profile, name)
            if os.path.exists(path):
                return path
    sys.exit("extension not built; run `cargo build -p loudloss-python --release`")


def main():
    build_dir = tempfile.mkdtemp()
    shutil.copy(locate_extension(), os.path.join(build_dir, "pyloudloss.so"))
    sys.path.insert(0, build_dir)
    import pyloudloss as ll

    assert abs(ll.hz_to_mel(1000.0) - 1000.0) < 0.1
    assert abs(ll.mel_to_hz(ll.hz_to_mel(440.0)) - 440.0) < 1e-9
    assert ll.spl_lookup(1000.0) == 40.01

    bands = ll.build_partition()
    assert len(bands) == 25
    assert bands[0]["start"] == 0 and bands[-1]["end"] == 257

    engine = ll.LossEngine()
    weights = engine.weights()
    assert len(weights) == 25 and max(weights) > 1.0

    sr = 16000
    ref = [0.5 * math.sin(2 * math.pi * 440 * i / sr) for i in range(sr)]
    est = [r + 0.01 * math.sin(2 * math.pi * 3000 * i / sr) for i, r in enumerate(ref)]
    assert engine.evaluate(ref, ref) == 0.0
    total = engine.evaluate(est, ref)
    assert total > 0.0

    ref_mag = ll.stft_magnitude(ref)
    est_mag = ll.stft_magnitude(est)
    assert len(ref_mag) == 257 and len(ref_mag[0]) == 61
    loss, per_band = engine.loss(est_mag, ref_mag)
    assert abs(loss - total) < 1e-12 and len(per_band) == 25
    grad = engine.gradient(est_mag, ref_mag)
    assert len(grad) == 257

    assert ll.snr(ref, ref) == math.inf
    assert ll.snr(est, ref) > 20.0
    assert ll.mse_loss(est_mag, ref_mag) > 0.0
    assert ll.compressed_loss(est_mag, ref_mag, 0.3) > 0.0

    path = os.path.join(build_dir, "ref.wav")
    ll.save_wav(path, ref)
    samples, rate = ll.load_wav(path)
    assert rate == sr and max(abs(a - b) for a, b in zip(samples, ref)) <= 1 / 32768

    try:
        ll.LossEngine(scale="bark")
    except ValueError:
        pass
    else:
        raise AssertionError("bad scale accepted")
    try:
        ll.load_wav(os.path.join(build_dir, "missing.wav"))
    except OSError:
        pass
    else:
        raise AssertionError("missing file accepted")

    demo = ll.compare_objectives(seed=0, steps=50)
    assert len(demo["loud_loss_curve"]) == 51
    print("smoke test ok: loss %.4f, demo residual ratio %.3f" % (total, demo["residual_ratio"]))


if __name__ == "__main__":
    main()
