#!/usr/bin/env python3
"""Generate the bundled speech-like test fixtures.

The clips are produced by a source-filter synthesizer (glottal pulse train
or noise excitation, time-varying formant cascade, syllabic amplitude
envelope, low noise floor during pauses). Output is 8 kHz mono PCM16 WAV.
The generator is deterministic; rerunning it reproduces the files bit for
bit on the same numpy version.

    python3 tools/make_fixtures.py data/fixtures
"""

import sys
import wave
from pathlib import Path

import numpy as np

FS = 8000

# (F1, F2, F3, F4) in Hz for a handful of vowels.
VOWELS = {
    "a": (730, 1090, 2440, 3300),
    "e": (530, 1840, 2480, 3300),
    "i": (270, 2290, 3010, 3500),
    "o": (570, 840, 2410, 3300),
    "u": (300, 870, 2240, 3300),
}
BANDWIDTHS = (80, 100, 140, 200)


def resonator_cascade(x, formants, scale):
    """Filter x through four time-varying two-pole resonators."""
    y = x.copy()
    for k in range(4):
        f = formants[:, k] * scale
        bw = BANDWIDTHS[k]
        r = np.exp(-np.pi * bw / FS)
        a1 = -2.0 * r * np.cos(2.0 * np.pi * f / FS)
        a2 = r * r
        g = 1.0 + a1 + a2
        out = np.zeros_like(y)
        y1 = y2 = 0.0
        for n in range(len(y)):
            v = g[n] * y[n] - a1[n] * y1 - a2 * y2
            out[n] = v
            y2, y1 = y1, v
        y = out
    return y


def synth(duration_s, f0_base, formant_scale, seed):
    rng = np.random.default_rng(seed)
    n_total = int(duration_s * FS)
    excitation = np.zeros(n_total)
    formants = np.zeros((n_total, 4))
    envelope = np.zeros(n_total)
    fricative = np.zeros(n_total)

    pos = 0
    prev_vowel = np.array(VOWELS["a"], dtype=float)
    phase = 0.0
    while pos < n_total:
        # pause between words
        if rng.random() < 0.25:
            pos += int(rng.uniform(0.04, 0.12) * FS)
            continue
        # optional fricative onset
        if rng.random() < 0.4:
            flen = int(rng.uniform(0.04, 0.09) * FS)
            end = min(pos + flen, n_total)
            fricative[pos:end] = rng.uniform(0.05, 0.15) * np.hanning(end - pos)
            formants[pos:end] = prev_vowel
            pos = end
            if pos >= n_total:
                break
        vlen = int(rng.uniform(0.12, 0.28) * FS)
        end = min(pos + vlen, n_total)
        target = np.array(VOWELS[rng.choice(list(VOWELS))], dtype=float)
        t = np.linspace(0.0, 1.0, end - pos)
        glide = np.clip(t / 0.3, 0.0, 1.0)[:, None]
        formants[pos:end] = prev_vowel + (target - prev_vowel) * glide
        prev_vowel = target
        level = 10 ** (rng.uniform(-8, 0) / 20)
        attack = np.clip(t / 0.15, 0, 1)
        decay = np.clip((1 - t) / 0.25, 0, 1)
        envelope[pos:end] = level * attack * decay
        # glottal pulse train with declining pitch and jitter
        f0_start = f0_base * rng.uniform(0.9, 1.15)
        f0 = f0_start * (1.0 - 0.15 * t)
        for n in range(pos, end):
            phase += f0[n - pos] * (1.0 + 0.01 * rng.standard_normal()) / FS
            if phase >= 1.0:
                phase -= 1.0
                excitation[n] = 1.0
        pos = end

    # glottal shaping (double pole near dc) + aspiration noise
    src = excitation.copy()
    for _ in range(2):
        out = np.zeros_like(src)
        acc = 0.0
        for n in range(n_total):
            acc = 0.96 * acc + src[n]
            out[n] = acc
        src = out
    src -= np.convolve(src, np.ones(64) / 64, mode="same")
    src = src * envelope + 0.02 * envelope * rng.standard_normal(n_total)
    noise = rng.standard_normal(n_total)
    noise = np.diff(noise, prepend=0.0) * fricative

    voiced = resonator_cascade(src, formants, formant_scale)
    # lip radiation
    voiced = np.diff(voiced, prepend=0.0)
    voiced /= np.max(np.abs(voiced)) + 1e-12
    fric = resonator_cascade(noise, np.tile([2500.0, 3200.0, 3500.0, 3700.0], (n_total, 1)), 1.0)
    fric /= np.max(np.abs(fric)) + 1e-12
    y = 0.9 * voiced + 0.25 * fric * (np.max(fricative) > 0)
    y += 3e-4 * rng.standard_normal(n_total)
    y *= 0.6 / np.max(np.abs(y))
    return np.round(y * 32767).astype(np.int16)


def write_wav(path, pcm):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(FS)
        w.writeframes(pcm.astype("<i2").tobytes())


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data/fixtures")
    out.mkdir(parents=True, exist_ok=True)
    write_wav(out / "train_female_10s.wav", synth(10.0, 200.0, 1.15, seed=11))
    write_wav(out / "clip_female_2s.wav", synth(2.0, 210.0, 1.12, seed=23))
    write_wav(out / "clip_male_2s.wav", synth(2.0, 115.0, 1.0, seed=37))


if __name__ == "__main__":
    main()
