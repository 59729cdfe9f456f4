import struct

import numpy as np
import pytest

from srsearch import AudioBuffer, StftParams, istft, load_wav, lsd, make_lowres, save_wav, stft
from srsearch.dsp import lsd_mags, stft_complex
from srsearch.errors import (
    DimensionError,
    ParameterError,
    UnsupportedCodecError,
    WavFormatError,
)

from .oracles import brute_lsd, naive_spectrogram


def _write_pcm16(path, samples_i16, rate, channels=1):
    payload = np.asarray(samples_i16, dtype="<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI", b"RIFF", 36 + len(payload), b"WAVE", b"fmt ", 16,
        1, channels, rate, rate * 2 * channels, 2 * channels, 16, b"data", len(payload),
    )
    path.write_bytes(header + payload)


def _write_float32(path, samples_f32, rate, channels=1):
    payload = np.asarray(samples_f32, dtype="<f4").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI", b"RIFF", 36 + len(payload), b"WAVE", b"fmt ", 16,
        3, channels, rate, rate * 4 * channels, 4 * channels, 32, b"data", len(payload),
    )
    path.write_bytes(header + payload)


class TestLoadWav:
    def test_pcm16_scaling(self, tmp_path):
        path = tmp_path / "a.wav"
        _write_pcm16(path, [0, 16384, -32768], 16000)
        buf = load_wav(path)
        assert buf.sample_rate_hz == 16000
        assert buf.samples.tolist() == [0.0, 0.5, -1.0]

    def test_stereo_float32_averages_to_mono(self, tmp_path):
        path = tmp_path / "st.wav"
        _write_float32(path, [1.0, 0.0, 1.0, 0.0], 24000, channels=2)
        buf = load_wav(path)
        assert buf.samples.tolist() == [0.5, 0.5]

    def test_truncated_header_is_format_error(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"RIFF\x00\x00")
        with pytest.raises(WavFormatError):
            load_wav(path)

    def test_not_riff_is_format_error(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"OggS" + b"\x00" * 40)
        with pytest.raises(WavFormatError):
            load_wav(path)

    def test_unsupported_codec(self, tmp_path):
        path = tmp_path / "ulaw.wav"
        payload = b"\x00" * 8
        header = struct.pack(
            "<4sI4s4sIHHIIHH4sI", b"RIFF", 36 + len(payload), b"WAVE", b"fmt ", 16,
            7, 1, 8000, 8000, 1, 8, b"data", len(payload),
        )
        path.write_bytes(header + payload)
        with pytest.raises(UnsupportedCodecError):
            load_wav(path)


class TestSaveWav:
    def test_float32_round_trip_bit_identical(self, tmp_path):
        buf = AudioBuffer([0.25, -0.125], 24000)
        save_wav(buf, tmp_path / "f.wav", codec="float32")
        again = load_wav(tmp_path / "f.wav")
        assert again.samples.tolist() == [0.25, -0.125]

    def test_pcm16_clamps_above_full_scale(self, tmp_path):
        buf = AudioBuffer([2.0], 8000)
        save_wav(buf, tmp_path / "c.wav", codec="pcm16")
        again = load_wav(tmp_path / "c.wav")
        assert again.samples[0] == 32767 / 32768

    def test_pcm16_quantization_bound(self, tmp_path, rng):
        samples = rng.uniform(-1.0, 0.999, 64)
        buf = AudioBuffer(samples, 8000)
        save_wav(buf, tmp_path / "q.wav", codec="pcm16")
        again = load_wav(tmp_path / "q.wav")
        assert np.max(np.abs(again.samples - samples)) <= 1 / 32768

    def test_unknown_codec_rejected(self, tmp_path):
        with pytest.raises(ParameterError):
            save_wav(AudioBuffer([0.0, 0.1], 8000), tmp_path / "x.wav", codec="mp3")


class TestStft:
    def test_constant_signal_window_sum(self):
        spec = stft(AudioBuffer(np.ones(8192), 24000), StftParams(2048, 512))
        interior = spec.mags[6]
        assert interior[0] == pytest.approx(1024.0, abs=1e-9)
        assert np.all(interior[2:] < 1e-9)

    def test_zero_signal(self):
        spec = stft(AudioBuffer(np.zeros(4096), 24000), StftParams(2048, 512))
        assert np.all(spec.mags == 0)

    def test_frame_count(self):
        spec = stft(AudioBuffer(np.zeros(5000), 24000), StftParams(2048, 512))
        assert spec.num_frames == 5000 // 512 + 1
        assert spec.num_bins == 1025

    def test_sine_matches_naive_dft(self):
        t = np.arange(24000) / 24000
        x = np.sin(2 * np.pi * 440.0 * t)
        spec = stft(AudioBuffer(x, 24000), StftParams(2048, 512))
        reference = naive_spectrogram(x, 2048, 512)
        assert np.max(np.abs(spec.mags - reference)) < 1e-6

    def test_invalid_params(self):
        with pytest.raises(ParameterError):
            StftParams(window_len=2047, hop_len=512)
        with pytest.raises(ParameterError):
            StftParams(window_len=2048, hop_len=0)
        with pytest.raises(ParameterError):
            StftParams(window_len=2048, hop_len=4096)


class TestIstft:
    def test_round_trip_white_noise(self, rng):
        x = rng.uniform(-1, 1, 8192)
        params = StftParams(2048, 512)
        buf = AudioBuffer(x, 24000)
        spec = stft(buf, params)
        phases = np.angle(stft_complex(buf, params))
        rec = istft(spec, phases, length=len(x))
        interior = slice(2048, -2048)
        assert np.max(np.abs(rec.samples[interior] - x[interior])) <= 1e-5

    def test_zero_magnitudes_give_zero_waveform(self):
        params = StftParams(2048, 512)
        spec = stft(AudioBuffer(np.zeros(4096), 24000), params)
        out = istft(spec, np.zeros_like(spec.mags))
        assert np.all(out.samples == 0)

    def test_shape_mismatch(self):
        params = StftParams(2048, 512)
        spec = stft(AudioBuffer(np.zeros(4096), 24000), params)
        with pytest.raises(DimensionError):
            istft(spec, np.zeros((spec.num_frames + 1, spec.num_bins)))

    def test_large_hop_rejected(self):
        params = StftParams(2048, 2048)
        spec = stft(AudioBuffer(np.zeros(4096), 24000), params)
        with pytest.raises(ParameterError):
            istft(spec, np.zeros_like(spec.mags))


class TestMakeLowres:
    def test_stopband_sine_killed(self):
        t = np.arange(24000) / 24000
        x = AudioBuffer(0.5 * np.sin(2 * np.pi * 10000 * t), 24000)
        out = make_lowres(x, 4000.0)
        assert _rms(out.samples) <= 0.001 * _rms(x.samples)

    def test_passband_sine_preserved(self):
        t = np.arange(24000) / 24000
        x = AudioBuffer(0.5 * np.sin(2 * np.pi * 1000 * t), 24000)
        out = make_lowres(x, 4000.0)
        assert abs(_rms(out.samples) - _rms(x.samples)) <= 0.01 * _rms(x.samples)

    def test_cutoff_at_nyquist_rejected(self):
        x = AudioBuffer(np.zeros(1000) + 0.1, 24000)
        with pytest.raises(ParameterError):
            make_lowres(x, 12000.0)

    def test_idempotence(self, corpus):
        _, lr = corpus[0]
        twice = make_lowres(lr, 4000.0)
        assert abs(_rms(twice.samples) - _rms(lr.samples)) < 0.005 * _rms(lr.samples)

    def test_length_and_rate_preserved(self, corpus):
        hr, lr = corpus[1]
        assert len(lr) == len(hr)
        assert lr.sample_rate_hz == hr.sample_rate_hz


def _rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


class TestLsd:
    def test_identity_is_zero(self, rng):
        x = AudioBuffer(rng.uniform(-1, 1, 8192), 24000)
        assert lsd(x, x) == 0.0

    def test_scale_law(self, rng):
        x = rng.uniform(-1, 1, 8192)
        base = AudioBuffer(x, 24000)
        for c in (2.0, 10.0, 0.5):
            scaled = AudioBuffer(x * c, 24000)
            expected = abs(2.0 * np.log10(c))
            assert lsd(scaled, base) == pytest.approx(expected, abs=1e-3)

    def test_symmetry_exact(self, rng):
        a = AudioBuffer(rng.uniform(-1, 1, 6000), 24000)
        b = AudioBuffer(rng.uniform(-1, 1, 6000), 24000)
        assert lsd(a, b) == lsd(b, a)

    def test_rate_mismatch_rejected(self):
        a = AudioBuffer(np.ones(100), 24000)
        b = AudioBuffer(np.ones(100), 16000)
        with pytest.raises(ParameterError):
            lsd(a, b)

    def test_length_mismatch_truncates(self, rng):
        x = rng.uniform(-1, 1, 8192)
        a = AudioBuffer(x, 24000)
        b = AudioBuffer(np.concatenate([x, rng.uniform(-1, 1, 3000)]), 24000)
        assert lsd(a, b) == 0.0

    def test_positive_when_mags_differ(self, rng):
        a = AudioBuffer(rng.uniform(-1, 1, 4096), 24000)
        b = AudioBuffer(rng.uniform(-1, 1, 4096), 24000)
        assert lsd(a, b) > 0.0

    def test_matches_brute_force_script(self, rng):
        for _ in range(20):
            a = rng.uniform(-1, 1, 4096)
            b = rng.uniform(-1, 1, 4096)
            ours = lsd(AudioBuffer(a, 24000), AudioBuffer(b, 24000))
            reference = brute_lsd(a, b, 24000)
            assert abs(ours - reference) <= 1e-4

    def test_mags_shape_mismatch(self):
        with pytest.raises(DimensionError):
            lsd_mags(np.ones((3, 4)), np.ones((3, 5)))
