"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py`` and read the "acceptance criteria"
section at the end of the output.
"""
import json
import time
import warnings

import numpy as np
import pytest

from conftest import psnr
from oracles import diagonal_frechet, random_spd, spearman, trace_sqrt_product_oracle
from spheremetric import synthetic
from spheremetric.cli import main
from spheremetric.corruption import DEFAULT_SWEEPS, apply_corruption
from spheremetric.discontinuity import DsConfig, SeamStrip, convolve_kernel, ds_image, ds_strip
from spheremetric.errors import SampleSizeWarning
from spheremetric.features import MockExtractor
from spheremetric.frechet import (
    GaussianStats,
    ViewGroup,
    cubemap_features,
    fid,
    fid_from_features,
    frechet_distance,
    omnifid,
    omnifid_from_features,
    trace_sqrt_product,
)
from spheremetric.projection import (
    FACES,
    cubemap_to_equirect,
    equirect_to_cubemap,
    face_pixel_vectors,
    vectors_to_angles,
)


def test_c1_frechet_diagonal_closed_form(acceptance):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        d = int(rng.integers(1, 17))
        mu1, mu2 = rng.normal(0, 3, d), rng.normal(0, 3, d)
        v1, v2 = rng.uniform(0.01, 10, d), rng.uniform(0.01, 10, d)
        got = frechet_distance(GaussianStats(mu1, np.diag(v1), 2), GaussianStats(mu2, np.diag(v2), 2))
        want = diagonal_frechet(mu1, v1, mu2, v2)
        worst = max(worst, abs(got - want) / abs(want))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 5
    acceptance(1, ok, f"max rel err {worst:.2e} (tol 1e-10), {elapsed:.2f}s (limit 5s)")
    assert ok


def test_c2_trace_sqrt_oracle(acceptance):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(1, 9))
        s1, s2 = random_spd(rng, d, floor=0.05), random_spd(rng, d, floor=0.05)
        want = trace_sqrt_product_oracle(s1, s2)
        worst = max(worst, abs(trace_sqrt_product(s1, s2) - want) / want)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 10
    acceptance(2, ok, f"max rel err {worst:.2e} (tol 1e-8), {elapsed:.2f}s (limit 10s)")
    assert ok


def test_c3_identity(acceptance):
    t0 = time.perf_counter()
    data = synthetic.make_dataset("pole", 64, 256, seed=0)
    ext = MockExtractor()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SampleSizeWarning)
        f = fid(data, data, ext)
        o = omnifid(data, data, ext).omnifid
    elapsed = time.perf_counter() - t0
    ok = f <= 1e-6 and o <= 1e-6 and elapsed < 30
    acceptance(3, ok, f"FID(X,X)={f:.3g} OmniFID(X,X)={o:.3g} (tol 1e-6), {elapsed:.1f}s (limit 30s)")
    assert ok


def _sweep(ref, kind, levels, ext, seed):
    """FID and OmniFID report per level; corruption is applied to the equirect images."""
    ref_eq = ext.extract(ref)
    ref_cm = cubemap_features(ref, ext)
    out = []
    for level in levels:
        ev = [apply_corruption(img, kind, level, seed, i) for i, img in enumerate(ref)]
        f = fid_from_features(ref_eq, ext.extract(ev), min_samples=0)
        rep = omnifid_from_features(ref_cm, cubemap_features(ev, ext), min_samples=0)
        out.append((level, f, rep))
    return out


def test_c4_fov_sensitivity(acceptance):
    t0 = time.perf_counter()
    ref = synthetic.make_dataset("pole", 128, 256, seed=0)
    rows = _sweep(ref, "fov", DEFAULT_SWEEPS["fov"], MockExtractor(), 0)
    elapsed = time.perf_counter() - t0
    omni = [r.omnifid for _, _, r in rows]
    increasing = all(b > a for a, b in zip(omni, omni[1:]))
    poles = all(r.fid_bar[ViewGroup.UP] > r.fid_bar[ViewGroup.FRONTAL]
                and r.fid_bar[ViewGroup.DOWN] > r.fid_bar[ViewGroup.FRONTAL] for _, _, r in rows)
    _, fid40, rep40 = rows[-1]
    ok = increasing and poles and rep40.omnifid > fid40 and elapsed < 120
    table = ", ".join(f"v={v:g}: fid {f:.4f} omni {r.omnifid:.4f}" for v, f, r in rows)
    acceptance(4, ok, f"{table}; up/down > frontal: {poles}; {elapsed:.1f}s (limit 120s)")
    assert ok


def test_c5_noise_parity(acceptance):
    t0 = time.perf_counter()
    ref = synthetic.make_dataset("pole", 64, 256, seed=2)
    ext = MockExtractor()
    details, ok = [], True
    for kind in ("salt_pepper", "gaussian_noise", "gaussian_blur"):
        rows = _sweep(ref, kind, DEFAULT_SWEEPS[kind], ext, 7)
        levels = [lv for lv, _, _ in rows]
        rho_f = spearman(levels, [f for _, f, _ in rows])
        rho_o = spearman(levels, [r.omnifid for _, _, r in rows])
        strict = all(b[1] > a[1] and b[2].omnifid > a[2].omnifid for a, b in zip(rows, rows[1:]))
        ok &= strict and rho_f == 1.0 and rho_o == 1.0
        details.append(f"{kind} rho(fid)={rho_f:g} rho(omni)={rho_o:g}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 180
    acceptance(5, ok, f"{'; '.join(details)}; {elapsed:.1f}s (limit 180s)")
    assert ok


def test_c6_ds_exactness(acceptance):
    cfg = DsConfig("scharr_first_order", 0.1)
    step_img = np.zeros((64, 128, 3))
    step_img[:, :64] = 255.0  # left half bright: strip columns 3..5 = 255
    step = ds_image(step_img, cfg)
    ramp_strip = SeamStrip(np.tile(10.0 * np.arange(6), (64, 1)))
    ramp = ds_strip(convolve_kernel(ramp_strip, cfg), ramp_strip.length, cfg)
    const = ds_image(np.full((64, 128, 3), 77.0), cfg)
    ramp_want = 2 * (320 / 320.1) / 2
    ok = (abs(step - 40800) <= 1e-6 * 40800 and abs(ramp - ramp_want) <= 1e-6 * ramp_want and const == 0.0)
    acceptance(6, ok, f"step {step!r} (want 40800), ramp {ramp!r} (want {ramp_want!r}), constant {const!r}")
    assert ok


def test_c7_ds_separation_and_resolution(acceptance):
    t0 = time.perf_counter()
    seamless = [synthetic.seam_panorama(512, 256, 0.0, seed=3, index=i) for i in range(16)]
    injected = [synthetic.seam_panorama(512, 256, 24.0, seed=3, index=i) for i in range(16)]
    clean_mean = np.mean([ds_image(x) for x in seamless])
    bad_mean = np.mean([ds_image(x) for x in injected])
    steps = [12.0, 3.0, 30.0, 1.0, 21.0, 6.0, 40.0, 9.0, 16.0, 2.0]
    ranks = {}
    for w in (512, 2048):
        scores = [ds_image(synthetic.seam_panorama(w, w // 2, s, seed=4)) for s in steps]
        ranks[w] = list(np.argsort(scores, kind="stable"))
    elapsed = time.perf_counter() - t0
    ratio = bad_mean / clean_mean
    ok = ratio >= 10 and ranks[512] == ranks[2048] == list(np.argsort(steps)) and elapsed < 60
    acceptance(7, ok, f"mean DS seamless {clean_mean:.3f} vs injected {bad_mean:.1f} (ratio {ratio:.0f}, need >= 10); "
                      f"ranking identical at 512x256 and 2048x1024: {ranks[512] == ranks[2048]}; {elapsed:.1f}s (limit 60s)")
    assert ok


def test_c8_projection_round_trip(acceptance):
    w, h, n = 1024, 512, 256
    img = synthetic.smooth_panorama(w, h, seed=0)
    cm = equirect_to_cubemap(img, n)
    # oracle: each face against the analytic field sampled at its pixel directions
    face_psnr = min(psnr(cm[f], synthetic.smooth_field(*vectors_to_angles(face_pixel_vectors(f, n)), seed=0))
                    for f in FACES)
    back = cubemap_to_equirect(cm, w, h)
    band = slice(int(round(0.05 * h)), h - int(round(0.05 * h)))
    value = psnr(back[band], img[band])
    ok = value >= 30.0
    acceptance(8, ok, f"round-trip PSNR {value:.2f} dB (need >= 30, 5% pole rows excluded); "
                      f"face vs analytic oracle min PSNR {face_psnr:.2f} dB")
    assert ok


def _pipeline(cwd, monkeypatch):
    monkeypatch.chdir(cwd)
    steps = [
        ["synth", "--out", "data", "--kind", "pole", "--count", 8, "--width", 64, "--seed", 5],
        ["corrupt", "--input", "data", "--out", "corrupt", "--sweep", "gaussian_noise:10,40",
         "--sweep", "fov:40", "--seed", 13, "--jobs", 2],
        ["omnifid", "--ref", "data", "--eval", "corrupt/gaussian_noise_40", "--out", "omni.json",
         "--face-size", 16, "--min-samples", 0, "--jobs", 2],
        ["omnifid", "--ref", "data", "--eval", "corrupt/fov_40", "--out", "omni.csv", "--format", "csv",
         "--face-size", 16, "--min-samples", 0, "--jobs", 1],
        ["ds", "--eval", "corrupt/gaussian_noise_10", "--out", "ds.json", "--jobs", 2],
    ]
    for argv in steps:
        assert main([str(a) for a in argv]) == 0, argv
    out = {}
    for p in sorted(cwd.rglob("*")):
        if p.is_file():
            data = p.read_bytes()
            if p.suffix == ".json" and p.name != "manifest.json":
                rep = json.loads(data)
                rep.pop("timing")
                data = json.dumps(rep, sort_keys=True).encode()
            out[p.relative_to(cwd).as_posix()] = data
    return out


def test_c9_end_to_end_determinism(acceptance, tmp_path, monkeypatch):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    first = _pipeline(tmp_path / "a", monkeypatch)
    second = _pipeline(tmp_path / "b", monkeypatch)
    diff = sorted(k for k in set(first) | set(second) if first.get(k) != second.get(k))
    n_csv = sum(k.endswith(".csv") for k in first)
    n_json = sum(k.endswith(".json") for k in first)
    ok = not diff and n_csv >= 2 and n_json >= 3
    acceptance(9, ok, f"{len(first)} files compared ({n_csv} CSV, {n_json} JSON); differing: {diff or 'none'}")
    assert ok
