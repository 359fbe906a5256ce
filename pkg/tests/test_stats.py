import numpy as np
import pytest

from cvtok.grid import BitGrid, SilhouetteSequence
from cvtok.stats import (
    EmptyCorpusError,
    FrequencyTable,
    acr_table,
    compute_acr,
    compute_density,
    compute_heatmap,
    compute_histogram,
    density_report,
    histogram_from_values,
    roundtrip_report,
)
from cvtok.vocab import build_vocabulary, estimate_frequencies

from .oracles import dense, naive_maps, naive_pixel_counts
from .test_extractors import donut

TABLE1 = {
    "SUSTech1K": {"silhouette": 0.212, "contour": 0.045, "velocity": 0.018},
    "GREW": {"silhouette": 0.250, "contour": 0.041, "velocity": 0.020},
    "Gait3D": {"silhouette": 0.202, "contour": 0.041, "velocity": 0.021},
}


def test_acr_reproduces_reference_table():
    rows = acr_table(TABLE1)
    assert abs(rows["contour"] * 100 - 19.3) <= 0.15
    assert abs(rows["velocity"] * 100 - 9.0) <= 0.15
    assert rows["silhouette"] == 1.0


def test_acr_identity_and_errors():
    assert compute_acr([(0.2, 0.2), (0.5, 0.5)]) == 1.0
    with pytest.raises(ValueError):
        compute_acr([(0.0, 0.1)])
    with pytest.raises(ValueError):
        compute_acr([])


def test_full_frame_densities():
    report = density_report([SilhouetteSequence((BitGrid.ones(64, 44),))])
    assert report.silhouette.density == 1.0
    assert report.contour.density == 212 / 2816
    assert report.velocity.density == 0.0
    assert report.velocity.density_excluding_first is None


def test_densities_match_double_loop(corpus_1000):
    s_n = c_n = v_n = 0
    for seq in corpus_1000:
        s, c, v = naive_pixel_counts(dense(seq))
        s_n, c_n, v_n = s_n + s, c_n + c, v_n + v
    total = 1000 * 2816
    report = density_report(corpus_1000)
    assert report.silhouette.density == s_n / total
    assert report.contour.density == c_n / total
    assert report.velocity.density == v_n / total
    assert report.velocity.density < report.contour.density < report.silhouette.density
    assert compute_density(corpus_1000, "contour") == report.contour
    # 25 sequences of 40: 975 frames have a predecessor
    assert report.velocity.density_excluding_first == v_n / (975 * 2816)


def test_density_empty_corpus():
    with pytest.raises(EmptyCorpusError):
        compute_density([], "silhouette")


def test_density_unknown_map(small_corpus):
    with pytest.raises(ValueError, match="map type"):
        compute_density(small_corpus, "depth")


def test_per_sequence_breakdown(small_corpus):
    entry = compute_density(small_corpus, "silhouette")
    assert [label for label, _ in entry.per_sequence] == ["0000", "0001", "0002", "0003"]
    assert np.mean([d for _, d in entry.per_sequence]) == pytest.approx(entry.density)


# -- histograms ---------------------------------------------------------------------


def _table(freqs, frames=10):
    freqs = np.asarray(freqs, float)
    n = len(freqs)
    return FrequencyTable(
        np.arange(n), freqs, np.ones(n), np.arange(n) // (n // 2), frames, 1 / frames, 0.5, 0.1
    )


def test_histogram_same_frequency_one_bin():
    h = compute_histogram(_table([0.3] * 10), "all", 10)
    assert np.count_nonzero(h.counts) == 1
    assert h.counts.sum() == 10


def test_histogram_empty_table():
    h = compute_histogram(_table([0.0] * 10), "all", 8)
    assert not h.counts.any()
    assert h.zero_count == 10


def test_histogram_edges_log_spaced():
    h = histogram_from_values([0.5], bins=4, low=1e-4)
    np.testing.assert_allclose(h.edges, [1e-4, 1e-3, 1e-2, 1e-1, 1.0])
    with pytest.raises(ValueError):
        histogram_from_values([0.5], bins=1)


def test_histogram_counts_nonzero_tokens(small_corpus):
    vocab = build_vocabulary(2816)
    ft = estimate_frequencies(small_corpus, vocab)
    for channel in ("contour", "velocity"):
        h = compute_histogram(ft, channel, 12)
        values = ft.frequencies[ft.channels == ("contour", "velocity").index(channel)]
        assert h.counts.sum() == np.count_nonzero(values)
        assert h.zero_count == np.count_nonzero(values == 0)
    csv = compute_histogram(ft, "contour", 12).to_csv().splitlines()
    assert csv[0] == "tag,lower,upper,count" and len(csv) == 14


# -- heatmaps -------------------------------------------------------------------------


def test_heatmap_of_identical_frames():
    g = BitGrid.from_indices([3, 50, 100], 16, 16)
    hm = compute_heatmap([SilhouetteSequence((g,) * 4)], "silhouette")
    assert np.array_equal(hm.values, g.to_array())


def test_contour_range_normalization(corpus_1000):
    hm = compute_heatmap(corpus_1000, "contour", "contour-range")
    assert hm.values.max() == 1.0
    sil = compute_heatmap(corpus_1000, "silhouette", "contour-range")
    raw = compute_heatmap(corpus_1000, "silhouette", "raw")
    contour_max = compute_heatmap(corpus_1000, "contour").values.max()
    # torso pixels exceed the busiest contour pixel and clamp
    assert (raw.values > contour_max).sum() >= 1
    assert sil.values.max() == 1.0 and sil.values.min() >= 0.0


def test_heatmap_agrees_with_frequency_table(small_corpus):
    vocab = build_vocabulary(2816, seed=5)
    ft = estimate_frequencies(small_corpus, vocab)
    for channel, map_type in enumerate(("contour", "velocity")):
        hm = compute_heatmap(small_corpus, map_type).values.ravel()
        tokens = [vocab.token_id(channel, p) for p in range(2816)]
        assert np.array_equal(hm, ft.frequency(tokens))


def test_heatmap_matches_naive_maps(small_corpus):
    _, velocities = naive_maps(dense(small_corpus[1]))
    hm = compute_heatmap(small_corpus[1:2], "velocity")
    assert np.array_equal(hm.values, velocities.mean(axis=0))


def test_heatmap_exports(small_corpus):
    hm = compute_heatmap(small_corpus, "contour", "contour-range")
    pgm8 = hm.to_pgm(8)
    assert pgm8.startswith(b"P5\n44 64\n255\n") and len(pgm8) == 13 + 2816
    pgm16 = hm.to_pgm(16)
    assert pgm16.startswith(b"P5\n44 64\n65535\n") and len(pgm16) == 15 + 2 * 2816
    assert b"\xff\xff" in pgm16
    assert len(hm.to_csv().splitlines()) == 64
    with pytest.raises(ValueError):
        hm.to_pgm(12)


def test_heatmap_empty_corpus():
    with pytest.raises(EmptyCorpusError):
        compute_heatmap([], "contour")


# -- round trip -------------------------------------------------------------------------


def test_roundtrip_hole_free(small_corpus):
    rt = roundtrip_report(small_corpus)
    assert (rt.frames, rt.mismatched_frames, rt.mismatched_pixels, rt.worst) == (120, 0, 0, None)


def test_roundtrip_donut():
    seq = SilhouetteSequence((BitGrid.zeros(32, 32), donut()), label="d")
    rt = roundtrip_report([seq], "exterior-fill")
    assert rt.mismatched_frames == 1
    assert rt.mismatched_pixels == 36
    assert rt.worst == ("d", 1, 36)
    assert roundtrip_report([seq], "parity-fill").mismatched_pixels == 0
