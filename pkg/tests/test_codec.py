import numpy as np
import pytest

from lfgc.codec import (Bitstream, CodecReport, EncoderParams, QuantConfig, bitrate_report, decode_lightfield,
                        encode_lightfield)
from lfgc.errors import DataError, MalformedStreamError
from lfgc.model import ViewIndex
from lfgc.quality import psnr_y
from lfgc.segmentation import SlicParams
from scenarios import smooth_scene

SLIC = SlicParams(40, 30)


def _params(**kw):
    base = dict(scheme="multiview", k_h=3, k_v=3, slic=SLIC, max_nodes=300)
    base.update(kw)
    return EncoderParams(**base)


@pytest.fixture(scope="module")
def scene():
    return smooth_scene()


def test_lossless_roundtrip(scene):
    lf, disp, _ = scene
    s = encode_lightfield(lf, disp, _params(quant=QuantConfig(lossless=True)))
    assert psnr_y(lf, decode_lightfield(s.to_bytes())) >= 90


def test_high_quality_point(scene):
    lf, disp, _ = scene
    s = encode_lightfield(lf, disp, _params(scheme="topleft", max_nodes=4096))
    assert psnr_y(lf, decode_lightfield(s)) >= 45


def test_encoding_is_deterministic(scene):
    lf, disp, _ = scene
    a = encode_lightfield(lf, disp, _params()).to_bytes()
    b = encode_lightfield(lf, disp, _params()).to_bytes()
    assert a == b


def test_parallel_matches_sequential(scene):
    lf, disp, _ = scene
    a = encode_lightfield(lf, disp, _params(workers=1)).to_bytes()
    b = encode_lightfield(lf, disp, _params(workers=3)).to_bytes()
    assert a == b
    assert np.array_equal(decode_lightfield(a, workers=1).views, decode_lightfield(a, workers=3).views)


def test_center_scheme_and_report(scene):
    lf, disp, _ = scene
    rep = CodecReport()
    s = encode_lightfield(lf, disp, _params(scheme="center"), rep)
    assert rep.plan.references == (ViewIndex(3, 3),)
    assert rep.n_super_rays > 0 and rep.n_nodes == 25 * 32 * 32
    assert len(s.sideinfo) == 1 and len(s.blocks) == 1


def test_missing_disparity(scene):
    lf, disp, _ = scene
    with pytest.raises(DataError, match=r"missing disparity map for view \(1,4\)"):
        encode_lightfield(lf, {ViewIndex(1, 1): disp[ViewIndex(1, 1)]}, _params())


def test_multiview_needs_spacing(scene):
    lf, disp, _ = scene
    with pytest.raises(DataError):
        encode_lightfield(lf, disp, _params(k_h=None))


def test_auto_refs(scene):
    lf, disp, _ = scene
    rep = CodecReport()
    encode_lightfield(lf, disp, _params(k_h=None, k_v=None, auto_refs=True), rep)
    assert rep.plan.spacing is not None


def test_truncated_stream(scene):
    lf, disp, _ = scene
    data = encode_lightfield(lf, disp, _params()).to_bytes()
    for cut in (len(data) - 1, len(data) // 2, 30):
        with pytest.raises(MalformedStreamError, match="malformed stream at offset"):
            decode_lightfield(data[:cut])


def test_corrupted_block_payload(scene):
    lf, disp, _ = scene
    s = encode_lightfield(lf, disp, _params())
    s.blocks[0] = s.blocks[0][:6]
    with pytest.raises(MalformedStreamError):
        decode_lightfield(s)


def test_bitrate_report(scene):
    lf, disp, _ = scene
    s = encode_lightfield(lf, disp, _params())
    r = bitrate_report(s, lf)
    assert r["bytes"] == len(s.to_bytes())
    assert r["header_bytes"] + r["sideinfo_bytes"] + r["coefficient_bytes"] == r["bytes"]
    assert r["bpp"] == pytest.approx(8 * r["bytes"] / (25 * 32 * 32))
    assert bitrate_report(s, n_views=50)["bpp"] == pytest.approx(r["bpp"] / 2)
    assert r["n_blocks"] == 4 and len(r["sideinfo_per_reference"]) == 4


def test_empty_coefficient_stream_counts_header_and_sideinfo():
    s = Bitstream(1, 1, 2, 2, "topleft", {"plan": {"references": [[1, 1]], "blocks": []}}, [b"abc"], [])
    r = bitrate_report(s)
    assert r["coefficient_bytes"] == 0 and r["bytes"] == r["header_bytes"] + r["sideinfo_bytes"]


def test_psnr_monotone_in_qp_rest(scene):
    lf, disp, _ = scene
    values = []
    for qp in (10, 20, 30, 40):
        s = encode_lightfield(lf, disp, _params(quant=QuantConfig(4, qp), max_nodes=4096))
        values.append(psnr_y(lf, decode_lightfield(s)))
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_group_zero_energy_compaction(scene):
    from lfgc.codec.quant import group_bounds
    from lfgc.graph import BlockIndex, gft, igft, spectral_basis
    from lfgc.projection import make_plan, run_plan
    from lfgc.segmentation import median_disparity_per_label, slic_segment

    lf, disp, _ = scene
    plan = make_plan("topleft", 5, 5)
    ref = plan.references[0]
    lm = slic_segment(lf.view(ref), SLIC)
    t = median_disparity_per_label(lm, disp[ref])
    labels = run_plan(plan, {ref: lm}, {ref: t})
    index = BlockIndex(lf.indices(), labels, t.n_labels)
    kept = total = 0.0
    for lab in range(t.n_labels):
        g = index.graph(lab, float(t.median[lab]), lf)
        b = spectral_basis(g)
        c = gft(b, g.signal)
        c[group_bounds(len(c))[1]:] = 0
        kept += np.sum(igft(b, c) ** 2)
        total += np.sum(g.signal ** 2)
    assert kept / total >= 0.8
