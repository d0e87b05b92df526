import hashlib

import numpy as np
import pytest

from seismicwave import io
from seismicwave.cli import EXIT_DATA, EXIT_USAGE, main
from seismicwave.graph import build_knn_approx, build_knn_exact, graph_read
from seismicwave.index import build_forward


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--docs-out", str(d / "docs.csr"), "--queries-out", str(d / "q.csr"),
                 "--n-docs", "600", "--n-queries", "30", "--dim", "4000"]) == 0
    assert main(["ground-truth", "--corpus", str(d / "docs.csr"), "--queries", str(d / "q.csr"),
                 "--k", "10", "--out", str(d / "truth.gt")]) == 0
    return d


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_build_index_report_and_determinism(files, capsys):
    a, b = files / "a.swix", files / "b.swix"
    code, out, _ = run(capsys, "build-index", "--corpus", files / "docs.csr", "--out", a, "--lambda", 40, "--beta", 4, "--alpha", 0.5)
    assert code == 0 and "inverted/forward=" in out and "forward_bytes=" in out
    run(capsys, "build-index", "--corpus", files / "docs.csr", "--out", b, "--lambda", 40, "--beta", 4, "--alpha", 0.5)
    assert a.read_bytes() == b.read_bytes()


def test_bad_alpha(files, capsys):
    code, _, err = run(capsys, "build-index", "--corpus", files / "docs.csr", "--out", files / "x", "--lambda", 40, "--beta", 4, "--alpha", 1.5)
    assert code == EXIT_USAGE and "alpha must be in (0,1]" in err
    assert not (files / "x").exists()


def test_build_graph_exact_matches_oracle(files, capsys):
    out = files / "g.swkg"
    code, text, _ = run(capsys, "build-graph", "--corpus", files / "docs.csr", "--out", out, "--kappa", 10, "--exact")
    assert code == 0
    fwd = build_forward(io.read_csr(files / "docs.csr"))
    assert graph_read(out) == build_knn_exact(fwd, 10)
    fields = dict(kv.split("=") for kv in text.split() if "=" in kv)
    assert int(fields["payload_bytes"]) == int(fields["formula_bytes"]) == out.stat().st_size - 24


def test_build_graph_approx_defaults(files, capsys):
    out = files / "ga.swkg"
    assert run(capsys, "build-graph", "--corpus", files / "docs.csr", "--out", out, "--kappa", 5, "--approx")[0] == 0
    fwd = build_forward(io.read_csr(files / "docs.csr"))
    assert graph_read(out) == build_knn_approx(fwd, 5, seed=42)


def test_build_graph_kappa_too_large(files, capsys):
    code, _, err = run(capsys, "build-graph", "--corpus", files / "docs.csr", "--out", files / "x", "--kappa", 600, "--exact")
    assert code == EXIT_USAGE and "kappa" in err


def test_exact_search_equals_ground_truth(files, capsys):
    idx = files / "exact.swix"
    run(capsys, "build-index", "--corpus", files / "docs.csr", "--out", idx, "--lambda", 600, "--beta", 6, "--alpha", 1.0)
    res = files / "exact.gt"
    code, out, _ = run(capsys, "search", "--index", idx, "--queries", files / "q.csr", "--k", 10, "--cut", 1000,
                       "--heap-factor", 1.0, "--obt", "all", "--out", res)
    assert code == 0 and "single-threaded" in out
    assert res.read_bytes() == (files / "truth.gt").read_bytes()


def test_wave_search_and_evaluate(files, capsys):
    idx, g = files / "a.swix", files / "g.swkg"
    if not idx.exists():
        test_build_index_report_and_determinism(files, capsys)
    if not g.exists():
        test_build_graph_exact_matches_oracle(files, capsys)
    before = {p: digest(p) for p in (idx, g, files / "q.csr")}
    r1, r2 = files / "r1.gt", files / "r2.gt"
    args = ["search", "--index", idx, "--graph", g, "--queries", files / "q.csr", "--cut", 3, "--obt", "first", "--expand"]
    assert run(capsys, *args, "--out", r1)[0] == 0
    assert run(capsys, *args, "--out", r2)[0] == 0
    assert r1.read_bytes() == r2.read_bytes()
    assert before == {p: digest(p) for p in before}
    code, out, _ = run(capsys, "evaluate", "--results", r1, "--truth", files / "truth.gt")
    assert code == 0
    acc = float(out.split("mean_accuracy=")[1])
    assert 0.5 < acc <= 1.0


def test_expand_without_graph(files, capsys):
    code, _, err = run(capsys, "search", "--index", files / "a.swix", "--queries", files / "q.csr", "--expand", "--out", files / "x")
    assert code == EXIT_USAGE and "graph" in err


def test_evaluate_identity_and_k_mismatch(files, capsys):
    code, out, _ = run(capsys, "evaluate", "--results", files / "truth.gt", "--truth", files / "truth.gt")
    assert code == 0 and "mean_accuracy=1.000000" in out
    other = files / "truth5.gt"
    run(capsys, "ground-truth", "--corpus", files / "docs.csr", "--queries", files / "q.csr", "--k", 5, "--out", other)
    assert run(capsys, "evaluate", "--results", other, "--truth", files / "truth.gt")[0] == EXIT_DATA


def test_sweep_table(files, capsys):
    code, out, _ = run(capsys, "sweep", "--corpus", files / "docs.csr", "--queries", files / "q.csr", "--truth", files / "truth.gt",
                       "--budget", 2, "--mode", "seismic,wave", "--lambda", "20,40", "--beta-fraction", "0.1", "--alpha", "0.4",
                       "--kappa", "5", "--cut", "1,2,4", "--heap-factor", "1.0", "--repetitions", 1, "--csv", files / "sw")
    assert code == 0
    lines = out.strip().splitlines()
    header = lines[1].split()
    assert header[2:] == [str(c) for c in range(90, 100)]
    assert [ln.split()[0] for ln in lines[3:]] == ["seismic", "wave"]
    assert all(len(ln.split()) == 12 for ln in lines[3:])
    assert (files / "sw.seismic.csv").exists() and (files / "sw.wave.csv").exists()


def test_sweep_bad_mode(files, capsys):
    code, _, err = run(capsys, "sweep", "--corpus", files / "docs.csr", "--queries", files / "q.csr", "--truth", files / "truth.gt", "--mode", "fast")
    assert code == EXIT_USAGE


def test_breakdown_first_ten_ranks(files, capsys):
    code, out, _ = run(capsys, "breakdown", "--index", files / "a.swix", "--queries", files / "q.csr", "--cut", 12, "--repetitions", 1)
    assert code == 0
    ranks = [ln.split(",")[0] for ln in out.splitlines() if ln[:1].isdigit()]
    assert ranks == [str(r) for r in range(10)]


def test_benchmark(files, capsys):
    code, out, _ = run(capsys, "benchmark", "--index", files / "a.swix", "--queries", files / "q.csr", "--truth", files / "truth.gt",
                       "--cut", 4, "--repetitions", 1)
    assert code == 0 and "accuracy=" in out and "mean_us=" in out


def test_missing_and_malformed_inputs(files, capsys):
    assert run(capsys, "breakdown", "--index", files / "nope.swix", "--queries", files / "q.csr")[0] == EXIT_USAGE
    bad = files / "bad.swix"
    bad.write_bytes((files / "a.swix").read_bytes()[:100])
    code, _, err = run(capsys, "breakdown", "--index", bad, "--queries", files / "q.csr")
    assert code == EXIT_DATA and "truncated" in err


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["build-index", "--corpus", "x"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["teleport"])
    assert info.value.code == EXIT_USAGE
