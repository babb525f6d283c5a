import csv
import io

import numpy as np
import pytest

from ocolab.cli import main, parse_seeds, read_config
from ocolab.core import ClassTag, FeasibleRegion, ProblemBounds
from ocolab.harness import (
    ALGORITHMS,
    RUN_HEADER,
    SUMMARY_HEADER,
    ExperimentConfig,
    emit_csv,
    make_learner,
    run_grid,
    run_single,
)
from ocolab.instances import FixedStream, Instance, LossStream, OfflineOracle, make_exp1, make_exp2, make_ons_adversary
from ocolab.losses import HalfSquaredLoss


def csv_text(data):
    buf = io.StringIO()
    emit_csv(data, buf)
    return buf.getvalue()


class ZeroOracle(OfflineOracle):
    def opt_value(self, t):
        return 0.0


def constant_instance(c=0.3, T=400):
    losses = [HalfSquaredLoss([c], ClassTag(1.0, 1.0)) for _ in range(T)]
    region = FeasibleRegion.box(0.0, 1.0)
    bounds = ProblemBounds(D=1.0, G=1.0, T=T, alpha=1.0, lam=1.0, k=0)
    return Instance("constant", FixedStream(losses), ZeroOracle(), bounds, region, np.zeros(1))


@pytest.mark.parametrize("name", sorted(ALGORITHMS))
def test_constant_stream_average_regret_shrinks(name):
    inst = constant_instance()
    curve = dict(run_single(name, inst, stride=100).curve)
    assert all(0 <= r <= 10 for r in curve.values())
    avg = [curve[t] / t for t in sorted(curve)]
    assert all(b <= a + 1e-12 for a, b in zip(avg, avg[1:]))


def test_run_is_replayable():
    inst = make_exp2(1000, 250, 0)
    a = run_single("ogd", inst)
    b = run_single("ogd", inst)
    assert a.records == b.records


class ProbeStream(LossStream):
    """Records the order of predict and query calls."""

    adaptive = True

    def __init__(self, T, log):
        super().__init__(T)
        self.log = log

    def next(self, t, x_t):
        self.log.append(("query", t, float(x_t[0])))
        return HalfSquaredLoss([0.5])


class ProbeLearner:
    def __init__(self, inner, log):
        self.inner, self.log = inner, log

    def start(self, *a):
        self.inner.start(*a)
        return self

    def predict(self):
        x = self.inner.predict()
        self.log.append(("predict", self.inner.t_, float(x[0])))
        return x

    def observe(self, g, tag=None):
        self.log.append(("observe", self.inner.t_))
        self.inner.observe(g, tag)


def test_no_peeking_at_the_loss():
    log = []
    inst = Instance("probe", ProbeStream(5, log), ZeroOracle(), ProblemBounds(D=1, G=1, T=5), FeasibleRegion.box(0, 1), np.zeros(1))
    run_single(ProbeLearner(make_learner("ogd"), log), inst, stride=5)
    kinds = [e[0] for e in log]
    assert kinds == ["predict", "query", "observe"] * 5
    for p, q in zip(log[0::3], log[1::3]):
        assert p[2] == q[2]


def test_adversary_grows_faster_than_exp1():
    # log-log slope of final regret across horizons; the switch round scales with T
    def slope(make):
        r = [run_single("ons", make(T), stride=T).final_regret for T in (500, 1000)]
        return np.log(r[1] / r[0]) / np.log(2.0)

    adv = slope(make_ons_adversary)
    e1 = slope(lambda T: make_exp1(T, T // 4, 0))
    assert adv > e1
    assert adv > 0.5


def test_non_finite_iterate_aborts():
    class Broken:
        def start(self, *a):
            return self

        def predict(self):
            return np.array([np.nan])

        def observe(self, g, tag=None):
            pass

    with pytest.raises(RuntimeError, match="non-finite"):
        run_single(Broken(), make_exp2(10, 2, 0))


class TestConfig:
    def test_rejects_unknown_algorithm(self):
        with pytest.raises(ValueError):
            ExperimentConfig("exp2", algorithms=("sgd",))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            ExperimentConfig("exp2", algorithms=())
        with pytest.raises(ValueError):
            ExperimentConfig("exp2", seeds=0)
        with pytest.raises(ValueError):
            ExperimentConfig("exp2", stride=0)

    def test_seed_list(self):
        assert ExperimentConfig("exp2", seeds=3).seed_list == (0, 1, 2)
        assert ExperimentConfig("exp2", seeds=[5, 2]).seed_list == (5, 2)


SMALL = dict(T=200, k=50, algorithms=("ogd", "metagrad", "hybrid_s2_empty"))


class TestGrid:
    def test_single_seed_zero_std(self):
        stats = run_grid(ExperimentConfig("exp2", seeds=1, **SMALL)).summary
        for name in stats.algorithms:
            assert np.all(stats.std_regret[name] == 0.0)

    def test_duplicate_seeds_zero_std(self):
        stats = run_grid(ExperimentConfig("exp2", seeds=(4, 4), **SMALL)).summary
        for name in stats.algorithms:
            assert np.all(stats.std_regret[name] == 0.0)
        assert len(stats.seeds) == 2

    def test_seed_order_does_not_change_aggregates(self):
        a = run_grid(ExperimentConfig("exp2", seeds=(0, 1, 2), **SMALL))
        b = run_grid(ExperimentConfig("exp2", seeds=(2, 0, 1), **SMALL))
        assert csv_text(a.summary) == csv_text(b.summary)
        assert sorted(a.rows) == sorted(b.rows)

    def test_byte_identical_csv(self):
        cfg = ExperimentConfig("exp1", seeds=2, **SMALL)
        assert csv_text(run_grid(cfg)) == csv_text(run_grid(cfg))

    def test_parallel_matches_serial(self):
        cfg = ExperimentConfig("exp2", seeds=3, **SMALL)
        assert csv_text(run_grid(cfg, workers=2).summary) == csv_text(run_grid(cfg).summary)


class TestCsv:
    def test_empty_is_header_only(self):
        assert csv_text([]) == ",".join(RUN_HEADER) + "\n"

    def test_row_count(self):
        res = run_grid(ExperimentConfig("exp2", T=100, k=25, seeds=1, algorithms=("ogd",)))
        lines = csv_text(res).splitlines()
        assert lines[0].split(",") == RUN_HEADER
        assert len(lines) == 5

    def test_summary_header(self):
        res = run_grid(ExperimentConfig("exp2", T=100, k=25, seeds=1, algorithms=("ogd",)))
        assert csv_text(res.summary).splitlines()[0].split(",") == SUMMARY_HEADER

    def test_reaggregation_round_trip(self):
        res = run_grid(ExperimentConfig("exp2", seeds=5, **SMALL))
        rows = list(csv.DictReader(io.StringIO(csv_text(res))))
        stats = res.summary
        for name in stats.algorithms:
            for i, t in enumerate(stats.checkpoints):
                vals = np.array([float(r["regret"]) for r in rows if r["algorithm"] == name and int(r["t"]) == t])
                assert len(vals) == 5
                assert abs(vals.mean() - stats.mean_regret[name][i]) <= 1e-12
                assert abs(vals.std() - stats.std_regret[name][i]) <= 1e-12

    def test_seventeen_digits(self):
        assert csv_text([("e", "a", 0, 1, 0.1, 1 / 3, 2.0)]).splitlines()[1] == "e,a,0,1,0.10000000000000001,0.33333333333333331,2"

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError):
            emit_csv([], tmp_path / "missing" / "x.csv")


class TestCli:
    def test_no_arguments(self, capsys):
        assert main([]) == 2
        assert "usage" in capsys.readouterr().err

    def test_bad_flag(self, capsys):
        assert main(["exp2", "--bogus"]) == 2

    def test_bad_algorithm(self, capsys):
        assert main(["exp2", "--T", "50", "--k", "10", "--seeds", "1", "--algos", "sgd"]) == 2

    def test_selftest(self):
        lines = []
        assert main(["selftest"], out=lines.append) == 0
        assert all(line.startswith("PASS") for line in lines)

    def test_run_writes_outputs(self, tmp_path):
        out, summary, svg = tmp_path / "r.csv", tmp_path / "s.csv", tmp_path / "p.svg"
        argv = ["exp2", "--T", "100", "--k", "25", "--seeds", "2", "--algos", "ogd,hybrid_s2_empty", "--out", str(out), "--summary", str(summary), "--svg", str(svg)]
        assert main(argv, out=lambda s: None) == 0
        assert len(out.read_text().splitlines()) == 1 + 2 * 2 * 4
        assert len(summary.read_text().splitlines()) == 1 + 2 * 4
        first = svg.read_bytes()
        assert main(argv, out=lambda s: None) == 0
        assert svg.read_bytes() == first

    def test_config_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# small run\nT = 100\nk = 25\nseeds = 1\nalgos = ogd  # baseline\nout = %s\n" % (tmp_path / "a.csv"))
        assert main(["exp2", "--config", str(cfg)], out=lambda s: None) == 0
        assert len((tmp_path / "a.csv").read_text().splitlines()) == 5
        assert main(["exp2", "--config", str(cfg), "--T", "60", "--k", "10", "--out", str(tmp_path / "b.csv")], out=lambda s: None) == 0
        assert len((tmp_path / "b.csv").read_text().splitlines()) == 1 + 3  # t = 25, 50, 60

    def test_config_errors(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("colour = blue\n")
        with pytest.raises(Exception, match="unknown key"):
            read_config(str(cfg))
        assert main(["exp2", "--config", str(cfg)]) == 2

    def test_certify(self):
        lines = []
        assert main(["certify", "--instance", "exp1", "--T", "40", "--k", "10", "--samples", "8"], out=lines.append) == 0
        assert "30/30" in lines[-1]

    def test_adversary(self):
        lines = []
        assert main(["adversary", "--T", "200", "--seeds", "1"], out=lines.append) == 0
        assert "ons" in lines[-1]

    def test_parse_seeds(self):
        assert parse_seeds("7") == 7
        assert parse_seeds("3,1,2") == (3, 1, 2)
