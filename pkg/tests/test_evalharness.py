import itertools
import logging

import pytest

from mimor.engines import RsvList
from mimor.evalharness import (
    QrelParseError,
    SessionConfig,
    average_precision,
    combmnz,
    combsum,
    load_qrels,
    precision_at_k,
    simulate_session,
)

from conftest import make_corpus


# ---------------------------------------------------------------------------
# independent direct-definition oracles


def oracle_ap(ranked, relevant):
    """Per relevant doc: precision at its rank when retrieved, else 0."""
    contributions = []
    for doc in relevant:
        if doc in ranked:
            rank = ranked.index(doc) + 1
            hits_above = sum(1 for d in ranked[:rank] if d in relevant)
            contributions.append(hits_above / rank)
        else:
            contributions.append(0.0)
    return sum(contributions) / len(relevant)


def oracle_p_at_k(ranked, relevant, k):
    hits = 0
    for doc in ranked[:k]:
        if doc in relevant:
            hits += 1
    return hits / k


class TestLoadQrels:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("")
        qrels = load_qrels(path)
        assert qrels.relevant == {} and qrels.nonrelevant == {}

    def test_basic_line(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("q1 0 d1 1\nq1 0 d2 0\n")
        qrels = load_qrels(path)
        assert qrels.relevant["q1"] == {"d1"}
        assert qrels.nonrelevant["q1"] == {"d2"}

    def test_graded_relevance_rejected(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("q1 0 d1 2\n")
        with pytest.raises(QrelParseError, match="line 1"):
            load_qrels(path)

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("q1 0 d1 1\nq1 d2 1\n")
        with pytest.raises(QrelParseError, match="line 2"):
            load_qrels(path)


class TestMetrics:
    def test_ap_hand_computed(self):
        # relevant at ranks 1 and 3 of 2 relevant: (1 + 2/3) / 2
        ap = average_precision(["r1", "x", "r2", "y"], {"r1", "r2"})
        assert ap == pytest.approx(0.8333333333333333, abs=1e-12)

    def test_ap_no_relevant_retrieved(self):
        assert average_precision(["x", "y"], {"r"}) == 0.0

    def test_ap_perfect_ranking(self):
        assert average_precision(["r1", "r2", "x"], {"r1", "r2"}) == 1.0

    def test_ap_empty_relevant_set_rejected(self):
        with pytest.raises(ValueError):
            average_precision(["x"], set())

    def test_p_at_k_basic(self):
        assert precision_at_k(["r1", "x", "r2", "y", "z"], {"r1", "r2"}, 5) == 0.4

    def test_p_at_k_empty_ranking(self):
        assert precision_at_k([], {"r"}, 10) == 0.0

    def test_p_at_1(self):
        assert precision_at_k(["r"], {"r"}, 1) == 1.0

    def test_p_at_k_divides_by_k_even_when_short(self):
        assert precision_at_k(["r"], {"r"}, 4) == 0.25

    def test_exhaustive_small_case_sweep(self):
        # every ranking of <= 6 docs against every relevant subset of size
        # <= 3, including truncated rankings for n <= 4
        docs = [f"d{i}" for i in range(6)]
        checked = 0
        for n in range(1, 7):
            universe = docs[:n]
            subsets = [
                set(c)
                for size in range(1, min(3, n) + 1)
                for c in itertools.combinations(universe, size)
            ]
            for perm in itertools.permutations(universe):
                rankings = [list(perm)]
                if n <= 4:
                    rankings.extend(list(perm)[:cut] for cut in range(n))
                for ranked in rankings:
                    for relevant in subsets:
                        assert average_precision(ranked, relevant) == pytest.approx(
                            oracle_ap(ranked, relevant), abs=1e-12
                        )
                        for k in (1, 3, 5):
                            assert precision_at_k(ranked, relevant, k) == pytest.approx(
                                oracle_p_at_k(ranked, relevant, k), abs=1e-12
                            )
                        checked += 1
        assert checked > 30000

    def test_metrics_in_unit_interval(self):
        ranked = ["a", "b", "c", "d"]
        for relevant in ({"a"}, {"a", "c"}, {"z"}, {"a", "b", "c"}):
            assert 0.0 <= average_precision(ranked, relevant) <= 1.0
            assert 0.0 <= precision_at_k(ranked, relevant, 3) <= 1.0


def rsv(engine, scores):
    return RsvList(query_id="q", engine_id=engine, scores=scores, normalized=True)


class TestCombFusion:
    def test_doc_in_both_lists(self):
        lists = [rsv("e1", {"d": 0.5}), rsv("e2", {"d": 0.5})]
        assert combsum(lists) == {"d": 1.0}
        assert combmnz(lists) == {"d": 2.0}

    def test_doc_in_one_list(self):
        lists = [rsv("e1", {"d": 0.5}), rsv("e2", {})]
        assert combsum(lists) == {"d": 0.5}
        assert combmnz(lists) == {"d": 0.5}

    def test_no_lists(self):
        assert combsum([]) == {}
        assert combmnz([]) == {}

    def test_zero_score_not_counted_by_mnz(self):
        lists = [rsv("e1", {"d": 0.0}), rsv("e2", {"d": 0.8})]
        assert combmnz(lists) == {"d": pytest.approx(0.8)}

    def test_permutation_symmetry(self):
        a = [rsv("e1", {"d": 0.2, "x": 0.9}), rsv("e2", {"d": 0.7}), rsv("e3", {"x": 0.1})]
        for perm in itertools.permutations(a):
            assert combsum(list(perm)) == combsum(a)
            assert combmnz(list(perm)) == combmnz(a)


@pytest.fixture
def session_corpus():
    return make_corpus(
        {
            "d1": "apple pie recipe with cinnamon",
            "d2": "apple orchard growing guide",
            "d3": "pie crust baking tips",
            "d4": "cinnamon spice history",
            "d5": "guide to growing pears",
            "d6": "unrelated text about volcanoes",
        }
    )


QUERIES = [("q1", "apple pie"), ("q2", "growing guide")]


def write_qrels(tmp_path, lines):
    path = tmp_path / "qrels.txt"
    path.write_text("\n".join(lines) + "\n")
    return load_qrels(path)


class TestSimulateSession:
    def qrels(self, tmp_path):
        return write_qrels(
            tmp_path,
            ["q1 0 d1 1", "q1 0 d3 1", "q1 0 d4 0", "q2 0 d2 1", "q2 0 d5 1"],
        )

    def test_zero_learning_rate_freezes_weights(self, session_corpus, tmp_path):
        config = SessionConfig(epsilon=0.0, mode="flat", judge_depth=5, iterations=3)
        report = simulate_session(session_corpus, QUERIES, self.qrels(tmp_path), config)
        snapshots = [it["public_weights"] for it in report.iterations]
        assert snapshots[0] == snapshots[1] == snapshots[2]

    def test_deterministic(self, session_corpus, tmp_path):
        config = SessionConfig(epsilon=0.05, mode="flat", judge_depth=5, iterations=3, seed=9)
        qrels = self.qrels(tmp_path)
        a = simulate_session(session_corpus, QUERIES, qrels, config)
        b = simulate_session(session_corpus, QUERIES, qrels, config)
        assert a.to_dict() == b.to_dict()
        assert a.to_json() == b.to_json()

    def test_query_without_qrels_skipped_with_warning(self, session_corpus, tmp_path, caplog):
        qrels = write_qrels(tmp_path, ["q1 0 d1 1"])
        config = SessionConfig(mode="flat", iterations=1)
        with caplog.at_level(logging.WARNING):
            report = simulate_session(
                session_corpus, QUERIES + [("q9", "volcanoes")], qrels, config
            )
        assert "q9" in caplog.text
        assert report.iterations

    def test_all_positive_feedback_weights_non_decreasing(self, session_corpus, tmp_path):
        qrels = write_qrels(tmp_path, ["q1 0 d1 1", "q1 0 d3 1", "q2 0 d2 1", "q2 0 d5 1"])
        config = SessionConfig(epsilon=0.05, mode="flat", judge_depth=6, iterations=4)
        report = simulate_session(session_corpus, QUERIES, qrels, config)
        snapshots = [it["public_weights"] for it in report.iterations]
        for before, after in zip(snapshots, snapshots[1:]):
            for row_b, row_a in zip(before, after):
                for wb, wa in zip(row_b, row_a):
                    assert wa >= wb

    def test_metrics_within_bounds_and_report_shape(self, session_corpus, tmp_path):
        config = SessionConfig(mode="flat", iterations=2)
        report = simulate_session(session_corpus, QUERIES, self.qrels(tmp_path), config)
        assert len(report.iterations) == 2
        for it in report.iterations:
            for system, m in it["metrics"].items():
                assert set(m) == {"map", "p5", "p10"}
                for v in m.values():
                    assert 0.0 <= v <= 1.0
        assert "fused" in report.final["metrics"]
        assert "combsum" in report.final["metrics"]
        assert "combmnz" in report.final["metrics"]
        assert report.summary_table().startswith("system")

    def test_bad_config(self):
        with pytest.raises(ValueError):
            SessionConfig(judge_depth=0)
        with pytest.raises(ValueError):
            SessionConfig(iterations=0)
