import pytest

from revagent.backend import MockBackend, MockEntry
from revagent.corpus import (
    CANONICAL_CATEGORIES,
    Corpus,
    IssueCategory,
    load_corpus,
    parse_diff_hunk,
    ReviewRecord,
)
from revagent.prompts import DIRECTIVES
from revagent.retrieval import EmptyCategoryIndexError
from revagent.trainset import (
    CandidateMode,
    TrainingInstance,
    build_commentator_corpora,
    build_critic_corpus,
    export_jsonl,
    load_jsonl,
)
from oracles import bm25_rank_oracle, code_tokenize_oracle

DIRECTIVE_KEYS = {
    IssueCategory.REFACTORING: "to refactor the code to improve its quality",
    IssueCategory.BUGFIX: "to fix one or more bugs",
    IssueCategory.TESTING: "tests for this code must be written",
    IssueCategory.LOGGING: "to improve the logging of its execution",
    IssueCategory.DOCUMENTATION: "more compliant with the documentation specification",
}


def parse_comment_slots(instance_input):
    """Recover {category label: comment} from a critic instance's input block."""
    _, _, block = instance_input.partition("The five review comments are:\n\n")
    slots = {}
    for part in ("\n\n" + block).split("\n\n[")[1:]:
        label, _, text = part.partition("] ")
        slots[label] = text
    return slots


def one_record(category, diff_text, comment, record_id):
    return ReviewRecord(
        diff=parse_diff_hunk(diff_text, hunk_id=record_id), comment=comment, category=category
    )


class TestBuildCommentatorCorpora:
    def test_partition_is_exact(self, data_dir):
        corpus = load_corpus(data_dir / "corpus_50.jsonl")
        corpora = build_commentator_corpora(corpus)
        assert sum(len(v) for v in corpora.values()) == len(corpus)
        for category, records in corpus.by_category().items():
            assert len(corpora[category]) == len(records)

    def test_single_record_lands_in_its_category(self):
        corpus = Corpus(records=(one_record(IssueCategory.LOGGING, "+log.info(1)", "use debug", "x"),))
        corpora = build_commentator_corpora(corpus)
        assert len(corpora[IssueCategory.LOGGING]) == 1
        assert all(len(corpora[c]) == 0 for c in CANONICAL_CATEGORIES if c is not IssueCategory.LOGGING)

    def test_instructions_carry_the_right_directive(self, data_dir):
        corpus = load_corpus(data_dir / "corpus_50.jsonl")
        corpora = build_commentator_corpora(corpus)
        for category, instances in corpora.items():
            embedded = DIRECTIVES[category]
            embedded = embedded[0].lower() + embedded[1:]
            for instance in instances[:3]:
                assert embedded in instance.instruction
                for other, other_directive in DIRECTIVES.items():
                    if other is category:
                        continue
                    other_embedded = other_directive[0].lower() + other_directive[1:]
                    assert other_embedded not in instance.instruction

    def test_outputs_are_ground_truth_comments(self, data_dir):
        corpus = load_corpus(data_dir / "corpus_50.jsonl")
        corpora = build_commentator_corpora(corpus)
        by_cat = corpus.by_category()
        for category in CANONICAL_CATEGORIES:
            assert [i.output for i in corpora[category]] == [r.comment for r in by_cat[category]]


@pytest.fixture(scope="module")
def built():
    from conftest import DATA_DIR

    corpus = load_corpus(DATA_DIR / "corpus_50.jsonl")
    instances, report = build_critic_corpus(corpus, mode=CandidateMode.CCR)
    return corpus, instances, report


class TestBuildCriticCorpusCcr:

    def test_one_instance_per_record(self, built):
        corpus, instances, report = built
        assert len(instances) == len(corpus) == report.instances

    def test_slots_cover_all_categories_once(self, built):
        _, instances, _ = built
        for instance in instances:
            slots = parse_comment_slots(instance.input)
            assert sorted(slots) == sorted(c.value for c in CANONICAL_CATEGORIES)

    def test_gold_slot_holds_ground_truth(self, built):
        corpus, instances, _ = built
        for record, instance in zip(corpus.records, instances):
            slots = parse_comment_slots(instance.input)
            assert slots[record.category.value] == record.comment
            assert instance.output == (
                f"Selected Category: {record.category.value}\nReview Comment: {record.comment}"
            )

    def test_retrieved_slots_match_oracle_with_self_exclusion(self, built):
        corpus, instances, _ = built
        views = corpus.by_category()
        docs = {
            category: [(r.id, r.diff.raw_text) for r in records]
            for category, records in views.items()
        }
        comments = {
            category: {r.id: r.comment for r in records}
            for category, records in views.items()
        }
        for record, instance in zip(corpus.records, instances):
            slots = parse_comment_slots(instance.input)
            for category in CANONICAL_CATEGORIES:
                if category is record.category:
                    continue
                ranked = bm25_rank_oracle(
                    docs[category], record.diff.raw_text, 1.2, 0.75, code_tokenize_oracle
                )
                eligible = [doc_id for _, doc_id in ranked if doc_id != record.id]
                assert eligible, "fixture should always produce a hit"
                assert slots[category.value] == comments[category][eligible[0]]

    def test_histogram_accounts_for_every_slot(self, built):
        corpus, _, report = built
        assert report.slot_total() == 5 * report.instances
        gold_total = sum(
            sources.get("ground_truth", 0) for sources in report.histogram.values()
        )
        assert gold_total == report.instances
        assert report.ccr_fallbacks == 0

    def test_deterministic(self, built):
        corpus, instances, _ = built
        again, _ = build_critic_corpus(corpus, mode=CandidateMode.CCR)
        assert instances == again


class TestCcrFallback:
    def make_mini_corpus(self):
        # bugfix diff tokenizes to nothing, so every query touching it misses
        records = (
            one_record(IssueCategory.REFACTORING, "+shared = cleanup(shared)", "tidy shared", "m1"),
            one_record(IssueCategory.BUGFIX, "+@@@ !!!", "broken chars", "m2"),
            one_record(IssueCategory.TESTING, "+assert shared == cleanup(shared)", "test shared path", "m3"),
            one_record(IssueCategory.LOGGING, "+log.info(shared)", "log shared at debug", "m4"),
            one_record(IssueCategory.DOCUMENTATION, "+# shared is cleaned", "document shared cleanup", "m5"),
        )
        return Corpus(records=records)

    def test_no_hit_falls_back_to_longest_comment(self):
        corpus = self.make_mini_corpus()
        instances, report = build_critic_corpus(corpus, mode=CandidateMode.CCR)
        # m2's four queries miss (no tokens) and every record's bugfix query
        # misses (m2's doc has no tokens): 4 + 4 fallbacks
        assert report.ccr_fallbacks == 8
        slots = parse_comment_slots(instances[0].input)
        assert slots["bugfix"] == "broken chars"  # only (and longest) bugfix comment

    def test_empty_category_rejected(self):
        records = tuple(
            one_record(c, "+x = 1", f"{c.value} comment", f"e{i}")
            for i, c in enumerate(CANONICAL_CATEGORIES[:4])
        )
        with pytest.raises(EmptyCategoryIndexError):
            build_critic_corpus(Corpus(records=records), mode=CandidateMode.CCR)


class TestBuildCriticCorpusGenerated:
    def make_backends(self):
        return {
            c: MockBackend(
                [MockEntry(DIRECTIVE_KEYS[c], f"Review Comment: generated {c.value} view")],
                model_name=f"gen-{c.value}",
            )
            for c in CANONICAL_CATEGORIES
        }

    def test_four_calls_per_record(self, data_dir):
        corpus = load_corpus(data_dir / "corpus_50.jsonl")
        backends = self.make_backends()
        _, report = build_critic_corpus(corpus, mode=CandidateMode.GENERATED, backends=backends)
        assert sum(b.calls for b in backends.values()) == 4 * len(corpus)
        views = corpus.by_category()
        for category, backend in backends.items():
            assert backend.calls == len(corpus) - len(views[category])
        assert report.ccr_fallbacks == 0

    def test_generated_slots_used(self, data_dir):
        corpus = load_corpus(data_dir / "corpus_50.jsonl")
        instances, _ = build_critic_corpus(
            corpus, mode=CandidateMode.GENERATED, backends=self.make_backends()
        )
        record = corpus.records[0]
        slots = parse_comment_slots(instances[0].input)
        for category in CANONICAL_CATEGORIES:
            if category is record.category:
                assert slots[category.value] == record.comment
            else:
                assert slots[category.value] == f"generated {category.value} view"

    def test_backends_required(self, data_dir):
        corpus = load_corpus(data_dir / "corpus_50.jsonl")
        with pytest.raises(ValueError):
            build_critic_corpus(corpus, mode=CandidateMode.GENERATED)


class TestExportJsonl:
    def test_empty_export(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        assert export_jsonl([], path) == 0
        assert path.read_text(encoding="utf-8") == ""

    def test_round_trip(self, data_dir, tmp_path):
        corpus = load_corpus(data_dir / "corpus_50.jsonl")
        instances = build_commentator_corpora(corpus)[IssueCategory.REFACTORING]
        path = tmp_path / "refactoring.jsonl"
        assert export_jsonl(instances, path) == len(instances)
        assert load_jsonl(path) == instances

    def test_golden_bytes(self, data_dir, golden_dir, tmp_path):
        corpus = load_corpus(data_dir / "corpus_50.jsonl")
        subset = Corpus(records=corpus.records[::5])
        instances = [
            TrainingInstance(i.instruction, i.input, i.output)
            for corpus_list in build_commentator_corpora(subset).values()
            for i in corpus_list
        ]
        path = tmp_path / "export.jsonl"
        export_jsonl(instances, path)
        expected = (golden_dir / "trainset_export.jsonl").read_bytes()
        assert path.read_bytes() == expected

    def test_non_empty_fields_enforced(self):
        with pytest.raises(ValueError):
            TrainingInstance(instruction="", input="x", output="y")
