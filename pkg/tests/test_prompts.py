import pytest

from revagent.candidates import CandidateComment, CandidateSource
from revagent.corpus import CANONICAL_CATEGORIES, IssueCategory, parse_diff_hunk
from revagent.prompts import (
    DIRECTIVES,
    DuplicateCategoryError,
    MessageRole,
    NoExemplarsError,
    OthersCategoryError,
    TooManyExemplarsError,
    WrongCandidateCountError,
    commentator_prompt,
    critic_prompt,
    fewshot_prompt,
    msc_critic_prompt,
)

DIFF = parse_diff_hunk(
    "-    if (count = 0) {\n+    if (count == 0) {\n         reset();\n     }", hunk_id="gd1"
)


def make_candidates():
    return [
        CandidateComment(
            c, f"{c.value} perspective comment about reset handling.", CandidateSource.GENERATED
        )
        for c in CANONICAL_CATEGORIES
    ]


def exemplars():
    ex1 = parse_diff_hunk("-    total = total + n;\n+    total += n;", hunk_id="e1")
    ex2 = parse_diff_hunk("-for x in range(len(xs)):\n+for x in xs:", hunk_id="e2")
    return [(ex1, "Use the compound assignment operator."), (ex2, "Iterate the list directly.")]


class TestCommentatorPrompt:
    def test_bugfix_directive_embedded(self):
        rendered = commentator_prompt(IssueCategory.BUGFIX, DIFF).rendered
        assert "the diff hunk needs to be revised to fix one or more bugs" in rendered

    def test_testing_directive_embedded(self):
        rendered = commentator_prompt(IssueCategory.TESTING, DIFF).rendered
        assert "tests for this code must be written" in rendered

    def test_structure_order(self):
        rendered = commentator_prompt(IssueCategory.LOGGING, DIFF).rendered
        role = rendered.index("You are an expert code reviewer.")
        task = rendered.index("to improve the logging of its execution")
        note = rendered.index("begin with a plus (+) sign")
        diff = rendered.index(DIFF.raw_text)
        footer = rendered.index("Review Comment:...")
        assert role < task < note < diff < footer

    def test_pure_function(self):
        first = commentator_prompt(IssueCategory.BUGFIX, DIFF)
        second = commentator_prompt(IssueCategory.BUGFIX, DIFF)
        assert first.rendered == second.rendered
        assert first.role_messages == second.role_messages

    def test_messages_concatenate_to_rendered(self):
        prompt = commentator_prompt(IssueCategory.DOCUMENTATION, DIFF)
        assert "".join(c for _, c in prompt.role_messages) == prompt.rendered
        assert prompt.role_messages[0][0] is MessageRole.SYSTEM
        assert prompt.role_messages[1][0] is MessageRole.USER

    def test_others_rejected(self):
        with pytest.raises(OthersCategoryError):
            commentator_prompt(IssueCategory.OTHERS, DIFF)

    def test_each_directive_in_exactly_one_template(self):
        templates = {
            c: commentator_prompt(c, DIFF).rendered for c in CANONICAL_CATEGORIES
        }
        for category, directive in DIRECTIVES.items():
            embedded = directive[0].lower() + directive[1:]
            owners = [c for c, text in templates.items() if embedded in text]
            assert owners == [category]
        critic_text = critic_prompt(DIFF, make_candidates()).rendered
        msc_text = msc_critic_prompt(DIFF, make_candidates()).rendered
        for directive in DIRECTIVES.values():
            embedded = directive[0].lower() + directive[1:]
            assert embedded not in critic_text
            assert embedded not in msc_text

    def test_golden_snapshot(self, golden_dir):
        expected = (golden_dir / "prompt_commentator_bugfix.txt").read_text(encoding="utf-8")
        assert commentator_prompt(IssueCategory.BUGFIX, DIFF).rendered == expected


class TestCriticPrompt:
    def test_categories_listed_in_canonical_order(self):
        rendered = critic_prompt(DIFF, make_candidates()).rendered
        positions = [rendered.index(f"[{c.value}]") for c in CANONICAL_CATEGORIES]
        assert positions == sorted(positions)

    def test_role_task_duty_present(self):
        rendered = critic_prompt(DIFF, make_candidates()).rendered
        assert "scrutinize these review comments" in rendered
        assert "select the comment that best aligns" in rendered
        assert "Selected Category: <category>" in rendered
        assert "Review Comment: <text>" in rendered

    def test_wrong_candidate_count(self):
        with pytest.raises(WrongCandidateCountError):
            critic_prompt(DIFF, make_candidates()[:4])

    def test_duplicate_category(self):
        candidates = make_candidates()
        candidates[1] = CandidateComment(
            IssueCategory.REFACTORING, "another refactoring view", CandidateSource.GENERATED
        )
        with pytest.raises(DuplicateCategoryError):
            critic_prompt(DIFF, candidates)

    def test_length_grows_with_candidates(self):
        small = critic_prompt(DIFF, make_candidates()).rendered
        big_candidates = [
            CandidateComment(c.category, c.text * 20, c.source) for c in make_candidates()
        ]
        big = critic_prompt(DIFF, big_candidates).rendered
        assert len(big) > len(small)
        for candidate in big_candidates:
            assert candidate.text in big

    def test_golden_snapshot(self, golden_dir):
        expected = (golden_dir / "prompt_critic.txt").read_text(encoding="utf-8")
        assert critic_prompt(DIFF, make_candidates()).rendered == expected


class TestFewshotPrompt:
    def test_example_blocks_precede_query(self):
        three = exemplars() + [
            (parse_diff_hunk("+return cached", hunk_id="e3"), "Return the cached value.")
        ]
        rendered = fewshot_prompt(IssueCategory.REFACTORING, DIFF, three).rendered
        # three example blocks plus the output-format footer
        assert rendered.count("Review Comment:") == 4
        assert rendered.index("Review Comment: Return the cached value.") < rendered.index(
            "For the new diff hunk:"
        )

    def test_most_similar_exemplar_rendered_last(self):
        rendered = fewshot_prompt(IssueCategory.REFACTORING, DIFF, exemplars()).rendered
        first_pos = rendered.index("Use the compound assignment operator.")
        second_pos = rendered.index("Iterate the list directly.")
        assert second_pos < first_pos  # input order is most-similar first

    def test_no_exemplars_rejected(self):
        with pytest.raises(NoExemplarsError):
            fewshot_prompt(IssueCategory.REFACTORING, DIFF, [])

    def test_too_many_exemplars_rejected(self):
        nine = [
            (parse_diff_hunk(f"+x = {i}", hunk_id=f"x{i}"), f"comment {i}") for i in range(9)
        ]
        with pytest.raises(TooManyExemplarsError):
            fewshot_prompt(IssueCategory.REFACTORING, DIFF, nine)

    def test_golden_snapshot(self, golden_dir):
        expected = (golden_dir / "prompt_fewshot_refactoring.txt").read_text(encoding="utf-8")
        rendered = fewshot_prompt(IssueCategory.REFACTORING, DIFF, exemplars()).rendered
        assert rendered == expected


class TestMscCriticPrompt:
    def test_merge_sentence_verbatim(self):
        rendered = msc_critic_prompt(DIFF, make_candidates()).rendered
        assert "Please read these review comments and merge the suitable review comments." in rendered

    def test_no_category_selection_footer(self):
        rendered = msc_critic_prompt(DIFF, make_candidates()).rendered
        assert "Selected Category:" not in rendered
        assert "select the comment that best aligns" not in rendered

    def test_golden_snapshot(self, golden_dir):
        expected = (golden_dir / "prompt_msc_critic.txt").read_text(encoding="utf-8")
        assert msc_critic_prompt(DIFF, make_candidates()).rendered == expected
