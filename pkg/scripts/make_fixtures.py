#!/usr/bin/env python3
"""Regenerate the deterministic fixtures under tests/data/.

The corpus files are synthetic but shaped like real review data: short
multi-language diff hunks whose comments mention identifiers from the diff.
Rerunning this script reproduces every file byte-for-byte.
"""

import json
import random
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

# --- 20-record stats fixture (literal content; stats are frozen in tests) ----

CORPUS_20 = [
    # (category, diff, comment)
    (
        "refactoring",
        "-    int result = compute(a, b);\n-    return result;\n+    return compute(a, b);\n }",
        "Inline the temporary variable and return the call result directly.",
    ),
    (
        "refactoring",
        "-if user is not None:\n-    if user.active:\n-        notify(user)\n+if user is not None and user.active:\n+    notify(user)",
        "Merge the nested conditions into a single guard clause.",
    ),
    (
        "refactoring",
        " def load(path):\n-    data = open(path).read()\n+    with open(path) as fh:\n+        data = fh.read()\n     return data",
        "Use a context manager so the file handle is always closed.",
    ),
    (
        "refactoring",
        "-for (int i = 0; i < names.size(); i++) {\n-    process(names.get(i));\n-}\n+for (String name : names) {\n+    process(name);\n+}",
        "Prefer the enhanced for loop over index-based iteration here.",
    ),
    (
        "refactoring",
        "-const ok = value === true ? true : false;\n+const ok = value === true;",
        "The ternary is redundant; assign the comparison result directly.",
    ),
    (
        "refactoring",
        "-def handle(req, res, ctx, opts, flags):\n+def handle(req, res, ctx):\n     dispatch(req)",
        "Drop the unused parameters instead of threading them through.",
    ),
    (
        "refactoring",
        "+    total = sum(item.price for item in cart)\n-    total = 0\n-    for item in cart:\n-        total += item.price",
        "A generator expression with sum is clearer than the manual accumulation loop.",
    ),
    (
        "refactoring",
        "-public String getName() { return this.name; }\n-public String getLabel() { return this.name; }\n+public String getName() { return this.name; }",
        "getLabel duplicates getName; remove one accessor or delegate.",
    ),
    (
        "bugfix",
        "-    for (int i = 0; i <= items.length; i++) {\n+    for (int i = 0; i < items.length; i++) {\n         total += items[i];\n     }",
        "The loop bound must be strict; i <= items.length reads past the array.",
    ),
    (
        "bugfix",
        "-if (config.timeout = 0) {\n+if (config.timeout == 0) {\n     useDefault();\n }",
        "Assignment in the condition always evaluates truthy; use the equality operator.",
    ),
    (
        "bugfix",
        "-    return cache.get(key)\n+    value = cache.get(key)\n+    return value if value is not None else reload(key)",
        "cache.get can return None here and callers dereference the result.",
    ),
    (
        "bugfix",
        "-        copy(src, dst, len);\n+        if (len > MAX_CHUNK) len = MAX_CHUNK;\n+        copy(src, dst, len);",
        "Unbounded len lets a caller overflow dst; clamp before copying.",
    ),
    (
        "bugfix",
        "-        parsed = json.loads(raw or '{}')\n+        try:\n+            parsed = json.loads(raw or '{}')\n+        except ValueError:\n+            parsed = {}",
        "Malformed payloads currently crash the worker; catch the decode error.",
    ),
    (
        "testing",
        "+def divide(a, b):\n+    if b == 0:\n+        raise ZeroDivisionError('b must be non-zero')\n+    return a / b",
        "Please add unit tests for the zero divisor branch of divide.",
    ),
    (
        "testing",
        "+    public int retryCount() {\n+        return backoff.attempts();\n+    }\n     // accessors end here",
        "retryCount has no coverage; add a test asserting the backoff attempts passthrough.",
    ),
    (
        "testing",
        "-        assert result == 4\n+        assert result == 4\n+        assert parse_flags('') == []\n+        assert parse_flags(None) == []\n+        run_all()",
        "Good additions; also cover the whitespace-only flags input in this test.",
    ),
    (
        "logging",
        "-    } catch (IOException e) {\n-        return null;\n+    } catch (IOException e) {\n+        log.warn(\"read failed: {}\", path, e);\n+        return null;",
        "Swallowing the IOException silently made outages hard to trace; keep this log.",
    ),
    (
        "logging",
        "     resp = client.send(req)\n+    logger.debug('sent request id=%s', req.id)",
        "Use info level here; request ids are needed in production traces.",
    ),
    (
        "documentation",
        "-def scan(root, depth=2):\n+def scan(root, depth=2, follow_links=False):\n     \"\"\"Walk the tree under root.\"\"\"\n     return walker(root, depth)",
        "Document the new follow_links flag in the docstring.",
    ),
    (
        "documentation",
        "+## Installation\n+\n+Run `pip install .` inside the checkout.\n See the usage section below.",
        "Mention the minimum supported Python version in this section.",
    ),
]

# --- 50-record retrieval/trainset fixture -------------------------------------

IDENT_POOL = [
    "userService", "configLoader", "writeBuffer", "fetchRecords", "cacheEntry",
    "sessionToken", "retryPolicy", "queueWorker", "metricsSink", "authHandler",
    "fileWatcher", "jsonCodec", "rateLimiter", "taskRunner", "poolManager",
]

# every diff template shares the token "return" so small-corpus BM25 queries
# always overlap something in every category
TEMPLATES = {
    "refactoring": (
        "-    {a} tmp = {b}.resolve();\n-    return tmp;\n+    return {b}.resolve();\n }}",
        "Inline tmp and return {b}.resolve() directly.",
    ),
    "bugfix": (
        "-    if ({a}.size() >= limit) {{\n+    if ({a}.size() > limit) {{\n         return {b}.reject();\n     }}",
        "The boundary check on {a} is off by one; the last slot is never used.",
    ),
    "testing": (
        "+def test_{a}_empty():\n+    assert {a}.handle([]) == []\n     # existing cases return early for {b}",
        "Also assert that {a} raises on None input, not only the empty list.",
    ),
    "logging": (
        "     except TimeoutError:\n-        pass\n+        log.warning('{a} timed out before return, talking to %s', {b})",
        "Good; include the retry attempt number for {a} in the log message.",
    ),
    "documentation": (
        "-def {a}(payload):\n+def {a}(payload, strict=True):\n     \"\"\"Dispatch payload to {b} and return the result.\"\"\"",
        "The docstring of {a} should explain the strict flag default.",
    ),
}


def make_corpus_50():
    rng = random.Random(50)
    rows = []
    counter = 0
    for category in ("refactoring", "bugfix", "testing", "logging", "documentation"):
        diff_t, comment_t = TEMPLATES[category]
        for _ in range(10):
            counter += 1
            a, b = rng.sample(IDENT_POOL, 2)
            rows.append(
                {
                    "id": f"f{counter:03d}",
                    "diff": diff_t.format(a=a, b=b),
                    "comment": comment_t.format(a=a, b=b),
                    "category": category,
                    "lang": rng.choice(["java", "python", "go", "js"]),
                }
            )
    return rows


def make_corpus_13():
    rng = random.Random(13)
    rows = []
    spread = [("refactoring", 5), ("bugfix", 4), ("testing", 2), ("logging", 1), ("documentation", 1)]
    counter = 0
    for category, n in spread:
        diff_t, comment_t = TEMPLATES[category]
        for _ in range(n):
            counter += 1
            a, b = rng.sample(IDENT_POOL, 2)
            rows.append(
                {
                    "id": f"s{counter:02d}",
                    "diff": diff_t.format(a=a, b=b),
                    "comment": comment_t.format(a=a, b=b),
                    "category": category,
                }
            )
    return rows


HUNK_12_LINES = """\
@@ -14,7 +14,9 @@ class RetryPolicy:
 def next_delay(self, attempt):
-    delay = self.base * attempt
-    return delay
+    delay = self.base * (2 ** attempt)
+    if delay > self.cap:
+        delay = self.cap
+    return delay

     # jitter is applied by the caller
-MAX_ATTEMPTS = 10
+MAX_ATTEMPTS = 6"""

BATCH_DIFFS = [
    "-    if (count = 0) {\n+    if (count == 0) {\n         reset();\n     }",
    "-    return users.get(id);\n+    User u = users.get(id);\n+    return u != null ? u : User.GUEST;",
    "+def flush_cache():\n+    cache.clear()\n+    return True",
    "-        open(path).write(data)\n+        with open(path, 'w') as fh:\n+            fh.write(data)",
    " try:\n     send(batch)\n-except Exception:\n-    pass\n+except Exception as exc:\n+    log.error('send failed: %s', exc)",
    "-int total = 0;\n-for (int v : values) total += v;\n+int total = Arrays.stream(values).sum();",
    "+    const token = await refresh();\n+    session.attach(token);",
    "-def parse(line):\n+def parse(line, sep=','):\n     return line.split(sep)",
    "+    assert normalize('') == ''\n+    assert normalize(None) is None",
    "-    buffer.append(chunk)\n+    if chunk:\n+        buffer.append(chunk)",
]

MOCK_COMMENTS = {
    "refactoring": "Extract the duplicated branch into a helper to keep this method small.",
    "bugfix": "The loop bound should use <=; the last element is skipped.",
    "testing": "Add a regression test covering the empty-input path.",
    "logging": "Log the failure reason before rethrowing so operators can trace it.",
    "documentation": "Update the docstring to describe the new parameter.",
}

DIRECTIVE_KEYS = {
    "refactoring": "to refactor the code to improve its quality",
    "bugfix": "to fix one or more bugs",
    "testing": "tests for this code must be written",
    "logging": "to improve the logging of its execution",
    "documentation": "more compliant with the documentation specification",
}


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), encoding="utf-8")


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "mock_scripts").mkdir(exist_ok=True)

    rows_20 = [
        {"id": f"r{i:02d}", "diff": diff, "comment": comment, "category": category}
        for i, (category, diff, comment) in enumerate(CORPUS_20, start=1)
    ]
    write_jsonl(DATA / "corpus_20.jsonl", rows_20)

    # independent totals for freezing into the stats test
    totals = {}
    for row in rows_20:
        lines = len(row["diff"].split("\n"))
        tokens = len(row["comment"].split())
        bucket = totals.setdefault(row["category"], [0, 0, 0])
        bucket[0] += 1
        bucket[1] += lines
        bucket[2] += tokens
    print("corpus_20 per-category (count, lines, tokens):")
    for category, (count, lines, tokens) in totals.items():
        print(f"  {category}: {count}, {lines}, {tokens}")
    print(f"  total: {sum(v[0] for v in totals.values())}, "
          f"{sum(v[1] for v in totals.values())}, {sum(v[2] for v in totals.values())}")

    write_jsonl(DATA / "corpus_50.jsonl", make_corpus_50())
    write_jsonl(DATA / "corpus_13.jsonl", make_corpus_13())

    rows_6 = [
        {"id": "a1", "diff": "+x = 1", "comment": "Rename x to something meaningful.", "category": "refactoring"},
        {"id": "a2", "diff": "-y = 0\n+y = 1", "comment": "Off by one in the seed.", "category": "bugfix"},
        {"id": "a3", "diff": "+assert f(2) == 4", "comment": "Cover the negative case too.", "category": "testing"},
        {"id": "a4", "diff": "+log.info('start')", "comment": "Move this to debug level.", "category": "logging"},
        {"id": "a5", "diff": "+# returns None", "comment": "Document the return type properly.", "category": "documentation"},
        {"id": "a6", "diff": "+pass", "comment": "LGTM overall.", "category": "others"},
    ]
    write_jsonl(DATA / "corpus_6_with_other.jsonl", rows_6)

    (DATA / "hunk_12_lines.txt").write_text(HUNK_12_LINES, encoding="utf-8")

    write_jsonl(
        DATA / "batch_10.jsonl",
        [{"id": f"d{i:02d}", "diff": diff} for i, diff in enumerate(BATCH_DIFFS, start=1)],
    )
    # gold labels + reference comments for the batch diffs (hand-assigned);
    # four bugfix golds: d01, d02, d07, d10
    batch_golds = [
        ("bugfix", "Assignment in the condition; use == here."),
        ("bugfix", "Guard against a missing user before dereferencing."),
        ("testing", "flush_cache needs a test asserting the cache is emptied."),
        ("refactoring", "Good change; the context manager closes the file."),
        ("logging", "Keep the error log; silent failure hid outages."),
        ("refactoring", "Stream sum reads better than the manual loop."),
        ("bugfix", "refresh() may reject; handle the failed token path."),
        ("documentation", "Document the new sep parameter default."),
        ("testing", "Also cover whitespace-only input in these asserts."),
        ("bugfix", "Skipping falsy chunks also drops legitimate empty-string sentinels."),
    ]
    write_jsonl(
        DATA / "batch_10_golds.jsonl",
        [
            {"id": f"d{i:02d}", "diff": diff, "comment": comment, "category": category}
            for i, (diff, (category, comment)) in enumerate(
                zip(BATCH_DIFFS, batch_golds), start=1
            )
        ],
    )

    scripts = DATA / "mock_scripts"
    for category, key in DIRECTIVE_KEYS.items():
        write_jsonl(
            scripts / f"{category}.jsonl",
            [{"prompt_substring_match": key, "response": f"Review Comment: {MOCK_COMMENTS[category]}"}],
        )
    write_jsonl(
        scripts / "fusion.jsonl",
        [
            {"prompt_substring_match": key, "response": f"Review Comment: {MOCK_COMMENTS[category]}"}
            for category, key in DIRECTIVE_KEYS.items()
        ],
    )
    write_jsonl(
        scripts / "critic.jsonl",
        [
            {
                "prompt_substring_match": "your selection in the following format",
                "response": "Selected Category: bugfix\nReview Comment: "
                + MOCK_COMMENTS["bugfix"],
            }
        ],
    )
    write_jsonl(
        scripts / "critic_msc.jsonl",
        [
            {
                "prompt_substring_match": "merged review comment",
                "response": "Review Comment: Fix the loop bound to <= and add a regression "
                "test covering the empty-input path.",
            }
        ],
    )
    write_jsonl(
        scripts / "critic_garbage.jsonl",
        [
            {
                "prompt_substring_match": "your selection in the following format",
                "response": "I am not able to decide between these comments.",
            }
        ],
    )
    write_jsonl(
        scripts / "testing_declines.jsonl",
        [{"prompt_substring_match": DIRECTIVE_KEYS["testing"], "response": "False"}],
    )
    print(f"fixtures written under {DATA}")


if __name__ == "__main__":
    main()
