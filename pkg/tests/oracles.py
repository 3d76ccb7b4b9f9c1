"""Independent brute-force reference implementations used only by tests.

Everything here recomputes results from first principles (explicit loops,
full matrices, exhaustive enumeration) so the package code is checked against
a second route, not against itself.
"""

import math
import random
from collections import Counter


def metric_tokenize_oracle(text):
    """Character scan: lowercase, whitespace splits, punctuation isolated."""
    tokens, current = [], ""
    for ch in text.lower():
        if ch.isspace():
            if current:
                tokens.append(current)
                current = ""
        elif ch.isalnum() or ch == "_":
            current += ch
        else:
            if current:
                tokens.append(current)
                current = ""
            tokens.append(ch)
    if current:
        tokens.append(current)
    return tokens


def bleu_oracle(candidate, reference):
    """Naive n-gram enumeration with list.count, add-one smoothing on n >= 2."""
    cand = metric_tokenize_oracle(candidate)
    ref = metric_tokenize_oracle(reference)
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        cand_grams = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
        ref_grams = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
        total = len(cand_grams)
        matched = 0
        for gram in set(cand_grams):
            matched += min(cand_grams.count(gram), ref_grams.count(gram))
        if n == 1:
            if matched == 0:
                return 0.0
            precision = matched / total
        elif matched > 0:
            precision = matched / total
        else:
            precision = 1.0 / (total + 1)
        log_sum += math.log(precision)
    brevity = math.exp(1.0 - len(ref) / len(cand)) if len(cand) < len(ref) else 1.0
    return brevity * math.exp(log_sum / 4.0) * 100.0


def lcs_oracle(a, b):
    """Full O(nm) dynamic-programming matrix."""
    rows = len(a) + 1
    cols = len(b) + 1
    table = [[0] * cols for _ in range(rows)]
    for i in range(1, rows):
        for j in range(1, cols):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[-1][-1]


def rouge_l_oracle(candidate, reference):
    cand = metric_tokenize_oracle(candidate)
    ref = metric_tokenize_oracle(reference)
    lcs = lcs_oracle(cand, ref)
    precision = lcs / len(cand) if cand else 0.0
    recall = lcs / len(ref) if ref else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall) * 100.0


def meteor_oracle(candidate, reference):
    """Exhaustive enumeration of every maximum alignment (inputs <= 8 tokens)."""
    cand = metric_tokenize_oracle(candidate)
    ref = metric_tokenize_oracle(reference)
    cand_counts = Counter(cand)
    ref_counts = Counter(ref)
    matches = sum(min(count, ref_counts[token]) for token, count in cand_counts.items())
    if matches == 0:
        return 0.0

    best_chunks = None
    pairs = []
    used_ref = set()

    def chunk_count():
        chunks = 1
        for (c1, r1), (c2, r2) in zip(pairs, pairs[1:]):
            if not (c2 == c1 + 1 and r2 == r1 + 1):
                chunks += 1
        return chunks

    def dfs(i):
        nonlocal best_chunks
        if len(pairs) + (len(cand) - i) < matches:
            return
        if i == len(cand):
            if len(pairs) == matches:
                chunks = chunk_count()
                if best_chunks is None or chunks < best_chunks:
                    best_chunks = chunks
            return
        dfs(i + 1)  # leave cand[i] unaligned
        for j, token in enumerate(ref):
            if j not in used_ref and token == cand[i]:
                pairs.append((i, j))
                used_ref.add(j)
                dfs(i + 1)
                pairs.pop()
                used_ref.remove(j)

    dfs(0)
    precision = matches / len(cand)
    recall = matches / len(ref)
    fmean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (best_chunks / matches) ** 3
    return fmean * (1.0 - penalty) * 100.0


def code_tokenize_oracle(text, lowercase=True, split_identifiers=True, max_token_len=64):
    """Character-class scan over ASCII alphanumerics with identifier splitting."""
    chunks, current = [], ""
    for ch in text:
        if ("0" <= ch <= "9") or ("a" <= ch <= "z") or ("A" <= ch <= "Z"):
            current += ch
        else:
            if current:
                chunks.append(current)
                current = ""
    if current:
        chunks.append(current)

    if split_identifiers:
        pieces = []
        for chunk in chunks:
            segment = chunk[0]
            segments = []
            for prev, ch in zip(chunk, chunk[1:]):
                prev_cls = "d" if prev.isdigit() else ("u" if prev.isupper() else "l")
                cls = "d" if ch.isdigit() else ("u" if ch.isupper() else "l")
                if prev_cls == cls:
                    segment += ch
                elif prev_cls == "u" and cls == "l":
                    # ALLCAPS run followed by Capitalized word splits before its last capital
                    if len(segment) > 1:
                        segments.append(segment[:-1])
                        segment = segment[-1]
                    segment += ch
                else:
                    segments.append(segment)
                    segment = ch
            segments.append(segment)
            pieces.extend(segments)
    else:
        pieces = chunks

    out = []
    for piece in pieces:
        if lowercase:
            piece = piece.lower()
        if piece and len(piece) <= max_token_len:
            out.append(piece)
    return out


def bm25_rank_oracle(docs, query_text, k1, b, tokenize):
    """Score every document from scratch; returns [(score, doc_id)] ranked."""
    doc_tokens = [(doc_id, tokenize(text)) for doc_id, text in docs]
    n = len(docs)
    lengths = {doc_id: len(tokens) for doc_id, tokens in doc_tokens}
    avg = sum(lengths.values()) / n
    query_tokens = tokenize(query_text)
    ranked = []
    for doc_id, tokens in doc_tokens:
        score = 0.0
        for term in query_tokens:
            tf = tokens.count(term)
            if tf == 0:
                continue
            df = sum(1 for _, other in doc_tokens if term in other)
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * lengths[doc_id] / avg))
        if score > 0.0:
            ranked.append((score, doc_id))
    ranked.sort(key=lambda pair: (-pair[0], pair[1]))
    return ranked


def split_membership_oracle(id_category_pairs, fraction, seed):
    """Sorted-ids, one seeded shuffle per canonical category, floor cut."""
    rng = random.Random(seed)
    train_ids = set()
    for label in ("refactoring", "bugfix", "testing", "logging", "documentation"):
        ids = sorted(i for i, c in id_category_pairs if c == label)
        rng.shuffle(ids)
        cut = math.floor(len(ids) * fraction)
        train_ids.update(ids[:cut])
    return train_ids


def diff_marker_scan_oracle(text):
    """Naive per-line prefix count: (added, removed, context)."""
    added = removed = context = 0
    for line in text.split("\n"):
        if line[:1] == "+":
            added += 1
        elif line[:1] == "-":
            removed += 1
        else:
            context += 1
    return added, removed, context
