"""WordPiece tokenization and pair encoding.

The subword inventory is built from the task corpus itself (utterances,
SQL, schema strings), so the package works fully offline: specials, the
corpus alphabet (plus `##` continuation forms), then whole words ranked
by frequency with lexicographic tie-breaks, up to the vocab budget.
Encoding is standard greedy longest-match-first WordPiece; rare words
decompose into character pieces. The stock WordPiece trainer was not
reproducible run to run, and a reproducible tokenizer is a precondition
for reproducible training, so the inventory construction lives here.

Pairs are encoded as

    [CLS] u_1 .. u_N [SEP] q_1 .. q_M [SEP]           (default)
    [CLS] u_1 .. u_N [SEP] q_1 .. q_M [SEP] s.. [SEP] (include_schema)

with segment ids 0 / 1 / 2. When a sequence exceeds the maximum length
the query tail is truncated first, then the schema tail.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, List, Optional

from tokenizers import Tokenizer, models, pre_tokenizers

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
SPECIAL_TOKENS = [PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN]


@dataclass
class EncodedPair:
    token_ids: List[int]
    segment_ids: List[int]
    tokens: List[str]
    truncated: bool


def train_wordpiece(corpus: Iterable[str], vocab_size: int = 2048) -> Tokenizer:
    """Deterministic WordPiece tokenizer over the given corpus."""
    pre = pre_tokenizers.BertPreTokenizer()
    word_counts: Counter = Counter()
    for text in corpus:
        for word, _span in pre.pre_tokenize_str(text):
            word_counts[word] += 1

    alphabet = sorted({ch for word in word_counts for ch in word})
    vocab: List[str] = list(SPECIAL_TOKENS)
    vocab.extend(alphabet)
    vocab.extend("##" + ch for ch in alphabet)

    budget = max(0, vocab_size - len(vocab))
    ranked_words = sorted(word_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    seen = set(vocab)
    for word, _count in ranked_words:
        if budget == 0:
            break
        if len(word) > 1 and word not in seen:
            vocab.append(word)
            seen.add(word)
            budget -= 1

    tokenizer = Tokenizer(
        models.WordPiece(
            vocab={token: i for i, token in enumerate(vocab)}, unk_token=UNK_TOKEN
        )
    )
    tokenizer.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    return tokenizer


def save_tokenizer(tokenizer: Tokenizer, path) -> None:
    tokenizer.save(str(path))


def load_tokenizer(path) -> Tokenizer:
    return Tokenizer.from_file(str(path))


def encode_pair(
    tokenizer: Tokenizer,
    utterance: str,
    sql: str,
    schema: Optional[str] = None,
    max_len: int = 128,
) -> EncodedPair:
    """Classification-ready token sequence for one (utterance, query) pair."""
    if not utterance or not utterance.strip():
        raise ValueError("utterance must be non-empty")
    if not sql or not sql.strip():
        raise ValueError("query must be non-empty")

    u_tokens = tokenizer.encode(utterance).tokens
    q_tokens = tokenizer.encode(sql).tokens
    s_tokens = tokenizer.encode(schema).tokens if schema else []
    if not q_tokens:
        raise ValueError("query produced no tokens")

    # 1 [CLS] + one [SEP] per segment
    overhead = 2 + (2 if s_tokens else 1)
    truncated = False
    if len(u_tokens) > max_len - overhead - 1:
        # pathological utterance: keep room for at least one query token
        u_tokens = u_tokens[: max_len - overhead - 1]
        truncated = True
    budget = max_len - overhead - len(u_tokens)
    if len(q_tokens) + len(s_tokens) > budget:
        truncated = True
        keep_q = max(1, budget - len(s_tokens))
        q_tokens = q_tokens[:keep_q]
        keep_s = max(0, budget - len(q_tokens))
        s_tokens = s_tokens[:keep_s]

    tokens = [CLS_TOKEN] + u_tokens + [SEP_TOKEN] + q_tokens + [SEP_TOKEN]
    segments = [0] * (len(u_tokens) + 2) + [1] * (len(q_tokens) + 1)
    if s_tokens:
        tokens += s_tokens + [SEP_TOKEN]
        segments += [2] * (len(s_tokens) + 1)

    token_ids = [_token_id(tokenizer, tok) for tok in tokens]
    return EncodedPair(
        token_ids=token_ids, segment_ids=segments, tokens=tokens, truncated=truncated
    )


def _token_id(tokenizer: Tokenizer, token: str) -> int:
    tid = tokenizer.token_to_id(token)
    if tid is None:
        tid = tokenizer.token_to_id(UNK_TOKEN)
    return tid


def pad_id(tokenizer: Tokenizer) -> int:
    return tokenizer.token_to_id(PAD_TOKEN)
