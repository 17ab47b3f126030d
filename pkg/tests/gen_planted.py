"""Synthetic planted-dimension corpus generator.

Standalone oracle: builds a corpus where the negation signal lives in one known
embedding dimension, so an adapter that recovers that dimension is verifiably
correct. Deliberately does not import the package under test; file formats are
written directly from their external definitions.

Construction (dim 64 by default):
  * dimension 7 carries the signal: anchor and paraphrase agree in sign,
    wrong candidates have it flipped;
  * 20 decoy dimensions carry topic noise shared by all texts of an item,
    only partially preserved in the paraphrase;
  * wrong candidates are near-copies of the anchor (flipped signal plus tiny
    jitter), so plain cosine prefers them and accuracy without weights is ~0.

Run as a script to print the construction's sanity numbers.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

DIM = 64
SIGNAL_DIM = 7
DECOY_DIMS = tuple(range(40, 60))
SIGNAL = 2.0
TOPIC_KEEP = 0.45
TOPIC_JITTER = 0.9
BASE_NOISE = 0.3
COPY_JITTER = 0.02


@dataclass
class PlantedItem:
    item_id: str
    anchor: str
    candidates: list        # 3 texts, shuffled
    correct_index: int
    stratum: str


@dataclass
class PlantedCorpus:
    items: list = field(default_factory=list)
    vectors: dict = field(default_factory=dict)   # text -> np.ndarray (float64)
    dim: int = DIM
    signal_dim: int = SIGNAL_DIM


def make_corpus(n_items=300, dim=DIM, signal_dim=SIGNAL_DIM, seed=1234):
    rng = np.random.default_rng(seed)
    shuffle_rng = np.random.default_rng(seed + 1)
    corpus = PlantedCorpus(dim=dim, signal_dim=signal_dim)
    decoys = list(DECOY_DIMS)
    noise_dims = [k for k in range(dim) if k != signal_dim and k not in decoys]

    for i in range(n_items):
        topic = rng.normal(0.0, 1.0, size=len(decoys))

        anchor = np.zeros(dim)
        anchor[signal_dim] = SIGNAL
        anchor[decoys] = topic
        anchor[noise_dims] = rng.normal(0.0, BASE_NOISE, size=len(noise_dims))

        para = np.zeros(dim)
        para[signal_dim] = SIGNAL
        para[decoys] = TOPIC_KEEP * topic + rng.normal(0.0, TOPIC_JITTER, size=len(decoys))
        para[noise_dims] = rng.normal(0.0, BASE_NOISE, size=len(noise_dims))

        wrongs = []
        for _ in range(2):
            w = anchor.copy()
            w[signal_dim] = -SIGNAL
            w += rng.normal(0.0, COPY_JITTER, size=dim)
            wrongs.append(w)

        a_text = f"synthetic item {i:04d} anchor"
        p_text = f"synthetic item {i:04d} paraphrase"
        w_texts = [f"synthetic item {i:04d} distractor {j}" for j in range(2)]

        order = [0, 1, 2]
        shuffle_rng.shuffle(order)
        texts = [p_text] + w_texts
        cands = [texts[j] for j in order]
        correct_index = order.index(0)

        corpus.items.append(PlantedItem(
            item_id=f"item{i:04d}",
            anchor=a_text,
            candidates=cands,
            correct_index=correct_index,
            stratum="negation" if i % 2 == 0 else "antonym",
        ))
        corpus.vectors[a_text] = anchor
        corpus.vectors[p_text] = para
        corpus.vectors[w_texts[0]] = wrongs[0]
        corpus.vectors[w_texts[1]] = wrongs[1]

    return corpus


# ---------------------------------------------------------------------------
# Oracle arithmetic (vectorized, written from the formulas, not the package)

def cos(x, y):
    return float(np.dot(x, y) / (np.linalg.norm(x) * np.linalg.norm(y)))


def contribution(anchor, para, neg):
    """Per-dimension (paraphrase minus negation) cosine terms for one triplet."""
    na = np.linalg.norm(anchor)
    u_p = anchor * para / (na * np.linalg.norm(para))
    u_n = anchor * neg / (na * np.linalg.norm(neg))
    return u_p - u_n


def oracle_weights(corpus, train_items, a):
    """Mean contribution over (anchor, correct, wrong) pairs -> softmax weights."""
    rows = []
    for item in train_items:
        anchor = corpus.vectors[item.anchor]
        correct = corpus.vectors[item.candidates[item.correct_index]]
        for j, cand in enumerate(item.candidates):
            if j == item.correct_index:
                continue
            rows.append(contribution(anchor, correct, corpus.vectors[cand]))
    vbar = np.mean(rows, axis=0)
    m = vbar.max()
    if m > 1e-12:
        vbar = vbar / m
    z = a * vbar
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def choice_accuracy(corpus, items, weights=None):
    correct = 0
    for item in items:
        anchor = corpus.vectors[item.anchor]
        if weights is not None:
            anchor = anchor * weights
        sims = []
        for cand in item.candidates:
            v = corpus.vectors[cand]
            if weights is not None:
                v = v * weights
            sims.append(cos(anchor, v))
        if int(np.argmax(sims)) == item.correct_index:
            correct += 1
    return correct / len(items)


# ---------------------------------------------------------------------------
# File emission (formats written from their definitions)

def text_digest(text, instruction_prefix=""):
    payload = (instruction_prefix + "\x00" + text).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def write_choice_jsonl(corpus, path, items=None):
    items = corpus.items if items is None else items
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps({
                "id": item.item_id,
                "anchor": item.anchor,
                "candidates": item.candidates,
                "correct_index": item.correct_index,
                "stratum": item.stratum,
            }) + "\n")


def write_triplets_jsonl(corpus, path, n_items):
    with open(path, "w", encoding="utf-8") as fh:
        for item in corpus.items[:n_items]:
            correct = item.candidates[item.correct_index]
            k = 0
            for j, cand in enumerate(item.candidates):
                if j == item.correct_index:
                    continue
                fh.write(json.dumps({
                    "anchor": item.anchor,
                    "paraphrase": correct,
                    "negation": cand,
                    "id": f"{item.item_id}-{k}",
                }) + "\n")
                k += 1


def write_pairs_tsv(corpus, path, score=4.5, scale=5.0, items=None):
    """Group-5 style pairs: anchor/paraphrase plus a wrong candidate as negation."""
    items = corpus.items if items is None else items
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("sentence1\tsentence2\tscore\tneg_sentence1\n")
        for item in items:
            correct = item.candidates[item.correct_index]
            wrong = item.candidates[(item.correct_index + 1) % 3]
            fh.write(f"{item.anchor}\t{correct}\t{score}\t{wrong}\n")
    return score / scale


def write_store_jsonl(corpus, path, model="planted"):
    """Embedding store keyed by content digests, usable as a pre-warmed cache."""
    with open(path, "w", encoding="utf-8") as fh:
        for text, vec in corpus.vectors.items():
            fh.write(json.dumps({
                "id": text_digest(text),
                "model": model,
                "dim": len(vec),
                "vector": [float(v) for v in vec],
            }) + "\n")


def main():
    corpus = make_corpus()
    train, test = corpus.items[:100], corpus.items[100:]
    print(f"items={len(corpus.items)} texts={len(corpus.vectors)} dim={corpus.dim}")

    acc0 = choice_accuracy(corpus, test)
    print(f"unweighted test accuracy: {acc0:.3f}")

    for a in (0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0):
        w = oracle_weights(corpus, train, a)
        acc_tr = choice_accuracy(corpus, train, w)
        acc_te = choice_accuracy(corpus, test, w)
        print(f"a={a:4.1f}  max-weight dim={int(np.argmax(w))}  "
              f"w[signal]={w[corpus.signal_dim]:.4f}  train={acc_tr:.3f}  test={acc_te:.3f}")

    # group-5 diagnosis direction: cos(anchor, wrong) vs cos(anchor, paraphrase)
    wins = 0
    w = oracle_weights(corpus, train, 2.0)
    wins_w = 0
    for item in corpus.items:
        anchor = corpus.vectors[item.anchor]
        para = corpus.vectors[item.candidates[item.correct_index]]
        wrong = corpus.vectors[item.candidates[(item.correct_index + 1) % 3]]
        if cos(anchor, wrong) > cos(anchor, para):
            wins += 1
        if cos(anchor * w, wrong * w) > cos(anchor * w, para * w):
            wins_w += 1
    n = len(corpus.items)
    print(f"neg-wins unweighted: {wins / n:.3f}   weighted(a=2): {wins_w / n:.3f}")


if __name__ == "__main__":
    main()
