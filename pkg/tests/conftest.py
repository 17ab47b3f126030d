import pytest

import gen_planted
from negadapt.adapter import NegationTriplet
from negadapt.vectors import EmbeddingVector

# populated by test_acceptance; echoed after the run so the per-criterion
# verdicts stay visible under pytest's output capture
acceptance_results: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_results:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_results:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def planted():
    return gen_planted.make_corpus()


@pytest.fixture(scope="session")
def planted_lookup(planted):
    return {
        text: EmbeddingVector(id=text, values=vec, model_tag="planted")
        for text, vec in planted.vectors.items()
    }


def triplets_from_items(items):
    out = []
    for item in items:
        correct = item.candidates[item.correct_index]
        k = 0
        for j, cand in enumerate(item.candidates):
            if j == item.correct_index:
                continue
            out.append(NegationTriplet(anchor=item.anchor, paraphrase=correct,
                                       negation=cand, triplet_id=f"{item.item_id}-{k}"))
            k += 1
    return out


@pytest.fixture(scope="session")
def planted_train_triplets(planted):
    return triplets_from_items(planted.items[:100])
