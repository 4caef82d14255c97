"""Self-chat protocol: roles, lengths, determinism, and seed handling."""

import pytest

from emoguide.corpus import bank_words
from emoguide.model import DecodeConfig, ModelConfig, init_model
from emoguide.polarity import ClassifierParams, PolarityClassifier
from emoguide.resources import data_path, default_lexicon, SEEDS_FILE
from emoguide.selfchat import (
    SeedUtterance,
    SelfChatConfig,
    load_seed_utterances,
    self_chat,
)
from emoguide.vocab import build_vocab


@pytest.fixture(scope="module")
def vocab():
    return build_vocab(bank_words())


@pytest.fixture(scope="module")
def classifier():
    return PolarityClassifier(default_lexicon(), ClassifierParams(neutral_bias=1.0))


@pytest.fixture(scope="module")
def models(vocab):
    cfg = ModelConfig(vocab_size=len(vocab), embed_dim=8, hidden_dim=12)
    agent = init_model(cfg, seed=0, vocab=vocab)
    user = init_model(cfg, seed=1, vocab=vocab)
    return agent, user


SEEDS = (
    SeedUtterance("sad lonely tired", "negative"),
    SeedUtterance("plain ordinary day", "neutral"),
    SeedUtterance("happy wonderful joy", "positive"),
)


# ------------------------------------------------------------- fixtures


def test_packaged_seed_fixture():
    seeds = load_seed_utterances(data_path(SEEDS_FILE))
    assert len(seeds) == 100
    counts = {"negative": 0, "neutral": 0, "positive": 0}
    for s in seeds:
        counts[s.polarity] += 1
    assert counts == {"negative": 33, "neutral": 34, "positive": 33}


def test_seed_validation():
    with pytest.raises(ValueError):
        SeedUtterance("fine words", "upbeat")
    with pytest.raises(ValueError):
        SeedUtterance("...", "neutral")


def test_load_seeds_rejects_bad_lines(tmp_path):
    p = tmp_path / "seeds.jsonl"
    p.write_text('{"text": "good day", "polarity": "positive"}\n{"text": "x"}\n')
    with pytest.raises(ValueError, match="line 2"):
        load_seed_utterances(p)
    (tmp_path / "empty.jsonl").write_text("")
    with pytest.raises(ValueError):
        load_seed_utterances(tmp_path / "empty.jsonl")


def test_config_validation():
    with pytest.raises(ValueError):
        SelfChatConfig(seeds=())
    with pytest.raises(ValueError):
        SelfChatConfig(seeds=SEEDS, turns=0)
    with pytest.raises(ValueError):
        SelfChatConfig(seeds=SEEDS, rng_seed=-1)
    with pytest.raises(ValueError):
        SelfChatConfig(seeds=SEEDS, decode=DecodeConfig(max_tokens=0))


# ------------------------------------------------------------- protocol


def test_dialog_shape_and_roles(models, classifier):
    agent, user = models
    config = SelfChatConfig(seeds=SEEDS, turns=10)
    dialogs = self_chat(agent, user, config, classifier)
    assert len(dialogs) == 3
    for d, seed in zip(dialogs, SEEDS):
        assert len(d.utterances) == 20
        assert d.utterances[0].speaker == "user"
        assert d.utterances[0].text == seed.text
        for i, u in enumerate(d.utterances):
            assert u.speaker == ("agent" if i % 2 == 1 else "user")
        assert d.source_id.endswith(seed.polarity)


def test_single_turn_dialogs(models, classifier):
    agent, user = models
    config = SelfChatConfig(seeds=SEEDS[:1], turns=1)
    (dialog,) = self_chat(agent, user, config, classifier)
    assert len(dialog.utterances) == 2
    assert dialog.utterances[1].speaker == "agent"


def test_no_structural_tokens_leak(models, classifier):
    agent, user = models
    dialogs = self_chat(agent, user, SelfChatConfig(seeds=SEEDS, turns=4), classifier)
    for d in dialogs:
        for u in d.utterances:
            assert "<" not in u.text and ">" not in u.text
            assert len(u.tokens) >= 1


# ---------------------------------------------------------- determinism


def test_greedy_is_deterministic(models, classifier):
    agent, user = models
    config = SelfChatConfig(seeds=SEEDS, turns=5)
    assert self_chat(agent, user, config, classifier) == self_chat(
        agent, user, config, classifier
    )


def test_sampling_is_seed_deterministic(models, classifier):
    agent, user = models
    decode = DecodeConfig(mode="top_k", k=4, temperature=1.0)
    config = SelfChatConfig(seeds=SEEDS, turns=5, decode=decode, rng_seed=11)
    a = self_chat(agent, user, config, classifier)
    b = self_chat(agent, user, config, classifier)
    assert a == b
    other = SelfChatConfig(seeds=SEEDS, turns=5, decode=decode, rng_seed=12)
    c = self_chat(agent, user, other, classifier)
    assert a != c


def test_threads_do_not_change_results(models, classifier):
    agent, user = models
    config = SelfChatConfig(seeds=SEEDS, turns=4)
    assert self_chat(agent, user, config, classifier, threads=1) == self_chat(
        agent, user, config, classifier, threads=3
    )


# ------------------------------------------------------------ failures


def test_vocab_mismatch_raises(models, classifier, vocab):
    agent, _ = models
    other_vocab = build_vocab(bank_words()[:-1])
    other = init_model(
        ModelConfig(vocab_size=len(other_vocab), embed_dim=8, hidden_dim=12),
        seed=2,
        vocab=other_vocab,
    )
    config = SelfChatConfig(seeds=SEEDS, turns=2)
    with pytest.raises(ValueError, match="vocabular"):
        self_chat(agent, other, config, classifier)
    bare = init_model(ModelConfig(vocab_size=len(vocab), embed_dim=8, hidden_dim=12), seed=3)
    with pytest.raises(ValueError, match="vocabular"):
        self_chat(bare, agent, config, classifier)
    with pytest.raises(ValueError):
        self_chat(agent, agent, config, classifier, threads=0)
