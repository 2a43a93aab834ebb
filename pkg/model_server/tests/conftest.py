"""Tiny real transformer checkpoints, built offline for contract tests."""

import os

import pytest

# skip the whole directory when the server package is not installed (the
# bare directory name is importable as a namespace package, so probe a
# real submodule)
pytest.importorskip("model_server.app")

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

VOCAB = (
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    + [chr(c) for c in range(ord("a"), ord("z") + 1)]
    + [str(d) for d in range(10)]
    + ["##" + chr(c) for c in range(ord("a"), ord("z") + 1)]
    + ["the", "food", "safety", "act", "penalty", "article", "law", "court"]
)


def _write_tokenizer(path):
    from transformers import BertTokenizerFast

    (path / "vocab.txt").write_text("\n".join(VOCAB))
    tok = BertTokenizerFast(vocab_file=str(path / "vocab.txt"), do_lower_case=True)
    tok.save_pretrained(str(path))


def _tiny_config(num_labels=None):
    from transformers import BertConfig

    kwargs = dict(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=128,
    )
    if num_labels is not None:
        kwargs["num_labels"] = num_labels
    return BertConfig(**kwargs)


@pytest.fixture(scope="session")
def tiny_embed_model(tmp_path_factory):
    """A real (randomly initialized) 32-dim BERT encoder on disk."""
    torch = pytest.importorskip("torch")
    from transformers import BertModel

    path = tmp_path_factory.mktemp("tiny_embed")
    torch.manual_seed(0)
    BertModel(_tiny_config()).save_pretrained(str(path))
    _write_tokenizer(path)
    return str(path)


@pytest.fixture(scope="session")
def tiny_rerank_model(tmp_path_factory):
    """A real single-logit sequence classifier on disk."""
    torch = pytest.importorskip("torch")
    from transformers import BertForSequenceClassification

    path = tmp_path_factory.mktemp("tiny_rerank")
    torch.manual_seed(1)
    BertForSequenceClassification(_tiny_config(num_labels=1)).save_pretrained(str(path))
    _write_tokenizer(path)
    return str(path)
