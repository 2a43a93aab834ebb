"""Reference server for the chat/embed/rerank provider wire protocol."""

__version__ = "0.1.0"
