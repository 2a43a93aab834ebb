"""Multi-path legal article retrieval engine.

Two complementary retrieval paths (LLM-expanded BM25 and dense embedding
search with structure-aware hard-negative mining) are fused with arctan
normalization and refined by an intent-aware reranker.
"""

__version__ = "0.1.0"
