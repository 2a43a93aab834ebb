"""Shared fixtures backed by the helpers in testutil."""

import pytest

from testutil import ASCII_PATTERN_SPECS, ASCII_RULE_PAIRS

from lexsearch.citations import CitationPatternSet
from lexsearch.corpus import HierarchyRuleSet


@pytest.fixture
def ascii_rules() -> HierarchyRuleSet:
    return HierarchyRuleSet.from_pairs(ASCII_RULE_PAIRS)


@pytest.fixture
def ascii_patterns() -> CitationPatternSet:
    return CitationPatternSet.from_specs(ASCII_PATTERN_SPECS)
