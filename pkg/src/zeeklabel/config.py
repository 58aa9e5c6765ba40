"""Sectioning of the rule configuration file.

A config file holds two sections: ontology item declarations and labeling
rules. Sections are introduced by ``[ontology]`` / ``[rules]`` marker lines;
text before any marker belongs to the rules section, so a file containing
nothing but a rule block is valid as-is. Blank lines and full-line ``#``
comments are dropped here, once, for every consumer.
"""

from __future__ import annotations

import re

from .errors import ConfigError

SECTION_RULES = "rules"
SECTION_ONTOLOGY = "ontology"

_MARKER_RE = re.compile(r"^\[([A-Za-z][A-Za-z-]*)\]$")


def split_sections(text: str) -> dict[str, list[tuple[int, str]]]:
    """Split config text into per-section lists of (line_number, line).

    Line numbers are 1-based positions in the original text so diagnostics
    from downstream parsers point at the real file location.
    """
    sections: dict[str, list[tuple[int, str]]] = {
        SECTION_RULES: [],
        SECTION_ONTOLOGY: [],
    }
    current = SECTION_RULES
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        marker = _MARKER_RE.match(stripped)
        if marker:
            name = marker.group(1).lower()
            if name not in sections:
                raise ConfigError(
                    f"line {lineno}: unknown section [{marker.group(1)}]; "
                    f"expected [ontology] or [rules]"
                )
            current = name
            continue
        sections[current].append((lineno, line))
    return sections
