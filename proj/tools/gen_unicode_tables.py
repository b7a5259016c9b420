"""Regenerates include/vrag/unicode_tables.hpp from Python's unicodedata.

    python3 tools/gen_unicode_tables.py > include/vrag/unicode_tables.hpp
"""

import sys
import unicodedata
from pathlib import Path


def ranges(pred):
    out = []
    start = None
    for c in range(sys.maxunicode + 1):
        if pred(c):
            if start is None:
                start = c
        elif start is not None:
            out.append((start, c - 1))
            start = None
    if start is not None:
        out.append((start, sys.maxunicode))
    return out


def is_surrogate(c):
    return 0xD800 <= c <= 0xDFFF


def emit_ranges(name, rs):
    print(f"inline constexpr std::array<CodeRange, {len(rs)}> {name}{{{{")
    for lo, hi in rs:
        print(f"    {{0x{lo:X}, 0x{hi:X}}},")
    print("}};")
    print()


def main():
    license_text = (Path(__file__).resolve().parent.parent / "tools" / "license_header.txt").read_text()
    print(license_text, end="")
    print(f"// Generated by tools/gen_unicode_tables.py (Unicode {unicodedata.unidata_version}). Do not edit.")
    print()
    print("#pragma once")
    print()
    print("#include <array>")
    print()
    print("namespace vrag::text::tables {")
    print()
    print("struct CodeRange {")
    print("    char32_t lo;")
    print("    char32_t hi;")
    print("};")
    print()
    print("struct CaseMapping {")
    print("    char32_t upper;")
    print("    char32_t lower;")
    print("};")
    print()
    emit_ranges("kPunctuation", ranges(lambda c: not is_surrogate(c) and unicodedata.category(chr(c)).startswith("P")))
    emit_ranges("kWhitespace", ranges(lambda c: not is_surrogate(c) and chr(c).isspace()))
    pairs = []
    for c in range(sys.maxunicode + 1):
        if is_surrogate(c):
            continue
        low = chr(c).lower()
        if len(low) == 1 and ord(low) != c:
            pairs.append((c, ord(low)))
    print(f"inline constexpr std::array<CaseMapping, {len(pairs)}> kLowercase{{{{")
    for u, l in pairs:
        print(f"    {{0x{u:X}, 0x{l:X}}},")
    print("}};")
    print()
    print("}  // namespace vrag::text::tables")


if __name__ == "__main__":
    main()
