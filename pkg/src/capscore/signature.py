"""Metric signature strings.

A signature pins down everything that determines a score for a fixed corpus:
metric name, tokenization scheme, every config knob, and the package version.
Format: ``NAME|tok:<scheme>|<key>:<value>|...|v:<semver>`` with the middle
keys sorted lexicographically. Re-running with an equal signature must
reproduce scores bit-exactly.
"""

from . import __version__


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, float):
        # 1e-09 -> 1e-9, matching the documented signature examples
        text = f"{value:g}"
        return text.replace("e-0", "e-").replace("e+0", "e+")
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def build_signature(name: str, scheme: str, **params) -> str:
    parts = [name, f"tok:{scheme}"]
    parts.extend(f"{k}:{_fmt(v)}" for k, v in sorted(params.items()))
    parts.append(f"v:{__version__}")
    return "|".join(parts)
