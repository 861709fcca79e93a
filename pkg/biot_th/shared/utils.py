"""
Small helpers shared by the features
"""

from fractions import Fraction
from pathlib import Path


def load_instruction(filename: str, module_file: str) -> str:
    """
    Read a markdown help file that sits next to a feature module.

    Args:
        filename: File name, e.g. "instructions.md"
        module_file: The calling module's __file__

    Returns:
        File contents, or an empty string when the file is missing
    """
    path = Path(module_file).parent / filename
    if not path.exists():
        return ""
    return path.read_text(encoding="utf-8")


def parse_number(value) -> float:
    """
    Float from a number or a string such as "0.25" or "1/32".

    Raises:
        ValueError: If the string is neither a float nor a fraction
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    text = str(value).strip()
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"not a number: {value!r}") from e
