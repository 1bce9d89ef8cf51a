"""
Scenario file loading.

Scenario files are INI documents read with configparser. Errors are reported
as ScenarioSchemaError with the 1-based line of the offending key.
"""

import configparser
import os
import re

from src.errors import ScenarioSchemaError
from src.models.scenario import Scenario

SECTION_PATTERN = re.compile(r'^\s*\[([^\]]+)\]')
KEY_PATTERN = re.compile(r'^\s*([^=:#;\s\[][^=:]*?)\s*[=:]')


def line_index(text: str):
    """Map (section, key) and (section, None) to 1-based line numbers"""
    index = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        header = SECTION_PATTERN.match(line)
        if header:
            section = header.group(1).strip()
            index.setdefault((section, None), number)
            continue
        key = KEY_PATTERN.match(line)
        if key and section is not None:
            index.setdefault((section, key.group(1).strip()), number)
    return index


def _parse_error_line(error: configparser.Error):
    lineno = getattr(error, 'lineno', None)
    if lineno is None and getattr(error, 'errors', None):
        lineno = error.errors[0][0]
    return lineno


def parse_scenario_text(text: str, source: str = '<string>', env=None) -> Scenario:
    """
    Parse scenario text into a Scenario

    Raises:
        ScenarioSchemaError: syntax or schema violation
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=('#', ';'))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ScenarioSchemaError(f"Malformed scenario file: {e.message.splitlines()[0]}", _parse_error_line(e))

    index = line_index(text)
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    return Scenario.from_config(sections, lambda section, key: index.get((section, key)), env=env, source=source)


def load_scenario(path: str, env=None) -> Scenario:
    """Read and validate a scenario file"""
    if not os.path.isfile(path):
        raise ScenarioSchemaError(f"Scenario file not found: {path}")
    with open(path, 'r', encoding='utf-8') as handle:
        text = handle.read()
    return parse_scenario_text(text, source=os.path.basename(path), env=env)
