"""YAML loading that remembers source lines, for line-level validation errors."""
from __future__ import annotations

import yaml


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


def _construct(node, path, lines):
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for knode, vnode in node.value:
            key = yaml.safe_load(yaml.serialize(knode))
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", knode.start_mark.line + 1)
            out[key] = _construct(vnode, path + (key,), lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_construct(v, path + (i,), lines) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


def load_with_lines(text, source=None):
    """Parse YAML text; return ``(data, lines)`` where ``lines`` maps key paths to line numbers."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(str(getattr(exc, "problem", exc)),
                          mark.line + 1 if mark else None, source) from exc
    if node is None:
        return {}, {}
    lines = {}
    try:
        data = _construct(node, (), lines)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], exc.line, source) from None
    return data, lines


def line_of(lines, path):
    """Line of ``path`` or of its nearest recorded ancestor."""
    path = tuple(path)
    while path and path not in lines:
        path = path[:-1]
    return lines.get(path)


def dump(data) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=False)
