"""Timeline events, compiled programs and their line-oriented text format.

Format (one event per line, ``key=value`` tokens)::

    program n=1 s=1 ions=2 ancilla=1
    section prep
    transport src=D dst=P01 duration=100
    pb1 loc=P01 phi=1.5707963268 theta=1.5707963268 duration=102 on=1
    frame ion=1 angle=0.2243 reason=lightshift
    ms pair=01 theta=1.5707963268 phase=0.31 duration=160 on=1 echo=0
    end

Angles are radians, durations microseconds.  ``frame`` lines annotate the
compiler's virtual-z ledger and carry no physical action.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np


@dataclass(frozen=True)
class PulseEvent:
    """One PB1-stabilised rotation at a gate location (lab-frame phase)."""
    location: str
    phi: float
    theta: float = np.pi / 2
    duration: float = 102.0
    enabled: bool = True
    kind = "pb1"


@dataclass(frozen=True)
class MsEvent:
    pair: tuple
    theta: float = np.pi / 2
    phase: float = 0.0
    duration: float = 160.0
    enabled: bool = True
    echo: bool = False
    kind = "ms"


@dataclass(frozen=True)
class TransportEvent:
    src: str
    dst: str
    duration: float = 100.0
    distance_um: float = 0.0
    kind = "transport"


@dataclass(frozen=True)
class FrameEvent:
    ion: int
    angle: float
    reason: str = ""
    kind = "frame"


@dataclass
class CompiledSection:
    label: str
    events: list = field(default_factory=list)
    frames_in: tuple = ()
    frames_out: tuple = ()
    minimal_pulse_count: int = None

    @property
    def pulse_count(self) -> int:
        return sum(1 for e in self.events if e.kind == "pb1")

    @property
    def ms_count(self) -> int:
        return sum(1 for e in self.events if e.kind == "ms")

    @property
    def enabled(self) -> bool:
        return all(getattr(e, "enabled", True) for e in self.events)


@dataclass
class CompiledProgram:
    n: int
    s: str
    ion_count: int
    ancilla_index: int
    sections: list = field(default_factory=list)
    padded: bool = False

    @property
    def events(self):
        return [e for sec in self.sections for e in sec.events]

    def count(self, kind, enabled_only=True) -> int:
        return sum(1 for e in self.events if e.kind == kind
                   and (not enabled_only or getattr(e, "enabled", True)))

    @property
    def pb1_count(self) -> int:
        return self.count("pb1")

    @property
    def ms_count(self) -> int:
        return self.count("ms")

    @property
    def transport_count(self) -> int:
        return self.count("transport", enabled_only=False)

    @property
    def frames(self) -> tuple:
        return self.sections[-1].frames_out if self.sections else ()

    def section(self, label) -> CompiledSection:
        for s in self.sections:
            if s.label == label:
                return s
        raise KeyError(label)

    def transports(self):
        return [e for e in self.events if e.kind == "transport"]


# ----------------------------------------------------------------------------
# text format
# ----------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)          # shortest string that round-trips exactly
    if isinstance(x, tuple):
        return "".join(str(v) for v in x)
    return str(x)


_KEYS = {
    "pb1": [("loc", "location"), ("phi", "phi"), ("theta", "theta"), ("duration", "duration"),
            ("on", "enabled")],
    "ms": [("pair", "pair"), ("theta", "theta"), ("phase", "phase"), ("duration", "duration"),
           ("on", "enabled"), ("echo", "echo")],
    "transport": [("src", "src"), ("dst", "dst"), ("duration", "duration"),
                  ("distance", "distance_um")],
    "frame": [("ion", "ion"), ("angle", "angle"), ("reason", "reason")],
}
_CLASSES = {"pb1": PulseEvent, "ms": MsEvent, "transport": TransportEvent, "frame": FrameEvent}


def format_event(e) -> str:
    return " ".join([e.kind] + [f"{k}={_fmt(getattr(e, attr))}" for k, attr in _KEYS[e.kind]])


def dumps(program: CompiledProgram) -> str:
    lines = [f"program n={program.n} s={program.s} ions={program.ion_count} "
             f"ancilla={program.ancilla_index} padded={_fmt(program.padded)}"]
    for sec in program.sections:
        lines.append(f"section {sec.label}")
        lines.extend(format_event(e) for e in sec.events)
        lines.append("frames " + " ".join(_fmt(float(f)) for f in sec.frames_out))
        lines.append("end")
    return "\n".join(lines) + "\n"


def _parse_value(cls, attr, raw):
    types = {f.name: f.type for f in fields(cls)}
    t = types[attr]
    if attr == "pair":
        return tuple(int(c) for c in raw)
    if t in ("bool", bool):
        return raw == "1"
    if t in ("float", float):
        return float(raw)
    if t in ("int", int):
        return int(raw)
    return raw


def parse_event(line: str):
    kind, *tokens = line.split()
    if kind not in _KEYS:
        raise ValueError(f"unknown event kind {kind!r}")
    kv = dict(t.split("=", 1) for t in tokens)
    cls = _CLASSES[kind]
    args = {}
    for key, attr in _KEYS[kind]:
        if key not in kv:
            raise ValueError(f"{kind} event missing {key!r}")
        args[attr] = _parse_value(cls, attr, kv[key])
    return cls(**args)


def loads(text: str) -> CompiledProgram:
    prog = None
    sec = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            head = line.split()[0]
            if head == "program":
                kv = dict(t.split("=", 1) for t in line.split()[1:])
                prog = CompiledProgram(int(kv["n"]), kv["s"], int(kv["ions"]), int(kv["ancilla"]),
                                       padded=kv.get("padded", "0") == "1")
            elif head == "section":
                sec = CompiledSection(line.split()[1])
            elif head == "frames":
                sec.frames_out = tuple(float(v) for v in line.split()[1:])
            elif head == "end":
                prog.sections.append(sec)
                sec = None
            else:
                sec.events.append(parse_event(line))
        except (KeyError, ValueError, AttributeError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if prog is None:
        raise ValueError("no program header")
    if sec is not None:
        raise ValueError(f"line {lineno}: section {sec.label!r} is not closed with 'end'")
    return prog


def dumps_transport(program: CompiledProgram) -> str:
    """Transport-only view of a program, used for honesty comparisons."""
    return "\n".join(format_event(e) for e in program.transports()) + "\n"
