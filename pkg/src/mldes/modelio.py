"""Reading and writing model files.

Two mirrored formats are supported: a line-oriented text format (``.des``)
and a canonical JSON encoding.  Text format by example::

    # comment
    events
      pick controllable
      fell uncontrollable

    plant Arm
      location Idle initial marked
        edge pick goto Busy
      location Busy
        edge fell goto Idle

    requirement Alternate
      alphabet pick
      location Wait initial marked
        edge fell goto Wait

    requirement SafePick
      invariant pick needs Arm.Idle and not Arm.Busy

An automaton's alphabet is the set of events on its edges plus any events
named on an optional ``alphabet`` line (events listed there but never used
on an edge are permanently disabled in composition).  Predicates combine
``Plant.Location`` atoms with ``and``, ``or``, ``not`` and parentheses.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .errors import ModelError
from .model import (
    And,
    Atom,
    Automaton,
    AutomatonRequirement,
    Event,
    InvariantRequirement,
    ModelSet,
    Not,
    Or,
    Predicate,
    Requirement,
)

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _check_name(token: str, line: int, what: str) -> str:
    if not _NAME.match(token):
        raise ModelError(f"invalid {what} name '{token}'", line)
    return token


# ---------------------------------------------------------------------------
# predicates


class _PredParser:
    _TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*|\.|\(|\))")

    def __init__(self, text: str, line: int):
        self.line = line
        self.tokens: list[str] = []
        pos = 0
        while pos < len(text):
            m = self._TOKEN.match(text, pos)
            if not m:
                if text[pos:].strip():
                    raise ModelError(
                        f"bad predicate syntax near '{text[pos:].strip()}'", line
                    )
                break
            self.tokens.append(m.group(1))
            pos = m.end()
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ModelError("predicate ends unexpectedly", self.line)
        self.i += 1
        return tok

    def parse(self) -> Predicate:
        p = self._or()
        if self.peek() is not None:
            raise ModelError(f"unexpected '{self.peek()}' in predicate", self.line)
        return p

    def _or(self) -> Predicate:
        p = self._and()
        while self.peek() == "or":
            self.take()
            p = Or(p, self._and())
        return p

    def _and(self) -> Predicate:
        p = self._unary()
        while self.peek() == "and":
            self.take()
            p = And(p, self._unary())
        return p

    def _unary(self) -> Predicate:
        tok = self.peek()
        if tok == "not":
            self.take()
            return Not(self._unary())
        if tok == "(":
            self.take()
            p = self._or()
            if self.take() != ")":
                raise ModelError("expected ')' in predicate", self.line)
            return p
        plant = self.take()
        if plant in ("and", "or", ")", "."):
            raise ModelError(f"unexpected '{plant}' in predicate", self.line)
        if self.take() != ".":
            raise ModelError(
                f"expected '.' after plant name '{plant}' in predicate", self.line
            )
        loc = self.take()
        return Atom(plant, loc)


def parse_predicate(text: str, line: int = 0) -> Predicate:
    return _PredParser(text, line).parse()


# ---------------------------------------------------------------------------
# text format


class _AutomatonBuilder:
    def __init__(self, name: str, line: int):
        self.name = name
        self.line = line
        self.locations: list[tuple[str, bool, bool]] = []
        self.edges: list[tuple[str, str, str, int]] = []
        self.extra_alphabet: list[str] = []
        self.current: str | None = None

    def build(self, known_events: dict[str, Event]) -> Automaton:
        states = [loc for loc, _, _ in self.locations]
        initials = [loc for loc, ini, _ in self.locations if ini]
        if not initials:
            raise ModelError(f"automaton '{self.name}' has no initial location", self.line)
        if len(initials) > 1:
            raise ModelError(
                f"automaton '{self.name}' has several initial locations", self.line
            )
        seen: dict[tuple[str, str], int] = {}
        for src, ev, dst, line in self.edges:
            if ev not in known_events:
                raise ModelError(f"edge uses undeclared event '{ev}'", line)
            if dst not in states:
                raise ModelError(f"edge goes to undeclared location '{dst}'", line)
            if (src, ev) in seen:
                raise ModelError(
                    f"automaton '{self.name}' is nondeterministic: two edges leave "
                    f"'{src}' on '{ev}'",
                    line,
                )
            seen[(src, ev)] = line
        alphabet = {ev for _, ev, _, _ in self.edges}
        alphabet.update(self.extra_alphabet)
        return Automaton(
            name=self.name,
            alphabet=frozenset(alphabet),
            states=tuple(states),
            initial=initials[0],
            marked=frozenset(loc for loc, _, mk in self.locations if mk),
            transitions=tuple((s, e, d) for s, e, d, _ in self.edges),
        )


def parse_model(text: str) -> ModelSet:
    """Parse the text model format; errors carry 1-based line numbers."""
    events: list[Event] = []
    event_table: dict[str, Event] = {}
    plants: list[_AutomatonBuilder] = []
    requirements: list[tuple] = []  # ("aut", builder) | ("inv", name, ev, pred, line)
    names_seen: dict[str, int] = {}

    section: str | None = None
    builder: _AutomatonBuilder | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]

        if head == "events":
            if len(tokens) != 1:
                raise ModelError("'events' takes no arguments", lineno)
            section = "events"
            builder = None
        elif head in ("plant", "requirement"):
            if len(tokens) != 2:
                raise ModelError(f"'{head}' needs exactly one name", lineno)
            name = _check_name(tokens[1], lineno, head)
            if name in names_seen:
                raise ModelError(
                    f"name '{name}' already declared on line {names_seen[name]}", lineno
                )
            names_seen[name] = lineno
            builder = _AutomatonBuilder(name, lineno)
            if head == "plant":
                plants.append(builder)
                section = "plant"
            else:
                requirements.append(("aut", builder))
                section = "requirement"
        elif section == "events":
            if len(tokens) != 2 or tokens[1] not in ("controllable", "uncontrollable"):
                raise ModelError(
                    "event lines are '<name> controllable|uncontrollable'", lineno
                )
            name = _check_name(tokens[0], lineno, "event")
            if name in event_table:
                raise ModelError(f"event '{name}' already declared", lineno)
            ev = Event(name, tokens[1] == "controllable")
            events.append(ev)
            event_table[name] = ev
        elif head == "location":
            if builder is None:
                raise ModelError("'location' outside a plant or requirement", lineno)
            if len(tokens) < 2:
                raise ModelError("'location' needs a name", lineno)
            name = _check_name(tokens[1], lineno, "location")
            flags = tokens[2:]
            for f in flags:
                if f not in ("initial", "marked"):
                    raise ModelError(f"unknown location flag '{f}'", lineno)
            if any(name == loc for loc, _, _ in builder.locations):
                raise ModelError(f"location '{name}' already declared", lineno)
            builder.locations.append((name, "initial" in flags, "marked" in flags))
            builder.current = name
        elif head == "edge":
            if builder is None or builder.current is None:
                raise ModelError("'edge' outside a location", lineno)
            if len(tokens) != 4 or tokens[2] != "goto":
                raise ModelError("edge lines are 'edge <event> goto <location>'", lineno)
            builder.edges.append((builder.current, tokens[1], tokens[3], lineno))
        elif head == "alphabet":
            if builder is None:
                raise ModelError("'alphabet' outside a plant or requirement", lineno)
            builder.extra_alphabet.extend(
                _check_name(t, lineno, "event") for t in tokens[1:]
            )
        elif head == "invariant":
            if section != "requirement" or builder is None:
                raise ModelError("'invariant' outside a requirement", lineno)
            if builder.locations or builder.edges:
                raise ModelError(
                    "a requirement is either an automaton or an invariant, not both",
                    lineno,
                )
            if len(tokens) < 4 or tokens[2] != "needs":
                raise ModelError(
                    "invariant lines are 'invariant <event> needs <predicate>'", lineno
                )
            pred = parse_predicate(line.split("needs", 1)[1], lineno)
            # replace the placeholder automaton entry for this requirement
            requirements[-1] = ("inv", builder.name, tokens[1], pred, lineno)
            builder = None
            section = None
        else:
            raise ModelError(f"unrecognized line '{line}'", lineno)

    plant_autos = [b.build(event_table) for b in plants]
    plant_events: set[str] = set()
    for p in plant_autos:
        plant_events |= p.alphabet
    plant_by_name = {p.name: p for p in plant_autos}

    reqs: list[Requirement] = []
    for entry in requirements:
        if entry[0] == "aut":
            b = entry[1]
            auto = b.build(event_table)
            for ev in sorted(auto.alphabet):
                if ev not in plant_events:
                    raise ModelError(
                        f"requirement '{b.name}' uses unowned event '{ev}' "
                        "(no plant has it in its alphabet)",
                        b.line,
                    )
            reqs.append(AutomatonRequirement(b.name, auto))
        else:
            _, name, ev, pred, lineno = entry
            if ev not in event_table:
                raise ModelError(f"invariant guards undeclared event '{ev}'", lineno)
            if ev not in plant_events:
                raise ModelError(
                    f"requirement '{name}' uses unowned event '{ev}' "
                    "(no plant has it in its alphabet)",
                    lineno,
                )
            for atom in pred.atoms():
                plant = plant_by_name.get(atom.plant)
                if plant is None:
                    raise ModelError(
                        f"unknown plant '{atom.plant}' in predicate", lineno
                    )
                if atom.location not in plant.states:
                    raise ModelError(
                        f"unknown location atom '{atom.plant}.{atom.location}'", lineno
                    )
            reqs.append(InvariantRequirement(name, ev, pred))

    return ModelSet(events=tuple(events), plants=tuple(plant_autos), requirements=tuple(reqs))


def _automaton_text(auto: Automaton, keyword: str, out: list[str]) -> None:
    out.append(f"{keyword} {auto.name}")
    used = {ev for _, ev, _ in auto.transitions}
    extra = sorted(auto.alphabet - used)
    if extra:
        out.append("  alphabet " + " ".join(extra))
    edges_by_src: dict[str, list[tuple[str, str, str]]] = {}
    for tr in auto.transitions:
        edges_by_src.setdefault(tr[0], []).append(tr)
    for loc in auto.states:
        flags = ""
        if loc == auto.initial:
            flags += " initial"
        if loc in auto.marked:
            flags += " marked"
        out.append(f"  location {loc}{flags}")
        for _, ev, dst in edges_by_src.get(loc, []):
            out.append(f"    edge {ev} goto {dst}")


def model_to_text(model: ModelSet) -> str:
    out: list[str] = ["events"]
    for ev in model.events:
        kind = "controllable" if ev.controllable else "uncontrollable"
        out.append(f"  {ev.name} {kind}")
    for plant in model.plants:
        out.append("")
        _automaton_text(plant, "plant", out)
    for req in model.requirements:
        out.append("")
        if isinstance(req, AutomatonRequirement):
            auto = req.automaton
            if auto.name != req.name:
                auto = Automaton(
                    req.name, auto.alphabet, auto.states, auto.initial, auto.marked,
                    auto.transitions,
                )
            _automaton_text(auto, "requirement", out)
        else:
            out.append(f"requirement {req.name}")
            out.append(f"  invariant {req.event} needs {req.predicate}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# JSON mirror


def _automaton_json(auto: Automaton) -> dict:
    used = {ev for _, ev, _ in auto.transitions}
    doc = {
        "alphabet": sorted(auto.alphabet - used),
        "locations": [
            {"name": s, "initial": s == auto.initial, "marked": s in auto.marked}
            for s in auto.states
        ],
        "edges": [
            {"source": s, "event": e, "target": d} for s, e, d in auto.transitions
        ],
    }
    if not doc["alphabet"]:
        del doc["alphabet"]
    return doc


def _automaton_from_json(name: str, doc: dict) -> Automaton:
    locations = doc["locations"]
    initials = [loc["name"] for loc in locations if loc.get("initial")]
    if len(initials) != 1:
        raise ModelError(f"automaton '{name}' needs exactly one initial location")
    edges = tuple(
        (e["source"], e["event"], e["target"]) for e in doc.get("edges", [])
    )
    alphabet = {e for _, e, _ in edges} | set(doc.get("alphabet", []))
    return Automaton(
        name=name,
        alphabet=frozenset(alphabet),
        states=tuple(loc["name"] for loc in locations),
        initial=initials[0],
        marked=frozenset(loc["name"] for loc in locations if loc.get("marked")),
        transitions=edges,
    )


def model_to_json(model: ModelSet) -> str:
    doc = {
        "events": [
            {"name": ev.name, "controllable": ev.controllable} for ev in model.events
        ],
        "plants": [
            {"name": p.name, **_automaton_json(p)} for p in model.plants
        ],
        "requirements": [],
    }
    for req in model.requirements:
        if isinstance(req, AutomatonRequirement):
            doc["requirements"].append(
                {"name": req.name, "kind": "automaton", **_automaton_json(req.automaton)}
            )
        else:
            doc["requirements"].append(
                {
                    "name": req.name,
                    "kind": "invariant",
                    "event": req.event,
                    "needs": str(req.predicate),
                }
            )
    return json.dumps(doc, indent=2) + "\n"


def model_from_json(text: str) -> ModelSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON model: {exc}", exc.lineno) from None
    events = tuple(
        Event(e["name"], bool(e["controllable"])) for e in doc.get("events", [])
    )
    plants = tuple(
        _automaton_from_json(p["name"], p) for p in doc.get("plants", [])
    )
    reqs: list[Requirement] = []
    for r in doc.get("requirements", []):
        if r.get("kind") == "invariant":
            reqs.append(
                InvariantRequirement(r["name"], r["event"], parse_predicate(r["needs"]))
            )
        else:
            reqs.append(AutomatonRequirement(r["name"], _automaton_from_json(r["name"], r)))
    return ModelSet(events=events, plants=plants, requirements=tuple(reqs))


def load_model(path: str | Path) -> ModelSet:
    """Load a model file; JSON is detected by a leading '{'."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return model_from_json(text)
    return parse_model(text)
