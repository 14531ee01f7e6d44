#!/usr/bin/env python3
"""
zdistill.protocol - protocol description language and cycle compiler

A protocol is a line-oriented program of prepare / interact / free / project
steps on a two-level mediator X and the subsystems it talks to. Compiling a
program against a model binding yields the effective operator of one cycle on
the unmeasured subsystems.

Grammar (one step per line, '#' starts a comment):

    prepare X <state>
    interact X <sys> <duration>
    free <duration>
    project X <state>

Author: Development Team
Version: 0.1.0
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple
import logging
import math
import re

import numpy as np

from .errors import CompileError, ProtocolParseError
from .linalg import HermitianOperator, as_complex_matrix, hermitian_matexp

logger = logging.getLogger(__name__)

DEFAULT_MEDIATOR = "X"
PROTOCOL_SUFFIX = ".qproto"


# ============================================================================
# Enums
# ============================================================================

class StepKind(Enum):
    """Kinds of protocol step."""
    PREPARE = "prepare"
    INTERACT = "interact"
    FREE = "free"
    PROJECT = "project"


# ============================================================================
# Data Structures
# ============================================================================

@dataclass(frozen=True)
class ProtocolStep:
    """One line of a protocol program."""
    kind: StepKind
    line: int = 0
    subsystem: Optional[str] = None
    state: Optional[str] = None
    pair: Optional[Tuple[str, str]] = None
    duration: Optional[float] = None

    def to_text(self) -> str:
        if self.kind in (StepKind.PREPARE, StepKind.PROJECT):
            return f"{self.kind.value} {self.subsystem} {self.state}"
        if self.kind is StepKind.INTERACT:
            return f"interact {self.pair[0]} {self.pair[1]} {self.duration!r}"
        return f"free {self.duration!r}"

    def __repr__(self):
        return f"ProtocolStep({self.to_text()})"


@dataclass(frozen=True)
class ProtocolProgram:
    """A validated sequence of protocol steps."""
    steps: Tuple[ProtocolStep, ...]
    mediator: str = DEFAULT_MEDIATOR

    @property
    def initial_state(self) -> str:
        """Mediator state the cycle starts from (final projection if no prepare)."""
        first = self.steps[0]
        if first.kind is StepKind.PREPARE:
            return first.state
        return self.steps[-1].state

    @property
    def final_state(self) -> str:
        return self.steps[-1].state

    def to_text(self) -> str:
        return "\n".join(step.to_text() for step in self.steps) + "\n"

    def __len__(self):
        return len(self.steps)

    def __repr__(self):
        return f"ProtocolProgram({len(self.steps)} steps, mediator={self.mediator!r})"


@dataclass(frozen=True)
class CompiledCycle:
    """Effective operator of one protocol cycle on the unmeasured subsystems."""
    matrix: np.ndarray
    source: ProtocolProgram

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self):
        return f"CompiledCycle(dim={self.dim}, steps={len(self.source)})"


# ============================================================================
# Parser
# ============================================================================

class ProtocolParser:
    """
    Line-oriented parser for protocol text.

    Problems are collected in ``self.errors`` with their line numbers while
    the whole text is scanned, then raised together.
    """

    COMMENT_PATTERN = re.compile(r'#.*$')
    DURATION_PATTERN = re.compile(r'^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$')

    # keyword -> number of arguments after the keyword
    ARITY = {
        StepKind.PREPARE: 2,
        StepKind.INTERACT: 3,
        StepKind.FREE: 1,
        StepKind.PROJECT: 2,
    }

    def __init__(self, mediator: str = DEFAULT_MEDIATOR):
        self.mediator = mediator
        self.errors: List[Tuple[int, str]] = []

    def parse(self, text: str) -> ProtocolProgram:
        """
        Parse protocol text into a program.

        Args:
            text: Protocol source

        Returns:
            ProtocolProgram

        Raises:
            ProtocolParseError: With every problem found, each tagged by line
        """
        self.errors = []
        steps: List[ProtocolStep] = []

        for number, raw in enumerate(text.splitlines(), start=1):
            line = self.COMMENT_PATTERN.sub('', raw).strip()
            if not line:
                continue
            step = self._parse_line(line, number)
            if step is not None:
                steps.append(step)

        if not steps and not self.errors:
            self.errors.append((0, "empty program"))
        elif steps:
            self._check_structure(steps)

        if self.errors:
            raise ProtocolParseError(self.errors)

        logger.debug("parsed protocol with %d steps", len(steps))
        return ProtocolProgram(tuple(steps), self.mediator)

    def _parse_line(self, line: str, number: int) -> Optional[ProtocolStep]:
        tokens = line.split()
        keyword, args = tokens[0].lower(), tokens[1:]
        try:
            kind = StepKind(keyword)
        except ValueError:
            self.errors.append((number, f"unknown keyword '{tokens[0]}'"))
            return None

        if len(args) != self.ARITY[kind]:
            self.errors.append((number, f"'{keyword}' expects {self.ARITY[kind]} arguments, got {len(args)}"))
            return None

        if kind is StepKind.FREE:
            duration = self._parse_duration(args[0], number)
            if duration is None:
                return None
            return ProtocolStep(kind, number, duration=duration)

        if args[0] != self.mediator:
            self.errors.append((number, f"'{keyword}' must act on the mediator '{self.mediator}', got '{args[0]}'"))
            return None

        if kind is StepKind.INTERACT:
            duration = self._parse_duration(args[2], number)
            if duration is None:
                return None
            if args[1] == self.mediator:
                self.errors.append((number, "mediator cannot interact with itself"))
                return None
            return ProtocolStep(kind, number, pair=(args[0], args[1]), duration=duration)

        return ProtocolStep(kind, number, subsystem=args[0], state=args[1])

    def _parse_duration(self, token: str, number: int) -> Optional[float]:
        if not self.DURATION_PATTERN.match(token):
            self.errors.append((number, f"invalid duration '{token}'"))
            return None
        value = float(token)
        if not math.isfinite(value):
            self.errors.append((number, f"duration {token} is not finite"))
            return None
        if value < 0:
            self.errors.append((number, f"negative duration {token}"))
            return None
        return value

    def _check_structure(self, steps: Sequence[ProtocolStep]) -> None:
        for position, step in enumerate(steps):
            if step.kind is StepKind.PREPARE and position != 0:
                self.errors.append((step.line, "prepare must be the first step"))
        if steps[-1].kind is not StepKind.PROJECT:
            self.errors.append((steps[-1].line, "program must end with a project step"))


def parse_program(text: str, mediator: str = DEFAULT_MEDIATOR) -> ProtocolProgram:
    """
    Convenience function to parse protocol text.

    Examples:
        >>> parse_program("prepare X up\\ninteract X B 1.0\\nproject X up")
        ProtocolProgram(3 steps, mediator='X')
    """
    return ProtocolParser(mediator).parse(text)


def reverse_program(program: ProtocolProgram) -> ProtocolProgram:
    """
    Reverse the step order, swapping the roles of prepare and project.

    Compiled against the time-reversed binding this gives the adjoint cycle.
    """
    steps = list(program.steps)
    initial = program.initial_state
    body = steps[1:-1] if steps[0].kind is StepKind.PREPARE else steps[:-1]
    reversed_steps = [ProtocolStep(StepKind.PREPARE, subsystem=program.mediator, state=program.final_state)]
    reversed_steps.extend(reversed(body))
    reversed_steps.append(ProtocolStep(StepKind.PROJECT, subsystem=program.mediator, state=initial))
    return ProtocolProgram(tuple(reversed_steps), program.mediator)


# ============================================================================
# Builtin programs
# ============================================================================

BUILTIN_PROGRAMS = ("wp", "wp2", "wp2-up", "prep-b")


def builtin_program_text(name: str, t_A: float = 0.0, tau_A: float = 0.0,
                         t_B: float = 0.0, tau_B: float = 0.0,
                         mediator: str = DEFAULT_MEDIATOR) -> str:
    """
    Protocol text of a builtin cycle with the given durations.

    Args:
        name: "wp" (A then B, up to up), "wp2" (A, B, back through B, A,
            down to down with an interior up projection), "wp2-up" (wp2 with
            the mediator states swapped) or "prep-b" (B only, down to down)
        t_A, tau_A, t_B, tau_B: Interaction and free durations

    Returns:
        Protocol text suitable for parse_program

    Raises:
        ProtocolParseError: For an unknown name
    """
    X = mediator
    d = {key: repr(float(value)) for key, value in
         {"t_A": t_A, "tau_A": tau_A, "t_B": t_B, "tau_B": tau_B}.items()}

    if name == "wp":
        lines = [f"prepare {X} up",
                 f"interact {X} A {d['t_A']}", f"free {d['tau_A']}",
                 f"interact {X} B {d['t_B']}", f"free {d['tau_B']}",
                 f"project {X} up"]
    elif name in ("wp2", "wp2-up"):
        outer, inner = ("down", "up") if name == "wp2" else ("up", "down")
        lines = [f"prepare {X} {outer}",
                 f"interact {X} A {d['t_A']}", f"free {d['tau_A']}",
                 f"interact {X} B {d['t_B']}", f"free {d['tau_B']}",
                 f"project {X} {inner}",
                 f"free {d['tau_B']}", f"interact {X} B {d['t_B']}",
                 f"free {d['tau_A']}", f"interact {X} A {d['t_A']}",
                 f"project {X} {outer}"]
    elif name == "prep-b":
        lines = [f"prepare {X} down", f"interact {X} B {d['t_B']}", f"project {X} down"]
    else:
        raise ProtocolParseError([(0, f"unknown builtin protocol '{name}'")])
    return "\n".join(lines) + "\n"


# ============================================================================
# Model binding and compiler
# ============================================================================

@dataclass(frozen=True)
class ModelBinding:
    """
    Everything the compiler needs to know about a physical model.

    The full Hilbert space is mediator (dimension 2) tensored with the rest;
    ``free_hamiltonian`` and every ``interactions[label]`` act on the full
    space. ``retained`` optionally selects rest-space indices (in the order
    they appear in the compiled matrix).
    """
    name: str
    rest_dim: int
    mediator_states: Mapping[str, np.ndarray]
    free_hamiltonian: HermitianOperator
    interactions: Mapping[str, HermitianOperator]
    mediator: str = DEFAULT_MEDIATOR
    retained: Optional[np.ndarray] = None
    subsystem_dims: Mapping[str, int] = field(default_factory=dict)

    @property
    def full_dim(self) -> int:
        return 2 * self.rest_dim

    def state_vector(self, label: str) -> np.ndarray:
        try:
            return np.asarray(self.mediator_states[label], dtype=complex)
        except KeyError:
            known = ", ".join(sorted(self.mediator_states))
            raise CompileError(f"state '{label}' not in mediator basis ({known})") from None

    def interaction_hamiltonian(self, label: str) -> HermitianOperator:
        try:
            coupling = self.interactions[label]
        except KeyError:
            known = ", ".join(sorted(self.interactions))
            raise CompileError(f"unknown subsystem '{label}' (model {self.name} defines {known})") from None
        return self.free_hamiltonian + coupling

    def time_reversed(self) -> "ModelBinding":
        """Same model with every generator negated."""
        return ModelBinding(
            name=f"{self.name}-reversed",
            rest_dim=self.rest_dim,
            mediator_states=self.mediator_states,
            free_hamiltonian=-self.free_hamiltonian,
            interactions={label: -h for label, h in self.interactions.items()},
            mediator=self.mediator,
            retained=self.retained,
            subsystem_dims=self.subsystem_dims,
        )

    @classmethod
    def for_hamiltonian(cls, hamiltonian, rest_dim: int, label: str = "B") -> "ModelBinding":
        """
        Abstract model: a measured qubit coupled to the rest through one H.

        ``prepare X up / interact X B tau / project X up`` then compiles to
        <up| e^{-iH tau} |up>.
        """
        H = hamiltonian if isinstance(hamiltonian, HermitianOperator) else HermitianOperator(hamiltonian)
        if H.dim != 2 * rest_dim:
            raise CompileError(f"Hamiltonian dimension {H.dim} does not match 2 x {rest_dim}")
        return cls(
            name="abstract",
            rest_dim=rest_dim,
            mediator_states=basis_states(),
            free_hamiltonian=HermitianOperator(np.zeros((H.dim, H.dim))),
            interactions={label: H},
            subsystem_dims={label: rest_dim},
        )

    def __repr__(self):
        labels = ", ".join(sorted(self.interactions))
        return f"ModelBinding({self.name!r}, rest_dim={self.rest_dim}, subsystems=[{labels}])"


def basis_states() -> Dict[str, np.ndarray]:
    """Mediator basis: up = (1, 0), down = (0, 1)."""
    return {"up": np.array([1.0, 0.0], dtype=complex), "down": np.array([0.0, 1.0], dtype=complex)}


def compile_cycle(program: ProtocolProgram, model: ModelBinding) -> CompiledCycle:
    """
    Compile a protocol into the effective operator of one cycle.

    The full-space product of propagators and interior projections is
    sandwiched between the final projection bra and the initial ket on the
    mediator, leaving an operator on the rest of the system.

    Args:
        program: Parsed protocol
        model: Hamiltonians and mediator basis

    Returns:
        CompiledCycle acting on the (optionally retained) rest space

    Raises:
        CompileError: Unknown subsystem or state label, or wrong dimensions
    """
    if len(model.state_vector(program.final_state)) != 2:
        raise CompileError("mediator must be two-dimensional")
    full_dim = model.full_dim
    rest = model.rest_dim
    if model.free_hamiltonian.dim != full_dim:
        raise CompileError(f"free Hamiltonian has dimension {model.free_hamiltonian.dim}, expected {full_dim}")

    propagators: Dict[Tuple[Optional[str], float], np.ndarray] = {}

    def propagator(label: Optional[str], duration: float) -> np.ndarray:
        key = (label, duration)
        if key not in propagators:
            generator = model.free_hamiltonian if label is None else model.interaction_hamiltonian(label)
            propagators[key] = hermitian_matexp(generator, duration)
        return propagators[key]

    initial = model.state_vector(program.initial_state)
    final = model.state_vector(program.final_state)
    body = program.steps[:-1]
    if body and body[0].kind is StepKind.PREPARE:
        body = body[1:]

    operator = np.eye(full_dim, dtype=complex)
    for step in body:
        if step.kind is StepKind.INTERACT:
            factor = propagator(step.pair[1], step.duration)
        elif step.kind is StepKind.FREE:
            factor = propagator(None, step.duration)
        else:
            ket = model.state_vector(step.state)
            factor = np.kron(np.outer(ket, ket.conj()), np.eye(rest))
        operator = factor @ operator

    blocks = operator.reshape(2, rest, 2, rest)
    matrix = np.einsum("a,arbs,b->rs", final.conj(), blocks, initial)
    if model.retained is not None:
        matrix = matrix[np.ix_(model.retained, model.retained)]

    logger.debug("compiled %r against %r", program, model)
    return CompiledCycle(as_complex_matrix(matrix, "compiled cycle"), program)


def load_program(source: str, **durations: float) -> ProtocolProgram:
    """
    Resolve a protocol reference: a builtin name or a path to a .qproto file.

    Raises:
        ProtocolParseError: If the text does not parse or is not valid UTF-8
        FileNotFoundError: If a path is given and does not exist
    """
    if source in BUILTIN_PROGRAMS:
        return parse_program(builtin_program_text(source, **durations))
    with open(source, "r", encoding="utf-8") as handle:
        try:
            text = handle.read()
        except UnicodeDecodeError as e:
            raise ProtocolParseError([(0, f"{source} is not valid UTF-8 ({e.reason} at byte {e.start})")]) from e
    return parse_program(text)
