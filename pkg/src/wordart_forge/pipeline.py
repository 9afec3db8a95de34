"""Pipeline agent: prompt extension and the dataflow program it emits.

The plan language is a straight-line dataflow notation, one call per line:

    out = Module(name="literal", count=3, upstream=$other_out)

Arguments are double-quoted strings, numbers, or ``$ref`` references to an
earlier line's output.  The module registry is closed; the interpreter in
the session service dispatches on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

from .core import (
    BackendUnavailable,
    ExtendedPrompt,
    FixtureMiss,
    HyperParams,
    InvalidProgram,
    PipelineParams,
    ProgramSyntaxError,
    StyleKind,
    Timeout,
    UnknownDirective,
    UserPrompt,
    replace_params,
)
from .gateway import ChatClient, render_template

#: Registered modules and the argument names each one requires.
MODULE_REGISTRY: Mapping[str, tuple[str, ...]] = {
    "ExtendPrompt": ("text",),
    "GlyphGen": ("text", "style"),
    "SemanticDeform": ("text", "concept"),
    "ToTSelect": ("prompt",),
    "TexRender": ("glyph", "selection"),
    "Evaluate": ("artifact", "prompt"),
    "UpdateParams": ("feedback",),
}

Number = Union[int, float]


@dataclass(frozen=True)
class Arg:
    """One named argument; kind is 'string', 'number' or 'ref'."""

    name: str
    kind: str
    value: Union[str, Number]

    def __post_init__(self) -> None:
        if self.kind not in ("string", "number", "ref"):
            raise ValueError(f"unknown arg kind {self.kind!r}")


@dataclass(frozen=True)
class Statement:
    """``output = module(args...)`` with its source line for diagnostics."""

    output: str
    module: str
    args: tuple[Arg, ...]
    line: int = 0


Program = tuple[Statement, ...]


# -- tokenizer -------------------------------------------------------------

_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | set("0123456789")
_DIGITS = set("0123456789")


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize_line(text: str, lineno: int) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        col = i + 1
        if ch in " \t":
            i += 1
            continue
        if ch in _IDENT_START:
            j = i + 1
            while j < n and text[j] in _IDENT_CONT:
                j += 1
            tokens.append(_Token("IDENT", text[i:j], lineno, col))
            i = j
            continue
        if ch in _DIGITS or (ch == "-" and i + 1 < n and text[i + 1] in _DIGITS):
            j = i + 1 if ch == "-" else i
            while j < n and text[j] in _DIGITS:
                j += 1
            if j < n and text[j] == ".":
                j += 1
                if j >= n or text[j] not in _DIGITS:
                    raise ProgramSyntaxError(f"line {lineno}, col {col}: digits must follow '.'")
                while j < n and text[j] in _DIGITS:
                    j += 1
            if j < n and text[j] in "eE":
                j += 1
                if j < n and text[j] in "+-":
                    j += 1
                if j >= n or text[j] not in _DIGITS:
                    raise ProgramSyntaxError(f"line {lineno}, col {col}: malformed exponent")
                while j < n and text[j] in _DIGITS:
                    j += 1
            tokens.append(_Token("NUMBER", text[i:j], lineno, col))
            i = j
            continue
        if ch == '"':
            j = i + 1
            out = []
            while True:
                if j >= n:
                    raise ProgramSyntaxError(f"line {lineno}, col {col}: unterminated string")
                c = text[j]
                if c == "\\":
                    if j + 1 >= n or text[j + 1] not in '"\\':
                        raise ProgramSyntaxError(
                            f"line {lineno}, col {j + 1}: unsupported escape"
                        )
                    out.append(text[j + 1])
                    j += 2
                    continue
                if c == '"':
                    j += 1
                    break
                out.append(c)
                j += 1
            tokens.append(_Token("STRING", "".join(out), lineno, col))
            i = j
            continue
        simple = {"=": "EQUALS", "(": "LPAREN", ")": "RPAREN", ",": "COMMA", "$": "DOLLAR"}
        if ch in simple:
            tokens.append(_Token(simple[ch], ch, lineno, col))
            i += 1
            continue
        raise ProgramSyntaxError(f"line {lineno}, col {col}: unexpected character {ch!r}")
    return tokens


class _LineParser:
    def __init__(self, tokens: list[_Token], lineno: int):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno

    def _fail(self, expected: str) -> ProgramSyntaxError:
        if self.pos < len(self.tokens):
            tok = self.tokens[self.pos]
            return ProgramSyntaxError(
                f"line {tok.line}, col {tok.col}: expected {expected}, got {tok.text!r}"
            )
        return ProgramSyntaxError(f"line {self.lineno}: expected {expected}, got end of line")

    def expect(self, kind: str, expected: str) -> _Token:
        if self.pos >= len(self.tokens) or self.tokens[self.pos].kind != kind:
            raise self._fail(expected)
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def parse(self) -> Statement:
        output = self.expect("IDENT", "output name").text
        self.expect("EQUALS", "'='")
        module = self.expect("IDENT", "module name").text
        self.expect("LPAREN", "'('")
        args: list[Arg] = []
        nxt = self.peek()
        if nxt is not None and nxt.kind != "RPAREN":
            while True:
                args.append(self.parse_arg())
                nxt = self.peek()
                if nxt is not None and nxt.kind == "COMMA":
                    self.pos += 1
                    continue
                break
        self.expect("RPAREN", "')'")
        if self.pos != len(self.tokens):
            raise self._fail("end of line")
        return Statement(output=output, module=module, args=tuple(args), line=self.lineno)

    def parse_arg(self) -> Arg:
        name = self.expect("IDENT", "argument name").text
        self.expect("EQUALS", "'='")
        tok = self.peek()
        if tok is None:
            raise self._fail("argument value")
        if tok.kind == "STRING":
            self.pos += 1
            return Arg(name=name, kind="string", value=tok.text)
        if tok.kind == "NUMBER":
            self.pos += 1
            text = tok.text
            value: Number = float(text) if ("." in text or "e" in text or "E" in text) else int(text)
            return Arg(name=name, kind="number", value=value)
        if tok.kind == "DOLLAR":
            self.pos += 1
            ref = self.expect("IDENT", "reference name").text
            return Arg(name=name, kind="ref", value=ref)
        raise self._fail("string, number or $reference")


def parse_program(text: str) -> Program:
    """Parse program text; ProgramSyntaxError carries line and column."""
    statements: list[Statement] = []
    # Split on newline only: unicode line breaks inside string literals are
    # ordinary characters, not statement separators.
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        if not line.strip():
            continue
        tokens = _tokenize_line(line, lineno)
        statements.append(_LineParser(tokens, lineno).parse())
    if not statements:
        raise ProgramSyntaxError("program has no statements")
    return tuple(statements)


def _print_value(arg: Arg) -> str:
    if arg.kind == "string":
        escaped = str(arg.value).replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if arg.kind == "ref":
        return f"${arg.value}"
    return repr(arg.value)


def print_program(program: Sequence[Statement]) -> str:
    """Canonical text for a program; parse(print(p)) rebuilds p exactly."""
    lines = []
    for stmt in program:
        rendered = ", ".join(f"{a.name}={_print_value(a)}" for a in stmt.args)
        lines.append(f"{stmt.output} = {stmt.module}({rendered})")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ValidationIssue:
    """One validation finding, positioned at its source line."""

    line: int
    kind: str
    message: str


def validate_program(program: Sequence[Statement]) -> list[ValidationIssue]:
    """Check registry membership, reference scoping, output uniqueness.

    Issues come back in source order; an empty list means the program is
    runnable.  References only see outputs bound on earlier lines, so a
    line cannot consume its own output.
    """
    issues: list[ValidationIssue] = []
    bound: set[str] = set()
    for stmt in program:
        required = MODULE_REGISTRY.get(stmt.module)
        if required is None:
            issues.append(
                ValidationIssue(stmt.line, "unknown-module", f"module {stmt.module!r} is not registered")
            )
        if stmt.output in bound:
            issues.append(
                ValidationIssue(stmt.line, "duplicate-output", f"output {stmt.output!r} already bound")
            )
        given = {a.name for a in stmt.args}
        if required is not None:
            for need in required:
                if need not in given:
                    issues.append(
                        ValidationIssue(
                            stmt.line, "missing-arg", f"{stmt.module} requires argument {need!r}"
                        )
                    )
        for arg in stmt.args:
            if arg.kind == "ref" and arg.value not in bound:
                issues.append(
                    ValidationIssue(
                        stmt.line, "undefined-ref", f"reference ${arg.value} is not bound yet"
                    )
                )
        bound.add(stmt.output)
    return issues


def validate_or_raise(program: Sequence[Statement]) -> None:
    issues = validate_program(program)
    if issues:
        summary = "; ".join(f"line {i.line}: {i.message}" for i in issues)
        raise InvalidProgram(summary)


# -- planning --------------------------------------------------------------

def classify_style(ext: ExtendedPrompt, params: HyperParams) -> StyleKind:
    """Pick the glyph style: explicit param wins, else concept implies Semantic."""
    if params.glyph.style_kind is not None:
        return params.glyph.style_kind
    if ext.semantic_concept:
        return StyleKind.SEMANTIC
    return StyleKind.NORMAL


def plan(ext: ExtendedPrompt, params: HyperParams) -> Program:
    """Lay out one full iteration as a validated dataflow program."""
    style = classify_style(ext, params)
    if style is StyleKind.SEMANTIC and ext.semantic_concept:
        glyph_stmt = Statement(
            output="glyph",
            module="SemanticDeform",
            args=(
                Arg("text", "ref", "ext"),
                Arg("concept", "string", ext.semantic_concept),
            ),
            line=2,
        )
    else:
        glyph_stmt = Statement(
            output="glyph",
            module="GlyphGen",
            args=(Arg("text", "ref", "ext"), Arg("style", "string", style.value)),
            line=2,
        )
    program = (
        Statement("ext", "ExtendPrompt", (Arg("text", "string", ext.glyph_prompt),), line=1),
        glyph_stmt,
        Statement("choice", "ToTSelect", (Arg("prompt", "ref", "ext"),), line=3),
        Statement(
            "art",
            "TexRender",
            (Arg("glyph", "ref", "glyph"), Arg("selection", "ref", "choice")),
            line=4,
        ),
        Statement(
            "score",
            "Evaluate",
            (Arg("artifact", "ref", "art"), Arg("prompt", "ref", "ext")),
            line=5,
        ),
    )
    validate_or_raise(program)
    return program


# -- prompt extension --------------------------------------------------------

_STOPWORDS = frozenset(
    "a an the of and or with in on for to at by is are be its it this that as".split()
)


def _content_words(text: str) -> list[str]:
    words = []
    for raw in text.replace(",", " ").split():
        word = "".join(ch for ch in raw if ch.isalnum()).lower()
        if word and word not in _STOPWORDS and word not in words:
            words.append(word)
    return words


def _first_quoted_span(text: str) -> Optional[str]:
    start = text.find('"')
    if start < 0:
        return None
    end = text.find('"', start + 1)
    if end < 0:
        return None
    inner = text[start + 1 : end].strip()
    return inner or None


def _fallback_extension(user: UserPrompt) -> ExtendedPrompt:
    quoted = _first_quoted_span(user.text)
    return ExtendedPrompt(
        glyph_prompt=quoted if quoted else user.text,
        texture_prompt=user.text,
        semantic_concept=None,
    )


def _parse_extension(response: str) -> Optional[ExtendedPrompt]:
    glyph = texture = concept = None
    for line in response.splitlines():
        stripped = line.strip()
        lower = stripped.lower()
        if lower.startswith("glyph:"):
            glyph = stripped[len("glyph:") :].strip()
        elif lower.startswith("texture:"):
            texture = stripped[len("texture:") :].strip()
        elif lower.startswith("concept:"):
            concept = stripped[len("concept:") :].strip()
    if not glyph or not texture:
        return None
    if concept and concept.lower() in ("none", "no", "-"):
        concept = None
    return ExtendedPrompt(glyph_prompt=glyph, texture_prompt=texture, semantic_concept=concept or None)


def _ensure_coverage(user: UserPrompt, ext: ExtendedPrompt) -> ExtendedPrompt:
    """Append any dropped content word to the texture prompt.

    Guarantees every content word of the request survives extension, so the
    consistency check downstream is measuring the image, not lossy wording.
    """
    haystack = f"{ext.glyph_prompt} {ext.texture_prompt}".lower()
    missing = [w for w in _content_words(user.text) if w not in haystack]
    if not missing:
        return ext
    texture = ext.texture_prompt + ", " + ", ".join(missing)
    return ExtendedPrompt(
        glyph_prompt=ext.glyph_prompt,
        texture_prompt=texture,
        semantic_concept=ext.semantic_concept,
    )


def extend_prompt(
    user: UserPrompt,
    params: HyperParams,
    client: Optional[ChatClient] = None,
) -> ExtendedPrompt:
    """Split a raw request into glyph and texture instructions.

    With a chat client, renders the extension template and parses the
    Glyph/Texture/Concept lines.  Backend failures and unparseable answers
    degrade to a deterministic splitter when fallback is enabled, and raise
    BackendUnavailable when it is not.
    """
    ext: Optional[ExtendedPrompt] = None
    failure: Optional[Exception] = None
    if client is not None:
        prompt = render_template("PromptExtend", {"input": user.text})
        try:
            ext = _parse_extension(client.ask(prompt))
            if ext is None:
                failure = BackendUnavailable("extension response had no Glyph/Texture lines")
        except (FixtureMiss, BackendUnavailable, Timeout) as exc:
            failure = exc
    if ext is None:
        if client is not None and not params.pipeline.fallback_enabled:
            raise BackendUnavailable(f"prompt extension failed with fallback disabled: {failure}")
        ext = _fallback_extension(user)
    return _ensure_coverage(user, ext)


# -- feedback integration ------------------------------------------------------

PIPELINE_DIRECTIVES = ("auto", "augment", "fallback_on", "fallback_off")


def integrate_feedback(feedback, directive: str, params: HyperParams) -> HyperParams:
    """Apply a pipeline-scoped directive; other scopes are not touched here.

    ``augment`` ensures each missing target appears in the keyword table
    (idempotent, unlike the loss-driven update rule, which increments).
    """
    if directive not in PIPELINE_DIRECTIVES:
        raise UnknownDirective(f"pipeline does not understand directive {directive!r}")
    pipeline = params.pipeline
    if directive == "fallback_on":
        pipeline = PipelineParams(pipeline.scalars, pipeline.augment_keywords, True)
    elif directive == "fallback_off":
        pipeline = PipelineParams(pipeline.scalars, pipeline.augment_keywords, False)
    elif directive in ("augment", "auto"):
        if feedback.missing_targets:
            keywords = dict(pipeline.augment_keywords)
            for target in feedback.missing_targets:
                keywords.setdefault(target, 1)
            pipeline = PipelineParams(pipeline.scalars, keywords, pipeline.fallback_enabled)
    return replace_params(params, pipeline=pipeline)
