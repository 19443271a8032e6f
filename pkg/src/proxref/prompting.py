"""Few-shot prompt construction, completion clients, and reply parsing.

The protocol: a fixed preamble frames the assistant as a material-properties
expert, reference `name : alpha` pairs from the training split supply the
few-shot examples, a reasoning directive asks for material inference before
committing to a number, and the reply must arrive as one markdown table per
queried object with Name / Reason / **Response** rows, the response row
carrying ``range: lo - hi, prediction: **value**``.

Everything here runs against a pluggable completion client.  Tests and the
demo pipeline replay canned transcripts through ReplayClient; OpenAIChatClient
is a thin adapter for a real chat-completions endpoint and is never exercised
by the test suite.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .data import PredictionRecord
from .errors import DataError, TransportError

DEFAULT_PREAMBLE = (
    "You are an expert in material properties. Your task is to estimate the "
    "infrared reflectance of each object you are given. Reply with a single "
    "plausible value chosen from the range you consider reasonable; if you "
    "cannot decide, give your best guess anyway. Keep in mind that the "
    "reflectance of plastic bottles depends on their contents and labels."
)

DEFAULT_REASONING_DIRECTIVE = (
    "Before answering, reason step by step: infer the surface material from "
    "the object's name, compare it against the reference objects below, "
    "narrow down a plausible range of infrared reflectance, and only then "
    "commit to one value."
)

DEFAULT_TABLE_DIRECTIVE = (
    "Format each answer as a markdown table with three rows: |Name|<object>|, "
    "|Reason|<your reasoning>| and |**Response**|range: <low> - <high>, "
    "prediction: **<value>**|."
)


@dataclass(frozen=True)
class PromptSpec:
    """Everything needed to render one deterministic prompt."""

    examples: tuple[tuple[str, float], ...]
    query_names: tuple[str, ...]
    preamble: str = DEFAULT_PREAMBLE
    reasoning_directive: str = DEFAULT_REASONING_DIRECTIVE
    table_directive: str = DEFAULT_TABLE_DIRECTIVE

    def __post_init__(self) -> None:
        examples = tuple((str(n), float(a)) for n, a in self.examples)
        queries = tuple(str(q) for q in self.query_names)
        if not examples:
            raise DataError("few-shot prompting needs at least one example pair")
        if not queries:
            raise DataError("at least one query name is required")
        if len(set(queries)) != len(queries):
            raise DataError("query names must be distinct")
        object.__setattr__(self, "examples", examples)
        object.__setattr__(self, "query_names", queries)


def _example_line(name: str, alpha: float) -> str:
    return f"{name} : {format(alpha, 'g')}"


def build_prompt(spec: PromptSpec) -> str:
    """Render the prompt text; identical specs render identical text."""
    queries = ", ".join(json.dumps(name) for name in spec.query_names)
    parts = [
        spec.preamble,
        "",
        spec.reasoning_directive,
        "",
        spec.table_directive,
        "",
        "Here are some example objects and their reflectance for reference:",
        "",
    ]
    parts += [_example_line(name, alpha) for name, alpha in spec.examples]
    parts += [
        "",
        "---",
        "",
        f"User: get_reflectance([{queries}])",
        "You:",
    ]
    return "\n".join(parts)


@dataclass
class EstimateReply:
    """One parsed answer table."""

    name: str
    range_lo: float
    range_hi: float
    prediction: float
    reason: str = ""
    inconsistent: bool = False  # prediction outside its own range

    def __post_init__(self) -> None:
        self.inconsistent = bool(
            not (min(self.range_lo, self.range_hi) <= self.prediction <= max(self.range_lo, self.range_hi))
            or self.range_lo > self.range_hi
        )


@dataclass(frozen=True)
class ParseIssue:
    offset: int  # character offset of the table start in the reply text
    message: str


@dataclass
class ReplyParseReport:
    replies: list[EstimateReply]
    issues: list[ParseIssue]


_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_RESPONSE_RE = re.compile(
    rf"range:\s*({_NUMBER})\s*-\s*({_NUMBER})\s*,\s*prediction:\s*\*{{0,2}}({_NUMBER})\*{{0,2}}"
)


def _stitch_rows(text: str) -> list[tuple[int, list[str]]]:
    """Collect markdown table rows, joining hard-wrapped cell continuations.

    A row starts at a line whose first non-blank character is '|' and runs
    until an accumulated line ends with '|'.  Returns (offset, cells) pairs.
    """
    rows: list[tuple[int, list[str]]] = []
    offset = 0
    pending: list[str] = []
    pending_offset = 0
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        if pending:
            pending.append(stripped)
            if stripped.endswith("|"):
                joined = " ".join(pending)
                cells = [c.strip() for c in joined.strip("|").split("|")]
                rows.append((pending_offset, cells))
                pending = []
        elif stripped.startswith("|"):
            if stripped.endswith("|") and len(stripped) > 1:
                cells = [c.strip() for c in stripped.strip("|").split("|")]
                rows.append((offset, cells))
            else:
                pending = [stripped]
                pending_offset = offset
        else:
            rows.append((offset, []))  # table separator marker
        offset += len(line)
    # trailing unterminated row: treat as (malformed) row so the table
    # grouping still sees it and reports the entry
    if pending:
        joined = " ".join(pending)
        rows.append((pending_offset, [c.strip() for c in joined.strip("|").split("|")]))
    return rows


def _is_divider(cells: list[str]) -> bool:
    return bool(cells) and all(re.fullmatch(r":?-{1,}:?", c) for c in cells if c)


def parse_reply_report(text: str) -> ReplyParseReport:
    """Extract every Name/Reason/Response table; skip and report bad entries."""
    rows = _stitch_rows(text)
    tables: list[tuple[int, list[list[str]]]] = []
    current: list[list[str]] = []
    current_offset = 0
    for offset, cells in rows:
        if cells:
            if not current:
                current_offset = offset
            current.append(cells)
        elif current:
            tables.append((current_offset, current))
            current = []
    if current:
        tables.append((current_offset, current))

    replies: list[EstimateReply] = []
    issues: list[ParseIssue] = []
    for offset, table in tables:
        name = None
        reason = ""
        response = None
        for cells in table:
            if len(cells) < 2 or _is_divider(cells):
                continue
            key = cells[0].strip("* ").lower()
            value = cells[1]
            if key == "name":
                name = value
            elif key == "reason":
                reason = value
            elif key == "response":
                response = value
        if name is None and response is None:
            continue  # header-only or unrelated table
        if name is None:
            issues.append(ParseIssue(offset, "table has no Name row"))
            continue
        if response is None:
            issues.append(ParseIssue(offset, f"table for {name!r} has no Response row"))
            continue
        match = _RESPONSE_RE.search(response)
        if match is None:
            issues.append(
                ParseIssue(offset, f"unparseable response cell for {name!r}: {response!r}")
            )
            continue
        lo, hi, pred = (float(g) for g in match.groups())
        if not all(math.isfinite(v) for v in (lo, hi, pred)):
            issues.append(ParseIssue(offset, f"non-finite numbers for {name!r}"))
            continue
        replies.append(
            EstimateReply(name=name, range_lo=lo, range_hi=hi, prediction=pred, reason=reason)
        )
    return ReplyParseReport(replies=replies, issues=issues)


def parse_reply(text: str) -> list[EstimateReply]:
    """Parsed replies in document order; malformed entries are skipped."""
    return parse_reply_report(text).replies


def render_reply(replies: list[EstimateReply]) -> str:
    """Render replies back into the table form the parser accepts."""
    blocks = []
    for reply in replies:
        blocks.append(
            "\n".join(
                [
                    "|item|result|",
                    "|:--|:--|",
                    f"|Name|{reply.name}|",
                    f"|Reason|{reply.reason}|",
                    f"|**Response**|range: {format(reply.range_lo, 'g')} - "
                    f"{format(reply.range_hi, 'g')}, prediction: "
                    f"**{format(reply.prediction, 'g')}**|",
                ]
            )
        )
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# ---------------------------------------------------------------------------
# clients


@dataclass(frozen=True)
class ClientConfig:
    endpoint: str = ""
    model: str = ""
    timeout_s: float = 30.0
    max_retries: int = 2
    parallelism: int = 1

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise DataError(f"timeout_s must be > 0, got {self.timeout_s}")
        if self.max_retries < 0:
            raise DataError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.parallelism < 1:
            raise DataError(f"parallelism must be >= 1, got {self.parallelism}")


class ReplayClient:
    """Deterministic mock: returns canned reply texts in order, cycling."""

    def __init__(self, replies: list[str]):
        if not replies:
            raise DataError("ReplayClient needs at least one canned reply")
        self._replies = list(replies)
        self._cursor = 0
        self._lock = threading.Lock()

    @classmethod
    def from_directory(cls, directory) -> "ReplayClient":
        paths = sorted(Path(directory).glob("*.txt"))
        if not paths:
            raise DataError(f"no .txt transcripts found under {directory}")
        return cls([p.read_text(encoding="utf-8") for p in paths])

    def complete(self, prompt: str) -> str:
        with self._lock:
            reply = self._replies[self._cursor % len(self._replies)]
            self._cursor += 1
        return reply


class OpenAIChatClient:
    """Minimal chat-completions adapter (one prompt in, one text out)."""

    def __init__(self, cfg: ClientConfig, api_key: str = ""):
        if not cfg.endpoint or not cfg.model:
            raise DataError("remote client needs both an endpoint and a model id")
        self.cfg = cfg
        self.api_key = api_key

    def complete(self, prompt: str) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                self.cfg.endpoint.rstrip("/") + "/chat/completions",
                json={
                    "model": self.cfg.model,
                    "messages": [{"role": "user", "content": prompt}],
                },
                headers=headers,
                timeout=self.cfg.timeout_s,
            )
            resp.raise_for_status()
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except Exception as exc:  # transport layer owns all remote failures
            raise TransportError(f"completion request failed: {exc}") from exc


# ---------------------------------------------------------------------------
# estimation runs


@dataclass(frozen=True)
class ProtocolFailure:
    object_id: str
    trial_index: int
    message: str


@dataclass
class EstimationRun:
    """Everything one prompt-protocol run produced, raw replies included."""

    records: list[PredictionRecord]
    replies: dict[tuple[str, int], EstimateReply] = field(default_factory=dict)
    transcripts: list[tuple[str, str]] = field(default_factory=list)
    failures: list[ProtocolFailure] = field(default_factory=list)


def _complete_with_retries(client, prompt: str, cfg: ClientConfig) -> str:
    last: Exception | None = None
    for _ in range(cfg.max_retries + 1):
        try:
            return client.complete(prompt)
        except TransportError as exc:
            last = exc
    raise TransportError(f"retries exhausted: {last}")


def estimate(
    queries: "list[tuple[str, str]]",
    examples: "list[tuple[str, float]]",
    client,
    method_id: str = "prompt",
    trials: int = 6,
    cfg: ClientConfig | None = None,
) -> EstimationRun:
    """Run the prompt protocol: one independent request per trial.

    ``queries`` are (object_id, name) pairs; every trial issues a single
    request batching all names, mirroring the get_reflectance([...]) call
    form.  Predictions are clamped to [0, 1] in the records; the raw parsed
    replies are preserved in the run.  Transport failure after retries raises
    with the affected queries named; a query missing from a parseable reply
    is recorded as a per-query failure and the run continues.
    """
    cfg = cfg or ClientConfig()
    pairs = [(str(obj), str(name)) for obj, name in queries]
    if not pairs:
        raise DataError("estimate needs at least one query")
    spec = PromptSpec(
        examples=tuple(examples), query_names=tuple(name for _, name in pairs)
    )
    prompt = build_prompt(spec)

    def run_trial(trial: int) -> str:
        try:
            return _complete_with_retries(client, prompt, cfg)
        except TransportError as exc:
            names = ", ".join(name for _, name in pairs)
            raise TransportError(
                f"trial {trial}: completion failed for queries [{names}]: {exc}"
            ) from exc

    if cfg.parallelism > 1 and trials > 1:
        with concurrent.futures.ThreadPoolExecutor(cfg.parallelism) as pool:
            reply_texts = list(pool.map(run_trial, range(trials)))
    else:
        reply_texts = [run_trial(t) for t in range(trials)]

    run = EstimationRun(records=[])
    for trial, text in enumerate(reply_texts):
        run.transcripts.append((prompt, text))
        by_name = {r.name.strip().lower(): r for r in parse_reply(text)}
        for object_id, name in pairs:
            reply = by_name.get(name.strip().lower())
            if reply is None:
                run.failures.append(
                    ProtocolFailure(object_id, trial, f"no parseable entry for {name!r}")
                )
                continue
            run.replies[(object_id, trial)] = reply
            clamped = min(max(reply.prediction, 0.0), 1.0)
            run.records.append(
                PredictionRecord(
                    method_id=method_id,
                    object_id=object_id,
                    trial_index=trial,
                    predicted_alpha=clamped,
                )
            )
    run.records.sort(key=lambda r: (r.object_id, r.trial_index))
    return run


def save_transcripts(run: EstimationRun, directory) -> list[Path]:
    """Persist each trial's prompt and raw reply verbatim for audit."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for trial, (prompt, reply) in enumerate(run.transcripts):
        p = directory / f"trial_{trial:02d}_prompt.txt"
        r = directory / f"trial_{trial:02d}_reply.txt"
        p.write_text(prompt, encoding="utf-8")
        r.write_text(reply, encoding="utf-8")
        written += [p, r]
    return written
