"""Generation-prompt assembly: role preamble, guidelines, few-shot
language/script-matching examples, injected context blocks, and the
user question.

The instruction text here is authored for this project.  Context
blocks are injected verbatim, each prefixed with its faq id in square
brackets so generated answers can be audited against their sources.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .providers import ChatMessage


class EmptyQuestionError(Exception):
    pass


class TemplateError(Exception):
    pass


DEFAULT_COMPANY = "BengalStream"

DEFAULT_GUIDELINES = (
    "Reply in the same language AND script the customer used. If the customer mixes "
    "Bengali and English or writes Bengali in Roman letters, reply the same way.",
    "Answer using only the facts in the context entries below. Do not add information "
    "that is not in the context.",
    "If the context does not cover the question, say that you cannot answer from the "
    "available information, ask the customer for the missing details, or offer to "
    "connect them with a human operator.",
    "Never invent contact channels such as email addresses or phone numbers. Only "
    "mention a contact channel if it appears in the context.",
    "Do not append sign-offs, salutation templates, or operator name placeholders.",
)

# One exchange per language/script form the deployment must match.
DEFAULT_FEW_SHOT = (
    (
        "আমার সাবস্ক্রিপশন কি মাসে মাসে নবায়ন হয়?",
        "হ্যাঁ, আপনার সাবস্ক্রিপশন প্রতি মাসে স্বয়ংক্রিয়ভাবে নবায়ন হয়। আপনি চাইলে অ্যাকাউন্ট সেটিংস থেকে যেকোনো সময় তা বন্ধ করতে পারেন।",
    ),
    (
        "Can I pause my plan while I am travelling?",
        "Yes, you can pause your plan for up to one month from the account settings page. "
        "Your billing stops while the plan is paused.",
    ),
    (
        "amar plan ta ki pause kora jabe?",
        "Ji, account settings theke apni plan ta ek mash porjonto pause korte parben. "
        "Pause thaka obosthay kono bill katbe na.",
    ),
)

CONTEXT_SLOT = "{context_blocks}"
QUESTION_SLOT = "{question}"
DIRECTIVE_SLOT = "{language_directive}"

DEFAULT_LAYOUT = (
    "{preamble}\n\n"
    "Guidelines:\n{guidelines}\n\n"
    "Examples of matching the customer's language and script:\n{examples}\n\n"
    "{language_directive}\n\n"
    "{context_blocks}"
)

NO_CONTEXT_NOTICE = (
    "No context entries are available for this question. You cannot answer it from the "
    "knowledge base: say so, ask for more details, or offer to connect the customer "
    "with a human operator."
)


def reply_language_directive(language: str, script: str) -> str:
    """Explicit reply-language instruction derived from the detected tag.

    A hard directive supplements the few-shot examples because models
    occasionally drift from example-following alone.
    """
    key = (language.lower(), script.lower())
    table = {
        ("english", "roman"): "Reply in English using Roman script.",
        ("bengali", "bengali"): "Reply in Bengali using Bengali script.",
        ("banglish", "roman"): "Reply in Bengali written in Roman script (Banglish).",
    }
    if key in table:
        return table[key]
    return f"Reply in {language} using {script} script."


@dataclass(frozen=True)
class PromptTemplate:
    """Instruction-template configuration with one context slot."""

    company: str = DEFAULT_COMPANY
    preamble: str = ""
    guidelines: tuple[str, ...] = DEFAULT_GUIDELINES
    few_shot: tuple[tuple[str, str], ...] = DEFAULT_FEW_SHOT
    layout: str = DEFAULT_LAYOUT

    def __post_init__(self):
        if not self.preamble:
            object.__setattr__(
                self,
                "preamble",
                f"You are the customer service agent of {self.company}. You always act in "
                f"{self.company}'s name and interest and you help customers resolve issues "
                "with its streaming platform.",
            )
        if self.layout.count(CONTEXT_SLOT) != 1:
            raise TemplateError(f"layout must contain exactly one {CONTEXT_SLOT} slot")
        if QUESTION_SLOT in self.layout:
            raise TemplateError("the question belongs in the user message, not the instruction layout")

    @classmethod
    def from_file(cls, path: str | Path, company: str = DEFAULT_COMPANY) -> "PromptTemplate":
        """Load overrides from a sectioned plain-text file.

        Sections start with a ``[name]`` line: ``preamble`` (free text),
        ``guidelines`` (one rule per line), ``layout`` (text with named
        slots).  Missing sections keep their defaults.
        """
        sections: dict[str, list[str]] = {}
        current: str | None = None
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            stripped = raw.strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                current = stripped[1:-1].lower()
                sections[current] = []
                continue
            if current is not None:
                sections[current].append(raw)
        known = {"preamble", "guidelines", "layout"}
        unknown = set(sections) - known
        if unknown:
            raise TemplateError(f"unknown template sections: {sorted(unknown)}")
        kwargs: dict = {"company": company}
        if "preamble" in sections:
            kwargs["preamble"] = "\n".join(sections["preamble"]).strip()
        if "guidelines" in sections:
            rules = tuple(line.strip() for line in sections["guidelines"] if line.strip())
            if rules:
                kwargs["guidelines"] = rules
        if "layout" in sections:
            kwargs["layout"] = "\n".join(sections["layout"]).strip()
        return cls(**kwargs)


@dataclass(frozen=True)
class PromptMessages:
    """One filled instruction message followed by one user message."""

    instruction: str
    question: str

    def as_chat(self) -> list[ChatMessage]:
        return [ChatMessage("system", self.instruction), ChatMessage("user", self.question)]


def format_context_block(faq_id: str, question: str, answer: str) -> str:
    return f"[{faq_id}] Q: {question}\nA: {answer}"


def build_prompt(
    question: str,
    contexts: list[tuple[str, str, str]],
    language: str,
    script: str,
    template: PromptTemplate | None = None,
) -> PromptMessages:
    """Assemble the generation prompt.

    ``contexts`` holds (faq_id, question, answer) triples in rerank
    order; they are embedded verbatim.  The user question appears only
    in the user message.
    """
    if not question.strip():
        raise EmptyQuestionError("question must be non-empty")
    template = template or PromptTemplate()

    guidelines = "\n".join(f"{i}. {rule}" for i, rule in enumerate(template.guidelines, start=1))
    examples = "\n\n".join(
        f"Customer: {user}\nAgent: {reply}" for user, reply in template.few_shot
    )
    if contexts:
        blocks = "\n\n".join(format_context_block(*ctx) for ctx in contexts)
        context_section = f"Context entries from the FAQ knowledge base:\n\n{blocks}"
    else:
        context_section = NO_CONTEXT_NOTICE

    instruction = template.layout.format(
        preamble=template.preamble,
        guidelines=guidelines,
        examples=examples,
        language_directive=reply_language_directive(language, script),
        context_blocks=context_section,
    )
    return PromptMessages(instruction=instruction, question=question)


def render_template_docs(template: PromptTemplate | None = None) -> str:
    """The fully resolved instruction template with slot markers visible."""
    template = template or PromptTemplate()
    guidelines = "\n".join(f"{i}. {rule}" for i, rule in enumerate(template.guidelines, start=1))
    examples = "\n\n".join(
        f"Customer: {user}\nAgent: {reply}" for user, reply in template.few_shot
    )
    return template.layout.format(
        preamble=template.preamble,
        guidelines=guidelines,
        examples=examples,
        language_directive=DIRECTIVE_SLOT,
        context_blocks=CONTEXT_SLOT,
    )
