"""Prompt templates for generation, citation insertion, extraction, and
judging.

Templates are plain constants assembled by small builder functions (no
``str.format``, so the literal ``{S}``-style placeholders inside the task
instructions survive untouched). The demonstration blocks are frozen; their
hashes travel in run manifests and instance provenance so any change to a
prompt is visible in the artifacts it produced.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from typing import Sequence

from .textseg import Language

# ---------------------------------------------------------------------------
# Answer-with-citations task instruction (also the instruction field of
# emitted SFT instances)
# ---------------------------------------------------------------------------

ONE_PASS_INSTRUCTION = (
    "Please answer the user's question based on the given document. When a factual "
    "statement S in your response uses information from some chunks in the document "
    "(i.e., <C{s1}>-<C{e1}>, <C{s2}>-<C{e2}>, ...), please append these chunk numbers "
    'to S in the format "<statement>{S}<cite>[{s1}-{e1}][{s2}-{e2}]...</cite></statement>". '
    "For other sentences such as introductory sentences, summarization sentences, "
    'reasoning, and inference, you still need to append "<cite></cite>" to them to '
    "indicate they need no citations. You must answer in the same language as the "
    "user's question."
)

ONE_PASS_EXAMPLE = """[Document Start]
<C0>Rivertown opened its first public library in 1902. <C1>The building was funded by a local merchant named Ada Grey. <C2>It still operates today. <C3>The town also maintains two museums.
[Document End]

[Question]
When did Rivertown open its first library, and who funded it?

[Answer with Citations]
<statement>Rivertown opened its first public library in 1902.<cite>[0-0]</cite></statement><statement>The building was funded by a local merchant named Ada Grey.<cite>[1-1]</cite></statement><statement>So the library dates back more than a century.<cite></cite></statement>"""

# ---------------------------------------------------------------------------
# Chunk-level citation insertion over a snippet list
# ---------------------------------------------------------------------------

SNIPPET_INSERTION_INSTRUCTION = (
    "Your task is to add citations to the existing answer. Specifically, when a "
    "factual statement S in the answer uses information from context snippets "
    "l1, l2, ..., ln, please add citations by appending these snippet numbers to S "
    'in the format "<statement>{S}<cite>[{l1}][{l2}]...[{ln}]</cite></statement>". '
    "For other sentences such as introductory sentences, summarization sentences, "
    'reasoning, and inference, you still need to append "<cite></cite>" to them to '
    "indicate they need no citations. Except for adding citations, do not change "
    "the original content and format of the existing answer."
)

SNIPPET_INSERTION_EXAMPLE = """[Contexts Start]
Snippet [1]
Rivertown opened its first public library in 1902. The building was funded by a local merchant named Ada Grey.

Snippet [2]
The town also maintains two museums and a concert hall near the river.

[Context End]

[Question]
What cultural venues does Rivertown have?

[Existing Answer Start]
Rivertown has a public library dating from 1902. It also maintains two museums and a concert hall. These venues make it a regional cultural hub.

[Existing Answer End]

[Answer with Citations]
<statement>Rivertown has a public library dating from 1902.<cite>[1]</cite></statement><statement>It also maintains two museums and a concert hall.<cite>[2]</cite></statement><statement>These venues make it a regional cultural hub.<cite></cite></statement>"""

# ---------------------------------------------------------------------------
# Sentence-level citation insertion over a numbered document (post-hoc
# sentence strategies)
# ---------------------------------------------------------------------------

SENTENCE_INSERTION_INSTRUCTION = (
    "Your task is to add citations to the existing answer. Specifically, when a "
    "factual statement S in the answer uses information from some chunks in the "
    "document (i.e., <C{s1}>-<C{e1}>, <C{s2}>-<C{e2}>, ...), please add citations by "
    "appending these chunk numbers to S in the format "
    '"<statement>{S}<cite>[{s1}-{e1}][{s2}-{e2}]...</cite></statement>". '
    "For other sentences such as introductory sentences, summarization sentences, "
    'reasoning, and inference, you still need to append "<cite></cite>" to them to '
    "indicate they need no citations. Except for adding citations, do not change "
    "the original content and format of the existing answer."
)

SENTENCE_INSERTION_EXAMPLE = """[Document Start]
<C0>Rivertown opened its first public library in 1902. <C1>The building was funded by a local merchant named Ada Grey. <C2>It still operates today.
[Document End]

[Question]
When did Rivertown open its first library?

[Existing Answer Start]
The first library opened in 1902 and still operates. That makes it the oldest public building in town.

[Existing Answer End]

[Answer with Citations]
<statement>The first library opened in 1902 and still operates.<cite>[0-0][2-2]</cite></statement><statement>That makes it the oldest public building in town.<cite></cite></statement>"""

# ---------------------------------------------------------------------------
# Fine-grained sentence extraction from an expanded chunk
# ---------------------------------------------------------------------------

FINE_EXTRACTION_INSTRUCTION = """You will receive a passage and a factual statement. Your task is to identify the parts in the passage (i.e., chunks <C{s1}>-<C{e1}>, <C{s2}>-<C{e2}>, ...) that support some key points of the statement, and output the chunk number in the format:
```

[s1-e1]

[s2-e2]

...

'''
If the passage contains no key information relevant to the statement, you must output "No relevant information"."""

NO_RELEVANT_INFORMATION = "No relevant information"

FINE_EXTRACTION_EXAMPLES = (
    """[Passage Start]
<C0>Rivertown opened its first public library in 1902. <C1>The building was funded by a local merchant named Ada Grey. <C2>It still operates today.
[Passage End]

[Statment]
The first library in Rivertown opened in 1902.

[output]
[0-0]""",
    """[Passage Start]
<C0>The mill closed in 1987. <C1>Most workers moved to the coast. <C2>A few families stayed behind. <C3>The school shut two years later.
[Passage End]

[Statment]
After the mill closed, most workers left and the school shut within two years.

[output]
[0-1]
[3-3]""",
    """[Passage Start]
<C0>The festival takes place each June. <C1>Tickets usually sell out within hours.
[Passage End]

[Statment]
The mayor was re-elected by a wide margin.

[output]
No relevant information""",
)

# ---------------------------------------------------------------------------
# Question generation (four task flavors, English and Chinese)
# ---------------------------------------------------------------------------

QUESTION_PROMPTS_EN = {
    "general": (
        "Given the above text, please propose 5 English questions that are diverse "
        'and cover all parts of the text, in the following format: "1: ", "2: ", ...'
    ),
    "summary": (
        "Given the above text, please propose 5 English questions that require "
        "summarization or integration from multiple parts, make sure they are "
        'diverse and cover all parts of the text, in the following format: "1: ", "2: ", ...'
    ),
    "multi_hop": (
        "Given the above text, please propose 5 English questions that require "
        "multi-hop reasoning, make sure they are diverse and cover all parts of "
        'the text, in the following format: "1: ", "2: ", ...'
    ),
    "info_extract": (
        "Given the above text, please propose 5 English information-seeking "
        "questions, make sure they are diversed and cover all parts of the text, "
        'in the following format: "1: ", "2: ", ...'
    ),
}

QUESTION_PROMPTS_ZH = {
    "general": (
        "请根据以上文本提出5个中文问题，要求问题多样化并覆盖文本的各个部分，"
        '按照如下格式输出："1: ", "2: ", ...'
    ),
    "summary": (
        "请根据以上文本提出5个需要总结或整合文本多个部分信息的中文问题，"
        '要求问题多样化并覆盖文本的各个部分，按照如下格式输出："1: ", "2: ", ...'
    ),
    "multi_hop": (
        "请根据以上文本提出5个需要多跳推理的中文问题，要求问题多样化并覆盖文本"
        '的各个部分，按照如下格式输出："1: ", "2: ", ...'
    ),
    "info_extract": (
        "请根据以上文本提出5个信息查找类的中文问题，要求问题多样化并覆盖文本的"
        '各个部分，按照如下格式输出："1: ", "2: ", ...'
    ),
}

# ---------------------------------------------------------------------------
# Judge prompts
# ---------------------------------------------------------------------------

SUPPORT_JUDGE_PROMPT = """You are an expert in evaluating text quality. You will receive a user's question about an uploaded document, a factual statement from an AI assistant's response based on that document, and a snippet from the document (since the document is too long to display in full). Your task is to carefully assess whether this statement is supported by the snippet. Please use the following scale to generate your rating:

- [[Fully supported]] - Most information in the statement is supported by or extracted from the snippet. This applies only to cases where the statement and parts of the snippet are almost identical.

- [[Partially supported]] - More than half of the content in the statement is supported by the snippet, but a small portion is either not mentioned or contradicts the snippet. For example, if the statement has two key points and the snippet supports only one of them, it should be considered [Partially supported].

- [[No support]] - The statement is largely unrelated to the snippet, or most key points in the statement do not align with the content of the snippet.

Ensure that you do not use any information or knowledge outside of the snippet when evaluating.

Please provide the rating first, followed by the analysis, in the format "Rating: [[...]] Analysis: ..."."""

NEED_CITATION_JUDGE_PROMPT = """You are an expert in evaluating text quality. You will receive a user's question regarding their uploaded document (due to the length of the document, it is not shown to you), an AI assistant's response based on the document, and a sentence from the response. Your task is to determine whether this sentence is a factual statement made based on the information in the document that requires citation, rather than an introductory sentence, transition sentence, or a summary, reasoning, or inference based on the previous response.
Ensure that you do not use any other external information during your evaluation.
Please first provide your judgment (answer with [[Yes]] or [[No]]), then provide your analysis in the format "Need Citation: [[Yes/No]] Analysis: ..."."""

RELEVANCE_JUDGE_PROMPT = """You are an expert in evaluating text quality. You will receive a user's question about an uploaded document, a factual statement from an AI assistant's response based on that document, and a snippet from the document (since the document is too long to display in full). Your task is to carefully assess whether the snippet contains some key information of the statement. Please use the following grades to generate the rating:
- [[Relevant]] - Some key points of the statement are supported by the snippet or extracted from it.
- [[Unrelevant]] - The statement is almost unrelated to the snippet, or all key points of the statement are inconsistent with the snippet content.
Ensure that you do not use any information or knowledge outside of the snippet when evaluating.
Please provide the rating first, followed by the analysis, in the format "Rating: [[...]] Analysis: ..."."""

CORRECTNESS_CHAT_PROMPT = """[Instructions] You are asked to evaluate the quality of the AI assistant's answers to user questions as an impartial judge, and your evaluation should take into account factors including correctness (high priority), helpfulness, accuracy, and relevance. The scoring principles are as follows: 1. Read the AI assistant's answer and compare the assistant's answer with the reference answer. 2. Identify all errors in the AI Assistant's answers and consider how much they affect the answer to the question. 3. Evaluate how helpful the AI assistant's answers are in directly answering the user's questions and providing the information the user needs. 4. Examine any additional information in the AI assistant's answer to ensure that it is correct and closely related to the question. If this information is incorrect or not relevant to the question, points should be deducted from the overall score. Please give an overall integer rating from 1 to 10 based on the above principles, strictly in the following format: "[[rating]]", e.g. "[[5]]"."""

CORRECTNESS_QA_PROMPT = """You are asked to evaluate the quality of the AI assistant's answers to user question as an impartial judge, and your evaluation should take into account factors including correctness (high priority), and comprehensiveness (whether the assistant's answer covers all points). Read the AI assistant's answer and compare against the reference answer, and give an overall integer rating in 1, 2, 3 (1 = wrong or irrelevant, 2 = partially correct, 3 = correct and comprehensive) based on the above principles, strictly in the following format:"[[rating]]", e.g. "[[2]]"."""

CORRECTNESS_SUMMARY_PROMPT = """You are asked to evaluate the quality of the AI assistant's generated summary as an impartial judge, and your evaluation should take into account factors including correctness (high priority), comprehensiveness (whether the assistant's summary covers all points), and coherence. Read the AI assistant's summary and compare against the reference summary, and give an overall integer rating in on a scale of 1 to 5, where 1 is the lowest and 5 is the highest based on the evaluation criteria, strictly in the following format:"[[rating]]", e.g. "[[3]]"."""


# ---------------------------------------------------------------------------
# Prompt set + builders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PromptSet:
    one_pass_instruction: str = ONE_PASS_INSTRUCTION
    one_pass_example: str = ONE_PASS_EXAMPLE
    snippet_insertion_instruction: str = SNIPPET_INSERTION_INSTRUCTION
    snippet_insertion_example: str = SNIPPET_INSERTION_EXAMPLE
    sentence_insertion_instruction: str = SENTENCE_INSERTION_INSTRUCTION
    sentence_insertion_example: str = SENTENCE_INSERTION_EXAMPLE
    fine_extraction_instruction: str = FINE_EXTRACTION_INSTRUCTION
    fine_extraction_examples: tuple[str, ...] = FINE_EXTRACTION_EXAMPLES
    support_judge: str = SUPPORT_JUDGE_PROMPT
    need_citation_judge: str = NEED_CITATION_JUDGE_PROMPT
    relevance_judge: str = RELEVANCE_JUDGE_PROMPT
    correctness_chat: str = CORRECTNESS_CHAT_PROMPT
    correctness_qa: str = CORRECTNESS_QA_PROMPT
    correctness_summary: str = CORRECTNESS_SUMMARY_PROMPT

    def hashes(self) -> dict[str, str]:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            blob = "\x00".join(value) if isinstance(value, tuple) else value
            out[f.name] = hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]
        return out


DEFAULT_PROMPTS = PromptSet()


def build_one_pass_prompt(prompts: PromptSet, numbered_document: str, question: str) -> str:
    return (
        f"{prompts.one_pass_instruction}\n\n"
        f"Here is an example:\n\n{prompts.one_pass_example}\n\n"
        "Now get ready to handle the following test case.\n\n"
        f"[Document Start]\n{numbered_document}\n[Document End]\n\n"
        f"[Question]\n{question}\n\n"
        f"[Remind]\n{prompts.one_pass_instruction}\n\n"
        "[Answer with Citations]\n"
    )


def build_snippet_insertion_prompt(
    prompts: PromptSet, snippets: Sequence[str], question: str, answer: str
) -> str:
    blocks = "\n\n".join(
        f"Snippet [{i}]\n{snippet}" for i, snippet in enumerate(snippets, start=1)
    )
    return (
        f"{prompts.snippet_insertion_instruction}\n\n"
        f"Here is an example:\n\n{prompts.snippet_insertion_example}\n\n"
        "Now get ready to add citations for the following test case.\n\n"
        f"[Contexts Start]\n{blocks}\n\n[Context End]\n\n"
        f"[Question]\n{question}\n\n"
        f"[Existing Answer Start]\n{answer}\n\n[Existing Answer End]\n\n"
        "[Answer with Citations]\n"
    )


def build_sentence_insertion_prompt(
    prompts: PromptSet, numbered_document: str, question: str, answer: str
) -> str:
    return (
        f"{prompts.sentence_insertion_instruction}\n\n"
        f"Here is an example:\n\n{prompts.sentence_insertion_example}\n\n"
        "Now get ready to add citations for the following test case.\n\n"
        f"[Document Start]\n{numbered_document}\n[Document End]\n\n"
        f"[Question]\n{question}\n\n"
        f"[Existing Answer Start]\n{answer}\n\n[Existing Answer End]\n\n"
        "[Answer with Citations]\n"
    )


def build_fine_extraction_prompt(
    prompts: PromptSet, numbered_passage: str, statement: str
) -> str:
    examples = "\n\n".join(prompts.fine_extraction_examples)
    return (
        f"{prompts.fine_extraction_instruction}\n\n"
        f"Here are some examples:\n\n{examples}\n\n"
        "Now get ready to process the following test case.\n\n"
        f"[Passage Start]\n{numbered_passage}\n[Passage End]\n\n"
        f"[Statment]\n{statement}\n\n"
        "[output]\n"
    )


def build_question_generation_prompt(material: str, task_type: str, language: Language) -> str:
    table = QUESTION_PROMPTS_ZH if language is Language.CHINESE else QUESTION_PROMPTS_EN
    if task_type not in table:
        raise ValueError(f"unknown task type {task_type!r}")
    return f"{material}\n{table[task_type]}"


def build_vanilla_qa_prompt(context_text: str, question: str) -> str:
    """Plain long-context QA: concatenated context and query, nothing else."""
    return f"{context_text}\n\n{question}"


def _judge_sections(**sections: str) -> str:
    return "\n\n".join(
        f"<{name}>\n{value}\n</{name}>" for name, value in sections.items()
    )


def build_support_judge_prompt(
    prompts: PromptSet, question: str, statement: str, snippet: str
) -> str:
    return (
        prompts.support_judge
        + "\n\n"
        + _judge_sections(question=question, statement=statement, snippet=snippet)
    )


def build_need_citation_judge_prompt(
    prompts: PromptSet, question: str, response: str, statement: str
) -> str:
    return (
        prompts.need_citation_judge
        + "\n\n"
        + _judge_sections(question=question, response=response, statement=statement)
    )


def build_relevance_judge_prompt(
    prompts: PromptSet, question: str, statement: str, snippet: str
) -> str:
    return (
        prompts.relevance_judge
        + "\n\n"
        + _judge_sections(question=question, statement=statement, snippet=snippet)
    )


def build_correctness_chat_prompt(
    prompts: PromptSet,
    question: str,
    groundtruth: str,
    response: str,
    few_shot: Sequence[tuple[str, int]] = (),
) -> str:
    parts = [
        prompts.correctness_chat,
        f"[Question] {question}",
        f"[Reference answer begins] {groundtruth} [Reference answer ends]",
    ]
    if few_shot:
        parts.append("Below are several assistants' answers and their ratings:")
        for answer, rating in few_shot:
            parts.append(
                f"[Assistant's answer begins] {answer} [Assistant's answer ends]"
            )
            parts.append(f"Rating: [[{rating}]]")
        parts.append(
            "Please rate the following assistant answers based on the scoring "
            "principles and examples above:"
        )
    parts.append(f"[Assistant's answer begins] {response} [Assistant's answer ends]")
    parts.append("Rating:")
    return "\n\n".join(parts)


def build_correctness_zero_shot_prompt(
    instruction: str, question: str, groundtruth: str, response: str
) -> str:
    return (
        f"{instruction}\n\n"
        f"Question:\n\n{question}\n\n"
        f"Reference answer:\n\n{groundtruth}\n\n"
        f"Assistant's answer:\n\n{response}\n\n"
        "Rating:"
    )
