"""Deterministic snippet corpora for end-to-end tests.

Templates are built so each of the node types under study appears in many
snippets with the target construct well under half of the snippet's tokens
(padding assignments keep the treatment mask fraction below the 0.5 skip
threshold).
"""

import json

_TEMPLATES = [
    "width{i} = {a}\nheight{i} = {b}\ndepth{i} = {c}\nextra{i} = {a}\n"
    "if width{i} < height{i}:\n    width{i} = height{i}\n",
    "left{i} = {a}\nright{i} = {b}\nlow{i} = {c}\nhigh{i} = {a}\nmid{i} = {b}\n"
    "while left{i} < right{i}:\n    left{i} = left{i} + 1\n",
    "total{i} = 0\nlimit{i} = {a}\nstart{i} = {b}\nstop{i} = {c}\nbound{i} = {a}\n"
    "for step{i} in range(limit{i}):\n    total{i} = total{i} + step{i}\n",
    "def scale{i}(value{i}, factor{i}):\n    padding{i} = {a}\n    return value{i} * factor{i} + padding{i}\n",
    "label{i} = 'item-{a}'\ncount{i} = {b}\ntagged{i} = label{i} * count{i}\n",
    "first{i} = {a}\nsecond{i} = {b}\nthird{i} = {c}\nfourth{i} = {a}\n"
    "flag{i} = first{i} < second{i} and second{i} < third{i}\n",
    "source{i} = list(range({a}))\npicked{i} = [entry{i} for entry{i} in source{i} if entry{i} > {b}]\n",
    "base{i} = {a}\nbonus{i} = {b}\nscore{i} = base{i} if base{i} > bonus{i} else bonus{i}\n",
    "names{i} = ['u{a}', 'v{b}']\njoined{i} = '-'.join(names{i})\nsize{i} = len(joined{i}) + {c}\n",
    "acc{i} = {a}\nstep{i} = {b}\nacc{i} = acc{i} + step{i}\nacc{i} = acc{i} * {c}\n",
]


def fixture_sources(n: int) -> list[str]:
    out = []
    for i in range(n):
        template = _TEMPLATES[i % len(_TEMPLATES)]
        out.append(template.format(i=i, a=i % 7 + 2, b=i % 5 + 3, c=i % 3 + 4))
    return out


def write_fixture_corpus(path, n: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, source in enumerate(fixture_sources(n)):
            fh.write(json.dumps({"id": f"fx{i:05d}", "source": source, "origin": "fixture"}))
            fh.write("\n")
