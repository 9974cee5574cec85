from __future__ import annotations

from typing import Any, List, Tuple

from pyparsing import (
    CaselessLiteral,
    Combine,
    Literal,
    Optional,
    ParseException,
    ParserElement,
    Word,
    ZeroOrMore,
    nums,
)

from ..exceptions import UsageError
from ..transfer import FinetuneConfig


__all__: Tuple[str, ...] = ("GridParser", "parse_ints", "parse_tags")


class GridParser:
    """
    Parses the sweep axes given on the command line.

    ::

        integer :: '0'..'9'+
        irange  :: integer '..' integer [ '*' integer ]
        ints    :: ( irange | integer ) [ ',' ( irange | integer ) ]*
        tag     :: 'C' integer
        trange  :: tag '..' tag
        tags    :: ( trange | tag ) [ ',' ( trange | tag ) ]*

    ``a..b`` is every integer from ``a`` to ``b``; ``a..b*k`` is the geometric
    sequence ``a, a*k, a*k^2, ...`` up to ``b``. Results are de-duplicated and
    sorted, ints numerically and tags in configuration order.
    """

    def _push_int(self, strg: Any, loc: Any, toks: Any) -> Any:
        self.values.append(int(toks[0]))

    def _push_int_range(self, strg: Any, loc: Any, toks: Any) -> Any:
        start, stop = int(toks[0]), int(toks[1])
        factor = int(toks[2]) if len(toks) > 2 else None
        if stop < start:
            raise UsageError(f"Range {start}..{stop} is empty.")
        if factor is None:
            self.values.extend(range(start, stop + 1))
            return
        if factor < 2 or start < 1:
            raise UsageError(
                f"Geometric range {start}..{stop}*{factor} needs start >= 1 and factor >= 2."
            )
        value = start
        while value <= stop:
            self.values.append(value)
            value *= factor

    def _push_tag(self, strg: Any, loc: Any, toks: Any) -> Any:
        self.values.append(self._tag_index(toks[0]))

    def _push_tag_range(self, strg: Any, loc: Any, toks: Any) -> Any:
        start, stop = self._tag_index(toks[0]), self._tag_index(toks[1])
        if stop < start:
            raise UsageError(f"Range {toks[0]}..{toks[1]} is empty.")
        self.values.extend(range(start, stop + 1))

    @staticmethod
    def _tag_index(token: str) -> int:
        return list(FinetuneConfig).index(FinetuneConfig.parse(token))

    def __init__(self) -> None:
        self.values: List[int] = []
        integer: Word = Word(nums)
        dots: ParserElement = Literal("..").suppress()
        star: ParserElement = Literal("*").suppress()
        comma: ParserElement = Literal(",").suppress()
        irange: ParserElement = integer + dots + integer + Optional(star + integer)
        irange.setParseAction(self._push_int_range)
        iitem: ParserElement = irange | integer.copy().setParseAction(self._push_int)
        tag: Combine = Combine(CaselessLiteral("C") + Word(nums))
        trange: ParserElement = (tag + dots + tag).setParseAction(self._push_tag_range)
        titem: ParserElement = trange | tag.copy().setParseAction(self._push_tag)
        self.ints: ParserElement = iitem + ZeroOrMore(comma + iitem)
        self.tags: ParserElement = titem + ZeroOrMore(comma + titem)

    def _run(self, grammar: ParserElement, text: str, what: str) -> List[int]:
        self.values = []
        try:
            grammar.parseString(text.strip(), parseAll=True)
        except ParseException as error:
            raise UsageError(f'Cannot parse {what} "{text}": {error}') from None
        return sorted(set(self.values))

    def parse_ints(self, text: str) -> Tuple[int, ...]:
        return tuple(self._run(self.ints, text, "integer list"))

    def parse_tags(self, text: str) -> Tuple[FinetuneConfig, ...]:
        tags = list(FinetuneConfig)
        return tuple(tags[i] for i in self._run(self.tags, text, "configuration list"))


def parse_ints(text: str) -> Tuple[int, ...]:
    """
    >>> parse_ints("1..16*2")
    (1, 2, 4, 8, 16)
    >>> parse_ints("4,8,1..2")
    (1, 2, 4, 8)
    """
    return GridParser().parse_ints(text)


def parse_tags(text: str) -> Tuple[FinetuneConfig, ...]:
    """
    >>> [str(t) for t in parse_tags("C0,C6..C8")]
    ['C0', 'C6', 'C7', 'C8']
    """
    return GridParser().parse_tags(text)
