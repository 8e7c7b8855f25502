import re
import logging
from dataclasses import dataclass
from typing import Iterable, List, Tuple

from core.errors import InvalidPartitionError

logger = logging.getLogger(__name__)

_BLOCK = re.compile(r"\{([^{}]*)\}")


@dataclass(frozen=True)
class Partition:
    """
    A partition of {1..d} into disjoint nonempty blocks.

    Blocks are stored 1-based, each sorted, and ordered by least element.
    """

    d: int
    blocks: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(set(b))) for b in self.blocks), key=lambda b: b[0] if b else 0))
        flat = [i for b in blocks for i in b]
        if self.d < 1 or any(not b for b in blocks):
            raise InvalidPartitionError(f"partition of {{1..{self.d}}} needs nonempty blocks")
        if sorted(flat) != list(range(1, self.d + 1)) or sum(len(b) for b in self.blocks) != self.d:
            raise InvalidPartitionError(f"blocks {self.blocks} do not partition {{1..{self.d}}}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def size(self) -> int:
        return len(self.blocks)

    def axes(self) -> List[int]:
        """0-based tensor axes in block order."""
        return [i - 1 for b in self.blocks for i in b]

    def refines(self, coarse: "Partition") -> bool:
        """True if every block of self lies inside a block of coarse."""
        return self.d == coarse.d and all(any(set(b) <= set(c) for c in coarse.blocks) for b in self.blocks)

    def __str__(self) -> str:
        return "".join("{" + ",".join(str(i) for i in b) + "}" for b in self.blocks)


def parse_partition(text: str, d: int = None) -> Partition:
    """
    Parse the block-list syntax, e.g. "{1,2}{3}".

    Args:
        text: Block list
        d: Expected order; inferred from the largest index when omitted

    Raises:
        InvalidPartitionError: If the text is malformed or the blocks do not partition {1..d}
    """
    compact = text.replace(" ", "")
    blocks = _BLOCK.findall(compact)
    if not blocks or "".join("{" + b + "}" for b in blocks) != compact:
        logger.error(f"Malformed partition: {text}")
        raise InvalidPartitionError(f"malformed partition '{text}'")
    try:
        parsed = [tuple(int(tok) for tok in b.split(",") if tok) for b in blocks]
    except ValueError:
        raise InvalidPartitionError(f"malformed partition '{text}'")
    if d is None:
        d = max((max(b) for b in parsed if b), default=0)
    return Partition(d, tuple(parsed))


def all_partitions(d: int) -> List[Partition]:
    """All set partitions of {1..d}, from the single block down to singletons."""
    def build(items: List[int]) -> Iterable[List[List[int]]]:
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for sub in build(rest):
            for k in range(len(sub)):
                yield sub[:k] + [[first] + sub[k]] + sub[k + 1:]
            yield [[first]] + sub

    out = [Partition(d, tuple(tuple(b) for b in blocks)) for blocks in build(list(range(1, d + 1)))]
    return sorted(out, key=lambda p: (p.size, str(p)))
