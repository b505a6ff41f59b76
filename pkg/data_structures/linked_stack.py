""" Linked stack used for the iterative graph walks (bridge search, components, chains). """
from __future__ import annotations

from typing import Generic, Iterable, Iterator, TypeVar

T = TypeVar('T')


class EmptyStackError(IndexError):
    pass


class _Frame(Generic[T]):

    __slots__ = ("item", "below")

    def __init__(self, item: T, below: _Frame[T] | None) -> None:
        self.item = item
        self.below = below


class LinkedStack(Generic[T]):
    """
    Stack of linked frames.

    Walks push work items here instead of recursing, so deep chains of
    edges never hit the interpreter recursion limit.
    """

    def __init__(self, items: Iterable[T] = ()) -> None:
        self.top: _Frame[T] | None = None
        self.length = 0
        for item in items:
            self.push(item)

    def __len__(self) -> int:
        return self.length

    def __iter__(self) -> Iterator[T]:
        """ Yields items from the top down. """
        frame = self.top
        while frame is not None:
            yield frame.item
            frame = frame.below

    def is_empty(self) -> bool:
        return self.top is None

    def push(self, item: T) -> None:
        """ :complexity: O(1) """
        self.top = _Frame(item, self.top)
        self.length += 1

    def pop(self) -> T:
        """
        :complexity: O(1)
        :raises EmptyStackError: if the stack is empty
        """
        if self.top is None:
            raise EmptyStackError("pop from an empty stack")
        item = self.top.item
        self.top = self.top.below
        self.length -= 1
        return item

    def peek(self) -> T:
        """
        :complexity: O(1)
        :raises EmptyStackError: if the stack is empty
        """
        if self.top is None:
            raise EmptyStackError("peek at an empty stack")
        return self.top.item
