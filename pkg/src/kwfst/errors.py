"""Exception types shared across the toolkit.

The CLI maps these onto its exit-code taxonomy: UsageError -> 1,
DataError -> 2, InternalError -> 3.
"""


class KwfstError(Exception):
    pass


class UsageError(KwfstError):
    """Bad command line or configuration usage."""


class DataError(KwfstError):
    """Invalid input data (files, lattices, inventories, documents)."""


class InventoryError(DataError):
    pass


class LatticeFormatError(DataError):
    pass


class NoPathError(KwfstError):
    """A machine has no accepting path."""


class InternalError(KwfstError):
    """An internal invariant was violated."""
