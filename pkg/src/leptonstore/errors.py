"""Exception hierarchy shared by every subpackage."""


class LeptonStoreError(Exception):
    pass


# -- ingest -----------------------------------------------------------------

class UnsupportedFrame(LeptonStoreError):
    """Progressive, arithmetic-coded, 12-bit or otherwise non-baseline input."""


class MalformedStream(LeptonStoreError):
    """Bad marker structure, Huffman decode failure or truncated scan."""


class InvalidImage(LeptonStoreError):
    pass


class MissingHeaderBlob(LeptonStoreError):
    pass


class FormatVersionMismatch(LeptonStoreError):
    pass


class CorruptStream(LeptonStoreError):
    pass


class ChecksumMismatch(CorruptStream):
    pass


# -- codec --------------------------------------------------------------------

class CoefficientRange(UnsupportedFrame):
    """A value is too large for the 11-position exponent code."""


class FieldOutOfRange(LeptonStoreError):
    pass


class TableMismatch(LeptonStoreError):
    pass


class Overflow(LeptonStoreError):
    """Bounded encode ran out of ways in at least one set."""

    def __init__(self, records):
        self.records = list(records)
        first = self.records[0] if self.records else None
        msg = f"{len(self.records)} overflow record(s)"
        if first is not None:
            msg += f", first: model={first.model} index={first.index} set={first.set_index}"
        super().__init__(msg)


# -- model store / analysis -------------------------------------------------

class DegenerateProfile(LeptonStoreError):
    pass


class IndivisibleDepth(LeptonStoreError):
    pass


class InvariantViolation(LeptonStoreError):
    pass


class EmptyCorpus(LeptonStoreError):
    pass


class Unsatisfiable(LeptonStoreError):
    pass
