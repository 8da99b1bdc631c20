"""Exception hierarchy shared by every tubal module."""


class TubalError(Exception):
    """Base class for all errors raised by this package."""


class DimMismatch(TubalError, ValueError):
    pass


class SymmetryViolation(TubalError, ValueError):
    """A Fourier-domain tensor is not conjugate symmetric along mode 3."""


class RankOutOfRange(TubalError, ValueError):
    pass


class SingularSlice(TubalError, ArithmeticError):
    """An exact zero pivot was met while LU-factoring a Fourier slice."""


class SingularTensor(TubalError, ArithmeticError):
    pass


class SingularTriangular(TubalError, ArithmeticError):
    pass


class NotSymmetric(TubalError, ValueError):
    pass


class NegativeSpectrum(TubalError, ValueError):
    pass


class IllConditionedGram(TubalError, ArithmeticError):
    """The Gram tensor Y^T*Y is too close to singular to invert safely.

    Usually means the sketch overshot the numerical rank of the data; a
    smaller block size avoids it.
    """


class RankCapExceeded(TubalError, RuntimeError):
    """A fixed-precision loop hit ``max_rank`` before reaching the tolerance.

    The partial factorization is kept on ``self.factors``.
    """

    def __init__(self, message, factors=None):
        super().__init__(message)
        self.factors = factors


class IdenticalInputs(TubalError, ValueError):
    """PSNR is infinite because the two inputs coincide."""


class ZeroReference(TubalError, ValueError):
    pass
