"""Exception hierarchy shared by every layer of the package."""


class UmkessError(Exception):
    """Base class. ``step`` is filled in by the session driver when known."""

    step = None


# -- field ------------------------------------------------------------------

class PrimeError(UmkessError, ValueError):
    pass


class TooSmall(PrimeError):
    pass


class NotPrime(PrimeError):
    pass


class NotSafePrime(PrimeError):
    pass


class MixedModulus(UmkessError, TypeError):
    pass


class ZeroInverse(UmkessError, ZeroDivisionError):
    pass


class DecodeError(UmkessError, ValueError):
    pass


class WrongLength(DecodeError):
    pass


class OutOfRange(DecodeError):
    pass


# -- polynomials ------------------------------------------------------------

class EmptyInput(UmkessError, ValueError):
    pass


class DuplicateAbscissa(UmkessError, ValueError):
    def __init__(self, x, message=None):
        self.x = x
        super().__init__(message or f"two interpolation points share x = {int(x)}")


class FieldExhausted(UmkessError, ValueError):
    pass


class SingularSystem(UmkessError, ArithmeticError):
    pass


# -- protocol ---------------------------------------------------------------

class ProtocolError(UmkessError):
    pass


class EmptyGroup(ProtocolError, ValueError):
    pass


class UnknownMember(ProtocolError, ValueError):
    pass


class InvalidGroupList(ProtocolError, ValueError):
    pass


class NotParticipating(ProtocolError):
    pass


class MissingChallenge(ProtocolError):
    def __init__(self, user, group_id=None):
        self.user = user
        self.group_id = group_id
        what = f"user {user}" if group_id is None else f"user {user}, group {group_id}"
        super().__init__(f"no challenge received from {what}")


class WrongBundleSize(ProtocolError):
    pass


class DuplicateGroupTag(DuplicateAbscissa, ProtocolError):
    """A user's polynomial cannot exist because two of its abscissae coincide.

    ``groups`` lists the colliding group ids. ``self_collision`` is set when
    the clash is between a group tag and the user's own index.
    """

    def __init__(self, user, tag, groups, self_collision=False):
        self.user = user
        self.tag = tag
        self.groups = tuple(groups)
        self.self_collision = self_collision
        if self_collision:
            msg = f"user {user}: tag of group {self.groups[0]} equals the user's own index {int(tag)}"
        else:
            ids = ", ".join(str(g) for g in self.groups)
            msg = f"user {user}: groups {ids} share tag {int(tag)}"
        super().__init__(tag, msg)


# -- simulation / attacks ---------------------------------------------------

class ScenarioError(UmkessError, ValueError):
    """The adversary script or scenario is ill-formed (e.g. tampers a reliable channel)."""


class TranscriptMismatch(UmkessError):
    pass


class PreconditionUnmet(UmkessError, ValueError):
    pass


class ReportedInsecureBehaviorAbsent(UmkessError):
    """An attack that should succeed did not; treated as a regression signal."""
