"""Exception types shared across the simulator."""


class CeremonySimError(Exception):
    """Base class for all simulator errors."""


class KeyFormatError(CeremonySimError):
    """Identity key bytes have the wrong length."""


class CodeParseError(CeremonySimError):
    """Textual security code is malformed."""


class IoError(CeremonySimError):
    """File could not be read or written."""


class WavFormatError(CeremonySimError):
    """WAV file is not canonical PCM16 mono."""


class RateMismatchError(CeremonySimError):
    """Clips with different sample rates were combined."""


class EmptyInputError(CeremonySimError):
    """Operation requires a nonempty input."""


class SegmentationCountError(CeremonySimError):
    """Segmentation found a different number of utterances than expected."""

    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"found {found} utterances, expected {expected}")


class NoUtterancesError(CeremonySimError):
    """Input contains no detectable voice activity."""


class LabelCountError(CeremonySimError):
    """Clip count does not match the code length."""


class SpeakerMixError(CeremonySimError):
    """Snippets from different speakers were mixed into one library."""


class MissingDigitError(CeremonySimError):
    """A required digit is absent from the snippet library."""

    def __init__(self, digit):
        self.digit = digit
        super().__init__(f"MissingDigit({digit})")


class SpanError(CeremonySimError):
    """Labeled span lies outside the clip or is inverted."""


class TooShortError(CeremonySimError):
    """Clip is shorter than one analysis frame."""


class AlignmentError(CeremonySimError):
    """Cepstral frame sequences cannot be compared."""


class PairingError(CeremonySimError):
    """A spliced digit span has no matching source span."""

    def __init__(self, digit):
        self.digit = digit
        super().__init__(f"no source span for digit {digit}")


class LateJoinError(CeremonySimError):
    """Participant tried to join after the ceremony started."""


class AccessDeniedError(CeremonySimError):
    """Uninvited participant tried to join an E2EE session."""


class AnnouncementIntegrityError(CeremonySimError):
    """Announcement audio, labels, and code are internally inconsistent."""


class CodeNotReadyError(CeremonySimError):
    """Security code has not been generated yet."""


class StateError(CeremonySimError):
    """Operation invoked in a session state that forbids it."""


class CapabilityError(CeremonySimError):
    """Attacker attempted an action outside its threat model."""


class EmptyLibraryError(CeremonySimError):
    """Attacker has no captured snippets to splice from."""


class ConfigError(CeremonySimError):
    """Scenario configuration file is malformed."""
