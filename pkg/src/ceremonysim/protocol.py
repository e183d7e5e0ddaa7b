"""Simulated E2EE meeting sessions: lifecycle, voice ceremony, verification.

A session is a single-owner state machine driven by an explicit virtual
clock. The ceremony gates chat and screen-share events: they can only be
logged after every participant accepted the announced security code.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

from .cepstral import CepstralParams, extract_mcep, mcd_frames
from .codes import IdentityKey, SecurityCode, derive_security_code, format_code
from .errors import (
    AccessDeniedError,
    AnnouncementIntegrityError,
    CodeNotReadyError,
    LateJoinError,
    SpanError,
    StateError,
)
from .splicing import SnippetLibrary

_session_counter = itertools.count(1)


class MeetingState(enum.Enum):
    CREATED = "created"
    GATHERING = "gathering"
    CEREMONY_ANNOUNCED = "ceremony_announced"
    VERIFIED = "verified"
    REJECTED = "rejected"
    ACTIVE = "active"
    ENDED = "ended"


class MitigationKind(enum.Enum):
    NONE = "none"
    DEFERRED_CODE = "deferred"
    OOB_VERIFICATION = "oob"


@dataclass(frozen=True)
class Mitigation:
    """Ceremony hardening mode applied to a session."""

    kind: MitigationKind = MitigationKind.NONE
    max_ceremony_delay_s: int = 10

    def __post_init__(self):
        if self.max_ceremony_delay_s <= 0:
            raise ValueError("max_ceremony_delay_s must be positive")

    @classmethod
    def none(cls) -> "Mitigation":
        return cls(MitigationKind.NONE)

    @classmethod
    def deferred(cls, max_ceremony_delay_s: int = 10) -> "Mitigation":
        return cls(MitigationKind.DEFERRED_CODE, max_ceremony_delay_s)

    @classmethod
    def oob(cls) -> "Mitigation":
        return cls(MitigationKind.OOB_VERIFICATION)


class Decision(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"


class RejectReason(enum.Enum):
    CODE_MISMATCH = "CodeMismatch"
    VOICE_MISMATCH = "VoiceMismatch"
    TIMEOUT = "Timeout"
    OOB_MISMATCH = "OobMismatch"


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    reason: RejectReason | None = None
    max_digit_mcd: float | None = None

    def __post_init__(self):
        if self.decision is Decision.ACCEPT and self.reason is not None:
            raise ValueError("accepting verdicts carry no reason")
        if self.decision is Decision.REJECT and self.reason is None:
            raise ValueError("rejecting verdicts need a reason")

    def describe(self) -> str:
        if self.decision is Decision.ACCEPT:
            return "accept"
        if self.reason is RejectReason.VOICE_MISMATCH and self.max_digit_mcd is not None:
            return f"reject:VoiceMismatch({self.max_digit_mcd:.2f})"
        return f"reject:{self.reason.value}"


@dataclass(frozen=True, eq=False)
class CeremonyAnnouncement:
    """Audio of a host reading a code aloud, with ground-truth digit spans."""

    audio: object  # AudioClip
    spans: tuple
    announced_code: SecurityCode
    announcing_session: str

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))
        spelled = tuple(span.digit for span in self.spans)
        if spelled != self.announced_code.digits:
            raise AnnouncementIntegrityError(
                "span labels do not spell the announced code"
            )
        prev_end = 0
        for span in self.spans:
            if span.start_sample < prev_end:
                raise SpanError("announcement spans overlap or are out of order")
            if span.end_sample > len(self.audio):
                raise SpanError("announcement span beyond audio length")
            prev_end = span.end_sample


@dataclass
class VerifierProfile:
    """One participant's verification policy.

    ``trusted_reference`` holds snippets of the trusted host's voice from a
    prior legitimate capture; announced digits whose MCD against it exceeds
    ``mcd_threshold`` dB are rejected. ``oob_code`` is the code delivered
    over an out-of-band channel, compared when present.
    """

    participant_id: str
    trusted_reference: SnippetLibrary | None = None
    mcd_threshold: float = 4.0
    params: CepstralParams = field(default_factory=CepstralParams)
    oob_code: SecurityCode | None = None

    def __post_init__(self):
        if self.mcd_threshold <= 0:
            raise ValueError("mcd_threshold must be positive")


@dataclass(frozen=True)
class Event:
    time: int
    actor: str
    kind: str
    detail: str = ""

    def as_line(self) -> str:
        return f"{self.time},{self.actor},{self.kind},{self.detail}"


@dataclass(frozen=True)
class Chat:
    text: str


@dataclass(frozen=True)
class ScreenShare:
    label: str


class MeetingSession:
    """One simulated meeting. Mutate only through the methods below."""

    def __init__(
        self,
        session_id: str,
        claimed_host_name: str,
        host_key: IdentityKey,
        e2ee: bool,
        mitigation: Mitigation,
        invited,
    ):
        self.session_id = session_id
        self.claimed_host_name = claimed_host_name
        self.host_key = host_key
        self.e2ee = e2ee
        self.mitigation = mitigation
        self.invited = frozenset(invited)
        self.participants: set[str] = set()
        self.state = MeetingState.CREATED
        self.clock = 0
        self.events: list[Event] = []
        self.security_code: SecurityCode | None = None
        self.code_ready_time: int | None = None
        self.announcement: CeremonyAnnouncement | None = None
        self.verdicts: dict[str, Verdict] = {}

        self._log("created", claimed_host_name, f"e2ee={str(e2ee).lower()} mitigation={mitigation.kind.value}")
        if self.e2ee and mitigation.kind is not MitigationKind.DEFERRED_CODE:
            self._make_code_available()

    def _log(self, kind: str, actor: str, detail: str = "") -> None:
        self.events.append(Event(self.clock, actor, kind, detail))

    def _make_code_available(self) -> None:
        self.security_code = derive_security_code(self.host_key)
        self.code_ready_time = self.clock
        self._log("code_ready", "system", format_code(self.security_code))

    def advance_clock(self, seconds: int) -> None:
        if seconds < 0:
            raise ValueError("clock only moves forward")
        self.clock += seconds

    def log_invite(self, participant_id: str) -> None:
        self._log("invite", self.claimed_host_name, participant_id)

    def log_timeout(self) -> None:
        self._log("timeout", "system", "participants left before the ceremony")

    def join(self, participant_id: str) -> "MeetingSession":
        """Add a participant. E2EE sessions admit only invited ids."""
        if self.state not in (MeetingState.CREATED, MeetingState.GATHERING):
            raise LateJoinError(
                f"cannot join {self.session_id} in state {self.state.value}"
            )
        if self.e2ee and participant_id not in self.invited:
            raise AccessDeniedError(
                f"{participant_id} is not invited to E2EE session {self.session_id}"
            )
        self.participants.add(participant_id)
        self.state = MeetingState.GATHERING
        self._log("join", participant_id)
        if (
            self.e2ee
            and self.security_code is None
            and self.mitigation.kind is MitigationKind.DEFERRED_CODE
            and self.invited <= self.participants
        ):
            self._make_code_available()
        return self

    def announce_code(self, announcement: CeremonyAnnouncement, at_time: int) -> "MeetingSession":
        """Log the host's verbal code announcement and open verification."""
        if not self.e2ee:
            raise StateError("non-E2EE sessions have no authentication ceremony")
        if self.state is not MeetingState.GATHERING:
            raise StateError(f"cannot announce in state {self.state.value}")
        if self.security_code is None:
            raise CodeNotReadyError("security code has not been generated yet")
        if announcement.announcing_session != self.session_id:
            raise AnnouncementIntegrityError(
                "announcement was built for a different session"
            )
        if announcement.announced_code != self.security_code:
            raise AnnouncementIntegrityError(
                "announced digits do not spell this session's security code"
            )
        if at_time < self.clock:
            raise ValueError("announcement time precedes the session clock")
        self.clock = at_time
        self.announcement = announcement
        self.state = MeetingState.CEREMONY_ANNOUNCED
        self._log("announce", self.claimed_host_name, format_code(announcement.announced_code))
        return self

    def verify_ceremony(self, verifier: VerifierProfile) -> Verdict:
        """Run one participant's checks against the logged announcement.

        Checks, in order: the announced digits against the code this
        participant's client derives from the session host key; each digit's
        voice against the trusted reference (when present); the announced
        code against the out-of-band code (when present). Once every
        participant has a verdict the session becomes Verified or Rejected.
        """
        if self.state is not MeetingState.CEREMONY_ANNOUNCED:
            raise StateError(f"cannot verify in state {self.state.value}")
        if verifier.participant_id not in self.participants:
            raise StateError(f"{verifier.participant_id} is not in the meeting")
        announcement = self.announcement
        verdict = None

        computed = derive_security_code(self.host_key)
        if announcement.announced_code != computed:
            verdict = Verdict(Decision.REJECT, RejectReason.CODE_MISMATCH)

        if verdict is None and verifier.trusted_reference is not None:
            worst = self._max_digit_mcd(announcement, verifier)
            if worst is not None and worst > verifier.mcd_threshold:
                verdict = Verdict(Decision.REJECT, RejectReason.VOICE_MISMATCH, worst)

        if verdict is None and verifier.oob_code is not None:
            if announcement.announced_code != verifier.oob_code:
                verdict = Verdict(Decision.REJECT, RejectReason.OOB_MISMATCH)

        if verdict is None:
            verdict = Verdict(Decision.ACCEPT)

        self.verdicts[verifier.participant_id] = verdict
        self._log("verdict", verifier.participant_id, verdict.describe())
        if set(self.verdicts) >= self.participants:
            if all(v.decision is Decision.ACCEPT for v in self.verdicts.values()):
                self.state = MeetingState.VERIFIED
                self._log("verified", "system")
            else:
                self.state = MeetingState.REJECTED
                self._log("rejected", "system")
        return verdict

    def _max_digit_mcd(self, announcement, verifier) -> float | None:
        """Largest per-digit MCD of the announcement against the reference.

        Reference and announcement may come from different captures, so each
        pair is compared over the shorter frame-count prefix. Digits missing
        from the reference cannot be checked and are skipped.
        """
        worst = None
        for span in announcement.spans:
            ref = verifier.trusted_reference.entries.get(span.digit)
            if ref is None:
                continue
            announced = extract_mcep(
                announcement.audio.slice(span.start_sample, span.end_sample),
                verifier.params,
            )
            reference = extract_mcep(ref.clip, verifier.params)
            n = min(len(announced), len(reference))
            value = mcd_frames(announced.prefix(n), reference.prefix(n))
            if worst is None or value > worst:
                worst = value
        return worst

    def post_ceremony_action(self, action, actor: str) -> "MeetingSession":
        """Log a chat or screen-share event; allowed only once Verified."""
        if self.state not in (MeetingState.VERIFIED, MeetingState.ACTIVE):
            raise StateError(
                f"chat/screen-share before verification (state {self.state.value})"
            )
        if isinstance(action, Chat):
            kind, detail = "chat", action.text
        elif isinstance(action, ScreenShare):
            kind, detail = "screen_share", action.label
        else:
            raise TypeError(f"unsupported action {action!r}")
        self.state = MeetingState.ACTIVE
        self._log(kind, actor, detail)
        return self

    def end(self) -> "MeetingSession":
        if self.state is MeetingState.ENDED:
            raise StateError("session already ended")
        self.state = MeetingState.ENDED
        self._log("ended", "system")
        return self

    def export_log(self) -> str:
        """Stable one-record-per-line export: ``time,actor,event_kind,detail``."""
        return "\n".join(event.as_line() for event in self.events)


def create_session(
    claimed_host_name: str,
    host_key: IdentityKey,
    e2ee: bool = True,
    mitigation: Mitigation | None = None,
    invited=(),
    session_id: str | None = None,
) -> MeetingSession:
    """Create a meeting session.

    Under the baseline (and OOB) mitigation the security code of an E2EE
    session is derived immediately at creation, before anyone joins; under
    deferred-code generation it appears only once all invited participants
    have joined.
    """
    if session_id is None:
        session_id = f"session-{next(_session_counter)}"
    return MeetingSession(
        session_id=session_id,
        claimed_host_name=claimed_host_name,
        host_key=host_key,
        e2ee=e2ee,
        mitigation=mitigation or Mitigation.none(),
        invited=invited,
    )
