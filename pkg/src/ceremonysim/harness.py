"""End-to-end attack scenarios: capture, session injection, mitigation runs.

A scenario pits an attacker (malicious participant or malicious server)
against a victim host drawn from a digit corpus, injects a meeting that
claims the victim's name, forges the ceremony announcement by splicing the
victim's captured digit snippets, and records every participant's verdict.
"""

from __future__ import annotations

import configparser
import enum
import hashlib
import itertools
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .audio import AudioClip, ChannelModel, apply_channel
from .cepstral import CepstralParams, mcd_spliced_vs_original
from .codes import (
    IdentityKey,
    derive_security_code,
    format_code,
    has_all_digits,
)
from .errors import (
    CapabilityError,
    ConfigError,
    EmptyLibraryError,
    IoError,
    MissingDigitError,
)
from .protocol import (
    CeremonyAnnouncement,
    Chat,
    Decision,
    MeetingSession,
    Mitigation,
    MitigationKind,
    RejectReason,
    ScreenShare,
    Verdict,
    VerifierProfile,
    create_session,
)
from .splicing import (
    DigitSnippet,
    LabeledSpan,
    Provenance,
    SegmentationParams,
    SnippetLibrary,
    build_library,
    harvest_labeled_recording,
    load_fsdd_corpus,
    splice_digit_sequence,
    synthesize_code_audio,
)


class AttackerKind(enum.Enum):
    MALICIOUS_PARTICIPANT = "participant"
    MALICIOUS_SERVER = "server"


@dataclass
class AttackerModel:
    """Attacker capabilities, captured material, and splicing cost."""

    kind: AttackerKind
    capture_channel: ChannelModel
    library: SnippetLibrary | None = None
    prep_time_s: int = 30
    attacker_id: str = "attacker"
    own_key: IdentityKey | None = None
    captures: list = field(default_factory=list)  # (clip, spans) pairs


@dataclass(frozen=True, eq=False)
class CloudRecording:
    """One stored meeting recording with labeled digit spans."""

    clip: AudioClip
    spans: tuple
    speaker_id: str
    session_id: str


@dataclass(frozen=True)
class OobChannel:
    """Trusted name-to-key directory delivering codes out of band."""

    binding: dict

    def code_for(self, claimed_host_name: str) -> SecurityCode:
        return derive_security_code(self.binding[claimed_host_name])


def observe_ceremony(
    attacker: AttackerModel,
    session: MeetingSession,
    announcement: CeremonyAnnouncement,
) -> AttackerModel:
    """Capture the announced digits from inside a joined E2EE meeting.

    Applies the attacker's capture channel to the announcement audio once,
    cuts it along the announcement's spans, and folds the labeled snippets
    into the attacker's library (earliest capture per digit wins).
    """
    if attacker.kind is not AttackerKind.MALICIOUS_PARTICIPANT:
        raise CapabilityError("only a malicious participant can record a ceremony")
    if not session.e2ee:
        raise CapabilityError("participant attacker captures only from E2EE meetings")
    if attacker.attacker_id not in session.participants:
        raise CapabilityError(
            f"{attacker.attacker_id} has not joined {session.session_id}"
        )
    capture = apply_channel(announcement.audio, attacker.capture_channel)
    spans = _rescale_spans(
        announcement.spans, announcement.audio.sample_rate, capture
    )
    snippets = [
        DigitSnippet(
            span.digit,
            capture.slice(span.start_sample, span.end_sample),
            session.claimed_host_name,
            Provenance.CEREMONY_CAPTURE,
            session.session_id,
        )
        for span in spans
    ]
    _merge_into_library(attacker, snippets)
    attacker.captures.append((capture, tuple(spans)))
    return attacker


def raid_cloud_recordings(attacker: AttackerModel, store) -> AttackerModel:
    """Harvest labeled digit snippets from stored non-E2EE meeting recordings."""
    if attacker.kind is not AttackerKind.MALICIOUS_SERVER:
        raise CapabilityError("only a malicious server can read the cloud store")
    for recording in store:
        snippets = harvest_labeled_recording(
            recording.clip,
            recording.spans,
            recording.speaker_id,
            recording.session_id,
        )
        _merge_into_library(attacker, snippets)
        attacker.captures.append((recording.clip, tuple(recording.spans)))
    return attacker


def overhear_conversation(
    attacker: AttackerModel,
    clip: AudioClip,
    spans,
    speaker_id: str,
    session_id: str = "",
) -> AttackerModel:
    """Collect digits spoken in a live non-E2EE meeting the server infiltrated.

    Modeled like cloud harvesting with labeled spans supplied by the
    scenario, but recorded with conversation-capture provenance.
    """
    if attacker.kind is not AttackerKind.MALICIOUS_SERVER:
        raise CapabilityError("only a malicious server can infiltrate default meetings")
    snippets = [
        DigitSnippet(
            span.digit,
            clip.slice(span.start_sample, span.end_sample),
            speaker_id,
            Provenance.CONVERSATION_CAPTURE,
            session_id,
        )
        for span in spans
    ]
    _merge_into_library(attacker, snippets)
    attacker.captures.append((clip, tuple(spans)))
    return attacker


def _merge_into_library(attacker: AttackerModel, snippets) -> None:
    if attacker.library is None:
        attacker.library = build_library(snippets)
    else:
        attacker.library = attacker.library.merged(snippets)


def _rescale_spans(spans, source_rate: int, capture: AudioClip):
    if capture.sample_rate == source_rate:
        return list(spans)
    ratio = capture.sample_rate / source_rate
    out = []
    for span in spans:
        start = int(round(span.start_sample * ratio))
        end = min(int(round(span.end_sample * ratio)), len(capture))
        out.append(LabeledSpan(start, end, span.digit))
    return out


def inject_session(
    attacker: AttackerModel,
    victim_host_name: str,
    invited_participants,
    mitigation: Mitigation,
    session_id: str = "injected-session",
) -> MeetingSession:
    """Create an E2EE meeting that falsely claims the victim as host.

    The session's real host key is the attacker's own, so its security code
    is the attacker's, not the victim's. Invitations model always-successful
    social engineering.
    """
    if attacker.library is None or not attacker.library.entries:
        raise EmptyLibraryError("attacker has captured no digit snippets")
    host_key = attacker.own_key or IdentityKey(os.urandom(32))
    session = create_session(
        claimed_host_name=victim_host_name,
        host_key=host_key,
        e2ee=True,
        mitigation=mitigation,
        invited=invited_participants,
        session_id=session_id,
    )
    for participant in invited_participants:
        session.log_invite(participant)
    return session


# --- scenario configuration ---------------------------------------------

_CONFIG_SCHEMA = {
    "victim": {"speaker", "name", "key_hex"},
    "attacker": {
        "kind",
        "channel",
        "phone_rate",
        "phone_snr_db",
        "prep_time_s",
        "seed",
        "key_hex",
        "own_voice_speaker",
        "drop_digits",
    },
    "mitigation": {"mode", "max_ceremony_delay_s"},
    "verifier": {"participants", "mcd_threshold", "use_reference"},
    "audio": {
        "gap_ms",
        "frame_ms",
        "hop_ms",
        "threshold_ratio",
        "min_gap_ms",
        "min_utterance_ms",
    },
    "corpus": {"dir", "naming", "accent_label"},
}


@dataclass(frozen=True)
class ScenarioConfig:
    """One attack scenario; defaults mirror the design-decision defaults."""

    victim_speaker: str = ""
    victim_name: str = "victim"
    victim_key_hex: str = ""
    attacker_kind: AttackerKind = AttackerKind.MALICIOUS_PARTICIPANT
    channel: str = "lossless"
    phone_rate: int = 8000
    phone_snr_db: float = 30.0
    prep_time_s: int = 30
    attacker_key_hex: str = ""
    own_voice_speaker: str = ""
    drop_digits: tuple[int, ...] = ()
    mitigation_mode: str = "none"
    max_ceremony_delay_s: int = 10
    participants: tuple[str, ...] = ("p1", "p2")
    mcd_threshold: float = 4.0
    use_reference: bool = True
    gap_ms: float = 150.0
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    corpus_dir: str = ""
    accent_label: str = "English"
    seed: int = 0

    def mitigation(self) -> Mitigation:
        if self.mitigation_mode == "none":
            return Mitigation.none()
        if self.mitigation_mode == "deferred":
            return Mitigation.deferred(self.max_ceremony_delay_s)
        if self.mitigation_mode == "oob":
            return Mitigation.oob()
        raise ConfigError(f"unknown mitigation mode {self.mitigation_mode!r}")

    def channel_model(self) -> ChannelModel:
        if self.channel == "lossless":
            return ChannelModel.lossless()
        if self.channel == "phone":
            return ChannelModel.phone(
                self.phone_rate,
                self.phone_snr_db,
                seed=subseed(self.seed, "channel-noise"),
            )
        raise ConfigError(f"unknown channel {self.channel!r}")


def load_scenario(path) -> ScenarioConfig:
    """Parse a scenario config file; unknown sections or keys are rejected."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    for section in parser.sections():
        if section not in _CONFIG_SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in parser[section]:
            if key not in _CONFIG_SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")

    def get(section, key, fallback):
        return parser.get(section, key, fallback=fallback)

    try:
        kind = AttackerKind(get("attacker", "kind", "participant"))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    channel = get("attacker", "channel", "lossless")
    if channel not in ("lossless", "phone"):
        raise ConfigError(f"{path}: unknown channel {channel!r}")
    mode = get("mitigation", "mode", "none")
    if mode not in ("none", "deferred", "oob"):
        raise ConfigError(f"{path}: unknown mitigation mode {mode!r}")
    naming = get("corpus", "naming", "fsdd")
    if naming != "fsdd":
        raise ConfigError(f"{path}: unsupported corpus naming {naming!r}")

    drop_raw = get("attacker", "drop_digits", "")
    drop_digits = tuple(int(p) for p in drop_raw.replace(",", " ").split()) if drop_raw else ()
    participants_raw = get("verifier", "participants", "p1,p2")
    participants = tuple(p.strip() for p in participants_raw.split(",") if p.strip())
    if not participants:
        raise ConfigError(f"{path}: at least one verifier participant is required")

    try:
        segmentation = SegmentationParams(
            frame_ms=float(get("audio", "frame_ms", 25.0)),
            hop_ms=float(get("audio", "hop_ms", 10.0)),
            threshold_ratio=float(get("audio", "threshold_ratio", 0.1)),
            min_gap_ms=float(get("audio", "min_gap_ms", 100.0)),
            min_utterance_ms=float(get("audio", "min_utterance_ms", 80.0)),
        )
        return ScenarioConfig(
            victim_speaker=get("victim", "speaker", ""),
            victim_name=get("victim", "name", "victim"),
            victim_key_hex=get("victim", "key_hex", ""),
            attacker_kind=kind,
            channel=channel,
            phone_rate=int(get("attacker", "phone_rate", 8000)),
            phone_snr_db=float(get("attacker", "phone_snr_db", 30.0)),
            prep_time_s=int(get("attacker", "prep_time_s", 30)),
            attacker_key_hex=get("attacker", "key_hex", ""),
            own_voice_speaker=get("attacker", "own_voice_speaker", ""),
            drop_digits=drop_digits,
            mitigation_mode=mode,
            max_ceremony_delay_s=int(get("mitigation", "max_ceremony_delay_s", 10)),
            participants=participants,
            mcd_threshold=float(get("verifier", "mcd_threshold", 4.0)),
            use_reference=parser.getboolean("verifier", "use_reference", fallback=True),
            gap_ms=float(get("audio", "gap_ms", 150.0)),
            segmentation=segmentation,
            corpus_dir=get("corpus", "dir", ""),
            accent_label=get("corpus", "accent_label", "English"),
            seed=int(get("attacker", "seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# --- deterministic randomness --------------------------------------------

def subseed(master_seed: int, label: str) -> int:
    """Stable sub-seed derived from a master seed and a purpose label."""
    digest = hashlib.sha256(f"{label}|{master_seed}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def covering_identity_key(master_seed: int, label: str) -> IdentityKey:
    """Deterministic key whose derived code contains all ten digits.

    Scenario defaults assume the announced code covers the whole digit
    inventory (true for ~86% of random codes); candidate keys are drawn
    from labeled sub-seeds until one qualifies. Pass an explicit key via
    the scenario config to model the incomplete-coverage failure path.
    """
    for attempt in itertools.count():
        rng = np.random.default_rng(subseed(master_seed, f"{label}:{attempt}"))
        key = IdentityKey(rng.bytes(32))
        if has_all_digits(derive_security_code(key)):
            return key
    raise AssertionError("unreachable")


# --- outcome --------------------------------------------------------------

@dataclass(frozen=True)
class AttackOutcome:
    """Result record of one executed scenario."""

    success: bool
    failure_reason: str | None
    speaker_id: str
    channel: str
    original_code: str
    injected_code: str
    mean_mcd: float | None
    per_digit_mcd: tuple[float, ...]
    per_participant_verdicts: dict[str, str]
    timeline: tuple[str, ...]

    def to_record(self) -> str:
        """One-line JSON record with a stable field order."""
        payload = {
            "success": self.success,
            "failure_reason": self.failure_reason,
            "speaker_id": self.speaker_id,
            "channel": self.channel,
            "original_code": self.original_code,
            "injected_code": self.injected_code,
            "mean_mcd": self.mean_mcd,
            "per_digit_mcd": list(self.per_digit_mcd),
            "per_participant_verdicts": {
                pid: self.per_participant_verdicts[pid]
                for pid in sorted(self.per_participant_verdicts)
            },
            "timeline": list(self.timeline),
        }
        return json.dumps(payload, separators=(", ", ": "))


def _failure_from_verdicts(verdicts: dict[str, Verdict]) -> str | None:
    for verdict in verdicts.values():
        if verdict.decision is Decision.REJECT:
            return verdict.reason.value
    return None


# --- scenario execution ----------------------------------------------------

def execute_attack(scenario: ScenarioConfig, corpus=None) -> AttackOutcome:
    """Run one full scenario: capture, inject, forge, announce, verify.

    ``corpus`` maps speaker ids to their digit snippet libraries; when
    omitted it is loaded from the scenario's corpus directory.
    """
    if corpus is None:
        corpus = load_fsdd_corpus(scenario.corpus_dir)
    if scenario.victim_speaker not in corpus:
        raise ConfigError(f"speaker {scenario.victim_speaker!r} not in corpus")
    victim_voice = corpus[scenario.victim_speaker]

    if scenario.victim_key_hex:
        victim_key = IdentityKey.from_hex(scenario.victim_key_hex)
    else:
        victim_key = covering_identity_key(
            scenario.seed, f"victim-key:{scenario.victim_speaker}"
        )
    victim_code = derive_security_code(victim_key)

    attacker = AttackerModel(
        kind=scenario.attacker_kind,
        capture_channel=scenario.channel_model(),
        prep_time_s=scenario.prep_time_s,
        own_key=(
            IdentityKey.from_hex(scenario.attacker_key_hex)
            if scenario.attacker_key_hex
            else covering_identity_key(scenario.seed, "attacker-key")
        ),
    )

    # phase 1: capture the victim's digits
    try:
        _capture_phase(scenario, attacker, victim_voice, victim_key, victim_code)
    except MissingDigitError as exc:
        return _failed_outcome(scenario, victim_code, None, f"MissingDigit({exc.digit})")
    capture_clip, capture_spans = attacker.captures[0]
    reference = attacker.library
    if scenario.drop_digits:
        attacker.library = attacker.library.without_digits(scenario.drop_digits)

    # phase 2: inject a session claiming the victim's name
    mitigation = scenario.mitigation()
    injected = inject_session(
        attacker, scenario.victim_name, scenario.participants, mitigation
    )
    injected_code_display = format_code(derive_security_code(attacker.own_key))

    announce_voice = attacker.library
    if scenario.own_voice_speaker:
        announce_voice = corpus[scenario.own_voice_speaker]

    deferred = mitigation.kind is MitigationKind.DEFERRED_CODE
    if deferred:
        # code exists only once everyone is in; splicing starts then
        for pid in scenario.participants:
            injected.join(pid)
    else:
        # code is ready at creation: the attacker splices before anyone joins
        pass

    injected.advance_clock(attacker.prep_time_s)
    try:
        forged_audio, forged_spans = synthesize_code_audio(
            announce_voice, injected.security_code, scenario.gap_ms
        )
    except MissingDigitError as exc:
        injected.end()
        return _failed_outcome(
            scenario,
            victim_code,
            injected,
            f"MissingDigit({exc.digit})",
            injected_code_display,
        )

    mcd_per_digit, mcd_mean = mcd_spliced_vs_original(
        capture_clip, capture_spans, forged_audio, forged_spans, CepstralParams()
    )

    if deferred and attacker.prep_time_s > mitigation.max_ceremony_delay_s:
        injected.log_timeout()
        verdicts = {
            pid: Verdict(Decision.REJECT, RejectReason.TIMEOUT)
            for pid in scenario.participants
        }
        injected.end()
        return AttackOutcome(
            success=False,
            failure_reason="Timeout",
            speaker_id=scenario.victim_speaker,
            channel=scenario.channel,
            original_code=format_code(victim_code),
            injected_code=injected_code_display,
            mean_mcd=mcd_mean,
            per_digit_mcd=tuple(mcd_per_digit),
            per_participant_verdicts={p: v.describe() for p, v in verdicts.items()},
            timeline=tuple(injected.export_log().splitlines()),
        )

    if not deferred:
        for pid in scenario.participants:
            injected.join(pid)

    announcement = CeremonyAnnouncement(
        forged_audio, forged_spans, injected.security_code, injected.session_id
    )
    injected.announce_code(announcement, at_time=injected.clock)

    oob = OobChannel({scenario.victim_name: victim_key})
    verdicts: dict[str, Verdict] = {}
    for pid in scenario.participants:
        verifier = VerifierProfile(
            participant_id=pid,
            trusted_reference=reference if scenario.use_reference else None,
            mcd_threshold=scenario.mcd_threshold,
            oob_code=(
                oob.code_for(injected.claimed_host_name)
                if mitigation.kind is MitigationKind.OOB_VERIFICATION
                else None
            ),
        )
        verdicts[pid] = injected.verify_ceremony(verifier)

    success = all(v.decision is Decision.ACCEPT for v in verdicts.values())
    if success:
        injected.post_ceremony_action(Chat("zoombombing message"), injected.claimed_host_name)
        injected.post_ceremony_action(ScreenShare("zoombombing slide"), injected.claimed_host_name)
    injected.end()

    return AttackOutcome(
        success=success,
        failure_reason=_failure_from_verdicts(verdicts),
        speaker_id=scenario.victim_speaker,
        channel=scenario.channel,
        original_code=format_code(victim_code),
        injected_code=injected_code_display,
        mean_mcd=mcd_mean,
        per_digit_mcd=tuple(mcd_per_digit),
        per_participant_verdicts={p: v.describe() for p, v in verdicts.items()},
        timeline=tuple(injected.export_log().splitlines()),
    )


def _capture_phase(scenario, attacker, victim_voice, victim_key, victim_code):
    """Steal the victim's digit snippets per the attacker's capabilities."""
    if attacker.kind is AttackerKind.MALICIOUS_PARTICIPANT:
        invited = (attacker.attacker_id,) + tuple(scenario.participants)
        legit = create_session(
            claimed_host_name=scenario.victim_name,
            host_key=victim_key,
            e2ee=True,
            mitigation=Mitigation.none(),
            invited=invited,
            session_id="victim-session",
        )
        legit.join(attacker.attacker_id)
        for pid in scenario.participants:
            legit.join(pid)
        audio, spans = synthesize_code_audio(victim_voice, victim_code, scenario.gap_ms)
        announcement = CeremonyAnnouncement(audio, spans, victim_code, legit.session_id)
        legit.announce_code(announcement, at_time=legit.clock)
        observe_ceremony(attacker, legit, announcement)
    else:
        # the host's old default meeting, auto-recorded to the cloud, where
        # digits 0..9 all came up in conversation
        audio, spans = splice_digit_sequence(victim_voice, range(10), scenario.gap_ms)
        store = [
            CloudRecording(audio, tuple(spans), scenario.victim_name, "victim-default-meeting")
        ]
        raid_cloud_recordings(attacker, store)


def _failed_outcome(
    scenario,
    victim_code,
    injected,
    reason,
    injected_code_display="",
) -> AttackOutcome:
    timeline = tuple(injected.export_log().splitlines()) if injected else ()
    return AttackOutcome(
        success=False,
        failure_reason=reason,
        speaker_id=scenario.victim_speaker,
        channel=scenario.channel,
        original_code=format_code(victim_code),
        injected_code=injected_code_display,
        mean_mcd=None,
        per_digit_mcd=(),
        per_participant_verdicts={},
        timeline=timeline,
    )


def run_mitigation_matrix(base_scenario: ScenarioConfig, corpus=None) -> list[AttackOutcome]:
    """Execute the same scenario under no mitigation, deferred code, and OOB.

    All three runs share the base scenario's seeds; outcomes come back in
    that fixed order.
    """
    if corpus is None:
        corpus = load_fsdd_corpus(base_scenario.corpus_dir)
    outcomes = []
    for mode in ("none", "deferred", "oob"):
        scenario = replace(base_scenario, mitigation_mode=mode)
        outcomes.append(execute_attack(scenario, corpus))
    return outcomes
