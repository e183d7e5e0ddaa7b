"""Desk-scale simulator of group-E2EE ceremony authentication and
digit-splicing session-injection attacks."""

from .audio import (
    AudioClip,
    ChannelKind,
    ChannelModel,
    apply_channel,
    concat_clips,
    read_wav,
    rms,
    write_wav,
)
from .cepstral import (
    CepstralFrames,
    CepstralParams,
    extract_mcep,
    mcd_frames,
    mcd_spliced_vs_original,
)
from .codes import (
    IdentityKey,
    SecurityCode,
    derive_security_code,
    digit_multiset,
    format_code,
    has_all_digits,
    parse_code,
)
from .harness import (
    AttackerKind,
    AttackerModel,
    AttackOutcome,
    CloudRecording,
    OobChannel,
    ScenarioConfig,
    execute_attack,
    inject_session,
    load_scenario,
    observe_ceremony,
    overhear_conversation,
    raid_cloud_recordings,
    run_mitigation_matrix,
)
from .protocol import (
    CeremonyAnnouncement,
    Chat,
    Decision,
    MeetingSession,
    MeetingState,
    Mitigation,
    MitigationKind,
    RejectReason,
    ScreenShare,
    Verdict,
    VerifierProfile,
    create_session,
)
from .reporting import ReportRow, emit_plot_data, run_experiment
from .splicing import (
    DigitSnippet,
    LabeledSpan,
    Provenance,
    SegmentationParams,
    SnippetLibrary,
    build_library,
    detect_voiced_spans,
    harvest_labeled_recording,
    label_snippets,
    load_fsdd_corpus,
    read_span_file,
    segment_utterances,
    splice_digit_sequence,
    synthesize_code_audio,
    write_span_file,
)

__version__ = "0.1.0"
